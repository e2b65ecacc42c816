//! HashTag vector codes.
//!
//! A systematic `(n, k)` code with sub-packetization `alpha` stores `alpha`
//! symbols per node. Parity node `k + i` holds, in row `j`, a linear
//! combination of the data symbols listed in row `j` of index array `P_i`:
//! the `k` canonical pairs `(j, 1..=k)` followed by a few "extra" pairs that
//! pull in symbols from other rows. Rows and nodes are 1-based throughout the
//! public API.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf::{FieldElem, FieldSpec};
use crate::linalg::GfMatrix;

/// One summand `coeff * x_{row,node}` of a parity equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub row: usize,
    pub node: usize,
    pub coeff: FieldElem,
}

impl Term {
    pub fn new(row: usize, node: usize, coeff: u16) -> Term {
        Term {
            row,
            node,
            coeff: FieldElem(coeff),
        }
    }
}

/// Index array of one parity together with its coefficients: `alpha` rows,
/// each starting with the canonical pairs `(j,1)..(j,k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexArray {
    pub rows: Vec<Vec<Term>>,
}

impl IndexArray {
    pub fn extras(&self, row: usize, k: usize) -> &[Term] {
        &self.rows[row - 1][k..]
    }
}

/// What a thick column of a generator matrix stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Systematic,
    /// Parity `index` (1-based) of an unsplit code.
    Parity { index: usize },
    /// Local parity split off base parity `source` for group `group`.
    Local { source: usize, group: usize },
    /// Base parity `source` kept intact by splitting.
    Global { source: usize },
}

impl NodeRole {
    pub fn name(&self) -> &'static str {
        match self {
            NodeRole::Systematic => "systematic",
            NodeRole::Parity { .. } => "parity",
            NodeRole::Local { .. } => "local",
            NodeRole::Global { .. } => "global",
        }
    }

    pub fn is_systematic(&self) -> bool {
        matches!(self, NodeRole::Systematic)
    }
}

/// Common view of a systematic vector code through its scalar generator matrix.
pub trait LinearCode {
    fn field(&self) -> &FieldSpec;
    /// Number of systematic nodes (also the quasi-dimension).
    fn data_nodes(&self) -> usize;
    fn node_count(&self) -> usize;
    fn alpha(&self) -> usize;
    /// `K x N` systematic generator, thick column `i` = columns `(i-1)α..iα`.
    fn generator_matrix(&self) -> GfMatrix;
    fn role(&self, node: usize) -> NodeRole;
    /// The HashTag code this code was derived from (itself when unsplit).
    fn base(&self) -> &CodeSpec;

    fn dimension(&self) -> usize {
        self.data_nodes() * self.alpha()
    }

    /// Scalar generator columns belonging to `node` (1-based).
    fn node_columns(&self, node: usize) -> Range<usize> {
        (node - 1) * self.alpha()..node * self.alpha()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    alpha: usize,
    field: FieldSpec,
    arrays: Vec<IndexArray>,
}

/// Systematic payload: `k` node columns of `alpha` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataBlock {
    alpha: usize,
    columns: Vec<Vec<FieldElem>>,
}

impl DataBlock {
    pub fn zeros(k: usize, alpha: usize) -> DataBlock {
        DataBlock {
            alpha,
            columns: vec![vec![FieldElem::ZERO; alpha]; k],
        }
    }

    pub fn from_columns(columns: Vec<Vec<FieldElem>>) -> Result<DataBlock> {
        let alpha = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != alpha) {
            return Err(Error::Parameter("data columns have unequal lengths".into()));
        }
        Ok(DataBlock { alpha, columns })
    }

    pub fn random<R: Rng>(field: &FieldSpec, k: usize, alpha: usize, rng: &mut R) -> DataBlock {
        let q = field.order() as u32;
        let columns = (0..k)
            .map(|_| (0..alpha).map(|_| FieldElem(rng.gen_range(0..q) as u16)).collect())
            .collect();
        DataBlock { alpha, columns }
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// `x_{row,node}`, 1-based.
    pub fn get(&self, row: usize, node: usize) -> FieldElem {
        self.columns[node - 1][row - 1]
    }

    pub fn set(&mut self, row: usize, node: usize, v: FieldElem) {
        self.columns[node - 1][row - 1] = v;
    }

    pub fn columns(&self) -> &[Vec<FieldElem>] {
        &self.columns
    }

    /// Node-major flattening, matching the row order of the generator matrix.
    pub fn flatten(&self) -> Vec<FieldElem> {
        self.columns.iter().flatten().copied().collect()
    }
}

/// All `n` node columns of an encoded stripe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    pub columns: Vec<Vec<FieldElem>>,
}

impl Codeword {
    /// Column of `node` (1-based).
    pub fn node(&self, node: usize) -> &[FieldElem] {
        &self.columns[node - 1]
    }

    pub fn flatten(&self) -> Vec<FieldElem> {
        self.columns.iter().flatten().copied().collect()
    }
}

/// Outcome of an MDS check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MdsVerdict {
    /// Every one of `checked` configurations passed.
    Ok { checked: usize },
    /// `subset` is a k-subset of nodes (1-based) that is not an information set.
    Witness { subset: Vec<usize> },
}

impl MdsVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, MdsVerdict::Ok { .. })
    }
}

impl CodeSpec {
    /// Builds a code from explicit index arrays, checking structure only
    /// (canonical pairs, valid and distinct extras, nonzero coefficients).
    /// Whether the result is MDS is left to [`verify_mds`].
    pub fn new(
        n: usize,
        k: usize,
        alpha: usize,
        field: FieldSpec,
        arrays: Vec<IndexArray>,
    ) -> Result<CodeSpec> {
        if k == 0 || n <= k {
            return Err(Error::Parameter(format!("need n > k >= 1, got n={n} k={k}")));
        }
        if alpha == 0 {
            return Err(Error::Parameter("alpha must be at least 1".into()));
        }
        let r = n - k;
        if arrays.len() != r {
            return Err(Error::Parameter(format!(
                "expected {r} index arrays, got {}",
                arrays.len()
            )));
        }
        for (p, arr) in arrays.iter().enumerate() {
            if arr.rows.len() != alpha {
                return Err(Error::Parameter(format!(
                    "index array P_{} has {} rows, expected {alpha}",
                    p + 1,
                    arr.rows.len()
                )));
            }
            for (j0, row) in arr.rows.iter().enumerate() {
                let j = j0 + 1;
                if row.len() < k {
                    return Err(Error::Parameter(format!(
                        "row {j} of P_{} has fewer than k={k} terms",
                        p + 1
                    )));
                }
                for (i, t) in row[..k].iter().enumerate() {
                    if t.row != j || t.node != i + 1 {
                        return Err(Error::Parameter(format!(
                            "row {j} of P_{}: position {} must be ({j},{}), found ({},{})",
                            p + 1,
                            i + 1,
                            i + 1,
                            t.row,
                            t.node
                        )));
                    }
                }
                for (pos, t) in row.iter().enumerate() {
                    if !field.contains(t.coeff) || t.coeff.is_zero() {
                        return Err(Error::Parameter(format!(
                            "row {j} of P_{}: coefficient {} is zero or outside the field",
                            p + 1,
                            t.coeff
                        )));
                    }
                    if t.row == 0 || t.row > alpha || t.node == 0 || t.node > k {
                        return Err(Error::Parameter(format!(
                            "row {j} of P_{}: pair ({},{}) out of range",
                            p + 1,
                            t.row,
                            t.node
                        )));
                    }
                    if row[..pos].iter().any(|u| u.row == t.row && u.node == t.node) {
                        return Err(Error::Parameter(format!(
                            "row {j} of P_{}: duplicate pair ({},{})",
                            p + 1,
                            t.row,
                            t.node
                        )));
                    }
                }
            }
        }
        Ok(CodeSpec {
            n,
            k,
            alpha,
            field,
            arrays,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn arrays(&self) -> &[IndexArray] {
        &self.arrays
    }

    /// Terms of parity `parity` (1-based), row `row` (1-based).
    pub fn terms(&self, parity: usize, row: usize) -> &[Term] {
        &self.arrays[parity - 1].rows[row - 1]
    }

    /// Rows (1-based, sorted) in which systematic `node` occurs as an extra pair
    /// of some parity.
    pub fn extra_rows_of(&self, node: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .arrays
            .iter()
            .flat_map(|arr| arr.rows.iter().enumerate())
            .filter(|(_, terms)| terms[self.k..].iter().any(|t| t.node == node))
            .map(|(j0, _)| j0 + 1)
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    pub fn encode(&self, data: &DataBlock) -> Result<Codeword> {
        if data.k() != self.k || data.alpha() != self.alpha {
            return Err(Error::Dimension {
                expected: format!("{} x {} data block", self.k, self.alpha),
                actual: format!("{} x {}", data.k(), data.alpha()),
            });
        }
        let mut columns = data.columns().to_vec();
        for arr in &self.arrays {
            let col = arr
                .rows
                .iter()
                .map(|terms| {
                    terms.iter().fold(FieldElem::ZERO, |acc, t| {
                        acc + self.field.mul(t.coeff, data.get(t.row, t.node))
                    })
                })
                .collect();
            columns.push(col);
        }
        Ok(Codeword { columns })
    }

    /// Writes the coefficients of parity `parity` into generator column block
    /// starting at `col0`, optionally keeping only terms whose node passes `keep`.
    pub(crate) fn fill_parity_columns(
        &self,
        g: &mut GfMatrix,
        parity: usize,
        col0: usize,
        keep: impl Fn(usize) -> bool,
    ) {
        for (j0, terms) in self.arrays[parity - 1].rows.iter().enumerate() {
            for t in terms.iter().filter(|t| keep(t.node)) {
                let row = (t.node - 1) * self.alpha + (t.row - 1);
                g.set(row, col0 + j0, t.coeff);
            }
        }
    }

    /// The (9,6), α=9 HashTag code over GF(32) with x^5+x^3+1, coefficients
    /// as published.
    pub fn builtin_ht_9_6_9() -> CodeSpec {
        let field = FieldSpec::gf32();
        let arrays = BUILTIN_9_6_9
            .iter()
            .map(|parity| IndexArray {
                rows: parity
                    .iter()
                    .enumerate()
                    .map(|(j0, row)| {
                        let mut terms: Vec<Term> = row
                            .canonical
                            .iter()
                            .enumerate()
                            .map(|(i, &c)| Term::new(j0 + 1, i + 1, c))
                            .collect();
                        terms.extend(row.extras.iter().map(|&(r, n, c)| Term::new(r, n, c)));
                        terms
                    })
                    .collect(),
            })
            .collect();
        CodeSpec::new(9, 6, 9, field, arrays).expect("builtin code is well formed")
    }
}

impl LinearCode for CodeSpec {
    fn field(&self) -> &FieldSpec {
        &self.field
    }

    fn data_nodes(&self) -> usize {
        self.k
    }

    fn node_count(&self) -> usize {
        self.n
    }

    fn alpha(&self) -> usize {
        self.alpha
    }

    fn generator_matrix(&self) -> GfMatrix {
        let kk = self.k * self.alpha;
        let mut g = GfMatrix::zeros(&self.field, kk, self.n * self.alpha);
        for i in 0..kk {
            g.set(i, i, FieldElem::ONE);
        }
        for p in 1..=self.r() {
            self.fill_parity_columns(&mut g, p, (self.k + p - 1) * self.alpha, |_| true);
        }
        g
    }

    fn role(&self, node: usize) -> NodeRole {
        if node <= self.k {
            NodeRole::Systematic
        } else {
            NodeRole::Parity {
                index: node - self.k,
            }
        }
    }

    fn base(&self) -> &CodeSpec {
        self
    }
}

struct BuiltinRow {
    canonical: [u16; 6],
    extras: &'static [(usize, usize, u16)],
}

const fn row(canonical: [u16; 6], extras: &'static [(usize, usize, u16)]) -> BuiltinRow {
    BuiltinRow { canonical, extras }
}

/// Coefficients of c_{j,7}, c_{j,8}, c_{j,9}; extras are (row, node, coeff).
const BUILTIN_9_6_9: [[BuiltinRow; 9]; 3] = [
    [
        row([7, 10, 18, 11, 17, 6], &[]),
        row([26, 17, 25, 27, 31, 4], &[]),
        row([22, 12, 27, 31, 31, 23], &[]),
        row([17, 9, 14, 4, 21, 25], &[]),
        row([20, 5, 5, 13, 11, 16], &[]),
        row([25, 16, 30, 28, 10, 24], &[]),
        row([20, 8, 21, 9, 3, 25], &[]),
        row([23, 4, 12, 16, 8, 17], &[]),
        row([2, 21, 8, 16, 7, 25], &[]),
    ],
    [
        row([8, 24, 21, 19, 6, 20], &[(4, 1, 8), (2, 4, 6)]),
        row([3, 12, 6, 3, 16, 10], &[(5, 1, 30), (1, 5, 24)]),
        row([23, 20, 30, 7, 16, 10], &[(6, 1, 21), (1, 6, 27)]),
        row([14, 7, 10, 14, 24, 20], &[(1, 2, 16), (5, 4, 31)]),
        row([25, 11, 29, 12, 20, 24], &[(2, 2, 15), (4, 5, 6)]),
        row([17, 27, 4, 21, 15, 11], &[(3, 2, 19), (4, 6, 21)]),
        row([19, 23, 16, 4, 14, 16], &[(1, 3, 9), (8, 4, 8)]),
        row([5, 26, 22, 30, 22, 21], &[(2, 3, 24), (7, 5, 26)]),
        row([10, 8, 10, 27, 28, 20], &[(3, 3, 16), (7, 6, 4)]),
    ],
    [
        row([20, 20, 30, 17, 12, 27], &[(7, 1, 28), (3, 4, 9)]),
        row([18, 10, 20, 21, 13, 7], &[(8, 1, 2), (3, 5, 6)]),
        row([31, 25, 12, 18, 15, 24], &[(9, 1, 31), (2, 6, 28)]),
        row([6, 16, 26, 4, 21, 27], &[(7, 2, 26), (6, 4, 8)]),
        row([7, 6, 26, 6, 15, 16], &[(8, 2, 28), (6, 5, 4)]),
        row([20, 20, 12, 20, 18, 26], &[(9, 2, 19), (5, 6, 30)]),
        row([26, 2, 6, 20, 17, 23], &[(4, 3, 8), (9, 4, 31)]),
        row([20, 15, 13, 20, 10, 24], &[(5, 3, 31), (9, 5, 9)]),
        row([6, 2, 31, 12, 16, 30], &[(6, 3, 20), (8, 6, 13)]),
    ],
];

/// Recovers the data from any set of node columns that forms an information
/// set. All supplied columns take part in the solve, so a corrupted column is
/// reported as an inconsistency rather than silently ignored.
pub fn decode<C: LinearCode + ?Sized>(
    code: &C,
    available: &BTreeMap<usize, Vec<FieldElem>>,
) -> Result<DataBlock> {
    let (k, alpha) = (code.data_nodes(), code.alpha());
    if available.len() < k {
        return Err(Error::InsufficientData {
            available: available.len(),
            required: k,
        });
    }
    for (&node, col) in available {
        if node == 0 || node > code.node_count() {
            return Err(Error::Parameter(format!("node {node} does not exist")));
        }
        if col.len() != alpha {
            return Err(Error::Dimension {
                expected: format!("{alpha} symbols for node {node}"),
                actual: col.len().to_string(),
            });
        }
    }
    let g = code.generator_matrix();
    let cols: Vec<usize> = available.keys().flat_map(|&n| code.node_columns(n)).collect();
    let system = g.select_columns(&cols).transpose();
    let rhs: Vec<FieldElem> = available.values().flatten().copied().collect();
    let x = system.solve(&rhs).map_err(|e| match e {
        Error::NoUniqueSolution { .. } => Error::Unrecoverable {
            nodes: available.keys().copied().collect(),
        },
        other => other,
    })?;
    DataBlock::from_columns(x.chunks(alpha).map(<[FieldElem]>::to_vec).collect())
}

/// Calls `f` with every `size`-subset of `0..n` in lexicographic order until
/// it returns `false`. Returns whether enumeration ran to completion.
pub(crate) fn for_each_subset(n: usize, size: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if size > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        let Some(i) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            return true;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Checks that every k-subset of nodes is an information set, i.e. that the
/// generator restricted to those thick columns has rank `K = kα`.
pub fn verify_mds(spec: &CodeSpec) -> MdsVerdict {
    let g = spec.generator_matrix();
    let (n, k, kk) = (spec.n, spec.k, spec.dimension());
    let mut checked = 0;
    let mut witness = None;
    for_each_subset(n, k, |subset| {
        checked += 1;
        let cols: Vec<usize> = subset.iter().flat_map(|&i| spec.node_columns(i + 1)).collect();
        if g.select_columns(&cols).rank() < kk {
            witness = Some(subset.iter().map(|i| i + 1).collect());
            return false;
        }
        true
    });
    match witness {
        Some(subset) => MdsVerdict::Witness { subset },
        None => MdsVerdict::Ok { checked },
    }
}

/// Checks that every square block submatrix of the parity part `P` (blocks
/// are α x α, one per systematic node and parity) is invertible. Agrees with
/// [`verify_mds`]: a failing choice of systematic blocks `S` and parity
/// blocks `T` corresponds to the k-subset `([k] \ S) ∪ T`, which is what the
/// witness reports. `checked` counts the empty choice (the systematic nodes).
pub fn verify_mds_blocks(spec: &CodeSpec) -> MdsVerdict {
    let g = spec.generator_matrix();
    let (k, r, alpha) = (spec.k, spec.r(), spec.alpha);
    let mut checked = 1;
    for s in 1..=k.min(r) {
        let mut witness = None;
        for_each_subset(k, s, |sys| {
            for_each_subset(r, s, |par| {
                checked += 1;
                let rows: Vec<usize> = sys
                    .iter()
                    .flat_map(|&i| i * alpha..(i + 1) * alpha)
                    .collect();
                let cols: Vec<usize> = par
                    .iter()
                    .flat_map(|&p| (k + p) * alpha..(k + p + 1) * alpha)
                    .collect();
                let block = g.select_rows(&rows).select_columns(&cols);
                if block.rank() < s * alpha {
                    let mut subset: Vec<usize> =
                        (1..=k).filter(|i| !sys.contains(&(i - 1))).collect();
                    subset.extend(par.iter().map(|p| k + p + 1));
                    witness = Some(subset);
                    return false;
                }
                true
            })
        });
        if let Some(subset) = witness {
            return MdsVerdict::Witness { subset };
        }
    }
    MdsVerdict::Ok { checked }
}

/// Extra index pairs for parities 2..=r, as `[parity-2][row-1] -> [(row, node)]`.
///
/// Systematic nodes are taken in groups of `r`. When `r^m | α`, each row index
/// is read as `m` base-`r` digits and group `g` is tied to digit `g mod m`
/// (most significant first): node `t` of a group owns the rows whose digit is
/// `t`, and parity `p` (counting from 2) gets, in each owned row, the node's
/// symbol from the row whose digit is the `(p-1)`-th other digit value. For
/// (9,6,9) this reproduces the built-in code's index arrays exactly. Without
/// that structure a cyclic row shift is used.
pub fn hashtag_extra_pairs(n: usize, k: usize, alpha: usize) -> Vec<Vec<Vec<(usize, usize)>>> {
    let r = n - k;
    let groups = k.div_ceil(r);
    let mut m = 0;
    if r > 1 {
        while alpha.is_multiple_of(r.pow(m + 1)) {
            m += 1;
        }
    }
    (1..r)
        .map(|p| {
            (0..alpha)
                .map(|rho| {
                    let mut extras = Vec::new();
                    for g in 0..groups {
                        let (t, target) = if m > 0 {
                            let pos = g as u32 % m;
                            let weight = r.pow(m - 1 - pos);
                            let t = (rho / weight) % r;
                            let others: Vec<usize> = (0..r).filter(|&d| d != t).collect();
                            let d = others[p - 1];
                            (t, rho - t * weight + d * weight)
                        } else {
                            if alpha == 1 {
                                continue;
                            }
                            let target = (rho + p) % alpha;
                            if target == rho {
                                continue;
                            }
                            ((rho + g) % r, target)
                        };
                        let node = g * r + t;
                        if node < k {
                            extras.push((target + 1, node + 1));
                        }
                    }
                    extras
                })
                .collect()
        })
        .collect()
}

/// Number of k-subsets that are not information sets, stopping early once
/// the count exceeds `limit`.
pub(crate) fn count_failing_subsets(spec: &CodeSpec, limit: usize) -> (usize, Vec<usize>) {
    let g = spec.generator_matrix();
    let mut failing = 0;
    let mut first = Vec::new();
    for_each_subset(spec.n, spec.k, |subset| {
        let cols: Vec<usize> = subset.iter().flat_map(|&i| spec.node_columns(i + 1)).collect();
        if g.select_columns(&cols).rank() < spec.dimension() {
            if failing == 0 {
                first = subset.iter().map(|i| i + 1).collect();
            }
            failing += 1;
        }
        failing <= limit
    });
    (failing, first)
}

/// Randomized search for an MDS HashTag code. Extra pairs are placed by
/// [`hashtag_extra_pairs`]; all coefficients are drawn uniformly from the
/// nonzero elements, then single coefficients are redrawn one at a time,
/// keeping a redraw whenever the number of non-information k-subsets does not
/// grow. Each evaluated candidate counts as one try. Reproducible from `seed`.
/// The result is MDS but is not guaranteed to reach the minimum repair
/// bandwidth.
pub fn generate_code(
    n: usize,
    k: usize,
    alpha: usize,
    field: &FieldSpec,
    seed: u64,
    max_tries: u64,
) -> Result<CodeSpec> {
    if k == 0 || n <= k || alpha == 0 {
        return Err(Error::Parameter(format!(
            "need n > k >= 1 and alpha >= 1, got ({n}, {k}, {alpha})"
        )));
    }
    if max_tries == 0 {
        return Err(Error::Parameter("max_tries must be positive".into()));
    }
    let r = n - k;
    let extras = hashtag_extra_pairs(n, k, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = field.order() as u32;
    let draw = |rng: &mut ChaCha8Rng| FieldElem(rng.gen_range(1..q) as u16);

    let arrays: Vec<IndexArray> = (0..r)
        .map(|p| IndexArray {
            rows: (0..alpha)
                .map(|j0| {
                    let mut terms: Vec<Term> = (1..=k)
                        .map(|i| Term {
                            row: j0 + 1,
                            node: i,
                            coeff: draw(&mut rng),
                        })
                        .collect();
                    if p > 0 {
                        terms.extend(extras[p - 1][j0].iter().map(|&(row, node)| Term {
                            row,
                            node,
                            coeff: draw(&mut rng),
                        }));
                    }
                    terms
                })
                .collect(),
        })
        .collect();
    let mut spec = CodeSpec::new(n, k, alpha, field.clone(), arrays)?;
    let (mut failing, mut last_witness) = count_failing_subsets(&spec, usize::MAX);
    let positions: Vec<(usize, usize, usize)> = (0..r)
        .flat_map(|p| (0..alpha).map(move |j| (p, j)))
        .flat_map(|(p, j)| (0..spec.arrays[p].rows[j].len()).map(move |t| (p, j, t)))
        .collect();

    let mut tries = 1;
    while failing > 0 && tries < max_tries {
        tries += 1;
        let (p, j, t) = positions[rng.gen_range(0..positions.len())];
        let old = spec.arrays[p].rows[j][t].coeff;
        spec.arrays[p].rows[j][t].coeff = draw(&mut rng);
        let (f, witness) = count_failing_subsets(&spec, failing);
        if f <= failing {
            failing = f;
            last_witness = witness;
        } else {
            spec.arrays[p].rows[j][t].coeff = old;
        }
    }
    if failing == 0 && verify_mds(&spec).is_ok() {
        Ok(spec)
    } else {
        Err(Error::SearchFailure {
            tries,
            last_witness,
        })
    }
}
