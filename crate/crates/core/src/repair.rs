//! Single-node repair planning and execution.
//!
//! A plan lists which sub-packet rows to read from which helper nodes and a
//! recovery matrix `T` with `lost = reads · T`. Plans are derived from the
//! generator alone, so one plan serves every stripe.

use std::collections::BTreeSet;

use num_rational::Ratio;

use crate::code::{for_each_subset, LinearCode, NodeRole};
use crate::error::{Error, Result};
use crate::gf::FieldElem;
use crate::linalg::GfMatrix;
use crate::locality::LocalCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Inside the failed node's local group.
    LocalOnly,
    /// MSR-style repair of a split code through local and global parities.
    LocalPlusGlobal,
    /// MSR-style repair of an unsplit code.
    MsrBase,
    /// Parity recomputed from the systematic nodes it covers.
    Reencode,
    /// Found by [`plan_search`].
    Search,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::LocalOnly => "local_only",
            Strategy::LocalPlusGlobal => "local_plus_global",
            Strategy::MsrBase => "msr_base",
            Strategy::Reencode => "reencode",
            Strategy::Search => "search",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Read {
    pub node: usize,
    /// Sorted 1-based row indices.
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RepairPlan {
    pub failed_node: usize,
    pub strategy: Strategy,
    pub reads: Vec<Read>,
    /// Symbols read (in plan order) × α.
    recovery: GfMatrix,
    /// The plan came out of a search that covered every candidate read set.
    pub exhaustive: bool,
    /// No plan within the requested budget was found; this one exceeds it.
    pub suboptimal: bool,
}

impl RepairPlan {
    pub fn bandwidth_subpackets(&self) -> usize {
        self.reads.iter().map(|r| r.rows.len()).sum()
    }

    pub fn helper_count(&self) -> usize {
        self.reads.len()
    }

    pub fn helpers(&self) -> Vec<usize> {
        self.reads.iter().map(|r| r.node).collect()
    }

    pub fn recovery(&self) -> &GfMatrix {
        &self.recovery
    }

    /// Text form: one `node=<id> rows=<list>` line per read, then a summary.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.reads {
            let rows: Vec<String> = r.rows.iter().map(usize::to_string).collect();
            out.push_str(&format!("node={} rows={}\n", r.node, rows.join(",")));
        }
        out.push_str(&format!(
            "bandwidth_subpackets={} helpers={} strategy={}\n",
            self.bandwidth_subpackets(),
            self.helper_count(),
            self.strategy
        ));
        out
    }

    /// Structural checks that every executable plan satisfies.
    pub fn validate(&self, alpha: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.reads {
            if r.node == self.failed_node {
                return Err(Error::PlanIntegrity(format!("plan reads the failed node {}", r.node)));
            }
            if !seen.insert(r.node) {
                return Err(Error::PlanIntegrity(format!("node {} read twice", r.node)));
            }
            if r.rows.is_empty()
                || r.rows.windows(2).any(|w| w[0] >= w[1])
                || r.rows.iter().any(|&j| j == 0 || j > alpha)
            {
                return Err(Error::PlanIntegrity(format!("bad row set for node {}", r.node)));
            }
        }
        if self.recovery.rows() != self.bandwidth_subpackets() || self.recovery.cols() != alpha {
            return Err(Error::PlanIntegrity("recovery matrix shape does not match reads".into()));
        }
        Ok(())
    }

    /// Applies the recovery matrix lane-wise. `inputs` holds one equal-length
    /// lane vector per read symbol, in plan order; returns the α recovered
    /// sub-packets.
    pub fn combine(&self, inputs: &[Vec<FieldElem>]) -> Result<Vec<Vec<FieldElem>>> {
        if inputs.len() != self.recovery.rows() {
            return Err(Error::PlanIntegrity(format!(
                "{} inputs for {} planned reads",
                inputs.len(),
                self.recovery.rows()
            )));
        }
        let lanes = inputs.first().map_or(0, Vec::len);
        if inputs.iter().any(|v| v.len() != lanes) {
            return Err(Error::Dimension {
                expected: format!("{lanes} lanes per sub-packet"),
                actual: "ragged input".into(),
            });
        }
        let field = self.recovery.field();
        let mut out = vec![vec![FieldElem::ZERO; lanes]; self.recovery.cols()];
        for (i, input) in inputs.iter().enumerate() {
            for (j, dst) in out.iter_mut().enumerate() {
                field.mul_acc(dst, input, self.recovery.get(i, j));
            }
        }
        Ok(out)
    }
}

/// Runs a plan against `reader(node, rows)`, which must return one symbol per
/// requested row.
pub fn execute<F>(plan: &RepairPlan, mut reader: F) -> Result<Vec<FieldElem>>
where
    F: FnMut(usize, &[usize]) -> Result<Vec<FieldElem>>,
{
    let mut inputs = Vec::with_capacity(plan.bandwidth_subpackets());
    for r in &plan.reads {
        let vals = reader(r.node, &r.rows)?;
        if vals.len() != r.rows.len() {
            return Err(Error::MissingRead {
                node: r.node,
                rows: r.rows.clone(),
            });
        }
        inputs.extend(vals.into_iter().map(|v| vec![v]));
    }
    Ok(plan.combine(&inputs)?.into_iter().map(|lane| lane[0]).collect())
}

/// Generator plus the failed node's columns, shared by the planners.
struct Ctx<'a, C: LinearCode + ?Sized> {
    code: &'a C,
    g: GfMatrix,
    failed: usize,
    target: GfMatrix,
}

impl<'a, C: LinearCode + ?Sized> Ctx<'a, C> {
    fn new(code: &'a C, failed: usize) -> Result<Self> {
        if failed == 0 || failed > code.node_count() {
            return Err(Error::Parameter(format!("node {failed} does not exist")));
        }
        let g = code.generator_matrix();
        let cols: Vec<usize> = code.node_columns(failed).collect();
        let target = g.select_columns(&cols);
        Ok(Ctx { code, g, failed, target })
    }

    fn survivors(&self) -> Vec<usize> {
        (1..=self.code.node_count()).filter(|&i| i != self.failed).collect()
    }

    /// Recovery matrix for reading `cells` (node, row), if they suffice.
    fn recovery(&self, cells: &[(usize, usize)]) -> Option<GfMatrix> {
        let alpha = self.code.alpha();
        let cols: Vec<usize> = cells.iter().map(|&(n, j)| (n - 1) * alpha + j - 1).collect();
        let gs = self.g.select_columns(&cols);
        let ind = gs.independent_columns();
        let part = gs.select_columns(&ind).solve_matrix(&self.target).ok()?;
        let mut t = GfMatrix::zeros(self.g.field(), cells.len(), alpha);
        for (i, &c) in ind.iter().enumerate() {
            for j in 0..alpha {
                t.set(c, j, part.get(i, j));
            }
        }
        Some(t)
    }

    fn plan(&self, strategy: Strategy, reads: Vec<Read>) -> Option<RepairPlan> {
        let recovery = self.recovery(&cells(&reads))?;
        Some(RepairPlan {
            failed_node: self.failed,
            strategy,
            reads,
            recovery,
            exhaustive: false,
            suboptimal: false,
        })
    }

    fn full_reads(&self, nodes: &[usize]) -> Vec<Read> {
        let rows: Vec<usize> = (1..=self.code.alpha()).collect();
        nodes.iter().map(|&node| Read { node, rows: rows.clone() }).collect()
    }
}

fn cells(reads: &[Read]) -> Vec<(usize, usize)> {
    reads
        .iter()
        .flat_map(|r| r.rows.iter().map(move |&j| (r.node, j)))
        .collect()
}

fn reads_from_cells(cells: &[(usize, usize)]) -> Vec<Read> {
    let mut reads: Vec<Read> = Vec::new();
    for &(node, row) in cells {
        match reads.iter_mut().find(|r| r.node == node) {
            Some(r) => r.rows.push(row),
            None => reads.push(Read { node, rows: vec![row] }),
        }
    }
    reads.sort_by_key(|r| r.node);
    for r in &mut reads {
        r.rows.sort_unstable();
    }
    reads
}

/// MSR-style repair of systematic node `failed`: read the rows where the
/// failed node's data is carried as extra pairs, from every survivor. On a
/// split code, local parities that the solve does not need are dropped.
/// Falls back to [`plan_search`] when the structured row set does not apply.
pub fn plan_msr<C: LinearCode + ?Sized>(code: &C, failed: usize) -> Result<RepairPlan> {
    let ctx = Ctx::new(code, failed)?;
    if !code.role(failed).is_systematic() {
        return Err(Error::StrategyUnavailable {
            strategy: "msr".into(),
            reason: format!("node {failed} is a parity node"),
        });
    }
    let base = code.base();
    let split = code.node_count() != base.n();
    let strategy = if split { Strategy::LocalPlusGlobal } else { Strategy::MsrBase };
    let (alpha, r) = (base.alpha(), base.r());
    let rows = base.extra_rows_of(failed);
    if alpha % r == 0 && rows.len() == alpha / r {
        let mut reads: Vec<Read> = ctx
            .survivors()
            .into_iter()
            .map(|node| Read { node, rows: rows.clone() })
            .collect();
        if ctx.recovery(&cells(&reads)).is_some() {
            let locals: Vec<usize> = reads
                .iter()
                .map(|r| r.node)
                .filter(|&n| matches!(code.role(n), NodeRole::Local { .. }))
                .collect();
            for node in locals {
                let trial: Vec<Read> = reads.iter().filter(|r| r.node != node).cloned().collect();
                if ctx.recovery(&cells(&trial)).is_some() {
                    reads = trial;
                }
            }
            return Ok(ctx.plan(strategy, reads).expect("checked solvable"));
        }
    }
    let mut plan = plan_search(code, failed, None)?;
    plan.strategy = strategy;
    Ok(plan)
}

/// Repair inside the failed node's group. With δ = 2 the group's other
/// members and its local parity are read in full; with larger δ the group is
/// searched for a cheaper read set.
pub fn plan_local(lc: &LocalCode, failed: usize) -> Result<RepairPlan> {
    let ctx = Ctx::new(lc, failed)?;
    let Some(group) = lc.group_of(failed) else {
        return plan_parity(lc, failed);
    };
    let mut helpers: Vec<usize> = lc.groups()[group - 1].iter().copied().filter(|&n| n != failed).collect();
    helpers.extend(lc.local_nodes_of_group(group));
    let unsolvable = || Error::PlanIntegrity(format!("group {group} cannot repair node {failed}"));
    if lc.locality().delta == 2 {
        return ctx.plan(Strategy::LocalOnly, ctx.full_reads(&helpers)).ok_or_else(unsolvable);
    }
    let mut plan = search_within(&ctx, &helpers, None).map_err(|_| unsolvable())?;
    plan.strategy = Strategy::LocalOnly;
    Ok(plan)
}

/// Recomputes a parity node from the systematic nodes that enter it.
pub fn plan_parity<C: LinearCode + ?Sized>(code: &C, failed: usize) -> Result<RepairPlan> {
    let ctx = Ctx::new(code, failed)?;
    if code.role(failed).is_systematic() {
        return Err(Error::StrategyUnavailable {
            strategy: "reencode".into(),
            reason: format!("node {failed} is systematic"),
        });
    }
    let alpha = code.alpha();
    let sources: Vec<usize> = (1..=code.data_nodes())
        .filter(|&i| {
            let rows: Vec<usize> = code.node_columns(i).collect();
            !ctx.target.select_rows(&rows).is_zero()
        })
        .collect();
    let recovery = {
        let rows: Vec<usize> = sources.iter().flat_map(|&i| (i - 1) * alpha..i * alpha).collect();
        ctx.target.select_rows(&rows)
    };
    Ok(RepairPlan {
        failed_node: failed,
        strategy: Strategy::Reencode,
        reads: ctx.full_reads(&sources),
        recovery,
        exhaustive: false,
        suboptimal: false,
    })
}

/// Largest number of candidate (node, row) cells searched exhaustively.
pub const EXHAUSTIVE_CELL_LIMIT: usize = 20;

/// Minimum-bandwidth repair by search over the survivors' rows. Instances with
/// at most [`EXHAUSTIVE_CELL_LIMIT`] candidate cells are searched exhaustively
/// by increasing read count; larger ones try uniform row sets of growing size
/// and prune single cells. When nothing fits `row_budget`, full reads from
/// the survivors are returned, flagged sub-optimal.
pub fn plan_search<C: LinearCode + ?Sized>(
    code: &C,
    failed: usize,
    row_budget: Option<usize>,
) -> Result<RepairPlan> {
    let ctx = Ctx::new(code, failed)?;
    let helpers = ctx.survivors();
    search_within(&ctx, &helpers, row_budget)
}

fn search_within<C: LinearCode + ?Sized>(
    ctx: &Ctx<'_, C>,
    helpers: &[usize],
    row_budget: Option<usize>,
) -> Result<RepairPlan> {
    let alpha = ctx.code.alpha();
    let all: Vec<(usize, usize)> = helpers
        .iter()
        .flat_map(|&n| (1..=alpha).map(move |j| (n, j)))
        .collect();
    let budget = row_budget.unwrap_or(all.len()).min(all.len());
    let finish = |c: &[(usize, usize)], exhaustive: bool| {
        let mut p = ctx.plan(Strategy::Search, reads_from_cells(c)).expect("checked solvable");
        p.exhaustive = exhaustive;
        p
    };

    if all.len() <= EXHAUSTIVE_CELL_LIMIT {
        let min = ctx.target.rank();
        for size in min..=budget {
            let mut found = None;
            for_each_subset(all.len(), size, |idx| {
                let pick: Vec<(usize, usize)> = idx.iter().map(|&i| all[i]).collect();
                if ctx.recovery(&pick).is_some() {
                    found = Some(pick);
                    return false;
                }
                true
            });
            if let Some(pick) = found {
                return Ok(finish(&pick, true));
            }
        }
    } else {
        for size in 1..=alpha {
            if size * helpers.len() > budget {
                break;
            }
            let mut found = None;
            for_each_subset(alpha, size, |idx| {
                let pick: Vec<(usize, usize)> = helpers
                    .iter()
                    .flat_map(|&n| idx.iter().map(move |&j| (n, j + 1)))
                    .collect();
                if ctx.recovery(&pick).is_some() {
                    found = Some(pick);
                    return false;
                }
                true
            });
            if let Some(mut pick) = found {
                let mut i = pick.len();
                while i > 0 {
                    i -= 1;
                    let mut trial = pick.clone();
                    trial.remove(i);
                    if ctx.recovery(&trial).is_some() {
                        pick = trial;
                    }
                }
                return Ok(finish(&pick, false));
            }
        }
    }

    let mut plan = ctx
        .plan(Strategy::Search, ctx.full_reads(helpers))
        .ok_or_else(|| Error::Unrecoverable { nodes: helpers.to_vec() })?;
    let nodes = plan.helpers();
    for node in nodes {
        let trial: Vec<Read> = plan.reads.iter().filter(|r| r.node != node).cloned().collect();
        if let Some(p) = ctx.plan(Strategy::Search, trial) {
            plan = p;
        }
    }
    plan.suboptimal = plan.bandwidth_subpackets() > budget;
    Ok(plan)
}

/// Bandwidth lower bounds for a payload of `m` units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// `(M/k)·d/(d−k+1)` for `d` helpers.
    pub general: Ratio<i128>,
    /// `(M/k)(n−1)/(n−k)`.
    pub msr: Ratio<i128>,
    /// `(M/k)(k/l+δ−2)/(δ−1)`.
    pub local_term: Ratio<i128>,
    pub local_min: Ratio<i128>,
}

pub fn bounds(m: Ratio<i128>, n: usize, k: usize, d: usize, l: usize, delta: usize) -> Result<Bounds> {
    if k == 0 || n <= k || l == 0 || delta < 2 {
        return Err(Error::Parameter(format!(
            "bounds need n > k >= 1, l >= 1, delta >= 2; got n={n} k={k} l={l} delta={delta}"
        )));
    }
    if d < k {
        return Err(Error::Domain(format!("{d} helpers cannot repair a code of dimension {k}")));
    }
    let int = |x: usize| Ratio::from_integer(x as i128);
    let per_node = m / int(k);
    let general = per_node * int(d) / int(d - k + 1);
    let msr = per_node * int(n - 1) / int(n - k);
    let local_term = per_node * (int(k) / int(l) + int(delta) - int(2)) / int(delta - 1);
    let local_min = local_term.min(msr);
    Ok(Bounds {
        general,
        msr,
        local_term,
        local_min,
    })
}
