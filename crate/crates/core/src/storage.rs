//! File striping, shard files and the JSON manifest.
//!
//! A stripe holds `k·α` sub-packets of `subpacket_bytes` bytes, laid out node
//! by node. Each sub-packet is read as a little-endian bit stream and cut into
//! `w`-bit symbols, so `8·subpacket_bytes` must be a multiple of `w`. Shard `i`
//! is the concatenation of node `i`'s α sub-packets over all stripes, which
//! makes row `j` of stripe `s` the byte range starting at `(s·α + j-1)·sub`.

use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind, Read as _, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code::{CodeSpec, IndexArray, LinearCode, NodeRole, Term};
use crate::costmodel::{choose_strategy, Choice, CostModel};
use crate::error::{Error, Result};
use crate::gf::{FieldElem, FieldSpec};
use crate::linalg::GfMatrix;
use crate::locality::{split, LocalCode, LocalitySpec};
use crate::repair::{plan_local, plan_msr, plan_parity, RepairPlan};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Either an unsplit code or a split one.
#[derive(Clone, Debug)]
pub enum AnyCode {
    Base(CodeSpec),
    Local(LocalCode),
}

impl AnyCode {
    pub fn new(base: CodeSpec, locality: Option<LocalitySpec>) -> Result<AnyCode> {
        Ok(match locality {
            Some(loc) => AnyCode::Local(split(&base, loc)?),
            None => AnyCode::Base(base),
        })
    }

    fn inner(&self) -> &dyn LinearCode {
        match self {
            AnyCode::Base(c) => c,
            AnyCode::Local(c) => c,
        }
    }
}

impl LinearCode for AnyCode {
    fn field(&self) -> &FieldSpec {
        self.inner().field()
    }
    fn data_nodes(&self) -> usize {
        self.inner().data_nodes()
    }
    fn node_count(&self) -> usize {
        self.inner().node_count()
    }
    fn alpha(&self) -> usize {
        self.inner().alpha()
    }
    fn generator_matrix(&self) -> GfMatrix {
        self.inner().generator_matrix()
    }
    fn role(&self, node: usize) -> NodeRole {
        self.inner().role(node)
    }
    fn base(&self) -> &CodeSpec {
        self.inner().base()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub code: CodeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<LocalitySection>,
    pub stripe: StripeSection,
    pub shards: Vec<ShardEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSection {
    pub w: u32,
    pub poly: u32,
    pub n: usize,
    pub k: usize,
    pub alpha: usize,
    /// Per parity, per row: `(row, node, coeff)` triples.
    pub parities: Vec<Vec<Vec<(usize, usize, u16)>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalitySection {
    pub l: usize,
    pub delta: usize,
    pub groups: Vec<Vec<usize>>,
    pub columns: Vec<ColumnTag>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnTag {
    pub node: usize,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripeSection {
    pub subpacket_bytes: u64,
    pub stripe_count: u64,
    pub original_length_bytes: u64,
    pub padding_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub node: usize,
    pub role: String,
    pub file: String,
    pub sha256: String,
}

impl CodeSection {
    pub fn from_spec(spec: &CodeSpec) -> CodeSection {
        CodeSection {
            w: spec.field().w(),
            poly: spec.field().poly(),
            n: spec.n(),
            k: spec.k(),
            alpha: spec.alpha(),
            parities: spec
                .arrays()
                .iter()
                .map(|arr| {
                    arr.rows
                        .iter()
                        .map(|terms| terms.iter().map(|t| (t.row, t.node, t.coeff.0)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_spec(&self) -> Result<CodeSpec> {
        let field = FieldSpec::new(self.w, self.poly)?;
        let arrays = self
            .parities
            .iter()
            .map(|rows| IndexArray {
                rows: rows
                    .iter()
                    .map(|terms| terms.iter().map(|&(j, i, c)| Term::new(j, i, c)).collect())
                    .collect(),
            })
            .collect();
        CodeSpec::new(self.n, self.k, self.alpha, field, arrays)
    }
}

impl LocalitySection {
    fn from_code(lc: &LocalCode) -> LocalitySection {
        LocalitySection {
            l: lc.locality().l,
            delta: lc.locality().delta,
            groups: lc.groups().to_vec(),
            columns: lc
                .roles()
                .iter()
                .enumerate()
                .map(|(i, role)| {
                    let (source, group) = match *role {
                        NodeRole::Local { source, group } => (Some(source), Some(group)),
                        NodeRole::Global { source } => (Some(source), None),
                        _ => (None, None),
                    };
                    ColumnTag {
                        node: i + 1,
                        role: role.name().into(),
                        source,
                        group,
                    }
                })
                .collect(),
        }
    }
}

impl Manifest {
    /// Code described by the manifest. Locality metadata must agree with what
    /// splitting the base code produces.
    pub fn code(&self) -> Result<AnyCode> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!("unsupported format version {}", self.format_version)));
        }
        let base = self.code.to_spec()?;
        let code = AnyCode::new(base, self.locality.as_ref().map(|l| LocalitySpec::new(l.l, l.delta)))?;
        if let (Some(sec), AnyCode::Local(lc)) = (&self.locality, &code) {
            if *sec != LocalitySection::from_code(lc) {
                return Err(Error::Manifest("locality section does not match the split code".into()));
            }
        }
        if self.shards.len() != code.node_count()
            || self.shards.iter().enumerate().any(|(i, s)| s.node != i + 1)
        {
            return Err(Error::Manifest(format!("expected {} shards in node order", code.node_count())));
        }
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
        Manifest::parse(&text)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), self.to_json())?;
        Ok(())
    }

    fn stripe_geometry(&self) -> (usize, usize, usize) {
        (self.code.k, self.code.alpha, self.stripe.subpacket_bytes as usize)
    }
}

/// Splits bytes into `w`-bit symbols, least significant bit first.
pub fn pack(bytes: &[u8], w: u32) -> Vec<FieldElem> {
    let mut out = Vec::with_capacity(bytes.len() * 8 / w as usize);
    let (mut acc, mut bits) = (0u32, 0u32);
    let mask = (1u32 << w) - 1;
    for &b in bytes {
        acc |= (b as u32) << bits;
        bits += 8;
        while bits >= w {
            out.push(FieldElem((acc & mask) as u16));
            acc >>= w;
            bits -= w;
        }
    }
    out
}

/// Inverse of [`pack`].
pub fn unpack(symbols: &[FieldElem], w: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * w as usize / 8);
    let (mut acc, mut bits) = (0u32, 0u32);
    for s in symbols {
        acc |= (s.0 as u32) << bits;
        bits += w;
        while bits >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            bits -= 8;
        }
    }
    out
}

pub fn shard_file_name(node: usize) -> String {
    format!("shard_{node:02}.bin")
}

fn check_subpacket_size(sub: u64, w: u32) -> Result<()> {
    if sub == 0 || !(8 * sub).is_multiple_of(w as u64) {
        return Err(Error::Parameter(format!(
            "sub-packet size {sub} bytes does not hold a whole number of {w}-bit symbols"
        )));
    }
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Reads up to `buf.len()` bytes, stopping early only at end of input.
fn read_full(r: &mut impl std::io::Read, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Per output scalar column, the nonzero generator entries feeding it.
fn column_terms(g: &GfMatrix, cols: std::ops::Range<usize>) -> Vec<Vec<(usize, FieldElem)>> {
    cols.map(|c| {
        (0..g.rows())
            .filter_map(|r| {
                let v = g.get(r, c);
                (!v.is_zero()).then_some((r, v))
            })
            .collect()
    })
    .collect()
}

/// Stripes `input` and writes shards plus manifest into `out_dir`.
pub fn encode_file(input: &Path, out_dir: &Path, code: &AnyCode, subpacket_bytes: u64) -> Result<Manifest> {
    let field = code.field().clone();
    check_subpacket_size(subpacket_bytes, field.w())?;
    fs::create_dir_all(out_dir)?;
    let (k, alpha, n) = (code.data_nodes(), code.alpha(), code.node_count());
    let sub = subpacket_bytes as usize;
    let stripe_len = k * alpha * sub;
    let g = code.generator_matrix();
    let parity_terms = column_terms(&g, k * alpha..n * alpha);

    let mut writers = Vec::with_capacity(n);
    for node in 1..=n {
        writers.push(BufWriter::new(File::create(out_dir.join(shard_file_name(node)))?));
    }
    let mut hashers = vec![Sha256::new(); n];
    let mut emit = |node: usize, bytes: &[u8]| -> Result<()> {
        writers[node - 1].write_all(bytes)?;
        hashers[node - 1].update(bytes);
        Ok(())
    };

    let mut reader = File::open(input)?;
    let mut buf = vec![0u8; stripe_len];
    let (mut stripes, mut total) = (0u64, 0u64);
    loop {
        let got = read_full(&mut reader, &mut buf)?;
        if got == 0 {
            break;
        }
        buf[got..].fill(0);
        total += got as u64;
        stripes += 1;
        let data: Vec<Vec<FieldElem>> = buf.chunks(sub).map(|c| pack(c, field.w())).collect();
        for node in 1..=k {
            emit(node, &buf[(node - 1) * alpha * sub..node * alpha * sub])?;
        }
        let lanes = data[0].len();
        for (p, col_terms) in parity_terms.chunks(alpha).enumerate() {
            let mut bytes = Vec::with_capacity(alpha * sub);
            for terms in col_terms {
                let mut acc = vec![FieldElem::ZERO; lanes];
                for &(r, c) in terms {
                    field.mul_acc(&mut acc, &data[r], c);
                }
                bytes.extend(unpack(&acc, field.w()));
            }
            emit(k + 1 + p, &bytes)?;
        }
        if got < stripe_len {
            break;
        }
    }
    for w in &mut writers {
        w.flush()?;
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        code: CodeSection::from_spec(code.base()),
        locality: match code {
            AnyCode::Local(lc) => Some(LocalitySection::from_code(lc)),
            AnyCode::Base(_) => None,
        },
        stripe: StripeSection {
            subpacket_bytes,
            stripe_count: stripes,
            original_length_bytes: total,
            padding_bytes: stripes * stripe_len as u64 - total,
        },
        shards: hashers
            .into_iter()
            .enumerate()
            .map(|(i, h)| ShardEntry {
                node: i + 1,
                role: code.role(i + 1).name().into(),
                file: shard_file_name(i + 1),
                sha256: hex::encode(h.finalize()),
            })
            .collect(),
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShardStatus {
    Ok,
    Missing,
    Corrupt,
}

/// Checks every shard file against its recorded checksum.
pub fn check_shards(dir: &Path, manifest: &Manifest) -> Result<Vec<ShardStatus>> {
    manifest
        .shards
        .iter()
        .map(|s| {
            let path = dir.join(&s.file);
            if !path.exists() {
                return Ok(ShardStatus::Missing);
            }
            Ok(if sha256_file(&path)? == s.sha256 {
                ShardStatus::Ok
            } else {
                ShardStatus::Corrupt
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeStats {
    pub used_nodes: Vec<usize>,
    pub bytes_written: u64,
}

/// Rebuilds the original file from whichever shards are present. Present
/// shards must match their checksums.
pub fn decode_dir(dir: &Path, output: &Path) -> Result<DecodeStats> {
    let manifest = Manifest::load(dir)?;
    let code = manifest.code()?;
    let status = check_shards(dir, &manifest)?;
    if let Some(i) = status.iter().position(|s| *s == ShardStatus::Corrupt) {
        return Err(Error::Corruption {
            node: i + 1,
            file: manifest.shards[i].file.clone(),
        });
    }
    let available: Vec<usize> = (1..=code.node_count())
        .filter(|&i| status[i - 1] == ShardStatus::Ok)
        .collect();
    let (k, alpha, sub) = manifest.stripe_geometry();
    if available.len() < k {
        return Err(Error::InsufficientData {
            available: available.len(),
            required: k,
        });
    }
    let g = code.generator_matrix();
    let kk = code.dimension();
    let mut chosen = Vec::new();
    let mut cols = Vec::new();
    for &node in &available {
        let mut trial = cols.clone();
        trial.extend(code.node_columns(node));
        if g.select_columns(&trial).rank() == trial.len() {
            chosen.push(node);
            cols = trial;
        }
        if cols.len() == kk {
            break;
        }
    }
    if cols.len() < kk {
        return Err(Error::Unrecoverable { nodes: available });
    }
    let inv = g.select_columns(&cols).invert()?;
    let field = code.field().clone();
    let w = field.w();

    let mut files = chosen
        .iter()
        .map(|&n| File::open(dir.join(&manifest.shards[n - 1].file)))
        .collect::<std::io::Result<Vec<_>>>()?;
    let mut out = BufWriter::new(File::create(output)?);
    let mut remaining = manifest.stripe.original_length_bytes;
    let mut buf = vec![0u8; alpha * sub];
    for _ in 0..manifest.stripe.stripe_count {
        let mut reads: Vec<Vec<FieldElem>> = Vec::with_capacity(kk);
        for f in &mut files {
            f.read_exact(&mut buf)?;
            reads.extend(buf.chunks(sub).map(|c| pack(c, w)));
        }
        let lanes = reads[0].len();
        for r in 0..kk {
            let mut acc = vec![FieldElem::ZERO; lanes];
            for (c, read) in reads.iter().enumerate() {
                field.mul_acc(&mut acc, read, inv.get(c, r));
            }
            let bytes = unpack(&acc, w);
            let take = remaining.min(bytes.len() as u64) as usize;
            out.write_all(&bytes[..take])?;
            remaining -= take as u64;
        }
    }
    out.flush()?;
    Ok(DecodeStats {
        used_nodes: chosen,
        bytes_written: manifest.stripe.original_length_bytes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyChoice {
    Auto,
    Local,
    Msr,
}

/// Picks the repair plan for `failed`. Parity shards are always re-encoded.
/// `Auto` consults the cost model on split codes.
pub fn plan_repair(
    code: &AnyCode,
    failed: usize,
    choice: StrategyChoice,
    cm: &CostModel,
) -> Result<(RepairPlan, Option<Choice>)> {
    if failed == 0 || failed > code.node_count() {
        return Err(Error::Parameter(format!("node {failed} does not exist")));
    }
    if !code.role(failed).is_systematic() {
        return Ok((plan_parity(code, failed)?, None));
    }
    match (code, choice) {
        (AnyCode::Local(lc), StrategyChoice::Auto) => {
            let c = choose_strategy(lc, failed, cm)?;
            Ok((c.best().plan.clone(), Some(c)))
        }
        (AnyCode::Local(lc), StrategyChoice::Local) => Ok((plan_local(lc, failed)?, None)),
        (AnyCode::Base(_), StrategyChoice::Local) => Err(Error::StrategyUnavailable {
            strategy: "local".into(),
            reason: "the code has no local groups; use msr or auto".into(),
        }),
        (_, StrategyChoice::Msr | StrategyChoice::Auto) => Ok((plan_msr(code, failed)?, None)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairStats {
    pub read_ops: u64,
    pub bytes_read: u64,
    pub output: PathBuf,
}

/// Regenerates the shard of `plan.failed_node` with ranged reads from the
/// helpers, then checks the result against the manifest checksum.
pub fn repair_shard(dir: &Path, manifest: &Manifest, plan: &RepairPlan) -> Result<RepairStats> {
    let code = manifest.code()?;
    let (_, alpha, sub) = manifest.stripe_geometry();
    plan.validate(alpha)?;
    let w = code.field().w();
    let mut files = Vec::with_capacity(plan.reads.len());
    for r in &plan.reads {
        let path = dir.join(&manifest.shards[r.node - 1].file);
        let f = File::open(&path).map_err(|_| Error::MissingRead {
            node: r.node,
            rows: r.rows.clone(),
        })?;
        files.push(f);
    }
    let entry = &manifest.shards[plan.failed_node - 1];
    let out_path = dir.join(&entry.file);
    let tmp_path = dir.join(format!("{}.partial", entry.file));
    let mut out = BufWriter::new(File::create(&tmp_path)?);
    let mut hasher = Sha256::new();
    let (mut read_ops, mut bytes_read) = (0u64, 0u64);

    let result = (|| -> Result<()> {
        for s in 0..manifest.stripe.stripe_count as usize {
            let mut inputs = Vec::with_capacity(plan.bandwidth_subpackets());
            for (r, f) in plan.reads.iter().zip(&mut files) {
                let mut i = 0;
                while i < r.rows.len() {
                    let mut end = i + 1;
                    while end < r.rows.len() && r.rows[end] == r.rows[end - 1] + 1 {
                        end += 1;
                    }
                    let offset = ((s * alpha + r.rows[i] - 1) * sub) as u64;
                    let mut buf = vec![0u8; (end - i) * sub];
                    f.seek(SeekFrom::Start(offset))?;
                    f.read_exact(&mut buf).map_err(|_| Error::MissingRead {
                        node: r.node,
                        rows: r.rows[i..end].to_vec(),
                    })?;
                    read_ops += 1;
                    bytes_read += buf.len() as u64;
                    inputs.extend(buf.chunks(sub).map(|c| pack(c, w)));
                    i = end;
                }
            }
            for col in plan.combine(&inputs)? {
                let bytes = unpack(&col, w);
                hasher.update(&bytes);
                out.write_all(&bytes)?;
            }
        }
        out.flush()?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp_path);
        return Err(e);
    }
    drop(out);
    let digest = hex::encode(hasher.finalize());
    if digest != entry.sha256 {
        let _ = fs::remove_file(&tmp_path);
        return Err(Error::Integrity(format!(
            "regenerated shard {} does not match its checksum; a helper shard is damaged",
            plan.failed_node
        )));
    }
    fs::rename(&tmp_path, &out_path)?;
    Ok(RepairStats {
        read_ops,
        bytes_read,
        output: out_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pack_round_trip_and_bit_order() {
        let syms = pack(&[0b1010_0001, 0b0000_0011, 0, 0, 0], 5);
        assert_eq!(syms.len(), 8);
        assert_eq!(syms[0].0, 0b00001);
        assert_eq!(syms[1].0, 0b11101);
        assert_eq!(unpack(&syms, 5), vec![0b1010_0001, 3, 0, 0, 0]);
    }

    proptest! {
        #[test]
        fn pack_inverts(bytes in proptest::collection::vec(any::<u8>(), 0..40).prop_map(|mut v| { v.truncate(v.len() / 5 * 5); v })) {
            prop_assert_eq!(unpack(&pack(&bytes, 5), 5), bytes.clone());
            prop_assert_eq!(unpack(&pack(&bytes, 8), 8), bytes);
        }
    }

    #[test]
    fn manifest_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        fs::write(&input, b"hello world").unwrap();
        let code = AnyCode::new(CodeSpec::builtin_ht_9_6_9(), Some(LocalitySpec::new(2, 2))).unwrap();
        let m = encode_file(&input, &dir.path().join("out"), &code, 5).unwrap();
        let text = m.to_json();
        let back = Manifest::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
        assert!(matches!(back.code().unwrap(), AnyCode::Local(_)));
        assert_eq!(m.stripe.padding_bytes, 6 * 9 * 5 - 11);
    }

    #[test]
    fn subpacket_size_must_fit_symbols() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        fs::write(&input, b"x").unwrap();
        let code = AnyCode::Base(CodeSpec::builtin_ht_9_6_9());
        assert!(matches!(encode_file(&input, dir.path(), &code, 1024), Err(Error::Parameter(_))));
    }

    #[test]
    fn tampered_locality_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        fs::write(&input, b"abc").unwrap();
        let code = AnyCode::new(CodeSpec::builtin_ht_9_6_9(), Some(LocalitySpec::new(3, 2))).unwrap();
        let mut m = encode_file(&input, dir.path(), &code, 5).unwrap();
        m.locality.as_mut().unwrap().groups[0] = vec![1, 3];
        assert!(matches!(m.code(), Err(Error::Manifest(_))));
    }
}
