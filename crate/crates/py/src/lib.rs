//! Python bindings: codes, repair plans, bounds and file striping.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use hashtag_core::code::{decode, generate_code, verify_mds, CodeSpec, DataBlock, LinearCode, MdsVerdict};
use hashtag_core::costmodel::{choose_among, parse_rational, CostModel, Q};
use hashtag_core::locality::{verify_distance, LocalitySpec};
use hashtag_core::repair::{bounds as core_bounds, execute, plan_local, plan_msr, plan_parity, plan_search, RepairPlan};
use hashtag_core::storage::{decode_dir as core_decode_dir, encode_file as core_encode_file, plan_repair, repair_shard};
use hashtag_core::storage::{AnyCode, Manifest, StrategyChoice};
use hashtag_core::{Error, FieldElem, FieldSpec};
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

pyo3::create_exception!(hashtag, IntegrityError, PyException);

fn to_py(e: Error) -> PyErr {
    if e.is_integrity() {
        return IntegrityError::new_err(e.to_string());
    }
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rational(x: &Bound<'_, PyAny>) -> PyResult<Q> {
    parse_rational(&x.str()?.to_string()).map_err(to_py)
}

fn fraction<'py>(py: Python<'py>, q: Q) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((*q.numer(), *q.denom()))
}

fn strategy_choice(s: &str) -> PyResult<StrategyChoice> {
    match s {
        "auto" => Ok(StrategyChoice::Auto),
        "local" => Ok(StrategyChoice::Local),
        "msr" => Ok(StrategyChoice::Msr),
        other => Err(PyValueError::new_err(format!("unknown strategy {other:?}; use auto, local or msr"))),
    }
}

fn elems(field: &FieldSpec, col: &[u32]) -> PyResult<Vec<FieldElem>> {
    col.iter().map(|&v| field.elem(v).map_err(to_py)).collect()
}

fn values(col: &[FieldElem]) -> Vec<u16> {
    col.iter().map(|v| v.value()).collect()
}

/// An (n, k) HashTag code, optionally split into local groups.
#[pyclass(name = "Code", module = "hashtag", frozen)]
struct PyCode {
    inner: AnyCode,
}

#[pymethods]
impl PyCode {
    /// The published (9, 6), alpha 9 code over GF(32).
    #[staticmethod]
    fn builtin() -> Self {
        PyCode {
            inner: AnyCode::Base(CodeSpec::builtin_ht_9_6_9()),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (n, k, alpha, w=5, poly=41, seed=0, max_tries=100_000))]
    fn generate(n: usize, k: usize, alpha: usize, w: u32, poly: u32, seed: u64, max_tries: u64) -> PyResult<Self> {
        let field = FieldSpec::new(w, poly).map_err(to_py)?;
        let spec = generate_code(n, k, alpha, &field, seed, max_tries).map_err(to_py)?;
        Ok(PyCode {
            inner: AnyCode::Base(spec),
        })
    }

    /// Loads the code stored in a shard directory's manifest.
    #[staticmethod]
    fn from_manifest(dir: PathBuf) -> PyResult<Self> {
        let m = Manifest::load(&dir).map_err(to_py)?;
        Ok(PyCode {
            inner: m.code().map_err(to_py)?,
        })
    }

    fn split(&self, l: usize, delta: usize) -> PyResult<Self> {
        let base = self.inner.base().clone();
        Ok(PyCode {
            inner: AnyCode::new(base, Some(LocalitySpec::new(l, delta))).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.data_nodes()
    }

    #[getter]
    fn alpha(&self) -> usize {
        self.inner.alpha()
    }

    #[getter]
    fn roles(&self) -> Vec<&'static str> {
        (1..=self.inner.node_count()).map(|i| self.inner.role(i).name()).collect()
    }

    /// `data` is k columns of alpha symbols; returns n columns.
    fn encode(&self, data: Vec<Vec<u32>>) -> PyResult<Vec<Vec<u16>>> {
        let field = self.inner.field();
        let cols = data.iter().map(|c| elems(field, c)).collect::<PyResult<Vec<_>>>()?;
        let block = DataBlock::from_columns(cols).map_err(to_py)?;
        let cw = match &self.inner {
            AnyCode::Base(spec) => spec.encode(&block),
            AnyCode::Local(lc) => lc.encode(&block),
        }
        .map_err(to_py)?;
        Ok(cw.columns.iter().map(|c| values(c)).collect())
    }

    /// Recovers the k data columns from a `{node: column}` mapping.
    fn decode(&self, available: HashMap<usize, Vec<u32>>) -> PyResult<Vec<Vec<u16>>> {
        let field = self.inner.field();
        let mut map = BTreeMap::new();
        for (node, col) in available {
            map.insert(node, elems(field, &col)?);
        }
        let block = decode(&self.inner, &map).map_err(to_py)?;
        Ok(block.columns().iter().map(|c| values(c)).collect())
    }

    /// `None` when every k-subset decodes, otherwise a failing subset.
    fn mds_witness(&self) -> Option<Vec<usize>> {
        match verify_mds(self.inner.base()) {
            MdsVerdict::Ok { .. } => None,
            MdsVerdict::Witness { subset } => Some(subset),
        }
    }

    /// Exact minimum distance and a smallest erasure pattern that loses data.
    fn distance(&self) -> PyResult<(usize, Vec<usize>)> {
        let d = verify_distance(&self.inner).map_err(to_py)?;
        Ok((d.d_min, d.witness))
    }

    #[pyo3(signature = (node, strategy="auto", seek_cost=None, rate=None, subpacket_bytes=1))]
    fn plan(
        &self,
        node: usize,
        strategy: &str,
        seek_cost: Option<&Bound<'_, PyAny>>,
        rate: Option<&Bound<'_, PyAny>>,
        subpacket_bytes: u64,
    ) -> PyResult<PyPlan> {
        let cm = cost_model(seek_cost, rate, subpacket_bytes)?;
        let (plan, _) = plan_repair(&self.inner, node, strategy_choice(strategy)?, &cm).map_err(to_py)?;
        Ok(PyPlan { inner: plan })
    }

    /// Minimum-bandwidth plan by search (exhaustive on small codes).
    #[pyo3(signature = (node, row_budget=None))]
    fn search(&self, node: usize, row_budget: Option<usize>) -> PyResult<PyPlan> {
        Ok(PyPlan {
            inner: plan_search(&self.inner, node, row_budget).map_err(to_py)?,
        })
    }

    /// Costs of each applicable strategy and the winner.
    #[pyo3(signature = (node, seek_cost=None, rate=None, subpacket_bytes=1))]
    fn cost_compare<'py>(
        &self,
        py: Python<'py>,
        node: usize,
        seek_cost: Option<&Bound<'_, PyAny>>,
        rate: Option<&Bound<'_, PyAny>>,
        subpacket_bytes: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cm = cost_model(seek_cost, rate, subpacket_bytes)?;
        let code = &self.inner;
        let plans = match code {
            _ if !code.role(node).is_systematic() => vec![plan_parity(code, node)],
            AnyCode::Local(lc) => vec![plan_local(lc, node), plan_msr(lc, node)],
            AnyCode::Base(spec) => vec![plan_msr(spec, node)],
        }
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
        let choice = choose_among(plans, &cm);
        let options = choice
            .options
            .iter()
            .map(|o| {
                let d = PyDict::new(py);
                d.set_item("strategy", o.strategy().name())?;
                d.set_item("reads", o.reads)?;
                d.set_item("subpackets", o.bandwidth_subpackets)?;
                d.set_item("bytes", o.bytes)?;
                d.set_item("time", fraction(py, o.time)?)?;
                Ok(d)
            })
            .collect::<PyResult<Vec<_>>>()?;
        let out = PyDict::new(py);
        out.set_item("options", options)?;
        out.set_item("winner", choice.best().strategy().name())?;
        let flip = choice.flip_seek_cost.map(|s| fraction(py, s)).transpose()?;
        out.set_item("flip_seek_cost", flip)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        let b = self.inner.base();
        format!(
            "Code(n={}, k={}, alpha={}, base=({}, {}))",
            self.inner.node_count(),
            b.k(),
            b.alpha(),
            b.n(),
            b.k()
        )
    }
}

fn cost_model(seek: Option<&Bound<'_, PyAny>>, rate: Option<&Bound<'_, PyAny>>, sub: u64) -> PyResult<CostModel> {
    let seek = seek.map(rational).transpose()?.unwrap_or_else(|| Q::from_integer(0));
    let rate = rate.map(rational).transpose()?.unwrap_or_else(|| Q::from_integer(1));
    CostModel::new(seek, rate, sub).map_err(to_py)
}

/// Which rows to read from which helpers, and how to combine them.
#[pyclass(name = "Plan", module = "hashtag", frozen)]
struct PyPlan {
    inner: RepairPlan,
}

#[pymethods]
impl PyPlan {
    #[getter]
    fn failed_node(&self) -> usize {
        self.inner.failed_node
    }

    #[getter]
    fn strategy(&self) -> &'static str {
        self.inner.strategy.name()
    }

    #[getter]
    fn reads(&self) -> Vec<(usize, Vec<usize>)> {
        self.inner.reads.iter().map(|r| (r.node, r.rows.clone())).collect()
    }

    #[getter]
    fn bandwidth(&self) -> usize {
        self.inner.bandwidth_subpackets()
    }

    #[getter]
    fn helpers(&self) -> Vec<usize> {
        self.inner.helpers()
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    /// Repairs from full helper columns given as `{node: column}`; only the
    /// planned rows are looked at.
    fn execute(&self, columns: HashMap<usize, Vec<u32>>) -> PyResult<Vec<u16>> {
        let field = self.inner.recovery().field().clone();
        let out = execute(&self.inner, |node, rows| {
            let col = columns.get(&node).ok_or_else(|| Error::MissingRead {
                node,
                rows: rows.to_vec(),
            })?;
            rows.iter()
                .map(|&j| {
                    let v = *col.get(j - 1).ok_or_else(|| Error::MissingRead {
                        node,
                        rows: vec![j],
                    })?;
                    field.elem(v)
                })
                .collect()
        })
        .map_err(to_py)?;
        Ok(values(&out))
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(node={}, strategy={}, bandwidth={}, helpers={})",
            self.inner.failed_node,
            self.inner.strategy,
            self.inner.bandwidth_subpackets(),
            self.inner.helper_count()
        )
    }
}

/// Bandwidth bounds as fractions: general, msr, local_term, local_min.
#[pyfunction]
fn bounds<'py>(
    py: Python<'py>,
    m: &Bound<'py, PyAny>,
    n: usize,
    k: usize,
    d: usize,
    l: usize,
    delta: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let b = core_bounds(rational(m)?, n, k, d, l, delta).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("general", fraction(py, b.general)?)?;
    out.set_item("msr", fraction(py, b.msr)?)?;
    out.set_item("local_term", fraction(py, b.local_term)?)?;
    out.set_item("local_min", fraction(py, b.local_min)?)?;
    Ok(out)
}

/// Stripes `input` into `out_dir`; returns the manifest as JSON text.
#[pyfunction]
#[pyo3(signature = (input, out_dir, code, subpacket_bytes=1000))]
fn encode_file(input: PathBuf, out_dir: PathBuf, code: &PyCode, subpacket_bytes: u64) -> PyResult<String> {
    let m = core_encode_file(&input, &out_dir, &code.inner, subpacket_bytes).map_err(to_py)?;
    Ok(m.to_json())
}

/// Rebuilds the original file; returns the nodes that were used.
#[pyfunction]
fn decode_dir(dir: PathBuf, output: PathBuf) -> PyResult<Vec<usize>> {
    Ok(core_decode_dir(&dir, &output).map_err(to_py)?.used_nodes)
}

/// Regenerates a lost shard in place; returns read statistics.
#[pyfunction]
#[pyo3(signature = (dir, node, strategy="auto", seek_cost=None, rate=None))]
fn repair<'py>(
    py: Python<'py>,
    dir: PathBuf,
    node: usize,
    strategy: &str,
    seek_cost: Option<&Bound<'_, PyAny>>,
    rate: Option<&Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = Manifest::load(&dir).map_err(to_py)?;
    let code = m.code().map_err(to_py)?;
    let cm = cost_model(seek_cost, rate, m.stripe.subpacket_bytes)?;
    let (plan, _) = plan_repair(&code, node, strategy_choice(strategy)?, &cm).map_err(to_py)?;
    let stats = repair_shard(&dir, &m, &plan).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("strategy", plan.strategy.name())?;
    out.set_item("read_ops", stats.read_ops)?;
    out.set_item("bytes_read", stats.bytes_read)?;
    out.set_item("helpers", plan.helpers())?;
    Ok(out)
}

#[pymodule]
fn hashtag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCode>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(encode_file, m)?)?;
    m.add_function(wrap_pyfunction!(decode_dir, m)?)?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add("IntegrityError", m.py().get_type::<IntegrityError>())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names() {
        assert_eq!(strategy_choice("auto").unwrap(), StrategyChoice::Auto);
        assert_eq!(strategy_choice("msr").unwrap(), StrategyChoice::Msr);
        assert!(strategy_choice("fast").is_err());
    }
}
