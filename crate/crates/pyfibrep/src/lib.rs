//! Python bindings for `fibrep`.

use num_bigint::{BigInt, BigUint};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fibrep::claims::{builtin_claims, verify_claims};
use fibrep::contfrac::{cf_expand_with, Golden, RealProducer, Tau};
use fibrep::reduction::{self, FamilySpec, ReductionError, StepId, XKind, XRange, YKind, YRange};
use fibrep::repdigit::{self, LengthOrder};
use fibrep::search::{self as fsearch, SearchConfig, TermMode};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn reduction_err(e: ReductionError) -> PyErr {
    if e.is_precision_exhausted() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

fn to_py_json<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

pub fn parse_mode(s: &str) -> Result<TermMode, String> {
    s.parse()
}

pub fn parse_lengths(s: &str) -> Result<LengthOrder, String> {
    match s {
        "free" => Ok(LengthOrder::Free),
        "nondecreasing" => Ok(LengthOrder::Nondecreasing),
        o => Err(format!("lengths must be free or nondecreasing, got {o}")),
    }
}

/// Three repdigit blocks `d1^l1 d2^l2 d3^l3` in a base.
#[pyclass(name = "Pattern", frozen, eq, hash, from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PyPattern(repdigit::Pattern);

#[pymethods]
impl PyPattern {
    #[new]
    fn new(base: u32, d1: u32, l1: u32, d2: u32, l2: u32, d3: u32, l3: u32) -> PyResult<Self> {
        repdigit::Pattern::new(base, [(d1, l1), (d2, l2), (d3, l3)]).map(PyPattern).map_err(value_err)
    }

    /// Parse `"d1,l1,d2,l2,d3,l3"`.
    #[staticmethod]
    fn parse(base: u32, text: &str) -> PyResult<Self> {
        repdigit::Pattern::parse(base, text).map(PyPattern).map_err(value_err)
    }

    #[getter]
    fn base(&self) -> u32 {
        self.0.base
    }

    fn tuple(&self) -> (u32, u32, u32, u32, u32, u32) {
        let t = self.0.tuple();
        (t[0], t[1], t[2], t[3], t[4], t[5])
    }

    fn value(&self) -> BigUint {
        self.0.value()
    }

    fn render(&self) -> String {
        self.0.render()
    }

    fn __repr__(&self) -> String {
        let t = self.0.tuple();
        format!("Pattern(base={}, {:?})", self.0.base, t)
    }
}

/// A distinct sum in one base with all its witnesses.
#[pyclass(name = "Solution", frozen, skip_from_py_object)]
pub struct PySolution(fsearch::Solution);

#[pymethods]
impl PySolution {
    #[getter]
    fn value(&self) -> BigUint {
        self.0.value.clone()
    }

    #[getter]
    fn base(&self) -> u32 {
        self.0.base
    }

    #[getter]
    fn triples(&self) -> Vec<(u32, u32, u32)> {
        self.0.triples.iter().map(|t| (t.n1, t.n2, t.n3)).collect()
    }

    #[getter]
    fn patterns(&self) -> Vec<PyPattern> {
        self.0.patterns.iter().copied().map(PyPattern).collect()
    }

    fn representation(&self) -> String {
        self.0.representation()
    }

    fn __repr__(&self) -> String {
        format!("Solution(base={}, value={}, representation={:?})", self.0.base, self.0.value, self.0.representation())
    }
}

#[pyfunction]
fn fib(n: u64) -> BigUint {
    fibrep::fibonacci::fib(n)
}

#[pyfunction]
fn decompose(value: BigUint, base: u32) -> PyResult<Vec<PyPattern>> {
    if !(2..=repdigit::MAX_BASE).contains(&base) {
        return Err(value_err(format!("base {base} out of range")));
    }
    Ok(repdigit::decompose(&value, base).into_iter().map(PyPattern).collect())
}

/// Exhaustive search; returns `{base: [Solution, ...]}` sorted by value.
#[pyfunction]
#[pyo3(signature = (bases = vec![2, 3, 4, 5, 6, 7, 8, 9, 10], n_max = 74, lsum_max = 76, mode = "three", min_index = 0, lengths = "free"))]
fn search(
    py: Python<'_>,
    bases: Vec<u32>,
    n_max: u32,
    lsum_max: u32,
    mode: &str,
    min_index: u32,
    lengths: &str,
) -> PyResult<Vec<(u32, Vec<PySolution>)>> {
    let cfg = SearchConfig {
        bases,
        n1_max: n_max,
        lsum_max,
        term_mode: parse_mode(mode).map_err(value_err)?,
        min_index,
        length_order: parse_lengths(lengths).map_err(value_err)?,
    };
    let r = py.detach(|| fsearch::forward_search(&cfg)).map_err(value_err)?;
    Ok(r.into_iter().map(|(b, m)| (b, m.into_values().map(PySolution).collect())).collect())
}

/// Distinct-sum counts per base for the default search box.
#[pyfunction]
#[pyo3(signature = (mode = "three"))]
fn counts(py: Python<'_>, mode: &str) -> PyResult<Vec<(u32, usize)>> {
    let mode = parse_mode(mode).map_err(value_err)?;
    let r = py.detach(|| fsearch::forward_search(&SearchConfig::default())).map_err(value_err)?;
    let r = if mode == TermMode::Three { r } else { fsearch::corollary_filter(&r, mode) };
    Ok(fsearch::counts(&r).into_iter().collect())
}

/// Check the bundled table values; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (with_search = true))]
fn verify(py: Python<'_>, with_search: bool) -> PyResult<Bound<'_, PyAny>> {
    let report = py.detach(|| {
        let s = if with_search { fsearch::forward_search(&SearchConfig::default()).ok() } else { None };
        verify_claims(&builtin_claims(), s.as_ref())
    });
    to_py_json(py, &report)
}

/// `(lower, upper)` of the linear-forms constant `C(s, d)`.
#[pyfunction]
fn baker_constant(s: u32, d: u32) -> PyResult<(String, String)> {
    if s == 0 || d == 0 {
        return Err(value_err("s and d must be positive"));
    }
    let c = fibrep::bounds::baker_constant(s, d);
    Ok((c.lower_sig(8), c.upper_sig(8)))
}

#[pyfunction]
fn theorem_bound(py: Python<'_>, base: u32) -> PyResult<Bound<'_, PyAny>> {
    if !(2..=repdigit::MAX_BASE).contains(&base) {
        return Err(value_err(format!("base {base} out of range")));
    }
    let t = fibrep::bounds::theorem1_bound(base).map_err(value_err)?;
    to_py_json(py, &t)
}

/// First `count` convergents `(a, p, q)` of `log b / log alpha`, or of alpha with `base=None`.
#[pyfunction]
#[pyo3(signature = (base = None, count = 20))]
fn convergents(base: Option<u32>, count: usize) -> PyResult<Vec<(BigInt, BigInt, BigInt)>> {
    let prod: Box<dyn RealProducer> = match base {
        None => Box::new(Golden),
        Some(b) if (2..=repdigit::MAX_BASE).contains(&b) => Box::new(Tau(b)),
        Some(b) => return Err(value_err(format!("base {b} out of range"))),
    };
    let cf = cf_expand_with(prod.as_ref(), &BigInt::from(1), count.max(1)).map_err(value_err)?;
    Ok((0..count.min(cf.len())).map(|i| (cf.partial_quotients[i].clone(), cf.p[i].clone(), cf.q[i].clone())).collect())
}

/// Reduce one step family; returns the family report as a dict.
#[pyfunction]
#[pyo3(signature = (base, step, m = None, d1 = None, l1_max = 1, l2_max = 1, k_max = 0, m_max = 0, selection = "first"))]
#[allow(clippy::too_many_arguments)]
fn reduce_step<'py>(
    py: Python<'py>,
    base: u32,
    step: &str,
    m: Option<BigInt>,
    d1: Option<u32>,
    l1_max: u32,
    l2_max: u32,
    k_max: u32,
    m_max: u32,
    selection: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let id = StepId::parse(step).ok_or_else(|| value_err(format!("unknown step {step}")))?;
    let (xk, yk) = id.shape();
    let mut x = match xk {
        XKind::X1 => XRange::x1(),
        XKind::X2 => XRange::x2(l1_max),
        XKind::X3 => XRange::x3(l1_max, l2_max, true),
    };
    if let Some(d) = d1 {
        x = x.with_d1(d);
    }
    let y = match yk {
        YKind::Y0 => YRange::y0(),
        YKind::Y1 => YRange::y1(k_max),
        YKind::Y2 => YRange::y2(k_max, m_max),
    };
    let mut spec = FamilySpec::new(base, id.name(), x, y, id.targets(base), m.unwrap_or_else(reduction::default_m));
    spec.selection = parse_selection(selection)?;
    let r = py.detach(|| reduction::family_reduce(&spec)).map_err(reduction_err)?;
    to_py_json(py, &r)
}

fn parse_selection(s: &str) -> PyResult<reduction::Selection> {
    match s {
        "first" => Ok(reduction::Selection::First),
        "best" => Ok(reduction::Selection::Best),
        o => Err(value_err(format!("selection must be first or best, got {o}"))),
    }
}

/// Iterate the full case tree until the bound on `n1` stops falling.
#[pyfunction]
#[pyo3(signature = (base, max_rounds = 8, selection = "first"))]
fn reduce_chain<'py>(py: Python<'py>, base: u32, max_rounds: usize, selection: &str) -> PyResult<Bound<'py, PyDict>> {
    let sel = parse_selection(selection)?;
    let c = py.detach(|| reduction::run_chain(base, max_rounds, sel)).map_err(reduction_err)?;
    let d = PyDict::new(py);
    d.set_item("base", c.base)?;
    d.set_item("final_bound", c.final_bound)?;
    let rounds: Vec<(String, i64)> = c.rounds.iter().map(|r| (r.m.clone(), r.n1_bound)).collect();
    d.set_item("rounds", rounds)?;
    Ok(d)
}

#[pymodule]
fn pyfibrep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPattern>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(fib, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(counts, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(baker_constant, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_bound, m)?)?;
    m.add_function(wrap_pyfunction!(convergents, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_step, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_chain, m)?)?;
    Ok(())
}
