//! Python bindings. Genomes cross the boundary as `"0101"` strings and
//! objective vectors as `(f1, f2)` tuples.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use moeda::sizing::{self, BisectionConfig, SizingParams};
use moeda::variation::{self, MarginalProductModel};
use moeda::{
    AlgorithmConfig, Error, Genome, Individual, ObjectiveVector, Population, ProblemSpec,
    ReplacementScheme, RepresentativeMode, RepresentativeSet, RngStream, TiePolicy, VariationKind,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Usage(_) | Error::Capacity(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn genomes_of(strings: &[String]) -> PyResult<Population> {
    let genomes = strings.iter().map(|s| parse::<Genome>(s)).collect::<PyResult<Vec<_>>>()?;
    Population::from_genomes(genomes).map_err(py_err)
}

fn signal(k: usize, d: Option<f64>) -> PyResult<f64> {
    d.or_else(|| moeda::default_signal(k))
        .ok_or_else(|| PyValueError::new_err(format!("no default signal difference for k = {k}")))
}

#[pyclass(name = "Problem", module = "moeda_py", frozen)]
struct PyProblem {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    #[pyo3(signature = (m, k = 3, d = None))]
    fn trap_invtrap(m: usize, k: usize, d: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: ProblemSpec::trap_invtrap(m, k, signal(k, d)?).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn onemax_zeromax(ell: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ProblemSpec::onemax_zeromax(ell).map_err(py_err)?,
        })
    }

    /// `m_d = None` uses the competing-substructure estimate floor(k + log2 m).
    #[staticmethod]
    #[pyo3(signature = (m, k = 3, m_d = None, d = None))]
    fn overlap(m: usize, k: usize, m_d: Option<usize>, d: Option<f64>) -> PyResult<Self> {
        let m_d = m_d.unwrap_or_else(|| sizing::max_competing_substructures(m, k));
        Ok(Self {
            inner: ProblemSpec::overlap(m, k, signal(k, d)?, m_d).map_err(py_err)?,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> Option<f64> {
        self.inner.d()
    }

    #[getter]
    fn m_d(&self) -> usize {
        self.inner.m_d()
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell()
    }

    fn evaluate(&self, genome: &str) -> PyResult<(f64, f64)> {
        let o = self.inner.evaluate(&parse(genome)?).map_err(py_err)?;
        Ok((o.f1, o.f2))
    }

    /// Pareto-optimal genomes, sorted.
    fn genotype_representatives(&self) -> PyResult<Vec<String>> {
        match self.inner.representative_set(RepresentativeMode::Genotype).map_err(py_err)? {
            RepresentativeSet::Genotype(g) => Ok(g.iter().map(ToString::to_string).collect()),
            RepresentativeSet::Objective(_) => unreachable!(),
        }
    }

    /// Distinct objective points of the front.
    fn objective_representatives(&self) -> PyResult<Vec<(f64, f64)>> {
        match self.inner.representative_set(RepresentativeMode::Objective).map_err(py_err)? {
            RepresentativeSet::Objective(p) => Ok(p.iter().map(|o| (o.f1, o.f2)).collect()),
            RepresentativeSet::Genotype(_) => unreachable!(),
        }
    }

    /// Exhaustive non-dominated set (genome length at most 24).
    fn pareto_oracle(&self) -> PyResult<Vec<String>> {
        let set = moeda::pareto_oracle_bruteforce(&self.inner).map_err(py_err)?;
        Ok(set.genotypes().unwrap_or_default().iter().map(ToString::to_string).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(kind={}, m={}, k={}, m_d={}, ell={})",
            self.inner.kind(),
            self.inner.m(),
            self.inner.k(),
            self.inner.m_d(),
            self.inner.ell()
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn algorithm(
    algo: &str,
    replacement: &str,
    window: Option<usize>,
    tie_policy: Option<&str>,
    pc: Option<f64>,
    pm: Option<f64>,
    max_generations: Option<usize>,
) -> PyResult<AlgorithmConfig> {
    let kind: VariationKind = parse(algo)?;
    let mut scheme: ReplacementScheme = parse(replacement)?;
    if let ReplacementScheme::Rts(cfg) = &mut scheme {
        cfg.window = window;
        if let Some(t) = tie_policy {
            cfg.tie_policy = parse::<TiePolicy>(t)?;
        }
    }
    let mut cfg = AlgorithmConfig::new(kind, scheme);
    if let Some(pc) = pc {
        cfg.variation.pc = pc;
    }
    cfg.variation.pm = pm;
    cfg.max_generations = max_generations;
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

#[pyfunction]
fn trap(u: usize, k: usize, d: f64) -> PyResult<f64> {
    moeda::problems::trap(u, k, d).map_err(py_err)
}

#[pyfunction]
fn invtrap(u: usize, k: usize, d: f64) -> PyResult<f64> {
    moeda::problems::invtrap(u, k, d).map_err(py_err)
}

#[pyfunction]
fn niche_counts(m: usize) -> PyResult<Vec<u64>> {
    moeda::niche_counts(m).map_err(py_err)
}

#[pyfunction]
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    moeda::dominates(&ObjectiveVector::new(a.0, a.1), &ObjectiveVector::new(b.0, b.1))
}

#[pyfunction]
fn hamming_distance(a: &str, b: &str) -> PyResult<usize> {
    moeda::hamming_distance(&parse(a)?, &parse(b)?).map_err(py_err)
}

/// Ranks (1 = non-dominated) and crowding distances of a list of points.
#[pyfunction]
fn nondominated_sort(points: Vec<(f64, f64)>) -> PyResult<(Vec<u32>, Vec<f64>)> {
    let members = points
        .iter()
        .map(|&(a, b)| Individual::evaluated(Genome::zeros(1), ObjectiveVector::new(a, b)))
        .collect();
    let ranked = moeda::nondominated_sort(Population::new(members).map_err(py_err)?).map_err(py_err)?;
    let crowding = ranked.members().iter().map(|m| m.crowding().unwrap_or(0.0)).collect();
    Ok((ranked.ranks(), crowding))
}

#[pyfunction]
fn model_complexity(group_sizes: Vec<usize>, n: usize) -> PyResult<f64> {
    variation::model_complexity_of_sizes(&group_sizes, n).map_err(py_err)
}

/// Compressed population complexity of `genomes` under the given grouping.
#[pyfunction]
fn compressed_population_complexity(groups: Vec<Vec<usize>>, genomes: Vec<String>) -> PyResult<f64> {
    let pop = genomes_of(&genomes)?;
    let model = MarginalProductModel::fit(groups, &pop).map_err(py_err)?;
    variation::compressed_population_complexity(&model, &pop).map_err(py_err)
}

/// Greedy MDL model search; returns the groups and the model dump.
#[pyfunction]
#[pyo3(signature = (genomes, max_group = 8))]
fn greedy_mpm_search(genomes: Vec<String>, max_group: usize) -> PyResult<(Vec<Vec<usize>>, String)> {
    let model = variation::greedy_mpm_search(&genomes_of(&genomes)?, max_group).map_err(py_err)?;
    Ok((model.groups().to_vec(), model.to_string()))
}

#[pyfunction]
#[pyo3(signature = (genomes, n_out, seed, stream = 0))]
fn sample_univariate(genomes: Vec<String>, n_out: usize, seed: u64, stream: u64) -> PyResult<Vec<String>> {
    let model = variation::fit_univariate(&genomes_of(&genomes)?).map_err(py_err)?;
    let out = variation::sample_univariate(&model, n_out, &mut RngStream::new(seed, stream));
    Ok(out.genomes().map(ToString::to_string).collect())
}

/// One run; returns a dict with success, g_star, evaluations and the coverage trajectory.
#[pyfunction]
#[pyo3(signature = (problem, n, seed, algo = "mecga", replacement = "rts", mode = "genotype", stream = 0, window = None, tie_policy = None, pc = None, pm = None, max_generations = None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    n: usize,
    seed: u64,
    algo: &str,
    replacement: &str,
    mode: &str,
    stream: u64,
    window: Option<usize>,
    tie_policy: Option<&str>,
    pc: Option<f64>,
    pm: Option<f64>,
    max_generations: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = algorithm(algo, replacement, window, tie_policy, pc, pm, max_generations)?;
    let mode: RepresentativeMode = parse(mode)?;
    let spec = problem.inner.clone();
    let r = py
        .detach(move || moeda::run(&spec, &cfg, n, mode, RngStream::new(seed, stream)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("success", r.success)?;
    d.set_item("g_star", r.g_star)?;
    d.set_item("generations_run", r.generations_run)?;
    d.set_item("evaluations", r.evaluations)?;
    d.set_item("evaluations_to_coverage", r.evaluations_to_coverage())?;
    d.set_item("coverage_trajectory", r.coverage_trajectory)?;
    d.set_item("points_covered", r.points_covered)?;
    d.set_item("per_point_coverage", r.per_point_coverage)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (problem, n, runs, seed, algo = "mecga", replacement = "rts", mode = "genotype"))]
#[allow(clippy::too_many_arguments)]
fn success_probability(
    py: Python<'_>,
    problem: &PyProblem,
    n: usize,
    runs: usize,
    seed: u64,
    algo: &str,
    replacement: &str,
    mode: &str,
) -> PyResult<f64> {
    let cfg = algorithm(algo, replacement, None, None, None, None, None)?;
    let mode: RepresentativeMode = parse(mode)?;
    let spec = problem.inner.clone();
    py.detach(move || sizing::success_probability(&spec, &cfg, n, mode, runs, seed))
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (problem, n, runs, seed, algo = "mecga", replacement = "rts"))]
fn niche_maintenance_probability(
    py: Python<'_>,
    problem: &PyProblem,
    n: usize,
    runs: usize,
    seed: u64,
    algo: &str,
    replacement: &str,
) -> PyResult<Vec<f64>> {
    let cfg = algorithm(algo, replacement, None, None, None, None, None)?;
    let spec = problem.inner.clone();
    py.detach(move || moeda::niche_maintenance_probability(&spec, &cfg, n, runs, seed))
        .map_err(py_err)
}

/// Minimum population size per repetition and the mean evaluations at it.
#[pyfunction]
#[pyo3(signature = (problem, seed, algo = "mecga", replacement = "rts", mode = "genotype", n_start = 16, runs = 10, repeats = 10, n_max = 1 << 22))]
#[allow(clippy::too_many_arguments)]
fn bisection_min_popsize(
    py: Python<'_>,
    problem: &PyProblem,
    seed: u64,
    algo: &str,
    replacement: &str,
    mode: &str,
    n_start: usize,
    runs: usize,
    repeats: usize,
    n_max: usize,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let cfg = algorithm(algo, replacement, None, None, None, None, None)?;
    let mode: RepresentativeMode = parse(mode)?;
    let bisection = BisectionConfig {
        n_start,
        runs,
        repeats,
        n_max,
        deadline: None,
    };
    let spec = problem.inner.clone();
    let o = py
        .detach(move || sizing::bisection_min_popsize(&spec, &cfg, mode, &bisection, seed))
        .map_err(py_err)?;
    Ok((o.n_min, o.evaluations))
}

#[pyfunction]
#[pyo3(signature = (k, m, c1 = 1.0))]
fn predict_eda_popsize(k: usize, m: usize, c1: f64) -> PyResult<f64> {
    sizing::predict_eda_popsize(k, m, c1).map_err(py_err)
}

/// Returns `(exact, approx)`.
#[pyfunction]
#[pyo3(signature = (n_opt, t, gamma = 0.9, c2 = 1.0))]
fn predict_niching_popsize(n_opt: u64, t: usize, gamma: f64, c2: f64) -> PyResult<(f64, f64)> {
    let params = SizingParams {
        gamma,
        c2,
        ..SizingParams::new(n_opt, t)
    };
    let p = sizing::predict_niching_popsize(&params).map_err(py_err)?;
    Ok((p.exact, p.approx))
}

#[pyfunction]
fn max_competing_substructures(m: usize, k: usize) -> usize {
    sizing::max_competing_substructures(m, k)
}

/// Returns `((power_slope, power_residual), (exp_slope, exp_residual))`.
#[pyfunction]
fn fit_scaling_exponent(points: Vec<(f64, f64)>) -> PyResult<((f64, f64), (f64, f64))> {
    let fit = sizing::fit_scaling_exponent(&points).map_err(py_err)?;
    Ok((
        (fit.power.slope, fit.power.residual),
        (fit.exponential.slope, fit.exponential.residual),
    ))
}

#[pymodule]
fn moeda_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(trap, m)?)?;
    m.add_function(wrap_pyfunction!(invtrap, m)?)?;
    m.add_function(wrap_pyfunction!(niche_counts, m)?)?;
    m.add_function(wrap_pyfunction!(dominates, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_distance, m)?)?;
    m.add_function(wrap_pyfunction!(nondominated_sort, m)?)?;
    m.add_function(wrap_pyfunction!(model_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(compressed_population_complexity, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_mpm_search, m)?)?;
    m.add_function(wrap_pyfunction!(sample_univariate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(niche_maintenance_probability, m)?)?;
    m.add_function(wrap_pyfunction!(bisection_min_popsize, m)?)?;
    m.add_function(wrap_pyfunction!(predict_eda_popsize, m)?)?;
    m.add_function(wrap_pyfunction!(predict_niching_popsize, m)?)?;
    m.add_function(wrap_pyfunction!(max_competing_substructures, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling_exponent, m)?)?;
    Ok(())
}
