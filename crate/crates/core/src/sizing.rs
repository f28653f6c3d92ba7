//! Population sizing: success probabilities, bisection for the minimum
//! population size, scalability sweeps, closed-form predictors and
//! scaling-law fits.

use std::time::Instant;

use rayon::prelude::*;

use crate::engine::{run_observed, AlgorithmConfig, RunResult};
use crate::error::{invalid, Error, Result};
use crate::problems::{ProblemKind, ProblemSpec, RepresentativeMode};
use crate::rng::{derive_seed, RngStream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizingParams {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
    pub t: usize,
    pub n_opt: u64,
}

impl SizingParams {
    /// Unit constants and a confidence of 0.9.
    pub fn new(n_opt: u64, t: usize) -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            gamma: 0.9,
            t,
            n_opt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionConfig {
    pub n_start: usize,
    /// Verification runs per size; a size passes when all succeed.
    pub runs: usize,
    pub repeats: usize,
    pub n_max: usize,
    /// Runs still going at this instant abort with `DeadlineExceeded`.
    pub deadline: Option<Instant>,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            n_start: 16,
            runs: 10,
            repeats: 10,
            n_max: 1 << 22,
            deadline: None,
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_start < 2 {
            return Err(invalid(format!("n_start must be >= 2 (got {})", self.n_start)));
        }
        if self.runs == 0 || self.repeats == 0 {
            return Err(invalid("runs and repeats must be >= 1"));
        }
        if self.n_max < self.n_start {
            return Err(invalid(format!(
                "n_max = {} is below n_start = {}",
                self.n_max, self.n_start
            )));
        }
        Ok(())
    }
}

fn representative_count(problem: &ProblemSpec, mode: RepresentativeMode) -> u64 {
    match mode {
        RepresentativeMode::Genotype => problem.pareto_genotype_count().unwrap_or(u64::MAX),
        RepresentativeMode::Objective => problem.m_d() as u64 + 1,
    }
}

fn deadline_guard(deadline: Option<Instant>) -> impl FnMut(&crate::engine::GenerationReport) -> Result<()> {
    move |_| match deadline {
        Some(d) if Instant::now() >= d => Err(Error::DeadlineExceeded),
        _ => Ok(()),
    }
}

fn one_run(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    mode: RepresentativeMode,
    rng: RngStream,
    deadline: Option<Instant>,
) -> Result<RunResult> {
    run_observed(problem, algo, n, mode, rng, deadline_guard(deadline))
}

/// Fraction of `runs` runs that end with full coverage. Run `r` uses stream
/// `r` of `master_seed`. Below the pigeonhole bound nothing is run.
pub fn success_probability(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    mode: RepresentativeMode,
    runs: usize,
    master_seed: u64,
) -> Result<f64> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    if (n as u64) < representative_count(problem, mode) {
        return Ok(0.0);
    }
    let successes = (0..runs as u64)
        .into_par_iter()
        .map(|r| run_observed(problem, algo, n, mode, RngStream::new(master_seed, r), |_| Ok(())).map(|x| x.success))
        .collect::<Result<Vec<bool>>>()?;
    Ok(successes.iter().filter(|&&s| s).count() as f64 / runs as f64)
}

/// Runs the verification batch for one size. Returns the mean of
/// `n * (g_star + 1)` over the runs when all succeed, `None` otherwise.
/// Remaining runs are skipped once a failure is found.
fn verify_size(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    mode: RepresentativeMode,
    runs: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> Result<Option<f64>> {
    if (n as u64) < representative_count(problem, mode) {
        return Ok(None);
    }
    enum Stop {
        Failed,
        Error(Error),
    }
    let evals = (0..runs as u64)
        .into_par_iter()
        .map(|r| match one_run(problem, algo, n, mode, RngStream::new(seed, r), deadline) {
            Ok(res) => res
                .evaluations_to_coverage()
                .map(|e| e as f64)
                .ok_or(Stop::Failed),
            Err(e) => Err(Stop::Error(e)),
        })
        .collect::<std::result::Result<Vec<f64>, Stop>>();
    let evals = match evals {
        Ok(v) => v,
        Err(Stop::Failed) => return Ok(None),
        Err(Stop::Error(e)) => return Err(e),
    };
    Ok(Some(evals.iter().sum::<f64>() / runs as f64))
}

/// Bracketing search for the smallest passing size. Doubles from `n_start`
/// until `test` passes (or halves while it keeps passing), then bisects the
/// (fail, pass] bracket until hi/lo <= 1.1 or hi - lo <= 2 and returns the
/// passing end together with its payload.
pub fn bisect_with<T>(
    n_start: usize,
    n_max: usize,
    mut test: impl FnMut(usize) -> Result<Option<T>>,
) -> Result<(usize, T)> {
    if n_start < 2 || n_max < n_start {
        return Err(invalid(format!("need 2 <= n_start <= n_max (got {n_start}, {n_max})")));
    }
    let (mut lo, mut hi, mut best);
    match test(n_start)? {
        Some(v) => {
            hi = n_start;
            best = v;
            lo = 1;
            while hi / 2 >= 2 {
                let c = hi / 2;
                match test(c)? {
                    Some(v) => {
                        hi = c;
                        best = v;
                    }
                    None => {
                        lo = c;
                        break;
                    }
                }
            }
        }
        None => {
            lo = n_start;
            loop {
                let c = lo.saturating_mul(2).min(n_max);
                if c == lo {
                    return Err(Error::InfeasibleAtBudget {
                        last_failing: lo,
                        n_max,
                    });
                }
                if let Some(v) = test(c)? {
                    hi = c;
                    best = v;
                    break;
                }
                lo = c;
            }
        }
    }
    while !(hi as f64 / lo as f64 <= 1.1 || hi - lo <= 2) {
        let mid = lo + (hi - lo) / 2;
        match test(mid)? {
            Some(v) => {
                hi = mid;
                best = v;
            }
            None => lo = mid,
        }
    }
    Ok((hi, best))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionOutcome {
    /// Minimum passing size found by each repetition.
    pub n_min: Vec<usize>,
    /// Mean evaluations to lasting coverage at each repetition's `n_min`.
    pub evaluations: Vec<f64>,
}

impl BisectionOutcome {
    pub fn n_min_stats(&self) -> (f64, f64) {
        mean_std(&self.n_min.iter().map(|&n| n as f64).collect::<Vec<_>>())
    }

    pub fn evaluation_stats(&self) -> (f64, f64) {
        mean_std(&self.evaluations)
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Repetition `i` draws its seeds from `derive_seed(master_seed, [i])`, and
/// size `n` within it from `derive_seed(that, [n])`, so each verification
/// batch is a pure function of (repetition, n).
pub fn bisection_min_popsize(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    mode: RepresentativeMode,
    cfg: &BisectionConfig,
    master_seed: u64,
) -> Result<BisectionOutcome> {
    cfg.validate()?;
    algo.validate()?;
    let mut outcome = BisectionOutcome {
        n_min: Vec::with_capacity(cfg.repeats),
        evaluations: Vec::with_capacity(cfg.repeats),
    };
    for rep in 0..cfg.repeats as u64 {
        let rep_seed = derive_seed(master_seed, &[rep]);
        let (n, evals) = bisect_with(cfg.n_start, cfg.n_max, |n| {
            verify_size(problem, algo, n, mode, cfg.runs, derive_seed(rep_seed, &[n as u64]), cfg.deadline)
        })?;
        outcome.n_min.push(n);
        outcome.evaluations.push(evals);
    }
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub kind: ProblemKind,
    pub m: usize,
    pub k: usize,
    pub d: Option<f64>,
    pub m_d: usize,
    pub ell: usize,
    pub algo: String,
    pub replacement: String,
    pub mode: RepresentativeMode,
    pub n_min_mean: f64,
    pub n_min_std: f64,
    pub evals_mean: f64,
    pub evals_std: f64,
    pub repeats: usize,
    pub master_seed: u64,
}

impl SweepRecord {
    pub fn new(
        problem: &ProblemSpec,
        algo: &AlgorithmConfig,
        mode: RepresentativeMode,
        outcome: &BisectionOutcome,
        master_seed: u64,
    ) -> Self {
        let (n_min_mean, n_min_std) = outcome.n_min_stats();
        let (evals_mean, evals_std) = outcome.evaluation_stats();
        Self {
            kind: problem.kind(),
            m: problem.m(),
            k: problem.k(),
            d: problem.d(),
            m_d: problem.m_d(),
            ell: problem.ell(),
            algo: algo.variation.kind.as_str().to_string(),
            replacement: algo.replacement.as_str().to_string(),
            mode,
            n_min_mean,
            n_min_std,
            evals_mean,
            evals_std,
            repeats: outcome.n_min.len(),
            master_seed,
        }
    }
}

/// One bisection per problem; spec `i` uses `derive_seed(master_seed, [i])`.
/// A failing spec yields its error in place without stopping the sweep.
pub fn scalability_sweep(
    family: &[ProblemSpec],
    algo: &AlgorithmConfig,
    mode: RepresentativeMode,
    cfg: &BisectionConfig,
    master_seed: u64,
) -> Result<Vec<Result<SweepRecord>>> {
    if family.is_empty() {
        return Err(invalid("sweep needs at least one problem"));
    }
    Ok(family
        .iter()
        .enumerate()
        .map(|(i, p)| {
            bisection_min_popsize(p, algo, mode, cfg, derive_seed(master_seed, &[i as u64]))
                .map(|o| SweepRecord::new(p, algo, mode, &o, master_seed))
        })
        .collect())
}

/// `c1 * 2^k * m * log2(m)`.
pub fn predict_eda_popsize(k: usize, m: usize, c1: f64) -> Result<f64> {
    if m < 2 {
        return Err(invalid(format!("EDA sizing needs m >= 2 (got {m})")));
    }
    if k == 0 || !(c1 > 0.0) {
        return Err(invalid("EDA sizing needs k >= 1 and c1 > 0"));
    }
    Ok(c1 * 2f64.powi(k as i32) * m as f64 * (m as f64).log2())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NichingPrediction {
    pub exact: f64,
    pub approx: f64,
}

/// Population needed to keep all `n_opt` niches for `t` generations with
/// confidence `gamma`: `ln((1 - gamma^(1/t)) / n_opt) / ln((n_opt - 1) / n_opt)`,
/// and the linear approximation `c2 * n_opt`.
pub fn predict_niching_popsize(params: &SizingParams) -> Result<NichingPrediction> {
    if params.n_opt < 2 {
        return Err(invalid(format!("niching sizing needs n_opt >= 2 (got {})", params.n_opt)));
    }
    if !(params.gamma > 0.0 && params.gamma < 1.0) || params.t == 0 {
        return Err(invalid("niching sizing needs 0 < gamma < 1 and t >= 1"));
    }
    let n_opt = params.n_opt as f64;
    let exact = ((1.0 - params.gamma.powf(1.0 / params.t as f64)) / n_opt).ln() / ((n_opt - 1.0) / n_opt).ln();
    Ok(NichingPrediction {
        exact,
        approx: params.c2 * n_opt,
    })
}

/// `floor(k + log2 m)` clamped to `m`.
pub fn max_competing_substructures(m: usize, k: usize) -> usize {
    if m == 0 {
        return 0;
    }
    let floor_log2 = (usize::BITS - 1 - m.leading_zeros()) as usize;
    (k + floor_log2).min(m)
}

/// The `m_d` at which the niching requirement `c2 * 2^m_d` equals the EDA
/// requirement, keeping the `log2(c1 * log2 m / c2)` term.
pub fn exact_crossing_md(k: usize, m: usize, c1: f64, c2: f64) -> Result<f64> {
    if !(c2 > 0.0) {
        return Err(invalid("c2 must be > 0"));
    }
    Ok((predict_eda_popsize(k, m, c1)? / c2).log2())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in the fitted (log) space.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    /// `ln(value)` against `ln(ell)`.
    pub power: LinearFit,
    /// `ln(value)` against `ell`; the slope is a natural-log growth rate.
    pub exponential: LinearFit,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    LinearFit {
        slope,
        intercept,
        residual,
    }
}

pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(invalid(format!("need at least 3 points (got {})", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(invalid("scaling fits need positive sizes and values"));
    }
    let first = points[0].0;
    if points.iter().all(|&(x, _)| x == first) {
        return Err(invalid("scaling fits need at least two distinct sizes"));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    Ok(ScalingFit {
        power: least_squares(&lx, &ys),
        exponential: least_squares(&x, &ys),
    })
}
