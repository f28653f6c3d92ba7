//! Full generational runs with coverage tracking.
//!
//! One generation: non-dominated sort and crowding on the current
//! population, a binary crowded tournament fills a mating pool of size `n`,
//! the variation operator produces `n` offspring, and the replacement
//! scheme (elitist or RTS) forms the next population. Coverage of the
//! representative set is recorded after every generation, including the
//! random initial one.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::genome::{random_population, Genome, ObjectiveVector, Population};
use crate::pareto::{binary_tournament, nondominated_sort};
use crate::problems::{ProblemSpec, RepresentativeMode, RepresentativeSet, OBJECTIVE_TOL};
use crate::replacement::{elitist_replacement, rts_replace, RtsConfig};
use crate::rng::RngStream;
use crate::variation::{VariationConfig, VariationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplacementScheme {
    /// NSGA-II elitist replacement (crowding).
    Elitist,
    /// Restricted tournament replacement.
    Rts(RtsConfig),
}

impl ReplacementScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReplacementScheme::Elitist => "crowding",
            ReplacementScheme::Rts(_) => "rts",
        }
    }
}

impl fmt::Display for ReplacementScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReplacementScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crowding" | "elitist" => Ok(ReplacementScheme::Elitist),
            "rts" => Ok(ReplacementScheme::Rts(RtsConfig::default())),
            other => Err(invalid(format!("unknown replacement scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub variation: VariationConfig,
    pub replacement: ReplacementScheme,
    /// Generation cap is `cap_multiplier * ell`.
    pub cap_multiplier: usize,
    /// Overrides the multiplier when set; may be zero.
    pub max_generations: Option<usize>,
    /// Stop as soon as coverage reaches 1.
    pub early_stop: bool,
}

impl AlgorithmConfig {
    /// Default caps: 5 ell generations for the EDAs, 10 ell for NSGA-II.
    pub fn new(kind: VariationKind, replacement: ReplacementScheme) -> Self {
        Self {
            variation: VariationConfig::new(kind),
            replacement,
            cap_multiplier: if kind.is_eda() { 5 } else { 10 },
            max_generations: None,
            early_stop: false,
        }
    }

    pub fn generation_cap(&self, ell: usize) -> usize {
        self.max_generations.unwrap_or(self.cap_multiplier * ell)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap_multiplier == 0 {
            return Err(invalid("generation cap multiplier must be >= 1"));
        }
        if let ReplacementScheme::Rts(cfg) = &self.replacement {
            if cfg.window == Some(0) {
                return Err(invalid("RTS window must be >= 1"));
            }
        }
        self.variation.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Full coverage held at the final generation.
    pub success: bool,
    /// First generation from which coverage stayed at 1 through the end.
    pub g_star: Option<usize>,
    pub generations_run: usize,
    /// `n * (generations_run + 1)`, counting the initial population.
    pub evaluations: u64,
    /// Coverage fraction after each generation, starting with generation 0.
    pub coverage_trajectory: Vec<f64>,
    /// Distinct front points present after each generation.
    pub points_covered: Vec<usize>,
    /// Whether each distinct front point is present in the final population.
    pub per_point_coverage: Vec<bool>,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
}

impl RunResult {
    /// Evaluations spent until lasting coverage, `n * (g_star + 1)`.
    pub fn evaluations_to_coverage(&self) -> Option<u64> {
        self.g_star.map(|g| self.n as u64 * (g as u64 + 1))
    }

    pub fn final_coverage(&self) -> f64 {
        self.coverage_trajectory.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationReport {
    pub generation: usize,
    pub coverage: f64,
    pub points_covered: usize,
}

type PointKey = (i64, i64);

fn point_key(o: &ObjectiveVector) -> PointKey {
    (
        (o.f1 / OBJECTIVE_TOL).round() as i64,
        (o.f2 / OBJECTIVE_TOL).round() as i64,
    )
}

enum GenotypeIndex {
    /// Genomes of at most 64 bits, keyed by their single word.
    Packed(Vec<u64>),
    Hashed(HashMap<Genome, usize>),
}

impl GenotypeIndex {
    fn new(genomes: &[Genome]) -> Self {
        if genomes.iter().all(|g| g.len() <= 64) {
            let mut keys: Vec<u64> = genomes.iter().map(|g| g.words().first().copied().unwrap_or(0)).collect();
            keys.sort_unstable();
            keys.dedup();
            GenotypeIndex::Packed(keys)
        } else {
            GenotypeIndex::Hashed(genomes.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect())
        }
    }

    fn len(&self) -> usize {
        match self {
            GenotypeIndex::Packed(k) => k.len(),
            GenotypeIndex::Hashed(m) => m.len(),
        }
    }

    fn find(&self, g: &Genome) -> Option<usize> {
        match self {
            GenotypeIndex::Packed(keys) if g.len() <= 64 => {
                keys.binary_search(&g.words().first().copied().unwrap_or(0)).ok()
            }
            GenotypeIndex::Packed(_) => None,
            GenotypeIndex::Hashed(map) => map.get(g).copied(),
        }
    }
}

/// Looks up population members against a problem's representatives.
struct CoverageIndex {
    mode: RepresentativeMode,
    genotypes: Option<GenotypeIndex>,
    points: HashMap<PointKey, usize>,
}

impl CoverageIndex {
    fn new(problem: &ProblemSpec, mode: RepresentativeMode) -> Result<Self> {
        let genotypes = match mode {
            RepresentativeMode::Genotype => {
                let reps = problem.representative_set(RepresentativeMode::Genotype)?;
                Some(GenotypeIndex::new(reps.genotypes().unwrap_or_default()))
            }
            RepresentativeMode::Objective => None,
        };
        let reps = problem.representative_set(RepresentativeMode::Objective)?;
        let points = reps
            .points()
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(i, p)| (point_key(p), i))
            .collect();
        Ok(Self {
            mode,
            genotypes,
            points,
        })
    }

    /// Coverage fraction in this index's mode and per-point presence.
    fn measure(&self, pop: &Population) -> (f64, Vec<bool>) {
        let mut points = vec![false; self.points.len()];
        for m in pop.iter() {
            if let Some(&i) = m.objectives().and_then(|o| self.points.get(&point_key(&o))) {
                points[i] = true;
            }
        }
        let fraction = match (&self.mode, &self.genotypes) {
            (RepresentativeMode::Genotype, Some(index)) => {
                let mut seen = vec![false; index.len()];
                for g in pop.genomes() {
                    if let Some(i) = index.find(g) {
                        seen[i] = true;
                    }
                }
                fraction_of(&seen)
            }
            _ => fraction_of(&points),
        };
        (fraction, points)
    }
}

fn fraction_of(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 1.0;
    }
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// Fraction of representatives present in `pop`. Objective mode matches
/// points on the `1e-9` grid and needs an evaluated population.
pub fn coverage(pop: &Population, reps: &RepresentativeSet) -> Result<f64> {
    match reps {
        RepresentativeSet::Genotype(genomes) => {
            let index = GenotypeIndex::new(genomes);
            let mut seen = vec![false; index.len()];
            for g in pop.genomes() {
                if let Some(i) = index.find(g) {
                    seen[i] = true;
                }
            }
            Ok(fraction_of(&seen))
        }
        RepresentativeSet::Objective(points) => {
            let present: std::collections::HashSet<PointKey> =
                pop.objectives()?.iter().map(point_key).collect();
            Ok(fraction_of(
                &points.iter().map(|p| present.contains(&point_key(p))).collect::<Vec<_>>(),
            ))
        }
    }
}

pub fn evaluate_population(problem: &ProblemSpec, pop: &mut Population) -> Result<()> {
    if pop.genome_len() != problem.ell() && !pop.is_empty() {
        return Err(invalid("population genome length does not match the problem"));
    }
    for m in pop.members_mut() {
        let obj = problem.evaluate_unchecked(m.genome());
        m.set_objectives(obj);
    }
    Ok(())
}

/// One run from a random population to the generation cap.
pub fn run(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    mode: RepresentativeMode,
    rng: RngStream,
) -> Result<RunResult> {
    run_observed(problem, algo, n, mode, rng, |_| Ok(()))
}

/// As [`run`], calling `observer` after every generation; an observer error aborts the run.
pub fn run_observed(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    mode: RepresentativeMode,
    mut rng: RngStream,
    mut observer: impl FnMut(&GenerationReport) -> Result<()>,
) -> Result<RunResult> {
    if n < 2 {
        return Err(invalid(format!("population size must be >= 2 (got {n})")));
    }
    algo.validate()?;
    let ell = problem.ell();
    if let ReplacementScheme::Rts(cfg) = &algo.replacement {
        if cfg.resolved_window(n, ell) > n {
            return Err(invalid(format!("RTS window exceeds population size {n}")));
        }
    }
    let index = CoverageIndex::new(problem, mode)?;
    let cap = algo.generation_cap(ell);
    let (seed, stream) = (rng.seed(), rng.stream());

    let mut pop = random_population(n, ell, &mut rng)?;
    evaluate_population(problem, &mut pop)?;

    let mut coverage_trajectory = Vec::with_capacity(cap + 1);
    let mut points_covered = Vec::with_capacity(cap + 1);
    let mut per_point = Vec::new();
    let mut record = |generation: usize, pop: &Population| -> Result<()> {
        let (fraction, points) = index.measure(pop);
        let report = GenerationReport {
            generation,
            coverage: fraction,
            points_covered: points.iter().filter(|&&p| p).count(),
        };
        coverage_trajectory.push(fraction);
        points_covered.push(report.points_covered);
        per_point = points;
        observer(&report)
    };
    record(0, &pop)?;

    let mut generations_run = 0;
    for generation in 1..=cap {
        if algo.early_stop && generations_run == generation - 1 && coverage_is_full(&pop, &index) {
            break;
        }
        let ranked = nondominated_sort(pop)?;
        let pool = binary_tournament(&ranked, n, &mut rng)?;
        let parents = ranked.into_population();
        let mut offspring = algo.variation.offspring(&pool, n, &mut rng)?;
        evaluate_population(problem, &mut offspring)?;
        pop = match &algo.replacement {
            ReplacementScheme::Elitist => elitist_replacement(parents, offspring)?,
            ReplacementScheme::Rts(cfg) => {
                let mut current = parents;
                for child in offspring.into_members() {
                    rts_replace(&mut current, child, cfg, &mut rng)?;
                }
                current
            }
        };
        generations_run = generation;
        record(generation, &pop)?;
    }

    let success = coverage_trajectory.last() == Some(&1.0);
    let g_star = success.then(|| {
        coverage_trajectory
            .iter()
            .rposition(|&c| c < 1.0)
            .map_or(0, |last_gap| last_gap + 1)
    });
    Ok(RunResult {
        success,
        g_star,
        generations_run,
        evaluations: n as u64 * (generations_run as u64 + 1),
        coverage_trajectory,
        points_covered,
        per_point_coverage: per_point,
        n,
        seed,
        stream,
    })
}

fn coverage_is_full(pop: &Population, index: &CoverageIndex) -> bool {
    index.measure(pop).0 >= 1.0
}

/// For each distinct front point, the fraction of `runs` independent runs
/// whose final population contains it. Run `r` uses stream `r` of `master_seed`.
pub fn niche_maintenance_probability(
    problem: &ProblemSpec,
    algo: &AlgorithmConfig,
    n: usize,
    runs: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let results: Vec<RunResult> = (0..runs as u64)
        .into_par_iter()
        .map(|r| run(problem, algo, n, RepresentativeMode::Objective, RngStream::new(master_seed, r)))
        .collect::<Result<_>>()?;
    let points = results[0].per_point_coverage.len();
    Ok((0..points)
        .map(|i| results.iter().filter(|r| r.per_point_coverage[i]).count() as f64 / runs as f64)
        .collect())
}
