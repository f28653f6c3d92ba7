//! Offspring generation: eCGA's marginal product model, UMDA's univariate
//! model, and two-point crossover with bit-flip mutation.

mod mpm;
mod operators;
mod univariate;

use std::fmt;
use std::str::FromStr;

pub use mpm::{
    compressed_population_complexity, greedy_mpm_search, model_complexity,
    model_complexity_of_sizes, sample_mpm, MarginalProductModel, DEFAULT_MAX_GROUP, MERGE_EPS,
};
pub use operators::{bitflip_mutation, swap_segment, two_point_crossover};
pub use univariate::{fit_univariate, sample_univariate, UnivariateModel};

use crate::error::{invalid, Error, Result};
use crate::genome::{Individual, Population};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariationKind {
    Mecga,
    Umda,
    Nsga2Xover,
}

impl VariationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariationKind::Mecga => "mecga",
            VariationKind::Umda => "umda",
            VariationKind::Nsga2Xover => "nsga2-xover",
        }
    }

    pub fn is_eda(self) -> bool {
        !matches!(self, VariationKind::Nsga2Xover)
    }
}

impl fmt::Display for VariationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mecga" | "ecga" => Ok(VariationKind::Mecga),
            "umda" => Ok(VariationKind::Umda),
            "nsga2-xover" | "nsga2" => Ok(VariationKind::Nsga2Xover),
            other => Err(invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationConfig {
    pub kind: VariationKind,
    /// Crossover probability (nsga2-xover only).
    pub pc: f64,
    /// Per-bit mutation probability; `None` means `1 / ell`.
    pub pm: Option<f64>,
    /// Largest gene group the model search may build (mecga only).
    pub max_group: usize,
}

impl VariationConfig {
    pub fn new(kind: VariationKind) -> Self {
        Self {
            kind,
            pc: 0.9,
            pm: None,
            max_group: DEFAULT_MAX_GROUP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pc) {
            return Err(invalid(format!("pc must lie in [0, 1] (got {})", self.pc)));
        }
        if let Some(pm) = self.pm {
            if !(0.0..=1.0).contains(&pm) {
                return Err(invalid(format!("pm must lie in [0, 1] (got {pm})")));
            }
        }
        if self.max_group == 0 || self.max_group > 24 {
            return Err(invalid("max group size must lie in 1..=24"));
        }
        Ok(())
    }

    pub fn mutation_rate(&self, genome_len: usize) -> f64 {
        self.pm.unwrap_or(1.0 / genome_len as f64)
    }

    /// `n_out` unevaluated offspring from a mating pool.
    pub fn offspring(&self, pool: &Population, n_out: usize, rng: &mut RngStream) -> Result<Population> {
        match self.kind {
            VariationKind::Mecga => {
                let model = greedy_mpm_search(pool, self.max_group)?;
                Ok(sample_mpm(&model, n_out, rng))
            }
            VariationKind::Umda => Ok(sample_univariate(&fit_univariate(pool)?, n_out, rng)),
            VariationKind::Nsga2Xover => {
                let parents = pool.members();
                if parents.is_empty() {
                    return Err(invalid("empty mating pool"));
                }
                let pm = self.mutation_rate(pool.genome_len());
                let mut children = Vec::with_capacity(n_out + 1);
                let mut i = 0;
                while children.len() < n_out {
                    let a = parents[i % parents.len()].genome();
                    let b = parents[(i + 1) % parents.len()].genome();
                    let (c, d) = two_point_crossover(a, b, self.pc, rng)?;
                    children.push(Individual::new(bitflip_mutation(&c, pm, rng)));
                    children.push(Individual::new(bitflip_mutation(&d, pm, rng)));
                    i += 2;
                }
                children.truncate(n_out);
                Population::new(children)
            }
        }
    }
}
