//! Marginal product models: a partition of the genes into independent
//! groups, each with a frequency table over its bit patterns, searched
//! greedily under a minimum-description-length score.

use std::fmt;

use crate::error::{invalid, Result};
use crate::genome::{Genome, Individual, Population};
use crate::rng::RngStream;

/// Merges must lower the score by more than this to count as improvements,
/// and candidate scores closer than this are treated as tied.
pub const MERGE_EPS: f64 = 1e-12;

pub const DEFAULT_MAX_GROUP: usize = 8;

/// Gene groups with per-group pattern frequencies.
///
/// Groups are kept sorted by their smallest gene, genes within a group
/// ascending. A pattern is encoded with the group's first gene as the most
/// significant bit, so pattern `0b110` over genes `[2, 5, 7]` means genes 2
/// and 5 are one and gene 7 is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalProductModel {
    genome_len: usize,
    groups: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl MarginalProductModel {
    pub fn new(genome_len: usize, groups: Vec<Vec<usize>>, tables: Vec<Vec<f64>>) -> Result<Self> {
        let groups = normalize_groups(genome_len, groups)?;
        if tables.len() != groups.len() {
            return Err(invalid("one frequency table per group is required"));
        }
        for (g, t) in groups.iter().zip(&tables) {
            if t.len() != 1 << g.len() {
                return Err(invalid(format!(
                    "group {g:?} needs {} pattern frequencies, got {}",
                    1 << g.len(),
                    t.len()
                )));
            }
            if t.iter().any(|p| !(0.0..=1.0).contains(p)) || (t.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("frequencies of group {g:?} must lie in [0, 1] and sum to 1")));
            }
        }
        Ok(Self {
            genome_len,
            groups,
            tables,
        })
    }

    /// Empirical pattern frequencies of `pop` under the given partition.
    pub fn fit(groups: Vec<Vec<usize>>, pop: &Population) -> Result<Self> {
        if pop.is_empty() {
            return Err(invalid("cannot fit a model to an empty population"));
        }
        let groups = normalize_groups(pop.genome_len(), groups)?;
        let n = pop.len() as f64;
        let tables = groups
            .iter()
            .map(|g| {
                pattern_counts(pop.genomes(), g)
                    .into_iter()
                    .map(|c| c as f64 / n)
                    .collect()
            })
            .collect();
        Ok(Self {
            genome_len: pop.genome_len(),
            groups,
            tables,
        })
    }

    pub fn univariate(pop: &Population) -> Result<Self> {
        Self::fit((0..pop.genome_len()).map(|i| vec![i]).collect(), pop)
    }

    pub fn genome_len(&self) -> usize {
        self.genome_len
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// Debug dump: one line per group, `genes pattern:frequency ...`, zero
/// frequencies omitted, patterns in increasing value.
impl fmt::Display for MarginalProductModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, table) in self.groups.iter().zip(&self.tables) {
            let genes: Vec<String> = g.iter().map(usize::to_string).collect();
            write!(f, "{}", genes.join(","))?;
            for (pattern, p) in table.iter().enumerate().filter(|(_, &p)| p > 0.0) {
                write!(f, " {:0width$b}:{p}", pattern, width = g.len())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn normalize_groups(genome_len: usize, mut groups: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; genome_len];
    for g in &mut groups {
        if g.is_empty() {
            return Err(invalid("empty gene group"));
        }
        if g.len() > 24 {
            return Err(invalid("gene groups are limited to 24 genes"));
        }
        g.sort_unstable();
        for &i in g.iter() {
            if i >= genome_len || std::mem::replace(&mut seen[i], true) {
                return Err(invalid(format!("gene {i} is out of range or in two groups")));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(invalid("gene groups must cover every position"));
    }
    groups.sort_by_key(|g| g[0]);
    Ok(groups)
}

fn pattern_of(genome: &Genome, group: &[usize]) -> usize {
    group.iter().fold(0, |acc, &i| (acc << 1) | genome.get(i) as usize)
}

fn pattern_counts<'a>(genomes: impl Iterator<Item = &'a Genome>, group: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << group.len()];
    for g in genomes {
        counts[pattern_of(g, group)] += 1;
    }
    counts
}

/// Model complexity in bits: `log2(n) * Σ (2^k_i - 1)`.
pub fn model_complexity(model: &MarginalProductModel, n: usize) -> Result<f64> {
    model_complexity_of_sizes(&model.group_sizes(), n)
}

pub fn model_complexity_of_sizes(group_sizes: &[usize], n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("model complexity needs n >= 2 (got {n})")));
    }
    let params: f64 = group_sizes.iter().map(|&k| ((1u64 << k) - 1) as f64).sum();
    Ok((n as f64).log2() * params)
}

/// Compressed population complexity in bits: `n * Σ_groups entropy`, with
/// pattern frequencies taken from `pop` under the model's partition.
pub fn compressed_population_complexity(model: &MarginalProductModel, pop: &Population) -> Result<f64> {
    if pop.genome_len() != model.genome_len && !pop.is_empty() {
        return Err(invalid("model and population genome lengths differ"));
    }
    Ok(model
        .groups
        .iter()
        .map(|g| scaled_entropy(&pattern_counts(pop.genomes(), g)))
        .sum())
}

/// `n * H` for a count vector, computed as `n log2 n - Σ c log2 c`.
fn scaled_entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let clogc: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64).log2())
        .sum();
    (n as f64 * (n as f64).log2() - clogc).max(0.0)
}

/// Working state for one group during the greedy search.
struct Slot {
    genes: Vec<usize>,
    /// Pattern code of every selected individual, in an arbitrary but bijective encoding.
    codes: Vec<u32>,
    cost: f64,
}

/// Greedy MDL search: start from one group per gene and repeatedly apply the
/// merge with the largest strict score decrease until none remains.
///
/// Ties (within [`MERGE_EPS`]) go to the pair whose first group has the
/// lowest smallest gene, then whose second group does. Groups never grow
/// beyond `max_group` genes.
pub fn greedy_mpm_search(selected: &Population, max_group: usize) -> Result<MarginalProductModel> {
    let n = selected.len();
    if n < 2 {
        return Err(invalid(format!("model search needs at least 2 individuals (got {n})")));
    }
    if max_group == 0 || max_group > 24 {
        return Err(invalid("max group size must lie in 1..=24"));
    }
    let log_n = (n as f64).log2();
    let member_cost = |size: usize, counts: &[u64]| log_n * ((1u64 << size) - 1) as f64 + scaled_entropy(counts);

    let len = selected.genome_len();
    let mut slots: Vec<Option<Slot>> = (0..len)
        .map(|i| {
            let codes: Vec<u32> = selected.genomes().map(|g| g.get(i) as u32).collect();
            let ones = codes.iter().filter(|&&c| c == 1).count() as u64;
            Some(Slot {
                genes: vec![i],
                cost: member_cost(1, &[n as u64 - ones, ones]),
                codes,
            })
        })
        .collect();

    let merged_cost = |a: &Slot, b: &Slot| -> f64 {
        let shift = b.genes.len();
        let mut counts = vec![0u64; 1 << (a.genes.len() + shift)];
        for (&ca, &cb) in a.codes.iter().zip(&b.codes) {
            counts[((ca << shift) | cb) as usize] += 1;
        }
        member_cost(a.genes.len() + shift, &counts)
    };
    let delta_of = |slots: &[Option<Slot>], a: usize, b: usize| -> Option<f64> {
        let (sa, sb) = (slots[a].as_ref()?, slots[b].as_ref()?);
        (sa.genes.len() + sb.genes.len() <= max_group).then(|| merged_cost(sa, sb) - sa.cost - sb.cost)
    };

    // delta[a][b] for a < b; None when inactive or over the size cap.
    let mut delta: Vec<Vec<Option<f64>>> = (0..len)
        .map(|a| (0..len).map(|b| if a < b { delta_of(&slots, a, b) } else { None }).collect())
        .collect();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, row) in delta.iter().enumerate() {
            for (b, d) in row.iter().enumerate().skip(a + 1) {
                if let Some(d) = *d {
                    if best.map_or(true, |(bd, _, _)| d < bd - MERGE_EPS) {
                        best = Some((d, a, b));
                    }
                }
            }
        }
        let Some((d, a, b)) = best.filter(|&(d, _, _)| d < -MERGE_EPS) else {
            break;
        };
        let sb = slots[b].take().expect("active slot");
        let sa = slots[a].as_mut().expect("active slot");
        let shift = sb.genes.len();
        for (ca, cb) in sa.codes.iter_mut().zip(&sb.codes) {
            *ca = (*ca << shift) | cb;
        }
        sa.genes.extend(sb.genes);
        sa.cost += sb.cost + d;
        for c in 0..len {
            delta[b][c] = None;
            delta[c][b] = None;
        }
        for c in 0..len {
            if c == a {
                continue;
            }
            let (lo, hi) = if c < a { (c, a) } else { (a, c) };
            delta[lo][hi] = delta_of(&slots, lo, hi);
        }
    }

    let groups = slots.into_iter().flatten().map(|s| s.genes).collect();
    MarginalProductModel::fit(groups, selected)
}

/// Offspring drawn by sampling every group's pattern independently.
pub fn sample_mpm(model: &MarginalProductModel, n_out: usize, rng: &mut RngStream) -> Population {
    let cumulative: Vec<Vec<(usize, f64)>> = model
        .tables
        .iter()
        .map(|t| {
            let mut acc = 0.0;
            t.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(pattern, &p)| {
                    acc += p;
                    (pattern, acc)
                })
                .collect()
        })
        .collect();
    let members = (0..n_out)
        .map(|_| {
            let mut g = Genome::zeros(model.genome_len);
            for (genes, cdf) in model.groups.iter().zip(&cumulative) {
                let u = rng.unit();
                let pattern = cdf
                    .iter()
                    .find(|&&(_, c)| u < c)
                    .or(cdf.last())
                    .map_or(0, |&(p, _)| p);
                let width = genes.len();
                for (j, &gene) in genes.iter().enumerate() {
                    g.set(gene, (pattern >> (width - 1 - j)) & 1 == 1);
                }
            }
            Individual::new(g)
        })
        .collect();
    Population::from_parts(members, model.genome_len)
}
