//! Bi-objective decomposable test problems.
//!
//! * `trap-invtrap`: `m` disjoint `k`-bit partitions; objective 1 sums a
//!   deceptive trap (optimum all ones), objective 2 an inverse trap
//!   (optimum all zeros). The Pareto set is every genome whose partitions
//!   are each all-zeros or all-ones: `2^m` genotypes on `m + 1` points.
//! * `onemax-zeromax`: count of ones against count of zeros. Every genome
//!   is Pareto optimal.
//! * `overlap`: the first `m_d` partitions conflict as in trap-invtrap, the
//!   remaining `m - m_d` contribute the trap to both objectives.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::genome::{Genome, ObjectiveVector};

/// Tolerance for treating two objective values as the same point.
pub const OBJECTIVE_TOL: f64 = 1e-9;

/// Default ceiling on the size of an enumerated genotype representative set.
pub const DEFAULT_GENOTYPE_CAP: u64 = 1 << 20;

/// Largest genome length the exhaustive Pareto oracle accepts.
pub const BRUTEFORCE_MAX_LEN: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    TrapInvtrap,
    OnemaxZeromax,
    Overlap,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::TrapInvtrap => "trap-invtrap",
            ProblemKind::OnemaxZeromax => "onemax-zeromax",
            ProblemKind::Overlap => "overlap",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trap-invtrap" => Ok(ProblemKind::TrapInvtrap),
            "onemax-zeromax" => Ok(ProblemKind::OnemaxZeromax),
            "overlap" | "trap-invtrap-overlap" => Ok(ProblemKind::Overlap),
            other => Err(invalid(format!("unknown problem kind {other:?}"))),
        }
    }
}

/// Signal difference conventionally paired with trap size `k`.
pub fn default_signal(k: usize) -> Option<f64> {
    match k {
        3 => Some(0.9),
        4 => Some(0.75),
        5 => Some(0.8),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    kind: ProblemKind,
    m: usize,
    k: usize,
    d: f64,
    m_d: usize,
    /// `layout[i * k + j]` is the genome position of bit `j` of partition `i`.
    layout: Vec<usize>,
}

impl ProblemSpec {
    pub fn trap_invtrap(m: usize, k: usize, d: f64) -> Result<Self> {
        check_trap_params(m, k, d)?;
        Ok(Self::blocks(ProblemKind::TrapInvtrap, m, k, d, m))
    }

    pub fn onemax_zeromax(ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("onemax-zeromax needs ell >= 1"));
        }
        Ok(Self::blocks(ProblemKind::OnemaxZeromax, ell, 1, 0.0, ell))
    }

    pub fn overlap(m: usize, k: usize, d: f64, m_d: usize) -> Result<Self> {
        check_trap_params(m, k, d)?;
        if m_d > m {
            return Err(invalid(format!("m_d = {m_d} exceeds m = {m}")));
        }
        Ok(Self::blocks(ProblemKind::Overlap, m, k, d, m_d))
    }

    fn blocks(kind: ProblemKind, m: usize, k: usize, d: f64, m_d: usize) -> Self {
        Self {
            kind,
            m,
            k,
            d,
            m_d,
            layout: (0..m * k).collect(),
        }
    }

    /// Scatters partitions over the genome: `layout` must be a permutation of `0..ell`.
    pub fn with_layout(mut self, layout: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.ell()];
        if layout.len() != self.ell()
            || !layout
                .iter()
                .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
        {
            return Err(invalid("layout must be a permutation of 0..ell"));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// Number of partitions (`ell` for onemax-zeromax).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Partition size (1 for onemax-zeromax).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Signal difference; `None` for onemax-zeromax.
    pub fn d(&self) -> Option<f64> {
        (self.kind != ProblemKind::OnemaxZeromax).then_some(self.d)
    }

    /// Number of partitions on which the objectives conflict.
    pub fn m_d(&self) -> usize {
        self.m_d
    }

    pub fn ell(&self) -> usize {
        self.m * self.k
    }

    pub fn partition(&self, i: usize) -> &[usize] {
        &self.layout[i * self.k..(i + 1) * self.k]
    }

    /// Number of Pareto-optimal genotypes, `2^m_d`, when it fits in a `u64`.
    pub fn pareto_genotype_count(&self) -> Option<u64> {
        1u64.checked_shl(self.m_d as u32)
    }

    pub fn evaluate(&self, g: &Genome) -> Result<ObjectiveVector> {
        if g.len() != self.ell() {
            return Err(invalid(format!(
                "genome length {} does not match problem length {}",
                g.len(),
                self.ell()
            )));
        }
        Ok(self.evaluate_unchecked(g))
    }

    pub(crate) fn evaluate_unchecked(&self, g: &Genome) -> ObjectiveVector {
        match self.kind {
            ProblemKind::OnemaxZeromax => {
                let ones = g.count_ones() as f64;
                ObjectiveVector::new(ones, self.ell() as f64 - ones)
            }
            ProblemKind::TrapInvtrap | ProblemKind::Overlap => {
                let (mut f1, mut f2) = (0.0, 0.0);
                for i in 0..self.m {
                    let u = g.count_ones_at(self.partition(i));
                    let t = trap_value(u, self.k, self.d);
                    f1 += t;
                    f2 += if i < self.m_d {
                        invtrap_value(u, self.k, self.d)
                    } else {
                        t
                    };
                }
                ObjectiveVector::new(snap(f1), snap(f2))
            }
        }
    }

    /// Genome whose first `ones` conflicting partitions are all ones, the other
    /// conflicting partitions all zeros and every shared partition all ones.
    fn front_genome(&self, conflicting_ones_mask: impl Fn(usize) -> bool) -> Genome {
        let mut g = Genome::zeros(self.ell());
        for i in 0..self.m {
            if i >= self.m_d || conflicting_ones_mask(i) {
                for &p in self.partition(i) {
                    g.set(p, true);
                }
            }
        }
        g
    }

    /// Index of the distinct front point an objective vector sits on, if any.
    pub fn front_point_index(&self, obj: &ObjectiveVector) -> Option<usize> {
        (0..=self.m_d).find(|&i| self.front_point(i).approx_eq(obj, OBJECTIVE_TOL))
    }

    /// The `i`-th distinct Pareto point: `i` conflicting partitions at all ones.
    pub fn front_point(&self, i: usize) -> ObjectiveVector {
        self.evaluate_unchecked(&self.front_genome(|p| p < i))
    }

    pub fn representative_set(&self, mode: RepresentativeMode) -> Result<RepresentativeSet> {
        self.representative_set_capped(mode, DEFAULT_GENOTYPE_CAP)
    }

    pub fn representative_set_capped(
        &self,
        mode: RepresentativeMode,
        cap: u64,
    ) -> Result<RepresentativeSet> {
        match mode {
            RepresentativeMode::Objective => Ok(RepresentativeSet::Objective(
                (0..=self.m_d).map(|i| self.front_point(i)).collect(),
            )),
            RepresentativeMode::Genotype => {
                let count = self
                    .pareto_genotype_count()
                    .filter(|&c| c <= cap)
                    .ok_or_else(|| {
                        Error::Capacity(format!(
                            "2^{} Pareto genotypes exceed the cap of {cap}",
                            self.m_d
                        ))
                    })?;
                let mut genomes: Vec<Genome> = (0..count)
                    .map(|mask| self.front_genome(|p| (mask >> p) & 1 == 1))
                    .collect();
                genomes.sort();
                Ok(RepresentativeSet::Genotype(genomes))
            }
        }
    }
}

fn check_trap_params(m: usize, k: usize, d: f64) -> Result<()> {
    if m == 0 {
        return Err(invalid("need at least one partition (m >= 1)"));
    }
    if k < 2 {
        return Err(invalid(format!("trap partitions need k >= 2 (got {k})")));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(invalid(format!("signal difference d must lie in (0, 1) (got {d})")));
    }
    Ok(())
}

/// Rounds to the objective tolerance grid so that equal sums reached through
/// different partition orders compare equal.
fn snap(x: f64) -> f64 {
    (x / OBJECTIVE_TOL).round() * OBJECTIVE_TOL
}

fn trap_value(u: usize, k: usize, d: f64) -> f64 {
    if u == k {
        1.0
    } else {
        (1.0 - d) * (1.0 - u as f64 / (k - 1) as f64)
    }
}

fn invtrap_value(u: usize, k: usize, d: f64) -> f64 {
    if u == 0 {
        1.0
    } else {
        (1.0 - d) * ((u as f64 - 1.0) / (k - 1) as f64)
    }
}

fn check_subfunction(u: usize, k: usize, d: f64) -> Result<()> {
    if k < 2 || u > k {
        return Err(invalid(format!("need 0 <= u <= k and k >= 2 (got u = {u}, k = {k})")));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(invalid(format!("signal difference d must lie in (0, 1) (got {d})")));
    }
    Ok(())
}

/// Deceptive trap on a `k`-bit partition with `u` ones.
pub fn trap(u: usize, k: usize, d: f64) -> Result<f64> {
    check_subfunction(u, k, d)?;
    Ok(trap_value(u, k, d))
}

/// Inverse trap: optimum at all zeros.
pub fn invtrap(u: usize, k: usize, d: f64) -> Result<f64> {
    check_subfunction(u, k, d)?;
    Ok(invtrap_value(u, k, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepresentativeMode {
    /// Every Pareto-optimal genome must be present.
    Genotype,
    /// Every distinct Pareto objective point must be present.
    Objective,
}

impl RepresentativeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RepresentativeMode::Genotype => "genotype",
            RepresentativeMode::Objective => "objective",
        }
    }
}

impl fmt::Display for RepresentativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genotype" => Ok(RepresentativeMode::Genotype),
            "objective" => Ok(RepresentativeMode::Objective),
            other => Err(invalid(format!("unknown representative mode {other:?}"))),
        }
    }
}

/// Sorted, duplicate-free representatives of the Pareto front.
#[derive(Clone, Debug, PartialEq)]
pub enum RepresentativeSet {
    Genotype(Vec<Genome>),
    /// Distinct points in increasing `f1`.
    Objective(Vec<ObjectiveVector>),
}

impl RepresentativeSet {
    pub fn mode(&self) -> RepresentativeMode {
        match self {
            RepresentativeSet::Genotype(_) => RepresentativeMode::Genotype,
            RepresentativeSet::Objective(_) => RepresentativeMode::Objective,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RepresentativeSet::Genotype(g) => g.len(),
            RepresentativeSet::Objective(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn genotypes(&self) -> Option<&[Genome]> {
        match self {
            RepresentativeSet::Genotype(g) => Some(g),
            RepresentativeSet::Objective(_) => None,
        }
    }

    pub fn points(&self) -> Option<&[ObjectiveVector]> {
        match self {
            RepresentativeSet::Objective(p) => Some(p),
            RepresentativeSet::Genotype(_) => None,
        }
    }
}

/// Enumerates every genome and keeps the exact non-dominated set (maximizing both objectives).
pub fn pareto_oracle_bruteforce(p: &ProblemSpec) -> Result<RepresentativeSet> {
    let ell = p.ell();
    if ell > BRUTEFORCE_MAX_LEN {
        return Err(Error::Capacity(format!(
            "exhaustive enumeration limited to {BRUTEFORCE_MAX_LEN} bits (got {ell})"
        )));
    }
    let genome_of = |x: u64| {
        let mut g = Genome::zeros(ell);
        for i in 0..ell {
            g.set(i, (x >> i) & 1 == 1);
        }
        g
    };
    let mut scored: Vec<(ObjectiveVector, u64)> = (0..1u64 << ell)
        .map(|x| (p.evaluate_unchecked(&genome_of(x)), x))
        .collect();
    // Descending f1; a point survives iff it has the best f2 within its f1
    // group and strictly beats every f2 seen at larger f1.
    scored.sort_by(|a, b| b.0.f1.total_cmp(&a.0.f1).then(b.0.f2.total_cmp(&a.0.f2)));
    let mut front = Vec::new();
    let mut best_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < scored.len() {
        let f1 = scored[start].0.f1;
        let end = start + scored[start..].iter().take_while(|s| s.0.f1 == f1).count();
        let group_best = scored[start].0.f2;
        if group_best > best_above {
            front.extend(
                scored[start..end]
                    .iter()
                    .take_while(|s| s.0.f2 == group_best)
                    .map(|s| genome_of(s.1)),
            );
        }
        best_above = best_above.max(group_best);
        start = end;
    }
    front.sort();
    Ok(RepresentativeSet::Genotype(front))
}

/// Number of Pareto genotypes with `i` all-ones partitions, for `i = 0..=m`.
pub fn niche_counts(m: usize) -> Result<Vec<u64>> {
    if m == 0 || m > 63 {
        return Err(invalid(format!("niche counts need 1 <= m <= 63 (got {m})")));
    }
    let mut row = Vec::with_capacity(m + 1);
    let mut c: u128 = 1;
    for i in 0..=m {
        row.push(c as u64);
        c = c * (m - i) as u128 / (i + 1) as u128;
    }
    Ok(row)
}
