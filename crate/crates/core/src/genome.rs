//! Bitstring genomes, evaluated individuals and populations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

type Words = SmallVec<[u64; 1]>;

/// Fixed-length bitstring. Bit `i` lives in word `i / 64` at position `i % 64`;
/// bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    words: Words,
    len: usize,
}

impl Genome {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: SmallVec::from_elem(0, word_count(len)),
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut g = Self::zeros(len);
        g.words.iter_mut().for_each(|w| *w = u64::MAX);
        g.clear_tail();
        g
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut g = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            g.set(i, b);
        }
        g
    }

    /// Uniformly random genome, one `u64` draw per 64 bits.
    pub fn random(len: usize, rng: &mut RngStream) -> Self {
        let mut g = Self::zeros(len);
        for w in g.words.iter_mut() {
            *w = rng.next_u64();
        }
        g.clear_tail();
        g
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if bit {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones among `positions`.
    pub fn count_ones_at(&self, positions: &[usize]) -> usize {
        positions.iter().filter(|&&i| self.get(i)).count()
    }

    pub fn complement(&self) -> Self {
        let mut g = self.clone();
        g.words.iter_mut().for_each(|w| *w = !*w);
        g.clear_tail();
        g
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

/// Bitstring order: shorter first, then lexicographic on bit 0, 1, 2, ...
impl Ord for Genome {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            self.words
                .iter()
                .map(|w| w.reverse_bits())
                .cmp(other.words.iter().map(|w| w.reverse_bits()))
        })
    }
}

impl PartialOrd for Genome {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({self})")
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("genome contains {other:?}; only 0 and 1 allowed"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &Genome, b: &Genome) -> Result<usize> {
    if a.len != b.len {
        return Err(invalid(format!(
            "hamming distance of genomes with lengths {} and {}",
            a.len, b.len
        )));
    }
    Ok(a
        .words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Objective pair; both objectives are maximized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveVector {
    pub const fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }

    pub fn get(&self, j: usize) -> f64 {
        match j {
            0 => self.f1,
            1 => self.f2,
            _ => panic!("objective index {j} out of range"),
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.f1 - other.f1).abs() <= tol && (self.f2 - other.f2).abs() <= tol
    }
}

#[derive(Clone, Debug)]
pub struct Individual {
    genome: Genome,
    objectives: Option<ObjectiveVector>,
    rank: Option<u32>,
    crowding: Option<f64>,
}

impl Individual {
    pub fn new(genome: Genome) -> Self {
        Self {
            genome,
            objectives: None,
            rank: None,
            crowding: None,
        }
    }

    pub fn evaluated(genome: Genome, objectives: ObjectiveVector) -> Self {
        Self {
            objectives: Some(objectives),
            ..Self::new(genome)
        }
    }

    pub fn genome(&self) -> &Genome {
        &self.genome
    }

    /// Replaces the genome; objectives, rank and crowding become unset.
    pub fn set_genome(&mut self, genome: Genome) {
        *self = Self::new(genome);
    }

    pub fn into_genome(self) -> Genome {
        self.genome
    }

    pub fn objectives(&self) -> Option<ObjectiveVector> {
        self.objectives
    }

    pub fn set_objectives(&mut self, obj: ObjectiveVector) {
        self.objectives = Some(obj);
        self.clear_ranking();
    }

    pub fn rank(&self) -> Option<u32> {
        self.rank
    }

    pub fn crowding(&self) -> Option<f64> {
        self.crowding
    }

    /// Rank and crowding are only ever set together.
    pub(crate) fn set_ranking(&mut self, rank: u32, crowding: f64) {
        self.rank = Some(rank);
        self.crowding = Some(crowding);
    }

    pub fn clear_ranking(&mut self) {
        self.rank = None;
        self.crowding = None;
    }
}

/// Members sharing one genome length, in a stable order.
#[derive(Clone, Debug)]
pub struct Population {
    members: Vec<Individual>,
    genome_len: usize,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        let genome_len = members.first().map_or(0, |m| m.genome.len());
        if let Some(bad) = members.iter().find(|m| m.genome.len() != genome_len) {
            return Err(invalid(format!(
                "population mixes genome lengths {genome_len} and {}",
                bad.genome.len()
            )));
        }
        Ok(Self { members, genome_len })
    }

    pub fn from_genomes(genomes: impl IntoIterator<Item = Genome>) -> Result<Self> {
        Self::new(genomes.into_iter().map(Individual::new).collect())
    }

    pub(crate) fn from_parts(members: Vec<Individual>, genome_len: usize) -> Self {
        debug_assert!(members.iter().all(|m| m.genome.len() == genome_len));
        Self { members, genome_len }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn genome_len(&self) -> usize {
        self.genome_len
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Individual] {
        &mut self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Individual> {
        self.members.iter()
    }

    pub fn genomes(&self) -> impl Iterator<Item = &Genome> {
        self.members.iter().map(|m| &m.genome)
    }

    /// Objective vectors of all members, or an error naming the first unevaluated one.
    pub fn objectives(&self) -> Result<Vec<ObjectiveVector>> {
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.objectives
                    .ok_or_else(|| Error::InvalidState(format!("member {i} has not been evaluated")))
            })
            .collect()
    }

    /// Replaces member `idx`, which must have the population's genome length.
    pub fn replace(&mut self, idx: usize, ind: Individual) -> Result<()> {
        if ind.genome.len() != self.genome_len {
            return Err(invalid("replacement genome length differs from population"));
        }
        self.members[idx] = ind;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Population {
    type Item = &'a Individual;
    type IntoIter = std::slice::Iter<'a, Individual>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// `n` uniformly random genomes of length `len`, unevaluated.
pub fn random_population(n: usize, len: usize, rng: &mut RngStream) -> Result<Population> {
    if n == 0 || len == 0 {
        return Err(invalid(format!(
            "random population needs n >= 1 and length >= 1 (got n = {n}, length = {len})"
        )));
    }
    let members = (0..n).map(|_| Individual::new(Genome::random(len, rng))).collect();
    Ok(Population::from_parts(members, len))
}
