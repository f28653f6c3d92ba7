//! Survivor selection: NSGA-II elitist replacement and restricted tournament replacement.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::genome::{hamming_distance, Individual, Population};
use crate::pareto::{dominates, nondominated_sort};
use crate::rng::RngStream;

/// Best `|parents|` of the combined pool: whole ranks first, the rank that
/// does not fit is cut by descending crowding distance (ties keep the
/// earlier member, parents before offspring). Survivors keep pool order and
/// come back unranked.
pub fn elitist_replacement(parents: Population, offspring: Population) -> Result<Population> {
    let n = parents.len();
    if offspring.len() > n {
        return Err(invalid(format!(
            "offspring count {} exceeds parent count {n}",
            offspring.len()
        )));
    }
    if !offspring.is_empty() && offspring.genome_len() != parents.genome_len() {
        return Err(invalid("parents and offspring have different genome lengths"));
    }
    let len = parents.genome_len();
    let mut pool = parents.into_members();
    pool.extend(offspring.into_members());
    let ranked = nondominated_sort(Population::from_parts(pool, len))?;

    let members = ranked.members();
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&members[a], &members[b]);
        ma.rank()
            .cmp(&mb.rank())
            .then(mb.crowding().unwrap().total_cmp(&ma.crowding().unwrap()))
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; members.len()];
    for &i in order.iter().take(n) {
        keep[i] = true;
    }
    let survivors = ranked
        .into_population()
        .into_members()
        .into_iter()
        .zip(keep)
        .filter_map(|(mut m, k)| {
            k.then(|| {
                m.clear_ranking();
                m
            })
        })
        .collect();
    Ok(Population::from_parts(survivors, len))
}

/// What happens when offspring and nearest incumbent are mutually non-dominated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TiePolicy {
    CoinFlip,
    KeepIncumbent,
    AlwaysReplace,
}

impl TiePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            TiePolicy::CoinFlip => "coin-flip",
            TiePolicy::KeepIncumbent => "keep-incumbent",
            TiePolicy::AlwaysReplace => "always-replace",
        }
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coin-flip" => Ok(TiePolicy::CoinFlip),
            "keep-incumbent" => Ok(TiePolicy::KeepIncumbent),
            "always-replace" => Ok(TiePolicy::AlwaysReplace),
            other => Err(invalid(format!("unknown tie policy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RtsConfig {
    /// Window size `w`; `None` means `min(n, ell)`.
    pub window: Option<usize>,
    pub tie_policy: TiePolicy,
}

impl Default for RtsConfig {
    fn default() -> Self {
        Self {
            window: None,
            tie_policy: TiePolicy::CoinFlip,
        }
    }
}

impl RtsConfig {
    pub fn resolved_window(&self, n: usize, genome_len: usize) -> usize {
        self.window.unwrap_or(n.min(genome_len))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RtsOutcome {
    /// The offspring took the slot of this member.
    Replaced(usize),
    /// This member, the nearest drawn, was kept.
    Kept(usize),
}

/// Restricted tournament replacement for one offspring: draw `w` members
/// without replacement, find the one nearest in Hamming distance (ties to the
/// lowest population index) and let the offspring replace it if it dominates
/// it. Mutually non-dominated pairs are settled by the tie policy.
pub fn rts_replace(
    current: &mut Population,
    offspring: Individual,
    cfg: &RtsConfig,
    rng: &mut RngStream,
) -> Result<RtsOutcome> {
    let n = current.len();
    let w = cfg.resolved_window(n, current.genome_len());
    if w == 0 || w > n {
        return Err(invalid(format!("RTS window {w} must lie in 1..={n}")));
    }
    let child = offspring
        .objectives()
        .ok_or_else(|| Error::InvalidState("offspring must be evaluated before replacement".into()))?;

    // Floyd's sampling of w distinct indices.
    let mut drawn: Vec<usize> = Vec::with_capacity(w);
    for j in (n - w)..n {
        let t = rng.below(j + 1);
        drawn.push(if drawn.contains(&t) { j } else { t });
    }

    let mut nearest = (usize::MAX, usize::MAX);
    for &i in &drawn {
        let d = hamming_distance(current.members()[i].genome(), offspring.genome())?;
        nearest = nearest.min((d, i));
    }
    let idx = nearest.1;
    let incumbent = current.members()[idx]
        .objectives()
        .ok_or_else(|| Error::InvalidState(format!("member {idx} has not been evaluated")))?;

    let replace = if dominates(&child, &incumbent) {
        true
    } else if dominates(&incumbent, &child) {
        false
    } else {
        match cfg.tie_policy {
            TiePolicy::CoinFlip => rng.coin(),
            TiePolicy::KeepIncumbent => false,
            TiePolicy::AlwaysReplace => true,
        }
    };
    if replace {
        current.replace(idx, offspring)?;
        Ok(RtsOutcome::Replaced(idx))
    } else {
        Ok(RtsOutcome::Kept(idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{Genome, ObjectiveVector};
    use proptest::prelude::*;

    fn ind(bits: &str, f1: f64, f2: f64) -> Individual {
        Individual::evaluated(bits.parse().unwrap(), ObjectiveVector::new(f1, f2))
    }

    fn objectives(p: &Population) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = p.iter().map(|m| m.objectives().unwrap()).map(|o| (o.f1, o.f2)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn dominated_duplicates_leave_parents() {
        let parents = Population::new(vec![ind("00", 3.0, 1.0), ind("01", 1.0, 3.0)]).unwrap();
        let offspring = Population::new(vec![ind("10", 0.5, 0.5), ind("10", 0.5, 0.5)]).unwrap();
        let next = elitist_replacement(parents.clone(), offspring).unwrap();
        assert_eq!(objectives(&next), objectives(&parents));
    }

    #[test]
    fn overflowing_rank_prefers_boundaries() {
        let parents = Population::new(vec![ind("00", 3.0, 1.0), ind("01", 1.0, 3.0)]).unwrap();
        let offspring = Population::new(vec![ind("10", 2.0, 2.0), ind("11", 1.0, 1.0)]).unwrap();
        let next = elitist_replacement(parents, offspring).unwrap();
        assert_eq!(objectives(&next), [(1.0, 3.0), (3.0, 1.0)]);
        assert!(next.iter().all(|m| m.rank().is_none()));
    }

    #[test]
    fn identical_parents_and_offspring() {
        let parents = Population::new(vec![ind("00", 1.0, 2.0), ind("01", 2.0, 1.0), ind("11", 0.0, 0.0)]).unwrap();
        let next = elitist_replacement(parents.clone(), parents.clone()).unwrap();
        assert_eq!(next.len(), 3);
        // Duplicated rank-1 members crowd out (0, 0): survivors are copies of
        // parents, though not necessarily one of each.
        let genomes: Vec<Genome> = parents.genomes().cloned().collect();
        assert!(next.genomes().all(|g| genomes.contains(g)));

        let same = Population::new(vec![ind("01", 1.0, 1.0); 3]).unwrap();
        let next = elitist_replacement(same.clone(), same).unwrap();
        assert!(next.genomes().all(|g| g.to_string() == "01"));
        assert_eq!(next.len(), 3);
    }

    #[test]
    fn too_many_offspring_rejected() {
        let parents = Population::new(vec![ind("0", 1.0, 1.0)]).unwrap();
        let offspring = Population::new(vec![ind("0", 1.0, 1.0), ind("1", 1.0, 1.0)]).unwrap();
        assert!(elitist_replacement(parents, offspring).is_err());
    }

    fn four() -> Population {
        Population::new(vec![
            ind("0000", 1.0, 1.0),
            ind("0011", 2.0, 0.0),
            ind("1100", 0.0, 2.0),
            ind("1111", 1.5, 1.5),
        ])
        .unwrap()
    }

    #[test]
    fn dominating_offspring_replaces_nearest() {
        let mut p = four();
        let cfg = RtsConfig { window: Some(4), tie_policy: TiePolicy::KeepIncumbent };
        let out = rts_replace(&mut p, ind("0001", 1.2, 1.2), &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out, RtsOutcome::Replaced(0));
        assert_eq!(p.len(), 4);
        assert_eq!(p.members()[0].genome().to_string(), "0001");
    }

    #[test]
    fn dominated_offspring_is_discarded() {
        let mut p = four();
        let before: Vec<Genome> = p.genomes().cloned().collect();
        let cfg = RtsConfig { window: Some(4), tie_policy: TiePolicy::AlwaysReplace };
        let out = rts_replace(&mut p, ind("1111", 1.0, 1.0), &cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out, RtsOutcome::Kept(3));
        assert_eq!(p.genomes().cloned().collect::<Vec<_>>(), before);
    }

    #[test]
    fn coin_flip_on_equal_objectives() {
        let cfg = RtsConfig { window: Some(4), tie_policy: TiePolicy::CoinFlip };
        let mut rng = RngStream::new(6, 0);
        let replaced = (0..10_000)
            .filter(|_| {
                let mut p = four();
                matches!(rts_replace(&mut p, ind("1111", 1.5, 1.5), &cfg, &mut rng).unwrap(), RtsOutcome::Replaced(3))
            })
            .count();
        let freq = replaced as f64 / 1e4;
        assert!((freq - 0.5).abs() <= 0.05, "{freq}");
    }

    #[test]
    fn window_bounds() {
        let mut p = four();
        let cfg = RtsConfig { window: Some(5), tie_policy: TiePolicy::CoinFlip };
        assert!(rts_replace(&mut p, ind("0000", 1.0, 1.0), &cfg, &mut RngStream::new(1, 0)).is_err());
        assert!(rts_replace(&mut p, Individual::new("0000".parse().unwrap()), &RtsConfig::default(), &mut RngStream::new(1, 0)).is_err());
    }

    fn scored_population() -> impl Strategy<Value = Vec<(u8, u8)>> {
        proptest::collection::vec((0u8..5, 0u8..5), 1..24)
    }

    fn build(v: &[(u8, u8)]) -> Population {
        Population::new(
            v.iter()
                .enumerate()
                .map(|(i, &(a, b))| Individual::evaluated(Genome::from_bits(&[i % 2 == 1, i % 3 == 1, i % 5 == 1]), ObjectiveVector::new(a as f64, b as f64)))
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn elitist_size_and_rank_one_priority(parents in scored_population(), extra in scored_population()) {
            let parents = build(&parents);
            let n = parents.len();
            let offspring = build(&extra[..extra.len().min(n)]);
            let mut all: Vec<ObjectiveVector> = parents.iter().chain(offspring.iter()).map(|m| m.objectives().unwrap()).collect();
            let next = elitist_replacement(parents, offspring).unwrap();
            prop_assert_eq!(next.len(), n);
            let ranks = crate::pareto::rank_objectives(&all);
            let rank_one: Vec<ObjectiveVector> = all.drain(..).zip(&ranks).filter(|(_, &r)| r == 1).map(|(o, _)| o).collect();
            let kept: Vec<ObjectiveVector> = next.iter().map(|m| m.objectives().unwrap()).collect();
            let kept_worse = kept.iter().any(|k| !rank_one.contains(k));
            if kept_worse {
                // every rank-1 member survived
                for r in &rank_one {
                    let in_pool = rank_one.iter().filter(|x| *x == r).count();
                    let survived = kept.iter().filter(|x| *x == r).count();
                    prop_assert_eq!(in_pool, survived);
                }
            }
        }

        #[test]
        fn rts_changes_at_most_one(pop in scored_population(), f in (0u8..5, 0u8..5), seed in any::<u64>()) {
            let mut p = build(&pop);
            let before: Vec<(Genome, Option<ObjectiveVector>)> = p.iter().map(|m| (m.genome().clone(), m.objectives())).collect();
            let child = Individual::evaluated(Genome::ones(3), ObjectiveVector::new(f.0 as f64, f.1 as f64));
            rts_replace(&mut p, child, &RtsConfig::default(), &mut RngStream::new(seed, 0)).unwrap();
            prop_assert_eq!(p.len(), before.len());
            let changed = p.iter().zip(&before).filter(|(m, b)| (m.genome().clone(), m.objectives()) != **b).count();
            prop_assert!(changed <= 1);
        }
    }

    #[test]
    fn full_window_finds_exact_copy() {
        // With w = n an offspring identical to a member sees distance 0 to it.
        let mut p = four();
        let cfg = RtsConfig { window: Some(4), tie_policy: TiePolicy::KeepIncumbent };
        let out = rts_replace(&mut p, ind("0011", 2.0, 0.0), &cfg, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(out, RtsOutcome::Kept(1));
    }
}
