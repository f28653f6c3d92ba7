//! Pareto domination, non-dominated sorting, crowding distance and the
//! crowded comparison used for tournament selection.

use crate::error::{Error, Result};
use crate::genome::{Individual, ObjectiveVector, Population};
use crate::rng::RngStream;

const OBJECTIVES: usize = 2;

/// `a` is no worse in both objectives and strictly better in one (maximization).
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 >= b.f1 && a.f2 >= b.f2 && (a.f1 > b.f1 || a.f2 > b.f2)
}

/// A population whose members all carry a rank (1 = non-dominated) and a crowding distance.
#[derive(Clone, Debug)]
pub struct RankedPopulation {
    population: Population,
    max_rank: u32,
}

impl RankedPopulation {
    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn into_population(self) -> Population {
        self.population
    }

    pub fn members(&self) -> &[Individual] {
        self.population.members()
    }

    pub fn len(&self) -> usize {
        self.population.len()
    }

    pub fn is_empty(&self) -> bool {
        self.population.is_empty()
    }

    pub fn max_rank(&self) -> u32 {
        self.max_rank
    }

    pub fn ranks(&self) -> Vec<u32> {
        self.members().iter().map(|m| m.rank().unwrap_or(0)).collect()
    }
}

/// Ranks and crowding distances for a population, with raw (unnormalized) crowding.
pub fn nondominated_sort(pop: Population) -> Result<RankedPopulation> {
    nondominated_sort_with(pop, false)
}

/// As [`nondominated_sort`]; `normalize` divides each objective's crowding
/// contribution by that objective's spread within the rank class.
pub fn nondominated_sort_with(mut pop: Population, normalize: bool) -> Result<RankedPopulation> {
    let objs = pop.objectives()?;
    let ranks = rank_objectives(&objs);
    let crowding = crowding_values(&objs, &ranks, normalize);
    for ((m, &r), &c) in pop.members_mut().iter_mut().zip(&ranks).zip(&crowding) {
        m.set_ranking(r, c);
    }
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    Ok(RankedPopulation {
        population: pop,
        max_rank,
    })
}

/// Domination rank of every point, 1 for the non-dominated set.
///
/// Two-objective sweep: visit points by descending `(f1, f2)`. A front's most
/// recently added point has that front's largest `f2`, so whether a front
/// dominates the current point is a single comparison, and that predicate is
/// monotone over front indices, which allows a binary search. `O(n log n)`.
pub fn rank_objectives(objs: &[ObjectiveVector]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..objs.len()).collect();
    order.sort_by(|&a, &b| {
        objs[b]
            .f1
            .total_cmp(&objs[a].f1)
            .then(objs[b].f2.total_cmp(&objs[a].f2))
    });
    let mut front_tails: Vec<ObjectiveVector> = Vec::new();
    let mut ranks = vec![0u32; objs.len()];
    for i in order {
        let p = objs[i];
        let r = front_tails.partition_point(|t| t.f2 > p.f2 || (t.f2 == p.f2 && t.f1 > p.f1));
        if r == front_tails.len() {
            front_tails.push(p);
        } else {
            front_tails[r] = p;
        }
        ranks[i] = r as u32 + 1;
    }
    ranks
}

/// Crowding distance per member, computed class by class: members sorted by
/// each objective (ties by index), both ends set to infinity, interior
/// members accumulate the gap between their neighbours.
pub fn crowding_values(objs: &[ObjectiveVector], ranks: &[u32], normalize: bool) -> Vec<f64> {
    assert_eq!(objs.len(), ranks.len());
    let max_rank = ranks.iter().copied().max().unwrap_or(0) as usize;
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); max_rank + 1];
    for (i, &r) in ranks.iter().enumerate() {
        classes[r as usize].push(i);
    }
    let mut dist = vec![0.0; objs.len()];
    for class in classes.iter_mut().filter(|c| !c.is_empty()) {
        for j in 0..OBJECTIVES {
            // Stable sort keeps equal values in index order.
            class.sort_by(|&a, &b| objs[a].get(j).total_cmp(&objs[b].get(j)).then(a.cmp(&b)));
            let n = class.len();
            dist[class[0]] = f64::INFINITY;
            dist[class[n - 1]] = f64::INFINITY;
            let spread = objs[class[n - 1]].get(j) - objs[class[0]].get(j);
            let scale = if normalize && spread > 0.0 { spread } else { 1.0 };
            for w in 1..n.saturating_sub(1) {
                let gap = objs[class[w + 1]].get(j) - objs[class[w - 1]].get(j);
                dist[class[w]] += gap / scale;
            }
        }
    }
    dist
}

/// Crowding distances recomputed from a ranked population's objectives and ranks.
pub fn crowding_distance(ranked: &RankedPopulation) -> Vec<f64> {
    let objs: Vec<ObjectiveVector> = ranked
        .members()
        .iter()
        .map(|m| m.objectives().expect("ranked members are evaluated"))
        .collect();
    crowding_values(&objs, &ranked.ranks(), false)
}

fn ranking_of(ind: &Individual) -> Result<(u32, f64)> {
    match (ind.rank(), ind.crowding()) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::InvalidState("rank and crowding must be set before comparison".into())),
    }
}

/// Lower rank wins, then larger crowding, then a fair coin.
pub fn crowded_compare<'a>(
    x: &'a Individual,
    y: &'a Individual,
    rng: &mut RngStream,
) -> Result<&'a Individual> {
    let (rx, cx) = ranking_of(x)?;
    let (ry, cy) = ranking_of(y)?;
    Ok(if rx < ry {
        x
    } else if rx > ry {
        y
    } else if cx > cy {
        x
    } else if cx < cy {
        y
    } else if rng.coin() {
        x
    } else {
        y
    })
}

/// `n_out` winners of two-way crowded tournaments, contestants drawn uniformly with replacement.
pub fn binary_tournament(
    ranked: &RankedPopulation,
    n_out: usize,
    rng: &mut RngStream,
) -> Result<Population> {
    let members = ranked.members();
    if members.is_empty() {
        return Err(crate::error::invalid("tournament on an empty population"));
    }
    let mut pool = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        let a = &members[rng.below(members.len())];
        let b = &members[rng.below(members.len())];
        pool.push(crowded_compare(a, b, rng)?.clone());
    }
    Ok(Population::from_parts(pool, ranked.population().genome_len()))
}
