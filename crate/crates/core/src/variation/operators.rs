//! Two-point crossover and bit-flip mutation.

use crate::error::{invalid, Result};
use crate::genome::Genome;
use crate::rng::RngStream;

/// With probability `pc`, swaps a uniformly chosen segment `[c1, c2)` between the parents.
pub fn two_point_crossover(
    a: &Genome,
    b: &Genome,
    pc: f64,
    rng: &mut RngStream,
) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "crossover of genomes with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !rng.bernoulli(pc) {
        return Ok((a.clone(), b.clone()));
    }
    let x = rng.below(a.len() + 1);
    let y = rng.below(a.len() + 1);
    swap_segment(a, b, x.min(y), x.max(y))
}

/// Children of exchanging positions `cut1..cut2` between `a` and `b`.
pub fn swap_segment(a: &Genome, b: &Genome, cut1: usize, cut2: usize) -> Result<(Genome, Genome)> {
    if a.len() != b.len() || cut1 > cut2 || cut2 > a.len() {
        return Err(invalid(format!("invalid segment [{cut1}, {cut2}) for length {}", a.len())));
    }
    let (mut c, mut d) = (a.clone(), b.clone());
    for i in cut1..cut2 {
        c.set(i, b.get(i));
        d.set(i, a.get(i));
    }
    Ok((c, d))
}

/// Flips each bit independently with probability `pm`.
pub fn bitflip_mutation(g: &Genome, pm: f64, rng: &mut RngStream) -> Genome {
    let mut out = g.clone();
    for i in 0..g.len() {
        if rng.bernoulli(pm) {
            out.flip(i);
        }
    }
    out
}
