use crate::error::{invalid, Result};
use crate::genome::{Genome, Individual, Population};
use crate::rng::RngStream;

/// Independent per-bit probabilities of a one.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateModel {
    p: Vec<f64>,
}

impl UnivariateModel {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(invalid("marginal probabilities must lie in [0, 1]"));
        }
        Ok(Self { p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Column means of the selected population.
pub fn fit_univariate(selected: &Population) -> Result<UnivariateModel> {
    if selected.is_empty() {
        return Err(invalid("cannot fit a univariate model to an empty population"));
    }
    let mut ones = vec![0usize; selected.genome_len()];
    for g in selected.genomes() {
        for (i, c) in ones.iter_mut().enumerate() {
            *c += g.get(i) as usize;
        }
    }
    let n = selected.len() as f64;
    Ok(UnivariateModel {
        p: ones.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn sample_univariate(model: &UnivariateModel, n_out: usize, rng: &mut RngStream) -> Population {
    let len = model.p.len();
    let members = (0..n_out)
        .map(|_| {
            let mut g = Genome::zeros(len);
            for (i, &p) in model.p.iter().enumerate() {
                if rng.bernoulli(p) {
                    g.set(i, true);
                }
            }
            Individual::new(g)
        })
        .collect();
    Population::from_parts(members, len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(strs: &[&str]) -> Population {
        Population::from_genomes(strs.iter().map(|s| s.parse::<Genome>().unwrap())).unwrap()
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit_univariate(&pop(&["111", "111"])).unwrap().probabilities(), [1.0; 3]);
        assert_eq!(fit_univariate(&pop(&["10", "01"])).unwrap().probabilities(), [0.5, 0.5]);
        assert_eq!(fit_univariate(&pop(&["110", "100"])).unwrap().probabilities(), [1.0, 0.5, 0.0]);
        assert!(fit_univariate(&Population::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn sample_extremes() {
        let mut rng = RngStream::new(3, 0);
        let ones = sample_univariate(&UnivariateModel::new(vec![1.0; 5]).unwrap(), 20, &mut rng);
        assert!(ones.genomes().all(|g| g.count_ones() == 5));
        let zeros = sample_univariate(&UnivariateModel::new(vec![0.0; 5]).unwrap(), 20, &mut rng);
        assert!(zeros.genomes().all(|g| g.count_ones() == 0));
    }

    #[test]
    fn sample_frequency() {
        let m = UnivariateModel::new(vec![0.25, 0.9]).unwrap();
        let out = sample_univariate(&m, 10_000, &mut RngStream::new(4, 0));
        let f = out.genomes().filter(|g| g.get(0)).count() as f64 / 1e4;
        assert!((f - 0.25).abs() <= 0.02, "{f}");
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(UnivariateModel::new(vec![1.5]).is_err());
    }
}
