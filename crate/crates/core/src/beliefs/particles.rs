use std::collections::HashMap;

use rand::Rng;

use super::Distribution;
use crate::error::{PomdpError, Result};
use crate::model::{RandomSource, State};

/// Particle belief: an unweighted multiset of states, or weighted
/// `(state, weight)` pairs with weights normalized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    // Normalized cumulative weights; `None` for the unweighted variant.
    cumulative: Option<Vec<f64>>,
}

impl<S: State> ParticleBelief<S> {
    pub fn new(particles: Vec<S>) -> Result<Self> {
        if particles.is_empty() {
            return Err(PomdpError::InvalidDistribution(
                "particle belief needs at least one particle".into(),
            ));
        }
        Ok(Self {
            particles,
            cumulative: None,
        })
    }

    pub fn weighted(pairs: Vec<(S, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(PomdpError::InvalidDistribution(
                "particle belief needs at least one particle".into(),
            ));
        }
        if pairs.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(PomdpError::InvalidDistribution("negative particle weight".into()));
        }
        let total: f64 = pairs.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(PomdpError::InvalidDistribution("particle weights sum to zero".into()));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(pairs.len());
        let mut particles = Vec::with_capacity(pairs.len());
        for (s, w) in pairs {
            acc += w / total;
            cumulative.push(acc);
            particles.push(s);
        }
        Ok(Self {
            particles,
            cumulative: Some(cumulative),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn is_weighted(&self) -> bool {
        self.cumulative.is_some()
    }

    /// Normalized weight of particle `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.cumulative {
            None => 1.0 / self.particles.len() as f64,
            Some(c) => c[i] - if i == 0 { 0.0 } else { c[i - 1] },
        }
    }

    /// `(state, weight)` pairs; unweighted particles carry `1/N`.
    pub fn iter_weighted(&self) -> impl Iterator<Item = (&S, f64)> + '_ {
        self.particles
            .iter()
            .enumerate()
            .map(move |(i, s)| (s, self.weight(i)))
    }

    fn masses(&self) -> HashMap<&S, f64> {
        let mut masses: HashMap<&S, f64> = HashMap::new();
        for (s, w) in self.iter_weighted() {
            *masses.entry(s).or_default() += w;
        }
        masses
    }
}

impl<S: State> Distribution<S> for ParticleBelief<S> {
    fn probability(&self, value: &S) -> f64 {
        self.iter_weighted()
            .filter(|(s, _)| *s == value)
            .map(|(_, w)| w)
            .sum()
    }

    fn sample(&self, rng: &mut RandomSource) -> S {
        let i = match &self.cumulative {
            None => rng.random_range(0..self.particles.len()),
            Some(c) => {
                let u = rng.random::<f64>() * c[c.len() - 1];
                c.partition_point(|&x| x <= u).min(c.len() - 1)
            }
        };
        self.particles[i].clone()
    }

    fn argmax(&self) -> Result<S> {
        let masses = self.masses();
        let mut best: Option<(&S, f64)> = None;
        for (s, m) in masses {
            best = match best {
                Some((b, bm)) if bm > m || (bm == m && b < s) => Some((b, bm)),
                _ => Some((s, m)),
            };
        }
        best.map(|(s, _)| s.clone())
            .ok_or_else(|| PomdpError::InvalidDistribution("empty particle set".into()))
    }

    fn support(&self) -> Option<Vec<S>> {
        let mut states: Vec<S> = self
            .masses()
            .into_iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(s, _)| s.clone())
            .collect();
        states.sort();
        Some(states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seeded_rng;

    #[test]
    fn empty_rejected() {
        assert!(ParticleBelief::<u8>::new(vec![]).is_err());
        assert!(ParticleBelief::<u8>::weighted(vec![(1, 0.0)]).is_err());
    }

    #[test]
    fn unweighted_probability_and_mode() {
        let p = ParticleBelief::new(vec![1, 2, 2, 3]).unwrap();
        assert_eq!(p.probability(&2), 0.5);
        assert_eq!(p.argmax().unwrap(), 2);
        assert_eq!(p.support().unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn weighted_sampling() {
        let p = ParticleBelief::weighted(vec![(0, 1.0), (1, 3.0)]).unwrap();
        assert!((p.weight(1) - 0.75).abs() < 1e-12);
        let mut rng = seeded_rng(11);
        let n = 100_000;
        let ones = (0..n).filter(|_| p.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.75).abs() < 0.01);
    }
}
