use std::collections::BTreeMap;

use rand::Rng;

use super::Distribution;
use crate::error::{PomdpError, Result};
use crate::model::{RandomSource, State};

/// Normalization tolerance for tabular beliefs.
pub(crate) const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Entries below this mass are dropped after an update.
pub(crate) const PRUNE_THRESHOLD: f64 = 1e-15;

/// Tabular belief: a finite map from state to probability, kept sorted by
/// state so iteration and sampling are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBelief<S> {
    entries: Vec<(S, f64)>,
    cumulative: Vec<f64>,
}

impl<S: State> HistogramBelief<S> {
    /// Builds a histogram from probabilities that already sum to one.
    pub fn new(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let map = collect_unique(entries)?;
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(PomdpError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self::from_sorted(map.into_iter().collect()))
    }

    /// Builds a histogram from nonnegative weights, normalizing them.
    pub fn from_weights(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let map = collect_unique(entries)?;
        let total: f64 = map.values().sum();
        if total <= 0.0 {
            return Err(PomdpError::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self::from_sorted(
            map.into_iter().map(|(s, w)| (s, w / total)).collect(),
        ))
    }

    pub fn uniform(states: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::from_weights(states.into_iter().map(|s| (s, 1.0)))
    }

    pub fn point_mass(state: S) -> Self {
        Self::from_sorted(vec![(state, 1.0)])
    }

    // Mass accumulated by an update; prunes negligible entries.
    pub(crate) fn from_unnormalized(mut entries: Vec<(S, f64)>, total: f64) -> Self {
        entries.retain(|(_, w)| *w / total >= PRUNE_THRESHOLD);
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, w) in entries.iter_mut() {
            *w /= total;
        }
        Self::from_sorted(entries)
    }

    fn from_sorted(entries: Vec<(S, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = entries
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Self {
            entries,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.entries.iter().map(|(s, p)| (s, *p))
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

fn collect_unique<S: State>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<BTreeMap<S, f64>> {
    let mut map = BTreeMap::new();
    for (s, p) in entries {
        if !p.is_finite() || p < 0.0 {
            return Err(PomdpError::InvalidDistribution(format!(
                "probability {p} for {s:?}"
            )));
        }
        if map.insert(s.clone(), p).is_some() {
            return Err(PomdpError::InvalidDistribution(format!(
                "duplicate state {s:?}"
            )));
        }
    }
    Ok(map)
}

impl<S: State> Distribution<S> for HistogramBelief<S> {
    fn probability(&self, value: &S) -> f64 {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(value))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    fn sample(&self, rng: &mut RandomSource) -> S {
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.entries[i.min(self.entries.len() - 1)].0.clone()
    }

    fn argmax(&self) -> Result<S> {
        let mut best: Option<&(S, f64)> = None;
        for e in &self.entries {
            if best.is_none_or(|b| e.1 > b.1) {
                best = Some(e);
            }
        }
        best.map(|(s, _)| s.clone())
            .ok_or_else(|| PomdpError::InvalidDistribution("empty histogram".into()))
    }

    fn support(&self) -> Option<Vec<S>> {
        Some(
            self.entries
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(s, _)| s.clone())
                .collect(),
        )
    }
}
