//! Empirical transition and observation counts from labelled days.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DailyActivity, DayTrace, Observation, ObservationSpace};
use crate::Result;

/// Sparse per-state observation counts, before smoothing or normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawObservations {
    pub counts: Vec<BTreeMap<Observation, f64>>,
}

impl RawObservations {
    pub fn zeros(n_states: usize) -> Self {
        RawObservations {
            counts: vec![BTreeMap::new(); n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, state: usize, o: &Observation) -> f64 {
        self.counts[state].get(o).copied().unwrap_or(0.0)
    }

    pub fn add(&mut self, state: usize, o: Observation, count: f64) {
        *self.counts[state].entry(o).or_insert(0.0) += count;
    }

    pub fn total(&self, state: usize) -> f64 {
        self.counts[state].values().sum()
    }
}

/// `T[s][s']` from minute-to-minute succession counts. Rows of states never
/// seen as a source get one pseudo-count per destination, i.e. uniform.
pub fn estimate_transition(traces: &[DayTrace], states: &[DailyActivity]) -> Result<Vec<Vec<f64>>> {
    let n = states.len();
    let mut counts = vec![vec![0.0f64; n]; n];
    for trace in traces {
        let idx = trace.state_indices(states)?;
        for w in idx.windows(2) {
            counts[w[0]][w[1]] += 1.0;
        }
    }
    for row in &mut counts {
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            row.iter_mut().for_each(|c| *c = 1.0 / n as f64);
        } else {
            row.iter_mut().for_each(|c| *c /= total);
        }
    }
    Ok(counts)
}

/// Occurrence counts of each `(time, activity, speed)` cell per state.
pub fn estimate_observation(
    traces: &[DayTrace],
    states: &[DailyActivity],
    space: &ObservationSpace,
) -> Result<RawObservations> {
    let mut raw = RawObservations::zeros(states.len());
    for trace in traces {
        let idx = trace.state_indices(states)?;
        for (s, o) in idx.into_iter().zip(trace.observations(space)) {
            raw.add(s, o, 1.0);
        }
    }
    Ok(raw)
}
