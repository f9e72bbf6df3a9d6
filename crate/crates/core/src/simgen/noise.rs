use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::PhysicalActivity;
use crate::dailypomdp::{DayTrace, Observation, ObservationSpace};
use crate::{Error, Result};

const K: usize = PhysicalActivity::COUNT;

/// Row-stochastic corruption of physical-activity labels; row = true
/// activity, column = reported activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseChannel {
    rows: [[f64; K]; K],
}

impl Default for NoiseChannel {
    /// Recognition rates of a smartphone decision-tree recogniser, in
    /// `lie, missing, sit, stairsdown, stairsup, stand, run, walk` order.
    fn default() -> Self {
        NoiseChannel {
            rows: [
                [0.75, 0.06, 0.09, 0.0, 0.0, 0.10, 0.0, 0.0],
                [0.10, 0.83, 0.07, 0.0, 0.0, 0.0, 0.0, 0.0],
                [0.09, 0.0, 0.78, 0.0, 0.0, 0.13, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.96, 0.04, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.01, 0.99, 0.0, 0.0, 0.0],
                [0.03, 0.04, 0.02, 0.0, 0.0, 0.91, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0, 0.99],
            ],
        }
    }
}

impl NoiseChannel {
    pub fn new(rows: [[f64; K]; K]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "noise row {i} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(NoiseChannel { rows })
    }

    pub fn identity() -> Self {
        let mut rows = [[0.0; K]; K];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        NoiseChannel { rows }
    }

    pub fn rows(&self) -> &[[f64; K]; K] {
        &self.rows
    }

    pub fn sample<R: Rng>(&self, truth: PhysicalActivity, rng: &mut R) -> PhysicalActivity {
        let u: f64 = rng.random();
        let row = &self.rows[truth.index()];
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return PhysicalActivity::ALL[j];
            }
        }
        // rounding left u above the cumulative sum: last nonzero column
        let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(truth.index());
        PhysicalActivity::ALL[last]
    }
}

/// The trace with every observed physical activity resampled through `channel`.
pub fn corrupt_trace(truth: &DayTrace, channel: &NoiseChannel, seed: u64) -> DayTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = truth.clone();
    for s in &mut out.steps {
        s.phys = channel.sample(s.phys, &mut rng);
    }
    out
}

/// Observations of `truth` with corrupted physical activities; time and
/// speed bins pass through unchanged.
pub fn corrupt_observations(
    truth: &DayTrace,
    channel: &NoiseChannel,
    seed: u64,
    space: &ObservationSpace,
) -> Vec<Observation> {
    corrupt_trace(truth, channel, seed).observations(space)
}
