//! Daily-activity recognition as a POMDP belief tracker.
//!
//! Hidden states are daily activities. Each minute the agent receives an
//! observation `(time of day, physical activity, speed)`, updates its belief
//!
//! ```text
//! b'(s') = O(s', o) * sum_s T(s, s') b(s) / Pr(o | b)
//! ```
//!
//! and predicts the action maximising the immediate expected reward
//! `sum_s R(s, a) b(s)`. Actions are predictions and do not influence the
//! environment, so `T` and `O` carry no action axis.

mod belief;
mod estimate;
mod eval;
mod io;
mod model;
mod smoothing;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

pub use belief::{belief_update, infer_day, select_action, Belief, BeliefUpdate, Prediction};
pub use estimate::{estimate_observation, estimate_transition, RawObservations};
pub use eval::{evaluate_day, leave_one_day_out, DailyMetrics};
pub use io::{read_predictions_csv, read_trace_csv, write_predictions_csv, write_trace_csv};
pub use model::{reward_matrix, train_model, PomdpConfig, PomdpModel, MODEL_FORMAT_VERSION};
pub use smoothing::{gaussian_pseudo_counts, normalize_observation, smooth_observation, SmoothingParams};

/// A contextualised activity and its compendium code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DailyActivity {
    pub name: String,
    pub code: u32,
}

impl DailyActivity {
    pub fn new(name: impl Into<String>, code: u32) -> Self {
        DailyActivity {
            name: name.into(),
            code,
        }
    }
}

impl fmt::Display for DailyActivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.code)
    }
}

/// The 17 daily activities used by the default synthetic corpus: the morning
/// commute and office day plus evening activities at home.
pub fn default_states() -> Vec<DailyActivity> {
    [
        ("eat breakfast", 13030),
        ("wash self", 13040),
        ("get ready", 9070),
        ("go to the bus", 17190),
        ("take the bus", 16016),
        ("walk to work", 17190),
        ("go upstairs", 17133),
        ("go to the toilets", 17151),
        ("work", 11580),
        ("go downstairs", 17070),
        ("walk home", 17152),
        ("eat dinner", 13030),
        ("wash dishes", 5035),
        ("play guitar", 10074),
        ("play computer games", 9045),
        ("watch a movie", 7025),
        ("sleep", 7030),
    ]
    .into_iter()
    .map(|(n, c)| DailyActivity::new(n, c))
    .collect()
}

/// Index of the state called `name`.
pub fn state_index(states: &[DailyActivity], name: &str) -> Result<usize> {
    states
        .iter()
        .position(|s| s.name == name)
        .ok_or_else(|| Error::UnknownDailyActivity(name.to_string()))
}

/// Speed partition given by increasing upper edges; bin `i` holds speeds in
/// `(edges[i-1], edges[i]]`, the first bin everything `<= edges[0]` and the
/// last bin everything above the final edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeedBins {
    pub edges_kmh: Vec<f64>,
}

impl Default for SpeedBins {
    /// `{0}`, `(0,1]`, `(1,3.2]`, `(3.2,5.5]`, `(5.5,20]`, `(20,inf)` km/h.
    fn default() -> Self {
        SpeedBins {
            edges_kmh: vec![0.0, 1.0, 3.2, 5.5, 20.0],
        }
    }
}

impl SpeedBins {
    pub fn len(&self) -> usize {
        self.edges_kmh.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin(&self, speed_kmh: f64) -> usize {
        self.edges_kmh.iter().filter(|&&e| e < speed_kmh).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges_kmh.windows(2).any(|w| w[1] <= w[0]) || self.edges_kmh.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "speed bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Discretisation of `(time, physical activity, speed)` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSpace {
    pub time_bins: usize,
    pub speed_bins: SpeedBins,
}

impl Default for ObservationSpace {
    fn default() -> Self {
        ObservationSpace {
            time_bins: 1440,
            speed_bins: SpeedBins::default(),
        }
    }
}

impl ObservationSpace {
    pub fn n_cells(&self) -> usize {
        self.time_bins * PhysicalActivity::COUNT * self.speed_bins.len()
    }

    /// Flat cell index; time is the slowest axis.
    pub fn cell(&self, o: &Observation) -> usize {
        (o.time_bin * PhysicalActivity::COUNT + o.activity.index()) * self.speed_bins.len() + o.speed_bin
    }

    pub fn observe(&self, minute: u32, activity: PhysicalActivity, speed_kmh: f64) -> Observation {
        Observation {
            time_bin: minute as usize % self.time_bins,
            activity,
            speed_bin: self.speed_bins.bin(speed_kmh),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_bins == 0 {
            return Err(Error::InvalidParameter("time_bins must be positive".into()));
        }
        self.speed_bins.validate()
    }

    pub fn check(&self, o: &Observation) -> Result<()> {
        if o.time_bin >= self.time_bins || o.speed_bin >= self.speed_bins.len() {
            return Err(Error::InvalidParameter(format!(
                "observation {o:?} outside {} time bins x {} speed bins",
                self.time_bins,
                self.speed_bins.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub time_bin: usize,
    pub activity: PhysicalActivity,
    pub speed_bin: usize,
}

/// One minute of a recorded or simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Minutes since midnight of the day the trace started on.
    pub minute: u32,
    pub activity: String,
    pub phys: PhysicalActivity,
    pub speed_kmh: f64,
}

/// Per-minute ground truth with the observations made at each minute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DayTrace {
    pub steps: Vec<TraceStep>,
}

impl DayTrace {
    pub fn new(steps: Vec<TraceStep>) -> Result<Self> {
        if let Some(i) = steps.windows(2).position(|w| w[1].minute != w[0].minute + 1) {
            return Err(Error::InvalidParameter(format!(
                "trace minutes must increase by one (step {})",
                i + 1
            )));
        }
        Ok(DayTrace { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn observations(&self, space: &ObservationSpace) -> Vec<Observation> {
        self.steps
            .iter()
            .map(|s| space.observe(s.minute, s.phys, s.speed_kmh))
            .collect()
    }

    /// True state indices.
    pub fn state_indices(&self, states: &[DailyActivity]) -> Result<Vec<usize>> {
        self.steps.iter().map(|s| state_index(states, &s.activity)).collect()
    }
}
