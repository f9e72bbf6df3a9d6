use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::smoothing::{normalize_observation, smooth_observation, SmoothingParams};
use super::{
    default_states, estimate_observation, estimate_transition, state_index, DailyActivity, DayTrace,
    Observation, ObservationSpace, RawObservations,
};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Everything needed to estimate a [`PomdpModel`] from traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PomdpConfig {
    pub states: Vec<DailyActivity>,
    pub space: ObservationSpace,
    /// `None` keeps the plain empirical observation frequencies.
    pub smoothing: Option<SmoothingParams>,
    /// Per-state multiplier on the reward for predicting that state correctly.
    pub reward_multipliers: BTreeMap<String, f64>,
}

impl Default for PomdpConfig {
    fn default() -> Self {
        PomdpConfig {
            states: default_states(),
            space: ObservationSpace::default(),
            smoothing: Some(SmoothingParams::default()),
            reward_multipliers: BTreeMap::new(),
        }
    }
}

impl PomdpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidParameter("no daily activities configured".into()));
        }
        for (i, s) in self.states.iter().enumerate() {
            if self.states[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidParameter(format!("duplicate daily activity `{}`", s.name)));
            }
        }
        self.space.validate()?;
        if let Some(p) = &self.smoothing {
            p.validate(&self.space)?;
        }
        reward_matrix(&self.states, &self.reward_multipliers)?;
        Ok(())
    }
}

/// Identity rewards (1 for a correct prediction, 0 otherwise) with the
/// diagonal entry of each listed state scaled by its multiplier.
pub fn reward_matrix(states: &[DailyActivity], multipliers: &BTreeMap<String, f64>) -> Result<Vec<Vec<f64>>> {
    let n = states.len();
    let mut r = vec![vec![0.0; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (name, &m) in multipliers {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reward multiplier for `{name}` must be positive, got {m}"
            )));
        }
        let i = state_index(states, name)?;
        r[i][i] = m;
    }
    Ok(r)
}

/// A trained belief-tracking model. `observation[s][cell]` is the dense,
/// normalised observation distribution of state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    pub states: Vec<DailyActivity>,
    pub space: ObservationSpace,
    pub transition: Vec<Vec<f64>>,
    pub raw: RawObservations,
    pub smoothing: Option<SmoothingParams>,
    pub rewards: Vec<Vec<f64>>,
    observation: Vec<Vec<f64>>,
}

/// Estimates transitions and (optionally smoothed) observation probabilities.
pub fn train_model(traces: &[DayTrace], config: &PomdpConfig) -> Result<PomdpModel> {
    config.validate()?;
    if traces.is_empty() {
        return Err(Error::InvalidParameter("no training traces".into()));
    }
    let transition = estimate_transition(traces, &config.states)?;
    let raw = estimate_observation(traces, &config.states, &config.space)?;
    PomdpModel::new(
        config.states.clone(),
        config.space.clone(),
        transition,
        raw,
        config.smoothing,
        reward_matrix(&config.states, &config.reward_multipliers)?,
    )
}

impl PomdpModel {
    pub fn new(
        states: Vec<DailyActivity>,
        space: ObservationSpace,
        transition: Vec<Vec<f64>>,
        raw: RawObservations,
        smoothing: Option<SmoothingParams>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = states.len();
        space.validate()?;
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!("transition matrix must be {n}x{n}")));
        }
        for (i, row) in transition.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "transition row {i} is not a distribution (sum {sum})"
                )));
            }
        }
        if rewards.len() != n || rewards.iter().any(|r| r.len() != n || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter(format!("reward matrix must be {n}x{n} and finite")));
        }
        if raw.n_states() != n {
            return Err(Error::InvalidParameter(format!(
                "observation counts for {} states, expected {n}",
                raw.n_states()
            )));
        }
        for cells in &raw.counts {
            for (o, &c) in cells {
                space.check(o)?;
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bad observation count {c}")));
                }
            }
        }
        let observation = match &smoothing {
            Some(p) => smooth_observation(&raw, &space, p)?,
            None => normalize_observation(&raw, &space),
        };
        Ok(PomdpModel {
            states,
            space,
            transition,
            raw,
            smoothing,
            rewards,
            observation,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// `O(s', o)`.
    pub fn observation_prob(&self, state: usize, o: &Observation) -> f64 {
        self.observation[state][self.space.cell(o)]
    }

    pub fn observation_tensor(&self) -> &[Vec<f64>] {
        &self.observation
    }

    /// Same model with different reward multipliers.
    pub fn with_reward_multipliers(&self, multipliers: &BTreeMap<String, f64>) -> Result<Self> {
        let mut m = self.clone();
        m.rewards = reward_matrix(&self.states, multipliers)?;
        Ok(m)
    }

    /// Same counts under different smoothing.
    pub fn with_smoothing(&self, smoothing: Option<SmoothingParams>) -> Result<Self> {
        PomdpModel::new(
            self.states.clone(),
            self.space.clone(),
            self.transition.clone(),
            self.raw.clone(),
            smoothing,
            self.rewards.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            states: self.states.clone(),
            space: self.space.clone(),
            transition: self.transition.clone(),
            observation_counts: self
                .raw
                .counts
                .iter()
                .map(|cells| {
                    cells
                        .iter()
                        .map(|(o, &count)| CountCell {
                            t: o.time_bin,
                            a: o.activity,
                            v: o.speed_bin,
                            count,
                        })
                        .collect()
                })
                .collect(),
            smoothing: self.smoothing,
            rewards: self.rewards.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("POMDP model version {} unsupported", file.version)));
        }
        let mut raw = RawObservations::zeros(file.observation_counts.len());
        for (s, cells) in file.observation_counts.into_iter().enumerate() {
            for c in cells {
                let o = Observation {
                    time_bin: c.t,
                    activity: c.a,
                    speed_bin: c.v,
                };
                raw.add(s, o, c.count);
            }
        }
        PomdpModel::new(file.states, file.space, file.transition, raw, file.smoothing, file.rewards)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PomdpModel::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::json(path, j),
            other => other,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CountCell {
    t: usize,
    a: crate::classifier::PhysicalActivity,
    v: usize,
    count: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    states: Vec<DailyActivity>,
    space: ObservationSpace,
    transition: Vec<Vec<f64>>,
    observation_counts: Vec<Vec<CountCell>>,
    smoothing: Option<SmoothingParams>,
    rewards: Vec<Vec<f64>>,
}
