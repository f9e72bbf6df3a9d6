//! Additive smoothing of the sparse observation counts along the time axis.
//!
//! Each raw occurrence with count `c` at `(t, a, v)` spreads pseudo-counts
//! `c * amplitude * exp(-(t' - t)^2 / (2 sigma^2))` over every time bin `t'`
//! of the same `(a, v)` slice. Raw and pseudo counts are summed and normalised
//! per state; the floor is then applied as a uniform mixture
//! `p' = (1 - n eps) p + eps` over the `n` cells, which keeps every cell at
//! least `eps` while preserving the unit sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ObservationSpace, RawObservations};
use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingParams {
    pub sigma_minutes: f64,
    pub amplitude: f64,
    pub floor_epsilon: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            sigma_minutes: 30.0,
            amplitude: 0.1,
            floor_epsilon: 1e-6,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self, space: &ObservationSpace) -> Result<()> {
        if !(self.sigma_minutes > 0.0 && self.sigma_minutes.is_finite()) {
            return Err(Error::InvalidParameter("sigma_minutes must be positive".into()));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter("amplitude must be positive".into()));
        }
        if !(self.floor_epsilon >= 0.0) || self.floor_epsilon * space.n_cells() as f64 > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "floor_epsilon must be in [0, 1/{}]",
                space.n_cells()
            )));
        }
        Ok(())
    }
}

/// Dense Gaussian pseudo-counts only (no raw counts, no floor).
pub fn gaussian_pseudo_counts(
    raw: &RawObservations,
    space: &ObservationSpace,
    sigma_minutes: f64,
    amplitude: f64,
) -> Vec<Vec<f64>> {
    let nt = space.time_bins;
    let nv = space.speed_bins.len();
    let kernel: Vec<f64> = (0..nt)
        .map(|d| amplitude * (-((d * d) as f64) / (2.0 * sigma_minutes * sigma_minutes)).exp())
        .collect();
    raw.counts
        .iter()
        .map(|cells| {
            let mut dense = vec![0.0; space.n_cells()];
            // (activity, speed) -> occurrences along time
            let mut slices: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
            for (o, &c) in cells {
                if c != 0.0 {
                    slices
                        .entry((o.activity.index(), o.speed_bin))
                        .or_default()
                        .push((o.time_bin, c));
                }
            }
            for ((a, v), occ) in slices {
                for t2 in 0..nt {
                    let mass: f64 = occ.iter().map(|&(t, c)| c * kernel[t.abs_diff(t2)]).sum();
                    dense[(t2 * PhysicalActivity::COUNT + a) * nv + v] += mass;
                }
            }
            dense
        })
        .collect()
}

fn densify(raw: &RawObservations, space: &ObservationSpace) -> Vec<Vec<f64>> {
    raw.counts
        .iter()
        .map(|cells| {
            let mut dense = vec![0.0; space.n_cells()];
            for (o, &c) in cells {
                dense[space.cell(o)] += c;
            }
            dense
        })
        .collect()
}

fn normalize_rows(tensor: &mut [Vec<f64>]) {
    for row in tensor {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|p| *p /= total);
        } else {
            let u = 1.0 / row.len() as f64;
            row.iter_mut().for_each(|p| *p = u);
        }
    }
}

/// Per-state normalised raw counts; a state without counts is uniform.
pub fn normalize_observation(raw: &RawObservations, space: &ObservationSpace) -> Vec<Vec<f64>> {
    let mut t = densify(raw, space);
    normalize_rows(&mut t);
    t
}

/// Raw counts plus Gaussian pseudo-counts, normalised and floored.
pub fn smooth_observation(
    raw: &RawObservations,
    space: &ObservationSpace,
    params: &SmoothingParams,
) -> Result<Vec<Vec<f64>>> {
    params.validate(space)?;
    let mut t = densify(raw, space);
    let pseudo = gaussian_pseudo_counts(raw, space, params.sigma_minutes, params.amplitude);
    for (row, p) in t.iter_mut().zip(pseudo) {
        for (x, y) in row.iter_mut().zip(p) {
            *x += y;
        }
    }
    normalize_rows(&mut t);
    let eps = params.floor_epsilon;
    if eps > 0.0 {
        let keep = 1.0 - eps * space.n_cells() as f64;
        for row in &mut t {
            row.iter_mut().for_each(|p| *p = keep * *p + eps);
        }
    }
    Ok(t)
}
