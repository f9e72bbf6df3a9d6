use std::fmt::Write as _;

use serde::Serialize;

use super::{infer_day, train_model, DailyActivity, DayTrace, PomdpConfig};
use crate::{Error, Result};

/// Per-activity recall and its summaries. Activities absent from the truth
/// have no recall and are left out of every summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyMetrics {
    pub recall: Vec<Option<f64>>,
    pub support: Vec<usize>,
    pub mean: f64,
    /// Minute-weighted mean recall, i.e. per-minute accuracy.
    pub weighed_mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn evaluate_day(predicted: &[usize], truth: &[usize], n_states: usize) -> Result<DailyMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} truth minutes",
            predicted.len(),
            truth.len()
        )));
    }
    if let Some(&s) = predicted.iter().chain(truth).find(|&&s| s >= n_states) {
        return Err(Error::InvalidParameter(format!("state index {s} out of range")));
    }
    let mut support = vec![0usize; n_states];
    let mut correct = vec![0usize; n_states];
    for (&p, &t) in predicted.iter().zip(truth) {
        support[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    let recall: Vec<Option<f64>> = support
        .iter()
        .zip(&correct)
        .map(|(&s, &c)| (s > 0).then(|| c as f64 / s as f64))
        .collect();
    let present: Vec<f64> = recall.iter().flatten().copied().collect();
    if present.is_empty() {
        return Ok(DailyMetrics {
            recall,
            support,
            mean: 0.0,
            weighed_mean: 0.0,
            min: 0.0,
            max: 0.0,
        });
    }
    Ok(DailyMetrics {
        mean: present.iter().sum::<f64>() / present.len() as f64,
        weighed_mean: correct.iter().sum::<usize>() as f64 / truth.len() as f64,
        min: present.iter().copied().fold(f64::INFINITY, f64::min),
        max: present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        recall,
        support,
    })
}

/// Trains on all days but one, infers the held-out day, and scores the
/// pooled predictions of every fold.
pub fn leave_one_day_out(traces: &[DayTrace], config: &PomdpConfig) -> Result<DailyMetrics> {
    if traces.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "leave-one-day-out needs at least 2 days, got {}",
            traces.len()
        )));
    }
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for (i, held_out) in traces.iter().enumerate() {
        let train: Vec<DayTrace> = traces
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, t)| t.clone())
            .collect();
        let model = train_model(&train, config)?;
        let p = infer_day(&held_out.observations(&config.space), &model)?;
        pred.extend(p.iter().map(|x| x.state));
        truth.extend(held_out.state_indices(&config.states)?);
    }
    evaluate_day(&pred, &truth, config.states.len())
}

impl DailyMetrics {
    /// Indices of the `k` present activities with the lowest recall, lowest
    /// index first among equals.
    pub fn worst(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<(usize, f64)> = self
            .recall
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
            .collect();
        idx.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        idx.into_iter().take(k).map(|(i, _)| i).collect()
    }

    /// Per-activity recall lines followed by a summary row.
    pub fn to_table(&self, states: &[DailyActivity]) -> String {
        let mut s = format!("{:<22}{:>8}{:>8}\n", "activity", "minutes", "recall");
        for (i, st) in states.iter().enumerate() {
            if let Some(r) = self.recall.get(i).copied().flatten() {
                let _ = writeln!(s, "{:<22}{:>8}{:>8.3}", st.name, self.support[i], r);
            }
        }
        let _ = writeln!(
            s,
            "mean {:.3}  weighed mean {:.3}  min {:.3}  max {:.3}",
            self.mean, self.weighed_mean, self.min, self.max
        );
        s
    }
}
