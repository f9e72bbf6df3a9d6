use super::{Channel, SensorStream};
use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

/// A fixed-length slice of a (filtered) stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_index: usize,
    pub channels: Vec<Channel>,
    /// `values[c][i]`: channel `c`, sample `i` within the window.
    pub values: Vec<Vec<f64>>,
    pub sample_rate: f64,
    pub label: Option<PhysicalActivity>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, channel: Channel) -> Option<&[f64]> {
        let idx = self.channels.iter().position(|&c| c == channel)?;
        Some(&self.values[idx])
    }
}

fn hop(window_len: usize, overlap: f64) -> usize {
    ((window_len as f64 * (1.0 - overlap)).round() as usize).max(1)
}

/// Start offsets of every complete window over `n` samples.
pub fn window_starts(n: usize, window_len: usize, overlap: f64) -> Result<Vec<usize>> {
    if window_len < 2 {
        return Err(Error::InvalidParameter(format!(
            "window_len must be >= 2, got {window_len}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter(format!(
            "overlap must be in [0, 1), got {overlap}"
        )));
    }
    if n < window_len {
        return Ok(Vec::new());
    }
    let step = hop(window_len, overlap);
    Ok((0..=(n - window_len) / step).map(|i| i * step).collect())
}

/// Cuts `stream` into windows of `window_len` samples advancing by
/// `window_len * (1 - overlap)`. A trailing partial window is dropped.
pub fn segment_windows(stream: &SensorStream, window_len: usize, overlap: f64) -> Result<Vec<Window>> {
    let starts = window_starts(stream.len(), window_len, overlap)?;
    Ok(starts
        .into_iter()
        .map(|start| Window {
            start_index: start,
            channels: stream.channels().to_vec(),
            values: stream
                .columns()
                .iter()
                .map(|c| c[start..start + window_len].to_vec())
                .collect(),
            sample_rate: stream.sample_rate(),
            label: stream.label(),
        })
        .collect())
}
