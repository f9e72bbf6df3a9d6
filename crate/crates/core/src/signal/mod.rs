//! IMU ingestion, band-pass filtering, windowing and feature extraction.

mod features;
mod filter;
mod io;
mod window;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

pub use features::{
    build_feature_matrix, extract_features, extract_freq_features, extract_time_features,
    FeatureDescriptor, FeatureMatrix, FeatureVector, Schema, Taper, AR_ORDER, FEATURES_PER_SENSOR,
};
pub use filter::{bandpass_filter, Biquad, SosFilter};
pub use io::{
    read_feature_cache, read_feature_csv, read_sensor_csv, read_session_manifest,
    write_feature_cache, write_feature_csv, write_sensor_csv, SessionEntry,
};
pub use window::{segment_windows, window_starts, Window};

/// The nine smartphone channels in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Ax,
    Ay,
    Az,
    Gx,
    Gy,
    Gz,
    Mx,
    My,
    Mz,
}

impl Channel {
    pub const ALL: [Channel; 9] = [
        Channel::Ax,
        Channel::Ay,
        Channel::Az,
        Channel::Gx,
        Channel::Gy,
        Channel::Gz,
        Channel::Mx,
        Channel::My,
        Channel::Mz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Ax => "ax",
            Channel::Ay => "ay",
            Channel::Az => "az",
            Channel::Gx => "gx",
            Channel::Gy => "gy",
            Channel::Gz => "gz",
            Channel::Mx => "mx",
            Channel::My => "my",
            Channel::Mz => "mz",
        }
    }

    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn sensor(self) -> Sensor {
        match self {
            Channel::Ax | Channel::Ay | Channel::Az => Sensor::Accelerometer,
            Channel::Gx | Channel::Gy | Channel::Gz => Sensor::Gyroscope,
            Channel::Mx | Channel::My | Channel::Mz => Sensor::Magnetometer,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A three-axis sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    Accelerometer,
    Gyroscope,
    Magnetometer,
}

impl Sensor {
    pub const ALL: [Sensor; 3] = [Sensor::Accelerometer, Sensor::Gyroscope, Sensor::Magnetometer];

    pub fn short_name(self) -> &'static str {
        match self {
            Sensor::Accelerometer => "acc",
            Sensor::Gyroscope => "gyro",
            Sensor::Magnetometer => "mag",
        }
    }

    pub fn axes(self) -> [Channel; 3] {
        match self {
            Sensor::Accelerometer => [Channel::Ax, Channel::Ay, Channel::Az],
            Sensor::Gyroscope => [Channel::Gx, Channel::Gy, Channel::Gz],
            Sensor::Magnetometer => [Channel::Mx, Channel::My, Channel::Mz],
        }
    }
}

/// Timestamped multi-channel samples at a fixed rate.
///
/// Values are stored column-major: `columns[c][i]` is channel `c` at sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    sample_rate: f64,
    channels: Vec<Channel>,
    timestamps: Vec<f64>,
    columns: Vec<Vec<f64>>,
    label: Option<PhysicalActivity>,
}

impl SensorStream {
    pub fn new(
        sample_rate: f64,
        channels: Vec<Channel>,
        timestamps: Vec<f64>,
        columns: Vec<Vec<f64>>,
        label: Option<PhysicalActivity>,
    ) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidStream(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if channels.len() != columns.len() {
            return Err(Error::InvalidStream(format!(
                "{} channels declared but {} columns given",
                channels.len(),
                columns.len()
            )));
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(Error::InvalidStream(format!("duplicate channel {c}")));
            }
        }
        for (c, col) in channels.iter().zip(&columns) {
            if col.len() != timestamps.len() {
                return Err(Error::InvalidStream(format!(
                    "channel {c} has {} samples, expected {}",
                    col.len(),
                    timestamps.len()
                )));
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidStream(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(SensorStream {
            sample_rate,
            channels,
            timestamps,
            columns,
            label,
        })
    }

    /// Builds a stream with timestamps `i / sample_rate`.
    pub fn from_columns(
        sample_rate: f64,
        channels: Vec<Channel>,
        columns: Vec<Vec<f64>>,
        label: Option<PhysicalActivity>,
    ) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let timestamps = (0..n).map(|i| i as f64 / sample_rate).collect();
        SensorStream::new(sample_rate, channels, timestamps, columns, label)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, channel: Channel) -> Option<&[f64]> {
        let idx = self.channels.iter().position(|&c| c == channel)?;
        Some(&self.columns[idx])
    }

    pub fn label(&self) -> Option<PhysicalActivity> {
        self.label
    }

    pub fn with_label(mut self, label: Option<PhysicalActivity>) -> Self {
        self.label = label;
        self
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Keeps only the listed channels, in the listed order.
    pub fn select(&self, channels: &[Channel]) -> Result<SensorStream> {
        let mut columns = Vec::with_capacity(channels.len());
        for &c in channels {
            let col = self
                .column(c)
                .ok_or_else(|| Error::Schema(format!("stream has no channel {c}")))?;
            columns.push(col.to_vec());
        }
        Ok(SensorStream {
            sample_rate: self.sample_rate,
            channels: channels.to_vec(),
            timestamps: self.timestamps.clone(),
            columns,
            label: self.label,
        })
    }

    pub(crate) fn map_columns(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> SensorStream {
        SensorStream {
            sample_rate: self.sample_rate,
            channels: self.channels.clone(),
            timestamps: self.timestamps.clone(),
            columns: self.columns.iter().map(|c| f(c)).collect(),
            label: self.label,
        }
    }
}

/// Parameters of the filter → segment → extract chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub sample_rate: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    pub window_len: usize,
    pub overlap: f64,
    pub sensors: Vec<Sensor>,
    pub taper: Taper,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            sample_rate: 50.0,
            low_hz: 0.3,
            high_hz: 20.0,
            window_len: 128,
            overlap: 0.5,
            sensors: Sensor::ALL.to_vec(),
            taper: Taper::Hamming,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate / 2.0;
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter("sample_rate must be positive".into()));
        }
        if !(0.0 < self.low_hz && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::InvalidParameter(format!(
                "band {}..{} Hz must satisfy 0 < low < high < {nyquist}",
                self.low_hz, self.high_hz
            )));
        }
        if self.window_len < 2 || !self.window_len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "window_len must be a power of two >= 2, got {}",
                self.window_len
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!(
                "overlap must be in [0, 1), got {}",
                self.overlap
            )));
        }
        if self.sensors.is_empty() {
            return Err(Error::InvalidParameter("no sensors selected".into()));
        }
        Ok(())
    }

    pub fn channels(&self) -> Vec<Channel> {
        self.sensors.iter().flat_map(|s| s.axes()).collect()
    }
}
