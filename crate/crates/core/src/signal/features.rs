//! Time- and frequency-domain window features.
//!
//! Per channel (time): mean, population standard deviation, energy (mean of
//! squares) and [`AR_ORDER`] Burg auto-regression coefficients.
//! Per sensor (time): signal magnitude area, total energy and the Pearson
//! correlation of each axis pair.
//! Per channel (frequency): skewness and Shannon entropy of the normalised
//! one-sided magnitude spectrum, and spectral energy.
//! Per sensor (frequency): total spectral energy.
//!
//! Spectral energy is the mean squared DFT magnitude over all `N` bins, so by
//! Parseval it equals `N` times the time-domain energy of the tapered signal.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::window::segment_windows;
use super::{bandpass_filter, Channel, Sensor, SensorStream, SignalConfig, Window};
use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

pub const AR_ORDER: usize = 4;

/// Features contributed by one complete three-axis sensor: 3 axes x (4 basic
/// + 3 spectral) + SMA + total energy + 3 correlations + total spectral energy.
pub const FEATURES_PER_SENSOR: usize = 3 * (3 + AR_ORDER) + 3 * 3 + 2 + 3 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Hamming,
    None,
}

impl Taper {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Taper::None => vec![1.0; n],
            Taper::Hamming if n < 2 => vec![1.0; n],
            Taper::Hamming => (0..n)
                .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Feature name and the channel, channel pair or sensor it was computed on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub feature: String,
    pub source: String,
}

impl FeatureDescriptor {
    fn new(feature: impl Into<String>, source: impl Into<String>) -> Self {
        FeatureDescriptor {
            feature: feature.into(),
            source: source.into(),
        }
    }

    pub fn name(&self) -> String {
        format!("{}_{}", self.feature, self.source)
    }

    pub fn parse(name: &str) -> Option<Self> {
        let (feature, source) = name.split_once('_')?;
        Some(FeatureDescriptor::new(feature, source))
    }
}

impl fmt::Display for FeatureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.feature, self.source)
    }
}

/// Ordered feature descriptors shared by every row of a matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub Vec<FeatureDescriptor>);

impl Schema {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(FeatureDescriptor::name).collect()
    }

    /// Hex SHA-256 over the newline-joined feature names.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for n in self.names() {
            h.update(n.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    fn extend(&mut self, other: Schema) {
        self.0.extend(other.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: Schema,
    pub values: Vec<f64>,
}

impl FeatureVector {
    /// Value of the feature called `name`, e.g. `fenergy_ax`.
    pub fn get(&self, name: &str) -> Option<f64> {
        let i = self.schema.0.iter().position(|d| d.name() == name)?;
        Some(self.values[i])
    }

    fn empty() -> Self {
        FeatureVector {
            schema: Schema::default(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, feature: &str, source: impl Into<String>, value: f64) {
        self.schema.0.push(FeatureDescriptor::new(feature, source));
        // degenerate statistics are mapped to 0 upstream; this is a backstop
        self.values.push(if value.is_finite() { value } else { 0.0 });
    }

    fn append(&mut self, other: FeatureVector) {
        self.schema.extend(other.schema);
        self.values.extend(other.values);
    }
}

/// Feature rows with a single shared schema and optional labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    pub schema: Schema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<PhysicalActivity>>,
}

impl FeatureMatrix {
    pub fn new(
        schema: Schema,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<PhysicalActivity>>,
    ) -> Result<Self> {
        if let Some(r) = rows.iter().position(|r| r.len() != schema.len()) {
            return Err(Error::Schema(format!(
                "row {r} has {} values, schema has {}",
                rows[r].len(),
                schema.len()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::Schema(format!(
                    "{} labels for {} rows",
                    l.len(),
                    rows.len()
                )));
            }
        }
        Ok(FeatureMatrix {
            schema,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// Rows selected by index, labels carried along.
    pub fn subset(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

fn std_dev(x: &[f64], mean: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn energy(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= f64::EPSILON * f64::EPSILON || syy <= f64::EPSILON * f64::EPSILON {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Burg estimate of AR coefficients `phi` in `x[n] = sum_i phi[i] x[n-1-i] + e[n]`.
/// Coefficients are computed on the mean-removed signal; a stage whose
/// reflection denominator vanishes contributes a zero reflection coefficient.
pub(crate) fn burg_ar(x: &[f64], order: usize) -> Vec<f64> {
    let m = mean(x);
    let mut f: Vec<f64> = x.iter().map(|v| v - m).collect();
    let mut b = f.clone();
    let n = f.len();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    for k in 0..order.min(n.saturating_sub(1)) {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n - k - 1 {
            num += f[i + k + 1] * b[i];
            den += f[i + k + 1].powi(2) + b[i].powi(2);
        }
        let mu = if den > 0.0 { -2.0 * num / den } else { 0.0 };
        for i in 0..=k.div_ceil(2) {
            let t1 = a[i] + mu * a[k + 1 - i];
            let t2 = a[k + 1 - i] + mu * a[i];
            a[i] = t1;
            a[k + 1 - i] = t2;
        }
        for i in 0..n - k - 1 {
            let t1 = f[i + k + 1] + mu * b[i];
            let t2 = b[i] + mu * f[i + k + 1];
            f[i + k + 1] = t1;
            b[i] = t2;
        }
    }
    a[1..].iter().map(|c| -c).collect()
}

/// Channels of `window` grouped by sensor, keeping window order.
type SensorGroup<'a> = (Sensor, Vec<(Channel, &'a [f64])>);

fn sensor_groups(window: &Window) -> Vec<SensorGroup<'_>> {
    let mut groups: Vec<SensorGroup> = Vec::new();
    for (c, values) in window.channels.iter().zip(&window.values) {
        let s = c.sensor();
        match groups.iter_mut().find(|(gs, _)| *gs == s) {
            Some((_, g)) => g.push((*c, values.as_slice())),
            None => groups.push((s, vec![(*c, values.as_slice())])),
        }
    }
    groups
}

/// Time-domain part of the feature vector.
pub fn extract_time_features(window: &Window) -> FeatureVector {
    let mut fv = FeatureVector::empty();
    for (sensor, axes) in sensor_groups(window) {
        let mut sensor_energy = 0.0;
        for (c, x) in &axes {
            let m = mean(x);
            let e = energy(x);
            sensor_energy += e;
            fv.push("mean", c.name(), m);
            fv.push("std", c.name(), std_dev(x, m));
            fv.push("energy", c.name(), e);
            for (i, phi) in burg_ar(x, AR_ORDER).into_iter().enumerate() {
                fv.push(&format!("ar{}", i + 1), c.name(), phi);
            }
        }
        let n = window.len();
        let sma = if n == 0 {
            0.0
        } else {
            (0..n)
                .map(|i| axes.iter().map(|(_, x)| x[i].abs()).sum::<f64>())
                .sum::<f64>()
                / n as f64
        };
        fv.push("sma", sensor.short_name(), sma);
        fv.push("totalenergy", sensor.short_name(), sensor_energy);
        for i in 0..axes.len() {
            for j in i + 1..axes.len() {
                let src = format!("{}{}", axes[i].0.name(), axes[j].0.name());
                fv.push("corr", src, pearson(axes[i].1, axes[j].1));
            }
        }
    }
    fv
}

/// `|X_k|` for all `N` DFT bins of the tapered signal.
fn magnitude_spectrum(x: &[f64], taper: Taper) -> Vec<f64> {
    let w = taper.weights(x.len());
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&w)
        .map(|(v, w)| Complex::new(v * w, 0.0))
        .collect();
    if buf.is_empty() {
        return Vec::new();
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

struct SpectralStats {
    skewness: f64,
    entropy: f64,
    energy: f64,
}

fn spectral_stats(x: &[f64], taper: Taper, sample_rate: f64) -> SpectralStats {
    let mag = magnitude_spectrum(x, taper);
    let n = mag.len();
    if n == 0 {
        return SpectralStats {
            skewness: 0.0,
            entropy: 0.0,
            energy: 0.0,
        };
    }
    let energy = mag.iter().map(|m| m * m).sum::<f64>() / n as f64;
    let one_sided = &mag[..=n / 2];
    let total: f64 = one_sided.iter().sum();
    if total <= 0.0 {
        return SpectralStats {
            skewness: 0.0,
            entropy: 0.0,
            energy,
        };
    }
    let p: Vec<f64> = one_sided.iter().map(|m| m / total).collect();
    let entropy = -p
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|q| q * q.ln())
        .sum::<f64>();
    let freq = |k: usize| k as f64 * sample_rate / n as f64;
    let mu: f64 = p.iter().enumerate().map(|(k, q)| q * freq(k)).sum();
    let var: f64 = p.iter().enumerate().map(|(k, q)| q * (freq(k) - mu).powi(2)).sum();
    let skewness = if var > 1e-300 {
        p.iter()
            .enumerate()
            .map(|(k, q)| q * (freq(k) - mu).powi(3))
            .sum::<f64>()
            / var.powf(1.5)
    } else {
        0.0
    };
    SpectralStats {
        skewness,
        entropy,
        energy,
    }
}

/// Frequency-domain part of the feature vector.
pub fn extract_freq_features(window: &Window, taper: Taper) -> FeatureVector {
    let mut fv = FeatureVector::empty();
    for (sensor, axes) in sensor_groups(window) {
        let mut total = 0.0;
        for (c, x) in &axes {
            let st = spectral_stats(x, taper, window.sample_rate);
            total += st.energy;
            fv.push("fskew", c.name(), st.skewness);
            fv.push("fentropy", c.name(), st.entropy);
            fv.push("fenergy", c.name(), st.energy);
        }
        fv.push("ftotalenergy", sensor.short_name(), total);
    }
    fv
}

/// Time features followed by frequency features.
pub fn extract_features(window: &Window, taper: Taper) -> FeatureVector {
    let mut fv = extract_time_features(window);
    fv.append(extract_freq_features(window, taper));
    fv
}

/// Filter → segment → extract over every session.
pub fn build_feature_matrix(sessions: &[SensorStream], config: &SignalConfig) -> Result<FeatureMatrix> {
    config.validate()?;
    let Some(first) = sessions.first() else {
        return Ok(FeatureMatrix::default());
    };
    let channels = config.channels();
    let labelled = first.label().is_some();
    let mut schema: Option<Schema> = None;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, s) in sessions.iter().enumerate() {
        if s.channels() != first.channels() {
            return Err(Error::Schema(format!(
                "session {i}: channel order {:?} differs from session 0 {:?}",
                s.channels(),
                first.channels()
            )));
        }
        if s.sample_rate() != config.sample_rate {
            return Err(Error::Schema(format!(
                "session {i}: sample rate {} Hz, pipeline expects {} Hz",
                s.sample_rate(),
                config.sample_rate
            )));
        }
        if s.label().is_some() != labelled {
            return Err(Error::Schema(format!(
                "session {i}: labelled and unlabelled sessions mixed"
            )));
        }
        let selected = s
            .select(&channels)
            .map_err(|e| Error::Schema(format!("session {i}: {e}")))?;
        let filtered = bandpass_filter(&selected, config.low_hz, config.high_hz)?;
        for w in segment_windows(&filtered, config.window_len, config.overlap)? {
            let fv = extract_features(&w, config.taper);
            match &schema {
                None => schema = Some(fv.schema),
                Some(sc) => debug_assert_eq!(sc, &fv.schema),
            }
            rows.push(fv.values);
            if let Some(l) = w.label {
                labels.push(l);
            }
        }
    }
    let schema = match schema {
        Some(s) => s,
        None => feature_schema(&channels, config),
    };
    FeatureMatrix::new(schema, rows, labelled.then_some(labels))
}

/// Schema produced for `channels` without needing data.
fn feature_schema(channels: &[Channel], config: &SignalConfig) -> Schema {
    let w = Window {
        start_index: 0,
        channels: channels.to_vec(),
        values: vec![vec![0.0; config.window_len]; channels.len()],
        sample_rate: config.sample_rate,
        label: None,
    };
    extract_features(&w, config.taper).schema
}
