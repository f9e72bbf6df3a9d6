//! Causal Butterworth band-pass realised as a cascade of second-order sections.
//!
//! Each third-order Butterworth prototype factors into one first-order section
//! (real pole at `s = -1`) and one biquad (`s^2 + s + 1`, Q = 1). Both are
//! mapped to the z-plane with the bilinear transform using the prewarped
//! constant `K = tan(pi * fc / fs)`:
//!
//! ```text
//! low-pass  1st order: K/(K+1) * (1 + z^-1) / (1 + (K-1)/(K+1) z^-1)
//! high-pass 1st order: 1/(K+1) * (1 - z^-1) / (1 + (K-1)/(K+1) z^-1)
//! biquad (n = 1 / (1 + K/Q + K^2)):
//!     a1 = 2 (K^2 - 1) n,  a2 = (1 - K/Q + K^2) n
//!     low-pass  b = K^2 n * [1, 2, 1]
//!     high-pass b = n * [1, -2, 1]
//! ```

use std::f64::consts::PI;

use super::SensorStream;
use crate::{Error, Result};

/// One section in transposed direct form II. First-order sections have
/// `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn lowpass_first_order(k: f64) -> Self {
        let g = k / (k + 1.0);
        Biquad {
            b0: g,
            b1: g,
            b2: 0.0,
            a1: (k - 1.0) / (k + 1.0),
            a2: 0.0,
        }
    }

    fn highpass_first_order(k: f64) -> Self {
        let g = 1.0 / (k + 1.0);
        Biquad {
            b0: g,
            b1: -g,
            b2: 0.0,
            a1: (k - 1.0) / (k + 1.0),
            a2: 0.0,
        }
    }

    fn lowpass(k: f64, q: f64) -> Self {
        let n = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * n;
        Biquad {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * n,
            a2: (1.0 - k / q + k * k) * n,
        }
    }

    fn highpass(k: f64, q: f64) -> Self {
        let n = 1.0 / (1.0 + k / q + k * k);
        Biquad {
            b0: n,
            b1: -2.0 * n,
            b2: n,
            a1: 2.0 * (k * k - 1.0) * n,
            a2: (1.0 - k / q + k * k) * n,
        }
    }

    /// Gain at z = 1.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Filter state that yields a constant output for a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = self.dc_gain() * u;
        [y - self.b0 * u, self.b2 * u - self.a2 * y]
    }
}

/// A cascade of sections applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn new(sections: Vec<Biquad>) -> Self {
        SosFilter { sections }
    }

    /// Third-order Butterworth high-pass at `low_hz` followed by a third-order
    /// Butterworth low-pass at `high_hz`.
    pub fn butterworth_bandpass(low_hz: f64, high_hz: f64, sample_rate: f64) -> Result<Self> {
        let nyquist = sample_rate / 2.0;
        if !(sample_rate > 0.0 && 0.0 < low_hz && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::InvalidParameter(format!(
                "cutoffs {low_hz}..{high_hz} Hz outside (0, {nyquist})"
            )));
        }
        let k_low = (PI * low_hz / sample_rate).tan();
        let k_high = (PI * high_hz / sample_rate).tan();
        Ok(SosFilter::new(vec![
            Biquad::highpass_first_order(k_low),
            Biquad::highpass(k_low, 1.0),
            Biquad::lowpass_first_order(k_high),
            Biquad::lowpass(k_high, 1.0),
        ]))
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Filters one channel. The state is initialised to the steady state for
    /// a constant input equal to the first sample, which is linear in the
    /// input and suppresses the start-up transient from a gravity offset.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut signal = input.to_vec();
        let Some(&first) = input.first() else {
            return signal;
        };
        let mut u = first;
        for s in &self.sections {
            let [mut z1, mut z2] = s.steady_state(u);
            u *= s.dc_gain();
            for x in signal.iter_mut() {
                let xin = *x;
                let y = s.b0 * xin + z1;
                z1 = s.b1 * xin - s.a1 * y + z2;
                z2 = s.b2 * xin - s.a2 * y;
                *x = y;
            }
        }
        signal
    }
}

/// Band-passes every channel of `stream` between `low_hz` and `high_hz`.
pub fn bandpass_filter(stream: &SensorStream, low_hz: f64, high_hz: f64) -> Result<SensorStream> {
    let filter = SosFilter::butterworth_bandpass(low_hz, high_hz, stream.sample_rate())?;
    Ok(stream.map_columns(|c| filter.apply(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Channel;

    const FS: f64 = 50.0;

    /// |H(e^jw)| of the prewarped third-order Butterworth band-pass, evaluated
    /// from the analog prototype rather than the section coefficients.
    fn analytic_gain(f: f64, low: f64, high: f64) -> f64 {
        let w = (PI * f / FS).tan();
        let kl = (PI * low / FS).tan();
        let kh = (PI * high / FS).tan();
        let hp = 1.0 / (1.0 + (kl / w).powi(6)).sqrt();
        let lp = 1.0 / (1.0 + (w / kh).powi(6)).sqrt();
        hp * lp
    }

    fn tone(f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / FS).sin()).collect()
    }

    /// Sinusoid amplitude from the RMS of the second half; callers pick
    /// lengths that hold a whole number of periods.
    fn steady_amplitude(y: &[f64]) -> f64 {
        let tail = &y[y.len() / 2..];
        (2.0 * tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt()
    }

    #[test]
    fn rejects_cutoffs_outside_nyquist() {
        assert!(SosFilter::butterworth_bandpass(0.0, 20.0, FS).is_err());
        assert!(SosFilter::butterworth_bandpass(0.3, 25.0, FS).is_err());
        assert!(SosFilter::butterworth_bandpass(20.0, 0.3, FS).is_err());
    }

    #[test]
    fn constant_gravity_is_rejected() {
        let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
        let y = f.apply(&vec![9.81; 2000]);
        assert!(y.iter().all(|v| v.abs() < 0.1));
        assert!(y[1000..].iter().all(|v| v.abs() < 0.01 * 9.81));
    }

    #[test]
    fn gravity_step_settles() {
        // starts at rest, so the 9.81 offset arrives as a step
        let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
        let mut x = vec![0.0; 50];
        x.extend(vec![9.81; 3000]);
        let y = f.apply(&x);
        assert!(y[2000..].iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn passband_tone_matches_analytic_gain() {
        let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
        let expected = analytic_gain(5.0, 0.3, 20.0);
        assert!((0.9..=1.0).contains(&expected));
        let amp = steady_amplitude(&f.apply(&tone(5.0, 4000)));
        assert!((0.9..=1.0).contains(&amp), "amp {amp}");
        assert!((amp - expected).abs() < 5e-3, "amp {amp} vs {expected}");
    }

    #[test]
    fn stopband_tone_matches_analytic_gain() {
        let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
        let expected = analytic_gain(24.0, 0.3, 20.0);
        let amp = steady_amplitude(&f.apply(&tone(24.0, 4000)));
        assert!(amp < 0.2);
        assert!((amp - expected).abs() < 5e-3, "amp {amp} vs {expected}");
    }

    #[test]
    fn cutoff_gain_is_half_power() {
        for fc in [0.3, 20.0] {
            let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
            let amp = steady_amplitude(&f.apply(&tone(fc, 20_000)));
            assert!((amp - analytic_gain(fc, 0.3, 20.0)).abs() < 1e-2, "{fc}: {amp}");
        }
    }

    #[test]
    fn section_dc_gains() {
        let f = SosFilter::butterworth_bandpass(0.3, 20.0, FS).unwrap();
        let gains: Vec<f64> = f.sections().iter().map(Biquad::dc_gain).collect();
        assert!(gains[0].abs() < 1e-12 && gains[1].abs() < 1e-12);
        assert!((gains[2] - 1.0).abs() < 1e-12 && (gains[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_keeps_stream_shape() {
        let s = SensorStream::from_columns(
            FS,
            vec![Channel::Ax, Channel::Ay],
            vec![tone(3.0, 300), vec![1.0; 300]],
            None,
        )
        .unwrap();
        let out = bandpass_filter(&s, 0.3, 20.0).unwrap();
        assert_eq!(out.len(), 300);
        assert_eq!(out.channels(), s.channels());
        assert_eq!(out.timestamps(), s.timestamps());
        assert!(bandpass_filter(&s, 0.3, 30.0).is_err());
    }
}
