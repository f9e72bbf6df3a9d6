use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::PhysicalActivity;
use crate::signal::{Channel, SensorStream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSignal {
    pub channel: Channel,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub tones: Vec<Tone>,
    #[serde(default)]
    pub noise_std: f64,
}

/// Channels not listed stay at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivitySignal {
    pub channels: Vec<ChannelSignal>,
}

/// Parametric IMU model per physical activity: DC offset, sinusoids with
/// random phase, and white Gaussian noise on each channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecipe {
    pub sample_rate: f64,
    pub activities: BTreeMap<PhysicalActivity, ActivitySignal>,
}

fn ch(channel: Channel, offset: f64, tones: &[(f64, f64)], noise_std: f64) -> ChannelSignal {
    ChannelSignal {
        channel,
        offset,
        tones: tones
            .iter()
            .map(|&(freq_hz, amplitude)| Tone { freq_hz, amplitude })
            .collect(),
        noise_std,
    }
}

/// Gravity on `up` and a fixed geomagnetic field, plus per-sensor noise.
fn posture(up: Channel, acc_noise: f64, gyro_noise: f64, mag_noise: f64) -> Vec<ChannelSignal> {
    let mut v: Vec<ChannelSignal> = [Channel::Ax, Channel::Ay, Channel::Az]
        .into_iter()
        .map(|c| ch(c, if c == up { 9.81 } else { 0.0 }, &[], acc_noise))
        .collect();
    v.extend([Channel::Gx, Channel::Gy, Channel::Gz].map(|c| ch(c, 0.0, &[], gyro_noise)));
    v.extend([(Channel::Mx, 22.0), (Channel::My, -4.0), (Channel::Mz, 41.0)].map(|(c, o)| ch(c, o, &[], mag_noise)));
    v
}

fn add_tones(v: &mut [ChannelSignal], channel: Channel, tones: &[(f64, f64)]) {
    let c = v.iter_mut().find(|c| c.channel == channel).expect("channel present");
    c.tones
        .extend(tones.iter().map(|&(freq_hz, amplitude)| Tone { freq_hz, amplitude }));
}

impl Default for SignalRecipe {
    /// Static postures differ by noise level and slow sway; dynamic
    /// activities by gait frequency and intensity.
    fn default() -> Self {
        use Channel::*;
        use PhysicalActivity::*;
        let mut activities = BTreeMap::new();

        let mut lie = posture(Ax, 0.01, 0.005, 0.05);
        add_tones(&mut lie, Az, &[(0.4, 0.08)]);
        activities.insert(Lie, lie);

        activities.insert(Missing, posture(Az, 0.002, 0.001, 0.01));

        let mut sit = posture(Az, 0.03, 0.02, 0.12);
        add_tones(&mut sit, Ax, &[(0.5, 0.03)]);
        activities.insert(Sit, sit);

        let mut stand = posture(Ay, 0.08, 0.05, 0.3);
        add_tones(&mut stand, Ax, &[(0.6, 0.12)]);
        add_tones(&mut stand, Gz, &[(0.6, 0.05)]);
        activities.insert(Stand, stand);

        let mut walk = posture(Ay, 0.3, 0.1, 0.8);
        add_tones(&mut walk, Ay, &[(1.8, 2.0), (3.6, 0.5)]);
        add_tones(&mut walk, Ax, &[(0.9, 1.0)]);
        add_tones(&mut walk, Gz, &[(0.9, 0.8)]);
        activities.insert(Walk, walk);

        let mut run = posture(Ay, 0.8, 0.3, 1.5);
        add_tones(&mut run, Ay, &[(2.8, 6.0), (5.6, 1.5)]);
        add_tones(&mut run, Ax, &[(1.4, 3.0)]);
        add_tones(&mut run, Gz, &[(1.4, 2.5)]);
        activities.insert(Run, run);

        let mut up = posture(Ay, 0.35, 0.12, 0.8);
        add_tones(&mut up, Ay, &[(1.5, 2.5), (3.0, 1.2)]);
        add_tones(&mut up, Az, &[(1.5, 1.0)]);
        add_tones(&mut up, Gx, &[(0.75, 1.0)]);
        activities.insert(StairsUp, up);

        let mut down = posture(Ay, 0.4, 0.15, 0.9);
        add_tones(&mut down, Ay, &[(2.1, 3.0), (4.2, 1.5)]);
        add_tones(&mut down, Az, &[(2.1, 0.6)]);
        add_tones(&mut down, Gx, &[(1.05, 1.2)]);
        activities.insert(StairsDown, down);

        SignalRecipe {
            sample_rate: 50.0,
            activities: activities
                .into_iter()
                .map(|(a, channels)| (a, ActivitySignal { channels }))
                .collect(),
        }
    }
}

impl SignalRecipe {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate / 2.0;
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter("recipe sample rate must be positive".into()));
        }
        for (a, sig) in &self.activities {
            for c in &sig.channels {
                if c.tones.iter().any(|t| !(t.freq_hz >= 0.0 && t.freq_hz < nyquist)) {
                    return Err(Error::InvalidParameter(format!(
                        "{a}/{}: tone frequency must be below {nyquist} Hz",
                        c.channel
                    )));
                }
                if !(c.noise_std >= 0.0) {
                    return Err(Error::InvalidParameter(format!("{a}/{}: negative noise", c.channel)));
                }
            }
        }
        Ok(())
    }
}

/// A labelled nine-channel session of `minutes` length for `activity`.
pub fn synthesize_signals(
    activity: PhysicalActivity,
    minutes: f64,
    recipe: &SignalRecipe,
    seed: u64,
) -> Result<SensorStream> {
    recipe.validate()?;
    let sig = recipe
        .activities
        .get(&activity)
        .ok_or_else(|| Error::UnknownPhysicalActivity(format!("{activity} (not in recipe)")))?;
    let fs = recipe.sample_rate;
    let n = (minutes * 60.0 * fs).round().max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(Channel::ALL.len());
    for channel in Channel::ALL {
        let mut col = vec![0.0; n];
        if let Some(cs) = sig.channels.iter().find(|c| c.channel == channel) {
            let phases: Vec<f64> = cs.tones.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            let noise = Normal::new(0.0, cs.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for (i, x) in col.iter_mut().enumerate() {
                let t = i as f64 / fs;
                let tones: f64 = cs
                    .tones
                    .iter()
                    .zip(&phases)
                    .map(|(tone, ph)| tone.amplitude * (2.0 * PI * tone.freq_hz * t + ph).sin())
                    .sum();
                let eps = if cs.noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                *x = cs.offset + tones + eps;
            }
        }
        columns.push(col);
    }
    SensorStream::from_columns(fs, Channel::ALL.to_vec(), columns, Some(activity))
}
