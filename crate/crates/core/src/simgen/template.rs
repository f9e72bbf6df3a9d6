use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{corrupt_trace, sub_seed, NoiseChannel};
use crate::classifier::PhysicalActivity;
use crate::dailypomdp::{DayTrace, TraceStep};
use crate::energy::{timeline_from_codes, Compendium, EnergyTimeline};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub activity: String,
    pub minutes: f64,
    /// Standard deviation of the realised duration as a fraction of `minutes`.
    #[serde(default)]
    pub jitter: f64,
    pub phys: PhysicalActivity,
    pub speed_kmh: f64,
    pub code: u32,
}

/// An ordered day plan starting at `start_minute` (minutes after midnight).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleTemplate {
    pub start_minute: u32,
    pub entries: Vec<ScheduleEntry>,
}

fn entry(activity: &str, minutes: f64, phys: PhysicalActivity, speed_kmh: f64, code: u32) -> ScheduleEntry {
    ScheduleEntry {
        activity: activity.into(),
        minutes,
        jitter: 0.1,
        phys,
        speed_kmh,
        code,
    }
}

impl ScheduleTemplate {
    /// The 8 a.m. to 11:13 a.m. morning sequence (193 minutes).
    pub fn morning() -> Self {
        use PhysicalActivity::*;
        ScheduleTemplate {
            start_minute: 8 * 60,
            entries: vec![
                entry("eat breakfast", 10.0, Sit, 0.0, 13030),
                entry("wash self", 30.0, Stand, 0.0, 13040),
                entry("get ready", 10.0, Stand, 0.0, 9070),
                entry("go to the bus", 9.0, Walk, 4.5, 17190),
                entry("take the bus", 8.0, Sit, 40.0, 16016),
                entry("walk to work", 2.0, Walk, 3.0, 17190),
                entry("go upstairs", 1.0, StairsUp, 1.0, 17133),
                entry("go to the toilets", 3.0, Walk, 2.5, 17151),
                entry("work", 120.0, Sit, 0.0, 11580),
            ],
        }
    }

    /// The morning sequence extended to a full working day. From the arrival
    /// at home onward the phone is left behind, so the observed physical
    /// activity is `missing` until bedtime.
    pub fn full_day() -> Self {
        use PhysicalActivity::*;
        let mut t = Self::morning();
        t.entries.extend([
            entry("go to the toilets", 3.0, Walk, 2.5, 17151),
            entry("work", 180.0, Sit, 0.0, 11580),
            entry("go to the toilets", 3.0, Walk, 2.5, 17151),
            entry("work", 195.0, Sit, 0.0, 11580),
            entry("go downstairs", 1.0, StairsDown, 1.0, 17070),
            entry("walk home", 25.0, Walk, 3.2, 17152),
            entry("wash self", 15.0, Missing, 0.0, 13040),
            entry("eat dinner", 30.0, Missing, 0.0, 13030),
            entry("wash dishes", 15.0, Missing, 0.0, 5035),
            entry("play guitar", 45.0, Missing, 0.0, 10074),
            entry("play computer games", 60.0, Missing, 0.0, 9045),
            entry("watch a movie", 90.0, Missing, 0.0, 7025),
            entry("wash self", 10.0, Missing, 0.0, 13040),
            entry("sleep", 94.0, Lie, 0.0, 7030),
        ]);
        t
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.entries.iter_mut().for_each(|e| e.jitter = jitter);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidParameter("template has no entries".into()));
        }
        for e in &self.entries {
            if !(e.minutes > 0.0 && e.minutes.is_finite()) {
                return Err(Error::InvalidParameter(format!("`{}`: duration must be positive", e.activity)));
            }
            if !(e.jitter >= 0.0 && e.jitter.is_finite()) {
                return Err(Error::InvalidParameter(format!("`{}`: jitter must be >= 0", e.activity)));
            }
            if !(e.speed_kmh >= 0.0 && e.speed_kmh.is_finite()) {
                return Err(Error::InvalidParameter(format!("`{}`: speed must be >= 0", e.activity)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: ScheduleTemplate = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A simulated day: per-minute truth with clean observations, and the
/// compendium code of every minute.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedDay {
    pub trace: DayTrace,
    pub codes: Vec<(u32, u32)>,
}

impl GeneratedDay {
    pub fn energy_timeline(&self, compendium: &Compendium, weight_kg: f64) -> Result<EnergyTimeline> {
        timeline_from_codes(&self.codes, weight_kg, compendium)
    }
}

/// Expands `template` to whole minutes. Each duration is drawn from a normal
/// with standard deviation `jitter * minutes`, rounded and floored at 1.
pub fn generate_day(template: &ScheduleTemplate, seed: u64) -> Result<GeneratedDay> {
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    let mut codes = Vec::new();
    let mut minute = template.start_minute;
    for e in &template.entries {
        let z: f64 = StandardNormal.sample(&mut rng);
        let len = if e.jitter == 0.0 {
            e.minutes.round().max(1.0)
        } else {
            (e.minutes + e.jitter * e.minutes * z).round().max(1.0)
        } as u32;
        for _ in 0..len {
            steps.push(TraceStep {
                minute,
                activity: e.activity.clone(),
                phys: e.phys,
                speed_kmh: e.speed_kmh,
            });
            codes.push((minute, e.code));
            minute += 1;
        }
    }
    Ok(GeneratedDay {
        trace: DayTrace::new(steps)?,
        codes,
    })
}

/// `days` simulated days whose observed physical activities are passed
/// through `channel`.
pub fn generate_corpus(
    template: &ScheduleTemplate,
    days: usize,
    channel: &NoiseChannel,
    seed: u64,
) -> Result<Vec<GeneratedDay>> {
    (0..days as u64)
        .map(|i| {
            let mut day = generate_day(template, sub_seed(seed, 2 * i))?;
            day.trace = corrupt_trace(&day.trace, channel, sub_seed(seed, 2 * i + 1));
            Ok(day)
        })
        .collect()
}
