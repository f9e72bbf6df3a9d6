use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Compendium;
use crate::{Error, Result};

/// Walking entries whose MET may be replaced by the walking speed.
const WALKING_CODES: [u32; 3] = [17151, 17152, 17190];

/// Where a segment's MET value comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetSource {
    #[default]
    Compendium,
    /// Walking segments with a known speed use the speed in km/h as their
    /// multiplier; everything else reads the compendium. Reproduces the
    /// hand calculation `60 * (9/60 * 4.5 + 8/60 * 1.3)`.
    SpeedForWalking,
}

/// A stretch of one activity code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeSegment {
    pub code: u32,
    /// Rounded up to whole minutes.
    pub minutes: f64,
    pub speed_kmh: Option<f64>,
}

impl EeSegment {
    pub fn new(code: u32, minutes: f64) -> Self {
        EeSegment {
            code,
            minutes,
            speed_kmh: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyMinute {
    pub minute: u32,
    pub code: u32,
    pub met: f64,
}

/// Per-minute METs with the running kcal total.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnergyTimeline {
    pub weight_kg: f64,
    pub minutes: Vec<EnergyMinute>,
    pub cumulative_kcal: Vec<f64>,
}

impl EnergyTimeline {
    fn from_minutes(weight_kg: f64, minutes: Vec<EnergyMinute>) -> Self {
        let mut total = 0.0;
        let cumulative_kcal = minutes
            .iter()
            .map(|m| {
                total += weight_kg * m.met / 60.0;
                total
            })
            .collect();
        EnergyTimeline {
            weight_kg,
            minutes,
            cumulative_kcal,
        }
    }

    pub fn total_kcal(&self) -> f64 {
        self.cumulative_kcal.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.minutes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutes.is_empty()
    }

    /// `minute,code,met,cumulative_kcal`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("minute,code,met,cumulative_kcal\n");
        for (m, c) in self.minutes.iter().zip(&self.cumulative_kcal) {
            let _ = writeln!(s, "{},{},{},{}", m.minute, m.code, m.met, c);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimate {
    pub total_kcal: f64,
    pub timeline: EnergyTimeline,
}

fn check_weight(weight_kg: f64) -> Result<()> {
    if !(weight_kg > 0.0 && weight_kg.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight must be positive, got {weight_kg}")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct SegmentRow {
    code: u32,
    minutes: f64,
    #[serde(default)]
    speed_kmh: Option<f64>,
}

/// Reads a `code,minutes[,speed_kmh]` CSV; an empty speed cell means none.
pub fn read_segments_csv(path: &Path) -> Result<Vec<EeSegment>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<SegmentRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        out.push(EeSegment {
            code: row.code,
            minutes: row.minutes,
            speed_kmh: row.speed_kmh,
        });
    }
    Ok(out)
}

/// Expands segments to minutes starting at minute 0 and integrates kcal.
pub fn estimate_ee(
    segments: &[EeSegment],
    weight_kg: f64,
    compendium: &Compendium,
    source: MetSource,
) -> Result<EnergyEstimate> {
    check_weight(weight_kg)?;
    let mut minutes = Vec::new();
    for seg in segments {
        if !(seg.minutes >= 0.0 && seg.minutes.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad duration {}", seg.minutes)));
        }
        let mut met = compendium.met(seg.code)?;
        if source == MetSource::SpeedForWalking && WALKING_CODES.contains(&seg.code) {
            if let Some(v) = seg.speed_kmh {
                met = v;
            }
        }
        for _ in 0..seg.minutes.ceil() as u32 {
            minutes.push(EnergyMinute {
                minute: minutes.len() as u32,
                code: seg.code,
                met,
            });
        }
    }
    let timeline = EnergyTimeline::from_minutes(weight_kg, minutes);
    Ok(EnergyEstimate {
        total_kcal: timeline.total_kcal(),
        timeline,
    })
}

/// Builds a timeline from `(minute, code)` pairs.
pub fn timeline_from_codes(minutes: &[(u32, u32)], weight_kg: f64, compendium: &Compendium) -> Result<EnergyTimeline> {
    check_weight(weight_kg)?;
    let mins = minutes
        .iter()
        .map(|&(minute, code)| {
            Ok(EnergyMinute {
                minute,
                code,
                met: compendium.met(code)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyTimeline::from_minutes(weight_kg, mins))
}

/// Percentage differences of predicted vs expected expenditure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EeMetrics {
    /// Mean of |pct difference| over expected-activity segments.
    pub mean_absolute_pct: f64,
    /// Signed difference of the final cumulative values.
    pub end_of_day_pct: f64,
    pub min_pct: f64,
    pub max_pct: f64,
    pub segments: usize,
    /// Segments skipped because their expected expenditure is zero.
    pub excluded: usize,
}

fn pct(pred: f64, exp: f64) -> f64 {
    100.0 * (pred - exp) / exp
}

/// Compares two timelines over the same minutes, segment by segment, where a
/// segment is a maximal run of one expected activity code.
pub fn ee_error(predicted: &EnergyTimeline, expected: &EnergyTimeline) -> Result<EeMetrics> {
    if predicted.len() != expected.len()
        || predicted
            .minutes
            .iter()
            .zip(&expected.minutes)
            .any(|(p, e)| p.minute != e.minute)
    {
        return Err(Error::LengthMismatch("timelines cover different minutes".into()));
    }
    let kcal = |t: &EnergyTimeline, i: usize| t.weight_kg * t.minutes[i].met / 60.0;
    let mut diffs = Vec::new();
    let mut excluded = 0;
    let mut start = 0;
    while start < expected.len() {
        let code = expected.minutes[start].code;
        let mut end = start;
        while end < expected.len() && expected.minutes[end].code == code {
            end += 1;
        }
        let e: f64 = (start..end).map(|i| kcal(expected, i)).sum();
        let p: f64 = (start..end).map(|i| kcal(predicted, i)).sum();
        if e == 0.0 {
            excluded += 1;
        } else {
            diffs.push(pct(p, e));
        }
        start = end;
    }
    let (exp_total, pred_total) = (expected.total_kcal(), predicted.total_kcal());
    let end_of_day_pct = if exp_total == 0.0 { 0.0 } else { pct(pred_total, exp_total) };
    if diffs.is_empty() {
        return Ok(EeMetrics {
            mean_absolute_pct: 0.0,
            end_of_day_pct,
            min_pct: 0.0,
            max_pct: 0.0,
            segments: 0,
            excluded,
        });
    }
    Ok(EeMetrics {
        mean_absolute_pct: diffs.iter().map(|d| d.abs()).sum::<f64>() / diffs.len() as f64,
        end_of_day_pct,
        min_pct: diffs.iter().copied().fold(f64::INFINITY, f64::min),
        max_pct: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        segments: diffs.len(),
        excluded,
    })
}

/// `minute,expected_kcal,predicted_kcal` for the cumulative-expenditure plot.
pub fn plot_data_csv(expected: &EnergyTimeline, predicted: &EnergyTimeline) -> String {
    let mut s = String::from("minute,expected_kcal,predicted_kcal\n");
    for ((m, e), p) in expected
        .minutes
        .iter()
        .zip(&expected.cumulative_kcal)
        .zip(&predicted.cumulative_kcal)
    {
        let _ = writeln!(s, "{},{},{}", m.minute, e, p);
    }
    s
}

/// Minimal SVG with expected (blue) and predicted (orange) cumulative curves.
pub fn plot_svg(expected: &EnergyTimeline, predicted: &EnergyTimeline) -> String {
    let (w, h, pad) = (800.0, 400.0, 40.0);
    let n = expected.len().max(2) as f64;
    let top = expected.total_kcal().max(predicted.total_kcal()).max(1e-9);
    let path = |t: &EnergyTimeline| {
        t.cumulative_kcal
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let x = pad + (w - 2.0 * pad) * i as f64 / (n - 1.0);
                let y = h - pad - (h - 2.0 * pad) * c / top;
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"20\" font-size=\"14\">Cumulative energy expenditure (kcal), max {top:.1}</text>\n\
         <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>\n\
         <polyline fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\" points=\"{}\"/>\n\
         </svg>\n",
        path(expected),
        path(predicted)
    )
}
