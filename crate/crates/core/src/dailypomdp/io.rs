//! Trace and prediction CSV files.
//!
//! ```text
//! trace:       minute,true_activity,phys_activity,speed_kmh
//! predictions: minute,predicted_activity,belief_top1_prob
//! ```
//!
//! `true_activity` may be left empty for unlabelled observation logs.

use std::path::Path;

use super::{DayTrace, TraceStep};
use crate::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))
}

fn expect_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, want: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::parse(path, 1, format!("expected header `{}`", want.join(","))));
    }
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<DayTrace> {
    let mut rdr = reader(path)?;
    expect_header(path, &mut rdr, &["minute", "true_activity", "phys_activity", "speed_kmh"])?;
    let mut steps = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let minute = rec[0]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad minute `{}`", &rec[0])))?;
        let phys = rec[2]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        let speed_kmh: f64 = rec[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| Error::parse(path, line, format!("bad speed `{}`", &rec[3])))?;
        if let Some(prev) = steps.last().map(|s: &TraceStep| s.minute) {
            if minute != prev + 1 {
                return Err(Error::parse(path, line, "minutes must increase by one"));
            }
        }
        steps.push(TraceStep {
            minute,
            activity: rec[1].to_string(),
            phys,
            speed_kmh,
        });
    }
    DayTrace::new(steps)
}

pub fn write_trace_csv(path: &Path, trace: &DayTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let err = |e: csv::Error| Error::parse(path, 0, e.to_string());
    w.write_record(["minute", "true_activity", "phys_activity", "speed_kmh"])
        .map_err(err)?;
    for s in &trace.steps {
        w.write_record([
            s.minute.to_string(),
            s.activity.clone(),
            s.phys.name().to_string(),
            s.speed_kmh.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(minute, activity name, top belief probability)` rows.
pub fn write_predictions_csv(path: &Path, rows: &[(u32, String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let err = |e: csv::Error| Error::parse(path, 0, e.to_string());
    w.write_record(["minute", "predicted_activity", "belief_top1_prob"])
        .map_err(err)?;
    for (m, name, p) in rows {
        w.write_record([m.to_string(), name.clone(), p.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<(u32, String, f64)>> {
    let mut rdr = reader(path)?;
    expect_header(path, &mut rdr, &["minute", "predicted_activity", "belief_top1_prob"])?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let minute = rec[0]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad minute `{}`", &rec[0])))?;
        let p = rec[2]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad probability `{}`", &rec[2])))?;
        rows.push((minute, rec[1].to_string(), p));
    }
    Ok(rows)
}
