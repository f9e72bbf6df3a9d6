//! Sensor CSV logs, session manifests and feature-matrix files.
//!
//! Feature cache layout (little endian):
//!
//! ```text
//! b"MTFM" | u32 version | u32 n_features | n_features x (u16 len, utf8 name)
//!        | u64 n_rows | u8 has_labels | n_rows x n_features f64 | [n_rows x u8 label]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::{FeatureDescriptor, Schema};
use super::{Channel, FeatureMatrix, SensorStream};
use crate::classifier::PhysicalActivity;
use crate::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"MTFM";
const CACHE_VERSION: u32 = 1;

/// One line of a session manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub file: PathBuf,
    #[serde(default)]
    pub label: Option<PhysicalActivity>,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
}

fn default_rate() -> f64 {
    50.0
}

/// Reads a manifest holding either one entry object or an array of them.
/// Relative `file` paths are resolved against the manifest's directory.
pub fn read_session_manifest(path: &Path) -> Result<Vec<SessionEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let mut entries: Vec<SessionEntry> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut entries {
        if e.file.is_relative() {
            e.file = base.join(&e.file);
        }
    }
    Ok(entries)
}

/// Label encoded as the leading token of a file name, e.g. `walk_03.csv`.
pub(crate) fn label_from_file_name(path: &Path) -> Option<PhysicalActivity> {
    let stem = path.file_stem()?.to_str()?;
    let head = stem.split(['_', '-', '.', ' ']).next()?;
    head.parse().ok()
}

/// Reads a `t,ax,ay,...` sensor log. Without an explicit label the file name
/// is consulted.
pub fn read_sensor_csv(
    path: &Path,
    sample_rate: f64,
    label: Option<PhysicalActivity>,
) -> Result<SensorStream> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("t") {
        return Err(Error::parse(path, 1, "first column must be `t`"));
    }
    let mut channels = Vec::new();
    for name in header.iter().skip(1) {
        let c = Channel::from_name(name)
            .ok_or_else(|| Error::parse(path, 1, format!("unknown channel `{name}`")))?;
        channels.push(c);
    }
    let mut timestamps = Vec::new();
    let mut columns = vec![Vec::new(); channels.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("{} fields, expected {}", rec.len(), header.len()),
            ));
        }
        let mut vals = rec.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("bad number `{f}`")))
        });
        timestamps.push(vals.next().unwrap()?);
        for col in columns.iter_mut() {
            col.push(vals.next().unwrap()?);
        }
    }
    let label = label.or_else(|| label_from_file_name(path));
    SensorStream::new(sample_rate, channels, timestamps, columns, label).map_err(|e| match e {
        Error::InvalidStream(msg) => Error::parse(path, 0, msg),
        other => other,
    })
}

pub fn write_sensor_csv(path: &Path, stream: &SensorStream) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("t");
    for c in stream.channels() {
        header.push(',');
        header.push_str(c.name());
    }
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for (i, t) in stream.timestamps().iter().enumerate() {
        let mut line = format!("{t}");
        for col in stream.columns() {
            line.push(',');
            line.push_str(&col[i].to_string());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// CSV with one column per feature and a trailing `label` column when labelled.
pub fn write_feature_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut header = m.schema.names().join(",");
    if m.labels.is_some() {
        if !header.is_empty() {
            header.push(',');
        }
        header.push_str("label");
    }
    writeln!(w, "{header}").map_err(io)?;
    for (i, row) in m.rows.iter().enumerate() {
        let mut line = row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        if let Some(l) = &m.labels {
            if !line.is_empty() {
                line.push(',');
            }
            line.push_str(l[i].name());
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let labelled = header.iter().next_back() == Some("label");
    let n_features = header.len() - usize::from(labelled);
    let mut schema = Vec::with_capacity(n_features);
    for name in header.iter().take(n_features) {
        schema.push(
            FeatureDescriptor::parse(name)
                .ok_or_else(|| Error::parse(path, 1, format!("bad feature name `{name}`")))?,
        );
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(Error::parse(path, line, "field count differs from header"));
        }
        let row = rec
            .iter()
            .take(n_features)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, line, format!("bad number `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        if labelled {
            let name = &rec[n_features];
            labels.push(
                name.parse()
                    .map_err(|_| Error::parse(path, line, format!("unknown label `{name}`")))?,
            );
        }
    }
    FeatureMatrix::new(Schema(schema), rows, labelled.then_some(labels))
}

pub fn write_feature_cache(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.schema.len() as u32).to_le_bytes());
    for name in m.schema.names() {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
    }
    buf.extend_from_slice(&(m.rows.len() as u64).to_le_bytes());
    buf.push(u8::from(m.labels.is_some()));
    for row in &m.rows {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(labels) = &m.labels {
        buf.extend(labels.iter().map(|l| l.index() as u8));
    }
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "{}: truncated feature cache",
                self.path.display()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

pub fn read_feature_cache(path: &Path) -> Result<FeatureMatrix> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0, path };
    let bad = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    if c.take(4)? != CACHE_MAGIC {
        return Err(bad("not a feature cache".into()));
    }
    let version = u32::from_le_bytes(c.array()?);
    if version != CACHE_VERSION {
        return Err(bad(format!("unsupported cache version {version}")));
    }
    let n_features = u32::from_le_bytes(c.array()?) as usize;
    let mut schema = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let len = u16::from_le_bytes(c.array()?) as usize;
        let name = std::str::from_utf8(c.take(len)?).map_err(|e| bad(e.to_string()))?;
        schema.push(FeatureDescriptor::parse(name).ok_or_else(|| bad(format!("bad name `{name}`")))?);
    }
    let n_rows = u64::from_le_bytes(c.array()?) as usize;
    let labelled = c.take(1)?[0] != 0;
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(n_features);
        for _ in 0..n_features {
            row.push(f64::from_le_bytes(c.array()?));
        }
        rows.push(row);
    }
    let labels = if labelled {
        let raw = c.take(n_rows)?;
        Some(
            raw.iter()
                .map(|&b| PhysicalActivity::from_index(b as usize).ok_or_else(|| bad(format!("bad label {b}"))))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    FeatureMatrix::new(Schema(schema), rows, labels)
}
