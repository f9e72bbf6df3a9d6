use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

const BUNDLED: &str = include_str!("../../data/compendium.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct CompendiumEntry {
    pub description: String,
    /// Also the cost in kcal per kg per hour.
    pub met: f64,
}

/// Activity code → description and MET value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Compendium {
    entries: BTreeMap<u32, CompendiumEntry>,
}

impl Compendium {
    /// The 17-entry sample shipped with the crate.
    pub fn bundled() -> Self {
        parse_compendium(BUNDLED, Path::new("<bundled compendium>")).expect("bundled compendium is valid")
    }

    pub fn get(&self, code: u32) -> Option<&CompendiumEntry> {
        self.entries.get(&code)
    }

    pub fn met(&self, code: u32) -> Result<f64> {
        self.get(code).map(|e| e.met).ok_or(Error::UnknownCode(code))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }
}

/// Parses `code,description,met` CSV text; `origin` is used in error messages.
pub fn parse_compendium(text: &str, origin: &Path) -> Result<Compendium> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?;
    if header.iter().ne(["code", "description", "met"]) {
        return Err(Error::parse(origin, 1, "expected header `code,description,met`"));
    }
    let mut entries = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let code: u32 = rec[0]
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("bad code `{}`", &rec[0])))?;
        let met: f64 = rec[2]
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("bad MET `{}`", &rec[2])))?;
        if !(met > 0.0 && met.is_finite()) {
            return Err(Error::parse(origin, line, format!("MET must be positive, got {met}")));
        }
        let entry = CompendiumEntry {
            description: rec[1].to_string(),
            met,
        };
        if entries.insert(code, entry).is_some() {
            return Err(Error::parse(origin, line, format!("duplicate code {code}")));
        }
    }
    Ok(Compendium { entries })
}

pub fn load_compendium(path: &Path) -> Result<Compendium> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_compendium(&text, path)
}
