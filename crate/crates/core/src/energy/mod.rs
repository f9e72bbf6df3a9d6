//! MET-based energy expenditure.
//!
//! One MET is 1 kcal per kg of body weight per hour, so a minute spent at
//! `met` costs `weight_kg * met / 60` kcal.

mod compendium;
mod timeline;

pub use compendium::{load_compendium, parse_compendium, Compendium, CompendiumEntry};
pub use timeline::{
    ee_error, estimate_ee, plot_data_csv, plot_svg, read_segments_csv, timeline_from_codes, EeMetrics, EeSegment,
    EnergyEstimate, EnergyMinute, EnergyTimeline, MetSource,
};
