//! Energy expenditure estimation from smartphone sensors.
//!
//! The pipeline has three stages:
//!
//! 1. [`signal`] and [`classifier`]: band-pass filtered IMU windows are turned
//!    into time/frequency features and classified into one of eight physical
//!    activities by a CART decision tree.
//! 2. [`dailypomdp`]: per-minute `(time, physical activity, speed)` observations
//!    drive a POMDP belief tracker whose greedy action is the predicted daily
//!    activity (eat breakfast, work, take the bus, ...).
//! 3. [`energy`]: predicted daily activities are mapped to MET values from the
//!    compendium of physical activities and integrated into kcal.
//!
//! [`simgen`] produces synthetic days and IMU sessions so that every stage can
//! be exercised without a recorded dataset.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod config;
pub mod dailypomdp;
pub mod energy;
mod error;
pub mod signal;
pub mod simgen;

pub use classifier::PhysicalActivity;
pub use config::PipelineConfig;
pub use error::{Error, Result};
