//! CART decision-tree physical-activity classifier and its evaluation.

mod cv;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, ConfusionMatrix, CvReport};
pub use tree::{train_tree, Hyperparams, Node, TreeModel, TREE_FORMAT_VERSION};

use crate::Error;

/// The eight physical activities recognised from phone sensors. The integer
/// encoding is the declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhysicalActivity {
    Lie,
    /// Phone left somewhere instead of being carried.
    Missing,
    Sit,
    #[serde(rename = "stairsdown")]
    StairsDown,
    #[serde(rename = "stairsup")]
    StairsUp,
    Stand,
    Run,
    Walk,
}

impl PhysicalActivity {
    pub const COUNT: usize = 8;

    pub const ALL: [PhysicalActivity; 8] = [
        PhysicalActivity::Lie,
        PhysicalActivity::Missing,
        PhysicalActivity::Sit,
        PhysicalActivity::StairsDown,
        PhysicalActivity::StairsUp,
        PhysicalActivity::Stand,
        PhysicalActivity::Run,
        PhysicalActivity::Walk,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PhysicalActivity::Lie => "lie",
            PhysicalActivity::Missing => "missing",
            PhysicalActivity::Sit => "sit",
            PhysicalActivity::StairsDown => "stairsdown",
            PhysicalActivity::StairsUp => "stairsup",
            PhysicalActivity::Stand => "stand",
            PhysicalActivity::Run => "run",
            PhysicalActivity::Walk => "walk",
        }
    }
}

impl fmt::Display for PhysicalActivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhysicalActivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::UnknownPhysicalActivity(s.to_string()))
    }
}
