use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A technique family. All techniques of a family come out of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Sbfl,
    Mbfl,
    Ps,
    St,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Tarantula,
    Ochiai,
    Dstar,
    Metallaxis,
    Muse,
    Ps,
    St,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Sbfl, Family::Mbfl, Family::Ps, Family::St];

    pub fn techniques(self) -> &'static [Technique] {
        match self {
            Family::Sbfl => &[Technique::Tarantula, Technique::Ochiai, Technique::Dstar],
            Family::Mbfl => &[Technique::Metallaxis, Technique::Muse],
            Family::Ps => &[Technique::Ps],
            Family::St => &[Technique::St],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Sbfl => "sbfl",
            Family::Mbfl => "mbfl",
            Family::Ps => "ps",
            Family::St => "st",
        }
    }
}

impl Technique {
    pub fn family(self) -> Family {
        match self {
            Technique::Tarantula | Technique::Ochiai | Technique::Dstar => Family::Sbfl,
            Technique::Metallaxis | Technique::Muse => Family::Mbfl,
            Technique::Ps => Family::Ps,
            Technique::St => Family::St,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Tarantula => "tarantula",
            Technique::Ochiai => "ochiai",
            Technique::Dstar => "dstar",
            Technique::Metallaxis => "metallaxis",
            Technique::Muse => "muse",
            Technique::Ps => "ps",
            Technique::St => "st",
        }
    }

    /// `scores_<technique>.csv`
    pub fn csv_name(self) -> String {
        format!("scores_{}.csv", self.as_str())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl FromStr for Family {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

impl FromStr for Technique {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .iter()
            .flat_map(|f| f.techniques())
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}
