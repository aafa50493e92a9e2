//! Identifiers shared by every stage: model variants, metrics and their
//! orientation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the five compared models. `M0` is the untouched input baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelVariantId {
    M0,
    M1,
    M2,
    M3,
    M4,
}

impl ModelVariantId {
    pub const ALL: [ModelVariantId; 5] = [Self::M0, Self::M1, Self::M2, Self::M3, Self::M4];

    pub fn is_baseline(self) -> bool {
        self == Self::M0
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::M0 => "M0",
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M3 => "M3",
            Self::M4 => "M4",
        }
    }
}

impl fmt::Display for ModelVariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelVariantId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "M0" | "m0" => Ok(Self::M0),
            "M1" | "m1" => Ok(Self::M1),
            "M2" | "m2" => Ok(Self::M2),
            "M3" | "m3" => Ok(Self::M3),
            "M4" | "m4" => Ok(Self::M4),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

/// Whether larger raw values mean better quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Clip,
    GiqaGmm,
    GiqaKnn,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Self::Clip, Self::GiqaGmm, Self::GiqaKnn];

    pub fn id(self) -> &'static str {
        match self {
            Self::Clip => "clip",
            Self::GiqaGmm => "giqa_gmm",
            Self::GiqaKnn => "giqa_knn",
        }
    }

    /// Orientation of per-image raw scores. GMM log-likelihoods are better
    /// when less negative.
    pub fn series_orientation(self) -> Orientation {
        match self {
            Self::Clip | Self::GiqaGmm => Orientation::HigherBetter,
            Self::GiqaKnn => Orientation::LowerCost,
        }
    }

    /// Orientation used by the model-comparison columns. GMM means are
    /// compared on log-likelihood magnitude, which is the only reading that
    /// reproduces the published % Quality column.
    pub fn report_orientation(self) -> Orientation {
        match self {
            Self::Clip => Orientation::HigherBetter,
            Self::GiqaGmm | Self::GiqaKnn => Orientation::LowerCost,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "clip" => Ok(Self::Clip),
            "giqa_gmm" | "gmm" => Ok(Self::GiqaGmm),
            "giqa_knn" | "knn" => Ok(Self::GiqaKnn),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}
