//! The seven named distillation algorithms and their pipeline settings.

use advtree_core::{Criterion, Objective};
use anyhow::{bail, Result};
use std::fmt;

/// One column of the comparison grid. The `..M` variants redraw and
/// resample the transfer data each iteration and keep the best-scoring
/// tree; the rest grow once from a fixed transfer set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Bc,
    Fq,
    ViperM,
    Dpic,
    DpicM,
    DpicR,
    DpicRM,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Bc,
        Algorithm::Fq,
        Algorithm::ViperM,
        Algorithm::Dpic,
        Algorithm::DpicM,
        Algorithm::DpicR,
        Algorithm::DpicRM,
    ];

    pub fn parse(name: &str) -> Result<Algorithm> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bc" => Ok(Algorithm::Bc),
            "fq" => Ok(Algorithm::Fq),
            "viperm" => Ok(Algorithm::ViperM),
            "dpic" => Ok(Algorithm::Dpic),
            "dpicm" => Ok(Algorithm::DpicM),
            "dpicr" => Ok(Algorithm::DpicR),
            "dpicrm" => Ok(Algorithm::DpicRM),
            _ => bail!(
                "unknown algorithm {name:?} (expected one of BC, FQ, ViperM, Dpic, DpicM, DpicR, DpicRM)"
            ),
        }
    }

    /// How per-action value rows are built from the transfer samples.
    pub fn objective(self) -> Objective {
        match self {
            Algorithm::Bc | Algorithm::ViperM => Objective::Bc,
            Algorithm::Fq => Objective::Fq,
            Algorithm::Dpic | Algorithm::DpicM => Objective::Dpic,
            Algorithm::DpicR | Algorithm::DpicRM => Objective::DpicR,
        }
    }

    pub fn criterion(self) -> Criterion {
        match self {
            Algorithm::Fq => Criterion::VarianceReduction,
            _ => Criterion::CostInfoGain,
        }
    }

    /// Whether the algorithm runs the iterated collect/resample/grow loop
    /// instead of a single pass.
    pub fn iterative(self) -> bool {
        matches!(self, Algorithm::ViperM | Algorithm::DpicM | Algorithm::DpicRM)
    }

    pub fn takes_alpha(self) -> bool {
        matches!(self, Algorithm::DpicR | Algorithm::DpicRM)
    }

    /// Position in [`Algorithm::ALL`], used to order report rows.
    pub fn rank(self) -> usize {
        Algorithm::ALL.iter().position(|a| *a == self).unwrap()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Bc => "BC",
            Algorithm::Fq => "FQ",
            Algorithm::ViperM => "ViperM",
            Algorithm::Dpic => "Dpic",
            Algorithm::DpicM => "DpicM",
            Algorithm::DpicR => "DpicR",
            Algorithm::DpicRM => "DpicRM",
        })
    }
}
