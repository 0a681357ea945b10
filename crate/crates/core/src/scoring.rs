//! Total Dermoscopy Score and the three-way clinical category.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::color::{ColorResult, MAX_C_SCORE};
use crate::error::{Error, Result};
use crate::geometry::{AsymmetryResult, BorderResult};
use crate::structures::StructuresResult;

pub const WEIGHT_A: f64 = 1.3;
pub const WEIGHT_B: f64 = 0.1;
pub const WEIGHT_C: f64 = 0.5;
pub const WEIGHT_D: f64 = 0.5;

pub const SUSPICIOUS_FROM: f64 = 4.75;
pub const MALIGNANT_ABOVE: f64 = 5.45;

/// The four integer scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbcdScores {
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub d: u8,
}

impl AbcdScores {
    pub fn new(a: u8, b: u8, c: u8, d: u8) -> Result<Self> {
        let s = Self { a, b, c, d };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("A", self.a, 0, 2),
            ("B", self.b, 0, 8),
            ("C", self.c, 1, MAX_C_SCORE),
            ("D", self.d, 0, 4),
        ];
        for (name, v, lo, hi) in checks {
            if v < lo || v > hi {
                return Err(Error::FeatureOutOfRange(format!("{name}={v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Scores together with the measurements that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcdFeatures {
    pub scores: AbcdScores,
    pub asymmetry: AsymmetryResult,
    pub border: BorderResult,
    pub color: ColorResult,
    pub structures: StructuresResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TdsCategory {
    Benign,
    Suspicious,
    Malignant,
}

impl TdsCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            TdsCategory::Benign => "Benign",
            TdsCategory::Suspicious => "Suspicious",
            TdsCategory::Malignant => "Malignant",
        }
    }
}

impl fmt::Display for TdsCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TdsCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Benign" => Ok(TdsCategory::Benign),
            "Suspicious" => Ok(TdsCategory::Suspicious),
            "Malignant" => Ok(TdsCategory::Malignant),
            other => Err(Error::InvalidArgument(format!("unknown category '{other}'"))),
        }
    }
}

/// Binary ground truth / prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malignant,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malignant => "malignant",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Malignant
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benign" => Ok(Label::Benign),
            "malignant" => Ok(Label::Malignant),
            other => Err(Error::InvalidArgument(format!("unknown label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdsAssessment {
    pub tds: f64,
    pub category: TdsCategory,
}

impl TdsAssessment {
    pub fn from_scores(scores: &AbcdScores) -> Result<Self> {
        let tds = compute_tds(scores)?;
        Ok(Self {
            tds,
            category: classify_tds(tds),
        })
    }
}

/// `1.3·A + 0.1·B + 0.5·C + 0.5·D`.
pub fn compute_tds(s: &AbcdScores) -> Result<f64> {
    s.validate()?;
    // Sum in integer tenths so category boundaries such as 4.75 compare exactly.
    let tenths = 13 * s.a as u32 + s.b as u32 + 5 * s.c as u32 + 5 * s.d as u32;
    Ok(tenths as f64 / 10.0)
}

pub fn classify_tds(tds: f64) -> TdsCategory {
    if tds < SUSPICIOUS_FROM {
        TdsCategory::Benign
    } else if tds <= MALIGNANT_ABOVE {
        TdsCategory::Suspicious
    } else {
        TdsCategory::Malignant
    }
}

/// Suspicious lesions count as malignant for binary evaluation.
pub fn binary_from_assessment(t: &TdsAssessment) -> Label {
    match t.category {
        TdsCategory::Benign => Label::Benign,
        TdsCategory::Suspicious | TdsCategory::Malignant => Label::Malignant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tds(a: u8, b: u8, c: u8, d: u8) -> f64 {
        compute_tds(&AbcdScores { a, b, c, d }).unwrap()
    }

    #[test]
    fn tds_examples() {
        assert!((tds(0, 0, 1, 0) - 0.5).abs() < 1e-12);
        assert!((tds(2, 8, 6, 4) - 8.4).abs() < 1e-12);
        assert!((tds(1, 4, 3, 2) - 4.2).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        for s in [
            AbcdScores { a: 3, b: 0, c: 1, d: 0 },
            AbcdScores { a: 0, b: 9, c: 1, d: 0 },
            AbcdScores { a: 0, b: 0, c: 0, d: 0 },
            AbcdScores { a: 0, b: 0, c: 7, d: 0 },
            AbcdScores { a: 0, b: 0, c: 1, d: 5 },
        ] {
            assert!(matches!(compute_tds(&s), Err(Error::FeatureOutOfRange(_))));
        }
    }

    #[test]
    fn category_boundaries() {
        assert_eq!(classify_tds(4.74), TdsCategory::Benign);
        assert_eq!(classify_tds(4.75), TdsCategory::Suspicious);
        assert_eq!(classify_tds(5.45), TdsCategory::Suspicious);
        assert_eq!(classify_tds(5.46), TdsCategory::Malignant);
        assert_eq!(classify_tds(8.4), TdsCategory::Malignant);
    }

    #[test]
    fn binary_mapping() {
        let mk = |category| TdsAssessment { tds: 0.0, category };
        assert_eq!(binary_from_assessment(&mk(TdsCategory::Suspicious)), Label::Malignant);
        assert_eq!(binary_from_assessment(&mk(TdsCategory::Benign)), Label::Benign);
        assert_eq!(binary_from_assessment(&mk(TdsCategory::Malignant)), Label::Malignant);
    }

    #[test]
    fn tds_strictly_increasing_in_each_score() {
        for a in 0..=2u8 {
            for b in 0..=8u8 {
                for c in 1..=6u8 {
                    for d in 0..=4u8 {
                        let t = tds(a, b, c, d);
                        if a < 2 {
                            assert!(tds(a + 1, b, c, d) > t);
                        }
                        if b < 8 {
                            assert!(tds(a, b + 1, c, d) > t);
                        }
                        if c < 6 {
                            assert!(tds(a, b, c + 1, d) > t);
                        }
                        if d < 4 {
                            assert!(tds(a, b, c, d + 1) > t);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn binary_label_monotone_in_tds() {
        let mut prev = Label::Benign;
        for i in 0..=900 {
            let t = i as f64 * 0.01;
            let l = binary_from_assessment(&TdsAssessment {
                tds: t,
                category: classify_tds(t),
            });
            assert!(l >= prev);
            prev = l;
        }
    }
}
