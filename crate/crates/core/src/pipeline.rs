//! End-to-end assessment of one image on one preprocessing stream.

use serde::{Deserialize, Serialize};

use crate::color::{c_score, ColorParams};
use crate::error::Result;
use crate::geometry::{asymmetry, border};
use crate::image::{apply_filter, to_grayscale, FilterKind, GrayImage, ImageBuffer};
use crate::scoring::{AbcdFeatures, AbcdScores, TdsAssessment};
use crate::segmentation::{segment_lesion, BinaryMask};
use crate::structures::{structures, StructureDetail, StructureParams};

/// Detector tunables that are not fixed by the scoring rule itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub color: ColorParams,
    pub structures: StructureParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub stream: FilterKind,
    pub features: AbcdFeatures,
    pub tds: TdsAssessment,
    pub filtered: ImageBuffer,
    pub gray: GrayImage,
    pub mask: BinaryMask,
    pub detail: StructureDetail,
}

/// Filter, segment, score A/B/C/D and combine into the TDS.
pub fn assess_image(image: &ImageBuffer, stream: FilterKind, config: &PipelineConfig, seed: u64) -> Result<Assessment> {
    let filtered = apply_filter(image, stream);
    let gray = to_grayscale(&filtered)?;
    let mask = segment_lesion(&gray)?;
    let asym = asymmetry(&mask)?;
    let bord = border(&gray, &mask)?;
    let color = c_score(&filtered, &mask, seed, &config.color)?;
    let (structs, detail) = structures(&gray, &mask, &config.structures, seed)?;
    let scores = AbcdScores::new(asym.a_score, bord.b_score, color.c_score, structs.d_score)?;
    let tds = TdsAssessment::from_scores(&scores)?;
    Ok(Assessment {
        stream,
        features: AbcdFeatures {
            scores,
            asymmetry: asym,
            border: bord,
            color,
            structures: structs,
        },
        tds,
        filtered,
        gray,
        mask,
        detail,
    })
}
