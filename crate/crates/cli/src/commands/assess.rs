use std::path::{Path, PathBuf};

use abcd_core::color::ColorResult;
use abcd_core::{assess_image, Assessment, AsymmetryResult, BorderResult, FilterKind, StructuresResult, TdsCategory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, load_image, save_gray_png, save_rgb_png, write_file};
use crate::overlay::{cluster_swatch, ray_overlay, structure_overlay};

/// JSON document produced for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub image: String,
    pub stream: FilterKind,
    pub seed: u64,
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub d: u8,
    pub tds: f64,
    pub category: TdsCategory,
    pub asymmetry: AsymmetryResult,
    pub border: BorderResult,
    pub color: ColorResult,
    pub structures: StructuresResult,
}

impl AssessmentReport {
    pub fn new(image: &Path, seed: u64, a: &Assessment) -> Self {
        let f = &a.features;
        Self {
            image: image.display().to_string(),
            stream: a.stream,
            seed,
            a: f.scores.a,
            b: f.scores.b,
            c: f.scores.c,
            d: f.scores.d,
            tds: a.tds.tds,
            category: a.tds.category,
            asymmetry: f.asymmetry.clone(),
            border: f.border.clone(),
            color: f.color.clone(),
            structures: f.structures.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessOutput {
    pub report: AssessmentReport,
    /// Files written under the output directory.
    pub written: Vec<PathBuf>,
}

/// Writes `<stem>_mask.png`, `<stem>_clusters.png`, `<stem>_rays.png` and
/// `<stem>_structures.png` into `dir`.
pub fn write_overlays(assessment: &Assessment, dir: &Path, stem: &str) -> CliResult<Vec<PathBuf>> {
    create_dir(dir)?;
    let path = |suffix: &str| dir.join(format!("{stem}_{suffix}.png"));
    let f = &assessment.features;
    let written = vec![path("mask"), path("clusters"), path("rays"), path("structures")];
    save_gray_png(&assessment.mask.to_gray(), &written[0])?;
    save_rgb_png(&cluster_swatch(&f.color), &written[1])?;
    save_rgb_png(
        &ray_overlay(&assessment.filtered, &assessment.mask, &f.border),
        &written[2],
    )?;
    save_rgb_png(
        &structure_overlay(&assessment.filtered, &assessment.mask, &assessment.detail),
        &written[3],
    )?;
    Ok(written)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "image".to_string(), |s| s.to_string_lossy().into_owned())
}

/// Assesses one image. With `out`, the JSON is also saved as `<stem>.json`;
/// `overlays` needs `out`.
pub fn cmd_assess(image: &Path, config: &RunConfig, out: Option<&Path>, overlays: bool) -> CliResult<AssessOutput> {
    if overlays && out.is_none() {
        return Err(CliError::domain("--overlays requires --out"));
    }
    let img = load_image(image)?;
    let assessment = assess_image(&img, config.stream, &config.pipeline, config.seed)
        .map_err(|e| CliError::from(e).context(image.display()))?;
    let report = AssessmentReport::new(image, config.seed, &assessment);
    let mut written = Vec::new();
    if let Some(dir) = out {
        create_dir(dir)?;
        let stem = file_stem(image);
        let json_path = dir.join(format!("{stem}.json"));
        write_file(&json_path, to_pretty_json(&report) + "\n")?;
        written.push(json_path);
        if overlays {
            written.extend(write_overlays(&assessment, dir, &stem)?);
        }
    }
    Ok(AssessOutput { report, written })
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}
