use std::path::Path;

use abcd_core::color::ColorParams;
use abcd_core::ml::TrainConfig;
use abcd_core::structures::StructureParams;
use abcd_core::{FilterKind, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Settings file contents. Every key is optional; unknown keys are errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub stream: Option<FilterKind>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub train_fraction: Option<f64>,
    pub train: TrainSection,
    pub color: ColorParams,
    pub structures: StructureParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
}

/// Effective settings after flags override the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stream: FilterKind,
    pub seed: u64,
    pub workers: usize,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(FileConfig::default(), None, None, None)
    }
}

impl RunConfig {
    pub fn resolve(file: FileConfig, stream: Option<FilterKind>, seed: Option<u64>, workers: Option<usize>) -> Self {
        let seed = seed.or(file.seed).unwrap_or(0);
        let defaults = TrainConfig::default();
        Self {
            stream: stream.or(file.stream).unwrap_or(FilterKind::Median3),
            seed,
            workers: workers.or(file.workers).unwrap_or(1).max(1),
            train_fraction: file.train_fraction.unwrap_or(0.8),
            train: TrainConfig {
                learning_rate: file.train.learning_rate.unwrap_or(defaults.learning_rate),
                epochs: file.train.epochs.unwrap_or(defaults.epochs),
                seed,
            },
            pipeline: PipelineConfig {
                color: file.color,
                structures: file.structures,
            },
        }
    }
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    parse_file_config(&text).map_err(|e| CliError::domain(format!("config {}: {e}", path.display())))
}

pub fn parse_file_config(text: &str) -> Result<FileConfig, toml::de::Error> {
    toml::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::resolve(parse_file_config("").unwrap(), None, None, None);
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.stream, c.seed, c.workers), (FilterKind::Median3, 0, 1));
        assert_eq!(c.train.epochs, 1000);
    }

    #[test]
    fn nested_overrides_and_flag_precedence() {
        let text = r#"
            stream = "flat"
            seed = 5
            [train]
            epochs = 20
            [color]
            k = 4
            [structures.streaks]
            min_segments = 7
        "#;
        let file = parse_file_config(text).unwrap();
        let c = RunConfig::resolve(file.clone(), None, None, None);
        assert_eq!((c.stream, c.seed, c.train.epochs), (FilterKind::FlatAverage3, 5, 20));
        assert_eq!(c.pipeline.color.k, 4);
        assert_eq!(c.pipeline.structures.streaks.min_segments, 7);
        assert_eq!(c.pipeline.structures.streaks.canny_high, 150.0);
        let c = RunConfig::resolve(file, Some(FilterKind::Gaussian3Sigma1), Some(9), Some(4));
        assert_eq!(
            (c.stream, c.seed, c.workers, c.train.seed),
            (FilterKind::Gaussian3Sigma1, 9, 4, 9)
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_file_config("sed = 3").is_err());
        assert!(parse_file_config("[color]\nkk = 3").is_err());
        assert!(parse_file_config("[structures.dots]\nthreshold = 0.1").is_err());
    }
}
