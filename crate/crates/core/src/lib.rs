//! Rule-based dermoscopic lesion assessment.
//!
//! The pipeline filters an RGB image with one of three 3×3 denoising
//! streams, segments the lesion with Otsu thresholding and morphology,
//! scores Asymmetry, Border, Color and Dermoscopic structures, and combines
//! them into the Total Dermoscopy Score. The [`ml`] module adds a
//! class-weighted logistic-regression baseline and evaluation metrics, and
//! [`dataset`] reads HAM10000-style metadata.

pub mod color;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod image;
pub mod ml;
pub mod pipeline;
pub mod scoring;
pub mod segmentation;
pub mod structures;
pub mod synth;

pub use color::{ColorCluster, ColorParams, ColorResult};
pub use dataset::{LesionRecord, Manifest};
pub use error::{Error, Result};
pub use geometry::{AsymmetryResult, BorderResult};
pub use image::{FilterKind, GrayImage, ImageBuffer, LabPixel};
pub use ml::{FeatureVector, LogisticModel, MetricsReport, Normalizer};
pub use pipeline::{assess_image, Assessment, PipelineConfig};
pub use scoring::{AbcdFeatures, AbcdScores, Label, TdsAssessment, TdsCategory};
pub use segmentation::BinaryMask;
pub use structures::{StructureParams, StructuresResult};
