use std::path::{Path, PathBuf};

use abcd_core::dataset::{balanced_subset, parse_metadata, write_manifest};
use abcd_core::synth::{generate_corpus, Fixture};
use abcd_core::{LesionRecord, Manifest};

use super::assess::to_pretty_json;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, save_gray_png, save_rgb_png, write_file};

pub const FIXTURE_MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSet {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

/// Writes `images/<id>.png`, `masks/<id>.png`, `truth/<id>.json` and a
/// manifest with paths relative to `out`.
pub fn write_fixtures(fixtures: &[Fixture], seed: u64, out: &Path) -> CliResult<FixtureSet> {
    for sub in ["images", "masks", "truth"] {
        create_dir(&out.join(sub))?;
    }
    let mut records = Vec::with_capacity(fixtures.len());
    for f in fixtures {
        let id = &f.truth.image_id;
        let rel = PathBuf::from("images").join(format!("{id}.png"));
        save_rgb_png(&f.image, &out.join(&rel))?;
        save_gray_png(&f.mask.to_gray(), &out.join("masks").join(format!("{id}.png")))?;
        write_file(
            &out.join("truth").join(format!("{id}.json")),
            to_pretty_json(&f.truth) + "\n",
        )?;
        records.push(LesionRecord {
            image_id: id.clone(),
            image_path: rel,
            dx: f.truth.dx.clone(),
            label: f.truth.label,
        });
    }
    let manifest = Manifest {
        records,
        provenance: vec![("seed".into(), seed.to_string()), ("source".into(), "synthetic".into())],
    };
    let manifest_path = out.join(FIXTURE_MANIFEST);
    save_manifest(&manifest, &manifest_path)?;
    Ok(FixtureSet {
        manifest_path,
        manifest,
    })
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> CliResult<()> {
    let mut buf = Vec::new();
    write_manifest(manifest, &mut buf)?;
    write_file(path, buf)
}

pub fn cmd_make_fixtures(out: &Path, seed: u64, per_class: usize) -> CliResult<FixtureSet> {
    if per_class == 0 {
        return Err(CliError::domain("--per-class must be at least 1"));
    }
    write_fixtures(&generate_corpus(seed, per_class), seed, out)
}

/// Builds a balanced manifest from HAM10000-style metadata. Image paths
/// are made absolute so the manifest can live anywhere.
pub fn cmd_subset(metadata: &Path, images: &Path, extension: &str, per_class: usize, seed: u64) -> CliResult<Manifest> {
    let images = std::fs::canonicalize(images).map_err(|e| CliError::io(format!("{}: {e}", images.display())))?;
    let records =
        parse_metadata(metadata, &images, extension).map_err(|e| CliError::from(e).context(metadata.display()))?;
    let mut manifest = balanced_subset(&records, per_class, seed)?;
    manifest
        .provenance
        .push(("source".into(), metadata.display().to_string()));
    Ok(manifest)
}
