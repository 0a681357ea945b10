use std::path::{Path, PathBuf};

use abcd_core::dataset::read_manifest_str;
use abcd_core::ml::FeatureRecord;
use abcd_core::{assess_image, AbcdScores, FilterKind, Label, LesionRecord, Manifest, TdsAssessment};
use rayon::prelude::*;

use super::assess::{file_stem, write_overlays};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::load_image;

pub const FEATURES_HEADER: [&str; 9] = ["image_id", "stream", "a", "b", "c", "d", "tds", "category", "label"];

/// Extraction fails as a whole when more than this fraction of images fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub image_id: String,
    pub stream: FilterKind,
    pub scores: AbcdScores,
    pub tds: TdsAssessment,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailedImage {
    pub image_id: String,
    pub label: Label,
    pub reason: String,
}

/// Successful rows and failures, both in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub seed: u64,
    pub stream: FilterKind,
    pub rows: Vec<FeatureRow>,
    pub failures: Vec<FailedImage>,
}

impl FeatureTable {
    pub fn total(&self) -> usize {
        self.rows.len() + self.failures.len()
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.total() as f64
        }
    }

    /// Successful rows followed by failures. Failures are excluded from
    /// evaluation, so their position does not matter.
    pub fn all_records(&self) -> Vec<FeatureRecord> {
        let ok = self.rows.iter().map(|r| FeatureRecord {
            image_id: r.image_id.clone(),
            label: r.label,
            scores: Ok(r.scores),
        });
        let failed = self.failures.iter().map(|f| FeatureRecord {
            image_id: f.image_id.clone(),
            label: f.label,
            scores: Err(f.reason.clone()),
        });
        ok.chain(failed).collect()
    }

    /// Comment lines carry seed, stream and failures; the header follows.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# seed={}\n# stream={}\n# failed={}\n",
            self.seed,
            self.stream,
            self.failures.len()
        );
        for f in &self.failures {
            out.push_str(&format!(
                "# failed_image={} {} {}\n",
                f.image_id,
                f.label,
                one_line(&f.reason)
            ));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(FEATURES_HEADER).expect("in-memory write");
        for r in &self.rows {
            let s = r.scores;
            w.write_record([
                r.image_id.clone(),
                r.stream.to_string(),
                s.a.to_string(),
                s.b.to_string(),
                s.c.to_string(),
                s.d.to_string(),
                format!("{:.1}", r.tds.tds),
                r.tds.category.to_string(),
                r.label.to_string(),
            ])
            .expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
        out
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::domain(format!("features line {line}: {msg}"))
}

/// Parses the output of [`FeatureTable::to_csv`]. Each row's TDS and
/// category must agree with its A/B/C/D, and all rows share one stream.
pub fn parse_features_csv(text: &str, fallback_stream: FilterKind) -> CliResult<FeatureTable> {
    let mut seed = None;
    let mut stream = None;
    let mut failures = Vec::new();
    for (i, line) in text.lines().enumerate().take_while(|(_, l)| l.starts_with('#')) {
        let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') else {
            continue;
        };
        match k.trim() {
            "seed" => seed = Some(v.trim().parse::<u64>().map_err(|e| parse_err(i + 1, e))?),
            "stream" => stream = Some(v.trim().parse::<FilterKind>().map_err(|e| parse_err(i + 1, e))?),
            "failed_image" => {
                let mut parts = v.trim().splitn(3, ' ');
                let id = parts.next().unwrap_or_default().to_string();
                let label = parts
                    .next()
                    .unwrap_or_default()
                    .parse::<Label>()
                    .map_err(|e| parse_err(i + 1, e))?;
                failures.push(FailedImage {
                    image_id: id,
                    label,
                    reason: parts.next().unwrap_or_default().to_string(),
                });
            }
            _ => {}
        }
    }
    let comment_lines = text.lines().take_while(|l| l.starts_with('#')).count();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_err(comment_lines + 1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != FEATURES_HEADER {
        return Err(parse_err(
            comment_lines + 1,
            format!("header must be {}", FEATURES_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = comment_lines + i + 2;
        let rec = rec.map_err(|e| parse_err(line, e))?;
        let num = |c: usize| {
            rec[c]
                .parse::<u8>()
                .map_err(|e| parse_err(line, format!("column {}: {e}", FEATURES_HEADER[c])))
        };
        let scores = AbcdScores::new(num(2)?, num(3)?, num(4)?, num(5)?).map_err(|e| parse_err(line, e))?;
        let tds = TdsAssessment::from_scores(&scores).map_err(|e| parse_err(line, e))?;
        if format!("{:.1}", tds.tds) != rec[6] || tds.category.to_string() != rec[7] {
            return Err(parse_err(line, "tds/category disagree with a,b,c,d"));
        }
        let row_stream: FilterKind = rec[1].parse().map_err(|e| parse_err(line, e))?;
        match stream {
            None => stream = Some(row_stream),
            Some(s) if s != row_stream => return Err(parse_err(line, format!("mixed streams {s} and {row_stream}"))),
            _ => {}
        }
        rows.push(FeatureRow {
            image_id: rec[0].to_string(),
            stream: row_stream,
            scores,
            tds,
            label: rec[8].parse().map_err(|e| parse_err(line, e))?,
        });
    }
    Ok(FeatureTable {
        seed: seed.unwrap_or(0),
        stream: stream.unwrap_or(fallback_stream),
        rows,
        failures,
    })
}

/// Relative image paths are taken relative to the manifest's directory.
pub fn resolve_image_path(manifest_dir: &Path, path: &Path) -> PathBuf {
    if path.is_relative() {
        manifest_dir.join(path)
    } else {
        path.to_path_buf()
    }
}

pub fn load_manifest(path: &Path) -> CliResult<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    let mut manifest = read_manifest_str(&text).map_err(|e| CliError::from(e).context(path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for r in &mut manifest.records {
        r.image_path = resolve_image_path(dir, &r.image_path);
    }
    Ok(manifest)
}

fn extract_one(record: &LesionRecord, config: &RunConfig, overlay_dir: Option<&Path>) -> Result<FeatureRow, String> {
    let img = load_image(&record.image_path).map_err(|e| e.message)?;
    let a = assess_image(&img, config.stream, &config.pipeline, config.seed).map_err(|e| e.to_string())?;
    if let Some(dir) = overlay_dir {
        write_overlays(&a, dir, &file_stem(&record.image_path)).map_err(|e| e.message)?;
    }
    Ok(FeatureRow {
        image_id: record.image_id.clone(),
        stream: config.stream,
        scores: a.features.scores,
        tds: a.tds,
        label: record.label,
    })
}

/// Runs `f` over `items` on `workers` threads; results keep input order.
pub fn ordered_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync + Send,
) -> CliResult<Vec<R>> {
    if workers <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::domain(format!("worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Scores every manifest image. Per-image failures are logged and kept
/// aside; the caller decides whether the failure rate is acceptable.
pub fn extract_features(
    manifest: &Manifest,
    config: &RunConfig,
    overlay_dir: Option<&Path>,
) -> CliResult<FeatureTable> {
    let results = ordered_map(&manifest.records, config.workers, |r| {
        extract_one(r, config, overlay_dir)
    })?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (record, result) in manifest.records.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(reason) => {
                log::warn!("{}: {reason}", record.image_id);
                failures.push(FailedImage {
                    image_id: record.image_id.clone(),
                    label: record.label,
                    reason,
                });
            }
        }
    }
    Ok(FeatureTable {
        seed: config.seed,
        stream: config.stream,
        rows,
        failures,
    })
}

pub fn check_failure_rate(table: &FeatureTable) -> CliResult<()> {
    if table.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(CliError::domain(format!(
            "{} of {} images failed feature extraction",
            table.failures.len(),
            table.total()
        )));
    }
    Ok(())
}

/// The `extract` command: the CSV is returned (and written to
/// `<out>/features.csv`) even when the failure rate check then fails.
pub fn cmd_extract(
    manifest_path: &Path,
    config: &RunConfig,
    out: Option<&Path>,
    overlays: bool,
) -> CliResult<(FeatureTable, String)> {
    if overlays && out.is_none() {
        return Err(CliError::domain("--overlays requires --out"));
    }
    let manifest = load_manifest(manifest_path)?;
    let overlay_dir = out.filter(|_| overlays).map(|d| d.join("overlays"));
    let table = extract_features(&manifest, config, overlay_dir.as_deref())?;
    let csv = table.to_csv();
    if let Some(dir) = out {
        crate::io::create_dir(dir)?;
        crate::io::write_file(&dir.join("features.csv"), &csv)?;
    }
    Ok((table, csv))
}
