//! HAM10000-style metadata parsing, binary labels and balanced manifests.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scoring::Label;

pub const DIAGNOSIS_CODES: [&str; 7] = ["akiec", "bcc", "bkl", "df", "mel", "nv", "vasc"];

/// `mel`, `bcc` and `akiec` are malignant; `nv`, `bkl`, `df` and `vasc` benign.
pub fn binary_label(dx: &str) -> Result<Label> {
    match dx {
        "mel" | "bcc" | "akiec" => Ok(Label::Malignant),
        "nv" | "bkl" | "df" | "vasc" => Ok(Label::Benign),
        other => Err(Error::InvalidArgument(format!("unknown diagnosis code '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LesionRecord {
    pub image_id: String,
    pub image_path: PathBuf,
    pub dx: String,
    pub label: Label,
}

/// Ordered records plus `key=value` provenance notes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub records: Vec<LesionRecord>,
    pub provenance: Vec<(String, String)>,
}

impl Manifest {
    pub fn provenance_value(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Metadata {
            row: 1,
            message: format!("missing column '{name}'"),
        })
}

/// Parses metadata with at least `image_id` and `dx` columns. Rows are
/// numbered as file lines, the header being row 1.
pub fn parse_metadata_reader<R: Read>(input: R, image_dir: &Path, extension: &str) -> Result<Vec<LesionRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let id_col = column(&headers, "image_id")?;
    let dx_col = column(&headers, "dx")?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Metadata {
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |c: usize, name: &str| {
            row.get(c)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Metadata {
                    row: row_no,
                    message: format!("empty {name}"),
                })
        };
        let image_id = field(id_col, "image_id")?.to_string();
        let dx = field(dx_col, "dx")?.to_string();
        let label = binary_label(&dx).map_err(|e| Error::Metadata {
            row: row_no,
            message: e.to_string(),
        })?;
        if !seen.insert(image_id.clone()) {
            return Err(Error::Metadata {
                row: row_no,
                message: format!("duplicate image_id '{image_id}'"),
            });
        }
        let image_path = image_dir.join(format!("{image_id}.{}", extension.trim_start_matches('.')));
        out.push(LesionRecord {
            image_id,
            image_path,
            dx,
            label,
        });
    }
    Ok(out)
}

pub fn parse_metadata(csv_path: &Path, image_dir: &Path, extension: &str) -> Result<Vec<LesionRecord>> {
    let file = std::fs::File::open(csv_path)?;
    parse_metadata_reader(file, image_dir, extension)
}

/// Seeded sample of `per_class` records from each class, ordered by `image_id`.
pub fn balanced_subset(records: &[LesionRecord], per_class: usize, seed: u64) -> Result<Manifest> {
    let benign: Vec<&LesionRecord> = records.iter().filter(|r| r.label == Label::Benign).collect();
    let malignant: Vec<&LesionRecord> = records.iter().filter(|r| r.label == Label::Malignant).collect();
    if benign.len() < per_class || malignant.len() < per_class {
        return Err(Error::InsufficientRecords {
            needed: per_class,
            benign: benign.len(),
            malignant: malignant.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<LesionRecord> = Vec::with_capacity(2 * per_class);
    for class in [&benign, &malignant] {
        let picks = sample(&mut rng, class.len(), per_class);
        chosen.extend(picks.iter().map(|i| class[i].clone()));
    }
    chosen.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(Manifest {
        records: chosen,
        provenance: vec![
            ("seed".into(), seed.to_string()),
            ("per_class".into(), per_class.to_string()),
        ],
    })
}

pub const MANIFEST_HEADER: [&str; 4] = ["image_id", "image_path", "dx", "label"];

/// Writes `# key=value` comment lines followed by the CSV body.
pub fn write_manifest<W: Write>(manifest: &Manifest, mut out: W) -> Result<()> {
    for (k, v) in &manifest.provenance {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MANIFEST_HEADER)?;
    for r in &manifest.records {
        let path = r.image_path.to_string_lossy();
        w.write_record([r.image_id.as_str(), path.as_ref(), r.dx.as_str(), r.label.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest_str(text: &str) -> Result<Manifest> {
    let mut provenance = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            provenance.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::Metadata {
            row: 1,
            message: format!("manifest header must be {}", MANIFEST_HEADER.join(",")),
        });
    }
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Metadata {
            row: row_no,
            message: e.to_string(),
        })?;
        let err = |message: String| Error::Metadata { row: row_no, message };
        let label: Label = row[3].parse().map_err(|e: Error| err(e.to_string()))?;
        let expected = binary_label(&row[2]).map_err(|e| err(e.to_string()))?;
        if label != expected {
            return Err(err(format!("label {label} disagrees with dx {}", &row[2])));
        }
        if !seen.insert(row[0].to_string()) {
            return Err(err(format!("duplicate image_id '{}'", &row[0])));
        }
        records.push(LesionRecord {
            image_id: row[0].to_string(),
            image_path: PathBuf::from(&row[1]),
            dx: row[2].to_string(),
            label,
        });
    }
    Ok(Manifest { records, provenance })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    read_manifest_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "lesion_id,image_id,dx,dx_type,age,sex,localization\n";

    fn parse(text: &str) -> Result<Vec<LesionRecord>> {
        parse_metadata_reader(text.as_bytes(), Path::new("imgs"), "jpg")
    }

    #[test]
    fn maps_and_builds_paths() {
        let recs = parse(&format!("{HEADER}HAM_0000118,ISIC_0027419,bkl,histo,80.0,male,scalp\n")).unwrap();
        assert_eq!(recs[0].label, Label::Benign);
        assert_eq!(recs[0].image_path, Path::new("imgs/ISIC_0027419.jpg"));
    }

    #[test]
    fn mapping_table() {
        let malignant = ["mel", "bcc", "akiec"];
        for code in DIAGNOSIS_CODES {
            let want = if malignant.contains(&code) {
                Label::Malignant
            } else {
                Label::Benign
            };
            assert_eq!(binary_label(code).unwrap(), want);
        }
        assert!(binary_label("MEL").is_err());
    }

    #[test]
    fn errors_name_the_row() {
        let text = format!("{HEADER}a,ISIC_1,nv,x,1,m,y\nb,ISIC_2,xyz,x,1,m,y\n");
        assert!(matches!(parse(&text), Err(Error::Metadata { row: 3, .. })));
        let dup = format!("{HEADER}a,ISIC_1,nv,x,1,m,y\nb,ISIC_1,nv,x,1,m,y\n");
        assert!(matches!(parse(&dup), Err(Error::Metadata { row: 3, .. })));
        assert!(matches!(
            parse("image_id,age\nx,1\n"),
            Err(Error::Metadata { row: 1, .. })
        ));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse(HEADER).unwrap().is_empty());
    }

    fn synthetic(n_benign: usize, n_malignant: usize) -> Vec<LesionRecord> {
        let mut text = String::from(HEADER);
        for i in 0..n_benign + n_malignant {
            let dx = if i < n_benign {
                ["nv", "bkl", "df", "vasc"][i % 4]
            } else {
                ["mel", "bcc", "akiec"][i % 3]
            };
            text.push_str(&format!(
                "L{i},ISIC_{:07},{dx},histo,50,female,back\n",
                1000 + i * 7 % 331
            ));
        }
        parse(&text).unwrap()
    }

    #[test]
    fn subset_is_balanced_sorted_and_seeded() {
        let recs = synthetic(200, 90);
        let m = balanced_subset(&recs, 50, 3).unwrap();
        assert_eq!((m.count(Label::Benign), m.count(Label::Malignant)), (50, 50));
        assert!(m.records.windows(2).all(|w| w[0].image_id < w[1].image_id));
        assert_eq!(m, balanced_subset(&recs, 50, 3).unwrap());
        assert_ne!(m, balanced_subset(&recs, 50, 4).unwrap());
        assert!(balanced_subset(&recs, 0, 1).unwrap().records.is_empty());
        assert_eq!(
            balanced_subset(&recs, 91, 1),
            Err(Error::InsufficientRecords {
                needed: 91,
                benign: 200,
                malignant: 90
            })
        );
    }

    proptest! {
        #[test]
        fn manifest_round_trip(nb in 0usize..30, nm in 0usize..30, seed in 0u64..1000) {
            let recs = synthetic(nb, nm);
            let m = balanced_subset(&recs, nb.min(nm), seed).unwrap();
            let mut buf = Vec::new();
            write_manifest(&m, &mut buf).unwrap();
            let back = read_manifest_str(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
