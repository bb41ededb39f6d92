use std::fs::File;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureFrame, SchemaConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Keep a seeded random subset of this many rows (original order kept).
    pub subsample: Option<usize>,
    pub seed: u64,
}

/// Reads a headed, comma-separated file into a frame.
///
/// Cells matching one of the schema's missing markers are recorded as missing
/// (value 0.0 until imputed); any other unparseable cell is a row error
/// carrying its 1-based line number.
pub fn load_csv(path: &Path, schema: &SchemaConfig, opts: LoadOptions) -> Result<(FeatureFrame, SchemaConfig)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let schema = schema.resolve(&header_refs)?;
    let label_idx = header_refs
        .iter()
        .position(|h| *h == schema.label_column)
        .expect("resolve checked the label column");
    let feature_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| header_refs.iter().position(|h| h == c).expect("resolve checked features"))
        .collect();

    let mut data = Vec::new();
    let mut missing = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let label_cell = record.get(label_idx).unwrap_or("").trim();
        let label = match label_cell.parse::<f64>() {
            Ok(v) if v == 0.0 => 0u8,
            Ok(v) if v == 1.0 => 1u8,
            _ => {
                return Err(Error::Row {
                    line,
                    message: format!(
                        "label {:?} in column {:?} is not 0 or 1",
                        label_cell, schema.label_column
                    ),
                })
            }
        };
        labels.push(label);
        for (&ci, name) in feature_idx.iter().zip(&schema.feature_columns) {
            let cell = record.get(ci).unwrap_or("");
            if schema.is_missing(cell) {
                data.push(0.0);
                missing.push(true);
                continue;
            }
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    data.push(v);
                    missing.push(false);
                }
                _ => {
                    return Err(Error::Row {
                        line,
                        message: format!("cannot parse {cell:?} in column {name:?} as a number"),
                    })
                }
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    let f = feature_idx.len();
    let n = labels.len();
    let frame = FeatureFrame::with_missing(
        schema.feature_columns.clone(),
        Tensor::new(vec![n, f], data)?,
        labels,
        missing,
    )?;
    let frame = match opts.subsample {
        Some(k) if k < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut keep = sample(&mut rng, n, k).into_vec();
            keep.sort_unstable();
            frame.select_rows(&keep, super::SplitTag::Unsplit)?
        }
        _ => frame,
    };
    log::info!(
        "loaded {} rows x {} features from {} ({} missing cells)",
        frame.n_rows(),
        frame.n_features(),
        path.display(),
        frame.missing_count()
    );
    Ok((frame, schema))
}

/// Writes features followed by a `label` column. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv(frame: &FeatureFrame, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = frame.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for i in 0..frame.n_rows() {
        let mut rec: Vec<String> = frame.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(frame.labels()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn schema() -> SchemaConfig {
        SchemaConfig {
            label_column: "y".into(),
            feature_columns: vec!["a".into(), "b".into()],
            ..Default::default()
        }
    }

    #[test]
    fn records_missing_cells() {
        let f = write("a,b,y\n1,2,0\nNA,4,1\n5,6,0\n");
        let (frame, _) = load_csv(f.path(), &schema(), LoadOptions::default()).unwrap();
        assert_eq!(frame.n_rows(), 3);
        assert_eq!(frame.missing_count(), 1);
        assert!(frame.is_missing(1, 0));
        assert_eq!(frame.labels(), &[0, 1, 0]);
    }

    #[test]
    fn missing_label_column_is_schema_error() {
        let f = write("a,b,target\n1,2,0\n");
        let err = load_csv(f.path(), &schema(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("\"y\"")), "{err}");
    }

    #[test]
    fn bad_cell_reports_line_number() {
        let f = write("a,b,y\n1,2,0\n1,oops,1\n");
        match load_csv(f.path(), &schema(), LoadOptions::default()).unwrap_err() {
            Error::Row { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn subsample_is_seeded() {
        let mut text = String::from("a,b,y\n");
        for i in 0..50 {
            text.push_str(&format!("{i},{},{}\n", i * 2, i % 2));
        }
        let f = write(&text);
        let opts = LoadOptions {
            subsample: Some(10),
            seed: 3,
        };
        let (a, _) = load_csv(f.path(), &schema(), opts).unwrap();
        let (b, _) = load_csv(f.path(), &schema(), opts).unwrap();
        assert_eq!(a.n_rows(), 10);
        assert_eq!(a, b);
    }

    #[test]
    fn write_then_load_is_exact() {
        let x = Tensor::new(vec![2, 2], vec![0.1, -1.0 / 3.0, 1e-300, 7.0]).unwrap();
        let frame = FeatureFrame::new(vec!["a".into(), "b".into()], x, vec![1, 0]).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&frame, out.path()).unwrap();
        let schema = SchemaConfig {
            label_column: "label".into(),
            ..Default::default()
        };
        let (back, _) = load_csv(out.path(), &schema, LoadOptions::default()).unwrap();
        assert_eq!(back, frame);
    }
}
