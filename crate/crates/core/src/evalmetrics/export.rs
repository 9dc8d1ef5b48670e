use crate::error::{Error, Result};
use crate::seqdata::{LabelVocabulary, SequenceRecord};

/// Scientific notation with 9 significant digits; parses back to the same `f32`.
pub fn fmt_sig9(v: f32) -> String {
    format!("{v:.8e}")
}

/// Feature table: header `id  labels  f0 ... f{n-1}`, then one row per record.
///
/// Labels are the record's active terms joined by `;` (empty if unlabelled).
pub fn export_features(records: &[SequenceRecord], features: &[Vec<f32>], vocab: Option<&LabelVocabulary>) -> Result<String> {
    if records.len() != features.len() {
        return Err(Error::shape(
            "export_features",
            format!("{} records but {} feature rows", records.len(), features.len()),
        ));
    }
    let width = features.first().map_or(0, Vec::len);
    if let Some(i) = features.iter().position(|f| f.len() != width) {
        return Err(Error::shape("export_features", format!("row {i} has {} columns, expected {width}", features[i].len())));
    }
    let mut out = String::from("id\tlabels");
    for j in 0..width {
        out.push_str(&format!("\tf{j}"));
    }
    out.push('\n');
    for (r, f) in records.iter().zip(features) {
        let labels = match vocab {
            Some(v) if r.labels.len() == v.len() => v.describe(&r.labels),
            _ => r.description.clone(),
        };
        out.push_str(&r.id);
        out.push('\t');
        out.push_str(&labels);
        for v in f {
            out.push('\t');
            out.push_str(&fmt_sig9(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// One parsed row of [`export_features`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub labels: String,
    pub values: Vec<f32>,
}

pub fn parse_feature_tsv(text: &str) -> Result<Vec<FeatureRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty feature table".into() })?;
    let cols = header.split('\t').count();
    if cols < 2 || !header.starts_with("id\tlabels") {
        return Err(Error::Parse { line: 1, msg: "expected header `id<TAB>labels...`".into() });
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols {
                return Err(Error::Parse { line: n + 2, msg: format!("{} fields, header has {cols}", fields.len()) });
            }
            let values = fields[2..]
                .iter()
                .map(|s| s.parse::<f32>().map_err(|_| Error::Parse { line: n + 2, msg: format!("bad number `{s}`") }))
                .collect::<Result<_>>()?;
            Ok(FeatureRow { id: fields[0].to_string(), labels: fields[1].to_string(), values })
        })
        .collect()
}
