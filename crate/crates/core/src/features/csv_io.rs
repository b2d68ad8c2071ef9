use std::io::{Read, Write};

use super::{FeatureError, FeatureVector, N_MFCC};
use crate::Label;

/// One feature CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub features: FeatureVector,
    pub label: Option<Label>,
}

fn header() -> Vec<String> {
    let mut h = vec!["segment_id".to_string()];
    h.extend((0..N_MFCC).map(|i| format!("mfcc_{i}")));
    h.push("rms".into());
    h.push("label".into());
    h
}

/// Write `segment_id,mfcc_0..mfcc_39,rms,label`. Values use 13 significant digits.
pub fn write_feature_csv<W: Write>(
    writer: W,
    rows: &[LabeledFeatures],
) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| FeatureError::Csv(e.to_string());
    w.write_record(header()).map_err(err)?;
    for row in rows {
        let mut rec = Vec::with_capacity(N_MFCC + 3);
        rec.push(row.features.segment_id.clone());
        rec.extend(row.features.mfcc().iter().map(|v| format!("{v:.12e}")));
        rec.push(format!("{:.12e}", row.features.rms()));
        rec.push(row.label.map(|l| l.as_str().to_string()).unwrap_or_default());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))
}

/// Parse a feature CSV; `include_rms` sets the layout flag on every vector.
pub fn read_feature_csv<R: Read>(
    reader: R,
    include_rms: bool,
) -> Result<Vec<LabeledFeatures>, FeatureError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| FeatureError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != header() {
        return Err(FeatureError::Csv("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let at = |msg: String| FeatureError::Csv(format!("row {}: {msg}", line + 1));
        let num = |i: usize| -> Result<f64, FeatureError> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| at(format!("column {}: {e}", i)))
        };
        let mfcc = (1..=N_MFCC).map(num).collect::<Result<Vec<_>, _>>()?;
        let level = num(N_MFCC + 1)?;
        let label_text = rec[N_MFCC + 2].trim();
        let label = if label_text.is_empty() {
            None
        } else {
            Some(label_text.parse::<Label>().map_err(|e| at(e.to_string()))?)
        };
        let features = FeatureVector::new(&rec[0], mfcc, level, include_rms)
            .map_err(|e| at(e.to_string()))?;
        rows.push(LabeledFeatures { features, label });
    }
    Ok(rows)
}
