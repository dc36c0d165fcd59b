use serde::{Deserialize, Serialize};

use super::error::{Result, SvaError};

/// Softmax weights of one cross-attention layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    /// One weight vector per query; keys are ordered encoder by encoder.
    pub weights: Vec<Vec<f64>>,
    /// Number of keys each encoder contributes per query (`m_k²`).
    pub segments: Vec<usize>,
}

/// Every attention record produced during a forward pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttentionLog {
    pub records: Vec<AttentionRecord>,
}

/// Mean (over all logged queries) of the softmax mass landing on each
/// encoder's keys.
pub fn attention_mass_by_encoder(log: &AttentionLog) -> Result<Vec<f64>> {
    let n = log
        .records
        .first()
        .map(|r| r.segments.len())
        .ok_or(SvaError::EmptyLog)?;
    let mut totals = vec![0.0; n];
    let mut queries = 0usize;
    for record in &log.records {
        if record.segments.len() != n {
            return Err(SvaError::Config(
                "attention records disagree on encoder count".into(),
            ));
        }
        for w in &record.weights {
            let mut start = 0;
            for (t, &len) in totals.iter_mut().zip(&record.segments) {
                *t += w[start..start + len].iter().sum::<f64>();
                start += len;
            }
            queries += 1;
        }
    }
    if queries == 0 {
        return Err(SvaError::EmptyLog);
    }
    Ok(totals.into_iter().map(|t| t / queries as f64).collect())
}

/// Renders fractions as a two-column percentage table.
pub fn format_attention_report(column: &str, encoders: &[String], fractions: &[f64]) -> String {
    let width = encoders
        .iter()
        .map(String::len)
        .chain(std::iter::once("Model".len()))
        .max()
        .unwrap_or(5);
    let mut out = format!("{:<width$}  {column}\n", "Model");
    for (name, f) in encoders.iter().zip(fractions) {
        out.push_str(&format!("{name:<width$}  {:.1}%\n", f * 100.0));
    }
    out
}
