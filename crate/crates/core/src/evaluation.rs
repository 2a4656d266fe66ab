//! Error metrics of estimated shape maps against ground truth.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::grids::Image2D;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Rounds to 6 significant digits.
pub fn sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

fn ser_sig6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig6(*v))
}

fn ser_opt_sig6<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&sig6(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionStats {
    pub label: i64,
    pub count: usize,
    #[serde(serialize_with = "ser_sig6")]
    pub mad: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub mean_est: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub mean_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    #[serde(serialize_with = "ser_sig6")]
    pub mad: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub rmse: f64,
    pub per_region: Vec<RegionStats>,
    /// (mean of higher label − mean of lower label) / pooled sd of the estimate;
    /// only for two-label maps.
    #[serde(serialize_with = "ser_opt_sig6")]
    pub contrast: Option<f64>,
    pub defect_count: Option<usize>,
    #[serde(serialize_with = "ser_opt_sig6")]
    pub runtime_ms: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check(a: &Image2D, b: &Image2D) -> Result<(), EvalError> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(EvalError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ))
    }
}

pub fn evaluate(
    est: &Image2D,
    truth: &Image2D,
    labels: Option<&Image2D>,
) -> Result<EvalReport, EvalError> {
    check(est, truth)?;
    if let Some(l) = labels {
        check(est, l)?;
    }
    let n = est.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (e, t) in est.data().iter().zip(truth.data()) {
        abs += (e - t).abs();
        sq += (e - t) * (e - t);
    }

    let mut per_region = Vec::new();
    let mut contrast = None;
    if let Some(labels) = labels {
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.data().iter().enumerate() {
            groups.entry(l.round() as i64).or_default().push(i);
        }
        for (&label, idx) in &groups {
            let k = idx.len() as f64;
            let e = est.data();
            let t = truth.data();
            per_region.push(RegionStats {
                label,
                count: idx.len(),
                mad: idx.iter().map(|&i| (e[i] - t[i]).abs()).sum::<f64>() / k,
                mean_est: idx.iter().map(|&i| e[i]).sum::<f64>() / k,
                mean_truth: idx.iter().map(|&i| t[i]).sum::<f64>() / k,
            });
        }
        if groups.len() == 2 {
            let mut it = groups.values();
            let (bg, tumor) = (
                it.next().expect("two groups"),
                it.next().expect("two groups"),
            );
            contrast = effect_size(est.data(), tumor, bg);
        }
    }
    Ok(EvalReport {
        mad: abs / n,
        rmse: (sq / n).sqrt(),
        per_region,
        contrast,
        defect_count: None,
        runtime_ms: None,
    })
}

fn mean_var(values: &[f64], idx: &[usize]) -> (f64, f64) {
    let k = idx.len() as f64;
    let mean = idx.iter().map(|&i| values[i]).sum::<f64>() / k;
    let var = if idx.len() > 1 {
        idx.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Cohen-style effect size with pooled sd; `None` when the pooled sd is zero.
fn effect_size(values: &[f64], tumor: &[usize], background: &[usize]) -> Option<f64> {
    let (m1, v1) = mean_var(values, tumor);
    let (m2, v2) = mean_var(values, background);
    let (n1, n2) = (tumor.len() as f64, background.len() as f64);
    if n1 + n2 <= 2.0 {
        return None;
    }
    let pooled = (((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0)).sqrt();
    (pooled > 0.0).then(|| (m1 - m2) / pooled)
}
