//! Goodness-of-fit statistics between a model distribution and an empirical
//! reference: two-sample Kolmogorov-Smirnov and Cramer-von-Mises.
//!
//! Lower is better for both. The CvM statistic uses the squared-difference
//! form averaged over the reference observations, so values are comparable
//! across models evaluated against the same reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// KS and CvM of one model against one empirical reference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofReport {
    pub model: String,
    pub ks: f64,
    pub cvm: f64,
    pub n_reference: usize,
    pub n_model: usize,
}

impl GofReport {
    /// Build a report from raw sample sets: two-sample KS plus CvM of the
    /// reference against the model's empirical CDF.
    pub fn from_samples(model: impl Into<String>, reference: &[f64], model_samples: &[f64]) -> Result<Self> {
        let ks = ks_two_sample(reference, model_samples)?;
        let mut sorted_model = model_samples.to_vec();
        sorted_model.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |t: f64| sorted_model.partition_point(|x| *x <= t) as f64 / sorted_model.len() as f64;
        let cvm = cvm_statistic(reference, cdf)?;
        Ok(GofReport {
            model: model.into(),
            ks,
            cvm,
            n_reference: reference.len(),
            n_model: model_samples.len(),
        })
    }
}

/// Two-sample KS statistic: sup |F_ref - F_model| evaluated at every jump
/// point of both empirical CDFs.
pub fn ks_two_sample(reference: &[f64], model: &[f64]) -> Result<f64> {
    if reference.is_empty() || model.is_empty() {
        return Err(Error::EmptyResult("KS needs non-empty samples".into()));
    }
    if reference.iter().chain(model.iter()).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in KS input".into()));
    }
    let mut a = reference.to_vec();
    let mut b = model.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// One-sample KS statistic of an empirical sample against a CDF evaluator.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(reference: &[f64], cdf: F) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyResult("KS needs a non-empty sample".into()));
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((f - i as f64 / n).abs());
        sup = sup.max((f - (i as f64 + 1.0) / n).abs());
    }
    Ok(sup)
}

/// Cramer-von-Mises statistic: mean over the sorted reference observations
/// x_i of (F_ref(x_i) - F_model(x_i))^2 with F_ref(x_i) = (i - 0.5)/N.
pub fn cvm_statistic<F: Fn(f64) -> f64>(reference: &[f64], cdf: F) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyResult("CvM needs a non-empty sample".into()));
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut total = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f_ref = (i as f64 + 0.5) / n;
        let diff = f_ref - cdf(x);
        total += diff * diff;
    }
    Ok(total / n)
}
