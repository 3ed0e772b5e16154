//! Path travel-time distribution estimation: copula Monte-Carlo aggregation,
//! the independence convolution baseline, and the empirical reference.

use std::collections::BTreeMap;
use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::copulas::{CopulaModel, Family};
use crate::error::{Error, Result};
use crate::marginals::GmmParams;
use crate::trip_data::{SegmentSeries, TRAVEL_TIME_FLOOR};

/// Minimum Monte-Carlo draw count for model-based estimates.
pub const MIN_MODEL_SAMPLES: usize = 1000;

/// How a path estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Copula(Family),
    Convolution,
    Empirical,
}

impl std::fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimateMethod::Copula(family) => write!(f, "copula:{}", family.name()),
            EstimateMethod::Convolution => f.write_str("convolution"),
            EstimateMethod::Empirical => f.write_str("empirical"),
        }
    }
}

impl Serialize for EstimateMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A sampled path travel-time distribution with provenance.
#[derive(Debug, Clone)]
pub struct PathTtdEstimate {
    samples: Vec<f64>,
    sorted: Vec<f64>,
    method: EstimateMethod,
    model: Option<CopulaModel>,
    marginals: Option<Vec<GmmParams>>,
}

impl PathTtdEstimate {
    fn new(
        samples: Vec<f64>,
        method: EstimateMethod,
        model: Option<CopulaModel>,
        marginals: Option<Vec<GmmParams>>,
    ) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        PathTtdEstimate {
            samples,
            sorted,
            method,
            model,
            marginals,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn method(&self) -> EstimateMethod {
        self.method
    }

    pub fn model(&self) -> Option<&CopulaModel> {
        self.model.as_ref()
    }

    pub fn marginals(&self) -> Option<&[GmmParams]> {
        self.marginals.as_deref()
    }

    /// Right-continuous empirical CDF of the sample set.
    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        self.sorted.partition_point(|x| *x <= t) as f64 / self.sorted.len() as f64
    }

    /// Linear-interpolation sample quantile, p in (0,1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0,1), got {p}"
            )));
        }
        let n = self.sorted.len();
        if n == 1 {
            return Ok(self.sorted[0]);
        }
        let h = p * (n as f64 - 1.0);
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        let hi = (lo + 1).min(n - 1);
        Ok(self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo]))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / self.samples.len() as f64
    }

    /// Summary for JSON emission: method tag, moments, and the 0.05..0.95
    /// quantile ladder.
    pub fn summary(&self) -> PathSummary {
        let mut quantiles = BTreeMap::new();
        for i in 1..=19 {
            let p = i as f64 * 0.05;
            let q = self.quantile(p).expect("p in (0,1)");
            quantiles.insert(format!("{p:.2}"), q);
        }
        PathSummary {
            method: self.method,
            sample_count: self.sample_count(),
            mean: self.mean(),
            variance: self.variance(),
            quantiles,
        }
    }

    /// One sample per line under a `travel_time_s` header.
    pub fn write_samples_csv<W: io::Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "travel_time_s")?;
        for s in &self.samples {
            writeln!(writer, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSummary {
    pub method: EstimateMethod,
    pub sample_count: usize,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: BTreeMap<String, f64>,
}

/// Monte-Carlo path estimate under a fitted copula: draw m coupled uniform
/// vectors, map each component through its marginal quantile, and sum across
/// the path. Seed-deterministic.
pub fn estimate_copula_path(
    marginals: &[GmmParams],
    model: &CopulaModel,
    m: usize,
    seed: u64,
) -> Result<PathTtdEstimate> {
    if model.dim() != marginals.len() {
        return Err(Error::DimensionMismatch {
            expected: marginals.len(),
            got: model.dim(),
        });
    }
    if m < MIN_MODEL_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "model-based estimates need at least {MIN_MODEL_SAMPLES} draws, got {m}"
        )));
    }
    let u = model.sample(m, seed)?;
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let mut total = 0.0;
        for (j, marginal) in marginals.iter().enumerate() {
            // Same positivity floor as the synthesizer: mixture tails dip
            // below zero with tiny probability.
            total += marginal.quantile(u.get(i, j))?.max(TRAVEL_TIME_FLOOR);
        }
        samples.push(total);
    }
    Ok(PathTtdEstimate::new(
        samples,
        EstimateMethod::Copula(model.family()),
        Some(model.clone()),
        Some(marginals.to_vec()),
    ))
}

/// Independence baseline: sample each marginal independently and sum.
pub fn estimate_convolution_path(
    marginals: &[GmmParams],
    m: usize,
    seed: u64,
) -> Result<PathTtdEstimate> {
    if marginals.is_empty() {
        return Err(Error::InvalidParameter("no marginals given".into()));
    }
    if m < MIN_MODEL_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "model-based estimates need at least {MIN_MODEL_SAMPLES} draws, got {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; m];
    for marginal in marginals {
        for (total, draw) in samples.iter_mut().zip(marginal.sample_with(&mut rng, m)) {
            *total += draw.max(TRAVEL_TIME_FLOOR);
        }
    }
    Ok(PathTtdEstimate::new(
        samples,
        EstimateMethod::Convolution,
        None,
        Some(marginals.to_vec()),
    ))
}

/// Empirical reference: per-row sum across the path's segments.
pub fn empirical_path(series: &SegmentSeries) -> PathTtdEstimate {
    let samples: Vec<f64> = series.rows().iter().map(|r| r.iter().sum()).collect();
    PathTtdEstimate::new(samples, EstimateMethod::Empirical, None, None)
}
