//! Finite Gaussian mixture marginals for per-segment travel-time
//! distributions: EM fitting, density/CDF evaluation, quantile inversion,
//! and seeded sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};
use crate::numeric;

const SIGMA_FLOOR: f64 = 1e-3;
const WEIGHT_FLOOR: f64 = 1e-12;
const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Parameters of a k-component univariate Gaussian mixture.
///
/// Components are kept sorted ascending by mean so that fitted models have a
/// canonical representation regardless of EM label switching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GmmParamsRaw")]
pub struct GmmParams {
    k: usize,
    means: Vec<f64>,
    sigmas: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct GmmParamsRaw {
    k: usize,
    means: Vec<f64>,
    sigmas: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<GmmParamsRaw> for GmmParams {
    type Error = Error;

    fn try_from(raw: GmmParamsRaw) -> Result<Self> {
        let params = GmmParams::new(raw.means, raw.sigmas, raw.weights)?;
        if params.k != raw.k {
            return Err(Error::InvalidParameter(format!(
                "k={} does not match {} components",
                raw.k, params.k
            )));
        }
        Ok(params)
    }
}

impl GmmParams {
    /// Build a mixture, validating invariants and sorting components by mean.
    pub fn new(means: Vec<f64>, sigmas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        if sigmas.len() != k || weights.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: sigmas.len().min(weights.len()),
            });
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean".into()));
        }
        if sigmas.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidParameter(
                "sigmas must be positive and finite".into(),
            ));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w) || *w == 0.0) {
            return Err(Error::InvalidParameter(
                "weights must lie in (0, 1]".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| means[a].partial_cmp(&means[b]).unwrap());
        Ok(GmmParams {
            k,
            means: order.iter().map(|&i| means[i]).collect(),
            sigmas: order.iter().map(|&i| sigmas[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        })
    }

    /// Like [`GmmParams::new`] but rescales the weights to sum to one first.
    /// Convenient for rounded literature values such as (0.52, 0.38, 0.09).
    pub fn with_normalized_weights(
        means: Vec<f64>,
        sigmas: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidParameter(
                "weights must have a positive finite sum".into(),
            ));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        GmmParams::new(means, sigmas, weights)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mixture mean: sum of weight times component mean.
    pub fn mean(&self) -> f64 {
        (0..self.k).map(|j| self.weights[j] * self.means[j]).sum()
    }

    /// Mixture variance from component moments.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (0..self.k)
            .map(|j| self.weights[j] * (self.sigmas[j].powi(2) + self.means[j].powi(2)))
            .sum::<f64>()
            - m * m
    }

    /// Mixture density at x.
    pub fn pdf(&self, x: f64) -> f64 {
        (0..self.k)
            .map(|j| {
                let z = (x - self.means[j]) / self.sigmas[j];
                self.weights[j] * (-0.5 * z * z).exp()
                    / (self.sigmas[j] * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = (0..self.k)
            .map(|j| {
                let z = (x - self.means[j]) / self.sigmas[j];
                self.weights[j].ln() - 0.5 * z * z - self.sigmas[j].ln() - LN_SQRT_2PI
            })
            .collect();
        numeric::log_sum_exp(&terms)
    }

    /// Mixture CDF at x: weighted sum of component normal CDFs.
    pub fn cdf(&self, x: f64) -> f64 {
        (0..self.k)
            .map(|j| {
                let z = (x - self.means[j]) / self.sigmas[j];
                self.weights[j] * 0.5 * erf::erfc(-z / SQRT_2)
            })
            .sum()
    }

    /// Quantile by bracketed bisection on the CDF. The bracket spans
    /// [min mean - 12 max sigma, max mean + 12 max sigma].
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0,1), got {p}"
            )));
        }
        let sigma_max = self.sigmas.iter().cloned().fold(0.0, f64::max);
        let mut lo = self.means[0] - 12.0 * sigma_max;
        let mut hi = self.means[self.k - 1] + 12.0 * sigma_max;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = self.cdf(mid);
            if (c - p).abs() < 1e-10 {
                return Ok(mid);
            }
            if c < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Draw n values; component selection follows the mixture weights.
    /// Identical seeds produce identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.k);
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cum.push(acc);
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let j = cum.partition_point(|c| *c < u).min(self.k - 1);
                let z: f64 = rng.sample(StandardNormal);
                self.means[j] + self.sigmas[j] * z
            })
            .collect()
    }
}

/// EM fit output: parameters plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub params: GmmParams,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration log-likelihood of the winning restart.
    pub ll_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GmmFitOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for GmmFitOptions {
    fn default() -> Self {
        GmmFitOptions {
            restarts: 5,
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

/// Fit a k-component Gaussian mixture by EM with k-means++-style seeding.
/// The best of `restarts` runs (by final log-likelihood) is returned.
pub fn fit_gmm(samples: &[f64], k: usize, seed: u64) -> Result<GmmFit> {
    fit_gmm_with(samples, k, seed, &GmmFitOptions::default())
}

pub fn fit_gmm_with(
    samples: &[f64],
    k: usize,
    seed: u64,
    options: &GmmFitOptions,
) -> Result<GmmFit> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if samples.len() < 10 * k {
        return Err(Error::InsufficientData {
            needed: 10 * k,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let first = samples[0];
    if samples.iter().all(|x| (*x - first).abs() < 1e-12) {
        return Err(Error::DegenerateInput(
            "all samples are identical; mixture variance is undefined".into(),
        ));
    }

    let mut best: Option<GmmFit> = None;
    for restart in 0..options.restarts.max(1) {
        let restart_seed = seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let fit = em_single(samples, k, restart_seed, options);
        let replace = match &best {
            None => true,
            Some(b) => fit.log_likelihood > b.log_likelihood,
        };
        if replace {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

fn em_single(samples: &[f64], k: usize, seed: u64, options: &GmmFitOptions) -> GmmFit {
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut means = kmeanspp_centers(samples, k, &mut rng);
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let global_sd = numeric::variance(samples).sqrt().max(SIGMA_FLOOR);
    let mut sigmas = vec![global_sd; k];
    let mut weights = vec![1.0 / k as f64; k];

    let mut resp = vec![0.0; n * k];
    let mut ll_trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..options.max_iterations {
        // E step: responsibilities and the log-likelihood of current params.
        let mut ll = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            for j in 0..k {
                let z = (x - means[j]) / sigmas[j];
                row[j] = weights[j].ln() - 0.5 * z * z - sigmas[j].ln() - LN_SQRT_2PI;
            }
            let norm = numeric::log_sum_exp(row);
            ll += norm;
            for r in row.iter_mut() {
                *r = (*r - norm).exp();
            }
        }
        ll_trace.push(ll);
        iterations = iter + 1;

        if iter > 0 && ll - prev_ll < options.tolerance {
            converged = true;
            break;
        }
        prev_ll = ll;

        // M step.
        for j in 0..k {
            let nj: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            let nj = nj.max(WEIGHT_FLOOR);
            let mu = (0..n).map(|i| resp[i * k + j] * samples[i]).sum::<f64>() / nj;
            let var = (0..n)
                .map(|i| resp[i * k + j] * (samples[i] - mu).powi(2))
                .sum::<f64>()
                / nj;
            means[j] = mu;
            sigmas[j] = var.sqrt().max(SIGMA_FLOOR);
            weights[j] = (nj / n as f64).max(WEIGHT_FLOOR);
        }
        let wsum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= wsum;
        }
    }

    let log_likelihood = *ll_trace.last().unwrap();
    let params = GmmParams::new(means, sigmas, weights)
        .expect("EM output satisfies mixture invariants");
    GmmFit {
        params,
        log_likelihood,
        iterations,
        converged,
        ll_trace,
    }
}

/// k-means++ seeding on 1-D samples: first center uniform, later centers
/// drawn with probability proportional to squared distance from the chosen.
fn kmeanspp_centers<R: Rng>(samples: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let n = samples.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(samples[rng.gen_range(0..n)]);
    let mut dist2: Vec<f64> = samples
        .iter()
        .map(|x| (x - centers[0]).powi(2))
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            // Remaining mass collapsed onto existing centers; spread uniformly.
            samples[rng.gen_range(0..n)]
        } else {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = samples[n - 1];
            for (i, &d) in dist2.iter().enumerate() {
                acc += d;
                if acc >= target {
                    pick = samples[i];
                    break;
                }
            }
            pick
        };
        centers.push(next);
        for (i, &x) in samples.iter().enumerate() {
            dist2[i] = dist2[i].min((x - next).powi(2));
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::standard_normal_cdf_quadrature;

    fn segment2_params() -> GmmParams {
        GmmParams::with_normalized_weights(
            vec![5.41, 8.86, 16.31],
            vec![1.44, 2.68, 5.58],
            vec![0.52, 0.38, 0.09],
        )
        .unwrap()
    }

    #[test]
    fn params_are_mean_sorted_and_validated() {
        let p = GmmParams::new(vec![3.0, 1.0], vec![0.5, 0.2], vec![0.4, 0.6]).unwrap();
        assert_eq!(p.means(), &[1.0, 3.0]);
        assert_eq!(p.sigmas(), &[0.2, 0.5]);
        assert_eq!(p.weights(), &[0.6, 0.4]);

        assert!(GmmParams::new(vec![0.0], vec![-1.0], vec![1.0]).is_err());
        assert!(GmmParams::new(vec![0.0], vec![1.0], vec![0.9]).is_err());
    }

    #[test]
    fn pdf_standard_normal_peak() {
        let p = GmmParams::new(vec![0.0], vec![1.0], vec![1.0]).unwrap();
        assert!((p.pdf(0.0) - 0.398942).abs() < 1e-6);
    }

    #[test]
    fn pdf_symmetric_two_component_value_at_center() {
        let a = 1.3;
        let p = GmmParams::new(vec![-a, a], vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let phi_a = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((p.pdf(0.0) - phi_a).abs() < 1e-12);
    }

    #[test]
    fn pdf_matches_term_by_term_oracle() {
        // Independent summation of the mixture density, written out directly.
        let p = segment2_params();
        let x = 5.41;
        let mut expected = 0.0;
        for j in 0..3 {
            let (m, s, w) = (p.means()[j], p.sigmas()[j], p.weights()[j]);
            expected += w / (s * (2.0 * std::f64::consts::PI).sqrt())
                * (-((x - m) * (x - m)) / (2.0 * s * s)).exp();
        }
        assert!((p.pdf(x) - expected).abs() < 1e-9);
    }

    #[test]
    fn cdf_standard_normal_center_and_limits() {
        let p = GmmParams::new(vec![0.0], vec![1.0], vec![1.0]).unwrap();
        assert!((p.cdf(0.0) - 0.5).abs() < 1e-12);
        assert!(p.cdf(-1e10) < 1e-15);
        assert!((p.cdf(1e10) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        // Weighted normal CDFs computed by adaptive Simpson on the normal
        // density, independent of the erf-based implementation.
        let p = segment2_params();
        let x = 8.86;
        let mut expected = 0.0;
        for j in 0..3 {
            let z = (x - p.means()[j]) / p.sigmas()[j];
            expected += p.weights()[j] * standard_normal_cdf_quadrature(z);
        }
        assert!(
            (p.cdf(x) - expected).abs() < 1e-9,
            "cdf={} oracle={}",
            p.cdf(x),
            expected
        );
    }

    #[test]
    fn quantile_standard_normal_median() {
        let p = GmmParams::new(vec![0.0], vec![1.0], vec![1.0]).unwrap();
        assert!(p.quantile(0.5).unwrap().abs() < 1e-9);
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        let p = segment2_params();
        for q in [0.01, 0.5, 0.99] {
            let x = p.quantile(q).unwrap();
            assert!((p.cdf(x) - q).abs() < 1e-8, "roundtrip at {q}");
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        let p = segment2_params();
        assert!(p.quantile(0.0).is_err());
        assert!(p.quantile(1.0).is_err());
        assert!(p.quantile(-0.2).is_err());
    }

    #[test]
    fn quantile_matches_monte_carlo_oracle() {
        let p = segment2_params();
        let mut draws = p.sample(10_000_000, 77);
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let idx = (0.9 * draws.len() as f64) as usize;
        let empirical = draws[idx];
        let q = p.quantile(0.9).unwrap();
        assert!(
            (q - empirical).abs() < 0.05,
            "q={q} empirical={empirical}"
        );
    }

    #[test]
    fn sampling_moments_single_component() {
        let p = GmmParams::new(vec![5.0], vec![2.0], vec![1.0]).unwrap();
        let draws = p.sample(1_000_000, 3);
        let m = numeric::mean(&draws);
        let s = numeric::variance(&draws).sqrt();
        assert!((m - 5.0).abs() < 0.01);
        assert!((s - 2.0).abs() < 0.01);
    }

    #[test]
    fn sampling_component_proportions_follow_weights() {
        // Well-separated means make the component of every draw unambiguous,
        // so the draw counts expose the selection frequencies directly.
        let p = GmmParams::with_normalized_weights(
            vec![0.0, 60.0, 120.0],
            vec![1.44, 2.68, 5.58],
            vec![0.52, 0.38, 0.09],
        )
        .unwrap();
        let draws = p.sample(1_000_000, 9);
        let mut counts = [0usize; 3];
        for x in &draws {
            let j = if *x < 30.0 {
                0
            } else if *x < 90.0 {
                1
            } else {
                2
            };
            counts[j] += 1;
        }
        let n = draws.len() as f64;
        for (j, &count) in counts.iter().enumerate() {
            let got = count as f64 / n;
            assert!(
                (got - p.weights()[j]).abs() < 0.002,
                "component {j}: got {got} expected {}",
                p.weights()[j]
            );
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = segment2_params();
        assert_eq!(p.sample(1000, 12345), p.sample(1000, 12345));
        assert_ne!(p.sample(1000, 12345), p.sample(1000, 54321));
    }

    #[test]
    fn fit_k1_matches_sample_moments_exactly() {
        let p = GmmParams::new(vec![4.0], vec![1.5], vec![1.0]).unwrap();
        let samples = p.sample(5000, 11);
        let fit = fit_gmm(&samples, 1, 1).unwrap();
        let mean = numeric::mean(&samples);
        let sd = numeric::variance(&samples).sqrt();
        assert!((fit.params.means()[0] - mean).abs() < 1e-9);
        assert!((fit.params.sigmas()[0] - sd).abs() < 1e-9);
        assert!((fit.params.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_three_component_mixture() {
        let truth = segment2_params();
        let samples = truth.sample(5000, 2024);
        let fit = fit_gmm(&samples, 3, 7).unwrap();
        for j in 0..3 {
            let rel = (fit.params.means()[j] - truth.means()[j]).abs() / truth.means()[j];
            assert!(rel < 0.10, "mean {j}: {} vs {}", fit.params.means()[j], truth.means()[j]);
            let dw = (fit.params.weights()[j] - truth.weights()[j]).abs();
            assert!(dw < 0.05, "weight {j}: {} vs {}", fit.params.weights()[j], truth.weights()[j]);
        }
    }

    #[test]
    fn fit_self_ks_below_threshold() {
        let truth = segment2_params();
        let samples = truth.sample(5000, 2024);
        let fit = fit_gmm(&samples, 3, 7).unwrap();
        let ks = crate::gof::ks_against_cdf(&samples, |x| fit.params.cdf(x)).unwrap();
        assert!(ks < 0.03, "self-fit KS {ks}");
    }

    #[test]
    fn fit_log_likelihood_is_monotone() {
        let truth = segment2_params();
        let samples = truth.sample(2000, 5);
        let fit = fit_gmm(&samples, 3, 13).unwrap();
        for w in fit.ll_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "LL decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fit_rejects_degenerate_and_short_input() {
        let constant = vec![3.3; 100];
        assert!(matches!(
            fit_gmm(&constant, 2, 1),
            Err(Error::DegenerateInput(_))
        ));
        let short = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            fit_gmm(&short, 1, 1),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn pdf_cdf_consistency_by_finite_differences() {
        let p = segment2_params();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-4;
        for _ in 0..100 {
            let x = rng.gen_range(0.0..30.0);
            let numeric_pdf = (p.cdf(x + h) - p.cdf(x - h)) / (2.0 * h);
            assert!(
                (numeric_pdf - p.pdf(x)).abs() < 1e-5,
                "at x={x}: fd={numeric_pdf} pdf={}",
                p.pdf(x)
            );
        }
    }

    #[test]
    fn pdf_normalizes_to_one() {
        let p = segment2_params();
        let sigma_max = p.sigmas().iter().cloned().fold(0.0, f64::max);
        let lo = p.means()[0] - 10.0 * sigma_max;
        let hi = p.means()[2] + 10.0 * sigma_max;
        // Trapezoidal integration over the effective support.
        let steps = 200_000;
        let dx = (hi - lo) / steps as f64;
        let mut integral = 0.5 * (p.pdf(lo) + p.pdf(hi));
        for i in 1..steps {
            integral += p.pdf(lo + i as f64 * dx);
        }
        integral *= dx;
        assert!((integral - 1.0).abs() < 1e-6, "integral {integral}");
    }

    #[test]
    fn serde_uses_fixed_field_names() {
        let p = segment2_params();
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["k"], 3);
        assert!(json["means"].is_array());
        assert!(json["sigmas"].is_array());
        assert!(json["weights"].is_array());
        let back: GmmParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn serde_rejects_invalid_payloads() {
        let bad = r#"{"k":2,"means":[1.0,2.0],"sigmas":[1.0,-0.5],"weights":[0.5,0.5]}"#;
        assert!(serde_json::from_str::<GmmParams>(bad).is_err());
        let bad_sum = r#"{"k":1,"means":[1.0],"sigmas":[1.0],"weights":[0.7]}"#;
        assert!(serde_json::from_str::<GmmParams>(bad_sum).is_err());
    }
}
