//! Rank-based dependence measurement: tie-corrected Kendall tau,
//! pseudo-observation construction, and closed-form tau-to-parameter maps.

use serde::{Deserialize, Serialize};

use crate::copulas::Family;
use crate::error::{Error, Result};
use crate::marginals::GmmParams;
use crate::matrix::Matrix;
use crate::trip_data::SegmentSeries;

/// Tie-corrected Kendall tau-b via Knight's O(N log N) algorithm.
///
/// Result is identical to the concordant/discordant pair definition
/// `(P - Q) / sqrt((n0 - t_x)(n0 - t_y))` with tie counts t_x, t_y.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if x.iter().chain(y.iter()).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in tau input".into()));
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });

    // Pairs tied in x, and tied in both, from the (x, y)-sorted order.
    let mut xtie = 0u64;
    let mut ntie = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let g = (j - i) as u64;
        xtie += g * (g - 1) / 2;
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && y[idx[b]] == y[idx[a]] {
                b += 1;
            }
            let h = (b - a) as u64;
            ntie += h * (h - 1) / 2;
            a = b;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let dis = merge_count_inversions(&mut ys, &mut buf);

    let mut sorted_y: Vec<f64> = y.to_vec();
    sorted_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ytie = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted_y[j] == sorted_y[i] {
            j += 1;
        }
        let g = (j - i) as u64;
        ytie += g * (g - 1) / 2;
        i = j;
    }

    let tot = (n as u64) * (n as u64 - 1) / 2;
    if xtie == tot || ytie == tot {
        return Err(Error::DegenerateInput(
            "constant input vector: tau is undefined".into(),
        ));
    }
    let con_minus_dis = tot as i64 - xtie as i64 - ytie as i64 + ntie as i64 - 2 * dis as i64;
    let denom = ((tot - xtie) as f64 * (tot - ytie) as f64).sqrt();
    Ok(con_minus_dis as f64 / denom)
}

/// Count strict inversions while merge-sorting in place.
fn merge_count_inversions(xs: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = xs.split_at_mut(mid);
    let mut count = merge_count_inversions(left, buf) + merge_count_inversions(right, buf);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            j += 1;
            count += (left.len() - i) as u64;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    xs.copy_from_slice(&buf[..n]);
    count
}

/// How pseudo-observations were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoSource {
    EmpiricalRank,
    ParametricMarginal,
}

/// N x S matrix of unit-cube observations used for copula fitting.
#[derive(Debug, Clone)]
pub struct PseudoObservations {
    data: Matrix,
    source: PseudoSource,
}

impl PseudoObservations {
    /// Empirical-rank mode: entry = rank / (N + 1), average ranks for ties.
    pub fn from_ranks(series: &SegmentSeries) -> Self {
        let n = series.n();
        let s = series.s();
        let mut out = Matrix::zeros(n, s);
        for j in 0..s {
            let col = series.column(j);
            for (i, r) in average_ranks(&col).into_iter().enumerate() {
                out.set(i, j, r / (n as f64 + 1.0));
            }
        }
        PseudoObservations {
            data: out,
            source: PseudoSource::EmpiricalRank,
        }
    }

    /// Parametric mode: entry = fitted marginal CDF, clamped to
    /// [1/(2N), 1 - 1/(2N)] so fitted likelihoods stay finite.
    pub fn from_marginals(series: &SegmentSeries, marginals: &[GmmParams]) -> Result<Self> {
        let n = series.n();
        let s = series.s();
        if marginals.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: marginals.len(),
            });
        }
        let lo = 1.0 / (2.0 * n as f64);
        let hi = 1.0 - lo;
        let mut out = Matrix::zeros(n, s);
        for (j, marginal) in marginals.iter().enumerate() {
            for i in 0..n {
                let u = marginal.cdf(series.rows()[i][j]).clamp(lo, hi);
                out.set(i, j, u);
            }
        }
        Ok(PseudoObservations {
            data: out,
            source: PseudoSource::ParametricMarginal,
        })
    }

    /// Wrap an existing unit-cube matrix (e.g. copula samples).
    pub fn from_matrix(data: Matrix, source: PseudoSource) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: data.nrows(),
            });
        }
        if data.values().iter().any(|v| !(0.0 < *v && *v < 1.0)) {
            return Err(Error::InvalidParameter(
                "pseudo-observations must lie strictly inside (0,1)".into(),
            ));
        }
        Ok(PseudoObservations { data, source })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn source(&self) -> PseudoSource {
        self.source
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j)
    }

    /// Mean Kendall tau over all column pairs; the natural scalar summary
    /// for an exchangeable dependence structure.
    pub fn mean_pairwise_tau(&self) -> Result<f64> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::InvalidParameter(
                "need at least two columns for pairwise tau".into(),
            ));
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for a in 0..d {
            let ca = self.column(a);
            for b in (a + 1)..d {
                total += kendall_tau(&ca, &self.column(b))?;
                count += 1;
            }
        }
        Ok(total / count as f64)
    }
}

/// 1-based average ranks with ties sharing their group mean.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &id in &idx[i..j] {
            ranks[id] = avg;
        }
        i = j;
    }
    ranks
}

/// Adjacent-pair Kendall taus in the series' segment order, for the
/// dependence report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairTau {
    pub pair: [u32; 2],
    pub tau: f64,
}

pub fn adjacent_taus(series: &SegmentSeries) -> Result<Vec<PairTau>> {
    let ids = series.segment_ids();
    let mut out = Vec::with_capacity(ids.len().saturating_sub(1));
    for j in 0..ids.len().saturating_sub(1) {
        let tau = kendall_tau(&series.column(j), &series.column(j + 1))?;
        out.push(PairTau {
            pair: [ids[j], ids[j + 1]],
            tau,
        });
    }
    Ok(out)
}

/// Closed-form Kendall-tau inversion for each copula family:
/// Clayton alpha = 2 tau / (1 - tau), Gumbel alpha = 1 / (1 - tau),
/// elliptical rho = sin(pi tau / 2).
pub fn tau_to_param(family: Family, tau: f64) -> Result<f64> {
    if !tau.is_finite() {
        return Err(Error::InvalidParameter("tau must be finite".into()));
    }
    match family {
        Family::Clayton => {
            if tau <= 0.0 || tau >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "Clayton requires tau in (0,1), got {tau}"
                )));
            }
            Ok(2.0 * tau / (1.0 - tau))
        }
        Family::Gumbel => {
            if !(0.0..1.0).contains(&tau) {
                return Err(Error::InvalidParameter(format!(
                    "Gumbel requires tau in [0,1), got {tau}"
                )));
            }
            Ok(1.0 / (1.0 - tau))
        }
        Family::Gaussian | Family::StudentT => {
            if tau <= -1.0 || tau >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "elliptical families require tau in (-1,1), got {tau}"
                )));
            }
            Ok((std::f64::consts::PI * tau / 2.0).sin())
        }
        Family::Independence => Err(Error::InvalidParameter(
            "independence copula has no parameter".into(),
        )),
    }
}
