//! Built-in synthetic scenarios.
//!
//! `leopoldstrasse` is a ten-segment urban arterial with three-component
//! mixture marginals per segment and strong positive dependence between
//! neighbouring segments. The coupling is an exchangeable Clayton copula
//! whose parameter comes from inverting the mean adjacent-pair Kendall tau.

use crate::copulas::CopulaModel;
use crate::marginals::GmmParams;
use crate::trip_data::SynthSpec;

/// (means, sigmas, weights) per segment, in path order. Weights are rescaled
/// at construction since the rounded triples do not sum to one exactly.
const SEGMENT_GMMS: [([f64; 3], [f64; 3], [f64; 3]); 10] = [
    ([16.08, 31.41, 62.92], [5.25, 9.79, 12.65], [0.31, 0.34, 0.34]),
    ([5.41, 8.86, 16.31], [1.44, 2.68, 5.58], [0.52, 0.38, 0.09]),
    ([8.92, 14.55, 29.37], [2.03, 4.06, 9.55], [0.43, 0.34, 0.22]),
    ([3.11, 5.72, 10.33], [0.72, 1.69, 3.26], [0.43, 0.38, 0.17]),
    ([9.46, 17.58, 36.01], [2.18, 5.26, 10.38], [0.33, 0.38, 0.28]),
    ([6.43, 12.26, 29.55], [1.53, 3.94, 5.36], [0.46, 0.35, 0.17]),
    ([8.24, 13.30, 27.82], [1.68, 3.75, 10.94], [0.54, 0.37, 0.07]),
    ([2.76, 3.97, 7.09], [0.48, 0.91, 2.69], [0.48, 0.38, 0.12]),
    ([3.59, 5.42, 10.17], [0.64, 1.34, 3.94], [0.52, 0.35, 0.11]),
    ([6.67, 11.29, 22.46], [1.32, 3.22, 8.64], [0.52, 0.35, 0.11]),
];

/// Kendall tau for each adjacent segment pair of the scenario.
#[allow(clippy::approx_constant)] // data constants, not pi approximations
pub const LEOPOLDSTRASSE_ADJACENT_TAUS: [(u32, u32, f64); 9] = [
    (1, 2, 0.318),
    (2, 3, 0.604),
    (3, 4, 0.698),
    (4, 5, 0.602),
    (5, 6, 0.417),
    (6, 7, 0.490),
    (7, 8, 0.639),
    (8, 9, 0.835),
    (9, 10, 0.748),
];

/// Trip count recorded for the scenario's through movement; the default
/// synthetic dataset size.
pub const LEOPOLDSTRASSE_DEFAULT_TRIPS: usize = 4495;

/// Mean adjacent-pair tau; parameterizes the exchangeable coupling.
pub fn leopoldstrasse_mean_tau() -> f64 {
    let total: f64 = LEOPOLDSTRASSE_ADJACENT_TAUS.iter().map(|t| t.2).sum();
    total / LEOPOLDSTRASSE_ADJACENT_TAUS.len() as f64
}

/// Per-segment mixture marginals of the scenario, in path order.
pub fn leopoldstrasse_marginals() -> Vec<GmmParams> {
    SEGMENT_GMMS
        .iter()
        .map(|(means, sigmas, weights)| {
            GmmParams::with_normalized_weights(means.to_vec(), sigmas.to_vec(), weights.to_vec())
                .expect("scenario constants are valid")
        })
        .collect()
}

/// The complete ten-segment synthetic scenario.
pub fn leopoldstrasse(n_trips: usize, seed: u64) -> SynthSpec {
    let tau = leopoldstrasse_mean_tau();
    let alpha = 2.0 * tau / (1.0 - tau);
    SynthSpec {
        marginals: leopoldstrasse_marginals(),
        coupling: CopulaModel::clayton(10, alpha).expect("valid alpha"),
        n_trips,
        seed,
        gps_artifact: 0.0,
    }
}

/// Look up a built-in scenario by name.
pub fn builtin(name: &str, n_trips: usize, seed: u64) -> Option<SynthSpec> {
    match name {
        "leopoldstrasse" => Some(leopoldstrasse(n_trips, seed)),
        _ => None,
    }
}
