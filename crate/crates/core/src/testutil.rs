//! Test-only oracles, independent of the implementation paths they check.

/// Adaptive Simpson quadrature with interval-halving error control.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, right, tol / 2.0, depth - 1)
    }
    recurse(f, a, b, simpson(f, a, b), tol, depth)
}

/// Standard normal CDF by quadrature of the density, avoiding the erf-based
/// route used in the library.
pub fn standard_normal_cdf_quadrature(z: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if z < -14.0 {
        return 0.0;
    }
    if z > 14.0 {
        return 1.0;
    }
    // Integrate from the center outward for accuracy.
    0.5 + adaptive_simpson(&pdf, 0.0, z, 1e-12, 48)
}

/// Brute-force tie-corrected Kendall tau straight from the concordant /
/// discordant pair definition. Quadratic; test sizes only.
pub fn kendall_tau_bruteforce(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if dx * dy > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let joint = n0 - (concordant + discordant + ties_x + ties_y) as f64;
    let denom =
        ((n0 - ties_x as f64 - joint) * (n0 - ties_y as f64 - joint)).sqrt();
    (concordant - discordant) as f64 / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12, 40);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn normal_cdf_quadrature_known_values() {
        assert!((standard_normal_cdf_quadrature(0.0) - 0.5).abs() < 1e-12);
        // Phi(1.96) from standard tables.
        assert!((standard_normal_cdf_quadrature(1.96) - 0.975_002_104_85).abs() < 1e-9);
    }

    #[test]
    fn bruteforce_tau_on_tiny_examples() {
        assert_eq!(kendall_tau_bruteforce(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(kendall_tau_bruteforce(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    }
}
