//! Special functions: complete elliptic integral of the second kind and the
//! dressing series `P(α)`.

use statrs::function::gamma::ln_gamma;

/// Carlson symmetric integral `R_F(x, y, z)`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    for _ in 0..100 {
        let mu = (x + y + z) / 3.0;
        let dx = 1.0 - x / mu;
        let dy = 1.0 - y / mu;
        let dz = 1.0 - z / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0)
                / mu.sqrt();
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = (x + lambda) / 4.0;
        y = (y + lambda) / 4.0;
        z = (z + lambda) / 4.0;
    }
    f64::NAN
}

/// Carlson symmetric integral `R_D(x, y, z)`.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> f64 {
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..100 {
        let mu = (x + y + 3.0 * z) / 5.0;
        let dx = 1.0 - x / mu;
        let dy = 1.0 - y / mu;
        let dz = 1.0 - z / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < 1e-4 {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let s = 1.0
                + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * dz * ee)
                + dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea));
            return 3.0 * sum + fac * s / (mu * mu.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac /= 4.0;
        x = (x + lambda) / 4.0;
        y = (y + lambda) / 4.0;
        z = (z + lambda) / 4.0;
    }
    f64::NAN
}

/// Complete elliptic integral of the second kind in the parameter
/// convention, `E(m) = ∫₀^{π/2} √(1 − m sin²θ) dθ`, for `m ≤ 1`.
pub fn elliptic_e(m: f64) -> f64 {
    assert!(m <= 1.0, "elliptic_e requires m <= 1, got {m}");
    if m == 1.0 {
        return 1.0;
    }
    elliptic_e_complement(m, 1.0 - m)
}

/// `E(m)` given both `m` and `y = 1 − m`, for callers that know the
/// complementary parameter more accurately than `1 − m` would give it.
pub fn elliptic_e_complement(m: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 1.0;
    }
    carlson_rf(0.0, y, 1.0) - m / 3.0 * carlson_rd(0.0, y, 1.0)
}

/// Terms summed before giving up on the `P(α)` series.
pub const P_MAX_TERMS: usize = 10_000;

/// `P(α) = Σ_{p≥1} (1/p) e^{−x} x^p / p!` with `x = 8α²`.
///
/// Terms are generated in log space from a window start a few standard
/// deviations below the Poisson peak, where the skipped head is far below
/// `tol` relative to the sum. Summation stops past the peak once a term
/// drops below `tol` times the running sum.
pub fn p_function(alpha: f64, tol: f64) -> f64 {
    let x = 8.0 * alpha * alpha;
    if x == 0.0 {
        return 0.0;
    }
    let start = (x - 15.0 * x.sqrt()).floor().max(1.0) as usize;
    let lnx = x.ln();
    let mut sum = 0.0;
    let mut p = start;
    let mut ln_term = -x + p as f64 * lnx - ln_gamma(p as f64 + 1.0);
    for _ in 0..P_MAX_TERMS {
        let term = ln_term.exp() / p as f64;
        sum += term;
        if p as f64 >= x && term < tol * sum {
            break;
        }
        p += 1;
        ln_term += lnx - (p as f64).ln();
    }
    sum
}
