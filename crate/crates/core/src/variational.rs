//! Mean-field solvers: Born-Oppenheimer (classical boson displacement, slow
//! bosons) and Silbey-Harris (partial polaron dressing, fast bosons).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::special::elliptic_e_complement;

/// Coarse grid points of the Born-Oppenheimer scan.
pub const BO_SCAN_POINTS: usize = 2000;
/// Coarse grid points of the Silbey-Harris scan.
pub const SH_SCAN_POINTS: usize = 10_000;
/// Upper end of the Silbey-Harris search interval.
pub const SH_ETA_MAX: f64 = 1.2;
const GOLDEN_TOL: f64 = 1e-12;

/// Ground energy per site of the infinite transverse-field Ising chain
/// `−J Σ σᶻσᶻ − h Σ σˣ`.
pub fn tfim_energy_per_site(h: f64, j_ising: f64) -> f64 {
    if h == 0.0 {
        return -j_ising;
    }
    let lambda = j_ising / h;
    let m = 4.0 * lambda / ((1.0 + lambda) * (1.0 + lambda));
    // 1 − m written without cancellation near λ = 1
    let y = ((1.0 - lambda) / (1.0 + lambda)).powi(2);
    -h * (2.0 / PI) * (1.0 + lambda) * elliptic_e_complement(m, y)
}

/// `E_BO/N = δα² + E_TFIM(h = 2αg)`.
pub fn bo_energy_per_site(alpha: f64, p: &ModelParams) -> f64 {
    p.delta * alpha * alpha + tfim_energy_per_site(2.0 * alpha.abs() * p.g, p.j_ising)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoResult {
    pub alpha0: f64,
    pub energy_per_site: f64,
    pub n: f64,
    /// `√(δJ)`, where the curvature at `α = 0` changes sign.
    pub critical_g: f64,
}

/// Minimizes `f` on `[a, b]` by golden-section search.
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Global minimum of `f` on `[lo, hi]`: dense scan, then golden section
/// around the best grid point. Endpoints are returned exactly when they win.
fn scan_minimize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let step = (hi - lo) / points as f64;
    let (best, fbest) = (0..=points)
        .map(|i| {
            let x = lo + i as f64 * step;
            (i, f(x))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = lo + (best + 1).min(points) as f64 * step;
    let (x, fx) = golden(&f, a, b);
    let mut out = (lo + best as f64 * step, fbest);
    if fx < out.1 {
        out = (x, fx);
    }
    for edge in [lo, hi] {
        let fe = f(edge);
        if fe <= out.1 {
            out = (edge, fe);
        }
    }
    out
}

/// Global minimum of the Born-Oppenheimer energy over `α ∈ [0, 4g/δ + 1]`.
pub fn minimize_bo(p: &ModelParams) -> Result<BoResult> {
    if p.delta == 0.0 {
        return Err(Error::DivisionByZero("Born-Oppenheimer energy is unbounded at delta = 0"));
    }
    let hi = 4.0 * p.g / p.delta + 1.0;
    let (alpha0, energy) = scan_minimize(|a| bo_energy_per_site(a, p), 0.0, hi, BO_SCAN_POINTS);
    Ok(BoResult {
        alpha0,
        energy_per_site: energy,
        n: alpha0 * alpha0,
        critical_g: (p.delta * p.j_ising).sqrt(),
    })
}

/// `E_SH(η) = N(g²/δ)(η² − 2η) − J(N−1) e^{−4η²(g/δ)²}`.
pub fn sh_energy(eta: f64, p: &ModelParams) -> Result<f64> {
    if p.delta == 0.0 {
        return Err(Error::DivisionByZero("Silbey-Harris energy needs delta > 0"));
    }
    Ok(sh_unchecked(eta, p))
}

fn sh_unchecked(eta: f64, p: &ModelParams) -> f64 {
    let n = p.n_sites as f64;
    let alpha = p.g / p.delta;
    n * p.g * p.g / p.delta * (eta * eta - 2.0 * eta)
        - p.j_ising * (n - 1.0) * (-4.0 * eta * eta * alpha * alpha).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShResult {
    pub eta0: f64,
    pub energy: f64,
    pub n: f64,
}

/// Global minimum of the Silbey-Harris energy over `η ∈ [0, 1.2]`.
pub fn minimize_sh(p: &ModelParams) -> Result<ShResult> {
    if p.delta == 0.0 {
        return Err(Error::DivisionByZero("Silbey-Harris energy needs delta > 0"));
    }
    let (eta0, energy) = scan_minimize(|e| sh_unchecked(e, p), 0.0, SH_ETA_MAX, SH_SCAN_POINTS);
    let n = (eta0 * p.g / p.delta).powi(2);
    Ok(ShResult { eta0, energy, n })
}
