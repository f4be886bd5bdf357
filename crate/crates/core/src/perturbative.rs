//! Closed-form energies of the ferromagnetic (F) and dressed-ferromagnetic
//! (DF) phases and the level crossing between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::special::p_function;

/// Relative tolerance of the `P(α)` series.
pub const P_TOL: f64 = 1e-12;
/// Coarse steps used to locate sign changes on `(0, J]`.
const CROSSING_SCAN: usize = 4000;

fn ferro(n: usize, delta: f64, g: f64, j: f64) -> f64 {
    let n = n as f64;
    -j * (n - 1.0) - g * g * ((n - 2.0) / (delta + 4.0 * j) + 2.0 / (delta + 2.0 * j))
}

fn dressed(n: usize, delta: f64, g: f64, j: f64) -> f64 {
    let alpha = g / delta;
    let n = n as f64;
    -n * g * g / delta
        - j * (n - 1.0) * (-4.0 * alpha * alpha).exp()
        - (n - 1.0) * j * j / delta * p_function(alpha, P_TOL)
}

/// Second-order energy of the ferromagnetic manifold,
/// `−J(N−1) − g²[(N−2)/(δ+4J) + 2/(δ+2J)]`.
pub fn energy_ferro(p: &ModelParams) -> f64 {
    if p.g > 0.1 * (p.delta + 4.0 * p.j_ising) {
        log::warn!(
            "energy_ferro: g = {} is not small against delta + 4J = {}",
            p.g,
            p.delta + 4.0 * p.j_ising
        );
    }
    ferro(p.n_sites, p.delta, p.g, p.j_ising)
}

/// Energy of the dressed-ferromagnetic states,
/// `−Ng²/δ − J(N−1)e^{−4α²} − (N−1)(J²/δ)P(α)` with `α = g/δ`.
pub fn energy_dressed_ferro(p: &ModelParams) -> Result<f64> {
    if p.delta == 0.0 {
        return Err(Error::DivisionByZero("dressed-ferromagnetic energy needs delta > 0"));
    }
    let j = p.j_ising;
    if p.delta < j && p.g * p.g < j * p.delta {
        log::warn!(
            "energy_dressed_ferro: neither delta >> J nor g^2 >> J delta (delta = {}, g = {})",
            p.delta,
            p.g
        );
    }
    Ok(dressed(p.n_sites, p.delta, p.g, j))
}

/// Coupling where the F and DF energies cross.
///
/// Returns `None` when `δ ≥ J`. Otherwise the uppermost sign change of
/// `E_F − E_DF` on `(0, J]` is bisected to `1e-10` relative accuracy. The
/// uppermost root is the physical one: at small `g` the DF expression is
/// outside its validity range and can produce a spurious lower root.
pub fn crossing_estimate(delta: f64, j_ising: f64, n_sites: usize) -> Result<Option<f64>> {
    if !(delta.is_finite() && j_ising.is_finite() && delta >= 0.0 && j_ising > 0.0) {
        return Err(Error::InvalidParams(format!("delta = {delta}, J = {j_ising}")));
    }
    if n_sites < 2 {
        return Err(Error::InvalidParams("crossing needs at least two sites".into()));
    }
    if delta >= j_ising {
        log::warn!("crossing_estimate: delta = {delta} >= J = {j_ising}, no crossing regime");
        return Ok(None);
    }
    if delta == 0.0 {
        return Err(Error::DivisionByZero("crossing estimate needs delta > 0"));
    }
    let f = |g: f64| ferro(n_sites, delta, g, j_ising) - dressed(n_sites, delta, g, j_ising);
    let step = j_ising / CROSSING_SCAN as f64;
    let mut hi = j_ising;
    let mut f_hi = f(hi);
    let mut bracket = None;
    for i in (1..CROSSING_SCAN).rev() {
        let lo = i as f64 * step;
        let f_lo = f(lo);
        if f_lo == 0.0 {
            return Ok(Some(lo));
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }
    let Some((mut lo, mut hi, mut f_lo)) = bracket else {
        return Err(Error::NoRootInBracket { lo: 0.0, hi: j_ising });
    };
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Output of the `pt` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeEnergies {
    pub e_ferro: f64,
    pub e_dressed: f64,
    pub alpha: f64,
    pub p_alpha: f64,
    pub crossing_g: Option<f64>,
}

pub fn perturbative_energies(p: &ModelParams) -> Result<PerturbativeEnergies> {
    let e_dressed = energy_dressed_ferro(p)?;
    let alpha = p.g / p.delta;
    let crossing_g = match crossing_estimate(p.delta, p.j_ising, p.n_sites) {
        Ok(g) => g,
        Err(Error::NoRootInBracket { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(PerturbativeEnergies {
        e_ferro: energy_ferro(p),
        e_dressed,
        alpha,
        p_alpha: p_function(alpha, P_TOL),
        crossing_g,
    })
}
