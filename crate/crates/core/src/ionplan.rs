//! Trapped-ion microtrap planner: phonon hoppings, axial normal modes,
//! Lamb-Dicke parameters, the effective Ising exchange and the feasibility
//! checks for a chain with one ion per trap.
//!
//! All frequencies are angular (rad/s); a value of `2π·f` is written as `f (2π) Hz`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementary charge (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Speed of light (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permeability with its classical exact value `4π·10⁻⁷` (N/A²).
pub const MU_0: f64 = 4.0 * PI * 1e-7;
/// Reduced Planck constant (J·s), exact.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass constant (kg).
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;

/// Mass (kg) of a singly charged ion given its label.
pub fn species_mass(label: &str) -> Result<f64> {
    let neutral = match label {
        "9Be+" | "Be9+" => 9.012_183_1,
        "24Mg+" | "Mg24+" => 23.985_041_7,
        "40Ca+" | "Ca40+" => 39.962_590_9,
        "43Ca+" | "Ca43+" => 42.958_766_4,
        "88Sr+" | "Sr88+" => 87.905_612_3,
        "171Yb+" | "Yb171+" => 170.936_331_5,
        other => return Err(Error::InvalidIonSpec(format!("unknown species {other:?}"))),
    };
    Ok((neutral - ELECTRON_MASS_U) * ATOMIC_MASS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    /// Prefactor `c_α` of the dipolar hopping.
    pub fn coefficient(self) -> f64 {
        match self {
            Axis::X => 1.0,
            Axis::Z => -2.0,
        }
    }
}

/// Unit system used for the Coulomb prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoulombUnits {
    /// `e²/(4πε₀)` with lengths in m and masses in kg.
    Si,
    /// `e²` in statC² with lengths in cm and masses in g.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonChainSpec {
    pub n_ions: usize,
    /// Trap spacing `d₀` (m).
    pub spacing_d0: f64,
    /// Ion mass (kg).
    pub ion_mass: f64,
    /// Common axial trap frequency (rad/s).
    pub omega_z: f64,
    /// Transverse trap frequencies tiled along the chain (rad/s).
    pub omega_x_pattern: Vec<f64>,
    /// Effective wavelength of the axial force beams (m).
    pub laser_wavelength_axial: f64,
    /// Effective wavelength of the transverse force beams (m).
    pub laser_wavelength_transverse: f64,
    /// Axial spin-phonon coupling `g_z` (rad/s).
    pub gz_force: f64,
    /// Transverse spin-phonon coupling `g` (rad/s).
    pub gx_force: f64,
    /// `δ_{z,n=0} / g_z`.
    pub axial_detuning_factor: f64,
}

const KHZ: f64 = 2.0 * PI * 1e3;
const MHZ: f64 = 2.0 * PI * 1e6;

impl IonChainSpec {
    /// Fifty ⁹Be⁺ ions in traps 30 µm apart, 500 kHz axial confinement,
    /// transverse frequencies 10, 9, 8 MHz, 870 nm / 320 nm beams and
    /// 100 kHz forces with the axial detuning at twice the axial force.
    pub fn beryllium_reference() -> Self {
        Self {
            n_ions: 50,
            spacing_d0: 30e-6,
            ion_mass: species_mass("9Be+").expect("known species"),
            omega_z: 500.0 * KHZ,
            omega_x_pattern: vec![10.0 * MHZ, 9.0 * MHZ, 8.0 * MHZ],
            laser_wavelength_axial: 870e-9,
            laser_wavelength_transverse: 320e-9,
            gz_force: 100.0 * KHZ,
            gx_force: 100.0 * KHZ,
            axial_detuning_factor: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidIonSpec(what.to_string()));
        if self.n_ions < 2 {
            return bad("n_ions must be at least 2");
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.spacing_d0) {
            return bad("spacing_d0 must be positive");
        }
        if !positive(self.ion_mass) {
            return bad("ion_mass must be positive");
        }
        if !positive(self.omega_z) {
            return bad("omega_z must be positive");
        }
        if !positive(self.laser_wavelength_axial) || !positive(self.laser_wavelength_transverse) {
            return bad("laser wavelengths must be positive");
        }
        if self.omega_x_pattern.is_empty() || !self.omega_x_pattern.iter().all(|&w| positive(w)) {
            return bad("omega_x_pattern must hold positive frequencies");
        }
        for (i, a) in self.omega_x_pattern.iter().enumerate() {
            if self.omega_x_pattern[i + 1..].contains(a) {
                return bad("omega_x_pattern entries must be pairwise distinct");
            }
        }
        if !(self.gz_force.is_finite() && self.gz_force >= 0.0)
            || !(self.gx_force.is_finite() && self.gx_force >= 0.0)
        {
            return bad("forces must be non-negative");
        }
        if !positive(self.axial_detuning_factor) {
            return bad("axial_detuning_factor must be positive");
        }
        Ok(())
    }

    /// Trap frequency of ion `i` along `axis`.
    pub fn trap_frequency(&self, axis: Axis, i: usize) -> f64 {
        match axis {
            Axis::Z => self.omega_z,
            Axis::X => self.omega_x_pattern[i % self.omega_x_pattern.len()],
        }
    }
}

/// `c_α e² / (2m √(ω_i ω_l) |z_i − z_l|³)` in the chosen unit system,
/// returned in rad/s.
pub fn hopping_strength_in(
    spec: &IonChainSpec,
    axis: Axis,
    i: usize,
    l: usize,
    units: CoulombUnits,
) -> Result<f64> {
    if i == l {
        return Err(Error::SameIonIndex(i));
    }
    for idx in [i, l] {
        if idx >= spec.n_ions {
            return Err(Error::IndexOutOfRange { index: idx, len: spec.n_ions });
        }
    }
    let sep = i.abs_diff(l) as f64;
    let w = (spec.trap_frequency(axis, i) * spec.trap_frequency(axis, l)).sqrt();
    let (charge2, mass, dist) = match units {
        CoulombUnits::Si => {
            let eps0 = 1.0 / (MU_0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
            (
                ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * PI * eps0),
                spec.ion_mass,
                sep * spec.spacing_d0,
            )
        }
        CoulombUnits::Gaussian => {
            // statC = C · c[cm/s] / 10
            let e_cgs = ELEMENTARY_CHARGE * SPEED_OF_LIGHT * 100.0 / 10.0;
            (e_cgs * e_cgs, spec.ion_mass * 1e3, sep * spec.spacing_d0 * 1e2)
        }
    };
    Ok(axis.coefficient() * charge2 / (2.0 * mass * w * dist.powi(3)))
}

/// Phonon hopping between ions `i` and `l` (rad/s, signed).
pub fn hopping_strength(spec: &IonChainSpec, axis: Axis, i: usize, l: usize) -> Result<f64> {
    hopping_strength_in(spec, axis, i, l, CoulombUnits::Si)
}

/// Axial normal-mode frequencies, ascending.
pub fn axial_spectrum(spec: &IonChainSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n_ions;
    let t1 = hopping_strength(spec, Axis::Z, 0, 1)?;
    let m = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            spec.omega_z
        } else {
            t1 / (a.abs_diff(b) as f64).powi(3)
        }
    });
    let mut modes: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    modes.sort_by(f64::total_cmp);
    Ok(modes)
}

/// `η = (2π/λ) √(ħ / 2mω)`.
pub fn lamb_dicke(wavelength: f64, mass: f64, omega: f64) -> f64 {
    2.0 * PI / wavelength * (HBAR / (2.0 * mass * omega)).sqrt()
}

/// `J = |t^z_{j,j+1}| (g_z / δ_{z,n=0})²` with `δ_{z,n=0} = factor · g_z`.
pub fn effective_exchange(spec: &IonChainSpec) -> Result<f64> {
    if spec.gz_force == 0.0 {
        return Ok(0.0);
    }
    let t = hopping_strength(spec, Axis::Z, 0, 1)?.abs();
    let detuning = spec.axial_detuning_factor * spec.gz_force;
    Ok(t * (spec.gz_force / detuning).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonPlanReport {
    pub t_axial_nn: f64,
    pub axial_mode_frequencies: Vec<f64>,
    /// Lowest axial mode `ω_{z,n=0}`.
    pub omega_com: f64,
    pub eta_axial: f64,
    pub eta_transverse: f64,
    pub j_effective: f64,
    pub t_transverse_max: f64,
    /// Largest hopping between equal-frequency ions one pattern period apart.
    pub residual_same_freq_coupling: f64,
    pub rwa_ratio: f64,
    /// `1/J` (s).
    pub adiabatic_timescale: f64,
    /// Rabi frequency each transverse set needs for the common force `g`.
    pub transverse_rabi_frequencies: Vec<f64>,
    /// Largest relative difference between SI and Gaussian Coulomb bookkeeping.
    pub unit_consistency_defect: f64,
    pub feasibility_flags: Vec<FeasibilityCheck>,
}

impl IonPlanReport {
    pub fn all_pass(&self) -> bool {
        self.feasibility_flags.iter().all(|c| c.pass)
    }

    /// Plain-text summary with frequencies in units of 2π·Hz.
    pub fn summary_text(&self) -> String {
        let f = |w: f64| w / (2.0 * PI);
        let mut s = String::new();
        let _ = writeln!(s, "axial hopping t^z_(j,j+1)     {:>12.4} (2pi) kHz", f(self.t_axial_nn) / 1e3);
        let _ = writeln!(s, "lowest axial mode w_(z,n=0)   {:>12.4} (2pi) kHz", f(self.omega_com) / 1e3);
        let _ = writeln!(s, "Lamb-Dicke eta_z              {:>12.4}", self.eta_axial);
        let _ = writeln!(s, "Lamb-Dicke max eta_x          {:>12.4}", self.eta_transverse);
        let _ = writeln!(s, "exchange J                    {:>12.4} (2pi) kHz", f(self.j_effective) / 1e3);
        let _ = writeln!(s, "max t^x_(j,j+1)               {:>12.4} (2pi) kHz", f(self.t_transverse_max) / 1e3);
        let _ = writeln!(s, "residual same-frequency t^x   {:>12.4} (2pi) Hz", f(self.residual_same_freq_coupling));
        let _ = writeln!(s, "RWA ratio                     {:>12.4e}", self.rwa_ratio);
        let _ = writeln!(s, "adiabatic timescale 1/J       {:>12.4} us", self.adiabatic_timescale * 1e6);
        for c in &self.feasibility_flags {
            let _ = writeln!(
                s,
                "[{}] {} = {:.4e} (threshold {:.4e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            );
        }
        s
    }
}

fn transverse_extremes(spec: &IonChainSpec) -> Result<(f64, f64, f64)> {
    let period = spec.omega_x_pattern.len();
    let n = spec.n_ions;
    let mut t_nn: f64 = 0.0;
    let mut rwa: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for l in j + 1..(j + period).min(n) {
            let t = hopping_strength(spec, Axis::X, j, l)?.abs();
            if l == j + 1 {
                t_nn = t_nn.max(t);
            }
            let dw = (spec.trap_frequency(Axis::X, j) - spec.trap_frequency(Axis::X, l)).abs();
            rwa = rwa.max(t / dw);
        }
        if j + period < n {
            residual = residual.max(hopping_strength(spec, Axis::X, j, j + period)?.abs());
        }
    }
    Ok((t_nn, rwa, residual))
}

/// Every derived quantity of the microtrap implementation and the
/// pass/fail checks on them.
pub fn feasibility_report(spec: &IonChainSpec) -> Result<IonPlanReport> {
    spec.validate()?;
    let t_axial_nn = hopping_strength(spec, Axis::Z, 0, 1)?;
    let modes = axial_spectrum(spec)?;
    let omega_com = modes[0];
    let eta_axial = lamb_dicke(spec.laser_wavelength_axial, spec.ion_mass, omega_com);
    let etas_x: Vec<f64> = spec
        .omega_x_pattern
        .iter()
        .map(|&w| lamb_dicke(spec.laser_wavelength_transverse, spec.ion_mass, w))
        .collect();
    let eta_transverse = etas_x.iter().copied().fold(0.0, f64::max);
    let j_effective = effective_exchange(spec)?;
    let (t_transverse_max, rwa_ratio, residual) = transverse_extremes(spec)?;

    let mut defect: f64 = 0.0;
    for axis in [Axis::Z, Axis::X] {
        let si = hopping_strength_in(spec, axis, 0, 1, CoulombUnits::Si)?;
        let cgs = hopping_strength_in(spec, axis, 0, 1, CoulombUnits::Gaussian)?;
        defect = defect.max(((si - cgs) / si).abs());
    }

    // energy scales of the simulated lattice: g, δ ~ g and J
    let smallest_scale = [spec.gx_force, j_effective]
        .into_iter()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let residual_ratio = residual / smallest_scale;
    let check = |name: &str, value: f64, threshold: f64| FeasibilityCheck {
        name: name.to_string(),
        value,
        threshold,
        pass: value.is_finite() && value <= threshold,
    };
    let feasibility_flags = vec![
        check("lamb_dicke_axial", eta_axial, 0.3),
        check("lamb_dicke_transverse", eta_transverse, 0.3),
        check("rwa_ratio", rwa_ratio, 1e-2),
        check("residual_coupling_ratio", residual_ratio, 0.05),
    ];
    Ok(IonPlanReport {
        t_axial_nn,
        axial_mode_frequencies: modes,
        omega_com,
        eta_axial,
        eta_transverse,
        j_effective,
        t_transverse_max,
        residual_same_freq_coupling: residual,
        rwa_ratio,
        adiabatic_timescale: if j_effective > 0.0 { 1.0 / j_effective } else { f64::INFINITY },
        transverse_rabi_frequencies: etas_x.iter().map(|e| spec.gx_force / e).collect(),
        unit_consistency_defect: defect,
        feasibility_flags,
    })
}
