//! Exact diagonalization of small chains.
//!
//! Every eigenvalue of the Ising-Rabi Hamiltonian is at least two-fold
//! degenerate: the global parity anticommutes with each local gauge operator,
//! so the two act irreducibly on every eigenspace. Observables are therefore
//! always evaluated on a representative chosen by symmetry, never on whatever
//! combination the eigensolver happens to return.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LanczosOptions};
use crate::model::{
    self, build_hamiltonian, flip_all_spins, split_local, spin_sign, Basis, GaugeClass,
    ModelParams,
};
use crate::observables::{reference_site, ObservableSet};

/// Dimensions up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 600;
/// Seed of the Lanczos start vector.
pub const START_SEED: u64 = 0x5eed_1abe;
/// Residual target of the eigensolver, relative to `max(1, |E|)`.
pub const RESIDUAL_TARGET: f64 = 1e-10;
/// Energies closer than this (relative) belong to the same ground space.
const DEGENERACY_WINDOW: f64 = 1e-8;
/// Restricted symmetry operators must commute to this tolerance.
const RESOLUTION_TOL: f64 = 1e-9;

/// Normalized state vector in the product basis of [`crate::model`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<Complex64>,
}

impl DenseState {
    /// Normalizes `amplitudes`; fails on a zero vector.
    pub fn new(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let nrm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidParams("state vector has zero norm".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= nrm);
        Ok(Self { amplitudes })
    }

    pub fn from_real(v: &[f64]) -> Result<Self> {
        Self::new(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Tensor product of per-site vectors (each of length `2 n_fock`).
    pub fn product(p: &ModelParams, sites: &[Vec<Complex64>]) -> Result<Self> {
        if sites.len() != p.n_sites {
            return Err(Error::InvalidParams("one local vector per site required".into()));
        }
        p.checked_dim()?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for v in sites {
            if v.len() != p.local_dim() {
                return Err(Error::DimensionMismatch { left: v.len(), right: p.local_dim() });
            }
            amps = amps.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect();
        }
        Self::new(amps)
    }

    /// Boson vacuum with every spin ↑ᶻ (`up`) or ↓ᶻ.
    pub fn ferro(p: &ModelParams, up: bool) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, 0.0); p.local_dim()];
        v[if up { 0 } else { p.n_fock }] = Complex64::new(1.0, 0.0);
        Self::product(p, &vec![v; p.n_sites])
    }

    /// Dressed-ferromagnetic product state `⊗_j (|−α,↑ˣ⟩ ± |α,↓ˣ⟩)` with
    /// `α = g/δ`, coherent states truncated to the Fock cutoff.
    pub fn dressed_ferro(p: &ModelParams, plus: bool) -> Result<Self> {
        if p.delta == 0.0 {
            return Err(Error::DivisionByZero("dressed state needs delta > 0"));
        }
        let alpha = p.g / p.delta;
        let minus = coherent(-alpha, p.n_fock);
        let plus_c = coherent(alpha, p.n_fock);
        let sign = if plus { 1.0 } else { -1.0 };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let nf = p.n_fock;
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * nf];
        for n in 0..nf {
            // |↑ˣ⟩ = (|↑⟩ + |↓⟩)/√2, |↓ˣ⟩ = (|↑⟩ − |↓⟩)/√2
            v[n] = Complex64::new(h * (minus[n] + sign * plus_c[n]), 0.0);
            v[nf + n] = Complex64::new(h * (minus[n] - sign * plus_c[n]), 0.0);
        }
        Self::product(p, &vec![v; p.n_sites])
    }
}

fn coherent(beta: f64, n_fock: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_fock);
    let mut c = (-beta * beta / 2.0).exp();
    for n in 0..n_fock {
        out.push(c);
        c *= beta / ((n + 1) as f64).sqrt();
    }
    out
}

/// The `k` lowest eigenpairs, ascending.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energies: Vec<f64>,
    pub states: Vec<DenseState>,
    pub residuals: Vec<f64>,
}

/// Lowest `k` eigenpairs. Dense for small spaces, otherwise Lanczos with
/// deflation, each run from its own fixed-seed start vector.
pub fn ground_space(p: &ModelParams, k: usize) -> Result<EigenResult> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let h = build_hamiltonian(p)?;
    let csr = h.to_real_csr().expect("Hamiltonian is real");
    let dim = h.dim;
    let k = k.min(dim);
    let apply = |x: &[f64], y: &mut [f64]| csr.apply(x, y);

    let mut energies = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    if dim <= DENSE_LIMIT {
        let (vals, vecs) = linalg::dense_symmetric_eigen(csr.to_dense());
        for i in 0..k {
            energies.push(vals[i]);
            vectors.push(vecs.column(i).iter().copied().collect());
        }
    } else {
        for i in 0..k {
            // a Krylov space only reaches the start vector's own projection onto a
            // degenerate level, so each deflated run needs a fresh start
            let start = linalg::seeded_vector(dim, START_SEED + i as u64);
            // first pass at the fixed target, tightened to the energy scale below
            let opts = LanczosOptions { tol: RESIDUAL_TARGET, ..Default::default() };
            let pair = linalg::lanczos_lowest(apply, &start, &vectors, &opts)?;
            energies.push(pair.value);
            vectors.push(pair.vector);
        }
        // deflated runs may come back slightly out of order
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        energies = order.iter().map(|&i| energies[i]).collect();
        vectors = order.iter().map(|&i| vectors[i].clone()).collect();
    }

    let mut residuals = Vec::with_capacity(k);
    let mut hv = vec![0.0; dim];
    for (e, v) in energies.iter().zip(&vectors) {
        apply(v, &mut hv);
        linalg::axpy(-e, v, &mut hv);
        let r = linalg::norm(&hv);
        if r > 1e-9 * e.abs().max(1.0) {
            return Err(Error::NoConvergence { iterations: 0, residual: r });
        }
        residuals.push(r);
    }
    let states = vectors.iter().map(|v| DenseState::from_real(v)).collect::<Result<_>>()?;
    Ok(EigenResult { energies, states, residuals })
}

/// `E₁ − E₀` from the two lowest levels.
pub fn degeneracy_gap(p: &ModelParams) -> Result<f64> {
    let gs = ground_space(p, 2)?;
    Ok((gs.energies[1] - gs.energies[0]).max(0.0))
}

fn ground_doublet(p: &ModelParams) -> Result<(f64, Vec<DenseState>)> {
    let gs = ground_space(p, 2)?;
    let e0 = gs.energies[0];
    let window = DEGENERACY_WINDOW * e0.abs().max(1.0);
    let states = gs
        .energies
        .iter()
        .zip(gs.states)
        .filter(|(e, _)| **e - e0 <= window)
        .map(|(_, s)| s)
        .collect();
    Ok((e0, states))
}

/// Restriction `M_ab = ⟨ψ_a|O|ψ_b⟩` of an operator to a set of states.
fn restrict(op: &model::SparseOperator, states: &[DenseState]) -> DMatrix<Complex64> {
    let m = states.len();
    DMatrix::from_fn(m, m, |a, b| op.matrix_element(&states[a].amplitudes, &states[b].amplitudes))
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Ground-space representative that is a parity eigenstate (`∏σˣ = +1`
/// preferred) and lies in the two gauge sectors the ground doublet spans.
pub fn symmetry_resolved_ground_state(p: &ModelParams) -> Result<DenseState> {
    let (_, doublet) = ground_doublet(p)?;
    if doublet.len() == 1 {
        return Ok(doublet.into_iter().next().expect("one state"));
    }
    let basis = Basis::new(p)?;
    let n = p.n_sites;
    // ∏σˣ = P / iᴺ has eigenvalues ±1
    let phase = Complex64::new(0.0, 1.0).powu(n as u32).conj();
    let parity = model::parity_operator(p)?.scale(phase);
    let x = restrict(&parity, &doublet);
    let id = DMatrix::<Complex64>::identity(x.nrows(), x.ncols());
    if max_abs(&(x.adjoint() * &x - &id)) > RESOLUTION_TOL {
        return Err(Error::DegeneracyResolutionFailure(
            "ground space is not invariant under parity".into(),
        ));
    }
    for j in 0..n - 1 {
        let pair = model::gauge_operator(p, j)?.matmul(&model::gauge_operator(p, j + 1)?)?;
        let gp = restrict(&pair, &doublet);
        if max_abs(&(&gp * &x - &x * &gp)) > RESOLUTION_TOL {
            return Err(Error::DegeneracyResolutionFailure(format!(
                "gauge pair ({j}, {}) does not commute with parity in the ground space",
                j + 1
            )));
        }
    }

    // 2×2 Hermitian eigenproblem for the restricted parity
    let herm = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
        .expect("non-empty");
    let coeffs = eig.eigenvectors.column(best);
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim];
    for (c, s) in coeffs.iter().zip(&doublet) {
        for (a, v) in amps.iter_mut().zip(&s.amplitudes) {
            *a += c * v;
        }
    }
    let state = DenseState::new(amps)?;
    purify_sectors(p, &basis, state)
}

fn class_pattern(basis: &Basis, n_fock: usize, index: usize) -> Vec<GaugeClass> {
    (0..basis.n_sites).map(|j| GaugeClass::of_local(basis.digit(index, j), n_fock)).collect()
}

/// Drops the solver noise outside the sector of the dominant basis state and
/// its parity image. Fails if that noise is not negligible.
fn purify_sectors(p: &ModelParams, basis: &Basis, state: DenseState) -> Result<DenseState> {
    let (peak, _) = state
        .amplitudes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty");
    let pattern = class_pattern(basis, p.n_fock, peak);
    let mirrored = class_pattern(basis, p.n_fock, flip_all_spins(basis, p.n_fock, peak));
    let mut dropped = 0.0;
    let amps = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(b, &z)| {
            let cls = class_pattern(basis, p.n_fock, b);
            if cls == pattern || cls == mirrored {
                z
            } else {
                dropped += z.norm_sqr();
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    if dropped > 1e-12 {
        return Err(Error::DegeneracyResolutionFailure(format!(
            "ground doublet leaks weight {dropped:e} outside its gauge sectors"
        )));
    }
    DenseState::new(amps)
}

/// Ground state inside the uniform gauge sector where every site has the
/// given class. Fails if the ground doublet has no component there.
pub fn sector_ground_state(p: &ModelParams, class: GaugeClass) -> Result<DenseState> {
    let (e0, doublet) = ground_doublet(p)?;
    let basis = Basis::new(p)?;
    let project = |s: &DenseState| -> Vec<Complex64> {
        s.amplitudes
            .iter()
            .enumerate()
            .map(|(b, &z)| {
                let inside =
                    (0..p.n_sites).all(|j| GaugeClass::of_local(basis.digit(b, j), p.n_fock) == class);
                if inside {
                    z
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    };
    let best = doublet
        .iter()
        .map(project)
        .max_by(|a, b| {
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .expect("non-empty doublet");
    let state = DenseState::new(best)?;
    let h = build_hamiltonian(p)?;
    let hv = h.apply(&state.amplitudes);
    let res: f64 = hv
        .iter()
        .zip(&state.amplitudes)
        .map(|(a, b)| (a - b * e0).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if res > 1e-8 * e0.abs().max(1.0) {
        return Err(Error::DegeneracyResolutionFailure(format!(
            "ground state has no eigenvector in the uniform {class:?} sector (residual {res:e})"
        )));
    }
    Ok(state)
}

/// Order parameter, local expectations and the full connected `σᶻ` correlator.
pub fn observables(state: &DenseState, p: &ModelParams) -> Result<ObservableSet> {
    let basis = Basis::new(p)?;
    if state.dim() != basis.dim {
        return Err(Error::DimensionMismatch { left: state.dim(), right: basis.dim });
    }
    let n = p.n_sites;
    let nf = p.n_fock;
    let zero = Complex64::new(0.0, 0.0);
    let mut boson = vec![0.0; n];
    let mut sz = vec![0.0; n];
    let mut sx = vec![0.0; n];
    let mut a = vec![zero; n];
    let mut zz = vec![vec![0.0; n]; n];
    let mut spins = vec![0.0; n];
    for (b, &c) in state.amplitudes.iter().enumerate() {
        if c == zero {
            continue;
        }
        let w = c.norm_sqr();
        for j in 0..n {
            let l = basis.digit(b, j);
            let (s, occ) = split_local(l, nf);
            spins[j] = spin_sign(s);
            boson[j] += w * occ as f64;
            sz[j] += w * spins[j];
            let stride = basis.stride(j);
            let base = b - l * stride;
            // ⟨ψ|σˣ_j|ψ⟩ = Σ_b conj(c_{flip(b)}) c_b
            let flipped = base + ((1 - s) * nf + occ) * stride;
            sx[j] += (state.amplitudes[flipped].conj() * c).re;
            if occ > 0 {
                let lowered = base + (s * nf + occ - 1) * stride;
                a[j] += state.amplitudes[lowered].conj() * c * (occ as f64).sqrt();
            }
        }
        for i in 0..n {
            for j in 0..n {
                zz[i][j] += w * spins[i] * spins[j];
            }
        }
    }
    let norm2 = state.norm().powi(2);
    let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= norm2);
    scale(&mut boson);
    scale(&mut sz);
    scale(&mut sx);
    a.iter_mut().for_each(|z| *z /= norm2);
    let cz: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| zz[i][j] / norm2 - sz[i] * sz[j]).collect())
        .collect();
    let reference = reference_site(n);
    Ok(ObservableSet {
        n: boson.iter().sum::<f64>() / n as f64,
        boson_number: boson,
        sigma_x: sx,
        sigma_z: sz,
        a,
        cz_reference: reference,
        cz_profile: cz[reference].clone(),
        cz_matrix: Some(cz),
    })
}

/// Summary emitted by the `ed` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdSummary {
    pub energies: Vec<f64>,
    pub n: f64,
    pub sigma_x: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub gap: f64,
    pub elitzur_max: f64,
}

pub fn ed_summary(p: &ModelParams, k: usize) -> Result<EdSummary> {
    let gs = ground_space(p, k.max(2))?;
    let state = symmetry_resolved_ground_state(p)?;
    let obs = observables(&state, p)?;
    Ok(EdSummary {
        gap: (gs.energies[1] - gs.energies[0]).max(0.0),
        energies: gs.energies,
        n: obs.n,
        elitzur_max: obs.elitzur_max(),
        sigma_x: obs.sigma_x,
        sigma_z: obs.sigma_z,
    })
}

/// Gap `E₁ − E₀` of the open transverse-field Ising chain
/// `h Σ σˣ − J Σ σᶻσᶻ`, the static-field control case.
pub fn tfim_control_gap(n_sites: usize, h: f64, j_ising: f64) -> f64 {
    let dim = 1usize << n_sites;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let spin = |j: usize| if (b >> (n_sites - 1 - j)) & 1 == 0 { 1.0 } else { -1.0 };
        let mut diag = 0.0;
        for j in 0..n_sites - 1 {
            diag -= j_ising * spin(j) * spin(j + 1);
        }
        m[(b, b)] = diag;
        for j in 0..n_sites {
            m[(b ^ (1 << (n_sites - 1 - j)), b)] += h;
        }
    }
    let (vals, _) = linalg::dense_symmetric_eigen(m);
    vals[1] - vals[0]
}
