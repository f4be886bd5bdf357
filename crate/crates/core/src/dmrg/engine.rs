//! Sweeps, block environments and the two-site effective Hamiltonian.

use std::cell::RefCell;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DmrgConfig, MpsState, SiteTensor};
use crate::error::{Error, Result};
use crate::linalg::{self, gemm, LanczosOptions};
use crate::model::{local, spin_sign, split_local, GaugeClass, ModelParams};
use crate::observables::ObservableSet;

const LOCAL_SOLVER: LanczosOptions =
    LanczosOptions { krylov_dim: 32, max_restarts: 6, tol: 1e-8, strict: false };

/// Outcome of a DMRG run, returned even when the run did not converge or the
/// state breaks the boson cutoff rule.
#[derive(Debug, Clone)]
pub struct DmrgRun {
    pub state: MpsState,
    pub energy: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Last sweep-to-sweep energy change.
    pub last_delta: f64,
    pub max_discarded_weight: f64,
    /// Largest isometry defect seen at the end of a sweep.
    pub max_canonical_defect: f64,
    pub observables: ObservableSet,
}

impl DmrgRun {
    /// `2n ≤ n_fock`, the condition for the cutoff to be trusted.
    pub fn respects_cutoff(&self, p: &ModelParams) -> bool {
        2.0 * self.observables.n <= p.n_fock as f64
    }
}

/// Local operators in the working basis.
struct LocalOps {
    d: usize,
    /// Working index → full local index.
    keep: Vec<usize>,
    h: Vec<f64>,
    z: Vec<f64>,
    j: f64,
}

impl LocalOps {
    fn new(p: &ModelParams, restrict: bool) -> Self {
        let keep = if restrict {
            GaugeClass::Even.local_indices(p.n_fock)
        } else {
            (0..p.local_dim()).collect()
        };
        let d = keep.len();
        let full = local::site_hamiltonian(p);
        let mut h = vec![0.0; d * d];
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                h[a * d + b] = full[(ka, kb)];
            }
        }
        let z = keep.iter().map(|&k| spin_sign(split_local(k, p.n_fock).0)).collect();
        Self { d, keep, h, z, j: p.j_ising }
    }
}

/// Projected block Hamiltonian and boundary `σᶻ` of one side.
#[derive(Clone)]
struct Env {
    dim: usize,
    h: Vec<f64>,
    z: Vec<f64>,
}

impl Env {
    fn boundary() -> Self {
        Self { dim: 1, h: vec![0.0], z: vec![0.0] }
    }
}

/// `y = H_eff θ` for `θ[l, s1, s2, r]`.
fn apply_two_site(
    left: &Env,
    right: &Env,
    ops: &LocalOps,
    x: &[f64],
    y: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let (dl, dr, d) = (left.dim, right.dim, ops.d);
    let inner = d * d * dr;
    let rows = dl * d * d;
    scratch.resize(x.len(), 0.0);

    gemm(dl, dl, inner, 1.0, &left.h, (dl, 1), x, (inner, 1), 0.0, y, (inner, 1));
    gemm(rows, dr, dr, 1.0, x, (dr, 1), &right.h, (dr, 1), 1.0, y, (dr, 1));
    for l in 0..dl {
        let off = l * inner;
        gemm(d, d, d * dr, 1.0, &ops.h, (d, 1), &x[off..], (d * dr, 1), 1.0, &mut y[off..], (d * dr, 1));
    }
    for ls in 0..dl * d {
        let off = ls * d * dr;
        gemm(d, d, dr, 1.0, &ops.h, (d, 1), &x[off..], (dr, 1), 1.0, &mut y[off..], (dr, 1));
    }

    let mj = -ops.j;
    // left bond: Z_L ⊗ σᶻ_{s1}
    if dl > 1 || left.z[0] != 0.0 {
        gemm(dl, dl, inner, 1.0, &left.z, (dl, 1), x, (inner, 1), 0.0, scratch, (inner, 1));
        for l in 0..dl {
            for s1 in 0..d {
                let c = mj * ops.z[s1];
                let off = (l * d + s1) * d * dr;
                linalg::axpy(c, &scratch[off..off + d * dr], &mut y[off..off + d * dr]);
            }
        }
    }
    // right bond: σᶻ_{s2} ⊗ Z_R
    if dr > 1 || right.z[0] != 0.0 {
        gemm(rows, dr, dr, 1.0, x, (dr, 1), &right.z, (dr, 1), 0.0, scratch, (dr, 1));
        for row in 0..rows {
            let c = mj * ops.z[row % d];
            let off = row * dr;
            linalg::axpy(c, &scratch[off..off + dr], &mut y[off..off + dr]);
        }
    }
    // central bond
    for l in 0..dl {
        for s1 in 0..d {
            for s2 in 0..d {
                let c = mj * ops.z[s1] * ops.z[s2];
                let off = ((l * d + s1) * d + s2) * dr;
                linalg::axpy(c, &x[off..off + dr], &mut y[off..off + dr]);
            }
        }
    }
}

/// Grows the left block by the left-isometry `a[l, s, k]`.
fn extend_left(env: &Env, a: &SiteTensor, ops: &LocalOps) -> Env {
    let (dl, d, k) = (a.left, a.phys, a.right);
    let mut m = vec![0.0; dl * d * k];
    gemm(dl, dl, d * k, 1.0, &env.h, (dl, 1), &a.data, (d * k, 1), 0.0, &mut m, (d * k, 1));
    for l in 0..dl {
        let off = l * d * k;
        gemm(d, d, k, 1.0, &ops.h, (d, 1), &a.data[off..], (k, 1), 1.0, &mut m[off..], (k, 1));
    }
    let mut t = vec![0.0; dl * d * k];
    gemm(dl, dl, d * k, 1.0, &env.z, (dl, 1), &a.data, (d * k, 1), 0.0, &mut t, (d * k, 1));
    let mut za = a.data.clone();
    for row in 0..dl * d {
        let zs = ops.z[row % d];
        linalg::axpy(-ops.j * zs, &t[row * k..(row + 1) * k], &mut m[row * k..(row + 1) * k]);
        za[row * k..(row + 1) * k].iter_mut().for_each(|v| *v *= zs);
    }
    let mut h = vec![0.0; k * k];
    let mut z = vec![0.0; k * k];
    gemm(k, dl * d, k, 1.0, &a.data, (1, k), &m, (k, 1), 0.0, &mut h, (k, 1));
    gemm(k, dl * d, k, 1.0, &a.data, (1, k), &za, (k, 1), 0.0, &mut z, (k, 1));
    symmetrize(&mut h, k);
    Env { dim: k, h, z }
}

/// Grows the right block by the right-isometry `b[k, s, r]`.
fn extend_right(env: &Env, b: &SiteTensor, ops: &LocalOps) -> Env {
    let (k, d, dr) = (b.left, b.phys, b.right);
    let mut m = vec![0.0; k * d * dr];
    gemm(k * d, dr, dr, 1.0, &b.data, (dr, 1), &env.h, (dr, 1), 0.0, &mut m, (dr, 1));
    for a in 0..k {
        let off = a * d * dr;
        gemm(d, d, dr, 1.0, &ops.h, (d, 1), &b.data[off..], (dr, 1), 1.0, &mut m[off..], (dr, 1));
    }
    let mut t = vec![0.0; k * d * dr];
    gemm(k * d, dr, dr, 1.0, &b.data, (dr, 1), &env.z, (dr, 1), 0.0, &mut t, (dr, 1));
    let mut zb = b.data.clone();
    for row in 0..k * d {
        let zs = ops.z[row % d];
        linalg::axpy(-ops.j * zs, &t[row * dr..(row + 1) * dr], &mut m[row * dr..(row + 1) * dr]);
        zb[row * dr..(row + 1) * dr].iter_mut().for_each(|v| *v *= zs);
    }
    let mut h = vec![0.0; k * k];
    let mut z = vec![0.0; k * k];
    let w = d * dr;
    gemm(k, w, k, 1.0, &b.data, (w, 1), &m, (1, w), 0.0, &mut h, (k, 1));
    gemm(k, w, k, 1.0, &b.data, (w, 1), &zb, (1, w), 0.0, &mut z, (k, 1));
    symmetrize(&mut h, k);
    Env { dim: k, h, z }
}

fn symmetrize(m: &mut [f64], k: usize) {
    for a in 0..k {
        for b in a + 1..k {
            let v = 0.5 * (m[a * k + b] + m[b * k + a]);
            m[a * k + b] = v;
            m[b * k + a] = v;
        }
    }
}

struct Split {
    u: DMatrix<f64>,
    s: Vec<f64>,
    vt: DMatrix<f64>,
    discarded: f64,
}

/// Truncated SVD of `θ` reshaped to `(dl·d) × (d·dr)`.
fn split(theta: &[f64], rows: usize, cols: usize, cfg: &DmrgConfig) -> Split {
    let m = DMatrix::from_row_slice(rows, cols, theta);
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut keep = order.len().min(cfg.max_bond);
    let mut tail: f64 = order[keep..].iter().map(|&i| svd.singular_values[i].powi(2)).sum();
    while keep > 1 {
        let w = svd.singular_values[order[keep - 1]].powi(2);
        if (tail + w) / total > cfg.svd_floor {
            break;
        }
        tail += w;
        keep -= 1;
    }
    let kept = &order[..keep];
    let mut s: Vec<f64> = kept.iter().map(|&i| svd.singular_values[i]).collect();
    let nrm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.iter_mut().for_each(|x| *x /= nrm);
    let u = DMatrix::from_fn(rows, keep, |r, c| u[(r, kept[c])]);
    let vt = DMatrix::from_fn(keep, cols, |r, c| vt[(kept[r], c)]);
    Split { u, s, vt, discarded: tail / total }
}

fn contract_pair(a: &SiteTensor, b: &SiteTensor) -> Vec<f64> {
    let mut out = vec![0.0; a.left * a.phys * b.phys * b.right];
    let cols = b.phys * b.right;
    gemm(a.left * a.phys, a.right, cols, 1.0, &a.data, (a.right, 1), &b.data, (cols, 1), 0.0, &mut out, (cols, 1));
    out
}

fn random_state(p: &ModelParams, d: usize, cfg: &DmrgConfig) -> Vec<SiteTensor> {
    let n = p.n_sites;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = vec![1usize; n + 1];
    for b in 1..n {
        let from_left = (d as f64).powi(b as i32);
        let from_right = (d as f64).powi((n - b) as i32);
        dims[b] = (cfg.max_bond as f64).min(from_left).min(from_right) as usize;
    }
    (0..n)
        .map(|j| {
            let mut t = SiteTensor::zeros(dims[j], d, dims[j + 1]);
            t.data.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            t
        })
        .collect()
}

/// Projects a full-space MPS onto the working basis.
fn restrict_state(state: &MpsState, ops: &LocalOps) -> Vec<SiteTensor> {
    state
        .site_tensors
        .iter()
        .map(|t| {
            let mut w = SiteTensor::zeros(t.left, ops.d, t.right);
            for l in 0..t.left {
                for (s, &k) in ops.keep.iter().enumerate() {
                    for r in 0..t.right {
                        w.data[(l * ops.d + s) * t.right + r] = t.at(l, k, r);
                    }
                }
            }
            w
        })
        .collect()
}

fn embed_state(tensors: &[SiteTensor], ops: &LocalOps, full_dim: usize) -> MpsState {
    let site_tensors: Vec<SiteTensor> = tensors
        .iter()
        .map(|t| {
            let mut f = SiteTensor::zeros(t.left, full_dim, t.right);
            for l in 0..t.left {
                for (s, &k) in ops.keep.iter().enumerate() {
                    for r in 0..t.right {
                        f.data[(l * full_dim + k) * t.right + r] = t.at(l, s, r);
                    }
                }
            }
            f
        })
        .collect();
    MpsState {
        n_sites: tensors.len(),
        local_dim: full_dim,
        bond_dims: site_tensors[..tensors.len() - 1].iter().map(|t| t.right).collect(),
        site_tensors,
        canonical_center: 0,
    }
}

/// Brings every site but the first into right-canonical form.
fn right_canonicalize(tensors: &mut [SiteTensor]) -> Result<()> {
    for j in (1..tensors.len()).rev() {
        let t = &tensors[j];
        let (dl, cols) = (t.left, t.phys * t.right);
        let m = DMatrix::from_row_slice(dl, cols, &t.data);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("U"), svd.v_t.expect("V^T"));
        let keep = svd.singular_values.iter().filter(|&&s| s > 1e-14 * svd.singular_values.max()).count();
        if keep == 0 {
            return Err(Error::InvalidParams("initial MPS has zero norm".into()));
        }
        let mut b = SiteTensor::zeros(keep, t.phys, t.right);
        for a in 0..keep {
            for c in 0..cols {
                b.data[a * cols + c] = vt[(a, c)];
            }
        }
        // carry U·S into the left neighbour
        let us = DMatrix::from_fn(dl, keep, |r, c| u[(r, c)] * svd.singular_values[c]);
        let prev = &tensors[j - 1];
        let rows = prev.left * prev.phys;
        let mut nd = vec![0.0; rows * keep];
        let us_rm: Vec<f64> = (0..dl).flat_map(|r| (0..keep).map(move |c| (r, c))).map(|(r, c)| us[(r, c)]).collect();
        gemm(rows, dl, keep, 1.0, &prev.data, (dl, 1), &us_rm, (keep, 1), 0.0, &mut nd, (keep, 1));
        let new_prev = SiteTensor { left: prev.left, phys: prev.phys, right: keep, data: nd };
        tensors[j - 1] = new_prev;
        tensors[j] = b;
    }
    let first = &mut tensors[0];
    let nrm = linalg::norm(&first.data);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::InvalidParams("initial MPS has zero norm".into()));
    }
    linalg::scale(&mut first.data, 1.0 / nrm);
    Ok(())
}

/// Runs two-site DMRG from a random state (or `init` when given) and
/// returns the final state whatever its convergence status.
pub fn run_dmrg(p: &ModelParams, cfg: &DmrgConfig, init: Option<&MpsState>) -> Result<DmrgRun> {
    p.validate()?;
    cfg.validate()?;
    let ops = LocalOps::new(p, cfg.restrict_gauge_sector);
    let n = p.n_sites;
    let d = ops.d;
    let mut tensors = match init {
        Some(state) => {
            state.check_matches(p)?;
            restrict_state(state, &ops)
        }
        None => random_state(p, d, cfg),
    };
    right_canonicalize(&mut tensors)?;

    let mut lefts: Vec<Env> = vec![Env::boundary(); n];
    let mut rights: Vec<Env> = vec![Env::boundary(); n];
    for j in (0..n - 1).rev() {
        rights[j] = extend_right(&rights[j + 1], &tensors[j + 1], &ops);
    }

    let tol = cfg.energy_tol * n as f64;
    let mut energy = f64::INFINITY;
    let mut last_delta = f64::INFINITY;
    let mut max_discarded: f64 = 0.0;
    let mut max_defect: f64 = 0.0;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.n_sweeps {
        sweeps += 1;
        let mut e = energy;
        for j in 0..n - 1 {
            let (val, theta) = solve(j, &tensors, &lefts, &rights, &ops)?;
            e = val;
            let (dl, dr) = (tensors[j].left, tensors[j + 1].right);
            let sp = split(&theta, dl * d, d * dr, cfg);
            max_discarded = max_discarded.max(sp.discarded);
            let k = sp.s.len();
            tensors[j] = SiteTensor { left: dl, phys: d, right: k, data: row_major(&sp.u) };
            let mut svt = row_major(&sp.vt);
            for a in 0..k {
                svt[a * d * dr..(a + 1) * d * dr].iter_mut().for_each(|v| *v *= sp.s[a]);
            }
            tensors[j + 1] = SiteTensor { left: k, phys: d, right: dr, data: svt };
            lefts[j + 1] = extend_left(&lefts[j], &tensors[j], &ops);
        }
        for j in (0..n - 1).rev() {
            let (val, theta) = solve(j, &tensors, &lefts, &rights, &ops)?;
            e = val;
            let (dl, dr) = (tensors[j].left, tensors[j + 1].right);
            let sp = split(&theta, dl * d, d * dr, cfg);
            max_discarded = max_discarded.max(sp.discarded);
            let k = sp.s.len();
            tensors[j + 1] = SiteTensor { left: k, phys: d, right: dr, data: row_major(&sp.vt) };
            let mut us = row_major(&sp.u);
            for row in 0..dl * d {
                for a in 0..k {
                    us[row * k + a] *= sp.s[a];
                }
            }
            tensors[j] = SiteTensor { left: dl, phys: d, right: k, data: us };
            rights[j] = extend_right(&rights[j + 1], &tensors[j + 1], &ops);
        }
        let snapshot = embed_state(&tensors, &ops, p.local_dim());
        max_defect = max_defect.max(snapshot.canonical_defect());
        last_delta = (e - energy).abs();
        energy = e;
        log::debug!("sweep {sweeps}: E = {energy:.12}, dE = {last_delta:.3e}");
        if last_delta < tol {
            converged = true;
            break;
        }
    }

    let state = embed_state(&tensors, &ops, p.local_dim());
    let observables = super::mps_observables(&state, p)?;
    Ok(DmrgRun {
        state,
        energy,
        sweeps,
        converged,
        last_delta,
        max_discarded_weight: max_discarded,
        max_canonical_defect: max_defect,
        observables,
    })
}

fn solve(
    j: usize,
    tensors: &[SiteTensor],
    lefts: &[Env],
    rights: &[Env],
    ops: &LocalOps,
) -> Result<(f64, Vec<f64>)> {
    let theta = contract_pair(&tensors[j], &tensors[j + 1]);
    let (le, re) = (&lefts[j], &rights[j + 1]);
    let scratch = RefCell::new(Vec::new());
    let apply = |x: &[f64], y: &mut [f64]| {
        apply_two_site(le, re, ops, x, y, &mut scratch.borrow_mut());
    };
    let pair = linalg::lanczos_lowest(apply, &theta, &[], &LOCAL_SOLVER)?;
    Ok((pair.value, pair.vector))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Converged ground state and energy. Fails when the sweep cap is reached
/// or the state needs more bosons than the cutoff can hold (`2n > n_fock`).
pub fn dmrg_ground_state(p: &ModelParams, cfg: &DmrgConfig) -> Result<(MpsState, f64)> {
    let run = run_dmrg(p, cfg, None)?;
    if !run.converged {
        return Err(Error::DmrgNoConvergence { sweeps: run.sweeps, last_delta: run.last_delta });
    }
    if !run.respects_cutoff(p) {
        return Err(Error::CutoffViolation { two_n: 2.0 * run.observables.n, n_fock: p.n_fock });
    }
    Ok((run.state, run.energy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_chain_is_exactly_ferromagnetic() {
        let p = ModelParams::new(50, 1.0, 0.0, 1.0, 4).unwrap();
        let (state, e) = dmrg_ground_state(&p, &DmrgConfig::default()).unwrap();
        assert!((e + 49.0).abs() < 1e-10, "{e}");
        assert!(state.canonical_defect() < 1e-10);
        assert!((state.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn effective_hamiltonian_is_symmetric() {
        let p = ModelParams::new(4, 0.7, 0.4, 1.0, 3).unwrap();
        let ops = LocalOps::new(&p, false);
        let left = Env { dim: 2, h: vec![0.3, 0.1, 0.1, -0.2], z: vec![1.0, 0.5, 0.5, -1.0] };
        let right = Env { dim: 3, h: vec![1.0, 0.2, 0.0, 0.2, 0.0, 0.4, 0.0, 0.4, -1.0], z: vec![0.0; 9] };
        let dim = 2 * ops.d * ops.d * 3;
        let mut cols = Vec::new();
        let mut s = Vec::new();
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            let mut y = vec![0.0; dim];
            apply_two_site(&left, &right, &ops, &e, &mut y, &mut s);
            cols.push(y);
        }
        for i in 0..dim {
            for j in 0..dim {
                assert!((cols[i][j] - cols[j][i]).abs() < 1e-14);
            }
        }
    }
}
