//! Hamiltonian and symmetry operators of the Ising-Rabi chain.
//!
//! Basis convention: the product basis is site-major (site 0 is the most
//! significant digit). Within a site the local index is
//! `spin * n_fock + occupation`, with spin 0 = ↑ (σᶻ = +1) and spin 1 = ↓
//! (σᶻ = −1), so the local dimension is `2 * n_fock`. The boson ladder
//! operators are truncated to occupations `0..n_fock`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest product-basis dimension accepted by the sparse builders.
pub const MAX_BASIS_STATES: u128 = 1 << 26;

/// Physical inputs shared by every solver. Energies are in units of `j_ising`
/// by convention, but nothing here assumes `j_ising == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_sites: usize,
    pub delta: f64,
    pub g: f64,
    pub j_ising: f64,
    pub n_fock: usize,
}

impl ModelParams {
    pub fn new(n_sites: usize, delta: f64, g: f64, j_ising: f64, n_fock: usize) -> Result<Self> {
        let p = Self { n_sites, delta, g, j_ising, n_fock };
        p.validate()?;
        Ok(p)
    }

    /// `j_ising == 0` is accepted so the mean-field limits can be probed.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParams(format!(
                "n_sites = {} but the chain needs at least one bond",
                self.n_sites
            )));
        }
        if self.n_fock < 2 {
            return Err(Error::InvalidParams(format!("n_fock = {} < 2", self.n_fock)));
        }
        for (name, v) in [("delta", self.delta), ("g", self.g), ("j_ising", self.j_ising)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn local_dim(&self) -> usize {
        2 * self.n_fock
    }

    pub fn with_g(self, g: f64) -> Self {
        Self { g, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    /// Product-basis dimension, rejected above [`MAX_BASIS_STATES`].
    pub fn checked_dim(&self) -> Result<usize> {
        self.validate()?;
        let d = self.local_dim() as u128;
        let mut dim: u128 = 1;
        for _ in 0..self.n_sites {
            dim = dim.saturating_mul(d);
            if dim > MAX_BASIS_STATES {
                return Err(Error::DimensionOverflow { dim, limit: MAX_BASIS_STATES });
            }
        }
        Ok(dim as usize)
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::IndexOutOfRange { index: site, len: self.n_sites });
        }
        Ok(())
    }
}

/// Decomposes a local index into `(spin, occupation)`.
#[inline]
pub fn split_local(local: usize, n_fock: usize) -> (usize, usize) {
    (local / n_fock, local % n_fock)
}

#[inline]
pub fn spin_sign(spin: usize) -> f64 {
    if spin == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Single-site operators as dense `2 n_fock × 2 n_fock` matrices.
pub mod local {
    use super::*;

    pub fn identity(n_fock: usize) -> DMatrix<f64> {
        DMatrix::identity(2 * n_fock, 2 * n_fock)
    }

    pub fn number(n_fock: usize) -> DMatrix<f64> {
        let d = 2 * n_fock;
        DMatrix::from_fn(d, d, |r, c| if r == c { (r % n_fock) as f64 } else { 0.0 })
    }

    /// Truncated annihilation operator, identity on the spin.
    pub fn annihilation(n_fock: usize) -> DMatrix<f64> {
        let d = 2 * n_fock;
        let mut m = DMatrix::zeros(d, d);
        for s in 0..2 {
            for n in 1..n_fock {
                m[(s * n_fock + n - 1, s * n_fock + n)] = (n as f64).sqrt();
            }
        }
        m
    }

    pub fn sigma_x(n_fock: usize) -> DMatrix<f64> {
        let d = 2 * n_fock;
        DMatrix::from_fn(d, d, |r, c| if r % n_fock == c % n_fock && r != c { 1.0 } else { 0.0 })
    }

    pub fn sigma_z(n_fock: usize) -> DMatrix<f64> {
        let d = 2 * n_fock;
        DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                spin_sign(r / n_fock)
            } else {
                0.0
            }
        })
    }

    /// On-site part of the Hamiltonian, `δ a†a + g σˣ(a† + a)`.
    pub fn site_hamiltonian(p: &ModelParams) -> DMatrix<f64> {
        let a = annihilation(p.n_fock);
        let x = &a + a.transpose();
        number(p.n_fock) * p.delta + (sigma_x(p.n_fock) * x) * p.g
    }
}

/// Complex sparse matrix in coordinate form. Entries are kept sorted by
/// `(row, col)` with duplicates summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, entries: (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect() }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self::from_triplets(self.dim, self.entries.iter().chain(&other.entries).copied()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let neg = other.entries.iter().map(|&(r, c, v)| (r, c, -v));
        Ok(Self::from_triplets(self.dim, self.entries.iter().copied().chain(neg)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let rows_b = other.rows();
        let mut out = Vec::new();
        let mut row_acc: BTreeMap<usize, Complex64> = BTreeMap::new();
        let mut i = 0;
        while i < self.entries.len() {
            let row = self.entries[i].0;
            row_acc.clear();
            while i < self.entries.len() && self.entries[i].0 == row {
                let (_, k, va) = self.entries[i];
                for &(j, vb) in &rows_b[k] {
                    *row_acc.entry(j).or_default() += va * vb;
                }
                i += 1;
            }
            out.extend(row_acc.iter().map(|(&j, &v)| (row, j, v)));
        }
        Ok(Self::from_triplets(self.dim, out))
    }

    fn rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut rows = vec![Vec::new(); self.dim];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        rows
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `self − other` in absolute value.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `‖H − H†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint()).expect("same dimension")
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// `⟨x|O|y⟩`.
    pub fn matrix_element(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let oy = self.apply(y);
        x.iter().zip(&oy).map(|(a, b)| a.conj() * b).sum()
    }

    /// Real part as a CSR matrix. Fails if any entry has an imaginary part.
    pub fn to_real_csr(&self) -> Option<RealCsr> {
        if self.entries.iter().any(|e| e.2.im != 0.0) {
            return None;
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        for &(r, _, _) in &self.entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Some(RealCsr {
            dim: self.dim,
            row_ptr,
            cols: self.entries.iter().map(|e| e.1).collect(),
            vals: self.entries.iter().map(|e| e.2.re).collect(),
        })
    }

    /// Debug dump: one `row col re im` line per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::with_capacity(self.entries.len() * 40);
        let _ = writeln!(s, "# dim {}", self.dim);
        for &(r, c, v) in &self.entries {
            let _ = writeln!(s, "{r} {c} {:.17e} {:.17e}", v.re, v.im);
        }
        s
    }
}

fn check_dims(a: &SparseOperator, b: &SparseOperator) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
    }
    Ok(())
}

/// Real square matrix in compressed-row form, used for fast mat-vecs.
#[derive(Debug, Clone)]
pub struct RealCsr {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl RealCsr {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

/// Digit-wise view of a product-basis index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Basis {
    pub n_sites: usize,
    pub local_dim: usize,
    pub dim: usize,
}

impl Basis {
    pub fn new(p: &ModelParams) -> Result<Self> {
        Ok(Self { n_sites: p.n_sites, local_dim: p.local_dim(), dim: p.checked_dim()? })
    }

    #[inline]
    pub fn stride(&self, site: usize) -> usize {
        self.local_dim.pow((self.n_sites - 1 - site) as u32)
    }

    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.local_dim
    }
}

/// Embeds `coeff · ⊗_k op_k` (identity on unlisted sites) into the full space.
pub fn embed_product(
    p: &ModelParams,
    coeff: f64,
    factors: &[(usize, &DMatrix<f64>)],
) -> Result<SparseOperator> {
    let basis = Basis::new(p)?;
    for &(site, op) in factors {
        p.check_site(site)?;
        if op.nrows() != basis.local_dim || op.ncols() != basis.local_dim {
            return Err(Error::DimensionMismatch { left: op.nrows(), right: basis.local_dim });
        }
    }
    let mut out = Vec::new();
    for col in 0..basis.dim {
        // Expand column `col` through each factor in turn.
        let mut terms = vec![(col, coeff)];
        for &(site, op) in factors {
            let stride = basis.stride(site);
            let mut next = Vec::with_capacity(terms.len() * 2);
            for &(idx, amp) in &terms {
                let l = basis.digit(idx, site);
                for r in 0..basis.local_dim {
                    let v = op[(r, l)];
                    if v != 0.0 {
                        next.push((idx - l * stride + r * stride, amp * v));
                    }
                }
            }
            terms = next;
        }
        out.extend(terms.into_iter().map(|(row, v)| (row, col, Complex64::new(v, 0.0))));
    }
    Ok(SparseOperator::from_triplets(basis.dim, out))
}

/// Single-site operator embedded at `site`.
pub fn site_operator(p: &ModelParams, site: usize, op: &DMatrix<f64>) -> Result<SparseOperator> {
    embed_product(p, 1.0, &[(site, op)])
}

/// The full Ising-Rabi Hamiltonian on an open chain.
pub fn build_hamiltonian(p: &ModelParams) -> Result<SparseOperator> {
    let basis = Basis::new(p)?;
    let nf = p.n_fock;
    let mut trip = Vec::with_capacity(basis.dim * (1 + 2 * p.n_sites));
    let mut digits = vec![0usize; p.n_sites];
    for b in 0..basis.dim {
        for (j, d) in digits.iter_mut().enumerate() {
            *d = basis.digit(b, j);
        }
        let mut diag = 0.0;
        for j in 0..p.n_sites {
            let (_, n) = split_local(digits[j], nf);
            diag += p.delta * n as f64;
            if j + 1 < p.n_sites {
                let sz = spin_sign(digits[j] / nf) * spin_sign(digits[j + 1] / nf);
                diag -= p.j_ising * sz;
            }
        }
        if diag != 0.0 {
            trip.push((b, b, Complex64::new(diag, 0.0)));
        }
        if p.g != 0.0 {
            for (j, &l) in digits.iter().enumerate() {
                let (s, n) = split_local(l, nf);
                let stride = basis.stride(j);
                let base = b - l * stride;
                let flipped = 1 - s;
                if n > 0 {
                    let row = base + (flipped * nf + n - 1) * stride;
                    trip.push((row, b, Complex64::new(p.g * (n as f64).sqrt(), 0.0)));
                }
                if n + 1 < nf {
                    let row = base + (flipped * nf + n + 1) * stride;
                    trip.push((row, b, Complex64::new(p.g * ((n + 1) as f64).sqrt(), 0.0)));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim, trip))
}

/// Nearest-neighbour product term `coupling · left ⊗ right`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondTerm {
    pub coupling: f64,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

/// The Hamiltonian as on-site blocks plus bond products, the form DMRG uses.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTermList {
    pub params: ModelParams,
    pub site_terms: Vec<DMatrix<f64>>,
    pub bond_terms: Vec<BondTerm>,
}

impl LocalTermList {
    pub fn assemble(&self) -> Result<SparseOperator> {
        let p = &self.params;
        let mut h = SparseOperator::from_triplets(p.checked_dim()?, std::iter::empty());
        for (j, t) in self.site_terms.iter().enumerate() {
            h = h.add(&embed_product(p, 1.0, &[(j, t)])?)?;
        }
        for (j, b) in self.bond_terms.iter().enumerate() {
            h = h.add(&embed_product(p, b.coupling, &[(j, &b.left), (j + 1, &b.right)])?)?;
        }
        Ok(h)
    }
}

pub fn build_local_terms(p: &ModelParams) -> Result<LocalTermList> {
    p.validate()?;
    let site = local::site_hamiltonian(p);
    let sz = local::sigma_z(p.n_fock);
    Ok(LocalTermList {
        params: *p,
        site_terms: vec![site; p.n_sites],
        bond_terms: (0..p.n_sites - 1)
            .map(|_| BondTerm { coupling: -p.j_ising, left: sz.clone(), right: sz.clone() })
            .collect(),
    })
}

/// Phase of the local gauge transformation on a single basis state:
/// `exp[iπ(n + σᶻ/2)] = (−1)ⁿ · (±i)`.
#[inline]
pub fn gauge_phase(local: usize, n_fock: usize) -> Complex64 {
    let (s, n) = split_local(local, n_fock);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::new(0.0, sign * spin_sign(s))
}

/// Local Z2 gauge operator `exp[iπ(a†a + σᶻ/2)]` at `site` (0-based).
pub fn gauge_operator(p: &ModelParams, site: usize) -> Result<SparseOperator> {
    p.check_site(site)?;
    let basis = Basis::new(p)?;
    Ok(SparseOperator {
        dim: basis.dim,
        entries: (0..basis.dim)
            .map(|b| (b, b, gauge_phase(basis.digit(b, site), p.n_fock)))
            .collect(),
    })
}

/// Global parity `exp[iπ Σ σˣ/2] = iᴺ ∏ σˣ`.
pub fn parity_operator(p: &ModelParams) -> Result<SparseOperator> {
    let basis = Basis::new(p)?;
    let phase = Complex64::new(0.0, 1.0).powu(p.n_sites as u32);
    let trip = (0..basis.dim).map(|b| (flip_all_spins(&basis, p.n_fock, b), b, phase));
    Ok(SparseOperator::from_triplets(basis.dim, trip))
}

pub(crate) fn flip_all_spins(basis: &Basis, n_fock: usize, index: usize) -> usize {
    let mut out = 0;
    for j in 0..basis.n_sites {
        let l = basis.digit(index, j);
        let flipped = if l >= n_fock { l - n_fock } else { l + n_fock };
        out += flipped * basis.stride(j);
    }
    out
}

/// `‖AB − BA‖_max`.
pub fn commutator_norm(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    a.matmul(b)?.max_abs_diff(&b.matmul(a)?)
}

/// Local basis indices of one uniform gauge sector.
///
/// Sector `Even` collects (↑, even n) and (↓, odd n), where the gauge operator
/// equals `+i`; `Odd` is the complement (`−i`). The Hamiltonian never mixes
/// the two classes on any site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeClass {
    Even,
    Odd,
}

impl GaugeClass {
    pub fn of_local(local: usize, n_fock: usize) -> Self {
        let (s, n) = split_local(local, n_fock);
        if (s + n) % 2 == 0 {
            GaugeClass::Even
        } else {
            GaugeClass::Odd
        }
    }

    pub fn local_indices(self, n_fock: usize) -> Vec<usize> {
        (0..2 * n_fock).filter(|&l| Self::of_local(l, n_fock) == self).collect()
    }

    pub fn flipped(self) -> Self {
        match self {
            GaugeClass::Even => GaugeClass::Odd,
            GaugeClass::Odd => GaugeClass::Even,
        }
    }
}
