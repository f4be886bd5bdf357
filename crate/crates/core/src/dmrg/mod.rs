//! Two-site DMRG for the Ising-Rabi chain.
//!
//! By default the sweeps run inside the uniform gauge sector where every
//! site has gauge eigenvalue `+i` (spin ↑ with even occupation, spin ↓ with
//! odd occupation). The Hamiltonian never leaves that sector, the ground
//! doublet always has a component there, and the local dimension halves.
//! Tensors are embedded back into the full `2·n_fock` local space before
//! they are returned.

mod checkpoint;
mod engine;
mod measure;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use engine::{dmrg_ground_state, run_dmrg, DmrgRun};
pub use measure::mps_observables;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmrgConfig {
    /// Bond dimension bound `D`.
    pub max_bond: usize,
    /// Cap on full (left and right) sweeps.
    pub n_sweeps: usize,
    /// Sweep-to-sweep energy tolerance per site; a run stops once
    /// `|ΔE| < energy_tol · N`.
    pub energy_tol: f64,
    /// Trailing singular values are dropped while their total weight stays
    /// below this floor.
    pub svd_floor: f64,
    pub seed: u64,
    /// Sweep inside the uniform `+i` gauge sector.
    pub restrict_gauge_sector: bool,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            max_bond: 10,
            n_sweeps: 50,
            energy_tol: 1e-9,
            svd_floor: 1e-12,
            seed: 0x00d3_a12b,
            restrict_gauge_sector: true,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bond < 2 {
            return Err(Error::InvalidParams("max_bond must be at least 2".into()));
        }
        if !(self.energy_tol > 0.0 && self.energy_tol.is_finite()) {
            return Err(Error::InvalidParams("energy_tol must be positive".into()));
        }
        if !(self.svd_floor >= 0.0 && self.svd_floor < 1.0) {
            return Err(Error::InvalidParams("svd_floor must lie in [0, 1)".into()));
        }
        if self.n_sweeps == 0 {
            return Err(Error::InvalidParams("n_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Rank-3 site tensor `A[left, phys, right]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self { left, phys, right, data: vec![0.0; left * phys * right] }
    }

    #[inline]
    pub fn at(&self, l: usize, s: usize, r: usize) -> f64 {
        self.data[(l * self.phys + s) * self.right + r]
    }
}

/// Open-boundary matrix product state over the full local space.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    pub n_sites: usize,
    pub local_dim: usize,
    pub site_tensors: Vec<SiteTensor>,
    /// `bond_dims[j]` joins sites `j` and `j + 1`.
    pub bond_dims: Vec<usize>,
    /// Sites left of the centre are left-isometries, sites right of it are
    /// right-isometries.
    pub canonical_center: usize,
}

impl MpsState {
    /// Product state with the same local vector on every site.
    pub fn product(n_sites: usize, local: &[f64]) -> Result<Self> {
        let nrm = local.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n_sites < 2 || nrm == 0.0 {
            return Err(Error::InvalidParams("product MPS needs N >= 2 and a non-zero vector".into()));
        }
        let d = local.len();
        let site = SiteTensor { left: 1, phys: d, right: 1, data: local.iter().map(|v| v / nrm).collect() };
        let tensors = vec![site; n_sites];
        Ok(Self {
            n_sites,
            local_dim: d,
            site_tensors: tensors,
            bond_dims: vec![1; n_sites - 1],
            canonical_center: 0,
        })
    }

    /// All spins ↑ᶻ in the boson vacuum.
    pub fn vacuum(p: &ModelParams) -> Result<Self> {
        let mut v = vec![0.0; p.local_dim()];
        v[0] = 1.0;
        Self::product(p.n_sites, &v)
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims.iter().copied().max().unwrap_or(1)
    }

    /// `⟨ψ|ψ⟩`.
    pub fn norm_squared(&self) -> f64 {
        measure::norm_squared(self)
    }

    /// Largest deviation from the isometry conditions around the centre.
    pub fn canonical_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, t) in self.site_tensors.iter().enumerate() {
            if j == self.canonical_center {
                continue;
            }
            let left = j < self.canonical_center;
            let k = if left { t.right } else { t.left };
            for a in 0..k {
                for b in 0..k {
                    let mut s = 0.0;
                    if left {
                        for l in 0..t.left {
                            for p in 0..t.phys {
                                s += t.at(l, p, a) * t.at(l, p, b);
                            }
                        }
                    } else {
                        for p in 0..t.phys {
                            for r in 0..t.right {
                                s += t.at(a, p, r) * t.at(b, p, r);
                            }
                        }
                    }
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((s - target).abs());
                }
            }
        }
        worst
    }

    /// Dense amplitudes in the product basis of [`crate::model`].
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let dim = (self.local_dim as u128).pow(self.n_sites as u32);
        if dim > crate::model::MAX_BASIS_STATES {
            return Err(Error::DimensionOverflow { dim, limit: crate::model::MAX_BASIS_STATES });
        }
        // rows: basis prefix, columns: right bond
        let mut acc = vec![1.0];
        let mut rows = 1usize;
        for t in &self.site_tensors {
            let mut next = vec![0.0; rows * t.phys * t.right];
            for row in 0..rows {
                for l in 0..t.left {
                    let c = acc[row * t.left + l];
                    if c == 0.0 {
                        continue;
                    }
                    for s in 0..t.phys {
                        for r in 0..t.right {
                            next[(row * t.phys + s) * t.right + r] += c * t.at(l, s, r);
                        }
                    }
                }
            }
            acc = next;
            rows *= t.phys;
        }
        Ok(acc)
    }

    pub(crate) fn check_matches(&self, p: &ModelParams) -> Result<()> {
        if self.n_sites != p.n_sites {
            return Err(Error::DimensionMismatch { left: self.n_sites, right: p.n_sites });
        }
        if self.local_dim != p.local_dim() {
            return Err(Error::DimensionMismatch { left: self.local_dim, right: p.local_dim() });
        }
        Ok(())
    }
}
