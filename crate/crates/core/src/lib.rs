//! Ground-state physics of the one-dimensional Ising-Rabi lattice
//!
//! ```text
//! H = δ Σ a†a + g Σ σˣ(a† + a) − J Σ σᶻσᶻ
//! ```
//!
//! on an open chain, computed with several independent methods that check
//! each other:
//!
//! * [`model`]: sparse Hamiltonian, local Z2 gauge operators and the global parity.
//! * [`exact`]: Lanczos / dense exact diagonalization for small chains.
//! * [`perturbative`]: closed-form ferromagnetic and dressed-ferromagnetic energies.
//! * [`variational`]: Born-Oppenheimer and Silbey-Harris mean-field solvers.
//! * [`dmrg`]: two-site DMRG over matrix product states.
//! * [`analysis`]: parameter scans, derivatives, correlation lengths and power-law fits.
//! * [`ionplan`]: trapped-ion microtrap parameters and feasibility checks.

pub mod analysis;
pub mod dmrg;
mod error;
pub mod exact;
pub mod ionplan;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod perturbative;
pub mod special;
pub mod variational;

pub use analysis::{FitResult, Method, ScanRow, ScanTable};
pub use dmrg::{DmrgConfig, MpsState};
pub use error::{Error, Result};
pub use exact::{DenseState, EigenResult};
pub use ionplan::{IonChainSpec, IonPlanReport};
pub use model::{ModelParams, SparseOperator};
pub use observables::ObservableSet;
pub use variational::{BoResult, ShResult};
