//! Shared fixtures for the benchmarks.

use rabi_lattice::{DmrgConfig, ModelParams};

/// Short chain small enough for exact diagonalization.
pub fn small_chain(g: f64) -> ModelParams {
    ModelParams::new(4, 1.0, g, 1.0, 4).expect("valid parameters")
}

/// Mid-size chain for DMRG sweeps.
pub fn dmrg_chain(g: f64) -> ModelParams {
    ModelParams::new(16, 0.5, g, 1.0, 6).expect("valid parameters")
}

pub fn dmrg_config() -> DmrgConfig {
    DmrgConfig { max_bond: 10, ..DmrgConfig::default() }
}
