//! Datasets behind the published figures.
//!
//! Every figure writes its data files plus `<figure>_metadata.json`, which
//! records the grids and solver settings. The DMRG figures use desk-scale
//! `g` windows around each transition rather than the full published range.

use std::fmt::Write as _;
use std::path::Path;

use rabi_lattice::analysis::{
    derivative_peak, fit_chi_scaling, fit_critical_line, numerical_derivative, scan_order_parameter, DerivativePeak,
    ScanOptions,
};
use rabi_lattice::ionplan::feasibility_report;
use rabi_lattice::variational::bo_energy_per_site;
use rabi_lattice::{DmrgConfig, FitResult, IonChainSpec, Method, ModelParams, ScanTable};
use serde::Serialize;

use crate::output::{json, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// Born-Oppenheimer energy against the displacement.
    Fig2,
    /// Silbey-Harris boson number against g.
    Fig3,
    /// Boson number from DMRG, Born-Oppenheimer and Silbey-Harris.
    Fig4,
    /// dn/dg peaks and the critical-line power law.
    Fig5,
    /// Correlation lengths across each transition.
    Fig6,
    /// Linear fit of 1/chi at the transition.
    Fig7,
    /// Trapped-ion parameter table.
    #[value(name = "table_vi")]
    TableVi,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::TableVi => "table_vi",
        }
    }

    pub fn needs_dmrg(self) -> bool {
        matches!(self, Figure::Fig4 | Figure::Fig5 | Figure::Fig6 | Figure::Fig7)
    }
}

pub const CHAIN_SITES: usize = 50;
pub const CHAIN_FOCK: usize = 10;
pub const CHAIN_BOND: usize = 10;
pub const DMRG_STEP: f64 = 0.02;

/// `(δ, g_lo, g_hi)` windows around the first-order transitions.
pub const DESK_WINDOWS: [(f64, f64, f64); 4] = [(0.3, 0.44, 0.62), (0.5, 0.62, 0.82), (0.7, 0.80, 1.00), (0.9, 0.94, 1.16)];

/// Window in the continuous regime `δ > J`.
pub const LARGE_DELTA_WINDOW: (f64, f64, f64, f64) = (2.0, 1.2, 2.2, 0.05);

const FIG2_COUPLINGS: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];
const FIG3_DELTAS: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];

#[derive(Debug, Serialize)]
struct Metadata {
    figure: Figure,
    description: &'static str,
    files: Vec<String>,
    n_sites: usize,
    j_ising: f64,
    n_fock: Option<usize>,
    dmrg: Option<DmrgConfig>,
    /// `(δ, g_lo, g_hi, g_step)` per block.
    grids: Vec<(f64, f64, f64, f64)>,
    /// `(lo, hi, step)` of the displacement grid, for the energy curves.
    alpha_grid: Option<(f64, f64, f64)>,
    desk_scale: bool,
}

fn chain(delta: f64) -> ModelParams {
    ModelParams { n_sites: CHAIN_SITES, delta, g: 0.0, j_ising: 1.0, n_fock: CHAIN_FOCK }
}

fn dmrg_config() -> DmrgConfig {
    DmrgConfig { max_bond: CHAIN_BOND, ..DmrgConfig::default() }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: String, text: &str) -> Result<(), CliError> {
        write_atomic(&self.dir.join(&name), text.as_bytes())?;
        self.files.push(name);
        Ok(())
    }
}

fn scan(method: Method, windows: &[(f64, f64, f64, f64)], jobs: usize) -> Result<ScanTable, CliError> {
    let opts = ScanOptions { dmrg: dmrg_config(), jobs, bidirectional: true };
    let mut out: Option<ScanTable> = None;
    for &(d, lo, hi, step) in windows {
        let t = numerical_derivative(&scan_order_parameter(&[d], (lo, hi, step), &chain(d), method, &opts)?)?;
        match &mut out {
            None => out = Some(t),
            Some(acc) => {
                acc.grid.deltas.extend(t.grid.deltas);
                acc.rows.extend(t.rows);
            }
        }
    }
    Ok(out.expect("at least one window"))
}

fn desk_windows() -> Vec<(f64, f64, f64, f64)> {
    DESK_WINDOWS.iter().map(|&(d, lo, hi)| (d, lo, hi, DMRG_STEP)).collect()
}

#[derive(Debug, Serialize)]
struct CriticalLine {
    peaks: Vec<DerivativePeak>,
    fit: FitResult,
}

#[derive(Debug, Serialize)]
struct ChiLine {
    points: Vec<(f64, f64)>,
    fit: FitResult,
}

fn peaks(table: &ScanTable) -> Result<Vec<DerivativePeak>, CliError> {
    table
        .deltas()
        .into_iter()
        .map(|d| derivative_peak(table, d).ok_or_else(|| CliError::Failed(format!("no dn/dg peak for delta = {d}"))))
        .collect()
}

/// Writes the datasets for `figure` into `dir`.
pub fn reproduce(figure: Figure, dir: &Path, long_run: bool, jobs: usize) -> Result<(), CliError> {
    if figure.needs_dmrg() && !long_run {
        return Err(CliError::BudgetRefused(format!(
            "{} runs N = {CHAIN_SITES} DMRG scans that take hours; pass --long-run to proceed",
            figure.name()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut w = Writer { dir, files: Vec::new() };
    let name = figure.name();
    let mut meta = Metadata {
        figure,
        description: "",
        files: Vec::new(),
        n_sites: CHAIN_SITES,
        j_ising: 1.0,
        n_fock: None,
        dmrg: None,
        grids: Vec::new(),
        alpha_grid: None,
        desk_scale: false,
    };
    match figure {
        Figure::Fig2 => {
            meta.description = "Born-Oppenheimer energy per site against alpha for delta = J = 1";
            meta.grids = FIG2_COUPLINGS.iter().map(|&g| (1.0, g, g, 0.0)).collect();
            meta.alpha_grid = Some((0.0, 2.5, 0.01));
            let mut csv = String::from("g,alpha,energy_per_site\n");
            for &g in &FIG2_COUPLINGS {
                let p = ModelParams { g, delta: 1.0, ..chain(1.0) };
                for i in 0..=250 {
                    let a = i as f64 * 0.01;
                    writeln!(csv, "{g:.16e},{a:.16e},{:.16e}", bo_energy_per_site(a, &p)).expect("string write");
                }
            }
            w.put(format!("{name}.csv"), &csv)?;
        }
        Figure::Fig3 => {
            meta.description = "Silbey-Harris mean boson number against g";
            meta.grids = FIG3_DELTAS.iter().map(|&d| (d, 0.0, 3.0, 0.01)).collect();
            w.put(format!("{name}.csv"), &scan(Method::Sh, &meta.grids, jobs)?.to_csv())?;
        }
        Figure::Fig4 | Figure::Fig5 | Figure::Fig6 | Figure::Fig7 => {
            meta.n_fock = Some(CHAIN_FOCK);
            meta.dmrg = Some(dmrg_config());
            meta.desk_scale = true;
            meta.grids = desk_windows();
            if figure == Figure::Fig4 {
                meta.grids.push(LARGE_DELTA_WINDOW);
            }
            let dmrg = scan(Method::Dmrg, &meta.grids, jobs)?;
            match figure {
                Figure::Fig4 => {
                    meta.description = "Mean boson number from DMRG, Born-Oppenheimer and Silbey-Harris";
                    w.put(format!("{name}_dmrg.csv"), &dmrg.to_csv())?;
                    w.put(format!("{name}_bo.csv"), &scan(Method::Bo, &meta.grids, jobs)?.to_csv())?;
                    w.put(format!("{name}_sh.csv"), &scan(Method::Sh, &meta.grids, jobs)?.to_csv())?;
                }
                Figure::Fig5 => {
                    meta.description = "dn/dg from DMRG and the power-law fit of the peak positions";
                    w.put(format!("{name}_dmrg.csv"), &dmrg.to_csv())?;
                    w.put(format!("{name}_bo.csv"), &scan(Method::Bo, &meta.grids, jobs)?.to_csv())?;
                    w.put(format!("{name}_sh.csv"), &scan(Method::Sh, &meta.grids, jobs)?.to_csv())?;
                    let peaks = peaks(&dmrg)?;
                    let pts: Vec<(f64, f64)> = peaks.iter().map(|k| (k.delta, k.g_peak)).collect();
                    let fit = fit_critical_line(&pts)?;
                    w.put(format!("{name}_critical_line.json"), &json(&CriticalLine { peaks, fit }))?;
                }
                Figure::Fig6 => {
                    meta.description = "Correlation length from the C_z decay across each transition";
                    let mut csv = String::from("delta,g,chi\n");
                    for r in &dmrg.rows {
                        if let Some(chi) = r.chi {
                            writeln!(csv, "{:.16e},{:.16e},{chi:.16e}", r.delta, r.g).expect("string write");
                        }
                    }
                    w.put(format!("{name}.csv"), &csv)?;
                }
                _ => {
                    meta.description = "Linear fit of 1/chi at the dn/dg peak against delta";
                    let mut points = Vec::new();
                    for k in peaks(&dmrg)? {
                        let chi =
                            k.chi.ok_or_else(|| CliError::Failed(format!("no chi at the delta = {} peak", k.delta)))?;
                        points.push((k.delta, chi));
                    }
                    let fit = fit_chi_scaling(&points)?;
                    w.put(format!("{name}.json"), &json(&ChiLine { points, fit }))?;
                }
            }
        }
        Figure::TableVi => {
            meta.description = "Trapped-ion implementation parameters for fifty beryllium ions";
            let report = feasibility_report(&IonChainSpec::beryllium_reference())?;
            w.put(format!("{name}.json"), &json(&report))?;
            w.put(format!("{name}.txt"), &report.summary_text())?;
        }
    }
    meta.files = w.files.clone();
    w.put(format!("{name}_metadata.json"), &json(&meta))?;
    Ok(())
}
