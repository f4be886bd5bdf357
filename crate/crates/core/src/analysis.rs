//! Parameter scans over `(δ, g)`, numerical derivatives, correlation
//! lengths and the power-law fits of the critical line.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmrg::{run_dmrg, DmrgConfig, DmrgRun, MpsState};
use crate::error::{Error, Result};
use crate::exact;
use crate::model::ModelParams;
use crate::variational;

/// `|n_forward − n_backward|` above which a DMRG point is flagged.
pub const HYSTERESIS_TOL: f64 = 1e-7;
/// Correlator magnitudes at or below this are treated as noise.
pub const CORRELATION_FLOOR: f64 = 1e-12;

pub const FLAG_CUTOFF: &str = "cutoff";
pub const FLAG_HYSTERESIS: &str = "hysteresis";
pub const FLAG_UNCONVERGED: &str = "unconverged";
pub const FLAG_ERROR: &str = "error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ed,
    Bo,
    Sh,
    Dmrg,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ed => "ed",
            Method::Bo => "bo",
            Method::Sh => "sh",
            Method::Dmrg => "dmrg",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ed" => Ok(Method::Ed),
            "bo" => Ok(Method::Bo),
            "sh" => Ok(Method::Sh),
            "dmrg" => Ok(Method::Dmrg),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// One grid point. `energy` is the total energy of the `N`-site chain
/// (the Born-Oppenheimer value is `N` times its per-site energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub delta: f64,
    pub g: f64,
    pub method: Method,
    pub energy: f64,
    pub n: f64,
    pub dn_dg: Option<f64>,
    pub chi: Option<f64>,
    pub flags: Vec<String>,
    /// `(separation, C_z)` from the centre site, when the method provides it.
    #[serde(skip)]
    pub cz_decay: Option<Vec<(usize, f64)>>,
}

impl ScanRow {
    fn new(delta: f64, g: f64, method: Method) -> Self {
        Self {
            delta,
            g,
            method,
            energy: f64::NAN,
            n: f64::NAN,
            dn_dg: None,
            chi: None,
            flags: Vec::new(),
            cz_decay: None,
        }
    }

    fn fail(mut self, err: &Error) -> Self {
        self.flags.push(format!("{FLAG_ERROR}:{}", err.to_string().replace([',', ';'], " ")));
        self
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag || f.starts_with(&format!("{flag}:")))
    }

    /// Rows that may enter derivatives and fits.
    pub fn usable(&self) -> bool {
        self.n.is_finite() && !self.has_flag(FLAG_CUTOFF) && !self.has_flag(FLAG_ERROR)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub deltas: Vec<f64>,
    pub g_lo: f64,
    pub g_hi: f64,
    pub g_step: f64,
    pub n_sites: usize,
    pub n_fock: usize,
    pub j_ising: f64,
    pub max_bond: Option<usize>,
}

impl ScanGrid {
    pub fn g_values(&self) -> Vec<f64> {
        g_grid(self.g_lo, self.g_hi, self.g_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub grid: ScanGrid,
    pub rows: Vec<ScanRow>,
}

pub const CSV_HEADER: &str = "delta,g,method,energy,n,dn_dg,chi,flags";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl ScanTable {
    /// Rows of one `δ` block in grid order.
    pub fn block(&self, delta: f64) -> Vec<&ScanRow> {
        self.rows.iter().filter(|r| r.delta == delta).collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.delta) {
                out.push(r.delta);
            }
        }
        out
    }

    /// Checks that `g` is strictly increasing inside each `δ` block and that
    /// no `(δ, g)` pair repeats.
    pub fn check_order(&self) -> Result<()> {
        for d in self.deltas() {
            let block = self.block(d);
            for w in block.windows(2) {
                if w[1].g <= w[0].g {
                    return Err(Error::InvalidParams(format!(
                        "g not strictly increasing at delta = {d}, g = {}",
                        w[1].g
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                num(r.delta),
                num(r.g),
                r.method,
                num(r.energy),
                num(r.n),
                opt(r.dn_dg),
                opt(r.chi),
                r.flags.join(";")
            );
        }
        s
    }

    /// Parses the CSV written by [`ScanTable::to_csv`]. Grid metadata that the
    /// CSV does not carry is reconstructed from the rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidParams("empty CSV".into()))?;
        if header.trim() != CSV_HEADER {
            return Err(Error::InvalidParams(format!("unexpected CSV header {header:?}")));
        }
        let parse = |field: &str, line: usize| -> Result<f64> {
            field
                .parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("line {line}: bad number {field:?}")))
        };
        let parse_opt = |field: &str, line: usize| -> Result<Option<f64>> {
            if field.is_empty() {
                Ok(None)
            } else {
                parse(field, line).map(Some)
            }
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let f: Vec<&str> = line.splitn(8, ',').collect();
            if f.len() != 8 {
                return Err(Error::InvalidParams(format!("line {lineno}: expected 8 fields")));
            }
            rows.push(ScanRow {
                delta: parse(f[0], lineno)?,
                g: parse(f[1], lineno)?,
                method: f[2].parse()?,
                energy: parse(f[3], lineno)?,
                n: parse(f[4], lineno)?,
                dn_dg: parse_opt(f[5], lineno)?,
                chi: parse_opt(f[6], lineno)?,
                flags: f[7].split(';').filter(|s| !s.is_empty()).map(str::to_string).collect(),
                cz_decay: None,
            });
        }
        let deltas = {
            let mut d: Vec<f64> = Vec::new();
            for r in &rows {
                if !d.contains(&r.delta) {
                    d.push(r.delta);
                }
            }
            d
        };
        let gs: Vec<f64> = rows.iter().map(|r| r.g).collect();
        let g_lo = gs.iter().copied().fold(f64::INFINITY, f64::min);
        let g_hi = gs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g_step = rows
            .windows(2)
            .filter(|w| w[0].delta == w[1].delta)
            .map(|w| w[1].g - w[0].g)
            .next()
            .unwrap_or(0.0);
        let table = Self {
            grid: ScanGrid {
                deltas,
                g_lo,
                g_hi,
                g_step,
                n_sites: 0,
                n_fock: 0,
                j_ising: f64::NAN,
                max_bond: None,
            },
            rows,
        };
        table.check_order()?;
        Ok(table)
    }
}

/// `lo, lo + step, …` up to `hi` (inclusive within rounding).
pub fn g_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub dmrg: DmrgConfig,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    /// Run the DMRG warm-start chain in both directions along `g` and keep
    /// the lower energy at each point.
    pub bidirectional: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { dmrg: DmrgConfig::default(), jobs: 0, bidirectional: true }
    }
}

fn point_row(p: &ModelParams, method: Method) -> ScanRow {
    let row = ScanRow::new(p.delta, p.g, method);
    let result = match method {
        Method::Ed => exact::ground_space(p, 1).and_then(|gs| {
            let state = exact::symmetry_resolved_ground_state(p)?;
            let obs = exact::observables(&state, p)?;
            Ok((gs.energies[0], obs.n, Some(obs.cz_decay())))
        }),
        Method::Bo => variational::minimize_bo(p).map(|r| (r.energy_per_site * p.n_sites as f64, r.n, None)),
        Method::Sh => variational::minimize_sh(p).map(|r| (r.energy, r.n, None)),
        Method::Dmrg => unreachable!("DMRG rows come from warm-start chains"),
    };
    match result {
        Ok((energy, n, cz)) => {
            let mut row = ScanRow { energy, n, ..row };
            if let Some(profile) = cz {
                row.chi = correlation_length(&profile).ok();
                row.cz_decay = Some(profile);
            }
            row
        }
        Err(e) => row.fail(&e),
    }
}

fn dmrg_row(p: &ModelParams, run: &DmrgRun) -> ScanRow {
    let mut row = ScanRow::new(p.delta, p.g, Method::Dmrg);
    row.energy = run.energy;
    row.n = run.observables.n;
    if !run.converged {
        row.flags.push(FLAG_UNCONVERGED.into());
    }
    if !run.respects_cutoff(p) {
        row.flags.push(FLAG_CUTOFF.into());
    }
    let profile = run.observables.cz_decay();
    row.chi = correlation_length(&profile).ok();
    row.cz_decay = Some(profile);
    row
}

/// Warm-started DMRG along `gs`; each point starts from the previous state.
fn dmrg_chain(base: &ModelParams, gs: &[f64], cfg: &DmrgConfig) -> Vec<Result<DmrgRun>> {
    let mut prev: Option<MpsState> = None;
    gs.iter()
        .map(|&g| {
            let p = base.with_g(g);
            let run = run_dmrg(&p, cfg, prev.as_ref());
            if let Ok(r) = &run {
                prev = Some(r.state.clone());
            }
            run
        })
        .collect()
}

fn dmrg_block(base: &ModelParams, gs: &[f64], opts: &ScanOptions) -> Vec<ScanRow> {
    let forward = dmrg_chain(base, gs, &opts.dmrg);
    let backward = if opts.bidirectional {
        let rev: Vec<f64> = gs.iter().rev().copied().collect();
        let mut b = dmrg_chain(base, &rev, &opts.dmrg);
        b.reverse();
        Some(b)
    } else {
        None
    };
    gs.iter()
        .enumerate()
        .map(|(i, &g)| {
            let p = base.with_g(g);
            let f = &forward[i];
            let b = backward.as_ref().map(|b| &b[i]);
            match (f, b) {
                (Ok(fr), Some(Ok(br))) => {
                    let best = if br.energy < fr.energy { br } else { fr };
                    let mut row = dmrg_row(&p, best);
                    if (fr.observables.n - br.observables.n).abs() > HYSTERESIS_TOL {
                        row.flags.push(FLAG_HYSTERESIS.into());
                    }
                    row
                }
                (Ok(r), None) | (Ok(r), Some(Err(_))) | (Err(_), Some(Ok(r))) => dmrg_row(&p, r),
                (Err(e), _) => ScanRow::new(p.delta, g, Method::Dmrg).fail(e),
            }
        })
        .collect()
}

/// Order parameter over a `(δ, g)` grid. Per-point failures are recorded in
/// the row flags and the scan continues. Rows come back in grid order.
pub fn scan_order_parameter(
    deltas: &[f64],
    g_range: (f64, f64, f64),
    p_base: &ModelParams,
    method: Method,
    opts: &ScanOptions,
) -> Result<ScanTable> {
    let (lo, hi, step) = g_range;
    if !(step > 0.0 && step.is_finite()) || !(lo.is_finite() && hi >= lo) || lo < 0.0 {
        return Err(Error::InvalidParams(format!("bad g range {lo}:{hi}:{step}")));
    }
    if deltas.is_empty() {
        return Err(Error::InvalidParams("no delta values".into()));
    }
    for (i, d) in deltas.iter().enumerate() {
        if deltas[..i].contains(d) {
            return Err(Error::InvalidParams(format!("duplicate delta {d}")));
        }
        p_base.with_delta(*d).validate()?;
    }
    if method == Method::Ed {
        p_base.checked_dim()?;
    }
    if method == Method::Dmrg {
        opts.dmrg.validate()?;
    }
    let gs = g_grid(lo, hi, step);

    let work = || -> Vec<ScanRow> {
        if method == Method::Dmrg {
            deltas
                .par_iter()
                .map(|&d| dmrg_block(&p_base.with_delta(d), &gs, opts))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        } else {
            let points: Vec<(f64, f64)> =
                deltas.iter().flat_map(|&d| gs.iter().map(move |&g| (d, g))).collect();
            points
                .par_iter()
                .map(|&(d, g)| point_row(&p_base.with_delta(d).with_g(g), method))
                .collect()
        }
    };
    let rows = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };

    Ok(ScanTable {
        grid: ScanGrid {
            deltas: deltas.to_vec(),
            g_lo: lo,
            g_hi: gs.last().copied().unwrap_or(lo),
            g_step: step,
            n_sites: p_base.n_sites,
            n_fock: p_base.n_fock,
            j_ising: p_base.j_ising,
            max_bond: (method == Method::Dmrg).then_some(opts.dmrg.max_bond),
        },
        rows,
    })
}

/// Adds `dn/dg` to every row: central differences inside each `δ` block,
/// second-order one-sided differences at the ends.
pub fn numerical_derivative(table: &ScanTable) -> Result<ScanTable> {
    table.check_order()?;
    let mut out = table.clone();
    for d in table.deltas() {
        let idx: Vec<usize> = (0..out.rows.len()).filter(|&i| out.rows[i].delta == d).collect();
        let g: Vec<f64> = idx.iter().map(|&i| out.rows[i].g).collect();
        let n: Vec<f64> = idx.iter().map(|&i| out.rows[i].n).collect();
        let m = idx.len();
        if m < 2 {
            continue;
        }
        let h = g[1] - g[0];
        for k in 1..m {
            let hk = g[k] - g[k - 1];
            if (hk - h).abs() > 1e-9 * h.abs().max(1.0) {
                return Err(Error::NonUniformGrid { at: g[k] });
            }
        }
        for k in 0..m {
            let v = if m == 2 {
                (n[1] - n[0]) / h
            } else if k == 0 {
                (-3.0 * n[0] + 4.0 * n[1] - n[2]) / (2.0 * h)
            } else if k == m - 1 {
                (3.0 * n[m - 1] - 4.0 * n[m - 2] + n[m - 3]) / (2.0 * h)
            } else {
                (n[k + 1] - n[k - 1]) / (2.0 * h)
            };
            out.rows[idx[k]].dn_dg = v.is_finite().then_some(v);
        }
    }
    Ok(out)
}

/// Peak of `dn/dg` in one `δ` block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativePeak {
    pub delta: f64,
    /// Parabola-refined peak position.
    pub g_peak: f64,
    pub height: f64,
    /// `χ` at the grid point of the raw maximum.
    pub chi: Option<f64>,
}

/// Argmax of `dn/dg` over usable rows, refined by a three-point parabola.
pub fn derivative_peak(table: &ScanTable, delta: f64) -> Option<DerivativePeak> {
    let block = table.block(delta);
    let (k, y0) = block
        .iter()
        .enumerate()
        .filter(|(_, r)| r.usable())
        .filter_map(|(k, r)| r.dn_dg.map(|v| (k, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let mut g_peak = block[k].g;
    let mut height = y0;
    if k > 0 && k + 1 < block.len() {
        if let (Some(ym), Some(yp)) = (block[k - 1].dn_dg, block[k + 1].dn_dg) {
            let h = block[k + 1].g - block[k].g;
            let denom = ym - 2.0 * y0 + yp;
            if denom < 0.0 {
                let off = 0.5 * (ym - yp) / denom;
                g_peak += off * h;
                height = y0 - 0.25 * (ym - yp) * off;
            }
        }
    }
    Some(DerivativePeak { delta, g_peak, height, chi: block[k].chi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub point_count: usize,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let m = points.len();
    if m < 3 {
        return Err(Error::InsufficientPoints(m));
    }
    let mf = m as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("fit abscissae are all equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = points.iter().map(|p| p.1 - (slope * p.0 + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(FitResult { slope, intercept, r_squared, point_count: m, residuals })
}

/// Log-linear fit of `|C_z|` against separation over the leading run of
/// points above the noise floor.
pub fn correlation_fit(cz_profile: &[(usize, f64)]) -> Result<FitResult> {
    let usable: Vec<(f64, f64)> = cz_profile
        .iter()
        .take_while(|(_, c)| c.abs() > CORRELATION_FLOOR && c.is_finite())
        .map(|&(j, c)| (j as f64, c.abs().ln()))
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientDecay { usable: usable.len() });
    }
    linear_fit(&usable)
}

/// `χ = −1/slope` of the log-linear correlator fit.
pub fn correlation_length(cz_profile: &[(usize, f64)]) -> Result<f64> {
    let fit = correlation_fit(cz_profile)?;
    if fit.slope >= 0.0 {
        return Err(Error::InsufficientDecay { usable: fit.point_count });
    }
    Ok(-1.0 / fit.slope)
}

/// Exponent of `g_peak ∼ δ^α` from a log-log fit.
pub fn fit_critical_line(peaks: &[(f64, f64)]) -> Result<FitResult> {
    if peaks.iter().any(|&(d, g)| d <= 0.0 || g <= 0.0) {
        return Err(Error::InvalidParams("critical-line fit needs positive delta and g".into()));
    }
    linear_fit(&peaks.iter().map(|&(d, g)| (d.ln(), g.ln())).collect::<Vec<_>>())
}

/// Linear fit of `1/χ_c` against `δ`.
pub fn fit_chi_scaling(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(_, chi)| chi <= 0.0 || !chi.is_finite()) {
        return Err(Error::InvalidParams("chi values must be positive and finite".into()));
    }
    linear_fit(&points.iter().map(|&(d, chi)| (d, 1.0 / chi)).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> ScanTable {
        let rows = g_grid(lo, hi, step)
            .into_iter()
            .map(|g| ScanRow { energy: 0.0, n: f(g), ..ScanRow::new(1.0, g, Method::Bo) })
            .collect();
        ScanTable {
            grid: ScanGrid {
                deltas: vec![1.0],
                g_lo: lo,
                g_hi: hi,
                g_step: step,
                n_sites: 2,
                n_fock: 2,
                j_ising: 1.0,
                max_bond: None,
            },
            rows,
        }
    }

    #[test]
    fn derivative_of_constant_and_square() {
        let t = numerical_derivative(&synthetic(|_| 3.0, 0.0, 1.0, 0.02)).unwrap();
        assert!(t.rows.iter().all(|r| r.dn_dg == Some(0.0)));
        let t = numerical_derivative(&synthetic(|g| g * g, 0.0, 1.0, 0.02)).unwrap();
        for r in &t.rows {
            assert!((r.dn_dg.unwrap() - 2.0 * r.g).abs() < 1e-10, "{}", r.g);
        }
    }

    #[test]
    fn derivative_rejects_uneven_grid() {
        let mut t = synthetic(|g| g, 0.0, 1.0, 0.1);
        t.rows[5].g += 0.03;
        assert!(matches!(numerical_derivative(&t), Err(Error::NonUniformGrid { .. })));
    }

    #[test]
    fn peak_refinement_finds_parabola_vertex() {
        let t = numerical_derivative(&synthetic(|g| (5.0 * (g - 0.537)).tanh(), 0.0, 1.0, 0.02)).unwrap();
        let peak = derivative_peak(&t, 1.0).unwrap();
        assert!((peak.g_peak - 0.537).abs() < 0.005, "{}", peak.g_peak);
    }

    #[test]
    fn exponential_correlator() {
        let prof: Vec<(usize, f64)> = (1..=25).map(|j| (j, (-(j as f64) / 3.0).exp())).collect();
        assert!((correlation_length(&prof).unwrap() - 3.0).abs() < 1e-6);
        let noisy: Vec<(usize, f64)> =
            (1..=120).map(|j| (j, (-(j as f64) / 3.0).exp() + 1e-13)).collect();
        let chi = correlation_length(&noisy).unwrap();
        assert!((chi / 3.0 - 1.0).abs() < 0.01, "{chi}");
        let short: Vec<(usize, f64)> = vec![(1, 0.1), (2, 0.01), (3, 1e-13)];
        assert_eq!(correlation_length(&short), Err(Error::InsufficientDecay { usable: 2 }));
    }

    #[test]
    fn power_law_fits() {
        let deltas = [0.3f64, 0.5, 0.7, 0.9];
        let sqrt: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, d.sqrt())).collect();
        assert!((fit_critical_line(&sqrt).unwrap().slope - 0.5).abs() < 1e-10);
        let p66: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, d.powf(0.66))).collect();
        assert!((fit_critical_line(&p66).unwrap().slope - 0.66).abs() < 1e-10);
        let chi: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, 2.0 / d)).collect();
        let fit = fit_chi_scaling(&chi).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!(fit.intercept.abs() <= 0.2 * fit.slope * 0.3);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit_chi_scaling(&chi[..2]), Err(Error::InsufficientPoints(2)));
    }

    #[test]
    fn csv_round_trip() {
        let mut t = numerical_derivative(&synthetic(|g| g * g, 0.0, 0.1, 0.02)).unwrap();
        t.rows[2].flags = vec!["cutoff".into(), "hysteresis".into()];
        t.rows[3].chi = Some(4.25);
        let csv = t.to_csv();
        assert!(csv.starts_with("delta,g,method,energy,n,dn_dg,chi,flags\n"));
        let back = ScanTable::from_csv(&csv).unwrap();
        assert_eq!(back.rows, t.rows);
    }

    #[test]
    fn bo_scan_jumps_near_unit_coupling() {
        let p = ModelParams::new(50, 1.0, 0.0, 1.0, 2).unwrap();
        let t = scan_order_parameter(&[1.0], (0.5, 1.5, 0.02), &p, Method::Bo, &ScanOptions::default())
            .unwrap();
        assert_eq!(t.rows.len(), 51);
        let first_positive = t.rows.iter().find(|r| r.n > 0.0).unwrap();
        assert!(first_positive.g > 0.85 && first_positive.g <= 1.0, "{}", first_positive.g);
        assert!(first_positive.n > 0.1);
    }
}
