use std::path::Path;
use std::process::{Command, Output};

use rabi_lattice::analysis::CSV_HEADER;
use rabi_lattice::ScanTable;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rabi-lattice"));
    c.env_remove("RABI_LATTICE_JOBS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ed_default_config_schema() {
    let v = stdout_json(&run(&["ed"]));
    for key in ["energies", "n", "sigma_x", "sigma_z", "gap", "elitzur_max"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["sigma_x"].as_array().unwrap().len(), 3);
    assert!(v["gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn bo_scan_csv_format() {
    let out = run(&["scan", "--method", "bo", "--delta", "1", "--g", "0.5:1.5:0.02"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 51);
    let table = ScanTable::from_csv(&text).unwrap();
    assert!(table.rows.iter().all(|r| r.dn_dg.is_some() && r.flags.is_empty()));
    // Past the curvature flip at g = 1 the displacement turns on.
    assert_eq!(table.rows[0].n, 0.0);
    assert!(table.rows.last().unwrap().n > 1.0);
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "schema_version = 1\n[model]\nn_site = 3\n");
    let out = run(&["--config", &cfg, "ed"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_site"));
}

#[test]
fn bad_values_are_config_errors() {
    assert_eq!(run(&["ed", "--n-sites", "1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--g", "1:0:0.1"]).status.code(), Some(2));
    assert_eq!(run(&["ed", "--no-such-flag"]).status.code(), Some(2));
    let out = bin().env("RABI_LATTICE_JOBS", "0").args(["scan", "--g", "0.5:0.6:0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_errors_exit_1() {
    // δ = 0 has no dressed-ferro energy.
    let out = run(&["pt", "--delta", "0", "--g", "0.1"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "schema_version = 1\n[model]\nn_sites = 4\ng = 0.9\n");
    let from_file = stdout_json(&run(&["--config", &cfg, "ed"]));
    assert_eq!(from_file["sigma_x"].as_array().unwrap().len(), 4);
    let overridden = stdout_json(&run(&["--config", &cfg, "ed", "--n-sites", "2"]));
    assert_eq!(overridden["sigma_x"].as_array().unwrap().len(), 2);
}

#[test]
fn outputs_are_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["scan", "--method", "sh", "--delta", "0.2,2", "--g", "0:1:0.05", "-o", p.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn jobs_do_not_change_results() {
    let args = ["scan", "--method", "ed", "--n-sites", "3", "--n-fock", "4", "--delta", "0.5,1", "--g", "0.2:0.6:0.2"];
    let one = bin().env("RABI_LATTICE_JOBS", "1").args(args).output().unwrap();
    let three = bin().args(args).args(["--jobs", "3"]).output().unwrap();
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn dmrg_json_and_checkpoint_restart() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("state.mps");
    let args = ["dmrg", "--n-sites", "6", "--n-fock", "3", "--delta", "1", "--g", "0.5", "--max-bond", "8"];
    let out = run(&[&args[..], &["--checkpoint", ckpt.to_str().unwrap()]].concat());
    let v = stdout_json(&out);
    for key in ["energy", "n", "converged", "sweeps", "max_discarded_weight"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["converged"], true);
    let bytes = std::fs::read(&ckpt).unwrap();
    assert_eq!(&bytes[..8], b"RABIMPS\0");

    let again = stdout_json(&run(&[&args[..], &["--init", ckpt.to_str().unwrap()]].concat()));
    let (e0, e1) = (v["energy"].as_f64().unwrap(), again["energy"].as_f64().unwrap());
    assert!((e0 - e1).abs() < 1e-8);
    assert!(again["sweeps"].as_u64().unwrap() <= v["sweeps"].as_u64().unwrap());

    let ed = stdout_json(&run(&["ed", "--n-sites", "6", "--n-fock", "3", "--delta", "1", "--g", "0.5"]));
    assert!((ed["energies"][0].as_f64().unwrap() - e0).abs() < 1e-6);
}

#[test]
fn fits_read_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    // Logistic steps centred on g_c = δ^{2/3}, with χ = 1/δ.
    for d in [0.3f64, 0.5, 0.7, 0.9] {
        let gc = d.powf(2.0 / 3.0);
        for k in 0..21 {
            let g = 0.2 + 0.05 * k as f64;
            let n = 1.0 / (1.0 + (-(g - gc) / 0.03).exp());
            csv.push_str(&format!("{d},{g},dmrg,0,{n},,{},\n", 1.0 / d));
        }
    }
    let input = write(dir.path(), "scan.csv", &csv);
    let crit = stdout_json(&run(&["fit-critical", "--input", &input]));
    let slope = crit["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 2.0 / 3.0).abs() < 0.05, "{slope}");
    let chi = stdout_json(&run(&["fit-chi", "--input", &input]));
    assert!((chi["fit"]["slope"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(chi["fit"]["r_squared"].as_f64().unwrap() > 0.999);
}

#[test]
fn ion_plan_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("plan.txt");
    let out = run(&["ion-plan", "--summary", summary.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert!(v["feasibility_flags"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let text = std::fs::read_to_string(&summary).unwrap();
    assert!(text.contains("[PASS]"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exchange J"));
}

#[test]
fn ion_spec_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let body = "schema_version = 1\n[ion]\nn_ions = 2\nspacing_d0 = 3e-5\nion_mass = 1.5e-26\nomega_z = 3.1e6\n\
                omega_x_pattern = [6.2e7]\nlaser_wavelength_axial = 8.7e-7\nlaser_wavelength_transverse = 3.2e-7\n\
                gz_force = 6.2e5\ngx_force = 6.2e5\naxial_detuning_factor = 2.0\n";
    let cfg = write(dir.path(), "ion.toml", body);
    let v = stdout_json(&run(&["--config", &cfg, "ion-plan"]));
    assert!(v["j_effective"].as_f64().unwrap() > 0.0);
    assert_eq!(v["axial_mode_frequencies"].as_array().unwrap().len(), 2);
    let bad = write(dir.path(), "bad.toml", &body.replace("n_ions = 2", "n_ions = 2\nspecies = \"Be\""));
    let out = run(&["--config", &bad, "ion-plan"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("species"));
}

#[test]
fn reproduce_light_figures_and_budget_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for fig in ["fig2", "table_vi"] {
        let out = run(&["reproduce", fig, "--out-dir", d]);
        assert!(out.status.success(), "{fig}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(format!("{fig}_metadata.json")).exists());
    }
    let fig2 = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert_eq!(fig2.lines().count(), 1 + 5 * 251);
    for fig in ["fig4", "fig5", "fig6", "fig7"] {
        let out = run(&["reproduce", fig, "--out-dir", d]);
        assert_eq!(out.status.code(), Some(2), "{fig}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--long-run"));
    }
}
