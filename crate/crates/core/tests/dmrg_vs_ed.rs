use rabi_lattice::dmrg::{dmrg_ground_state, mps_observables, run_dmrg};
use rabi_lattice::exact::{self, DenseState};
use rabi_lattice::model::GaugeClass;
use rabi_lattice::{DmrgConfig, ModelParams, ObservableSet};

fn cfg(d: usize) -> DmrgConfig {
    DmrgConfig { max_bond: d, ..DmrgConfig::default() }
}

fn max_diff(a: &ObservableSet, b: &ObservableSet) -> f64 {
    let mut worst: f64 = (a.n - b.n).abs();
    let pairs = [
        (&a.boson_number, &b.boson_number),
        (&a.sigma_x, &b.sigma_x),
        (&a.sigma_z, &b.sigma_z),
        (&a.cz_profile, &b.cz_profile),
    ];
    for (x, y) in pairs {
        for (u, v) in x.iter().zip(y.iter()) {
            worst = worst.max((u - v).abs());
        }
    }
    for (u, v) in a.a.iter().zip(&b.a) {
        worst = worst.max((u - v).norm());
    }
    worst
}

#[test]
fn energy_and_observables_match_exact_diagonalization() {
    for g in [0.3, 1.0] {
        let p = ModelParams::new(4, 1.0, g, 1.0, 4).unwrap();
        let e_ed = exact::ground_space(&p, 1).unwrap().energies[0];
        let (state, e) = dmrg_ground_state(&p, &cfg(16)).unwrap();
        assert!((e - e_ed).abs() <= 1e-6, "g={g}: {e} vs {e_ed}");
        assert!(e >= e_ed - 1e-9);
        let ed_state = exact::sector_ground_state(&p, GaugeClass::Even).unwrap();
        let diff = max_diff(&mps_observables(&state, &p).unwrap(), &exact::observables(&ed_state, &p).unwrap());
        assert!(diff <= 1e-8, "g={g}: observables differ by {diff}");
    }
}

#[test]
fn six_site_observables_match() {
    let p = ModelParams::new(6, 0.8, 0.7, 1.0, 3).unwrap();
    let (state, e) = dmrg_ground_state(&p, &cfg(32)).unwrap();
    let e_ed = exact::ground_space(&p, 1).unwrap().energies[0];
    assert!((e - e_ed).abs() <= 1e-8, "{e} vs {e_ed}");
    let ed_state = exact::sector_ground_state(&p, GaugeClass::Even).unwrap();
    let diff = max_diff(&mps_observables(&state, &p).unwrap(), &exact::observables(&ed_state, &p).unwrap());
    assert!(diff <= 1e-8, "{diff}");
}

#[test]
fn dense_contraction_reproduces_sector_state() {
    let p = ModelParams::new(4, 1.0, 0.6, 1.0, 3).unwrap();
    let (state, _) = dmrg_ground_state(&p, &cfg(16)).unwrap();
    let dense = DenseState::from_real(&state.to_dense().unwrap()).unwrap();
    let ed = exact::sector_ground_state(&p, GaugeClass::Even).unwrap();
    assert!((dense.inner(&ed).norm() - 1.0).abs() < 1e-8);
}

#[test]
fn full_space_sweeps_reach_the_same_energy() {
    let p = ModelParams::new(4, 0.6, 0.8, 1.0, 3).unwrap();
    let e_ed = exact::ground_space(&p, 1).unwrap().energies[0];
    let full = DmrgConfig { restrict_gauge_sector: false, ..cfg(24) };
    let (_, e) = dmrg_ground_state(&p, &full).unwrap();
    assert!((e - e_ed).abs() <= 1e-7, "{e} vs {e_ed}");
}

#[test]
fn energy_does_not_rise_with_bond_dimension() {
    let p = ModelParams::new(8, 0.5, 0.75, 1.0, 4).unwrap();
    let mut last = f64::INFINITY;
    for d in [2, 4, 8] {
        let run = run_dmrg(&p, &cfg(d), None).unwrap();
        assert!(run.energy <= last + 1e-9, "D={d}: {} > {last}", run.energy);
        assert!(run.state.max_bond_dim() <= d);
        last = run.energy;
    }
}

#[test]
fn gauge_compliant_and_canonical() {
    let p = ModelParams::new(10, 0.7, 0.8, 1.0, 6).unwrap();
    let run = run_dmrg(&p, &cfg(10), None).unwrap();
    assert!(run.converged);
    assert!(run.observables.elitzur_max() <= 1e-8);
    assert!(run.max_canonical_defect <= 1e-10, "{}", run.max_canonical_defect);
    assert!((run.state.norm_squared() - 1.0).abs() <= 1e-10);
}

#[test]
fn warm_start_agrees_with_random_start() {
    let p = ModelParams::new(10, 1.5, 1.2, 1.0, 8).unwrap();
    let cold = run_dmrg(&p, &cfg(10), None).unwrap();
    let neighbour = run_dmrg(&p.with_g(1.18), &cfg(10), None).unwrap();
    let warm = run_dmrg(&p, &cfg(10), Some(&neighbour.state)).unwrap();
    assert!((cold.observables.n - warm.observables.n).abs() < 1e-7);
    assert!(warm.sweeps <= cold.sweeps);
}
