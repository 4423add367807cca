use paramode::tdse::{evolve_grid, GridSpec, GridWavefunction};
use paramode::{cross_check, evolve, initial_state, DriveSpec, IntegratorConfig};

#[test]
fn undriven_ground_state_is_stationary() {
    let drive = DriveSpec::new(0.05, 0.0, 0.0, 5).unwrap();
    let grid = GridSpec::default();
    for m in drive.modes() {
        let wf = evolve_grid(&m, &drive.timing(), &grid).unwrap();
        let ground = GridWavefunction::from_gaussian(&grid, &initial_state(&m));
        assert!(wf.fidelity(&ground) > 1.0 - 1e-8);
    }
}

#[test]
fn norm_is_conserved() {
    let drive = DriveSpec::new(0.0, 0.05, 0.0, 3).unwrap();
    let [plus, _] = drive.modes();
    let grid = GridSpec {
        steps_per_cycle: 4096,
        ..GridSpec::default()
    };
    let wf = evolve_grid(&plus, &drive.timing(), &grid).unwrap();
    let steps: f64 = 3.0 * 4096.0;
    assert!((wf.norm() - 1.0).abs() < 1e-10 * (steps / 1e4).max(1.0));
}

#[test]
fn driven_packet_stays_gaussian_and_matches_ansatz() {
    let cfg = IntegratorConfig::adaptive(1e-12, 1e-14);
    for (beta0, beta1, detuning) in [(0.0, 0.05, 0.0), (0.05, 0.02, 0.05), (0.05, 0.02, -0.02)] {
        let drive = DriveSpec::new(beta0, beta1, detuning, 10).unwrap();
        for m in drive.modes() {
            let check = cross_check(&m, &drive.timing(), &GridSpec::default(), &cfg, 20).unwrap();
            assert!(check.excess_kurtosis.abs() < 1e-6, "{check:?}");
            assert!(check.fidelity > 1.0 - 1e-6, "{check:?}");
            assert!(check.max_fock_deviation < 1e-6, "{check:?}");
        }
    }
}

#[test]
fn splitting_error_is_second_order() {
    let drive = DriveSpec::new(0.0, 0.05, 0.0, 4).unwrap();
    let [plus, _] = drive.modes();
    let exact = evolve(&plus, &drive.timing(), &IntegratorConfig::adaptive(1e-13, 1e-15)).unwrap();
    let distance = |steps| {
        let grid = GridSpec {
            steps_per_cycle: steps,
            ..GridSpec::default()
        };
        let wf = evolve_grid(&plus, &drive.timing(), &grid).unwrap();
        wf.distance(&GridWavefunction::from_gaussian(&grid, &exact))
    };
    let ratio = distance(1024) / distance(2048);
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}
