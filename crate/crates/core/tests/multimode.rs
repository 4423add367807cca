use std::f64::consts::PI;

use paramode::spectra::Regime;
use paramode::sweep::{evaluate_point, OutputSection, PointRequest};
use paramode::{
    evolve_all, predict_mode_windows, reduce, CouplingMatrices, DriveSpec, DriveTiming, IntegratorConfig, Truncation,
};
use proptest::prelude::*;

/// Eigenvalues of a symmetric 3x3 matrix from the roots of its
/// characteristic polynomial, ascending.
fn cubic_eigenvalues(a: &[Vec<f64>]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (0..3).map(|i| (a[i][i] - q).powi(2)).sum::<f64>() + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

fn ring(diag: f64, off: f64) -> Vec<Vec<f64>> {
    (0..3).map(|i| (0..3).map(|j| if i == j { diag } else { off }).collect()).collect()
}

/// `I + beta0 M` and `beta1 M` for a zero-diagonal symmetric `M` with three
/// distinct eigenvalues, so each normal mode has its own window.
fn triangle(beta0: f64, beta1: f64) -> CouplingMatrices {
    let m = [[0.0, 1.0, 0.4], [1.0, 0.0, -0.7], [0.4, -0.7, 0.0]];
    CouplingMatrices {
        k0: (0..3).map(|i| (0..3).map(|j| f64::from(u8::from(i == j)) + beta0 * m[i][j]).collect()).collect(),
        k1: (0..3).map(|i| (0..3).map(|j| beta1 * m[i][j]).collect()).collect(),
    }
}

// The ring always has a double eigenvalue, which a characteristic
// polynomial only pins down to about the square root of machine precision.
const ROOT_TOL: f64 = 1e-7;

proptest! {
    #[test]
    fn ring_matches_characteristic_roots(beta0 in 0.01f64..0.3, beta1 in 0.0f64..0.05) {
        let cm = CouplingMatrices { k0: ring(1.0, beta0), k1: ring(0.0, beta1) };
        let red = reduce(&cm, 1e-10).unwrap();
        let mut got0 = red.lambda0.clone();
        got0.sort_by(f64::total_cmp);
        let want0 = cubic_eigenvalues(&cm.k0);
        for (g, w) in got0.iter().zip(want0) {
            prop_assert!((g - w).abs() < ROOT_TOL, "{} vs {}", g, w);
        }
        let mut got1 = red.lambda1.clone();
        got1.sort_by(f64::total_cmp);
        let want1 = cubic_eigenvalues(&cm.k1);
        for (g, w) in got1.iter().zip(want1) {
            prop_assert!((g - w).abs() < ROOT_TOL, "{} vs {}", g, w);
        }
        // k1 is a function of k0, so each mode's modulation follows its frequency.
        for (l0, l1) in red.lambda0.iter().zip(&red.lambda1) {
            prop_assert!((l1 - beta1 / beta0 * (l0 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn reduction_is_orthogonal_and_reconstructs(beta0 in 0.0f64..0.3, beta1 in 0.0f64..0.05) {
        let cm = triangle(beta0, beta1);
        let red = reduce(&cm, 1e-10).unwrap();
        let v = &red.eigvecs;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| v[k][i] * v[k][j]).sum();
                prop_assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-10);
                let rebuilt: f64 = (0..3).map(|k| v[i][k] * red.lambda0[k] * v[j][k]).sum();
                prop_assert!((rebuilt - cm.k0[i][j]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn undriven_modes_stay_in_ground_state() {
    let red = reduce(&triangle(0.1, 0.0), 1e-10).unwrap();
    let timing = DriveTiming::new(0.0, 50).unwrap();
    let states = evolve_all(&red, &timing, &IntegratorConfig::default()).unwrap();
    for (s, m) in states.iter().zip(red.modes()) {
        assert!((s.b.re - m.omega0 / 2.0).abs() < 1e-9);
        assert!(s.b.im.abs() < 1e-9);
    }
}

#[test]
fn two_by_two_reduction_matches_two_mode_pipeline() {
    let drive = DriveSpec::new(0.05, 0.02, 0.05, 60).unwrap();
    let red = reduce(&CouplingMatrices::two_oscillator(0.05, 0.02), 1e-10).unwrap();
    let cfg = IntegratorConfig::default();
    let req = PointRequest {
        integrator: &cfg,
        truncation: Truncation::Fixed { n_max: 64 },
        track: &[vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]],
        output: &OutputSection::default(),
    };
    let a = evaluate_point(&drive.modes(), &drive.timing(), &req).unwrap();
    let b = evaluate_point(&red.modes(), &drive.timing(), &req).unwrap();
    for (x, y) in a.tracked.iter().zip(&b.tracked) {
        assert!((x.probability - y.probability).abs() < 1e-10);
    }
    assert!((a.energy.total - b.energy.total).abs() < 1e-10);
}

#[test]
fn each_window_excites_only_its_mode() {
    let red = reduce(&triangle(0.1, 0.02), 1e-10).unwrap();
    let modes = red.modes();
    let prediction = predict_mode_windows(&modes);
    assert!(!prediction.overlap);
    let cfg = IntegratorConfig::default();
    let req = PointRequest {
        integrator: &cfg,
        truncation: Truncation::Fixed { n_max: 128 },
        track: &[],
        output: &OutputSection::default(),
    };
    for (target, window) in prediction.windows.iter().enumerate() {
        // Enough cycles for the target mode to grow by about e^6.
        let cycles = (12.0 / (PI * window.half_width)).ceil() as u32;
        let timing = DriveTiming::new(window.center, cycles).unwrap();
        let out = evaluate_point(&modes, &timing, &req).unwrap();
        for (i, c) in out.mode_regimes.iter().enumerate() {
            let expect = if i == target { Regime::Resonant } else { Regime::OffResonant };
            assert_eq!(c.regime, expect, "window {target}, mode {i}: {c:?}");
        }
    }
}
