//! Gaussian-state evolution of a single parametrically driven normal mode.
//!
//! A mode wavefunction `A exp(-B Q²)` stays Gaussian under the quadratic
//! Hamiltonian `-½∂²_Q + ½Ω²(τ)Q²`. Substituting into the Schrödinger equation
//! gives the complex pair `Ȧ = -iAB`, `Ḃ = i(Ω² - 4B²)/2`, which is integrated
//! here in real form. [`riccati_oracle`] solves the same problem through the
//! linear equation `ü + Ω²u = 0` with `B = -(i/2) u̇/u`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{DriveTiming, ModeParams};
use crate::error::{Error, Result};
use crate::integrate::{rk4, rk45, IntegratorConfig, Method};

const MIN_WIDTH_RE: f64 = 1e-300;
const MAX_WIDTH: f64 = 1e12;

/// Parameters of `ψ(Q, τ) = A exp(-B Q²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianModeState {
    pub a: Complex64,
    pub b: Complex64,
    pub tau: f64,
}

impl GaussianModeState {
    fn to_array(self) -> [f64; 4] {
        [self.a.re, self.a.im, self.b.re, self.b.im]
    }

    fn from_array(y: &[f64; 4], tau: f64) -> Self {
        Self {
            a: Complex64::new(y[0], y[1]),
            b: Complex64::new(y[2], y[3]),
            tau,
        }
    }

    /// `|A|² √(π / 2B_R)`, which is 1 for a normalized state.
    pub fn norm(&self) -> f64 {
        self.a.norm_sqr() * (PI / (2.0 * self.b.re)).sqrt()
    }
}

/// Ground state of the static mode, `(Ω₀/π)^{1/4} exp(-Ω₀Q²/2)`.
pub fn initial_state(mode: &ModeParams) -> GaussianModeState {
    GaussianModeState {
        a: Complex64::new((mode.omega0 / PI).powf(0.25), 0.0),
        b: Complex64::new(mode.omega0 / 2.0, 0.0),
        tau: 0.0,
    }
}

#[inline]
fn gaussian_rhs(y: &[f64; 4], omega_sq: f64) -> [f64; 4] {
    let [ar, ai, br, bi] = *y;
    [
        ar * bi + ai * br,
        -(ar * br - ai * bi),
        4.0 * br * bi,
        0.5 * (omega_sq - 4.0 * (br * br - bi * bi)),
    ]
}

/// Time derivatives `[Ȧ_R, Ȧ_I, Ḃ_R, Ḃ_I]` at instantaneous frequency squared `omega_sq`.
pub fn derivatives(state: &GaussianModeState, omega_sq: f64) -> [f64; 4] {
    gaussian_rhs(&state.to_array(), omega_sq)
}

fn check_state(tau: f64, y: &[f64; 4]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure {
            tau,
            reason: "non-finite state".into(),
        });
    }
    if y[2] < MIN_WIDTH_RE {
        return Err(Error::IntegrationFailure {
            tau,
            reason: format!("Re B = {:e} lost normalizability", y[2]),
        });
    }
    if y[2].hypot(y[3]) > MAX_WIDTH {
        return Err(Error::IntegrationFailure {
            tau,
            reason: format!("|B| = {:e} exceeds {MAX_WIDTH:e}", y[2].hypot(y[3])),
        });
    }
    Ok(())
}

fn run<S>(mode: &ModeParams, timing: &DriveTiming, cfg: &IntegratorConfig, mut on_step: S) -> Result<GaussianModeState>
where
    S: FnMut(usize, f64, &[f64; 4]),
{
    timing.validate()?;
    cfg.validate()?;
    let tf = timing.duration();
    let y0 = initial_state(mode).to_array();
    let rhs = |t: f64, y: &[f64; 4]| gaussian_rhs(y, mode.driven_frequency_sq(timing, t));
    let observe = |i: usize, t: f64, y: &[f64; 4]| {
        check_state(t, y)?;
        on_step(i, t, y);
        Ok(())
    };
    let y = match cfg.method {
        Method::Rk4 => {
            let steps = cfg.steps_per_cycle as usize * timing.cycles as usize;
            rk4(rhs, 0.0, tf, y0, steps, observe)?
        }
        Method::Rk45 => rk45(rhs, 0.0, tf, y0, cfg.rel_tol, cfg.abs_tol, observe)?,
    };
    Ok(GaussianModeState::from_array(&y, tf))
}

/// Evolves the ground state of `mode` through the whole drive.
pub fn evolve(mode: &ModeParams, timing: &DriveTiming, cfg: &IntegratorConfig) -> Result<GaussianModeState> {
    run(mode, timing, cfg, |_, _, _| {})
}

/// Like [`evolve`], but also records the state `cfg.samples_per_cycle` times per
/// drive period (plus the initial state).
///
/// With the fixed-step method `steps_per_cycle` must be a multiple of
/// `samples_per_cycle`; the final state is bit-identical to [`evolve`].
pub fn evolve_trajectory(
    mode: &ModeParams,
    timing: &DriveTiming,
    cfg: &IntegratorConfig,
) -> Result<Vec<GaussianModeState>> {
    cfg.validate()?;
    timing.validate()?;
    let samples = cfg.samples_per_cycle as usize;
    match cfg.method {
        Method::Rk4 => {
            let steps = cfg.steps_per_cycle as usize;
            if steps % samples != 0 {
                return Err(Error::invalid(format!(
                    "steps_per_cycle ({steps}) must be a multiple of samples_per_cycle ({samples})"
                )));
            }
            let stride = steps / samples;
            let mut out = Vec::with_capacity(samples * timing.cycles as usize + 1);
            run(mode, timing, cfg, |i, t, y| {
                if i % stride == 0 {
                    out.push(GaussianModeState::from_array(y, t));
                }
            })?;
            Ok(out)
        }
        Method::Rk45 => {
            let total = samples * timing.cycles as usize;
            let dt = timing.period() / samples as f64;
            let tf = timing.duration();
            let rhs = |t: f64, y: &[f64; 4]| gaussian_rhs(y, mode.driven_frequency_sq(timing, t));
            let mut y = initial_state(mode).to_array();
            let mut out = vec![GaussianModeState::from_array(&y, 0.0)];
            for k in 0..total {
                let t0 = k as f64 * dt;
                let t1 = if k + 1 == total { tf } else { (k + 1) as f64 * dt };
                y = rk45(rhs, t0, t1, y, cfg.rel_tol, cfg.abs_tol, |_, t, y| check_state(t, y))?;
                out.push(GaussianModeState::from_array(&y, t1));
            }
            Ok(out)
        }
    }
}

/// Width parameter `B(τ_f)` from the linear Mathieu-type equation.
///
/// Solves `ü + Ω²(τ)u = 0` with `u(0) = 1`, `u̇(0) = iΩ₀` and returns
/// `-(i/2) u̇(τ_f)/u(τ_f)`. Shares no code path with [`evolve`] beyond the
/// generic integrator.
pub fn riccati_oracle(mode: &ModeParams, timing: &DriveTiming, cfg: &IntegratorConfig) -> Result<Complex64> {
    timing.validate()?;
    cfg.validate()?;
    let tf = timing.duration();
    let y0 = [1.0, 0.0, 0.0, mode.omega0];
    let rhs = |t: f64, y: &[f64; 4]| {
        let w2 = mode.driven_frequency_sq(timing, t);
        [y[2], y[3], -w2 * y[0], -w2 * y[1]]
    };
    let guard = |_: usize, t: f64, y: &[f64; 4]| {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::IntegrationFailure {
                tau: t,
                reason: "non-finite Mathieu solution".into(),
            })
        }
    };
    let y = match cfg.method {
        Method::Rk4 => rk4(rhs, 0.0, tf, y0, cfg.steps_per_cycle as usize * timing.cycles as usize, guard)?,
        Method::Rk45 => rk45(rhs, 0.0, tf, y0, cfg.rel_tol, cfg.abs_tol, guard)?,
    };
    let u = Complex64::new(y[0], y[1]);
    let du = Complex64::new(y[2], y[3]);
    if u.norm() < 1e-12 {
        return Err(Error::DegenerateSolution { tau: tf, modulus: u.norm() });
    }
    Ok(Complex64::new(0.0, -0.5) * du / u)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::drive::{DriveSpec, ModeSign};

    #[test]
    fn initial_state_examples() {
        let unit = ModeParams::two_mode(ModeSign::Plus, 0.0, 0.0);
        let s = initial_state(&unit);
        assert!((s.a.re - PI.powf(-0.25)).abs() < 1e-15);
        assert!((s.a.re - 0.7511).abs() < 1e-4);
        assert_eq!(s.b, Complex64::new(0.5, 0.0));

        let m = ModeParams::two_mode(ModeSign::Plus, 0.05, 0.0);
        let s = initial_state(&m);
        assert!((s.b.re - 1.05f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((s.b.re - 0.51235).abs() < 1e-5);
        for b0 in [0.0, 0.05, 0.3, -0.4] {
            let s = initial_state(&ModeParams::two_mode(ModeSign::Minus, b0, 0.0));
            assert!((s.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ground_state_is_stationary_up_to_phase() {
        let s = GaussianModeState {
            a: Complex64::new(PI.powf(-0.25), 0.0),
            b: Complex64::new(0.5, 0.0),
            tau: 0.0,
        };
        let d = derivatives(&s, 1.0);
        assert_eq!(d[0], 0.0);
        assert!((d[1] + PI.powf(-0.25) / 2.0).abs() < 1e-16);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[3], 0.0);
    }

    #[test]
    fn width_rate_example() {
        let s = GaussianModeState {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.5, 0.1),
            tau: 0.0,
        };
        assert!((derivatives(&s, 1.0)[2] - 0.2).abs() < 1e-16);
    }

    proptest! {
        #[test]
        fn rates_match_complex_form(
            ar in -2.0..2.0f64, ai in -2.0..2.0f64,
            br in 0.01..5.0f64, bi in -5.0..5.0f64,
            w2 in -0.5..2.0f64,
        ) {
            let s = GaussianModeState { a: Complex64::new(ar, ai), b: Complex64::new(br, bi), tau: 0.0 };
            let d = derivatives(&s, w2);
            let i = Complex64::i();
            let db = i * (w2 - 4.0 * s.b * s.b) / 2.0;
            let da = -i * s.a * s.b;
            let scale = 1.0 + s.b.norm_sqr() + w2.abs();
            prop_assert!((d[2] - db.re).abs() <= 1e-14 * scale);
            prop_assert!((d[3] - db.im).abs() <= 1e-14 * scale);
            prop_assert!((d[0] - da.re).abs() <= 1e-14 * (1.0 + s.a.norm() * s.b.norm()));
            prop_assert!((d[1] - da.im).abs() <= 1e-14 * (1.0 + s.a.norm() * s.b.norm()));
        }
    }

    #[test]
    fn undriven_mode_only_rotates_phase() {
        let drive = DriveSpec::new(0.05, 0.0, 0.0, 20).unwrap();
        for mode in drive.modes() {
            let s = evolve(&mode, &drive.timing(), &IntegratorConfig::fixed(512)).unwrap();
            let s0 = initial_state(&mode);
            assert!((s.b - s0.b).norm() < 1e-12);
            assert!((s.a.norm() - s0.a.norm()).abs() < 1e-12);
            let expected = s0.a * Complex64::from_polar(1.0, -mode.omega0 * s.tau / 2.0);
            assert!((s.a - expected).norm() < 1e-10, "{} vs {}", s.a, expected);
        }
    }

    #[test]
    fn norm_and_positivity_hold_along_trajectory() {
        let drive = DriveSpec::new(0.0, 0.05, 0.0, 40).unwrap();
        let [plus, _] = drive.modes();
        let cfg = IntegratorConfig::fixed(4096);
        let traj = evolve_trajectory(&plus, &drive.timing(), &cfg).unwrap();
        assert_eq!(traj.len(), 8 * 40 + 1);
        for s in &traj {
            assert!(s.b.re > 0.0);
            assert!((s.norm() - 1.0).abs() < 1e-8, "norm {} at {}", s.norm(), s.tau);
        }
        let last = evolve(&plus, &drive.timing(), &cfg).unwrap();
        assert_eq!(traj.last().unwrap(), &last);
    }

    #[test]
    fn adaptive_trajectory_samples_every_period_fraction() {
        let drive = DriveSpec::new(0.05, 0.02, 0.0, 3).unwrap();
        let [_, minus] = drive.modes();
        let cfg = IntegratorConfig {
            samples_per_cycle: 4,
            ..IntegratorConfig::adaptive(1e-10, 1e-12)
        };
        let traj = evolve_trajectory(&minus, &drive.timing(), &cfg).unwrap();
        assert_eq!(traj.len(), 13);
        assert!((traj[4].tau - drive.timing().period()).abs() < 1e-12);
    }

    #[test]
    fn trajectory_requires_commensurate_sampling() {
        let drive = DriveSpec::new(0.0, 0.02, 0.0, 2).unwrap();
        let cfg = IntegratorConfig {
            samples_per_cycle: 3,
            ..IntegratorConfig::fixed(512)
        };
        assert!(evolve_trajectory(&drive.modes()[0], &drive.timing(), &cfg).is_err());
    }

    #[test]
    fn oracle_undriven_is_constant() {
        let drive = DriveSpec::new(0.05, 0.0, 0.01, 7).unwrap();
        for mode in drive.modes() {
            let b = riccati_oracle(&mode, &drive.timing(), &IntegratorConfig::default()).unwrap();
            assert!((b - Complex64::new(mode.omega0 / 2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn oracle_grows_inside_window() {
        // |u| at the end of the drive against the undriven value 1
        let drive = DriveSpec::new(0.0, 0.05, 0.0, 50).unwrap();
        let mode = drive.modes()[0];
        let timing = drive.timing();
        let steps = 4096 * 50;
        let y = rk4(
            |t, y: &[f64; 4]| {
                let w2 = mode.driven_frequency_sq(&timing, t);
                [y[2], y[3], -w2 * y[0], -w2 * y[1]]
            },
            0.0,
            timing.duration(),
            [1.0, 0.0, 0.0, mode.omega0],
            steps,
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert!(y[0].hypot(y[1]) > 5.0);
    }

    #[test]
    fn blowup_is_reported() {
        // |beta0 + beta1| close to one makes the minus mode strongly unstable
        let mode = ModeParams::new(crate::drive::ModeLabel::Index(0), 0.05, 0.6).unwrap();
        let timing = DriveTiming::new(-1.55, 400).unwrap();
        let err = evolve(&mode, &timing, &IntegratorConfig::fixed(256)).unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure { .. }), "{err}");
    }
}
