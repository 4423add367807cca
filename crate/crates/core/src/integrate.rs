//! Explicit Runge-Kutta integrators for small fixed-size real systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4,
    /// Dormand-Prince 5(4) with adaptive step control.
    Rk45,
}

/// Integrator settings shared by every per-mode evolution.
///
/// The default is adaptive. Inside a resonance window `B` spikes whenever the
/// underlying classical solution passes close to the origin, and a fixed step
/// that is fine early in the drive becomes far too coarse after a few hundred
/// cycles. The tolerances are tight enough that the two degenerate modes at
/// zero static coupling agree to 1e-10 in their level populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed steps per drive period (RK4 only).
    pub steps_per_cycle: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Trajectory samples per drive period when a trajectory is requested.
    pub samples_per_cycle: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            steps_per_cycle: 4096,
            rel_tol: 1e-12,
            abs_tol: 1e-16,
            samples_per_cycle: 8,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(steps_per_cycle: u32) -> Self {
        Self {
            method: Method::Rk4,
            steps_per_cycle,
            ..Self::default()
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            method: Method::Rk45,
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 => {
                if self.steps_per_cycle < 256 {
                    return Err(Error::invalid(format!(
                        "steps_per_cycle must be >= 256 (got {})",
                        self.steps_per_cycle
                    )));
                }
            }
            Method::Rk45 => {
                for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
                    if !(tol > 0.0 && tol <= 1e-4) {
                        return Err(Error::invalid(format!("{name} must lie in (0, 1e-4] (got {tol})")));
                    }
                }
            }
        }
        if self.samples_per_cycle == 0 {
            return Err(Error::invalid("samples_per_cycle must be at least 1"));
        }
        Ok(())
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` in `steps` equal RK4 steps.
///
/// `on_step(i, t, y)` sees every accepted state, including the initial one at
/// `i = 0`, and may abort the integration by returning an error. The final
/// step lands exactly on `t1`.
pub fn rk4<const N: usize, F, S>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    steps: usize,
    mut on_step: S,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]) -> Result<()>,
{
    assert!(steps > 0, "rk4 needs at least one step");
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    on_step(0, t0, &y)?;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let t_next = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h };
        let half = 0.5 * h;
        let k1 = f(t, &y);
        let k2 = f(t + half, &axpy(&y, half, &k1));
        let k3 = f(t + half, &axpy(&y, half, &k2));
        let k4 = f(t_next, &axpy(&y, h, &k3));
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        on_step(i + 1, t_next, &y)?;
    }
    Ok(y)
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

/// Adaptive Dormand-Prince 5(4) from `t0` to `t1` (requires `t1 > t0`).
///
/// `on_step` is called on every accepted step as in [`rk4`].
pub fn rk45<const N: usize, F, S>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    rel_tol: f64,
    abs_tol: f64,
    mut on_step: S,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]) -> Result<()>,
{
    assert!(t1 > t0, "rk45 integrates forward in time");
    let span = t1 - t0;
    let scaled_norm = |v: &[f64; N], y: &[f64; N]| -> f64 {
        let s: f64 = (0..N)
            .map(|i| {
                let sc = abs_tol + rel_tol * y[i].abs();
                (v[i] / sc).powi(2)
            })
            .sum();
        (s / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    on_step(0, t, &y)?;

    let mut h = {
        let d0 = scaled_norm(&y, &y);
        let d1 = scaled_norm(&k1, &y);
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span)
    };

    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while t < t1 {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(Error::IntegrationFailure {
                tau: t,
                reason: "adaptive step budget exhausted".into(),
            });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                tau: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        let k2 = f(t + C2 * h, &std::array::from_fn(|i| y[i] + h * A21 * k1[i]));
        let k3 = f(
            t + C3 * h,
            &std::array::from_fn(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i])),
        );
        let k4 = f(
            t + C4 * h,
            &std::array::from_fn(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])),
        );
        let k5 = f(
            t + C5 * h,
            &std::array::from_fn(|i| {
                y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            }),
        );
        let k6 = f(
            t + h,
            &std::array::from_fn(|i| {
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            }),
        );
        let y_new: [f64; N] = std::array::from_fn(|i| {
            y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        });
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);
        let err: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let scale: [f64; N] = std::array::from_fn(|i| y[i].abs().max(y_new[i].abs()));
        let err_norm = scaled_norm(&err, &scale);
        if !err_norm.is_finite() {
            return Err(Error::IntegrationFailure {
                tau: t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err_norm <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            accepted += 1;
            on_step(accepted, t, &y)?;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}
