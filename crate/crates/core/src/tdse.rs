//! Grid solver for the one-mode Schrödinger equation, used to check the
//! Gaussian-parameter evolution without assuming the Gaussian form.
//!
//! Second-order Strang splitting: half a potential step, a full kinetic step
//! applied in Fourier space, and another half potential step, with `Ω²` taken
//! at the midpoint of each step.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::drive::{DriveTiming, ModeParams};
use crate::dynamics::{evolve, GaussianModeState};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::spectra::overlap_coefficients;

/// Probability allowed in the outer tenth of the box.
pub const EDGE_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// The box is `[-half_width, half_width)`, periodic.
    pub half_width: f64,
    /// Number of grid points, a power of two.
    pub points: usize,
    /// Time steps per drive period, so `dt = period / steps_per_cycle`.
    pub steps_per_cycle: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 15.0,
            points: 2048,
            steps_per_cycle: 4096,
        }
    }
}

impl GridSpec {
    pub fn validate(&self, mode: &ModeParams) -> Result<()> {
        if !(self.half_width >= 10.0 / mode.omega0.sqrt()) {
            return Err(Error::invalid(format!(
                "half_width {} is below 10/sqrt(omega0) = {}",
                self.half_width,
                10.0 / mode.omega0.sqrt()
            )));
        }
        if self.points < 1024 || !self.points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "points must be a power of two >= 1024 (got {})",
                self.points
            )));
        }
        if self.steps_per_cycle < 1024 {
            return Err(Error::invalid(format!(
                "steps_per_cycle must be >= 1024 (got {})",
                self.steps_per_cycle
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.points).map(|j| -self.half_width + j as f64 * dx).collect()
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = TAU / (n as f64 * self.dx());
        (0..n)
            .map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk)
            .collect()
    }
}

/// Samples of a one-mode wavefunction on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub dx: f64,
    pub tau: f64,
}

impl GridWavefunction {
    pub fn sample(grid: &GridSpec, tau: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let x = grid.coordinates();
        let psi = x.iter().map(|&q| f(q)).collect();
        Self { x, psi, dx: grid.dx(), tau }
    }

    pub fn from_gaussian(grid: &GridSpec, state: &GaussianModeState) -> Self {
        Self::sample(grid, state.tau, |q| state.a * (-state.b * q * q).exp())
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dx
    }

    /// `⟨self|other⟩` by the rectangle rule (spectrally accurate for smooth,
    /// decayed functions on a periodic grid).
    pub fn inner(&self, other: &GridWavefunction) -> Complex64 {
        self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.dx
    }

    pub fn fidelity(&self, other: &GridWavefunction) -> f64 {
        self.inner(other).norm_sqr() / (self.norm() * other.norm())
    }

    /// L2 distance, sensitive to the global phase.
    pub fn distance(&self, other: &GridWavefunction) -> f64 {
        (self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * self.dx).sqrt()
    }

    pub fn edge_probability(&self, half_width: f64) -> f64 {
        let cut = 0.9 * half_width;
        self.x
            .iter()
            .zip(&self.psi)
            .filter(|(x, _)| x.abs() > cut)
            .map(|(_, p)| p.norm_sqr())
            .sum::<f64>()
            * self.dx
    }

    /// Excess kurtosis of `|ψ|²`; zero for a Gaussian.
    pub fn excess_kurtosis(&self) -> f64 {
        let w: Vec<f64> = self.psi.iter().map(|p| p.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let mean = self.x.iter().zip(&w).map(|(x, p)| x * p).sum::<f64>() / total;
        let moment = |k: i32| self.x.iter().zip(&w).map(|(x, p)| (x - mean).powi(k) * p).sum::<f64>() / total;
        let m2 = moment(2);
        moment(4) / (m2 * m2) - 3.0
    }

    /// `|⟨n|ψ⟩|²` for `n = 0..=n_max`, by quadrature against the eigenfunctions
    /// of the static mode.
    pub fn fock_probabilities(&self, mode: &ModeParams, n_max: usize) -> Vec<f64> {
        let phis = hermite_functions(&self.x, mode.omega0, n_max);
        phis.iter()
            .map(|phi| {
                let c: Complex64 = phi.iter().zip(&self.psi).map(|(f, p)| p * *f).sum::<Complex64>() * self.dx;
                c.norm_sqr()
            })
            .collect()
    }
}

/// Normalized oscillator eigenfunctions of frequency `omega0` at `xs`, by the
/// three-term recurrence `φ_{n+1} = √(2/(n+1)) ξ φ_n - √(n/(n+1)) φ_{n-1}`.
pub fn hermite_functions(xs: &[f64], omega0: f64, n_max: usize) -> Vec<Vec<f64>> {
    let norm = (omega0 / PI).powf(0.25);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
    out.push(xs.iter().map(|&x| norm * (-omega0 * x * x / 2.0).exp()).collect());
    if n_max >= 1 {
        out.push(
            xs.iter()
                .zip(&out[0])
                .map(|(&x, &p0)| 2f64.sqrt() * omega0.sqrt() * x * p0)
                .collect(),
        );
    }
    for n in 1..n_max {
        let a = (2.0 / (n + 1) as f64).sqrt();
        let b = (n as f64 / (n + 1) as f64).sqrt();
        let next = xs
            .iter()
            .enumerate()
            .map(|(j, &x)| a * omega0.sqrt() * x * out[n][j] - b * out[n - 1][j])
            .collect();
        out.push(next);
    }
    out
}

/// Evolves the ground state of `mode` on the grid through the whole drive.
pub fn evolve_grid(mode: &ModeParams, timing: &DriveTiming, grid: &GridSpec) -> Result<GridWavefunction> {
    timing.validate()?;
    grid.validate(mode)?;
    let n = grid.points;
    let ground = (mode.omega0 / PI).powf(0.25);
    let mut wf = GridWavefunction::sample(grid, 0.0, |q| Complex64::new(ground * (-mode.omega0 * q * q / 2.0).exp(), 0.0));

    let steps_per_cycle = grid.steps_per_cycle as usize;
    let steps = steps_per_cycle * timing.cycles as usize;
    let tf = timing.duration();
    let dt = tf / steps as f64;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    let kinetic: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|k| Complex64::from_polar(scale, -0.5 * k * k * dt))
        .collect();
    let x2: Vec<f64> = wf.x.iter().map(|x| x * x).collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];

    let half_potential = |psi: &mut [Complex64], w2: f64| {
        let c = -0.25 * w2 * dt;
        for (p, &q2) in psi.iter_mut().zip(&x2) {
            *p *= Complex64::from_polar(1.0, c * q2);
        }
    };

    for i in 0..steps {
        let w2 = mode.driven_frequency_sq(timing, (i as f64 + 0.5) * dt);
        half_potential(&mut wf.psi, w2);
        forward.process_with_scratch(&mut wf.psi, &mut scratch);
        for (p, k) in wf.psi.iter_mut().zip(&kinetic) {
            *p *= k;
        }
        inverse.process_with_scratch(&mut wf.psi, &mut scratch);
        half_potential(&mut wf.psi, w2);

        if (i + 1) % steps_per_cycle == 0 {
            let tau = (i + 1) as f64 * dt;
            let edge = wf.edge_probability(grid.half_width);
            if edge > EDGE_LIMIT {
                return Err(Error::GridOverflow {
                    tau,
                    edge_probability: edge,
                });
            }
        }
    }
    wf.tau = tf;
    Ok(wf)
}

/// Agreement between the grid solver and the Gaussian-parameter evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub fidelity: f64,
    /// L2 distance including the global phase.
    pub distance: f64,
    pub norm_deviation: f64,
    pub excess_kurtosis: f64,
    /// `max_n |p_n(grid) - p_n(closed form)|` over the compared levels.
    pub max_fock_deviation: f64,
    pub fock_levels: usize,
}

pub fn cross_check(
    mode: &ModeParams,
    timing: &DriveTiming,
    grid: &GridSpec,
    cfg: &IntegratorConfig,
    fock_levels: usize,
) -> Result<CrossCheck> {
    let wf = evolve_grid(mode, timing, grid)?;
    let state = evolve(mode, timing, cfg)?;
    let reference = GridWavefunction::from_gaussian(grid, &state);
    let n_max = fock_levels + fock_levels % 2;
    let closed = overlap_coefficients(&state, mode, n_max)?.probabilities();
    let quad = wf.fock_probabilities(mode, n_max);
    let max_fock_deviation = closed
        .iter()
        .zip(&quad)
        .take(fock_levels + 1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        fidelity: wf.fidelity(&reference),
        distance: wf.distance(&reference),
        norm_deviation: (wf.norm() - 1.0).abs(),
        excess_kurtosis: wf.excess_kurtosis(),
        max_fock_deviation,
        fock_levels,
    })
}
