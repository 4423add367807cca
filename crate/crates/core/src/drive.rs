//! Drive parameters and the per-mode time-dependent frequencies.
//!
//! Everything is in dimensionless units: time is `tau = omega0 * t`, the static
//! coupling is `beta0`, the modulation amplitude `beta1` and the detuning of the
//! drive from twice the bare frequency is `detuning`. The coupling is modulated
//! as `beta0 + beta1 * sin((2 + detuning) * tau)` for exactly `cycles` drive
//! periods starting at `tau = 0`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency and duration of the drive, independent of which modes it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTiming {
    pub detuning: f64,
    pub cycles: u32,
}

impl DriveTiming {
    pub fn new(detuning: f64, cycles: u32) -> Result<Self> {
        let timing = Self { detuning, cycles };
        timing.validate()?;
        Ok(timing)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.detuning.is_finite() || 2.0 + self.detuning <= 0.0 {
            return Err(Error::invalid(format!(
                "drive frequency 2 + detuning must be positive (detuning = {})",
                self.detuning
            )));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("cycles must be at least 1"));
        }
        Ok(())
    }

    /// Angular frequency of the drive, `2 + detuning`.
    pub fn frequency(&self) -> f64 {
        2.0 + self.detuning
    }

    pub fn period(&self) -> f64 {
        TAU / self.frequency()
    }

    /// End of the drive, an exact whole number of periods.
    pub fn duration(&self) -> f64 {
        TAU * f64::from(self.cycles) / self.frequency()
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }

    pub fn with_cycles(self, cycles: u32) -> Self {
        Self { cycles, ..self }
    }
}

/// Drive on the two-oscillator system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub beta0: f64,
    pub beta1: f64,
    pub detuning: f64,
    pub cycles: u32,
}

impl DriveSpec {
    pub fn new(beta0: f64, beta1: f64, detuning: f64, cycles: u32) -> Result<Self> {
        let drive = Self {
            beta0,
            beta1,
            detuning,
            cycles,
        };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta0.is_finite() || !self.beta1.is_finite() {
            return Err(Error::invalid("beta0 and beta1 must be finite"));
        }
        if self.beta1 < 0.0 {
            return Err(Error::invalid(format!("beta1 must be >= 0 (got {})", self.beta1)));
        }
        if self.beta0.abs() >= 1.0 || self.beta0 + self.beta1 >= 1.0 {
            return Err(Error::invalid(format!(
                "need |beta0| < 1 and beta0 + beta1 < 1 (beta0 = {}, beta1 = {})",
                self.beta0, self.beta1
            )));
        }
        self.timing().validate()
    }

    pub fn timing(&self) -> DriveTiming {
        DriveTiming {
            detuning: self.detuning,
            cycles: self.cycles,
        }
    }

    pub fn with_timing(self, timing: DriveTiming) -> Self {
        Self {
            detuning: timing.detuning,
            cycles: timing.cycles,
            ..self
        }
    }

    /// The `+` and `-` normal modes, in that order.
    pub fn modes(&self) -> [ModeParams; 2] {
        [
            ModeParams::two_mode(ModeSign::Plus, self.beta0, self.beta1),
            ModeParams::two_mode(ModeSign::Minus, self.beta0, self.beta1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeSign {
    Plus,
    Minus,
}

impl ModeSign {
    pub fn factor(self) -> f64 {
        match self {
            ModeSign::Plus => 1.0,
            ModeSign::Minus => -1.0,
        }
    }
}

/// Which normal mode a set of parameters belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// One of the two normal modes `(x ± y)/√2` of the two-oscillator system.
    Sign(ModeSign),
    /// Normal mode `i` of an N-oscillator reduction.
    Index(usize),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Sign(ModeSign::Plus) => f.write_str("plus"),
            ModeLabel::Sign(ModeSign::Minus) => f.write_str("minus"),
            ModeLabel::Index(i) => write!(f, "mode{i}"),
        }
    }
}

/// Static frequency and modulation of one normal mode.
///
/// The mode sees `omega_sq(tau) = omega0_sq + modulation * sin((2 + detuning) tau)`
/// while the drive is on. For the two-oscillator system `omega0_sq = 1 ± beta0`
/// and `modulation = ±beta1`, so the two modes are modulated out of phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub label: ModeLabel,
    pub omega0_sq: f64,
    pub omega0: f64,
    pub modulation: f64,
}

impl ModeParams {
    pub fn two_mode(sign: ModeSign, beta0: f64, beta1: f64) -> Self {
        let s = sign.factor();
        let omega0_sq = 1.0 + s * beta0;
        Self {
            label: ModeLabel::Sign(sign),
            omega0_sq,
            omega0: omega0_sq.sqrt(),
            modulation: s * beta1,
        }
    }

    /// A mode with arbitrary static frequency squared and signed modulation amplitude.
    pub fn new(label: ModeLabel, omega0_sq: f64, modulation: f64) -> Result<Self> {
        if !(omega0_sq > 0.0) || !omega0_sq.is_finite() {
            return Err(Error::invalid(format!(
                "static frequency squared must be positive (got {omega0_sq})"
            )));
        }
        if !modulation.is_finite() {
            return Err(Error::invalid("modulation amplitude must be finite"));
        }
        Ok(Self {
            label,
            omega0_sq,
            omega0: omega0_sq.sqrt(),
            modulation,
        })
    }

    /// Relative modulation depth `h = |modulation| / omega0²`.
    pub fn depth(&self) -> f64 {
        self.modulation.abs() / self.omega0_sq
    }

    /// Frequency squared while the drive is on, with no switch-off at the end.
    #[inline]
    pub(crate) fn driven_frequency_sq(&self, timing: &DriveTiming, tau: f64) -> f64 {
        self.omega0_sq + self.modulation * (timing.frequency() * tau).sin()
    }
}

/// `Ω²(τ)` of a mode: modulated for `0 <= tau < tau_f`, static otherwise.
pub fn mode_frequency_sq(mode: &ModeParams, timing: &DriveTiming, tau: f64) -> f64 {
    if (0.0..timing.duration()).contains(&tau) {
        mode.driven_frequency_sq(timing, tau)
    } else {
        mode.omega0_sq
    }
}
