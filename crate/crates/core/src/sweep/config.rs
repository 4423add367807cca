use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drive::{DriveSpec, DriveTiming, ModeParams};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::multimode::{reduce, CouplingMatrices, ModeReduction, DEFAULT_TOL};
use crate::spectra::Truncation;

/// Default number of points on a swept axis.
pub const DEFAULT_COUNT: usize = 201;

/// A run description, read from a TOML file.
///
/// ```toml
/// [drive]
/// beta0 = 0.0
/// beta1 = 0.02
/// detuning = 0.0
/// cycles = 200
///
/// [sweep]
/// axis = "detuning"
/// min = -0.06
/// max = 0.06
/// count = 201
///
/// [spectrum]
/// kind = "fixed"
/// n_max = 128
///
/// [output]
/// track = [[0, 0], [0, 2], [2, 0], [2, 2]]
/// include = ["energy", "shells"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub drive: DriveSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<AxisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Truncation>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    /// Ignored when a `[coupling]` section is present.
    #[serde(default)]
    pub beta0: f64,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub detuning: f64,
    pub cycles: u32,
}

/// Coupling matrices for an N-oscillator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub k0: Vec<Vec<f64>>,
    pub k1: Vec<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Detuning,
    Cycles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Explicit values; takes precedence over `min`/`max`/`count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AxisSpec {
    pub fn detuning(min: f64, max: f64, count: usize) -> Self {
        Self {
            axis: Axis::Detuning,
            min: Some(min),
            max: Some(max),
            count: Some(count),
            values: None,
        }
    }

    pub fn cycles(values: &[u32]) -> Self {
        Self {
            axis: Axis::Cycles,
            min: None,
            max: None,
            count: None,
            values: Some(values.iter().map(|&v| f64::from(v)).collect()),
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let values = match (&self.values, self.min, self.max) {
            (Some(v), _, _) => v.clone(),
            (None, Some(min), Some(max)) => {
                let count = self.count.unwrap_or(DEFAULT_COUNT);
                match count {
                    0 => Vec::new(),
                    1 => vec![min],
                    _ => (0..count)
                        .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
                        .collect(),
                }
            }
            _ => return Err(Error::Config("sweep needs either `values` or both `min` and `max`".into())),
        };
        if values.is_empty() {
            return Err(Error::Config("sweep axis must have at least one value".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite axis value {v}")));
        }
        if self.axis == Axis::Cycles {
            if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 1.0 || **v > f64::from(u32::MAX)) {
                return Err(Error::Config(format!("cycle counts must be positive integers (got {v})")));
            }
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    ProbVsDetuning,
    Grid,
    Marginals,
    Shells,
    Energy,
    Windows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Tracked states, one quantum number per mode. Defaults to
    /// `(0,0) (0,2) (2,0) (2,2)` for two modes and the ground state otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track: Option<Vec<Vec<usize>>>,
    #[serde(default = "default_include")]
    pub include: Vec<OutputKind>,
}

fn default_include() -> Vec<OutputKind> {
    vec![OutputKind::ProbVsDetuning, OutputKind::Energy, OutputKind::Windows]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            track: None,
            include: default_include(),
        }
    }
}

impl OutputSection {
    pub fn wants(&self, kind: OutputKind) -> bool {
        self.include.contains(&kind)
    }
}

/// The modes a configuration describes.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    TwoMode(DriveSpec),
    Coupled(ModeReduction),
}

impl System {
    pub fn modes(&self) -> Vec<ModeParams> {
        match self {
            System::TwoMode(d) => d.modes().to_vec(),
            System::Coupled(r) => r.modes(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Single-point two-mode configuration.
    pub fn point(drive: DriveSpec) -> Self {
        Self {
            drive: DriveSection {
                beta0: drive.beta0,
                beta1: drive.beta1,
                detuning: drive.detuning,
                cycles: drive.cycles,
            },
            coupling: None,
            sweep: None,
            spectrum: None,
            integrator: IntegratorConfig::default(),
            output: OutputSection::default(),
        }
    }

    pub fn with_sweep(mut self, axis: AxisSpec) -> Self {
        self.sweep = Some(axis);
        self
    }

    pub fn with_coupling(mut self, cm: CouplingMatrices) -> Self {
        self.coupling = Some(CouplingSection {
            k0: cm.k0,
            k1: cm.k1,
            tol: DEFAULT_TOL,
        });
        self
    }

    pub fn base_timing(&self) -> DriveTiming {
        DriveTiming {
            detuning: self.drive.detuning,
            cycles: self.drive.cycles,
        }
    }

    pub fn system(&self) -> Result<System> {
        match &self.coupling {
            Some(c) => {
                let cm = CouplingMatrices {
                    k0: c.k0.clone(),
                    k1: c.k1.clone(),
                };
                Ok(System::Coupled(reduce(&cm, c.tol)?))
            }
            None => Ok(System::TwoMode(DriveSpec::new(
                self.drive.beta0,
                self.drive.beta1,
                self.drive.detuning,
                self.drive.cycles,
            )?)),
        }
    }

    /// Drive timings along the axis, paired with the axis value.
    pub fn points(&self) -> Result<Vec<(f64, DriveTiming)>> {
        let base = self.base_timing();
        let points = match &self.sweep {
            None => vec![(base.detuning, base)],
            Some(spec) => spec
                .values()?
                .into_iter()
                .map(|v| match spec.axis {
                    Axis::Detuning => (v, base.with_detuning(v)),
                    Axis::Cycles => (v, base.with_cycles(v as u32)),
                })
                .collect(),
        };
        for (_, t) in &points {
            t.validate()?;
        }
        Ok(points)
    }

    pub fn tracked_states(&self, modes: usize) -> Result<Vec<Vec<usize>>> {
        let states = match &self.output.track {
            Some(t) => t.clone(),
            None if modes == 2 => vec![vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]],
            None => vec![vec![0; modes]],
        };
        for s in &states {
            if s.len() != modes {
                return Err(Error::Config(format!(
                    "tracked state {s:?} needs one quantum number per mode ({modes})"
                )));
            }
            if s.iter().any(|n| n % 2 == 1) {
                return Err(Error::SelectionRule { state: s.clone() });
            }
        }
        Ok(states)
    }

    /// Truncation for sweeps: the configured one, else a fixed 128 levels.
    pub fn sweep_truncation(&self) -> Truncation {
        self.spectrum.unwrap_or(Truncation::SWEEP)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        self.sweep_truncation().validate()?;
        let system = self.system()?;
        self.tracked_states(system.modes().len())?;
        self.points()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
