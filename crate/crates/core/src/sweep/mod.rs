//! Parameter sweeps: configuration, parallel execution and output.

mod config;
mod emit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    Axis, AxisSpec, CouplingSection, DriveSection, OutputKind, OutputSection, SweepConfig, System, DEFAULT_COUNT,
};
pub use emit::{emit, read_json, write_csv, write_energy_csv, write_json, Format};

use crate::drive::{DriveTiming, ModeParams};
use crate::dynamics::{evolve, GaussianModeState};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::observables::{energy, predict_mode_windows, EnergyReport, WindowPrediction};
use crate::spectra::{
    classify_regime, ground_overlap, project_modes, shell_distribution, spectrum_grid, Classification,
    LevelDistribution, OverlapSet, ShellDistribution, SpectrumGrid, Truncation,
};

/// What produced a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical configuration.
    pub config_hash: String,
    pub integrator: IntegratorConfig,
    pub truncation: Truncation,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedProbability {
    pub state: Vec<usize>,
    pub probability: f64,
}

/// Everything computed at one completed sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointOutputs {
    pub states: Vec<GaussianModeState>,
    pub tracked: Vec<TrackedProbability>,
    /// Probability that every mode is in its ground state.
    pub p_ground: f64,
    pub n_max: usize,
    pub captured_mass: f64,
    pub truncated: bool,
    pub energy: EnergyReport,
    /// Shell-based regime, two-mode runs only.
    pub classification: Option<Classification>,
    /// Regime of each mode's own level distribution.
    pub mode_regimes: Vec<Classification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SpectrumGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shells: Option<ShellDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<WindowPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PointOutcome {
    Completed(Box<PointOutputs>),
    Failed { error: String },
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub axis_value: f64,
    pub timing: DriveTiming,
    pub outcome: PointOutcome,
    pub provenance: Provenance,
}

impl RunRecord {
    pub fn outputs(&self) -> Option<&PointOutputs> {
        match &self.outcome {
            PointOutcome::Completed(o) => Some(o),
            PointOutcome::Failed { .. } => None,
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self.outcome, PointOutcome::Failed { .. })
    }
}

/// Options for a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRequest<'a> {
    pub integrator: &'a IntegratorConfig,
    pub truncation: Truncation,
    pub track: &'a [Vec<usize>],
    pub output: &'a OutputSection,
}

fn tracked_probability(sets: &[OverlapSet], state: &[usize]) -> f64 {
    sets.iter()
        .zip(state)
        .map(|(s, &n)| s.coefficients.get(n).map_or(0.0, |c| c.norm_sqr()))
        .product()
}

/// Evolves every mode over `timing` and derives the observables.
pub fn evaluate_point(modes: &[ModeParams], timing: &DriveTiming, req: &PointRequest<'_>) -> Result<PointOutputs> {
    let states = modes
        .iter()
        .map(|m| evolve(m, timing, req.integrator))
        .collect::<Result<Vec<_>>>()?;
    let sets = project_modes(&states, modes, req.truncation)?;
    let energy = energy(&states, modes)?;

    let captured: Vec<f64> = sets.iter().map(OverlapSet::captured).collect();
    let marginals: Vec<Vec<f64>> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let others: f64 = captured.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c).product();
            s.probabilities().into_iter().map(|p| p * others).collect()
        })
        .collect();
    let mode_regimes = marginals
        .iter()
        .map(|m| classify_regime(&LevelDistribution(m.clone())))
        .collect();

    let (grid, shells) = if let [plus, minus] = sets.as_slice() {
        let grid = spectrum_grid(plus, minus)?;
        let shells = shell_distribution(&grid);
        (Some(grid), Some(shells))
    } else {
        (None, None)
    };
    let classification = shells.as_ref().map(classify_regime);
    let out = req.output;

    Ok(PointOutputs {
        tracked: req
            .track
            .iter()
            .map(|s| TrackedProbability {
                state: s.clone(),
                probability: tracked_probability(&sets, s),
            })
            .collect(),
        p_ground: tracked_probability(&sets, &vec![0; modes.len()]),
        n_max: sets.first().map_or(0, |s| s.n_max),
        captured_mass: captured.iter().product(),
        truncated: sets.iter().any(|s| s.truncated),
        energy,
        classification,
        mode_regimes,
        grid: grid.filter(|_| out.wants(OutputKind::Grid)),
        marginals: Some(marginals).filter(|_| out.wants(OutputKind::Marginals)),
        shells: shells.filter(|_| out.wants(OutputKind::Shells)),
        windows: out
            .wants(OutputKind::Windows)
            .then(|| predict_mode_windows(modes)),
        states,
    })
}

/// Probability that every mode is still in its ground state after `timing`.
pub fn ground_survival_at(modes: &[ModeParams], timing: &DriveTiming, cfg: &IntegratorConfig) -> Result<f64> {
    modes.iter().try_fold(1.0, |acc, m| {
        let state = evolve(m, timing, cfg)?;
        Ok(acc * ground_overlap(&state, m)?.norm_sqr())
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Maps `f` over `items` on `threads` workers (0 uses every core), keeping order.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    Ok(pool(threads)?.install(|| items.par_iter().map(&f).collect()))
}

/// Runs every point of the sweep. Point failures are recorded, not raised;
/// configuration errors abort before anything runs.
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let modes = cfg.system()?.modes();
    let track = cfg.tracked_states(modes.len())?;
    let points = cfg.points()?;
    let provenance = Provenance {
        config_hash: cfg.hash(),
        integrator: cfg.integrator,
        truncation: cfg.sweep_truncation(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let req = PointRequest {
        integrator: &cfg.integrator,
        truncation: cfg.sweep_truncation(),
        track: &track,
        output: &cfg.output,
    };
    let indexed: Vec<(usize, (f64, DriveTiming))> = points.into_iter().enumerate().collect();
    par_map(&indexed, threads, |&(index, (axis_value, timing))| {
        let outcome = match evaluate_point(&modes, &timing, &req) {
            Ok(o) => PointOutcome::Completed(Box::new(o)),
            Err(e) => PointOutcome::Failed { error: e.to_string() },
        };
        RunRecord {
            index,
            axis_value,
            timing,
            outcome,
            provenance: provenance.clone(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::{DriveSpec, ModeLabel};
    use crate::spectra::Regime;

    fn small(drive: DriveSpec) -> SweepConfig {
        let mut cfg = SweepConfig::point(drive);
        cfg.integrator = IntegratorConfig::fixed(512);
        cfg.spectrum = Some(Truncation::Fixed { n_max: 32 });
        cfg
    }

    #[test]
    fn parses_full_config() {
        let cfg = SweepConfig::from_toml(
            r#"
            [drive]
            beta0 = 0.0
            beta1 = 0.02
            cycles = 10

            [sweep]
            axis = "detuning"
            min = -0.06
            max = 0.06
            count = 5

            [spectrum]
            kind = "fixed"
            n_max = 64

            [integrator]
            method = "rk45"
            rel_tol = 1e-9

            [output]
            track = [[0, 0], [2, 2]]
            include = ["grid", "shells"]
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.points().unwrap().len(), 5);
        assert_eq!(cfg.sweep_truncation(), Truncation::Fixed { n_max: 64 });
        assert!(cfg.output.wants(OutputKind::Grid));
        assert!(!cfg.output.wants(OutputKind::Energy));
    }

    #[test]
    fn default_axis_count() {
        let axis = AxisSpec {
            axis: Axis::Detuning,
            min: Some(-1.0),
            max: Some(1.0),
            count: None,
            values: None,
        };
        let v = axis.values().unwrap();
        assert_eq!(v.len(), DEFAULT_COUNT);
        assert_eq!(v[100], 0.0);
        assert_eq!(v[200], 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let drive = DriveSpec::new(0.0, 0.02, 0.0, 10).unwrap();
        let mut odd = small(drive);
        odd.output.track = Some(vec![vec![1, 0]]);
        assert!(matches!(odd.validate(), Err(Error::SelectionRule { .. })));

        let mut short = small(drive);
        short.output.track = Some(vec![vec![0]]);
        assert!(short.validate().is_err());

        let mut fractional = small(drive).with_sweep(AxisSpec {
            axis: Axis::Cycles,
            min: None,
            max: None,
            count: None,
            values: Some(vec![1.5]),
        });
        assert!(fractional.validate().is_err());
        fractional.sweep = Some(AxisSpec::cycles(&[1, 2]));
        fractional.validate().unwrap();

        assert!(SweepConfig::from_toml("[drive]\ncycles = 1\nbogus = 2\n").is_err());
        assert!(SweepConfig::from_toml("[drive]\nbeta1 = 0.02\n").is_err());

        let mut bad_drive = small(drive);
        bad_drive.drive.beta1 = -0.1;
        assert!(bad_drive.validate().unwrap_err().is_config_error());
    }

    #[test]
    fn sweep_is_ordered_and_thread_independent() {
        let cfg = small(DriveSpec::new(0.0, 0.05, 0.0, 20).unwrap()).with_sweep(AxisSpec::detuning(-0.1, 0.1, 7));
        let one = run_sweep(&cfg, 1).unwrap();
        let many = run_sweep(&cfg, 4).unwrap();
        assert_eq!(one, many);
        for (i, r) in one.iter().enumerate() {
            assert_eq!(r.index, i);
            assert!(!r.failed());
        }
        assert_eq!(one[0].provenance.config_hash, cfg.hash());
    }

    #[test]
    fn resonant_point_outputs() {
        let mut cfg = SweepConfig::point(DriveSpec::new(0.0, 0.05, 0.0, 200).unwrap());
        cfg.output.include = vec![OutputKind::Grid, OutputKind::Marginals, OutputKind::Shells, OutputKind::Windows];
        let rec = &run_sweep(&cfg, 1).unwrap()[0];
        let out = rec.outputs().unwrap();
        assert_eq!(out.tracked.len(), 4);
        assert_eq!(out.tracked[0].probability, out.p_ground);
        let grid = out.grid.as_ref().unwrap();
        assert!((grid.get(0, 0) - out.p_ground).abs() < 1e-15);
        assert!((grid.get(2, 0) - out.tracked[2].probability).abs() < 1e-15);
        let marg = out.marginals.as_ref().unwrap();
        assert_eq!(marg.len(), 2);
        assert!((marg[0].iter().sum::<f64>() - out.captured_mass).abs() < 1e-12);
        assert_eq!(out.windows.as_ref().unwrap().windows[0].label, ModeLabel::Sign(crate::drive::ModeSign::Plus));
        assert!(out.p_ground < 0.5);
        assert_eq!(out.classification.unwrap().regime, Regime::Resonant);
    }

    #[test]
    fn failures_are_recorded_per_point() {
        let mut cfg = small(DriveSpec::new(0.0, 0.02, 0.0, 5).unwrap()).with_sweep(AxisSpec::detuning(0.0, 0.0, 2));
        cfg.coupling = Some(CouplingSection {
            k0: vec![vec![0.05]],
            k1: vec![vec![0.6]],
            tol: 1e-10,
        });
        cfg.drive.detuning = 0.0;
        cfg.drive.cycles = 400;
        cfg.sweep = Some(AxisSpec {
            axis: Axis::Detuning,
            min: None,
            max: None,
            count: None,
            values: Some(vec![-1.55, 0.0]),
        });
        let recs = run_sweep(&cfg, 2).unwrap();
        assert!(recs[0].failed());
        assert!(!recs[1].failed());
    }

    #[test]
    fn survival_matches_point_evaluation() {
        let drive = DriveSpec::new(0.1, 0.03, 0.02, 15).unwrap();
        let cfg = small(drive);
        let rec = &run_sweep(&cfg, 1).unwrap()[0];
        let p = ground_survival_at(&drive.modes(), &drive.timing(), &cfg.integrator).unwrap();
        assert_eq!(p, rec.outputs().unwrap().p_ground);
    }
}
