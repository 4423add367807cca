//! Parametrically driven coupled quantum oscillators.
//!
//! Two oscillators whose coupling is modulated near twice the bare
//! frequency separate into normal modes, each a driven parametric
//! oscillator. A Gaussian initial state stays Gaussian, so each mode is
//! tracked by two complex numbers `(A, B)` in `ψ = A exp(-B Q²)`. From the
//! final `(A, B)` the crate derives Fock-state populations, energy-shell
//! spectra, the energy absorbed and the resonance windows.
//!
//! ```
//! use paramode::{evolve, project, DriveSpec, IntegratorConfig, Truncation};
//!
//! let drive = DriveSpec::new(0.0, 0.05, 0.0, 20).unwrap();
//! let cfg = IntegratorConfig::fixed(1024);
//! let [plus, _] = drive.modes();
//! let state = evolve(&plus, &drive.timing(), &cfg).unwrap();
//! let levels = project(&state, &plus, Truncation::Fixed { n_max: 64 }).unwrap();
//! assert!(levels.probabilities()[0] < 0.99);
//! ```

pub mod drive;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod multimode;
pub mod observables;
pub mod regression;
pub mod spectra;
pub mod sweep;
pub mod tdse;

pub use num_complex::Complex64;

pub use drive::{mode_frequency_sq, DriveSpec, DriveTiming, ModeLabel, ModeParams, ModeSign};
pub use dynamics::{evolve, evolve_trajectory, initial_state, riccati_oracle, GaussianModeState};
pub use error::{Error, Result};
pub use integrate::{IntegratorConfig, Method};
pub use multimode::{evolve_all, reduce, CouplingMatrices, ModeReduction};
pub use observables::{
    energy, locate_windows, predict_mode_windows, predict_windows, EnergyReport, MeasuredWindow, PredictedWindow,
    WindowPrediction,
};
pub use regression::{linear_fit, LinearFit};
pub use spectra::{
    classify_regime, fit_exponential, fit_power_law, marginals, overlap_coefficients, project, project_modes,
    shell_distribution, spectrum_grid, Classification, DecayFit, DecaySeries, FitRange, LevelDistribution,
    OverlapSet, Regime, ShellDistribution, SpectrumGrid, Truncation,
};
pub use sweep::{run_sweep, Format, RunRecord, SweepConfig};
pub use tdse::{cross_check, evolve_grid, CrossCheck, GridSpec, GridWavefunction};
