//! Fock-state spectra of evolved Gaussian states and their decay diagnostics.
//!
//! The overlap of `A exp(-BQ²)` with the `n`-th eigenstate of the static mode
//! has a closed form. With `a = 1/2 + B/Ω₀` and `r = (1 - a)/a`:
//!
//! ```text
//! c_0      = A (Ω₀/π)^{1/4} √(π / (a Ω₀))
//! c_{2k+2} = c_{2k} · r · √((2k+1)/(2k+2))
//! c_odd    = 0
//! ```
//!
//! The ratio form never builds a factorial, so it is stable to any order.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{ModeLabel, ModeParams};
use crate::dynamics::GaussianModeState;
use crate::error::{Error, Result};
use crate::regression::linear_fit;

/// Tail mass above which an overlap set is flagged as truncated.
pub const TRUNCATION_WARNING: f64 = 1e-8;

/// Per-state values at or below this are excluded from the default fit range.
pub const FIT_FLOOR: f64 = 1e-12;

/// Minimum number of points for a decay fit.
pub const MIN_FIT_POINTS: usize = 4;

/// How many Fock levels to keep per mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Truncation {
    Fixed { n_max: usize },
    /// Grow `n_max` in steps of 16 until the tail is below `tail_tol`, up to `cap`.
    Adaptive { tail_tol: f64, cap: usize },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Adaptive {
            tail_tol: 1e-6,
            cap: 512,
        }
    }
}

impl Truncation {
    /// Fixed cap used for sweeps.
    pub const SWEEP: Truncation = Truncation::Fixed { n_max: 128 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            Truncation::Fixed { n_max } if n_max % 2 != 0 => {
                Err(Error::invalid(format!("n_max must be even (got {n_max})")))
            }
            Truncation::Adaptive { tail_tol, cap } => {
                if !(tail_tol > 0.0 && tail_tol < 1.0) {
                    return Err(Error::invalid(format!("tail_tol must lie in (0, 1) (got {tail_tol})")));
                }
                if cap < 16 || cap % 16 != 0 {
                    return Err(Error::invalid(format!("cap must be a positive multiple of 16 (got {cap})")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Overlaps `c_n = ⟨n|ψ⟩` of one mode for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSet {
    pub label: ModeLabel,
    pub n_max: usize,
    pub coefficients: Vec<Complex64>,
    /// `1 - Σ|c_n|²`, the probability outside the kept levels.
    pub tail: f64,
    /// Set when `tail` exceeds [`TRUNCATION_WARNING`].
    pub truncated: bool,
}

impl OverlapSet {
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn captured(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn width_ratio(state: &GaussianModeState, mode: &ModeParams) -> Result<(Complex64, Complex64)> {
    if !(state.b.re > 0.0) {
        return Err(Error::invalid(format!("Re B must be positive (got {})", state.b.re)));
    }
    let a = 0.5 + state.b / mode.omega0;
    let c0 = state.a * (mode.omega0 / PI).powf(0.25) * (PI / (a * mode.omega0)).sqrt();
    Ok((c0, (1.0 - a) / a))
}

/// `⟨0|ψ⟩` alone.
pub fn ground_overlap(state: &GaussianModeState, mode: &ModeParams) -> Result<Complex64> {
    width_ratio(state, mode).map(|(c0, _)| c0)
}

/// Closed-form overlaps up to an even `n_max`.
pub fn overlap_coefficients(state: &GaussianModeState, mode: &ModeParams, n_max: usize) -> Result<OverlapSet> {
    if n_max % 2 != 0 {
        return Err(Error::invalid(format!("n_max must be even (got {n_max})")));
    }
    let (c0, r) = width_ratio(state, mode)?;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut c = c0;
    coefficients[0] = c;
    for k in 0..n_max / 2 {
        let n = 2 * k;
        c *= r * ((n + 1) as f64 / (n + 2) as f64).sqrt();
        coefficients[n + 2] = c;
    }
    Ok(finish(mode.label, n_max, coefficients))
}

fn finish(label: ModeLabel, n_max: usize, coefficients: Vec<Complex64>) -> OverlapSet {
    let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let tail = 1.0 - captured;
    OverlapSet {
        label,
        n_max,
        coefficients,
        tail,
        truncated: tail > TRUNCATION_WARNING,
    }
}

/// Overlaps under a truncation policy.
pub fn project(state: &GaussianModeState, mode: &ModeParams, truncation: Truncation) -> Result<OverlapSet> {
    truncation.validate()?;
    match truncation {
        Truncation::Fixed { n_max } => overlap_coefficients(state, mode, n_max),
        Truncation::Adaptive { tail_tol, cap } => {
            let (c0, r) = width_ratio(state, mode)?;
            let mut captured = c0.norm_sqr();
            let mut c = c0;
            let mut n_max = 0;
            while n_max < cap {
                for k in n_max / 2..n_max / 2 + 8 {
                    let n = 2 * k;
                    c *= r * ((n + 1) as f64 / (n + 2) as f64).sqrt();
                    captured += c.norm_sqr();
                }
                n_max += 16;
                if 1.0 - captured < tail_tol {
                    break;
                }
            }
            overlap_coefficients(state, mode, n_max)
        }
    }
}

/// Projects several modes with a common `n_max` (the largest any mode needs).
pub fn project_modes(
    states: &[GaussianModeState],
    modes: &[ModeParams],
    truncation: Truncation,
) -> Result<Vec<OverlapSet>> {
    assert_eq!(states.len(), modes.len());
    let sets = states
        .iter()
        .zip(modes)
        .map(|(s, m)| project(s, m, truncation))
        .collect::<Result<Vec<_>>>()?;
    let n_max = sets.iter().map(|s| s.n_max).max().unwrap_or(0);
    sets.into_iter()
        .zip(states.iter().zip(modes))
        .map(|(set, (s, m))| {
            if set.n_max == n_max {
                Ok(set)
            } else {
                overlap_coefficients(s, m, n_max)
            }
        })
        .collect()
}

/// Joint probabilities `p[n+][n-]` of the two-mode system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub n_max: usize,
    /// Row-major, `(n_max + 1)²` entries, row index `n+`.
    pub probs: Vec<f64>,
    pub captured_mass: f64,
}

impl SpectrumGrid {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn get(&self, n_plus: usize, n_minus: usize) -> f64 {
        if n_plus > self.n_max || n_minus > self.n_max {
            return 0.0;
        }
        self.probs[n_plus * self.dim() + n_minus]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.dim())
    }
}

pub fn spectrum_grid(plus: &OverlapSet, minus: &OverlapSet) -> Result<SpectrumGrid> {
    if plus.n_max != minus.n_max {
        return Err(Error::invalid(format!(
            "overlap sets disagree on n_max ({} vs {})",
            plus.n_max, minus.n_max
        )));
    }
    let pp = plus.probabilities();
    let pm = minus.probabilities();
    let probs = pp.iter().flat_map(|a| pm.iter().map(move |b| a * b)).collect();
    Ok(SpectrumGrid {
        n_max: plus.n_max,
        probs,
        captured_mass: pp.iter().sum::<f64>() * pm.iter().sum::<f64>(),
    })
}

/// `(p_{n+}, p_{n-})`: each mode's level distribution summed over the other.
pub fn marginals(grid: &SpectrumGrid) -> (Vec<f64>, Vec<f64>) {
    let dim = grid.dim();
    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for (i, row) in grid.rows().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            plus[i] += p;
            minus[j] += p;
        }
    }
    (plus, minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    /// Total excitation `n+ + n-`, always even.
    pub n: usize,
    pub probability: f64,
    /// Number of parity-allowed states in the shell, `n/2 + 1`.
    pub degeneracy: usize,
}

impl Shell {
    pub fn per_state(&self) -> f64 {
        self.probability / self.degeneracy as f64
    }
}

/// Probability per energy shell. Only shells with `N <= n_max` are kept,
/// since higher anti-diagonals are clipped by the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellDistribution {
    pub shells: Vec<Shell>,
}

pub fn shell_distribution(grid: &SpectrumGrid) -> ShellDistribution {
    let shells = (0..=grid.n_max)
        .step_by(2)
        .map(|n| Shell {
            n,
            probability: (0..=n).step_by(2).map(|a| grid.get(a, n - a)).sum(),
            degeneracy: n / 2 + 1,
        })
        .collect();
    ShellDistribution { shells }
}

/// Data that decays with a level index: `(index, value)` pairs.
pub trait DecaySeries {
    fn decay_points(&self) -> Vec<(usize, f64)>;
}

impl DecaySeries for ShellDistribution {
    fn decay_points(&self) -> Vec<(usize, f64)> {
        self.shells.iter().map(|s| (s.n, s.per_state())).collect()
    }
}

/// A single mode's level distribution; only even levels are reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDistribution(pub Vec<f64>);

impl DecaySeries for LevelDistribution {
    fn decay_points(&self) -> Vec<(usize, f64)> {
        self.0.iter().copied().enumerate().step_by(2).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRange {
    pub min: usize,
    pub max: usize,
}

impl FitRange {
    /// `[2, largest index whose value exceeds FIT_FLOOR]`.
    pub fn default_for(series: &impl DecaySeries) -> Option<Self> {
        series
            .decay_points()
            .iter()
            .filter(|(_, v)| *v > FIT_FLOOR)
            .map(|(n, _)| *n)
            .max()
            .map(|max| FitRange { min: 2, max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    PowerLaw,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay exponent: `value ∝ n^{-exponent}` or `value ∝ exp(-exponent n)`.
    pub exponent: f64,
    pub r_squared: f64,
    pub fit_range: FitRange,
    pub points: usize,
}

fn fit_decay(series: &impl DecaySeries, range: Option<FitRange>, model: DecayModel) -> Result<DecayFit> {
    let insufficient = |found| Error::InsufficientData {
        found,
        required: MIN_FIT_POINTS,
    };
    let range = match range.or_else(|| FitRange::default_for(series)) {
        Some(r) => r,
        None => return Err(insufficient(0)),
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .decay_points()
        .into_iter()
        .filter(|&(n, v)| n >= range.min && n <= range.max && n > 0 && v > 0.0)
        .map(|(n, v)| {
            let x = match model {
                DecayModel::PowerLaw => (n as f64).ln(),
                DecayModel::Exponential => n as f64,
            };
            (x, v.ln())
        })
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(insufficient(xs.len()));
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| insufficient(xs.len()))?;
    Ok(DecayFit {
        model,
        exponent: -fit.slope,
        r_squared: fit.r_squared,
        fit_range: range,
        points: xs.len(),
    })
}

/// Least squares of `ln value` against `ln n`. Index 0 is always excluded.
pub fn fit_power_law(series: &impl DecaySeries, range: Option<FitRange>) -> Result<DecayFit> {
    fit_decay(series, range, DecayModel::PowerLaw)
}

/// Least squares of `ln value` against `n`.
pub fn fit_exponential(series: &impl DecaySeries, range: Option<FitRange>) -> Result<DecayFit> {
    fit_decay(series, range, DecayModel::Exponential)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Parametric resonance: power-law decay of the level populations.
    #[serde(rename = "PR")]
    Resonant,
    #[serde(rename = "off-resonant")]
    OffResonant,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Resonant => "PR",
            Regime::OffResonant => "off-resonant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    pub power_law: Option<DecayFit>,
    pub exponential: Option<DecayFit>,
    /// Too few populated levels to fit; classified off-resonant.
    pub degenerate: bool,
}

/// Resonant when the power law explains `ln value` better (higher r²) than the
/// exponential over the same default range.
pub fn classify_regime(series: &impl DecaySeries) -> Classification {
    let range = FitRange::default_for(series);
    let power_law = fit_power_law(series, range).ok();
    let exponential = fit_exponential(series, range).ok();
    match (power_law, exponential) {
        (Some(p), Some(e)) => Classification {
            regime: if p.r_squared > e.r_squared {
                Regime::Resonant
            } else {
                Regime::OffResonant
            },
            power_law,
            exponential,
            degenerate: false,
        },
        _ => Classification {
            regime: Regime::OffResonant,
            power_law,
            exponential,
            degenerate: true,
        },
    }
}
