//! Energy, ground-state survival and resonance windows.

use serde::{Deserialize, Serialize};

use crate::drive::{DriveSpec, ModeLabel, ModeParams};
use crate::dynamics::GaussianModeState;
use crate::error::{Error, Result};
use crate::regression::{linear_fit, LinearFit};
use crate::spectra::SpectrumGrid;

/// `⟨H⟩` in units of `ħω₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub per_mode: Vec<f64>,
    /// `Σ Ω₀/2`, the energy before the drive.
    pub zero_point: f64,
}

impl EnergyReport {
    /// Energy absorbed from the drive.
    pub fn excess(&self) -> f64 {
        self.total - self.zero_point
    }
}

/// `(Ω₀² + 4|B|²) / (8 B_R)` for a normalized Gaussian.
pub fn mode_energy(state: &GaussianModeState, mode: &ModeParams) -> f64 {
    (mode.omega0_sq + 4.0 * state.b.norm_sqr()) / (8.0 * state.b.re)
}

pub fn energy(states: &[GaussianModeState], modes: &[ModeParams]) -> Result<EnergyReport> {
    if states.len() != modes.len() {
        return Err(Error::invalid("one state per mode is required"));
    }
    if let Some(s) = states.iter().find(|s| !(s.b.re > 0.0)) {
        return Err(Error::invalid(format!("Re B must be positive (got {})", s.b.re)));
    }
    let per_mode: Vec<f64> = states.iter().zip(modes).map(|(s, m)| mode_energy(s, m)).collect();
    Ok(EnergyReport {
        total: per_mode.iter().sum(),
        per_mode,
        zero_point: modes.iter().map(|m| m.omega0 / 2.0).sum(),
    })
}

pub fn ground_survival(grid: &SpectrumGrid) -> f64 {
    grid.get(0, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedWindow {
    pub label: ModeLabel,
    pub center: f64,
    pub half_width: f64,
}

impl PredictedWindow {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, detuning: f64) -> bool {
        (detuning - self.center).abs() < self.half_width
    }

    fn intersects(&self, other: &Self) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// First-order resonance windows in detuning, one per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub windows: Vec<PredictedWindow>,
    /// Whether any two windows intersect (no mode selectivity).
    pub overlap: bool,
}

/// Mode resonates when `2 + detuning ≈ 2Ω₀`, within `|Δ| < hΩ₀/2`.
pub fn predict_mode_windows(modes: &[ModeParams]) -> WindowPrediction {
    let windows: Vec<PredictedWindow> = modes
        .iter()
        .map(|m| PredictedWindow {
            label: m.label,
            center: 2.0 * (m.omega0 - 1.0),
            half_width: m.depth() * m.omega0 / 2.0,
        })
        .collect();
    let overlap = windows
        .iter()
        .enumerate()
        .any(|(i, w)| windows[i + 1..].iter().any(|v| w.intersects(v)));
    WindowPrediction { windows, overlap }
}

pub fn predict_windows(drive: &DriveSpec) -> WindowPrediction {
    predict_mode_windows(&drive.modes())
}

/// A detuning interval where `p00` drops below a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredWindow {
    pub lower: f64,
    pub upper: f64,
    /// Detuning of the smallest `p00` inside the window.
    pub min_detuning: f64,
    pub min_p00: f64,
}

impl MeasuredWindow {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Threshold on `p00` that delimits a measured window.
pub const WINDOW_THRESHOLD: f64 = 0.5;

const BISECTION_STEPS: usize = 30;
const GOLDEN_STEPS: usize = 40;

/// Finds the windows in a sampled `p00(detuning)` curve.
///
/// `curve` must be sorted by detuning. Edges where the curve crosses
/// `threshold` are refined by bisection and each minimum by golden-section
/// search between its grid neighbours, calling `p00_at` for the extra points.
pub fn locate_windows<F>(curve: &[(f64, f64)], threshold: f64, mut p00_at: F) -> Result<Vec<MeasuredWindow>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut windows = Vec::new();
    let mut i = 0;
    while i < curve.len() {
        if curve[i].1 >= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < curve.len() && curve[i].1 < threshold {
            i += 1;
        }
        let end = i - 1;

        let lower = if start == 0 {
            curve[0].0
        } else {
            bisect(curve[start - 1].0, curve[start].0, threshold, &mut p00_at)?
        };
        let upper = if end + 1 == curve.len() {
            curve[end].0
        } else {
            bisect(curve[end + 1].0, curve[end].0, threshold, &mut p00_at)?
        };

        let k = (start..=end)
            .min_by(|&a, &b| curve[a].1.total_cmp(&curve[b].1))
            .expect("non-empty window");
        let lo = curve[k.saturating_sub(1).max(start.saturating_sub(1))].0;
        let hi = curve[(k + 1).min(curve.len() - 1)].0;
        let (min_detuning, min_p00) = golden_min(lo, hi, curve[k], &mut p00_at)?;
        windows.push(MeasuredWindow {
            lower,
            upper,
            min_detuning,
            min_p00,
        });
    }
    Ok(windows)
}

/// `above` has p00 >= threshold, `below` has p00 < threshold.
fn bisect<F>(mut above: f64, mut below: f64, threshold: f64, f: &mut F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (above + below);
        if f(mid)? < threshold {
            below = mid;
        } else {
            above = mid;
        }
    }
    Ok(0.5 * (above + below))
}

fn golden_min<F>(mut a: f64, mut b: f64, best: (f64, f64), f: &mut F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = best;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Local maxima of a sampled curve whose value exceeds `floor`.
pub fn local_maxima(curve: &[(f64, f64)], floor: f64) -> Vec<(f64, f64)> {
    let n = curve.len();
    (0..n)
        .filter(|&i| {
            let v = curve[i].1;
            let left = i == 0 || curve[i - 1].1 < v;
            let right = i + 1 == n || curve[i + 1].1 <= v;
            v > floor && left && right
        })
        .map(|i| curve[i])
        .collect()
}

/// Fit of `ln(⟨H⟩ - zero point)` against the number of drive cycles.
pub fn pumping_fit(points: &[(u32, EnergyReport)]) -> Result<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, e)| e.excess() > 0.0)
        .map(|(nu, e)| (f64::from(*nu), e.excess().ln()))
        .unzip();
    linear_fit(&xs, &ys).ok_or(Error::InsufficientData {
        found: xs.len(),
        required: 2,
    })
}
