//! Reduction of N coupled oscillators to independent driven normal modes.
//!
//! The potential is `½ xᵀ (K₀ + K₁ sin((2 + detuning)τ)) x` in dimensionless
//! form. Diagonalizing `K₀` gives the normal modes; they stay independent under
//! the drive only if `K₁` is diagonal in the same basis, which is checked.

use serde::{Deserialize, Serialize};

use crate::drive::{DriveTiming, ModeLabel, ModeParams};
use crate::dynamics::{evolve, GaussianModeState};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;

/// Default tolerance on the off-diagonal part of the rotated `K₁`.
pub const DEFAULT_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Static (`k0`) and modulation (`k1`) coupling matrices, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrices {
    pub k0: Vec<Vec<f64>>,
    pub k1: Vec<Vec<f64>>,
}

impl CouplingMatrices {
    /// The two-oscillator matrices `[[1, β₀], [β₀, 1]]` and `[[0, β₁], [β₁, 0]]`.
    pub fn two_oscillator(beta0: f64, beta1: f64) -> Self {
        Self {
            k0: vec![vec![1.0, beta0], vec![beta0, 1.0]],
            k1: vec![vec![0.0, beta1], vec![beta1, 0.0]],
        }
    }

    pub fn n(&self) -> usize {
        self.k0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("coupling matrices are empty"));
        }
        for (name, m) in [("k0", &self.k0), ("k1", &self.k1)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::invalid(format!("{name} must be {n}x{n}")));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} has non-finite entries")));
            }
            for i in 0..n {
                for j in 0..i {
                    if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL {
                        return Err(Error::invalid(format!("{name} is not symmetric at ({i}, {j})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self {
            n: rows.len(),
            data: rows.iter().flatten().copied().collect(),
        }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.at(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `Vᵀ M V` restricted to the given columns of `v`.
    fn congruence(&self, v: &Square, cols: &[usize]) -> Square {
        let k = cols.len();
        let mut out = Square { n: k, data: vec![0.0; k * k] };
        for (a, &ca) in cols.iter().enumerate() {
            for (b, &cb) in cols.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..self.n {
                    let vi = v.at(i, ca);
                    if vi == 0.0 {
                        continue;
                    }
                    for j in 0..self.n {
                        s += (vi * v.at(j, cb)) * self.at(i, j);
                    }
                }
                out.set(a, b, s);
            }
        }
        out
    }
}

/// Cyclic Jacobi diagonalization of a symmetric matrix.
///
/// Returns the eigenvalues (unsorted) and the eigenvectors as the columns of
/// an orthogonal matrix. Rotations are applied in a fixed order so the result
/// is deterministic.
fn jacobi_eigen(m: &Square) -> (Vec<f64>, Square) {
    let n = m.n;
    let mut a = m.clone();
    let mut v = Square::identity(n);
    let target = 1e-14 * a.frobenius().max(f64::MIN_POSITIVE);
    for sweep in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= target {
            break;
        }
        // larger threshold for the first few sweeps
        let threshold = if sweep < 3 {
            0.2 * a.off_diagonal_norm() / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t * apq);
            }
        }
    }
    ((0..n).map(|i| a.at(i, i)).collect(), v)
}

fn rotate(a: &mut Square, v: &mut Square, p: usize, q: usize, c: f64, s: f64, shift: f64) {
    let n = a.n;
    let app = a.at(p, p);
    let aqq = a.at(q, q);
    a.set(p, p, app - shift);
    a.set(q, q, aqq + shift);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a.at(r, p);
        let arq = a.at(r, q);
        let new_rp = c * arp - s * arq;
        let new_rq = s * arp + c * arq;
        a.set(r, p, new_rp);
        a.set(p, r, new_rp);
        a.set(r, q, new_rq);
        a.set(q, r, new_rq);
    }
    for r in 0..n {
        let vrp = v.at(r, p);
        let vrq = v.at(r, q);
        v.set(r, p, c * vrp - s * vrq);
        v.set(r, q, s * vrp + c * vrq);
    }
}

/// Normal modes of a coupled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReduction {
    /// `eigvecs[i][k]` is component `i` of mode `k`.
    pub eigvecs: Vec<Vec<f64>>,
    /// Static frequency squared of each mode, in decreasing order.
    pub lambda0: Vec<f64>,
    /// Modulation amplitude of each mode (diagonal of the rotated `k1`).
    pub lambda1: Vec<f64>,
    /// Largest off-diagonal magnitude of the rotated `k1`.
    pub residual: f64,
}

impl ModeReduction {
    pub fn n(&self) -> usize {
        self.lambda0.len()
    }

    pub fn modes(&self) -> Vec<ModeParams> {
        self.lambda0
            .iter()
            .zip(&self.lambda1)
            .enumerate()
            .map(|(i, (&l0, &l1))| ModeParams::new(ModeLabel::Index(i), l0, l1).expect("validated reduction"))
            .collect()
    }
}

/// Diagonalizes `k0`, rotates `k1` into its eigenbasis and checks that the
/// rotated `k1` is diagonal to within `tol`.
///
/// Modes are ordered by decreasing `lambda0`; inside a degenerate eigenspace of
/// `k0` the basis is fixed by diagonalizing `k1` there, ordered by decreasing
/// `lambda1`. For the two-oscillator matrices this puts the `+` mode first.
pub fn reduce(cm: &CouplingMatrices, tol: f64) -> Result<ModeReduction> {
    cm.validate()?;
    let n = cm.n();
    let k0 = Square::from_rows(&cm.k0);
    let k1 = Square::from_rows(&cm.k1);

    let (vals, vecs) = jacobi_eigen(&k0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut v = Square::identity(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            v.set(i, new, vecs.at(i, old));
        }
    }
    let mut lambda0: Vec<f64> = order.iter().map(|&i| vals[i]).collect();

    if let Some(&bad) = lambda0.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite { eigenvalue: bad });
    }

    // re-diagonalize k1 inside each degenerate block of k0
    let scale = k0.frobenius().max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambda0[end - 1] - lambda0[end]).abs() <= 1e-10 * scale {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<usize> = (start..end).collect();
            let block = k1.congruence(&v, &cols);
            let (bvals, bvecs) = jacobi_eigen(&block);
            let mut border: Vec<usize> = (0..cols.len()).collect();
            border.sort_by(|&a, &b| bvals[b].total_cmp(&bvals[a]));
            let old = v.clone();
            for (new_local, &b) in border.iter().enumerate() {
                for i in 0..n {
                    let s: f64 = cols.iter().enumerate().map(|(k, &c)| old.at(i, c) * bvecs.at(k, b)).sum();
                    v.set(i, start + new_local, s);
                }
            }
            let mean = lambda0[start..end].iter().sum::<f64>() / (end - start) as f64;
            lambda0[start..end].iter_mut().for_each(|l| *l = mean);
        }
        start = end;
    }

    // sign convention: largest-magnitude component of each mode is positive
    for k in 0..n {
        let pivot = (0..n).max_by(|&a, &b| v.at(a, k).abs().total_cmp(&v.at(b, k).abs())).unwrap();
        if v.at(pivot, k) < 0.0 {
            for i in 0..n {
                v.set(i, k, -v.at(i, k));
            }
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let rotated = k1.congruence(&v, &all);
    // Rayleigh quotients, so rounding in the eigenvector norms cancels
    let lambda1: Vec<f64> = (0..n)
        .map(|k| rotated.at(k, k) / (0..n).map(|i| v.at(i, k).powi(2)).sum::<f64>())
        .collect();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                residual = residual.max(rotated.at(i, j).abs());
            }
        }
    }
    if residual >= tol {
        return Err(Error::NotSimultaneouslyDiagonalizable { residual, tol });
    }
    Ok(ModeReduction {
        eigvecs: (0..n).map(|i| (0..n).map(|k| v.at(i, k)).collect()).collect(),
        lambda0,
        lambda1,
        residual,
    })
}

/// Evolves every normal mode independently through the drive.
pub fn evolve_all(red: &ModeReduction, timing: &DriveTiming, cfg: &IntegratorConfig) -> Result<Vec<GaussianModeState>> {
    red.modes().iter().map(|m| evolve(m, timing, cfg)).collect()
}
