#![allow(dead_code)]

use paramode::{Complex64, GaussianModeState};

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

/// Adaptive Gauss-Kronrod on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Complex64 {
    let mut stack = vec![(a, b, tol)];
    let mut total = Complex64::new(0.0, 0.0);
    while let Some((lo, hi, t)) = stack.pop() {
        let (v, err) = gk15(&f, lo, hi);
        if err <= t || hi - lo < 1e-9 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * t));
            stack.push((mid, hi, 0.5 * t));
        }
    }
    total
}

/// Normalized oscillator eigenfunctions `φ_0..=φ_n` at `x` for frequency `omega`.
pub fn eigenfunctions(x: f64, omega: f64, n: usize) -> Vec<f64> {
    let xi = omega.sqrt() * x;
    let mut out = Vec::with_capacity(n + 1);
    let h0 = (omega / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
    out.push(h0);
    if n >= 1 {
        out.push(std::f64::consts::SQRT_2 * xi * h0);
    }
    for k in 1..n {
        let next = (2.0 / (k + 1) as f64).sqrt() * xi * out[k] - (k as f64 / (k + 1) as f64).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `⟨n|ψ⟩` for `n = 0..=n_max` by direct quadrature.
pub fn quadrature_overlaps(state: &GaussianModeState, omega: f64, n_max: usize) -> Vec<Complex64> {
    // The eigenfunctions confine the integrand whatever the width of ψ.
    let reach = ((2 * n_max + 1) as f64 / omega).sqrt() + 12.0 / omega.sqrt();
    (0..=n_max)
        .map(|n| {
            integrate(
                |x| {
                    let phi = eigenfunctions(x, omega, n)[n];
                    state.a * (-state.b * x * x).exp() * phi
                },
                -reach,
                reach,
                1e-13,
            )
        })
        .collect()
}

/// A normalized Gaussian with the given width parameter and phase of `A`.
pub fn gaussian(b: Complex64, phase: f64) -> GaussianModeState {
    let a = (2.0 * b.re / std::f64::consts::PI).powf(0.25) * Complex64::from_polar(1.0, phase);
    GaussianModeState { a, b, tau: 0.0 }
}
