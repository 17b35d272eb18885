//! Cumulative Simpson quadrature on a uniform [`TimeGrid`].

use num_complex::Complex64 as C64;

use crate::propagation::TimeGrid;

/// `∫_{t0}^{t_k} f` for every grid point, Simpson's rule per interval using
/// the interval midpoint (the integrand must be evaluable off-grid).
pub fn cumulative_simpson_fn(grid: &TimeGrid, f: impl Fn(f64) -> C64) -> Vec<C64> {
    let h = grid.dt();
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = C64::new(0.0, 0.0);
    let mut left = f(grid.point(0));
    out.push(acc);
    for k in 0..grid.steps() {
        let t = grid.point(k);
        let right = f(grid.point(k + 1));
        acc += (left + f(t + 0.5 * h) * 4.0 + right) * (h / 6.0);
        out.push(acc);
        left = right;
    }
    out
}

/// Simpson integral of `f` over `[a, b]` with one midpoint.
pub fn simpson(a: f64, b: f64, f: impl Fn(f64) -> C64) -> C64 {
    (f(a) + f(0.5 * (a + b)) * 4.0 + f(b)) * ((b - a) / 6.0)
}

/// Cumulative composite Simpson over equally spaced samples.
///
/// Even indices use composite Simpson over interval pairs; odd indices add the
/// last interval with the three-point formula `h(−f₀ + 8f₁ + 5f₂)/12`.
/// The first interval (index 1) uses `h(5f₀ + 8f₁ − f₂)/12`.
pub fn cumulative_simpson_samples(values: &[C64], h: f64) -> Vec<C64> {
    let n = values.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = (values[0] + values[1]) * (0.5 * h);
        return out;
    }
    out[1] = (values[0] * 5.0 + values[1] * 8.0 - values[2]) * (h / 12.0);
    let mut even = C64::new(0.0, 0.0);
    for k in (2..n).step_by(2) {
        even += (values[k - 2] + values[k - 1] * 4.0 + values[k]) * (h / 3.0);
        out[k] = even;
        if k + 1 < n {
            out[k + 1] =
                even + (-values[k - 1] + values[k] * 8.0 + values[k + 1] * 5.0) * (h / 12.0);
        }
    }
    out
}

pub fn cumulative_simpson_real(values: &[f64], h: f64) -> Vec<f64> {
    let z: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
    cumulative_simpson_samples(&z, h).into_iter().map(|z| z.re).collect()
}
