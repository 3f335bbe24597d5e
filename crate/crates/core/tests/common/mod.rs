//! Independent numerical oracles. Nothing here calls into the crate's
//! erfc or closed forms.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Splits `[a, b]` into panels no wider than `panel` before adaptive
/// refinement, so features narrower than the whole interval are not skipped.
pub fn integrate_panels(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panel: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let pieces = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            integrate(f, lo, hi, tol / pieces as f64)
        })
        .sum()
}

/// `2/sqrt(pi) * int_z^inf exp(-t^2) dt`, truncated at t = 10 (tail < 1e-44).
pub fn erfc_quadrature(z: f64) -> f64 {
    let upper = 10.0_f64.max(z + 1.0);
    2.0 / PI.sqrt() * integrate(&|t| (-t * t).exp(), z, upper, 1e-15)
}

pub fn gaussian(x: f64, mean: f64, sigma: f64) -> f64 {
    let u = (x - mean) / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * PI).sqrt())
}

pub fn mixture(x: f64, mean: f64, sigma: f64) -> f64 {
    0.5 * (gaussian(x, mean, sigma) + gaussian(x, -mean, sigma))
}

/// Integration window wide enough that both components' tails are negligible.
pub fn window(mean: f64, sigma: f64) -> (f64, f64) {
    let r = mean.abs() + 40.0 * sigma;
    (-r, r)
}

/// Postselection efficiency by integrating the mixture over `|n| > n0`.
pub fn efficiency_quadrature(n0: f64, mean: f64, sigma: f64) -> f64 {
    let (lo, hi) = window(mean, sigma);
    let tol = 1e-13;
    let f = |x: f64| mixture(x, mean, sigma);
    integrate_panels(&f, lo, -n0, sigma, tol) + integrate_panels(&f, n0, hi, sigma, tol)
}

/// BER as the wrong-side tail of the `+mean` component divided by the efficiency.
pub fn ber_quadrature(n0: f64, mean: f64, sigma: f64) -> f64 {
    let (lo, _) = window(mean, sigma);
    let wrong = integrate_panels(&|x| gaussian(x, mean, sigma), lo, -n0, sigma, 1e-13);
    wrong / efficiency_quadrature(n0, mean, sigma)
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
