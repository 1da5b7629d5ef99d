//! Composite and adaptive Simpson quadrature.

/// Composite Simpson rule over `[a, b]` with `intervals` sub-intervals
/// (rounded up to an even count).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = even_intervals(intervals);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Simpson weights (without the `h/3` factor) for `intervals + 1` nodes.
pub fn simpson_weights(intervals: usize) -> Vec<f64> {
    let n = even_intervals(intervals);
    (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

pub(crate) fn even_intervals(intervals: usize) -> usize {
    let n = intervals.max(2);
    n + n % 2
}

/// Adaptive Simpson quadrature with Richardson correction.
///
/// The interval is first split into `panels` equal pieces so that integrands
/// with narrow support are not missed by the initial samples. Recursion stops
/// when the local error estimate is below `rel_tol * |estimate|` (or the
/// absolute floor `abs_tol`) or `max_depth` is reached.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    // A coarse pass fixes the magnitude used by the relative tolerance.
    let coarse = simpson(&f, a, b, 4 * panels);
    let tol = (rel_tol * coarse.abs()).max(abs_tol) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let fa = f(lo);
        let fb = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += recurse(&f, lo, hi, fa, fm, fb, whole, tol, 48);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
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
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_weights_match_rule() {
        let w = simpson_weights(5);
        assert_eq!(w, vec![1.0, 4.0, 2.0, 4.0, 2.0, 4.0, 1.0]);
    }

    #[test]
    fn adaptive_handles_narrow_support() {
        // A bump occupying 1% of the interval.
        let f = |x: f64| {
            if (x - 0.5).abs() < 0.005 {
                (PI * (x - 0.5) / 0.01).cos().powi(2)
            } else {
                0.0
            }
        };
        let v = adaptive_simpson(f, 0.0, 1.0, 256, 1e-10, 0.0);
        assert!((v - 0.005).abs() < 1e-9, "{v}");
    }

    #[test]
    fn adaptive_reaches_relative_tolerance() {
        let v = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1, 1e-9, 0.0);
        assert!((v - 2.0 / 3.0).abs() < 1e-8);
    }
}
