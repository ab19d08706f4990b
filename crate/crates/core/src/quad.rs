//! Adaptive Simpson quadrature on finite intervals and on the whole line.

fn simpson_step<F: Fn(f64) -> f64>(
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
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// ∫_a^b f with absolute tolerance `tol`.
///
/// The interval is first cut into 16 panels so that narrow features are not
/// missed by the initial five-point estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == PANELS { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40);
    }
    total
}

/// ∫_ℝ f for an integrable `f` concentrated near `center`.
///
/// Integrates `[center - 1, center + 1]` and then geometrically growing shells
/// on both sides until a shell contributes less than `tol / 100`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, center: f64, tol: f64) -> f64 {
    let mut total = integrate(&f, center - 1.0, center + 1.0, tol);
    for side in [-1.0, 1.0] {
        let mut inner = 1.0;
        for shell in 0..16 {
            let outer = inner * 2.0;
            let (a, b) = if side > 0.0 {
                (center + inner, center + outer)
            } else {
                (center - outer, center - inner)
            };
            let part = integrate(&f, a, b, tol);
            total += part;
            if shell >= 2 && part.abs() < tol / 100.0 {
                break;
            }
            inner = outer;
        }
    }
    total
}
