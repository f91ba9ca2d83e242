//! Adaptive Simpson integration on finite intervals.

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integrates over the open interval `(a, b)`; endpoints are never evaluated.
/// Used for quantile-transformed expectations whose integrand is singular
/// or undefined at the boundary.
pub fn integrate_open(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 64;
    let h = (b - a) / panels as f64;
    let shrink = h * 1e-9;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let lo = if i == 0 { lo + shrink } else { lo };
            let hi = if i == panels - 1 { hi - shrink } else { hi };
            integrate(f, lo, hi, tol / panels as f64)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
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
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let floor = 1e-12 * (left.abs() + right.abs());
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let v = integrate(&|x: f64| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-10);
        let v = integrate(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn open_interval_with_log_singularity() {
        // integral of -ln u over (0,1) is 1
        let v = integrate_open(&|u: f64| -u.ln(), 0.0, 1.0, 1e-10);
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }
}
