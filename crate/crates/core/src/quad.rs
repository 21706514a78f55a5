//! Adaptive Simpson quadrature for smooth one-dimensional integrands.

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

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
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        // Richardson extrapolation of the two panels.
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates f over [a, b] (signed when a > b) to absolute tolerance `tol`
/// with at most `max_depth` bisection levels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let flo = f(lo);
    let fm = f(m);
    let fhi = f(hi);
    let whole = simpson(flo, fm, fhi, lo, hi);
    sign * recurse(&f, lo, hi, flo, fm, fhi, whole, tol, max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12, 40);
        assert!((v - 9.0).abs() < 1e-10);
    }

    #[test]
    fn signed_when_reversed() {
        let v = adaptive_simpson(|x| x, 2.0, 0.0, 1e-12, 40);
        assert!((v + 2.0).abs() < 1e-10);
    }

    #[test]
    fn matches_known_gaussian_mass() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(phi, -8.0, 8.0, 1e-12, 40);
        assert!((v - 1.0).abs() < 1e-9);
    }
}
