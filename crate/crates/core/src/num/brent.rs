//! Brent's method for scalar root finding, with bracket expansion.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Find a root of `f` in `[a, b]`, which must bracket a sign change.
///
/// `xtol` is an absolute tolerance on the root location; convergence also
/// stops when the function value hits exactly zero.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!(
            "interval [{a}, {b}] does not bracket a sign change (f(a)={fa}, f(b)={fb})"
        )));
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation (secant when a == c).
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Err(Error::RootFinding(format!(
        "no convergence after {MAX_ITER} iterations (last x = {b})"
    )))
}

/// Expand `[lo, hi]` symmetrically (doubling the half-width) until `f`
/// changes sign across it, then run Brent.
pub fn brent_expanding<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64> {
    let center = 0.5 * (lo + hi);
    let mut half = 0.5 * (hi - lo);
    if half <= 0.0 {
        half = 1.0;
    }
    let mut a = center - half;
    let mut b = center + half;
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..64 {
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            return brent(f, a, b, xtol);
        }
        half *= 2.0;
        a = center - half;
        b = center + half;
        fa = f(a);
        fb = f(b);
    }
    Err(Error::RootFinding(format!(
        "no sign change found in [{a}, {b}] after bracket expansion"
    )))
}
