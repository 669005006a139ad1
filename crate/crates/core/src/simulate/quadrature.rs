//! Adaptive Simpson quadrature with an absolute error target.

use crate::error::{DupError, Result};

const MAX_DEPTH: u32 = 60;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute error about `tol`. The interval
/// is first cut into `initial` panels so narrow features are not skipped.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    initial: usize,
) -> Result<f64> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(DupError::domain(format!("bad integration interval [{a}, {b}]")));
    }
    if b == a {
        return Ok(0.0);
    }
    let initial = initial.max(1);
    let h = (b - a) / initial as f64;
    let mut stack = Vec::with_capacity(64);
    let mut fa = f(a);
    for p in 0..initial {
        let pa = a + h * p as f64;
        let pb = if p + 1 == initial { b } else { a + h * (p + 1) as f64 };
        let fm = f(0.5 * (pa + pb));
        let fb = f(pb);
        stack.push(Panel {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole: simpson(pa, pb, fa, fm, fb),
            tol: tol / initial as f64,
            depth: 0,
        });
        fa = fb;
    }
    let mut total = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        if p.fa == p.fm && p.fm == p.fb && p.fa == flm && p.fa == frm {
            // Flat panel: take the area directly so constant integrands
            // come out exact.
            total += (p.b - p.a) * p.fa;
            continue;
        }
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || m <= p.a || m >= p.b {
            total += left + right + delta / 15.0;
            continue;
        }
        if p.depth >= MAX_DEPTH {
            return Err(DupError::NonConvergence(format!(
                "adaptive Simpson exceeded depth {MAX_DEPTH} near [{}, {}]",
                p.a, p.b
            )));
        }
        let tol = 0.5 * p.tol;
        let depth = p.depth + 1;
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol, depth });
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol, depth });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth_functions() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12, 1).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10, 4).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = adaptive_simpson(|x| 1.0 / (1.0 + x).powi(2), 0.0, 1.0, 1e-10, 4).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(adaptive_simpson(|x| x, 1.0, 0.0, 1e-8, 1).is_err());
        assert!(adaptive_simpson(|x| x, 0.0, f64::INFINITY, 1e-8, 1).is_err());
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-8, 1).unwrap(), 0.0);
    }
}
