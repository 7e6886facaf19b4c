//! Quadrature and one-dimensional root finding / maximization.

use crate::error::{MrpError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `abs_tol`, or fails after `max_segments` pieces.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            segments: 0,
        });
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(MrpError::Numeric(format!(
            "invalid integration bounds [{a}, {b}]"
        )));
    }
    let mut segments = vec![gauss_kronrod_15(&f, a, b)];
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(MrpError::Numeric(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if error <= abs_tol {
            return Ok(Integral {
                value,
                error,
                segments: segments.len(),
            });
        }
        if segments.len() >= max_segments {
            let worst = segments
                .iter()
                .max_by(|x, y| x.error.total_cmp(&y.error))
                .expect("non-empty");
            return Err(MrpError::Numeric(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {value}, error {error} > {abs_tol} \
                 after {} segments (worst piece [{}, {}] with error {})",
                segments.len(),
                worst.a,
                worst.b,
                worst.error
            )));
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(MrpError::Numeric(format!(
                "interval [{}, {}] cannot be subdivided further",
                s.a, s.b
            )));
        }
        segments.push(gauss_kronrod_15(&f, s.a, mid));
        segments.push(gauss_kronrod_15(&f, mid, s.b));
    }
}

/// Brent's method for a root of `f` in a bracket `[a, b]` with a sign change.
pub fn brent_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(MrpError::Numeric(format!(
            "root not bracketed in [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(MrpError::Numeric(format!(
        "root finding did not converge near {b}"
    )))
}

/// Maximum of `f` over `[a, b]`: a dense scan followed by golden-section refinement
/// around the best grid point.
pub fn maximize(f: impl Fn(f64) -> f64, a: f64, b: f64, scan_points: usize) -> (f64, f64) {
    let n = scan_points.max(3);
    let step = (b - a) / (n - 1) as f64;
    let (mut best_x, mut best_f) = (a, f(a));
    for i in 1..n {
        let x = a + step * i as f64;
        let v = f(x);
        if v > best_f {
            best_x = x;
            best_f = v;
        }
    }
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    if v > best_f {
        (x, v)
    } else {
        (best_x, best_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn integrates_peaked_functions() {
        let r = integrate(|x| (-x).exp(), 0.0, 50.0, 1e-12, 1000).unwrap();
        assert!((r.value - (1.0 - (-50.0_f64).exp())).abs() < 1e-12);
        // integrable sqrt singularity of the derivative at 0
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10, 1000).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(|x: f64| 1.0 / x, 1e-300, 1.0, 1e-14, 10);
        assert!(matches!(r, Err(MrpError::Numeric(_))));
    }

    #[test]
    fn brent_finds_roots() {
        let r = brent_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-13);
        assert!(brent_root(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn maximize_smooth_bump() {
        let (x, v) = maximize(|x| -(x - 1.3) * (x - 1.3) + 2.0, 0.0, 4.0, 50);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
