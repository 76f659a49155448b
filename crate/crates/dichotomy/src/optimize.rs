//! Scalar searches: golden section, grid seeding, bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal `f` on [a, b]. Returns (argmin, min).
pub fn golden_min(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) && iter < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Evaluates `f` on an `n`-point uniform grid over [a, b], then refines around the best
/// grid point by golden section. NaN values are treated as +∞.
pub fn grid_golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let n = n.max(3);
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f64::INFINITY);
    let mut best_i = 0;
    for i in 0..n {
        let x = if i == n - 1 { b } else { a + h * i as f64 };
        let v = nan_high(f(x));
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    if !best.1.is_finite() && best.1 > 0.0 {
        return best;
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    let mut g = |x: f64| nan_high(f(x));
    let (x, v) = golden_min(&mut g, lo, hi, tol);
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}

pub fn grid_golden_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let (x, v) = grid_golden_min(|x| -f(x), a, b, n, tol);
    (x, -v)
}

#[inline]
fn nan_high(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Root of a continuous `f` on [a, b] given a sign change.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// `n` points tanh-spaced on (−half_width, half_width), denser near the origin.
pub fn tanh_grid(n: usize, half_width: f64) -> Vec<f64> {
    let s = 3.0;
    (0..n)
        .map(|i| {
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            half_width * (s * u).tanh() / s.tanh()
        })
        .collect()
}
