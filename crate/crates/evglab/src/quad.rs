//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{LabError, Result};
use crate::scalar::Real;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel; returns (estimate, |Kronrod - Gauss|).
pub fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Fixed 15-point Kronrod rule, no error estimate.
pub fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> T {
    gk15(f, a, b).0
}

/// The 15 Kronrod nodes and weights mapped to `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out = [(c, h * WGK[7]); 15];
    for j in 0..7 {
        out[2 * j] = (c - h * XGK[j], h * WGK[j]);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j]);
    }
    out
}

struct Panel<T> {
    a: T,
    b: T,
    val: T,
    err: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.as_f64().total_cmp(&o.err.as_f64())
    }
}

/// Integration settings.
#[derive(Clone, Copy, Debug)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol { rel, abs: 0.0, max_panels: 4000 }
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: Tol) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e });
    let mut total = v;
    let mut err = e;
    let rel = T::lit(tol.rel);
    let abs = T::lit(tol.abs);
    let tiny = T::epsilon() * T::lit(100.0);
    loop {
        if !total.is_finite() {
            return Err(LabError::Quadrature { a: a.as_f64(), b: b.as_f64() });
        }
        if err <= abs.max(rel * total.abs()) || err <= T::min_positive_value() {
            return Ok(total);
        }
        if heap.len() >= tol.max_panels {
            let worst = heap.peek().unwrap();
            return Err(LabError::Quadrature { a: worst.a.as_f64(), b: worst.b.as_f64() });
        }
        let p = heap.pop().unwrap();
        let m = T::lit(0.5) * (p.a + p.b);
        if (p.b - p.a).abs() <= tiny * (p.a.abs() + p.b.abs()) {
            // cannot split further; accept if the remaining error is round-off sized
            if p.err <= T::lit(1e3) * T::epsilon() * total.abs() {
                heap.push(p);
                return Ok(total);
            }
            return Err(LabError::Quadrature { a: p.a.as_f64(), b: p.b.as_f64() });
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total = total - p.val + v1 + v2;
        err = err - p.err + e1 + e2;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
        if err < T::zero() {
            // accumulated round-off in the running error; recompute from panels
            err = heap.iter().fold(T::zero(), |s, q| s + q.err);
        }
    }
}

/// Integrate over `[a, b]` with `0 < a < b`, splitting geometrically into octaves first.
/// Suited to integrands with power-law behaviour over many decades.
pub fn integrate_log<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: Tol) -> Result<T> {
    assert!(a > T::zero() && b >= a);
    let mut sum = T::zero();
    let mut lo = a;
    let two = T::lit(2.0);
    while lo < b {
        let hi = (lo * two).min(b);
        sum = sum + integrate(&mut f, lo, hi, tol)?;
        lo = hi;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x: f64| x.powi(5), 0.0, 2.0, Tol::rel(1e-14)).unwrap();
        assert!((v - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn peaked() {
        let v = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tol::rel(1e-12)).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((v - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn power_over_decades() {
        let v = integrate_log(|x: f64| x.powi(-2), 1e-3, 1e6, Tol::rel(1e-13)).unwrap();
        assert!(((v - (1e3 - 1e-6)) / 1e3).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, Tol::rel(1e-5)).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }
}
