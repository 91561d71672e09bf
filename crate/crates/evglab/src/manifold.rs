//! Rotationally symmetric model manifolds `dr^2 + f(r)^2 g_{S^{n-1}}` with nonnegative
//! curvature and Euclidean volume growth.
//!
//! All volume quantities are computed from the excess `f(r) - c r`, which keeps the
//! remainder `Lambda(r) = V/(B_n r^n) - sigma` free of cancellation at every scale.

use crate::error::{LabError, Result};
use crate::linalg::geomspace;
use crate::quad::{integrate, integrate_log, Tol};
use crate::report::ExperimentReport;
use crate::scalar::Real;
use crate::special::{unit_ball_volume, unit_sphere_area};
use crate::tol;
use serde::{Deserialize, Serialize};

/// Warping profile family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `f(r) = r`.
    Euclidean,
    /// `f(r) = c r + (1 - c)(1 - e^{-r})`.
    ExpTaper { c: f64 },
    /// `f'(r) = c + (1 - c)(1 + r)^{-a}`, `f(0) = 0`.
    PolyTaper { c: f64, a: f64 },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::ExpTaper { .. } => "exp_taper",
            Family::PolyTaper { .. } => "poly_taper",
        }
    }

    /// Build from a tag and optional parameters (`c`, `a`).
    pub fn from_tag(tag: &str, c: Option<f64>, a: Option<f64>) -> Result<Self> {
        let need = |v: Option<f64>, k: &str| {
            v.ok_or_else(|| LabError::InvalidParameter(format!("{tag} needs parameter {k}")))
        };
        match tag {
            "euclidean" => Ok(Family::Euclidean),
            "exp_taper" => Ok(Family::ExpTaper { c: need(c, "c")? }),
            "poly_taper" => Ok(Family::PolyTaper { c: need(c, "c")?, a: need(a, "a")? }),
            other => Err(LabError::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

/// Lowest and highest dyadic nodes of the cached cumulative integrals.
const K_LO_CAP: i32 = -80;
const K_HI_CAP: i32 = 100;

#[derive(Clone, Debug)]
pub struct ModelManifold<T: Real> {
    n: usize,
    family: Family,
    c: T,
    a: T,
    sigma: T,
    omega: T,
    ball: T,
    k_lo: i32,
    k_hi: i32,
    /// `W(2^k) = int_0^{2^k} (f^{n-1} - (c s)^{n-1}) ds`.
    w_nodes: Vec<T>,
    /// `int_{2^k}^inf ds / A(s)` when `n >= 3`.
    g_nodes: Vec<T>,
}

impl<T: Real> ModelManifold<T> {
    /// Validate parameters and the curvature conditions on a log grid `[1e-3, r_max]`.
    pub fn new(family: Family, n: usize, r_max: f64) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidParameter(format!("dimension n = {n} < 2")));
        }
        let (c, a) = match family {
            Family::Euclidean => (1.0, 1.0),
            Family::ExpTaper { c } => (c, 1.0),
            Family::PolyTaper { c, a } => (c, a),
        };
        if !(c > 0.0 && c <= 1.0) {
            return Err(LabError::InvalidParameter(format!("c = {c} outside (0, 1]")));
        }
        if !(a > 0.0) {
            return Err(LabError::InvalidParameter(format!("a = {a} must be positive")));
        }
        let nf = n as f64;
        let min_exp = T::min_positive_value().as_f64().log2();
        let max_exp = T::max_value().as_f64().log2();
        let k_lo = K_LO_CAP.max((min_exp / nf).ceil() as i32 + 2);
        let k_hi = K_HI_CAP.min((max_exp / nf).floor() as i32 - 2);
        let mut m = ModelManifold {
            n,
            family,
            c: T::lit(c),
            a: T::lit(a),
            sigma: T::lit(c).powi(n as i32 - 1),
            omega: unit_sphere_area(n),
            ball: unit_ball_volume(n),
            k_lo,
            k_hi,
            w_nodes: Vec::new(),
            g_nodes: Vec::new(),
        };
        m.validate(r_max, 400)?;
        m.build_tables()?;
        Ok(m)
    }

    fn build_tables(&mut self) -> Result<()> {
        let rel = Tol::rel(tol::TABLE_REL.max(T::epsilon().as_f64() * 100.0));
        let count = (self.k_hi - self.k_lo + 1) as usize;
        let mut w = Vec::with_capacity(count);
        let r0 = self.node(self.k_lo);
        w.push(self.small_w(r0));
        for k in self.k_lo..self.k_hi {
            let piece = integrate(|s| self.w_integrand(s), self.node(k), self.node(k + 1), rel)?;
            let last = *w.last().unwrap();
            w.push(last + piece);
        }
        self.w_nodes = w;
        if self.n >= 3 {
            let mut g = vec![T::zero(); count];
            g[count - 1] = self.cone_tail(self.node(self.k_hi));
            for k in (self.k_lo..self.k_hi).rev() {
                let i = (k - self.k_lo) as usize;
                let piece = integrate(|s| self.area(s).recip(), self.node(k), self.node(k + 1), rel)?;
                g[i] = g[i + 1] + piece;
            }
            self.g_nodes = g;
        }
        Ok(())
    }

    #[inline]
    fn node(&self, k: i32) -> T {
        T::lit(2.0).powi(k)
    }

    fn small_w(&self, r: T) -> T {
        (T::one() - self.sigma) * pow_n(r, self.n) / T::from_usize_lossy(self.n)
    }

    fn cone_tail(&self, r: T) -> T {
        let nm2 = T::from_usize_lossy(self.n - 2);
        r.powi(2 - self.n as i32) / (nm2 * self.omega * self.sigma)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn family(&self) -> Family {
        self.family
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    /// Limit slope `c = lim f(r)/r`.
    pub fn slope(&self) -> T {
        self.c
    }
    /// Area of the unit sphere `omega_{n-1}`.
    pub fn omega(&self) -> T {
        self.omega
    }
    /// Volume of the Euclidean unit ball `B_n`.
    pub fn ball(&self) -> T {
        self.ball
    }
    pub fn is_euclidean(&self) -> bool {
        self.c == T::one()
    }

    pub fn descriptor(&self) -> String {
        match self.family {
            Family::Euclidean => format!("euclidean(n={})", self.n),
            Family::ExpTaper { c } => format!("exp_taper(n={},c={})", self.n, c),
            Family::PolyTaper { c, a } => format!("poly_taper(n={},c={},a={})", self.n, c, a),
        }
    }

    /// `(1 + r)^{1-a}` antiderivative piece of the poly taper, stable near 0.
    fn poly_q(&self, r: T) -> T {
        let one = T::one();
        if self.a == one {
            r.ln_1p()
        } else {
            ((one - self.a) * r.ln_1p()).exp_m1() / (one - self.a)
        }
    }

    /// `f(r) - c r`.
    pub fn excess(&self, r: T) -> T {
        let one = T::one();
        match self.family {
            Family::Euclidean => T::zero(),
            Family::ExpTaper { .. } => (one - self.c) * (-(-r).exp_m1()),
            Family::PolyTaper { .. } => (one - self.c) * self.poly_q(r),
        }
    }

    pub fn f(&self, r: T) -> T {
        self.c * r + self.excess(r)
    }

    pub fn df(&self, r: T) -> T {
        let one = T::one();
        match self.family {
            Family::Euclidean => one,
            Family::ExpTaper { .. } => self.c + (one - self.c) * (-r).exp(),
            Family::PolyTaper { .. } => self.c + (one - self.c) * (one + r).powf(-self.a),
        }
    }

    pub fn d2f(&self, r: T) -> T {
        let one = T::one();
        match self.family {
            Family::Euclidean => T::zero(),
            Family::ExpTaper { .. } => -(one - self.c) * (-r).exp(),
            Family::PolyTaper { .. } => -self.a * (one - self.c) * (one + r).powf(-self.a - one),
        }
    }

    /// `f^{n-1} - (c s)^{n-1}`, factored through the excess.
    fn w_integrand(&self, s: T) -> T {
        let e = self.excess(s);
        let f = self.f(s);
        let cs = self.c * s;
        let mut sum = T::zero();
        let mut fk = T::one();
        for k in 0..=(self.n - 2) {
            sum = sum + fk * cs.powi((self.n - 2 - k) as i32);
            fk = fk * f;
        }
        e * sum
    }

    /// Area of the geodesic sphere `A(r) = omega_{n-1} f(r)^{n-1}`.
    pub fn area(&self, r: T) -> T {
        self.omega * self.f(r).powi(self.n as i32 - 1)
    }

    /// Excess volume integral `int_0^r (f^{n-1} - (c s)^{n-1}) ds`.
    pub fn excess_volume(&self, r: T) -> T {
        let r0 = self.node(self.k_lo);
        if r <= r0 {
            return self.small_w(r);
        }
        let rel = Tol::rel(tol::TABLE_REL.max(T::epsilon().as_f64() * 100.0));
        let k = r.log2().floor().as_f64() as i32;
        if k >= self.k_hi {
            let top = self.node(self.k_hi);
            let tail = integrate_log(|s| self.w_integrand(s), top, r, rel)
                .expect("excess volume quadrature");
            return self.w_nodes[self.w_nodes.len() - 1] + tail;
        }
        let lo = self.node(k);
        let piece = integrate(|s| self.w_integrand(s), lo, r, rel).expect("excess volume quadrature");
        self.w_nodes[(k - self.k_lo) as usize] + piece
    }

    /// Volume of the geodesic ball `B(o, r)`.
    pub fn volume(&self, r: T) -> T {
        let nf = T::from_usize_lossy(self.n);
        self.omega * (self.sigma * pow_n(r, self.n) / nf + self.excess_volume(r))
    }

    /// Volume ratio remainder `V(r)/(B_n r^n) - sigma`.
    pub fn lambda(&self, r: T) -> T {
        // below the first node V is the small-ball law exactly, and r^n may underflow
        if r <= self.node(self.k_lo) {
            return T::one() - self.sigma;
        }
        let mut q = self.excess_volume(r);
        for _ in 0..self.n {
            q = q / r;
        }
        q * T::from_usize_lossy(self.n)
    }

    pub fn sigma_x(&self, r: T) -> T {
        self.sigma + self.lambda(r)
    }

    /// `(f/r)^{n-1} - sigma`, computed from the excess.
    pub fn tau_remainder(&self, r: T) -> T {
        if r <= T::zero() {
            return T::one() - self.sigma;
        }
        let q = self.f(r) / r;
        let mut sum = T::zero();
        let mut qk = T::one();
        for k in 0..=(self.n - 2) {
            sum = sum + qk * self.c.powi((self.n - 2 - k) as i32);
            qk = qk * q;
        }
        self.excess(r) / r * sum
    }

    pub fn tau_x(&self, r: T) -> T {
        self.sigma + self.tau_remainder(r)
    }

    /// Solve `V(r) = v` for `r`.
    pub fn inverse_volume(&self, v: T) -> T {
        if v <= T::zero() {
            return T::zero();
        }
        let inv_n = T::one() / T::from_usize_lossy(self.n);
        let mut lo = (v / self.ball).powf(inv_n);
        let mut hi = (v / (self.sigma * self.ball)).powf(inv_n);
        if hi <= lo {
            return lo;
        }
        let mut r = (lo * hi).sqrt();
        for _ in 0..200 {
            let g = self.volume(r) - v;
            if g > T::zero() {
                hi = r;
            } else {
                lo = r;
            }
            let mut next = r - g / self.area(r);
            if !(next > lo && next < hi) {
                next = T::lit(0.5) * (lo + hi);
            }
            if (next - r).abs() <= T::lit(4.0) * T::epsilon() * r || hi - lo <= T::lit(4.0) * T::epsilon() * r {
                return next;
            }
            r = next;
        }
        r
    }

    /// Minimal positive Green function of `-Delta` with pole at `o`, `int_r^inf ds/A(s)`.
    pub fn green2(&self, r: T) -> T {
        assert!(self.n >= 3, "G_2 needs n >= 3");
        let rel = Tol::rel(tol::TABLE_REL.max(T::epsilon().as_f64() * 100.0));
        let r0 = self.node(self.k_lo);
        if r <= r0 {
            let nm2 = T::from_usize_lossy(self.n - 2);
            let e = 2 - self.n as i32;
            return self.g_nodes[0] + (r.powi(e) - r0.powi(e)) / (nm2 * self.omega);
        }
        let k = r.log2().floor().as_f64() as i32;
        if k >= self.k_hi {
            return self.cone_tail(r);
        }
        let hi = self.node(k + 1);
        let piece = integrate(|s| self.area(s).recip(), r, hi, rel).expect("Green quadrature");
        self.g_nodes[(k + 1 - self.k_lo) as usize] + piece
    }

    /// `G_2'(r) = -1/A(r)`.
    pub fn dgreen2(&self, r: T) -> T {
        -self.area(r).recip()
    }

    /// `c_2 = 1/((n-2) omega_{n-1})`.
    pub fn c2(&self) -> T {
        (T::from_usize_lossy(self.n - 2) * self.omega).recip()
    }

    /// `b = (sigma G_2 / c_2)^{1/(2-n)}`.
    pub fn b(&self, r: T) -> T {
        let e = T::one() / T::from_usize_lossy(self.n - 2);
        (self.sigma * self.green2(r) / self.c2()).powf(-e)
    }

    /// `b'(r) = b / ((n-2) A G_2)`.
    pub fn db(&self, r: T) -> T {
        let nm2 = T::from_usize_lossy(self.n - 2);
        self.b(r) / (nm2 * self.area(r) * self.green2(r))
    }

    /// Solve `b(r) = beta`.
    pub fn inverse_b(&self, beta: T) -> T {
        let e = T::one() / T::from_usize_lossy(self.n - 2);
        let lo = (beta * self.sigma.powf(e)).ln();
        let hi = beta.ln();
        if hi <= lo {
            return beta;
        }
        let x = crate::roots::bisect(|x: T| self.b(x.exp()) - beta, lo, hi, T::epsilon() * T::lit(4.0))
            .unwrap_or(hi);
        x.exp()
    }

    fn validate(&self, r_max: f64, points: usize) -> Result<()> {
        for r in geomspace(1e-3, r_max.max(1e-2), points) {
            let r = T::lit(r);
            let (f, df, d2f) = (self.f(r), self.df(r), self.d2f(r));
            if !(f > T::zero()) {
                return Err(LabError::Geometry(format!("f({}) = {} not positive", r, f)));
            }
            if d2f > T::lit(tol::CURVATURE) {
                return Err(LabError::Geometry(format!("f''({}) = {} > 0", r, d2f)));
            }
            if !(df > T::zero() && df <= T::one() + T::epsilon()) {
                return Err(LabError::Geometry(format!("f'({}) = {} outside (0, 1]", r, df)));
            }
            if r * df > f * (T::one() + T::lit(1e3) * T::epsilon()) {
                return Err(LabError::Geometry(format!("r f'(r) > f(r) at r = {}", r)));
            }
        }
        Ok(())
    }
}

#[inline]
fn pow_n<T: Real>(r: T, n: usize) -> T {
    r.powi(n as i32)
}

/// Sampled volume quantities on a radial grid.
#[derive(Clone, Debug)]
pub struct VolumeProfile {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub tau_x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tau_rem: Vec<f64>,
}

impl<T: Real> ModelManifold<T> {
    pub fn volume_profile(&self, r_grid: &[f64]) -> Result<VolumeProfile> {
        if r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid.first().is_some_and(|&r| r <= 0.0) {
            return Err(LabError::InvalidParameter("radial grid must be positive and increasing".into()));
        }
        let mut p = VolumeProfile {
            r: r_grid.to_vec(),
            v: vec![],
            a: vec![],
            sigma_x: vec![],
            tau_x: vec![],
            lambda: vec![],
            tau_rem: vec![],
        };
        for &r in r_grid {
            let rt = T::lit(r);
            let lam = self.lambda(rt).as_f64();
            let trem = self.tau_remainder(rt).as_f64();
            p.v.push(self.volume(rt).as_f64());
            p.a.push(self.area(rt).as_f64());
            p.lambda.push(lam);
            p.tau_rem.push(trem);
            p.sigma_x.push(self.sigma.as_f64() + lam);
            p.tau_x.push(self.sigma.as_f64() + trem);
        }
        Ok(p)
    }
}

/// `psi(t) = (t^{(n-1)/n} - 1)/(t - 1)`.
pub fn psi(n: usize, t: f64) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) / nf * t.ln()).exp_m1() / (t - 1.0)
}

/// Bishop-type volume geometry checks on a log grid.
pub fn geometry_check(m: &ModelManifold<f64>, r_max: f64, points: usize) -> Result<ExperimentReport> {
    let grid = geomspace(1e-3, r_max, points);
    let p = m.volume_profile(&grid)?;
    let mut rep = ExperimentReport::new("manifold", m.descriptor());
    rep.meta("grid", format!("log[1e-3,{r_max:e}]x{points}"));
    rep.meta("volume_rel_tol", tol::VOLUME_REL);
    let sigma = m.sigma();
    let bn = m.ball();
    let n = m.n() as i32;

    let mut worst_mono = f64::NEG_INFINITY;
    for w in p.sigma_x.windows(2).chain(p.tau_x.windows(2)) {
        worst_mono = worst_mono.max(w[1] - w[0]);
    }
    rep.hard(
        "manifold.ratio_monotone",
        "sigma_x and tau_x nonincreasing",
        worst_mono,
        format!("max increment <= {:e}", tol::MONOTONE),
        worst_mono <= tol::MONOTONE,
    );

    let mut worst_sandwich = f64::NEG_INFINITY;
    for (&r, &v) in p.r.iter().zip(&p.v) {
        let e = bn * r.powi(n);
        let lower = (sigma * e - v) / e;
        let upper = (v - e) / e;
        worst_sandwich = worst_sandwich.max(lower).max(upper);
    }
    rep.hard(
        "manifold.volume_sandwich",
        "sigma B_n r^n <= V <= B_n r^n",
        worst_sandwich,
        format!("relative violation <= {:e}", tol::VOLUME_REL),
        worst_sandwich <= tol::VOLUME_REL,
    );

    let worst_tau = p
        .tau_rem
        .iter()
        .zip(&p.lambda)
        .map(|(t, l)| t - l)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.hard(
        "manifold.tau_below_sigma",
        "tau_x <= sigma_x",
        worst_tau,
        format!("<= {:e}", tol::TXSX_UPPER),
        worst_tau <= tol::TXSX_UPPER,
    );

    let worst_lap = grid
        .iter()
        .map(|&r| (r * m.df(r) - m.f(r)) / m.f(r))
        .fold(f64::NEG_INFINITY, f64::max);
    rep.hard(
        "manifold.laplacian_comparison",
        "r f'(r) <= f(r)",
        worst_lap,
        "relative excess <= 1e-12",
        worst_lap <= 1e-12,
    );

    if sigma < 1.0 {
        let pos = p.lambda.iter().all(|&l| l > 0.0);
        let mono = p.lambda.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        rep.hard(
            "manifold.lambda_decreasing",
            "Lambda positive and nonincreasing",
            mono,
            format!("Lambda > 0 and max increment <= {:e}", tol::MONOTONE),
            pos && mono <= tol::MONOTONE,
        );
        rep.merge(txsx_check(m, &p)?);
    }
    Ok(rep)
}

/// Containment `C_M (sigma_x - sigma) <= tau_x - sigma <= sigma_x - sigma`, `C_M = psi(1/sigma)`.
pub fn txsx_check(m: &ModelManifold<f64>, p: &VolumeProfile) -> Result<ExperimentReport> {
    let sigma = m.sigma();
    if sigma >= 1.0 {
        return Err(LabError::InvalidParameter("containment check needs sigma < 1".into()));
    }
    let cm = psi(m.n(), 1.0 / sigma);
    let mut rep = ExperimentReport::new("manifold", m.descriptor());
    let ratios: Vec<f64> = p.tau_rem.iter().zip(&p.lambda).map(|(t, l)| t / l).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let upper_violation = p
        .tau_rem
        .iter()
        .zip(&p.lambda)
        .map(|(t, l)| t - l)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.hard(
        "manifold.txsx_upper",
        "tau_x - sigma <= sigma_x - sigma",
        upper_violation,
        format!("<= {:e}", tol::TXSX_UPPER),
        upper_violation <= tol::TXSX_UPPER,
    );
    rep.hard(
        "manifold.txsx_lower",
        "min (tau_x - sigma)/(sigma_x - sigma)",
        lo,
        format!(">= C_M = {cm:.12}"),
        lo >= cm * (1.0 - 1e-9),
    );
    rep.soft("manifold.txsx_ratio_max", "max (tau_x - sigma)/(sigma_x - sigma)", hi, "<= 1", hi <= 1.0 + 1e-9);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_ball() {
        let m = ModelManifold::<f64>::new(Family::Euclidean, 3, 1e3).unwrap();
        assert!((m.volume(1.0) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert_eq!(m.lambda(7.0), 0.0);
        assert!((m.green2(2.0) - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelManifold::<f64>::new(Family::ExpTaper { c: 1.2 }, 3, 1e3).is_err());
        assert!(ModelManifold::<f64>::new(Family::PolyTaper { c: 0.5, a: 0.0 }, 3, 1e3).is_err());
        assert!(ModelManifold::<f64>::new(Family::Euclidean, 1, 1e3).is_err());
    }

    #[test]
    fn poly_profile_consistent() {
        let m = ModelManifold::<f64>::new(Family::PolyTaper { c: 0.5, a: 0.5 }, 3, 1e3).unwrap();
        // finite-difference check of f' and f''
        for &r in &[1e-3f64, 0.5, 3.0, 200.0] {
            let h = 1e-5 * r.max(1.0);
            let d1 = (m.f(r + h) - m.f(r - h)) / (2.0 * h);
            assert!((d1 - m.df(r)).abs() < 1e-8);
            let d2 = (m.df(r + h) - m.df(r - h)) / (2.0 * h);
            assert!((d2 - m.d2f(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn single_precision_instance() {
        let m = ModelManifold::<f32>::new(Family::ExpTaper { c: 0.8 }, 3, 1e3).unwrap();
        let md = ModelManifold::<f64>::new(Family::ExpTaper { c: 0.8 }, 3, 1e3).unwrap();
        for &r in &[0.01f32, 1.0, 100.0] {
            let rel = (m.volume(r) as f64 - md.volume(r as f64)) / md.volume(r as f64);
            assert!(rel.abs() < 1e-5);
        }
    }
}
