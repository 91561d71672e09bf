//! Green functions `G_alpha(o, r)` of `(-Delta)^{alpha/2}` on model manifolds, the radial
//! inverse Laplacian they are built from, Riesz constants and the function `b`.

use crate::error::{LabError, Result};
use crate::heat::{mellin_green2, KernelTable};
use crate::linalg::geomspace;
use crate::quad::{integrate_log, kronrod, Tol};
use crate::radial::{Extrap, RadialFunction};
use crate::report::{ExperimentReport, Table};
use crate::special::{gamma, unit_ball_volume, unit_sphere_area};
use crate::tilde::LambdaTildeTable;
use crate::tol;
use crate::Manifold;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// `c_alpha = 2^{-alpha} Gamma((n-alpha)/2) / (pi^{n/2} Gamma(alpha/2))`.
pub fn riesz_c(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    2f64.powf(-alpha) * gamma((nf - alpha) / 2.0) / (PI.powf(nf / 2.0) * gamma(alpha / 2.0))
}

/// `c~_alpha = 2^{-alpha} Gamma((n-alpha+1)/2) / (pi^{n/2} Gamma((alpha+1)/2))`.
pub fn riesz_c_tilde(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    2f64.powf(-alpha) * gamma((nf - alpha + 1.0) / 2.0) / (PI.powf(nf / 2.0) * gamma((alpha + 1.0) / 2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RieszConstants {
    pub n: usize,
    pub alpha: usize,
    pub c_alpha: f64,
    pub c_tilde_alpha: f64,
    /// Adams constant: `c^{-n/(n-alpha)} / B_n` with `c = c_alpha` (even) or `c~_alpha` (odd).
    pub gamma: f64,
    pub ball: f64,
    pub omega: f64,
}

impl RieszConstants {
    pub fn new(n: usize, alpha: usize) -> Result<Self> {
        if alpha == 0 || alpha >= n {
            return Err(LabError::InvalidParameter(format!("need 0 < alpha < n, got alpha={alpha}, n={n}")));
        }
        let a = alpha as f64;
        let c_alpha = riesz_c(n, a);
        let c_tilde_alpha = riesz_c_tilde(n, a);
        let ball = unit_ball_volume::<f64>(n);
        let base = if alpha % 2 == 0 { c_alpha } else { c_tilde_alpha };
        let gamma = base.powf(-(n as f64) / ((n - alpha) as f64)) / ball;
        Ok(RieszConstants { n, alpha, c_alpha, c_tilde_alpha, gamma, ball, omega: unit_sphere_area(n) })
    }

    /// Exponent `n/(n - alpha)`.
    pub fn beta(&self) -> f64 {
        self.n as f64 / (self.n - self.alpha) as f64
    }

    /// Relative residuals of the recurrences between the constants, labelled.
    pub fn identity_residuals(&self) -> Vec<(&'static str, f64)> {
        let (n, a) = (self.n, self.alpha as f64);
        let nf = n as f64;
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        let mut out = Vec::new();
        if self.alpha + 1 < n {
            out.push(("ct_from_next", rel((nf - a - 1.0) * riesz_c(n, a + 1.0), self.c_tilde_alpha)));
        }
        if self.alpha > 1 {
            out.push(("ct_from_prev", rel(riesz_c(n, a - 1.0) / (a - 1.0), self.c_tilde_alpha)));
        }
        if self.alpha > 2 {
            out.push(("c_step_two", rel(self.c_alpha * (a - 2.0) * (nf - a), riesz_c(n, a - 2.0))));
        }
        out
    }
}

/// Constants and their identities as a report.
pub fn riesz_report(n: usize, alpha: usize) -> Result<ExperimentReport> {
    let k = RieszConstants::new(n, alpha)?;
    let mut rep = ExperimentReport::new("riesz_constants", format!("n={n},alpha={alpha}"));
    rep.meta("c_alpha", k.c_alpha);
    rep.meta("c_tilde_alpha", k.c_tilde_alpha);
    rep.meta("gamma", k.gamma);
    for (name, res) in k.identity_residuals() {
        rep.hard("green.constants", name, res, format!("relative residual <= {:e}", tol::CONSTANTS), res <= tol::CONSTANTS);
    }
    Ok(rep)
}

/// `Gamma(alpha/2)^{-1} int_0^inf t^{alpha/2-1} E(r,t) dt` by quadrature in `t`.
pub fn mellin_scalar(n: usize, alpha: f64, r: f64) -> Result<f64> {
    let nf = n as f64;
    let r2 = r * r / 4.0;
    let (lo, hi) = (r2 / 800.0, r2 * 1e14);
    let pre = (4.0 * PI).powf(-nf / 2.0);
    let body = integrate_log(
        |t: f64| t.powf(alpha / 2.0 - 1.0) * pre * t.powf(-nf / 2.0) * (-r2 / t).exp(),
        lo,
        hi,
        Tol::rel(1e-13),
    )?;
    // e^{-r^2/4t} = 1 - r^2/4t + ... past hi; the first correction is below 1e-14
    let e = (nf - alpha) / 2.0;
    let tail = pre * hi.powf(-e) / e;
    Ok((body + tail) / gamma(alpha / 2.0))
}

/// `Gamma((alpha+1)/2)^{-1} int_0^inf t^{(alpha-1)/2} dE/dr dt`.
pub fn mellin_gradient(n: usize, alpha: f64, r: f64) -> Result<f64> {
    let nf = n as f64;
    let r2 = r * r / 4.0;
    let (lo, hi) = (r2 / 800.0, r2 * 1e14);
    let pre = (4.0 * PI).powf(-nf / 2.0);
    let body = integrate_log(
        |t: f64| t.powf((alpha - 1.0) / 2.0) * (r / (2.0 * t)) * pre * t.powf(-nf / 2.0) * (-r2 / t).exp(),
        lo,
        hi,
        Tol::rel(1e-13),
    )?;
    let e = (nf + 1.0 - alpha) / 2.0;
    let tail = (r / 2.0) * pre * hi.powf(-e) / e;
    Ok(-(body + tail) / gamma((alpha + 1.0) / 2.0))
}

/// Mellin reconstruction of `c_alpha r^{alpha-n}` and `-c~_alpha r^{alpha-n}` at `r in {0.5, 1, 2}`.
pub fn mellin_verify(n: usize, alpha: usize) -> Result<ExperimentReport> {
    let k = RieszConstants::new(n, alpha)?;
    let a = alpha as f64;
    let mut rep = ExperimentReport::new("mellin", format!("euclidean(n={n}),alpha={alpha}"));
    let mut scaled = Vec::new();
    for r in [0.5f64, 1.0, 2.0] {
        let p = r.powf(a - n as f64);
        let s = mellin_scalar(n, a, r)?;
        let g = mellin_gradient(n, a, r)?;
        let es = ((s - k.c_alpha * p) / (k.c_alpha * p)).abs();
        let eg = ((g + k.c_tilde_alpha * p) / (k.c_tilde_alpha * p)).abs();
        rep.hard("green.mellin", format!("scalar_r{r}"), es, format!("relative error <= {:e}", tol::MELLIN), es <= tol::MELLIN);
        rep.hard("green.mellin", format!("gradient_r{r}"), eg, format!("relative error <= {:e}", tol::MELLIN), eg <= tol::MELLIN);
        scaled.push(s / p);
    }
    let spread = scaled.iter().fold(0.0f64, |w, &v| w.max(((v - scaled[1]) / scaled[1]).abs()));
    rep.hard("green.mellin", "homogeneity", spread, "r^{n-alpha} G constant to 1e-8", spread <= tol::MELLIN);
    Ok(rep)
}

/// Radial source term for [`InverseLaplacian`].
pub type Source = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How the source behaves past the last grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceTail {
    /// Zero past the grid.
    Compact,
    /// `g(s) ~ g(r_N) (s / r_N)^exponent` with `-n < exponent < -2`.
    Power { exponent: f64 },
}

/// `u = (-Delta)^{-1} g` for radial `g`, as
/// `u(r) = int_r^inf A(s)^{-1} int_0^s A(t) g(t) dt ds`, with `u' = -I/A`.
///
/// The flux `I` is accumulated with 15-point Kronrod panels in `ln s` between grid nodes,
/// and `u` with nested panels, so values off the grid are as accurate as on it.
/// Source kinks must be grid nodes.
pub struct InverseLaplacian {
    m: Arc<Manifold>,
    source: Source,
    r: Vec<f64>,
    flux: Vec<f64>,
    u: Vec<f64>,
    tail: SourceTail,
    /// local power of the source at the first node
    p0: f64,
}

fn ln_panel<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    kronrod(&mut |x: f64| {
        let s = x.exp();
        f(s) * s
    }, a.ln(), b.ln())
}

impl InverseLaplacian {
    pub fn new(m: Arc<Manifold>, source: Source, grid: Vec<f64>, tail: SourceTail) -> Result<Self> {
        if grid.len() < 2 || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidParameter("inverse Laplacian grid must be positive and increasing".into()));
        }
        if m.n() < 3 {
            return Err(LabError::InvalidParameter("the radial inverse Laplacian needs n >= 3".into()));
        }
        let nf = m.n() as f64;
        if let SourceTail::Power { exponent } = tail {
            if !(exponent < -2.0 && exponent > -nf) {
                return Err(LabError::InvalidParameter(format!("source decay exponent {exponent} outside (-n, -2)")));
            }
        }
        let r0 = grid[0];
        let (g0, g1) = (source(r0), source(0.5 * r0));
        let p0 = if g0 > 0.0 && g1 > 0.0 { (g0 / g1).log2() } else { 0.0 };
        if nf + p0 <= 0.0 {
            return Err(LabError::InvalidParameter("source is not integrable at the pole".into()));
        }
        let mut op = InverseLaplacian { m, source, r: grid, flux: vec![], u: vec![], tail, p0 };
        let k = op.r.len();
        let pieces: Vec<f64> = (0..k - 1)
            .into_par_iter()
            .map(|j| ln_panel(|s| op.m.area(s) * (op.source)(s), op.r[j], op.r[j + 1]))
            .collect();
        let mut flux = Vec::with_capacity(k);
        flux.push(op.m.omega() * g0 * r0.powf(nf) / (nf + p0));
        for p in pieces {
            let last = *flux.last().unwrap();
            flux.push(last + p);
        }
        op.flux = flux;
        let steps: Vec<f64> = (0..k - 1)
            .into_par_iter()
            .map(|j| ln_panel(|s| op.flux_in(j, s) / op.m.area(s), op.r[j], op.r[j + 1]))
            .collect();
        let mut u = vec![0.0; k];
        u[k - 1] = op.tail_value();
        for j in (0..k - 1).rev() {
            u[j] = u[j + 1] + steps[j];
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(LabError::Solver("inverse Laplacian produced non-finite values".into()));
        }
        op.u = u;
        Ok(op)
    }

    fn flux_in(&self, j: usize, s: f64) -> f64 {
        self.flux[j] + ln_panel(|t| self.m.area(t) * (self.source)(t), self.r[j], s)
    }

    /// Source coefficient `g_top` with `g ~ g_top s^exponent` past the grid.
    fn tail_coefficient(&self, exponent: f64) -> f64 {
        let rn = *self.r.last().unwrap();
        (self.source)(rn) * rn.powf(-exponent)
    }

    fn tail_value(&self) -> f64 {
        let rn = *self.r.last().unwrap();
        let i_n = *self.flux.last().unwrap();
        let base = i_n * self.m.green2(rn);
        match self.tail {
            SourceTail::Compact => base,
            SourceTail::Power { exponent: q } => {
                let nf = self.m.n() as f64;
                let g_top = self.tail_coefficient(q);
                base + g_top * rn.powf(q + 2.0) / (q + nf) * (1.0 / (-q - 2.0) - 1.0 / (nf - 2.0))
            }
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.r
    }
    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// `I(r) = int_{B(r)} g`.
    pub fn flux(&self, r: f64) -> f64 {
        let k = self.r.len();
        let nf = self.m.n() as f64;
        if r <= self.r[0] {
            return self.flux[0] * (r / self.r[0]).powf(nf + self.p0);
        }
        if r >= self.r[k - 1] {
            let i_n = self.flux[k - 1];
            return match self.tail {
                SourceTail::Compact => i_n,
                SourceTail::Power { exponent: q } => {
                    let rn = self.r[k - 1];
                    let g_top = self.tail_coefficient(q);
                    let cone = self.m.omega() * self.m.sigma();
                    i_n + cone * g_top * (r.powf(q + nf) - rn.powf(q + nf)) / (q + nf)
                }
            };
        }
        let j = self.r.partition_point(|&x| x <= r) - 1;
        self.flux_in(j, r)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let k = self.r.len();
        if r < self.r[0] {
            // A ~ omega s^{n-1} and I ~ I_0 (s/r_0)^{n+p}
            let (r0, p) = (self.r[0], self.p0);
            let coef = self.flux[0] / (self.m.omega() * r0.powf(self.m.n() as f64 + p));
            let e = 2.0 + p;
            let add = if e.abs() < 1e-12 { coef * (r0 / r).ln() } else { coef * (r0.powf(e) - r.powf(e)) / e };
            return self.u[0] + add;
        }
        if r >= self.r[k - 1] {
            let rn = self.r[k - 1];
            return match self.tail {
                SourceTail::Compact => self.flux[k - 1] * self.m.green2(r),
                SourceTail::Power { .. } => {
                    let slope = -rn * self.flux[k - 1] / (self.m.area(rn) * self.u[k - 1]);
                    self.u[k - 1] * (r / rn).powf(slope)
                }
            };
        }
        let j = self.r.partition_point(|&x| x <= r) - 1;
        self.u[j + 1] + ln_panel(|s| self.flux_in(j, s) / self.m.area(s), r, self.r[j + 1])
    }

    /// `u'(r) = -I(r)/A(r)`.
    pub fn deriv(&self, r: f64) -> f64 {
        -self.flux(r) / self.m.area(r)
    }

    /// Derivatives at the grid nodes.
    pub fn node_derivatives(&self) -> Vec<f64> {
        self.r.iter().zip(&self.flux).map(|(&r, &i)| -i / self.m.area(r)).collect()
    }

    pub fn to_radial(&self, below: Extrap, above: Extrap) -> Result<RadialFunction> {
        RadialFunction::with_derivative(self.r.clone(), self.u.clone(), self.node_derivatives(), below, above)
    }
}

/// Log grid from `lo` to `hi` with `per_decade` points per decade, merged with `breaks`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize, breaks: &[f64]) -> Vec<f64> {
    let count = (((hi / lo).log10() * per_decade as f64).ceil() as usize).max(1) + 1;
    let mut g = geomspace(lo, hi, count);
    for &b in breaks {
        if b > lo && b < hi {
            g.push(b);
        }
    }
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    g
}

/// Grid policy for Green profiles.
#[derive(Clone, Debug)]
pub struct GreenSettings {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
}

impl Default for GreenSettings {
    fn default() -> Self {
        GreenSettings { r_min: 1e-6, r_max: 1e8, per_decade: 40 }
    }
}

impl GreenSettings {
    pub fn with_resolution(resolution: f64) -> Self {
        let d = GreenSettings::default();
        GreenSettings { per_decade: ((d.per_decade as f64) * resolution).round().max(4.0) as usize, ..d }
    }
}

/// `G_alpha(o, .)` sampled on a log grid.
#[derive(Clone, Debug)]
pub struct GreenProfile {
    pub n: usize,
    pub alpha: usize,
    pub sigma: f64,
    pub manifold: String,
    pub per_decade: usize,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    /// `G_alpha'(r)`, negative.
    pub dg: Vec<f64>,
    /// `b` when `alpha = 2`.
    pub b: Option<RadialFunction>,
    g_fn: RadialFunction,
    slope_fn: RadialFunction,
}

impl GreenProfile {
    fn assemble(m: &Manifold, alpha: usize, per_decade: usize, r: Vec<f64>, g: Vec<f64>, dg: Vec<f64>, source: &[f64]) -> Result<Self> {
        let nf = m.n() as f64;
        // d|G'|/dr = G_{alpha-2} - |G'| (n-1) f'/f
        let dslope: Vec<f64> = r
            .iter()
            .zip(&dg)
            .zip(source)
            .map(|((&x, &d), &s)| s + d * (nf - 1.0) * m.df(x) / m.f(x))
            .collect();
        let slope: Vec<f64> = dg.iter().map(|d| -d).collect();
        let g_fn = RadialFunction::with_derivative(r.clone(), g.clone(), dg.clone(), Extrap::PowerLaw, Extrap::PowerLaw)?;
        let slope_fn = RadialFunction::with_derivative(r.clone(), slope, dslope, Extrap::PowerLaw, Extrap::PowerLaw)?;
        Ok(GreenProfile {
            n: m.n(),
            alpha,
            sigma: m.sigma(),
            manifold: m.descriptor(),
            per_decade,
            r,
            g,
            dg,
            b: None,
            g_fn,
            slope_fn,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.g_fn.eval(r)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        -self.slope_fn.eval(r)
    }

    pub fn as_radial(&self) -> &RadialFunction {
        &self.g_fn
    }

    /// CSV columns `r, G, dG, b`.
    pub fn to_table(&self, radii: &[f64]) -> Table {
        let mut t = Table::new(&["r", "G", "dG", "b"]);
        for &r in radii {
            let b = self.b.as_ref().map_or(f64::NAN, |b| b.eval(r));
            t.push_nums(&[r, self.eval(r), self.deriv(r), b]);
        }
        t
    }
}

/// `G_2(o, r) = int_r^inf ds / A(s)`, with `b` attached.
pub fn green2_closed(m: &Manifold, s: &GreenSettings) -> Result<GreenProfile> {
    if m.n() < 3 {
        return Err(LabError::InvalidParameter("G_2 needs n >= 3".into()));
    }
    let r = log_grid(s.r_min, s.r_max, s.per_decade, &[]);
    let g: Vec<f64> = r.par_iter().map(|&x| m.green2(x)).collect();
    let dg: Vec<f64> = r.iter().map(|&x| m.dgreen2(x)).collect();
    let zero = vec![0.0; r.len()];
    let mut gp = GreenProfile::assemble(m, 2, s.per_decade, r, g, dg, &zero)?;
    gp.b = Some(b_function(&gp, m)?);
    Ok(gp)
}

/// `G_alpha` for even `alpha` by repeated radial inversion of `-Delta`, starting from `G_2`.
pub fn green_alpha_iterate(m: &Manifold, alpha: usize, s: &GreenSettings) -> Result<GreenProfile> {
    let n = m.n();
    if alpha % 2 != 0 || alpha < 2 || alpha >= n {
        return Err(LabError::InvalidParameter(format!("need even 2 <= alpha < n, got alpha={alpha}, n={n}")));
    }
    let mut gp = green2_closed(m, s)?;
    let shared = Arc::new(m.clone());
    let mut order = 2;
    while order < alpha {
        let source: Source = if order == 2 {
            let mm = shared.clone();
            Arc::new(move |x| mm.green2(x))
        } else {
            let prev = gp.g_fn.clone();
            Arc::new(move |x| prev.eval(x))
        };
        let exponent = order as f64 - n as f64;
        let op = InverseLaplacian::new(shared.clone(), source, gp.r.clone(), SourceTail::Power { exponent })?;
        let prev_g = gp.g.clone();
        order += 2;
        gp = GreenProfile::assemble(m, order, s.per_decade, op.grid().to_vec(), op.values().to_vec(), op.node_derivatives(), &prev_g)?;
    }
    Ok(gp)
}

/// `b = (sigma G_2 / c_2)^{1/(2-n)}` with `b' = b / ((n-2) A G_2)`.
pub fn b_function(gp2: &GreenProfile, m: &Manifold) -> Result<RadialFunction> {
    if gp2.alpha != 2 {
        return Err(LabError::InvalidParameter("b is built from G_2".into()));
    }
    let nm2 = (m.n() - 2) as f64;
    let c2 = m.c2();
    let b: Vec<f64> = gp2.g.iter().map(|&g| (m.sigma() * g / c2).powf(-1.0 / nm2)).collect();
    let db: Vec<f64> = gp2.r.iter().zip(&b).zip(&gp2.g).map(|((&r, &bb), &g)| bb / (nm2 * m.area(r) * g)).collect();
    RadialFunction::with_derivative(gp2.r.clone(), b, db, Extrap::PowerLaw, Extrap::PowerLaw)
}

/// Flux normalization `A(r) |G_2'(r)| = 1`, by a five-point stencil on the quadrature values.
pub fn flux_check(m: &Manifold, radii: &[f64]) -> ExperimentReport {
    let mut rep = ExperimentReport::new("green_flux", m.descriptor());
    let mut worst = 0.0f64;
    for &r in radii {
        let h = 1e-3 * r;
        let d = (-m.green2(r + 2.0 * h) + 8.0 * m.green2(r + h) - 8.0 * m.green2(r - h) + m.green2(r - 2.0 * h)) / (12.0 * h);
        worst = worst.max((m.area(r) * (-d) - 1.0).abs());
    }
    rep.hard("green.flux", "flux_unit", worst, "max |A |G_2'| - 1| <= 1e-9", worst <= 1e-9);
    rep
}

/// `C <= r^{n-alpha} G_alpha <= C'` over the whole grid.
pub fn sandwich_check(gp: &GreenProfile) -> ExperimentReport {
    let mut rep = ExperimentReport::new(format!("green_sandwich_a{}", gp.alpha), gp.manifold.clone());
    let e = gp.n as f64 - gp.alpha as f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (&r, &g) in gp.r.iter().zip(&gp.g) {
        let v = g * r.powf(e);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    rep.hard("green.sandwich", "lower_constant", lo, "inf r^{n-alpha} G > 0", lo > 0.0 && lo.is_finite());
    rep.hard("green.sandwich", "upper_constant", hi, "sup r^{n-alpha} G finite", hi.is_finite());
    rep
}

/// Exactness against the Riesz kernel on flat space.
pub fn euclidean_exactness(gp: &GreenProfile, limit: f64) -> ExperimentReport {
    let mut rep = ExperimentReport::new(format!("green_euclidean_a{}", gp.alpha), gp.manifold.clone());
    let c = riesz_c(gp.n, gp.alpha as f64);
    let ct = riesz_c_tilde(gp.n, gp.alpha as f64 - 1.0);
    let e = gp.alpha as f64 - gp.n as f64;
    let mut wg = 0.0f64;
    let mut wd = 0.0f64;
    for (i, &r) in gp.r.iter().enumerate() {
        wg = wg.max((gp.g[i] / (c * r.powf(e)) - 1.0).abs());
        wd = wd.max((gp.dg[i] / (-ct * r.powf(e - 1.0)) - 1.0).abs());
    }
    rep.hard("green.euclidean", "riesz_value", wg, format!("max relative error <= {limit:e}"), wg <= limit);
    rep.hard("green.euclidean", "riesz_gradient", wd, format!("max relative error <= {limit:e}"), wd <= limit);
    if let Some(b) = &gp.b {
        let wb = gp.r.iter().zip(&b.u).fold(0.0f64, |w, (&r, &v)| w.max((v / r - 1.0).abs()));
        rep.hard("green.b", "b_equals_r", wb, "max |b/r - 1| <= 1e-9", wb <= 1e-9);
    }
    rep
}

fn small_residuals(gp: &GreenProfile) -> (f64, f64) {
    let c = riesz_c(gp.n, gp.alpha as f64);
    let ct = riesz_c_tilde(gp.n, gp.alpha as f64 - 1.0);
    let e = gp.alpha as f64 - gp.n as f64;
    let mut sv = 0.0f64;
    let mut sd = 0.0f64;
    for (i, &r) in gp.r.iter().enumerate() {
        if !(1e-4..=1.0).contains(&r) {
            continue;
        }
        sv = sv.max((gp.g[i] - c * r.powf(e)).abs() / r.powf(e + 1.0));
        sd = sd.max((gp.dg[i] + ct * r.powf(e - 1.0)).abs() / r.powf(e));
    }
    (sv, sd)
}

fn stable(a: f64, b: f64) -> bool {
    if a == 0.0 && b == 0.0 {
        return true;
    }
    let q = a / b;
    a.is_finite() && b.is_finite() && (0.5..=2.0).contains(&q)
}

/// Small-distance comparison with the Riesz kernel, at two grid resolutions.
pub fn green_small_check(lo: &GreenProfile, hi: &GreenProfile) -> ExperimentReport {
    let mut rep = ExperimentReport::new(format!("green_small_a{}", lo.alpha), lo.manifold.clone());
    let (v1, d1) = small_residuals(lo);
    let (v2, d2) = small_residuals(hi);
    rep.meta("range", "1e-4 <= r <= 1");
    if lo.sigma == 1.0 {
        let c = riesz_c(lo.n, lo.alpha as f64);
        let rel = v2 / c;
        rep.hard("green.small", "value_residual", rel, "flat: numerator at quadrature level (<= 1e-6 c_alpha)", rel <= 1e-6);
        return rep;
    }
    rep.hard("green.small", "value_residual", v2, "sup |G - c r^{a-n}| / r^{a-n+1} finite", v2.is_finite());
    rep.hard("green.small", "value_refinement", v2 / v1, "resolution ratio in [0.5, 2]", stable(v2, v1));
    rep.hard("green.small", "gradient_residual", d2, "sup |G' + c~ r^{a-1-n}| / r^{a-n} finite", d2.is_finite());
    rep.hard("green.small", "gradient_refinement", d2 / d1, "resolution ratio in [0.5, 2]", stable(d2, d1));
    rep
}

fn large_residual(gp: &GreenProfile, lt: &LambdaTildeTable, r_hi: f64) -> f64 {
    let c = riesz_c(gp.n, gp.alpha as f64) / gp.sigma;
    let e = gp.alpha as f64 - gp.n as f64;
    gp.r
        .iter()
        .zip(&gp.g)
        .filter(|(&r, _)| (1.0..=r_hi).contains(&r))
        .fold(0.0f64, |w, (&r, &g)| w.max((g - c * r.powf(e)).abs() / (lt.eval(r) * r.powf(e))))
}

/// Annulus `L^2` mean of `G' + sigma^{-1} c~_{alpha-1} r^{alpha-1-n}` over `[r, (1+eta) r]`.
pub fn annulus_gradient_residual(gp: &GreenProfile, m: &Manifold, r: f64, eta: f64) -> Result<f64> {
    let ct = riesz_c_tilde(gp.n, gp.alpha as f64 - 1.0) / gp.sigma;
    let e = gp.alpha as f64 - 1.0 - gp.n as f64;
    let r2 = (1.0 + eta) * r;
    let num = integrate_log(|s| (gp.deriv(s) + ct * s.powf(e)).powi(2) * m.area(s), r, r2, Tol::rel(1e-9))?;
    let vol = m.volume(r2) - m.volume(r);
    Ok((num / vol).sqrt())
}

/// Large-distance comparison with `sigma^{-1} c_alpha r^{alpha-n}` and the annular gradient bound.
pub fn green_large_check(lo: &GreenProfile, hi: &GreenProfile, m: &Manifold, lt: Option<&LambdaTildeTable>) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(format!("green_large_a{}", hi.alpha), hi.manifold.clone());
    let e = hi.n as f64 - hi.alpha as f64;
    let c = riesz_c(hi.n, hi.alpha as f64);
    let limit = hi.eval(1e3) * 1e3f64.powf(e) * hi.sigma / c;
    let dev = (limit - 1.0).abs();
    rep.meta("r^{n-alpha} G sigma / c at 1e3", limit);
    let Some(lt) = lt else {
        rep.hard("green.large", "limit_r1e3", dev, "flat: |r^{n-alpha} G / c_alpha - 1| <= 1e-6", dev <= 1e-6);
        return Ok(rep);
    };
    rep.hard("green.large", "limit_r1e3", dev, "|sigma r^{n-alpha} G / c_alpha - 1| <= 0.02", dev <= 0.02);
    let r_hi = 1e4;
    let (q1, q2) = (large_residual(lo, lt, r_hi), large_residual(hi, lt, r_hi));
    rep.hard("green.large", "value_residual", q2, "sup_{1<=r<=1e4} |G - c r^{a-n}/sigma| / (L~ r^{a-n}) finite", q2.is_finite());
    rep.hard("green.large", "value_refinement", q2 / q1, "resolution ratio in [0.5, 2]", stable(q2, q1));
    for eta in [1.0f64, 0.25] {
        let mut worst = 0.0f64;
        let mut worst_lo = 0.0f64;
        for r in geomspace(1.0, 1e3, 7) {
            let scale = (1.0 + 1.0 / eta.sqrt()) * lt.eval(r).sqrt() * r.powf(-e - 1.0);
            worst = worst.max(annulus_gradient_residual(hi, m, r, eta)? / scale);
            worst_lo = worst_lo.max(annulus_gradient_residual(lo, m, r, eta)? / scale);
        }
        rep.hard("green.large", format!("gradient_annulus_eta{eta}"), worst, "normalized annulus residual finite", worst.is_finite());
        rep.hard("green.large", format!("gradient_refinement_eta{eta}"), worst / worst_lo, "resolution ratio in [0.5, 2]", stable(worst, worst_lo));
    }
    Ok(rep)
}

/// Bounds on `b`: `b <= sigma^{1/(2-n)} r`, `b' <= sigma^{1/(2-n)}`, `|b - r| <= kappa r L~` and `b/r -> 1`.
pub fn b_check(gp2: &GreenProfile, m: &Manifold, lt: Option<&LambdaTildeTable>) -> Result<ExperimentReport> {
    let b = gp2.b.as_ref().ok_or_else(|| LabError::InvalidParameter("profile carries no b".into()))?;
    let mut rep = ExperimentReport::new("b_function", gp2.manifold.clone());
    let k = m.sigma().powf(-1.0 / (m.n() - 2) as f64);
    let slack = 1.0 + 1e-12;
    let over = gp2.r.iter().zip(&b.u).fold(0.0f64, |w, (&r, &v)| w.max(v / (k * r)));
    rep.hard("green.b", "b_upper", over, "max b / (sigma^{1/(2-n)} r) <= 1", over <= slack);
    let dmax = b.du.iter().fold(0.0f64, |w, &d| w.max(d / k));
    rep.hard("green.b", "db_upper", dmax, "max b' / sigma^{1/(2-n)} <= 1", dmax <= slack);
    if let Some(lt) = lt {
        let kappa = gp2
            .r
            .iter()
            .zip(&b.u)
            .filter(|(&r, _)| (1.0..=1e4).contains(&r))
            .fold(0.0f64, |w, (&r, &v)| w.max((v - r).abs() / (r * lt.eval(r))));
        rep.hard("green.b", "kappa", kappa, "sup_{r>=1} |b - r| / (r L~) finite", kappa.is_finite());
        let d10 = (b.eval(10.0) / 10.0 - 1.0).abs();
        let dfar = (b.eval(1e6) / 1e6 - 1.0).abs();
        rep.hard("green.b", "b_over_r_far", dfar, "|b/r - 1| at 1e6 below its value at 10", dfar < d10);
    }
    Ok(rep)
}

/// Dirichlet Green function of the ball `B(o, big_r)` with pole `o`: `int_r^R ds / A(s)`.
pub fn green2_ball(m: &Manifold, big_r: f64, r: f64) -> Result<f64> {
    if r >= big_r {
        return Ok(0.0);
    }
    integrate_log(|s| 1.0 / m.area(s), r, big_r, Tol::rel(1e-12))
}

/// Apply `T_alpha` to `psi = (1 - r^2)^4` on the unit ball and recover `psi` with a
/// Richardson-extrapolated finite-difference `(-Delta)^{alpha/2}` at `r = 0.1 .. 0.9`.
pub fn representation_check(m: &Manifold, alpha: usize) -> Result<ExperimentReport> {
    let n = m.n();
    if alpha % 2 != 0 || alpha < 2 || alpha >= n {
        return Err(LabError::InvalidParameter(format!("need even 2 <= alpha < n, got alpha={alpha}, n={n}")));
    }
    let shared = Arc::new(m.clone());
    let psi = |r: f64| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 };
    let mut op = InverseLaplacian::new(shared.clone(), Arc::new(psi), log_grid(1e-6, 1.0, 40, &[]), SourceTail::Compact)?;
    let mut order = 2;
    while order < alpha {
        let prev = Arc::new(op);
        let src: Source = {
            let p = prev.clone();
            Arc::new(move |x| p.eval(x))
        };
        let exponent = order as f64 - n as f64;
        op = InverseLaplacian::new(shared.clone(), src, log_grid(1e-6, 1e6, 40, &[1.0]), SourceTail::Power { exponent })?;
        order += 2;
    }
    let depth = alpha / 2;
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let r = 0.1 * k as f64;
        let l1 = apply_laplacian(&op, m, depth, r, 0.01);
        let l2 = apply_laplacian(&op, m, depth, r, 0.005);
        let v = (4.0 * l2 - l1) / 3.0;
        worst = worst.max((v - psi(r)).abs());
    }
    let mut rep = ExperimentReport::new(format!("green_representation_a{alpha}"), m.descriptor());
    rep.hard("green.representation", "recovered_source", worst, "max |(-Delta)^{a/2} T_a psi - psi| <= 1e-3 on [0.1, 0.9]", worst <= 1e-3);
    Ok(rep)
}

fn apply_laplacian(op: &InverseLaplacian, m: &Manifold, depth: usize, r: f64, h: f64) -> f64 {
    if depth == 0 {
        return op.eval(r);
    }
    let f = |x| apply_laplacian(op, m, depth - 1, x, h);
    let (fm, f0, fp) = (f(r - h), f(r), f(r + h));
    -(m.area(r + h / 2.0) * (fp - f0) - m.area(r - h / 2.0) * (f0 - fm)) / (h * h * m.area(r))
}

/// `G_2` from the heat kernel table against the flux integral on `1 <= r <= 5`.
pub fn heat_mellin_check(kt: &KernelTable, m: &Manifold) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("green_heat_mellin", m.descriptor());
    let mut worst = 0.0f64;
    for r in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let a = mellin_green2(kt, m, r)?;
        let b = m.green2(r);
        worst = worst.max(((a - b) / b).abs());
    }
    rep.hard("green.heat_mellin", "mellin_vs_flux", worst, "max relative difference <= 2e-3", worst <= 2e-3);
    Ok(rep)
}
