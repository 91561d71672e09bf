//! Moser-Trudinger functionals along extremal families: the potential families built on the
//! function `b`, the smooth log family for `alpha = 2`, and the local Adams-Moser family.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::green::{green2_closed, log_grid, GreenSettings, InverseLaplacian, RieszConstants, Source, SourceTail};
use crate::linalg::{line_fit, loglog_slope};
use crate::quad::{integrate_log, kronrod_nodes, Tol};
use crate::radial::{Extrap, RadialFunction};
use crate::report::{ExperimentReport, Table};
use crate::special::{exp_m, ln_exp_m};
use crate::tilde::lambda_tilde;
use crate::{tol, Manifold};

/// `e^t - sum_{k<=m} t^k/k!`.
pub fn regularized_exp(m: usize, t: f64) -> f64 {
    exp_m(m, t)
}

/// Truncation index `ceil((n - alpha)/alpha - 1)`.
pub fn truncation_index(n: usize, alpha: usize) -> usize {
    // integer form of the ceiling, exact for all n, alpha
    let num = n as i64 - 2 * alpha as i64;
    let a = alpha as i64;
    if num <= 0 {
        0
    } else {
        ((num + a - 1) / a) as usize
    }
}

/// Solve `V(r) = V(rho) exp(Lambda~(V(rho)^{1/n})^{-1/2})` for `rho` by bisection in `ln rho`.
pub fn calibrate_rho(m: &Manifold, r: f64) -> Result<f64> {
    let nf = m.n() as f64;
    let lv_r = m.volume(r).ln();
    let g = |lr: f64| -> Result<f64> {
        let rho = lr.exp();
        let v = m.volume(rho);
        Ok(lv_r - v.ln() - lambda_tilde(m, v.powf(1.0 / nf))?.powf(-0.5))
    };
    let (mut lo, mut hi) = ((r * 1e-12).ln(), r.ln());
    if g(lo)? <= 0.0 {
        return Err(LabError::RootBracket(format!("no calibrated rho below r = {r}")));
    }
    while hi - lo > 1e-13 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = (0.5 * (lo + hi)).exp();
    let res = g(rho.ln())?.abs();
    if res > tol::CALIBRATION {
        return Err(LabError::Solver(format!("calibration residual {res:e} at r = {r}")));
    }
    Ok(rho)
}

/// `log(V(r)/V(rho))`.
pub fn log_volume_ratio(m: &Manifold, r: f64, rho: f64) -> f64 {
    (m.volume(r) / m.volume(rho)).ln()
}

/// The smooth decreasing profile equal to `log(r/rho)` below `rho`, `log(r/t)` on
/// `[2 rho, r/2]` and zero past `r`, joined in `C^2` by polynomials on `[rho, 2 rho]` and
/// `[r/2, r]`.
///
/// The joining zones scale with `rho` and `r`. With a zone of fixed width at the outer end,
/// `h''` is of order `1/r` on a shell of volume `r^{n-1}`, and `int |Delta u|^{n/2}` picks up a
/// term growing like `r^{n/2-1}`.
#[derive(Clone, Copy, Debug)]
pub struct SmoothLog {
    pub rho: f64,
    pub r: f64,
    /// `h'(rho + w s) = s^2 (c[0] + c[1] s + c[2] s^2)`, `w = rho`.
    inner: [f64; 3],
    /// `h(r - w y) = y^3 (d[0] + d[1] y + d[2] y^2)`, `w = r/2`.
    outer: [f64; 3],
}

fn solve3(a: [[f64; 3]; 3], y: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut b = a;
        for i in 0..3 {
            b[i][k] = y[i];
        }
        *o = det(b) / d;
    }
    out
}

impl SmoothLog {
    pub fn new(rho: f64, r: f64) -> Result<Self> {
        if !(rho > 0.0 && 4.0 * rho < r) {
            return Err(LabError::InvalidParameter(format!("smooth log profile needs 4 rho < r (rho={rho}, r={r})")));
        }
        // h' and h'' at t = 2 rho, and the drop log 2 over the zone
        let inner = solve3([[1.0, 1.0, 1.0], [2.0, 3.0, 4.0], [1.0 / 3.0, 0.25, 0.2]], [-0.5 / rho, 0.25 / rho, -(2f64.ln()) / rho]);
        // h, -w h', w^2 h'' at t = r/2 with w = r/2
        let outer = solve3([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]], [2f64.ln(), 1.0, 1.0]);
        Ok(SmoothLog { rho, r, inner, outer })
    }

    /// `(h, h', h'')` at `t`.
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let (rho, r) = (self.rho, self.r);
        if t <= rho {
            ((r / rho).ln(), 0.0, 0.0)
        } else if t < 2.0 * rho {
            let s = (t - rho) / rho;
            let [c0, c1, c2] = self.inner;
            let h = (r / rho).ln() + rho * s.powi(3) * (c0 / 3.0 + c1 * s / 4.0 + c2 * s * s / 5.0);
            let d1 = s * s * (c0 + c1 * s + c2 * s * s);
            let d2 = s * (2.0 * c0 + 3.0 * c1 * s + 4.0 * c2 * s * s) / rho;
            (h, d1, d2)
        } else if t <= 0.5 * r {
            ((r / t).ln(), -1.0 / t, 1.0 / (t * t))
        } else if t < r {
            let w = 0.5 * r;
            let y = (r - t) / w;
            let [d0, d1, d2] = self.outer;
            let h = y.powi(3) * (d0 + d1 * y + d2 * y * y);
            let dy = y * y * (3.0 * d0 + 4.0 * d1 * y + 5.0 * d2 * y * y);
            let dyy = y * (6.0 * d0 + 12.0 * d1 * y + 20.0 * d2 * y * y);
            (h, -dy / w, dyy / (w * w))
        } else {
            (0.0, 0.0, 0.0)
        }
    }

    pub fn breaks(&self) -> [f64; 4] {
        [self.rho, 2.0 * self.rho, 0.5 * self.r, self.r]
    }
}

/// Which extremal profile a family uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// `u = T_alpha(h_{alpha,r}(b))` for even alpha, `u_{alpha-1,r}/(alpha-1)` for odd alpha >= 3.
    HAlphaR,
    /// `h_{0,r}(b)`, alpha = 1.
    H0R,
    /// `h_r(b)` with the smooth log profile, alpha = 2.
    SmoothHR,
    /// `h_{1/eps}(d/(eps r_0))`.
    MoserEps,
}

impl FamilyKind {
    pub fn tag(&self) -> &'static str {
        match self {
            FamilyKind::HAlphaR => "h_alpha_r",
            FamilyKind::H0R => "h_0_r",
            FamilyKind::SmoothHR => "smooth_h_r",
            FamilyKind::MoserEps => "moser_eps",
        }
    }

    /// The family used for a sharpness sweep at `(n, alpha)`.
    pub fn for_sweep(n: usize, alpha: usize) -> Result<Self> {
        if alpha == 0 || alpha >= n {
            return Err(LabError::InvalidParameter(format!("need 1 <= alpha < n, got alpha={alpha}, n={n}")));
        }
        match alpha {
            1 => Ok(FamilyKind::H0R),
            2 if 2 * alpha < n => Ok(FamilyKind::HAlphaR),
            2 => Ok(FamilyKind::SmoothHR),
            a if a % 2 == 0 && 2 * a < n => Ok(FamilyKind::HAlphaR),
            a if a % 2 == 1 && 2 * a < n + 2 => Ok(FamilyKind::HAlphaR),
            _ => Err(LabError::InvalidParameter(format!("no extremal family for alpha={alpha}, n={n}"))),
        }
    }
}

/// Whether sharpness is proved at `(n, alpha)`.
pub fn in_proved_range(n: usize, alpha: usize) -> bool {
    match alpha {
        0 => false,
        1 | 2 => alpha < n,
        a if a % 2 == 0 => 2 * a < n,
        a => 2 * a < n + 2,
    }
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid policy for the families and functionals.
#[derive(Clone, Debug)]
pub struct MtSettings {
    pub per_decade: usize,
    /// Potentials are integrated out to this multiple of the outer radius.
    pub far_factor: f64,
}

impl Default for MtSettings {
    fn default() -> Self {
        MtSettings { per_decade: 40, far_factor: 1e3 }
    }
}

impl MtSettings {
    pub fn with_resolution(resolution: f64) -> Self {
        let d = MtSettings::default();
        MtSettings { per_decade: ((d.per_decade as f64) * resolution).round().max(8.0) as usize, ..d }
    }
}

/// Shared per-manifold data for building families.
pub struct MtContext {
    pub m: Arc<Manifold>,
    /// `b` and `b'` tabulated; `None` when `n = 2`.
    pub b: Option<RadialFunction>,
    pub settings: MtSettings,
}

impl MtContext {
    pub fn new(m: &Manifold, settings: MtSettings) -> Result<Self> {
        let b = if m.n() >= 3 {
            let gs = GreenSettings { r_min: 1e-8, r_max: 1e9, per_decade: 2 * settings.per_decade };
            green2_closed(m, &gs)?.b
        } else {
            None
        };
        Ok(MtContext { m: Arc::new(m.clone()), b, settings })
    }

    fn b_table(&self) -> Result<&RadialFunction> {
        self.b.as_ref().ok_or_else(|| LabError::InvalidParameter("families built on b need n >= 3".into()))
    }

    /// Radius where `b = beta`.
    pub fn b_inverse(&self, beta: f64) -> f64 {
        self.m.inverse_b(beta)
    }
}

/// An extremal function with its norms.
#[derive(Clone)]
pub struct ExtremalFamily {
    pub n: usize,
    pub alpha: usize,
    pub kind: FamilyKind,
    /// Outer radius (for the Moser family, `1/eps`).
    pub r: f64,
    pub rho: f64,
    /// `||D^alpha u||_{n/alpha}`.
    pub dnorm: f64,
    /// `||u||_{n/alpha}`.
    pub lnorm: f64,
    /// Distances where the profile has kinks or changes formula.
    pub breaks: Vec<f64>,
    /// `u = 0` past this distance; infinite for potentials.
    pub support: f64,
    /// Innermost scale of the profile.
    pub inner: f64,
    profile: Profile,
}

impl std::fmt::Debug for ExtremalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtremalFamily")
            .field("n", &self.n)
            .field("alpha", &self.alpha)
            .field("kind", &self.kind)
            .field("r", &self.r)
            .field("rho", &self.rho)
            .field("dnorm", &self.dnorm)
            .field("lnorm", &self.lnorm)
            .finish()
    }
}

impl ExtremalFamily {
    pub fn eval(&self, d: f64) -> f64 {
        if d > self.support {
            0.0
        } else {
            (self.profile)(d)
        }
    }

    /// Samples of `u` on a log grid, as a radial function for tables.
    pub fn to_radial(&self, per_decade: usize) -> Result<RadialFunction> {
        let hi = if self.support.is_finite() { self.support } else { 10.0 * self.r.max(self.breaks.last().copied().unwrap_or(1.0)) };
        let grid = log_grid(self.inner * 1e-2, hi, per_decade, &self.breaks);
        let u: Vec<f64> = grid.iter().map(|&d| self.eval(d)).collect();
        RadialFunction::from_samples(grid, u, Extrap::Constant, Extrap::Zero)
    }

    /// Outer end of the quadrature range.
    fn far(&self, s: &MtSettings) -> f64 {
        if self.support.is_finite() {
            self.support
        } else {
            s.far_factor * self.breaks.last().copied().unwrap_or(self.r)
        }
    }
}

/// `int_a^b g dmu` split at `breaks`, adaptive in `ln r`.
fn measure_integral(m: &Manifold, g: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += integrate_log(|r| g(r) * m.area(r), w[0], w[1], Tol::rel(1e-10))?;
    }
    Ok(sum)
}

/// `int |u|^p dmu` over the support; potentials get a power-law tail past the far radius.
fn lp_p(m: &Manifold, fam: &ExtremalFamily, p: f64, s: &MtSettings) -> Result<f64> {
    let lo = fam.inner * 1e-4;
    let hi = fam.far(s);
    let g = |d: f64| fam.eval(d).abs().powf(p);
    let mut sum = g(lo) * m.volume(lo) + measure_integral(m, &g, lo, hi, &fam.breaks)?;
    if !fam.support.is_finite() {
        // integrand ~ hi^k beyond hi, with k from the last decade
        let (y0, y1) = (g(0.1 * hi) * m.area(0.1 * hi), g(hi) * m.area(hi));
        if y0 > 0.0 && y1 > 0.0 {
            let k = (y1 / y0).log10();
            if k < -1.0 {
                sum += y1 * hi / (-k - 1.0);
            } else {
                return Err(LabError::Solver(format!("potential tail not integrable (slope {k:.3})")));
            }
        }
    }
    Ok(sum)
}

/// Build an extremal family at outer radius `r` and inner radius `rho`.
///
/// For the Moser family `r = 1/eps`, `rho` is ignored (the profile uses `rho = 1`), and the
/// profile is `h_r(d/(eps r_0))` with `r_0 = 1`.
pub fn build_family(ctx: &MtContext, alpha: usize, r: f64, rho: f64, kind: FamilyKind) -> Result<ExtremalFamily> {
    let m = ctx.m.clone();
    let n = m.n();
    let nf = n as f64;
    let af = alpha as f64;
    let q = nf / af;
    let s = &ctx.settings;
    if alpha == 0 || alpha >= n {
        return Err(LabError::InvalidParameter(format!("need 1 <= alpha < n, got alpha={alpha}, n={n}")));
    }
    if kind != FamilyKind::MoserEps && !(rho > 0.0 && rho < r) {
        return Err(LabError::InvalidParameter(format!("need 0 < rho < r (rho={rho}, r={r})")));
    }
    let mut fam = match kind {
        FamilyKind::H0R => {
            if alpha != 1 {
                return Err(LabError::InvalidParameter("h_0_r is the alpha = 1 family".into()));
            }
            let bt = ctx.b_table()?.clone();
            let (d_rho, d_r) = (ctx.b_inverse(rho), ctx.b_inverse(r));
            let b2 = bt.clone();
            let profile: Profile = Arc::new(move |d| {
                let b = b2.eval(d);
                if b <= rho {
                    (r / rho).ln()
                } else if b <= r {
                    (r / b).ln()
                } else {
                    0.0
                }
            });
            // |grad h_{0,r}(b)| = b'/b on rho < b <= r
            let grad = |d: f64| (bt.deriv(d) / bt.eval(d)).powf(nf);
            let dn = measure_integral(&m, &grad, d_rho, d_r, &[])?;
            ExtremalFamily {
                n,
                alpha,
                kind,
                r,
                rho,
                dnorm: dn.powf(1.0 / nf),
                lnorm: 0.0,
                breaks: vec![d_rho, d_r],
                support: d_r,
                inner: d_rho,
                profile,
            }
        }
        FamilyKind::SmoothHR => {
            if alpha != 2 {
                return Err(LabError::InvalidParameter("smooth_h_r is the alpha = 2 family".into()));
            }
            let h = SmoothLog::new(rho, r)?;
            let bt = ctx.b_table()?.clone();
            let breaks: Vec<f64> = h.breaks().iter().map(|&x| ctx.b_inverse(x)).collect();
            let b2 = bt.clone();
            let profile: Profile = Arc::new(move |d| h.eval3(b2.eval(d)).0);
            // Delta h(b) = (h''(b) + h'(b)(n-1)/b) |b'|^2
            let lap = |d: f64| {
                let b = bt.eval(d);
                let (_, h1, h2) = h.eval3(b);
                ((h2 + h1 * (nf - 1.0) / b) * bt.deriv(d).powi(2)).abs().powf(q)
            };
            let dn = measure_integral(&m, &lap, breaks[0], breaks[3], &breaks)?;
            ExtremalFamily {
                n,
                alpha,
                kind,
                r,
                rho,
                dnorm: dn.powf(1.0 / q),
                lnorm: 0.0,
                support: breaks[3],
                inner: breaks[0],
                breaks,
                profile,
            }
        }
        FamilyKind::MoserEps => {
            if alpha > 2 {
                return Err(LabError::InvalidParameter("the Moser family is built for alpha in {1, 2}".into()));
            }
            let eps = 1.0 / r;
            let h = SmoothLog::new(1.0, r)?;
            let breaks: Vec<f64> = h.breaks().iter().map(|&t| t * eps).collect();
            let profile: Profile = Arc::new(move |d| h.eval3(d / eps).0);
            let mm = m.clone();
            let dens = move |d: f64| {
                let (_, h1, h2) = h.eval3(d / eps);
                let (w1, w2) = (h1 / eps, h2 / (eps * eps));
                let v = if alpha == 1 { w1 } else { w2 + (nf - 1.0) * mm.df(d) / mm.f(d) * w1 };
                v.abs().powf(q)
            };
            let dn = measure_integral(&m, &dens, breaks[0], breaks[3], &breaks)?;
            ExtremalFamily {
                n,
                alpha,
                kind,
                r,
                rho: 1.0,
                dnorm: dn.powf(1.0 / q),
                lnorm: 0.0,
                support: breaks[3],
                inner: breaks[0],
                breaks,
                profile,
            }
        }
        FamilyKind::HAlphaR => potential_family(ctx, alpha, r, rho)?,
    };
    fam.lnorm = lp_p(&m, &fam, q, s)?.powf(1.0 / q);
    Ok(fam)
}

/// `T_a(h_{a,r}(b))` by `a/2` radial inversions of `-Delta`; odd alpha divides `u_{alpha-1}` by
/// `alpha - 1`.
fn potential_family(ctx: &MtContext, alpha: usize, r: f64, rho: f64) -> Result<ExtremalFamily> {
    let m = ctx.m.clone();
    let n = m.n();
    let nf = n as f64;
    let q = nf / alpha as f64;
    let a = if alpha % 2 == 0 { alpha } else { alpha - 1 };
    if a == 0 || 2 * a >= n + usize::from(alpha % 2 == 1) * 2 {
        return Err(LabError::InvalidParameter(format!("h_alpha_r needs the proved range, got alpha={alpha}, n={n}")));
    }
    let af = a as f64;
    let bt = ctx.b_table()?.clone();
    let (d_rho, d_r) = (ctx.b_inverse(rho), ctx.b_inverse(r));
    let top = rho.powf(-af) - r.powf(-af);
    let h = move |b: f64| {
        if b <= rho {
            top
        } else if b <= r {
            b.powf(-af) - r.powf(-af)
        } else {
            0.0
        }
    };
    let s = &ctx.settings;
    let grid = log_grid(d_rho * 1e-4, d_r, s.per_decade, &[d_rho]);
    let b2 = bt.clone();
    let mut source: Source = Arc::new(move |d| h(b2.eval(d)));
    let mut tail = SourceTail::Compact;
    let mut op = InverseLaplacian::new(m.clone(), source, grid.clone(), tail)?;
    let far = s.far_factor * d_r;
    for k in 1..a / 2 {
        // the k-th iterate decays like d^{2k-n}
        let prev = Arc::new(op);
        let fine = log_grid(d_rho * 1e-4, far, s.per_decade, &[d_rho, d_r]);
        let p = prev.clone();
        source = Arc::new(move |d| p.eval(d));
        tail = SourceTail::Power { exponent: 2.0 * k as f64 - nf };
        op = InverseLaplacian::new(m.clone(), source, fine, tail)?;
    }
    let div = if alpha % 2 == 1 { (alpha - 1) as f64 } else { 1.0 };
    let op = Arc::new(op);
    let o2 = op.clone();
    let profile: Profile = Arc::new(move |d| o2.eval(d) / div);
    let dn = if alpha % 2 == 0 {
        let g = |d: f64| h(bt.eval(d)).powf(q);
        top.powf(q) * m.volume(d_rho) + measure_integral(&m, &g, d_rho, d_r, &[])?
    } else {
        // |grad h_{alpha-1,r}(b)|/(alpha-1) = b^{-alpha} b'
        let g = |d: f64| (bt.eval(d).powf(-(alpha as f64)) * bt.deriv(d)).powf(q);
        measure_integral(&m, &g, d_rho, d_r, &[])?
    };
    Ok(ExtremalFamily {
        n,
        alpha,
        kind: FamilyKind::HAlphaR,
        r,
        rho,
        dnorm: dn.powf(1.0 / q),
        lnorm: 0.0,
        breaks: vec![d_rho, d_r],
        support: f64::INFINITY,
        inner: d_rho,
        profile,
    })
}

/// How `u` is normalized before entering the functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMode {
    /// `u / ||D^alpha u||`.
    GradOnly,
    /// `u / (kappa ||u||^{n/alpha} + ||D^alpha u||^{n/alpha})^{alpha/n}`.
    FullNorm { kappa: f64 },
}

/// Parameters of a Moser-Trudinger functional.
#[derive(Clone, Debug)]
pub struct MTFunctionalSpec {
    pub n: usize,
    pub alpha: usize,
    /// Exponential constant before `theta`.
    pub gamma: f64,
    pub theta: f64,
    /// Power of `|u|` in the denominator; `None` drops the denominator and the division by
    /// `||u||^{n/alpha}`.
    pub denom_power: Option<f64>,
    pub m: usize,
    pub norm_mode: NormMode,
}

impl MTFunctionalSpec {
    /// Gradient-norm form with the volume-ratio adjusted constant `sigma^{alpha/(n-alpha)} gamma`.
    pub fn adjusted(n: usize, alpha: usize, sigma: f64) -> Result<Self> {
        let k = RieszConstants::new(n, alpha)?;
        let af = alpha as f64;
        let nf = n as f64;
        Ok(MTFunctionalSpec {
            n,
            alpha,
            gamma: sigma.powf(af / (nf - af)) * k.gamma,
            theta: 1.0,
            denom_power: Some(nf / (nf - af)),
            m: truncation_index(n, alpha),
            norm_mode: NormMode::GradOnly,
        })
    }

    /// Full-norm form with the classical constant.
    pub fn full_norm(n: usize, alpha: usize, kappa: f64) -> Result<Self> {
        let k = RieszConstants::new(n, alpha)?;
        let nf = n as f64;
        Ok(MTFunctionalSpec {
            n,
            alpha,
            gamma: k.gamma,
            theta: 1.0,
            denom_power: Some(nf / (nf - alpha as f64)),
            m: truncation_index(n, alpha),
            norm_mode: NormMode::FullNorm { kappa },
        })
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Scale the denominator power by `theta'`.
    pub fn with_denominator_factor(mut self, factor: f64) -> Self {
        let nf = self.n as f64;
        self.denom_power = Some(factor * nf / (nf - self.alpha as f64));
        self
    }

    pub fn without_denominator(mut self) -> Self {
        self.denom_power = None;
        self
    }
}

/// Natural log of the functional, accumulated in the log domain over Kronrod nodes in `ln d`.
pub fn mt_functional_ln(fam: &ExtremalFamily, m: &Manifold, spec: &MTFunctionalSpec, settings: &MtSettings) -> Result<f64> {
    if fam.n != spec.n || fam.alpha != spec.alpha {
        return Err(LabError::InvalidParameter("family and functional disagree on (n, alpha)".into()));
    }
    if !(fam.dnorm > 0.0 && fam.lnorm > 0.0) {
        return Err(LabError::InvalidParameter("u must be nonzero on a set of positive measure".into()));
    }
    let nf = spec.n as f64;
    let af = spec.alpha as f64;
    let q = nf / af;
    let beta = nf / (nf - af);
    let scale = match spec.norm_mode {
        NormMode::GradOnly => fam.dnorm,
        NormMode::FullNorm { kappa } => (kappa * fam.lnorm.powf(q) + fam.dnorm.powf(q)).powf(1.0 / q),
    };
    let k = spec.theta * spec.gamma;
    let ln_density = |d: f64| -> f64 {
        let v = (fam.eval(d) / scale).abs();
        if v == 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = k * v.powf(beta);
        let mut x = ln_exp_m(spec.m, t);
        if let Some(p) = spec.denom_power {
            x -= v.powf(p).ln_1p();
        }
        x
    };
    let lo = fam.inner * 1e-4;
    let hi = fam.far(settings);
    let grid = log_grid(lo, hi, settings.per_decade, &fam.breaks);
    let mut terms: Vec<f64> = grid
        .par_windows(2)
        .flat_map_iter(|w| {
            kronrod_nodes(w[0].ln(), w[1].ln()).into_iter().map(|(x, wt)| {
                let d = x.exp();
                ln_density(d) + (wt * d * m.area(d)).ln()
            })
        })
        .collect();
    // the ball below the grid, where u is flat
    terms.push(ln_density(lo) + m.volume(lo).ln());
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(LabError::Solver("functional integrand vanished or overflowed".into()));
    }
    let sum: f64 = terms.iter().map(|x| (x - top).exp()).sum();
    let mut ln_value = top + sum.ln();
    if spec.denom_power.is_some() {
        ln_value -= q * (fam.lnorm / scale).ln();
    }
    Ok(ln_value)
}

/// The functional itself; infinite if it exceeds the double range.
pub fn mt_functional(fam: &ExtremalFamily, m: &Manifold, spec: &MTFunctionalSpec, settings: &MtSettings) -> Result<f64> {
    Ok(mt_functional_ln(fam, m, spec, settings)?.exp())
}

/// Slope of `||D^alpha u||^{n/alpha}` against `log(V(r)/V(rho))` predicted for a family.
pub fn predicted_norm_slope(m: &Manifold, kind: FamilyKind) -> f64 {
    let nf = m.n() as f64;
    let base = m.ball() * m.sigma();
    match kind {
        FamilyKind::SmoothHR => (nf - 2.0).powf(nf / 2.0) * base,
        _ => base,
    }
}

/// One row of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub r: f64,
    pub rho: f64,
    pub theta: f64,
    pub denom_factor: f64,
    pub functional: f64,
    pub ln_functional: f64,
    pub dnorm: f64,
    pub lnorm: f64,
}

/// Output of a sharpness sweep.
#[derive(Clone, Debug)]
pub struct SharpnessSweep {
    pub rows: Vec<SweepRow>,
    pub log_ratio: Vec<f64>,
    pub min_inner: Vec<f64>,
}

impl SharpnessSweep {
    /// Long format `r, rho, theta, denom_power, functional, Dnorm, Lnorm`.
    pub fn to_table(&self, n: usize, alpha: usize) -> Table {
        let mut t = Table::new(&["r", "rho", "theta", "denom_power", "functional", "Dnorm", "Lnorm"]);
        let beta = n as f64 / (n - alpha) as f64;
        for row in &self.rows {
            t.push_nums(&[row.r, row.rho, row.theta, row.denom_factor * beta, row.functional, row.dnorm, row.lnorm]);
        }
        t
    }

    fn series(&self, theta: f64, denom: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.theta == theta && r.denom_factor == denom).collect()
    }
}

/// How `rho` is chosen along a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoRule {
    Fixed(f64),
    Calibrated,
}

/// Functional sweep over `r_list x theta_list x denom_list` for the family at `(n, alpha)`.
///
/// Pass criteria: boundedness at `theta = 1, theta' = 1` (max/min < 10), growth by at least 10x
/// at `theta > 1`, the `theta' < 1` growth exponent against `log(V(r)/V(rho))` within 0.15 of
/// `1 - theta'`, and the norm slope against `log(V(r)/V(rho))` within 3%.
pub fn sharpness_sweep(
    ctx: &MtContext,
    alpha: usize,
    r_list: &[f64],
    theta_list: &[f64],
    denom_list: &[f64],
    rho_rule: RhoRule,
) -> Result<(ExperimentReport, SharpnessSweep)> {
    let m = &ctx.m;
    let n = m.n();
    if m.sigma() >= 1.0 {
        return Err(LabError::InvalidParameter("the sharpness sweep needs sigma < 1".into()));
    }
    if r_list.len() < 3 {
        return Err(LabError::InvalidParameter("the sweep needs at least three radii".into()));
    }
    let kind = FamilyKind::for_sweep(n, alpha)?;
    let proved = in_proved_range(n, alpha);
    let mut rep = ExperimentReport::new(format!("mt_sharpness_a{alpha}"), m.descriptor());
    rep.meta("family", kind.tag());
    rep.meta("rho_rule", match rho_rule {
        RhoRule::Fixed(x) => format!("fixed {x}"),
        RhoRule::Calibrated => "calibrated".into(),
    });
    if !proved {
        rep.note("outside proved range - exploratory");
    }
    let fams: Vec<ExtremalFamily> = r_list
        .par_iter()
        .map(|&r| {
            let rho = match rho_rule {
                RhoRule::Fixed(x) => x,
                RhoRule::Calibrated => calibrate_rho(m, r)?,
            };
            build_family(ctx, alpha, r, rho, kind)
        })
        .collect::<Result<_>>()?;
    let base = MTFunctionalSpec::adjusted(n, alpha, m.sigma())?;
    let mut rows = Vec::new();
    for fam in &fams {
        for &theta in theta_list {
            for &dfac in denom_list {
                let spec = base.clone().with_theta(theta).with_denominator_factor(dfac);
                let ln = mt_functional_ln(fam, m, &spec, &ctx.settings)?;
                rows.push(SweepRow {
                    r: fam.r,
                    rho: fam.rho,
                    theta,
                    denom_factor: dfac,
                    functional: ln.exp(),
                    ln_functional: ln,
                    dnorm: fam.dnorm,
                    lnorm: fam.lnorm,
                });
            }
        }
    }
    let log_ratio: Vec<f64> = fams.iter().map(|f| log_volume_ratio(m, f.r, f.rho)).collect();
    let min_inner: Vec<f64> = fams.iter().map(inner_minimum).collect();
    let sweep = SharpnessSweep { rows, log_ratio, min_inner };
    let reference = "mt.sharpness";
    let record = |rep: &mut ExperimentReport, name: &str, obs: f64, crit: &str, pass: bool| {
        if proved {
            rep.hard(reference, name, obs, crit, pass);
        } else {
            rep.soft(reference, name, obs, format!("{crit} (exploratory)"), pass);
        }
    };
    if theta_list.contains(&1.0) && denom_list.contains(&1.0) {
        let s = sweep.series(1.0, 1.0);
        let v: Vec<f64> = s.iter().map(|r| r.ln_functional).collect();
        let spread = (v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)).exp();
        record(&mut rep, "bounded_theta1", spread, "max/min of the functional over the sweep < 10", spread < 10.0);
    }
    for &theta in theta_list.iter().filter(|&&t| t > 1.0) {
        if !denom_list.contains(&1.0) {
            continue;
        }
        let s = sweep.series(theta, 1.0);
        let growth = (s.last().unwrap().ln_functional - s[0].ln_functional).exp();
        let monotone = s.windows(2).all(|w| w[1].ln_functional > w[0].ln_functional);
        record(&mut rep, &format!("growth_theta{theta}"), growth, "functional grows by >= 10x over the sweep", growth >= 10.0);
        record(&mut rep, &format!("increasing_theta{theta}"), if monotone { 1.0 } else { 0.0 }, "functional increasing in r", monotone);
        if theta_list.contains(&1.0) {
            let top1 = sweep.series(1.0, 1.0).last().unwrap().ln_functional;
            let gap = (s.last().unwrap().ln_functional - top1).exp();
            record(&mut rep, &format!("dichotomy_theta{theta}"), gap, "theta run exceeds theta = 1 by >= 10x at the largest r", gap >= 10.0);
        }
        // predicted order (V(r)/V(rho))^{theta-1}
        let pred = ((theta - 1.0) * (sweep.log_ratio.last().unwrap() - sweep.log_ratio[0])).exp();
        rep.meta(&format!("predicted_growth_theta{theta}"), pred);
    }
    for &dfac in denom_list.iter().filter(|&&d| d < 1.0) {
        if !theta_list.contains(&1.0) {
            continue;
        }
        let s = sweep.series(1.0, dfac);
        let y: Vec<f64> = s.iter().map(|r| r.functional).collect();
        let e = loglog_slope(&sweep.log_ratio, &y);
        let want = 1.0 - dfac;
        record(
            &mut rep,
            &format!("denominator_exponent_{dfac}"),
            e,
            &format!("growth exponent in log(V(r)/V(rho)) within 0.15 of {want}"),
            (e - want).abs() <= 0.15,
        );
    }
    let qf = n as f64 / alpha as f64;
    let dn: Vec<f64> = fams.iter().map(|f| f.dnorm.powf(qf)).collect();
    let (slope, _) = line_fit(&sweep.log_ratio, &dn);
    let want = predicted_norm_slope(m, kind);
    let rel = slope / want - 1.0;
    rep.meta("norm_slope", slope);
    rep.meta("norm_slope_predicted", want);
    record(&mut rep, "norm_slope", rel, "slope of Dnorm^{n/alpha} vs log(V(r)/V(rho)) within 3%", rel.abs() <= 0.03);
    // lower bound on B(o, rho): u - c B_n log(V(r)/V(rho)) bounded below
    let k = RieszConstants::new(n, alpha)?;
    let c = match kind {
        FamilyKind::HAlphaR if alpha % 2 == 1 => k.c_tilde_alpha,
        FamilyKind::HAlphaR => k.c_alpha,
        _ => 1.0 / (n as f64 * m.ball()),
    };
    let resid: Vec<f64> = sweep.min_inner.iter().zip(&sweep.log_ratio).map(|(u, l)| u - c * k.ball * l).collect();
    let span = c * k.ball * (sweep.log_ratio.last().unwrap() - sweep.log_ratio[0]);
    let drop = (resid[0] - resid.iter().copied().fold(f64::INFINITY, f64::min)) / span;
    record(&mut rep, "inner_lower_bound", drop, "decrease of min_{B(rho)} u - c B_n log(V(r)/V(rho)) < 10% of its predicted rise", drop < 0.1);
    let ratios: Vec<f64> = fams.iter().map(|f| f.lnorm.powf(qf) / m.volume(f.r)).collect();
    let spread = ratios.iter().copied().fold(0.0f64, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if 2 * alpha < n || (alpha % 2 == 1 && 2 * alpha < n + 2) || alpha <= 2 {
        record(&mut rep, "lp_over_volume", spread, "max/min of ||u||^{n/alpha}/V(r) < 10", spread < 10.0);
    }
    Ok((rep, sweep))
}

/// `min u` over the ball `B(o, rho)` (the profiles are decreasing there).
fn inner_minimum(f: &ExtremalFamily) -> f64 {
    let grid = log_grid(f.rho * 1e-3, f.rho, 20, &[]);
    grid.iter().map(|&d| f.eval(d)).fold(f64::INFINITY, f64::min)
}

/// The Moser family against its predicted norm and the classical-constant dichotomy.
/// Radii with `B_n eps^n = 10^{-k}` for each `k`; on every family this is the small-ball volume,
/// so sweeps in different dimensions cover the same range of `log 1/V`.
pub fn moser_eps_for_volumes(n: usize, log10_volumes: &[f64]) -> Vec<f64> {
    let ball = crate::special::unit_ball_volume::<f64>(n);
    log10_volumes.iter().map(|&k| (10f64.powf(-k) / ball).powf(1.0 / n as f64)).collect()
}

/// Default sweep for [`moser_eps_for_volumes`]. At n = 3, alpha = 2 the inflated functional only
/// turns upward once `log 1/V` passes about 400.
pub const MOSER_LOG10_VOLUMES: [f64; 5] = [20.0, 40.0, 80.0, 160.0, 240.0];

pub fn moser_classical_check(ctx: &MtContext, alpha: usize, eps_list: &[f64], kappa: f64) -> Result<(ExperimentReport, Table)> {
    let m = &ctx.m;
    let n = m.n();
    let nf = n as f64;
    let af = alpha as f64;
    if eps_list.len() < 3 {
        return Err(LabError::InvalidParameter("the Moser check needs at least three eps".into()));
    }
    let k = RieszConstants::new(n, alpha)?;
    let c = if alpha % 2 == 1 { k.c_tilde_alpha } else { k.c_alpha };
    let want = 1.0 / (nf * c * k.ball.powf((nf - af) / nf));
    let mut rep = ExperimentReport::new(format!("moser_a{alpha}"), m.descriptor());
    rep.meta("kappa", kappa);
    let fams: Vec<ExtremalFamily> = eps_list.par_iter().map(|&e| build_family(ctx, alpha, 1.0 / e, 1.0, FamilyKind::MoserEps)).collect::<Result<_>>()?;
    // The O(1) of the norm is additive in ||D^alpha w||^{n/alpha}; fitting in that power keeps the
    // finite-eps curvature out of the slope. The direct linear fit is kept as metadata.
    let lv: Vec<f64> = eps_list.iter().map(|&e| (1.0 / m.volume(e)).ln()).collect();
    let x: Vec<f64> = lv.iter().map(|l| l.powf(af / nf)).collect();
    let y: Vec<f64> = fams.iter().map(|f| f.dnorm).collect();
    let yq: Vec<f64> = y.iter().map(|d| d.powf(nf / af)).collect();
    let (direct, _) = line_fit(&x, &y);
    let (sq, _) = line_fit(&lv, &yq);
    let slope = sq.powf(af / nf);
    let rel = slope / want - 1.0;
    rep.meta("norm_slope", slope);
    rep.meta("norm_slope_direct", direct);
    rep.meta("norm_slope_predicted", want);
    rep.hard("mt.moser", "norm_slope", rel, "coefficient of ||D^alpha w|| in (log 1/V(eps))^{alpha/n} within 5%", rel.abs() <= 0.05);
    let mut table = Table::new(&["eps", "theta", "form", "functional", "Dnorm", "Lnorm"]);
    let base = MTFunctionalSpec::full_norm(n, alpha, kappa)?;
    for (form, spec) in [("ratio", base.clone()), ("plain", base.clone().without_denominator())] {
        let mut lns = Vec::new();
        for theta in [1.0, 1.1] {
            let s = spec.clone().with_theta(theta);
            let v: Vec<f64> = fams.iter().map(|f| mt_functional_ln(f, m, &s, &ctx.settings)).collect::<Result<_>>()?;
            for (f, (e, l)) in fams.iter().zip(eps_list.iter().zip(&v)) {
                table.push(vec![
                    crate::report::fmt_num(*e),
                    crate::report::fmt_num(theta),
                    form.to_string(),
                    crate::report::fmt_num(l.exp()),
                    crate::report::fmt_num(f.dnorm),
                    crate::report::fmt_num(f.lnorm),
                ]);
            }
            lns.push(v);
        }
        // At theta = 1 the functional may decay as eps -> 0 (the plain form does for n = 3,
        // alpha = 2); only an excursion above the first value counts against boundedness.
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        rep.meta(&format!("{form}_spread_theta1"), (max(&lns[0]) - min(&lns[0])).exp());
        let excursion = (max(&lns[0]) - lns[0][0]).exp();
        rep.hard("mt.moser", format!("{form}_bounded_theta1"), excursion, "max over eps / value at the largest eps < 10", excursion < 10.0);
        let last = *lns[1].last().unwrap();
        let growth = (last - lns[1][0]).exp();
        rep.hard(
            "mt.moser",
            format!("{form}_growth_theta1.1"),
            growth,
            "grows by >= 10x as eps decreases and peaks at the smallest eps",
            growth >= 10.0 && last >= max(&lns[1]),
        );
    }
    Ok((rep, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::geomspace;
    use crate::Family;

    #[test]
    fn regularized_exp_values() {
        assert_eq!(regularized_exp(0, 0.0), 0.0);
        assert!((regularized_exp(1, 2.0) - (2f64.exp() - 3.0)).abs() < 1e-14);
        let t = 1e-4f64;
        // 50-term tail series
        let mut term = t.powi(3) / 6.0;
        let mut sum = term;
        for k in 4..54 {
            term *= t / k as f64;
            sum += term;
        }
        assert!((regularized_exp(2, t) / sum - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_indices() {
        assert_eq!(truncation_index(2, 1), 0);
        assert_eq!(truncation_index(3, 1), 1);
        assert_eq!(truncation_index(4, 2), 0);
        assert_eq!(truncation_index(5, 2), 1);
        assert_eq!(truncation_index(9, 4), 1);
        assert_eq!(truncation_index(10, 3), 2);
    }

    #[test]
    fn smooth_log_joins() {
        let h = SmoothLog::new(1.0, 50.0).unwrap();
        for &t in &h.breaks() {
            let (a, b) = (h.eval3(t * (1.0 - 1e-9)), h.eval3(t * (1.0 + 1e-9)));
            assert!((a.0 - b.0).abs() < 1e-7 && (a.1 - b.1).abs() < 1e-7 && (a.2 - b.2).abs() < 1e-6, "{t} {a:?} {b:?}");
        }
        for i in 0..=200 {
            let t = 25.0 + i as f64 / 8.0;
            assert!(h.eval3(t).0 <= (50.0 / t).ln() + 1e-12);
        }
        for i in 0..=500 {
            assert!(h.eval3(i as f64 * 0.1).1 <= 1e-15);
        }
    }

    #[test]
    fn calibration_residual() {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e5).unwrap();
        let rho = calibrate_rho(&m, 1e3).unwrap();
        assert!(rho > 0.0 && rho < 1e3);
        let lhs = log_volume_ratio(&m, 1e3, rho);
        let rhs = lambda_tilde(&m, m.volume(rho).powf(1.0 / 3.0)).unwrap().powf(-0.5);
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn calibration_monotone() {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e6).unwrap();
        let rhos: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&r| calibrate_rho(&m, r).unwrap()).collect();
        assert!(rhos.windows(2).all(|w| w[1] > w[0]), "{rhos:?}");
        let l: Vec<f64> = [1e2, 1e3, 1e4].iter().zip(&rhos).map(|(&r, &p)| log_volume_ratio(&m, r, p)).collect();
        assert!(l.windows(2).all(|w| w[1] > w[0]), "{l:?}");
    }

    #[test]
    fn moser_plane() {
        let m = Manifold::new(Family::Euclidean, 2, 1e4).unwrap();
        let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
        let (rep, table) = moser_classical_check(&ctx, 1, &[1e-2, 1e-4, 1e-6, 1e-8, 1e-10], 1.0).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        assert_eq!(table.column("eps").unwrap().len(), 20);
        let s: f64 = rep.provenance["norm_slope"].parse().unwrap();
        assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn moser_biharmonic_deep() {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 4, 1e4).unwrap();
        let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
        let (rep, _) = moser_classical_check(&ctx, 2, &[1e-10, 1e-20, 1e-30, 1e-40, 1e-50], 1.0).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
    }

    #[test]
    fn gradient_sweep_tracks_prediction() {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e8).unwrap();
        let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
        let r = geomspace(1e2, 1e4, 5);
        let (rep, sweep) = sharpness_sweep(&ctx, 1, &r, &[1.0, 1.1], &[1.0, 0.5], RhoRule::Fixed(1.0)).unwrap();
        for name in ["bounded_theta1", "norm_slope", "denominator_exponent_0.5", "inner_lower_bound", "lp_over_volume"] {
            assert!(rep.find(name).unwrap().pass, "{name}: {}", rep.summary());
        }
        let g = rep.find("growth_theta1.1").unwrap().observed;
        let pred: f64 = rep.provenance["predicted_growth_theta1.1"].parse().unwrap();
        assert!(g / pred > 0.8 && g / pred < 1.25, "{g} vs {pred}");
        assert_eq!(sweep.rows.len(), 20);
        // integrand is monotone in theta
        for w in sweep.rows.chunks(4) {
            assert!(w[2].functional >= w[0].functional && w[3].functional >= w[1].functional);
        }
    }
}
