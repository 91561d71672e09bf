//! Decreasing rearrangements on model manifolds, Talenti-type comparison for Green
//! functions, the annular kernel conditions and the Polya-Szego ratio.

use crate::error::{LabError, Result};
use crate::green::{GreenProfile, RieszConstants};
use crate::quad::{integrate, integrate_log, kronrod_nodes, Tol};
use crate::radial::RadialFunction;
use crate::report::{ExperimentReport, Table};
use crate::tol;
use crate::Manifold;

/// Distribution function and decreasing rearrangement of `|f|`.
#[derive(Clone, Debug)]
pub struct RearrangementProfile {
    /// Measure samples `t`, increasing.
    pub t: Vec<f64>,
    /// `f*(t)`, nonincreasing.
    pub f_star: Vec<f64>,
    /// Level samples `s`, decreasing.
    pub s: Vec<f64>,
    /// `lambda_f(s) = mu{|f| > s}`.
    pub lambda_f: Vec<f64>,
    /// Whether the exact `f o V^{-1}` path was used.
    pub exact: bool,
}

impl RearrangementProfile {
    /// `f*(t)` as a right-continuous step function through the samples.
    pub fn eval(&self, t: f64) -> f64 {
        if self.exact {
            let i = self.t.partition_point(|&x| x <= t);
            if i == 0 {
                return self.f_star[0];
            }
            if i == self.t.len() {
                return 0.0f64.max(*self.f_star.last().unwrap()).min(self.f_star[i - 1]);
            }
            // geometric interpolation between samples of a decreasing function
            let (t0, t1) = (self.t[i - 1], self.t[i]);
            let (a, b) = (self.f_star[i - 1], self.f_star[i]);
            if a > 0.0 && b > 0.0 && t0 > 0.0 {
                let w = (t / t0).ln() / (t1 / t0).ln();
                return (a.ln() * (1.0 - w) + b.ln() * w).exp();
            }
            return a + (b - a) * (t - t0) / (t1 - t0);
        }
        let i = self.t.partition_point(|&x| x <= t);
        if i >= self.f_star.len() {
            0.0
        } else {
            self.f_star[i]
        }
    }

    /// `lambda_f(s)` by counting measure above `s`.
    pub fn distribution(&self, s: f64) -> f64 {
        // f* is nonincreasing, so mu{f > s} = sup{t : f*(t) > s}
        let k = self.f_star.partition_point(|&v| v > s);
        if k == 0 {
            0.0
        } else {
            self.t[k - 1]
        }
    }
}

/// Rearrange `|f|` sampled on its own grid.
///
/// Nonincreasing nonnegative samples take the exact path `f*(V(r)) = f(r)`. Anything else is
/// rearranged as the discrete measure of Kronrod nodes in `ln r`, each weighted by its share of
/// `dmu`, so `int (f*)^p dt` is the quadrature of `int |f|^p dmu`.
pub fn rearrange(f: &RadialFunction, m: &Manifold) -> RearrangementProfile {
    let monotone = f.u.windows(2).all(|w| w[1] <= w[0]) && f.u.iter().all(|&v| v >= 0.0);
    if monotone {
        let t: Vec<f64> = f.r.iter().map(|&r| m.volume(r)).collect();
        let f_star = f.u.clone();
        let s = f.u.clone();
        let lambda_f = t.clone();
        return RearrangementProfile { t, f_star, s, lambda_f, exact: true };
    }
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(15 * f.r.len());
    for w in f.r.windows(2) {
        for (x, wt) in kronrod_nodes(w[0].ln(), w[1].ln()) {
            let r = x.exp();
            cells.push((f.eval(r).abs(), wt * r * m.area(r)));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut t = Vec::with_capacity(cells.len());
    let mut acc = m.volume(f.r[0]);
    let mut f_star = Vec::with_capacity(cells.len());
    for (v, mu) in &cells {
        acc += mu;
        t.push(acc);
        f_star.push(*v);
    }
    let s = f_star.clone();
    let lambda_f = t.clone();
    RearrangementProfile { t, f_star, s, lambda_f, exact: false }
}

/// `int |f|^p dmu` over the sample range, by adaptive quadrature against `A`.
pub fn lp_norm_p(f: &RadialFunction, m: &Manifold, p: f64, breaks: &[f64]) -> Result<f64> {
    let mut pts = vec![f.r_min()];
    pts.extend(breaks.iter().copied().filter(|&b| b > f.r_min() && b < f.r_max()));
    pts.push(f.r_max());
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += integrate_log(|r| f.eval(r).abs().powf(p) * m.area(r), w[0], w[1], Tol::rel(1e-11))?;
    }
    Ok(sum)
}

/// `int_0^{T} f*(t)^p dt` where `T` is the total measure of the samples.
pub fn rearranged_lp_p(rp: &RearrangementProfile, f: &RadialFunction, m: &Manifold, p: f64) -> Result<f64> {
    if rp.exact {
        // f*(t) = f(V^{-1}(t)); integrate in t panel by panel
        let mut sum = 0.0;
        for w in rp.t.windows(2) {
            sum += integrate(|t| f.eval(m.inverse_volume(t)).abs().powf(p), w[0], w[1], Tol::rel(1e-11))?;
        }
        return Ok(sum);
    }
    let mut prev = m.volume(f.r[0]);
    let mut sum = 0.0;
    for (t, v) in rp.t.iter().zip(&rp.f_star) {
        sum += v.powf(p) * (t - prev);
        prev = *t;
    }
    Ok(sum)
}

/// Checks of the rearrangement itself on a few test functions.
pub fn rearrange_report(m: &Manifold) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("rearrange", m.descriptor());
    let grid = crate::green::log_grid(1e-3, 20.0, 40, &[1.0]);
    let bump: Vec<f64> = grid.iter().map(|r| r * r * (-r).exp()).collect();
    let f = RadialFunction::from_samples(grid.clone(), bump, crate::radial::Extrap::Zero, crate::radial::Extrap::Zero)?;
    let rp = rearrange(&f, m);
    let mono = rp.f_star.windows(2).all(|w| w[1] <= w[0]);
    rep.hard("rearrange.structure", "bump_nonincreasing", if mono { 0.0 } else { 1.0 }, "f* nonincreasing", mono);
    for p in [1.0, 2.0] {
        let direct = lp_norm_p(&f, m, p, &[])?;
        let star = rearranged_lp_p(&rp, &f, m, p)?;
        let e = ((direct - star) / direct).abs();
        rep.hard("rearrange.equimeasurable", format!("bump_p{p}"), e, "relative difference <= 1e-6", e <= 1e-6);
    }
    // monotone profile: exact path
    let dec: Vec<f64> = grid.iter().map(|r| 1.0 / (1.0 + r * r)).collect();
    let g = RadialFunction::from_samples(grid.clone(), dec, crate::radial::Extrap::Constant, crate::radial::Extrap::PowerLaw)?;
    let gp = rearrange(&g, m);
    for p in [1.0, 2.0] {
        let direct = lp_norm_p(&g, m, p, &[])?;
        let star = rearranged_lp_p(&gp, &g, m, p)?;
        let e = ((direct - star) / direct).abs();
        rep.hard("rearrange.equimeasurable", format!("decreasing_p{p}"), e, "relative difference <= 1e-6", e <= 1e-6);
    }
    let mut worst = 0.0f64;
    for (s, lam) in gp.s.iter().zip(&gp.lambda_f) {
        // generalized inverse: f*(lambda_f(s)) <= s
        let v = gp.eval(*lam * (1.0 + 1e-12));
        worst = worst.max(v - s);
    }
    rep.hard("rearrange.structure", "generalized_inverse", worst, "f*(lambda_f(s)) <= s", worst <= 1e-12);
    // order: f <= g pointwise implies f* <= g*
    let lower: Vec<f64> = g.u.iter().map(|v| 0.5 * v).collect();
    let h = RadialFunction::from_samples(grid.clone(), lower, crate::radial::Extrap::Constant, crate::radial::Extrap::PowerLaw)?;
    let hp = rearrange(&h, m);
    let ordered = hp.f_star.iter().zip(&gp.f_star).all(|(a, b)| a <= b);
    rep.hard("rearrange.structure", "order_preserved", if ordered { 0.0 } else { 1.0 }, "f <= g implies f* <= g*", ordered);
    // indicator of B(o, 1)
    let ind: Vec<f64> = grid.iter().map(|&r| if r <= 1.0 { 1.0 } else { 0.0 }).collect();
    let fi = RadialFunction::from_samples(grid.clone(), ind, crate::radial::Extrap::Constant, crate::radial::Extrap::Zero)?;
    let ip = rearrange(&fi, m);
    let v1 = m.volume(1.0);
    let drop = ip.distribution(0.5);
    let e = ((drop - v1) / v1).abs();
    rep.hard("rearrange.indicator", "indicator_level", e, "mu{1_B > 1/2} = V(1)", e <= 1e-12);
    Ok(rep)
}

/// Euclidean `G_2* (t) = c_2 (t / B_n)^{-(n-2)/n}` against the rearrangement.
pub fn euclidean_green_rearrangement(gp: &GreenProfile, m: &Manifold) -> ExperimentReport {
    let mut rep = ExperimentReport::new("rearrange_green", m.descriptor());
    let rp = rearrange(gp.as_radial(), m);
    let k = RieszConstants::new(gp.n, gp.alpha).expect("alpha < n");
    let nf = gp.n as f64;
    let e = (nf - gp.alpha as f64) / nf;
    let worst = rp
        .t
        .iter()
        .zip(&rp.f_star)
        .fold(0.0f64, |w, (&t, &v)| w.max((v / (k.c_alpha * (t / k.ball).powf(-e)) - 1.0).abs()));
    rep.hard("rearrange.green_closed", "riesz_rearranged", worst, "relative error <= 1e-6", worst <= 1e-6);
    rep
}

/// Dyadic ladder `r_min 2^k` up to `r_max`.
pub fn ladder(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = vec![r_min];
    while *out.last().unwrap() * 2.0 <= r_max * (1.0 + 1e-12) {
        let next = out.last().unwrap() * 2.0;
        out.push(next);
    }
    out
}

/// `int_{r_k}^{r_{k+1}} |k|^beta dmu` for each ladder step.
///
/// Pair integrals are summed from these pieces; differences of cumulative sums lose all
/// digits once the inner pieces dominate.
fn pieces(kernel: &dyn Fn(f64) -> f64, m: &Manifold, beta: f64, lad: &[f64]) -> Result<Vec<f64>> {
    lad.windows(2)
        .map(|w| integrate(|r| kernel(r).abs().powf(beta) * m.area(r), w[0], w[1], Tol::rel(1e-12)))
        .collect()
}

fn pair_sum(p: &[f64], i: usize, j: usize) -> f64 {
    p[i..j].iter().rev().sum()
}

/// Which kernel a Green profile contributes: `G_alpha` itself, or `|G_{alpha+1}'|` for odd `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind {
    Value,
    Gradient,
}

impl KernelKind {
    fn order(self, gp: &GreenProfile) -> usize {
        match self {
            KernelKind::Value => gp.alpha,
            KernelKind::Gradient => gp.alpha - 1,
        }
    }
    fn eval(self, gp: &GreenProfile, r: f64) -> f64 {
        match self {
            KernelKind::Value => gp.eval(r),
            KernelKind::Gradient => -gp.deriv(r),
        }
    }
}

/// `sigma^{-alpha/(n-alpha)} gamma_{n,alpha}^{-1}`.
pub fn adjusted_constant(n: usize, alpha: usize, sigma: f64) -> Result<f64> {
    let k = RieszConstants::new(n, alpha)?;
    Ok(sigma.powf(-(alpha as f64) / (n - alpha) as f64) / k.gamma)
}

/// Talenti-type bounds for an even-order Green profile: pointwise rearrangement bound,
/// the gradient-integral bound for `q in {1, 2}` and the log-integral bound.
pub fn talenti_check(gp: &GreenProfile, m: &Manifold) -> Result<(ExperimentReport, Table)> {
    let (n, alpha) = (gp.n, gp.alpha);
    if alpha % 2 != 0 {
        return Err(LabError::InvalidParameter("Talenti bounds are checked for even alpha".into()));
    }
    let k = RieszConstants::new(n, alpha)?;
    let (nf, af) = (n as f64, alpha as f64);
    let sigma = m.sigma();
    let flat = m.is_euclidean();
    let mut rep = ExperimentReport::new(format!("talenti_a{alpha}"), m.descriptor());
    let mut table = Table::new(&["t", "f_star", "bound", "slack"]);

    // pointwise bound on G*
    let rp = rearrange(gp.as_radial(), m);
    let pre = sigma.powf(-af / nf) * k.ball.powf((nf - af) / nf) * k.c_alpha;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_dev = 0.0f64;
    let mut far_ratio = 0.0;
    for (i, (&t, &v)) in rp.t.iter().zip(&rp.f_star).enumerate() {
        let r = gp.r[i];
        if !(1e-4..=1e6).contains(&r) {
            continue;
        }
        let bound = pre * t.powf(-(nf - af) / nf);
        let ratio = v / bound;
        worst = worst.max(ratio - 1.0);
        worst_dev = worst_dev.max((ratio - 1.0).abs());
        far_ratio = ratio;
        if i % 8 == 0 {
            table.push_nums(&[t, v, bound, 1.0 - ratio]);
        }
    }
    rep.hard("rearrange.tb", "pointwise_excess", worst, format!("max G*/bound - 1 <= {:e}", tol::THEOREM_REL), worst <= tol::THEOREM_REL);
    if flat {
        rep.hard("rearrange.tb", "flat_equality", worst_dev, "max |G*/bound - 1| <= 1e-6", worst_dev <= 1e-6);
    } else {
        rep.soft("rearrange.tb", "slack_far", 1.0 - far_ratio, "slack at r = 1e6 below 1e-2", 1.0 - far_ratio < 1e-2);
    }

    // gradient integrals between level sets: level sets of radial G are balls
    let lad = ladder(1e-3, 1.024e3);
    let theorem = alpha == 2 || 2 * alpha <= n;
    let ball = k.ball;
    let omega = k.omega;
    let rho = |r: f64| (m.volume(r) / ball).powf(1.0 / nf);
    for q in [1.0f64, 2.0] {
        let lhs = pieces(&|r| gp.deriv(r), m, q, &lad)?;
        let e = q * (af - nf - 1.0) + nf - 1.0;
        let coef = (k.c_alpha * (nf - af)).powf(q) * omega;
        let euclid = |a: f64, b: f64| {
            if (e + 1.0).abs() < 1e-12 {
                coef * (b / a).ln()
            } else {
                coef * (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0)
            }
        };
        let factor = sigma.powf(-q * (af - 1.0) / nf);
        let mut worst = f64::NEG_INFINITY;
        let mut dev = 0.0f64;
        for i in 0..lad.len() {
            for j in i + 1..lad.len() {
                let l = pair_sum(&lhs, i, j);
                let rhs = factor * euclid(rho(lad[i]), rho(lad[j]));
                worst = worst.max(l / rhs - 1.0);
                dev = dev.max((l / rhs - 1.0).abs());
            }
        }
        let name = format!("gradient_q{q}");
        let crit = format!("max lhs/rhs - 1 <= {:e}", tol::THEOREM_REL);
        if theorem {
            rep.hard("rearrange.tc", name, worst, crit, worst <= tol::THEOREM_REL);
        } else {
            rep.soft("rearrange.tc", name, worst, format!("{crit} (outside proved range, exploratory)"), worst <= tol::THEOREM_REL);
        }
        if flat {
            rep.hard("rearrange.tc", format!("flat_equality_q{q}"), dev, "max |lhs/rhs - 1| <= 1e-6", dev <= 1e-6);
        }
    }

    // log-integral bound with the sharp constant
    let (worst, dev) = log_integral_excess(gp, m, KernelKind::Value, &lad)?;
    rep.hard("rearrange.td", "log_integral", worst, format!("max lhs/rhs - 1 <= {:e}", tol::THEOREM_REL), worst <= tol::THEOREM_REL);
    if flat {
        rep.hard("rearrange.td", "flat_equality", dev, "max |lhs/rhs - 1| <= 1e-6", dev <= 1e-6);
    }
    Ok((rep, table))
}

/// Worst `lhs/rhs - 1` and worst `|lhs/rhs - 1|` of the log-integral bound over ladder annuli.
fn log_integral_excess(gp: &GreenProfile, m: &Manifold, kind: KernelKind, lad: &[f64]) -> Result<(f64, f64)> {
    let a = kind.order(gp);
    let beta = gp.n as f64 / (gp.n - a) as f64;
    let a_exp = adjusted_constant(gp.n, a, m.sigma())?;
    let p = pieces(&|r| kind.eval(gp, r), m, beta, lad)?;
    let vols: Vec<f64> = lad.iter().map(|&r| m.volume(r)).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut dev = 0.0f64;
    for i in 0..lad.len() {
        for j in i + 1..lad.len() {
            let q = pair_sum(&p, i, j) / (a_exp * (vols[j] / vols[i]).ln());
            worst = worst.max(q - 1.0);
            dev = dev.max((q - 1.0).abs());
        }
    }
    Ok((worst, dev))
}

/// Log-integral bound for `|G_{alpha+1}'|` with odd `alpha <= n/2`.
pub fn talenti_gradient_check(gp: &GreenProfile, m: &Manifold) -> Result<ExperimentReport> {
    let alpha = gp.alpha - 1;
    if gp.alpha % 2 != 0 || 2 * alpha > gp.n {
        return Err(LabError::InvalidParameter(format!("gradient bound needs odd alpha <= n/2, got {alpha}")));
    }
    let mut rep = ExperimentReport::new(format!("talenti_gradient_a{alpha}"), m.descriptor());
    let (worst, dev) = log_integral_excess(gp, m, KernelKind::Gradient, &ladder(1e-3, 1.024e3))?;
    rep.hard("rearrange.te", "gradient_log_integral", worst, format!("max lhs/rhs - 1 <= {:e}", tol::THEOREM_REL), worst <= tol::THEOREM_REL);
    if m.is_euclidean() {
        rep.hard("rearrange.te", "flat_equality", dev, "max |lhs/rhs - 1| <= 1e-6", dev <= 1e-6);
    }
    Ok(rep)
}

/// Result of the annular sweep: `B(R)` = sup of the excess over ladder pairs with `r_2 <= R`.
#[derive(Clone, Debug)]
pub struct AnnulusSweep {
    pub a_expected: f64,
    pub radii: Vec<f64>,
    pub sup: Vec<f64>,
}

impl AnnulusSweep {
    pub fn sup_up_to(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|&x| x <= r * (1.0 + 1e-12));
        self.sup[k.max(1) - 1]
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["r2", "sup_excess", "a_expected"]);
        for (r, s) in self.radii.iter().zip(&self.sup) {
            t.push_nums(&[*r, *s, self.a_expected]);
        }
        t
    }
}

/// `sup_{r_1 < r_2 <= R} [int_{r_1 <= d <= r_2} |k|^beta - A log(V(r_2)/V(r_1))]` on the ladder.
pub fn annulus_sweep(gp: &GreenProfile, m: &Manifold, kind: KernelKind, a_expected: f64, r_min: f64, r_max: f64) -> Result<AnnulusSweep> {
    let lad = ladder(r_min, r_max);
    let a = kind.order(gp);
    let beta = gp.n as f64 / (gp.n - a) as f64;
    let p = pieces(&|r| kind.eval(gp, r), m, beta, &lad)?;
    let lv: Vec<f64> = lad.iter().map(|&r| m.volume(r).ln()).collect();
    let excess: Vec<f64> = (0..p.len()).map(|k| p[k] - a_expected * (lv[k + 1] - lv[k])).collect();
    let mut sup = vec![f64::NEG_INFINITY];
    for j in 1..lad.len() {
        let mut best = *sup.last().unwrap();
        for i in 0..j {
            best = best.max(pair_sum(&excess, i, j));
        }
        sup.push(best);
    }
    Ok(AnnulusSweep { a_expected, radii: lad, sup })
}

/// Annular conditions with a given constant, plus the pointwise size condition.
///
/// The sweep runs to `r = 1024`. Boundedness is read off the octave increments of the sup
/// beyond `r_2 = 128`: they must vanish or contract by a factor of at least 0.9 per octave,
/// so that the geometric tail is finite. With too small a constant they stay level instead.
pub fn kernel_condition_check(gp: &GreenProfile, m: &Manifold, kind: KernelKind, a_expected: f64) -> Result<(ExperimentReport, AnnulusSweep)> {
    let a = kind.order(gp);
    let mut rep = ExperimentReport::new(format!("kernel_conditions_a{a}"), m.descriptor());
    rep.meta("a_expected", a_expected);
    let sw = annulus_sweep(gp, m, kind, a_expected, 1e-3, 1.024e3)?;
    let b_rec = sw.sup_up_to(128.0);
    let b_top = *sw.sup.last().unwrap();
    let octaves: Vec<f64> = [128.0, 256.0, 512.0, 1024.0].iter().map(|&r| sw.sup_up_to(r)).collect();
    let inc: Vec<f64> = octaves.windows(2).map(|w| w[1] - w[0]).collect();
    let q = if inc.iter().all(|&d| d <= 1e-9) {
        0.0
    } else {
        inc.windows(2).map(|w| w[1] / w[0].max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    };
    let tail = if q < 1.0 { inc[2].max(0.0) * q / (1.0 - q) } else { f64::INFINITY };
    rep.meta("B", b_rec);
    rep.meta("B_extrapolated", b_top + tail);
    rep.hard(
        "rearrange.k12",
        "annular_sup_bounded",
        q,
        "octave increments of the sup beyond r2 = 128 vanish or contract by <= 0.9",
        q <= 0.9 && b_top.is_finite(),
    );
    let growth = b_top - b_rec;
    rep.soft("rearrange.k12", "annular_sup_stable", growth, "sup growth beyond r2 = 128 <= 1e-6", growth <= 1e-6 && b_top.is_finite());
    let beta = gp.n as f64 / (gp.n - a) as f64;
    let size = gp
        .r
        .iter()
        .filter(|&&r| (1e-4..=1e6).contains(&r))
        .fold(0.0f64, |w, &r| w.max(kind.eval(gp, r).abs() * m.volume(r).powf(1.0 / beta)));
    rep.hard("rearrange.k3", "size_constant", size, "sup |k| V^{1/beta} finite", size.is_finite());
    Ok((rep, sw))
}

/// The sharp constant without the volume-ratio factor must fail on `sigma < 1`: the annular
/// sup grows in every decade from 1 to 1e3.
pub fn sigma_necessity_check(gp: &GreenProfile, m: &Manifold, kind: KernelKind) -> Result<ExperimentReport> {
    let a = kind.order(gp);
    let k = RieszConstants::new(gp.n, a)?;
    let mut rep = ExperimentReport::new(format!("kernel_unadjusted_a{a}"), m.descriptor());
    let sw = annulus_sweep(gp, m, kind, 1.0 / k.gamma, 1e-3, 1.024e3)?;
    let b: Vec<f64> = [1.0, 8.0, 64.0, 512.0].iter().map(|&r| sw.sup_up_to(r)).collect();
    let steps: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
    let min_step = steps.iter().copied().fold(f64::INFINITY, f64::min);
    // asymptotic growth per factor 8 in r: (sigma^{-a/(n-a)} - 1) gamma^{-1} n ln 8
    let rate = (m.sigma().powf(-(a as f64) / (gp.n - a) as f64) - 1.0) / k.gamma * gp.n as f64 * 8f64.ln();
    rep.meta("predicted_step", rate);
    rep.hard("rearrange.k12_unadjusted", "monotone_growth", min_step, "sup strictly increases over each factor 8 in r", min_step > 0.0);
    let last = steps[steps.len() - 1] / rate;
    rep.soft("rearrange.k12_unadjusted", "growth_vs_predicted", last, "last step / predicted in [0.5, 1.5]", (0.5..=1.5).contains(&last));
    Ok(rep)
}

/// `||grad u#||_p / ||grad u||_p` for a radial nonincreasing Lipschitz `u` supported in `B(o, s)`.
pub fn polya_szego_ratio(du: &dyn Fn(f64) -> f64, m: &Manifold, s: f64, p: f64, breaks: &[f64]) -> Result<f64> {
    let n = m.n() as f64;
    let b = m.ball();
    let weight = |r: f64| n * b.powf(1.0 / n) * m.volume(r).powf((n - 1.0) / n) / m.area(r);
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&x| x > 0.0 && x < s));
    pts.push(s);
    let (mut top, mut bot) = (0.0, 0.0);
    for w in pts.windows(2) {
        top += integrate(|r| du(r).abs().powf(p) * weight(r).powf(p - 1.0) * m.area(r), w[0], w[1], Tol::rel(1e-12))?;
        bot += integrate(|r| du(r).abs().powf(p) * m.area(r), w[0], w[1], Tol::rel(1e-12))?;
    }
    Ok((top / bot).powf(1.0 / p))
}

/// Tent functions `max(0, 1 - r/s)` for `s in {1, 5, 25}` and `p in {2, n}`.
pub fn polya_szego_check(m: &Manifold) -> Result<(ExperimentReport, Table)> {
    let n = m.n();
    let sigma = m.sigma();
    let bound = sigma.powf(-1.0 / n as f64);
    let mut rep = ExperimentReport::new("polya_szego", m.descriptor());
    let mut table = Table::new(&["p", "s", "ratio", "bound", "tent_limit"]);
    let mut ps = vec![2.0];
    if n != 2 {
        ps.push(n as f64);
    }
    for p in ps {
        let limit = sigma.powf(-(p - 1.0) / (n as f64 * p));
        let mut last = 0.0;
        for s in [1.0, 5.0, 25.0] {
            let ratio = polya_szego_ratio(&|_| 1.0 / s, m, s, p, &[])?;
            table.push_nums(&[p, s, ratio, bound, limit]);
            let excess = ratio / bound - 1.0;
            rep.hard("rearrange.polya_szego", format!("tent_p{p}_s{s}"), ratio, format!("ratio <= sigma^{{-1/n}} (+{:e})", tol::THEOREM_REL), excess <= tol::THEOREM_REL);
            last = ratio;
        }
        if m.is_euclidean() {
            let d = (last - 1.0).abs();
            rep.hard("rearrange.polya_szego", format!("flat_ratio_p{p}"), d, "|ratio - 1| <= 1e-9", d <= 1e-9);
        } else {
            let d = (last / limit - 1.0).abs();
            rep.soft("rearrange.polya_szego", format!("tent_limit_p{p}"), d, "ratio at s = 25 within 5% of sigma^{-(p-1)/(np)}", d <= 0.05);
        }
    }
    Ok((rep, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::Extrap;
    use crate::Family;

    #[test]
    fn indicator_rearranges_to_indicator() {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e3).unwrap();
        let grid = crate::green::log_grid(1e-2, 4.0, 20, &[1.0]);
        let ind: Vec<f64> = grid.iter().map(|&r| if r <= 1.0 { 1.0 } else { 0.0 }).collect();
        let f = RadialFunction::from_samples(grid, ind, Extrap::Constant, Extrap::Zero).unwrap();
        let rp = rearrange(&f, &m);
        let v = m.volume(1.0);
        assert!(rp.exact);
        assert_eq!(rp.eval(0.5 * v), 1.0);
        assert_eq!(rp.eval(1.5 * v), 0.0);
    }

    // Polynomial tapers approach the cone like r^{-a}, so the excess keeps creeping up toward
    // zero long after r = 128. Bounded, with contracting increments, but not stable to 1e-6.
    #[test]
    fn poly_taper_excess_creeps_below_zero() {
        let m = Manifold::new(Family::PolyTaper { c: 0.5, a: 0.5 }, 4, 1e4).unwrap();
        let gp = crate::green::green2_closed(&m, &crate::green::GreenSettings::default()).unwrap();
        let ac = adjusted_constant(4, 2, m.sigma()).unwrap();
        let sw = annulus_sweep(&gp, &m, KernelKind::Value, ac, 1e-3, 1.024e3).unwrap();
        let (mid, top) = (sw.sup_up_to(128.0), sw.sup_up_to(1024.0));
        assert!(top > mid + 1e-3);
        assert!(top <= 0.0);
        let (rep, _) = kernel_condition_check(&gp, &m, KernelKind::Value, ac).unwrap();
        assert!(!rep.find("annular_sup_stable").unwrap().pass);
        assert!(rep.find("annular_sup_bounded").unwrap().pass);
        let k = RieszConstants::new(4, 2).unwrap();
        let (rep, _) = kernel_condition_check(&gp, &m, KernelKind::Value, 1.0 / k.gamma).unwrap();
        assert!(!rep.find("annular_sup_bounded").unwrap().pass);
    }

    #[test]
    fn euclidean_annulus_is_exact() {
        let m = Manifold::new(Family::Euclidean, 4, 1e4).unwrap();
        let gp = crate::green::green2_closed(&m, &crate::green::GreenSettings::default()).unwrap();
        let k = RieszConstants::new(4, 2).unwrap();
        let sw = annulus_sweep(&gp, &m, KernelKind::Value, 1.0 / k.gamma, 1e-3, 1.024e3).unwrap();
        assert!(sw.sup.iter().skip(1).all(|v| v.abs() < 1e-9), "{:?}", sw.sup);
    }

    #[test]
    fn ladder_is_dyadic() {
        let l = ladder(1.0, 16.0);
        assert_eq!(l, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn flat_polya_szego_is_one() {
        let m = Manifold::new(Family::Euclidean, 3, 1e3).unwrap();
        let r = polya_szego_ratio(&|r| (-r).exp(), &m, 3.0, 2.0, &[]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
