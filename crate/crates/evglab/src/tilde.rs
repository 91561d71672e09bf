//! The transform `phi~(r) = min_{delta>0} (delta + delta^{-2n} phi(delta^{2n+1} r))` and its
//! two-sided bound through the solution of `t/phi(t) = r`.

use crate::error::{LabError, Result};
use crate::linalg::{geomspace, line_fit};
use crate::manifold::ModelManifold;
use crate::report::{ExperimentReport, Table};
use crate::roots::{bisect, golden};
use crate::tol;

/// A positive nonincreasing decay profile.
pub trait Decay: Sync {
    fn phi(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Decay for F {
    fn phi(&self, r: f64) -> f64 {
        self(r)
    }
}

/// `C (e + r)^{-a} ln(e + r)^{-b}`, regular at `r = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLog {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl PowerLog {
    pub fn new(c: f64, a: f64, b: f64) -> Self {
        PowerLog { c, a, b }
    }

    /// Predicted decay exponents `(of r, of ln r)` of the transform.
    pub fn predicted_exponents(&self, n: usize) -> (f64, f64) {
        let k = (1.0 + self.a) * (2 * n + 1) as f64;
        (-self.a / k, -self.b / k)
    }
}

impl Decay for PowerLog {
    fn phi(&self, r: f64) -> f64 {
        let x = std::f64::consts::E + r;
        self.c * x.powf(-self.a) * x.ln().powf(-self.b)
    }
}

/// The volume ratio remainder of a model manifold as a decay profile.
pub struct ManifoldLambda<'a>(pub &'a ModelManifold<f64>);

impl Decay for ManifoldLambda<'_> {
    fn phi(&self, r: f64) -> f64 {
        self.0.lambda(r)
    }
}

/// Which analytic family a profile came from, if any.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticTag {
    PowerLog(PowerLog),
    FromManifold(String),
}

/// A decay profile that passed validation.
pub struct DecayProfile<D: Decay> {
    pub phi: D,
    pub tag: Option<AnalyticTag>,
}

impl<D: Decay> DecayProfile<D> {
    /// Checks positivity and monotonicity on a log grid and `phi(r_max) < phi(r_min)/10`.
    pub fn new(phi: D, tag: Option<AnalyticTag>, r_min: f64, r_max: f64) -> Result<Self> {
        let grid = geomspace(r_min, r_max, 100);
        let vals: Vec<f64> = grid.iter().map(|&r| phi.phi(r)).collect();
        if let Some(i) = vals.iter().position(|v| !(*v > 0.0)) {
            return Err(LabError::InvalidParameter(format!("phi({:e}) = {} not positive", grid[i], vals[i])));
        }
        if vals.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
            return Err(LabError::InvalidParameter("phi is not nonincreasing".into()));
        }
        if vals[vals.len() - 1] >= vals[0] / 10.0 {
            return Err(LabError::InvalidParameter("phi does not decay over the probed range".into()));
        }
        Ok(DecayProfile { phi, tag })
    }
}

/// Minimisation result.
#[derive(Clone, Copy, Debug)]
pub struct TildeValue {
    pub value: f64,
    pub delta: f64,
    /// More than one local minimum on the coarse grid; the global grid minimum was refined.
    pub multimodal: bool,
}

const DELTA_LO: f64 = 1e-6;
const DELTA_HI: f64 = 10.0;
const DELTA_POINTS: usize = 200;

fn objective<D: Decay + ?Sized>(phi: &D, n: usize, r: f64, ld: f64) -> f64 {
    let d = ld.exp();
    d + (-((2 * n) as f64) * ld).exp() * phi.phi((((2 * n + 1) as f64) * ld).exp() * r)
}

/// Direct minimisation: coarse log grid on `[1e-6, 10]`, then golden section in `ln delta`.
pub fn tilde_direct<D: Decay + ?Sized>(phi: &D, n: usize, r: f64) -> Result<TildeValue> {
    if !(r > 0.0) {
        return Err(LabError::InvalidParameter(format!("tilde needs r > 0, got {r}")));
    }
    let lds: Vec<f64> = geomspace(DELTA_LO, DELTA_HI, DELTA_POINTS).iter().map(|d| d.ln()).collect();
    let vals: Vec<f64> = lds.iter().map(|&ld| objective(phi, n, r, ld)).collect();
    let mut local = 0;
    for i in 0..vals.len() {
        let left = i == 0 || vals[i] < vals[i - 1];
        let right = i + 1 == vals.len() || vals[i] <= vals[i + 1];
        if left && right {
            local += 1;
        }
    }
    let (imin, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let lo = lds[imin.saturating_sub(1)];
    let hi = lds[(imin + 1).min(lds.len() - 1)];
    let (ld, v) = golden(|ld| objective(phi, n, r, ld), lo, hi, tol::TILDE_GOLDEN);
    let (ld, v) = if v <= vals[imin] { (ld, v) } else { (lds[imin], vals[imin]) };
    Ok(TildeValue { value: v, delta: ld.exp(), multimodal: local > 1 })
}

/// Solution `t` of `t/phi(t) = r` and the bounds `(phi(t)^{1/(2n+1)}, 2 phi(t)^{1/(2n+1)})`.
#[derive(Clone, Copy, Debug)]
pub struct TildeBounds {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn tilde_via_root<D: Decay + ?Sized>(phi: &D, n: usize, r: f64) -> Result<TildeBounds> {
    if !(r > 0.0) {
        return Err(LabError::InvalidParameter(format!("tilde needs r > 0, got {r}")));
    }
    let g = |lt: f64| lt - phi.phi(lt.exp()).ln() - r.ln();
    // g is increasing; expand a bracket around ln r
    let mut lo = r.ln().min(0.0) - 1.0;
    let mut hi = r.ln().max(0.0) + 1.0;
    let mut tries = 0;
    while g(lo) > 0.0 {
        lo -= 2.0 * (1.0 + lo.abs());
        tries += 1;
        if tries > 60 {
            return Err(LabError::RootBracket("t/phi(t) = r has no lower bracket".into()));
        }
    }
    while !(g(hi) > 0.0) {
        hi += 2.0 * (1.0 + hi.abs());
        tries += 1;
        if tries > 60 || !hi.is_finite() || hi > 700.0 {
            return Err(LabError::RootBracket("t/phi(t) = r has no upper bracket; phi not decaying".into()));
        }
    }
    let lt = bisect(g, lo, hi, tol::TILDE_ROOT)?;
    let t = lt.exp();
    let p = phi.phi(t).powf(1.0 / (2 * n + 1) as f64);
    Ok(TildeBounds { t, lower: p, upper: 2.0 * p })
}

/// `Lambda~(r)` for a manifold with `sigma < 1`.
pub fn lambda_tilde(m: &ModelManifold<f64>, r: f64) -> Result<f64> {
    if m.sigma() >= 1.0 {
        return Err(LabError::InvalidParameter("Lambda~ is undefined on a flat manifold".into()));
    }
    Ok(tilde_direct(&ManifoldLambda(m), m.n(), r)?.value)
}

/// `Lambda~` tabulated on a log grid for repeated lookups, interpolated in log-log.
#[derive(Clone, Debug)]
pub struct LambdaTildeTable {
    ln_r: Vec<f64>,
    ln_v: Vec<f64>,
}

impl LambdaTildeTable {
    pub fn new(m: &ModelManifold<f64>, r_lo: f64, r_hi: f64, per_decade: usize) -> Result<Self> {
        let count = (((r_hi / r_lo).log10() * per_decade as f64).ceil() as usize).max(2) + 1;
        let grid = geomspace(r_lo, r_hi, count);
        let mut ln_v = Vec::with_capacity(count);
        for &r in &grid {
            ln_v.push(lambda_tilde(m, r)?.ln());
        }
        Ok(LambdaTildeTable { ln_r: grid.iter().map(|r| r.ln()).collect(), ln_v })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = r.ln();
        let k = self.ln_r.len();
        let i = match self.ln_r.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(k - 2),
            Err(i) => i.saturating_sub(1).min(k - 2),
        };
        let s = (x - self.ln_r[i]) / (self.ln_r[i + 1] - self.ln_r[i]);
        (self.ln_v[i] + s * (self.ln_v[i + 1] - self.ln_v[i])).exp()
    }
}

/// Least-squares decay exponents of `phi~` over `r_list`.
/// With `a > 0` fits `ln phi~` against `ln r`; with `a = 0` against `ln ln r`.
pub fn fit_exponent<D: Decay + ?Sized>(phi: &D, n: usize, r_list: &[f64], log_variable: bool) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in r_list {
        let v = tilde_direct(phi, n, r)?.value;
        xs.push(if log_variable { r.ln().ln() } else { r.ln() });
        ys.push(v.ln());
    }
    Ok(line_fit(&xs, &ys).0)
}

/// Sandwich, monotonicity and rate checks for one profile; returns the report and the
/// `(r, direct, lower, upper, pass)` table.
pub fn tilde_report<D: Decay + ?Sized>(
    label: &str,
    phi: &D,
    n: usize,
    radii: &[f64],
) -> Result<(ExperimentReport, Table)> {
    let mut rep = ExperimentReport::new("tilde", label);
    let mut table = Table::new(&["r", "direct", "lower", "upper", "pass"]);
    let mut worst = f64::NEG_INFINITY;
    let mut prev = f64::INFINITY;
    let mut mono = true;
    let mut multimodal = 0;
    for &r in radii {
        let d = tilde_direct(phi, n, r)?;
        let b = tilde_via_root(phi, n, r)?;
        // relative violation of either side
        let viol = ((b.lower - d.value) / b.lower).max((d.value - b.upper) / b.upper);
        let ok = viol <= 1e-9;
        worst = worst.max(viol);
        if d.value > prev * (1.0 + tol::TILDE_GOLDEN) {
            mono = false;
        }
        prev = d.value;
        if d.multimodal {
            multimodal += 1;
        }
        table.push(vec![
            crate::report::fmt_num(r),
            crate::report::fmt_num(d.value),
            crate::report::fmt_num(b.lower),
            crate::report::fmt_num(b.upper),
            ok.to_string(),
        ]);
    }
    rep.hard(
        "tilde.sandwich",
        "max relative violation of phi(t)^(1/(2n+1)) <= phi~ <= 2 phi(t)^(1/(2n+1))",
        worst,
        "<= 1e-9",
        worst <= 1e-9,
    );
    rep.hard("tilde.monotone", "phi~ nonincreasing in r", if mono { 0.0 } else { 1.0 }, "no increase", mono);
    if multimodal > 0 {
        rep.note(format!("{multimodal} radii had a multimodal coarse bracket; global grid minimum refined"));
    }
    rep.meta("n", n);
    rep.meta("delta_bracket", format!("[{DELTA_LO:e},{DELTA_HI:e}]x{DELTA_POINTS}"));
    Ok((rep, table))
}

/// Fitted rate against the predicted exponent for a power-log profile.
pub fn rate_check(p: PowerLog, n: usize, r_lo: f64, r_hi: f64, points: usize) -> Result<ExperimentReport> {
    let radii = geomspace(r_lo, r_hi, points);
    let (ea, eb) = p.predicted_exponents(n);
    let (fitted, expected) = if p.a > 0.0 {
        (fit_exponent(&p, n, &radii, false)?, ea)
    } else {
        (fit_exponent(&p, n, &radii, true)?, eb)
    };
    let label = format!("power_log(a={},b={},C={})", p.a, p.b, p.c);
    let mut rep = ExperimentReport::new("tilde", label);
    let rel = ((fitted - expected) / expected).abs();
    rep.hard(
        "tilde.rate",
        format!("fitted exponent vs {expected:.6}"),
        fitted,
        format!("relative deviation <= {}", tol::RATE_FIT),
        rel <= tol::RATE_FIT,
    );
    rep.meta("fit_range", format!("[{r_lo:e},{r_hi:e}]x{points}"));
    Ok(rep)
}
