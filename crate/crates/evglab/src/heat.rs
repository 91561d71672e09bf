//! Radial heat kernel from the pole, `H(o, r, t)`, by a conservative finite-volume scheme.
//!
//! Cells `[x_i, x_{i+1}]` carry averages `u_i`; face conductances are the integral
//! harmonic means `1 / int ds/A` between neighbouring centres, so radial steady fluxes
//! are exact. Time stepping is TR-BDF2 (a trapezoidal stage followed by BDF2), second
//! order and L-stable, so no startup smoothing is needed.

use crate::error::{LabError, Result};
use crate::linalg::solve_tridiagonal;
use crate::manifold::ModelManifold;
use crate::quad::kronrod;
use crate::report::{fmt_num, ExperimentReport, Table};
use crate::tilde::LambdaTildeTable;
use crate::tol;
use std::f64::consts::PI;

/// `(4 pi t)^{-n/2} exp(-r^2/(4t))`.
pub fn euclidean_gaussian(n: usize, r: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-(n as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// `d/dr` of the Euclidean Gaussian.
pub fn euclidean_gaussian_dr(n: usize, r: f64, t: f64) -> f64 {
    -r / (2.0 * t) * euclidean_gaussian(n, r, t)
}

/// Grid and step policy.
#[derive(Clone, Debug)]
pub struct HeatSettings {
    pub t0: f64,
    pub t_max: f64,
    /// Refinement factor; 2 halves `dr` and `dt`.
    pub resolution: f64,
    /// Truncated Gaussian mass target at `t_max` for choosing `r_cut`.
    pub tail_eps: f64,
    /// Extra output times on top of the default log grid.
    pub extra_times: Vec<f64>,
}

impl Default for HeatSettings {
    fn default() -> Self {
        HeatSettings { t0: 1e-3, t_max: 1e6, resolution: 1.0, tail_eps: 1e-10, extra_times: Vec::new() }
    }
}

impl HeatSettings {
    pub fn r_cut(&self) -> f64 {
        (8.0 * self.t_max.sqrt() * (-self.tail_eps.ln()).sqrt()).max(10.0)
    }
    fn h0(&self) -> f64 {
        self.t0.sqrt() / (32.0 * self.resolution)
    }
    fn growth(&self) -> f64 {
        0.004 / self.resolution
    }
    fn kappa(&self) -> f64 {
        0.004 / self.resolution
    }

    /// Output times: log grid at four per decade, `t0 {1,2,4}`, `r^2` for `r in {5,10,20,40}`,
    /// `1`, `2` and `3` for the semigroup check, plus extras.
    pub fn output_times(&self) -> Vec<f64> {
        let mut ts = vec![self.t0, 2.0 * self.t0, 4.0 * self.t0, 1.0, 2.0, 3.0, 25.0, 100.0, 400.0, 1600.0];
        let decades = (self.t_max / self.t0).log10();
        let k = (decades * 4.0).ceil() as usize;
        for i in 0..=k {
            ts.push(self.t0 * 10f64.powf(i as f64 / 4.0));
        }
        ts.extend(self.extra_times.iter().copied());
        ts.push(self.t_max);
        ts.retain(|&t| t >= self.t0 && t <= self.t_max * (1.0 + 1e-12));
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| ((*a - *b) / *b).abs() < 1e-9);
        ts
    }
}

/// Scheme metadata recorded with a table.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub t0: f64,
    pub r_cut: f64,
    pub h0: f64,
    pub growth: f64,
    pub kappa: f64,
    pub cells: usize,
    pub steps: usize,
    pub resolution: f64,
    /// Mass that left through the far boundary up to `t_max`.
    pub boundary_loss: f64,
}

/// `H(o, r, t)` on cell centres for a list of output times.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub n: usize,
    pub sigma: f64,
    pub manifold: String,
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    pub cell_volume: Vec<f64>,
    pub times: Vec<f64>,
    pub h: Vec<Vec<f64>>,
    pub dhdt: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    /// `int_{t0}^{t_max} H dt` per cell, trapezoidal in time.
    pub time_integral: Vec<f64>,
    pub scheme: Scheme,
}

struct Operator {
    /// conductance of face i (between cell i-1 and i); k[0] = 0, k[N] = boundary face
    k: Vec<f64>,
    mass: Vec<f64>,
}

impl Operator {
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { self.k[i] * (u[i - 1] - u[i]) } else { 0.0 };
            let right = if i + 1 < n { self.k[i + 1] * (u[i + 1] - u[i]) } else { -self.k[n] * u[i] };
            out[i] = left + right;
        }
        out
    }

    /// Solve `(M - a L) x = rhs`.
    fn solve(&self, a: f64, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            diag[i] = self.mass[i] + a * (self.k[i] + self.k[i + 1]);
            if i > 0 {
                sub[i] = -a * self.k[i];
            }
            if i + 1 < n {
                sup[i] = -a * self.k[i + 1];
            }
        }
        solve_tridiagonal(&sub, &diag, &sup, rhs)
    }
}

fn build_faces(s: &HeatSettings) -> Vec<f64> {
    let r_cut = s.r_cut();
    let (h0, g) = (s.h0(), s.growth());
    let mut x = vec![0.0];
    loop {
        let last = *x.last().unwrap();
        let next = last + h0.max(g * last);
        if next >= r_cut * (1.0 - 0.5 * g) {
            x.push(r_cut);
            break;
        }
        x.push(next);
    }
    x
}

/// Solve the heat equation from the parametrix start `u0 E` at `t0`.
pub fn solve_heat(m: &ModelManifold<f64>, s: &HeatSettings) -> Result<KernelTable> {
    if !(s.t0 >= 1e-6 && s.t0 < 1.0 && s.t_max > s.t0) {
        return Err(LabError::InvalidParameter(format!("need 1e-6 <= t0 < 1 < t_max, got t0={} t_max={}", s.t0, s.t_max)));
    }
    let n = m.n();
    let faces = build_faces(s);
    let cells = faces.len() - 1;
    let mut mass_w = Vec::with_capacity(cells);
    let mut centers = Vec::with_capacity(cells);
    for w in faces.windows(2) {
        let v = kronrod(&mut |r: f64| m.area(r), w[0], w[1]);
        // nodes at volume centroids, where the cell average matches the point value
        centers.push(kronrod(&mut |r: f64| r * m.area(r), w[0], w[1]) / v);
        mass_w.push(v);
    }
    let mut k = vec![0.0; cells + 1];
    for i in 1..cells {
        k[i] = 1.0 / kronrod(&mut |r: f64| 1.0 / m.area(r), centers[i - 1], centers[i]);
    }
    k[cells] = 1.0 / kronrod(&mut |r: f64| 1.0 / m.area(r), centers[cells - 1], faces[cells]);
    let op = Operator { k, mass: mass_w.clone() };

    // parametrix u0 E with u0 = (f/r)^{-(n-1)/2}; u0 E A = omega (f r)^{(n-1)/2} E
    let half = (n as f64 - 1.0) / 2.0;
    let mut u: Vec<f64> = faces
        .windows(2)
        .zip(&mass_w)
        .map(|(w, &mw)| {
            let mut g = |r: f64| {
                if r == 0.0 {
                    0.0
                } else {
                    m.omega() * (m.f(r) * r).powf(half) * euclidean_gaussian(n, r, s.t0)
                }
            };
            kronrod(&mut g, w[0], w[1]) / mw
        })
        .collect();
    let total: f64 = u.iter().zip(&mass_w).map(|(a, b)| a * b).sum();
    for v in u.iter_mut() {
        *v /= total;
    }

    let times = s.output_times();
    let gamma = 2.0 - std::f64::consts::SQRT_2;
    let w = (1.0 - gamma) / (2.0 - gamma);
    let c_star = 1.0 / (gamma * (2.0 - gamma));
    let c_old = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));

    let mut h_out = Vec::with_capacity(times.len());
    let mut dh_out = Vec::with_capacity(times.len());
    let mut mass_out = Vec::with_capacity(times.len());
    let mut integral = vec![0.0; cells];
    let mut boundary_loss = 0.0;
    let mut steps = 0usize;
    let record = |u: &[f64], h_out: &mut Vec<Vec<f64>>, dh_out: &mut Vec<Vec<f64>>, mass_out: &mut Vec<f64>| {
        let lu = op.apply(u);
        dh_out.push(lu.iter().zip(&op.mass).map(|(a, b)| a / b).collect());
        mass_out.push(u.iter().zip(&op.mass).map(|(a, b)| a * b).sum());
        h_out.push(u.to_vec());
    };
    record(&u, &mut h_out, &mut dh_out, &mut mass_out);
    let mut t = times[0];
    for &tb in &times[1..] {
        let count = ((tb / t).ln() / s.kappa()).ceil().max(1.0) as usize;
        let q = (tb / t).powf(1.0 / count as f64);
        for j in 0..count {
            let t_next = if j + 1 == count { tb } else { t * q };
            let dt = t_next - t;
            let lu = op.apply(&u);
            let rhs1: Vec<f64> = (0..cells).map(|i| op.mass[i] * u[i] + 0.5 * gamma * dt * lu[i]).collect();
            let ustar = op.solve(0.5 * gamma * dt, &rhs1);
            let rhs2: Vec<f64> = (0..cells).map(|i| op.mass[i] * (c_star * ustar[i] - c_old * u[i])).collect();
            let unew = op.solve(w * dt, &rhs2);
            for i in 0..cells {
                integral[i] += 0.5 * dt * (u[i] + unew[i]);
            }
            boundary_loss += 0.5 * dt * op.k[cells] * (u[cells - 1] + unew[cells - 1]);
            u = unew;
            t = t_next;
            steps += 1;
        }
        let umax = u.iter().cloned().fold(0.0, f64::max);
        let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
        if umin < -1e-10 * umax {
            return Err(LabError::Solver(format!("negative heat kernel value {umin:e} at t = {t:e} (max {umax:e})")));
        }
        record(&u, &mut h_out, &mut dh_out, &mut mass_out);
        let drift = (mass_out.last().unwrap() - 1.0).abs();
        if drift > tol::MASS {
            return Err(LabError::Solver(format!("mass drift {drift:e} at t = {t:e}")));
        }
    }
    Ok(KernelTable {
        n,
        sigma: m.sigma(),
        manifold: m.descriptor(),
        faces,
        centers,
        cell_volume: mass_w,
        times,
        h: h_out,
        dhdt: dh_out,
        mass: mass_out,
        time_integral: integral,
        scheme: Scheme {
            t0: s.t0,
            r_cut: s.r_cut(),
            h0: s.h0(),
            growth: s.growth(),
            kappa: s.kappa(),
            cells,
            steps,
            resolution: s.resolution,
            boundary_loss,
        },
    })
}

impl KernelTable {
    /// Index of an output time (relative match 1e-9).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| ((s - t) / t).abs() < 1e-9)
    }

    /// Value at the pole by even quadratic extrapolation of the first two cells.
    pub fn pole_value(&self, j: usize) -> f64 {
        let (c0, c1) = (self.centers[0], self.centers[1]);
        let (u0, u1) = (self.h[j][0], self.h[j][1]);
        (c1 * c1 * u0 - c0 * c0 * u1) / (c1 * c1 - c0 * c0)
    }

    /// `H(o, r, t_j)` interpolated between cell centres (log-linear where positive).
    pub fn eval(&self, r: f64, j: usize) -> f64 {
        let c = &self.centers;
        let u = &self.h[j];
        if r <= c[0] {
            let p = self.pole_value(j);
            return p + (u[0] - p) * (r / c[0]).powi(2);
        }
        if r >= *c.last().unwrap() {
            return 0.0;
        }
        let i = c.partition_point(|&x| x <= r) - 1;
        let s = (r - c[i]) / (c[i + 1] - c[i]);
        if u[i] > 0.0 && u[i + 1] > 0.0 {
            (u[i].ln() * (1.0 - s) + u[i + 1].ln() * s).exp()
        } else {
            u[i] * (1.0 - s) + u[i + 1] * s
        }
    }

    /// Radial derivative at interior faces: `(face position, dH/dr)` for slice `j`.
    pub fn face_gradient(&self, j: usize) -> Vec<(f64, f64)> {
        let c = &self.centers;
        let u = &self.h[j];
        (1..c.len()).map(|i| (0.5 * (c[i - 1] + c[i]), (u[i] - u[i - 1]) / (c[i] - c[i - 1]))).collect()
    }

    /// Long-format `(r, t, H)` on a log grid of radii.
    pub fn to_table(&self, radii: &[f64]) -> Table {
        let mut t = Table::new(&["r", "t", "H"]);
        for (j, &tj) in self.times.iter().enumerate() {
            for &r in radii {
                t.push_nums(&[r, tj, self.eval(r, j)]);
            }
        }
        t
    }

    fn base_report(&self, experiment: &str) -> ExperimentReport {
        let mut rep = ExperimentReport::new(experiment, self.manifold.clone());
        rep.meta("t0", fmt_num(self.scheme.t0));
        rep.meta("r_cut", fmt_num(self.scheme.r_cut));
        rep.meta("cells", self.scheme.cells);
        rep.meta("steps", self.scheme.steps);
        rep.meta("resolution", fmt_num(self.scheme.resolution));
        rep.meta("h0", fmt_num(self.scheme.h0));
        rep.meta("growth", fmt_num(self.scheme.growth));
        rep.meta("kappa", fmt_num(self.scheme.kappa));
        rep
    }

    /// Conservation, positivity and monotonicity of the solution.
    pub fn integrity_report(&self) -> ExperimentReport {
        let mut rep = self.base_report("heat");
        let drift = self.mass.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
        rep.hard("heat.mass", "max |mass - 1| over output slices", drift, format!("<= {:e}", tol::MASS), drift <= tol::MASS);
        rep.meta("boundary_loss", fmt_num(self.scheme.boundary_loss));
        // positivity and radial monotonicity where the Gaussian scale is representable
        let mut min_pos = f64::INFINITY;
        let mut worst_inc = 0.0f64;
        for (j, &t) in self.times.iter().enumerate() {
            let u = &self.h[j];
            let top = u[0];
            for i in 0..u.len() {
                let r = self.centers[i];
                if r * r > 400.0 * t {
                    break;
                }
                min_pos = min_pos.min(u[i] / top);
                if i + 1 < u.len() {
                    worst_inc = worst_inc.max((u[i + 1] - u[i]) / top);
                }
            }
        }
        rep.hard("heat.positive", "min H/H(o) where r^2 <= 400 t", min_pos, "> 0", min_pos > 0.0);
        rep.hard(
            "heat.radial_monotone",
            "max (H(r_{i+1}) - H(r_i))/H(o) where r^2 <= 400 t",
            worst_inc,
            "<= 1e-12",
            worst_inc <= 1e-12,
        );
        rep
    }

    /// Relative error against the Euclidean Gaussian for `r^2 <= 8t`, `t >= 2 t0`.
    pub fn gaussian_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, &t) in self.times.iter().enumerate() {
            if t < 2.0 * self.scheme.t0 * (1.0 - 1e-9) {
                continue;
            }
            for (i, &r) in self.centers.iter().enumerate() {
                if r * r > 8.0 * t {
                    break;
                }
                let e = euclidean_gaussian(self.n, r, t);
                worst = worst.max(((self.h[j][i] - e) / e).abs());
            }
        }
        worst
    }

    /// Semigroup identity at the pole: `H(o,o,t1+t2) = int H(r,t1) H(r,t2) dmu`.
    pub fn semigroup_error(&self, t1: f64, t2: f64) -> Option<f64> {
        let (a, b, c) = (self.time_index(t1)?, self.time_index(t2)?, self.time_index(t1 + t2)?);
        let lhs = self.pole_value(c);
        let rhs: f64 = (0..self.centers.len()).map(|i| self.h[a][i] * self.h[b][i] * self.cell_volume[i]).sum();
        Some(((lhs - rhs) / lhs).abs())
    }
}

/// Flat-model exactness against the Gaussian, and the semigroup identity at the pole.
pub fn euclidean_check(kt: &KernelTable) -> ExperimentReport {
    let mut rep = kt.base_report("heat");
    let e = kt.gaussian_error();
    rep.hard("heat.gaussian", "max |H/E - 1| for r^2 <= 8t, t >= 2 t0", e, "<= 1e-3", e <= 1e-3);
    match kt.semigroup_error(1.0, 2.0) {
        Some(s) => rep.hard("heat.semigroup", "H(o,o,3) vs int H(.,1) H(.,2)", s, "relative difference <= 1e-3", s <= 1e-3),
        None => rep.hard("heat.semigroup", "slices t = 1, 2, 3 missing", f64::NAN, "slices present", false),
    };
    rep
}

/// Li-Yau and Grigor'yan envelopes with fitted constants.
pub fn global_bounds_report(kt: &KernelTable, m: &ModelManifold<f64>) -> ExperimentReport {
    let mut rep = kt.base_report("heat");
    let n = kt.n as f64;
    let (mut c1, mut c2, mut cg) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (j, &t) in kt.times.iter().enumerate() {
        if t < 2.0 * kt.scheme.t0 {
            continue;
        }
        let vt = m.volume(t.sqrt());
        for (i, &r) in kt.centers.iter().enumerate() {
            let x = r * r / t;
            if x > 40.0 {
                break;
            }
            let h = kt.h[j][i];
            c2 = c2.max(h * vt * (x / 6.0).exp());
            c1 = c1.min(h * vt * (x / 2.0).exp());
            let env = (1.0 + x / 4.0).powf(-(2.0 + 0.75 * n)) * (x / 4.0).exp();
            cg = cg.max(kt.dhdt[j][i].abs() * t * vt * env);
        }
    }
    rep.hard("heat.li_yau_upper", "sup H V(sqrt t) exp(r^2/(6t))", c2, "finite", c2.is_finite() && c2 > 0.0);
    rep.hard("heat.li_yau_lower", "inf H V(sqrt t) exp(r^2/(2t))", c1, "positive", c1 > 0.0 && c1.is_finite());
    rep.hard("heat.grigoryan", "sup |dH/dt| t V(sqrt t) (1+r^2/4t)^-(2+3n/4) exp(r^2/4t)", cg, "finite", cg.is_finite());
    rep
}

/// Small-time comparison with `E` at two resolutions.
pub fn smalltime_check(lo: &KernelTable, hi: &KernelTable, euclidean: bool) -> ExperimentReport {
    let sup = |kt: &KernelTable| {
        let mut s = 0.0f64;
        for (j, &t) in kt.times.iter().enumerate() {
            if t > 1.0 {
                break;
            }
            for (i, &r) in kt.centers.iter().enumerate() {
                if r > 1.0 {
                    break;
                }
                let e = euclidean_gaussian(kt.n, r, t);
                let norm = t.powf(0.5 - kt.n as f64 / 2.0) * (-r * r / (24.0 * t)).exp();
                s = s.max((kt.h[j][i] - e).abs() / norm);
            }
        }
        s
    };
    let (a, b) = (sup(lo), sup(hi));
    let mut rep = hi.base_report("heat");
    rep.soft("heat.smalltime_sup", "sup_{t<=1,r<=1} |H-E| / (t^{(1-n)/2} e^{-r^2/24t})", b, "finite", b.is_finite());
    let ratio = b / a;
    if euclidean {
        rep.hard("heat.smalltime_refine", "sup at 2x resolution / sup at 1x", ratio, "<= 1 (scheme error only)", ratio <= 1.0);
    } else {
        rep.hard("heat.smalltime_refine", "sup at 2x resolution / sup at 1x", ratio, "in [0.5, 2]", (0.5..=2.0).contains(&ratio));
    }
    // H/E -> 1 within r^2 <= 4t at t0 {4, 2, 1}
    let t0 = hi.scheme.t0;
    let mut devs = Vec::new();
    for f in [4.0, 2.0, 1.0] {
        if let Some(j) = hi.time_index(f * t0) {
            let t = hi.times[j];
            let d = hi
                .centers
                .iter()
                .enumerate()
                .take_while(|(_, &r)| r * r <= 4.0 * t)
                .map(|(i, &r)| (hi.h[j][i] / euclidean_gaussian(hi.n, r, t) - 1.0).abs())
                .fold(0.0, f64::max);
            devs.push(d);
        }
    }
    // on the flat model the deviation is pure scheme error
    let mono = if euclidean {
        devs.iter().all(|&d| d <= 1e-3)
    } else {
        devs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    };
    rep.soft(
        "heat.smalltime_ratio",
        format!("max |H/E - 1| on r^2 <= 4t at t0*{{4,2,1}} = {:?}", devs.iter().map(|d| fmt_num(*d)).collect::<Vec<_>>()),
        *devs.last().unwrap_or(&f64::NAN),
        "monotone decrease as t -> t0",
        mono,
    );
    rep
}

/// Large-distance ratio `Q = |H - E/sigma| / (Lambda~(r) E(r,3t))` over `r >= r_min`, `r^2 <= 12 t`.
pub fn largedist_sup(kt: &KernelTable, lt: &LambdaTildeTable, r_min: f64) -> f64 {
    let mut s = 0.0f64;
    let r_lim = kt.scheme.r_cut / 2.0;
    for (j, &t) in kt.times.iter().enumerate() {
        for (i, &r) in kt.centers.iter().enumerate() {
            if r < r_min {
                continue;
            }
            if r * r > 12.0 * t || r > r_lim {
                break;
            }
            let num = (kt.h[j][i] - euclidean_gaussian(kt.n, r, t) / kt.sigma).abs();
            s = s.max(num / (lt.eval(r) * euclidean_gaussian(kt.n, r, 3.0 * t)));
        }
    }
    s
}

/// Large-distance check, the `r -> sigma^{-1}` sequence and its refinement stability.
pub fn largedist_check(
    lo: &KernelTable,
    hi: &KernelTable,
    m: &ModelManifold<f64>,
    lt: &LambdaTildeTable,
    limit_hard: bool,
) -> ExperimentReport {
    let mut rep = hi.base_report("heat");
    let inv = 1.0 / m.sigma();
    let r_mins = [1.0, 2.0, 4.0, 8.0, 16.0];
    let sups: Vec<f64> = r_mins.iter().map(|&r| largedist_sup(hi, lt, r)).collect();
    let finite = sups.iter().all(|s| s.is_finite());
    let mono = sups.windows(2).all(|w| w[1] <= w[0]);
    rep.hard("heat.largedist_sup", "sup Q over r >= 1, r^2 <= 12t", sups[0], "finite", finite);
    rep.hard("heat.largedist_monotone", "sup Q nonincreasing in r_min over {1,2,4,8,16}", sups[4], "nonincreasing", mono);
    let ratio = sups[0] / largedist_sup(lo, lt, 1.0);
    rep.hard("heat.largedist_refine", "sup Q at 2x resolution / 1x", ratio, "in [0.5, 2]", (0.5..=2.0).contains(&ratio));

    if let Some(j) = hi.time_index(400.0) {
        let kappa = (hi.eval(20.0, j) / euclidean_gaussian(hi.n, 20.0, 400.0) - inv).abs() / (inv * lt.eval(20.0));
        rep.soft("heat.kappa_r20", "|H/E - 1/sigma| / (Lambda~(20)/sigma) at r=20, t=400", kappa, "finite", kappa.is_finite());
    }
    rep.merge(asymptotic_sequence(hi, m, limit_hard));
    rep
}

/// `H(r, r^2) (4 pi r^2)^{n/2} e^{1/4}` over `r in {5,10,20,40}`.
/// The 5% closeness at `r = 40` is hard only when `limit_hard` is set; slowly decaying
/// remainders legitimately sit further away.
pub fn asymptotic_sequence(kt: &KernelTable, m: &ModelManifold<f64>, limit_hard: bool) -> ExperimentReport {
    let mut rep = kt.base_report("heat");
    let inv = 1.0 / m.sigma();
    let mut seq = Vec::new();
    for r in [5.0f64, 10.0, 20.0, 40.0] {
        if let Some(j) = kt.time_index(r * r) {
            seq.push(kt.eval(r, j) * (4.0 * PI * r * r).powf(kt.n as f64 / 2.0) * 0.25f64.exp());
        }
    }
    if seq.len() < 4 {
        rep.hard("heat.asymptotic_sequence", "H(r,r^2)(4 pi r^2)^{n/2} e^{1/4} (missing slices)", f64::NAN, "4 values", false);
        return rep;
    }
    let dist: Vec<f64> = seq.iter().map(|q| (q - inv).abs()).collect();
    // ties within scheme accuracy count as monotone (the flat case sits on the limit)
    let slack = 1e-5 * inv;
    let toward = dist.windows(2).all(|w| w[1] <= w[0] + slack);
    let same_side = dist[0] <= slack || seq.iter().all(|q| (q - inv).signum() == (seq[0] - inv).signum());
    let last = (seq[3] - inv).abs() / inv;
    rep.hard(
        "heat.asymptotic_monotone",
        format!("sequence r=5,10,20,40: {}", seq.iter().map(|q| format!("{q:.6}")).collect::<Vec<_>>().join(" ")),
        seq[3],
        format!("monotone approach to 1/sigma = {inv:.6}"),
        toward && same_side,
    );
    let kind = if limit_hard { crate::report::Kind::Hard } else { crate::report::Kind::Soft };
    rep.check(kind, "heat.asymptotic_limit", "relative distance to 1/sigma at r=40", last, "<= 0.05", last <= 0.05);
    rep
}

/// L2 annular average of `|dH/dr - dE/dr / sigma|` over `[r, (1+eta) r]`, normalised by
/// `Lambda~(r)^{1/2} r^{-1/2} t^{-1/4} E(r,3t)`; sup over output times.
pub fn annular_ratio(kt: &KernelTable, lambda_tilde_r: f64, r: f64, eta: f64) -> f64 {
    let mut best = 0.0f64;
    let n = kt.n;
    for (j, &t) in kt.times.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        let grad = kt.face_gradient(j);
        for (k, &(x, g)) in grad.iter().enumerate() {
            if x < r || x > (1.0 + eta) * r {
                continue;
            }
            let w = kt.cell_volume[k + 1].min(kt.cell_volume[k]);
            let diff = g - euclidean_gaussian_dr(n, x, t) / kt.sigma;
            num += diff * diff * w;
            den += w;
        }
        if den == 0.0 {
            continue;
        }
        let avg = (num / den).sqrt();
        let norm = lambda_tilde_r.sqrt() * r.powf(-0.5) * t.powf(-0.25) * euclidean_gaussian(n, r, 3.0 * t);
        if norm > 0.0 {
            best = best.max(avg / norm);
        }
    }
    best
}

/// Annular gradient check at radius `r` for `eta in {1, 1/4, 1/16}`.
///
/// The constant in front of `(1 + 1/sqrt(eta))` is not known, so the growth test is soft:
/// `ratio(eta) <= ratio(1) (1 + 1/sqrt(eta))`. The tighter reading normalised at `eta = 1`
/// is recorded alongside for information.
pub fn annular_gradient_check(lo: &KernelTable, hi: &KernelTable, lt: &LambdaTildeTable, r: f64) -> ExperimentReport {
    let mut rep = hi.base_report("heat");
    rep.note("radial specialization: the angular gradient vanishes on the model");
    let l = lt.eval(r);
    let etas = [1.0, 0.25, 0.0625];
    let vals: Vec<f64> = etas.iter().map(|&e| annular_ratio(hi, l, r, e)).collect();
    rep.hard(&format!("heat.annular_r{r}"), format!("sup_t ratio at eta=1, r={r}"), vals[0], "finite", vals[0].is_finite());
    for (k, &e) in etas.iter().enumerate().skip(1) {
        let growth = vals[k] / vals[0];
        let factor = 1.0 + 1.0 / e.sqrt();
        rep.soft(
            &format!("heat.annular_eta_{e}"),
            format!("ratio(eta={e})/ratio(1) at r={r}"),
            growth,
            format!("<= 1 + 1/sqrt(eta) = {factor:.4}"),
            growth <= factor,
        );
        rep.soft(
            &format!("heat.annular_eta_{e}_normalised"),
            format!("ratio(eta={e})/ratio(1) at r={r}, envelope normalised at eta=1"),
            growth,
            format!("<= (1 + 1/sqrt(eta))/2 = {:.4} (informational)", factor / 2.0),
            growth <= factor / 2.0,
        );
    }
    let coarse = annular_ratio(lo, l, r, 1.0);
    let refine = vals[0] / coarse;
    rep.hard(&format!("heat.annular_refine_r{r}"), "ratio at 2x resolution / 1x (eta=1)", refine, "in [0.5, 2]", (0.5..=2.0).contains(&refine));
    rep
}

/// `G_2(o, r) = int_0^inf H(o, r, t) dt` from the table.
///
/// The part beyond `t_max` uses `H(r, t) ~ H(r, t_max) V(sqrt t_max) / V(sqrt t)`, with the
/// cone law past `1e8 t_max`. Below `t0` the integrand is negligible for `r >= 1`.
pub fn mellin_green2(kt: &KernelTable, m: &ModelManifold<f64>, r: f64) -> Result<f64> {
    let jl = kt.times.len() - 1;
    let big_t = kt.times[jl];
    let c = &kt.centers;
    let i = c.partition_point(|&x| x <= r).clamp(1, c.len() - 1) - 1;
    let s = (r - c[i]) / (c[i + 1] - c[i]);
    let lerp = |v: &[f64]| (v[i].ln() * (1.0 - s) + v[i + 1].ln() * s).exp();
    let body = lerp(&kt.time_integral);
    let h_end = kt.eval(r, jl);
    let v_end = m.volume(big_t.sqrt());
    let far = 1e8 * big_t;
    let mid = crate::quad::integrate_log(|t: f64| v_end / m.volume(t.sqrt()), big_t, far, crate::quad::Tol::rel(1e-10))?;
    let half = m.n() as f64 / 2.0;
    let rest = v_end / (m.sigma() * m.ball()) * far.powf(1.0 - half) / (half - 1.0);
    Ok(body + h_end * (mid + rest))
}

/// Bulk self-convergence: max relative change between resolutions for `r^2 <= 8t`, `t >= 2 t0`.
pub fn self_convergence(lo: &KernelTable, hi: &KernelTable) -> f64 {
    let mut worst = 0.0f64;
    for (j, &t) in hi.times.iter().enumerate() {
        if t < 2.0 * hi.scheme.t0 * (1.0 - 1e-9) {
            continue;
        }
        let Some(jl) = lo.time_index(t) else { continue };
        let r_top = (8.0 * t).sqrt().min(hi.scheme.r_cut / 2.0);
        for k in 0..=40 {
            let r = r_top * k as f64 / 40.0;
            let (a, b) = (hi.eval(r, j), lo.eval(r, jl));
            worst = worst.max(((a - b) / a).abs());
        }
    }
    worst
}
