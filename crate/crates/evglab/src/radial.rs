//! Sampled radial profiles with interpolation in log-log coordinates.

use crate::error::{LabError, Result};

/// How a table is continued outside its sample range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extrap {
    /// Continue with the local log-log slope at the end point.
    PowerLaw,
    /// Hold the end value.
    Constant,
    /// Zero outside.
    Zero,
}

/// Radial function `r -> u(r)` sampled on an increasing positive grid.
///
/// Interpolation is cubic Hermite in `(ln r, ln |u|)` when the samples are strictly
/// positive and derivatives are known, and cubic Hermite in `(ln r, u)` otherwise.
#[derive(Clone, Debug)]
pub struct RadialFunction {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// `du/dr` at the samples.
    pub du: Vec<f64>,
    pub below: Extrap,
    pub above: Extrap,
    positive: bool,
}

impl RadialFunction {
    /// Build from values and exact derivatives.
    pub fn with_derivative(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>, below: Extrap, above: Extrap) -> Result<Self> {
        if r.len() < 2 || r.len() != u.len() || r.len() != du.len() {
            return Err(LabError::InvalidParameter("radial table needs >= 2 matching samples".into()));
        }
        if r[0] <= 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidParameter("radial grid must be positive and increasing".into()));
        }
        let positive = u.iter().all(|&v| v > 0.0);
        Ok(RadialFunction { r, u, du, below, above, positive })
    }

    /// Build from values only; derivatives come from centered differences in `ln r`.
    pub fn from_samples(r: Vec<f64>, u: Vec<f64>, below: Extrap, above: Extrap) -> Result<Self> {
        let n = r.len();
        if n < 2 || n != u.len() {
            return Err(LabError::InvalidParameter("radial table needs >= 2 matching samples".into()));
        }
        let mut du = vec![0.0; n];
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            du[i] = (u[b] - u[a]) / (r[b] - r[a]);
        }
        Self::with_derivative(r, u, du, below, above)
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn locate(&self, r: f64) -> usize {
        match self.r.binary_search_by(|p| p.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    fn end_slope(&self, i: usize) -> f64 {
        // log-log slope r u'/u at sample i
        if self.u[i] == 0.0 {
            0.0
        } else {
            self.r[i] * self.du[i] / self.u[i]
        }
    }

    fn extrapolate(&self, r: f64, i: usize, rule: Extrap) -> f64 {
        match rule {
            Extrap::Zero => 0.0,
            Extrap::Constant => self.u[i],
            Extrap::PowerLaw => self.u[i] * (r / self.r[i]).powf(self.end_slope(i)),
        }
    }

    /// Log-space Hermite on cell `i` unless a near-zero sample makes the log-slopes blow up,
    /// which would overshoot exponentially. Power laws always pass.
    fn log_cell(&self, i: usize, h: f64) -> bool {
        if !self.positive {
            return false;
        }
        let dy = (self.u[i + 1] / self.u[i]).ln().abs();
        h * self.end_slope(i).abs().max(self.end_slope(i + 1).abs()) <= 1.0 + 4.0 * dy
    }

    /// Evaluate `u(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        let last = self.r.len() - 1;
        if r < self.r[0] {
            return self.extrapolate(r, 0, self.below);
        }
        if r > self.r[last] {
            return self.extrapolate(r, last, self.above);
        }
        let i = self.locate(r);
        let (x0, x1) = (self.r[i].ln(), self.r[i + 1].ln());
        let h = x1 - x0;
        let s = (r.ln() - x0) / h;
        let (h00, h10, h01, h11) = hermite(s);
        if self.log_cell(i, h) {
            let (y0, y1) = (self.u[i].ln(), self.u[i + 1].ln());
            let (m0, m1) = (self.end_slope(i), self.end_slope(i + 1));
            (h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1).exp()
        } else {
            let (m0, m1) = (self.r[i] * self.du[i], self.r[i + 1] * self.du[i + 1]);
            h00 * self.u[i] + h10 * h * m0 + h01 * self.u[i + 1] + h11 * h * m1
        }
    }

    /// Evaluate `du/dr` by differentiating the interpolant.
    pub fn deriv(&self, r: f64) -> f64 {
        let last = self.r.len() - 1;
        if r < self.r[0] || r > self.r[last] {
            let i = if r < self.r[0] { 0 } else { last };
            let rule = if r < self.r[0] { self.below } else { self.above };
            return match rule {
                Extrap::Zero | Extrap::Constant => 0.0,
                Extrap::PowerLaw => self.extrapolate(r, i, rule) * self.end_slope(i) / r,
            };
        }
        let i = self.locate(r);
        let (x0, x1) = (self.r[i].ln(), self.r[i + 1].ln());
        let h = x1 - x0;
        let s = (r.ln() - x0) / h;
        let (d00, d10, d01, d11) = hermite_deriv(s);
        if self.log_cell(i, h) {
            let (y0, y1) = (self.u[i].ln(), self.u[i + 1].ln());
            let (m0, m1) = (self.end_slope(i), self.end_slope(i + 1));
            let dy = (d00 * y0 + d10 * h * m0 + d01 * y1 + d11 * h * m1) / h;
            self.eval(r) * dy / r
        } else {
            let (m0, m1) = (self.r[i] * self.du[i], self.r[i + 1] * self.du[i + 1]);
            (d00 * self.u[i] + d10 * h * m0 + d01 * self.u[i + 1] + d11 * h * m1) / (h * r)
        }
    }
}

fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

fn hermite_deriv(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::geomspace;

    #[test]
    fn power_law_reproduced() {
        let r = geomspace(1e-2, 1e2, 9);
        let u: Vec<f64> = r.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let du: Vec<f64> = r.iter().map(|x| -4.5 * x.powf(-2.5)).collect();
        let f = RadialFunction::with_derivative(r, u, du, Extrap::PowerLaw, Extrap::PowerLaw).unwrap();
        for &x in &[3e-3, 0.07, 1.0, 33.0, 1e4] {
            let rel = (f.eval(x) - 3.0 * x.powf(-1.5)) / (3.0 * x.powf(-1.5));
            assert!(rel.abs() < 1e-13, "{x} {rel}");
            let drel = (f.deriv(x) + 4.5 * x.powf(-2.5)) / (4.5 * x.powf(-2.5));
            assert!(drel.abs() < 1e-12);
        }
    }

    #[test]
    fn signed_values_interpolate() {
        let r = geomspace(0.1, 10.0, 200);
        let u: Vec<f64> = r.iter().map(|x| x.ln().sin()).collect();
        let du: Vec<f64> = r.iter().map(|x| x.ln().cos() / x).collect();
        let f = RadialFunction::with_derivative(r, u, du, Extrap::Zero, Extrap::Zero).unwrap();
        assert!((f.eval(2.0) - 2f64.ln().sin()).abs() < 1e-8);
        assert_eq!(f.eval(20.0), 0.0);
    }

    #[test]
    fn near_zero_positive_samples_stay_bounded() {
        let r = geomspace(1.0, 30.0, 40);
        let u: Vec<f64> = r.iter().map(|x| 1.0 + (3.0 * x).sin() + 1e-9).collect();
        let f = RadialFunction::from_samples(r, u, Extrap::Zero, Extrap::Zero).unwrap();
        let top = geomspace(1.0, 30.0, 2000).into_iter().fold(0.0f64, |w, x| w.max(f.eval(x)));
        assert!(top < 10.0, "{top}");
    }
}
