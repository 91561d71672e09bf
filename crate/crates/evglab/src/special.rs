//! Gamma function and the regularized exponential.

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Real>(x: T) -> T {
    let mut a = T::lit(LANCZOS[0]);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::lit(p) / (x + T::from_usize_lossy(i));
    }
    a
}

/// Gamma function via the Lanczos approximation (g = 7), with reflection below 1/2.
pub fn gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    let x = x - T::one();
    let t = x + T::lit(LANCZOS_G) + half;
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(x + half) * (-t).exp() * lanczos_sum(x)
}

/// Natural log of |Gamma(x)| for x > 0.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + lanczos_sum(x).ln()
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    let nh = T::from_usize_lossy(n) * T::lit(0.5);
    T::PI().powf(nh) / gamma(nh + T::one())
}

/// Area of the unit sphere S^{n-1}.
pub fn unit_sphere_area<T: Real>(n: usize) -> T {
    let nh = T::from_usize_lossy(n) * T::lit(0.5);
    T::lit(2.0) * T::PI().powf(nh) / gamma(nh)
}

fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * T::from_usize_lossy(j))
}

/// `e^t - sum_{k<=m} t^k/k!`, switching to the tail series for `t < m + 1`.
pub fn exp_m<T: Real>(m: usize, t: T) -> T {
    assert!(t >= T::zero(), "exp_m needs t >= 0");
    if t < T::from_usize_lossy(m + 1) {
        let mut term = t.powi((m + 1) as i32) / factorial::<T>(m + 1);
        let mut sum = term;
        let mut k = m + 1;
        while term > T::epsilon() * sum * T::lit(0.01) && k < m + 200 {
            k += 1;
            term = term * t / T::from_usize_lossy(k);
            sum = sum + term;
        }
        sum
    } else {
        let mut partial = T::zero();
        let mut term = T::one();
        for k in 0..=m {
            if k > 0 {
                term = term * t / T::from_usize_lossy(k);
            }
            partial = partial + term;
        }
        t.exp() - partial
    }
}

/// `ln exp_m(m, t)` without overflow for large `t`.
pub fn ln_exp_m<T: Real>(m: usize, t: T) -> T {
    if t < T::lit(600.0) {
        return exp_m(m, t).ln();
    }
    // e^t (1 - e^{-t} sum t^k/k!) with the correction far below epsilon
    let mut corr = T::zero();
    let mut term = T::one();
    for k in 0..=m {
        if k > 0 {
            term = term * t / T::from_usize_lossy(k);
        }
        corr = corr + term;
    }
    t + (-(corr.ln() - t).exp()).ln_1p()
}
