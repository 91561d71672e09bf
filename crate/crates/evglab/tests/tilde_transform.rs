use approx::assert_relative_eq;
use evglab::linalg::geomspace;
use evglab::tilde::{fit_exponent, lambda_tilde, rate_check, tilde_direct, tilde_report, tilde_via_root, DecayProfile, ManifoldLambda, PowerLog};
use evglab::{Family, Manifold};

fn recip(r: f64) -> f64 {
    1.0 / r
}

// For phi = 1/r the objective is delta + delta^{-4n-1}/r; stationarity gives
// delta = ((4n+1)/r)^{1/(4n+2)} and value delta (1 + 1/(4n+1)).
#[test]
fn reciprocal_closed_form() {
    let v = tilde_direct(&recip, 3, 1e4).unwrap();
    assert_relative_eq!(v.value, 0.669_942_886_274_316_74, max_relative = 1e-7);
    assert_relative_eq!(v.delta, 0.622_089_822_969_008_40, max_relative = 1e-3);
    let lo = 10f64.powf(-4.0 / 14.0);
    assert!(v.value >= lo && v.value <= 2.0 * lo);
}

#[test]
fn reciprocal_root() {
    for r in [1e-3, 1.0, 42.0, 1e8] {
        let b = tilde_via_root(&recip, 3, r).unwrap();
        assert_relative_eq!(b.t, r.sqrt(), max_relative = 1e-9);
    }
}

#[test]
fn constant_profile_matches_stationary_point() {
    for (n, kappa) in [(2usize, 0.3), (3, 1.0), (5, 1e-3)] {
        let d = (2.0 * n as f64 * kappa).powf(1.0 / (2 * n + 1) as f64);
        let phi = move |_r: f64| kappa;
        let v = tilde_direct(&phi, n, 7.0).unwrap();
        assert_relative_eq!(v.value, d * (1.0 + 0.5 / n as f64), max_relative = 1e-7);
    }
}

#[test]
fn sandwich_and_monotone_on_profiles() {
    let radii = geomspace(1e-2, 1e8, 12);
    for p in [PowerLog::new(1.0, 1.0, 0.0), PowerLog::new(0.3, 0.5, 0.0), PowerLog::new(1.0, 0.0, 1.0), PowerLog::new(2.0, 2.0, 1.0)] {
        let (rep, t) = tilde_report("p", &p, 3, &radii).unwrap();
        assert!(rep.hard_pass(), "{p:?}: {}", rep.summary());
        assert_eq!(t.rows.len(), 12);
    }
}

#[test]
fn fitted_rates() {
    for (a, b) in [(1.0, 0.0), (0.5, 0.0), (0.0, 1.0)] {
        let rep = rate_check(PowerLog::new(1.0, a, b), 3, 1e4, 1e6, 9).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        for n in [2, 3, 4] {
            let rep = rate_check(PowerLog::new(1.0, a, b), n, 1e8, 1e10, 9).unwrap();
            assert!(rep.hard_pass(), "{}", rep.summary());
        }
    }
}

#[test]
fn decay_profile_validation() {
    assert!(DecayProfile::new(recip, None, 1.0, 1e3).is_ok());
    assert!(DecayProfile::new(|_r: f64| 1.0, None, 1.0, 1e3).is_err());
    assert!(DecayProfile::new(|r: f64| r, None, 1.0, 1e3).is_err());
    assert!(DecayProfile::new(|r: f64| 1.0 - r, None, 0.1, 1e3).is_err());
}

#[test]
fn lambda_tilde_dominates_lambda() {
    let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e8).unwrap();
    let mut prev = f64::INFINITY;
    for r in [1.0, 10.0, 100.0, 1e3, 1e4] {
        let lt = lambda_tilde(&m, r).unwrap();
        assert!(lt >= m.lambda(r), "r = {r}");
        assert!(lt <= prev * (1.0 + 1e-8));
        prev = lt;
    }
    let flat = Manifold::new(Family::Euclidean, 3, 1e3).unwrap();
    assert!(lambda_tilde(&flat, 1.0).is_err());
}

// Lambda ~ ln r / r on this family, so the fit sits slightly above -1/14 and approaches it.
#[test]
fn poly_taper_rate() {
    let m = Manifold::new(Family::PolyTaper { c: 0.5, a: 1.0 }, 3, 1e12).unwrap();
    let early = fit_exponent(&ManifoldLambda(&m), 3, &geomspace(1e2, 1e6, 9), false).unwrap();
    let late = fit_exponent(&ManifoldLambda(&m), 3, &geomspace(1e6, 1e10, 9), false).unwrap();
    let want = -1.0 / 14.0;
    assert!(((late - want) / want).abs() < 0.05, "{late}");
    assert!((late - want).abs() < (early - want).abs());
}
