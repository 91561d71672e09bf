use approx::assert_relative_eq;
use evglab::manifold::{geometry_check, psi, txsx_check};
use evglab::{Family, Manifold};
use std::f64::consts::PI;

fn taper() -> Manifold {
    Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e8).unwrap()
}

fn poly() -> Manifold {
    Manifold::new(Family::PolyTaper { c: 0.5, a: 0.5 }, 3, 1e8).unwrap()
}

#[test]
fn flat_model() {
    let m = Manifold::new(Family::Euclidean, 3, 1e3).unwrap();
    assert_eq!(m.sigma(), 1.0);
    for r in [0.1, 1.0, 7.0] {
        assert_eq!(m.f(r), r);
        assert_eq!(m.lambda(r), 0.0);
    }
    assert_relative_eq!(m.volume(1.0), 4.0 * PI / 3.0, max_relative = 1e-14);
}

#[test]
fn asymptotic_ratios() {
    assert_relative_eq!(taper().sigma(), 0.64, max_relative = 1e-15);
    assert_relative_eq!(poly().sigma(), 0.25, max_relative = 1e-15);
}

// Reference values: 40-digit adaptive quadrature of omega_2 f^2 outside this crate.
#[test]
fn volumes_against_quadrature_oracle() {
    let m = taper();
    assert_relative_eq!(m.volume(1.0), 3.713_360_321_349_482_7, max_relative = 1e-10);
    assert_relative_eq!(m.volume(10.0), 2_882.141_042_149_241_9, max_relative = 1e-10);
    assert_relative_eq!(m.volume(1e3) / (4.0 * PI / 3.0 * 1e9), 0.640_480_118_86, max_relative = 1e-10);
    assert_relative_eq!(m.lambda(10.0), 0.048_060_490_319_117_766, max_relative = 1e-9);
    assert_relative_eq!(m.lambda(100.0), 0.004_810_86, max_relative = 1e-9);
    let p = poly();
    assert_relative_eq!(p.volume(1.0), 3.634_455_556_569_304_4, max_relative = 1e-10);
    assert_relative_eq!(p.lambda(100.0), 0.117_537_112_826_865_78, max_relative = 1e-9);
}

#[test]
fn remainder_limits() {
    let m = taper();
    // Lambda = (1 - sigma) - O(r) near the pole
    assert_relative_eq!(m.lambda(1e-9), 1.0 - 0.64, max_relative = 1e-8);
    assert!(m.lambda(100.0) < m.lambda(10.0));
    // the poly remainder decays like r^{-1/2}
    let p = poly();
    let slope = (p.lambda(1e8) / p.lambda(1e6)).ln() / 100f64.ln();
    assert!((slope + 0.5).abs() < 0.02, "{slope}");
}

#[test]
fn inverse_volume_round_trips() {
    for m in [taper(), poly()] {
        for r in [1e-3, 0.5, 3.0, 250.0, 1e6] {
            assert_relative_eq!(m.inverse_volume(m.volume(r)), r, max_relative = 1e-12);
        }
    }
}

#[test]
fn bishop_and_containment_reports_pass() {
    for m in [taper(), poly()] {
        let rep = geometry_check(&m, 1e6, 241).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        let grid = evglab::linalg::geomspace(1e-2, 1e6, 161);
        let prof = m.volume_profile(&grid).unwrap();
        let rep = txsx_check(&m, &prof).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
    }
}

#[test]
fn containment_ratio_on_taper() {
    let m = taper();
    let lo = psi(3, 1.0 / 0.64);
    for r in [0.5, 2.0, 20.0, 200.0] {
        let q = m.tau_remainder(r) / m.lambda(r);
        assert!(q >= lo - 1e-10 && q <= 1.0 + 1e-10, "r = {r}: {q} vs [{lo}, 1]");
    }
}

#[test]
fn rejects_inadmissible_profiles() {
    assert!(Manifold::new(Family::ExpTaper { c: 1.5 }, 3, 1e3).is_err());
    assert!(Manifold::new(Family::PolyTaper { c: 0.5, a: 0.0 }, 3, 1e3).is_err());
    assert!(Manifold::new(Family::Euclidean, 1, 1e3).is_err());
}
