use approx::assert_relative_eq;
use evglab::green::RieszConstants;
use evglab::linalg::geomspace;
use evglab::mt::*;
use evglab::{Family, Manifold};

fn taper(n: usize) -> Manifold {
    Manifold::new(Family::ExpTaper { c: 0.8 }, n, 1e8).unwrap()
}

#[test]
fn regularized_exponential() {
    assert_relative_eq!(regularized_exp(1, 2.0), 2f64.exp() - 3.0, max_relative = 1e-14);
    assert_relative_eq!(regularized_exp(0, 1.0), std::f64::consts::E - 1.0, max_relative = 1e-14);
    // leading term t^{m+1}/(m+1)! for small t
    assert_relative_eq!(regularized_exp(3, 1e-3), 1e-12 / 24.0, max_relative = 1e-3);
    let t: f64 = 5.0;
    assert_relative_eq!(regularized_exp(3, t), t.exp() - 1.0 - t - t * t / 2.0 - t.powi(3) / 6.0, max_relative = 1e-14);
}

#[test]
fn truncation_and_proved_range() {
    assert_eq!(truncation_index(3, 1), 1);
    assert_eq!(truncation_index(8, 2), 2);
    assert_eq!(truncation_index(6, 4), 0);
    assert!(in_proved_range(3, 1) && in_proved_range(4, 2) && in_proved_range(5, 3));
    assert!(!in_proved_range(6, 4) && !in_proved_range(4, 0));
    assert_eq!(FamilyKind::for_sweep(3, 2).unwrap(), FamilyKind::SmoothHR);
    assert_eq!(FamilyKind::for_sweep(5, 2).unwrap(), FamilyKind::HAlphaR);
    assert!(FamilyKind::for_sweep(6, 4).is_err());
}

#[test]
fn adjusted_exponential_constant() {
    let spec = MTFunctionalSpec::adjusted(4, 2, 0.4).unwrap();
    let k = RieszConstants::new(4, 2).unwrap();
    assert_relative_eq!(spec.gamma, 0.4 * k.gamma, max_relative = 1e-14);
    assert_eq!(spec.denom_power, Some(2.0));
    let spec = spec.with_denominator_factor(0.5).with_theta(1.1);
    assert_eq!(spec.denom_power, Some(1.0));
    assert_eq!(spec.theta, 1.1);
    assert_eq!(MTFunctionalSpec::full_norm(3, 1, 1.0).unwrap().without_denominator().denom_power, None);
}

#[test]
fn calibrated_rho_on_both_tapers() {
    for m in [taper(3), Manifold::new(Family::PolyTaper { c: 0.5, a: 1.0 }, 3, 1e8).unwrap()] {
        let rho = calibrate_rho(&m, 1e3).unwrap();
        assert!(rho > 0.0 && rho < 1e3);
        assert!(log_volume_ratio(&m, 1e3, rho) > 0.0);
    }
}

#[test]
fn moser_radii_match_target_volumes() {
    for n in 2..=6 {
        let eps = moser_eps_for_volumes(n, &MOSER_LOG10_VOLUMES);
        let m = Manifold::new(Family::Euclidean, n, 1e3).unwrap();
        for (e, k) in eps.iter().zip(MOSER_LOG10_VOLUMES) {
            assert_relative_eq!(m.volume(*e).log10(), -k, max_relative = 1e-12);
        }
    }
}

#[test]
fn moser_dichotomy_with_classical_constant() {
    let cases = [(Manifold::new(Family::Euclidean, 2, 1e4).unwrap(), 1), (taper(3), 1), (taper(3), 2), (taper(4), 2)];
    for (m, alpha) in cases {
        let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
        let eps = moser_eps_for_volumes(m.n(), &MOSER_LOG10_VOLUMES);
        let (rep, table) = moser_classical_check(&ctx, alpha, &eps, 1.0).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        assert!(!table.rows.is_empty());
    }
}

#[test]
fn sweep_at_five_two_grows_past_the_constant() {
    let m = taper(5);
    let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
    let r = geomspace(1e2, 1e4, 5);
    let (rep, sweep) = sharpness_sweep(&ctx, 2, &r, &[1.0, 1.1], &[1.0], RhoRule::Fixed(1.0)).unwrap();
    for name in ["bounded_theta1", "growth_theta1.1", "norm_slope"] {
        assert!(rep.find(name).unwrap().pass, "{name}: {}", rep.summary());
    }
    assert!(rep.find("growth_theta1.1").unwrap().observed >= 10.0);
    assert_eq!(sweep.rows.len(), 10);
    assert_relative_eq!(predicted_norm_slope(&m, FamilyKind::HAlphaR), m.ball() * m.sigma(), max_relative = 1e-15);
}

#[test]
fn functional_is_monotone_in_theta() {
    let m = taper(3);
    let ctx = MtContext::new(&m, MtSettings::default()).unwrap();
    let fam = build_family(&ctx, 1, 1e3, 1.0, FamilyKind::H0R).unwrap();
    let base = MTFunctionalSpec::adjusted(3, 1, m.sigma()).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for theta in [0.5, 0.9, 1.0, 1.05, 1.1] {
        let v = mt_functional_ln(&fam, &m, &base.clone().with_theta(theta), &ctx.settings).unwrap();
        assert!(v >= prev, "theta = {theta}");
        prev = v;
    }
    // the flat family cannot be used with a mismatched functional
    let wrong = MTFunctionalSpec::adjusted(3, 2, m.sigma()).unwrap();
    assert!(mt_functional(&fam, &m, &wrong, &ctx.settings).is_err());
}
