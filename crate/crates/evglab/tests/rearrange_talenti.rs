use approx::assert_relative_eq;
use evglab::green::{green2_closed, green_alpha_iterate, log_grid, GreenSettings, RieszConstants};
use evglab::quad::{integrate_log, Tol};
use evglab::radial::{Extrap, RadialFunction};
use evglab::rearrange::*;
use evglab::{Family, Manifold};
use std::f64::consts::PI;

fn taper(n: usize) -> Manifold {
    Manifold::new(Family::ExpTaper { c: 0.8 }, n, 1e8).unwrap()
}

#[test]
fn structure_on_all_models() {
    for m in [Manifold::new(Family::Euclidean, 3, 1e3).unwrap(), taper(3), Manifold::new(Family::PolyTaper { c: 0.5, a: 0.5 }, 4, 1e4).unwrap()] {
        let rep = rearrange_report(&m).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
    }
}

#[test]
fn indicator_of_a_ball() {
    let m = taper(3);
    let grid = log_grid(1e-2, 10.0, 20, &[2.0]);
    let ind: Vec<f64> = grid.iter().map(|&r| if r <= 2.0 { 3.0 } else { 0.0 }).collect();
    let f = RadialFunction::from_samples(grid, ind, Extrap::Constant, Extrap::Zero).unwrap();
    let rp = rearrange(&f, &m);
    let v = m.volume(2.0);
    assert_relative_eq!(rp.eval(0.9 * v), 3.0, max_relative = 1e-14);
    assert_eq!(rp.eval(m.volume(2.5)), 0.0);
    assert_relative_eq!(rp.distribution(1.0), v, max_relative = 1e-12);
}

#[test]
fn oscillating_data_is_equimeasurable() {
    let m = taper(3);
    let grid = log_grid(1e-3, 30.0, 40, &[]);
    let u: Vec<f64> = grid.iter().map(|&r| (1.5 + (6.0 * r.ln()).sin()) * (-0.2 * r).exp()).collect();
    let f = RadialFunction::from_samples(grid, u, Extrap::Constant, Extrap::Zero).unwrap();
    let rp = rearrange(&f, &m);
    assert!(!rp.exact);
    for p in [1.0, 2.0, 3.5] {
        let a = lp_norm_p(&f, &m, p, &[]).unwrap();
        let b = rearranged_lp_p(&rp, &f, &m, p).unwrap();
        assert!(((a - b) / a).abs() <= 1e-6, "p = {p}: {a} vs {b}");
    }
}

#[test]
fn flat_green_rearranges_in_closed_form() {
    for n in [3, 4, 6] {
        let m = Manifold::new(Family::Euclidean, n, 1e8).unwrap();
        let gp = green2_closed(&m, &GreenSettings::default()).unwrap();
        let rep = euclidean_green_rearrangement(&gp, &m);
        assert!(rep.hard_pass(), "{}", rep.summary());
    }
}

#[test]
fn talenti_bounds() {
    let s = GreenSettings::default();
    for m in [Manifold::new(Family::Euclidean, 4, 1e8).unwrap(), taper(3), taper(4)] {
        let gp = green2_closed(&m, &s).unwrap();
        let (rep, table) = talenti_check(&gp, &m).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        assert!(!table.rows.is_empty());
    }
    let m = taper(5);
    let g4 = green_alpha_iterate(&m, 4, &s).unwrap();
    let (rep, _) = talenti_check(&g4, &m).unwrap();
    assert!(rep.hard_pass(), "{}", rep.summary());
    // odd order through the gradient of G_2
    let gp = green2_closed(&m, &s).unwrap();
    let rep = talenti_gradient_check(&gp, &m).unwrap();
    assert!(rep.hard_pass(), "{}", rep.summary());
}

// On R^4 with alpha = 2, int_{1 < |y| < 2} G_2^2 = ln 2 / (8 pi^2) = gamma^{-1} ln(V(2)/V(1)).
#[test]
fn flat_annulus_identity() {
    let m = Manifold::new(Family::Euclidean, 4, 1e4).unwrap();
    let k = RieszConstants::new(4, 2).unwrap();
    let lhs = integrate_log(|r| m.green2(r).powi(2) * m.area(r), 1.0, 2.0, Tol::rel(1e-13)).unwrap();
    assert_relative_eq!(lhs, 2f64.ln() / (8.0 * PI * PI), max_relative = 1e-11);
    assert_relative_eq!(lhs, 16f64.ln() / k.gamma, max_relative = 1e-11);
}

#[test]
fn kernel_conditions_need_the_adjusted_constant() {
    let s = GreenSettings::default();
    for n in [3, 4] {
        let m = taper(n);
        let gp = green2_closed(&m, &s).unwrap();
        let ac = adjusted_constant(n, 2, m.sigma()).unwrap();
        let (rep, sw) = kernel_condition_check(&gp, &m, KernelKind::Value, ac).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        assert_eq!(sw.radii.len(), sw.sup.len());

        let k = RieszConstants::new(n, 2).unwrap();
        let (rep, _) = kernel_condition_check(&gp, &m, KernelKind::Value, 1.0 / k.gamma).unwrap();
        assert!(!rep.find("annular_sup_bounded").unwrap().pass);
        let rep = sigma_necessity_check(&gp, &m, KernelKind::Value).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
    }
}

#[test]
fn polya_szego_ratio_bound() {
    for m in [taper(3), Manifold::new(Family::PolyTaper { c: 0.5, a: 1.0 }, 3, 1e4).unwrap()] {
        let (rep, _) = polya_szego_check(&m).unwrap();
        assert!(rep.hard_pass(), "{}", rep.summary());
        let ratio = polya_szego_ratio(&|r: f64| -(-r).exp(), &m, 8.0, 2.0, &[]).unwrap();
        assert!(ratio <= m.sigma().powf(-1.0 / 3.0) * (1.0 + 1e-9), "{ratio}");
        assert!(ratio >= 1.0 - 1e-12);
    }
    assert_eq!(ladder(0.5, 4.0), vec![0.5, 1.0, 2.0, 4.0]);
}
