use evglab::config::{Config, ManifoldConfig};
use evglab::green::RieszConstants;
use evglab::green::log_grid;
use evglab::mt::regularized_exp;
use evglab::plot::{plot_table, Selector};
use evglab::radial::{Extrap, RadialFunction};
use evglab::rearrange::{lp_norm_p, rearrange, rearranged_lp_p};
use evglab::report::{fmt_num, parse_num};
use evglab::tilde::{tilde_direct, PowerLog};
use evglab::{ExperimentReport, Family, Manifold, Table};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.3f64..1.0).prop_map(|c| Family::ExpTaper { c }),
        (0.3f64..1.0, 0.3f64..2.0).prop_map(|(c, a)| Family::PolyTaper { c, a }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn volume_between_cone_and_flat(fam in family(), n in 2usize..=6, lr in -3.0f64..3.0) {
        let m = Manifold::new(fam, n, 1e3).unwrap();
        let r = 10f64.powf(lr);
        let flat = m.ball() * r.powi(n as i32);
        let v = m.volume(r);
        prop_assert!(v <= flat * (1.0 + 1e-10));
        prop_assert!(v >= m.sigma() * flat * (1.0 - 1e-10));
        // radial Laplacian comparison
        prop_assert!(r * m.df(r) <= m.f(r) * (1.0 + 1e-12));
    }

    #[test]
    fn volume_ratio_nonincreasing(fam in family(), n in 2usize..=5, lr in -3.0f64..2.5, step in 1.01f64..4.0) {
        let m = Manifold::new(fam, n, 1e3).unwrap();
        let (r1, r2) = (10f64.powf(lr), 10f64.powf(lr) * step);
        let q = |r: f64| m.volume(r) / (m.ball() * r.powi(n as i32));
        prop_assert!(q(r2) <= q(r1) * (1.0 + 1e-10));
        prop_assert!(m.tau_remainder(r1) <= m.lambda(r1) * (1.0 + 1e-10) + 1e-15);
    }

    #[test]
    fn tilde_monotone_in_r_and_phi(n in 2usize..=5, a in 0.2f64..1.5, k1 in 0.05f64..1.0, scale in 1.0f64..5.0, lr in 0.0f64..8.0, step in 1.5f64..100.0) {
        let r = 10f64.powf(lr);
        let small = PowerLog::new(k1, a, 0.0);
        let big = PowerLog::new(k1 * scale, a, 0.0);
        let v = tilde_direct(&small, n, r).unwrap().value;
        prop_assert!(tilde_direct(&small, n, r * step).unwrap().value <= v * (1.0 + 1e-7));
        prop_assert!(tilde_direct(&big, n, r).unwrap().value >= v * (1.0 - 1e-7));
    }

    #[test]
    fn riesz_identities(n in 3usize..=12, pick in 0usize..100) {
        let alpha = 1 + pick % (n - 1);
        let k = RieszConstants::new(n, alpha).unwrap();
        for (name, res) in k.identity_residuals() {
            prop_assert!(res <= 1e-12, "{name}: {res}");
        }
        prop_assert!(k.gamma > 0.0 && k.c_alpha > 0.0 && k.c_tilde_alpha > 0.0);
    }

    #[test]
    fn regularized_exp_monotone(m in 0usize..5, t in 0.0f64..30.0, dt in 0.0f64..5.0) {
        prop_assert!(regularized_exp(m, t + dt) >= regularized_exp(m, t));
        prop_assert!(regularized_exp(m + 1, t) <= regularized_exp(m, t));
        prop_assert!(regularized_exp(m, t) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rearrangement_equimeasurable(wiggle in 0.0f64..1.0, freq in 1.0f64..8.0, decay in 0.1f64..2.0, p in 1.0f64..4.0) {
        let m = Manifold::new(Family::ExpTaper { c: 0.8 }, 3, 1e3).unwrap();
        let grid = log_grid(1e-3, 20.0, 40, &[]);
        let u: Vec<f64> = grid.iter().map(|&r| (1.0 + wiggle * (freq * r.ln()).sin()) * (-decay * r).exp()).collect();
        let f = RadialFunction::from_samples(grid.clone(), u.clone(), Extrap::Constant, Extrap::Zero).unwrap();
        let rp = rearrange(&f, &m);
        prop_assert!(rp.f_star.windows(2).all(|w| w[1] <= w[0]));
        let a = lp_norm_p(&f, &m, p, &[]).unwrap();
        let b = rearranged_lp_p(&rp, &f, &m, p).unwrap();
        prop_assert!(((a - b) / a).abs() <= 1e-6, "{a} vs {b}");
        // order preserving
        let half: Vec<f64> = u.iter().map(|v| 0.5 * v).collect();
        let h = RadialFunction::from_samples(grid, half, Extrap::Constant, Extrap::Zero).unwrap();
        let hp = rearrange(&h, &m);
        for t in [0.1, 1.0, 10.0, 100.0] {
            prop_assert!(hp.eval(t) <= rp.eval(t) + 1e-15);
        }
    }

    #[test]
    fn config_round_trips(n in 2usize..8, c in 0.1f64..1.0, res in 0.25f64..4.0, jobs in 0usize..16) {
        let mut cfg = Config::default();
        cfg.run.resolution = res;
        cfg.run.jobs = jobs;
        cfg.manifolds.push(ManifoldConfig { id: "t".into(), family: "exp_taper".into(), c: Some(c), ..ManifoldConfig::euclidean(n) });
        let back = Config::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn report_json_round_trips(obs in prop::collection::vec(prop_oneof![any::<f64>(), Just(f64::INFINITY), Just(f64::NAN)], 1..6)) {
        let mut rep = ExperimentReport::new("e", "m");
        for (i, &x) in obs.iter().enumerate() {
            rep.hard("x.y", format!("c{i}"), x, "criterion", i % 2 == 0);
        }
        let back = ExperimentReport::from_json(&rep.to_json()).unwrap();
        for (a, b) in rep.records.iter().zip(&back.records) {
            prop_assert!(a.observed.to_bits() == b.observed.to_bits() || (a.observed.is_nan() && b.observed.is_nan()));
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.pass, b.pass);
        }
        for &x in &obs {
            let y = parse_num(&fmt_num(x));
            prop_assert!(y == x || (x.is_nan() && y.is_nan()));
        }
    }

    #[test]
    fn plot_is_deterministic(ys in prop::collection::vec(1e-3f64..1e3, 2..20)) {
        let mut t = Table::new(&["x", "y"]);
        for (i, y) in ys.iter().enumerate() {
            t.push_nums(&[(i + 1) as f64, *y]);
        }
        let sel = Selector::parse("x:y").unwrap();
        let a = plot_table(&t, &sel, "p").unwrap();
        prop_assert_eq!(&a, &plot_table(&t, &sel, "p").unwrap());
        prop_assert_eq!(a.matches("<circle").count(), ys.len());
        // CSV survives a round trip
        let back = Table::from_csv(&t.to_csv()).unwrap();
        prop_assert_eq!(back.column("y").unwrap(), ys);
    }
}
