use mprelay::constraints::{achievable_linear, build_achievable, eval_feasible, outer_linear};
use mprelay::gkernels::*;
use mprelay::model::*;
use mprelay::region::*;
use mprelay::validate::*;
use proptest::prelude::*;

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        let drift: f64 = out.iter().sum::<f64>() - 1.0;
        out[0] -= drift;
        out
    })
}

fn row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, k)
}

fn channel() -> impl Strategy<Value = (ChannelGains, PowerAllocation)> {
    (prop::collection::vec(0.05f64..2.0, 12), prop::collection::vec(-5.0f64..25.0, 4)).prop_map(|(g, db)| {
        let mut gain = vec![vec![0.0; 4]; 4];
        let mut it = g.into_iter();
        for (i, r) in gain.iter_mut().enumerate() {
            for (j, x) in r.iter_mut().enumerate() {
                if i != j {
                    *x = it.next().unwrap();
                }
            }
        }
        (ChannelGains::new(2, gain).unwrap(), PowerAllocation::from_db(2, &db).unwrap())
    })
}

fn nonneg(x: f64) -> bool {
    x >= 0.0 || is_sentinel(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernels_nonnegative(
        p_a in 0.0f64..50.0, p_b in 0.0f64..50.0, h1 in 0.0f64..3.0, h2 in 0.0f64..3.0,
        li in row(3), lj in row(3), lk in row(3), lb in row(2), ba in simplex(3), bb in simplex(2),
    ) {
        prop_assert!(nonneg(c_b(p_a, h1, &li, &ba)));
        prop_assert!(nonneg(c_be(&li, &lj, &ba)));
        prop_assert!(nonneg(c_be2(&li, &lj, &lk, &ba)));
        prop_assert!(nonneg(c_c(p_a, h1, &li, &lj, &ba)));
        prop_assert!(nonneg(c_m(p_a, p_b, h1, h2, &lb, &bb)));
        prop_assert!(nonneg(c_bi(p_a, p_b, h1, h2, &li, &ba)));
        prop_assert!(nonneg(c_bm(p_a, p_b, h1, h2, &li, &lb, &ba, &bb)));
        prop_assert!(nonneg(c_ci(p_a, p_b, h1, h2, &li, &lj, &lb, &ba, &bb)));
    }

    #[test]
    fn kernels_nondecreasing_in_own_power(
        p in 0.0f64..30.0, dp in 0.0f64..30.0, p_b in 0.0f64..30.0, h1 in 0.05f64..3.0, h2 in 0.05f64..3.0,
        la in row(3), ba in simplex(3), lb in row(2), bb in simplex(2),
    ) {
        let slack = 1e-12;
        prop_assert!(c_b(p + dp, h1, &la, &ba) >= c_b(p, h1, &la, &ba) - slack);
        prop_assert!(c_bi(p + dp, p_b, h1, h2, &la, &ba) >= c_bi(p, p_b, h1, h2, &la, &ba) - slack);
        prop_assert!(c_m(p + dp, p_b, h1, h2, &lb, &bb) >= c_m(p, p_b, h1, h2, &lb, &bb) - slack);
    }

    #[test]
    fn pstar_in_unit_interval(h1 in 0.0f64..5.0, h2 in 0.0f64..5.0, p in 0.0f64..1e6) {
        let v = pstar(h1, h2, p);
        prop_assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn mutual_information_symmetric_and_nonnegative(
        coef in prop::collection::vec(-2.0f64..2.0, 9), var in prop::collection::vec(0.05f64..5.0, 3),
    ) {
        let mut g = GaussBuilder::new();
        let s: Vec<Lin> = var.iter().map(|v| g.source(*v)).collect();
        let z: Vec<Lin> = (0..3).map(|_| g.source(1.0)).collect();
        for (k, name) in ["A", "B", "C"].iter().enumerate() {
            let x = Lin::combo(&[(coef[3 * k], &s[0]), (coef[3 * k + 1], &s[1]), (coef[3 * k + 2], &s[2]), (1.0, &z[k])]);
            g.label(name, &x);
        }
        let sys = g.build().unwrap();
        let ab = mi_logdet(&sys, &["A"], &["B", "C"]).unwrap();
        let ba = mi_logdet(&sys, &["B", "C"], &["A"]).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab));
        prop_assert!(cond_mi_logdet(&sys, &["A"], &["B"], &["C"]).unwrap() >= 0.0);
    }

    #[test]
    fn data_processing(p in 0.05f64..30.0, h in 0.05f64..3.0, p_yhat in 0.1f64..10.0, rho in -0.99f64..0.99) {
        // U → Y → Ŷ, where Ŷ is a noisy scaled copy of Y.
        let p_y = h * h * p + 1.0;
        let sigma = rho * (p_yhat * p_y).sqrt();
        let mut g = GaussBuilder::new();
        let x = g.source(p);
        let z = g.source(1.0);
        let q = g.source(p_yhat - sigma * sigma / p_y);
        let y = Lin::combo(&[(h, &x), (1.0, &z)]);
        g.label("U", &x);
        g.label("Yhat", &Lin::combo(&[(sigma / p_y, &y), (1.0, &q)]));
        g.label("Y", &y);
        let sys = g.build().unwrap();
        let direct = mi_logdet(&sys, &["U"], &["Y"]).unwrap();
        let processed = mi_logdet(&sys, &["U"], &["Yhat"]).unwrap();
        prop_assert!(processed <= direct + 1e-12);
    }

    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..40)) {
        let pts: Vec<Point> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        let hull = comprehensive_hull(&pts);
        for p in &pts {
            prop_assert!(inside_hull(&hull, *p, 1e-9));
            prop_assert!(inside_hull(&hull, [p[0] * 0.5, p[1] * 0.3], 1e-9));
        }
        let far = pts.iter().map(|p| p[0] + p[1]).fold(0.0, f64::max) + 1.0;
        prop_assert!(!inside_hull(&hull, [far, far], 1e-9));
    }

    #[test]
    fn linear_in_schedule((ch, pw) in channel(), d1 in simplex(4), d2 in simplex(4), t in 0.0f64..1.0) {
        let set = outer_linear(OuterFamily::Ftdbc, &ch, &pw).unwrap();
        prop_assume!(set.n_phases == 4);
        let mix: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let eval = |d: &[f64]| -> Vec<f64> {
            set.rows.iter().map(|r| r.per_phase.iter().zip(d).map(|(a, b)| a * b).sum()).collect()
        };
        let (e1, e2, em) = (eval(&d1), eval(&d2), eval(&mix));
        for i in 0..em.len() {
            prop_assert!((em[i] - (t * e1[i] + (1.0 - t) * e2[i])).abs() <= 1e-12 * (1.0 + em[i].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_optimum_is_feasible_and_matches_vertices(
        (ch, pw) in channel(), w in prop::collection::vec(0.0f64..1.0, 4), pi in 0usize..11, d in simplex(6),
    ) {
        let protocol = Protocol::ALL[pi];
        let n = phase_count(protocol, 2);
        let delta: Vec<f64> = { let s: f64 = d[..n].iter().sum(); d[..n].iter().map(|x| x / s).collect() };
        let Ok(schedule) = PhaseSchedule::new(delta) else { return Ok(()) };
        let params = ProtocolParams::default_for(protocol, 2).with_schedule(schedule).unwrap();
        let cs = build_achievable(&params, &ch, &pw).unwrap();
        let min = [0.0; 4];
        match lp_max(&cs, &w, &min) {
            Ok(sol) => {
                prop_assert!(eval_feasible(&cs, &sol.rates, 1e-9).unwrap());
                let brute = vertex_enum_max(&cs, &w, &min).unwrap();
                prop_assert!((sol.value - brute).abs() <= 1e-9 * (1.0 + brute.abs()));
            }
            Err(_) => prop_assert!(!cs.feasible),
        }
    }

    #[test]
    fn joint_optimum_is_feasible((ch, pw) in channel(), w in prop::collection::vec(0.01f64..1.0, 4), pi in 0usize..11) {
        let protocol = Protocol::ALL[pi];
        let params = ProtocolParams::default_for(protocol, 2);
        let set = achievable_linear(&params, &ch, &pw).unwrap();
        if let Ok(sol) = lp_max_joint(&set, &w, &[0.0; 4]) {
            let cs = set.at(&sol.schedule).unwrap();
            prop_assert!(eval_feasible(&cs, &sol.rates, 1e-7).unwrap());
        }
    }
}

#[test]
fn optimizer_is_deterministic() {
    let ch = ChannelGains::uniform(2, 1.0).unwrap();
    let pw = PowerAllocation::from_db(2, &[10.0; 4]).unwrap();
    let opts = SearchOptions { starts: 3, iters: 80, ..Default::default() };
    for protocol in [Protocol::Pmabc, Protocol::FtdbcNr] {
        let a = optimize_point(protocol, &ch, &pw, &[1.0; 4], &[0.01; 4], &opts).unwrap();
        let b = optimize_point(protocol, &ch, &pw, &[1.0; 4], &[0.01; 4], &opts).unwrap();
        assert_eq!(a, b);
    }
}
