use locbo::conformal::{locp_update, ThresholdFunction};
use locbo::optimizer::{
    run, select_candidate, simple_regret, utility_guarantee_diagnostic, BoConfig, Method, Trace,
};
use locbo::problems::{problem, Objective, SearchBox};
use locbo::rng::stream;

fn small(method: Method, horizon: usize, seed: u64) -> BoConfig {
    let mut c = BoConfig::synthetic(method).with_seed(seed);
    c.horizon = horizon;
    c.n_candidates = 64;
    c.n_mc = 64;
    c
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn check_incumbent_rule(trace: &Trace) {
    let mut best = f64::NEG_INFINITY;
    let mut best_x = Vec::new();
    for r in &trace.init {
        if r.y > best {
            best = r.y;
            best_x = r.x.clone();
        }
    }
    for r in &trace.rounds {
        if r.y > best {
            best = r.y;
            best_x = r.x.clone();
        }
        assert_eq!(r.incumbent, best);
    }
    assert_eq!(trace.x_hat, best_x);
}

#[test]
fn random_search_incumbent_is_running_max() {
    let p = problem("ackley2d-hetero").unwrap();
    let trace = run(&p, &small(Method::Rs, 10, 3)).unwrap();
    assert_eq!(trace.init.len() + trace.rounds.len(), 15);
    for r in trace.init.iter().map(|r| &r.x).chain(trace.rounds.iter().map(|r| &r.x)) {
        assert!(p.search_box().contains(r));
    }
    check_incumbent_rule(&trace);
    assert!(trace.conformal.is_none());
}

#[test]
fn incumbent_rule_holds_for_every_method() {
    let p = problem("synthetic1d-hetero").unwrap();
    for m in Method::ALL {
        let trace = run(&p, &small(m, 6, 4)).unwrap();
        assert!(trace.aborted.is_none());
        check_incumbent_rule(&trace);
        assert_eq!(trace.conformal.is_none(), matches!(m, Method::Bo | Method::Rs));
    }
}

#[test]
fn runs_are_deterministic() {
    let p = problem("ackley2d-hetero").unwrap();
    for m in [Method::Locbo, Method::OcboL] {
        let a = run(&p, &small(m, 5, 9)).unwrap();
        let b = run(&p, &small(m, 5, 9)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = run(&p, &small(m, 5, 10)).unwrap();
        assert_ne!(a.rounds[0].x, c.rounds[0].x);
    }
}

#[test]
fn select_candidate_covers_the_box() {
    let bx = SearchBox::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap();
    let x0 = [3.0, -7.5];
    let mut rng = stream(51, &[]);
    let (x, v) = select_candidate(
        |x: &[f64]| Ok(-((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)).sqrt()),
        &bx,
        10_000,
        &mut rng,
    )
    .unwrap();
    assert!(-v <= 0.05 * bx.diagonal());
    assert!(((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)).sqrt() <= 0.05 * bx.diagonal());
}

#[test]
fn constant_acquisition_returns_first_draw() {
    let bx = SearchBox::cube(3, 0.0, 1.0).unwrap();
    let mut a = stream(52, &[]);
    let mut b = stream(52, &[]);
    let first = bx.sample(&mut a);
    let (x, _) = select_candidate(|_: &[f64]| Ok(1.0), &bx, 50, &mut b).unwrap();
    assert_eq!(x, first);
    let mut c = stream(53, &[]);
    let mut d = stream(53, &[]);
    let only = bx.sample(&mut c);
    let (x, _) = select_candidate(|_: &[f64]| Ok(-1e9), &bx, 1, &mut d).unwrap();
    assert_eq!(x, only);
}

#[test]
fn regret_at_far_corner() {
    let p = problem("ackley2d").unwrap();
    let mut trace = run(&p, &small(Method::Rs, 3, 1)).unwrap();
    for r in &mut trace.init {
        r.x = vec![10.0, 10.0];
        r.y = p.value(&r.x).unwrap();
    }
    for r in &mut trace.rounds {
        r.x = vec![10.0, 10.0];
        r.y = p.value(&r.x).unwrap();
    }
    for r in simple_regret(&p, &trace).unwrap() {
        assert!((r - 17.293_294_335_267_746).abs() < 1e-12);
    }
    trace.rounds[1].x = vec![0.0, 0.0];
    trace.rounds[1].y = 0.0;
    assert_eq!(simple_regret(&p, &trace).unwrap()[2], 0.0);
}

#[test]
fn noiseless_regret_is_non_increasing() {
    let p = problem("synthetic1d").unwrap();
    for m in Method::ALL {
        let trace = run(&p, &small(m, 12, 7)).unwrap();
        let r = simple_regret(&p, &trace).unwrap();
        assert!(r.iter().all(|v| *v >= 0.0));
        assert!(r.windows(2).all(|w| w[1] <= w[0]), "{m}: {r:?}");
        let recorded: Vec<f64> = trace.rounds.iter().map(|r| r.regret.unwrap()).collect();
        assert_eq!(recorded, r);
    }
}

#[test]
fn unknown_optimum_is_an_error() {
    struct NoMax(SearchBox);
    impl Objective for NoMax {
        fn name(&self) -> &str {
            "no-max"
        }
        fn search_box(&self) -> &SearchBox {
            &self.0
        }
        fn value(&self, x: &[f64]) -> locbo::Result<f64> {
            Ok(-x[0] * x[0])
        }
        fn observe(&self, x: &[f64], _: &mut locbo::rng::StreamRng) -> locbo::Result<f64> {
            self.value(x)
        }
        fn known_max(&self) -> Option<(Vec<f64>, f64)> {
            None
        }
        fn b_xi(&self) -> Option<f64> {
            None
        }
    }
    let p = NoMax(SearchBox::cube(1, -1.0, 1.0).unwrap());
    let trace = run(&p, &small(Method::Rs, 3, 0)).unwrap();
    assert!(trace.rounds.iter().all(|r| r.regret.is_none()));
    assert!(matches!(simple_regret(&p, &trace), Err(locbo::Error::UnknownOptimum(_))));
}

#[test]
fn locbo_beats_random_search_on_noiseless_synthetic() {
    let p = problem("synthetic1d").unwrap();
    let final_regret = |m: Method| {
        median(
            (0..5)
                .map(|s| {
                    let trace = run(&p, &BoConfig::synthetic(m).with_seed(s)).unwrap();
                    *simple_regret(&p, &trace).unwrap().last().unwrap()
                })
                .collect(),
        )
    };
    let (locbo, rs) = (final_regret(Method::Locbo), final_regret(Method::Rs));
    assert!(locbo < rs, "LOCBO {locbo} vs RS {rs}");
}

#[test]
fn threshold_update_uses_only_past_rounds() {
    let p = problem("ackley2d-hetero").unwrap();
    let cfg = small(Method::Locbo, 15, 12);
    let trace = run(&p, &cfg).unwrap();
    let mut tf = ThresholdFunction::new(cfg.alpha, cfg.loc_kernel().unwrap(), cfg.reg, cfg.schedule().unwrap()).unwrap();
    for r in &trace.rounds {
        let lam = tf.eval(&r.x);
        assert!((lam - r.lambda.unwrap()).abs() < 1e-12, "round {}", r.t);
        let (lo, hi) = (r.lower.unwrap(), r.upper.unwrap());
        assert_eq!(r.covered.unwrap(), lam <= 0.0 || (lo..=hi).contains(&r.y));
        assert_eq!(r.f_covered.unwrap(), lam <= 0.0 || (lo..=hi).contains(&r.f));
        tf = locp_update(&tf, &r.x, r.covered.unwrap(), r.t, cfg.alpha).unwrap();
    }
}

#[test]
fn utility_diagnostic_ranges() {
    let p = problem("synthetic1d").unwrap();
    let trace = run(&p, &small(Method::Locbo, 10, 2)).unwrap();
    for eps in [0.1, 0.5, 1.0] {
        let d = utility_guarantee_diagnostic(&trace, eps, 0.5).unwrap();
        assert!((0.0..=1.0).contains(&d.fraction));
        assert!(d.floor <= 1.0);
        assert_eq!(d.rounds, 10);
    }
    assert!(utility_guarantee_diagnostic(&trace, 0.0, 0.5).is_err());
    let bo = run(&p, &small(Method::Bo, 3, 2)).unwrap();
    assert!(utility_guarantee_diagnostic(&bo, 0.5, 0.5).is_err());
}
