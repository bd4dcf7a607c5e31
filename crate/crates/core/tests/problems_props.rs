use locbo::normal;
use locbo::problems::{
    ackley2d, empirical_b_xi, hetero_noise_1d, hetero_noise_ackley, problem, synthetic1d, NoiseModel, Objective,
    REGISTRY, SYNTHETIC1D_ARGMAX, SYNTHETIC1D_MAX,
};
use locbo::rng::stream;
use rand::Rng;

#[test]
fn known_max_survives_random_probe() {
    for name in REGISTRY {
        let p = problem(name).unwrap();
        let (x_star, f_star) = p.known_max().unwrap();
        assert!((p.value(&x_star).unwrap() - f_star).abs() < 1e-12);
        let mut rng = stream(41, &[]);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..1_000_000 {
            let x = p.search_box().sample(&mut rng);
            best = best.max(p.value(&x).unwrap());
        }
        assert!(best <= f_star + 1e-12, "{name}: probe found {best} > {f_star}");
    }
}

#[test]
fn synthetic_max_by_dense_grid() {
    let n = 2_000_001;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let x = -5.0 + 10.0 * i as f64 / (n - 1) as f64;
        let v = x * (2.0 * x).sin() + (std::f64::consts::PI * x).cos();
        if v > best.0 {
            best = (v, x);
        }
    }
    // the function is even, so the grid may land on either twin peak
    assert!((best.1.abs() - SYNTHETIC1D_ARGMAX).abs() < 1e-5);
    assert!((best.0 - SYNTHETIC1D_MAX).abs() < 1e-9);
    assert_eq!(synthetic1d(SYNTHETIC1D_ARGMAX).unwrap(), SYNTHETIC1D_MAX);
}

#[test]
fn ackley_reference_points() {
    let reference = |x: f64, y: f64| {
        let e = std::f64::consts::E;
        let tau = 2.0 * std::f64::consts::PI;
        -(-20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp() - (0.5 * ((tau * x).cos() + (tau * y).cos())).exp()
            + 20.0
            + e)
    };
    assert_eq!(ackley2d(&[0.0, 0.0]).unwrap(), 0.0);
    assert!((ackley2d(&[10.0, 10.0]).unwrap() + 17.293_294_335_267_746).abs() < 1e-12);
    let mut rng = stream(42, &[]);
    for _ in 0..1000 {
        let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        assert!((ackley2d(&[x, y]).unwrap() - reference(x, y)).abs() < 1e-12);
        assert_eq!(ackley2d(&[x, y]).unwrap(), ackley2d(&[-y, x]).unwrap());
    }
    assert!(ackley2d(&[10.5, 0.0]).is_err());
}

#[test]
fn noise_variance_formulas() {
    assert!((hetero_noise_ackley(&[0.0, 0.0]) - 0.5).abs() < 1e-15);
    assert!((hetero_noise_ackley(&[3.0, 4.0]) - 0.75).abs() < 1e-15);
    assert!((hetero_noise_1d(&[0.0]) - 0.1).abs() < 1e-15);
    assert!((hetero_noise_1d(&[5.0]) - 0.6).abs() < 1e-15);
    assert_eq!(hetero_noise_1d(&[-2.5]), hetero_noise_1d(&[2.5]));
}

#[test]
fn observation_moments() {
    let n = 100_000;
    for name in ["ackley2d-hetero", "synthetic1d-hetero"] {
        let p = problem(name).unwrap();
        let mut rng = stream(43, &[]);
        for _ in 0..3 {
            let x = p.search_box().sample(&mut rng);
            let f = p.value(&x).unwrap();
            let var = if name.starts_with("ackley") { hetero_noise_ackley(&x) } else { hetero_noise_1d(&x) };
            let ys: Vec<f64> = (0..n).map(|_| p.observe(&x, &mut rng).unwrap()).collect();
            let m = ys.iter().sum::<f64>() / n as f64;
            let v = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((m - f).abs() < 4.0 * var.sqrt() / (n as f64).sqrt());
            assert!((v / var - 1.0).abs() < 0.05);
        }
    }
    let p = problem("ackley2d").unwrap();
    let mut rng = stream(44, &[]);
    assert_eq!(p.observe(&[1.0, 2.0], &mut rng).unwrap(), p.value(&[1.0, 2.0]).unwrap());
}

#[test]
fn gaussian_noise_is_sign_symmetric() {
    let n = 100_000;
    let three_sigma = 3.0 * (0.25 / n as f64).sqrt();
    let models = [
        (NoiseModel::Homoscedastic(0.3), vec![0.0]),
        (NoiseModel::Heteroscedastic(hetero_noise_ackley), vec![3.0, -7.0]),
        (NoiseModel::Heteroscedastic(hetero_noise_1d), vec![-4.0]),
    ];
    for (i, (noise, x)) in models.iter().enumerate() {
        let mut rng = stream(45, &[i as u64]);
        let b = empirical_b_xi(noise, x, n, &mut rng);
        assert!((b - 0.5).abs() <= three_sigma, "{noise:?}: {b}");
        assert_eq!(noise.b_xi(), 0.5);
    }
    assert_eq!(NoiseModel::None.b_xi(), 1.0);
    assert!(normal::cdf(0.0) == 0.5);
}

#[test]
fn registry_names_resolve() {
    for name in REGISTRY {
        assert_eq!(problem(name).unwrap().name(), *name);
    }
    let err = problem("rosenbrock").unwrap_err().to_string();
    assert!(err.contains("ackley2d-hetero"));
}
