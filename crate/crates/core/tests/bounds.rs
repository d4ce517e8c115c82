use approx::assert_abs_diff_eq;
use metabayes::bounds::{
    bound_terms, contraction_radius, log_time_grid, meta_window, prior_tail, BoundConfig, CurveInputs, TailModel,
};
use metabayes::experiments::{figure_curve, figure_setup, FigureId, FigureOverrides};
use metabayes::inference::{ParamGrid, Prior};
use metabayes::measure::MeasureConfig;
use metabayes::Error;

#[test]
fn contraction_radius_scaling() {
    let cfg = BoundConfig::default();
    let r = contraction_radius(2.0, 100.0, &cfg).unwrap();
    assert_abs_diff_eq!(r, 1.0 / (2f64.sqrt() * 10f64.sqrt()), epsilon = 1e-12);
    assert_abs_diff_eq!(contraction_radius(2.0, 1600.0, &cfg).unwrap(), r / 2.0, epsilon = 1e-12);
    let bad = BoundConfig { delta: 0.0, ..cfg };
    assert!(matches!(contraction_radius(2.0, 100.0, &bad), Err(Error::InvalidArgument(_))));
}

#[test]
fn prior_tails() {
    let cfg = BoundConfig::default();
    let t = 1.959964f64.powi(4);
    let tail = TailModel::StandardGaussian { dim: 1 }.evaluate(1.0, t, &cfg).unwrap();
    assert_abs_diff_eq!(tail, 0.05, epsilon = 1e-6);
    assert!(TailModel::StandardGaussian { dim: 1 }.evaluate(1.0, 1e12, &cfg).unwrap() < 1e-100);

    let prior = Prior::uniform(ParamGrid::uniform_1d(-1.0, 1.0, 101).unwrap());
    let late = 1e4;
    assert!(prior_tail(1.0, 0.01, &cfg, &prior, &[0.0], 1, 0).unwrap() > 0.0);
    assert_eq!(prior_tail(1.0, late, &cfg, &prior, &[0.0], 1, 0).unwrap(), 0.0);
}

#[test]
fn bound_terms_examples() {
    assert_abs_diff_eq!(bound_terms(1.0, 1.0, 1.0, 2.5, 0.0).unwrap(), 10.0, epsilon = 1e-12);
    let h_hat = bound_terms(2.029, 0.827, 1e4, 1.0, 0.0).unwrap();
    assert_abs_diff_eq!(h_hat, 0.046127, epsilon = 1e-5);
    let huge = bound_terms(1e30, 1e30, 1e4, 1.0, 0.0).unwrap();
    assert!(huge < 1e-10);
    // the 1/(γt) term alone keeps H above one below 7.2e20
    let g = 1.389e-21;
    assert!(bound_terms(g, 2.0, 7.0e20, 1.0, 0.0).unwrap() > 1.0);
    let times = log_time_grid(1.0, 1e25, 10).unwrap();
    let hs: Vec<f64> = times.iter().map(|&t| bound_terms(g, 2.0, t, 1.0, 0.0).unwrap()).collect();
    assert!(hs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn fig2_window_spans_many_decades() {
    let ov = FigureOverrides { points_per_decade: Some(20), ..Default::default() };
    let setup = figure_setup(FigureId::Fig2a, &ov, &MeasureConfig::default()).unwrap();
    let curve = figure_curve(&setup).unwrap();
    let (a, b) = curve.window().unwrap();
    assert!(a <= 1e3 && b >= 1e19, "window [{a:e}, {b:e}]");
    let k = curve.times.iter().position(|&t| (t - 1e4).abs() < 1e-6).unwrap();
    assert!(curve.meta_bound[k] < 0.25);
}

#[test]
fn window_without_escape_runs_to_the_end() {
    let inputs = CurveInputs {
        times: log_time_grid(1.0, 1e12, 10).unwrap(),
        gamma: 1e-10,
        s1: 2.0,
        gamma_hat: 2.0,
        s1_hat: 0.8,
        lambda_exit: 0.0,
        tail: TailModel::Zero,
    };
    let curve = meta_window(&inputs, &BoundConfig::default()).unwrap();
    let (_, end) = curve.window().unwrap();
    assert_eq!(end, *inputs.times.last().unwrap());
}

#[test]
fn fig3_window_closes_after_escape() {
    let ov = FigureOverrides { points_per_decade: Some(50), ..Default::default() };
    let setup = figure_setup(FigureId::Fig3b, &ov, &MeasureConfig::default()).unwrap();
    let curve = figure_curve(&setup).unwrap();
    let (a, b) = curve.window().unwrap();
    assert!(a > 1.0 && (1e5..1e7).contains(&b), "window [{a:e}, {b:e}]");
}
