use extremal_sv::model::{CoefficientSequence, EpsFamily, EtaFamily, SvModel};
use extremal_sv::simulate::{
    hill_tail_index, joint_exceedance_ratio, simulate_paths, simulate_tail, tail_balance, Series,
    SimulationConfig, TailData,
};

fn model(values: Vec<f64>, eps: EpsFamily) -> SvModel {
    SvModel::new(CoefficientSequence::new(values).unwrap(), EtaFamily::Laplace, eps)
}

#[test]
fn streaming_summaries_match_full_batches() {
    let c = SimulationConfig::new(model(vec![1.0, 0.5], EpsFamily::StandardNormal), 20_000, 4, 11).unwrap();
    let batch = simulate_paths(&c).unwrap();
    let exact = TailData::from_batch(&batch, Series::Sigma);
    let lean = simulate_tail(&c, Series::Sigma, 0.05).unwrap();
    assert_eq!(exact.total_len(), lean.total_len());
    let a = joint_exceedance_ratio(&exact, 1, 2.0, 1.0, 0.999).unwrap();
    let b = joint_exceedance_ratio(&lean, 1, 2.0, 1.0, 0.999).unwrap();
    assert_eq!(a, b);
}

#[test]
fn batches_do_not_depend_on_worker_count() {
    let c = SimulationConfig::new(model(vec![1.0, 0.7, 0.2], EpsFamily::student_t(3.0).unwrap()), 3000, 6, 5).unwrap();
    let one = simulate_paths(&c.clone().with_workers(1)).unwrap();
    let four = simulate_paths(&c.with_workers(4)).unwrap();
    assert_eq!(one, four);
    assert!(one.paths.iter().all(|p| p.sigma.iter().all(|s| *s > 0.0)));
}

#[test]
fn absolute_returns_have_unit_tail_index() {
    let c = SimulationConfig::new(model(vec![1.0], EpsFamily::StandardNormal), 1_000_000, 1, 21).unwrap();
    let d = simulate_tail(&c, Series::AbsX, 0.05).unwrap();
    let e = hill_tail_index(&d, Some(2000)).unwrap();
    assert!((e.value - 1.0).abs() < 0.05, "{e:?}");
}

#[test]
fn symmetric_innovations_balance_the_tails() {
    let c = SimulationConfig::new(model(vec![1.0, 0.5], EpsFamily::StandardNormal), 1_000_000, 1, 22).unwrap();
    let x = simulate_tail(&c, Series::X, 0.05).unwrap();
    let abs = simulate_tail(&c, Series::AbsX, 0.05).unwrap();
    let r = tail_balance(&x, &abs, 0.999).unwrap();
    assert!((r - 0.5).abs() < 0.03, "{r}");
}

#[test]
fn independent_volatility_ratio_is_product_measure() {
    // i.i.d. σ with a pure Pareto tail: P(σ_0 > 2x, σ_1 > 2x) / P(min > x) → 1/4
    let c = SimulationConfig::new(model(vec![1.0], EpsFamily::PositiveConstant), 1_000_000, 2, 23).unwrap();
    let d = simulate_tail(&c, Series::Sigma, 0.05).unwrap();
    let r = joint_exceedance_ratio(&d, 1, 2.0, 2.0, 0.999).unwrap();
    assert!((r.ratio - 0.25).abs() < 0.08, "{r:?}");
    assert!(!r.low_power);
}
