use covsel::basis::GridConvention;
use covsel::experiment::{ExampleKind, ExperimentConfig};
use covsel::sim::{mc_risk_curve_with, stream_rng, McOptions, Stream};
use covsel::{
    empirical_covariance, equispaced_points, equispaced_points_with, nested_collection,
    select_model, simulate, trace_phi, true_sigma, BasisFamily, Mat, ProcessSpec, SymMat,
};

#[test]
fn empirical_covariance_converges_at_the_expected_rate() {
    let sigma = SymMat::new(Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
    let spec = ProcessSpec::gaussian(sigma.clone(), equispaced_points(2).unwrap(), 3).unwrap();
    let n = 100_000;
    let s = empirical_covariance(&simulate(&spec, n).unwrap());
    // Gaussian: E‖xxᵀ − Σ‖² = tr(Σ)² + ‖Σ‖² = 16 + 10.
    let trace_phi = 26.0;
    assert!((s.as_mat() - sigma.as_mat()).norm() <= 5.0 * (trace_phi / n as f64).sqrt());
}

#[test]
fn trace_phi_of_a_scalar_gaussian() {
    let var = 1.7;
    let spec = ProcessSpec::gaussian(
        SymMat::new(Mat::from_element(1, 1, var)).unwrap(),
        covsel::DesignPoints::new(vec![0.5]).unwrap(),
        8,
    )
    .unwrap();
    let est = trace_phi(&spec, 400_000).unwrap();
    assert!(
        (est.mean - 2.0 * var * var).abs() <= 4.0 * est.std_err,
        "{est:?}"
    );
}

#[test]
fn full_model_risk_is_trace_phi_over_n() {
    let pts = equispaced_points_with(4, GridConvention::Left).unwrap();
    let basis = BasisFamily::fourier_scaled(4).unwrap();
    let spec = ProcessSpec::basis_gaussian(basis.clone(), pts.clone(), &[1.0, 0.5, 0.25, 0.125], 5)
        .unwrap();
    let coll = nested_collection(&basis, 4, &pts).unwrap();
    let n = 10;
    let curve = mc_risk_curve_with(
        &spec,
        &coll,
        n,
        McOptions {
            reps: 20_000,
            pool: 200_000,
        },
    )
    .unwrap();
    assert!(curve.bias_sq[3] < 1e-20);
    let tphi = trace_phi(&spec.with_seed(77), 200_000).unwrap();
    let gap = curve.risk[3] - tphi.mean / n as f64;
    let se = curve.std_err[3].hypot(tphi.std_err / n as f64);
    assert!(gap.abs() <= 3.0 * se, "gap {gap}, se {se}");
    assert!(curve.satisfies_decomposition(3.0));
}

#[test]
fn brownian_bridge_draws_reproduce_the_kernel() {
    let spec = ProcessSpec::brownian_bridge(equispaced_points(35).unwrap(), 11);
    let s = empirical_covariance(&simulate(&spec, 1_000_000).unwrap());
    let truth = true_sigma(&spec).unwrap();
    let worst = (s.as_mat() - truth.as_mat()).amax();
    assert!(worst <= 5e-3, "max abs error {worst}");
}

#[test]
fn cosine_example_selects_four_most_often() {
    let mut counts = [0usize; 21];
    for seed in 0..50 {
        let exp = ExperimentConfig {
            seed: Some(seed),
            ..ExperimentConfig::for_example(ExampleKind::Ex2)
        }
        .resolve()
        .unwrap();
        let sel = select_model(&exp.samples().unwrap(), &exp.collection().unwrap()).unwrap();
        counts[sel.selected_size()] += 1;
    }
    let mode = (1..=20)
        .max_by_key(|&m| (counts[m], std::cmp::Reverse(m)))
        .unwrap();
    assert_eq!(mode, 4, "{counts:?}");
}

#[test]
fn simulation_streams_are_reproducible_and_isolated() {
    let spec = ProcessSpec::brownian_bridge(equispaced_points(8).unwrap(), 2);
    let a = simulate(&spec, 20).unwrap();
    let b = simulate(&spec, 20).unwrap();
    assert_eq!(a.data(), b.data());
    let prepared = spec.prepare().unwrap();
    let mut rng = stream_rng(2, Stream::Check, 0);
    let c = prepared.sample(20, &mut rng);
    assert_ne!(a.data(), &c);
}
