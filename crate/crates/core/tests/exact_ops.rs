mod common;

use common::{bisect_mu0, cw, reference, two_species};
use meanfield_core::exact::{
    exact_moments, exact_sample, finite_pressure, log_partition, magnetization_law, materialize_configuration,
    normalized_sum_law, MagLattice, SampleSet,
};
use meanfield_core::forward::pressure_limit;
use meanfield_core::{magnetization, Error, MagnetizationVector};

#[test]
fn independent_spins_log_partition() {
    let free = two_species([0.25, 0.75], [[1e-300, 0.0], [0.0, 1e-300]], [0.4, -1.3]);
    let lz = log_partition(&free, &[10, 30]).unwrap();
    let closed = 10.0 * 0.4f64.cosh().ln() + 30.0 * 1.3f64.cosh().ln();
    assert!((lz - closed).abs() < 1e-11);
    assert!(finite_pressure(&cw(1e-300, 0.0), &[37]).unwrap().abs() < 1e-14);
}

#[test]
fn field_reversal_leaves_partition_unchanged() {
    let a = log_partition(&reference(), &[30, 30]).unwrap();
    let b = log_partition(&reference().with_field(&[-0.2, 0.1]).unwrap(), &[30, 30]).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn finite_pressure_approaches_limit_monotonically() {
    let model = cw(0.5, 0.1);
    let limit = pressure_limit(&model).unwrap().limit_value;
    let gaps: Vec<f64> = [100, 200, 400, 800, 1600, 3200]
        .iter()
        .map(|&n| (finite_pressure(&model, &[n]).unwrap() - limit).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn lattice_cap_and_size_checks() {
    assert!(matches!(log_partition(&reference(), &[20_000, 20_000]), Err(Error::LatticeTooLarge { .. })));
    assert!(matches!(log_partition(&reference(), &[3, 4]), Err(Error::IncompatibleSizes { .. })));
}

#[test]
fn symmetric_law_is_exactly_mirror_symmetric() {
    let law = magnetization_law(&reference().with_field(&[0.0, 0.0]).unwrap(), &[20, 20]).unwrap();
    for i in 0..law.log_weights.len() {
        assert_eq!(law.log_weights[i], law.log_weights[law.lattice.mirror(i)]);
    }
    assert!(law.log_total().abs() < 1e-10);
    let m = exact_moments(&cw(0.8, 0.0), &[400]).unwrap();
    assert_eq!(m.mean, vec![0.0]);
}

#[test]
fn moment_invariants() {
    let m = exact_moments(&reference(), &[60, 60]).unwrap();
    let cov = m.covariance();
    assert_eq!(m.second[0][1], m.second[1][0]);
    for l in 0..2 {
        assert!(cov[l][l] >= 0.0);
        assert!(m.mean[l].abs() <= 1.0);
    }
}

#[test]
fn subcritical_variance_approaches_susceptibility() {
    let m = exact_moments(&cw(0.5, 0.0), &[2000]).unwrap();
    let scaled = 2000.0 * m.covariance()[0][0];
    assert!((scaled - 2.0).abs() / 2.0 < 0.05, "{scaled}");
}

#[test]
fn sampler_basics() {
    let empty = exact_sample(&cw(1.0, 0.0), &[50], 0, 3).unwrap();
    assert!(empty.is_empty());
    let text = empty.to_csv();
    assert!(text.starts_with("# meanfield-lab samples v1\n"));
    assert_eq!(SampleSet::from_csv(&text).unwrap(), empty);

    let a = exact_sample(&reference(), &[40, 40], 3000, 11).unwrap();
    let b = exact_sample(&reference(), &[40, 40], 3000, 11).unwrap();
    let c = exact_sample(&reference(), &[40, 40], 3000, 12).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.rows(), c.rows());
    assert_eq!(SampleSet::from_csv(&a.to_csv()).unwrap(), a);
}

#[test]
fn sampler_prefix_does_not_depend_on_length() {
    let short = exact_sample(&cw(0.9, 0.1), &[100], 1500, 5).unwrap();
    let long = exact_sample(&cw(0.9, 0.1), &[100], 5000, 5).unwrap();
    assert_eq!(short.rows(), &long.rows()[..1500]);
}

#[test]
fn free_sample_mean_is_centered() {
    let m = 100_000usize;
    let s = exact_sample(&cw(1e-300, 0.0), &[100], m, 2024).unwrap();
    let mean: f64 = (0..m).map(|r| s.magnetization(r)[0]).sum::<f64>() / m as f64;
    let sigma = 0.1;
    assert!(mean.abs() < 3.0 * sigma / (m as f64).sqrt(), "{mean}");
}

#[test]
fn ordered_phase_sample_splits_evenly() {
    let s = exact_sample(&cw(1.2, 0.0), &[1000], 10_000, 99).unwrap();
    let mu0 = bisect_mu0(1.2);
    let plus = s.restricted_to_ball(&[mu0], 0.3).unwrap().len() as f64 / 1e4;
    let minus = s.restricted_to_ball(&[-mu0], 0.3).unwrap().len() as f64 / 1e4;
    assert!((0.45..=0.55).contains(&plus), "{plus}");
    assert!((0.45..=0.55).contains(&minus), "{minus}");
}

#[test]
fn sample_file_rejects_bad_rows() {
    let bad_parity = "# meanfield-lab samples v1\n# n=1\n# N=[4]\n# seed=0\n3\n";
    assert!(matches!(SampleSet::from_csv(bad_parity), Err(Error::InconsistentRows(_))));
    let wrong_width = "# meanfield-lab samples v1\n# n=1\n# N=[4]\n# seed=0\n2,2\n";
    assert!(SampleSet::from_csv(wrong_width).is_err());
}

#[test]
fn materialized_configuration_has_requested_sums() {
    let model = reference();
    let config = materialize_configuration(&model, &[6, 6], &[2, -4]).unwrap();
    let m = magnetization(&config);
    assert_eq!(m.as_slice(), &[2.0 / 6.0, -4.0 / 6.0]);
}

#[test]
fn free_clt_variance() {
    let law = normalized_sum_law(&cw(1e-300, 0.0), &[2000], &MagnetizationVector::new(vec![0.0]), 1, None).unwrap();
    assert!((law.variance().unwrap() - 1.0).abs() < 0.01);
    assert!((law.total() - 1.0).abs() < 1e-12);
}

#[test]
fn empty_condition() {
    let r = normalized_sum_law(&cw(0.5, 0.0), &[10], &MagnetizationVector::new(vec![0.1]), 1, Some(0.01));
    assert!(matches!(r, Err(Error::EmptyCondition)));
}

#[test]
fn lattice_from_model() {
    let lat = MagLattice::new(&reference(), &[3, 3]).unwrap();
    assert_eq!(lat.len(), 16);
    assert_eq!(lat.magnetization(lat.len() - 1), vec![1.0, 1.0]);
}
