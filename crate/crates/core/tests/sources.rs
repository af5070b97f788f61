use std::io::Write;

use gini_seq::source::Sampler;
use gini_seq::{
    derive_stream, open_file_source, run_sequential, DistributionSpec, Error, FileFormat,
    ObservationSource, SampleStream, SeedSpec, StoppingConfig,
};
use tempfile::NamedTempFile;

const FAMILIES: [DistributionSpec; 3] = [
    DistributionSpec::REFERENCE_GAMMA,
    DistributionSpec::REFERENCE_LOGNORMAL,
    DistributionSpec::REFERENCE_PARETO,
];

#[test]
fn moments_within_four_standard_errors() {
    for (i, spec) in FAMILIES.iter().enumerate() {
        let xs: Vec<f64> = SampleStream::new(spec, SeedSpec::new(101, i as u64))
            .unwrap()
            .take(1_000_000)
            .collect();
        assert!(xs.iter().all(|x| x.is_finite() && *x >= spec.support_min()));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var = m2 * n / (n - 1.0);

        let se_mean = (m2 / n).sqrt();
        let se_var = ((m4 - m2 * m2) / n).sqrt();
        let z_mean = (mean - spec.mean()) / se_mean;
        let z_var = (var - spec.variance()) / se_var;
        assert!(
            z_mean.abs() < 4.0,
            "{spec}: mean {mean} vs {} (z = {z_mean:.2})",
            spec.mean()
        );
        assert!(
            z_var.abs() < 4.0,
            "{spec}: variance {var} vs {} (z = {z_var:.2})",
            spec.variance()
        );
    }
}

#[test]
fn analytic_means() {
    assert!((DistributionSpec::REFERENCE_GAMMA.mean() - 3.153_571_428_571_428_5).abs() < 1e-12);
    assert!((DistributionSpec::REFERENCE_LOGNORMAL.mean() - 10.411_614_897_100_266).abs() < 1e-12);
    assert_eq!(DistributionSpec::REFERENCE_PARETO.mean(), 25_000.0);
}

#[test]
fn pareto_support() {
    let stream =
        SampleStream::new(&DistributionSpec::REFERENCE_PARETO, SeedSpec::new(5, 5)).unwrap();
    assert!(stream.take(100_000).all(|x| x >= 20_000.0));
}

// Kolmogorov–Smirnov on the first draw of each of 2000 streams, level 0.001.
#[test]
fn first_draws_across_streams_follow_family() {
    let streams = 2000u64;
    let critical = 1.949_5 / (streams as f64).sqrt();
    for spec in &FAMILIES {
        let sampler = Sampler::new(spec).unwrap();
        let mut draws: Vec<f64> = (0..streams)
            .map(|i| sampler.sample(&mut derive_stream(SeedSpec::new(77, i))))
            .collect();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let d = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = spec.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < critical, "{spec}: KS statistic {d} ≥ {critical}");
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: Vec<f64> = SampleStream::new(&FAMILIES[0], SeedSpec::new(9, 1))
        .unwrap()
        .take(50)
        .collect();
    let b: Vec<f64> = SampleStream::new(&FAMILIES[0], SeedSpec::new(9, 1))
        .unwrap()
        .take(50)
        .collect();
    let c: Vec<f64> = SampleStream::new(&FAMILIES[0], SeedSpec::new(9, 2))
        .unwrap()
        .take(50)
        .collect();
    assert_eq!(a, b);
    assert_ne!(a[0], c[0]);
}

fn file_with(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn file_values_then_exhaustion() {
    let f = file_with("5\n7\n9\n");
    let mut src = open_file_source(f.path(), FileFormat::default()).unwrap();
    let got: Vec<f64> = std::iter::from_fn(|| src.next_observation())
        .map(Result::unwrap)
        .collect();
    assert_eq!(got, [5.0, 7.0, 9.0]);
    assert!(src.next_observation().is_none());
}

#[test]
fn file_negative_value_names_line() {
    let f = file_with("-3\n");
    let mut src = open_file_source(f.path(), FileFormat::default()).unwrap();
    assert!(matches!(
        src.next_observation(),
        Some(Err(Error::NegativeValue { line: 1, .. }))
    ));
}

#[test]
fn empty_file_exhausts_immediately() {
    let f = file_with("");
    let mut src = open_file_source(f.path(), FileFormat::default()).unwrap();
    let config = StoppingConfig::new(0.1, 0.01).unwrap();
    let err = run_sequential(&mut src, &config).unwrap_err();
    assert!(matches!(err, Error::SourceExhausted { n: 0, .. }), "{err}");
}

#[test]
fn missing_file_names_path() {
    let err = open_file_source("/nonexistent/values.csv", FileFormat::default()).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/values.csv"));
}
