use std::io::Write;

use nalgebra::DVector;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use kernel_boost::bench::config::ExperimentConfig;
use kernel_boost::bench::experiment::run_experiment;
use kernel_boost::bench::generate::{
    gen_classify_mixture, gen_franke, gen_inverse_problem, mixture_noise, stream_rng, InputMode, InverseSpec,
};
use kernel_boost::bench::ingest::{ingest_csv, CsvSchema, EstimationProblem};
use kernel_boost::bench::metrics::{fit_classification, fit_regression, fit_theta};
use kernel_boost::Error;

fn in_band_share(x: &[f64], cutoff: f64) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let edge = (cutoff * n as f64 / 2.0).ceil() as usize;
    let power = |k: usize| buf[k].norm_sqr();
    let total: f64 = (0..n).map(power).sum();
    // bins 0..=edge and their mirror images
    let band: f64 = (0..n).filter(|&k| k.min(n - k) <= edge).map(power).sum();
    band / total
}

#[test]
fn lowpass_columns_concentrate_in_band() {
    let spec = InverseSpec::default();
    for run in 0..5 {
        let p = gen_inverse_problem(&mut stream_rng(1, run), &spec).unwrap();
        for j in [0, spec.m / 2, spec.m - 1] {
            let col: Vec<f64> = p.u.column(j).iter().copied().collect();
            let share = in_band_share(&col, spec.cutoff);
            assert!(share >= 0.9, "run {run} column {j}: {share:.3}");
        }
    }
}

#[test]
fn white_columns_spread_over_all_bands() {
    let spec = InverseSpec {
        mode: InputMode::White,
        ..InverseSpec::default()
    };
    let p = gen_inverse_problem(&mut stream_rng(1, 0), &spec).unwrap();
    let col: Vec<f64> = p.u.column(0).iter().copied().collect();
    assert!(in_band_share(&col, spec.cutoff) < 0.5);
}

#[test]
fn noise_is_a_tenth_of_the_clean_variance() {
    let p = gen_inverse_problem(&mut stream_rng(2, 0), &InverseSpec::default()).unwrap();
    let clean = &p.u * &p.theta;
    let mean = clean.mean();
    let var = clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / clean.len() as f64;
    assert!((p.sigma2 - var / 10.0).abs() <= 1e-12 * var);
}

#[test]
fn classification_labels_are_balanced() {
    let split = gen_classify_mixture(&mut stream_rng(3, 0), 10_000);
    let all: Vec<f64> = [&split.train, &split.validation, &split.test]
        .iter()
        .flat_map(|s| s.y.iter().copied())
        .collect();
    assert_eq!(all.len(), 10_000);
    assert!(all.iter().all(|&l| l == 1.0 || l == -1.0));
    let share = all.iter().filter(|&&l| l > 0.0).count() as f64 / all.len() as f64;
    assert!((share - 0.5).abs() <= 0.02, "positive share {share}");
}

#[test]
fn split_sizes_are_half_and_quarters() {
    let split = gen_classify_mixture(&mut stream_rng(4, 0), 500);
    assert_eq!(
        (split.train.len(), split.validation.len(), split.test.len()),
        (250, 125, 125)
    );
    let split = gen_franke(&mut stream_rng(4, 0), 1000);
    assert_eq!(
        (split.train.len(), split.validation.len(), split.test.len()),
        (500, 250, 250)
    );
}

#[test]
fn wide_noise_component_has_ten_percent_weight() {
    let mut rng = stream_rng(5, 0);
    let draws = 100_000;
    let wide = (0..draws).filter(|_| mixture_noise(&mut rng).1).count() as f64 / draws as f64;
    assert!((wide - 0.1).abs() <= 0.02, "wide share {wide}");
}

#[test]
fn franke_test_outputs_are_noiseless() {
    let split = gen_franke(&mut stream_rng(6, 0), 400);
    for (x, y) in split.test.inputs.iter().zip(split.test.y.iter()) {
        assert_eq!(*y, kernel_boost::bench::generate::franke(x[0], x[1]));
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a = gen_franke(&mut stream_rng(9, 3), 100);
    let b = gen_franke(&mut stream_rng(9, 3), 100);
    let c = gen_franke(&mut stream_rng(9, 4), 100);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn metrics_on_known_inputs() {
    let truth = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    assert_eq!(fit_theta(&truth, &truth).unwrap(), 100.0);
    assert_eq!(fit_theta(&truth, &DVector::zeros(3)).unwrap(), 0.0);
    assert_eq!(fit_regression(&truth, &truth).unwrap(), 100.0);
    let labels = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
    let scores = DVector::from_vec(vec![0.3, -2.0, -0.1, -0.5]);
    assert_eq!(fit_classification(&labels, &scores).unwrap(), 75.0);
}

fn write_csv(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn ingest_linear_and_detrend() {
    let f = write_csv("a,b,out\n1,2,3\n3,6,5\n5,4,10\n");
    let schema = CsvSchema {
        y: Some("out".into()),
        u: vec!["a".into(), "b".into()],
        detrend: true,
        ..CsvSchema::default()
    };
    match ingest_csv(f.path(), &schema).unwrap() {
        EstimationProblem::Linear { u, y, columns } => {
            assert_eq!(columns, vec!["a", "b"]);
            assert_eq!(u.shape(), (3, 2));
            assert!(y.mean().abs() < 1e-15);
            assert!(u.column(0).mean().abs() < 1e-15 && u.column(1).mean().abs() < 1e-15);
            assert_eq!(u[(0, 0)], -2.0);
        }
        other => panic!("expected a linear problem, got {other:?}"),
    }
}

#[test]
fn ingest_labeled_points() {
    let f = write_csv("x1,x2,cls\n0.1,0.2,1\n0.3,0.1,-1\n");
    let schema = CsvSchema {
        label: Some("cls".into()),
        inputs: vec!["x1".into(), "x2".into()],
        ..CsvSchema::default()
    };
    match ingest_csv(f.path(), &schema).unwrap() {
        EstimationProblem::Points { inputs, y, labeled } => {
            assert!(labeled);
            assert_eq!(inputs, vec![vec![0.1, 0.2], vec![0.3, 0.1]]);
            assert_eq!(y.as_slice(), &[1.0, -1.0]);
        }
        other => panic!("expected points, got {other:?}"),
    }
}

#[test]
fn ingest_errors_are_data_errors() {
    let schema = CsvSchema {
        y: Some("y".into()),
        u: vec!["a".into()],
        ..CsvSchema::default()
    };
    for text in ["a,y\n1,2\n3\n", "a,y\n1,x\n", "a,z\n1,2\n", "a,y\n"] {
        let f = write_csv(text);
        let err = ingest_csv(f.path(), &schema).unwrap_err();
        assert!(matches!(err, Error::Data(_) | Error::Parse(_)), "{text:?}: {err:?}");
    }
}

#[test]
fn config_errors_are_reported() {
    let base = "schema_version = 1\nexperiment = \"franke\"\n";
    let cases = [
        "schema_version = 2\nexperiment = \"franke\"\n[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\n".to_string(),
        format!("{base}runs = 0\n[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\n"),
        format!("{base}estimator = []\n"),
        format!("{base}[[estimator]]\nname = \"a\"\nmethod = \"spectral\"\n"),
        format!("{base}[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\n[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\n"),
        format!("{base}colour = 3\n[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\n"),
        format!("{base}[[estimator]]\nname = \"a\"\nmethod = \"kernel_rkhs\"\nloss = \"bogus\"\n"),
    ];
    for text in &cases {
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert!(
            matches!(err, Error::Config(_) | Error::InvalidParameter(_)),
            "{text}: {err:?}"
        );
    }
}

#[test]
fn small_inverse_experiment_runs_and_ranks_boosting_first() {
    let cfg = ExperimentConfig::from_toml(
        r#"
schema_version = 1
experiment = "inverse_mc"
runs = 4
seed = 3

[[estimator]]
name = "ridge"
method = "spectral"
nu = 1.0

[[estimator]]
name = "boosting"
method = "spectral"
"#,
    )
    .unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 8);
    let boost = report.summary("boosting").unwrap();
    let ridge = report.summary("ridge").unwrap();
    assert!(boost.median > ridge.median, "{} vs {}", boost.median, ridge.median);
    let again = run_experiment(&cfg).unwrap();
    assert_eq!(report.to_json().unwrap(), again.to_json().unwrap());
}
