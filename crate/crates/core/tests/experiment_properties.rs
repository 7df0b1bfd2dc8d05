use dynest_core::experiments::{
    read_spec_line, run_spec, run_table, write_rows_csv, BandwidthSpec, ExperimentSpec, ResultRow,
};
use dynest_core::stochastics::NoiseKind;

fn beta_spec(n: usize, h: f64) -> ExperimentSpec {
    let mut s = ExperimentSpec::new("beta:27/11".parse().unwrap(), n, BandwidthSpec::Fixed(h));
    s.seed = 3;
    s
}

fn amet(row: &ResultRow) -> f64 {
    row.metrics.as_ref().expect("run succeeded").amet_sup
}

#[test]
fn noise_does_not_help_on_average() {
    let mut clean = beta_spec(20_000, 0.01);
    clean.replications = 6;
    let mut noisy = clean.clone();
    noisy.noise = NoiseKind::uniform(0.3);
    let (a, b) = (amet(&run_spec(0, &clean)), amet(&run_spec(1, &noisy)));
    assert!(a <= b, "noiseless {a} > noisy {b}");
}

#[test]
fn empty_table_gives_header_only() {
    let rows = run_table(&[]);
    assert!(rows.is_empty());
    let mut out = Vec::new();
    write_rows_csv(&mut out, &[], &rows, false).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn rows_do_not_depend_on_neighbours() {
    let a = beta_spec(5_000, 0.02);
    let mut b = beta_spec(8_000, 0.015);
    b.noise = NoiseKind::gaussian(0.3);
    let together = run_table(&[a.clone(), b.clone()]);
    let alone = run_table(&[b]);
    assert_eq!(together[1].metrics, alone[0].metrics);
    assert_eq!(together[0].metrics, run_table(&[a])[0].metrics);
}

#[test]
fn emitted_file_replays_bit_exactly() {
    let mut specs = vec![beta_spec(4_000, 0.02), beta_spec(4_000, 0.02)];
    specs[1].system = "gauss".parse().unwrap();
    specs[1].replications = 2;
    specs[1].window = Some([0.2, 1.0]);
    let mut first = Vec::new();
    write_rows_csv(&mut first, &specs, &run_table(&specs), false).unwrap();
    let replayed: Vec<ExperimentSpec> = read_spec_line(&first[..]).unwrap();
    let mut second = Vec::new();
    write_rows_csv(&mut second, &replayed, &run_table(&replayed), false).unwrap();
    assert_eq!(first, second);
}

#[test]
fn metrics_are_finite_and_nonnegative() {
    for system in ["beta:2", "beta:27/11", "gauss", "logistic:3.8", "matrixbeta:paper"] {
        let mut s = ExperimentSpec::new(system.parse().unwrap(), 3_000, BandwidthSpec::Fixed(0.05));
        if system.starts_with("matrix") {
            s.kernel = dynest_core::KernelId::Box2d;
            s.grid = 10;
        }
        let row = run_spec(0, &s);
        let m = row.metrics.unwrap_or_else(|| panic!("{system}: {:?}", row.error));
        let values = m.amef.into_iter().chain(m.amet.iter().copied()).chain([m.amet_sup]);
        for v in values {
            assert!(v.is_finite() && v >= 0.0, "{system}: {v}");
        }
    }
}
