use whitext::harness::*;

const TINY: &str = r#"
[params]
s = [0.5]
k = [1]
p = [2.0]
q = [2.0]
u = [1.0]
u_equals_p = false

[sampling]
reproduction_orders = [1, 2]
pointwise = 50
localization = 50
near_best_pairs = 3
near_best_max_cells = 200
local_cubes = 4
overlap_points = 200
derivative_cubes = 8
quadrature = false

[tolerances]
near_best_min_pairs = 1

[[sets]]
name = "half_line"
spec = { kind = "half_space", axis = 0, offset = 0.0 }
grid = { n = 1, cells = 256, lo = -1.5, hi = 2.5 }
functions = [{ kind = "constant", value = 1.0 }, { kind = "sine", lambda = 1.0 }]
"#;

fn tiny() -> Config {
    Config::from_toml(TINY).unwrap()
}

#[test]
fn tiny_config_passes() {
    let report = run_verification(&tiny());
    assert!(report.len() > 50);
    let failed: Vec<&str> = report.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(exit_code(&report), 0);
    for c in &report {
        if let Some(v) = c.measured_constant {
            assert!(v.is_finite() || c.status == Status::Skipped, "{}", c.name);
        }
    }
}

#[test]
fn skipping_normalization_breaks_the_partition_sum() {
    let mut cfg = tiny();
    cfg.fault = Some(Fault::SkipNormalization);
    let report = run_verification(&cfg);
    let sums: Vec<&CheckResult> = report.iter().filter(|c| c.name.starts_with("whitney.partition_sum/")).collect();
    assert!(!sums.is_empty());
    assert!(sums.iter().all(|c| c.status == Status::Fail));
    assert_eq!(exit_code(&report), 1);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = render_report(&run_verification(&tiny()), Format::Json).unwrap();
    let b = render_report(&run_verification(&tiny()), Format::Json).unwrap();
    assert_eq!(a, b);
    let csv1 = render_report(&run_verification(&tiny()), Format::Csv).unwrap();
    assert!(String::from_utf8(csv1).unwrap().starts_with("name,"));
}

#[test]
fn report_round_trips_through_json() {
    let report = run_verification(&tiny());
    let text = String::from_utf8(render_report(&report, Format::Json).unwrap()).unwrap();
    assert_eq!(parse_report(&text).unwrap(), report);
    let empty = String::from_utf8(render_report(&[], Format::Json).unwrap()).unwrap();
    assert_eq!(empty.trim(), "[]");
    assert_eq!(exit_code(&[]), 0);
}

#[test]
fn config_round_trips_and_validates() {
    let cfg = Config::default_corpus();
    let text = cfg.to_toml().unwrap();
    assert_eq!(Config::from_toml(&text).unwrap(), cfg);
    assert!(cfg.validate().is_ok());
    assert!(Config::from_toml("sets = []\nbogus = 1").is_err());
    let mut bad = tiny();
    bad.norm_margin = 0.6;
    assert!(bad.validate().is_err());
}

#[test]
fn ratio_accumulator_reports_the_worst_ratio() {
    let mut acc = RatioAcc::new();
    acc.add(1.0, 2.0, 1e-9, || "a".into());
    acc.add(3.0, 1.0, 1e-9, || "b".into());
    acc.skip();
    assert_eq!(acc.constant(), 3.0);
    assert!((acc.skip_fraction() - 1.0 / 3.0).abs() < 1e-12);
}
