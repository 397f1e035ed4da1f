use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiprod")).args(args).output().expect("spawn multiprod")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

/// Column `col` of the last CSV row as f64.
fn last_field(text: &str, col: usize) -> f64 {
    let row = text.lines().last().expect("rows");
    row.split(',').nth(col).expect("column").parse().expect("number")
}

#[test]
fn coeffs_even_three_ends_in_81_over_40() {
    let o = run(&["coeffs", "--parity", "even", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][..2], ["1", "1/24"]);
    assert_eq!(rows[1][..2], ["2", "-16/15"]);
    assert_eq!(rows[2], ["3", "81/40", "2.025e0"]);
}

#[test]
fn coeffs_from_explicit_nodes() {
    let text = stdout(&run(&["coeffs", "--ks", "1,2"]));
    let weights: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(weights, ["-1/3", "4/3"]);
}

#[test]
fn coeffs_odd_basis() {
    let text = stdout(&run(&["coeffs", "--parity", "odd", "--n", "4"]));
    let weights: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(weights, ["-1/9216", "729/5120", "-15625/9216", "117649/46080"]);
}

#[test]
fn coeffs_final_correction() {
    let text = stdout(&run(&["coeffs", "--n", "2", "--final-m", "8"]));
    let weights: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(weights, ["64/63", "-1/63"]);
}

#[test]
fn integrate_hydrogen_odd_three() {
    let o = run(&["integrate", "--problem", "hydrogen", "--parity", "odd", "--order", "3", "--t1", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,q,v,error"));
    let q = last_field(&text, 1);
    assert!((q - 0.3889).abs() <= 1e-3, "q = {q}");
}

#[test]
fn integrate_reports_exact_error_column() {
    let text = stdout(&run(&["integrate", "--order", "10", "--t1", "1", "--steps", "4"]));
    assert_eq!(text.lines().next(), Some("t,y11,y12,y21,y22,error"));
    assert!(last_field(&text, 5) < 1e-11);
}

#[test]
fn integrate_extended_precision() {
    let o = run(&["integrate", "--problem", "oscillator", "--order", "8", "--steps", "16", "--t1", "2", "--precision", "extended"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let mantissa = last.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert!(mantissa.trim_start_matches('-').len() >= 35, "{mantissa}");
    assert!(last_field(&text, 3) < 1e-10);
}

#[test]
fn doubles_carry_seventeen_digits() {
    let text = stdout(&run(&["integrate", "--order", "4", "--t1", "1"]));
    let field = text.lines().last().unwrap().split(',').nth(2).unwrap();
    let digits = field.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
    assert_eq!(digits, 17, "{field}");
}

#[test]
fn order_parity_mismatch_is_a_usage_error() {
    let o = run(&["integrate", "--order", "3", "--parity", "even"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--order"));
}

#[test]
fn kernel_mismatch_names_the_flag() {
    for args in [
        &["integrate", "--order", "4", "--kernel", "odd"][..],
        &["integrate", "--order", "5", "--kernel", "ab"][..],
        &["integrate", "--order", "4", "--kernel", "t1"][..],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(String::from_utf8_lossy(&o.stderr).contains("--kernel"), "{args:?}");
    }
}

#[test]
fn unknown_problem_is_a_usage_error() {
    let o = run(&["integrate", "--problem", "pendulum", "--order", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--problem"));
}

#[test]
fn usage_errors_leave_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = run(&["integrate", "--order", "4", "--steps", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn singular_start_is_a_numerical_failure() {
    let o = run(&["integrate", "--problem", "hydrogen", "--order", "2", "--kernel", "ba", "--t0", "0", "--t1", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));
}

#[test]
fn regularized_start_runs_from_zero() {
    let o = run(&["integrate", "--problem", "hydrogen", "--regularized", "--t0", "0", "--order", "2", "--kernel", "ba", "--t1", "1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn insufficient_signal_is_a_numerical_failure() {
    let o = run(&["convergence", "--order", "8", "--hs", "1e-4,5e-5,2e-5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient signal"));
}

#[test]
fn convergence_reports_fitted_order() {
    let text = stdout(&run(&["convergence", "--order", "4"]));
    let meta = text.lines().next().unwrap();
    let fitted: f64 = meta
        .split_whitespace()
        .find_map(|w| w.strip_prefix("fitted_order="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((fitted - 5.0).abs() <= 0.5, "{meta}");
    assert_eq!(text.lines().nth(1), Some("h,error"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn global_convergence_of_odd_scheme() {
    let o = run(&["convergence", "--order", "5", "--mode", "global", "--problem", "oscillator", "--t1", "1", "--step-counts", "4,8,16,32"]);
    assert_eq!(o.status.code(), Some(0));
    let meta = stdout(&o);
    let fitted: f64 = meta
        .split_whitespace()
        .find_map(|w| w.strip_prefix("fitted_order="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((fitted - 5.0).abs() <= 0.5, "{meta}");
}

#[test]
fn step_reports_force_count() {
    let cases = [
        ("verlet", 2),
        ("rk2", 2),
        ("kutta3", 3),
        ("nystrom3", 2),
        ("ba3", 2),
        ("nystrom5", 4),
        ("nystrom7", 7),
    ];
    for (method, budget) in cases {
        let text = stdout(&run(&["step", "--method", method, "--problem", "oscillator", "--h", "0.1"]));
        assert_eq!(text.lines().next(), Some("t,q,v,error,force_evaluations"));
        let forces: u64 = text.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(forces, budget, "{method}");
    }
}

#[test]
fn step_needs_a_force_field() {
    let o = run(&["step", "--method", "verlet", "--h", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--problem"));
}

#[test]
fn problem_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "problem = \"oscillator\"\n").unwrap();
    let from_file = run(&["integrate", "--config", cfg.to_str().unwrap(), "--order", "6", "--t1", "1"]);
    let from_flag = run(&["integrate", "--problem", "oscillator", "--order", "6", "--t1", "1"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flag.stdout);

    std::fs::write(&cfg, "problem = \"oscillator\"\ncolour = 3\n").unwrap();
    let bad = run(&["integrate", "--config", cfg.to_str().unwrap(), "--order", "6"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--config"));
}

#[test]
fn figure_output_is_deterministic_across_thread_counts() {
    let one = run(&["--jobs", "1", "figure", "2", "--points", "24", "--orders", "2,6,12"]);
    let four = run(&["--jobs", "4", "figure", "2", "--points", "24", "--orders", "2,6,12"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let again = run(&["--jobs", "4", "figure", "2", "--points", "24", "--orders", "2,6,12"]);
    assert_eq!(four.stdout, again.stdout);
}

#[test]
fn figure_one_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("figure1.csv");
    let o = run(&["figure", "1", "--points", "9", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# multiprod-"));
    assert_eq!(lines[1], "t,exact,magnus_4,magnus_6,magnus_8,magnus_10,mpe_2,mpe_4,mpe_6,mpe_8,mpe_10");
    assert_eq!(lines.len(), 2 + 9);
}

#[test]
fn figure_three_long_format() {
    let text = stdout(&run(&["figure", "3", "--points", "5", "--orders", "4,8"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "t,order,double_error,extended_error");
    assert_eq!(lines.len(), 2 + 2 * 5);
    assert!(lines[0].contains("onset="));
}

#[test]
fn figure_index_is_range_checked() {
    let o = run(&["figure", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}
