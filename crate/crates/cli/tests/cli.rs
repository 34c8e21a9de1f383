use std::process::{Command, Output};

use krylov_core::linalg::io::format_matrix;
use krylov_core::linalg::random_spd;

fn krylov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krylov")).args(args).env_remove("KRYLOV_LOG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn equivalence_on_the_hand_case_passes() {
    let o = krylov(&["equivalence", "--spectrum", "1,3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("k,dev_cg_subspace,dev_cg_bfgs,dev_subspace_bfgs\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn rates_reports_the_steepest_descent_worst_case() {
    let o = krylov(&["rates", "--spectrum", "1,3"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    for v in column(&csv, "sd_ratio2") {
        assert!((v.parse::<f64>().unwrap() - 0.5).abs() <= 1e-12, "{v}");
    }
    for v in column(&csv, "q_bound") {
        assert!((v.parse::<f64>().unwrap() - 0.5).abs() <= 1e-12);
    }
}

#[test]
fn rates_structural_run_passes() {
    let o = krylov(&["rates", "--n", "25", "--cond", "1000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("PASS"));
}

#[test]
fn fem_refinement_gives_second_order_ratios() {
    let o = krylov(&["fem", "--n", "15", "--c", "0", "--load", "sin-benchmark", "--refine", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let ratios: Vec<f64> = column(&stdout(&o), "ratio").iter().filter(|r| !r.is_empty()).map(|r| r.parse().unwrap()).collect();
    assert_eq!(column(&stdout(&o), "l2_error").len(), 3);
    assert_eq!(ratios.len(), 2);
    assert!(ratios.iter().all(|r| (3.5..=4.5).contains(r)), "{ratios:?}");
}

#[test]
fn fem_operator_comparison_passes() {
    for c in ["0", "1", "5"] {
        let o = krylov(&["fem", "--n", "31", "--c", c, "--load", "const1", "--compare-operator"]);
        assert_eq!(o.status.code(), Some(0), "c={c}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("k,rNorm,alpha_pcg,alpha_operator,alpha_displayed"));
    }
}

#[test]
fn fem_solution_csv_has_every_node() {
    let o = krylov(&["fem", "--n", "7", "--load", "const1"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(column(&csv, "x").len(), 9);
    for e in column(&csv, "error") {
        assert!(e.parse::<f64>().unwrap().abs() <= 1e-12, "{e}");
    }
}

#[test]
fn usage_and_input_errors_exit_2() {
    assert_eq!(krylov(&["fem", "--n", "0"]).status.code(), Some(2));
    assert_eq!(krylov(&["fem", "--load", "cubic"]).status.code(), Some(2));
    assert_eq!(krylov(&["rates", "--spectrum", "1,-3"]).status.code(), Some(2));
    assert_eq!(krylov(&["equivalence", "--spectrum", "1,3", "--matrix-file", "m.txt"]).status.code(), Some(2));
    assert_eq!(krylov(&["lanczos", "--matrix-file", "/nonexistent/matrix.txt"]).status.code(), Some(2));
    assert_eq!(krylov(&["polys", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(krylov(&["unknown"]).status.code(), Some(2));
}

#[test]
fn threshold_breach_exits_1() {
    // Duality at κ = 10⁴ is far outside what floating-point CG preserves.
    let o = krylov(&["polys", "--n", "30", "--cond", "10000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("FAIL"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    for args in [
        &["rates", "--n", "12", "--cond", "100", "--seed", "3"][..],
        &["lanczos", "--n", "10", "--cond", "50", "--seed", "2"][..],
        &["polys", "--n", "8", "--kind", "conjugate", "--seed", "5"][..],
    ] {
        assert_eq!(krylov(args).stdout, krylov(args).stdout, "{args:?}");
    }
    let seq = krylov(&["fem", "--n", "7", "--c", "2", "--refine", "4"]);
    let par = krylov(&["fem", "--n", "7", "--c", "2", "--refine", "4", "--parallel"]);
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn matrix_file_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("a.txt");
    std::fs::write(&matrix, format_matrix(random_spd(6, 20.0, 4).unwrap().sym())).unwrap();
    let out = dir.path().join("lanczos.csv");
    let o = krylov(&["lanczos", "--matrix-file", matrix.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("identity,k,deviation\n"));
    let identities: std::collections::BTreeSet<String> = column(&csv, "identity").into_iter().collect();
    for name in ["v", "p_bar", "alpha_bar", "sigma", "tau", "l", "delta", "x", "beta_product", "det"] {
        assert!(identities.contains(name), "missing {name}");
    }

    std::fs::write(&matrix, "2\n1\n2 1\n").unwrap();
    assert_eq!(krylov(&["equivalence", "--matrix-file", matrix.to_str().unwrap()]).status.code(), Some(2));
}
