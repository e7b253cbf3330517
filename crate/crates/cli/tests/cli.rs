use std::fs::File;
use std::path::PathBuf;
use std::process::{Command, Output};

use ddstab::kernels::BuiltinKernel;
use ddstab::lattice::{build_domain, read_dense_binary, FiniteSectionOperator, GridConvention, Shape};
use ddstab::Par;
use ddstab::Complex64;
use serde_json::Value;

fn ddstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddstab")).args(args).output().expect("spawn ddstab")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = ddstab(args);
    assert!(
        out.status.success(),
        "ddstab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("ddstab-cli-{}-{name}", std::process::id()))
}

/// Parses one CSV block: (`# meta` line, header, rows).
fn csv_table(text: &str) -> (Value, Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (meta, header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn ex2_symbol_on_quarter_cell_stays_below_half() {
    let (meta, header, rows) = csv_table(&stdout_ok(&["--kernel", "ex2", "--samples", "201", "symbol", "--region", "quarter"]));
    assert_eq!(meta["kernel"], "ex2");
    assert_eq!(rows.len(), 201 * 201);
    let f = column(&header, "f11_re");
    let max = rows.iter().map(|r| r[f]).fold(f64::NEG_INFINITY, f64::max);
    assert!(max <= 0.5 + 1e-10, "max {max}");
    assert!(max > 0.4, "max {max}");
    let im = column(&header, "f11_im");
    assert!(rows.iter().all(|r| r[im].abs() < 1e-14));
}

#[test]
fn ex3_symbol_on_lozenge_is_nonnegative() {
    let (_, header, rows) = csv_table(&stdout_ok(&["--kernel", "ex3", "--samples", "31", "symbol", "--region", "lozenge"]));
    let (t1, t2, f) = (column(&header, "tau_1"), column(&header, "tau_2"), column(&header, "f11_re"));
    assert!(!rows.is_empty());
    for r in &rows {
        let pi = std::f64::consts::PI;
        assert!((r[t1] - pi).abs() + r[t2].abs() <= pi + 1e-12);
        // F jumps at the vertices (0,0) and (2pi,0).
        if (r[t1] - pi).abs() + r[t2].abs() < pi - 1e-9 {
            assert!(r[f] >= -1e-10, "F({}, {}) = {}", r[t1], r[t2], r[f]);
        }
    }
    // Maximum sits at the centre (pi, 0).
    let top = rows.iter().max_by(|a, b| a[f].total_cmp(&b[f])).unwrap();
    assert!((top[t1] - std::f64::consts::PI).abs() < 1e-12 && top[t2].abs() < 1e-12);
}

#[test]
fn maxwell_symbol_is_trace_free_on_line() {
    let (meta, header, rows) =
        csv_table(&stdout_ok(&["--kernel", "maxwell", "--d", "3", "--samples", "17", "symbol", "--region", "line", "--eigs"]));
    assert_eq!(meta["block"], 3);
    assert_eq!(rows.len(), 17);
    let e: Vec<usize> = ["eig_1", "eig_2", "eig_3"].iter().map(|c| column(&header, c)).collect();
    let mut lowest = f64::INFINITY;
    for r in &rows {
        let sum: f64 = e.iter().map(|&i| r[i]).sum();
        assert!(sum.abs() < 1e-12, "trace {sum}");
        lowest = lowest.min(r[e[0]]);
    }
    assert!((lowest + 0.42602415072727).abs() < 1e-9, "min eigenvalue {lowest}");
}

#[test]
fn constants_report() {
    let v: Value = serde_json::from_str(&stdout_ok(&["constants"])).unwrap();
    let closed = v["lambda0"]["closed_form"].as_f64().unwrap();
    let series = v["lambda0"]["series_5_terms"].as_f64().unwrap();
    assert!((closed - 0.547109903806619).abs() < 1e-15);
    assert!((closed - series).abs() < 1e-14);
    assert!(v["conformal_identity_residual"].as_f64().unwrap() <= 1e-14);

    // Clausius-Mossotti inverse at d = 3: eps = (3 lambda - 2) / (1 + 3 lambda).
    let m = &v["maxwell3"];
    let eps = |l: f64| (3.0 * l - 2.0) / (1.0 + 3.0 * l);
    let lm = m["ewald"]["lambda_minus"].as_f64().unwrap();
    let lp = m["ewald"]["lambda_plus"].as_f64().unwrap();
    assert!((m["eps_min"].as_f64().unwrap() - eps(lp)).abs() < 1e-9);
    assert!((m["eps_max"].as_f64().unwrap() - eps(lm)).abs() < 1e-9);
    assert!((m["overshoot"].as_f64().unwrap() - (lp - lm)).abs() < 1e-12);
}

#[test]
fn supf_table_matches_reference_column() {
    let text = stdout_ok(&["--samples", "101", "tables", "--table", "supf"]);
    let (meta, header, rows) = csv_table(&text);
    assert_eq!(meta["table"], "supf");
    let (m, diff) = (column(&header, "M"), column(&header, "diff"));
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r[m] >= 2.0) {
        assert!(r[diff].abs() < 1e-12, "M = {} diff {}", r[m], r[diff]);
    }
}

#[test]
fn json_format_and_config_file() {
    let cfg = scratch("config.json");
    std::fs::write(&cfg, r#"{"kernel": "ex3", "N": [8, 12], "grid": "vertex-closed"}"#).unwrap();
    let text = stdout_ok(&["--config", cfg.to_str().unwrap(), "--format", "json", "spectrum"]);
    std::fs::remove_file(&cfg).ok();
    let v: Value = serde_json::from_str(&text).unwrap();
    let rows = v["spectrum"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(v["meta"]["N"], serde_json::json!([8, 12]));
    let l8 = rows[0]["lambda_max"].as_f64().unwrap();
    let l12 = rows[1]["lambda_max"].as_f64().unwrap();
    assert!(0.0 < l8 && l8 < l12 && l12 < 0.5471099038066192);
}

#[test]
fn assemble_dumps_round_trip() {
    let bin = scratch("a.bin");
    let csv = scratch("a.csv");
    stdout_ok(&["--kernel", "ex3", "--N", "6", "assemble", "--dump", bin.to_str().unwrap()]);
    stdout_ok(&["--kernel", "ex3", "--N", "6", "assemble", "--dump", csv.to_str().unwrap(), "--dump-format", "csv"]);

    let (h, m) = read_dense_binary(&mut File::open(&bin).unwrap()).unwrap();
    assert_eq!((h.d, h.r, h.n), (2, 1, 6));
    assert_eq!(m.nrows(), 49);

    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::remove_file(&bin).ok();
    std::fs::remove_file(&csv).ok();
    let parsed: Vec<Vec<Complex64>> = text
        .lines()
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
        })
        .collect();
    assert_eq!(parsed.len(), 49);

    let k = BuiltinKernel::Ex3.build().unwrap();
    let dom = build_domain(2, 6, &Shape::unit_box(2), GridConvention::VertexClosed).unwrap();
    let op = FiniteSectionOperator::dense(&k, &dom, 8192, Par::Sequential).unwrap();
    let reference = op.to_dense(8192).unwrap();
    for i in 0..49 {
        for j in 0..49 {
            assert_eq!(m[(i, j)], reference[(i, j)]);
            assert_eq!(parsed[i][j], reference[(i, j)]);
            assert_eq!(m[(i, j)], m[(j, i)].conj());
        }
    }
}

#[test]
fn solve_residual_checked_against_library_matrix() {
    let rhs = scratch("rhs.csv");
    let sol = scratch("u.csv");
    let f: Vec<f64> = (0..81).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
    std::fs::write(&rhs, f.iter().map(|x| format!("{x}\n")).collect::<String>()).unwrap();
    let text = stdout_ok(&[
        "--kernel", "ex4", "--N", "8", "solve", "--lambda", "1.2,0.3",
        "--rhs", rhs.to_str().unwrap(), "--solution", sol.to_str().unwrap(),
    ]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["method"], "gmres");
    assert_eq!(v["converged"], true);

    let u: Vec<Complex64> = std::fs::read_to_string(&sol)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            Complex64::new(a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    std::fs::remove_file(&rhs).ok();
    std::fs::remove_file(&sol).ok();
    assert_eq!(u.len(), 81);

    let k = BuiltinKernel::Ex4.build().unwrap();
    let dom = build_domain(2, 8, &Shape::unit_box(2), GridConvention::VertexClosed).unwrap();
    let op = FiniteSectionOperator::fft(&k, &dom, Par::Sequential).unwrap();
    let t = op.to_dense(8192).unwrap();
    let lambda = Complex64::new(1.2, 0.3);
    let mut res2 = 0.0;
    for i in 0..81 {
        let tu: Complex64 = (0..81).map(|j| t[(i, j)] * u[j]).sum();
        res2 += (lambda * u[i] - tu - f[i]).norm_sqr();
    }
    let fnorm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(res2.sqrt() / fnorm < 1e-9, "relative residual {}", res2.sqrt() / fnorm);
}

#[test]
fn bad_configuration_exits_with_2() {
    assert_eq!(ddstab(&["--kernel", "nope", "constants"]).status.code(), Some(2));
    assert_eq!(ddstab(&["--kernel", "maxwell", "symbol"]).status.code(), Some(2));
    assert_eq!(ddstab(&["--kernel", "ex3", "--N", "4", "solve", "--lambda", "1,1", "--method", "minres"]).status.code(), Some(2));
    assert_eq!(ddstab(&["--kernel", "ex3", "stability", "--eps-r", "1"]).status.code(), Some(2));
}

#[test]
fn shift_on_an_eigenvalue_exits_with_3() {
    let v: Value = serde_json::from_str(&stdout_ok(&["--kernel", "ex3", "--N", "8", "--format", "json", "spectrum", "--method", "dense"])).unwrap();
    let top = v["spectrum"][0]["lambda_max"].as_f64().unwrap();
    let out = ddstab(&["--kernel", "ex3", "--N", "8", "solve", "--lambda", &format!("{top:?}")]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["near_singular"], true);
}
