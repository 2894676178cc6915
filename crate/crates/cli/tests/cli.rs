use std::path::PathBuf;
use std::process::{Command, Output};

fn hsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hsl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Data rows of `section` as split CSV fields.
fn rows(report: &str, section: &str) -> Vec<Vec<String>> {
    let marker = format!("# section: {section}");
    report
        .lines()
        .skip_while(|l| *l != marker)
        .skip(2)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exact_levy_on_fgn0_passes() {
    let o = hsl(&["verify", "levy", "--matrix", "fgn0", "--N", "12", "--exact"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = rows(&stdout(&o), "levy");
    assert_eq!(r[0][1], "exact");
    assert_eq!(r[0][7], "pass");
}

#[test]
fn exact_stopping_on_independent_signs_passes() {
    let o = hsl(&["verify", "stopping", "--matrix", "diag-ones", "--N", "10", "--exact", "--r-grid", "0.5:3:6"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o), "stopping");
    assert_eq!(r.len(), 6);
    // Independent symmetric terms: the reflected terminal law equals the original.
    assert!(r.iter().all(|row| row[3] == row[4] && row[8] == "0" && row[9] == "pass"));
}

#[test]
fn zero_matrix_passes_with_zero_margins() {
    for mode in [&["--exact"][..], &["--replicas", "100"][..]] {
        let o = hsl(&[&["verify", "levy", "--matrix", "zero", "--N", "6"][..], mode].concat());
        assert_eq!(o.status.code(), Some(0));
        let r = rows(&stdout(&o), "levy");
        assert_eq!((r[0][2].as_str(), r[0][4].as_str(), r[0][6].as_str()), ("0.0000000000000000e0", "0.0000000000000000e0", "0.0000000000000000e0"));
    }
    let o = hsl(&["analyze", "--matrix", "zero", "--N", "20"]);
    let r = rows(&stdout(&o), "criterion");
    assert_eq!(r[0], ["criterion", "0.0000000000000000e0"]);
    assert!(r[1][1].starts_with("converged"));
}

#[test]
fn analyze_flags() {
    let o = hsl(&["analyze", "--matrix", "fgn0", "--weights", "geometric", "--N", "400"]);
    assert!(rows(&stdout(&o), "criterion")[1][1].starts_with("converged"));
    let o = hsl(&["analyze", "--matrix", "power:alpha=1", "--N", "400"]);
    assert_eq!(rows(&stdout(&o), "criterion")[1][1], "inner sum diverges at diagonal 1");
    let body = stdout(&o);
    for s in ["diagonals", "tails", "column_sums"] {
        assert!(!rows(&body, s).is_empty(), "missing section {s}");
    }
}

#[test]
fn malformed_matrix_reports_the_line() {
    let p = scratch("bad.trimat");
    std::fs::write(&p, "trimat v1 N=3\n1\n0.5 x\n1 1 1\n").unwrap();
    let o = hsl(&["analyze", "--matrix", p.to_str().unwrap(), "--N", "1", "--K", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn factor_examples() {
    let o = hsl(&["factor", "--cov", "identity", "--N", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let f = rows(&stdout(&o), "factor");
    assert!(f.iter().all(|r| r[2] == if r[0] == r[1] { "1.0000000000000000e0" } else { "0.0000000000000000e0" }));

    let out = scratch("fgn0.trimat");
    let o = hsl(&["factor", "--cov", "fgn:H=0", "--N", "100", "--matrix-out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o), "reference");
    assert_eq!((r[0][0].as_str(), r[0][3].as_str()), ("fgn0", "pass"));
    assert!(r[0][1].parse::<f64>().unwrap() <= 1e-10);
    let m = hsl_core::io::read_trimat(&out).unwrap();
    assert_eq!(m.order(), 100);

    let bad = scratch("bad.covmat");
    std::fs::write(&bad, "covmat v1 N=3\n1 0 0\n0 1 2\n0 2 1\n").unwrap();
    let o = hsl(&["factor", "--cov", bad.to_str().unwrap(), "--N", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pivot 3"), "{}", stderr(&o));
}

#[test]
fn inconclusive_evidence_exits_two() {
    // Two replicas cannot resolve the sign of the paired difference.
    let o = hsl(&["verify", "doob", "--matrix", "ones", "--N", "1", "--replicas", "2", "--dist", "gaussian", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("# overall: inconclusive"));
}

#[test]
fn enumeration_cap_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_hsl"))
        .args(["verify", "levy", "--matrix", "fgn0", "--N", "12", "--exact"])
        .env("HSL_ENUM_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cap is 10"), "{}", stderr(&o));
}

#[test]
fn output_file_and_table_format() {
    let out = scratch("report.txt");
    let o = hsl(&["simulate", "sup", "--N", "5", "--exact", "--format", "table", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("# format = table"));
    assert!(text.lines().any(|l| l.split_whitespace().next() == Some("offset")));
}

#[test]
fn simulate_examples() {
    // Diagonal 2^-n: E|S_{m+j} - S_m|^2 = sum of 4^-n, maximal at j = J.
    let o = hsl(&["simulate", "cauchy", "--matrix", "diag:geometric", "--N", "10", "--m-grid", "0,3", "--J", "4", "--exact"]);
    let r = rows(&stdout(&o), "cauchy");
    for row in &r {
        let m: i32 = row[0].parse().unwrap();
        let oracle: f64 = (m + 1..=m + 4).map(|n| 0.25f64.powi(n)).sum();
        assert!((row[2].parse::<f64>().unwrap() - oracle).abs() <= 1e-15 * oracle.max(1.0), "{row:?}");
        assert_eq!(row[4], "4");
    }
    let o = hsl(&["simulate", "moment", "--matrix", "diag-ones", "--segments", "0:1,0:2", "--exact"]);
    let r = rows(&stdout(&o), "moments");
    assert_eq!((r[0][6].as_str(), r[1][6].as_str()), ("1.0000000000000000e0", "2.0000000000000000e0"));
    let o = hsl(&["simulate", "paths", "--matrix", "zero", "--N", "4", "--streams", "0:2"]);
    let r = rows(&stdout(&o), "paths");
    assert_eq!(r.len(), 8);
    assert!(r.iter().all(|row| row[2] == "0.0000000000000000e0"));
}

#[test]
fn header_echoes_the_resolved_configuration() {
    let o = hsl(&["verify", "tail", "--matrix", "collinear:geometric", "--N", "10", "--dim", "2", "--dist", "gaussian", "--replicas", "500"]);
    let body = stdout(&o);
    for line in ["# K = 10", "# innovations = gaussian dim=2 embedding=axis-cycling", "# method = monte-carlo replicas=500 seed=1 streams=0:500"] {
        assert!(body.contains(line), "missing `{line}` in\n{body}");
    }
    assert_eq!(body.lines().filter(|l| l.starts_with("# generated:")).count(), 1);
}
