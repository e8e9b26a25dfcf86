use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use rfm_cli::input::{parse_table, write_table, InputTable};
use rfm_cli::report::OutputReport;
use tempfile::TempDir;

fn rfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfm"))
        .args(args)
        .env_remove("RFM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_file(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn identity_table(dir: &TempDir, n: usize) -> String {
    let text: String = (1..=n).map(|i| format!("{i},{i}\n")).collect();
    write_file(dir, "identity.csv", &text)
}

#[test]
fn count_prints_exact_value() {
    let o = rfm(&["count", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1334961");
    assert_eq!(
        stdout(&rfm(&["count", "34"])).trim(),
        "108610077126170304674801654684367969729"
    );
}

#[test]
fn count_overflow_is_domain_error() {
    let o = rfm(&["count", "35"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn enumerate_lists_family_in_order() {
    let o = rfm(&["enumerate", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "2,3,1\n3,1,2\n");
    let o = rfm(&["enumerate", "4"]);
    assert_eq!(stdout(&o).lines().count(), 9);
    let o = rfm(&["enumerate", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");
}

#[test]
fn enumerate_refuses_large_n() {
    let o = rfm(&["enumerate", "13"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("hint:"));
    let o = rfm(&["enumerate", "13", "--limit", "2", "--max-n", "13"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "2,1,4,3,6,5,8,7,10,9,12,13,11\n2,1,4,3,6,5,8,7,10,9,13,11,12\n"
    );
}

#[test]
fn sample_is_seeded() {
    let a = stdout(&rfm(&["sample", "9", "--count", "20", "--seed", "5"]));
    let b = stdout(&rfm(&["sample", "9", "--count", "20", "--seed", "5"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 20);
    for line in a.lines() {
        let m: Vec<usize> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(m.iter().enumerate().all(|(j, &v)| v != j + 1));
    }
}

#[test]
fn two_rows_is_refused() {
    let dir = TempDir::new().unwrap();
    let path = write_file(&dir, "short.csv", "x,y\n1,2\n3,4\n");
    let o = rfm(&["test", &path]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("need n ≥ 3"), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write_file(&dir, "bad.csv", "1,2\n3,oops\n5,6\n");
    let o = rfm(&["test", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let flat = write_file(&dir, "flat.csv", "1,2\n1,3\n1,4\n");
    assert_eq!(rfm(&["test", &flat]).status.code(), Some(4));

    let big = identity_table(&dir, 13);
    let o = rfm(&["test", &big]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("hint:"));

    let missing = dir.path().join("nope.csv");
    assert_eq!(
        rfm(&["test", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );

    assert_eq!(rfm(&["count"]).status.code(), Some(2));
    let small = identity_table(&dir, 5);
    let o = rfm(&["test", &small, "--samples", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_report_fields() {
    let dir = TempDir::new().unwrap();
    let path = write_file(&dir, "t.csv", "a,b\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n");
    let o = rfm(&["test", &path, "--kde", "--shapiro"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: OutputReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.family_size, 265);
    assert_eq!(report.input.n, 6);
    assert_eq!(report.input.columns, Some(("a".into(), "b".into())));
    assert_eq!(report.observed, 1.0);
    assert!((report.expected_family_mean + 0.2).abs() < 1e-12);
    assert!((report.family.mean + 0.2).abs() < 1e-12);
    assert!(report.percentile_of_observed > 97.5);
    assert_eq!(report.histogram.total(), 265);
    assert!(report.kde.is_some());
    assert!(report.shapiro_wilk.is_some());
    assert!(report.duration_ms.is_none());

    let text = serde_json::to_string_pretty(&report).unwrap();
    let back: OutputReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}

#[test]
fn monte_carlo_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let path = identity_table(&dir, 10);
    let args = [
        "test",
        &path,
        "--mode",
        "mc",
        "--samples",
        "200000",
        "--seed",
        "7",
    ];
    let a = rfm(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = rfm(&args);
    assert_eq!(a.stdout, b.stdout);

    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(rfm(&threaded).stdout, a.stdout);

    let report: OutputReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.family_size, 200_000);
    assert!((report.family.mean + 1.0 / 9.0).abs() < 0.003);
}

#[test]
fn out_file_and_csv_format() {
    let dir = TempDir::new().unwrap();
    let path = identity_table(&dir, 6);
    let out = dir.path().join("dist.csv");
    let o = rfm(&[
        "test",
        &path,
        "--format",
        "csv",
        "--kde",
        "--bins",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("series,x,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let hist: Vec<_> = rows.iter().filter(|r| r[0] == "histogram").collect();
    assert_eq!(hist.len(), 16);
    let total: u64 = hist.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 265);
    assert_eq!(rows.iter().filter(|r| r[0] == "kde").count(), 512);
}

#[test]
fn kde_command_spot_values() {
    let dir = TempDir::new().unwrap();
    let path = write_file(&dir, "v.txt", "0\n\n");
    let o = rfm(&["kde", &path, "--bandwidth", "1", "--grid", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 7);
    assert_eq!((rows[0].0, rows[6].0), (-3.0, 3.0));
    assert!((rows[3].1 - 0.398_942_280_401_432_7).abs() < 1e-12);
    assert!((rows[2].1 - 0.241_970_724_519_143_37).abs() < 1e-12);
}

#[test]
fn kde_command_integrates_to_one() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..200)
        .map(|i| format!("{}\n", ((i * 37) % 101) as f64 / 7.0))
        .collect();
    let path = write_file(&dir, "v.txt", &text);
    let o = rfm(&["kde", &path]);
    assert!(o.status.success());
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let integral: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    assert!((integral - 1.0).abs() < 0.02, "{integral}");
}

#[test]
fn threads_env_var_is_honoured() {
    let dir = TempDir::new().unwrap();
    let path = identity_table(&dir, 8);
    let base = rfm(&["test", &path]);
    let env = Command::new(env!("CARGO_BIN_EXE_rfm"))
        .args(["test", &path])
        .env("RFM_THREADS", "2")
        .output()
        .unwrap();
    assert!(env.status.success());
    assert_eq!(env.stdout, base.stdout);
}

fn header_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}".prop_filter("must not parse as a number", |s| s.parse::<f64>().is_err())
}

proptest! {
    #[test]
    fn table_round_trip_preserves_bits(
        rows in proptest::collection::vec((any::<f64>(), any::<f64>()), 3..40),
        header in proptest::option::of((header_name(), header_name())),
        tab in any::<bool>(),
    ) {
        let rows: Vec<(f64, f64)> = rows.into_iter().filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
        prop_assume!(rows.len() >= 3);
        let table = InputTable {
            source: "mem".into(),
            header,
            delimiter: if tab { b'\t' } else { b',' },
            x: rows.iter().map(|r| r.0).collect(),
            y: rows.iter().map(|r| r.1).collect(),
        };
        let mut buf = Vec::new();
        write_table(&table, &mut buf).unwrap();
        let back = parse_table(&buf[..], table.delimiter, "mem").unwrap();
        prop_assert_eq!(&back.header, &table.header);
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.x), bits(&table.x));
        prop_assert_eq!(bits(&back.y), bits(&table.y));
    }
}

#[test]
fn file_helpers_agree_with_in_memory_parse() {
    let dir = TempDir::new().unwrap();
    let path = write_file(&dir, "t.tsv", "u\tv\n1.5\t-2\n2\t3e2\n  4 \t 5\n");
    let table = rfm_cli::input::read_table(Path::new(&path), b'\t').unwrap();
    assert_eq!(table.x, vec![1.5, 2.0, 4.0]);
    assert_eq!(table.y, vec![-2.0, 300.0, 5.0]);
}
