//! Regression against stored tables for two small scenarios.

use std::path::PathBuf;

use gem_harness::output::{read_table, result_csv, RESULT_COLUMNS, SCHEMA_LINE};
use gem_harness::{load_config, run_scenario};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden").join(name)
}

fn check(scenario: &str) {
    let cfg = load_config(&fixture(&format!("{scenario}.conf"))).unwrap();
    let csv = result_csv(&run_scenario(&cfg).unwrap());
    assert_eq!(csv, result_csv(&run_scenario(&cfg).unwrap()), "repeat run differs");

    let golden = std::fs::read_to_string(fixture(&format!("{scenario}.csv"))).unwrap();
    let mut lines = golden.lines();
    assert_eq!(lines.next(), Some(SCHEMA_LINE));
    assert_eq!(lines.next(), Some(RESULT_COLUMNS.join(",").as_str()));
    assert_eq!(csv.lines().count(), golden.lines().count());

    let (want, got) = (read_table(&golden).unwrap(), read_table(&csv).unwrap());
    for (i, (w, g)) in want.rows.iter().zip(&got.rows).enumerate() {
        for ((name, a), b) in want.header.iter().zip(w).zip(g) {
            if a.is_nan() {
                continue;
            }
            let tol = 1e-9 * a.abs().max(1e-300);
            assert!((a - b).abs() <= tol, "row {i} {name}: {b:e} vs golden {a:e}");
        }
    }
    // Text columns are not numeric in the parsed table; compare them directly.
    for (w, g) in golden.lines().zip(csv.lines()).skip(2) {
        let key = |l: &str| l.split(',').take(3).collect::<Vec<_>>().join(",");
        assert_eq!(key(w), key(g));
        assert_eq!(w.matches("NaN").count(), g.matches("NaN").count());
    }
}

#[test]
fn het_vs_ccd_matches_golden() {
    check("het_vs_ccd");
}

#[test]
fn tem20_peak_ratio_matches_golden() {
    check("tem20_peak_ratio");
}
