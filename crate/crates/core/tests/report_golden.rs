//! Rendering fixtures. Set `UPDATE_GOLDEN=1` to rewrite the files.

use std::path::PathBuf;

use leakgauge::pipeline::{render_csv, render_json, render_text};
use leakgauge::{AssessmentRow, RiskDirection, Scenario};

fn row(name: &str, scenario: Scenario, d1: f64, d2: f64, m: usize, n: usize) -> AssessmentRow {
    let blatant = scenario == Scenario::Blatant;
    AssessmentRow {
        dataset: name.into(),
        scenario,
        d1,
        d2,
        m,
        n,
        gamma: if blatant { 1.0020040080160322e-6 } else { 1.0 },
        r1: if blatant { 0.0014155924398785787 } else { 0.9298734950321937 },
        epsilon: if blatant { -13.813509603366468 } else { 0.0 },
        direction: if blatant { RiskDirection::Increased } else { RiskDirection::Unchanged },
        clamped: blatant,
        flags: if blatant {
            vec!["degree_clamped".into(), "no_informative_dp_bound".into()]
        } else {
            vec!["no_informative_dp_bound".into()]
        },
    }
}

fn six_rows() -> Vec<AssessmentRow> {
    let sets = [
        ("Sensor readings", 0.998451, 944, 11),
        ("Customer purchases", 0.999183, 1500, 10),
        ("Employee attrition", 0.998634, 1000, 9),
    ];
    let mut rows = Vec::new();
    for (name, d, m, n) in sets {
        rows.push(row(name, Scenario::Private, d, d, m, n));
    }
    for (name, d, m, n) in sets {
        rows.push(row(name, Scenario::Blatant, d, 0.0, m, n));
    }
    rows
}

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn check_all(stem: &str, rows: &[AssessmentRow]) {
    check(&format!("{stem}.txt"), &render_text(rows));
    check(&format!("{stem}.csv"), &render_csv(rows).unwrap());
    check(&format!("{stem}.json"), &render_json(rows));
}

#[test]
fn empty_report() {
    check_all("report_0", &[]);
}

#[test]
fn single_row_report() {
    check_all("report_1", &six_rows()[..1]);
}

#[test]
fn six_row_report() {
    check_all("report_6", &six_rows());
}

#[test]
fn csv_and_json_keep_full_precision() {
    let rows = six_rows();
    let csv = render_csv(&rows).unwrap();
    assert!(csv.contains("0.998451"));
    let back: Vec<AssessmentRow> = serde_json::from_str(&render_json(&rows)).unwrap();
    assert_eq!(back, rows);
}
