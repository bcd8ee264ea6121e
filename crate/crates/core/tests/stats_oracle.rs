//! Reference statistics computed once by an external statistics package
//! (see scripts/make_stats_fixtures.py) and stored as CSV.

use std::path::PathBuf;

use parkbeam::stats::{levene, pearson, student_t, welch_t, LeveneCenter};

const TOL: f64 = 1e-9;

struct Row {
    case: String,
    test: String,
    x: Vec<f64>,
    y: Vec<f64>,
    statistic: f64,
    df: f64,
    p_value: f64,
}

fn parse_list(s: &str) -> Vec<f64> {
    s.split(';').map(|v| v.parse().unwrap()).collect()
}

fn rows() -> Vec<Row> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/stats_oracle.csv");
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            Row {
                case: r[0].to_string(),
                test: r[1].to_string(),
                x: parse_list(&r[2]),
                y: parse_list(&r[3]),
                statistic: r[4].parse().unwrap(),
                df: r[5].parse().unwrap(),
                p_value: r[6].parse().unwrap(),
            }
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * b.abs().max(1.0)
}

#[test]
fn every_fixture_row_matches() {
    let rows = rows();
    assert!(rows.len() >= 25);
    for row in &rows {
        let (stat, df, p) = match row.test.as_str() {
            "student" => {
                let r = student_t(&row.x, &row.y).unwrap();
                (r.statistic, r.df, r.p_value)
            }
            "welch" => {
                let r = welch_t(&row.x, &row.y).unwrap();
                (r.statistic, r.df, r.p_value)
            }
            "levene_mean" | "levene_median" => {
                let center = if row.test == "levene_mean" {
                    LeveneCenter::Mean
                } else {
                    LeveneCenter::Median
                };
                let r = levene(&row.x, &row.y, center).unwrap();
                (r.statistic, r.df, r.p_value)
            }
            "pearson" => {
                let c = pearson(&row.x, &row.y).unwrap();
                (c.rho, (c.n - 2) as f64, c.p_value)
            }
            other => panic!("unknown test {other}"),
        };
        let id = format!("{}/{}", row.case, row.test);
        assert!(close(stat, row.statistic), "{id}: statistic {stat} vs {}", row.statistic);
        assert!(close(df, row.df), "{id}: df {df} vs {}", row.df);
        assert!((p - row.p_value).abs() <= TOL, "{id}: p {p} vs {}", row.p_value);
    }
}

#[test]
fn swapping_samples_negates_t_and_keeps_p() {
    for row in rows().iter().filter(|r| r.test == "student" || r.test == "welch") {
        let f = if row.test == "student" { student_t } else { welch_t };
        let a = f(&row.x, &row.y).unwrap();
        let b = f(&row.y, &row.x).unwrap();
        assert_eq!(a.statistic, -b.statistic);
        assert!((a.p_value - b.p_value).abs() < 1e-15);
    }
}
