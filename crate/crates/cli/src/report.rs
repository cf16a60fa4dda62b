//! CSV renderings of engine reports. Output is UTF-8 with LF line endings;
//! floats print in shortest round-trip form unless rounded for display.

use gwascombine_core::dp::DpReport;
use gwascombine_core::power::{PowerReport, SizeRow};
use gwascombine_core::Method;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Largest tolerated gap between a reported PP and DP·M/T.
const PP_IDENTITY_TOL: f64 = 1e-12;

/// `dp_report.csv`: one row per (T, method), percentages to two decimals
/// followed by full-precision fractions.
pub fn dp_csv(report: &DpReport) -> Vec<u8> {
    let mut w = writer();
    w.write_record([
        "method",
        "T",
        "DP",
        "PP",
        "avg_Tc",
        "mc_se",
        "dp_fraction",
        "pp_fraction",
        "mc_se_fraction",
        "hits",
    ])
    .expect("in-memory write");
    let mut rows: Vec<_> = report.rows.iter().collect();
    rows.sort_by_key(|r| r.t);
    for r in rows {
        if r.method != Method::CombinedList {
            let expect = r.dp * report.n_disease as f64 / r.t as f64;
            assert!(
                (r.pp - expect).abs() <= PP_IDENTITY_TOL * expect.max(1.0),
                "PP = DP*M/T violated for {} at T={}",
                r.method,
                r.t
            );
        }
        w.write_record([
            r.method.name().to_string(),
            r.t.to_string(),
            pct(r.dp),
            pct(r.pp),
            r.avg_tc.map(|v| format!("{v:.2}")).unwrap_or_default(),
            pct(r.mc_se),
            r.dp.to_string(),
            r.pp.to_string(),
            r.mc_se.to_string(),
            r.hits.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// `power_report.csv`: one series per (design, method, source).
pub fn power_csv(reports: &[(String, PowerReport)]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(["method", "odds_ratio", "power", "source", "mc_se", "design"]).expect("in-memory write");
    for (design, report) in reports {
        for r in &report.rows {
            w.write_record([
                r.method.name().to_string(),
                r.odds_ratio.to_string(),
                r.power.to_string(),
                r.source.to_string(),
                r.mc_se.map(|v| v.to_string()).unwrap_or_default(),
                design.clone(),
            ])
            .expect("in-memory write");
        }
    }
    finish(w)
}

/// `null_size_report.csv`.
pub fn null_size_csv(rows: &[(String, Vec<SizeRow>)]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(["method", "alpha", "size", "mc_se", "within_4se", "design"]).expect("in-memory write");
    for (design, list) in rows {
        for r in list {
            w.write_record([
                r.method.name().to_string(),
                r.alpha.to_string(),
                r.size.to_string(),
                r.mc_se.to_string(),
                r.within_4se.to_string(),
                design.clone(),
            ])
            .expect("in-memory write");
        }
    }
    finish(w)
}
