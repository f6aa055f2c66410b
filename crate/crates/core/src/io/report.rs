//! Report tables: verification CSV, pass/fail summary, sweep and growth
//! series. All output is deterministic for fixed inputs.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::estimates::VerificationReport;
use crate::evolution::{GrowthReport, SweepReport};

/// Verification rows with the fixed header `inequality_id,N,mu,max_ratio`
/// (one row per inequality, resolution and μ aggregate; empty μ when the
/// check has none).
pub fn write_reports(reports: &[VerificationReport], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "inequality_id,N,mu,max_ratio")?;
    for report in reports {
        for row in &report.rows {
            let mu = row.mu.map(|m| m.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", report.id, row.n, mu, row.max_ratio)?;
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Human-readable pass/fail summary, one line per inequality plus its
/// notes.
pub fn write_summary(reports: &[VerificationReport], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for report in reports {
        let verdict = if report.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict} {} (skipped {})", report.id, report.skipped)?;
        for note in &report.notes {
            writeln!(out, "    {note}")?;
        }
    }
    let total = reports.len();
    let passed = reports.iter().filter(|r| r.pass).count();
    writeln!(out, "{passed}/{total} checks passed")?;
    fs::write(path, out)?;
    Ok(())
}

/// μ-sweep table: per-μ Chemin–Lerner norm and the distance to the
/// previous run; the final row is the direct μ = 0 comparison.
pub fn write_sweep_report(report: &SweepReport<f64>, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "mu,chemin_lerner_2,linf_l2_diff_prev")?;
    for (i, mu) in report.mus.iter().enumerate() {
        let diff = if i == 0 {
            String::new()
        } else {
            report.consecutive_diffs[i - 1].to_string()
        };
        writeln!(out, "{},{},{}", mu, report.chemin_lerner_2[i], diff)?;
    }
    if let (Some(direct), Some(run)) = (report.direct_diff, report.direct_run.as_ref()) {
        let cl = run.chemin_lerner(2.0)?;
        writeln!(out, "0,{cl},{direct}")?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Perturbation-growth table against the fitted Gronwall envelope.
pub fn write_growth_report(report: &GrowthReport<f64>, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "time,ratio,grad_integral,envelope")?;
    for (k, envelope) in report.envelope().into_iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            report.times[k], report.ratios[k], report.grad_integral[k], envelope
        )?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::ReportRow;

    #[test]
    fn report_csv_layout_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let reports = vec![
            VerificationReport {
                id: "demo".into(),
                rows: vec![
                    ReportRow {
                        n: 32,
                        mu: None,
                        max_ratio: 0.5,
                    },
                    ReportRow {
                        n: 64,
                        mu: Some(1e-3),
                        max_ratio: 0.75,
                    },
                ],
                pass: true,
                notes: vec!["note".into()],
                skipped: 2,
            },
        ];
        write_reports(&reports, &a).unwrap();
        write_reports(&reports, &b).unwrap();
        let ta = std::fs::read(&a).unwrap();
        assert_eq!(ta, std::fs::read(&b).unwrap());
        let text = String::from_utf8(ta).unwrap();
        assert!(text.starts_with("inequality_id,N,mu,max_ratio\n"));
        assert!(text.contains("demo,32,,0.5"));
        assert!(text.contains("demo,64,0.001,0.75"));

        // empty report: header only
        write_reports(&[], &a).unwrap();
        assert_eq!(
            std::fs::read_to_string(&a).unwrap(),
            "inequality_id,N,mu,max_ratio\n"
        );

        let s = dir.path().join("s.txt");
        write_summary(&reports, &s).unwrap();
        let text = std::fs::read_to_string(&s).unwrap();
        assert!(text.contains("PASS demo (skipped 2)"));
        assert!(text.contains("1/1 checks passed"));
    }
}
