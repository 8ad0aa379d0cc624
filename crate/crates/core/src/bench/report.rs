use serde_json::Value;

use super::BenchReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "table" | "text-table" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

/// Render a report. Wall times are included only when `timing` is set so
/// that repeated runs print identical bytes.
pub fn emit_report(report: &BenchReport, format: ReportFormat, timing: bool) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(text(report, timing)),
        ReportFormat::Csv => csv(report, timing),
        ReportFormat::Json => {
            let mut v = serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))?;
            if !timing {
                if let Some(rows) = v.get_mut("rows").and_then(Value::as_array_mut) {
                    for row in rows {
                        if let Some(obj) = row.as_object_mut() {
                            obj.remove("wall_time_seconds");
                        }
                    }
                }
            }
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn text(report: &BenchReport, timing: bool) -> String {
    let width = report.rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}  R / V | U", "name");
    if timing {
        out.push_str("  time");
    }
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!("{:<width$}  {} / {} | {}", r.name, r.rsr, r.verified, r.unverified));
        if timing {
            out.push_str(&format!("  {:.2}s", r.wall_time_seconds));
        }
        if let Some(e) = &r.error {
            out.push_str(&format!("  error: {e}"));
        }
        out.push('\n');
    }
    out
}

fn csv(report: &BenchReport, timing: bool) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["name", "category", "rsr", "verified", "unverified"];
    if timing {
        header.push("wall_time_seconds");
    }
    header.extend(["matched_ground_truth", "error", "properties"]);
    w.write_record(&header).map_err(io)?;
    for r in &report.rows {
        let mut rec = vec![
            r.name.clone(),
            r.category.clone(),
            r.rsr.to_string(),
            r.verified.to_string(),
            r.unverified.to_string(),
        ];
        if timing {
            rec.push(format!("{:.3}", r.wall_time_seconds));
        }
        rec.push(r.matched_ground_truth.join("; "));
        rec.push(r.error.clone().unwrap_or_default());
        rec.push(serde_json::to_string(&r.properties).map_err(|e| Error::Io(e.to_string()))?);
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{BenchConfig, BenchRow};

    fn row(name: &str) -> BenchRow {
        BenchRow {
            name: name.into(),
            category: "basic".into(),
            rsr: 1,
            verified: 2,
            unverified: 0,
            wall_time_seconds: 0.4,
            properties: Vec::new(),
            matched_ground_truth: Vec::new(),
            error: None,
        }
    }

    fn report(rows: Vec<BenchRow>) -> BenchReport {
        BenchReport { rows, config: BenchConfig::default(), seed: 0 }
    }

    #[test]
    fn text_rows() {
        let s = emit_report(&report(vec![row("linear")]), ReportFormat::Text, true).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "linear  1 / 2 | 0  0.40s");
        let s = emit_report(&report(vec![row("linear")]), ReportFormat::Text, false).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "linear  1 / 2 | 0");
    }

    #[test]
    fn empty_report_is_header_only() {
        let s = emit_report(&report(Vec::new()), ReportFormat::Text, false).unwrap();
        assert_eq!(s.lines().count(), 1);
        let c = emit_report(&report(Vec::new()), ReportFormat::Csv, false).unwrap();
        assert_eq!(c.lines().count(), 1);
    }

    #[test]
    fn json_drops_time_without_timing() {
        let s = emit_report(&report(vec![row("linear")]), ReportFormat::Json, false).unwrap();
        assert!(!s.contains("wall_time_seconds"));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["rows"][0]["verified"], 2);
    }
}
