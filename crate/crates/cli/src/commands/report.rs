use anyhow::{Context, Result};
use webrec::eval::{render_table, TableRow};

use super::score::ScoreReport;
use crate::store::read_json;
use crate::{Outcome, ReportArgs, ReportFormat};

fn row(r: &ScoreReport) -> TableRow {
    TableRow {
        method: r.method.clone(),
        input_type: r.input_type.clone(),
        precision: r.report.summary.avg_precision,
        recall: r.report.summary.avg_recall,
        f1: r.report.summary.avg_f1,
        hallucination_rate: r.report.summary.hallucination_rate,
    }
}

pub fn render(reports: &[ScoreReport], format: ReportFormat) -> Result<String> {
    let rows: Vec<TableRow> = reports.iter().map(row).collect();
    Ok(match format {
        ReportFormat::Table => render_table(&rows),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "method",
                "input_type",
                "precision",
                "recall",
                "f1",
                "hallucination_rate",
            ])?;
            for r in &rows {
                w.write_record([
                    r.method.clone(),
                    r.input_type.clone(),
                    r.precision.to_string(),
                    r.recall.to_string(),
                    r.f1.to_string(),
                    r.hallucination_rate.to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner().context("flushing CSV")?)?
        }
        ReportFormat::Json => {
            let values: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "method": r.method,
                        "input_type": r.input_type,
                        "precision": r.precision,
                        "recall": r.recall,
                        "f1": r.f1,
                        "hallucination_rate": r.hallucination_rate,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&values)? + "\n"
        }
    })
}

pub fn run(args: &ReportArgs) -> Result<Outcome> {
    let reports = args
        .input
        .iter()
        .map(|p| read_json::<ScoreReport>(p))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", render(&reports, args.format)?);
    Ok(Outcome::Complete)
}
