use std::fmt::Write;

/// One row of the summary results table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub input_type: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub hallucination_rate: f64,
}

const HEADERS: [&str; 6] = [
    "Method",
    "Input Type",
    "Precision",
    "Recall",
    "F1 Score",
    "Hallucination Rate",
];

/// Fixed-width text table; metric values are printed to four decimals.
pub fn render_table(rows: &[TableRow]) -> String {
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                r.input_type.clone(),
                format!("{:.4}", r.precision),
                format!("{:.4}", r.recall),
                format!("{:.4}", r.f1),
                format!("{:.4}", r.hallucination_rate),
            ]
        })
        .collect();
    let mut widths = HEADERS.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }

    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let parts: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(k, (c, w))| {
                if k < 2 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &HEADERS);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in &cells {
        line(
            &mut out,
            &row.iter().map(String::as_str).collect::<Vec<_>>(),
        );
    }
    out
}
