use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use webrec::annotations::{load_annotations, load_predictions, PageAnnotation, PagePrediction};
use webrec::eval::{aggregate_corpus, average_runs, page_metrics, CorpusReport, SkippedPage};

use crate::store::{write_atomic, write_json};
use crate::{Outcome, ScoreArgs};

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub method: String,
    pub input_type: String,
    pub runs: usize,
    #[serde(flatten)]
    pub report: CorpusReport,
}

/// Table labels for a predictions file, from its extractor and metadata.
pub fn labels(preds: &[PagePrediction]) -> (String, String) {
    let Some(first) = preds.first() else {
        return ("unknown".into(), "unknown".into());
    };
    let meta = first.meta();
    let field = |k: &str| meta.get(k).and_then(|v| v.as_str()).unwrap_or("");
    let method = match first.extractor() {
        "mdr" => "MDR".to_string(),
        "llm" => "LLM".to_string(),
        other => other.to_string(),
    };
    let input = match (
        first.extractor(),
        field("input_type"),
        field("representation_kind"),
    ) {
        ("mdr", "full_html", _) => "Full HTML",
        ("mdr", _, _) => "Slimmed HTML",
        (_, _, "slimmed_html") => "Slimmed HTML",
        (_, _, "hierarchical_json") => "Hierarchical JSON",
        (_, _, "flat_json") => "Flat JSON",
        (_, _, other) => other,
    };
    (method, input.to_string())
}

/// Scores one predictions file. Every gold page that cannot be scored is
/// listed in `skipped_pages` with its reason.
pub fn score_run(gold: &[PageAnnotation], preds: &[PagePrediction]) -> CorpusReport {
    let by_id: BTreeMap<&str, &PagePrediction> = preds.iter().map(|p| (p.page_id(), p)).collect();
    let gold_ids: BTreeMap<&str, &PageAnnotation> =
        gold.iter().map(|a| (a.page_id.as_str(), a)).collect();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut skip = |page_id: &str, reason: String| {
        log::warn!("skipping page {page_id}: {reason}");
        skipped.push(SkippedPage {
            page_id: page_id.to_string(),
            reason,
        });
    };
    for (id, ann) in &gold_ids {
        match by_id.get(id) {
            None => skip(id, "no prediction".into()),
            Some(PagePrediction::Unavailable { reason, .. }) => {
                skip(id, format!("prediction unavailable: {reason}"))
            }
            Some(PagePrediction::Available(set)) => match page_metrics(set, ann) {
                Ok(m) => results.push(m),
                Err(e) => skip(id, e.to_string()),
            },
        }
    }
    for id in by_id.keys().filter(|id| !gold_ids.contains_key(*id)) {
        skip(id, "no ground truth".into());
    }
    aggregate_corpus(results, skipped)
}

fn write_csv(path: &Path, report: &CorpusReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "page_id",
        "precision",
        "recall",
        "f1",
        "hallucination_event",
        "predicted",
        "gold",
    ])?;
    for m in &report.per_page {
        w.write_record([
            m.page_id.clone(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.hallucination_event.to_string(),
            m.predicted.to_string(),
            m.gold.to_string(),
        ])?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    write_atomic(path, &bytes)
}

pub fn run(args: &ScoreArgs) -> Result<Outcome> {
    let gold =
        load_annotations(&args.gold).with_context(|| format!("loading {}", args.gold.display()))?;
    let mut runs = Vec::new();
    let mut labelled: Option<(String, String)> = None;
    for path in &args.pred {
        let preds =
            load_predictions(path).with_context(|| format!("loading {}", path.display()))?;
        let l = labels(&preds);
        match &labelled {
            None => labelled = Some(l),
            Some(prev) if *prev != l => bail!(
                "{} holds {} / {} predictions, expected {} / {}",
                path.display(),
                l.0,
                l.1,
                prev.0,
                prev.1
            ),
            Some(_) => {}
        }
        runs.push(score_run(&gold, &preds));
    }
    let (method, input_type) = labelled.unwrap_or_default();
    let report = average_runs(&runs);
    let skipped = report.skipped_pages.len();
    let s = &report.summary;
    println!(
        "{method} / {input_type}: P {:.4}  R {:.4}  F1 {:.4}  HR {:.4}  ({} scored, {} skipped, {} run(s))",
        s.avg_precision,
        s.avg_recall,
        s.avg_f1,
        s.hallucination_rate,
        s.pages_scored,
        s.pages_skipped,
        runs.len()
    );
    if args.micro {
        let m = &report.micro;
        println!(
            "micro: P {:.4}  R {:.4}  F1 {:.4}",
            m.precision, m.recall, m.f1
        );
    }
    if let Some(csv) = &args.csv {
        write_csv(csv, &report)?;
    }
    write_json(
        &args.out,
        &ScoreReport {
            method,
            input_type,
            runs: runs.len(),
            report,
        },
    )?;
    Ok(Outcome::from_skipped(skipped))
}
