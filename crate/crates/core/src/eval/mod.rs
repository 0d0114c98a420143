//! Scoring predicted records against ground truth.

mod matching;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{PageAnnotation, PredictionSet};

pub use matching::{
    brute_force_matching, brute_force_matrix, optimal_matching, optimal_matching_matrix, overlap,
    Matching, OverlapMatrix, BRUTE_FORCE_LIMIT,
};
pub use report::{render_table, TableRow};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction for {predicted:?} scored against annotation for {annotated:?}")]
    PageMismatch {
        predicted: String,
        annotated: String,
    },
    #[error("matrix {rows}x{cols} exceeds brute-force limit {limit}")]
    SizeExceeded {
        rows: usize,
        cols: usize,
        limit: usize,
    },
    #[error("page {0:?} has no ground-truth records")]
    NoGroundTruth(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMetrics {
    pub page_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched_total: f64,
    pub hallucination_event: u8,
    pub predicted: usize,
    pub gold: usize,
    pub matching: Vec<(usize, usize)>,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// 1 if any predicted record is empty.
pub fn hallucination_event(pred: &PredictionSet) -> u8 {
    u8::from(pred.records.iter().any(|r| r.is_empty()))
}

pub fn page_metrics(pred: &PredictionSet, ann: &PageAnnotation) -> Result<PageMetrics, EvalError> {
    if pred.page_id != ann.page_id {
        return Err(EvalError::PageMismatch {
            predicted: pred.page_id.clone(),
            annotated: ann.page_id.clone(),
        });
    }
    if ann.records.is_empty() {
        return Err(EvalError::NoGroundTruth(ann.page_id.clone()));
    }
    let m = optimal_matching(&pred.records, &ann.records);
    let precision = if pred.records.is_empty() {
        0.0
    } else {
        m.matched_total / pred.records.len() as f64
    };
    let recall = m.matched_total / ann.records.len() as f64;
    Ok(PageMetrics {
        page_id: pred.page_id.clone(),
        precision,
        recall,
        f1: f1_score(precision, recall),
        matched_total: m.matched_total,
        hallucination_event: hallucination_event(pred),
        predicted: pred.records.len(),
        gold: ann.records.len(),
        matching: m.pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPage {
    pub page_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
    pub hallucination_rate: f64,
    pub pages_scored: usize,
    pub pages_skipped: usize,
}

/// Metrics pooled over all pages before dividing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MicroMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched_total: f64,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub per_page: Vec<PageMetrics>,
    pub summary: CorpusSummary,
    pub skipped_pages: Vec<SkippedPage>,
    pub micro: MicroMetrics,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Macro-averages page metrics. Pages are ordered by `page_id` first so the
/// result does not depend on scoring order.
pub fn aggregate_corpus(
    mut results: Vec<PageMetrics>,
    mut skipped: Vec<SkippedPage>,
) -> CorpusReport {
    results.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    skipped.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    let summary = CorpusSummary {
        avg_precision: mean(results.iter().map(|m| m.precision)),
        avg_recall: mean(results.iter().map(|m| m.recall)),
        avg_f1: mean(results.iter().map(|m| m.f1)),
        hallucination_rate: mean(results.iter().map(|m| f64::from(m.hallucination_event))),
        pages_scored: results.len(),
        pages_skipped: skipped.len(),
    };
    let matched_total: f64 = results.iter().map(|m| m.matched_total).sum();
    let predicted: usize = results.iter().map(|m| m.predicted).sum();
    let gold: usize = results.iter().map(|m| m.gold).sum();
    let precision = if predicted == 0 {
        0.0
    } else {
        matched_total / predicted as f64
    };
    let recall = if gold == 0 {
        0.0
    } else {
        matched_total / gold as f64
    };
    CorpusReport {
        per_page: results,
        summary,
        skipped_pages: skipped,
        micro: MicroMetrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            matched_total,
            predicted,
            gold,
        },
    }
}

/// Averages several runs of the same extractor over the same corpus.
///
/// Summary and micro fields are means of the per-run values. Per-page rows
/// are averaged over the runs in which the page was scored; counts and the
/// matching are taken from the first such run.
pub fn average_runs(runs: &[CorpusReport]) -> CorpusReport {
    match runs {
        [] => return CorpusReport::default(),
        [one] => return one.clone(),
        _ => {}
    }
    let n = runs.len() as f64;
    let avg = |f: &dyn Fn(&CorpusReport) -> f64| runs.iter().map(f).sum::<f64>() / n;

    let mut per_page: Vec<PageMetrics> = Vec::new();
    let mut by_id: std::collections::BTreeMap<&str, Vec<&PageMetrics>> = Default::default();
    for run in runs {
        for m in &run.per_page {
            by_id.entry(&m.page_id).or_default().push(m);
        }
    }
    for ms in by_id.values() {
        let k = ms.len() as f64;
        let mut first = ms[0].clone();
        first.precision = ms.iter().map(|m| m.precision).sum::<f64>() / k;
        first.recall = ms.iter().map(|m| m.recall).sum::<f64>() / k;
        first.f1 = ms.iter().map(|m| m.f1).sum::<f64>() / k;
        first.matched_total = ms.iter().map(|m| m.matched_total).sum::<f64>() / k;
        per_page.push(first);
    }
    let mut skipped: Vec<SkippedPage> = runs
        .iter()
        .flat_map(|r| r.skipped_pages.iter().cloned())
        .collect();
    skipped.sort_by(|a, b| (&a.page_id, &a.reason).cmp(&(&b.page_id, &b.reason)));
    skipped.dedup();

    CorpusReport {
        summary: CorpusSummary {
            avg_precision: avg(&|r| r.summary.avg_precision),
            avg_recall: avg(&|r| r.summary.avg_recall),
            avg_f1: avg(&|r| r.summary.avg_f1),
            hallucination_rate: avg(&|r| r.summary.hallucination_rate),
            pages_scored: runs[0].summary.pages_scored,
            pages_skipped: runs[0].summary.pages_skipped,
        },
        micro: MicroMetrics {
            precision: avg(&|r| r.micro.precision),
            recall: avg(&|r| r.micro.recall),
            f1: avg(&|r| r.micro.f1),
            matched_total: avg(&|r| r.micro.matched_total),
            predicted: runs[0].micro.predicted,
            gold: runs[0].micro.gold,
        },
        per_page,
        skipped_pages: skipped,
    }
}
