//! CSV emission shaped like the paper's result tables: metric grids
//! (Tables 2/4/8), pairwise significance (Table 6), and the retrieval-score
//! histograms (Figures 4/5).

use std::path::Path;

use crate::analysis::{PairedTestResult, ScoreDistribution, UniquenessHistogram};
use crate::error::{Result, ToxgenError};
use crate::evaluation::MetricReport;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// Metric grid with one row per run: the shape shared by the main results,
/// ablation, and KG-variant tables. BERTScore is scaled x100 for table
/// parity; a missing BERTScore fails loudly rather than emitting a hole.
pub fn write_metrics_table(path: &Path, rows: &[(String, MetricReport)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["run", "max_bleu", "rouge_l_f1", "bert_score_f1", "n", "n_skipped"])?;
    for (name, report) in rows {
        let bs = report.mean_bert_score_f1.ok_or_else(|| {
            ToxgenError::Precondition(format!("run '{name}' has no BERTScore column"))
        })?;
        w.write_record([
            name.clone(),
            format!("{:.2}", report.mean_max_bleu),
            format!("{:.2}", report.mean_rouge_l_f1 * 100.0),
            format!("{:.2}", bs * 100.0),
            report.n_evaluated.to_string(),
            report.n_skipped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pairwise effect sizes and p-values with significance stars.
pub fn write_significance_table(
    path: &Path,
    rows: &[(String, String, PairedTestResult)],
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["run_a", "run_b", "t", "p", "effect_size", "n", "stars"])?;
    for (a, b, r) in rows {
        w.write_record([
            a.clone(),
            b.clone(),
            format!("{:.4}", r.t),
            format!("{:.6}", r.p),
            format!("{:.4}", r.effect_size),
            r.n.to_string(),
            // "ns" keeps the cell non-empty for non-significant rows.
            match r.stars() {
                "" => "ns".to_string(),
                s => s.to_string(),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Raw-score histogram plus the max-score audit fraction.
pub fn write_score_distribution(path: &Path, dist: &ScoreDistribution) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin", "proportion"])?;
    for (label, p) in &dist.histogram.bins {
        w.write_record([label.clone(), format!("{p:.6}")])?;
    }
    w.write_record([
        "fraction_max_ge_5".to_string(),
        format!("{:.6}", dist.fraction_max_ge_5),
    ])?;
    w.flush()?;
    Ok(())
}

/// Distinct-score-count histogram over the corpus.
pub fn write_uniqueness_histogram(path: &Path, hist: &UniquenessHistogram) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["n_unique", "n_samples"])?;
    for (u, n) in &hist.counts {
        w.write_record([u.to_string(), n.to_string()])?;
    }
    if hist.n_excluded > 0 {
        w.write_record(["excluded_shortfall".to_string(), hist.n_excluded.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
