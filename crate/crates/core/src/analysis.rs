//! Retrieval-score statistics, paired significance testing with effect
//! sizes, and inter-annotator agreement.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::embed::cosine;
use crate::error::{Result, ToxgenError};

/// How raw scores are bucketed for the distribution histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Equal-width bins `[start + i*width, start + (i+1)*width)`; the last
    /// bin is closed on the right.
    FixedBinsHalfopen {
        start: f64,
        width: f64,
        count: usize,
    },
    /// Bucket by value rounded to the nearest tenth.
    RoundNearestTenth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub binning: Binning,
    /// (label, proportion), proportions summing to 1.
    pub bins: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub histogram: ScoreHistogram,
    /// Fraction of samples whose maximum tuple score is at least 5
    /// (the large-KG audit statistic).
    pub fraction_max_ge_5: f64,
    pub n_samples: usize,
}

/// Histogram of raw retrieval scores pooled over samples, plus the
/// fraction-of-samples-with-max-score-at-least-5 audit number.
pub fn score_distribution(
    scores_per_sample: &[Vec<f64>],
    binning: &Binning,
) -> Result<ScoreDistribution> {
    let all: Vec<f64> = scores_per_sample.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(ToxgenError::Precondition(
            "score_distribution requires at least one score".into(),
        ));
    }
    let n_total = all.len() as f64;
    let bins: Vec<(String, f64)> = match binning {
        Binning::FixedBinsHalfopen { start, width, count } => {
            if *width <= 0.0 || *count == 0 {
                return Err(ToxgenError::Precondition(
                    "bins need positive width and count".into(),
                ));
            }
            let mut counts = vec![0usize; *count];
            for &s in &all {
                let i = ((s - start) / width).floor();
                let i = (i.max(0.0) as usize).min(count - 1);
                counts[i] += 1;
            }
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let lo = start + i as f64 * width;
                    let hi = lo + width;
                    let close = if i + 1 == *count { "]" } else { ")" };
                    (format!("[{lo:.3}, {hi:.3}{close}"), c as f64 / n_total)
                })
                .collect()
        }
        Binning::RoundNearestTenth => {
            let mut buckets: std::collections::BTreeMap<i64, usize> = Default::default();
            for &s in &all {
                *buckets.entry((s * 10.0).round() as i64).or_insert(0) += 1;
            }
            buckets
                .into_iter()
                .map(|(k, c)| (format!("{:.1}", k as f64 / 10.0), c as f64 / n_total))
                .collect()
        }
    };
    let with_scores = scores_per_sample.iter().filter(|s| !s.is_empty());
    let n_nonempty = with_scores.clone().count();
    let n_max_ge_5 = with_scores
        .filter(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) >= 5.0)
        .count();
    Ok(ScoreDistribution {
        histogram: ScoreHistogram {
            binning: binning.clone(),
            bins,
        },
        fraction_max_ge_5: n_max_ge_5 as f64 / n_nonempty.max(1) as f64,
        n_samples: scores_per_sample.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessHistogram {
    pub k: usize,
    /// (distinct-score count, number of samples).
    pub counts: Vec<(usize, usize)>,
    /// Samples excluded for not carrying exactly k scores.
    pub n_excluded: usize,
}

/// Per-sample count of distinct scores among its top-k list, histogrammed
/// over the corpus. Samples with a score-count other than k (retrieval
/// shortfall) are excluded and counted.
pub fn uniqueness_histogram(scores_per_sample: &[Vec<f64>], k: usize) -> UniquenessHistogram {
    let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
    let mut n_excluded = 0usize;
    for scores in scores_per_sample {
        if scores.len() != k {
            n_excluded += 1;
            continue;
        }
        let mut sorted: Vec<f64> = scores.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        *counts.entry(sorted.len()).or_insert(0) += 1;
    }
    UniquenessHistogram {
        k,
        counts: counts.into_iter().collect(),
        n_excluded,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub t: f64,
    pub p: f64,
    /// Paired Cohen's d: mean of differences over their sample std.
    pub effect_size: f64,
    pub n: usize,
    /// True when the differences had zero variance and t is undefined.
    pub degenerate: bool,
}

impl PairedTestResult {
    /// Significance stars: `**` for p <= 0.001, `*` for p <= 0.05.
    pub fn stars(&self) -> &'static str {
        if self.p <= 0.001 {
            "**"
        } else if self.p <= 0.05 {
            "*"
        } else {
            ""
        }
    }
}

/// Two-sided paired t-test with paired Cohen's d.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(ToxgenError::Precondition(format!(
            "paired test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(ToxgenError::Precondition(
            "paired test needs at least 2 pairs".into(),
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        // Constant differences: t undefined. Zero shift is a perfect null;
        // any nonzero constant shift is treated as maximally significant.
        return Ok(if mean == 0.0 {
            PairedTestResult {
                t: 0.0,
                p: 1.0,
                effect_size: 0.0,
                n,
                degenerate: true,
            }
        } else {
            PairedTestResult {
                t: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                p: 0.0,
                effect_size: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                n,
                degenerate: true,
            }
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| ToxgenError::Precondition(e.to_string()))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(PairedTestResult {
        t,
        p,
        effect_size: mean / sd,
        n,
        degenerate: false,
    })
}

/// Cosine similarity between two annotators' score vectors; `None` when a
/// vector is all zeros (agreement undefined).
pub fn annotator_agreement(scores_a: &[f64], scores_b: &[f64]) -> Result<Option<f64>> {
    if scores_a.len() != scores_b.len() {
        return Err(ToxgenError::Precondition(format!(
            "annotator vectors differ in length: {} vs {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    let zero = |v: &[f64]| v.iter().all(|&x| x == 0.0);
    if zero(scores_a) || zero(scores_b) {
        return Ok(None);
    }
    Ok(Some(cosine(scores_a, scores_b)))
}
