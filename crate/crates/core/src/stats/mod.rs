//! Reading-accuracy statistics: one-way ANOVA across character gaps and
//! Bonferroni/Holm corrected pairwise comparisons against a reference gap.

mod data;
mod report;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::{read_raw_csv, read_summary_csv, reading_study_summaries, READING_STUDY_CSV};
pub use report::{StatsReport, DEFAULT_ALPHA};
pub use special::{f_sf, t_sf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("mean square error is zero; F is undefined")]
    DegenerateData,
    #[error("need at least 2 treatments, got {0}")]
    TooFewGroups(usize),
    #[error("treatment {treatment_ms} ms needs at least 2 observations, got {n}")]
    TooFewObservations { treatment_ms: u64, n: usize },
    #[error("invalid summary for {treatment_ms} ms: {reason}")]
    InvalidSummary {
        treatment_ms: u64,
        reason: &'static str,
    },
    #[error("treatment {0} ms appears more than once")]
    DuplicateTreatment(u64),
    #[error("reference treatment {0} ms not present")]
    UnknownReference(u64),
    #[error("no ratings")]
    EmptyRatings,
    #[error("rating {0} outside 0..=10")]
    RatingOutOfRange(f64),
    #[error("csv: {0}")]
    Csv(String),
}

/// Per-treatment accuracy summary (percentages).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub treatment_ms: u64,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl SampleSummary {
    pub fn validate(&self) -> Result<(), StatsError> {
        let invalid = |reason| StatsError::InvalidSummary {
            treatment_ms: self.treatment_ms,
            reason,
        };
        if self.n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        if !self.sd.is_finite() || self.sd < 0.0 {
            return Err(invalid("sd must be finite and non-negative"));
        }
        if !(0.0..=100.0).contains(&self.mean) {
            return Err(invalid("mean must lie in 0..=100"));
        }
        Ok(())
    }
}

/// Raw observations for one treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGroup {
    pub treatment_ms: u64,
    pub values: Vec<f64>,
}

impl RawGroup {
    pub fn new(treatment_ms: u64, values: Vec<f64>) -> Self {
        RawGroup {
            treatment_ms,
            values,
        }
    }

    /// Mean and sample standard deviation (n - 1 denominator).
    pub fn summarize(&self) -> Result<SampleSummary, StatsError> {
        let n = self.values.len();
        if n < 2 {
            return Err(StatsError::TooFewObservations {
                treatment_ms: self.treatment_ms,
                n,
            });
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        let ss = self.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        Ok(SampleSummary {
            treatment_ms: self.treatment_ms,
            mean,
            sd: (ss / (n - 1) as f64).sqrt(),
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub ss_treatment: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub df_treatment: usize,
    pub df_error: usize,
    pub ms_treatment: f64,
    pub ms_error: f64,
    pub f_stat: f64,
    pub p_value: f64,
}

fn check_distinct(treatments: impl Iterator<Item = u64>) -> Result<(), StatsError> {
    let mut seen = std::collections::HashSet::new();
    for t in treatments {
        if !seen.insert(t) {
            return Err(StatsError::DuplicateTreatment(t));
        }
    }
    Ok(())
}

fn finish_anova(
    ss_treatment: f64,
    ss_error: f64,
    k: usize,
    n_total: usize,
    scale: f64,
) -> Result<AnovaResult, StatsError> {
    let df_treatment = k - 1;
    let df_error = n_total - k;
    let ms_treatment = ss_treatment / df_treatment as f64;
    let ms_error = ss_error / df_error as f64;
    // relative check so rounding residue in all-constant data still counts as zero
    if ss_error.is_nan() || ss_error <= 1e-12 * scale {
        return Err(StatsError::DegenerateData);
    }
    let f_stat = ms_treatment / ms_error;
    Ok(AnovaResult {
        ss_treatment,
        ss_error,
        ss_total: ss_treatment + ss_error,
        df_treatment,
        df_error,
        ms_treatment,
        ms_error,
        f_stat,
        p_value: f_sf(f_stat, df_treatment as f64, df_error as f64),
    })
}

/// One-way ANOVA from per-group mean, sample SD and size.
pub fn anova_from_summary(groups: &[SampleSummary]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        g.validate()?;
    }
    check_distinct(groups.iter().map(|g| g.treatment_ms))?;
    let n_total: usize = groups.iter().map(|g| g.n).sum();
    let grand_mean = groups.iter().map(|g| g.n as f64 * g.mean).sum::<f64>() / n_total as f64;
    let ss_treatment = groups
        .iter()
        .map(|g| g.n as f64 * (g.mean - grand_mean).powi(2))
        .sum::<f64>();
    let ss_error = groups
        .iter()
        .map(|g| (g.n - 1) as f64 * g.sd * g.sd)
        .sum::<f64>();
    let scale = groups
        .iter()
        .map(|g| g.n as f64 * g.mean * g.mean)
        .sum::<f64>();
    finish_anova(ss_treatment, ss_error, groups.len(), n_total, scale)
}

/// One-way ANOVA directly from observations.
pub fn anova_from_raw(groups: &[RawGroup]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::TooFewObservations {
                treatment_ms: g.treatment_ms,
                n: g.values.len(),
            });
        }
    }
    check_distinct(groups.iter().map(|g| g.treatment_ms))?;
    let n_total: usize = groups.iter().map(|g| g.values.len()).sum();
    let grand_mean = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n_total as f64;
    let mut ss_treatment = 0.0;
    let mut ss_error = 0.0;
    for g in groups {
        let n = g.values.len() as f64;
        let mean = g.values.iter().sum::<f64>() / n;
        ss_treatment += n * (mean - grand_mean).powi(2);
        ss_error += g.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    }
    let scale = groups
        .iter()
        .flat_map(|g| &g.values)
        .map(|x| x * x)
        .sum::<f64>();
    finish_anova(ss_treatment, ss_error, groups.len(), n_total, scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Significant,
    Insignificant,
}

impl Verdict {
    fn from_reject(reject: bool) -> Self {
        if reject {
            Verdict::Significant
        } else {
            Verdict::Insignificant
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Significant => "Significant",
            Verdict::Insignificant => "Insignificant",
        })
    }
}

/// Which comparisons the multiple-comparison correction is spread over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every pair of treatments, k(k-1)/2 comparisons.
    #[default]
    AllPairs,
    /// Only the k-1 pairs that involve the reference.
    SelectedPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub pair: (u64, u64),
    pub t_stat: f64,
    pub raw_p: f64,
    pub bonferroni: Verdict,
    pub holm: Verdict,
    pub family_size: usize,
}

/// `|mean_a - mean_b| / sqrt(ms_error (1/n_a + 1/n_b))` and its two-sided p
/// on `df_error` degrees of freedom.
pub fn pair_statistic(a: &SampleSummary, b: &SampleSummary, anova: &AnovaResult) -> (f64, f64) {
    let se = (anova.ms_error * (1.0 / a.n as f64 + 1.0 / b.n as f64)).sqrt();
    let t = (a.mean - b.mean).abs() / se;
    (t, t_sf(t, anova.df_error as f64))
}

/// Reject iff `p < alpha / m`.
pub fn bonferroni_reject(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len() as f64;
    p_values.iter().map(|&p| p < alpha / m).collect()
}

/// Holm step-down: walk p-values in ascending order, rejecting the j-th
/// (1-based) while `p < alpha / (m - j + 1)`; stop at the first failure.
pub fn holm_reject(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] < alpha / (m - rank) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Compare every treatment with `reference_ms`. Results come back in input
/// order with the reference itself left out.
pub fn pairwise_vs_reference(
    groups: &[SampleSummary],
    reference_ms: u64,
    alpha: f64,
    family: Family,
) -> Result<Vec<PairwiseResult>, StatsError> {
    let anova = anova_from_summary(groups)?;
    let ref_idx = groups
        .iter()
        .position(|g| g.treatment_ms == reference_ms)
        .ok_or(StatsError::UnknownReference(reference_ms))?;

    // (i, j) index pairs making up the correction family
    let family_pairs: Vec<(usize, usize)> = match family {
        Family::AllPairs => (0..groups.len())
            .flat_map(|i| ((i + 1)..groups.len()).map(move |j| (i, j)))
            .collect(),
        Family::SelectedPairs => (0..groups.len())
            .filter(|&i| i != ref_idx)
            .map(|i| (ref_idx.min(i), ref_idx.max(i)))
            .collect(),
    };
    let stats: Vec<(f64, f64)> = family_pairs
        .iter()
        .map(|&(i, j)| pair_statistic(&groups[i], &groups[j], &anova))
        .collect();
    let p_values: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let bonf = bonferroni_reject(&p_values, alpha);
    let holm = holm_reject(&p_values, alpha);

    let mut out = Vec::with_capacity(groups.len() - 1);
    for (i, g) in groups.iter().enumerate() {
        if i == ref_idx {
            continue;
        }
        let key = (ref_idx.min(i), ref_idx.max(i));
        let f = family_pairs
            .iter()
            .position(|&p| p == key)
            .expect("every reference pair is in the family");
        out.push(PairwiseResult {
            pair: (reference_ms, g.treatment_ms),
            t_stat: stats[f].0,
            raw_p: stats[f].1,
            bonferroni: Verdict::from_reject(bonf[f]),
            holm: Verdict::from_reject(holm[f]),
            family_size: family_pairs.len(),
        });
    }
    Ok(out)
}

/// Treatment with the highest mean accuracy; ties go to the smaller SD,
/// then to the earlier entry.
pub fn best_treatment(groups: &[SampleSummary]) -> Option<u64> {
    groups
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            b.mean
                .total_cmp(&a.mean)
                .then(a.sd.total_cmp(&b.sd))
                .then(ia.cmp(ib))
        })
        .map(|(_, g)| g.treatment_ms)
}

/// Arithmetic mean of 0..=10 usability ratings.
pub fn usability_mean(ratings: &[f64]) -> Result<f64, StatsError> {
    if ratings.is_empty() {
        return Err(StatsError::EmptyRatings);
    }
    if let Some(&bad) = ratings.iter().find(|r| !(0.0..=10.0).contains(*r)) {
        return Err(StatsError::RatingOutOfRange(bad));
    }
    Ok(ratings.iter().sum::<f64>() / ratings.len() as f64)
}
