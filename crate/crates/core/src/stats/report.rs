use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    anova_from_summary, best_treatment, pairwise_vs_reference, AnovaResult, Family, PairwiseResult,
    SampleSummary, StatsError,
};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Accuracy summaries, the ANOVA table and the pairwise comparisons.
/// ANOVA and pairwise parts are `None` when there are fewer than two
/// treatments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub summaries: Vec<SampleSummary>,
    pub anova: Option<AnovaResult>,
    pub reference_ms: Option<u64>,
    pub alpha: f64,
    pub family: Family,
    pub pairwise: Option<Vec<PairwiseResult>>,
}

impl StatsReport {
    /// `reference_ms` defaults to the most accurate treatment.
    pub fn build(
        summaries: Vec<SampleSummary>,
        reference_ms: Option<u64>,
        alpha: f64,
        family: Family,
    ) -> Result<Self, StatsError> {
        for s in &summaries {
            s.validate()?;
        }
        let mut report = StatsReport {
            summaries,
            anova: None,
            reference_ms: None,
            alpha,
            family,
            pairwise: None,
        };
        if report.summaries.len() < 2 {
            return Ok(report);
        }
        report.anova = Some(anova_from_summary(&report.summaries)?);
        let reference = match reference_ms {
            Some(r) => r,
            None => best_treatment(&report.summaries).expect("non-empty"),
        };
        report.pairwise = Some(pairwise_vs_reference(
            &report.summaries,
            reference,
            alpha,
            family,
        )?);
        report.reference_ms = Some(reference);
        Ok(report)
    }

    /// Fixed-precision plain text: SS and MS to 2 decimals, F to 4.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Reading accuracy by character gap");
        let _ = writeln!(
            out,
            "{:>8}  {:>8}  {:>8}  {:>4}",
            "gap_ms", "mean_pct", "sd_pct", "n"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:>8}  {:>8.2}  {:>8.2}  {:>4}",
                s.treatment_ms, s.mean, s.sd, s.n
            );
        }
        let _ = writeln!(out);
        let Some(a) = &self.anova else {
            let _ = writeln!(out, "One-way ANOVA: unavailable (need at least 2 gaps)");
            return out;
        };
        let _ = writeln!(out, "One-way ANOVA");
        let _ = writeln!(
            out,
            "{:<9}  {:>12}  {:>3}  {:>10}  {:>10}  {:>10}",
            "source", "ss", "df", "ms", "F", "p"
        );
        let _ = writeln!(
            out,
            "{:<9}  {:>12.2}  {:>3}  {:>10.2}  {:>10.4}  {:>10.4e}",
            "treatment", a.ss_treatment, a.df_treatment, a.ms_treatment, a.f_stat, a.p_value
        );
        let _ = writeln!(
            out,
            "{:<9}  {:>12.2}  {:>3}  {:>10.2}",
            "error", a.ss_error, a.df_error, a.ms_error
        );
        let _ = writeln!(
            out,
            "{:<9}  {:>12.2}  {:>3}",
            "total",
            a.ss_total,
            a.df_treatment + a.df_error
        );
        let _ = writeln!(out);
        if let (Some(reference), Some(pairs)) = (self.reference_ms, &self.pairwise) {
            let family_size = pairs.first().map_or(0, |p| p.family_size);
            let _ = writeln!(
                out,
                "Pairwise vs {reference} ms (alpha {}, family size {family_size})",
                self.alpha
            );
            let _ = writeln!(
                out,
                "{:<14}  {:>6}  {:>10}  {:<13}  {:<13}",
                "pair", "t", "raw_p", "bonferroni", "holm"
            );
            for p in pairs {
                let _ = writeln!(
                    out,
                    "{:<14}  {:>6.2}  {:>10.4e}  {:<13}  {:<13}",
                    format!("{} vs {}", p.pair.0, p.pair.1),
                    p.t_stat,
                    p.raw_p,
                    p.bonferroni.to_string(),
                    p.holm.to_string()
                );
            }
        }
        out
    }
}
