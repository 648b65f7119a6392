use std::fmt::Write as _;

use super::{ExplanationReport, RejectionCurve};
use crate::cola::Constitution;
use crate::objectives::format_number;

/// Aligned table of settings and scores followed by group impacts.
pub fn explanation_text(c: &Constitution, report: &ExplanationReport, threshold: f64) -> String {
    let mut out = String::new();
    let width = report
        .scores
        .iter()
        .map(|(s, _)| s.to_string().len())
        .chain(std::iter::once("setting".len()))
        .max()
        .unwrap_or(7);
    let _ = writeln!(out, "{:<width$}  {:>10}  verdict", "setting", "score");
    for (s, score) in &report.scores {
        let verdict = if *score > threshold {
            "granted"
        } else {
            "denied"
        };
        let _ = writeln!(out, "{:<width$}  {:>10.6}  {verdict}", s.to_string(), score);
    }
    if !c.parameter_groups.is_empty() {
        let _ = writeln!(out, "\nimpact per parameter group");
        for g in &report.impacts {
            let _ = writeln!(out, "  {{{}}}  {:.6}", g.options.join(", "), g.impact);
        }
    }
    out
}

/// One row per setting: chosen options, score and granted flag.
pub fn explanation_csv(c: &Constitution, report: &ExplanationReport, threshold: f64) -> String {
    let mut out = String::new();
    for g in 0..c.parameter_groups.len() {
        let _ = write!(out, "group{},", g + 1);
    }
    out.push_str("score,granted\n");
    for (s, score) in &report.scores {
        for choice in s.choices() {
            let _ = write!(out, "{choice},");
        }
        let _ = writeln!(out, "{},{}", format_number(*score), *score > threshold);
    }
    out
}

/// Two columns: threshold and rejection rate.
pub fn rejection_csv(curve: &RejectionCurve) -> String {
    let mut out = String::from("threshold,rejection_rate\n");
    for (t, r) in curve.thresholds.iter().zip(&curve.rates) {
        let _ = writeln!(out, "{},{}", format_number(*t), format_number(*r));
    }
    out
}
