//! CSV and aligned-text rendering for stats, curves, and evaluation reports.
//!
//! CSV carries full float precision for machine consumption; the text tables
//! round the way the numbers are usually read (rates to two decimals,
//! distances and errors to three).

use slicecal_core::curves::{CalibrationCurve, PrecisionCurve, PrecisionVector, ANCHORS};
use slicecal_core::eval::{EceReport, PrecisionReport, UtilityReport};
use slicecal_core::recalibrator::LossPoint;
use slicecal_core::records::CorpusStats;

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Renders rows as fixed-width columns with a header rule.
fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: Vec<String>| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&render(headers.iter().map(|h| h.to_string()).collect()));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&render(row.clone()));
        out.push('\n');
    }
    out
}

fn pct(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

pub fn stats_csv(stats: &CorpusStats) -> String {
    let mut out = String::from("domain,count,accuracy,mean_confidence\n");
    for (domain, s) in &stats.domains {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(domain),
            s.count,
            s.accuracy,
            s.mean_confidence
        ));
    }
    out.push_str(&format!(
        "TOTAL,{},{},{}\n",
        stats.total, stats.accuracy, stats.mean_confidence
    ));
    out
}

pub fn stats_text(stats: &CorpusStats) -> String {
    let mut rows: Vec<Vec<String>> = stats
        .domains
        .iter()
        .map(|(domain, s)| {
            vec![
                domain.clone(),
                s.count.to_string(),
                format!("{:.3}", s.accuracy),
                format!("{:.3}", s.mean_confidence),
            ]
        })
        .collect();
    rows.push(vec![
        "TOTAL".to_string(),
        stats.total.to_string(),
        format!("{:.3}", stats.accuracy),
        format!("{:.3}", stats.mean_confidence),
    ]);
    text_table(&["domain", "count", "accuracy", "mean_conf"], &rows)
}

pub fn precision_report_csv(report: &PrecisionReport) -> String {
    let mut out = String::from("method,target,success_rate,mean_recall,mean_l2\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&row.method),
            row.target,
            row.success_rate,
            row.mean_recall,
            row.mean_l2
        ));
    }
    out
}

pub fn precision_report_text(report: &PrecisionReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            vec![
                row.method.clone(),
                format!("{:.2}", row.target),
                format!("{:.2}", row.success_rate),
                format!("{:.2}", row.mean_recall),
                format!("{:.3}", row.mean_l2),
            ]
        })
        .collect();
    text_table(&["method", "target", "success", "recall", "l2"], &rows)
}

pub fn ece_report_csv(report: &EceReport) -> String {
    let mut out = String::from("method,mean_ece,win_pct,tie_pct,lose_pct\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&row.method),
            row.mean_ece,
            row.win_pct.map_or_else(String::new, |v| v.to_string()),
            row.tie_pct.map_or_else(String::new, |v| v.to_string()),
            row.lose_pct.map_or_else(String::new, |v| v.to_string()),
        ));
    }
    out
}

pub fn ece_report_text(report: &EceReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            vec![
                row.method.clone(),
                format!("{:.3}", row.mean_ece),
                pct(row.win_pct),
                pct(row.tie_pct),
                pct(row.lose_pct),
            ]
        })
        .collect();
    let mut out = format!("pairwise win/tie/lose vs {}\n", report.reference);
    out.push_str(&text_table(
        &["method", "ece", "win%", "tie%", "lose%"],
        &rows,
    ));
    out
}

pub fn utility_report_csv(report: &UtilityReport) -> String {
    let mut out = String::from("method,cost,mean_utility,win_pct,tie_pct,lose_pct\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&row.method),
            row.cost,
            row.mean_utility,
            row.win_pct.map_or_else(String::new, |v| v.to_string()),
            row.tie_pct.map_or_else(String::new, |v| v.to_string()),
            row.lose_pct.map_or_else(String::new, |v| v.to_string()),
        ));
    }
    out
}

pub fn utility_report_text(report: &UtilityReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            vec![
                row.method.clone(),
                format!("{:.2}", row.cost),
                format!("{:.3}", row.mean_utility),
                pct(row.win_pct),
                pct(row.tie_pct),
                pct(row.lose_pct),
            ]
        })
        .collect();
    text_table(
        &["method", "cost", "utility", "win%", "tie%", "lose%"],
        &rows,
    )
}

/// CSV of per-task precision vectors: one row per task, one column per
/// anchor threshold. Baselines and the recalibrator share this format.
pub fn vectors_csv(vectors: &[PrecisionVector]) -> String {
    let mut out = String::from("task");
    for anchor in ANCHORS {
        out.push_str(&format!(",prec@{anchor}"));
    }
    out.push('\n');
    for (i, v) in vectors.iter().enumerate() {
        out.push_str(&i.to_string());
        for value in v.values() {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    out
}

/// CSV of an exact precision curve: `threshold,precision` per breakpoint,
/// descending.
pub fn precision_curve_csv(curve: &PrecisionCurve) -> String {
    let mut out = String::from("threshold,precision\n");
    for (t, p) in curve.points() {
        out.push_str(&format!("{t},{p}\n"));
    }
    out
}

/// CSV of a calibration curve: one row per bin.
pub fn calibration_csv(curve: &CalibrationCurve) -> String {
    let mut out = String::from("lower,upper,count,mean_confidence,accuracy\n");
    for bin in curve.bins() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            bin.lower, bin.upper, bin.count, bin.mean_confidence, bin.accuracy
        ));
    }
    out
}

pub fn train_log_csv(log: &[LossPoint]) -> String {
    let mut out = String::from("step,loss\n");
    for point in log {
        out.push_str(&format!("{},{}\n", point.step, point.loss));
    }
    out
}

/// CSV for the few-shot-size ablation: success and recall per (k, target).
pub fn ablation_csv(rows: &[(usize, f64, f64, f64)]) -> String {
    let mut out = String::from("k,target,success_rate,mean_recall\n");
    for (k, target, success, recall) in rows {
        out.push_str(&format!("{k},{target},{success},{recall}\n"));
    }
    out
}

pub fn ablation_text(rows: &[(usize, f64, f64, f64)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(k, target, success, recall)| {
            vec![
                k.to_string(),
                format!("{target:.2}"),
                format!("{success:.2}"),
                format!("{recall:.2}"),
            ]
        })
        .collect();
    text_table(&["k", "target", "success", "recall"], &body)
}
