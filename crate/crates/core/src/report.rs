//! CSV and markdown views of a [`DesignReport`].
//!
//! CSV numbers use Rust's shortest round-trip formatting, so the files are
//! byte-identical whenever the underlying values are. Infinite condition
//! numbers are written as `inf`.

use std::fmt::Write as _;

use crate::design::DesignReport;

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v}")
    }
}

fn rounded(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        num(v)
    }
}

/// Columns `beta,train_err,val_err,objective`, one row per scale factor.
pub fn scale_csv(report: &DesignReport) -> String {
    let mut out = String::from("beta,train_err,val_err,objective\n");
    for r in &report.scale {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(r.beta),
            num(r.train_error),
            num(r.validation_error),
            num(r.objective)
        );
    }
    out
}

/// One row per proportioning iteration: hidden widths then condition numbers.
pub fn condition_csv(report: &DesignReport) -> String {
    let layers = report
        .proportion
        .iter()
        .map(|r| r.condition_numbers.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("iteration");
    for i in 1..layers {
        let _ = write!(out, ",n_{i}");
    }
    for i in 1..=layers {
        let _ = write!(out, ",kappa_{i}");
    }
    out.push('\n');
    for r in &report.proportion {
        out.push_str(&r.iteration.to_string());
        for w in &r.widths {
            let _ = write!(out, ",{w}");
        }
        for k in &r.condition_numbers {
            let _ = write!(out, ",{}", num(*k));
        }
        out.push('\n');
    }
    out
}

/// One row per (round, layer) of the squeeze log.
pub fn squeeze_csv(report: &DesignReport) -> String {
    let mut out = String::from(
        "round,layer,width_before,width_after,kappa_before,kappa_after,removed,flagged,err_after_squeeze,err_after_retrain\n",
    );
    for round in &report.squeeze {
        for l in &round.layers {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                round.round,
                l.layer + 1,
                l.width_before,
                l.width_before - l.removed.len(),
                num(l.kappa_before),
                num(l.kappa_after),
                l.removed.len(),
                l.flagged,
                round.error_after_squeeze.map(num).unwrap_or_default(),
                round.error_after_retrain.map(num).unwrap_or_default(),
            );
        }
    }
    out
}

/// Per-layer widths and condition numbers of the first and last
/// proportioning iterations.
pub fn proportion_markdown(report: &DesignReport, output_width: usize) -> String {
    let (Some(first), Some(last)) = (report.proportion.first(), report.proportion.last()) else {
        return String::new();
    };
    let mut out = String::from(
        "| Layer | Initial n | Initial kappa | Final n | Final kappa |\n|---:|---:|---:|---:|---:|\n",
    );
    let width_at = |r: &crate::design::ProportionIteration, i: usize| {
        r.widths.get(i).copied().unwrap_or(output_width)
    };
    for i in 0..first.condition_numbers.len() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            width_at(first, i),
            rounded(first.condition_numbers[i], 0),
            width_at(last, i),
            rounded(last.condition_numbers.get(i).copied().unwrap_or(f64::NAN), 0)
        );
    }
    out
}

/// The scale-search table with the chosen factor in bold.
pub fn scale_markdown(report: &DesignReport) -> String {
    let mut out = String::from("| beta | train err | val err | 2 val - train |\n|:-:|:-:|:-:|--:|\n");
    for r in &report.scale {
        let objective = rounded(r.objective, 2);
        let objective = if report.chosen_beta == Some(r.beta) {
            format!("**{objective}**")
        } else {
            objective
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            rounded(r.beta, 2),
            rounded(r.train_error, 2),
            rounded(r.validation_error, 2),
            objective
        );
    }
    out
}

/// Hidden widths per squeeze round (one column per round, starting with the
/// input network) and the evaluation accuracy after each round.
pub fn squeeze_markdown(report: &DesignReport) -> String {
    let Some(first) = report.squeeze.first() else {
        return String::new();
    };
    let mut columns = vec![first.widths_before.clone()];
    columns.extend(report.squeeze.iter().map(|r| r.widths_after.clone()));
    let mut accuracy = vec![report.error_before_squeeze];
    accuracy.extend(report.squeeze.iter().map(|r| r.error_after_retrain));

    let mut out = String::from("| Layer |");
    for c in 0..columns.len() {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---:|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for layer in 0..first.widths_before.len() {
        let _ = write!(out, "| {} |", layer + 1);
        for c in &columns {
            let _ = write!(out, " {} |", c[layer]);
        }
        out.push('\n');
    }
    out.push_str("| Accuracy (%) |");
    for a in accuracy {
        let cell = a.map(|e| rounded(100.0 - e, 2)).unwrap_or_else(|| "-".into());
        let _ = write!(out, " {cell} |");
    }
    out.push('\n');
    out
}

/// Horizontal per-layer table of widths and condition numbers.
pub fn layer_markdown(widths: &[usize], kappas: &[f64]) -> String {
    let mut out = String::from("| Layer |");
    for i in 1..=widths.len() {
        let _ = write!(out, " {i} |");
    }
    out.push_str("\n|:--|");
    out.push_str(&"--:|".repeat(widths.len()));
    out.push_str("\n| n |");
    for w in widths {
        let _ = write!(out, " {w} |");
    }
    out.push_str("\n| kappa |");
    for k in kappas {
        let _ = write!(out, " {} |", rounded(*k, 1));
    }
    out.push('\n');
    out
}
