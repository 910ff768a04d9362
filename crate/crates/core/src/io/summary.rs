use std::path::Path;

use super::{format_f64, write_csv};
use crate::error::Result;
use crate::summarize::{PosteriorSummary, SpatialCurve};

/// `node,inclusion_prob,selected[,eta_star]`, one row per node.
pub fn write_selection_csv(path: &Path, summary: &PosteriorSummary, eta_star: Option<&[bool]>) -> Result<()> {
    let mut head = ["node", "inclusion_prob", "selected"].map(String::from).to_vec();
    if eta_star.is_some() {
        head.push("eta_star".into());
    }
    let rows = summary.inclusion_prob.iter().enumerate().map(|(v, &p)| {
        let mut row =
            vec![(v + 1).to_string(), format_f64(p), u8::from(summary.selection.selected.contains(&v)).to_string()];
        if let Some(eta) = eta_star {
            row.push(u8::from(eta[v]).to_string());
        }
        row
    });
    write_csv(path, Some(&head), rows)
}

/// Plot-ready curve rows. Dropped bins appear with `pairs < 2` and empty
/// correlation fields.
pub fn write_curve_csv(path: &Path, curve: &SpatialCurve) -> Result<()> {
    let head = ["lower", "upper", "midpoint", "pairs", "correlation", "reference"].map(String::from);
    let mut rows: Vec<(f64, Vec<String>)> = curve
        .bins
        .iter()
        .map(|b| {
            (
                b.lower,
                vec![
                    format_f64(b.lower),
                    format_f64(b.upper),
                    format_f64(b.midpoint),
                    b.pairs.to_string(),
                    format_f64(b.correlation),
                    b.reference.map(format_f64).unwrap_or_default(),
                ],
            )
        })
        .collect();
    rows.extend(curve.dropped.iter().map(|&(lo, hi, count)| {
        (
            lo,
            vec![
                format_f64(lo),
                format_f64(hi),
                format_f64((lo + hi) / 2.0),
                count.to_string(),
                String::new(),
                String::new(),
            ],
        )
    }));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    write_csv(path, Some(&head), rows.into_iter().map(|(_, r)| r))
}
