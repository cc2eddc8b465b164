//! Fixed-order IoU tables: eyebrow, eye, nose, mouth, MIoU.

use std::fmt::Write as _;

use faceparse::labels::CLASS_NAMES;
use faceparse::metrics::IoUReport;

pub struct Row {
    pub name: String,
    pub report: IoUReport,
}

/// Column means over the rows where each class is present; the MIoU column
/// is the mean of the rows' MIoU.
pub fn mean_row(rows: &[Row]) -> Option<IoUReport> {
    if rows.is_empty() {
        return None;
    }
    let mut per_class = [None; 4];
    for (c, slot) in per_class.iter_mut().enumerate() {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.report.per_class[c]).collect();
        if !vals.is_empty() {
            *slot = Some(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let miou = rows.iter().map(|r| r.report.miou).sum::<f64>() / rows.len() as f64;
    Some(IoUReport { per_class, miou })
}

fn cells(r: &IoUReport, csv: bool) -> Vec<String> {
    let absent = if csv { "" } else { "-" };
    r.per_class
        .iter()
        .map(|v| v.map_or(absent.to_string(), |x| format!("{x:.6}")))
        .chain(std::iter::once(format!("{:.6}", r.miou)))
        .collect()
}

/// Rows followed by their mean.
pub fn render(rows: &[Row], csv: bool) -> String {
    render_rows(rows, csv, true)
}

pub fn render_rows(rows: &[Row], csv: bool, with_mean: bool) -> String {
    let mut header = vec!["name".to_string()];
    header.extend(CLASS_NAMES[1..].iter().map(|s| s.to_string()));
    header.push("miou".into());

    let mut body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| std::iter::once(r.name.clone()).chain(cells(&r.report, csv)).collect())
        .collect();
    if let Some(mean) = mean_row(rows).filter(|_| with_mean) {
        body.push(std::iter::once("mean".to_string()).chain(cells(&mean, csv)).collect());
    }

    let mut out = String::new();
    if csv {
        for line in std::iter::once(&header).chain(&body) {
            let _ = writeln!(out, "{}", line.join(","));
        }
        return out;
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| std::iter::once(&header).chain(&body).map(|l| l[c].len()).max().unwrap())
        .collect();
    for line in std::iter::once(&header).chain(&body) {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    }
    out
}
