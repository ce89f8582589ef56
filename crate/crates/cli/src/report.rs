//! CSV curves, SVG plots and text tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use modaprompt::metrics::EvalCurves;

use crate::error::CliError;
use crate::record::MetricRecord;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Pointwise mean of curves sharing a threshold grid.
pub fn mean_curve<'a>(curves: impl IntoIterator<Item = &'a EvalCurves>) -> Option<EvalCurves> {
    let mut it = curves.into_iter();
    let first = it.next()?.clone();
    let mut sum = first.clone();
    let mut n = 1.0;
    for c in it {
        for (s, v) in sum.values.iter_mut().zip(&c.values) {
            *s += v;
        }
        sum.summary += c.summary;
        n += 1.0;
    }
    sum.values.iter_mut().for_each(|v| *v /= n);
    sum.summary /= n;
    Some(sum)
}

/// Self-contained line plot. Each series' CSV is embedded in a comment so
/// the file can be diffed and re-parsed.
pub fn svg_plot(title: &str, x_label: &str, series: &[(String, &EvalCurves)]) -> String {
    let x_max = series
        .iter()
        .flat_map(|(_, c)| c.thresholds.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let px = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    for (label, c) in series {
        let _ = writeln!(s, "<!-- data {}\n{}-->", escape(label), c.to_csv());
    }
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (px(0.0), px(x_max), py(0.0), py(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{v}</text>"#,
            x0 - 4.0,
            py(v) + 3.0
        );
        let xv = v * x_max;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{xv}</text>"#,
            px(xv),
            y0 + 14.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    for (i, (label, c)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = c
            .thresholds
            .iter()
            .zip(&c.values)
            .map(|(&t, &v)| format!("{:.2},{:.2}", px(t), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{} [{:.3}]</text>"#,
            WIDTH - MARGIN - 140.0,
            MARGIN + 14.0 * i as f64,
            escape(label),
            c.summary
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

/// Fixed-width metrics table, one row per record.
pub fn metrics_table(first_column: &str, rows: &[(String, &MetricRecord)]) -> String {
    let width = rows
        .iter()
        .map(|(k, _)| k.len())
        .chain([first_column.len()])
        .max()
        .unwrap_or(8)
        + 2;
    let mut s = format!(
        "{first_column:<width$}{:>12}{:>14}{:>8}{:>8}{:>8}  status\n",
        "success_auc", "precision@20", "pr", "re", "f"
    );
    for (key, r) in rows {
        let _ = writeln!(
            s,
            "{key:<width$}{:>12.4}{:>14.4}{:>8.4}{:>8.4}{:>8.4}  {}",
            r.success_auc, r.precision_at_20, r.pr, r.re, r.f, r.status
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: Vec<f64>) -> EvalCurves {
        let n = values.len();
        EvalCurves {
            thresholds: (0..n).map(|i| i as f64).collect(),
            summary: values.iter().sum::<f64>() / n as f64,
            values,
        }
    }

    #[test]
    fn mean_of_curves() {
        let a = curve(vec![1.0, 0.5]);
        let b = curve(vec![0.0, 0.5]);
        let m = mean_curve([&a, &b]).unwrap();
        assert_eq!(m.values, vec![0.5, 0.5]);
        assert!(mean_curve(std::iter::empty()).is_none());
    }

    #[test]
    fn svg_embeds_parseable_data() {
        let c = curve(vec![1.0, 0.25, 0.125]);
        let svg = svg_plot("t", "x", &[("seq".into(), &c)]);
        let start = svg.find("<!-- data seq\n").unwrap() + "<!-- data seq\n".len();
        let end = start + svg[start..].find("-->").unwrap();
        assert_eq!(EvalCurves::from_csv(&svg[start..end], c.summary).unwrap(), c);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
