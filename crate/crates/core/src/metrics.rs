//! Short-term curves (success, precision) and the long-term Pr/Re/F protocol.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annotation, BBox};
use crate::track::TrackerOutput;

/// Number of points on the IoU grid `{0, 0.01, ..., 1}`.
pub const SUCCESS_GRID_POINTS: usize = 101;
/// Largest center-error threshold on the precision grid, in pixels.
pub const PRECISION_MAX_PX: usize = 50;
/// Representative precision threshold in pixels.
pub const PRECISION_AT: usize = 20;

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

pub fn center_error(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(pr: f64, re: f64) -> f64 {
    if pr + re > 0.0 {
        2.0 * pr * re / (pr + re)
    } else {
        0.0
    }
}

/// A sampled curve plus its scalar summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurves {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    pub summary: f64,
}

impl EvalCurves {
    /// `threshold,value` rows under a header. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,value\n");
        for (t, v) in self.thresholds.iter().zip(&self.values) {
            let _ = writeln!(s, "{t},{v}");
        }
        s
    }

    /// Parses [`EvalCurves::to_csv`] output. The summary is not stored in the
    /// CSV and must be supplied.
    pub fn from_csv(text: &str, summary: f64) -> Result<Self> {
        let mut thresholds = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let parse = |f: &str| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("non-numeric field `{f}`"),
                })
            };
            let (t, v) = line.split_once(',').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected `threshold,value`".into(),
            })?;
            thresholds.push(parse(t)?);
            values.push(parse(v)?);
        }
        Ok(Self {
            thresholds,
            values,
            summary,
        })
    }
}

fn present_pairs<'a>(
    preds: &'a [TrackerOutput],
    gts: &'a [Annotation],
) -> Result<Vec<(&'a BBox, &'a BBox)>> {
    if preds.len() != gts.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} annotations",
            preds.len(),
            gts.len()
        )));
    }
    let pairs: Vec<_> = preds
        .iter()
        .zip(gts)
        .filter_map(|(p, g)| g.bbox().map(|g| (&p.bbox, g)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid("no frames with the target present"));
    }
    Ok(pairs)
}

/// Fraction of target-present frames with IoU ≥ s over the 101-point grid.
/// The summary is the mean of the values (AUC).
pub fn success_curve(preds: &[TrackerOutput], gts: &[Annotation]) -> Result<EvalCurves> {
    let pairs = present_pairs(preds, gts)?;
    let overlaps: Vec<f64> = pairs.iter().map(|(p, g)| iou(p, g)).collect();
    let n = overlaps.len() as f64;
    let thresholds: Vec<f64> = (0..SUCCESS_GRID_POINTS)
        .map(|i| i as f64 / (SUCCESS_GRID_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&s| overlaps.iter().filter(|&&o| o >= s).count() as f64 / n)
        .collect();
    let summary = values.iter().sum::<f64>() / values.len() as f64;
    Ok(EvalCurves {
        thresholds,
        values,
        summary,
    })
}

/// Fraction of target-present frames with center error ≤ t for
/// t = 0..=50 px. The summary is the value at 20 px.
pub fn precision_curve(preds: &[TrackerOutput], gts: &[Annotation]) -> Result<EvalCurves> {
    let pairs = present_pairs(preds, gts)?;
    let errors: Vec<f64> = pairs.iter().map(|(p, g)| center_error(p, g)).collect();
    let n = errors.len() as f64;
    let thresholds: Vec<f64> = (0..=PRECISION_MAX_PX).map(|t| t as f64).collect();
    let values: Vec<f64> = thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect();
    let summary = values[PRECISION_AT];
    Ok(EvalCurves {
        thresholds,
        values,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtScore {
    pub pr: f64,
    pub re: f64,
    pub f: f64,
    pub tau_star: f64,
}

/// Pr, Re and F at every threshold, ascending; the last threshold is +∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtCurves {
    pub thresholds: Vec<f64>,
    pub pr: Vec<f64>,
    pub re: Vec<f64>,
    pub f: Vec<f64>,
}

impl LtCurves {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,pr,re,f\n");
        for i in 0..self.thresholds.len() {
            let _ = writeln!(s, "{},{},{},{}", self.thresholds[i], self.pr[i], self.re[i], self.f[i]);
        }
        s
    }
}

/// Long-term precision/recall/F.
///
/// Thresholds are the distinct confidences of reported frames plus +∞. At
/// threshold τ a frame counts as reported when `reported && confidence ≥ τ`.
/// Pr is the mean overlap over reported frames (1 when none are), Re the
/// overlap sum over the number of target-present frames. The returned score
/// is at the smallest τ maximizing F.
pub fn lt_pr_re_f(preds: &[TrackerOutput], gts: &[Annotation]) -> Result<(LtScore, LtCurves)> {
    if preds.len() != gts.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} annotations",
            preds.len(),
            gts.len()
        )));
    }
    let n_present = gts.iter().filter(|g| g.is_present()).count();
    if n_present == 0 {
        return Err(Error::Protocol(
            "long-term evaluation needs at least one frame with the target present".into(),
        ));
    }
    let overlap: Vec<f64> = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| g.bbox().map_or(0.0, |g| iou(&p.bbox, g)))
        .collect();

    let mut thresholds: Vec<f64> = preds
        .iter()
        .filter(|p| p.reported)
        .map(|p| p.confidence)
        .filter(|c| !c.is_nan())
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let mut curves = LtCurves {
        thresholds: thresholds.clone(),
        pr: Vec::with_capacity(thresholds.len()),
        re: Vec::with_capacity(thresholds.len()),
        f: Vec::with_capacity(thresholds.len()),
    };
    let mut best: Option<LtScore> = None;
    for &tau in &thresholds {
        let mut n_reported = 0usize;
        let mut sum_reported = 0.0;
        let mut sum_present = 0.0;
        for (i, p) in preds.iter().enumerate() {
            if p.reported && p.confidence >= tau {
                n_reported += 1;
                sum_reported += overlap[i];
                if gts[i].is_present() {
                    sum_present += overlap[i];
                }
            }
        }
        let pr = if n_reported == 0 {
            1.0
        } else {
            sum_reported / n_reported as f64
        };
        let re = sum_present / n_present as f64;
        let f = f_score(pr, re);
        curves.pr.push(pr);
        curves.re.push(re);
        curves.f.push(f);
        if best.is_none_or(|b| f > b.f) {
            best = Some(LtScore { pr, re, f, tau_star: tau });
        }
    }
    Ok((best.expect("threshold list is never empty"), curves))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox { x, y, w, h }
    }

    fn out(bbox: BBox, confidence: f64, reported: bool) -> TrackerOutput {
        TrackerOutput {
            bbox,
            confidence,
            reported,
        }
    }

    #[test]
    fn iou_examples() {
        let a = b(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert!((iou(&a, &b(1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(iou(&b(0.0, 0.0, 0.0, 3.0), &b(0.0, 0.0, 0.0, 3.0)), 0.0);
    }

    #[test]
    fn center_error_examples() {
        assert_eq!(center_error(&b(-1.0, -1.0, 2.0, 2.0), &b(2.0, 3.0, 2.0, 2.0)), 5.0);
        assert_eq!(center_error(&b(0.0, 0.0, 4.0, 4.0), &b(1.0, 1.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn f_score_examples() {
        assert!((f_score(0.740, 0.765) - 0.752).abs() <= 0.0005);
        assert!((f_score(0.747, 0.767) - 0.757).abs() <= 0.0005);
        assert!((f_score(0.558, 0.543) - 0.550).abs() <= 0.0005);
        assert_eq!(f_score(0.0, 0.3), 0.0);
        assert_eq!(f_score(0.0, 0.0), 0.0);
        assert!((f_score(0.4, 0.4) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn curves_perfect_and_far() {
        let g = b(10.0, 10.0, 10.0, 10.0);
        let gts = vec![Annotation::present(g); 4];
        let perfect = vec![out(g, 1.0, true); 4];
        assert_eq!(success_curve(&perfect, &gts).unwrap().summary, 1.0);
        assert_eq!(precision_curve(&perfect, &gts).unwrap().summary, 1.0);

        let far = vec![out(b(200.0, 200.0, 10.0, 10.0), 1.0, true); 4];
        let s = success_curve(&far, &gts).unwrap();
        assert!((s.summary - 1.0 / 101.0).abs() < 1e-15);
        assert_eq!(precision_curve(&far, &gts).unwrap().summary, 0.0);

        let half: Vec<_> = perfect[..2].iter().chain(&far[..2]).copied().collect();
        let s = success_curve(&half, &gts).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert!(s.values[1..].iter().all(|&v| v == 0.5));
        assert_eq!(precision_curve(&half, &gts).unwrap().summary, 0.5);
    }

    #[test]
    fn curves_skip_absent_and_check_lengths() {
        let g = b(0.0, 0.0, 4.0, 4.0);
        let gts = vec![Annotation::present(g), Annotation::absent()];
        let preds = vec![out(g, 1.0, true), out(b(50.0, 50.0, 4.0, 4.0), 1.0, true)];
        assert_eq!(success_curve(&preds, &gts).unwrap().summary, 1.0);
        assert!(success_curve(&preds[..1], &gts).is_err());
        assert!(precision_curve(&preds, &[Annotation::absent(); 2]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = b(0.0, 0.0, 3.0, 7.0);
        let gts = vec![Annotation::present(g); 3];
        let preds = vec![
            out(g, 1.0, true),
            out(b(0.3, 0.1, 3.0, 7.0), 1.0, true),
            out(b(1.7, 2.2, 3.0, 5.0), 1.0, true),
        ];
        let c = success_curve(&preds, &gts).unwrap();
        assert_eq!(EvalCurves::from_csv(&c.to_csv(), c.summary).unwrap(), c);
    }

    #[test]
    fn lt_perfect_tracker() {
        let g = b(1.0, 1.0, 5.0, 5.0);
        let gts = vec![Annotation::present(g), Annotation::absent(), Annotation::present(g)];
        let preds = vec![out(g, 0.9, true), out(g, 0.0, false), out(g, 0.9, true)];
        let (s, curves) = lt_pr_re_f(&preds, &gts).unwrap();
        assert_eq!((s.pr, s.re, s.f, s.tau_star), (1.0, 1.0, 1.0, 0.9));
        assert_eq!(curves.thresholds, vec![0.9, f64::INFINITY]);
        assert_eq!(curves.pr, vec![1.0, 1.0]);
        assert_eq!(curves.re, vec![1.0, 0.0]);
    }

    #[test]
    fn lt_report_on_absent_lowers_precision() {
        let g = b(1.0, 1.0, 5.0, 5.0);
        let gts = vec![Annotation::present(g), Annotation::absent()];
        let preds = vec![out(g, 0.5, true), out(g, 0.5, true)];
        let (s, _) = lt_pr_re_f(&preds, &gts).unwrap();
        assert_eq!(s.pr, 0.5);
        assert_eq!(s.re, 1.0);
    }

    #[test]
    fn lt_no_present_frames_is_protocol_error() {
        let gts = vec![Annotation::absent(); 3];
        let preds = vec![out(b(0.0, 0.0, 1.0, 1.0), 0.0, false); 3];
        assert!(matches!(lt_pr_re_f(&preds, &gts), Err(Error::Protocol(_))));
    }

    #[test]
    fn lt_nothing_reported_gives_zero_f() {
        let g = b(1.0, 1.0, 5.0, 5.0);
        let gts = vec![Annotation::present(g); 2];
        let preds = vec![out(g, 3.0, false); 2];
        let (s, _) = lt_pr_re_f(&preds, &gts).unwrap();
        assert_eq!((s.pr, s.re, s.f), (1.0, 0.0, 0.0));
        assert_eq!(s.tau_star, f64::INFINITY);
    }
}
