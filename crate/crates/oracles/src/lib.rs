//! Deliberately naive reference implementations of the evaluation and
//! blending arithmetic, plus seeded random instances to compare against.

use modaprompt::metrics::LtScore;
use modaprompt::track::TrackerOutput;
use modaprompt::{Annotation, BBox, Error, PixelImage, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tracker outputs and ground truth, reproducible from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub seed: u64,
    pub preds: Vec<TrackerOutput>,
    pub gts: Vec<Annotation>,
}

impl RandomInstance {
    /// Between 1 and `max_frames` frames. Boxes jitter around a shared
    /// anchor so overlaps cover the whole `[0, 1]` range; confidences are
    /// drawn from a coarse grid half the time so ties occur.
    pub fn generate(seed: u64, max_frames: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=max_frames.max(1));
        let p_present: f64 = rng.random_range(0.5..1.0);
        let p_report: f64 = rng.random_range(0.3..1.0);
        let mut preds = Vec::with_capacity(n);
        let mut gts = Vec::with_capacity(n);
        for _ in 0..n {
            let g = random_box(&mut rng, 50.0, 50.0);
            let jitter = rng.random_range(0.0..30.0);
            let p = BBox {
                x: g.x + rng.random_range(-jitter..=jitter),
                y: g.y + rng.random_range(-jitter..=jitter),
                w: (g.w + rng.random_range(-jitter..=jitter)).max(0.0),
                h: (g.h + rng.random_range(-jitter..=jitter)).max(0.0),
            };
            gts.push(if rng.random_bool(p_present) {
                Annotation::present(g)
            } else {
                Annotation::absent()
            });
            let confidence = if rng.random_bool(0.5) {
                f64::from(rng.random_range(0..20u32)) * 0.05
            } else {
                rng.random_range(-2.0..10.0)
            };
            preds.push(TrackerOutput {
                bbox: p,
                confidence,
                reported: rng.random_bool(p_report),
            });
        }
        Self { seed, preds, gts }
    }
}

fn random_box(rng: &mut ChaCha8Rng, cx: f64, cy: f64) -> BBox {
    BBox {
        x: cx + rng.random_range(-20.0..20.0),
        y: cy + rng.random_range(-20.0..20.0),
        w: rng.random_range(0.0..40.0),
        h: rng.random_range(0.0..40.0),
    }
}

/// Image with every sample drawn uniformly from `[0, 1]`.
pub fn random_image(rng: &mut impl Rng, width: usize, height: usize, channels: usize) -> PixelImage {
    let data = (0..width * height * channels).map(|_| rng.random::<f64>()).collect();
    PixelImage::new(width, height, channels, data).expect("valid random image")
}

pub fn oracle_iou(a: &BBox, b: &BBox) -> f64 {
    let left = if a.x > b.x { a.x } else { b.x };
    let top = if a.y > b.y { a.y } else { b.y };
    let right = if a.x + a.w < b.x + b.w { a.x + a.w } else { b.x + b.w };
    let bottom = if a.y + a.h < b.y + b.h { a.y + a.h } else { b.y + b.h };
    let iw = if right > left { right - left } else { 0.0 };
    let ih = if bottom > top { bottom - top } else { 0.0 };
    let inter = iw * ih;
    let union = a.w * a.h + b.w * b.h - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

pub fn oracle_center_error(a: &BBox, b: &BBox) -> f64 {
    let dx = (a.x + a.w / 2.0) - (b.x + b.w / 2.0);
    let dy = (a.y + a.h / 2.0) - (b.y + b.h / 2.0);
    dx.hypot(dy)
}

/// Success values on the 101-point grid and their mean.
pub fn oracle_success(preds: &[TrackerOutput], gts: &[Annotation]) -> (Vec<f64>, f64) {
    let mut values = Vec::new();
    for k in 0..=100 {
        let s = k as f64 / 100.0;
        let mut hit = 0usize;
        let mut total = 0usize;
        for i in 0..gts.len() {
            if let Some(g) = gts[i].bbox() {
                total += 1;
                if oracle_iou(&preds[i].bbox, g) >= s {
                    hit += 1;
                }
            }
        }
        values.push(hit as f64 / total as f64);
    }
    let auc = values.iter().sum::<f64>() / values.len() as f64;
    (values, auc)
}

/// Precision values for 0..=50 px and the value at 20 px.
pub fn oracle_precision(preds: &[TrackerOutput], gts: &[Annotation]) -> (Vec<f64>, f64) {
    let mut values = Vec::new();
    for t in 0..=50 {
        let mut hit = 0usize;
        let mut total = 0usize;
        for i in 0..gts.len() {
            if let Some(g) = gts[i].bbox() {
                total += 1;
                if oracle_center_error(&preds[i].bbox, g) <= t as f64 {
                    hit += 1;
                }
            }
        }
        values.push(hit as f64 / total as f64);
    }
    let at20 = values[20];
    (values, at20)
}

/// Max-F over thresholds by recomputing Pr and Re from scratch for every
/// confidence of a reported frame and for +∞.
pub fn oracle_lt_f(preds: &[TrackerOutput], gts: &[Annotation]) -> Result<LtScore> {
    let n_present = gts.iter().filter(|g| g.is_present()).count();
    if n_present == 0 {
        return Err(Error::Protocol("no frames with the target present".into()));
    }
    let mut taus: Vec<f64> = preds.iter().filter(|p| p.reported).map(|p| p.confidence).collect();
    taus.push(f64::INFINITY);

    let mut best: Option<LtScore> = None;
    for &tau in &taus {
        let mut reported = 0usize;
        let mut pr_sum = 0.0;
        for i in 0..preds.len() {
            if preds[i].reported && preds[i].confidence >= tau {
                reported += 1;
                pr_sum += match gts[i].bbox() {
                    Some(g) => oracle_iou(&preds[i].bbox, g),
                    None => 0.0,
                };
            }
        }
        let mut re_sum = 0.0;
        for i in 0..preds.len() {
            if let Some(g) = gts[i].bbox() {
                if preds[i].reported && preds[i].confidence >= tau {
                    re_sum += oracle_iou(&preds[i].bbox, g);
                }
            }
        }
        let pr = if reported == 0 { 1.0 } else { pr_sum / reported as f64 };
        let re = re_sum / n_present as f64;
        let f = if pr + re == 0.0 { 0.0 } else { 2.0 * pr * re / (pr + re) };
        let better = match best {
            None => true,
            Some(b) => f > b.f || (f == b.f && tau < b.tau_star),
        };
        if better {
            best = Some(LtScore { pr, re, f, tau_star: tau });
        }
    }
    Ok(best.expect("at least the +inf threshold"))
}

/// `λ·a + (1−λ)·v` with an explicit loop over pixels and channels.
pub fn oracle_compose(v: &PixelImage, a: &PixelImage, lambda: f64) -> PixelImage {
    let (w, h) = v.dims();
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let value = lambda * a.get(x, y, c) + (1.0 - lambda) * v.get(x, y, c);
                data.push(value.clamp(0.0, 1.0));
            }
        }
    }
    PixelImage::new(w, h, 3, data).expect("valid composite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible() {
        assert_eq!(RandomInstance::generate(7, 200), RandomInstance::generate(7, 200));
        let inst = RandomInstance::generate(7, 200);
        assert!(!inst.preds.is_empty() && inst.preds.len() <= 200);
        assert_eq!(inst.preds.len(), inst.gts.len());
    }

    #[test]
    fn single_perfect_frame() {
        let g = BBox { x: 1.0, y: 1.0, w: 3.0, h: 3.0 };
        let preds = [TrackerOutput { bbox: g, confidence: 1.0, reported: true }];
        let s = oracle_lt_f(&preds, &[Annotation::present(g)]).unwrap();
        assert_eq!(s.f, 1.0);
    }

    #[test]
    fn all_absent_is_protocol_error() {
        let g = BBox { x: 1.0, y: 1.0, w: 3.0, h: 3.0 };
        let preds = [TrackerOutput { bbox: g, confidence: 1.0, reported: false }; 3];
        assert!(oracle_lt_f(&preds, &[Annotation::absent(); 3]).is_err());
    }

    #[test]
    fn compose_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_image(&mut rng, 4, 3, 3);
        let a = random_image(&mut rng, 4, 3, 3);
        assert_eq!(oracle_compose(&v, &a, 0.0), v);
        assert_eq!(oracle_compose(&v, &a, 1.0), a);
    }
}
