//! Adaptive correlation-filter tracker (MOSSE family) with peak-to-sidelobe
//! confidence.
//!
//! The filter is learned in the Fourier domain as a ratio of running sums
//! `N = Σ G·conj(F)` and `D = Σ F·conj(F) + ε`, where `F` is the spectrum of
//! the preprocessed search window and `G` the spectrum of a centered
//! Gaussian. The response to a new window is `IFFT(F' · N / D)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::{sample_bilinear, PixelImage};

use super::{Tracker, TrackerOutput};

/// Half-width of the square excluded around the peak when measuring the
/// sidelobe (an 11×11 region).
const PSR_EXCLUSION: isize = 5;
/// Windows whose intensity span falls below this are treated as flat.
const FLAT_SPAN: f64 = 1e-9;
const MAX_ROTATION: f64 = 0.1;
const MAX_SCALE_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MosseParams {
    pub learn_rate: f64,
    pub reg_eps: f64,
    /// Gaussian response width; `None` means `sqrt(w·h) / 16`.
    pub response_sigma: Option<f64>,
    pub psr_threshold: f64,
    pub perturbations: usize,
    pub seed: u64,
    /// One filter per color channel with summed responses, instead of a
    /// single luminance filter.
    pub color_channels: bool,
    /// Search window size as a multiple of the target size.
    pub padding: f64,
}

impl Default for MosseParams {
    fn default() -> Self {
        Self {
            learn_rate: 0.125,
            reg_eps: 1e-3,
            response_sigma: None,
            psr_threshold: 5.0,
            perturbations: 8,
            seed: 0,
            color_channels: true,
            padding: 2.0,
        }
    }
}

impl MosseParams {
    fn validate(&self) -> Result<()> {
        if !(self.learn_rate > 0.0 && self.learn_rate <= 1.0) {
            return Err(Error::invalid(format!("learn_rate {} outside (0, 1]", self.learn_rate)));
        }
        if !(self.reg_eps > 0.0) {
            return Err(Error::invalid("reg_eps must be positive"));
        }
        if let Some(s) = self.response_sigma {
            if !(s > 0.0) {
                return Err(Error::invalid("response_sigma must be positive"));
            }
        }
        if !(self.padding >= 1.0) {
            return Err(Error::invalid("padding must be at least 1"));
        }
        Ok(())
    }
}

struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        rows.process(buf);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            cols.process(&mut column);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }
    }
}

/// Sampling transform of a training window: rotation and isotropic scale
/// about the window center.
#[derive(Debug, Clone, Copy)]
struct Warp {
    cos: f64,
    sin: f64,
}

impl Warp {
    const IDENTITY: Warp = Warp { cos: 1.0, sin: 0.0 };

    fn random(rng: &mut ChaCha8Rng) -> Self {
        let angle = rng.random_range(-MAX_ROTATION..=MAX_ROTATION);
        let scale = 1.0 + rng.random_range(-MAX_SCALE_DELTA..=MAX_SCALE_DELTA);
        Warp {
            cos: scale * angle.cos(),
            sin: scale * angle.sin(),
        }
    }
}

/// Learned filter plus tracking state.
///
/// Centers are kept in index space (pixel `i` sits at coordinate `i`).
pub struct CorrelationFilter {
    params: MosseParams,
    window_w: usize,
    window_h: usize,
    channels: usize,
    numerator: Vec<Vec<Complex64>>,
    denominator: Vec<Vec<Complex64>>,
    target: Vec<Complex64>,
    hann: Vec<f64>,
    center: (f64, f64),
    target_size: (f64, f64),
    response_sigma: f64,
    last_psr: f64,
    fft: Fft2d,
}

impl fmt::Debug for CorrelationFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorrelationFilter")
            .field("window", &(self.window_w, self.window_h))
            .field("channels", &self.channels)
            .field("center", &self.center)
            .field("target_size", &self.target_size)
            .field("last_psr", &self.last_psr)
            .finish_non_exhaustive()
    }
}

fn even_at_least_8(v: f64) -> usize {
    let n = 2 * ((v / 2.0).round() as usize);
    n.max(8)
}

/// Builds a filter from the first frame and its target box.
pub fn tracker_init(frame: &PixelImage, initial: BBox, params: &MosseParams) -> Result<CorrelationFilter> {
    params.validate()?;
    if !(initial.w > 0.0 && initial.h > 0.0) {
        return Err(Error::invalid(format!(
            "initial box must have positive area, got {}x{}",
            initial.w, initial.h
        )));
    }
    if !initial.inside(frame.width(), frame.height()) {
        return Err(Error::invalid(format!(
            "initial box {initial:?} is not inside the {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    let window_w = even_at_least_8(params.padding * initial.w);
    let window_h = even_at_least_8(params.padding * initial.h);
    let channels = if params.color_channels && frame.channels() == 3 { 3 } else { 1 };
    let sigma = params
        .response_sigma
        .unwrap_or_else(|| (initial.w * initial.h).sqrt() / 16.0);
    let fft = Fft2d::new(window_w, window_h);

    let (cx, cy) = ((window_w / 2) as f64, (window_h / 2) as f64);
    let mut target: Vec<Complex64> = (0..window_h)
        .flat_map(|y| (0..window_w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            Complex64::new((-d2 / (2.0 * sigma * sigma)).exp(), 0.0)
        })
        .collect();
    fft.forward(&mut target);

    let hann_x: Vec<f64> = hann(window_w);
    let hann_y: Vec<f64> = hann(window_h);
    let hann = hann_y
        .iter()
        .flat_map(|&hy| hann_x.iter().map(move |&hx| hx * hy))
        .collect();

    let n = window_w * window_h;
    let mut filter = CorrelationFilter {
        params: params.clone(),
        window_w,
        window_h,
        channels,
        numerator: vec![vec![Complex64::new(0.0, 0.0); n]; channels],
        denominator: vec![vec![Complex64::new(0.0, 0.0); n]; channels],
        target,
        hann,
        center: (initial.x + initial.w / 2.0 - 0.5, initial.y + initial.h / 2.0 - 0.5),
        target_size: (initial.w, initial.h),
        response_sigma: sigma,
        last_psr: 0.0,
        fft,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let warps: Vec<Warp> = std::iter::once(Warp::IDENTITY)
        .chain((0..params.perturbations).map(|_| Warp::random(&mut rng)))
        .collect();
    let weight = 1.0 / warps.len() as f64;
    for warp in warps {
        let spectra = filter.window_spectra(frame, filter.center, warp);
        for (c, f) in spectra.iter().enumerate() {
            for (i, fv) in f.iter().enumerate() {
                filter.numerator[c][i] += filter.target[i] * fv.conj() * weight;
                filter.denominator[c][i] += (fv * fv.conj()) * weight;
            }
        }
    }
    let eps = params.reg_eps;
    filter
        .denominator
        .iter_mut()
        .flatten()
        .for_each(|d| *d += eps);
    Ok(filter)
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

impl CorrelationFilter {
    pub fn window_size(&self) -> (usize, usize) {
        (self.window_w, self.window_h)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn numerator(&self) -> &[Vec<Complex64>] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Vec<Complex64>] {
        &self.denominator
    }

    pub fn response_sigma(&self) -> f64 {
        self.response_sigma
    }

    pub fn last_psr(&self) -> f64 {
        self.last_psr
    }

    /// Current box in frame coordinates.
    pub fn current_box(&self) -> BBox {
        let (w, h) = self.target_size;
        BBox::from_center(self.center.0 + 0.5, self.center.1 + 0.5, w, h)
    }

    /// Samples, preprocesses and transforms the window around `center`.
    fn window_spectra(&self, frame: &PixelImage, center: (f64, f64), warp: Warp) -> Vec<Vec<Complex64>> {
        let (ww, wh) = (self.window_w, self.window_h);
        let (hx, hy) = ((ww / 2) as f64, (wh / 2) as f64);
        let n = ww * wh;
        let mut chans = vec![Vec::with_capacity(n); self.channels];
        let rgb = frame.channels() == 3;
        for j in 0..wh {
            let dy = j as f64 - hy;
            for i in 0..ww {
                let dx = i as f64 - hx;
                let sx = center.0 + warp.cos * dx - warp.sin * dy;
                let sy = center.1 + warp.sin * dx + warp.cos * dy;
                if self.channels == 3 {
                    for (c, chan) in chans.iter_mut().enumerate() {
                        chan.push(sample_bilinear(frame, sx, sy, c));
                    }
                } else if rgb {
                    let r = sample_bilinear(frame, sx, sy, 0);
                    let g = sample_bilinear(frame, sx, sy, 1);
                    let b = sample_bilinear(frame, sx, sy, 2);
                    chans[0].push(0.299 * r + 0.587 * g + 0.114 * b);
                } else {
                    chans[0].push(sample_bilinear(frame, sx, sy, 0));
                }
            }
        }
        self.preprocess(&mut chans);
        chans
            .into_iter()
            .map(|chan| {
                let mut buf: Vec<Complex64> = chan.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
                self.fft.forward(&mut buf);
                buf
            })
            .collect()
    }

    /// Min-max stretch over all channels, `ln(1 + v)`, per-channel zero
    /// mean, joint unit norm, then the Hann window. Flat windows become zero.
    fn preprocess(&self, chans: &mut [Vec<f64>]) {
        let (lo, hi) = chans
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        if !(span > FLAT_SPAN) {
            chans.iter_mut().flatten().for_each(|v| *v = 0.0);
            return;
        }
        for chan in chans.iter_mut() {
            chan.iter_mut().for_each(|v| *v = ((*v - lo) / span).ln_1p());
            let mean = chan.iter().sum::<f64>() / chan.len() as f64;
            chan.iter_mut().for_each(|v| *v -= mean);
        }
        let norm = chans.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        for chan in chans.iter_mut() {
            for (v, w) in chan.iter_mut().zip(&self.hann) {
                if norm > 0.0 {
                    *v /= norm;
                }
                *v *= w;
            }
        }
    }

    fn response(&self, spectra: &[Vec<Complex64>]) -> Vec<f64> {
        let n = self.window_w * self.window_h;
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for (c, f) in spectra.iter().enumerate() {
            for i in 0..n {
                acc[i] += f[i] * self.numerator[c][i] / self.denominator[c][i];
            }
        }
        self.fft.inverse(&mut acc);
        acc.into_iter().map(|v| v.re).collect()
    }

    /// Locates the target in `frame`, updates the filter when confident and
    /// returns the output for this frame.
    pub fn step(&mut self, frame: &PixelImage) -> TrackerOutput {
        let spectra = self.window_spectra(frame, self.center, Warp::IDENTITY);
        let resp = self.response(&spectra);
        let (ww, wh) = (self.window_w, self.window_h);

        let (peak_idx, peak) = resp
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        let (px, py) = (peak_idx % ww, peak_idx / ww);
        let psr = peak_to_sidelobe(&resp, ww, wh, px, py, peak);
        self.last_psr = psr;

        let at = |x: usize, y: usize| resp[y * ww + x];
        let ox = parabolic_offset(at((px + ww - 1) % ww, py), peak, at((px + 1) % ww, py));
        let oy = parabolic_offset(at(px, (py + wh - 1) % wh), peak, at(px, (py + 1) % wh));
        let dx = px as f64 + ox - (ww / 2) as f64;
        let dy = py as f64 + oy - (wh / 2) as f64;

        let reported = psr >= self.params.psr_threshold;
        if reported {
            let max_x = (frame.width() - 1) as f64;
            let max_y = (frame.height() - 1) as f64;
            self.center = (
                (self.center.0 + dx).clamp(0.0, max_x),
                (self.center.1 + dy).clamp(0.0, max_y),
            );
            self.update(frame);
        }
        TrackerOutput {
            bbox: self.current_box(),
            confidence: psr,
            reported,
        }
    }

    fn update(&mut self, frame: &PixelImage) {
        let spectra = self.window_spectra(frame, self.center, Warp::IDENTITY);
        let rate = self.params.learn_rate;
        let eps = self.params.reg_eps;
        for (c, f) in spectra.iter().enumerate() {
            for (i, fv) in f.iter().enumerate() {
                let num = self.target[i] * fv.conj();
                let den = fv * fv.conj() + eps;
                self.numerator[c][i] = self.numerator[c][i] * (1.0 - rate) + num * rate;
                self.denominator[c][i] = self.denominator[c][i] * (1.0 - rate) + den * rate;
            }
        }
    }
}

/// `(peak − mean) / std` of the response outside an 11×11 region around the
/// peak (wrapping at the borders). Zero when the sidelobe is empty or flat.
fn peak_to_sidelobe(resp: &[f64], ww: usize, wh: usize, px: usize, py: usize, peak: f64) -> f64 {
    let circ = |a: usize, b: usize, n: usize| -> isize {
        let d = (a as isize - b as isize).rem_euclid(n as isize);
        d.min(n as isize - d)
    };
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for y in 0..wh {
        let near_y = circ(y, py, wh) <= PSR_EXCLUSION;
        for x in 0..ww {
            if near_y && circ(x, px, ww) <= PSR_EXCLUSION {
                continue;
            }
            let v = resp[y * ww + x];
            sum += v;
            sum_sq += v * v;
            count += 1;
        }
    }
    if count < 2 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0);
    let std = var.sqrt();
    if !(std > 0.0) || !peak.is_finite() {
        return 0.0;
    }
    let psr = (peak - mean) / std;
    if psr.is_finite() {
        psr
    } else {
        0.0
    }
}

/// Vertex offset of the parabola through three equally spaced samples.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom < 0.0 {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// [`Tracker`] adapter around [`CorrelationFilter`].
#[derive(Debug)]
pub struct MosseTracker {
    params: MosseParams,
    state: Option<CorrelationFilter>,
}

impl MosseTracker {
    pub fn new(params: MosseParams) -> Self {
        Self { params, state: None }
    }

    pub fn state(&self) -> Option<&CorrelationFilter> {
        self.state.as_ref()
    }
}

impl Tracker for MosseTracker {
    fn init(&mut self, frame: &PixelImage, initial: BBox) -> Result<()> {
        self.state = Some(tracker_init(frame, initial, &self.params)?);
        Ok(())
    }

    fn step(&mut self, frame: &PixelImage) -> TrackerOutput {
        self.state
            .as_mut()
            .expect("MosseTracker::step called before init")
            .step(frame)
    }
}
