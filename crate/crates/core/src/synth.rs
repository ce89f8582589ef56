//! Seeded synthetic multi-modal sequences.
//!
//! The visible stream is a static low-frequency colored texture with a
//! moving target rectangle blended in at `rgb_contrast`. The auxiliary
//! stream is a flat map in which the target stands out by `aux_contrast`.
//! Two kinds of distractors move on their own paths: RGB distractors look
//! exactly like the target in the visible stream but are absent from the
//! auxiliary one, and auxiliary distractors carry the target's auxiliary
//! value under their own visible texture, blended in at
//! `aux_distractor_contrast` (0 by default, i.e. invisible in color).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dye::NormPolicy;
use crate::error::{Error, Result};
use crate::events::{encode_polarity, PolarityImage};
use crate::geometry::{Annotation, BBox};
use crate::image::{clamp_unit, PixelImage};
use crate::sequence::{ModalSequence, ModalityKind};

const BACKGROUND_CELL: f64 = 16.0;
const PATTERN_CELL: f64 = 4.0;
/// Auxiliary change below this is not an event.
const EVENT_THRESHOLD: f64 = 0.05;

const STREAM_LAYOUT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SPANS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    /// Constant speed in a random direction, reflecting off the borders.
    LinearBounce { speed: f64 },
    /// Gaussian velocity increments with standard deviation `sigma` px per
    /// frame, reflecting off the borders.
    RandomWalk { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Camouflage,
    RgbEasy,
    Occlusion,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Camouflage => "camouflage",
            Scenario::RgbEasy => "rgb_easy",
            Scenario::Occlusion => "occlusion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub target_size: (usize, usize),
    pub motion: Motion,
    /// 0 makes the target identical to the background it covers.
    pub rgb_contrast: f64,
    pub aux_contrast: f64,
    /// Peak-to-peak amplitude of the visible background texture.
    pub texture_contrast: f64,
    /// Flat auxiliary background level.
    pub aux_background: f64,
    pub noise_sigma: f64,
    pub n_distractors: usize,
    pub n_aux_distractors: usize,
    /// Visible contrast of auxiliary distractors against the background.
    pub aux_distractor_contrast: f64,
    /// Half-open `[start, end)` frame ranges where the target is hidden.
    pub absent_spans: Vec<(usize, usize)>,
    pub scenario: Scenario,
    pub aux_kind: ModalityKind,
    pub seed: u64,
    /// Seeds the target path only; everything else follows `seed`.
    pub motion_seed: u64,
}

impl SynthConfig {
    /// Target invisible in color, salient in depth.
    pub fn camouflage(seed: u64) -> Self {
        Self {
            width: 128,
            height: 128,
            n_frames: 200,
            target_size: (20, 20),
            motion: Motion::LinearBounce { speed: 1.5 },
            rgb_contrast: 0.02,
            aux_contrast: 0.9,
            texture_contrast: 0.2,
            aux_background: 0.1,
            noise_sigma: 0.01,
            n_distractors: 0,
            n_aux_distractors: 1,
            aux_distractor_contrast: 0.0,
            absent_spans: Vec::new(),
            scenario: Scenario::Camouflage,
            aux_kind: ModalityKind::Depth,
            seed,
            motion_seed: seed,
        }
    }

    /// Target fully visible in color, with look-alike distractors.
    pub fn rgb_easy(seed: u64) -> Self {
        Self {
            rgb_contrast: 1.0,
            n_distractors: 2,
            scenario: Scenario::RgbEasy,
            ..Self::camouflage(seed)
        }
    }

    /// Visible target that disappears for short spans covering at least a
    /// fifth of the frames.
    pub fn occlusion(seed: u64) -> Self {
        let mut cfg = Self {
            scenario: Scenario::Occlusion,
            ..Self::rgb_easy(seed)
        };
        cfg.absent_spans = occlusion_spans(cfg.n_frames, seed);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let (tw, th) = self.target_size;
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return Err(Error::invalid("frame size and count must be positive"));
        }
        if tw == 0 || th == 0 || tw > self.width || th > self.height {
            return Err(Error::invalid(format!(
                "target {tw}x{th} does not fit in a {}x{} frame",
                self.width, self.height
            )));
        }
        for (name, v) in [
            ("rgb_contrast", self.rgb_contrast),
            ("aux_contrast", self.aux_contrast),
            ("texture_contrast", self.texture_contrast),
            ("aux_background", self.aux_background),
            ("aux_distractor_contrast", self.aux_distractor_contrast),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be non-negative"));
        }
        match self.motion {
            Motion::LinearBounce { speed: s } | Motion::RandomWalk { sigma: s } if !(s >= 0.0 && s.is_finite()) => {
                return Err(Error::invalid("motion parameter must be non-negative"));
            }
            _ => {}
        }
        if let Some(&(a, b)) = self.absent_spans.iter().find(|(a, b)| a >= b || *b > self.n_frames) {
            return Err(Error::invalid(format!(
                "absent span [{a}, {b}) not within [0, {})",
                self.n_frames
            )));
        }
        if !self.aux_kind.is_auxiliary() {
            return Err(Error::invalid("aux_kind must be depth, thermal or event"));
        }
        Ok(())
    }

    fn is_absent(&self, frame: usize) -> bool {
        self.absent_spans.iter().any(|&(a, b)| (a..b).contains(&frame))
    }
}

/// Spans of 6–10 frames spread over the sequence, at least one, covering
/// ≥ 20% of the frames when the sequence is long enough to allow it.
fn occlusion_spans(n_frames: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_SPANS);
    let start = 10.min(n_frames.saturating_sub(1)).max(1);
    if n_frames < 3 {
        return vec![(n_frames - 1, n_frames)];
    }
    let usable = n_frames - start;
    let slot = 30usize.min(usable);
    let mut spans = Vec::new();
    let mut s = start;
    while s + 1 < n_frames {
        let end_slot = (s + slot).min(n_frames);
        let len = rng.random_range(6..=10).min(end_slot - s);
        let room = end_slot - s - len;
        let offset = if room > 0 { rng.random_range(0..=room.min(4)) } else { 0 };
        spans.push((s + offset, s + offset + len));
        s = end_slot;
    }
    spans
}

/// Smooth random field sampled on a coarse grid, per channel, in `[0, 1]`.
#[derive(Debug, Clone)]
struct ValueNoise {
    cols: usize,
    rows: usize,
    cell: f64,
    channels: usize,
    grid: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: f64, channels: usize) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let grid = (0..cols * rows * channels).map(|_| rng.random::<f64>()).collect();
        Self {
            cols,
            rows,
            cell,
            channels,
            grid,
        }
    }

    fn sample(&self, x: f64, y: f64, c: usize) -> f64 {
        let gx = (x / self.cell).max(0.0);
        let gy = (y / self.cell).max(0.0);
        let x0 = (gx.floor() as usize).min(self.cols - 2);
        let y0 = (gy.floor() as usize).min(self.rows - 2);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let fx = smooth((gx - x0 as f64).clamp(0.0, 1.0));
        let fy = smooth((gy - y0 as f64).clamp(0.0, 1.0));
        let g = |ix: usize, iy: usize| self.grid[(iy * self.cols + ix) * self.channels + c];
        let top = g(x0, y0) * (1.0 - fx) + g(x0 + 1, y0) * fx;
        let bot = g(x0, y0 + 1) * (1.0 - fx) + g(x0 + 1, y0 + 1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

/// A rectangle moving on its own path.
#[derive(Debug, Clone)]
struct Path {
    positions: Vec<(f64, f64)>,
}

impl Path {
    fn generate(rng: &mut ChaCha8Rng, motion: Motion, n: usize, max_x: f64, max_y: f64) -> Self {
        let mut x = rng.random_range(0.0..=max_x);
        let mut y = rng.random_range(0.0..=max_y);
        let (mut vx, mut vy) = match motion {
            Motion::LinearBounce { speed } => {
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                (speed * angle.cos(), speed * angle.sin())
            }
            Motion::RandomWalk { .. } => (0.0, 0.0),
        };
        let step = match motion {
            Motion::RandomWalk { sigma } if sigma > 0.0 => Some(Normal::new(0.0, sigma).expect("valid sigma")),
            _ => None,
        };
        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            positions.push((x, y));
            if let Some(d) = &step {
                vx = 0.9 * vx + d.sample(rng);
                vy = 0.9 * vy + d.sample(rng);
            }
            x += vx;
            y += vy;
            reflect(&mut x, &mut vx, max_x);
            reflect(&mut y, &mut vy, max_y);
        }
        Self { positions }
    }

    fn rect(&self, i: usize, w: usize, h: usize) -> Rect {
        let (x, y) = self.positions[i];
        Rect {
            x: x.round() as usize,
            y: y.round() as usize,
            w,
            h,
        }
    }
}

fn reflect(p: &mut f64, v: &mut f64, max: f64) {
    if max <= 0.0 {
        *p = 0.0;
        return;
    }
    loop {
        if *p < 0.0 {
            *p = -*p;
            *v = -*v;
        } else if *p > max {
            *p = 2.0 * max - *p;
            *v = -*v;
        } else {
            break;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

impl Rect {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    fn bbox(&self) -> BBox {
        BBox {
            x: self.x as f64,
            y: self.y as f64,
            w: self.w as f64,
            h: self.h as f64,
        }
    }
}

struct Scene<'a> {
    cfg: &'a SynthConfig,
    background: ValueNoise,
    target_pattern: ValueNoise,
    aux_patterns: Vec<ValueNoise>,
    target: Path,
    rgb_distractors: Vec<Path>,
    aux_distractors: Vec<Path>,
}

impl Scene<'_> {
    fn background(&self, x: usize, y: usize, c: usize) -> f64 {
        0.5 + self.cfg.texture_contrast * (self.background.sample(x as f64, y as f64, c) - 0.5)
    }

    /// Visible value and auxiliary value of pixel `(x, y)` in frame `i`,
    /// before noise. Look-alikes blend their pattern over whatever lies
    /// beneath them, so at zero color contrast they leave no trace.
    fn pixel(&self, i: usize, x: usize, y: usize) -> ([f64; 3], f64) {
        let (tw, th) = self.cfg.target_size;
        let bg = [0, 1, 2].map(|c| self.background(x, y, c));
        let mut rgb = bg;
        let mut aux = self.cfg.aux_background;
        let look_alike = |r: Rect, rgb: &mut [f64; 3]| {
            let rc = self.cfg.rgb_contrast;
            for (c, v) in rgb.iter_mut().enumerate() {
                let p = self.target_pattern.sample((x - r.x) as f64, (y - r.y) as f64, c);
                *v = (1.0 - rc) * *v + rc * p;
            }
        };
        for path in &self.rgb_distractors {
            let r = path.rect(i, tw, th);
            if r.contains(x, y) {
                look_alike(r, &mut rgb);
                aux = self.cfg.aux_background;
            }
        }
        for (path, pattern) in self.aux_distractors.iter().zip(&self.aux_patterns) {
            let r = path.rect(i, tw, th);
            if r.contains(x, y) {
                let dc = self.cfg.aux_distractor_contrast;
                for (c, v) in rgb.iter_mut().enumerate() {
                    *v = (1.0 - dc) * bg[c] + dc * pattern.sample((x - r.x) as f64, (y - r.y) as f64, c);
                }
                aux = self.target_aux();
            }
        }
        if !self.cfg.is_absent(i) {
            let r = self.target.rect(i, tw, th);
            if r.contains(x, y) {
                look_alike(r, &mut rgb);
                aux = self.target_aux();
            }
        }
        (rgb, aux)
    }

    fn target_aux(&self) -> f64 {
        clamp_unit(self.cfg.aux_background + self.cfg.aux_contrast)
    }
}

/// Renders the sequence described by `cfg`. Identical configs give
/// bit-identical sequences.
pub fn generate(cfg: &SynthConfig) -> Result<ModalSequence> {
    cfg.validate()?;
    let (w, h, n) = (cfg.width, cfg.height, cfg.n_frames);
    let (tw, th) = cfg.target_size;
    let max_x = (w - tw) as f64;
    let max_y = (h - th) as f64;

    let mut layout = ChaCha8Rng::seed_from_u64(cfg.seed);
    layout.set_stream(STREAM_LAYOUT);
    let background = ValueNoise::new(&mut layout, w, h, BACKGROUND_CELL, 3);
    let target_pattern = ValueNoise::new(&mut layout, tw, th, PATTERN_CELL, 3);
    let rgb_distractors = (0..cfg.n_distractors)
        .map(|_| Path::generate(&mut layout, cfg.motion, n, max_x, max_y))
        .collect();
    let mut aux_distractors = Vec::with_capacity(cfg.n_aux_distractors);
    let mut aux_patterns = Vec::with_capacity(cfg.n_aux_distractors);
    for _ in 0..cfg.n_aux_distractors {
        aux_distractors.push(Path::generate(&mut layout, cfg.motion, n, max_x, max_y));
        aux_patterns.push(ValueNoise::new(&mut layout, tw, th, PATTERN_CELL, 3));
    }
    let mut motion_rng = ChaCha8Rng::seed_from_u64(cfg.motion_seed);
    let target = Path::generate(&mut motion_rng, cfg.motion, n, max_x, max_y);

    let scene = Scene {
        cfg,
        background,
        target_pattern,
        aux_patterns,
        target,
        rgb_distractors,
        aux_distractors,
    };

    let frames: Vec<(PixelImage, PixelImage)> = (0..n)
        .into_par_iter()
        .map(|i| render_frame(&scene, i))
        .collect();
    let (visible, aux_maps): (Vec<_>, Vec<_>) = frames.into_iter().unzip();

    let aux = if cfg.aux_kind == ModalityKind::Event {
        event_frames(&aux_maps)
    } else {
        aux_maps
    };

    let annotations = (0..n)
        .map(|i| {
            if cfg.is_absent(i) {
                Annotation::absent()
            } else {
                Annotation::present(scene.target.rect(i, tw, th).bbox())
            }
        })
        .collect();

    let mut streams = BTreeMap::new();
    streams.insert(ModalityKind::Visible, visible);
    streams.insert(cfg.aux_kind, aux);
    let mut norms = BTreeMap::new();
    norms.insert(cfg.aux_kind, NormPolicy::FixedRange { lo: 0.0, hi: 1.0 });
    ModalSequence::new(
        format!("{}-{:04}", cfg.scenario.name(), cfg.seed),
        streams,
        annotations,
        norms,
    )
}

fn render_frame(scene: &Scene<'_>, i: usize) -> (PixelImage, PixelImage) {
    let cfg = scene.cfg;
    let (w, h) = (cfg.width, cfg.height);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    noise_rng.set_stream(STREAM_NOISE);
    let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).expect("valid sigma"));
    let mut draw = |v: f64| match &noise {
        Some(d) => clamp_unit(v + d.sample(&mut noise_rng)),
        None => clamp_unit(v),
    };
    let mut rgb = Vec::with_capacity(w * h * 3);
    let mut aux = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (px, a) = scene.pixel(i, x, y);
            for v in px {
                rgb.push(draw(v));
            }
            aux.push(draw(a));
        }
    }
    (
        PixelImage::from_parts(w, h, 3, rgb),
        PixelImage::from_parts(w, h, 1, aux),
    )
}

/// Polarity frames from the sign of frame-to-frame auxiliary changes.
fn event_frames(maps: &[PixelImage]) -> Vec<PixelImage> {
    let (w, h) = maps[0].dims();
    let mut out = vec![encode_polarity(&PolarityImage::zeros(w, h))];
    for pair in maps.windows(2) {
        let values = pair[1]
            .data()
            .iter()
            .zip(pair[0].data())
            .map(|(b, a)| {
                let d = b - a;
                if d > EVENT_THRESHOLD {
                    1
                } else if d < -EVENT_THRESHOLD {
                    -1
                } else {
                    0
                }
            })
            .collect();
        let p = PolarityImage::new(w, h, values).expect("dimensions match");
        out.push(encode_polarity(&p));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Camouflage,
    Mixed,
    Longterm,
}

impl SuiteName {
    pub fn name(self) -> &'static str {
        match self {
            SuiteName::Camouflage => "camouflage",
            SuiteName::Mixed => "mixed",
            SuiteName::Longterm => "longterm",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "camouflage" => Ok(SuiteName::Camouflage),
            "mixed" => Ok(SuiteName::Mixed),
            "longterm" | "long-term" | "long_term" => Ok(SuiteName::Longterm),
            other => Err(Error::invalid(format!("unknown suite `{other}`"))),
        }
    }
}

/// Configs of a named suite with seeds `base_seed .. base_seed + n_seeds`.
/// In the mixed suite the first half is color-easy and the rest camouflaged.
pub fn suite_configs(suite: SuiteName, n_seeds: usize, base_seed: u64) -> Result<Vec<SynthConfig>> {
    if n_seeds == 0 {
        return Err(Error::invalid("a suite needs at least one seed"));
    }
    Ok((0..n_seeds)
        .map(|i| {
            let seed = base_seed + i as u64;
            match suite {
                SuiteName::Camouflage => SynthConfig::camouflage(seed),
                SuiteName::Mixed if i < n_seeds / 2 => SynthConfig::rgb_easy(seed),
                SuiteName::Mixed => SynthConfig::camouflage(seed),
                SuiteName::Longterm => SynthConfig::occlusion(seed),
            }
        })
        .collect())
}

/// Generates a named suite starting at seed 0.
pub fn make_suite(name: &str, n_seeds: usize) -> Result<Vec<(SynthConfig, ModalSequence)>> {
    let suite: SuiteName = name.parse()?;
    make_suite_from(suite, n_seeds, 0)
}

pub fn make_suite_from(suite: SuiteName, n_seeds: usize, base_seed: u64) -> Result<Vec<(SynthConfig, ModalSequence)>> {
    suite_configs(suite, n_seeds, base_seed)?
        .into_par_iter()
        .map(|cfg| generate(&cfg).map(|seq| (cfg, seq)))
        .collect()
}
