//! Seeded synthetic silhouettes, labeled corpora and moving test scenes.
//!
//! All randomness comes from [`Rng`], a xorshift64* generator seeded through
//! splitmix64, so every mask and frame is reproducible bit for bit from its
//! seed on any platform.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::ForegroundMask;
use crate::pixbuf::{encode_pnm, Frame};

/// xorshift64* (Vigna 2014): shifts 12, 25, 27 and multiplier
/// `0x2545F4914F6CDD1D`. The state is initialised from the seed with one
/// splitmix64 step (increment `0x9E3779B97F4A7C15`, multipliers
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let state = splitmix64(seed);
        Self {
            state: if state == 0 { 0x9E37_79B9_7F4A_7C15 } else { state },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as i64
    }

    /// Standard normal deviate by the Box–Muller transform.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("shape {shape} does not fit a {width}x{height} canvas with a {margin}-pixel margin")]
    DoesNotFit {
        shape: &'static str,
        width: usize,
        height: usize,
        margin: usize,
    },
    #[error("invalid shape parameters: {0}")]
    InvalidParams(String),
    #[error("corpus size must be at least 1")]
    EmptyCorpus,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub const MARGIN: usize = 2;
/// Canvas used for corpora, matching a 160×120 camera.
pub const CORPUS_WIDTH: usize = 160;
pub const CORPUS_HEIGHT: usize = 120;

/// Head ellipse on a neck, a short shoulder slope and a torso block, all
/// symmetric about one vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaShapeParams {
    /// Head semi-axis across.
    pub a_h: f64,
    /// Head semi-axis down.
    pub b_h: f64,
    pub neck_width: f64,
    pub shoulder_span: f64,
    /// Rows over which the neck widens into the shoulders.
    pub shoulder_drop: f64,
    /// Per-row boundary noise, uniform in `[-jitter, jitter]`.
    pub jitter: f64,
    /// Rows from the head top to the bottom of the torso.
    pub body_height: f64,
    pub seed: u64,
}

/// True widths and placement of a rendered omega.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaTruth {
    pub neck_width: f64,
    pub shoulder_width: f64,
    pub axis_x: f64,
    pub top: i64,
    pub body_height: f64,
}

impl OmegaShapeParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [self.a_h, self.b_h, self.neck_width, self.shoulder_span, self.shoulder_drop, self.body_height];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) || !(self.jitter >= 0.0) {
            return Err(SynthError::InvalidParams("all dimensions must be positive".into()));
        }
        if !(self.neck_width < 2.0 * self.a_h && 2.0 * self.a_h < self.shoulder_span) {
            return Err(SynthError::InvalidParams(
                "need neck width < head width < shoulder span".into(),
            ));
        }
        if 2.0 * self.b_h >= self.neck_end() || self.neck_end() + self.shoulder_drop >= self.body_height
        {
            return Err(SynthError::InvalidParams(
                "head, neck and shoulders must stack inside the body height".into(),
            ));
        }
        Ok(())
    }

    fn neck_end(&self) -> f64 {
        (0.25 * self.body_height).ceil()
    }

    /// Silhouette width at pixel-centre row `yc` measured from the top.
    fn width_at(&self, yc: f64) -> f64 {
        if yc < 0.0 || yc >= self.body_height {
            return 0.0;
        }
        let mut w: f64 = 0.0;
        let t = (yc - self.b_h) / self.b_h;
        if t.abs() < 1.0 {
            w = w.max(2.0 * self.a_h * (1.0 - t * t).sqrt());
        }
        let neck_end = self.neck_end();
        if yc >= self.b_h && yc < neck_end {
            w = w.max(self.neck_width);
        } else if yc >= neck_end && yc < neck_end + self.shoulder_drop {
            let s = (yc - neck_end) / self.shoulder_drop;
            w = w.max(self.neck_width + (self.shoulder_span - self.neck_width) * s);
        } else if yc >= neck_end {
            w = w.max(self.shoulder_span);
        }
        w
    }

    /// Draws ranges documented in the crate README: body height 80–112
    /// rows, head half-width 6–9, neck 45–75% of the head width and a
    /// neck/shoulder ratio in `[0.30, 0.60]`, with neck and shoulder widths
    /// snapped to even pixel counts.
    pub fn sample(rng: &mut Rng, canvas_width: usize, canvas_height: usize) -> Self {
        let max_h = (canvas_height - 2 * MARGIN) as f64;
        let body_height = rng.uniform(80.0, 112.0).min(max_h).floor();
        let h = body_height - 1.0;
        let band = (h / 40.0).round().max(1.0);
        let a_h = rng.uniform(6.0, 9.0);
        let b_max = (h / 6.0 - band - 1.0) / 2.0;
        let b_h = (a_h * rng.uniform(1.0, 1.3)).min(b_max);
        let f = rng.uniform(0.45, 0.75);
        let ratio = rng.uniform(0.30, (f - 0.03).min(0.60));
        // even widths render to exactly that many pixels about an integer
        // axis, at every scale
        let even = |w: f64| 2.0 * (w / 2.0).round();
        let neck_width = even(2.0 * a_h * f).clamp(2.0, even(2.0 * a_h - 1.0));
        let max_span = even((canvas_width - 2 * MARGIN - 4) as f64 - 1.0);
        let shoulder_span = even(neck_width / ratio).max(even(2.0 * a_h + 2.0)).min(max_span);
        let drop_max = (body_height / 12.0 - 4.0).max(2.0);
        let shoulder_drop = rng.uniform(2.0, drop_max);
        let jitter = rng.uniform(0.0, 1.0);
        Self {
            a_h,
            b_h,
            neck_width,
            shoulder_span,
            shoulder_drop,
            jitter,
            body_height,
            seed: rng.next_u64(),
        }
    }

    /// Renders into `mask` with the head axis at `axis_x` and the head top
    /// on row `top`; pixels falling off the canvas are dropped.
    pub fn render_into(&self, mask: &mut ForegroundMask, axis_x: f64, top: i64) -> OmegaTruth {
        let mut rng = Rng::new(self.seed);
        let rows = self.body_height.ceil() as i64;
        for r in 0..rows {
            let w = self.width_at(r as f64 + 0.5);
            let jl = rng.uniform(-self.jitter, self.jitter);
            let jr = rng.uniform(-self.jitter, self.jitter);
            if w <= 0.0 {
                continue;
            }
            let y = top + r;
            if y < 0 || y as usize >= mask.height() {
                continue;
            }
            let (lo, hi) = (axis_x - w / 2.0 + jl, axis_x + w / 2.0 + jr);
            let x0 = (lo - 0.5).ceil().max(0.0) as i64;
            let x1 = (hi - 0.5).floor().min(mask.width() as f64 - 1.0) as i64;
            for x in x0..=x1 {
                let xc = x as f64 + 0.5;
                if xc > lo && xc < hi {
                    mask.set(x as usize, y as usize, true);
                }
            }
        }
        OmegaTruth {
            neck_width: self.neck_width,
            shoulder_width: self.shoulder_span,
            axis_x,
            top,
            body_height: self.body_height,
        }
    }

    fn half_extent(&self) -> f64 {
        self.shoulder_span.max(2.0 * self.a_h) / 2.0 + self.jitter
    }
}

/// Omega centered on a fresh canvas, at least `MARGIN` pixels from every
/// edge.
pub fn gen_omega(
    params: &OmegaShapeParams,
    width: usize,
    height: usize,
) -> Result<(ForegroundMask, OmegaTruth), SynthError> {
    params.validate()?;
    let fits = 2.0 * (params.half_extent() + MARGIN as f64) <= width as f64
        && params.body_height.ceil() as usize + 2 * MARGIN <= height;
    if !fits {
        return Err(SynthError::DoesNotFit {
            shape: "omega",
            width,
            height,
            margin: MARGIN,
        });
    }
    let mut mask = ForegroundMask::new(width, height);
    let top = ((height as f64 - params.body_height.ceil()) / 2.0).floor() as i64;
    let truth = params.render_into(&mut mask, width as f64 / 2.0, top);
    Ok((mask, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistractorKind {
    Circle,
    Rectangle,
    Triangle,
    Blob,
    Vehicle,
}

impl DistractorKind {
    pub const ALL: [DistractorKind; 5] = [
        DistractorKind::Circle,
        DistractorKind::Rectangle,
        DistractorKind::Triangle,
        DistractorKind::Blob,
        DistractorKind::Vehicle,
    ];
}

/// Concrete geometry of a distractor, centered on the canvas when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistractorParams {
    Circle { radius: f64 },
    Rectangle { width: f64, height: f64 },
    /// Isosceles triangle rotated by `angle` radians about its centroid.
    Triangle { base: f64, height: f64, angle: f64 },
    /// Disc of `radius` stamped along a seeded 8-direction random walk.
    Blob { steps: u32, radius: f64, seed: u64 },
    /// Body rectangle with two half-disc wheels under it.
    Vehicle { length: f64, body_height: f64, wheel_radius: f64 },
}

impl DistractorParams {
    pub fn kind(&self) -> DistractorKind {
        match self {
            Self::Circle { .. } => DistractorKind::Circle,
            Self::Rectangle { .. } => DistractorKind::Rectangle,
            Self::Triangle { .. } => DistractorKind::Triangle,
            Self::Blob { .. } => DistractorKind::Blob,
            Self::Vehicle { .. } => DistractorKind::Vehicle,
        }
    }

    /// Draws a shape whose largest dimension is about `size` pixels.
    pub fn sample(kind: DistractorKind, size: f64, rng: &mut Rng) -> Self {
        match kind {
            DistractorKind::Circle => Self::Circle { radius: size / 2.0 },
            DistractorKind::Rectangle => {
                let height = size * rng.uniform(0.5, 1.0);
                let width = size * rng.uniform(0.3, 1.2);
                Self::Rectangle { width, height }
            }
            DistractorKind::Triangle => Self::Triangle {
                base: size * rng.uniform(0.6, 1.2),
                height: size * rng.uniform(0.7, 1.0),
                angle: rng.uniform(0.0, 2.0 * PI),
            },
            DistractorKind::Blob => Self::Blob {
                steps: (size * 2.0) as u32,
                radius: rng.uniform(5.0, 9.0),
                seed: rng.next_u64(),
            },
            DistractorKind::Vehicle => {
                let length = size * rng.uniform(1.4, 2.0);
                let body_height = length * rng.uniform(0.22, 0.35);
                Self::Vehicle {
                    length,
                    body_height,
                    wheel_radius: body_height * rng.uniform(0.25, 0.4),
                }
            }
        }
    }

    /// Renders centered on a fresh canvas.
    pub fn render(&self, width: usize, height: usize) -> Result<ForegroundMask, SynthError> {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let mut mask = ForegroundMask::new(width, height);
        let min = MARGIN as f64;
        let (max_x, max_y) = (width as f64 - MARGIN as f64, height as f64 - MARGIN as f64);
        let inside = |x: f64, y: f64| x >= min && y >= min && x <= max_x && y <= max_y;
        let fill = |mask: &mut ForegroundMask, f: &dyn Fn(f64, f64) -> bool| {
            for y in 0..height {
                for x in 0..width {
                    if f(x as f64 + 0.5, y as f64 + 0.5) {
                        mask.set(x, y, true);
                    }
                }
            }
        };
        let fits = match *self {
            Self::Circle { radius } => {
                fill(&mut mask, &|x, y| (x - cx).powi(2) + (y - cy).powi(2) <= radius * radius);
                inside(cx - radius, cy - radius) && inside(cx + radius, cy + radius)
            }
            Self::Rectangle { width: w, height: h } => {
                let (x0, y0) = ((cx - w / 2.0).round(), (cy - h / 2.0).round());
                let (x1, y1) = (x0 + w.round(), y0 + h.round());
                fill(&mut mask, &|x, y| x > x0 && x < x1 && y > y0 && y < y1);
                inside(x0, y0) && inside(x1, y1)
            }
            Self::Triangle { base, height: h, angle } => {
                // centroid at the origin before rotation
                let local = [(0.0, -2.0 * h / 3.0), (base / 2.0, h / 3.0), (-base / 2.0, h / 3.0)];
                let (s, c) = angle.sin_cos();
                let v: Vec<(f64, f64)> = local
                    .iter()
                    .map(|&(x, y)| (cx + c * x - s * y, cy + s * x + c * y))
                    .collect();
                let edge = |a: (f64, f64), b: (f64, f64), x: f64, y: f64| {
                    (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0)
                };
                fill(&mut mask, &|x, y| {
                    let e = [edge(v[0], v[1], x, y), edge(v[1], v[2], x, y), edge(v[2], v[0], x, y)];
                    e.iter().all(|&d| d >= 0.0) || e.iter().all(|&d| d <= 0.0)
                });
                v.iter().all(|&(x, y)| inside(x, y))
            }
            Self::Blob { steps, radius, seed } => {
                let mut rng = Rng::new(seed);
                let (lo_x, hi_x) = (min + radius, max_x - radius);
                let (lo_y, hi_y) = (min + radius, max_y - radius);
                let (mut x, mut y) = (cx, cy);
                let mut centers = vec![(x, y)];
                for _ in 0..steps {
                    x = (x + rng.range_inclusive(-1, 1) as f64).clamp(lo_x, hi_x);
                    y = (y + rng.range_inclusive(-1, 1) as f64).clamp(lo_y, hi_y);
                    centers.push((x, y));
                }
                let r2 = radius * radius;
                for &(px, py) in &centers {
                    let (x0, x1) = ((px - radius).floor() as usize, (px + radius).ceil() as usize);
                    let (y0, y1) = ((py - radius).floor() as usize, (py + radius).ceil() as usize);
                    for yy in y0..y1.min(height) {
                        for xx in x0..x1.min(width) {
                            let (dx, dy) = (xx as f64 + 0.5 - px, yy as f64 + 0.5 - py);
                            if dx * dx + dy * dy <= r2 {
                                mask.set(xx, yy, true);
                            }
                        }
                    }
                }
                lo_x <= hi_x && lo_y <= hi_y
            }
            Self::Vehicle { length, body_height, wheel_radius } => {
                let (x0, x1) = (cx - length / 2.0, cx + length / 2.0);
                let (y0, y1) = (cy - body_height / 2.0, cy + body_height / 2.0);
                let wheels = [x0 + 0.2 * length, x0 + 0.8 * length];
                fill(&mut mask, &|x, y| {
                    let body = x > x0 && x < x1 && y > y0 && y < y1;
                    let wheel = y >= y1 - 0.5
                        && wheels
                            .iter()
                            .any(|&wx| (x - wx).powi(2) + (y - y1).powi(2) <= wheel_radius * wheel_radius);
                    body || wheel
                });
                inside(x0, y0) && inside(x1, y1 + wheel_radius)
            }
        };
        if !fits {
            return Err(SynthError::DoesNotFit {
                shape: "distractor",
                width,
                height,
                margin: MARGIN,
            });
        }
        Ok(mask)
    }
}

/// Samples and renders one distractor of roughly `size` pixels on a
/// `width`×`height` canvas.
pub fn gen_distractor(
    kind: DistractorKind,
    size: f64,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<(ForegroundMask, DistractorParams), SynthError> {
    let params = DistractorParams::sample(kind, size, &mut Rng::new(seed));
    Ok((params.render(width, height)?, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Human,
    NonHuman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeParams {
    Omega(OmegaShapeParams),
    Distractor(DistractorParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub params: ShapeParams,
    pub seed: u64,
}

pub type CorpusManifest = Vec<ManifestEntry>;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSample {
    pub entry: ManifestEntry,
    pub mask: ForegroundMask,
}

/// Seed of the `index`-th corpus entry.
pub fn entry_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

fn sample_distractor(rng: &mut Rng, width: usize, height: usize) -> (ForegroundMask, DistractorParams) {
    let kind = DistractorKind::ALL[rng.range_inclusive(0, 4) as usize];
    loop {
        let size = rng.uniform(30.0, 100.0);
        let params = DistractorParams::sample(kind, size, rng);
        if let Ok(mask) = params.render(width, height) {
            return (mask, params);
        }
    }
}

/// `n_per_class` omegas followed by `n_per_class` distractors with kinds
/// drawn uniformly, all on a 160×120 canvas.
pub fn build_corpus(n_per_class: usize, seed: u64) -> Result<Vec<CorpusSample>, SynthError> {
    if n_per_class == 0 {
        return Err(SynthError::EmptyCorpus);
    }
    let (w, h) = (CORPUS_WIDTH, CORPUS_HEIGHT);
    let mut out = Vec::with_capacity(2 * n_per_class);
    for index in 0..2 * n_per_class {
        let s = entry_seed(seed, index);
        let mut rng = Rng::new(s);
        let (mask, label, params, path) = if index < n_per_class {
            let params = OmegaShapeParams::sample(&mut rng, w, h);
            let (mask, _) = gen_omega(&params, w, h)?;
            (mask, Label::Human, ShapeParams::Omega(params), format!("human_{index:05}.pgm"))
        } else {
            let (mask, params) = sample_distractor(&mut rng, w, h);
            let name = format!("other_{:05}.pgm", index - n_per_class);
            (mask, Label::NonHuman, ShapeParams::Distractor(params), name)
        };
        out.push(CorpusSample {
            entry: ManifestEntry { path, label, params, seed: s },
            mask,
        });
    }
    Ok(out)
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every mask as P5 plus `manifest.json` into `dir`, creating it if
/// needed. Returns the manifest path.
pub fn write_corpus(dir: &Path, corpus: &[CorpusSample]) -> Result<PathBuf, SynthError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for sample in corpus {
        let path = dir.join(&sample.entry.path);
        fs::write(&path, encode_pnm(&sample.mask.to_frame())).map_err(io_err(&path))?;
    }
    let manifest: CorpusManifest = corpus.iter().map(|s| s.entry.clone()).collect();
    let path = dir.join(MANIFEST_NAME);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<CorpusManifest, SynthError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| SynthError::Manifest {
        path: path.to_path_buf(),
        source,
    })
}

/// Something drawn into a [`Scene`] from `start_frame` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneActor {
    /// Axis-aligned square moving with constant velocity, wrapping around
    /// inside the canvas.
    Square {
        size: usize,
        x0: i64,
        y0: i64,
        vx: i64,
        vy: i64,
        start_frame: usize,
    },
    /// Omega whose axis moves horizontally by `vx` pixels per frame.
    Omega {
        params: OmegaShapeParams,
        axis_x0: f64,
        top: i64,
        vx: f64,
        start_frame: usize,
    },
}

/// Dark static background with Gaussian sensor noise and bright actors.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub background: u8,
    pub foreground: u8,
    pub noise_sigma: f64,
    pub seed: u64,
    pub actors: Vec<SceneActor>,
}

impl Scene {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            background: 40,
            foreground: 220,
            noise_sigma: 2.0,
            seed,
            actors: Vec::new(),
        }
    }

    pub fn with_actor(mut self, actor: SceneActor) -> Self {
        self.actors.push(actor);
        self
    }

    /// Pixels covered by actors in frame `index`.
    pub fn truth(&self, index: usize) -> ForegroundMask {
        let mut mask = ForegroundMask::new(self.width, self.height);
        for actor in &self.actors {
            match *actor {
                SceneActor::Square { size, x0, y0, vx, vy, start_frame } => {
                    if index < start_frame {
                        continue;
                    }
                    let t = (index - start_frame) as i64;
                    let span_x = (self.width - size) as i64 + 1;
                    let span_y = (self.height - size) as i64 + 1;
                    let x = (x0 + vx * t).rem_euclid(span_x) as usize;
                    let y = (y0 + vy * t).rem_euclid(span_y) as usize;
                    for yy in y..y + size {
                        for xx in x..x + size {
                            mask.set(xx, yy, true);
                        }
                    }
                }
                SceneActor::Omega { params, axis_x0, top, vx, start_frame } => {
                    if index < start_frame {
                        continue;
                    }
                    let axis = axis_x0 + vx * (index - start_frame) as f64;
                    params.render_into(&mut mask, axis, top);
                }
            }
        }
        mask
    }

    /// Grayscale frame `index`; the noise stream depends only on the scene
    /// seed and the index.
    pub fn frame(&self, index: usize) -> Frame {
        let truth = self.truth(index);
        let mut rng = Rng::new(splitmix64(self.seed) ^ index as u64);
        let samples = truth
            .bits()
            .iter()
            .map(|&fg| {
                let base = if fg { self.foreground } else { self.background };
                (f64::from(base) + self.noise_sigma * rng.normal()).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Frame::new(self.width, self.height, 1, samples).expect("scene geometry")
    }
}
