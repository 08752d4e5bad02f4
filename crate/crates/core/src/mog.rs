//! Per-pixel adaptive mixture-of-Gaussians background model.
//!
//! Every pixel carries `K` weighted isotropic Gaussians kept sorted by rank
//! `w / σ`. A new sample is tested against the components in rank order;
//! the first one within `match_d · σ` absorbs it. The smallest prefix of
//! components whose weights exceed `T` is the background; a sample that
//! matches outside that prefix, or matches nothing, is foreground.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::ForegroundMask;
use crate::pixbuf::{Frame, FrameShape};

pub const MAX_CHANNELS: usize = 3;

/// Weight drift tolerated before the mixture is renormalized.
const RENORMALIZE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MogError {
    #[error("frame is {found}, model expects {expected}")]
    DimensionMismatch {
        expected: FrameShape,
        found: FrameShape,
    },
    #[error("invalid background model configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    /// Per-channel mean; only the first `channels` entries are meaningful.
    pub mean: [f64; MAX_CHANNELS],
    pub sigma: f64,
}

impl GaussianComponent {
    #[inline]
    pub fn rank(&self) -> f64 {
        self.weight / self.sigma
    }

    #[inline]
    fn distance_sq(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.mean)
            .map(|(a, m)| (a - m) * (a - m))
            .sum()
    }

    /// Isotropic D-variate normal density at `z`, D = `z.len()`.
    pub fn density(&self, z: &[f64]) -> f64 {
        let var = self.sigma * self.sigma;
        let norm = (2.0 * PI * var).powf(z.len() as f64 / 2.0);
        (-0.5 * self.distance_sq(z) / var).exp() / norm
    }
}

/// `‖z − μ‖ < d·σ`.
#[inline]
pub fn match_component(c: &GaussianComponent, z: &[f64], d: f64) -> bool {
    c.distance_sq(z).sqrt() < d * c.sigma
}

/// Smallest prefix length whose cumulative weight exceeds `t`, or the full
/// length when no prefix does.
pub fn background_count(components: &[GaussianComponent], t: f64) -> usize {
    let mut acc = 0.0;
    for (i, c) in components.iter().enumerate() {
        acc += c.weight;
        if acc > t {
            return i + 1;
        }
    }
    components.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MogConfig {
    pub k: usize,
    pub alpha: f64,
    pub match_d: f64,
    pub t: f64,
    pub sigma_init: f64,
    pub sigma_floor: f64,
    /// Weight given to a replacement component before renormalization.
    pub w_new_floor: f64,
}

impl Default for MogConfig {
    fn default() -> Self {
        Self {
            k: 3,
            alpha: 0.01,
            match_d: 2.5,
            t: 0.7,
            sigma_init: 30.0,
            sigma_floor: 4.0,
            w_new_floor: 0.05,
        }
    }
}

impl MogConfig {
    pub fn validate(&self) -> Result<(), MogError> {
        let bad = |msg: &str| Err(MogError::InvalidConfig(msg.to_string()));
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        // alpha = 0 freezes the model; allowed for diagnostics
        if !(0.0..1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1)");
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return bad("t must lie in (0, 1)");
        }
        if !(self.match_d > 0.0) {
            return bad("match_d must be positive");
        }
        if !(self.sigma_floor > 0.0) {
            return bad("sigma_floor must be positive");
        }
        if !(self.sigma_init >= self.sigma_floor) {
            return bad("sigma_init must be at least sigma_floor");
        }
        if !(self.w_new_floor > 0.0 && self.w_new_floor <= 1.0) {
            return bad("w_new_floor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// One pixel's mixture, `K` components sorted by decreasing rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMixture {
    pub components: Vec<GaussianComponent>,
}

impl PixelMixture {
    /// Component 0 takes all the weight; the rest start empty at the same mean.
    pub fn initial(z: &[f64], config: &MogConfig) -> Self {
        let mut components = vec![empty_component(z, config.sigma_init); config.k];
        components[0].weight = 1.0;
        Self { components }
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Absorbs sample `z`; returns whether it is foreground.
    pub fn update(&mut self, z: &[f64], config: &MogConfig) -> bool {
        update_components(&mut self.components, z, config)
    }
}

fn empty_component(z: &[f64], sigma: f64) -> GaussianComponent {
    let mut mean = [0.0; MAX_CHANNELS];
    mean[..z.len()].copy_from_slice(z);
    GaussianComponent {
        weight: 0.0,
        mean,
        sigma,
    }
}

/// In-place mixture update over a rank-sorted component slice.
pub fn update_components(comps: &mut [GaussianComponent], z: &[f64], config: &MogConfig) -> bool {
    let alpha = config.alpha;
    let matched = comps
        .iter()
        .position(|c| match_component(c, z, config.match_d));

    for (i, c) in comps.iter_mut().enumerate() {
        let m = if Some(i) == matched { 1.0 } else { 0.0 };
        c.weight = (1.0 - alpha) * c.weight + alpha * m;
    }

    match matched {
        Some(i) => {
            let c = &mut comps[i];
            let rho = (alpha * c.density(z)).min(1.0);
            if rho > 0.0 {
                for (m, &v) in c.mean.iter_mut().zip(z) {
                    *m = (1.0 - rho) * *m + rho * v;
                }
                // deviation is taken against the updated mean
                let var = (1.0 - rho) * c.sigma * c.sigma + rho * c.distance_sq(z);
                c.sigma = var.sqrt();
            }
        }
        None => {
            // lowest weight goes; among equal weights the lowest-ranked one
            let mut victim = comps.len() - 1;
            for (i, c) in comps.iter().enumerate().rev() {
                if c.weight < comps[victim].weight {
                    victim = i;
                }
            }
            comps[victim] = empty_component(z, config.sigma_init);
            comps[victim].weight = config.w_new_floor;
        }
    }

    let sum: f64 = comps.iter().map(|c| c.weight).sum();
    if (sum - 1.0).abs() > RENORMALIZE_EPS {
        for c in comps.iter_mut() {
            c.weight /= sum;
        }
    }
    for c in comps.iter_mut() {
        if c.sigma < config.sigma_floor {
            c.sigma = config.sigma_floor;
        }
    }

    // stable insertion sort by decreasing rank, following the matched slot
    let mut matched_pos = matched;
    for i in 1..comps.len() {
        let mut j = i;
        while j > 0 && comps[j - 1].rank() < comps[j].rank() {
            comps.swap(j - 1, j);
            matched_pos = matched_pos.map(|p| {
                if p == j {
                    j - 1
                } else if p == j - 1 {
                    j
                } else {
                    p
                }
            });
            j -= 1;
        }
    }

    match matched_pos {
        Some(p) => p >= background_count(comps, config.t),
        None => true,
    }
}

/// Mixture grid for a whole frame, stored flat as `width · height · K`
/// components.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    width: usize,
    height: usize,
    channels: usize,
    grid: Vec<GaussianComponent>,
    config: MogConfig,
    frames_seen: u64,
    threads: usize,
}

impl BackgroundModel {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        first_frame: &Frame,
        config: MogConfig,
    ) -> Result<Self, MogError> {
        config.validate()?;
        let expected = FrameShape {
            width,
            height,
            channels,
        };
        if first_frame.shape() != expected {
            return Err(MogError::DimensionMismatch {
                expected,
                found: first_frame.shape(),
            });
        }
        let mut grid = Vec::with_capacity(width * height * config.k);
        let mut z = [0.0; MAX_CHANNELS];
        for px in first_frame.samples().chunks_exact(channels) {
            for (dst, &s) in z.iter_mut().zip(px) {
                *dst = f64::from(s);
            }
            grid.extend(PixelMixture::initial(&z[..channels], &config).components);
        }
        Ok(Self {
            width,
            height,
            channels,
            grid,
            config,
            frames_seen: 0,
            threads: 1,
        })
    }

    pub fn from_frame(first_frame: &Frame, config: MogConfig) -> Result<Self, MogError> {
        Self::new(
            first_frame.width(),
            first_frame.height(),
            first_frame.channels(),
            first_frame,
            config,
        )
    }

    /// Number of row bands updated concurrently by [`process_frame`].
    ///
    /// [`process_frame`]: Self::process_frame
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads.max(1);
    }

    pub fn config(&self) -> &MogConfig {
        &self.config
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn mixture(&self, x: usize, y: usize) -> PixelMixture {
        let k = self.config.k;
        let start = (y * self.width + x) * k;
        PixelMixture {
            components: self.grid[start..start + k].to_vec(),
        }
    }

    pub fn mixtures(&self) -> impl Iterator<Item = &[GaussianComponent]> {
        self.grid.chunks_exact(self.config.k)
    }

    /// Updates every pixel with `frame` and returns the foreground mask.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<ForegroundMask, MogError> {
        let expected = FrameShape {
            width: self.width,
            height: self.height,
            channels: self.channels,
        };
        if frame.shape() != expected {
            return Err(MogError::DimensionMismatch {
                expected,
                found: frame.shape(),
            });
        }
        let mut mask = ForegroundMask::new(self.width, self.height);
        let (k, ch, cfg) = (self.config.k, self.channels, self.config);
        let bands = self.threads.min(self.height).max(1);
        if bands == 1 {
            update_band(&mut self.grid, frame.samples(), mask.bits_mut(), k, ch, &cfg);
        } else {
            let rows = self.height.div_ceil(bands);
            let px = rows * self.width;
            std::thread::scope(|s| {
                for ((grid, samples), bits) in self
                    .grid
                    .chunks_mut(px * k)
                    .zip(frame.samples().chunks(px * ch))
                    .zip(mask.bits_mut().chunks_mut(px))
                {
                    s.spawn(move || update_band(grid, samples, bits, k, ch, &cfg));
                }
            });
        }
        self.frames_seen += 1;
        Ok(mask)
    }
}

fn update_band(
    grid: &mut [GaussianComponent],
    samples: &[u8],
    bits: &mut [bool],
    k: usize,
    channels: usize,
    config: &MogConfig,
) {
    let mut z = [0.0; MAX_CHANNELS];
    for ((comps, px), bit) in grid
        .chunks_exact_mut(k)
        .zip(samples.chunks_exact(channels))
        .zip(bits.iter_mut())
    {
        for (dst, &s) in z.iter_mut().zip(px) {
            *dst = f64::from(s);
        }
        *bit = update_components(comps, &z[..channels], config);
    }
}
