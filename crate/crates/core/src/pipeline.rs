//! Frame loop: background subtraction, contour extraction, classification
//! and counting, plus JSON Lines reports and annotated output frames.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{label_components, trace_boundary, BBox, Component, ContourPath};
use crate::mask::ForegroundMask;
use crate::mog::{BackgroundModel, MogConfig, MogError};
use crate::omega::{classify, DescriptorOutcome, OmegaConfig, Votes};
use crate::pixbuf::{Frame, FrameSequence, SequenceError};

pub const DEFAULT_BURN_IN: usize = 50;
pub const HUMAN_COLOR: [u8; 3] = [0, 255, 0];
pub const OTHER_COLOR: [u8; 3] = [255, 0, 0];
pub const COUNT_COLOR: [u8; 3] = [255, 255, 0];
/// Count bars are 2 pixels wide, 8 high, one pixel apart.
pub const BAR_WIDTH: usize = 2;
pub const BAR_HEIGHT: usize = 8;
pub const BAR_PITCH: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: SequenceError,
    },
    #[error("frame {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: MogError,
    },
    #[error("empty frame sequence")]
    EmptySequence,
}

/// Minimum component area scaled from 100 pixels at 160×120.
pub fn default_min_area(width: usize, height: usize) -> usize {
    (100 * width * height / 19_200).max(1)
}

/// Raw descriptor values of one contour as written to reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorValues {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub ratio: Option<f64>,
    pub s_prime: Option<f64>,
    pub max_other: Option<f64>,
    pub minima_count: Option<usize>,
    pub a_r: Option<f64>,
    pub a_c: Option<f64>,
    pub r_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRecord {
    pub id: usize,
    pub bbox: BBox,
    pub area: usize,
    pub votes: Votes,
    pub values: DescriptorValues,
    pub h_score: f64,
    pub is_human: bool,
}

impl ContourRecord {
    fn new(id: usize, component: &Component, outcome: DescriptorOutcome) -> Self {
        Self {
            id,
            bbox: component.bbox,
            area: component.area,
            votes: outcome.votes,
            values: DescriptorValues {
                m1: outcome.m1,
                m2: outcome.m2,
                ratio: outcome.ratio,
                s_prime: outcome.s_prime,
                max_other: outcome.max_other,
                minima_count: outcome.minima_count,
                a_r: outcome.a_r,
                a_c: outcome.a_c,
                r_s: outcome.r_s,
            },
            h_score: outcome.h_score,
            is_human: outcome.is_human,
        }
    }
}

/// Per-stage wall time in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bgsub: Option<f64>,
    pub detect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(rename = "frame")]
    pub frame_index: usize,
    #[serde(rename = "count")]
    pub human_count: usize,
    #[serde(rename = "contours")]
    pub records: Vec<ContourRecord>,
    #[serde(rename = "timings_ms", skip_serializing_if = "Option::is_none")]
    pub timing: Option<StageTimings>,
}

impl DetectionReport {
    /// One JSON object on a single line, without the trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn without_timing(mut self) -> Self {
        self.timing = None;
        self
    }
}

/// Components of at least `min_area` pixels with their traced boundaries.
/// Components too small to trace are skipped.
pub fn extract_contours(mask: &ForegroundMask, min_area: usize) -> Vec<(Component, ContourPath)> {
    label_components(mask, min_area)
        .into_iter()
        .filter_map(|c| trace_boundary(mask, &c).ok().map(|p| (c, p)))
        .collect()
}

/// Classifies every component of a pre-segmented mask. Never fails; an
/// empty mask gives a report with no records.
pub fn detect_in_mask(mask: &ForegroundMask, cfg: &OmegaConfig, min_area: usize) -> DetectionReport {
    let started = Instant::now();
    let records: Vec<ContourRecord> = extract_contours(mask, min_area)
        .iter()
        .map(|(c, path)| ContourRecord::new(c.label, c, classify(path, cfg)))
        .collect();
    let human_count = records.iter().filter(|r| r.is_human).count();
    DetectionReport {
        frame_index: 0,
        human_count,
        records,
        timing: Some(StageTimings {
            bgsub: None,
            detect: started.elapsed().as_secs_f64() * 1e3,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// `None` selects [`default_min_area`] for the sequence resolution.
    pub min_area: Option<usize>,
    pub burn_in: usize,
    pub threads: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            min_area: None,
            burn_in: DEFAULT_BURN_IN,
            threads: 1,
        }
    }
}

/// Result of pushing one frame through [`SequenceProcessor`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub index: usize,
    pub mask: ForegroundMask,
    pub bgsub_ms: f64,
    /// `None` for burn-in frames.
    pub report: Option<DetectionReport>,
}

/// Stateful frame loop. The background model is initialised from the first
/// frame pushed, which is then processed like every other frame.
#[derive(Debug)]
pub struct SequenceProcessor {
    mog: MogConfig,
    omega: OmegaConfig,
    options: PipelineOptions,
    model: Option<BackgroundModel>,
    next_index: usize,
}

impl SequenceProcessor {
    pub fn new(mog: MogConfig, omega: OmegaConfig, options: PipelineOptions) -> Self {
        Self {
            mog,
            omega,
            options,
            model: None,
            next_index: 0,
        }
    }

    pub fn push(&mut self, frame: &Frame) -> Result<FrameOutput, PipelineError> {
        let index = self.next_index;
        let model_err = |source| PipelineError::Model { index, source };
        if self.model.is_none() {
            let model = BackgroundModel::from_frame(frame, self.mog)
                .map_err(model_err)?
                .with_threads(self.options.threads);
            self.model = Some(model);
        }
        let model = self.model.as_mut().expect("initialised above");
        let started = Instant::now();
        let mask = model.process_frame(frame).map_err(model_err)?;
        let bgsub_ms = started.elapsed().as_secs_f64() * 1e3;
        self.next_index += 1;
        let report = (index >= self.options.burn_in).then(|| {
            let min_area = self
                .options
                .min_area
                .unwrap_or_else(|| default_min_area(frame.width(), frame.height()));
            let mut report = detect_in_mask(&mask, &self.omega, min_area);
            report.frame_index = index;
            if let Some(t) = report.timing.as_mut() {
                t.bgsub = Some(bgsub_ms);
            }
            report
        });
        Ok(FrameOutput {
            index,
            mask,
            bgsub_ms,
            report,
        })
    }
}

/// Runs a whole file sequence and collects the non-burn-in reports.
pub fn process_sequence(
    seq: &FrameSequence,
    mog: MogConfig,
    omega: OmegaConfig,
    options: PipelineOptions,
) -> Result<Vec<DetectionReport>, PipelineError> {
    if seq.is_empty() {
        return Err(PipelineError::EmptySequence);
    }
    let mut processor = SequenceProcessor::new(mog, omega, options);
    let mut reports = Vec::new();
    for (index, frame) in seq.frames().enumerate() {
        let frame = frame.map_err(|source| PipelineError::Frame { index, source })?;
        reports.extend(processor.push(&frame)?.report);
    }
    Ok(reports)
}

fn to_rgb(frame: &Frame) -> Frame {
    match frame.channels() {
        3 => frame.clone(),
        _ => {
            let samples = frame
                .samples()
                .chunks_exact(frame.channels())
                .flat_map(|px| [px[0]; 3])
                .collect();
            Frame::new(frame.width(), frame.height(), 3, samples).expect("same geometry")
        }
    }
}

fn paint(frame: &mut Frame, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < frame.width() && (y as usize) < frame.height() {
        frame.pixel_mut(x as usize, y as usize).copy_from_slice(&color);
    }
}

/// RGB copy of `frame` with a 1-pixel bounding box per record (green for
/// humans, red otherwise) and one yellow bar per counted human across the
/// top-left corner.
pub fn render_annotations(frame: &Frame, report: &DetectionReport) -> Frame {
    let mut out = to_rgb(frame);
    for record in &report.records {
        let color = if record.is_human { HUMAN_COLOR } else { OTHER_COLOR };
        let b = record.bbox;
        for x in b.x_min..=b.x_max {
            paint(&mut out, x, b.y_min, color);
            paint(&mut out, x, b.y_max, color);
        }
        for y in b.y_min..=b.y_max {
            paint(&mut out, b.x_min, y, color);
            paint(&mut out, b.x_max, y, color);
        }
    }
    for i in 0..report.human_count {
        for dx in 0..BAR_WIDTH {
            for y in 0..BAR_HEIGHT {
                paint(&mut out, (i * BAR_PITCH + dx) as i64, y as i64, COUNT_COLOR);
            }
        }
    }
    out
}
