//! Head–neck–shoulder descriptors and the weighted human decision.
//!
//! Four binary votes are taken on one contour:
//!
//! * **dimensions** – neck width over shoulder width, measured at `h/6` and
//!   `h/3` below the top, must sit inside a band around `t_d`;
//! * **radial** – from an interior point `S` below the head top, the top
//!   must be farther away than every other boundary point above `S`;
//! * **curvature** – the number of local minima of `|κ|` along the upper
//!   third must lie strictly between `a1` and `a2`;
//! * **convexity** – bounding-box area over hull area of the upper third
//!   must lie strictly between `r1` and `r2`.
//!
//! The score `H = s_d·Ω_d + s_m·Ω_m + s_k·Ω_k + s_s·Ω_s` is compared with
//! `omega_th`. Every descriptor works in contour-local coordinates (bounding
//! box at the origin), so integer translations change nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{
    convex_hull, count_local_minima, curvature_series, polygon_area, upper_segment, BBox,
    ContourPath, Point, DEFAULT_DELTA, DEFAULT_MINIMA_NEIGHBORHOOD, DEFAULT_SMOOTH_WINDOW,
};

/// Depth of the upper segment as a fraction of the contour height.
pub const UPPER_FRACTION: f64 = 1.0 / 3.0;
/// Contours shorter than this cannot carry a neck and a shoulder row.
pub const MIN_HEIGHT: i64 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid omega configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaConfig {
    pub t_d: f64,
    pub eps_d: f64,
    pub kappa_s: f64,
    pub a1: i64,
    pub a2: i64,
    pub r1: f64,
    pub r2: f64,
    pub s_d: f64,
    pub s_m: f64,
    pub s_k: f64,
    pub s_s: f64,
    pub omega_th: f64,
    /// Half-height of the width measurement band; 0 selects
    /// `max(1, round(h/40))` per contour.
    pub row_band: u32,
    pub smooth_window: usize,
    pub delta: usize,
    pub neighborhood: usize,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            t_d: 0.45,
            eps_d: 0.15,
            kappa_s: 0.25,
            a1: 1,
            a2: 6,
            r1: 1.05,
            r2: 1.60,
            s_d: 0.25,
            s_m: 0.25,
            s_k: 0.25,
            s_s: 0.25,
            omega_th: 0.75,
            row_band: 0,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            delta: DEFAULT_DELTA,
            neighborhood: DEFAULT_MINIMA_NEIGHBORHOOD,
        }
    }
}

impl OmegaConfig {
    pub fn weights(&self) -> [f64; 4] {
        [self.s_d, self.s_m, self.s_k, self.s_s]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.t_d > 0.0 && self.t_d < 1.0) {
            return bad("t_d must lie in (0, 1)");
        }
        if !(self.eps_d >= 0.0) {
            return bad("eps_d must be non-negative");
        }
        if !(self.kappa_s > 0.0 && self.kappa_s < 1.0) {
            return bad("kappa_s must lie in (0, 1)");
        }
        if self.a1 >= self.a2 {
            return bad("a1 must be less than a2");
        }
        if !(self.r1 >= 1.0 && self.r1 < self.r2) {
            return bad("need 1 <= r1 < r2");
        }
        if !self.weights().iter().all(|w| (0.0..=1.0).contains(w)) {
            return bad("weights must lie in [0, 1]");
        }
        let total: f64 = self.weights().iter().sum();
        if !(self.omega_th >= 0.0 && self.omega_th <= total + 1e-12) {
            return bad("omega_th must lie in [0, s_d + s_m + s_k + s_s]");
        }
        if self.smooth_window == 0 || self.delta == 0 || self.neighborhood == 0 {
            return bad("smooth_window, delta and neighborhood must be positive");
        }
        Ok(())
    }

    pub fn dimensions_vote(&self, ratio: f64) -> bool {
        (ratio - self.t_d).abs() <= self.eps_d
    }

    pub fn curvature_vote(&self, minima_count: usize) -> bool {
        let n = minima_count as i64;
        self.a1 < n && n < self.a2
    }

    pub fn convexity_vote(&self, r_s: f64) -> bool {
        self.r1 < r_s && r_s < self.r2
    }

    fn band_for(&self, h: i64) -> i64 {
        if self.row_band == 0 {
            ((h as f64 / 40.0).round() as i64).max(1)
        } else {
            i64::from(self.row_band)
        }
    }
}

/// The four 0/1 votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Votes {
    pub d: u8,
    pub m: u8,
    pub k: u8,
    pub s: u8,
}

impl Votes {
    pub fn from_bools(d: bool, m: bool, k: bool, s: bool) -> Self {
        Self {
            d: d.into(),
            m: m.into(),
            k: k.into(),
            s: s.into(),
        }
    }

    /// Bit pattern `d·8 + m·4 + k·2 + s`.
    pub fn pattern(&self) -> usize {
        usize::from(self.d) << 3 | usize::from(self.m) << 2 | usize::from(self.k) << 1 | usize::from(self.s)
    }

    pub fn from_pattern(p: usize) -> Self {
        Self::from_bools(p & 8 != 0, p & 4 != 0, p & 2 != 0, p & 1 != 0)
    }
}

/// `H = s_d·Ω_d + s_m·Ω_m + s_k·Ω_k + s_s·Ω_s`.
pub fn weighted_score(votes: Votes, weights: [f64; 4]) -> f64 {
    let [s_d, s_m, s_k, s_s] = weights;
    s_d * f64::from(votes.d) + s_m * f64::from(votes.m) + s_k * f64::from(votes.k) + s_s * f64::from(votes.s)
}

/// Which descriptors could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Degeneracy {
    pub dimensions: bool,
    pub radial: bool,
    pub curvature: bool,
    pub convexity: bool,
}

impl Degeneracy {
    pub fn any(&self) -> bool {
        self.dimensions || self.radial || self.curvature || self.convexity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionsOutcome {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub ratio: Option<f64>,
    pub vote: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOutcome {
    pub s_prime: Option<f64>,
    pub max_other: Option<f64>,
    pub vote: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureOutcome {
    pub minima_count: Option<usize>,
    pub vote: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityOutcome {
    pub a_r: Option<f64>,
    pub a_c: Option<f64>,
    pub r_s: Option<f64>,
    pub vote: bool,
}

/// Raw descriptor values, votes and the fused decision for one contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorOutcome {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub ratio: Option<f64>,
    pub s_prime: Option<f64>,
    pub max_other: Option<f64>,
    pub minima_count: Option<usize>,
    pub a_r: Option<f64>,
    pub a_c: Option<f64>,
    pub r_s: Option<f64>,
    pub votes: Votes,
    pub h_score: f64,
    pub is_human: bool,
    pub degenerate: Degeneracy,
}

struct Local {
    path: ContourPath,
    cx: f64,
}

fn localize(path: &ContourPath) -> Local {
    let path = path.normalized();
    let (cx, _) = path.centroid().relative_to(Point::new(0, 0));
    Local { path, cx }
}

fn median(values: &mut [i64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    })
}

#[derive(Clone, Copy)]
struct RowExtent {
    left_min: i64,
    left_max: i64,
    right_min: i64,
    right_max: i64,
}

fn row_extents(local: &Local) -> Vec<Option<RowExtent>> {
    let h = local.path.h();
    let mut left: Vec<Option<(i64, i64)>> = vec![None; h as usize + 1];
    let mut right: Vec<Option<(i64, i64)>> = vec![None; h as usize + 1];
    for p in local.path.points() {
        let x = p.x as f64;
        let slot = if x < local.cx {
            &mut left[p.y as usize]
        } else if x > local.cx {
            &mut right[p.y as usize]
        } else {
            continue;
        };
        *slot = Some(match *slot {
            None => (p.x, p.x),
            Some((lo, hi)) => (lo.min(p.x), hi.max(p.x)),
        });
    }
    left.into_iter()
        .zip(right)
        .map(|(l, r)| {
            let ((left_min, left_max), (right_min, right_max)) = (l?, r?);
            Some(RowExtent {
                left_min,
                left_max,
                right_min,
                right_max,
            })
        })
        .collect()
}

fn dimensions_local(local: &Local, cfg: &OmegaConfig) -> DimensionsOutcome {
    let degenerate = DimensionsOutcome {
        m1: None,
        m2: None,
        ratio: None,
        vote: false,
    };
    let h = local.path.h();
    if h < MIN_HEIGHT {
        return degenerate;
    }
    let d = h as f64 / 3.0;
    let d_half = d / 2.0;
    let band = cfg.band_for(h) as f64;
    let extents = row_extents(local);
    let rows = |target: f64| {
        extents
            .iter()
            .enumerate()
            .filter(move |(y, _)| (*y as f64 - target).abs() <= band)
            .filter_map(|(_, e)| *e)
    };
    // inner edges at the neck row, outer edges at the shoulder row
    let mut neck: Vec<i64> = rows(d_half).map(|e| (e.right_min - e.left_max).abs() + 1).collect();
    let mut shoulder: Vec<i64> = rows(d).map(|e| (e.right_max - e.left_min).abs() + 1).collect();
    let (Some(m1), Some(m2)) = (median(&mut neck), median(&mut shoulder)) else {
        return degenerate;
    };
    if m2 <= 0.0 {
        return degenerate;
    }
    let ratio = m1 / m2;
    DimensionsOutcome {
        m1: Some(m1),
        m2: Some(m2),
        ratio: Some(ratio),
        vote: cfg.dimensions_vote(ratio),
    }
}

fn radial_local(local: &Local, cfg: &OmegaConfig) -> RadialOutcome {
    let h = local.path.h() as f64;
    let s = (local.cx, cfg.kappa_s * h);
    let apex = local
        .path
        .points()
        .iter()
        .filter(|p| p.y == 0)
        .min_by(|a, b| {
            let da = (a.x as f64 - local.cx).abs();
            let db = (b.x as f64 - local.cx).abs();
            da.total_cmp(&db).then(a.x.cmp(&b.x))
        })
        .copied()
        .expect("normalized contour has a point on row 0");
    let dist = |p: &Point| ((p.x as f64 - s.0).powi(2) + (p.y as f64 - s.1).powi(2)).sqrt();
    let s_prime = dist(&apex);
    // the whole top row is the digitized apex
    let max_other = local
        .path
        .points()
        .iter()
        .filter(|p| p.y > apex.y && (p.y as f64) < s.1)
        .map(dist)
        .max_by(f64::total_cmp);
    match max_other {
        Some(max_other) => RadialOutcome {
            s_prime: Some(s_prime),
            max_other: Some(max_other),
            vote: s_prime > max_other,
        },
        None => RadialOutcome {
            s_prime: Some(s_prime),
            max_other: None,
            vote: false,
        },
    }
}

fn curvature_local(local: &Local, cfg: &OmegaConfig) -> CurvatureOutcome {
    let degenerate = CurvatureOutcome {
        minima_count: None,
        vote: false,
    };
    let Ok(segment) = upper_segment(&local.path, UPPER_FRACTION) else {
        return degenerate;
    };
    let runs: Vec<(&[Point], bool)> = if segment.closed {
        vec![(segment.points.as_slice(), true)]
    } else {
        segment.runs().into_iter().map(|r| (r, false)).collect()
    };
    let mut total = None;
    for (run, closed) in runs {
        if let Ok(series) = curvature_series(run, closed, cfg.smooth_window, cfg.delta) {
            *total.get_or_insert(0) += count_local_minima(&series.values, cfg.neighborhood);
        }
    }
    match total {
        Some(n) => CurvatureOutcome {
            minima_count: Some(n),
            vote: cfg.curvature_vote(n),
        },
        None => degenerate,
    }
}

fn convexity_local(local: &Local, cfg: &OmegaConfig) -> ConvexityOutcome {
    let degenerate = ConvexityOutcome {
        a_r: None,
        a_c: None,
        r_s: None,
        vote: false,
    };
    let Ok(segment) = upper_segment(&local.path, UPPER_FRACTION) else {
        return degenerate;
    };
    let Some(bbox) = BBox::of_points(&segment.points) else {
        return degenerate;
    };
    let Ok(hull) = convex_hull(&segment.points) else {
        return degenerate;
    };
    let a_c = polygon_area(&hull).unwrap_or(0.0);
    if a_c <= 0.0 {
        return degenerate;
    }
    let a_r = (bbox.width() * bbox.height()) as f64;
    let r_s = a_r / a_c;
    ConvexityOutcome {
        a_r: Some(a_r),
        a_c: Some(a_c),
        r_s: Some(r_s),
        vote: cfg.convexity_vote(r_s),
    }
}

/// Neck width `m1`, shoulder width `m2` and their ratio.
///
/// With `d = h/3`, the neck is measured around `Y_min + d/2` between the
/// innermost boundary points left and right of the centroid, the shoulders
/// around `Y_min + d` between the outermost ones. Each row of the band
/// `±row_band` gives one width; the median over rows is reported.
pub fn descriptor_dimensions(path: &ContourPath, cfg: &OmegaConfig) -> DimensionsOutcome {
    dimensions_local(&localize(path), cfg)
}

/// Distance from `S = (C_x, Y_min + kappa_s·h)` to the head apex against the
/// largest distance to any boundary point between the top row and `S`.
pub fn descriptor_radial(path: &ContourPath, cfg: &OmegaConfig) -> RadialOutcome {
    radial_local(&localize(path), cfg)
}

pub fn descriptor_curvature(path: &ContourPath, cfg: &OmegaConfig) -> CurvatureOutcome {
    curvature_local(&localize(path), cfg)
}

pub fn descriptor_convexity(path: &ContourPath, cfg: &OmegaConfig) -> ConvexityOutcome {
    convexity_local(&localize(path), cfg)
}

/// Runs all four descriptors and applies the weighted decision. Degenerate
/// descriptors vote 0 and are flagged; this never fails.
pub fn classify(path: &ContourPath, cfg: &OmegaConfig) -> DescriptorOutcome {
    let local = localize(path);
    let dims = dimensions_local(&local, cfg);
    let radial = radial_local(&local, cfg);
    let curv = curvature_local(&local, cfg);
    let conv = convexity_local(&local, cfg);
    let votes = Votes::from_bools(dims.vote, radial.vote, curv.vote, conv.vote);
    let h_score = weighted_score(votes, cfg.weights());
    DescriptorOutcome {
        m1: dims.m1,
        m2: dims.m2,
        ratio: dims.ratio,
        s_prime: radial.s_prime,
        max_other: radial.max_other,
        minima_count: curv.minima_count,
        a_r: conv.a_r,
        a_c: conv.a_c,
        r_s: conv.r_s,
        votes,
        h_score,
        is_human: h_score >= cfg.omega_th,
        degenerate: Degeneracy {
            dimensions: dims.ratio.is_none(),
            radial: radial.max_other.is_none(),
            curvature: curv.minima_count.is_none(),
            convexity: conv.r_s.is_none(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{label_components, trace_boundary};
    use crate::mask::ForegroundMask;

    fn trace(m: &ForegroundMask) -> ContourPath {
        let c = label_components(m, 1)[0];
        trace_boundary(m, &c).unwrap()
    }

    fn rect(w: usize, h: usize) -> ContourPath {
        let mut m = ForegroundMask::new(w + 10, h + 10);
        for y in 5..5 + h {
            for x in 5..5 + w {
                m.set(x, y, true);
            }
        }
        trace(&m)
    }

    fn disc(r: f64) -> ContourPath {
        let n = (2.0 * r) as usize + 10;
        let c = (n / 2) as f64;
        let mut m = ForegroundMask::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                m.set(x, y, dx * dx + dy * dy <= r * r);
            }
        }
        trace(&m)
    }

    #[test]
    fn rectangle_has_unit_ratio_and_convexity() {
        let path = rect(30, 60);
        let cfg = OmegaConfig::default();
        let dims = descriptor_dimensions(&path, &cfg);
        assert_eq!(dims.ratio, Some(1.0));
        let conv = descriptor_convexity(&path, &cfg);
        assert_eq!(conv.r_s, Some(1.0));
        assert!(!conv.vote);
        let curv = descriptor_curvature(&path, &cfg);
        assert_eq!(curv.minima_count, Some(0));
        assert!(!descriptor_radial(&path, &cfg).vote);
    }

    #[test]
    fn circle_descriptor_values() {
        let cfg = OmegaConfig::default();
        for r in [30.0, 40.0, 60.0] {
            let path = disc(r);
            let ratio = descriptor_dimensions(&path, &cfg).ratio.unwrap();
            let expect = (5.0f64).sqrt() / (8.0f64).sqrt();
            assert!((ratio / expect - 1.0).abs() <= 0.05, "r={r} ratio={ratio}");
            let r_s = descriptor_convexity(&path, &cfg).r_s.unwrap();
            let bbox = 2.0 * (8.0f64 / 9.0).sqrt() * (2.0 / 3.0);
            let seg = (1.0f64 / 3.0).acos() - (1.0 / 3.0) * (8.0f64 / 9.0).sqrt();
            assert!((r_s / (bbox / seg) - 1.0).abs() <= 0.05, "r={r} r_s={r_s}");
            let radial = descriptor_radial(&path, &cfg);
            assert!(!radial.vote);
            assert!(radial.max_other.unwrap() > radial.s_prime.unwrap());
        }
    }

    #[test]
    fn undersized_contour_is_degenerate() {
        let out = classify(&rect(20, 8), &OmegaConfig::default());
        assert!(out.degenerate.dimensions);
        assert_eq!(out.votes.d, 0);
    }

    #[test]
    fn flat_contour_never_fails() {
        let pts = (0..10).map(|x| Point::new(x, 4)).collect();
        let path = ContourPath::from_boundary(pts).unwrap();
        let out = classify(&path, &OmegaConfig::default());
        assert!(out.degenerate.radial && out.degenerate.dimensions && out.degenerate.convexity);
        assert_eq!(out.h_score, 0.0);
        assert!(!out.is_human);
    }

    #[test]
    fn weighted_rule_examples() {
        let w = [0.25; 4];
        assert_eq!(weighted_score(Votes::from_bools(true, true, true, true), w), 1.0);
        assert_eq!(weighted_score(Votes::default(), w), 0.0);
        let h = weighted_score(Votes::from_bools(true, true, false, true), w);
        assert_eq!(h, 0.75);
        assert!(h >= 0.75);
    }

    #[test]
    fn pattern_round_trip() {
        for p in 0..16 {
            assert_eq!(Votes::from_pattern(p).pattern(), p);
        }
    }

    #[test]
    fn config_validation() {
        assert!(OmegaConfig::default().validate().is_ok());
        for bad in [
            OmegaConfig { a1: 6, a2: 6, ..Default::default() },
            OmegaConfig { r1: 0.9, ..Default::default() },
            OmegaConfig { t_d: 1.0, ..Default::default() },
            OmegaConfig { omega_th: 1.5, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn config_json_keys() {
        let json = serde_json::to_value(OmegaConfig::default()).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut expect = [
            "t_d", "eps_d", "kappa_s", "a1", "a2", "r1", "r2", "s_d", "s_m", "s_k", "s_s",
            "omega_th", "row_band", "smooth_window", "delta", "neighborhood",
        ];
        expect.sort();
        assert_eq!(keys, expect);
        let partial: OmegaConfig = serde_json::from_str(r#"{"t_d": 0.4}"#).unwrap();
        assert_eq!(partial.t_d, 0.4);
        assert_eq!(partial.a2, 6);
        assert!(serde_json::from_str::<OmegaConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
