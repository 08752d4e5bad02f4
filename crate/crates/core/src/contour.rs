//! Connected components, boundary tracing and the planar geometry the shape
//! descriptors are built on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::ForegroundMask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("component of area {area} is too small to trace (need at least 4 pixels)")]
    TooSmall { area: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("path of {len} points is too short (need more than {needed})")]
    TooShort { len: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_neighbor8(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x as f64, p.y as f64]
    }
}

/// Axis-aligned bounds in pixel coordinates, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl BBox {
    pub fn of_points(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut b = BBox {
            x_min: first.x,
            x_max: first.x,
            y_min: first.y,
            y_max: first.y,
        };
        for p in &points[1..] {
            b.x_min = b.x_min.min(p.x);
            b.x_max = b.x_max.max(p.x);
            b.y_min = b.y_min.min(p.y);
            b.y_max = b.y_max.max(p.y);
        }
        Some(b)
    }

    /// `X_max − X_min`.
    pub fn width(&self) -> i64 {
        self.x_max - self.x_min
    }

    /// `Y_max − Y_min`.
    pub fn height(&self) -> i64 {
        self.y_max - self.y_min
    }

    /// Number of pixels covered.
    pub fn pixel_area(&self) -> i64 {
        (self.width() + 1) * (self.height() + 1)
    }
}

/// One 8-connected foreground region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub label: usize,
    pub area: usize,
    pub bbox: BBox,
    /// First pixel in raster order (topmost, then leftmost).
    pub seed: Point,
}

const NEIGHBORS8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Visits every pixel 8-connected to `seed`, in flood order.
fn flood(mask: &ForegroundMask, seed: Point, visited: &mut [bool], mut visit: impl FnMut(Point)) {
    let w = mask.width();
    let mut stack = vec![seed];
    visited[seed.y as usize * w + seed.x as usize] = true;
    while let Some(p) = stack.pop() {
        visit(p);
        for (dx, dy) in NEIGHBORS8 {
            let (nx, ny) = (p.x + dx, p.y + dy);
            if mask.get_signed(nx, ny) {
                let idx = ny as usize * w + nx as usize;
                if !visited[idx] {
                    visited[idx] = true;
                    stack.push(Point::new(nx, ny));
                }
            }
        }
    }
}

/// 8-connected components with at least `min_area` pixels, labelled in
/// raster order of their first pixel.
pub fn label_components(mask: &ForegroundMask, min_area: usize) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut visited = vec![false; w * h];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || visited[y * w + x] {
                continue;
            }
            let seed = Point::new(x as i64, y as i64);
            let mut area = 0;
            let mut bbox = BBox {
                x_min: seed.x,
                x_max: seed.x,
                y_min: seed.y,
                y_max: seed.y,
            };
            flood(mask, seed, &mut visited, |p| {
                area += 1;
                bbox.x_min = bbox.x_min.min(p.x);
                bbox.x_max = bbox.x_max.max(p.x);
                bbox.y_max = bbox.y_max.max(p.y);
            });
            if area >= min_area {
                out.push(Component {
                    label: out.len(),
                    area,
                    bbox,
                    seed,
                });
            }
        }
    }
    out
}

/// Region centroid kept as exact integer moments so that integer
/// translations shift it without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Centroid {
    sum_x: i64,
    sum_y: i64,
    count: i64,
}

impl Centroid {
    pub fn of_points(points: &[Point]) -> Self {
        Self {
            sum_x: points.iter().map(|p| p.x).sum(),
            sum_y: points.iter().map(|p| p.y).sum(),
            count: points.len() as i64,
        }
    }

    pub fn x(&self) -> f64 {
        self.sum_x as f64 / self.count as f64
    }

    pub fn y(&self) -> f64 {
        self.sum_y as f64 / self.count as f64
    }

    /// Centroid in a frame whose origin is `origin`.
    pub fn relative_to(&self, origin: Point) -> (f64, f64) {
        (
            (self.sum_x - self.count * origin.x) as f64 / self.count as f64,
            (self.sum_y - self.count * origin.y) as f64 / self.count as f64,
        )
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        Self {
            sum_x: self.sum_x + self.count * dx,
            sum_y: self.sum_y + self.count * dy,
            count: self.count,
        }
    }
}

/// Mean of all filled pixels of the component.
pub fn centroid(mask: &ForegroundMask, c: &Component) -> Centroid {
    let mut visited = vec![false; mask.width() * mask.height()];
    let mut acc = Centroid {
        sum_x: 0,
        sum_y: 0,
        count: 0,
    };
    flood(mask, c.seed, &mut visited, |p| {
        acc.sum_x += p.x;
        acc.sum_y += p.y;
        acc.count += 1;
    });
    acc
}

/// Closed, ordered 8-connected outer boundary of one component together
/// with the component's centroid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContourPath {
    points: Vec<Point>,
    bbox: BBox,
    centroid: Centroid,
}

impl ContourPath {
    pub fn new(points: Vec<Point>, centroid: Centroid) -> Result<Self, ContourError> {
        let bbox = BBox::of_points(&points).ok_or(ContourError::Degenerate("empty contour"))?;
        Ok(Self {
            points,
            bbox,
            centroid,
        })
    }

    /// Uses the boundary-point mean as the centroid; for hand-built paths.
    pub fn from_boundary(points: Vec<Point>) -> Result<Self, ContourError> {
        let centroid = Centroid::of_points(&points);
        Self::new(points, centroid)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Height `h = Y_max − Y_min`.
    pub fn h(&self) -> i64 {
        self.bbox.height()
    }

    /// Width `w = X_max − X_min`.
    pub fn w(&self) -> i64 {
        self.bbox.width()
    }

    pub fn centroid(&self) -> Centroid {
        self.centroid
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Self {
        let points: Vec<Point> = self
            .points
            .iter()
            .map(|p| Point::new(p.x + dx, p.y + dy))
            .collect();
        Self {
            bbox: BBox::of_points(&points).expect("non-empty"),
            points,
            centroid: self.centroid.translated(dx, dy),
        }
    }

    /// Copy shifted so that the bounding box starts at the origin.
    pub fn normalized(&self) -> Self {
        self.translated(-self.bbox.x_min, -self.bbox.y_min)
    }
}

// Moore neighborhood in clockwise order on a y-down raster, starting west.
const MOORE: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(dx: i64, dy: i64) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("backtrack pixel must be an 8-neighbor")
}

/// Moore-neighbor tracing, clockwise from the component's seed pixel, with
/// Jacob's stopping criterion (stop on re-entering the start pixel from the
/// initial backtrack pixel, or on leaving it along the first edge again).
pub fn trace_boundary(mask: &ForegroundMask, c: &Component) -> Result<ContourPath, ContourError> {
    if c.area < 4 {
        return Err(ContourError::TooSmall { area: c.area });
    }
    let start = c.seed;
    let start_back = Point::new(start.x - 1, start.y);
    let mut p = start;
    let mut back = start_back;
    let mut points = vec![start];
    let limit = 8 * c.area + 16;
    loop {
        let bi = moore_index(back.x - p.x, back.y - p.y);
        let mut prev = back;
        let mut next = None;
        for i in 1..8 {
            let (dx, dy) = MOORE[(bi + i) % 8];
            let q = Point::new(p.x + dx, p.y + dy);
            if mask.get_signed(q.x, q.y) {
                next = Some(q);
                break;
            }
            prev = q;
        }
        let Some(q) = next else { break };
        // thin parts can re-enter the start from another side; leaving it
        // along the first edge again also closes the loop
        if p == start && points.len() > 1 && q == points[1] {
            points.pop();
            break;
        }
        back = prev;
        p = q;
        if p == start && back == start_back {
            break;
        }
        points.push(p);
        if points.len() > limit {
            return Err(ContourError::Degenerate("boundary trace did not close"));
        }
    }
    ContourPath::new(points, centroid(mask, c))
}

/// Ordered subset of a contour; `closed` when it is the whole contour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Segment {
    /// Maximal runs of consecutive 8-neighbors.
    pub fn runs(&self) -> Vec<&[Point]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.points.len() {
            if i == self.points.len() || !self.points[i - 1].is_neighbor8(self.points[i]) {
                if i > start {
                    out.push(&self.points[start..i]);
                }
                start = i;
            }
        }
        out
    }
}

/// Boundary points with `y ≤ Y_min + fraction·h`, in contour order, rotated
/// so that the kept points start right after the longest dropped stretch.
pub fn upper_segment(path: &ContourPath, fraction: f64) -> Result<Segment, ContourError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ContourError::Degenerate("segment fraction outside (0, 1]"));
    }
    let limit = fraction * path.h() as f64;
    let y_min = path.bbox.y_min;
    let keep: Vec<bool> = path
        .points
        .iter()
        .map(|p| ((p.y - y_min) as f64) <= limit)
        .collect();
    let n = keep.len();
    if keep.iter().all(|&k| k) {
        return Ok(Segment {
            points: path.points.clone(),
            closed: true,
        });
    }
    if !keep.iter().any(|&k| k) {
        return Err(ContourError::Degenerate("empty upper segment"));
    }
    // longest cyclic run of dropped points
    let (mut best_end, mut best_len) = (0, 0);
    let mut run = 0;
    for i in 0..2 * n {
        if keep[i % n] {
            run = 0;
        } else {
            run += 1;
            if run > best_len && run <= n {
                best_len = run;
                best_end = i % n;
            }
        }
    }
    let points = (1..=n)
        .map(|k| (best_end + k) % n)
        .filter(|&i| keep[i])
        .map(|i| path.points[i])
        .collect();
    Ok(Segment {
        points,
        closed: false,
    })
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Vertices come out with positive signed area in
/// raster coordinates, collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Result<Vec<Point>, ContourError> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return Err(ContourError::Degenerate("fewer than 3 distinct hull points"));
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(ContourError::Degenerate("all points collinear"));
    }
    Ok(hull)
}

/// Absolute shoelace area.
pub fn polygon_area<P: Copy + Into<[f64; 2]>>(polygon: &[P]) -> Result<f64, ContourError> {
    if polygon.len() < 3 {
        return Err(ContourError::Degenerate("polygon needs at least 3 vertices"));
    }
    let mut twice = 0.0;
    for i in 0..polygon.len() {
        let [x0, y0] = polygon[i].into();
        let [x1, y1] = polygon[(i + 1) % polygon.len()].into();
        twice += x0 * y1 - x1 * y0;
    }
    Ok(twice.abs() / 2.0)
}

/// Default centered moving-average length for [`curvature_series`].
pub const DEFAULT_SMOOTH_WINDOW: usize = 7;
/// Default central-difference spacing for [`curvature_series`].
pub const DEFAULT_DELTA: usize = 5;
/// Default half-width of the window in [`count_local_minima`].
pub const DEFAULT_MINIMA_NEIGHBORHOOD: usize = 5;

/// Signed curvature per point of a (sub)path, in 1/pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSeries {
    pub values: Vec<f64>,
}

impl CurvatureSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }
}

/// Curvature `κ = (x′y″ − x″y′) / (x′² + y′²)^{3/2}` after a centered
/// moving average of `smooth_window` points, with central differences of
/// spacing `delta`. Closed paths wrap; open paths clamp indices at the ends.
pub fn curvature_series(
    points: &[Point],
    closed: bool,
    smooth_window: usize,
    delta: usize,
) -> Result<CurvatureSeries, ContourError> {
    let n = points.len();
    let needed = 2 * delta + smooth_window;
    if n <= needed || delta == 0 {
        return Err(ContourError::TooShort { len: n, needed });
    }
    let at = |i: i64| -> usize {
        if closed {
            i.rem_euclid(n as i64) as usize
        } else {
            i.clamp(0, n as i64 - 1) as usize
        }
    };
    let half = (smooth_window / 2) as i64;
    let span = (2 * half + 1) as f64;
    let smoothed: Vec<[f64; 2]> = (0..n as i64)
        .map(|i| {
            let (mut sx, mut sy) = (0.0, 0.0);
            for k in -half..=half {
                let p = points[at(i + k)];
                sx += p.x as f64;
                sy += p.y as f64;
            }
            [sx / span, sy / span]
        })
        .collect();
    let d = delta as i64;
    let df = delta as f64;
    let values = (0..n as i64)
        .map(|i| {
            let [xa, ya] = smoothed[at(i - d)];
            let [xi, yi] = smoothed[i as usize];
            let [xb, yb] = smoothed[at(i + d)];
            let (x1, y1) = ((xb - xa) / (2.0 * df), (yb - ya) / (2.0 * df));
            let (x2, y2) = ((xb - 2.0 * xi + xa) / (df * df), (yb - 2.0 * yi + ya) / (df * df));
            let speed = (x1 * x1 + y1 * y1).powf(1.5);
            if speed > 0.0 {
                (x1 * y2 - x2 * y1) / speed
            } else {
                0.0
            }
        })
        .collect();
    Ok(CurvatureSeries { values })
}

/// Indices whose `|κ|` is strictly below every other `|κ|` within
/// `±neighborhood`; windows are truncated at the series ends.
pub fn count_local_minima(series: &[f64], neighborhood: usize) -> usize {
    let n = series.len();
    let nb = neighborhood.max(1);
    (0..n)
        .filter(|&i| {
            let v = series[i].abs();
            let lo = i.saturating_sub(nb);
            let hi = (i + nb).min(n - 1);
            (lo..=hi).filter(|&j| j != i).all(|j| v < series[j].abs()) && hi > lo
        })
        .count()
}

/// 3×3 erosion followed by 3×3 dilation. Pixels outside the raster count as
/// background.
pub fn open_3x3(mask: &ForegroundMask) -> ForegroundMask {
    let (w, h) = (mask.width(), mask.height());
    let mut eroded = ForegroundMask::new(w, h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let all = (-1..=1).all(|dy| (-1..=1).all(|dx| mask.get_signed(x + dx, y + dy)));
            eroded.set(x as usize, y as usize, all);
        }
    }
    let mut out = ForegroundMask::new(w, h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let any = (-1..=1).any(|dy| (-1..=1).any(|dx| eroded.get_signed(x + dx, y + dy)));
            out.set(x as usize, y as usize, any);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: &[&str]) -> ForegroundMask {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows
            .iter()
            .flat_map(|r| r.bytes().map(|b| b == b'#'))
            .collect();
        ForegroundMask::from_bits(w, h, bits).unwrap()
    }

    fn filled_rect(w: usize, h: usize, x0: usize, y0: usize, rw: usize, rh: usize) -> ForegroundMask {
        let mut m = ForegroundMask::new(w, h);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                m.set(x, y, true);
            }
        }
        m
    }

    fn disc(r: f64, canvas: usize) -> ForegroundMask {
        let c = (canvas / 2) as f64;
        let mut m = ForegroundMask::new(canvas, canvas);
        for y in 0..canvas {
            for x in 0..canvas {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                m.set(x, y, dx * dx + dy * dy <= r * r);
            }
        }
        m
    }

    #[test]
    fn empty_mask_has_no_components() {
        assert!(label_components(&ForegroundMask::new(8, 8), 1).is_empty());
    }

    #[test]
    fn disjoint_squares_are_separate() {
        let mut m = filled_rect(40, 20, 2, 2, 10, 10);
        m.union_with(&filled_rect(40, 20, 20, 5, 10, 10));
        let comps = label_components(&m, 1);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.area == 100));
        assert_eq!(comps[0].seed, Point::new(2, 2));
        assert_eq!(comps[1].label, 1);
    }

    #[test]
    fn diagonal_chain_is_one_component() {
        let m = mask_from(&["#...", ".#..", "..#.", "...#"]);
        let comps = label_components(&m, 1);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 4);
    }

    #[test]
    fn min_area_filter() {
        let m = mask_from(&["##...", "##..#", "....."]);
        assert_eq!(label_components(&m, 2).len(), 1);
        assert_eq!(label_components(&m, 1).len(), 2);
    }

    #[test]
    fn traces_small_square() {
        let m = filled_rect(7, 7, 2, 2, 3, 3);
        let c = label_components(&m, 1)[0];
        let path = trace_boundary(&m, &c).unwrap();
        let expect = [(2, 2), (3, 2), (4, 2), (4, 3), (4, 4), (3, 4), (2, 4), (2, 3)]
            .map(|(x, y)| Point::new(x, y));
        assert_eq!(path.points(), &expect);
    }

    #[test]
    fn traces_perimeter_ring() {
        let m = filled_rect(20, 20, 5, 4, 10, 10);
        let c = label_components(&m, 1)[0];
        let path = trace_boundary(&m, &c).unwrap();
        assert_eq!(path.len(), 36);
        assert_eq!(path, trace_boundary(&m, &c).unwrap());
    }

    #[test]
    fn trace_rejects_tiny_components() {
        let m = mask_from(&["##.", "#.."]);
        let c = label_components(&m, 1)[0];
        assert_eq!(trace_boundary(&m, &c), Err(ContourError::TooSmall { area: 3 }));
    }

    #[test]
    fn traces_thin_line_back_and_forth() {
        let m = mask_from(&["......", ".####.", "......"]);
        let c = label_components(&m, 1)[0];
        let path = trace_boundary(&m, &c).unwrap();
        let xs: Vec<i64> = path.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, [1, 2, 3, 4, 3, 2]);
    }

    #[test]
    fn centroid_examples() {
        let mut m = ForegroundMask::new(10, 10);
        m.set(5, 7, true);
        let c = label_components(&m, 1)[0];
        let cen = centroid(&m, &c);
        assert_eq!((cen.x(), cen.y()), (5.0, 7.0));

        let sq = filled_rect(12, 12, 0, 0, 10, 10);
        let c = label_components(&sq, 1)[0];
        let cen = centroid(&sq, &c);
        assert_eq!((cen.x(), cen.y()), (4.5, 4.5));

        let l = mask_from(&["#...", "#...", "#...", "####"]);
        let c = label_components(&l, 1)[0];
        let cen = centroid(&l, &c);
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
        for y in 0..4 {
            for x in 0..4 {
                if l.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        assert_eq!((cen.x(), cen.y()), (sx / n, sy / n));
    }

    #[test]
    fn upper_segment_examples() {
        let m = filled_rect(30, 40, 5, 3, 12, 31);
        let c = label_components(&m, 1)[0];
        let path = trace_boundary(&m, &c).unwrap();
        let whole = upper_segment(&path, 1.0).unwrap();
        assert!(whole.closed);
        assert_eq!(whole.points, path.points());

        let top = upper_segment(&path, 1.0 / 3.0).unwrap();
        assert!(!top.closed);
        assert!(top.points.iter().all(|p| p.y <= 3 + 10));
        let expected = path.points().iter().filter(|p| p.y <= 13).count();
        assert_eq!(top.points.len(), expected);
        assert_eq!(top.runs().len(), 1);
    }

    #[test]
    fn upper_segment_rejects_bad_fraction() {
        let path = ContourPath::from_boundary(vec![Point::new(0, 0), Point::new(1, 0)]).unwrap();
        assert!(upper_segment(&path, 0.0).is_err());
        assert!(upper_segment(&path, 1.5).is_err());
    }

    #[test]
    fn hull_of_square_with_center() {
        let sq = [(0, 0), (4, 0), (4, 4), (0, 4)].map(|(x, y)| Point::new(x, y));
        let mut hull = convex_hull(&sq).unwrap();
        hull.sort();
        let mut expect = sq.to_vec();
        expect.sort();
        assert_eq!(hull, expect);

        let mut with_center = sq.to_vec();
        with_center.push(Point::new(2, 2));
        with_center.push(Point::new(2, 0));
        let hull = convex_hull(&with_center).unwrap();
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&Point::new(2, 2)));
    }

    #[test]
    fn hull_rejects_collinear() {
        let line = [(0, 0), (1, 1), (2, 2), (3, 3)].map(|(x, y)| Point::new(x, y));
        assert!(convex_hull(&line).is_err());
        assert!(convex_hull(&line[..2]).is_err());
    }

    #[test]
    fn shoelace_examples() {
        let unit = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert_eq!(polygon_area(&unit).unwrap(), 1.0);
        let tri = [[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]];
        assert_eq!(polygon_area(&tri).unwrap(), 6.0);
        assert!(polygon_area(&tri[..2]).is_err());
        for n in 3..20 {
            let r = 7.5;
            let poly: Vec<[f64; 2]> = (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    [r * t.cos(), r * t.sin()]
                })
                .collect();
            let analytic = 0.5 * n as f64 * r * r * (2.0 * std::f64::consts::PI / n as f64).sin();
            assert!((polygon_area(&poly).unwrap() - analytic).abs() < 1e-9);
        }
    }

    #[test]
    fn straight_line_has_no_curvature() {
        for (dx, dy) in [(1, 0), (0, 1), (1, 1), (-1, 1)] {
            let pts: Vec<Point> = (0..40).map(|i| Point::new(i * dx, i * dy)).collect();
            let k = curvature_series(&pts, false, 5, 3).unwrap();
            assert!(k.values.iter().all(|v| v.abs() < 0.01), "{dx},{dy}");
        }
        // digitized slopes need the default smoothing to stay flat; the
        // clamped ends of an open staircase are excluded
        let edge = DEFAULT_SMOOTH_WINDOW / 2 + DEFAULT_DELTA;
        for (a, b) in [(1, 2), (1, 3), (2, 3), (2, 5), (3, 7)] {
            let pts: Vec<Point> = (0..80).map(|i| Point::new(i, (i * a + b / 2) / b)).collect();
            let k = curvature_series(&pts, false, DEFAULT_SMOOTH_WINDOW, DEFAULT_DELTA).unwrap();
            let interior = &k.values[edge..k.len() - edge];
            assert!(interior.iter().all(|v| v.abs() < 0.01), "slope {a}/{b}");
        }
    }

    #[test]
    fn circle_curvature_matches_radius() {
        let mut means = Vec::new();
        for r in [20.0, 40.0, 60.0] {
            let m = disc(r, (2.0 * r) as usize + 10);
            let c = label_components(&m, 1)[0];
            let path = trace_boundary(&m, &c).unwrap();
            let k = curvature_series(path.points(), true, DEFAULT_SMOOTH_WINDOW, DEFAULT_DELTA)
                .unwrap();
            assert!((k.mean_abs() * r - 1.0).abs() <= 0.05, "r={r} got {}", k.mean_abs());
            // clockwise on a y-down raster is positive orientation
            assert!(k.values.iter().all(|&v| v > 0.0));
            means.push(k.mean_abs());
        }
        assert!((means[0] / means[1] - 2.0).abs() <= 0.2);
    }

    #[test]
    fn curvature_needs_enough_points() {
        let pts: Vec<Point> = (0..11).map(|i| Point::new(i, 0)).collect();
        assert_eq!(
            curvature_series(&pts, false, 5, 3),
            Err(ContourError::TooShort { len: 11, needed: 11 })
        );
    }

    #[test]
    fn local_minima_examples() {
        assert_eq!(count_local_minima(&[2.0; 10], 3), 0);
        assert_eq!(count_local_minima(&[3.0, 1.0, 3.0, 1.0, 3.0], 1), 2);
        assert_eq!(count_local_minima(&[3.0, -1.0, 3.0], 1), 1);
        assert_eq!(count_local_minima(&[], 2), 0);
        assert_eq!(count_local_minima(&[1.0], 2), 0);
    }

    #[test]
    fn opening_removes_specks() {
        let mut m = filled_rect(20, 20, 3, 3, 8, 8);
        m.set(16, 16, true);
        let opened = open_3x3(&m);
        assert!(!opened.get(16, 16));
        assert_eq!(opened.count(), 64);
    }

    fn brute_minima(series: &[f64], nb: usize) -> usize {
        let mut count = 0;
        for i in 0..series.len() {
            let mut others = 0;
            let mut ok = true;
            for j in 0..series.len() {
                if j != i && j.abs_diff(i) <= nb {
                    others += 1;
                    ok &= series[i].abs() < series[j].abs();
                }
            }
            if ok && others > 0 {
                count += 1;
            }
        }
        count
    }

    fn random_blob() -> impl Strategy<Value = ForegroundMask> {
        proptest::collection::vec(any::<bool>(), 12 * 12).prop_map(|bits| {
            let mut m = ForegroundMask::new(14, 14);
            for (i, b) in bits.into_iter().enumerate() {
                m.set(1 + i % 12, 1 + i / 12, b);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn minima_match_brute_force(series in proptest::collection::vec(-5i32..5, 0..40), nb in 1usize..6) {
            let s: Vec<f64> = series.into_iter().map(f64::from).collect();
            prop_assert_eq!(count_local_minima(&s, nb), brute_minima(&s, nb));
        }

        #[test]
        fn traced_points_lie_on_border(m in random_blob()) {
            for c in label_components(&m, 4) {
                let path = trace_boundary(&m, &c).unwrap();
                prop_assert!(path.len() >= 4);
                let pts = path.points();
                for (i, p) in pts.iter().enumerate() {
                    prop_assert!(m.get_signed(p.x, p.y));
                    let outside = NEIGHBORS8.iter().any(|&(dx, dy)| !m.get_signed(p.x + dx, p.y + dy));
                    prop_assert!(outside);
                    let next = pts[(i + 1) % pts.len()];
                    prop_assert!(p.is_neighbor8(next));
                }
                let cen = centroid(&m, &c);
                prop_assert!(cen.x() >= c.bbox.x_min as f64 && cen.x() <= c.bbox.x_max as f64);
                prop_assert!(cen.y() >= c.bbox.y_min as f64 && cen.y() <= c.bbox.y_max as f64);
                prop_assert!(c.area as i64 <= c.bbox.pixel_area());
            }
        }

        #[test]
        fn hull_contains_points_and_fits_bbox(raw in proptest::collection::vec((-20i64..20, -20i64..20), 3..30)) {
            let pts: Vec<Point> = raw.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            if let Ok(hull) = convex_hull(&pts) {
                for &p in &pts {
                    for i in 0..hull.len() {
                        prop_assert!(cross(hull[i], hull[(i + 1) % hull.len()], p) >= 0);
                    }
                }
                let b = BBox::of_points(&pts).unwrap();
                let area = polygon_area(&hull).unwrap();
                prop_assert!(area <= (b.width() * b.height()) as f64);
            }
        }
    }
}
