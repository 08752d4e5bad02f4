//! Exhaustive threshold and weight search for the omega classifier.
//!
//! The search space is the cross product of the descriptor thresholds in a
//! [`CalibrationGrid`] with every weight vector on the 0.05 lattice of
//! `[0, 1]^4` and every `omega_th` on the same lattice. Two observations keep
//! it exact and fast:
//!
//! * the threshold-free part of every descriptor (ratio, radial vote, minima
//!   count, `R_s`) is computed once per sample;
//! * a weighted rule only matters through the set of vote patterns it
//!   accepts, so the weight lattice collapses to a small table of distinct
//!   decision masks, each with one representative `(weights, omega_th)`.
//!
//! Balanced accuracy is compared in exact integer form. Ties prefer smaller
//! `eps_d`, then a narrower `(a1, a2)`, then a narrower `(r1, r2)`, then `t_d`
//! closest to the median human ratio, then the table and grid order.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::ContourPath;
use crate::omega::{classify, weighted_score, OmegaConfig, Votes};

/// Weights and `omega_th` live on a lattice of this many steps per unit.
pub const LATTICE: u32 = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CalibrationError {
    #[error("calibration corpus is empty")]
    Empty,
    #[error("calibration corpus holds a single class ({humans} human, {others} non-human)")]
    SingleClass { humans: usize, others: usize },
    #[error("calibration grid has no admissible {0} values")]
    EmptyGrid(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledContour {
    pub path: ContourPath,
    pub human: bool,
}

/// The threshold-free part of the four descriptors for one contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeatures {
    pub ratio: Option<f64>,
    pub radial_vote: bool,
    pub minima_count: Option<usize>,
    pub r_s: Option<f64>,
}

impl ShapeFeatures {
    /// Only `kappa_s`, `row_band`, `smooth_window`, `delta` and
    /// `neighborhood` of `cfg` affect the result.
    pub fn of(path: &ContourPath, cfg: &OmegaConfig) -> Self {
        let out = classify(path, cfg);
        Self {
            ratio: out.ratio,
            radial_vote: out.votes.m == 1,
            minima_count: out.minima_count,
            r_s: out.r_s,
        }
    }

    pub fn votes(&self, cfg: &OmegaConfig) -> Votes {
        Votes::from_bools(
            self.ratio.is_some_and(|r| cfg.dimensions_vote(r)),
            self.radial_vote,
            self.minima_count.is_some_and(|n| cfg.curvature_vote(n)),
            self.r_s.is_some_and(|r| cfg.convexity_vote(r)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationGrid {
    pub t_d: Vec<f64>,
    pub eps_d: Vec<f64>,
    pub a1: Vec<i64>,
    pub a2: Vec<i64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

fn lattice(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| f64::from(k) / f64::from(LATTICE)).collect()
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            t_d: lattice(4, 16),
            eps_d: lattice(1, 4),
            a1: (0..=8).collect(),
            a2: (2..=16).collect(),
            r1: lattice(20, 32),
            r2: lattice(22, 44),
        }
    }
}

/// Confusion counts of a classifier on a labeled set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn record(&mut self, human: bool, predicted: bool) {
        match (human, predicted) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
        }
    }

    /// Mean of the true-positive and true-negative rates; a missing class
    /// contributes a rate of 1.
    pub fn balanced_accuracy(&self) -> f64 {
        let rate = |hit: usize, miss: usize| {
            if hit + miss == 0 {
                1.0
            } else {
                hit as f64 / (hit + miss) as f64
            }
        };
        (rate(self.tp, self.fn_) + rate(self.tn, self.fp)) / 2.0
    }
}

pub fn evaluate(corpus: &[LabeledContour], cfg: &OmegaConfig) -> Confusion {
    let mut c = Confusion::default();
    for sample in corpus {
        c.record(sample.human, classify(&sample.path, cfg).is_human);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: OmegaConfig,
    pub training: Confusion,
}

/// One weighted rule per distinct set of accepted vote patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRule {
    /// Bit `p` set when vote pattern `p` (see [`Votes::pattern`]) is human.
    pub mask: u16,
    pub weights: [u32; 4],
    pub threshold: u32,
}

impl DecisionRule {
    pub fn apply(&self, cfg: &mut OmegaConfig) {
        let unit = |k: u32| f64::from(k) / f64::from(LATTICE);
        cfg.s_d = unit(self.weights[0]);
        cfg.s_m = unit(self.weights[1]);
        cfg.s_k = unit(self.weights[2]);
        cfg.s_s = unit(self.weights[3]);
        cfg.omega_th = unit(self.threshold);
    }

    /// Smaller is preferred: weights summing to 1, then balanced weights,
    /// then the highest threshold that still yields the mask.
    fn preference(&self) -> (u32, u32, u32) {
        let sum: u32 = self.weights.iter().sum();
        let spread = self.weights.iter().max().unwrap() - self.weights.iter().min().unwrap();
        (sum.abs_diff(LATTICE), spread, 4 * LATTICE - self.threshold)
    }
}

/// All distinct decision masks reachable on the weight lattice, in mask
/// order. Masks are computed with the same floating-point rule `classify`
/// uses, so a representative reproduces its mask exactly.
pub fn decision_rules() -> &'static [DecisionRule] {
    static RULES: OnceLock<Vec<DecisionRule>> = OnceLock::new();
    RULES.get_or_init(|| {
        let mut table: Vec<Option<DecisionRule>> = vec![None; 1 << 16];
        let steps = LATTICE + 1;
        let mut cfg = OmegaConfig::default();
        for code in 0..steps.pow(4) {
            let weights = [code / steps.pow(3), code / steps.pow(2) % steps, code / steps % steps, code % steps];
            let sum: u32 = weights.iter().sum();
            DecisionRule { mask: 0, weights, threshold: 0 }.apply(&mut cfg);
            let scores: Vec<f64> = (0..16)
                .map(|p| weighted_score(Votes::from_pattern(p), cfg.weights()))
                .collect();
            for threshold in 0..=sum.min(LATTICE * 4) {
                let th = f64::from(threshold) / f64::from(LATTICE);
                let mask = scores
                    .iter()
                    .enumerate()
                    .filter(|(_, &h)| h >= th)
                    .fold(0u16, |m, (p, _)| m | 1 << p);
                let rule = DecisionRule { mask, weights, threshold };
                let slot = &mut table[mask as usize];
                if slot.is_none_or(|old| rule.preference() < old.preference()) {
                    *slot = Some(rule);
                }
            }
        }
        table.into_iter().flatten().collect()
    })
}

struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn from_fn(n: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut words = vec![0u64; n.div_ceil(64)];
        for i in 0..n {
            if f(i) {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self { words }
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct TieKey {
    eps: f64,
    a_width: i64,
    r_width: f64,
    t_dist: f64,
}

struct Best {
    score: i64,
    key: TieKey,
    t_d: f64,
    eps_d: f64,
    a: (i64, i64),
    r: (f64, f64),
    rule: DecisionRule,
}

/// Calibrates on precomputed features. `base` supplies every field the
/// search does not touch.
pub fn calibrate_features(
    samples: &[(ShapeFeatures, bool)],
    grid: &CalibrationGrid,
    base: &OmegaConfig,
) -> Result<OmegaConfig, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::Empty);
    }
    let humans = samples.iter().filter(|s| s.1).count();
    let others = samples.len() - humans;
    if humans == 0 || others == 0 {
        return Err(CalibrationError::SingleClass { humans, others });
    }
    let n = samples.len();
    let d_pairs: Vec<(f64, f64)> = grid
        .t_d
        .iter()
        .flat_map(|&t| grid.eps_d.iter().map(move |&e| (t, e)))
        .collect();
    let a_pairs: Vec<(i64, i64)> = grid
        .a1
        .iter()
        .flat_map(|&a1| grid.a2.iter().filter(move |&&a2| a1 < a2).map(move |&a2| (a1, a2)))
        .collect();
    let r_pairs: Vec<(f64, f64)> = grid
        .r1
        .iter()
        .flat_map(|&r1| grid.r2.iter().filter(move |&&r2| r1 < r2).map(move |&r2| (r1, r2)))
        .collect();
    if d_pairs.is_empty() {
        return Err(CalibrationError::EmptyGrid("(t_d, eps_d)"));
    }
    if a_pairs.is_empty() {
        return Err(CalibrationError::EmptyGrid("(a1, a2)"));
    }
    if r_pairs.is_empty() {
        return Err(CalibrationError::EmptyGrid("(r1, r2)"));
    }

    let mut probe = *base;
    let d_bits: Vec<Bits> = d_pairs
        .iter()
        .map(|&(t, e)| {
            probe.t_d = t;
            probe.eps_d = e;
            Bits::from_fn(n, |i| samples[i].0.ratio.is_some_and(|r| probe.dimensions_vote(r)))
        })
        .collect();
    let a_bits: Vec<Bits> = a_pairs
        .iter()
        .map(|&(a1, a2)| {
            probe.a1 = a1;
            probe.a2 = a2;
            Bits::from_fn(n, |i| samples[i].0.minima_count.is_some_and(|c| probe.curvature_vote(c)))
        })
        .collect();
    let r_bits: Vec<Bits> = r_pairs
        .iter()
        .map(|&(r1, r2)| {
            probe.r1 = r1;
            probe.r2 = r2;
            Bits::from_fn(n, |i| samples[i].0.r_s.is_some_and(|r| probe.convexity_vote(r)))
        })
        .collect();
    let m_bits = Bits::from_fn(n, |i| samples[i].0.radial_vote);
    let human_bits = Bits::from_fn(n, |i| samples[i].1);
    let words = human_bits.words.len();
    let valid: Vec<u64> = (0..words)
        .map(|w| if w + 1 == words && n % 64 != 0 { (1u64 << (n % 64)) - 1 } else { u64::MAX })
        .collect();

    let mut ratios: Vec<f64> = samples.iter().filter(|s| s.1).filter_map(|s| s.0.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let median_ratio = match ratios.len() {
        0 => base.t_d,
        k if k % 2 == 1 => ratios[k / 2],
        k => (ratios[k / 2 - 1] + ratios[k / 2]) / 2.0,
    };

    let rules = decision_rules();
    let (np, nn) = (humans as i64, others as i64);
    let mut best: Option<Best> = None;
    // partial[p_dmk][class][word]: samples matching the d, m and k bits of p
    let mut partial = vec![[0u64; 2]; 8 * words];
    let mut hist = [[0i64; 2]; 16];
    let (mut lo_sum, mut hi_sum) = ([0i64; 256], [0i64; 256]);
    for (di, &(t_d, eps_d)) in d_pairs.iter().enumerate() {
        for (ai, &(a1, a2)) in a_pairs.iter().enumerate() {
            for dmk in 0..8usize {
                for w in 0..words {
                    let pick = |bit: bool, x: u64| if bit { x } else { !x };
                    let sel = valid[w]
                        & pick(dmk & 4 != 0, d_bits[di].words[w])
                        & pick(dmk & 2 != 0, m_bits.words[w])
                        & pick(dmk & 1 != 0, a_bits[ai].words[w]);
                    partial[dmk * words + w] = [sel & human_bits.words[w], sel & !human_bits.words[w]];
                }
            }
            for (ri, &(r1, r2)) in r_pairs.iter().enumerate() {
                for dmk in 0..8usize {
                    let mut c = [[0i64; 2]; 2];
                    for w in 0..words {
                        let s = r_bits[ri].words[w];
                        let [h, o] = partial[dmk * words + w];
                        c[1][0] += i64::from((h & s).count_ones());
                        c[1][1] += i64::from((o & s).count_ones());
                        c[0][0] += i64::from((h & !s).count_ones());
                        c[0][1] += i64::from((o & !s).count_ones());
                    }
                    hist[dmk << 1] = c[0];
                    hist[dmk << 1 | 1] = c[1];
                }
                let value: [i64; 16] = std::array::from_fn(|p| hist[p][0] * nn - hist[p][1] * np);
                let bound: i64 = value.iter().filter(|&&v| v > 0).sum();
                let key = TieKey {
                    eps: eps_d,
                    a_width: a2 - a1,
                    r_width: r2 - r1,
                    t_dist: (t_d - median_ratio).abs(),
                };
                if let Some(b) = &best {
                    if bound < b.score || (bound == b.score && !(key < b.key)) {
                        continue;
                    }
                }
                // subset sums over each byte of the 16-bit mask
                for m in 1..256usize {
                    let low = m.trailing_zeros() as usize;
                    lo_sum[m] = lo_sum[m & (m - 1)] + value[low];
                    hi_sum[m] = hi_sum[m & (m - 1)] + value[8 + low];
                }
                let mut local: Option<(i64, DecisionRule)> = None;
                for rule in rules {
                    let score = lo_sum[usize::from(rule.mask & 0xff)] + hi_sum[usize::from(rule.mask >> 8)];
                    let better = match local {
                        None => true,
                        Some((s, r)) => score > s || (score == s && rule.preference() < r.preference()),
                    };
                    if better {
                        local = Some((score, *rule));
                    }
                }
                let (score, rule) = local.expect("rule table is never empty");
                let wins = match &best {
                    None => true,
                    Some(b) => score > b.score || (score == b.score && key < b.key),
                };
                if wins {
                    best = Some(Best {
                        score,
                        key,
                        t_d,
                        eps_d,
                        a: (a1, a2),
                        r: (r1, r2),
                        rule,
                    });
                }
            }
        }
    }
    let b = best.expect("grid is non-empty");
    let mut cfg = *base;
    cfg.t_d = b.t_d;
    cfg.eps_d = b.eps_d;
    (cfg.a1, cfg.a2) = b.a;
    (cfg.r1, cfg.r2) = b.r;
    b.rule.apply(&mut cfg);
    Ok(cfg)
}

/// Searches thresholds, weights and `omega_th` for maximal balanced
/// accuracy on `corpus`.
pub fn calibrate(
    corpus: &[LabeledContour],
    grid: &CalibrationGrid,
    base: &OmegaConfig,
) -> Result<Calibration, CalibrationError> {
    let samples: Vec<(ShapeFeatures, bool)> = corpus
        .iter()
        .map(|s| (ShapeFeatures::of(&s.path, base), s.human))
        .collect();
    let config = calibrate_features(&samples, grid, base)?;
    let mut training = Confusion::default();
    for (f, human) in &samples {
        let h = weighted_score(f.votes(&config), config.weights());
        training.record(*human, h >= config.omega_th);
    }
    Ok(Calibration { config, training })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(ratio: f64, radial: bool, minima: usize, r_s: f64) -> ShapeFeatures {
        ShapeFeatures {
            ratio: Some(ratio),
            radial_vote: radial,
            minima_count: Some(minima),
            r_s: Some(r_s),
        }
    }

    fn accuracy(samples: &[(ShapeFeatures, bool)], cfg: &OmegaConfig) -> f64 {
        let mut c = Confusion::default();
        for (f, human) in samples {
            c.record(*human, weighted_score(f.votes(cfg), cfg.weights()) >= cfg.omega_th);
        }
        c.balanced_accuracy()
    }

    #[test]
    fn rule_table_covers_majority_and_trivial_rules() {
        let rules = decision_rules();
        let at_least = |k: u32| (0..16u16).filter(|p| p.count_ones() >= k).fold(0u16, |m, p| m | 1 << p);
        for k in 0..=4 {
            assert!(rules.iter().any(|r| r.mask == at_least(k)), "k={k}");
        }
        let three = rules.iter().find(|r| r.mask == at_least(3)).unwrap();
        assert_eq!(three.weights, [5, 5, 5, 5]);
        assert_eq!(three.threshold, 15);
        // every mask is monotone: adding a vote never removes acceptance
        for r in rules {
            for p in 0..16 {
                for bit in 0..4 {
                    if r.mask >> p & 1 == 1 {
                        assert_eq!(r.mask >> (p | 1 << bit) & 1, 1);
                    }
                }
            }
        }
    }

    #[test]
    fn representative_reproduces_its_mask() {
        for rule in decision_rules() {
            let mut cfg = OmegaConfig::default();
            rule.apply(&mut cfg);
            for p in 0..16 {
                let human = weighted_score(Votes::from_pattern(p), cfg.weights()) >= cfg.omega_th;
                assert_eq!(human, rule.mask >> p & 1 == 1);
            }
        }
    }

    #[test]
    fn ratio_separable_corpus_picks_band_around_point_four() {
        let mut samples = Vec::new();
        for i in 0..10 {
            samples.push((feat(0.4, i % 2 == 0, i, 1.0 + i as f64 / 10.0), true));
            samples.push((feat(1.0, i % 3 == 0, i, 1.0 + i as f64 / 10.0), false));
        }
        let cfg = calibrate_features(&samples, &CalibrationGrid::default(), &OmegaConfig::default()).unwrap();
        assert_eq!(accuracy(&samples, &cfg), 1.0);
        assert!(cfg.dimensions_vote(0.4));
        assert!(!cfg.dimensions_vote(1.0));
        assert_eq!(cfg.t_d, 0.4);
        assert_eq!(cfg.eps_d, 0.05);
    }

    #[test]
    fn separable_corpus_reaches_full_accuracy() {
        let mut samples = Vec::new();
        for i in 0..30 {
            let j = i as f64 / 30.0;
            samples.push((feat(0.35 + 0.1 * j, true, 2 + i % 3, 1.2 + 0.2 * j), true));
            samples.push((feat(0.7 + 0.3 * j, i % 4 == 0, i % 2, 1.0 + 0.1 * j), false));
        }
        let cfg = calibrate_features(&samples, &CalibrationGrid::default(), &OmegaConfig::default()).unwrap();
        assert_eq!(accuracy(&samples, &cfg), 1.0);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn calibration_is_deterministic() {
        let samples: Vec<_> = (0..40)
            .map(|i| {
                let x = (i * 37 % 17) as f64 / 17.0;
                (feat(0.2 + 0.6 * x, i % 3 == 0, i % 7, 1.0 + x), i % 2 == 0)
            })
            .collect();
        let grid = CalibrationGrid::default();
        let a = calibrate_features(&samples, &grid, &OmegaConfig::default()).unwrap();
        let b = calibrate_features(&samples, &grid, &OmegaConfig::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_single_class_and_empty() {
        let grid = CalibrationGrid::default();
        let base = OmegaConfig::default();
        assert_eq!(calibrate_features(&[], &grid, &base), Err(CalibrationError::Empty));
        let one = [(feat(0.4, true, 2, 1.2), true)];
        assert_eq!(
            calibrate_features(&one, &grid, &base),
            Err(CalibrationError::SingleClass { humans: 1, others: 0 })
        );
    }

    #[test]
    fn search_matches_brute_force_on_small_grid() {
        let grid = CalibrationGrid {
            t_d: vec![0.3, 0.5],
            eps_d: vec![0.05, 0.1],
            a1: vec![0, 1],
            a2: vec![2, 4],
            r1: vec![1.0, 1.2],
            r2: vec![1.3, 1.6],
        };
        let samples: Vec<_> = (0..50)
            .map(|i| {
                let x = (i * 29 % 23) as f64 / 23.0;
                (feat(0.2 + 0.4 * x, i % 3 != 0, i % 5, 1.0 + 0.7 * x), i % 5 < 2)
            })
            .collect();
        let base = OmegaConfig::default();
        let got = calibrate_features(&samples, &grid, &base).unwrap();
        let mut best = 0.0f64;
        for &t_d in &grid.t_d {
            for &eps_d in &grid.eps_d {
                for &a1 in &grid.a1 {
                    for &a2 in &grid.a2 {
                        for &r1 in &grid.r1 {
                            for &r2 in &grid.r2 {
                                for rule in decision_rules() {
                                    let mut cfg = OmegaConfig { t_d, eps_d, a1, a2, r1, r2, ..base };
                                    rule.apply(&mut cfg);
                                    best = best.max(accuracy(&samples, &cfg));
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!((accuracy(&samples, &got) - best).abs() < 1e-12);
    }
}
