use omegacount::contour::ContourPath;
use omegacount::omega::{classify, descriptor_dimensions, weighted_score, OmegaConfig};
use omegacount::pipeline::extract_contours;
use omegacount::synth::{build_corpus, gen_omega, OmegaShapeParams, Rng};
use proptest::prelude::*;

fn contour_of(mask: &omegacount::mask::ForegroundMask) -> ContourPath {
    extract_contours(mask, 1).into_iter().max_by_key(|(c, _)| c.area).unwrap().1
}

fn corpus_paths() -> Vec<ContourPath> {
    build_corpus(40, 31).unwrap().iter().map(|s| contour_of(&s.mask)).collect()
}

#[test]
fn generator_widths_match_measurements() {
    let cfg = OmegaConfig::default();
    let mut rng = Rng::new(12);
    for _ in 0..60 {
        let p = OmegaShapeParams::sample(&mut rng, 160, 120);
        let (mask, truth) = gen_omega(&p, 160, 120).unwrap();
        let dims = descriptor_dimensions(&contour_of(&mask), &cfg);
        let tol = 2.0 + 2.0 * p.jitter;
        let (m1, m2) = (dims.m1.unwrap(), dims.m2.unwrap());
        assert!((m1 - truth.neck_width).abs() <= tol, "neck {m1} vs {}", truth.neck_width);
        assert!((m2 - truth.shoulder_width).abs() <= tol, "shoulder {m2} vs {}", truth.shoulder_width);
    }
}

#[test]
fn scale_robustness() {
    let cfg = OmegaConfig::default();
    let mut rng = Rng::new(99);
    for _ in 0..200 {
        let mut p = OmegaShapeParams::sample(&mut rng, 160, 120);
        p.jitter = 0.0;
        let big = OmegaShapeParams {
            a_h: 2.0 * p.a_h,
            b_h: 2.0 * p.b_h,
            neck_width: 2.0 * p.neck_width,
            shoulder_span: 2.0 * p.shoulder_span,
            shoulder_drop: 2.0 * p.shoulder_drop,
            body_height: 2.0 * p.body_height,
            ..p
        };
        let small = classify(&contour_of(&gen_omega(&p, 160, 120).unwrap().0), &cfg);
        let large = classify(&contour_of(&gen_omega(&big, 320, 240).unwrap().0), &cfg);
        let dr = (small.ratio.unwrap() - large.ratio.unwrap()).abs();
        let ds = (small.r_s.unwrap() - large.r_s.unwrap()).abs();
        assert!(dr <= 0.05, "ratio {dr} {:?} {:?} {:?}", p, (small.m1, small.m2), (large.m1, large.m2));
        assert!(ds <= 0.07, "R_s {ds}");
    }
}

#[test]
fn convexity_ratio_is_at_least_one() {
    let cfg = OmegaConfig::default();
    for path in corpus_paths() {
        if let Some(r) = classify(&path, &cfg).r_s {
            assert!(r >= 1.0, "{r}");
        }
    }
}

fn weight() -> impl Strategy<Value = f64> {
    (0u32..=20).prop_map(|k| f64::from(k) / 20.0)
}

proptest! {
    #[test]
    fn score_is_weighted_vote_sum(
        s_d in weight(), s_m in weight(), s_k in weight(), s_s in weight(),
        th in 0u32..=20, idx in 0usize..80,
    ) {
        let paths = corpus_paths();
        let cfg = OmegaConfig { s_d, s_m, s_k, s_s, omega_th: f64::from(th) / 20.0, ..Default::default() };
        let out = classify(&paths[idx], &cfg);
        let v = out.votes;
        let expected = s_d * f64::from(v.d) + s_m * f64::from(v.m) + s_k * f64::from(v.k) + s_s * f64::from(v.s);
        prop_assert_eq!(out.h_score, expected);
        prop_assert_eq!(out.h_score, weighted_score(v, cfg.weights()));
        prop_assert_eq!(out.is_human, out.h_score >= cfg.omega_th);
        // power-of-two scaling is exact, so the decision cannot move
        for c in [0.5, 0.25, 2.0f64.powi(-6)] {
            let scaled = OmegaConfig { s_d: c * s_d, s_m: c * s_m, s_k: c * s_k, s_s: c * s_s, omega_th: c * cfg.omega_th, ..cfg };
            prop_assert_eq!(classify(&paths[idx], &scaled).is_human, out.is_human);
        }
    }

    #[test]
    fn integer_shifts_leave_outcome_unchanged(idx in 0usize..80, dx in -5000i64..5000, dy in -5000i64..5000) {
        let path = &corpus_paths()[idx];
        let cfg = OmegaConfig::default();
        prop_assert_eq!(classify(path, &cfg), classify(&path.translated(dx, dy), &cfg));
    }
}
