use omegacount::calibrate::{calibrate, CalibrationGrid, LabeledContour};
use omegacount::mask::ForegroundMask;
use omegacount::mog::MogConfig;
use omegacount::omega::OmegaConfig;
use omegacount::pipeline::{detect_in_mask, extract_contours, PipelineOptions, SequenceProcessor};
use omegacount::synth::{build_corpus, DistractorParams, Label, OmegaShapeParams, Rng, Scene, SceneActor};

fn calibrated() -> OmegaConfig {
    let train: Vec<LabeledContour> = build_corpus(60, 4096)
        .unwrap()
        .into_iter()
        .map(|s| LabeledContour {
            path: extract_contours(&s.mask, 1).remove(0).1,
            human: s.entry.label == Label::Human,
        })
        .collect();
    calibrate(&train, &CalibrationGrid::default(), &OmegaConfig::default())
        .unwrap()
        .config
}

fn stamp(into: &mut ForegroundMask, shape: &ForegroundMask, dx: usize) {
    for y in 0..shape.height() {
        for x in 0..shape.width() {
            if shape.get(x, y) && x + dx < into.width() {
                into.set(x + dx, y, true);
            }
        }
    }
}

#[test]
fn one_person_among_distractors() {
    let cfg = calibrated();
    let mut mask = ForegroundMask::new(320, 120);
    let params = OmegaShapeParams::sample(&mut Rng::new(3), 100, 120);
    params.render_into(&mut mask, 50.0, 4);
    let circle = DistractorParams::Circle { radius: 25.0 }.render(100, 120).unwrap();
    stamp(&mut mask, &circle, 100);
    let rect = DistractorParams::Rectangle { width: 40.0, height: 70.0 }.render(100, 120).unwrap();
    stamp(&mut mask, &rect, 210);
    let report = detect_in_mask(&mask, &cfg, 100);
    assert_eq!(report.records.len(), 3);
    assert_eq!(report.human_count, 1);
    assert!(report.records[0].is_human);
}

#[test]
fn person_entering_is_counted_within_five_frames() {
    let cfg = calibrated();
    let params = OmegaShapeParams::sample(&mut Rng::new(8), 160, 120);
    let entry = 60;
    let scene = Scene::new(160, 120, 9).with_actor(SceneActor::Omega {
        params,
        axis_x0: 40.0,
        top: 4,
        vx: 2.0,
        start_frame: entry,
    });
    let mut p = SequenceProcessor::new(MogConfig::default(), cfg, PipelineOptions::default());
    let mut counts = Vec::new();
    for i in 0..80 {
        if let Some(r) = p.push(&scene.frame(i)).unwrap().report {
            assert_eq!(r.human_count, r.records.iter().filter(|c| c.is_human).count());
            counts.push((i, r.human_count));
        }
    }
    assert_eq!(counts.len(), 30);
    assert!(counts.iter().filter(|(i, _)| *i < entry).all(|(_, c)| *c == 0));
    let first = counts.iter().find(|(_, c)| *c == 1).expect("person detected").0;
    assert!((entry..entry + 5).contains(&first), "first detection at {first}");
}

#[test]
fn static_sequence_counts_nothing() {
    let scene = Scene::new(160, 120, 2);
    let mut p = SequenceProcessor::new(MogConfig::default(), OmegaConfig::default(), PipelineOptions::default());
    let reports: Vec<_> = (0..100).filter_map(|i| p.push(&scene.frame(i)).unwrap().report).collect();
    assert_eq!(reports.len(), 50);
    assert!(reports.iter().all(|r| r.human_count == 0 && r.records.is_empty()));
}

#[test]
fn rerun_gives_identical_reports() {
    let scene = Scene::new(120, 100, 6).with_actor(SceneActor::Square { size: 20, x0: 0, y0: 30, vx: 3, vy: 1, start_frame: 0 });
    let run = || {
        let opts = PipelineOptions { burn_in: 5, ..Default::default() };
        let mut p = SequenceProcessor::new(MogConfig::default(), OmegaConfig::default(), opts);
        (0..30)
            .filter_map(|i| p.push(&scene.frame(i)).unwrap().report)
            .map(|r| r.without_timing().to_json_line())
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(run(), run());
}

#[test]
fn threaded_background_matches_single_thread() {
    let scene = Scene::new(96, 64, 1).with_actor(SceneActor::Square { size: 12, x0: 5, y0: 5, vx: 2, vy: 1, start_frame: 3 });
    let masks = |threads| {
        let opts = PipelineOptions { burn_in: 0, threads, ..Default::default() };
        let mut p = SequenceProcessor::new(MogConfig::default(), OmegaConfig::default(), opts);
        (0..20).map(|i| p.push(&scene.frame(i)).unwrap().mask).collect::<Vec<_>>()
    };
    assert_eq!(masks(1), masks(4));
}
