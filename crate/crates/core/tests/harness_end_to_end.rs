use vsi_core::harness::{
    generate_case, generate_corpus, keyframe_hit, run_benchmark, run_case, GeneratorParams,
    LabeledConfig,
};
use vsi_core::{SearchConfig, Termination};

fn cfg(tw: f64) -> SearchConfig {
    SearchConfig {
        text_weight: tw,
        top_k: 4,
        max_grid_side: 4,
        frame_budget: 1000,
        ..SearchConfig::default()
    }
}

#[test]
fn single_aligned_case_is_a_hit_with_text_only() {
    let case = generate_case(1, &GeneratorParams::default()).unwrap();
    let configs = vec![LabeledConfig {
        label: "text".into(),
        config: cfg(1.0),
    }];
    let report = run_benchmark(std::slice::from_ref(&case), &configs, 200, 1).unwrap();
    assert_eq!(report.rows[0].hit_rate, 1.0);
    assert_eq!(report.rows[0].failed, 0);
}

#[test]
fn searches_stop_on_a_ground_truth_window() {
    let corpus = generate_corpus(5, 10, &GeneratorParams::default()).unwrap();
    for case in &corpus {
        for tw in [0.0, 0.7, 1.0] {
            let out = run_case(case, &cfg(tw)).unwrap();
            assert!(out.frames_examined <= 1000);
            if out.termination == Termination::AllTargetsFound {
                let last = out.trace.last().unwrap();
                assert!(
                    keyframe_hit(&last.frames, &case.gt_frames, 15),
                    "seed {}",
                    case.seed
                );
            }
        }
    }
}

#[test]
fn text_signal_helps_on_a_small_corpus() {
    let corpus = generate_corpus(77, 30, &GeneratorParams::default()).unwrap();
    let configs: Vec<_> = [0.0, 1.0]
        .iter()
        .map(|&tw| LabeledConfig {
            label: format!("{tw}"),
            config: cfg(tw),
        })
        .collect();
    let report = run_benchmark(&corpus, &configs, 200, 0).unwrap();
    assert!(report.rows[1].hit_rate > report.rows[0].hit_rate);
    assert!(report.rows[1].mean_iterations < report.rows[0].mean_iterations);
}

#[test]
fn unaligned_subtitles_leave_no_text_signal() {
    let p = GeneratorParams {
        subtitle_alignment: 0.0,
        ..GeneratorParams::default()
    };
    let case = generate_case(2, &p).unwrap();
    let out = run_case(&case, &cfg(1.0)).unwrap();
    assert!(
        out.warnings.iter().any(|w| w.contains("text")),
        "{:?}",
        out.warnings
    );
}
