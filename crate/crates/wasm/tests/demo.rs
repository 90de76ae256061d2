use embedlens::simulator::ClusterSpec;
use embedlens_wasm::{sample_prompts, simulate_view, sweep, SweepParameter};

fn spec() -> ClusterSpec {
    ClusterSpec {
        dimension: 8,
        classes: 4,
        samples: 20,
        spread: 0.1,
        shift_degrees: 0.0,
        outlier_fraction: 0.0,
        seed: 1,
    }
}

#[test]
fn view_projects_every_point_inside_the_unit_disk() {
    let view = simulate_view(&spec()).unwrap();
    assert_eq!(view.points.len(), 2 * 4 * 20);
    assert!(view.points.iter().all(|p| p.x * p.x + p.y * p.y <= 1.0 + 1e-12));
    assert_eq!(view.points.iter().filter(|p| p.query).count(), 80);
    assert!(view.summary.centroid_accuracy > 0.9);
}

#[test]
fn shift_sweep_moves_centroids_apart() {
    let curve = sweep(&spec(), SweepParameter::Shift, &[0.0, 45.0, 90.0]).unwrap();
    let shifts: Vec<f64> = curve.iter().map(|p| p.summary.mean_centroid_shift).collect();
    assert!(shifts.windows(2).all(|w| w[0] < w[1]), "{shifts:?}");
}

#[test]
fn bad_spec_is_an_error() {
    let mut s = spec();
    s.classes = 1;
    assert!(simulate_view(&s).is_err());
    assert!(sweep(&spec(), SweepParameter::Spread, &[-1.0]).is_err());
}

#[test]
fn prompts_end_with_the_class_and_are_seeded() {
    let a = sample_prompts("quail", 5, 3).unwrap();
    assert_eq!(a, sample_prompts("quail", 5, 3).unwrap());
    assert!(a.iter().all(|p| p.contains("quail") && p.ends_with('.')));
    assert!(sample_prompts(" ", 1, 0).is_err());
}
