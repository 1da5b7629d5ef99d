use std::f64::consts::PI;

use crs_core::distortion::{
    distortion_sweep, estimate_distortions, position_distortion, LatticeSpec, Metric,
    MonteCarloConfig, NoPeakPolicy, PeakDomain,
};
use crs_core::quadrature::simpson;
use crs_core::reconstruct::{ElasticaSettings, ReconstructionModel};
use crs_core::shape::{make_lattice, Extents, Lattice, LatticeKind};

/// Mean distance from a uniform point of the unit square to its centre.
fn square_cell_mean_distance() -> f64 {
    let inner = |y: f64| simpson(|x: f64| x.hypot(y), -0.5, 0.5, 400);
    simpson(inner, -0.5, 0.5, 400)
}

/// Same for the hexagonal Voronoi cell of a unit-pitch triangular lattice,
/// integrated in polar form over one of its twelve congruent sectors.
fn hex_cell_mean_distance() -> f64 {
    let a = 0.5;
    let moment = simpson(|t: f64| (a / t.cos()).powi(3) / 3.0, 0.0, PI / 6.0, 400);
    let area = simpson(|t: f64| (a / t.cos()).powi(2) / 2.0, 0.0, PI / 6.0, 400);
    moment / area
}

fn square(d: f64, side: f64) -> Lattice {
    make_lattice(
        LatticeKind::Square,
        d,
        Extents::Rect {
            width: side,
            height: side,
        },
    )
    .unwrap()
}

#[test]
fn voronoi_mean_distances_match_closed_forms() {
    let sq = square_cell_mean_distance();
    let closed = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 6.0;
    assert!((sq - closed).abs() < 1e-7, "{sq} vs {closed}");
    assert!((sq - 0.3826).abs() < 1e-4);
    let hex = hex_cell_mean_distance();
    assert!((hex - 0.70196 / 2.0).abs() < 1e-4, "{hex}");
}

#[test]
fn pixel_only_2d_position_distortion_matches_cell_oracle() {
    let cfg = MonteCarloConfig {
        n_samples: 20_000,
        domain: PeakDomain::Interior,
        ..Default::default()
    };
    let lat = square(18.0, 180.0);
    let e = position_distortion(&ReconstructionModel::PixelOnly, &lat, 90.0, &cfg).unwrap();
    let want = square_cell_mean_distance() * 0.2;
    assert!(
        (e.value - want).abs() <= 4.0 * e.standard_error,
        "{e:?} vs {want}"
    );

    let hex = make_lattice(LatticeKind::Hexagonal, 18.0, Extents::Hex { rings: 6 }).unwrap();
    let e = position_distortion(&ReconstructionModel::PixelOnly, &hex, 90.0, &cfg).unwrap();
    let want = hex_cell_mean_distance() * 0.2;
    assert!(
        (e.value - want).abs() <= 4.0 * e.standard_error,
        "{e:?} vs {want}"
    );
}

#[test]
fn staircase_shape_distortion_approaches_its_asymptote() {
    // For a fine staircase the local error is uniform in [-d/2, d/2] times the
    // slope, giving D_s -> (d / sqrt 12) * sqrt(int phi'^2 / int phi^2).
    let l = 90.0;
    let slope2 = simpson(
        |x: f64| (PI / l * (2.0 * PI * x / l).sin()).powi(2),
        -l / 2.0,
        l / 2.0,
        2000,
    );
    let value2 = simpson(
        |x: f64| (0.5 * (1.0 + (2.0 * PI * x / l).cos())).powi(2),
        -l / 2.0,
        l / 2.0,
        2000,
    );
    let asymptote = l / 12f64.sqrt() * (slope2 / value2).sqrt();
    assert!((asymptote - PI / 3.0).abs() < 1e-9);

    let d = 0.05 * l;
    let lat = make_lattice(LatticeKind::Line, d, Extents::Line { length: 4.0 * l }).unwrap();
    let cfg = MonteCarloConfig {
        n_samples: 500,
        domain: PeakDomain::Interior,
        ..Default::default()
    };
    let [_, ds] = estimate_distortions(&ReconstructionModel::PixelOnly, &lat, l, &cfg).unwrap();
    let c = ds.value / 0.05;
    assert!((c - asymptote).abs() / asymptote < 0.03, "{c}");
}

#[test]
fn estimates_are_scale_invariant() {
    let cfg = MonteCarloConfig {
        n_samples: 200,
        ..Default::default()
    };
    let crs = ReconstructionModel::Crs(ElasticaSettings::default());
    for model in [ReconstructionModel::PixelOnly, ReconstructionModel::Linear] {
        for kind in [
            LatticeKind::Line,
            LatticeKind::Square,
            LatticeKind::Hexagonal,
        ] {
            let spec = LatticeSpec { kind, size: 2.0 };
            let a = spec.build(30.0, 90.0).unwrap();
            let b = spec.build(60.0, 180.0).unwrap();
            let cfg2 = MonteCarloConfig {
                amplitude: 2.0,
                ..cfg
            };
            let ea = estimate_distortions(&model, &a, 90.0, &cfg).unwrap();
            let eb = estimate_distortions(&model, &b, 180.0, &cfg2).unwrap();
            assert_eq!(ea, eb, "{kind:?} {}", model.name());
        }
    }
    let cfg = MonteCarloConfig {
        n_samples: 20,
        ..cfg
    };
    let spec = LatticeSpec {
        kind: LatticeKind::Line,
        size: 2.0,
    };
    let ea = estimate_distortions(&crs, &spec.build(30.0, 90.0).unwrap(), 90.0, &cfg).unwrap();
    let eb = estimate_distortions(
        &crs,
        &spec.build(60.0, 180.0).unwrap(),
        180.0,
        &MonteCarloConfig {
            amplitude: 2.0,
            ..cfg
        },
    )
    .unwrap();
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x.value - y.value).abs() <= 1e-9 * x.value, "{x:?} {y:?}");
    }
}

#[test]
fn pixel_and_linear_are_amplitude_invariant() {
    let lat = make_lattice(LatticeKind::Line, 20.0, Extents::Line { length: 300.0 }).unwrap();
    for model in [ReconstructionModel::PixelOnly, ReconstructionModel::Linear] {
        let base = MonteCarloConfig {
            n_samples: 300,
            ..Default::default()
        };
        let a = estimate_distortions(&model, &lat, 90.0, &base).unwrap();
        let b = estimate_distortions(
            &model,
            &lat,
            90.0,
            &MonteCarloConfig {
                amplitude: 7.5,
                ..base
            },
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.value - y.value).abs() <= 1e-12 * x.value);
        }
    }
}

#[test]
fn standard_error_shrinks_as_inverse_root_n() {
    let lat = make_lattice(LatticeKind::Line, 20.0, Extents::Line { length: 300.0 }).unwrap();
    let run = |n| {
        let cfg = MonteCarloConfig {
            n_samples: n,
            seed: 9,
            ..Default::default()
        };
        position_distortion(&ReconstructionModel::PixelOnly, &lat, 90.0, &cfg).unwrap()
    };
    let ratio = run(16_000).standard_error / run(1000).standard_error;
    assert!((ratio - 0.25).abs() < 0.03, "{ratio}");
}

#[test]
fn no_peak_policy_controls_sample_count() {
    // Pitch wider than the bump: some draws leave every pixel at zero.
    let lat = make_lattice(LatticeKind::Line, 150.0, Extents::Line { length: 600.0 }).unwrap();
    let base = MonteCarloConfig {
        n_samples: 400,
        ..Default::default()
    };
    let keep = position_distortion(&ReconstructionModel::PixelOnly, &lat, 90.0, &base).unwrap();
    assert_eq!(keep.n_samples, 400);
    let drop = position_distortion(
        &ReconstructionModel::PixelOnly,
        &lat,
        90.0,
        &MonteCarloConfig {
            no_peak: NoPeakPolicy::Discard,
            ..base
        },
    )
    .unwrap();
    assert!(drop.n_samples < 400 && drop.n_samples > 0);
    // Discarded draws are the far ones.
    assert!(drop.value < keep.value);
}

#[test]
fn sweep_rows_follow_model_ratio_metric_order() {
    let cfg = MonteCarloConfig {
        n_samples: 50,
        ..Default::default()
    };
    let spec = LatticeSpec {
        kind: LatticeKind::Line,
        size: 3.0,
    };
    let models = [ReconstructionModel::PixelOnly, ReconstructionModel::Linear];
    let rows = distortion_sweep(&models, &[0.2, 0.4], &spec, 90.0, &cfg).unwrap();
    assert_eq!(rows.len(), 8);
    let keys: Vec<(&str, f64, Metric)> = rows
        .iter()
        .map(|r| (r.model, r.d_over_l, r.metric))
        .collect();
    assert_eq!(keys[0], ("pixel-only", 0.2, Metric::Dp));
    assert_eq!(keys[1], ("pixel-only", 0.2, Metric::Ds));
    assert_eq!(keys[2].1, 0.4);
    assert_eq!(keys[4].0, "linear");
    assert!(rows
        .iter()
        .all(|r| r.rng_seed == cfg.seed && r.n_samples == 50));
    assert!(distortion_sweep(&models, &[0.0], &spec, 90.0, &cfg).is_err());
}
