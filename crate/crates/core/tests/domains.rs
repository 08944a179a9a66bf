use pomdp_core::beliefs::exact_belief_update;
use pomdp_core::domains::lightdark::{LightDarkObservation, LightDarkTransition};
use pomdp_core::domains::mos::{robot_pose, target_cell, target_found, ROBOT_ID};
use pomdp_core::domains::tiger::{TigerObservationModel, TigerTransition};
use pomdp_core::domains::{
    lightdark_build, mos_build, tiger_build, FanSensor, Heading, LightDarkParams, MosAction, MosParams, Move,
    Point2, Pose, TigerAction, TigerObservation, TigerParams, TigerState,
};
use pomdp_core::model::{ObservationModel, TransitionModel};
use pomdp_core::{seeded_rng, Distribution, HistogramBelief};

#[test]
fn repeated_growls_follow_the_closed_form() {
    let p: f64 = 0.85;
    let ob = TigerObservationModel { accuracy: p };
    let mut b = HistogramBelief::uniform(TigerState::ALL).unwrap();
    for m in 1..=12 {
        b = exact_belief_update(&b, &TigerAction::Listen, &TigerObservation::GrowlLeft, &TigerTransition, &ob).unwrap();
        let closed = p.powi(m) / (p.powi(m) + (1.0 - p).powi(m));
        assert!((b.probability(&TigerState::Left) - closed).abs() <= 1e-12, "m = {m}");
    }
}

#[test]
fn tiger_doors_reset_and_blind_the_agent() {
    let ob = TigerObservationModel { accuracy: 0.85 };
    for a in [TigerAction::OpenLeft, TigerAction::OpenRight] {
        for s in TigerState::ALL {
            for n in TigerState::ALL {
                assert_eq!(TigerTransition.probability(&n, &s, &a), 0.5);
                assert_eq!(ob.probability(&TigerObservation::GrowlLeft, &n, &a), 0.5);
            }
        }
    }
    for s in TigerState::ALL {
        assert_eq!(TigerTransition.probability(&s, &s, &TigerAction::Listen), 1.0);
    }
}

#[test]
fn tiger_rejects_bad_accuracy() {
    let bad = TigerParams {
        accuracy: 0.4,
        ..TigerParams::default()
    };
    assert!(tiger_build(bad, &mut seeded_rng(0)).is_err());
}

/// Quarter turn counter-clockwise about the origin.
fn rotate((x, y): (i64, i64)) -> (i64, i64) {
    (-y, x)
}

#[test]
fn fan_is_symmetric_under_quarter_turns() {
    for sensor in [
        FanSensor {
            fov_degrees: 90.0,
            range: 3.0,
        },
        FanSensor {
            fov_degrees: 60.0,
            range: 2.0,
        },
        FanSensor {
            fov_degrees: 180.0,
            range: 4.0,
        },
    ] {
        for x in -3..=3 {
            for y in -3..=3 {
                for heading in Heading::ALL {
                    let pose = Pose { x, y, heading };
                    let (rx, ry) = rotate((x, y));
                    let turned = Pose {
                        x: rx,
                        y: ry,
                        heading: heading.left(),
                    };
                    assert_eq!(rotate(heading.vector()), heading.left().vector());
                    for cx in -6..=6 {
                        for cy in -6..=6 {
                            assert_eq!(
                                sensor.contains(pose, (cx, cy)),
                                sensor.contains(turned, rotate((cx, cy))),
                                "{pose:?} {:?}",
                                (cx, cy)
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn mos_targets_stay_put_and_robot_stays_in_grid() {
    let params = MosParams::default();
    for seed in 0..10 {
        let mut rng = seeded_rng(seed);
        let instance = mos_build(params.clone(), &mut rng).unwrap();
        let tr = instance.problem.env.transition_model().clone();
        let mut state = instance.problem.env.state().clone();
        let cells: Vec<(i64, i64)> =
            state.iter().filter(|(id, _)| *id != ROBOT_ID).map(|(_, s)| target_cell(s)).collect();
        for _ in 0..200 {
            let a = MosAction::ALL[rand::Rng::random_range(&mut rng, 0..MosAction::ALL.len())];
            state = tr.sample(&state, &a, &mut rng);
            let pose = robot_pose(state.get(ROBOT_ID).unwrap());
            assert!((0..params.width).contains(&pose.x) && (0..params.height).contains(&pose.y));
            let now: Vec<(i64, i64)> =
                state.iter().filter(|(id, _)| *id != ROBOT_ID).map(|(_, s)| target_cell(s)).collect();
            assert_eq!(cells, now);
        }
    }
}

#[test]
fn find_marks_targets_inside_the_fan() {
    let params = MosParams::default();
    for seed in 0..20 {
        let mut rng = seeded_rng(seed);
        let instance = mos_build(params.clone(), &mut rng).unwrap();
        let tr = instance.problem.env.transition_model().clone();
        let state = instance.problem.env.state().clone();
        let pose = robot_pose(state.get(ROBOT_ID).unwrap());
        let next = tr.sample(&state, &MosAction::Find, &mut rng);
        for (id, s) in state.iter().filter(|(id, _)| *id != ROBOT_ID) {
            let inside = params.sensor.contains(pose, target_cell(s));
            assert_eq!(target_found(next.get(id).unwrap()), inside, "seed {seed}, object {id}");
        }
    }
}

#[test]
fn lightdark_dynamics_are_deterministic() {
    let t = LightDarkTransition {
        params: LightDarkParams::default(),
    };
    let mut rng = seeded_rng(3);
    let s = Point2::new(3.25, -1.5);
    for m in Move::all() {
        let a = t.sample(&s, &m, &mut rng);
        let b = t.sample(&s, &m, &mut rng);
        assert_eq!(a, b);
        assert_eq!(t.probability(&a, &s, &m), 1.0);
    }
}

fn empirical_std(params: LightDarkParams, x: f64) -> f64 {
    let ob = LightDarkObservation { params };
    let s = Point2::new(x, 0.0);
    let mut rng = seeded_rng(17);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| ob.sample(&s, &Move::all()[0], &mut rng).x).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

#[test]
fn lightdark_noise_grows_away_from_the_light() {
    let params = LightDarkParams {
        sigma_min: 0.1,
        k: 0.5,
        ..LightDarkParams::default()
    };
    let std = empirical_std(params, params.light_x + 2.0);
    assert!((std - 1.1).abs() <= 0.02, "std {std}");
    assert_eq!(params.noise_sigma(params.light_x), params.sigma_min);
    let flat = LightDarkParams { k: 0.0, ..params };
    assert!((empirical_std(flat, -20.0) - 0.1).abs() <= 0.002);
}

#[test]
fn lightdark_rejects_bad_noise() {
    let bad = LightDarkParams {
        sigma_min: 0.0,
        ..LightDarkParams::default()
    };
    assert!(lightdark_build(bad, &mut seeded_rng(0)).is_err());
}
