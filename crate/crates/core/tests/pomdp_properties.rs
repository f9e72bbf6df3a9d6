use std::collections::BTreeMap;

use metrack::dailypomdp::{
    belief_update, estimate_transition, evaluate_day, gaussian_pseudo_counts, infer_day,
    normalize_observation, select_action, smooth_observation, state_index, train_model, Belief,
    DailyActivity, Observation, ObservationSpace, PomdpConfig, PomdpModel, RawObservations,
    SmoothingParams, SpeedBins,
};
use metrack::simgen::{generate_corpus, generate_day, NoiseChannel, ScheduleTemplate};
use metrack::PhysicalActivity;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_space() -> ObservationSpace {
    ObservationSpace {
        time_bins: 12,
        speed_bins: SpeedBins::default(),
    }
}

fn random_observation(rng: &mut impl Rng, space: &ObservationSpace) -> Observation {
    Observation {
        time_bin: rng.random_range(0..space.time_bins),
        activity: PhysicalActivity::ALL[rng.random_range(0..8)],
        speed_bin: rng.random_range(0..space.speed_bins.len()),
    }
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_model(seed: u64) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=17);
    let space = small_space();
    let states: Vec<DailyActivity> = (0..n).map(|i| DailyActivity::new(format!("s{i}"), 1000 + i as u32)).collect();
    let transition = (0..n).map(|_| random_distribution(&mut rng, n)).collect();
    let mut raw = RawObservations::zeros(n);
    for s in 0..n {
        for _ in 0..rng.random_range(0..20) {
            let o = random_observation(&mut rng, &space);
            raw.add(s, o, f64::from(rng.random_range(1..4u8)));
        }
    }
    let smoothing = rng.random_bool(0.5).then_some(SmoothingParams {
        sigma_minutes: 2.0,
        amplitude: 0.3,
        floor_epsilon: 1e-5,
    });
    let rewards = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    PomdpModel::new(states, space, transition, raw, smoothing, rewards).unwrap()
}

/// Exhaustive expected-reward argmax with lowest-index tie-break.
fn brute_force_action(b: &[f64], r: &[Vec<f64>]) -> usize {
    let values: Vec<f64> = (0..r[0].len())
        .map(|a| (0..b.len()).map(|s| b[s] * r[s][a]).sum())
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v == best).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn belief_stays_a_distribution(seed in any::<u64>(), steps in 1usize..40) {
        let model = random_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut b = Belief::uniform(model.n_states());
        for _ in 0..steps {
            let o = random_observation(&mut rng, &model.space);
            let u = belief_update(&b, &o, &model).unwrap();
            b = u.belief;
            prop_assert!(b.probs().iter().all(|&p| p >= 0.0));
            prop_assert!((b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn select_action_matches_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=17);
        let b = Belief::new(random_distribution(&mut rng, n)).unwrap();
        let mut r: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..2.0)).collect()).collect();
        if n > 2 && rng.random_bool(0.3) {
            // duplicate an action column to force an exact tie
            let (src, dst) = (rng.random_range(0..n), rng.random_range(0..n));
            for row in &mut r {
                row[dst] = row[src];
            }
        }
        let a = select_action(&b, &r);
        prop_assert_eq!(a, brute_force_action(b.probs(), &r));
        for c in [0.25, 2.0, 1024.0] {
            let scaled: Vec<Vec<f64>> = r.iter().map(|row| row.iter().map(|v| v * c).collect()).collect();
            prop_assert_eq!(select_action(&b, &scaled), a);
        }
    }

    #[test]
    fn smoothing_normalizes_and_floors(seed in any::<u64>(), sigma in 0.5f64..10.0, amp in 0.01f64..2.0) {
        let model = random_model(seed);
        let space = model.space.clone();
        let eps = 1e-5;
        let p = SmoothingParams { sigma_minutes: sigma, amplitude: amp, floor_epsilon: eps };
        let t = smooth_observation(&model.raw, &space, &p).unwrap();
        for row in &t {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x >= eps * (1.0 - 1e-12)));
        }
    }
}

#[test]
fn hand_computed_two_state_update() {
    let space = ObservationSpace {
        time_bins: 1,
        speed_bins: SpeedBins { edges_kmh: vec![] },
    };
    let o = Observation { time_bin: 0, activity: PhysicalActivity::Sit, speed_bin: 0 };
    let other = Observation { activity: PhysicalActivity::Walk, ..o };
    // O(s1, o) = 0.5 and O(s2, o) = 0.25 from raw counts
    let mut raw = RawObservations::zeros(2);
    raw.add(0, o, 1.0);
    raw.add(0, other, 1.0);
    raw.add(1, o, 1.0);
    raw.add(1, other, 3.0);
    let model = PomdpModel::new(
        vec![DailyActivity::new("a", 1), DailyActivity::new("b", 2)],
        space,
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        raw,
        None,
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .unwrap();
    let u = belief_update(&Belief::new(vec![1.0, 0.0]).unwrap(), &o, &model).unwrap();
    assert!((u.normalizer - 0.475).abs() < 1e-12);
    assert!((u.belief.probs()[0] - 0.45 / 0.475).abs() < 1e-9);
    assert!((u.belief.probs()[1] - 0.025 / 0.475).abs() < 1e-9);
}

#[test]
fn one_sigma_ratio_and_locality() {
    let space = ObservationSpace::default();
    let mut raw = RawObservations::zeros(1);
    let o = space.observe(480, PhysicalActivity::Sit, 0.0);
    raw.add(0, o, 1.0);
    let pseudo = gaussian_pseudo_counts(&raw, &space, 30.0, 0.1);
    let at = |t: u32| pseudo[0][space.cell(&space.observe(t, PhysicalActivity::Sit, 0.0))];
    assert!((at(510) / at(480) - (-0.5f64).exp()).abs() < 1e-9);
    assert!((at(450) / at(480) - (-0.5f64).exp()).abs() < 1e-9);
    let peak = at(480);
    assert!(pseudo[0].iter().all(|&x| x <= peak));
    for t in 0..1440u32 {
        if (t as i64 - 480).abs() > 180 {
            assert!(at(t) < 1e-7 * peak);
        }
    }
}

#[test]
fn vanishing_amplitude_recovers_raw_frequencies() {
    let model = random_model(9);
    let space = model.space.clone();
    let p = SmoothingParams { sigma_minutes: 3.0, amplitude: 1e-13, floor_epsilon: 0.0 };
    let s = smooth_observation(&model.raw, &space, &p).unwrap();
    let r = normalize_observation(&model.raw, &space);
    for (a, b) in s.iter().zip(&r) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn breakfast_self_transition_from_table_sequence() {
    let cfg = PomdpConfig::default();
    let day = generate_day(&ScheduleTemplate::morning().with_jitter(0.0), 0).unwrap();
    let t = estimate_transition(std::slice::from_ref(&day.trace), &cfg.states).unwrap();
    let b = state_index(&cfg.states, "eat breakfast").unwrap();
    let w = state_index(&cfg.states, "wash self").unwrap();
    // brute-force count over the expanded minutes
    let acts: Vec<&str> = day.trace.steps.iter().map(|s| s.activity.as_str()).collect();
    let from_b = acts.windows(2).filter(|p| p[0] == "eat breakfast").count();
    let stay = acts.windows(2).filter(|p| p[0] == "eat breakfast" && p[1] == "eat breakfast").count();
    assert_eq!((stay, from_b), (9, 10));
    assert!((t[b][b] - 0.9).abs() < 1e-12);
    assert!((t[b][w] - 0.1).abs() < 1e-12);
}

#[test]
fn raising_a_reward_never_lowers_that_recall() {
    let corpus = generate_corpus(&ScheduleTemplate::full_day(), 4, &NoiseChannel::default(), 3).unwrap();
    let traces: Vec<_> = corpus.iter().map(|d| d.trace.clone()).collect();
    let cfg = PomdpConfig::default();
    let model = train_model(&traces[..3], &cfg).unwrap();
    let held = &traces[3];
    let obs = held.observations(&cfg.space);
    let truth = held.state_indices(&cfg.states).unwrap();
    let recall = |m: &PomdpModel| {
        let p: Vec<usize> = infer_day(&obs, m).unwrap().iter().map(|p| p.state).collect();
        evaluate_day(&p, &truth, m.n_states()).unwrap()
    };
    let base = recall(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..6 {
        let s = rng.random_range(0..cfg.states.len());
        let k = rng.random_range(1.0..5.0);
        let tweaked = model
            .with_reward_multipliers(&BTreeMap::from([(cfg.states[s].name.clone(), k)]))
            .unwrap();
        let r = recall(&tweaked);
        if let (Some(before), Some(after)) = (base.recall[s], r.recall[s]) {
            assert!(after >= before, "{}: {before} -> {after}", cfg.states[s].name);
        }
    }
}

#[test]
fn inference_is_deterministic() {
    let corpus = generate_corpus(&ScheduleTemplate::full_day(), 3, &NoiseChannel::default(), 8).unwrap();
    let traces: Vec<_> = corpus.iter().map(|d| d.trace.clone()).collect();
    let cfg = PomdpConfig::default();
    let m = train_model(&traces[..2], &cfg).unwrap();
    let obs = traces[2].observations(&cfg.space);
    assert_eq!(infer_day(&obs, &m).unwrap(), infer_day(&obs, &m).unwrap());
}
