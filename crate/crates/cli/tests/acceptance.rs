//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use metrack::classifier::cross_validate;
use metrack::dailypomdp::{
    belief_update, gaussian_pseudo_counts, leave_one_day_out, normalize_observation, select_action,
    smooth_observation, Belief, DailyActivity, Observation, ObservationSpace, PomdpModel,
    RawObservations, SmoothingParams, SpeedBins,
};
use metrack::energy::{ee_error, estimate_ee, timeline_from_codes, Compendium, EeSegment, MetSource};
use metrack::signal::{build_feature_matrix, extract_features, Channel, Taper, Window};
use metrack::simgen::{generate_corpus, sub_seed, synthesize_signals};
use metrack::{PhysicalActivity, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed < limit;
    println!(
        "criterion {id}: {} {name}: {} [{:.2}s / limit {}s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn walk_and_bus() -> Vec<EeSegment> {
    vec![
        EeSegment {
            code: 17190,
            minutes: 9.0,
            speed_kmh: Some(4.5),
        },
        EeSegment {
            code: 16016,
            minutes: 8.0,
            speed_kmh: None,
        },
    ]
}

fn criterion_1() -> Outcome {
    let c = Compendium::bundled();
    let table = estimate_ee(&walk_and_bus(), 60.0, &c, MetSource::Compendium).unwrap().total_kcal;
    let speed = estimate_ee(&walk_and_bus(), 60.0, &c, MetSource::SpeedForWalking).unwrap().total_kcal;
    // 60 * (9/60 * 4.5 + 8/60 * 1.3) = 50.9, reported rounded as 51
    let tol = 0.1 + 1e-9;
    let pass = (table - 41.9).abs() <= tol && (speed - 51.0).abs() <= tol && speed.round() == 51.0;
    check(pass, format!("table METs {table:.4} kcal (want 41.9), speed METs {speed:.4} kcal (want 51.0)"))
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let s: f64 = v.iter().sum();
    if s == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    v.into_iter().map(|x| x / s).collect()
}

fn random_observation(rng: &mut impl Rng, space: &ObservationSpace) -> Observation {
    Observation {
        time_bin: rng.random_range(0..space.time_bins),
        activity: PhysicalActivity::ALL[rng.random_range(0..PhysicalActivity::COUNT)],
        speed_bin: rng.random_range(0..space.speed_bins.len()),
    }
}

fn random_raw(rng: &mut impl Rng, n: usize, space: &ObservationSpace, max_obs: usize) -> RawObservations {
    let mut raw = RawObservations::zeros(n);
    for s in 0..n {
        for _ in 0..rng.random_range(0..=max_obs) {
            let o = random_observation(rng, space);
            raw.add(s, o, f64::from(rng.random_range(1..5u8)));
        }
    }
    raw
}

fn random_model(seed: u64) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=17);
    let space = ObservationSpace {
        time_bins: rng.random_range(1..48),
        speed_bins: SpeedBins::default(),
    };
    let states = (0..n).map(|i| DailyActivity::new(format!("s{i}"), 1000 + i as u32)).collect();
    let transition = (0..n).map(|_| random_distribution(&mut rng, n)).collect();
    let raw = random_raw(&mut rng, n, &space, 30);
    let smoothing = rng.random_bool(0.5).then_some(SmoothingParams {
        sigma_minutes: rng.random_range(0.5..10.0),
        amplitude: rng.random_range(0.01..1.0),
        floor_epsilon: 1e-6,
    });
    let rewards = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    PomdpModel::new(states, space, transition, raw, smoothing, rewards).unwrap()
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut updates = 0;
    for seed in 0..1000u64 {
        let model = random_model(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1));
        let mut b = Belief::new(random_distribution(&mut rng, model.n_states())).unwrap();
        for _ in 0..20 {
            let o = random_observation(&mut rng, &model.space);
            b = belief_update(&b, &o, &model).unwrap().belief;
            let sum: f64 = b.probs().iter().sum();
            if b.probs().iter().any(|&p| p < 0.0) {
                worst = f64::INFINITY;
            }
            worst = worst.max((sum - 1.0).abs());
            updates += 1;
        }
    }

    // T = [[.9,.1],[.2,.8]], b = (1,0), O(s1,o) = .5, O(s2,o) = .25
    let space = ObservationSpace {
        time_bins: 1,
        speed_bins: SpeedBins { edges_kmh: vec![] },
    };
    let o = Observation {
        time_bin: 0,
        activity: PhysicalActivity::Sit,
        speed_bin: 0,
    };
    let other = Observation {
        activity: PhysicalActivity::Walk,
        ..o
    };
    let mut raw = RawObservations::zeros(2);
    raw.add(0, o, 1.0);
    raw.add(0, other, 1.0);
    raw.add(1, o, 1.0);
    raw.add(1, other, 3.0);
    let model = PomdpModel::new(
        vec![DailyActivity::new("s1", 1), DailyActivity::new("s2", 2)],
        space,
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        raw,
        None,
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .unwrap();
    let u = belief_update(&Belief::new(vec![1.0, 0.0]).unwrap(), &o, &model).unwrap();
    let hand = [0.45 / 0.475, 0.025 / 0.475];
    let err = u.belief.probs().iter().zip(hand).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        worst <= 1e-9 && err <= 1e-9,
        format!("{updates} updates, max |sum-1| {worst:.2e}; 2-state case error {err:.2e}"),
    )
}

fn exhaustive_action(b: &[f64], r: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for a in 0..r[0].len() {
        let v: f64 = r.iter().zip(b).map(|(row, p)| row[a] * p).sum();
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

fn criterion_3() -> Outcome {
    let mut mismatches = 0;
    let mut scale_changes = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=17);
        let b = Belief::new(random_distribution(&mut rng, n)).unwrap();
        let mut r: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        if seed % 4 == 0 && n > 1 {
            let (src, dst) = (rng.random_range(0..n), rng.random_range(0..n));
            for row in &mut r {
                row[dst] = row[src];
            }
        }
        let a = select_action(&b, &r);
        if a != exhaustive_action(b.probs(), &r) {
            mismatches += 1;
        }
        for c in [0.5, 3.0, 64.0, rng.random_range(0.1..10.0)] {
            let scaled: Vec<Vec<f64>> = r.iter().map(|row| row.iter().map(|v| v * c).collect()).collect();
            if select_action(&b, &scaled) != a {
                scale_changes += 1;
            }
        }
    }
    check(
        mismatches == 0 && scale_changes == 0,
        format!("1000 cases: {mismatches} oracle mismatches, {scale_changes} scale-induced changes"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut below_floor = 0usize;
    let mut worst_limit: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = ObservationSpace {
            time_bins: rng.random_range(1..120),
            speed_bins: SpeedBins::default(),
        };
        let n = rng.random_range(1..6);
        let raw = random_raw(&mut rng, n, &space, 40);
        let eps = 1.0 / (space.n_cells() as f64 * rng.random_range(10.0..1e4));
        let p = SmoothingParams {
            sigma_minutes: rng.random_range(0.5..60.0),
            amplitude: rng.random_range(0.01..2.0),
            floor_epsilon: eps,
        };
        for row in smooth_observation(&raw, &space, &p).unwrap() {
            worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
            below_floor += row.iter().filter(|&&x| x < eps).count();
        }
        let limit = SmoothingParams {
            amplitude: 1e-14,
            floor_epsilon: 0.0,
            ..p
        };
        let s = smooth_observation(&raw, &space, &limit).unwrap();
        for (a, b) in s.iter().zip(normalize_observation(&raw, &space)) {
            for (x, y) in a.iter().zip(b) {
                worst_limit = worst_limit.max((x - y).abs());
            }
        }
    }

    let space = ObservationSpace::default();
    let mut raw = RawObservations::zeros(1);
    raw.add(0, space.observe(480, PhysicalActivity::Sit, 0.0), 1.0);
    let pseudo = gaussian_pseudo_counts(&raw, &space, 30.0, 0.1);
    let at = |t: u32| pseudo[0][space.cell(&space.observe(t, PhysicalActivity::Sit, 0.0))];
    let ratio_err = (at(510) / at(480) - (-0.5f64).exp()).abs();

    check(
        worst_sum <= 1e-9 && below_floor == 0 && ratio_err <= 1e-9 && worst_limit <= 1e-9,
        format!(
            "max |sum-1| {worst_sum:.2e}, {below_floor} cells below floor, one-sigma ratio error {ratio_err:.2e}, raw-limit error {worst_limit:.2e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = PipelineConfig::default();
    // same session seeds as `metrack simulate`
    let signal_seed = sub_seed(cfg.seed, 1);
    let mut sessions = Vec::new();
    for a in PhysicalActivity::ALL {
        for k in 0..cfg.sim.sessions_per_activity {
            let seed = sub_seed(signal_seed, (a.index() * cfg.sim.sessions_per_activity + k) as u64);
            sessions.push(synthesize_signals(a, cfg.sim.session_minutes, &cfg.sim.recipe, seed).unwrap());
        }
    }
    let m = build_feature_matrix(&sessions, &cfg.signal).unwrap();
    let r = cross_validate(&m, 10, cfg.tree, cfg.seed).unwrap();
    let rows_ok = r
        .confusion
        .rates()
        .iter()
        .zip(r.confusion.support())
        .all(|(row, s)| s == 0 || (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    check(
        r.stratified && r.accuracy >= 0.90 && rows_ok,
        format!(
            "{} windows, stratified {}, accuracy {:.4} (want >= 0.90), rows sum to 1: {rows_ok}",
            m.len(),
            r.stratified,
            r.accuracy
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = PipelineConfig::default();
    let corpus = generate_corpus(&cfg.sim.template, cfg.sim.days, &cfg.sim.noise, sub_seed(cfg.seed, 0)).unwrap();
    let traces: Vec<_> = corpus.into_iter().map(|d| d.trace).collect();

    let mut base_cfg = cfg.pomdp.clone();
    base_cfg.smoothing = None;
    let base = leave_one_day_out(&traces, &base_cfg).unwrap();
    let smoothed = leave_one_day_out(&traces, &cfg.pomdp).unwrap();

    let worst = smoothed.worst(2);
    let mut tweak_cfg = cfg.pomdp.clone();
    tweak_cfg.reward_multipliers = worst.iter().map(|&w| (cfg.pomdp.states[w].name.clone(), 3.0)).collect::<BTreeMap<_, _>>();
    let tweaked = leave_one_day_out(&traces, &tweak_cfg).unwrap();

    let margin = smoothed.mean - base.mean;
    let names: Vec<&str> = worst.iter().map(|&w| cfg.pomdp.states[w].name.as_str()).collect();
    check(
        margin >= 0.10 && tweaked.min > smoothed.min,
        format!(
            "mean recall base {:.3} -> smoothed {:.3} (margin {margin:.3}, want >= 0.10); x3 on {names:?}: min recall {:.3} -> {:.3}",
            base.mean, smoothed.mean, smoothed.min, tweaked.min
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = PipelineConfig::default();
    let c = Compendium::bundled();
    let corpus = generate_corpus(&cfg.sim.template, cfg.sim.days, &cfg.sim.noise, sub_seed(cfg.seed, 0)).unwrap();
    let mut closure = true;
    for day in &corpus {
        let exp = day.energy_timeline(&c, cfg.weight_kg).unwrap();
        let pred = timeline_from_codes(&day.codes, cfg.weight_kg, &c).unwrap();
        let m = ee_error(&pred, &exp).unwrap();
        closure &= m.mean_absolute_pct == 0.0 && m.end_of_day_pct == 0.0 && m.min_pct == 0.0 && m.max_pct == 0.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parseval: f64 = 0.0;
    for _ in 0..200 {
        let n = 1usize << rng.random_range(3..9);
        let values: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let w = Window {
            start_index: 0,
            channels: vec![Channel::Ax, Channel::Ay, Channel::Az],
            values: values.clone(),
            sample_rate: 50.0,
            label: None,
        };
        let f = extract_features(&w, Taper::None);
        for (ch, x) in ["ax", "ay", "az"].iter().zip(&values) {
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq = f.get(&format!("fenergy_{ch}")).unwrap();
            parseval = parseval.max((freq - time).abs() / time.max(1e-300));
        }
    }

    let codes: Vec<u32> = c.codes().collect();
    let mut linear = true;
    let mut monotone = true;
    for _ in 0..500 {
        let segs: Vec<EeSegment> = (0..rng.random_range(0..10))
            .map(|_| EeSegment::new(codes[rng.random_range(0..codes.len())], f64::from(rng.random_range(0..90u32))))
            .collect();
        let w = rng.random_range(30.0..150.0);
        let k = rng.random_range(0.1..4.0);
        let e1 = estimate_ee(&segs, w, &c, MetSource::Compendium).unwrap();
        let ek = estimate_ee(&segs, w * k, &c, MetSource::Compendium).unwrap();
        linear &= (ek.total_kcal - k * e1.total_kcal).abs() <= 1e-9 * (1.0 + ek.total_kcal);
        monotone &= e1.timeline.cumulative_kcal.windows(2).all(|p| p[1] >= p[0]);
    }
    check(
        closure && parseval <= 1e-9 && linear && monotone,
        format!(
            "zero-error closure on {} days: {closure}; Parseval max rel error {parseval:.2e}; weight-linear: {linear}; monotone: {monotone}",
            corpus.len()
        ),
    )
}

fn metrack(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_metrack"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(())
}

fn chain(root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let seed = ["--seed", "2024"];
    let run = |out: &str, rest: &[&str]| {
        let mut args = vec!["--out".to_string(), p(out)];
        args.extend(seed.iter().map(|s| s.to_string()));
        args.extend(rest.iter().map(|s| s.to_string()));
        metrack(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    run("sim", &["simulate"])?;
    run("feat", &["features", "--sessions", &p("sim/sessions.json")])?;
    run("pa", &["train-pa", "--features", &p("feat/features.csv")])?;
    run("cv", &["eval-pa", "--features", &p("feat/features.bin")])?;
    let train: Vec<String> = (1..=9).map(|i| p(&format!("sim/days/day_{i:02}.csv"))).collect();
    let mut args = vec!["train-pomdp", "--traces"];
    args.extend(train.iter().map(String::as_str));
    run("pomdp", &args)?;
    run("infer", &["infer-day", "--model", &p("pomdp/pomdp.json"), "--traces", &p("sim/days/day_10.csv")])?;
    run(
        "ee",
        &["estimate-ee", "--predictions", &p("infer/predictions/day_10.csv"), "--truth", &p("sim/days/day_10.csv")],
    )
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_8() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if let Err(e) = chain(a.path()).and_then(|_| chain(b.path())) {
        return check(false, e);
    }
    let fa = files(a.path());
    let fb = files(b.path());
    if fa != fb {
        return check(false, "runs produced different file sets");
    }
    let differing: Vec<_> = fa
        .iter()
        .filter(|f| std::fs::read(a.path().join(f)).unwrap() != std::fs::read(b.path().join(f)).unwrap())
        .collect();
    check(
        differing.is_empty(),
        format!("7-stage chain run twice: {} files, {} differ", fa.len(), differing.len()),
    )
}

fn main() {
    let results = [
        run(1, "MET arithmetic", Duration::from_secs(1), criterion_1),
        run(2, "belief update", Duration::from_secs(5), criterion_2),
        run(3, "greedy decoding oracle", Duration::from_secs(5), criterion_3),
        run(4, "smoothing properties", Duration::from_secs(5), criterion_4),
        run(5, "activity classifier CV", Duration::from_secs(60), criterion_5),
        run(6, "smoothing and reward tweak", Duration::from_secs(60), criterion_6),
        run(7, "energy closure and properties", Duration::from_secs(10), criterion_7),
        run(8, "end-to-end determinism", Duration::from_secs(180), criterion_8),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
