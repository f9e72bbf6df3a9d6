use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use metrack::classifier::{cross_validate, train_tree, PhysicalActivity};
use metrack::dailypomdp::{
    evaluate_day, infer_day, read_predictions_csv, read_trace_csv, state_index, train_model,
    write_predictions_csv, write_trace_csv, DailyActivity, DayTrace, PomdpModel,
};
use metrack::energy::{
    ee_error, estimate_ee, load_compendium, plot_data_csv, plot_svg, read_segments_csv,
    timeline_from_codes, Compendium, MetSource,
};
use metrack::signal::{
    build_feature_matrix, read_feature_cache, read_feature_csv, read_sensor_csv,
    read_session_manifest, write_feature_cache, write_feature_csv, write_sensor_csv, FeatureMatrix,
    SessionEntry,
};
use metrack::simgen::{generate_corpus, sub_seed, synthesize_signals, ScheduleTemplate};
use metrack::PipelineConfig;

use crate::manifest::Manifest;
use crate::{Cli, Command, EeArgs};

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut ctx = Ctx {
        out: &out,
        manifest: Manifest::new(command_name(&cli.command), &config),
    };
    if let Some(p) = &cli.config {
        ctx.manifest.input(p)?;
    }
    match cli.command {
        Command::Simulate { template } => simulate(&mut ctx, template.as_deref()),
        Command::Features { sessions } => features(&mut ctx, &sessions),
        Command::TrainPa { features } => train_pa(&mut ctx, &features),
        Command::EvalPa { features, folds } => eval_pa(&mut ctx, &features, folds),
        Command::TrainPomdp { traces, no_smoothing } => train_pomdp(&mut ctx, &traces, no_smoothing),
        Command::InferDay { model, traces } => infer(&mut ctx, &model, &traces),
        Command::EstimateEe(args) => estimate(&mut ctx, &args),
    }?;
    ctx.manifest.write(&out)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Features { .. } => "features",
        Command::TrainPa { .. } => "train-pa",
        Command::EvalPa { .. } => "eval-pa",
        Command::TrainPomdp { .. } => "train-pomdp",
        Command::InferDay { .. } => "infer-day",
        Command::EstimateEe(_) => "estimate-ee",
    }
}

struct Ctx<'a> {
    out: &'a Path,
    manifest: Manifest<'a>,
}

impl Ctx<'_> {
    fn config(&self) -> &PipelineConfig {
        self.manifest.config
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        self.manifest.output(self.out, &p)?;
        Ok(p)
    }

    /// Records a file written by a library call.
    fn wrote(&mut self, p: &Path) -> Result<()> {
        self.manifest.output(self.out, p)
    }
}

fn simulate(ctx: &mut Ctx, template: Option<&Path>) -> Result<()> {
    let cfg = ctx.config().clone();
    let template = match template {
        Some(p) => {
            ctx.manifest.input(p)?;
            ScheduleTemplate::load(p)?
        }
        None => cfg.sim.template.clone(),
    };
    ctx.write("template.json", template.to_json()? + "\n")?;

    fs::create_dir_all(ctx.path("sensors"))?;
    let signal_seed = sub_seed(cfg.seed, 1);
    let mut sessions = Vec::new();
    for activity in PhysicalActivity::ALL {
        for k in 0..cfg.sim.sessions_per_activity {
            let seed = sub_seed(signal_seed, (activity.index() * cfg.sim.sessions_per_activity + k) as u64);
            let stream = synthesize_signals(activity, cfg.sim.session_minutes, &cfg.sim.recipe, seed)?;
            let rel = format!("sensors/{}_{:02}.csv", activity.name(), k + 1);
            let p = ctx.path(&rel);
            write_sensor_csv(&p, &stream)?;
            ctx.wrote(&p)?;
            sessions.push(SessionEntry {
                file: PathBuf::from(rel),
                label: Some(activity),
                sample_rate: stream.sample_rate(),
            });
        }
    }
    ctx.write("sessions.json", serde_json::to_string_pretty(&sessions)? + "\n")?;

    let compendium = Compendium::bundled();
    let days = generate_corpus(&template, cfg.sim.days, &cfg.sim.noise, sub_seed(cfg.seed, 0))?;
    fs::create_dir_all(ctx.path("days"))?;
    for (i, day) in days.iter().enumerate() {
        let p = ctx.path(&format!("days/day_{:02}.csv", i + 1));
        write_trace_csv(&p, &day.trace)?;
        ctx.wrote(&p)?;
        let energy = day.energy_timeline(&compendium, cfg.weight_kg)?;
        ctx.write(&format!("days/day_{:02}_energy.csv", i + 1), energy.to_csv())?;
    }
    println!(
        "simulated {} sensor sessions ({} min each) and {} days",
        sessions.len(),
        cfg.sim.session_minutes,
        days.len()
    );
    Ok(())
}

fn features(ctx: &mut Ctx, manifest: &Path) -> Result<()> {
    ctx.manifest.input(manifest)?;
    let entries = read_session_manifest(manifest)?;
    if entries.is_empty() {
        bail!("{}: no sessions listed", manifest.display());
    }
    let mut streams = Vec::with_capacity(entries.len());
    for e in &entries {
        ctx.manifest.input(&e.file)?;
        streams.push(read_sensor_csv(&e.file, e.sample_rate, e.label)?);
    }
    let m = build_feature_matrix(&streams, &ctx.config().signal)?;
    let csv = ctx.path("features.csv");
    write_feature_csv(&csv, &m)?;
    ctx.wrote(&csv)?;
    let bin = ctx.path("features.bin");
    write_feature_cache(&bin, &m)?;
    ctx.wrote(&bin)?;
    println!("{} windows x {} features from {} sessions", m.len(), m.n_features(), streams.len());
    if let Some(labels) = &m.labels {
        for a in PhysicalActivity::ALL {
            let n = labels.iter().filter(|&&l| l == a).count();
            if n > 0 {
                println!("  {:<11}{n:>6}", a.name());
            }
        }
    }
    Ok(())
}

fn load_features(ctx: &mut Ctx, path: &Path) -> Result<FeatureMatrix> {
    ctx.manifest.input(path)?;
    let m = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_feature_cache(path)?,
        _ => read_feature_csv(path)?,
    };
    Ok(m)
}

fn train_pa(ctx: &mut Ctx, features: &Path) -> Result<()> {
    let m = load_features(ctx, features)?;
    let tree = train_tree(&m, ctx.config().tree)?;
    ctx.write("tree.json", tree.to_json()? + "\n")?;
    let train_acc = {
        let pred = tree.predict_matrix(&m)?;
        let labels = m.labels.as_deref().unwrap_or_default();
        pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / m.len() as f64
    };
    println!(
        "decision tree: {} nodes, depth {}, training accuracy {:.4}",
        tree.nodes.len(),
        tree.depth(),
        train_acc
    );
    Ok(())
}

fn eval_pa(ctx: &mut Ctx, features: &Path, folds: Option<usize>) -> Result<()> {
    let m = load_features(ctx, features)?;
    let cfg = ctx.config();
    let k = folds.unwrap_or(cfg.cv_folds);
    let report = cross_validate(&m, k, cfg.tree, cfg.seed)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    ctx.write("confusion.csv", report.confusion.to_csv())?;
    let summary = serde_json::json!({
        "folds": k,
        "stratified": report.stratified,
        "accuracy": report.accuracy,
        "windows": m.len(),
        "warnings": report.warnings,
    });
    ctx.write("cv.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    println!("{k}-fold cross-validation over {} windows", m.len());
    print!("{}", report.confusion.to_table());
    println!("overall accuracy {:.4}", report.accuracy);
    Ok(())
}

/// Expands directories to their `.csv` files in name order.
fn expand_traces(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|e| e == "csv")
                        && !f.file_stem().is_some_and(|s| s.to_string_lossy().ends_with("_energy"))
                })
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no trace files found");
    }
    Ok(out)
}

fn load_traces(ctx: &mut Ctx, paths: &[PathBuf]) -> Result<Vec<(PathBuf, DayTrace)>> {
    expand_traces(paths)?
        .into_iter()
        .map(|p| {
            ctx.manifest.input(&p)?;
            let t = read_trace_csv(&p)?;
            Ok((p, t))
        })
        .collect()
}

fn train_pomdp(ctx: &mut Ctx, traces: &[PathBuf], no_smoothing: bool) -> Result<()> {
    let traces: Vec<DayTrace> = load_traces(ctx, traces)?.into_iter().map(|(_, t)| t).collect();
    let mut pc = ctx.config().pomdp.clone();
    if no_smoothing {
        pc.smoothing = None;
    }
    let model = train_model(&traces, &pc)?;
    ctx.write("pomdp.json", model.to_json()? + "\n")?;
    let minutes: usize = traces.iter().map(DayTrace::len).sum();
    println!(
        "daily activity model: {} states, {} observation cells, trained on {} days ({minutes} minutes), {}",
        model.n_states(),
        model.space.n_cells(),
        traces.len(),
        if pc.smoothing.is_some() { "smoothed" } else { "unsmoothed" }
    );
    Ok(())
}

fn infer(ctx: &mut Ctx, model_path: &Path, traces: &[PathBuf]) -> Result<()> {
    ctx.manifest.input(model_path)?;
    let model = PomdpModel::load(model_path)?;
    let traces = load_traces(ctx, traces)?;
    let mut pred_all = Vec::new();
    let mut truth_all = Vec::new();
    for (path, trace) in &traces {
        let preds = infer_day(&trace.observations(&model.space), &model)?;
        let resets = preds.iter().filter(|p| p.reset).count();
        if resets > 0 {
            info!("{}: belief reset {resets} times", path.display());
        }
        let rows: Vec<(u32, String, f64)> = trace
            .steps
            .iter()
            .zip(&preds)
            .map(|(s, p)| (s.minute, model.states[p.state].name.clone(), p.top_prob))
            .collect();
        let stem = path.file_stem().map_or("day".into(), |s| s.to_string_lossy().into_owned());
        let p = ctx.path(&format!("predictions/{stem}.csv"));
        fs::create_dir_all(p.parent().unwrap_or(ctx.out))?;
        write_predictions_csv(&p, &rows)?;
        ctx.wrote(&p)?;
        pred_all.extend(preds.iter().map(|p| p.state));
        truth_all.extend(trace.state_indices(&model.states)?);
    }
    let metrics = evaluate_day(&pred_all, &truth_all, model.n_states())?;
    ctx.write("daily_metrics.json", serde_json::to_string_pretty(&metrics)? + "\n")?;
    println!("{} days, {} minutes", traces.len(), truth_all.len());
    print!("{}", metrics.to_table(&model.states));
    Ok(())
}

fn codes_for(
    rows: impl Iterator<Item = (u32, String)>,
    states: &[DailyActivity],
    origin: &Path,
) -> Result<Vec<(u32, u32)>> {
    rows.map(|(minute, name)| {
        let i = state_index(states, &name).with_context(|| format!("in {}", origin.display()))?;
        Ok((minute, states[i].code))
    })
    .collect()
}

fn estimate(ctx: &mut Ctx, args: &EeArgs) -> Result<()> {
    let compendium = match &args.compendium {
        Some(p) => {
            ctx.manifest.input(p)?;
            load_compendium(p)?
        }
        None => Compendium::bundled(),
    };
    let weight = args.weight.unwrap_or(ctx.config().weight_kg);
    let source = if args.met_from_speed {
        MetSource::SpeedForWalking
    } else {
        ctx.config().met_source
    };

    if let Some(seg_path) = &args.segments {
        ctx.manifest.input(seg_path)?;
        let segments = read_segments_csv(seg_path)?;
        let est = estimate_ee(&segments, weight, &compendium, source)?;
        ctx.write("energy.csv", est.timeline.to_csv())?;
        println!(
            "{} segments, {} minutes at {weight} kg: {:.1} kcal",
            segments.len(),
            est.timeline.len(),
            est.total_kcal
        );
        return Ok(());
    }

    let (Some(pred_path), Some(truth_path)) = (&args.predictions, &args.truth) else {
        bail!("estimate-ee needs --segments, or --predictions with --truth");
    };
    if source == MetSource::SpeedForWalking {
        warn!("walking speeds are not available for predicted minutes; using compendium METs");
    }
    ctx.manifest.input(pred_path)?;
    ctx.manifest.input(truth_path)?;
    let states = ctx.config().pomdp.states.clone();
    let preds = read_predictions_csv(pred_path)?;
    let truth = read_trace_csv(truth_path)?;
    let pred_codes = codes_for(preds.into_iter().map(|(m, a, _)| (m, a)), &states, pred_path)?;
    let truth_codes = codes_for(
        truth.steps.iter().map(|s| (s.minute, s.activity.clone())),
        &states,
        truth_path,
    )?;
    let predicted = timeline_from_codes(&pred_codes, weight, &compendium)?;
    let expected = timeline_from_codes(&truth_codes, weight, &compendium)?;
    let metrics = ee_error(&predicted, &expected)?;

    ctx.write("energy_predicted.csv", predicted.to_csv())?;
    ctx.write("energy_expected.csv", expected.to_csv())?;
    ctx.write("energy_plot.csv", plot_data_csv(&expected, &predicted))?;
    ctx.write("energy_plot.svg", plot_svg(&expected, &predicted))?;
    let mut report = BTreeMap::new();
    report.insert("expected_kcal", serde_json::json!(expected.total_kcal()));
    report.insert("predicted_kcal", serde_json::json!(predicted.total_kcal()));
    report.insert("metrics", serde_json::to_value(&metrics)?);
    ctx.write("ee_metrics.json", serde_json::to_string_pretty(&report)? + "\n")?;

    println!("energy expenditure at {weight} kg over {} minutes", expected.len());
    println!("{:<28}{:>10}", "expected kcal", format!("{:.1}", expected.total_kcal()));
    println!("{:<28}{:>10}", "predicted kcal", format!("{:.1}", predicted.total_kcal()));
    println!("{:<28}{:>9.1}%", "mean |difference|", metrics.mean_absolute_pct);
    println!("{:<28}{:>9.1}%", "end of day difference", metrics.end_of_day_pct);
    println!("{:<28}{:>9.1}%", "min difference", metrics.min_pct);
    println!("{:<28}{:>9.1}%", "max difference", metrics.max_pct);
    if metrics.excluded > 0 {
        println!("({} zero-expenditure segments excluded)", metrics.excluded);
    }
    Ok(())
}
