// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::time::Instant;

use varnn_core::data::{prepare, write_csv, PreparedData};
use varnn_core::experiments::{
    ablation_plan, base_varnn, cell_stem, complexity_csv, emit_complexity_report, prepare_output_dir, run_plan, write_json,
    write_report, AblationAxis, DatasetSource, ExperimentPlan, ExperimentReport, ModelConfig, SyntheticPreset, TrainedModel,
};
use varnn_core::model::{count_macs_per_window, rollout_counted, Variant, VarnnSpec};
use varnn_core::trainer::{gradcheck_suite, loss, SuiteCase};
use varnn_core::{Activation, Rng, Varnn};

use crate::config::RunConfig;
use crate::failure::{Failure, Status};

const RESOLVED_CONFIG: &str = "config.resolved.toml";

/// Fails early, before any work, when the run would clobber outputs.
fn check_clobber(dir: &Path, overwrite: bool) -> Result<(), Failure> {
    if !overwrite && dir.is_dir() && fs::read_dir(dir)?.next().is_some() {
        return Err(Failure::config(format!(
            "output directory {} is not empty; pass --overwrite to replace it",
            dir.display()
        )));
    }
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{:<22} {:>10} {:>6} {:>12} {:>12} {:>12} {:>6} {:>9} {:>10}",
        "model", "swept", "seed", "train_mse", "val_mse", "test_mse", "best", "params", "macs/win"
    );
    for r in &report.rows {
        println!(
            "{:<22} {:>10} {:>6} {:>12.6e} {:>12.6e} {:>12.6e} {:>6} {:>9} {:>10}",
            r.model,
            r.swept.as_deref().unwrap_or("-"),
            r.seed,
            r.train_mse,
            r.val_mse,
            r.test_mse,
            r.best_epoch.map_or("-".to_string(), |e| e.to_string()),
            r.parameter_count,
            r.macs_per_window
        );
    }
}

fn execute(cfg: &RunConfig, plan: &ExperimentPlan, out: &Path, overwrite: bool) -> Result<(), Failure> {
    plan.validate()?;
    check_clobber(out, overwrite)?;
    let report = run_plan(plan)?;
    prepare_output_dir(out, overwrite)?;
    let mut resolved = cfg.clone();
    resolved.models = plan.models.clone();
    resolved.axis = plan.axis;
    resolved.output_dir = None;
    fs::write(out.join(RESOLVED_CONFIG), resolved.to_toml()?)?;
    write_report(out, &report)?;
    print_report(&report);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn train(config: &Path, output: Option<&Path>, overwrite: bool, root: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let out = cfg.output_dir(output, root);
    execute(&cfg, &cfg.plan(), &out, overwrite)
}

pub fn ablate(config: &Path, output: Option<&Path>, overwrite: bool, root: &Path, axis: Option<AblationAxis>) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let axis = axis
        .or(cfg.axis)
        .ok_or_else(|| Failure::config("no ablation axis: pass --axis or set `axis` in the config"))?;
    let plan = ablation_plan(&cfg.plan(), axis);
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir(None, root).join(axis.name()));
    execute(&cfg, &plan, &out, overwrite)
}

/// Tolerance for re-scoring a stored run.
const RESCORE_TOLERANCE: f64 = 1e-12;

pub fn evaluate(run: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(&run.join(RESOLVED_CONFIG))?;
    let text = fs::read_to_string(run.join("report.json")).map_err(|e| Failure::data(format!("{}: {e}", run.join("report.json").display())))?;
    let report: ExperimentReport = serde_json::from_str(&text).map_err(|e| Failure::data(format!("report.json: {e}")))?;
    let plan = cfg.plan();
    let data = prepare(plan.dataset.load()?, &plan.pipeline)?;
    if data.source_fingerprint != report.dataset_fingerprint {
        return Err(Failure::data("dataset contents differ from the ones the run was trained on"));
    }
    let (d, w) = (data.dataset.d(), data.window_len);
    let test = &data.windows.test;

    println!("{:<22} {:>6} {:>14} {:>14} {:>10}", "model", "seed", "stored_test", "rescored_test", "abs_diff");
    let mut worst: f64 = 0.0;
    for (i, row) in report.rows.iter().enumerate() {
        let path = run.join("params").join(format!("{}.json", cell_stem(&report, i)));
        let json = fs::read_to_string(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let model = TrainedModel::load(&row.config, d, w, &json)?;
        let mut total = 0.0;
        for win in test {
            total += loss(model.predict(win)?, win.y_target);
        }
        let mse = total / test.len() as f64;
        let diff = (mse - row.test_mse).abs();
        worst = worst.max(diff);
        println!("{:<22} {:>6} {:>14.8e} {:>14.8e} {:>10.2e}", row.model, row.seed, row.test_mse, mse, diff);
    }
    if worst > RESCORE_TOLERANCE {
        return Err(Failure::data(format!("re-scored test MSE differs from the report by {worst:e}")));
    }
    Ok(())
}

fn print_suite(name: &str, cases: &[SuiteCase]) -> bool {
    let worst = cases.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error));
    let failed = cases.iter().filter(|c| !c.passed()).count();
    if let Some(c) = worst {
        println!(
            "{name:<5} cases={:<4} max_rel_error={:.3e} tolerance={:.0e} worst={} (d={} m={} k={} w={}, {}) failed={failed}",
            cases.len(),
            c.max_rel_error,
            c.tolerance,
            c.label,
            c.d,
            c.m,
            c.k,
            c.w,
            c.worst_tensor
        );
    }
    for c in cases.iter().filter(|c| !c.passed()) {
        log::info!("{name}: {} d={} m={} k={} w={} error {:.3e} in {}", c.label, c.d, c.m, c.k, c.w, c.max_rel_error, c.worst_tensor);
    }
    failed == 0
}

pub fn gradcheck(config: Option<&Path>, tanh: bool, relu: bool, inject_fault: bool) -> Result<(), Failure> {
    let settings = match config {
        Some(p) => RunConfig::load(p)?.gradcheck,
        None => Default::default(),
    };
    let mut ok = true;
    for (run, activation, name) in [(tanh, Activation::Tanh, "tanh"), (relu, Activation::Relu, "relu")] {
        if run {
            let cases = gradcheck_suite(activation, settings.cases, settings.seed, settings.step, inject_fault)?;
            ok &= print_suite(name, &cases);
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::gradcheck("analytic gradients disagree with finite differences"))
    }
}

fn bench_specs(cfg: &RunConfig, d: usize) -> Vec<VarnnSpec> {
    let specs: Vec<VarnnSpec> = cfg
        .models
        .iter()
        .filter_map(|m| match m {
            ModelConfig::Varnn(v) => Some(v.spec(d)),
            _ => None,
        })
        .collect();
    if !specs.is_empty() {
        return specs;
    }
    let base = base_varnn(&cfg.plan());
    Variant::ALL
        .into_iter()
        .map(|variant| {
            let mut v = base.clone();
            v.variant = variant;
            v.spec(d)
        })
        .collect()
}

fn time_forward(spec: &VarnnSpec, data: &PreparedData) -> Result<(f64, usize), Failure> {
    let model = Varnn::new(spec.clone(), &mut Rng::new(1))?;
    let windows = if data.windows.test.is_empty() { &data.windows.train } else { &data.windows.test };
    let (_, counted) = rollout_counted(spec, &model.params, &windows[0])?;
    let started = Instant::now();
    let mut sink = 0.0;
    for w in windows {
        sink += model.predict(w)?;
    }
    std::hint::black_box(sink);
    Ok((started.elapsed().as_secs_f64() * 1e9 / windows.len() as f64, counted))
}

pub fn bench(config: &Path, output: Option<&Path>, overwrite: bool, root: &Path) -> Result<(), Failure> {
    let cfg = RunConfig::load(config)?;
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir(None, root).join("bench"));
    check_clobber(&out, overwrite)?;
    let data = prepare(cfg.dataset.load()?, &cfg.pipeline)?;
    let (d, w) = (data.dataset.d(), data.window_len);
    let specs = bench_specs(&cfg, d);
    let rows = emit_complexity_report(&specs, w);

    let mut timings = String::from("model,d,m,k,w,counted_macs,ns_per_window\n");
    for spec in &specs {
        let (ns, counted) = time_forward(spec, &data)?;
        if counted != count_macs_per_window(spec, w) {
            return Err(Failure {
                status: Status::Internal,
                message: format!("{}: counted {counted} MACs, formula gives {}", spec.label(), count_macs_per_window(spec, w)),
            });
        }
        timings.push_str(&format!("{},{},{},{},{w},{counted},{ns:.1}\n", spec.label(), spec.d, spec.m, spec.k));
    }

    prepare_output_dir(&out, overwrite)?;
    fs::write(out.join(RESOLVED_CONFIG), cfg.to_toml()?)?;
    fs::write(out.join("complexity.csv"), complexity_csv(&rows))?;
    write_json(&out.join("complexity.json"), &rows)?;
    fs::write(out.join("timings.csv"), &timings)?;
    print!("{}", complexity_csv(&rows));
    println!("wrote {}", out.display());
    Ok(())
}

pub fn synth(config: Option<&Path>, preset: Option<(SyntheticPreset, u64)>, output: &Path, overwrite: bool) -> Result<(), Failure> {
    let spec = match (config, preset) {
        (Some(path), _) => match RunConfig::load(path)?.dataset {
            DatasetSource::Synthetic { spec } => spec,
            DatasetSource::Preset { preset, seed } => preset.spec(seed),
            DatasetSource::Csv { .. } => return Err(Failure::config("synth needs a synthetic dataset in the config")),
        },
        (None, Some((p, seed))) => p.spec(seed),
        (None, None) => return Err(Failure::config("pass --config or --preset with --seed")),
    };
    if output.exists() && !overwrite {
        return Err(Failure::config(format!("{} exists; pass --overwrite to replace it", output.display())));
    }
    if let Some(dir) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let data = varnn_core::data::generate_synthetic(&spec)?;
    write_csv(output, &data)?;
    let meta = serde_json::json!({
        "rows": data.len(),
        "features": data.feature_names,
        "target": data.target_name,
        "regime_boundaries": data.regime_boundaries,
        "spec": spec,
    });
    write_json(&output.with_extension("meta.json"), &meta)?;
    println!("wrote {} ({} rows, d = {})", output.display(), data.len(), data.d());
    Ok(())
}
