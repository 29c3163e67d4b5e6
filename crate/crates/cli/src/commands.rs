use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use collage_core::aesthetic::{HeuristicScorer, PatchScorer};
use collage_core::agent::Checkpoint;
use collage_core::config::RunConfig;
use collage_core::env::{autocrop, quick_init_baseline, write_trace, CollageEnv, Evaluator, MAX_IMAGES};
use collage_core::geometry::{image_files, render, AspectRatio, Canvas, ImageSet};
use collage_core::harness::{
    evaluate as run_evaluation, load_sets, run_episode, synthetic_sets, Decoding, Method, Trainer,
};
use collage_core::{CollageError, Result};

use crate::manifest::RunManifest;
use crate::Common;

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for item in &common.overrides {
        let (key, value) =
            item.split_once('=').ok_or_else(|| CollageError::Config(format!("override `{item}` is not KEY=VALUE")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn scorer_for(cfg: &RunConfig) -> Result<Arc<dyn PatchScorer>> {
    Ok(Arc::new(HeuristicScorer::new(cfg.env.scorer.feature_dim)?))
}

fn load_checkpoint(path: &Path, cfg: &RunConfig) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(path)?;
    let expected = 2 * cfg.env.scorer.feature_dim;
    if ckpt.params.config().obs_dim != expected {
        return Err(CollageError::Checkpoint(format!(
            "{} expects {}-dim observations, the configuration gives {expected}",
            path.display(),
            ckpt.params.config().obs_dim
        )));
    }
    Ok(ckpt)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => Ok(fs::create_dir_all(p)?),
        _ => Ok(()),
    }
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        return Ok(());
    }
    Err(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{} is not a directory", dir.display())).into())
}

/// Every image file of every set subdirectory, in load order.
fn set_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut subdirs: Vec<PathBuf> =
        fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    let mut files = Vec::new();
    for sub in subdirs {
        files.extend(image_files(&sub)?);
    }
    Ok(files)
}

pub fn generate(
    input: &Path,
    aspect: AspectRatio,
    out: &Path,
    checkpoint: Option<&Path>,
    size: u32,
    max_side: u32,
    common: &Common,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    cfg.env.target_aspect = aspect;
    cfg.validate()?;
    let output_canvas = Canvas::with_aspect(aspect, size)?;

    require_dir(input)?;
    let files = image_files(input)?;
    let images = ImageSet::load_dir(input, max_side)?;
    if images.len() < 2 || images.len() > MAX_IMAGES {
        return Err(CollageError::InvalidInput(format!(
            "{} holds {} images; need 2..={MAX_IMAGES}",
            input.display(),
            images.len()
        )));
    }
    let images = Arc::new(images);
    let scorer = scorer_for(&cfg)?;

    let (state, trace, evaluation) = match checkpoint {
        Some(path) => {
            let ckpt = load_checkpoint(path, &cfg)?;
            let mut env = CollageEnv::new(images.clone(), cfg.env.clone(), scorer)?;
            let outcome = run_episode(&ckpt.params, &mut env, Decoding::Greedy)?;
            (outcome.final_state, outcome.trace, outcome.final_eval)
        }
        None => {
            let ev = Evaluator::new(scorer, &cfg.env);
            let mut state = quick_init_baseline(&images, &cfg.env, &ev)?;
            if cfg.env.autocrop {
                state = autocrop(&state, &images, &ev, &cfg.env)?.state;
            }
            let evaluation = ev.evaluate(&state, &images)?;
            (state, Vec::new(), evaluation)
        }
    };

    ensure_parent(out)?;
    render(&state, &images, output_canvas)?.save(out)?;
    let trace_path = out.with_extension("trace.jsonl");
    write_trace(fs::File::create(&trace_path)?, &trace)?;

    let mut manifest = RunManifest::new("generate", &cfg, &files)?;
    manifest.output(out);
    manifest.output(&trace_path);
    manifest.metrics = Some(serde_json::json!({
        "width": output_canvas.width,
        "height": output_canvas.height,
        "steps": trace.len(),
        "evaluation": evaluation,
        "layout": state.placements,
    }));
    manifest.write(&out.with_extension("manifest.json"))
}

pub fn train(
    input: &Path,
    out: &Path,
    checkpoint: Option<&Path>,
    max_epoch: Option<u32>,
    max_side: u32,
    common: &Common,
) -> Result<()> {
    let mut cfg = load_config(common)?;
    if let Some(m) = max_epoch {
        cfg.train.max_epoch = m;
        cfg.train.sign_reward_epochs = cfg.train.sign_reward_epochs.min(m);
    }
    cfg.validate()?;
    require_dir(input)?;
    let sets = load_sets(input, max_side)?;
    let files = set_files(input)?;
    let scorer = scorer_for(&cfg)?;
    let hash = cfg.hash();

    let mut trainer = match checkpoint {
        Some(path) => {
            let ckpt = load_checkpoint(path, &cfg)?;
            Trainer::resume(ckpt, cfg.train.clone(), cfg.env.clone(), scorer, hash)?
        }
        None => Trainer::new(cfg.train.clone(), cfg.env.clone(), scorer, hash)?,
    };
    let first_epoch = trainer.epoch + 1;
    fs::create_dir_all(out)?;
    let images: Vec<_> = sets.iter().map(|s| s.images.clone()).collect();
    trainer.train(&images, Some(out))?;

    let mut manifest = RunManifest::new("train", &cfg, &files)?;
    for e in first_epoch..=cfg.train.max_epoch {
        if e % cfg.train.eval_every == 0 {
            manifest.output(&out.join(format!("epoch_{e:04}.ckpt")));
        }
    }
    manifest.output(&out.join("agent.ckpt"));
    let csv_path = out.join("run_log.csv");
    trainer.log.write_csv(fs::File::create(&csv_path)?)?;
    manifest.output(&csv_path);
    let json_path = out.join("run_log.json");
    trainer.log.write_json(fs::File::create(&json_path)?)?;
    manifest.output(&json_path);
    let timing_path = out.join("timing.csv");
    trainer.log.write_timing_csv(fs::File::create(&timing_path)?)?;
    manifest.output(&timing_path);
    manifest.metrics = Some(serde_json::json!({
        "completed_epochs": trainer.log.len(),
        "epochs_run": trainer.epoch + 1 - first_epoch,
    }));
    manifest.write(&out.join("manifest.json"))
}

pub fn evaluate(
    input: &Path,
    out: &Path,
    checkpoint: Option<&Path>,
    mut methods: Vec<Method>,
    max_side: u32,
    common: &Common,
) -> Result<()> {
    let cfg = load_config(common)?;
    cfg.validate()?;
    if methods.is_empty() {
        methods = if checkpoint.is_some() { Method::ALL.to_vec() } else { vec![Method::Baseline] };
    }
    require_dir(input)?;
    let sets = load_sets(input, max_side)?;
    let files = set_files(input)?;
    let scorer = scorer_for(&cfg)?;
    let params = checkpoint.map(|p| load_checkpoint(p, &cfg)).transpose()?.map(|c| c.params);
    let table = run_evaluation(params.as_ref(), &methods, &sets, &cfg.env, &scorer)?;

    ensure_parent(out)?;
    table.write_csv(fs::File::create(out)?)?;
    let sets_path = out.with_extension("sets.csv");
    table.write_sets_csv(fs::File::create(&sets_path)?)?;

    let mut inputs = files;
    if let Some(p) = checkpoint {
        inputs.push(p.to_path_buf());
    }
    let mut manifest = RunManifest::new("evaluate", &cfg, &inputs)?;
    manifest.output(out);
    manifest.output(&sets_path);
    manifest.write(&out.with_extension("manifest.json"))
}

pub fn synth(out: &Path, count: usize, sizes: &[usize], seed: u64) -> Result<()> {
    if let Some(&n) = sizes.iter().find(|&&n| !(2..=MAX_IMAGES).contains(&n)) {
        return Err(CollageError::InvalidInput(format!("set size {n} outside 2..={MAX_IMAGES}")));
    }
    for set in synthetic_sets(seed, count, sizes)? {
        let dir = out.join(&set.name);
        fs::create_dir_all(&dir)?;
        for (k, img) in set.images.images.iter().enumerate() {
            img.save(dir.join(format!("{k:02}.png")))?;
        }
    }
    Ok(())
}
