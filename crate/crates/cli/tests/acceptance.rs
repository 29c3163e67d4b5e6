//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! for its criterion (on stderr, outside the test harness capture) before
//! asserting.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use collage_core::aesthetic::{
    aesthetic_metric, attention_weight, fuse, FnScorer, HeuristicScorer, PatchProposal, PatchScore, PatchScorer,
    PatchView, ScorerConfig,
};
use collage_core::agent::{a2c_loss_with_advantages, AgentConfig, AgentParams, Gradients};
use collage_core::env::{
    apply_crop, autocrop, crop_candidates, Action, CollageEnv, EnvConfig, Evaluator, ANGLE_OPTIONS, DX_OPTIONS,
    DY_OPTIONS, LAYER_OPTIONS,
};
use collage_core::geometry::{
    apply_detail_action, apply_switch, blank_area, rasterize, AspectRatio, Canvas, CollageState, ImagePlacement,
    ImageSet, Phase, Rect, Size,
};
use collage_core::harness::{evaluate, run_episode, synthetic_sets, Decoding, Method, TrainConfig, Trainer};
use collage_core::synth::synthetic_set;
use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: String) {
    let line = format!("\n{id} {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    // The test harness captures `io::stderr`; the device file bypasses it.
    match std::fs::OpenOptions::new().write(true).open("/dev/stderr") {
        Ok(mut f) => drop(f.write_all(line.as_bytes())),
        Err(_) => drop(std::io::stderr().write_all(line.as_bytes())),
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

// ---------------------------------------------------------------- A1

fn random_state(rng: &mut ChaCha8Rng) -> CollageState {
    let (w, h) = (rng.gen_range(64..=128u32), rng.gen_range(64..=128u32));
    let n = rng.gen_range(1..=3usize);
    let mut layers: Vec<u32> = (0..n as u32).collect();
    for k in (1..n).rev() {
        layers.swap(k, rng.gen_range(0..=k));
    }
    let placements = (0..n)
        .map(|k| ImagePlacement {
            image_id: k,
            center_x: rng.gen_range(-10.0..w as f64 + 10.0),
            center_y: rng.gen_range(-10.0..h as f64 + 10.0),
            angle_deg: rng.gen_range(-45.0..=45.0),
            layer: layers[k],
            width: rng.gen_range(2.0..100.0),
            height: rng.gen_range(2.0..100.0),
        })
        .collect();
    CollageState {
        canvas: Canvas::new(w, h).unwrap(),
        placements,
        order: (0..n).collect(),
        sources: vec![Size { width: 8, height: 8 }; n],
        step_index: 0,
        phase: Phase::Layout,
    }
}

// Pixel center in the image's own frame, edges half-open.
fn covers(p: &ImagePlacement, x: u32, y: u32) -> bool {
    let (px, py) = (x as f64 + 0.5 - p.center_x, y as f64 + 0.5 - p.center_y);
    let t = p.angle_deg.to_radians();
    let u = px * t.cos() + py * t.sin() + p.width / 2.0;
    let v = py * t.cos() - px * t.sin() + p.height / 2.0;
    (0.0..p.width).contains(&u) && (0.0..p.height).contains(&v)
}

#[test]
fn a1_blank_area_matches_pixel_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let images =
        ImageSet::new((0..3).map(|k| RgbImage::from_pixel(8, 8, Rgb([40 * k + 10, 90, 0]))).collect()).unwrap();
    let mut mismatches = 0;
    for _ in 0..200 {
        let state = random_state(&mut rng);
        let raster = rasterize(&state, &images).unwrap();
        let blank = blank_area(&raster);
        let mut expected = 0u64;
        for y in 0..raster.height {
            for x in 0..raster.width {
                let hit = state.placements.iter().any(|p| covers(p, x, y));
                expected += !hit as u64;
                mismatches += (raster.occupancy[raster.index(x, y)] != hit) as usize;
            }
        }
        let area = (raster.width * raster.height) as f64;
        mismatches += (blank.pixels != expected || blank.fraction != expected as f64 / area) as usize;
    }
    let elapsed = secs(start);
    let pass = mismatches == 0 && elapsed < 30.0;
    report("A1", pass, format!("200 random states, {mismatches} mismatches, {elapsed:.1}s"));
    assert!(pass);
}

// ---------------------------------------------------------------- A2

fn proposal(rect: Rect, score: f64, feature: Vec<f64>) -> PatchProposal {
    PatchProposal { score, feature, ..PatchProposal::new(rect) }
}

#[test]
fn a2_fusion_worked_examples_and_gate() {
    let cfg = ScorerConfig { eta: 0.6, tau: 5.0, feature_dim: 2, ..ScorerConfig::default() };
    let mut errors = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-9 {
            errors.push(format!("{name}: {got} != {want}"));
        }
    };

    let centered = proposal(Rect::new(10, 10, 80, 80), 3.0, vec![1.0, 0.0]);
    check("centered alpha", attention_weight(&centered, 100, 100, true), 0.64);
    let off = proposal(Rect::new(0, 45, 50, 60), 3.0, vec![0.0, 1.0]);
    check("off-center alpha", attention_weight(&off, 100, 100, true), 0.15);
    check("off-center alpha without attention", attention_weight(&off, 100, 100, false), 0.3);

    let a = proposal(Rect::new(0, 0, 70, 100), 6.0, vec![1.0, 2.0]);
    let b = proposal(Rect::new(10, 0, 90, 100), 4.0, vec![3.0, -1.0]);
    let pair = [a.clone(), b.clone(), off.clone()];
    check("two-proposal metric", aesthetic_metric(&pair, 100, 100, &cfg), 7.8);
    let f = fuse(&pair, 100, 100, &cfg, 0.0).unwrap();
    let (wa, wb) = (attention_weight(&a, 100, 100, true), attention_weight(&b, 100, 100, true));
    check("fused[0]", f.fused_feature[0], (wa * 1.0 + wb * 3.0) / (wa + wb));
    check("fused[1]", f.fused_feature[1], (wa * 2.0 + -wb) / (wa + wb));
    check("fused metric", f.aesthetic_score, 7.8);
    check("count", f.proposal_count as f64, 1.0);

    // Gate: a lone proposal contributes iff its area fraction exceeds eta.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 10_000;
    let mut wrong = 0;
    for k in 0..trials {
        let (w, h) = (rng.gen_range(64..=200u32), rng.gen_range(64..=200u32));
        let (pw, ph) = (rng.gen_range(1..=w), rng.gen_range(1..=h));
        let frac = (pw * ph) as f64 / (w * h) as f64;
        // Every fourth trial sits exactly on the gate.
        let eta = if k % 4 == 0 { frac } else { rng.gen_range(0.0..1.0) };
        let cfg = ScorerConfig { eta, feature_dim: 1, ..ScorerConfig::default() };
        let p = proposal(Rect::new(rng.gen_range(0..=(w - pw) as i32), 0, pw, ph), 2.0, vec![1.0]);
        let f = fuse(std::slice::from_ref(&p), w, h, &cfg, 0.0).unwrap();
        let included = f.fused_feature[0] != 0.0 || f.aesthetic_score != 0.0;
        wrong += (included != (frac > eta)) as usize;
    }
    let pass = errors.is_empty() && wrong == 0;
    report(
        "A2",
        pass,
        format!(
            "worked values {}; gate wrong in {wrong}/{trials} randomized trials",
            if errors.is_empty() { "match to 1e-9".to_string() } else { errors.join("; ") }
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A3

fn random_action(rng: &mut ChaCha8Rng, phase: Phase, n: usize) -> Action {
    match phase {
        Phase::Layout if rng.gen_bool(0.25) => Action::Terminate,
        Phase::Layout => {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            Action::Switch(i.min(j), i.max(j))
        }
        Phase::Detail => Action::Detail {
            image: rng.gen_range(0..n),
            dx: rng.gen_range(0..DX_OPTIONS.len()),
            dy: rng.gen_range(0..DY_OPTIONS.len()),
            layer: rng.gen_range(0..LAYER_OPTIONS.len()),
            angle: rng.gen_range(0..ANGLE_OPTIONS.len()),
        },
    }
}

#[test]
fn a3_reward_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_telescope, mut worst_sum, mut penalty_off, mut episodes) = (0.0f64, 0.0f64, 0usize, 0usize);
    for max_step in 2..=16u32 {
        for rep in 0..2u64 {
            let n = rng.gen_range(2..=5);
            let set = synthetic_set(100 * max_step as u64 + rep, n).unwrap();
            let cfg = EnvConfig {
                canvas_long_side: 64,
                autocrop: false,
                max_step,
                layout_budget: rng.gen_range(1..max_step),
                ..EnvConfig::default()
            };
            let mut env = CollageEnv::new(Arc::new(set), cfg, Arc::new(HeuristicScorer::default())).unwrap();
            let s0 = env.score();
            let (mut total, mut penalty, mut cumulative) = (0.0, 0.0, 0.0);
            while !env.is_done() {
                let a = random_action(&mut rng, env.state().phase, n);
                let (_, r) = env.step(a).unwrap();
                total += r.raw_reward;
                penalty += r.penalty;
                cumulative = r.cumulative_penalty;
            }
            let t = max_step;
            let closed = 0.01 * (t * (t + 1) / 2) as f64;
            worst_telescope = worst_telescope.max((total - (env.score() - s0)).abs());
            worst_sum = worst_sum.max((penalty - closed).abs());
            penalty_off += (cumulative != closed) as usize;
            episodes += 1;
        }
    }
    let pass = worst_telescope < 1e-9 && penalty_off == 0 && worst_sum < 1e-12;
    report(
        "A3",
        pass,
        format!(
            "{episodes} episodes (T = 2..16): max telescoping error {worst_telescope:.2e}; cumulative penalty \
             differs from 0.01*T(T+1)/2 in {penalty_off}, summed step penalties within {worst_sum:.1e}"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A4

#[test]
fn a4_gradient_check() {
    let start = Instant::now();
    let cfg = AgentConfig { obs_dim: 16, hidden: 8, lstm_layers: 4, max_images: 4 };
    // Losses reach ~30 here, so a smaller step drowns in cancellation.
    let (gamma, beta, h) = (0.99, 0.05, 1e-5);
    let (mut worst, mut worst_abs) = (0.0f64, 0.0f64);
    let mut checked = 0usize;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = AgentParams::new(cfg.clone(), seed).unwrap();
        for v in &mut params.values {
            *v += rng.gen_range(-0.1..0.1);
        }
        // Real mixed-phase episodes: layout switches, terminate, details.
        let n = rng.gen_range(2..=4);
        let images = ImageSet::new(
            (0..n).map(|_| RgbImage::from_pixel(rng.gen_range(20..60), rng.gen_range(20..60), Rgb(RED))).collect(),
        )
        .unwrap();
        let env_cfg = EnvConfig {
            max_step: 6,
            layout_budget: 3,
            canvas_long_side: 64,
            autocrop: false,
            scorer: ScorerConfig { scales: vec![0.8, 1.0], tau: 2.0, feature_dim: 8, ..ScorerConfig::default() },
            ..EnvConfig::default()
        };
        let mut env = CollageEnv::new(Arc::new(images), env_cfg, red_scorer()).unwrap();
        let episodes: Vec<_> =
            (0..2).map(|_| run_episode(&params, &mut env, Decoding::Sample(&mut rng)).unwrap().rollout).collect();

        let mut grads = Gradients::zeros_like(&params);
        let (_, adv) = a2c_loss_with_advantages(&params, &episodes, gamma, beta, None, Some(&mut grads)).unwrap();
        let loss =
            |q: &AgentParams| a2c_loss_with_advantages(q, &episodes, gamma, beta, Some(&adv), None).unwrap().0.total;
        for k in 0..params.len() {
            let mut up = params.clone();
            up.values[k] += h;
            let mut down = params.clone();
            down.values[k] -= h;
            let fd = (loss(&up) - loss(&down)) / (2.0 * h);
            let an = grads.0[k];
            let err = ((fd - an).abs() - 1e-8).max(0.0) / fd.abs().max(an.abs()).max(1e-12);
            worst = worst.max(err);
            worst_abs = worst_abs.max((fd - an).abs());
            checked += 1;
        }
    }
    let elapsed = secs(start);
    let pass = worst < 1e-4 && elapsed < 60.0;
    report(
        "A4",
        pass,
        format!(
            "{checked} parameters over 5 seeds, max relative error {worst:.2e} \
             (1e-8 absolute slack, max |fd - analytic| {worst_abs:.2e}), {elapsed:.1}s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A5

const RED: [u8; 3] = [220, 30, 30];
const BLUE: [u8; 3] = [30, 30, 220];

/// Scores a window by the share of its right half showing the red photo.
fn red_scorer() -> Arc<dyn PatchScorer> {
    Arc::new(FnScorer::new(8, |patch: &PatchView<'_>| {
        let (mut red, mut blue, mut covered) = (0usize, 0usize, 0usize);
        for y in 0..patch.height() {
            for x in 0..patch.width() {
                let (px, c) = patch.get(x, y);
                covered += c as usize;
                red += (c && px == RED && 2 * x >= patch.width()) as usize;
                blue += (c && px == BLUE) as usize;
            }
        }
        let n = patch.pixel_count() as f64;
        let (r, b, c) = (red as f64 / n, blue as f64 / n, covered as f64 / n);
        Ok(PatchScore { score: 10.0 * r, feature: vec![r, b, c, r * r, b * b, r * b, 1.0 - c, 1.0] })
    }))
}

fn toy_setup() -> (EnvConfig, Arc<ImageSet>) {
    let cfg = EnvConfig {
        max_step: 3,
        layout_budget: 1,
        canvas_long_side: 64,
        autocrop: false,
        target_aspect: AspectRatio::new(1, 1).unwrap(),
        scorer: ScorerConfig {
            scales: vec![0.8, 1.0],
            aspect_ratios: vec![AspectRatio::new(1, 1).unwrap()],
            tau: 2.0,
            feature_dim: 8,
            ..ScorerConfig::default()
        },
        ..EnvConfig::default()
    };
    let images =
        ImageSet::new(vec![RgbImage::from_pixel(40, 30, Rgb(RED)), RgbImage::from_pixel(30, 40, Rgb(BLUE))]).unwrap();
    (cfg, Arc::new(images))
}

fn detail_actions(n: usize) -> Vec<Action> {
    let mut out = Vec::new();
    for image in 0..n {
        for dx in 0..DX_OPTIONS.len() {
            for dy in 0..DY_OPTIONS.len() {
                for layer in 0..LAYER_OPTIONS.len() {
                    for angle in 0..ANGLE_OPTIONS.len() {
                        out.push(Action::Detail { image, dx, dy, layer, angle });
                    }
                }
            }
        }
    }
    out
}

fn oracle_step(s: &CollageState, a: Action) -> CollageState {
    match a {
        Action::Switch(i, j) => apply_switch(s, i, j).unwrap(),
        Action::Terminate => {
            let mut n = s.clone();
            n.step_index += 1;
            n
        }
        Action::Detail { image, dx, dy, layer, angle } => {
            apply_detail_action(s, image, DX_OPTIONS[dx], DY_OPTIONS[dy], LAYER_OPTIONS[layer], ANGLE_OPTIONS[angle])
                .unwrap()
        }
    }
}

/// Exhaustive search over every 3-step action sequence. Rewards telescope,
/// so a sequence's return is the final score minus the initial score minus
/// the fixed step penalties. Returns (optimal return, uniform-random mean
/// return, an optimal sequence, number of sequences).
fn toy_oracle(cfg: &EnvConfig, images: &ImageSet, scorer: Arc<dyn PatchScorer>) -> (f64, f64, Vec<Action>, usize) {
    let ev = Evaluator::new(scorer, cfg);
    let score = |s: &CollageState| ev.score(&ev.assess(s, images).unwrap());
    let s0 = CollageState::initial(cfg.canvas().unwrap(), images.sizes()).unwrap();
    let base = score(&s0);
    let penalty = cfg.step_penalty * (1..=cfg.max_step).sum::<u32>() as f64;
    let details = detail_actions(images.len());
    let (mut best, mut best_seq, mut sum, mut count) = (f64::NEG_INFINITY, Vec::new(), 0.0, 0usize);
    for first in [Action::Switch(0, 1), Action::Terminate] {
        let mut s1 = oracle_step(&s0, first);
        s1.phase = Phase::Detail;
        for &a2 in &details {
            let s2 = oracle_step(&s1, a2);
            for &a3 in &details {
                let v = score(&oracle_step(&s2, a3));
                sum += v;
                count += 1;
                if v > best {
                    best = v;
                    best_seq = vec![first, a2, a3];
                }
            }
        }
    }
    (best - base - penalty, sum / count as f64 - base - penalty, best_seq, count)
}

#[test]
fn a5_toy_task_learning_signal() {
    let start = Instant::now();
    let (cfg, images) = toy_setup();
    let scorer = red_scorer();
    let (opt, random, seq, n) = toy_oracle(&cfg, &images, scorer.clone());

    let mut env = CollageEnv::new(images.clone(), cfg.clone(), scorer.clone()).unwrap();
    let replay: f64 = seq.iter().map(|&a| env.step(a).unwrap().1.reward).sum();
    assert!((replay - opt).abs() < 1e-9, "oracle {opt} vs env replay {replay}");

    let train = TrainConfig {
        max_epoch: 50,
        episodes_per_epoch: 10,
        batch_size: 5,
        sign_reward_epochs: 0,
        lr: 1e-2,
        entropy_weight: 0.01,
        hidden: 32,
        lstm_layers: 1,
        seed: 0,
        ..TrainConfig::default()
    };
    let episodes = train.max_epoch as usize * train.episodes_per_epoch;
    let mut trainer = Trainer::new(train, cfg.clone(), scorer.clone(), String::new()).unwrap();
    let untrained: AgentParams = trainer.params.clone();
    trainer.train(std::slice::from_ref(&images), None).unwrap();
    let greedy = |p: &AgentParams| {
        let mut env = CollageEnv::new(images.clone(), cfg.clone(), scorer.clone()).unwrap();
        run_episode(p, &mut env, Decoding::Greedy).unwrap()
    };
    let before = greedy(&untrained).total_return();
    let out = greedy(&trainer.params);
    let got = out.total_return();
    let target = opt - 0.1 * (opt - random);
    let pass = got >= target && episodes <= 500;
    report(
        "A5",
        pass,
        format!(
            "toy oracle over {n} sequences: optimal {opt:.4}, random mean {random:.4}; greedy return {got:.4} \
             (untrained {before:.4}) after {episodes} episodes, target >= {target:.4}, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A6

#[test]
fn a6_autocrop_is_exhaustive_optimum() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = EnvConfig { canvas_long_side: 64, ..EnvConfig::default() };
    let ev = Evaluator::new(Arc::new(HeuristicScorer::default()), &cfg);
    let mut mismatches = 0;
    let mut candidates = 0;
    for k in 0..100u64 {
        let n = rng.gen_range(2..=4);
        let images = synthetic_set(600 + k, n).unwrap();
        let mut s = CollageState::initial(cfg.canvas().unwrap(), images.sizes()).unwrap();
        for _ in 0..rng.gen_range(0..3) {
            if let Action::Switch(i, j) = random_action(&mut rng, Phase::Layout, n) {
                s = apply_switch(&s, i, j).unwrap();
            }
        }
        s.phase = Phase::Detail;
        for _ in 0..rng.gen_range(0..4) {
            s = oracle_step(&s, random_action(&mut rng, Phase::Detail, n));
        }

        let chosen = autocrop(&s, &images, &ev, &cfg).unwrap();
        let mut scored: Vec<_> = crop_candidates(&s, &cfg)
            .into_iter()
            .map(|c| (ev.score(&ev.assess(&apply_crop(&s, &c), &images).unwrap()), c))
            .collect();
        candidates += scored.len();
        let max = scored.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        scored.retain(|(v, _)| *v == max);
        scored.sort_by(|(_, a), (_, b)| b.scale.total_cmp(&a.scale).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
        mismatches += (chosen.score != max || chosen.candidate != scored[0].1) as usize;
    }
    let pass = mismatches == 0;
    report(
        "A6",
        pass,
        format!("100 random states, {candidates} candidates scored, {mismatches} mismatches, {:.1}s", secs(start)),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A7

#[test]
fn a7_agent_beats_baseline_and_attention_helps() {
    let start = Instant::now();
    let scorer: Arc<dyn PatchScorer> = Arc::new(HeuristicScorer::default());
    let env = EnvConfig { canvas_long_side: 64, crop_offsets: 2, ..EnvConfig::default() };
    let train = TrainConfig {
        max_epoch: 50,
        episodes_per_epoch: 16,
        batch_size: 8,
        sign_reward_epochs: 10,
        lr: 3e-3,
        hidden: 32,
        lstm_layers: 1,
        ..TrainConfig::default()
    };
    let pool: Vec<_> = synthetic_sets(7, 20, &[3, 4, 6, 8]).unwrap().into_iter().map(|s| s.images).collect();
    let test_sets = synthetic_sets(0, 20, &[3, 4, 6, 8]).unwrap();

    let fit = |env: &EnvConfig| {
        let mut t = Trainer::new(train.clone(), env.clone(), scorer.clone(), String::new()).unwrap();
        t.train(&pool, None).unwrap();
        t.params
    };
    let with_attention = fit(&env);
    let no_attention_env = Method::AgentNoAttention.env_config(&env);
    let without_attention = fit(&no_attention_env);

    let baseline = evaluate(None, &[Method::Baseline], &test_sets, &env, &scorer).unwrap();
    let agent = evaluate(Some(&with_attention), &[Method::Agent], &test_sets, &env, &scorer).unwrap();
    let ablated = evaluate(Some(&without_attention), &[Method::Agent], &test_sets, &no_attention_env, &scorer).unwrap();
    let b = baseline.mean_aesthetic(Method::Baseline).unwrap();
    let a = agent.mean_aesthetic(Method::Agent).unwrap();
    let n = ablated.mean_aesthetic(Method::Agent).unwrap();
    let pass = a > b && a >= n;
    report(
        "A7",
        pass,
        format!(
            "mean aesthetic score over 20 held-out synthetic sets: agent {a:.3}, baseline {b:.3}, \
             agent without attention {n:.3}; {:.0}s",
            secs(start)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- A8

fn collage(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_collage")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn a8_generate_honours_aspect_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = collage(&["synth", "--out", path(&data), "--sets", "1", "--sizes", "5", "--seed", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let set = data.join("synth_000");
    let mut lines = Vec::new();
    let mut pass = true;
    for (w, h) in [(1u32, 1u32), (16, 9), (4, 3), (3, 4)] {
        let png = tmp.path().join(format!("c_{w}x{h}.png"));
        let aspect = format!("{w}:{h}");
        let out =
            collage(&["generate", "--input", path(&set), "--aspect", &aspect, "--out", path(&png), "--size", "512"]);
        if !out.status.success() {
            pass = false;
            lines.push(format!("{aspect} exit {:?}", out.status.code()));
            continue;
        }
        let img = image::open(&png).unwrap();
        let (iw, ih) = (img.width() as f64, img.height() as f64);
        // Distance from the nearest exact-ratio size, in pixels.
        let off = (iw - ih * w as f64 / h as f64).abs().min((ih - iw * h as f64 / w as f64).abs());
        pass &= off <= 1.0;
        lines.push(format!("{aspect} -> {}x{}", img.width(), img.height()));
    }
    report("A8", pass, lines.join(", "));
    assert!(pass);
}
