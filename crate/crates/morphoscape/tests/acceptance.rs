//! Acceptance criteria, one PASS/FAIL line each.
//!
//! The desk-scale pipeline (sweep, training study, co-optimization) is run
//! once into `$CARGO_TARGET_TMPDIR/acceptance-desk` (or
//! `$MORPHOSCAPE_ACCEPTANCE_OUT`) and reused through `--resume` stamps on
//! later runs. The first run takes on the order of an hour per core.
//!
//! Criterion 9 is optional and only runs with `MORPHOSCAPE_PAPER_CHECK=1`;
//! its result is printed but never fails the suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use morphoscape::cooptimize::{cmd_coopt, trend, CooptSummary};
use morphoscape::sweep::cmd_sweep;
use morphoscape::train::{cmd_train, TrainSummary, TRAINING_FILE};
use morphoscape::{RunConfig, Scale};
use morphoscape_core::dynamics::step;
use morphoscape_core::landscape::{
    ci_resistance, design_metrics, learnability, mirror_partner, overlap, DesignMetrics, OverlapMatrix,
    SuccessMatrix,
};
use morphoscape_core::rng::unit_rng;
use morphoscape_core::stats::{dtw, mann_whitney_u, pearson};
use morphoscape_core::{default_environments, simulate, Design, Policy, Pose, SimConfig, Vec2};
use rand::Rng;

struct Line {
    id: u32,
    name: &'static str,
    /// `None` when skipped.
    pass: Option<bool>,
    detail: String,
}

fn line(id: u32, name: &'static str, pass: bool, detail: String) -> Line {
    Line { id, name, pass: Some(pass), detail }
}

// ---------------------------------------------------------------- criterion 1

/// Independent scalar Euler integrator using `std` trigonometry.
fn reference_success(d: &Design, p: &Policy, start: &Pose, dt: f64, max_steps: usize) -> (bool, f64) {
    let [l1x, l1y, l2x, l2y] = d.coords();
    let (mut x, mut y, mut a) = (start.x, start.y, start.alpha);
    let mut best = x.hypot(y);
    if best <= 0.075 {
        return (true, best);
    }
    for _ in 0..max_steps {
        let (s, c) = a.sin_cos();
        let reading = |lx: f64, ly: f64| {
            let dist = (x + c * lx - s * ly).hypot(y + s * lx + c * ly).max(1e-6);
            1.0 / (dist * dist)
        };
        let (s1, s2) = (reading(l1x, l1y), reading(l2x, l2y));
        let v = 0.5 * (p.w1 * s1 + p.w2 * s2);
        x += dt * v * c;
        y += dt * v * s;
        a += dt * (p.w1 * s1 - p.w2 * s2);
        best = best.min(x.hypot(y));
        if best <= 0.075 {
            return (true, best);
        }
    }
    (false, best)
}

fn criterion_1() -> Line {
    let cfg = SimConfig::desk();
    let envs = default_environments();
    let mut rng = unit_rng(2024, 1);
    let mut agree = 0;
    let mut same_dt = 0;
    let mut successes = 0;
    for _ in 0..100 {
        let d = Design::from_coords([(); 4].map(|_| rng.gen_range(-0.5..=0.5)));
        let p = Policy::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)).unwrap();
        let start = envs.start_poses[rng.gen_range(0..4)];
        let euler = simulate(&d, &p, &start, &cfg).unwrap();
        let (fine, _) = reference_success(&d, &p, &start, cfg.dt / 10.0, cfg.max_steps * 10);
        let (coarse, _) = reference_success(&d, &p, &start, cfg.dt, cfg.max_steps);
        agree += usize::from(euler.success == fine);
        same_dt += usize::from(euler.success == coarse);
        successes += usize::from(euler.success);
    }

    // Symmetric robots on the x-axis: y and heading stay zero at every step.
    let mut worst: f64 = 0.0;
    for (lx, ly, w, x0) in [(0.5, 0.5, 0.6, 4.0), (-0.25, 0.1, -0.8, -3.0), (0.3, 0.45, 1.0, -5.5), (0.0, 0.25, 0.2, 2.0)] {
        let ell = Vec2::new(lx, ly);
        let d = Design::new(ell, ell.mirror_y()).unwrap();
        let p = Policy::new(w, w).unwrap();
        let mut pose = Pose::new(x0, 0.0, 0.0);
        for _ in 0..cfg.max_steps {
            pose = step(&pose, &d, &p, cfg.dt, cfg.distance_floor);
            worst = worst.max(pose.y.abs()).max(pose.alpha.abs());
        }
    }
    line(
        1,
        "dynamics oracle",
        agree >= 95 && worst <= 1e-9,
        format!(
            "{agree}/100 agree with dt/10 reference ({same_dt}/100 with same-dt reference, {successes} successes); \
             mirror max |y|,|alpha| = {worst:.1e}"
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    // Hand counts: (rows, K, generalists, solved-any).
    let fixtures: [(&[&[u8]], usize, usize, usize); 4] = [
        (&[&[4, 0, 1], &[2, 4, 0], &[0, 3, 4]], 4, 3, 6),
        (&[&[0, 0], &[0, 0]], 4, 0, 0),
        (&[&[2, 2], &[2, 2]], 2, 4, 4),
        (&[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 3, 0], &[0, 0, 0, 0]], 3, 1, 3),
    ];
    for (rows, k, full, solved) in fixtures {
        let o = OverlapMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let n2 = (rows.len() * rows.len()) as f64;
        let want_ml = full as f64 / n2;
        let want_ci = if solved == 0 { 0.0 } else { full as f64 / solved as f64 };
        let (ml, ci) = (learnability(&o, k), ci_resistance(&o, k));
        if ml != want_ml || ci != want_ci {
            ok = false;
            notes.push(format!("{rows:?}: got ({ml}, {ci}) want ({want_ml}, {want_ci})"));
        }
    }
    let mut rng = unit_rng(2024, 2);
    let mut cells = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=6);
        let bits: Vec<Vec<bool>> = (0..k).map(|_| (0..100).map(|_| rng.gen_bool(0.4)).collect()).collect();
        let ms: Vec<SuccessMatrix> =
            bits.iter().enumerate().map(|(e, b)| SuccessMatrix::from_fn(10, e, |i, j| b[i * 10 + j])).collect();
        let o = overlap(&ms).unwrap();
        for c in 0..100 {
            let mut count = 0u8;
            for b in &bits {
                if b[c] {
                    count += 1;
                }
            }
            ok &= o.get(c / 10, c % 10) == count;
            cells += 1;
        }
    }
    notes.insert(0, format!("4 hand fixtures incl. null case, {cells} random cells recounted"));
    line(2, "metric oracles", ok, notes.join("; "))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Line {
    let mut fails = Vec::new();
    let mut check = |what: &str, ok: bool| {
        if !ok {
            fails.push(what.to_string());
        }
    };

    let xs = [1.0, 2.0, 3.5, 4.0, 7.0];
    let line_fit: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    let r = pearson(&xs, &line_fit).unwrap();
    check("pearson 2x+1", r.r == 1.0 && r.p < 1e-12);
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    check("pearson -x", pearson(&xs, &neg).unwrap().r == -1.0);
    // n=10: Sx=55 Sy=40 Sxx=385 Syy=190 Sxy=246 -> r = 260 / sqrt(825 * 300).
    let x10 = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    let y10 = [2.0, 1.0, 4.0, 3.0, 7.0, 5.0, 4.0, 6.0, 3.0, 5.0];
    let rep = pearson(&x10, &y10).unwrap();
    let want = 260.0 / (825.0f64 * 300.0).sqrt();
    // t = 1.7338 on 8 df lies between the 0.90 (1.397) and 0.95 (1.860)
    // quantiles of the t table, so the two-sided p is in (0.10, 0.20).
    check("pearson 10-point r", (rep.r - want).abs() < 1e-14);
    check("pearson 10-point p", rep.p > 0.10 && rep.p < 0.20 && (rep.p - 0.121_178).abs() < 1e-5);

    let a = [1.0, 2.0, 3.0, 4.0];
    let same = mann_whitney_u(&a, &a).unwrap();
    check("U identical", same.u == 8.0 && same.p == 1.0);
    check("U separated", mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().u == 0.0);
    // Pooled ranks: a = (1, 2, 4) holds ranks 1, 2, 4 -> R = 7, U = 7 - 3*4/2 = 1;
    // mu = 4.5, sigma^2 = 3*3*7/12 = 5.25, continuity-corrected z = 3 / sqrt(5.25).
    let hand = mann_whitney_u(&[1.0, 2.0, 4.0], &[3.0, 5.0, 6.0]).unwrap();
    let z: f64 = 3.0 / 5.25f64.sqrt();
    check("U hand table", hand.u == 1.0 && (hand.p - 0.190_430).abs() < 1e-5 && z > 1.309 && z < 1.310);

    check("dtw a=a", dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() == 0.0);
    check("dtw DP table", dtw(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]).unwrap() == 0.0);
    check("dtw single", dtw(&[0.0], &[5.0]).unwrap() == 5.0);
    line(
        8,
        "statistical fixtures",
        fails.is_empty(),
        if fails.is_empty() { "pearson 4/4, U 3/3, dtw 3/3".into() } else { format!("failed: {fails:?}") },
    )
}

// ---------------------------------------------------------- desk pipeline

struct Desk {
    metrics: Vec<DesignMetrics>,
    train: TrainSummary,
    coopt: CooptSummary,
}

fn cache_root() -> PathBuf {
    std::env::var_os("MORPHOSCAPE_ACCEPTANCE_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-desk"))
}

fn desk_pipeline() -> Result<Desk, String> {
    let mut cfg = RunConfig::defaults(Scale::Desk);
    cfg.out = cache_root();
    let t = Instant::now();
    let metrics = cmd_sweep(&cfg, true).map_err(|e| format!("sweep: {e}"))?;
    eprintln!("desk sweep ready after {:.0?}", t.elapsed());
    let train = cmd_train(&cfg, true).map_err(|e| format!("train: {e}"))?;
    eprintln!("desk training study ready after {:.0?}", t.elapsed());
    let coopt = cmd_coopt(&cfg, true).map_err(|e| format!("coopt: {e}"))?;
    eprintln!("desk co-optimization ready after {:.0?}", t.elapsed());
    Ok(Desk { metrics, train, coopt })
}

fn criterion_3(d: &Desk) -> Line {
    let colocated: Vec<&DesignMetrics> = d.metrics.iter().filter(|m| m.design.ell1 == m.design.ell2).collect();
    let bad = colocated.iter().filter(|m| m.m_l != 0.0).count();
    line(
        3,
        "co-located sensors",
        d.metrics.len() == 625 && colocated.len() == 25 && bad == 0,
        format!("{} of {} co-located designs have m_l = 0 ({} designs swept)", colocated.len() - bad, colocated.len(), d.metrics.len()),
    )
}

fn criterion_4(d: &Desk) -> Line {
    let solved: Vec<&DesignMetrics> = d.metrics.iter().filter(|m| m.solved_any() > 0).collect();
    let ml: Vec<f64> = solved.iter().map(|m| m.m_l).collect();
    let mci: Vec<f64> = solved.iter().map(|m| m.m_ci).collect();
    match pearson(&ml, &mci) {
        Ok(r) => line(
            4,
            "metric correlation",
            r.r > 0.0 && r.p < 0.05,
            format!("r = {:.4}, p = {:.3e}, n = {}", r.r, r.p, r.n),
        ),
        Err(e) => line(4, "metric correlation", false, format!("undefined: {e}")),
    }
}

fn criterion_5(d: &Desk) -> Line {
    let rows = &d.train.correlations;
    let good = rows.iter().filter(|c| c.r < 0.0 && c.p < 0.05).count();
    let detail: Vec<String> =
        rows.iter().map(|c| format!("{}/{} r={:+.3} p={:.2e}", c.metric, c.method, c.r, c.p)).collect();
    line(
        5,
        "sample-efficiency correlation",
        rows.len() == 8 && good == 8,
        format!("{good}/8 negative and significant: {}", detail.join(", ")),
    )
}

fn criterion_6(d: &Desk) -> Line {
    let c = &d.coopt;
    line(
        6,
        "co-optimization superiority",
        c.runs == (30, 30) && c.p_greater < 0.05 && c.mean_free > c.mean_fixed,
        format!(
            "mean final best success free {:.3} vs fixed {:.3}, U = {}, one-sided p = {:.3e}, n = {}/{}",
            c.mean_free, c.mean_fixed, c.u, c.p_greater, c.runs.0, c.runs.1
        ),
    )
}

fn criterion_7(d: &Desk) -> Line {
    let curve = &d.coopt.dtw_curve;
    match trend(curve) {
        Some((slope, r, p)) => line(
            7,
            "homeostasis trend",
            r < 0.0 && p < 0.05,
            format!(
                "{} bins, first {:.3} last {:.3}, slope {slope:.4}/bin, r = {r:.4}, p = {p:.3e}",
                curve.len(),
                curve[0],
                curve[curve.len() - 1]
            ),
        ),
        None => line(7, "homeostasis trend", false, format!("trend undefined over {} bins", curve.len())),
    }
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Line {
    const NAME: &str = "paper-scale landscape (optional)";
    if std::env::var_os("MORPHOSCAPE_PAPER_CHECK").is_none() {
        return Line {
            id: 9,
            name: NAME,
            pass: None,
            detail: "skipped; set MORPHOSCAPE_PAPER_CHECK=1 to run the 6561-design sweep".into(),
        };
    }
    let mut cfg = RunConfig::defaults(Scale::Paper);
    cfg.out = cache_root().with_file_name("acceptance-paper");
    let metrics = match cmd_sweep(&cfg, true) {
        Ok(m) => m,
        Err(e) => return line(9, NAME, false, format!("sweep: {e}")),
    };
    let best = metrics.iter().reduce(|b, m| if m.m_l > b.m_l { m } else { b }).unwrap();
    let asymmetric = mirror_partner(&best.design) != best.design;
    let base = design_metrics(&Design::baseline(), &cfg.environments(), &cfg.grid_spec(), &cfg.sim_config())
        .expect("baseline metrics");
    line(
        9,
        NAME,
        (0.08..=0.16).contains(&best.m_l) && asymmetric && base.m_l < 0.01,
        format!(
            "best {:?} m_l = {:.4} (asymmetric: {asymmetric}); baseline m_l = {:.4}",
            best.design.coords(),
            best.m_l,
            base.m_l
        ),
    )
}

// --------------------------------------------------------------- criterion 10

fn criterion_10() -> Line {
    const SMALL: &str = r#"{
      "grid": {"design_bins": 3, "weight_bins": 11},
      "sim": {"max_steps": 4000},
      "train": {"budget": 150, "seeds": [0, 1, 2], "sample": {"stratified": {"per_quartile": 2}}}
    }"#;
    let root = cache_root().with_file_name("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&root);
    let mut outputs = Vec::new();
    for (name, workers) in [("w1", 1), ("w4", 4), ("w1-again", 1)] {
        let mut cfg = RunConfig::from_json(SMALL, Some(Scale::Desk)).unwrap();
        cfg.workers = workers;
        cfg.out = root.join(name);
        if let Err(e) = cmd_sweep(&cfg, false).and_then(|_| cmd_train(&cfg, false)) {
            return line(10, "determinism and parallel invariance", false, format!("{name}: {e}"));
        }
        let read = |f: &str| std::fs::read(cfg.out.join(f)).unwrap_or_default();
        outputs.push((read("metrics.csv"), read(TRAINING_FILE)));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].0.is_empty() && !outputs[0].1.is_empty();
    line(
        10,
        "determinism and parallel invariance",
        same,
        format!(
            "metrics.csv ({} B) and {TRAINING_FILE} ({} B) byte-identical across workers 1/4/1: {same}",
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are accepted but ignored.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut lines = vec![criterion_1(), criterion_2(), criterion_8(), criterion_10()];
    match desk_pipeline() {
        Ok(d) => lines.extend([criterion_3(&d), criterion_4(&d), criterion_5(&d), criterion_6(&d), criterion_7(&d)]),
        Err(e) => {
            for (id, name) in [
                (3, "co-located sensors"),
                (4, "metric correlation"),
                (5, "sample-efficiency correlation"),
                (6, "co-optimization superiority"),
                (7, "homeostasis trend"),
            ] {
                lines.push(line(id, name, false, format!("desk pipeline failed: {e}")));
            }
        }
    }
    lines.push(criterion_9());
    lines.sort_by_key(|l| l.id);

    let mut failed = 0;
    for l in &lines {
        let tag = match l.pass {
            Some(true) => "PASS",
            Some(false) if l.id == 9 => "FAIL (not gated)",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("criterion {:>2} {tag:<16} {}: {}", l.id, l.name, l.detail);
    }
    println!("acceptance: {} gated criteria, {failed} failed", lines.iter().filter(|l| l.id != 9).count());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
