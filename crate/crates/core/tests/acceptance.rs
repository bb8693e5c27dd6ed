//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use idla::engine::{packed_ball_history, GrowthHistory};
use idla::events::{event_complement_check, tentacle_scan};
use idla::kernel::build_kernel_table;
use idla::lab::commands::{grow_trials, kernel_gates};
use idla::lab::{run, Command, Config, Gate};
use idla::martingale::{bm_sup_tail, bm_sup_tail_monte_carlo, exit_mgf_bound, exit_mgf_exact, exit_mgf_monte_carlo};
use idla::LatticePoint;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn from_gates(gates: &[Gate], pick: impl Fn(&str) -> bool) -> Verdict {
    let chosen: Vec<&Gate> = gates.iter().filter(|g| pick(&g.name)).collect();
    let failed: Vec<&str> = chosen.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
    let names: Vec<&str> = chosen.iter().map(|g| g.name.as_str()).collect();
    if chosen.is_empty() {
        return verdict(false, "no gates evaluated");
    }
    if failed.is_empty() {
        verdict(true, names.join(", "))
    } else {
        let details: Vec<String> = chosen
            .iter()
            .filter(|g| !g.pass)
            .map(|g| format!("{} {}", g.name, g.detail))
            .collect();
        verdict(false, details.join("; "))
    }
}

fn config_in(dir: &Path) -> Config {
    Config {
        out_dir: dir.to_path_buf(),
        ..Config::default()
    }
}

fn run_gates(command: Command, config: &Config) -> Result<Vec<Gate>, String> {
    run(command, config).map(|o| o.gates).map_err(|e| e.to_string())
}

fn a1() -> Verdict {
    let t = Instant::now();
    let table = match build_kernel_table(64) {
        Ok(t) => t,
        Err(e) => return verdict(false, e.to_string()),
    };
    let gates = kernel_gates(&table, 1);
    let secs = t.elapsed().as_secs_f64();
    let mut v = from_gates(&gates, |n| n.starts_with("g(") || n.starts_with("laplacian"));
    v.pass &= secs < 10.0;
    v.detail = format!("{} in {secs:.2}s", v.detail);
    v
}

fn a2() -> Verdict {
    let table = build_kernel_table(64).expect("kernel table");
    let gates = kernel_gates(&table, 1);
    let mut v = from_gates(&gates, |n| n == "asymptotic_constant_le_1" || n == "lambda_rings_agree_1e-4");
    v.detail = format!(
        "{}; lambda_hat = {:.9}, max |z|^2 error = {:.4}",
        v.detail,
        table.lambda_hat(),
        table.asymptotic_error_constant(10.0)
    );
    v
}

fn a3(dir: &Path) -> Verdict {
    let config = Config {
        sizes: vec![10_000, 40_000, 100_000, 200_000],
        trials: 30,
        snapshots: false,
        ..config_in(dir)
    };
    match run(Command::Simulate, &config) {
        Ok(o) => {
            let mut v = from_gates(&o.gates, |n| {
                n == "mean_max_deviation_le_4_ln_r" || n == "log_fit_beats_cube_root_fit"
            });
            let means: Vec<String> = o.summary["fit"]["sizes"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|s| format!("n={} mean={:.3}", s["n"], s["mean_max_deviation"].as_f64().unwrap_or(f64::NAN)))
                .collect();
            v.detail = format!(
                "{}; {}; r2 log {:.4} vs cube root {:.4}",
                v.detail,
                means.join(", "),
                o.summary["fit"]["log"]["r2"].as_f64().unwrap_or(f64::NAN),
                o.summary["fit"]["cube_root"]["r2"].as_f64().unwrap_or(f64::NAN)
            );
            v
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn a4(dir: &Path) -> Verdict {
    let config = Config {
        harmonic_radii: vec![10.0, 20.0, 50.0, 100.0, 200.0],
        harmonic_directions: 16,
        ..config_in(dir)
    };
    let t = Instant::now();
    match run_gates(Command::Harmonic, &config) {
        Ok(g) => {
            let mut v = from_gates(&g, |_| true);
            let secs = t.elapsed().as_secs_f64();
            v.pass &= secs < 300.0;
            v.detail = format!("{} in {secs:.1}s", v.detail);
            v
        }
        Err(e) => verdict(false, e),
    }
}

fn a5() -> Verdict {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut grid_ok = true;
    let mut points = 0;
    for i in 1..=30 {
        let a = 0.1 * i as f64;
        for j in 0..=30 {
            let b = a * (1.0 + 0.2 * j as f64);
            for k in 0..=30 {
                // stay a hair inside √λ (a+b) <= 3 so rounding cannot leave the domain
                let lambda = (3.0 * (1.0 - 1e-12) * k as f64 / 30.0 / (a + b)).powi(2);
                let (Ok(e), Ok(bd)) = (exit_mgf_exact(a, b, lambda), exit_mgf_bound(a, b, lambda)) else {
                    grid_ok = false;
                    continue;
                };
                points += 1;
                worst = worst.max(e / bd);
                grid_ok &= e <= bd;
            }
        }
    }
    let target = 1.139494;
    let exact = exit_mgf_exact(0.5, 0.5, 1.0).expect("admissible");
    let mc = exit_mgf_monte_carlo(0.5, 0.5, 1.0, 100, 1_000_000, 5);
    let rel = (mc.mean - target).abs() / target;
    let mut tails = Vec::new();
    let mut tails_ok = true;
    for (k, s) in [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0), (0.5, 4.0), (1.0, 2.0), (1.5, 0.5)] {
        let est = bm_sup_tail_monte_carlo(k, s, 10_000, 100_000, 9);
        let bound = bm_sup_tail(k, s);
        tails_ok &= est.mean <= bound + 3.0 * est.std_err;
        tails.push(format!("({k},{s}) {:.4}<={bound:.4}", est.mean));
    }
    let secs = t.elapsed().as_secs_f64();
    verdict(
        grid_ok && rel < 0.01 && tails_ok && secs < 120.0,
        format!(
            "{points} grid points, max exact/bound {worst:.4}; exact {exact:.7}, MC {:.5} +- {:.5} (rel err {rel:.2e}); tails {}; {secs:.1}s",
            mc.mean,
            mc.std_err,
            tails.join(" ")
        ),
    )
}

fn a6(dir: &Path) -> Verdict {
    let config = Config {
        zetas: vec![LatticePoint::new(10, 0), LatticePoint::new(20, 12), LatticePoint::new(0, 40)],
        trials: 1000,
        ..config_in(dir)
    };
    let t = Instant::now();
    match run_gates(Command::Martingale, &config) {
        Ok(g) => {
            let mut v = from_gates(&g, |_| true);
            let secs = t.elapsed().as_secs_f64();
            v.pass &= secs < 600.0;
            v.detail = format!("{} in {secs:.1}s", v.detail);
            v
        }
        Err(e) => verdict(false, e),
    }
}

fn a7(dir: &Path) -> Verdict {
    match run_gates(Command::Tower, &config_in(dir)) {
        Ok(g) => {
            let v = from_gates(&g, |_| true);
            let has_figure = g.iter().any(|x| x.name == "figure_beta");
            verdict(v.pass && has_figure, v.detail)
        }
        Err(e) => verdict(false, e),
    }
}

fn planted_histories() -> Vec<GrowthHistory> {
    let mut out = Vec::new();
    for n in [500u64, 2000, 8000] {
        let ball = packed_ball_history(n);
        out.push(ball.clone());
        // an arm along the x axis
        let mut arm: Vec<LatticePoint> = ball.sites()[..(n - 40) as usize].to_vec();
        let x0 = arm.iter().filter(|z| z.y == 0).map(|z| z.x).max().unwrap();
        arm.extend((1..=40).map(|k| LatticePoint::new(x0 + k, 0)));
        out.push(GrowthHistory::from_sites(arm, 1).unwrap());
        // the first few hundred sites after the origin deferred to the end
        let mut hole = ball.sites().to_vec();
        let tail: Vec<LatticePoint> = hole.drain(1..(n as usize / 5)).collect();
        hole.extend(tail);
        out.push(GrowthHistory::from_sites(hole, 2).unwrap());
        // join order reversed within consecutive blocks of 16
        let mut rev = ball.sites().to_vec();
        rev[1..].chunks_mut(16).for_each(|c| c.reverse());
        out.push(GrowthHistory::from_sites(rev, 3).unwrap());
    }
    out
}

fn a8() -> Verdict {
    let t = Instant::now();
    let ms = [2.0, 4.0, 8.0];
    let all_agree = |h: &GrowthHistory| {
        ms.iter()
            .all(|&m| ms.iter().all(|&l| event_complement_check(h, m, l, h.n()).unwrap_or(false)))
    };
    let simulated = match grow_trials(1, 10_000, 100) {
        Ok(h) => h,
        Err(e) => return verdict(false, e.to_string()),
    };
    let sim_bad = simulated.iter().filter(|h| !all_agree(h)).count();
    let planted = planted_histories();
    let planted_bad = planted.iter().filter(|h| !all_agree(h)).count();
    drop(simulated);
    let big = match grow_trials(2, 100_000, 50) {
        Ok(h) => h,
        Err(e) => return verdict(false, e.to_string()),
    };
    let flags: usize = big
        .iter()
        .map(|h| tentacle_scan(h, h.n(), 0.1, 20).map(|v| v.len()).unwrap_or(usize::MAX))
        .sum();
    let secs = t.elapsed().as_secs_f64();
    verdict(
        sim_bad == 0 && planted_bad == 0 && flags == 0 && secs < 900.0,
        format!(
            "complement failures: {sim_bad}/100 simulated, {planted_bad}/{} planted; tentacle flags {flags} over 50 trials; {secs:.1}s",
            planted.len()
        ),
    )
}

fn snapshot_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Every command at reduced size, run three times (1, 8 and 1 threads).
fn a9() -> Verdict {
    let mut trees = Vec::new();
    for threads in [1usize, 8, 1] {
        let dir = tempfile::tempdir().unwrap();
        let config = Config {
            threads,
            sizes: vec![2_000, 5_000],
            trials: 6,
            harmonic_radii: vec![10.0, 30.0],
            harmonic_directions: 8,
            zetas: vec![LatticePoint::new(10, 0), LatticePoint::new(6, 8)],
            kernel_dump: true,
            ..config_in(dir.path())
        };
        let mut mg = config.clone();
        mg.trials = 24;
        for (cmd, cfg) in [
            (Command::Simulate, &config),
            (Command::Analyze, &config),
            (Command::Kernel, &config),
            (Command::Harmonic, &config),
            (Command::Martingale, &mg),
            (Command::Tower, &config),
        ] {
            if let Err(e) = run(cmd, cfg) {
                return verdict(false, format!("{} failed: {e}", cmd.name()));
            }
        }
        trees.push(snapshot_tree(dir.path()));
    }
    let files = trees[0].len();
    let mismatched: Vec<String> = trees[0]
        .iter()
        .filter(|(k, v)| trees[1..].iter().any(|t| t.get(*k) != Some(v)))
        .map(|(k, _)| k.clone())
        .collect();
    let same_names = trees.iter().all(|t| t.keys().eq(trees[0].keys()));
    verdict(
        same_names && mismatched.is_empty() && files > 0,
        format!("{files} files compared across 1/8/1 threads; mismatched: {mismatched:?}"),
    )
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let work = tempfile::tempdir().expect("temp dir");
    let dir = |name: &str| {
        let p = work.path().join(name);
        std::fs::create_dir_all(&p).unwrap();
        p
    };
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let criteria: Vec<(&str, &str, Check)> = vec![
        ("A1", "kernel exactness", Box::new(a1)),
        ("A2", "kernel asymptotics", Box::new(a2)),
        ("A3", "logarithmic fluctuations", Box::new(move || a3(&dir("a3")))),
        ("A4", "harmonic detector", Box::new(move || a4(&dir("a4")))),
        ("A5", "exit-time analytics", Box::new(a5)),
        ("A6", "martingale gates", Box::new(move || a6(&dir("a6")))),
        ("A7", "tower decomposition", Box::new(move || a7(&dir("a7")))),
        ("A8", "event identities and tentacles", Box::new(a8)),
        ("A9", "reproducibility", Box::new(a9)),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f.eq_ignore_ascii_case(id)) {
            continue;
        }
        let t = Instant::now();
        let v = check();
        ran += 1;
        println!(
            "{id} {} {name} [{:.1}s]: {}",
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
