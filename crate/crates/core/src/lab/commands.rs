//! The six lab commands. Each returns its gates and writes its files
//! through a single [`Writer`] after the parallel work has finished.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::analysis::{
    fit_deviations, group_by_size, trial_stats, DeviationFit, EventGrid, EventRow, TrialStats,
    EVENT_HEADER,
};
use super::config::Config;
use super::report::{header_lines, Gate, Outcome, Writer};
use crate::engine::{idla_grow, GrowthHistory};
use crate::error::{Error, Result};
use crate::events::{
    min_tower_energy, parse_sites, shell_fixture, shell_profile, tower_decompose, tower_energy,
    SHELL_FIXTURE_CENTER, SHELL_FIXTURE_M,
};
use crate::harmonic::{build_omega, mean_value_sum, HarmonicPole, SumRegion};
use crate::kernel::{build_kernel_table, fit_lambda, fit_lambda_from, KernelTable};
use crate::lattice::LatticePoint;
use crate::martingale::{run_stopped_particle, trace_on_field, ExitKind, StoppedCluster, WalkField};
use crate::rng::{derive_seed, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Analyze,
    Kernel,
    Harmonic,
    Martingale,
    Tower,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Analyze => "analyze",
            Command::Kernel => "kernel",
            Command::Harmonic => "harmonic",
            Command::Martingale => "martingale",
            Command::Tower => "tower",
        }
    }
}

/// Run a command; on error every file it wrote is removed.
pub fn run(command: Command, config: &Config) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut writer = Writer::default();
    let result = pool.install(|| match command {
        Command::Simulate => simulate(config, &mut writer),
        Command::Analyze => analyze(config, &mut writer),
        Command::Kernel => kernel(config, &mut writer),
        Command::Harmonic => harmonic(config, &mut writer),
        Command::Martingale => martingale(config, &mut writer),
        Command::Tower => tower(config, &mut writer),
    });
    match result {
        Ok((gates, summary)) => {
            let name = command.name();
            let path = config.out_dir.join(format!("{name}_report.json"));
            if let Err(e) = writer.write_json(&path, name, config, &gates, &summary) {
                writer.discard();
                return Err(e);
            }
            Ok(Outcome {
                command: name.to_string(),
                gates,
                summary,
                files: writer.files().to_vec(),
            })
        }
        Err(e) => {
            writer.discard();
            Err(e)
        }
    }
}

type Gates = (Vec<Gate>, Value);

pub fn event_grid(config: &Config) -> EventGrid {
    EventGrid {
        early_m: config.early_m.clone(),
        late_ell: config.late_ell.clone(),
        tentacle_b: config.tentacle_b.clone(),
        tentacle_m: config.tentacle_m,
    }
}

/// Seed of trial `t` at size `n`.
pub fn trial_seed(master: u64, n: u64, t: u64) -> u64 {
    derive_seed(derive_seed(master, n), t)
}

pub fn snapshot_name(n: u64, t: u64) -> String {
    format!("n{n}_t{t:04}.idla")
}

/// Grow `trials` clusters of size `n` in parallel, in trial order.
pub fn grow_trials(master: u64, n: u64, trials: u64) -> Result<Vec<GrowthHistory>> {
    (0..trials)
        .into_par_iter()
        .map(|t| idla_grow(n, trial_seed(master, n, t)))
        .collect()
}

/// Statistics and event rows of one growth.
pub type TrialRow = (TrialStats, Vec<EventRow>);

/// Growth statistics for every `(n, trial)` of the config.
pub fn simulate_rows(config: &Config, mut each: impl FnMut(&GrowthHistory, u64) -> Result<()>) -> Result<Vec<TrialRow>> {
    let grid = event_grid(config);
    let mut out = Vec::new();
    for &n in &config.sizes {
        let histories = grow_trials(config.seed, n, config.trials)?;
        let stats: Vec<_> = histories
            .par_iter()
            .enumerate()
            .map(|(t, h)| trial_stats(h, t as u64, &grid))
            .collect::<Result<_>>()?;
        for (t, h) in histories.iter().enumerate() {
            each(h, t as u64)?;
        }
        out.extend(stats);
    }
    Ok(out)
}

fn fit_gates(fit: &DeviationFit) -> Vec<Gate> {
    let per_size: Vec<Value> = fit
        .sizes
        .iter()
        .map(|s| json!({"n": s.n, "mean": s.mean_max_deviation, "bound": 4.0 * s.r.ln()}))
        .collect();
    let log_bound = fit
        .sizes
        .iter()
        .all(|s| s.mean_max_deviation <= 4.0 * s.r.ln());
    vec![
        Gate::new("mean_max_deviation_le_4_ln_r", log_bound, json!(per_size)),
        Gate::new(
            "log_fit_beats_cube_root_fit",
            fit.log.r2 > fit.cube_root.r2,
            json!({"r2_log": fit.log.r2, "r2_cube_root": fit.cube_root.r2}),
        ),
    ]
}

fn write_rows(
    writer: &mut Writer,
    config: &Config,
    command: &str,
    stem: &str,
    rows: &[TrialRow],
) -> Result<()> {
    let grid = event_grid(config);
    let mut stats = header_lines(command, config);
    stats.push_str(&TrialStats::csv_header(&grid));
    stats.push('\n');
    let mut events = header_lines(command, config);
    events.push_str(EVENT_HEADER);
    events.push('\n');
    for (s, ev) in rows {
        stats.push_str(&s.csv());
        stats.push('\n');
        for e in ev {
            events.push_str(&e.csv());
            events.push('\n');
        }
    }
    writer.write(&config.out_dir.join(format!("{stem}.csv")), stats.as_bytes())?;
    writer.write(&config.out_dir.join(format!("{stem}_events.csv")), events.as_bytes())
}

fn simulate(config: &Config, writer: &mut Writer) -> Result<Gates> {
    if config.sizes.is_empty() || config.trials == 0 {
        return Err(Error::Config("simulate needs sizes and trials >= 1".into()));
    }
    writer.ensure_dir(&config.out_dir)?;
    let snap_dir = config.out_dir.join("snapshots");
    let rows = simulate_rows(config, |h, t| {
        if config.snapshots {
            let mut buf = Vec::new();
            h.write_snapshot(&mut buf)
                .map_err(|e| Error::io(&snap_dir, e))?;
            writer.write(&snap_dir.join(snapshot_name(h.n(), t)), &buf)?;
        }
        Ok(())
    })?;
    write_rows(writer, config, "simulate", "simulate", &rows)?;

    let envelope = rows.iter().all(|(s, _)| {
        s.deviation_out > 0.0 && s.deviation_out < s.r && s.deviation_in > -1.0 && s.deviation_in < s.r
    });
    let stats: Vec<TrialStats> = rows.into_iter().map(|(s, _)| s).collect();
    let fit = fit_deviations(&group_by_size(&stats));
    let mut gates = vec![Gate::new(
        "deviation_envelope",
        envelope,
        json!({"rule": "0 < deviation_out < r and -1 < deviation_in < r"}),
    )];
    if fit.sizes.len() >= 3 {
        gates.extend(fit_gates(&fit));
    }
    Ok((gates, json!({ "fit": fit })))
}

/// Load every snapshot in `dir`, sorted by file name.
pub fn load_snapshots(dir: &Path) -> Result<Vec<(PathBuf, GrowthHistory)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "idla"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| GrowthHistory::load(&p).map(|h| (p, h)))
        .collect()
}

/// Statistics and fits over an arbitrary set of histories, grouped by `n`
/// in increasing order.
pub fn analyze_histories(histories: &[GrowthHistory], grid: &EventGrid) -> Result<(Vec<TrialRow>, DeviationFit)> {
    let mut order: Vec<usize> = (0..histories.len()).collect();
    order.sort_by_key(|&i| histories[i].n());
    let mut trial_of = vec![0u64; histories.len()];
    let mut last = None;
    let mut t = 0;
    for &i in &order {
        if last != Some(histories[i].n()) {
            t = 0;
            last = Some(histories[i].n());
        }
        trial_of[i] = t;
        t += 1;
    }
    let rows: Vec<_> = order
        .par_iter()
        .map(|&i| trial_stats(&histories[i], trial_of[i], grid))
        .collect::<Result<_>>()?;
    let stats: Vec<TrialStats> = rows.iter().map(|(s, _)| s.clone()).collect();
    let fit = fit_deviations(&group_by_size(&stats));
    Ok((rows, fit))
}

fn analyze(config: &Config, writer: &mut Writer) -> Result<Gates> {
    let snaps = load_snapshots(&config.out_dir.join("snapshots"))?;
    if snaps.is_empty() {
        return Err(Error::Config(format!(
            "no snapshots under {}",
            config.out_dir.join("snapshots").display()
        )));
    }
    let histories: Vec<GrowthHistory> = snaps.into_iter().map(|(_, h)| h).collect();
    let grid = event_grid(config);
    let (rows, fit) = analyze_histories(&histories, &grid)?;
    write_rows(writer, config, "analyze", "analyze", &rows)?;

    let mut gates = vec![Gate::new(
        "complement_identity",
        rows.iter().all(|(s, _)| s.complement_ok),
        json!({"histories": rows.len()}),
    )];
    if fit.sizes.len() >= 3 {
        gates.extend(fit_gates(&fit));
    }
    let frequencies: Vec<Value> = fit
        .sizes
        .iter()
        .map(|s| {
            let of_size: Vec<&TrialStats> = rows.iter().map(|(r, _)| r).filter(|r| r.n == s.n).collect();
            let freq = |pick: &dyn Fn(&TrialStats) -> &Vec<usize>, i: usize| {
                of_size.iter().filter(|r| pick(r)[i] > 0).count() as f64 / of_size.len() as f64
            };
            json!({
                "n": s.n,
                "early": grid.early_m.iter().enumerate().map(|(i, m)| json!({"m": m, "frequency": freq(&|r| &r.early, i)})).collect::<Vec<_>>(),
                "late": grid.late_ell.iter().enumerate().map(|(i, l)| json!({"ell": l, "frequency": freq(&|r| &r.late, i)})).collect::<Vec<_>>(),
                "tentacle": grid.tentacle_b.iter().enumerate().map(|(i, b)| json!({"b": b, "frequency": freq(&|r| &r.tentacle, i)})).collect::<Vec<_>>(),
            })
        })
        .collect();
    // frequency of L_ell[100 π ell²] wherever the histories are long enough
    let apriori: Vec<Value> = grid
        .late_ell
        .iter()
        .filter_map(|&l| {
            let horizon = (100.0 * PI * l * l).floor() as u64;
            let eligible: Vec<&GrowthHistory> = histories.iter().filter(|h| h.n() >= horizon).collect();
            if eligible.is_empty() {
                return None;
            }
            let hits = eligible
                .iter()
                .filter(|h| !crate::events::detect_late(h, l, horizon).unwrap_or_default().is_empty())
                .count();
            Some(json!({"ell": l, "horizon": horizon, "histories": eligible.len(), "frequency": hits as f64 / eligible.len() as f64}))
        })
        .collect();
    Ok((
        gates,
        json!({
            "slope": fit.log.slope,
            "intercept": fit.log.intercept,
            "r2": fit.log.r2,
            "fit": fit,
            "event_frequencies": frequencies,
            "late_apriori": apriori,
        }),
    ))
}

/// Exactness, harmonicity, fit stability and asymptotic-decay checks on a
/// kernel table.
pub fn kernel_gates(table: &KernelTable, seed: u64) -> Vec<Gate> {
    use crate::kernel::KernelValue;
    let mut gates = Vec::new();
    let expect = [
        ("g(1)=1", LatticePoint::new(1, 0), KernelValue::from_ints(1, 0, 1)),
        ("g(1+i)=4/pi", LatticePoint::new(1, 1), KernelValue::from_ints(0, 4, 1)),
        ("g(2)=4-8/pi", LatticePoint::new(2, 0), KernelValue::from_ints(4, -8, 1)),
        ("g(0)=0", LatticePoint::ORIGIN, KernelValue::zero()),
    ];
    for (name, z, v) in expect {
        let got = table.exact(z);
        gates.push(Gate::new(
            name,
            got.as_ref() == Some(&v),
            json!({"p": got.as_ref().map(|g| g.p.to_string()), "q": got.as_ref().map(|g| g.q.to_string())}),
        ));
    }
    let lap0 = table.laplacian_exact(LatticePoint::ORIGIN);
    gates.push(Gate::new(
        "laplacian_origin_is_1",
        lap0 == Some((BigInt::from(4), BigInt::zero())),
        json!({}),
    ));
    let r0 = table.r0() as i64;
    let interior: Vec<LatticePoint> = (1..r0)
        .flat_map(|x| (0..=x).map(move |y| LatticePoint::new(x, y)))
        .collect();
    let mut rng = RngStream::new(seed, 0).rng();
    let count = interior.len().min(500);
    let picks = sample(&mut rng, interior.len(), count);
    let mut bad = Vec::new();
    for i in picks.iter() {
        let z = interior[i];
        match table.laplacian_exact(z) {
            Some((p, q)) if p.is_zero() && q.is_zero() => {}
            _ => bad.push(z),
        }
    }
    gates.push(Gate::new(
        "laplacian_zero_off_origin",
        bad.is_empty(),
        json!({"sampled": count, "failures": bad}),
    ));
    let fit = fit_lambda(table);
    let rf = r0 as f64;
    let ring_a = fit_lambda_from(table.iter_values(), rf / 2.0, 0.75 * rf);
    let ring_b = fit_lambda_from(table.iter_values(), 0.75 * rf, rf);
    gates.push(Gate::new(
        "lambda_spread_lt_1e-3",
        fit.spread < 1e-3,
        json!({"lambda_hat": fit.lambda, "spread": fit.spread, "samples": fit.samples}),
    ));
    gates.push(Gate::new(
        "lambda_rings_agree_1e-4",
        (ring_a.lambda - ring_b.lambda).abs() <= 1e-4,
        json!({"inner_ring": ring_a.lambda, "outer_ring": ring_b.lambda}),
    ));
    let c = table.asymptotic_error_constant(10.0);
    gates.push(Gate::new("asymptotic_constant_le_1", c <= 1.0, json!({"max_r2_error": c})));
    let positive = table
        .iter_values()
        .skip(1)
        .all(|(_, g)| g > 0.0);
    gates.push(Gate::new("positive_off_origin", positive, json!({})));
    gates
}

fn kernel(config: &Config, writer: &mut Writer) -> Result<Gates> {
    let table = build_kernel_table(config.kernel_r0)?;
    if config.kernel_dump {
        let mut buf = Vec::new();
        table
            .write_dump(&mut buf)
            .map_err(|e| Error::io(&config.out_dir, e))?;
        writer.write(&config.out_dir.join("kernel_table.txt"), &buf)?;
    }
    let gates = kernel_gates(&table, config.seed);
    let summary = json!({
        "r0": table.r0(),
        "lambda_hat": table.lambda_hat(),
        "lambda_spread": table.lambda_spread(),
        "asymptotic_constant": table.asymptotic_error_constant(10.0),
    });
    Ok((gates, summary))
}

/// Pole nearest to `ρ e^{iθ}`.
pub fn pole_at(rho: f64, theta: f64) -> LatticePoint {
    LatticePoint::new((rho * theta.cos()).round() as i64, (rho * theta.sin()).round() as i64)
}

/// Table radius that keeps every kernel argument used near `Ω_ζ` exact for
/// poles up to modulus `rho`.
pub fn exact_radius_for(rho: f64) -> usize {
    (2.0 * rho).ceil() as usize + 16
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleReport {
    pub zeta: LatticePoint,
    pub rho: f64,
    pub h_pole: f64,
    pub h_right: f64,
    pub h_diag: f64,
    pub alpha1: f64,
    pub max_laplacian: f64,
    pub inner: f64,
    pub outer: f64,
    pub c1: f64,
    pub mean_value: Vec<f64>,
}

pub fn pole_report(zeta: LatticePoint, table: &KernelTable) -> Result<PoleReport> {
    let pole = HarmonicPole::new(zeta)?;
    let omega = build_omega(&pole, table)?;
    let [a, b] = pole.negative_points();
    let exceptional = pole.exceptional_points();
    let mut max_lap = 0.0f64;
    for &u in omega.inside() {
        if exceptional.contains(&u) {
            continue;
        }
        let hu = omega.h(table, u);
        let s: f64 = u.neighbors().iter().map(|&w| omega.h(table, w)).sum();
        max_lap = max_lap.max((0.25 * s - hu).abs());
    }
    let (inner, outer) = omega.radii();
    let rho = pole.rho;
    let mean_value = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|f| mean_value_sum(&pole, table, SumRegion::Ball(f * rho)))
        .collect::<Result<_>>()?;
    Ok(PoleReport {
        zeta,
        rho,
        h_pole: pole.h_vertex(table, zeta),
        h_right: pole.h_vertex(table, a),
        h_diag: pole.h_vertex(table, b),
        alpha1: pole.alpha1,
        max_laplacian: max_lap,
        inner,
        outer,
        c1: (pole.h_vertex(table, LatticePoint::ORIGIN) - 1.0 / rho).abs() * rho * rho,
        mean_value,
    })
}

/// Gates over a sweep of pole reports.
pub fn harmonic_gates(reports: &[PoleReport]) -> Vec<Gate> {
    let all = |f: &dyn Fn(&PoleReport) -> bool| reports.iter().all(f);
    let failing = |f: &dyn Fn(&PoleReport) -> bool| -> Vec<LatticePoint> {
        reports.iter().filter(|r| !f(r)).map(|r| r.zeta).collect()
    };
    let pole_bounds = |r: &PoleReport| (1.0..=2.0).contains(&r.h_pole);
    // H(ζ+1) = -(π/2)α₁: strictly negative off the diagonal, zero on it
    let right = |r: &PoleReport| {
        (r.h_right + FRAC_PI_2 * r.alpha1).abs() < 1e-12
            && (r.alpha1 == 0.0 || r.h_right < 0.0)
            && r.h_right < 0.5 / r.rho
    };
    let diag = |r: &PoleReport| r.h_diag < 0.0;
    let harmonic = |r: &PoleReport| r.max_laplacian < 1e-10;
    let sandwich = |r: &PoleReport| r.inner >= r.rho - 5.0 && r.outer < r.rho + 5.0;
    let mean_value = |r: &PoleReport| r.mean_value.iter().all(|s| s.abs() <= 5.0 * r.rho.ln());
    let c2 = reports
        .iter()
        .map(|r| (r.rho - r.inner).max(r.outer - r.rho))
        .fold(0.0, f64::max);
    let diagonal: Vec<LatticePoint> = reports.iter().filter(|r| r.alpha1 == 0.0).map(|r| r.zeta).collect();
    vec![
        Gate::new("h_pole_in_1_2", all(&pole_bounds), json!({"failures": failing(&pole_bounds)})),
        Gate::new(
            "h_right_neighbour_sign",
            all(&right),
            json!({"failures": failing(&right), "diagonal_poles_with_zero_value": diagonal}),
        ),
        Gate::new("h_diagonal_neighbour_negative", all(&diag), json!({"failures": failing(&diag)})),
        Gate::new(
            "laplacian_lt_1e-10",
            all(&harmonic),
            json!({"max": reports.iter().map(|r| r.max_laplacian).fold(0.0, f64::max)}),
        ),
        Gate::new("omega_between_balls_rho_pm_5", all(&sandwich), json!({"c2": c2, "failures": failing(&sandwich)})),
        Gate::new(
            "mean_value_sum_le_5_ln_rho",
            all(&mean_value),
            json!({"max_ratio": reports.iter().flat_map(|r| r.mean_value.iter().map(move |s| s.abs() / r.rho.ln())).fold(0.0, f64::max)}),
        ),
    ]
}

/// Poles of the sweep, in radius-major order.
pub fn harmonic_poles(config: &Config) -> Vec<LatticePoint> {
    let d = config.harmonic_directions.max(1);
    config
        .harmonic_radii
        .iter()
        .flat_map(|&rho| (0..d).map(move |k| pole_at(rho, 2.0 * PI * k as f64 / d as f64)))
        .collect()
}

fn harmonic(config: &Config, writer: &mut Writer) -> Result<Gates> {
    let poles = harmonic_poles(config);
    let rho_max = poles.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let r0 = config.kernel_r0.max(exact_radius_for(rho_max));
    let table = build_kernel_table(r0)?;
    let reports: Vec<PoleReport> = poles
        .par_iter()
        .map(|&z| pole_report(z, &table))
        .collect::<Result<_>>()?;
    let gates = harmonic_gates(&reports);
    let mut csv = header_lines("harmonic", config);
    csv.push_str("x,y,rho,h_pole,h_right,h_diag,max_laplacian,inner,outer,c1,mv_quarter,mv_half,mv_three_quarter,mv_full\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{:e},{},{},{},{},{},{},{}\n",
            r.zeta.x, r.zeta.y, r.rho, r.h_pole, r.h_right, r.h_diag, r.max_laplacian, r.inner, r.outer, r.c1,
            r.mean_value[0], r.mean_value[1], r.mean_value[2], r.mean_value[3]
        ));
    }
    writer.write(&config.out_dir.join("harmonic.csv"), csv.as_bytes())?;
    let c1 = reports.iter().map(|r| r.c1).fold(0.0, f64::max);
    Ok((gates, json!({"table_r0": r0, "poles": reports.len(), "c1": c1})))
}

/// Across-seed results for one pole.
#[derive(Clone, Debug, Serialize)]
pub struct PoleMartingale {
    pub zeta: LatticePoint,
    pub n: u64,
    pub seeds: u64,
    pub checkpoints: Vec<u64>,
    pub mean_m: Vec<f64>,
    pub std_err_m: Vec<f64>,
    pub mean_s: Vec<f64>,
    pub max_frozen_error: f64,
    pub conserved: bool,
    pub bracket_ok: bool,
    pub settled: u64,
    pub frozen: u64,
    pub pole_hits: u64,
}

impl PoleMartingale {
    pub fn drift_ok(&self) -> bool {
        self.mean_m
            .iter()
            .zip(&self.std_err_m)
            .all(|(m, se)| m.abs() <= 3.0 * se)
    }

    /// Largest mean `S(t) / ln t` over checkpoints with `t >= 2`.
    pub fn max_s_over_log(&self) -> f64 {
        self.checkpoints
            .iter()
            .zip(&self.mean_s)
            .filter(|(&t, _)| t >= 2)
            .map(|(&t, s)| s / (t as f64).ln())
            .fold(0.0, f64::max)
    }
}

/// Evenly spaced checkpoints `⌈n j / c⌉`, `j = 1..=c`.
pub fn checkpoints(n: u64, c: usize) -> Vec<u64> {
    let mut v: Vec<u64> = (1..=c as u64).map(|j| (n * j).div_ceil(c as u64)).collect();
    v.dedup();
    v
}

fn bracket_check(field: &WalkField, n: u64, seed: u64) -> bool {
    let mut cluster = StoppedCluster::new(field);
    (1..=n).all(|k| {
        let (lo, hi) = cluster.boundary_bracket();
        let mut rng = RngStream::new(seed, k).rng();
        let r = run_stopped_particle(&mut cluster, &mut rng);
        r.h_min >= lo - 1e-12 && r.h_max <= hi + 1e-12
    })
}

pub fn pole_martingale(
    zeta: LatticePoint,
    table: &KernelTable,
    fill: f64,
    seeds: u64,
    master: u64,
    n_checkpoints: usize,
) -> Result<(PoleMartingale, crate::martingale::MartingaleTrace)> {
    let pole = HarmonicPole::new(zeta)?;
    let omega = build_omega(&pole, table)?;
    let field = WalkField::new(&omega, table);
    let n = (fill * PI * pole.rho * pole.rho).floor() as u64;
    let cps = checkpoints(n, n_checkpoints);
    let level_dm = pole.level() - field.h0();
    let seed_of = |t: u64| derive_seed(derive_seed(master, (zeta.x as u64) << 32 ^ zeta.y as u64), t);
    struct Seed {
        m: Vec<f64>,
        s: Vec<f64>,
        frozen_err: f64,
        conserved: bool,
        counts: (u64, u64, u64),
    }
    let per_seed: Vec<Seed> = (0..seeds)
        .into_par_iter()
        .map(|t| {
            let tr = trace_on_field(&field, n, seed_of(t));
            let frozen_err = tr
                .records
                .iter()
                .filter(|r| r.exit == ExitKind::Frozen)
                .map(|r| (r.delta_m - level_dm).abs())
                .fold(0.0, f64::max);
            Seed {
                m: cps.iter().map(|&k| tr.m[k as usize]).collect(),
                s: cps.iter().map(|&k| tr.s[k as usize]).collect(),
                frozen_err,
                conserved: tr.settled + tr.frozen + tr.absorbed_at_pole == n,
                counts: (tr.settled, tr.frozen, tr.absorbed_at_pole),
            }
        })
        .collect();
    let k = cps.len();
    let mut mean_m = vec![0.0; k];
    let mut std_err_m = vec![0.0; k];
    let mut mean_s = vec![0.0; k];
    for j in 0..k {
        let ms: Vec<f64> = per_seed.iter().map(|s| s.m[j]).collect();
        let e = crate::martingale::Estimate::from_samples(&ms);
        mean_m[j] = e.mean;
        std_err_m[j] = e.std_err;
        mean_s[j] = per_seed.iter().map(|s| s.s[j]).sum::<f64>() / seeds as f64;
    }
    let bracket_ok = bracket_check(&field, n.min(400), seed_of(0));
    let example = trace_on_field(&field, n, seed_of(0));
    let sum = |f: &dyn Fn(&Seed) -> u64| per_seed.iter().map(f).sum::<u64>();
    Ok((
        PoleMartingale {
            zeta,
            n,
            seeds,
            checkpoints: cps,
            mean_m,
            std_err_m,
            mean_s,
            max_frozen_error: per_seed.iter().map(|s| s.frozen_err).fold(0.0, f64::max),
            conserved: per_seed.iter().all(|s| s.conserved),
            bracket_ok,
            settled: sum(&|s| s.counts.0),
            frozen: sum(&|s| s.counts.1),
            pole_hits: sum(&|s| s.counts.2),
        },
        example,
    ))
}

pub fn martingale_gates(results: &[PoleMartingale]) -> Vec<Gate> {
    let by_pole = |f: &dyn Fn(&PoleMartingale) -> Value| -> Value {
        results.iter().map(|r| json!({"zeta": r.zeta, "value": f(r)})).collect()
    };
    vec![
        Gate::new(
            "zero_drift_3_se",
            results.iter().all(|r| r.drift_ok()),
            by_pole(&|r| json!({"mean": r.mean_m, "std_err": r.std_err_m})),
        ),
        Gate::new(
            "frozen_value_identity_1e-12",
            results.iter().all(|r| r.max_frozen_error <= 1e-12),
            by_pole(&|r| json!(r.max_frozen_error)),
        ),
        Gate::new("conservation", results.iter().all(|r| r.conserved), by_pole(&|r| json!({"settled": r.settled, "frozen": r.frozen, "pole": r.pole_hits}))),
        Gate::new(
            "mean_s_over_ln_t_le_50",
            results.iter().all(|r| r.max_s_over_log() <= 50.0),
            by_pole(&|r| json!(r.max_s_over_log())),
        ),
        Gate::new("excursion_bracket", results.iter().all(|r| r.bracket_ok), json!({})),
    ]
}

fn martingale(config: &Config, writer: &mut Writer) -> Result<Gates> {
    if config.zetas.is_empty() || config.trials < 2 {
        return Err(Error::Config("martingale needs zetas and trials >= 2".into()));
    }
    let rho_max = config.zetas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let r0 = config.kernel_r0.max(exact_radius_for(rho_max));
    let table = build_kernel_table(r0)?;
    let mut results = Vec::new();
    for &z in &config.zetas {
        let (res, example) = pole_martingale(z, &table, config.mg_fill, config.trials, config.seed, config.mg_checkpoints)?;
        let mut buf = header_lines("martingale", config).into_bytes();
        example
            .write_csv(&mut buf)
            .map_err(|e| Error::io(&config.out_dir, e))?;
        writer.write(&config.out_dir.join(format!("trace_{}_{}.csv", z.x, z.y)), &buf)?;
        results.push(res);
    }
    Ok((martingale_gates(&results), json!({"table_r0": r0, "poles": results})))
}

/// All compositions of `total` (for the exhaustive check of the DP).
pub fn compositions(total: u64) -> Vec<Vec<u64>> {
    if total == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=total {
        for mut rest in compositions(total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn tower(config: &Config, _writer: &mut Writer) -> Result<Gates> {
    let bundled = config.tower_fixture.is_none();
    let history = match &config.tower_fixture {
        None => shell_fixture(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            GrowthHistory::from_sites(parse_sites(&text)?, 0)?
        }
    };
    let profile = shell_profile(&history, history.n(), config.tower_center, config.tower_m);
    let decomposition = tower_decompose(&profile, config.tower_c_prime)?;
    let mut gates = Vec::new();
    let boxed = history
        .sites()
        .iter()
        .filter(|z| z.linf(config.tower_center) <= config.tower_m as i64)
        .count() as u64;
    gates.push(Gate::new(
        "shell_partition",
        profile.a.iter().sum::<u64>() == boxed,
        json!({"box_count": boxed}),
    ));
    gates.push(Gate::new(
        "window_condition",
        decomposition.check_windows(&profile.a),
        json!({"beta": decomposition.beta, "unconstrained_last": decomposition.unconstrained}),
    ));
    let figure = bundled
        && config.tower_center == SHELL_FIXTURE_CENTER
        && config.tower_m == SHELL_FIXTURE_M
        && config.tower_c_prime == 0.5;
    if figure {
        gates.push(Gate::new(
            "figure_profile",
            profile.a == [4, 1, 2, 2, 2, 1, 2, 1, 1, 1, 3, 3, 1],
            json!({"a": profile.a}),
        ));
        gates.push(Gate::new(
            "figure_beta",
            decomposition.beta == [5, 3, 2, 3],
            json!({"beta": decomposition.beta}),
        ));
        gates.push(Gate::new(
            "figure_steps",
            decomposition.steps() == [5, 5, 5, 5, 5, 3, 3, 3, 2, 2, 3, 3, 3],
            json!({"b": decomposition.steps()}),
        ));
    }
    let (e2, _) = min_tower_energy(2, 2)?;
    let brute2 = compositions(3).iter().map(|b| tower_energy(b, 2)).min().unwrap();
    gates.push(Gate::new("min_energy_m2_is_6", e2 == 6 && brute2 == 6, json!({"dp": e2, "enumeration": brute2})));
    let dp_matches = (0..=12).all(|m| {
        let brute = compositions(m as u64 + 1).iter().map(|b| tower_energy(b, 2)).min().unwrap();
        min_tower_energy(m, 2).is_ok_and(|(e, _)| e == brute)
    });
    gates.push(Gate::new("dp_matches_enumeration_m_le_12", dp_matches, json!({})));
    let (lo, hi) = config.tower_energy_range;
    let mut floor = f64::INFINITY;
    let mut minima = Vec::new();
    for m in lo.max(2)..=hi {
        let (e, _) = min_tower_energy(m, 2)?;
        let ratio = e as f64 * (m as f64).ln() / (m * m) as f64;
        floor = floor.min(ratio);
        minima.push(json!({"m": m, "energy": e, "ratio": ratio}));
    }
    gates.push(Gate::new("energy_floor_ge_0.3", floor >= 0.3, json!({"floor": floor})));
    let m = (profile.a.len() - 1).min(crate::events::MAX_EXHAUSTIVE_M);
    let (emin, _) = min_tower_energy(m, 2)?;
    gates.push(Gate::new(
        "greedy_energy_ge_minimum",
        profile.a.len() - 1 > crate::events::MAX_EXHAUSTIVE_M || decomposition.energy() >= emin,
        json!({"greedy": decomposition.energy(), "minimum": emin}),
    ));
    Ok((
        gates,
        json!({
            "profile": profile,
            "decomposition": decomposition,
            "steps": decomposition.steps(),
            "energy": decomposition.energy(),
            "minima": minima,
        }),
    ))
}
