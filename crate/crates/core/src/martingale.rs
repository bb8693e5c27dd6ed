//! Particles stopped on the boundary of `Ω_ζ`, the martingale
//! `M_ζ = Σ (H_ζ(z) - H_ζ(0))` over their positions, and the Brownian
//! exit-time formulas behind its quadratic-variation bounds.
//!
//! Grid Brownian motion is simulated through its embedded chain: from a
//! vertex it next hits one of the four nearest marked points (neighbour
//! vertices, or edge crossings of `∂Ω_ζ`) with probability proportional to
//! the inverse distance.

use std::collections::BTreeMap;
use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{build_omega, GridPoint, HarmonicPole, OmegaRegion};
use crate::kernel::KernelTable;
use crate::lattice::{Direction, LatticePoint};
use crate::rng::{unit_f64, DirectionBits, RngStream};

/// First-hit probabilities onto four marks at distances `d_i ∈ (0, 1]`.
pub fn split_probabilities(marks: &[f64; 4]) -> [f64; 4] {
    let inv = marks.map(|d| 1.0 / d);
    let total: f64 = inv.iter().sum();
    inv.map(|w| w / total)
}

/// Sample which mark grid Brownian motion from a vertex hits first.
/// Returns the edge index and whether the mark lies strictly inside the edge.
pub fn split_step<R: RngCore>(marks: &[f64; 4], rng: &mut R) -> (usize, bool) {
    let p = split_probabilities(marks);
    let u = unit_f64(rng);
    let mut acc = 0.0;
    let mut i = 3;
    for (k, &pk) in p.iter().enumerate().take(3) {
        acc += pk;
        if u < acc {
            i = k;
            break;
        }
    }
    (i, marks[i] < 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Edge {
    Open,
    Crossing,
    Puncture,
}

/// `Ω_ζ` flattened into dense arrays for walking.
#[derive(Clone, Debug)]
pub struct WalkField {
    pole: HarmonicPole,
    half: i64,
    side: usize,
    /// `H_ζ` at inside vertices (NaN elsewhere).
    h: Vec<f64>,
    marks: Vec<[f64; 4]>,
    edges: Vec<[Edge; 4]>,
    crossing_frac: Vec<[f64; 4]>,
    h0: f64,
    h_pole: f64,
}

impl WalkField {
    pub fn new(omega: &OmegaRegion, table: &KernelTable) -> Self {
        let half = omega.half_side();
        let side = (2 * half + 1) as usize;
        let cells = side * side;
        let mut f = WalkField {
            pole: omega.pole,
            half,
            side,
            h: vec![f64::NAN; cells],
            marks: vec![[1.0; 4]; cells],
            edges: vec![[Edge::Open; 4]; cells],
            crossing_frac: vec![[1.0; 4]; cells],
            h0: omega.h(table, LatticePoint::ORIGIN),
            h_pole: omega.pole.h_vertex(table, omega.pole.zeta),
        };
        for &u in omega.inside() {
            let i = f.index(u);
            f.h[i] = omega.h(table, u);
        }
        for (&(u, d), c) in omega.crossings() {
            let i = f.index(u);
            let k = d.index();
            f.crossing_frac[i][k] = c.frac;
            if c.puncture {
                f.edges[i][k] = Edge::Puncture;
            } else {
                f.edges[i][k] = Edge::Crossing;
                f.marks[i][k] = c.frac;
            }
        }
        f
    }

    fn index(&self, z: LatticePoint) -> usize {
        (z.y + self.half) as usize * self.side + (z.x + self.half) as usize
    }

    fn point(&self, i: usize) -> LatticePoint {
        LatticePoint::new(
            (i % self.side) as i64 - self.half,
            (i / self.side) as i64 - self.half,
        )
    }

    fn offset(&self, k: usize) -> isize {
        match k {
            0 => 1,
            1 => -1,
            2 => self.side as isize,
            _ => -(self.side as isize),
        }
    }

    pub fn pole(&self) -> &HarmonicPole {
        &self.pole
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn h_pole(&self) -> f64 {
        self.h_pole
    }

    pub fn inside(&self, z: LatticePoint) -> bool {
        z.x.abs() <= self.half && z.y.abs() <= self.half && !self.h[self.index(z)].is_nan()
    }

    /// `H_ζ` at an inside vertex.
    pub fn h(&self, z: LatticePoint) -> Option<f64> {
        self.inside(z).then(|| self.h[self.index(z)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitKind {
    Settled,
    Frozen,
    Pole,
}

impl ExitKind {
    pub fn token(self) -> &'static str {
        match self {
            ExitKind::Settled => "settled",
            ExitKind::Frozen => "frozen",
            ExitKind::Pole => "pole",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleRecord {
    pub exit: ExitKind,
    pub point: GridPoint,
    pub delta_m: f64,
    pub delta_s: f64,
    /// Extremes of `H - H(0)` over every point the particle visited,
    /// including its exit point.
    pub h_min: f64,
    pub h_max: f64,
    pub steps: u64,
}

/// The stopped process: settled sites inside `Ω_ζ`, frozen boundary points
/// with multiplicity, and pole hits.
#[derive(Clone, Debug)]
pub struct StoppedCluster<'a> {
    field: &'a WalkField,
    occupied: Vec<bool>,
    settled: u64,
    frozen: BTreeMap<(LatticePoint, Direction), u64>,
    absorbed_at_pole: u64,
}

impl<'a> StoppedCluster<'a> {
    pub fn new(field: &'a WalkField) -> Self {
        StoppedCluster {
            field,
            occupied: vec![false; field.h.len()],
            settled: 0,
            frozen: BTreeMap::new(),
            absorbed_at_pole: 0,
        }
    }

    pub fn is_occupied(&self, z: LatticePoint) -> bool {
        self.field.inside(z) && self.occupied[self.field.index(z)]
    }

    pub fn settled(&self) -> u64 {
        self.settled
    }

    /// Frozen points keyed by the cut edge, with multiplicity.
    pub fn frozen(&self) -> &BTreeMap<(LatticePoint, Direction), u64> {
        &self.frozen
    }

    pub fn frozen_count(&self) -> u64 {
        self.frozen.values().sum()
    }

    pub fn absorbed_at_pole(&self) -> u64 {
        self.absorbed_at_pole
    }

    pub fn launched(&self) -> u64 {
        self.settled + self.frozen_count() + self.absorbed_at_pole
    }

    pub fn occupied_sites(&self) -> Vec<LatticePoint> {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| self.field.point(i))
            .collect()
    }

    /// Range of `H - H(0)` over the points where the next particle could
    /// stop: empty inside vertices next to the cluster, crossings and the
    /// pole reachable from it. The origin counts as a stopping point while
    /// unoccupied.
    pub fn boundary_bracket(&self) -> (f64, f64) {
        let f = self.field;
        let origin = f.index(LatticePoint::ORIGIN);
        if !self.occupied[origin] {
            return (0.0, 0.0);
        }
        let level = f.pole.level() - f.h0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, _) in self.occupied.iter().enumerate().filter(|(_, &o)| o) {
            for k in 0..4 {
                let v = match f.edges[i][k] {
                    Edge::Crossing => level,
                    Edge::Puncture => f.h_pole - f.h0,
                    Edge::Open => {
                        let w = (i as isize + f.offset(k)) as usize;
                        if self.occupied[w] {
                            continue;
                        }
                        f.h[w] - f.h0
                    }
                };
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// Launch one particle from the origin and run it until it stops.
pub fn run_stopped_particle<R: RngCore>(cluster: &mut StoppedCluster<'_>, rng: &mut R) -> ParticleRecord {
    let f = cluster.field;
    let mut pos = f.index(LatticePoint::ORIGIN);
    let mut hu = f.h[pos];
    let mut s = 0.0;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut steps = 0u64;
    let mut bits = DirectionBits::new(rng);

    while cluster.occupied[pos] {
        let marks = &f.marks[pos];
        let k = if marks.iter().all(|&d| d == 1.0) {
            bits.next_dir()
        } else {
            split_step(marks, bits.rng_mut()).0
        };
        steps += 1;
        let u = f.point(pos);
        let dir = Direction::ALL[k];
        match f.edges[pos][k] {
            Edge::Open => {
                pos = (pos as isize + f.offset(k)) as usize;
                let hw = f.h[pos];
                s += (hw - hu) * (hw - hu);
                hu = hw;
                lo = lo.min(hu - f.h0);
                hi = hi.max(hu - f.h0);
            }
            Edge::Crossing => {
                let level = f.pole.level();
                s += (level - hu) * (level - hu);
                *cluster.frozen.entry((u, dir)).or_default() += 1;
                let dm = level - f.h0;
                return ParticleRecord {
                    exit: ExitKind::Frozen,
                    point: GridPoint::on_edge(u, dir, f.crossing_frac[pos][k]),
                    delta_m: dm,
                    delta_s: s,
                    h_min: lo.min(dm),
                    h_max: hi.max(dm),
                    steps,
                };
            }
            Edge::Puncture => {
                s += (f.h_pole - hu) * (f.h_pole - hu);
                cluster.absorbed_at_pole += 1;
                let dm = f.h_pole - f.h0;
                return ParticleRecord {
                    exit: ExitKind::Pole,
                    point: GridPoint::vertex(f.pole.zeta),
                    delta_m: dm,
                    delta_s: s,
                    h_min: lo.min(dm),
                    h_max: hi.max(dm),
                    steps,
                };
            }
        }
    }
    cluster.occupied[pos] = true;
    cluster.settled += 1;
    ParticleRecord {
        exit: ExitKind::Settled,
        point: GridPoint::vertex(f.point(pos)),
        delta_m: hu - f.h0,
        delta_s: s,
        h_min: lo,
        h_max: hi,
        steps,
    }
}

/// Per-particle records with the running sums `M(k)` and `S(k)`,
/// `k = 0..=n`.
#[derive(Clone, Debug)]
pub struct MartingaleTrace {
    pub pole: HarmonicPole,
    pub seed: u64,
    pub records: Vec<ParticleRecord>,
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub settled: u64,
    pub frozen: u64,
    pub absorbed_at_pole: u64,
}

impl MartingaleTrace {
    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// CSV export: `k,exit_kind,x,y,frac,delta_M,delta_S,M,S`, where `(x, y)`
    /// is the position of the exit point and `frac` its edge fraction.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,exit_kind,x,y,frac,delta_M,delta_S,M,S")?;
        for (i, r) in self.records.iter().enumerate() {
            let (x, y) = r.point.position();
            writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{:e},{:e}",
                i + 1,
                r.exit.token(),
                x,
                y,
                r.point.frac,
                r.delta_m,
                r.delta_s,
                self.m[i + 1],
                self.s[i + 1]
            )?;
        }
        Ok(())
    }
}

/// Run `n` particles against a prepared field; particle `k` draws from the
/// stream `(seed, k)`.
pub fn trace_on_field(field: &WalkField, n: u64, seed: u64) -> MartingaleTrace {
    let mut cluster = StoppedCluster::new(field);
    let mut records = Vec::with_capacity(n as usize);
    let mut m = vec![0.0];
    let mut s = vec![0.0];
    for k in 1..=n {
        let mut rng = RngStream::new(seed, k).rng();
        let r = run_stopped_particle(&mut cluster, &mut rng);
        m.push(m[m.len() - 1] + r.delta_m);
        s.push(s[s.len() - 1] + r.delta_s);
        records.push(r);
    }
    MartingaleTrace {
        pole: field.pole,
        seed,
        records,
        m,
        s,
        settled: cluster.settled,
        frozen: cluster.frozen_count(),
        absorbed_at_pole: cluster.absorbed_at_pole,
    }
}

pub fn martingale_trace(zeta: LatticePoint, n: u64, seed: u64, table: &KernelTable) -> Result<MartingaleTrace> {
    let pole = HarmonicPole::new(zeta)?;
    let omega = build_omega(&pole, table)?;
    let field = WalkField::new(&omega, table);
    Ok(trace_on_field(&field, n, seed))
}

/// `E e^{λτ}` for the diffusion with generator `d²/dx²` started at 0 and
/// stopped on leaving `(-a, b)`: `cos(√λ x₀)/cos(√λ c)` with `c = (a+b)/2`,
/// `x₀ = (a-b)/2`.
pub fn exit_mgf_exact(a: f64, b: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need a, b > 0 and lambda >= 0 (a = {a}, b = {b}, lambda = {lambda})"
        )));
    }
    let root = lambda.sqrt();
    let c = 0.5 * (a + b);
    if root * c >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::MgfPole(root * c));
    }
    Ok((root * 0.5 * (a - b)).cos() / (root * c).cos())
}

/// The bound `1 + 10 λ a b`, valid for `0 < a <= b` and `√λ (a+b) <= 3`.
pub fn exit_mgf_bound(a: f64, b: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && a <= b && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a <= b and lambda >= 0 (a = {a}, b = {b}, lambda = {lambda})"
        )));
    }
    let x = lambda.sqrt() * (a + b);
    if x > 3.0 {
        return Err(Error::MgfDomain(x));
    }
    Ok(1.0 + 10.0 * lambda * a * b)
}

/// `e^{-k² s / 2}`, the bound on `P(sup_{[0,s]} B ≥ k s)`.
pub fn bm_sup_tail(k: f64, s: f64) -> f64 {
    (-0.5 * k * k * s).exp()
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn from_sums(sum: f64, sum_sq: f64, samples: u64) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
        Estimate {
            mean,
            std_err: (var / n).sqrt(),
            samples,
        }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let sum: f64 = xs.iter().sum();
        let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
        Estimate::from_sums(sum, sum_sq, xs.len() as u64)
    }
}

fn sign_walk_bits<R: RngCore>(rng: &mut R) -> impl FnMut() -> i64 + '_ {
    let mut word = 0u64;
    let mut left = 0u32;
    move || {
        if left == 0 {
            word = rng.next_u64();
            left = 64;
        }
        let b = (word & 1) as i64;
        word >>= 1;
        left -= 1;
        2 * b - 1
    }
}

/// Monte Carlo `E e^{λτ}` in the clock of [`exit_mgf_exact`]: a walk with
/// spacing `1/per_unit` advancing time `1/(2 per_unit²)` per step. Both
/// `a` and `b` are rounded to the grid.
pub fn exit_mgf_monte_carlo(a: f64, b: f64, lambda: f64, per_unit: u32, paths: u64, seed: u64) -> Estimate {
    let lo = -((a * per_unit as f64).round() as i64);
    let hi = (b * per_unit as f64).round() as i64;
    let dt = 0.5 / (per_unit as f64 * per_unit as f64);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for p in 0..paths {
        let mut rng = RngStream::new(seed, p).rng();
        let mut step = sign_walk_bits(&mut rng);
        let mut x = 0i64;
        let mut n = 0u64;
        while x > lo && x < hi {
            x += step();
            n += 1;
        }
        let v = (lambda * dt * n as f64).exp();
        sum += v;
        sum_sq += v * v;
    }
    Estimate::from_sums(sum, sum_sq, paths)
}

/// Monte Carlo `P(sup_{[0,s]} B ≥ k s)` for standard Brownian motion, using
/// `steps` walk increments of size `√(s/steps)`.
pub fn bm_sup_tail_monte_carlo(k: f64, s: f64, steps: u64, paths: u64, seed: u64) -> Estimate {
    // the walk reaches ks iff its integer position reaches ks/√(s/steps)
    let target = (k * (s * steps as f64).sqrt()).ceil() as i64;
    let mut hits = 0u64;
    for p in 0..paths {
        let mut rng = RngStream::new(seed, p).rng();
        let mut step = sign_walk_bits(&mut rng);
        let mut x = 0i64;
        for _ in 0..steps {
            x += step();
            if x >= target {
                hits += 1;
                break;
            }
        }
    }
    let h = hits as f64;
    Estimate::from_sums(h, h, paths)
}
