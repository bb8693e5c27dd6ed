//! Early and late points, the lateness field, thin tentacles, and the
//! shell/tower bookkeeping used to count walk trials near a tentacle.

use std::f64::consts::PI;

use serde::Serialize;

use crate::engine::GrowthHistory;
use crate::error::{Error, Result};
use crate::lattice::{ball_points, LatticePoint};

fn check_n(h: &GrowthHistory, n: u64) -> Result<()> {
    if n > h.n() {
        return Err(Error::IndexRange { k: n, n: h.n() });
    }
    Ok(())
}

/// Latest integer time at which `z` can have joined and still be m-early.
fn early_threshold(z: LatticePoint, m: f64) -> u64 {
    let r = (z.norm() - m).max(0.0);
    (PI * r * r).floor() as u64
}

/// All m-early points among the first `n_max` joins, with their join index.
/// `z` is m-early when `join(z) <= floor(π (|z| - m)²)` and `|z| > m`.
pub fn detect_early(h: &GrowthHistory, m: f64, n_max: u64) -> Result<Vec<(LatticePoint, u32)>> {
    check_n(h, n_max)?;
    Ok(h.sites()[..n_max as usize]
        .iter()
        .enumerate()
        .filter(|&(i, &z)| (i as u64) < early_threshold(z, m))
        .map(|(i, &z)| (z, i as u32 + 1))
        .collect())
}

/// All ℓ-late points for horizon `n_max`: sites `z ∈ B_{√(N/π) - ℓ}` still
/// missing at the first integer time strictly after `π(|z| + ℓ)²`.
pub fn detect_late(h: &GrowthHistory, ell: f64, n_max: u64) -> Result<Vec<LatticePoint>> {
    late_with(h, ell, n_max, |t| t.floor() as u64 + 1)
}

/// [`detect_late`] with the threshold `floor(π(|z| + ℓ)²)` read literally.
/// Differs from it only for sites that join exactly one step after the floor.
pub fn detect_late_floor(h: &GrowthHistory, ell: f64, n_max: u64) -> Result<Vec<LatticePoint>> {
    late_with(h, ell, n_max, |t| t.floor() as u64)
}

fn late_with(
    h: &GrowthHistory,
    ell: f64,
    n_max: u64,
    threshold: impl Fn(f64) -> u64,
) -> Result<Vec<LatticePoint>> {
    check_n(h, n_max)?;
    let r = (n_max as f64 / PI).sqrt() - ell;
    Ok(ball_points(r)
        .into_iter()
        .filter(|&z| {
            let s = z.norm() + ell;
            let t = threshold(PI * s * s);
            h.join(z).is_none_or(|j| j as u64 > t)
        })
        .collect())
}

/// The two sides of each event, computed independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ComplementSides {
    /// No m-early point by the definition.
    pub early_empty: bool,
    /// `A(k) ⊆ B_{√(k/π)+m}` for every `k <= N`.
    pub outer_contained: bool,
    /// No ℓ-late point by the definition.
    pub late_empty: bool,
    /// `B_{√(k/π)-ℓ} ⊆ A(k)` for every `k <= N`.
    pub inner_contained: bool,
}

impl ComplementSides {
    pub fn holds(&self) -> bool {
        self.early_empty == self.outer_contained && self.late_empty == self.inner_contained
    }
}

pub fn complement_sides(h: &GrowthHistory, m: f64, ell: f64, n_max: u64) -> Result<ComplementSides> {
    complement_sides_with(h, &h.inner_radii(), &h.outer_radii(), m, ell, n_max)
}

/// [`complement_sides`] with the running radii supplied by the caller.
pub fn complement_sides_with(
    h: &GrowthHistory,
    inner: &[f64],
    outer: &[f64],
    m: f64,
    ell: f64,
    n_max: u64,
) -> Result<ComplementSides> {
    check_n(h, n_max)?;
    let early_empty = detect_early(h, m, n_max)?.is_empty();
    let late_empty = detect_late(h, ell, n_max)?.is_empty();
    let n = n_max as usize;
    let outer_contained = (1..=n).all(|k| outer[k - 1] < (k as f64 / PI).sqrt() + m);
    let inner_contained = (1..=n).all(|k| inner[k - 1] >= (k as f64 / PI).sqrt() - ell);
    Ok(ComplementSides {
        early_empty,
        outer_contained,
        late_empty,
        inner_contained,
    })
}

/// Whether the definition side and the containment side of both events agree.
pub fn event_complement_check(h: &GrowthHistory, m: f64, ell: f64, n_max: u64) -> Result<bool> {
    Ok(complement_sides(h, m, ell, n_max)?.holds())
}

/// `L(z) = √(join(z)/π) - |z|` for every joined site, in join order.
pub fn lateness_field(h: &GrowthHistory) -> Vec<(LatticePoint, f64)> {
    h.sites()
        .iter()
        .enumerate()
        .map(|(i, &z)| (z, ((i + 1) as f64 / PI).sqrt() - z.norm()))
        .collect()
}

/// Sites `z ∈ A(k)` with `|z| >= m` whose ball `B(z, m)` holds at most
/// `b m²` sites of `A(k)`.
pub fn tentacle_scan(h: &GrowthHistory, k: u64, b: f64, m: u32) -> Result<Vec<LatticePoint>> {
    if m == 0 {
        return Err(Error::InvalidArgument("tentacle radius m must be at least 1".into()));
    }
    if k == 0 || k > h.n() {
        return Err(Error::IndexRange { k, n: h.n() });
    }
    let side = h.side();
    let join = h.join_array();
    // prefix[row][x + 1] = occupied cells in row up to column x
    let mut prefix = vec![0u32; side * (side + 1)];
    for row in 0..side {
        let base = row * (side + 1);
        for col in 0..side {
            let j = join[row * side + col];
            let occ = (j != 0 && j as u64 <= k) as u32;
            prefix[base + col + 1] = prefix[base + col] + occ;
        }
    }
    let m = m as i64;
    let widths: Vec<i64> = (-m + 1..m)
        .map(|dy| {
            let mut w = 0;
            while (w + 1) * (w + 1) + dy * dy < m * m {
                w += 1;
            }
            w
        })
        .collect();
    let half = h.half_side() as i64;
    let limit = b * (m * m) as f64;
    let mut out = Vec::new();
    for &z in &h.sites()[..k as usize] {
        if z.norm_sq() < m * m {
            continue;
        }
        let mut count = 0u64;
        for (i, &w) in widths.iter().enumerate() {
            let y = z.y + i as i64 - m + 1;
            if y.abs() > half {
                continue;
            }
            let row = (y + half) as usize * (side + 1);
            let lo = (z.x - w).max(-half) + half;
            let hi = (z.x + w).min(half) + half;
            if lo <= hi {
                count += (prefix[row + hi as usize + 1] - prefix[row + lo as usize]) as u64;
            }
        }
        if count as f64 <= limit {
            out.push(z);
        }
    }
    Ok(out)
}

/// Occupancy of the square shells `S_j = {x : |x - center|_∞ = m - j}`,
/// indexed from the outside in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShellProfile {
    pub center: LatticePoint,
    pub m: u32,
    pub a: Vec<u64>,
}

pub fn shell_profile(h: &GrowthHistory, k: u64, center: LatticePoint, m: u32) -> ShellProfile {
    let mut a = vec![0u64; m as usize + 1];
    for &z in &h.sites()[..(k.min(h.n()) as usize)] {
        let d = z.linf(center);
        if d <= m as i64 {
            a[m as usize - d as usize] += 1;
        }
    }
    ShellProfile { center, m, a }
}

/// Greedy tower decomposition of a shell profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TowerDecomposition {
    pub beta: Vec<u64>,
    /// `alpha[i]` is the first shell after block `i` (so `alpha[0] = beta[0]`).
    pub alpha: Vec<u64>,
    pub c_prime: f64,
    pub d: u32,
    /// The last block is whatever remained after the greedy search stopped;
    /// it is exempt from the window condition.
    pub unconstrained: bool,
}

impl TowerDecomposition {
    /// `b_j = β_{γ(j)}^{d-1}` where `γ(j)` is the block holding shell `j`.
    pub fn steps(&self) -> Vec<u64> {
        self.beta
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b.pow(self.d - 1), b as usize))
            .collect()
    }

    pub fn energy(&self) -> u64 {
        tower_energy(&self.beta, self.d)
    }

    /// Sum of `a_j` over block `i`.
    pub fn window_sum(&self, a: &[u64], i: usize) -> u64 {
        let start = if i == 0 { 0 } else { self.alpha[i - 1] } as usize;
        a[start..self.alpha[i] as usize].iter().sum()
    }

    /// Re-check the window condition on every constrained block.
    pub fn check_windows(&self, a: &[u64]) -> bool {
        let constrained = self.beta.len() - self.unconstrained as usize;
        (0..constrained).all(|i| window_ok(self.window_sum(a, i), self.beta[i], self.c_prime, self.d))
    }
}

fn window_ok(sum: u64, beta: u64, c_prime: f64, d: u32) -> bool {
    let s = sum as f64;
    let b = beta as f64;
    c_prime * (b / 2.0).powi(d as i32) <= s && s <= c_prime * b.powi(d as i32)
}

/// Take each `β_i` as small as possible subject to
/// `c' (β_i/2)^d <= Σ_{window} a_j <= c' β_i^d`; when no admissible `β`
/// remains, the rest of the shells form one unconstrained final block.
pub fn tower_decompose(profile: &ShellProfile, c_prime: f64) -> Result<TowerDecomposition> {
    const D: u32 = 2;
    if let Some(j) = profile.a.iter().position(|&x| x == 0) {
        return Err(Error::NonpositiveShell { j });
    }
    let a = &profile.a;
    let total = a.len() as u64;
    let mut beta = Vec::new();
    let mut alpha = Vec::new();
    let mut start = 0u64;
    let mut unconstrained = false;
    while start < total {
        let mut sum = 0;
        let mut found = None;
        for b in 1..=total - start {
            sum += a[(start + b - 1) as usize];
            if window_ok(sum, b, c_prime, D) {
                found = Some(b);
                break;
            }
        }
        let b = found.unwrap_or_else(|| {
            unconstrained = true;
            total - start
        });
        start += b;
        beta.push(b);
        alpha.push(start);
    }
    Ok(TowerDecomposition {
        beta,
        alpha,
        c_prime,
        d: D,
        unconstrained,
    })
}

/// `E(β) = Σ i β_i^d` with blocks numbered from 1.
pub fn tower_energy(beta: &[u64], d: u32) -> u64 {
    beta.iter()
        .enumerate()
        .map(|(i, &b)| (i as u64 + 1) * b.pow(d))
        .sum()
}

pub const MAX_EXHAUSTIVE_M: usize = 40;

/// Minimum of `E(β)` over compositions of `m + 1`, with one minimiser.
/// Ties go to the smallest leading block.
pub fn min_tower_energy(m: usize, d: u32) -> Result<(u64, Vec<u64>)> {
    if m > MAX_EXHAUSTIVE_M {
        return Err(Error::SizeLimit {
            m,
            max: MAX_EXHAUSTIVE_M,
        });
    }
    let total = m + 1;
    // best[i][r]: minimal energy placing mass r into blocks i+1, i+2, ...
    let mut best = vec![vec![u64::MAX; total + 1]; total + 2];
    let mut choice = vec![vec![0usize; total + 1]; total + 2];
    for row in best.iter_mut() {
        row[0] = 0;
    }
    for i in (0..total).rev() {
        for r in 1..=total {
            for b in 1..=r {
                let rest = best[i + 1][r - b];
                if rest == u64::MAX {
                    continue;
                }
                let e = (i as u64 + 1) * (b as u64).pow(d) + rest;
                if e < best[i][r] {
                    best[i][r] = e;
                    choice[i][r] = b;
                }
            }
        }
    }
    let mut beta = Vec::new();
    let (mut i, mut r) = (0, total);
    while r > 0 {
        let b = choice[i][r];
        beta.push(b as u64);
        r -= b;
        i += 1;
    }
    Ok((best[0][total], beta))
}

/// Parse a history fixture: one `x y` pair per line in join order; blank
/// lines and `#` comments are ignored.
pub fn parse_sites(text: &str) -> Result<Vec<LatticePoint>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", no + 1)))?;
        match nums[..] {
            [x, y] => out.push(LatticePoint::new(x, y)),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected `x y`",
                    no + 1
                )))
            }
        }
    }
    Ok(out)
}

/// The worked shell example shipped with the crate: centre, radius and
/// history.
pub const SHELL_FIXTURE: &str = include_str!("../fixtures/shell_figure.txt");
pub const SHELL_FIXTURE_CENTER: LatticePoint = LatticePoint::new(20, 0);
pub const SHELL_FIXTURE_M: u32 = 12;

pub fn shell_fixture() -> GrowthHistory {
    let sites = parse_sites(SHELL_FIXTURE).expect("bundled fixture parses");
    GrowthHistory::from_sites(sites, 0).expect("bundled fixture fits")
}
