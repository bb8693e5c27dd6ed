//! The continuum detector `F_ζ`, its discrete counterpart `H_ζ`, and the
//! region `Ω_ζ` on which `H_ζ` exceeds `1/(2ρ)`.
//!
//! `H_ζ` is built from three translated copies of the potential kernel,
//!
//! ```text
//! H_ζ(z) = (π/2) [ α₁ g(z - ζ - 1) + α₂ g(z - ζ - 1 - i) - (α₁ + α₂) g(z - ζ) ]
//! ```
//!
//! for `ζ` in the sector `0 <= y <= x`, with `ζ/ρ = α₁ + α₂(1 + i)`. Other
//! poles are handled by pulling back through the dihedral map that carries
//! `ζ` into the sector. `H_ζ` is discrete harmonic everywhere except at `ζ`,
//! `ζ + 1` and `ζ + 1 + i` (sector coordinates) and is extended linearly
//! along grid edges.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::lattice::{ball_points, Dihedral, Direction, LatticePoint};

/// `Re((ζ/|ζ|) / (ζ - z))`.
pub fn f_zeta(zeta: LatticePoint, z: Complex64) -> Result<f64> {
    let zc = Complex64::new(zeta.x as f64, zeta.y as f64);
    if zeta == LatticePoint::ORIGIN {
        return Err(Error::PoleAtOrigin);
    }
    if zc == z {
        return Err(Error::AtPole(zeta));
    }
    let unit = zc / zc.norm();
    Ok((unit / (zc - z)).re)
}

/// A target `ζ ≠ 0` with its sector coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicPole {
    pub zeta: LatticePoint,
    pub rho: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub sector_map: Dihedral,
    /// `sector_map(ζ)`.
    pub sector_zeta: LatticePoint,
}

impl HarmonicPole {
    pub fn new(zeta: LatticePoint) -> Result<Self> {
        if zeta == LatticePoint::ORIGIN {
            return Err(Error::PoleAtOrigin);
        }
        let sector_map = Dihedral::to_sector(zeta);
        let s = sector_map.apply(zeta);
        let rho = zeta.norm();
        Ok(HarmonicPole {
            zeta,
            rho,
            alpha1: (s.x - s.y) as f64 / rho,
            alpha2: s.y as f64 / rho,
            sector_map,
            sector_zeta: s,
        })
    }

    /// The level `1/(2ρ)` that bounds `Ω_ζ`.
    pub fn level(&self) -> f64 {
        0.5 / self.rho
    }

    /// `ζ + 1` and `ζ + 1 + i` in sector coordinates, pulled back.
    pub fn negative_points(&self) -> [LatticePoint; 2] {
        let s = self.sector_zeta;
        [
            self.sector_map.apply_inverse(s + LatticePoint::new(1, 0)),
            self.sector_map.apply_inverse(s + LatticePoint::new(1, 1)),
        ]
    }

    /// The three points where `H_ζ` fails to be discrete harmonic.
    pub fn exceptional_points(&self) -> [LatticePoint; 3] {
        let [a, b] = self.negative_points();
        [self.zeta, a, b]
    }

    /// The three kernel arguments at `z`, in sector coordinates.
    pub fn kernel_arguments(&self, z: LatticePoint) -> [LatticePoint; 3] {
        let w = self.sector_map.apply(z) - self.sector_zeta;
        [w - LatticePoint::new(1, 0), w - LatticePoint::new(1, 1), w]
    }

    /// `H_ζ` at a vertex.
    pub fn h_vertex(&self, table: &KernelTable, z: LatticePoint) -> f64 {
        let [a, b, c] = self.kernel_arguments(z);
        FRAC_PI_2
            * (self.alpha1 * table.eval(a) + self.alpha2 * table.eval(b)
                - (self.alpha1 + self.alpha2) * table.eval(c))
    }

    /// `H_ζ` at any grid point (linear along edges).
    pub fn h(&self, table: &KernelTable, p: GridPoint) -> f64 {
        match p.direction {
            None => self.h_vertex(table, p.base),
            Some(d) => {
                let h0 = self.h_vertex(table, p.base);
                let h1 = self.h_vertex(table, p.base.step(d));
                (1.0 - p.frac) * h0 + p.frac * h1
            }
        }
    }
}

/// Free-function form of [`HarmonicPole::h`].
pub fn h_zeta(pole: &HarmonicPole, table: &KernelTable, z: GridPoint) -> f64 {
    pole.h(table, z)
}

/// A point of the grid `{x ∈ Z or y ∈ Z}`: a vertex, or the point at
/// fraction `frac` along the edge from `base` in `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub base: LatticePoint,
    pub direction: Option<Direction>,
    pub frac: f64,
}

impl GridPoint {
    pub fn vertex(p: LatticePoint) -> Self {
        GridPoint {
            base: p,
            direction: None,
            frac: 0.0,
        }
    }

    /// A point on an edge; `frac = 1` collapses to the far vertex and
    /// `frac = 0` to `base`.
    pub fn on_edge(base: LatticePoint, dir: Direction, frac: f64) -> Self {
        if frac <= 0.0 {
            GridPoint::vertex(base)
        } else if frac >= 1.0 {
            GridPoint::vertex(base.step(dir))
        } else {
            GridPoint {
                base,
                direction: Some(dir),
                frac,
            }
        }
    }

    pub fn position(&self) -> (f64, f64) {
        match self.direction {
            None => (self.base.x as f64, self.base.y as f64),
            Some(d) => {
                let (dx, dy) = d.offset();
                (
                    self.base.x as f64 + self.frac * dx as f64,
                    self.base.y as f64 + self.frac * dy as f64,
                )
            }
        }
    }
}

/// Where an edge leaving `Ω_ζ` is cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    /// Fraction of the edge, measured from the inside vertex, in `(0, 1]`.
    pub frac: f64,
    /// The edge ends at the removed point `ζ`.
    pub puncture: bool,
}

/// The inside vertices of `Ω_ζ` and the directed edges along which it is cut.
#[derive(Clone, Debug)]
pub struct OmegaRegion {
    pub pole: HarmonicPole,
    half: i64,
    side: usize,
    inside_mask: Vec<bool>,
    h_cache: Vec<f64>,
    inside: Vec<LatticePoint>,
    crossings: BTreeMap<(LatticePoint, Direction), Crossing>,
}

impl OmegaRegion {
    fn index(&self, z: LatticePoint) -> Option<usize> {
        if z.x.abs() > self.half || z.y.abs() > self.half {
            return None;
        }
        Some((z.y + self.half) as usize * self.side + (z.x + self.half) as usize)
    }

    pub fn contains(&self, z: LatticePoint) -> bool {
        self.index(z).is_some_and(|i| self.inside_mask[i])
    }

    /// Inside vertices, sorted by `(y, x)`.
    pub fn inside(&self) -> &[LatticePoint] {
        &self.inside
    }

    pub fn crossings(&self) -> &BTreeMap<(LatticePoint, Direction), Crossing> {
        &self.crossings
    }

    pub fn crossing(&self, u: LatticePoint, d: Direction) -> Option<Crossing> {
        self.crossings.get(&(u, d)).copied()
    }

    /// Half-side of the square box holding all cached values.
    pub fn half_side(&self) -> i64 {
        self.half
    }

    /// Cached `H_ζ` for inside vertices and their neighbours.
    pub fn h_cached(&self, z: LatticePoint) -> Option<f64> {
        let v = self.h_cache[self.index(z)?];
        (!v.is_nan()).then_some(v)
    }

    /// `H_ζ` at `z`, from the cache when possible.
    pub fn h(&self, table: &KernelTable, z: LatticePoint) -> f64 {
        self.h_cached(z)
            .unwrap_or_else(|| self.pole.h_vertex(table, z))
    }

    /// The grid point where the edge `(u, d)` is cut.
    pub fn crossing_point(&self, u: LatticePoint, d: Direction) -> Option<GridPoint> {
        self.crossing(u, d)
            .map(|c| GridPoint::on_edge(u, d, c.frac))
    }

    /// Smallest disc radius `r` with every inside vertex in `B_r`, and the
    /// largest `r` with `B_r ∩ Z² ⊆ inside`.
    pub fn radii(&self) -> (f64, f64) {
        let outer = self
            .inside
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        // the nearest vertex not inside lies next to an inside vertex
        let mut inner = f64::INFINITY;
        for &u in &self.inside {
            for w in u.neighbors() {
                if !self.contains(w) {
                    inner = inner.min(w.norm());
                }
            }
        }
        (inner, outer)
    }

    /// Text dump: `x y` per inside vertex, then `x y dir frac` per crossing.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for z in &self.inside {
            writeln!(out, "{} {}", z.x, z.y)?;
        }
        for ((u, d), c) in &self.crossings {
            writeln!(out, "{} {} {} {:.17e}", u.x, u.y, d.token(), c.frac)?;
        }
        Ok(())
    }
}

/// Flood-fill `Ω_ζ` from the origin.
pub fn build_omega(pole: &HarmonicPole, table: &KernelTable) -> Result<OmegaRegion> {
    let level = pole.level();
    let h0 = pole.h_vertex(table, LatticePoint::ORIGIN);
    if h0 <= level {
        return Err(Error::OriginOutside { rho: pole.rho, h0 });
    }
    let half = (1.5 * pole.rho).ceil() as i64 + 8;
    let side = (2 * half + 1) as usize;
    let mut region = OmegaRegion {
        pole: *pole,
        half,
        side,
        inside_mask: vec![false; side * side],
        h_cache: vec![f64::NAN; side * side],
        inside: Vec::new(),
        crossings: BTreeMap::new(),
    };

    let h_at = |region: &mut OmegaRegion, z: LatticePoint| -> Result<f64> {
        let i = region.index(z).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "region for pole {} escaped its box at {z}",
                pole.zeta
            ))
        })?;
        if region.h_cache[i].is_nan() {
            region.h_cache[i] = pole.h_vertex(table, z);
        }
        Ok(region.h_cache[i])
    };

    let origin = LatticePoint::ORIGIN;
    h_at(&mut region, origin)?;
    let oi = region.index(origin).unwrap();
    region.inside_mask[oi] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        region.inside.push(u);
        let hu = h_at(&mut region, u)?;
        for d in Direction::ALL {
            let w = u.step(d);
            let hw = h_at(&mut region, w)?;
            if w == pole.zeta {
                region.crossings.insert(
                    (u, d),
                    Crossing {
                        frac: 1.0,
                        puncture: true,
                    },
                );
            } else if hw > level {
                let wi = region.index(w).unwrap();
                if !region.inside_mask[wi] {
                    region.inside_mask[wi] = true;
                    queue.push_back(w);
                }
            } else {
                let frac = ((hu - level) / (hu - hw)).clamp(f64::MIN_POSITIVE, 1.0);
                region.crossings.insert(
                    (u, d),
                    Crossing {
                        frac,
                        puncture: false,
                    },
                );
            }
        }
    }
    region.inside.sort_by_key(|z| (z.y, z.x));
    Ok(region)
}

/// Region over which [`mean_value_sum`] runs.
#[derive(Clone, Copy, Debug)]
pub enum SumRegion<'a> {
    Ball(f64),
    Omega(&'a OmegaRegion),
}

/// `Σ (H_ζ(z) - H_ζ(0))` over the lattice points of a disc `B_r` (`r <= ρ`)
/// or of `Ω_ζ`.
pub fn mean_value_sum(pole: &HarmonicPole, table: &KernelTable, region: SumRegion<'_>) -> Result<f64> {
    let h0 = pole.h_vertex(table, LatticePoint::ORIGIN);
    match region {
        SumRegion::Ball(r) => {
            if r > pole.rho {
                return Err(Error::RadiusAbovePole { r, rho: pole.rho });
            }
            Ok(ball_points(r)
                .into_iter()
                .map(|z| pole.h_vertex(table, z) - h0)
                .sum())
        }
        SumRegion::Omega(omega) => Ok(omega
            .inside()
            .iter()
            .map(|&z| omega.h(table, z) - h0)
            .sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel_table;
    use std::sync::OnceLock;

    fn table() -> &'static KernelTable {
        static T: OnceLock<KernelTable> = OnceLock::new();
        T.get_or_init(|| build_kernel_table(96).unwrap())
    }

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn f_zeta_reference_values() {
        let z = LatticePoint::new(5, 0);
        assert!((f_zeta(z, c(0.0, 0.0)).unwrap() - 0.2).abs() < 1e-15);
        assert!((f_zeta(z, c(0.0, 5.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!((f_zeta(z, c(4.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(f_zeta(z, c(5.0, 0.0)), Err(Error::AtPole(_))));
    }

    #[test]
    fn f_zeta_is_half_inverse_radius_on_circle() {
        let z = LatticePoint::new(6, 8);
        for k in 1..12 {
            let t = k as f64 * 0.5;
            let w = c(10.0 * t.cos(), 10.0 * t.sin());
            if (w - c(6.0, 8.0)).norm() < 1e-6 {
                continue;
            }
            assert!((f_zeta(z, w).unwrap() - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients() {
        let p = HarmonicPole::new(LatticePoint::new(-4, 6)).unwrap();
        assert_eq!(p.sector_zeta, LatticePoint::new(6, 4));
        assert!(p.alpha1 >= 0.0 && p.alpha2 >= 0.0);
        let s = (p.alpha1 + p.alpha2).powi(2) + p.alpha2.powi(2);
        assert!((s - 1.0).abs() < 1e-14);
        assert!(HarmonicPole::new(LatticePoint::ORIGIN).is_err());
    }

    #[test]
    fn pole_values() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(1, 0)).unwrap();
        assert!((p.h_vertex(t, p.zeta) - FRAC_PI_2).abs() < 1e-14);
        let p = HarmonicPole::new(LatticePoint::new(1, 1)).unwrap();
        assert!((p.h_vertex(t, p.zeta) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn signs_near_pole() {
        let t = table();
        for zeta in [(3, 0), (6, 4), (5, 5), (-7, 2), (0, -9), (2, -11)] {
            let p = HarmonicPole::new(zeta.into()).unwrap();
            let [a, b] = p.negative_points();
            // H(ζ+1) = -(π/2) α₁, which vanishes on the diagonal
            let ha = p.h_vertex(t, a);
            assert!((ha + FRAC_PI_2 * p.alpha1).abs() < 1e-13, "{zeta:?}");
            assert!(ha < p.level());
            if p.alpha1 > 0.0 {
                assert!(ha < 0.0, "{zeta:?}");
            }
            assert!(p.h_vertex(t, b) < 0.0, "{zeta:?}");
            let hz = p.h_vertex(t, p.zeta);
            assert!((1.0..=2.0).contains(&hz));
        }
    }

    #[test]
    fn dihedral_covariance_is_exact() {
        let t = table();
        for zeta in [(7, 0), (6, 4), (5, 5), (3, -8)] {
            let zeta = LatticePoint::from(zeta);
            let p = HarmonicPole::new(zeta).unwrap();
            for phi in Dihedral::all() {
                let q = HarmonicPole::new(phi.apply(zeta)).unwrap();
                for x in -12..=12 {
                    for y in -12..=12 {
                        let z = LatticePoint::new(x, y);
                        assert_eq!(p.h_vertex(t, z), q.h_vertex(t, phi.apply(z)));
                    }
                }
            }
        }
    }

    #[test]
    fn omega_for_illustrated_pole() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(6, 4)).unwrap();
        let omega = build_omega(&p, t).unwrap();
        assert!(omega.contains(LatticePoint::ORIGIN));
        assert!(!omega.contains(p.zeta));
        assert!(!omega.contains(LatticePoint::new(7, 4)));
        assert!(!omega.contains(LatticePoint::new(7, 5)));
        // ζ is reached from inside through a punctured edge
        assert!(omega.crossings().values().any(|c| c.puncture));
        for &z in omega.inside() {
            assert!(omega.h(t, z) > p.level());
        }
    }

    #[test]
    fn crossings_sit_on_the_level_set() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(13, 9)).unwrap();
        let omega = build_omega(&p, t).unwrap();
        for (&(u, d), c) in omega.crossings() {
            if c.puncture {
                assert_eq!(u.step(d), p.zeta);
                continue;
            }
            let gp = GridPoint {
                base: u,
                direction: Some(d),
                frac: c.frac,
            };
            assert!((h_zeta(&p, t, gp) - p.level()).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_is_connected_component() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(-9, -3)).unwrap();
        let omega = build_omega(&p, t).unwrap();
        // brute force: component of the origin in {H > level} \ {ζ}
        let half = 20;
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![LatticePoint::ORIGIN];
        seen.insert(LatticePoint::ORIGIN);
        while let Some(u) = stack.pop() {
            for w in u.neighbors() {
                if w.x.abs() > half || w.y.abs() > half || w == p.zeta || seen.contains(&w) {
                    continue;
                }
                if p.h_vertex(t, w) > p.level() {
                    seen.insert(w);
                    stack.push(w);
                }
            }
        }
        assert_eq!(seen.len(), omega.inside().len());
        assert!(omega.inside().iter().all(|z| seen.contains(z)));
    }

    #[test]
    fn unit_ball_sum_is_zero() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(20, 0)).unwrap();
        assert_eq!(mean_value_sum(&p, t, SumRegion::Ball(1.0)).unwrap(), 0.0);
        assert!(mean_value_sum(&p, t, SumRegion::Ball(21.0)).is_err());
    }

    #[test]
    fn omega_vs_ball_sum_difference_is_the_symmetric_difference() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(30, 0)).unwrap();
        let omega = build_omega(&p, t).unwrap();
        let s_ball = mean_value_sum(&p, t, SumRegion::Ball(p.rho)).unwrap();
        let s_omega = mean_value_sum(&p, t, SumRegion::Omega(&omega)).unwrap();
        // brute-force oracle: sum over the symmetric difference only
        let h0 = p.h_vertex(t, LatticePoint::ORIGIN);
        let mut diff = 0.0;
        for x in -40..=40i64 {
            for y in -40..=40i64 {
                let z = LatticePoint::new(x, y);
                let in_o = omega.contains(z);
                let in_b = z.in_ball(p.rho);
                if in_o && !in_b {
                    diff += p.h_vertex(t, z) - h0;
                } else if in_b && !in_o {
                    diff -= p.h_vertex(t, z) - h0;
                }
            }
        }
        assert!((s_omega - s_ball - diff).abs() < 1e-9);
    }

    #[test]
    fn dump_lists_inside_then_crossings() {
        let t = table();
        let p = HarmonicPole::new(LatticePoint::new(4, 0)).unwrap();
        let omega = build_omega(&p, t).unwrap();
        let mut buf = Vec::new();
        omega.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), omega.inside().len() + omega.crossings().len());
        assert_eq!(lines[0].split(' ').count(), 2);
        assert_eq!(lines.last().unwrap().split(' ').count(), 4);
    }
}
