//! Points of Z², the dihedral group acting on them, and lattice balls.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A vertex of Z², identified with `x + iy`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Sup-norm distance to `other`.
    pub fn linf(self, other: LatticePoint) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    /// Membership in the open lattice ball `B_r = {x² + y² < r²}`.
    pub fn in_ball(self, r: f64) -> bool {
        r > 0.0 && (self.norm_sq() as f64) < r * r
    }

    pub fn neighbors(self) -> [LatticePoint; 4] {
        Direction::ALL.map(|d| self.step(d))
    }

    pub fn step(self, dir: Direction) -> LatticePoint {
        let (dx, dy) = dir.offset();
        LatticePoint::new(self.x + dx, self.y + dy)
    }
}

impl std::ops::Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from((x, y): (i64, i64)) -> Self {
        LatticePoint::new(x, y)
    }
}

/// The four lattice directions, in the fixed order used everywhere a
/// per-direction array appears (`+x, -x, +y, -y`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::PlusX,
        Direction::MinusX,
        Direction::PlusY,
        Direction::MinusY,
    ];

    pub fn offset(self) -> (i64, i64) {
        match self {
            Direction::PlusX => (1, 0),
            Direction::MinusX => (-1, 0),
            Direction::PlusY => (0, 1),
            Direction::MinusY => (0, -1),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::PlusX => Direction::MinusX,
            Direction::MinusX => Direction::PlusX,
            Direction::PlusY => Direction::MinusY,
            Direction::MinusY => Direction::PlusY,
        }
    }

    /// Short token used by the text dumps: `+x`, `-x`, `+y`, `-y`.
    pub fn token(self) -> &'static str {
        match self {
            Direction::PlusX => "+x",
            Direction::MinusX => "-x",
            Direction::PlusY => "+y",
            Direction::MinusY => "-y",
        }
    }

    pub fn from_token(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.token() == s)
    }
}

/// One of the eight symmetries of the square lattice fixing the origin:
/// optional sign flips of each coordinate followed by an optional swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dihedral {
    pub neg_x: bool,
    pub neg_y: bool,
    pub swap: bool,
}

impl Dihedral {
    pub const IDENTITY: Dihedral = Dihedral {
        neg_x: false,
        neg_y: false,
        swap: false,
    };

    pub fn all() -> [Dihedral; 8] {
        let mut out = [Dihedral::IDENTITY; 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Dihedral {
                neg_x: i & 1 != 0,
                neg_y: i & 2 != 0,
                swap: i & 4 != 0,
            };
        }
        out
    }

    pub fn apply(self, p: LatticePoint) -> LatticePoint {
        let x = if self.neg_x { -p.x } else { p.x };
        let y = if self.neg_y { -p.y } else { p.y };
        if self.swap {
            LatticePoint::new(y, x)
        } else {
            LatticePoint::new(x, y)
        }
    }

    pub fn apply_inverse(self, p: LatticePoint) -> LatticePoint {
        let (x, y) = if self.swap { (p.y, p.x) } else { (p.x, p.y) };
        LatticePoint::new(
            if self.neg_x { -x } else { x },
            if self.neg_y { -y } else { y },
        )
    }

    /// The symmetry carrying `p` into the sector `0 <= y <= x`.
    pub fn to_sector(p: LatticePoint) -> Dihedral {
        let neg_x = p.x < 0;
        let neg_y = p.y < 0;
        let swap = p.y.abs() > p.x.abs();
        Dihedral { neg_x, neg_y, swap }
    }
}

/// Reduce a point to its canonical representative `0 <= y <= x`.
pub fn canonical(p: LatticePoint) -> LatticePoint {
    let (a, b) = (p.x.abs(), p.y.abs());
    if b > a {
        LatticePoint::new(b, a)
    } else {
        LatticePoint::new(a, b)
    }
}

/// Largest integer `k >= 0` with `k² < bound` (bound > 0), i.e. the half-width
/// of a row of the open ball.
fn isqrt_strict(bound: i64) -> i64 {
    if bound <= 0 {
        return -1;
    }
    let mut k = ((bound as f64).sqrt()) as i64;
    while k * k >= bound {
        k -= 1;
    }
    while (k + 1) * (k + 1) < bound {
        k += 1;
    }
    k
}

/// All lattice points of `B_r`, enumerated row by row (increasing y, then x).
/// Only integer `r²` is handled exactly; for general real `r` the row bounds
/// come from the same strict comparison used by [`LatticePoint::in_ball`].
pub fn ball_points(r: f64) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    if r <= 0.0 {
        return out;
    }
    let ymax = r.ceil() as i64;
    for y in -ymax..=ymax {
        let half = row_half_width(r, y);
        if half < 0 {
            continue;
        }
        for x in -half..=half {
            out.push(LatticePoint::new(x, y));
        }
    }
    out
}

/// Number of lattice points in `B_r`.
pub fn ball_count(r: f64) -> usize {
    if r <= 0.0 {
        return 0;
    }
    let ymax = r.ceil() as i64;
    (-ymax..=ymax)
        .map(|y| row_half_width(r, y))
        .filter(|&h| h >= 0)
        .map(|h| (2 * h + 1) as usize)
        .sum()
}

fn row_half_width(r: f64, y: i64) -> i64 {
    let r2 = r * r;
    if r2.fract() == 0.0 && r2 < 9.0e15 {
        return isqrt_strict(r2 as i64 - y * y);
    }
    // non-integral r²: scan around the float estimate
    let rem = r2 - (y * y) as f64;
    if rem <= 0.0 {
        return -1;
    }
    let mut k = rem.sqrt() as i64;
    while k >= 0 && !LatticePoint::new(k, y).in_ball(r) {
        k -= 1;
    }
    while LatticePoint::new(k + 1, y).in_ball(r) {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_is_strict() {
        assert!(!LatticePoint::new(5, 0).in_ball(5.0));
        assert!(LatticePoint::new(4, 2).in_ball(5.0));
        assert!(!LatticePoint::new(3, 4).in_ball(5.0));
        assert_eq!(ball_points(1.0), vec![LatticePoint::ORIGIN]);
    }

    #[test]
    fn ball_count_matches_brute_force() {
        for r in [0.5, 1.0, 1.5, 2.0, 3.7, 5.0, 10.0, 17.3] {
            let brute = (-20..=20)
                .flat_map(|y| (-20..=20).map(move |x| LatticePoint::new(x, y)))
                .filter(|p| p.in_ball(r))
                .count();
            assert_eq!(ball_count(r), brute, "r = {r}");
            assert_eq!(ball_points(r).len(), brute, "r = {r}");
        }
    }

    #[test]
    fn sector_map_lands_in_sector() {
        for x in -6..=6 {
            for y in -6..=6 {
                let p = LatticePoint::new(x, y);
                let q = Dihedral::to_sector(p).apply(p);
                assert!(0 <= q.y && q.y <= q.x, "{p} -> {q}");
                assert_eq!(q, canonical(p));
            }
        }
    }

    #[test]
    fn dihedral_group_has_eight_distinct_elements() {
        let p = LatticePoint::new(2, 1);
        let mut images: Vec<_> = Dihedral::all().iter().map(|d| d.apply(p)).collect();
        images.sort();
        images.dedup();
        assert_eq!(images.len(), 8);
        for phi in Dihedral::all() {
            assert_eq!(phi.apply_inverse(phi.apply(p)), p);
        }
    }
}
