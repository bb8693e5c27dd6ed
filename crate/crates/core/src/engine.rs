//! IDLA growth on Z² and the radii of the resulting clusters.
//!
//! Particle `k` starts at the origin and performs simple random walk until it
//! first steps onto a site outside `A(k-1)`, which becomes the `k`-th site of
//! the cluster. Walks are never truncated or accelerated.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::rng::{DirectionBits, RngStream};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"IDLA";
pub const SNAPSHOT_VERSION: u16 = 1;

/// Upper bound on the number of cells in an occupancy box.
const MAX_CELLS: u64 = 1 << 31;

/// Join index of every site of a completed run, stored densely over the
/// square `[-half, half]²`. Index 0 means the site never joined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthHistory {
    n: u64,
    seed: u64,
    half: u32,
    join: Vec<u32>,
    sites: Vec<LatticePoint>,
}

/// Default half-side of the occupancy box for `n` particles.
pub fn box_half_side(n: u64) -> u64 {
    (2.0 * (n as f64 / std::f64::consts::PI).sqrt()).ceil() as u64 + 32
}

/// Grow an IDLA cluster of `n` particles.
pub fn idla_grow(n: u64, seed: u64) -> Result<GrowthHistory> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n > u32::MAX as u64 {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds the join-index range")));
    }
    let half = box_half_side(n);
    let side = 2 * half + 1;
    if side * side > MAX_CELLS {
        return Err(Error::MemoryBound { n, half_side: half });
    }
    let half = half as u32;
    let side = side as usize;
    let center = half as usize * side + half as usize;
    let offsets: [isize; 4] = [1, -1, side as isize, -(side as isize)];

    let mut occupied = vec![false; side * side];
    let mut join = vec![0u32; side * side];
    let mut sites = Vec::with_capacity(n as usize);
    let limit = half as i64 - 1;

    for k in 1..=n {
        let mut bits = DirectionBits::new(RngStream::new(seed, k).rng());
        let mut pos = center;
        while occupied[pos] {
            pos = (pos as isize + offsets[bits.next_dir()]) as usize;
        }
        let z = LatticePoint::new(
            (pos % side) as i64 - half as i64,
            (pos / side) as i64 - half as i64,
        );
        if z.x.abs() >= limit || z.y.abs() >= limit {
            return Err(Error::BoxOverflow { n, half_side: half });
        }
        occupied[pos] = true;
        join[pos] = k as u32;
        sites.push(z);
    }
    Ok(GrowthHistory {
        n,
        seed,
        half,
        join,
        sites,
    })
}

impl GrowthHistory {
    /// A history from sites listed in join order. No IDLA law is implied;
    /// see [`Self::validate`] for the structural invariants.
    pub fn from_sites(sites: Vec<LatticePoint>, seed: u64) -> Result<Self> {
        let reach = sites
            .iter()
            .map(|z| z.x.abs().max(z.y.abs()))
            .max()
            .unwrap_or(0) as u64;
        let half = reach.max(box_half_side(sites.len() as u64)) + 2;
        let side = 2 * half + 1;
        if side * side > MAX_CELLS {
            return Err(Error::MemoryBound {
                n: sites.len() as u64,
                half_side: half,
            });
        }
        let mut h = GrowthHistory {
            n: sites.len() as u64,
            seed,
            half: half as u32,
            join: vec![0; (side * side) as usize],
            sites: Vec::new(),
        };
        for (i, &z) in sites.iter().enumerate() {
            let idx = h.index(z).expect("inside box by construction");
            if h.join[idx] != 0 {
                return Err(Error::InvalidArgument(format!("site {z} listed twice")));
            }
            h.join[idx] = i as u32 + 1;
        }
        h.sites = sites;
        Ok(h)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn half_side(&self) -> u32 {
        self.half
    }

    pub fn side(&self) -> usize {
        2 * self.half as usize + 1
    }

    fn index(&self, z: LatticePoint) -> Option<usize> {
        let h = self.half as i64;
        if z.x.abs() > h || z.y.abs() > h {
            return None;
        }
        Some((z.y + h) as usize * self.side() + (z.x + h) as usize)
    }

    /// Point at a dense-array index.
    pub fn point_at(&self, idx: usize) -> LatticePoint {
        let side = self.side();
        let h = self.half as i64;
        LatticePoint::new((idx % side) as i64 - h, (idx / side) as i64 - h)
    }

    /// Join index of `z`, if it ever joined.
    pub fn join(&self, z: LatticePoint) -> Option<u32> {
        self.index(z)
            .map(|i| self.join[i])
            .filter(|&j| j != 0)
    }

    /// Raw row-major join array.
    pub fn join_array(&self) -> &[u32] {
        &self.join
    }

    /// Sites in join order; `sites()[k - 1]` joined at time `k`.
    pub fn sites(&self) -> &[LatticePoint] {
        &self.sites
    }

    /// `z ∈ A(k)`.
    pub fn contains(&self, z: LatticePoint, k: u64) -> bool {
        self.join(z).is_some_and(|j| j as u64 <= k)
    }

    fn check_k(&self, k: u64) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::IndexRange { k, n: self.n });
        }
        Ok(())
    }

    /// `min{|z| : z ∉ A(k)}`, the largest `r` with `B_r ⊆ A(k)`.
    pub fn inner_radius(&self, k: u64) -> Result<f64> {
        self.check_k(k)?;
        let best = self
            .join
            .iter()
            .enumerate()
            .filter(|(_, &j)| j == 0 || j as u64 > k)
            .map(|(i, _)| self.point_at(i).norm_sq())
            .min()
            .expect("the box border never joins");
        Ok((best as f64).sqrt())
    }

    /// `max{|z| : z ∈ A(k)}`.
    pub fn outer_radius(&self, k: u64) -> Result<f64> {
        self.check_k(k)?;
        let best = self.sites[..k as usize]
            .iter()
            .map(|z| z.norm_sq())
            .max()
            .unwrap_or(0);
        Ok((best as f64).sqrt())
    }

    /// `outer_radius(k)` for every `k = 1..=n`.
    pub fn outer_radii(&self) -> Vec<f64> {
        let mut best = 0i64;
        self.sites
            .iter()
            .map(|z| {
                best = best.max(z.norm_sq());
                (best as f64).sqrt()
            })
            .collect()
    }

    /// `inner_radius(k)` for every `k = 1..=n`, by sweeping lattice points in
    /// order of distance from the origin.
    pub fn inner_radii(&self) -> Vec<f64> {
        let mut by_norm: Vec<(i64, u32)> = self
            .join
            .iter()
            .enumerate()
            .map(|(i, &j)| (self.point_at(i).norm_sq(), if j == 0 { u32::MAX } else { j }))
            .collect();
        by_norm.sort_unstable();
        let mut out = Vec::with_capacity(self.n as usize);
        let mut p = 0;
        for k in 1..=self.n {
            while by_norm[p].1 as u64 <= k {
                p += 1;
            }
            out.push((by_norm[p].0 as f64).sqrt());
        }
        out
    }

    /// Check the structural invariants: join 1 at the origin, exactly `n`
    /// sites, and every `A(k)` 4-connected (each new site touches an older
    /// one).
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.sites.len() as u64 != self.n {
            return bad(format!("{} sites for n = {}", self.sites.len(), self.n));
        }
        if self.n == 0 {
            return Ok(());
        }
        if self.sites[0] != LatticePoint::ORIGIN {
            return bad(format!("join index 1 at {}", self.sites[0]));
        }
        let joined = self.join.iter().filter(|&&j| j != 0).count() as u64;
        if joined != self.n {
            return bad(format!("{joined} joined cells for n = {}", self.n));
        }
        for (i, &z) in self.sites.iter().enumerate().skip(1) {
            let k = i as u64 + 1;
            if self.join(z) != Some(k as u32) {
                return bad(format!("site list and join array disagree at {z}"));
            }
            if !z.neighbors().iter().any(|&w| self.contains(w, k - 1)) {
                return bad(format!("site {z} (k = {k}) has no earlier neighbour"));
            }
        }
        Ok(())
    }

    /// Binary snapshot, little-endian: magic `IDLA`, version `u16`, `n: u64`,
    /// `seed: u64`, half-side `u32`, then row-major `u32` join indices.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        out.write_all(&self.n.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.half.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.join.len() * 4);
        for j in &self.join {
            buf.extend_from_slice(&j.to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut head = [0u8; 4 + 2 + 8 + 8 + 4];
        input
            .read_exact(&mut head)
            .map_err(|e| Error::Snapshot(format!("header: {e}")))?;
        if &head[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotVersion {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let n = u64::from_le_bytes(head[6..14].try_into().unwrap());
        let seed = u64::from_le_bytes(head[14..22].try_into().unwrap());
        let half = u32::from_le_bytes(head[22..26].try_into().unwrap());
        let side = 2 * half as u64 + 1;
        if side * side > MAX_CELLS {
            return Err(Error::MemoryBound {
                n,
                half_side: half as u64,
            });
        }
        let cells = (side * side) as usize;
        let mut raw = vec![0u8; cells * 4];
        input
            .read_exact(&mut raw)
            .map_err(|e| Error::Snapshot(format!("body: {e}")))?;
        let join: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing).map_err(|e| Error::Snapshot(e.to_string()))? != 0 {
            return Err(Error::Snapshot("trailing bytes".into()));
        }

        let mut sites = vec![None; n as usize];
        let mut h = GrowthHistory {
            n,
            seed,
            half,
            join,
            sites: Vec::new(),
        };
        for (i, &j) in h.join.iter().enumerate() {
            if j == 0 {
                continue;
            }
            let slot = sites
                .get_mut(j as usize - 1)
                .ok_or_else(|| Error::Snapshot(format!("join index {j} exceeds n = {n}")))?;
            if slot.is_some() {
                return Err(Error::Snapshot(format!("join index {j} repeated")));
            }
            *slot = Some(h.point_at(i));
        }
        h.sites = sites
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::Snapshot(format!("join index {} missing", i + 1))))
            .collect::<Result<_>>()?;
        Ok(h)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_snapshot(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot(std::io::BufReader::new(file))
    }
}

/// Synthetic history in which sites join in order of distance from the
/// origin (ties broken by angle order `(y, x)`): the most circular cluster
/// possible for every `k`.
pub fn packed_ball_history(n: u64) -> GrowthHistory {
    let r = (n as f64 / std::f64::consts::PI).sqrt() + 3.0;
    let mut pts = crate::lattice::ball_points(r);
    pts.sort_by_key(|z| (z.norm_sq(), z.y, z.x));
    pts.truncate(n as usize);
    GrowthHistory::from_sites(pts, 0).expect("ball fits its box")
}
