use std::path::PathBuf;

use crate::lattice::LatticePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("kernel table radius must be at least 2, got {0}")]
    KernelRadius(usize),

    #[error("pole must not be the origin")]
    PoleAtOrigin,

    #[error("z coincides with the pole {0}")]
    AtPole(LatticePoint),

    #[error("origin is outside the detector region for rho = {rho:.3} (H(0) = {h0:.6} <= 1/(2 rho))")]
    OriginOutside { rho: f64, h0: f64 },

    #[error("ball radius {r} exceeds pole modulus {rho}")]
    RadiusAbovePole { r: f64, rho: f64 },

    #[error("cluster of {n} particles overflowed the box of half-side {half_side}")]
    BoxOverflow { n: u64, half_side: u32 },

    #[error("cannot allocate occupancy box of half-side {half_side} for n = {n}")]
    MemoryBound { n: u64, half_side: u64 },

    #[error("index {k} outside 1..={n}")]
    IndexRange { k: u64, n: u64 },

    #[error("shell {j} is empty; tower decomposition needs every a_j >= 1")]
    NonpositiveShell { j: usize },

    #[error("exhaustive tower minimisation is limited to m <= {max}, got {m}")]
    SizeLimit { m: usize, max: usize },

    #[error("cosine pole: sqrt(lambda) * c = {0:.6} >= pi/2")]
    MgfPole(f64),

    #[error("outside the exit-time bound domain: sqrt(lambda) (a + b) = {0:.6} > 3")]
    MgfDomain(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("snapshot version {found} is not supported (expected {expected})")]
    SnapshotVersion { found: u16, expected: u16 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
