//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "1", "master seed; per-trial seeds are derived from it"),
    ("trials", "30", "growths per size (simulate), seeds per pole (martingale)"),
    ("sizes", "10000,40000,100000,200000", "particle counts for simulate"),
    ("out_dir", "idla-out", "directory for snapshots and reports"),
    ("threads", "0", "worker threads; 0 uses every available core"),
    ("snapshots", "true", "write a binary snapshot per growth"),
    ("kernel_r0", "64", "exact radius of the potential-kernel table"),
    ("kernel_dump", "false", "also write the kernel table as text"),
    ("early_m", "2,4,8", "m values for early-point detection"),
    ("late_ell", "2,4,8", "ell values for late-point detection"),
    ("tentacle_b", "0.05,0.1,0.2", "density thresholds for tentacle scans"),
    ("tentacle_m", "20", "ball radius for tentacle scans"),
    ("harmonic_radii", "10,20,50,100,200", "pole moduli for the harmonic sweep"),
    ("harmonic_directions", "16", "pole directions per modulus"),
    ("zetas", "10:0,20:12,0:40", "poles for martingale traces, as x:y"),
    ("mg_fill", "1", "particles per trace as a fraction of pi rho^2"),
    ("mg_checkpoints", "8", "evenly spaced checkpoints per trace"),
    ("tower_c_prime", "0.5", "window constant c' of the tower decomposition"),
    ("tower_fixture", "", "history file for the tower check; empty uses the bundled example"),
    ("tower_center", "20:0", "shell centre for the tower check"),
    ("tower_m", "12", "shell radius for the tower check"),
    ("tower_energy_range", "10,40", "m range for the minimal-energy floor"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub seed: u64,
    pub trials: u64,
    pub sizes: Vec<u64>,
    // Where and how fast a run happens is left out of reports so that
    // outputs compare byte-for-byte across machines.
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub threads: usize,
    pub snapshots: bool,
    pub kernel_r0: usize,
    pub kernel_dump: bool,
    pub early_m: Vec<f64>,
    pub late_ell: Vec<f64>,
    pub tentacle_b: Vec<f64>,
    pub tentacle_m: u32,
    pub harmonic_radii: Vec<f64>,
    pub harmonic_directions: u32,
    pub zetas: Vec<LatticePoint>,
    pub mg_fill: f64,
    pub mg_checkpoints: usize,
    pub tower_c_prime: f64,
    pub tower_fixture: Option<PathBuf>,
    pub tower_center: LatticePoint,
    pub tower_m: u32,
    pub tower_energy_range: (usize, usize),
}

impl Default for Config {
    fn default() -> Self {
        let mut c = Config {
            seed: 0,
            trials: 0,
            sizes: Vec::new(),
            out_dir: PathBuf::new(),
            threads: 0,
            snapshots: false,
            kernel_r0: 0,
            kernel_dump: false,
            early_m: Vec::new(),
            late_ell: Vec::new(),
            tentacle_b: Vec::new(),
            tentacle_m: 0,
            harmonic_radii: Vec::new(),
            harmonic_directions: 0,
            zetas: Vec::new(),
            mg_fill: 0.0,
            mg_checkpoints: 0,
            tower_c_prime: 0.0,
            tower_fixture: None,
            tower_center: LatticePoint::ORIGIN,
            tower_m: 0,
            tower_energy_range: (0, 0),
        };
        for (k, v, _) in KEYS {
            c.set(k, v).expect("defaults parse");
        }
        c
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {what}"))
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(key, value, "cannot parse"))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let out: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| scalar(key, s))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(bad(key, value, "empty list"));
    }
    Ok(out)
}

fn point(key: &str, value: &str) -> Result<LatticePoint> {
    let (x, y) = value
        .trim()
        .split_once(':')
        .ok_or_else(|| bad(key, value, "expected x:y"))?;
    Ok(LatticePoint::new(scalar(key, x)?, scalar(key, y)?))
}

impl Config {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = scalar(key, value)?,
            "trials" => self.trials = scalar(key, value)?,
            "sizes" => self.sizes = list(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "threads" => self.threads = scalar(key, value)?,
            "snapshots" => self.snapshots = scalar(key, value)?,
            "kernel_r0" => self.kernel_r0 = scalar(key, value)?,
            "kernel_dump" => self.kernel_dump = scalar(key, value)?,
            "early_m" => self.early_m = list(key, value)?,
            "late_ell" => self.late_ell = list(key, value)?,
            "tentacle_b" => self.tentacle_b = list(key, value)?,
            "tentacle_m" => self.tentacle_m = scalar(key, value)?,
            "harmonic_radii" => self.harmonic_radii = list(key, value)?,
            "harmonic_directions" => self.harmonic_directions = scalar(key, value)?,
            "zetas" => {
                self.zetas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| point(key, s))
                    .collect::<Result<_>>()?
            }
            "mg_fill" => self.mg_fill = scalar(key, value)?,
            "mg_checkpoints" => self.mg_checkpoints = scalar(key, value)?,
            "tower_c_prime" => self.tower_c_prime = scalar(key, value)?,
            "tower_fixture" => {
                let v = value.trim();
                self.tower_fixture = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            "tower_center" => self.tower_center = point(key, value)?,
            "tower_m" => self.tower_m = scalar(key, value)?,
            "tower_energy_range" => {
                let v: Vec<usize> = list(key, value)?;
                match v[..] {
                    [lo, hi] if lo <= hi => self.tower_energy_range = (lo, hi),
                    _ => return Err(bad(key, value, "expected lo,hi")),
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key = value` file on top of the current values. `#` starts a
    /// comment; blank lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Config::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    /// Default-value table for `--help`.
    pub fn help_table() -> String {
        let width = KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
        let mut s = String::from("Config keys (flat `key = value` file):\n");
        for (k, v, d) in KEYS {
            s.push_str(&format!("  {k:width$}  {d} [default: {v}]\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = Config::default();
        assert_eq!(c.trials, 30);
        assert_eq!(c.zetas[1], LatticePoint::new(20, 12));
        assert_eq!(c.tower_fixture, None);
        assert_eq!(c.tower_energy_range, (10, 40));
    }

    #[test]
    fn file_overrides_and_rejects_unknown_keys() {
        let mut c = Config::default();
        c.apply_text("# comment\nseed = 9\nsizes = 100, 200 # trailing\n\n").unwrap();
        assert_eq!((c.seed, c.sizes.clone()), (9, vec![100, 200]));
        let err = c.apply_text("sedd = 3").unwrap_err();
        assert!(err.to_string().contains("sedd"));
        assert!(c.apply_text("trials = many").is_err());
        assert!(c.apply_text("zetas = 3;4").is_err());
        assert!(c.apply_text("no equals sign").is_err());
    }

    #[test]
    fn help_lists_every_key() {
        let h = Config::help_table();
        for (k, _, _) in KEYS {
            assert!(h.contains(k));
        }
    }
}
