//! Per-growth statistics and the fluctuation fits across sizes.

use std::f64::consts::PI;

use serde::Serialize;

use crate::engine::GrowthHistory;
use crate::error::Result;
use crate::events::{
    complement_sides_with, detect_early, detect_late, lateness_field, tentacle_scan,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - intercept - slope * x)
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r2,
        residuals,
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Event parameters scanned for every growth.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EventGrid {
    pub early_m: Vec<f64>,
    pub late_ell: Vec<f64>,
    pub tentacle_b: Vec<f64>,
    pub tentacle_m: u32,
}

/// One event row, `trial_seed,n,kind,x,y,param,join_index`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventRow {
    pub trial_seed: u64,
    pub n: u64,
    pub kind: &'static str,
    pub x: i64,
    pub y: i64,
    pub param: f64,
    pub join_index: Option<u32>,
}

impl EventRow {
    pub fn csv(&self) -> String {
        let j = self.join_index.map(|j| j.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.trial_seed, self.n, self.kind, self.x, self.y, self.param, j
        )
    }
}

pub const EVENT_HEADER: &str = "trial_seed,n,kind,x,y,param,join_index";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub n: u64,
    pub trial: u64,
    pub seed: u64,
    pub r: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub deviation_in: f64,
    pub deviation_out: f64,
    pub max_abs_lateness: f64,
    pub early: Vec<usize>,
    pub late: Vec<usize>,
    pub tentacle: Vec<usize>,
    /// Whether both event identities held at every `(m, ℓ)` pair of the grid.
    pub complement_ok: bool,
}

impl TrialStats {
    pub fn max_deviation(&self) -> f64 {
        self.deviation_in.max(self.deviation_out)
    }

    pub fn csv_header(grid: &EventGrid) -> String {
        let mut s = String::from(
            "n,trial,seed,r,inner_radius,outer_radius,deviation_in,deviation_out,max_abs_lateness",
        );
        for m in &grid.early_m {
            s.push_str(&format!(",early_{m}"));
        }
        for l in &grid.late_ell {
            s.push_str(&format!(",late_{l}"));
        }
        for b in &grid.tentacle_b {
            s.push_str(&format!(",tentacle_{b}"));
        }
        s.push_str(",complement_ok");
        s
    }

    pub fn csv(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.trial,
            self.seed,
            self.r,
            self.inner_radius,
            self.outer_radius,
            self.deviation_in,
            self.deviation_out,
            self.max_abs_lateness
        );
        for c in self.early.iter().chain(&self.late).chain(&self.tentacle) {
            s.push_str(&format!(",{c}"));
        }
        s.push_str(if self.complement_ok { ",true" } else { ",false" });
        s
    }
}

/// Radii, lateness and events of one completed growth.
pub fn trial_stats(h: &GrowthHistory, trial: u64, grid: &EventGrid) -> Result<(TrialStats, Vec<EventRow>)> {
    let n = h.n();
    let r = (n as f64 / PI).sqrt();
    let inner = h.inner_radii();
    let outer = h.outer_radii();
    let inner_radius = inner[n as usize - 1];
    let outer_radius = outer[n as usize - 1];
    let max_abs_lateness = lateness_field(h)
        .iter()
        .map(|(_, l)| l.abs())
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    let row = |kind, z: crate::LatticePoint, param, join_index| EventRow {
        trial_seed: h.seed(),
        n,
        kind,
        x: z.x,
        y: z.y,
        param,
        join_index,
    };
    let mut early = Vec::new();
    for &m in &grid.early_m {
        let found = detect_early(h, m, n)?;
        early.push(found.len());
        rows.extend(found.into_iter().map(|(z, j)| row("early", z, m, Some(j))));
    }
    let mut late = Vec::new();
    for &l in &grid.late_ell {
        let found = detect_late(h, l, n)?;
        late.push(found.len());
        rows.extend(found.into_iter().map(|z| row("late", z, l, h.join(z))));
    }
    let mut tentacle = Vec::new();
    for &b in &grid.tentacle_b {
        let found = tentacle_scan(h, n, b, grid.tentacle_m)?;
        tentacle.push(found.len());
        rows.extend(found.into_iter().map(|z| row("tentacle", z, b, h.join(z))));
    }
    let mut complement_ok = true;
    for &m in &grid.early_m {
        for &l in &grid.late_ell {
            complement_ok &= complement_sides_with(h, &inner, &outer, m, l, n)?.holds();
        }
    }
    Ok((
        TrialStats {
            n,
            trial,
            seed: h.seed(),
            r,
            inner_radius,
            outer_radius,
            deviation_in: r - inner_radius,
            deviation_out: outer_radius - r,
            max_abs_lateness,
            early,
            late,
            tentacle,
            complement_ok,
        },
        rows,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: u64,
    pub r: f64,
    pub trials: usize,
    pub mean_max_deviation: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationFit {
    pub sizes: Vec<SizeSummary>,
    /// Mean max-deviation against `ln r`.
    pub log: LinearFit,
    /// Mean max-deviation against `r^{1/3}`.
    pub cube_root: LinearFit,
}

/// Summaries per size and both fits. `per_size` pairs `n` with the max
/// deviations of its trials.
pub fn fit_deviations(per_size: &[(u64, Vec<f64>)]) -> DeviationFit {
    let mut sizes = Vec::new();
    for (n, devs) in per_size {
        let mut sorted = devs.clone();
        sorted.sort_by(f64::total_cmp);
        sizes.push(SizeSummary {
            n: *n,
            r: (*n as f64 / PI).sqrt(),
            trials: devs.len(),
            mean_max_deviation: devs.iter().sum::<f64>() / devs.len() as f64,
            q10: quantile(&sorted, 0.1),
            q50: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            max: sorted.last().copied().unwrap_or(f64::NAN),
        });
    }
    let ys: Vec<f64> = sizes.iter().map(|s| s.mean_max_deviation).collect();
    let logs: Vec<f64> = sizes.iter().map(|s| s.r.ln()).collect();
    let cubes: Vec<f64> = sizes.iter().map(|s| s.r.cbrt()).collect();
    DeviationFit {
        log: least_squares(&logs, &ys),
        cube_root: least_squares(&cubes, &ys),
        sizes,
    }
}

/// Group trial rows by `n` (in first-seen order) into max deviations.
pub fn group_by_size(rows: &[TrialStats]) -> Vec<(u64, Vec<f64>)> {
    let mut out: Vec<(u64, Vec<f64>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(n, _)| *n == r.n) {
            Some((_, v)) => v.push(r.max_deviation()),
            None => out.push((r.n, vec![r.max_deviation()])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let f = least_squares(&xs, &ys);
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.0);
        assert_eq!(quantile(&s, 0.1), 0.4);
        assert_eq!(quantile(&s, 1.0), 4.0);
    }
}
