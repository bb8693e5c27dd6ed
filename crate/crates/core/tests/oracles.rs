//! Independent reference computations checked against the library.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use idla::engine::idla_grow;
use idla::kernel::{build_kernel_table, fit_lambda};
use idla::martingale::{split_probabilities, split_step};
use idla::rng::{DirectionBits, RngStream};
use idla::LatticePoint;

fn pt(x: i64, y: i64) -> LatticePoint {
    LatticePoint::new(x, y)
}

/// Exit law of simple random walk from `start` out of a finite set `a`,
/// by iterating the sub-stochastic transfer operator until the mass left
/// inside `a` is negligible.
fn exit_law(a: &[LatticePoint], start: LatticePoint) -> BTreeMap<LatticePoint, f64> {
    let mut inside: BTreeMap<LatticePoint, f64> = BTreeMap::from([(start, 1.0)]);
    let mut out: BTreeMap<LatticePoint, f64> = BTreeMap::new();
    while inside.values().sum::<f64>() > 1e-15 {
        let mut next = BTreeMap::new();
        for (&z, &p) in &inside {
            for w in z.neighbors() {
                let slot = if a.contains(&w) { &mut next } else { &mut out };
                *slot.entry(w).or_insert(0.0) += p / 4.0;
            }
        }
        inside = next;
    }
    out
}

#[test]
fn three_particle_shapes_match_absorbing_chain() {
    let mut exact: BTreeMap<Vec<LatticePoint>, f64> = BTreeMap::new();
    for e in LatticePoint::ORIGIN.neighbors() {
        let a2 = [LatticePoint::ORIGIN, e];
        for (w, p) in exit_law(&a2, LatticePoint::ORIGIN) {
            let mut shape = vec![LatticePoint::ORIGIN, e, w];
            shape.sort();
            *exact.entry(shape).or_insert(0.0) += 0.25 * p;
        }
    }
    assert_eq!(exact.len(), 18);
    assert!((exact.values().sum::<f64>() - 1.0).abs() < 1e-12);

    let trials = 100_000u64;
    let mut counts: BTreeMap<Vec<LatticePoint>, u64> = BTreeMap::new();
    for seed in 0..trials {
        let h = idla_grow(3, seed).unwrap();
        let mut shape = h.sites().to_vec();
        shape.sort();
        *counts.entry(shape).or_insert(0) += 1;
    }
    assert!(counts.keys().all(|k| exact.contains_key(k)));
    // Pearson chi-square over 18 cells; 40.79 is the 0.999 quantile at 17 dof.
    let mut chi2 = 0.0;
    for (shape, p) in &exact {
        let c = *counts.get(shape).unwrap_or(&0) as f64;
        let e = trials as f64 * p;
        chi2 += (c - e) * (c - e) / e;
        assert!((c - e).abs() <= 4.0 * (e * (1.0 - p)).sqrt(), "{shape:?}: {c} vs {e}");
    }
    assert!(chi2 < 40.79, "chi2 = {chi2}");
}

/// Simple random walk on a star of four arms subdivided into `lengths[i]`
/// segments, started at the hub and stopped at an arm tip.
fn star_walk(lengths: [u32; 4], seed: u64) -> usize {
    let mut bits = DirectionBits::new(RngStream::new(seed, 0).rng());
    loop {
        let arm = bits.next_dir();
        let mut k = 1u32;
        while k > 0 && k < lengths[arm] {
            if bits.next_dir() & 1 == 0 {
                k += 1;
            } else {
                k -= 1;
            }
        }
        if k == lengths[arm] {
            return arm;
        }
    }
}

#[test]
fn split_step_matches_fine_grid_walk() {
    let per_unit = 20;
    let marks = [0.5, 1.0, 1.0, 1.0];
    let lengths = marks.map(|d| (d * per_unit as f64) as u32);
    let target = [0.4, 0.2, 0.2, 0.2];
    for (p, t) in split_probabilities(&marks).iter().zip(target) {
        assert!((p - t).abs() < 1e-15);
    }

    let walks = 100_000u64;
    let mut fine = [0u64; 4];
    for s in 0..walks {
        fine[star_walk(lengths, s)] += 1;
    }
    let draws = 1_000_000u64;
    let mut coarse = [0u64; 4];
    let mut rng = RngStream::new(77, 0).rng();
    for _ in 0..draws {
        coarse[split_step(&marks, &mut rng).0] += 1;
    }
    for i in 0..4 {
        let p = target[i];
        let f = fine[i] as f64 / walks as f64;
        let c = coarse[i] as f64 / draws as f64;
        let sf = (p * (1.0 - p) / walks as f64).sqrt();
        let sc = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((f - p).abs() <= 3.0 * sf, "fine arm {i}: {f}");
        assert!((c - p).abs() <= 3.0 * sc, "split arm {i}: {c}");
        assert!((f - c).abs() <= 3.0 * (sf * sf + sc * sc).sqrt());
    }
}

/// `g(z) = (2π)^{-2} ∫∫ (1 - cos(x θ₁ + y θ₂)) / (1 - (cos θ₁ + cos θ₂)/2)`
/// by the midpoint rule; the integrand is bounded, so the rule converges.
fn kernel_by_quadrature(z: LatticePoint, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let t1 = -PI + (i as f64 + 0.5) * h;
        let c1 = t1.cos();
        for j in 0..n {
            let t2 = -PI + (j as f64 + 0.5) * h;
            let denom = 1.0 - 0.5 * (c1 + t2.cos());
            sum += (1.0 - (z.x as f64 * t1 + z.y as f64 * t2).cos()) / denom;
        }
    }
    sum * h * h / (4.0 * PI * PI)
}

#[test]
fn kernel_matches_fourier_integral() {
    let table = build_kernel_table(32).unwrap();
    for z in [pt(1, 0), pt(2, 1), pt(3, 3), pt(5, 2), pt(9, 0), pt(12, 7)] {
        let q = kernel_by_quadrature(z, 1600);
        let g = table.exact_f64(z).unwrap();
        assert!((q - g).abs() < 2e-5, "{z}: quadrature {q} vs table {g}");
    }
}

#[test]
fn lambda_agrees_with_larger_table_and_classical_constant() {
    let small = fit_lambda(&build_kernel_table(64).unwrap());
    let large = fit_lambda(&build_kernel_table(256).unwrap());
    assert!(small.spread < 1e-3);
    assert!((small.lambda - large.lambda).abs() < 1e-4, "{small:?} {large:?}");
    // (2γ + 3 ln 2)/π, the known additive constant for the square lattice
    let euler_gamma = 0.577_215_664_901_532_9;
    let classical = (2.0 * euler_gamma + 3.0 * 2f64.ln()) / PI;
    assert!((large.lambda - classical).abs() < 1e-5, "{} vs {classical}", large.lambda);
}
