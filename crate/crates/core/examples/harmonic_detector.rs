//! Detector field and its region for one pole.
//!
//! cargo run --release --example harmonic_detector -- 30 17

use idla::harmonic::{build_omega, mean_value_sum, HarmonicPole, SumRegion};
use idla::kernel::build_kernel_table;
use idla::LatticePoint;

fn main() -> idla::Result<()> {
    let args: Vec<i64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let zeta = LatticePoint::new(*args.first().unwrap_or(&30), *args.get(1).unwrap_or(&17));
    let pole = HarmonicPole::new(zeta)?;
    let table = build_kernel_table((2.0 * pole.rho).ceil() as usize + 16)?;
    let [right, diag] = pole.negative_points();
    println!("zeta = {zeta}, |zeta| = {:.3}, level = {:.6}", pole.rho, pole.level());
    println!("H(zeta) = {:.6}", pole.h_vertex(&table, zeta));
    println!("H({right}) = {:.6e}, H({diag}) = {:.6e}", pole.h_vertex(&table, right), pole.h_vertex(&table, diag));
    println!("H(0) = {:.6}  vs 1/|zeta| = {:.6}", pole.h_vertex(&table, LatticePoint::ORIGIN), 1.0 / pole.rho);

    let omega = build_omega(&pole, &table)?;
    let (inner, outer) = omega.radii();
    println!(
        "Omega: {} sites, {} boundary crossings, between radii {inner:.3} and {outer:.3}",
        omega.inside().len(),
        omega.crossings().len()
    );
    for f in [0.25, 0.5, 0.75, 1.0] {
        let s = mean_value_sum(&pole, &table, SumRegion::Ball(f * pole.rho))?;
        println!("sum of H - H(0) over ball {:.1}: {s:+.5}", f * pole.rho);
    }
    println!("sum over Omega: {:+.5}", mean_value_sum(&pole, &table, SumRegion::Omega(&omega))?);
    Ok(())
}
