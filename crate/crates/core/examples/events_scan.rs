//! Early and late points, lateness extremes and thin tentacles of a cluster.
//!
//! cargo run --release --example events_scan -- 30000 3

use idla::engine::idla_grow;
use idla::events::{complement_sides, detect_early, detect_late, lateness_field, tentacle_scan};

fn main() -> idla::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let n = *args.first().unwrap_or(&30_000);
    let h = idla_grow(n, *args.get(1).unwrap_or(&3))?;

    for m in [0.5, 1.0, 2.0, 4.0] {
        let early = detect_early(&h, m, n)?;
        let late = detect_late(&h, m, n)?;
        let sides = complement_sides(&h, m, m, n)?;
        println!(
            "m = l = {m}: {} early, {} late, sides agree: {}",
            early.len(),
            late.len(),
            sides.holds()
        );
    }
    let field = lateness_field(&h);
    let (most_late, least_late) = field.iter().fold((field[0], field[0]), |(hi, lo), &p| {
        (if p.1 > hi.1 { p } else { hi }, if p.1 < lo.1 { p } else { lo })
    });
    println!("latest site {} (L = {:.3}), earliest site {} (L = {:.3})", most_late.0, most_late.1, least_late.0, least_late.1);
    for b in [0.05, 0.1, 0.2, 0.5] {
        println!("tentacles with b = {b}, m = 10: {}", tentacle_scan(&h, n, b, 10)?.len());
    }
    Ok(())
}
