//! Grow one cluster, report its radii and round-trip it through a snapshot.
//!
//! cargo run --release --example grow_cluster -- 20000 7

use std::f64::consts::PI;

use idla::engine::{idla_grow, GrowthHistory};

fn main() -> idla::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let n = *args.first().unwrap_or(&20_000);
    let seed = *args.get(1).unwrap_or(&7);
    let t = std::time::Instant::now();
    let h = idla_grow(n, seed)?;
    println!("grew {n} sites in {:.2?}", t.elapsed());

    let inner = h.inner_radii();
    let outer = h.outer_radii();
    for k in [n / 100, n / 10, n / 2, n].into_iter().filter(|&k| k > 0) {
        let r = (k as f64 / PI).sqrt();
        let (i, o) = (inner[k as usize - 1], outer[k as usize - 1]);
        println!("k = {k:>8}: r = {r:8.3}, r - inner = {:6.3}, outer - r = {:6.3}", r - i, o - r);
    }

    let path = std::env::temp_dir().join(format!("idla_example_{n}_{seed}.idla"));
    h.save(&path)?;
    let back = GrowthHistory::load(&path)?;
    back.validate()?;
    assert_eq!(back.sites(), h.sites());
    println!("snapshot {} ({} bytes) reloads identically", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    std::fs::remove_file(&path).ok();
    Ok(())
}
