//! Stopped-particle martingale for one pole, written as CSV to stdout.
//!
//! cargo run --release --example martingale_trace -- 20 12 5 > trace.csv

use idla::kernel::build_kernel_table;
use idla::martingale::martingale_trace;
use idla::LatticePoint;

fn main() -> idla::Result<()> {
    let args: Vec<i64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let zeta = LatticePoint::new(*args.first().unwrap_or(&20), *args.get(1).unwrap_or(&12));
    let seed = *args.get(2).unwrap_or(&5) as u64;
    let rho = zeta.norm();
    let table = build_kernel_table((2.0 * rho).ceil() as usize + 16)?;
    let n = (std::f64::consts::PI * rho * rho) as u64;
    let trace = martingale_trace(zeta, n, seed, &table)?;
    eprintln!(
        "zeta = {zeta}: {} particles, {} settled, {} frozen, {} at the pole; M = {:.4}, S = {:.4}",
        trace.n(),
        trace.settled,
        trace.frozen,
        trace.absorbed_at_pole,
        trace.m[trace.n()],
        trace.s[trace.n()]
    );
    trace
        .write_csv(std::io::stdout().lock())
        .map_err(|e| idla::Error::io(std::path::Path::new("<stdout>"), e))
}
