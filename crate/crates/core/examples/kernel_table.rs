//! Build the exact potential-kernel table and compare it with its asymptotics.
//!
//! cargo run --release --example kernel_table -- 128

use idla::kernel::{build_kernel_table, fit_lambda};
use idla::LatticePoint;

fn main() -> idla::Result<()> {
    let r0 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let table = build_kernel_table(r0)?;
    println!("R0 = {r0}, lambda_hat = {:.10}", table.lambda_hat());
    for (x, y) in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (5, 5)] {
        let z = LatticePoint::new(x, y);
        let v = table.exact(z).expect("inside the table");
        println!(
            "g({x},{y}) = {} + ({})/pi = {:.12}   asymptotic {:.12}",
            v.p,
            v.q,
            v.approx(),
            table.asymptotic(z)
        );
    }
    let fit = fit_lambda(&table);
    println!("fit: {fit:?}");
    println!("max |z|^2 |g - asymptotic| over |z| >= 10: {:.4}", table.asymptotic_error_constant(10.0));
    Ok(())
}
