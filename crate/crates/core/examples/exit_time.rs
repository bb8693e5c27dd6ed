//! Exit-time moment generating function and Brownian sup tails against
//! their closed forms.

use idla::martingale::{bm_sup_tail, bm_sup_tail_monte_carlo, exit_mgf_bound, exit_mgf_exact, exit_mgf_monte_carlo};

fn main() -> idla::Result<()> {
    for (a, b, lambda) in [(0.5, 0.5, 1.0), (0.3, 0.9, 2.0), (1.0, 1.0, 0.5)] {
        let exact = exit_mgf_exact(a, b, lambda)?;
        let bound = exit_mgf_bound(a, b, lambda)?;
        let mc = exit_mgf_monte_carlo(a, b, lambda, 50, 100_000, 1);
        println!(
            "a = {a}, b = {b}, lambda = {lambda}: exact {exact:.6}, bound {bound:.6}, MC {:.6} +- {:.6}",
            mc.mean, mc.std_err
        );
    }
    for (k, s) in [(0.5, 1.0), (1.0, 1.0), (2.0, 1.0)] {
        let est = bm_sup_tail_monte_carlo(k, s, 10_000, 20_000, 2);
        println!("P(sup B >= {k}*{s}) ~ {:.4} +- {:.4}, bound {:.4}", est.mean, est.std_err, bm_sup_tail(k, s));
    }
    Ok(())
}
