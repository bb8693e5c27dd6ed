//! Shell profile and tower decomposition of the bundled fixture, and the
//! minimal tower energies.

use idla::events::{
    min_tower_energy, shell_fixture, shell_profile, tower_decompose, SHELL_FIXTURE_CENTER, SHELL_FIXTURE_M,
};

fn main() -> idla::Result<()> {
    let h = shell_fixture();
    let profile = shell_profile(&h, h.n(), SHELL_FIXTURE_CENTER, SHELL_FIXTURE_M);
    println!("a = {:?}", profile.a);
    let t = tower_decompose(&profile, 0.5)?;
    println!("beta = {:?}, alpha = {:?}", t.beta, t.alpha);
    println!("b = {:?}", t.steps());
    for i in 0..t.beta.len() {
        println!("block {i}: window sum {} for beta {}", t.window_sum(&profile.a, i), t.beta[i]);
    }
    println!("energy {}", t.energy());
    for m in [2, 5, 10, 20, 40] {
        let (e, beta) = min_tower_energy(m, 2)?;
        let ratio = e as f64 * (m as f64).ln() / (m * m) as f64;
        println!("m = {m:>2}: min energy {e:>5} at {beta:?} (E ln m / m^2 = {ratio:.3})");
    }
    Ok(())
}
