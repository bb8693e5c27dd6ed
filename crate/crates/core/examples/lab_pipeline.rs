//! Run the simulate and analyze commands programmatically and print gates.

use idla::lab::{run, Command, Config};

fn main() -> idla::Result<()> {
    let mut config = Config::default();
    config.apply_text("sizes = 1000,4000,16000\ntrials = 8\nseed = 11\n")?;
    config.out_dir = std::env::temp_dir().join("idla-example-lab");
    for command in [Command::Simulate, Command::Analyze] {
        let outcome = run(command, &config)?;
        for g in &outcome.gates {
            println!("{} {} {}", command.name(), if g.pass { "PASS" } else { "FAIL" }, g.name);
        }
        println!("{}", serde_json::to_string_pretty(&outcome.summary["fit"]["log"]).unwrap_or_default());
    }
    println!("outputs in {}", config.out_dir.display());
    Ok(())
}
