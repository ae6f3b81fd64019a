//! Drives the experiment runner from code instead of the command line and
//! lists the artifacts it leaves behind.
//!
//! ```bash
//! cargo run --release --example experiment_runner -- /tmp/beltrami-run
//! ```

use beltrami_lab::cli::{run, Command, ExperimentConfig};

fn main() -> beltrami_lab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "beltrami-run".into());
    let experiments = [
        (Command::Exponents, vec![("p", "2"), ("K", "3")]),
        (Command::Solve, vec![("coeff", "radial(K=2,R=0.8)"), ("grid", "256")]),
        (Command::Dimension, vec![("set", "cantor(rho=0.3333333333333333,gen=6)")]),
        (
            Command::Distort,
            vec![("coeff", "logexample(R=0.3)|mollify(n=32)"), ("set", "cantor(rho=0.25,gen=6)")],
        ),
        (Command::Garnett, vec![("generation", "6")]),
    ];
    for (cmd, params) in experiments {
        let dir = format!("{out}/{cmd}");
        let cfg = ExperimentConfig::new(cmd, params.into_iter().chain([("out", dir.as_str())]))?;
        let outcome = run(&cfg)?;
        println!("[{}] {}", if outcome.pass { "ok" } else { "check failed" }, outcome.summary);
        for a in &outcome.artifacts {
            println!("    {}", a.display());
        }
    }
    Ok(())
}
