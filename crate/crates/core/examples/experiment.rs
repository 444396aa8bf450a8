//! Runs an experiment config end to end, as the `run` verb does.
//!
//! Usage: `cargo run --release --example experiment [config.json]`

use kronreg::experiment::{run, ExperimentConfig};

fn main() -> kronreg::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/shaw_small.json").into());
    let config = ExperimentConfig::from_path(&path)?;
    let out = run(&config)?;
    for r in &out.rows {
        println!(
            "{:<12} nu={:e} seed={} k={} rel_error={:.4}{}",
            r.regularizer_label,
            r.noise_level,
            r.seed,
            r.k,
            r.relative_error,
            if r.converged { "" } else { " (not converged)" }
        );
    }
    println!(
        "{} files, table at {}",
        out.files.len(),
        out.csv_path.display()
    );
    Ok(())
}
