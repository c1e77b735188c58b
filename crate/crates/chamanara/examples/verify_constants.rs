//! Run the full verification battery from the library and print the report.
//!
//! Run with: cargo run --example verify_constants

use chamanara::report::{verify_paper, VerifyOptions};

fn main() -> anyhow::Result<()> {
    let report = verify_paper(&VerifyOptions::default())?;
    print!("{}", report.to_text());

    // The claims genuinely depend on the gluing: corrupt it and watch.
    let broken = verify_paper(&VerifyOptions {
        depth: 8,
        corrupt_gluing: true,
    })?;
    let failed: Vec<&str> = broken
        .claims
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.id.as_str())
        .collect();
    println!(
        "\nwith a corrupted generation-1 gluing, {} claims fail: {failed:?}",
        failed.len()
    );
    Ok(())
}
