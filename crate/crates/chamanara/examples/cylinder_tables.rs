//! Decompose the surface into maximal cylinders for slopes 1, 2, 4 and 1/2
//! and print the exact tables.
//!
//! Run with: cargo run --example cylinder_tables

use chamanara::cylinders::decompose;
use chamanara::surface::Surface;

fn main() -> anyhow::Result<()> {
    let surface = Surface::new(8)?;

    for n in [0i32, 1, 2, -1] {
        let d = decompose(&surface, n)?;
        println!("--- slope 2^{n} ---");
        print!("{}", d.to_csv());
        println!(
            "{} saddle connections enumerated, tail area {}\n",
            d.connections.len(),
            d.tail_area()
        );
    }
    Ok(())
}
