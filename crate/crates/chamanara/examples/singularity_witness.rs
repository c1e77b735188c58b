//! Why the completion has a single singularity: the gluing identifies every
//! second cutting point into two chains, and explicit paths between the
//! chains shrink to zero length.
//!
//! Run with: cargo run --example singularity_witness

use chamanara::surface::{Side, Surface};
use chamanara::CutLabel;

fn main() -> anyhow::Result<()> {
    let surface = Surface::new(12)?;

    println!("identification classes of the cutting points (glue limits):");
    for class in surface.singularity_classes() {
        let names: Vec<String> = class.iter().map(|l| l.to_string()).collect();
        println!("  {{{}}}", names.join(", "));
    }

    let b = |k| CutLabel::Cut {
        side: Side::Bottom,
        k,
    };
    let t = |k| CutLabel::Cut { side: Side::Top, k };

    println!("\ntwo-chart arcs between identified points (bottom k ~ top k+1):");
    for k in [2u32, 3, 5, 8] {
        let (legs, len) = surface.singularity_path(b(k), t(k + 1))?;
        println!("  generation {k}: {} legs, length {len}", legs.len());
    }

    println!("\ncross-chain paths (bottom k to bottom k+1) shrink geometrically:");
    for k in 2..=10u32 {
        let (_, len) = surface.singularity_path(b(k), b(k + 1))?;
        println!("  d(bottom {k}, bottom {}) <= {len}", k + 1);
    }
    println!("\nall cutting points are one point of the metric completion");
    Ok(())
}
