//! Build the glued square, inspect its segments and translations, and trace
//! a few geodesics exactly.
//!
//! Run with: cargo run --example surface_gluing

use chamanara::exactnum::rat;
use chamanara::surface::{Side, Surface, SurfacePoint, TraceOutcome};
use chamanara::DirVec;

fn main() -> anyhow::Result<()> {
    let surface = Surface::new(5)?;

    println!("edge segments and gluing translations (depth 5):");
    for seg in surface.segments().iter().filter(|s| s.side == Side::Bottom) {
        let (dx, dy) = surface.translation(seg.k);
        println!(
            "  bottom {}: ({}, {}) glued by +({}, {})",
            seg.k, seg.lo, seg.hi, dx, dy
        );
    }

    // Gluing is an involution: a point on the bottom edge maps to the top and
    // back.
    let p = SurfacePoint::new(rat(1, 4), rat(0, 1))?;
    let img = surface.glue_map(&p)?;
    let back = surface.glue_map(&img)?;
    println!(
        "\nglue (1/4, 0) -> ({}, {}) -> back ({}, {})",
        img.x, img.y, back.x, back.y
    );

    // The main diagonal is a saddle connection: corner to corner.
    let trace = surface.trace_geodesic((rat(0, 1), rat(0, 1)), DirVec::new(1, 1)?, 20)?;
    println!(
        "\ndiagonal trace: outcome {:?}, holonomy ({}, {})",
        trace.outcome, trace.holonomy.0, trace.holonomy.1
    );

    // A slope-2 geodesic from the corner ends at the first top cutting point.
    let trace = surface.trace_geodesic((rat(0, 1), rat(0, 1)), DirVec::new(1, 2)?, 20)?;
    match &trace.outcome {
        TraceOutcome::Singular(label) => println!("slope-2 trace ends at {label}"),
        other => println!("slope-2 trace: {other:?}"),
    }

    // A generic-slope geodesic keeps crossing; the budget truncates it.
    let trace = surface.trace_geodesic((rat(17, 100), rat(1, 3)), DirVec::new(2, 3)?, 6)?;
    println!(
        "slope-3/2 trace from (17/100, 1/3): {} crossings, outcome {:?}",
        trace.crossings.len(),
        trace.outcome
    );

    // The machine-readable dump of the whole structure.
    println!(
        "\nsurface spec as JSON:\n{}",
        serde_json::to_string_pretty(&surface.spec())?
    );
    Ok(())
}
