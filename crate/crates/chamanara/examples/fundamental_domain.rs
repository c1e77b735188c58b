//! The fundamental domain of G = <P1, H>: walls, cusps, free side, the side
//! pairing, and SVG output.
//!
//! Run with: cargo run --example fundamental_domain

use chamanara::exactnum::{rat, QuadRat};
use chamanara::fuchsian::{in_fundamental_domain, verify_side_pairing, FundDomain, HPoint};
use chamanara::svg::{render_domain, DomainFigure};

fn main() -> anyhow::Result<()> {
    let dom = FundDomain::get();
    println!("strip: |Re z| < {}", dom.strip_bound);
    for (a, b) in &dom.inner_walls {
        println!("inner wall: geodesic with endpoints {a} and {b}");
    }
    println!("cusps: {} {} {}", dom.cusps[0], dom.cusps[1], dom.cusps[2]);
    println!("free side: ({}, {})\n", dom.free_side.0, dom.free_side.1);

    let samples = [
        ("i", HPoint::base_i()),
        (
            "1 + i",
            HPoint::interior(QuadRat::from_int(1), QuadRat::from_int(1))?,
        ),
        (
            "3 + i",
            HPoint::interior(QuadRat::from_int(3), QuadRat::from_int(1))?,
        ),
        (
            "-5/3 + 4/3 i",
            HPoint::interior(
                QuadRat::from_rational(rat(-5, 3)),
                QuadRat::from_rational(rat(4, 3)),
            )?,
        ),
    ];
    for (name, z) in &samples {
        println!("{name:>14} is {:?}", in_fundamental_domain(z)?);
    }

    println!("\nside pairing:");
    for check in &verify_side_pairing().checks {
        println!(
            "  [{}] {}",
            if check.pass { "ok" } else { "FAIL" },
            check.name
        );
    }

    let path = std::env::temp_dir().join("chamanara_domain.svg");
    std::fs::write(&path, render_domain(DomainFigure::Full))?;
    println!("\nwrote {}", path.display());
    Ok(())
}
