//! From commensurable inverse moduli to parabolic group elements: the
//! rotation by -π/4, the shear by 1/m, and the per-cylinder twist counts.
//!
//! Run with: cargo run --example parabolic_synthesis

use chamanara::cylinders::{decompose, renormalization_check, synthesize_parabolic};
use chamanara::fuchsian::{classify, eigen_direction, frame_rotate};
use chamanara::surface::Surface;

fn main() -> anyhow::Result<()> {
    let surface = Surface::new(8)?;

    for n in [0i32, 1, 2, -1, -2] {
        let d = decompose(&surface, n)?;
        let (mat, comm) = synthesize_parabolic(&d)?;
        let rotated = frame_rotate(d.direction);
        println!(
            "slope 2^{n}: direction {} rotates to {}",
            d.direction, rotated
        );
        println!(
            "  gauge m = {}, twist counts {:?}",
            comm.m, comm.multipliers
        );
        println!("  parabolic element {mat} ({:?})", classify(&mat));
        let eig = eigen_direction(&mat)?;
        println!(
            "  fixed point {} ({:?}), renormalization {:?}",
            eig.fixed_point,
            eig.status,
            renormalization_check(&d)
        );
    }
    Ok(())
}
