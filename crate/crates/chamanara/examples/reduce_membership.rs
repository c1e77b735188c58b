//! Reduce points into the fundamental domain and decide membership, with the
//! expressing word recovered for elements of the group.
//!
//! Run with: cargo run --example reduce_membership

use chamanara::exactnum::QuadRat;
use chamanara::fuchsian::{is_member, reduce_to_domain, Gen, HPoint, Mat2, Membership, Word};

fn main() -> anyhow::Result<()> {
    for re in [0i64, 6, 10, -40] {
        let z = HPoint::interior(QuadRat::from_int(re), QuadRat::from_int(1))?;
        let r = reduce_to_domain(&z)?;
        println!(
            "{re} + i  reduces by {:<14} to {}",
            r.word.to_string(),
            r.point
        );
    }

    // A word, its matrix, and the word recovered from the matrix alone.
    let w = Word::from_letters([(Gen::P1, 2), (Gen::H, -1), (Gen::P1, -1), (Gen::H, 3)]);
    let mat = w.matrix();
    println!("\nword {w} has matrix {mat}");
    match is_member(&mat)? {
        Membership::Member { word } => println!("membership recovers: {word}"),
        Membership::NonMember { .. } => println!("unexpectedly rejected"),
    }

    // Shears that are not powers of P1 are rejected with a witness.
    for b in [1i64, 3, 6, 12] {
        let shear = Mat2::from_i64([[1, b], [0, 1]]);
        match is_member(&shear)? {
            Membership::Member { word } => println!("[[1,{b}],[0,1]] is in G as {word}"),
            Membership::NonMember { residual } => {
                println!("[[1,{b}],[0,1]] is not in G (residual {residual})")
            }
        }
    }
    Ok(())
}
