//! SVG rendering of decompositions and the fundamental domain.
//!
//! This is the one place floating point exists in the crate: every number is
//! decided exactly upstream and converted to `f64` only for coordinates.
//! Formatting is fixed at 12 decimal places (trimmed), so identical inputs
//! produce byte-identical documents.

use crate::cylinders::CylinderDecomposition;
use crate::exactnum::Rational;
use crate::fuchsian::FundDomain;
use num_traits::ToPrimitive;
use std::fmt::Write as _;

const PALETTE: [&str; 10] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#d9d9d9", "#bc80bd",
];

/// Deterministic coordinate formatting: 12 decimal places, trailing zeros
/// trimmed.
pub fn coord(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn rc(v: &Rational) -> String {
    coord(v.to_f64().expect("surface coordinates fit in f64"))
}

/// Flip to SVG's downward y axis inside the unit viewBox.
fn rc_flip(v: &Rational) -> String {
    coord(1.0 - v.to_f64().expect("surface coordinates fit in f64"))
}

/// The square with its shaded cylinders and saddle connections.
/// One fill per cylinder, connections on top, covered-area caption last.
pub fn render_decomposition(d: &CylinderDecomposition) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="640" height="640">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="1" height="1" fill="white" stroke="black" stroke-width="0.004"/>"#
    );
    for (i, cyl) in d.cylinders.iter().enumerate() {
        let fill = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<g class="cylinder" fill="{fill}" fill-opacity="0.85">"#
        );
        for piece in &cyl.pieces {
            let points: Vec<String> = piece
                .iter()
                .map(|(x, y)| format!("{},{}", rc(x), rc_flip(y)))
                .collect();
            let _ = writeln!(out, r#"<polygon points="{}"/>"#, points.join(" "));
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="0.004">"#);
    for conn in &d.connections {
        for leg in &conn.legs {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                rc(&leg.from.0),
                rc_flip(&leg.from.1),
                rc(&leg.to.0),
                rc_flip(&leg.to.1)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="0.02" y="0.05" font-size="0.032" font-family="monospace">slope {p}/{q}  covered_area = {area}</text>"#,
        p = d.direction.p,
        q = d.direction.q,
        area = d.covered_area
    );
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainFigure {
    /// The full domain: strip walls, inner walls, cusps, free side.
    Full,
    /// Only the strip between the vertical walls at ±3.
    StripOnly,
    /// The annulus 1/2 < |z| < 2 that pulls back to the inner walls.
    Annulus,
}

/// Upper half-plane figure; geometry computed from the domain data, with the
/// real axis drawn at the bottom.
pub fn render_domain(figure: DomainFigure) -> String {
    let dom = FundDomain::get();
    let top = 2.6f64; // drawn height of the vertical walls
    let y = |v: f64| coord(3.0 - v); // flip: real axis at svg y = 3
    let x = coord;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-3.7 0 7.4 3.4" width="740" height="340">"#
    );

    let strip = dom.strip_bound as f64;
    let walls: Vec<(f64, f64)> = dom
        .inner_walls
        .iter()
        .map(|(a, b)| {
            (
                a.to_f64().expect("wall endpoint"),
                b.to_f64().expect("wall endpoint"),
            )
        })
        .collect();

    // Region fill.
    match figure {
        DomainFigure::Full => {
            let (l0, l1) = walls[0];
            let (r0, r1) = walls[1];
            let lr = (l1 - l0) / 2.0;
            let rr = (r1 - r0) / 2.0;
            let _ = writeln!(
                out,
                r##"<path d="M {sx} {ty} L {sx} {ay} A {lr} {lr} 0 0 1 {lw} {ay} L {rw} {ay} A {rr} {rr} 0 0 1 {ex} {ay} L {ex} {ty} Z" fill="#e8e8f0" stroke="none"/>"##,
                sx = x(-strip),
                ex = x(strip),
                ty = y(top),
                ay = y(0.0),
                lr = coord(lr),
                lw = x(l1),
                rw = x(r0),
                rr = coord(rr),
            );
        }
        DomainFigure::StripOnly => {
            let _ = writeln!(
                out,
                r##"<rect x="{sx}" y="{ty}" width="{w}" height="{h}" fill="#e8e8f0" stroke="none"/>"##,
                sx = x(-strip),
                ty = y(top),
                w = coord(2.0 * strip),
                h = coord(top),
            );
        }
        DomainFigure::Annulus => {
            let _ = writeln!(
                out,
                r##"<path d="M {m2} {ay} A 2 2 0 0 1 {p2} {ay} L {ph} {ay} A 0.5 0.5 0 0 0 {mh} {ay} Z" fill="#e8e8f0" stroke="none" fill-rule="evenodd"/>"##,
                m2 = x(-2.0),
                p2 = x(2.0),
                ph = x(0.5),
                mh = x(-0.5),
                ay = y(0.0),
            );
        }
    }

    // Real axis.
    let _ = writeln!(
        out,
        r#"<line x1="-3.6" y1="{ay}" x2="3.6" y2="{ay}" stroke="gray" stroke-width="0.02"/>"#,
        ay = y(0.0)
    );

    let wall_style = r#"stroke="black" stroke-width="0.03" fill="none""#;
    match figure {
        DomainFigure::Full | DomainFigure::StripOnly => {
            for sx in [-strip, strip] {
                let _ = writeln!(
                    out,
                    r#"<line x1="{px}" y1="{ay}" x2="{px}" y2="{ty}" {wall_style}/>"#,
                    px = x(sx),
                    ay = y(0.0),
                    ty = y(top),
                );
            }
        }
        DomainFigure::Annulus => {}
    }
    match figure {
        DomainFigure::Full => {
            for (a, bv) in &walls {
                let r = coord((bv - a) / 2.0);
                let _ = writeln!(
                    out,
                    r#"<path d="M {ax} {ay} A {r} {r} 0 0 1 {bx} {ay}" {wall_style}/>"#,
                    ax = x(*a),
                    ay = y(0.0),
                    bx = x(*bv),
                );
            }
            // Free side on the ideal boundary.
            let (f0, f1) = (
                dom.free_side.0.to_f64().expect("free side"),
                dom.free_side.1.to_f64().expect("free side"),
            );
            let _ = writeln!(
                out,
                r##"<line x1="{a}" y1="{ay}" x2="{b}" y2="{ay}" stroke="#cc3333" stroke-width="0.05" stroke-dasharray="0.08,0.05"/>"##,
                a = x(f0),
                b = x(f1),
                ay = y(0.0),
            );
        }
        DomainFigure::Annulus => {
            for r in [0.5f64, 2.0] {
                let _ = writeln!(
                    out,
                    r#"<path d="M {ax} {ay} A {r} {r} 0 0 1 {bx} {ay}" {wall_style}/>"#,
                    ax = x(-r),
                    ay = y(0.0),
                    bx = x(r),
                );
            }
        }
        DomainFigure::StripOnly => {}
    }

    // Labels.
    let label = |out: &mut String, text: &str, px: f64| {
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{y}" font-size="0.22" font-family="monospace" text-anchor="middle">{text}</text>"#,
            x = coord(px),
            y = coord(3.28),
        );
    };
    match figure {
        DomainFigure::Full => {
            label(&mut out, "-3", -3.0);
            label(&mut out, "3", 3.0);
            label(&mut out, "-1/3", walls[0].1.to_f64().unwrap_or(-1.0 / 3.0));
            label(&mut out, "1/3", walls[1].0.to_f64().unwrap_or(1.0 / 3.0));
            let _ = writeln!(
                out,
                r#"<text x="0" y="{ty}" font-size="0.22" font-family="monospace" text-anchor="middle">cusp at inf</text>"#,
                ty = y(top + 0.15),
            );
        }
        DomainFigure::StripOnly => {
            label(&mut out, "-3", -3.0);
            label(&mut out, "3", 3.0);
        }
        DomainFigure::Annulus => {
            label(&mut out, "-2", -2.0);
            label(&mut out, "2", 2.0);
            label(&mut out, "-1/2", -0.5);
            label(&mut out, "1/2", 0.5);
        }
    }

    out.push_str("</svg>\n");
    out
}
