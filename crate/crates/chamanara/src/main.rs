//! Command-line front end. All computation lives in the library; this binary
//! parses flags, dispatches, and prints.

use anyhow::{bail, Context, Result};
use chamanara::cylinders::decompose;
use chamanara::exactnum::parse_quadrat;
use chamanara::fuchsian::{is_member, reduce_to_domain, HPoint, Mat2, Membership};
use chamanara::report::{verify_paper, VerifyOptions};
use chamanara::surface::Surface;
use chamanara::svg::{render_decomposition, render_domain, DomainFigure};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "chamanara",
    about = "Exact cylinder decompositions and the parabolic-generated Fuchsian group of the half-gluing square surface",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recompute the headline constants and check every one exactly.
    /// Exit code 0 only when all claims pass.
    VerifyPaper {
        /// Truncation depth (default 8, or CHAMANARA_DEPTH).
        #[arg(long)]
        depth: Option<u32>,
        /// Fault injection: shift one gluing and watch the claims fail.
        #[arg(long, hide = true)]
        corrupt_gluing: bool,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Cylinder decomposition for the slope 2^n direction.
    Decompose {
        /// Slope exponent n (slope is 2^n), between -4 and 4.
        #[arg(long = "slope-exp", allow_negative_numbers = true)]
        slope_exp: i32,
        /// Truncation depth, between 2 and 12 (default 8, or CHAMANARA_DEPTH).
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a point of the upper half-plane into the fundamental domain.
    Reduce {
        /// Exact point "re,im"; entries are p/q or p/q+r/s sqrt d.
        #[arg(long)]
        point: String,
        #[arg(long)]
        json: bool,
    },
    /// Decide membership in the group generated by the two parabolics.
    Member {
        /// Exact matrix "a,b,c,d"; entries are p/q or p/q+r/s sqrt d.
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        json: bool,
    },
    /// Render the fundamental domain (walls, cusps, free side) as SVG.
    Domain {
        /// Output path; stdout when omitted.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Only the strip walls at ±3.
        #[arg(long, conflicts_with = "annulus")]
        strip_only: bool,
        /// The annulus 1/2 < |z| < 2 instead of its image.
        #[arg(long)]
        annulus: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

fn resolve_depth(flag: Option<u32>, lo: u32, hi: u32) -> Result<u32> {
    let depth = match flag {
        Some(d) => d,
        None => match std::env::var("CHAMANARA_DEPTH") {
            Ok(s) => s
                .parse::<u32>()
                .context("CHAMANARA_DEPTH must be an integer")?,
            Err(_) => 8,
        },
    };
    if depth < lo || depth > hi {
        bail!("depth {depth} out of range [{lo}, {hi}]");
    }
    Ok(depth)
}

/// Splits a comma-separated list of exact scalars, keeping error positions
/// relative to the full input string.
fn parse_exact_list(input: &str, expect: usize) -> Result<Vec<chamanara::QuadRat>> {
    let mut values = Vec::new();
    let mut offset = 0usize;
    let parts: Vec<&str> = input.split(',').collect();
    if parts.len() != expect {
        bail!(
            "expected {expect} comma-separated values, got {}",
            parts.len()
        );
    }
    for part in parts {
        let v = parse_quadrat(part).map_err(|e| anyhow::anyhow!("{}", e.offset(offset, input)))?;
        values.push(v);
        offset += part.len() + 1;
    }
    Ok(values)
}

fn write_or_stdout(out: Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::VerifyPaper {
            depth,
            corrupt_gluing,
            json,
        } => {
            let depth = resolve_depth(depth, 3, 12)?;
            let report = verify_paper(&VerifyOptions {
                depth,
                corrupt_gluing,
            })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
            if !report.all_pass() {
                std::process::exit(1);
            }
        }
        Cmd::Decompose {
            slope_exp,
            depth,
            format,
            out,
        } => {
            if !(-4..=4).contains(&slope_exp) {
                bail!("slope exponent {slope_exp} out of range [-4, 4]");
            }
            let depth = resolve_depth(depth, 2, 12)?;
            let surface = Surface::new(depth)?;
            let d = decompose(&surface, slope_exp)?;
            let content = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&d.dump())?),
                Format::Csv => d.to_csv(),
                Format::Svg => render_decomposition(&d),
            };
            write_or_stdout(out, &content)?;
        }
        Cmd::Reduce { point, json } => {
            let values = parse_exact_list(&point, 2)?;
            let [re, im] = <[chamanara::QuadRat; 2]>::try_from(values).expect("two values");
            let z = HPoint::interior(re, im)?;
            let reduction = reduce_to_domain(&z)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&reduction)?);
            } else {
                println!("word:  {}", reduction.word);
                println!("point: {}", reduction.point);
                let walls: Vec<String> = reduction.walls.iter().map(|w| format!("{w:?}")).collect();
                println!(
                    "walls: {}",
                    if walls.is_empty() {
                        "-".into()
                    } else {
                        walls.join(" ")
                    }
                );
            }
        }
        Cmd::Member { matrix, json } => {
            let values = parse_exact_list(&matrix, 4)?;
            let [a, b, c, d] = <[chamanara::QuadRat; 4]>::try_from(values).expect("four values");
            let mat = Mat2::new(a, b, c, d)?;
            let verdict = is_member(&mat)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&verdict)?);
            } else {
                match &verdict {
                    Membership::Member { word } => {
                        println!("member: yes");
                        println!("word:   {word}");
                    }
                    Membership::NonMember { residual } => {
                        println!("member: no");
                        println!("residual: {residual}");
                    }
                }
            }
        }
        Cmd::Domain {
            svg,
            strip_only,
            annulus,
        } => {
            let figure = if strip_only {
                DomainFigure::StripOnly
            } else if annulus {
                DomainFigure::Annulus
            } else {
                DomainFigure::Full
            };
            write_or_stdout(svg, &render_domain(figure))?;
        }
    }
    Ok(())
}
