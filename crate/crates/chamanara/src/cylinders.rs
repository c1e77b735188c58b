//! Maximal cylinder decompositions and the parabolic elements they induce.
//!
//! For a direction of slope `2^n` the saddle connections cut the entry edges
//! of the square into intervals; flowing each interval strip by strip until
//! it returns to itself closes one cylinder. A cylinder is stored through the
//! factorization `w = wc·L`, `h = hc/L` with `L = √(q²+p²)`, so the modulus
//! `w/h = wc·(q²+p²)/hc` and the area `w·h = wc·hc` stay rational and no
//! irrational arithmetic enters the decomposition. The inverse moduli of one
//! decomposition share a rational gauge `m`; shearing by `1/m` around the
//! rotated direction produces the parabolic element of the Veech group, with
//! the per-cylinder twist counts given by the multipliers.
//!
//! Cylinders deeper than the materialized truncation are left to the tail:
//! `covered_area` approaches 1 like `4^{-depth}` and the trapezoid family is
//! certified self-similar by the exact ratio-1/2 renormalization check.

use crate::exactnum::{rat_gcd, rat_int, rat_str, ExactError, Rational};
use crate::fuchsian::{frame_rotate, FuchsianError, Mat2};
use crate::surface::{
    intercept, is_singular_position, point_on_side, segment_index, DirVec, SaddleConnection, Side,
    Surface, SurfaceError,
};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Fuchsian(#[from] FuchsianError),
    #[error("decomposition needs depth >= 2, got {0}")]
    DepthTooSmall(u32),
    #[error("slope exponent {n} out of range for depth {depth}")]
    SlopeOutOfRange { n: i32, depth: u32 },
    #[error("a strip failed to close within the crossing budget of {budget}")]
    Incomplete {
        partial: Box<CylinderDecomposition>,
        budget: usize,
    },
    #[error("decomposition is empty")]
    Empty,
    #[error("inverse moduli are not commensurable at this depth")]
    NonCommensurable,
    #[error("twist parameter must be nonzero")]
    ZeroTwist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CylinderKind {
    /// Both boundary circles consist of several saddle connections.
    Trapezoid,
    /// Each boundary circle is a single saddle connection traversed once.
    Parallelogram,
}

/// One maximal cylinder, with circumference `wc·L` and height `hc/L`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub direction: DirVec,
    pub wc: Rational,
    pub hc: Rational,
    pub kind: CylinderKind,
    /// Connection indices (into the decomposition's connection list) of the
    /// two boundary circles; a connection shared by both circles is counted
    /// once per circle.
    pub boundary: [Vec<usize>; 2],
    /// Strip pieces swept while closing the cylinder, for rendering.
    pub pieces: Vec<[(Rational, Rational); 4]>,
    sort_key: (Side, Rational),
}

impl Cylinder {
    /// `w/h = wc·(q²+p²)/hc`, exactly rational.
    pub fn modulus(&self) -> Rational {
        &self.wc * self.direction.length_sq() / &self.hc
    }

    /// `h/w`, the quantity the twist gauge is built from.
    pub fn inverse_modulus(&self) -> Rational {
        self.modulus().recip()
    }

    /// `w·h = wc·hc`.
    pub fn area(&self) -> Rational {
        &self.wc * &self.hc
    }

    /// Boundary saddle connections counted with multiplicity across both
    /// circles.
    pub fn boundary_count(&self) -> usize {
        self.boundary[0].len() + self.boundary[1].len()
    }
}

#[derive(Debug, Clone)]
pub struct CylinderDecomposition {
    pub direction: DirVec,
    pub depth: u32,
    pub cylinders: Vec<Cylinder>,
    /// Saddle connections of this direction, as enumerated by the surface.
    pub connections: Vec<SaddleConnection>,
    /// Exact total area of the completed cylinders; the remainder is the
    /// unmaterialized tail near the accumulating corners.
    pub covered_area: Rational,
}

impl CylinderDecomposition {
    pub fn tail_area(&self) -> Rational {
        Rational::one() - &self.covered_area
    }
}

/// Gauge `m` and per-cylinder twist multipliers: the inverse modulus of
/// cylinder `i` equals `multipliers[i]·m` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommensurabilityResult {
    #[serde(with = "rat_str")]
    pub m: Rational,
    pub multipliers: Vec<u64>,
}

/// Decomposes the surface in the direction of slope `2^n`.
pub fn decompose(surface: &Surface, n: i32) -> Result<CylinderDecomposition, DecomposeError> {
    let depth = surface.depth();
    if depth < 2 {
        return Err(DecomposeError::DepthTooSmall(depth));
    }
    if n.unsigned_abs() > depth {
        return Err(DecomposeError::SlopeOutOfRange { n, depth });
    }
    decompose_dir(surface, DirVec::from_slope_exp(n))
}

/// Entry edge for each axis, by direction quadrant.
fn entry_sides(dir: DirVec) -> (Side, Side) {
    let y_entry = if dir.p > 0 { Side::Bottom } else { Side::Top };
    let x_entry = if dir.q > 0 { Side::Left } else { Side::Right };
    (y_entry, x_entry)
}

fn exit_sides(dir: DirVec) -> (Side, Side) {
    let y_exit = if dir.p > 0 { Side::Top } else { Side::Bottom };
    let x_exit = if dir.q > 0 { Side::Right } else { Side::Left };
    (y_exit, x_exit)
}

fn opposite(side: Side) -> Side {
    match side {
        Side::Bottom => Side::Top,
        Side::Top => Side::Bottom,
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    }
}

/// Whether the open interval `(lo, hi)` along `side` contains a singular
/// position. Cutting points accumulate toward one corner of each side; the
/// largest candidate below the upper bound decides.
fn spans_singular(side: Side, lo: &Rational, hi: &Rational) -> bool {
    debug_assert!(lo < hi);
    // Mirror bottom/left so cutting points sit at 2^{-j}.
    let (u_lo, u_hi) = match side {
        Side::Top | Side::Right => (lo.clone(), hi.clone()),
        Side::Bottom | Side::Left => (Rational::one() - hi, Rational::one() - lo),
    };
    let mut candidate = crate::exactnum::rat(1, 2);
    loop {
        if candidate < u_hi {
            return candidate > u_lo;
        }
        candidate /= rat_int(2);
        if candidate.is_zero() {
            return false;
        }
    }
}

#[derive(Debug, Clone)]
struct Cell {
    side: Side,
    lo: Rational,
    hi: Rational,
}

/// One strip step of an orbit: the interval flowed from its entry edge to the
/// exit edge, with both boundary flow lines tracked individually.
#[derive(Debug, Clone)]
struct StepRecord {
    side: Side,
    a_pos: Rational,
    b_pos: Rational,
    sing_a: bool,
    sing_b: bool,
    advance: Rational,
    piece: [(Rational, Rational); 4],
}

enum OrbitOutcome {
    Completed(Vec<StepRecord>),
    /// The strip ran into unmaterialized structure: spanned a singular point,
    /// hit a corner head-on, or glued onto an interval finer than the cells.
    Tail,
    BudgetExceeded,
}

struct StripFlow<'s> {
    surface: &'s Surface,
    dir: DirVec,
    cells: Vec<Cell>,
    lookup: BTreeMap<(Side, Rational), usize>,
}

impl<'s> StripFlow<'s> {
    /// Exit coordinate of the flow line entering at `pos` on `side`, on the
    /// strip's chosen exit side.
    fn exit_coord(&self, side: Side, pos: &Rational, exit: Side) -> Rational {
        let (x0, y0) = point_on_side(side, pos);
        let q = rat_int(self.dir.q);
        let p = rat_int(self.dir.p);
        match exit {
            Side::Left => &y0 + &p * (-&x0 / &q),
            Side::Right => &y0 + &p * ((Rational::one() - &x0) / &q),
            Side::Bottom => &x0 + &q * (-&y0 / &p),
            Side::Top => &x0 + &q * ((Rational::one() - &y0) / &p),
        }
    }

    fn coordinate_on(&self, side: Side, point: &(Rational, Rational)) -> Option<Rational> {
        let on = match side {
            Side::Bottom => point.1.is_zero(),
            Side::Top => point.1 == Rational::one(),
            Side::Left => point.0.is_zero(),
            Side::Right => point.0 == Rational::one(),
        };
        if !on {
            return None;
        }
        Some(match side {
            Side::Bottom | Side::Top => point.0.clone(),
            Side::Left | Side::Right => point.1.clone(),
        })
    }

    fn flow_orbit(&self, start: usize, budget: usize) -> (Vec<usize>, OrbitOutcome) {
        let mut visited = vec![start];
        let mut steps: Vec<StepRecord> = Vec::new();
        let cell = &self.cells[start];
        let (mut side, mut a, mut b) = (cell.side, cell.lo.clone(), cell.hi.clone());
        let (y_exit, x_exit) = exit_sides(self.dir);

        loop {
            if steps.len() >= budget {
                return (visited, OrbitOutcome::BudgetExceeded);
            }
            // Choose the exit edge from the midpoint flow line.
            let mid = (&a + &b) / rat_int(2);
            let (mx, my) = point_on_side(side, &mid);
            let tx = if self.dir.q > 0 {
                (Rational::one() - &mx) / rat_int(self.dir.q)
            } else {
                -&mx / rat_int(self.dir.q)
            };
            let ty = if self.dir.p > 0 {
                (Rational::one() - &my) / rat_int(self.dir.p)
            } else {
                -&my / rat_int(self.dir.p)
            };
            let exit_side = match tx.cmp(&ty) {
                Ordering::Less => x_exit,
                Ordering::Greater => y_exit,
                // Midpoint exits exactly at a corner: the strip straddles a
                // singularity of the completion.
                Ordering::Equal => return (visited, OrbitOutcome::Tail),
            };

            let exit_a = self.exit_coord(side, &a, exit_side);
            let exit_b = self.exit_coord(side, &b, exit_side);
            let exit_mid = self.exit_coord(side, &mid, exit_side);
            let (exit_lo, exit_hi) = if exit_a < exit_b {
                (&exit_a, &exit_b)
            } else {
                (&exit_b, &exit_a)
            };
            if spans_singular(exit_side, exit_lo, exit_hi) {
                return (visited, OrbitOutcome::Tail);
            }
            let Some(seg) = segment_index(exit_side, &exit_mid) else {
                return (visited, OrbitOutcome::Tail);
            };

            let glue = |pos: &Rational| {
                self.surface
                    .glue_coords(exit_side, seg, point_on_side(exit_side, pos))
            };
            let next_side = opposite(exit_side);
            let (Some(next_a), Some(next_b)) = (
                self.coordinate_on(next_side, &glue(&exit_a)),
                self.coordinate_on(next_side, &glue(&exit_b)),
            ) else {
                // Happens only with corrupted gluings: the image drifted off
                // the partner edge.
                return (visited, OrbitOutcome::Tail);
            };

            // Advance along the direction per pass: holonomy = advance·(q,p).
            let exit_mid_pt = point_on_side(exit_side, &exit_mid);
            let advance = (&exit_mid_pt.0 - &mx) / rat_int(self.dir.q);
            debug_assert_eq!(advance, (&exit_mid_pt.1 - &my) / rat_int(self.dir.p));
            debug_assert!(advance.is_positive());

            steps.push(StepRecord {
                side,
                a_pos: a.clone(),
                b_pos: b.clone(),
                sing_a: is_singular_position(exit_side, &exit_a),
                sing_b: is_singular_position(exit_side, &exit_b),
                advance,
                piece: [
                    point_on_side(side, &a),
                    point_on_side(side, &b),
                    point_on_side(exit_side, &exit_b),
                    point_on_side(exit_side, &exit_a),
                ],
            });

            let (lo, hi) = if next_a < next_b {
                (next_a.clone(), next_b.clone())
            } else {
                (next_b.clone(), next_a.clone())
            };
            let Some(&idx) = self.lookup.get(&(next_side, lo.clone())) else {
                return (visited, OrbitOutcome::Tail);
            };
            if self.cells[idx].hi != hi {
                return (visited, OrbitOutcome::Tail);
            }
            if idx == start {
                // Orientation along the transversal is preserved, so the
                // first return is the identity on the interval.
                debug_assert_eq!(next_a, self.cells[start].lo);
                return (visited, OrbitOutcome::Completed(steps));
            }
            if visited.contains(&idx) {
                // A translation flow cannot re-enter mid-orbit; treat as tail
                // rather than fabricate a cylinder.
                debug_assert!(false, "orbit re-entered a non-start cell");
                return (visited, OrbitOutcome::Tail);
            }
            visited.push(idx);
            side = next_side;
            a = next_a;
            b = next_b;
        }
    }
}

/// Decomposes the surface in an arbitrary dyadic-slope direction.
pub fn decompose_dir(
    surface: &Surface,
    dir: DirVec,
) -> Result<CylinderDecomposition, DecomposeError> {
    let connections = surface.saddle_connections(dir)?;
    let depth = surface.depth();
    let (y_entry, x_entry) = entry_sides(dir);

    // Cut the two entry edges at anchors and at every connection-leg entry.
    let mut cuts: BTreeMap<Side, std::collections::BTreeSet<Rational>> = BTreeMap::new();
    for side in [y_entry, x_entry] {
        let set = cuts.entry(side).or_default();
        set.insert(Rational::zero());
        set.insert(Rational::one());
        for k in 1..=depth {
            let near = crate::exactnum::pow2_inv(k);
            set.insert(match side {
                Side::Top | Side::Right => near,
                Side::Bottom | Side::Left => Rational::one() - near,
            });
        }
    }
    for conn in &connections {
        for leg in &conn.legs {
            for side in [y_entry, x_entry] {
                let on = match side {
                    Side::Bottom => leg.from.1.is_zero(),
                    Side::Top => leg.from.1 == Rational::one(),
                    Side::Left => leg.from.0.is_zero(),
                    Side::Right => leg.from.0 == Rational::one(),
                };
                if on {
                    let coord = match side {
                        Side::Bottom | Side::Top => leg.from.0.clone(),
                        _ => leg.from.1.clone(),
                    };
                    cuts.get_mut(&side).unwrap().insert(coord);
                }
            }
        }
    }

    let mut cells = Vec::new();
    for (side, set) in &cuts {
        let positions: Vec<&Rational> = set.iter().collect();
        for pair in positions.windows(2) {
            cells.push(Cell {
                side: *side,
                lo: pair[0].clone(),
                hi: pair[1].clone(),
            });
        }
    }
    let lookup: BTreeMap<(Side, Rational), usize> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.side, c.lo.clone()), i))
        .collect();
    let flow = StripFlow {
        surface,
        dir,
        cells,
        lookup,
    };

    // Connection launch coordinates, for matching boundary circles.
    let conn_by_start: BTreeMap<(Rational, Rational), usize> = connections
        .iter()
        .enumerate()
        .map(|(i, c)| (c.legs[0].from.clone(), i))
        .collect();

    let budget = surface.trace_budget();
    let mut visited = vec![false; flow.cells.len()];
    let mut cylinders = Vec::new();
    let mut budget_exceeded = false;

    for start in 0..flow.cells.len() {
        if visited[start] {
            continue;
        }
        let (orbit_cells, outcome) = flow.flow_orbit(start, budget);
        for idx in &orbit_cells {
            visited[*idx] = true;
        }
        match outcome {
            OrbitOutcome::Tail => {}
            OrbitOutcome::BudgetExceeded => budget_exceeded = true,
            OrbitOutcome::Completed(steps) => {
                cylinders.push(build_cylinder(surface, dir, &steps, &conn_by_start));
            }
        }
    }

    cylinders.sort_by(|x, y| {
        y.area()
            .cmp(&x.area())
            .then_with(|| x.sort_key.0.cmp(&y.sort_key.0))
            .then_with(|| x.sort_key.1.cmp(&y.sort_key.1))
    });
    let covered_area = cylinders
        .iter()
        .map(|c| c.area())
        .fold(Rational::zero(), |a, b| a + b);
    let decomposition = CylinderDecomposition {
        direction: dir,
        depth,
        cylinders,
        connections,
        covered_area,
    };
    if budget_exceeded {
        return Err(DecomposeError::Incomplete {
            partial: Box::new(decomposition),
            budget,
        });
    }
    Ok(decomposition)
}

/// A boundary chain restarting at a corner may point instantly out of the
/// square there; the geodesic continues from the glue image through the
/// adjacent generation-1 segment. Completed cylinders never restart at an
/// accumulating corner, so the adjacent segment is always generation 1.
fn resolve_launch(
    surface: &Surface,
    dir: DirVec,
    mut point: (Rational, Rational),
) -> (Rational, Rational) {
    for _ in 0..8 {
        if crate::surface::points_inward(&point, dir) {
            return point;
        }
        let one = Rational::one();
        let exit_side = if point.0 == one && dir.q > 0 {
            Side::Right
        } else if point.0.is_zero() && dir.q < 0 {
            Side::Left
        } else if point.1 == one && dir.p > 0 {
            Side::Top
        } else if point.1.is_zero() && dir.p < 0 {
            Side::Bottom
        } else {
            unreachable!("non-launchable boundary point has an instant exit edge")
        };
        let at_gen1_end = match exit_side {
            Side::Bottom => point.0.is_zero(),
            Side::Left => point.1.is_zero(),
            Side::Top => point.0 == one,
            Side::Right => point.1 == one,
        };
        assert!(
            at_gen1_end,
            "boundary chain of a completed cylinder restarts at an accumulating corner"
        );
        point = surface.glue_coords(exit_side, 1, point);
    }
    unreachable!("launch resolution did not terminate")
}

fn build_cylinder(
    surface: &Surface,
    dir: DirVec,
    steps: &[StepRecord],
    conn_by_start: &BTreeMap<(Rational, Rational), usize>,
) -> Cylinder {
    let n = steps.len();
    let wc: Rational = steps
        .iter()
        .map(|s| s.advance.clone())
        .fold(Rational::zero(), |a, b| a + b);

    // Height from the entry interval; every cross-cut of the orbit gives the
    // same transversal width.
    let cross_width = |s: &StepRecord| {
        let len = (&s.b_pos - &s.a_pos).abs();
        match s.side {
            Side::Bottom | Side::Top => len * rat_int(dir.p.abs()),
            Side::Left | Side::Right => len * rat_int(dir.q.abs()),
        }
    };
    let hc = cross_width(&steps[0]);
    debug_assert!(steps.iter().all(|s| cross_width(s) == hc));

    // Boundary circles: each singular exit starts a new saddle connection,
    // launched at the boundary line's entry position in the following step.
    let circle = |use_a: bool| {
        let mut conns = Vec::new();
        for i in 0..n {
            let singular = if use_a {
                steps[i].sing_a
            } else {
                steps[i].sing_b
            };
            if singular {
                let next = &steps[(i + 1) % n];
                let pos = if use_a { &next.a_pos } else { &next.b_pos };
                let start = resolve_launch(surface, dir, point_on_side(next.side, pos));
                let id = conn_by_start
                    .get(&start)
                    .copied()
                    .expect("boundary connection of a completed cylinder is enumerated");
                conns.push(id);
            }
        }
        conns
    };
    let circle_a = circle(true);
    let circle_b = circle(false);
    debug_assert!(!circle_a.is_empty() && !circle_b.is_empty());
    let kind = if circle_a.len() == 1 && circle_b.len() == 1 {
        CylinderKind::Parallelogram
    } else {
        CylinderKind::Trapezoid
    };

    let sort_key = steps
        .iter()
        .map(|s| (s.side, s.a_pos.clone().min(s.b_pos.clone())))
        .min()
        .expect("orbit has at least one step");

    Cylinder {
        direction: dir,
        wc,
        hc,
        kind,
        boundary: [circle_a, circle_b],
        pieces: steps.iter().map(|s| s.piece.clone()).collect(),
        sort_key,
    }
}

/// Common gauge of the inverse moduli: `m = gcd` over the distinct inverse
/// moduli, with the per-cylinder integer multipliers. Rational moduli are
/// always commensurable; the integrality check is a guard.
pub fn commensurate(
    decomposition: &CylinderDecomposition,
) -> Result<CommensurabilityResult, DecomposeError> {
    if decomposition.cylinders.is_empty() {
        return Err(DecomposeError::Empty);
    }
    let distinct: std::collections::BTreeSet<Rational> = decomposition
        .cylinders
        .iter()
        .map(|c| c.inverse_modulus())
        .collect();
    let mut iter = distinct.iter();
    let mut m = iter.next().expect("nonempty").clone();
    for v in iter {
        m = rat_gcd(&m, v)?;
    }
    let mut multipliers = Vec::new();
    for c in &decomposition.cylinders {
        let k = c.inverse_modulus() / &m;
        if !k.is_integer() {
            return Err(DecomposeError::NonCommensurable);
        }
        multipliers.push(
            num_traits::ToPrimitive::to_u64(&k.to_integer())
                .ok_or(DecomposeError::NonCommensurable)?,
        );
    }
    let gcd_all = multipliers
        .iter()
        .fold(0u64, |acc, k| num_integer::gcd(acc, *k));
    if gcd_all != 1 {
        return Err(DecomposeError::NonCommensurable);
    }
    Ok(CommensurabilityResult { m, multipliers })
}

/// Parabolic with eigenvector `(q, p)` and twist `t`:
/// `I + (t/(q²+p²))·[[-pq, q²], [-p², pq]]`. Trace 2, determinant 1.
pub fn shear_matrix(dir: DirVec, t: &Rational) -> Result<Mat2, DecomposeError> {
    if t.is_zero() {
        return Err(DecomposeError::ZeroTwist);
    }
    let q = rat_int(dir.q);
    let p = rat_int(dir.p);
    let scale = t / dir.length_sq();
    Ok(Mat2::from_rationals(
        Rational::one() - &scale * &p * &q,
        &scale * &q * &q,
        -(&scale * &p * &p),
        Rational::one() + &scale * &p * &q,
    )?)
}

/// The parabolic Veech-group element induced by a commensurable cylinder
/// decomposition: rotate the direction by −π/4 and shear by `1/m`. The
/// multipliers are the per-cylinder Dehn-twist counts.
pub fn synthesize_parabolic(
    decomposition: &CylinderDecomposition,
) -> Result<(Mat2, CommensurabilityResult), DecomposeError> {
    let comm = commensurate(decomposition)?;
    let rotated = frame_rotate(decomposition.direction);
    let mat = shear_matrix(rotated, &comm.m.recip())?;
    Ok((mat, comm))
}

/// Renormalization certificate for the infinite trapezoid family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RenormalizationReport {
    /// Fewer than 3 trapezoid cylinders materialized.
    InsufficientData { trapezoids: usize },
    /// `(wc, hc)` of consecutive trapezoid cylinders failed to halve first at
    /// this index (0-based, into the trapezoid list sorted by area).
    Failure { index: usize },
    /// Every consecutive pair scales by exactly 1/2.
    Success { pairs: usize },
}

/// Verifies that consecutive trapezoid cylinders (sorted by area) have
/// `(wc, hc)` scaled by exactly 1/2, certifying the self-similar tail.
pub fn renormalization_check(decomposition: &CylinderDecomposition) -> RenormalizationReport {
    let traps: Vec<&Cylinder> = decomposition
        .cylinders
        .iter()
        .filter(|c| c.kind == CylinderKind::Trapezoid)
        .collect();
    if traps.len() < 3 {
        return RenormalizationReport::InsufficientData {
            trapezoids: traps.len(),
        };
    }
    let half = crate::exactnum::rat(1, 2);
    for (i, pair) in traps.windows(2).enumerate() {
        let scaled_w = &pair[0].wc * &half;
        let scaled_h = &pair[0].hc * &half;
        if pair[1].wc != scaled_w || pair[1].hc != scaled_h {
            return RenormalizationReport::Failure { index: i };
        }
    }
    RenormalizationReport::Success {
        pairs: traps.len() - 1,
    }
}

/// Serialized row for one cylinder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderRow {
    pub kind: CylinderKind,
    #[serde(with = "rat_str")]
    pub wc: Rational,
    #[serde(with = "rat_str")]
    pub hc: Rational,
    #[serde(with = "rat_str")]
    pub modulus: Rational,
    #[serde(with = "rat_str")]
    pub inverse_modulus: Rational,
    pub boundary_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub direction: DirVec,
    pub depth: u32,
    #[serde(with = "rat_str")]
    pub covered_area: Rational,
    pub cylinders: Vec<CylinderRow>,
}

impl CylinderDecomposition {
    pub fn dump(&self) -> DecompositionDump {
        DecompositionDump {
            direction: self.direction,
            depth: self.depth,
            covered_area: self.covered_area.clone(),
            cylinders: self
                .cylinders
                .iter()
                .map(|c| CylinderRow {
                    kind: c.kind,
                    wc: c.wc.clone(),
                    hc: c.hc.clone(),
                    modulus: c.modulus(),
                    inverse_modulus: c.inverse_modulus(),
                    boundary_count: c.boundary_count(),
                })
                .collect(),
        }
    }

    /// CSV cylinder table with a trailing covered-area line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,kind,wc,hc,modulus,inverse_modulus,boundary_count\n");
        for c in &self.cylinders {
            let kind = match c.kind {
                CylinderKind::Trapezoid => "trapezoid",
                CylinderKind::Parallelogram => "parallelogram",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.direction,
                kind,
                c.wc,
                c.hc,
                c.modulus(),
                c.inverse_modulus(),
                c.boundary_count()
            ));
        }
        out.push_str(&format!("# covered_area = {}\n", self.covered_area));
        out
    }
}

/// Connections sorted the way the decomposition uses them; re-exported for
/// rendering.
pub fn connection_intercept(conn: &SaddleConnection) -> Rational {
    intercept(&conn.legs[0].from, conn.direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{rat, QuadRat};
    use crate::fuchsian::{classify, MatClass};
    use num_bigint::BigInt;

    fn dec(n: i32, depth: u32) -> CylinderDecomposition {
        decompose(&Surface::new(depth).unwrap(), n).unwrap()
    }

    fn pow4(e: u32) -> Rational {
        Rational::from_integer(BigInt::from(4).pow(e))
    }

    #[test]
    fn slope_one_moduli_all_six() {
        let d = dec(0, 6);
        assert_eq!(d.cylinders.len(), 6);
        for c in &d.cylinders {
            assert_eq!(c.modulus(), rat_int(6));
            assert_eq!(c.kind, CylinderKind::Trapezoid);
        }
        // Largest cylinder: h = √2/4 and w = 3√2/2, i.e. hc = 1/2, wc = 3/2.
        assert_eq!(d.cylinders[0].wc, rat(3, 2));
        assert_eq!(d.cylinders[0].hc, rat(1, 2));
        assert_eq!(d.cylinders[0].area(), rat(3, 4));
    }

    #[test]
    fn slope_two_moduli_and_kinds() {
        let d = dec(1, 6);
        let parallelograms: Vec<&Cylinder> = d
            .cylinders
            .iter()
            .filter(|c| c.kind == CylinderKind::Parallelogram)
            .collect();
        assert_eq!(parallelograms.len(), 1);
        let middle = parallelograms[0];
        assert_eq!(middle.modulus(), rat(5, 2));
        assert_eq!(middle.hc, rat_int(1), "height 1/√5");
        assert_eq!(middle.wc, rat(1, 2), "circumference √5/2");
        for c in d
            .cylinders
            .iter()
            .filter(|c| c.kind == CylinderKind::Trapezoid)
        {
            assert_eq!(c.modulus(), rat(15, 2));
        }
        // Largest trapezoid: h = 1/(2√5), w = 3√5/4.
        let largest_trap = d
            .cylinders
            .iter()
            .find(|c| c.kind == CylinderKind::Trapezoid)
            .expect("trapezoid family present");
        assert_eq!(largest_trap.hc, rat(1, 2));
        assert_eq!(largest_trap.wc, rat(3, 4));
    }

    #[test]
    fn slope_four_inverse_moduli() {
        let d = dec(2, 6);
        for c in &d.cylinders {
            assert_eq!(c.inverse_modulus(), rat(4, 51));
            assert_eq!(c.modulus(), rat(51, 4));
        }
        // The middle cylinder (three parallelogram passes) leads the family
        // with hc = 1 and wc = 3/4; its inverse modulus matches the
        // trapezoids, so every multiplier is 1.
        assert_eq!(d.cylinders[0].hc, rat_int(1));
        assert_eq!(d.cylinders[0].wc, rat(3, 4));
        let comm = commensurate(&d).unwrap();
        assert_eq!(comm.m, rat(4, 51));
        assert!(comm.multipliers.iter().all(|k| *k == 1));
    }

    #[test]
    fn slope_half_mirrors_slope_two() {
        let d = dec(-1, 6);
        let comm = commensurate(&d).unwrap();
        assert_eq!(comm.m, rat(2, 15));
        let mut sorted = comm.multipliers.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, vec![1, 3]);
    }

    #[test]
    fn higher_slope_multiplier_sets() {
        // Engine-computed multiplier sets beyond the slope-2 case, verified
        // against the k·m·modulus = 1 identity: odd exponents repeat the
        // {1, 3} pattern with the 3 on the parallelogram middle cylinder,
        // even exponents are all ones.
        for n in [3i32, -3] {
            let d = dec(n, 8);
            let comm = commensurate(&d).unwrap();
            assert_eq!(comm.m, rat(8, 195), "slope 2^{n} gauge");
            for (c, k) in d.cylinders.iter().zip(&comm.multipliers) {
                let expected = if c.kind == CylinderKind::Parallelogram {
                    3
                } else {
                    1
                };
                assert_eq!(*k, expected);
                assert_eq!(
                    c.modulus(),
                    if expected == 3 {
                        rat(65, 8)
                    } else {
                        rat(195, 8)
                    }
                );
            }
        }
        for n in [4i32, -4] {
            let d = dec(n, 8);
            let comm = commensurate(&d).unwrap();
            assert_eq!(comm.m, rat(16, 771), "slope 2^{n} gauge");
            assert!(comm.multipliers.iter().all(|k| *k == 1));
            assert!(d.cylinders.iter().all(|c| c.modulus() == rat(771, 16)));
        }
    }

    /// Exact area of a convex quad piece by the shoelace formula.
    fn piece_area(piece: &[(Rational, Rational); 4]) -> Rational {
        let mut twice = Rational::zero();
        for i in 0..4 {
            let (x1, y1) = &piece[i];
            let (x2, y2) = &piece[(i + 1) % 4];
            twice += x1 * y2 - x2 * y1;
        }
        twice.abs() / rat_int(2)
    }

    #[test]
    fn pieces_tile_each_cylinder_exactly() {
        // The strip pieces of one cylinder sum to its exact area wc·hc, and
        // over all cylinders to the covered area: the pieces tile without
        // overlap or gap.
        for n in [0i32, 1, 2, -1] {
            let d = dec(n, 6);
            let mut total = Rational::zero();
            for c in &d.cylinders {
                let sum: Rational = c
                    .pieces
                    .iter()
                    .map(piece_area)
                    .fold(Rational::zero(), |a, b| a + b);
                assert_eq!(sum, c.area(), "piece areas match wc·hc at slope 2^{n}");
                total += sum;
            }
            assert_eq!(total, d.covered_area);
        }
    }

    #[test]
    fn modulus_examples() {
        let d = dec(0, 4);
        assert_eq!(d.cylinders[0].modulus(), rat_int(6));
        let d = dec(1, 4);
        let trap = d
            .cylinders
            .iter()
            .find(|c| c.kind == CylinderKind::Trapezoid)
            .unwrap();
        assert_eq!(trap.modulus(), rat(15, 2));
        // Degenerate unit test cylinder: wc = hc, L² = 1.
        let unit = Cylinder {
            direction: DirVec::new(1, 0).unwrap(),
            wc: rat_int(1),
            hc: rat_int(1),
            kind: CylinderKind::Parallelogram,
            boundary: [vec![0], vec![0]],
            pieces: Vec::new(),
            sort_key: (Side::Bottom, rat_int(0)),
        };
        assert_eq!(unit.modulus(), rat_int(1));
    }

    #[test]
    fn commensurate_examples() {
        let comm = commensurate(&dec(0, 6)).unwrap();
        assert_eq!(comm.m, rat(1, 6));
        assert!(comm.multipliers.iter().all(|k| *k == 1));

        let d = dec(1, 6);
        let comm = commensurate(&d).unwrap();
        assert_eq!(comm.m, rat(2, 15));
        for (c, k) in d.cylinders.iter().zip(&comm.multipliers) {
            let expected = if c.kind == CylinderKind::Parallelogram {
                3
            } else {
                1
            };
            assert_eq!(
                *k, expected,
                "triple twist sits on the parallelogram cylinder"
            );
        }

        // Single-cylinder input with modulus 5.
        let single = CylinderDecomposition {
            direction: DirVec::new(1, 2).unwrap(),
            depth: 2,
            cylinders: vec![Cylinder {
                direction: DirVec::new(1, 2).unwrap(),
                wc: rat_int(1),
                hc: rat_int(1),
                kind: CylinderKind::Parallelogram,
                boundary: [vec![0], vec![0]],
                pieces: Vec::new(),
                sort_key: (Side::Bottom, rat_int(0)),
            }],
            connections: Vec::new(),
            covered_area: rat_int(1),
        };
        // modulus = 1·5/1 = 5 -> m = 1/5, k = {1}.
        let comm = commensurate(&single).unwrap();
        assert_eq!(comm.m, rat(1, 5));
        assert_eq!(comm.multipliers, vec![1]);
    }

    #[test]
    fn shear_matrix_examples() {
        let d = |q, p| DirVec::new(q, p).unwrap();
        assert_eq!(shear_matrix(d(1, 0), &rat_int(6)).unwrap(), Mat2::p1());
        assert_eq!(shear_matrix(d(3, 1), &rat(15, 2)).unwrap(), Mat2::p2());
        let s = shear_matrix(d(5, 3), &rat(51, 4)).unwrap();
        let expect =
            Mat2::from_rationals(rat(-37, 8), rat(75, 8), rat(-27, 8), rat(53, 8)).unwrap();
        assert_eq!(s, expect);
        // Independent checks: |trace| = 2, det 1, eigenvector (5, 3).
        let tr = s.trace();
        assert_eq!(tr.try_mul(&tr).unwrap(), QuadRat::from_int(4));
        assert_eq!(s.det(), QuadRat::from_int(1));
        // Eigenvalue is trace/2 = ±1 depending on the canonical sign.
        let lam = tr.try_div(&QuadRat::from_int(2)).unwrap();
        let [a, b, c, dd] = s.entries();
        let five = QuadRat::from_int(5);
        let three = QuadRat::from_int(3);
        assert_eq!(
            &(a.try_mul(&five).unwrap()) + &(b.try_mul(&three).unwrap()),
            lam.try_mul(&five).unwrap()
        );
        assert_eq!(
            &(c.try_mul(&five).unwrap()) + &(dd.try_mul(&three).unwrap()),
            lam.try_mul(&three).unwrap()
        );
        assert!(matches!(
            shear_matrix(d(1, 1), &rat_int(0)),
            Err(DecomposeError::ZeroTwist)
        ));
    }

    #[test]
    fn synthesize_parabolic_examples() {
        let (p1, comm) = synthesize_parabolic(&dec(0, 6)).unwrap();
        assert_eq!(p1, Mat2::p1());
        assert!(comm.multipliers.iter().all(|k| *k == 1));

        let (p2, comm) = synthesize_parabolic(&dec(1, 6)).unwrap();
        assert_eq!(p2, Mat2::p2());
        let mut ks = comm.multipliers.clone();
        ks.sort();
        assert_eq!(*ks.last().unwrap(), 3);

        let (p4, _) = synthesize_parabolic(&dec(2, 6)).unwrap();
        let expect =
            Mat2::from_rationals(rat(-37, 8), rat(75, 8), rat(-27, 8), rat(53, 8)).unwrap();
        assert_eq!(p4, expect);

        // Slope 1/2 synthesizes the stabilizer of the cusp at -3.
        let (phalf, _) = synthesize_parabolic(&dec(-1, 6)).unwrap();
        let via_words = Mat2::p1().inverse().mul(&Mat2::p2()).mul(&Mat2::p1());
        assert_eq!(phalf, via_words);
    }

    #[test]
    fn parabolic_invariants_over_slopes() {
        for n in -4..=4 {
            let d = dec(n, 8);
            let (mat, comm) = synthesize_parabolic(&d).unwrap();
            assert_eq!(classify(&mat), MatClass::Parabolic);
            assert_eq!(mat.det(), QuadRat::from_int(1));
            let tr = mat.trace();
            assert_eq!(tr.try_mul(&tr).unwrap(), QuadRat::from_int(4), "trace ±2");
            // Fixes the rotated direction vector (up to the canonical sign).
            let lam = tr.try_div(&QuadRat::from_int(2)).unwrap();
            let rotated = frame_rotate(d.direction);
            let (q, p) = (QuadRat::from_int(rotated.q), QuadRat::from_int(rotated.p));
            let [a, b, c, dd] = mat.entries();
            assert_eq!(
                &a.try_mul(&q).unwrap() + &b.try_mul(&p).unwrap(),
                lam.try_mul(&q).unwrap()
            );
            assert_eq!(
                &c.try_mul(&q).unwrap() + &dd.try_mul(&p).unwrap(),
                lam.try_mul(&p).unwrap()
            );
            // k_i · m · modulus_i = 1 for every cylinder.
            for (c, k) in d.cylinders.iter().zip(&comm.multipliers) {
                assert!((rat_int(*k as i64) * &comm.m * c.modulus()).is_one());
            }
        }
    }

    #[test]
    fn boundary_counts() {
        let d = dec(0, 8);
        for c in &d.cylinders {
            assert_eq!(
                c.boundary_count(),
                4,
                "every slope-1 cylinder has 4 boundary connections"
            );
        }
        // The largest one carries a connection with multiplicity 2 (the main
        // diagonal appears in both circles).
        let largest = &d.cylinders[0];
        let mut all: Vec<usize> = largest.boundary.iter().flatten().copied().collect();
        all.sort();
        let has_double = all.windows(2).any(|w| w[0] == w[1]);
        assert!(has_double, "one connection counted with multiplicity 2");
        let dbl = all.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
        assert_eq!(
            d.connections[dbl].holonomy,
            (rat_int(1), rat_int(1)),
            "it is the diagonal"
        );

        let d = dec(1, 8);
        let middle = d
            .cylinders
            .iter()
            .find(|c| c.kind == CylinderKind::Parallelogram)
            .unwrap();
        assert_eq!(middle.boundary_count(), 2);
    }

    #[test]
    fn renormalization_examples() {
        assert_eq!(
            renormalization_check(&dec(0, 8)),
            RenormalizationReport::Success { pairs: 7 }
        );
        assert_eq!(
            renormalization_check(&dec(1, 8)),
            RenormalizationReport::Success { pairs: 6 }
        );
        assert_eq!(
            renormalization_check(&dec(2, 8)),
            RenormalizationReport::Success { pairs: 6 }
        );
        assert_eq!(
            renormalization_check(&dec(0, 2)),
            RenormalizationReport::InsufficientData { trapezoids: 2 }
        );
    }

    #[test]
    fn area_tail_is_geometric() {
        // covered_area(depth) = 1 - c·4^{-depth} with a slope-dependent c.
        for (n, c) in [(0, 1i64), (1, 2), (2, 4)] {
            let mut tails = Vec::new();
            for depth in 4..=10 {
                let d = dec(n, depth);
                tails.push(d.tail_area() * pow4(depth));
                assert!(d.covered_area <= rat_int(1));
            }
            for t in &tails {
                assert_eq!(*t, rat_int(c), "slope 2^{n} tail constant");
            }
        }
    }

    #[test]
    fn decompose_guards() {
        let s = Surface::new(4).unwrap();
        assert!(matches!(
            decompose(&s, 5),
            Err(DecomposeError::SlopeOutOfRange { .. })
        ));
        let s1 = Surface::new(1).unwrap();
        assert!(matches!(
            decompose(&s1, 0),
            Err(DecomposeError::DepthTooSmall(1))
        ));
    }

    #[test]
    fn negative_slope_engine_closes() {
        // Slope -1 has a decomposition too (its moduli are simply not all
        // equal, and the direction is forbidden for parabolics).
        let s = Surface::new(8).unwrap();
        let d = decompose_dir(&s, DirVec::new(1, -1).unwrap()).unwrap();
        assert!(!d.cylinders.is_empty());
        assert!(d.covered_area > rat(9, 10));
        let moduli: std::collections::BTreeSet<Rational> =
            d.cylinders.iter().map(|c| c.modulus()).collect();
        assert!(moduli.len() > 1, "slope -1 moduli are not all equal");
        assert!(moduli.contains(&rat_int(2)));
        assert!(moduli.contains(&rat_int(10)));
        assert!(moduli.contains(&rat_int(26)));
    }

    #[test]
    fn corrupted_gluing_destroys_the_decomposition() {
        let s = Surface::with_corrupted_gluing(6, 1, (rat(-1, 4), rat_int(0))).unwrap();
        // Failing to close at all would also be an acceptable symptom; what
        // must not happen is a clean reproduction of the true table.
        if let Ok(d) = decompose(&s, 0) {
            let healthy = d.cylinders.iter().all(|c| c.modulus() == rat_int(6))
                && d.covered_area == Rational::one() - pow4(6).recip();
            assert!(
                !healthy,
                "corrupted gluing must not reproduce the slope-1 table"
            );
        }
    }

    #[test]
    fn csv_and_json_dump() {
        let d = dec(2, 6);
        let csv = d.to_csv();
        assert!(csv.starts_with("direction,kind,wc,hc,modulus,inverse_modulus,boundary_count"));
        assert!(csv.contains("4/51"));
        assert!(csv.lines().last().unwrap().starts_with("# covered_area"));

        let dump = d.dump();
        let json = serde_json::to_string(&dump).unwrap();
        let back: DecompositionDump = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dump);
    }
}
