//! The glued square and its exact geodesic flow.
//!
//! The surface is the unit square with dyadic edge segments identified by
//! translations. Counting from the outside in, bottom segment `k` is
//! `(1 − 2^{1−k}, 1 − 2^{−k}) × {0}` and is glued to top segment `k`
//! (`(2^{−k}, 2^{1−k}) × {1}`) by the translation `t_k = (3·2^{−k} − 1, 1)`.
//! The left and right edges carry the transposed pattern. The cutting points
//! between segments and the four corners are excluded from the surface: they
//! are completion points, and every one of them collapses to the single wild
//! singularity. [`Surface::singularity_path`] produces explicit short paths
//! witnessing that collapse.
//!
//! Geodesics are straight lines in the square, continued by the gluing
//! translation at every edge crossing. All intersection coordinates are exact
//! rationals, and a line meeting a cutting point or corner is detected by
//! equality, not by tolerance.

use crate::exactnum::{pow2_inv, rat_int, rat_str, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("point {0},{1} is outside the closed unit square")]
    OutOfSquare(String, String),
    #[error("point {0},{1} is not on the boundary")]
    NotOnBoundary(String, String),
    #[error("point {0},{1} is a singular point of the completion")]
    SingularPoint(String, String),
    #[error("direction leaves the surface immediately from a singular point")]
    SingularLaunch,
    #[error("saddle-connection enumeration supports slopes ±2^n only, got {0}:{1}")]
    UnsupportedDirection(i64, i64),
    #[error("trace exceeded the crossing budget of {0}")]
    TraceBudget(usize),
    #[error("a geodesic launched at a singularity closed up without reaching one; the gluing is inconsistent")]
    InconsistentGluing,
    #[error("cutting-point label {0} is not materialized at depth {1}")]
    UnknownLabel(String, u32),
}

/// Side of the square an edge segment lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    /// (0,0)
    BottomLeft,
    /// (1,0)
    BottomRight,
    /// (0,1)
    TopLeft,
    /// (1,1)
    TopRight,
}

impl Corner {
    pub fn coords(self) -> (Rational, Rational) {
        let (x, y) = match self {
            Corner::BottomLeft => (0, 0),
            Corner::BottomRight => (1, 0),
            Corner::TopLeft => (0, 1),
            Corner::TopRight => (1, 1),
        };
        (rat_int(x), rat_int(y))
    }
}

/// Label of a singular completion point: a corner of the square or the
/// cutting point of generation `k` on one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CutLabel {
    Corner(Corner),
    Cut { side: Side, k: u32 },
}

impl CutLabel {
    /// Coordinates of the labelled point in the closed square.
    pub fn coords(self) -> (Rational, Rational) {
        match self {
            CutLabel::Corner(c) => c.coords(),
            CutLabel::Cut { side, k } => {
                let near = pow2_inv(k); // 2^{-k}
                let far = Rational::one() - &near;
                match side {
                    Side::Bottom => (far, rat_int(0)),
                    Side::Top => (near, rat_int(1)),
                    Side::Left => (rat_int(0), far),
                    Side::Right => (rat_int(1), near),
                }
            }
        }
    }
}

impl fmt::Display for CutLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutLabel::Corner(c) => write!(f, "corner:{c:?}"),
            CutLabel::Cut { side, k } => write!(f, "{side:?}:{k}"),
        }
    }
}

/// A point of the surface, in closed unit-square coordinates. Cutting points
/// and corners are not surface points; constructors reject them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfacePoint {
    #[serde(with = "rat_str")]
    pub x: Rational,
    #[serde(with = "rat_str")]
    pub y: Rational,
}

impl SurfacePoint {
    pub fn new(x: Rational, y: Rational) -> Result<SurfacePoint, SurfaceError> {
        let unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
        if !unit(&x) || !unit(&y) {
            return Err(SurfaceError::OutOfSquare(x.to_string(), y.to_string()));
        }
        if boundary_class(&x, &y).is_singular() {
            return Err(SurfaceError::SingularPoint(x.to_string(), y.to_string()));
        }
        Ok(SurfacePoint { x, y })
    }
}

/// Primitive direction vector `(q, p)`; the slope is `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirVec {
    pub q: i64,
    pub p: i64,
}

impl DirVec {
    pub fn new(q: i64, p: i64) -> Result<DirVec, SurfaceError> {
        if q == 0 && p == 0 {
            return Err(SurfaceError::ZeroDirection);
        }
        let g = q.unsigned_abs().gcd(&p.unsigned_abs()) as i64;
        Ok(DirVec { q: q / g, p: p / g })
    }

    /// Direction of slope `2^n` in the square frame.
    pub fn from_slope_exp(n: i32) -> DirVec {
        if n >= 0 {
            DirVec { q: 1, p: 1i64 << n }
        } else {
            DirVec {
                q: 1i64 << (-n),
                p: 1,
            }
        }
    }

    /// `Some(n)` when the slope is `±2^n`; a primitive vector qualifies
    /// exactly when one component is `±1` and the other `±2^k`.
    pub fn dyadic_slope_exp(self) -> Option<i32> {
        let (q, p) = (self.q.unsigned_abs(), self.p.unsigned_abs());
        if q == 0 || p == 0 {
            return None;
        }
        if q == 1 && p.is_power_of_two() {
            Some(p.trailing_zeros() as i32)
        } else if p == 1 && q.is_power_of_two() {
            Some(-(q.trailing_zeros() as i32))
        } else {
            None
        }
    }

    pub fn length_sq(self) -> Rational {
        rat_int(self.q * self.q + self.p * self.p)
    }
}

impl fmt::Display for DirVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.q, self.p)
    }
}

/// Where a coordinate pair sits relative to the square's boundary structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryClass {
    Interior,
    /// Interior of an edge segment: side, generation, position along the side.
    Edge {
        side: Side,
        k: u32,
        pos: Rational,
    },
    Singular(CutLabel),
}

impl BoundaryClass {
    pub fn is_singular(&self) -> bool {
        matches!(self, BoundaryClass::Singular(_))
    }
}

/// `Some(k)` when `x = 2^{-k}` for `k ≥ 1`.
fn dyadic_unit_exp(x: &Rational) -> Option<u32> {
    if !x.is_positive() || x.numer() != &BigInt::one() {
        return None;
    }
    let den = x.denom().magnitude();
    if den.count_ones() != 1 {
        return None;
    }
    let k = den.trailing_zeros().unwrap_or(0) as u32;
    (k >= 1).then_some(k)
}

/// Generation `k ≥ 1` with `2^{-k} < u < 2^{1-k}`, for `u ∈ (0, 1)` that is
/// not itself a dyadic unit fraction.
fn near_zero_generation(u: &Rational) -> u32 {
    debug_assert!(u.is_positive() && *u < Rational::one());
    let mut k = 1u32;
    let mut lower = pow2_inv(1);
    while *u <= lower {
        debug_assert!(*u < lower, "singular coordinate reached segment lookup");
        lower /= rat_int(2);
        k += 1;
    }
    k
}

/// Classifies a coordinate along one side: distance-to-corner pattern is the
/// same on all four sides after orienting toward the accumulating corner.
fn classify_side(side: Side, pos: &Rational) -> BoundaryClass {
    // Orient so the segments accumulate at u -> 0 (top/right) by mirroring
    // bottom/left, whose segments accumulate at pos -> 1.
    let u = match side {
        Side::Top | Side::Right => pos.clone(),
        Side::Bottom | Side::Left => Rational::one() - pos,
    };
    if let Some(k) = dyadic_unit_exp(&u) {
        return BoundaryClass::Singular(CutLabel::Cut { side, k });
    }
    let k = near_zero_generation(&u);
    BoundaryClass::Edge {
        side,
        k,
        pos: pos.clone(),
    }
}

/// Segment generation containing position `pos` along `side`, or `None` when
/// the position is a cutting point or corner.
pub fn segment_index(side: Side, pos: &Rational) -> Option<u32> {
    if !pos.is_positive() || *pos >= Rational::one() {
        return None;
    }
    match classify_side(side, pos) {
        BoundaryClass::Edge { k, .. } => Some(k),
        _ => None,
    }
}

/// Coordinates of position `pos` along `side`.
pub fn point_on_side(side: Side, pos: &Rational) -> (Rational, Rational) {
    match side {
        Side::Bottom => (pos.clone(), Rational::zero()),
        Side::Top => (pos.clone(), Rational::one()),
        Side::Left => (Rational::zero(), pos.clone()),
        Side::Right => (Rational::one(), pos.clone()),
    }
}

/// Whether position `pos` along `side` is a singular completion point
/// (a cutting point of any generation, or a corner).
pub fn is_singular_position(side: Side, pos: &Rational) -> bool {
    if pos.is_zero() || *pos == Rational::one() {
        return true;
    }
    matches!(classify_side(side, pos), BoundaryClass::Singular(_))
}

/// Full classification of a point in the closed square.
pub fn boundary_class(x: &Rational, y: &Rational) -> BoundaryClass {
    let zero = Rational::zero();
    let one = Rational::one();
    let on_left = *x == zero;
    let on_right = *x == one;
    let on_bottom = *y == zero;
    let on_top = *y == one;
    match (on_left, on_right, on_bottom, on_top) {
        (true, _, true, _) => BoundaryClass::Singular(CutLabel::Corner(Corner::BottomLeft)),
        (_, true, true, _) => BoundaryClass::Singular(CutLabel::Corner(Corner::BottomRight)),
        (true, _, _, true) => BoundaryClass::Singular(CutLabel::Corner(Corner::TopLeft)),
        (_, true, _, true) => BoundaryClass::Singular(CutLabel::Corner(Corner::TopRight)),
        (_, _, true, _) => classify_side(Side::Bottom, x),
        (_, _, _, true) => classify_side(Side::Top, x),
        (true, _, _, _) => classify_side(Side::Left, y),
        (_, true, _, _) => classify_side(Side::Right, y),
        _ => BoundaryClass::Interior,
    }
}

/// One materialized edge segment, an open interval along a side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSegment {
    pub side: Side,
    pub k: u32,
    #[serde(with = "rat_str")]
    pub lo: Rational,
    #[serde(with = "rat_str")]
    pub hi: Rational,
}

/// The glued square, with segments materialized to a fixed truncation depth.
/// Geodesic tracing works to arbitrary generation regardless of `depth`;
/// `depth` bounds the anchors used for enumeration and the labels accepted by
/// [`Surface::singularity_path`].
#[derive(Debug, Clone)]
pub struct Surface {
    depth: u32,
    segments: Vec<EdgeSegment>,
    /// Fault-injection hook: extra offset added to the bottom/top translation
    /// of one generation. Used to demonstrate that the verification claims
    /// actually depend on the gluing.
    corruption: Option<(u32, (Rational, Rational))>,
}

/// Serialized form of the surface: segments and gluing translations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceSpec {
    #[serde(with = "rat_str")]
    pub alpha: Rational,
    pub depth: u32,
    pub segments: Vec<EdgeSegment>,
    pub translations: Vec<Translation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Translation {
    pub k: u32,
    /// Gluing vector for bottom segment k -> top segment k.
    #[serde(with = "rat_str")]
    pub dx: Rational,
    #[serde(with = "rat_str")]
    pub dy: Rational,
}

impl Surface {
    /// Builds the surface with segments materialized for generations
    /// `1..=depth` on every side.
    pub fn new(depth: u32) -> Result<Surface, SurfaceError> {
        if depth == 0 {
            return Err(SurfaceError::ZeroDepth);
        }
        let mut segments = Vec::new();
        for k in 1..=depth {
            let near = pow2_inv(k);
            let far_lo = Rational::one() - pow2_inv(k - 1).min(rat_int(1));
            let far_lo = if k == 1 { Rational::zero() } else { far_lo };
            let far_hi = Rational::one() - &near;
            let near_hi = pow2_inv(k - 1).min(Rational::one());
            segments.push(EdgeSegment {
                side: Side::Bottom,
                k,
                lo: far_lo.clone(),
                hi: far_hi.clone(),
            });
            segments.push(EdgeSegment {
                side: Side::Top,
                k,
                lo: near.clone(),
                hi: near_hi.clone(),
            });
            segments.push(EdgeSegment {
                side: Side::Left,
                k,
                lo: far_lo,
                hi: far_hi,
            });
            segments.push(EdgeSegment {
                side: Side::Right,
                k,
                lo: near,
                hi: near_hi,
            });
        }
        Ok(Surface {
            depth,
            segments,
            corruption: None,
        })
    }

    /// Builds a deliberately broken surface whose bottom/top gluing at
    /// generation `k` is shifted by `delta`. Every downstream computation is
    /// still exact; the geometry is simply wrong, which is the point.
    pub fn with_corrupted_gluing(
        depth: u32,
        k: u32,
        delta: (Rational, Rational),
    ) -> Result<Surface, SurfaceError> {
        let mut s = Surface::new(depth)?;
        s.corruption = Some((k, delta));
        Ok(s)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn segments(&self) -> &[EdgeSegment] {
        &self.segments
    }

    /// Gluing translation carrying bottom segment `k` onto top segment `k`:
    /// `t_k = (3·2^{-k} - 1, 1)`, plus any injected corruption.
    pub fn translation(&self, k: u32) -> (Rational, Rational) {
        let mut dx = rat_int(3) * pow2_inv(k) - Rational::one();
        let mut dy = Rational::one();
        if let Some((ck, delta)) = &self.corruption {
            if *ck == k {
                dx += &delta.0;
                dy += &delta.1;
            }
        }
        (dx, dy)
    }

    pub fn spec(&self) -> SurfaceSpec {
        SurfaceSpec {
            alpha: crate::exactnum::rat(1, 2),
            depth: self.depth,
            segments: self.segments.clone(),
            translations: (1..=self.depth)
                .map(|k| {
                    let (dx, dy) = self.translation(k);
                    Translation { k, dx, dy }
                })
                .collect(),
        }
    }

    /// The identified point on the partner segment. Involutive and isometric.
    pub fn glue_map(&self, p: &SurfacePoint) -> Result<SurfacePoint, SurfaceError> {
        match boundary_class(&p.x, &p.y) {
            BoundaryClass::Interior => Err(SurfaceError::NotOnBoundary(
                p.x.to_string(),
                p.y.to_string(),
            )),
            BoundaryClass::Singular(_) => Err(SurfaceError::SingularPoint(
                p.x.to_string(),
                p.y.to_string(),
            )),
            BoundaryClass::Edge { side, k, .. } => {
                let (x, y) = self.glue_coords(side, k, (p.x.clone(), p.y.clone()));
                Ok(SurfacePoint { x, y })
            }
        }
    }

    /// Applies the gluing translation of segment `(side, k)` to a coordinate
    /// pair on that side. Extends continuously to the segment's endpoints,
    /// which is how identification of cutting points is derived.
    pub(crate) fn glue_coords(
        &self,
        side: Side,
        k: u32,
        (x, y): (Rational, Rational),
    ) -> (Rational, Rational) {
        let (dx, dy) = self.translation(k);
        match side {
            Side::Bottom => (x + dx, y + dy),
            Side::Top => (x - dx, y - dy),
            Side::Left => (x + dy, y + dx),
            Side::Right => (x - dy, y - dx),
        }
    }

    /// Glue-limit partners of a cutting point: the images of its coordinate
    /// under the translations of the two adjacent segments (one for `k = 1`
    /// toward the far corner). Derived from the gluing, not hard-coded.
    pub fn identified_partners(&self, label: CutLabel) -> Vec<CutLabel> {
        let CutLabel::Cut { side, k } = label else {
            return Vec::new(); // corners have no single glue-limit partner
        };
        let coords = label.coords();
        let mut partners = Vec::new();
        // Adjacent segment generations: k (toward the far corner) and k+1.
        for seg in [k, k + 1] {
            if seg < 1 {
                continue;
            }
            let image = self.glue_coords(side, seg, coords.clone());
            match boundary_class(&image.0, &image.1) {
                BoundaryClass::Singular(l) => partners.push(l),
                other => {
                    debug_assert!(
                        false,
                        "glue limit of a cutting point is singular, got {other:?}"
                    );
                }
            }
        }
        partners
    }

    /// Identification classes of the materialized cutting points and corners
    /// under the glue-limit relation. The two chains of alternating-parity
    /// cutting points come out here; the remaining two corners stay isolated
    /// in the relation and are merged only by the metric (see
    /// [`Surface::singularity_path`]).
    pub fn singularity_classes(&self) -> Vec<Vec<CutLabel>> {
        let labels = self.all_labels();
        let index: BTreeMap<CutLabel, usize> =
            labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut dsu: Vec<usize> = (0..labels.len()).collect();
        fn find(dsu: &mut Vec<usize>, i: usize) -> usize {
            if dsu[i] != i {
                let r = find(dsu, dsu[i]);
                dsu[i] = r;
            }
            dsu[i]
        }
        for (i, l) in labels.iter().enumerate() {
            for p in self.identified_partners(*l) {
                if let Some(&j) = index.get(&p) {
                    let (ri, rj) = (find(&mut dsu, i), find(&mut dsu, j));
                    dsu[ri] = rj;
                }
            }
        }
        let mut classes: BTreeMap<usize, Vec<CutLabel>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            classes.entry(find(&mut dsu, i)).or_default().push(*l);
        }
        classes.into_values().collect()
    }

    fn all_labels(&self) -> Vec<CutLabel> {
        let mut labels: Vec<CutLabel> = [
            Corner::BottomLeft,
            Corner::BottomRight,
            Corner::TopLeft,
            Corner::TopRight,
        ]
        .into_iter()
        .map(CutLabel::Corner)
        .collect();
        for side in [Side::Bottom, Side::Top, Side::Left, Side::Right] {
            for k in 1..=self.depth {
                labels.push(CutLabel::Cut { side, k });
            }
        }
        labels
    }

    /// Traces a geodesic from `start` in direction `dir`, applying the gluing
    /// at each boundary crossing, with exact intersection coordinates.
    pub fn trace_geodesic(
        &self,
        start: (Rational, Rational),
        dir: DirVec,
        max_crossings: usize,
    ) -> Result<Trace, SurfaceError> {
        let unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
        if !unit(&start.0) || !unit(&start.1) {
            return Err(SurfaceError::OutOfSquare(
                start.0.to_string(),
                start.1.to_string(),
            ));
        }

        let mut current = start.clone();
        // A boundary start pointing outward is glued before flowing.
        if points_outward(&current, dir) == Some(true) {
            match boundary_class(&current.0, &current.1) {
                BoundaryClass::Singular(_) => return Err(SurfaceError::SingularLaunch),
                BoundaryClass::Edge { side, k, .. } => {
                    current = self.glue_coords(side, k, current);
                }
                BoundaryClass::Interior => unreachable!("outward implies boundary"),
            }
        }

        let mut trace = Trace {
            start: start.clone(),
            dir,
            legs: Vec::new(),
            crossings: Vec::new(),
            holonomy: (Rational::zero(), Rational::zero()),
            outcome: TraceOutcome::Truncated,
        };

        loop {
            let exit = flow_to_boundary(&current, dir);
            trace.holonomy.0 += &exit.0 - &current.0;
            trace.holonomy.1 += &exit.1 - &current.1;
            trace.legs.push(Leg {
                from: current.clone(),
                to: exit.clone(),
            });
            // Every boundary arrival consumes crossing budget, so with
            // max_crossings = 0 the very first boundary event truncates.
            if trace.crossings.len() >= max_crossings {
                trace.outcome = TraceOutcome::Truncated;
                return Ok(trace);
            }
            match boundary_class(&exit.0, &exit.1) {
                BoundaryClass::Singular(label) => {
                    trace.outcome = TraceOutcome::Singular(label);
                    return Ok(trace);
                }
                BoundaryClass::Edge { side, k, .. } => {
                    trace.crossings.push(Crossing {
                        side,
                        k,
                        point: exit.clone(),
                    });
                    current = self.glue_coords(side, k, exit);
                    if current == start {
                        trace.outcome = TraceOutcome::Closed;
                        return Ok(trace);
                    }
                }
                BoundaryClass::Interior => unreachable!("flow_to_boundary exits on the boundary"),
            }
        }
    }

    /// Anchors (cutting points and corners, generation ≤ depth) from which a
    /// geodesic in direction `dir` enters the square.
    pub fn launch_anchors(&self, dir: DirVec) -> Vec<CutLabel> {
        self.all_labels()
            .into_iter()
            .filter(|l| {
                let c = l.coords();
                points_inward(&c, dir)
            })
            .collect()
    }

    /// All saddle connections in direction `dir` launched from anchors of
    /// generation ≤ depth, deduplicated and sorted by transversal intercept.
    ///
    /// Only slopes `±2^n` are supported: other rational slopes are not known
    /// to close up at bounded depth, so the API refuses instead of looping.
    pub fn saddle_connections(&self, dir: DirVec) -> Result<Vec<SaddleConnection>, SurfaceError> {
        if dir.dyadic_slope_exp().is_none() {
            return Err(SurfaceError::UnsupportedDirection(dir.q, dir.p));
        }
        let budget = self.trace_budget();
        let mut seen = BTreeSet::new();
        let mut connections = Vec::new();
        for anchor in self.launch_anchors(dir) {
            let start = anchor.coords();
            if !seen.insert(start.clone()) {
                continue;
            }
            let trace = self.trace_geodesic(start.clone(), dir, budget)?;
            match trace.outcome {
                TraceOutcome::Singular(end) => connections.push(SaddleConnection {
                    direction: dir,
                    holonomy: trace.holonomy,
                    crossings: trace.crossings,
                    legs: trace.legs,
                    start: anchor,
                    end,
                }),
                // Impossible with the true gluing (glue images of regular
                // points are regular); reachable under fault injection.
                TraceOutcome::Closed => return Err(SurfaceError::InconsistentGluing),
                TraceOutcome::Truncated => return Err(SurfaceError::TraceBudget(budget)),
            }
        }
        // Transversal intercept p·x0 - q·y0 of the start representative.
        connections.sort_by(|a, b| {
            let va = intercept(&a.legs[0].from, dir);
            let vb = intercept(&b.legs[0].from, dir);
            va.cmp(&vb)
        });
        Ok(connections)
    }

    /// Crossing budget shared by connection tracing and strip closure.
    pub fn trace_budget(&self) -> usize {
        4 * self.depth as usize + 16
    }

    /// An explicit rectifiable path between two completion points, as a
    /// polyline through charts, with its exact length. The length is an upper
    /// bound on the completion distance; for the generation-`k` pairs it
    /// shrinks like `2^{-k}`, which is the witness that all cutting points
    /// are one point of the completion.
    pub fn singularity_path(
        &self,
        a: CutLabel,
        b: CutLabel,
    ) -> Result<(Vec<PathLeg>, Rational), SurfaceError> {
        self.check_label(a)?;
        self.check_label(b)?;
        if a == b {
            return Ok((Vec::new(), Rational::zero()));
        }
        let (nodes, edges) = self.path_graph();
        let index: BTreeMap<CutLabel, usize> =
            nodes.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let (src, dst) = (index[&a], index[&b]);

        // Dijkstra over exact rational weights.
        let mut dist: Vec<Option<Rational>> = vec![None; nodes.len()];
        let mut prev: Vec<Option<usize>> = vec![None; nodes.len()];
        let mut heap: BinaryHeap<(std::cmp::Reverse<Rational>, usize)> = BinaryHeap::new();
        dist[src] = Some(Rational::zero());
        heap.push((std::cmp::Reverse(Rational::zero()), src));
        while let Some((std::cmp::Reverse(d), u)) = heap.pop() {
            if dist[u].as_ref() != Some(&d) {
                continue;
            }
            if u == dst {
                break;
            }
            for (ei, e) in edges.iter().enumerate() {
                let v = if e.a == u {
                    e.b
                } else if e.b == u {
                    e.a
                } else {
                    continue;
                };
                let nd = &d + &e.weight;
                if dist[v].as_ref().is_none_or(|old| nd < *old) {
                    dist[v] = Some(nd.clone());
                    prev[v] = Some(ei);
                    heap.push((std::cmp::Reverse(nd), v));
                }
            }
        }
        let total = dist[dst].clone().expect("path graph is connected");
        // Reconstruct the polyline.
        let mut legs = Vec::new();
        let mut at = dst;
        while at != src {
            let ei = prev[at].expect("reached node has a predecessor");
            let e = &edges[ei];
            let from = if e.a == at { e.b } else { e.a };
            let mut piece = e.legs.clone();
            if e.a == at {
                piece.reverse();
                for l in &mut piece {
                    std::mem::swap(&mut l.from, &mut l.to);
                }
            }
            legs.splice(0..0, piece);
            at = from;
        }
        Ok((legs, total))
    }

    fn check_label(&self, l: CutLabel) -> Result<(), SurfaceError> {
        match l {
            CutLabel::Corner(_) => Ok(()),
            CutLabel::Cut { k, .. } if k >= 1 && k <= self.depth => Ok(()),
            CutLabel::Cut { .. } => Err(SurfaceError::UnknownLabel(l.to_string(), self.depth)),
        }
    }

    /// Graph of completion points: along-edge segments between consecutive
    /// cutting points, plus two-chart arcs realizing each glue identification
    /// (half of a segment on each side of the gluing).
    fn path_graph(&self) -> (Vec<CutLabel>, Vec<PathEdge>) {
        let nodes = self.all_labels();
        let index: BTreeMap<CutLabel, usize> =
            nodes.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut edges = Vec::new();

        let mut add = |a: CutLabel, b: CutLabel, legs: Vec<PathLeg>| {
            let weight = legs
                .iter()
                .map(|l| (&l.to.0 - &l.from.0).abs() + (&l.to.1 - &l.from.1).abs())
                .fold(Rational::zero(), |acc, d| acc + d);
            edges.push(PathEdge {
                a: index[&a],
                b: index[&b],
                weight,
                legs,
            });
        };
        let seg_leg = |a: CutLabel, b: CutLabel| PathLeg {
            from: a.coords(),
            to: b.coords(),
        };

        let chains: [(Side, Corner, Corner); 4] = [
            (Side::Bottom, Corner::BottomLeft, Corner::BottomRight),
            (Side::Top, Corner::TopRight, Corner::TopLeft),
            (Side::Left, Corner::BottomLeft, Corner::TopLeft),
            (Side::Right, Corner::TopRight, Corner::BottomRight),
        ];
        for (side, first, last) in chains {
            // first corner - cut 1 - cut 2 - ... - cut depth - last corner
            let mut prev = CutLabel::Corner(first);
            for k in 1..=self.depth {
                let cur = CutLabel::Cut { side, k };
                add(prev, cur, vec![seg_leg(prev, cur)]);
                prev = cur;
            }
            add(
                prev,
                CutLabel::Corner(last),
                vec![seg_leg(prev, CutLabel::Corner(last))],
            );
        }

        // Two-chart arcs: from a cutting point, walk half of an adjacent
        // segment, switch charts through the gluing, and land on the
        // identified point. The arc through segment k has length 2^{-k}.
        for side in [Side::Bottom, Side::Top, Side::Left, Side::Right] {
            for k in 1..=self.depth {
                let label = CutLabel::Cut { side, k };
                let coords = label.coords();
                for seg in [k, k + 1] {
                    if seg > self.depth {
                        continue;
                    }
                    let image = self.glue_coords(side, seg, coords.clone());
                    let BoundaryClass::Singular(partner) = boundary_class(&image.0, &image.1)
                    else {
                        continue;
                    };
                    if !index.contains_key(&partner) {
                        continue;
                    }
                    // Midpoint of segment `seg` on `side`, and its glue image.
                    let mid = self.segment_midpoint(side, seg);
                    let mid_img = self.glue_coords(side, seg, mid.clone());
                    add(
                        label,
                        partner,
                        vec![
                            PathLeg {
                                from: coords.clone(),
                                to: mid.clone(),
                            },
                            PathLeg {
                                from: mid_img,
                                to: partner.coords(),
                            },
                        ],
                    );
                }
            }
        }
        (nodes, edges)
    }

    fn segment_midpoint(&self, side: Side, k: u32) -> (Rational, Rational) {
        let half = crate::exactnum::rat(1, 2);
        let near = pow2_inv(k);
        let mid_far = Rational::one() - &near - &near * &half; // midpoint of (1-2^{1-k}, 1-2^{-k})
        let mid_near = &near + &near * &half; // midpoint of (2^{-k}, 2^{1-k})
        match side {
            Side::Bottom => (mid_far, rat_int(0)),
            Side::Top => (mid_near, rat_int(1)),
            Side::Left => (rat_int(0), mid_far),
            Side::Right => (rat_int(1), mid_near),
        }
    }
}

struct PathEdge {
    a: usize,
    b: usize,
    weight: Rational,
    legs: Vec<PathLeg>,
}

/// One straight chart segment of a completion path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLeg {
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub from: (Rational, Rational),
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub to: (Rational, Rational),
}

/// Transversal intercept `p·x − q·y`.
pub fn intercept(point: &(Rational, Rational), dir: DirVec) -> Rational {
    rat_int(dir.p) * &point.0 - rat_int(dir.q) * &point.1
}

/// Whether `dir` points out of the closed square at a boundary point.
pub(crate) fn points_outward(p: &(Rational, Rational), dir: DirVec) -> Option<bool> {
    let zero = Rational::zero();
    let one = Rational::one();
    let mut outward = false;
    let mut on_boundary = false;
    if p.0 == zero {
        on_boundary = true;
        outward |= dir.q < 0;
    }
    if p.0 == one {
        on_boundary = true;
        outward |= dir.q > 0;
    }
    if p.1 == zero {
        on_boundary = true;
        outward |= dir.p < 0;
    }
    if p.1 == one {
        on_boundary = true;
        outward |= dir.p > 0;
    }
    on_boundary.then_some(outward)
}

pub(crate) fn points_inward(p: &(Rational, Rational), dir: DirVec) -> bool {
    points_outward(p, dir) == Some(false)
}

/// Straight flow from a point to its exit on the square's boundary.
fn flow_to_boundary(p: &(Rational, Rational), dir: DirVec) -> (Rational, Rational) {
    let tx = match dir.q.cmp(&0) {
        Ordering::Greater => Some((Rational::one() - &p.0) / rat_int(dir.q)),
        Ordering::Less => Some(-&p.0 / rat_int(dir.q)),
        Ordering::Equal => None,
    };
    let ty = match dir.p.cmp(&0) {
        Ordering::Greater => Some((Rational::one() - &p.1) / rat_int(dir.p)),
        Ordering::Less => Some(-&p.1 / rat_int(dir.p)),
        Ordering::Equal => None,
    };
    let t = match (tx, ty) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("direction is nonzero"),
    };
    (&p.0 + rat_int(dir.q) * &t, &p.1 + rat_int(dir.p) * &t)
}

/// One chart leg of a traced geodesic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub from: (Rational, Rational),
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub to: (Rational, Rational),
}

/// A boundary crossing: the exit segment and the exact exit point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub side: Side,
    pub k: u32,
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub point: (Rational, Rational),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceOutcome {
    /// The line met a cutting point or corner exactly.
    Singular(CutLabel),
    /// Returned to the start point: a closed geodesic.
    Closed,
    /// Crossing budget exhausted.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub start: (Rational, Rational),
    pub dir: DirVec,
    pub legs: Vec<Leg>,
    pub crossings: Vec<Crossing>,
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub holonomy: (Rational, Rational),
    pub outcome: TraceOutcome,
}

/// A geodesic segment between singularities, recorded as its chart legs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub direction: DirVec,
    #[serde(with = "crate::exactnum::rat_pair_str")]
    pub holonomy: (Rational, Rational),
    pub crossings: Vec<Crossing>,
    pub legs: Vec<Leg>,
    pub start: CutLabel,
    pub end: CutLabel,
}

impl SaddleConnection {
    /// Squared Euclidean length; rational because the holonomy is.
    pub fn length_sq(&self) -> Rational {
        &self.holonomy.0 * &self.holonomy.0 + &self.holonomy.1 * &self.holonomy.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;

    fn surface(depth: u32) -> Surface {
        Surface::new(depth).unwrap()
    }

    #[test]
    fn build_surface_examples() {
        let s = surface(5);
        let bottom: Vec<_> = s
            .segments()
            .iter()
            .filter(|e| e.side == Side::Bottom)
            .collect();
        assert_eq!(bottom[0].lo, rat(0, 1));
        assert_eq!(bottom[0].hi, rat(1, 2));
        assert_eq!(s.translation(1), (rat(1, 2), rat(1, 1)));
        assert_eq!(bottom[1].lo, rat(1, 2));
        assert_eq!(bottom[1].hi, rat(3, 4));
        assert_eq!(s.translation(2), (rat(-1, 4), rat(1, 1)));
        assert_eq!(bottom[4].lo, rat(15, 16));
        assert_eq!(bottom[4].hi, rat(31, 32));
        assert_eq!(s.translation(5), (rat(-29, 32), rat(1, 1)));
        // Lengths sum to 1 - 2^{-depth}.
        let total: Rational = bottom
            .iter()
            .map(|e| &e.hi - &e.lo)
            .fold(rat(0, 1), |a, d| a + d);
        assert_eq!(total, rat(31, 32));
    }

    #[test]
    fn glue_map_examples() {
        let s = surface(6);
        let p = |x, y| SurfacePoint::new(x, y).unwrap();
        let img = s.glue_map(&p(rat(1, 4), rat(0, 1))).unwrap();
        assert_eq!((img.x, img.y), (rat(3, 4), rat(1, 1)));
        let img = s.glue_map(&p(rat(0, 1), rat(1, 4))).unwrap();
        assert_eq!((img.x, img.y), (rat(1, 1), rat(3, 4)));
        let img = s.glue_map(&p(rat(5, 8), rat(0, 1))).unwrap();
        assert_eq!((img.x, img.y), (rat(3, 8), rat(1, 1)));
    }

    #[test]
    fn glue_map_error_paths() {
        let s = surface(4);
        // Cutting point: not a surface point at all.
        assert!(matches!(
            SurfacePoint::new(rat(1, 2), rat(0, 1)),
            Err(SurfaceError::SingularPoint(..))
        ));
        let interior = SurfacePoint::new(rat(1, 3), rat(1, 3)).unwrap();
        assert!(matches!(
            s.glue_map(&interior),
            Err(SurfaceError::NotOnBoundary(..))
        ));
    }

    #[test]
    fn glue_is_involution_and_isometry() {
        let s = surface(10);
        for k in 1..=10u32 {
            // A point inside bottom segment k, off-center.
            let lo = Rational::one() - pow2_inv(k - 1).min(Rational::one());
            let lo = if k == 1 { Rational::zero() } else { lo };
            let x = lo + pow2_inv(k + 2); // lo + quarter of the segment length... strictly inside
            let p = SurfacePoint::new(x.clone(), rat(0, 1)).unwrap();
            let img = s.glue_map(&p).unwrap();
            let back = s.glue_map(&img).unwrap();
            assert_eq!(back, p, "involution at generation {k}");
            // Isometry: the translation is the stored gluing vector.
            let (dx, dy) = s.translation(k);
            assert_eq!((&img.x - &p.x, &img.y - &p.y), (dx, dy));
        }
    }

    #[test]
    fn trace_diagonal_saddle_connection() {
        let s = surface(4);
        let trace = s
            .trace_geodesic((rat(0, 1), rat(0, 1)), DirVec::new(1, 1).unwrap(), 20)
            .unwrap();
        assert_eq!(
            trace.outcome,
            TraceOutcome::Singular(CutLabel::Corner(Corner::TopRight))
        );
        assert_eq!(trace.holonomy, (rat(1, 1), rat(1, 1)));
    }

    #[test]
    fn trace_truncation_contract() {
        let s = surface(4);
        let dir = DirVec::new(0, 1).unwrap();
        let t = s.trace_geodesic((rat(1, 8), rat(0, 1)), dir, 0).unwrap();
        assert_eq!(t.outcome, TraceOutcome::Truncated);
        // With crossings allowed the vertical line meets the cutting point
        // (1/8, 1) exactly, which is a singularity hit.
        let t = s.trace_geodesic((rat(1, 8), rat(0, 1)), dir, 4).unwrap();
        assert_eq!(
            t.outcome,
            TraceOutcome::Singular(CutLabel::Cut {
                side: Side::Top,
                k: 3
            })
        );
    }

    #[test]
    fn trace_slope_two_from_corner() {
        let s = surface(4);
        let t = s
            .trace_geodesic((rat(0, 1), rat(0, 1)), DirVec::new(1, 2).unwrap(), 20)
            .unwrap();
        assert_eq!(
            t.outcome,
            TraceOutcome::Singular(CutLabel::Cut {
                side: Side::Top,
                k: 1
            })
        );
        assert_eq!(t.holonomy, (rat(1, 2), rat(1, 1)));
    }

    #[test]
    fn trace_detects_closed_geodesics() {
        // A slope-1 line from a regular bottom point comes back to itself
        // after two crossings: the core of the largest cylinder.
        let s = surface(4);
        let t = s
            .trace_geodesic((rat(1, 10), rat(0, 1)), DirVec::new(1, 1).unwrap(), 20)
            .unwrap();
        assert_eq!(t.outcome, TraceOutcome::Closed);
        assert_eq!(t.crossings.len(), 2);
        assert_eq!(t.holonomy, (rat(3, 2), rat(3, 2)));
    }

    #[test]
    fn vertical_trace_continues_through_regular_glue() {
        // (1/5, 1) lies inside a top segment, so the vertical line continues
        // from the glue image instead of stopping.
        let s = surface(6);
        let t = s
            .trace_geodesic((rat(1, 5), rat(0, 1)), DirVec::new(0, 1).unwrap(), 3)
            .unwrap();
        assert_eq!(t.outcome, TraceOutcome::Truncated);
        assert_eq!(t.crossings.len(), 3);
        assert_eq!(t.crossings[0].point, (rat(1, 5), rat(1, 1)));
        assert_eq!(
            t.legs[1].from,
            (rat(33, 40), rat(0, 1)),
            "glue image of (1/5, 1)"
        );
    }

    #[test]
    fn trace_preserves_direction_exactly() {
        let s = surface(6);
        let dir = DirVec::new(1, 2).unwrap();
        let t = s
            .trace_geodesic((rat(17, 100), rat(0, 1)), dir, 12)
            .unwrap();
        for leg in &t.legs {
            let dx = &leg.to.0 - &leg.from.0;
            let dy = &leg.to.1 - &leg.from.1;
            assert_eq!(
                dy * rat_int(dir.q),
                dx * rat_int(dir.p),
                "leg parallel to direction"
            );
        }
    }

    #[test]
    fn saddle_connections_slope_one() {
        let s = surface(4);
        let conns = s.saddle_connections(DirVec::new(1, 1).unwrap()).unwrap();
        let hol: Vec<_> = conns.iter().map(|c| c.holonomy.clone()).collect();
        let count = |h: &(Rational, Rational)| hol.iter().filter(|x| *x == h).count();
        assert_eq!(
            count(&(rat(1, 2), rat(1, 2))),
            2,
            "two half-diagonal connections"
        );
        assert!(count(&(rat(1, 1), rat(1, 1))) >= 1, "main diagonal present");
        // Sorted by transversal intercept.
        let mut intercepts: Vec<_> = conns
            .iter()
            .map(|c| intercept(&c.legs[0].from, c.direction))
            .collect();
        let mut sorted = intercepts.clone();
        sorted.sort();
        assert_eq!(intercepts, sorted);
        intercepts.dedup();
        assert_eq!(intercepts.len(), conns.len(), "no duplicate launches");
    }

    #[test]
    fn saddle_connections_slope_two_and_four() {
        let s = surface(4);
        let conns = s.saddle_connections(DirVec::new(1, 2).unwrap()).unwrap();
        assert!(conns.iter().any(|c| c.holonomy == (rat(1, 2), rat(1, 1))));
        let conns = s.saddle_connections(DirVec::new(1, 4).unwrap()).unwrap();
        assert!(conns.iter().any(|c| c.holonomy == (rat(1, 4), rat(1, 1))));
    }

    #[test]
    fn saddle_connections_reject_non_dyadic() {
        let s = surface(4);
        assert!(matches!(
            s.saddle_connections(DirVec::new(2, 3).unwrap()),
            Err(SurfaceError::UnsupportedDirection(2, 3))
        ));
        assert!(matches!(
            s.saddle_connections(DirVec::new(0, 1).unwrap()),
            Err(SurfaceError::UnsupportedDirection(0, 1))
        ));
    }

    #[test]
    fn dyadic_traces_terminate() {
        let s = surface(12);
        let budget = s.trace_budget();
        for n in -4..=4i32 {
            let dir = DirVec::from_slope_exp(n);
            for anchor in s.launch_anchors(dir) {
                let t = s.trace_geodesic(anchor.coords(), dir, budget).unwrap();
                assert!(
                    matches!(t.outcome, TraceOutcome::Singular(_)),
                    "slope 2^{n} trace from {anchor} terminates"
                );
            }
        }
    }

    #[test]
    fn identification_chains_alternate() {
        let s = surface(6);
        let classes = s.singularity_classes();
        assert_eq!(classes.len(), 4, "two chains plus two isolated corners");
        let class_of = |l: CutLabel| classes.iter().position(|c| c.contains(&l)).unwrap();
        let b = |k| CutLabel::Cut {
            side: Side::Bottom,
            k,
        };
        let t = |k| CutLabel::Cut { side: Side::Top, k };
        // Every second cutting point: B1 ~ T2 ~ B3, B2 ~ T1 ~ T3.
        assert_eq!(class_of(b(1)), class_of(t(2)));
        assert_eq!(class_of(b(1)), class_of(b(3)));
        assert_eq!(class_of(b(2)), class_of(t(1)));
        assert_ne!(class_of(b(1)), class_of(b(2)));
        assert_eq!(class_of(b(1)), class_of(CutLabel::Corner(Corner::TopRight)));
        assert_eq!(
            class_of(t(1)),
            class_of(CutLabel::Corner(Corner::BottomLeft))
        );
        // The transposed chains join through the shared corners.
        let l = |k| CutLabel::Cut {
            side: Side::Left,
            k,
        };
        let r = |k| CutLabel::Cut {
            side: Side::Right,
            k,
        };
        assert_eq!(class_of(l(1)), class_of(b(1)));
        assert_eq!(class_of(r(1)), class_of(t(1)));
    }

    #[test]
    fn singularity_path_examples() {
        let s = surface(12);
        let b = |k| CutLabel::Cut {
            side: Side::Bottom,
            k,
        };
        let t = |k| CutLabel::Cut { side: Side::Top, k };

        let (legs, len) = s.singularity_path(b(3), b(3)).unwrap();
        assert!(legs.is_empty());
        assert!(len.is_zero());

        // Identified pair at generation k: two-chart arc of length 2^{-k-1}.
        for k in 2..=8 {
            let (legs, len) = s.singularity_path(b(k), t(k + 1)).unwrap();
            assert!(!legs.is_empty());
            assert!(len <= pow2_inv(k - 1), "length ≤ 2^{{1-k}} at k={k}");
            assert_eq!(len, pow2_inv(k + 1));
        }
        // Generation-3 pair vs generation-5 pair: lengths shrink by factor 4.
        let (_, l3) = s.singularity_path(b(3), t(4)).unwrap();
        let (_, l5) = s.singularity_path(b(5), t(6)).unwrap();
        assert_eq!(l3, &l5 * rat_int(4));

        // Cross-chain pair: adjacent cutting points on the same side.
        let (_, len) = s.singularity_path(b(4), b(5)).unwrap();
        assert_eq!(len, pow2_inv(5));

        assert!(matches!(
            s.singularity_path(b(3), t(13)),
            Err(SurfaceError::UnknownLabel(..))
        ));
    }

    #[test]
    fn singularity_path_lengths_collapse() {
        let s = surface(12);
        let b = |k| CutLabel::Cut {
            side: Side::Bottom,
            k,
        };
        let mut prev: Option<Rational> = None;
        for k in 2..=11 {
            let (_, len) = s.singularity_path(b(k), b(k + 1)).unwrap();
            assert!(len <= pow2_inv(k - 2), "≤ 2^{{2-k}}");
            if let Some(p) = prev {
                assert!(len < p, "strictly decreasing");
            }
            prev = Some(len);
        }
    }

    #[test]
    fn corrupted_gluing_breaks_involution_geometry() {
        let s = Surface::with_corrupted_gluing(4, 1, (rat(-1, 4), rat(0, 1))).unwrap();
        // Translation for k=1 becomes (1/4, 1): image interval overlaps the
        // wrong top segments, so a glued point need not come back.
        let p = SurfacePoint::new(rat(1, 8), rat(0, 1)).unwrap();
        let img = s.glue_map(&p).unwrap();
        assert_eq!((img.x.clone(), img.y.clone()), (rat(3, 8), rat(1, 1)));
        let back = s.glue_map(&img).unwrap();
        assert_ne!(back, p);
    }

    #[test]
    fn json_dump_round_trips() {
        let s = surface(3);
        let spec = s.spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: SurfaceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        assert!(json.contains(r#""alpha":"1/2""#));
    }
}
