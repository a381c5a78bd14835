//! Declarative eigenvalue problems, the built-in benchmark catalog, and
//! collocation sampling.
//!
//! A problem is written with a linear eigenvalue parameter `μ`:
//!
//! ```text
//! 𝒟u + μ·h(u) = 0          in Ω
//! ℬ₀u + μ·ℬ₁u = 0          on each boundary segment
//! ```
//!
//! and the physical eigenvalue is `λ = μ^{1/p}`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::features::MultiIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorTerm {
    pub coefficient: f64,
    pub index: MultiIndex,
}

/// `Σ_t c_t ∂^{α_t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOperator {
    terms: Vec<OperatorTerm>,
}

impl LinearOperator {
    pub fn new(terms: Vec<OperatorTerm>) -> Result<Self> {
        if terms.is_empty() {
            return config_err("linear operator needs at least one term");
        }
        let dim = terms[0].index.dim();
        if terms.iter().any(|t| t.index.dim() != dim) {
            return config_err("operator terms mix spatial dimensions");
        }
        Ok(Self { terms })
    }

    pub fn derivative(coefficient: f64, index: MultiIndex) -> Self {
        Self {
            terms: vec![OperatorTerm { coefficient, index }],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::derivative(1.0, MultiIndex::zero(dim))
    }

    pub fn laplacian() -> Self {
        Self {
            terms: vec![
                OperatorTerm { coefficient: 1.0, index: MultiIndex::dxy(2, 0) },
                OperatorTerm { coefficient: 1.0, index: MultiIndex::dxy(0, 2) },
            ],
        }
    }

    pub fn biharmonic() -> Self {
        Self {
            terms: vec![
                OperatorTerm { coefficient: 1.0, index: MultiIndex::dxy(4, 0) },
                OperatorTerm { coefficient: 2.0, index: MultiIndex::dxy(2, 2) },
                OperatorTerm { coefficient: 1.0, index: MultiIndex::dxy(0, 4) },
            ],
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.coefficient *= factor;
        }
        self
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].index.dim()
    }

    pub fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.index.total_order()).max().unwrap_or(0)
    }
}

/// One piece of the boundary: an endpoint of an interval or a straight edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Point { x: f64 },
    Line { start: [f64; 2], end: [f64; 2] },
}

impl Segment {
    /// Length for edges; endpoints carry unit (counting) measure.
    pub fn measure(&self) -> f64 {
        match *self {
            Segment::Point { .. } => 1.0,
            Segment::Line { start, end } => (end[0] - start[0]).hypot(end[1] - start[1]),
        }
    }

    fn distance(&self, p: &[f64]) -> f64 {
        match *self {
            Segment::Point { x } => (p[0] - x).abs(),
            Segment::Line { start, end } => {
                let d = [end[0] - start[0], end[1] - start[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = (((p[0] - start[0]) * d[0] + (p[1] - start[1]) * d[1]) / len2).clamp(0.0, 1.0);
                let q = [start[0] + t * d[0], start[1] + t * d[1]];
                (p[0] - q[0]).hypot(p[1] - q[1])
            }
        }
    }
}

/// Problem geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    /// The square `(lo, hi)²` with the closed lower-right quadrant
    /// `[mid, hi] × [lo, mid]` removed.
    LShape { lo: f64, hi: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Interval { a, b } => a < b,
            Domain::Rectangle { ax, bx, ay, by } => ax < bx && ay < by,
            Domain::LShape { lo, hi } => lo < hi,
        };
        if ok {
            Ok(())
        } else {
            config_err(format!("degenerate domain {self:?}"))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Length or area.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { ax, bx, ay, by } => (bx - ax) * (by - ay),
            Domain::LShape { lo, hi } => 0.75 * (hi - lo) * (hi - lo),
        }
    }

    /// Boundary pieces in order (left/right endpoint, or counter-clockwise edges).
    pub fn segments(&self) -> Vec<Segment> {
        match *self {
            Domain::Interval { a, b } => vec![Segment::Point { x: a }, Segment::Point { x: b }],
            Domain::Rectangle { ax, bx, ay, by } => polygon(&[[ax, ay], [bx, ay], [bx, by], [ax, by]]),
            Domain::LShape { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                polygon(&[[lo, lo], [mid, lo], [mid, mid], [hi, mid], [hi, hi], [lo, hi]])
            }
        }
    }

    /// Per-coordinate `(min, max)` of the bounding box.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match *self {
            Domain::Interval { a, b } => vec![(a, b)],
            Domain::Rectangle { ax, bx, ay, by } => vec![(ax, bx), (ay, by)],
            Domain::LShape { lo, hi } => vec![(lo, hi), (lo, hi)],
        }
    }

    /// Strict interior membership. The removed L-shape quadrant is closed.
    pub fn contains(&self, p: &[f64]) -> bool {
        match *self {
            Domain::Interval { a, b } => p[0] > a && p[0] < b,
            Domain::Rectangle { ax, bx, ay, by } => p[0] > ax && p[0] < bx && p[1] > ay && p[1] < by,
            Domain::LShape { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                let in_square = p[0] > lo && p[0] < hi && p[1] > lo && p[1] < hi;
                in_square && !(p[0] >= mid && p[1] <= mid)
            }
        }
    }

    /// Midpoint-rule nodes: centres of a `cells`-per-axis grid over the
    /// bounding box that fall inside the domain, with the common cell volume.
    /// Exact cell coverage of the L-shape needs an even `cells`.
    pub fn midpoint_grid(&self, cells: usize) -> (Mat<f64>, f64) {
        let bbox = self.bounding_box();
        let centre = |k: usize, i: usize| {
            let (lo, hi) = bbox[k];
            lo + (hi - lo) * (i as f64 + 0.5) / cells as f64
        };
        let volume: f64 = bbox.iter().map(|(lo, hi)| (hi - lo) / cells as f64).product();
        let points: Vec<Vec<f64>> = if bbox.len() == 1 {
            (0..cells).map(|i| vec![centre(0, i)]).collect()
        } else {
            (0..cells)
                .flat_map(|j| (0..cells).map(move |i| (i, j)))
                .map(|(i, j)| vec![centre(0, i), centre(1, j)])
                .filter(|p| self.contains(p))
                .collect()
        };
        let dim = bbox.len();
        (Mat::from_fn(points.len(), dim, |i, k| points[i][k]), volume)
    }

    /// Membership in the closure of the domain.
    pub fn contains_closure(&self, p: &[f64]) -> bool {
        let bbox = self.bounding_box();
        let in_box = p.iter().zip(&bbox).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi);
        match *self {
            Domain::LShape { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                in_box && !(p[0] > mid && p[1] < mid)
            }
            _ => in_box,
        }
    }

    pub fn distance_to_boundary(&self, p: &[f64]) -> f64 {
        self.segments()
            .iter()
            .map(|s| s.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

fn polygon(vertices: &[[f64; 2]]) -> Vec<Segment> {
    (0..vertices.len())
        .map(|i| Segment::Line {
            start: vertices[i],
            end: vertices[(i + 1) % vertices.len()],
        })
        .collect()
}

/// `ℬ₀u + μ·ℬ₁u = 0` imposed on one boundary segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub base: LinearOperator,
    #[serde(default)]
    pub eig: Option<LinearOperator>,
    /// Index into [`Domain::segments`].
    pub segment: usize,
    pub n_points: usize,
}

impl BoundaryCondition {
    fn new(base: LinearOperator, segment: usize) -> Self {
        Self {
            base,
            eig: None,
            segment,
            n_points: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub diff_op: LinearOperator,
    pub carrier_op: LinearOperator,
    pub boundary: Vec<BoundaryCondition>,
    /// `p` in `λ = μ^{1/p}`.
    pub eigen_exponent: u32,
    pub search_bounds: (f64, f64),
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let dim = self.dim();
        let segments = self.domain.segments();
        let mut ops = vec![&self.diff_op, &self.carrier_op];
        for (i, bc) in self.boundary.iter().enumerate() {
            if bc.segment >= segments.len() {
                return config_err(format!(
                    "boundary[{i}].segment = {} but the domain has {} segments",
                    bc.segment,
                    segments.len()
                ));
            }
            if bc.n_points == 0 {
                return config_err(format!("boundary[{i}].n_points must be at least 1"));
            }
            if matches!(segments[bc.segment], Segment::Point { .. }) && bc.n_points != 1 {
                return config_err(format!("boundary[{i}] sits on an endpoint and needs n_points = 1"));
            }
            ops.push(&bc.base);
            if let Some(e) = &bc.eig {
                ops.push(e);
            }
        }
        for op in ops {
            if op.terms().is_empty() {
                return config_err("operators must have at least one term");
            }
            if op.terms().iter().any(|t| t.index.dim() != dim) {
                return config_err(format!("operator {op:?} does not match domain dimension {dim}"));
            }
            if op.max_order() > crate::features::MAX_ORDER {
                return Err(Error::UnsupportedOrder {
                    order: op.max_order(),
                    max: crate::features::MAX_ORDER,
                });
            }
        }
        if ![1, 2, 4].contains(&self.eigen_exponent) {
            return config_err(format!("eigen_exponent must be 1, 2 or 4, got {}", self.eigen_exponent));
        }
        let (lo, hi) = self.search_bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return config_err(format!("search_bounds ({lo}, {hi}) must satisfy lo < hi"));
        }
        Ok(())
    }

    /// `λ = μ^{1/p}`; `None` for negative `μ` when `p > 1`.
    pub fn physical_eigenvalue(&self, mu: f64) -> Option<f64> {
        match self.eigen_exponent {
            1 => Some(mu),
            p if mu >= 0.0 => Some(mu.powf(1.0 / p as f64)),
            _ => None,
        }
    }

    pub fn has_eigen_boundary(&self) -> bool {
        self.boundary.iter().any(|bc| bc.eig.is_some())
    }

    /// Resets edge point counts to `density` points per unit length.
    pub fn with_boundary_density(mut self, density: f64) -> Self {
        let segments = self.domain.segments();
        for bc in &mut self.boundary {
            bc.n_points = match segments[bc.segment] {
                Segment::Point { .. } => 1,
                s => ((density * s.measure()).round() as usize).max(1),
            };
        }
        self
    }
}

/// Names accepted by [`catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    BucklingPinPin,
    BucklingFixedFixed,
    BucklingFixedPin,
    BucklingFixedFree,
    HelmholtzSquare,
    HelmholtzLshape,
    PlateSs,
}

impl ProblemName {
    pub const ALL: [ProblemName; 7] = [
        ProblemName::BucklingPinPin,
        ProblemName::BucklingFixedFixed,
        ProblemName::BucklingFixedPin,
        ProblemName::BucklingFixedFree,
        ProblemName::HelmholtzSquare,
        ProblemName::HelmholtzLshape,
        ProblemName::PlateSs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemName::BucklingPinPin => "buckling_pin_pin",
            ProblemName::BucklingFixedFixed => "buckling_fixed_fixed",
            ProblemName::BucklingFixedPin => "buckling_fixed_pin",
            ProblemName::BucklingFixedFree => "buckling_fixed_free",
            ProblemName::HelmholtzSquare => "helmholtz_square",
            ProblemName::HelmholtzLshape => "helmholtz_lshape",
            ProblemName::PlateSs => "plate_ss",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(", ")
    }

    /// Discretization defaults used when a run does not override them.
    pub fn recommended(&self) -> Recommended {
        use std::f64::consts::PI;
        match self {
            ProblemName::BucklingPinPin
            | ProblemName::BucklingFixedFixed
            | ProblemName::BucklingFixedPin
            | ProblemName::BucklingFixedFree => Recommended {
                bandwidth: 1.0,
                n_interior: 300,
                boundary_density: 1.0,
            },
            ProblemName::HelmholtzSquare => Recommended {
                bandwidth: 4.0 * PI,
                n_interior: 1000,
                boundary_density: 50.0,
            },
            ProblemName::HelmholtzLshape => Recommended {
                bandwidth: 8.0 * PI,
                n_interior: 2000,
                boundary_density: 40.0,
            },
            ProblemName::PlateSs => Recommended {
                bandwidth: PI,
                n_interior: 1500,
                boundary_density: 8.0,
            },
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownProblem {
                name: s.to_string(),
                valid: Self::valid_names(),
            })
    }
}

/// Per-problem discretization defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommended {
    pub bandwidth: f64,
    pub n_interior: usize,
    /// Boundary points per unit edge length (2-D problems).
    pub boundary_density: f64,
}

/// Looks up a built-in benchmark problem by name.
pub fn catalog(name: &str) -> Result<ProblemSpec> {
    Ok(catalog_entry(name.parse()?))
}

pub fn catalog_entry(name: ProblemName) -> ProblemSpec {
    let spec = match name {
        ProblemName::BucklingPinPin
        | ProblemName::BucklingFixedFixed
        | ProblemName::BucklingFixedPin
        | ProblemName::BucklingFixedFree => buckling(name),
        ProblemName::HelmholtzSquare => helmholtz(
            name,
            Domain::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 },
            (10.0, 150.0),
        ),
        ProblemName::HelmholtzLshape => helmholtz(name, Domain::LShape { lo: -1.0, hi: 1.0 }, (5.0, 100.0)),
        ProblemName::PlateSs => plate(),
    };
    spec.with_boundary_density(name.recommended().boundary_density)
}

fn buckling(name: ProblemName) -> ProblemSpec {
    let d = |k| LinearOperator::derivative(1.0, MultiIndex::dx(k));
    // segment 0 = x = 0, segment 1 = x = 1
    let clamped = |seg| vec![BoundaryCondition::new(d(0), seg), BoundaryCondition::new(d(1), seg)];
    let pinned = |seg| vec![BoundaryCondition::new(d(0), seg), BoundaryCondition::new(d(2), seg)];
    let boundary = match name {
        ProblemName::BucklingPinPin => [pinned(0), pinned(1)].concat(),
        ProblemName::BucklingFixedFixed => [clamped(0), clamped(1)].concat(),
        ProblemName::BucklingFixedPin => [clamped(0), pinned(1)].concat(),
        _ => {
            // free end: zero moment and zero shear, w''' + μ w' = 0
            let mut shear = BoundaryCondition::new(d(3), 1);
            shear.eig = Some(d(1));
            [clamped(0), vec![BoundaryCondition::new(d(2), 1), shear]].concat()
        }
    };
    ProblemSpec {
        name: name.as_str().to_string(),
        domain: Domain::Interval { a: 0.0, b: 1.0 },
        diff_op: d(4),
        carrier_op: d(2),
        boundary,
        eigen_exponent: 2,
        search_bounds: (1.0, 60.0),
    }
}

fn helmholtz(name: ProblemName, domain: Domain, search_bounds: (f64, f64)) -> ProblemSpec {
    let boundary = (0..domain.segments().len())
        .map(|s| BoundaryCondition::new(LinearOperator::identity(2), s))
        .collect();
    ProblemSpec {
        name: name.as_str().to_string(),
        domain,
        diff_op: LinearOperator::laplacian(),
        carrier_op: LinearOperator::identity(2),
        boundary,
        eigen_exponent: 1,
        search_bounds,
    }
}

fn plate() -> ProblemSpec {
    let domain = Domain::Rectangle { ax: 0.0, bx: 10.0, ay: 0.0, by: 5.0 };
    // simply supported: w = 0 and Δw = 0 along every edge
    let boundary = (0..4)
        .flat_map(|s| {
            [
                BoundaryCondition::new(LinearOperator::identity(2), s),
                BoundaryCondition::new(LinearOperator::laplacian(), s),
            ]
        })
        .collect();
    ProblemSpec {
        name: ProblemName::PlateSs.as_str().to_string(),
        domain,
        diff_op: LinearOperator::biharmonic(),
        carrier_op: LinearOperator::identity(2).scaled(-1.0),
        boundary,
        eigen_exponent: 4,
        search_bounds: (0.1, 10.0),
    }
}

/// How the non-triviality reference point is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ReferencePolicy {
    Fixed { point: Vec<f64> },
    /// Uniform over interior points at least `margin × (shortest bounding-box side)`
    /// away from the boundary.
    Random { margin: f64 },
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        ReferencePolicy::Random { margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct BoundarySamples {
    /// `n_points × d`.
    pub points: Mat<f64>,
    /// Quadrature weight `|segment| / n_points`.
    pub weight: f64,
}

/// Fixed sample locations for one discretized loss.
#[derive(Debug, Clone)]
pub struct CollocationSet {
    /// `N × d`.
    pub interior: Mat<f64>,
    /// `|Ω| / N`.
    pub interior_weight: f64,
    /// One entry per boundary condition, in [`ProblemSpec::boundary`] order.
    pub boundary: Vec<BoundarySamples>,
    pub reference: Reference,
    pub seed: u64,
}

impl CollocationSet {
    pub fn with_reference(&self, reference: Reference) -> Self {
        let mut out = self.clone();
        out.reference = reference;
        out
    }
}

/// Draws interior points uniformly on Ω, boundary points uniformly on each
/// segment, and a reference point according to `policy`.
pub fn sample_collocation(
    spec: &ProblemSpec,
    n_interior: usize,
    policy: &ReferencePolicy,
    u_ref: f64,
    seed: u64,
) -> Result<CollocationSet> {
    spec.validate()?;
    if n_interior == 0 {
        return config_err("n_interior must be at least 1");
    }
    if u_ref == 0.0 || !u_ref.is_finite() {
        return config_err("u_ref must be finite and nonzero");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = &spec.domain;
    let dim = domain.dim();
    let bbox = domain.bounding_box();
    let axes: Vec<Uniform<f64>> = bbox.iter().map(|&(lo, hi)| Uniform::new(lo, hi)).collect();

    let mut interior = Mat::<f64>::zeros(n_interior, dim);
    let mut p = vec![0.0; dim];
    let mut n = 0;
    while n < n_interior {
        for (k, ax) in axes.iter().enumerate() {
            p[k] = ax.sample(&mut rng);
        }
        if domain.contains(&p) {
            for k in 0..dim {
                interior[(n, k)] = p[k];
            }
            n += 1;
        }
    }

    let segments = domain.segments();
    let boundary = spec
        .boundary
        .iter()
        .map(|bc| {
            let seg = segments[bc.segment];
            let points = match seg {
                Segment::Point { x } => Mat::from_fn(1, 1, |_, _| x),
                Segment::Line { start, end } => {
                    let ts: Vec<f64> = (0..bc.n_points).map(|_| rng.gen::<f64>()).collect();
                    Mat::from_fn(bc.n_points, 2, |i, k| start[k] + ts[i] * (end[k] - start[k]))
                }
            };
            BoundarySamples {
                points,
                weight: seg.measure() / bc.n_points as f64,
            }
        })
        .collect();

    let reference = sample_reference(domain, policy, u_ref, &mut rng)?;
    Ok(CollocationSet {
        interior,
        interior_weight: domain.measure() / n_interior as f64,
        boundary,
        reference,
        seed,
    })
}

pub fn sample_reference<R: Rng>(
    domain: &Domain,
    policy: &ReferencePolicy,
    u_ref: f64,
    rng: &mut R,
) -> Result<Reference> {
    let point = match policy {
        ReferencePolicy::Fixed { point } => {
            if point.len() != domain.dim() || !domain.contains(point) {
                return config_err(format!("reference point {point:?} is not inside the domain"));
            }
            point.clone()
        }
        ReferencePolicy::Random { margin } => {
            let bbox = domain.bounding_box();
            let side = bbox.iter().map(|(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min);
            let clearance = margin * side;
            if !(0.0..0.5).contains(margin) {
                return config_err(format!("reference margin must lie in [0, 0.5), got {margin}"));
            }
            let mut p = vec![0.0; domain.dim()];
            loop {
                for (k, &(lo, hi)) in bbox.iter().enumerate() {
                    p[k] = rng.gen_range(lo..hi);
                }
                if domain.contains(&p) && domain.distance_to_boundary(&p) >= clearance {
                    break p;
                }
            }
        }
    };
    Ok(Reference { point, value: u_ref })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_shapes() {
        let ff = catalog("buckling_fixed_free").unwrap();
        assert!(ff.boundary.iter().any(|bc| bc.eig.is_some()));
        assert_eq!(ff.eigen_exponent, 2);

        let l = catalog("helmholtz_lshape").unwrap();
        assert_eq!(l.domain.measure(), 3.0);
        assert_eq!(l.domain.segments().len(), 6);
        assert_eq!(l.boundary.len(), 6);

        let plate = catalog("plate_ss").unwrap();
        assert_eq!(plate.domain, Domain::Rectangle { ax: 0.0, bx: 10.0, ay: 0.0, by: 5.0 });
        assert_eq!(plate.eigen_exponent, 4);

        for name in ProblemName::ALL {
            catalog_entry(name).validate().unwrap();
        }
    }

    #[test]
    fn unknown_name_lists_catalog() {
        let err = catalog("membrane").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("membrane"));
        assert!(msg.contains("helmholtz_lshape") && msg.contains("buckling_pin_pin"));
    }

    #[test]
    fn physical_eigenvalue_roots() {
        let b = catalog("buckling_pin_pin").unwrap();
        assert_eq!(b.physical_eigenvalue(9.0), Some(3.0));
        assert_eq!(b.physical_eigenvalue(-1.0), None);
        let h = catalog("helmholtz_square").unwrap();
        assert_eq!(h.physical_eigenvalue(-2.0), Some(-2.0));
        let p = catalog("plate_ss").unwrap();
        assert!((p.physical_eigenvalue(16.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interval_sampling() {
        let spec = catalog("buckling_pin_pin").unwrap();
        let c = sample_collocation(&spec, 100, &ReferencePolicy::default(), 1.0, 4).unwrap();
        assert_eq!(c.interior.nrows(), 100);
        for n in 0..100 {
            let x = c.interior[(n, 0)];
            assert!(x > 0.0 && x < 1.0);
        }
        let ends: Vec<f64> = c.boundary.iter().map(|b| b.points[(0, 0)]).collect();
        assert_eq!(ends, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(c.boundary.iter().all(|b| b.weight == 1.0));
        assert!((c.interior_weight * 100.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lshape_membership_and_boundary_geometry() {
        let spec = catalog("helmholtz_lshape").unwrap();
        let c = sample_collocation(&spec, 1000, &ReferencePolicy::default(), 1.0, 11).unwrap();
        for n in 0..1000 {
            let (x, y) = (c.interior[(n, 0)], c.interior[(n, 1)]);
            assert!(!(x >= 0.0 && y <= 0.0), "point ({x}, {y}) in removed quadrant");
            assert!(x.abs() < 1.0 && y.abs() < 1.0);
        }
        let segs = spec.domain.segments();
        for (bc, samples) in spec.boundary.iter().zip(&c.boundary) {
            let Segment::Line { start, end } = segs[bc.segment] else { unreachable!() };
            for i in 0..samples.points.nrows() {
                let p = [samples.points[(i, 0)], samples.points[(i, 1)]];
                let cross = (end[0] - start[0]) * (p[1] - start[1]) - (end[1] - start[1]) * (p[0] - start[0]);
                assert!(cross.abs() < 1e-15);
            }
        }
        let total: f64 = c.boundary.iter().map(|b| b.weight * b.points.nrows() as f64).sum();
        assert!((total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn random_reference_depends_on_seed() {
        let spec = catalog("helmholtz_square").unwrap();
        let a = sample_collocation(&spec, 10, &ReferencePolicy::default(), 1.0, 1).unwrap();
        let b = sample_collocation(&spec, 10, &ReferencePolicy::default(), 1.0, 2).unwrap();
        assert_ne!(a.reference.point, b.reference.point);
        let a2 = sample_collocation(&spec, 10, &ReferencePolicy::default(), 1.0, 1).unwrap();
        assert_eq!(a.reference, a2.reference);
        assert!(spec.domain.distance_to_boundary(&a.reference.point) >= 0.1);
    }

    #[test]
    fn fixed_reference_outside_domain_rejected() {
        let spec = catalog("helmholtz_lshape").unwrap();
        let policy = ReferencePolicy::Fixed { point: vec![0.5, -0.5] };
        assert!(matches!(
            sample_collocation(&spec, 10, &policy, 1.0, 0),
            Err(Error::Config(_))
        ));
    }
}
