//! Finite circle geometries `CM(ρ,q)`: construction from quadratic sets, from
//! the sharply 3-transitive sets `Π_φ ⊂ PΓL(2,q)`, and from quadratic
//! polynomials, together with exhaustive axiom and parameter checks.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite_field::{Field, FieldError};
use crate::pgl2::{PglError, Pgl2};
use crate::projective_space::{Polarity, ProjectiveSpace};
use crate::quadratic_sets::{build_quadratic_set, QuadError, QuadKind, QuadraticSet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("a nontrivial automorphism needs odd non-prime q (got q={q}, exponent {k})")]
    NonTrivialPhiNeedsOddNonPrime { q: u32, k: u32 },
    #[error("frobenius exponent {k} must be below the field degree {degree}")]
    BadPhiExponent { k: u32, degree: u32 },
    #[error("the residue of an extended Laguerre plane is not an affine plane")]
    ExtendedResidue,
    #[error("point {0} out of range")]
    BadPoint(usize),
    #[error("malformed geometry: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Pgl(#[from] PglError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum XCoord {
    Finite(u32),
    Infinity,
    MinusInfinity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointLabel {
    /// Homogeneous coordinates in `PG(3,q)`.
    Projective(Vec<u32>),
    /// A pair of points of `PG(1,q)`, each as normalized coordinates.
    Pair(Vec<u32>, Vec<u32>),
    /// A point `(x, y)` of a polynomial graph.
    Graph(XCoord, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    pub q: u32,
    pub phi: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleGeometry {
    pub version: u32,
    pub rho: u8,
    pub q: u32,
    pub extended: bool,
    pub points: Vec<PointLabel>,
    pub circles: Vec<Vec<u32>>,
    pub parallel: Vec<Vec<Vec<u32>>>,
    pub provenance: Provenance,
    /// Per circle: square type (κ of the pole a square, or the PGL element in PSL).
    pub square_type: Option<Vec<bool>>,
    /// Per circle: coordinates of the pole of its plane (odd-order quadrics).
    pub poles: Option<Vec<Vec<u32>>>,
    /// Per circle: id of the `PGL(2,q)` element it is the graph of.
    pub group_elements: Option<Vec<u32>>,
    /// Points on the added line of an extended Laguerre plane.
    pub nucleus_points: Vec<u32>,
    #[serde(skip)]
    index: Index,
}

#[derive(Debug, Clone, Default)]
struct Index {
    circle_bits: Vec<FixedBitSet>,
    point_circles: Vec<Vec<u32>>,
    /// `class_of[r][p]`: class of point `p` in parallel relation `r`.
    class_of: Vec<Vec<u32>>,
}

impl CircleGeometry {
    fn assemble(
        rho: u8,
        q: u32,
        extended: bool,
        points: Vec<PointLabel>,
        circles: Vec<Vec<u32>>,
        parallel: Vec<Vec<Vec<u32>>>,
        provenance: Provenance,
    ) -> CircleGeometry {
        let mut g = CircleGeometry {
            version: FORMAT_VERSION,
            rho,
            q,
            extended,
            points,
            circles,
            parallel,
            provenance,
            square_type: None,
            poles: None,
            group_elements: None,
            nucleus_points: Vec::new(),
            index: Index::default(),
        };
        g.rebuild_index();
        g
    }

    /// Recomputes the derived lookup tables; call after deserializing or editing.
    pub fn rebuild_index(&mut self) {
        let n = self.points.len();
        let mut circle_bits = Vec::with_capacity(self.circles.len());
        let mut point_circles = vec![Vec::new(); n];
        for c in &mut self.circles {
            c.sort_unstable();
        }
        for (i, c) in self.circles.iter().enumerate() {
            let mut b = FixedBitSet::with_capacity(n);
            for &p in c {
                b.insert(p as usize);
                point_circles[p as usize].push(i as u32);
            }
            circle_bits.push(b);
        }
        let class_of = self
            .parallel
            .iter()
            .map(|classes| {
                let mut of = vec![u32::MAX; n];
                for (k, class) in classes.iter().enumerate() {
                    for &p in class {
                        of[p as usize] = k as u32;
                    }
                }
                of
            })
            .collect();
        self.index = Index {
            circle_bits,
            point_circles,
            class_of,
        };
    }

    /// Parses a geometry file and checks ids are in range.
    pub fn from_json(text: &str) -> Result<CircleGeometry, GeomError> {
        let mut g: CircleGeometry =
            serde_json::from_str(text).map_err(|e| GeomError::Malformed(e.to_string()))?;
        let n = g.points.len() as u32;
        let bad = g.circles.iter().flatten().chain(g.parallel.iter().flatten().flatten());
        if bad.clone().any(|&p| p >= n) || g.nucleus_points.iter().any(|&p| p >= n) {
            return Err(GeomError::Malformed("point id out of range".into()));
        }
        if g.rho as usize != g.parallel.len() {
            return Err(GeomError::Malformed("rho does not match the parallel relations".into()));
        }
        g.rebuild_index();
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("geometry serializes")
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_circles(&self) -> usize {
        self.circles.len()
    }

    pub fn circle_size(&self) -> usize {
        self.q as usize + if self.extended { 2 } else { 1 }
    }

    pub fn circle_bits(&self, c: usize) -> &FixedBitSet {
        &self.index.circle_bits[c]
    }

    pub fn circles_through(&self, p: usize) -> &[u32] {
        &self.index.point_circles[p]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.index.circle_bits[a].intersection_count(&self.index.circle_bits[b])
    }

    pub fn contains(&self, c: usize, p: usize) -> bool {
        self.index.circle_bits[c].contains(p)
    }

    pub fn parallel(&self, a: usize, b: usize) -> bool {
        a == b || self.index.class_of.iter().any(|of| of[a] == of[b])
    }

    /// The expected counts `(points, circles, circle size, circles per point,
    /// circles per non-parallel pair, parallel class size)`.
    pub fn expected_parameters(&self) -> [usize; 6] {
        let (q, rho) = (self.q as usize, self.rho as usize);
        if self.extended {
            return [q * (q + 2), q * q * q, q + 2, q * q, q, q];
        }
        [
            (q * q + 1 - rho) * (q + 1) / (q + 1 - rho),
            q * q * q + q - rho * q,
            q + 1,
            q * q + q - rho * q,
            q + 1 - rho,
            q + rho - 1,
        ]
    }

    /// All circles through `p`.
    pub fn pencil(&self, p: usize) -> Result<Vec<u32>, GeomError> {
        if p >= self.num_points() {
            return Err(GeomError::BadPoint(p));
        }
        Ok(self.index.point_circles[p].clone())
    }

    pub fn residue_at(&self, p: usize) -> Result<Residue, GeomError> {
        if p >= self.num_points() {
            return Err(GeomError::BadPoint(p));
        }
        if self.extended {
            return Err(GeomError::ExtendedResidue);
        }
        let keep: Vec<bool> = (0..self.num_points()).map(|x| !self.parallel(p, x)).collect();
        let points: Vec<u32> = (0..self.num_points() as u32).filter(|&x| keep[x as usize]).collect();
        let mut lines = Vec::new();
        let mut circle_of_line = Vec::new();
        for &c in self.circles_through(p) {
            lines.push(self.circles[c as usize].iter().copied().filter(|&x| keep[x as usize]).collect());
            circle_of_line.push(Some(c));
        }
        for (r, classes) in self.parallel.iter().enumerate() {
            let own = self.index.class_of[r][p];
            for (k, class) in classes.iter().enumerate() {
                if k as u32 != own {
                    lines.push(class.iter().copied().filter(|&x| keep[x as usize]).collect());
                    circle_of_line.push(None);
                }
            }
        }
        let mut res = Residue {
            base: p as u32,
            points,
            lines,
            circle_of_line,
            line_class: Vec::new(),
        };
        res.line_class = res.parallel_classes();
        Ok(res)
    }

    fn label_kind(&self) -> &str {
        &self.provenance.kind
    }
}

/// The derived structure at a point: an affine plane of order `q`.
#[derive(Debug, Clone, Serialize)]
pub struct Residue {
    pub base: u32,
    pub points: Vec<u32>,
    pub lines: Vec<Vec<u32>>,
    /// The circle a line comes from, `None` for parallel classes.
    pub circle_of_line: Vec<Option<u32>>,
    /// Parallel class index of each line.
    pub line_class: Vec<usize>,
}

impl Residue {
    fn parallel_classes(&self) -> Vec<usize> {
        let mut class = vec![usize::MAX; self.lines.len()];
        let mut next = 0;
        for i in 0..self.lines.len() {
            if class[i] != usize::MAX {
                continue;
            }
            class[i] = next;
            for j in i + 1..self.lines.len() {
                if class[j] == usize::MAX && self.lines[i].iter().all(|x| !self.lines[j].contains(x)) {
                    class[j] = next;
                }
            }
            next += 1;
        }
        class
    }

    /// Checks the affine-plane axioms for order `q`.
    pub fn verify_affine(&self, q: usize) -> Result<(), String> {
        if self.points.len() != q * q {
            return Err(format!("{} points, expected {}", self.points.len(), q * q));
        }
        if self.lines.len() != q * q + q {
            return Err(format!("{} lines, expected {}", self.lines.len(), q * q + q));
        }
        if let Some(l) = self.lines.iter().find(|l| l.len() != q) {
            return Err(format!("line {l:?} does not have {q} points"));
        }
        let mut pos = HashMap::new();
        for (i, &p) in self.points.iter().enumerate() {
            pos.insert(p, i);
        }
        let n = self.points.len();
        let mut count = vec![0u32; n * n];
        for l in &self.lines {
            for (i, a) in l.iter().enumerate() {
                for b in &l[i + 1..] {
                    let (x, y) = (pos[a], pos[b]);
                    count[x.min(y) * n + x.max(y)] += 1;
                }
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                if count[x * n + y] != 1 {
                    return Err(format!(
                        "points {} and {} lie on {} lines",
                        self.points[x],
                        self.points[y],
                        count[x * n + y]
                    ));
                }
            }
        }
        if self.line_class.iter().max().map_or(0, |m| m + 1) != q + 1 {
            return Err("parallelism does not have q+1 classes".into());
        }
        Ok(())
    }
}

fn sorted_classes(mut classes: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort();
    classes
}

pub fn from_quadratic_set(set: &QuadraticSet) -> Result<CircleGeometry, GeomError> {
    let space = &set.space;
    let q = set.q();
    let universe: Vec<usize> = set.points.ones().filter(|&p| Some(p) != set.vertex).collect();
    let mut dense = vec![u32::MAX; space.num_points()];
    for (i, &p) in universe.iter().enumerate() {
        dense[p] = i as u32;
    }
    let labels = universe
        .iter()
        .map(|&p| PointLabel::Projective(space.coords(p).to_vec()))
        .collect();
    let sections = set.oval_circles();
    let circles: Vec<Vec<u32>> = sections
        .iter()
        .map(|(_, c)| c.iter().map(|&p| dense[p]).collect())
        .collect();
    let (rho, kind) = match set.kind {
        QuadKind::Elliptic => (0, "mobius"),
        QuadKind::Cone => (1, "laguerre"),
        QuadKind::HyperovalCone => (1, "laguerre-ext"),
        QuadKind::Hyperbolic => (2, "minkowski"),
    };
    let mut parallel = Vec::new();
    match set.kind {
        QuadKind::Cone | QuadKind::HyperovalCone => {
            let v = set.vertex.unwrap();
            let mut classes = Vec::new();
            let mut seen = FixedBitSet::with_capacity(space.num_points());
            for &p in &universe {
                if seen.contains(p) {
                    continue;
                }
                let line = space.line_through(v, p);
                let class: Vec<u32> = line.iter().filter(|&&x| x != v).map(|&x| dense[x]).collect();
                for &x in &line {
                    seen.insert(x);
                }
                classes.push(class);
            }
            parallel.push(sorted_classes(classes));
        }
        QuadKind::Hyperbolic => {
            let mut generators: Vec<Vec<usize>> = space
                .lines()
                .into_iter()
                .filter(|l| l.iter().all(|&p| set.contains(p)))
                .collect();
            generators.sort();
            let first = generators[0].clone();
            let (ruling_a, ruling_b): (Vec<_>, Vec<_>) = generators
                .into_iter()
                .partition(|l| *l == first || l.iter().all(|p| !first.contains(p)));
            for ruling in [ruling_a, ruling_b] {
                let classes = ruling
                    .iter()
                    .map(|l| l.iter().map(|&p| dense[p]).collect())
                    .collect();
                parallel.push(sorted_classes(classes));
            }
        }
        QuadKind::Elliptic => {}
    }
    let mut g = CircleGeometry::assemble(
        rho,
        q,
        set.kind == QuadKind::HyperovalCone,
        labels,
        circles,
        parallel,
        Provenance {
            kind: kind.into(),
            q,
            phi: None,
        },
    );
    if let Some(line) = &set.nucleus_line {
        g.nucleus_points = line.iter().filter(|&&p| Some(p) != set.vertex).map(|&p| dense[p]).collect();
    }
    if space.field().is_odd() && matches!(set.kind, QuadKind::Elliptic | QuadKind::Hyperbolic) {
        let pol = Polarity::new(space, &set.form).map_err(QuadError::from)?;
        let poles: Vec<Vec<u32>> = sections
            .iter()
            .map(|&(h, _)| space.coords(pol.pole_of(h)).to_vec())
            .collect();
        let f = space.field();
        g.square_type = Some(poles.iter().map(|x| f.is_square(set.form.eval(x))).collect());
        g.poles = Some(poles);
    }
    Ok(g)
}

/// Builds the ovoidal geometry of the given kind over `F_q`.
pub fn ovoidal(kind: QuadKind, field: &Field) -> Result<CircleGeometry, GeomError> {
    from_quadratic_set(&build_quadratic_set(kind, field)?)
}

/// `CM(2,q,φ)` from the maps `f_M`, `φ = x ↦ x^(p^k)`.
pub fn minkowski_sharply3(field: &Field, k: u32) -> Result<CircleGeometry, GeomError> {
    let q = field.order();
    if k >= field.degree() && k != 0 {
        return Err(GeomError::BadPhiExponent {
            k,
            degree: field.degree(),
        });
    }
    if k != 0 && (!field.is_odd() || field.degree() == 1) {
        return Err(GeomError::NonTrivialPhiNeedsOddNonPrime { q, k });
    }
    let group = Pgl2::new(field)?;
    let line = group.projective_line();
    let m = line.num_points();
    let labels = (0..m * m)
        .map(|id| PointLabel::Pair(line.coords(id / m).to_vec(), line.coords(id % m).to_vec()))
        .collect();
    let mut circles = Vec::with_capacity(group.order());
    let mut square = Vec::with_capacity(group.order());
    for a in 0..group.order() {
        let psl = group.in_psl(a);
        let exp = if psl { 0 } else { k };
        circles.push((0..m).map(|x| (x * m + group.apply(a, x, exp)) as u32).collect());
        square.push(psl);
    }
    let rows = (0..m).map(|x| (0..m).map(|y| (x * m + y) as u32).collect()).collect();
    let cols = (0..m).map(|y| (0..m).map(|x| (x * m + y) as u32).collect()).collect();
    let kind = if k == 0 { "minkowski-pgl" } else { "minkowski-phi" };
    let mut g = CircleGeometry::assemble(
        2,
        q,
        false,
        labels,
        circles,
        vec![rows, cols],
        Provenance {
            kind: kind.into(),
            q,
            phi: Some(k),
        },
    );
    if field.is_odd() {
        g.square_type = Some(square);
    }
    g.group_elements = Some((0..group.order() as u32).collect());
    Ok(g)
}

/// Laguerre plane of graphs of polynomials of degree at most 2; with `extended`
/// (even `q`) the points `(−∞, y)` are added.
pub fn polynomial_laguerre(field: &Field, extended: bool) -> Result<CircleGeometry, GeomError> {
    if extended && field.is_odd() {
        return Err(QuadError::WrongParity.into());
    }
    let q = field.order();
    let qs = q as usize;
    let mut labels = Vec::new();
    for x in 0..q {
        for y in 0..q {
            labels.push(PointLabel::Graph(XCoord::Finite(x), y));
        }
    }
    for y in 0..q {
        labels.push(PointLabel::Graph(XCoord::Infinity, y));
    }
    if extended {
        for y in 0..q {
            labels.push(PointLabel::Graph(XCoord::MinusInfinity, y));
        }
    }
    let mut circles = Vec::with_capacity(qs * qs * qs);
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                let mut circle: Vec<u32> = (0..q)
                    .map(|t| {
                        let v = field.add(field.mul(field.add(field.mul(a, t), b), t), c);
                        t * q + v
                    })
                    .collect();
                circle.push(q * q + a);
                if extended {
                    circle.push(q * q + q + b);
                }
                circles.push(circle);
            }
        }
    }
    let columns = if extended { qs + 2 } else { qs + 1 };
    let classes = (0..columns as u32)
        .map(|x| (0..q).map(|y| x * q + y).collect())
        .collect();
    let mut g = CircleGeometry::assemble(
        1,
        q,
        extended,
        labels,
        circles,
        vec![classes],
        Provenance {
            kind: if extended { "laguerre-poly-ext" } else { "laguerre-poly" }.into(),
            q,
            phi: None,
        },
    );
    if extended {
        g.nucleus_points = (q * q + q..q * q + 2 * q).collect();
    }
    Ok(g)
}

/// Checks that `point_map` (ids of `a` to ids of `b`) maps circles onto circles
/// bijectively; returns the induced circle map.
pub fn check_isomorphism(
    a: &CircleGeometry,
    b: &CircleGeometry,
    point_map: &[u32],
) -> Result<Vec<u32>, String> {
    if a.num_points() != b.num_points() || a.num_circles() != b.num_circles() {
        return Err("sizes differ".into());
    }
    let mut seen = vec![false; b.num_points()];
    for &p in point_map {
        if std::mem::replace(&mut seen[p as usize], true) {
            return Err(format!("point map is not injective at {p}"));
        }
    }
    let lookup: HashMap<&[u32], u32> = b
        .circles
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_slice(), i as u32))
        .collect();
    let mut circle_map = Vec::with_capacity(a.num_circles());
    let mut hit = vec![false; b.num_circles()];
    for (i, c) in a.circles.iter().enumerate() {
        let mut image: Vec<u32> = c.iter().map(|&p| point_map[p as usize]).collect();
        image.sort_unstable();
        let Some(&j) = lookup.get(image.as_slice()) else {
            return Err(format!("circle {i} has no image circle"));
        };
        if std::mem::replace(&mut hit[j as usize], true) {
            return Err(format!("two circles map to circle {j}"));
        }
        circle_map.push(j);
    }
    Ok(circle_map)
}

/// Point map from the cone-based Laguerre plane to the polynomial one:
/// `(s,1,t,t²) ↦ (t,s)`, `(y,0,0,1) ↦ (∞,y)`, `(y,0,1,0) ↦ (−∞,y)`.
pub fn cone_to_polynomial_points(
    cone: &CircleGeometry,
    poly: &CircleGeometry,
    field: &Field,
) -> Result<Vec<u32>, String> {
    let q = poly.q;
    cone.points
        .iter()
        .map(|label| {
            let PointLabel::Projective(x) = label else {
                return Err("cone geometry needs projective labels".to_string());
            };
            // Scale by the inverse of the coordinate that is 1 in the target form.
            let pivot = [1, 3, 2].into_iter().find(|&i| x[i] != 0);
            let Some(i) = pivot else {
                return Err(format!("unexpected cone point {x:?}"));
            };
            let inv = field.inv(x[i]).unwrap();
            let y: Vec<u32> = x.iter().map(|&c| field.mul(c, inv)).collect();
            Ok(match i {
                1 => y[2] * q + y[0],
                3 => q * q + y[0],
                _ => q * q + q + y[0],
            })
        })
        .collect()
}

/// Point map from the hyperbolic-quadric plane to `CM(2,q,id)`: the rank-one
/// matrix `u wᵀ` with coordinates `(x1 x2 / x3 x4)` goes to the pair `(w, u)`.
pub fn hyperbolic_to_pgl_points(hyp: &CircleGeometry, pgl: &CircleGeometry, field: &Field) -> Result<Vec<u32>, String> {
    let line = ProjectiveSpace::new(1, field).map_err(|e| e.to_string())?;
    let m = line.num_points() as u32;
    debug_assert_eq!(pgl.num_points() as u32, m * m);
    hyp.points
        .iter()
        .map(|label| {
            let PointLabel::Projective(x) = label else {
                return Err("hyperbolic geometry needs projective labels".to_string());
            };
            let u = if x[0] != 0 || x[2] != 0 { [x[0], x[2]] } else { [x[1], x[3]] };
            let w = if x[0] != 0 || x[1] != 0 { [x[0], x[1]] } else { [x[2], x[3]] };
            let (u, w) = (line.point_id(&u).unwrap() as u32, line.point_id(&w).unwrap() as u32);
            Ok(w * m + u)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn push(&mut self, name: &str, result: Result<(), String>) {
        let passed = result.is_ok();
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            witness: result.err(),
        });
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Exhaustive check of the five axioms (the extended Laguerre plane replaces
/// tangency by "circles meet in 0 or 2 points") and the six parameter counts.
pub fn verify_geometry(g: &CircleGeometry) -> VerifyReport {
    let mut report = VerifyReport {
        passed: true,
        checks: Vec::new(),
    };
    let n = g.num_points();
    let [np, nb, size, per_point, per_pair, class_size] = g.expected_parameters();
    let eq = |what: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(format!("{what}: got {got}, expected {want}"))
        }
    };
    report.push("point count", eq("points", n, np));
    report.push("circle count", eq("circles", g.num_circles(), nb));
    report.push(
        "circle size",
        g.circles
            .iter()
            .enumerate()
            .find(|(_, c)| c.len() != size)
            .map_or(Ok(()), |(i, c)| Err(format!("circle {i} has {} points", c.len()))),
    );
    report.push(
        "circles per point",
        (0..n)
            .find(|&p| g.circles_through(p).len() != per_point)
            .map_or(Ok(()), |p| Err(format!("point {p} on {} circles", g.circles_through(p).len()))),
    );
    report.push(
        "parallel class size",
        g.parallel
            .iter()
            .flatten()
            .find(|c| c.len() != class_size)
            .map_or(Ok(()), |c| Err(format!("class {c:?} has {} points", c.len()))),
    );
    report.push("circles per pair", check_pairs(g, per_pair));
    report.push("axiom 1 (three points)", check_triples(g));
    if g.extended {
        report.push("circles meet in 0 or 2 points", check_meets(g, &[0, 2]));
    } else {
        report.push("axiom 2 (tangency)", check_tangency(g));
        report.push("circles meet in 0, 1 or 2 points", check_meets(g, &[0, 1, 2]));
    }
    report.push("axiom 3 (one point per class)", check_transversal(g));
    report.push("axiom 4 (classes meet once)", check_classes_meet(g));
    report.push("axiom 5 (non-triviality)", check_nontrivial(g));
    report
}

fn check_pairs(g: &CircleGeometry, want: usize) -> Result<(), String> {
    let n = g.num_points();
    let mut count = vec![0u32; n * n];
    for c in &g.circles {
        for (i, &a) in c.iter().enumerate() {
            for &b in &c[i + 1..] {
                count[a as usize * n + b as usize] += 1;
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let got = count[a * n + b] as usize;
            let parallel = g.parallel(a, b);
            if (parallel && got != 0) || (!parallel && got != want) {
                return Err(format!("points {a},{b} lie on {got} common circles"));
            }
        }
    }
    Ok(())
}

fn check_triples(g: &CircleGeometry) -> Result<(), String> {
    let n = g.num_points();
    let mut count = vec![0u8; n * n * n];
    for c in &g.circles {
        for (i, &a) in c.iter().enumerate() {
            for (j, &b) in c.iter().enumerate().skip(i + 1) {
                for &d in &c[j + 1..] {
                    let k = (a as usize * n + b as usize) * n + d as usize;
                    count[k] = count[k].saturating_add(1);
                }
            }
        }
    }
    let bad = (0..n).into_par_iter().find_first(|&a| {
        (a + 1..n).any(|b| {
            !g.parallel(a, b)
                && (b + 1..n).any(|d| {
                    !g.parallel(a, d) && !g.parallel(b, d) && count[(a * n + b) * n + d] != 1
                })
        })
    });
    match bad {
        None => Ok(()),
        Some(a) => {
            for b in a + 1..n {
                for d in b + 1..n {
                    let got = count[(a * n + b) * n + d];
                    if !g.parallel(a, b) && !g.parallel(a, d) && !g.parallel(b, d) && got != 1 {
                        return Err(format!("points {a},{b},{d} lie on {got} common circles"));
                    }
                }
            }
            unreachable!()
        }
    }
}

fn check_tangency(g: &CircleGeometry) -> Result<(), String> {
    let n = g.num_points();
    let bad = (0..g.num_circles()).into_par_iter().find_map_first(|c| {
        let pts = &g.circles[c];
        let pos = |p: u32| pts.iter().position(|&x| x == p);
        let mut count = vec![0u32; pts.len() * n];
        for d in 0..g.num_circles() {
            if d == c || g.meet(c, d) != 1 {
                continue;
            }
            let touch = g.circles[d].iter().copied().find(|&x| g.contains(c, x as usize)).unwrap();
            let i = pos(touch).unwrap();
            for &x in &g.circles[d] {
                if x != touch {
                    count[i * n + x as usize] += 1;
                }
            }
        }
        for (i, &p) in pts.iter().enumerate() {
            for x in 0..n {
                if g.contains(c, x) || g.parallel(p as usize, x) {
                    continue;
                }
                if count[i * n + x] != 1 {
                    return Some(format!(
                        "circle {c}, point {p}, outside point {x}: {} tangent circles",
                        count[i * n + x]
                    ));
                }
            }
        }
        None
    });
    bad.map_or(Ok(()), Err)
}

fn check_meets(g: &CircleGeometry, allowed: &[usize]) -> Result<(), String> {
    let bad = (0..g.num_circles()).into_par_iter().find_map_first(|a| {
        (a + 1..g.num_circles()).find_map(|b| {
            let m = g.meet(a, b);
            (!allowed.contains(&m)).then(|| format!("circles {a},{b} meet in {m} points"))
        })
    });
    bad.map_or(Ok(()), Err)
}

fn check_transversal(g: &CircleGeometry) -> Result<(), String> {
    for (r, classes) in g.parallel.iter().enumerate() {
        for (i, c) in g.circles.iter().enumerate() {
            let mut hit = vec![0u32; classes.len()];
            for &p in c {
                hit[g.index.class_of[r][p as usize] as usize] += 1;
            }
            if let Some(k) = hit.iter().position(|&h| h != 1) {
                return Err(format!("circle {i} meets class {k} of relation {r} in {} points", hit[k]));
            }
        }
    }
    Ok(())
}

fn check_classes_meet(g: &CircleGeometry) -> Result<(), String> {
    for (r, a) in g.parallel.iter().enumerate() {
        for b in &g.parallel[r + 1..] {
            for x in a {
                for y in b {
                    let m = x.iter().filter(|p| y.contains(p)).count();
                    if m != 1 {
                        return Err(format!("classes {x:?} and {y:?} meet in {m} points"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_nontrivial(g: &CircleGeometry) -> Result<(), String> {
    if let Some(i) = g.circles.iter().position(|c| c.len() < 3) {
        return Err(format!("circle {i} has fewer than three points"));
    }
    let exists = g.circles.iter().any(|c| c.len() < g.num_points());
    if exists {
        Ok(())
    } else {
        Err("every point lies on every circle".into())
    }
}

/// The constructible geometries by command-line name.
pub fn construct(kind: &str, field: &Field, phi: u32) -> Result<CircleGeometry, GeomError> {
    if phi != 0 && kind != "minkowski-phi" {
        return Err(GeomError::Malformed(format!("--phi is only valid for minkowski-phi, not {kind}")));
    }
    match kind {
        "mobius" => ovoidal(QuadKind::Elliptic, field),
        "laguerre" => ovoidal(QuadKind::Cone, field),
        "laguerre-ext" => ovoidal(QuadKind::HyperovalCone, field),
        "minkowski" => ovoidal(QuadKind::Hyperbolic, field),
        "minkowski-phi" => minkowski_sharply3(field, phi),
        "laguerre-poly" => polynomial_laguerre(field, false),
        "laguerre-poly-ext" => polynomial_laguerre(field, true),
        other => Err(GeomError::Malformed(format!("unknown geometry type {other}"))),
    }
}

impl CircleGeometry {
    /// Short name such as `CM(0,4)` for logs.
    pub fn name(&self) -> String {
        match (self.label_kind(), self.provenance.phi) {
            ("minkowski-phi", Some(k)) => format!("CM(2,{},phi^{k})", self.q),
            (_, _) if self.extended => format!("extended CM(1,{})", self.q),
            _ => format!("CM({},{})", self.rho, self.q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::make_field;

    fn field(q: u64) -> Field {
        make_field(q).unwrap()
    }

    #[test]
    fn counts_from_quadrics() {
        let m4 = ovoidal(QuadKind::Elliptic, &field(4)).unwrap();
        assert_eq!((m4.num_points(), m4.num_circles()), (17, 68));
        let h3 = ovoidal(QuadKind::Hyperbolic, &field(3)).unwrap();
        assert_eq!((h3.num_points(), h3.num_circles()), (16, 24));
        assert_eq!(h3.parallel.len(), 2);
        assert!(h3.parallel.iter().all(|r| r.len() == 4 && r.iter().all(|c| c.len() == 4)));
        let e4 = ovoidal(QuadKind::HyperovalCone, &field(4)).unwrap();
        assert_eq!((e4.num_points(), e4.num_circles(), e4.circle_size()), (24, 64, 6));
        assert_eq!(e4.nucleus_points.len(), 4);
    }

    #[test]
    fn sharply3_counts() {
        let g = minkowski_sharply3(&field(5), 0).unwrap();
        assert_eq!((g.num_points(), g.num_circles()), (36, 120));
        assert!(minkowski_sharply3(&field(7), 1).is_err());
        assert!(minkowski_sharply3(&field(9), 2).is_err());
        assert!(minkowski_sharply3(&field(8), 1).is_err());
    }

    #[test]
    fn sharply3_phi_q9() {
        let g = minkowski_sharply3(&field(9), 1).unwrap();
        assert_eq!((g.num_points(), g.num_circles()), (100, 720));
        let report = verify_geometry(&g);
        assert!(report.passed, "{:?}", report.failed());
    }

    #[test]
    fn polynomial_counts() {
        let g = polynomial_laguerre(&field(3), false).unwrap();
        assert_eq!((g.num_points(), g.num_circles(), g.circle_size()), (12, 27, 4));
        let e = polynomial_laguerre(&field(4), true).unwrap();
        assert_eq!(e.circle_size(), 6);
        assert!(verify_geometry(&e).passed);
    }

    #[test]
    fn graphs_meet_in_roots_of_difference() {
        let f = field(5);
        let g = polynomial_laguerre(&f, false).unwrap();
        let coeffs = |i: usize| ((i / 25) as u32, (i / 5 % 5) as u32, (i % 5) as u32);
        for i in (0..125).step_by(7) {
            for j in (0..125).step_by(3) {
                if i == j {
                    continue;
                }
                let ((a1, b1, c1), (a2, b2, c2)) = (coeffs(i), coeffs(j));
                let (a, b, c) = (f.sub(a1, a2), f.sub(b1, b2), f.sub(c1, c2));
                let roots = f
                    .elements()
                    .filter(|&t| f.add(f.mul(f.add(f.mul(a, t), b), t), c) == 0)
                    .count()
                    + usize::from(a == 0);
                assert_eq!(g.meet(i, j), roots);
            }
        }
    }

    #[test]
    fn all_small_geometries_verify() {
        for q in [3u64, 4, 5] {
            let f = field(q);
            let mut kinds = vec!["mobius", "laguerre", "minkowski", "minkowski-phi", "laguerre-poly"];
            if q % 2 == 0 {
                kinds.extend(["laguerre-ext", "laguerre-poly-ext"]);
            }
            for kind in kinds {
                let g = construct(kind, &f, 0).unwrap();
                let report = verify_geometry(&g);
                assert!(report.passed, "{kind} q={q}: {:?}", report.failed());
            }
        }
    }

    #[test]
    fn deleted_circle_breaks_axiom_one() {
        let mut g = ovoidal(QuadKind::Elliptic, &field(3)).unwrap();
        g.circles.pop();
        g.rebuild_index();
        let report = verify_geometry(&g);
        assert!(!report.passed);
        let a1 = report.checks.iter().find(|c| c.name.starts_with("axiom 1")).unwrap();
        assert!(!a1.passed);
        assert!(a1.witness.as_ref().unwrap().contains("0 common circles"));
    }

    #[test]
    fn residues_are_affine_planes() {
        for (kind, q) in [(QuadKind::Elliptic, 4u64), (QuadKind::Hyperbolic, 3), (QuadKind::Cone, 5)] {
            let g = ovoidal(kind, &field(q)).unwrap();
            for p in [0, g.num_points() / 2, g.num_points() - 1] {
                let r = g.residue_at(p).unwrap();
                r.verify_affine(q as usize).unwrap();
                let x = r.points[0];
                let through = r.lines.iter().filter(|l| l.contains(&x)).count();
                assert_eq!(through, q as usize + 1);
            }
        }
        let e = ovoidal(QuadKind::HyperovalCone, &field(4)).unwrap();
        assert!(e.residue_at(0).is_err());
    }

    #[test]
    fn pencils() {
        let m4 = ovoidal(QuadKind::Elliptic, &field(4)).unwrap();
        assert_eq!(m4.pencil(3).unwrap().len(), 20);
        let h5 = ovoidal(QuadKind::Hyperbolic, &field(5)).unwrap();
        assert_eq!(h5.pencil(0).unwrap().len(), 20);
        let e4 = ovoidal(QuadKind::HyperovalCone, &field(4)).unwrap();
        for &p in &e4.nucleus_points {
            assert_eq!(e4.pencil(p as usize).unwrap().len(), 16);
        }
        assert!(m4.pencil(1000).is_err());
    }

    #[test]
    fn cone_matches_polynomial_plane() {
        for q in [3u64, 4, 5] {
            let f = field(q);
            let cone = ovoidal(QuadKind::Cone, &f).unwrap();
            let poly = polynomial_laguerre(&f, false).unwrap();
            let map = cone_to_polynomial_points(&cone, &poly, &f).unwrap();
            check_isomorphism(&cone, &poly, &map).unwrap();
            if q % 2 == 0 {
                let cone = ovoidal(QuadKind::HyperovalCone, &f).unwrap();
                let poly = polynomial_laguerre(&f, true).unwrap();
                let map = cone_to_polynomial_points(&cone, &poly, &f).unwrap();
                check_isomorphism(&cone, &poly, &map).unwrap();
            }
        }
    }

    #[test]
    fn hyperbolic_matches_pgl_plane() {
        for q in [3u64, 5] {
            let f = field(q);
            let hyp = ovoidal(QuadKind::Hyperbolic, &f).unwrap();
            let pgl = minkowski_sharply3(&f, 0).unwrap();
            let map = hyperbolic_to_pgl_points(&hyp, &pgl, &f).unwrap();
            let circles = check_isomorphism(&hyp, &pgl, &map).unwrap();
            // The plane with pole M goes to the graph of M·J, J = (0 1 / -1 0).
            let group = Pgl2::new(&f).unwrap();
            let j = [0, 1, f.neg(1), 0];
            for (c, pole) in hyp.poles.as_ref().unwrap().iter().enumerate() {
                let m = [pole[0], pole[1], pole[2], pole[3]];
                let mj = crate::pgl2::mat_mul(&f, &m, &j);
                assert_eq!(group.id_of(&mj).unwrap() as u32, circles[c]);
            }
            let st = hyp.square_type.as_ref().unwrap();
            let pst = pgl.square_type.as_ref().unwrap();
            for (c, &d) in circles.iter().enumerate() {
                assert_eq!(st[c], pst[d as usize]);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let g = ovoidal(QuadKind::Hyperbolic, &field(3)).unwrap();
        let text = g.to_json();
        let back = CircleGeometry::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.meet(0, 1), g.meet(0, 1));
        assert!(CircleGeometry::from_json("{\"version\":1}").is_err());
    }
}
