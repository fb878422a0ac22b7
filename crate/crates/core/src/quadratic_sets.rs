//! Quadratic sets of `PG(3,q)`: elliptic and hyperbolic quadrics, the oval cone
//! over a conic, and (for even `q`) the cone extended by its nucleus line.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finite_field::Field;
use crate::projective_space::{ProjError, ProjectiveSpace, QuadForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("the hyperoval cone needs even q")]
    WrongParity,
    #[error("order {0} is too small, need q >= 3")]
    OrderTooSmall(u32),
    #[error("plane {0} is not an oval plane")]
    NotOvalPlane(usize),
    #[error("point {point} does not lie in plane {plane}")]
    PointNotInPlane { point: usize, plane: usize },
    #[error("point lies on {0} tangent lines")]
    UnexpectedTangentCount(usize),
    #[error("conic has no nucleus")]
    NoNucleus,
    #[error(transparent)]
    Space(#[from] ProjError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadKind {
    Elliptic,
    Hyperbolic,
    Cone,
    HyperovalCone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneClass {
    Tangent,
    Oval,
    Generated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointPosition {
    External,
    Internal,
    OnConic,
}

#[derive(Debug, Clone)]
pub struct QuadraticSet {
    pub kind: QuadKind,
    pub space: ProjectiveSpace,
    pub points: FixedBitSet,
    pub vertex: Option<usize>,
    pub nucleus_line: Option<Vec<usize>>,
    pub form: QuadForm,
}

/// Smallest `(a, b)` in lexicographic order with `t² + a t + b` irreducible.
pub fn smallest_irreducible_quadratic(field: &Field) -> (u32, u32) {
    for a in field.elements() {
        for b in field.elements() {
            let has_root = field
                .elements()
                .any(|t| field.add(field.add(field.mul(t, t), field.mul(a, t)), b) == 0);
            if !has_root {
                return (a, b);
            }
        }
    }
    unreachable!("every finite field has an irreducible quadratic")
}

/// The quadratic form used for each kind. The hyperoval cone shares the cone's form.
pub fn canonical_form(kind: QuadKind, field: &Field) -> QuadForm {
    let one = 1;
    let minus_one = field.neg(1);
    match kind {
        QuadKind::Hyperbolic => QuadForm::new(field, 4, &[(0, 3, one), (1, 2, minus_one)]),
        QuadKind::Elliptic => {
            let (a, b) = smallest_irreducible_quadratic(field);
            QuadForm::new(field, 4, &[(0, 1, one), (2, 2, one), (2, 3, a), (3, 3, b)])
        }
        QuadKind::Cone | QuadKind::HyperovalCone => {
            QuadForm::new(field, 4, &[(1, 3, one), (2, 2, minus_one)])
        }
    }
}

pub fn build_quadratic_set(kind: QuadKind, field: &Field) -> Result<QuadraticSet, QuadError> {
    if field.order() < 3 {
        return Err(QuadError::OrderTooSmall(field.order()));
    }
    if kind == QuadKind::HyperovalCone && field.is_odd() {
        return Err(QuadError::WrongParity);
    }
    let space = ProjectiveSpace::new(3, field)?;
    let form = canonical_form(kind, field);
    let mut points = FixedBitSet::with_capacity(space.num_points());
    for (id, x) in space.points().iter().enumerate() {
        if form.eval(x) == 0 {
            points.insert(id);
        }
    }
    let vertex = match kind {
        QuadKind::Cone | QuadKind::HyperovalCone => Some(space.point_id(&[1, 0, 0, 0])?),
        _ => None,
    };
    let mut set = QuadraticSet {
        kind,
        space,
        points,
        vertex,
        nucleus_line: None,
        form,
    };
    if kind == QuadKind::HyperovalCone {
        let nucleus = set.base_nucleus()?;
        let line = set.space.line_through(vertex.unwrap(), nucleus);
        for &p in &line {
            set.points.insert(p);
        }
        set.nucleus_line = Some(line);
    }
    Ok(set)
}

impl QuadraticSet {
    pub fn q(&self) -> u32 {
        self.space.field().order()
    }

    pub fn len(&self) -> usize {
        self.points.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: usize) -> bool {
        self.points.contains(p)
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertex.is_some()
    }

    /// Points of the set lying in plane `h`.
    pub fn plane_section(&self, h: usize) -> Vec<usize> {
        let mut bits = self.space.hyperplane_points(h);
        bits.intersect_with(&self.points);
        bits.ones().collect()
    }

    fn meets(&self, line: &[usize]) -> usize {
        line.iter().filter(|&&p| self.points.contains(p)).count()
    }

    /// Nucleus of the base conic in the plane `X1 = 0`, as the common point of
    /// two tangent lines, checked against every other tangent.
    fn base_nucleus(&self) -> Result<usize, QuadError> {
        let base = self.space.point_id(&[1, 0, 0, 0])?;
        let conic = self.plane_section(base);
        let plane_pts: Vec<usize> = self.space.hyperplane_points(base).ones().collect();
        let tangent_at = |c: usize| -> Option<Vec<usize>> {
            plane_pts
                .iter()
                .filter(|&&r| r != c)
                .map(|&r| self.space.line_through(c, r))
                .find(|l| self.meets(l) == 1)
        };
        let t0 = tangent_at(conic[0]).ok_or(QuadError::NoNucleus)?;
        let t1 = tangent_at(conic[1]).ok_or(QuadError::NoNucleus)?;
        let common: Vec<usize> = t0.iter().copied().filter(|p| t1.contains(p)).collect();
        let &[n] = common.as_slice() else {
            return Err(QuadError::NoNucleus);
        };
        for &c in &conic[2..] {
            let t = tangent_at(c).ok_or(QuadError::NoNucleus)?;
            if !t.contains(&n) {
                return Err(QuadError::NoNucleus);
            }
        }
        Ok(n)
    }

    fn no_three_collinear(&self, pts: &[usize]) -> bool {
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                if self.meets(&self.space.line_through(a, b)) > 2 {
                    return false;
                }
            }
        }
        true
    }

    fn oval_size(&self) -> usize {
        let q = self.q() as usize;
        if self.kind == QuadKind::HyperovalCone {
            q + 2
        } else {
            q + 1
        }
    }

    pub fn classify_plane(&self, h: usize) -> PlaneClass {
        if let Some(v) = self.vertex {
            if self.space.on_hyperplane(v, h) {
                return PlaneClass::Generated;
            }
        }
        let section = self.plane_section(h);
        if section.len() == self.oval_size() && self.no_three_collinear(&section) {
            return PlaneClass::Oval;
        }
        if self.is_degenerate() {
            PlaneClass::Generated
        } else {
            PlaneClass::Tangent
        }
    }

    /// One circle per oval plane: `(plane id, sorted point ids)`.
    pub fn oval_circles(&self) -> Vec<(usize, Vec<usize>)> {
        (0..self.space.num_hyperplanes())
            .filter(|&h| self.classify_plane(h) == PlaneClass::Oval)
            .map(|h| (h, self.plane_section(h)))
            .collect()
    }

    /// Position of a point of an oval plane relative to the oval, by counting
    /// the tangent lines through it inside the plane.
    pub fn external_internal(&self, point: usize, plane: usize) -> Result<PointPosition, QuadError> {
        if self.classify_plane(plane) != PlaneClass::Oval {
            return Err(QuadError::NotOvalPlane(plane));
        }
        if !self.space.on_hyperplane(point, plane) {
            return Err(QuadError::PointNotInPlane { point, plane });
        }
        if self.contains(point) {
            return Ok(PointPosition::OnConic);
        }
        let mut covered = FixedBitSet::with_capacity(self.space.num_points());
        covered.insert(point);
        let mut tangents = 0;
        for r in self.space.hyperplane_points(plane).ones() {
            if covered.contains(r) {
                continue;
            }
            let line = self.space.line_through(point, r);
            for &p in &line {
                covered.insert(p);
            }
            if self.meets(&line) == 1 {
                tangents += 1;
            }
        }
        match tangents {
            2 => Ok(PointPosition::External),
            0 => Ok(PointPosition::Internal),
            n => Err(QuadError::UnexpectedTangentCount(n)),
        }
    }

    /// Checks the three quadratic-set axioms; returns a description of the
    /// first violation.
    pub fn check_axioms(&self) -> Result<(), String> {
        let q = self.q() as usize;
        let lines = self.space.lines();
        for line in &lines {
            let m = self.meets(line);
            if m > 2 && m < q + 1 {
                return Err(format!("line {line:?} meets the set in {m} points"));
            }
        }
        let n = self.space.num_points();
        for p in self.points.ones() {
            let mut tangent_union = FixedBitSet::with_capacity(n);
            for line in lines.iter().filter(|l| l.binary_search(&p).is_ok()) {
                let m = self.meets(line);
                if m == 1 || m == q + 1 {
                    for &x in line {
                        tangent_union.insert(x);
                    }
                }
            }
            let size = tangent_union.count_ones(..);
            let is_plane = (0..n).any(|h| self.space.hyperplane_points(h) == tangent_union);
            if size != n && !is_plane {
                return Err(format!("tangent lines at point {p} cover {size} points"));
            }
        }
        let mut subspaces: Vec<FixedBitSet> = Vec::new();
        for line in lines.iter().filter(|l| self.meets(l) == q + 1) {
            let mut b = FixedBitSet::with_capacity(n);
            for &x in line {
                b.insert(x);
            }
            subspaces.push(b);
        }
        for h in 0..n {
            let b = self.space.hyperplane_points(h);
            if b.is_subset(&self.points) {
                subspaces.push(b);
            }
        }
        for p in self.points.ones() {
            let mut b = FixedBitSet::with_capacity(n);
            b.insert(p);
            subspaces.push(b);
        }
        let total = self.len();
        for (i, a) in subspaces.iter().enumerate() {
            for b in &subspaces[i..] {
                if a.count_ones(..) + b.count_ones(..) < total {
                    continue;
                }
                let mut u = a.clone();
                u.union_with(b);
                if u == self.points {
                    return Err("the set is a union of two subspaces".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::{make_field, SquareClass};
    use crate::projective_space::{Polarity, Subspace};

    fn set(kind: QuadKind, q: u64) -> QuadraticSet {
        build_quadratic_set(kind, &make_field(q).unwrap()).unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(set(QuadKind::Elliptic, 3).len(), 10);
        assert_eq!(set(QuadKind::Hyperbolic, 3).len(), 16);
        assert_eq!(set(QuadKind::Cone, 4).len(), 21);
        for q in [3u64, 4, 5, 7, 8, 9] {
            let qq = q as usize;
            assert_eq!(set(QuadKind::Elliptic, q).len(), qq * qq + 1);
            assert_eq!(set(QuadKind::Hyperbolic, q).len(), (qq + 1) * (qq + 1));
            assert_eq!(set(QuadKind::Cone, q).len(), qq * qq + qq + 1);
        }
        assert_eq!(set(QuadKind::HyperovalCone, 4).len(), 16 + 4 + 1 + 4);
    }

    #[test]
    fn errors() {
        let f3 = make_field(3).unwrap();
        assert_eq!(
            build_quadratic_set(QuadKind::HyperovalCone, &f3).unwrap_err(),
            QuadError::WrongParity
        );
        let f2 = make_field(2).unwrap();
        assert!(build_quadratic_set(QuadKind::Elliptic, &f2).is_err());
    }

    #[test]
    fn nucleus_of_base_conic() {
        for q in [4u64, 8] {
            let s = set(QuadKind::HyperovalCone, q);
            let line = s.nucleus_line.as_ref().unwrap();
            let nucleus = s.space.point_id(&[0, 0, 1, 0]).unwrap();
            assert!(line.contains(&nucleus));
            assert!(line.contains(&s.vertex.unwrap()));
        }
    }

    #[test]
    fn plane_class_counts() {
        let count = |s: &QuadraticSet, c: PlaneClass| {
            (0..s.space.num_hyperplanes()).filter(|&h| s.classify_plane(h) == c).count()
        };
        let e3 = set(QuadKind::Elliptic, 3);
        assert_eq!(count(&e3, PlaneClass::Oval), 30);
        assert_eq!(count(&e3, PlaneClass::Tangent), 10);
        let h3 = set(QuadKind::Hyperbolic, 3);
        assert_eq!(count(&h3, PlaneClass::Oval), 24);
        let c3 = set(QuadKind::Cone, 3);
        let v = c3.vertex.unwrap();
        for h in 0..40 {
            if c3.space.on_hyperplane(v, h) {
                assert_eq!(c3.classify_plane(h), PlaneClass::Generated);
            }
        }
    }

    #[test]
    fn circle_counts() {
        let e5 = set(QuadKind::Elliptic, 5).oval_circles();
        assert_eq!(e5.len(), 130);
        assert!(e5.iter().all(|(_, c)| c.len() == 6));
        let h4 = set(QuadKind::HyperovalCone, 4).oval_circles();
        assert_eq!(h4.len(), 64);
        assert!(h4.iter().all(|(_, c)| c.len() == 6));
        let c3 = set(QuadKind::Cone, 3).oval_circles();
        assert_eq!(c3.len(), 27);
        assert!(c3.iter().all(|(_, c)| c.len() == 4));
    }

    #[test]
    fn axioms_hold() {
        for q in [3u64, 4, 5] {
            for kind in [QuadKind::Elliptic, QuadKind::Hyperbolic, QuadKind::Cone] {
                set(kind, q).check_axioms().unwrap();
            }
        }
    }

    #[test]
    fn union_of_two_planes_fails_axioms() {
        let mut s = set(QuadKind::Hyperbolic, 3);
        let mut pts = s.space.hyperplane_points(0);
        pts.union_with(&s.space.hyperplane_points(1));
        s.points = pts;
        assert!(s.check_axioms().is_err());
    }

    #[test]
    fn conic_external_internal_counts() {
        let s = set(QuadKind::Elliptic, 5);
        let (plane, _) = s.oval_circles()[0].clone();
        let mut ext = 0;
        let mut int = 0;
        for p in s.space.hyperplane_points(plane).ones() {
            match s.external_internal(p, plane).unwrap() {
                PointPosition::External => ext += 1,
                PointPosition::Internal => int += 1,
                PointPosition::OnConic => assert!(s.contains(p)),
            }
        }
        assert_eq!((ext, int), (15, 10));
    }

    fn perp_profile(kind: QuadKind, q: u64) {
        let s = set(kind, q);
        let pol = Polarity::new(&s.space, &s.form).unwrap();
        for line in s.space.lines() {
            let i = s.meets(&line);
            if i == q as usize + 1 {
                continue;
            }
            let Subspace::Line(lp) = pol.perp(&s.space, &Subspace::Line(line)) else {
                unreachable!()
            };
            let x = s.meets(&lp);
            match kind {
                QuadKind::Elliptic => assert_eq!(x, 2 - i),
                _ => assert_eq!(x, i),
            }
        }
    }

    #[test]
    fn perp_line_profile() {
        for q in [3, 5] {
            perp_profile(QuadKind::Elliptic, q);
            perp_profile(QuadKind::Hyperbolic, q);
        }
    }

    #[test]
    fn external_iff_kappa_product() {
        for kind in [QuadKind::Elliptic, QuadKind::Hyperbolic] {
            let s = set(kind, 3);
            let f = s.space.field().clone();
            let pol = Polarity::new(&s.space, &s.form).unwrap();
            let want = if kind == QuadKind::Elliptic {
                SquareClass::NonSquare
            } else {
                SquareClass::Square
            };
            for p in 0..s.space.num_points() {
                if s.contains(p) {
                    continue;
                }
                for r in 0..s.space.num_points() {
                    if r == p || s.contains(r) || !pol.orthogonal(&s.space, p, r) {
                        continue;
                    }
                    let kp = s.form.eval(s.space.coords(p));
                    let kr = s.form.eval(s.space.coords(r));
                    let prod = f.square_class(f.neg(f.mul(kp, kr)));
                    let ext = s.external_internal(p, pol.plane_of(r)).unwrap() == PointPosition::External;
                    assert_eq!(ext, prod == want);
                }
            }
        }
    }

    fn type_consistency(kind: QuadKind, q: u64, max_pairs: usize) {
        let s = set(kind, q);
        let pol = Polarity::new(&s.space, &s.form).unwrap();
        let poles: Vec<usize> = (0..s.space.num_points()).filter(|&p| !s.contains(p)).collect();
        let mut checked = 0;
        'outer: for (i, &p) in poles.iter().enumerate() {
            for &r in poles[i + 1..].iter().step_by(1 + poles.len() / 40) {
                let same = s.form.kappa_class(s.space.coords(p)) == s.form.kappa_class(s.space.coords(r));
                let mut line = s.space.hyperplane_points(pol.plane_of(p));
                line.intersect_with(&s.space.hyperplane_points(pol.plane_of(r)));
                for x in line.ones().filter(|&x| !s.contains(x)) {
                    let ep = s.external_internal(x, pol.plane_of(p)).unwrap() == PointPosition::External;
                    let er = s.external_internal(x, pol.plane_of(r)).unwrap() == PointPosition::External;
                    assert_eq!(ep == er, same);
                }
                checked += 1;
                if checked >= max_pairs {
                    break 'outer;
                }
            }
        }
        if max_pairs != usize::MAX {
            assert_eq!(checked, max_pairs);
        }
    }

    #[test]
    fn external_type_consistency_q3() {
        type_consistency(QuadKind::Elliptic, 3, usize::MAX);
        type_consistency(QuadKind::Hyperbolic, 3, usize::MAX);
    }

    #[test]
    fn external_type_consistency_sampled() {
        for q in [5, 7] {
            type_consistency(QuadKind::Elliptic, q, 500);
            type_consistency(QuadKind::Hyperbolic, q, 500);
        }
    }
}
