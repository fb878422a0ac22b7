//! `PGL(2,q)` as a list of normalized 2×2 matrices, with conjugacy classes,
//! PSL membership, the action on `PG(1,q)`, and the character table for odd `q`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::finite_field::{Field, FieldError, QuadraticExtension, SquareClass};
use crate::projective_space::{ProjError, ProjectiveSpace};

/// Upper bound on `q` for an enumerated group (`q^4` lookup entries).
pub const MAX_GROUP_ORDER_Q: u32 = 32;

/// Row-major `[a, b, c, d]` for `(a b / c d)`.
pub type Mat2 = [u32; 4];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PglError {
    #[error("PGL(2,{0}) is too large to enumerate")]
    TooLarge(u32),
    #[error("the character table is only built for odd q")]
    EvenCharacteristic,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Space(#[from] ProjError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ClassKind {
    Identity,
    Unipotent,
    /// Eigenvalue ratio `x = g^e` with `e` replaced by `min(e, q-1-e)`.
    Split(u32),
    /// Eigenvalue coset `r F_q^*` with index `j` in `Z_{q+1}`, replaced by `min(j, q+1-j)`.
    NonSplit(u32),
}

impl ClassKind {
    /// `δ_q(x)` resp. `δ_{q²}(r)`: whether the class lies in PSL(2,q).
    pub fn in_psl(self) -> bool {
        match self {
            ClassKind::Identity | ClassKind::Unipotent => true,
            ClassKind::Split(e) => e % 2 == 0,
            ClassKind::NonSplit(j) => j % 2 == 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyClass {
    pub kind: ClassKind,
    pub size: usize,
    pub representative: Mat2,
}

#[derive(Debug, Clone)]
pub struct Pgl2 {
    field: Field,
    line: ProjectiveSpace,
    elements: Vec<Mat2>,
    index: Vec<u32>,
    ext: Option<QuadraticExtension>,
}

impl Pgl2 {
    pub fn new(field: &Field) -> Result<Pgl2, PglError> {
        let q = field.order();
        if q > MAX_GROUP_ORDER_Q {
            return Err(PglError::TooLarge(q));
        }
        let line = ProjectiveSpace::new(1, field)?;
        let qs = q as usize;
        let mut index = vec![u32::MAX; qs.pow(4)];
        let mut elements = Vec::with_capacity(qs * (qs * qs - 1));
        for key in 0..qs.pow(4) {
            let m = [
                (key / (qs * qs * qs)) as u32,
                (key / (qs * qs) % qs) as u32,
                (key / qs % qs) as u32,
                (key % qs) as u32,
            ];
            if det(field, &m) != 0 && m.iter().find(|&&c| c != 0) == Some(&1) {
                index[key] = elements.len() as u32;
                elements.push(m);
            }
        }
        let ext = if field.is_odd() {
            Some(QuadraticExtension::new(field)?)
        } else {
            None
        };
        Ok(Pgl2 {
            field: field.clone(),
            line,
            elements,
            index,
            ext,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn projective_line(&self) -> &ProjectiveSpace {
        &self.line
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Mat2] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> Mat2 {
        self.elements[id]
    }

    pub fn identity(&self) -> usize {
        self.id_of(&[1, 0, 0, 1]).unwrap()
    }

    /// Scales so the first nonzero entry is 1; `None` for singular matrices.
    pub fn normalize(&self, m: &Mat2) -> Option<Mat2> {
        if det(&self.field, m) == 0 {
            return None;
        }
        let lead = *m.iter().find(|&&c| c != 0)?;
        let inv = self.field.inv(lead)?;
        Some(m.map(|c| self.field.mul(c, inv)))
    }

    pub fn id_of(&self, m: &Mat2) -> Option<usize> {
        let n = self.normalize(m)?;
        let q = self.field.order() as usize;
        let key = n.iter().fold(0, |acc, &c| acc * q + c as usize);
        Some(self.index[key] as usize)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let p = mat_mul(&self.field, &self.elements[a], &self.elements[b]);
        self.id_of(&p).unwrap()
    }

    pub fn inv(&self, a: usize) -> usize {
        let [x, y, z, w] = self.elements[a];
        let f = &self.field;
        self.id_of(&[w, f.neg(y), f.neg(z), x]).unwrap()
    }

    pub fn det_class(&self, a: usize) -> SquareClass {
        self.field.square_class(det(&self.field, &self.elements[a]))
    }

    /// PSL(2,q) membership: the determinant is a square (always true for even `q`).
    pub fn in_psl(&self, a: usize) -> bool {
        self.det_class(a) == SquareClass::Square
    }

    /// Image of a point of `PG(1,q)` (by id) under `x ↦ M x^φ`, `φ = frobenius^k`.
    pub fn apply(&self, a: usize, point: usize, k: u32) -> usize {
        let f = &self.field;
        let [m0, m1, m2, m3] = self.elements[a];
        let x = self.line.coords(point);
        let (x0, x1) = (f.frobenius(x[0], k).unwrap(), f.frobenius(x[1], k).unwrap());
        let y = [
            f.add(f.mul(m0, x0), f.mul(m1, x1)),
            f.add(f.mul(m2, x0), f.mul(m3, x1)),
        ];
        self.line.point_id(&y).unwrap()
    }

    pub fn fixed_point_count(&self, a: usize) -> usize {
        (0..self.line.num_points())
            .filter(|&p| self.apply(a, p, 0) == p)
            .count()
    }

    /// Conjugacy class of an element (odd `q`).
    pub fn classify(&self, a: usize) -> ClassKind {
        let f = &self.field;
        let m = self.elements[a];
        if m[1] == 0 && m[2] == 0 && m[0] == m[3] {
            return ClassKind::Identity;
        }
        let tr = f.add(m[0], m[3]);
        let n = det(f, &m);
        let disc = f.sub(f.mul(tr, tr), f.mul(f.from_int(4), n));
        let q = f.order();
        if disc == 0 {
            return ClassKind::Unipotent;
        }
        if f.is_square(disc) {
            let roots: Vec<u32> = f
                .elements()
                .filter(|&x| f.add(f.sub(f.mul(x, x), f.mul(tr, x)), n) == 0)
                .collect();
            let ratio = f.div(roots[1], roots[0]).unwrap();
            let e = f.log(ratio).unwrap();
            return ClassKind::Split(e.min(q - 1 - e));
        }
        let ext = self.ext.as_ref().expect("odd q");
        let r = ext.roots_of_quadratic(tr, n)[0];
        let j = ext.ext.log(r).unwrap() % (q + 1);
        ClassKind::NonSplit(j.min(q + 1 - j))
    }

    /// All conjugacy classes in canonical order (odd `q`).
    pub fn conjugacy_classes(&self) -> Vec<ConjugacyClass> {
        let mut classes: Vec<ConjugacyClass> = Vec::new();
        let mut kinds: Vec<(ClassKind, usize)> = (0..self.order()).map(|a| (self.classify(a), a)).collect();
        kinds.sort();
        for (kind, a) in kinds {
            match classes.last_mut() {
                Some(c) if c.kind == kind => c.size += 1,
                _ => classes.push(ConjugacyClass {
                    kind,
                    size: 1,
                    representative: self.elements[a],
                }),
            }
        }
        classes
    }

    /// Class index per element, with `classes` as returned by [`Pgl2::conjugacy_classes`].
    pub fn class_table(&self, classes: &[ConjugacyClass]) -> Vec<usize> {
        (0..self.order())
            .map(|a| {
                let k = self.classify(a);
                classes.iter().position(|c| c.kind == k).unwrap()
            })
            .collect()
    }
}

pub fn det(f: &Field, m: &Mat2) -> u32 {
    f.sub(f.mul(m[0], m[3]), f.mul(m[1], m[2]))
}

pub fn mat_mul(f: &Field, a: &Mat2, b: &Mat2) -> Mat2 {
    [
        f.add(f.mul(a[0], b[0]), f.mul(a[1], b[2])),
        f.add(f.mul(a[0], b[1]), f.mul(a[1], b[3])),
        f.add(f.mul(a[2], b[0]), f.mul(a[3], b[2])),
        f.add(f.mul(a[2], b[1]), f.mul(a[3], b[3])),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterRow {
    pub name: String,
    pub degree: u32,
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterTable {
    pub q: u32,
    pub classes: Vec<ConjugacyClass>,
    pub rows: Vec<CharacterRow>,
}

pub fn character_table(group: &Pgl2) -> Result<CharacterTable, PglError> {
    let f = group.field();
    if !f.is_odd() {
        return Err(PglError::EvenCharacteristic);
    }
    let q = f.order();
    let qf = q as f64;
    let classes = group.conjugacy_classes();
    let sign = |b: bool| if b { 1.0 } else { -1.0 };
    let row = |name: String, degree: u32, value: &dyn Fn(ClassKind) -> f64| CharacterRow {
        name,
        degree,
        values: classes.iter().map(|c| Complex64::new(value(c.kind), 0.0)).collect(),
    };
    let mut rows = vec![
        row("lambda_1".into(), 1, &|_| 1.0),
        row("lambda_-1".into(), 1, &|k| sign(k.in_psl())),
        row("psi_1".into(), q, &|k| match k {
            ClassKind::Identity => qf,
            ClassKind::Unipotent => 0.0,
            ClassKind::Split(_) => 1.0,
            ClassKind::NonSplit(_) => -1.0,
        }),
        row("psi_-1".into(), q, &|k| match k {
            ClassKind::Identity => qf,
            ClassKind::Unipotent => 0.0,
            ClassKind::Split(_) => sign(k.in_psl()),
            ClassKind::NonSplit(_) => -sign(k.in_psl()),
        }),
    ];
    for m in 1..=(q - 1) / 2 {
        rows.push(row(format!("eta_{m}"), q - 1, &|k| match k {
            ClassKind::Identity => qf - 1.0,
            ClassKind::Unipotent => -1.0,
            ClassKind::Split(_) => 0.0,
            ClassKind::NonSplit(j) => -2.0 * (2.0 * PI * (m * j) as f64 / (qf + 1.0)).cos(),
        }));
    }
    for m in 1..=(q - 3) / 2 {
        rows.push(row(format!("nu_{m}"), q + 1, &|k| match k {
            ClassKind::Identity => qf + 1.0,
            ClassKind::Unipotent => 1.0,
            ClassKind::Split(e) => 2.0 * (2.0 * PI * (m * e) as f64 / (qf - 1.0)).cos(),
            ClassKind::NonSplit(_) => 0.0,
        }));
    }
    Ok(CharacterTable {
        q,
        classes,
        rows,
    })
}

impl CharacterTable {
    pub fn group_order(&self) -> usize {
        self.classes.iter().map(|c| c.size).sum()
    }

    /// Largest deviation of `Σ_c |c| χ(c) conj(ψ(c))` from `|G| δ`.
    pub fn row_orthogonality_error(&self) -> f64 {
        let n = self.group_order() as f64;
        let mut worst: f64 = 0.0;
        for (i, a) in self.rows.iter().enumerate() {
            for (j, b) in self.rows.iter().enumerate() {
                let s: Complex64 = self
                    .classes
                    .iter()
                    .enumerate()
                    .map(|(c, cl)| a.values[c] * b.values[c].conj() * cl.size as f64)
                    .sum();
                let want = if i == j { n } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }

    /// Largest deviation of `Σ_χ χ(c) conj(χ(c'))` from `|G|/|c| δ`.
    pub fn column_orthogonality_error(&self) -> f64 {
        let n = self.group_order() as f64;
        let mut worst: f64 = 0.0;
        for (c, cl) in self.classes.iter().enumerate() {
            for d in 0..self.classes.len() {
                let s: Complex64 = self.rows.iter().map(|r| r.values[c] * r.values[d].conj()).sum();
                let want = if c == d { n / cl.size as f64 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
        worst
    }
}
