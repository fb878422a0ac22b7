//! Points, lines and planes of `PG(n,q)` for `n ≤ 3`, quadratic forms, and the
//! polarity of a nondegenerate form in odd characteristic.
//!
//! Points are stored with the first nonzero coordinate equal to 1 and are
//! numbered in lexicographic order of those coordinates. In `PG(3,q)` a plane
//! with dual coordinates `u` gets the same id as the point with coordinates
//! `u`.

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::finite_field::{Field, SquareClass};

/// Upper bound on `q^(n+1)` for an enumerated space.
pub const MAX_VECTORS: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProjError {
    #[error("PG({n},{q}) is too large to enumerate")]
    TooLarge { n: usize, q: u32 },
    #[error("only PG(1,q), PG(2,q) and PG(3,q) are supported, got n={0}")]
    UnsupportedDimension(usize),
    #[error("the bilinear form is degenerate")]
    DegenerateForm,
    #[error("the polarity is only defined in odd characteristic")]
    EvenCharacteristic,
    #[error("zero vector has no projective point")]
    ZeroVector,
}

#[derive(Debug, Clone)]
pub struct ProjectiveSpace {
    field: Field,
    n: usize,
    points: Vec<Vec<u32>>,
    index: Vec<u32>,
}

impl ProjectiveSpace {
    pub fn new(n: usize, field: &Field) -> Result<ProjectiveSpace, ProjError> {
        if !(1..=3).contains(&n) {
            return Err(ProjError::UnsupportedDimension(n));
        }
        let q = field.order();
        let total = (q as u64).pow(n as u32 + 1);
        if total > MAX_VECTORS {
            return Err(ProjError::TooLarge { n, q });
        }
        let mut points = Vec::new();
        let mut index = vec![u32::MAX; total as usize];
        for key in 0..total {
            let mut coords = vec![0u32; n + 1];
            let mut rest = key;
            for c in coords.iter_mut().rev() {
                *c = (rest % q as u64) as u32;
                rest /= q as u64;
            }
            if coords.iter().find(|&&c| c != 0) == Some(&1) {
                index[key as usize] = points.len() as u32;
                points.push(coords);
            }
        }
        Ok(ProjectiveSpace {
            field: field.clone(),
            n,
            points,
            index,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn coords(&self, id: usize) -> &[u32] {
        &self.points[id]
    }

    pub fn points(&self) -> &[Vec<u32>] {
        &self.points
    }

    fn key(&self, coords: &[u32]) -> usize {
        let q = self.field.order() as usize;
        coords.iter().fold(0, |acc, &c| acc * q + c as usize)
    }

    pub fn normalize(&self, coords: &[u32]) -> Result<Vec<u32>, ProjError> {
        let lead = *coords.iter().find(|&&c| c != 0).ok_or(ProjError::ZeroVector)?;
        let inv = self.field.inv(lead).unwrap();
        Ok(coords.iter().map(|&c| self.field.mul(c, inv)).collect())
    }

    /// Id of the projective point spanned by a nonzero vector.
    pub fn point_id(&self, coords: &[u32]) -> Result<usize, ProjError> {
        let norm = self.normalize(coords)?;
        Ok(self.index[self.key(&norm)] as usize)
    }

    pub fn dot(&self, x: &[u32], y: &[u32]) -> u32 {
        x.iter()
            .zip(y)
            .fold(0, |acc, (&a, &b)| self.field.add(acc, self.field.mul(a, b)))
    }

    /// Sorted ids of the points on the line through two distinct points.
    pub fn line_through(&self, a: usize, b: usize) -> Vec<usize> {
        let f = &self.field;
        let (x, y) = (&self.points[a], &self.points[b]);
        let mut line: Vec<usize> = f
            .elements()
            .map(|t| {
                let v: Vec<u32> = x.iter().zip(y).map(|(&xi, &yi)| f.add(xi, f.mul(t, yi))).collect();
                self.point_id(&v).expect("distinct points span a line")
            })
            .collect();
        line.push(b);
        line.sort_unstable();
        line
    }

    /// All lines as sorted point-id lists, ordered by their two smallest points.
    pub fn lines(&self) -> Vec<Vec<usize>> {
        let np = self.num_points();
        let mut out = Vec::new();
        for a in 0..np {
            for b in a + 1..np {
                let line = self.line_through(a, b);
                if line[0] == a && line[1] == b {
                    out.push(line);
                }
            }
        }
        out
    }

    /// Number of hyperplanes; hyperplane `i` has dual coordinates `coords(i)`.
    pub fn num_hyperplanes(&self) -> usize {
        self.num_points()
    }

    pub fn hyperplane_points(&self, h: usize) -> FixedBitSet {
        let u = &self.points[h];
        let mut bits = FixedBitSet::with_capacity(self.num_points());
        for (id, x) in self.points.iter().enumerate() {
            if self.dot(u, x) == 0 {
                bits.insert(id);
            }
        }
        bits
    }

    pub fn hyperplanes(&self) -> Vec<FixedBitSet> {
        (0..self.num_hyperplanes()).map(|h| self.hyperplane_points(h)).collect()
    }

    pub fn on_hyperplane(&self, point: usize, h: usize) -> bool {
        self.dot(&self.points[point], &self.points[h]) == 0
    }
}

/// `κ(x) = Σ_{i≤j} a_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadForm {
    field: Field,
    upper: Vec<Vec<u32>>,
}

impl QuadForm {
    /// `terms` lists `(i, j, a_ij)` with `i ≤ j`; unlisted coefficients are 0.
    pub fn new(field: &Field, dim: usize, terms: &[(usize, usize, u32)]) -> QuadForm {
        let mut upper = vec![vec![0; dim]; dim];
        for &(i, j, a) in terms {
            let (i, j) = (i.min(j), i.max(j));
            upper[i][j] = field.add(upper[i][j], a);
        }
        QuadForm {
            field: field.clone(),
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coefficient(&self, i: usize, j: usize) -> u32 {
        self.upper[i.min(j)][i.max(j)]
    }

    pub fn eval(&self, x: &[u32]) -> u32 {
        let f = &self.field;
        let mut acc = 0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let a = self.upper[i][j];
                if a != 0 {
                    acc = f.add(acc, f.mul(a, f.mul(x[i], x[j])));
                }
            }
        }
        acc
    }

    /// `b(x,y) = κ(x+y) − κ(x) − κ(y)`.
    pub fn bilinear(&self, x: &[u32], y: &[u32]) -> u32 {
        let f = &self.field;
        let s: Vec<u32> = x.iter().zip(y).map(|(&a, &b)| f.add(a, b)).collect();
        f.sub(f.sub(self.eval(&s), self.eval(x)), self.eval(y))
    }

    /// Gram matrix of `b`.
    pub fn gram(&self) -> Vec<Vec<u32>> {
        let f = &self.field;
        let n = self.dim();
        let mut g = vec![vec![0; n]; n];
        for i in 0..n {
            g[i][i] = f.add(self.upper[i][i], self.upper[i][i]);
            for j in i + 1..n {
                g[i][j] = self.upper[i][j];
                g[j][i] = self.upper[i][j];
            }
        }
        g
    }

    pub fn kappa_class(&self, x: &[u32]) -> SquareClass {
        self.field.square_class(self.eval(x))
    }
}

/// Rank of a matrix over `F_q`.
pub fn rank(field: &Field, m: &[Vec<u32>]) -> usize {
    let mut a: Vec<Vec<u32>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, piv);
        let inv = field.inv(a[r][c]).unwrap();
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let factor = field.mul(a[i][c], inv);
                for k in c..cols {
                    let t = field.mul(factor, a[r][k]);
                    a[i][k] = field.sub(a[i][k], t);
                }
            }
        }
        r += 1;
    }
    r
}

/// A projective subspace of `PG(3,q)` as handled by the polarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subspace {
    Point(usize),
    Line(Vec<usize>),
    Plane(usize),
}

/// The polarity `P ↦ P^⊥ = {y : b(x,y) = 0}` of a nondegenerate form, odd `q`.
#[derive(Debug, Clone)]
pub struct Polarity {
    form: QuadForm,
    gram: Vec<Vec<u32>>,
    point_to_plane: Vec<usize>,
    plane_to_point: Vec<usize>,
}

impl Polarity {
    pub fn new(space: &ProjectiveSpace, form: &QuadForm) -> Result<Polarity, ProjError> {
        let f = space.field();
        if !f.is_odd() {
            return Err(ProjError::EvenCharacteristic);
        }
        let gram = form.gram();
        if rank(f, &gram) < gram.len() {
            return Err(ProjError::DegenerateForm);
        }
        let n = space.num_points();
        let mut point_to_plane = vec![0; n];
        let mut plane_to_point = vec![0; n];
        for (id, x) in space.points().iter().enumerate() {
            let u: Vec<u32> = gram.iter().map(|row| space.dot(row, x)).collect();
            let h = space.point_id(&u)?;
            point_to_plane[id] = h;
            plane_to_point[h] = id;
        }
        Ok(Polarity {
            form: form.clone(),
            gram,
            point_to_plane,
            plane_to_point,
        })
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    pub fn gram(&self) -> &[Vec<u32>] {
        &self.gram
    }

    pub fn plane_of(&self, point: usize) -> usize {
        self.point_to_plane[point]
    }

    pub fn pole_of(&self, plane: usize) -> usize {
        self.plane_to_point[plane]
    }

    /// `P ⊥ R`, i.e. `R ∈ P^⊥`.
    pub fn orthogonal(&self, space: &ProjectiveSpace, p: usize, r: usize) -> bool {
        space.on_hyperplane(r, self.point_to_plane[p])
    }

    pub fn perp(&self, space: &ProjectiveSpace, obj: &Subspace) -> Subspace {
        match obj {
            Subspace::Point(p) => Subspace::Plane(self.plane_of(*p)),
            Subspace::Plane(h) => Subspace::Point(self.pole_of(*h)),
            Subspace::Line(pts) => {
                let mut bits = space.hyperplane_points(self.plane_of(pts[0]));
                bits.intersect_with(&space.hyperplane_points(self.plane_of(pts[1])));
                Subspace::Line(bits.ones().collect())
            }
        }
    }
}
