//! Relations on circles by intersection size, association-scheme verification
//! and exact eigenvalue matrices.

pub mod closed_forms;
pub mod exact;
mod graphs;

pub use graphs::*;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

use crate::circle_geometry::CircleGeometry;
use crate::finite_field::make_field;
use crate::pgl2::{ClassKind, Mat2, Pgl2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("operation needs odd q")]
    WrongParity,
    #[error("operation needs rho = {0}")]
    WrongRho(u8),
    #[error("geometry carries no square-type labels")]
    MissingSquareType,
    #[error("geometry carries neither poles nor group elements")]
    MissingGroupData,
    #[error("relation family is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("relation 0 is not the identity at ({0},{1})")]
    NotIdentity(usize, usize),
    #[error("characteristic polynomial has {leftover} non-integer roots")]
    NonIntegerEigenvalue { leftover: usize },
    #[error("could not separate common eigenspaces: {0}")]
    Degenerate(String),
    #[error("point {0} out of range")]
    BadPoint(usize),
    #[error("circle {0} is not usable here")]
    BadCircle(usize),
    #[error("{0}")]
    Other(String),
}

/// A partition of ordered circle pairs into symmetric relations, relation 0
/// being the identity.
#[derive(Debug, Clone)]
pub struct RelationFamily {
    pub labels: Vec<String>,
    /// Labels of relations that turned out empty and were removed.
    pub dropped: Vec<String>,
    n: usize,
    rel: Vec<u8>,
    /// `rows[i][x]`: the set of `y` with `(x, y)` in relation `i`.
    rows: Vec<Vec<FixedBitSet>>,
}

impl RelationFamily {
    /// Builds the family from a classifier mapping each ordered pair to an index
    /// into `labels`; empty relations are dropped and indices compacted.
    pub fn from_classifier<F>(n: usize, labels: Vec<String>, classify: F) -> Result<RelationFamily, SpectralError>
    where
        F: Fn(usize, usize) -> usize + Sync,
    {
        let rel: Vec<u8> = (0..n)
            .into_par_iter()
            .flat_map_iter(|x| {
                let classify = &classify;
                (0..n).map(move |y| classify(x, y) as u8)
            })
            .collect();
        for x in 0..n {
            for y in 0..n {
                let r = rel[x * n + y];
                if (r == 0) != (x == y) {
                    return Err(SpectralError::NotIdentity(x, y));
                }
                if r != rel[y * n + x] {
                    return Err(SpectralError::NotSymmetric(x, y));
                }
            }
        }
        let mut used = vec![false; labels.len()];
        for &r in &rel {
            used[r as usize] = true;
        }
        let mut remap = vec![0u8; labels.len()];
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (i, l) in labels.into_iter().enumerate() {
            if used[i] {
                remap[i] = kept.len() as u8;
                kept.push(l);
            } else {
                dropped.push(l);
            }
        }
        let rel: Vec<u8> = rel.into_iter().map(|r| remap[r as usize]).collect();
        let mut rows = vec![vec![FixedBitSet::with_capacity(n); n]; kept.len()];
        for x in 0..n {
            for y in 0..n {
                rows[rel[x * n + y] as usize][x].insert(y);
            }
        }
        Ok(RelationFamily {
            labels: kept,
            dropped,
            n,
            rel,
            rows,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn num_relations(&self) -> usize {
        self.labels.len()
    }

    pub fn relation(&self, x: usize, y: usize) -> usize {
        self.rel[x * self.n + y] as usize
    }

    pub fn row(&self, i: usize, x: usize) -> &FixedBitSet {
        &self.rows[i][x]
    }

    /// Per-relation valency if every relation is regular.
    pub fn valencies(&self) -> Option<Vec<usize>> {
        self.rows
            .iter()
            .map(|rows| {
                let k = rows.first().map_or(0, |r| r.count_ones(..));
                rows.iter().all(|r| r.count_ones(..) == k).then_some(k)
            })
            .collect()
    }

    /// Index of the relation with the given label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub const LABEL_IDENTITY: &str = "identity";
pub const LABEL_MEET1: &str = "|∩|=1";
pub const LABEL_MEET2: &str = "|∩|=2";
pub const LABEL_MEET0: &str = "|∩|=0";

/// Relations by intersection size: identity, meeting in 1, in 2, disjoint.
pub fn intersection_relations(geom: &CircleGeometry) -> RelationFamily {
    let labels = [LABEL_IDENTITY, LABEL_MEET1, LABEL_MEET2, LABEL_MEET0, "|∩|>2"];
    RelationFamily::from_classifier(geom.num_circles(), labels.map(String::from).to_vec(), |x, y| {
        if x == y {
            return 0;
        }
        match geom.meet(x, y) {
            1 => 1,
            2 => 2,
            0 => 3,
            _ => 4,
        }
    })
    .expect("intersection relations are symmetric with identity diagonal")
}

fn spliced_labels() -> Vec<String> {
    let mut labels = vec![LABEL_IDENTITY.to_string()];
    for base in [LABEL_MEET1, LABEL_MEET2, LABEL_MEET0] {
        labels.push(format!("{base} same type"));
        labels.push(format!("{base} different type"));
    }
    labels.push("|∩|>2".into());
    labels
}

fn spliced_index(meet: usize, same: bool) -> usize {
    let base = match meet {
        1 => 1,
        2 => 3,
        0 => 5,
        _ => return 7,
    };
    if same {
        base
    } else {
        base + 1
    }
}

/// Splits every intersection relation by whether the two circles have the same
/// square type; empty parts are dropped.
pub fn splice_by_square_type(geom: &CircleGeometry) -> Result<RelationFamily, SpectralError> {
    if geom.q % 2 == 0 {
        return Err(SpectralError::WrongParity);
    }
    let types = geom.square_type.as_ref().ok_or(SpectralError::MissingSquareType)?;
    RelationFamily::from_classifier(geom.num_circles(), spliced_labels(), |x, y| {
        if x == y {
            0
        } else {
            spliced_index(geom.meet(x, y), types[x] == types[y])
        }
    })
}

/// The six spliced relations on an odd-order Minkowski plane.
pub fn splice_minkowski_odd(geom: &CircleGeometry) -> Result<RelationFamily, SpectralError> {
    if geom.rho != 2 {
        return Err(SpectralError::WrongRho(2));
    }
    splice_by_square_type(geom)
}

/// The PGL(2,q) element attached to each circle: group ids for the sharply
/// 3-transitive model, pole matrices for the hyperbolic quadric.
fn circle_matrices(geom: &CircleGeometry, group: &Pgl2) -> Result<Vec<usize>, SpectralError> {
    if let Some(ids) = &geom.group_elements {
        if geom.provenance.phi.unwrap_or(0) != 0 {
            return Err(SpectralError::Other(
                "group route needs the untwisted model (phi = id)".into(),
            ));
        }
        return Ok(ids.iter().map(|&i| i as usize).collect());
    }
    let poles = geom.poles.as_ref().ok_or(SpectralError::MissingGroupData)?;
    poles
        .iter()
        .enumerate()
        .map(|(c, x)| {
            let m: Mat2 = [x[0], x[1], x[2], x[3]];
            group.id_of(&m).ok_or(SpectralError::BadCircle(c))
        })
        .collect()
}

/// The spliced Minkowski relations computed from group classes: the pair
/// `(P, R)` is classified by the conjugacy class of `M_R M_P^{-1}`.
pub fn splice_by_group(geom: &CircleGeometry) -> Result<RelationFamily, SpectralError> {
    if geom.rho != 2 {
        return Err(SpectralError::WrongRho(2));
    }
    if geom.q % 2 == 0 {
        return Err(SpectralError::WrongParity);
    }
    let field = make_field(geom.q as u64).map_err(|e| SpectralError::Other(e.to_string()))?;
    let group = Pgl2::new(&field).map_err(|e| SpectralError::Other(e.to_string()))?;
    let mats = circle_matrices(geom, &group)?;
    let inv: Vec<usize> = mats.iter().map(|&m| group.inv(m)).collect();
    RelationFamily::from_classifier(geom.num_circles(), spliced_labels(), |x, y| {
        match group.classify(group.mul(mats[y], inv[x])) {
            ClassKind::Identity => 0,
            ClassKind::Unipotent => spliced_index(1, true),
            ClassKind::Split(e) => spliced_index(2, e % 2 == 0),
            ClassKind::NonSplit(j) => spliced_index(0, j % 2 == 0),
        }
    })
}

/// Intersection numbers of a verified scheme.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeData {
    pub labels: Vec<String>,
    pub n: usize,
    pub valencies: Vec<i64>,
    /// `p[i][j][k]`.
    pub p: Vec<Vec<Vec<i64>>>,
}

/// A product `A_i A_j` that is not constant on relation `k`.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct SchemeFailure {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub first: (usize, usize, usize),
    pub second: (usize, usize, usize),
}

impl fmt::Display for SchemeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(A_{}A_{}) is not constant on R_{}: entry ({},{}) = {} but ({},{}) = {}",
            self.i, self.j, self.k, self.first.0, self.first.1, self.first.2, self.second.0, self.second.1, self.second.2
        )
    }
}

/// Checks that every product `A_i A_j` is constant on each relation.
pub fn verify_scheme(rels: &RelationFamily) -> Result<SchemeData, SchemeFailure> {
    let d = rels.num_relations();
    let n = rels.size();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let results: Vec<Result<Vec<i64>, SchemeFailure>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut seen: Vec<Option<(usize, usize, usize)>> = vec![None; d];
            for x in 0..n {
                let rx = rels.row(i, x);
                for y in 0..n {
                    let v = rx.intersection_count(rels.row(j, y));
                    let k = rels.relation(x, y);
                    match seen[k] {
                        None => seen[k] = Some((x, y, v)),
                        Some(first) if first.2 != v => {
                            return Err(SchemeFailure {
                                i,
                                j,
                                k,
                                first,
                                second: (x, y, v),
                            })
                        }
                        _ => {}
                    }
                }
            }
            Ok(seen.into_iter().map(|s| s.map_or(0, |t| t.2 as i64)).collect())
        })
        .collect();
    let mut p = vec![vec![vec![0i64; d]; d]; d];
    for (&(i, j), r) in pairs.iter().zip(results) {
        let row = r?;
        p[i][j] = row.clone();
        p[j][i] = row;
    }
    let valencies = (0..d).map(|i| p[i][i][0]).collect();
    Ok(SchemeData {
        labels: rels.labels.clone(),
        n,
        valencies,
        p,
    })
}

/// Exact eigenvalue matrix: `p_matrix[m][i]` is the eigenvalue of `A_i` on
/// the `m`-th common eigenspace.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct EigenData {
    pub labels: Vec<String>,
    pub p_matrix: Vec<Vec<i64>>,
    pub multiplicities: Vec<u64>,
}

fn rat(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Sorts rows with the valency row first and the rest lexicographically,
/// carrying multiplicities along.
pub fn canonical_rows(rows: &[Vec<i64>], mults: Option<&[u64]>) -> (Vec<Vec<i64>>, Option<Vec<u64>>) {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    let val = rows
        .iter()
        .enumerate()
        .max_by_key(|(_, r)| r.iter().sum::<i64>())
        .map(|(i, _)| i);
    idx.sort_by(|&a, &b| {
        (Some(a) != val, &rows[a], mults.map(|m| m[a])).cmp(&(Some(b) != val, &rows[b], mults.map(|m| m[b])))
    });
    (
        idx.iter().map(|&i| rows[i].clone()).collect(),
        mults.map(|m| idx.iter().map(|&i| m[i]).collect()),
    )
}

/// Common eigenvectors of the intersection matrices `L_i[j][k] = p_ij^k`:
/// row `m` of the eigenvalue matrix is the eigenvector of every `L_i`,
/// normalized to first entry 1.
pub fn eigenvalue_matrix(scheme: &SchemeData) -> Result<EigenData, SpectralError> {
    let d = scheme.labels.len();
    let l = |i: usize| -> Vec<Vec<i64>> { (0..d).map(|j| scheme.p[i][j].clone()).collect() };
    let mats: Vec<Vec<Vec<i64>>> = (0..d).map(l).collect();
    let mut rows: Option<Vec<Vec<i64>>> = None;
    let mut leftover = 0;
    for t in 2i64..40 {
        let mut b = vec![vec![0i64; d]; d];
        let mut c = 1i64;
        for m in mats.iter().skip(1) {
            c = c.saturating_mul(t);
            for j in 0..d {
                for k in 0..d {
                    b[j][k] += c * m[j][k];
                }
            }
        }
        let spec = match exact::integer_spectrum(&b) {
            Ok(s) => s,
            Err(left) => {
                leftover = left;
                continue;
            }
        };
        if spec.len() != d {
            continue;
        }
        let mut found = Vec::with_capacity(d);
        for &(beta, _) in &spec {
            let m: Vec<Vec<BigRational>> = (0..d)
                .map(|j| (0..d).map(|k| rat(b[j][k] - if j == k { beta } else { 0 })).collect())
                .collect();
            let ns = exact::null_space(&m);
            let v = &ns[0];
            if v[0].is_zero() {
                return Err(SpectralError::Degenerate("eigenvector with zero identity entry".into()));
            }
            let row: Option<Vec<i64>> = v
                .iter()
                .map(|x| {
                    let y = x / &v[0];
                    y.is_integer().then(|| y.to_integer().to_i64()).flatten()
                })
                .collect();
            let row = row.ok_or(SpectralError::NonIntegerEigenvalue { leftover: 0 })?;
            for (i, m) in mats.iter().enumerate() {
                for j in 0..d {
                    let lhs: i64 = (0..d).map(|k| m[j][k] * row[k]).sum();
                    if lhs != row[i] * row[j] {
                        return Err(SpectralError::Degenerate(format!("row {row:?} is not an eigenvector of L_{i}")));
                    }
                }
            }
            found.push(row);
        }
        rows = Some(found);
        break;
    }
    let rows = match rows {
        Some(r) => r,
        None if leftover > 0 => return Err(SpectralError::NonIntegerEigenvalue { leftover }),
        None => return Err(SpectralError::Degenerate("no separating combination found".into())),
    };
    let n = BigInt::from(scheme.n);
    let mut mults = Vec::with_capacity(d);
    for row in &rows {
        let mut s = BigRational::zero();
        for (i, &v) in row.iter().enumerate() {
            s += rat(v * v) / rat(scheme.valencies[i]);
        }
        let m = BigRational::from_integer(n.clone()) / s;
        if !m.is_integer() || m <= BigRational::zero() {
            return Err(SpectralError::Degenerate(format!("multiplicity {m} is not a positive integer")));
        }
        mults.push(m.to_integer().to_u64().unwrap());
    }
    if mults.iter().sum::<u64>() != scheme.n as u64 {
        return Err(SpectralError::Degenerate("multiplicities do not sum to the vertex count".into()));
    }
    // Orthogonality: Σ_i P_ji P_li / k_i = δ_jl · n / m_j.
    for a in 0..d {
        for b in 0..d {
            let mut s = BigRational::zero();
            for i in 0..d {
                s += rat(rows[a][i] * rows[b][i]) / rat(scheme.valencies[i]);
            }
            let want = if a == b {
                BigRational::from_integer(n.clone()) / rat(mults[a] as i64)
            } else {
                BigRational::zero()
            };
            if s != want {
                return Err(SpectralError::Degenerate(format!("rows {a} and {b} fail orthogonality")));
            }
        }
    }
    let (p_matrix, m) = canonical_rows(&rows, Some(&mults));
    Ok(EigenData {
        labels: scheme.labels.clone(),
        p_matrix,
        multiplicities: m.unwrap(),
    })
}

impl EigenData {
    /// Eigenvalues of the union of the given relations, one per eigenspace.
    pub fn combined_eigenvalues(&self, relations: &[usize]) -> Vec<i64> {
        self.p_matrix
            .iter()
            .map(|row| relations.iter().map(|&i| row[i]).sum())
            .collect()
    }
}

/// `Σ_i λ_i m_i` and `Σ_i λ_i² m_i`, for trace checks.
pub fn spectral_moments(spectrum: &[(i64, usize)]) -> (i128, i128) {
    spectrum.iter().fold((0, 0), |(a, b), &(l, m)| {
        let l = l as i128;
        (a + l * m as i128, b + l * l * m as i128)
    })
}
