//! The graphs `G_i` (circles meeting in exactly `i` points), the bipartite
//! disjointness graph at a point and the matrix of its common neighbours.

use fixedbitset::FixedBitSet;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use super::{exact, SpectralError};
use crate::circle_geometry::{minkowski_sharply3, CircleGeometry};
use crate::finite_field::make_field;

/// A simple graph stored as adjacency bitsets.
#[derive(Debug, Clone)]
pub struct Graph {
    pub adj: Vec<FixedBitSet>,
}

impl Graph {
    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    pub fn degree_set(&self) -> BTreeSet<usize> {
        (0..self.order()).map(|v| self.degree(v)).collect()
    }

    pub fn regular_degree(&self) -> Option<usize> {
        let s = self.degree_set();
        (s.len() == 1).then(|| *s.first().unwrap())
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.order();
        let mut seen = FixedBitSet::with_capacity(n);
        let mut out = Vec::new();
        for s in 0..n {
            if seen.contains(s) {
                continue;
            }
            seen.insert(s);
            let mut comp = vec![s as u32];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i] as usize;
                for w in self.adj[v].ones() {
                    if !seen.contains(w) {
                        seen.insert(w);
                        comp.push(w as u32);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn adjacency_matrix(&self) -> Vec<Vec<i64>> {
        (0..self.order())
            .map(|a| (0..self.order()).map(|b| i64::from(self.adjacent(a, b))).collect())
            .collect()
    }

    /// Exact spectrum; fails if some eigenvalue is not an integer.
    pub fn integer_spectrum(&self) -> Result<Vec<(i64, usize)>, SpectralError> {
        exact::integer_spectrum(&self.adjacency_matrix())
            .map_err(|leftover| SpectralError::NonIntegerEigenvalue { leftover })
    }
}

/// `G_i`: circles adjacent iff they meet in exactly `i` points.
pub fn circle_graph(geom: &CircleGeometry, i: usize) -> Graph {
    let b = geom.num_circles();
    let adj = (0..b)
        .map(|x| {
            let mut row = FixedBitSet::with_capacity(b);
            for y in 0..b {
                if x != y && geom.meet(x, y) == i {
                    row.insert(y);
                }
            }
            row
        })
        .collect();
    Graph { adj }
}

#[derive(Debug, Clone, Serialize)]
pub struct GiReport {
    pub i: usize,
    pub degrees: Vec<usize>,
    pub regular: Option<usize>,
    /// Only checked for `i = 1`: degree `q² − 1` (0 in the extended plane).
    pub expected_degree: Option<usize>,
    pub component_sizes: Vec<usize>,
    /// Whether each component is constant on square type, if types exist.
    pub components_split_by_type: Option<bool>,
    #[serde(skip)]
    pub components: Vec<Vec<u32>>,
    #[serde(skip)]
    pub graph: Option<Graph>,
}

impl GiReport {
    pub fn passed(&self) -> bool {
        self.expected_degree.is_none_or(|d| self.regular == Some(d))
    }
}

pub fn graph_gi(geom: &CircleGeometry, i: usize) -> GiReport {
    let g = circle_graph(geom, i);
    let comps = g.components();
    let q = geom.q as usize;
    let expected_degree = (i == 1).then(|| if geom.extended { 0 } else { q * q - 1 });
    let split = geom.square_type.as_ref().map(|t| {
        comps
            .iter()
            .all(|c| c.iter().all(|&v| t[v as usize] == t[c[0] as usize]))
    });
    GiReport {
        i,
        degrees: g.degree_set().into_iter().collect(),
        regular: g.regular_degree(),
        expected_degree,
        component_sizes: comps.iter().map(Vec::len).collect(),
        components_split_by_type: split,
        components: comps,
        graph: Some(g),
    }
}

/// Common-neighbour counts in `G₁` over all pairs of a vertex set, grouped by
/// how the pair meets.
#[derive(Debug, Clone, Serialize)]
pub struct DezaReport {
    pub vertices: usize,
    /// Intersection size of the pair → observed common-neighbour counts.
    pub by_meet: BTreeMap<usize, BTreeSet<usize>>,
    pub expected: BTreeMap<usize, usize>,
    pub passed: bool,
}

pub fn deza_check(geom: &CircleGeometry, g1: &Graph, component: &[u32]) -> DezaReport {
    let q = geom.q as usize;
    let mut by_meet: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (ai, &a) in component.iter().enumerate() {
        for &b in &component[ai + 1..] {
            let (a, b) = (a as usize, b as usize);
            let common = g1.adj[a].intersection_count(&g1.adj[b]);
            by_meet.entry(geom.meet(a, b)).or_default().insert(common);
        }
    }
    let expected: BTreeMap<usize, usize> = [(0, 2 * (q + 1)), (1, 2 * (q - 1)), (2, 2 * (q - 1))].into();
    let passed = by_meet
        .iter()
        .all(|(m, vals)| expected.get(m).is_some_and(|&e| vals.len() == 1 && vals.contains(&e)));
    DezaReport {
        vertices: component.len(),
        by_meet,
        expected,
        passed,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoReport {
    pub q: u32,
    pub k: u32,
    /// The bijection as a list: circle `i` of the untwisted plane maps to `map[i]`.
    #[serde(skip)]
    pub map: Vec<u32>,
    pub pairs_checked: usize,
    pub degree_untwisted: Option<usize>,
    pub degree_twisted: Option<usize>,
    pub witness: Option<(u32, u32)>,
    pub passed: bool,
}

/// Checks that matching circles by group element carries `G₁` of the
/// untwisted plane onto `G₁` of the plane twisted by `x ↦ x^(p^k)`.
pub fn g1_isomorphism_check(q: u32, k: u32) -> Result<IsoReport, SpectralError> {
    let field = make_field(q as u64).map_err(|e| SpectralError::Other(e.to_string()))?;
    let a = minkowski_sharply3(&field, 0).map_err(|e| SpectralError::Other(e.to_string()))?;
    let b = minkowski_sharply3(&field, k).map_err(|e| SpectralError::Other(e.to_string()))?;
    let ga = a.group_elements.as_ref().unwrap();
    let gb = b.group_elements.as_ref().unwrap();
    let mut pos_b = vec![0u32; gb.len()];
    for (i, &g) in gb.iter().enumerate() {
        pos_b[g as usize] = i as u32;
    }
    let map: Vec<u32> = ga.iter().map(|&g| pos_b[g as usize]).collect();
    let g1a = circle_graph(&a, 1);
    let g1b = circle_graph(&b, 1);
    let n = a.num_circles();
    let mut witness = None;
    'outer: for x in 0..n {
        for y in 0..n {
            if g1a.adjacent(x, y) != g1b.adjacent(map[x] as usize, map[y] as usize) {
                witness = Some((x as u32, y as u32));
                break 'outer;
            }
        }
    }
    Ok(IsoReport {
        q,
        k,
        pairs_checked: if witness.is_some() { 0 } else { n * n },
        degree_untwisted: g1a.regular_degree(),
        degree_twisted: g1b.regular_degree(),
        passed: witness.is_none() && g1a.regular_degree() == g1b.regular_degree(),
        witness,
        map,
    })
}

/// A claimed eigenvector family of `N` and whether it checked out.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyCheck {
    pub name: String,
    pub eigenvalue: i64,
    pub vectors: usize,
    pub passed: bool,
}

/// The bipartite disjointness graph at a point and its common-neighbour matrix.
#[derive(Debug, Clone, Serialize)]
pub struct GPProfile {
    pub base: u32,
    /// Circles through the base point, in block order.
    pub l: Vec<u32>,
    pub r: Vec<u32>,
    /// Blocks of `l` as position ranges: circles pairwise tangent at the base.
    pub blocks: Vec<Vec<u32>>,
    pub delta: usize,
    pub r_degree: usize,
    pub degrees_ok: bool,
    #[serde(skip)]
    pub adjacency: Vec<FixedBitSet>,
    #[serde(skip)]
    pub n_matrix: Vec<Vec<i64>>,
    pub spectrum: Vec<(i64, usize)>,
    pub lambda2_squared: i64,
    pub expected_lambda2_squared: Option<i64>,
    pub trace_ok: bool,
    pub families: Vec<FamilyCheck>,
}

impl GPProfile {
    pub fn passed(&self) -> bool {
        self.degrees_ok
            && self.trace_ok
            && self.expected_lambda2_squared.is_none_or(|e| e == self.lambda2_squared)
            && self.families.iter().all(|f| f.passed)
    }
}

/// Which structure the circles through a point have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GpCase {
    /// Three-class scheme: even Möbius or Minkowski, odd Laguerre.
    ThreeClass,
    Extended,
    /// Odd Möbius or Minkowski with square types.
    OddTyped,
    Unknown,
}

fn gp_case(geom: &CircleGeometry) -> GpCase {
    let odd = geom.q % 2 == 1;
    if geom.extended {
        GpCase::Extended
    } else if odd && geom.rho != 1 && geom.square_type.is_some() {
        GpCase::OddTyped
    } else if (!odd && geom.rho != 1) || (odd && geom.rho == 1) {
        GpCase::ThreeClass
    } else {
        GpCase::Unknown
    }
}

/// Groups the circles through `p` into classes of mutually tangent circles.
fn tangency_blocks(geom: &CircleGeometry, pencil: &[u32]) -> Vec<Vec<u32>> {
    let mut parent: Vec<usize> = (0..pencil.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let nx = parent[x];
            parent[x] = r;
            x = nx;
        }
        r
    }
    for a in 0..pencil.len() {
        for b in a + 1..pencil.len() {
            if geom.meet(pencil[a] as usize, pencil[b] as usize) == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for a in 0..pencil.len() {
        let r = find(&mut parent, a);
        groups.entry(r).or_default().push(pencil[a]);
    }
    groups.into_values().collect()
}

fn mat_vec(n: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    n.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn check_family(name: &str, n: &[Vec<i64>], eigenvalue: i64, vectors: &[Vec<i64>]) -> FamilyCheck {
    let passed = vectors.iter().all(|v| {
            mat_vec(n, v)
                .iter()
                .zip(v)
                .all(|(nv, x)| *nv == eigenvalue * x)
        });
    FamilyCheck {
        name: name.into(),
        eigenvalue,
        vectors: vectors.len(),
        passed,
    }
}

/// Indicator of a set of positions, minus the indicator of another.
fn diff_vector(len: usize, plus: &[usize], minus: &[usize]) -> Vec<i64> {
    let mut v = vec![0i64; len];
    for &i in plus {
        v[i] += 1;
    }
    for &i in minus {
        v[i] -= 1;
    }
    v
}

pub fn gp_profile(geom: &CircleGeometry, p: usize) -> Result<GPProfile, SpectralError> {
    if p >= geom.num_points() {
        return Err(SpectralError::BadPoint(p));
    }
    let (q, rho) = (geom.q as i64, geom.rho as i64);
    let case = gp_case(geom);
    let pencil = geom.circles_through(p).to_vec();
    let mut blocks = if case == GpCase::Extended {
        vec![pencil.clone()]
    } else {
        tangency_blocks(geom, &pencil)
    };
    if case == GpCase::OddTyped {
        let t = geom.square_type.as_ref().unwrap();
        blocks.sort_by_key(|b| (!t[b[0] as usize], b[0]));
    }
    let l: Vec<u32> = blocks.iter().flatten().copied().collect();
    let on_p: FixedBitSet = pencil.iter().map(|&c| c as usize).collect();
    let r: Vec<u32> = (0..geom.num_circles() as u32)
        .filter(|&c| !on_p.contains(c as usize))
        .collect();
    let adjacency: Vec<FixedBitSet> = l
        .iter()
        .map(|&c| {
            let mut row = FixedBitSet::with_capacity(r.len());
            for (j, &d) in r.iter().enumerate() {
                if geom.meet(c as usize, d as usize) == 0 {
                    row.insert(j);
                }
            }
            row
        })
        .collect();
    let delta = ((q + rho - 2) * q * (q - 1) / 2) as usize;
    let r_degree = ((q + rho - 2) * (q + 1 - rho) / 2) as usize;
    let l_ok = adjacency.iter().all(|row| row.count_ones(..) == delta);
    let r_ok = (0..r.len()).all(|j| adjacency.iter().filter(|row| row.contains(j)).count() == r_degree);
    let n_matrix: Vec<Vec<i64>> = adjacency
        .iter()
        .map(|a| adjacency.iter().map(|b| a.intersection_count(b) as i64).collect())
        .collect();
    let spectrum =
        exact::integer_spectrum(&n_matrix).map_err(|leftover| SpectralError::NonIntegerEigenvalue { leftover })?;
    let (s1, s2) = super::spectral_moments(&spectrum);
    let trace: i128 = (0..l.len()).map(|i| n_matrix[i][i] as i128).sum();
    let trace_sq: i128 = n_matrix.iter().flatten().map(|&x| (x as i128) * (x as i128)).sum();
    let trace_ok = s1 == trace && s2 == trace_sq && spectrum.iter().map(|s| s.1).sum::<usize>() == l.len();
    let mut desc: Vec<i64> = spectrum.iter().rev().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect();
    desc.truncate(2);
    let lambda2_squared = desc.get(1).copied().unwrap_or(0);

    let len = l.len();
    let (d, rd) = (delta as i64, r_degree as i64);
    let ones = vec![1i64; len];
    let mut families = vec![check_family("all-ones", &n_matrix, d * rd, &[ones])];
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, b| {
            let s = *acc;
            *acc += b.len();
            Some(s)
        })
        .collect();
    let block_pos = |b: usize| -> Vec<usize> { (offsets[b]..offsets[b] + blocks[b].len()).collect() };
    let within_block: Vec<Vec<i64>> = (0..blocks.len())
        .flat_map(|b| {
            let o = offsets[b];
            (1..blocks[b].len()).map(move |t| diff_vector(len, &[o], &[o + t]))
        })
        .collect();
    let expected_lambda2_squared = match case {
        GpCase::ThreeClass => {
            let p133 = q * (q - 2 + rho) * (q - 4 + rho) / 4;
            families.push(check_family("block difference within a tangency class", &n_matrix, d - p133, &within_block));
            let across: Vec<Vec<i64>> = (1..blocks.len())
                .map(|b| diff_vector(len, &block_pos(0), &block_pos(b)))
                .collect();
            families.push(check_family("difference of tangency classes", &n_matrix, 0, &across));
            Some(q * (q + 2 - rho) * (q - 2 + rho) / 4)
        }
        GpCase::Extended => {
            let c = (q - 2) * (q - 1) * q / 4;
            let constant = n_matrix
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == if i == j { d } else { c }));
            families.push(FamilyCheck {
                name: "constant off-diagonal".into(),
                eigenvalue: c,
                vectors: 0,
                passed: constant,
            });
            let diffs: Vec<Vec<i64>> = (1..len).map(|t| diff_vector(len, &[0], &[t])).collect();
            families.push(check_family("differences", &n_matrix, d - c, &diffs));
            Some(q * q * (q - 1) / 4)
        }
        GpCase::OddTyped => {
            let t = geom.square_type.as_ref().unwrap();
            let uniform = blocks.iter().all(|b| b.iter().all(|&c| t[c as usize] == t[b[0] as usize]));
            let half = blocks.len() / 2;
            let types_ok = uniform && (0..blocks.len()).all(|b| t[blocks[b][0] as usize] == (b < half));
            families.push(FamilyCheck {
                name: "blocks split evenly by square type".into(),
                eigenvalue: 0,
                vectors: 0,
                passed: types_ok,
            });
            let m1 = q * (q - 3 + rho) * (q - 3 + rho) / 4;
            let m2 = (q - 1) * (q * q + 2 * (rho - 2) * (q - 1) + 1) / 4;
            let m3 = (q - 1) * (q - 1) * (q - 3 + 2 * rho) / 4;
            families.push(check_family("block difference within a tangency class", &n_matrix, d - m1, &within_block));
            let same_type: Vec<Vec<i64>> = (0..2)
                .flat_map(|side| {
                    let first = side * half;
                    (first + 1..first + half).map(move |b| (first, b))
                })
                .map(|(a, b)| diff_vector(len, &block_pos(a), &block_pos(b)))
                .collect();
            families.push(check_family("difference of same-type classes", &n_matrix, 0, &same_type));
            let sq: Vec<usize> = (0..half).flat_map(block_pos).collect();
            let ns: Vec<usize> = (half..blocks.len()).flat_map(block_pos).collect();
            let lam = d + (q - 1) * m1 + q * (q - 1 - rho) / 2 * m2 - q * (q + 1 - rho) / 2 * m3;
            families.push(check_family("square minus non-square", &n_matrix, lam, &[diff_vector(len, &sq, &ns)]));
            Some(q * (q * q - 1) / 4)
        }
        GpCase::Unknown => None,
    };
    Ok(GPProfile {
        base: p as u32,
        l,
        r,
        blocks,
        delta,
        r_degree,
        degrees_ok: l_ok && r_ok,
        adjacency,
        n_matrix,
        spectrum,
        lambda2_squared,
        expected_lambda2_squared,
        trace_ok,
        families,
    })
}

/// Type of a pair of circles through a common point, for the resolved
/// common-neighbour values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairType {
    Tangent,
    SecantSameType,
    SecantDifferentType,
}

#[derive(Debug, Clone, Serialize)]
pub struct N00Report {
    pub c1: u32,
    pub c2: u32,
    pub s: usize,
    pub n00: i64,
    pub n11: i64,
    pub formula_ok: bool,
    pub pair_type: Option<PairType>,
    pub resolved_expected: Option<i64>,
    pub passed: bool,
}

/// Counts circles missing `p` that miss both `c1` and `c2` (`n00`) or touch
/// both in exactly one point (`n11`) and checks
/// `4·n00 = (q−s+1)(q−3+ρ+s)(q−5+ρ+s) + n11`.
pub fn n00_profile(geom: &CircleGeometry, p: usize, c1: usize, c2: usize) -> Result<N00Report, SpectralError> {
    if p >= geom.num_points() {
        return Err(SpectralError::BadPoint(p));
    }
    for c in [c1, c2] {
        if c >= geom.num_circles() || !geom.contains(c, p) {
            return Err(SpectralError::BadCircle(c));
        }
    }
    if c1 == c2 {
        return Err(SpectralError::BadCircle(c2));
    }
    let (q, rho) = (geom.q as i64, geom.rho as i64);
    let s = geom.meet(c1, c2);
    let (mut n00, mut n11) = (0i64, 0i64);
    for d in 0..geom.num_circles() {
        if geom.contains(d, p) {
            continue;
        }
        match (geom.meet(d, c1), geom.meet(d, c2)) {
            (0, 0) => n00 += 1,
            (1, 1) => n11 += 1,
            _ => {}
        }
    }
    let si = s as i64;
    let formula_ok = 4 * n00 == (q - si + 1) * (q - 3 + rho + si) * (q - 5 + rho + si) + n11;
    let typed = gp_case(geom) == GpCase::OddTyped;
    let pair_type = typed.then(|| {
        let t = geom.square_type.as_ref().unwrap();
        match (s, t[c1] == t[c2]) {
            (1, _) => PairType::Tangent,
            (_, true) => PairType::SecantSameType,
            (_, false) => PairType::SecantDifferentType,
        }
    });
    let resolved_expected = pair_type.map(|pt| match pt {
        PairType::Tangent => q * (q - 3 + rho) * (q - 3 + rho) / 4,
        PairType::SecantSameType => (q - 1) * (q * q + 2 * (rho - 2) * (q - 1) + 1) / 4,
        PairType::SecantDifferentType => (q - 1) * (q - 1) * (q - 3 + 2 * rho) / 4,
    });
    Ok(N00Report {
        c1: c1 as u32,
        c2: c2 as u32,
        s,
        n00,
        n11,
        formula_ok,
        pair_type,
        resolved_expected,
        passed: formula_ok && resolved_expected.is_none_or(|e| e == n00),
    })
}

/// `n00_profile` over every pair of circles through `p`.
pub fn n00_all_pairs(geom: &CircleGeometry, p: usize) -> Result<Vec<N00Report>, SpectralError> {
    let pencil = geom.pencil(p).map_err(|_| SpectralError::BadPoint(p))?;
    let mut out = Vec::new();
    for (i, &a) in pencil.iter().enumerate() {
        for &b in &pencil[i + 1..] {
            out.push(n00_profile(geom, p, a as usize, b as usize)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareSplitReport {
    pub circles_per_point: usize,
    /// Distinct counts of square-type circles through a point.
    pub square_counts: Vec<usize>,
    pub passed: bool,
}

/// Checks that exactly half the circles through every point have square type.
pub fn square_split_check(geom: &CircleGeometry) -> Result<SquareSplitReport, SpectralError> {
    let t = geom.square_type.as_ref().ok_or(SpectralError::MissingSquareType)?;
    let counts: BTreeSet<usize> = (0..geom.num_points())
        .map(|p| geom.circles_through(p).iter().filter(|&&c| t[c as usize]).count())
        .collect();
    let per_point = geom.circles_through(0).len();
    Ok(SquareSplitReport {
        circles_per_point: per_point,
        passed: counts.len() == 1 && counts.first().map(|c| 2 * c) == Some(per_point),
        square_counts: counts.into_iter().collect(),
    })
}
