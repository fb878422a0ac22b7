//! Intersecting families of circles: exact bound evaluators, ratio bounds from
//! eigenvalue matrices, exhaustive maximum-family search and classification.

use fixedbitset::FixedBitSet;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use thiserror::Error;

use crate::circle_geometry::CircleGeometry;
use crate::spectral::{circle_graph, EigenData};

pub type Rational = Ratio<i128>;

/// An exact rational, serialized as `[numerator, denominator]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [*self.0.numer(), *self.0.denom()].serialize(s)
    }
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EkrError {
    #[error("circles {0} and {1} are disjoint")]
    NotIntersecting(u32, u32),
    #[error("empty family")]
    Empty,
    #[error("circle id {0} out of range")]
    BadCircle(u32),
    #[error("{circles} circles exceed the search limit of {limit}")]
    TooLarge { circles: usize, limit: usize },
    #[error("search budget of {nodes} nodes exhausted; best size {}, upper bound {upper_bound}", best.len())]
    BudgetExceeded {
        best: Vec<u32>,
        upper_bound: usize,
        nodes: u64,
    },
    #[error("{0}")]
    Unsupported(String),
}

/// The first disjoint pair, if any.
pub fn disjoint_pair(geom: &CircleGeometry, circles: &[u32]) -> Option<(u32, u32)> {
    for (i, &a) in circles.iter().enumerate() {
        for &b in &circles[i + 1..] {
            if geom.meet(a as usize, b as usize) == 0 {
                return Some((a, b));
            }
        }
    }
    None
}

pub fn is_intersecting(geom: &CircleGeometry, circles: &[u32]) -> (bool, Option<(u32, u32)>) {
    let w = disjoint_pair(geom, circles);
    (w.is_none(), w)
}

/// A set of pairwise meeting circles, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectingFamily {
    pub circles: Vec<u32>,
}

impl IntersectingFamily {
    pub fn new(geom: &CircleGeometry, circles: &[u32]) -> Result<IntersectingFamily, EkrError> {
        if let Some(&c) = circles.iter().find(|&&c| c as usize >= geom.num_circles()) {
            return Err(EkrError::BadCircle(c));
        }
        let mut circles = circles.to_vec();
        circles.sort_unstable();
        circles.dedup();
        if let Some((a, b)) = disjoint_pair(geom, &circles) {
            return Err(EkrError::NotIntersecting(a, b));
        }
        Ok(IntersectingFamily { circles })
    }

    pub fn size(&self) -> usize {
        self.circles.len()
    }

    /// Number of family circles through each point.
    pub fn point_degrees(&self, geom: &CircleGeometry) -> Vec<usize> {
        let mut d = vec![0; geom.num_points()];
        for &c in &self.circles {
            for &p in &geom.circles[c as usize] {
                d[p as usize] += 1;
            }
        }
        d
    }
}

/// Pencil size `q² + (1−ρ)q` (or `q²` in the extended plane).
pub fn pencil_size(geom: &CircleGeometry) -> usize {
    geom.circles_through(0).len()
}

/// The case constant of the point bound: 0 for ρ=1 with q even; 1 for
/// ρ ∈ {0,2} with q even or ρ=1 with q odd; 2 for ρ ∈ {0,2} with q odd.
pub fn point_bound_constant(q: u32, rho: u8) -> u8 {
    match (rho, q % 2 == 1) {
        (1, false) => 0,
        (1, true) => 1,
        (_, false) => 1,
        (_, true) => 2,
    }
}

/// `C(q+2−ρ, 2)`: more family circles than this through a point force the
/// whole family through it.
pub fn hm_threshold(q: u32, rho: u8) -> usize {
    let n = (q + 2 - rho as u32) as usize;
    n * (n - 1) / 2
}

/// The stability threshold `q²/√2 + 2√2·q + 8`, compared exactly.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityCheck {
    pub f: usize,
    /// Whether `f ≥ q²/√2 + 2√2 q + 8`, decided as `f ≥ 8` and
    /// `2(f−8)² ≥ (q²+4q)²`.
    pub reached: bool,
    /// Smallest integer size reaching the threshold.
    pub smallest_forced_size: usize,
    pub pencil_size: usize,
    /// True when no family can be that large because pencils are maximum.
    pub vacuous: bool,
    pub approx: String,
}

pub fn stability_reached(q: u32, f: usize) -> bool {
    let (q, f) = (q as i128, f as i128);
    f >= 8 && 2 * (f - 8) * (f - 8) >= (q * q + 4 * q) * (q * q + 4 * q)
}

pub fn stability_check(q: u32, f: usize, pencil: usize) -> StabilityCheck {
    let smallest = (0..).find(|&s| stability_reached(q, s)).unwrap();
    let qf = q as f64;
    StabilityCheck {
        f,
        reached: stability_reached(q, f),
        smallest_forced_size: smallest,
        pencil_size: pencil,
        vacuous: smallest > pencil,
        approx: format!(
            "{:.2}",
            qf * qf / std::f64::consts::SQRT_2 + 2.0 * std::f64::consts::SQRT_2 * qf + 8.0
        ),
    }
}

/// Both sides of the mixing inequality at one point.
#[derive(Debug, Clone, Serialize)]
pub struct MixingEval {
    pub point: u32,
    pub s: usize,
    pub t: usize,
    pub lhs: i128,
    pub rhs: Exact,
    pub slack: Exact,
    pub holds: bool,
}

/// `λ` of the mixing inequality: `q(q²−1)` for odd `q`,
/// `q(q−2+ρ)(q+(1−ρ)(2−ρ))` for even `q`.
pub fn mixing_lambda(q: u32, rho: u8) -> i128 {
    let (q, rho) = (q as i128, rho as i128);
    if q % 2 == 1 {
        q * (q * q - 1)
    } else {
        q * (q - 2 + rho) * (q + (1 - rho) * (2 - rho))
    }
}

/// `|S||T| ≤ (q/(q+ρ−2))² λ (1 − |S|/(q(q+1−ρ))) (1 − |T|/(q²(q−1)))` with
/// `S` the family circles through `p` and `T` the rest.
pub fn mixing_gap_test(geom: &CircleGeometry, family: &IntersectingFamily, p: usize) -> Result<MixingEval, EkrError> {
    if geom.extended {
        return Err(EkrError::Unsupported("the mixing inequality is stated for non-extended planes".into()));
    }
    let (q, rho) = (geom.q as i128, geom.rho as i128);
    let s = family.circles.iter().filter(|&&c| geom.contains(c as usize, p)).count();
    let t = family.size() - s;
    let (si, ti) = (s as i128, t as i128);
    let lam = mixing_lambda(geom.q, geom.rho);
    let rhs = r(q * q, (q + rho - 2) * (q + rho - 2))
        * Rational::from_integer(lam)
        * (Rational::from_integer(1) - r(si, q * (q + 1 - rho)))
        * (Rational::from_integer(1) - r(ti, q * q * (q - 1)));
    let lhs = si * ti;
    let slack = rhs - Rational::from_integer(lhs);
    Ok(MixingEval {
        point: p as u32,
        s,
        t,
        lhs,
        rhs: Exact(rhs),
        slack: Exact(slack),
        holds: slack >= Rational::from_integer(0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub f: usize,
    /// Pairs of family circles meeting in exactly one point.
    pub e: usize,
    /// `(2f + k − 2 − 2E/f)/k` with `k` the circle size.
    pub counting_bound: Exact,
    pub a: Option<u8>,
    /// `(2 − a(q−1)/(q²+1−ρ)) f/(q+1)`.
    pub propmany_point_bound: Option<Exact>,
    pub best_point: u32,
    pub best_point_degree: usize,
    pub counting_bound_achieved: bool,
    pub propmany_achieved: Option<bool>,
    pub hm_threshold: usize,
    pub stability: StabilityCheck,
    pub mixing: Vec<MixingEval>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.counting_bound_achieved && self.propmany_achieved != Some(false) && self.mixing.iter().all(|m| m.holds)
    }
}

pub fn bounds_report(geom: &CircleGeometry, family: &IntersectingFamily) -> Result<BoundsReport, EkrError> {
    let f = family.size();
    if f == 0 {
        return Err(EkrError::Empty);
    }
    let (q, rho) = (geom.q as i128, geom.rho as i128);
    let mut e = 0;
    for (i, &a) in family.circles.iter().enumerate() {
        for &b in &family.circles[i + 1..] {
            if geom.meet(a as usize, b as usize) == 1 {
                e += 1;
            }
        }
    }
    let k = geom.circle_size() as i128;
    let fi = f as i128;
    let counting = r(2 * fi * fi + (k - 2) * fi - 2 * e as i128, fi * k);
    let degrees = family.point_degrees(geom);
    let (best_point, &best) = degrees
        .iter()
        .enumerate()
        .max_by_key(|&(i, d)| (*d, std::cmp::Reverse(i)))
        .unwrap();
    let best_r = Rational::from_integer(best as i128);
    let (a, prop) = if geom.extended {
        (None, None)
    } else {
        let a = point_bound_constant(geom.q, geom.rho);
        let factor = Rational::from_integer(2) - r(a as i128 * (q - 1), q * q + 1 - rho);
        (Some(a), Some(factor * r(fi, q + 1)))
    };
    let mixing = if geom.extended {
        Vec::new()
    } else {
        (0..geom.num_points())
            .map(|p| mixing_gap_test(geom, family, p))
            .collect::<Result<_, _>>()?
    };
    Ok(BoundsReport {
        f,
        e,
        counting_bound: Exact(counting),
        a,
        propmany_point_bound: prop.map(Exact),
        best_point: best_point as u32,
        best_point_degree: best,
        counting_bound_achieved: best_r >= counting,
        propmany_achieved: prop.map(|b| best_r >= b),
        hm_threshold: hm_threshold(geom.q, if geom.extended { 1 } else { geom.rho }),
        stability: stability_check(geom.q, f, pencil_size(geom)),
        mixing,
    })
}

/// The ratio bound `n(−λ_min)/(k − λ_min)` for the union of the given relations.
#[derive(Debug, Clone, Serialize)]
pub struct RatioBound {
    pub n: usize,
    pub k: i64,
    pub lambda_min: i64,
    pub bound: Exact,
    pub pencil_size: Option<usize>,
    pub tight: Option<bool>,
}

pub fn ratio_bound(eigen: &EigenData, n: usize, relations: &[usize], pencil: Option<usize>) -> RatioBound {
    let vals = eigen.combined_eigenvalues(relations);
    let k = vals[0];
    let lambda_min = *vals.iter().min().unwrap();
    ratio_bound_from(n, k, lambda_min, pencil)
}

pub fn ratio_bound_from(n: usize, k: i64, lambda_min: i64, pencil: Option<usize>) -> RatioBound {
    let bound = r(n as i128 * -(lambda_min as i128), (k - lambda_min) as i128);
    RatioBound {
        n,
        k,
        lambda_min,
        bound: Exact(bound),
        pencil_size: pencil,
        tight: pencil.map(|p| bound == Rational::from_integer(p as i128)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyClass {
    Pencil(u32),
    NucleusPencil(u32),
    TwoPointMobius3,
    Other,
}

pub fn classify_family(geom: &CircleGeometry, family: &[u32]) -> FamilyClass {
    if family.is_empty() {
        return FamilyClass::Other;
    }
    let mut common = geom.circle_bits(family[0] as usize).clone();
    for &c in &family[1..] {
        common.intersect_with(geom.circle_bits(c as usize));
    }
    if let Some(p) = common.ones().next() {
        let p = p as u32;
        return if geom.nucleus_points.contains(&p) {
            FamilyClass::NucleusPencil(p)
        } else {
            FamilyClass::Pencil(p)
        };
    }
    if geom.rho == 0 && geom.q == 3 && family.len() == 15 {
        if let Some(t) = &geom.square_type {
            let t0 = t[family[0] as usize];
            if family.iter().all(|&c| t[c as usize] == t0) {
                return FamilyClass::TwoPointMobius3;
            }
        }
    }
    FamilyClass::Other
}

/// `{B' : p ∈ B', B' ∩ B ≠ ∅} ∪ {B}` for a circle `B` missing `p`.
pub fn hilton_milner_family(geom: &CircleGeometry, p: usize, b: usize) -> Result<IntersectingFamily, EkrError> {
    if geom.contains(b, p) {
        return Err(EkrError::Unsupported(format!("circle {b} passes through point {p}")));
    }
    let mut circles: Vec<u32> = geom
        .circles_through(p)
        .iter()
        .copied()
        .filter(|&c| geom.meet(c as usize, b) > 0)
        .collect();
    circles.push(b as u32);
    IntersectingFamily::new(geom, &circles)
}

/// Points carrying more than the absorption threshold of family circles
/// without containing the whole family.
pub fn absorption_violations(geom: &CircleGeometry, family: &IntersectingFamily) -> Vec<u32> {
    let th = hm_threshold(geom.q, if geom.extended { 1 } else { geom.rho });
    family
        .point_degrees(geom)
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d > th && d < family.size())
        .map(|(p, _)| p as u32)
        .collect()
}

/// Limits for the exhaustive search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchBudget {
    pub max_circles: usize,
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_circles: 130,
            max_nodes: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub maximum: usize,
    /// All maximum families as sorted circle lists, in lexicographic order.
    pub families: Vec<Vec<u32>>,
    pub nodes: u64,
}

/// Word-packed bitset used inside the clique search.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .position(|&w| w != 0)
            .map(|i| i * 64 + self.0[i].trailing_zeros() as usize)
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

struct Search<'a> {
    adj: &'a [Bits],
    n: usize,
    nodes: &'a AtomicU64,
    abort: &'a AtomicBool,
    max_nodes: u64,
}

impl Search<'_> {
    /// Greedy colouring of `p` in vertex order; returns vertices with
    /// nondecreasing colour numbers.
    fn colour(&self, p: &Bits) -> Vec<(usize, usize)> {
        let mut uncoloured = p.clone();
        let mut out = Vec::new();
        let mut colour = 0;
        while !uncoloured.is_empty() {
            colour += 1;
            let mut avail = uncoloured.clone();
            while let Some(v) = avail.first() {
                avail.clear(v);
                uncoloured.clear(v);
                for (w, a) in avail.0.iter_mut().zip(&self.adj[v].0) {
                    *w &= !a;
                }
                out.push((v, colour));
            }
        }
        out
    }

    fn tick(&self) -> bool {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.max_nodes {
            self.abort.store(true, Ordering::Relaxed);
        }
        self.abort.load(Ordering::Relaxed)
    }

    /// Finds a largest clique; `best` is the shared incumbent size.
    fn maximum(&self, r: &mut Vec<usize>, p: Bits, best: &AtomicUsize, best_set: &std::sync::Mutex<Vec<usize>>, stop_at: usize) {
        if self.tick() {
            return;
        }
        let mut p = p;
        let order = self.colour(&p);
        for &(v, c) in order.iter().rev() {
            let cur = best.load(Ordering::Relaxed);
            if r.len() + c <= cur || cur >= stop_at {
                return;
            }
            r.push(v);
            let np = p.and(&self.adj[v]);
            if np.is_empty() {
                let mut bs = best_set.lock().unwrap();
                if r.len() > bs.len() {
                    *bs = r.clone();
                    best.fetch_max(r.len(), Ordering::Relaxed);
                    log::debug!("incumbent {}", r.len());
                }
            } else {
                self.maximum(r, np, best, best_set, stop_at);
            }
            r.pop();
            p.clear(v);
            if self.abort.load(Ordering::Relaxed) {
                return;
            }
        }
    }

    /// Collects every clique of size `target` extending `r` within `p`.
    fn enumerate(&self, r: &mut Vec<usize>, p: Bits, target: usize, out: &mut Vec<Vec<usize>>) {
        if self.tick() {
            return;
        }
        let mut p = p;
        let order = self.colour(&p);
        for &(v, c) in order.iter().rev() {
            if r.len() + c < target {
                return;
            }
            r.push(v);
            let np = p.and(&self.adj[v]);
            if r.len() == target {
                out.push(r.clone());
            } else if !np.is_empty() {
                self.enumerate(r, np, target, out);
            }
            r.pop();
            p.clear(v);
        }
    }
}

/// Exhaustive search for all largest intersecting families (maximum cliques of
/// the graph "circles meet"). `upper_bound` may carry a ratio bound that stops
/// the first phase as soon as it is attained.
pub fn max_families_exact(
    geom: &CircleGeometry,
    budget: SearchBudget,
    upper_bound: Option<usize>,
) -> Result<SearchResult, EkrError> {
    let b = geom.num_circles();
    if b > budget.max_circles {
        return Err(EkrError::TooLarge {
            circles: b,
            limit: budget.max_circles,
        });
    }
    let g0 = circle_graph(geom, 0);
    let meets = |x: usize, y: usize| x != y && !g0.adjacent(x, y);
    // Relabel by descending degree in the meets graph, ties by id.
    let mut order: Vec<usize> = (0..b).collect();
    let deg: Vec<usize> = (0..b).map(|x| b - 1 - g0.degree(x)).collect();
    order.sort_by_key(|&x| (std::cmp::Reverse(deg[x]), x));
    let adj: Vec<Bits> = order
        .iter()
        .map(|&x| {
            let mut row = Bits::empty(b);
            for (j, &y) in order.iter().enumerate() {
                if meets(x, y) {
                    row.set(j);
                }
            }
            row
        })
        .collect();
    let nodes = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let search = Search {
        adj: &adj,
        n: b,
        nodes: &nodes,
        abort: &abort,
        max_nodes: budget.max_nodes,
    };
    let mut all = Bits::empty(b);
    (0..b).for_each(|i| all.set(i));
    let root = search.colour(&all);
    let colour_bound = root.last().map_or(0, |x| x.1);
    let cap = upper_bound.unwrap_or(usize::MAX).min(colour_bound);

    // Phase 1: the maximum size, branching on root vertices in parallel.
    let best = AtomicUsize::new(0);
    let best_set = std::sync::Mutex::new(Vec::new());
    root.par_iter().enumerate().rev().for_each(|(i, &(v, c))| {
        if c <= best.load(Ordering::Relaxed) || best.load(Ordering::Relaxed) >= cap {
            return;
        }
        let mut p = Bits::empty(search.n);
        for &(u, _) in &root[..i] {
            p.set(u);
        }
        let np = p.and(&adj[v]);
        let mut r = vec![v];
        if np.is_empty() {
            let mut bs = best_set.lock().unwrap();
            if bs.is_empty() {
                *bs = r.clone();
                best.fetch_max(1, Ordering::Relaxed);
            }
        } else {
            search.maximum(&mut r, np, &best, &best_set, cap);
        }
    });
    let to_ids = |c: &[usize]| -> Vec<u32> {
        let mut v: Vec<u32> = c.iter().map(|&i| order[i] as u32).collect();
        v.sort_unstable();
        v
    };
    if abort.load(Ordering::Relaxed) {
        return Err(EkrError::BudgetExceeded {
            best: to_ids(&best_set.lock().unwrap()),
            upper_bound: cap,
            nodes: nodes.load(Ordering::Relaxed),
        });
    }
    let omega = best.load(Ordering::Relaxed);
    log::info!("maximum family size {omega}; enumerating");

    // Phase 2: every clique of size omega, rooted at its last vertex in colour order.
    let mut families: Vec<Vec<u32>> = (0..root.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (v, c) = root[i];
            let mut out = Vec::new();
            if c >= omega {
                let mut p = Bits::empty(search.n);
                for &(u, _) in &root[..i] {
                    p.set(u);
                }
                let np = p.and(&adj[v]);
                let mut r = vec![v];
                if omega == 1 {
                    out.push(r.clone());
                } else if !np.is_empty() {
                    search.enumerate(&mut r, np, omega, &mut out);
                }
            }
            out.into_iter().map(|c| to_ids(&c))
        })
        .collect();
    if abort.load(Ordering::Relaxed) {
        return Err(EkrError::BudgetExceeded {
            best: to_ids(&best_set.lock().unwrap()),
            upper_bound: omega,
            nodes: nodes.load(Ordering::Relaxed),
        });
    }
    families.sort();
    families.dedup();
    Ok(SearchResult {
        maximum: omega,
        families,
        nodes: nodes.load(Ordering::Relaxed),
    })
}

/// Greedy maximal family: repeatedly adds the circle meeting the most
/// remaining candidates, ties by id.
pub fn greedy_family(geom: &CircleGeometry) -> Vec<u32> {
    let b = geom.num_circles();
    let g0 = circle_graph(geom, 0);
    let mut cand: FixedBitSet = (0..b).collect();
    let mut fam = Vec::new();
    while let Some(v) = cand
        .ones()
        .max_by_key(|&v| (cand.count_ones(..) - cand.intersection_count(&g0.adj[v]), std::cmp::Reverse(v)))
    {
        fam.push(v as u32);
        cand.set(v, false);
        cand.difference_with(&g0.adj[v]);
    }
    fam.sort_unstable();
    fam
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_geometry::construct;
    use crate::finite_field::make_field;
    use crate::spectral::{eigenvalue_matrix, intersection_relations, verify_scheme};
    use proptest::prelude::*;

    fn geom(kind: &str, q: u64) -> CircleGeometry {
        construct(kind, &make_field(q).unwrap(), 0).unwrap()
    }

    #[test]
    fn pencils_intersect() {
        let g = geom("minkowski", 3);
        let p = g.pencil(4).unwrap();
        assert_eq!(is_intersecting(&g, &p), (true, None));
        assert_eq!(p.len(), 6);
        assert_eq!(classify_family(&g, &p), FamilyClass::Pencil(4));
        let (a, b) = (0..g.num_circles())
            .flat_map(|a| (a + 1..g.num_circles()).map(move |b| (a, b)))
            .find(|&(a, b)| g.meet(a, b) == 0)
            .unwrap();
        let (ok, w) = is_intersecting(&g, &[a as u32, b as u32]);
        assert!(!ok);
        assert_eq!(w, Some((a as u32, b as u32)));
        assert!(matches!(IntersectingFamily::new(&g, &[a as u32, b as u32]), Err(EkrError::NotIntersecting(..))));
    }

    #[test]
    fn square_halves_of_mobius_three() {
        let g = geom("mobius", 3);
        let t = g.square_type.clone().unwrap();
        for side in [true, false] {
            let half: Vec<u32> = (0..30u32).filter(|&c| t[c as usize] == side).collect();
            assert_eq!(half.len(), 15);
            assert!(is_intersecting(&g, &half).0);
            assert_eq!(classify_family(&g, &half), FamilyClass::TwoPointMobius3);
        }
    }

    #[test]
    fn pencil_bounds_mobius_five() {
        let g = geom("mobius", 5);
        let fam = IntersectingFamily::new(&g, &g.pencil(0).unwrap()).unwrap();
        let rep = bounds_report(&g, &fam).unwrap();
        assert_eq!(rep.e, 60);
        assert_eq!(rep.counting_bound, Exact(r(10, 1)));
        assert_eq!((rep.best_point, rep.best_point_degree), (0, 30));
        assert_eq!(rep.a, Some(2));
        // (2 − 2·4/26)·30/6.
        assert_eq!(rep.propmany_point_bound, Some(Exact(r(110, 13))));
        assert!(rep.passed());
        let at_p = &rep.mixing[0];
        assert_eq!((at_p.s, at_p.t, at_p.lhs), (30, 0, 0));
        assert_eq!(at_p.rhs, Exact(r(0, 1)));
    }

    #[test]
    fn thresholds() {
        assert_eq!(hm_threshold(3, 0), 10);
        assert_eq!(hm_threshold(4, 2), 6);
        let s = stability_check(7, 62, 56);
        assert!(!s.reached);
        assert_eq!(s.smallest_forced_size, 63);
        assert!(s.vacuous);
        assert_eq!(s.approx, "62.45");
        assert!(stability_reached(7, 63));
        assert_eq!(point_bound_constant(4, 1), 0);
        assert_eq!(point_bound_constant(4, 0), 1);
        assert_eq!(point_bound_constant(5, 1), 1);
        assert_eq!(point_bound_constant(5, 2), 2);
        assert_eq!(mixing_lambda(5, 0), 120);
        assert_eq!(mixing_lambda(4, 0), 4 * 2 * 6);
        assert_eq!(mixing_lambda(4, 1), 4 * 3 * 4);
        assert_eq!(mixing_lambda(4, 2), 64);
    }

    #[test]
    fn ratio_bounds_at_four() {
        let g = geom("mobius", 4);
        let e = eigenvalue_matrix(&verify_scheme(&intersection_relations(&g)).unwrap()).unwrap();
        let rb = ratio_bound(&e, g.num_circles(), &[3], Some(pencil_size(&g)));
        assert_eq!((rb.k, rb.lambda_min), (12, -5));
        assert_eq!(rb.bound, Exact(r(20, 1)));
        assert_eq!(rb.tight, Some(true));
    }

    #[test]
    fn exact_search_small() {
        let g = geom("mobius", 3);
        let res = max_families_exact(&g, SearchBudget::default(), None).unwrap();
        assert_eq!(res.maximum, 15);
        assert_eq!(res.families.len(), 2);
        assert!(res.families.iter().all(|f| classify_family(&g, f) == FamilyClass::TwoPointMobius3));

        let g = geom("minkowski", 3);
        let res = max_families_exact(&g, SearchBudget::default(), None).unwrap();
        assert_eq!(res.maximum, 6);
        assert_eq!(res.families.len(), g.num_points());
        assert!(res.families.iter().all(|f| matches!(classify_family(&g, f), FamilyClass::Pencil(_))));
    }

    #[test]
    fn search_limits() {
        let g = geom("mobius", 3);
        let small = SearchBudget {
            max_circles: 20,
            max_nodes: 1000,
        };
        assert_eq!(
            max_families_exact(&g, small, None).unwrap_err(),
            EkrError::TooLarge { circles: 30, limit: 20 }
        );
        let g = geom("mobius", 4);
        let tiny = SearchBudget {
            max_circles: 130,
            max_nodes: 5,
        };
        match max_families_exact(&g, tiny, None) {
            Err(EkrError::BudgetExceeded { upper_bound, .. }) => assert!(upper_bound >= 20),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn hilton_milner_shape() {
        let g = geom("mobius", 3);
        let b = (0..g.num_circles()).find(|&c| !g.contains(c, 0)).unwrap();
        let hm = hilton_milner_family(&g, 0, b).unwrap();
        assert_eq!(classify_family(&g, &hm.circles), FamilyClass::Other);
        assert!(absorption_violations(&g, &hm).is_empty());
        let rep = bounds_report(&g, &hm).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn greedy_is_intersecting() {
        let g = geom("laguerre", 3);
        let f = greedy_family(&g);
        assert!(is_intersecting(&g, &f).0);
        assert!(f.len() >= 9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        // Random sub-pencils plus the mixing inequality and point bounds.
        #[test]
        fn subfamilies_satisfy_bounds(p in 0usize..10, mask in any::<u16>()) {
            let g = geom("mobius", 3);
            let pencil = g.pencil(p).unwrap();
            let sub: Vec<u32> = pencil.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &c)| c).collect();
            prop_assume!(!sub.is_empty());
            let fam = IntersectingFamily::new(&g, &sub).unwrap();
            let rep = bounds_report(&g, &fam).unwrap();
            prop_assert!(rep.passed());
            prop_assert!(absorption_violations(&g, &fam).is_empty());
        }
    }
}
