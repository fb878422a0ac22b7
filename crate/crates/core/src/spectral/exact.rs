//! Exact integer linear algebra: characteristic polynomials by multimodular
//! Hessenberg reduction with CRT reconstruction, integer root extraction, and
//! rational null spaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Primes below `2^31`, largest first.
fn primes_below_2_31() -> impl Iterator<Item = u64> {
    let is_prime = |n: u64| {
        if n % 2 == 0 {
            return false;
        }
        let mut d = 3;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 2;
        }
        true
    };
    ((1u64 << 30)..(1u64 << 31)).rev().filter(move |&n| is_prime(n))
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Characteristic polynomial `det(xI − A)` mod `p`, coefficients low to high.
pub fn charpoly_mod(a: &[Vec<i64>], p: u64) -> Vec<u64> {
    let n = a.len();
    let mut h: Vec<Vec<u64>> = a
        .iter()
        .map(|row| row.iter().map(|&v| v.rem_euclid(p as i64) as u64).collect())
        .collect();
    for j in 0..n.saturating_sub(2) {
        let Some(i) = (j + 1..n).find(|&i| h[i][j] != 0) else {
            continue;
        };
        if i != j + 1 {
            h.swap(i, j + 1);
            for row in h.iter_mut() {
                row.swap(i, j + 1);
            }
        }
        let inv = inv_mod(h[j + 1][j], p);
        for k in j + 2..n {
            let u = h[k][j] * inv % p;
            if u == 0 {
                continue;
            }
            for c in 0..n {
                let t = u * h[j + 1][c] % p;
                h[k][c] = (h[k][c] + p - t) % p;
            }
            for row in h.iter_mut() {
                row[j + 1] = (row[j + 1] + u * row[k]) % p;
            }
        }
    }
    let mut polys: Vec<Vec<u64>> = vec![vec![1]];
    for m in 1..=n {
        let prev = &polys[m - 1];
        let mut next = vec![0u64; m + 1];
        let diag = h[m - 1][m - 1];
        for (d, &c) in prev.iter().enumerate() {
            next[d + 1] = (next[d + 1] + c) % p;
            next[d] = (next[d] + p - diag * c % p) % p;
        }
        let mut prod = 1u64;
        for i in 1..m {
            prod = prod * h[m - i][m - i - 1] % p;
            if prod == 0 {
                break;
            }
            let coef = h[m - 1 - i][m - 1] * prod % p;
            for (d, &c) in polys[m - 1 - i].iter().enumerate() {
                next[d] = (next[d] + p - coef * c % p) % p;
            }
        }
        polys.push(next);
    }
    polys.pop().unwrap()
}

/// Largest absolute row sum, a bound on every eigenvalue's modulus.
pub fn row_sum_bound(a: &[Vec<i64>]) -> i64 {
    a.iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<i64>())
        .max()
        .unwrap_or(0)
}

/// Exact characteristic polynomial of an integer matrix, coefficients low to high.
pub fn charpoly(a: &[Vec<i64>]) -> Vec<BigInt> {
    let n = a.len();
    let bound = BigInt::from(1 + row_sum_bound(a)).pow(n as u32);
    let need = bound * 2;
    let mut modulus = BigInt::one();
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); n + 1];
    for p in primes_below_2_31() {
        let residues = charpoly_mod(a, p);
        let pb = BigInt::from(p);
        let m_inv = inv_mod((&modulus % &pb).to_u64().unwrap(), p);
        for (x, &r) in acc.iter_mut().zip(&residues) {
            let cur = (&*x % &pb).to_u64().unwrap();
            let delta = (r + p - cur) % p * m_inv % p;
            *x += &modulus * BigInt::from(delta);
        }
        modulus *= pb;
        if modulus > need {
            break;
        }
    }
    let half = &modulus / 2;
    acc.into_iter()
        .map(|x| if x > half { x - &modulus } else { x })
        .collect()
}

fn eval_mod(poly: &[BigInt], t: i64, p: u64) -> u64 {
    let pb = BigInt::from(p);
    let tm = t.rem_euclid(p as i64) as u64;
    poly.iter().rev().fold(0u64, |acc, c| {
        let cm = c.mod_floor(&pb).to_u64().unwrap();
        (acc * tm + cm) % p
    })
}

/// Divides by `(x − t)`, returning the quotient if the remainder is 0.
fn deflate(poly: &[BigInt], t: i64) -> Option<Vec<BigInt>> {
    let n = poly.len() - 1;
    let mut q = vec![BigInt::zero(); n];
    let mut carry = BigInt::zero();
    let tb = BigInt::from(t);
    for d in (0..=n).rev() {
        let cur = &poly[d] + &carry * &tb;
        if d == 0 {
            return cur.is_zero().then_some(q);
        }
        q[d - 1] = cur.clone();
        carry = cur;
    }
    unreachable!()
}

/// Integer roots with multiplicities, ascending, for roots in `[−bound, bound]`.
/// Returns `Err(leftover degree)` if the polynomial does not split over ℤ.
pub fn integer_roots(poly: &[BigInt], bound: i64) -> Result<Vec<(i64, usize)>, usize> {
    let mut p: Vec<BigInt> = poly.to_vec();
    while p.len() > 1 && p.last().unwrap().is_zero() {
        p.pop();
    }
    let mut roots = Vec::new();
    let zeros = p.iter().take_while(|c| c.is_zero()).count();
    if zeros > 0 {
        roots.push((0, zeros));
        p.drain(..zeros);
    }
    let probe = 2_147_483_647u64;
    for t in (-bound..=bound).filter(|&t| t != 0) {
        if p.len() == 1 {
            break;
        }
        if !p[0].is_multiple_of(&BigInt::from(t)) || eval_mod(&p, t, probe) != 0 {
            continue;
        }
        let mut mult = 0;
        while p.len() > 1 {
            match deflate(&p, t) {
                Some(q) => {
                    p = q;
                    mult += 1;
                }
                None => break,
            }
        }
        if mult > 0 {
            roots.push((t, mult));
        }
    }
    roots.sort();
    if p.len() > 1 {
        Err(p.len() - 1)
    } else {
        Ok(roots)
    }
}

/// Exact spectrum of a symmetric-or-not integer matrix whose eigenvalues are
/// all integers; `Err(leftover degree)` otherwise.
pub fn integer_spectrum(a: &[Vec<i64>]) -> Result<Vec<(i64, usize)>, usize> {
    let poly = charpoly(a);
    integer_roots(&poly, row_sum_bound(a))
}

/// A basis of the right null space of a rational matrix.
pub fn null_space(m: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, piv);
        let lead = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x = &*x / &lead;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in 0..cols {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[row][f].clone();
            }
            v
        })
        .collect()
}
