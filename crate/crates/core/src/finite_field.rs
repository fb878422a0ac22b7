//! Exact arithmetic in `F_q`, `q = p^d`, in the polynomial basis.
//!
//! Elements are encoded as integers `c_0 + c_1 p + ... + c_{d-1} p^{d-1}` where
//! `c_0 + c_1 x + ...` is the residue modulo the field's modulus. The modulus is
//! the lexicographically smallest monic irreducible polynomial of degree `d`
//! over `F_p`, which makes every encoding reproducible across runs.
//!
//! The hot operations go through a [`Field`] handle on raw `u32` codes; the
//! checked [`FieldElement`] wrapper carries its owner and refuses mixed-field
//! arithmetic.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order accepted by [`make_field`].
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

/// Additive tables are only materialized up to this order.
const ADD_TABLE_LIMIT: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("field order {0} exceeds the limit {MAX_FIELD_ORDER}")]
    TooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("frobenius exponent {k} out of range for degree {degree}")]
    BadFrobeniusExponent { k: u32, degree: u32 },
    #[error("element code {0} out of range")]
    BadElement(u32),
}

/// Parameters of `F_q`: characteristic, degree, and the defining modulus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub characteristic: u32,
    pub degree: u32,
    /// Coefficients of the monic modulus, constant term first, length `degree + 1`.
    pub modulus: Vec<u32>,
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SquareClass {
    Zero,
    Square,
    NonSquare,
}

impl SquareClass {
    /// Class of a product, given the classes of the factors (odd `q`).
    pub fn times(self, other: SquareClass) -> SquareClass {
        use SquareClass::*;
        match (self, other) {
            (Zero, _) | (_, Zero) => Zero,
            (Square, Square) | (NonSquare, NonSquare) => Square,
            _ => NonSquare,
        }
    }
}

struct FieldInner {
    spec: FieldSpec,
    generator: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
    add_table: Option<Vec<u32>>,
    pow_p: Vec<u32>,
}

/// Shared, immutable arithmetic context for one finite field.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.0.spec.order)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for Field {}

/// Factor `q` as `p^d`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let mut rest = q;
    let mut d = 0;
    while rest % p == 0 {
        rest /= p;
        d += 1;
    }
    (rest == 1).then_some((p, d))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Polynomials over F_p, constant term first, no trailing zeros except for the zero polynomial.
fn poly_trim(a: &mut Vec<u32>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm && !(r.len() == 1 && r[0] == 0) {
        let shift = r.len() - 1 - dm;
        let coef = (r[r.len() - 1] as u64 * lead_inv as u64 % p as u64) as u32;
        for (i, &mc) in m.iter().enumerate() {
            let t = (coef as u64 * mc as u64) % p as u64;
            r[shift + i] = ((r[shift + i] as u64 + p as u64 - t) % p as u64) as u32;
        }
        poly_trim(&mut r);
    }
    r
}

fn inv_mod(a: u32, p: u32) -> u32 {
    pow_mod(a as u64, p as u64 - 2, p as u64) as u32
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn digits(mut n: u64, p: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0; len];
    for slot in out.iter_mut() {
        *slot = (n % p as u64) as u32;
        n /= p as u64;
    }
    out
}

/// Irreducibility over `F_p` by trial division with every monic polynomial of
/// degree at most half the degree.
pub fn is_irreducible_mod_p(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg <= 1 {
        return deg == 1;
    }
    for k in 1..=deg / 2 {
        let count = (p as u64).pow(k as u32);
        for n in 0..count {
            let mut g = digits(n, p, k);
            g.push(1);
            let r = poly_rem(f, &g, p);
            if r.len() == 1 && r[0] == 0 {
                return false;
            }
        }
    }
    true
}

/// Builds `F_q` with the lexicographically smallest irreducible monic modulus.
pub fn make_field(q: u64) -> Result<Field, FieldError> {
    let (p, d) = prime_power(q).ok_or(FieldError::NotAPrimePower(q))?;
    if q > MAX_FIELD_ORDER {
        return Err(FieldError::TooLarge(q));
    }
    let p32 = p as u32;
    let modulus = (0..q)
        .map(|n| {
            let mut m = digits(n, p32, d as usize);
            m.push(1);
            m
        })
        .find(|m| is_irreducible_mod_p(m, p32))
        .expect("an irreducible polynomial of every degree exists");
    Ok(Field::from_spec(FieldSpec {
        characteristic: p32,
        degree: d,
        modulus,
        order: q as u32,
    }))
}

impl Field {
    fn from_spec(spec: FieldSpec) -> Field {
        let q = spec.order;
        let p = spec.characteristic;
        let slow_mul = |a: u32, b: u32| reference_mul(&spec, a, b);
        let slow_pow = |a: u32, mut e: u64| {
            let mut base = a;
            let mut acc = 1u32;
            while e > 0 {
                if e & 1 == 1 {
                    acc = slow_mul(acc, base);
                }
                base = slow_mul(base, base);
                e >>= 1;
            }
            acc
        };
        let factors = prime_factors(q as u64 - 1);
        let generator = (1..q)
            .find(|&g| factors.iter().all(|&r| slow_pow(g, (q as u64 - 1) / r) != 1))
            .unwrap_or(1);
        let mut exp = Vec::with_capacity(q as usize - 1);
        let mut log = vec![u32::MAX; q as usize];
        let mut x = 1u32;
        for i in 0..q - 1 {
            exp.push(x);
            log[x as usize] = i;
            x = slow_mul(x, generator);
        }
        let add_table = (q <= ADD_TABLE_LIMIT).then(|| {
            let mut t = vec![0; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    t[(a * q + b) as usize] = digit_add(&spec, a, b);
                }
            }
            t
        });
        let pow_p = (0..spec.degree).map(|k| p.pow(k)).collect();
        Field(Arc::new(FieldInner {
            spec,
            generator,
            exp,
            log,
            add_table,
            pow_p,
        }))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn order(&self) -> u32 {
        self.0.spec.order
    }

    pub fn characteristic(&self) -> u32 {
        self.0.spec.characteristic
    }

    pub fn degree(&self) -> u32 {
        self.0.spec.degree
    }

    pub fn is_odd(&self) -> bool {
        self.0.spec.characteristic != 2
    }

    /// The fixed primitive element used for discrete logarithms.
    pub fn generator(&self) -> u32 {
        self.0.generator
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.order()
    }

    pub fn element(&self, code: u32) -> Result<FieldElement, FieldError> {
        if code >= self.order() {
            return Err(FieldError::BadElement(code));
        }
        Ok(FieldElement {
            field: self.clone(),
            code,
        })
    }

    /// The element `c` of the prime subfield.
    pub fn from_int(&self, c: i64) -> u32 {
        c.rem_euclid(self.characteristic() as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.0;
        if let Some(t) = &inner.add_table {
            return t[(a * inner.spec.order + b) as usize];
        }
        digit_add(&inner.spec, a, b)
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        let spec = &self.0.spec;
        if spec.characteristic == 2 {
            return a;
        }
        let p = spec.characteristic;
        let mut out = 0;
        let mut rest = a;
        for &w in &self.0.pow_p {
            let c = rest % p;
            rest /= p;
            out += ((p - c) % p) * w;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let inner = &*self.0;
        let n = inner.spec.order as u64 - 1;
        let e = (inner.log[a as usize] as u64 + inner.log[b as usize] as u64) % n;
        inner.exp[e as usize]
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let inner = &*self.0;
        let n = inner.spec.order - 1;
        Some(inner.exp[((n - inner.log[a as usize]) % n) as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Discrete logarithm with respect to [`Field::generator`].
    pub fn log(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.0.log[a as usize])
    }

    pub fn exp(&self, e: u64) -> u32 {
        let n = self.order() as u64 - 1;
        self.0.exp[(e % n) as usize]
    }

    pub fn square_class(&self, a: u32) -> SquareClass {
        if a == 0 {
            SquareClass::Zero
        } else if !self.is_odd() || self.pow(a, (self.order() as u64 - 1) / 2) == 1 {
            SquareClass::Square
        } else {
            SquareClass::NonSquare
        }
    }

    pub fn is_square(&self, a: u32) -> bool {
        self.square_class(a) == SquareClass::Square
    }

    /// `a^(p^k)`.
    pub fn frobenius(&self, a: u32, k: u32) -> Result<u32, FieldError> {
        if k >= self.degree() {
            return Err(FieldError::BadFrobeniusExponent {
                k,
                degree: self.degree(),
            });
        }
        Ok(self.pow(a, (self.characteristic() as u64).pow(k)))
    }

    /// Coefficients of `a` in the polynomial basis.
    pub fn coeffs(&self, a: u32) -> Vec<u32> {
        digits(a as u64, self.characteristic(), self.degree() as usize)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> u32 {
        let p = self.characteristic();
        let r = poly_rem(
            &coeffs.iter().map(|c| c % p).collect::<Vec<_>>(),
            &self.0.spec.modulus,
            p,
        );
        r.iter().rev().fold(0, |acc, &c| acc * p + c)
    }
}

fn digit_add(spec: &FieldSpec, a: u32, b: u32) -> u32 {
    let p = spec.characteristic;
    if p == 2 {
        return a ^ b;
    }
    if spec.degree == 1 {
        return (a + b) % p;
    }
    let (mut x, mut y, mut w, mut out) = (a, b, 1, 0);
    for _ in 0..spec.degree {
        out += ((x % p + y % p) % p) * w;
        x /= p;
        y /= p;
        w *= p;
    }
    out
}

/// Schoolbook multiplication followed by reduction modulo the field modulus.
fn reference_mul(spec: &FieldSpec, a: u32, b: u32) -> u32 {
    let p = spec.characteristic;
    let d = spec.degree as usize;
    if d == 1 {
        return ((a as u64 * b as u64) % p as u64) as u32;
    }
    let x = digits(a as u64, p, d);
    let y = digits(b as u64, p, d);
    let mut prod = vec![0u32; 2 * d - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u64 + xi as u64 * yj as u64) % p as u64) as u32;
        }
    }
    let r = poly_rem(&prod, &spec.modulus, p);
    r.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// A checked element of a specific field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: Field,
    code: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}∈{:?}", self.code, self.field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow(u64),
}

impl FieldElement {
    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.code)
    }

    pub fn square_class(&self) -> SquareClass {
        self.field.square_class(self.code)
    }

    pub fn frobenius(&self, k: u32) -> Result<FieldElement, FieldError> {
        let code = self.field.frobenius(self.code, k)?;
        Ok(FieldElement {
            field: self.field.clone(),
            code,
        })
    }

    /// Applies `op`; for [`ArithOp::Pow`] the right operand is ignored.
    pub fn apply(&self, other: &FieldElement, op: ArithOp) -> Result<FieldElement, FieldError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch);
        }
        let f = &self.field;
        let (a, b) = (self.code, other.code);
        let code = match op {
            ArithOp::Add => f.add(a, b),
            ArithOp::Sub => f.sub(a, b),
            ArithOp::Mul => f.mul(a, b),
            ArithOp::Div => f.div(a, b).ok_or(FieldError::DivisionByZero)?,
            ArithOp::Pow(k) => f.pow(a, k),
        };
        Ok(FieldElement {
            field: f.clone(),
            code,
        })
    }
}

/// `F_{q^2}` together with the embedding of `F_q` as the subfield fixed by
/// `x -> x^q`.
#[derive(Debug, Clone)]
pub struct QuadraticExtension {
    pub base: Field,
    pub ext: Field,
    embed: Vec<u32>,
    project: Vec<u32>,
}

impl QuadraticExtension {
    pub fn new(base: &Field) -> Result<QuadraticExtension, FieldError> {
        let q = base.order() as u64;
        let ext = make_field(q * q)?;
        let modulus = &base.spec().modulus;
        // Root of the base modulus inside the extension; prime-subfield constants
        // encode identically in both fields.
        let theta = if base.degree() == 1 {
            0
        } else {
            ext.elements()
                .find(|&t| {
                    modulus
                        .iter()
                        .rev()
                        .fold(0, |acc, &c| ext.add(ext.mul(acc, t), c))
                        == 0
                })
                .expect("the base modulus splits in the extension")
        };
        let mut embed = Vec::with_capacity(q as usize);
        for a in base.elements() {
            let code = if base.degree() == 1 {
                a
            } else {
                base.coeffs(a)
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| ext.add(ext.mul(acc, theta), c))
            };
            embed.push(code);
        }
        let mut project = vec![u32::MAX; ext.order() as usize];
        for (a, &e) in embed.iter().enumerate() {
            project[e as usize] = a as u32;
        }
        Ok(QuadraticExtension {
            base: base.clone(),
            ext,
            embed,
            project,
        })
    }

    pub fn embed(&self, a: u32) -> u32 {
        self.embed[a as usize]
    }

    /// Inverse of [`QuadraticExtension::embed`] on the subfield.
    pub fn project(&self, a: u32) -> Option<u32> {
        let v = self.project[a as usize];
        (v != u32::MAX).then_some(v)
    }

    pub fn in_base(&self, a: u32) -> bool {
        self.project[a as usize] != u32::MAX
    }

    /// The roots in `F_{q^2}` of `x^2 - t x + n` with `t, n ∈ F_q`.
    pub fn roots_of_quadratic(&self, t: u32, n: u32) -> Vec<u32> {
        let (e, t, n) = (&self.ext, self.embed(t), self.embed(n));
        e.elements()
            .filter(|&x| e.add(e.sub(e.mul(x, x), e.mul(t, x)), n) == 0)
            .collect()
    }
}
