//! Arithmetic in binary extension fields GF(2^w), 2 <= w <= 16.
//!
//! A [`FieldSpec`] owns eagerly built log/antilog tables, so `mul` and `inv`
//! are table lookups. Cloning a `FieldSpec` is cheap (the tables are shared).

use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A single field symbol. Addition is XOR and does not need the field;
/// multiplication goes through [`FieldSpec::mul`].
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElem(pub u16);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for FieldElem {
    fn from(v: u16) -> Self {
        FieldElem(v)
    }
}

impl Add for FieldElem {
    type Output = FieldElem;

    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElem) -> FieldElem {
        FieldElem(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElem {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: FieldElem) {
        self.0 ^= rhs.0;
    }
}

struct Tables {
    w: u32,
    poly: u32,
    /// exp[i] = g^i for i in 0..2(q-1), doubled to skip a modular reduction.
    exp: Vec<u16>,
    /// log[a] for a != 0; log[0] is unused.
    log: Vec<u16>,
}

/// GF(2^w) defined by an irreducible polynomial, encoded as a bitmask that
/// includes the leading term (x^5+x^3+1 is `0b101001` = 41).
#[derive(Clone)]
pub struct FieldSpec {
    tables: Arc<Tables>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.w() == other.w() && self.poly() == other.poly()
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})/{:#b}", self.w(), self.poly())
    }
}

/// Degree of a GF(2) polynomial given as a bitmask; `None` for zero.
fn degree(p: u32) -> Option<u32> {
    if p == 0 {
        None
    } else {
        Some(31 - p.leading_zeros())
    }
}

/// Remainder of `a` divided by `b` over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b).expect("division by zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Returns a non-trivial factor of `poly` (degree <= deg/2), if one exists.
fn find_factor(poly: u32) -> Option<u32> {
    let d = degree(poly)?;
    // Every polynomial of degree 1..=d/2 has its top bit in [1, d/2].
    let max = 1u32 << (d / 2 + 1);
    (2..max).find(|&cand| poly_rem(poly, cand) == 0)
}

impl FieldSpec {
    /// The field used by the built-in (9,6) code: GF(32) with x^5+x^3+1.
    pub fn gf32() -> FieldSpec {
        FieldSpec::new(5, 0b101001).expect("x^5+x^3+1 is irreducible")
    }

    pub fn new(w: u32, poly: u32) -> Result<FieldSpec> {
        if !(2..=16).contains(&w) {
            return Err(Error::Parameter(format!(
                "field width w={w} outside supported range [2, 16]"
            )));
        }
        if degree(poly) != Some(w) {
            return Err(Error::Parameter(format!(
                "polynomial {poly:#b} does not have degree {w}"
            )));
        }
        if let Some(factor) = find_factor(poly) {
            return Err(Error::ReduciblePolynomial { poly, factor });
        }

        let q = 1usize << w;
        let order = q - 1;
        let generator = (2..q as u32)
            .find(|&g| multiplicative_order(g, poly, w) == order)
            .unwrap_or(1); // only reached for q = 2, which w >= 2 excludes

        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; q];
        let mut v = 1u32;
        for i in 0..order {
            exp[i] = v as u16;
            exp[i + order] = v as u16;
            log[v as usize] = i as u16;
            v = clmul_mod(v, generator, poly, w);
        }
        Ok(FieldSpec {
            tables: Arc::new(Tables { w, poly, exp, log }),
        })
    }

    pub fn w(&self) -> u32 {
        self.tables.w
    }

    pub fn poly(&self) -> u32 {
        self.tables.poly
    }

    /// Number of elements, q = 2^w.
    pub fn order(&self) -> usize {
        1 << self.tables.w
    }

    pub fn contains(&self, a: FieldElem) -> bool {
        (a.0 as usize) < self.order()
    }

    /// Checked constructor for an element of this field.
    pub fn elem(&self, v: u32) -> Result<FieldElem> {
        if (v as usize) < self.order() {
            Ok(FieldElem(v as u16))
        } else {
            Err(Error::Parameter(format!(
                "value {v} is not an element of GF(2^{})",
                self.w()
            )))
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        a + b
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.0 == 0 || b.0 == 0 {
            return FieldElem::ZERO;
        }
        let t = &self.tables;
        FieldElem(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.0 == 0 {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let t = &self.tables;
        let order = t.exp.len() / 2;
        let l = t.log[a.0 as usize] as usize;
        Ok(FieldElem(t.exp[(order - l) % order]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Discrete log of a nonzero element (with respect to the table generator).
    #[inline]
    pub(crate) fn log_of(&self, a: FieldElem) -> usize {
        self.tables.log[a.0 as usize] as usize
    }

    /// `dst[i] += c * src[i]` for every lane.
    pub fn mul_acc(&self, dst: &mut [FieldElem], src: &[FieldElem], c: FieldElem) {
        debug_assert_eq!(dst.len(), src.len());
        if c.is_zero() {
            return;
        }
        if c == FieldElem::ONE {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s;
            }
            return;
        }
        let lc = self.log_of(c);
        let t = &self.tables;
        for (d, s) in dst.iter_mut().zip(src) {
            if s.0 != 0 {
                d.0 ^= t.exp[lc + t.log[s.0 as usize] as usize];
            }
        }
    }
}

/// Carry-less multiply followed by reduction modulo `poly`.
fn clmul_mod(a: u32, b: u32, poly: u32, w: u32) -> u32 {
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << w) != 0 {
            a ^= poly;
        }
    }
    acc
}

fn multiplicative_order(g: u32, poly: u32, w: u32) -> usize {
    let mut v = g;
    let mut n = 1;
    while v != 1 {
        v = clmul_mod(v, g, poly, w);
        n += 1;
        if n > (1 << w) {
            return 0;
        }
    }
    n
}
