//! Exact arithmetic in the Galois field GF(q), q = p^e.
//!
//! Elements are encoded as indices in `[0, q)`: for prime fields the residue
//! itself, for extension fields the base-p digit vector of the polynomial
//! representative (digit k is the coefficient of x^k). All binary operations
//! are backed by precomputed tables, so downstream linear algebra is
//! branch-free. Fields are capped at q <= 256, which covers every instance
//! the toolkit enumerates point-by-point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order. Tables are quadratic in q.
pub const MAX_Q: u32 = 256;

/// A field element index in `[0, q)`. Index 0 is the additive identity,
/// index 1 the multiplicative identity.
pub type FieldElement = u16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("q = {q} is not a prime power: {q} = {factorization}")]
    NotPrimePower { q: u32, factorization: String },
    #[error("q must be at least 2, got {q}")]
    TooSmall { q: u32 },
    #[error("q = {q} exceeds the table-backed maximum {MAX_Q}")]
    TooLarge { q: u32 },
    #[error("division by zero in GF({q})")]
    DivisionByZero { q: u32 },
}

/// GF(q) with full operation tables.
#[derive(Clone, Serialize, Deserialize)]
pub struct FieldSpec {
    p: u32,
    e: u32,
    q: u32,
    /// Coefficients c_0..c_e of the monic modulus (c_e = 1); empty when e = 1.
    modulus: Vec<u32>,
    #[serde(skip)]
    add: Vec<u16>,
    #[serde(skip)]
    mul: Vec<u16>,
    #[serde(skip)]
    neg: Vec<u16>,
    #[serde(skip)]
    inv: Vec<u16>,
}

impl std::fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("e", &self.e)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

fn trial_factorize(mut n: u32) -> Vec<(u32, u32)> {
    let mut factors = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut mult = 0;
            while n.is_multiple_of(d) {
                n /= d;
                mult += 1;
            }
            factors.push((d, mult));
        }
        d += 1;
    }
    if n > 1 {
        factors.push((n, 1));
    }
    factors
}

impl FieldSpec {
    /// Builds GF(q). For extension fields the modulus is the monic irreducible
    /// polynomial of degree e over GF(p) with the smallest integer encoding
    /// `sum c_k p^k`, so two calls always agree.
    pub fn new(q: u32) -> Result<Self, FieldError> {
        if q < 2 {
            return Err(FieldError::TooSmall { q });
        }
        if q > MAX_Q {
            return Err(FieldError::TooLarge { q });
        }
        let factors = trial_factorize(q);
        if factors.len() != 1 {
            let factorization = factors
                .iter()
                .map(|&(p, m)| {
                    if m == 1 {
                        p.to_string()
                    } else {
                        format!("{p}^{m}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" * ");
            return Err(FieldError::NotPrimePower { q, factorization });
        }
        let (p, e) = factors[0];
        let modulus = if e == 1 {
            Vec::new()
        } else {
            smallest_irreducible(p, e)
        };
        let mut spec = FieldSpec {
            p,
            e,
            q,
            modulus,
            add: Vec::new(),
            mul: Vec::new(),
            neg: Vec::new(),
            inv: Vec::new(),
        };
        spec.build_tables();
        Ok(spec)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients c_0..c_e; empty for prime fields.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Rebuilds the operation tables. Needed after deserializing, since the
    /// tables are derived data and not part of the wire format.
    pub fn rebuild_tables(&mut self) {
        if self.add.is_empty() {
            self.build_tables();
        }
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let p = self.p as u64;
        let e = self.e as usize;
        let mut add = vec![0u16; q * q];
        let mut mul = vec![0u16; q * q];
        let mut neg = vec![0u16; q];
        let mut inv = vec![0u16; q];

        let digits = |mut x: usize| -> Vec<u64> {
            let mut d = vec![0u64; e];
            for slot in d.iter_mut() {
                *slot = (x as u64) % p;
                x /= p as usize;
            }
            d
        };
        let pack = |d: &[u64]| -> usize {
            let mut x = 0usize;
            for &c in d.iter().rev() {
                x = x * p as usize + c as usize;
            }
            x
        };

        for a in 0..q {
            let da = digits(a);
            let mut dn = vec![0u64; e];
            for k in 0..e {
                dn[k] = (p - da[k]) % p;
            }
            neg[a] = pack(&dn) as u16;
            for b in a..q {
                let db = digits(b);
                let mut ds = vec![0u64; e];
                for k in 0..e {
                    ds[k] = (da[k] + db[k]) % p;
                }
                let s = pack(&ds) as u16;
                add[a * q + b] = s;
                add[b * q + a] = s;

                // polynomial product reduced modulo the field modulus
                let mut prod = vec![0u64; 2 * e - 1];
                for (i, &ca) in da.iter().enumerate() {
                    if ca == 0 {
                        continue;
                    }
                    for (j, &cb) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + ca * cb) % p;
                    }
                }
                if e > 1 {
                    // modulus is monic: x^e = -(c_0 + c_1 x + ... + c_{e-1} x^{e-1})
                    for i in (e..2 * e - 1).rev() {
                        let c = prod[i];
                        if c == 0 {
                            continue;
                        }
                        prod[i] = 0;
                        for k in 0..e {
                            let m = self.modulus[k] as u64;
                            let sub = (c * m) % p;
                            prod[i - e + k] = (prod[i - e + k] + p - sub) % p;
                        }
                    }
                }
                let m = pack(&prod[..e]) as u16;
                mul[a * q + b] = m;
                mul[b * q + a] = m;
            }
        }
        for a in 1..q {
            for b in 1..q {
                if mul[a * q + b] == 1 {
                    inv[a] = b as u16;
                    break;
                }
            }
        }
        self.add = add;
        self.mul = mul;
        self.neg = neg;
        self.inv = inv;
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        self.neg[a as usize]
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero { q: self.q });
        }
        Ok(self.inv[a as usize])
    }

    /// Table lookup without the zero check; callers must guarantee a != 0.
    #[inline]
    pub(crate) fn inv_unchecked(&self, a: FieldElement) -> FieldElement {
        debug_assert_ne!(a, 0);
        self.inv[a as usize]
    }

    /// a^k by square-and-multiply; a^0 = 1 for every a including 0.
    pub fn pow(&self, a: FieldElement, mut k: u64) -> FieldElement {
        let mut base = a;
        let mut acc: FieldElement = 1;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// All elements, 0..q.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        0..self.q as FieldElement
    }
}

/// Finds the monic irreducible polynomial of degree e over GF(p) with the
/// smallest integer encoding of its non-leading coefficients.
fn smallest_irreducible(p: u32, e: u32) -> Vec<u32> {
    let p = p as u64;
    let e = e as usize;
    let total = p.pow(e as u32);
    for t in 0..total {
        let mut poly = vec![0u32; e + 1];
        let mut x = t;
        for c in poly.iter_mut().take(e) {
            *c = (x % p) as u32;
            x /= p;
        }
        poly[e] = 1;
        if is_irreducible(&poly, p as u32) {
            return poly;
        }
    }
    unreachable!("monic irreducible polynomials exist over GF(p) for every degree");
}

/// Irreducibility by trial division with every monic polynomial of degree
/// 1..=e/2. Degrees here are tiny (p^e <= 256), so this is instant.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let e = poly.len() - 1;
    for d in 1..=e / 2 {
        let total = (p as u64).pow(d as u32);
        for t in 0..total {
            let mut div = vec![0u32; d + 1];
            let mut x = t;
            for c in div.iter_mut().take(d) {
                *c = (x % p as u64) as u32;
                x /= p as u64;
            }
            div[d] = 1;
            if poly_rem_is_zero(poly, &div, p) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(num: &[u32], den: &[u32], p: u32) -> bool {
    let p = p as u64;
    let mut rem: Vec<u64> = num.iter().map(|&c| c as u64).collect();
    let d = den.len() - 1;
    // den is monic, so eliminating from the top power down zeroes every
    // coefficient of degree >= d.
    for top in (d..rem.len()).rev() {
        let lead = rem[top];
        if lead == 0 {
            continue;
        }
        let shift = top - d;
        for (k, &dc) in den.iter().enumerate() {
            let sub = (lead * dc as u64) % p;
            rem[shift + k] = (rem[shift + k] + p - sub) % p;
        }
    }
    rem[..d].iter().all(|&c| c == 0)
}
