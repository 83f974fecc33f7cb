//! Finite fields GF(p^k) with table-driven arithmetic.
//!
//! Elements are integers in `0..q`; an element's integer is its polynomial
//! coefficient vector read as base-p digits (constant term least significant).

use crate::error::{Error, Result};

/// (q, p, k, irreducible polynomial coefficients from constant term up, monic).
const FIELDS: &[(u32, u32, u32, &[u32])] = &[
    (2, 2, 1, &[0, 1]),
    (3, 3, 1, &[0, 1]),
    (4, 2, 2, &[1, 1, 1]),
    (5, 5, 1, &[0, 1]),
    (7, 7, 1, &[0, 1]),
    (8, 2, 3, &[1, 1, 0, 1]),
    (9, 3, 2, &[2, 2, 1]),
    (11, 11, 1, &[0, 1]),
    (13, 13, 1, &[0, 1]),
    (16, 2, 4, &[1, 1, 0, 0, 1]),
    (17, 17, 1, &[0, 1]),
    (19, 19, 1, &[0, 1]),
    (23, 23, 1, &[0, 1]),
    (25, 5, 2, &[2, 4, 1]),
    (27, 3, 3, &[1, 2, 0, 1]),
    (29, 29, 1, &[0, 1]),
    (31, 31, 1, &[0, 1]),
    (32, 2, 5, &[1, 0, 1, 0, 0, 1]),
];

/// Level counts for which a field (and so an OA(q², q+1, q, 2)) is available.
pub fn supported_orders() -> impl Iterator<Item = u32> {
    FIELDS.iter().map(|f| f.0)
}

/// Largest supported prime power not exceeding `limit`, if any.
pub fn largest_supported_at_most(limit: u32) -> Option<u32> {
    supported_orders().filter(|&q| q <= limit).max()
}

/// Default level count for `n` rows: the largest supported order not above ⌈√n⌉.
pub fn default_q(n: usize) -> Option<u32> {
    let root = (n as f64).sqrt().ceil() as u32;
    largest_supported_at_most(root)
}

#[derive(Debug, Clone)]
pub struct GaloisField {
    characteristic: u32,
    degree: u32,
    order: u32,
    modulus: Vec<u32>,
    add: Vec<u32>,
    mul: Vec<u32>,
    inv: Vec<u32>,
}

impl GaloisField {
    /// Builds GF(q) and audits the field axioms over the full tables.
    pub fn new(q: u32) -> Result<Self> {
        let &(order, prime, degree, poly) =
            FIELDS
                .iter()
                .find(|f| f.0 == q)
                .ok_or_else(|| Error::UnsupportedField {
                    q,
                    below: supported_orders().filter(|&s| s < q).max(),
                    above: supported_orders().find(|&s| s > q),
                })?;
        if degree > 1 && !is_irreducible(poly, prime) {
            return Err(Error::InvalidArgument(format!(
                "built-in modulus for GF({q}) is reducible"
            )));
        }
        let qs = order as usize;
        let mut add = vec![0; qs * qs];
        let mut mul = vec![0; qs * qs];
        for a in 0..order {
            let da = digits(a, prime, degree);
            for b in 0..order {
                let db = digits(b, prime, degree);
                let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % prime).collect();
                add[a as usize * qs + b as usize] = undigits(&sum, prime);
                let prod = poly_mul_mod(&da, &db, poly, prime);
                mul[a as usize * qs + b as usize] = undigits(&prod, prime);
            }
        }
        let mut inv = vec![0; qs];
        for a in 1..qs {
            inv[a] = (1..qs)
                .find(|&b| mul[a * qs + b] == 1)
                .map(|b| b as u32)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("element {a} of GF({q}) has no inverse"))
                })?;
        }
        let field = Self {
            characteristic: prime,
            degree,
            order,
            modulus: poly.to_vec(),
            add,
            mul,
            inv,
        };
        field.audit()?;
        Ok(field)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn characteristic(&self) -> u32 {
        self.characteristic
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Monic modulus, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[(a * self.order + b) as usize]
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[(a * self.order + b) as usize]
    }

    pub fn neg(&self, a: u32) -> u32 {
        (0..self.order).find(|&b| self.add(a, b) == 0).unwrap_or(0)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.inv[a as usize])
    }

    fn audit(&self) -> Result<()> {
        let q = self.order;
        let fail = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "GF({q}) table audit failed: {what}"
            )))
        };
        for a in 0..q {
            if self.add(a, 0) != a || self.mul(a, 1) != a || self.mul(a, 0) != 0 {
                return fail("identity");
            }
            if a != 0 && self.mul(a, self.inv[a as usize]) != 1 {
                return fail("inverse");
            }
            if !(0..q).any(|b| self.add(a, b) == 0) {
                return fail("additive inverse");
            }
            for b in 0..q {
                if self.add(a, b) != self.add(b, a) || self.mul(a, b) != self.mul(b, a) {
                    return fail("commutativity");
                }
                for c in 0..q {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c)) {
                        return fail("additive associativity");
                    }
                    if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                        return fail("multiplicative associativity");
                    }
                    if self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c)) {
                        return fail("distributivity");
                    }
                }
            }
        }
        Ok(())
    }
}

fn digits(mut v: u32, base: u32, len: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(len as usize);
    for _ in 0..len {
        out.push(v % base);
        v /= base;
    }
    out
}

fn undigits(d: &[u32], base: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &x| acc * base + x)
}

fn poly_mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let k = modulus.len() - 1;
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&mut prod, modulus, p);
    prod.truncate(k);
    prod.resize(k, 0);
    prod
}

/// In-place remainder modulo a monic polynomial.
fn poly_rem(r: &mut [u32], modulus: &[u32], p: u32) {
    let k = modulus.len() - 1;
    for top in (k..r.len()).rev() {
        let c = r[top];
        if c == 0 {
            continue;
        }
        for (i, &m) in modulus.iter().enumerate() {
            let idx = top - k + i;
            r[idx] = (r[idx] + p - (c * m) % p) % p;
        }
    }
}

/// True when no monic polynomial of degree 1..=deg/2 divides `f` over GF(p).
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for low in 0..count {
            let mut g = digits(low, p, d as u32);
            g.push(1);
            let mut r = f.to_vec();
            poly_rem(&mut r, &g, p);
            if r[..d].iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_q_rule() {
        assert_eq!(default_q(100), Some(9));
        assert_eq!(default_q(250), Some(16));
        assert_eq!(default_q(500), Some(23));
        assert_eq!(default_q(1), None);
    }

    #[test]
    fn gf2_one_plus_one_is_zero() {
        let f = GaloisField::new(2).unwrap();
        assert_eq!(f.add(1, 1), 0);
        assert_eq!(f.mul(1, 1), 1);
    }

    #[test]
    fn all_supported_fields_pass_audit() {
        for q in supported_orders() {
            let f = GaloisField::new(q).unwrap();
            assert_eq!(f.order(), q);
            assert_eq!(f.characteristic().pow(f.degree()), q);
            for a in 1..q {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                assert_eq!(f.add(a, f.neg(a)), 0);
            }
            assert_eq!(f.inv(0), None);
        }
    }

    #[test]
    fn gf16_default_modulus_is_x4_x_1() {
        let f = GaloisField::new(16).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 0, 0, 1]);
        // x * x^3 = x^4 = x + 1  ->  2 * 8 = 3
        assert_eq!(f.mul(2, 8), 3);
    }

    #[test]
    fn gf16_modulus_irreducible_by_brute_force() {
        // every product of monic factors of degree (1,3) or (2,2) over GF(2)
        let target = [1u32, 1, 0, 0, 1];
        let polys = |deg: usize| -> Vec<Vec<u32>> {
            (0..1u32 << deg)
                .map(|bits| {
                    let mut c: Vec<u32> = (0..deg).map(|i| (bits >> i) & 1).collect();
                    c.push(1);
                    c
                })
                .collect()
        };
        for (da, db) in [(1, 3), (2, 2)] {
            for a in polys(da) {
                for b in polys(db) {
                    let mut prod = vec![0u32; 5];
                    for (i, x) in a.iter().enumerate() {
                        for (j, y) in b.iter().enumerate() {
                            prod[i + j] ^= x & y;
                        }
                    }
                    assert_ne!(prod, target);
                }
            }
        }
    }

    #[test]
    fn non_prime_power_rejected_with_neighbours() {
        match GaloisField::new(6) {
            Err(Error::UnsupportedField { below, above, .. }) => {
                assert_eq!(below, Some(5));
                assert_eq!(above, Some(7));
            }
            other => panic!("expected unsupported, got {other:?}"),
        }
        assert!(GaloisField::new(0).is_err());
        assert!(GaloisField::new(1).is_err());
        assert!(GaloisField::new(64).is_err());
    }

    #[test]
    fn irreducibility_check_catches_reducible() {
        // x^2 + 1 = (x + 1)^2 over GF(2)
        assert!(!is_irreducible(&[1, 0, 1], 2));
        // x^2 + 1 is irreducible over GF(3)
        assert!(is_irreducible(&[1, 0, 1], 3));
    }

    #[test]
    fn largest_supported() {
        assert_eq!(largest_supported_at_most(16), Some(16));
        assert_eq!(largest_supported_at_most(23), Some(23));
        assert_eq!(largest_supported_at_most(71), Some(32));
        assert_eq!(largest_supported_at_most(1), None);
    }
}
