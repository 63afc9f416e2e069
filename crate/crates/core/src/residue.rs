//! Residue fields `O_K / P` and reduction of field elements.

use std::sync::Arc;

use num_bigint::BigInt;

use crate::arith;
use crate::error::{Error, Result};
use crate::gf::{Fe, FiniteField};
use crate::quadfield::{PrimeIdeal, QuadElement, QuadFrac};

#[derive(Clone, Debug)]
pub struct ResidueField {
    prime: PrimeIdeal,
    field: Arc<FiniteField>,
    omega: Fe,
}

impl ResidueField {
    pub fn new(prime: &PrimeIdeal) -> Self {
        let p = prime.p();
        let k = prime.field();
        match prime.root() {
            Some(c) => {
                let field = FiniteField::get(p, 1);
                let omega = field.from_u64(c);
                ResidueField { prime: prime.clone(), field, omega }
            }
            None => {
                let field = FiniteField::get(p, 2);
                let omega = if p == 2 {
                    // w^2 + w + 1 = 0 mod 2 for d = 3, 11: w is a root of the modulus
                    field.from_coords(&[0, 1])
                } else {
                    // w = (t + sqrt(disc))/2 with sqrt(disc) = s*tau, s^2 = disc/r
                    let r = arith::least_nonresidue(p);
                    let disc = k.omega_trace().pow(2) - 4 * k.omega_norm();
                    let ratio = arith::mul_mod(
                        disc.rem_euclid(p as i64) as u64,
                        arith::inv_mod(r as i128, p as i128).unwrap() as u64,
                        p,
                    );
                    let s = arith::sqrt_mod(ratio as i64, p).expect("disc/r is a square");
                    let half = p.div_ceil(2);
                    let t = k.omega_trace().rem_euclid(p as i64) as u64;
                    field.from_coords(&[arith::mul_mod(t, half, p), arith::mul_mod(s, half, p)])
                };
                ResidueField { prime: prime.clone(), field, omega }
            }
        }
    }

    pub fn prime(&self) -> &PrimeIdeal {
        &self.prime
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.field
    }

    pub fn order(&self) -> u64 {
        self.field.order()
    }

    pub fn omega_image(&self) -> Fe {
        self.omega
    }

    pub fn reduce_int(&self, n: &BigInt) -> Fe {
        self.field.from_u64(arith::mod_u64(n, self.prime.p()))
    }

    pub fn reduce(&self, x: &QuadElement) -> Fe {
        let f = &self.field;
        f.add(self.reduce_int(x.a()), f.mul(self.reduce_int(x.b()), self.omega))
    }

    pub fn reduce_frac(&self, x: &QuadFrac) -> Result<Fe> {
        let den = self.reduce_int(x.denom());
        let inv = self
            .field
            .inv(den)
            .ok_or_else(|| Error::DenominatorNotInvertible(self.prime.label()))?;
        Ok(self.field.mul(self.reduce(x.numer()), inv))
    }

    /// The degree-two extension of this residue field together with the
    /// embedding of this field into it.
    pub fn square_extension(&self) -> (Arc<FiniteField>, Vec<Fe>) {
        let big = FiniteField::get(self.prime.p(), 2 * self.field.degree());
        let map = self.field.embedding_into(&big);
        (big, map)
    }
}

/// Convenience for callers that only need one reduction.
pub fn reduce_mod(x: &QuadFrac, prime: &PrimeIdeal) -> Result<(ResidueField, Fe)> {
    let rf = ResidueField::new(prime);
    let v = rf.reduce_frac(x)?;
    Ok((rf, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::{split_prime, QuadField};

    #[test]
    fn omega_satisfies_its_minimal_polynomial() {
        for k in QuadField::all() {
            for p in arith::primes_up_to(60) {
                for pr in split_prime(k, p) {
                    let rf = ResidueField::new(&pr);
                    let f = rf.field();
                    let w = rf.omega_image();
                    let val = f.add(
                        f.sub(f.mul(w, w), f.mul(f.from_i64(k.omega_trace()), w)),
                        f.from_i64(k.omega_norm()),
                    );
                    assert!(val.is_zero(), "{k} {pr}");
                    // the generator of P reduces to zero
                    assert!(rf.reduce(pr.gen()).is_zero(), "{k} {pr}");
                }
            }
        }
    }

    #[test]
    fn examples() {
        let k = QuadField::new(3).unwrap();
        let r3 = &split_prime(k, 3)[0];
        let rf = ResidueField::new(r3);
        // w reduces to the root of x^2 - x + 1 mod 3, which is 2
        assert_eq!(rf.field().to_prime_field(rf.reduce(&k.omega())), Some(2));

        let two = &split_prime(k, 2)[0];
        let rf = ResidueField::new(two);
        assert_eq!(rf.order(), 4);
        assert_eq!(rf.reduce(&k.elem(5, 0)), Fe::ONE);

        let p13 = &split_prime(k, 13)[0];
        let rf = ResidueField::new(p13);
        let x = k.elem(4, 7);
        let third = QuadFrac::new(x.clone(), BigInt::from(3));
        let inv3 = arith::inv_mod(3, 13).unwrap() as u64;
        let expect = rf.field().mul(rf.field().from_u64(inv3), rf.reduce(&x));
        assert_eq!(rf.reduce_frac(&third).unwrap(), expect);

        let q = QuadFrac::new(k.one(), BigInt::from(13));
        assert!(matches!(rf.reduce_frac(&q), Err(Error::DenominatorNotInvertible(_))));
    }
}
