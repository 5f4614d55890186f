use crate::{Error, Result};

/// Arithmetic mod a small prime `q` (share alphabets for Shamir schemes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u16,
}

impl PrimeField {
    pub fn new(q: u16) -> Result<Self> {
        if q < 2 || !is_prime(q) {
            return Err(Error::InvalidParams(format!("{q} is not prime")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn add(&self, a: u16, b: u16) -> u16 {
        ((a as u32 + b as u32) % self.q as u32) as u16
    }

    pub fn sub(&self, a: u16, b: u16) -> u16 {
        ((a as u32 + self.q as u32 - b as u32 % self.q as u32) % self.q as u32) as u16
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        ((a as u32 * b as u32) % self.q as u32) as u16
    }

    pub fn pow(&self, mut a: u16, mut e: u32) -> u16 {
        let mut acc = 1u16;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u16) -> Result<u16> {
        if a % self.q == 0 {
            return Err(Error::FieldMismatch("inverse of zero".into()));
        }
        Ok(self.pow(a % self.q, self.q as u32 - 2))
    }

    /// Evaluate a polynomial given by its coefficients (constant term
    /// first).
    pub fn eval_poly(&self, coeffs: &[u16], x: u16) -> u16 {
        coeffs
            .iter()
            .rev()
            .fold(0u16, |acc, &c_| self.add(self.mul(acc, x), c_))
    }
}

pub fn is_prime(n: u16) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u16;
    while (d as u32 * d as u32) <= n as u32 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small_primes() {
        for q in [2u16, 3, 5, 7, 11, 13] {
            let f = PrimeField::new(q).unwrap();
            for a in 0..q {
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert_eq!(f.add(a, f.sub(b, a)), b);
                }
            }
        }
        assert!(PrimeField::new(9).is_err());
    }
}
