//! Arithmetic over GF(2^k) for k <= 8, with fixed irreducible polynomials.
//!
//! The reduction polynomials are frozen for reproducibility of every table
//! derived from them (extractor tables, Clifford subgroup indexing, share
//! encodings):
//!
//! | k | polynomial                      | mask  |
//! |---|---------------------------------|-------|
//! | 1 | x + 1                           | 0x3   |
//! | 2 | x^2 + x + 1                     | 0x7   |
//! | 3 | x^3 + x + 1                     | 0xB   |
//! | 4 | x^4 + x + 1                     | 0x13  |
//! | 5 | x^5 + x^2 + 1                   | 0x25  |
//! | 6 | x^6 + x + 1                     | 0x43  |
//! | 7 | x^7 + x + 1                     | 0x83  |
//! | 8 | x^8 + x^4 + x^3 + x + 1         | 0x11B |

use crate::{Error, Result};

/// Frozen irreducible polynomials, indexed by k (index 0 unused).
pub const IRREDUCIBLE: [u16; 9] = [0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11B];

pub const MAX_K: usize = 8;

/// The field GF(2^k). Elements are the integers `0..2^k` in the polynomial
/// basis {1, x, ..., x^{k-1}}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf {
    k: u32,
}

impl Gf {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 || k as usize > MAX_K {
            return Err(Error::InvalidParams(format!(
                "GF(2^k) supported for 1 <= k <= {MAX_K}, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Field size q = 2^k.
    pub fn size(&self) -> u16 {
        1 << self.k
    }

    pub fn contains(&self, a: u16) -> bool {
        a < self.size()
    }

    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        let poly = IRREDUCIBLE[self.k as usize] as u32;
        let top = 1u32 << self.k;
        let mut acc = 0u32;
        let mut a = a as u32;
        let mut b = b as u32;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            a <<= 1;
            if a & top != 0 {
                a ^= poly;
            }
            b >>= 1;
        }
        acc as u16
    }

    pub fn pow(&self, mut a: u16, mut e: u64) -> u16 {
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
        if a == 0 {
            return Err(Error::FieldMismatch("inverse of zero".into()));
        }
        // a^(q-2) = a^{-1}.
        Ok(self.pow(a, (self.size() as u64) - 2))
    }

    /// Field trace tr(a) = a + a^2 + a^4 + ... + a^{2^{k-1}} in {0, 1}.
    pub fn trace(&self, a: u16) -> u16 {
        let mut acc = 0u16;
        let mut t = a;
        for _ in 0..self.k {
            acc ^= t;
            t = self.mul(t, t);
        }
        debug_assert!(acc <= 1);
        acc
    }

    /// Trace-dual basis of the polynomial basis {1, x, ..., x^{k-1}}:
    /// returns `f` with `tr(x^i * f[j]) = delta_ij`.
    pub fn dual_basis(&self) -> Vec<u16> {
        let k = self.k as usize;
        // Gram matrix over F2: G[i][j] = tr(e_i e_j); solve G * F = I.
        let e: Vec<u16> = (0..k).map(|i| 1u16 << i).collect();
        let mut rows: Vec<u32> = Vec::with_capacity(k);
        for i in 0..k {
            let mut aug = 0u32;
            for j in 0..k {
                if self.trace(self.mul(e[i], e[j])) == 1 {
                    aug |= 1 << j;
                }
            }
            aug |= 1 << (k + i); // identity augmentation
            rows.push(aug);
        }
        // Gauss-Jordan mod 2.
        for col in 0..k {
            let pivot = (col..k)
                .find(|&r| rows[r] >> col & 1 == 1)
                .expect("trace form is nondegenerate");
            rows.swap(col, pivot);
            for r in 0..k {
                if r != col && rows[r] >> col & 1 == 1 {
                    rows[r] ^= rows[col];
                }
            }
        }
        // f_j = sum_i Ginv[j][i] e_i; Ginv row j is the augmented part of row j.
        (0..k)
            .map(|j| {
                let mut f = 0u16;
                for i in 0..k {
                    if rows[j] >> (k + i) & 1 == 1 {
                        f ^= e[i];
                    }
                }
                f
            })
            .collect()
    }
}

/// Vector over GF(2^k); all elements reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVector {
    field: Gf,
    elems: Vec<u16>,
}

impl FieldVector {
    pub fn new(field: Gf, elems: Vec<u16>) -> Result<Self> {
        if let Some(e) = elems.iter().find(|e| !field.contains(**e)) {
            return Err(Error::FieldMismatch(format!(
                "element {e} outside GF(2^{})",
                field.k()
            )));
        }
        Ok(Self { field, elems })
    }

    pub fn zero(field: Gf, len: usize) -> Self {
        Self {
            field,
            elems: vec![0; len],
        }
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[u16] {
        &self.elems
    }

    pub fn is_zero(&self) -> bool {
        self.elems.iter().all(|&e| e == 0)
    }

    pub fn to_hex(&self) -> String {
        self.elems
            .iter()
            .map(|e| format!("{e:02x}"))
            .collect::<Vec<_>>()
            .join("")
    }

    pub fn from_hex(field: Gf, s: &str) -> Result<Self> {
        if s.len() % 2 != 0 {
            return Err(Error::FieldMismatch("odd hex length".into()));
        }
        let bytes = hex::decode(s).map_err(|e| Error::FieldMismatch(e.to_string()))?;
        Self::new(field, bytes.into_iter().map(u16::from).collect())
    }
}
