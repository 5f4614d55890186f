use crate::qmatrix::{c, CMatrix};
use crate::{Error, Result};
use num_complex::Complex64;

/// Hard cap on dense realizations.
pub const MAX_DENSE_QUBITS: usize = 12;

/// n-qubit Pauli operator `i^phase * X^x Z^z` in the symplectic (bit-vector)
/// representation. Bit `j` of `x`/`z` refers to qubit `j`, which sits on the
/// `j`-th Kronecker factor from the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOp {
    n: usize,
    x: u32,
    z: u32,
    phase: u8,
}

impl PauliOp {
    pub fn new(n: usize, x: u32, z: u32, phase: u8) -> Self {
        debug_assert!(n <= 32);
        let mask = mask(n);
        Self {
            n,
            x: x & mask,
            z: z & mask,
            phase: phase & 3,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, 0, 0)
    }

    /// Hermitian representative `i^{x.z} X^x Z^z` of the phaseless class.
    pub fn hermitian(n: usize, x: u32, z: u32) -> Self {
        Self::new(n, x, z, (x & z).count_ones() as u8)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u32 {
        self.x
    }

    pub fn z_bits(&self) -> u32 {
        self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    /// Label in `0..4^n`: `x` bits first (low), then `z` bits.
    pub fn label(&self) -> u64 {
        (self.x as u64) | ((self.z as u64) << self.n)
    }

    pub fn from_label(n: usize, label: u64) -> Self {
        let x = (label & mask(n) as u64) as u32;
        let z = ((label >> n) & mask(n) as u64) as u32;
        Self::hermitian(n, x, z)
    }

    pub fn is_identity_class(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self::new(self.n, self.x, self.z, phase)
    }

    /// Same Pauli class modulo phase.
    pub fn same_class(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    /// Product with exact phase tracking:
    /// `(X^a Z^b)(X^c Z^d) = (-1)^{b.c} X^{a^c} Z^{b^d}`.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let sign_swaps = (self.z & other.x).count_ones() as u8;
        Self::new(
            self.n,
            self.x ^ other.x,
            self.z ^ other.z,
            self.phase.wrapping_add(other.phase).wrapping_add(2 * sign_swaps),
        )
    }

    pub fn adjoint(&self) -> Self {
        // (i^p X^a Z^b)† = (-i)^p (-1)^{a.b} X^a Z^b.
        let sign = 2 * ((self.x & self.z).count_ones() as u8);
        Self::new(self.n, self.x, self.z, (4 - self.phase).wrapping_add(sign))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let form = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        form % 2 == 0
    }

    /// Dense `2^n x 2^n` realization.
    pub fn dense(&self) -> Result<CMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::DimensionCap(format!(
                "dense Pauli on {} qubits exceeds the {MAX_DENSE_QUBITS}-qubit cap",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        let ph = Complex64::i().powu(self.phase as u32);
        for col in 0..dim {
            // X^x Z^z |u> = (-1)^{z.u} |u ^ x>, with bit j of u on qubit j
            // (qubit 0 = leftmost Kronecker factor = high basis bit).
            let u = bits_from_index(col, self.n);
            let sign = if (self.z & u).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let row = index_from_bits(u ^ self.x, self.n);
            m[(row, col)] = ph * c(sign, 0.0);
        }
        Ok(m)
    }

    /// Parse textual notation like `"XIZ"`, `"-YY"`, `"+iXZ"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1u8, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3u8, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0u8, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2u8, r)
        } else {
            (0u8, s)
        };
        let n = rest.chars().count();
        if n == 0 || n > 32 {
            return Err(Error::InvalidParams(format!("bad Pauli string {s:?}")));
        }
        let mut x = 0u32;
        let mut z = 0u32;
        let mut y_count = 0u8;
        for (j, ch) in rest.chars().enumerate() {
            let bit = 1u32 << j;
            match ch {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                    y_count = y_count.wrapping_add(1);
                }
                _ => {
                    return Err(Error::InvalidParams(format!(
                        "bad Pauli letter {ch:?} in {s:?}"
                    )))
                }
            }
        }
        // Y = i X Z, so each Y contributes one factor of i.
        Ok(Self::new(n, x, z, phase.wrapping_add(y_count)))
    }

    /// Textual form; includes a sign prefix when the phase relative to the
    /// letter convention (`Y = iXZ`) is nontrivial.
    pub fn to_text(&self) -> String {
        let mut letters = String::with_capacity(self.n);
        let mut y_count = 0u8;
        for j in 0..self.n {
            let xb = self.x >> j & 1 == 1;
            let zb = self.z >> j & 1 == 1;
            letters.push(match (xb, zb) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => {
                    y_count = y_count.wrapping_add(1);
                    'Y'
                }
            });
        }
        let rel = self.phase.wrapping_sub(y_count) & 3;
        let prefix = match rel {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        format!("{prefix}{letters}")
    }

    /// All 4^n phaseless Pauli classes (Hermitian representatives) in label
    /// order.
    pub fn enumerate_classes(n: usize) -> impl Iterator<Item = PauliOp> {
        (0..(1u64 << (2 * n))).map(move |label| PauliOp::from_label(n, label))
    }
}

fn mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Qubit-bit vector -> basis index (qubit 0 is the leftmost factor, i.e. the
/// most significant bit of the index).
pub fn index_from_bits(bits: u32, n: usize) -> usize {
    let mut idx = 0usize;
    for j in 0..n {
        idx = (idx << 1) | ((bits >> j & 1) as usize);
    }
    idx
}

/// Basis index -> qubit-bit vector.
pub fn bits_from_index(idx: usize, n: usize) -> u32 {
    let mut bits = 0u32;
    for j in 0..n {
        if idx >> (n - 1 - j) & 1 == 1 {
            bits |= 1 << j;
        }
    }
    bits
}

/// Pauli decomposition of a square matrix of dimension `2^n`:
/// returns the coefficients `alpha_P = Tr(P† M) / 2^n` over the 4^n
/// Hermitian class representatives, in label order.
pub fn pauli_decompose(m: &CMatrix) -> Result<Vec<(PauliOp, Complex64)>> {
    let dim = m.nrows();
    if dim != m.ncols() || !dim.is_power_of_two() {
        return Err(Error::InvalidParams(format!(
            "Pauli decomposition needs a square 2^n-dim matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    let mut out = Vec::with_capacity(1usize << (2 * n));
    for p in PauliOp::enumerate_classes(n) {
        let pd = p.dense()?;
        let coeff = (pd.adjoint() * m).diagonal().iter().sum::<Complex64>() / c(dim as f64, 0.0);
        out.push((p, coeff));
    }
    Ok(out)
}
