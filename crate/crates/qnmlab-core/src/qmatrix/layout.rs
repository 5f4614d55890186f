use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ordered list of named registers; the total Hilbert-space dimension is the
/// product of the register dimensions, with the first register on the
/// slowest (leftmost) Kronecker axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<(impl Into<String>, usize)>) -> Result<Self> {
        let registers: Vec<(String, usize)> =
            registers.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (label, dim) in &registers {
            if *dim == 0 {
                return Err(Error::InvalidParams(format!(
                    "register {label} has dimension 0"
                )));
            }
        }
        for i in 0..registers.len() {
            for j in i + 1..registers.len() {
                if registers[i].0 == registers[j].0 {
                    return Err(Error::LabelCollision(registers[i].0.clone()));
                }
            }
        }
        Ok(Self { registers })
    }

    /// Single-register layout.
    pub fn single(label: impl Into<String>, dim: usize) -> Self {
        Self::new(vec![(label.into(), dim)]).expect("single register is always valid")
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|(_, d)| d).product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.registers[self.index_of(label)?].1)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.registers.iter().any(|(l, _)| l == label)
    }

    /// Concatenation of two layouts; labels must stay unique.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut regs = self.registers.clone();
        for (l, d) in &other.registers {
            if self.contains(l) {
                return Err(Error::LabelCollision(l.clone()));
            }
            regs.push((l.clone(), *d));
        }
        Ok(Self { registers: regs })
    }

    /// Layout with the given labels removed.
    pub fn without(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.index_of(l)?;
        }
        Ok(Self {
            registers: self
                .registers
                .iter()
                .filter(|(l, _)| !labels.contains(&l.as_str()))
                .cloned()
                .collect(),
        })
    }

    /// Decompose a flat basis index into per-register indices.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.registers.len()];
        for (slot, (_, dim)) in self.registers.iter().enumerate().rev() {
            out[slot] = index % dim;
            index /= dim;
        }
        out
    }

    /// Flatten per-register indices back into a basis index.
    pub fn flatten(&self, indices: &[usize]) -> usize {
        assert_eq!(indices.len(), self.registers.len());
        let mut out = 0;
        for ((_, dim), &i) in self.registers.iter().zip(indices) {
            debug_assert!(i < *dim);
            out = out * dim + i;
        }
        out
    }
}
