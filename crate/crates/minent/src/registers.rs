//! Named registers and the tensor-product spaces they span.
//!
//! A [`RegisterSpace`] is an ordered list of `(label, dimension)` pairs. The
//! order fixes the Kronecker layout of every matrix living on the space:
//! earlier registers vary more slowly. Register order is always explicit;
//! operations that need a different layout permute first and say so.

use crate::{Error, Result};

/// One named register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub label: String,
    pub dim: usize,
}

/// An ordered list of named registers with unique labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterSpace {
    registers: Vec<Register>,
}

impl RegisterSpace {
    /// Build a space from `(label, dim)` pairs. Labels must be unique and
    /// dimensions positive.
    pub fn new<S: Into<String>>(regs: Vec<(S, usize)>) -> Result<Self> {
        let registers: Vec<Register> = regs
            .into_iter()
            .map(|(l, d)| Register {
                label: l.into(),
                dim: d,
            })
            .collect();
        for r in &registers {
            if r.dim == 0 {
                return Err(Error::Labeling(format!(
                    "register {} has dimension 0",
                    r.label
                )));
            }
        }
        for i in 0..registers.len() {
            for j in (i + 1)..registers.len() {
                if registers[i].label == registers[j].label {
                    return Err(Error::Labeling(format!(
                        "duplicate register label {}",
                        registers[i].label
                    )));
                }
            }
        }
        Ok(RegisterSpace { registers })
    }

    /// Single-register space.
    pub fn single<S: Into<String>>(label: S, dim: usize) -> Result<Self> {
        Self::new(vec![(label, dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn labels(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn num_registers(&self) -> usize {
        self.registers.len()
    }

    /// Product of the register dimensions.
    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.registers.iter().any(|r| r.label == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.registers.iter().position(|r| r.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .map(|i| self.registers[i].dim)
            .ok_or_else(|| Error::Labeling(format!("unknown register {label}")))
    }

    /// Product of the dimensions of the given labels.
    pub fn dim_of_labels(&self, labels: &[&str]) -> Result<usize> {
        let mut d = 1usize;
        for l in labels {
            d *= self.dim_of(l)?;
        }
        Ok(d)
    }

    /// Concatenate two spaces; labels must be disjoint.
    pub fn join(&self, other: &RegisterSpace) -> Result<RegisterSpace> {
        for r in &other.registers {
            if self.contains(&r.label) {
                return Err(Error::Labeling(format!(
                    "register {} appears on both sides of a tensor product",
                    r.label
                )));
            }
        }
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Ok(RegisterSpace { registers: regs })
    }

    /// Subspace obtained by keeping only `labels`, in the order of `self`.
    pub fn restrict(&self, labels: &[&str]) -> Result<RegisterSpace> {
        for l in labels {
            if !self.contains(l) {
                return Err(Error::Labeling(format!("unknown register {l}")));
            }
        }
        let regs = self
            .registers
            .iter()
            .filter(|r| labels.contains(&r.label.as_str()))
            .cloned()
            .collect();
        Ok(RegisterSpace { registers: regs })
    }

    /// Labels of `self` not in `labels`.
    pub fn complement(&self, labels: &[&str]) -> Vec<String> {
        self.registers
            .iter()
            .filter(|r| !labels.contains(&r.label.as_str()))
            .map(|r| r.label.clone())
            .collect()
    }

    /// Decompose a flat index into per-register indices (row-major, first
    /// register slowest).
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = idx % dims[k];
            idx /= dims[k];
        }
        out
    }

    /// Flatten per-register indices into a flat index.
    pub fn flatten(&self, multi: &[usize]) -> usize {
        let dims = self.dims();
        let mut idx = 0usize;
        for k in 0..dims.len() {
            idx = idx * dims[k] + multi[k];
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_labels() {
        assert!(RegisterSpace::new(vec![("A", 2), ("A", 3)]).is_err());
    }

    #[test]
    fn rejects_zero_dim() {
        assert!(RegisterSpace::new(vec![("A", 0)]).is_err());
    }

    #[test]
    fn total_dim_is_product() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 3), ("C", 4)]).unwrap();
        assert_eq!(s.total_dim(), 24);
    }

    #[test]
    fn flatten_roundtrip() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 3), ("C", 2)]).unwrap();
        for i in 0..s.total_dim() {
            assert_eq!(s.flatten(&s.unflatten(i)), i);
        }
    }

    #[test]
    fn join_rejects_overlap() {
        let a = RegisterSpace::single("A", 2).unwrap();
        let b = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        assert!(a.join(&b).is_err());
    }
}
