//! Named, ordered quantum registers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named registers; the addressing scheme for every
/// multipartite matrix in the crate.
///
/// Ordering is significant: basis index `i` decomposes into per-register
/// digits with the FIRST register most significant (row-major), so
/// `|i₀ i₁ … i_{k−1}⟩` sits at `Σ_j i_j · stride_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: Vec<(S, usize)>) -> Result<Self> {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, dim)| Register { name: name.into(), dim })
            .collect();
        if registers.is_empty() {
            return Err(Error::Layout("layout needs at least one register".into()));
        }
        let mut total: usize = 1;
        for r in &registers {
            if r.dim == 0 {
                return Err(Error::Layout(format!("register {} has dimension 0", r.name)));
            }
            total = total
                .checked_mul(r.dim)
                .ok_or_else(|| Error::Dimension("total dimension overflows usize".into()))?;
        }
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|s| s.name == r.name) {
                return Err(Error::Layout(format!("duplicate register name {}", r.name)));
            }
        }
        Ok(RegisterLayout { registers })
    }

    /// Single-register layout.
    pub fn single(name: &str, dim: usize) -> Result<Self> {
        Self::new(vec![(name, dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::Layout(format!("unknown register {name}")))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    /// Row-major strides: `stride_j = Π_{m>j} dim_m`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.registers.len()];
        for j in (0..self.registers.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.registers[j + 1].dim;
        }
        strides
    }

    /// Flat basis index of the digit tuple `digits` (one digit per register).
    pub fn flat_index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.registers.len());
        self.strides()
            .iter()
            .zip(digits)
            .map(|(s, d)| s * d)
            .sum()
    }

    /// Sub-layout of the named registers, kept in their ORIGINAL order.
    pub fn subset(&self, keep: &[&str]) -> Result<RegisterLayout> {
        for name in keep {
            self.position(name)?;
        }
        let registers: Vec<Register> = self
            .registers
            .iter()
            .filter(|r| keep.contains(&r.name.as_str()))
            .cloned()
            .collect();
        if registers.is_empty() {
            return Err(Error::Layout("subset keeps no registers".into()));
        }
        Ok(RegisterLayout { registers })
    }

    /// Names not in `drop`, in original order.
    pub fn complement(&self, drop: &[&str]) -> Vec<&str> {
        self.registers
            .iter()
            .map(|r| r.name.as_str())
            .filter(|n| !drop.contains(n))
            .collect()
    }

    /// This layout followed by `other`; names must stay unique.
    pub fn concat(&self, other: &RegisterLayout) -> Result<RegisterLayout> {
        let mut registers = self.registers.clone();
        registers.extend(other.registers.iter().cloned());
        RegisterLayout::new(
            registers
                .into_iter()
                .map(|r| (r.name, r.dim))
                .collect::<Vec<_>>(),
        )
    }

    /// Append one register at the end.
    pub fn with_appended(&self, name: &str, dim: usize) -> Result<RegisterLayout> {
        self.concat(&RegisterLayout::single(name, dim)?)
    }

    /// Same dims, new names (positional).
    pub fn renamed<S: Into<String>>(&self, names: Vec<S>) -> Result<RegisterLayout> {
        if names.len() != self.registers.len() {
            return Err(Error::Layout(format!(
                "expected {} names, got {}",
                self.registers.len(),
                names.len()
            )));
        }
        RegisterLayout::new(
            names
                .into_iter()
                .zip(self.registers.iter())
                .map(|(n, r)| (n, r.dim))
                .collect(),
        )
    }

    /// Reordered layout; `order` must be a permutation of the names.
    pub fn permuted(&self, order: &[&str]) -> Result<RegisterLayout> {
        if order.len() != self.registers.len() {
            return Err(Error::Layout(format!(
                "permutation lists {} of {} registers",
                order.len(),
                self.registers.len()
            )));
        }
        let mut registers = Vec::with_capacity(order.len());
        for name in order {
            let pos = self.position(name)?;
            registers.push(self.registers[pos].clone());
        }
        // duplicate names in `order` would collide here
        RegisterLayout::new(
            registers
                .into_iter()
                .map(|r| (r.name, r.dim))
                .collect::<Vec<_>>(),
        )
    }
}

/// Iterate all digit tuples of the given dims in row-major order.
pub(crate) struct MultiIndex {
    dims: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub(crate) fn new(dims: Vec<usize>) -> Self {
        let done = dims.contains(&0);
        let current = vec![0; dims.len()];
        MultiIndex { dims, current, done }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // increment last digit first
        let mut j = self.dims.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.current[j] += 1;
            if self.current[j] < self.dims[j] {
                break;
            }
            self.current[j] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_is_product_and_ordering_is_kept() {
        let l = RegisterLayout::new(vec![("A", 2), ("B", 3), ("C", 4)]).unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.names(), vec!["A", "B", "C"]);
        assert_eq!(l.strides(), vec![12, 4, 1]);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(RegisterLayout::new(vec![("A", 2), ("A", 2)]).is_err());
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(RegisterLayout::new(vec![("A", 0)]).is_err());
    }

    #[test]
    fn subset_preserves_original_order() {
        let l = RegisterLayout::new(vec![("A", 2), ("B", 3), ("C", 4)]).unwrap();
        let s = l.subset(&["C", "A"]).unwrap();
        assert_eq!(s.names(), vec!["A", "C"]);
    }

    #[test]
    fn unknown_register_is_layout_error() {
        let l = RegisterLayout::new(vec![("A", 2)]).unwrap();
        assert!(matches!(l.subset(&["Z"]), Err(Error::Layout(_))));
    }

    #[test]
    fn serde_round_trip_preserves_order() {
        let l = RegisterLayout::new(vec![("B", 3), ("A", 2)]).unwrap();
        let json = serde_json::to_string(&l).unwrap();
        let back: RegisterLayout = serde_json::from_str(&json).unwrap();
        assert_eq!(l, back);
        assert_eq!(back.names(), vec!["B", "A"]);
    }

    #[test]
    fn multi_index_counts_row_major() {
        let all: Vec<_> = MultiIndex::new(vec![2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
    }
}
