//! Register-aware dense complex-matrix algebra: tensor products, partial
//! traces, register permutations, and Hermitian eigendecomposition.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so evaluation is safe to parallelize at any granularity.

mod eig;
mod layout;
mod matrix;

pub use eig::{clip_spectrum, hermitian_eigensystem, validate_density, DensityVerdict, HermitianSpectrum};
pub use layout::{Register, RegisterLayout};
pub use matrix::{cabs, ComplexMatrix};

pub(crate) use layout::MultiIndex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the total Hilbert-space dimension of any constructed
/// operator. Four qubits per party plus relay systems fit comfortably.
pub const DEFAULT_D_MAX: usize = 256;

/// Kronecker product of two square operators, `a`'s registers preceding
/// `b`'s. Fails when the product dimension exceeds `d_max`.
pub fn tensor_product<R: Scalar>(
    a: &ComplexMatrix<R>,
    b: &ComplexMatrix<R>,
    d_max: usize,
) -> Result<ComplexMatrix<R>> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(
            "tensor_product expects square operators".into(),
        ));
    }
    let total = a
        .rows()
        .checked_mul(b.rows())
        .ok_or_else(|| Error::Dimension("tensor product dimension overflows usize".into()))?;
    if total > d_max {
        return Err(Error::Dimension(format!(
            "tensor product dimension {total} exceeds the configured maximum {d_max}"
        )));
    }
    Ok(a.kron(b))
}

/// Trace out every register of `layout` not named in `keep`; the result
/// lives on the kept registers in their original relative order.
pub fn partial_trace<R: Scalar>(
    m: &ComplexMatrix<R>,
    layout: &RegisterLayout,
    keep: &[&str],
) -> Result<ComplexMatrix<R>> {
    if keep.is_empty() {
        return Err(Error::Layout("partial_trace must keep at least one register".into()));
    }
    let total = layout.total_dim();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "operator is {}×{} but the layout has total dimension {total}",
            m.rows(),
            m.cols()
        )));
    }
    for name in keep {
        layout.position(name)?;
    }
    let strides = layout.strides();
    let kept_positions: Vec<usize> = (0..layout.len())
        .filter(|&p| keep.contains(&layout.registers()[p].name.as_str()))
        .collect();
    let traced_positions: Vec<usize> =
        (0..layout.len()).filter(|p| !kept_positions.contains(p)).collect();

    // flat offsets contributed by every kept (resp. traced) digit tuple
    let offsets = |positions: &[usize]| -> Vec<usize> {
        let dims: Vec<usize> = positions.iter().map(|&p| layout.registers()[p].dim).collect();
        MultiIndex::new(dims)
            .map(|digits| {
                digits
                    .iter()
                    .zip(positions)
                    .map(|(d, &p)| d * strides[p])
                    .sum()
            })
            .collect()
    };
    let kept_offsets = offsets(&kept_positions);
    let traced_offsets = offsets(&traced_positions);

    let kd = kept_offsets.len();
    let mut out = ComplexMatrix::zeros(kd, kd);
    for (p, &po) in kept_offsets.iter().enumerate() {
        for (q, &qo) in kept_offsets.iter().enumerate() {
            let mut acc = num_complex::Complex::new(R::zero(), R::zero());
            for &to in &traced_offsets {
                acc += m[(po + to, qo + to)];
            }
            out[(p, q)] = acc;
        }
    }
    Ok(out)
}

/// Reorder the tensor factors of `m` to `new_order` (a permutation of the
/// layout's register names). The spectrum is unchanged.
pub fn permute_registers<R: Scalar>(
    m: &ComplexMatrix<R>,
    layout: &RegisterLayout,
    new_order: &[&str],
) -> Result<ComplexMatrix<R>> {
    let total = layout.total_dim();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "operator is {}×{} but the layout has total dimension {total}",
            m.rows(),
            m.cols()
        )));
    }
    let new_layout = layout.permuted(new_order)?;
    if new_layout.len() != layout.len() {
        return Err(Error::Layout("new_order is not a permutation".into()));
    }
    let old_strides = layout.strides();
    let new_strides = new_layout.strides();
    // source position in the old layout of each new register slot
    let source: Vec<usize> = new_order
        .iter()
        .map(|name| layout.position(name))
        .collect::<Result<_>>()?;

    // map old flat index -> new flat index
    let dims = layout.dims();
    let mut index_map = vec![0usize; total];
    for digits in MultiIndex::new(dims) {
        let old: usize = digits
            .iter()
            .zip(&old_strides)
            .map(|(d, s)| d * s)
            .sum();
        let new: usize = source
            .iter()
            .zip(&new_strides)
            .map(|(&p, s)| digits[p] * s)
            .sum();
        index_map[old] = new;
    }

    let mut out = ComplexMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            out[(index_map[i], index_map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}
