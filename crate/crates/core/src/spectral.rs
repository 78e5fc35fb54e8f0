//! Determinant, rank, inertia and eigenvalue counts read off a congruent
//! diagonal.
//!
//! By Sylvester's law of inertia the signs of any diagonal matrix congruent to
//! `M` count the positive, negative and zero eigenvalues of `M`. Applied to
//! `M - cI` this counts the eigenvalues at most `c`; two such counts give the
//! number of eigenvalues in a half-open interval `(a, b]`.

use std::fmt;

use thiserror::Error;

use crate::boxes::{congruent_diagonal, BoxError, DiagOptions, DiagonalArray};
use crate::field::{Field, Sign};
use crate::matrix::SparseSymmetricMatrix;
use crate::treedecomp::NiceTreeDecomposition;

/// Numbers of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Inertia {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl Inertia {
    pub fn from_signs(signs: impl IntoIterator<Item = Sign>) -> Self {
        let mut i = Inertia::default();
        for s in signs {
            match s {
                Sign::Positive => i.n_plus += 1,
                Sign::Negative => i.n_minus += 1,
                Sign::Zero => i.n_zero += 1,
            }
        }
        i
    }

    pub fn order(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    pub fn rank(&self) -> usize {
        self.n_plus + self.n_minus
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n_plus, self.n_minus, self.n_zero)
    }
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("empty interval: the lower end must be below the upper end")]
    InvalidInterval,
    #[error(transparent)]
    Diagonalization(#[from] BoxError),
}

pub fn inertia<F: Field>(d: &DiagonalArray<F>) -> Inertia {
    let f = d.field();
    Inertia::from_signs(d.pairs().iter().map(|(_, x)| f.sign(x)))
}

/// Number of nonzero diagonal values.
pub fn rank<F: Field>(d: &DiagonalArray<F>) -> usize {
    let f = d.field();
    d.pairs().iter().filter(|(_, x)| !f.is_zero(x)).count()
}

/// Product of the diagonal values.
pub fn determinant<F: Field>(d: &DiagonalArray<F>) -> F::Elem {
    let f = d.field();
    d.pairs()
        .iter()
        .fold(f.one(), |acc, (_, x)| f.mul(&acc, x))
}

/// A point of the extended real line.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound<E> {
    NegInfinity,
    Finite(E),
    PosInfinity,
}

/// An eigenvalue count. In the real field the count is flagged when some
/// diagonal value was within ten times the zero threshold, where rounding
/// may have flipped a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenCount {
    pub count: usize,
    pub tolerance_sensitive: bool,
}

/// True in the real field when some diagonal value lies within ten times the
/// zero threshold.
pub fn tolerance_sensitive<F: Field>(d: &DiagonalArray<F>) -> bool {
    let f = d.field();
    !f.is_exact() && d.pairs().iter().any(|(_, x)| f.near_zero(x, 10.0))
}

/// Inertia of `M - cI`, computed along `nice`.
pub fn shifted_inertia<F: Field>(
    matrix: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    c: &F::Elem,
) -> Result<(Inertia, bool), SpectralError> {
    let shifted = matrix.shift_diagonal(c);
    let run = congruent_diagonal(&shifted, nice, DiagOptions::default())?;
    Ok((inertia(&run.diagonal), tolerance_sensitive(&run.diagonal)))
}

/// Number of eigenvalues of `matrix` that are `<= c`.
pub fn count_eigenvalues_leq<F: Field>(
    matrix: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    c: &Bound<F::Elem>,
) -> Result<EigenCount, SpectralError> {
    match c {
        Bound::NegInfinity => Ok(EigenCount {
            count: 0,
            tolerance_sensitive: false,
        }),
        Bound::PosInfinity => Ok(EigenCount {
            count: matrix.order(),
            tolerance_sensitive: false,
        }),
        Bound::Finite(c) => {
            let (i, tolerance_sensitive) = shifted_inertia(matrix, nice, c)?;
            Ok(EigenCount {
                count: i.n_minus + i.n_zero,
                tolerance_sensitive,
            })
        }
    }
}

/// Number of eigenvalues in the half-open interval `(a, b]`.
pub fn count_eigenvalues_in<F: Field>(
    matrix: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    a: &Bound<F::Elem>,
    b: &Bound<F::Elem>,
) -> Result<EigenCount, SpectralError> {
    let f = matrix.field();
    let ordered = match (a, b) {
        (Bound::NegInfinity, Bound::NegInfinity) | (Bound::PosInfinity, _) => false,
        (Bound::NegInfinity, _) | (_, Bound::PosInfinity) => true,
        (Bound::Finite(x), Bound::Finite(y)) => f.sign(&f.sub(y, x)) == Sign::Positive,
        (Bound::Finite(_), Bound::NegInfinity) => false,
    };
    if !ordered {
        return Err(SpectralError::InvalidInterval);
    }
    let upper = count_eigenvalues_leq(matrix, nice, b)?;
    let lower = count_eigenvalues_leq(matrix, nice, a)?;
    Ok(EigenCount {
        count: upper.count - lower.count,
        tolerance_sensitive: upper.tolerance_sensitive || lower.tolerance_sensitive,
    })
}
