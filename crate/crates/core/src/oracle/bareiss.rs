use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::field::Exact;
use crate::matrix::SparseSymmetricMatrix;

/// Determinant of a square integer matrix by fraction-free elimination.
pub fn integer_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        return BigInt::one();
    }
    sign * &a[n - 1][n - 1]
}

/// Determinant of a rational symmetric matrix: every row is scaled by the
/// lcm of its denominators and the integer determinant is divided back.
pub fn bareiss_determinant(m: &SparseSymmetricMatrix<Exact>) -> BigRational {
    let n = m.order();
    let mut scale = BigInt::one();
    let mut rows = Vec::with_capacity(n);
    for u in 1..=n {
        let row: Vec<BigRational> = (1..=n).map(|v| m.entry(u, v)).collect();
        let lcm = row
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        rows.push(
            row.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect(),
        );
        scale *= lcm;
    }
    BigRational::new(integer_determinant(rows), scale)
}
