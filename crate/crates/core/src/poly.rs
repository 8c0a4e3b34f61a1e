//! Matrix-coefficient polynomials: evaluation and interpolation.
//!
//! Shares and coded blocks are evaluations of a degree-(K-1) polynomial
//! whose coefficients are matrices. Interpolation from K evaluations at
//! distinct points is the MDS decode step used everywhere downstream.

use thiserror::Error;

use crate::field::FieldElement;
use crate::matrix::{FMatrix, MatrixError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("evaluation points are not pairwise distinct")]
    SingularSystem,
    #[error("need as many evaluations as points ({points} points, {evals} evaluations)")]
    CountMismatch { points: usize, evals: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Horner evaluation of `sum_i coeffs[i] * x^i`.
pub fn poly_eval(coeffs: &[FMatrix], x: FieldElement) -> Result<FMatrix, PolyError> {
    assert!(!coeffs.is_empty(), "empty polynomial");
    let mut acc = coeffs[coeffs.len() - 1].clone();
    for c in coeffs.iter().rev().skip(1) {
        acc = acc.scale(x).add(c)?;
    }
    Ok(acc)
}

/// Recovers the K matrix coefficients of a degree-(K-1) polynomial from K
/// evaluations at pairwise distinct points.
///
/// Solved by expanding the Lagrange basis rather than eliminating the
/// Vandermonde system: the coefficient vector is
/// `C_i = sum_n evals[n] * l_{n,i}` where `l_{n,i}` is the x^i coefficient
/// of the n-th basis polynomial. O(K^2) scalar work per call plus one
/// matrix scaling per (n, i) pair.
pub fn vandermonde_solve(
    points: &[FieldElement],
    evals: &[FMatrix],
) -> Result<Vec<FMatrix>, PolyError> {
    let k = points.len();
    if evals.len() != k {
        return Err(PolyError::CountMismatch {
            points: k,
            evals: evals.len(),
        });
    }
    assert!(k > 0, "empty interpolation");
    for i in 0..k {
        for j in i + 1..k {
            if points[i] == points[j] {
                return Err(PolyError::SingularSystem);
            }
        }
    }
    let field = evals[0].field();
    for e in evals {
        // shape/field agreement is enforced by the adds below; check field
        // here for a clearer error on the first operand
        if e.field() != field {
            return Err(MatrixError::FieldMismatch {
                left: field.modulus(),
                right: e.field().modulus(),
            }
            .into());
        }
    }

    // Full product poly prod(x) = (x - x_0)...(x - x_{k-1}), degree k.
    let mut prod = vec![field.zero(); k + 1];
    prod[0] = field.one();
    for (deg, &pt) in points.iter().enumerate() {
        // multiply by (x - pt)
        for i in (0..=deg).rev() {
            let term = prod[i];
            prod[i + 1] = field.add(prod[i + 1], term);
            prod[i] = field.mul(term, field.neg(pt));
        }
    }

    let rows = evals[0].rows();
    let cols = evals[0].cols();
    let mut coeffs = vec![FMatrix::zero(field, rows, cols); k];
    for (n, &xn) in points.iter().enumerate() {
        // Synthetic division: prod(x) / (x - x_n), degree k-1.
        let mut basis = vec![field.zero(); k];
        let mut carry = prod[k];
        for i in (0..k).rev() {
            basis[i] = carry;
            carry = field.add(prod[i], field.mul(carry, xn));
        }
        // Denominator prod_{j != n} (x_n - x_j).
        let mut denom = field.one();
        for (j, &xj) in points.iter().enumerate() {
            if j != n {
                denom = field.mul(denom, field.sub(xn, xj));
            }
        }
        let denom_inv = field.inv(denom).expect("distinct points give nonzero denominator");
        for (i, coeff) in coeffs.iter_mut().enumerate() {
            let weight = field.mul(basis[i], denom_inv);
            *coeff = coeff.add(&evals[n].scale(weight))?;
        }
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn scalar(field: PrimeField, v: u64) -> FMatrix {
        FMatrix::from_rows(field, &[vec![v]]).unwrap()
    }

    #[test]
    fn scalar_polynomial_interpolates() {
        // mod 7, coefficients (1, 2, 3) at points 1, 2, 3 evaluate to (6, 3, 6)
        let f7 = f(7);
        let coeffs: Vec<_> = [1u64, 2, 3].iter().map(|&v| scalar(f7, v)).collect();
        let points: Vec<_> = [1u64, 2, 3].iter().map(|&v| f7.element(v)).collect();
        let evals: Vec<_> = points
            .iter()
            .map(|&x| poly_eval(&coeffs, x).unwrap())
            .collect();
        let eval_values: Vec<u64> = evals.iter().map(|e| e.get(0, 0).value()).collect();
        assert_eq!(eval_values, vec![6, 3, 6]);

        let solved = vandermonde_solve(&points, &evals).unwrap();
        assert_eq!(solved, coeffs);
    }

    #[test]
    fn constant_polynomial_yields_zero_high_coefficients() {
        let f11 = f(11);
        let e = FMatrix::from_rows(f11, &[vec![4, 9], vec![0, 3]]).unwrap();
        let points: Vec<_> = [2u64, 5, 7].iter().map(|&v| f11.element(v)).collect();
        let evals = vec![e.clone(), e.clone(), e.clone()];
        let solved = vandermonde_solve(&points, &evals).unwrap();
        assert_eq!(solved[0], e);
        assert!(solved[1].is_zero());
        assert!(solved[2].is_zero());
    }

    #[test]
    fn duplicate_points_are_singular() {
        let f7 = f(7);
        let points = vec![f7.element(2), f7.element(2)];
        let evals = vec![scalar(f7, 1), scalar(f7, 3)];
        assert_eq!(
            vandermonde_solve(&points, &evals),
            Err(PolyError::SingularSystem)
        );
    }

    #[test]
    fn matrix_coefficients_round_trip() {
        let f11 = f(11);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 2..=5usize {
            let coeffs: Vec<_> = (0..k).map(|_| FMatrix::random(f11, 3, 2, &mut rng)).collect();
            let points: Vec<_> = (1..=k as u64).map(|v| f11.element(v)).collect();
            let evals: Vec<_> = points
                .iter()
                .map(|&x| poly_eval(&coeffs, x).unwrap())
                .collect();
            assert_eq!(vandermonde_solve(&points, &evals).unwrap(), coeffs);
        }
    }

    proptest! {
        // Evaluate-then-solve reproduces random coefficients exactly for all
        // K <= N <= 6 over small primes.
        #[test]
        fn interpolation_round_trip(
            p in prop::sample::select(vec![7u64, 11]),
            n in 2usize..=6,
            k_offset in 0usize..5,
            seed in any::<u64>(),
        ) {
            let field = f(p);
            let k = 2 + k_offset % (n - 1).max(1);
            prop_assume!(k <= n && (n as u64) < p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<_> = (0..k).map(|_| FMatrix::random(field, 2, 2, &mut rng)).collect();
            // any K of the N points suffice; take a stride-1 window
            let start = 1 + (seed % (n - k + 1) as u64);
            let points: Vec<_> = (start..start + k as u64).map(|v| field.element(v)).collect();
            let evals: Vec<_> = points.iter().map(|&x| poly_eval(&coeffs, x).unwrap()).collect();
            prop_assert_eq!(vandermonde_solve(&points, &evals).unwrap(), coeffs);
        }
    }
}
