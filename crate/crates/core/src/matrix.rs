//! Dense row-major matrices over a prime field.
//!
//! All protocol data (the confidential matrix, the public library, shares,
//! blocks, answers) is carried as [`FMatrix`]. Operations are exact modular
//! arithmetic; shape or field mismatches are errors, never silent wraps.

use rand::Rng;
use thiserror::Error;

use crate::field::{FieldElement, PrimeField};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("dimension mismatch: {context} (left {left_rows}x{left_cols}, right {right_rows}x{right_cols})")]
    DimMismatch {
        context: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("operands belong to different fields (p={left} vs p={right})")]
    FieldMismatch { left: u64, right: u64 },
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape { rows: usize, cols: usize, len: usize },
}

/// A `rows x cols` matrix with entries in the field it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FMatrix {
    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        FMatrix {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Builds a matrix from row-major raw values, reducing each mod p.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(MatrixError::BadShape {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            data.extend(row.iter().map(|&v| field.element(v)));
        }
        Ok(FMatrix {
            field,
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_elements(
        field: PrimeField,
        rows: usize,
        cols: usize,
        data: Vec<FieldElement>,
    ) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(FMatrix {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Uniform i.i.d. entries drawn from the given RNG.
    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let p = field.modulus();
        let data = (0..rows * cols)
            .map(|_| field.element(rng.gen_range(0..p)))
            .collect();
        FMatrix {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.data
    }

    /// Number of field symbols held (rows x cols).
    pub fn symbol_count(&self) -> u64 {
        (self.rows * self.cols) as u64
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.value() == 0)
    }

    fn check_field(&self, other: &FMatrix) -> Result<(), MatrixError> {
        if self.field != other.field {
            return Err(MatrixError::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &FMatrix, context: &'static str) -> Result<(), MatrixError> {
        self.check_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::DimMismatch {
                context,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FMatrix) -> Result<FMatrix, MatrixError> {
        self.check_same_shape(other, "entrywise add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.field.add(a, b))
            .collect();
        Ok(FMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &FMatrix) -> Result<FMatrix, MatrixError> {
        self.check_same_shape(other, "entrywise sub")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.field.sub(a, b))
            .collect();
        Ok(FMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: FieldElement) -> FMatrix {
        let data = self.data.iter().map(|&a| self.field.mul(a, s)).collect();
        FMatrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Exact product over `F_p`.
    pub fn mat_mul(&self, other: &FMatrix) -> Result<FMatrix, MatrixError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(MatrixError::DimMismatch {
                context: "mat_mul inner dimension",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let f = self.field;
        let p = u128::from(f.modulus());
        let mut out = FMatrix::zero(f, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: u128 = 0;
                for t in 0..self.cols {
                    acc = (acc
                        + u128::from(self.get(i, t).value()) * u128::from(other.get(t, j).value()))
                        % p;
                }
                out.set(i, j, f.element(acc as u64));
            }
        }
        Ok(out)
    }

    /// Copies rows `[start, start+count)` into a new matrix.
    pub fn row_slice(&self, start: usize, count: usize) -> FMatrix {
        assert!(start + count <= self.rows, "row_slice out of range");
        let data = self.data[start * self.cols..(start + count) * self.cols].to_vec();
        FMatrix {
            field: self.field,
            rows: count,
            cols: self.cols,
            data,
        }
    }

    /// Stacks matrices vertically; all must share field and column count.
    pub fn vstack(parts: &[FMatrix]) -> Result<FMatrix, MatrixError> {
        assert!(!parts.is_empty(), "vstack of zero matrices");
        let first = &parts[0];
        let mut data = Vec::new();
        let mut rows = 0;
        for part in parts {
            first.check_field(part)?;
            if part.cols != first.cols {
                return Err(MatrixError::DimMismatch {
                    context: "vstack column count",
                    left_rows: first.rows,
                    left_cols: first.cols,
                    right_rows: part.rows,
                    right_cols: part.cols,
                });
            }
            rows += part.rows;
            data.extend_from_slice(&part.data);
        }
        Ok(FMatrix {
            field: first.field,
            rows,
            cols: first.cols,
            data,
        })
    }

    /// Appends zero rows until the matrix has `target_rows` rows.
    pub fn pad_rows(&self, target_rows: usize) -> FMatrix {
        assert!(target_rows >= self.rows, "pad_rows would truncate");
        let mut data = self.data.clone();
        data.resize(target_rows * self.cols, self.field.zero());
        FMatrix {
            field: self.field,
            rows: target_rows,
            cols: self.cols,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    /// Independent schoolbook triple loop, reducing with plain integer math.
    fn schoolbook(a: &FMatrix, b: &FMatrix) -> Vec<Vec<u64>> {
        let p = a.field().modulus();
        let mut out = vec![vec![0u64; b.cols()]; a.rows()];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = 0u64;
                for t in 0..a.cols() {
                    acc = (acc + a.get(i, t).value() * b.get(t, j).value() % p) % p;
                }
                *cell = acc;
            }
        }
        out
    }

    #[test]
    fn identity_is_left_neutral() {
        let f5 = f(5);
        let y = FMatrix::from_rows(f5, &[vec![1, 2], vec![3, 4], vec![0, 2]]).unwrap();
        let i = FMatrix::identity(f5, 3);
        assert_eq!(i.mat_mul(&y).unwrap(), y);
    }

    #[test]
    fn row_times_column_reduces() {
        let f5 = f(5);
        let x = FMatrix::from_rows(f5, &[vec![1, 2]]).unwrap();
        let y = FMatrix::from_rows(f5, &[vec![3], vec![4]]).unwrap();
        let prod = x.mat_mul(&y).unwrap();
        assert_eq!(prod.rows(), 1);
        assert_eq!(prod.cols(), 1);
        assert_eq!(prod.get(0, 0).value(), 1); // 3 + 8 = 11 = 1 mod 5
    }

    #[test]
    fn mat_mul_matches_schoolbook_oracle() {
        let f11 = f(11);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = FMatrix::random(f11, 3, 4, &mut rng);
        let b = FMatrix::random(f11, 4, 2, &mut rng);
        let prod = a.mat_mul(&b).unwrap();
        let expect = schoolbook(&a, &b);
        for (i, row) in expect.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                assert_eq!(prod.get(i, j).value(), want);
            }
        }
    }

    #[test]
    fn mismatched_inner_dimension_is_rejected() {
        let f5 = f(5);
        let a = FMatrix::zero(f5, 2, 3);
        let b = FMatrix::zero(f5, 2, 3);
        assert!(matches!(
            a.mat_mul(&b),
            Err(MatrixError::DimMismatch { .. })
        ));
    }

    #[test]
    fn cross_field_operations_are_rejected() {
        let a = FMatrix::zero(f(5), 2, 2);
        let b = FMatrix::zero(f(7), 2, 2);
        assert_eq!(
            a.add(&b),
            Err(MatrixError::FieldMismatch { left: 5, right: 7 })
        );
    }

    #[test]
    fn vstack_then_slice_round_trips() {
        let f7 = f(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let top = FMatrix::random(f7, 2, 3, &mut rng);
        let bottom = FMatrix::random(f7, 3, 3, &mut rng);
        let stacked = FMatrix::vstack(&[top.clone(), bottom.clone()]).unwrap();
        assert_eq!(stacked.row_slice(0, 2), top);
        assert_eq!(stacked.row_slice(2, 3), bottom);
    }

    #[test]
    fn pad_rows_appends_zeros() {
        let f7 = f(7);
        let m = FMatrix::from_rows(f7, &[vec![1, 2]]).unwrap();
        let padded = m.pad_rows(3);
        assert_eq!(padded.rows(), 3);
        assert_eq!(padded.get(0, 1).value(), 2);
        assert_eq!(padded.get(2, 0).value(), 0);
        assert_eq!(padded.get(2, 1).value(), 0);
    }
}
