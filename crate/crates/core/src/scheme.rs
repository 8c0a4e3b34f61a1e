//! Configuration and the secure upload phase.
//!
//! The confidential matrix is split into K-1 row partitions, a uniformly
//! random mask of the same shape is attached as the top coefficient, and
//! each server receives one evaluation of the resulting matrix polynomial:
//!
//! ```text
//! share_n = A_1 + A_2 x_n + ... + A_{K-1} x_n^{K-2} + R x_n^{K-1}
//! ```
//!
//! Any K shares interpolate back to the partitions plus the mask; any single
//! share is a one-time-pad image of the mask (the evaluation point is
//! nonzero, so the mask term never vanishes) and reveals nothing.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeField};
use crate::matrix::{FMatrix, MatrixError};
use crate::poly::{poly_eval, PolyError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("MDS parameter K={k} must satisfy 2 <= K <= N (N={n})")]
    KOutOfRange { k: u32, n: u32 },
    #[error("field modulus p={p} must exceed the server count N={n}")]
    FieldTooSmall { p: u64, n: u32 },
    #[error("desired index theta={theta} must lie in [1, {messages}]")]
    BadTheta { theta: u32, messages: u32 },
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    #[error("evaluation point 0 would erase the mask term")]
    ZeroEvaluationPoint,
    #[error("evaluation points must be pairwise distinct")]
    DuplicateEvaluationPoint,
    #[error("partition count mismatch: expected {expected}, got {got}")]
    PartitionCount { expected: usize, got: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Raw configuration of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Number of non-colluding servers (N).
    pub servers: u32,
    /// Number of public matrices in the library (M).
    pub messages: u32,
    /// MDS parameter (K): shares needed to reconstruct, repetitions downloaded.
    pub mds_k: u32,
    /// Prime field modulus.
    pub prime: u64,
    /// Confidential matrix row count before padding.
    pub d1: usize,
    /// Inner dimension (columns of the confidential matrix, rows of library matrices).
    pub d2: usize,
    /// Library matrix column count.
    pub d3: usize,
    /// Private index of the desired library matrix, 1-based.
    pub theta: u32,
    /// Master seed for all randomness in the run.
    pub seed: u64,
}

/// Parameters that passed validation, with the derived layout quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedParams {
    raw: SchemeParams,
    field: PrimeField,
    d1_pad: usize,
    block_count: u64,
    partition_rows: usize,
    block_rows: usize,
}

/// Checks ranges and computes the padded layout.
///
/// The padded row count is the least multiple of `(K-1) * N^M` at or above
/// `d1`: the K-1 partitions must be equal, and each coded product must cut
/// into N^M equal row blocks.
pub fn validate_params(raw: SchemeParams) -> Result<ValidatedParams, ParamError> {
    let SchemeParams {
        servers,
        messages,
        mds_k,
        prime,
        d1,
        d2,
        d3,
        theta,
        ..
    } = raw;
    if mds_k < 2 || mds_k > servers {
        return Err(ParamError::KOutOfRange {
            k: mds_k,
            n: servers,
        });
    }
    if messages < 1 {
        return Err(ParamError::BadTheta {
            theta,
            messages,
        });
    }
    if theta < 1 || theta > messages {
        return Err(ParamError::BadTheta { theta, messages });
    }
    let field = PrimeField::new(prime)?;
    if prime <= u64::from(servers) {
        return Err(ParamError::FieldTooSmall {
            p: prime,
            n: servers,
        });
    }
    if d1 == 0 || d2 == 0 || d3 == 0 {
        return Err(ParamError::BadDims(format!(
            "all of d1, d2, d3 must be positive (got {d1}, {d2}, {d3})"
        )));
    }
    let block_count = u64::from(servers)
        .checked_pow(messages)
        .filter(|&b| b <= 1 << 32)
        .ok_or_else(|| {
            ParamError::BadDims(format!("N^M = {servers}^{messages} is too large"))
        })?;
    let quantum = block_count
        .checked_mul(u64::from(mds_k) - 1)
        .and_then(|q| usize::try_from(q).ok())
        .ok_or_else(|| ParamError::BadDims("(K-1) * N^M overflows".into()))?;
    let d1_pad = d1
        .checked_add(quantum - 1)
        .map(|v| v / quantum * quantum)
        .ok_or_else(|| ParamError::BadDims("padded d1 overflows".into()))?;
    let partition_rows = d1_pad / (mds_k as usize - 1);
    let block_rows = partition_rows / block_count as usize;
    Ok(ValidatedParams {
        raw,
        field,
        d1_pad,
        block_count,
        partition_rows,
        block_rows,
    })
}

impl ValidatedParams {
    pub fn raw(&self) -> &SchemeParams {
        &self.raw
    }

    pub fn servers(&self) -> u32 {
        self.raw.servers
    }

    pub fn messages(&self) -> u32 {
        self.raw.messages
    }

    pub fn mds_k(&self) -> u32 {
        self.raw.mds_k
    }

    pub fn theta(&self) -> u32 {
        self.raw.theta
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Row count after zero-padding.
    pub fn d1_pad(&self) -> usize {
        self.d1_pad
    }

    /// Blocks each coded product is cut into (N^M).
    pub fn block_count(&self) -> u64 {
        self.block_count
    }

    /// Rows of each of the K-1 partitions (and of the mask).
    pub fn partition_rows(&self) -> usize {
        self.partition_rows
    }

    /// Rows of a single block.
    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    /// The evaluation point handed to each server: `x_n = n`.
    ///
    /// Consecutive nonzero integers are distinct whenever p > N, which
    /// validation guarantees.
    pub fn evaluation_points(&self) -> Vec<FieldElement> {
        (1..=u64::from(self.raw.servers))
            .map(|n| self.field.element(n))
            .collect()
    }
}

/// The masked evaluation sent to one server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share {
    pub server_id: u32,
    pub x: FieldElement,
    pub data: FMatrix,
}

/// The uniformly random top coefficient. Independent of the confidential
/// matrix; drawn fresh for every run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    pub data: FMatrix,
}

/// Draws a mask with i.i.d. uniform entries from the given generator.
pub fn sample_mask<R: Rng + ?Sized>(
    field: PrimeField,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> MaskMatrix {
    MaskMatrix {
        data: FMatrix::random(field, rows, cols, rng),
    }
}

impl MaskMatrix {
    /// All-zero mask. Degenerate and insecure: shares become deterministic
    /// functions of the input. Exists only so the statistical harness can
    /// run its negative control.
    pub fn disabled(field: PrimeField, rows: usize, cols: usize) -> Self {
        MaskMatrix {
            data: FMatrix::zero(field, rows, cols),
        }
    }
}

/// Splits a row-padded matrix into K-1 equal row partitions.
pub fn partition_rows(a: &FMatrix, mds_k: u32) -> Result<Vec<FMatrix>, SchemeError> {
    let parts = (mds_k as usize).saturating_sub(1);
    assert!(parts >= 1, "K must be at least 2");
    if !a.rows().is_multiple_of(parts) {
        return Err(MatrixError::DimMismatch {
            context: "partition row count",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: parts,
            right_cols: a.cols(),
        }
        .into());
    }
    let each = a.rows() / parts;
    Ok((0..parts).map(|i| a.row_slice(i * each, each)).collect())
}

/// Evaluates the masked share polynomial at each server's point.
///
/// `shares[n]` is exactly `sum_i parts[i] * x_n^i + mask * x_n^(K-1)`.
pub fn encode_shares(
    parts: &[FMatrix],
    mask: &MaskMatrix,
    points: &[FieldElement],
) -> Result<Vec<Share>, SchemeError> {
    for (i, x) in points.iter().enumerate() {
        if x.value() == 0 {
            return Err(SchemeError::ZeroEvaluationPoint);
        }
        if points[i + 1..].contains(x) {
            return Err(SchemeError::DuplicateEvaluationPoint);
        }
    }
    let mut coeffs: Vec<FMatrix> = parts.to_vec();
    coeffs.push(mask.data.clone());
    points
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            Ok(Share {
                server_id: idx as u32 + 1,
                x,
                data: poly_eval(&coeffs, x)?,
            })
        })
        .collect()
}
