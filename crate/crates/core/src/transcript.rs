//! Replayable record of one protocol run.
//!
//! The transcript is JSON with a fixed field order, matrices as row-major
//! integer arrays, and rationals as exact decimal-string fractions, so two
//! runs with the same seed produce byte-identical files and golden files
//! diff cleanly.

use serde::{Deserialize, Serialize};

use crate::cost::{rational_parts, Rational};
use crate::field::PrimeField;
use crate::matrix::{FMatrix, MatrixError};
use crate::plan::{QueryPlan, Request};
use crate::scheme::{SchemeParams, Share};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &FMatrix) -> Self {
        MatrixRecord {
            rows: m.rows(),
            cols: m.cols(),
            data: m.entries().iter().map(|e| e.value()).collect(),
        }
    }

    pub fn to_matrix(&self, field: PrimeField) -> Result<FMatrix, MatrixError> {
        let data = self.data.iter().map(|&v| field.element(v)).collect();
        FMatrix::from_elements(field, self.rows, self.cols, data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRecord {
    pub num: String,
    pub den: String,
}

impl RationalRecord {
    pub fn from_rational(r: &Rational) -> Self {
        let (num, den) = rational_parts(r);
        RationalRecord { num, den }
    }

    pub fn to_rational(&self) -> Option<Rational> {
        crate::cost::rational_from_parts(&self.num, &self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub server_id: u32,
    pub x: u64,
    pub data: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeRecord {
    pub request: Request,
    pub answer: MatrixRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRecord {
    pub uploaded_symbols: u64,
    pub downloaded_symbols: u64,
    pub u_measured: RationalRecord,
    pub d_measured: RationalRecord,
    pub u_formula: RationalRecord,
    pub d_formula: RationalRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    /// Field modulus, spelled out so a transcript is self-describing.
    pub p: u64,
    pub params: SchemeParams,
    pub d1_pad: usize,
    pub shares: Vec<ShareRecord>,
    pub plan: QueryPlan,
    pub exchanges: Vec<ExchangeRecord>,
    pub result: MatrixRecord,
    pub cost: CostRecord,
}

impl Transcript {
    pub fn assemble(
        params: &SchemeParams,
        d1_pad: usize,
        shares: &[Share],
        plan: &QueryPlan,
        answers: &[FMatrix],
        result: &FMatrix,
        cost: CostRecord,
    ) -> Self {
        let shares = shares
            .iter()
            .map(|s| ShareRecord {
                server_id: s.server_id,
                x: s.x.value(),
                data: MatrixRecord::from_matrix(&s.data),
            })
            .collect();
        let exchanges = plan
            .requests
            .iter()
            .zip(answers)
            .map(|(request, answer)| ExchangeRecord {
                request: request.clone(),
                answer: MatrixRecord::from_matrix(answer),
            })
            .collect();
        Transcript {
            p: params.prime,
            params: *params,
            d1_pad,
            shares,
            plan: plan.clone(),
            exchanges,
            result: MatrixRecord::from_matrix(result),
            cost,
        }
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("transcript serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json_bytes(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    pub fn write_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json_bytes())
    }
}
