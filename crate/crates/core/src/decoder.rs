//! User-side answer processing.
//!
//! Streaming decode in plan order: undesired group answers accumulate until
//! K of them arrive, at which point the group's (summed) block components
//! are interpolated and kept as side information; desired answers have the
//! known side-information evaluation subtracted, leaving a clean evaluation
//! of the desired block, K of which interpolate to the block's partitions.
//! The top interpolated coefficient is the mask's contribution; it is
//! discarded from the output but kept available for consistency checking.

use std::collections::BTreeMap;
use thiserror::Error;

use crate::field::FieldElement;
use crate::matrix::{FMatrix, MatrixError};
use crate::plan::{BlockId, Request};
use crate::poly::{poly_eval, vandermonde_solve, PolyError};
use crate::scheme::ValidatedParams;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("need exactly {need} evaluations from distinct servers, got {got}")]
    NotEnoughAnswers { got: usize, need: usize },
    #[error("side information {terms:?} consumed before its group was decoded")]
    MissingSideInfo { terms: Vec<BlockId> },
    #[error("desired block {index} finished with {got} evaluations, need {need}")]
    IncompleteDownload { index: u64, got: usize, need: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Interpolates the K components of a (possibly summed) block from K
/// evaluations at distinct points.
pub fn reconstruct_group(
    evals: &[(FieldElement, FMatrix)],
    mds_k: u32,
) -> Result<Vec<FMatrix>, DecodeError> {
    let need = mds_k as usize;
    if evals.len() != need {
        return Err(DecodeError::NotEnoughAnswers {
            got: evals.len(),
            need,
        });
    }
    let points: Vec<FieldElement> = evals.iter().map(|(x, _)| *x).collect();
    let values: Vec<FMatrix> = evals.iter().map(|(_, e)| e.clone()).collect();
    Ok(vandermonde_solve(&points, &values)?)
}

/// Reconstructed side information, keyed by the exact (sorted) term set the
/// group was downloaded under.
#[derive(Debug, Default)]
pub struct SideInfoLedger {
    pending: BTreeMap<Vec<BlockId>, Vec<(FieldElement, FMatrix)>>,
    ready: BTreeMap<Vec<BlockId>, Vec<FMatrix>>,
}

impl SideInfoLedger {
    /// Subtracts the ledger's evaluation of a desired request's side terms,
    /// leaving the pure desired-block evaluation.
    pub fn cancel(
        &self,
        answer: &FMatrix,
        req: &Request,
        theta: u32,
        x: FieldElement,
    ) -> Result<FMatrix, DecodeError> {
        let side = req.undesired_terms(theta);
        if side.is_empty() {
            return Ok(answer.clone());
        }
        let components = self
            .ready
            .get(&side)
            .ok_or(DecodeError::MissingSideInfo { terms: side })?;
        let known = poly_eval(components, x)?;
        Ok(answer.sub(&known)?)
    }

    pub fn decoded_groups(&self) -> usize {
        self.ready.len()
    }
}

/// Per-desired-block evaluations collected so far.
#[derive(Debug, Default)]
pub struct DesiredAccumulator {
    evals: BTreeMap<u64, Vec<(FieldElement, FMatrix)>>,
}

/// The assembled output: the product the user wanted, plus the interpolated
/// mask contribution that decoding discards (useful as a corruption check,
/// since the user knows the mask it sampled).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedResult {
    pub product: FMatrix,
    pub mask_product: FMatrix,
}

/// Streaming decoder. Feed every (request, answer) pair in any order that
/// respects round precedence, then call [`Decoder::assemble`].
#[derive(Debug)]
pub struct Decoder {
    params: ValidatedParams,
    points: Vec<FieldElement>,
    pub side_info: SideInfoLedger,
    pub desired: DesiredAccumulator,
}

impl Decoder {
    pub fn new(params: &ValidatedParams) -> Self {
        Decoder {
            params: params.clone(),
            points: params.evaluation_points(),
            side_info: SideInfoLedger::default(),
            desired: DesiredAccumulator::default(),
        }
    }

    fn point_of(&self, server: u32) -> FieldElement {
        self.points[(server - 1) as usize]
    }

    pub fn ingest(&mut self, req: &Request, answer: FMatrix) -> Result<(), DecodeError> {
        let theta = self.params.theta();
        let x = self.point_of(req.server);
        match req.desired_term(theta) {
            Some(term) => {
                let pure = self.side_info.cancel(&answer, req, theta, x)?;
                self.desired
                    .evals
                    .entry(term.index)
                    .or_default()
                    .push((x, pure));
                Ok(())
            }
            None => {
                let entry = self
                    .side_info
                    .pending
                    .entry(req.terms.clone())
                    .or_default();
                entry.push((x, answer));
                if entry.len() == self.params.mds_k() as usize {
                    let evals = self
                        .side_info
                        .pending
                        .remove(&req.terms)
                        .expect("entry just filled");
                    let components = reconstruct_group(&evals, self.params.mds_k())?;
                    self.side_info.ready.insert(req.terms.clone(), components);
                }
                Ok(())
            }
        }
    }

    /// Interpolates every desired block, drops the mask component, stacks
    /// partitions, and strips the padding rows.
    ///
    /// A block's position in the product is its physical index (servers cut
    /// products into physical row ranges), and each repetition requests
    /// every physical block exactly once, so stacking the accumulator in
    /// physical order is already the inverse of the index permutation.
    pub fn assemble(self) -> Result<DecodedResult, DecodeError> {
        let p = &self.params;
        let k = p.mds_k() as usize;
        let block_count = p.block_count() as usize;

        // components[i][j] = partition i of physical block j+1
        let mut partitions: Vec<Vec<FMatrix>> = vec![Vec::with_capacity(block_count); k];
        for physical in 1..=block_count as u64 {
            let evals = self.desired.evals.get(&physical).map_or(&[][..], Vec::as_slice);
            if evals.len() != k {
                return Err(DecodeError::IncompleteDownload {
                    index: physical,
                    got: evals.len(),
                    need: k,
                });
            }
            let comps = reconstruct_group(evals, p.mds_k())?;
            for (i, comp) in comps.into_iter().enumerate() {
                partitions[i].push(comp);
            }
        }
        let mask_product = FMatrix::vstack(&partitions[k - 1])?;
        let stacked: Vec<FMatrix> = partitions[..k - 1]
            .iter()
            .map(|blocks| FMatrix::vstack(blocks))
            .collect::<Result<_, _>>()?;
        let padded = FMatrix::vstack(&stacked)?;
        let product = padded.row_slice(0, p.raw().d1);
        Ok(DecodedResult {
            product,
            mask_product,
        })
    }
}
