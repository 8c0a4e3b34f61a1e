//! Honest-but-curious server: stores the public library, multiplies its
//! share against every library matrix eagerly (so response behavior is
//! identical whichever message is desired), cuts the products into blocks,
//! and answers sum requests over those blocks.

use thiserror::Error;

use crate::matrix::{FMatrix, MatrixError};
use crate::plan::Request;
use crate::scheme::Share;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServerError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("request addressed to server {addressed} answered by server {actual}")]
    WrongServer { addressed: u32, actual: u32 },
    #[error("no block (message {message}, index {index}) on this server")]
    UnknownBlock { message: u32, index: u64 },
    #[error("request has no terms")]
    EmptyRequest,
    #[error("share for server {expected} but this is server {got}")]
    ShareMismatch { expected: u32, got: u32 },
    #[error("share not received yet")]
    ShareMissing,
    #[error("cannot cut {rows} product rows into {blocks} equal blocks")]
    Divisibility { rows: usize, blocks: u64 },
}

/// One simulated server. Independently owned; the library and computed
/// blocks are read-only after [`ServerState::compute_products`].
#[derive(Debug, Clone)]
pub struct ServerState {
    server_id: u32,
    library: Vec<FMatrix>,
    share: Option<Share>,
    products: Vec<FMatrix>,
    blocks: Vec<Vec<FMatrix>>,
}

/// Stores the public library on a server. All matrices must share the
/// field and the `d2 x d3` shape.
pub fn load_library(server_id: u32, library: &[FMatrix]) -> Result<ServerState, ServerError> {
    assert!(!library.is_empty(), "library must hold at least one matrix");
    let first = &library[0];
    for b in library {
        if b.field() != first.field() {
            return Err(MatrixError::FieldMismatch {
                left: first.field().modulus(),
                right: b.field().modulus(),
            }
            .into());
        }
        if b.rows() != first.rows() || b.cols() != first.cols() {
            return Err(MatrixError::DimMismatch {
                context: "library matrix shape",
                left_rows: first.rows(),
                left_cols: first.cols(),
                right_rows: b.rows(),
                right_cols: b.cols(),
            }
            .into());
        }
    }
    Ok(ServerState {
        server_id,
        library: library.to_vec(),
        share: None,
        products: Vec::new(),
        blocks: Vec::new(),
    })
}

impl ServerState {
    pub fn server_id(&self) -> u32 {
        self.server_id
    }

    pub fn library(&self) -> &[FMatrix] {
        &self.library
    }

    pub fn receive_share(&mut self, share: Share) -> Result<(), ServerError> {
        if share.server_id != self.server_id {
            return Err(ServerError::ShareMismatch {
                expected: share.server_id,
                got: self.server_id,
            });
        }
        if share.data.cols() != self.library[0].rows() {
            return Err(MatrixError::DimMismatch {
                context: "share columns vs library rows",
                left_rows: share.data.rows(),
                left_cols: share.data.cols(),
                right_rows: self.library[0].rows(),
                right_cols: self.library[0].cols(),
            }
            .into());
        }
        self.share = Some(share);
        Ok(())
    }

    /// Multiplies the share with every library matrix and cuts each product
    /// into `block_count` equal row blocks.
    pub fn compute_products(&mut self, block_count: u64) -> Result<(), ServerError> {
        let share = self.share.as_ref().ok_or(ServerError::ShareMissing)?;
        let rows = share.data.rows();
        if block_count == 0 || !(rows as u64).is_multiple_of(block_count) {
            return Err(ServerError::Divisibility {
                rows,
                blocks: block_count,
            });
        }
        let block_rows = rows / block_count as usize;
        let mut products = Vec::with_capacity(self.library.len());
        let mut blocks = Vec::with_capacity(self.library.len());
        for b in &self.library {
            let product = share.data.mat_mul(b)?;
            let cut: Vec<FMatrix> = (0..block_count as usize)
                .map(|j| product.row_slice(j * block_rows, block_rows))
                .collect();
            products.push(product);
            blocks.push(cut);
        }
        self.products = products;
        self.blocks = blocks;
        Ok(())
    }

    pub fn product(&self, message: u32) -> Option<&FMatrix> {
        self.products.get((message - 1) as usize)
    }

    /// Entrywise sum of the requested blocks.
    pub fn answer(&self, req: &Request) -> Result<FMatrix, ServerError> {
        if req.server != self.server_id {
            return Err(ServerError::WrongServer {
                addressed: req.server,
                actual: self.server_id,
            });
        }
        if req.terms.is_empty() {
            return Err(ServerError::EmptyRequest);
        }
        let mut sum: Option<FMatrix> = None;
        for term in &req.terms {
            let block = self
                .blocks
                .get((term.message.wrapping_sub(1)) as usize)
                .and_then(|msg| msg.get((term.index.wrapping_sub(1)) as usize))
                .ok_or(ServerError::UnknownBlock {
                    message: term.message,
                    index: term.index,
                })?;
            sum = Some(match sum {
                None => block.clone(),
                Some(acc) => acc.add(block)?,
            });
        }
        Ok(sum.expect("nonempty terms"))
    }
}
