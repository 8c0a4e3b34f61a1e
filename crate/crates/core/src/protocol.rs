//! End-to-end orchestration of one protocol run: secure upload, private
//! download, decode, and exact cost accounting against the closed forms.

use num_bigint::BigInt;
use thiserror::Error;

use crate::cost::{achievable_point, Rational};
use crate::decoder::{DecodeError, Decoder};
use crate::matrix::{FMatrix, MatrixError};
use crate::plan::{build_plan, sample_permutations, validate_plan, PlanError, QueryPlan};
use crate::poly::PolyError;
use crate::scheme::{
    encode_shares, partition_rows, sample_mask, MaskMatrix, ParamError, SchemeError, Share,
    ValidatedParams,
};
use crate::seeding::{stream_rng, Stream};
use crate::server::{load_library, ServerError, ServerState};
use crate::transcript::{CostRecord, RationalRecord, Transcript};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("supplied {what} has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    BadInput {
        what: &'static str,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("supplied library holds {got} matrices, expected {want}")]
    BadLibrarySize { got: usize, want: usize },
}

/// Optional overrides for inputs normally derived from the seed. Used to
/// pin the confidential matrix or library in tests, to share a library
/// across runs, or to disable the mask for the security negative control.
#[derive(Debug, Default, Clone)]
pub struct RunInputs {
    pub confidential: Option<FMatrix>,
    pub library: Option<Vec<FMatrix>>,
    pub mask: Option<MaskMatrix>,
    pub permutations: Option<Vec<Vec<u64>>>,
}

/// Exact-rational cost accounting for one run.
///
/// Normalization counts one field element as one symbol and divides by the
/// padded result size: uploads by `d1_pad * d2`, downloads by `d1_pad * d3`,
/// matching the entropy normalization under the d2 = d3 convention. Raw
/// symbol counts are kept alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub uploaded_symbols: u64,
    pub downloaded_symbols: u64,
    pub u_measured: Rational,
    pub d_measured: Rational,
    pub u_formula: Rational,
    pub d_formula: Rational,
}

impl CostReport {
    fn new(params: &ValidatedParams, uploaded: u64, downloaded: u64) -> Self {
        let raw = params.raw();
        let point = achievable_point(
            u64::from(raw.servers),
            u64::from(raw.messages),
            u64::from(raw.mds_k),
        )
        .expect("validated params have K in range");
        let upload_base = (params.d1_pad() * raw.d2) as u64;
        let download_base = (params.d1_pad() * raw.d3) as u64;
        CostReport {
            uploaded_symbols: uploaded,
            downloaded_symbols: downloaded,
            u_measured: Rational::new(BigInt::from(uploaded), BigInt::from(upload_base)),
            d_measured: Rational::new(BigInt::from(downloaded), BigInt::from(download_base)),
            u_formula: point.upload,
            d_formula: point.download,
        }
    }

    /// Measured costs equal the closed forms exactly.
    pub fn agrees(&self) -> bool {
        self.u_measured == self.u_formula && self.d_measured == self.d_formula
    }

    pub fn to_record(&self) -> CostRecord {
        CostRecord {
            uploaded_symbols: self.uploaded_symbols,
            downloaded_symbols: self.downloaded_symbols,
            u_measured: RationalRecord::from_rational(&self.u_measured),
            d_measured: RationalRecord::from_rational(&self.d_measured),
            u_formula: RationalRecord::from_rational(&self.u_formula),
            d_formula: RationalRecord::from_rational(&self.d_formula),
        }
    }
}

/// Everything a run produced, in memory. The serializable subset lives in
/// [`Transcript`]; the rest backs oracle comparisons in tests and the CLI.
#[derive(Debug)]
pub struct RunOutcome {
    pub result: FMatrix,
    pub mask_product: FMatrix,
    pub confidential: FMatrix,
    pub library: Vec<FMatrix>,
    pub shares: Vec<Share>,
    pub plan: QueryPlan,
    pub answers: Vec<FMatrix>,
    pub cost: CostReport,
    pub transcript: Transcript,
}

/// Runs the full protocol with every input derived from the seed.
pub fn run_protocol(params: &ValidatedParams) -> Result<RunOutcome, ProtocolError> {
    run_protocol_with(params, RunInputs::default())
}

/// Runs the full protocol, honoring any supplied input overrides.
pub fn run_protocol_with(
    params: &ValidatedParams,
    inputs: RunInputs,
) -> Result<RunOutcome, ProtocolError> {
    let raw = *params.raw();
    let field = params.field();
    let seed = raw.seed;

    let confidential = match inputs.confidential {
        Some(a) => check_shape(a, "confidential matrix", raw.d1, raw.d2)?,
        None => FMatrix::random(
            field,
            raw.d1,
            raw.d2,
            &mut stream_rng(seed, Stream::ConfidentialMatrix),
        ),
    };
    let library = match inputs.library {
        Some(lib) => {
            if lib.len() != raw.messages as usize {
                return Err(ProtocolError::BadLibrarySize {
                    got: lib.len(),
                    want: raw.messages as usize,
                });
            }
            lib.into_iter()
                .map(|b| check_shape(b, "library matrix", raw.d2, raw.d3))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let mut rng = stream_rng(seed, Stream::Library);
            (0..raw.messages)
                .map(|_| FMatrix::random(field, raw.d2, raw.d3, &mut rng))
                .collect()
        }
    };
    let mask = match inputs.mask {
        Some(m) => MaskMatrix {
            data: check_shape(m.data, "mask", params.partition_rows(), raw.d2)?,
        },
        None => sample_mask(
            field,
            params.partition_rows(),
            raw.d2,
            &mut stream_rng(seed, Stream::Mask),
        ),
    };
    let perms = inputs.permutations.unwrap_or_else(|| {
        sample_permutations(
            raw.messages,
            params.block_count(),
            &mut stream_rng(seed, Stream::Permutations),
        )
    });

    // Phase 1: secure upload.
    let padded = confidential.pad_rows(params.d1_pad());
    let parts = partition_rows(&padded, raw.mds_k)?;
    let shares = encode_shares(&parts, &mask, &params.evaluation_points())?;
    let uploaded: u64 = shares.iter().map(|s| s.data.symbol_count()).sum();

    let mut servers: Vec<ServerState> = Vec::with_capacity(raw.servers as usize);
    for share in &shares {
        let mut s = load_library(share.server_id, &library)?;
        s.receive_share(share.clone())?;
        s.compute_products(params.block_count())?;
        servers.push(s);
    }

    // Phase 2: private download. The schedule is revalidated against its
    // constraints so a transcript never records a malformed exchange.
    let plan = build_plan(params, &perms)?;
    validate_plan(&plan)?;
    let mut decoder = Decoder::new(params);
    let mut answers = Vec::with_capacity(plan.requests.len());
    let mut downloaded = 0u64;
    for req in &plan.requests {
        let answer = servers[(req.server - 1) as usize].answer(req)?;
        downloaded += answer.symbol_count();
        decoder.ingest(req, answer.clone())?;
        answers.push(answer);
    }
    let decoded = decoder.assemble()?;

    // The interpolation also yields the mask's product; the user knows both
    // factors, so any disagreement means a corrupted transcript.
    debug_assert_eq!(
        decoded.mask_product,
        mask.data.mat_mul(&library[(raw.theta - 1) as usize])?,
        "reconstructed mask product diverged"
    );

    let cost = CostReport::new(params, uploaded, downloaded);
    let transcript = Transcript::assemble(
        &raw,
        params.d1_pad(),
        &shares,
        &plan,
        &answers,
        &decoded.product,
        cost.to_record(),
    );
    Ok(RunOutcome {
        result: decoded.product,
        mask_product: decoded.mask_product,
        confidential,
        library,
        shares,
        plan,
        answers,
        cost,
        transcript,
    })
}

fn check_shape(
    m: FMatrix,
    what: &'static str,
    rows: usize,
    cols: usize,
) -> Result<FMatrix, ProtocolError> {
    if m.rows() != rows || m.cols() != cols {
        return Err(ProtocolError::BadInput {
            what,
            got_rows: m.rows(),
            got_cols: m.cols(),
            want_rows: rows,
            want_cols: cols,
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{validate_params, SchemeParams};

    fn params(servers: u32, messages: u32, mds_k: u32, prime: u64, theta: u32, seed: u64) -> ValidatedParams {
        validate_params(SchemeParams {
            servers,
            messages,
            mds_k,
            prime,
            d1: 8,
            d2: 3,
            d3: 2,
            theta,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn decoded_result_equals_direct_product() {
        let p = params(4, 2, 3, 11, 1, 77);
        let run = run_protocol(&p).unwrap();
        let direct = run
            .confidential
            .mat_mul(&run.library[0])
            .unwrap();
        assert_eq!(run.result, direct);
        assert!(run.cost.agrees());
    }

    #[test]
    fn both_theta_choices_decode_their_own_product() {
        for theta in 1..=2u32 {
            let p = params(4, 2, 3, 11, theta, 123);
            let run = run_protocol(&p).unwrap();
            let direct = run
                .confidential
                .mat_mul(&run.library[(theta - 1) as usize])
                .unwrap();
            assert_eq!(run.result, direct, "theta={theta}");
        }
    }

    #[test]
    fn minimal_two_server_configuration() {
        // N=2, M=1, K=2: U = D = 2
        let p = validate_params(SchemeParams {
            servers: 2,
            messages: 1,
            mds_k: 2,
            prime: 5,
            d1: 2,
            d2: 2,
            d3: 2,
            theta: 1,
            seed: 4,
        })
        .unwrap();
        let run = run_protocol(&p).unwrap();
        assert_eq!(run.result, run.confidential.mat_mul(&run.library[0]).unwrap());
        assert_eq!(run.cost.u_measured, crate::cost::rat(2));
        assert_eq!(run.cost.d_measured, crate::cost::rat(2));
    }

    #[test]
    fn zero_confidential_matrix_yields_zero_product() {
        let p = params(4, 2, 3, 11, 2, 5);
        let zero = FMatrix::zero(p.field(), 8, 3);
        let run = run_protocol_with(
            &p,
            RunInputs {
                confidential: Some(zero),
                ..RunInputs::default()
            },
        )
        .unwrap();
        assert!(run.result.is_zero());
    }

    #[test]
    fn mask_choice_never_changes_the_result() {
        let p = params(4, 2, 3, 13, 1, 9);
        let a = run_protocol(&p).unwrap();
        let other_mask = sample_mask(
            p.field(),
            p.partition_rows(),
            3,
            &mut stream_rng(31337, Stream::Mask),
        );
        let b = run_protocol_with(
            &p,
            RunInputs {
                mask: Some(other_mask),
                ..RunInputs::default()
            },
        )
        .unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.cost, b.cost);
    }

    #[test]
    fn padding_is_transparent() {
        // d1 = 5 pads to 32; the truncated result must equal the direct
        // product of the unpadded matrices
        let p = validate_params(SchemeParams {
            servers: 4,
            messages: 2,
            mds_k: 3,
            prime: 11,
            d1: 5,
            d2: 3,
            d3: 2,
            theta: 1,
            seed: 8,
        })
        .unwrap();
        assert_eq!(p.d1_pad(), 32);
        let run = run_protocol(&p).unwrap();
        assert_eq!(run.result.rows(), 5);
        assert_eq!(
            run.result,
            run.confidential.mat_mul(&run.library[0]).unwrap()
        );
    }

    #[test]
    fn transcripts_replay_byte_identically() {
        let p = params(4, 2, 3, 11, 1, 2024);
        let a = run_protocol(&p).unwrap().transcript.to_json_bytes();
        let b = run_protocol(&p).unwrap().transcript.to_json_bytes();
        assert_eq!(a, b);
    }

    #[test]
    fn plan_does_not_depend_on_the_library() {
        // regenerate the library under a different seed while holding the
        // plan seed fixed: the query plan must not move
        let p = params(4, 2, 3, 11, 1, 555);
        let base = run_protocol(&p).unwrap();
        let mut rng = stream_rng(987654, Stream::Library);
        let other_library: Vec<FMatrix> = (0..2)
            .map(|_| FMatrix::random(p.field(), 3, 2, &mut rng))
            .collect();
        let run = run_protocol_with(
            &p,
            RunInputs {
                library: Some(other_library),
                ..RunInputs::default()
            },
        )
        .unwrap();
        assert_eq!(base.plan, run.plan);
        assert_ne!(base.answers, run.answers);
    }

    #[test]
    fn answers_decode_in_any_round_respecting_order() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let p = params(4, 3, 2, 11, 2, 66);
        let run = run_protocol(&p).unwrap();

        let mut indexed: Vec<usize> = (0..run.plan.requests.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        indexed.shuffle(&mut rng);
        // stable-sort by (repetition, round) only: order within a round stays shuffled
        indexed.sort_by_key(|&i| {
            let r = &run.plan.requests[i];
            (r.repetition, r.round)
        });

        let mut decoder = Decoder::new(&p);
        for &i in &indexed {
            decoder
                .ingest(&run.plan.requests[i], run.answers[i].clone())
                .unwrap();
        }
        let decoded = decoder.assemble().unwrap();
        assert_eq!(decoded.product, run.result);
    }

    #[test]
    fn oversized_inputs_are_rejected() {
        let p = params(4, 2, 3, 11, 1, 7);
        let bad = FMatrix::zero(p.field(), 9, 3);
        assert!(matches!(
            run_protocol_with(
                &p,
                RunInputs {
                    confidential: Some(bad),
                    ..RunInputs::default()
                }
            ),
            Err(ProtocolError::BadInput { .. })
        ));
        let lib = vec![FMatrix::zero(p.field(), 3, 2)];
        assert!(matches!(
            run_protocol_with(
                &p,
                RunInputs {
                    library: Some(lib),
                    ..RunInputs::default()
                }
            ),
            Err(ProtocolError::BadLibrarySize { got: 1, want: 2 })
        ));
    }
}
