//! The private download schedule.
//!
//! Retrieval runs in K repetitions of M rounds. Round 1 of a repetition
//! downloads desired blocks directly plus, for message symmetry, singleton
//! undesired blocks grouped so that each group is fetched from K distinct
//! servers and is therefore decodable. Round i+1 hides one fresh desired
//! block inside a sum with a group decoded in round i, placed only at the
//! N-K servers that did not serve that group. Across repetitions the
//! server-to-desired-block assignment rotates by one server, so every
//! desired block is served by K distinct servers; undesired side
//! information always uses fresh block indices.
//!
//! The schedule is computed on logical block indices and mapped through M
//! independent uniform permutations (one per message) before anything is
//! addressed to a server, which is what makes the concrete indices carry no
//! information about the desired message.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::scheme::{SchemeParams, ValidatedParams};

/// One block of one message's coded product: `message` in `[1, M]`,
/// `index` in `[1, N^M]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId {
    pub message: u32,
    pub index: u64,
}

/// A single download: the addressed server returns the entrywise sum of the
/// listed blocks of its own coded products. Round-i requests sum exactly i
/// blocks, at most one of which belongs to the desired message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub server: u32,
    pub repetition: u32,
    pub round: u32,
    pub terms: Vec<BlockId>,
}

impl Request {
    pub fn desired_term(&self, theta: u32) -> Option<BlockId> {
        self.terms.iter().copied().find(|t| t.message == theta)
    }

    pub fn undesired_terms(&self, theta: u32) -> Vec<BlockId> {
        self.terms
            .iter()
            .copied()
            .filter(|t| t.message != theta)
            .collect()
    }
}

/// A set of undesired blocks downloaded (as one summed term set) from K
/// distinct servers, hence decodable and usable as side information.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideInfoGroup {
    pub repetition: u32,
    pub round: u32,
    pub terms: Vec<BlockId>,
    pub servers: Vec<u32>,
}

/// The full download schedule. Depends only on (N, M, K, theta, seed) --
/// never on the library contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub params: SchemeParams,
    pub block_count: u64,
    /// `perms[m-1][logical-1]` is the physical index of message m's logical
    /// block, both 1-based.
    pub perms: Vec<Vec<u64>>,
    pub requests: Vec<Request>,
    pub side_info: Vec<SideInfoGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Request well-formedness: term count equals round, at most one
    /// desired term, indices in range.
    Shape,
    /// C1: per-repetition desired volume, by round and in total.
    DesiredVolume,
    /// C2: per-repetition undesired volume and group structure.
    UndesiredVolume,
    /// C3: later-round pairing only at servers that missed the group.
    Pairing,
    /// C4: every desired block at K distinct servers; every group too.
    KSourceDecodability,
    /// C5: undesired indices are never reused.
    Freshness,
    /// C6: per server and sum size, all messages appear equally often.
    MessageSymmetry,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Constraint::Shape => "shape",
            Constraint::DesiredVolume => "C1 desired volume",
            Constraint::UndesiredVolume => "C2 undesired volume",
            Constraint::Pairing => "C3 pairing",
            Constraint::KSourceDecodability => "C4 K-source decodability",
            Constraint::Freshness => "C5 freshness",
            Constraint::MessageSymmetry => "C6 message symmetry",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("{constraint} violated: {witness}")]
    Violation {
        constraint: Constraint,
        witness: String,
    },
    #[error("side information for message {message} would need block index {needed} but only {capacity} exist")]
    Infeasible {
        message: u32,
        needed: u64,
        capacity: u64,
    },
}

fn violation(constraint: Constraint, witness: String) -> PlanError {
    PlanError::Violation {
        constraint,
        witness,
    }
}

/// Totals and structure counts confirmed by [`validate_plan`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub desired_requests: u64,
    pub undesired_requests: u64,
    pub desired_formula: u64,
    pub undesired_formula: u64,
    pub side_info_groups: u64,
}

pub(crate) fn binomial(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let mut acc = 1u64;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Desired-bearing requests per repetition in the given round:
/// `N * C(M-1, i-1) * K^(M-i) * (N-K)^(i-1)` for round i.
pub fn round_desired_count(n: u64, m: u64, k: u64, round: u32) -> u64 {
    let i = u64::from(round);
    n * binomial(m - 1, i - 1) * k.pow((m - i) as u32) * (n - k).pow((i - 1) as u32)
}

/// Undesired (group-download) requests per repetition in the given round:
/// `N * C(M-1, i) * K^(M-i) * (N-K)^(i-1)` for round i.
pub fn round_undesired_count(n: u64, m: u64, k: u64, round: u32) -> u64 {
    let i = u64::from(round);
    n * binomial(m - 1, i) * k.pow((m - i) as u32) * (n - k).pow((i - 1) as u32)
}

/// Side-information groups formed per repetition in the given round.
pub fn round_group_count(n: u64, m: u64, k: u64, round: u32) -> u64 {
    round_undesired_count(n, m, k, round) / k
}

/// Total desired-bearing requests over all K repetitions.
pub fn desired_request_total(n: u64, m: u64, k: u64) -> u64 {
    k * (1..=m as u32).map(|r| round_desired_count(n, m, k, r)).sum::<u64>()
}

/// Total undesired requests over all K repetitions.
pub fn undesired_request_total(n: u64, m: u64, k: u64) -> u64 {
    k * (1..m as u32).map(|r| round_undesired_count(n, m, k, r)).sum::<u64>()
}

/// M independent uniform permutations of `[1, size]`.
pub fn sample_permutations<R: Rng + ?Sized>(
    messages: u32,
    size: u64,
    rng: &mut R,
) -> Vec<Vec<u64>> {
    (0..messages)
        .map(|_| {
            let mut v: Vec<u64> = (1..=size).collect();
            v.shuffle(rng);
            v
        })
        .collect()
}

/// Identity permutations. Defeats privacy; exists for the negative control
/// and for tests that need to see logical indices on the wire.
pub fn identity_permutations(messages: u32, size: u64) -> Vec<Vec<u64>> {
    (0..messages).map(|_| (1..=size).collect()).collect()
}

fn subsets_of_size(items: &[u32], size: usize) -> Vec<Vec<u32>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if items.len() < size {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut rest in subsets_of_size(&items[1..], size - 1) {
        rest.insert(0, items[0]);
        out.push(rest);
    }
    out.extend(subsets_of_size(&items[1..], size));
    out
}

/// Builds the canonical schedule for the validated parameters.
///
/// Canonical choices, fixed so transcripts are reproducible: round-1 desired
/// ranges assigned in server order; undesired-message subsets enumerated
/// lexicographically with groups placed on K cyclically consecutive servers
/// starting at server `K*(f-1)+1`; fresh desired blocks taken in ascending
/// logical order per server; each repetition rotates the server assignment
/// of every desired block by one.
pub fn build_plan(params: &ValidatedParams, perms: &[Vec<u64>]) -> Result<QueryPlan, PlanError> {
    let n = u64::from(params.servers());
    let m = u64::from(params.messages());
    let k = u64::from(params.mds_k());
    let theta = params.theta();
    let block_count = params.block_count();
    assert_eq!(perms.len() as u64, m, "one permutation per message");
    for p in perms {
        assert_eq!(p.len() as u64, block_count, "permutation covers all blocks");
    }
    let perm_of = |msg: u32, logical: u64| perms[(msg - 1) as usize][(logical - 1) as usize];

    // Repetition-1 desired layout: which round and server carries each
    // logical block. Later repetitions rotate the server only.
    let mut round_of = vec![0u32; block_count as usize];
    let mut server_rep1 = vec![0u32; block_count as usize];
    let mut next_block = 0usize;
    for round in 1..=params.messages() {
        let quota = round_desired_count(n, m, k, round) / n;
        for server in 1..=params.servers() {
            for _ in 0..quota {
                round_of[next_block] = round;
                server_rep1[next_block] = server;
                next_block += 1;
            }
        }
    }
    debug_assert_eq!(next_block as u64, block_count);

    let undesired: Vec<u32> = (1..=params.messages()).filter(|&x| x != theta).collect();
    let mut next_fresh: BTreeMap<u32, u64> = undesired.iter().map(|&x| (x, 1u64)).collect();

    let mut requests: Vec<Request> = Vec::new();
    let mut ledger: Vec<SideInfoGroup> = Vec::new();

    for rep in 1..=params.mds_k() {
        let mut desired_at: BTreeMap<(u32, u32), Vec<u64>> = BTreeMap::new();
        for j in 1..=block_count {
            let s0 = u64::from(server_rep1[(j - 1) as usize]);
            let server = ((s0 - 1 + u64::from(rep) - 1) % n) as u32 + 1;
            desired_at
                .entry((server, round_of[(j - 1) as usize]))
                .or_default()
                .push(j);
        }

        let mut prev_groups: Vec<usize> = Vec::new();
        for round in 1..=params.messages() {
            if round == 1 {
                for server in 1..=params.servers() {
                    for &j in desired_at.get(&(server, 1)).map_or(&[][..], Vec::as_slice) {
                        requests.push(Request {
                            server,
                            repetition: rep,
                            round,
                            terms: vec![BlockId {
                                message: theta,
                                index: perm_of(theta, j),
                            }],
                        });
                    }
                }
            } else {
                for server in 1..=params.servers() {
                    let fresh = desired_at.get(&(server, round)).map_or(&[][..], Vec::as_slice);
                    let avail: Vec<usize> = prev_groups
                        .iter()
                        .copied()
                        .filter(|&g| !ledger[g].servers.contains(&server))
                        .collect();
                    assert_eq!(
                        fresh.len(),
                        avail.len(),
                        "pairing mismatch at repetition {rep} round {round} server {server}"
                    );
                    for (&j, g) in fresh.iter().zip(avail) {
                        let mut terms = ledger[g].terms.clone();
                        terms.push(BlockId {
                            message: theta,
                            index: perm_of(theta, j),
                        });
                        terms.sort();
                        requests.push(Request {
                            server,
                            repetition: rep,
                            round,
                            terms,
                        });
                    }
                }
            }

            let mut cur_groups = Vec::new();
            if u64::from(round) < m {
                // groups per message subset; round_group_count aggregates
                // over all C(M-1, i) subsets
                let i = u64::from(round);
                let per_subset = n * k.pow((m - i - 1) as u32) * (n - k).pow((i - 1) as u32);
                for subset in subsets_of_size(&undesired, round as usize) {
                    for f in 0..per_subset {
                        let mut terms = Vec::with_capacity(subset.len());
                        for &msg in &subset {
                            let counter = next_fresh.get_mut(&msg).expect("undesired message");
                            if *counter > block_count {
                                return Err(PlanError::Infeasible {
                                    message: msg,
                                    needed: *counter,
                                    capacity: block_count,
                                });
                            }
                            terms.push(BlockId {
                                message: msg,
                                index: perm_of(msg, *counter),
                            });
                            *counter += 1;
                        }
                        terms.sort();
                        let start = (k * f) % n;
                        let servers: Vec<u32> =
                            (0..k).map(|t| ((start + t) % n) as u32 + 1).collect();
                        for &server in &servers {
                            requests.push(Request {
                                server,
                                repetition: rep,
                                round,
                                terms: terms.clone(),
                            });
                        }
                        ledger.push(SideInfoGroup {
                            repetition: rep,
                            round,
                            terms,
                            servers,
                        });
                        cur_groups.push(ledger.len() - 1);
                    }
                }
            }
            prev_groups = cur_groups;
        }
    }

    Ok(QueryPlan {
        params: *params.raw(),
        block_count,
        perms: perms.to_vec(),
        requests,
        side_info: ledger,
    })
}

/// Checks every schedule constraint against the plan as materialized, not
/// against how it was built; any single-request tampering is detected.
pub fn validate_plan(plan: &QueryPlan) -> Result<ValidationReport, PlanError> {
    let n = u64::from(plan.params.servers);
    let m = u64::from(plan.params.messages);
    let k = u64::from(plan.params.mds_k);
    let theta = plan.params.theta;
    let b = plan.block_count;

    // shape
    for req in &plan.requests {
        let terms_ok = !req.terms.is_empty()
            && req.terms.len() == req.round as usize
            && req.terms.windows(2).all(|w| w[0] < w[1]);
        if !terms_ok {
            return Err(violation(
                Constraint::Shape,
                format!(
                    "request at server {} repetition {} round {} must sum exactly {} strictly ordered terms",
                    req.server, req.repetition, req.round, req.round
                ),
            ));
        }
        let msgs: BTreeSet<u32> = req.terms.iter().map(|t| t.message).collect();
        if msgs.len() != req.terms.len() {
            return Err(violation(
                Constraint::Shape,
                format!("request at server {} repeats a message", req.server),
            ));
        }
        if req.terms.iter().filter(|t| t.message == theta).count() > 1 {
            return Err(violation(
                Constraint::Shape,
                format!("request at server {} has two desired terms", req.server),
            ));
        }
        let in_range = req.server >= 1
            && u64::from(req.server) <= n
            && req.repetition >= 1
            && u64::from(req.repetition) <= k
            && req.round >= 1
            && u64::from(req.round) <= m
            && req
                .terms
                .iter()
                .all(|t| t.message >= 1 && u64::from(t.message) <= m && t.index >= 1 && t.index <= b);
        if !in_range {
            return Err(violation(
                Constraint::Shape,
                format!(
                    "request at server {} repetition {} round {} addresses out-of-range ids",
                    req.server, req.repetition, req.round
                ),
            ));
        }
    }

    let desired: Vec<&Request> = plan
        .requests
        .iter()
        .filter(|r| r.desired_term(theta).is_some())
        .collect();
    let undesired: Vec<&Request> = plan
        .requests
        .iter()
        .filter(|r| r.desired_term(theta).is_none())
        .collect();

    // C1: per-repetition, per-round desired volume, and each desired block
    // index exactly once per repetition.
    for rep in 1..=plan.params.mds_k {
        for round in 1..=plan.params.messages {
            let got = desired
                .iter()
                .filter(|r| r.repetition == rep && r.round == round)
                .count() as u64;
            let want = round_desired_count(n, m, k, round);
            if got != want {
                return Err(violation(
                    Constraint::DesiredVolume,
                    format!("repetition {rep} round {round}: {got} desired requests, expected {want}"),
                ));
            }
        }
        let mut seen = vec![0u32; b as usize];
        for r in desired.iter().filter(|r| r.repetition == rep) {
            seen[(r.desired_term(theta).unwrap().index - 1) as usize] += 1;
        }
        if let Some(idx) = seen.iter().position(|&c| c != 1) {
            return Err(violation(
                Constraint::DesiredVolume,
                format!(
                    "repetition {rep}: desired block {} requested {} times, expected once",
                    idx + 1,
                    seen[idx]
                ),
            ));
        }
    }

    // C2: undesired volume per round, and group structure matching the ledger.
    let mut groups_by_key: BTreeMap<(u32, u32, Vec<BlockId>), Vec<u32>> = BTreeMap::new();
    for r in &undesired {
        groups_by_key
            .entry((r.repetition, r.round, r.terms.clone()))
            .or_default()
            .push(r.server);
    }
    for rep in 1..=plan.params.mds_k {
        for round in 1..=plan.params.messages {
            let got = undesired
                .iter()
                .filter(|r| r.repetition == rep && r.round == round)
                .count() as u64;
            let want = if u64::from(round) < m {
                round_undesired_count(n, m, k, round)
            } else {
                0
            };
            if got != want {
                return Err(violation(
                    Constraint::UndesiredVolume,
                    format!(
                        "repetition {rep} round {round}: {got} undesired requests, expected {want}"
                    ),
                ));
            }
            let group_count = groups_by_key
                .keys()
                .filter(|(gr, ro, _)| *gr == rep && *ro == round)
                .count() as u64;
            let want_groups = if u64::from(round) < m {
                round_group_count(n, m, k, round)
            } else {
                0
            };
            if group_count != want_groups {
                return Err(violation(
                    Constraint::UndesiredVolume,
                    format!(
                        "repetition {rep} round {round}: {group_count} side-info groups, expected {want_groups}"
                    ),
                ));
            }
        }
    }
    if plan.side_info.len() != groups_by_key.len() {
        return Err(violation(
            Constraint::UndesiredVolume,
            format!(
                "ledger lists {} groups but requests form {}",
                plan.side_info.len(),
                groups_by_key.len()
            ),
        ));
    }
    for g in &plan.side_info {
        let servers = groups_by_key
            .get(&(g.repetition, g.round, g.terms.clone()))
            .ok_or_else(|| {
                violation(
                    Constraint::UndesiredVolume,
                    format!("ledger group {:?} has no matching requests", g.terms),
                )
            })?;
        let mut sorted = servers.clone();
        sorted.sort_unstable();
        let mut expect = g.servers.clone();
        expect.sort_unstable();
        if sorted != expect {
            return Err(violation(
                Constraint::UndesiredVolume,
                format!("ledger group {:?} served at {sorted:?}, ledger says {expect:?}", g.terms),
            ));
        }
    }

    // C4 for groups: K pairwise distinct servers each.
    for (key, servers) in &groups_by_key {
        let distinct: BTreeSet<u32> = servers.iter().copied().collect();
        if servers.len() as u64 != k || distinct.len() as u64 != k {
            return Err(violation(
                Constraint::KSourceDecodability,
                format!(
                    "group {:?} (repetition {}, round {}) served at {:?}, expected {k} distinct servers",
                    key.2, key.0, key.1, servers
                ),
            ));
        }
    }

    // C3: each later-round desired request pairs exactly one group from the
    // previous round of the same repetition, at a server that did not serve
    // that group; no (group, server) pair is used twice.
    let mut pair_used: BTreeSet<(u32, u32, Vec<BlockId>, u32)> = BTreeSet::new();
    for r in &desired {
        let side = r.undesired_terms(theta);
        if r.round == 1 {
            if !side.is_empty() {
                return Err(violation(
                    Constraint::Pairing,
                    format!("round-1 desired request at server {} carries side terms", r.server),
                ));
            }
            continue;
        }
        let key = (r.repetition, r.round - 1, side.clone());
        let servers = groups_by_key.get(&key).ok_or_else(|| {
            violation(
                Constraint::Pairing,
                format!(
                    "desired request at server {} repetition {} round {} references side info {:?} that was never downloaded in round {}",
                    r.server, r.repetition, r.round, side, r.round - 1
                ),
            )
        })?;
        if servers.contains(&r.server) {
            return Err(violation(
                Constraint::Pairing,
                format!(
                    "server {} pairs side info {:?} it already served",
                    r.server, side
                ),
            ));
        }
        if !pair_used.insert((key.0, key.1, key.2.clone(), r.server)) {
            return Err(violation(
                Constraint::Pairing,
                format!("server {} reuses side info {:?}", r.server, side),
            ));
        }
    }

    // C4 for desired blocks: K requests at K distinct servers over the plan.
    let mut per_index: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for r in &desired {
        per_index
            .entry(r.desired_term(theta).unwrap().index)
            .or_default()
            .push(r.server);
    }
    for idx in 1..=b {
        let servers = per_index.get(&idx).map_or(&[][..], Vec::as_slice);
        let distinct: BTreeSet<u32> = servers.iter().copied().collect();
        if servers.len() as u64 != k || distinct.len() as u64 != k {
            return Err(violation(
                Constraint::KSourceDecodability,
                format!(
                    "desired block {idx} requested at servers {servers:?}, expected {k} distinct"
                ),
            ));
        }
    }

    // C5: every undesired block index belongs to at most one group, ever.
    let mut owner: BTreeMap<(u32, u64), (u32, u32, Vec<BlockId>)> = BTreeMap::new();
    for key in groups_by_key.keys() {
        for t in &key.2 {
            if let Some(prev) = owner.insert((t.message, t.index), key.clone()) {
                return Err(violation(
                    Constraint::Freshness,
                    format!(
                        "undesired block (message {}, index {}) used by group {:?} and again by {:?}",
                        t.message, t.index, prev.2, key.2
                    ),
                ));
            }
        }
    }

    // C6: per (server, sum size), each message appears in equally many
    // requests.
    for server in 1..=plan.params.servers {
        for size in 1..=plan.params.messages {
            let mut counts = vec![0u64; plan.params.messages as usize];
            for r in plan
                .requests
                .iter()
                .filter(|r| r.server == server && r.terms.len() == size as usize)
            {
                for t in &r.terms {
                    counts[(t.message - 1) as usize] += 1;
                }
            }
            if counts.iter().any(|&c| c != counts[0]) {
                return Err(violation(
                    Constraint::MessageSymmetry,
                    format!("server {server}, sum size {size}: per-message counts {counts:?}"),
                ));
            }
        }
    }

    Ok(ValidationReport {
        desired_requests: desired.len() as u64,
        undesired_requests: undesired.len() as u64,
        desired_formula: desired_request_total(n, m, k),
        undesired_formula: undesired_request_total(n, m, k),
        side_info_groups: plan.side_info.len() as u64,
    })
}
