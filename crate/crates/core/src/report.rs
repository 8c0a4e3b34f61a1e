//! Tradeoff-curve CSV emission.
//!
//! Schema: `scheme,param,U_num,U_den,D_num,D_den,on_hull` with exact
//! integer numerators and denominators, never floats. Hull membership is
//! flagged within each scheme family.

use std::io::Write;
use std::path::Path;

use crate::cost::{
    kimlee_factorizations, kimlee_point, kimlee_point_k, on_lower_hull_flags, rational_parts,
    achievable_point, CostError, OperatingPoint,
};

pub const CSV_HEADER: &str = "scheme,param,U_num,U_den,D_num,D_den,on_hull";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffRow {
    pub scheme: String,
    pub param: String,
    pub point: OperatingPoint,
    pub on_hull: bool,
}

impl TradeoffRow {
    pub fn to_csv_line(&self) -> String {
        let (un, ud) = rational_parts(&self.point.upload);
        let (dn, dd) = rational_parts(&self.point.download);
        format!(
            "{},{},{},{},{},{},{}",
            self.scheme, self.param, un, ud, dn, dd, self.on_hull
        )
    }
}

fn flag_family(scheme: &str, labeled: Vec<(String, OperatingPoint)>) -> Vec<TradeoffRow> {
    let points: Vec<OperatingPoint> = labeled.iter().map(|(_, p)| p.clone()).collect();
    let flags = on_lower_hull_flags(&points);
    labeled
        .into_iter()
        .zip(flags)
        .map(|((param, point), on_hull)| TradeoffRow {
            scheme: scheme.into(),
            param,
            point,
            on_hull,
        })
        .collect()
}

/// Proposed-scheme rows for K = 2..N.
pub fn proposed_rows(servers: u64, messages: u64) -> Result<Vec<TradeoffRow>, CostError> {
    let labeled = (2..=servers)
        .map(|k| Ok((format!("K={k}"), achievable_point(servers, messages, k)?)))
        .collect::<Result<Vec<_>, CostError>>()?;
    Ok(flag_family("proposed", labeled))
}

/// Reference-scheme rows, one per factorization `(m1+1)(m2+1) = N`.
pub fn kimlee_rows(servers: u64) -> Result<Vec<TradeoffRow>, CostError> {
    let labeled = kimlee_factorizations(servers)
        .into_iter()
        .map(|(m1, m2)| Ok((format!("m1={m1};m2={m2}"), kimlee_point(m1, m2)?)))
        .collect::<Result<Vec<_>, CostError>>()?;
    Ok(flag_family("kimlee", labeled))
}

/// All rows of the tradeoff figure: the proposed curve plus every
/// reference-scheme point that exists for this server count.
pub fn tradeoff_rows(servers: u64, messages: u64) -> Result<Vec<TradeoffRow>, CostError> {
    let mut rows = proposed_rows(servers, messages)?;
    rows.extend(kimlee_rows(servers)?);
    Ok(rows)
}

/// One head-to-head comparison at equal upload cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceRow {
    pub k: u64,
    pub ours: OperatingPoint,
    pub theirs: OperatingPoint,
    /// Our download cost is strictly smaller at the same upload cost.
    pub dominates: bool,
}

/// Compares the proposed scheme against the reference at every K where the
/// reference has a matching point (`m1 = K-1`, which needs `K | N` and
/// `N/K >= 2`).
pub fn kimlee_comparison(servers: u64, messages: u64) -> Result<Vec<DominanceRow>, CostError> {
    let mut rows = Vec::new();
    for k in 2..=servers / 2 {
        if !servers.is_multiple_of(k) {
            continue;
        }
        let ours = achievable_point(servers, messages, k)?;
        let theirs = kimlee_point_k(servers, k)?;
        debug_assert_eq!(ours.upload, theirs.upload);
        let dominates = ours.download < theirs.download;
        rows.push(DominanceRow {
            k,
            ours,
            theirs,
            dominates,
        });
    }
    Ok(rows)
}

/// CSV rows for the equal-upload comparison: both schemes at every matched
/// K, hull flags within each family.
pub fn kimlee_point_k_rows(servers: u64, messages: u64) -> Result<Vec<TradeoffRow>, CostError> {
    let comparison = kimlee_comparison(servers, messages)?;
    let ours = flag_family(
        "proposed",
        comparison
            .iter()
            .map(|r| (format!("K={}", r.k), r.ours.clone()))
            .collect(),
    );
    let theirs = flag_family(
        "kimlee",
        comparison
            .iter()
            .map(|r| (format!("K={}", r.k), r.theirs.clone()))
            .collect(),
    );
    Ok(ours.into_iter().chain(theirs).collect())
}

pub fn rows_to_csv(rows: &[TradeoffRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, rows: &[TradeoffRow]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(rows_to_csv(rows).as_bytes())
}

/// Parses a CSV produced by [`rows_to_csv`] back into exact points;
/// used to check the emitted rationals survive a round trip.
pub fn parse_csv(text: &str) -> Option<Vec<TradeoffRow>> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return None;
        }
        let upload = crate::cost::rational_from_parts(fields[2], fields[3])?;
        let download = crate::cost::rational_from_parts(fields[4], fields[5])?;
        rows.push(TradeoffRow {
            scheme: fields[0].into(),
            param: fields[1].into(),
            point: OperatingPoint {
                upload,
                download,
                label: format!("{} {}", fields[0], fields[1]),
            },
            on_hull: fields[6] == "true",
        });
    }
    Some(rows)
}
