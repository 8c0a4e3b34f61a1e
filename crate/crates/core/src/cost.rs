//! Exact-rational cost accounting: the achievable upload/download curve,
//! the costs of the reference scheme it is compared against, convex hulls,
//! and memory sharing.
//!
//! Everything here is arbitrary-precision rational arithmetic. Curve claims
//! like "21/8 exactly" or "strictly below at equal upload" are decided by
//! exact comparison, never floating point.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational; canonical reduced form with positive denominator is
/// maintained by the representation itself.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    #[error("MDS parameter K={k} out of range for N={n} servers")]
    KOutOfRange { n: u64, k: u64 },
    #[error("memory-sharing weight must lie in [0, 1]")]
    AlphaOutOfRange,
    #[error("bad factorization: need m1 >= 1 and m2 >= 1, got ({m1}, {m2})")]
    BadFactorization { m1: u64, m2: u64 },
}

/// One (upload, download) cost pair with a human-readable origin label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatingPoint {
    pub upload: Rational,
    pub download: Rational,
    pub label: String,
}

pub fn rat(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as exact (numerator, denominator) decimal strings.
pub fn rational_parts(r: &Rational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

/// Parses back what [`rational_parts`] produced.
pub fn rational_from_parts(num: &str, den: &str) -> Option<Rational> {
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// The achievable operating point for `servers` servers, `messages` public
/// matrices and MDS parameter `k`:
/// `U = N/(K-1)`, `D = (K/(K-1)) * (1 + K/N + ... + (K/N)^(M-1))`.
///
/// The download cost is evaluated as the M-term sum, which stays defined at
/// `K = N` where the geometric closed form has a removable singularity.
pub fn achievable_point(servers: u64, messages: u64, k: u64) -> Result<OperatingPoint, CostError> {
    if k < 2 || k > servers {
        return Err(CostError::KOutOfRange { n: servers, k });
    }
    assert!(messages >= 1, "need at least one public matrix");
    let ratio = frac(k, servers);
    let mut series = Rational::zero();
    let mut term = Rational::one();
    for _ in 0..messages {
        series += &term;
        term *= &ratio;
    }
    let download = frac(k, k - 1) * series;
    Ok(OperatingPoint {
        upload: frac(servers, k - 1),
        download,
        label: format!("proposed N={servers} M={messages} K={k}"),
    })
}

/// Minimum achievable upload cost `N/(N-1)` for any scheme on N servers,
/// privacy constraint or not.
pub fn min_upload(servers: u64) -> Rational {
    assert!(servers >= 2, "need at least two servers");
    frac(servers, servers - 1)
}

/// Reference-scheme operating point for partition parameters `(m1, m2)`:
/// `N = (m1+1)(m2+1)`, `(U, D) = (N/m1, N/(m1*m2))`.
pub fn kimlee_point(m1: u64, m2: u64) -> Result<OperatingPoint, CostError> {
    if m1 < 1 || m2 < 1 {
        return Err(CostError::BadFactorization { m1, m2 });
    }
    let n = (m1 + 1) * (m2 + 1);
    Ok(OperatingPoint {
        upload: frac(n, m1),
        download: frac(n, m1 * m2),
        label: format!("kimlee N={n} m1={m1} m2={m2}"),
    })
}

/// Reference-scheme point in the K-parameterization used for head-to-head
/// comparison at equal upload: `(N/(K-1), (K/(K-1)) * N/(N-K))`.
/// Undefined at `K = N`.
pub fn kimlee_point_k(servers: u64, k: u64) -> Result<OperatingPoint, CostError> {
    if k < 2 || k >= servers {
        return Err(CostError::KOutOfRange { n: servers, k });
    }
    Ok(OperatingPoint {
        upload: frac(servers, k - 1),
        download: frac(k, k - 1) * frac(servers, servers - k),
        label: format!("kimlee N={servers} K={k}"),
    })
}

/// All `(m1, m2)` with `(m1+1)(m2+1) = servers`, `m1, m2 >= 1`, ascending m1.
pub fn kimlee_factorizations(servers: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for a in 2..=servers {
        if servers.is_multiple_of(a) {
            let b = servers / a;
            if b >= 2 {
                out.push((a - 1, b - 1));
            }
        }
    }
    out
}

/// Convex combination of two operating points (memory sharing over a row
/// split of the confidential matrix).
pub fn memory_share(
    pt1: &OperatingPoint,
    pt2: &OperatingPoint,
    alpha: &Rational,
) -> Result<OperatingPoint, CostError> {
    if alpha.is_negative() || alpha > &Rational::one() {
        return Err(CostError::AlphaOutOfRange);
    }
    let beta = Rational::one() - alpha;
    Ok(OperatingPoint {
        upload: alpha * &pt1.upload + &beta * &pt2.upload,
        download: alpha * &pt1.download + &beta * &pt2.download,
        label: format!("share alpha={alpha} of [{}] and [{}]", pt1.label, pt2.label),
    })
}

fn cross(o: &(Rational, Rational), a: &(Rational, Rational), b: &(Rational, Rational)) -> Rational {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Vertices of the lower-left envelope: sorted by upload, strictly
/// decreasing download, convex.
fn hull_chain(points: &[OperatingPoint]) -> Vec<(Rational, Rational)> {
    // Collapse to the cheapest download per distinct upload.
    let mut best: Vec<(Rational, Rational)> = Vec::new();
    let mut sorted: Vec<_> = points
        .iter()
        .map(|p| (p.upload.clone(), p.download.clone()))
        .collect();
    sorted.sort();
    for (u, d) in sorted {
        match best.last() {
            Some((lu, _)) if *lu == u => {} // same upload, larger download: skip
            _ => best.push((u, d)),
        }
    }
    // Monotone chain over the deduped points; keep collinear points out of
    // the vertex list (membership handles them).
    let mut chain: Vec<(Rational, Rational)> = Vec::new();
    for p in best {
        while chain.len() >= 2 {
            let a = &chain[chain.len() - 2];
            let b = &chain[chain.len() - 1];
            if cross(a, b, &p) <= Rational::zero() {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p);
    }
    // Drop the ascending tail: a vertex with download >= the running minimum
    // is dominated by an earlier one.
    let mut trimmed: Vec<(Rational, Rational)> = Vec::new();
    for v in chain {
        match trimmed.last() {
            Some((_, last_d)) if v.1 >= *last_d => break,
            _ => trimmed.push(v),
        }
    }
    trimmed
}

fn on_chain(chain: &[(Rational, Rational)], q: &(Rational, Rational)) -> bool {
    if chain.is_empty() {
        return false;
    }
    if chain.len() == 1 {
        return chain[0] == *q;
    }
    for w in chain.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.0 <= q.0 && q.0 <= b.0 && cross(a, b, q) == Rational::zero() {
            return true;
        }
    }
    false
}

/// Flags each input point as on/off the lower-left convex envelope.
pub fn on_lower_hull_flags(points: &[OperatingPoint]) -> Vec<bool> {
    let chain = hull_chain(points);
    points
        .iter()
        .map(|p| on_chain(&chain, &(p.upload.clone(), p.download.clone())))
        .collect()
}

/// Subset of points on the lower-left convex envelope, sorted by upload.
pub fn lower_convex_hull(points: &[OperatingPoint]) -> Vec<OperatingPoint> {
    assert!(!points.is_empty(), "hull of empty point set");
    let flags = on_lower_hull_flags(points);
    let mut kept: Vec<OperatingPoint> = points
        .iter()
        .zip(flags)
        .filter(|(_, f)| *f)
        .map(|(p, _)| p.clone())
        .collect();
    kept.sort_by(|a, b| (&a.upload, &a.download).cmp(&(&b.upload, &b.download)));
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: Rational, d: Rational) -> OperatingPoint {
        OperatingPoint {
            upload: u,
            download: d,
            label: String::new(),
        }
    }

    /// Binomial-sum route to the download cost, following the per-round
    /// request counts rather than the geometric series.
    fn download_from_counts(n: u64, m: u64, k: u64) -> Rational {
        let desired: u64 = (0..m)
            .map(|i| n * binomial(m - 1, i) * k.pow((m - i - 1) as u32) * (n - k).pow(i as u32))
            .sum::<u64>()
            * k;
        let undesired: u64 = (1..m)
            .map(|i| n * binomial(m - 1, i) * k.pow((m - i) as u32) * (n - k).pow((i - 1) as u32))
            .sum::<u64>()
            * k;
        frac(k, k - 1) * (Rational::one() + frac(undesired, 1) / frac(desired, 1))
    }

    fn binomial(n: u64, r: u64) -> u64 {
        if r > n {
            return 0;
        }
        let mut acc = 1u64;
        for i in 0..r {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn worked_example_point() {
        let p = achievable_point(4, 2, 3).unwrap();
        assert_eq!(p.upload, rat(2));
        assert_eq!(p.download, frac(21, 8));
    }

    #[test]
    fn single_message_full_k_point() {
        for n in 2..=7 {
            let p = achievable_point(n, 1, n).unwrap();
            assert_eq!(p.upload, frac(n, n - 1));
            assert_eq!(p.download, frac(n, n - 1));
        }
    }

    #[test]
    fn k_equals_n_sums_m_equal_terms() {
        let p = achievable_point(12, 6, 12).unwrap();
        assert_eq!(p.upload, frac(12, 11));
        assert_eq!(p.download, frac(72, 11));
    }

    #[test]
    fn k_range_is_enforced() {
        assert_eq!(
            achievable_point(4, 2, 1),
            Err(CostError::KOutOfRange { n: 4, k: 1 })
        );
        assert_eq!(
            achievable_point(4, 2, 5),
            Err(CostError::KOutOfRange { n: 4, k: 5 })
        );
    }

    #[test]
    fn download_matches_binomial_and_geometric_forms() {
        for n in 2..=12u64 {
            for m in 1..=6u64 {
                for k in 2..=n {
                    let series = achievable_point(n, m, k).unwrap().download;
                    assert_eq!(series, download_from_counts(n, m, k), "N={n} M={m} K={k}");
                    if k < n {
                        let geometric = frac(k, k - 1)
                            * ((Rational::one() - frac(k, n).pow(m as i32))
                                / (Rational::one() - frac(k, n)));
                        assert_eq!(series, geometric, "N={n} M={m} K={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn min_upload_values() {
        assert_eq!(min_upload(4), frac(4, 3));
        assert_eq!(min_upload(2), rat(2));
        // monotone decreasing toward 1
        for n in 2..40 {
            assert!(min_upload(n) > min_upload(n + 1));
            assert!(min_upload(n + 1) > Rational::one());
        }
    }

    #[test]
    fn upload_bound_holds_with_equality_only_at_full_k() {
        for n in 2..=8u64 {
            for m in 1..=4u64 {
                for k in 2..=n {
                    let p = achievable_point(n, m, k).unwrap();
                    assert!(p.upload >= min_upload(n));
                    assert_eq!(p.upload == min_upload(n), k == n);
                }
            }
        }
    }

    #[test]
    fn kimlee_reference_points() {
        let p = kimlee_point(2, 3).unwrap();
        assert_eq!(p.upload, rat(6));
        assert_eq!(p.download, rat(2));

        let p = kimlee_point(1, 5).unwrap();
        assert_eq!(p.upload, rat(12));
        assert_eq!(p.download, frac(12, 5));

        assert_eq!(
            kimlee_point(0, 3),
            Err(CostError::BadFactorization { m1: 0, m2: 3 })
        );
    }

    #[test]
    fn kimlee_k_form_agrees_with_factored_form() {
        // m1 = K-1, m2 chosen so (m1+1)(m2+1) = N
        let k_form = kimlee_point_k(12, 2).unwrap();
        let pair_form = kimlee_point(1, 5).unwrap();
        assert_eq!(k_form.upload, pair_form.upload);
        assert_eq!(k_form.download, pair_form.download);
        for (k, (m1, m2)) in [(3u64, (2u64, 3u64)), (4, (3, 2)), (6, (5, 1))] {
            let a = kimlee_point_k(12, k).unwrap();
            let b = kimlee_point(m1, m2).unwrap();
            assert_eq!((a.upload, a.download), (b.upload, b.download));
        }
        assert!(kimlee_point_k(12, 12).is_err());
    }

    #[test]
    fn kimlee_factorizations_of_twelve() {
        assert_eq!(
            kimlee_factorizations(12),
            vec![(1, 5), (2, 3), (3, 2), (5, 1)]
        );
        assert!(kimlee_factorizations(2).is_empty());
    }

    #[test]
    fn proposed_scheme_dominates_reference_at_equal_upload() {
        for k in [2u64, 3, 4, 6] {
            let ours = achievable_point(12, 6, k).unwrap();
            let theirs = kimlee_point_k(12, k).unwrap();
            assert_eq!(ours.upload, theirs.upload);
            assert!(
                ours.download < theirs.download,
                "K={k}: {} !< {}",
                ours.download,
                theirs.download
            );
        }
    }

    #[test]
    fn memory_share_endpoints_and_midpoint() {
        let a = achievable_point(4, 2, 3).unwrap();
        let b = achievable_point(4, 2, 4).unwrap();
        assert_eq!(b.upload, frac(4, 3));
        assert_eq!(b.download, frac(8, 3));

        let at0 = memory_share(&a, &b, &Rational::zero()).unwrap();
        assert_eq!((at0.upload, at0.download), (b.upload.clone(), b.download.clone()));
        let at1 = memory_share(&a, &b, &Rational::one()).unwrap();
        assert_eq!((at1.upload, at1.download), (a.upload.clone(), a.download.clone()));

        let mid = memory_share(&a, &b, &frac(1, 2)).unwrap();
        assert_eq!(mid.upload, frac(5, 3));
        assert_eq!(mid.download, frac(127, 48));

        assert_eq!(
            memory_share(&a, &b, &frac(3, 2)),
            Err(CostError::AlphaOutOfRange)
        );
    }

    #[test]
    fn hull_of_single_point_is_itself() {
        let p = pt(rat(2), rat(3));
        assert_eq!(lower_convex_hull(std::slice::from_ref(&p)), vec![p]);
    }

    #[test]
    fn dominated_point_is_excluded() {
        let a = pt(rat(1), rat(2));
        let b = pt(rat(2), rat(1));
        let dominated = pt(rat(2), rat(3));
        let hull = lower_convex_hull(&[a.clone(), dominated, b.clone()]);
        assert_eq!(hull, vec![a, b]);
    }

    #[test]
    fn collinear_point_stays_on_hull() {
        let a = pt(rat(1), rat(5));
        let m = pt(rat(2), rat(4));
        let b = pt(rat(3), rat(3));
        let hull = lower_convex_hull(&[b.clone(), a.clone(), m.clone()]);
        assert_eq!(hull, vec![a, m, b]);
    }

    /// Brute-force envelope membership: dominated by a single point, or
    /// strictly above the segment between some spanning pair.
    fn on_hull_brute(points: &[OperatingPoint], idx: usize) -> bool {
        let q = &points[idx];
        for (j, p) in points.iter().enumerate() {
            if j == idx {
                continue;
            }
            let weakly = p.upload <= q.upload && p.download <= q.download;
            let strictly = p.upload < q.upload || p.download < q.download;
            if weakly && strictly {
                return false;
            }
        }
        for a in points {
            for b in points {
                if a.upload < q.upload && q.upload < b.upload {
                    let t = (&q.upload - &a.upload) / (&b.upload - &a.upload);
                    let interp = &a.download + &t * (&b.download - &a.download);
                    if interp < q.download {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn hull_flags_match_brute_force_on_tradeoff_curve() {
        let mut points: Vec<OperatingPoint> =
            (2..=12).map(|k| achievable_point(12, 6, k).unwrap()).collect();
        // add some dominated and collinear decoys
        points.push(pt(rat(20), rat(20)));
        points.push(pt(rat(3), rat(4)));
        let flags = on_lower_hull_flags(&points);
        for (i, flag) in flags.iter().enumerate() {
            assert_eq!(
                *flag,
                on_hull_brute(&points, i),
                "point {} ({}, {})",
                i,
                points[i].upload,
                points[i].download
            );
        }
    }

    #[test]
    fn rational_parts_round_trip() {
        for r in [frac(21, 8), rat(2), frac(12, 5), Rational::zero()] {
            let (n, d) = rational_parts(&r);
            assert_eq!(rational_from_parts(&n, &d).unwrap(), r);
        }
        assert!(rational_from_parts("1", "0").is_none());
    }
}
