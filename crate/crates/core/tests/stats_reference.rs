//! Checks the statistics routines against values produced once by scipy and
//! statsmodels (`fixtures/gen_stats_reference.py`).

use calmfeed_core::stats::{holm_adjust, paired_t, student_t_cdf, student_t_sf};
use serde::Deserialize;

#[derive(Deserialize)]
struct Reference {
    paired_t: Vec<PairedCase>,
    holm: Vec<HolmCase>,
    student_t_cdf: Vec<CdfCase>,
}

#[derive(Deserialize)]
struct PairedCase {
    baseline: Vec<f64>,
    treatment: Vec<f64>,
    t: f64,
    p: f64,
}

#[derive(Deserialize)]
struct HolmCase {
    p: Vec<f64>,
    adjusted: Vec<f64>,
}

#[derive(Deserialize)]
struct CdfCase {
    df: f64,
    t: f64,
    cdf: f64,
    sf: f64,
}

fn reference() -> Reference {
    serde_json::from_str(include_str!("fixtures/stats_reference.json")).unwrap()
}

#[test]
fn paired_t_matches_reference() {
    let r = reference();
    assert_eq!(r.paired_t.len(), 20);
    for (i, case) in r.paired_t.iter().enumerate() {
        let got = paired_t(&case.baseline, &case.treatment).unwrap();
        assert!((got.t - case.t).abs() < 1e-6, "case {i}: t {} vs {}", got.t, case.t);
        assert!((got.p - case.p).abs() < 1e-6, "case {i}: p {} vs {}", got.p, case.p);
        assert!(
            ((got.p - case.p) / case.p).abs() < 1e-8,
            "case {i}: relative p error"
        );
    }
}

#[test]
fn holm_matches_reference() {
    for (i, case) in reference().holm.iter().enumerate() {
        let got = holm_adjust(&case.p).unwrap();
        for (g, w) in got.iter().zip(&case.adjusted) {
            assert!((g - w).abs() < 1e-12, "case {i}: {got:?} vs {:?}", case.adjusted);
        }
    }
}

#[test]
fn student_t_matches_reference() {
    for case in reference().student_t_cdf {
        let cdf = student_t_cdf(case.t, case.df);
        assert!(
            (cdf - case.cdf).abs() < 1e-10,
            "df {} t {}: {cdf} vs {}",
            case.df,
            case.t,
            case.cdf
        );
        let sf = student_t_sf(case.t, case.df);
        if case.sf > 0.0 {
            assert!(
                ((sf - case.sf) / case.sf).abs() < 1e-9,
                "df {} t {}: sf {sf:e} vs {:e}",
                case.df,
                case.t,
                case.sf
            );
        }
    }
}
