use maskdp::calibration::{
    calibrate, diff_against_reference, parse_reference, sigma_cor3_bc, sigma_cor4_bc,
    sigma_joint_bc, sigma_necessary_a, sigma_sufficient_a, sigma_sufficient_a_simple,
    sigma_thm2_bc, table1_rows, thm2_linear_coefficient, Binding, PrivacyBudget, ProblemShape,
    Table1Grid,
};
use maskdp::par::Exec;
use proptest::prelude::*;

const REFERENCE: &str = include_str!("../data/table1_reference.csv");

fn budget(e: f64, d: f64) -> PrivacyBudget {
    PrivacyBudget::new(e, d).unwrap()
}

fn shape(n: usize, p: usize) -> ProblemShape {
    ProblemShape::new(n, p).unwrap()
}

/// (ε, δ, n, p) with ε < 1, δ < 0.05, n > p.
fn valid_inputs() -> impl Strategy<Value = (f64, f64, usize, usize)> {
    (-7.0f64..-0.01, -25.0f64..-3.0, 1usize..40, 1usize..5000)
        .prop_map(|(le, ld, p, extra)| (le.exp(), ld.exp(), p + extra, p))
}

#[test]
fn table_matches_reference() {
    let rows = table1_rows(&Table1Grid::default(), Exec::default()).unwrap();
    let reference = parse_reference(REFERENCE).unwrap();
    assert_eq!(rows.len(), 54);
    assert_eq!(reference.len(), 54);
    let mismatches = diff_against_reference(&rows, &reference, 0.05, 0.005);
    assert!(mismatches.is_empty(), "{mismatches:?}");
}

#[test]
fn a_sufficient_rows_have_unit_ratio() {
    for row in table1_rows(&Table1Grid::default(), Exec::Sequential).unwrap() {
        if row.binding == Binding::ASufficient {
            assert_eq!(row.ratio, 1.0);
        }
    }
}

#[test]
fn spot_rows() {
    let rows = table1_rows(&Table1Grid::default(), Exec::Sequential).unwrap();
    let find = |e: f64, d: f64, p: usize, n: usize| {
        rows.iter()
            .find(|r| r.epsilon == e && r.delta == d && r.p == p && r.n == n)
            .unwrap()
            .clone()
    };
    let r = find(0.01, 0.001, 5, 1000);
    assert!((r.sigma_bc - 74.6).abs() < 0.05 && (r.ratio - 0.229).abs() < 5e-4);
    let r = find(0.001, 0.01, 20, 1000);
    assert!((r.sigma_bc - 916.5).abs() < 0.05 && (r.ratio - 0.361).abs() < 5e-4);
}

#[test]
fn sequential_and_parallel_tables_agree() {
    let grid = Table1Grid::default();
    assert_eq!(
        table1_rows(&grid, Exec::Sequential).unwrap(),
        table1_rows(&grid, Exec::default()).unwrap()
    );
}

#[test]
fn report_json_field_names() {
    let r = calibrate(&budget(0.1, 0.01), &shape(100, 1)).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "sigma_necessary_A",
        "sigma_sufficient_A",
        "sigma_thm2_BC",
        "sigma_joint_BC",
        "sigma_cor3_BC",
        "sigma_cor4_BC",
        "binding_formula",
        "ratio_BC_over_A",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["binding_formula"], "BC_theorem2");
    assert!((v["ratio_BC_over_A"].as_f64().unwrap() - 0.242).abs() < 5e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ordering_chain((e, d, n, p) in valid_inputs()) {
        let (b, s) = (budget(e, d), shape(n, p));
        let thm2 = sigma_thm2_bc(&b, &s).unwrap();
        let cor3 = sigma_cor3_bc(&b, &s).unwrap();
        let cor4 = sigma_cor4_bc(&b, &s).unwrap();
        prop_assert!(thm2 <= cor3 * (1.0 + 1e-12), "thm2 {} > cor3 {}", thm2, cor3);
        prop_assert!(cor3 <= cor4 * (1.0 + 1e-12), "cor3 {} > cor4 {}", cor3, cor4);
        let nec = sigma_necessary_a(&b).unwrap();
        let suf = sigma_sufficient_a(&b).unwrap();
        let simple = sigma_sufficient_a_simple(&b).unwrap();
        prop_assert!(nec <= suf && suf <= simple);
    }

    #[test]
    fn joint_never_exceeds_a((e, d, n, p) in valid_inputs()) {
        let (b, s) = (budget(e, d), shape(n, p));
        let joint = sigma_joint_bc(&b, &s).unwrap();
        prop_assert!(joint.sigma <= sigma_sufficient_a(&b).unwrap());
        prop_assert!(!joint.degraded);
    }

    #[test]
    fn root_residual((e, d, n, p) in valid_inputs()) {
        let (b, s) = (budget(e, d), shape(n, p));
        let sigma = sigma_thm2_bc(&b, &s).unwrap();
        let lin = thm2_linear_coefficient(&b, &s).unwrap();
        let (nf, pf) = (n as f64, p as f64);
        let v = sigma * sigma;
        let lead = e * (nf - pf) * v * v;
        let residual = lead - lin * v - 2.0 * nf * pf * pf;
        let scale = lead.max(lin * v).max(2.0 * nf * pf * pf);
        prop_assert!(residual.abs() <= 1e-8 * scale, "relative residual {}", residual / scale);
    }

    #[test]
    fn bounds_non_increasing_in_epsilon((e, d, n, p) in valid_inputs(), f in 1.0f64..3.0) {
        let e2 = (e * f).min(0.999);
        prop_assume!(e2 > e);
        let s = shape(n, p);
        let (lo, hi) = (budget(e, d), budget(e2, d));
        prop_assert!(sigma_necessary_a(&hi).unwrap() <= sigma_necessary_a(&lo).unwrap());
        prop_assert!(sigma_sufficient_a(&hi).unwrap() <= sigma_sufficient_a(&lo).unwrap());
        prop_assert!(sigma_sufficient_a_simple(&hi).unwrap() <= sigma_sufficient_a_simple(&lo).unwrap());
        prop_assert!(sigma_thm2_bc(&hi, &s).unwrap() <= sigma_thm2_bc(&lo, &s).unwrap());
        prop_assert!(sigma_joint_bc(&hi, &s).unwrap().sigma <= sigma_joint_bc(&lo, &s).unwrap().sigma);
        prop_assert!(sigma_cor3_bc(&hi, &s).unwrap() <= sigma_cor3_bc(&lo, &s).unwrap());
        prop_assert!(sigma_cor4_bc(&hi, &s).unwrap() <= sigma_cor4_bc(&lo, &s).unwrap());
    }

    #[test]
    fn bounds_non_increasing_in_delta((e, d, n, p) in valid_inputs(), f in 1.0f64..3.0) {
        let d2 = (d * f).min(0.0499);
        prop_assume!(d2 > d);
        let s = shape(n, p);
        let (lo, hi) = (budget(e, d), budget(e, d2));
        prop_assert!(sigma_necessary_a(&hi).unwrap() <= sigma_necessary_a(&lo).unwrap());
        prop_assert!(sigma_sufficient_a(&hi).unwrap() <= sigma_sufficient_a(&lo).unwrap());
        prop_assert!(sigma_sufficient_a_simple(&hi).unwrap() <= sigma_sufficient_a_simple(&lo).unwrap());
        prop_assert!(sigma_thm2_bc(&hi, &s).unwrap() <= sigma_thm2_bc(&lo, &s).unwrap());
        prop_assert!(sigma_joint_bc(&hi, &s).unwrap().sigma <= sigma_joint_bc(&lo, &s).unwrap().sigma);
        prop_assert!(sigma_cor3_bc(&hi, &s).unwrap() <= sigma_cor3_bc(&lo, &s).unwrap());
        prop_assert!(sigma_cor4_bc(&hi, &s).unwrap() <= sigma_cor4_bc(&lo, &s).unwrap());
    }

    #[test]
    fn thm2_non_decreasing_in_p((e, d, n, p) in valid_inputs()) {
        prop_assume!(n > p + 1);
        let b = budget(e, d);
        prop_assert!(sigma_thm2_bc(&b, &shape(n, p + 1)).unwrap() >= sigma_thm2_bc(&b, &shape(n, p)).unwrap());
    }

    #[test]
    fn thm2_non_increasing_in_n((e, d, n, p) in valid_inputs(), extra in 1usize..500) {
        prop_assume!(n > 2 * p);
        let b = budget(e, d);
        prop_assert!(sigma_thm2_bc(&b, &shape(n + extra, p)).unwrap() <= sigma_thm2_bc(&b, &shape(n, p)).unwrap());
    }
}
