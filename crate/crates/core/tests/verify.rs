use relpot::envelopes;
use relpot::verify::{
    self, check_envelope, check_harmonicity, check_identity, HarmonicityInput, Harness, Kind, Verdict, VerifyConfig, CSV_COLUMNS,
};
use relpot::{Error, McConfig, ProcessParams};

fn cfg() -> VerifyConfig {
    VerifyConfig::canonical()
}

/// A one-α tail configuration small enough for unit-test time.
fn small_tail(x: Vec<f64>, t: Vec<f64>, n: usize) -> VerifyConfig {
    let mut c = cfg();
    c.restrict_alpha(1.0);
    c.envelopes.tail.x = x;
    c.envelopes.tail.t = t;
    c.envelopes.tail.n = n;
    c
}

#[test]
fn registry_covers_every_envelope_and_identity() {
    let reg = verify::registry();
    for b in envelopes::bands() {
        let c = reg.iter().find(|c| c.name == b.name).unwrap_or_else(|| panic!("band {} has no check", b.name));
        assert_eq!(c.kind, Kind::Envelope);
        assert_eq!(c.citation, b.citation);
    }
    let ids: Vec<&str> = reg.iter().filter(|c| c.kind == Kind::Identity).map(|c| c.name).collect();
    for n in ["laplace", "normalization", "levy-reps", "green1-mass", "scaling", "gauss-lower", "ikeda-watanabe", "chapman-kolmogorov"] {
        assert!(ids.contains(&n), "{n}");
    }
    assert!(reg.iter().all(|c| !c.citation.is_empty()));
    let mut names: Vec<&str> = reg.iter().map(|c| c.name).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), reg.len(), "duplicate check names");
}

#[test]
fn suite_resolution() {
    let h = Harness::new(cfg()).unwrap();
    let all: Vec<&str> = h.resolve("all").unwrap().iter().map(|c| c.name).collect();
    let enabled: Vec<&str> = verify::registry().iter().filter(|c| c.enabled).map(|c| c.name).collect();
    assert_eq!(all, enabled);
    assert!(!all.contains(&"killed-density-offdiag"));
    assert_eq!(h.resolve("identities").unwrap().len(), 8);
    assert_eq!(h.resolve("envelopes").unwrap().len(), envelopes::bands().len());
    assert_eq!(h.resolve("tail").unwrap().len(), 1);
    let names = verify::suite_names();
    assert_eq!(&names[..3], ["all", "identities", "envelopes"]);
    match h.resolve("nosuchsuite") {
        Err(Error::Lookup { name, known }) => {
            assert_eq!(name, "nosuchsuite");
            assert_eq!(known, names);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn identity_and_envelope_lookups_are_typed() {
    assert!(matches!(check_identity("tail", &cfg()), Err(Error::Lookup { .. })));
    assert!(matches!(check_identity("nope", &cfg()), Err(Error::Lookup { .. })));
    assert!(matches!(check_envelope("laplace", &cfg()), Err(Error::Lookup { .. })));
}

#[test]
fn quadrature_identities_pass() {
    for name in ["laplace", "normalization", "levy-reps", "scaling", "chapman-kolmogorov"] {
        let r = check_identity(name, &cfg()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{name}: {:?}", r.max_residual);
        let res = r.residuals.as_ref().unwrap();
        assert!(!res.is_empty());
        assert!(res.iter().all(|x| *x >= 0.0));
        assert!(r.max_residual.unwrap() <= r.tolerance.unwrap());
    }
}

#[test]
fn green1_mass_single_point() {
    let mut c = cfg();
    c.restrict_alpha(1.0);
    c.identities.green1_mass.x_d = vec![1.0];
    let r = check_identity("green1-mass", &c).unwrap();
    assert_eq!(r.grid.len(), 3);
    assert_eq!(r.verdict, Verdict::Pass);
    // γ(1/2, 1)/Γ(1/2) = erf(1)
    assert!((r.references[0] - 0.842_700_792_949_714_9).abs() < 1e-15);
}

#[test]
fn scaling_worked_example() {
    // p^4_t(x) against 4^d p^1_{4t}(4x) at α = 1.
    let r = check_identity("scaling", &cfg()).unwrap();
    let i = r.grid.iter().position(|g| g.alpha == 1.0 && g.m == 4.0).expect("α = 1, m = 4 row");
    assert!(r.residuals.as_ref().unwrap()[i] < 1e-8);
}

#[test]
fn degenerate_grid_has_unit_spread() {
    let r = check_envelope("tail", &small_tail(vec![1.0], vec![4.0], 2000)).unwrap();
    assert_eq!(r.grid.len(), 1);
    assert_eq!(r.c_min, r.c_max);
    assert_eq!(r.spread, Some(1.0));
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn out_of_regime_points_are_listed_not_dropped() {
    // The tail estimate is asserted for t ≥ 1.
    let r = check_envelope("tail", &small_tail(vec![1.0], vec![0.5, 4.0], 2000)).unwrap();
    assert_eq!(r.grid.len(), 1);
    assert_eq!(r.rejected.len(), 1);
    assert_eq!(r.rejected[0].point.t, Some(0.5));
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn ratio_report_invariants() {
    let r = check_envelope("green1", &cfg()).unwrap();
    let ratios = r.ratios.as_ref().unwrap();
    assert!(ratios.iter().all(|x| x.is_finite() && *x > 0.0));
    assert!(r.c_min.unwrap() <= r.c_max.unwrap());
    for g in &r.groups {
        assert!((g.spread - g.c_max / g.c_min).abs() < 1e-12 * g.spread);
    }
    let worst = r.groups.iter().map(|g| g.spread).fold(0.0, f64::max);
    assert_eq!(r.spread, Some(worst));
    assert!(r.spread.unwrap() <= r.threshold.unwrap());
}

#[test]
fn reports_are_byte_identical_across_reruns_and_workers() {
    let c = small_tail(vec![0.5, 2.0], vec![1.0, 4.0], 3000);
    let a = serde_json::to_vec(&check_envelope("tail", &c).unwrap()).unwrap();
    let b = serde_json::to_vec(&check_envelope("tail", &c).unwrap()).unwrap();
    assert_eq!(a, b);
    let one = VerifyConfig { workers: 1, ..c.clone() };
    assert_eq!(serde_json::to_vec(&check_envelope("tail", &one).unwrap()).unwrap(), a);
    let other = VerifyConfig { master_seed: 1, ..c };
    assert_ne!(serde_json::to_vec(&check_envelope("tail", &other).unwrap()).unwrap(), a);
}

#[test]
fn config_hash_tracks_content_not_workers() {
    let a = cfg();
    let b = VerifyConfig { workers: 3, ..cfg() };
    assert_eq!(a.hash(), b.hash());
    let c = VerifyConfig { master_seed: 9, ..cfg() };
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn grid_file_rejects_unknown_keys() {
    let text = format!("{}\nbogus = 1\n", verify::DEFAULT_GRIDS);
    assert!(matches!(VerifyConfig::from_toml(&text), Err(Error::Config(_))));
}

#[test]
fn restrict_dim_filters_rows() {
    let mut c = cfg();
    c.restrict_dim(2);
    let r = check_identity("levy-reps", &c).unwrap();
    assert!(r.grid.iter().all(|g| g.d == 2));
    assert!(!r.grid.is_empty());
}

#[test]
fn csv_columns_are_stable() {
    let r = check_identity("laplace", &cfg()).unwrap();
    let mut buf = Vec::new();
    verify::write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(
        CSV_COLUMNS,
        [
            "suite",
            "index",
            "x",
            "y",
            "t",
            "R",
            "d",
            "alpha",
            "m",
            "quantity",
            "std_error",
            "envelope",
            "ratio",
            "branch",
            "seed",
            "config_hash",
            "version"
        ]
    );
    assert_eq!(lines.count(), r.grid.len());
}

#[test]
fn float_text_round_trips() {
    for x in [0.0, 1.0, -2.5, 1e-300, 3.3e-7, 123456.789, 1e20, 0.1 + 0.2] {
        assert_eq!(verify::fmt_f64(x).parse::<f64>().unwrap(), x);
    }
    assert_eq!(verify::fmt_f64(1e-7), "1e-7");
    assert_eq!(verify::fmt_f64(0.25), "0.25");
}

fn mc(n: usize) -> McConfig {
    McConfig { n_samples: n, master_seed: 5, ..McConfig::default() }
}

#[test]
fn harmonicity_mean_value() {
    let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
    let r = check_harmonicity(&HarmonicityInput::default(), &p, &mc(10_000), "test").unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{:?} vs {:?}", r.residuals, r.allowances);
    assert!(r.values[0] > 0.0 && r.references[0] > 0.0);
}

#[test]
fn harmonicity_narrow_b() {
    // Unbiased at every width; the narrow interval still agrees within 3 joint errors.
    let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
    let input = HarmonicityInput { b: (1.95, 2.05), ..HarmonicityInput::default() };
    let r = check_harmonicity(&input, &p, &mc(10_000), "test").unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{:?} vs {:?}", r.residuals, r.allowances);
}

#[test]
fn harmonicity_geometry_violations() {
    let p = ProcessParams::new(1.0, 1.0, 1).unwrap();
    let inside = HarmonicityInput { y: 2.5, ..HarmonicityInput::default() };
    assert!(matches!(check_harmonicity(&inside, &p, &mc(10), "t"), Err(Error::Domain(_))));
    let on_edge = HarmonicityInput { y: 3.0, ..HarmonicityInput::default() };
    assert!(matches!(check_harmonicity(&on_edge, &p, &mc(10), "t"), Err(Error::Domain(_))));
    let x_out = HarmonicityInput { x0: 4.0, ..HarmonicityInput::default() };
    assert!(matches!(check_harmonicity(&x_out, &p, &mc(10), "t"), Err(Error::Domain(_))));
    let p2 = ProcessParams::new(1.0, 1.0, 2).unwrap();
    assert!(matches!(check_harmonicity(&HarmonicityInput::default(), &p2, &mc(10), "t"), Err(Error::Domain(_))));
}
