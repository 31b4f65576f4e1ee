//! End-to-end behavior of the `freestein` binary and its in-process runner.

use freestein_algebra::ncfree::{NCPoly, Word};
use freestein_algebra::Q;
use freestein_cli::report::{
    CheckReport, ConvolveReport, DistanceReport, ErrorReport, GibbsReport, MapDocument, MomentMapReport, NcReport,
    SteinReport,
};
use freestein_cli::{parse_ncexpr, parse_potential, run, RunConfig};
use proptest::prelude::*;
use serde::de::DeserializeOwned;
use std::path::PathBuf;
use std::process::Command;

fn freestein(args: &[&str]) -> freestein_cli::Outcome {
    run(std::iter::once("freestein").chain(args.iter().copied()))
}

/// Parses stdout into the report type; unknown or missing fields are rejected.
fn report<T: DeserializeOwned>(out: &freestein_cli::Outcome) -> T {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("report does not match its schema: {e}\n{}", out.stdout))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("freestein-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn rational() -> impl Strategy<Value = Q> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| Q::new(n.into(), d.into()))
}

fn nc_poly(arity: usize) -> impl Strategy<Value = NCPoly> {
    let word = prop::collection::vec(1..=arity, 0..=5).prop_map(Word);
    prop::collection::vec((word, rational()), 0..6)
        .prop_map(move |terms| NCPoly::from_terms(arity, terms).expect("letters within arity"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_print_parse_roundtrip(coeffs in prop::collection::vec(rational(), 0..9)) {
        let text = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let sign = if c < &Q::from_integer(0.into()) { "-" } else { "+" };
                format!(" {sign} {}*x^{k}", num::Signed::abs(c))
            })
            .collect::<String>();
        let text = format!("0{text}");
        let first = parse_potential(&text).unwrap();
        let printed = first.to_string();
        let second = parse_potential(&printed).unwrap();
        prop_assert_eq!(&first.coeffs, &second.coeffs);
        prop_assert_eq!(printed, second.to_string());
    }

    #[test]
    fn ncexpr_print_parse_roundtrip((arity, p) in (1usize..=3).prop_flat_map(|a| (Just(a), nc_poly(a)))) {
        let parsed = parse_ncexpr(&p.to_string(), arity).unwrap();
        prop_assert_eq!(&parsed.poly, &p);
        let again = parse_ncexpr(&parsed.to_string(), arity).unwrap();
        prop_assert_eq!(again.poly, p);
    }
}

#[test]
fn semicircle_gibbs_report() {
    let out = freestein(&["gibbs", "0.5*x^2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let r: GibbsReport = report(&out);
    assert_eq!(r.potential, "1/2*x^2");
    assert!((r.support[0] + 2.0).abs() < 1e-8 && (r.support[1] - 2.0).abs() < 1e-8);
    for (k, catalan) in [(2, 1.0), (4, 2.0), (6, 5.0), (8, 14.0)] {
        assert!((r.moments[k - 1] - catalan).abs() < 1e-8);
    }
}

#[test]
fn scaled_semicircle_stein_example() {
    let csv = scratch("kernel.csv");
    let out = freestein(&["stein", "--target", "builtin:scaled-semicircle:2", "--grid", "16", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let r: SteinReport = report(&out);
    assert!((r.discrepancy - 1.0).abs() < 1e-8, "{}", r.discrepancy);
    assert!((r.w2 - (2f64.sqrt() - 1.0)).abs() < 1e-8, "{}", r.w2);
    assert!(r.ws_pass);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("x,y,A\n"));
    assert_eq!(text.lines().count(), 1 + 16 * 16);
}

#[test]
fn schwinger_dyson_check_exits_zero() {
    let out = freestein(&["check", "schwinger-dyson", "--potential", "0.5*x^2"]);
    assert_eq!(out.code, 0);
    let r: CheckReport = report(&out);
    assert!(r.item("sd_residual").unwrap().value <= 1e-8);
}

#[test]
fn every_subcommand_report_matches_its_type() {
    let map = scratch("map.json");
    let grid = scratch("grid.csv");
    let out = freestein(&[
        "moment-map",
        "--target",
        "builtin:scaled-semicircle:0.5",
        "--out",
        map.to_str().unwrap(),
        "--grid-out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let r: MomentMapReport = report(&out);
    assert!(r.identity_deviation > 0.4 && r.kahler_einstein.unwrap().pass);
    let doc: MapDocument = serde_json::from_str(&std::fs::read_to_string(map).unwrap()).unwrap();
    assert_eq!(doc.kind, "moment-map");
    assert!(std::fs::read_to_string(grid).unwrap().starts_with("x,density,cdf"));

    let d: DistanceReport = report(&freestein(&["distance", "--from", "builtin:scaled-semicircle:4"]));
    assert!((d.w2 - 1.0).abs() < 1e-8);

    let c: ConvolveReport =
        report(&freestein(&["convolve", "--left", "builtin:semicircle", "--right", "builtin:semicircle"]));
    assert!((c.variance - 2.0).abs() < 1e-6 && (c.m4 - 8.0).abs() < 1e-5);

    let n: NcReport = report(&freestein(&["nc", "moment", "--expr", "x1*x2*x1*x2; x1*x1*x2*x2"]));
    assert_eq!(n.entries.iter().map(|e| e.value.as_str()).collect::<Vec<_>>(), ["0", "1"]);

    let e: ErrorReport = report(&freestein(&["gibbs", "x^2 +"]));
    assert_eq!((e.error.kind.as_str(), e.error.position), ("SyntaxError", Some(5)));
}

#[test]
fn published_schemas_describe_the_reports() {
    for name in freestein_cli::report::SCHEMA_NAMES {
        let out = freestein(&["schema", name]);
        assert_eq!(out.code, 0);
        let s: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert!(s.get("properties").is_some(), "{name}");
    }
    let s = freestein_cli::report::schema("check").unwrap();
    assert_eq!(s["additionalProperties"], serde_json::Value::Bool(false));
}

#[test]
fn computational_failures_exit_one_with_error_json() {
    let out = freestein(&["moment-map", "--target", "builtin:uniform:0:2"]);
    assert_eq!(out.code, 1);
    let e: ErrorReport = report(&out);
    assert_eq!(e.error.kind, "NotCentered");

    let out = freestein(&["check", "stability", "--potential", "2*x^2"]);
    assert_eq!(out.code, 1);
    assert_eq!(report::<ErrorReport>(&out).error.kind, "HypothesisNotMet");
    let out = freestein(&["check", "stability", "--potential", "2*x^2", "--report-only"]);
    let r: CheckReport = report(&out);
    assert!(r.exploratory && out.code == 0 && r.notes.len() == 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(freestein(&["gibbs", "0.5*x^2", "--bogus"]).code, 2);
    assert_eq!(freestein(&["frobnicate"]).code, 2);
    assert_eq!(freestein(&["gibbs", "x^40"]).code, 2);
    assert_eq!(freestein(&["nc", "derive", "--expr", "x1*x3", "--arity", "2"]).code, 2);
    assert_eq!(freestein(&["convolve", "--left", "builtin:semicircle"]).code, 2);
    assert_eq!(freestein(&["--help"]).code, 0);
}

#[test]
fn failed_checks_exit_one() {
    // Var(x) = 1 under the semicircle, which exceeds 1/2 times its H1 seminorm 1.
    let out = freestein(&["check", "poincare", "--constant", "0.5", "--max-degree", "1"]);
    assert_eq!(out.code, 1);
    let r: CheckReport = report(&out);
    assert!(!r.pass && (r.item("slack[x^1]").unwrap().value + 0.5).abs() < 1e-9);
}

#[test]
fn config_file_and_environment() {
    let tight = scratch("tight.json");
    std::fs::write(&tight, r#"{"thresholds": {"schwinger_dyson": 1e-20}}"#).unwrap();
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"equilibrium_nodes": 100}"#).unwrap();
    let unknown = scratch("unknown.json");
    std::fs::write(&unknown, r#"{"no_such_key": 1}"#).unwrap();

    let cfg = RunConfig::load(Some(&tight)).unwrap();
    assert!((cfg.thresholds.schwinger_dyson / 1e-20 - 1.0).abs() < 1e-12);
    assert_eq!(cfg.equilibrium_nodes, RunConfig::default().equilibrium_nodes);
    assert!(RunConfig::load(Some(&bad)).is_err());
    assert!(RunConfig::load(Some(&unknown)).is_err());

    let bin = env!("CARGO_BIN_EXE_freestein");
    let sd = ["check", "schwinger-dyson", "--potential", "0.5*x^2"];
    let status = |envs: Option<&PathBuf>, extra: &[&str]| {
        let mut cmd = Command::new(bin);
        cmd.env_remove("FREESTEIN_CONFIG").args(sd).args(extra);
        if let Some(p) = envs {
            cmd.env("FREESTEIN_CONFIG", p);
        }
        cmd.output().unwrap().status.code()
    };
    assert_eq!(status(None, &[]), Some(0));
    assert_eq!(status(Some(&tight), &[]), Some(1));
    assert_eq!(status(Some(&bad), &[]), Some(2));
    // An explicit --config wins over the environment.
    let default = scratch("default.json");
    std::fs::write(&default, "{}").unwrap();
    assert_eq!(status(Some(&tight), &["--config", default.to_str().unwrap()]), Some(0));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_freestein");
    let out = Command::new(bin).args(["gibbs", "--unknown-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin).args(["nc", "stein-quadratic", "--arity", "2"]).env_remove("FREESTEIN_CONFIG").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: NcReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.pass);
}
