use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vcsp::algebra::build_multiset_structure;
use vcsp::format::{parse_structure, print_structure};

const SOFT_NEQ: &str = "domain_size = 2\nsymbols = [{ name = \"f\", arity = 2 }]\n[tables]\nf = [\"1\", \"0\", \"0\", \"1\"]\n";
const TRIANGLE: &str = "domain_size = 3\nsymbols = [{ name = \"f\", arity = 2 }]\n[tables]\nf = [0, 1, 1, 0, 0, 1, 0, 0, 0]\n";
const SUB_CHAIN: &str = "domain_size = 3\nsymbols = [{ name = \"f\", arity = 2 }]\n[tables]\nf = [0, 1, 2, 1, 0, 1, 2, 1, 0]\n";

fn vcsp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcsp"))
        .args(args)
        .current_dir(dir)
        .env_remove("VCSP_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("softneq.vcsp", SOFT_NEQ), ("tri.vcsp", TRIANGLE), ("sub_chain.vcsp", SUB_CHAIN)] {
        fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

#[test]
fn solve_prints_value_and_assignment() {
    let dir = setup();
    let o = vcsp(dir.path(), &["solve", "--language", "sub_chain.vcsp", "--instance", "tri.vcsp"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let out = stdout(&o);
    assert_eq!(field(&out, "value"), "0");
    assert_eq!(field(&out, "assignment"), "0 0 0");
}

#[test]
fn triangle_has_no_assignment_from_the_relaxation() {
    let dir = setup();
    let o = vcsp(dir.path(), &["solve", "--language", "softneq.vcsp", "--instance", "tri.vcsp"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(field(&stdout(&o), "assignment"), "NO-ASSIGNMENT");
    let o = vcsp(dir.path(), &["oracle", "--language", "softneq.vcsp", "--instance", "tri.vcsp"]);
    assert_eq!(field(&stdout(&o), "opt"), "1");
}

#[test]
fn certify_refutes_and_gap_file_shows_strict_gap() {
    let dir = setup();
    let o = vcsp(dir.path(), &["certify", "--language", "softneq.vcsp", "--m-max", "2", "-o", "gap.vcsp"]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("refuted at m=2"), "{out}");
    assert!(dir.path().join("gap.vcsp").exists());

    let blp = stdout(&vcsp(dir.path(), &["blp", "--language", "softneq.vcsp", "--instance", "gap.vcsp"]));
    let opt = stdout(&vcsp(dir.path(), &["oracle", "--language", "softneq.vcsp", "--instance", "gap.vcsp"]));
    let blp: vcsp::ExtendedRational = field(&blp, "blp_value").parse().unwrap();
    let opt: vcsp::ExtendedRational = field(&opt, "opt").parse().unwrap();
    assert!(blp < opt, "{blp} vs {opt}");
}

#[test]
fn certify_default_gap_path_sits_next_to_language() {
    let dir = setup();
    let o = vcsp(dir.path(), &["certify", "--language", "softneq.vcsp", "--m-max", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("softneq.gap2.vcsp").exists());
}

#[test]
fn pm_build_matches_library() {
    let dir = setup();
    let o = vcsp(dir.path(), &["pm-build", "--language", "softneq.vcsp", "--m", "2", "-o", "pm.vcsp"]);
    assert_eq!(o.status.code(), Some(0));
    let written = fs::read_to_string(dir.path().join("pm.vcsp")).unwrap();
    let (pm, _) = build_multiset_structure(&parse_structure(SOFT_NEQ).unwrap(), 2).unwrap();
    assert_eq!(parse_structure(&written).unwrap(), pm);
    assert_eq!(written, print_structure(&pm));
}

#[test]
fn gallery_output_round_trips_and_passes_its_multimorphism() {
    let dir = setup();
    for family in [
        vec!["gallery", "lattice", "--spec", "pentagon"],
        vec!["gallery", "ksub", "--k", "3"],
        vec!["gallery", "tree", "--parents", "-,0,0,0"],
    ] {
        let mut args = family.clone();
        args.extend(["--random-tables", "2", "--seed", "7", "--ops", "ops.toml", "-o", "lang.vcsp"]);
        let o = vcsp(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{o:?}");
        let text = fs::read_to_string(dir.path().join("lang.vcsp")).unwrap();
        assert_eq!(print_structure(&parse_structure(&text).unwrap()), text);
        let o = vcsp(dir.path(), &["check-mm", "--language", "lang.vcsp", "--ops", "ops.toml"]);
        assert_eq!(o.status.code(), Some(0), "{family:?}: {}", stdout(&o));
    }
}

#[test]
fn gallery_is_deterministic() {
    let dir = setup();
    let run = || stdout(&vcsp(dir.path(), &["gallery", "lattice", "--spec", "diamond", "--seed", "11"]));
    assert_eq!(run(), run());
}

#[test]
fn check_mm_reports_violation_with_exit_one() {
    let dir = setup();
    let ops = "domain_size = 2\narity = 2\n\n[[operations]]\ntable = [0, 0, 0, 1]\n\n[[operations]]\ntable = [0, 1, 1, 1]\n";
    fs::write(dir.path().join("minmax.toml"), ops).unwrap();
    // soft-NEQ is supermodular, so min/max fails
    let o = vcsp(dir.path(), &["check-mm", "--language", "softneq.vcsp", "--ops", "minmax.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation"));
    let o = vcsp(dir.path(), &["check-mm", "--language", "sub_chain.vcsp", "--ops", "minmax.toml"]);
    assert_eq!(o.status.code(), Some(2), "operations on two values against a three-element language");
}

#[test]
fn check_fpol_accepts_weighted_operations() {
    let dir = setup();
    let ops = "domain_size = 3\narity = 2\n\n[[operations]]\ntable = [0, 0, 0, 0, 1, 1, 0, 1, 2]\nweight = \"1/2\"\n\n[[operations]]\ntable = [0, 1, 2, 1, 1, 2, 2, 2, 2]\nweight = \"1/2\"\n";
    fs::write(dir.path().join("w.toml"), ops).unwrap();
    let o = vcsp(dir.path(), &["check-fpol", "--language", "sub_chain.vcsp", "--ops", "w.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn find_tsfp_routes_agree() {
    let dir = setup();
    for lang in ["softneq.vcsp", "sub_chain.vcsp"] {
        let direct = vcsp(dir.path(), &["find-tsfp", "--language", lang, "--m", "2"]);
        let hom = vcsp(dir.path(), &["find-tsfp", "--language", lang, "--m", "2", "--route", "homomorphism"]);
        assert_eq!(direct.status.code(), hom.status.code(), "{lang}");
        assert_eq!(field(&stdout(&direct), "result"), field(&stdout(&hom), "result"));
    }
}

#[test]
fn structured_output_is_json() {
    let dir = setup();
    let o = vcsp(dir.path(), &["osac", "--language", "softneq.vcsp", "--instance", "tri.vcsp", "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["blp_value"], "0");
    assert_eq!(v["osac_primal"], v["osac_dual"]);
    assert_eq!(v["exit_code"], 0);
}

#[test]
fn dump_lp_writes_program() {
    let dir = setup();
    let o = vcsp(dir.path(), &["blp", "--language", "softneq.vcsp", "--instance", "tri.vcsp", "--dump-lp", "p.lp"]);
    assert_eq!(o.status.code(), Some(0));
    let lp = fs::read_to_string(dir.path().join("p.lp")).unwrap();
    assert!(lp.starts_with("Minimize"));
    assert!(lp.contains("Subject To"));
}

#[test]
fn input_errors_exit_two() {
    let dir = setup();
    assert_eq!(vcsp(dir.path(), &["blp", "--language", "softneq.vcsp", "--nope"]).status.code(), Some(2));
    assert_eq!(vcsp(dir.path(), &["blp", "--language", "softneq.vcsp"]).status.code(), Some(2));
    fs::write(dir.path().join("bad.vcsp"), "domain_size = 2\nsymbols = [{ name = \"f\", arity = 2 }]\n[tables]\nf = [\"1\"]\n").unwrap();
    let o = vcsp(dir.path(), &["validate", "--language", "bad.vcsp"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("expected 4") && err.contains("bad.vcsp"), "{err}");
    let o = vcsp(dir.path(), &["validate", "--language", "softneq.vcsp", "--instance", "tri.vcsp"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn budget_flag_beats_environment() {
    let dir = setup();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vcsp"));
    cmd.current_dir(dir.path()).args(["oracle", "--language", "softneq.vcsp", "--instance", "tri.vcsp"]);
    let o = cmd.env("VCSP_BUDGET", "4").output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = cmd.arg("--budget").arg("100").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn gap_subcommand_writes_instance() {
    let dir = setup();
    let out: PathBuf = dir.path().join("g.vcsp");
    let o = vcsp(dir.path(), &["gap", "--language", "softneq.vcsp", "--m", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(out.exists());
    let o = vcsp(dir.path(), &["gap", "--language", "sub_chain.vcsp", "--m", "2"]);
    assert_eq!(o.status.code(), Some(1));
}
