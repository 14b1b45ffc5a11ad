use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vcsp::algebra::{
    build_multiset_structure, certify_blp_solvability, check_fractional_polymorphism, check_multimorphism,
    farkas_gap_instance, find_tsfp, find_tsfp_via_homomorphism, ArityOutcome, Certificate, Check, GapReport,
    Operation, Refutation, Verdict,
};
use vcsp::blp::{arc_consistency, blp_value, build_blp, solve_via_blp};
use vcsp::format::{
    parse_fractional_operation, parse_operations, parse_structure, print_certificate, print_map_certificate,
    print_operations, print_structure,
};
use vcsp::gallery::{
    lattice_ops, min0_max0, random_instance, random_language_with_multimorphism, tree_join, tree_meet, LatticeSpec,
    TreeSpec,
};
use vcsp::oracle::{brute_force_opt, DEFAULT_BUDGET};
use vcsp::osac::{build_osac_dual, osac_primal_value, osac_value};
use vcsp::{Assignment, Error, ExtendedRational, ValuedStructure};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "vcsp", version, about = "Exact LP relaxations and symmetric polymorphism tools for valued CSPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Language (valued structure) file
    #[arg(long, global = true, value_name = "PATH")]
    language: Option<PathBuf>,
    /// Instance file over the language's signature
    #[arg(long, global = true, value_name = "PATH")]
    instance: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    m: Option<usize>,
    #[arg(long = "m-max", global = true, value_name = "N")]
    m_max: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Enumeration budget (default: $VCSP_BUDGET, else 1000000)
    #[arg(long, global = true, value_name = "B")]
    budget: Option<u128>,
    /// Write the LP that was solved to this path
    #[arg(long = "dump-lp", global = true, value_name = "PATH")]
    dump_lp: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Output file for generated structures and certificates
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Text,
    Structured,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Route {
    Direct,
    Homomorphism,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimum via the relaxation plus self-reduction
    Solve,
    /// Exact relaxation value (arc consistency, then the LP)
    Blp,
    /// Soft arc consistency bounds next to the relaxation value
    Osac,
    /// Brute-force optimum and least optimal assignment
    Oracle,
    /// Search symmetric fractional polymorphisms for m = 2..=m-max
    Certify,
    /// Build an integrality gap instance from a refutation at arity m
    Gap,
    /// Check a binary multimorphism given as two operations
    CheckMm {
        #[arg(long, value_name = "PATH")]
        ops: PathBuf,
    },
    /// Check a weighted fractional polymorphism
    CheckFpol {
        #[arg(long, value_name = "PATH")]
        ops: PathBuf,
    },
    /// Decide whether an m-ary symmetric fractional polymorphism exists
    FindTsfp {
        #[arg(long, value_enum, default_value_t = Route::Direct)]
        route: Route,
    },
    /// Write the multiset structure of arity m
    PmBuild,
    /// Emit a random language from a tractable family
    Gallery(GalleryArgs),
    /// Parse and validate structure files
    Validate,
}

#[derive(Args, Debug)]
struct GalleryArgs {
    #[command(subcommand)]
    family: Family,
    /// Number of random binary tables (a unary table is always added)
    #[arg(long = "random-tables", global = true, default_value_t = 2)]
    random_tables: usize,
    /// Fraction of entries set to inf before closing under the family
    #[arg(long = "infinite-fraction", global = true, default_value_t = 0.0)]
    infinite_fraction: f64,
    /// Also write the family's operation pair to this path
    #[arg(long, global = true, value_name = "PATH")]
    ops: Option<PathBuf>,
    /// Also write a random instance to this path
    #[arg(long = "emit-instance", global = true, value_name = "PATH")]
    emit_instance: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 4)]
    vars: usize,
    #[arg(long, global = true, default_value_t = 0.5)]
    density: f64,
}

#[derive(Subcommand, Debug)]
enum Family {
    /// Submodular on a lattice: chain, chainN, diamond or pentagon
    Lattice {
        #[arg(long, default_value = "chain")]
        spec: String,
    },
    /// k-submodular on {0..k} (k = 2 is bisubmodular)
    Ksub {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Tree-submodular; parents as a comma list with '-' for the root
    Tree {
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        parents: String,
    },
}

/// Ordered key/value report rendered as text lines or one JSON object.
struct Report {
    fields: Vec<(&'static str, Value)>,
    code: u8,
}

impl Report {
    fn new() -> Self {
        Report { fields: Vec::new(), code: 0 }
    }

    fn put(&mut self, key: &'static str, value: impl Into<Value>) {
        self.fields.push((key, value.into()));
    }

    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Structured => {
                let mut map = serde_json::Map::new();
                for (k, v) in &self.fields {
                    map.insert((*k).to_string(), v.clone());
                }
                map.insert("exit_code".into(), json!(self.code));
                let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json");
                s.push('\n');
                s
            }
            OutputFormat::Text => {
                let mut s = String::new();
                for (k, v) in &self.fields {
                    match v {
                        Value::String(text) if text.contains('\n') => {
                            s.push_str(&format!("{k}:\n"));
                            for line in text.lines() {
                                s.push_str(&format!("  {line}\n"));
                            }
                        }
                        Value::String(text) => s.push_str(&format!("{k}: {text}\n")),
                        Value::Array(items) if items.iter().all(Value::is_string) => {
                            s.push_str(&format!("{k}:\n"));
                            for item in items {
                                s.push_str(&format!("  {}\n", item.as_str().unwrap_or_default()));
                            }
                        }
                        other => s.push_str(&format!("{k}: {other}\n")),
                    }
                }
                s
            }
        }
    }
}

fn assignment_text(h: &Assignment) -> String {
    h.values().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn read_text(path: &Path) -> vcsp::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> vcsp::Result<()> {
    fs::write(path, text).map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

fn load(path: Option<&PathBuf>, flag: &str) -> vcsp::Result<ValuedStructure> {
    let path = path.ok_or_else(|| Error::input(format!("--{flag} is required")))?;
    parse_structure(&read_text(path)?).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse { location: format!("{}, {location}", path.display()), message },
        other => other,
    })
}

fn require(v: Option<usize>, flag: &str) -> vcsp::Result<usize> {
    v.ok_or_else(|| Error::input(format!("--{flag} is required")))
}

fn budget(common: &Common) -> vcsp::Result<u128> {
    if let Some(b) = common.budget {
        return Ok(b);
    }
    match std::env::var("VCSP_BUDGET") {
        Ok(s) => s.trim().parse().map_err(|_| Error::input(format!("VCSP_BUDGET is not a number: {s:?}"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn value_text(v: &ExtendedRational) -> String {
    v.to_string()
}

fn default_gap_path(language: Option<&PathBuf>, m: usize) -> PathBuf {
    let base = language.and_then(|p| p.file_stem()).map_or("language".into(), |s| s.to_string_lossy().into_owned());
    let dir = language.and_then(|p| p.parent()).unwrap_or(Path::new(""));
    dir.join(format!("{base}.gap{m}.vcsp"))
}

fn refutation_fields(report: &mut Report, language: &ValuedStructure, r: &Refutation) {
    let sig = language.signature();
    let entries: Vec<Value> = r
        .farkas
        .iter()
        .map(|e| Value::String(format!("{} {:?} weight {}", sig.name(e.symbol), e.tuple, e.weight)))
        .collect();
    report.put("farkas", entries);
}

fn gap_fields(report: &mut Report, gap: &GapReport, path: &Path) {
    report.put("gap_blp_value", value_text(&gap.blp_value));
    report.put("gap_opt", value_text(&gap.opt));
    report.put("gap_variables", gap.instance.domain_size());
    report.put("gap_instance", path.display().to_string());
}

fn dump_blp(c: &Common, inst: &ValuedStructure, lang: &ValuedStructure) -> vcsp::Result<()> {
    if let Some(path) = &c.dump_lp {
        let ac = arc_consistency(inst, lang)?;
        let text = match build_blp(inst, lang, &ac)? {
            Some(model) => model.lp.to_lp_string(),
            None => "\\ arc consistency emptied a domain; no LP is solved\n".to_string(),
        };
        write_text(path, &text)?;
    }
    Ok(())
}

fn cmd_blp(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let inst = load(c.instance.as_ref(), "instance")?;
    dump_blp(c, &inst, &lang)?;
    let mut r = Report::new();
    r.put("blp_value", value_text(&blp_value(&inst, &lang)?));
    Ok(r)
}

fn cmd_solve(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let inst = load(c.instance.as_ref(), "instance")?;
    dump_blp(c, &inst, &lang)?;
    let mut r = Report::new();
    let (value, h) = solve_via_blp(&inst, &lang)?;
    r.put("value", value_text(&value));
    match h {
        Some(h) => r.put("assignment", assignment_text(&h)),
        None => {
            r.put("assignment", "NO-ASSIGNMENT");
            r.code = EXIT_NEGATIVE;
        }
    }
    Ok(r)
}

fn cmd_osac(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let inst = load(c.instance.as_ref(), "instance")?;
    if let Some(path) = &c.dump_lp {
        write_text(path, &build_osac_dual(&inst, &lang)?.to_lp_string())?;
    }
    let mut r = Report::new();
    r.put("osac_primal", value_text(&osac_primal_value(&inst, &lang)?));
    r.put("osac_dual", value_text(&osac_value(&inst, &lang)?));
    r.put("blp_value", value_text(&blp_value(&inst, &lang)?));
    Ok(r)
}

fn cmd_oracle(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let inst = load(c.instance.as_ref(), "instance")?;
    let res = brute_force_opt(&inst, &lang, budget(c)?)?;
    let mut r = Report::new();
    r.put("opt", value_text(&res.opt_value));
    r.put("argmin", res.argmin.as_ref().map_or("NO-ASSIGNMENT".to_string(), assignment_text));
    r.put("assignments_enumerated", res.assignments_enumerated.to_string());
    Ok(r)
}

fn cmd_certify(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let m_max = require(c.m_max, "m-max")?;
    let report = certify_blp_solvability(&lang, m_max, budget(c)?)?;
    let mut r = Report::new();
    let mut lines = Vec::new();
    for res in &report.results {
        lines.push(Value::String(match &res.outcome {
            ArityOutcome::Witness(omega) => {
                format!("m={}: witness with {} symmetric operations", res.m, omega.entries().len())
            }
            ArityOutcome::Refuted { refutation, .. } => {
                format!("m={}: refuted ({} Farkas entries)", res.m, refutation.farkas.len())
            }
            ArityOutcome::BudgetExceeded { required, budget } => {
                format!("m={}: budget exceeded ({required} > {budget})", res.m)
            }
        }));
    }
    r.put("arities", lines);
    match report.verdict {
        Verdict::CertifiedUpTo { m_max } => r.put("verdict", format!("certified up to m={m_max}")),
        Verdict::Partial { first_unchecked } => {
            r.put("verdict", format!("partial: unchecked from m={first_unchecked}"));
            r.code = EXIT_BUDGET;
        }
        Verdict::Refuted { m } => {
            r.put("verdict", format!("refuted at m={m}"));
            r.code = EXIT_NEGATIVE;
            let Some(ArityOutcome::Refuted { refutation, gap }) = report.results.last().map(|x| &x.outcome) else {
                return Err(Error::Internal("refuted verdict without a refutation".into()));
            };
            let path = c.out.clone().unwrap_or_else(|| default_gap_path(c.language.as_ref(), m));
            write_text(&path, &print_structure(&gap.instance))?;
            refutation_fields(&mut r, &lang, refutation);
            gap_fields(&mut r, gap, &path);
        }
    }
    Ok(r)
}

fn cmd_gap(c: &Common) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let m = require(c.m, "m")?;
    let budget = budget(c)?;
    let mut r = Report::new();
    match find_tsfp(&lang, m, budget)? {
        Certificate::Witness(_) => {
            r.put("result", format!("a symmetric fractional polymorphism of arity {m} exists; no gap instance"));
            r.code = EXIT_NEGATIVE;
        }
        Certificate::Refutation(refutation) => {
            let gap = farkas_gap_instance(&lang, m, &refutation, budget)?;
            let path = c.out.clone().unwrap_or_else(|| default_gap_path(c.language.as_ref(), m));
            write_text(&path, &print_structure(&gap.instance))?;
            r.put("result", "gap instance");
            refutation_fields(&mut r, &lang, &refutation);
            r.put("farkas_bound", gap.farkas_bound.to_string());
            gap_fields(&mut r, &gap, &path);
        }
    }
    Ok(r)
}

fn put_check(r: &mut Report, lang: &ValuedStructure, key: &'static str, check: Check) {
    match check {
        Check::Ok => r.put(key, "yes"),
        Check::Violated(v) => {
            r.put(key, "no");
            let args: Vec<String> = v.arguments.iter().map(|a| format!("{a:?}")).collect();
            r.put(
                "violation",
                format!("{} at {}: {} > {}", lang.signature().name(v.symbol), args.join(" "), v.lhs, v.rhs),
            );
            r.code = EXIT_NEGATIVE;
        }
    }
}

fn cmd_check_mm(c: &Common, ops: &Path) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let ops = parse_operations(&read_text(ops)?)?;
    let [(g1, _), (g2, _)] = ops.as_slice() else {
        return Err(Error::input(format!("a multimorphism needs exactly two operations, got {}", ops.len())));
    };
    let mut r = Report::new();
    put_check(&mut r, &lang, "multimorphism", check_multimorphism(&lang, g1, g2)?);
    Ok(r)
}

fn cmd_check_fpol(c: &Common, ops: &Path) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let omega = parse_fractional_operation(&read_text(ops)?)?;
    let mut r = Report::new();
    put_check(&mut r, &lang, "fractional_polymorphism", check_fractional_polymorphism(&lang, &omega)?);
    Ok(r)
}

fn cmd_find_tsfp(c: &Common, route: Route) -> vcsp::Result<Report> {
    let lang = load(c.language.as_ref(), "language")?;
    let m = require(c.m, "m")?;
    let budget = budget(c)?;
    let (witness, text) = match route {
        Route::Direct => {
            let cert = find_tsfp(&lang, m, budget)?;
            (cert.is_witness(), print_certificate(&cert))
        }
        Route::Homomorphism => {
            let (cert, _, _) = find_tsfp_via_homomorphism(&lang, m, budget)?;
            (cert.is_witness(), print_map_certificate(&cert))
        }
    };
    let mut r = Report::new();
    r.put("result", if witness { "witness" } else { "refutation" });
    if !witness {
        r.code = EXIT_NEGATIVE;
    }
    match &c.out {
        Some(path) => {
            write_text(path, &text)?;
            r.put("certificate", path.display().to_string());
        }
        None => r.put("certificate", text),
    }
    Ok(r)
}

fn cmd_pm_build(c: &Common) -> vcsp::Result<(Report, Option<String>)> {
    let lang = load(c.language.as_ref(), "language")?;
    let m = require(c.m, "m")?;
    let (pm, ms) = build_multiset_structure(&lang, m)?;
    let text = print_structure(&pm);
    let mut r = Report::new();
    let elements: Vec<Value> =
        ms.elements().iter().enumerate().map(|(i, e)| Value::String(format!("{i} = {e:?}"))).collect();
    r.put("elements", elements);
    match &c.out {
        Some(path) => {
            write_text(path, &text)?;
            r.put("written", path.display().to_string());
            Ok((r, None))
        }
        None => Ok((r, Some(text))),
    }
}

fn parse_parents(list: &str) -> vcsp::Result<Vec<Option<usize>>> {
    list.split(',')
        .map(|s| match s.trim() {
            "-" | "root" => Ok(None),
            t => t.parse().map(Some).map_err(|_| Error::input(format!("bad parent {t:?}"))),
        })
        .collect()
}

fn family_ops(family: &Family) -> vcsp::Result<(Operation, Operation)> {
    match family {
        Family::Lattice { spec } => {
            let lattice = match spec.as_str() {
                "diamond" => LatticeSpec::diamond(),
                "pentagon" => LatticeSpec::pentagon(),
                "chain" => LatticeSpec::chain(3),
                s => match s.strip_prefix("chain").and_then(|n| n.parse::<usize>().ok()) {
                    Some(n) if n >= 1 => LatticeSpec::chain(n),
                    _ => return Err(Error::input(format!("unknown lattice {s:?}"))),
                },
            };
            lattice_ops(&lattice)
        }
        Family::Ksub { k } => min0_max0(*k),
        Family::Tree { parents } => {
            let tree = TreeSpec::new(parse_parents(parents)?)?;
            Ok((tree_meet(&tree), tree_join(&tree)))
        }
    }
}

fn cmd_gallery(c: &Common, g: &GalleryArgs) -> vcsp::Result<(Report, Option<String>)> {
    let (g1, g2) = family_ops(&g.family)?;
    let seed = c.seed.unwrap_or(0);
    let mut arities = vec![2; g.random_tables];
    arities.push(1);
    let lang = random_language_with_multimorphism(&g1, &g2, &arities, g.infinite_fraction, seed)?;
    let text = print_structure(&lang);
    let mut r = Report::new();
    if let Some(path) = &g.ops {
        write_text(path, &print_operations(&[g1, g2]))?;
        r.put("operations", path.display().to_string());
    }
    if let Some(path) = &g.emit_instance {
        let inst = random_instance(&lang, g.vars, g.density, seed);
        write_text(path, &print_structure(&inst))?;
        r.put("instance", path.display().to_string());
    }
    match &c.out {
        Some(path) => {
            write_text(path, &text)?;
            r.put("language", path.display().to_string());
            Ok((r, None))
        }
        None => Ok((r, Some(text))),
    }
}

fn cmd_validate(c: &Common) -> vcsp::Result<Report> {
    if c.language.is_none() && c.instance.is_none() {
        return Err(Error::input("--language or --instance is required"));
    }
    let mut r = Report::new();
    let describe = |s: &ValuedStructure| format!("ok (domain size {}, {} symbols)", s.domain_size(), s.signature().len());
    let lang = c.language.as_ref().map(|p| load(Some(p), "language")).transpose()?;
    let inst = c.instance.as_ref().map(|p| load(Some(p), "instance")).transpose()?;
    if let Some(l) = &lang {
        r.put("language", describe(l));
    }
    if let Some(i) = &inst {
        r.put("instance", describe(i));
    }
    if let (Some(l), Some(i)) = (&lang, &inst) {
        i.check_same_signature(l)?;
        r.put("signatures", "match");
    }
    Ok(r)
}

fn dispatch(cli: &Cli) -> vcsp::Result<(Report, Option<String>)> {
    let c = &cli.common;
    let plain = |r: vcsp::Result<Report>| r.map(|r| (r, None));
    match &cli.command {
        Command::Solve => plain(cmd_solve(c)),
        Command::Blp => plain(cmd_blp(c)),
        Command::Osac => plain(cmd_osac(c)),
        Command::Oracle => plain(cmd_oracle(c)),
        Command::Certify => plain(cmd_certify(c)),
        Command::Gap => plain(cmd_gap(c)),
        Command::CheckMm { ops } => plain(cmd_check_mm(c, ops)),
        Command::CheckFpol { ops } => plain(cmd_check_fpol(c, ops)),
        Command::FindTsfp { route } => plain(cmd_find_tsfp(c, *route)),
        Command::PmBuild => cmd_pm_build(c),
        Command::Gallery(g) => cmd_gallery(c, g),
        Command::Validate => plain(cmd_validate(c)),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Internal(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok((report, document)) => {
            match (document, cli.common.format) {
                // generated files go to stdout unchanged so they can be redirected
                (Some(doc), OutputFormat::Text) => print!("{doc}"),
                (Some(doc), OutputFormat::Structured) => {
                    let mut r = report;
                    r.put("document", doc);
                    print!("{}", r.render(OutputFormat::Structured));
                    return ExitCode::from(r.code);
                }
                (None, f) => print!("{}", report.render(f)),
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.common.format == OutputFormat::Structured {
                println!("{}", json!({ "error": e.to_string(), "exit_code": code }));
            }
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
