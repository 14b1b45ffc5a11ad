//! Text formats: structure files, operation files and certificates (TOML).
//!
//! A structure file:
//!
//! ```text
//! domain_size = 2
//! symbols = [{ name = "f", arity = 2 }]
//!
//! [tables]
//! f = ["1", "0", "0", "1"]
//! ```
//!
//! Tables list costs in row-major tuple order (last coordinate fastest).
//! Entries are `"p/q"`, `"p"` or `"inf"`; bare TOML integers are accepted
//! on input. Several constraints on one scope tuple are a single summed
//! weight.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{Certificate, FractionalMap, FractionalOperation, Operation, Refutation};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::structure::{validate_structure, Signature, Symbol, ValuedStructure};
use crate::value::ExtendedRational;

const HEADER: &str = "\
# Valued structure. Each table lists costs in row-major tuple order
# (the last coordinate varies fastest). Entries are \"p/q\", \"p\" or \"inf\".
# Repeated constraints on one scope tuple appear as one summed weight.
";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    name: String,
    arity: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Text(String),
    Int(i64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    domain_size: usize,
    symbols: Vec<RawSymbol>,
    #[serde(default)]
    tables: BTreeMap<String, Vec<RawEntry>>,
}

/// `line:column` (1-based) of a byte offset.
fn position(text: &str, offset: usize) -> String {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    format!("line {line}, column {col}")
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    Error::Parse {
        location: e.span().map_or_else(|| "unknown position".to_string(), |s| position(text, s.start)),
        message: e.message().trim().to_string(),
    }
}

/// Location of the line assigning `key`, for semantic errors.
fn key_location(text: &str, key: &str) -> String {
    let quoted = format!("\"{key}\"");
    for (i, line) in text.lines().enumerate() {
        let head = line.split('=').next().unwrap_or("").trim();
        if head == key || head == quoted {
            return format!("line {}", i + 1);
        }
    }
    "end of input".to_string()
}

fn parse_entry(entry: &RawEntry) -> std::result::Result<ExtendedRational, String> {
    match entry {
        RawEntry::Int(n) if *n >= 0 => Ok(ExtendedRational::from_integer(*n)),
        RawEntry::Int(n) => Err(format!("negative cost {n}")),
        RawEntry::Text(s) => s.parse::<ExtendedRational>().map_err(|e| format!("bad entry {s:?}: {e}")),
    }
}

pub fn parse_structure(text: &str) -> Result<ValuedStructure> {
    let raw: RawStructure = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let parse_err = |key: &str, message: String| Error::Parse { location: key_location(text, key), message };
    if raw.domain_size == 0 {
        return Err(parse_err("domain_size", "domain_size must be positive".into()));
    }
    let symbols: Vec<Symbol> = raw.symbols.iter().map(|s| Symbol::new(s.name.clone(), s.arity)).collect();
    let signature = Signature::new(symbols).map_err(|e| parse_err("symbols", e.to_string()))?;
    if let Some(extra) = raw.tables.keys().find(|k| signature.index_of(k).is_none()) {
        return Err(parse_err(extra, format!("table {extra:?} has no declared symbol")));
    }
    let mut tables = Vec::with_capacity(signature.len());
    for sym in signature.symbols() {
        let expected = u32::try_from(sym.arity)
            .ok()
            .and_then(|k| raw.domain_size.checked_pow(k))
            .ok_or_else(|| parse_err(&sym.name, format!("table of {:?} is too large", sym.name)))?;
        let Some(entries) = raw.tables.get(&sym.name) else {
            return Err(parse_err(
                "tables",
                format!("missing table for symbol {:?} (expected {expected} entries)", sym.name),
            ));
        };
        if entries.len() != expected {
            return Err(parse_err(
                &sym.name,
                format!("table {:?} has {} entries, expected {expected}", sym.name, entries.len()),
            ));
        }
        let table = entries
            .iter()
            .enumerate()
            .map(|(i, e)| parse_entry(e).map_err(|m| parse_err(&sym.name, format!("table {:?} entry {i}: {m}", sym.name))))
            .collect::<Result<Vec<_>>>()?;
        tables.push(table);
    }
    let s = ValuedStructure::from_raw(signature, raw.domain_size, tables);
    let violations = validate_structure(&s);
    if !violations.is_empty() {
        return Err(Error::InvalidStructure(violations));
    }
    Ok(s)
}

/// TOML key: bare when possible, else a basic string.
fn key(name: &str) -> String {
    if !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        name.to_string()
    } else {
        toml::Value::String(name.to_string()).to_string()
    }
}

pub fn print_structure(s: &ValuedStructure) -> String {
    let mut out = String::from(HEADER);
    let d = s.domain_size();
    writeln!(out, "domain_size = {d}").unwrap();
    let syms: Vec<String> = s
        .signature()
        .symbols()
        .iter()
        .map(|sym| format!("{{ name = {}, arity = {} }}", toml::Value::String(sym.name.clone()), sym.arity))
        .collect();
    writeln!(out, "symbols = [{}]", syms.join(", ")).unwrap();
    out.push_str("\n[tables]\n");
    for (sym, table) in s.signature().symbols().iter().zip(s.tables()) {
        let cells: Vec<String> = table.iter().map(|v| format!("\"{v}\"")).collect();
        if sym.arity == 1 || cells.len() <= d {
            writeln!(out, "{} = [{}]", key(&sym.name), cells.join(", ")).unwrap();
        } else {
            writeln!(out, "{} = [", key(&sym.name)).unwrap();
            for row in cells.chunks(d) {
                writeln!(out, "  {},", row.join(", ")).unwrap();
            }
            out.push_str("]\n");
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpEntry {
    table: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpFile {
    domain_size: usize,
    arity: usize,
    operations: Vec<OpEntry>,
}

fn parse_rational(text: &str, s: &str) -> Result<Rational> {
    s.parse::<Rational>().map_err(|e| Error::Parse {
        location: key_location(text, "weight"),
        message: format!("bad weight {s:?}: {e}"),
    })
}

/// Operations with optional weights:
///
/// ```text
/// domain_size = 2
/// arity = 2
///
/// [[operations]]
/// table = [0, 0, 0, 1]
/// weight = "1/2"
/// ```
pub fn parse_operations(text: &str) -> Result<Vec<(Operation, Option<Rational>)>> {
    let raw: OpFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    raw.operations
        .into_iter()
        .map(|e| {
            let op = Operation::new(raw.domain_size, raw.arity, e.table)?;
            let w = e.weight.as_deref().map(|w| parse_rational(text, w)).transpose()?;
            Ok((op, w))
        })
        .collect()
}

/// Fractional operation from an operations file; every entry needs a weight.
pub fn parse_fractional_operation(text: &str) -> Result<FractionalOperation> {
    let ops = parse_operations(text)?;
    let entries = ops
        .into_iter()
        .map(|(op, w)| w.map(|w| (op, w)).ok_or_else(|| Error::input("every operation needs a weight")))
        .collect::<Result<Vec<_>>>()?;
    FractionalOperation::new(entries)
}

fn op_file(domain_size: usize, arity: usize, ops: impl Iterator<Item = (Vec<usize>, Option<String>)>) -> String {
    let file = OpFile {
        domain_size,
        arity,
        operations: ops.map(|(table, weight)| OpEntry { table, weight }).collect(),
    };
    toml::to_string(&file).expect("operation file serializes")
}

pub fn print_operations(ops: &[Operation]) -> String {
    let (d, m) = ops.first().map_or((0, 0), |g| (g.domain_size(), g.arity()));
    op_file(d, m, ops.iter().map(|g| (g.table().to_vec(), None)))
}

pub fn print_fractional_operation(omega: &FractionalOperation) -> String {
    op_file(
        omega.domain_size(),
        omega.arity(),
        omega.entries().iter().map(|(g, w)| (g.table().to_vec(), Some(w.to_string()))),
    )
}

#[derive(Debug, Serialize)]
struct MapEntry {
    map: Vec<usize>,
    weight: String,
}

#[derive(Debug, Serialize)]
struct FarkasOut {
    symbol: String,
    tuple: Vec<usize>,
    weight: String,
}

#[derive(Debug, Serialize)]
struct RefutationOut {
    kind: &'static str,
    farkas: Vec<FarkasOut>,
    gap_instance: String,
}

fn refutation_text(r: &Refutation) -> String {
    let sig = r.gap_instance.signature();
    let out = RefutationOut {
        kind: "refutation",
        farkas: r
            .farkas
            .iter()
            .map(|e| FarkasOut { symbol: sig.name(e.symbol).to_string(), tuple: e.tuple.clone(), weight: e.weight.to_string() })
            .collect(),
        gap_instance: print_structure(&r.gap_instance),
    };
    toml::to_string(&out).expect("refutation serializes")
}

/// Witness as an operations file headed by `kind = "witness"`, or a
/// refutation with its Farkas entries and the gap instance embedded as a
/// structure file.
pub fn print_certificate(cert: &Certificate<FractionalOperation>) -> String {
    match cert {
        Certificate::Witness(omega) => format!("kind = \"witness\"\n{}", print_fractional_operation(omega)),
        Certificate::Refutation(r) => refutation_text(r),
    }
}

pub fn print_map_certificate(cert: &Certificate<FractionalMap>) -> String {
    #[derive(Serialize)]
    struct Out {
        kind: &'static str,
        source_size: usize,
        target_size: usize,
        maps: Vec<MapEntry>,
    }
    match cert {
        Certificate::Witness(w) => toml::to_string(&Out {
            kind: "witness",
            source_size: w.source_size,
            target_size: w.target_size,
            maps: w.maps.iter().map(|(m, x)| MapEntry { map: m.clone(), weight: x.to_string() }).collect(),
        })
        .expect("map certificate serializes"),
        Certificate::Refutation(r) => refutation_text(r),
    }
}
