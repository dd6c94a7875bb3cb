//! File formats: line-based circuit and gadget text, JSON code files and
//! look-up tables, and a fixed-width binary store for outcome histograms.

use std::fmt::{self, Write as _};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, CodeCatalogEntry};
use crate::circuit::{Basis, Circuit, Op};
use crate::css::{CssError, CssState, StateLabel};
use crate::decoder::{MlTable, MwEntry, MwTable};
use crate::gadget::{FlagGadget, Gate, Node};
use crate::noise::OutcomeHistogram;
use crate::pauli::ErrorType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid code: {0}")]
    Validation(#[from] CssError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("bad outcome file: {0}")]
    Format(String),
}

/// Tokenizer state for one line: keeps the column of every token.
struct Line<'a> {
    no: usize,
    tokens: Vec<(usize, &'a str)>,
}

impl<'a> Line<'a> {
    fn new(no: usize, text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push((s + 1, &text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push((s + 1, &text[s..]));
        }
        Line { no, tokens }
    }

    fn err(&self, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.no, col, message: message.into() }
    }

    fn arity(&self, k: usize) -> Result<(), ParseError> {
        if self.tokens.len() != k {
            let col = self.tokens.get(k).map_or(1, |t| t.0);
            return Err(self.err(col, format!("{} expects {} operands", self.tokens[0].1, k - 1)));
        }
        Ok(())
    }

    /// `key=value` pairs after the keyword.
    fn header(&self) -> Result<Vec<(usize, &'a str, &'a str)>, ParseError> {
        self.tokens[1..]
            .iter()
            .map(|&(c, tok)| match tok.split_once('=') {
                Some((k, v)) => Ok((c, k, v)),
                None => Err(self.err(c, format!("expected key=value, found {tok:?}"))),
            })
            .collect()
    }
}

fn parse_num<T: std::str::FromStr>(line: &Line, col: usize, s: &str) -> Result<T, ParseError> {
    s.parse().map_err(|_| line.err(col, format!("expected a number, found {s:?}")))
}

fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let line = Line::new(i + 1, l);
        (!line.tokens.is_empty()).then_some(line)
    })
}

fn basis_letter(b: Basis) -> &'static str {
    match b {
        Basis::Z => "Z",
        Basis::X => "X",
    }
}

/// Serializes a circuit. Code qubits are named `c<q>` when their first gate
/// uses them as control and `t<q>` otherwise; flags are `f<k>`.
pub fn write_circuit(c: &Circuit) -> String {
    let mut first_role = vec![None; c.n_code];
    for (a, b) in c.cx_gates() {
        for (q, role) in [(a, 'c'), (b, 't')] {
            if q < c.n_code && first_role[q].is_none() {
                first_role[q] = Some(role);
            }
        }
    }
    let name = |q: usize| {
        if q >= c.n_code {
            format!("f{}", q - c.n_code)
        } else {
            format!("{}{q}", first_role[q].unwrap_or('t'))
        }
    };
    let mut s = format!("CIRCUIT code={} state={} n={} flags={}\n", c.code, c.label, c.n_code, c.n_flags);
    for op in &c.ops {
        match *op {
            Op::Init { qubit, basis } => {
                let kw = if basis == Basis::X { "INIT+" } else { "INIT0" };
                writeln!(s, "{kw} {}", name(qubit)).unwrap();
            }
            Op::Cx { control, target } => writeln!(s, "CX {} {}", name(control), name(target)).unwrap(),
            Op::Measure { qubit, basis, flag } => {
                writeln!(s, "M{} {} -> {flag}", basis_letter(basis), name(qubit)).unwrap()
            }
            Op::FinalMeasure { basis } => writeln!(s, "FINAL_MEAS {}", basis_letter(basis)).unwrap(),
        }
    }
    s
}

fn parse_qubit(line: &Line, col: usize, tok: &str, n_code: usize, n_flags: usize) -> Result<usize, ParseError> {
    let (role, idx) = tok.split_at(tok.chars().next().map_or(0, char::len_utf8));
    let i: usize = parse_num(line, col + 1, idx)?;
    match role {
        "c" | "t" if i < n_code => Ok(i),
        "f" if i < n_flags => Ok(n_code + i),
        "c" | "t" | "f" => Err(line.err(col, format!("qubit {tok} out of range"))),
        _ => Err(line.err(col, format!("qubit names start with c, t or f, found {tok:?}"))),
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut lines = content_lines(text);
    let head = lines.next().ok_or(ParseError { line: 1, col: 1, message: "empty circuit file".into() })?;
    if head.tokens[0].1 != "CIRCUIT" {
        return Err(head.err(1, "expected CIRCUIT header"));
    }
    let (mut code, mut label, mut n, mut flags) = (None, None, None, None);
    for (c, k, v) in head.header()? {
        match k {
            "code" => code = Some(v.to_string()),
            "state" => label = Some(v.parse::<StateLabel>().map_err(|e| head.err(c, e))?),
            "n" => n = Some(parse_num::<usize>(&head, c, v)?),
            "flags" => flags = Some(parse_num::<usize>(&head, c, v)?),
            _ => return Err(head.err(c, format!("unknown header key {k:?}"))),
        }
    }
    let missing = |k: &str| head.err(1, format!("header lacks {k}="));
    let (n_code, n_flags) = (n.ok_or_else(|| missing("n"))?, flags.ok_or_else(|| missing("flags"))?);
    let mut ops = Vec::new();
    for line in lines {
        let (col, kw) = line.tokens[0];
        let q = |i: usize| parse_qubit(&line, line.tokens[i].0, line.tokens[i].1, n_code, n_flags);
        let op = match kw {
            "INIT0" | "INIT+" => {
                line.arity(2)?;
                Op::Init { qubit: q(1)?, basis: if kw == "INIT+" { Basis::X } else { Basis::Z } }
            }
            "CX" => {
                line.arity(3)?;
                Op::Cx { control: q(1)?, target: q(2)? }
            }
            "MZ" | "MX" => {
                line.arity(4)?;
                if line.tokens[2].1 != "->" {
                    return Err(line.err(line.tokens[2].0, "expected ->"));
                }
                let flag = parse_num(&line, line.tokens[3].0, line.tokens[3].1)?;
                Op::Measure { qubit: q(1)?, basis: if kw == "MX" { Basis::X } else { Basis::Z }, flag }
            }
            "FINAL_MEAS" => {
                line.arity(2)?;
                let basis = match line.tokens[1].1 {
                    "Z" => Basis::Z,
                    "X" => Basis::X,
                    b => return Err(line.err(line.tokens[1].0, format!("unknown basis {b:?}"))),
                };
                Op::FinalMeasure { basis }
            }
            _ => return Err(line.err(col, format!("unknown opcode {kw:?}"))),
        };
        ops.push(op);
    }
    Ok(Circuit {
        code: code.ok_or_else(|| missing("code"))?,
        label: label.ok_or_else(|| missing("state"))?,
        n_code,
        n_flags,
        ops,
    })
}

/// Gadget text: CX lines over `c`, `t<i>`, `f<k>` in time order, then one
/// measurement line per flag (MZ for X-detecting gadgets, MX for Z).
pub fn write_gadget(g: &FlagGadget) -> String {
    let mut s = format!("GADGET t={} r={} m={} type={}", g.t, g.r, g.m, g.kind);
    if let Some(k) = g.teleport {
        write!(s, " teleport={k}").unwrap();
    }
    s.push('\n');
    for gate in &g.gates {
        writeln!(s, "CX {} {}", gate.control, gate.target).unwrap();
    }
    let m = if g.kind == ErrorType::X { "MZ" } else { "MX" };
    for f in 0..g.m {
        writeln!(s, "{m} f{f} -> {f}").unwrap();
    }
    s
}

fn parse_node(line: &Line, col: usize, tok: &str, r: usize, m: usize) -> Result<Node, ParseError> {
    if tok == "c" {
        return Ok(Node::Origin);
    }
    let (role, idx) = tok.split_at(tok.chars().next().map_or(0, char::len_utf8));
    let i: usize = parse_num(line, col + 1, idx)?;
    match role {
        "t" if i < r => Ok(Node::Target(i)),
        "f" if i < m => Ok(Node::Flag(i)),
        "t" | "f" => Err(line.err(col, format!("node {tok} out of range"))),
        _ => Err(line.err(col, format!("gadget nodes are c, t<i> or f<k>, found {tok:?}"))),
    }
}

pub fn parse_gadget(text: &str) -> Result<FlagGadget, ParseError> {
    let mut lines = content_lines(text);
    let head = lines.next().ok_or(ParseError { line: 1, col: 1, message: "empty gadget file".into() })?;
    if head.tokens[0].1 != "GADGET" {
        return Err(head.err(1, "expected GADGET header"));
    }
    let (mut t, mut r, mut m, mut kind, mut teleport) = (None, None, None, None, None);
    for (c, k, v) in head.header()? {
        match k {
            "t" => t = Some(parse_num(&head, c, v)?),
            "r" => r = Some(parse_num(&head, c, v)?),
            "m" => m = Some(parse_num(&head, c, v)?),
            "type" => kind = Some(v.parse::<ErrorType>().map_err(|e| head.err(c, e))?),
            "teleport" => teleport = Some(parse_num(&head, c, v)?),
            _ => return Err(head.err(c, format!("unknown header key {k:?}"))),
        }
    }
    let missing = |k: &str| head.err(1, format!("header lacks {k}="));
    let (t, r, m) = (t.ok_or_else(|| missing("t"))?, r.ok_or_else(|| missing("r"))?, m.ok_or_else(|| missing("m"))?);
    let kind = kind.ok_or_else(|| missing("type"))?;
    let meas_kw = if kind == ErrorType::X { "MZ" } else { "MX" };
    let mut gates = Vec::new();
    let mut measured = vec![false; m];
    for line in lines {
        let (col, kw) = line.tokens[0];
        if kw == "CX" {
            line.arity(3)?;
            let a = parse_node(&line, line.tokens[1].0, line.tokens[1].1, r, m)?;
            let b = parse_node(&line, line.tokens[2].0, line.tokens[2].1, r, m)?;
            gates.push(Gate::new(a, b));
        } else if kw == meas_kw {
            line.arity(4)?;
            match parse_node(&line, line.tokens[1].0, line.tokens[1].1, r, m)? {
                Node::Flag(f) => measured[f] = true,
                _ => return Err(line.err(line.tokens[1].0, "only flags are measured")),
            }
        } else {
            return Err(line.err(col, format!("unknown opcode {kw:?}")));
        }
    }
    if let Some(f) = measured.iter().position(|&x| !x) {
        return Err(head.err(1, format!("flag f{f} is never measured")));
    }
    Ok(FlagGadget { t, r, m, kind, gates, teleport })
}

/// Line and column of the first occurrence of `needle`, for pointing at a
/// bad value inside a JSON document.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    match text.find(needle) {
        Some(off) => {
            let before = &text[..off];
            let line = before.matches('\n').count() + 1;
            let col = off - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, col)
        }
        None => (1, 1),
    }
}

/// Parses a JSON code description (the catalog entry format) into a
/// validated state at `label`, or at the file's default state.
pub fn parse_code(text: &str, label: Option<StateLabel>) -> Result<CssState, IoError> {
    let entry: CodeCatalogEntry = serde_json::from_str(text)
        .map_err(|e| ParseError { line: e.line(), col: e.column(), message: e.to_string() })?;
    for row in entry.x_stabilizers.iter().chain(&entry.z_stabilizers).chain(&entry.logical_x).chain(&entry.logical_z) {
        let len = row.chars().filter(|c| !c.is_whitespace()).count();
        if len != entry.n {
            let (line, col) = locate(text, row);
            return Err(ParseError { line, col, message: format!("row has length {len}, expected n={}", entry.n) }.into());
        }
    }
    let label = label.unwrap_or_else(|| entry.default_label());
    entry.to_state(label).map_err(|e| match e {
        CatalogError::Css(c) => IoError::Validation(c),
        other => ParseError { line: 1, col: 1, message: other.to_string() }.into(),
    })
}

pub fn read_code_file(path: &std::path::Path, label: Option<StateLabel>) -> Result<CssState, IoError> {
    parse_code(&std::fs::read_to_string(path)?, label)
}

const OUTCOME_MAGIC: &[u8; 8] = b"FPOUTC01";

/// Binary histogram: magic, syndrome bit count (u32 LE), record count
/// (u64 LE), then records of coset key (u128 LE) and weight (f64 LE),
/// sorted by key.
pub fn write_outcomes<W: Write>(w: &mut W, h: &OutcomeHistogram, syndrome_bits: usize) -> std::io::Result<()> {
    let rows = h.sorted();
    w.write_all(OUTCOME_MAGIC)?;
    w.write_all(&(syndrome_bits as u32).to_le_bytes())?;
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    for (k, v) in rows {
        w.write_all(&k.to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_outcomes<R: Read>(r: &mut R) -> Result<(OutcomeHistogram, usize), IoError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != OUTCOME_MAGIC {
        return Err(IoError::Format("wrong magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b16 = [0u8; 16];
    r.read_exact(&mut b4)?;
    let syndrome_bits = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8);
    let mut h = OutcomeHistogram::default();
    for _ in 0..count {
        r.read_exact(&mut b16)?;
        r.read_exact(&mut b8)?;
        h.add(u128::from_le_bytes(b16), f64::from_le_bytes(b8));
    }
    Ok((h, syndrome_bits))
}

/// CSV export: `syndrome,class,weight` with bit vectors in hex.
pub fn outcomes_csv(h: &OutcomeHistogram, syndrome_bits: usize) -> String {
    let mut s = String::from("syndrome,class,weight\n");
    let mask = if syndrome_bits >= 128 { u128::MAX } else { (1u128 << syndrome_bits) - 1 };
    for (k, w) in h.sorted() {
        writeln!(s, "{:x},{:x},{w}", k & mask, k.checked_shr(syndrome_bits as u32).unwrap_or(0)).unwrap();
    }
    s
}

#[derive(Serialize, Deserialize)]
struct MwJson {
    kind: Option<ErrorType>,
    w_max: usize,
    conflicts: usize,
    /// (syndrome hex, class hex, weight), sorted by syndrome.
    entries: Vec<(String, String, usize)>,
}

pub fn mw_to_json(t: &MwTable) -> String {
    let mut entries: Vec<_> = t.entries.iter().collect();
    entries.sort_by_key(|e| *e.0);
    let j = MwJson {
        kind: t.kind,
        w_max: t.w_max,
        conflicts: t.conflicts,
        entries: entries.into_iter().map(|(s, e)| (format!("{s:x}"), format!("{:x}", e.class), e.weight)).collect(),
    };
    serde_json::to_string_pretty(&j).expect("serializable")
}

fn hex(s: &str) -> Result<u128, IoError> {
    u128::from_str_radix(s, 16).map_err(|e| IoError::Format(format!("bad hex {s:?}: {e}")))
}

pub fn mw_from_json(text: &str) -> Result<MwTable, IoError> {
    let j: MwJson = serde_json::from_str(text)?;
    let mut t = MwTable { kind: j.kind, w_max: j.w_max, conflicts: j.conflicts, ..Default::default() };
    for (s, c, w) in j.entries {
        t.entries.insert(hex(&s)?, MwEntry { class: hex(&c)?, weight: w });
    }
    Ok(t)
}

#[derive(Serialize, Deserialize)]
struct MlJson {
    syndrome_bits: usize,
    /// (syndrome hex, [(class hex, count)]), sorted.
    counts: Vec<(String, Vec<(String, f64)>)>,
}

pub fn ml_to_json(t: &MlTable) -> String {
    let j = MlJson {
        syndrome_bits: t.syndrome_bits,
        counts: t
            .counts
            .iter()
            .map(|(s, cs)| (format!("{s:x}"), cs.iter().map(|(c, w)| (format!("{c:x}"), *w)).collect()))
            .collect(),
    };
    serde_json::to_string_pretty(&j).expect("serializable")
}

pub fn ml_from_json(text: &str) -> Result<MlTable, IoError> {
    let j: MlJson = serde_json::from_str(text)?;
    let mut h = OutcomeHistogram::default();
    for (s, cs) in j.counts {
        let s = hex(&s)?;
        for (c, w) in cs {
            h.add(s | (hex(&c)? << j.syndrome_bits), w);
        }
    }
    Ok(crate::decoder::build_ml_lut(&h, j.syndrome_bits))
}

/// Writes rows as CSV with a header line.
pub fn csv<R: fmt::Display>(header: &[&str], rows: &[Vec<R>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_ft_circuit, AssemblyOptions};
    use crate::catalog;
    use crate::gadget::{discover_gadget, GadgetLibrary, SearchBudget};
    use crate::synth::best_of_trials;

    fn bell_ft() -> Circuit {
        Circuit {
            code: "bell".into(),
            label: StateLabel::Zero,
            n_code: 2,
            n_flags: 1,
            ops: vec![
                Op::Init { qubit: 0, basis: Basis::X },
                Op::Init { qubit: 2, basis: Basis::Z },
                Op::Cx { control: 0, target: 2 },
                Op::Init { qubit: 1, basis: Basis::Z },
                Op::Cx { control: 0, target: 1 },
                Op::Cx { control: 0, target: 2 },
                Op::Measure { qubit: 2, basis: Basis::Z, flag: 0 },
                Op::FinalMeasure { basis: Basis::Z },
            ],
        }
    }

    #[test]
    fn bell_circuit_round_trips_byte_identically() {
        let c = bell_ft();
        let text = write_circuit(&c);
        assert_eq!(
            text,
            "CIRCUIT code=bell state=zero n=2 flags=1\nINIT+ c0\nINIT0 f0\nCX c0 f0\nINIT0 t1\nCX c0 t1\nCX c0 f0\nMZ f0 -> 0\nFINAL_MEAS Z\n"
        );
        let back = parse_circuit(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(write_circuit(&back), text);
    }

    #[test]
    fn assembled_circuits_round_trip() {
        for name in ["steane", "color_17", "surface_d3"] {
            let s = catalog::default_state(name).unwrap();
            let bip = best_of_trials(&s, 8, 0).unwrap();
            let mut lib = GadgetLibrary::new(SearchBudget::default());
            let c = assemble_ft_circuit(&s, &bip, &mut lib, &AssemblyOptions::default()).unwrap().circuit;
            assert_eq!(parse_circuit(&write_circuit(&c)).unwrap(), c);
        }
    }

    #[test]
    fn two_flag_five_target_gadget_text() {
        let g = discover_gadget(2, 5, 2, SearchBudget::default()).unwrap();
        let text = write_gadget(&g);
        assert_eq!(text.lines().filter(|l| l.starts_with("CX ")).count(), 9);
        assert_eq!(text.lines().filter(|l| l.starts_with("MZ ")).count(), 2);
        assert_eq!(parse_gadget(&text).unwrap(), g);
        let z = g.conjugated();
        assert_eq!(parse_gadget(&write_gadget(&z)).unwrap(), z);
    }

    #[test]
    fn parse_errors_point_at_the_line() {
        let e = parse_circuit("CIRCUIT code=x state=zero n=2 flags=0\nINIT0 t0\nSWAP t0 t1\n").unwrap_err();
        assert_eq!((e.line, e.col), (3, 1));
        assert!(e.message.contains("SWAP"));
        let e = parse_circuit("CIRCUIT code=x state=zero n=2 flags=0\nCX t0 t7\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 7));
        let e = parse_circuit("CIRCUIT code=x state=zero n=2 flags=0\nCX t0\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_circuit("").is_err());
        let e = parse_gadget("GADGET t=1 r=2 m=1 type=X\nCX c t0\nCX c f0\nCX c t1\nCX c f0\n").unwrap_err();
        assert!(e.message.contains("never measured"));
    }

    #[test]
    fn code_files() {
        let steane = serde_json::to_string_pretty(catalog::entry("steane").unwrap()).unwrap();
        let s = parse_code(&steane, None).unwrap();
        assert_eq!((s.n, s.k, s.d), (7, 1, 3));
        let short = steane.replacen("IIIXXXX", "IIIXXX", 1);
        match parse_code(&short, None) {
            Err(IoError::Parse(e)) => assert!(e.line > 1 && e.message.contains("length")),
            other => panic!("expected a parse error, got {other:?}"),
        }
        // Swapping an X row for one that overlaps a Z row oddly breaks commutation.
        let bad = steane.replacen("IIIXXXX", "XIIIIII", 1);
        assert!(matches!(parse_code(&bad, None), Err(IoError::Validation(_))));
        let e = parse_code("{\"name\": 3", None).unwrap_err();
        assert!(matches!(e, IoError::Parse(_)));
    }

    #[test]
    fn outcome_store_round_trips() {
        let mut h = OutcomeHistogram::default();
        h.add(0, 1e6);
        h.add(0b1011 | (1 << 4), 3.0);
        h.add(u128::MAX >> 1, 0.5);
        let mut buf = Vec::new();
        write_outcomes(&mut buf, &h, 4).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 + 3 * 24);
        let (back, sb) = read_outcomes(&mut buf.as_slice()).unwrap();
        assert_eq!(sb, 4);
        assert_eq!(back.sorted(), h.sorted());
        let csv = outcomes_csv(&h, 4);
        assert!(csv.contains("\nb,1,3\n"));
        assert!(read_outcomes(&mut &b"garbage!"[..]).is_err());
    }

    #[test]
    fn lut_json_round_trips() {
        let s = catalog::default_state("steane").unwrap();
        let mw = crate::decoder::build_mw_lut(&s, ErrorType::X, 1).unwrap();
        let text = mw_to_json(&mw);
        assert_eq!(mw_from_json(&text).unwrap(), mw);
        assert_eq!(mw_to_json(&mw_from_json(&text).unwrap()), text);
        let mut h = OutcomeHistogram::default();
        h.add(0, 10.0);
        h.add(5 | (1 << 3), 2.0);
        h.add(5, 1.0);
        let ml = crate::decoder::build_ml_lut(&h, 3);
        assert_eq!(ml_from_json(&ml_to_json(&ml)).unwrap(), ml);
    }
}
