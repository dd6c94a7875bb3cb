//! Built-in code catalog, loaded from the JSON shipped with the crate.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css::{CssError, CssState, StateLabel};
use crate::gf2::BitVec;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("entry {name}: {message}")]
    BadEntry { name: String, message: String },
    #[error(transparent)]
    Css(#[from] CssError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCatalogEntry {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub x_stabilizers: Vec<String>,
    pub z_stabilizers: Vec<String>,
    pub logical_x: Vec<String>,
    pub logical_z: Vec<String>,
    #[serde(default = "default_label")]
    pub default_state: String,
    /// Prepare the Hadamard-conjugated state (used for triorthogonal codes
    /// whose natural target is |+>).
    #[serde(default)]
    pub hadamard_conjugated: bool,
}

fn default_label() -> String {
    "zero".into()
}

impl CodeCatalogEntry {
    pub fn to_state(&self, label: StateLabel) -> Result<CssState, CatalogError> {
        let bad = |message: String| CatalogError::BadEntry { name: self.name.clone(), message };
        let parse_all = |rows: &[String], letter: char| -> Result<Vec<BitVec>, CatalogError> {
            rows.iter()
                .map(|r| {
                    let v = parse_support(r, letter).map_err(bad)?;
                    if v.len() != self.n {
                        return Err(bad(format!("row {r:?} has length {} instead of {}", v.len(), self.n)));
                    }
                    Ok(v)
                })
                .collect()
        };
        let state = CssState {
            name: self.name.clone(),
            n: self.n,
            k: self.k,
            d: self.d,
            x_generators: parse_all(&self.x_stabilizers, 'X')?,
            z_generators: parse_all(&self.z_stabilizers, 'Z')?,
            logical_x: parse_all(&self.logical_x, 'X')?,
            logical_z: parse_all(&self.logical_z, 'Z')?,
            label,
        };
        state.validate()?;
        Ok(if self.hadamard_conjugated { state.hadamard_conjugate() } else { state })
    }

    pub fn default_label(&self) -> StateLabel {
        self.default_state.parse().unwrap_or(StateLabel::Zero)
    }

    pub fn default_state(&self) -> Result<CssState, CatalogError> {
        self.to_state(self.default_label())
    }
}

/// Parses a one-type Pauli string such as `XXIIXXI`; `0`/`1` strings are
/// accepted as well.
pub fn parse_support(s: &str, letter: char) -> Result<BitVec, String> {
    let mut bits = Vec::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            'I' | '0' | '_' | '.' => bits.push(false),
            '1' => bits.push(true),
            c if c == letter => bits.push(true),
            c if c.is_whitespace() => {}
            c => return Err(format!("unexpected character {c:?} in {s:?} (expected I or {letter})")),
        }
    }
    Ok(BitVec::from_bools(&bits))
}

pub fn format_support(v: &BitVec, letter: char) -> String {
    (0..v.len()).map(|i| if v.get(i) { letter } else { 'I' }).collect()
}

const CATALOG_JSON: &str = include_str!("../data/catalog.json");

pub fn entries() -> &'static [CodeCatalogEntry] {
    static ENTRIES: OnceLock<Vec<CodeCatalogEntry>> = OnceLock::new();
    ENTRIES.get_or_init(|| serde_json::from_str(CATALOG_JSON).expect("embedded catalog is valid JSON"))
}

pub fn entry(name: &str) -> Result<&'static CodeCatalogEntry, CatalogError> {
    entries()
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| CatalogError::UnknownCode(name.to_string()))
}

pub fn state(name: &str, label: StateLabel) -> Result<CssState, CatalogError> {
    entry(name)?.to_state(label)
}

pub fn default_state(name: &str) -> Result<CssState, CatalogError> {
    entry(name)?.default_state()
}
