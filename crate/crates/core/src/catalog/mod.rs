//! Built-in and user-supplied systems: realizations of four-dimensional Lie
//! algebras on canonical phase space, and Lie-group phase spaces with their
//! Poisson bivectors and Darboux maps.

mod build;
pub mod schema;

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::algebra::{AlgebraError, LieAlgebra};
use crate::expr::sample::SamplingDomain;
use crate::expr::{Expr, ParseError, Point, Symbol};
use crate::params::{ParamError, Params};
use crate::poisson::{BivectorError, PoissonStructure};

pub use schema::{CatalogDoc, ClaimedClass, SystemKind, SystemSpec};

const BUILTIN: &str = include_str!("../../data/builtin.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("invalid formula `{text}` at {pointer}: {source}")]
    Formula {
        pointer: String,
        text: String,
        source: ParseError,
    },
    #[error("invalid bivector at {pointer}: {source}")]
    Bivector {
        pointer: String,
        source: BivectorError,
    },
    #[error("invalid entry at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
    #[error("system id `{0}` is already defined")]
    Collision(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("{id}: {source}")]
    Params { id: String, source: ParamError },
    #[error("{id}: {source}")]
    Algebra { id: String, source: AlgebraError },
    #[error("invalid pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },
}

/// Which reading of an entry to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Formulas corrected where the printed ones fail verification.
    Curated,
    /// Formulas exactly as printed.
    AsPrinted,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Curated => "curated",
            Self::AsPrinted => "as-printed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub label: String,
    pub expr: Expr,
    pub q_form: Option<String>,
    /// Built from Casimir operators, so it should commute with every `Q`.
    pub casimir: bool,
}

#[derive(Debug, Clone)]
pub struct Invariant {
    pub label: String,
    pub expr: Expr,
}

#[derive(Debug, Clone)]
pub struct Darboux {
    pub y: Vec<Expr>,
    /// 0-based pairs with `{y_i, y_j} = 1`.
    pub pairing: Vec<(usize, usize)>,
}

/// A printed closed form of a Hamiltonian, to be compared against its
/// expression through the `Q`'s.
#[derive(Debug, Clone)]
pub struct FormClaim {
    pub hamiltonian: String,
    pub source: String,
    pub printed_text: String,
    pub q_form_text: String,
    pub printed: Expr,
    pub reference: Expr,
}

/// A fully materialized system with every parameter bound.
#[derive(Debug, Clone)]
pub struct System {
    pub id: String,
    pub kind: SystemKind,
    pub variant: Variant,
    pub algebra: LieAlgebra,
    pub params: Params,
    pub n: usize,
    pub coordinates: Vec<Symbol>,
    pub structure: PoissonStructure,
    pub q: Vec<Expr>,
    pub hamiltonians: Vec<Hamiltonian>,
    pub core: Vec<Invariant>,
    pub extra: Vec<Invariant>,
    pub degenerate_casimirs: Vec<Invariant>,
    pub darboux: Option<Darboux>,
    pub form_claims: Vec<FormClaim>,
    pub domain: SamplingDomain,
    pub z0: Option<Vec<f64>>,
    pub claimed_class: ClaimedClass,
    pub errata: Option<String>,
    pub notes: Vec<String>,
}

impl System {
    /// The first listed Hamiltonian, used for dynamics.
    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonians[0]
    }

    /// Core followed by extra invariants.
    pub fn listed_invariants(&self) -> impl Iterator<Item = &Invariant> {
        self.core.iter().chain(&self.extra)
    }

    /// Phase-space dimension.
    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    /// The catalog's start point, or the centre of the sampling box.
    pub fn default_z0(&self) -> (Vec<f64>, bool) {
        match &self.z0 {
            Some(z) => (z.clone(), true),
            None => {
                let ranges: Vec<_> = self.domain.vars().map(|(_, r)| r.center()).collect();
                (ranges, false)
            }
        }
    }

    pub fn point(&self, z: &[f64]) -> Point {
        Point::from_vars(self.coordinates.iter().cloned().zip(z.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemInfo {
    pub id: String,
    pub kind: SystemKind,
    pub algebra: String,
    pub claimed_class: ClaimedClass,
}

impl fmt::Display for SystemInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}  {}  {}  {}",
            self.id,
            self.kind.as_str(),
            self.algebra,
            self.claimed_class.as_str()
        )
    }
}

/// One difference between the printed and curated readings of an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrataLine {
    pub field: String,
    pub printed: String,
    pub curated: String,
}

#[derive(Debug, Clone)]
struct Entry {
    spec: SystemSpec,
    pointer: String,
}

/// Registry of systems in table order; user files are appended.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: Vec<Entry>,
}

impl Catalog {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut c = Self::empty();
        c.load_str(BUILTIN).expect("built-in catalog is valid");
        c
    }

    /// Merges a JSON document; every entry is validated and no id may collide
    /// with one already present. Returns the new ids.
    pub fn load_str(&mut self, text: &str) -> Result<Vec<String>, CatalogError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: CatalogDoc =
            serde_path_to_error::deserialize(de).map_err(|e| CatalogError::Schema {
                pointer: json_pointer(e.path()),
                message: e.inner().to_string(),
            })?;
        let mut added: Vec<Entry> = Vec::new();
        for (i, spec) in doc.systems.into_iter().enumerate() {
            if self.position(&spec.id).is_some() || added.iter().any(|e| e.spec.id == spec.id) {
                return Err(CatalogError::Collision(spec.id));
            }
            let pointer = format!("/systems/{i}");
            for variant in [Variant::Curated, Variant::AsPrinted] {
                build::materialize(&spec, &pointer, variant, &Params::new())?;
            }
            added.push(Entry { spec, pointer });
        }
        let ids = added.iter().map(|e| e.spec.id.clone()).collect();
        self.entries.extend(added);
        Ok(ids)
    }

    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<Vec<String>, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.load_str(&text)
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.spec.id == id)
    }

    fn entry(&self, id: &str) -> Result<&Entry, CatalogError> {
        self.position(id)
            .map(|i| &self.entries[i])
            .ok_or_else(|| CatalogError::UnknownSystem(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.spec.id.clone()).collect()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.position(id).is_some()
    }

    pub fn spec(&self, id: &str) -> Option<&SystemSpec> {
        self.position(id).map(|i| &self.entries[i].spec)
    }

    pub fn list_systems(&self) -> Vec<SystemInfo> {
        self.entries.iter().map(|e| info(&e.spec)).collect()
    }

    /// Entries whose id matches a glob pattern (or equals it literally).
    pub fn matching(&self, pattern: &str) -> Result<Vec<SystemInfo>, CatalogError> {
        let pat = glob::Pattern::new(pattern).map_err(|e| CatalogError::Pattern {
            pattern: pattern.to_string(),
            message: e.msg.to_string(),
        })?;
        Ok(self
            .entries
            .iter()
            .filter(|e| e.spec.id == pattern || pat.matches(&e.spec.id))
            .map(|e| info(&e.spec))
            .collect())
    }

    /// The curated reading of a system.
    pub fn get_system(&self, id: &str, params: &Params) -> Result<System, CatalogError> {
        self.get_variant(id, params, Variant::Curated)
    }

    pub fn get_variant(
        &self,
        id: &str,
        params: &Params,
        variant: Variant,
    ) -> Result<System, CatalogError> {
        let e = self.entry(id)?;
        build::materialize(&e.spec, &e.pointer, variant, params)
    }

    /// Whether the printed reading differs from the curated one anywhere.
    pub fn has_printed_forms(&self, id: &str) -> Result<bool, CatalogError> {
        let spec = &self.entry(id)?.spec;
        Ok(spec.printed.as_ref().is_some_and(|p| !p.is_empty())
            || spec.h.iter().any(|h| {
                let f = h.forms();
                !f.printed.is_empty() || f.printed_q_form.is_some()
            }))
    }

    /// Printed formulas next to their curated counterparts.
    pub fn errata_diff(&self, id: &str) -> Result<Vec<ErrataLine>, CatalogError> {
        let spec = &self.entry(id)?.spec;
        let mut out = Vec::new();
        let printed = spec.printed.clone().unwrap_or_default();
        let mut lists = |field: &str, printed: &Option<Vec<String>>, curated: &[String]| {
            if let Some(p) = printed {
                for (i, (a, b)) in p.iter().zip(curated).enumerate() {
                    if a != b {
                        out.push(ErrataLine {
                            field: format!("{field}{}", i + 1),
                            printed: a.clone(),
                            curated: b.clone(),
                        });
                    }
                }
            }
        };
        lists("Q", &printed.q, &spec.q);
        lists("y", &printed.darboux, &spec.darboux);
        if let Some(p) = &printed.bivector {
            let fmt = |v: &[(usize, usize, String)]| {
                v.iter()
                    .map(|(m, n, e)| format!("P{m}{n}={e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push(ErrataLine {
                field: "P".to_string(),
                printed: fmt(p),
                curated: fmt(&spec.bivector),
            });
        }
        let labels = if spec.h.len() == 1 {
            vec!["H".to_string()]
        } else {
            (1..=spec.h.len()).map(|k| format!("H{k}")).collect()
        };
        for (h, label) in spec.h.iter().zip(labels) {
            let f = h.forms();
            let curated = f.q_form.clone().or(f.expr.clone()).unwrap_or_default();
            if let Some(p) = &f.printed_q_form {
                out.push(ErrataLine {
                    field: label.clone(),
                    printed: p.clone(),
                    curated: curated.clone(),
                });
            }
            for p in &f.printed {
                out.push(ErrataLine {
                    field: format!("{label} ({})", p.source),
                    printed: p.expr.clone(),
                    curated: curated.clone(),
                });
            }
        }
        Ok(out)
    }
}

fn info(spec: &SystemSpec) -> SystemInfo {
    SystemInfo {
        id: spec.id.clone(),
        kind: spec.kind,
        algebra: spec.algebra.clone(),
        claimed_class: spec.claimed_class,
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn shared() -> &'static Catalog {
    static BUILT: OnceLock<Catalog> = OnceLock::new();
    BUILT.get_or_init(Catalog::builtin)
}

/// Built-in systems in table order.
pub fn list_systems() -> Vec<SystemInfo> {
    shared().list_systems()
}

/// A curated built-in system.
pub fn get_system(id: &str, params: &Params) -> Result<System, CatalogError> {
    shared().get_system(id, params)
}

/// The built-in catalog extended with a user file.
pub fn load_catalog_file(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let mut c = shared().clone();
    c.load_file(path)?;
    Ok(c)
}
