//! Serialized form of catalog documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDoc {
    pub systems: Vec<SystemSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Realization,
    Group,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Realization => "realization",
            Self::Group => "group",
        }
    }
}

/// Classes a catalog entry may claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimedClass {
    Integrable,
    Superintegrable,
    Maximal,
}

impl ClaimedClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Integrable => "integrable",
            Self::Superintegrable => "superintegrable",
            Self::Maximal => "maximal",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub id: String,
    pub kind: SystemKind,
    pub algebra: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamDecl>,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub derived: BTreeMap<String, String>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub defs: Vec<(String, String)>,
    #[serde(rename = "Q")]
    pub q: Vec<String>,
    #[serde(rename = "H")]
    pub h: Vec<HamiltonianSpec>,
    #[serde(default)]
    pub degenerate_casimirs: Vec<String>,
    #[serde(default)]
    pub core: Vec<String>,
    #[serde(default)]
    pub extra: Vec<String>,
    pub claimed_class: ClaimedClass,
    #[serde(default)]
    pub bivector: Vec<(usize, usize, String)>,
    #[serde(default)]
    pub darboux: Vec<String>,
    #[serde(default)]
    pub pairing: Vec<(usize, usize)>,
    #[serde(default)]
    pub domain: BTreeMap<String, String>,
    #[serde(default)]
    pub guards: Vec<GuardSpec>,
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    #[serde(default)]
    pub printed: Option<PrintedSpec>,
    #[serde(default)]
    pub errata: Option<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// `"nonzero"`, a bare default value, or both.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ParamDecl {
    Default(f64),
    Constraint(String),
    Full {
        #[serde(default = "one")]
        default: f64,
        #[serde(default)]
        constraint: Option<String>,
    },
}

fn one() -> f64 {
    1.0
}

impl ParamDecl {
    pub fn default_value(&self) -> f64 {
        match self {
            Self::Default(v) | Self::Full { default: v, .. } => *v,
            Self::Constraint(_) => 1.0,
        }
    }

    pub fn constraint(&self) -> Option<&str> {
        match self {
            Self::Constraint(c) => Some(c),
            Self::Full { constraint, .. } => constraint.as_deref(),
            Self::Default(_) => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Formula(String),
    Full(HamiltonianForms),
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianForms {
    /// Function of `Q1..Q4`.
    #[serde(default)]
    pub q_form: Option<String>,
    /// Closed form in the coordinates; used when no `q_form` is given.
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub printed_q_form: Option<String>,
    #[serde(default)]
    pub printed: Vec<PrintedForm>,
    #[serde(default)]
    pub casimir: bool,
}

impl HamiltonianSpec {
    pub fn forms(&self) -> HamiltonianForms {
        match self {
            Self::Formula(f) => HamiltonianForms {
                expr: Some(f.clone()),
                ..HamiltonianForms::default()
            },
            Self::Full(f) => f.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PrintedForm {
    pub source: String,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardKind {
    AtLeast,
    AwayFromZero,
    Bounded,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSpec {
    pub expr: String,
    pub rule: GuardKind,
    pub value: f64,
}

/// Formulas as they appear in print, where they differ from the curated ones.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PrintedSpec {
    #[serde(default, rename = "Q")]
    pub q: Option<Vec<String>>,
    #[serde(default)]
    pub darboux: Option<Vec<String>>,
    #[serde(default)]
    pub bivector: Option<Vec<(usize, usize, String)>>,
    #[serde(default)]
    pub defs: Option<Vec<(String, String)>>,
}

impl PrintedSpec {
    pub fn is_empty(&self) -> bool {
        self.q.is_none() && self.darboux.is_none() && self.bivector.is_none() && self.defs.is_none()
    }
}
