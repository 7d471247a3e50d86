//! Parameter assignments, admissibility constraints, and per-system parameter tables.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::{parse_with, EvalError, Expr, ParseContext, ParseError, Point, Symbol};

/// A binding of parameter names to values. Ordered so output is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_bindings(&self) -> Vec<(Symbol, f64)> {
        self.0
            .iter()
            .map(|(k, v)| (Symbol::from(k.as_str()), *v))
            .collect()
    }

    pub fn to_point(&self) -> Point {
        let mut pt = Point::new();
        for (k, v) in &self.0 {
            pt.set_param(k.as_str(), *v);
        }
        pt
    }
}

impl<'a> FromIterator<(&'a str, f64)> for Params {
    fn from_iter<T: IntoIterator<Item = (&'a str, f64)>>(iter: T) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Relation {
    fn holds(self, l: f64, r: f64) -> bool {
        match self {
            Self::Lt => l < r,
            Self::Le => l <= r,
            Self::Gt => l > r,
            Self::Ge => l >= r,
            Self::Eq => l == r,
            Self::Ne => l != r,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConstraintError {
    #[error("constraint `{text}` has no comparison operator")]
    MissingRelation { text: String },
    #[error("constraint `{text}`: {source}")]
    Formula { text: String, source: ParseError },
    #[error("unrecognized parameter constraint `{0}`")]
    Shorthand(String),
}

/// `lhs REL rhs`, optionally guarded: `b > 0 if a = -1`.
#[derive(Debug, Clone)]
pub struct Constraint {
    text: String,
    lhs: Expr,
    rel: Relation,
    rhs: Expr,
    condition: Option<Box<Constraint>>,
}

impl Constraint {
    pub fn parse(text: &str, ctx: &ParseContext) -> Result<Self, ConstraintError> {
        let (body, condition) = match text.split_once(" if ") {
            Some((body, cond)) => (body, Some(Box::new(Self::parse(cond, ctx)?))),
            None => (text, None),
        };
        let (lhs, rel, rhs) =
            split_relation(body).ok_or_else(|| ConstraintError::MissingRelation {
                text: text.to_string(),
            })?;
        let formula = |s: &str| {
            parse_with(s, ctx).map_err(|source| ConstraintError::Formula {
                text: text.to_string(),
                source,
            })
        };
        Ok(Self {
            text: text.trim().to_string(),
            lhs: formula(lhs)?,
            rel,
            rhs: formula(rhs)?,
            condition,
        })
    }

    /// Shorthands for single-parameter constraints: `nonzero`, `positive`,
    /// `negative`, `any`, or an interval such as `[-1,1]`, `(0,2]`.
    pub fn shorthand(name: &str, spec: &str) -> Result<Vec<Self>, ConstraintError> {
        let ctx = ParseContext::with_params([name]);
        let spec = spec.trim();
        let one = |t: String| Self::parse(&t, &ctx).map(|c| vec![c]);
        match spec {
            "any" | "" => Ok(Vec::new()),
            "nonzero" => one(format!("{name} != 0")),
            "positive" => one(format!("{name} > 0")),
            "negative" => one(format!("{name} < 0")),
            _ => {
                let bad = || ConstraintError::Shorthand(spec.to_string());
                let open = spec.chars().next().ok_or_else(bad)?;
                let close = spec.chars().last().ok_or_else(bad)?;
                let inner = spec.get(1..spec.len() - 1).ok_or_else(bad)?;
                let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
                let lo_rel = match open {
                    '[' => "<=",
                    '(' => "<",
                    _ => return Err(bad()),
                };
                let hi_rel = match close {
                    ']' => "<=",
                    ')' => "<",
                    _ => return Err(bad()),
                };
                let mut out = Vec::new();
                if !matches!(lo.trim(), "-inf" | "") {
                    out.push(Self::parse(
                        &format!("{} {lo_rel} {name}", lo.trim()),
                        &ctx,
                    )?);
                }
                if !matches!(hi.trim(), "inf" | "+inf" | "") {
                    out.push(Self::parse(
                        &format!("{name} {hi_rel} {}", hi.trim()),
                        &ctx,
                    )?);
                }
                Ok(out)
            }
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn parameters(&self) -> Vec<Symbol> {
        let mut out: Vec<_> = self.lhs.parameters().into_iter().collect();
        out.extend(self.rhs.parameters());
        if let Some(c) = &self.condition {
            out.extend(c.parameters());
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn holds(&self, params: &Params) -> Result<bool, EvalError> {
        let pt = params.to_point();
        if let Some(cond) = &self.condition {
            if !cond.holds(params)? {
                return Ok(true);
            }
        }
        Ok(self
            .rel
            .holds(self.lhs.evaluate(&pt)?, self.rhs.evaluate(&pt)?))
    }
}

fn split_relation(text: &str) -> Option<(&str, Relation, &str)> {
    const OPS: [(&str, Relation); 7] = [
        ("<=", Relation::Le),
        (">=", Relation::Ge),
        ("!=", Relation::Ne),
        ("==", Relation::Eq),
        ("<", Relation::Lt),
        (">", Relation::Gt),
        ("=", Relation::Eq),
    ];
    let idx = text.find(['<', '>', '=', '!'])?;
    let rest = &text[idx..];
    let (op, rel) = OPS.iter().find(|(op, _)| rest.starts_with(op))?;
    Some((&text[..idx], *rel, &text[idx + op.len()..]))
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub default: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("unknown parameter `{name}` (expected one of: {expected})")]
    Unknown { name: String, expected: String },
    #[error("parameter `{name}` is fixed by `{name} = {formula}` and cannot be overridden")]
    Derived { name: String, formula: String },
    #[error("inadmissible parameters ({params}): constraint `{constraint}` violated")]
    Violated { constraint: String, params: String },
    #[error("constraint `{constraint}` could not be evaluated: {source}")]
    Eval {
        constraint: String,
        source: EvalError,
    },
}

/// The free parameters of a system: defaults, constraints, and derived values.
#[derive(Debug, Clone, Default)]
pub struct ParamTable {
    specs: Vec<ParamSpec>,
    constraints: Vec<Constraint>,
    derived: Vec<(String, Expr)>,
}

impl ParamTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, default: f64) {
        self.specs.push(ParamSpec {
            name: name.to_string(),
            default,
        });
    }

    pub fn constrain(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn derive(&mut self, name: &str, formula: Expr) {
        self.derived.push((name.to_string(), formula));
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Names a formula in this system may refer to.
    pub fn context(&self) -> ParseContext {
        let mut ctx = ParseContext::new();
        for s in &self.specs {
            ctx = ctx.param(s.name.clone());
        }
        for (d, _) in &self.derived {
            ctx = ctx.param(d.clone());
        }
        ctx
    }

    pub fn defaults(&self) -> Params {
        self.specs
            .iter()
            .map(|s| (s.name.as_str(), s.default))
            .collect()
    }

    /// Applies overrides to the defaults, fills derived values, and checks every
    /// constraint.
    pub fn resolve(&self, overrides: &Params) -> Result<Params, ParamError> {
        let mut out = self.defaults();
        for (name, value) in overrides.iter() {
            if let Some((_, f)) = self.derived.iter().find(|(d, _)| d == name) {
                return Err(ParamError::Derived {
                    name: name.to_string(),
                    formula: f.to_string(),
                });
            }
            if !self.specs.iter().any(|s| s.name == name) {
                let expected = if self.specs.is_empty() {
                    "none".to_string()
                } else {
                    self.specs
                        .iter()
                        .map(|s| s.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                return Err(ParamError::Unknown {
                    name: name.to_string(),
                    expected,
                });
            }
            out.set(name, value);
        }
        for c in &self.constraints {
            let ok = c.holds(&out).map_err(|source| ParamError::Eval {
                constraint: c.text().to_string(),
                source,
            })?;
            if !ok {
                return Err(ParamError::Violated {
                    constraint: c.text().to_string(),
                    params: out.to_string(),
                });
            }
        }
        for (name, formula) in &self.derived {
            let v = formula
                .evaluate(&out.to_point())
                .map_err(|source| ParamError::Eval {
                    constraint: format!("{name} = {formula}"),
                    source,
                })?;
            out.set(name, v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ParseContext {
        ParseContext::with_params(["a", "b", "c"])
    }

    #[test]
    fn relations_and_conditions() {
        let c = Constraint::parse("b > 0 if a = -1", &ctx()).unwrap();
        let p = Params::new().with("a", -1.0).with("b", 0.5);
        assert!(c.holds(&p).unwrap());
        assert!(!c.holds(&p.clone().with("b", -0.5)).unwrap());
        assert!(c
            .holds(&Params::new().with("a", 0.0).with("b", -0.5))
            .unwrap());

        let c = Constraint::parse("a*b*c != 0", &ctx()).unwrap();
        let p = Params::new().with("a", 0.0).with("b", 0.5).with("c", 1.0);
        assert!(!c.holds(&p).unwrap());

        assert!(matches!(
            Constraint::parse("a b", &ctx()),
            Err(ConstraintError::MissingRelation { .. })
        ));
    }

    #[test]
    fn shorthands() {
        let cs = Constraint::shorthand("b", "[-1,1]").unwrap();
        assert_eq!(cs.len(), 2);
        let ok = |v: f64| {
            cs.iter()
                .all(|c| c.holds(&Params::new().with("b", v)).unwrap())
        };
        assert!(ok(1.0) && ok(-1.0) && !ok(1.5));

        let cs = Constraint::shorthand("a", "(0,inf)").unwrap();
        assert_eq!(cs.len(), 1);
        assert!(!cs[0].holds(&Params::new().with("a", 0.0)).unwrap());

        let cs = Constraint::shorthand("d", "nonzero").unwrap();
        assert!(!cs[0].holds(&Params::new().with("d", 0.0)).unwrap());
        assert!(Constraint::shorthand("d", "whatever").is_err());
    }

    #[test]
    fn table_resolution() {
        let mut t = ParamTable::new();
        t.declare("a", 1.0);
        t.declare("b", 1.0);
        t.constrain(Constraint::parse("a^2 + b^2 != 0", &t.context()).unwrap());
        t.derive("c", parse_with("1/(a^2+b^2)", &t.context()).unwrap());

        let p = t.resolve(&Params::new()).unwrap();
        assert_eq!(p.get("c"), Some(0.5));

        let err = t.resolve(&Params::new().with("c", 2.0)).unwrap_err();
        assert!(matches!(err, ParamError::Derived { .. }));
        let err = t.resolve(&Params::new().with("z", 2.0)).unwrap_err();
        assert!(matches!(err, ParamError::Unknown { .. }));
        let err = t
            .resolve(&Params::new().with("a", 0.0).with("b", 0.0))
            .unwrap_err();
        assert!(matches!(err, ParamError::Violated { .. }));
    }
}
