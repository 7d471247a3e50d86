use std::fmt;

use thiserror::Error;

use super::{Expr, Node, Symbol};

/// Numeric assignment of variables and parameters.
///
/// Lookups are linear; phase spaces here have at most a handful of coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Point {
    vars: Vec<(Symbol, f64)>,
    params: Vec<(Symbol, f64)>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vars<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<Symbol>,
    {
        let mut pt = Self::new();
        for (name, value) in vars {
            pt.set_var(name, value);
        }
        pt
    }

    pub fn with_param(mut self, name: impl Into<Symbol>, value: f64) -> Self {
        self.set_param(name, value);
        self
    }

    pub fn set_var(&mut self, name: impl Into<Symbol>, value: f64) {
        set(&mut self.vars, name.into(), value);
    }

    pub fn set_param(&mut self, name: impl Into<Symbol>, value: f64) {
        set(&mut self.params, name.into(), value);
    }

    pub fn var(&self, name: &str) -> Option<f64> {
        get(&self.vars, name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        get(&self.params, name)
    }

    pub fn vars(&self) -> &[(Symbol, f64)] {
        &self.vars
    }

    pub fn params(&self) -> &[(Symbol, f64)] {
        &self.params
    }
}

fn set(slots: &mut Vec<(Symbol, f64)>, name: Symbol, value: f64) {
    match slots.iter_mut().find(|(n, _)| *n == name) {
        Some(slot) => slot.1 = value,
        None => slots.push((name, value)),
    }
}

fn get(slots: &[(Symbol, f64)], name: &str) -> Option<f64> {
    slots.iter().find(|(n, _)| &**n == name).map(|(_, v)| *v)
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (n, v)) in self.vars.iter().chain(&self.params).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unassigned variable `{0}`")]
    UnassignedVariable(String),
    #[error("unassigned parameter `{0}`")]
    UnassignedParameter(String),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
}

impl EvalError {
    /// Domain violations are point-specific and can be retried elsewhere;
    /// unassigned symbols cannot.
    pub fn is_domain(&self) -> bool {
        matches!(self, EvalError::Domain { .. })
    }
}

fn domain(e: &Expr, reason: &'static str) -> EvalError {
    EvalError::Domain {
        expr: e.to_string(),
        reason,
    }
}

/// `base^exponent` with the real-valued convention used throughout: integer
/// exponents accept any base, other exponents require a positive base.
pub(crate) fn power(base: f64, exponent: f64) -> Option<f64> {
    if exponent.fract() == 0.0 && exponent.abs() < i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return None;
        }
        Some(base.powi(exponent as i32))
    } else if base > 0.0 {
        Some((exponent * base.ln()).exp())
    } else {
        None
    }
}

impl Expr {
    pub fn evaluate(&self, pt: &Point) -> Result<f64, EvalError> {
        let value = match self.node() {
            Node::Constant(c) => *c,
            Node::Variable(v) => pt
                .var(v)
                .ok_or_else(|| EvalError::UnassignedVariable(v.to_string()))?,
            Node::Parameter(p) => pt
                .param(p)
                .ok_or_else(|| EvalError::UnassignedParameter(p.to_string()))?,
            Node::Sum(a, b) => a.evaluate(pt)? + b.evaluate(pt)?,
            Node::Product(a, b) => a.evaluate(pt)? * b.evaluate(pt)?,
            Node::Quotient(a, b) => {
                let num = a.evaluate(pt)?;
                let den = b.evaluate(pt)?;
                if den == 0.0 {
                    return Err(domain(self, "division by zero"));
                }
                num / den
            }
            Node::Power(a, b) => {
                let base = a.evaluate(pt)?;
                let exponent = b.evaluate(pt)?;
                power(base, exponent)
                    .ok_or_else(|| domain(self, "non-integer power of a non-positive base"))?
            }
            Node::Negate(a) => -a.evaluate(pt)?,
            Node::Exp(a) => a.evaluate(pt)?.exp(),
            Node::Ln(a) => {
                let arg = a.evaluate(pt)?;
                if arg <= 0.0 {
                    return Err(domain(self, "logarithm of a non-positive value"));
                }
                arg.ln()
            }
            Node::Abs(a) => a.evaluate(pt)?.abs(),
            Node::Sin(a) => a.evaluate(pt)?.sin(),
            Node::Cos(a) => a.evaluate(pt)?.cos(),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(domain(self, "non-finite value"))
        }
    }
}
