//! Immutable symbolic expressions over phase-space variables and parameters.
//!
//! An [`Expr`] is a cheaply clonable handle to a shared, acyclic tree. Nodes are
//! built through the smart constructors on [`Expr`] (`add`, `mul`, `pow`, ...),
//! which apply a small set of local rewrite rules: constant folding, additive and
//! multiplicative identities, and double negation. There is no canonical form;
//! equality of two expressions is decided numerically by
//! [`equal_on_samples`](sample::equal_on_samples).

mod diff;
mod eval;
mod parse;
pub mod random;
pub mod sample;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use eval::{EvalError, Point};
pub use parse::{parse, parse_with, ParseContext, ParseError, ParseErrorKind};

/// Interned-ish symbol name. Cloning is a reference-count bump.
pub type Symbol = Arc<str>;

#[derive(Debug)]
pub enum Node {
    Constant(f64),
    Parameter(Symbol),
    Variable(Symbol),
    Sum(Expr, Expr),
    Product(Expr, Expr),
    Quotient(Expr, Expr),
    Power(Expr, Expr),
    Negate(Expr),
    Exp(Expr),
    Ln(Expr),
    Abs(Expr),
    Sin(Expr),
    Cos(Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    fn wrap(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: f64) -> Self {
        Self::wrap(Node::Constant(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(name: impl Into<Symbol>) -> Self {
        Self::wrap(Node::Variable(name.into()))
    }

    pub fn param(name: impl Into<Symbol>) -> Self {
        Self::wrap(Node::Parameter(name.into()))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.node() {
            Node::Constant(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(0.0), _) => rhs.clone(),
            (_, Some(0.0)) => self.clone(),
            _ => Self::wrap(Node::Sum(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Constant(c) => Expr::constant(-c),
            Node::Negate(inner) => inner.clone(),
            _ => Self::wrap(Node::Negate(self.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(0.0)) => Expr::zero(),
            (Some(1.0), _) => rhs.clone(),
            (_, Some(1.0)) => self.clone(),
            (Some(-1.0), _) => rhs.neg(),
            (_, Some(-1.0)) => self.neg(),
            _ => Self::wrap(Node::Product(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => self.clone(),
            (_, Some(-1.0)) => self.neg(),
            _ => Self::wrap(Node::Quotient(self.clone(), rhs.clone())),
        }
    }

    pub fn pow(&self, exponent: &Expr) -> Expr {
        match (self.as_constant(), exponent.as_constant()) {
            (_, Some(0.0)) => Expr::one(),
            (_, Some(1.0)) => self.clone(),
            (Some(b), Some(e)) => match eval::power(b, e) {
                Some(v) if v.is_finite() => Expr::constant(v),
                _ => Self::wrap(Node::Power(self.clone(), exponent.clone())),
            },
            _ => Self::wrap(Node::Power(self.clone(), exponent.clone())),
        }
    }

    pub fn powi(&self, exponent: i32) -> Expr {
        self.pow(&Expr::constant(f64::from(exponent)))
    }

    pub fn exp(&self) -> Expr {
        match self.as_constant() {
            Some(0.0) => Expr::one(),
            _ => Self::wrap(Node::Exp(self.clone())),
        }
    }

    pub fn ln(&self) -> Expr {
        match self.as_constant() {
            Some(1.0) => Expr::zero(),
            _ => Self::wrap(Node::Ln(self.clone())),
        }
    }

    pub fn abs(&self) -> Expr {
        match self.as_constant() {
            Some(c) => Expr::constant(c.abs()),
            None => Self::wrap(Node::Abs(self.clone())),
        }
    }

    pub fn sin(&self) -> Expr {
        match self.as_constant() {
            Some(0.0) => Expr::zero(),
            _ => Self::wrap(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Expr {
        match self.as_constant() {
            Some(0.0) => Expr::one(),
            _ => Self::wrap(Node::Cos(self.clone())),
        }
    }

    /// Children of this node, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Constant(_) | Node::Parameter(_) | Node::Variable(_) => Vec::new(),
            Node::Sum(a, b) | Node::Product(a, b) | Node::Quotient(a, b) | Node::Power(a, b) => {
                vec![a, b]
            }
            Node::Negate(a)
            | Node::Exp(a)
            | Node::Ln(a)
            | Node::Abs(a)
            | Node::Sin(a)
            | Node::Cos(a) => vec![a],
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self.node() {
            Node::Variable(v) => &**v == name,
            _ => self.children().into_iter().any(|c| c.contains_var(name)),
        }
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect(&mut out, &mut BTreeSet::new());
        out
    }

    pub fn parameters(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect(&self, vars: &mut BTreeSet<Symbol>, params: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Variable(v) => {
                vars.insert(v.clone());
            }
            Node::Parameter(p) => {
                params.insert(p.clone());
            }
            _ => self
                .children()
                .into_iter()
                .for_each(|c| c.collect(vars, params)),
        }
    }

    /// Number of nodes counted as a tree (shared subtrees are counted every time).
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    /// True when the expression is a polynomial in its variables with constant
    /// coefficients (parameters count as constants).
    pub fn is_polynomial(&self) -> bool {
        match self.node() {
            Node::Constant(_) | Node::Parameter(_) | Node::Variable(_) => true,
            Node::Sum(a, b) | Node::Product(a, b) => a.is_polynomial() && b.is_polynomial(),
            Node::Negate(a) => a.is_polynomial(),
            Node::Quotient(a, b) => a.is_polynomial() && b.variables().is_empty(),
            Node::Power(a, b) => {
                a.is_polynomial()
                    && matches!(b.as_constant(), Some(e) if e >= 0.0 && e.fract() == 0.0)
            }
            _ => self.variables().is_empty(),
        }
    }

    /// Replaces variables by expressions, rebuilding through the smart constructors.
    pub fn substitute_vars(&self, lookup: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        self.rebuild(&|node| match node {
            Node::Variable(v) => lookup(v),
            _ => None,
        })
    }

    /// Replaces parameters by expressions (typically constants).
    pub fn substitute_params(&self, lookup: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        self.rebuild(&|node| match node {
            Node::Parameter(p) => lookup(p),
            _ => None,
        })
    }

    /// Binds parameters to numeric values; unknown parameters are left symbolic.
    pub fn bind_params(&self, values: &[(Symbol, f64)]) -> Expr {
        self.substitute_params(&|name| {
            values
                .iter()
                .find(|(n, _)| &**n == name)
                .map(|(_, v)| Expr::constant(*v))
        })
    }

    fn rebuild(&self, leaf: &dyn Fn(&Node) -> Option<Expr>) -> Expr {
        if let Some(replacement) = leaf(self.node()) {
            return replacement;
        }
        match self.node() {
            Node::Constant(_) | Node::Parameter(_) | Node::Variable(_) => self.clone(),
            Node::Sum(a, b) => a.rebuild(leaf).add(&b.rebuild(leaf)),
            Node::Product(a, b) => a.rebuild(leaf).mul(&b.rebuild(leaf)),
            Node::Quotient(a, b) => a.rebuild(leaf).div(&b.rebuild(leaf)),
            Node::Power(a, b) => a.rebuild(leaf).pow(&b.rebuild(leaf)),
            Node::Negate(a) => a.rebuild(leaf).neg(),
            Node::Exp(a) => a.rebuild(leaf).exp(),
            Node::Ln(a) => a.rebuild(leaf).ln(),
            Node::Abs(a) => a.rebuild(leaf).abs(),
            Node::Sin(a) => a.rebuild(leaf).sin(),
            Node::Cos(a) => a.rebuild(leaf).cos(),
        }
    }
}

// Printing. Output is valid input for `parse` and re-parses to an expression
// with identical evaluation.

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Sum(..) => PREC_SUM,
        Node::Product(..) | Node::Quotient(..) => PREC_PRODUCT,
        Node::Negate(_) => PREC_UNARY,
        Node::Constant(c) if *c < 0.0 || c.is_sign_negative() => PREC_UNARY,
        Node::Power(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Constant(c) => {
                if c.is_finite() {
                    write!(f, "{c:?}")
                } else {
                    // not representable in the grammar; printed for diagnostics only
                    write!(f, "{c}")
                }
            }
            Node::Parameter(p) => f.write_str(p),
            Node::Variable(v) => f.write_str(v),
            Node::Sum(a, b) => {
                write_wrapped(f, a, PREC_SUM)?;
                match b.node() {
                    Node::Negate(inner) => {
                        f.write_str(" - ")?;
                        write_wrapped(f, inner, PREC_PRODUCT)
                    }
                    _ => {
                        f.write_str(" + ")?;
                        write_wrapped(f, b, PREC_PRODUCT)
                    }
                }
            }
            Node::Product(a, b) => {
                write_wrapped(f, a, PREC_PRODUCT)?;
                f.write_str("*")?;
                write_wrapped(f, b, PREC_UNARY.max(PREC_PRODUCT + 1))
            }
            Node::Quotient(a, b) => {
                write_wrapped(f, a, PREC_PRODUCT)?;
                f.write_str("/")?;
                write_wrapped(f, b, PREC_UNARY.max(PREC_PRODUCT + 1))
            }
            Node::Power(a, b) => {
                // base binds tighter than `^`; the exponent is a factor (right-assoc)
                write_wrapped(f, a, PREC_ATOM)?;
                f.write_str("^")?;
                write_wrapped(f, b, PREC_POWER)
            }
            Node::Negate(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, PREC_POWER)
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Ln(a) => write!(f, "ln({a})"),
            Node::Abs(a) => write!(f, "abs({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_fold_identities() {
        let x = Expr::var("x1");
        assert!(x.mul(&Expr::zero()).is_zero());
        assert_eq!(x.add(&Expr::zero()).to_string(), "x1");
        assert_eq!(Expr::one().mul(&x).to_string(), "x1");
        assert_eq!(x.neg().neg().to_string(), "x1");
        assert_eq!(
            Expr::constant(2.0).add(&Expr::constant(3.0)).as_constant(),
            Some(5.0)
        );
        assert_eq!(x.pow(&Expr::one()).to_string(), "x1");
        assert!(x.pow(&Expr::zero()).is_one());
    }

    #[test]
    fn printing_parenthesizes_by_precedence() {
        let x = Expr::var("x1");
        let p = Expr::var("p1");
        let e = x.add(&p).mul(&x.sub(&p));
        assert_eq!(e.to_string(), "(x1 + p1)*(x1 - p1)");
        assert_eq!(x.neg().powi(2).to_string(), "(-x1)^2.0");
        assert_eq!(x.powi(2).neg().to_string(), "-x1^2.0");
        assert_eq!(x.div(&p.mul(&x)).to_string(), "x1/(p1*x1)");
        assert_eq!(x.sub(&p.sub(&x)).to_string(), "x1 - (p1 - x1)");
    }

    #[test]
    fn free_symbols() {
        let e = parse_with("a*x2 + exp(-p1)", &ParseContext::with_params(["a"])).unwrap();
        let vars: Vec<_> = e.variables().iter().map(|s| s.to_string()).collect();
        assert_eq!(vars, ["p1", "x2"]);
        assert_eq!(e.parameters().len(), 1);
    }

    #[test]
    fn polynomial_detection() {
        assert!(parse("-x2*p1 - x3*p2").unwrap().is_polynomial());
        assert!(parse("x2^2/2*p1").unwrap().is_polynomial());
        assert!(!parse("x2*ln(abs(x2))").unwrap().is_polynomial());
        assert!(!parse("1/x2").unwrap().is_polynomial());
    }
}
