use super::{Expr, Node};

impl Expr {
    /// Exact partial derivative with respect to the variable `v`.
    ///
    /// `d|u| = (u/|u|) du`, so the sign is resolved at evaluation time and the
    /// derivative is undefined where `u = 0`.
    pub fn differentiate(&self, v: &str) -> Expr {
        if !self.contains_var(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Constant(_) | Node::Parameter(_) => Expr::zero(),
            Node::Variable(name) => {
                if &**name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(a, b) => a.differentiate(v).add(&b.differentiate(v)),
            Node::Product(a, b) => a.differentiate(v).mul(b).add(&a.mul(&b.differentiate(v))),
            Node::Quotient(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
                }
            }
            Node::Power(base, exponent) => {
                let db = base.differentiate(v);
                if !exponent.contains_var(v) {
                    let reduced = exponent.sub(&Expr::one());
                    exponent.mul(&base.pow(&reduced)).mul(&db)
                } else {
                    let de = exponent.differentiate(v);
                    let log_term = de.mul(&base.ln());
                    let base_term = exponent.mul(&db).div(base);
                    self.mul(&log_term.add(&base_term))
                }
            }
            Node::Negate(a) => a.differentiate(v).neg(),
            Node::Exp(a) => self.mul(&a.differentiate(v)),
            Node::Ln(a) => a.differentiate(v).div(a),
            Node::Abs(a) => a.div(self).mul(&a.differentiate(v)),
            Node::Sin(a) => a.cos().mul(&a.differentiate(v)),
            Node::Cos(a) => a.sin().neg().mul(&a.differentiate(v)),
        }
    }

    /// Gradient with respect to `vars`, in order.
    pub fn gradient<S: AsRef<str>>(&self, vars: &[S]) -> Vec<Expr> {
        vars.iter()
            .map(|v| self.differentiate(v.as_ref()))
            .collect()
    }
}
