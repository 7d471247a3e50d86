//! Random expression generators for property tests and benchmarks.
//!
//! Generated trees stay regular on the default sampling range: denominators
//! are bounded away from zero and logarithm arguments are positive.

use rand::Rng;

use super::Expr;

fn leaf(rng: &mut impl Rng, vars: &[&str]) -> Expr {
    if rng.random_bool(0.7) {
        Expr::var(vars[rng.random_range(0..vars.len())])
    } else {
        let c: f64 = rng.random_range(-2.0..2.0);
        Expr::constant((c * 4.0).round() / 4.0)
    }
}

/// A random smooth expression over `vars` with at most `depth` levels of
/// operators.
pub fn random_expr(rng: &mut impl Rng, vars: &[&str], depth: usize) -> Expr {
    assert!(!vars.is_empty());
    if depth == 0 || rng.random_bool(0.2) {
        return leaf(rng, vars);
    }
    let sub = |rng: &mut _| random_expr(rng, vars, depth - 1);
    match rng.random_range(0..10) {
        0 | 1 => sub(rng).add(&sub(rng)),
        2 => sub(rng).sub(&sub(rng)),
        3 | 4 => sub(rng).mul(&sub(rng)),
        5 => {
            // positive denominator
            let d = sub(rng);
            sub(rng).div(&Expr::constant(1.0).add(&d.powi(2)))
        }
        6 => sub(rng).sin().exp(),
        7 => Expr::constant(1.0).add(&sub(rng).powi(2)).ln(),
        8 => sub(rng).cos(),
        _ => sub(rng).powi(rng.random_range(2..4)),
    }
}

/// A random polynomial over `vars`: a sum of `terms` monomials of degree at
/// most `max_degree` with small integer coefficients.
pub fn random_polynomial(rng: &mut impl Rng, vars: &[&str], terms: usize, max_degree: u32) -> Expr {
    let mut acc = Expr::zero();
    for _ in 0..terms {
        let mut m = Expr::constant(f64::from(rng.random_range(-3i32..=3)));
        for _ in 0..rng.random_range(0..=max_degree) {
            m = m.mul(&Expr::var(vars[rng.random_range(0..vars.len())]));
        }
        acc = acc.add(&m);
    }
    acc
}
