//! Four-dimensional real Lie algebras given by structure constants.
//!
//! Each family stores its nonzero brackets `[e_i, e_j] = f_ij^k e_k` for `i < j`
//! only; the lower triangle is produced by antisymmetry in the accessor, so the
//! two halves can never disagree.

use std::fmt;

use thiserror::Error;

use crate::expr::{parse_with, Expr, ParseContext};
use crate::params::{Constraint, Params};

pub const DIM: usize = 4;

struct Family {
    base: &'static str,
    formal: &'static [&'static str],
    /// `(i, j, [c1, c2, c3, c4])`, 1-based, `i < j`: `[e_i, e_j] = Σ c_k e_k`.
    brackets: &'static [(usize, usize, [&'static str; 4])],
    constraints: &'static [&'static str],
}

const FAMILIES: &[Family] = &[
    Family {
        base: "A4_1",
        formal: &[],
        brackets: &[(2, 4, ["1", "0", "0", "0"]), (3, 4, ["0", "1", "0", "0"])],
        constraints: &[],
    },
    Family {
        base: "A4_2",
        formal: &["b"],
        brackets: &[
            (1, 4, ["b", "0", "0", "0"]),
            (2, 4, ["0", "1", "0", "0"]),
            (3, 4, ["0", "1", "1", "0"]),
        ],
        constraints: &[],
    },
    Family {
        base: "A4_3",
        formal: &[],
        brackets: &[(1, 4, ["1", "0", "0", "0"]), (3, 4, ["0", "1", "0", "0"])],
        constraints: &[],
    },
    Family {
        base: "A4_4",
        formal: &[],
        brackets: &[
            (1, 4, ["1", "0", "0", "0"]),
            (2, 4, ["1", "1", "0", "0"]),
            (3, 4, ["0", "1", "1", "0"]),
        ],
        constraints: &[],
    },
    Family {
        base: "A4_5",
        formal: &["a", "b", "c"],
        brackets: &[
            (1, 4, ["a", "0", "0", "0"]),
            (2, 4, ["0", "b", "0", "0"]),
            (3, 4, ["0", "0", "c", "0"]),
        ],
        constraints: &["a*b*c != 0"],
    },
    Family {
        base: "A4_6",
        formal: &["a", "b"],
        brackets: &[
            (1, 4, ["a", "0", "0", "0"]),
            (2, 4, ["0", "b", "-1", "0"]),
            (3, 4, ["0", "1", "b", "0"]),
        ],
        constraints: &["a != 0", "b >= 0"],
    },
    Family {
        base: "A4_7",
        formal: &[],
        brackets: &[
            (1, 4, ["2", "0", "0", "0"]),
            (2, 3, ["1", "0", "0", "0"]),
            (2, 4, ["0", "1", "0", "0"]),
            (3, 4, ["0", "1", "1", "0"]),
        ],
        constraints: &[],
    },
    Family {
        base: "A4_9",
        formal: &["b"],
        brackets: &[
            (1, 4, ["1+b", "0", "0", "0"]),
            (2, 3, ["1", "0", "0", "0"]),
            (2, 4, ["0", "1", "0", "0"]),
            (3, 4, ["0", "0", "b", "0"]),
        ],
        constraints: &["abs(b) <= 1"],
    },
    Family {
        base: "A4_12",
        formal: &[],
        brackets: &[
            (1, 3, ["1", "0", "0", "0"]),
            (1, 4, ["0", "-1", "0", "0"]),
            (2, 3, ["0", "1", "0", "0"]),
            (2, 4, ["1", "0", "0", "0"]),
        ],
        constraints: &[],
    },
];

/// Canonical names of the catalog's algebra families.
pub const ALGEBRA_NAMES: [&str; 9] = [
    "A4_1",
    "A4_2^b",
    "A4_3",
    "A4_4",
    "A4_5^{a,b,c}",
    "A4_6^{a,b}",
    "A4_7",
    "A4_9^b",
    "A4_12",
];

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("unknown algebra `{0}`")]
    Unknown(String),
    #[error("algebra `{name}` expects {expected} superscript parameter(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("algebra `{name}`: parameter `{param}` is not assigned")]
    MissingParam { name: String, param: String },
    #[error(
        "algebra `{name}`: inadmissible parameters ({params}), constraint `{constraint}` violated"
    )]
    Inadmissible {
        name: String,
        constraint: String,
        params: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Binding {
    Value(f64),
    Param(String),
}

/// Splits `A4_5^{a,b,1}` into the family base and its superscript bindings.
fn split_name(name: &str) -> (&str, Option<Vec<Binding>>) {
    let Some((base, sup)) = name.split_once('^') else {
        return (name.trim(), None);
    };
    let sup = sup.trim();
    let sup = sup
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .unwrap_or(sup);
    let bindings = sup
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) => Binding::Value(v),
                Err(_) => Binding::Param(s.to_string()),
            }
        })
        .collect();
    (base.trim(), Some(bindings))
}

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    name: String,
    family: &'static str,
    params: Params,
    /// `(i, j, coefficients)`, 0-based with `i < j`, numeric after binding.
    brackets: Vec<(usize, usize, [Expr; DIM])>,
}

/// Resolves an algebra by name, binding its family parameters either from the
/// superscript (`A4_9^1`) or from `params` (`A4_9^b` with `b` assigned).
pub fn get_algebra(name: &str, params: &Params) -> Result<LieAlgebra, AlgebraError> {
    let (base, sup) = split_name(name);
    let family = FAMILIES
        .iter()
        .find(|f| f.base == base)
        .ok_or_else(|| AlgebraError::Unknown(name.to_string()))?;
    let bindings = match sup {
        Some(b) => {
            if b.len() != family.formal.len() {
                return Err(AlgebraError::Arity {
                    name: name.to_string(),
                    expected: family.formal.len(),
                    got: b.len(),
                });
            }
            b
        }
        None => family
            .formal
            .iter()
            .map(|p| Binding::Param(p.to_string()))
            .collect(),
    };
    let mut bound = Params::new();
    for (formal, binding) in family.formal.iter().zip(&bindings) {
        let v = match binding {
            Binding::Value(v) => *v,
            Binding::Param(p) => params.get(p).ok_or_else(|| AlgebraError::MissingParam {
                name: name.to_string(),
                param: p.clone(),
            })?,
        };
        bound.set(formal, v);
    }
    let ctx = ParseContext::with_params(family.formal.iter().copied());
    for text in family.constraints {
        let c = Constraint::parse(text, &ctx).expect("family constraint parses");
        if !c.holds(&bound).unwrap_or(false) {
            return Err(AlgebraError::Inadmissible {
                name: name.to_string(),
                constraint: text.to_string(),
                params: bound.to_string(),
            });
        }
    }
    let values = bound.to_bindings();
    let brackets = family
        .brackets
        .iter()
        .map(|(i, j, cs)| {
            let coeffs = cs.map(|c| {
                parse_with(c, &ctx)
                    .expect("structure constant parses")
                    .bind_params(&values)
            });
            (i - 1, j - 1, coeffs)
        })
        .collect();
    Ok(LieAlgebra {
        name: name.to_string(),
        family: family.base,
        params: bound,
        brackets,
    })
}

impl LieAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &str {
        self.family
    }

    /// Values of the family's formal parameters.
    pub fn params(&self) -> &Params {
        &self.params
    }

    /// `f_ij^k` (0-based) as an expression; antisymmetric in `(i, j)`.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Expr {
        if i == j {
            return Expr::zero();
        }
        let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        self.brackets
            .iter()
            .find(|(a, b, _)| *a == lo && *b == hi)
            .map(|(_, _, cs)| cs[k].mul(&Expr::constant(sign)))
            .unwrap_or_else(Expr::zero)
    }

    /// Numeric `f_ij^k` (0-based).
    pub fn f(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constant(i, j, k)
            .evaluate(&self.params.to_point())
            .expect("structure constants are bound")
    }

    /// Coefficients of `[e_i, e_j]` in the basis, 0-based.
    pub fn bracket(&self, i: usize, j: usize) -> [f64; DIM] {
        std::array::from_fn(|k| self.f(i, j, k))
    }

    pub fn structure_constants(&self) -> [[[f64; DIM]; DIM]; DIM] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.bracket(i, j)))
    }

    /// Nonzero brackets `(i, j, coefficients)` with `i < j`, 0-based.
    pub fn nonzero_brackets(&self) -> Vec<(usize, usize, [f64; DIM])> {
        (0..DIM)
            .flat_map(|i| ((i + 1)..DIM).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.bracket(i, j)))
            .filter(|(_, _, c)| c.iter().any(|v| *v != 0.0))
            .collect()
    }
}

impl fmt::Display for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (n, (i, j, c)) in self.nonzero_brackets().into_iter().enumerate() {
            f.write_str(if n == 0 { ": " } else { ", " })?;
            write!(f, "[e{},e{}]=", i + 1, j + 1)?;
            let mut first = true;
            for (k, v) in c.iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                if !first {
                    f.write_str(if *v < 0.0 { "-" } else { "+" })?;
                } else if *v < 0.0 {
                    f.write_str("-")?;
                }
                if v.abs() != 1.0 {
                    write!(f, "{}", v.abs())?;
                }
                write!(f, "e{}", k + 1)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Largest violation of the Jacobi identity over all index tuples.
pub fn jacobi_defect(alg: &LieAlgebra) -> f64 {
    let f = alg.structure_constants();
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    let s: f64 = (0..DIM)
                        .map(|m| {
                            f[i][j][m] * f[m][k][l]
                                + f[j][k][m] * f[m][i][l]
                                + f[k][i][m] * f[m][j][l]
                        })
                        .sum();
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a41_constants() {
        let alg = get_algebra("A4_1", &Params::new()).unwrap();
        let nz = alg.nonzero_brackets();
        assert_eq!(nz.len(), 2);
        // f_24^1 = 1 and f_34^2 = 1
        assert_eq!(alg.f(1, 3, 0), 1.0);
        assert_eq!(alg.f(2, 3, 1), 1.0);
        assert_eq!(alg.f(3, 1, 0), -1.0);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert_eq!(alg.f(i, j, k), -alg.f(j, i, k));
                }
            }
        }
        assert_eq!(jacobi_defect(&alg), 0.0);
    }

    #[test]
    fn a49_at_b_equal_one() {
        let alg = get_algebra("A4_9^b", &Params::new().with("b", 1.0)).unwrap();
        assert_eq!(alg.f(1, 2, 0), 1.0);
        assert_eq!(alg.f(0, 3, 0), 2.0);
        assert_eq!(alg.f(1, 3, 1), 1.0);
        assert_eq!(alg.f(2, 3, 2), 1.0);
        let same = get_algebra("A4_9^1", &Params::new()).unwrap();
        assert_eq!(same.structure_constants(), alg.structure_constants());
    }

    #[test]
    fn inadmissible_parameters() {
        let err = get_algebra(
            "A4_5^{a,b,c}",
            &Params::new().with("a", 0.0).with("b", 0.5).with("c", 1.0),
        )
        .unwrap_err();
        assert!(
            matches!(err, AlgebraError::Inadmissible { ref constraint, .. } if constraint == "a*b*c != 0")
        );
        assert!(get_algebra("A4_9^2", &Params::new()).is_err());
        assert!(matches!(
            get_algebra("A4_8", &Params::new()),
            Err(AlgebraError::Unknown(_))
        ));
        assert!(matches!(
            get_algebra("A4_2^b", &Params::new()),
            Err(AlgebraError::MissingParam { .. })
        ));
        assert!(matches!(
            get_algebra("A4_6^{a}", &Params::new()),
            Err(AlgebraError::Arity { .. })
        ));
    }

    #[test]
    fn superscript_bindings() {
        let alg = get_algebra(
            "A4_5^{a,b,1}",
            &Params::new().with("a", -1.0).with("b", 0.5),
        )
        .unwrap();
        assert_eq!(alg.bracket(2, 3), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(alg.bracket(0, 3), [-1.0, 0.0, 0.0, 0.0]);
        let alg = get_algebra("A4_2^-1", &Params::new()).unwrap();
        assert_eq!(alg.bracket(0, 3), [-1.0, 0.0, 0.0, 0.0]);
        let alg = get_algebra("A4_6^{a,0}", &Params::new().with("a", 2.0)).unwrap();
        assert_eq!(alg.bracket(1, 3), [0.0, 0.0, -1.0, 0.0]);
        assert_eq!(
            alg.to_string(),
            "A4_6^{a,0}: [e1,e4]=2e1, [e2,e4]=-e3, [e3,e4]=e2"
        );
    }
}
