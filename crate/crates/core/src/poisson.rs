//! Poisson brackets of expressions: canonical on `R^{2N}` and general
//! bivector structures on group coordinates.
//!
//! The canonical convention is
//! `{F,G} = Σ_a (∂F/∂x_a ∂G/∂p_a − ∂F/∂p_a ∂G/∂x_a)`.

use thiserror::Error;

use crate::expr::sample::{rng_for, SampleError, SamplingDomain};
use crate::expr::{Expr, Point, Symbol};

/// `N` degrees of freedom with coordinates `x1..xN` and momenta `p1..pN`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalStructure {
    xs: Vec<Symbol>,
    ps: Vec<Symbol>,
}

impl CanonicalStructure {
    pub fn new(n: usize) -> Self {
        assert!(
            (1..=9).contains(&n),
            "1 to 9 degrees of freedom are supported"
        );
        Self {
            xs: (1..=n).map(|a| Symbol::from(format!("x{a}"))).collect(),
            ps: (1..=n).map(|a| Symbol::from(format!("p{a}"))).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn positions(&self) -> &[Symbol] {
        &self.xs
    }

    pub fn momenta(&self) -> &[Symbol] {
        &self.ps
    }

    /// `x1..xN, p1..pN`.
    pub fn coordinates(&self) -> Vec<Symbol> {
        self.xs.iter().chain(&self.ps).cloned().collect()
    }
}

pub fn canonical_bracket(f: &Expr, g: &Expr, s: &CanonicalStructure) -> Expr {
    let mut acc = Expr::zero();
    for (x, p) in s.xs.iter().zip(&s.ps) {
        let term = f
            .differentiate(x)
            .mul(&g.differentiate(p))
            .sub(&f.differentiate(p).mul(&g.differentiate(x)));
        acc = acc.add(&term);
    }
    acc
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BivectorError {
    #[error("bivector index ({mu},{nu}) out of range for dimension {dim}")]
    OutOfRange { mu: usize, nu: usize, dim: usize },
    #[error("bivector has a nonzero diagonal entry at ({0},{0})")]
    Diagonal(usize),
    #[error("bivector entries ({mu},{nu}) and ({nu},{mu}) are not antisymmetric")]
    NotAntisymmetric { mu: usize, nu: usize },
}

/// Antisymmetric coefficient field `P^{μν}(x)`; only `μ < ν` is stored.
#[derive(Debug, Clone)]
pub struct PoissonBivector {
    coords: Vec<Symbol>,
    upper: Vec<Vec<Expr>>,
}

impl PoissonBivector {
    pub fn zero(coords: Vec<Symbol>) -> Self {
        let n = coords.len();
        Self {
            coords,
            upper: (0..n).map(|i| vec![Expr::zero(); n - i - 1]).collect(),
        }
    }

    /// Builds from `(μ, ν, P^{μν})` entries with 0-based indices in either
    /// orientation. When both `(μ,ν)` and `(ν,μ)` are given they must be
    /// negatives of each other.
    pub fn from_entries(
        coords: Vec<Symbol>,
        entries: &[(usize, usize, Expr)],
    ) -> Result<Self, BivectorError> {
        let n = coords.len();
        let mut p = Self::zero(coords);
        let mut seen: Vec<Option<Expr>> = vec![None; n * n];
        for (mu, nu, e) in entries {
            let (mu, nu) = (*mu, *nu);
            if mu >= n || nu >= n {
                return Err(BivectorError::OutOfRange { mu, nu, dim: n });
            }
            if mu == nu {
                if e.is_zero() {
                    continue;
                }
                return Err(BivectorError::Diagonal(mu));
            }
            let oriented = if mu < nu { e.clone() } else { e.neg() };
            let (lo, hi) = (mu.min(nu), mu.max(nu));
            if let Some(prev) = &seen[lo * n + hi] {
                if !same_function(prev, &oriented, &p.coords) {
                    return Err(BivectorError::NotAntisymmetric { mu: lo, nu: hi });
                }
                continue;
            }
            seen[lo * n + hi] = Some(oriented.clone());
            p.upper[lo][hi - lo - 1] = oriented;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }

    /// `P^{μν}` (0-based).
    pub fn entry(&self, mu: usize, nu: usize) -> Expr {
        match mu.cmp(&nu) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.upper[mu][nu - mu - 1].clone(),
            std::cmp::Ordering::Greater => self.upper[nu][mu - nu - 1].neg(),
        }
    }

    /// Nonzero entries with `μ < ν`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, Expr)> {
        let mut out = Vec::new();
        for mu in 0..self.dim() {
            for nu in (mu + 1)..self.dim() {
                let e = self.entry(mu, nu);
                if !e.is_zero() {
                    out.push((mu, nu, e));
                }
            }
        }
        out
    }

    pub fn map_entries(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        Self {
            coords: self.coords.clone(),
            upper: self
                .upper
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        }
    }

    /// Cyclic Jacobi sum for the triple `(μ, ν, ρ)` as an expression.
    pub fn jacobi_expr(&self, mu: usize, nu: usize, rho: usize) -> Expr {
        let mut acc = Expr::zero();
        for (s, x) in self.coords.iter().enumerate() {
            for (a, b, c) in [(mu, nu, rho), (nu, rho, mu), (rho, mu, nu)] {
                let t = self.entry(a, s).mul(&self.entry(b, c).differentiate(x));
                acc = acc.add(&t);
            }
        }
        acc
    }
}

// Both sides parameter-free: compare at a handful of points; otherwise fall
// back to comparing printed forms.
fn same_function(a: &Expr, b: &Expr, coords: &[Symbol]) -> bool {
    if !a.parameters().is_empty() || !b.parameters().is_empty() {
        return a.to_string() == b.to_string();
    }
    let dom = SamplingDomain::new(coords.iter().cloned());
    let mut rng = rng_for(0, "bivector-antisymmetry");
    let mut compared = 0;
    for _ in 0..16 {
        let Ok((_, v)) = dom.sample_valid(&mut rng, &[a, b]) else {
            break;
        };
        compared += 1;
        if crate::expr::sample::relative_residual(v[0], v[1]) > 1e-12 {
            return false;
        }
    }
    compared > 0 || a.to_string() == b.to_string()
}

/// `Σ_{μ<ν} P^{μν} (∂_μF ∂_νG − ∂_νF ∂_μG)`.
pub fn bivector_bracket(f: &Expr, g: &Expr, p: &PoissonBivector) -> Expr {
    let df = f.gradient(p.coords());
    let dg = g.gradient(p.coords());
    let mut acc = Expr::zero();
    for (mu, nu, pmn) in p.nonzero_entries() {
        let t = df[mu].mul(&dg[nu]).sub(&df[nu].mul(&dg[mu]));
        acc = acc.add(&pmn.mul(&t));
    }
    acc
}

/// Largest absolute cyclic Jacobi sum over all coordinate triples and
/// `n_samples` points of `dom`.
pub fn jacobi_defect_bivector(
    p: &PoissonBivector,
    dom: &SamplingDomain,
    n_samples: usize,
    seed: u64,
) -> Result<f64, SampleError> {
    let n = p.dim();
    let mut sums = Vec::new();
    for mu in 0..n {
        for nu in (mu + 1)..n {
            for rho in (nu + 1)..n {
                sums.push(p.jacobi_expr(mu, nu, rho));
            }
        }
    }
    if sums.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&Expr> = sums.iter().collect();
    let mut rng = rng_for(seed, "bivector-jacobi");
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let (_, vals) = dom.sample_valid(&mut rng, &refs)?;
        worst = vals.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    Ok(worst)
}

/// Either bracket, so checks can be written once.
#[derive(Debug, Clone)]
pub enum PoissonStructure {
    Canonical(CanonicalStructure),
    Bivector(PoissonBivector),
}

impl PoissonStructure {
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        match self {
            Self::Canonical(s) => canonical_bracket(f, g, s),
            Self::Bivector(p) => bivector_bracket(f, g, p),
        }
    }

    pub fn coordinates(&self) -> Vec<Symbol> {
        match self {
            Self::Canonical(s) => s.coordinates(),
            Self::Bivector(p) => p.coords().to_vec(),
        }
    }

    /// Hamiltonian vector field components `ż_μ = {z_μ, H}` in coordinate order.
    pub fn hamiltonian_vector_field(&self, h: &Expr) -> Vec<Expr> {
        self.coordinates()
            .iter()
            .map(|z| self.bracket(&Expr::var(z.clone()), h))
            .collect()
    }

    /// Evaluates `{F,G}` at a point without keeping the symbolic result.
    pub fn bracket_at(
        &self,
        f: &Expr,
        g: &Expr,
        pt: &Point,
    ) -> Result<f64, crate::expr::EvalError> {
        self.bracket(f, g).evaluate(pt)
    }
}
