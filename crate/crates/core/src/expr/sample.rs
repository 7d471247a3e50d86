//! Seeded random sampling of phase-space points and residual-based equality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{EvalError, Expr, Point, Symbol};

/// Attempts per sample before the domain is declared empty.
pub const MAX_ATTEMPTS: usize = 1000;

/// Union of closed intervals; sampled uniformly by total length.
#[derive(Debug, Clone, PartialEq)]
pub struct VarRange {
    pieces: Vec<(f64, f64)>,
}

impl VarRange {
    pub fn interval(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self {
            pieces: vec![(lo, hi)],
        }
    }

    /// `[-2, -0.1] ∪ [0.1, 2]`: keeps every coordinate away from zero.
    pub fn punctured() -> Self {
        Self {
            pieces: vec![(-2.0, -0.1), (0.1, 2.0)],
        }
    }

    pub fn positive() -> Self {
        Self::interval(0.1, 2.0)
    }

    pub fn negative() -> Self {
        Self::interval(-2.0, -0.1)
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    /// Midpoint of the widest piece.
    pub fn center(&self) -> f64 {
        let (lo, hi) = self.pieces.iter().copied().fold((0.0, 0.0), |best, p| {
            if p.1 - p.0 > best.1 - best.0 {
                p
            } else {
                best
            }
        });
        0.5 * (lo + hi)
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let total: f64 = self.pieces.iter().map(|(a, b)| b - a).sum();
        let mut u = rng.random::<f64>() * total;
        for &(a, b) in &self.pieces {
            let w = b - a;
            if u <= w {
                return a + u;
            }
            u -= w;
        }
        let (a, b) = *self.pieces.last().expect("non-empty range");
        a + (b - a) * 0.5
    }
}

impl Default for VarRange {
    fn default() -> Self {
        Self::punctured()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuardRule {
    /// `|g| >= min`
    AwayFromZero(f64),
    /// `g >= min`
    AtLeast(f64),
    /// `|g| <= max`
    Bounded(f64),
}

/// Constraint on a derived quantity that a sample point must satisfy.
#[derive(Debug, Clone)]
pub struct Guard {
    pub expr: Expr,
    pub rule: GuardRule,
}

impl Guard {
    fn admits(&self, pt: &Point) -> Result<bool, EvalError> {
        let v = match self.expr.evaluate(pt) {
            Ok(v) => v,
            Err(e) if e.is_domain() => return Ok(false),
            Err(e) => return Err(e),
        };
        Ok(match self.rule {
            GuardRule::AwayFromZero(min) => v.abs() >= min,
            GuardRule::AtLeast(min) => v >= min,
            GuardRule::Bounded(max) => v.abs() <= max,
        })
    }
}

/// Where sample points are drawn from: a range per variable, fixed parameter
/// values, and guards on derived quantities.
#[derive(Debug, Clone, Default)]
pub struct SamplingDomain {
    vars: Vec<(Symbol, VarRange)>,
    params: Vec<(Symbol, f64)>,
    guards: Vec<Guard>,
}

impl SamplingDomain {
    /// Every listed variable on the default punctured range.
    pub fn new<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Symbol>,
    {
        Self {
            vars: vars
                .into_iter()
                .map(|v| (v.into(), VarRange::default()))
                .collect(),
            params: Vec::new(),
            guards: Vec::new(),
        }
    }

    /// Default domain over the free variables of the given expressions.
    pub fn covering(exprs: &[&Expr]) -> Self {
        let mut names = std::collections::BTreeSet::new();
        for e in exprs {
            names.extend(e.variables());
        }
        Self::new(names)
    }

    pub fn with_range(mut self, var: &str, range: VarRange) -> Self {
        self.set_range(var, range);
        self
    }

    pub fn set_range(&mut self, var: &str, range: VarRange) {
        match self.vars.iter_mut().find(|(n, _)| &**n == var) {
            Some(slot) => slot.1 = range,
            None => self.vars.push((var.into(), range)),
        }
    }

    pub fn with_param(mut self, name: impl Into<Symbol>, value: f64) -> Self {
        self.params.push((name.into(), value));
        self
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn add_guard(&mut self, guard: Guard) {
        self.guards.push(guard);
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, &VarRange)> {
        self.vars.iter().map(|(n, r)| (&**n, r))
    }

    pub fn var_names(&self) -> Vec<Symbol> {
        self.vars.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    fn draw(&self, rng: &mut impl Rng) -> Point {
        let mut pt = Point::new();
        for (name, range) in &self.vars {
            pt.set_var(name.clone(), range.sample(rng));
        }
        for (name, value) in &self.params {
            pt.set_param(name.clone(), *value);
        }
        pt
    }

    /// Draws a point at which every guard holds and `accept` succeeds. Domain
    /// failures inside `accept` cause a redraw; other errors propagate.
    pub fn sample_where<T>(
        &self,
        rng: &mut impl Rng,
        mut accept: impl FnMut(&Point) -> Result<T, EvalError>,
    ) -> Result<(Point, T), SampleError> {
        let mut last = None;
        for _ in 0..MAX_ATTEMPTS {
            let pt = self.draw(rng);
            let mut ok = true;
            for g in &self.guards {
                if !g.admits(&pt).map_err(SampleError::Eval)? {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            match accept(&pt) {
                Ok(v) => return Ok((pt, v)),
                Err(e) if e.is_domain() => last = Some(e),
                Err(e) => return Err(SampleError::Eval(e)),
            }
        }
        Err(SampleError::EmptyDomain {
            attempts: MAX_ATTEMPTS,
            last: last.map(|e| e.to_string()),
        })
    }

    /// Convenience: a point at which every expression evaluates.
    pub fn sample_valid(
        &self,
        rng: &mut impl Rng,
        exprs: &[&Expr],
    ) -> Result<(Point, Vec<f64>), SampleError> {
        self.sample_where(rng, |pt| {
            exprs
                .iter()
                .map(|e| e.evaluate(pt))
                .collect::<Result<Vec<_>, _>>()
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SampleError {
    #[error("no valid sample point found in {attempts} attempts (last failure: {})", last.as_deref().unwrap_or("guards rejected every point"))]
    EmptyDomain {
        attempts: usize,
        last: Option<String>,
    },
    #[error(transparent)]
    Eval(EvalError),
}

/// Deterministic generator for a check: the run seed mixed with a stream label.
pub fn rng_for(seed: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(stream.as_bytes()).rotate_left(17))
}

// Stable across platforms and toolchains, unlike std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Residual normalization shared by every identity check.
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub n: usize,
    pub tol: f64,
    pub seed: u64,
}

impl SampleOptions {
    pub fn new(n: usize, tol: f64, seed: u64) -> Self {
        Self { n, tol, seed }
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub equal: bool,
    pub max_residual: f64,
    pub worst_point: Option<Point>,
    pub samples: usize,
}

/// Decides `e1 == e2` numerically: true iff the relative residual is within
/// `tol` at every one of `n` sampled points.
///
/// The first `k` points drawn for `n` samples are the same points drawn for
/// `k` samples, so the reported maximum never decreases as `n` grows.
pub fn equal_on_samples(
    e1: &Expr,
    e2: &Expr,
    dom: &SamplingDomain,
    opts: SampleOptions,
) -> Result<Comparison, SampleError> {
    equal_on_samples_in_stream(e1, e2, dom, opts, "equal_on_samples")
}

pub fn equal_on_samples_in_stream(
    e1: &Expr,
    e2: &Expr,
    dom: &SamplingDomain,
    opts: SampleOptions,
    stream: &str,
) -> Result<Comparison, SampleError> {
    assert!(opts.n >= 1, "at least one sample is required");
    let mut rng = rng_for(opts.seed, stream);
    let mut worst = (-1.0f64, None);
    for _ in 0..opts.n {
        let (pt, vals) = dom.sample_valid(&mut rng, &[e1, e2])?;
        let r = relative_residual(vals[0], vals[1]);
        if r > worst.0 {
            worst = (r, Some(pt));
        }
    }
    Ok(Comparison {
        equal: worst.0 <= opts.tol,
        max_residual: worst.0,
        worst_point: worst.1,
        samples: opts.n,
    })
}
