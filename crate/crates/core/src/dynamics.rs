//! Hamiltonian flow on canonical and bivector phase spaces, with invariant
//! drift monitoring.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::catalog::System;
use crate::expr::{EvalError, Expr, Point, Symbol};

/// Fixed-point tolerance of the implicit midpoint stage equation.
pub const MIDPOINT_TOL: f64 = 1e-12;
/// Iteration cap of the implicit midpoint stage equation.
pub const MIDPOINT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    ImplicitMidpoint,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::ImplicitMidpoint => "implicit_midpoint",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown integration method `{0}` (expected rk4 or implicit_midpoint)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "implicit_midpoint" | "midpoint" => Ok(Self::ImplicitMidpoint),
            _ => Err(UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub system: String,
    pub coordinates: Vec<Symbol>,
    pub method: Method,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectories hold the initial state")
    }

    /// `t,<coordinates>` header, one row per state, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.coordinates {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, z) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{}", fmt17(*t));
            for v in z {
                let _ = write!(out, ",{}", fmt17(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Decimal with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("need dt > 0 and T >= dt (got dt={dt}, T={t_end})")]
    Step { dt: f64, t_end: f64 },
    #[error("initial point has {got} coordinates, the phase space has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("left the domain of the vector field at t={time}: {source}")]
    DomainExit {
        time: f64,
        source: EvalError,
        partial: Box<Trajectory>,
    },
    #[error("implicit midpoint stage did not converge at t={time} within {iterations} iterations")]
    NonConvergence {
        time: f64,
        iterations: usize,
        partial: Box<Trajectory>,
    },
}

impl DynamicsError {
    /// States computed before the failure, if any.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            Self::DomainExit { partial, .. } | Self::NonConvergence { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}

/// `ż_μ = {z_μ, H}` as expressions in the phase-space coordinates.
#[derive(Debug, Clone)]
pub struct VectorField {
    coords: Vec<Symbol>,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(sys: &System, h: &Expr) -> Self {
        Self {
            coords: sys.coordinates.clone(),
            components: sys.structure.hamiltonian_vector_field(h),
        }
    }

    pub fn of_system(sys: &System) -> Self {
        Self::new(sys, &sys.hamiltonian().expr)
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn coordinates(&self) -> &[Symbol] {
        &self.coords
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let pt = Point::from_vars(self.coords.iter().cloned().zip(z.iter().copied()));
        self.components.iter().map(|c| c.evaluate(&pt)).collect()
    }
}

/// Velocity of the system's default Hamiltonian flow at `z`.
pub fn vector_field(sys: &System, z: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    check_dim(sys.dim(), z)?;
    VectorField::of_system(sys)
        .eval(z)
        .map_err(|source| DynamicsError::DomainExit {
            time: 0.0,
            source,
            partial: Box::new(Trajectory {
                system: sys.id.clone(),
                coordinates: sys.coordinates.clone(),
                method: Method::Rk4,
                dt: 0.0,
                times: Vec::new(),
                states: Vec::new(),
            }),
        })
}

fn check_dim(expected: usize, z: &[f64]) -> Result<(), DynamicsError> {
    if z.len() == expected {
        Ok(())
    } else {
        Err(DynamicsError::Dimension {
            expected,
            got: z.len(),
        })
    }
}

fn axpy(z: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    z.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(f: &VectorField, z: &[f64], dt: f64) -> Result<Vec<f64>, EvalError> {
    let k1 = f.eval(z)?;
    let k2 = f.eval(&axpy(z, dt / 2.0, &k1))?;
    let k3 = f.eval(&axpy(z, dt / 2.0, &k2))?;
    let k4 = f.eval(&axpy(z, dt, &k3))?;
    Ok((0..z.len())
        .map(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

enum StepError {
    Eval(EvalError),
    NonConvergence,
}

fn midpoint_step(f: &VectorField, z: &[f64], dt: f64) -> Result<Vec<f64>, StepError> {
    let mut next = axpy(z, dt, &f.eval(z).map_err(StepError::Eval)?);
    for _ in 0..MIDPOINT_MAX_ITER {
        let mid: Vec<f64> = z.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let cand = axpy(z, dt, &f.eval(&mid).map_err(StepError::Eval)?);
        let delta = cand
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        next = cand;
        if delta <= MIDPOINT_TOL {
            return Ok(next);
        }
    }
    Err(StepError::NonConvergence)
}

/// Integrates a vector field on the grid `0, dt, …, ⌊T/dt⌋·dt`.
pub fn integrate_field(
    field: &VectorField,
    system: &str,
    z0: &[f64],
    dt: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory, DynamicsError> {
    if !(dt > 0.0 && t_end >= dt && dt.is_finite() && t_end.is_finite()) {
        return Err(DynamicsError::Step { dt, t_end });
    }
    check_dim(field.coords.len(), z0)?;
    // Tolerate T/dt landing a hair below an integer.
    let steps = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut traj = Trajectory {
        system: system.to_string(),
        coordinates: field.coords.clone(),
        method,
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
    };
    traj.times.push(0.0);
    traj.states.push(z0.to_vec());
    for i in 0..steps {
        let z = traj.last();
        let time = i as f64 * dt;
        let next = match method {
            Method::Rk4 => rk4_step(field, z, dt).map_err(StepError::Eval),
            Method::ImplicitMidpoint => midpoint_step(field, z, dt),
        };
        match next {
            Ok(n) if n.iter().all(|v| v.is_finite()) => {
                traj.states.push(n);
                traj.times.push((i + 1) as f64 * dt);
            }
            Ok(_) => {
                return Err(DynamicsError::DomainExit {
                    time,
                    source: EvalError::Domain {
                        expr: "state".to_string(),
                        reason: "non-finite state",
                    },
                    partial: Box::new(traj),
                })
            }
            Err(StepError::Eval(source)) => {
                return Err(DynamicsError::DomainExit {
                    time,
                    source,
                    partial: Box::new(traj),
                })
            }
            Err(StepError::NonConvergence) => {
                return Err(DynamicsError::NonConvergence {
                    time,
                    iterations: MIDPOINT_MAX_ITER,
                    partial: Box::new(traj),
                })
            }
        }
    }
    Ok(traj)
}

/// Flow of the system's default Hamiltonian.
pub fn integrate(
    sys: &System,
    z0: &[f64],
    dt: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory, DynamicsError> {
    integrate_field(&VectorField::of_system(sys), &sys.id, z0, dt, t_end, method)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub label: String,
    pub initial: f64,
    /// `max_t |I(t) − I(0)| / (1 + |I(0)|)`.
    pub max_drift: f64,
}

/// Relative drift of each invariant along a trajectory.
pub fn drift_report(
    traj: &Trajectory,
    invariants: &[(String, Expr)],
) -> Result<Vec<Drift>, EvalError> {
    let points: Vec<Point> = traj
        .states
        .iter()
        .map(|z| Point::from_vars(traj.coordinates.iter().cloned().zip(z.iter().copied())))
        .collect();
    invariants
        .iter()
        .map(|(label, e)| {
            let Some(first) = points.first() else {
                return Ok(Drift {
                    label: label.clone(),
                    initial: f64::NAN,
                    max_drift: 0.0,
                });
            };
            let i0 = e.evaluate(first)?;
            let mut worst = 0.0f64;
            for pt in &points[1..] {
                worst = worst.max((e.evaluate(pt)? - i0).abs() / (1.0 + i0.abs()));
            }
            Ok(Drift {
                label: label.clone(),
                initial: i0,
                max_drift: worst,
            })
        })
        .collect()
}

/// Hamiltonians, `Q`'s, and listed invariants of a system, deduplicated by
/// label, in that order.
pub fn monitored_functions(sys: &System) -> Vec<(String, Expr)> {
    let mut out: Vec<(String, Expr)> = Vec::new();
    let mut push = |l: String, e: &Expr| {
        if !out.iter().any(|(k, _)| *k == l) {
            out.push((l, e.clone()));
        }
    };
    for h in &sys.hamiltonians {
        push(h.label.clone(), &h.expr);
    }
    for (i, q) in sys.q.iter().enumerate() {
        push(format!("Q{}", i + 1), q);
    }
    for inv in sys.listed_invariants() {
        let label = if inv.label == "H" {
            sys.hamiltonian().label.clone()
        } else {
            inv.label.clone()
        };
        push(label, &inv.expr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_system;
    use crate::expr::parse;
    use crate::params::Params;

    const Z0: [f64; 6] = [0.4, 1.3, -0.7, 0.9, 0.2, -1.1];

    #[test]
    fn a41_r6_vector_field() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        let v = vector_field(&s, &Z0).unwrap();
        let expected = [2.2, 0.4, -1.8, 0.0, 0.0, 0.0];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{v:?}");
        }
    }

    #[test]
    fn linear_flow_is_exact() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        let t = integrate(&s, &Z0, 1e-3, 1.0, Method::Rk4).unwrap();
        assert_eq!(t.len(), 1001);
        assert!((t.last()[0] - 2.6).abs() < 1e-12);
        assert_eq!(&t.last()[3..], &Z0[3..]);
    }

    #[test]
    fn zero_hamiltonian_is_stationary() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        let f = VectorField::new(&s, &Expr::zero());
        for m in [Method::Rk4, Method::ImplicitMidpoint] {
            let t = integrate_field(&f, "zero", &Z0, 0.1, 1.0, m).unwrap();
            assert!(t.states.iter().all(|z| z == &Z0));
            let d = drift_report(&t, &[("p1".into(), parse("p1").unwrap())]).unwrap();
            assert_eq!(d[0].max_drift, 0.0);
        }
    }

    #[test]
    fn rejects_bad_steps_and_dimensions() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        assert!(matches!(
            integrate(&s, &Z0, 0.0, 1.0, Method::Rk4),
            Err(DynamicsError::Step { .. })
        ));
        assert!(matches!(
            integrate(&s, &Z0, 0.1, 0.01, Method::Rk4),
            Err(DynamicsError::Step { .. })
        ));
        assert!(matches!(
            integrate(&s, &Z0[..4], 0.1, 1.0, Method::Rk4),
            Err(DynamicsError::Dimension { .. })
        ));
    }

    #[test]
    fn domain_exit_keeps_partial_trajectory() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        // ẋ1 = ln(x1) drives x1 through zero.
        let h = parse("p1*ln(x1)").unwrap();
        let f = VectorField::new(&s, &h);
        let z0 = [0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let err = integrate_field(&f, "exit", &z0, 0.01, 2.0, Method::Rk4).unwrap_err();
        let partial = err.partial().unwrap();
        assert!(!partial.is_empty());
    }

    #[test]
    fn csv_layout() {
        let s = get_system("A4_1/R6/1", &Params::new()).unwrap();
        let t = integrate(&s, &Z0, 1e-3, 1e-3, Method::Rk4).unwrap();
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,x3,p1,p2,p3");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.0000000000000000e0,4.0000000000000002e-1"));
    }

    #[test]
    fn method_names() {
        assert_eq!("rk4".parse::<Method>().unwrap(), Method::Rk4);
        assert_eq!(
            "midpoint".parse::<Method>().unwrap(),
            Method::ImplicitMidpoint
        );
        assert!("euler".parse::<Method>().is_err());
    }
}
