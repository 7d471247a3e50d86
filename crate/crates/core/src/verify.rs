//! Numerical audit of a system: bracket closure, invariance, involution,
//! Darboux canonicality, functional independence and classification.

use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{jacobi_defect, DIM};
use crate::catalog::{Catalog, CatalogError, ClaimedClass, System, Variant};
use crate::expr::sample::{relative_residual, rng_for, SampleError, SamplingDomain};
use crate::expr::{Expr, Symbol};
use crate::params::Params;
use crate::poisson::{jacobi_defect_bivector, PoissonStructure};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            tol: 1e-9,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// `None` when no valid sample point could be found.
    pub residual: Option<f64>,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    /// Name without the bracketed qualifier: `invariance[H2]` → `invariance`.
    pub fn base_name(&self) -> &str {
        self.name.split('[').next().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Integrable,
    Superintegrable,
    Maximal,
    Unverified,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Integrable => "integrable",
            Self::Superintegrable => "superintegrable",
            Self::Maximal => "maximal",
            Self::Unverified => "unverified",
        }
    }

    fn strength(self) -> u8 {
        match self {
            Self::Unverified => 0,
            Self::Integrable => 1,
            Self::Superintegrable => 2,
            Self::Maximal => 3,
        }
    }
}

impl From<ClaimedClass> for Class {
    fn from(c: ClaimedClass) -> Self {
        match c {
            ClaimedClass::Integrable => Self::Integrable,
            ClaimedClass::Superintegrable => Self::Superintegrable,
            ClaimedClass::Maximal => Self::Maximal,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inputs to [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassInputs {
    pub n: usize,
    pub k: usize,
    pub core_size: usize,
    pub core_verified: bool,
}

pub fn classify(c: ClassInputs) -> Class {
    if !(c.core_verified && c.core_size >= c.n && c.k >= c.n) {
        return Class::Unverified;
    }
    if c.k + 1 == 2 * c.n {
        Class::Maximal
    } else if c.k > c.n {
        Class::Superintegrable
    } else {
        Class::Integrable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub system: String,
    pub variant: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    pub checks: Vec<CheckResult>,
    pub k: Option<usize>,
    pub core_size: Option<usize>,
    pub core_verified: bool,
    /// Functions that commute with the Hamiltonian and enter the rank.
    pub pool: Vec<String>,
    pub class_computed: Class,
    pub class_claimed: Class,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errata: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// A labelled identity `lhs == rhs`.
struct Identity {
    label: String,
    lhs: Expr,
    rhs: Expr,
}

/// Worst relative residual of each identity over points drawn from `dom`.
/// All identities are evaluated at the same points.
fn residuals(
    identities: &[Identity],
    dom: &SamplingDomain,
    samples: usize,
    seed: u64,
    stream: &str,
) -> Result<Vec<f64>, SampleError> {
    let exprs: Vec<&Expr> = identities.iter().flat_map(|i| [&i.lhs, &i.rhs]).collect();
    let mut worst = vec![0.0f64; identities.len()];
    if identities.is_empty() {
        return Ok(worst);
    }
    let mut rng = rng_for(seed, stream);
    for _ in 0..samples {
        let (_, vals) = dom.sample_valid(&mut rng, &exprs)?;
        for (w, pair) in worst.iter_mut().zip(vals.chunks(2)) {
            *w = w.max(relative_residual(pair[0], pair[1]));
        }
    }
    Ok(worst)
}

fn identity_check(
    name: &str,
    identities: &[Identity],
    dom: &SamplingDomain,
    opts: VerifyOptions,
) -> CheckResult {
    let mut out = CheckResult {
        name: name.to_string(),
        residual: None,
        tol: opts.tol,
        samples: opts.samples,
        seed: opts.seed,
        pass: false,
        detail: None,
    };
    match residuals(identities, dom, opts.samples, opts.seed, name) {
        Ok(r) => {
            let (idx, worst) =
                r.iter()
                    .copied()
                    .enumerate()
                    .fold((None, 0.0f64), |(bi, bw), (i, w)| {
                        if bi.is_none() || w > bw {
                            (Some(i), w)
                        } else {
                            (bi, bw)
                        }
                    });
            out.residual = Some(worst);
            out.pass = worst <= opts.tol;
            if let Some(i) = idx {
                out.detail = Some(format!("worst: {}", identities[i].label));
            }
        }
        Err(e) => out.detail = Some(e.to_string()),
    }
    out
}

fn scalar_check(name: &str, value: Result<f64, SampleError>, opts: VerifyOptions) -> CheckResult {
    let (residual, detail) = match value {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CheckResult {
        name: name.to_string(),
        residual,
        tol: opts.tol,
        samples: opts.samples,
        seed: opts.seed,
        pass: residual.is_some_and(|r| r <= opts.tol),
        detail,
    }
}

/// `{Q_i, Q_j} = Σ_k f_ij^k Q_k` for every `i < j`.
pub fn verify_closure(sys: &System, opts: VerifyOptions) -> CheckResult {
    let mut ids = Vec::new();
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            let lhs = sys.structure.bracket(&sys.q[i], &sys.q[j]);
            let mut rhs = Expr::zero();
            for (k, q) in sys.q.iter().enumerate() {
                let f = sys.algebra.f(i, j, k);
                if f != 0.0 {
                    rhs = rhs.add(&Expr::constant(f).mul(q));
                }
            }
            ids.push(Identity {
                label: format!("{{Q{},Q{}}}", i + 1, j + 1),
                lhs,
                rhs,
            });
        }
    }
    identity_check("closure", &ids, &sys.domain, opts)
}

/// `{H, I} = 0` for every listed invariant, and for every `Q` when `H` is
/// built from Casimirs. One check per Hamiltonian.
pub fn verify_invariance(sys: &System, opts: VerifyOptions) -> Vec<CheckResult> {
    sys.hamiltonians
        .iter()
        .map(|h| {
            let mut targets: Vec<(String, &Expr)> = sys
                .listed_invariants()
                .map(|i| (i.label.clone(), &i.expr))
                .collect();
            if h.casimir {
                for (i, q) in sys.q.iter().enumerate() {
                    targets.push((format!("Q{}", i + 1), q));
                }
            }
            let mut seen = Vec::new();
            targets.retain(|(l, _)| {
                let fresh = !seen.contains(l);
                seen.push(l.clone());
                fresh
            });
            let ids: Vec<Identity> = targets
                .into_iter()
                .map(|(label, e)| Identity {
                    label: format!("{{{},{label}}}", h.label),
                    lhs: sys.structure.bracket(&h.expr, e),
                    rhs: Expr::zero(),
                })
                .collect();
            identity_check(&format!("invariance[{}]", h.label), &ids, &sys.domain, opts)
        })
        .collect()
}

/// Pairwise brackets within the involutive core.
pub fn verify_involution_core(sys: &System, opts: VerifyOptions) -> CheckResult {
    let mut ids = Vec::new();
    for (i, a) in sys.core.iter().enumerate() {
        for b in &sys.core[i + 1..] {
            ids.push(Identity {
                label: format!("{{{},{}}}", a.label, b.label),
                lhs: sys.structure.bracket(&a.expr, &b.expr),
                rhs: Expr::zero(),
            });
        }
    }
    identity_check("involution_core", &ids, &sys.domain, opts)
}

/// `{y_i, y_j}` is 1 on declared pairs (antisymmetrically) and 0 elsewhere.
pub fn verify_darboux(sys: &System, opts: VerifyOptions) -> Option<CheckResult> {
    let d = sys.darboux.as_ref()?;
    let mut ids = Vec::new();
    for i in 0..d.y.len() {
        for j in (i + 1)..d.y.len() {
            let expected = if d.pairing.contains(&(i, j)) {
                1.0
            } else if d.pairing.contains(&(j, i)) {
                -1.0
            } else {
                0.0
            };
            ids.push(Identity {
                label: format!("{{y{},y{}}}", i + 1, j + 1),
                lhs: sys.structure.bracket(&d.y[i], &d.y[j]),
                rhs: Expr::constant(expected),
            });
        }
    }
    Some(identity_check("darboux", &ids, &sys.domain, opts))
}

/// Numerical rank of the Jacobian of `funcs`, maximized over sample points.
pub fn independence_rank(
    funcs: &[&Expr],
    coords: &[Symbol],
    dom: &SamplingDomain,
    samples: usize,
    seed: u64,
) -> Result<usize, SampleError> {
    if funcs.is_empty() {
        return Ok(0);
    }
    let grads: Vec<Expr> = funcs.iter().flat_map(|f| f.gradient(coords)).collect();
    let refs: Vec<&Expr> = funcs.iter().copied().chain(grads.iter()).collect();
    let mut rng = rng_for(seed, "independence_rank");
    let mut best = 0;
    for _ in 0..samples {
        let (_, vals) = dom.sample_valid(&mut rng, &refs)?;
        let m = DMatrix::from_row_slice(funcs.len(), coords.len(), &vals[funcs.len()..]);
        best = best.max(numerical_rank(&m));
        if best == funcs.len().min(coords.len()) {
            break;
        }
    }
    Ok(best)
}

/// Count of singular values above `RANK_THRESHOLD · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0f64, f64::max);
    if max.is_nan() || max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * max).count()
}

fn rank_or_note(
    funcs: &[&Expr],
    sys: &System,
    opts: VerifyOptions,
    what: &str,
    notes: &mut Vec<String>,
) -> Option<usize> {
    match independence_rank(
        funcs,
        &sys.coordinates,
        &sys.domain,
        opts.samples,
        opts.seed,
    ) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("rank of {what} unavailable: {e}"));
            None
        }
    }
}

/// Runs every applicable check and classifies the system.
pub fn verify_system(sys: &System, opts: VerifyOptions) -> Report {
    let mut checks = vec![scalar_check(
        "algebra_jacobi",
        Ok(jacobi_defect(&sys.algebra)),
        opts,
    )];
    checks.push(verify_closure(sys, opts));
    checks.extend(verify_invariance(sys, opts));
    let core_check = verify_involution_core(sys, opts);
    let core_pairs_ok = core_check.pass;
    checks.push(core_check);
    if !sys.degenerate_casimirs.is_empty() {
        let ids: Vec<Identity> = sys
            .degenerate_casimirs
            .iter()
            .map(|c| Identity {
                label: c.label.clone(),
                lhs: c.expr.clone(),
                rhs: Expr::zero(),
            })
            .collect();
        checks.push(identity_check(
            "casimir_degeneracy",
            &ids,
            &sys.domain,
            opts,
        ));
    }
    if let PoissonStructure::Bivector(p) = &sys.structure {
        checks.push(scalar_check(
            "bivector_jacobi",
            jacobi_defect_bivector(p, &sys.domain, opts.samples, opts.seed),
            opts,
        ));
    }
    checks.extend(verify_darboux(sys, opts));
    for claim in &sys.form_claims {
        let ids = [Identity {
            label: format!("{} = {}", claim.printed_text, claim.q_form_text),
            lhs: claim.printed.clone(),
            rhs: claim.reference.clone(),
        }];
        checks.push(identity_check(
            &format!("hamiltonian_form[{}, {}]", claim.hamiltonian, claim.source),
            &ids,
            &sys.domain,
            opts,
        ));
    }

    let mut notes = Vec::new();
    let h = &sys.hamiltonian().expr;

    // Candidates for the independence pool, each tested against H.
    let mut candidates: Vec<(String, &Expr)> = vec![(sys.hamiltonian().label.clone(), h)];
    for (i, q) in sys.q.iter().enumerate() {
        candidates.push((format!("Q{}", i + 1), q));
    }
    for inv in sys.listed_invariants() {
        if !candidates.iter().any(|(l, _)| *l == inv.label) {
            candidates.push((inv.label.clone(), &inv.expr));
        }
    }
    let ids: Vec<Identity> = candidates
        .iter()
        .map(|(l, e)| Identity {
            label: l.clone(),
            lhs: sys.structure.bracket(e, h),
            rhs: Expr::zero(),
        })
        .collect();
    let commuting = residuals(&ids, &sys.domain, opts.samples, opts.seed, "pool");
    let (pool_labels, pool): (Vec<String>, Vec<&Expr>) = match &commuting {
        Ok(r) => candidates
            .iter()
            .zip(r)
            .filter(|(_, &w)| w <= opts.tol)
            .map(|((l, e), _)| (l.clone(), *e))
            .unzip(),
        Err(e) => {
            notes.push(format!("pool membership unavailable: {e}"));
            (Vec::new(), Vec::new())
        }
    };
    let k = if pool.is_empty() {
        None
    } else {
        rank_or_note(&pool, sys, opts, "the invariant pool", &mut notes)
    };

    let core_commutes = match &commuting {
        Ok(_) => sys.core.iter().all(|c| pool_labels.contains(&c.label)),
        Err(_) => false,
    };
    let core_exprs: Vec<&Expr> = sys.core.iter().map(|c| &c.expr).collect();
    let core_size = rank_or_note(&core_exprs, sys, opts, "the involutive core", &mut notes);
    let core_verified = core_pairs_ok && core_commutes;

    let class_computed = match (k, core_size) {
        (Some(k), Some(core_size)) => classify(ClassInputs {
            n: sys.n,
            k,
            core_size,
            core_verified,
        }),
        _ => Class::Unverified,
    };
    let class_claimed = Class::from(sys.claimed_class);
    if class_computed != class_claimed {
        let verb = if class_computed.strength() > class_claimed.strength() {
            "refines"
        } else {
            "contradicts"
        };
        let mut why = format!(
            "computed class {class_computed} {verb} claimed {class_claimed} (N={}, k={}, core size={}",
            sys.n,
            k.map_or("?".to_string(), |k| k.to_string()),
            core_size.map_or("?".to_string(), |c| c.to_string()),
        );
        if !core_verified {
            why.push_str(", core not in involution with H");
        }
        why.push(')');
        notes.push(why);
    }
    if let Some(k) = k {
        if k + 1 > 2 * sys.n {
            notes.push(format!("k={k} exceeds 2N-1={}", 2 * sys.n - 1));
        }
    }
    let failing: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    if sys.variant == Variant::AsPrinted && !failing.is_empty() {
        notes.push(format!("as printed, failing: {}", failing.join(", ")));
    }

    Report {
        system: sys.id.clone(),
        variant: sys.variant.as_str(),
        n: sys.n,
        checks,
        k,
        core_size,
        core_verified,
        pool: pool_labels,
        class_computed,
        class_claimed,
        notes,
        errata: match sys.variant {
            Variant::AsPrinted => sys.errata.clone(),
            Variant::Curated => None,
        },
    }
}

/// Reports for the given ids: the curated reading of each, followed by the
/// printed reading where one exists. Output order follows `ids`.
pub fn verify_catalog(
    catalog: &Catalog,
    ids: &[String],
    params: &Params,
    opts: VerifyOptions,
) -> Result<Vec<Report>, CatalogError> {
    let mut jobs = Vec::new();
    for id in ids {
        jobs.push((id.clone(), Variant::Curated));
        if catalog.has_printed_forms(id)? {
            jobs.push((id.clone(), Variant::AsPrinted));
        }
    }
    // Materialize first so configuration errors surface before any work.
    let systems = jobs
        .iter()
        .map(|(id, v)| catalog.get_variant(id, params, *v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(systems.par_iter().map(|s| verify_system(s, opts)).collect())
}

/// Whether every curated report passes.
pub fn curated_pass(reports: &[Report]) -> bool {
    reports
        .iter()
        .filter(|r| r.variant == Variant::Curated.as_str())
        .all(Report::passed)
}

pub fn reports_to_json(reports: &[Report]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

fn fmt_residual(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3e}"))
}

/// Aligned text rendering of reports.
pub fn reports_to_text(reports: &[Report]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{} [{}]  N={} k={} core={}  computed={} claimed={}",
            r.system,
            r.variant,
            r.n,
            r.k.map_or("?".to_string(), |k| k.to_string()),
            r.core_size.map_or("?".to_string(), |c| c.to_string()),
            r.class_computed,
            r.class_claimed
        );
        let w = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &r.checks {
            let _ = writeln!(
                out,
                "  {:<w$}  {:>10}  tol {:.0e}  {}{}",
                c.name,
                fmt_residual(c.residual),
                c.tol,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
                    .as_ref()
                    .map_or(String::new(), |d| format!("  ({d})")),
            );
        }
        for n in &r.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        if let Some(e) = &r.errata {
            let _ = writeln!(out, "  errata: {e}");
        }
        out.push('\n');
    }
    out
}
