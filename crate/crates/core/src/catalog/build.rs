//! Turns a [`SystemSpec`] into a fully bound [`System`].

use std::collections::BTreeMap;

use crate::algebra::get_algebra;
use crate::expr::sample::{Guard, GuardRule, SamplingDomain, VarRange};
use crate::expr::{parse_with, Expr, ParseContext, Symbol};
use crate::params::{Constraint, ParamTable, Params};
use crate::poisson::{CanonicalStructure, PoissonBivector, PoissonStructure};

use super::schema::{GuardKind, HamiltonianForms, SystemKind, SystemSpec};
use super::{CatalogError, Darboux, FormClaim, Hamiltonian, Invariant, System, Variant};

/// Parameter table declared by an entry.
pub(crate) fn param_table(spec: &SystemSpec, base: &str) -> Result<ParamTable, CatalogError> {
    let mut table = ParamTable::new();
    for (name, decl) in &spec.params {
        table.declare(name, decl.default_value());
    }
    for (name, decl) in &spec.params {
        if let Some(c) = decl.constraint() {
            let cs = Constraint::shorthand(name, c).map_err(|e| CatalogError::Invalid {
                pointer: format!("{base}/params/{name}"),
                message: e.to_string(),
            })?;
            for c in cs {
                table.constrain(c);
            }
        }
    }
    let declared = table.context();
    for (name, text) in &spec.derived {
        let f = parse_with(text, &declared).map_err(|source| CatalogError::Formula {
            pointer: format!("{base}/derived/{name}"),
            text: text.clone(),
            source,
        })?;
        table.derive(name, f);
    }
    let ctx = table.context();
    for (i, text) in spec.constraints.iter().enumerate() {
        let c = Constraint::parse(text, &ctx).map_err(|e| CatalogError::Invalid {
            pointer: format!("{base}/constraints/{i}"),
            message: e.to_string(),
        })?;
        table.constrain(c);
    }
    Ok(table)
}

pub(crate) fn coordinates(spec: &SystemSpec) -> Vec<Symbol> {
    match spec.kind {
        SystemKind::Realization => CanonicalStructure::new(spec.n).coordinates(),
        SystemKind::Group => (1..=4).map(|i| Symbol::from(format!("x{i}"))).collect(),
    }
}

fn hamiltonian_labels(count: usize) -> Vec<String> {
    if count == 1 {
        vec!["H".to_string()]
    } else {
        (1..=count).map(|k| format!("H{k}")).collect()
    }
}

/// Parses formulas of one entry and expands every auxiliary symbol.
struct Builder<'a> {
    spec: &'a SystemSpec,
    base: &'a str,
    ctx: ParseContext,
    coords: Vec<Symbol>,
    bindings: Vec<(Symbol, f64)>,
}

/// Definitions, Darboux coordinates and `Q`'s of one reading of an entry.
struct Frame {
    subs: BTreeMap<String, Expr>,
    y: Vec<Expr>,
    q: Vec<Expr>,
}

impl<'a> Builder<'a> {
    fn parse(&self, text: &str, pointer: String) -> Result<Expr, CatalogError> {
        parse_with(text, &self.ctx).map_err(|source| CatalogError::Formula {
            pointer,
            text: text.to_string(),
            source,
        })
    }

    /// Parses, substitutes `subs`, binds parameters, and checks that only
    /// phase-space coordinates remain.
    fn resolve(
        &self,
        text: &str,
        pointer: String,
        subs: &BTreeMap<String, Expr>,
    ) -> Result<Expr, CatalogError> {
        let e = self.parse(text, pointer.clone())?;
        let e = e.substitute_vars(&|name| subs.get(name).cloned());
        let e = e.bind_params(&self.bindings);
        if let Some(v) = e
            .variables()
            .into_iter()
            .find(|v| !self.coords.iter().any(|c| c == v))
        {
            return Err(CatalogError::Invalid {
                pointer,
                message: format!("`{text}` refers to `{v}`, which is not available here"),
            });
        }
        Ok(e)
    }

    fn frame(
        &self,
        defs: &[(String, String)],
        defs_ptr: &str,
        darboux: &[String],
        darboux_ptr: &str,
        q: &[String],
        q_ptr: &str,
    ) -> Result<Frame, CatalogError> {
        let mut subs = BTreeMap::new();
        for (i, (name, text)) in defs.iter().enumerate() {
            let e = self.resolve(text, format!("{}/{defs_ptr}/{i}/1", self.base), &subs)?;
            subs.insert(name.clone(), e);
        }
        let mut y = Vec::new();
        if self.spec.kind == SystemKind::Group {
            if darboux.len() != 4 {
                return Err(CatalogError::Invalid {
                    pointer: format!("{}/{darboux_ptr}", self.base),
                    message: format!("expected 4 Darboux coordinates, found {}", darboux.len()),
                });
            }
            for (i, text) in darboux.iter().enumerate() {
                y.push(self.resolve(text, format!("{}/{darboux_ptr}/{i}", self.base), &subs)?);
            }
            for (i, e) in y.iter().enumerate() {
                subs.insert(format!("y{}", i + 1), e.clone());
            }
        }
        if q.len() != 4 {
            return Err(CatalogError::Invalid {
                pointer: format!("{}/{q_ptr}", self.base),
                message: format!("expected 4 Q functions, found {}", q.len()),
            });
        }
        let mut qs = Vec::new();
        for (i, text) in q.iter().enumerate() {
            qs.push(self.resolve(text, format!("{}/{q_ptr}/{i}", self.base), &subs)?);
        }
        for (i, e) in qs.iter().enumerate() {
            subs.insert(format!("Q{}", i + 1), e.clone());
        }
        Ok(Frame { subs, y, q: qs })
    }
}

pub(crate) fn materialize(
    spec: &SystemSpec,
    base: &str,
    variant: Variant,
    overrides: &Params,
) -> Result<System, CatalogError> {
    let table = param_table(spec, base)?;
    let params = table
        .resolve(overrides)
        .map_err(|source| CatalogError::Params {
            id: spec.id.clone(),
            source,
        })?;
    let algebra = get_algebra(&spec.algebra, &params).map_err(|source| CatalogError::Algebra {
        id: spec.id.clone(),
        source,
    })?;

    match spec.kind {
        SystemKind::Realization if !(1..=9).contains(&spec.n) => {
            return Err(CatalogError::Invalid {
                pointer: format!("{base}/N"),
                message: format!("N must lie in 1..=9, found {}", spec.n),
            })
        }
        SystemKind::Group if spec.n != 2 => {
            return Err(CatalogError::Invalid {
                pointer: format!("{base}/N"),
                message: format!("group systems have N = 2, found {}", spec.n),
            })
        }
        _ => {}
    }
    if spec.h.is_empty() {
        return Err(CatalogError::Invalid {
            pointer: format!("{base}/H"),
            message: "at least one Hamiltonian is required".to_string(),
        });
    }

    let labels = hamiltonian_labels(spec.h.len());
    let mut ctx = table.context();
    for (name, _) in spec
        .defs
        .iter()
        .chain(spec.printed.iter().flat_map(|p| p.defs.iter().flatten()))
    {
        ctx = ctx.symbol(name.clone());
    }
    for i in 1..=4 {
        ctx = ctx.symbol(format!("Q{i}"));
    }
    for l in &labels {
        ctx = ctx.symbol(l.clone());
    }
    let coords = coordinates(spec);
    let b = Builder {
        spec,
        base,
        ctx,
        coords: coords.clone(),
        bindings: params.to_bindings(),
    };

    let curated = b.frame(&spec.defs, "defs", &spec.darboux, "darboux", &spec.q, "Q")?;
    let printed = spec.printed.clone().unwrap_or_default();
    let frame = match variant {
        Variant::Curated => None,
        Variant::AsPrinted => {
            let (defs, defs_ptr) = match &printed.defs {
                Some(d) => (d.as_slice(), "printed/defs"),
                None => (spec.defs.as_slice(), "defs"),
            };
            let (dar, dar_ptr) = match &printed.darboux {
                Some(d) => (d.as_slice(), "printed/darboux"),
                None => (spec.darboux.as_slice(), "darboux"),
            };
            let (q, q_ptr) = match &printed.q {
                Some(q) => (q.as_slice(), "printed/Q"),
                None => (spec.q.as_slice(), "Q"),
            };
            Some(b.frame(defs, defs_ptr, dar, dar_ptr, q, q_ptr)?)
        }
    };
    let active = frame.as_ref().unwrap_or(&curated);

    let mut hamiltonians = Vec::new();
    let mut form_claims = Vec::new();
    for (k, (h, label)) in spec.h.iter().zip(&labels).enumerate() {
        let ptr = format!("{base}/H/{k}");
        let forms: HamiltonianForms = h.forms();
        let curated_text = forms
            .q_form
            .as_ref()
            .or(forms.expr.as_ref())
            .ok_or_else(|| CatalogError::Invalid {
                pointer: ptr.clone(),
                message: "a Hamiltonian needs `q_form` or `expr`".to_string(),
            })?;
        let curated_ptr = if forms.q_form.is_some() {
            format!("{ptr}/q_form")
        } else if matches!(h, super::schema::HamiltonianSpec::Formula(_)) {
            ptr.clone()
        } else {
            format!("{ptr}/expr")
        };
        let q_form = match (&forms.printed_q_form, variant) {
            (Some(p), Variant::AsPrinted) => Some((p, format!("{ptr}/printed_q_form"))),
            _ => forms.q_form.as_ref().map(|q| (q, format!("{ptr}/q_form"))),
        };
        let expr = match variant {
            Variant::Curated => b.resolve(curated_text, curated_ptr.clone(), &curated.subs)?,
            Variant::AsPrinted => match forms.printed.first() {
                Some(p) => b.resolve(&p.expr, format!("{ptr}/printed/0/expr"), &active.subs)?,
                None => match &q_form {
                    Some((text, qp)) => b.resolve(text, qp.clone(), &active.subs)?,
                    None => b.resolve(curated_text, curated_ptr.clone(), &active.subs)?,
                },
            },
        };
        if variant == Variant::AsPrinted {
            if let Some((text, qp)) = &q_form {
                let reference = b.resolve(text, qp.clone(), &active.subs)?;
                for (j, p) in forms.printed.iter().enumerate() {
                    form_claims.push(FormClaim {
                        hamiltonian: label.clone(),
                        source: p.source.clone(),
                        printed_text: p.expr.clone(),
                        q_form_text: (*text).clone(),
                        printed: b.resolve(
                            &p.expr,
                            format!("{ptr}/printed/{j}/expr"),
                            &active.subs,
                        )?,
                        reference: reference.clone(),
                    });
                }
            }
        }
        hamiltonians.push(Hamiltonian {
            label: label.clone(),
            expr,
            q_form: forms.q_form.clone(),
            casimir: forms.casimir,
        });
    }

    let mut subs = active.subs.clone();
    for h in &hamiltonians {
        subs.insert(h.label.clone(), h.expr.clone());
    }
    if hamiltonians.len() > 1 {
        subs.insert("H".to_string(), hamiltonians[0].expr.clone());
    }
    let invariants = |list: &[String], key: &str| -> Result<Vec<Invariant>, CatalogError> {
        list.iter()
            .enumerate()
            .map(|(i, text)| {
                let ctx_ok = b.ctx.clone().symbol("H");
                let e = parse_with(text, &ctx_ok).map_err(|source| CatalogError::Formula {
                    pointer: format!("{base}/{key}/{i}"),
                    text: text.clone(),
                    source,
                })?;
                let e = e.substitute_vars(&|name| subs.get(name).cloned());
                let e = e.bind_params(&b.bindings);
                if let Some(v) = e.variables().into_iter().find(|v| !coords.contains(v)) {
                    return Err(CatalogError::Invalid {
                        pointer: format!("{base}/{key}/{i}"),
                        message: format!("`{text}` refers to `{v}`, which is not available here"),
                    });
                }
                Ok(Invariant {
                    label: text.clone(),
                    expr: e,
                })
            })
            .collect()
    };
    let core = invariants(&spec.core, "core")?;
    let extra = invariants(&spec.extra, "extra")?;
    let degenerate_casimirs = invariants(&spec.degenerate_casimirs, "degenerate_casimirs")?;

    let (structure, darboux) = match spec.kind {
        SystemKind::Realization => {
            if !spec.bivector.is_empty() || !spec.darboux.is_empty() {
                return Err(CatalogError::Invalid {
                    pointer: base.to_string(),
                    message: "realization systems carry no bivector or Darboux map".to_string(),
                });
            }
            (
                PoissonStructure::Canonical(CanonicalStructure::new(spec.n)),
                None,
            )
        }
        SystemKind::Group => {
            let (entries, key) = match (&printed.bivector, variant) {
                (Some(p), Variant::AsPrinted) => (p, "printed/bivector"),
                _ => (&spec.bivector, "bivector"),
            };
            if entries.is_empty() {
                return Err(CatalogError::Invalid {
                    pointer: format!("{base}/{key}"),
                    message: "group systems need a Poisson bivector".to_string(),
                });
            }
            let mut parsed = Vec::new();
            for (i, (mu, nu, text)) in entries.iter().enumerate() {
                let ptr = format!("{base}/{key}/{i}");
                if *mu == 0 || *nu == 0 {
                    return Err(CatalogError::Invalid {
                        pointer: ptr,
                        message: "bivector indices are 1-based".to_string(),
                    });
                }
                let e = b.resolve(text, format!("{ptr}/2"), &active.subs)?;
                parsed.push((mu - 1, nu - 1, e));
            }
            let p = PoissonBivector::from_entries(coords.clone(), &parsed).map_err(|source| {
                CatalogError::Bivector {
                    pointer: format!("{base}/{key}"),
                    source,
                }
            })?;
            let mut pairing = Vec::new();
            for (i, &(a, c)) in spec.pairing.iter().enumerate() {
                if a == 0 || c == 0 || a > 4 || c > 4 || a == c {
                    return Err(CatalogError::Invalid {
                        pointer: format!("{base}/pairing/{i}"),
                        message: format!("invalid Darboux pair ({a},{c})"),
                    });
                }
                pairing.push((a - 1, c - 1));
            }
            if pairing.is_empty() {
                pairing = vec![(0, 2), (1, 3)];
            }
            (
                PoissonStructure::Bivector(p),
                Some(Darboux {
                    y: active.y.clone(),
                    pairing,
                }),
            )
        }
    };

    let mut domain = SamplingDomain::new(coords.iter().cloned());
    for (var, range) in &spec.domain {
        let ptr = format!("{base}/domain/{var}");
        if !coords.iter().any(|c| &**c == var) {
            return Err(CatalogError::Invalid {
                pointer: ptr,
                message: format!("`{var}` is not a coordinate of this system"),
            });
        }
        let r = parse_range(range).ok_or_else(|| CatalogError::Invalid {
            pointer: ptr,
            message: format!("unrecognized range `{range}`"),
        })?;
        domain.set_range(var, r);
    }
    for (i, g) in spec.guards.iter().enumerate() {
        let expr = b.resolve(&g.expr, format!("{base}/guards/{i}/expr"), &curated.subs)?;
        let rule = match g.rule {
            GuardKind::AtLeast => GuardRule::AtLeast(g.value),
            GuardKind::AwayFromZero => GuardRule::AwayFromZero(g.value),
            GuardKind::Bounded => GuardRule::Bounded(g.value),
        };
        domain.add_guard(Guard { expr, rule });
    }

    if let Some(z) = &spec.z0 {
        if z.len() != coords.len() {
            return Err(CatalogError::Invalid {
                pointer: format!("{base}/z0"),
                message: format!("expected {} coordinates, found {}", coords.len(), z.len()),
            });
        }
    }

    Ok(System {
        id: spec.id.clone(),
        kind: spec.kind,
        variant,
        algebra,
        params,
        n: spec.n,
        coordinates: coords,
        structure,
        q: active.q.clone(),
        hamiltonians,
        core,
        extra,
        degenerate_casimirs,
        darboux,
        form_claims,
        domain,
        z0: spec.z0.clone(),
        claimed_class: spec.claimed_class,
        errata: spec.errata.clone(),
        notes: spec.notes.clone(),
    })
}

/// `positive`, `negative`, `punctured`, or a closed interval `[lo,hi]`.
fn parse_range(text: &str) -> Option<VarRange> {
    match text.trim() {
        "positive" => Some(VarRange::positive()),
        "negative" => Some(VarRange::negative()),
        "punctured" | "default" => Some(VarRange::punctured()),
        t => {
            let inner = t.strip_prefix('[')?.strip_suffix(']')?;
            let (lo, hi) = inner.split_once(',')?;
            let (lo, hi): (f64, f64) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
            (lo < hi).then(|| VarRange::interval(lo, hi))
        }
    }
}
