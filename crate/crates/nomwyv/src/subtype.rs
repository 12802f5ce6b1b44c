//! The algorithmic subtype engine.
//!
//! Rules are attempted in a fixed order per judgment: top, bottom, equal
//! bases with structural refinement subtyping, the declared nominal
//! relation (trying entries in declaration order with backtracking), then
//! single-step upcasting of the left side and downcasting of the right.
//! Every rule application is counted, and optionally recorded as a tree for
//! `--trace` output.
//!
//! The `check` entry point is the expansion wrapper: both sides are
//! unfolded to their common refinement depth before querying, which makes
//! refinements of nominal subtypes behave the way width/depth intuition
//! says they should. All subtype obligations raised by the typechecker go
//! through `check`; the engine itself always uses the raw judgment.

use std::collections::HashSet;

use thiserror::Error;

use crate::graphs::MeasureTable;
use crate::normalize::{
    avoid, downcast_step, expose, lookup_decl, type_path, upcast_step, Ctx, NormalizeError,
};
use crate::syntax::{
    fresh_name, BaseType, Bound, FreeVars, MemberDecl, Refinement, RefinementMember, Subst, Type,
    TypeMemberDecl, VarName,
};

/// A recorded rule application: the judgment it concluded, whether it held,
/// and the premises attempted under it.
#[derive(Clone, Debug)]
pub struct TraceNode {
    pub rule: &'static str,
    pub judgment: String,
    pub holds: bool,
    pub children: Vec<TraceNode>,
}

/// Step meter and optional derivation tree for one query.
#[derive(Clone, Debug, Default)]
pub struct DerivationTrace {
    pub steps: u64,
    pub tree: Option<TraceNode>,
}

impl DerivationTrace {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(tree) = &self.tree {
            render_node(tree, 0, &mut out);
        }
        out
    }
}

fn render_node(node: &TraceNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(node.rule);
    out.push_str(": ");
    out.push_str(&node.judgment);
    if !node.holds {
        out.push_str(" (fails)");
    }
    out.push('\n');
    for c in &node.children {
        render_node(c, depth + 1, out);
    }
}

#[derive(Clone, Debug)]
pub struct SubtypeOutcome {
    pub holds: bool,
    pub trace: DerivationTrace,
}

struct Engine {
    steps: u64,
    keep_tree: bool,
    /// Failed (env, lhs, rhs) judgments, pruned on re-derivation. Disabled
    /// when a tree is kept so traces stay faithful.
    failed: HashSet<(u32, Type, Type)>,
    cache_enabled: bool,
    env_id: u32,
    next_env_id: u32,
}

impl Engine {
    fn new(keep_tree: bool) -> Self {
        Engine {
            steps: 0,
            keep_tree,
            failed: HashSet::new(),
            cache_enabled: !keep_tree,
            env_id: 0,
            next_env_id: 1,
        }
    }

    fn node(
        &mut self,
        rule: &'static str,
        judgment: impl FnOnce() -> String,
        holds: bool,
        children: Vec<TraceNode>,
        out: &mut Vec<TraceNode>,
    ) -> bool {
        self.steps += 1;
        if self.keep_tree {
            out.push(TraceNode {
                rule,
                judgment: judgment(),
                holds,
                children,
            });
        }
        holds
    }

    fn subtype(&mut self, ctx: &Ctx, lhs: &Type, rhs: &Type, out: &mut Vec<TraceNode>) -> bool {
        if self.cache_enabled
            && self
                .failed
                .contains(&(self.env_id, lhs.clone(), rhs.clone()))
        {
            return false;
        }
        let holds = self.subtype_uncached(ctx, lhs, rhs, out);
        if !holds && self.cache_enabled {
            self.failed.insert((self.env_id, lhs.clone(), rhs.clone()));
        }
        holds
    }

    fn subtype_uncached(
        &mut self,
        ctx: &Ctx,
        lhs: &Type,
        rhs: &Type,
        out: &mut Vec<TraceNode>,
    ) -> bool {
        let judgment = || format!("{lhs} <: {rhs}");

        if matches!(rhs, Type::Top) {
            return self.node("S-Top", judgment, true, Vec::new(), out);
        }
        if matches!(lhs, Type::Bottom) {
            return self.node("S-Bot", judgment, true, Vec::new(), out);
        }

        if let (
            Type::Refined {
                base: lb,
                refinement: lr,
            },
            Type::Refined {
                base: rb,
                refinement: rr,
            },
        ) = (lhs, rhs)
        {
            // Equal bases: structural subtyping of the refinements.
            if lb == rb {
                let mut children = Vec::new();
                let holds = self.refinement(ctx, lr, rr, &mut children);
                if self.node("S-Refine", judgment, holds, children, out) {
                    return true;
                }
            }

            // Declared nominal subtyping, LHS refinement carried along.
            if let (BaseType::Named(n), BaseType::Named(_)) = (lb, rb) {
                for entry in ctx.subs.entries_for(n) {
                    let mut children = Vec::new();
                    let condition_ok =
                        self.refinement(ctx, lr, &entry.lhs_refinement, &mut children);
                    let holds = condition_ok && {
                        let lifted = Type::Refined {
                            base: BaseType::Named(entry.rhs_name.clone()),
                            refinement: lr.clone(),
                        };
                        self.subtype(ctx, &lifted, rhs, &mut children)
                    };
                    if self.node("S-NameUp", judgment, holds, children, out) {
                        return true;
                    }
                }
            }
        }

        // Unfold an upper-bounded path member on the left; the right side
        // is unconstrained.
        if matches!(
            lhs,
            Type::Refined {
                base: BaseType::Sel(..),
                ..
            }
        ) {
            if let Some(up) = upcast_step(ctx, lhs) {
                let mut children = Vec::new();
                let holds = self.subtype(ctx, &up, rhs, &mut children);
                if self.node("S-Lower", judgment, holds, children, out) {
                    return true;
                }
            }
        }

        // Unfold a lower-bounded path member on the right; the left side
        // is unconstrained.
        if matches!(
            rhs,
            Type::Refined {
                base: BaseType::Sel(..),
                ..
            }
        ) {
            if let Some(down) = downcast_step(ctx, rhs) {
                let mut children = Vec::new();
                let holds = self.subtype(ctx, lhs, &down, &mut children);
                if self.node("S-Upper", judgment, holds, children, out) {
                    return true;
                }
            }
        }

        false
    }

    fn member(
        &mut self,
        ctx: &Ctx,
        m1: &RefinementMember,
        m2: &RefinementMember,
        out: &mut Vec<TraceNode>,
    ) -> bool {
        if m1.label != m2.label {
            return false;
        }
        let judgment = || format!("{m1} <: {m2}");
        match (m1.bound, m2.bound) {
            (Bound::Eq, Bound::Eq) => {
                let mut children = Vec::new();
                let holds = self.subtype(ctx, &m1.ty, &m2.ty, &mut children)
                    && self.subtype(ctx, &m2.ty, &m1.ty, &mut children);
                self.node("S-T-Eq", judgment, holds, children, out)
            }
            (Bound::Le | Bound::Eq, Bound::Le) => {
                let mut children = Vec::new();
                let holds = self.subtype(ctx, &m1.ty, &m2.ty, &mut children);
                self.node("S-T-Le", judgment, holds, children, out)
            }
            (Bound::Ge | Bound::Eq, Bound::Ge) => {
                let mut children = Vec::new();
                let holds = self.subtype(ctx, &m2.ty, &m1.ty, &mut children);
                self.node("S-T-Ge", judgment, holds, children, out)
            }
            _ => false,
        }
    }

    fn refinement(
        &mut self,
        ctx: &Ctx,
        r1: &Refinement,
        r2: &Refinement,
        out: &mut Vec<TraceNode>,
    ) -> bool {
        if r2.is_empty() {
            return self.node("S-R-Nil", || format!("{r1} <: {{}}"), true, Vec::new(), out);
        }
        let judgment = || format!("{r1} <: {r2}");
        let mut children = Vec::new();
        let mut holds = true;
        for m2 in &r2.members {
            match r1.get(&m2.label) {
                Some(m1) => {
                    if !self.member(ctx, m1, m2, &mut children) {
                        holds = false;
                        break;
                    }
                }
                None => {
                    holds = false;
                    break;
                }
            }
        }
        self.node("S-R-Cons", judgment, holds, children, out)
    }

    fn decl_list(
        &mut self,
        ctx: &Ctx,
        lhs: &[MemberDecl],
        rhs: &[MemberDecl],
        out: &mut Vec<TraceNode>,
    ) -> bool {
        if rhs.is_empty() {
            return self.node(
                "S-Top-Nil",
                || "members <: {}".into(),
                true,
                Vec::new(),
                out,
            );
        }
        for m2 in rhs {
            let found = lhs.iter().find(|m1| m1.label() == m2.label());
            let ok = match (found, m2) {
                (Some(MemberDecl::TypeMember(d1)), MemberDecl::TypeMember(d2)) => {
                    let mut children = Vec::new();
                    let holds = self.member(
                        ctx,
                        &d1.as_refinement_member(),
                        &d2.as_refinement_member(),
                        &mut children,
                    );
                    self.node("S-Top-Type", || format!("{m2}"), holds, children, out)
                }
                (Some(MemberDecl::Field(f1)), MemberDecl::Field(f2)) => {
                    let mut children = Vec::new();
                    let holds = self.subtype(ctx, &f1.ty, &f2.ty, &mut children);
                    self.node("S-Top-Field", || format!("{m2}"), holds, children, out)
                }
                (Some(MemberDecl::Method(f1)), MemberDecl::Method(f2)) => {
                    let mut children = Vec::new();
                    // Parameters are renamed to a common fresh binder; the
                    // result check runs with it at the supertype's
                    // parameter type.
                    let mut avoid_names = f1.result_ty.free_vars();
                    avoid_names.extend(f2.result_ty.free_vars());
                    let common = VarName::new(fresh_name(f2.param.as_str(), |c| {
                        avoid_names.iter().any(|v| v.as_str() == c)
                            || ctx.vars.contains(&VarName::new(c))
                    }));
                    let common_path = crate::syntax::Path::Var(common.clone());
                    let r1 = f1.result_ty.subst(&f1.param, &common_path);
                    let r2 = f2.result_ty.subst(&f2.param, &common_path);
                    let contra = self.subtype(ctx, &f2.param_ty, &f1.param_ty, &mut children);
                    let holds = contra && {
                        let pushed = ctx.pushed(common, f2.param_ty.clone());
                        let saved = self.env_id;
                        self.env_id = self.next_env_id;
                        self.next_env_id += 1;
                        let r = self.subtype(&pushed, &r1, &r2, &mut children);
                        self.env_id = saved;
                        r
                    };
                    self.node("S-Top-Method", || format!("{m2}"), holds, children, out)
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Decide `lhs <: rhs` with the raw rules, recording a step count.
pub fn is_subtype(ctx: &Ctx, lhs: &Type, rhs: &Type) -> SubtypeOutcome {
    run_query(ctx, lhs, rhs, false)
}

/// As `is_subtype`, but keep the full attempt tree (negative caching is
/// disabled so the tree reflects the actual search).
pub fn is_subtype_traced(ctx: &Ctx, lhs: &Type, rhs: &Type) -> SubtypeOutcome {
    run_query(ctx, lhs, rhs, true)
}

fn run_query(ctx: &Ctx, lhs: &Type, rhs: &Type, keep_tree: bool) -> SubtypeOutcome {
    let mut engine = Engine::new(keep_tree);
    let mut nodes = Vec::new();
    let holds = engine.subtype(ctx, lhs, rhs, &mut nodes);
    let tree = if keep_tree {
        match nodes.len() {
            0 => Some(TraceNode {
                rule: "(no rule applies)",
                judgment: format!("{lhs} <: {rhs}"),
                holds,
                children: Vec::new(),
            }),
            1 => nodes.pop(),
            _ => Some(TraceNode {
                rule: "(alternatives)",
                judgment: format!("{lhs} <: {rhs}"),
                holds,
                children: nodes,
            }),
        }
    } else {
        None
    };
    SubtypeOutcome {
        holds,
        trace: DerivationTrace {
            steps: engine.steps,
            tree,
        },
    }
}

/// Subtyping between two type members with the raw judgment.
pub fn member_subtype(ctx: &Ctx, m1: &RefinementMember, m2: &RefinementMember) -> bool {
    let mut engine = Engine::new(false);
    let mut nodes = Vec::new();
    engine.member(ctx, m1, m2, &mut nodes)
}

/// Member subtyping with the inner type comparisons routed through the
/// expansion wrapper; used by typechecking obligations.
pub fn member_subtype_checked(ctx: &Ctx, m1: &RefinementMember, m2: &RefinementMember) -> bool {
    if m1.label != m2.label {
        return false;
    }
    match (m1.bound, m2.bound) {
        (Bound::Eq, Bound::Eq) => {
            check(ctx, &m1.ty, &m2.ty).holds && check(ctx, &m2.ty, &m1.ty).holds
        }
        (Bound::Le | Bound::Eq, Bound::Le) => check(ctx, &m1.ty, &m2.ty).holds,
        (Bound::Ge | Bound::Eq, Bound::Ge) => check(ctx, &m2.ty, &m1.ty).holds,
        _ => false,
    }
}

/// Structural subtyping of refinements: every member on the right must be
/// matched on the left.
pub fn refinement_subtype(ctx: &Ctx, r1: &Refinement, r2: &Refinement) -> bool {
    let mut engine = Engine::new(false);
    let mut nodes = Vec::new();
    engine.refinement(ctx, r1, r2, &mut nodes)
}

/// Width/depth subtyping of member declaration lists: type members by
/// member subtyping, fields covariant, methods contravariant in the
/// parameter and covariant in the result.
pub fn decl_list_subtype(ctx: &Ctx, lhs: &[MemberDecl], rhs: &[MemberDecl]) -> bool {
    let mut engine = Engine::new(false);
    let mut nodes = Vec::new();
    engine.decl_list(ctx, lhs, rhs, &mut nodes)
}

/// Maximum refinement nesting depth of a type.
pub fn depth(ty: &Type) -> u32 {
    match ty {
        Type::Top | Type::Bottom => 0,
        Type::Refined { refinement, .. } => refinement
            .members
            .iter()
            .map(|m| 1 + depth(&m.ty))
            .max()
            .unwrap_or(0),
    }
}

/// One step of expansion of a base type: named types pull in all their type
/// members, with the definition's self placeholder avoided exactly and the
/// result expanded at the next depth. Members whose avoidance fails
/// (self-referential bounds) are left un-expanded.
pub fn expand1(ctx: &Ctx, base: &BaseType, depth_budget: u32) -> Type {
    match base {
        BaseType::Sel(..) => Type::Refined {
            base: base.clone(),
            refinement: Refinement::empty(),
        },
        BaseType::Named(n) => {
            let Some(def) = ctx.defs.get(n) else {
                return Type::Refined {
                    base: base.clone(),
                    refinement: Refinement::empty(),
                };
            };
            let placeholder = VarName::new("$z");
            let placeholder_path = crate::syntax::Path::Var(placeholder.clone());
            let inner = ctx.pushed(placeholder.clone(), Type::named(n.as_str()));
            let mut members = Vec::new();
            for decl in def.type_members() {
                let named_ty = Type::named(n.as_str());
                let Ok(MemberDecl::TypeMember(TypeMemberDecl {
                    bound, ty, label, ..
                })) = lookup_decl(&inner, &named_ty, &placeholder_path, &decl.label)
                else {
                    continue;
                };
                match avoid(
                    &inner,
                    &ty,
                    &placeholder,
                    Bound::Eq,
                    inner.options.avoid_fuel,
                ) {
                    // The pulled member expands at the next depth, exactly
                    // like an explicit refinement member at the same
                    // level; otherwise the two sides of a query would
                    // unfold unevenly and exact members could spuriously
                    // fail their mutual check.
                    Ok(result) => members.push(RefinementMember {
                        label,
                        bound,
                        ty: expand(ctx, &result.ty, depth_budget.saturating_sub(1)),
                    }),
                    Err(_) => {
                        // Left un-expanded; the raw rules still apply to it.
                    }
                }
            }
            Type::Refined {
                base: base.clone(),
                refinement: Refinement::new(members),
            }
        }
    }
}

/// Unfold a type's members to depth `d`, merging explicit refinements over
/// the expanded definition members.
pub fn expand(ctx: &Ctx, ty: &Type, d: u32) -> Type {
    if d == 0 {
        return ty.clone();
    }
    match ty {
        Type::Top | Type::Bottom => ty.clone(),
        Type::Refined { base, refinement } => {
            let expanded_members: Vec<RefinementMember> = refinement
                .members
                .iter()
                .map(|m| RefinementMember {
                    label: m.label.clone(),
                    bound: m.bound,
                    ty: expand(ctx, &m.ty, d - 1),
                })
                .collect();
            expand1(ctx, base, d).refined_with(&Refinement::new(expanded_members))
        }
    }
}

/// The expansion wrapper: unfold both sides to their common depth, then ask
/// the raw judgment. With expansion disabled this is the raw judgment
/// itself.
pub fn check(ctx: &Ctx, lhs: &Type, rhs: &Type) -> SubtypeOutcome {
    if !ctx.options.expansion {
        return is_subtype(ctx, lhs, rhs);
    }
    let d = depth(lhs).max(depth(rhs));
    let lhs_expanded = expand(ctx, lhs, d);
    let rhs_expanded = expand(ctx, rhs, d);
    is_subtype(ctx, &lhs_expanded, &rhs_expanded)
}

/// Traced variant of `check` for error reporting.
pub fn check_traced(ctx: &Ctx, lhs: &Type, rhs: &Type) -> SubtypeOutcome {
    if !ctx.options.expansion {
        return is_subtype_traced(ctx, lhs, rhs);
    }
    let d = depth(lhs).max(depth(rhs));
    let lhs_expanded = expand(ctx, lhs, d);
    let rhs_expanded = expand(ctx, rhs, d);
    is_subtype_traced(ctx, &lhs_expanded, &rhs_expanded)
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("no measure recorded for `{0}`")]
    Unmeasured(String),
    #[error("path type `{0}` does not expose to a named type")]
    UnresolvedPath(Type),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// Potential energy of a base type: zero for top and bottom, the recorded
/// energy for names, and the product-plus form for path members. Purely a
/// diagnostic; never consulted by the subtype rules.
pub fn base_energy(
    ctx: &Ctx,
    measures: &MeasureTable,
    base: &BaseType,
) -> Result<u64, EnergyError> {
    match base {
        BaseType::Named(n) => measures
            .energy_of_name(n)
            .ok_or_else(|| EnergyError::Unmeasured(n.to_string())),
        BaseType::Sel(p, t) => {
            let ty_p = type_path(ctx, p)?;
            let exposed = expose(ctx, &ty_p);
            let Type::Refined {
                base: BaseType::Named(n),
                ..
            } = &exposed
            else {
                return Err(EnergyError::UnresolvedPath(Type::Refined {
                    base: base.clone(),
                    refinement: Refinement::empty(),
                }));
            };
            let m = measures
                .m_of(n, t)
                .ok_or_else(|| EnergyError::Unmeasured(format!("{n}::{t}")))?;
            let a = measures
                .a_of(n, t)
                .ok_or_else(|| EnergyError::Unmeasured(format!("{n}::{t}")))?;
            let owner_energy = type_energy(ctx, measures, &exposed)?;
            Ok(owner_energy.saturating_mul(m).saturating_add(a))
        }
    }
}

/// Energy of a type: the sum over every base type appearing in it.
pub fn type_energy(ctx: &Ctx, measures: &MeasureTable, ty: &Type) -> Result<u64, EnergyError> {
    match ty {
        Type::Top | Type::Bottom => Ok(0),
        Type::Refined { base, refinement } => {
            let mut total = base_energy(ctx, measures, base)?;
            for m in &refinement.members {
                total = total.saturating_add(type_energy(ctx, measures, &m.ty)?);
            }
            Ok(total)
        }
    }
}
