//! Type normalization: declaration lookup, exposure of path-dependent types
//! to their upper bounds, single-step upcasting and downcasting, the bound
//! join/product algebra, fuel-limited avoidance of local bindings, and rank
//! bookkeeping for environments.
//!
//! Exposure here is the eager, environment-at-a-time algorithm: a type is
//! exposed against an environment whose earlier entries are themselves
//! exposed on demand and cached for the duration of the call. The
//! declarative one-judgment-at-a-time form lives in the oracle module and
//! is only used to cross-check this one.

use std::collections::HashMap;

use thiserror::Error;

use crate::syntax::{
    BaseType, Bound, DefTable, FreeVars, LocId, MemberDecl, MemberName, Path, Refinement,
    RefinementMember, StoreEnv, SubtypeTable, Type, VarEnv, VarName,
};

/// Tunables threaded through checking: whether subtype obligations go
/// through the expansion pre-pass, and how many unfoldings avoidance may
/// spend.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub expansion: bool,
    pub avoid_fuel: u32,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            expansion: true,
            avoid_fuel: 16,
        }
    }
}

/// The full judgment context: definitions, declared subtyping, variable
/// typing, and location typing.
#[derive(Clone, Debug)]
pub struct Ctx<'a> {
    pub defs: &'a DefTable,
    pub subs: &'a SubtypeTable,
    pub vars: VarEnv,
    pub store: StoreEnv,
    pub options: CheckOptions,
}

impl<'a> Ctx<'a> {
    pub fn new(defs: &'a DefTable, subs: &'a SubtypeTable) -> Self {
        Ctx {
            defs,
            subs,
            vars: VarEnv::new(),
            store: StoreEnv::new(),
            options: CheckOptions::default(),
        }
    }

    pub fn with_store(mut self, store: StoreEnv) -> Self {
        self.store = store;
        self
    }

    pub fn with_options(mut self, options: CheckOptions) -> Self {
        self.options = options;
        self
    }

    /// A copy of this context with one extra variable binding.
    pub fn pushed(&self, x: VarName, ty: Type) -> Ctx<'a> {
        let mut out = self.clone();
        out.vars.push(x, ty);
        out
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum NormalizeError {
    #[error("`{0}` is not bound in the current context")]
    UnboundPath(Path),
    #[error("type `{ty}` has no member `{label}`")]
    NoSuchMember { ty: Type, label: MemberName },
    #[error("cannot look up `{label}` on the path-based type `{ty}` before exposing it")]
    LookupOnPathBase { ty: Type, label: MemberName },
    #[error("avoidance of `{var}` ran out of fuel after {fuel} unfoldings")]
    FuelExhausted { var: VarName, fuel: u32 },
    #[error("bounds `{0}` and `{1}` have no common direction")]
    IncompatibleBounds(Bound, Bound),
}

/// Type of a path, straight from the context.
pub fn type_path(ctx: &Ctx, p: &Path) -> Result<Type, NormalizeError> {
    match p {
        Path::Var(x) => ctx
            .vars
            .lookup(x)
            .cloned()
            .ok_or_else(|| NormalizeError::UnboundPath(p.clone())),
        Path::Loc(l) => ctx
            .store
            .get(*l)
            .cloned()
            .ok_or_else(|| NormalizeError::UnboundPath(p.clone())),
    }
}

/// Find the declaration of `label` in `ty`, to be used at path `p`.
/// Type members overridden in the refinement are returned as written;
/// anything else comes from the named definition with its self variable
/// substituted by `p`.
pub fn lookup_decl(
    ctx: &Ctx,
    ty: &Type,
    p: &Path,
    label: &MemberName,
) -> Result<MemberDecl, NormalizeError> {
    use crate::syntax::{ShapeMark, Subst, TypeMemberDecl};
    let Type::Refined { base, refinement } = ty else {
        return Err(NormalizeError::NoSuchMember {
            ty: ty.clone(),
            label: label.clone(),
        });
    };
    if let Some(m) = refinement.get(label) {
        return Ok(MemberDecl::TypeMember(TypeMemberDecl {
            mark: ShapeMark::Material,
            label: m.label.clone(),
            bound: m.bound,
            ty: m.ty.clone(),
        }));
    }
    match base {
        BaseType::Named(n) => {
            let def = ctx
                .defs
                .get(n)
                .ok_or_else(|| NormalizeError::NoSuchMember {
                    ty: ty.clone(),
                    label: label.clone(),
                })?;
            let member = def
                .member(label)
                .ok_or_else(|| NormalizeError::NoSuchMember {
                    ty: ty.clone(),
                    label: label.clone(),
                })?;
            Ok(member.subst(&def.self_var, p))
        }
        BaseType::Sel(..) => Err(NormalizeError::LookupOnPathBase {
            ty: ty.clone(),
            label: label.clone(),
        }),
    }
}

/// Guard against runaway unfolding when callers feed improperly separated
/// contexts; never reached on programs that pass the separation checks.
const EXPOSE_STEP_GUARD: u64 = 100_000;

struct Exposer<'c, 'a> {
    ctx: &'c Ctx<'a>,
    /// Exposed types of environment entries, computed on demand.
    var_cache: HashMap<VarName, Type>,
    loc_cache: HashMap<LocId, Type>,
    /// When false, the environment is taken as already exposed.
    expose_env_entries: bool,
    steps: u64,
}

impl<'c, 'a> Exposer<'c, 'a> {
    fn new(ctx: &'c Ctx<'a>, expose_env_entries: bool) -> Self {
        Exposer {
            ctx,
            var_cache: HashMap::new(),
            loc_cache: HashMap::new(),
            expose_env_entries,
            steps: 0,
        }
    }

    fn exposed_path_type(&mut self, p: &Path) -> Option<Type> {
        let raw = type_path(self.ctx, p).ok()?;
        if !self.expose_env_entries {
            return Some(raw);
        }
        match p {
            Path::Var(x) => {
                if let Some(t) = self.var_cache.get(x) {
                    return Some(t.clone());
                }
                let exposed = self.expose1(&raw);
                self.var_cache.insert(x.clone(), exposed.clone());
                Some(exposed)
            }
            Path::Loc(l) => {
                if let Some(t) = self.loc_cache.get(l) {
                    return Some(t.clone());
                }
                let exposed = self.expose1(&raw);
                self.loc_cache.insert(*l, exposed.clone());
                Some(exposed)
            }
        }
    }

    fn expose1(&mut self, ty: &Type) -> Type {
        let Type::Refined {
            base: BaseType::Sel(p, t),
            refinement,
        } = ty
        else {
            return ty.clone();
        };
        if self.steps >= EXPOSE_STEP_GUARD {
            return ty.clone();
        }
        let Some(owner_ty) = self.exposed_path_type(p) else {
            return ty.clone();
        };
        match lookup_decl(self.ctx, &owner_ty, p, t) {
            Ok(MemberDecl::TypeMember(d)) if matches!(d.bound, Bound::Le | Bound::Eq) => {
                self.steps += 1;
                self.expose1(&d.ty).refined_with(refinement)
            }
            _ => ty.clone(),
        }
    }
}

/// Normalize a type to a supertype by unfolding upper-bounded path members
/// until the head is a name, top, or bottom. Lower-bounded or unresolvable
/// path members are left as-is. Total on well-formed contexts.
pub fn expose(ctx: &Ctx, ty: &Type) -> Type {
    Exposer::new(ctx, true).expose1(ty)
}

/// Exposure against an environment that is already exposed (the inner loop
/// of the algorithm); returns the result and the number of unfoldings.
pub fn expose1(ctx: &Ctx, ty: &Type) -> (Type, u64) {
    let mut e = Exposer::new(ctx, false);
    let out = e.expose1(ty);
    (out, e.steps)
}

/// Expose every entry of the variable environment, left to right, each
/// against the already-exposed prefix.
pub fn expose_env(ctx: &Ctx) -> VarEnv {
    let mut acc = Ctx {
        defs: ctx.defs,
        subs: ctx.subs,
        vars: VarEnv::new(),
        store: ctx.store.clone(),
        options: ctx.options,
    };
    for (x, ty) in ctx.vars.iter() {
        let (exposed, _) = expose1(&acc, ty);
        acc.vars.push(x.clone(), exposed);
    }
    acc.vars
}

/// One unfolding step through an upper or exact bound; `None` when no step
/// applies.
pub fn upcast_step(ctx: &Ctx, ty: &Type) -> Option<Type> {
    let Type::Refined {
        base: BaseType::Sel(p, t),
        refinement,
    } = ty
    else {
        return None;
    };
    let owner_ty = Exposer::new(ctx, true).exposed_path_type(p)?;
    match lookup_decl(ctx, &owner_ty, p, t) {
        Ok(MemberDecl::TypeMember(d)) if matches!(d.bound, Bound::Le | Bound::Eq) => {
            Some(d.ty.refined_with(refinement))
        }
        _ => None,
    }
}

/// One unfolding step through a lower or exact bound; `None` when no step
/// applies.
pub fn downcast_step(ctx: &Ctx, ty: &Type) -> Option<Type> {
    let Type::Refined {
        base: BaseType::Sel(p, t),
        refinement,
    } = ty
    else {
        return None;
    };
    let owner_ty = Exposer::new(ctx, true).exposed_path_type(p)?;
    match lookup_decl(ctx, &owner_ty, p, t) {
        Ok(MemberDecl::TypeMember(d)) if matches!(d.bound, Bound::Ge | Bound::Eq) => {
            Some(d.ty.refined_with(refinement))
        }
        _ => None,
    }
}

/// Total upcast: the unfolded type, or the input unchanged.
pub fn upcast(ctx: &Ctx, ty: &Type) -> Type {
    upcast_step(ctx, ty).unwrap_or_else(|| ty.clone())
}

/// Total downcast: the unfolded type, or the input unchanged.
pub fn downcast(ctx: &Ctx, ty: &Type) -> Type {
    downcast_step(ctx, ty).unwrap_or_else(|| ty.clone())
}

/// Union of two bound directions; partial.
pub fn bound_join(b1: Bound, b2: Bound) -> Result<Bound, NormalizeError> {
    match (b1, b2) {
        (Bound::Eq, b) => Ok(b),
        (b, Bound::Eq) => Ok(b),
        (Bound::Le, Bound::Le) => Ok(Bound::Le),
        (Bound::Ge, Bound::Ge) => Ok(Bound::Ge),
        (a, b) => Err(NormalizeError::IncompatibleBounds(a, b)),
    }
}

/// Composition of a refinement member's bound under an enclosing bound;
/// total, with exactness as the absorbing element on the left.
pub fn bound_product(b1: Bound, b2: Bound) -> Bound {
    match (b1, b2) {
        (Bound::Eq, _) => Bound::Eq,
        (b, Bound::Eq) => b,
        (Bound::Le, Bound::Le) => Bound::Le,
        (Bound::Ge, Bound::Ge) => Bound::Le,
        (Bound::Le, Bound::Ge) => Bound::Ge,
        (Bound::Ge, Bound::Le) => Bound::Ge,
    }
}

/// Result of avoidance: a type free of the avoided variable, and the
/// direction in which it relates to the input (`Eq` when equivalent).
#[derive(Clone, Debug, PartialEq)]
pub struct AvoidResult {
    pub ty: Type,
    pub achieved: Bound,
}

fn compatible(achieved: Bound, want: Bound) -> bool {
    achieved == Bound::Eq || achieved == want
}

struct Avoider<'c, 'a> {
    ctx: &'c Ctx<'a>,
    var: VarName,
    fuel_left: u32,
    fuel_initial: u32,
}

impl<'c, 'a> Avoider<'c, 'a> {
    fn combine(&self, a: Bound, b: Bound) -> Result<Bound, NormalizeError> {
        if a == Bound::Eq {
            Ok(b)
        } else if b == Bound::Eq || a == b {
            Ok(a)
        } else {
            Err(NormalizeError::IncompatibleBounds(a, b))
        }
    }

    fn avoid_type(&mut self, ty: &Type, want: Bound) -> Result<(Type, Bound), NormalizeError> {
        let Type::Refined { base, refinement } = ty else {
            return Ok((ty.clone(), Bound::Eq));
        };
        let (base_ty, base_bound) = self.avoid_base(base, want)?;
        let mut overall = base_bound;
        let mut members = Vec::with_capacity(refinement.members.len());
        for m in &refinement.members {
            let member_want = bound_product(m.bound, want);
            let (mty, mb) = self.avoid_type(&m.ty, member_want)?;
            if !compatible(mb, member_want) {
                return Err(NormalizeError::IncompatibleBounds(mb, member_want));
            }
            if mb != Bound::Eq {
                overall = self.combine(overall, want)?;
            }
            members.push(RefinementMember {
                label: m.label.clone(),
                bound: m.bound,
                ty: mty,
            });
        }
        Ok((base_ty.refined_with(&Refinement::new(members)), overall))
    }

    fn avoid_base(
        &mut self,
        base: &BaseType,
        want: Bound,
    ) -> Result<(Type, Bound), NormalizeError> {
        let as_type = Type::Refined {
            base: base.clone(),
            refinement: Refinement::empty(),
        };
        match base {
            BaseType::Named(_) => Ok((as_type, Bound::Eq)),
            BaseType::Sel(p, t) => {
                if p.root_var() != Some(&self.var) {
                    return Ok((as_type, Bound::Eq));
                }
                if self.fuel_left == 0 {
                    return Err(NormalizeError::FuelExhausted {
                        var: self.var.clone(),
                        fuel: self.fuel_initial,
                    });
                }
                self.fuel_left -= 1;
                let ty_x = type_path(self.ctx, p)?;
                let exposed = expose(self.ctx, &ty_x);
                let member = lookup_decl(self.ctx, &exposed, p, t)?;
                let MemberDecl::TypeMember(d) = member else {
                    return Err(NormalizeError::NoSuchMember {
                        ty: exposed,
                        label: t.clone(),
                    });
                };
                // A one-sided member bound pins the direction of the whole
                // unfolding; refuse up front when the caller needs a
                // different one.
                let inner_want = match d.bound {
                    Bound::Eq => want,
                    directed => {
                        if !compatible(directed, want) {
                            return Err(NormalizeError::IncompatibleBounds(directed, want));
                        }
                        directed
                    }
                };
                let (inner, rec_bound) = self.avoid_type(&d.ty, inner_want)?;
                let joined = bound_join(d.bound, rec_bound)?;
                Ok((inner, joined))
            }
        }
    }
}

/// Rewrite `ty` so it no longer mentions `x`, unfolding path members rooted
/// at `x` through their bounds. `want` is the direction the caller can
/// accept (`Le`: a supertype is fine); each unfolding consumes one unit of
/// fuel.
pub fn avoid(
    ctx: &Ctx,
    ty: &Type,
    x: &VarName,
    want: Bound,
    fuel: u32,
) -> Result<AvoidResult, NormalizeError> {
    let mut avoider = Avoider {
        ctx,
        var: x.clone(),
        fuel_left: fuel,
        fuel_initial: fuel,
    };
    let (out, achieved) = avoider.avoid_type(ty, want)?;
    if !compatible(achieved, want) {
        return Err(NormalizeError::IncompatibleBounds(achieved, want));
    }
    debug_assert!(!out.mentions_var(x));
    Ok(AvoidResult { ty: out, achieved })
}

/// 1-based position of a variable; locations rank zero.
pub fn rank_of_path(env: &VarEnv, p: &Path) -> Result<u32, NormalizeError> {
    match p {
        Path::Var(x) => env
            .position(x)
            .map(|i| i as u32)
            .ok_or_else(|| NormalizeError::UnboundPath(p.clone())),
        Path::Loc(_) => Ok(0),
    }
}

/// Rank of a type: the maximum rank of its free variables, zero if closed.
pub fn rank_of_type(env: &VarEnv, ty: &Type) -> Result<u32, NormalizeError> {
    let mut max = 0;
    for x in ty.free_vars() {
        let r = rank_of_path(env, &Path::Var(x))?;
        max = max.max(r);
    }
    Ok(max)
}

/// Rank of the outermost constructor: zero for names, top, and bottom; the
/// rank of the path for a path-dependent type.
pub fn head_rank(env: &VarEnv, ty: &Type) -> Result<u32, NormalizeError> {
    match ty {
        Type::Refined {
            base: BaseType::Sel(p, _),
            ..
        } => rank_of_path(env, p),
        _ => Ok(0),
    }
}

/// An environment is well-formed when its names are distinct and every
/// entry mentions only variables that precede it.
pub fn env_well_formed(env: &VarEnv) -> bool {
    let mut seen: Vec<&VarName> = Vec::new();
    for (x, ty) in env.iter() {
        if seen.contains(&x) {
            return false;
        }
        for free in ty.free_vars() {
            if !seen.contains(&&free) {
                return false;
            }
        }
        seen.push(x);
    }
    true
}
