//! Independent checkers and generators for the test suite and the `fuzz`
//! command: a bounded brute-force enumeration of subtype derivations, a
//! declarative reference implementation of exposure, and a seeded
//! generator of properly separated programs and queries.
//!
//! The enumerator deliberately re-implements the subtyping rules as a
//! naive three-valued search so that it shares no code path with the
//! engine it cross-checks (they share only the context lookups and casts).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::normalize::{downcast_step, lookup_decl, type_path, upcast_step, Ctx};
use crate::subtype::is_subtype;
use crate::syntax::{
    BaseType, Bound, DefTable, Expr, ExprKind, FreeVars, MemberDecl, MemberName, NamedTypeDecl,
    ObjMemberDefn, Path, Program, Refinement, RefinementMember, ShapeMark, Span, SubtypeDecl,
    SubtypeTable, TopDecl, Type, TypeMemberDecl, TypeName, VarEnv, VarName,
};

/// Verdict of the bounded enumeration. `Holds` and `Refuted` are definitive
/// (refutation never depends on the budget); `Unknown` means the budget ran
/// out first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Holds(u32),
    Refuted(u32),
    Unknown,
}

impl OracleVerdict {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            OracleVerdict::Holds(_) => Some(true),
            OracleVerdict::Refuted(_) => Some(false),
            OracleVerdict::Unknown => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tri {
    Yes,
    No,
    Maybe,
}

impl Tri {
    fn or(self, other: impl FnOnce() -> Tri) -> Tri {
        match self {
            Tri::Yes => Tri::Yes,
            Tri::No => other(),
            Tri::Maybe => match other() {
                Tri::Yes => Tri::Yes,
                _ => Tri::Maybe,
            },
        }
    }

    fn and(self, other: impl FnOnce() -> Tri) -> Tri {
        match self {
            Tri::No => Tri::No,
            Tri::Yes => other(),
            Tri::Maybe => match other() {
                Tri::No => Tri::No,
                _ => Tri::Maybe,
            },
        }
    }
}

fn derivable(ctx: &Ctx, lhs: &Type, rhs: &Type, height: u32) -> Tri {
    if height == 0 {
        return Tri::Maybe;
    }
    let mut verdict = Tri::No;

    if matches!(rhs, Type::Top) {
        return Tri::Yes;
    }
    if matches!(lhs, Type::Bottom) {
        return Tri::Yes;
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
        if lb == rb {
            verdict = verdict.or(|| refinement_derivable(ctx, lr, rr, height - 1));
        }
        if let (BaseType::Named(n), BaseType::Named(_)) = (lb, rb) {
            for entry in ctx.subs.entries_for(n) {
                verdict = verdict.or(|| {
                    refinement_derivable(ctx, lr, &entry.lhs_refinement, height - 1).and(|| {
                        let lifted = Type::Refined {
                            base: BaseType::Named(entry.rhs_name.clone()),
                            refinement: lr.clone(),
                        };
                        derivable(ctx, &lifted, rhs, height - 1)
                    })
                });
            }
        }
    }
    if matches!(
        lhs,
        Type::Refined {
            base: BaseType::Sel(..),
            ..
        }
    ) {
        if let Some(up) = upcast_step(ctx, lhs) {
            verdict = verdict.or(|| derivable(ctx, &up, rhs, height - 1));
        }
    }
    if matches!(
        rhs,
        Type::Refined {
            base: BaseType::Sel(..),
            ..
        }
    ) {
        if let Some(down) = downcast_step(ctx, rhs) {
            verdict = verdict.or(|| derivable(ctx, lhs, &down, height - 1));
        }
    }
    verdict
}

fn member_derivable(ctx: &Ctx, m1: &RefinementMember, m2: &RefinementMember, height: u32) -> Tri {
    if m1.label != m2.label {
        return Tri::No;
    }
    if height == 0 {
        return Tri::Maybe;
    }
    match (m1.bound, m2.bound) {
        (Bound::Eq, Bound::Eq) => derivable(ctx, &m1.ty, &m2.ty, height - 1)
            .and(|| derivable(ctx, &m2.ty, &m1.ty, height - 1)),
        (Bound::Le | Bound::Eq, Bound::Le) => derivable(ctx, &m1.ty, &m2.ty, height - 1),
        (Bound::Ge | Bound::Eq, Bound::Ge) => derivable(ctx, &m2.ty, &m1.ty, height - 1),
        _ => Tri::No,
    }
}

fn refinement_derivable(ctx: &Ctx, r1: &Refinement, r2: &Refinement, height: u32) -> Tri {
    if r2.is_empty() {
        return Tri::Yes;
    }
    if height == 0 {
        return Tri::Maybe;
    }
    let mut verdict = Tri::Yes;
    for m2 in &r2.members {
        verdict = verdict.and(|| match r1.get(&m2.label) {
            Some(m1) => member_derivable(ctx, m1, m2, height - 1),
            None => Tri::No,
        });
        if verdict == Tri::No {
            break;
        }
    }
    verdict
}

/// Enumerate subtype derivations up to the given height by iterative
/// deepening. A definitive refutation inside the budget is reported as
/// `Refuted`; hitting the budget everywhere is `Unknown`.
pub fn enumerate_subtype(ctx: &Ctx, lhs: &Type, rhs: &Type, max_depth: u32) -> OracleVerdict {
    for h in 1..=max_depth {
        match derivable(ctx, lhs, rhs, h) {
            Tri::Yes => return OracleVerdict::Holds(h),
            Tri::No => return OracleVerdict::Refuted(h),
            Tri::Maybe => {}
        }
    }
    OracleVerdict::Unknown
}

/// Declarative exposure, written exactly as the one-judgment-at-a-time
/// rules read: the path's type is looked up and recursively exposed on
/// every unfolding. Used only to cross-check the eager algorithm.
pub fn judgment_expose(ctx: &Ctx, ty: &Type) -> Type {
    let Type::Refined {
        base: BaseType::Sel(p, t),
        refinement,
    } = ty
    else {
        return ty.clone();
    };
    let Ok(p_ty) = type_path(ctx, p) else {
        return ty.clone();
    };
    let exposed_p = judgment_expose(ctx, &p_ty);
    match lookup_decl(ctx, &exposed_p, p, t) {
        Ok(MemberDecl::TypeMember(d)) if matches!(d.bound, Bound::Le | Bound::Eq) => {
            judgment_expose(ctx, &d.ty).refined_with(refinement)
        }
        _ => ty.clone(),
    }
}

/// Knobs for the program generator. Generation is deterministic in the
/// seed, and every generated program passes both separation checks by
/// construction.
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_names: u32,
    pub max_members_per_name: u32,
    pub max_refinement_depth: u32,
    pub shape_probability: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_names: 6,
            max_members_per_name: 3,
            max_refinement_depth: 2,
            shape_probability: 0.3,
            seed: 0,
        }
    }
}

struct NameInfo {
    name: TypeName,
    mark: ShapeMark,
    /// Labels and bounds of the type members generated so far.
    type_members: Vec<(MemberName, Bound, bool)>, // (label, bound, closed shape-free bound type)
    newable: bool,
}

struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    names: Vec<NameInfo>,
    decls: Vec<TopDecl>,
}

impl Generator {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    fn pick<'v, T>(&mut self, items: &'v [T]) -> Option<&'v T> {
        if items.is_empty() {
            None
        } else {
            let i = self.rng.gen_range(0..items.len());
            Some(&items[i])
        }
    }

    fn material_indices(&self, up_to: usize) -> Vec<usize> {
        (0..up_to)
            .filter(|&i| self.names[i].mark == ShapeMark::Material)
            .collect()
    }

    fn shape_indices(&self, up_to: usize) -> Vec<usize> {
        (0..up_to)
            .filter(|&i| self.names[i].mark == ShapeMark::Shape)
            .collect()
    }

    /// A closed, shape-free type usable anywhere, including under lower
    /// bounds: top, bottom, or an earlier material name (optionally with a
    /// tightening refinement).
    fn gen_lower_type(&mut self, owner: usize, depth: u32) -> Type {
        let materials = self.material_indices(owner + 1);
        let roll = self.rng.gen_range(0u32..10);
        match roll {
            0 => Type::Top,
            1 => Type::Bottom,
            _ => match self.pick(&materials).copied() {
                None => {
                    if self.chance(0.5) {
                        Type::Top
                    } else {
                        Type::Bottom
                    }
                }
                Some(i) => {
                    let base = BaseType::Named(self.names[i].name.clone());
                    // The owner's own declaration is still being built, so
                    // self-name references stay bare.
                    let refinement = if i != owner && depth > 0 && self.chance(0.4) {
                        self.gen_tighten_refinement(i, depth - 1)
                    } else {
                        Refinement::empty()
                    };
                    Type::Refined { base, refinement }
                }
            },
        }
    }

    /// A refinement that rebinds some of name `i`'s closed-bounded members
    /// exactly at their declared bound types; always valid against the
    /// declaration.
    fn gen_tighten_refinement(&mut self, i: usize, _depth: u32) -> Refinement {
        let candidates: Vec<(MemberName, Bound)> = self.names[i]
            .type_members
            .iter()
            .filter(|(_, _, closed)| *closed)
            .map(|(l, b, _)| (l.clone(), *b))
            .collect();
        let mut members = Vec::new();
        for (label, bound) in candidates {
            if !self.chance(0.5) {
                continue;
            }
            let declared = self.declared_bound_type(i, &label);
            let Some(declared) = declared else { continue };
            let new_bound = if bound == Bound::Le && self.chance(0.5) {
                Bound::Eq
            } else {
                bound
            };
            members.push(RefinementMember {
                label,
                bound: new_bound,
                ty: declared,
            });
        }
        Refinement::new(members)
    }

    fn declared_bound_type(&self, i: usize, label: &MemberName) -> Option<Type> {
        let TopDecl::Name(decl) = self.decl_of(i) else {
            return None;
        };
        decl.members.iter().find_map(|m| match m {
            MemberDecl::TypeMember(d) if &d.label == label => Some(d.ty.clone()),
            _ => None,
        })
    }

    fn decl_of(&self, i: usize) -> &TopDecl {
        // Name declarations are pushed in index order, interleaved with
        // subtype declarations; scan for the i-th name.
        self.decls
            .iter()
            .filter(|d| matches!(d, TopDecl::Name(_)))
            .nth(i)
            .expect("name declared")
    }

    /// Bound type for a new upper-bounded member `t_k` of name `owner`.
    /// May use shapes, including the guarded F-bound pattern where the
    /// shape's lower-bounded member is pinned to a sibling of the owner.
    fn gen_upper_type(&mut self, owner: usize, current_member: usize, depth: u32) -> Type {
        let shapes = self.shape_indices(owner);
        if !shapes.is_empty() && self.chance(0.5) {
            let s = *self.pick(&shapes).unwrap();
            let base = BaseType::Named(self.names[s].name.clone());
            // Refine the shape's bottom-bounded members; guarded by the
            // shape label, the pinned type may reference any sibling,
            // including the member being declared.
            let mut members = Vec::new();
            if depth > 0 {
                let pins: Vec<MemberName> = self.names[s]
                    .type_members
                    .iter()
                    .filter(|(_, b, _)| *b == Bound::Ge)
                    .map(|(l, _, _)| l.clone())
                    .collect();
                for label in pins {
                    if !self.chance(0.7) {
                        continue;
                    }
                    let ty = if self.chance(0.5) && !self.names[owner].type_members.is_empty() {
                        let m = self.rng.gen_range(
                            0..=current_member
                                .min(self.names[owner].type_members.len().saturating_sub(1)),
                        );
                        let target = self.names[owner].type_members[m].0.clone();
                        Type::sel(Path::var("z"), target.as_str())
                    } else if self.chance(0.5) {
                        Type::sel(Path::var("z"), format!("t{current_member}"))
                    } else {
                        self.gen_lower_type(owner, depth - 1)
                    };
                    members.push(RefinementMember {
                        label,
                        bound: Bound::Eq,
                        ty,
                    });
                }
            }
            return Type::Refined {
                base,
                refinement: Refinement::new(members),
            };
        }
        // Otherwise an ordinary material-world type, or an earlier sibling
        // member of the same name (an unguarded but acyclic dependency).
        let earlier = current_member;
        if earlier > 0 && self.chance(0.25) {
            let m = self.rng.gen_range(0..earlier);
            let target = self.names[owner].type_members[m].0.clone();
            return Type::sel(Path::var("z"), target.as_str());
        }
        self.gen_lower_type(owner, depth)
    }

    fn gen_name(&mut self, i: usize) {
        let mark = if self.chance(self.cfg.shape_probability) {
            ShapeMark::Shape
        } else {
            ShapeMark::Material
        };
        let name = TypeName::new(format!("N{i}"));
        self.names.push(NameInfo {
            name: name.clone(),
            mark,
            type_members: Vec::new(),
            newable: mark == ShapeMark::Material,
        });

        // Maybe subtype an earlier declaration with a compatible mark;
        // members are inherited so the relation is structurally valid.
        let candidates: Vec<usize> = match mark {
            ShapeMark::Shape => self.shape_indices(i),
            ShapeMark::Material => (0..i).collect(),
        };
        let supertype = if !candidates.is_empty() && self.chance(0.5) {
            self.pick(&candidates).copied()
        } else {
            None
        };

        let mut members: Vec<MemberDecl> = Vec::new();
        if let Some(j) = supertype {
            let TopDecl::Name(super_decl) = self.decl_of(j).clone() else {
                unreachable!()
            };
            members.extend(super_decl.members.iter().cloned());
            let inherited: Vec<(MemberName, Bound, bool)> = self.names[j].type_members.clone();
            self.names[i].type_members = inherited;
            self.names[i].newable =
                self.names[i].newable && self.names[j].newable && mark == ShapeMark::Material;
        }

        let extra = self.rng.gen_range(0..=self.cfg.max_members_per_name);
        for _ in 0..extra {
            let k = self.names[i].type_members.len();
            let label = MemberName::new(format!("t{k}"));
            if mark == ShapeMark::Shape {
                // The F-bound pattern: shapes carry bottom-bounded members
                // for their subtypes to pin.
                members.push(MemberDecl::TypeMember(TypeMemberDecl {
                    mark: ShapeMark::Material,
                    label: label.clone(),
                    bound: Bound::Ge,
                    ty: Type::Bottom,
                }));
                self.names[i].type_members.push((label, Bound::Ge, true));
                continue;
            }
            let bound = match self.rng.gen_range(0u32..4) {
                0 => Bound::Ge,
                1 => Bound::Eq,
                _ => Bound::Le,
            };
            let depth = self.rng.gen_range(0..=self.cfg.max_refinement_depth);
            let ty = match bound {
                Bound::Le => self.gen_upper_type(i, k, depth),
                _ => self.gen_lower_type(i, depth),
            };
            let closed = ty.free_vars().is_empty() && !mentions_shape(&ty, &self.names);
            if !closed {
                self.names[i].newable = false;
            }
            self.names[i]
                .type_members
                .push((label.clone(), bound, closed));
            members.push(MemberDecl::TypeMember(TypeMemberDecl {
                mark: ShapeMark::Material,
                label,
                bound,
                ty,
            }));
        }

        self.decls.push(TopDecl::Name(NamedTypeDecl {
            mark,
            name: name.clone(),
            self_var: VarName::new("z"),
            members,
            span: Span::default(),
        }));
        if let Some(j) = supertype {
            self.decls.push(TopDecl::Subtype(SubtypeDecl {
                lhs_name: name,
                lhs_refinement: Refinement::empty(),
                rhs_name: self.names[j].name.clone(),
                span: Span::default(),
            }));
        }
    }

    /// Object definitions that exactly pin each declared type member; valid
    /// for names whose members all have closed, shape-free bound types.
    fn gen_new(&self, i: usize) -> Expr {
        let TopDecl::Name(decl) = self.decl_of(i) else {
            unreachable!()
        };
        let defs: Vec<ObjMemberDefn> = decl
            .members
            .iter()
            .filter_map(|m| match m {
                // Pinning each member exactly at its declared bound type
                // satisfies the declaration whatever the bound direction.
                MemberDecl::TypeMember(d) => Some(ObjMemberDefn::TypeMember {
                    label: d.label.clone(),
                    ty: d.ty.clone(),
                }),
                _ => None,
            })
            .collect();
        Expr::new(
            ExprKind::New {
                ty: Type::named(self.names[i].name.as_str()),
                self_var: VarName::new("obj"),
                defs,
            },
            Span::default(),
        )
    }

    fn gen_main(&mut self) -> Expr {
        let newables: Vec<usize> = (0..self.names.len())
            .filter(|&i| self.names[i].newable)
            .collect();
        let mut lets: Vec<(VarName, Expr)> = Vec::new();
        for (k, &i) in newables.iter().take(3).enumerate() {
            lets.push((VarName::new(format!("v{k}")), self.gen_new(i)));
        }
        let final_var = match lets.last() {
            Some((v, _)) => Expr::new(ExprKind::Path(Path::Var(v.clone())), Span::default()),
            None => {
                lets.push((
                    VarName::new("u"),
                    Expr::new(
                        ExprKind::New {
                            ty: Type::Top,
                            self_var: VarName::new("z"),
                            defs: vec![],
                        },
                        Span::default(),
                    ),
                ));
                Expr::new(ExprKind::Path(Path::var("u")), Span::default())
            }
        };
        let mut body = final_var;
        for (var, bound) in lets.into_iter().rev() {
            body = Expr::new(
                ExprKind::Let {
                    var,
                    ascription: None,
                    bound: Box::new(bound),
                    body: Box::new(body),
                },
                Span::default(),
            );
        }
        body
    }
}

fn mentions_shape(ty: &Type, names: &[NameInfo]) -> bool {
    match ty {
        Type::Top | Type::Bottom => false,
        Type::Refined { base, refinement } => {
            let base_shape = match base {
                BaseType::Named(n) => names
                    .iter()
                    .any(|info| &info.name == n && info.mark == ShapeMark::Shape),
                BaseType::Sel(..) => false,
            };
            base_shape
                || refinement
                    .members
                    .iter()
                    .any(|m| mentions_shape(&m.ty, names))
        }
    }
}

/// Generate a properly separated program, deterministically in the seed.
pub fn gen_program(cfg: &GenConfig) -> Program {
    let mut generator = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: *cfg,
        names: Vec::new(),
        decls: Vec::new(),
    };
    let count = generator.rng.gen_range(1..=cfg.max_names.max(1)) as usize;
    for i in 0..count {
        generator.gen_name(i);
    }
    let main = generator.gen_main();
    Program {
        decls: generator.decls,
        main,
    }
}

/// A generated environment and a pool of types over it, for subtype
/// queries.
pub fn gen_query_pool(
    defs: &DefTable,
    subs: &SubtypeTable,
    rng: &mut ChaCha8Rng,
) -> (VarEnv, Vec<Type>) {
    let names: Vec<&TypeName> = defs.names().collect();
    let mut env = VarEnv::new();
    let mut pool = vec![Type::Top, Type::Bottom];
    for n in &names {
        pool.push(Type::named(n.as_str()));
    }
    // A couple of variables at named types, plus their member selections.
    for (k, n) in names.iter().take(2).enumerate() {
        let var = VarName::new(format!("q{k}"));
        env.push(var.clone(), Type::named(n.as_str()));
        if let Some(def) = defs.get(n) {
            for m in def.type_members().take(2) {
                pool.push(Type::sel(Path::Var(var.clone()), m.label.as_str()));
            }
        }
    }
    // A few tightened refinements of names with closed member bounds.
    for n in names.iter().take(3) {
        if let Some(def) = defs.get(n) {
            let members: Vec<RefinementMember> = def
                .type_members()
                .filter(|m| m.ty.free_vars().is_empty())
                .take(rng.gen_range(1..=2))
                .map(|m| m.as_refinement_member())
                .collect();
            if !members.is_empty() {
                pool.push(Type::Refined {
                    base: BaseType::Named((*n).clone()),
                    refinement: Refinement::new(members),
                });
            }
        }
    }
    // Fully expanded variants exercise deeper derivations.
    let expand_ctx = crate::normalize::Ctx::new(defs, subs);
    let expanded: Vec<Type> = names
        .iter()
        .take(2)
        .map(|n| crate::subtype::expand(&expand_ctx, &Type::named(n.as_str()), 2))
        .filter(|t| t.refinement().is_some_and(|r| !r.is_empty()))
        .collect();
    pool.extend(expanded);
    (env, pool)
}

/// Closed, tightening refinements over the leading members of `name`, used
/// to build related type chains.
fn tighten_prefix(defs: &DefTable, name: &TypeName, count: usize) -> Refinement {
    let Some(def) = defs.get(name) else {
        return Refinement::empty();
    };
    let members = def
        .type_members()
        .filter(|m| m.ty.free_vars().is_empty())
        .take(count)
        .map(|m| m.as_refinement_member())
        .collect();
    Refinement::new(members)
}

/// A candidate chain `τ1 <: τ2 <: τ3` built from the declared relation and
/// nested refinements: names go up the relation while refinements shrink.
/// The premises are likely, not guaranteed; callers filter with the engine.
pub fn gen_chain(
    defs: &DefTable,
    subs: &SubtypeTable,
    rng: &mut ChaCha8Rng,
) -> Option<(Type, Type, Type)> {
    let entries: Vec<&SubtypeDecl> = subs.iter().collect();
    if entries.is_empty() || rng.gen_bool(0.2) {
        // Depth-only chain on a single name.
        let names: Vec<&TypeName> = defs.names().collect();
        let n = *names.get(rng.gen_range(0..names.len().max(1)))?;
        let k1 = rng.gen_range(0..=3);
        let k2 = rng.gen_range(0..=k1);
        let k3 = rng.gen_range(0..=k2);
        let mk = |k| Type::Refined {
            base: BaseType::Named(n.clone()),
            refinement: tighten_prefix(defs, n, k),
        };
        return Some((mk(k1), mk(k2), mk(k3)));
    }
    let first = entries[rng.gen_range(0..entries.len())];
    let n1 = first.lhs_name.clone();
    let n2 = first.rhs_name.clone();
    let n3 = subs
        .entries_for(&n2)
        .next()
        .map(|e| e.rhs_name.clone())
        .unwrap_or_else(|| n2.clone());
    // Refinements shrink up the chain; labels come from the topmost name,
    // whose members every name below it inherits.
    let k1 = rng.gen_range(0..=3);
    let k2 = rng.gen_range(0..=k1);
    let k3 = rng.gen_range(0..=k2);
    let mk = |n: &TypeName, k: usize| Type::Refined {
        base: BaseType::Named(n.clone()),
        refinement: tighten_prefix(defs, &n3, k),
    };
    let t3 = if rng.gen_bool(0.2) {
        Type::Top
    } else {
        mk(&n3, k3)
    };
    let t1 = if rng.gen_bool(0.1) {
        Type::Bottom
    } else {
        mk(&n1, k1)
    };
    Some((t1, mk(&n2, k2), t3))
}

/// Statistics from a fuzzing run comparing the engine against the bounded
/// oracle.
#[derive(Clone, Debug, Default)]
pub struct FuzzReport {
    pub cases: u64,
    pub holds: u64,
    pub resolved: u64,
    pub unknown: u64,
    pub agreements: u64,
    pub disagreements: u64,
    pub max_steps: u64,
    pub separation_failures: u64,
}

impl FuzzReport {
    pub fn unknown_rate(&self) -> f64 {
        if self.cases == 0 {
            0.0
        } else {
            self.unknown as f64 / self.cases as f64
        }
    }

    pub fn render(&self) -> String {
        format!(
            "cases: {}\nholds: {}\nresolved by oracle: {} (unknown: {}, rate {:.1}%)\n\
             agreements: {}\ndisagreements: {}\nmax derivation steps: {}\n\
             generated programs failing separation: {}",
            self.cases,
            self.holds,
            self.resolved,
            self.unknown,
            100.0 * self.unknown_rate(),
            self.agreements,
            self.disagreements,
            self.max_steps,
            self.separation_failures,
        )
    }
}

/// Run `cases` subtype queries over generated programs, comparing the
/// engine with the depth-8 oracle.
pub fn run_fuzz(seed: u64, cases: u64) -> FuzzReport {
    run_fuzz_with_depth(seed, cases, 8)
}

pub fn run_fuzz_with_depth(seed: u64, cases: u64, oracle_depth: u32) -> FuzzReport {
    use crate::graphs::{build_sdg, check_shape_validity, check_syntactic_separation};
    use crate::typecheck::build_contexts;

    let mut report = FuzzReport::default();
    let mut case = 0u64;
    let mut program_seed = seed;
    'outer: while case < cases {
        let cfg = GenConfig {
            seed: program_seed,
            ..GenConfig::default()
        };
        program_seed = program_seed.wrapping_add(1);
        let program = gen_program(&cfg);
        let Ok((defs, subs)) = build_contexts(&program) else {
            report.separation_failures += 1;
            continue;
        };
        let separated = check_syntactic_separation(&program, &defs, &subs).is_separated()
            && check_shape_validity(&build_sdg(&defs, &subs), &defs).is_separated();
        if !separated {
            report.separation_failures += 1;
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(program_seed.wrapping_mul(0x9e37_79b9));
        let (env, pool) = gen_query_pool(&defs, &subs, &mut rng);
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for _ in 0..8 {
            if case >= cases {
                break 'outer;
            }
            case += 1;
            report.cases += 1;
            let lhs = pool[rng.gen_range(0..pool.len())].clone();
            let rhs = pool[rng.gen_range(0..pool.len())].clone();
            let outcome = is_subtype(&ctx, &lhs, &rhs);
            report.max_steps = report.max_steps.max(outcome.trace.steps);
            if outcome.holds {
                report.holds += 1;
            }
            match enumerate_subtype(&ctx, &lhs, &rhs, oracle_depth).as_bool() {
                None => report.unknown += 1,
                Some(oracle_holds) => {
                    report.resolved += 1;
                    if oracle_holds == outcome.holds {
                        report.agreements += 1;
                    } else {
                        report.disagreements += 1;
                    }
                }
            }
        }
    }
    report
}
