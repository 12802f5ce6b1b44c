//! Term typing, type validity, object-definition typing, and whole-program
//! checking.
//!
//! Typing is syntax-directed with no subsumption on terms; the only
//! subtype obligations arise at ascriptions, method arguments, object
//! definitions, and declared subtype relations, and each of those goes
//! through the expansion wrapper `subtype::check`. Let-bound types are
//! rewritten by avoidance so the binding never escapes its scope.

use std::fmt;

use crate::normalize::{avoid, expose, lookup_decl, type_path, CheckOptions, Ctx, NormalizeError};
use crate::subtype::{
    check, check_traced, decl_list_subtype, member_subtype_checked, DerivationTrace,
};
use crate::syntax::{
    fresh_name, merge_members, sig_of, BaseType, Bound, DefTable, Expr, ExprKind, FreeVars,
    MemberDecl, ObjMemberDefn, Path, Program, Refinement, ShapeMark, Span, Subst, SubtypeDecl,
    SubtypeTable, TopDecl, Type, TypeDef, TypeMemberDecl, TypeName, VarName,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnboundPath,
    NoSuchMember,
    SubtypeFailure,
    InvalidType,
    BadSubtypeDecl,
    AvoidFailure,
    DuplicateName,
}

impl TypeErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            TypeErrorKind::UnboundPath => "E0001",
            TypeErrorKind::NoSuchMember => "E0002",
            TypeErrorKind::SubtypeFailure => "E0003",
            TypeErrorKind::InvalidType => "E0004",
            TypeErrorKind::BadSubtypeDecl => "E0005",
            TypeErrorKind::AvoidFailure => "E0006",
            TypeErrorKind::DuplicateName => "E0007",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
    pub expected: Option<Type>,
    pub actual: Option<Type>,
    pub trace: Option<DerivationTrace>,
}

impl TypeError {
    pub fn new(kind: TypeErrorKind, span: Span, message: impl Into<String>) -> Self {
        TypeError {
            kind,
            span,
            message: message.into(),
            expected: None,
            actual: None,
            trace: None,
        }
    }

    fn subtype_failure(
        span: Span,
        expected: Type,
        actual: Type,
        trace: DerivationTrace,
        what: &str,
    ) -> Self {
        TypeError {
            kind: TypeErrorKind::SubtypeFailure,
            span,
            message: format!("{what}: found `{actual}`, required `{expected}`"),
            expected: Some(expected),
            actual: Some(actual),
            trace: Some(trace),
        }
    }

    /// Render as `file:line:col: error[code]: message`, with the expected
    /// and actual types and, when requested, the failing derivation.
    pub fn render(&self, file: &str, with_trace: bool) -> String {
        let mut out = format!(
            "{file}:{}:{}: error[{}]: {}",
            self.span.line,
            self.span.col,
            self.kind.code(),
            self.message
        );
        if with_trace {
            if let Some(trace) = &self.trace {
                let rendered = trace.render();
                if !rendered.is_empty() {
                    out.push('\n');
                    out.push_str(rendered.trim_end());
                }
            }
        }
        out
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind.code(), self.message)
    }
}

fn from_normalize(err: NormalizeError, span: Span) -> TypeError {
    let kind = match &err {
        NormalizeError::UnboundPath(_) => TypeErrorKind::UnboundPath,
        NormalizeError::NoSuchMember { .. } | NormalizeError::LookupOnPathBase { .. } => {
            TypeErrorKind::NoSuchMember
        }
        NormalizeError::FuelExhausted { .. } | NormalizeError::IncompatibleBounds(..) => {
            TypeErrorKind::AvoidFailure
        }
    };
    TypeError::new(kind, span, err.to_string())
}

/// A fully checked program with its contexts and the type of `main`.
#[derive(Clone, Debug)]
pub struct CheckedProgram {
    pub program: Program,
    pub defs: DefTable,
    pub subs: SubtypeTable,
    pub main_type: Type,
}

/// Build the definition and subtype contexts from the declarations,
/// verbatim. Mutual reference between declarations is fine; duplicates are
/// not.
pub fn build_contexts(program: &Program) -> Result<(DefTable, SubtypeTable), Vec<TypeError>> {
    let mut defs = DefTable::new();
    let mut errors = Vec::new();
    for decl in &program.decls {
        if let TopDecl::Name(n) = decl {
            let fresh = defs.insert(
                n.name.clone(),
                TypeDef {
                    mark: n.mark,
                    self_var: n.self_var.clone(),
                    members: n.members.clone(),
                    span: n.span,
                },
            );
            if !fresh {
                errors.push(TypeError::new(
                    TypeErrorKind::DuplicateName,
                    n.span,
                    format!("type `{}` is declared more than once", n.name),
                ));
            }
        }
    }
    let subs = SubtypeTable::new(program.subtype_decls().cloned().collect());
    if errors.is_empty() {
        Ok((defs, subs))
    } else {
        Err(errors)
    }
}

fn walk_types_in_type(ty: &Type, span: Span, f: &mut impl FnMut(&TypeName, Span)) {
    if let Type::Refined { base, refinement } = ty {
        if let BaseType::Named(n) = base {
            f(n, span);
        }
        for m in &refinement.members {
            walk_types_in_type(&m.ty, span, f);
        }
    }
}

fn walk_types_in_expr(e: &Expr, f: &mut impl FnMut(&TypeName, Span)) {
    match &e.kind {
        ExprKind::Path(_) | ExprKind::FieldSel(..) | ExprKind::Call { .. } => {}
        ExprKind::New { ty, defs, .. } => {
            walk_types_in_type(ty, e.span, f);
            for d in defs {
                match d {
                    ObjMemberDefn::TypeMember { ty, .. } => walk_types_in_type(ty, e.span, f),
                    ObjMemberDefn::Field { ty, .. } => walk_types_in_type(ty, e.span, f),
                    ObjMemberDefn::Method {
                        param_ty,
                        result_ty,
                        body,
                        ..
                    } => {
                        walk_types_in_type(param_ty, e.span, f);
                        walk_types_in_type(result_ty, e.span, f);
                        walk_types_in_expr(body, f);
                    }
                }
            }
        }
        ExprKind::Let {
            ascription,
            bound,
            body,
            ..
        } => {
            if let Some(t) = ascription {
                walk_types_in_type(t, e.span, f);
            }
            walk_types_in_expr(bound, f);
            walk_types_in_expr(body, f);
        }
    }
}

/// Every type name referenced anywhere must be declared.
pub fn resolve_names(program: &Program, defs: &DefTable) -> Vec<TypeError> {
    let mut errors = Vec::new();
    let mut check_name = |n: &TypeName, span: Span| {
        if !defs.contains(n) {
            errors.push(TypeError::new(
                TypeErrorKind::InvalidType,
                span,
                format!("type name `{n}` is not declared"),
            ));
        }
    };
    for decl in &program.decls {
        match decl {
            TopDecl::Name(n) => {
                for m in &n.members {
                    match m {
                        MemberDecl::TypeMember(d) => {
                            walk_types_in_type(&d.ty, n.span, &mut check_name)
                        }
                        MemberDecl::Field(d) => walk_types_in_type(&d.ty, n.span, &mut check_name),
                        MemberDecl::Method(d) => {
                            walk_types_in_type(&d.param_ty, n.span, &mut check_name);
                            walk_types_in_type(&d.result_ty, n.span, &mut check_name);
                        }
                    }
                }
            }
            TopDecl::Subtype(s) => {
                check_name(&s.lhs_name, s.span);
                check_name(&s.rhs_name, s.span);
                for m in &s.lhs_refinement.members {
                    walk_types_in_type(&m.ty, s.span, &mut check_name);
                }
            }
        }
    }
    walk_types_in_expr(&program.main, &mut check_name);
    errors
}

fn with_var<R>(ctx: &mut Ctx, x: VarName, ty: Type, f: impl FnOnce(&mut Ctx) -> R) -> R {
    ctx.vars.push(x, ty);
    let r = f(ctx);
    ctx.vars.pop();
    r
}

/// Pick a scope-unique name for a binder, renaming the scope when the
/// source name is already bound (typing contexts keep names distinct).
fn freshen<S: Subst + FreeVars>(ctx: &Ctx, var: &VarName, scope: &S) -> (VarName, Option<S>) {
    if !ctx.vars.contains(var) {
        return (var.clone(), None);
    }
    let free = scope.free_vars();
    let fresh = VarName::new(fresh_name(var.as_str(), |c| {
        ctx.vars.contains(&VarName::new(c)) || free.iter().any(|v| v.as_str() == c)
    }));
    let renamed = scope.subst(var, &Path::Var(fresh.clone()));
    (fresh, Some(renamed))
}

/// Check that a declared subtype relation is structurally valid: with a
/// self binding at the refined left-hand type, the merged left members must
/// subsume the right members.
pub fn check_subtype_decl(
    defs: &DefTable,
    subs: &SubtypeTable,
    entry: &SubtypeDecl,
    options: CheckOptions,
) -> Result<(), TypeError> {
    let lhs_def = defs.get(&entry.lhs_name).ok_or_else(|| {
        TypeError::new(
            TypeErrorKind::InvalidType,
            entry.span,
            format!("type name `{}` is not declared", entry.lhs_name),
        )
    })?;
    let rhs_def = defs.get(&entry.rhs_name).ok_or_else(|| {
        TypeError::new(
            TypeErrorKind::InvalidType,
            entry.span,
            format!("type name `{}` is not declared", entry.rhs_name),
        )
    })?;

    let binder = Path::Var(lhs_def.self_var.clone());
    let lhs_members: Vec<MemberDecl> = lhs_def
        .members
        .iter()
        .map(|m| m.subst(&lhs_def.self_var, &binder))
        .collect();
    let refinement_decls: Vec<MemberDecl> = entry
        .lhs_refinement
        .members
        .iter()
        .map(|m| {
            MemberDecl::TypeMember(TypeMemberDecl {
                mark: ShapeMark::Material,
                label: m.label.clone(),
                bound: m.bound,
                ty: m.ty.clone(),
            })
        })
        .collect();
    let merged = merge_members(&lhs_members, &refinement_decls);
    let rhs_members: Vec<MemberDecl> = rhs_def
        .members
        .iter()
        .map(|m| m.subst(&rhs_def.self_var, &binder))
        .collect();

    let lhs_ty = Type::Refined {
        base: BaseType::Named(entry.lhs_name.clone()),
        refinement: entry.lhs_refinement.clone(),
    };
    let mut ctx = Ctx::new(defs, subs).with_options(options);
    ctx.vars.push(lhs_def.self_var.clone(), lhs_ty);

    for required in &rhs_members {
        if !decl_list_subtype(&ctx, &merged, std::slice::from_ref(required)) {
            return Err(TypeError::new(
                TypeErrorKind::BadSubtypeDecl,
                entry.span,
                format!(
                    "`{} {} <: {}` does not hold structurally: member `{}` is missing or incompatible",
                    entry.lhs_name, entry.lhs_refinement, entry.rhs_name, required.label()
                ),
            ));
        }
    }
    Ok(())
}

/// Validity of a type annotation: top and bottom are valid; a refined base
/// type is valid when every refinement member tightens a member that the
/// exposed unrefined base actually has.
pub fn type_valid(ctx: &mut Ctx, ty: &Type, span: Span) -> Result<(), TypeError> {
    let Type::Refined { base, refinement } = ty else {
        return Ok(());
    };
    match base {
        BaseType::Named(n) => {
            if !ctx.defs.contains(n) {
                return Err(TypeError::new(
                    TypeErrorKind::InvalidType,
                    span,
                    format!("type name `{n}` is not declared"),
                ));
            }
        }
        BaseType::Sel(p, _) => {
            type_path(ctx, p).map_err(|e| from_normalize(e, span))?;
        }
    }
    if refinement.is_empty() {
        return Ok(());
    }
    let unrefined = Type::Refined {
        base: base.clone(),
        refinement: Refinement::empty(),
    };
    let exposed = expose(ctx, &unrefined);
    let self_name = VarName::new(fresh_name("$v", |c| ctx.vars.contains(&VarName::new(c))));
    let self_path = Path::Var(self_name.clone());
    with_var(ctx, self_name, ty.clone(), |ctx| {
        for m in &refinement.members {
            let declared = lookup_decl(ctx, &exposed, &self_path, &m.label).map_err(|e| {
                TypeError::new(
                    TypeErrorKind::InvalidType,
                    span,
                    format!("invalid type `{ty}`: {e}"),
                )
            })?;
            let MemberDecl::TypeMember(d) = declared else {
                return Err(TypeError::new(
                    TypeErrorKind::InvalidType,
                    span,
                    format!("invalid type `{ty}`: `{}` is not a type member", m.label),
                ));
            };
            if !member_subtype_checked(ctx, m, &d.as_refinement_member()) {
                return Err(TypeError::new(
                    TypeErrorKind::InvalidType,
                    span,
                    format!(
                        "invalid type `{ty}`: member `{}` does not satisfy the declared bound `{}`",
                        m.label,
                        MemberDecl::TypeMember(d)
                    ),
                ));
            }
        }
        Ok(())
    })
}

/// Type of an expression. Syntax-directed: each form has exactly one rule.
pub fn type_expr(ctx: &mut Ctx, e: &Expr) -> Result<Type, TypeError> {
    match &e.kind {
        ExprKind::Path(p) => type_path(ctx, p).map_err(|err| from_normalize(err, e.span)),
        ExprKind::FieldSel(p, label) => {
            let ty = type_path(ctx, p).map_err(|err| from_normalize(err, e.span))?;
            let exposed = expose(ctx, &ty);
            let member =
                lookup_decl(ctx, &exposed, p, label).map_err(|err| from_normalize(err, e.span))?;
            match member {
                MemberDecl::Field(f) => Ok(f.ty),
                _ => Err(TypeError::new(
                    TypeErrorKind::NoSuchMember,
                    e.span,
                    format!("`{label}` is not a field of `{exposed}`"),
                )),
            }
        }
        ExprKind::Call {
            target,
            method,
            arg,
        } => {
            let target_ty = type_path(ctx, target).map_err(|err| from_normalize(err, e.span))?;
            let exposed = expose(ctx, &target_ty);
            let member = lookup_decl(ctx, &exposed, target, method)
                .map_err(|err| from_normalize(err, e.span))?;
            let MemberDecl::Method(m) = member else {
                return Err(TypeError::new(
                    TypeErrorKind::NoSuchMember,
                    e.span,
                    format!("`{method}` is not a method of `{exposed}`"),
                ));
            };
            let arg_ty = type_path(ctx, arg).map_err(|err| from_normalize(err, e.span))?;
            if !check(ctx, &arg_ty, &m.param_ty).holds {
                let trace = check_traced(ctx, &arg_ty, &m.param_ty).trace;
                return Err(TypeError::subtype_failure(
                    e.span,
                    m.param_ty.clone(),
                    arg_ty,
                    trace,
                    &format!("argument of `{method}`"),
                ));
            }
            Ok(m.result_ty.subst(&m.param, arg))
        }
        ExprKind::New { ty, self_var, defs } => {
            type_valid(ctx, ty, e.span)?;
            type_obj_defn(ctx, self_var, defs, ty, e.span)?;
            Ok(ty.clone())
        }
        ExprKind::Let {
            var,
            ascription,
            bound,
            body,
        } => {
            let bound_ty = type_expr(ctx, bound)?;
            let bind_ty = match ascription {
                Some(t) => {
                    type_valid(ctx, t, e.span)?;
                    if !check(ctx, &bound_ty, t).holds {
                        let trace = check_traced(ctx, &bound_ty, t).trace;
                        return Err(TypeError::subtype_failure(
                            e.span,
                            t.clone(),
                            bound_ty,
                            trace,
                            &format!("binding of `{var}`"),
                        ));
                    }
                    t.clone()
                }
                None => bound_ty,
            };
            let (var, renamed_body) = freshen(ctx, var, body.as_ref());
            let body = renamed_body.as_ref().unwrap_or(body);
            with_var(ctx, var.clone(), bind_ty, |ctx| {
                let body_ty = type_expr(ctx, body)?;
                let avoided = avoid(ctx, &body_ty, &var, Bound::Le, ctx.options.avoid_fuel)
                    .map_err(|err| from_normalize(err, e.span))?;
                Ok(avoided.ty)
            })
        }
    }
}

fn refinement_of_defs(defs: &[ObjMemberDefn]) -> Refinement {
    Refinement::new(
        defs.iter()
            .filter_map(|d| match d {
                ObjMemberDefn::TypeMember { label, ty } => Some(crate::syntax::RefinementMember {
                    label: label.clone(),
                    bound: Bound::Eq,
                    ty: ty.clone(),
                }),
                _ => None,
            })
            .collect(),
    )
}

/// Required members of an ascribed type: the exposed definition's members
/// overridden by the ascription's refinement, with the definition's self
/// variable substituted by the new object's binder.
fn ascribed_members(ctx: &Ctx, exposed: &Type, binder: &Path) -> Vec<MemberDecl> {
    let Type::Refined { base, refinement } = exposed else {
        return Vec::new();
    };
    let BaseType::Named(n) = base else {
        return Vec::new();
    };
    let Some(def) = ctx.defs.get(n) else {
        return Vec::new();
    };
    let decl_members: Vec<MemberDecl> = def
        .members
        .iter()
        .map(|m| m.subst(&def.self_var, binder))
        .collect();
    let refinement_decls: Vec<MemberDecl> = refinement
        .members
        .iter()
        .map(|m| {
            MemberDecl::TypeMember(TypeMemberDecl {
                mark: ShapeMark::Material,
                label: m.label.clone(),
                bound: m.bound,
                ty: m.ty.clone(),
            })
        })
        .collect();
    merge_members(&decl_members, &refinement_decls)
}

/// Typing of an object definition against its ascribed type: the object's
/// own type is the ascription merged with its exact type members; the
/// definition signature must subsume the ascribed members, and every field
/// and method body must agree with its declared type.
pub fn type_obj_defn(
    ctx: &mut Ctx,
    self_var: &VarName,
    defs: &[ObjMemberDefn],
    ascribed: &Type,
    span: Span,
) -> Result<(), TypeError> {
    let obj_ty = ascribed.refined_with(&refinement_of_defs(defs));

    // Rename the binder apart from the context if needed.
    let (self_var, renamed_defs): (VarName, Vec<ObjMemberDefn>) = {
        if ctx.vars.contains(self_var) {
            let mut free = std::collections::BTreeSet::new();
            for d in defs {
                d.collect_free_vars(&mut free);
            }
            let fresh = VarName::new(fresh_name(self_var.as_str(), |c| {
                ctx.vars.contains(&VarName::new(c)) || free.iter().any(|v| v.as_str() == c)
            }));
            let fresh_path = Path::Var(fresh.clone());
            (
                fresh,
                defs.iter()
                    .map(|d| d.subst(self_var, &fresh_path))
                    .collect(),
            )
        } else {
            (self_var.clone(), defs.to_vec())
        }
    };
    let defs = &renamed_defs;
    let binder = Path::Var(self_var.clone());
    let exposed = expose(ctx, ascribed);
    let required = ascribed_members(ctx, &exposed, &binder);

    with_var(ctx, self_var.clone(), obj_ty.clone(), |ctx| {
        if !check(ctx, &obj_ty, ascribed).holds {
            let trace = check_traced(ctx, &obj_ty, ascribed).trace;
            return Err(TypeError::subtype_failure(
                span,
                ascribed.clone(),
                obj_ty.clone(),
                trace,
                "object definition",
            ));
        }

        let signature = sig_of(defs);
        for req in &required {
            let found = signature.iter().find(|s| s.label() == req.label());
            if found.is_none() {
                return Err(TypeError::new(
                    TypeErrorKind::NoSuchMember,
                    span,
                    format!(
                        "object of type `{ascribed}` must define member `{}`",
                        req.label()
                    ),
                ));
            }
            if !decl_list_subtype(ctx, &signature, std::slice::from_ref(req)) {
                return Err(TypeError::new(
                    TypeErrorKind::SubtypeFailure,
                    span,
                    format!(
                        "member `{}` of the object does not satisfy the ascribed `{req}`",
                        req.label()
                    ),
                ));
            }
        }

        for d in defs {
            match d {
                ObjMemberDefn::TypeMember { .. } => {}
                ObjMemberDefn::Field { label, ty, value } => {
                    let value_ty =
                        type_path(ctx, value).map_err(|err| from_normalize(err, span))?;
                    if !check(ctx, &value_ty, ty).holds {
                        let trace = check_traced(ctx, &value_ty, ty).trace;
                        return Err(TypeError::subtype_failure(
                            span,
                            ty.clone(),
                            value_ty,
                            trace,
                            &format!("field `{label}`"),
                        ));
                    }
                }
                ObjMemberDefn::Method {
                    label,
                    param,
                    param_ty,
                    result_ty,
                    body,
                } => {
                    let (param, renamed) = freshen_method(ctx, param, result_ty, body);
                    let (result_ty, body) = match &renamed {
                        Some((r, b)) => (r, b),
                        None => (result_ty, body.as_ref()),
                    };
                    with_var(ctx, param.clone(), param_ty.clone(), |ctx| {
                        let body_ty = type_expr(ctx, body)?;
                        if !check(ctx, &body_ty, result_ty).holds {
                            let trace = check_traced(ctx, &body_ty, result_ty).trace;
                            return Err(TypeError::subtype_failure(
                                span,
                                result_ty.clone(),
                                body_ty,
                                trace,
                                &format!("body of method `{label}`"),
                            ));
                        }
                        Ok(())
                    })?;
                }
            }
        }
        Ok(())
    })
}

fn freshen_method(
    ctx: &Ctx,
    param: &VarName,
    result_ty: &Type,
    body: &Expr,
) -> (VarName, Option<(Type, Expr)>) {
    if !ctx.vars.contains(param) {
        return (param.clone(), None);
    }
    let mut free = result_ty.free_vars();
    body.collect_free_vars(&mut free);
    let fresh = VarName::new(fresh_name(param.as_str(), |c| {
        ctx.vars.contains(&VarName::new(c)) || free.iter().any(|v| v.as_str() == c)
    }));
    let fresh_path = Path::Var(fresh.clone());
    (
        fresh.clone(),
        Some((
            result_ty.subst(param, &fresh_path),
            body.subst(param, &fresh_path),
        )),
    )
}

/// Check a whole program: build the contexts, validate every declared
/// subtype relation, then type the main expression in the empty
/// environment. Declaration errors are collected; a main-expression error
/// aborts immediately since everything downstream would be garbage.
pub fn check_program(
    program: &Program,
    options: CheckOptions,
) -> Result<CheckedProgram, Vec<TypeError>> {
    let (defs, subs) = build_contexts(program)?;
    let resolution = resolve_names(program, &defs);
    if !resolution.is_empty() {
        return Err(resolution);
    }

    let mut errors = Vec::new();
    for entry in subs.iter() {
        if let Err(e) = check_subtype_decl(&defs, &subs, entry, options) {
            errors.push(e);
        }
    }

    let mut ctx = Ctx::new(&defs, &subs).with_options(options);
    match type_expr(&mut ctx, &program.main) {
        Ok(main_type) if errors.is_empty() => Ok(CheckedProgram {
            program: program.clone(),
            defs: defs.clone(),
            subs: subs.clone(),
            main_type,
        }),
        Ok(_) => Err(errors),
        Err(e) => {
            errors.push(e);
            Err(errors)
        }
    }
}
