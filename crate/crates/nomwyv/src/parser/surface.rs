//! Surface form of the grammar as parsed from text. The only difference
//! from the core syntax is that methods and calls may be n-ary; the
//! desugaring pass rewrites every such method to a unary one over a
//! generated record ("tuple") type declared at the top level, after which
//! lowering to the core syntax is mechanical.

use indexmap::IndexMap;

use crate::parser::{code, ParseDiagnostic};
use crate::syntax::{
    Expr, ExprKind, FieldDecl, FreeVars, MemberDecl, MemberName, MethodDecl, NamedTypeDecl,
    ObjMemberDefn, Path, Program, ShapeMark, Span, SubtypeDecl, TopDecl, Type, TypeMemberDecl,
    TypeName, VarName,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SProgram {
    pub decls: Vec<STopDecl>,
    pub main: Option<SExpr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum STopDecl {
    Name(SNamedDecl),
    Subtype(SubtypeDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SNamedDecl {
    pub mark: ShapeMark,
    pub name: TypeName,
    pub self_var: VarName,
    pub members: Vec<SMemberDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SMemberDecl {
    TypeMember(TypeMemberDecl),
    Field(FieldDecl),
    Method(SMethodDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SMethodDecl {
    pub label: MemberName,
    pub params: Vec<(VarName, Type)>,
    pub result_ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExprKind {
    Path(Path),
    Sel(Box<SExpr>, MemberName),
    Call(Box<SExpr>, MemberName, Vec<SExpr>),
    New {
        ty: Type,
        self_var: VarName,
        defs: Vec<SObjDefn>,
    },
    Let {
        var: VarName,
        ascription: Option<Type>,
        bound: Box<SExpr>,
        body: Box<SExpr>,
    },
}

impl SExpr {
    pub fn new(kind: SExprKind, span: Span) -> Self {
        SExpr { kind, span }
    }

    fn as_path(&self) -> Option<&Path> {
        match &self.kind {
            SExprKind::Path(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SObjDefn {
    TypeMember {
        label: MemberName,
        ty: Type,
    },
    Field {
        label: MemberName,
        ty: Type,
        value: SExpr,
    },
    Method {
        label: MemberName,
        params: Vec<(VarName, Type)>,
        result_ty: Type,
        body: SExpr,
        span: Span,
    },
}

// ---------------------------------------------------------------------------
// A-normal form validation
// ---------------------------------------------------------------------------

/// Confirm that every method target and argument and every field value is a
/// singleton path, reporting one diagnostic per violation.
pub fn validate_anf(program: &SProgram, diags: &mut Vec<ParseDiagnostic>) {
    for decl in &program.decls {
        if let STopDecl::Name(_) = decl {
            // Declarations contain no expressions.
        }
    }
    if let Some(main) = &program.main {
        validate_anf_expr(main, diags);
    }
}

fn anf_violation(span: Span, what: &str, diags: &mut Vec<ParseDiagnostic>) {
    diags.push(ParseDiagnostic::error(
        span,
        code::ANF_VIOLATION,
        format!("{what} must be a path (the grammar is in A-normal form)"),
    ));
}

fn validate_anf_expr(expr: &SExpr, diags: &mut Vec<ParseDiagnostic>) {
    match &expr.kind {
        SExprKind::Path(_) => {}
        SExprKind::Sel(target, _) => {
            if target.as_path().is_none() {
                anf_violation(target.span, "field selection target", diags);
            }
            validate_anf_expr(target, diags);
        }
        SExprKind::Call(target, _, args) => {
            if target.as_path().is_none() {
                anf_violation(target.span, "method call target", diags);
            }
            validate_anf_expr(target, diags);
            for arg in args {
                if arg.as_path().is_none() {
                    anf_violation(arg.span, "method argument", diags);
                }
                validate_anf_expr(arg, diags);
            }
        }
        SExprKind::New { defs, .. } => {
            for d in defs {
                match d {
                    SObjDefn::Field { value, .. } => {
                        if value.as_path().is_none() {
                            anf_violation(value.span, "field value", diags);
                        }
                        validate_anf_expr(value, diags);
                    }
                    SObjDefn::Method { body, .. } => validate_anf_expr(body, diags),
                    SObjDefn::TypeMember { .. } => {}
                }
            }
        }
        SExprKind::Let { bound, body, .. } => {
            validate_anf_expr(bound, diags);
            validate_anf_expr(body, diags);
        }
    }
}

// ---------------------------------------------------------------------------
// Multi-parameter desugaring
// ---------------------------------------------------------------------------

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn positional_label(i: usize) -> MemberName {
    MemberName::new(format!("p{i}"))
}

#[derive(Clone)]
struct TupleSig {
    param_tys: Vec<Type>,
    type_name: TypeName,
    span: Span,
}

fn tuple_type_name(label: &MemberName, param_tys: &[Type]) -> TypeName {
    let canon = param_tys
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let h = fnv1a(&format!("{label}/{}/{canon}", param_tys.len())) & 0xffff_ffff;
    TypeName::new(format!("Tup${label}${}${h:08x}", param_tys.len()))
}

/// Rewrite every n-ary (n != 1) method declaration, definition, and call to
/// unary form over a generated record type with one field per original
/// parameter. Generated type names are deterministic; running the pass
/// again is a no-op.
pub fn desugar_multi_params(program: SProgram) -> (SProgram, Vec<ParseDiagnostic>) {
    let mut diags = Vec::new();
    let mut sigs: IndexMap<(MemberName, usize), TupleSig> = IndexMap::new();

    collect_sigs(&program, &mut sigs, &mut diags);

    let mut counter = 0u32;
    let mut decls: Vec<STopDecl> = program
        .decls
        .iter()
        .map(|d| rewrite_decl(d, &sigs, &mut diags))
        .collect();
    let main = program
        .main
        .as_ref()
        .map(|m| rewrite_expr(m, &sigs, &mut counter, &mut diags));

    // The generated record declarations, in first-use order.
    for sig in sigs.values() {
        let members = sig
            .param_tys
            .iter()
            .enumerate()
            .map(|(i, ty)| {
                SMemberDecl::Field(FieldDecl {
                    label: positional_label(i),
                    ty: ty.clone(),
                })
            })
            .collect();
        decls.push(STopDecl::Name(SNamedDecl {
            mark: ShapeMark::Material,
            name: sig.type_name.clone(),
            self_var: VarName::new("$self"),
            members,
            span: sig.span,
        }));
    }

    (SProgram { decls, main }, diags)
}

fn record_sig(
    label: &MemberName,
    params: &[(VarName, Type)],
    span: Span,
    sigs: &mut IndexMap<(MemberName, usize), TupleSig>,
    diags: &mut Vec<ParseDiagnostic>,
) {
    if params.len() == 1 {
        return;
    }
    let param_tys: Vec<Type> = params.iter().map(|(_, t)| t.clone()).collect();
    for (_, ty) in params {
        if !ty.free_vars().is_empty() {
            diags.push(ParseDiagnostic::error(
                span,
                code::DESUGAR,
                format!(
                    "parameter types of the {}-ary method `{label}` must be closed to desugar",
                    params.len()
                ),
            ));
            return;
        }
    }
    match sigs.get(&(label.clone(), params.len())) {
        Some(existing) if existing.param_tys != param_tys => {
            diags.push(ParseDiagnostic::error(
                span,
                code::DESUGAR,
                format!(
                    "conflicting {}-ary signatures for method `{label}`; \
                     multi-parameter methods must agree program-wide",
                    params.len()
                ),
            ));
        }
        Some(_) => {}
        None => {
            let type_name = tuple_type_name(label, &param_tys);
            sigs.insert(
                (label.clone(), params.len()),
                TupleSig {
                    param_tys,
                    type_name,
                    span,
                },
            );
        }
    }
}

fn collect_sigs(
    program: &SProgram,
    sigs: &mut IndexMap<(MemberName, usize), TupleSig>,
    diags: &mut Vec<ParseDiagnostic>,
) {
    for decl in &program.decls {
        if let STopDecl::Name(n) = decl {
            for m in &n.members {
                if let SMemberDecl::Method(m) = m {
                    record_sig(&m.label, &m.params, m.span, sigs, diags);
                }
            }
        }
    }
    if let Some(main) = &program.main {
        collect_sigs_expr(main, sigs, diags);
    }
}

fn collect_sigs_expr(
    expr: &SExpr,
    sigs: &mut IndexMap<(MemberName, usize), TupleSig>,
    diags: &mut Vec<ParseDiagnostic>,
) {
    match &expr.kind {
        SExprKind::Path(_) | SExprKind::Sel(..) => {}
        SExprKind::Call(target, _, args) => {
            collect_sigs_expr(target, sigs, diags);
            for a in args {
                collect_sigs_expr(a, sigs, diags);
            }
        }
        SExprKind::New { defs, .. } => {
            for d in defs {
                match d {
                    SObjDefn::Method {
                        label,
                        params,
                        body,
                        span,
                        ..
                    } => {
                        record_sig(label, params, *span, sigs, diags);
                        collect_sigs_expr(body, sigs, diags);
                    }
                    SObjDefn::Field { value, .. } => collect_sigs_expr(value, sigs, diags),
                    SObjDefn::TypeMember { .. } => {}
                }
            }
        }
        SExprKind::Let { bound, body, .. } => {
            collect_sigs_expr(bound, sigs, diags);
            collect_sigs_expr(body, sigs, diags);
        }
    }
}

/// Turn an n-ary parameter list into the unary `($args: Tup$...)` form,
/// returning the rewritten parameter and the bindings to prepend to a body.
fn tupled_param(
    label: &MemberName,
    params: &[(VarName, Type)],
    result_ty: &Type,
    span: Span,
    sigs: &IndexMap<(MemberName, usize), TupleSig>,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<(VarName, Type, Vec<(VarName, MemberName)>)> {
    let sig = sigs.get(&(label.clone(), params.len()))?;
    for (p, _) in params {
        if result_ty.mentions_var(p) {
            diags.push(ParseDiagnostic::error(
                span,
                code::DESUGAR,
                format!(
                    "result type of multi-parameter method `{label}` may not mention parameter `{p}`"
                ),
            ));
            return None;
        }
    }
    let arg_var = VarName::new("$args");
    let bindings = params
        .iter()
        .enumerate()
        .map(|(i, (p, _))| (p.clone(), positional_label(i)))
        .collect();
    Some((arg_var, Type::named(sig.type_name.as_str()), bindings))
}

fn rewrite_decl(
    decl: &STopDecl,
    sigs: &IndexMap<(MemberName, usize), TupleSig>,
    diags: &mut Vec<ParseDiagnostic>,
) -> STopDecl {
    match decl {
        STopDecl::Subtype(s) => STopDecl::Subtype(s.clone()),
        STopDecl::Name(n) => {
            let members = n
                .members
                .iter()
                .map(|m| match m {
                    SMemberDecl::Method(d) if d.params.len() != 1 => {
                        match tupled_param(&d.label, &d.params, &d.result_ty, d.span, sigs, diags) {
                            Some((param, param_ty, _)) => SMemberDecl::Method(SMethodDecl {
                                label: d.label.clone(),
                                params: vec![(param, param_ty)],
                                result_ty: d.result_ty.clone(),
                                span: d.span,
                            }),
                            None => SMemberDecl::Method(d.clone()),
                        }
                    }
                    other => other.clone(),
                })
                .collect();
            STopDecl::Name(SNamedDecl {
                mark: n.mark,
                name: n.name.clone(),
                self_var: n.self_var.clone(),
                members,
                span: n.span,
            })
        }
    }
}

fn rewrite_expr(
    expr: &SExpr,
    sigs: &IndexMap<(MemberName, usize), TupleSig>,
    counter: &mut u32,
    diags: &mut Vec<ParseDiagnostic>,
) -> SExpr {
    let span = expr.span;
    let kind = match &expr.kind {
        SExprKind::Path(p) => SExprKind::Path(p.clone()),
        SExprKind::Sel(t, v) => {
            SExprKind::Sel(Box::new(rewrite_expr(t, sigs, counter, diags)), v.clone())
        }
        SExprKind::Call(target, f, args) if args.len() != 1 => {
            let target = Box::new(rewrite_expr(target, sigs, counter, diags));
            let args: Vec<SExpr> = args
                .iter()
                .map(|a| rewrite_expr(a, sigs, counter, diags))
                .collect();
            match sigs.get(&(f.clone(), args.len())) {
                None => {
                    diags.push(ParseDiagnostic::error(
                        span,
                        code::DESUGAR,
                        format!(
                            "no {}-ary method named `{f}` is declared anywhere; cannot desugar call",
                            args.len()
                        ),
                    ));
                    SExprKind::Call(target, f.clone(), args)
                }
                Some(sig) => {
                    let tmp = VarName::new(format!("$t{counter}"));
                    *counter += 1;
                    let defs = args
                        .iter()
                        .enumerate()
                        .map(|(i, a)| SObjDefn::Field {
                            label: positional_label(i),
                            ty: sig.param_tys[i].clone(),
                            value: a.clone(),
                        })
                        .collect();
                    let tuple = SExpr::new(
                        SExprKind::New {
                            ty: Type::named(sig.type_name.as_str()),
                            self_var: VarName::new("$self"),
                            defs,
                        },
                        span,
                    );
                    let call = SExpr::new(
                        SExprKind::Call(
                            target,
                            f.clone(),
                            vec![SExpr::new(SExprKind::Path(Path::Var(tmp.clone())), span)],
                        ),
                        span,
                    );
                    SExprKind::Let {
                        var: tmp,
                        ascription: None,
                        bound: Box::new(tuple),
                        body: Box::new(call),
                    }
                }
            }
        }
        SExprKind::Call(target, f, args) => SExprKind::Call(
            Box::new(rewrite_expr(target, sigs, counter, diags)),
            f.clone(),
            args.iter()
                .map(|a| rewrite_expr(a, sigs, counter, diags))
                .collect(),
        ),
        SExprKind::New { ty, self_var, defs } => SExprKind::New {
            ty: ty.clone(),
            self_var: self_var.clone(),
            defs: defs
                .iter()
                .map(|d| match d {
                    SObjDefn::TypeMember { .. } => d.clone(),
                    SObjDefn::Field { label, ty, value } => SObjDefn::Field {
                        label: label.clone(),
                        ty: ty.clone(),
                        value: rewrite_expr(value, sigs, counter, diags),
                    },
                    SObjDefn::Method {
                        label,
                        params,
                        result_ty,
                        body,
                        span,
                    } => {
                        let body = rewrite_expr(body, sigs, counter, diags);
                        if params.len() == 1 {
                            return SObjDefn::Method {
                                label: label.clone(),
                                params: params.clone(),
                                result_ty: result_ty.clone(),
                                body,
                                span: *span,
                            };
                        }
                        match tupled_param(label, params, result_ty, *span, sigs, diags) {
                            None => SObjDefn::Method {
                                label: label.clone(),
                                params: params.clone(),
                                result_ty: result_ty.clone(),
                                body,
                                span: *span,
                            },
                            Some((param, param_ty, bindings)) => {
                                let mut wrapped = body;
                                for (orig, field) in bindings.into_iter().rev() {
                                    let select = SExpr::new(
                                        SExprKind::Sel(
                                            Box::new(SExpr::new(
                                                SExprKind::Path(Path::Var(param.clone())),
                                                *span,
                                            )),
                                            field,
                                        ),
                                        *span,
                                    );
                                    wrapped = SExpr::new(
                                        SExprKind::Let {
                                            var: orig,
                                            ascription: None,
                                            bound: Box::new(select),
                                            body: Box::new(wrapped),
                                        },
                                        *span,
                                    );
                                }
                                SObjDefn::Method {
                                    label: label.clone(),
                                    params: vec![(param, param_ty)],
                                    result_ty: result_ty.clone(),
                                    body: wrapped,
                                    span: *span,
                                }
                            }
                        }
                    }
                })
                .collect(),
        },
        SExprKind::Let {
            var,
            ascription,
            bound,
            body,
        } => SExprKind::Let {
            var: var.clone(),
            ascription: ascription.clone(),
            bound: Box::new(rewrite_expr(bound, sigs, counter, diags)),
            body: Box::new(rewrite_expr(body, sigs, counter, diags)),
        },
    };
    SExpr::new(kind, span)
}

// ---------------------------------------------------------------------------
// Lowering to the core syntax
// ---------------------------------------------------------------------------

pub fn lower_program(program: &SProgram, diags: &mut Vec<ParseDiagnostic>) -> Option<Program> {
    let decls = program
        .decls
        .iter()
        .map(|d| lower_decl(d, diags))
        .collect::<Option<Vec<_>>>()?;
    let main = lower_expr(program.main.as_ref()?, diags)?;
    Some(Program { decls, main })
}

pub fn lower_decl(decl: &STopDecl, diags: &mut Vec<ParseDiagnostic>) -> Option<TopDecl> {
    match decl {
        STopDecl::Subtype(s) => Some(TopDecl::Subtype(s.clone())),
        STopDecl::Name(n) => {
            let members = n
                .members
                .iter()
                .map(|m| match m {
                    SMemberDecl::TypeMember(d) => Some(MemberDecl::TypeMember(d.clone())),
                    SMemberDecl::Field(d) => Some(MemberDecl::Field(d.clone())),
                    SMemberDecl::Method(d) => {
                        let (param, param_ty) = unary_param(&d.params, d.span, &d.label, diags)?;
                        Some(MemberDecl::Method(MethodDecl {
                            label: d.label.clone(),
                            param,
                            param_ty,
                            result_ty: d.result_ty.clone(),
                        }))
                    }
                })
                .collect::<Option<Vec<_>>>()?;
            Some(TopDecl::Name(NamedTypeDecl {
                mark: n.mark,
                name: n.name.clone(),
                self_var: n.self_var.clone(),
                members,
                span: n.span,
            }))
        }
    }
}

fn unary_param(
    params: &[(VarName, Type)],
    span: Span,
    label: &MemberName,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<(VarName, Type)> {
    if params.len() == 1 {
        Some(params[0].clone())
    } else {
        diags.push(ParseDiagnostic::error(
            span,
            code::DESUGAR,
            format!("method `{label}` was not reduced to unary form"),
        ));
        None
    }
}

fn lower_expr(expr: &SExpr, diags: &mut Vec<ParseDiagnostic>) -> Option<Expr> {
    let span = expr.span;
    let path_of = |e: &SExpr, what: &str, diags: &mut Vec<ParseDiagnostic>| -> Option<Path> {
        match e.as_path() {
            Some(p) => Some(p.clone()),
            None => {
                anf_violation(e.span, what, diags);
                None
            }
        }
    };
    let kind = match &expr.kind {
        SExprKind::Path(p) => ExprKind::Path(p.clone()),
        SExprKind::Sel(target, v) => {
            ExprKind::FieldSel(path_of(target, "field selection target", diags)?, v.clone())
        }
        SExprKind::Call(target, f, args) => {
            let target = path_of(target, "method call target", diags)?;
            if args.len() != 1 {
                diags.push(ParseDiagnostic::error(
                    span,
                    code::DESUGAR,
                    format!("call of `{f}` was not reduced to unary form"),
                ));
                return None;
            }
            let arg = path_of(&args[0], "method argument", diags)?;
            ExprKind::Call {
                target,
                method: f.clone(),
                arg,
            }
        }
        SExprKind::New { ty, self_var, defs } => {
            let defs = defs
                .iter()
                .map(|d| match d {
                    SObjDefn::TypeMember { label, ty } => Some(ObjMemberDefn::TypeMember {
                        label: label.clone(),
                        ty: ty.clone(),
                    }),
                    SObjDefn::Field { label, ty, value } => Some(ObjMemberDefn::Field {
                        label: label.clone(),
                        ty: ty.clone(),
                        value: path_of(value, "field value", diags)?,
                    }),
                    SObjDefn::Method {
                        label,
                        params,
                        result_ty,
                        body,
                        span,
                    } => {
                        let (param, param_ty) = unary_param(params, *span, label, diags)?;
                        Some(ObjMemberDefn::Method {
                            label: label.clone(),
                            param,
                            param_ty,
                            result_ty: result_ty.clone(),
                            body: Box::new(lower_expr(body, diags)?),
                        })
                    }
                })
                .collect::<Option<Vec<_>>>()?;
            ExprKind::New {
                ty: ty.clone(),
                self_var: self_var.clone(),
                defs,
            }
        }
        SExprKind::Let {
            var,
            ascription,
            bound,
            body,
        } => ExprKind::Let {
            var: var.clone(),
            ascription: ascription.clone(),
            bound: Box::new(lower_expr(bound, diags)?),
            body: Box::new(lower_expr(body, diags)?),
        },
    };
    Some(Expr::new(kind, span))
}
