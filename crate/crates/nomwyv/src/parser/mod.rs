//! Lexing and parsing of `.nwyv` source into the core syntax.
//!
//! Parsing runs in stages: lex, recursive-descent parse into the surface
//! form, A-normal-form and duplicate checks, multi-parameter desugaring,
//! then lowering to the core syntax. Assertions (`assert τ <: τ` and
//! `assert τ </: τ`) are collected separately and are not part of the
//! program's declarations. The parser never panics: every input yields
//! either a program or a list of diagnostics, resynchronizing at the next
//! top-level declaration after an error.

pub mod lexer;
pub mod surface;

use std::fmt;

use crate::syntax::{
    BaseType, Bound, FieldDecl, FreeVars, LocId, MemberName, Path, Program, Refinement,
    RefinementMember, ShapeMark, Span, SubtypeDecl, TopDecl, Type, TypeMemberDecl, TypeName,
    VarName, RESERVED_NAME_CHAR,
};

use lexer::{lex, Tok, Token};
use surface::{
    desugar_multi_params, lower_program, validate_anf, SExpr, SExprKind, SMemberDecl, SMethodDecl,
    SNamedDecl, SObjDefn, SProgram, STopDecl,
};

/// Diagnostic codes, grouped by pipeline stage (`P` = parse).
pub mod code {
    pub const UNKNOWN_TOKEN: &str = "P0001";
    pub const UNEXPECTED: &str = "P0002";
    pub const DUPLICATE_TYPE: &str = "P0003";
    pub const DUPLICATE_LABEL: &str = "P0004";
    pub const ANF_VIOLATION: &str = "P0005";
    pub const LOC_IN_SOURCE: &str = "P0006";
    pub const RESERVED_NAME: &str = "P0007";
    pub const PATH_TOO_LONG: &str = "P0008";
    pub const MISSING_MAIN: &str = "P0009";
    pub const DESUGAR: &str = "P0010";
    pub const PRELUDE: &str = "P0011";
    pub const ASSERT_NOT_CLOSED: &str = "P0012";
}

/// A source file: a path (for diagnostics) and its text.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile {
            path: path.into(),
            text: text.into(),
        }
    }

    pub fn read(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(SourceFile {
            path: path.display().to_string(),
            text: std::fs::read_to_string(path)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ParseDiagnostic {
    pub span: Span,
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn error(span: Span, code: &'static str, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            span,
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    /// Render as `line:col: severity[code]: message` (the file name is
    /// prepended by the caller, which knows it).
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}[{}]: {}",
            self.span.line, self.span.col, self.severity, self.code, self.message
        )
    }
}

/// A top-level `assert` directive, checked after typechecking.
#[derive(Clone, Debug, PartialEq)]
pub struct AssertDirective {
    pub lhs: Type,
    pub rhs: Type,
    pub expected: bool,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub require_main: bool,
    /// Permit identifiers containing the reserved `$` character; used when
    /// re-parsing printed programs that contain generated names.
    pub allow_reserved_names: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            require_main: true,
            allow_reserved_names: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParseOutput {
    pub program: Program,
    pub asserts: Vec<AssertDirective>,
}

/// Parse a whole program. On success the AST satisfies every structural
/// invariant of the core syntax; otherwise all collected diagnostics are
/// returned.
pub fn parse_program(
    src: &SourceFile,
    opts: &ParseOptions,
) -> Result<ParseOutput, Vec<ParseDiagnostic>> {
    let (surface, asserts, mut diags) = parse_surface(src, opts);
    validate_anf(&surface, &mut diags);
    validate_duplicates(&surface, &mut diags);
    let (surface, mut desugar_diags) = desugar_multi_params(surface);
    diags.append(&mut desugar_diags);

    if surface.main.is_none() && opts.require_main {
        diags.push(ParseDiagnostic::error(
            Span::default(),
            code::MISSING_MAIN,
            "missing main expression",
        ));
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(diags);
    }
    match lower_program(&surface, &mut diags) {
        Some(program) if !diags.iter().any(|d| d.severity == Severity::Error) => {
            Ok(ParseOutput { program, asserts })
        }
        _ => Err(diags),
    }
}

/// Parse a prelude file: declarations only, no main expression, no asserts.
pub fn parse_prelude(src: &SourceFile) -> Result<Vec<TopDecl>, Vec<ParseDiagnostic>> {
    let opts = ParseOptions {
        require_main: false,
        allow_reserved_names: false,
    };
    let (surface, asserts, mut diags) = parse_surface(src, &opts);
    validate_anf(&surface, &mut diags);
    validate_duplicates(&surface, &mut diags);
    if surface.main.is_some() {
        diags.push(ParseDiagnostic::error(
            Span::default(),
            code::PRELUDE,
            "a prelude contains declarations only, not a main expression",
        ));
    }
    if !asserts.is_empty() {
        diags.push(ParseDiagnostic::error(
            asserts[0].span,
            code::PRELUDE,
            "a prelude contains declarations only, not asserts",
        ));
    }
    let (surface, mut desugar_diags) = desugar_multi_params(surface);
    diags.append(&mut desugar_diags);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(diags);
    }
    let decls = surface
        .decls
        .iter()
        .map(|d| surface::lower_decl(d, &mut diags))
        .collect::<Option<Vec<_>>>();
    match decls {
        Some(decls) if !diags.iter().any(|d| d.severity == Severity::Error) => Ok(decls),
        _ => Err(diags),
    }
}

/// Parse a single type, e.g. for `--lhs`/`--rhs` command-line queries.
pub fn parse_type_str(text: &str) -> Result<Type, Vec<ParseDiagnostic>> {
    let (tokens, lex_errors) = lex(text);
    let mut parser = Parser::new(&tokens, true);
    for e in lex_errors {
        parser.diags.push(ParseDiagnostic::error(
            e.span,
            code::UNKNOWN_TOKEN,
            e.message,
        ));
    }
    let ty = parser.parse_type();
    if parser.peek() != &Tok::Eof {
        let (tok, span) = parser.peek_with_span();
        parser.diags.push(ParseDiagnostic::error(
            span,
            code::UNEXPECTED,
            format!("unexpected {} after type", tok.describe()),
        ));
    }
    match ty {
        Ok(t) if parser.diags.is_empty() => Ok(t),
        _ => Err(parser.diags),
    }
}

fn parse_surface(
    src: &SourceFile,
    opts: &ParseOptions,
) -> (SProgram, Vec<AssertDirective>, Vec<ParseDiagnostic>) {
    let (tokens, lex_errors) = lex(&src.text);
    let mut parser = Parser::new(&tokens, opts.allow_reserved_names);
    for e in lex_errors {
        parser.diags.push(ParseDiagnostic::error(
            e.span,
            code::UNKNOWN_TOKEN,
            e.message,
        ));
    }

    let mut decls = Vec::new();
    let mut asserts = Vec::new();
    loop {
        match parser.peek() {
            Tok::AtShape | Tok::KwName => match parser.parse_named_decl() {
                Ok(d) => decls.push(STopDecl::Name(d)),
                Err(()) => parser.resync_top(),
            },
            Tok::KwSubtype => match parser.parse_subtype_decl() {
                Ok(d) => decls.push(STopDecl::Subtype(d)),
                Err(()) => parser.resync_top(),
            },
            Tok::KwAssert => match parser.parse_assert() {
                Ok(a) => asserts.push(a),
                Err(()) => parser.resync_top(),
            },
            _ => break,
        }
    }

    let main = if parser.peek() == &Tok::Eof {
        None
    } else {
        match parser.parse_expr() {
            Ok(e) => {
                if parser.peek() != &Tok::Eof {
                    let (tok, span) = parser.peek_with_span();
                    parser.diags.push(ParseDiagnostic::error(
                        span,
                        code::UNEXPECTED,
                        format!("unexpected {} after the main expression", tok.describe()),
                    ));
                }
                Some(e)
            }
            Err(()) => None,
        }
    };

    (SProgram { decls, main }, asserts, parser.diags)
}

fn validate_duplicates(program: &SProgram, diags: &mut Vec<ParseDiagnostic>) {
    let mut seen = std::collections::HashSet::new();
    for d in &program.decls {
        if let STopDecl::Name(n) = d {
            if !seen.insert(n.name.clone()) {
                diags.push(ParseDiagnostic::error(
                    n.span,
                    code::DUPLICATE_TYPE,
                    format!("type `{}` is declared more than once", n.name),
                ));
            }
            let mut labels = std::collections::HashSet::new();
            for m in &n.members {
                let (label, span) = match m {
                    SMemberDecl::TypeMember(t) => (&t.label, n.span),
                    SMemberDecl::Field(f) => (&f.label, n.span),
                    SMemberDecl::Method(f) => (&f.label, f.span),
                };
                if !labels.insert(label.clone()) {
                    diags.push(ParseDiagnostic::error(
                        span,
                        code::DUPLICATE_LABEL,
                        format!(
                            "member `{label}` is declared more than once in `{}`",
                            n.name
                        ),
                    ));
                }
            }
        }
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    diags: Vec<ParseDiagnostic>,
    allow_reserved: bool,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token], allow_reserved: bool) -> Self {
        Parser {
            tokens,
            pos: 0,
            diags: Vec::new(),
            allow_reserved,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].tok
    }

    fn peek_with_span(&self) -> (&Tok, Span) {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        (&t.tok, t.span)
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        (t.tok, t.span)
    }

    fn error_here(&mut self, message: String) {
        let (_, span) = self.peek_with_span();
        self.diags
            .push(ParseDiagnostic::error(span, code::UNEXPECTED, message));
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Span, ()> {
        if self.peek() == want {
            Ok(self.advance().1)
        } else {
            let got = self.peek().describe();
            self.error_here(format!("expected {what}, found {got}"));
            Err(())
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), ()> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let (_, span) = self.advance();
                if s.contains(RESERVED_NAME_CHAR) && !self.allow_reserved {
                    self.diags.push(ParseDiagnostic::error(
                        span,
                        code::RESERVED_NAME,
                        format!("identifier `{s}` contains the reserved character `$`"),
                    ));
                }
                Ok((s, span))
            }
            other => {
                self.error_here(format!("expected {what}, found {}", other.describe()));
                Err(())
            }
        }
    }

    /// Skip to the next plausible top-level declaration after an error.
    fn resync_top(&mut self) {
        let mut depth: u32 = 0;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::AtShape
                | Tok::KwName
                | Tok::KwSubtype
                | Tok::KwAssert
                | Tok::KwLet
                | Tok::KwNew
                    if depth == 0 =>
                {
                    return;
                }
                Tok::LBrace => {
                    depth += 1;
                    self.advance();
                }
                Tok::RBrace => {
                    depth = depth.saturating_sub(1);
                    self.advance();
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn parse_shape_mark(&mut self) -> ShapeMark {
        if self.peek() == &Tok::AtShape {
            self.advance();
            ShapeMark::Shape
        } else {
            ShapeMark::Material
        }
    }

    fn parse_named_decl(&mut self) -> Result<SNamedDecl, ()> {
        let mark = self.parse_shape_mark();
        let start = self.expect(&Tok::KwName, "`name`")?;
        let (name, _) = self.ident("a type name")?;
        self.expect(&Tok::LBrace, "`{`")?;
        let (self_var, _) = self.ident("the self binder")?;
        self.expect(&Tok::FatArrow, "`=>`")?;
        let mut members = Vec::new();
        while self.peek() != &Tok::RBrace && self.peek() != &Tok::Eof {
            members.push(self.parse_member_decl()?);
        }
        self.expect(&Tok::RBrace, "`}`")?;
        Ok(SNamedDecl {
            mark,
            name: TypeName::new(name),
            self_var: VarName::new(self_var),
            members,
            span: start,
        })
    }

    fn parse_member_decl(&mut self) -> Result<SMemberDecl, ()> {
        let mark = self.parse_shape_mark();
        match self.peek() {
            Tok::KwType => {
                self.advance();
                let (label, _) = self.ident("a type member label")?;
                let bound = self.parse_bound()?;
                let ty = self.parse_type()?;
                Ok(SMemberDecl::TypeMember(TypeMemberDecl {
                    mark,
                    label: MemberName::new(label),
                    bound,
                    ty,
                }))
            }
            Tok::KwVal => {
                self.advance();
                let (label, _) = self.ident("a field label")?;
                self.expect(&Tok::Colon, "`:`")?;
                let ty = self.parse_type()?;
                Ok(SMemberDecl::Field(FieldDecl {
                    label: MemberName::new(label),
                    ty,
                }))
            }
            Tok::KwDef => {
                let (_, span) = self.advance();
                let (label, _) = self.ident("a method label")?;
                let (params, result_ty) = self.parse_method_sig()?;
                Ok(SMemberDecl::Method(SMethodDecl {
                    label: MemberName::new(label),
                    params,
                    result_ty,
                    span,
                }))
            }
            other => {
                let msg = format!(
                    "expected a member declaration (`type`, `val`, or `def`), found {}",
                    other.describe()
                );
                self.error_here(msg);
                Err(())
            }
        }
    }

    /// Either the parenthesized form `(x: τ, ...) : τr` or the arrow alias
    /// `: τ x -> τr`.
    fn parse_method_sig(&mut self) -> Result<(Vec<(VarName, Type)>, Type), ()> {
        if self.peek() == &Tok::LParen {
            self.advance();
            let mut params = Vec::new();
            if self.peek() != &Tok::RParen {
                loop {
                    let (p, _) = self.ident("a parameter name")?;
                    self.expect(&Tok::Colon, "`:`")?;
                    let ty = self.parse_type()?;
                    params.push((VarName::new(p), ty));
                    if self.peek() == &Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect(&Tok::RParen, "`)`")?;
            self.expect(&Tok::Colon, "`:`")?;
            let result_ty = self.parse_type()?;
            Ok((params, result_ty))
        } else {
            self.expect(&Tok::Colon, "`(` or `:`")?;
            let param_ty = self.parse_type()?;
            let (p, _) = self.ident("a parameter name")?;
            self.expect(&Tok::ThinArrow, "`->`")?;
            let result_ty = self.parse_type()?;
            Ok((vec![(VarName::new(p), param_ty)], result_ty))
        }
    }

    fn parse_subtype_decl(&mut self) -> Result<SubtypeDecl, ()> {
        let start = self.expect(&Tok::KwSubtype, "`subtype`")?;
        let (lhs, _) = self.ident("a type name")?;
        let lhs_refinement = if self.refinement_follows() {
            self.parse_refinement()?
        } else {
            Refinement::empty()
        };
        self.expect(&Tok::SubtypeOf, "`<:`")?;
        let (rhs, _) = self.ident("a type name")?;
        Ok(SubtypeDecl {
            lhs_name: TypeName::new(lhs),
            lhs_refinement,
            rhs_name: TypeName::new(rhs),
            span: start,
        })
    }

    fn parse_assert(&mut self) -> Result<AssertDirective, ()> {
        let start = self.expect(&Tok::KwAssert, "`assert`")?;
        let lhs = self.parse_type()?;
        let expected = match self.peek() {
            Tok::SubtypeOf => {
                self.advance();
                true
            }
            Tok::NotSubtypeOf => {
                self.advance();
                false
            }
            other => {
                let msg = format!("expected `<:` or `</:`, found {}", other.describe());
                self.error_here(msg);
                return Err(());
            }
        };
        let rhs = self.parse_type()?;
        for side in [&lhs, &rhs] {
            if !side.free_vars().is_empty() {
                self.diags.push(ParseDiagnostic::error(
                    start,
                    code::ASSERT_NOT_CLOSED,
                    "assert types mention only top-level names and literal refinements",
                ));
            }
        }
        Ok(AssertDirective {
            lhs,
            rhs,
            expected,
            span: start,
        })
    }

    fn parse_bound(&mut self) -> Result<Bound, ()> {
        match self.peek() {
            Tok::LeBound => {
                self.advance();
                Ok(Bound::Le)
            }
            Tok::GeBound => {
                self.advance();
                Ok(Bound::Ge)
            }
            Tok::EqSign => {
                self.advance();
                Ok(Bound::Eq)
            }
            other => {
                let msg = format!("expected `<=`, `>=`, or `=`, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    fn parse_type(&mut self) -> Result<Type, ()> {
        match self.peek().clone() {
            Tok::KwTop => {
                self.advance();
                Ok(Type::Top)
            }
            Tok::KwBot => {
                self.advance();
                Ok(Type::Bottom)
            }
            _ => {
                let base = self.parse_base_type()?;
                let refinement = if self.refinement_follows() {
                    self.parse_refinement()?
                } else {
                    Refinement::empty()
                };
                Ok(Type::Refined { base, refinement })
            }
        }
    }

    fn parse_base_type(&mut self) -> Result<BaseType, ()> {
        let root: Path = match self.peek().clone() {
            Tok::LocLit(n) => {
                let (_, span) = self.advance();
                self.diags.push(ParseDiagnostic::error(
                    span,
                    code::LOC_IN_SOURCE,
                    "store locations are an intermediate form and cannot appear in source",
                ));
                Path::Loc(LocId(n))
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident("a type name or variable")?;
                if self.peek() != &Tok::Dot {
                    return Ok(BaseType::Named(TypeName::new(name)));
                }
                Path::Var(VarName::new(name))
            }
            other => {
                let msg = format!("expected a type, found {}", other.describe());
                self.error_here(msg);
                return Err(());
            }
        };
        self.expect(&Tok::Dot, "`.`")?;
        let (member, _) = self.ident("a type member label")?;
        if self.peek() == &Tok::Dot && matches!(self.peek2(), Tok::Ident(_)) {
            let (_, span) = self.advance();
            self.diags.push(ParseDiagnostic::error(
                span,
                code::PATH_TOO_LONG,
                "paths have exactly one element; bind the prefix with a `let` first",
            ));
            let _ = self.ident("a member label");
        }
        Ok(BaseType::Sel(root, MemberName::new(member)))
    }

    /// Distinguish `T { type ... }` (a refinement) from the `{ x => ... }`
    /// body of a `new`: refinement braces always open on `type` or close
    /// immediately.
    fn refinement_follows(&self) -> bool {
        self.peek() == &Tok::LBrace && matches!(self.peek2(), Tok::KwType | Tok::RBrace)
    }

    fn parse_refinement(&mut self) -> Result<Refinement, ()> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut members = Vec::new();
        let mut labels = std::collections::HashSet::new();
        while self.peek() != &Tok::RBrace && self.peek() != &Tok::Eof {
            let span = self.expect(&Tok::KwType, "`type` (refinements hold type members only)")?;
            let (label, _) = self.ident("a type member label")?;
            let bound = self.parse_bound()?;
            let ty = self.parse_type()?;
            if !labels.insert(label.clone()) {
                self.diags.push(ParseDiagnostic::error(
                    span,
                    code::DUPLICATE_LABEL,
                    format!("refinement member `{label}` appears more than once"),
                ));
            }
            members.push(RefinementMember {
                label: MemberName::new(label),
                bound,
                ty,
            });
            if self.peek() == &Tok::Comma {
                self.advance();
            }
        }
        self.expect(&Tok::RBrace, "`}`")?;
        Ok(Refinement::new(members))
    }

    fn parse_expr(&mut self) -> Result<SExpr, ()> {
        match self.peek() {
            Tok::KwLet => {
                let (_, span) = self.advance();
                let (var, _) = self.ident("a binding name")?;
                let ascription = if self.peek() == &Tok::Colon {
                    self.advance();
                    Some(self.parse_type()?)
                } else {
                    None
                };
                self.expect(&Tok::EqSign, "`=`")?;
                let bound = self.parse_expr()?;
                self.expect(&Tok::KwIn, "`in`")?;
                let body = self.parse_expr()?;
                Ok(SExpr::new(
                    SExprKind::Let {
                        var: VarName::new(var),
                        ascription,
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                    span,
                ))
            }
            Tok::KwNew => {
                let (_, span) = self.advance();
                let ty = self.parse_type()?;
                self.expect(&Tok::LBrace, "`{`")?;
                let (self_var, _) = self.ident("the self binder")?;
                self.expect(&Tok::FatArrow, "`=>`")?;
                let mut defs = Vec::new();
                let mut labels = std::collections::HashSet::new();
                while self.peek() != &Tok::RBrace && self.peek() != &Tok::Eof {
                    let d = self.parse_obj_defn()?;
                    let label = match &d {
                        SObjDefn::TypeMember { label, .. } => label.clone(),
                        SObjDefn::Field { label, .. } => label.clone(),
                        SObjDefn::Method { label, .. } => label.clone(),
                    };
                    if !labels.insert(label.clone()) {
                        self.diags.push(ParseDiagnostic::error(
                            span,
                            code::DUPLICATE_LABEL,
                            format!("object member `{label}` is defined more than once"),
                        ));
                    }
                    defs.push(d);
                }
                self.expect(&Tok::RBrace, "`}`")?;
                Ok(SExpr::new(
                    SExprKind::New {
                        ty,
                        self_var: VarName::new(self_var),
                        defs,
                    },
                    span,
                ))
            }
            _ => self.parse_postfix_expr(),
        }
    }

    fn parse_postfix_expr(&mut self) -> Result<SExpr, ()> {
        let mut expr = self.parse_atom()?;
        while self.peek() == &Tok::Dot {
            self.advance();
            let (label, span) = self.ident("a member label")?;
            if self.peek() == &Tok::LParen {
                self.advance();
                let mut args = Vec::new();
                if self.peek() != &Tok::RParen {
                    loop {
                        args.push(self.parse_expr()?);
                        if self.peek() == &Tok::Comma {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(&Tok::RParen, "`)`")?;
                expr = SExpr::new(
                    SExprKind::Call(Box::new(expr), MemberName::new(label), args),
                    span,
                );
            } else {
                expr = SExpr::new(SExprKind::Sel(Box::new(expr), MemberName::new(label)), span);
            }
        }
        Ok(expr)
    }

    fn parse_atom(&mut self) -> Result<SExpr, ()> {
        match self.peek().clone() {
            Tok::Ident(_) => {
                let (name, span) = self.ident("an expression")?;
                Ok(SExpr::new(
                    SExprKind::Path(Path::Var(VarName::new(name))),
                    span,
                ))
            }
            Tok::LocLit(n) => {
                let (_, span) = self.advance();
                self.diags.push(ParseDiagnostic::error(
                    span,
                    code::LOC_IN_SOURCE,
                    "store locations are an intermediate form and cannot appear in source",
                ));
                Ok(SExpr::new(SExprKind::Path(Path::Loc(LocId(n))), span))
            }
            other => {
                let msg = format!("expected an expression, found {}", other.describe());
                self.error_here(msg);
                Err(())
            }
        }
    }

    fn parse_obj_defn(&mut self) -> Result<SObjDefn, ()> {
        match self.peek() {
            Tok::KwType => {
                self.advance();
                let (label, _) = self.ident("a type member label")?;
                self.expect(&Tok::EqSign, "`=` (object type members are exact)")?;
                let ty = self.parse_type()?;
                Ok(SObjDefn::TypeMember {
                    label: MemberName::new(label),
                    ty,
                })
            }
            Tok::KwVal => {
                self.advance();
                let (label, _) = self.ident("a field label")?;
                self.expect(&Tok::Colon, "`:`")?;
                let ty = self.parse_type()?;
                self.expect(&Tok::EqSign, "`=`")?;
                let value = self.parse_expr()?;
                Ok(SObjDefn::Field {
                    label: MemberName::new(label),
                    ty,
                    value,
                })
            }
            Tok::KwDef => {
                let (_, span) = self.advance();
                let (label, _) = self.ident("a method label")?;
                let (params, result_ty) = self.parse_method_sig()?;
                self.expect(&Tok::EqSign, "`=`")?;
                let body = self.parse_expr()?;
                Ok(SObjDefn::Method {
                    label: MemberName::new(label),
                    params,
                    result_ty,
                    body,
                    span,
                })
            }
            other => {
                let msg = format!(
                    "expected an object member definition (`type`, `val`, or `def`), found {}",
                    other.describe()
                );
                self.error_here(msg);
                Err(())
            }
        }
    }
}
