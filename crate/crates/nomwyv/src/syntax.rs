//! Abstract syntax for the calculus: programs, declarations, types,
//! expressions, and the static/runtime contexts, together with the merge
//! operators and capture-avoiding path substitution that the rest of the
//! pipeline is built on.
//!
//! Everything here is immutable after construction and cheap to clone;
//! names are shared `Arc<str>` handles.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexMap;

/// Character reserved for generated names; the lexer rejects it in user code.
pub const RESERVED_NAME_CHAR: char = '$';

macro_rules! name_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                $name(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name::new(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", &*self.0)
            }
        }
    };
}

name_newtype!(
    /// Name of a top-level declared type.
    TypeName
);
name_newtype!(
    /// Label of a type member, field, or method.
    MemberName
);
name_newtype!(
    /// A term-level variable (let binding, self binder, method parameter).
    VarName
);

/// A heap location. Locations are an intermediate form: they arise during
/// evaluation and in store typing, never in parsed source.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LocId(pub u32);

impl fmt::Display for LocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Source position of a syntax node. Spans are carried for diagnostics only
/// and are transparent to equality and hashing, so structural comparison of
/// syntax ignores where it was written.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub fn new(line: u32, col: u32, len: u32) -> Self {
        Span { line, col, len }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Material/shape annotation on named types and type members.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum ShapeMark {
    #[default]
    Material,
    Shape,
}

impl ShapeMark {
    pub fn is_shape(self) -> bool {
        matches!(self, ShapeMark::Shape)
    }
}

/// Bound of a type member: upper (`<=`), lower (`>=`), or exact (`=`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Bound {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Le => "<=",
            Bound::Ge => ">=",
            Bound::Eq => "=",
        })
    }
}

/// A singleton path: a variable or a heap location.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Path {
    Var(VarName),
    Loc(LocId),
}

impl Path {
    pub fn var(name: impl AsRef<str>) -> Self {
        Path::Var(VarName::new(name))
    }

    pub fn root_var(&self) -> Option<&VarName> {
        match self {
            Path::Var(x) => Some(x),
            Path::Loc(_) => None,
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Path::Var(x) => x.fmt(f),
            Path::Loc(l) => l.fmt(f),
        }
    }
}

/// Base of a refined type: a declared name or a path-dependent member
/// selection `p.t`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BaseType {
    Named(TypeName),
    Sel(Path, MemberName),
}

impl BaseType {
    pub fn named(n: impl AsRef<str>) -> Self {
        BaseType::Named(TypeName::new(n))
    }

    pub fn sel(p: Path, t: impl AsRef<str>) -> Self {
        BaseType::Sel(p, MemberName::new(t))
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseType::Named(n) => n.fmt(f),
            BaseType::Sel(p, t) => write!(f, "{p}.{t}"),
        }
    }
}

/// A type: bottom, top, or a base type carrying a refinement.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Type {
    Bottom,
    Top,
    Refined {
        base: BaseType,
        refinement: Refinement,
    },
}

impl Type {
    pub fn named(n: impl AsRef<str>) -> Self {
        Type::Refined {
            base: BaseType::named(n),
            refinement: Refinement::empty(),
        }
    }

    pub fn refined(base: BaseType, refinement: Refinement) -> Self {
        Type::Refined { base, refinement }
    }

    pub fn sel(p: Path, t: impl AsRef<str>) -> Self {
        Type::Refined {
            base: BaseType::sel(p, t),
            refinement: Refinement::empty(),
        }
    }

    pub fn base(&self) -> Option<&BaseType> {
        match self {
            Type::Refined { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn refinement(&self) -> Option<&Refinement> {
        match self {
            Type::Refined { refinement, .. } => Some(refinement),
            _ => None,
        }
    }

    /// Merge extra refinements into this type (`+r`). Right-hand members win
    /// on label conflicts; top and bottom carry no refinement and are
    /// returned as-is.
    pub fn refined_with(&self, extra: &Refinement) -> Type {
        match self {
            Type::Refined { base, refinement } => Type::Refined {
                base: base.clone(),
                refinement: merge_refinements(refinement, extra),
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bottom => f.write_str("Bot"),
            Type::Top => f.write_str("Top"),
            Type::Refined { base, refinement } => {
                base.fmt(f)?;
                if !refinement.is_empty() {
                    write!(f, " {refinement}")?;
                }
                Ok(())
            }
        }
    }
}

/// One `type t B τ` entry inside a refinement.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RefinementMember {
    pub label: MemberName,
    pub bound: Bound,
    pub ty: Type,
}

impl RefinementMember {
    pub fn new(label: impl AsRef<str>, bound: Bound, ty: Type) -> Self {
        RefinementMember {
            label: MemberName::new(label),
            bound,
            ty,
        }
    }
}

impl fmt::Display for RefinementMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type {} {} {}", self.label, self.bound, self.ty)
    }
}

/// A brace-delimited list of type-member rebindings.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Refinement {
    pub members: Vec<RefinementMember>,
}

impl Refinement {
    pub fn empty() -> Self {
        Refinement {
            members: Vec::new(),
        }
    }

    pub fn new(members: Vec<RefinementMember>) -> Self {
        Refinement { members }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, label: &MemberName) -> Option<&RefinementMember> {
        self.members.iter().find(|m| &m.label == label)
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, " {m}")?;
        }
        if !self.members.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str("}")
    }
}

/// Merge two refinements (`+r`): members of `right` override same-labeled
/// members of `left`; surviving left members keep their order and precede
/// the right members.
pub fn merge_refinements(left: &Refinement, right: &Refinement) -> Refinement {
    let mut members: Vec<RefinementMember> = left
        .members
        .iter()
        .filter(|m| right.get(&m.label).is_none())
        .cloned()
        .collect();
    members.extend(right.members.iter().cloned());
    Refinement { members }
}

/// Declaration of a type member inside a named type.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TypeMemberDecl {
    pub mark: ShapeMark,
    pub label: MemberName,
    pub bound: Bound,
    pub ty: Type,
}

impl TypeMemberDecl {
    pub fn as_refinement_member(&self) -> RefinementMember {
        RefinementMember {
            label: self.label.clone(),
            bound: self.bound,
            ty: self.ty.clone(),
        }
    }
}

/// Declaration of a field inside a named type.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FieldDecl {
    pub label: MemberName,
    pub ty: Type,
}

/// Declaration of a method inside a named type. The result type may mention
/// the parameter.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MethodDecl {
    pub label: MemberName,
    pub param: VarName,
    pub param_ty: Type,
    pub result_ty: Type,
}

/// Any member declaration.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum MemberDecl {
    TypeMember(TypeMemberDecl),
    Field(FieldDecl),
    Method(MethodDecl),
}

impl MemberDecl {
    pub fn label(&self) -> &MemberName {
        match self {
            MemberDecl::TypeMember(d) => &d.label,
            MemberDecl::Field(d) => &d.label,
            MemberDecl::Method(d) => &d.label,
        }
    }

    pub fn as_type_member(&self) -> Option<&TypeMemberDecl> {
        match self {
            MemberDecl::TypeMember(d) => Some(d),
            _ => None,
        }
    }
}

impl fmt::Display for MemberDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberDecl::TypeMember(d) => {
                if d.mark.is_shape() {
                    f.write_str("@shape ")?;
                }
                write!(f, "type {} {} {}", d.label, d.bound, d.ty)
            }
            MemberDecl::Field(d) => write!(f, "val {}: {}", d.label, d.ty),
            MemberDecl::Method(d) => write!(
                f,
                "def {}({}: {}): {}",
                d.label, d.param, d.param_ty, d.result_ty
            ),
        }
    }
}

/// Merge two member-declaration lists (`+σ`): same override semantics as
/// refinement merge, across all member kinds (labels share one namespace).
pub fn merge_members(left: &[MemberDecl], right: &[MemberDecl]) -> Vec<MemberDecl> {
    let mut members: Vec<MemberDecl> = left
        .iter()
        .filter(|m| !right.iter().any(|r| r.label() == m.label()))
        .cloned()
        .collect();
    members.extend(right.iter().cloned());
    members
}

/// A top-level named type declaration `α name n { x => σ̄ }`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NamedTypeDecl {
    pub mark: ShapeMark,
    pub name: TypeName,
    pub self_var: VarName,
    pub members: Vec<MemberDecl>,
    pub span: Span,
}

/// A top-level subtype declaration `subtype n r <: n'`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SubtypeDecl {
    pub lhs_name: TypeName,
    pub lhs_refinement: Refinement,
    pub rhs_name: TypeName,
    pub span: Span,
}

/// Any top-level declaration.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TopDecl {
    Name(NamedTypeDecl),
    Subtype(SubtypeDecl),
}

/// Member definitions inside a `new` object literal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ObjMemberDefn {
    /// `type t = τ`; object type members are always exact bindings.
    TypeMember { label: MemberName, ty: Type },
    Field {
        label: MemberName,
        ty: Type,
        value: Path,
    },
    Method {
        label: MemberName,
        param: VarName,
        param_ty: Type,
        result_ty: Type,
        body: Box<Expr>,
    },
}

impl ObjMemberDefn {
    pub fn label(&self) -> &MemberName {
        match self {
            ObjMemberDefn::TypeMember { label, .. } => label,
            ObjMemberDefn::Field { label, .. } => label,
            ObjMemberDefn::Method { label, .. } => label,
        }
    }
}

/// Expressions, in A-normal form: method targets, arguments, and field
/// values are all singleton paths.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ExprKind {
    Path(Path),
    FieldSel(Path, MemberName),
    Call {
        target: Path,
        method: MemberName,
        arg: Path,
    },
    New {
        ty: Type,
        self_var: VarName,
        defs: Vec<ObjMemberDefn>,
    },
    Let {
        var: VarName,
        ascription: Option<Type>,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn path(p: Path) -> Self {
        Expr::new(ExprKind::Path(p), Span::default())
    }

    pub fn var(name: impl AsRef<str>) -> Self {
        Expr::path(Path::var(name))
    }
}

/// A whole program: declarations plus a main expression.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Program {
    pub decls: Vec<TopDecl>,
    pub main: Expr,
}

impl Program {
    pub fn named_decls(&self) -> impl Iterator<Item = &NamedTypeDecl> {
        self.decls.iter().filter_map(|d| match d {
            TopDecl::Name(n) => Some(n),
            TopDecl::Subtype(_) => None,
        })
    }

    pub fn subtype_decls(&self) -> impl Iterator<Item = &SubtypeDecl> {
        self.decls.iter().filter_map(|d| match d {
            TopDecl::Subtype(s) => Some(s),
            TopDecl::Name(_) => None,
        })
    }
}

/// One named type's definition as recorded in the definition table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypeDef {
    pub mark: ShapeMark,
    pub self_var: VarName,
    pub members: Vec<MemberDecl>,
    pub span: Span,
}

impl TypeDef {
    pub fn member(&self, label: &MemberName) -> Option<&MemberDecl> {
        self.members.iter().find(|m| m.label() == label)
    }

    pub fn type_members(&self) -> impl Iterator<Item = &TypeMemberDecl> {
        self.members.iter().filter_map(|m| m.as_type_member())
    }
}

/// The name-definition context Δ: every declared name mapped to its
/// definition, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct DefTable {
    defs: IndexMap<TypeName, TypeDef>,
}

impl DefTable {
    pub fn new() -> Self {
        DefTable::default()
    }

    pub fn insert(&mut self, name: TypeName, def: TypeDef) -> bool {
        self.defs.insert(name, def).is_none()
    }

    pub fn get(&self, name: &TypeName) -> Option<&TypeDef> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &TypeName) -> bool {
        self.defs.contains_key(name)
    }

    pub fn mark_of(&self, name: &TypeName) -> Option<ShapeMark> {
        self.defs.get(name).map(|d| d.mark)
    }

    pub fn is_shape(&self, name: &TypeName) -> bool {
        self.mark_of(name).is_some_and(|m| m.is_shape())
    }

    pub fn names(&self) -> impl Iterator<Item = &TypeName> {
        self.defs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeName, &TypeDef)> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }
}

/// The declared subtype relation Σ, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct SubtypeTable {
    entries: Vec<SubtypeDecl>,
}

impl SubtypeTable {
    pub fn new(entries: Vec<SubtypeDecl>) -> Self {
        SubtypeTable { entries }
    }

    pub fn push(&mut self, entry: SubtypeDecl) {
        self.entries.push(entry);
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubtypeDecl> {
        self.entries.iter()
    }

    /// Declared supertypes of `name`, in declaration order.
    pub fn entries_for(&self, name: &TypeName) -> impl Iterator<Item = &SubtypeDecl> {
        let name = name.clone();
        self.entries.iter().filter(move |e| e.lhs_name == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The ordered variable typing context Γ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarEnv {
    entries: Vec<(VarName, Type)>,
}

impl VarEnv {
    pub fn new() -> Self {
        VarEnv::default()
    }

    pub fn push(&mut self, x: VarName, ty: Type) {
        self.entries.push((x, ty));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    /// Rightmost binding of `x`.
    pub fn lookup(&self, x: &VarName) -> Option<&Type> {
        self.entries
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, x: &VarName) -> bool {
        self.lookup(x).is_some()
    }

    /// 1-based position of the rightmost binding of `x`.
    pub fn position(&self, x: &VarName) -> Option<usize> {
        self.entries
            .iter()
            .rposition(|(y, _)| y == x)
            .map(|i| i + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(VarName, Type)> {
        self.entries.iter()
    }
}

impl FromIterator<(VarName, Type)> for VarEnv {
    fn from_iter<I: IntoIterator<Item = (VarName, Type)>>(iter: I) -> Self {
        VarEnv {
            entries: iter.into_iter().collect(),
        }
    }
}

/// The location typing context S; locations are dense indices, so the
/// context is an append-only vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StoreEnv {
    types: Vec<Type>,
}

impl StoreEnv {
    pub fn new() -> Self {
        StoreEnv::default()
    }

    pub fn get(&self, l: LocId) -> Option<&Type> {
        self.types.get(l.0 as usize)
    }

    pub fn push(&mut self, ty: Type) -> LocId {
        self.types.push(ty);
        LocId(self.types.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LocId, &Type)> {
        self.types
            .iter()
            .enumerate()
            .map(|(i, t)| (LocId(i as u32), t))
    }
}

/// Signature of an object definition: the member declarations obtained by
/// dropping bodies and field values; object type members become exact
/// bounds.
pub fn sig_of(defs: &[ObjMemberDefn]) -> Vec<MemberDecl> {
    defs.iter()
        .map(|d| match d {
            ObjMemberDefn::TypeMember { label, ty } => MemberDecl::TypeMember(TypeMemberDecl {
                mark: ShapeMark::Material,
                label: label.clone(),
                bound: Bound::Eq,
                ty: ty.clone(),
            }),
            ObjMemberDefn::Field { label, ty, .. } => MemberDecl::Field(FieldDecl {
                label: label.clone(),
                ty: ty.clone(),
            }),
            ObjMemberDefn::Method {
                label,
                param,
                param_ty,
                result_ty,
                ..
            } => MemberDecl::Method(MethodDecl {
                label: label.clone(),
                param: param.clone(),
                param_ty: param_ty.clone(),
                result_ty: result_ty.clone(),
            }),
        })
        .collect()
}

/// Pick a name based on `base` that `taken` does not reject; the base name
/// itself is preferred and a numeric suffix is added only on collision.
pub fn fresh_name(base: &str, mut taken: impl FnMut(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    let mut k = 1u64;
    loop {
        let candidate = format!("{base}{k}");
        if !taken(&candidate) {
            return candidate;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// Free variables and substitution
// ---------------------------------------------------------------------------

/// Collect the free variables of a syntax node into `out`.
pub trait FreeVars {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>);

    fn free_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    fn mentions_var(&self, x: &VarName) -> bool {
        self.free_vars().contains(x)
    }
}

impl FreeVars for Path {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        if let Path::Var(x) = self {
            out.insert(x.clone());
        }
    }
}

impl FreeVars for BaseType {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        if let BaseType::Sel(p, _) = self {
            p.collect_free_vars(out);
        }
    }
}

impl FreeVars for Type {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        if let Type::Refined { base, refinement } = self {
            base.collect_free_vars(out);
            refinement.collect_free_vars(out);
        }
    }
}

impl FreeVars for Refinement {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        for m in &self.members {
            m.ty.collect_free_vars(out);
        }
    }
}

impl FreeVars for MemberDecl {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            MemberDecl::TypeMember(d) => d.ty.collect_free_vars(out),
            MemberDecl::Field(d) => d.ty.collect_free_vars(out),
            MemberDecl::Method(d) => {
                d.param_ty.collect_free_vars(out);
                let mut inner = BTreeSet::new();
                d.result_ty.collect_free_vars(&mut inner);
                inner.remove(&d.param);
                out.extend(inner);
            }
        }
    }
}

impl FreeVars for ObjMemberDefn {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            ObjMemberDefn::TypeMember { ty, .. } => ty.collect_free_vars(out),
            ObjMemberDefn::Field { ty, value, .. } => {
                ty.collect_free_vars(out);
                value.collect_free_vars(out);
            }
            ObjMemberDefn::Method {
                param,
                param_ty,
                result_ty,
                body,
                ..
            } => {
                param_ty.collect_free_vars(out);
                let mut inner = BTreeSet::new();
                result_ty.collect_free_vars(&mut inner);
                body.collect_free_vars(&mut inner);
                inner.remove(param);
                out.extend(inner);
            }
        }
    }
}

impl FreeVars for Expr {
    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        match &self.kind {
            ExprKind::Path(p) => p.collect_free_vars(out),
            ExprKind::FieldSel(p, _) => p.collect_free_vars(out),
            ExprKind::Call { target, arg, .. } => {
                target.collect_free_vars(out);
                arg.collect_free_vars(out);
            }
            ExprKind::New { ty, self_var, defs } => {
                ty.collect_free_vars(out);
                let mut inner = BTreeSet::new();
                for d in defs {
                    d.collect_free_vars(&mut inner);
                }
                inner.remove(self_var);
                out.extend(inner);
            }
            ExprKind::Let {
                var,
                ascription,
                bound,
                body,
            } => {
                if let Some(t) = ascription {
                    t.collect_free_vars(out);
                }
                bound.collect_free_vars(out);
                let mut inner = BTreeSet::new();
                body.collect_free_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
        }
    }
}

/// Capture-avoiding substitution of a path for a variable used as a path
/// root. Binders that would capture the substituted path's root are renamed
/// with a numeric suffix.
pub trait Subst: Sized {
    fn subst(&self, x: &VarName, p: &Path) -> Self;
}

impl Subst for Path {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        match self {
            Path::Var(y) if y == x => p.clone(),
            other => other.clone(),
        }
    }
}

impl Subst for BaseType {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        match self {
            BaseType::Named(_) => self.clone(),
            BaseType::Sel(path, t) => BaseType::Sel(path.subst(x, p), t.clone()),
        }
    }
}

impl Subst for Type {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        match self {
            Type::Refined { base, refinement } => Type::Refined {
                base: base.subst(x, p),
                refinement: refinement.subst(x, p),
            },
            other => other.clone(),
        }
    }
}

impl Subst for Refinement {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        Refinement {
            members: self
                .members
                .iter()
                .map(|m| RefinementMember {
                    label: m.label.clone(),
                    bound: m.bound,
                    ty: m.ty.subst(x, p),
                })
                .collect(),
        }
    }
}

/// Whether substituting `p` for `x` under a binder named `binder` would
/// capture: the body mentions `x` free and `p` is rooted at `binder`.
fn binder_captures(binder: &VarName, _x: &VarName, p: &Path, body_mentions_x: bool) -> bool {
    body_mentions_x && p.root_var() == Some(binder)
}

/// Rename `binder` apart from `x`, the root of `p`, and the free variables
/// of the scope it binds.
fn rename_binder(
    binder: &VarName,
    x: &VarName,
    p: &Path,
    scope_free: &BTreeSet<VarName>,
) -> VarName {
    let fresh = fresh_name(binder.as_str(), |cand| {
        cand == x.as_str()
            || p.root_var().is_some_and(|r| r.as_str() == cand)
            || scope_free.iter().any(|v| v.as_str() == cand)
    });
    VarName::new(fresh)
}

impl Subst for MemberDecl {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        match self {
            MemberDecl::TypeMember(d) => MemberDecl::TypeMember(TypeMemberDecl {
                mark: d.mark,
                label: d.label.clone(),
                bound: d.bound,
                ty: d.ty.subst(x, p),
            }),
            MemberDecl::Field(d) => MemberDecl::Field(FieldDecl {
                label: d.label.clone(),
                ty: d.ty.subst(x, p),
            }),
            MemberDecl::Method(d) => {
                let param_ty = d.param_ty.subst(x, p);
                if &d.param == x {
                    // The parameter shadows x in the result type.
                    return MemberDecl::Method(MethodDecl {
                        label: d.label.clone(),
                        param: d.param.clone(),
                        param_ty,
                        result_ty: d.result_ty.clone(),
                    });
                }
                let mentions = d.result_ty.mentions_var(x);
                let (param, result_ty) = if binder_captures(&d.param, x, p, mentions) {
                    let mut scope_free = d.result_ty.free_vars();
                    scope_free.remove(&d.param);
                    let fresh = rename_binder(&d.param, x, p, &scope_free);
                    let renamed = d.result_ty.subst(&d.param, &Path::Var(fresh.clone()));
                    (fresh, renamed)
                } else {
                    (d.param.clone(), d.result_ty.clone())
                };
                MemberDecl::Method(MethodDecl {
                    label: d.label.clone(),
                    param,
                    param_ty,
                    result_ty: result_ty.subst(x, p),
                })
            }
        }
    }
}

impl Subst for ObjMemberDefn {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        match self {
            ObjMemberDefn::TypeMember { label, ty } => ObjMemberDefn::TypeMember {
                label: label.clone(),
                ty: ty.subst(x, p),
            },
            ObjMemberDefn::Field { label, ty, value } => ObjMemberDefn::Field {
                label: label.clone(),
                ty: ty.subst(x, p),
                value: value.subst(x, p),
            },
            ObjMemberDefn::Method {
                label,
                param,
                param_ty,
                result_ty,
                body,
            } => {
                let new_param_ty = param_ty.subst(x, p);
                if param == x {
                    return ObjMemberDefn::Method {
                        label: label.clone(),
                        param: param.clone(),
                        param_ty: new_param_ty,
                        result_ty: result_ty.clone(),
                        body: body.clone(),
                    };
                }
                let mentions = result_ty.mentions_var(x) || body.mentions_var(x);
                let (param, result_ty, body) = if binder_captures(param, x, p, mentions) {
                    let mut scope_free = result_ty.free_vars();
                    body.collect_free_vars(&mut scope_free);
                    scope_free.remove(param);
                    let fresh = rename_binder(param, x, p, &scope_free);
                    let fresh_path = Path::Var(fresh.clone());
                    (
                        fresh,
                        result_ty.subst(param, &fresh_path),
                        Box::new(body.subst(param, &fresh_path)),
                    )
                } else {
                    (param.clone(), result_ty.clone(), body.clone())
                };
                ObjMemberDefn::Method {
                    label: label.clone(),
                    param,
                    param_ty: new_param_ty,
                    result_ty: result_ty.subst(x, p),
                    body: Box::new(body.subst(x, p)),
                }
            }
        }
    }
}

impl Subst for Expr {
    fn subst(&self, x: &VarName, p: &Path) -> Self {
        let kind = match &self.kind {
            ExprKind::Path(q) => ExprKind::Path(q.subst(x, p)),
            ExprKind::FieldSel(q, v) => ExprKind::FieldSel(q.subst(x, p), v.clone()),
            ExprKind::Call {
                target,
                method,
                arg,
            } => ExprKind::Call {
                target: target.subst(x, p),
                method: method.clone(),
                arg: arg.subst(x, p),
            },
            ExprKind::New { ty, self_var, defs } => {
                let new_ty = ty.subst(x, p);
                if self_var == x {
                    ExprKind::New {
                        ty: new_ty,
                        self_var: self_var.clone(),
                        defs: defs.clone(),
                    }
                } else {
                    let mentions = defs.iter().any(|d| d.mentions_var(x));
                    let (self_var, defs) = if binder_captures(self_var, x, p, mentions) {
                        let mut scope_free = BTreeSet::new();
                        for d in defs {
                            d.collect_free_vars(&mut scope_free);
                        }
                        scope_free.remove(self_var);
                        let fresh = rename_binder(self_var, x, p, &scope_free);
                        let fresh_path = Path::Var(fresh.clone());
                        let renamed: Vec<_> = defs
                            .iter()
                            .map(|d| d.subst(self_var, &fresh_path))
                            .collect();
                        (fresh, renamed)
                    } else {
                        (self_var.clone(), defs.clone())
                    };
                    ExprKind::New {
                        ty: new_ty,
                        self_var,
                        defs: defs.iter().map(|d| d.subst(x, p)).collect(),
                    }
                }
            }
            ExprKind::Let {
                var,
                ascription,
                bound,
                body,
            } => {
                let ascription = ascription.as_ref().map(|t| t.subst(x, p));
                let bound = Box::new(bound.subst(x, p));
                if var == x {
                    ExprKind::Let {
                        var: var.clone(),
                        ascription,
                        bound,
                        body: body.clone(),
                    }
                } else {
                    let mentions = body.mentions_var(x);
                    let (var, body) = if binder_captures(var, x, p, mentions) {
                        let mut scope_free = body.free_vars();
                        scope_free.remove(var);
                        let fresh = rename_binder(var, x, p, &scope_free);
                        let renamed = body.subst(var, &Path::Var(fresh.clone()));
                        (fresh, Box::new(renamed))
                    } else {
                        (var.clone(), body.clone())
                    };
                    ExprKind::Let {
                        var,
                        ascription,
                        bound,
                        body: Box::new(body.subst(x, p)),
                    }
                }
            }
        };
        Expr::new(kind, self.span)
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn print_expr_into(e: &Expr, level: usize, out: &mut String) {
    match &e.kind {
        ExprKind::Path(p) => out.push_str(&p.to_string()),
        ExprKind::FieldSel(p, v) => {
            out.push_str(&format!("{p}.{v}"));
        }
        ExprKind::Call {
            target,
            method,
            arg,
        } => {
            out.push_str(&format!("{target}.{method}({arg})"));
        }
        ExprKind::New { ty, self_var, defs } => {
            out.push_str(&format!("new {ty} {{ {self_var} =>"));
            if defs.is_empty() {
                out.push_str(" }");
                return;
            }
            out.push('\n');
            for d in defs {
                indent(out, level + 1);
                match d {
                    ObjMemberDefn::TypeMember { label, ty } => {
                        out.push_str(&format!("type {label} = {ty}"));
                    }
                    ObjMemberDefn::Field { label, ty, value } => {
                        out.push_str(&format!("val {label}: {ty} = {value}"));
                    }
                    ObjMemberDefn::Method {
                        label,
                        param,
                        param_ty,
                        result_ty,
                        body,
                    } => {
                        out.push_str(&format!(
                            "def {label}({param}: {param_ty}): {result_ty} =\n"
                        ));
                        indent(out, level + 2);
                        print_expr_into(body, level + 2, out);
                    }
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
        ExprKind::Let {
            var,
            ascription,
            bound,
            body,
        } => {
            out.push_str(&format!("let {var}"));
            if let Some(t) = ascription {
                out.push_str(&format!(": {t}"));
            }
            out.push_str(" = ");
            print_expr_into(bound, level, out);
            out.push_str(" in\n");
            indent(out, level);
            print_expr_into(body, level, out);
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_expr_into(self, 0, &mut out);
        f.write_str(&out)
    }
}

impl fmt::Display for TopDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopDecl::Name(d) => {
                if d.mark.is_shape() {
                    f.write_str("@shape ")?;
                }
                writeln!(f, "name {} {{ {} =>", d.name, d.self_var)?;
                for m in &d.members {
                    match m {
                        MemberDecl::Method(_)
                        | MemberDecl::Field(_)
                        | MemberDecl::TypeMember(_) => {
                            writeln!(f, "  {m}")?;
                        }
                    }
                }
                write!(f, "}}")
            }
            TopDecl::Subtype(s) => {
                write!(f, "subtype {}", s.lhs_name)?;
                if !s.lhs_refinement.is_empty() {
                    write!(f, " {}", s.lhs_refinement)?;
                }
                write!(f, " <: {}", s.rhs_name)
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "{d}")?;
            writeln!(f)?;
        }
        let mut out = String::new();
        print_expr_into(&self.main, 0, &mut out);
        f.write_str(&out)
    }
}
