//! Big-step evaluation over a heap of object definitions, plus the
//! fuel-annotated variant whose budget bounds the depth of nested
//! evaluation. Programs reaching the evaluator are closed up to heap
//! locations; the only runtime failure on well-typed input is running out
//! of fuel.

use std::fmt;

use thiserror::Error;

use crate::normalize::{CheckOptions, Ctx};
use crate::syntax::{
    DefTable, Expr, ExprKind, LocId, MemberName, ObjMemberDefn, Path, StoreEnv, Subst,
    SubtypeTable, VarName,
};
use crate::typecheck::{type_obj_defn, type_valid};

/// One allocated object: its self binder and the stored member definitions.
#[derive(Clone, Debug, PartialEq)]
pub struct HeapEntry {
    pub self_var: VarName,
    pub defs: Vec<ObjMemberDefn>,
}

impl HeapEntry {
    pub fn member_labels(&self) -> Vec<&MemberName> {
        self.defs.iter().map(|d| d.label()).collect()
    }
}

/// The runtime store: locations are dense indices and the heap only ever
/// grows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heap {
    entries: Vec<HeapEntry>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn get(&self, l: LocId) -> Option<&HeapEntry> {
        self.entries.get(l.0 as usize)
    }

    pub fn alloc(&mut self, entry: HeapEntry) -> LocId {
        self.entries.push(entry);
        LocId(self.entries.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LocId, &HeapEntry)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (LocId(i as u32), e))
    }

    /// Whether `self` is a prefix of `other` (evaluation only appends).
    pub fn is_prefix_of(&self, other: &Heap) -> bool {
        self.entries.len() <= other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a == b)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("location `{0}` is not allocated")]
    UnboundLocation(LocId),
    #[error("object at `{loc}` has no member `{label}`")]
    MissingMember { loc: LocId, label: MemberName },
    #[error("variable `{0}` was not substituted away; the program is not closed")]
    UnsubstitutedVariable(VarName),
}

/// Result of fuel-annotated evaluation: a location, or stuck from running
/// out of fuel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalResult {
    Value(LocId),
    Stuck,
}

impl EvalResult {
    pub fn value(self) -> Option<LocId> {
        match self {
            EvalResult::Value(l) => Some(l),
            EvalResult::Stuck => None,
        }
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalResult::Value(l) => l.fmt(f),
            EvalResult::Stuck => f.write_str("stuck"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub heap: Heap,
    pub store: StoreEnv,
    pub result: EvalResult,
}

struct Machine {
    heap: Heap,
    store: StoreEnv,
}

impl Machine {
    fn loc_of(&self, p: &Path) -> Result<LocId, EvalError> {
        match p {
            Path::Loc(l) => {
                if self.heap.get(*l).is_some() {
                    Ok(*l)
                } else {
                    Err(EvalError::UnboundLocation(*l))
                }
            }
            Path::Var(x) => Err(EvalError::UnsubstitutedVariable(x.clone())),
        }
    }

    fn field_value(&self, l: LocId, label: &MemberName) -> Result<Path, EvalError> {
        let entry = self.heap.get(l).ok_or(EvalError::UnboundLocation(l))?;
        for d in &entry.defs {
            if let ObjMemberDefn::Field {
                label: fl, value, ..
            } = d
            {
                if fl == label {
                    return Ok(value.subst(&entry.self_var, &Path::Loc(l)));
                }
            }
        }
        Err(EvalError::MissingMember {
            loc: l,
            label: label.clone(),
        })
    }

    fn method_body(&self, l: LocId, label: &MemberName, arg: LocId) -> Result<Expr, EvalError> {
        let entry = self.heap.get(l).ok_or(EvalError::UnboundLocation(l))?;
        for d in &entry.defs {
            if let ObjMemberDefn::Method {
                label: ml,
                param,
                body,
                ..
            } = d
            {
                if ml == label {
                    return Ok(body
                        .subst(&entry.self_var, &Path::Loc(l))
                        .subst(param, &Path::Loc(arg)));
                }
            }
        }
        Err(EvalError::MissingMember {
            loc: l,
            label: label.clone(),
        })
    }

    fn alloc(
        &mut self,
        ty: &crate::syntax::Type,
        self_var: &VarName,
        defs: &[ObjMemberDefn],
    ) -> LocId {
        let l = self.heap.alloc(HeapEntry {
            self_var: self_var.clone(),
            defs: defs.to_vec(),
        });
        let s = self.store.push(ty.clone());
        debug_assert_eq!(l, s);
        l
    }

    fn eval(&mut self, e: &Expr) -> Result<LocId, EvalError> {
        match &e.kind {
            ExprKind::Path(p) => self.loc_of(p),
            ExprKind::FieldSel(p, v) => {
                let l = self.loc_of(p)?;
                let value = self.field_value(l, v)?;
                self.loc_of(&value)
            }
            ExprKind::Call {
                target,
                method,
                arg,
            } => {
                let l_s = self.loc_of(target)?;
                let l_a = self.loc_of(arg)?;
                let body = self.method_body(l_s, method, l_a)?;
                self.eval(&body)
            }
            ExprKind::New { ty, self_var, defs } => Ok(self.alloc(ty, self_var, defs)),
            ExprKind::Let {
                var, bound, body, ..
            } => {
                let l1 = self.eval(bound)?;
                let body = body.subst(var, &Path::Loc(l1));
                self.eval(&body)
            }
        }
    }

    fn eval_fueled(&mut self, e: &Expr, fuel: u64) -> Result<EvalResult, EvalError> {
        if fuel == 0 {
            return Ok(EvalResult::Stuck);
        }
        match &e.kind {
            ExprKind::Path(p) => Ok(EvalResult::Value(self.loc_of(p)?)),
            ExprKind::FieldSel(p, v) => {
                let l = self.loc_of(p)?;
                let value = self.field_value(l, v)?;
                Ok(EvalResult::Value(self.loc_of(&value)?))
            }
            ExprKind::Call {
                target,
                method,
                arg,
            } => {
                let l_s = self.loc_of(target)?;
                let l_a = self.loc_of(arg)?;
                let body = self.method_body(l_s, method, l_a)?;
                self.eval_fueled(&body, fuel - 1)
            }
            ExprKind::New { ty, self_var, defs } => {
                Ok(EvalResult::Value(self.alloc(ty, self_var, defs)))
            }
            ExprKind::Let {
                var, bound, body, ..
            } => {
                // Both nested evaluations run at the same decremented
                // budget: fuel bounds depth, not step count.
                match self.eval_fueled(bound, fuel - 1)? {
                    EvalResult::Stuck => Ok(EvalResult::Stuck),
                    EvalResult::Value(l1) => {
                        let body = body.subst(var, &Path::Loc(l1));
                        self.eval_fueled(&body, fuel - 1)
                    }
                }
            }
        }
    }
}

/// Big-step evaluation without a budget. Diverging programs diverge; use
/// `eval_fuel` for totality.
pub fn eval_big(
    heap: Heap,
    store: StoreEnv,
    e: &Expr,
) -> Result<(Heap, StoreEnv, LocId), EvalError> {
    let mut machine = Machine { heap, store };
    let l = machine.eval(e)?;
    Ok((machine.heap, machine.store, l))
}

/// Fuel-annotated big-step evaluation: returns a location, or stuck once
/// the depth budget is exhausted.
pub fn eval_fuel(
    heap: Heap,
    store: StoreEnv,
    e: &Expr,
    fuel: u64,
) -> Result<EvalOutcome, EvalError> {
    let mut machine = Machine { heap, store };
    let result = machine.eval_fueled(e, fuel)?;
    Ok(EvalOutcome {
        heap: machine.heap,
        store: machine.store,
        result,
    })
}

/// A heap is well-typed against a store typing when every stored object's
/// definition checks against its recorded type.
pub fn heap_well_typed(
    defs: &DefTable,
    subs: &SubtypeTable,
    store: &StoreEnv,
    heap: &Heap,
    options: CheckOptions,
) -> bool {
    if store.len() != heap.len() {
        return false;
    }
    for (l, entry) in heap.iter() {
        let Some(ty) = store.get(l) else { return false };
        let mut ctx = Ctx::new(defs, subs)
            .with_store(store.clone())
            .with_options(options);
        let span = crate::syntax::Span::default();
        if type_valid(&mut ctx, ty, span).is_err() {
            return false;
        }
        if type_obj_defn(&mut ctx, &entry.self_var, &entry.defs, ty, span).is_err() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::CheckOptions;
    use crate::parser::{parse_program, ParseOptions, SourceFile};
    use crate::syntax::Type;
    use crate::typecheck::build_contexts;

    fn program(text: &str) -> crate::syntax::Program {
        let src = SourceFile::new("test.nwyv", text);
        parse_program(&src, &ParseOptions::default())
            .expect("parse")
            .program
    }

    #[test]
    fn locations_evaluate_to_themselves() {
        let mut heap = Heap::new();
        let mut store = StoreEnv::new();
        let l = heap.alloc(HeapEntry {
            self_var: "z".into(),
            defs: vec![],
        });
        store.push(Type::Top);
        let e = Expr::path(Path::Loc(l));
        let (heap_after, _, result) = eval_big(heap.clone(), store.clone(), &e).unwrap();
        assert_eq!(result, l);
        assert_eq!(heap_after, heap);
        let outcome = eval_fuel(heap, store, &e, 1).unwrap();
        assert_eq!(outcome.result, EvalResult::Value(l));
    }

    #[test]
    fn new_allocates_a_fresh_location() {
        let p = program("let u = new Top { z => } in u");
        let outcome = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, 8).unwrap();
        assert_eq!(outcome.heap.len(), 1);
        assert_eq!(outcome.result, EvalResult::Value(LocId(0)));
        assert_eq!(outcome.store.get(LocId(0)), Some(&Type::Top));
    }

    #[test]
    fn zero_fuel_is_stuck_for_everything() {
        let p = program("let u = new Top { z => } in u");
        let outcome = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, 0).unwrap();
        assert_eq!(outcome.result, EvalResult::Stuck);
        assert!(outcome.heap.is_empty());
    }

    #[test]
    fn nested_lets_need_depth_plus_one() {
        // d nested lets around one allocation need d+1 fuel.
        let mut text = String::from("new Top { z => }");
        let depth = 5;
        for i in 0..depth {
            text = format!("let x{i} = {text} in x{i}");
        }
        let p = program(&text);
        let stuck = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, depth as u64).unwrap();
        assert_eq!(stuck.result, EvalResult::Stuck);
        let done = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, depth as u64 + 1).unwrap();
        assert!(matches!(done.result, EvalResult::Value(_)));
    }

    const COUNTER: &str = r#"
name Unit { u => }
name Box { b =>
  val item: Unit
  def get(u: Unit): Unit
}
let unit = new Unit { u => } in
let box1 = new Box { b =>
  val item: Unit = unit
  def get(u: Unit): Unit = b.item
} in
box1.get(unit)
"#;

    #[test]
    fn method_calls_substitute_self_and_argument() {
        let p = program(COUNTER);
        let (heap, store, l) = eval_big(Heap::new(), StoreEnv::new(), &p.main).unwrap();
        // unit, box1; the call returns the stored unit.
        assert_eq!(heap.len(), 2);
        assert_eq!(l, LocId(0));
        assert_eq!(store.get(l), Some(&Type::named("Unit")));
    }

    #[test]
    fn fueled_and_unfueled_agree() {
        let p = program(COUNTER);
        let (heap_big, store_big, l_big) = eval_big(Heap::new(), StoreEnv::new(), &p.main).unwrap();
        for fuel in 0..12u64 {
            let outcome = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, fuel).unwrap();
            if let EvalResult::Value(l) = outcome.result {
                assert_eq!(l, l_big);
                assert_eq!(outcome.heap, heap_big);
                assert_eq!(outcome.store, store_big);
                // Fuel monotonicity: more fuel, same answer.
                let more = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, fuel + 7).unwrap();
                assert_eq!(more.result, EvalResult::Value(l));
                return;
            }
        }
        panic!("program never completed within the fuel range");
    }

    #[test]
    fn heap_growth_is_monotone() {
        let p = program(COUNTER);
        let mut heap = Heap::new();
        let mut store = StoreEnv::new();
        let seed = heap.alloc(HeapEntry {
            self_var: "z".into(),
            defs: vec![],
        });
        store.push(Type::Top);
        let before = heap.clone();
        let outcome = eval_fuel(heap, store, &p.main, 16).unwrap();
        assert!(matches!(outcome.result, EvalResult::Value(_)));
        assert!(before.is_prefix_of(&outcome.heap));
        assert_eq!(outcome.heap.get(seed), before.get(seed));
    }

    #[test]
    fn evaluated_heaps_are_well_typed() {
        let p = program(COUNTER);
        let (defs, subs) = build_contexts(&p).unwrap();
        let outcome = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, 16).unwrap();
        assert!(matches!(outcome.result, EvalResult::Value(_)));
        assert!(heap_well_typed(
            &defs,
            &subs,
            &outcome.store,
            &outcome.heap,
            CheckOptions::default()
        ));
        assert!(heap_well_typed(
            &defs,
            &subs,
            &StoreEnv::new(),
            &Heap::new(),
            CheckOptions::default()
        ));
    }

    #[test]
    fn retyping_an_entry_breaks_heap_typing() {
        let p = program(COUNTER);
        let (defs, subs) = build_contexts(&p).unwrap();
        let outcome = eval_fuel(Heap::new(), StoreEnv::new(), &p.main, 16).unwrap();
        let mut wrong = StoreEnv::new();
        for (l, _) in outcome.store.iter() {
            // Retype every entry at Box; the unit object fails its
            // obligations.
            let _ = l;
            wrong.push(Type::named("Box"));
        }
        assert!(!heap_well_typed(
            &defs,
            &subs,
            &wrong,
            &outcome.heap,
            CheckOptions::default()
        ));
    }

    #[test]
    fn missing_members_surface_as_internal_errors() {
        let mut heap = Heap::new();
        let mut store = StoreEnv::new();
        let l = heap.alloc(HeapEntry {
            self_var: "z".into(),
            defs: vec![],
        });
        store.push(Type::Top);
        let e = Expr::new(
            ExprKind::FieldSel(Path::Loc(l), "v".into()),
            crate::syntax::Span::default(),
        );
        let err = eval_big(heap, store, &e).unwrap_err();
        assert_eq!(
            err,
            EvalError::MissingMember {
                loc: l,
                label: "v".into()
            }
        );
    }
}
