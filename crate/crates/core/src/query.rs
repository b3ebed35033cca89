//! Conjunctive query evaluation by backtracking homomorphism search, and
//! certain answers through the chase.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use indexmap::IndexSet;

use crate::chase::{run_chase, ChaseBudget, ChaseStatus};
use crate::model::{
    Atom, ConjunctiveQuery, Constant, Database, Instance, Ontology, Predicate, Term, Variable,
};

/// Append-only atom storage indexed by predicate and by `(predicate,
/// position, term)`. Index lists are sorted, so a range of atom ids can be
/// cut out of them by binary search.
#[derive(Debug, Default)]
pub(crate) struct AtomStore {
    atoms: IndexSet<Atom>,
    by_pred: HashMap<Predicate, Vec<u32>>,
    by_arg: HashMap<(Predicate, u32, Term), Vec<u32>>,
}

impl AtomStore {
    pub(crate) fn from_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut s = AtomStore::default();
        for a in atoms {
            s.insert(a.clone());
        }
        s
    }

    pub(crate) fn insert(&mut self, atom: Atom) -> bool {
        if self.atoms.contains(&atom) {
            return false;
        }
        let id = self.atoms.len() as u32;
        self.by_pred
            .entry(atom.predicate().clone())
            .or_default()
            .push(id);
        for (i, t) in atom.args().iter().enumerate() {
            self.by_arg
                .entry((atom.predicate().clone(), i as u32, t.clone()))
                .or_default()
                .push(id);
        }
        self.atoms.insert(atom);
        true
    }

    pub(crate) fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub(crate) fn len(&self) -> usize {
        self.atoms.len()
    }

    pub(crate) fn get(&self, id: u32) -> &Atom {
        &self.atoms[id as usize]
    }

    pub(crate) fn into_atoms(self) -> IndexSet<Atom> {
        self.atoms
    }

    fn restrict<'l>(list: &'l [u32], range: &Range<u32>) -> &'l [u32] {
        let lo = list.partition_point(|&x| x < range.start);
        let hi = list.partition_point(|&x| x < range.end);
        &list[lo..hi]
    }
}

#[derive(Debug, Clone)]
enum Slot {
    Fixed(Term),
    Var(usize),
}

/// Query atoms with variables numbered `0..vars.len()`.
#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    atoms: Vec<(Predicate, Vec<Slot>)>,
    vars: Vec<Variable>,
}

impl Pattern {
    pub(crate) fn compile(atoms: &[Atom]) -> Pattern {
        let mut vars: IndexSet<Variable> = IndexSet::new();
        let atoms = atoms
            .iter()
            .map(|a| {
                let slots = a
                    .args()
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Slot::Var(vars.insert_full(v.clone()).0),
                        t => Slot::Fixed(t.clone()),
                    })
                    .collect();
                (a.predicate().clone(), slots)
            })
            .collect();
        Pattern {
            atoms,
            vars: vars.into_iter().collect(),
        }
    }

    pub(crate) fn var_index(&self, v: &Variable) -> Option<usize> {
        self.vars.iter().position(|u| u == v)
    }

    pub(crate) fn len(&self) -> usize {
        self.atoms.len()
    }
}

struct Search<'a, F> {
    pattern: &'a Pattern,
    store: &'a AtomStore,
    ranges: &'a [Range<u32>],
    binding: Vec<Option<Term>>,
    matched: Vec<Option<u32>>,
    on_match: F,
}

impl<'a, F: FnMut(&[Term], &[u32])> Search<'a, F> {
    fn candidates(&self, k: usize) -> &'a [u32] {
        let (pred, slots) = &self.pattern.atoms[k];
        let range = &self.ranges[k];
        let mut best: Option<&'a [u32]> = None;
        for (pos, slot) in slots.iter().enumerate() {
            let term = match slot {
                Slot::Fixed(t) => Some(t),
                Slot::Var(i) => self.binding[*i].as_ref(),
            };
            if let Some(t) = term {
                let list = self
                    .store
                    .by_arg
                    .get(&(pred.clone(), pos as u32, t.clone()))
                    .map_or(&[][..], |l| AtomStore::restrict(l, range));
                if best.is_none_or(|b| list.len() < b.len()) {
                    best = Some(list);
                }
            }
        }
        best.unwrap_or_else(|| {
            self.store
                .by_pred
                .get(pred)
                .map_or(&[][..], |l| AtomStore::restrict(l, range))
        })
    }

    fn run(&mut self, remaining: usize) {
        if remaining == 0 {
            let binding: Vec<Term> = self
                .binding
                .iter()
                .map(|t| t.clone().expect("all bound"))
                .collect();
            let matched: Vec<u32> = self
                .matched
                .iter()
                .map(|m| m.expect("all matched"))
                .collect();
            (self.on_match)(&binding, &matched);
            return;
        }
        // most constrained atom first
        let (k, cands) = (0..self.pattern.len())
            .filter(|k| self.matched[*k].is_none())
            .map(|k| (k, self.candidates(k)))
            .min_by_key(|(_, c)| c.len())
            .expect("an unmatched atom remains");
        let slots = &self.pattern.atoms[k].1;
        for &id in cands {
            let atom = self.store.get(id);
            let mut newly_bound = Vec::new();
            let mut ok = true;
            for (slot, t) in slots.iter().zip(atom.args()) {
                match slot {
                    Slot::Fixed(f) => ok = f == t,
                    Slot::Var(i) => match &self.binding[*i] {
                        Some(b) => ok = b == t,
                        None => {
                            self.binding[*i] = Some(t.clone());
                            newly_bound.push(*i);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.matched[k] = Some(id);
                self.run(remaining - 1);
                self.matched[k] = None;
            }
            for i in newly_bound {
                self.binding[i] = None;
            }
        }
    }
}

/// Calls `on_match(binding, matched_atom_ids)` for every homomorphism from
/// the pattern into the store where pattern atom `k` maps to an atom id in
/// `ranges[k]`.
pub(crate) fn for_each_match(
    pattern: &Pattern,
    store: &AtomStore,
    ranges: &[Range<u32>],
    on_match: impl FnMut(&[Term], &[u32]),
) {
    assert_eq!(ranges.len(), pattern.len());
    let mut search = Search {
        pattern,
        store,
        ranges,
        binding: vec![None; pattern.vars.len()],
        matched: vec![None; pattern.len()],
        on_match,
    };
    search.run(pattern.len());
}

/// Constant tuples of a fixed arity. For a Boolean query the set is either
/// `{()}` (true) or empty (false).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerSet {
    arity: usize,
    tuples: BTreeSet<Vec<Constant>>,
}

impl AnswerSet {
    pub fn new(arity: usize) -> Self {
        AnswerSet {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, tuple: Vec<Constant>) -> bool {
        assert_eq!(tuple.len(), self.arity, "answer tuple arity");
        self.tuples.insert(tuple)
    }

    pub fn contains(&self, tuple: &[Constant]) -> bool {
        self.tuples.contains(tuple)
    }

    /// For Boolean queries: whether the empty tuple is an answer.
    pub fn holds(&self) -> bool {
        !self.tuples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Constant>> {
        self.tuples.iter()
    }

    pub fn is_subset(&self, other: &AnswerSet) -> bool {
        self.tuples.is_subset(&other.tuples)
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tuples {
            let row: Vec<String> = t.iter().map(ToString::to_string).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn evaluate_on_store(query: &ConjunctiveQuery, store: &AtomStore) -> AnswerSet {
    let pattern = Pattern::compile(query.body());
    let out: Vec<usize> = query
        .output()
        .iter()
        .map(|v| {
            pattern
                .var_index(v)
                .expect("output variables occur in the body")
        })
        .collect();
    let mut answers = AnswerSet::new(out.len());
    let ranges = vec![0..store.len() as u32; pattern.len()];
    for_each_match(&pattern, store, &ranges, |binding, _| {
        let tuple: Option<Vec<Constant>> = out
            .iter()
            .map(|&i| binding[i].as_const().cloned())
            .collect();
        if let Some(t) = tuple {
            answers.insert(t);
        }
    });
    answers
}

/// `q(I)`: constant tuples `h(x)` over all homomorphisms `h` from the body
/// into the instance. Tuples that would contain a null are dropped.
pub fn evaluate_cq(query: &ConjunctiveQuery, instance: &Instance) -> AnswerSet {
    evaluate_on_store(query, &AtomStore::from_atoms(instance.iter()))
}

/// Certain answers with a flag telling whether they are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertainAnswers {
    pub answers: AnswerSet,
    /// The chase completed, so `answers` is the full certain-answer set.
    /// Otherwise it is a sound subset.
    pub exact: bool,
}

pub fn certain_answers_chase(
    query: &ConjunctiveQuery,
    database: &Database,
    ontology: &Ontology,
    budget: ChaseBudget,
) -> CertainAnswers {
    let result = run_chase(database, ontology, budget);
    CertainAnswers {
        answers: evaluate_cq(query, result.instance()),
        exact: result.status() == ChaseStatus::Completed,
    }
}

/// `c ∈ cert(q, D, Σ)` decided on the Boolean query `q(c)`.
pub fn certain_contains(
    query: &ConjunctiveQuery,
    database: &Database,
    ontology: &Ontology,
    tuple: &[Constant],
    budget: ChaseBudget,
) -> (bool, bool) {
    let ca = certain_answers_chase(&query.substitute(tuple), database, ontology, budget);
    (ca.answers.holds(), ca.exact)
}
