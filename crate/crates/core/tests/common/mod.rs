//! Random generators and reference oracles shared by the integration tests.
//!
//! The oracles deliberately share no code with the library: atoms are plain
//! strings, matching is exhaustive, and the chase is a naive fixpoint.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dyadic_core::model::{
    Atom, ConjunctiveQuery, Constant, Database, Ontology, Predicate, Term, Tgd, Variable,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture exists")
}

// ---------------------------------------------------------------------------
// generators

pub const CONSTANTS: [&str; 4] = ["a", "b", "c", "d"];

/// Predicates `<prefix>0 .. <prefix>{n-1}` with arities in `0..=max_arity`
/// (at least `min_arity`).
pub fn predicates(
    rng: &mut impl Rng,
    prefix: &str,
    n: usize,
    min_arity: usize,
    max_arity: usize,
) -> Vec<Predicate> {
    (0..n)
        .map(|i| Predicate::new(format!("{prefix}{i}"), rng.gen_range(min_arity..=max_arity)))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub body_atoms: (usize, usize),
    pub head_atoms: (usize, usize),
    /// Size of the pool body variables are drawn from.
    pub vars: usize,
    /// Chance that a head argument is existential.
    pub ex_prob: f64,
    /// Chance that an argument is a constant.
    pub const_prob: f64,
    /// No variable twice in one atom.
    pub distinct_in_atom: bool,
    /// Every body variable occurs once in the body.
    pub joinless: bool,
    /// The first body atom contains every body variable.
    pub guarded: bool,
    /// Head arguments are never constants.
    pub head_const_free: bool,
}

impl Shape {
    pub const GENERAL: Shape = Shape {
        body_atoms: (1, 3),
        head_atoms: (1, 2),
        vars: 4,
        ex_prob: 0.2,
        const_prob: 0.1,
        distinct_in_atom: false,
        joinless: false,
        guarded: false,
        head_const_free: false,
    };

    pub const INCLUSION: Shape = Shape {
        body_atoms: (1, 1),
        head_atoms: (1, 1),
        vars: 4,
        ex_prob: 0.3,
        const_prob: 0.0,
        distinct_in_atom: true,
        joinless: false,
        guarded: false,
        head_const_free: true,
    };

    pub const LINEAR: Shape = Shape {
        body_atoms: (1, 1),
        ..Shape::GENERAL
    };

    pub const JOINLESS: Shape = Shape {
        joinless: true,
        ..Shape::GENERAL
    };

    pub const GUARDED: Shape = Shape {
        guarded: true,
        ..Shape::GENERAL
    };

    pub const DATALOG: Shape = Shape {
        head_atoms: (1, 1),
        ex_prob: 0.0,
        head_const_free: true,
        ..Shape::GENERAL
    };
}

fn pick_body_arg(
    rng: &mut impl Rng,
    shape: &Shape,
    in_atom: &[Variable],
    pool: &[Variable],
    fresh: &mut usize,
    scope: u32,
) -> Term {
    if rng.gen_bool(shape.const_prob) {
        return Term::constant(*CONSTANTS.choose(rng).unwrap());
    }
    let candidates: Vec<&Variable> = pool
        .iter()
        .filter(|v| !shape.distinct_in_atom || !in_atom.contains(v))
        .collect();
    if shape.joinless || candidates.is_empty() {
        *fresh += 1;
        return Term::Var(Variable::new(format!("F{fresh}"), scope));
    }
    Term::Var((*candidates.choose(rng).unwrap()).clone())
}

/// One rule over `body_preds` / `head_preds`. Variables are scoped by
/// `scope`, so rules generated with distinct scopes are renamed apart.
/// With `ex_prob == 0` the rule is full.
pub fn random_rule(
    rng: &mut impl Rng,
    id: &str,
    scope: u32,
    body_preds: &[Predicate],
    head_preds: &[Predicate],
    shape: &Shape,
) -> Tgd {
    loop {
        let r = random_rule_once(rng, id, scope, body_preds, head_preds, shape);
        if shape.ex_prob > 0.0 || r.is_full() {
            return r;
        }
    }
}

fn random_rule_once(
    rng: &mut impl Rng,
    id: &str,
    scope: u32,
    body_preds: &[Predicate],
    head_preds: &[Predicate],
    shape: &Shape,
) -> Tgd {
    let pool: Vec<Variable> = (0..shape.vars)
        .map(|i| Variable::new(format!("X{i}"), scope))
        .collect();
    let mut fresh = 0;
    let n_body = rng.gen_range(shape.body_atoms.0..=shape.body_atoms.1);
    let mut body: Vec<Atom> = Vec::new();
    for k in 0..n_body {
        let p = if shape.guarded && k == 0 {
            body_preds.iter().max_by_key(|p| p.arity()).unwrap().clone()
        } else {
            body_preds.choose(rng).unwrap().clone()
        };
        let mut args = Vec::new();
        let mut in_atom = Vec::new();
        for _ in 0..p.arity() {
            let t = if shape.guarded && k > 0 {
                let guard_vars: Vec<Variable> = body[0]
                    .args()
                    .iter()
                    .filter_map(|t: &Term| t.as_var().cloned())
                    .filter(|v| !shape.distinct_in_atom || !in_atom.contains(v))
                    .collect();
                match guard_vars.choose(rng) {
                    Some(v) if !rng.gen_bool(shape.const_prob) => Term::Var(v.clone()),
                    _ => Term::constant(*CONSTANTS.choose(rng).unwrap()),
                }
            } else {
                pick_body_arg(rng, shape, &in_atom, &pool, &mut fresh, scope)
            };
            if let Term::Var(v) = &t {
                in_atom.push(v.clone());
            }
            args.push(t);
        }
        body.push(Atom::new(p.name(), args));
    }
    let body_vars: Vec<Variable> = {
        let mut seen = Vec::new();
        for a in &body {
            for v in a.vars() {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
        seen
    };
    let n_head = rng.gen_range(shape.head_atoms.0..=shape.head_atoms.1);
    let mut head = Vec::new();
    let mut ex = 0;
    for _ in 0..n_head {
        let p = head_preds.choose(rng).unwrap().clone();
        let mut args = Vec::new();
        let mut in_atom: Vec<Variable> = Vec::new();
        for _ in 0..p.arity() {
            let candidates: Vec<&Variable> = body_vars
                .iter()
                .filter(|v| !shape.distinct_in_atom || !in_atom.contains(v))
                .collect();
            let t = if rng.gen_bool(shape.ex_prob)
                || (candidates.is_empty() && shape.head_const_free)
            {
                ex += 1;
                let name = if shape.distinct_in_atom {
                    format!("Z{ex}")
                } else {
                    format!("Z{}", rng.gen_range(0..2))
                };
                Term::Var(Variable::new(name, scope))
            } else if !shape.head_const_free
                && (candidates.is_empty() || rng.gen_bool(shape.const_prob))
            {
                Term::constant(*CONSTANTS.choose(rng).unwrap())
            } else {
                Term::Var((*candidates.choose(rng).unwrap()).clone())
            };
            if let Term::Var(v) = &t {
                in_atom.push(v.clone());
            }
            args.push(t);
        }
        head.push(Atom::new(p.name(), args));
    }
    Tgd::new(id, body, head).expect("generated rules are well formed")
}

/// `n` rules with ids `r1..rn` and scopes `0..n`.
pub fn random_ontology(
    rng: &mut impl Rng,
    n: usize,
    body_preds: &[Predicate],
    head_preds: &[Predicate],
    shape: &Shape,
) -> Ontology {
    let rules = (0..n)
        .map(|i| {
            random_rule(
                rng,
                &format!("r{}", i + 1),
                i as u32,
                body_preds,
                head_preds,
                shape,
            )
        })
        .collect();
    Ontology::new(rules).expect("fixed arities")
}

/// Ontology over a shared schema (body and head predicates drawn from the
/// same set).
pub fn random_closed_ontology(rng: &mut impl Rng, max_rules: usize, shape: &Shape) -> Ontology {
    let preds = {
        let n = rng.gen_range(2..=4);
        predicates(rng, "P", n, 1, 3)
    };
    let n = rng.gen_range(1..=max_rules);
    random_ontology(rng, n, &preds, &preds, shape)
}

/// Autonomous full inclusion dependencies.
pub fn random_af_inds(rng: &mut impl Rng) -> Ontology {
    let arity = rng.gen_range(1..=3);
    let body = {
        let n = rng.gen_range(1..=3);
        predicates(rng, "B", n, arity, 3)
    };
    let head = {
        let n = rng.gen_range(1..=3);
        predicates(rng, "H", n, 0, arity)
    };
    let shape = Shape {
        ex_prob: 0.0,
        vars: 3,
        ..Shape::INCLUSION
    };
    let n = rng.gen_range(1..=5);
    random_ontology(rng, n, &body, &head, &shape)
}

/// Datalog with constant-free heads, `≤ 8` rules, arity `≤ 3`.
pub fn random_datalog(rng: &mut impl Rng) -> Ontology {
    let preds = {
        let n = rng.gen_range(2..=5);
        predicates(rng, "P", n, 0, 3)
    };
    let n = rng.gen_range(1..=8);
    random_ontology(rng, n, &preds, &preds, &Shape::DATALOG)
}

pub fn random_database(
    rng: &mut impl Rng,
    preds: &[Predicate],
    max_facts: usize,
    constants: &[&str],
) -> Database {
    let n = rng.gen_range(0..=max_facts);
    let mut db = Database::new();
    for _ in 0..n {
        let p = preds.choose(rng).unwrap();
        let args = (0..p.arity())
            .map(|_| Term::constant(*constants.choose(rng).unwrap()))
            .collect();
        db.insert(Atom::new(p.name(), args)).unwrap();
    }
    db
}

/// A CQ with `≤ max_atoms` atoms over `preds`, variables from
/// `X0..X{vars-1}`, some constants, and a random subset of the variables
/// as output.
pub fn random_query(
    rng: &mut impl Rng,
    preds: &[Predicate],
    max_atoms: usize,
    vars: usize,
) -> ConjunctiveQuery {
    loop {
        let n = rng.gen_range(1..=max_atoms);
        let body: Vec<Atom> = (0..n)
            .map(|_| {
                let p = preds.choose(rng).unwrap();
                let args = (0..p.arity())
                    .map(|_| {
                        if rng.gen_bool(0.15) {
                            Term::constant(*CONSTANTS.choose(rng).unwrap())
                        } else {
                            Term::var(format!("X{}", rng.gen_range(0..vars)), 0)
                        }
                    })
                    .collect();
                Atom::new(p.name(), args)
            })
            .collect();
        let mut vs: Vec<Variable> = Vec::new();
        for a in &body {
            for v in a.vars() {
                if !vs.contains(v) {
                    vs.push(v.clone());
                }
            }
        }
        let output: Vec<Variable> = vs.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if let Ok(q) = ConjunctiveQuery::new(output, body) {
            return q;
        }
    }
}

// ---------------------------------------------------------------------------
// oracles

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OTerm {
    C(String),
    N(usize),
    V(String),
    /// A labelled null of a library instance, by its printed name.
    L(String),
}

pub type OAtom = (String, Vec<OTerm>);

fn oterm(t: &Term) -> OTerm {
    match t {
        Term::Const(c) => OTerm::C(c.name().to_string()),
        Term::Var(v) => OTerm::V(format!("{}#{}", v.name(), v.scope())),
        Term::Null(n) => OTerm::L(n.to_string()),
    }
}

pub fn oatom(a: &Atom) -> OAtom {
    (
        a.predicate().name().to_string(),
        a.args().iter().map(oterm).collect(),
    )
}

/// Every assignment of the pattern's variables to `domain` that maps each
/// pattern atom into `facts`, found by enumerating the full cross product.
pub fn brute_force_matches(
    pattern: &[OAtom],
    facts: &HashSet<OAtom>,
    domain: &[OTerm],
) -> Vec<HashMap<String, OTerm>> {
    let mut vars: Vec<String> = Vec::new();
    for (_, args) in pattern {
        for t in args {
            if let OTerm::V(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    if !vars.is_empty() && domain.is_empty() {
        return out;
    }
    loop {
        let h: HashMap<String, OTerm> = vars
            .iter()
            .cloned()
            .zip(idx.iter().map(|&i| domain[i].clone()))
            .collect();
        let ok = pattern.iter().all(|(p, args)| {
            let img: Vec<OTerm> = args
                .iter()
                .map(|t| match t {
                    OTerm::V(v) => h[v].clone(),
                    t => t.clone(),
                })
                .collect();
            facts.contains(&(p.clone(), img))
        });
        if ok {
            out.push(h);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < domain.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn domain_of(facts: &HashSet<OAtom>) -> Vec<OTerm> {
    let d: BTreeSet<OTerm> = facts.iter().flat_map(|(_, a)| a.iter().cloned()).collect();
    d.into_iter().collect()
}

/// Answers of `q` over `facts` by exhaustive substitution; tuples with
/// nulls are dropped.
pub fn brute_force_cq(q: &ConjunctiveQuery, facts: &HashSet<OAtom>) -> BTreeSet<Vec<String>> {
    let pattern: Vec<OAtom> = q.body().iter().map(oatom).collect();
    let out: Vec<String> = q
        .output()
        .iter()
        .map(|v| format!("{}#{}", v.name(), v.scope()))
        .collect();
    brute_force_matches(&pattern, facts, &domain_of(facts))
        .into_iter()
        .filter_map(|h| {
            out.iter()
                .map(|v| match &h[v] {
                    OTerm::C(c) => Some(c.clone()),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// Every assignment mapping the pattern into `facts`, by a nested-loop
/// join that scans all facts for each pattern atom.
pub fn nested_loop_matches(
    pattern: &[OAtom],
    facts: &HashSet<OAtom>,
) -> Vec<HashMap<String, OTerm>> {
    fn go(
        pattern: &[OAtom],
        facts: &[&OAtom],
        h: &mut HashMap<String, OTerm>,
        out: &mut Vec<HashMap<String, OTerm>>,
    ) {
        let Some(((p, args), rest)) = pattern.split_first() else {
            out.push(h.clone());
            return;
        };
        for (fp, fargs) in facts {
            if fp != p || fargs.len() != args.len() {
                continue;
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (t, f) in args.iter().zip(fargs) {
                match t {
                    OTerm::V(v) => match h.get(v) {
                        Some(x) => ok = x == f,
                        None => {
                            h.insert(v.clone(), f.clone());
                            added.push(v.clone());
                        }
                    },
                    t => ok = t == f,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                go(rest, facts, h, out);
            }
            for v in added {
                h.remove(&v);
            }
        }
    }
    let list: Vec<&OAtom> = facts.iter().collect();
    let mut out = Vec::new();
    go(pattern, &list, &mut HashMap::new(), &mut out);
    out
}

/// Answers of `q` over `facts` through [`nested_loop_matches`].
pub fn join_cq(q: &ConjunctiveQuery, facts: &HashSet<OAtom>) -> BTreeSet<Vec<String>> {
    let pattern: Vec<OAtom> = q.body().iter().map(oatom).collect();
    let out: Vec<String> = q
        .output()
        .iter()
        .map(|v| format!("{}#{}", v.name(), v.scope()))
        .collect();
    nested_loop_matches(&pattern, facts)
        .into_iter()
        .filter_map(|h| {
            out.iter()
                .map(|v| match &h[v] {
                    OTerm::C(c) => Some(c.clone()),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

pub fn ofacts<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> HashSet<OAtom> {
    atoms.into_iter().map(oatom).collect()
}

/// Naive chase: apply every rule to the whole instance until nothing
/// changes. The null for `(rule, z)` is determined by the frontier image.
/// Returns `None` once the instance exceeds `max_atoms`.
pub fn naive_chase(db: &Database, onto: &Ontology, max_atoms: usize) -> Option<HashSet<OAtom>> {
    let mut facts = ofacts(db.iter());
    let mut nulls: HashMap<(usize, String, Vec<OTerm>), usize> = HashMap::new();
    let rules: Vec<(Vec<OAtom>, Vec<OAtom>, Vec<String>)> = onto
        .rules()
        .iter()
        .map(|r| {
            let frontier = r
                .frontier()
                .iter()
                .map(|v| format!("{}#{}", v.name(), v.scope()))
                .collect();
            (
                r.body().iter().map(oatom).collect(),
                r.head().iter().map(oatom).collect(),
                frontier,
            )
        })
        .collect();
    loop {
        let mut new = Vec::new();
        for (ri, (body, head, frontier)) in rules.iter().enumerate() {
            for h in nested_loop_matches(body, &facts) {
                let key: Vec<OTerm> = frontier.iter().map(|v| h[v].clone()).collect();
                for (p, args) in head {
                    let img: Vec<OTerm> = args
                        .iter()
                        .map(|t| match t {
                            OTerm::V(v) => match h.get(v) {
                                Some(x) => x.clone(),
                                None => {
                                    let next = nulls.len();
                                    OTerm::N(
                                        *nulls.entry((ri, v.clone(), key.clone())).or_insert(next),
                                    )
                                }
                            },
                            t => t.clone(),
                        })
                        .collect();
                    let a = (p.clone(), img);
                    if !facts.contains(&a) {
                        new.push(a);
                    }
                }
            }
        }
        if new.is_empty() {
            return Some(facts);
        }
        facts.extend(new);
        if facts.len() > max_atoms {
            return None;
        }
    }
}

pub fn answer_strings(answers: &dyadic_core::query::AnswerSet) -> BTreeSet<Vec<String>> {
    answers
        .iter()
        .map(|t| t.iter().map(|c: &Constant| c.name().to_string()).collect())
        .collect()
}
