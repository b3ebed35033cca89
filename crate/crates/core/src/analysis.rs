//! Static analyses over an ontology.
//!
//! * which existential variables can invade each position ([`affected_positions`]),
//! * harmless / harmful / dangerous body variables ([`classify_variables`]),
//! * the problematic/safe split of rule bodies and the bridge variables,
//! * the sticky marking and the two acyclicity graphs.
//!
//! All functions expect a renamed-apart ontology (see
//! [`Ontology::rename_apart`]); existential variables are identified by
//! their [`Variable`] value, so sharing them across rules would merge them.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use indexmap::{IndexMap, IndexSet};

use crate::model::{Atom, Ontology, Position, Tgd, Variable};

/// A set of existential variables.
pub type ExSet = BTreeSet<Variable>;

static EMPTY: ExSet = BTreeSet::new();

/// For every position of the schema, the unique set `S` of existential
/// variables for which it is `S`-affected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffectedMap {
    map: IndexMap<Position, ExSet>,
}

impl AffectedMap {
    /// `aff(π)`; empty for positions outside the schema.
    pub fn aff(&self, pos: &Position) -> &ExSet {
        self.map.get(pos).unwrap_or(&EMPTY)
    }

    pub fn is_affected(&self, pos: &Position) -> bool {
        !self.aff(pos).is_empty()
    }

    /// `aff(Σ)`.
    pub fn affected(&self) -> impl Iterator<Item = (&Position, &ExSet)> {
        self.map.iter().filter(|(_, s)| !s.is_empty())
    }

    /// `nonaff(Σ)`.
    pub fn non_affected(&self) -> impl Iterator<Item = &Position> {
        self.map
            .iter()
            .filter(|(_, s)| s.is_empty())
            .map(|(p, _)| p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Position, &ExSet)> {
        self.map.iter()
    }

    /// Intersection of `aff` over the positions where `var` occurs in `atoms`.
    /// `None` if the variable does not occur.
    pub fn intersection_over(&self, var: &Variable, atoms: &[Atom]) -> Option<ExSet> {
        let mut acc: Option<ExSet> = None;
        for a in atoms {
            for (pos, t) in a.positioned() {
                if t.as_var() != Some(var) {
                    continue;
                }
                let s = self.aff(&pos);
                acc = Some(match acc {
                    None => s.clone(),
                    Some(prev) => prev.intersection(s).cloned().collect(),
                });
            }
        }
        acc
    }
}

/// Least fixpoint of the two invasion conditions: an existential variable
/// invades the head positions where it occurs, and a frontier variable whose
/// body occurrences are all `z`-invaded carries `z` to its head positions.
pub fn affected_positions(ontology: &Ontology) -> AffectedMap {
    debug_assert!(ontology.is_renamed_apart());
    let mut map: IndexMap<Position, ExSet> = ontology
        .positions()
        .into_iter()
        .map(|p| (p, ExSet::new()))
        .collect();
    for rule in ontology.rules() {
        let ex: HashSet<&Variable> = rule.exvars().iter().collect();
        for a in rule.head() {
            for (pos, t) in a.positioned() {
                if let Some(v) = t.as_var().filter(|v| ex.contains(v)) {
                    map.get_mut(&pos).unwrap().insert(v.clone());
                }
            }
        }
    }
    let mut current = AffectedMap { map };
    loop {
        let mut changed = false;
        for rule in ontology.rules() {
            for x in rule.frontier() {
                let carried = current
                    .intersection_over(x, rule.body())
                    .unwrap_or_default();
                if carried.is_empty() {
                    continue;
                }
                for a in rule.head() {
                    for (pos, t) in a.positioned() {
                        if t.as_var() == Some(x) {
                            let set = current.map.get_mut(&pos).unwrap();
                            for z in &carried {
                                changed |= set.insert(z.clone());
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            return current;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VariableClass {
    Harmless,
    Harmful(ExSet),
    /// Harmful and in the frontier.
    Dangerous(ExSet),
}

impl VariableClass {
    pub fn is_harmless(&self) -> bool {
        matches!(self, VariableClass::Harmless)
    }

    /// Harmful, dangerous included.
    pub fn is_harmful(&self) -> bool {
        !self.is_harmless()
    }

    pub fn is_dangerous(&self) -> bool {
        matches!(self, VariableClass::Dangerous(_))
    }

    /// The set `S`, empty when harmless.
    pub fn set(&self) -> &ExSet {
        match self {
            VariableClass::Harmless => &EMPTY,
            VariableClass::Harmful(s) | VariableClass::Dangerous(s) => s,
        }
    }
}

impl fmt::Display for VariableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |s: &ExSet| {
            s.iter()
                .map(|v| v.name().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            VariableClass::Harmless => f.write_str("harmless"),
            VariableClass::Harmful(s) => write!(f, "harmful{{{}}}", names(s)),
            VariableClass::Dangerous(s) => write!(f, "dangerous{{{}}}", names(s)),
        }
    }
}

/// Classes of the body variables of one rule, by first occurrence.
pub type RuleClasses = IndexMap<Variable, VariableClass>;

pub fn classify_rule(rule: &Tgd, affected: &AffectedMap) -> RuleClasses {
    let frontier: HashSet<&Variable> = rule.frontier().iter().collect();
    rule.uvars()
        .iter()
        .map(|x| {
            let s = affected
                .intersection_over(x, rule.body())
                .unwrap_or_default();
            let class = if s.is_empty() {
                VariableClass::Harmless
            } else if frontier.contains(x) {
                VariableClass::Dangerous(s)
            } else {
                VariableClass::Harmful(s)
            };
            (x.clone(), class)
        })
        .collect()
}

/// Per-rule classification, indexed like `ontology.rules()`.
pub fn classify_variables(ontology: &Ontology, affected: &AffectedMap) -> Vec<RuleClasses> {
    ontology
        .rules()
        .iter()
        .map(|r| classify_rule(r, affected))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSplit {
    pub rule: String,
    /// Problematic atoms, in body order.
    pub p_atoms: Vec<Atom>,
    /// Safe atoms, in body order.
    pub s_atoms: Vec<Atom>,
}

/// Seeds with the atoms holding a dangerous variable and closes over atoms
/// sharing a harmful variable.
pub fn split_atoms(rule: &Tgd, classes: &RuleClasses) -> AtomSplit {
    let body = rule.body();
    let harmful = |v: &Variable| classes.get(v).is_some_and(VariableClass::is_harmful);
    let mut problematic = vec![false; body.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, a) in body.iter().enumerate() {
        if a.vars()
            .any(|v| classes.get(v).is_some_and(VariableClass::is_dangerous))
        {
            problematic[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let shared: HashSet<&Variable> = body[i].vars().filter(|v| harmful(v)).collect();
        for (j, b) in body.iter().enumerate() {
            if !problematic[j] && b.vars().any(|v| shared.contains(v)) {
                problematic[j] = true;
                queue.push_back(j);
            }
        }
    }
    let (mut p_atoms, mut s_atoms) = (Vec::new(), Vec::new());
    for (a, p) in body.iter().zip(problematic) {
        if p {
            p_atoms.push(a.clone());
        } else {
            s_atoms.push(a.clone());
        }
    }
    AtomSplit {
        rule: rule.id().to_string(),
        p_atoms,
        s_atoms,
    }
}

/// `(vars(p_atoms) ∩ vars(s_atoms)) ∪ HF`, where HF are the harmless frontier
/// variables of the safe atoms. Ordered by first occurrence in the body.
pub fn bridge_vars(rule: &Tgd, classes: &RuleClasses, split: &AtomSplit) -> Vec<Variable> {
    let p_vars: HashSet<&Variable> = split.p_atoms.iter().flat_map(Atom::vars).collect();
    let s_vars: HashSet<&Variable> = split.s_atoms.iter().flat_map(Atom::vars).collect();
    let frontier: HashSet<&Variable> = rule.frontier().iter().collect();
    rule.uvars()
        .iter()
        .filter(|v| s_vars.contains(v))
        .filter(|v| {
            p_vars.contains(v)
                || (frontier.contains(v) && classes.get(*v).is_some_and(VariableClass::is_harmless))
        })
        .cloned()
        .collect()
}

/// Everything the recognizers and the decomposition need, computed once.
#[derive(Debug, Clone)]
pub struct Analysis<'a> {
    ontology: &'a Ontology,
    affected: AffectedMap,
    classes: Vec<RuleClasses>,
    splits: Vec<AtomSplit>,
    bridges: Vec<Vec<Variable>>,
}

impl<'a> Analysis<'a> {
    pub fn new(ontology: &'a Ontology) -> Self {
        let affected = affected_positions(ontology);
        let classes = classify_variables(ontology, &affected);
        let splits: Vec<_> = ontology
            .rules()
            .iter()
            .zip(&classes)
            .map(|(r, c)| split_atoms(r, c))
            .collect();
        let bridges = ontology
            .rules()
            .iter()
            .zip(&classes)
            .zip(&splits)
            .map(|((r, c), s)| bridge_vars(r, c, s))
            .collect();
        Analysis {
            ontology,
            affected,
            classes,
            splits,
            bridges,
        }
    }

    pub fn ontology(&self) -> &'a Ontology {
        self.ontology
    }

    pub fn affected(&self) -> &AffectedMap {
        &self.affected
    }

    pub fn classes(&self, rule: usize) -> &RuleClasses {
        &self.classes[rule]
    }

    pub fn class_of(&self, rule: usize, var: &Variable) -> Option<&VariableClass> {
        self.classes[rule].get(var)
    }

    pub fn split(&self, rule: usize) -> &AtomSplit {
        &self.splits[rule]
    }

    pub fn bridge(&self, rule: usize) -> &[Variable] {
        &self.bridges[rule]
    }

    fn collect(&self, pred: impl Fn(&VariableClass) -> bool) -> IndexSet<Variable> {
        self.classes
            .iter()
            .flat_map(|c| c.iter().filter(|(_, k)| pred(k)).map(|(v, _)| v.clone()))
            .collect()
    }

    /// `harml(Σ)`.
    pub fn harmless(&self) -> IndexSet<Variable> {
        self.collect(VariableClass::is_harmless)
    }

    /// `harmf(Σ)`, dangerous variables included.
    pub fn harmful(&self) -> IndexSet<Variable> {
        self.collect(VariableClass::is_harmful)
    }

    /// `dang(Σ)`.
    pub fn dangerous(&self) -> IndexSet<Variable> {
        self.collect(VariableClass::is_dangerous)
    }
}

/// Marked `(rule index, variable)` pairs.
pub type MarkedSet = BTreeSet<(usize, Variable)>;

/// Sticky marking: body variables missing from the head are marked, and
/// marking spreads from a marked body position to every head variable at
/// that position.
pub fn marked_variables(ontology: &Ontology) -> MarkedSet {
    let rules = ontology.rules();
    let mut marked = MarkedSet::new();
    for (i, r) in rules.iter().enumerate() {
        let head_vars: HashSet<&Variable> = r.head().iter().flat_map(Atom::vars).collect();
        for v in r.uvars() {
            if !head_vars.contains(v) {
                marked.insert((i, v.clone()));
            }
        }
    }
    loop {
        let marked_positions: HashSet<Position> = rules
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                let marked = &marked;
                r.body().iter().flat_map(move |a| {
                    a.positioned()
                        .filter(move |(_, t)| {
                            t.as_var().is_some_and(|v| marked.contains(&(i, v.clone())))
                        })
                        .map(|(p, _)| p)
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut changed = false;
        for (i, r) in rules.iter().enumerate() {
            for a in r.head() {
                for (pos, t) in a.positioned() {
                    if let Some(v) = t.as_var() {
                        if marked_positions.contains(&pos) {
                            changed |= marked.insert((i, v.clone()));
                        }
                    }
                }
            }
        }
        if !changed {
            return marked;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcKind {
    Universal,
    Existential,
}

impl fmt::Display for ArcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcKind::Universal => "∀",
            ArcKind::Existential => "∃",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct DependencyGraphs {
    /// Label graph over positions.
    pub positions: IndexSet<Position>,
    pub label_arcs: IndexSet<(Position, Position, ArcKind)>,
    /// Existential graph over existential variables.
    pub exvars: IndexSet<Variable>,
    pub existential_arcs: IndexSet<(Variable, Variable)>,
}

impl DependencyGraphs {
    /// An ∃-arc lying on a cycle, with the cycle as a position path.
    pub fn existential_cycle(&self) -> Option<Vec<Position>> {
        let mut succ: HashMap<&Position, Vec<&Position>> = HashMap::new();
        for (a, b, _) in &self.label_arcs {
            succ.entry(a).or_default().push(b);
        }
        for (a, b, kind) in &self.label_arcs {
            if *kind != ArcKind::Existential {
                continue;
            }
            if let Some(mut path) = find_path(&succ, b, a) {
                path.insert(0, a);
                return Some(path.into_iter().cloned().collect());
            }
        }
        None
    }

    /// A cycle of the existential graph, if any.
    pub fn exvar_cycle(&self) -> Option<Vec<Variable>> {
        let mut succ: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
        for (a, b) in &self.existential_arcs {
            succ.entry(a).or_default().push(b);
        }
        for (a, b) in &self.existential_arcs {
            if let Some(mut path) = find_path(&succ, b, a) {
                path.insert(0, a);
                return Some(path.into_iter().cloned().collect());
            }
        }
        None
    }
}

/// Shortest path `from ⇝ to` (both included) by BFS.
fn find_path<'a, N: Eq + Hash>(
    succ: &HashMap<&'a N, Vec<&'a N>>,
    from: &'a N,
    to: &'a N,
) -> Option<Vec<&'a N>> {
    let mut parent: HashMap<&N, &N> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = HashSet::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            let mut path = vec![n];
            let mut cur = n;
            while let Some(p) = parent.get(cur) {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for m in succ.get(n).into_iter().flatten() {
            if seen.insert(m) {
                parent.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    None
}

pub fn dependency_graphs(ontology: &Ontology) -> DependencyGraphs {
    let affected = affected_positions(ontology);
    let mut g = DependencyGraphs {
        positions: ontology.positions(),
        exvars: ontology.exvars(),
        ..Default::default()
    };
    for rule in ontology.rules() {
        let positions_of = |v: &Variable, atoms: &[Atom]| -> Vec<Position> {
            atoms
                .iter()
                .flat_map(|a| {
                    a.positioned()
                        .filter(|(_, t)| t.as_var() == Some(v))
                        .map(|(p, _)| p)
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        let ex_positions: Vec<Position> = rule
            .exvars()
            .iter()
            .flat_map(|z| positions_of(z, rule.head()))
            .collect();
        for x in rule.frontier() {
            let from = positions_of(x, rule.body());
            let to = positions_of(x, rule.head());
            for p in &from {
                for q in &to {
                    g.label_arcs
                        .insert((p.clone(), q.clone(), ArcKind::Universal));
                }
                for q in &ex_positions {
                    g.label_arcs
                        .insert((p.clone(), q.clone(), ArcKind::Existential));
                }
            }
        }
        let classes = classify_rule(rule, &affected);
        for y in rule.exvars() {
            for x in rule.frontier() {
                for z in classes[x].set() {
                    g.existential_arcs.insert((z.clone(), y.clone()));
                }
            }
        }
    }
    g
}
