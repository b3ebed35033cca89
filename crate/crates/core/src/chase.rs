//! Breadth-first semi-oblivious chase.
//!
//! A trigger for rule `σ` maps its body into the instance. Firing it adds the
//! head with every existential variable `z` replaced by the null
//! `(σ, z, h|frontier)`, so two triggers agreeing on the frontier produce the
//! same atoms. Rounds are separated by a barrier: round `k` only sees atoms
//! of level `< k`, and everything it produces gets level `k`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;

use crate::model::{Atom, Database, Instance, NullId, Ontology, Term, Tgd, Variable};
use crate::query::{for_each_match, AtomStore, Pattern};

/// Limits on the chase. `None` means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaseBudget {
    pub max_atoms: Option<usize>,
    pub max_level: Option<u32>,
}

impl ChaseBudget {
    pub const DEFAULT_MAX_ATOMS: usize = 100_000;
    pub const DEFAULT_MAX_LEVEL: u32 = 64;

    pub fn unlimited() -> Self {
        ChaseBudget {
            max_atoms: None,
            max_level: None,
        }
    }
}

impl Default for ChaseBudget {
    fn default() -> Self {
        ChaseBudget {
            max_atoms: Some(Self::DEFAULT_MAX_ATOMS),
            max_level: Some(Self::DEFAULT_MAX_LEVEL),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChaseStatus {
    /// A fixpoint was reached: the instance is the chase.
    Completed,
    /// A budget stopped the run before the fixpoint.
    BudgetExhausted,
}

impl fmt::Display for ChaseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChaseStatus::Completed => "Completed",
            ChaseStatus::BudgetExhausted => "BudgetExhausted",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ChaseResult {
    instance: Instance,
    levels: Vec<u32>,
    status: ChaseStatus,
}

impl ChaseResult {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn into_instance(self) -> Instance {
        self.instance
    }

    pub fn status(&self) -> ChaseStatus {
        self.status
    }

    pub fn is_complete(&self) -> bool {
        self.status == ChaseStatus::Completed
    }

    /// Level of an atom: 0 for database facts, `k` if first derived in round `k`.
    pub fn level(&self, atom: &Atom) -> Option<u32> {
        self.instance.index_of(atom).map(|i| self.levels[i])
    }

    /// Atoms with their levels, in derivation order.
    pub fn atoms_with_levels(&self) -> impl Iterator<Item = (&Atom, u32)> {
        self.instance.iter().zip(self.levels.iter().copied())
    }

    /// Highest level present in the instance.
    pub fn depth(&self) -> u32 {
        self.levels.last().copied().unwrap_or(0)
    }
}

struct CompiledRule<'a> {
    rule: &'a Tgd,
    body: Pattern,
    frontier: Vec<(Arc<str>, usize)>,
}

impl<'a> CompiledRule<'a> {
    fn new(rule: &'a Tgd) -> Self {
        let body = Pattern::compile(rule.body());
        let frontier = rule
            .frontier()
            .iter()
            .map(|v| {
                let slot = body
                    .var_index(v)
                    .expect("frontier variables occur in the body");
                (Arc::from(v.name()), slot)
            })
            .collect();
        CompiledRule {
            rule,
            body,
            frontier,
        }
    }

    fn fire(&self, binding: &[Term], out: &mut Vec<Atom>) {
        let frontier_image: Vec<(Arc<str>, Term)> = self
            .frontier
            .iter()
            .map(|(name, slot)| (name.clone(), binding[*slot].clone()))
            .collect();
        let mut nulls: HashMap<&Variable, Term> = HashMap::new();
        for z in self.rule.exvars() {
            let id = NullId::new(self.rule.id(), z.name(), frontier_image.clone());
            nulls.insert(z, Term::Null(Arc::new(id)));
        }
        for h in self.rule.head() {
            out.push(h.map_terms(|t| match t {
                Term::Var(v) => match self.body.var_index(v) {
                    Some(i) => binding[i].clone(),
                    None => nulls[v].clone(),
                },
                t => t.clone(),
            }));
        }
    }
}

/// Runs the chase of `database` under `ontology` within `budget`.
///
/// Within a round, triggers fire in lexicographic order of the ids of the
/// atoms they match, rule by rule, so the output order is deterministic.
pub fn run_chase(database: &Database, ontology: &Ontology, budget: ChaseBudget) -> ChaseResult {
    let mut store = AtomStore::from_atoms(database.iter());
    let mut levels = vec![0u32; store.len()];
    let rules: Vec<CompiledRule<'_>> = ontology.rules().iter().map(CompiledRule::new).collect();

    let mut delta_start = 0u32;
    let mut delta_end = store.len() as u32;
    let mut round = 1u32;
    let status = 'outer: loop {
        if budget.max_atoms.is_some_and(|m| store.len() > m) {
            break ChaseStatus::BudgetExhausted;
        }
        let mut fresh: IndexSet<Atom> = IndexSet::new();
        let mut head = Vec::new();
        for rule in &rules {
            let n = rule.body.len();
            let mut triggers: Vec<(Vec<u32>, Vec<Term>)> = Vec::new();
            // semi-naive split: atom i is the first one taken from the last round
            for i in 0..n {
                let ranges: Vec<_> = (0..n)
                    .map(|j| match j.cmp(&i) {
                        std::cmp::Ordering::Less => 0..delta_start,
                        std::cmp::Ordering::Equal => delta_start..delta_end,
                        std::cmp::Ordering::Greater => 0..delta_end,
                    })
                    .collect();
                for_each_match(&rule.body, &store, &ranges, |binding, matched| {
                    triggers.push((matched.to_vec(), binding.to_vec()));
                });
            }
            triggers.sort_by(|a, b| a.0.cmp(&b.0));
            for (_, binding) in &triggers {
                head.clear();
                rule.fire(binding, &mut head);
                for a in head.drain(..) {
                    if !store.contains(&a) {
                        fresh.insert(a);
                    }
                }
            }
        }
        if fresh.is_empty() {
            break ChaseStatus::Completed;
        }
        if budget.max_level.is_some_and(|m| round > m) {
            break ChaseStatus::BudgetExhausted;
        }
        for a in fresh {
            if budget.max_atoms.is_some_and(|m| store.len() >= m) {
                break 'outer ChaseStatus::BudgetExhausted;
            }
            store.insert(a);
            levels.push(round);
        }
        delta_start = delta_end;
        delta_end = store.len() as u32;
        round += 1;
    };

    ChaseResult {
        instance: Instance::from_index_set(store.into_atoms()),
        levels,
        status,
    }
}

/// The null-free part of a chase result, i.e. the atoms made only of
/// constants. Contains the database.
pub fn chase_bottom(result: &ChaseResult) -> Database {
    Database::from_facts(result.instance().iter().filter(|a| !a.has_nulls()).cloned())
        .expect("null-free chase atoms are facts")
}
