//! Head-ground sets, dyadic pairs, and the hg/main rewriting of rules.
//!
//! For a rule `σ` with safe atoms `S`, problematic atoms `P` and bridge
//! variables `b`:
//!
//! ```text
//! hg(σ):   S            -> __aux_σ(b)
//! main(σ): __aux_σ(b), P -> head(σ)
//! ```
//!
//! A bridge variable occurring `n > 1` times in `head(σ)` takes `n` slots of
//! the auxiliary atom; in `main(σ)` each slot gets its own variable
//! (`X_1 .. X_n`, in head-occurrence order). Rules without safe atoms have no
//! hg part and are copied to the main side unchanged.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::analysis::{Analysis, VariableClass};
use crate::model::{Atom, ModelError, Ontology, Predicate, Term, Tgd, Variable};
use crate::parser::RESERVED_PREFIX;
use crate::recognizers::{recognize, BaseClass, ClassName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("rule {0} of the subset is not a rule of the ontology")]
    NotASubset(String),
    #[error("ontology is not in {0}")]
    NotInDyadicClass(ClassName),
    #[error("hg rules are not head-ground: {0}")]
    NotHeadGround(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The four head-ground properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadGroundProperty {
    /// (1) the subset is datalog.
    Datalog = 1,
    /// (2) head atoms carry only harmless variables w.r.t. the whole ontology.
    HarmlessHeads = 2,
    /// (3) no head predicate of the subset occurs in one of its bodies.
    NonRecursive = 3,
    /// (4) no head predicate of the subset is a head predicate of the rest.
    ExclusiveHeads = 4,
}

impl fmt::Display for HeadGroundProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            HeadGroundProperty::Datalog => "datalog",
            HeadGroundProperty::HarmlessHeads => "harmless head variables",
            HeadGroundProperty::NonRecursive => "head predicates absent from bodies",
            HeadGroundProperty::ExclusiveHeads => "head predicates exclusive to the subset",
        };
        write!(f, "({}) {text}", *self as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadGroundReport {
    /// Violated properties with a witness each, sorted by property.
    pub violations: Vec<(HeadGroundProperty, String)>,
}

impl HeadGroundReport {
    pub fn is_head_ground(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self) -> Vec<HeadGroundProperty> {
        self.violations.iter().map(|(p, _)| *p).collect()
    }
}

/// Checks whether `subset` is head-ground w.r.t. `ontology`. Rules are
/// matched by structural equality.
pub fn is_head_ground(
    subset: &Ontology,
    ontology: &Ontology,
) -> Result<HeadGroundReport, DecompositionError> {
    let mut in_subset = vec![false; ontology.len()];
    for r in subset.rules() {
        let i = ontology
            .rules()
            .iter()
            .position(|s| s == r)
            .ok_or_else(|| DecompositionError::NotASubset(r.id().to_string()))?;
        in_subset[i] = true;
    }
    let analysis = Analysis::new(ontology);
    let mut violations = Vec::new();

    if let Some(r) = subset.rules().iter().find(|r| !r.is_datalog()) {
        violations.push((
            HeadGroundProperty::Datalog,
            format!("rule {} is not a single-head full rule", r.id()),
        ));
    }

    'rules: for (i, r) in ontology.rules().iter().enumerate() {
        if !in_subset[i] {
            continue;
        }
        for v in r.head().iter().flat_map(Atom::vars) {
            match analysis.class_of(i, v) {
                Some(VariableClass::Harmless) => {}
                Some(c) => {
                    violations.push((
                        HeadGroundProperty::HarmlessHeads,
                        format!("variable {v} of rule {} is {c}", r.id()),
                    ));
                    break 'rules;
                }
                None => {
                    violations.push((
                        HeadGroundProperty::HarmlessHeads,
                        format!("existential variable {v} in the head of rule {}", r.id()),
                    ));
                    break 'rules;
                }
            }
        }
    }

    let heads = subset.head_predicates();
    let bodies = subset.body_predicates();
    if let Some(p) = heads.iter().find(|p| bodies.contains(*p)) {
        violations.push((
            HeadGroundProperty::NonRecursive,
            format!(
                "{} is both a head and a body predicate of the subset",
                p.name()
            ),
        ));
    }

    let rest = Ontology::new(
        ontology
            .rules()
            .iter()
            .zip(&in_subset)
            .filter(|(_, s)| !**s)
            .map(|(r, _)| r.clone())
            .collect(),
    )?;
    let rest_heads = rest.head_predicates();
    if let Some(p) = heads.iter().find(|p| rest_heads.contains(*p)) {
        violations.push((
            HeadGroundProperty::ExclusiveHeads,
            format!("{} is also a head predicate outside the subset", p.name()),
        ));
    }
    Ok(HeadGroundReport { violations })
}

pub fn aux_predicate_name(rule_id: &str) -> String {
    format!("{RESERVED_PREFIX}aux_{rule_id}")
}

fn aux_name(rule: &Tgd, schema: &IndexSet<Predicate>) -> String {
    let mut name = aux_predicate_name(rule.id());
    while schema.iter().any(|p| p.name() == name) {
        name.push('_');
    }
    name
}

/// The auxiliary argument list: each bridge variable once, or `n` times if
/// it occurs `n > 1` times in the head.
fn aux_slots(rule: &Tgd, bridge: &[Variable]) -> Vec<(Variable, usize)> {
    let mut head_count: HashMap<&Variable, usize> = HashMap::new();
    for v in rule.head().iter().flat_map(Atom::vars) {
        *head_count.entry(v).or_default() += 1;
    }
    bridge
        .iter()
        .map(|v| (v.clone(), head_count.get(v).copied().unwrap_or(0).max(1)))
        .collect()
}

/// `hg(σ)` for rule `index`; `None` when the rule has no safe atoms.
pub fn hg_rule(analysis: &Analysis<'_>, index: usize) -> Option<Tgd> {
    let rule = &analysis.ontology().rules()[index];
    let split = analysis.split(index);
    if split.s_atoms.is_empty() {
        return None;
    }
    let args = aux_slots(rule, analysis.bridge(index))
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(Term::Var(v), n))
        .collect();
    let head = Atom::new(aux_name(rule, &analysis.ontology().schema()), args);
    Some(
        Tgd::new(
            format!("hg_{}", rule.id()),
            split.s_atoms.clone(),
            vec![head],
        )
        .expect("non-empty safe atoms"),
    )
}

/// `main(σ)` for rule `index`.
pub fn main_rule(analysis: &Analysis<'_>, index: usize) -> Tgd {
    let rule = &analysis.ontology().rules()[index];
    let split = analysis.split(index);
    if split.s_atoms.is_empty() {
        return rule.clone();
    }
    let slots = aux_slots(rule, analysis.bridge(index));
    let mut used: HashSet<String> = rule.all_vars().map(|v| v.name().to_string()).collect();
    let mut fresh = |base: &Variable, k: usize| {
        let mut name = format!("{}_{k}", base.name());
        while used.contains(&name) {
            name.push('_');
        }
        used.insert(name.clone());
        Variable::new(name, base.scope())
    };
    let mut aux_args = Vec::new();
    let mut copies: HashMap<Variable, Vec<Variable>> = HashMap::new();
    for (v, n) in &slots {
        if *n == 1 {
            aux_args.push(Term::Var(v.clone()));
        } else {
            let names: Vec<Variable> = (1..=*n).map(|k| fresh(v, k)).collect();
            aux_args.extend(names.iter().cloned().map(Term::Var));
            copies.insert(v.clone(), names);
        }
    }
    let aux = Atom::new(aux_name(rule, &analysis.ontology().schema()), aux_args);
    let body: Vec<Atom> = std::iter::once(aux)
        .chain(split.p_atoms.iter().map(|a| {
            a.map_terms(|t| match t.as_var().and_then(|v| copies.get(v)) {
                Some(names) => Term::Var(names[0].clone()),
                None => t.clone(),
            })
        }))
        .collect();
    let mut seen: HashMap<Variable, usize> = HashMap::new();
    let head = rule
        .head()
        .iter()
        .map(|a| {
            a.map_terms(
                |t| match t.as_var().and_then(|v| copies.get(v).map(|n| (v, n))) {
                    Some((v, names)) => {
                        let k = seen.entry(v.clone()).or_default();
                        *k += 1;
                        Term::Var(names[*k - 1].clone())
                    }
                    None => t.clone(),
                },
            )
        })
        .collect();
    Tgd::new(rule.id(), body, head).expect("main rule keeps a non-empty body and head")
}

/// `hg(Σ)`.
pub fn hg_ontology(analysis: &Analysis<'_>) -> Ontology {
    let rules = (0..analysis.ontology().len())
        .filter_map(|i| hg_rule(analysis, i))
        .collect();
    Ontology::new(rules).expect("hg ids derive from unique rule ids")
}

/// `main(Σ)`.
pub fn main_ontology(analysis: &Analysis<'_>) -> Ontology {
    let rules = (0..analysis.ontology().len())
        .map(|i| main_rule(analysis, i))
        .collect();
    Ontology::new(rules).expect("main ids are the original ids")
}

/// A head-ground component and a component in some class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPair {
    pub sigma_hg: Ontology,
    pub sigma_c: Ontology,
    /// Rule id of the original rule → its auxiliary predicate.
    pub aux_registry: IndexMap<String, Predicate>,
}

impl DyadicPair {
    /// Builds a pair, renaming variables so that the union `Σhg ∪ Σc` is
    /// renamed apart.
    pub fn new(sigma_hg: Ontology, sigma_c: Ontology) -> Result<Self, ModelError> {
        let n = sigma_hg.len() as u32;
        let sigma_hg = Ontology::new(
            sigma_hg
                .rules()
                .iter()
                .enumerate()
                .map(|(i, r)| r.retag(i as u32))
                .collect(),
        )?;
        let sigma_c = Ontology::new(
            sigma_c
                .rules()
                .iter()
                .enumerate()
                .map(|(i, r)| r.retag(n + i as u32))
                .collect(),
        )?;
        sigma_hg.union(&sigma_c)?;
        Ok(DyadicPair {
            sigma_hg,
            sigma_c,
            aux_registry: IndexMap::new(),
        })
    }

    /// `Σhg ∪ Σc`.
    pub fn union(&self) -> Ontology {
        self.sigma_hg
            .union(&self.sigma_c)
            .expect("checked at construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCheck {
    pub head_ground: HeadGroundReport,
    pub in_class: bool,
    pub class_witness: Option<String>,
}

impl PairCheck {
    pub fn is_dyadic(&self) -> bool {
        self.head_ground.is_head_ground() && self.in_class
    }
}

/// `Σhg` head-ground w.r.t. `Σhg ∪ Σc`, and `Σc ∈ class`.
pub fn is_dyadic_pair(pair: &DyadicPair, class: ClassName) -> PairCheck {
    let union = pair.union();
    let head_ground = is_head_ground(&pair.sigma_hg, &union).expect("Σhg ⊆ Σhg ∪ Σc");
    let verdict = recognize(&pair.sigma_c, class);
    PairCheck {
        head_ground,
        in_class: verdict.member,
        class_witness: verdict.witness,
    }
}

/// The canonical pair: `(∅, Σ)` when `Σ ∈ class`, `(hg(Σ), main(Σ))`
/// otherwise.
pub fn decompose(ontology: &Ontology, class: BaseClass) -> Result<DyadicPair, DecompositionError> {
    let ontology = ontology.rename_apart();
    if !recognize(&ontology, ClassName::DyadicOf(class)).member {
        return Err(DecompositionError::NotInDyadicClass(ClassName::DyadicOf(
            class,
        )));
    }
    if recognize(&ontology, class.into()).member {
        return Ok(DyadicPair::new(Ontology::empty(), ontology)?);
    }
    let analysis = Analysis::new(&ontology);
    let mut pair = DyadicPair::new(hg_ontology(&analysis), main_ontology(&analysis))?;
    for hg in pair.sigma_hg.rules() {
        let original = hg
            .id()
            .strip_prefix("hg_")
            .expect("hg rule ids are prefixed");
        pair.aux_registry
            .insert(original.to_string(), hg.head()[0].predicate().clone());
    }
    let check = is_dyadic_pair(&pair, class.into());
    if !check.head_ground.is_head_ground() {
        let why = check
            .head_ground
            .violations
            .iter()
            .map(|(p, w)| format!("{p}: {w}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(DecompositionError::NotHeadGround(why));
    }
    Ok(pair)
}
