//! Membership tests for the syntactic classes and their dyadic extensions.
//!
//! Every recognizer scans the rules in declaration order and reports the
//! first violation as a human-readable witness.
//!
//! `Joinless` means that every body variable occurs exactly once in the
//! body.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{dependency_graphs, marked_variables, Analysis, VariableClass};
use crate::decomposition::main_ontology;
use crate::model::{Atom, Ontology, Term, Tgd, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported class {0}")]
pub struct UnsupportedClass(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseClass {
    Datalog,
    AfInds,
    InclusionDependencies,
    Linear,
    Joinless,
    Guarded,
    WeaklyGuarded,
    Sticky,
    WeaklyAcyclic,
    JointlyAcyclic,
    Shy,
    Ward,
}

impl BaseClass {
    pub const ALL: [BaseClass; 12] = [
        BaseClass::Datalog,
        BaseClass::AfInds,
        BaseClass::InclusionDependencies,
        BaseClass::Linear,
        BaseClass::Joinless,
        BaseClass::Guarded,
        BaseClass::WeaklyGuarded,
        BaseClass::Sticky,
        BaseClass::WeaklyAcyclic,
        BaseClass::JointlyAcyclic,
        BaseClass::Shy,
        BaseClass::Ward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseClass::Datalog => "Datalog",
            BaseClass::AfInds => "AfInds",
            BaseClass::InclusionDependencies => "InclusionDependencies",
            BaseClass::Linear => "Linear",
            BaseClass::Joinless => "Joinless",
            BaseClass::Guarded => "Guarded",
            BaseClass::WeaklyGuarded => "WeaklyGuarded",
            BaseClass::Sticky => "Sticky",
            BaseClass::WeaklyAcyclic => "WeaklyAcyclic",
            BaseClass::JointlyAcyclic => "JointlyAcyclic",
            BaseClass::Shy => "Shy",
            BaseClass::Ward => "Ward",
        }
    }

    /// Classes on which the chase is guaranteed to terminate.
    pub fn chase_terminating(self) -> bool {
        matches!(
            self,
            BaseClass::Datalog
                | BaseClass::AfInds
                | BaseClass::WeaklyAcyclic
                | BaseClass::JointlyAcyclic
        )
    }
}

impl fmt::Display for BaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseClass {
    type Err = UnsupportedClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        BaseClass::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnsupportedClass(s.to_string()))
    }
}

/// A base class or its dyadic extension (one level of nesting at most).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassName {
    Base(BaseClass),
    DyadicOf(BaseClass),
}

impl ClassName {
    pub fn base(self) -> BaseClass {
        match self {
            ClassName::Base(c) | ClassName::DyadicOf(c) => c,
        }
    }

    /// The twelve base classes followed by their dyadic extensions.
    pub fn all() -> Vec<ClassName> {
        BaseClass::ALL
            .into_iter()
            .map(ClassName::Base)
            .chain(BaseClass::ALL.into_iter().map(ClassName::DyadicOf))
            .collect()
    }
}

impl From<BaseClass> for ClassName {
    fn from(c: BaseClass) -> Self {
        ClassName::Base(c)
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassName::Base(c) => write!(f, "{c}"),
            ClassName::DyadicOf(c) => write!(f, "Dyadic-{c}"),
        }
    }
}

impl FromStr for ClassName {
    type Err = UnsupportedClass;

    /// Accepts `Guarded`, `Dyadic-Guarded` and `DyadicOf(Guarded)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix("DyadicOf(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("Dyadic-"));
        match inner {
            Some(inner) => inner
                .parse()
                .map(ClassName::DyadicOf)
                .map_err(|_| UnsupportedClass(s.to_string())),
            None => t.parse().map(ClassName::Base),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub member: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Verdict {
    fn yes() -> Self {
        Verdict {
            member: true,
            witness: None,
        }
    }

    fn no(witness: impl Into<String>) -> Self {
        Verdict {
            member: false,
            witness: Some(witness.into()),
        }
    }
}

fn first_violation(
    ontology: &Ontology,
    mut check: impl FnMut(usize, &Tgd) -> Option<String>,
) -> Verdict {
    for (i, r) in ontology.rules().iter().enumerate() {
        if let Some(w) = check(i, r) {
            return Verdict::no(format!("rule {} ({r}): {w}", r.id()));
        }
    }
    Verdict::yes()
}

fn names<'a>(vs: impl IntoIterator<Item = &'a Variable>) -> String {
    vs.into_iter()
        .map(|v| v.name().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn repeated_var(atom: &Atom) -> Option<&Variable> {
    let mut seen = HashSet::new();
    atom.vars().find(|v| !seen.insert(*v))
}

fn id_violation(r: &Tgd) -> Option<String> {
    if r.body().len() != 1 || r.head().len() != 1 {
        return Some("needs exactly one body atom and one head atom".into());
    }
    for a in r.body().iter().chain(r.head()) {
        if let Some(v) = repeated_var(a) {
            return Some(format!("variable {v} repeated in {a}"));
        }
        if let Some(c) = a.args().iter().find(|t| matches!(t, Term::Const(_))) {
            return Some(format!("constant {c} in {a}"));
        }
    }
    None
}

/// Decides `ontology ∈ class`.
pub fn recognize(ontology: &Ontology, class: ClassName) -> Verdict {
    match class {
        ClassName::Base(c) => recognize_base(ontology, c, &Analysis::new(ontology)),
        ClassName::DyadicOf(c) => {
            let analysis = Analysis::new(ontology);
            let direct = recognize_base(ontology, c, &analysis);
            if direct.member {
                return direct;
            }
            let main = main_ontology(&analysis);
            let via_main = recognize_base(&main, c, &Analysis::new(&main));
            if via_main.member {
                return via_main;
            }
            Verdict::no(format!(
                "not in {c}: {}; main rules not in {c}: {}",
                direct.witness.unwrap_or_default(),
                via_main.witness.unwrap_or_default()
            ))
        }
    }
}

pub fn recognize_base(ontology: &Ontology, class: BaseClass, an: &Analysis<'_>) -> Verdict {
    match class {
        BaseClass::Datalog => first_violation(ontology, |_, r| {
            if !r.is_full() {
                Some(format!("existential variables {}", names(r.exvars())))
            } else {
                (r.head().len() > 1).then(|| format!("{} head atoms", r.head().len()))
            }
        }),
        BaseClass::InclusionDependencies => first_violation(ontology, |_, r| id_violation(r)),
        BaseClass::AfInds => {
            let bodies = ontology.body_predicates();
            first_violation(ontology, |_, r| {
                if let Some(w) = id_violation(r) {
                    return Some(w);
                }
                if !r.is_datalog() {
                    return Some(format!("existential variables {}", names(r.exvars())));
                }
                let p = r.head()[0].predicate();
                bodies
                    .contains(p)
                    .then(|| format!("head predicate {} occurs in a body", p.name()))
            })
        }
        BaseClass::Linear => first_violation(ontology, |_, r| {
            (r.body().len() > 1).then(|| format!("{} body atoms", r.body().len()))
        }),
        BaseClass::Joinless => first_violation(ontology, |_, r| {
            let mut count: HashMap<&Variable, usize> = HashMap::new();
            for v in r.body().iter().flat_map(Atom::vars) {
                *count.entry(v).or_default() += 1;
            }
            r.uvars()
                .iter()
                .find(|v| count[v] > 1)
                .map(|v| format!("variable {v} occurs {} times in the body", count[v]))
        }),
        BaseClass::Guarded => first_violation(ontology, |_, r| {
            let guarded = r.body().iter().any(|a| {
                let vs: HashSet<&Variable> = a.vars().collect();
                r.uvars().iter().all(|v| vs.contains(v))
            });
            (!guarded).then(|| format!("no body atom contains all of {}", names(r.uvars())))
        }),
        BaseClass::WeaklyGuarded => first_violation(ontology, |i, r| {
            let harmful: Vec<&Variable> = an
                .classes(i)
                .iter()
                .filter(|(_, c)| c.is_harmful())
                .map(|(v, _)| v)
                .collect();
            let guarded = r.body().iter().any(|a| {
                let vs: HashSet<&Variable> = a.vars().collect();
                harmful.iter().all(|v| vs.contains(v))
            });
            (!guarded).then(|| {
                format!(
                    "no body atom contains all affected variables {}",
                    names(harmful)
                )
            })
        }),
        BaseClass::Sticky => {
            let marked = marked_variables(ontology);
            first_violation(ontology, |i, r| {
                let mut count: HashMap<&Variable, usize> = HashMap::new();
                for v in r.body().iter().flat_map(Atom::vars) {
                    *count.entry(v).or_default() += 1;
                }
                r.uvars()
                    .iter()
                    .find(|v| count[v] > 1 && marked.contains(&(i, (*v).clone())))
                    .map(|v| format!("marked variable {v} occurs more than once in the body"))
            })
        }
        BaseClass::WeaklyAcyclic => match dependency_graphs(ontology).existential_cycle() {
            None => Verdict::yes(),
            Some(cycle) => Verdict::no(format!(
                "label graph cycle through an ∃-arc: {}",
                cycle
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" -> ")
            )),
        },
        BaseClass::JointlyAcyclic => match dependency_graphs(ontology).exvar_cycle() {
            None => Verdict::yes(),
            Some(cycle) => Verdict::no(format!(
                "existential graph cycle: {}",
                names(&cycle).replace(',', " -> ")
            )),
        },
        BaseClass::Shy => first_violation(ontology, |i, r| {
            let classes = an.classes(i);
            let atoms_of = |v: &Variable| -> Vec<usize> {
                r.body()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.vars().any(|u| u == v))
                    .map(|(k, _)| k)
                    .collect()
            };
            for (v, c) in classes {
                if c.is_harmful() && atoms_of(v).len() > 1 {
                    return Some(format!(
                        "{c} variable {v} occurs in more than one body atom"
                    ));
                }
            }
            let dangerous: Vec<(&Variable, &VariableClass)> =
                classes.iter().filter(|(_, c)| c.is_dangerous()).collect();
            for (a, (z, cz)) in dangerous.iter().enumerate() {
                for (w, cw) in &dangerous[a + 1..] {
                    let (az, aw) = (atoms_of(z), atoms_of(w));
                    let different = !az.iter().any(|k| aw.contains(k));
                    if different && !cz.set().is_disjoint(cw.set()) {
                        return Some(format!(
                            "dangerous variables {z} and {w} in different atoms share invaders"
                        ));
                    }
                }
            }
            None
        }),
        BaseClass::Ward => first_violation(ontology, |i, r| {
            let classes = an.classes(i);
            let dangerous: Vec<&Variable> = classes
                .iter()
                .filter(|(_, c)| c.is_dangerous())
                .map(|(v, _)| v)
                .collect();
            if dangerous.is_empty() {
                return None;
            }
            let body = r.body();
            let has_ward = body.iter().enumerate().any(|(k, a)| {
                let vs: HashSet<&Variable> = a.vars().collect();
                if !dangerous.iter().all(|v| vs.contains(v)) {
                    return false;
                }
                let rest: HashSet<&Variable> = body
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .flat_map(|(_, b)| b.vars())
                    .collect();
                vs.iter()
                    .filter(|v| rest.contains(*v))
                    .all(|v| classes[*v].is_harmless())
            });
            (!has_ward).then(|| format!("no ward for dangerous variables {}", names(dangerous)))
        }),
    }
}

/// Verdicts for every base class and every dyadic extension.
pub type ClassReport = IndexMap<ClassName, Verdict>;

pub fn classify_all(ontology: &Ontology) -> ClassReport {
    let analysis = Analysis::new(ontology);
    let base: IndexMap<BaseClass, Verdict> = BaseClass::ALL
        .into_iter()
        .map(|c| (c, recognize_base(ontology, c, &analysis)))
        .collect();
    let main = main_ontology(&analysis);
    let main_analysis = Analysis::new(&main);
    let mut report: ClassReport = base
        .iter()
        .map(|(c, v)| (ClassName::Base(*c), v.clone()))
        .collect();
    for c in BaseClass::ALL {
        let v = if base[&c].member {
            base[&c].clone()
        } else {
            let via_main = recognize_base(&main, c, &main_analysis);
            if via_main.member {
                via_main
            } else {
                Verdict::no(format!(
                    "not in {c}: {}; main rules not in {c}: {}",
                    base[&c].witness.clone().unwrap_or_default(),
                    via_main.witness.unwrap_or_default()
                ))
            }
        };
        report.insert(ClassName::DyadicOf(c), v);
    }
    report
}

/// Datalog, AfInds, WeaklyAcyclic or JointlyAcyclic membership, any of
/// which guarantees a terminating chase.
pub fn has_termination_certificate(ontology: &Ontology) -> bool {
    let an = Analysis::new(ontology);
    [
        BaseClass::Datalog,
        BaseClass::AfInds,
        BaseClass::WeaklyAcyclic,
        BaseClass::JointlyAcyclic,
    ]
    .into_iter()
    .any(|c| recognize_base(ontology, c, &an).member)
}
