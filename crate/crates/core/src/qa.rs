//! Query answering over dyadic pairs.
//!
//! The head-ground half `Σhg` is evaluated first: every hg rule
//! `Φ(x,y) -> H(x)` becomes the query `⟨x⟩ ← Φ(x,y)`, whose certain answers
//! under `Σc` (computed by a [`CReasoner`]) are added as `H` facts until
//! nothing new appears. The completed database `D⁺` then answers any query
//! together with `Σc` alone.

use std::collections::HashMap;

use itertools::Itertools;
use thiserror::Error;

use crate::chase::{run_chase, ChaseBudget, ChaseStatus};
use crate::decomposition::{decompose, is_dyadic_pair, DecompositionError, DyadicPair};
use crate::model::{Atom, ConjunctiveQuery, Constant, Database, Ontology, Term, Tgd};
use crate::parser::RESERVED_PREFIX;
use crate::query::{evaluate_cq, AnswerSet, CertainAnswers};
use crate::recognizers::{has_termination_certificate, BaseClass, ClassName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QaError {
    #[error("reasoner {0} could not guarantee exact answers")]
    ReasonerInexact(String),
    #[error("reasoner {reasoner} does not support {class}")]
    UnsupportedClass { reasoner: String, class: String },
    #[error("not a dyadic pair for {class}: {reason}")]
    NotADyadicPair { class: ClassName, reason: String },
    #[error("ontology is not in {0}")]
    NotInDyadicClass(ClassName),
    #[error("query uses internal predicate {0}")]
    ReservedPredicateInQuery(String),
    #[error("tuple has {seen} constants but the query has {expected} output variables")]
    ArityMismatch { seen: usize, expected: usize },
    #[error(transparent)]
    Decomposition(DecompositionError),
}

impl From<DecompositionError> for QaError {
    fn from(e: DecompositionError) -> Self {
        match e {
            DecompositionError::NotInDyadicClass(c) => QaError::NotInDyadicClass(c),
            e => QaError::Decomposition(e),
        }
    }
}

/// Certain-answer oracle for some ontology classes.
pub trait CReasoner {
    fn name(&self) -> &str;

    fn supports(&self, class: ClassName) -> bool;

    /// `cert(q, D, Σc)`. When the returned flag is set the set is exact;
    /// otherwise it must be a subset of the certain answers.
    fn certain_answers(
        &self,
        query: &ConjunctiveQuery,
        database: &Database,
        ontology: &Ontology,
    ) -> Result<CertainAnswers, QaError>;

    /// Several queries over the same `(D, Σc)`. Reasoners that build a model
    /// once should override this.
    fn certain_answers_batch(
        &self,
        queries: &[ConjunctiveQuery],
        database: &Database,
        ontology: &Ontology,
    ) -> Result<Vec<CertainAnswers>, QaError> {
        queries
            .iter()
            .map(|q| self.certain_answers(q, database, ontology))
            .collect()
    }
}

fn chase_answers(
    queries: &[ConjunctiveQuery],
    database: &Database,
    ontology: &Ontology,
    budget: ChaseBudget,
) -> Vec<CertainAnswers> {
    let result = run_chase(database, ontology, budget);
    let exact = result.status() == ChaseStatus::Completed;
    queries
        .iter()
        .map(|q| CertainAnswers {
            answers: evaluate_cq(q, result.instance()),
            exact,
        })
        .collect()
}

/// Runs the chase to completion. Only accepts ontologies carrying a
/// termination certificate (datalog, Af-Inds, weakly or jointly acyclic).
#[derive(Debug, Clone, Copy, Default)]
pub struct TerminatingChaseReasoner;

impl CReasoner for TerminatingChaseReasoner {
    fn name(&self) -> &str {
        "chase"
    }

    fn supports(&self, class: ClassName) -> bool {
        matches!(class, ClassName::Base(c) if c.chase_terminating())
    }

    fn certain_answers(
        &self,
        query: &ConjunctiveQuery,
        database: &Database,
        ontology: &Ontology,
    ) -> Result<CertainAnswers, QaError> {
        let mut v = self.certain_answers_batch(std::slice::from_ref(query), database, ontology)?;
        Ok(v.remove(0))
    }

    fn certain_answers_batch(
        &self,
        queries: &[ConjunctiveQuery],
        database: &Database,
        ontology: &Ontology,
    ) -> Result<Vec<CertainAnswers>, QaError> {
        if !has_termination_certificate(ontology) {
            return Err(QaError::UnsupportedClass {
                reasoner: self.name().into(),
                class: "ontologies without a termination certificate".into(),
            });
        }
        Ok(chase_answers(
            queries,
            database,
            ontology,
            ChaseBudget::unlimited(),
        ))
    }
}

/// Runs the chase within a budget. Exact only when the chase completes.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundedChaseReasoner {
    pub budget: ChaseBudget,
}

impl CReasoner for BoundedChaseReasoner {
    fn name(&self) -> &str {
        "bounded"
    }

    fn supports(&self, _class: ClassName) -> bool {
        true
    }

    fn certain_answers(
        &self,
        query: &ConjunctiveQuery,
        database: &Database,
        ontology: &Ontology,
    ) -> Result<CertainAnswers, QaError> {
        Ok(chase_answers(std::slice::from_ref(query), database, ontology, self.budget).remove(0))
    }

    fn certain_answers_batch(
        &self,
        queries: &[ConjunctiveQuery],
        database: &Database,
        ontology: &Ontology,
    ) -> Result<Vec<CertainAnswers>, QaError> {
        Ok(chase_answers(queries, database, ontology, self.budget))
    }
}

/// How each completion pass obtains the answers of the hg queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompletionStrategy {
    /// One answer-set call per hg rule.
    #[default]
    AnswerSets,
    /// One Boolean call per candidate tuple over `const(D⁺) ∪ const(Σ)`.
    /// Exponential in the head arity; meant for cross-checking.
    TupleEnumeration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletedDatabase {
    /// `D ∪ added`.
    pub d_plus: Database,
    /// Facts over head predicates of `Σhg` derived by the completion.
    pub added: Database,
    /// Passes of the completion loop, the final unproductive one included.
    pub iterations: usize,
}

fn validate_pair(
    pair: &DyadicPair,
    class: ClassName,
    reasoner: &dyn CReasoner,
) -> Result<(), QaError> {
    if !reasoner.supports(class) {
        return Err(QaError::UnsupportedClass {
            reasoner: reasoner.name().into(),
            class: class.to_string(),
        });
    }
    let check = is_dyadic_pair(pair, class);
    if !check.head_ground.is_head_ground() {
        let reason = check
            .head_ground
            .violations
            .iter()
            .map(|(p, w)| format!("{p}: {w}"))
            .join("; ");
        return Err(QaError::NotADyadicPair { class, reason });
    }
    if !check.in_class {
        let reason = format!(
            "Σc is not in {class}{}",
            check
                .class_witness
                .map(|w| format!(": {w}"))
                .unwrap_or_default()
        );
        return Err(QaError::NotADyadicPair { class, reason });
    }
    Ok(())
}

fn hg_query(rule: &Tgd) -> ConjunctiveQuery {
    ConjunctiveQuery::new(rule.frontier().to_vec(), rule.body().to_vec())
        .expect("rule bodies are valid query bodies")
}

fn instantiate_head(rule: &Tgd, tuple: &[Constant], out: &mut Vec<Atom>) {
    let map: HashMap<_, _> = rule.frontier().iter().zip(tuple).collect();
    for h in rule.head() {
        out.push(h.map_terms(|t| match t {
            Term::Var(v) => Term::Const(map[v].clone()),
            t => t.clone(),
        }));
    }
}

fn require_exact(ca: CertainAnswers, reasoner: &dyn CReasoner) -> Result<AnswerSet, QaError> {
    if ca.exact {
        Ok(ca.answers)
    } else {
        Err(QaError::ReasonerInexact(reasoner.name().into()))
    }
}

/// Completes `database` with the facts the hg rules derive, using the
/// default [`CompletionStrategy`].
pub fn complete_database(
    database: &Database,
    pair: &DyadicPair,
    class: ClassName,
    reasoner: &dyn CReasoner,
) -> Result<CompletedDatabase, QaError> {
    complete_database_with(
        database,
        pair,
        class,
        reasoner,
        CompletionStrategy::default(),
    )
}

pub fn complete_database_with(
    database: &Database,
    pair: &DyadicPair,
    class: ClassName,
    reasoner: &dyn CReasoner,
    strategy: CompletionStrategy,
) -> Result<CompletedDatabase, QaError> {
    validate_pair(pair, class, reasoner)?;
    let hg = pair.sigma_hg.rules();
    let queries: Vec<ConjunctiveQuery> = hg.iter().map(hg_query).collect();
    let sigma_constants = pair.union().constants();

    let mut d_plus = database.clone();
    let mut added = Database::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut derived = Vec::new();
        match strategy {
            CompletionStrategy::AnswerSets => {
                let answers = reasoner.certain_answers_batch(&queries, &d_plus, &pair.sigma_c)?;
                for (rule, ca) in hg.iter().zip(answers) {
                    for t in require_exact(ca, reasoner)?.iter() {
                        instantiate_head(rule, t, &mut derived);
                    }
                }
            }
            CompletionStrategy::TupleEnumeration => {
                let mut domain = d_plus.constants();
                domain.extend(sigma_constants.iter().cloned());
                let domain: Vec<Constant> = domain.into_iter().collect();
                for (rule, q) in hg.iter().zip(&queries) {
                    let k = q.output().len();
                    for t in tuples(&domain, k) {
                        let ca =
                            reasoner.certain_answers(&q.substitute(&t), &d_plus, &pair.sigma_c)?;
                        if require_exact(ca, reasoner)?.holds() {
                            instantiate_head(rule, &t, &mut derived);
                        }
                    }
                }
            }
        }
        let mut grew = false;
        for a in derived {
            if !d_plus.contains(&a) {
                d_plus
                    .insert(a.clone())
                    .expect("instantiated heads are facts");
                added.insert(a).expect("instantiated heads are facts");
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Ok(CompletedDatabase {
        d_plus,
        added,
        iterations,
    })
}

/// All `k`-tuples over `domain`; one empty tuple when `k = 0`.
fn tuples(domain: &[Constant], k: usize) -> Vec<Vec<Constant>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (0..k)
        .map(|_| domain.iter().cloned())
        .multi_cartesian_product()
        .collect()
}

fn check_query(query: &ConjunctiveQuery) -> Result<(), QaError> {
    match query
        .body()
        .iter()
        .find(|a| a.predicate().name().starts_with(RESERVED_PREFIX))
    {
        Some(a) => Err(QaError::ReservedPredicateInQuery(
            a.predicate().name().into(),
        )),
        None => Ok(()),
    }
}

/// `cert(q, D⁺, Σc)`, which equals the certain answers of `q` over the
/// database and the pair.
pub fn dp_certain_answers(
    query: &ConjunctiveQuery,
    database: &Database,
    pair: &DyadicPair,
    class: ClassName,
    reasoner: &dyn CReasoner,
) -> Result<AnswerSet, QaError> {
    let completed = complete_database(database, pair, class, reasoner)?;
    let ca = reasoner.certain_answers(query, &completed.d_plus, &pair.sigma_c)?;
    require_exact(ca, reasoner)
}

/// `tuple ∈ cert(q, D⁺, Σc)`.
///
/// A positive answer from an inexact reasoner is still reported, since its
/// answers are sound; a negative one is [`QaError::ReasonerInexact`].
pub fn dp_cert_eval(
    query: &ConjunctiveQuery,
    database: &Database,
    pair: &DyadicPair,
    class: ClassName,
    tuple: &[Constant],
    reasoner: &dyn CReasoner,
) -> Result<bool, QaError> {
    if tuple.len() != query.output().len() {
        return Err(QaError::ArityMismatch {
            seen: tuple.len(),
            expected: query.output().len(),
        });
    }
    let completed = complete_database(database, pair, class, reasoner)?;
    let ca =
        reasoner.certain_answers(&query.substitute(tuple), &completed.d_plus, &pair.sigma_c)?;
    if ca.answers.holds() {
        return Ok(true);
    }
    require_exact(ca, reasoner).map(|_| false)
}

/// Decomposes `ontology` into its canonical pair for `class`.
fn canonical_pair(
    query: &ConjunctiveQuery,
    ontology: &Ontology,
    class: BaseClass,
) -> Result<DyadicPair, QaError> {
    check_query(query)?;
    Ok(decompose(ontology, class)?)
}

/// `tuple ∈ cert(q, D, Σ)` for `Σ ∈ Dyadic-class`, through the canonical
/// decomposition.
pub fn cert_eval_dyadic(
    query: &ConjunctiveQuery,
    database: &Database,
    ontology: &Ontology,
    tuple: &[Constant],
    class: BaseClass,
    reasoner: &dyn CReasoner,
) -> Result<bool, QaError> {
    let pair = canonical_pair(query, ontology, class)?;
    dp_cert_eval(query, database, &pair, class.into(), tuple, reasoner)
}

/// All certain answers of `q` for `Σ ∈ Dyadic-class`.
pub fn certain_answers_dyadic(
    query: &ConjunctiveQuery,
    database: &Database,
    ontology: &Ontology,
    class: BaseClass,
    reasoner: &dyn CReasoner,
) -> Result<AnswerSet, QaError> {
    let pair = canonical_pair(query, ontology, class)?;
    dp_certain_answers(query, database, &pair, class.into(), reasoner)
}
