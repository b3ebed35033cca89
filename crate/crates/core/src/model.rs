//! Terms, atoms, rules, ontologies, databases, instances and conjunctive queries.
//!
//! Every value here is immutable once built. Constructors validate the
//! structural invariants (arity, null-freeness of rules and queries, ground
//! facts) so the analyses downstream can rely on them.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("rule {0}: empty body")]
    EmptyBody(String),
    #[error("rule {0}: empty head")]
    EmptyHead(String),
    #[error("labelled null {0} not allowed in rules or queries")]
    NullInInput(String),
    #[error("predicate {predicate} used with arity {seen}, expected {expected}")]
    ArityMismatch {
        predicate: String,
        seen: usize,
        expected: usize,
    },
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(String),
    #[error("not a fact (contains a non-constant term): {0}")]
    NotAFact(String),
    #[error("query: {0}")]
    InvalidQuery(String),
}

/// An uninterpreted constant. Integers are constants too; `1` and `01` differ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(Arc<str>);

impl Constant {
    pub fn new(name: impl AsRef<str>) -> Self {
        Constant(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Whether the constant can be written without quotes.
    pub fn is_bare(&self) -> bool {
        let s = self.name();
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_lowercase() => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            Some(c) if c.is_ascii_digit() => chars.all(|c| c.is_ascii_digit()),
            _ => false,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bare() {
            return f.write_str(self.name());
        }
        f.write_str("\"")?;
        for c in self.name().chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\t' => f.write_str("\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")
    }
}

/// A variable. The scope tag distinguishes equally named variables of
/// different rules; two variables are equal only if name and scope agree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: Arc<str>,
    scope: u32,
}

impl Variable {
    pub fn new(name: impl AsRef<str>, scope: u32) -> Self {
        Variable {
            name: Arc::from(name.as_ref()),
            scope,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scope(&self) -> u32 {
        self.scope
    }

    pub fn with_scope(&self, scope: u32) -> Self {
        Variable {
            name: self.name.clone(),
            scope,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Identity of a labelled null: the rule that invented it, the existential
/// variable it replaces, and the images of the rule's frontier variables
/// under the trigger. Equal triggers (up to the frontier) give equal nulls.
#[derive(Debug, Clone)]
pub struct NullId {
    rule: Arc<str>,
    var: Arc<str>,
    binding: Vec<(Arc<str>, Term)>,
    hash: u64,
}

impl NullId {
    pub fn new(
        rule: impl AsRef<str>,
        var: impl AsRef<str>,
        binding: Vec<(Arc<str>, Term)>,
    ) -> Self {
        let rule: Arc<str> = Arc::from(rule.as_ref());
        let var: Arc<str> = Arc::from(var.as_ref());
        let mut h = DefaultHasher::new();
        rule.hash(&mut h);
        var.hash(&mut h);
        binding.hash(&mut h);
        NullId {
            rule,
            var,
            binding,
            hash: h.finish(),
        }
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn binding(&self) -> &[(Arc<str>, Term)] {
        &self.binding
    }
}

impl PartialEq for NullId {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
            && self.rule == other.rule
            && self.var == other.var
            && self.binding == other.binding
    }
}

impl Eq for NullId {}

impl Hash for NullId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for NullId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NullId {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.rule, &self.var, &self.binding).cmp(&(&other.rule, &other.var, &other.binding))
    }
}

impl fmt::Display for NullId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}_{}_[", self.rule, self.var)?;
        for (i, (_, t)) in self.binding.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Constant),
    Var(Variable),
    Null(Arc<NullId>),
}

impl Term {
    pub fn constant(name: impl AsRef<str>) -> Self {
        Term::Const(Constant::new(name))
    }

    pub fn var(name: impl AsRef<str>, scope: u32) -> Self {
        Term::Var(Variable::new(name, scope))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Null(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    name: Arc<str>,
    arity: usize,
}

impl Predicate {
    pub fn new(name: impl AsRef<str>, arity: usize) -> Self {
        Predicate {
            name: Arc::from(name.as_ref()),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Positions `P[1] .. P[arity]`.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (1..=self.arity).map(move |i| Position::new(self.clone(), i))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// An argument slot `P[i]`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    predicate: Predicate,
    index: usize,
}

impl Position {
    pub fn new(predicate: Predicate, index: usize) -> Self {
        assert!(
            index >= 1 && index <= predicate.arity(),
            "position index {index} out of range for {predicate}"
        );
        Position { predicate, index }
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.predicate.name(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    predicate: Predicate,
    args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl AsRef<str>, args: Vec<Term>) -> Self {
        Atom {
            predicate: Predicate::new(name, args.len()),
            args,
        }
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    /// Variables in argument order, with repetitions.
    pub fn vars(&self) -> impl Iterator<Item = &Variable> {
        self.args.iter().filter_map(Term::as_var)
    }

    /// `(position, term)` pairs.
    pub fn positioned(&self) -> impl Iterator<Item = (Position, &Term)> {
        self.args
            .iter()
            .enumerate()
            .map(move |(i, t)| (Position::new(self.predicate.clone(), i + 1), t))
    }

    /// Only constants.
    pub fn is_fact(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn has_nulls(&self) -> bool {
        self.args.iter().any(Term::is_null)
    }

    pub fn has_vars(&self) -> bool {
        self.args.iter().any(|t| matches!(t, Term::Var(_)))
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(&mut f).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate.name())?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

fn dedup_atoms(atoms: Vec<Atom>) -> Vec<Atom> {
    atoms
        .into_iter()
        .collect::<IndexSet<_>>()
        .into_iter()
        .collect()
}

fn first_occurrence_vars<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<Variable> {
    let mut seen = IndexSet::new();
    for a in atoms {
        for v in a.vars() {
            seen.insert(v.clone());
        }
    }
    seen.into_iter().collect()
}

fn check_null_free(atoms: &[Atom]) -> Result<(), ModelError> {
    for a in atoms {
        if let Some(t) = a.args().iter().find(|t| t.is_null()) {
            return Err(ModelError::NullInInput(t.to_string()));
        }
    }
    Ok(())
}

/// Checks that each predicate name is used with a single arity.
pub(crate) fn check_arities<'a>(
    atoms: impl IntoIterator<Item = &'a Atom>,
    known: &mut HashMap<Arc<str>, usize>,
) -> Result<(), ModelError> {
    for a in atoms {
        let p = a.predicate();
        match known.get(p.name()) {
            Some(&expected) if expected != p.arity() => {
                return Err(ModelError::ArityMismatch {
                    predicate: p.name().to_string(),
                    seen: p.arity(),
                    expected,
                })
            }
            Some(_) => {}
            None => {
                known.insert(p.name.clone(), p.arity());
            }
        }
    }
    Ok(())
}

/// A tuple-generating dependency `body -> ∃ exvars head`.
///
/// Head variables absent from the body are the existential variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tgd {
    id: Arc<str>,
    body: Vec<Atom>,
    head: Vec<Atom>,
    uvars: Vec<Variable>,
    exvars: Vec<Variable>,
    frontier: Vec<Variable>,
}

impl Tgd {
    pub fn new(id: impl AsRef<str>, body: Vec<Atom>, head: Vec<Atom>) -> Result<Self, ModelError> {
        let id: Arc<str> = Arc::from(id.as_ref());
        let body = dedup_atoms(body);
        let head = dedup_atoms(head);
        if body.is_empty() {
            return Err(ModelError::EmptyBody(id.to_string()));
        }
        if head.is_empty() {
            return Err(ModelError::EmptyHead(id.to_string()));
        }
        check_null_free(&body)?;
        check_null_free(&head)?;
        check_arities(body.iter().chain(&head), &mut HashMap::new())?;
        let uvars = first_occurrence_vars(&body);
        let head_vars = first_occurrence_vars(&head);
        let uset: HashSet<&Variable> = uvars.iter().collect();
        let hset: HashSet<&Variable> = head_vars.iter().collect();
        let exvars = head_vars
            .iter()
            .filter(|v| !uset.contains(v))
            .cloned()
            .collect();
        let frontier = uvars.iter().filter(|v| hset.contains(v)).cloned().collect();
        Ok(Tgd {
            id,
            body,
            head,
            uvars,
            exvars,
            frontier,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    /// Body variables, by first occurrence.
    pub fn uvars(&self) -> &[Variable] {
        &self.uvars
    }

    pub fn exvars(&self) -> &[Variable] {
        &self.exvars
    }

    /// Body variables that also occur in the head.
    pub fn frontier(&self) -> &[Variable] {
        &self.frontier
    }

    /// No existential variables.
    pub fn is_full(&self) -> bool {
        self.exvars.is_empty()
    }

    /// Full and single-head.
    pub fn is_datalog(&self) -> bool {
        self.is_full() && self.head.len() == 1
    }

    pub fn with_id(&self, id: impl AsRef<str>) -> Tgd {
        Tgd {
            id: Arc::from(id.as_ref()),
            ..self.clone()
        }
    }

    pub fn all_vars(&self) -> impl Iterator<Item = &Variable> {
        self.uvars.iter().chain(&self.exvars)
    }

    /// Moves every variable of the rule to `scope`.
    pub fn retag(&self, scope: u32) -> Tgd {
        let f = |t: &Term| match t {
            Term::Var(v) => Term::Var(v.with_scope(scope)),
            t => t.clone(),
        };
        let retag_vars = |vs: &[Variable]| vs.iter().map(|v| v.with_scope(scope)).collect();
        Tgd {
            id: self.id.clone(),
            body: self.body.iter().map(|a| a.map_terms(f)).collect(),
            head: self.head.iter().map(|a| a.map_terms(f)).collect(),
            uvars: retag_vars(&self.uvars),
            exvars: retag_vars(&self.exvars),
            frontier: retag_vars(&self.frontier),
        }
    }

    /// Same shape up to a bijective renaming of variables (ids ignored).
    pub fn is_isomorphic(&self, other: &Tgd) -> bool {
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        atoms_isomorphic(&self.body, &other.body, &mut fwd, &mut bwd)
            && atoms_isomorphic(&self.head, &other.head, &mut fwd, &mut bwd)
    }
}

pub(crate) fn atoms_isomorphic<'a>(
    a: &'a [Atom],
    b: &'a [Atom],
    fwd: &mut HashMap<&'a Variable, &'a Variable>,
    bwd: &mut HashMap<&'a Variable, &'a Variable>,
) -> bool {
    if a.len() != b.len() {
        return false;
    }
    for (x, y) in a.iter().zip(b) {
        if x.predicate() != y.predicate() {
            return false;
        }
        for (s, t) in x.args().iter().zip(y.args()) {
            match (s, t) {
                (Term::Var(u), Term::Var(v)) => {
                    if *fwd.entry(u).or_insert(v) != v || *bwd.entry(v).or_insert(u) != u {
                        return false;
                    }
                }
                (s, t) if s == t => {}
                _ => return false,
            }
        }
    }
    true
}

/// Assigns printable names: a variable's own name, suffixed with its scope
/// only when another variable in the same rule shares the name.
pub(crate) fn display_names<'a>(
    vars: impl IntoIterator<Item = &'a Variable>,
) -> HashMap<Variable, String> {
    let vars: IndexSet<&Variable> = vars.into_iter().collect();
    let mut by_name: HashMap<&str, usize> = HashMap::new();
    for v in &vars {
        *by_name.entry(v.name()).or_default() += 1;
    }
    let mut taken: HashSet<String> = vars
        .iter()
        .filter(|v| by_name[v.name()] == 1)
        .map(|v| v.name().to_string())
        .collect();
    let mut out = HashMap::new();
    for v in vars {
        let name = if by_name[v.name()] == 1 {
            v.name().to_string()
        } else {
            let mut candidate = format!("{}_{}", v.name(), v.scope());
            while taken.contains(&candidate) {
                candidate.push('_');
            }
            taken.insert(candidate.clone());
            candidate
        };
        out.insert(v.clone(), name);
    }
    out
}

pub(crate) fn write_atoms(
    f: &mut impl fmt::Write,
    atoms: &[Atom],
    names: &HashMap<Variable, String>,
) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}(", a.predicate().name())?;
        for (j, t) in a.args().iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            match t {
                Term::Var(v) => f.write_str(&names[v])?,
                t => write!(f, "{t}")?,
            }
        }
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = display_names(self.all_vars());
        write_atoms(f, &self.body, &names)?;
        f.write_str(" -> ")?;
        write_atoms(f, &self.head, &names)?;
        f.write_str(".")
    }
}

/// An ordered set of rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    rules: Vec<Tgd>,
}

impl Ontology {
    pub fn new(rules: Vec<Tgd>) -> Result<Self, ModelError> {
        let mut ids = HashSet::new();
        let mut arities = HashMap::new();
        for r in &rules {
            if !ids.insert(r.id()) {
                return Err(ModelError::DuplicateRuleId(r.id().to_string()));
            }
            check_arities(r.body().iter().chain(r.head()), &mut arities)?;
        }
        Ok(Ontology { rules })
    }

    pub fn empty() -> Self {
        Ontology::default()
    }

    pub fn rules(&self) -> &[Tgd] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, id: &str) -> Option<&Tgd> {
        self.rules.iter().find(|r| r.id() == id)
    }

    /// Predicates occurring in some rule, by first occurrence.
    pub fn schema(&self) -> IndexSet<Predicate> {
        self.rules
            .iter()
            .flat_map(|r| r.body().iter().chain(r.head()))
            .map(|a| a.predicate().clone())
            .collect()
    }

    pub fn head_predicates(&self) -> IndexSet<Predicate> {
        self.rules
            .iter()
            .flat_map(|r| r.head())
            .map(|a| a.predicate().clone())
            .collect()
    }

    pub fn body_predicates(&self) -> IndexSet<Predicate> {
        self.rules
            .iter()
            .flat_map(|r| r.body())
            .map(|a| a.predicate().clone())
            .collect()
    }

    pub fn exvars(&self) -> IndexSet<Variable> {
        self.rules
            .iter()
            .flat_map(|r| r.exvars())
            .cloned()
            .collect()
    }

    /// One position per `(predicate, index)` of the schema.
    pub fn positions(&self) -> IndexSet<Position> {
        self.schema()
            .iter()
            .flat_map(|p| p.positions().collect::<Vec<_>>())
            .collect()
    }

    pub fn constants(&self) -> IndexSet<Constant> {
        self.rules
            .iter()
            .flat_map(|r| r.body().iter().chain(r.head()))
            .flat_map(|a| a.args())
            .filter_map(|t| t.as_const().cloned())
            .collect()
    }

    /// No variable is shared by two rules.
    pub fn is_renamed_apart(&self) -> bool {
        let mut owner: HashMap<&Variable, usize> = HashMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            for v in r.all_vars() {
                if *owner.entry(v).or_insert(i) != i {
                    return false;
                }
            }
        }
        true
    }

    /// Returns an ontology whose rules share no variables. Ontologies that
    /// already satisfy this are returned unchanged; otherwise rule `i` gets
    /// scope `i`.
    pub fn rename_apart(&self) -> Ontology {
        if self.is_renamed_apart() {
            return self.clone();
        }
        Ontology {
            rules: self
                .rules
                .iter()
                .enumerate()
                .map(|(i, r)| r.retag(i as u32))
                .collect(),
        }
    }

    pub fn union(&self, other: &Ontology) -> Result<Ontology, ModelError> {
        Ontology::new(self.rules.iter().chain(&other.rules).cloned().collect())
    }

    /// Rules whose ids are in `ids`, in this ontology's order.
    pub fn restrict(&self, ids: &HashSet<&str>) -> Ontology {
        Ontology {
            rules: self
                .rules
                .iter()
                .filter(|r| ids.contains(r.id()))
                .cloned()
                .collect(),
        }
    }

    /// Rule-by-rule isomorphism.
    pub fn is_isomorphic(&self, other: &Ontology) -> bool {
        self.len() == other.len()
            && self
                .rules
                .iter()
                .zip(&other.rules)
                .all(|(a, b)| a.is_isomorphic(b))
    }
}

impl fmt::Display for Ontology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// `⟨output⟩ ← ∃ existential . body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConjunctiveQuery {
    output: Vec<Variable>,
    existential: Vec<Variable>,
    body: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(output: Vec<Variable>, body: Vec<Atom>) -> Result<Self, ModelError> {
        let body = dedup_atoms(body);
        if body.is_empty() {
            return Err(ModelError::InvalidQuery("empty body".into()));
        }
        check_null_free(&body)?;
        check_arities(&body, &mut HashMap::new())?;
        let body_vars = first_occurrence_vars(&body);
        let mut seen = HashSet::new();
        for v in &output {
            if !seen.insert(v) {
                return Err(ModelError::InvalidQuery(format!(
                    "output variable {v} listed twice"
                )));
            }
            if !body_vars.contains(v) {
                return Err(ModelError::InvalidQuery(format!(
                    "output variable {v} does not occur in the body"
                )));
            }
        }
        let existential = body_vars
            .into_iter()
            .filter(|v| !seen.contains(v))
            .collect();
        Ok(ConjunctiveQuery {
            output,
            existential,
            body,
        })
    }

    pub fn output(&self) -> &[Variable] {
        &self.output
    }

    pub fn existential(&self) -> &[Variable] {
        &self.existential
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn is_boolean(&self) -> bool {
        self.output.is_empty()
    }

    /// The Boolean query obtained by replacing output variable `i` with
    /// `tuple[i]`. Panics if the lengths differ.
    pub fn substitute(&self, tuple: &[Constant]) -> ConjunctiveQuery {
        assert_eq!(tuple.len(), self.output.len(), "tuple arity");
        let map: HashMap<&Variable, &Constant> = self.output.iter().zip(tuple).collect();
        let body = self
            .body
            .iter()
            .map(|a| {
                a.map_terms(|t| match t {
                    Term::Var(v) => map
                        .get(v)
                        .map(|c| Term::Const((*c).clone()))
                        .unwrap_or_else(|| t.clone()),
                    t => t.clone(),
                })
            })
            .collect();
        ConjunctiveQuery {
            output: Vec::new(),
            existential: self.existential.clone(),
            body,
        }
    }

    pub fn is_isomorphic(&self, other: &ConjunctiveQuery) -> bool {
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        self.output.len() == other.output.len()
            && atoms_isomorphic(&self.body, &other.body, &mut fwd, &mut bwd)
            && self
                .output
                .iter()
                .zip(&other.output)
                .all(|(a, b)| fwd.get(a) == Some(&b))
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = display_names(self.output.iter().chain(&self.existential));
        f.write_str("?- ")?;
        for (i, v) in self.output.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&names[v])?;
        }
        if !self.output.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str(": ")?;
        write_atoms(f, &self.body, &names)?;
        f.write_str(".")
    }
}

/// A finite set of atoms over constants and nulls, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    atoms: IndexSet<Atom>,
}

impl Instance {
    pub fn new() -> Self {
        Instance::default()
    }

    pub(crate) fn from_index_set(atoms: IndexSet<Atom>) -> Self {
        Instance { atoms }
    }

    /// Panics on atoms with variables.
    pub fn insert(&mut self, atom: Atom) -> bool {
        assert!(
            !atom.has_vars(),
            "instance atoms must not contain variables: {atom}"
        );
        self.atoms.insert(atom)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn get_index(&self, i: usize) -> Option<&Atom> {
        self.atoms.get_index(i)
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.get_index_of(atom)
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.atoms.iter().all(|a| other.contains(a))
    }
}

impl FromIterator<Atom> for Instance {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        let mut i = Instance::new();
        for a in iter {
            i.insert(a);
        }
        i
    }
}

/// A finite set of facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    facts: IndexSet<Atom>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Atom>) -> Result<Self, ModelError> {
        let mut db = Database::new();
        for f in facts {
            db.insert(f)?;
        }
        Ok(db)
    }

    pub fn insert(&mut self, fact: Atom) -> Result<bool, ModelError> {
        if !fact.is_fact() {
            return Err(ModelError::NotAFact(fact.to_string()));
        }
        Ok(self.facts.insert(fact))
    }

    pub fn contains(&self, fact: &Atom) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    /// `dom(D)`.
    pub fn constants(&self) -> IndexSet<Constant> {
        self.facts
            .iter()
            .flat_map(|a| a.args())
            .filter_map(|t| t.as_const().cloned())
            .collect()
    }

    pub fn union(&self, other: &Database) -> Database {
        Database {
            facts: self.facts.iter().chain(&other.facts).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Database) -> bool {
        self.facts.iter().all(|a| other.contains(a))
    }

    pub fn to_instance(&self) -> Instance {
        self.facts.iter().cloned().collect()
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.facts {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}
