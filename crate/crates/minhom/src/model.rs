//! Core problem model: domains, relations, languages, cost sets, instances,
//! assignments, measure evaluation, and the preference graph.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A domain element, canonically `0..n`.
pub type Value = usize;

/// An ordered pair of distinct domain elements.
pub type Orientation = (Value, Value);

/// Exact integer objective value of an assignment.
pub type Measure = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("domain must have at least one element")]
    EmptyDomain,
    #[error("relation `{relation}`: arity must be positive")]
    ZeroArity { relation: String },
    #[error("relation `{relation}`: tuple {tuple:?} has length {got}, expected arity {expected}")]
    TupleLength {
        relation: String,
        tuple: Vec<Value>,
        expected: usize,
        got: usize,
    },
    #[error("relation `{relation}`: tuple {tuple:?} has entry {value} outside domain of size {domain}")]
    ValueOutOfRange {
        relation: String,
        tuple: Vec<Value>,
        value: Value,
        domain: usize,
    },
    #[error("relation `{relation}`: duplicate tuple {tuple:?}")]
    DuplicateTuple { relation: String, tuple: Vec<Value> },
    #[error("duplicate relation name `{name}`")]
    DuplicateRelation { name: String },
    #[error("cost set must contain at least one function")]
    EmptyCostSet,
    #[error("cost function #{index} has length {got}, expected domain size {expected}")]
    CostLength {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("duplicate variable name `{name}`")]
    DuplicateVariable { name: String },
    #[error("unknown relation `{name}`")]
    UnknownRelation { name: String },
    #[error("unknown variable `{name}`")]
    UnknownVariable { name: String },
    #[error("constraint #{index} scope has length {got}, expected arity {expected} of `{relation}`")]
    ScopeArity {
        index: usize,
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("weight matrix has {got} rows, expected one per variable ({expected})")]
    WeightRows { expected: usize, got: usize },
    #[error("weight row #{index} has length {got}, expected one per cost function ({expected})")]
    WeightCols {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("relation `{relation}` is over domain of size {relation_domain}, instance domain has size {instance_domain}")]
    DomainMismatch {
        relation: String,
        relation_domain: usize,
        instance_domain: usize,
    },
}

/// The finite domain `A = {0, …, n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Domain {
    size: usize,
}

impl Domain {
    pub fn new(size: usize) -> Result<Self, ModelError> {
        if size == 0 {
            return Err(ModelError::EmptyDomain);
        }
        Ok(Domain { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn elements(&self) -> impl Iterator<Item = Value> + Clone {
        0..self.size
    }

    /// All unordered pairs `{a, b}` with `a < b`.
    pub fn unordered_pairs(&self) -> impl Iterator<Item = (Value, Value)> + '_ {
        (0..self.size).flat_map(move |a| (a + 1..self.size).map(move |b| (a, b)))
    }

    /// All ordered pairs `(a, b)` with `a != b`.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = (Value, Value)> + '_ {
        (0..self.size)
            .flat_map(move |a| (0..self.size).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
    }
}

/// A named finitary relation `ρ ⊆ A^m`, stored as an explicit tuple set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    arity: usize,
    domain: Domain,
    tuples: BTreeSet<Vec<Value>>,
}

impl Relation {
    /// Builds a relation, rejecting malformed or duplicate tuples.
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        domain: Domain,
        tuples: impl IntoIterator<Item = Vec<Value>>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if arity == 0 {
            return Err(ModelError::ZeroArity { relation: name });
        }
        let mut set = BTreeSet::new();
        for tuple in tuples {
            if tuple.len() != arity {
                return Err(ModelError::TupleLength {
                    relation: name,
                    got: tuple.len(),
                    expected: arity,
                    tuple,
                });
            }
            if let Some(&value) = tuple.iter().find(|&&v| v >= domain.size()) {
                return Err(ModelError::ValueOutOfRange {
                    relation: name,
                    value,
                    domain: domain.size(),
                    tuple,
                });
            }
            if !set.insert(tuple.clone()) {
                return Err(ModelError::DuplicateTuple {
                    relation: name,
                    tuple,
                });
            }
        }
        Ok(Relation {
            name,
            arity,
            domain,
            tuples: set,
        })
    }

    /// The unary relation holding exactly `values`.
    pub fn unary(
        name: impl Into<String>,
        domain: Domain,
        values: impl IntoIterator<Item = Value>,
    ) -> Result<Self, ModelError> {
        Relation::new(name, 1, domain, values.into_iter().map(|v| vec![v]))
    }

    /// The built-in equality relation `=_A`.
    pub fn equality(domain: Domain) -> Self {
        Relation::new("=", 2, domain, domain.elements().map(|a| vec![a, a]))
            .expect("equality relation is always well-formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[Value]> {
        self.tuples.iter().map(|t| t.as_slice())
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Value]) -> bool {
        self.tuples.contains(tuple)
    }

    /// A copy of this relation keeping only tuples allowed by `keep`.
    pub fn filtered(&self, name: impl Into<String>, keep: impl Fn(&[Value]) -> bool) -> Relation {
        Relation {
            name: name.into(),
            arity: self.arity,
            domain: self.domain,
            tuples: self
                .tuples
                .iter()
                .filter(|t| keep(t))
                .cloned()
                .collect(),
        }
    }
}

/// A finite constraint language `Γ` over a domain.
///
/// Semantically the language is always `Γ ∪ {all unary relations}`:
/// polymorphism queries are answered for the conservative clone, so unary
/// relations never need to be listed explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintLanguage {
    domain: Domain,
    relations: Vec<Relation>,
}

impl ConstraintLanguage {
    pub fn new(
        domain: Domain,
        relations: impl IntoIterator<Item = Relation>,
    ) -> Result<Self, ModelError> {
        let relations: Vec<Relation> = relations.into_iter().collect();
        let mut seen = BTreeSet::new();
        for rel in &relations {
            if rel.domain().size() != domain.size() {
                return Err(ModelError::DomainMismatch {
                    relation: rel.name().to_string(),
                    relation_domain: rel.domain().size(),
                    instance_domain: domain.size(),
                });
            }
            if !seen.insert(rel.name().to_string()) {
                return Err(ModelError::DuplicateRelation {
                    name: rel.name().to_string(),
                });
            }
        }
        Ok(ConstraintLanguage { domain, relations })
    }

    /// The language with no listed relations (only the implicit unaries).
    pub fn unary_only(domain: Domain) -> Self {
        ConstraintLanguage {
            domain,
            relations: Vec::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    /// Resolves a relation by name; `=` resolves to built-in equality.
    pub fn resolve(&self, name: &str) -> Result<Relation, ModelError> {
        if name == "=" {
            return Ok(Relation::equality(self.domain));
        }
        self.relations
            .iter()
            .find(|r| r.name() == name)
            .cloned()
            .ok_or_else(|| ModelError::UnknownRelation {
                name: name.to_string(),
            })
    }
}

/// The cost-function set `R`; each function is a vector of values `r(a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostSet {
    functions: Vec<Vec<Measure>>,
}

impl CostSet {
    pub fn new(
        domain: Domain,
        functions: impl IntoIterator<Item = Vec<Measure>>,
    ) -> Result<Self, ModelError> {
        let functions: Vec<Vec<Measure>> = functions.into_iter().collect();
        if functions.is_empty() {
            return Err(ModelError::EmptyCostSet);
        }
        for (index, f) in functions.iter().enumerate() {
            if f.len() != domain.size() {
                return Err(ModelError::CostLength {
                    index,
                    expected: domain.size(),
                    got: f.len(),
                });
            }
        }
        Ok(CostSet { functions })
    }

    /// `R* = {e_i | i ∈ A}`: one characteristic function per element.
    pub fn minhom(domain: Domain) -> Self {
        let n = domain.size();
        let functions = (0..n)
            .map(|i| (0..n).map(|a| Measure::from(a == i)).collect())
            .collect();
        CostSet { functions }
    }

    pub fn functions(&self) -> &[Vec<Measure>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// The cost set `{n - x}` realizing maximum-solution objectives, where each
/// domain element carries a numeric label and `n = max label + 1`.
pub fn maxsol_cost_set(labels: &[Measure]) -> CostSet {
    assert!(!labels.is_empty(), "maxsol cost set needs a labelled domain");
    let n = labels.iter().max().unwrap() + 1;
    CostSet {
        functions: vec![labels.iter().map(|&s| n - s).collect()],
    }
}

/// The directed preference graph `G(R)`: arc `(a, b)` when some cost
/// function strictly prefers `b` to `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceGraph {
    domain: Domain,
    arcs: BTreeSet<(Value, Value)>,
}

impl PreferenceGraph {
    pub fn build(costs: &CostSet, domain: Domain) -> Self {
        let mut arcs = BTreeSet::new();
        for (a, b) in domain.ordered_pairs() {
            if costs.functions().iter().any(|r| r[a] > r[b]) {
                arcs.insert((a, b));
            }
        }
        PreferenceGraph { domain, arcs }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn has_arc(&self, a: Value, b: Value) -> bool {
        self.arcs.contains(&(a, b))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (Value, Value)> + '_ {
        self.arcs.iter().copied()
    }

    /// True iff the undirected shadow `UG(R)` is complete: every unordered
    /// pair is covered by at least one arc.
    pub fn is_ug_complete(&self) -> bool {
        self.domain
            .unordered_pairs()
            .all(|(a, b)| self.has_arc(a, b) || self.has_arc(b, a))
    }

    /// Unordered pairs covered by no arc (the incompleteness certificate).
    pub fn uncovered_pairs(&self) -> Vec<(Value, Value)> {
        self.domain
            .unordered_pairs()
            .filter(|&(a, b)| !self.has_arc(a, b) && !self.has_arc(b, a))
            .collect()
    }
}

/// One constraint: a scope of variable indices plus its relation.
///
/// The relation is owned so that pipeline stages may replace it with a
/// restricted copy without touching the language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: Vec<usize>,
    pub relation: Relation,
}

/// A `MinHom_R` instance: variables, constraints, and the weight matrix
/// `w[v][r]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    language: ConstraintLanguage,
    costs: CostSet,
    variables: Vec<String>,
    constraints: Vec<Constraint>,
    weights: Vec<Vec<Measure>>,
}

impl Instance {
    /// Builds an instance resolving constraint relations by name from the
    /// language (`=` is implicitly available).
    pub fn new(
        language: ConstraintLanguage,
        costs: CostSet,
        variables: Vec<String>,
        constraints: Vec<(Vec<String>, String)>,
        weights: Vec<Vec<Measure>>,
    ) -> Result<Self, ModelError> {
        let mut resolved = Vec::with_capacity(constraints.len());
        let var_index = |name: &str| {
            variables
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| ModelError::UnknownVariable {
                    name: name.to_string(),
                })
        };
        for (scope_names, rel_name) in constraints {
            let relation = language.resolve(&rel_name)?;
            let scope = scope_names
                .iter()
                .map(|n| var_index(n))
                .collect::<Result<Vec<_>, _>>()?;
            resolved.push(Constraint { scope, relation });
        }
        Instance::from_parts(language, costs, variables, resolved, weights)
    }

    /// Builds an instance from already-resolved constraints.
    pub fn from_parts(
        language: ConstraintLanguage,
        costs: CostSet,
        variables: Vec<String>,
        constraints: Vec<Constraint>,
        weights: Vec<Vec<Measure>>,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for name in &variables {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateVariable { name: name.clone() });
            }
        }
        for (index, c) in constraints.iter().enumerate() {
            if c.relation.domain().size() != language.domain().size() {
                return Err(ModelError::DomainMismatch {
                    relation: c.relation.name().to_string(),
                    relation_domain: c.relation.domain().size(),
                    instance_domain: language.domain().size(),
                });
            }
            if c.scope.len() != c.relation.arity() {
                return Err(ModelError::ScopeArity {
                    index,
                    relation: c.relation.name().to_string(),
                    expected: c.relation.arity(),
                    got: c.scope.len(),
                });
            }
            if let Some(&v) = c.scope.iter().find(|&&v| v >= variables.len()) {
                return Err(ModelError::UnknownVariable {
                    name: format!("#{v}"),
                });
            }
        }
        if weights.len() != variables.len() {
            return Err(ModelError::WeightRows {
                expected: variables.len(),
                got: weights.len(),
            });
        }
        for (index, row) in weights.iter().enumerate() {
            if row.len() != costs.len() {
                return Err(ModelError::WeightCols {
                    index,
                    expected: costs.len(),
                    got: row.len(),
                });
            }
        }
        Ok(Instance {
            language,
            costs,
            variables,
            constraints,
            weights,
        })
    }

    pub fn language(&self) -> &ConstraintLanguage {
        &self.language
    }

    pub fn costs(&self) -> &CostSet {
        &self.costs
    }

    pub fn domain(&self) -> Domain {
        self.language.domain()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn weights(&self) -> &[Vec<Measure>] {
        &self.weights
    }

    /// Per-variable cost of assigning `a` to variable `v`:
    /// `Σ_r w[v][r]·r(a)`, exact.
    pub fn value_cost(&self, v: usize, a: Value) -> Measure {
        let mut total: u128 = 0;
        for (r, f) in self.costs.functions().iter().enumerate() {
            total += u128::from(self.weights[v][r]) * u128::from(f[a]);
        }
        Measure::try_from(total).expect("measure overflow: value cost exceeds u64")
    }

    /// True iff every constraint's scope tuple maps into its relation.
    pub fn check_assignment(&self, f: &Assignment) -> bool {
        debug_assert_eq!(f.len(), self.num_variables());
        self.constraints.iter().all(|c| {
            let image: Vec<Value> = c.scope.iter().map(|&v| f.value(v)).collect();
            c.relation.contains(&image)
        })
    }

    /// The measure `Σ_v Σ_r w[v][r]·r(f(v))`, exact; fails loudly on
    /// overflow instead of wrapping.
    pub fn measure(&self, f: &Assignment) -> Measure {
        let mut total: u128 = 0;
        for v in 0..self.num_variables() {
            total += u128::from(self.value_cost(v, f.value(v)));
        }
        Measure::try_from(total).expect("measure overflow: total exceeds u64")
    }
}

/// A total assignment `f: V → A`, indexed by variable position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<Value>,
}

impl Assignment {
    pub fn new(values: Vec<Value>) -> Self {
        Assignment { values }
    }

    pub fn value(&self, v: usize) -> Value {
        self.values[v]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(n: usize) -> Domain {
        Domain::new(n).unwrap()
    }

    #[test]
    fn preference_graph_minhom_costs() {
        // R = {e_0, e_1} over {0,1}: arcs in both directions.
        let g = PreferenceGraph::build(&CostSet::minhom(dom(2)), dom(2));
        assert!(g.has_arc(0, 1) && g.has_arc(1, 0));
        assert!(g.is_ug_complete());
    }

    #[test]
    fn preference_graph_maxsol_costs() {
        // R = {[2,1]}: only the arc (0,1).
        let costs = maxsol_cost_set(&[0, 1]);
        assert_eq!(costs.functions(), &[vec![2, 1]]);
        let g = PreferenceGraph::build(&costs, dom(2));
        assert!(g.has_arc(0, 1) && !g.has_arc(1, 0));
    }

    #[test]
    fn preference_graph_constant_costs_has_no_arcs() {
        let costs = CostSet::new(dom(3), vec![vec![0, 0, 0]]).unwrap();
        let g = PreferenceGraph::build(&costs, dom(3));
        assert_eq!(g.arcs().count(), 0);
        assert!(!g.is_ug_complete());
        assert_eq!(g.uncovered_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn ug_completeness_partial_cover() {
        let costs = CostSet::new(dom(3), vec![vec![1, 0, 0]]).unwrap();
        let g = PreferenceGraph::build(&costs, dom(3));
        assert!(g.has_arc(0, 1) && g.has_arc(0, 2));
        assert!(!g.is_ug_complete()); // pair {1,2} uncovered
        assert_eq!(g.uncovered_pairs(), vec![(1, 2)]);
    }

    #[test]
    fn maxsol_three_elements() {
        assert_eq!(maxsol_cost_set(&[0, 1, 2]).functions(), &[vec![3, 2, 1]]);
        assert_eq!(maxsol_cost_set(&[5]).functions(), &[vec![1]]);
    }

    fn leq(domain: Domain) -> Relation {
        Relation::new("leq", 2, domain, vec![vec![0, 0], vec![0, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn check_assignment_and_measure() {
        let d = dom(2);
        let lang = ConstraintLanguage::new(d, vec![leq(d)]).unwrap();
        let inst = Instance::new(
            lang,
            CostSet::minhom(d),
            vec!["u".into(), "v".into()],
            vec![(vec!["u".into(), "v".into()], "leq".into())],
            vec![vec![5, 1], vec![0, 3]],
        )
        .unwrap();
        assert!(!inst.check_assignment(&Assignment::new(vec![1, 0])));
        assert!(inst.check_assignment(&Assignment::new(vec![0, 1])));
        // w_u=(5,1), w_v=(0,3), f=(1,1) -> 1 + 3 = 4
        assert_eq!(inst.measure(&Assignment::new(vec![1, 1])), 4);
        assert_eq!(inst.measure(&Assignment::new(vec![0, 0])), 5);
    }

    #[test]
    fn measure_single_variable() {
        let d = dom(2);
        let lang = ConstraintLanguage::unary_only(d);
        let costs = CostSet::new(d, vec![vec![0, 1]]).unwrap();
        let inst = Instance::new(lang, costs, vec!["v".into()], vec![], vec![vec![3]]).unwrap();
        assert_eq!(inst.measure(&Assignment::new(vec![1])), 3);
        assert_eq!(inst.measure(&Assignment::new(vec![0])), 0);
    }

    #[test]
    fn no_constraints_any_assignment_ok() {
        let d = dom(2);
        let inst = Instance::new(
            ConstraintLanguage::unary_only(d),
            CostSet::minhom(d),
            vec!["u".into()],
            vec![],
            vec![vec![0, 0]],
        )
        .unwrap();
        assert!(inst.check_assignment(&Assignment::new(vec![0])));
    }

    #[test]
    fn equality_is_implicitly_available() {
        let d = dom(2);
        let lang = ConstraintLanguage::unary_only(d);
        let inst = Instance::new(
            lang,
            CostSet::minhom(d),
            vec!["u".into(), "v".into()],
            vec![(vec!["u".into(), "v".into()], "=".into())],
            vec![vec![0, 0], vec![0, 0]],
        )
        .unwrap();
        assert!(inst.check_assignment(&Assignment::new(vec![1, 1])));
        assert!(!inst.check_assignment(&Assignment::new(vec![0, 1])));
    }

    #[test]
    fn duplicate_tuples_rejected() {
        let err = Relation::new("r", 1, dom(2), vec![vec![0], vec![0]]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateTuple { .. }));
    }

    #[test]
    fn duplicate_relation_names_rejected() {
        let d = dom(2);
        let r1 = Relation::unary("r", d, [0]).unwrap();
        let r2 = Relation::unary("r", d, [1]).unwrap();
        let err = ConstraintLanguage::new(d, vec![r1, r2]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateRelation { .. }));
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(Domain::new(0).is_err());
        assert!(Relation::new("r", 2, dom(2), vec![vec![0]]).is_err());
        assert!(Relation::new("r", 1, dom(2), vec![vec![2]]).is_err());
        assert!(CostSet::new(dom(2), Vec::<Vec<Measure>>::new()).is_err());
        assert!(CostSet::new(dom(2), vec![vec![0]]).is_err());
    }

    #[test]
    fn weight_shape_validated() {
        let d = dom(2);
        let lang = ConstraintLanguage::unary_only(d);
        let bad = Instance::new(
            lang,
            CostSet::minhom(d),
            vec!["u".into()],
            vec![],
            vec![vec![0]],
        );
        assert!(matches!(bad, Err(ModelError::WeightCols { .. })));
    }

    #[test]
    fn zero_weight_rows_are_allowed() {
        // Weights may be all-zero for a variable; it is simply cost-free.
        let d = dom(2);
        let inst = Instance::new(
            ConstraintLanguage::unary_only(d),
            CostSet::minhom(d),
            vec!["u".into()],
            vec![],
            vec![vec![0, 0]],
        )
        .unwrap();
        assert_eq!(inst.measure(&Assignment::new(vec![1])), 0);
    }
}
