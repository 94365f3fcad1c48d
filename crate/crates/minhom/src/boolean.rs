//! The boolean specialization: Post-lattice clone table over {0,1},
//! the direct tractability rule, a primitive-positive formula evaluator,
//! and the two hardness gadget constructions (maximum independent set,
//! Max-CUT).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::classifier::Verdict;
use crate::model::{
    ConstraintLanguage, CostSet, Domain, Instance, ModelError, Relation, Value,
};
use crate::poly::{preserves, OperationTable};

/// Search-space ceiling for formula evaluation by enumeration.
pub const PP_ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum BooleanError {
    #[error("domain has {size} elements, expected the boolean domain {{0,1}}")]
    NonBooleanDomain { size: usize },
    #[error("formula must have at least one free variable")]
    NoFreeVariables,
    #[error("atom `{relation}` refers to variable {index} but the formula has {total}")]
    VariableOutOfRange {
        relation: String,
        index: usize,
        total: usize,
    },
    #[error("existential variable {index} occurs in no atom")]
    UnusedExistential { index: usize },
    #[error("atom `{relation}` has {args} arguments but the relation has arity {arity}")]
    ArityMismatch {
        relation: String,
        args: usize,
        arity: usize,
    },
    #[error("formula enumeration would visit {space} tuples (limit {limit})")]
    EnumerationTooLarge { space: u128, limit: u128 },
    #[error("graph edge ({u},{v}) is a loop")]
    LoopEdge { u: usize, v: usize },
    #[error("graph edge ({u},{v}) exceeds the vertex count {n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("graph edge ({u},{v}) listed twice")]
    DuplicateEdge { u: usize, v: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An undirected simple graph on vertices 0..n-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, BooleanError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(BooleanError::LoopEdge { u, v });
            }
            if u >= n || v >= n {
                return Err(BooleanError::EdgeOutOfRange { u, v, n });
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(BooleanError::DuplicateEdge { u, v });
            }
        }
        Ok(Graph { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges normalized to u < v, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

/// One conjunct: a relation applied to formula variables (free variables
/// first, then existential ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<usize>,
}

/// An existentially quantified conjunction of atoms over a language plus
/// built-in equality; variables 0..free-1 are free, the rest existential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PPFormula {
    free: usize,
    existential: usize,
    atoms: Vec<Atom>,
}

impl PPFormula {
    pub fn new(
        free: usize,
        existential: usize,
        atoms: Vec<(impl Into<String>, Vec<usize>)>,
    ) -> Result<Self, BooleanError> {
        if free == 0 {
            return Err(BooleanError::NoFreeVariables);
        }
        let total = free + existential;
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(relation, args)| Atom {
                relation: relation.into(),
                args,
            })
            .collect();
        for atom in &atoms {
            if let Some(&index) = atom.args.iter().find(|&&i| i >= total) {
                return Err(BooleanError::VariableOutOfRange {
                    relation: atom.relation.clone(),
                    index,
                    total,
                });
            }
        }
        for e in free..total {
            if !atoms.iter().any(|a| a.args.contains(&e)) {
                return Err(BooleanError::UnusedExistential { index: e });
            }
        }
        Ok(PPFormula {
            free,
            existential,
            atoms,
        })
    }

    pub fn free_variables(&self) -> usize {
        self.free
    }

    pub fn existential_variables(&self) -> usize {
        self.existential
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// The relation defined by the formula over `lang` (plus equality `=`),
/// computed by enumerating free tuples and existential witnesses.
pub fn eval_pp_formula(
    formula: &PPFormula,
    lang: &ConstraintLanguage,
) -> Result<Relation, BooleanError> {
    let n = lang.domain().size();
    let total = formula.free + formula.existential;
    let space = (n as u128).checked_pow(total as u32).unwrap_or(u128::MAX);
    if space > PP_ENUMERATION_LIMIT {
        return Err(BooleanError::EnumerationTooLarge {
            space,
            limit: PP_ENUMERATION_LIMIT,
        });
    }
    let resolved: Vec<Relation> = formula
        .atoms
        .iter()
        .map(|a| lang.resolve(&a.relation).map_err(BooleanError::from))
        .collect::<Result<_, _>>()?;
    for (atom, rel) in formula.atoms.iter().zip(&resolved) {
        if atom.args.len() != rel.arity() {
            return Err(BooleanError::ArityMismatch {
                relation: atom.relation.clone(),
                args: atom.args.len(),
                arity: rel.arity(),
            });
        }
    }

    let holds = |assignment: &[Value]| {
        formula.atoms.iter().zip(&resolved).all(|(atom, rel)| {
            let image: Vec<Value> = atom.args.iter().map(|&i| assignment[i]).collect();
            rel.contains(&image)
        })
    };

    let mut tuples = Vec::new();
    let mut assignment = vec![0usize; total];
    'free: loop {
        let witnessed = if formula.existential == 0 {
            holds(&assignment)
        } else {
            let mut found = false;
            'wit: loop {
                if holds(&assignment) {
                    found = true;
                    break;
                }
                for i in (formula.free..total).rev() {
                    assignment[i] += 1;
                    if assignment[i] < n {
                        continue 'wit;
                    }
                    assignment[i] = 0;
                }
                break;
            }
            for slot in assignment[formula.free..].iter_mut() {
                *slot = 0;
            }
            found
        };
        if witnessed {
            tuples.push(assignment[..formula.free].to_vec());
        }
        for i in (0..formula.free).rev() {
            assignment[i] += 1;
            if assignment[i] < n {
                continue 'free;
            }
            assignment[i] = 0;
        }
        break;
    }
    Ok(Relation::new("pp", formula.free, lang.domain(), tuples)?)
}

/// Every `free`-ary relation definable by an existential conjunction over
/// the conservative extension of the language — its listed relations,
/// built-in equality, and every nonempty unary relation — using at most
/// `existential` quantified variables.
///
/// A conjunction's truth set is the intersection of its atom cylinders,
/// so the full family (all formulas, up to logical equivalence) is the
/// closure of the cylinder sets under intersection, projected onto the
/// free coordinates. Results are bare tuple sets; the empty conjunction
/// (full relation) and unsatisfiable conjunctions (empty relation) are
/// both included.
pub fn conjunctive_definable_relations(
    lang: &ConstraintLanguage,
    free: usize,
    existential: usize,
) -> Result<BTreeSet<BTreeSet<Vec<Value>>>, BooleanError> {
    if free == 0 {
        return Err(BooleanError::NoFreeVariables);
    }
    let n = lang.domain().size();
    let total = free + existential;
    let space = (n as u128).checked_pow(total as u32).unwrap_or(u128::MAX);
    if space > 128 {
        return Err(BooleanError::EnumerationTooLarge { space, limit: 128 });
    }
    let space = space as usize;
    let assignments: Vec<Vec<Value>> = (0..space)
        .map(|mut code| {
            let mut t = vec![0usize; total];
            for slot in t.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            t
        })
        .collect();
    let full: u128 = if space == 128 {
        u128::MAX
    } else {
        (1u128 << space) - 1
    };

    let mut vocabulary: Vec<Relation> = lang.relations().to_vec();
    vocabulary.push(Relation::equality(lang.domain()));
    for subset in 1..(1u32 << n) {
        let members = (0..n).filter(|&v| subset >> v & 1 == 1);
        vocabulary
            .push(Relation::unary("u", lang.domain(), members).expect("values are in range"));
    }

    let mut generators: BTreeSet<u128> = BTreeSet::new();
    for rel in &vocabulary {
        let mut args = vec![0usize; rel.arity()];
        'args: loop {
            let mut mask = 0u128;
            for (i, assignment) in assignments.iter().enumerate() {
                let image: Vec<Value> = args.iter().map(|&v| assignment[v]).collect();
                if rel.contains(&image) {
                    mask |= 1 << i;
                }
            }
            generators.insert(mask);
            for slot in (0..args.len()).rev() {
                args[slot] += 1;
                if args[slot] < total {
                    continue 'args;
                }
                args[slot] = 0;
            }
            break;
        }
    }

    let mut closed: BTreeSet<u128> = generators.clone();
    closed.insert(full);
    let mut worklist: Vec<u128> = closed.iter().copied().collect();
    while let Some(mask) = worklist.pop() {
        for &g in &generators {
            let meet = mask & g;
            if closed.insert(meet) {
                worklist.push(meet);
            }
        }
    }

    Ok(closed
        .into_iter()
        .map(|mask| {
            assignments
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, assignment)| assignment[..free].to_vec())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    MinHom,
    Min,
}

fn bool_domain() -> Domain {
    Domain::new(2).expect("two is positive")
}

/// Binary conjunction on {0,1}.
pub fn and2() -> OperationTable {
    OperationTable::new(2, bool_domain(), vec![0, 0, 0, 1]).expect("conservative")
}

/// Binary disjunction on {0,1}.
pub fn or2() -> OperationTable {
    OperationTable::new(2, bool_domain(), vec![0, 1, 1, 1]).expect("conservative")
}

/// p(x,y,z) = (x∧¬y)∨(¬y∧z)∨(x∧z), the self-dual discriminator-like
/// ternary operation; arithmetical on {0,1}.
pub fn pixley2() -> OperationTable {
    OperationTable::new(3, bool_domain(), vec![0, 1, 0, 0, 1, 1, 0, 1]).expect("conservative")
}

/// The boolean dichotomy by direct preservation checks: MinHom needs
/// {∧,∨} or p as polymorphisms of every relation; min needs ∧ or p.
pub fn classify_boolean(lang: &ConstraintLanguage, mode: Mode) -> Result<Verdict, BooleanError> {
    let size = lang.domain().size();
    if size != 2 {
        return Err(BooleanError::NonBooleanDomain { size });
    }
    let all = |op: &OperationTable| lang.relations().iter().all(|r| preserves(op, r));
    let tractable = match mode {
        Mode::MinHom => (all(&and2()) && all(&or2())) || all(&pixley2()),
        Mode::Min => all(&and2()) || all(&pixley2()),
    };
    Ok(if tractable {
        Verdict::Tractable
    } else {
        Verdict::NpHard
    })
}

/// One row of the conservative boolean clone table: the relational
/// clone's generating relations, sample operations generating the
/// functional clone (empty where none is needed by the tests), and the
/// known verdicts for both modes.
#[derive(Debug, Clone)]
pub struct CloneEntry {
    pub name: String,
    pub generators: Vec<Relation>,
    pub ops: Vec<OperationTable>,
    pub minhom_tractable: bool,
    pub min_tractable: bool,
}

impl CloneEntry {
    pub fn language(&self) -> ConstraintLanguage {
        ConstraintLanguage::new(bool_domain(), self.generators.clone())
            .expect("table rows are well-formed")
    }
}

fn rel(name: &str, arity: usize, tuples: Vec<Vec<Value>>) -> Relation {
    Relation::new(name, arity, bool_domain(), tuples).expect("table rows are well-formed")
}

fn const0() -> Relation {
    rel("const0", 1, vec![vec![0]])
}

fn const1() -> Relation {
    rel("const1", 1, vec![vec![1]])
}

fn leq2() -> Relation {
    rel("leq", 2, vec![vec![0, 0], vec![0, 1], vec![1, 1]])
}

fn neq2() -> Relation {
    rel("neq", 2, vec![vec![0, 1], vec![1, 0]])
}

/// All m-tuples over {0,1} whose entries satisfy `keep`.
fn boolean_tuples(m: usize, keep: impl Fn(&[Value]) -> bool) -> Vec<Vec<Value>> {
    (0..1usize << m)
        .map(|bits| (0..m).map(|i| (bits >> (m - 1 - i)) & 1).collect::<Vec<_>>())
        .filter(|t| keep(t))
        .collect()
}

/// x₁·…·x_m = 0 (not all ones).
fn nand_m(m: usize) -> Relation {
    rel(
        &format!("nand{m}"),
        m,
        boolean_tuples(m, |t| t.contains(&0)),
    )
}

/// x₁ ∨ … ∨ x_m = 1 (not all zeros).
fn or_m(m: usize) -> Relation {
    rel(
        &format!("or{m}"),
        m,
        boolean_tuples(m, |t| t.contains(&1)),
    )
}

/// x₁ ⊕ x₂ ⊕ x₃ = 0.
fn xor0_3() -> Relation {
    rel(
        "xor0",
        3,
        boolean_tuples(3, |t| t.iter().sum::<usize>() % 2 == 0),
    )
}

/// x₁ = x₂ ∨ x₁ = x₃.
fn rho_u() -> Relation {
    rel(
        "rho_u",
        3,
        boolean_tuples(3, |t| t[0] == t[1] || t[0] == t[2]),
    )
}

/// x₁ = x₂ ∧ x₃.
fn conj3() -> Relation {
    rel("conj", 3, boolean_tuples(3, |t| t[0] == t[1] & t[2]))
}

/// x₁ = x₂ ∨ x₃.
fn disj3() -> Relation {
    rel("disj", 3, boolean_tuples(3, |t| t[0] == t[1] | t[2]))
}

fn majority2() -> OperationTable {
    OperationTable::new(3, bool_domain(), vec![0, 0, 0, 1, 0, 1, 1, 1]).expect("conservative")
}

fn xor3_op() -> OperationTable {
    OperationTable::new(3, bool_domain(), vec![0, 1, 1, 0, 1, 0, 0, 1]).expect("conservative")
}

/// The twelve-row conservative clone table; rows with arity parameter m
/// are materialized at the given m (m ≥ 2).
pub fn clone_table(m: usize) -> Vec<CloneEntry> {
    assert!(m >= 2, "parameterized rows need m >= 2");
    let entry = |name: &str,
                 generators: Vec<Relation>,
                 ops: Vec<OperationTable>,
                 minhom_tractable: bool,
                 min_tractable: bool| CloneEntry {
        name: name.to_string(),
        generators,
        ops,
        minhom_tractable,
        min_tractable,
    };
    vec![
        entry(
            "T01",
            vec![const0(), const1()],
            vec![and2(), or2(), pixley2()],
            true,
            true,
        ),
        entry(
            "M01",
            vec![const0(), const1(), leq2()],
            vec![and2(), or2()],
            true,
            true,
        ),
        entry("S01", vec![const0(), neq2()], vec![pixley2()], true, true),
        entry("SM", vec![neq2(), leq2()], vec![majority2()], false, false),
        entry("L01", vec![const1(), xor0_3()], vec![xor3_op()], false, false),
        entry(
            "U01",
            vec![const0(), const1(), rho_u()],
            vec![],
            false,
            false,
        ),
        entry(
            "K01",
            vec![const0(), const1(), conj3()],
            vec![and2()],
            false,
            true,
        ),
        entry(
            "D01",
            vec![const0(), const1(), disj3()],
            vec![or2()],
            false,
            false,
        ),
        entry(
            &format!("I1^{m}"),
            vec![const1(), nand_m(m)],
            vec![and2()],
            false,
            true,
        ),
        entry(
            &format!("MI1^{m}"),
            vec![const1(), leq2(), nand_m(m)],
            vec![and2()],
            false,
            true,
        ),
        entry(
            &format!("O0^{m}"),
            vec![const0(), or_m(m)],
            vec![or2()],
            false,
            false,
        ),
        entry(
            &format!("MO0^{m}"),
            vec![const0(), leq2(), or_m(m)],
            vec![or2()],
            false,
            false,
        ),
    ]
}

/// Cost set R = {x} over {0,1}: the identity cost function.
pub fn min_cost_set() -> CostSet {
    CostSet::new(bool_domain(), vec![vec![0, 1]]).expect("well-formed")
}

/// Encodes maximum independent set: a 0/1 variable per vertex, an OR
/// constraint per edge, R = {x}, unit weights. The minimum measure is
/// |V| − α(G).
pub fn reduce_mis(graph: &Graph) -> Instance {
    let lang = ConstraintLanguage::new(bool_domain(), vec![or_m(2)]).expect("well-formed");
    let variables: Vec<String> = (0..graph.n()).map(|i| format!("y_{i}")).collect();
    let constraints = graph
        .edges()
        .map(|(u, v)| {
            (
                vec![format!("y_{u}"), format!("y_{v}")],
                "or2".to_string(),
            )
        })
        .collect();
    let weights = vec![vec![1]; graph.n()];
    Instance::new(lang, min_cost_set(), variables, constraints, weights)
        .expect("gadget instances are well-formed by construction")
}

/// x₁ ⊕ x₂ ⊕ x₃ = 1.
fn xor1_3() -> Relation {
    rel(
        "xor1",
        3,
        boolean_tuples(3, |t| t.iter().sum::<usize>() % 2 == 1),
    )
}

/// Encodes Max-CUT: a variable y_i per vertex and x_i_j per ordered edge
/// orientation, a constraint x_i_j ⊕ y_i ⊕ y_j = 1 per orientation,
/// R = {x}, weight 1 on each x and 0 on each y. The minimum measure is
/// 2|E| − 2·maxcut(G).
pub fn reduce_maxcut(graph: &Graph) -> Instance {
    let lang = ConstraintLanguage::new(bool_domain(), vec![xor1_3()]).expect("well-formed");
    let mut variables: Vec<String> = (0..graph.n()).map(|i| format!("y_{i}")).collect();
    let mut weights = vec![vec![0]; graph.n()];
    let mut constraints = Vec::new();
    for (u, v) in graph.edges() {
        for (i, j) in [(u, v), (v, u)] {
            variables.push(format!("x_{i}_{j}"));
            weights.push(vec![1]);
            constraints.push((
                vec![format!("x_{i}_{j}"), format!("y_{i}"), format!("y_{j}")],
                "xor1".to_string(),
            ));
        }
    }
    Instance::new(lang, min_cost_set(), variables, constraints, weights)
        .expect("gadget instances are well-formed by construction")
}

/// α(G) by subset enumeration; independent oracle for the MIS gadget.
pub fn max_independent_set(graph: &Graph) -> usize {
    assert!(graph.n() <= 20, "subset enumeration oracle is desk-scale");
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    (0u32..1 << graph.n())
        .filter(|s| edges.iter().all(|&(u, v)| s >> u & 1 == 0 || s >> v & 1 == 0))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// maxcut(G) by subset enumeration; independent oracle for the Max-CUT
/// gadget.
pub fn max_cut(graph: &Graph) -> usize {
    assert!(graph.n() <= 20, "subset enumeration oracle is desk-scale");
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    (0u32..1 << graph.n())
        .map(|s| {
            edges
                .iter()
                .filter(|&&(u, v)| s >> u & 1 != s >> v & 1)
                .count()
        })
        .max()
        .unwrap_or(0)
}
