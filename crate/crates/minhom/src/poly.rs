//! Polymorphism laboratory: conservative operation tables, preservation
//! checks, indicator-problem searches for polymorphisms with prescribed
//! entries, operation combinators, and f_max.
//!
//! Every query treats the language as implicitly containing all unary
//! relations: a conservative operation preserves every unary relation
//! automatically, so only the listed relations of arity ≥ 2 generate
//! constraints.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::engine::{Csp, TableConstraint};
use crate::model::{ConstraintLanguage, Domain, Relation, Value};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("internal inconsistency: {context}")]
    InternalInconsistency { context: String },
    #[error("entry constraint output {output} not among arguments {args:?}")]
    NonConservativeEntry { args: Vec<Value>, output: Value },
    #[error("exhaustive enumeration over {count} tables refused (limit {limit})")]
    EnumerationTooLarge { count: u128, limit: u128 },
}

/// A total conservative operation `A^k → A`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OperationTable {
    arity: usize,
    domain: Domain,
    table: Vec<Value>,
}

impl OperationTable {
    /// Builds a table, verifying conservativity (`f(x̄) ∈ {x̄}`).
    pub fn new(arity: usize, domain: Domain, table: Vec<Value>) -> Result<Self, PolyError> {
        let n = domain.size();
        assert_eq!(table.len(), n.pow(arity as u32), "table size mismatch");
        let op = OperationTable {
            arity,
            domain,
            table,
        };
        for (args, out) in op.entries() {
            if !args.contains(&out) {
                return Err(PolyError::NonConservativeEntry { args, output: out });
            }
        }
        Ok(op)
    }

    /// The i-th projection of the given arity (0-based coordinate).
    pub fn projection(arity: usize, domain: Domain, coord: usize) -> Self {
        let n = domain.size();
        let table = (0..n.pow(arity as u32))
            .map(|idx| decode(idx, arity, n)[coord])
            .collect();
        OperationTable {
            arity,
            domain,
            table,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn apply(&self, args: &[Value]) -> Value {
        debug_assert_eq!(args.len(), self.arity);
        self.table[encode(args, self.domain.size())]
    }

    pub fn apply2(&self, x: Value, y: Value) -> Value {
        self.table[x * self.domain.size() + y]
    }

    pub fn apply3(&self, x: Value, y: Value, z: Value) -> Value {
        let n = self.domain.size();
        self.table[(x * n + y) * n + z]
    }

    /// All (argument tuple, output) entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<Value>, Value)> + '_ {
        let n = self.domain.size();
        self.table
            .iter()
            .enumerate()
            .map(move |(idx, &out)| (decode(idx, self.arity, n), out))
    }

    pub fn raw_table(&self) -> &[Value] {
        &self.table
    }

    /// True iff the binary restriction to `{a,b}` is commutative
    /// (`f(a,b) = f(b,a)`).
    pub fn commutative_on(&self, a: Value, b: Value) -> bool {
        debug_assert_eq!(self.arity, 2);
        self.apply2(a, b) == self.apply2(b, a)
    }

    /// True iff `↓ᵃ_b f`: `f(a,b) = f(b,a) = b`.
    pub fn down_on(&self, a: Value, b: Value) -> bool {
        debug_assert_eq!(self.arity, 2);
        a != b && self.apply2(a, b) == b && self.apply2(b, a) == b
    }

    /// True iff the ternary restriction to `{a,b}` is arithmetical:
    /// `m(x,x,y) = m(y,x,x) = m(y,x,y) = y` for `{x,y} = {a,b}`.
    pub fn arithmetical_on(&self, a: Value, b: Value) -> bool {
        debug_assert_eq!(self.arity, 3);
        [(a, b), (b, a)].into_iter().all(|(x, y)| {
            self.apply3(x, x, y) == y && self.apply3(y, x, x) == y && self.apply3(y, x, y) == y
        })
    }

    /// Com(f): unordered pairs (a < b) on which the restriction commutes.
    pub fn com_set(&self) -> ComSet {
        self.domain
            .unordered_pairs()
            .filter(|&(a, b)| self.commutative_on(a, b))
            .collect()
    }
}

/// Unordered pairs stored as `(a, b)` with `a < b`.
pub type ComSet = BTreeSet<(Value, Value)>;

fn encode(args: &[Value], n: usize) -> usize {
    args.iter().fold(0, |acc, &a| acc * n + a)
}

fn decode(mut idx: usize, arity: usize, n: usize) -> Vec<Value> {
    let mut args = vec![0; arity];
    for slot in args.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    args
}

/// A prescribed table entry: `f(args) = output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryConstraint {
    pub args: Vec<Value>,
    pub output: Value,
}

impl EntryConstraint {
    pub fn new(args: Vec<Value>, output: Value) -> Result<Self, PolyError> {
        if !args.contains(&output) {
            return Err(PolyError::NonConservativeEntry { args, output });
        }
        Ok(EntryConstraint { args, output })
    }
}

/// True iff applying `op` coordinatewise to every k-tuple of tuples of
/// `rel` lands back in `rel`.
pub fn preserves(op: &OperationTable, rel: &Relation) -> bool {
    debug_assert_eq!(op.domain().size(), rel.domain().size());
    let tuples: Vec<&[Value]> = rel.tuples().collect();
    if tuples.is_empty() {
        return true;
    }
    let k = op.arity();
    let mut pick = vec![0usize; k];
    let mut image = vec![0; rel.arity()];
    let mut args = vec![0; k];
    loop {
        for j in 0..rel.arity() {
            for (i, &p) in pick.iter().enumerate() {
                args[i] = tuples[p][j];
            }
            image[j] = op.apply(&args);
        }
        if !rel.contains(&image) {
            return false;
        }
        // Odometer over the k tuple choices.
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < tuples.len() {
                break;
            }
            pick[i] = 0;
        }
    }
}

/// Builds the indicator CSP for conservative polymorphisms of `lang` of the
/// given arity: one variable per table entry with domain = the entry's
/// argument set, one preservation constraint per relation per tuple
/// combination. `equalities` force pairs of entries to share a value.
fn indicator_csp(
    lang: &ConstraintLanguage,
    arity: usize,
    pins: &[EntryConstraint],
    equalities: &[(Vec<Value>, Vec<Value>)],
) -> Csp {
    let n = lang.domain().size();
    let num_vars = n.pow(arity as u32);
    let domains: Vec<u64> = (0..num_vars)
        .map(|idx| {
            decode(idx, arity, n)
                .into_iter()
                .fold(0u64, |m, a| m | 1 << a)
        })
        .collect();

    let mut constraints = Vec::new();
    for rel in lang.relations() {
        let m = rel.arity();
        if m < 2 {
            continue; // unary relations are preserved by conservativity
        }
        let tuples: Vec<Vec<Value>> = rel.tuples().map(|t| t.to_vec()).collect();
        if tuples.is_empty() {
            continue;
        }
        let mut seen_scopes = BTreeSet::new();
        let mut pick = vec![0usize; arity];
        loop {
            let scope: Vec<usize> = (0..m)
                .map(|j| {
                    let args: Vec<Value> = pick.iter().map(|&p| tuples[p][j]).collect();
                    encode(&args, n)
                })
                .collect();
            if seen_scopes.insert(scope.clone()) {
                constraints.push(TableConstraint::new(scope, tuples.iter().cloned()));
            }
            let mut i = arity;
            let mut done = true;
            while i > 0 {
                i -= 1;
                pick[i] += 1;
                if pick[i] < tuples.len() {
                    done = false;
                    break;
                }
                pick[i] = 0;
            }
            if done {
                break;
            }
        }
    }

    let eq_tuples: Vec<Vec<Value>> = (0..n).map(|c| vec![c, c]).collect();
    for (lhs, rhs) in equalities {
        constraints.push(TableConstraint::new(
            vec![encode(lhs, n), encode(rhs, n)],
            eq_tuples.iter().cloned(),
        ));
    }

    let mut csp = Csp::new(n, domains, constraints).expect("domain size checked upstream");
    for pin in pins {
        csp.pin(encode(&pin.args, n), pin.output);
    }
    csp
}

/// Searches for a conservative polymorphism of `lang` with the prescribed
/// entries; returns the lexicographically least table (row-major, values
/// ascending) or None.
pub fn find_polymorphism(
    lang: &ConstraintLanguage,
    arity: usize,
    pins: &[EntryConstraint],
) -> Option<OperationTable> {
    find_polymorphism_with(lang, arity, pins, &[])
}

/// As [`find_polymorphism`], additionally forcing pairs of entries equal
/// (commutativity without a fixed direction).
pub fn find_polymorphism_with(
    lang: &ConstraintLanguage,
    arity: usize,
    pins: &[EntryConstraint],
    equalities: &[(Vec<Value>, Vec<Value>)],
) -> Option<OperationTable> {
    let csp = indicator_csp(lang, arity, pins, equalities);
    let sol = csp.solve()?;
    let op = OperationTable::new(arity, lang.domain(), sol.values().to_vec())
        .expect("indicator domains enforce conservativity");
    debug_assert!(lang.relations().iter().all(|r| preserves(&op, r)));
    Some(op)
}

/// Witness for `↓ᵃ_b f` on each listed orientation simultaneously:
/// `f(a,b) = f(b,a) = b` for every `(a,b)` in `orientations`.
pub fn joint_down_witness(
    lang: &ConstraintLanguage,
    orientations: &[(Value, Value)],
) -> Option<OperationTable> {
    let pins: Vec<EntryConstraint> = orientations
        .iter()
        .flat_map(|&(a, b)| {
            [
                EntryConstraint::new(vec![a, b], b).expect("b is an argument"),
                EntryConstraint::new(vec![b, a], b).expect("b is an argument"),
            ]
        })
        .collect();
    find_polymorphism(lang, 2, &pins)
}

/// True iff some binary polymorphism satisfies `↓ᵃ_b` (commutative on
/// `{a,b}` with value `b`).
pub fn pair_query_down(lang: &ConstraintLanguage, a: Value, b: Value) -> bool {
    debug_assert_ne!(a, b);
    joint_down_witness(lang, &[(a, b)]).is_some()
}

/// Witness arithmetical on every listed pair: the six mixed entries on
/// `{a,b}³` are pinned per `m(x,x,y) = m(y,x,x) = m(y,x,y) = y`.
pub fn arithmetical_witness(
    lang: &ConstraintLanguage,
    pairs: &[(Value, Value)],
) -> Option<OperationTable> {
    let mut pins = Vec::new();
    for &(a, b) in pairs {
        for (x, y) in [(a, b), (b, a)] {
            pins.push(EntryConstraint::new(vec![x, x, y], y).expect("conservative"));
            pins.push(EntryConstraint::new(vec![y, x, x], y).expect("conservative"));
            pins.push(EntryConstraint::new(vec![y, x, y], y).expect("conservative"));
        }
    }
    find_polymorphism(lang, 3, &pins)
}

/// True iff a ternary polymorphism arithmetical on `{a,b}` exists.
pub fn pair_query_arithmetical(lang: &ConstraintLanguage, a: Value, b: Value) -> bool {
    debug_assert_ne!(a, b);
    arithmetical_witness(lang, &[(a, b)]).is_some()
}

/// True iff one binary polymorphism has both `↓ᵃ_b` and `↓ᶜ_d`. The
/// `T_F^R` edge between `(a,b)` and `(c,d)` exists iff this is false.
pub fn joint_down_query(
    lang: &ConstraintLanguage,
    first: (Value, Value),
    second: (Value, Value),
) -> bool {
    joint_down_witness(lang, &[first, second]).is_some()
}

/// `h(x,y) = f(g(x,y), g(y,x))`; conservative, and
/// `Com(h) = Com(f) ∪ Com(g)`.
pub fn combine_binary(f: &OperationTable, g: &OperationTable) -> OperationTable {
    debug_assert_eq!(f.arity(), 2);
    debug_assert_eq!(g.arity(), 2);
    let n = f.domain().size();
    let table = (0..n * n)
        .map(|idx| {
            let (x, y) = (idx / n, idx % n);
            f.apply2(g.apply2(x, y), g.apply2(y, x))
        })
        .collect();
    OperationTable::new(2, f.domain(), table).expect("composition of conservative ops")
}

/// A binary polymorphism whose Com-set equals the union of Com-sets over
/// all binary polymorphisms: per-pair commutativity queries first, then one
/// joint search requiring commutativity (entry equality, direction free) on
/// every capable pair. The combination identity
/// `Com(a(b(x,y),b(y,x))) = Com(a) ∪ Com(b)` guarantees the search succeeds.
pub fn compute_f_max(lang: &ConstraintLanguage) -> Result<OperationTable, PolyError> {
    let mut equalities = Vec::new();
    for (a, b) in lang.domain().unordered_pairs() {
        if pair_query_down(lang, a, b) || pair_query_down(lang, b, a) {
            equalities.push((vec![a, b], vec![b, a]));
        }
    }
    find_polymorphism_with(lang, 2, &[], &equalities).ok_or_else(|| {
        PolyError::InternalInconsistency {
            context: "joint commutativity search failed although every pair succeeded \
                      individually, contradicting the combination identity"
                .to_string(),
        }
    })
}

/// Exhaustive enumeration of all conservative tables of the given arity,
/// in lexicographic (row-major) order. Independent oracle for the
/// indicator search; refuses more than `10^6` tables.
pub fn all_conservative_tables(
    domain: Domain,
    arity: usize,
) -> Result<Vec<OperationTable>, PolyError> {
    const LIMIT: u128 = 1_000_000;
    let n = domain.size();
    let num_entries = n.pow(arity as u32);
    let choices: Vec<Vec<Value>> = (0..num_entries)
        .map(|idx| {
            let set: BTreeSet<Value> = decode(idx, arity, n).into_iter().collect();
            set.into_iter().collect()
        })
        .collect();
    let count: u128 = choices.iter().map(|c| c.len() as u128).product();
    if count > LIMIT {
        return Err(PolyError::EnumerationTooLarge {
            count,
            limit: LIMIT,
        });
    }
    let mut tables = Vec::with_capacity(count as usize);
    let mut pick = vec![0usize; num_entries];
    loop {
        let table: Vec<Value> = pick.iter().zip(&choices).map(|(&p, c)| c[p]).collect();
        tables.push(OperationTable {
            arity,
            domain,
            table,
        });
        let mut i = num_entries;
        loop {
            if i == 0 {
                return Ok(tables);
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
        }
    }
}
