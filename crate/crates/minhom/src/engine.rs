//! Exact search engine: a small finite-domain CSP solver with arc
//! consistency, deterministic enumeration, and an independent brute-force
//! optimizer used as a ground-truth oracle.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Assignment, Instance, Measure, Value};

/// Hard cap on unbounded enumeration (product of domain sizes).
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// Node budget for the brute-force oracle's search tree.
pub const ORACLE_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("search space of size {size} exceeds enumeration limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },
    #[error("brute-force oracle exceeded its node budget of {budget}")]
    BudgetExceeded { budget: u64 },
    #[error("engine supports at most 64 values per domain, got {size}")]
    DomainTooLarge { size: usize },
}

/// A positive table CSP over a shared value universe of size ≤ 64.
/// Per-variable domains are bitmasks over that universe.
#[derive(Debug, Clone)]
pub struct Csp {
    num_values: usize,
    domains: Vec<u64>,
    constraints: Vec<TableConstraint>,
}

/// One table constraint. Tuples that contradict a repeated variable in the
/// scope are dropped at construction, so positional reasoning stays sound.
#[derive(Debug, Clone)]
pub struct TableConstraint {
    scope: Vec<usize>,
    tuples: Vec<Vec<Value>>,
}

impl TableConstraint {
    pub fn new(scope: Vec<usize>, tuples: impl IntoIterator<Item = Vec<Value>>) -> Self {
        let tuples = tuples
            .into_iter()
            .filter(|t| {
                scope.iter().enumerate().all(|(i, &vi)| {
                    scope[..i]
                        .iter()
                        .enumerate()
                        .all(|(j, &vj)| vi != vj || t[i] == t[j])
                })
            })
            .collect();
        TableConstraint { scope, tuples }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }
}

fn full_mask(size: usize) -> u64 {
    if size == 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

impl Csp {
    pub fn new(
        num_values: usize,
        domains: Vec<u64>,
        constraints: Vec<TableConstraint>,
    ) -> Result<Self, EngineError> {
        if num_values > 64 {
            return Err(EngineError::DomainTooLarge { size: num_values });
        }
        Ok(Csp {
            num_values,
            domains,
            constraints,
        })
    }

    /// The decision view of an instance: full domains, one table per
    /// constraint.
    pub fn from_instance(instance: &Instance) -> Result<Self, EngineError> {
        let n = instance.domain().size();
        if n > 64 {
            return Err(EngineError::DomainTooLarge { size: n });
        }
        let domains = vec![full_mask(n); instance.num_variables()];
        let constraints = instance
            .constraints()
            .iter()
            .map(|c| {
                TableConstraint::new(
                    c.scope.clone(),
                    c.relation.tuples().map(|t| t.to_vec()),
                )
            })
            .collect();
        Csp::new(n, domains, constraints)
    }

    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn num_values(&self) -> usize {
        self.num_values
    }

    /// Restricts variable `v` to the single value `a`.
    pub fn pin(&mut self, v: usize, a: Value) {
        self.domains[v] &= 1u64 << a;
    }

    pub fn domain_mask(&self, v: usize) -> u64 {
        self.domains[v]
    }

    /// Enforces generalized arc consistency by fixpoint iteration.
    /// Returns false if some domain empties.
    fn propagate(&self, domains: &mut [u64]) -> bool {
        loop {
            let mut changed = false;
            for c in &self.constraints {
                let k = c.scope.len();
                let mut support = vec![0u64; k];
                for t in &c.tuples {
                    if t.iter()
                        .zip(&c.scope)
                        .all(|(&val, &var)| domains[var] >> val & 1 == 1)
                    {
                        for (mask, &val) in support.iter_mut().zip(t) {
                            *mask |= 1u64 << val;
                        }
                    }
                }
                for (&var, &mask) in c.scope.iter().zip(&support) {
                    let pruned = domains[var] & mask;
                    if pruned != domains[var] {
                        domains[var] = pruned;
                        changed = true;
                        if pruned == 0 {
                            return false;
                        }
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    /// Finds the lexicographically least solution (variable index order,
    /// values ascending), or None. Backtracking search with arc
    /// consistency; pruning never skips the lexicographic minimum.
    pub fn solve(&self) -> Option<Assignment> {
        let mut domains = self.domains.clone();
        if !self.propagate(&mut domains) {
            return None;
        }
        self.solve_rec(&mut domains, 0).map(Assignment::new)
    }

    fn solve_rec(&self, domains: &mut Vec<u64>, var: usize) -> Option<Vec<Value>> {
        let var = match (var..self.domains.len()).find(|&v| domains[v].count_ones() != 1) {
            Some(v) => v,
            None => {
                return Some(
                    domains
                        .iter()
                        .map(|m| m.trailing_zeros() as Value)
                        .collect(),
                );
            }
        };
        let mask = domains[var];
        for a in 0..self.num_values {
            if mask >> a & 1 == 0 {
                continue;
            }
            let saved = domains.clone();
            domains[var] = 1u64 << a;
            if self.propagate(domains) {
                if let Some(sol) = self.solve_rec(domains, var) {
                    return Some(sol);
                }
            }
            *domains = saved;
        }
        None
    }

    pub fn is_satisfiable(&self) -> bool {
        self.solve().is_some()
    }

    /// All solutions in lexicographic order, up to `cap` if given.
    /// Unbounded enumeration refuses search spaces larger than
    /// [`ENUMERATION_LIMIT`].
    pub fn enumerate(&self, cap: Option<usize>) -> Result<Vec<Assignment>, EngineError> {
        if cap.is_none() {
            let size: u128 = self
                .domains
                .iter()
                .map(|m| u128::from(m.count_ones()))
                .product();
            if size > ENUMERATION_LIMIT {
                return Err(EngineError::SearchSpaceTooLarge {
                    size,
                    limit: ENUMERATION_LIMIT,
                });
            }
        }
        let mut out = Vec::new();
        let mut partial = Vec::with_capacity(self.domains.len());
        self.enumerate_rec(&mut partial, cap, &mut out);
        Ok(out)
    }

    fn enumerate_rec(
        &self,
        partial: &mut Vec<Value>,
        cap: Option<usize>,
        out: &mut Vec<Assignment>,
    ) {
        if cap.is_some_and(|c| out.len() >= c) {
            return;
        }
        let var = partial.len();
        if var == self.domains.len() {
            out.push(Assignment::new(partial.clone()));
            return;
        }
        for a in 0..self.num_values {
            if self.domains[var] >> a & 1 == 0 {
                continue;
            }
            partial.push(a);
            if self.consistent_so_far(partial, var) {
                self.enumerate_rec(partial, cap, out);
            }
            partial.pop();
        }
    }

    /// Checks every constraint whose scope maximum is `var` against the
    /// partial assignment `0..=var`.
    fn consistent_so_far(&self, partial: &[Value], var: usize) -> bool {
        self.constraints
            .iter()
            .filter(|c| c.scope.iter().copied().max() == Some(var))
            .all(|c| {
                c.tuples
                    .iter()
                    .any(|t| t.iter().zip(&c.scope).all(|(&val, &v)| partial[v] == val))
            })
    }
}

/// Ground-truth optimizer: plain depth-first enumeration in lexicographic
/// order, checking each constraint as soon as its scope completes, keeping
/// the first assignment that attains the minimum measure. No propagation,
/// no bounding — only a node budget guarding against runaway inputs.
///
/// Returns `Ok(None)` when the instance has no solution.
pub fn brute_force_optimum(
    instance: &Instance,
) -> Result<Option<(Assignment, Measure)>, EngineError> {
    let n = instance.domain().size();
    if n > 64 {
        return Err(EngineError::DomainTooLarge { size: n });
    }
    let mut best: Option<(Vec<Value>, u128)> = None;
    let mut partial: Vec<Value> = Vec::with_capacity(instance.num_variables());
    let mut nodes: u64 = 0;
    brute_rec(instance, &mut partial, &mut nodes, &mut best)?;
    Ok(best.map(|(values, cost)| {
        (
            Assignment::new(values),
            Measure::try_from(cost).expect("measure overflow in oracle"),
        )
    }))
}

fn brute_rec(
    instance: &Instance,
    partial: &mut Vec<Value>,
    nodes: &mut u64,
    best: &mut Option<(Vec<Value>, u128)>,
) -> Result<(), EngineError> {
    *nodes += 1;
    if *nodes > ORACLE_NODE_BUDGET {
        return Err(EngineError::BudgetExceeded {
            budget: ORACLE_NODE_BUDGET,
        });
    }
    let var = partial.len();
    if var == instance.num_variables() {
        let cost: u128 = (0..var)
            .map(|v| u128::from(instance.value_cost(v, partial[v])))
            .sum();
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            *best = Some((partial.clone(), cost));
        }
        return Ok(());
    }
    for a in instance.domain().elements() {
        partial.push(a);
        let ok = instance.constraints().iter().all(|c| {
            if c.scope.iter().copied().max() != Some(var) {
                return true;
            }
            let image: Vec<Value> = c.scope.iter().map(|&v| partial[v]).collect();
            c.relation.contains(&image)
        });
        if ok {
            brute_rec(instance, partial, nodes, best)?;
        }
        partial.pop();
    }
    Ok(())
}

/// For each variable, the exact set of values taken by at least one
/// solution. Empty sets everywhere iff the instance is unsatisfiable.
pub fn compute_value_sets(instance: &Instance) -> Result<Vec<BTreeSet<Value>>, EngineError> {
    let csp = Csp::from_instance(instance)?;
    let nv = instance.num_variables();
    let mut sets: Vec<BTreeSet<Value>> = vec![BTreeSet::new(); nv];
    for v in 0..nv {
        for a in instance.domain().elements() {
            if sets[v].contains(&a) {
                continue;
            }
            let mut pinned = csp.clone();
            pinned.pin(v, a);
            if let Some(sol) = pinned.solve() {
                // Every value the witness takes is itself witnessed.
                for (u, &b) in sol.values().iter().enumerate() {
                    sets[u].insert(b);
                }
            }
        }
    }
    Ok(sets)
}
