//! Seeded corpus generators for regression testing: random relations,
//! languages (raw or closed under structure-giving operations), complete
//! cost sets, instances, and graphs. Everything is a pure function of the
//! supplied RNG, so corpora are reproducible from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boolean::Graph;
use crate::classifier::{classify, Classification, Verdict};
use crate::model::{
    maxsol_cost_set, ConstraintLanguage, CostSet, Domain, Instance, Measure, Relation, Value,
};
use crate::poly::OperationTable;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random relation with 1..=max_tuples distinct tuples.
pub fn random_relation(
    r: &mut ChaCha8Rng,
    name: &str,
    domain: Domain,
    arity: usize,
    max_tuples: usize,
) -> Relation {
    let n = domain.size();
    let space = n.pow(arity as u32);
    let want = r.gen_range(1..=max_tuples.min(space));
    let mut tuples = std::collections::BTreeSet::new();
    while tuples.len() < want {
        let t: Vec<Value> = (0..arity).map(|_| r.gen_range(0..n)).collect();
        tuples.insert(t);
    }
    Relation::new(name, arity, domain, tuples).expect("in-range distinct tuples")
}

/// Entry-wise closure of the tuple set under the given operations
/// (fixpoint; bounded by |A|^arity).
fn close_relation(rel: &Relation, ops: &[OperationTable]) -> Relation {
    let mut tuples: std::collections::BTreeSet<Vec<Value>> =
        rel.tuples().map(|t| t.to_vec()).collect();
    loop {
        let snapshot: Vec<Vec<Value>> = tuples.iter().cloned().collect();
        let before = tuples.len();
        for op in ops {
            let k = op.arity();
            let mut idx = vec![0usize; k];
            'outer: loop {
                let image: Vec<Value> = (0..rel.arity())
                    .map(|coord| {
                        let args: Vec<Value> =
                            idx.iter().map(|&i| snapshot[i][coord]).collect();
                        op.apply(&args)
                    })
                    .collect();
                tuples.insert(image);
                for slot in (0..k).rev() {
                    idx[slot] += 1;
                    if idx[slot] < snapshot.len() {
                        continue 'outer;
                    }
                    idx[slot] = 0;
                }
                break;
            }
        }
        if tuples.len() == before {
            break;
        }
    }
    Relation::new(rel.name(), rel.arity(), rel.domain(), tuples).expect("closure stays in range")
}

fn min_max_ops(domain: Domain) -> Vec<OperationTable> {
    let n = domain.size();
    let build = |f: fn(usize, usize) -> usize| {
        let table = (0..n * n).map(|i| f(i / n, i % n)).collect();
        OperationTable::new(2, domain, table).expect("conservative")
    };
    vec![build(std::cmp::min), build(std::cmp::max)]
}

fn pixley_op(domain: Domain) -> OperationTable {
    let n = domain.size();
    let table = (0..n * n * n)
        .map(|i| {
            let (x, y, z) = (i / (n * n), i / n % n, i % n);
            if x == y {
                z
            } else {
                x
            }
        })
        .collect();
    OperationTable::new(3, domain, table).expect("conservative")
}

/// A random language: 1..=2 relations of arity 1..=3 over the given
/// domain. A third of the draws are closed under {min, max}, a third
/// under the whole-domain Pixley operation (seeding tractable structure),
/// and a third are left raw.
pub fn random_language(r: &mut ChaCha8Rng, domain: Domain) -> ConstraintLanguage {
    let family = r.gen_range(0..3u8);
    let count = r.gen_range(1..=2);
    let relations: Vec<Relation> = (0..count)
        .map(|i| {
            let arity = r.gen_range(1..=3);
            let max_tuples = match arity {
                1 => domain.size(),
                2 => 6,
                _ => 8,
            };
            let rel = random_relation(r, &format!("r{i}"), domain, arity, max_tuples);
            match family {
                0 => rel,
                1 => close_relation(&rel, &min_max_ops(domain)),
                _ => close_relation(&rel, &[pixley_op(domain)]),
            }
        })
        .collect();
    ConstraintLanguage::new(domain, relations).expect("well-formed by construction")
}

/// A raw random boolean language with relations of arity ≤ 3.
pub fn random_boolean_language(r: &mut ChaCha8Rng) -> ConstraintLanguage {
    random_boolean_language_with_max_arity(r, 3)
}

/// A raw random boolean language with relations of arity ≤ 2. On this
/// fragment, invariance under all binary and ternary conservative
/// polymorphisms coincides exactly with conjunctive definability using
/// two quantified variables; arity-3 relations can require a third
/// (see the fragment-boundary test in the `boolean` module).
pub fn random_binary_boolean_language(r: &mut ChaCha8Rng) -> ConstraintLanguage {
    random_boolean_language_with_max_arity(r, 2)
}

fn random_boolean_language_with_max_arity(
    r: &mut ChaCha8Rng,
    max_arity: usize,
) -> ConstraintLanguage {
    let domain = Domain::new(2).expect("positive");
    let count = r.gen_range(1..=2);
    let relations: Vec<Relation> = (0..count)
        .map(|i| {
            let arity = r.gen_range(1..=max_arity);
            let space = 1usize << arity;
            random_relation(r, &format!("r{i}"), domain, arity, space)
        })
        .collect();
    ConstraintLanguage::new(domain, relations).expect("well-formed by construction")
}

/// A cost set whose undirected preference graph is complete: one of the
/// canonical families, or rejection-sampled random vectors.
pub fn random_complete_costs(r: &mut ChaCha8Rng, domain: Domain) -> CostSet {
    let n = domain.size();
    match r.gen_range(0..4u8) {
        0 => CostSet::minhom(domain),
        1 => CostSet::new(domain, vec![(0..n as Measure).collect()]).expect("well-formed"),
        2 => maxsol_cost_set(&(0..n as Measure).collect::<Vec<_>>()),
        _ => {
            for _ in 0..20 {
                let k = r.gen_range(1..=2);
                let functions: Vec<Vec<Measure>> = (0..k)
                    .map(|_| (0..n).map(|_| r.gen_range(0..=3 as Measure)).collect())
                    .collect();
                let costs = CostSet::new(domain, functions).expect("well-formed");
                if crate::model::PreferenceGraph::build(&costs, domain).is_ug_complete() {
                    return costs;
                }
            }
            CostSet::minhom(domain)
        }
    }
}

/// A random instance over the given language and costs: 1..=max_vars
/// variables, 0..=max_constraints constraints with scopes drawn with
/// replacement, weights in 0..=max_weight.
pub fn random_instance(
    r: &mut ChaCha8Rng,
    lang: &ConstraintLanguage,
    costs: &CostSet,
    max_vars: usize,
    max_constraints: usize,
    max_weight: Measure,
) -> Instance {
    let nv = r.gen_range(1..=max_vars);
    let variables: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
    let nc = r.gen_range(0..=max_constraints);
    let constraints = (0..nc)
        .map(|_| {
            let rel = &lang.relations()[r.gen_range(0..lang.relations().len())];
            let scope = (0..rel.arity())
                .map(|_| variables[r.gen_range(0..nv)].clone())
                .collect();
            (scope, rel.name().to_string())
        })
        .collect();
    let weights = (0..nv)
        .map(|_| (0..costs.len()).map(|_| r.gen_range(0..=max_weight)).collect())
        .collect();
    Instance::new(lang.clone(), costs.clone(), variables, constraints, weights)
        .expect("well-formed by construction")
}

/// A random simple graph on 1..=max_n vertices, each edge present with
/// probability 1/2.
pub fn random_graph(r: &mut ChaCha8Rng, max_n: usize) -> Graph {
    let n = r.gen_range(1..=max_n);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(0.5) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("simple by construction")
}

/// An instance over a TRACTABLE (language, costs) pair, bundled with its
/// classification so downstream checks can reuse the witnesses.
#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub instance: Instance,
    pub classification: Classification,
}

/// Generates `count` instances over tractable languages with |A| ≤ 4,
/// |V| ≤ 6, and at most 5 constraints, by rejection sampling on the
/// classifier verdict.
pub fn tractable_corpus(seed: u64, count: usize) -> Vec<CorpusInstance> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        assert!(
            attempts < count * 500 + 1000,
            "tractable corpus generation is not converging"
        );
        let domain = Domain::new(r.gen_range(2..=4)).expect("positive");
        let lang = random_language(&mut r, domain);
        let costs = random_complete_costs(&mut r, domain);
        let classification = match classify(&lang, &costs) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if classification.verdict != Verdict::Tractable {
            continue;
        }
        let instance = random_instance(&mut r, &lang, &costs, 6, 5, 4);
        out.push(CorpusInstance {
            instance,
            classification,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let mk = |seed| {
            let mut r = rng(seed);
            let domain = Domain::new(3).unwrap();
            let lang = random_language(&mut r, domain);
            let costs = random_complete_costs(&mut r, domain);
            let inst = random_instance(&mut r, &lang, &costs, 4, 3, 3);
            let g = random_graph(&mut r, 5);
            (lang, costs, inst.variables().to_vec(), g)
        };
        assert_eq!(mk(11), mk(11));
        let (a, _, _, _) = mk(11);
        let (b, _, _, _) = mk(12);
        assert_ne!(a, b);
    }

    #[test]
    fn complete_costs_are_complete() {
        let mut r = rng(3);
        for _ in 0..40 {
            let domain = Domain::new(r.gen_range(2..=4)).unwrap();
            let costs = random_complete_costs(&mut r, domain);
            assert!(crate::model::PreferenceGraph::build(&costs, domain).is_ug_complete());
        }
    }

    #[test]
    fn closure_families_are_closed() {
        let mut r = rng(5);
        let domain = Domain::new(3).unwrap();
        let ops = min_max_ops(domain);
        for _ in 0..10 {
            let rel = random_relation(&mut r, "t", domain, 2, 5);
            let closed = close_relation(&rel, &ops);
            for op in &ops {
                assert!(crate::poly::preserves(op, &closed));
            }
            assert!(closed.len() >= rel.len());
        }
        let p = pixley_op(domain);
        for _ in 0..10 {
            let rel = random_relation(&mut r, "t", domain, 2, 5);
            let closed = close_relation(&rel, std::slice::from_ref(&p));
            assert!(crate::poly::preserves(&p, &closed));
        }
    }

    #[test]
    fn tractable_corpus_small_sample() {
        let corpus = tractable_corpus(2024, 10);
        assert_eq!(corpus.len(), 10);
        for item in &corpus {
            assert_eq!(item.classification.verdict, Verdict::Tractable);
            assert!(item.instance.num_variables() <= 6);
            assert!(item.instance.constraints().len() <= 5);
            assert!(item.instance.domain().size() <= 4);
        }
    }
}
