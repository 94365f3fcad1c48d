//! The dichotomy decision procedure: pair typing from the preference
//! graph, the necessary local conditions, the M set and the graph T,
//! bipartiteness, and the final verdict with re-checkable witnesses.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{ConstraintLanguage, CostSet, Orientation, PreferenceGraph, Value};
use crate::poly::{
    self, compute_f_max, pair_query_arithmetical, pair_query_down, ComSet, OperationTable,
    PolyError,
};
use crate::solver::{construct_arithmetical, construct_weak_tournament_pair, WeakTournamentPair};

/// How an unordered pair sits in the preference graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// Arcs in both directions.
    MinHomPair,
    /// Exactly one arc, recorded as its orientation.
    MinPair { arc: Orientation },
    /// No arc at all (UG incomplete at this pair).
    NoArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairType {
    /// The pair, normalized `a < b`.
    pub pair: (Value, Value),
    pub kind: PairKind,
}

/// Types every unordered pair per the preference graph.
pub fn classify_pairs(g: &PreferenceGraph) -> Vec<PairType> {
    g.domain()
        .unordered_pairs()
        .map(|(a, b)| {
            let ab = g.has_arc(a, b);
            let ba = g.has_arc(b, a);
            let kind = match (ab, ba) {
                (true, true) => PairKind::MinHomPair,
                (true, false) => PairKind::MinPair { arc: (a, b) },
                (false, true) => PairKind::MinPair { arc: (b, a) },
                (false, false) => PairKind::NoArc,
            };
            PairType { pair: (a, b), kind }
        })
        .collect()
}

/// The record of the local-condition queries on one pair; doubles as the
/// violation certificate when the condition fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalCondition {
    /// MinHom-pair `{a,b}`: needs both downs (1.a) or arithmetical (1.b).
    MinHomPair {
        pair: (Value, Value),
        down_toward_b: bool,
        down_toward_a: bool,
        arithmetical: bool,
    },
    /// min-pair with arc `(a,b)`: needs `↓ᵃ_b` (2.a) or arithmetical (2.b).
    MinPair {
        arc: Orientation,
        down: bool,
        arithmetical: bool,
    },
}

impl LocalCondition {
    pub fn satisfied(&self) -> bool {
        match *self {
            LocalCondition::MinHomPair {
                down_toward_b,
                down_toward_a,
                arithmetical,
                ..
            } => (down_toward_b && down_toward_a) || arithmetical,
            LocalCondition::MinPair {
                down, arithmetical, ..
            } => down || arithmetical,
        }
    }

    pub fn pair(&self) -> (Value, Value) {
        match *self {
            LocalCondition::MinHomPair { pair, .. } => pair,
            LocalCondition::MinPair { arc: (a, b), .. } => (a.min(b), a.max(b)),
        }
    }
}

/// Evaluates the local condition for one typed pair (`NoArc` pairs have no
/// condition and always pass — they cannot occur when UG is complete).
fn evaluate_local_condition(lang: &ConstraintLanguage, t: &PairType) -> Option<LocalCondition> {
    let (a, b) = t.pair;
    match t.kind {
        PairKind::MinHomPair => {
            let down_toward_b = pair_query_down(lang, a, b);
            let down_toward_a = pair_query_down(lang, b, a);
            let arithmetical = if down_toward_b && down_toward_a {
                true // (1.a) already holds; skip the ternary search
            } else {
                pair_query_arithmetical(lang, a, b)
            };
            Some(LocalCondition::MinHomPair {
                pair: (a, b),
                down_toward_b,
                down_toward_a,
                arithmetical,
            })
        }
        PairKind::MinPair { arc: (x, y) } => {
            let down = pair_query_down(lang, x, y);
            let arithmetical = if down {
                true
            } else {
                pair_query_arithmetical(lang, x, y)
            };
            Some(LocalCondition::MinPair {
                arc: (x, y),
                down,
                arithmetical,
            })
        }
        PairKind::NoArc => None,
    }
}

/// Checks the necessary local conditions for every pair; returns the first
/// failing pair's record as the violation certificate.
///
/// Note: when a sub-condition short-circuits (e.g. (1.a) holds), the
/// skipped arithmetical query is recorded as true-by-implication; the
/// certificate for a *failing* pair always carries actually-run queries.
pub fn check_local_conditions(
    lang: &ConstraintLanguage,
    costs: &CostSet,
) -> Result<(), LocalCondition> {
    let g = PreferenceGraph::build(costs, lang.domain());
    for t in classify_pairs(&g) {
        if let Some(cond) = evaluate_local_condition(lang, &t) {
            if !cond.satisfied() {
                return Err(cond);
            }
        }
    }
    Ok(())
}

/// The set M: pairs whose restriction clone contains two distinct binary
/// commutative functions, i.e. both down queries succeed.
pub fn compute_m_pairs(lang: &ConstraintLanguage) -> ComSet {
    lang.domain()
        .unordered_pairs()
        .filter(|&(a, b)| pair_query_down(lang, a, b) && pair_query_down(lang, b, a))
        .collect()
}

/// The graph T: vertices are orientations in M° ∩ E(R); an edge joins two
/// vertices exactly when no single polymorphism is down on both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TGraph {
    pub vertices: Vec<Orientation>,
    /// Normalized: `(v, w)` with `v < w` in tuple order.
    pub edges: BTreeSet<(Orientation, Orientation)>,
}

impl TGraph {
    pub fn has_edge(&self, v: Orientation, w: Orientation) -> bool {
        self.edges.contains(&(v.min(w), v.max(w)))
    }

    fn neighbors(&self, v: Orientation) -> Vec<Orientation> {
        self.vertices
            .iter()
            .copied()
            .filter(|&w| w != v && self.has_edge(v, w))
            .collect()
    }
}

pub fn build_t_graph(lang: &ConstraintLanguage, g: &PreferenceGraph) -> TGraph {
    let m = compute_m_pairs(lang);
    let vertices: Vec<Orientation> = g
        .domain()
        .ordered_pairs()
        .filter(|&(a, b)| m.contains(&(a.min(b), a.max(b))) && g.has_arc(a, b))
        .collect();
    let mut edges = BTreeSet::new();
    for (i, &v) in vertices.iter().enumerate() {
        for &w in &vertices[i + 1..] {
            if !poly::joint_down_query(lang, v, w) {
                edges.insert((v, w));
            }
        }
    }
    TGraph { vertices, edges }
}

/// 2-colors the graph by BFS in vertex order (isolated vertices land in
/// M1), or returns a concrete odd cycle as the non-bipartiteness
/// certificate.
pub fn bipartition(t: &TGraph) -> Result<(Vec<Orientation>, Vec<Orientation>), Vec<Orientation>> {
    let mut color: BTreeMap<Orientation, u8> = BTreeMap::new();
    let mut parent: BTreeMap<Orientation, Orientation> = BTreeMap::new();
    for &root in &t.vertices {
        if color.contains_key(&root) {
            continue;
        }
        color.insert(root, 0);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let cv = color[&v];
            for w in t.neighbors(v) {
                match color.get(&w) {
                    None => {
                        color.insert(w, 1 - cv);
                        parent.insert(w, v);
                        queue.push_back(w);
                    }
                    Some(&cw) if cw == cv => {
                        return Err(extract_odd_cycle(&parent, v, w));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let m1 = t
        .vertices
        .iter()
        .copied()
        .filter(|v| color[v] == 0)
        .collect();
    let m2 = t
        .vertices
        .iter()
        .copied()
        .filter(|v| color[v] == 1)
        .collect();
    Ok((m1, m2))
}

/// The BFS-tree paths from `v` and `w` to their lowest common ancestor,
/// joined with the offending edge `v—w`, form an odd cycle.
fn extract_odd_cycle(
    parent: &BTreeMap<Orientation, Orientation>,
    v: Orientation,
    w: Orientation,
) -> Vec<Orientation> {
    let chain = |mut x: Orientation| {
        let mut path = vec![x];
        while let Some(&p) = parent.get(&x) {
            path.push(p);
            x = p;
        }
        path
    };
    let pv = chain(v);
    let pw = chain(w);
    let anc: BTreeSet<_> = pv.iter().copied().collect();
    let lca = *pw.iter().find(|x| anc.contains(x)).expect("same BFS tree");
    let mut cycle: Vec<Orientation> = pv.iter().copied().take_while(|&x| x != lca).collect();
    cycle.push(lca);
    let mut back: Vec<Orientation> = pw.iter().copied().take_while(|&x| x != lca).collect();
    back.reverse();
    cycle.extend(back);
    cycle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Tractable,
    NpHard,
    OutsideAssumptions,
}

/// Everything a TRACTABLE verdict must exhibit for independent
/// re-verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TractableWitness {
    pub m_pairs: ComSet,
    pub com_f_max: ComSet,
    pub t_graph: TGraph,
    pub m1: Vec<Orientation>,
    pub m2: Vec<Orientation>,
    pub pair: WeakTournamentPair,
    pub arithmetical: OperationTable,
    /// False when Com(f_max) covers all pairs and `arithmetical` is a
    /// placeholder projection.
    pub arithmetical_used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Tractable(Box<TractableWitness>),
    LocalConditionViolation(LocalCondition),
    OddCycle {
        t_graph: TGraph,
        cycle: Vec<Orientation>,
    },
    IncompleteUg {
        uncovered: Vec<(Value, Value)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Verdict,
    pub preference: PreferenceGraph,
    pub pair_types: Vec<PairType>,
    pub witness: Witness,
}

/// The full decision procedure. Pure in (lang, costs); deterministic.
pub fn classify(
    lang: &ConstraintLanguage,
    costs: &CostSet,
) -> Result<Classification, PolyError> {
    let g = PreferenceGraph::build(costs, lang.domain());
    let pair_types = classify_pairs(&g);

    if !g.is_ug_complete() {
        return Ok(Classification {
            verdict: Verdict::OutsideAssumptions,
            witness: Witness::IncompleteUg {
                uncovered: g.uncovered_pairs(),
            },
            preference: g,
            pair_types,
        });
    }

    if let Err(violation) = check_local_conditions(lang, costs) {
        return Ok(Classification {
            verdict: Verdict::NpHard,
            witness: Witness::LocalConditionViolation(violation),
            preference: g,
            pair_types,
        });
    }

    let t_graph = build_t_graph(lang, &g);
    let (m1, m2) = match bipartition(&t_graph) {
        Ok(parts) => parts,
        Err(cycle) => {
            return Ok(Classification {
                verdict: Verdict::NpHard,
                witness: Witness::OddCycle { t_graph, cycle },
                preference: g,
                pair_types,
            });
        }
    };

    let pair = construct_weak_tournament_pair(lang, costs, &m1, &m2)?;
    pair.verify(lang).map_err(|e| PolyError::InternalInconsistency {
        context: format!("constructed pair fails verification: {e}"),
    })?;

    let f_max = compute_f_max(lang)?;
    let com_f_max = f_max.com_set();
    let not_com: Vec<(Value, Value)> = lang
        .domain()
        .unordered_pairs()
        .filter(|p| !com_f_max.contains(p))
        .collect();
    let arithmetical = construct_arithmetical(lang, &not_com)?;

    Ok(Classification {
        verdict: Verdict::Tractable,
        witness: Witness::Tractable(Box::new(TractableWitness {
            m_pairs: compute_m_pairs(lang),
            com_f_max,
            t_graph,
            m1,
            m2,
            pair,
            arithmetical,
            arithmetical_used: !not_com.is_empty(),
        })),
        preference: g,
        pair_types,
    })
}

impl Classification {
    /// The tractable witness, when the verdict is TRACTABLE.
    pub fn tractable(&self) -> Option<&TractableWitness> {
        match &self.witness {
            Witness::Tractable(w) => Some(w),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{maxsol_cost_set, ConstraintLanguage, CostSet, Domain, Relation};

    fn dom(n: usize) -> Domain {
        Domain::new(n).unwrap()
    }

    fn bool_lang(rels: Vec<Relation>) -> ConstraintLanguage {
        ConstraintLanguage::new(dom(2), rels).unwrap()
    }

    fn leq() -> Relation {
        Relation::new("leq", 2, dom(2), vec![vec![0, 0], vec![0, 1], vec![1, 1]]).unwrap()
    }

    fn neq() -> Relation {
        Relation::new("neq", 2, dom(2), vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    fn or_rel() -> Relation {
        Relation::new("or", 2, dom(2), vec![vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap()
    }

    fn minhom_costs(n: usize) -> CostSet {
        CostSet::minhom(dom(n))
    }

    /// R = {x}: the identity cost on {0,1}, giving the single arc (1,0).
    fn min_costs() -> CostSet {
        CostSet::new(dom(2), vec![vec![0, 1]]).unwrap()
    }

    #[test]
    fn pair_typing_examples() {
        let g = PreferenceGraph::build(&minhom_costs(2), dom(2));
        assert_eq!(classify_pairs(&g)[0].kind, PairKind::MinHomPair);

        let g = PreferenceGraph::build(&maxsol_cost_set(&[0, 1]), dom(2));
        assert_eq!(
            classify_pairs(&g)[0].kind,
            PairKind::MinPair { arc: (0, 1) }
        );

        let g = PreferenceGraph::build(&CostSet::new(dom(2), vec![vec![0, 0]]).unwrap(), dom(2));
        assert_eq!(classify_pairs(&g)[0].kind, PairKind::NoArc);
    }

    #[test]
    fn local_conditions_leq_passes_via_1a() {
        let lang = bool_lang(vec![leq()]);
        assert_eq!(check_local_conditions(&lang, &minhom_costs(2)), Ok(()));
    }

    #[test]
    fn local_conditions_neq_passes_via_1b() {
        let lang = bool_lang(vec![neq()]);
        assert_eq!(check_local_conditions(&lang, &minhom_costs(2)), Ok(()));
    }

    #[test]
    fn local_conditions_or_with_min_costs_fails() {
        // R = {x} puts the single arc (1,0); (2.a) needs ↓¹₀ = ∧ which
        // breaks OR, and (2.b) fails too.
        let lang = bool_lang(vec![or_rel()]);
        let violation = check_local_conditions(&lang, &min_costs()).unwrap_err();
        assert_eq!(
            violation,
            LocalCondition::MinPair {
                arc: (1, 0),
                down: false,
                arithmetical: false
            }
        );
    }

    #[test]
    fn t_graph_examples() {
        let g2 = PreferenceGraph::build(&minhom_costs(2), dom(2));

        let lang = bool_lang(vec![leq()]);
        let t = build_t_graph(&lang, &g2);
        assert_eq!(t.vertices, vec![(0, 1), (1, 0)]);
        assert_eq!(t.edges.len(), 1);
        assert!(t.has_edge((0, 1), (1, 0)));

        let lang = bool_lang(vec![neq()]);
        let t = build_t_graph(&lang, &g2);
        assert!(t.vertices.is_empty());

        let free3 = ConstraintLanguage::unary_only(dom(3));
        let g3 = PreferenceGraph::build(&minhom_costs(3), dom(3));
        let t = build_t_graph(&free3, &g3);
        assert_eq!(t.vertices.len(), 6);
        // Edges exactly between the two orientations of each pair.
        assert_eq!(t.edges.len(), 3);
        for (a, b) in dom(3).unordered_pairs() {
            assert!(t.has_edge((a, b), (b, a)));
        }
    }

    #[test]
    fn bipartition_examples() {
        let single_edge = TGraph {
            vertices: vec![(0, 1), (1, 0)],
            edges: BTreeSet::from([((0, 1), (1, 0))]),
        };
        assert_eq!(
            bipartition(&single_edge),
            Ok((vec![(0, 1)], vec![(1, 0)]))
        );

        let empty = TGraph {
            vertices: vec![(0, 1), (1, 0)],
            edges: BTreeSet::new(),
        };
        assert_eq!(
            bipartition(&empty),
            Ok((vec![(0, 1), (1, 0)], vec![]))
        );

        // A triangle yields an odd cycle of length 3.
        let v = [(0, 1), (0, 2), (1, 2)];
        let triangle = TGraph {
            vertices: v.to_vec(),
            edges: BTreeSet::from([(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]),
        };
        let cycle = bipartition(&triangle).unwrap_err();
        assert_eq!(cycle.len(), 3);
        for i in 0..3 {
            assert!(triangle.has_edge(cycle[i], cycle[(i + 1) % 3]));
        }
    }

    #[test]
    fn classify_leq_minhom_tractable() {
        let lang = bool_lang(vec![leq()]);
        let c = classify(&lang, &minhom_costs(2)).unwrap();
        assert_eq!(c.verdict, Verdict::Tractable);
        let w = c.tractable().unwrap();
        assert_eq!(w.m1, vec![(0, 1)]);
        assert_eq!(w.m2, vec![(1, 0)]);
        assert!(!w.arithmetical_used);
    }

    #[test]
    fn classify_or_min_np_hard() {
        let lang = bool_lang(vec![or_rel()]);
        let c = classify(&lang, &min_costs()).unwrap();
        assert_eq!(c.verdict, Verdict::NpHard);
        assert!(matches!(c.witness, Witness::LocalConditionViolation(_)));
    }

    #[test]
    fn classify_incomplete_ug() {
        let lang = ConstraintLanguage::unary_only(dom(3));
        let costs = CostSet::new(dom(3), vec![vec![1, 0, 0]]).unwrap();
        let c = classify(&lang, &costs).unwrap();
        assert_eq!(c.verdict, Verdict::OutsideAssumptions);
        assert_eq!(
            c.witness,
            Witness::IncompleteUg {
                uncovered: vec![(1, 2)]
            }
        );
    }

    #[test]
    fn classify_and_of_products_min_tractable() {
        // x1 = x2 ∧ x3 with min costs: ∧ preserves it, verdict TRACTABLE.
        let k = Relation::new(
            "conj",
            3,
            dom(2),
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 1, 1]],
        )
        .unwrap();
        let lang = bool_lang(vec![k]);
        let c = classify(&lang, &min_costs()).unwrap();
        assert_eq!(c.verdict, Verdict::Tractable);
        // Same language is MinHom-NP-hard.
        let c = classify(&lang, &minhom_costs(2)).unwrap();
        assert_eq!(c.verdict, Verdict::NpHard);
    }

    #[test]
    fn classify_is_deterministic() {
        let lang = bool_lang(vec![leq(), neq()]);
        let a = classify(&lang, &minhom_costs(2)).unwrap();
        let b = classify(&lang, &minhom_costs(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn adding_relations_never_gains_tractability() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let d = dom(2);
        for case in 0..25 {
            let mut rels = Vec::new();
            for (i, arity) in [(0usize, 2usize), (1, 2), (2, 3)] {
                let all: Vec<Vec<Value>> = (0..2usize.pow(arity as u32))
                    .map(|idx| (0..arity).rev().map(|j| idx >> j & 1).collect())
                    .collect();
                let tuples: Vec<Vec<Value>> =
                    all.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
                rels.push(Relation::new(format!("r{i}"), arity, d, tuples).unwrap());
            }
            let small = ConstraintLanguage::new(d, rels[..2].to_vec()).unwrap();
            let large = ConstraintLanguage::new(d, rels).unwrap();
            for costs in [minhom_costs(2), min_costs()] {
                let vs = classify(&small, &costs).unwrap().verdict;
                let vl = classify(&large, &costs).unwrap().verdict;
                if vs == Verdict::NpHard {
                    assert_eq!(vl, Verdict::NpHard, "case {case}");
                }
            }
        }
    }
}
