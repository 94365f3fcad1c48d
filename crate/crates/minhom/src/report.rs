//! Classification reports and solution documents. A stored report carries
//! enough explicit material (operation tables, pair lists, cycles) to be
//! re-verified without re-running the decision procedure; only NP-hard
//! certificates re-run the specific failed queries they cite.

use serde::{Deserialize, Serialize};

use crate::classifier::{
    classify_pairs, Classification, LocalCondition, PairKind, TGraph, TractableWitness, Verdict,
    Witness,
};
use crate::model::{Assignment, ConstraintLanguage, CostSet, Domain, Instance, Measure,
    PreferenceGraph, Value};
use crate::poly::{joint_down_query, pair_query_arithmetical, pair_query_down, OperationTable};
use crate::solver::WeakTournamentPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationDoc {
    pub arity: usize,
    pub domain: usize,
    /// Row-major: index = Σ argᵢ·n^(k−1−i).
    pub table: Vec<Value>,
}

impl OperationDoc {
    pub fn from_model(op: &OperationTable) -> Self {
        OperationDoc {
            arity: op.arity(),
            domain: op.domain().size(),
            table: op.raw_table().to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<OperationTable, String> {
        let domain = Domain::new(self.domain).map_err(|e| e.to_string())?;
        OperationTable::new(self.arity, domain, self.table.clone()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTypeDoc {
    pub pair: (Value, Value),
    /// "minhom", "min", or "none".
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc: Option<(Value, Value)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TGraphDoc {
    pub vertices: Vec<(Value, Value)>,
    pub edges: Vec<((Value, Value), (Value, Value))>,
}

impl TGraphDoc {
    fn from_model(t: &TGraph) -> Self {
        TGraphDoc {
            vertices: t.vertices.clone(),
            edges: t.edges.iter().copied().collect(),
        }
    }

    fn to_model(&self) -> TGraph {
        TGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum WitnessDoc {
    Tractable {
        m_pairs: Vec<(Value, Value)>,
        com_f_max: Vec<(Value, Value)>,
        t_graph: TGraphDoc,
        m1: Vec<(Value, Value)>,
        m2: Vec<(Value, Value)>,
        scope: Vec<(Value, Value)>,
        phi: OperationDoc,
        psi: OperationDoc,
        arithmetical: OperationDoc,
        arithmetical_pairs: Vec<(Value, Value)>,
        arithmetical_used: bool,
    },
    LocalConditionViolation {
        pair: (Value, Value),
        /// "minhom" or "min".
        pair_kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        arc: Option<(Value, Value)>,
        #[serde(skip_serializing_if = "Option::is_none")]
        down_toward_b: Option<bool>,
        #[serde(skip_serializing_if = "Option::is_none")]
        down_toward_a: Option<bool>,
        #[serde(skip_serializing_if = "Option::is_none")]
        down: Option<bool>,
        arithmetical: bool,
    },
    OddCycle {
        t_graph: TGraphDoc,
        /// A closed walk given by its vertices; consecutive entries (and
        /// the wrap-around) are edges; odd length.
        cycle: Vec<(Value, Value)>,
    },
    IncompleteUg {
        uncovered: Vec<(Value, Value)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub version: String,
    pub verdict: String,
    pub arcs: Vec<(Value, Value)>,
    pub ug_complete: bool,
    pub pair_types: Vec<PairTypeDoc>,
    pub witness: WitnessDoc,
    pub inputs: Vec<InputDigest>,
    pub timing_ms: u64,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Tractable => "TRACTABLE",
        Verdict::NpHard => "NP_HARD",
        Verdict::OutsideAssumptions => "OUTSIDE_ASSUMPTIONS",
    }
}

fn pair_type_docs(c: &Classification) -> Vec<PairTypeDoc> {
    c.pair_types
        .iter()
        .map(|t| {
            let (kind, arc) = match t.kind {
                PairKind::MinHomPair => ("minhom", None),
                PairKind::MinPair { arc } => ("min", Some(arc)),
                PairKind::NoArc => ("none", None),
            };
            PairTypeDoc {
                pair: t.pair,
                kind: kind.to_string(),
                arc,
            }
        })
        .collect()
}

fn witness_doc(witness: &Witness) -> WitnessDoc {
    match witness {
        Witness::Tractable(w) => WitnessDoc::Tractable {
            m_pairs: w.m_pairs.iter().copied().collect(),
            com_f_max: w.com_f_max.iter().copied().collect(),
            t_graph: TGraphDoc::from_model(&w.t_graph),
            m1: w.m1.clone(),
            m2: w.m2.clone(),
            scope: w.pair.scope.iter().copied().collect(),
            phi: OperationDoc::from_model(&w.pair.phi),
            psi: OperationDoc::from_model(&w.pair.psi),
            arithmetical: OperationDoc::from_model(&w.arithmetical),
            arithmetical_pairs: w
                .arithmetical
                .domain()
                .unordered_pairs()
                .filter(|p| !w.com_f_max.contains(p))
                .collect(),
            arithmetical_used: w.arithmetical_used,
        },
        Witness::LocalConditionViolation(v) => match *v {
            LocalCondition::MinHomPair {
                pair,
                down_toward_b,
                down_toward_a,
                arithmetical,
            } => WitnessDoc::LocalConditionViolation {
                pair,
                pair_kind: "minhom".to_string(),
                arc: None,
                down_toward_b: Some(down_toward_b),
                down_toward_a: Some(down_toward_a),
                down: None,
                arithmetical,
            },
            LocalCondition::MinPair {
                arc,
                down,
                arithmetical,
            } => WitnessDoc::LocalConditionViolation {
                pair: (arc.0.min(arc.1), arc.0.max(arc.1)),
                pair_kind: "min".to_string(),
                arc: Some(arc),
                down_toward_b: None,
                down_toward_a: None,
                down: Some(down),
                arithmetical,
            },
        },
        Witness::OddCycle { t_graph, cycle } => WitnessDoc::OddCycle {
            t_graph: TGraphDoc::from_model(t_graph),
            cycle: cycle.clone(),
        },
        Witness::IncompleteUg { uncovered } => WitnessDoc::IncompleteUg {
            uncovered: uncovered.clone(),
        },
    }
}

pub fn build_report(
    c: &Classification,
    version: &str,
    inputs: Vec<InputDigest>,
    timing_ms: u64,
) -> ReportDoc {
    ReportDoc {
        version: version.to_string(),
        verdict: verdict_name(c.verdict).to_string(),
        arcs: c.preference.arcs().collect(),
        ug_complete: c.preference.is_ug_complete(),
        pair_types: pair_type_docs(c),
        witness: witness_doc(&c.witness),
        inputs,
        timing_ms,
    }
}

/// Accumulates human-readable verification failures.
struct Check {
    failures: Vec<String>,
}

impl Check {
    fn ensure(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }
}

/// Re-verifies a stored report against the language and costs it claims
/// to describe. Structural facts (arcs, pair types, scope derivations,
/// bipartition, operation identities, preservation) are recomputed from
/// the stored tables; NP-hard certificates re-run exactly the queries
/// they cite. Returns the list of discrepancies, empty on success.
pub fn verify_report(
    lang: &ConstraintLanguage,
    costs: &CostSet,
    report: &ReportDoc,
) -> Result<(), Vec<String>> {
    let mut check = Check { failures: vec![] };
    let c = &mut check;
    let g = PreferenceGraph::build(costs, lang.domain());

    let arcs: Vec<(Value, Value)> = g.arcs().collect();
    c.ensure(report.arcs == arcs, || {
        format!("stored arcs {:?} differ from recomputed {:?}", report.arcs, arcs)
    });
    c.ensure(report.ug_complete == g.is_ug_complete(), || {
        "stored UG completeness flag is wrong".to_string()
    });
    let expected_types = pair_type_docs(&Classification {
        verdict: Verdict::Tractable, // irrelevant to pair typing
        preference: g.clone(),
        pair_types: classify_pairs(&g),
        witness: Witness::IncompleteUg { uncovered: vec![] },
    });
    c.ensure(report.pair_types == expected_types, || {
        "stored pair types differ from the preference graph".to_string()
    });

    match (&report.verdict[..], &report.witness) {
        ("OUTSIDE_ASSUMPTIONS", WitnessDoc::IncompleteUg { uncovered }) => {
            c.ensure(!g.is_ug_complete(), || {
                "OUTSIDE_ASSUMPTIONS claimed but UG is complete".to_string()
            });
            c.ensure(*uncovered == g.uncovered_pairs() && !uncovered.is_empty(), || {
                "uncovered pair list does not match the preference graph".to_string()
            });
        }
        ("NP_HARD", WitnessDoc::LocalConditionViolation {
            pair,
            pair_kind,
            arc,
            down_toward_b,
            down_toward_a,
            down,
            arithmetical,
        }) => {
            verify_local_violation(
                c, lang, &g, *pair, pair_kind, *arc, *down_toward_b, *down_toward_a, *down,
                *arithmetical,
            );
        }
        ("NP_HARD", WitnessDoc::OddCycle { t_graph, cycle }) => {
            verify_odd_cycle(c, lang, &g, t_graph, cycle);
        }
        ("TRACTABLE", WitnessDoc::Tractable { .. }) => {
            if let WitnessDoc::Tractable {
                m_pairs,
                com_f_max,
                t_graph,
                m1,
                m2,
                scope,
                phi,
                psi,
                arithmetical,
                arithmetical_pairs,
                arithmetical_used,
            } = &report.witness
            {
                verify_tractable(
                    c,
                    lang,
                    &g,
                    m_pairs,
                    com_f_max,
                    t_graph,
                    m1,
                    m2,
                    scope,
                    phi,
                    psi,
                    arithmetical,
                    arithmetical_pairs,
                    *arithmetical_used,
                );
            }
        }
        (v, _) => {
            c.failures
                .push(format!("verdict `{v}` does not match the witness kind"));
        }
    }

    if check.failures.is_empty() {
        Ok(())
    } else {
        Err(check.failures)
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_local_violation(
    c: &mut Check,
    lang: &ConstraintLanguage,
    g: &PreferenceGraph,
    pair: (Value, Value),
    pair_kind: &str,
    arc: Option<(Value, Value)>,
    down_toward_b: Option<bool>,
    down_toward_a: Option<bool>,
    down: Option<bool>,
    arithmetical: bool,
) {
    let (a, b) = pair;
    match pair_kind {
        "minhom" => {
            c.ensure(g.has_arc(a, b) && g.has_arc(b, a), || {
                format!("pair {pair:?} is not a MinHom pair in the preference graph")
            });
            let (dtb, dta) = (
                pair_query_down(lang, a, b),
                pair_query_down(lang, b, a),
            );
            let arith = pair_query_arithmetical(lang, a, b);
            c.ensure(down_toward_b == Some(dtb) && down_toward_a == Some(dta), || {
                format!("recorded down queries on {pair:?} do not reproduce")
            });
            c.ensure(arithmetical == arith, || {
                format!("recorded arithmetical query on {pair:?} does not reproduce")
            });
            c.ensure(!(dtb && dta) && !arith, || {
                format!("pair {pair:?} actually satisfies the local condition")
            });
        }
        "min" => {
            let Some((x, y)) = arc else {
                c.failures.push("min violation lacks its arc".to_string());
                return;
            };
            c.ensure(g.has_arc(x, y) && !g.has_arc(y, x), || {
                format!("({x},{y}) is not the unique arc of a min pair")
            });
            let d = pair_query_down(lang, x, y);
            let arith = pair_query_arithmetical(lang, x, y);
            c.ensure(down == Some(d), || {
                format!("recorded down query on ({x},{y}) does not reproduce")
            });
            c.ensure(arithmetical == arith, || {
                format!("recorded arithmetical query on ({x},{y}) does not reproduce")
            });
            c.ensure(!d && !arith, || {
                format!("arc ({x},{y}) actually satisfies the local condition")
            });
        }
        other => c
            .failures
            .push(format!("unknown pair kind `{other}` in violation")),
    }
}

fn verify_odd_cycle(
    c: &mut Check,
    lang: &ConstraintLanguage,
    g: &PreferenceGraph,
    t_graph: &TGraphDoc,
    cycle: &[(Value, Value)],
) {
    c.ensure(cycle.len() >= 3 && cycle.len() % 2 == 1, || {
        format!("cycle length {} is not odd (≥3)", cycle.len())
    });
    let t = t_graph.to_model();
    for &v in cycle {
        c.ensure(t.vertices.contains(&v), || {
            format!("cycle vertex {v:?} is not a stored T vertex")
        });
        let (x, y) = v;
        c.ensure(g.has_arc(x, y), || {
            format!("cycle vertex {v:?} is not an arc of the preference graph")
        });
        c.ensure(
            pair_query_down(lang, x, y) && pair_query_down(lang, y, x),
            || format!("cycle vertex {v:?} is not an orientation of an M pair"),
        );
    }
    for i in 0..cycle.len() {
        let v = cycle[i];
        let w = cycle[(i + 1) % cycle.len()];
        c.ensure(t.has_edge(v, w), || {
            format!("cycle step {v:?} → {w:?} is not a stored T edge")
        });
        c.ensure(!joint_down_query(lang, v, w), || {
            format!("cycle edge {v:?} — {w:?} has a joint down witness after all")
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_tractable(
    c: &mut Check,
    lang: &ConstraintLanguage,
    g: &PreferenceGraph,
    m_pairs: &[(Value, Value)],
    com_f_max: &[(Value, Value)],
    t_graph: &TGraphDoc,
    m1: &[(Value, Value)],
    m2: &[(Value, Value)],
    scope: &[(Value, Value)],
    phi: &OperationDoc,
    psi: &OperationDoc,
    arithmetical: &OperationDoc,
    arithmetical_pairs: &[(Value, Value)],
    arithmetical_used: bool,
) {
    let tables: Result<Vec<OperationTable>, String> = [phi, psi, arithmetical]
        .iter()
        .map(|doc| {
            let op = doc.to_model()?;
            if op.domain() != lang.domain() {
                return Err("operation domain differs from the language".to_string());
            }
            Ok(op)
        })
        .collect();
    let tables = match tables {
        Ok(t) => t,
        Err(e) => {
            c.failures.push(format!("stored operation table invalid: {e}"));
            return;
        }
    };
    let (phi, psi, m) = (&tables[0], &tables[1], &tables[2]);
    c.ensure(phi.arity() == 2 && psi.arity() == 2 && m.arity() == 3, || {
        "stored operations have wrong arities".to_string()
    });

    // Scope derivation from the stored commutativity set and the arcs.
    let com: std::collections::BTreeSet<(Value, Value)> = com_f_max.iter().copied().collect();
    let expected_scope: Vec<(Value, Value)> = g
        .domain()
        .ordered_pairs()
        .filter(|&(a, b)| com.contains(&(a.min(b), a.max(b))) && g.has_arc(a, b))
        .collect();
    c.ensure(scope == expected_scope, || {
        "stored scope is not Com°(f_max) ∩ E(R)".to_string()
    });

    // The three defining cases, entry-wise, plus preservation of every
    // relation by φ and ψ.
    let wtp = WeakTournamentPair {
        phi: phi.clone(),
        psi: psi.clone(),
        scope: scope.iter().copied().collect(),
    };
    if let Err(v) = wtp.verify(lang) {
        c.failures.push(format!("weak tournament pair check failed: {v}"));
    }

    // Every claimed commutative pair must be realized by the pair itself
    // (soundness of the stored commutativity set; maximality is the
    // classifier's concern, not the witness's).
    for &(a, b) in com_f_max {
        c.ensure(phi.commutative_on(a, b) || psi.commutative_on(a, b), || {
            format!("claimed commutative pair {{{a},{b}}} realized by neither φ nor ψ")
        });
    }

    // The arithmetical operation covers exactly the complement of the
    // commutativity set and preserves the language.
    let expected_arith: Vec<(Value, Value)> = g
        .domain()
        .unordered_pairs()
        .filter(|p| !com.contains(p))
        .collect();
    c.ensure(arithmetical_pairs == expected_arith, || {
        "stored arithmetical pair list is not the complement of Com(f_max)".to_string()
    });
    c.ensure(arithmetical_used == !expected_arith.is_empty(), || {
        "arithmetical_used flag inconsistent with the pair list".to_string()
    });
    for &(a, b) in arithmetical_pairs {
        c.ensure(m.arithmetical_on(a, b), || {
            format!("m is not arithmetical on {{{a},{b}}}")
        });
    }
    for rel in lang.relations() {
        c.ensure(crate::poly::preserves(m, rel), || {
            format!("m does not preserve `{}`", rel.name())
        });
    }

    // T graph structure and the stored bipartition.
    let m_set: std::collections::BTreeSet<(Value, Value)> = m_pairs.iter().copied().collect();
    c.ensure(m_set.iter().all(|p| com.contains(p)), || {
        "M pairs must lie inside Com(f_max)".to_string()
    });
    let expected_vertices: Vec<(Value, Value)> = g
        .domain()
        .ordered_pairs()
        .filter(|&(a, b)| m_set.contains(&(a.min(b), a.max(b))) && g.has_arc(a, b))
        .collect();
    c.ensure(t_graph.vertices == expected_vertices, || {
        "stored T vertices are not M° ∩ E(R)".to_string()
    });
    let vertex_set: std::collections::BTreeSet<(Value, Value)> =
        t_graph.vertices.iter().copied().collect();
    let mut union: Vec<(Value, Value)> = m1.iter().chain(m2).copied().collect();
    union.sort_unstable();
    let disjoint = m1.iter().all(|v| !m2.contains(v));
    c.ensure(
        disjoint && union.iter().copied().eq(vertex_set.iter().copied()),
        || "M1, M2 do not partition the T vertices".to_string(),
    );
    let t = t_graph.to_model();
    for &(v, w) in &t.edges {
        c.ensure(vertex_set.contains(&v) && vertex_set.contains(&w), || {
            format!("T edge {v:?} — {w:?} leaves the vertex set")
        });
        let same_side = (m1.contains(&v) && m1.contains(&w)) || (m2.contains(&v) && m2.contains(&w));
        c.ensure(!same_side, || {
            format!("T edge {v:?} — {w:?} is monochromatic under the bipartition")
        });
    }
}

/// Rebuilds a TRACTABLE classification from a verified report, so solving
/// can reuse stored witnesses instead of re-running the classifier.
pub fn classification_from_report(
    lang: &ConstraintLanguage,
    costs: &CostSet,
    report: &ReportDoc,
) -> Result<Classification, Vec<String>> {
    verify_report(lang, costs, report)?;
    let WitnessDoc::Tractable {
        m_pairs,
        com_f_max,
        t_graph,
        m1,
        m2,
        scope,
        phi,
        psi,
        arithmetical,
        arithmetical_used,
        ..
    } = &report.witness
    else {
        return Err(vec![format!(
            "report verdict is {}, not TRACTABLE",
            report.verdict
        )]);
    };
    let g = PreferenceGraph::build(costs, lang.domain());
    let to_op = |doc: &OperationDoc| doc.to_model().expect("verified above");
    Ok(Classification {
        verdict: Verdict::Tractable,
        pair_types: classify_pairs(&g),
        preference: g,
        witness: Witness::Tractable(Box::new(TractableWitness {
            m_pairs: m_pairs.iter().copied().collect(),
            com_f_max: com_f_max.iter().copied().collect(),
            t_graph: t_graph.to_model(),
            m1: m1.clone(),
            m2: m2.clone(),
            pair: WeakTournamentPair {
                phi: to_op(phi),
                psi: to_op(psi),
                scope: scope.iter().copied().collect(),
            },
            arithmetical: to_op(arithmetical),
            arithmetical_used: *arithmetical_used,
        })),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableValue {
    pub variable: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub version: String,
    /// "solve" for the pruning pipeline, "oracle" for brute force.
    pub source: String,
    /// "OPTIMAL" or "UNSAT".
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<VariableValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    pub inputs: Vec<InputDigest>,
    pub timing_ms: u64,
}

pub fn build_solution(
    inst: &Instance,
    outcome: Option<(Assignment, Measure)>,
    source: &str,
    version: &str,
    inputs: Vec<InputDigest>,
    timing_ms: u64,
) -> SolutionDoc {
    match outcome {
        Some((assignment, measure)) => SolutionDoc {
            version: version.to_string(),
            source: source.to_string(),
            status: "OPTIMAL".to_string(),
            assignment: Some(
                inst.variables()
                    .iter()
                    .zip(assignment.values())
                    .map(|(name, &value)| VariableValue {
                        variable: name.clone(),
                        value,
                    })
                    .collect(),
            ),
            measure: Some(measure),
            inputs,
            timing_ms,
        },
        None => SolutionDoc {
            version: version.to_string(),
            source: source.to_string(),
            status: "UNSAT".to_string(),
            assignment: None,
            measure: None,
            inputs,
            timing_ms,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::classify;
    use crate::model::{CostSet, Domain, Relation};

    fn dom(n: usize) -> Domain {
        Domain::new(n).unwrap()
    }

    fn leq_lang() -> ConstraintLanguage {
        ConstraintLanguage::new(
            dom(2),
            vec![Relation::new("leq", 2, dom(2), vec![vec![0, 0], vec![0, 1], vec![1, 1]]).unwrap()],
        )
        .unwrap()
    }

    fn or_lang() -> ConstraintLanguage {
        ConstraintLanguage::new(
            dom(2),
            vec![Relation::new("or", 2, dom(2), vec![vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap()],
        )
        .unwrap()
    }

    fn report_for(lang: &ConstraintLanguage, costs: &CostSet) -> ReportDoc {
        let c = classify(lang, costs).unwrap();
        build_report(&c, "test", vec![], 0)
    }

    #[test]
    fn tractable_report_round_trips_and_verifies() {
        let lang = leq_lang();
        let costs = CostSet::minhom(dom(2));
        let report = report_for(&lang, &costs);
        assert_eq!(report.verdict, "TRACTABLE");
        let json = crate::io::to_json_string(&report);
        let parsed: ReportDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(verify_report(&lang, &costs, &parsed), Ok(()));
    }

    #[test]
    fn np_hard_report_verifies() {
        let lang = or_lang();
        let costs = CostSet::new(dom(2), vec![vec![0, 1]]).unwrap();
        let report = report_for(&lang, &costs);
        assert_eq!(report.verdict, "NP_HARD");
        assert!(matches!(
            report.witness,
            WitnessDoc::LocalConditionViolation { .. }
        ));
        assert_eq!(verify_report(&lang, &costs, &report), Ok(()));
    }

    #[test]
    fn outside_assumptions_report_verifies() {
        let lang = ConstraintLanguage::unary_only(dom(3));
        let costs = CostSet::new(dom(3), vec![vec![1, 0, 0]]).unwrap();
        let report = report_for(&lang, &costs);
        assert_eq!(report.verdict, "OUTSIDE_ASSUMPTIONS");
        assert_eq!(verify_report(&lang, &costs, &report), Ok(()));
    }

    #[test]
    fn tampered_reports_are_rejected() {
        let lang = leq_lang();
        let costs = CostSet::minhom(dom(2));
        let good = report_for(&lang, &costs);

        // Wrong verdict string.
        let mut bad = good.clone();
        bad.verdict = "NP_HARD".to_string();
        assert!(verify_report(&lang, &costs, &bad).is_err());

        // Tampered φ table: swap toward a non-polymorphism or break the
        // case analysis.
        let mut bad = good.clone();
        if let WitnessDoc::Tractable { phi, .. } = &mut bad.witness {
            phi.table = vec![0, 0, 1, 1]; // first projection: breaks case 1
        }
        assert!(verify_report(&lang, &costs, &bad).is_err());

        // Tampered scope.
        let mut bad = good.clone();
        if let WitnessDoc::Tractable { scope, .. } = &mut bad.witness {
            scope.clear();
        }
        assert!(verify_report(&lang, &costs, &bad).is_err());

        // Report verified against different costs.
        let min_costs = CostSet::new(dom(2), vec![vec![0, 1]]).unwrap();
        assert!(verify_report(&lang, &min_costs, &good).is_err());
    }

    #[test]
    fn fabricated_violation_is_rejected() {
        // leq satisfies the local conditions; a fabricated violation
        // certificate must fail re-verification.
        let lang = leq_lang();
        let costs = CostSet::minhom(dom(2));
        let good = report_for(&lang, &costs);
        let fake = ReportDoc {
            verdict: "NP_HARD".to_string(),
            witness: WitnessDoc::LocalConditionViolation {
                pair: (0, 1),
                pair_kind: "minhom".to_string(),
                arc: None,
                down_toward_b: Some(false),
                down_toward_a: Some(false),
                down: None,
                arithmetical: false,
            },
            ..good
        };
        let errs = verify_report(&lang, &costs, &fake).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("do not reproduce")));
    }

    #[test]
    fn fabricated_odd_cycle_is_rejected() {
        let lang = leq_lang();
        let costs = CostSet::minhom(dom(2));
        let good = report_for(&lang, &costs);
        let fake = ReportDoc {
            verdict: "NP_HARD".to_string(),
            witness: WitnessDoc::OddCycle {
                t_graph: TGraphDoc {
                    vertices: vec![(0, 1), (1, 0)],
                    edges: vec![((0, 1), (1, 0))],
                },
                cycle: vec![(0, 1), (1, 0), (0, 1)],
            },
            ..good
        };
        assert!(verify_report(&lang, &costs, &fake).is_err());
    }

    #[test]
    fn classification_round_trips_through_report() {
        let lang = leq_lang();
        let costs = CostSet::minhom(dom(2));
        let original = classify(&lang, &costs).unwrap();
        let report = build_report(&original, "test", vec![], 0);
        let rebuilt = classification_from_report(&lang, &costs, &report).unwrap();
        assert_eq!(rebuilt, original);
    }

    #[test]
    fn solution_documents() {
        let lang = leq_lang();
        let inst = crate::model::Instance::new(
            lang,
            CostSet::minhom(dom(2)),
            vec!["u".into(), "v".into()],
            vec![(vec!["u".into(), "v".into()], "leq".into())],
            vec![vec![5, 1], vec![0, 3]],
        )
        .unwrap();
        let opt = crate::engine::brute_force_optimum(&inst).unwrap();
        let doc = build_solution(&inst, opt, "oracle", "test", vec![], 1);
        assert_eq!(doc.status, "OPTIMAL");
        assert_eq!(doc.measure, Some(4));
        assert_eq!(
            doc.assignment.as_ref().unwrap()[0],
            VariableValue {
                variable: "u".to_string(),
                value: 1
            }
        );
        let json = crate::io::to_json_string(&doc);
        let parsed: SolutionDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, doc);

        let unsat = build_solution(&inst, None, "solve", "test", vec![], 0);
        assert_eq!(unsat.status, "UNSAT");
        assert_eq!(unsat.assignment, None);
    }
}
