//! Final numbering and the gold reasoning process.
//!
//! A finished construction still lists its support facts first and its
//! derivation rules in creation order, which would leak which items matter.
//! [`finalize`] shuffles facts and rules into presentation order — the
//! order that defines `fact_N` / `rule_N` ids — and remaps the derivation
//! nodes accordingly. [`derive_gold`] then replays the nodes in topological
//! order, emitting one numbered step per rule application:
//!
//! ```text
//! rule_13 & fact_10 & fact_14 & fact_i2 => fact_i4: Arvie's canadian is 4 * 6475 - 67 = 25847.
//! ```
//!
//! Attribute conclusions show their arithmetic (`k * x + b = v`,
//! `max(l, r) = v`) when the rule computes rather than copies; relation
//! conclusions read `rel exists between A and B`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{Expression, Fact, Query, Rule, Value};
use crate::synth::{Construction, DepRef, RuleNode};

/// A complete, numbered reasoning world: presentation order defines ids.
#[derive(Clone, Debug)]
pub struct ReasoningDag {
    /// `fact_{i+1}` is `facts[i]`.
    pub facts: Vec<Fact>,
    /// `rule_{i+1}` is `rules[i]`; each rule's `id` equals its 1-based slot.
    pub rules: Vec<Rule>,
    /// Topologically ordered derivation; `fact_i{n+1}` is `nodes[n]`; the
    /// last node concludes the query.
    pub nodes: Vec<RuleNode>,
    pub query: Query,
    pub answer: Value,
    pub target_depth: usize,
}

/// One gold reasoning step, fully numbered and rendered.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GoldStep {
    /// 1-based intermediate id (`fact_i3` has index 3).
    pub index: usize,
    /// 1-based rule id.
    pub rule_id: usize,
    /// 1-based ids of base facts this application relies on.
    pub dep_fact_ids: Vec<usize>,
    /// 1-based indices of earlier steps this application relies on; all
    /// strictly less than `index`.
    pub dep_int_ids: Vec<usize>,
    /// The derived fact, with attribute values fully evaluated.
    pub conclusion: Fact,
    /// Canonical line, e.g.
    /// `rule_5 & fact_4 & fact_7 => fact_i1: Hetty's legal is -95 * 33 - 16 = -3151.`
    pub rendered: String,
}

fn shuffled_positions<R: Rng>(len: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    // order[new] = old; invert to map old -> new.
    let mut position = alloc::vec![0usize; len];
    for (new, old) in order.iter().enumerate() {
        position[*old] = new;
    }
    position
}

/// Shuffles facts and rules into presentation order and remaps the
/// derivation nodes. Gold and distraction items end up interleaved, so ids
/// carry no signal about relevance.
pub fn finalize<R: Rng>(construction: &Construction, rng: &mut R) -> ReasoningDag {
    let fact_pos = shuffled_positions(construction.facts.len(), rng);
    let rule_pos = shuffled_positions(construction.rules.len(), rng);

    let mut facts: Vec<Fact> = construction.facts.clone();
    for (old, fact) in construction.facts.iter().enumerate() {
        facts[fact_pos[old]] = fact.clone();
    }
    let mut rules: Vec<Rule> = construction.rules.clone();
    for (old, rule) in construction.rules.iter().enumerate() {
        let mut rule = rule.clone();
        rule.id = rule_pos[old] + 1;
        rules[rule_pos[old]] = rule;
    }
    let nodes = construction
        .nodes
        .iter()
        .map(|node| RuleNode {
            rule_index: rule_pos[node.rule_index],
            deps: node
                .deps
                .iter()
                .map(|dep| match dep {
                    DepRef::Fact(i) => DepRef::Fact(fact_pos[*i]),
                    DepRef::Int(i) => DepRef::Int(*i),
                })
                .collect(),
            conclusion: node.conclusion.clone(),
            operand_values: node.operand_values.clone(),
        })
        .collect();

    ReasoningDag {
        facts,
        rules,
        nodes,
        query: construction.query.clone(),
        answer: construction.answer,
        target_depth: construction.target_depth,
    }
}

/// Renders the value part of an attribute conclusion. Copies (constants and
/// retrievals) show the bare value; calculations and aggregations show the
/// arithmetic with operand values inlined, then `= value`.
fn render_arithmetic(expr: &Expression, operand_values: &[Value], value: Value) -> String {
    use core::fmt::Write;
    let mut next = 0usize;
    let mut leaf = |e: &Expression| -> String {
        let mut s = String::new();
        match e {
            Expression::Constant { c } => write!(s, "{c}").unwrap(),
            Expression::Retrieval { .. } => {
                write!(s, "{}", operand_values[next]).unwrap();
                next += 1;
            }
            Expression::Calculation { k, b, .. } => {
                let x = operand_values[next];
                next += 1;
                if *b < 0 {
                    write!(s, "{k} * {x} - {}", -b).unwrap();
                } else {
                    write!(s, "{k} * {x} + {b}").unwrap();
                }
            }
            Expression::Aggregation { .. } => unreachable!("aggregations do not nest"),
        }
        s
    };
    match expr {
        Expression::Constant { .. } | Expression::Retrieval { .. } => {
            let mut s = String::new();
            write!(s, "{value}").unwrap();
            s
        }
        Expression::Calculation { .. } => {
            let mut s = leaf(expr);
            write!(s, " = {value}").unwrap();
            s
        }
        Expression::Aggregation { op, left, right } => {
            let l = leaf(left);
            let r = leaf(right);
            let mut s = String::new();
            write!(s, "{}({l}, {r}) = {value}", op.name()).unwrap();
            s
        }
    }
}

/// Renders one step's conclusion clause (no trailing period).
fn render_conclusion(node: &RuleNode, rule: &Rule) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    match &node.conclusion {
        Fact::Relation {
            relation,
            subject,
            object,
        } => {
            write!(s, "{relation} exists between {subject} and {object}").unwrap();
        }
        Fact::Attribute {
            entity,
            attribute,
            value,
        } => {
            let arithmetic = match &rule.conclusion {
                crate::model::Conclusion::Attr { expr, .. } => {
                    render_arithmetic(expr, &node.operand_values, *value)
                }
                crate::model::Conclusion::Rel { .. } => {
                    unreachable!("attribute conclusion from relation rule")
                }
            };
            write!(s, "{entity}'s {attribute} is {arithmetic}").unwrap();
        }
    }
    s
}

/// Replays the derivation into numbered gold steps plus the final answer.
/// Step `n` cites only base facts and steps `< n`; the last step concludes
/// the query.
pub fn derive_gold(dag: &ReasoningDag) -> (Vec<GoldStep>, Value) {
    use core::fmt::Write;
    let steps = dag
        .nodes
        .iter()
        .enumerate()
        .map(|(n, node)| {
            let rule = &dag.rules[node.rule_index];
            let rule_id = node.rule_index + 1;
            let mut dep_fact_ids = Vec::new();
            let mut dep_int_ids = Vec::new();
            let mut rendered = String::new();
            write!(rendered, "rule_{rule_id}").unwrap();
            for dep in &node.deps {
                match dep {
                    DepRef::Fact(i) => {
                        dep_fact_ids.push(i + 1);
                        write!(rendered, " & fact_{}", i + 1).unwrap();
                    }
                    DepRef::Int(i) => {
                        debug_assert!(*i < n, "step {n} cites later step {i}");
                        dep_int_ids.push(i + 1);
                        write!(rendered, " & fact_i{}", i + 1).unwrap();
                    }
                }
            }
            write!(
                rendered,
                " => fact_i{}: {}.",
                n + 1,
                render_conclusion(node, rule)
            )
            .unwrap();
            GoldStep {
                index: n + 1,
                rule_id,
                dep_fact_ids,
                dep_int_ids,
                conclusion: node.conclusion.clone(),
                rendered,
            }
        })
        .collect();
    (steps, dag.answer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{closure, FactSet};
    use crate::model::{AggOp, Conclusion, Token, VarId};
    use crate::synth::{construct_dag, CountSpec, SynthesisConfig};
    use crate::vocab::WorldElements;
    use alloc::boxed::Box;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tok(s: &str) -> Token {
        Token::from(s)
    }

    fn elements() -> WorldElements {
        WorldElements {
            entities: ["Ada", "Ben", "Cleo", "Dov", "Eir", "Fay"]
                .iter()
                .map(|s| tok(s))
                .collect(),
            attributes: [
                "bold", "calm", "deep", "eager", "fond", "grim", "halt", "iris", "jolt", "keen",
            ]
            .iter()
            .map(|s| tok(s))
            .collect(),
            relations: ["admires", "blocks", "chases", "defies"]
                .iter()
                .map(|s| tok(s))
                .collect(),
        }
    }

    fn config() -> SynthesisConfig {
        SynthesisConfig {
            n_entities: 6,
            n_attributes: 10,
            n_relations: 4,
            n_facts: CountSpec::Fixed(15),
            n_rules: CountSpec::Fixed(15),
            depth_range: (2, 4),
            condition_count: (2, 3),
            expr_weights: [1, 1, 1, 1],
            agg_weights: [1, 1, 1],
            operand_range: (-100, 100),
            size: 1,
            seed: 0,
        }
    }

    fn build(seed: u64) -> ReasoningDag {
        let els = elements();
        let cfg = config();
        let q = crate::model::Query {
            entity: tok("Ada"),
            attribute: tok("bold"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = construct_dag(&els, &q, &cfg, &mut rng).unwrap();
        finalize(&c, &mut rng)
    }

    #[test]
    fn numbering_survives_the_shuffle() {
        for seed in 0..30 {
            let dag = build(seed);
            let (steps, answer) = derive_gold(&dag);
            assert_eq!(steps.len(), dag.target_depth);
            let last = steps.last().unwrap();
            assert_eq!(
                last.conclusion,
                Fact::attribute(dag.query.entity.clone(), dag.query.attribute.clone(), answer)
            );
            for (i, rule) in dag.rules.iter().enumerate() {
                assert_eq!(rule.id, i + 1);
            }
            for step in &steps {
                assert!(step.rule_id >= 1 && step.rule_id <= dag.rules.len());
                for f in &step.dep_fact_ids {
                    assert!(*f >= 1 && *f <= dag.facts.len());
                }
                for d in &step.dep_int_ids {
                    assert!(*d < step.index, "forward citation in step {}", step.index);
                }
                // Replaying the cited rule's conclusion must reproduce the
                // step's fact when run over the full world.
                let facts = FactSet::from_facts(&dag.facts).unwrap();
                let derived = closure(&facts, &dag.rules).unwrap();
                assert!(derived.contains(&step.conclusion));
            }
        }
    }

    #[test]
    fn rendered_lines_follow_the_canonical_shape() {
        let dag = build(12);
        let (steps, _) = derive_gold(&dag);
        for step in &steps {
            let rendered = &step.rendered;
            assert!(
                rendered.starts_with(&alloc::format!("rule_{}", step.rule_id)),
                "{rendered}"
            );
            assert!(rendered.contains(" => fact_i"), "{rendered}");
            assert!(rendered.ends_with('.'), "{rendered}");
            match &step.conclusion {
                Fact::Relation { .. } => assert!(rendered.contains(" exists between ")),
                Fact::Attribute { .. } => assert!(rendered.contains("'s ")),
            }
        }
    }

    #[test]
    fn arithmetic_annotations_render_by_family() {
        let values = |expr: &Expression, ops: &[Value], v: Value| {
            render_arithmetic(expr, ops, v)
        };
        let calc_pos = Expression::Calculation {
            k: 4,
            var: VarId(0),
            attribute: tok("whole"),
            b: -67,
        };
        assert_eq!(values(&calc_pos, &[6475], 25833), "4 * 6475 - 67 = 25833");
        let calc_add = Expression::Calculation {
            k: 9,
            var: VarId(0),
            attribute: tok("x"),
            b: 9,
        };
        assert_eq!(values(&calc_add, &[3], 36), "9 * 3 + 9 = 36");
        let agg = Expression::Aggregation {
            op: AggOp::Subtraction,
            left: Box::new(Expression::Calculation {
                k: 4,
                var: VarId(0),
                attribute: tok("whole"),
                b: -67,
            }),
            right: Box::new(Expression::Constant { c: -80 }),
        };
        assert_eq!(
            values(&agg, &[6475], 25913),
            "subtraction(4 * 6475 - 67, -80) = 25913"
        );
        let retrieval = Expression::Retrieval {
            var: VarId(0),
            attribute: tok("side"),
        };
        assert_eq!(values(&retrieval, &[34], 34), "34");
        let max = Expression::Aggregation {
            op: AggOp::Max,
            left: Box::new(Expression::Retrieval {
                var: VarId(0),
                attribute: tok("a"),
            }),
            right: Box::new(Expression::Retrieval {
                var: VarId(1),
                attribute: tok("b"),
            }),
        };
        assert_eq!(values(&max, &[52, 1], 52), "max(52, 1) = 52");
    }

    #[test]
    fn relation_steps_name_both_endpoints() {
        let node = RuleNode {
            rule_index: 0,
            deps: vec![],
            conclusion: Fact::relation(tok("resubmit"), tok("Arvie"), tok("Ruperta")),
            operand_values: vec![],
        };
        let rule = Rule {
            id: 1,
            condition: vec![crate::model::Atom::Attr {
                var: VarId(0),
                attribute: tok("x"),
                value: 1,
            }],
            conclusion: Conclusion::Rel {
                relation: tok("resubmit"),
                subject: VarId(0),
                object: VarId(1),
            },
        };
        assert_eq!(
            render_conclusion(&node, &rule),
            "resubmit exists between Arvie and Ruperta"
        );
    }
}
