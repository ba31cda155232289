//! Hand-built scorer scenarios: small worlds paired with a gold derivation
//! and a flawed (or cleverly different) model transcript, each with the
//! score the evaluator must produce.
//!
//! The nine scenarios cover the behaviors the scorer is designed around:
//! order-robust credit (1, 2, 7), lemma-tolerant conclusions (3), full
//! credit for a verified shortcut (4), partial credit (5, 6, 7), a
//! miscalculation masked by a later `min` so the answer is right for the
//! wrong reason (1), an irrelevant citation replacing a required one (6),
//! an omitted operand fact (7), an entity misspelling (8), and a reversed
//! relation (9).
//!
//! Only available with the `fixtures` feature; the constructors panic on
//! internal inconsistency (they are test material, not input handling).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eval::{
    parse_summary, score, verify_step, Evaluation, InvalidReason, Rational, Ref, SampleWorld,
    Verdict,
};
use crate::gold::GoldStep;
use crate::model::{
    AggOp, Atom, Conclusion, Expression, Fact, Query, Rule, Token, Value, VarId,
};

/// One ready-made scoring scenario.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: &'static str,
    /// `fact_{i+1}` is `facts[i]`.
    pub facts: Vec<Fact>,
    /// `rule_{i+1}` is `rules[i]`.
    pub rules: Vec<Rule>,
    pub query: Query,
    pub answer: Value,
    /// Gold derivation as a transcript (summary block plus boxed answer).
    pub gold_text: &'static str,
    /// The transcript under evaluation.
    pub model_text: &'static str,
    /// Expected process accuracy, exact.
    pub expect_process: Rational,
    /// Expected answer correctness.
    pub expect_answer: bool,
    /// Expected per-step verdicts for `model_text`, in order; `None` means
    /// verified.
    pub expect_verdicts: Vec<Option<InvalidReason>>,
}

impl Case {
    /// Parses and verifies the gold transcript into gold steps, panicking
    /// if any gold step fails — that would mean the fixture itself is
    /// inconsistent.
    pub fn gold_steps(&self) -> Vec<GoldStep> {
        let summary = parse_summary(self.gold_text).expect("gold transcript has a summary block");
        assert!(
            summary.skipped.is_empty(),
            "{}: unparseable gold line: {:?}",
            self.name,
            summary.skipped
        );
        let mut verified = alloc::collections::BTreeMap::new();
        let mut steps = Vec::new();
        for step in &summary.steps {
            let verdict = verify_step(step, &self.facts, &self.rules, &verified);
            let Verdict::Verified(fact) = verdict else {
                panic!("{}: gold step failed: {} -> {verdict:?}", self.name, step.line);
            };
            verified.insert(step.index, fact.clone());
            let rule_id = step
                .deps
                .iter()
                .find_map(|d| match d {
                    Ref::Rule(k) => Some(*k),
                    _ => None,
                })
                .expect("gold step cites a rule");
            steps.push(GoldStep {
                index: step.index,
                rule_id,
                dep_fact_ids: step
                    .deps
                    .iter()
                    .filter_map(|d| match d {
                        Ref::Fact(k) => Some(*k),
                        _ => None,
                    })
                    .collect(),
                dep_int_ids: step
                    .deps
                    .iter()
                    .filter_map(|d| match d {
                        Ref::Int(k) => Some(*k),
                        _ => None,
                    })
                    .collect(),
                conclusion: fact,
                rendered: step.line.clone(),
            });
        }
        assert_eq!(
            steps.last().map(|s| &s.conclusion),
            Some(&Fact::attribute(
                self.query.entity.clone(),
                self.query.attribute.clone(),
                self.answer
            )),
            "{}: gold must end in the query conclusion",
            self.name
        );
        steps
    }

    /// Scores `model_text` against this case.
    pub fn evaluate(&self) -> Evaluation {
        let gold = self.gold_steps();
        let world = SampleWorld::new(&self.facts, &self.rules, &self.query, self.answer, &gold);
        let summary = parse_summary(self.model_text).expect("model transcript has a summary block");
        score(&world, &summary)
    }

    /// Scores the gold transcript against itself (must be full marks).
    pub fn evaluate_gold(&self) -> Evaluation {
        let gold = self.gold_steps();
        let world = SampleWorld::new(&self.facts, &self.rules, &self.query, self.answer, &gold);
        let summary = parse_summary(self.gold_text).expect("gold transcript has a summary block");
        score(&world, &summary)
    }
}

/// All nine scenarios, in order.
pub fn all() -> Vec<Case> {
    vec![
        case_1(),
        case_2(),
        case_3(),
        case_4(),
        case_5(),
        case_6(),
        case_7(),
        case_8(),
        case_9(),
    ]
}

fn t(s: &str) -> Token {
    Token::from(s)
}

fn attr(entity: &str, attribute: &str, value: Value) -> Fact {
    Fact::attribute(entity, attribute, value)
}

fn rel(relation: &str, subject: &str, object: &str) -> Fact {
    Fact::relation(relation, subject, object)
}

fn a_attr(var: usize, attribute: &str, value: Value) -> Atom {
    Atom::Attr {
        var: VarId(var),
        attribute: t(attribute),
        value,
    }
}

fn a_rel(relation: &str, subject: usize, object: usize) -> Atom {
    Atom::Rel {
        relation: t(relation),
        subject: VarId(subject),
        object: VarId(object),
    }
}

fn c_attr(var: usize, attribute: &str, expr: Expression) -> Conclusion {
    Conclusion::Attr {
        var: VarId(var),
        attribute: t(attribute),
        expr,
    }
}

fn c_rel(relation: &str, subject: usize, object: usize) -> Conclusion {
    Conclusion::Rel {
        relation: t(relation),
        subject: VarId(subject),
        object: VarId(object),
    }
}

fn calc(k: Value, var: usize, attribute: &str, b: Value) -> Expression {
    Expression::Calculation {
        k,
        var: VarId(var),
        attribute: t(attribute),
        b,
    }
}

fn retrieve(var: usize, attribute: &str) -> Expression {
    Expression::Retrieval {
        var: VarId(var),
        attribute: t(attribute),
    }
}

fn constant(c: Value) -> Expression {
    Expression::Constant { c }
}

fn agg(op: AggOp, left: Expression, right: Expression) -> Expression {
    Expression::Aggregation {
        op,
        left: alloc::boxed::Box::new(left),
        right: alloc::boxed::Box::new(right),
    }
}

fn query(entity: &str, attribute: &str) -> Query {
    Query {
        entity: t(entity),
        attribute: t(attribute),
    }
}

/// Pads uncited fact slots with inert attribute facts (no rule mentions
/// the padding attributes, so they can never matter).
fn fact_slots(len: usize, given: Vec<(usize, Fact)>) -> Vec<Fact> {
    const PAD: [&str; 18] = [
        "amber", "beige", "coral", "dusky", "ebony", "frosty", "golden", "hazel", "ivory",
        "jade", "khaki", "lilac", "maroon", "navy", "olive", "pearl", "quartz", "russet",
    ];
    let mut facts: Vec<Fact> = (0..len)
        .map(|i| attr("Wilbur", PAD[i % PAD.len()], (i + 1) as Value))
        .collect();
    for (id, fact) in given {
        facts[id - 1] = fact;
    }
    facts
}

/// Pads uncited rule slots with inert rules whose condition attribute no
/// fact carries.
fn rule_slots(len: usize, given: Vec<(usize, Vec<Atom>, Conclusion)>) -> Vec<Rule> {
    let mut rules: Vec<Rule> = (1..=len)
        .map(|id| Rule {
            id,
            condition: vec![Atom::Attr {
                var: VarId(0),
                attribute: Token::new(format!("dormant{id}")),
                value: 1,
            }],
            conclusion: Conclusion::Attr {
                var: VarId(0),
                attribute: Token::new(format!("latent{id}")),
                expr: constant(1),
            },
        })
        .collect();
    for (id, condition, conclusion) in given {
        rules[id - 1] = Rule {
            id,
            condition,
            conclusion,
        };
    }
    rules
}

/// A miscalculated intermediate (26047 instead of 25913) that a later
/// `min(...)` masks, so the final answer is right while two steps are not.
pub fn case_1() -> Case {
    let facts = fact_slots(
        15,
        vec![
            (1, attr("Arvie", "calm", 2)),
            (2, attr("Arvie", "eager", 5)),
            (3, attr("Arvie", "tidy", 4)),
            (4, rel("train", "Arvie", "Granville")),
            (5, attr("Arvie", "busy", 3)),
            (6, attr("Arvie", "silver", -92)),
            (7, attr("Arvie", "warm", 8)),
            (8, rel("admire", "Arvie", "Ruperta")),
            (10, attr("Arvie", "old", 1)),
            (11, attr("Arvie", "bright", 99)),
            (12, attr("Arvie", "deep", 9)),
            (13, attr("Granville", "fine", 3)),
            (14, attr("Arvie", "new", 7)),
            (15, attr("Arvie", "tall", 6)),
        ],
    );
    let rules = rule_slots(
        14,
        vec![
            (
                2,
                vec![
                    a_rel("train", 0, 2),
                    a_attr(0, "imposing", 6848),
                    a_rel("resubmit", 0, 1),
                    a_attr(0, "canadian", 25913),
                    a_attr(2, "fine", 3),
                ],
                c_attr(
                    2,
                    "withdrawn",
                    agg(AggOp::Min, calc(88, 0, "canadian", -96), constant(-69)),
                ),
            ),
            (
                6,
                vec![a_rel("admire", 0, 1), a_attr(0, "eager", 5)],
                c_rel("resubmit", 0, 1),
            ),
            (
                11,
                vec![
                    a_attr(0, "busy", 3),
                    a_attr(0, "silver", -92),
                    a_attr(0, "tidy", 4),
                    a_attr(0, "deep", 9),
                ],
                c_attr(0, "whole", calc(-71, 0, "silver", -57)),
            ),
            (
                13,
                vec![
                    a_attr(0, "old", 1),
                    a_attr(0, "new", 7),
                    a_attr(0, "tall", 6),
                    a_attr(0, "whole", 6475),
                ],
                c_attr(
                    0,
                    "canadian",
                    agg(AggOp::Subtraction, calc(4, 0, "whole", -67), constant(-80)),
                ),
            ),
            (
                14,
                vec![
                    a_attr(0, "bright", 99),
                    a_attr(0, "whole", 6475),
                    a_attr(0, "calm", 2),
                    a_attr(0, "warm", 8),
                ],
                c_attr(0, "imposing", calc(70, 0, "bright", -82)),
            ),
        ],
    );
    Case {
        name: "case 1: masked miscalculation",
        facts,
        rules,
        query: query("Granville", "withdrawn"),
        answer: -69,
        gold_text: r"Reasoning:
rule_6 & fact_2 & fact_8 => fact_i1: resubmit exists between Arvie and Ruperta.
rule_11 & fact_5 & fact_6 & fact_3 & fact_12 => fact_i2: Arvie's whole is -71 * -92 - 57 = 6475.
rule_14 & fact_11 & fact_i2 & fact_1 & fact_7 => fact_i3: Arvie's imposing is 70 * 99 - 82 = 6848.
rule_13 & fact_10 & fact_14 & fact_15 & fact_i2 => fact_i4: Arvie's canadian is subtraction(4 * 6475 - 67, -80) = 25913.
rule_2 & fact_4 & fact_i3 & fact_i1 & fact_i4 & fact_13 => fact_i5: Granville's withdrawn is min(88 * 25913 - 96, -69) = -69.
Answer: \boxed{-69}",
        model_text: r"Reasoning:
rule_11 & fact_3 & fact_6 & fact_5 & fact_12 => fact_i1: Arvie's whole is 6475.
rule_14 & fact_1 & fact_i1 & fact_11 & fact_7 => fact_i2: Arvie's imposing is 6848.
rule_6 & fact_8 & fact_2 => fact_i3: resubmit exists between Arvie and Ruperta.
rule_13 & fact_15 & fact_14 & fact_10 & fact_i1 => fact_i4: Arvie's canadian is 26047.
rule_2 & fact_i2 & fact_i3 & fact_4 & fact_i4 & fact_13 => fact_i5: Granville's withdrawn is -69.
Answer: \boxed{-69}",
        expect_process: Rational::new(3, 5),
        expect_answer: true,
        expect_verdicts: vec![
            None,
            None,
            None,
            Some(InvalidReason::WrongConclusion),
            Some(InvalidReason::UnverifiedDependency),
        ],
    }
}

/// Every step valid except the final multiplication, which is off by 96:
/// five of six intermediates earn credit, the answer none.
pub fn case_2() -> Case {
    let facts = fact_slots(
        18,
        vec![
            (1, attr("Suki", "pale", 1)),
            (2, attr("Suki", "vivid", 8)),
            (3, attr("Katrinka", "quick", 5)),
            (4, rel("head", "Suki", "Jeramie")),
            (5, rel("assist", "Jeramie", "Katrinka")),
            (6, attr("Marlyn", "dense", 86)),
            (7, attr("Jeramie", "windy", 4)),
            (8, rel("consult", "Jeramie", "Marlyn")),
            (9, attr("Suki", "humid", 53)),
            (10, attr("Suki", "proud", 2)),
            (11, attr("Katrinka", "shy", 2)),
            (12, attr("Suki", "sharp", 42)),
            (13, attr("Marlyn", "mild", 9)),
            (14, attr("Katrinka", "timid", -52)),
            (15, attr("Marlyn", "rough", 4)),
            (16, attr("Suki", "velvet", -79)),
            (17, attr("Suki", "plain", 7)),
            (18, attr("Suki", "brisk", 6)),
        ],
    );
    let rules = rule_slots(
        14,
        vec![
            (
                5,
                vec![
                    a_attr(0, "quick", 5),
                    a_attr(0, "timid", -52),
                    a_attr(0, "shy", 2),
                ],
                c_attr(0, "impossible", calc(7, 0, "timid", -74)),
            ),
            (
                6,
                vec![
                    a_attr(0, "executive", 3352),
                    a_rel("head", 0, 1),
                    a_attr(0, "proud", 2),
                    a_attr(1, "soaring", 183199),
                ],
                c_attr(0, "alternative", calc(-84, 1, "soaring", -48)),
            ),
            (
                7,
                vec![
                    a_attr(0, "sharp", 42),
                    a_attr(0, "acquired", -8253),
                    a_attr(0, "plain", 7),
                ],
                c_attr(0, "executive", calc(80, 0, "sharp", -8)),
            ),
            (
                10,
                vec![
                    a_attr(0, "mild", 9),
                    a_attr(0, "dense", 86),
                    a_attr(0, "rough", 4),
                ],
                c_attr(0, "acquired", calc(-65, 0, "dense", 39)),
            ),
            (
                11,
                vec![
                    a_rel("consult", 0, 1),
                    a_attr(1, "acquired", -5551),
                    a_rel("assist", 0, 2),
                    a_attr(2, "impossible", -438),
                    a_attr(0, "windy", 4),
                ],
                c_attr(
                    0,
                    "soaring",
                    agg(
                        AggOp::Subtraction,
                        calc(-33, 1, "acquired", -12),
                        constant(-28),
                    ),
                ),
            ),
            (
                14,
                vec![
                    a_attr(0, "brisk", 6),
                    a_attr(0, "pale", 1),
                    a_attr(0, "humid", 53),
                    a_attr(0, "velvet", -79),
                    a_attr(0, "vivid", 8),
                ],
                c_attr(
                    0,
                    "acquired",
                    agg(
                        AggOp::Addition,
                        calc(-66, 0, "humid", -82),
                        calc(60, 0, "velvet", 67),
                    ),
                ),
            ),
        ],
    );
    Case {
        name: "case 2: final-step miscalculation",
        facts,
        rules,
        query: query("Suki", "alternative"),
        answer: -15388764,
        gold_text: r"Reasoning:
rule_14 & fact_18 & fact_1 & fact_9 & fact_16 & fact_2 => fact_i1: Suki's acquired is addition(-66 * 53 - 82, 60 * -79 + 67) = -8253.
rule_5 & fact_3 & fact_14 & fact_11 => fact_i2: Katrinka's impossible is 7 * -52 - 74 = -438.
rule_10 & fact_13 & fact_6 & fact_15 => fact_i3: Marlyn's acquired is -65 * 86 + 39 = -5551.
rule_7 & fact_12 & fact_i1 & fact_17 => fact_i4: Suki's executive is 80 * 42 - 8 = 3352.
rule_11 & fact_8 & fact_i2 & fact_5 & fact_i3 & fact_7 => fact_i5: Jeramie's soaring is subtraction(-33 * -5551 - 12, -28) = 183199.
rule_6 & fact_i4 & fact_4 & fact_10 & fact_i5 => fact_i6: Suki's alternative is -84 * 183199 - 48 = -15388764.
Answer: \boxed{-15388764}",
        model_text: r"Reasoning:
rule_5 & fact_3 & fact_14 & fact_11 => fact_i1: Katrinka's impossible is -438.
rule_10 & fact_6 & fact_13 & fact_15 => fact_i2: Marlyn's acquired is -5551.
rule_11 & fact_5 & fact_i1 & fact_8 & fact_i2 & fact_7 => fact_i3: Jeramie's soaring is 183199.
rule_14 & fact_18 & fact_1 & fact_9 & fact_16 & fact_2 => fact_i4: Suki's acquired is -8253.
rule_7 & fact_12 & fact_i4 & fact_17 => fact_i5: Suki's executive is 3352.
rule_6 & fact_4 & fact_10 & fact_i5 & fact_i3 => fact_i6: Suki's alternative is -15388668.
Answer: \boxed{-15388668}",
        expect_process: Rational::new(5, 6),
        expect_answer: false,
        expect_verdicts: vec![
            None,
            None,
            None,
            None,
            None,
            Some(InvalidReason::WrongConclusion),
        ],
    }
}

/// The model writes `hampers` where the world says `hamper`; the shared
/// lemma makes the step verify, and the canonical spelling is recorded.
pub fn case_3() -> Case {
    let facts = fact_slots(
        15,
        vec![
            (2, attr("Ed", "gentle", 3)),
            (15, rel("view", "Ed", "Claresta")),
        ],
    );
    let rules = rule_slots(
        13,
        vec![
            (
                4,
                vec![a_rel("hamper", 0, 1), a_attr(0, "gentle", 3)],
                c_attr(0, "reported", calc(9, 0, "gentle", 9)),
            ),
            (8, vec![a_rel("stack", 0, 1)], c_rel("hamper", 0, 1)),
            (13, vec![a_rel("view", 0, 1)], c_rel("stack", 0, 1)),
        ],
    );
    Case {
        name: "case 3: inflected relation",
        facts,
        rules,
        query: query("Ed", "reported"),
        answer: 36,
        gold_text: r"Reasoning:
rule_13 & fact_15 => fact_i1: stack exists between Ed and Claresta.
rule_8 & fact_i1 => fact_i2: hamper exists between Ed and Claresta.
rule_4 & fact_i2 & fact_2 => fact_i3: Ed's reported is 9 * 3 + 9 = 36.
Answer: \boxed{36}",
        model_text: r"Reasoning:
rule_13 & fact_15 => fact_i1: stack exists between Ed and Claresta.
rule_8 & fact_i1 => fact_i2: hampers exists between Ed and Claresta.
rule_4 & fact_i2 & fact_2 => fact_i3: Ed's reported is 36.
Answer: \boxed{36}",
        expect_process: Rational::ONE,
        expect_answer: true,
        expect_verdicts: vec![None, None, None],
    }
}

/// A two-step shortcut: the model reaches the query through a base
/// `whipsaw` fact the gold path re-derives, every step checks out, and the
/// answer is right — full credit for a different valid path.
pub fn case_4() -> Case {
    let facts = fact_slots(
        15,
        vec![
            (2, attr("Charlton", "brave", 7)),
            (3, rel("trust", "Tedie", "Charlton")),
            (4, attr("Charlton", "cool", 5)),
            (5, attr("Charlton", "bold", 6)),
            (7, attr("Charlton", "glad", 4)),
            (8, rel("meet", "Astrid", "Charlton")),
            (9, rel("whipsaw", "Astrid", "Charlton")),
            (13, attr("Charlton", "wild", 8)),
            (14, attr("Charlton", "neat", 2)),
            (15, attr("Tedie", "keen", 1)),
        ],
    );
    let rules = rule_slots(
        14,
        vec![
            (
                5,
                vec![
                    a_attr(0, "brave", 7),
                    a_rel("whipsaw", 1, 0),
                    a_attr(0, "side", 34),
                ],
                c_attr(0, "unusual", retrieve(0, "side")),
            ),
            (
                9,
                vec![
                    a_attr(0, "regional", 78),
                    a_rel("assume", 1, 0),
                    a_rel("meet", 2, 0),
                ],
                c_rel("whipsaw", 2, 0),
            ),
            (
                10,
                vec![
                    a_attr(0, "cool", 5),
                    a_rel("whipsaw", 1, 0),
                    a_attr(0, "side", 34),
                ],
                c_attr(0, "regional", calc(2, 0, "side", 10)),
            ),
            (
                11,
                vec![
                    a_rel("trust", 0, 1),
                    a_attr(0, "keen", 1),
                    a_attr(1, "glad", 4),
                ],
                c_rel("assume", 0, 1),
            ),
            (
                14,
                vec![
                    a_attr(0, "neat", 2),
                    a_attr(0, "bold", 6),
                    a_attr(0, "wild", 8),
                ],
                c_attr(0, "side", calc(4, 0, "bold", 10)),
            ),
        ],
    );
    Case {
        name: "case 4: verified shortcut",
        facts,
        rules,
        query: query("Charlton", "unusual"),
        answer: 34,
        gold_text: r"Reasoning:
rule_14 & fact_14 & fact_5 & fact_13 => fact_i1: Charlton's side is 4 * 6 + 10 = 34.
rule_11 & fact_3 & fact_15 & fact_7 => fact_i2: assume exists between Tedie and Charlton.
rule_10 & fact_4 & fact_9 & fact_i1 => fact_i3: Charlton's regional is 2 * 34 + 10 = 78.
rule_9 & fact_i3 & fact_8 & fact_i2 => fact_i4: whipsaw exists between Astrid and Charlton.
rule_5 & fact_2 & fact_i4 & fact_i1 => fact_i5: Charlton's unusual is 34.
Answer: \boxed{34}",
        model_text: r"Reasoning:
rule_14 & fact_14 & fact_5 & fact_13 => fact_i1: Charlton's side is 34.
rule_5 & fact_2 & fact_9 & fact_i1 => fact_i2: Charlton's unusual is 34.
Answer: \boxed{34}",
        expect_process: Rational::ONE,
        expect_answer: true,
        expect_verdicts: vec![None, None],
    }
}

/// One genuinely valid intermediate among restatements and a conclusion
/// pinned to the wrong entity: half credit, wrong answer.
pub fn case_5() -> Case {
    let facts = fact_slots(
        10,
        vec![
            (3, attr("Maryann", "annual", 4)),
            (10, rel("admire", "Bengt", "Maryann")),
        ],
    );
    let rules = rule_slots(
        13,
        vec![
            (
                4,
                vec![a_attr(0, "annual", 4)],
                c_attr(0, "humble", constant(9)),
            ),
            (5, vec![a_rel("admire", 0, 1)], c_rel("finalize", 0, 1)),
            (
                13,
                vec![a_rel("finalize", 0, 1)],
                c_attr(1, "iranian", constant(2)),
            ),
        ],
    );
    Case {
        name: "case 5: partial credit",
        facts,
        rules,
        query: query("Maryann", "iranian"),
        answer: 2,
        gold_text: r"Reasoning:
rule_5 & fact_10 => fact_i1: finalize exists between Bengt and Maryann.
rule_13 & fact_i1 => fact_i2: Maryann's iranian is 2.
Answer: \boxed{2}",
        model_text: r"Reasoning:
fact_3 => fact_i1: Maryann's annual is 4.
rule_5 & fact_10 => fact_i2: finalize exists between Bengt and Maryann.
rule_13 & fact_i2 => fact_i3: Bengt's iranian is 2.
rule_4 & fact_3 => fact_i4: Maryann's iranian is 4.
Answer: \boxed{4}",
        expect_process: Rational::new(1, 2),
        expect_answer: false,
        expect_verdicts: vec![
            Some(InvalidReason::MissingRule),
            None,
            Some(InvalidReason::WrongConclusion),
            Some(InvalidReason::WrongConclusion),
        ],
    }
}

/// The model cites an irrelevant fact in place of the one carrying a
/// required operand: right value, unverifiable application.
pub fn case_6() -> Case {
    let facts = fact_slots(
        7,
        vec![
            (2, attr("Hetty", "faded", 5)),
            (3, attr("Hetty", "mellow", -46)),
            (4, attr("Hetty", "clever", 33)),
            (7, attr("Hetty", "polite", 11)),
        ],
    );
    let rules = rule_slots(
        6,
        vec![
            (
                5,
                vec![a_attr(0, "clever", 33), a_attr(0, "polite", 11)],
                c_attr(0, "legal", calc(-95, 0, "clever", -16)),
            ),
            (
                6,
                vec![a_attr(0, "legal", -3151), a_attr(0, "mellow", -46)],
                c_attr(
                    0,
                    "willing",
                    agg(AggOp::Addition, retrieve(0, "legal"), retrieve(0, "mellow")),
                ),
            ),
        ],
    );
    Case {
        name: "case 6: irrelevant citation",
        facts,
        rules,
        query: query("Hetty", "willing"),
        answer: -3197,
        gold_text: r"Reasoning:
rule_5 & fact_4 & fact_7 => fact_i1: Hetty's legal is -95 * 33 - 16 = -3151.
rule_6 & fact_3 & fact_i1 => fact_i2: Hetty's willing is addition(-3151, -46) = -3197.
Answer: \boxed{-3197}",
        model_text: r"Reasoning:
rule_5 & fact_4 & fact_7 => fact_i1: Hetty's legal is -3151.
rule_6 & fact_2 & fact_i1 => fact_i2: Hetty's willing is -3197.
Answer: \boxed{-3197}",
        expect_process: Rational::new(1, 2),
        expect_answer: true,
        expect_verdicts: vec![None, Some(InvalidReason::ConditionUnsatisfied)],
    }
}

/// The model omits the fact supplying `max`'s second operand; the step
/// fails, and the final step fails with it despite both stating correct
/// values.
pub fn case_7() -> Case {
    let facts = fact_slots(
        13,
        vec![
            (1, attr("Garey", "firm", 3)),
            (2, attr("Garey", "calm", 9)),
            (3, attr("Garey", "least", 1)),
            (4, attr("Garey", "deft", 7)),
            (8, rel("praise", "Garey", "Aura")),
            (9, attr("Aura", "crisp", 5)),
            (10, attr("Garey", "total", 52)),
            (12, rel("warn", "Aura", "Lonnie")),
            (13, attr("Garey", "spry", -17)),
        ],
    );
    let rules = rule_slots(
        13,
        vec![
            (
                1,
                vec![
                    a_attr(0, "liquid", 52),
                    a_rel("scrutinize", 0, 1),
                    a_rel("waive", 1, 2),
                    a_attr(0, "spry", -17),
                ],
                c_attr(0, "mean", calc(-31, 0, "spry", 76)),
            ),
            (
                3,
                vec![a_rel("praise", 0, 1), a_attr(0, "deft", 7)],
                c_rel("scrutinize", 0, 1),
            ),
            (
                7,
                vec![
                    a_attr(0, "total", 52),
                    a_attr(0, "least", 1),
                    a_attr(0, "firm", 3),
                    a_attr(0, "calm", 9),
                ],
                c_attr(
                    0,
                    "liquid",
                    agg(AggOp::Max, retrieve(0, "total"), retrieve(0, "least")),
                ),
            ),
            (
                13,
                vec![a_rel("warn", 0, 1), a_attr(0, "crisp", 5)],
                c_rel("waive", 0, 1),
            ),
        ],
    );
    Case {
        name: "case 7: omitted citation",
        facts,
        rules,
        query: query("Garey", "mean"),
        answer: 603,
        gold_text: r"Reasoning:
rule_7 & fact_10 & fact_2 & fact_1 & fact_3 => fact_i1: Garey's liquid is max(52, 1) = 52.
rule_3 & fact_8 & fact_4 => fact_i2: scrutinize exists between Garey and Aura.
rule_13 & fact_12 & fact_9 => fact_i3: waive exists between Aura and Lonnie.
rule_1 & fact_i1 & fact_i2 & fact_i3 & fact_13 => fact_i4: Garey's mean is -31 * -17 + 76 = 603.
Answer: \boxed{603}",
        model_text: r"Reasoning:
fact_4 & fact_8 & rule_3 => fact_i1: scrutinize exists between Garey and Aura.
fact_12 & fact_9 & rule_13 => fact_i2: waive exists between Aura and Lonnie.
fact_10 & fact_1 & fact_2 & rule_7 => fact_i3: Garey's liquid is 52.
fact_i1 & fact_i2 & fact_13 & fact_i3 & rule_1 => fact_i4: Garey's mean is 603.
Answer: \boxed{603}",
        expect_process: Rational::new(2, 4),
        expect_answer: true,
        expect_verdicts: vec![
            None,
            None,
            Some(InvalidReason::ConditionUnsatisfied),
            Some(InvalidReason::UnverifiedDependency),
        ],
    }
}

/// `Bradley` is not `Bradly`: an entity misspelling voids the step and
/// everything downstream, even though the arithmetic and the final answer
/// are right.
pub fn case_8() -> Case {
    let facts = fact_slots(
        9,
        vec![
            (3, attr("Bradly", "misty", 5)),
            (4, attr("Bradly", "tepid", 3)),
            (9, attr("Bradly", "stormy", -29)),
        ],
    );
    let rules = rule_slots(
        15,
        vec![
            (
                12,
                vec![a_attr(0, "accepting", -1132), a_attr(0, "misty", 5)],
                c_attr(0, "conditional", calc(-93, 0, "accepting", -25)),
            ),
            (
                15,
                vec![a_attr(0, "stormy", -29), a_attr(0, "tepid", 3)],
                c_attr(0, "accepting", calc(42, 0, "stormy", 86)),
            ),
        ],
    );
    Case {
        name: "case 8: entity misspelling",
        facts,
        rules,
        query: query("Bradly", "conditional"),
        answer: 105251,
        gold_text: r"Reasoning:
rule_15 & fact_9 & fact_4 => fact_i1: Bradly's accepting is 42 * -29 + 86 = -1132.
rule_12 & fact_3 & fact_i1 => fact_i2: Bradly's conditional is -93 * -1132 - 25 = 105251.
Answer: \boxed{105251}",
        model_text: r"Reasoning:
rule_15 & fact_9 & fact_4 => fact_i1: Bradley's accepting is -1132.
rule_12 & fact_3 & fact_i1 => fact_i2: Bradly's conditional is 105251.
Answer: \boxed{105251}",
        expect_process: Rational::new(0, 2),
        expect_answer: true,
        expect_verdicts: vec![
            Some(InvalidReason::WrongConclusion),
            Some(InvalidReason::UnverifiedDependency),
        ],
    }
}

/// The model reverses `unsettle` and drags the final step down with it;
/// only the middle retrieval earns credit.
pub fn case_9() -> Case {
    let facts = fact_slots(
        9,
        vec![
            (5, rel("text", "Joscelin", "Maryse")),
            (9, rel("text", "Joscelin", "Clementia")),
        ],
    );
    let rules = rule_slots(
        14,
        vec![
            (
                1,
                vec![a_rel("unsettle", 0, 1), a_attr(0, "go", 7)],
                c_attr(1, "first", retrieve(0, "go")),
            ),
            (
                2,
                vec![a_rel("text", 0, 1)],
                c_attr(0, "go", constant(7)),
            ),
            (9, vec![a_rel("text", 0, 1)], c_rel("unsettle", 0, 1)),
            (14, vec![a_rel("text", 0, 1)], c_rel("unsettle", 0, 1)),
        ],
    );
    Case {
        name: "case 9: reversed relation",
        facts,
        rules,
        query: query("Clementia", "first"),
        answer: 7,
        gold_text: r"Reasoning:
rule_14 & fact_9 => fact_i1: unsettle exists between Joscelin and Clementia.
rule_2 & fact_5 => fact_i2: Joscelin's go is 7.
rule_1 & fact_i1 & fact_i2 => fact_i3: Clementia's first is 7.
Answer: \boxed{7}",
        model_text: r"Reasoning:
fact_9 & rule_9 => fact_i1: unsettle exists between Clementia and Joscelin.
rule_2 & fact_9 => fact_i2: Joscelin's go is 7.
fact_i1 & rule_1 & fact_i2 => fact_i3: Clementia's first is 7.
Answer: \boxed{7}",
        expect_process: Rational::new(1, 3),
        expect_answer: true,
        expect_verdicts: vec![
            Some(InvalidReason::DirectionReversed),
            None,
            Some(InvalidReason::UnverifiedDependency),
        ],
    }
}
