//! Transcript parsing and step-level scoring.
//!
//! A model transcript is expected to end with a summary block:
//!
//! ```text
//! Reasoning:
//! rule_15 & fact_13 & fact_4 => int_1: reject exists between Sterne and Beilul.
//! int_1 & rule_17 & fact_2 => int_2: Sterne's incredible is 45.
//! Answer: \boxed{45}
//! ```
//!
//! [`parse_summary`] reads the **last** such block (models often restate
//! their reasoning; the final statement wins), accepting both `int_N` and
//! `fact_iN` as intermediate ids and tolerating the rule citation anywhere
//! in the dependency list. [`verify_step`] then re-derives each step from
//! nothing but its citations: the step is valid only if the cited rule,
//! applied to the cited facts and previously verified intermediates under
//! some variable binding, produces exactly the stated conclusion.
//! [`score`] turns the verified set into a process-accuracy fraction over
//! the gold derivation, with full credit for any fully verified alternative
//! path that ends in the correct answer.
//!
//! Verification is a fixpoint over the summary, not a single in-order
//! sweep, so reordering steps (with consistently renumbered intermediate
//! ids) never changes the outcome.
//!
//! Matching is deliberately asymmetric: entity names must match exactly up
//! to ASCII case, while attribute and relation words are compared by lemma
//! (`hampers` ~ `hamper`), mirroring how correct reasoning survives
//! harmless inflection but a misspelled name does not.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::gold::GoldStep;
use crate::lemma::lemmas_match;
use crate::model::{
    eval_expression, substitute_atom, Conclusion, Fact, Query, Rule, Token, Value, VarId,
};

/// One citation inside a summary step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ref {
    /// `fact_K`: a base fact by 1-based id.
    Fact(usize),
    /// `rule_K`: a rule by 1-based id.
    Rule(usize),
    /// `int_N` / `fact_iN`: an intermediate conclusion by 1-based index.
    Int(usize),
}

/// The claim a step makes after `=> int_N:`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Statement {
    /// `E's a is v` (any arithmetic before a final `= v` is ignored).
    Attr {
        entity: Token,
        attribute: Token,
        value: Value,
    },
    /// `r exists between A and B`.
    Rel {
        relation: Token,
        subject: Token,
        object: Token,
    },
}

/// A successfully parsed summary line.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParsedStep {
    /// The declared intermediate index (`int_3` declares 3).
    pub index: usize,
    pub deps: Vec<Ref>,
    pub statement: Statement,
    /// The raw line, kept for reporting.
    pub line: String,
}

/// Parsed form of one transcript.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ReasoningSummary {
    pub steps: Vec<ParsedStep>,
    /// The last boxed integer anywhere in the transcript.
    pub answer: Option<Value>,
    /// Non-empty lines of the summary block that did not parse as steps.
    /// They carry no credit, so they can only ever lower the score.
    pub skipped: Vec<String>,
}

/// Raised when a transcript has no summary block at all.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ParseError {
    #[error("transcript contains no `Reasoning:` summary block")]
    NoSummaryFound,
}

/// Why a step failed verification. Checks run in this order, so each step
/// reports its first failure.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum InvalidReason {
    /// The step does not cite exactly one existing rule.
    MissingRule,
    /// A cited intermediate is undeclared or itself unverified.
    UnverifiedDependency,
    /// No binding over the cited items satisfies every condition atom and
    /// supplies every expression operand.
    ConditionUnsatisfied,
    /// The conditions hold, but the rule derives something else.
    WrongConclusion,
    /// Relation concluded with subject and object swapped.
    DirectionReversed,
}

impl core::fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            InvalidReason::MissingRule => "missing-rule",
            InvalidReason::UnverifiedDependency => "unverified-dependency",
            InvalidReason::ConditionUnsatisfied => "condition-unsatisfied",
            InvalidReason::WrongConclusion => "wrong-conclusion",
            InvalidReason::DirectionReversed => "direction-reversed",
        };
        f.write_str(s)
    }
}

/// Outcome of verifying one step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    /// The step re-derives. Carries the **canonical** fact the rule
    /// produces (world spelling, not the model's), so downstream matching
    /// is exact.
    Verified(Fact),
    Invalid(InvalidReason),
}

/// Exact process-accuracy fraction. Kept unreduced: `num` is the number of
/// gold intermediates matched and `den` the number of gold steps, except
/// for the full-credit branch which is exactly `1/1`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: usize, den: usize) -> Self {
        Rational {
            num: num as u32,
            den: den as u32,
        }
    }

    pub fn as_f64(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            f64::from(self.num) / f64::from(self.den)
        }
    }
}

impl core::fmt::Display for Rational {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Per-step result, in summary order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StepOutcome {
    /// The declared intermediate index of the step.
    pub index: usize,
    pub verdict: Verdict,
}

/// Everything the scorer needs to know about one sample.
#[derive(Clone, Copy, Debug)]
pub struct SampleWorld<'a> {
    /// `fact_{i+1}` is `facts[i]`.
    pub facts: &'a [Fact],
    /// `rule_{i+1}` is `rules[i]`.
    pub rules: &'a [Rule],
    pub query: &'a Query,
    pub answer: Value,
    pub gold: &'a [GoldStep],
}

impl<'a> SampleWorld<'a> {
    pub fn new(
        facts: &'a [Fact],
        rules: &'a [Rule],
        query: &'a Query,
        answer: Value,
        gold: &'a [GoldStep],
    ) -> Self {
        SampleWorld {
            facts,
            rules,
            query,
            answer,
            gold,
        }
    }
}

/// Scores for one transcript, with the per-step evidence.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Evaluation {
    pub process: Rational,
    pub answer_correct: bool,
    pub outcomes: Vec<StepOutcome>,
}

/// The integer inside the last parseable `\boxed{…}` marker, if any.
pub fn extract_answer(text: &str) -> Option<Value> {
    let mut answer = None;
    let mut rest = text;
    while let Some(pos) = rest.find("\\boxed{") {
        let after = &rest[pos + "\\boxed{".len()..];
        if let Some(end) = after.find('}') {
            if let Some(v) = parse_value(&after[..end]) {
                answer = Some(v);
            }
            rest = &after[end + 1..];
        } else {
            break;
        }
    }
    answer
}

/// Parses an integer, tolerating thousands separators and a surrounding
/// dollar sign (models occasionally typeset the boxed value).
fn parse_value(text: &str) -> Option<Value> {
    let cleaned: String = text
        .trim()
        .trim_matches('$')
        .chars()
        .filter(|c| *c != ',' && !c.is_whitespace())
        .collect();
    cleaned.parse::<Value>().ok()
}

fn parse_ref(token: &str) -> Option<Ref> {
    let t = token.trim().to_ascii_lowercase();
    let index = |s: &str| s.parse::<usize>().ok().filter(|n| *n >= 1);
    if let Some(rest) = t.strip_prefix("rule_") {
        return index(rest).map(Ref::Rule);
    }
    if let Some(rest) = t.strip_prefix("fact_i") {
        return index(rest).map(Ref::Int);
    }
    if let Some(rest) = t.strip_prefix("fact_") {
        return index(rest).map(Ref::Fact);
    }
    if let Some(rest) = t.strip_prefix("int_") {
        return index(rest).map(Ref::Int);
    }
    None
}

fn parse_statement(text: &str) -> Option<Statement> {
    let t = text.trim().trim_end_matches('.').trim();
    let words: Vec<&str> = t.split_whitespace().collect();
    if words.len() == 6 && words[1] == "exists" && words[2] == "between" && words[4] == "and" {
        return Some(Statement::Rel {
            relation: Token::from(words[0]),
            subject: Token::from(words[3]),
            object: Token::from(words[5]),
        });
    }
    if words.len() >= 4 && words[2] == "is" {
        let entity = words[0]
            .strip_suffix("'s")
            .or_else(|| words[0].strip_suffix("\u{2019}s"))
            .filter(|e| !e.is_empty())?;
        let value_text = words[3..].join(" ");
        // Gold-style conclusions inline the arithmetic (`-95 * 33 - 16 =
        // -3151`); the final value is what the step asserts.
        let value_text = match value_text.rsplit_once('=') {
            Some((_, v)) => v.to_string(),
            None => value_text,
        };
        return Some(Statement::Attr {
            entity: Token::from(entity),
            attribute: Token::from(words[1]),
            value: parse_value(&value_text)?,
        });
    }
    None
}

fn parse_step_line(line: &str) -> Option<ParsedStep> {
    let (left, right) = line.split_once("=>")?;
    let mut deps = Vec::new();
    for part in left.split('&') {
        deps.push(parse_ref(part)?);
    }
    let (head, conclusion) = right.split_once(':')?;
    let Ref::Int(index) = parse_ref(head)? else {
        return None;
    };
    Some(ParsedStep {
        index,
        deps,
        statement: parse_statement(conclusion)?,
        line: line.trim().to_string(),
    })
}

/// Parses the last `Reasoning:` block of a transcript.
///
/// Empty lines and the `Answer:` line are ignored; anything else that is
/// not a step lands in [`ReasoningSummary::skipped`]. The boxed answer is
/// taken from the whole transcript, so it is found even when it precedes
/// or trails the block.
pub fn parse_summary(text: &str) -> Result<ReasoningSummary, ParseError> {
    let lowered = text.to_ascii_lowercase();
    let start = lowered.rfind("reasoning:").ok_or(ParseError::NoSummaryFound)?;
    let block = &text[start + "reasoning:".len()..];

    let mut summary = ReasoningSummary {
        answer: extract_answer(text),
        ..ReasoningSummary::default()
    };
    for line in block.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.to_ascii_lowercase().starts_with("answer") {
            continue;
        }
        match parse_step_line(trimmed) {
            Some(step) => summary.steps.push(step),
            None => summary.skipped.push(trimmed.to_string()),
        }
    }
    Ok(summary)
}

/// True when two ground facts state the same thing, with lemma tolerance on
/// the attribute/relation word and exact (case-folded) entities.
pub fn same_fact(a: &Fact, b: &Fact) -> bool {
    match (a, b) {
        (
            Fact::Attribute {
                entity: ea,
                attribute: aa,
                value: va,
            },
            Fact::Attribute {
                entity: eb,
                attribute: ab,
                value: vb,
            },
        ) => ea == eb && va == vb && lemmas_match(aa.as_str(), ab.as_str()),
        (
            Fact::Relation {
                relation: ra,
                subject: sa,
                object: oa,
            },
            Fact::Relation {
                relation: rb,
                subject: sb,
                object: ob,
            },
        ) => sa == sb && oa == ob && lemmas_match(ra.as_str(), rb.as_str()),
        _ => false,
    }
}

/// Verifies one step against nothing but its own citations.
///
/// Valid iff (a) exactly one existing rule is cited, (b) every cited
/// intermediate is in `verified`, (c) some binding over the cited items
/// satisfies all condition atoms and supplies all expression operands, and
/// (d) the stated conclusion is what the rule derives under that binding.
///
/// Extra citations are harmless — a satisfying binding need not use them —
/// but a missing one that leaves an atom or operand unsupported fails the
/// step. Citations of nonexistent fact ids contribute nothing.
pub fn verify_step(
    step: &ParsedStep,
    facts: &[Fact],
    rules: &[Rule],
    verified: &BTreeMap<usize, Fact>,
) -> Verdict {
    let cited_rules: Vec<usize> = step
        .deps
        .iter()
        .filter_map(|d| match d {
            Ref::Rule(k) => Some(*k),
            _ => None,
        })
        .collect();
    let [rule_id] = cited_rules[..] else {
        return Verdict::Invalid(InvalidReason::MissingRule);
    };
    let Some(rule) = rules.get(rule_id - 1) else {
        return Verdict::Invalid(InvalidReason::MissingRule);
    };

    let mut available: Vec<Fact> = Vec::new();
    for dep in &step.deps {
        match dep {
            Ref::Int(n) => match verified.get(n) {
                Some(f) => available.push(f.clone()),
                None => return Verdict::Invalid(InvalidReason::UnverifiedDependency),
            },
            Ref::Fact(k) => {
                if let Some(f) = facts.get(k - 1) {
                    available.push(f.clone());
                }
            }
            Ref::Rule(_) => {}
        }
    }

    check_rule_application(rule, &available, &step.statement)
}

/// Searches every binding of `rule` over the entities of `available` and
/// classifies the statement against the derivable conclusions.
fn check_rule_application(rule: &Rule, available: &[Fact], statement: &Statement) -> Verdict {
    let mut vars: Vec<VarId> = Vec::new();
    for atom in &rule.condition {
        for v in atom.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut candidates: Vec<Token> = Vec::new();
    {
        let mut push = |t: &Token| {
            if !candidates.contains(t) {
                candidates.push(t.clone());
            }
        };
        for fact in available {
            match fact {
                Fact::Attribute { entity, .. } => push(entity),
                Fact::Relation {
                    subject, object, ..
                } => {
                    push(subject);
                    push(object);
                }
            }
        }
    }

    let lookup = |entity: &Token, attribute: &Token| -> Option<Value> {
        available.iter().find_map(|f| match f {
            Fact::Attribute {
                entity: e,
                attribute: a,
                value,
            } if e == entity && a == attribute => Some(*value),
            _ => None,
        })
    };

    let supported = |binding: &crate::model::Binding| -> bool {
        let atoms_hold = rule.condition.iter().all(|atom| {
            substitute_atom(atom, binding)
                .map(|fact| available.contains(&fact))
                .unwrap_or(false)
        });
        if !atoms_hold {
            return false;
        }
        match &rule.conclusion {
            Conclusion::Attr { expr, .. } => expr
                .operands()
                .iter()
                .all(|(v, a)| binding.get(*v).is_some_and(|e| lookup(e, a).is_some())),
            Conclusion::Rel { .. } => true,
        }
    };

    let mut any_supported = false;
    let mut saw_reversed = false;
    let mut stack = alloc::vec![crate::model::Binding::new()];
    while let Some(binding) = stack.pop() {
        if let Some(var) = vars.iter().find(|v| !binding.contains(**v)) {
            for entity in &candidates {
                let mut next = binding.clone();
                next.insert(*var, entity.clone());
                stack.push(next);
            }
            continue;
        }
        if !supported(&binding) {
            continue;
        }
        any_supported = true;
        match (&rule.conclusion, statement) {
            (
                Conclusion::Attr {
                    var,
                    attribute,
                    expr,
                },
                Statement::Attr {
                    entity: se,
                    attribute: sa,
                    value: sv,
                },
            ) => {
                let Ok(value) = eval_expression(expr, &binding, &lookup) else {
                    continue;
                };
                let Some(entity) = binding.get(*var) else {
                    continue;
                };
                if se == entity
                    && lemmas_match(sa.as_str(), attribute.as_str())
                    && *sv == value
                {
                    return Verdict::Verified(Fact::Attribute {
                        entity: entity.clone(),
                        attribute: attribute.clone(),
                        value,
                    });
                }
            }
            (
                Conclusion::Rel {
                    relation,
                    subject,
                    object,
                },
                Statement::Rel {
                    relation: sr,
                    subject: ss,
                    object: so,
                },
            ) => {
                let (Some(subject), Some(object)) =
                    (binding.get(*subject), binding.get(*object))
                else {
                    continue;
                };
                if !lemmas_match(sr.as_str(), relation.as_str()) {
                    continue;
                }
                if ss == subject && so == object {
                    return Verdict::Verified(Fact::Relation {
                        relation: relation.clone(),
                        subject: subject.clone(),
                        object: object.clone(),
                    });
                }
                if ss == object && so == subject {
                    saw_reversed = true;
                }
            }
            _ => {}
        }
    }

    if !any_supported {
        Verdict::Invalid(InvalidReason::ConditionUnsatisfied)
    } else if saw_reversed {
        Verdict::Invalid(InvalidReason::DirectionReversed)
    } else {
        Verdict::Invalid(InvalidReason::WrongConclusion)
    }
}

/// Scores one transcript against its sample.
///
/// Verification runs to a fixpoint: a step whose intermediate citations are
/// not yet verified is retried once they are, so step order never matters.
/// Whatever still fails at the fixpoint is reported with its reason
/// (irreducibly missing dependencies as
/// [`InvalidReason::UnverifiedDependency`]).
///
/// Process accuracy is then the fraction of gold steps whose conclusion
/// some verified step re-derives — unless the answer is correct **and**
/// some verified step concludes the query itself, in which case the model
/// found a complete valid derivation (possibly a shortcut) and earns full
/// credit.
pub fn score(world: &SampleWorld<'_>, summary: &ReasoningSummary) -> Evaluation {
    let mut verdicts: Vec<Option<Verdict>> = alloc::vec![None; summary.steps.len()];
    let mut verified: BTreeMap<usize, Fact> = BTreeMap::new();
    loop {
        let mut progress = false;
        for (i, step) in summary.steps.iter().enumerate() {
            if verdicts[i].is_some() {
                continue;
            }
            match verify_step(step, world.facts, world.rules, &verified) {
                // Retry next round; the missing intermediate may verify
                // later in the summary.
                Verdict::Invalid(InvalidReason::UnverifiedDependency) => {}
                verdict => {
                    if let Verdict::Verified(fact) = &verdict {
                        // First declaration of an index wins; duplicates
                        // keep their own verdict but do not rebind the id.
                        verified.entry(step.index).or_insert_with(|| fact.clone());
                    }
                    verdicts[i] = Some(verdict);
                    progress = true;
                }
            }
        }
        if !progress {
            break;
        }
    }

    let outcomes: Vec<StepOutcome> = summary
        .steps
        .iter()
        .zip(verdicts)
        .map(|(step, verdict)| StepOutcome {
            index: step.index,
            verdict: verdict.unwrap_or(Verdict::Invalid(InvalidReason::UnverifiedDependency)),
        })
        .collect();

    let answer_correct = summary.answer == Some(world.answer);
    let query_fact = Fact::attribute(
        world.query.entity.clone(),
        world.query.attribute.clone(),
        world.answer,
    );
    let derives = |target: &Fact| {
        outcomes
            .iter()
            .any(|o| matches!(&o.verdict, Verdict::Verified(f) if same_fact(f, target)))
    };

    let process = if answer_correct && derives(&query_fact) {
        // A verified step concluding the query can only exist on a chain of
        // verified citations, so the whole alternative path checks out.
        Rational::ONE
    } else {
        let matched = world
            .gold
            .iter()
            .filter(|g| derives(&g.conclusion))
            .count();
        Rational::new(matched, world.gold.len().max(1))
    };

    Evaluation {
        process,
        answer_correct,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, Expression};
    use alloc::format;
    use alloc::vec;

    fn tok(s: &str) -> Token {
        Token::from(s)
    }

    // A two-rule world: text(Joscelin, Clementia) is fact_1,
    // is(Joscelin, keen, 4) is fact_2; rule_1 derives unsettle from text,
    // rule_2 copies keen into first across unsettle.
    fn tiny_world() -> (Vec<Fact>, Vec<Rule>) {
        let facts = vec![
            Fact::relation("text", "Joscelin", "Clementia"),
            Fact::attribute("Joscelin", "keen", 4),
        ];
        let rules = vec![
            Rule {
                id: 1,
                condition: vec![Atom::Rel {
                    relation: tok("text"),
                    subject: VarId(0),
                    object: VarId(1),
                }],
                conclusion: Conclusion::Rel {
                    relation: tok("unsettle"),
                    subject: VarId(0),
                    object: VarId(1),
                },
            },
            Rule {
                id: 2,
                condition: vec![
                    Atom::Rel {
                        relation: tok("unsettle"),
                        subject: VarId(0),
                        object: VarId(1),
                    },
                    Atom::Attr {
                        var: VarId(0),
                        attribute: tok("keen"),
                        value: 4,
                    },
                ],
                conclusion: Conclusion::Attr {
                    var: VarId(1),
                    attribute: tok("first"),
                    expr: Expression::Retrieval {
                        var: VarId(0),
                        attribute: tok("keen"),
                    },
                },
            },
        ];
        (facts, rules)
    }

    fn step(line: &str) -> ParsedStep {
        parse_step_line(line).unwrap_or_else(|| panic!("line should parse: {line}"))
    }

    #[test]
    fn parses_prompt_style_and_gold_style_lines() {
        let s = step("rule_15 & fact_13 & fact_4 => int_1: reject exists between Sterne and Beilul.");
        assert_eq!(s.index, 1);
        assert_eq!(s.deps, vec![Ref::Rule(15), Ref::Fact(13), Ref::Fact(4)]);
        assert_eq!(
            s.statement,
            Statement::Rel {
                relation: tok("reject"),
                subject: tok("Sterne"),
                object: tok("Beilul"),
            }
        );

        let s = step("rule_5 & fact_4 & fact_7 => fact_i1: Hetty's legal is -95 * 33 - 16 = -3151.");
        assert_eq!(s.index, 1);
        assert_eq!(
            s.statement,
            Statement::Attr {
                entity: tok("Hetty"),
                attribute: tok("legal"),
                value: -3151,
            }
        );

        // Rule citations are accepted anywhere in the list, and plain
        // values need no arithmetic annotation.
        let s = step("fact_10 & fact_1 & rule_7 => fact_i3: Garey's liquid is 52");
        assert_eq!(s.deps, vec![Ref::Fact(10), Ref::Fact(1), Ref::Rule(7)]);
        assert_eq!(
            s.statement,
            Statement::Attr {
                entity: tok("Garey"),
                attribute: tok("liquid"),
                value: 52,
            }
        );
    }

    #[test]
    fn summary_takes_the_last_block_and_skips_garbage() {
        let text = "Reasoning:\n\
                    rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
                    Answer: \\boxed{3}\n\
                    \n\
                    Wait, let me redo this.\n\
                    Reasoning:\n\
                    some stray prose that is not a step\n\
                    rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
                    rule_2 & int_1 & fact_2 => int_2: Clementia's first is 4.\n\
                    Answer: \\boxed{4}\n";
        let summary = parse_summary(text).unwrap();
        assert_eq!(summary.steps.len(), 2);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.answer, Some(4));
    }

    #[test]
    fn missing_block_is_an_error_but_answer_still_extracts() {
        let text = "The answer is clearly 7.\nAnswer: \\boxed{7}";
        assert_eq!(parse_summary(text), Err(ParseError::NoSummaryFound));
        assert_eq!(extract_answer(text), Some(7));
    }

    #[test]
    fn boxed_answers_prefer_the_last_parseable() {
        assert_eq!(extract_answer("\\boxed{12} then \\boxed{37}"), Some(37));
        assert_eq!(extract_answer("\\boxed{-15,388,764}"), Some(-15388764));
        assert_eq!(extract_answer("\\boxed{x}"), None);
        assert_eq!(extract_answer("\\boxed{41} later \\boxed{?}"), Some(41));
        assert_eq!(extract_answer("no box here"), None);
    }

    #[test]
    fn verification_reports_first_failing_check() {
        let (facts, rules) = tiny_world();
        let verified = BTreeMap::new();

        let no_rule = step("fact_1 => int_1: unsettle exists between Joscelin and Clementia");
        assert_eq!(
            verify_step(&no_rule, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::MissingRule)
        );

        let two_rules =
            step("rule_1 & rule_2 & fact_1 => int_1: unsettle exists between Joscelin and Clementia");
        assert_eq!(
            verify_step(&two_rules, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::MissingRule)
        );

        let ghost_rule = step("rule_9 & fact_1 => int_1: unsettle exists between Joscelin and Clementia");
        assert_eq!(
            verify_step(&ghost_rule, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::MissingRule)
        );

        let ghost_int = step("rule_2 & int_7 & fact_2 => int_1: Clementia's first is 4");
        assert_eq!(
            verify_step(&ghost_int, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::UnverifiedDependency)
        );

        // Citing only fact_2 leaves rule_2's relation atom unsupported.
        let starved = step("rule_2 & fact_2 => int_1: Clementia's first is 4");
        assert_eq!(
            verify_step(&starved, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::ConditionUnsatisfied)
        );

        let ok = step("rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia");
        assert_eq!(
            verify_step(&ok, &facts, &rules, &verified),
            Verdict::Verified(Fact::relation("unsettle", "Joscelin", "Clementia"))
        );

        let reversed = step("rule_1 & fact_1 => int_1: unsettle exists between Clementia and Joscelin");
        assert_eq!(
            verify_step(&reversed, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::DirectionReversed)
        );

        let wrong_value = {
            let mut v = BTreeMap::new();
            v.insert(1, Fact::relation("unsettle", "Joscelin", "Clementia"));
            let s = step("rule_2 & int_1 & fact_2 => int_2: Clementia's first is 9");
            verify_step(&s, &facts, &rules, &v)
        };
        assert_eq!(
            wrong_value,
            Verdict::Invalid(InvalidReason::WrongConclusion)
        );
    }

    #[test]
    fn extra_citations_are_tolerated_nonexistent_ids_contribute_nothing() {
        let (facts, rules) = tiny_world();
        let verified = BTreeMap::new();
        // fact_2 is irrelevant to rule_1 and fact_99 does not exist; the
        // satisfying binding ignores both.
        let padded = step(
            "rule_1 & fact_1 & fact_2 & fact_99 => int_1: unsettle exists between Joscelin and Clementia",
        );
        assert_eq!(
            verify_step(&padded, &facts, &rules, &verified),
            Verdict::Verified(Fact::relation("unsettle", "Joscelin", "Clementia"))
        );
    }

    #[test]
    fn inflected_conclusions_verify_but_entity_typos_do_not() {
        let (facts, rules) = tiny_world();
        let verified = BTreeMap::new();
        let inflected = step("rule_1 & fact_1 => int_1: unsettles exists between Joscelin and Clementia");
        // Canonical spelling is recorded, not the model's inflection.
        assert_eq!(
            verify_step(&inflected, &facts, &rules, &verified),
            Verdict::Verified(Fact::relation("unsettle", "Joscelin", "Clementia"))
        );

        let typo = step("rule_1 & fact_1 => int_1: unsettle exists between Joscelyn and Clementia");
        assert_eq!(
            verify_step(&typo, &facts, &rules, &verified),
            Verdict::Invalid(InvalidReason::WrongConclusion)
        );
    }

    fn tiny_sample() -> (Vec<Fact>, Vec<Rule>, Query, Vec<GoldStep>) {
        let (facts, rules) = tiny_world();
        let query = Query {
            entity: tok("Clementia"),
            attribute: tok("first"),
        };
        let gold = vec![
            GoldStep {
                index: 1,
                rule_id: 1,
                dep_fact_ids: vec![1],
                dep_int_ids: vec![],
                conclusion: Fact::relation("unsettle", "Joscelin", "Clementia"),
                rendered: "rule_1 & fact_1 => fact_i1: unsettle exists between Joscelin and Clementia.".into(),
            },
            GoldStep {
                index: 2,
                rule_id: 2,
                dep_fact_ids: vec![2],
                dep_int_ids: vec![1],
                conclusion: Fact::attribute("Clementia", "first", 4),
                rendered: "rule_2 & fact_i1 & fact_2 => fact_i2: Clementia's first is 4.".into(),
            },
        ];
        (facts, rules, query, gold)
    }

    #[test]
    fn scoring_is_reordering_invariant() {
        let (facts, rules, query, gold) = tiny_sample();
        let world = SampleWorld::new(&facts, &rules, &query, 4, &gold);

        let forward = parse_summary(
            "Reasoning:\n\
             rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
             rule_2 & int_1 & fact_2 => int_2: Clementia's first is 4.\n\
             Answer: \\boxed{4}",
        )
        .unwrap();
        // The same two steps with the dependency declared after its user.
        let backward = parse_summary(
            "Reasoning:\n\
             rule_2 & int_2 & fact_2 => int_1: Clementia's first is 4.\n\
             rule_1 & fact_1 => int_2: unsettle exists between Joscelin and Clementia.\n\
             Answer: \\boxed{4}",
        )
        .unwrap();

        let a = score(&world, &forward);
        let b = score(&world, &backward);
        assert_eq!(a.process, Rational::ONE);
        assert_eq!(b.process, Rational::ONE);
        assert!(a.answer_correct && b.answer_correct);
    }

    #[test]
    fn deleting_a_step_never_raises_the_score() {
        let (facts, rules, query, gold) = tiny_sample();
        let world = SampleWorld::new(&facts, &rules, &query, 4, &gold);
        let full = parse_summary(
            "Reasoning:\n\
             rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
             rule_2 & int_1 & fact_2 => int_2: Clementia's first is 4.\n\
             Answer: \\boxed{4}",
        )
        .unwrap();
        let full_score = score(&world, &full).process.as_f64();
        for drop in 0..full.steps.len() {
            let mut pruned = full.clone();
            pruned.steps.remove(drop);
            let pruned_score = score(&world, &pruned).process.as_f64();
            assert!(
                pruned_score <= full_score,
                "dropping step {drop} raised {pruned_score} over {full_score}"
            );
        }
    }

    #[test]
    fn unresolved_dependencies_surface_at_the_fixpoint() {
        let (facts, rules, query, gold) = tiny_sample();
        let world = SampleWorld::new(&facts, &rules, &query, 4, &gold);
        // int_1 cites int_2 and vice versa: an unresolvable cycle.
        let cyclic = parse_summary(
            "Reasoning:\n\
             rule_2 & int_2 & fact_2 => int_1: Clementia's first is 4.\n\
             rule_2 & int_1 & fact_2 => int_2: Clementia's first is 4.\n\
             Answer: \\boxed{4}",
        )
        .unwrap();
        let eval = score(&world, &cyclic);
        for outcome in &eval.outcomes {
            assert_eq!(
                outcome.verdict,
                Verdict::Invalid(InvalidReason::UnverifiedDependency)
            );
        }
        assert_eq!(eval.process, Rational::new(0, 2));
    }

    #[test]
    fn full_credit_requires_both_answer_and_verified_query_conclusion() {
        let (facts, rules, query, gold) = tiny_sample();
        let world = SampleWorld::new(&facts, &rules, &query, 4, &gold);

        // Correct answer, but only the relation step verifies: fraction.
        let partial = parse_summary(
            "Reasoning:\n\
             rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
             Answer: \\boxed{4}",
        )
        .unwrap();
        let eval = score(&world, &partial);
        assert_eq!(eval.process, Rational::new(1, 2));
        assert!(eval.answer_correct);

        // Verified query conclusion but wrong boxed answer: no full credit,
        // though the derivation itself still matches gold 2/2.
        let wrong_box = parse_summary(
            "Reasoning:\n\
             rule_1 & fact_1 => int_1: unsettle exists between Joscelin and Clementia.\n\
             rule_2 & int_1 & fact_2 => int_2: Clementia's first is 4.\n\
             Answer: \\boxed{5}",
        )
        .unwrap();
        let eval = score(&world, &wrong_box);
        assert!(!eval.answer_correct);
        assert_eq!(eval.process, Rational::new(2, 2));
    }

    #[test]
    fn empty_summary_scores_zero() {
        let (facts, rules, query, gold) = tiny_sample();
        let world = SampleWorld::new(&facts, &rules, &query, 4, &gold);
        let empty = ReasoningSummary::default();
        let eval = score(&world, &empty);
        assert_eq!(eval.process, Rational::new(0, 2));
        assert!(!eval.answer_correct);
    }

    #[test]
    fn rational_renders_and_divides_exactly() {
        assert_eq!(format!("{}", Rational::new(5, 6)), "5/6");
        assert_eq!(Rational::new(3, 5).as_f64(), 0.6);
        assert_eq!(Rational::new(0, 0).as_f64(), 0.0);
        assert_eq!(Rational::ONE.as_f64(), 1.0);
    }
}
