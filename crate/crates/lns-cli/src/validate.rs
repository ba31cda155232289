//! Dataset integrity checking: every structural and semantic invariant a
//! well-formed record must satisfy, re-derived from scratch.

use lns_core::engine::{closure, FactSet};
use lns_core::eval::{self, Rational, SampleWorld};
use lns_core::model::{Fact, Rule};

use crate::record::SampleRecord;

/// Checks one record, appending one line per violation.
fn check_record(record: &SampleRecord, violations: &mut Vec<String>) {
    let id = record.id;
    let mut report = |what: String| violations.push(format!("sample {id}: {what}"));

    // Ids must be positional: fact_N / rule_N cite by 1-based slot.
    for (i, fact) in record.facts.iter().enumerate() {
        if fact.id != i + 1 {
            report(format!("fact at position {} has id {}", i + 1, fact.id));
        }
        if fact.formal != fact.tree.formal() {
            report(format!("fact_{} formal text does not match its tree", fact.id));
        }
        if fact.templated.trim().is_empty() {
            report(format!("fact_{} has no templated text", fact.id));
        }
    }
    for (i, rule) in record.rules.iter().enumerate() {
        if rule.id != i + 1 || rule.tree.id != i + 1 {
            report(format!(
                "rule at position {} has id {} (tree id {})",
                i + 1,
                rule.id,
                rule.tree.id
            ));
        }
        if rule.formal != rule.tree.formal() {
            report(format!("rule_{} formal text does not match its tree", rule.id));
        }
        if rule.templated.trim().is_empty() {
            report(format!("rule_{} has no templated text", rule.id));
        }
    }
    if record.query.formal != record.query.tree.formal() {
        report("query formal text does not match its tree".to_string());
    }

    // The base facts must be internally consistent, and the forward
    // closure must terminate without conflict and agree with the answer.
    let facts: Vec<Fact> = record.facts.iter().map(|f| f.tree.clone()).collect();
    let rules: Vec<Rule> = record.rules.iter().map(|r| r.tree.clone()).collect();
    match FactSet::from_facts(facts.iter()) {
        Err(conflict) => report(format!("base facts conflict: {conflict}")),
        Ok(set) => match closure(&set, &rules) {
            Err(e) => report(format!("closure failed: {e}")),
            Ok(derived) => {
                match derived.attr(&record.query.tree.entity, &record.query.tree.attribute) {
                    None => report("closure never derives the queried attribute".to_string()),
                    Some(value) if value != record.answer => report(format!(
                        "closure answer {value} disagrees with recorded answer {}",
                        record.answer
                    )),
                    Some(_) => {}
                }
            }
        },
    }

    // Gold steps: contiguous indices, citations in range, acyclic deps.
    for (i, step) in record.gold_steps.iter().enumerate() {
        if step.index != i + 1 {
            report(format!("gold step at position {} has index {}", i + 1, step.index));
        }
        if step.rule_id == 0 || step.rule_id > record.rules.len() {
            report(format!("gold step {} cites rule_{}", step.index, step.rule_id));
        }
        for &f in &step.dep_fact_ids {
            if f == 0 || f > record.facts.len() {
                report(format!("gold step {} cites fact_{f}", step.index));
            }
        }
        for &d in &step.dep_int_ids {
            if d == 0 || d >= step.index {
                report(format!(
                    "gold step {} cites intermediate {d} out of order",
                    step.index
                ));
            }
        }
    }
    if record.realized_depth != record.gold_steps.len() {
        report(format!(
            "realized depth {} but {} gold steps",
            record.realized_depth,
            record.gold_steps.len()
        ));
    }
    match record.gold_steps.last() {
        None => report("no gold steps".to_string()),
        Some(last) => {
            let want = Fact::attribute(
                record.query.tree.entity.clone(),
                record.query.tree.attribute.clone(),
                record.answer,
            );
            if last.conclusion != want {
                report("last gold step does not conclude the query".to_string());
            }
        }
    }

    // The gold transcript must earn full marks from the scorer.
    let world = SampleWorld::new(
        &facts,
        &rules,
        &record.query.tree,
        record.answer,
        &record.gold_steps,
    );
    let mut transcript = String::from("Reasoning:\n");
    for step in &record.gold_steps {
        transcript.push_str(&step.rendered);
        transcript.push('\n');
    }
    transcript.push_str(&format!("Answer: \\boxed{{{}}}\n", record.answer));
    match eval::parse_summary(&transcript) {
        Err(e) => report(format!("gold transcript does not parse: {e}")),
        Ok(summary) => {
            let evaluation = eval::score(&world, &summary);
            if evaluation.process != Rational::ONE || !evaluation.answer_correct {
                report(format!(
                    "gold transcript scores {} (answer correct: {})",
                    evaluation.process, evaluation.answer_correct
                ));
            }
        }
    }
}

/// Validates a whole dataset. An empty return means every check passed.
pub fn validate_records(records: &[SampleRecord]) -> Vec<String> {
    let mut violations = Vec::new();
    if records.is_empty() {
        violations.push("dataset holds no records".to_string());
    }
    for (i, record) in records.iter().enumerate() {
        if record.id != i + 1 {
            violations.push(format!(
                "record at position {} has id {}",
                i + 1,
                record.id
            ));
        }
        check_record(record, &mut violations);
    }
    violations
}
