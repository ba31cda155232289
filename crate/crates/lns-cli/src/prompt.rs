//! Prompt assembly: turns a record (plus optional exemplars) into the text
//! handed to a model under test.

use std::fmt::Write as _;

use thiserror::Error;

use crate::llm::sentence_case;
use crate::record::SampleRecord;

/// What can go wrong while building prompts.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("asked for {requested} shots but only {available} exemplars are available")]
    MissingExemplars { requested: usize, available: usize },
}

const INSTRUCTIONS: &str = r#"# Task
Analyze a logical scenario with entities, their attributes, and relationships. Use the given facts and rules to answer the query through step-by-step reasoning.

## Key Components
- **Entities**: Objects in the scenario
- **Attributes**: Properties of entities (with specific values)
- **Relationships**: Asymmetric connections between entities (direction matters)
- **Facts**: Given information about attributes and relationships
- **Rules**: If-then statements for logical deduction
- **Query**: Question to answer

## Instructions
1. **Natural Analysis**: First, think through the problem freely using clear, natural language. Explain your reasoning process, identify relevant entities, attributes, and relationships, and work toward the solution.

2. **Final Summary**: After your analysis, provide a structured reasoning summary that shows the key logical steps that lead to the answer.

3. **Answer Format**: End with "Answer: \boxed{[value]}"

## Final Summary Requirements
Your summary should list only the complete reasoning steps in this format:
```
[dependencies] => int_[n]: [conclusion]
```

**For relationships**: `rule_X & fact_Y & int_Z => int_n: [relation] exists between [A] and [B]`

**For attributes**: `rule_X & fact_Y & fact_Z & int_W => int_n: [Entity]'s [attribute] is [final_value]`

### Critical Requirements for AttributeFacts:
- Must show the **final calculated value** (e.g., "is 22"), not intermediate expressions
- Must list **ALL dependencies**: the triggering rule and conditions + all facts/intermediates that provide values for the calculation

### Summary Example
```
Reasoning:
rule_15 & fact_13 & fact_4 => int_1: reject exists between Sterne and Beilul
rule_5 & fact_1 & fact_10 & fact_11 & fact_5 => int_2: Nils's prior is 22
rule_8 & int_1 & int_2 & fact_7 => int_3: final_entity's target_attribute is 15
...
Answer: \boxed{37}
```"#;

/// The numbered facts/rules/query block for one sample. Uses refined
/// wording where present, templated wording otherwise.
pub fn sample_block(record: &SampleRecord) -> String {
    let mut out = String::from("Facts:\n");
    for fact in &record.facts {
        writeln!(out, "fact_{}: {}", fact.id, sentence_case(fact.text())).unwrap();
    }
    out.push_str("Rules:\n");
    for rule in &record.rules {
        writeln!(out, "rule_{}: {}", rule.id, sentence_case(rule.text())).unwrap();
    }
    writeln!(out, "Query: What is {}?", record.query.text).unwrap();
    out
}

/// A worked exemplar: its sample block, the gold summary, and the answer.
fn exemplar_block(record: &SampleRecord) -> String {
    let mut out = sample_block(record);
    out.push_str("Reasoning:\n");
    for step in &record.gold_steps {
        out.push_str(&step.rendered);
        out.push('\n');
    }
    writeln!(out, "Answer: \\boxed{{{}}}", record.answer).unwrap();
    out
}

/// The complete prompt for `record` with `shots` worked exemplars.
pub fn build_prompt(
    record: &SampleRecord,
    exemplars: &[SampleRecord],
    shots: usize,
) -> Result<String, PromptError> {
    if shots > exemplars.len() {
        return Err(PromptError::MissingExemplars {
            requested: shots,
            available: exemplars.len(),
        });
    }
    let mut out = String::from(INSTRUCTIONS);
    out.push('\n');
    for exemplar in &exemplars[..shots] {
        out.push('\n');
        out.push_str(&exemplar_block(exemplar));
    }
    out.push('\n');
    out.push_str(&sample_block(record));
    Ok(out)
}
