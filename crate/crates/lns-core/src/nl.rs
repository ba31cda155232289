//! Templated English rendering of facts, rules, queries, and expressions.
//!
//! Every rendering category owns a bank of interchangeable templates; a
//! render picks one uniformly at random, so repeated renders of the same
//! item vary in wording but never in content. Placeholder substitution is
//! purely textual, which keeps the central invariant easy to state and
//! check: every entity name, attribute or relation lemma, and numeric
//! literal of the formal item appears verbatim in its rendered line (see
//! [`preserves_tokens`]).
//!
//! Rule variables render as `entity_1`, `entity_2`, … in first-occurrence
//! order; condition atoms are joined with `and`; an attribute conclusion
//! embeds the rendered expression where a plain fact would carry its
//! number.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::lemma::lemmas_match;
use crate::model::{
    rule_var_names, AggOp, Atom, Conclusion, Expression, Fact, Query, Rule, VarId,
};

/// Smallest bank a category may ship with.
pub const MIN_TEMPLATES: usize = 4;

/// The ten template categories.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Category {
    AttributeFact,
    RelationFact,
    Implication,
    Retrieval,
    CalculationAddition,
    CalculationSubtraction,
    AggregationMax,
    AggregationMin,
    AggregationAddition,
    AggregationSubtraction,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::AttributeFact,
        Category::RelationFact,
        Category::Implication,
        Category::Retrieval,
        Category::CalculationAddition,
        Category::CalculationSubtraction,
        Category::AggregationMax,
        Category::AggregationMin,
        Category::AggregationAddition,
        Category::AggregationSubtraction,
    ];

    /// Kebab-case name, also the file stem a loader should look for.
    pub fn name(self) -> &'static str {
        match self {
            Category::AttributeFact => "attribute-fact",
            Category::RelationFact => "relation-fact",
            Category::Implication => "implication",
            Category::Retrieval => "retrieval",
            Category::CalculationAddition => "calculation-addition",
            Category::CalculationSubtraction => "calculation-subtraction",
            Category::AggregationMax => "aggregation-max",
            Category::AggregationMin => "aggregation-min",
            Category::AggregationAddition => "aggregation-addition",
            Category::AggregationSubtraction => "aggregation-subtraction",
        }
    }

    /// The placeholders a template of this category must use, each at
    /// least once, and may not go beyond.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            Category::AttributeFact => &["e_i", "a_j", "num"],
            Category::RelationFact => &["e_i", "r_k", "e_j"],
            Category::Implication => &["condition", "conclusion"],
            Category::Retrieval => &["e_i", "a_j"],
            Category::CalculationAddition | Category::CalculationSubtraction => &["x", "k", "b"],
            Category::AggregationMax
            | Category::AggregationMin
            | Category::AggregationAddition
            | Category::AggregationSubtraction => &["expr1", "expr2"],
        }
    }

    /// The aggregation category for an operator.
    pub fn for_aggregation(op: AggOp) -> Category {
        match op {
            AggOp::Max => Category::AggregationMax,
            AggOp::Min => Category::AggregationMin,
            AggOp::Addition => Category::AggregationAddition,
            AggOp::Subtraction => Category::AggregationSubtraction,
        }
    }

    /// Position of this category in [`Category::ALL`] and in bank arrays.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// What is wrong with a single template string.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TemplateProblem {
    UnknownPlaceholder(String),
    MissingPlaceholder(&'static str),
    UnbalancedBraces,
}

impl core::fmt::Display for TemplateProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TemplateProblem::UnknownPlaceholder(p) => write!(f, "unknown placeholder {{{p}}}"),
            TemplateProblem::MissingPlaceholder(p) => {
                write!(f, "required placeholder {{{p}}} never used")
            }
            TemplateProblem::UnbalancedBraces => f.write_str("unbalanced braces"),
        }
    }
}

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum TemplateError {
    #[error("{category} template {template:?}: {problem}")]
    MalformedTemplate {
        category: &'static str,
        template: String,
        problem: TemplateProblem,
    },
    #[error("category {category} has {found} template(s); at least {min} required")]
    TooFewTemplates {
        category: &'static str,
        found: usize,
        min: usize,
    },
}

/// A validated bank of templates per category.
#[derive(Clone, Debug)]
pub struct TemplateSet {
    banks: [Vec<String>; 10],
}

impl TemplateSet {
    /// Validates and adopts one bank per category, in [`Category::ALL`]
    /// order.
    pub fn from_banks(banks: [Vec<String>; 10]) -> Result<Self, TemplateError> {
        for (cat, bank) in Category::ALL.iter().zip(&banks) {
            if bank.len() < MIN_TEMPLATES {
                return Err(TemplateError::TooFewTemplates {
                    category: cat.name(),
                    found: bank.len(),
                    min: MIN_TEMPLATES,
                });
            }
            for template in bank {
                validate_template(*cat, template)?;
            }
        }
        Ok(TemplateSet { banks })
    }

    /// The built-in bank: every published example wording plus authored
    /// variants up to the per-category floor.
    pub fn builtin() -> Self {
        let banks =
            Category::ALL.map(|cat| builtin_bank(cat).iter().map(ToString::to_string).collect());
        TemplateSet::from_banks(banks).expect("built-in templates validate")
    }

    pub fn bank(&self, cat: Category) -> &[String] {
        &self.banks[cat.index()]
    }

    fn pick<R: Rng + ?Sized>(&self, cat: Category, rng: &mut R) -> &str {
        let bank = self.bank(cat);
        &bank[rng.random_range(0..bank.len())]
    }
}

/// Splits a bank file into templates: one per line, with blank lines and
/// `#` comments skipped.
pub fn parse_bank(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(ToString::to_string)
        .collect()
}

fn validate_template(cat: Category, template: &str) -> Result<(), TemplateError> {
    let malformed = |problem| TemplateError::MalformedTemplate {
        category: cat.name(),
        template: template.to_string(),
        problem,
    };
    let allowed = cat.placeholders();
    let mut seen = alloc::vec![false; allowed.len()];
    let mut rest = template;
    while let Some(open) = rest.find(['{', '}']) {
        if rest.as_bytes()[open] == b'}' {
            return Err(malformed(TemplateProblem::UnbalancedBraces));
        }
        let after = &rest[open + 1..];
        let Some(close) = after.find(['{', '}']) else {
            return Err(malformed(TemplateProblem::UnbalancedBraces));
        };
        if after.as_bytes()[close] == b'{' {
            return Err(malformed(TemplateProblem::UnbalancedBraces));
        }
        let name = &after[..close];
        match allowed.iter().position(|p| *p == name) {
            Some(i) => seen[i] = true,
            None => {
                return Err(malformed(TemplateProblem::UnknownPlaceholder(
                    name.to_string(),
                )))
            }
        }
        rest = &after[close + 1..];
    }
    if let Some(i) = seen.iter().position(|used| !used) {
        return Err(malformed(TemplateProblem::MissingPlaceholder(allowed[i])));
    }
    Ok(())
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = String::from(template);
    for (name, value) in pairs {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

fn display_name(names: &BTreeMap<VarId, String>, var: VarId) -> String {
    names
        .get(&var)
        .cloned()
        .unwrap_or_else(|| format!("entity_?{}", var.0))
}

/// Renders a ground fact through a sampled template.
pub fn render_fact<R: Rng + ?Sized>(fact: &Fact, set: &TemplateSet, rng: &mut R) -> String {
    match fact {
        Fact::Attribute {
            entity,
            attribute,
            value,
        } => fill(
            set.pick(Category::AttributeFact, rng),
            &[
                ("e_i", entity.as_str()),
                ("a_j", attribute.as_str()),
                ("num", &value.to_string()),
            ],
        ),
        Fact::Relation {
            relation,
            subject,
            object,
        } => fill(
            set.pick(Category::RelationFact, rng),
            &[
                ("e_i", subject.as_str()),
                ("r_k", relation.as_str()),
                ("e_j", object.as_str()),
            ],
        ),
    }
}

/// Renders the question as a retrieval phrase.
pub fn render_query<R: Rng + ?Sized>(query: &Query, set: &TemplateSet, rng: &mut R) -> String {
    fill(
        set.pick(Category::Retrieval, rng),
        &[
            ("e_i", query.entity.as_str()),
            ("a_j", query.attribute.as_str()),
        ],
    )
}

/// Renders an expression, with rule variables shown via `names`.
///
/// Calculations choose the addition or subtraction wording family by the
/// sign of `b` (zero stays in the addition family with a literal `0`);
/// aggregations wrap their rendered children; retrievals use a retrieval
/// template; constants are bare numbers.
pub fn render_expression<R: Rng + ?Sized>(
    expr: &Expression,
    names: &BTreeMap<VarId, String>,
    set: &TemplateSet,
    rng: &mut R,
) -> String {
    match expr {
        Expression::Constant { c } => c.to_string(),
        Expression::Retrieval { var, attribute } => fill(
            set.pick(Category::Retrieval, rng),
            &[
                ("e_i", display_name(names, *var).as_str()),
                ("a_j", attribute.as_str()),
            ],
        ),
        Expression::Calculation {
            k,
            var,
            attribute,
            b,
        } => {
            let x = render_expression(
                &Expression::Retrieval {
                    var: *var,
                    attribute: attribute.clone(),
                },
                names,
                set,
                rng,
            );
            let (category, b_text) = if *b < 0 {
                (Category::CalculationSubtraction, b.unsigned_abs().to_string())
            } else {
                (Category::CalculationAddition, b.to_string())
            };
            fill(
                set.pick(category, rng),
                &[("x", x.as_str()), ("k", &k.to_string()), ("b", &b_text)],
            )
        }
        Expression::Aggregation { op, left, right } => {
            let left = render_expression(left, names, set, rng);
            let right = render_expression(right, names, set, rng);
            fill(
                set.pick(Category::for_aggregation(*op), rng),
                &[("expr1", left.as_str()), ("expr2", right.as_str())],
            )
        }
    }
}

fn render_atom<R: Rng + ?Sized>(
    atom: &Atom,
    names: &BTreeMap<VarId, String>,
    set: &TemplateSet,
    rng: &mut R,
) -> String {
    match atom {
        Atom::Attr {
            var,
            attribute,
            value,
        } => fill(
            set.pick(Category::AttributeFact, rng),
            &[
                ("e_i", display_name(names, *var).as_str()),
                ("a_j", attribute.as_str()),
                ("num", &value.to_string()),
            ],
        ),
        Atom::Rel {
            relation,
            subject,
            object,
        } => fill(
            set.pick(Category::RelationFact, rng),
            &[
                ("e_i", display_name(names, *subject).as_str()),
                ("r_k", relation.as_str()),
                ("e_j", display_name(names, *object).as_str()),
            ],
        ),
    }
}

/// Renders a rule: condition atoms joined with `and` inside a sampled
/// implication template, the conclusion carrying rendered expression text.
pub fn render_rule<R: Rng + ?Sized>(rule: &Rule, set: &TemplateSet, rng: &mut R) -> String {
    let names = rule_var_names(rule);
    let mut condition = String::new();
    for (i, atom) in rule.condition.iter().enumerate() {
        if i > 0 {
            condition.push_str(" and ");
        }
        condition.push_str(&render_atom(atom, &names, set, rng));
    }
    let conclusion = match &rule.conclusion {
        Conclusion::Rel {
            relation,
            subject,
            object,
        } => fill(
            set.pick(Category::RelationFact, rng),
            &[
                ("e_i", display_name(&names, *subject).as_str()),
                ("r_k", relation.as_str()),
                ("e_j", display_name(&names, *object).as_str()),
            ],
        ),
        Conclusion::Attr {
            var,
            attribute,
            expr,
        } => {
            let value_text = render_expression(expr, &names, set, rng);
            fill(
                set.pick(Category::AttributeFact, rng),
                &[
                    ("e_i", display_name(&names, *var).as_str()),
                    ("a_j", attribute.as_str()),
                    ("num", value_text.as_str()),
                ],
            )
        }
    };
    fill(
        set.pick(Category::Implication, rng),
        &[
            ("condition", condition.as_str()),
            ("conclusion", conclusion.as_str()),
        ],
    )
}

/// A token a rendered line is required to carry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FormalToken {
    /// Entity, attribute, or relation word; matched lemma-tolerantly.
    Word(String),
    /// Numeric literal, matched exactly.
    Literal(String),
}

/// Required tokens of a ground fact.
pub fn fact_tokens(fact: &Fact) -> Vec<FormalToken> {
    match fact {
        Fact::Attribute {
            entity,
            attribute,
            value,
        } => alloc::vec![
            FormalToken::Word(entity.as_str().to_string()),
            FormalToken::Word(attribute.as_str().to_string()),
            FormalToken::Literal(value.to_string()),
        ],
        Fact::Relation {
            relation,
            subject,
            object,
        } => alloc::vec![
            FormalToken::Word(subject.as_str().to_string()),
            FormalToken::Word(relation.as_str().to_string()),
            FormalToken::Word(object.as_str().to_string()),
        ],
    }
}

/// Required tokens of the query sentence.
pub fn query_tokens(query: &Query) -> Vec<FormalToken> {
    alloc::vec![
        FormalToken::Word(query.entity.as_str().to_string()),
        FormalToken::Word(query.attribute.as_str().to_string()),
    ]
}

fn expression_tokens(expr: &Expression, out: &mut Vec<FormalToken>) {
    match expr {
        Expression::Constant { c } => out.push(FormalToken::Literal(c.to_string())),
        Expression::Retrieval { attribute, .. } => {
            out.push(FormalToken::Word(attribute.as_str().to_string()))
        }
        Expression::Calculation {
            k, attribute, b, ..
        } => {
            out.push(FormalToken::Literal(k.to_string()));
            out.push(FormalToken::Word(attribute.as_str().to_string()));
            if *b != 0 {
                out.push(FormalToken::Literal(b.unsigned_abs().to_string()));
            }
        }
        Expression::Aggregation { left, right, .. } => {
            expression_tokens(left, out);
            expression_tokens(right, out);
        }
    }
}

/// Required tokens of a rule sentence (variables excluded — they render
/// as `entity_1`, `entity_2`, … rather than names).
pub fn rule_tokens(rule: &Rule) -> Vec<FormalToken> {
    let mut out = Vec::new();
    for atom in &rule.condition {
        match atom {
            Atom::Attr {
                attribute, value, ..
            } => {
                out.push(FormalToken::Word(attribute.as_str().to_string()));
                out.push(FormalToken::Literal(value.to_string()));
            }
            Atom::Rel { relation, .. } => {
                out.push(FormalToken::Word(relation.as_str().to_string()))
            }
        }
    }
    match &rule.conclusion {
        Conclusion::Rel { relation, .. } => {
            out.push(FormalToken::Word(relation.as_str().to_string()))
        }
        Conclusion::Attr {
            attribute, expr, ..
        } => {
            out.push(FormalToken::Word(attribute.as_str().to_string()));
            expression_tokens(expr, &mut out);
        }
    }
    out
}

/// True when every required token appears in the line: words are matched
/// by shared lemma (so a fluency pass may inflect them), numeric literals
/// exactly. Possessives (`Garey's`) count as the bare name.
pub fn preserves_tokens(line: &str, tokens: &[FormalToken]) -> bool {
    let mut words: Vec<String> = Vec::new();
    for raw in line.split_whitespace() {
        let trimmed = raw.trim_matches(|c: char| !(c.is_ascii_alphanumeric() || c == '-'));
        if trimmed.is_empty() {
            continue;
        }
        words.push(trimmed.to_string());
        for sep in ['\'', '\u{2019}'] {
            if let Some((head, _)) = trimmed.split_once(sep) {
                if !head.is_empty() {
                    words.push(head.to_string());
                }
            }
        }
    }
    tokens.iter().all(|token| match token {
        FormalToken::Word(w) => words.iter().any(|cand| lemmas_match(cand, w)),
        FormalToken::Literal(l) => words.iter().any(|cand| cand == l),
    })
}

fn builtin_bank(cat: Category) -> &'static [&'static str] {
    match cat {
        Category::AttributeFact => &[
            "the value of {a_j} for {e_i} is {num}",
            "{num} is recorded for {e_i} in the {a_j} attribute",
            "the {a_j} property for {e_i} is given by {num}",
            "the {a_j} field of {e_i} is represented by {num}",
            "the {a_j} of {e_i} is recorded as {num}",
            "the {a_j} property for {e_i} is represented by the value {num}",
            "the value {num} is logged for {e_i} under the {a_j} attribute",
            "{e_i} is described by {num} within the {a_j} context",
            "{num} is associated with {e_i} for the {a_j} attribute",
            "the value {num} is ascribed to {e_i} for the {a_j} attribute",
            "within {e_i}, the {a_j} attribute is noted as {num}",
        ],
        Category::RelationFact => &[
            "{e_i} {r_k} {e_j}",
            "it can be said that {e_i} {r_k} {e_j}",
            "the {r_k} correlation is present between {e_i} and {e_j}",
            "in the context of {r_k}, {e_i} and {e_j} share a connection",
            "the relationship {r_k} defines a connection between {e_i} and {e_j}",
            "the {r_k} link is observed between {e_i} and {e_j}",
            "{e_i} and {e_j} form a connection of the {r_k} relationship",
            "there exists a relationship {r_k} between {e_i} and {e_j}",
        ],
        Category::Implication => &[
            "if {condition}, {conclusion}",
            "whenever {condition}, {conclusion}",
            "given {condition}, {conclusion} follows",
            "{conclusion} can be deduced from {condition}",
            "{conclusion} is a natural consequence of {condition} being true",
            "{conclusion} can be safely inferred from {condition}",
        ],
        Category::Retrieval => &[
            "the value of {a_j} for {e_i}",
            "property {a_j} of {e_i}",
            "the value associated with the attribute {a_j} of {e_i}",
            "the value corresponding to {a_j} within {e_i}",
            "{e_i}'s {a_j}",
            "the characteristic {a_j} of {e_i}",
            "the property denoted by {a_j} for {e_i}",
        ],
        Category::CalculationAddition => &[
            "multiplying {x} by {k} and adding {b}",
            "multiplying {x} by {k} with an addition of {b}",
            "scaling {x} by {k}, then adding {b}",
            "adding {b} to {k} times {x}",
            "increasing {x} {k} times, followed by adding {b}",
        ],
        Category::CalculationSubtraction => &[
            "multiplying {x} by {k} and subtracting {b}",
            "multiplying {x} by {k} with a subtraction of {b}",
            "scaling {x} by {k}, then subtracting {b}",
            "subtracting {b} from {k} times {x}",
            "taking {x} multiplied by {k} and reducing the result by {b}",
        ],
        Category::AggregationMax => &[
            "the larger of {expr1} and {expr2}",
            "the maximum value between {expr1} and {expr2}",
            "the greater of {expr1} and {expr2}",
            "the maximum of {expr1} and {expr2}",
        ],
        Category::AggregationMin => &[
            "the minimum value of {expr1} and {expr2}",
            "the smaller of {expr1} and {expr2}",
            "the lesser of {expr1} and {expr2}",
            "the minimum of {expr1} and {expr2}",
            "the minimum value between {expr1} and {expr2}",
        ],
        Category::AggregationAddition => &[
            "the total of {expr1} and {expr2}",
            "the sum of {expr1} and {expr2}",
            "the combined value of {expr1} and {expr2}",
            "the result of adding {expr1} and {expr2}",
            "adding {expr1} to {expr2}",
        ],
        Category::AggregationSubtraction => &[
            "the difference between {expr1} and {expr2}",
            "the result of subtracting {expr2} from {expr1}",
            "the value of {expr1} minus {expr2}",
            "{expr1} reduced by {expr2}",
            "deducting {expr2} from {expr1}",
        ],
    }
}
