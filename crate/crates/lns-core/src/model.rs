//! The formal vocabulary of a reasoning world: facts, rules, expressions,
//! queries, and the arithmetic evaluation semantics.
//!
//! Everything in this module is an immutable value type. Arithmetic is
//! checked `i64`; any overflow surfaces as an error rather than wrapping.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Signed attribute magnitude. 64 bits so that products of range-limited
/// operands survive deep calculation chains (synthesis still rejects any
/// candidate whose evaluation would overflow).
pub type Value = i64;

/// A word drawn from the entity/attribute/relation pools.
///
/// Tokens compare, order, and hash **ASCII-case-insensitively** while
/// preserving the original spelling for display, so `Hamper` and `hamper`
/// are the same key but render differently.
#[derive(Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn new(s: impl Into<String>) -> Self {
        Token(s.into())
    }

    /// The original spelling.
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Case-folded form used for identity.
    pub fn key(&self) -> String {
        self.0.to_ascii_lowercase()
    }
}

impl PartialEq for Token {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Eq for Token {}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.0.bytes().map(|b| b.to_ascii_lowercase());
        let b = other.0.bytes().map(|b| b.to_ascii_lowercase());
        a.cmp(b)
    }
}

impl Hash for Token {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Token {
    fn from(s: &str) -> Self {
        Token(s.to_owned())
    }
}

/// Placeholder-variable slot, local to one rule.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VarId(pub usize);

/// Ground statement: either an attribute value assignment or a directed
/// relation between two entities.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fact {
    Attribute {
        entity: Token,
        attribute: Token,
        value: Value,
    },
    Relation {
        relation: Token,
        subject: Token,
        object: Token,
    },
}

impl Fact {
    pub fn attribute(entity: impl Into<Token>, attribute: impl Into<Token>, value: Value) -> Self {
        Fact::Attribute {
            entity: entity.into(),
            attribute: attribute.into(),
            value,
        }
    }

    pub fn relation(
        relation: impl Into<Token>,
        subject: impl Into<Token>,
        object: impl Into<Token>,
    ) -> Self {
        Fact::Relation {
            relation: relation.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }

    /// Canonical textual form: `is(Susana, low, -8)` or `sacrifice(Cecilla, Terrianne)`.
    pub fn formal(&self) -> String {
        use fmt::Write;
        let mut s = String::new();
        match self {
            Fact::Attribute {
                entity,
                attribute,
                value,
            } => write!(s, "is({entity}, {attribute}, {value})").unwrap(),
            Fact::Relation {
                relation,
                subject,
                object,
            } => write!(s, "{relation}({subject}, {object})").unwrap(),
        }
        s
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formal())
    }
}

/// Aggregation operator over two sub-expressions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggOp {
    Max,
    Min,
    Addition,
    Subtraction,
}

impl AggOp {
    pub const ALL: [AggOp; 4] = [AggOp::Max, AggOp::Min, AggOp::Addition, AggOp::Subtraction];

    /// The function-style name used in the canonical grammar (`max(..)`, …).
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Max => "max",
            AggOp::Min => "min",
            AggOp::Addition => "addition",
            AggOp::Subtraction => "subtraction",
        }
    }

    pub fn apply(self, l: Value, r: Value) -> Option<Value> {
        match self {
            AggOp::Max => Some(l.max(r)),
            AggOp::Min => Some(l.min(r)),
            AggOp::Addition => l.checked_add(r),
            AggOp::Subtraction => l.checked_sub(r),
        }
    }
}

/// Numeric payload of an attribute conclusion.
///
/// `Calculation` is the linear form `k·x + b`; a subtraction surface form
/// (`k·x − b`) is simply a negative `b`, and the renderer picks the wording
/// family by the sign.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expression {
    Constant { c: Value },
    Retrieval { var: VarId, attribute: Token },
    Calculation {
        k: Value,
        var: VarId,
        attribute: Token,
        b: Value,
    },
    Aggregation {
        op: AggOp,
        left: Box<Expression>,
        right: Box<Expression>,
    },
}

impl Expression {
    /// Variables referenced anywhere in the expression, in syntactic order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expression::Constant { .. } => {}
            Expression::Retrieval { var, .. } | Expression::Calculation { var, .. } => {
                out.push(*var)
            }
            Expression::Aggregation { left, right, .. } => {
                left.collect_vars(out);
                right.collect_vars(out);
            }
        }
    }

    /// `(var, attribute)` operand slots that need a value at evaluation
    /// time, in syntactic order (duplicates preserved).
    pub fn operands(&self) -> Vec<(VarId, Token)> {
        let mut out = Vec::new();
        self.collect_operands(&mut out);
        out
    }

    fn collect_operands(&self, out: &mut Vec<(VarId, Token)>) {
        match self {
            Expression::Constant { .. } => {}
            Expression::Retrieval { var, attribute }
            | Expression::Calculation { var, attribute, .. } => {
                out.push((*var, attribute.clone()))
            }
            Expression::Aggregation { left, right, .. } => {
                left.collect_operands(out);
                right.collect_operands(out);
            }
        }
    }

    /// Aggregations may not nest: their children are constant, retrieval,
    /// or calculation only.
    pub fn aggregation_flat(&self) -> bool {
        match self {
            Expression::Aggregation { left, right, .. } => {
                !matches!(**left, Expression::Aggregation { .. })
                    && !matches!(**right, Expression::Aggregation { .. })
            }
            _ => true,
        }
    }
}

/// Condition atom: a fact shape over placeholder variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    Attr {
        var: VarId,
        attribute: Token,
        value: Value,
    },
    Rel {
        relation: Token,
        subject: VarId,
        object: VarId,
    },
}

impl Atom {
    /// Variables of the atom in syntactic order.
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Atom::Attr { var, .. } => alloc::vec![*var],
            Atom::Rel {
                subject, object, ..
            } => alloc::vec![*subject, *object],
        }
    }
}

/// Conclusion atom of a rule.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conclusion {
    Rel {
        relation: Token,
        subject: VarId,
        object: VarId,
    },
    Attr {
        var: VarId,
        attribute: Token,
        expr: Expression,
    },
}

impl Conclusion {
    pub fn vars(&self) -> Vec<VarId> {
        match self {
            Conclusion::Rel {
                subject, object, ..
            } => alloc::vec![*subject, *object],
            Conclusion::Attr { var, expr, .. } => {
                let mut v = alloc::vec![*var];
                expr.collect_vars(&mut v);
                v
            }
        }
    }
}

/// Implication: a conjunction of condition atoms entailing one conclusion.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Rule {
    /// 1-based index within its world (assigned after shuffling).
    pub id: usize,
    pub condition: Vec<Atom>,
    pub conclusion: Conclusion,
}

/// What a sample asks for: the value of one attribute of one entity.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Query {
    pub entity: Token,
    pub attribute: Token,
}

impl Query {
    /// Canonical textual form: `is(Granville, withdrawn, ?)`.
    pub fn formal(&self) -> String {
        use fmt::Write;
        let mut s = String::new();
        write!(s, "is({}, {}, ?)", self.entity, self.attribute).unwrap();
        s
    }
}

/// Assignment of placeholder variables to concrete entities.
///
/// Ordered by `(variable, entity)` pairs; since all bindings of one rule
/// share the same variable set, this is exactly "lexicographic by bound
/// entities in variable order".
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Binding(pub BTreeMap<VarId, Token>);

impl Binding {
    pub fn new() -> Self {
        Binding(BTreeMap::new())
    }

    pub fn get(&self, var: VarId) -> Option<&Token> {
        self.0.get(&var)
    }

    pub fn insert(&mut self, var: VarId, entity: Token) {
        self.0.insert(var, entity);
    }

    pub fn remove(&mut self, var: VarId) {
        self.0.remove(&var);
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    /// Entities in variable order — the deterministic sort key for binding
    /// enumeration.
    pub fn entities_in_var_order(&self) -> Vec<&Token> {
        self.0.values().collect()
    }
}

/// Failure modes of expression evaluation and substitution.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ModelError {
    #[error("no value known for attribute `{attribute}` of `{entity}`")]
    MissingAttribute { entity: Token, attribute: Token },
    #[error("arithmetic overflow during expression evaluation")]
    Overflow,
    #[error("variable {0:?} not covered by the binding")]
    UnboundVariable(VarId),
}

/// Evaluates `expr` under `binding`, reading attribute values through
/// `lookup`. All arithmetic is checked.
pub fn eval_expression<F>(
    expr: &Expression,
    binding: &Binding,
    lookup: &F,
) -> Result<Value, ModelError>
where
    F: Fn(&Token, &Token) -> Option<Value>,
{
    let fetch = |var: VarId, attribute: &Token| -> Result<Value, ModelError> {
        let entity = binding
            .get(var)
            .ok_or(ModelError::UnboundVariable(var))?;
        lookup(entity, attribute).ok_or_else(|| ModelError::MissingAttribute {
            entity: entity.clone(),
            attribute: attribute.clone(),
        })
    };
    match expr {
        Expression::Constant { c } => Ok(*c),
        Expression::Retrieval { var, attribute } => fetch(*var, attribute),
        Expression::Calculation {
            k,
            var,
            attribute,
            b,
        } => {
            let x = fetch(*var, attribute)?;
            k.checked_mul(x)
                .and_then(|kx| kx.checked_add(*b))
                .ok_or(ModelError::Overflow)
        }
        Expression::Aggregation { op, left, right } => {
            let l = eval_expression(left, binding, lookup)?;
            let r = eval_expression(right, binding, lookup)?;
            op.apply(l, r).ok_or(ModelError::Overflow)
        }
    }
}

/// Grounds a condition atom under a binding.
pub fn substitute_atom(atom: &Atom, binding: &Binding) -> Result<Fact, ModelError> {
    let bound = |var: VarId| -> Result<Token, ModelError> {
        binding
            .get(var)
            .cloned()
            .ok_or(ModelError::UnboundVariable(var))
    };
    match atom {
        Atom::Attr {
            var,
            attribute,
            value,
        } => Ok(Fact::Attribute {
            entity: bound(*var)?,
            attribute: attribute.clone(),
            value: *value,
        }),
        Atom::Rel {
            relation,
            subject,
            object,
        } => Ok(Fact::Relation {
            relation: relation.clone(),
            subject: bound(*subject)?,
            object: bound(*object)?,
        }),
    }
}

/// Grounds a conclusion under a binding. Attribute conclusions take the
/// already-evaluated `value` (evaluation is the caller's concern, since it
/// needs a fact lookup).
pub fn substitute_conclusion(
    conclusion: &Conclusion,
    binding: &Binding,
    value: Value,
) -> Result<Fact, ModelError> {
    let bound = |var: VarId| -> Result<Token, ModelError> {
        binding
            .get(var)
            .cloned()
            .ok_or(ModelError::UnboundVariable(var))
    };
    match conclusion {
        Conclusion::Rel {
            relation,
            subject,
            object,
        } => Ok(Fact::Relation {
            relation: relation.clone(),
            subject: bound(*subject)?,
            object: bound(*object)?,
        }),
        Conclusion::Attr { var, attribute, .. } => Ok(Fact::Attribute {
            entity: bound(*var)?,
            attribute: attribute.clone(),
            value,
        }),
    }
}

/// A rule is well-formed when its condition is nonempty, every conclusion
/// variable (including those inside the expression) occurs in some
/// condition atom, and aggregations do not nest.
pub fn rule_well_formed(rule: &Rule) -> bool {
    if rule.condition.is_empty() {
        return false;
    }
    let mut condition_vars: Vec<VarId> = Vec::new();
    for atom in &rule.condition {
        condition_vars.extend(atom.vars());
    }
    let covered = rule
        .conclusion
        .vars()
        .iter()
        .all(|v| condition_vars.contains(v));
    let flat = match &rule.conclusion {
        Conclusion::Attr { expr, .. } => expr.aggregation_flat(),
        Conclusion::Rel { .. } => true,
    };
    covered && flat
}

/// Maps each variable of a rule to its display name `entity_1`, `entity_2`,
/// … in first-occurrence order (condition atoms in order, then the
/// conclusion).
pub fn rule_var_names(rule: &Rule) -> BTreeMap<VarId, String> {
    let mut order: Vec<VarId> = Vec::new();
    let push = |v: VarId, order: &mut Vec<VarId>| {
        if !order.contains(&v) {
            order.push(v);
        }
    };
    for atom in &rule.condition {
        for v in atom.vars() {
            push(v, &mut order);
        }
    }
    for v in rule.conclusion.vars() {
        push(v, &mut order);
    }
    order
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, alloc::format!("entity_{}", i + 1)))
        .collect()
}

impl Expression {
    /// Canonical textual form with variables shown by `names`:
    /// `7`, `entity_1[attr]`, `3 * entity_1[attr] - 9`, `max(a, b)`.
    /// A zero `b` is omitted from the linear form.
    pub fn formal(&self, names: &BTreeMap<VarId, String>) -> String {
        use fmt::Write;
        let var_name = |v: &VarId| -> String {
            names
                .get(v)
                .cloned()
                .unwrap_or_else(|| alloc::format!("entity_?{}", v.0))
        };
        let mut s = String::new();
        match self {
            Expression::Constant { c } => write!(s, "{c}").unwrap(),
            Expression::Retrieval { var, attribute } => {
                write!(s, "{}[{attribute}]", var_name(var)).unwrap()
            }
            Expression::Calculation {
                k,
                var,
                attribute,
                b,
            } => {
                write!(s, "{k} * {}[{attribute}]", var_name(var)).unwrap();
                match b.cmp(&0) {
                    Ordering::Greater => write!(s, " + {b}").unwrap(),
                    Ordering::Less => write!(s, " - {}", b.unsigned_abs()).unwrap(),
                    Ordering::Equal => {}
                }
            }
            Expression::Aggregation { op, left, right } => write!(
                s,
                "{}({}, {})",
                op.name(),
                left.formal(names),
                right.formal(names)
            )
            .unwrap(),
        }
        s
    }
}

impl Atom {
    pub fn formal(&self, names: &BTreeMap<VarId, String>) -> String {
        use fmt::Write;
        let var_name = |v: &VarId| -> String {
            names
                .get(v)
                .cloned()
                .unwrap_or_else(|| alloc::format!("entity_?{}", v.0))
        };
        let mut s = String::new();
        match self {
            Atom::Attr {
                var,
                attribute,
                value,
            } => write!(s, "is({}, {attribute}, {value})", var_name(var)).unwrap(),
            Atom::Rel {
                relation,
                subject,
                object,
            } => write!(s, "{relation}({}, {})", var_name(subject), var_name(object)).unwrap(),
        }
        s
    }
}

impl Rule {
    /// Canonical textual form:
    /// `defuse(entity_1, entity_2) => is(entity_2, technical, …)`.
    pub fn formal(&self) -> String {
        use fmt::Write;
        let names = rule_var_names(self);
        let mut s = String::new();
        for (i, atom) in self.condition.iter().enumerate() {
            if i > 0 {
                s.push_str(" and ");
            }
            s.push_str(&atom.formal(&names));
        }
        s.push_str(" => ");
        match &self.conclusion {
            Conclusion::Rel {
                relation,
                subject,
                object,
            } => {
                let var_name = |v: &VarId| names.get(v).cloned().unwrap_or_default();
                write!(s, "{relation}({}, {})", var_name(subject), var_name(object)).unwrap()
            }
            Conclusion::Attr {
                var,
                attribute,
                expr,
            } => {
                let var_name = names.get(var).cloned().unwrap_or_default();
                write!(s, "is({var_name}, {attribute}, {})", expr.formal(&names)).unwrap()
            }
        }
        s
    }
}
