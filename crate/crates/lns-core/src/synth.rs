//! Backward construction of reasoning worlds.
//!
//! Starting from the query as the root goal, construction synthesizes a rule
//! that concludes it, turns the rule's condition atoms and expression
//! operands into child goals, and recurses. A global rule budget — the
//! sampled target depth — is spent one unit per synthesized rule: a goal
//! becomes a plain fact when the budget is gone, must become a rule when it
//! is the only goal left while budget remains, and otherwise flips a fair
//! coin. This spends the budget exactly, so the finished derivation always
//! has precisely `target` rule applications.
//!
//! Values flow bottom-up: a rule's condition atoms and operands are chosen
//! as `(entity, attribute)` pairs first, the children are built, and only
//! then are the atoms instantiated with the values the children settled on.
//! This is why condition atoms can carry intermediate values far outside the
//! base fact range. Every insertion goes through the incremental closure, so
//! a candidate that would contradict the world (or overflow) is rolled back
//! and redrawn; bounded retries keep the whole process total.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;

use crate::engine::{FactSet, WorldState};
use crate::model::{AggOp, Atom, Conclusion, Expression, Fact, Query, Rule, Token, Value, VarId};
use crate::vocab::WorldElements;

/// Attempts per fact or rule candidate before giving up.
pub const INNER_RETRIES: usize = 64;
/// Fresh construction attempts (resampling the target depth) before
/// reporting exhaustion.
pub const OUTER_RETRIES: usize = 16;

/// A total that is either fixed or proportional to the sampled depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountSpec {
    Fixed(usize),
    PerDepth(usize),
}

impl CountSpec {
    pub fn resolve(&self, depth: usize) -> usize {
        match self {
            CountSpec::Fixed(n) => *n,
            CountSpec::PerDepth(per) => per * depth,
        }
    }
}

/// Knobs controlling one dataset's difficulty.
#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    pub n_entities: usize,
    pub n_attributes: usize,
    pub n_relations: usize,
    pub n_facts: CountSpec,
    pub n_rules: CountSpec,
    /// Inclusive range the target depth is drawn from.
    pub depth_range: (usize, usize),
    /// Inclusive range for the number of condition atoms per rule.
    pub condition_count: (usize, usize),
    /// Draw weights for conclusion expressions:
    /// constant, retrieval, calculation, aggregation.
    pub expr_weights: [u32; 4],
    /// Draw weights for aggregation children:
    /// constant, retrieval, calculation.
    pub agg_weights: [u32; 3],
    /// Inclusive range for `k`, `b`, and base fact values.
    pub operand_range: (Value, Value),
    /// Samples per dataset.
    pub size: usize,
    pub seed: u64,
}

/// Rejected configuration.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("depth range must satisfy 1 <= min <= max")]
    DepthRange,
    #[error("condition count range must satisfy 1 <= min <= max")]
    ConditionCount,
    #[error("operand range is empty")]
    OperandRange,
    #[error("all expression weights are zero")]
    ExprWeights,
    #[error("aggregation is enabled but all child weights are zero")]
    AggWeights,
    #[error("world element counts must be positive")]
    ElementCounts,
    #[error("rule total {total} cannot accommodate depth {depth}")]
    RuleBudget { total: usize, depth: usize },
    #[error("dataset size must be positive")]
    Size,
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.depth_range.0 < 1 || self.depth_range.0 > self.depth_range.1 {
            return Err(ConfigError::DepthRange);
        }
        if self.condition_count.0 < 1 || self.condition_count.0 > self.condition_count.1 {
            return Err(ConfigError::ConditionCount);
        }
        if self.operand_range.0 > self.operand_range.1 {
            return Err(ConfigError::OperandRange);
        }
        if self.expr_weights.iter().all(|w| *w == 0) {
            return Err(ConfigError::ExprWeights);
        }
        if self.expr_weights[3] > 0 && self.agg_weights.iter().all(|w| *w == 0) {
            return Err(ConfigError::AggWeights);
        }
        if self.n_entities == 0 || self.n_attributes == 0 || self.n_relations == 0 {
            return Err(ConfigError::ElementCounts);
        }
        for depth in self.depth_range.0..=self.depth_range.1 {
            let total = self.n_rules.resolve(depth);
            if total < depth {
                return Err(ConfigError::RuleBudget { total, depth });
            }
        }
        if self.size == 0 {
            return Err(ConfigError::Size);
        }
        Ok(())
    }
}

/// Why construction failed.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("synthesis retry budget exhausted")]
    Exhausted,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Identity of a derivable item: an attribute slot or a relation triple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Attr(Token, Token),
    Rel(Token, Token, Token),
}

/// How a dependency is satisfied: by a base fact (index into the support
/// fact list) or by an earlier derivation node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepRef {
    Fact(usize),
    Int(usize),
}

/// One rule application in the finished derivation.
#[derive(Clone, Debug)]
pub struct RuleNode {
    /// Index into the construction's rule list.
    pub rule_index: usize,
    /// Everything this application relies on: condition-atom satisfiers
    /// first, then operand feeders, deduplicated in that order.
    pub deps: Vec<DepRef>,
    /// The derived fact (attribute conclusions carry the evaluated value).
    pub conclusion: Fact,
    /// Evaluated operand values, aligned with the conclusion expression's
    /// operands in syntactic order; used for rendering the arithmetic.
    pub operand_values: Vec<Value>,
}

/// A complete synthesized world before distraction padding.
#[derive(Clone, Debug)]
pub struct Construction {
    pub elements: WorldElements,
    pub query: Query,
    pub target_depth: usize,
    pub world: WorldState,
    /// Base facts; indices are what `DepRef::Fact` points at.
    pub facts: Vec<Fact>,
    /// Rules; indices are what `RuleNode::rule_index` points at.
    pub rules: Vec<Rule>,
    /// Derivation nodes in completion order; the root (query) is last.
    pub nodes: Vec<RuleNode>,
    pub answer: Value,
    /// How many of `facts` / `rules` belong to the derivation itself;
    /// distraction appends after these.
    pub gold_fact_count: usize,
    pub gold_rule_count: usize,
}

#[derive(Clone)]
struct BuildState {
    world: WorldState,
    facts: Vec<Fact>,
    rules: Vec<Rule>,
    nodes: Vec<RuleNode>,
    /// Finished goals, reusable as dependencies.
    completed: BTreeMap<Key, DepRef>,
    /// Goals created but not finished; off-limits for reuse or re-creation.
    reserved: BTreeSet<Key>,
    /// Number of created-but-unstarted goals. When the goal being decided
    /// is the only one left and budget remains, it must become a rule.
    pending: usize,
    /// Rule applications still to synthesize.
    budget: usize,
}

struct Env<'a> {
    elements: &'a WorldElements,
    config: &'a SynthesisConfig,
}

enum BuildFail {
    /// This candidate was bad; the caller may redraw.
    Retry,
    /// A retry budget ran out; abort the whole attempt.
    Exhausted,
}

fn sample_usize<R: Rng>(range: (usize, usize), rng: &mut R) -> usize {
    rng.random_range(range.0..=range.1)
}

fn sample_value<R: Rng>(range: (Value, Value), rng: &mut R) -> Value {
    rng.random_range(range.0..=range.1)
}

fn weighted_draw<R: Rng>(weights: &[u32], rng: &mut R) -> usize {
    let total: u64 = weights.iter().map(|w| u64::from(*w)).sum();
    debug_assert!(total > 0, "weighted draw over all-zero weights");
    let mut roll = rng.random_range(0..total);
    for (i, w) in weights.iter().enumerate() {
        let w = u64::from(*w);
        if roll < w {
            return i;
        }
        roll -= w;
    }
    weights.len() - 1
}

/// Expression skeleton: what to build before deciding operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChildShape {
    Constant,
    Retrieval,
    Calculation,
}

/// Top-level expression skeleton drawn from the configured weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExprShape {
    Constant,
    Retrieval,
    Calculation,
    Aggregation(AggOp, ChildShape, ChildShape),
}

/// Draws an expression skeleton: the top-level form by `expr_weights`, the
/// aggregation operator uniformly, and aggregation children by
/// `agg_weights`.
pub fn sample_shape<R: Rng>(config: &SynthesisConfig, rng: &mut R) -> ExprShape {
    match weighted_draw(&config.expr_weights, rng) {
        0 => ExprShape::Constant,
        1 => ExprShape::Retrieval,
        2 => ExprShape::Calculation,
        _ => {
            let op = AggOp::ALL[rng.random_range(0..AggOp::ALL.len())];
            let left = child_shape(config, rng);
            let right = child_shape(config, rng);
            ExprShape::Aggregation(op, left, right)
        }
    }
}

fn child_shape<R: Rng>(config: &SynthesisConfig, rng: &mut R) -> ChildShape {
    match weighted_draw(&config.agg_weights, rng) {
        0 => ChildShape::Constant,
        1 => ChildShape::Retrieval,
        _ => ChildShape::Calculation,
    }
}

/// Draws a full expression whose operands pick uniformly from `available`
/// `(variable, attribute)` slots. Falls back to a constant when a
/// variable-requiring form is drawn but no slot exists.
pub fn sample_expression<R: Rng>(
    config: &SynthesisConfig,
    available: &[(VarId, Token)],
    rng: &mut R,
) -> Expression {
    let shape = sample_shape(config, rng);
    let mut pick = |rng: &mut R| -> Option<(VarId, Token)> {
        if available.is_empty() {
            None
        } else {
            let (var, attr) = &available[rng.random_range(0..available.len())];
            Some((*var, attr.clone()))
        }
    };
    let leaf = |shape: ChildShape, rng: &mut R, pick: &mut dyn FnMut(&mut R) -> Option<(VarId, Token)>| {
        match shape {
            ChildShape::Constant => Expression::Constant {
                c: sample_value(config.operand_range, rng),
            },
            ChildShape::Retrieval => match pick(rng) {
                Some((var, attribute)) => Expression::Retrieval { var, attribute },
                None => Expression::Constant {
                    c: sample_value(config.operand_range, rng),
                },
            },
            ChildShape::Calculation => {
                let k = sample_value(config.operand_range, rng);
                let b = sample_value(config.operand_range, rng);
                match pick(rng) {
                    Some((var, attribute)) => Expression::Calculation {
                        k,
                        var,
                        attribute,
                        b,
                    },
                    None => Expression::Constant {
                        c: sample_value(config.operand_range, rng),
                    },
                }
            }
        }
    };
    match shape {
        ExprShape::Constant => leaf(ChildShape::Constant, rng, &mut pick),
        ExprShape::Retrieval => leaf(ChildShape::Retrieval, rng, &mut pick),
        ExprShape::Calculation => leaf(ChildShape::Calculation, rng, &mut pick),
        ExprShape::Aggregation(op, l, r) => {
            let left = leaf(l, rng, &mut pick);
            let right = leaf(r, rng, &mut pick);
            Expression::Aggregation {
                op,
                left: alloc::boxed::Box::new(left),
                right: alloc::boxed::Box::new(right),
            }
        }
    }
}

/// Builds one reasoning world for `query`. Resamples the target depth up to
/// [`OUTER_RETRIES`] times; within one attempt, facts and rules are redrawn
/// up to [`INNER_RETRIES`] times each.
pub fn construct_dag<R: Rng>(
    elements: &WorldElements,
    query: &Query,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<Construction, SynthesisError> {
    config.validate()?;
    let env = Env { elements, config };
    for _ in 0..OUTER_RETRIES {
        let target = sample_usize(config.depth_range, rng);
        let mut st = BuildState {
            world: WorldState::new(&FactSet::new(), &[]).expect("empty world is consistent"),
            facts: Vec::new(),
            rules: Vec::new(),
            nodes: Vec::new(),
            completed: BTreeMap::new(),
            reserved: BTreeSet::new(),
            pending: 1,
            budget: target,
        };
        let root = Key::Attr(query.entity.clone(), query.attribute.clone());
        st.reserved.insert(root.clone());
        if build_goal(&env, &mut st, rng, root.clone()).is_err() {
            continue;
        }
        // The budget-forcing argument says these cannot fire; keep them as
        // cheap guards so a latent bug degrades into a retry, not bad data.
        if st.budget != 0 || st.nodes.len() != target {
            continue;
        }
        if st.facts.len() > config.n_facts.resolve(target)
            || st.rules.len() > config.n_rules.resolve(target)
        {
            // The derivation alone overflows the configured totals; padding
            // could never reach exact counts. Try a fresh draw.
            continue;
        }
        let answer = st
            .world
            .derived()
            .attr(&query.entity, &query.attribute)
            .expect("root goal completed");
        debug_assert!(
            matches!(st.completed.get(&root), Some(DepRef::Int(i)) if i + 1 == st.nodes.len()),
            "root must be the final derivation node"
        );
        let gold_fact_count = st.facts.len();
        let gold_rule_count = st.rules.len();
        return Ok(Construction {
            elements: elements.clone(),
            query: query.clone(),
            target_depth: target,
            world: st.world,
            facts: st.facts,
            rules: st.rules,
            nodes: st.nodes,
            answer,
            gold_fact_count,
            gold_rule_count,
        });
    }
    Err(SynthesisError::Exhausted)
}

fn build_goal<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    key: Key,
) -> Result<(), BuildFail> {
    st.pending -= 1;
    let as_rule = if st.budget == 0 {
        false
    } else if st.pending == 0 {
        // Last goal standing with budget to spend: must extend the chain.
        true
    } else {
        rng.random_bool(0.5)
    };
    if as_rule {
        synthesize_rule(env, st, rng, key)
    } else {
        synthesize_fact(env, st, rng, key)
    }
}

fn complete(st: &mut BuildState, key: Key, dep: DepRef) {
    st.reserved.remove(&key);
    st.completed.insert(key, dep);
}

fn synthesize_fact<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    key: Key,
) -> Result<(), BuildFail> {
    match &key {
        Key::Attr(entity, attribute) => {
            for _ in 0..INNER_RETRIES {
                let value = sample_value(env.config.operand_range, rng);
                let fact = Fact::attribute(entity.clone(), attribute.clone(), value);
                let mut probe = st.world.clone();
                if probe.add_fact(&fact).is_ok() {
                    st.world = probe;
                    st.facts.push(fact);
                    complete(st, key, DepRef::Fact(st.facts.len() - 1));
                    return Ok(());
                }
            }
            Err(BuildFail::Exhausted)
        }
        Key::Rel(relation, subject, object) => {
            // The goal pins the triple, so there is nothing to redraw.
            let fact = Fact::relation(relation.clone(), subject.clone(), object.clone());
            let mut probe = st.world.clone();
            if probe.add_fact(&fact).is_ok() {
                st.world = probe;
                st.facts.push(fact);
                complete(st, key, DepRef::Fact(st.facts.len() - 1));
                Ok(())
            } else {
                Err(BuildFail::Retry)
            }
        }
    }
}

fn synthesize_rule<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    key: Key,
) -> Result<(), BuildFail> {
    st.budget -= 1;
    for _ in 0..INNER_RETRIES {
        let snapshot = st.clone();
        match try_rule(env, st, rng, &key) {
            Ok(()) => return Ok(()),
            Err(BuildFail::Retry) => *st = snapshot,
            Err(BuildFail::Exhausted) => {
                *st = snapshot;
                return Err(BuildFail::Exhausted);
            }
        }
    }
    Err(BuildFail::Exhausted)
}

/// Picks an attribute pair on `entity` usable as a dependency: an already
/// finished pair (reuse), a pair this rule has already queued (shared
/// child), or an untouched pair (new child goal, queued here). Pairs being
/// built elsewhere, the goal itself, pairs in `exclude`, and pairs with
/// incidental derived values are skipped.
fn pick_attr_pair<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    entity: &Token,
    goal: &Key,
    exclude: &BTreeSet<Key>,
    children: &mut Vec<Key>,
) -> Result<(Token, Key), BuildFail> {
    for _ in 0..16 {
        let attrs = &env.elements.attributes;
        let attribute = attrs[rng.random_range(0..attrs.len())].clone();
        let key = Key::Attr(entity.clone(), attribute.clone());
        if key == *goal || exclude.contains(&key) {
            continue;
        }
        if children.contains(&key) || st.completed.contains_key(&key) {
            return Ok((attribute, key));
        }
        if st.reserved.contains(&key) {
            continue;
        }
        if st.world.derived().attr(entity, &attribute).is_some() {
            // Derived incidentally by an over-general rule: it has a value
            // but no node to cite, so it cannot serve as a dependency.
            continue;
        }
        st.reserved.insert(key.clone());
        st.pending += 1;
        children.push(key.clone());
        return Ok((attribute, key));
    }
    Err(BuildFail::Retry)
}

/// Relation analogue of [`pick_attr_pair`]: orients the two bound variables
/// randomly and draws a relation name, yielding a reusable or fresh triple.
fn pick_rel_atom<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    bound: &[(VarId, Token)],
    goal: &Key,
    exclude: &BTreeSet<Key>,
    children: &mut Vec<Key>,
) -> Result<(Atom, Key), BuildFail> {
    debug_assert!(bound.len() == 2);
    for _ in 0..16 {
        let rels = &env.elements.relations;
        let relation = rels[rng.random_range(0..rels.len())].clone();
        let flip = rng.random_bool(0.5);
        let (s, o) = if flip {
            (&bound[1], &bound[0])
        } else {
            (&bound[0], &bound[1])
        };
        let key = Key::Rel(relation.clone(), s.1.clone(), o.1.clone());
        if key == *goal || exclude.contains(&key) {
            continue;
        }
        let atom = Atom::Rel {
            relation,
            subject: s.0,
            object: o.0,
        };
        if children.contains(&key) || st.completed.contains_key(&key) {
            return Ok((atom, key));
        }
        if st.reserved.contains(&key) {
            continue;
        }
        if let Key::Rel(r, se, oe) = &key {
            if st.world.derived().has_relation(r, se, oe) {
                continue;
            }
        }
        st.reserved.insert(key.clone());
        st.pending += 1;
        children.push(key.clone());
        return Ok((atom, key));
    }
    Err(BuildFail::Retry)
}

/// Skeleton of a condition atom, fixed before child goals resolve values.
enum AtomSpec {
    Attr { var: VarId, attribute: Token },
    Rel(Atom),
}

fn try_rule<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    goal: &Key,
) -> Result<(), BuildFail> {
    let m = sample_usize(env.config.condition_count, rng);
    let mut bound: Vec<(VarId, Token)> = Vec::new();
    let mut specs: Vec<AtomSpec> = Vec::new();
    let mut dep_keys: Vec<Key> = Vec::new();
    let mut children: Vec<Key> = Vec::new();
    let mut used_atoms: BTreeSet<Key> = BTreeSet::new();

    let conclusion = match goal {
        Key::Attr(entity, attribute) => {
            bound.push((VarId(0), entity.clone()));
            let two_vars = m >= 2 && rng.random_bool(0.5);
            if two_vars {
                let other = pick_other_entity(env, rng, &[entity])?;
                bound.push((VarId(1), other));
                let (atom, key) =
                    pick_rel_atom(env, st, rng, &bound, goal, &used_atoms, &mut children)?;
                used_atoms.insert(key.clone());
                dep_keys.push(key);
                specs.push(AtomSpec::Rel(atom));
            }
            for _ in 0..m - usize::from(two_vars) {
                let (var, var_entity) = bound[rng.random_range(0..bound.len())].clone();
                let (attribute, key) = pick_attr_pair(
                    env,
                    st,
                    rng,
                    &var_entity,
                    goal,
                    &used_atoms,
                    &mut children,
                )?;
                used_atoms.insert(key.clone());
                dep_keys.push(key);
                specs.push(AtomSpec::Attr { var, attribute });
            }
            let expr = fill_expression(env, st, rng, goal, &bound, &specs, &mut children, &mut dep_keys)?;
            Conclusion::Attr {
                var: VarId(0),
                attribute: attribute.clone(),
                expr,
            }
        }
        Key::Rel(relation, subject, object) => {
            bound.push((VarId(0), subject.clone()));
            bound.push((VarId(1), object.clone()));
            if m == 1 {
                let (atom, key) =
                    pick_rel_atom(env, st, rng, &bound, goal, &used_atoms, &mut children)?;
                used_atoms.insert(key.clone());
                dep_keys.push(key);
                specs.push(AtomSpec::Rel(atom));
            } else {
                // Cover both variables, then fill up with attribute atoms.
                for i in 0..m {
                    let (var, var_entity) = if i < 2 {
                        bound[i].clone()
                    } else {
                        bound[rng.random_range(0..bound.len())].clone()
                    };
                    let (attribute, key) = pick_attr_pair(
                        env,
                        st,
                        rng,
                        &var_entity,
                        goal,
                        &used_atoms,
                        &mut children,
                    )?;
                    used_atoms.insert(key.clone());
                    dep_keys.push(key);
                    specs.push(AtomSpec::Attr { var, attribute });
                }
            }
            Conclusion::Rel {
                relation: relation.clone(),
                subject: VarId(0),
                object: VarId(1),
            }
        }
    };

    if st.budget > 0 && st.pending == 0 && children.is_empty() {
        // Every dependency was satisfied by reuse, and no other goal is
        // waiting: the remaining budget could never be spent.
        return Err(BuildFail::Retry);
    }

    for key in children {
        build_goal(env, st, rng, key)?;
    }

    // Children settled their values; instantiate the condition with them.
    let mut condition = Vec::with_capacity(specs.len());
    for spec in &specs {
        match spec {
            AtomSpec::Attr { var, attribute } => {
                let entity = entity_of(&bound, *var);
                let value = st
                    .world
                    .derived()
                    .attr(entity, attribute)
                    .ok_or(BuildFail::Retry)?;
                condition.push(Atom::Attr {
                    var: *var,
                    attribute: attribute.clone(),
                    value,
                });
            }
            AtomSpec::Rel(atom) => condition.push(atom.clone()),
        }
    }

    let rule = Rule {
        id: st.rules.len(),
        condition,
        conclusion,
    };
    debug_assert!(crate::model::rule_well_formed(&rule));

    let mut probe = st.world.clone();
    if probe.add_rule(&rule).is_err() {
        return Err(BuildFail::Retry);
    }
    let conclusion_fact = match goal {
        Key::Attr(entity, attribute) => {
            let value = probe
                .derived()
                .attr(entity, attribute)
                .ok_or(BuildFail::Retry)?;
            Fact::attribute(entity.clone(), attribute.clone(), value)
        }
        Key::Rel(relation, subject, object) => {
            if !probe.derived().has_relation(relation, subject, object) {
                return Err(BuildFail::Retry);
            }
            Fact::relation(relation.clone(), subject.clone(), object.clone())
        }
    };
    st.world = probe;

    let operand_values = match &rule.conclusion {
        Conclusion::Attr { expr, .. } => expr
            .operands()
            .iter()
            .map(|(var, attribute)| {
                st.world
                    .derived()
                    .attr(entity_of(&bound, *var), attribute)
                    .expect("operand child completed")
            })
            .collect(),
        Conclusion::Rel { .. } => Vec::new(),
    };

    st.rules.push(rule);
    let mut deps = Vec::new();
    for key in &dep_keys {
        let dep = *st.completed.get(key).expect("dependency goal completed");
        if !deps.contains(&dep) {
            deps.push(dep);
        }
    }
    st.nodes.push(RuleNode {
        rule_index: st.rules.len() - 1,
        deps,
        conclusion: conclusion_fact,
        operand_values,
    });
    complete(st, goal.clone(), DepRef::Int(st.nodes.len() - 1));
    Ok(())
}

fn entity_of<'a>(bound: &'a [(VarId, Token)], var: VarId) -> &'a Token {
    &bound
        .iter()
        .find(|(v, _)| *v == var)
        .expect("variable bound")
        .1
}

fn pick_other_entity<R: Rng>(
    env: &Env<'_>,
    rng: &mut R,
    avoid: &[&Token],
) -> Result<Token, BuildFail> {
    let entities = &env.elements.entities;
    for _ in 0..16 {
        let candidate = &entities[rng.random_range(0..entities.len())];
        if !avoid.iter().any(|a| *a == candidate) {
            return Ok(candidate.clone());
        }
    }
    Err(BuildFail::Retry)
}

/// Draws the conclusion expression for an attribute rule. Operand slots
/// prefer an attribute pair already in the condition (cheap: no new
/// dependency); otherwise they claim a pair like a condition atom would,
/// possibly queueing a new child goal.
#[allow(clippy::too_many_arguments)]
fn fill_expression<R: Rng>(
    env: &Env<'_>,
    st: &mut BuildState,
    rng: &mut R,
    goal: &Key,
    bound: &[(VarId, Token)],
    specs: &[AtomSpec],
    children: &mut Vec<Key>,
    dep_keys: &mut Vec<Key>,
) -> Result<Expression, BuildFail> {
    let shape = sample_shape(env.config, rng);
    let atom_pairs: Vec<(VarId, Token)> = specs
        .iter()
        .filter_map(|s| match s {
            AtomSpec::Attr { var, attribute } => Some((*var, attribute.clone())),
            AtomSpec::Rel(_) => None,
        })
        .collect();

    let mut operand = |st: &mut BuildState,
                       rng: &mut R|
     -> Result<(VarId, Token), BuildFail> {
        if !atom_pairs.is_empty() && rng.random_bool(0.5) {
            let (var, attribute) = atom_pairs[rng.random_range(0..atom_pairs.len())].clone();
            let entity = entity_of(bound, var).clone();
            dep_keys.push(Key::Attr(entity, attribute.clone()));
            return Ok((var, attribute));
        }
        let (var, entity) = bound[rng.random_range(0..bound.len())].clone();
        let (attribute, key) =
            pick_attr_pair(env, st, rng, &entity, goal, &BTreeSet::new(), children)?;
        dep_keys.push(key);
        Ok((var, attribute))
    };

    let leaf = |shape: ChildShape,
                    st: &mut BuildState,
                    rng: &mut R,
                    operand: &mut dyn FnMut(&mut BuildState, &mut R) -> Result<(VarId, Token), BuildFail>|
     -> Result<Expression, BuildFail> {
        Ok(match shape {
            ChildShape::Constant => Expression::Constant {
                c: sample_value(env.config.operand_range, rng),
            },
            ChildShape::Retrieval => {
                let (var, attribute) = operand(st, rng)?;
                Expression::Retrieval { var, attribute }
            }
            ChildShape::Calculation => {
                let k = sample_value(env.config.operand_range, rng);
                let b = sample_value(env.config.operand_range, rng);
                let (var, attribute) = operand(st, rng)?;
                Expression::Calculation {
                    k,
                    var,
                    attribute,
                    b,
                }
            }
        })
    };

    match shape {
        ExprShape::Constant => leaf(ChildShape::Constant, st, rng, &mut operand),
        ExprShape::Retrieval => leaf(ChildShape::Retrieval, st, rng, &mut operand),
        ExprShape::Calculation => leaf(ChildShape::Calculation, st, rng, &mut operand),
        ExprShape::Aggregation(op, l, r) => {
            let left = leaf(l, st, rng, &mut operand)?;
            let right = leaf(r, st, rng, &mut operand)?;
            Ok(Expression::Aggregation {
                op,
                left: alloc::boxed::Box::new(left),
                right: alloc::boxed::Box::new(right),
            })
        }
    }
}
