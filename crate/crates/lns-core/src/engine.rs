//! Forward-chaining inference over ground facts.
//!
//! A [`FactSet`] indexes attribute facts by `(entity, attribute)` and keeps
//! relation facts as a set of triples; attribute uniqueness is enforced by
//! construction, so an inconsistent fact set cannot exist as a value.
//!
//! [`closure`] saturates a fact set under a rule list. Evaluation is
//! semi-naive: after the first round a rule is only re-matched against
//! bindings that touch at least one newly derived fact. Bindings whose
//! condition atoms hold but whose conclusion expression needs an attribute
//! that is not known yet are parked and retried in later rounds, since the
//! missing operand may arrive through another rule. Deriving a fact that is
//! already present with the same value is a no-op; deriving a different
//! value for an existing `(entity, attribute)` pair is a [`Conflict`].
//!
//! Rule order never affects the closure's outcome. Each round applies every
//! rule against the previous round's state before anything is committed, and
//! when a round produces conflicting values the reported pair is the
//! lexicographically smallest conflicting `(entity, attribute)` — a quantity
//! that is itself order-free.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::model::{
    eval_expression, substitute_conclusion, Atom, Binding, Conclusion, Fact, ModelError, Rule,
    Token, Value,
};

/// Two derivations (or a derivation and a given fact) assign different
/// values to one attribute of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub entity: Token,
    pub attribute: Token,
    pub existing: Value,
    pub derived: Value,
}

impl core::fmt::Display for Conflict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "conflicting values for {}.{}: {} vs {}",
            self.entity.as_str(),
            self.attribute.as_str(),
            self.existing,
            self.derived
        )
    }
}

/// Why saturation stopped without a fixpoint.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClosureError {
    #[error("{0}")]
    Conflict(Conflict),
    /// A conclusion expression left the machine-integer range. Synthesis
    /// treats this like a conflict and discards the candidate that caused
    /// it; it is never allowed to survive into an emitted task.
    #[error("arithmetic overflow while deriving a fact")]
    Overflow,
}

/// Ground facts with attribute uniqueness enforced at insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactSet {
    attrs: BTreeMap<(Token, Token), Value>,
    rels: BTreeSet<(Token, Token, Token)>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from facts, rejecting internal contradictions.
    pub fn from_facts<'a, I: IntoIterator<Item = &'a Fact>>(facts: I) -> Result<Self, Conflict> {
        let mut set = Self::new();
        for fact in facts {
            set.insert(fact)?;
        }
        Ok(set)
    }

    /// Adds one fact. Returns `Ok(true)` if the set changed, `Ok(false)` if
    /// the fact was already present, and a [`Conflict`] if it contradicts an
    /// existing attribute value.
    pub fn insert(&mut self, fact: &Fact) -> Result<bool, Conflict> {
        match fact {
            Fact::Attribute {
                entity,
                attribute,
                value,
            } => match self.attrs.get(&(entity.clone(), attribute.clone())) {
                Some(existing) if existing == value => Ok(false),
                Some(existing) => Err(Conflict {
                    entity: entity.clone(),
                    attribute: attribute.clone(),
                    existing: *existing,
                    derived: *value,
                }),
                None => {
                    self.attrs
                        .insert((entity.clone(), attribute.clone()), *value);
                    Ok(true)
                }
            },
            Fact::Relation {
                relation,
                subject,
                object,
            } => Ok(self
                .rels
                .insert((relation.clone(), subject.clone(), object.clone()))),
        }
    }

    pub fn attr(&self, entity: &Token, attribute: &Token) -> Option<Value> {
        self.attrs.get(&(entity.clone(), attribute.clone())).copied()
    }

    pub fn has_relation(&self, relation: &Token, subject: &Token, object: &Token) -> bool {
        self.rels
            .contains(&(relation.clone(), subject.clone(), object.clone()))
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        match fact {
            Fact::Attribute {
                entity,
                attribute,
                value,
            } => self.attr(entity, attribute) == Some(*value),
            Fact::Relation {
                relation,
                subject,
                object,
            } => self.has_relation(relation, subject, object),
        }
    }

    pub fn len(&self) -> usize {
        self.attrs.len() + self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty() && self.rels.is_empty()
    }

    /// Facts in a stable order: attribute facts sorted by (entity,
    /// attribute), then relation facts sorted by triple.
    pub fn iter(&self) -> impl Iterator<Item = Fact> + '_ {
        let attrs = self.attrs.iter().map(|((e, a), v)| Fact::Attribute {
            entity: e.clone(),
            attribute: a.clone(),
            value: *v,
        });
        let rels = self.rels.iter().map(|(r, s, o)| Fact::Relation {
            relation: r.clone(),
            subject: s.clone(),
            object: o.clone(),
        });
        attrs.chain(rels)
    }

    /// Every entity mentioned by any fact.
    pub fn entities(&self) -> BTreeSet<Token> {
        let mut out = BTreeSet::new();
        for (e, _) in self.attrs.keys() {
            out.insert(e.clone());
        }
        for (_, s, o) in &self.rels {
            out.insert(s.clone());
            out.insert(o.clone());
        }
        out
    }

    /// Every attribute name mentioned by any attribute fact.
    pub fn attributes(&self) -> BTreeSet<Token> {
        self.attrs.keys().map(|(_, a)| a.clone()).collect()
    }

    fn entities_with(&self, attribute: &Token, value: Value) -> Vec<Token> {
        self.attrs
            .iter()
            .filter(|((_, a), v)| a == attribute && **v == value)
            .map(|((e, _), _)| e.clone())
            .collect()
    }

    fn relation_pairs(&self, relation: &Token) -> Vec<(Token, Token)> {
        self.rels
            .iter()
            .filter(|(r, _, _)| r == relation)
            .map(|(_, s, o)| (s.clone(), o.clone()))
            .collect()
    }
}

/// All bindings under which every condition atom of `rule` holds in
/// `known`. Duplicate-free, ordered lexicographically by the bound entities
/// in variable order. The conclusion plays no part here; a returned binding
/// may still lack the attributes its conclusion expression reads.
pub fn match_rule(rule: &Rule, known: &FactSet) -> Vec<Binding> {
    let mut found: BTreeSet<Binding> = BTreeSet::new();
    search(&rule.condition, 0, &mut Binding::new(), known, &mut found);
    found.into_iter().collect()
}

fn search(
    atoms: &[Atom],
    index: usize,
    binding: &mut Binding,
    known: &FactSet,
    found: &mut BTreeSet<Binding>,
) {
    let Some(atom) = atoms.get(index) else {
        found.insert(binding.clone());
        return;
    };
    match atom {
        Atom::Attr {
            var,
            attribute,
            value,
        } => {
            if let Some(entity) = binding.get(*var).cloned() {
                if known.attr(&entity, attribute) == Some(*value) {
                    search(atoms, index + 1, binding, known, found);
                }
            } else {
                for entity in known.entities_with(attribute, *value) {
                    binding.insert(*var, entity);
                    search(atoms, index + 1, binding, known, found);
                    binding.remove(*var);
                }
            }
        }
        Atom::Rel {
            relation,
            subject,
            object,
        } => {
            for (s, o) in known.relation_pairs(relation) {
                let mut inserted = Vec::new();
                let mut ok = true;
                for (var, entity) in [(*subject, s), (*object, o)] {
                    match binding.get(var).cloned() {
                        Some(bound) if bound == entity => {}
                        Some(_) => {
                            ok = false;
                            break;
                        }
                        None => {
                            binding.insert(var, entity);
                            inserted.push(var);
                        }
                    }
                }
                if ok {
                    search(atoms, index + 1, binding, known, found);
                }
                for var in inserted {
                    binding.remove(var);
                }
            }
        }
    }
}

/// Instantiates the conclusion of `rule` under one binding produced by
/// [`match_rule`] on the same fact set. Attribute conclusions evaluate their
/// expression against `known` first, so this can fail with
/// `MissingAttribute` (an operand is not known yet) or `Overflow`.
pub fn apply_rule(rule: &Rule, binding: &Binding, known: &FactSet) -> Result<Fact, ModelError> {
    match &rule.conclusion {
        Conclusion::Attr { expr, .. } => {
            let value =
                eval_expression(expr, binding, &|entity, attr| known.attr(entity, attr))?;
            substitute_conclusion(&rule.conclusion, binding, value)
        }
        // Relation conclusions carry no value; the argument is ignored.
        Conclusion::Rel { .. } => substitute_conclusion(&rule.conclusion, binding, 0),
    }
}

/// A fact set saturated under a rule list, supporting incremental growth.
///
/// Synthesis probes many candidate facts and rules against a world, so the
/// expensive path — "would adding this candidate still be consistent?" — is
/// a delta round over the candidate rather than a fixpoint from scratch.
/// Cloning the state and extending the clone gives rollback for free.
#[derive(Debug, Clone)]
pub struct WorldState {
    /// Facts given directly.
    base: FactSet,
    /// Base facts plus everything derivable.
    derived: FactSet,
    rules: Vec<Rule>,
    /// Matched bindings whose conclusion expression could not be evaluated
    /// yet; retried whenever new facts arrive. Keyed by rule position.
    pending: BTreeSet<(usize, Binding)>,
}

impl WorldState {
    /// Saturates `facts` under `rules`.
    pub fn new(facts: &FactSet, rules: &[Rule]) -> Result<Self, ClosureError> {
        let mut state = WorldState {
            base: facts.clone(),
            derived: facts.clone(),
            rules: rules.to_vec(),
            pending: BTreeSet::new(),
        };
        // Round one considers every binding of every rule; subsequent
        // rounds are driven by the per-round delta inside `saturate`.
        let mut seed = Vec::new();
        for (i, rule) in state.rules.iter().enumerate() {
            for binding in match_rule(rule, &state.derived) {
                seed.push((i, binding));
            }
        }
        state.saturate(seed)?;
        Ok(state)
    }

    pub fn facts(&self) -> &FactSet {
        &self.base
    }

    pub fn derived(&self) -> &FactSet {
        &self.derived
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Adds a given fact and restores saturation. On error the state is
    /// inconsistent; callers roll back by keeping a pre-call clone.
    pub fn add_fact(&mut self, fact: &Fact) -> Result<(), ClosureError> {
        self.base.insert(fact).map_err(ClosureError::Conflict)?;
        if self.derived.insert(fact).map_err(ClosureError::Conflict)? {
            let delta = [fact.clone()];
            let seed = self.bindings_touching(&delta);
            self.saturate(seed)?;
        }
        Ok(())
    }

    /// Adds a rule and restores saturation. Same rollback contract as
    /// [`WorldState::add_fact`].
    pub fn add_rule(&mut self, rule: &Rule) -> Result<(), ClosureError> {
        self.rules.push(rule.clone());
        let index = self.rules.len() - 1;
        let seed: Vec<(usize, Binding)> = match_rule(rule, &self.derived)
            .into_iter()
            .map(|b| (index, b))
            .collect();
        self.saturate(seed)
    }

    /// True if adding `candidate` would keep the world consistent. The
    /// state is unchanged either way.
    pub fn check_fact(&self, candidate: &Fact) -> bool {
        let mut probe = self.clone();
        probe.add_fact(candidate).is_ok()
    }

    /// True if adding `candidate` would keep the world consistent.
    pub fn check_rule(&self, candidate: &Rule) -> bool {
        let mut probe = self.clone();
        probe.add_rule(candidate).is_ok()
    }

    /// Bindings of any rule that involve at least one fact in `delta`,
    /// plus all parked bindings (their missing operands may be in `delta`).
    fn bindings_touching(&mut self, delta: &[Fact]) -> Vec<(usize, Binding)> {
        let mut seed: Vec<(usize, Binding)> = self.pending.iter().cloned().collect();
        self.pending.clear();
        for (i, rule) in self.rules.iter().enumerate() {
            if delta.iter().any(|f| rule_touches(rule, f)) {
                for binding in match_rule(rule, &self.derived) {
                    if binding_uses(rule, &binding, delta) {
                        seed.push((i, binding));
                    }
                }
            }
        }
        seed
    }

    /// Runs rounds until no new facts appear. `seed` is the first round's
    /// worklist; later rounds re-match rules against their delta and
    /// retry parked bindings.
    fn saturate(&mut self, seed: Vec<(usize, Binding)>) -> Result<(), ClosureError> {
        // Safety valve mirroring the size argument for termination: at most
        // |E||A| attribute facts and |R||E|^2 relation facts can ever be
        // derived, and every round that is not the last adds at least one.
        // Rule conclusions can mention attribute names absent from the
        // current facts, so pad |A| by the rule count.
        let entities = self.derived.entities().len().max(1);
        let attributes = self.derived.attributes().len() + self.rules.len() + 1;
        let max_rounds = entities * attributes + self.rules.len() * entities * entities + 2;

        let mut worklist = seed;
        for _ in 0..max_rounds {
            if worklist.is_empty() && self.pending.is_empty() {
                return Ok(());
            }
            worklist.extend(self.pending.iter().cloned());
            self.pending.clear();
            worklist.sort();
            worklist.dedup();

            // Evaluate the whole round against the pre-round state, then
            // commit. This is what makes the outcome independent of rule
            // order: every binding sees the same snapshot.
            let mut round: Vec<Fact> = Vec::new();
            for (i, binding) in worklist.drain(..) {
                match apply_rule(&self.rules[i], &binding, &self.derived) {
                    Ok(fact) => {
                        if !self.derived.contains(&fact) {
                            round.push(fact);
                        }
                    }
                    Err(ModelError::MissingAttribute { .. }) => {
                        self.pending.insert((i, binding));
                    }
                    Err(ModelError::Overflow) => return Err(ClosureError::Overflow),
                    // match_rule bound every condition variable, and
                    // well-formed rules read no others.
                    Err(ModelError::UnboundVariable(_)) => unreachable!(
                        "conclusion variable not bound by condition match"
                    ),
                }
            }
            if let Some(conflict) = round_conflict(&self.derived, &round) {
                return Err(ClosureError::Conflict(conflict));
            }

            let mut delta: Vec<Fact> = Vec::new();
            for fact in round {
                if self
                    .derived
                    .insert(&fact)
                    .expect("conflicts were screened above")
                {
                    delta.push(fact);
                }
            }
            if delta.is_empty() {
                worklist = self.pending.iter().cloned().collect();
                self.pending.clear();
                if worklist.is_empty() {
                    return Ok(());
                }
                // Parked bindings saw this exact state already; without new
                // facts they cannot make progress.
                for (i, binding) in worklist.drain(..) {
                    self.pending.insert((i, binding));
                }
                return Ok(());
            }
            worklist = self.bindings_touching(&delta);
        }
        // The round bound is also the fact-count bound, so falling out of
        // the loop means a round stopped adding facts and we are done.
        Ok(())
    }
}

/// Smallest conflicting `(entity, attribute)` pair between the committed
/// state and one round's derivations (or within the round itself), if any.
fn round_conflict(state: &FactSet, round: &[Fact]) -> Option<Conflict> {
    let mut seen: BTreeMap<(Token, Token), Value> = BTreeMap::new();
    let mut worst: Option<Conflict> = None;
    let mut note = |entity: &Token, attribute: &Token, existing: Value, derived: Value| {
        let candidate = Conflict {
            entity: entity.clone(),
            attribute: attribute.clone(),
            existing,
            derived,
        };
        let replace = match &worst {
            Some(w) => (&candidate.entity, &candidate.attribute) < (&w.entity, &w.attribute),
            None => true,
        };
        if replace {
            worst = Some(candidate);
        }
    };
    for fact in round {
        let Fact::Attribute {
            entity,
            attribute,
            value,
        } = fact
        else {
            continue;
        };
        if let Some(existing) = state.attr(entity, attribute) {
            if existing != *value {
                note(entity, attribute, existing, *value);
                continue;
            }
        }
        let key = (entity.clone(), attribute.clone());
        match seen.get(&key) {
            Some(existing) if existing != value => note(entity, attribute, *existing, *value),
            Some(_) => {}
            None => {
                seen.insert(key, *value);
            }
        }
    }
    worst
}

/// Could `fact` participate in a match of any condition atom of `rule`?
/// A coarse filter: false positives cost a re-match, false negatives would
/// break incrementality, so this errs toward true.
fn rule_touches(rule: &Rule, fact: &Fact) -> bool {
    rule.condition.iter().any(|atom| match (atom, fact) {
        (
            Atom::Attr {
                attribute, value, ..
            },
            Fact::Attribute {
                attribute: fa,
                value: fv,
                ..
            },
        ) => attribute == fa && value == fv,
        (Atom::Rel { relation, .. }, Fact::Relation { relation: fr, .. }) => relation == fr,
        _ => false,
    })
}

/// Does `binding` actually ground some condition atom of `rule` to a fact
/// in `delta`? Restricting round seeds this way is what makes evaluation
/// semi-naive rather than naive.
fn binding_uses(rule: &Rule, binding: &Binding, delta: &[Fact]) -> bool {
    rule.condition.iter().any(|atom| {
        let grounded = crate::model::substitute_atom(atom, binding);
        match grounded {
            Ok(fact) => delta.iter().any(|f| *f == fact),
            Err(_) => false,
        }
    })
}

/// Saturates `facts` under `rules` from scratch. Equivalent to
/// [`WorldState::new`] followed by [`WorldState::derived`].
pub fn closure(facts: &FactSet, rules: &[Rule]) -> Result<FactSet, ClosureError> {
    WorldState::new(facts, rules).map(|s| s.derived.clone())
}

/// Candidate item for a consistency probe.
pub enum Candidate<'a> {
    Fact(&'a Fact),
    Rule(&'a Rule),
}

/// True when `facts ∪ {candidate}` still saturates without conflict under
/// `rules` (plus the candidate itself, if it is a rule).
pub fn check_consistency(candidate: Candidate<'_>, facts: &FactSet, rules: &[Rule]) -> bool {
    let Ok(state) = WorldState::new(facts, rules) else {
        return false;
    };
    match candidate {
        Candidate::Fact(f) => state.check_fact(f),
        Candidate::Rule(r) => state.check_rule(r),
    }
}
