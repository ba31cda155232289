//! Irrelevant facts and rules, padded to the configured totals.
//!
//! Distractors are drawn like ordinary world items — random attribute or
//! relation facts, random rules over one or two placeholder variables — and
//! every candidate must keep the padded world consistent, which among other
//! things guarantees the query's answer cannot change. Nothing stops a
//! distractor rule from firing (or from being forever dormant because its
//! condition mentions values nobody has); both make fine noise.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{Atom, Conclusion, Fact, Rule, VarId};
use crate::synth::{sample_expression, Construction, SynthesisError, INNER_RETRIES};

/// Pads `construction` so its fact and rule lists hit the configured
/// totals exactly, given the synthesis configuration that produced it.
pub fn add_distractions<R: Rng>(
    construction: &mut Construction,
    config: &crate::synth::SynthesisConfig,
    rng: &mut R,
) -> Result<(), SynthesisError> {
    let want_facts = config.n_facts.resolve(construction.target_depth);
    let want_rules = config.n_rules.resolve(construction.target_depth);
    debug_assert!(construction.facts.len() <= want_facts);
    debug_assert!(construction.rules.len() <= want_rules);

    while construction.facts.len() < want_facts {
        add_one_fact(construction, config, rng)?;
    }
    while construction.rules.len() < want_rules {
        add_one_rule(construction, config, rng)?;
    }
    Ok(())
}

fn add_one_fact<R: Rng>(
    c: &mut Construction,
    config: &crate::synth::SynthesisConfig,
    rng: &mut R,
) -> Result<(), SynthesisError> {
    let els = &c.elements;
    for _ in 0..INNER_RETRIES {
        let candidate = if rng.random_bool(0.5) {
            let entity = els.entities[rng.random_range(0..els.entities.len())].clone();
            let attribute = els.attributes[rng.random_range(0..els.attributes.len())].clone();
            // An occupied slot could only repeat or contradict a value.
            if c.world.derived().attr(&entity, &attribute).is_some() {
                continue;
            }
            let value = rng.random_range(config.operand_range.0..=config.operand_range.1);
            Fact::attribute(entity, attribute, value)
        } else {
            let relation = els.relations[rng.random_range(0..els.relations.len())].clone();
            let subject = els.entities[rng.random_range(0..els.entities.len())].clone();
            let object = els.entities[rng.random_range(0..els.entities.len())].clone();
            if subject == object || c.world.derived().has_relation(&relation, &subject, &object) {
                continue;
            }
            Fact::relation(relation, subject, object)
        };
        let mut probe = c.world.clone();
        if probe.add_fact(&candidate).is_ok() {
            c.world = probe;
            c.facts.push(candidate);
            return Ok(());
        }
    }
    Err(SynthesisError::Exhausted)
}

fn add_one_rule<R: Rng>(
    c: &mut Construction,
    config: &crate::synth::SynthesisConfig,
    rng: &mut R,
) -> Result<(), SynthesisError> {
    for _ in 0..INNER_RETRIES {
        let Some(rule) = draw_rule(c, config, rng) else {
            continue;
        };
        debug_assert!(crate::model::rule_well_formed(&rule));
        let mut probe = c.world.clone();
        if probe.add_rule(&rule).is_ok() {
            c.world = probe;
            c.rules.push(rule);
            return Ok(());
        }
    }
    Err(SynthesisError::Exhausted)
}

/// One random rule skeleton. Atom values are split between values the world
/// really holds (the rule may fire) and fresh draws from the operand range
/// (the rule likely sleeps); both are wanted noise.
fn draw_rule<R: Rng>(
    c: &Construction,
    config: &crate::synth::SynthesisConfig,
    rng: &mut R,
) -> Option<Rule> {
    let els = &c.elements;
    let m = rng.random_range(config.condition_count.0..=config.condition_count.1);
    let rel_conclusion = rng.random_bool(0.5);
    let two_vars = rel_conclusion || (m >= 2 && rng.random_bool(0.5));
    let vars: &[VarId] = if two_vars {
        &[VarId(0), VarId(1)]
    } else {
        &[VarId(0)]
    };

    let mut condition: Vec<Atom> = Vec::with_capacity(m);
    let mut covered: BTreeSet<VarId> = BTreeSet::new();
    let mut seen_attr: BTreeSet<(VarId, crate::model::Token)> = BTreeSet::new();
    for i in 0..m {
        // With two variables the first atom relates them, covering both;
        // with one variable every atom is an attribute test.
        if two_vars && i == 0 {
            let relation = els.relations[rng.random_range(0..els.relations.len())].clone();
            let flip = rng.random_bool(0.5);
            let (subject, object) = if flip {
                (VarId(1), VarId(0))
            } else {
                (VarId(0), VarId(1))
            };
            condition.push(Atom::Rel {
                relation,
                subject,
                object,
            });
            covered.insert(subject);
            covered.insert(object);
            continue;
        }
        let var = vars[rng.random_range(0..vars.len())];
        let attribute = els.attributes[rng.random_range(0..els.attributes.len())].clone();
        if !seen_attr.insert((var, attribute.clone())) {
            return None;
        }
        let value = if rng.random_bool(0.5) {
            // Anchor to a real value so the atom is satisfiable.
            let entity = &els.entities[rng.random_range(0..els.entities.len())];
            match c.world.derived().attr(entity, &attribute) {
                Some(v) => v,
                None => rng.random_range(config.operand_range.0..=config.operand_range.1),
            }
        } else {
            rng.random_range(config.operand_range.0..=config.operand_range.1)
        };
        condition.push(Atom::Attr {
            var,
            attribute,
            value,
        });
        covered.insert(var);
    }
    if !vars.iter().all(|v| covered.contains(v)) {
        return None;
    }

    let conclusion = if rel_conclusion {
        let relation = els.relations[rng.random_range(0..els.relations.len())].clone();
        Conclusion::Rel {
            relation,
            subject: VarId(0),
            object: VarId(1),
        }
    } else {
        let var = vars[rng.random_range(0..vars.len())];
        let attribute = els.attributes[rng.random_range(0..els.attributes.len())].clone();
        let slots: Vec<(VarId, crate::model::Token)> = condition
            .iter()
            .filter_map(|a| match a {
                Atom::Attr { var, attribute, .. } => Some((*var, attribute.clone())),
                Atom::Rel { .. } => None,
            })
            .collect();
        let expr = sample_expression(config, &slots, rng);
        Conclusion::Attr {
            var,
            attribute,
            expr,
        }
    };
    Some(Rule {
        id: c.rules.len(),
        condition,
        conclusion,
    })
}
