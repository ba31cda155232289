//! The full synthesis path on hand-rolled vocabulary pools, cross-checked
//! stage by stage: the constructed derivation must agree with the
//! forward-chaining engine, survive distraction padding untouched, number
//! cleanly into gold steps, and earn a perfect score from the evaluator.

use lns_core::distraction::add_distractions;
use lns_core::engine::{closure, FactSet};
use lns_core::eval::{parse_summary, score, Rational, SampleWorld, Verdict};
use lns_core::gold::{derive_gold, finalize, GoldStep};
use lns_core::model::{Fact, Value};
use lns_core::synth::{construct_dag, Construction, CountSpec, SynthesisConfig};
use lns_core::vocab::{sample_query, sample_world_elements, VocabPools};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ENTITIES: &str = "Mira\nOtto\nPetra\nQuinn\nRufus\nSalma\nTariq\nUlla\nViggo\nWanda";
const ATTRIBUTES: &str = "breadth\nclarity\ndensity\nfervor\ngloss\nheft\nincome\njitter\nkudos\nluster";
const RELATIONS: &str = "admire\nborrow\nconsult\ndefend\nescort\nfollow";

fn pools() -> VocabPools {
    VocabPools::from_text(ENTITIES, ATTRIBUTES, RELATIONS).unwrap()
}

fn config() -> SynthesisConfig {
    SynthesisConfig {
        n_entities: 5,
        n_attributes: 5,
        n_relations: 3,
        n_facts: CountSpec::Fixed(12),
        n_rules: CountSpec::Fixed(8),
        depth_range: (2, 4),
        condition_count: (1, 2),
        expr_weights: [1, 3, 3, 2],
        agg_weights: [1, 2, 1],
        operand_range: (-40, 40),
        size: 1,
        seed: 0,
    }
}

fn build(seed: u64) -> (Construction, ChaCha8Rng) {
    let pools = pools();
    let config = config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = sample_world_elements(&pools, &config, &mut rng).unwrap();
    let query = sample_query(&elements, &mut rng);
    let construction = construct_dag(&elements, &query, &config, &mut rng)
        .unwrap_or_else(|e| panic!("seed {seed}: construction failed: {e}"));
    (construction, rng)
}

fn closure_answer(facts: &[Fact], construction: &Construction) -> Value {
    let base = FactSet::from_facts(facts).expect("base facts are conflict-free");
    let derived = closure(&base, &construction.rules).expect("closure succeeds");
    derived
        .attr(&construction.query.entity, &construction.query.attribute)
        .expect("closure reaches the queried attribute")
}

#[test]
fn construction_agrees_with_the_engine() {
    let config = config();
    for seed in 0..60 {
        let (construction, _) = build(seed);
        let (lo, hi) = config.depth_range;
        assert!(
            (lo..=hi).contains(&construction.target_depth),
            "seed {seed}: depth {} outside {lo}..={hi}",
            construction.target_depth
        );
        assert_eq!(
            construction.nodes.len(),
            construction.target_depth,
            "seed {seed}: one derivation node per depth unit"
        );
        assert_eq!(construction.gold_fact_count, construction.facts.len());
        assert_eq!(construction.gold_rule_count, construction.rules.len());

        // The final node concludes the query with the recorded answer.
        let root = &construction.nodes.last().unwrap().conclusion;
        match root {
            Fact::Attribute {
                entity,
                attribute,
                value,
            } => {
                assert_eq!(entity, &construction.query.entity, "seed {seed}");
                assert_eq!(attribute, &construction.query.attribute, "seed {seed}");
                assert_eq!(*value, construction.answer, "seed {seed}");
            }
            Fact::Relation { .. } => panic!("seed {seed}: root concludes a relation"),
        }

        // Forward chaining over the support facts lands on the same answer.
        assert_eq!(
            closure_answer(&construction.facts, &construction),
            construction.answer,
            "seed {seed}: engine disagrees with the builder"
        );
    }
}

#[test]
fn distraction_pads_to_exact_counts_without_touching_the_answer() {
    let config = config();
    for seed in 0..60 {
        let (mut construction, mut rng) = build(seed);
        add_distractions(&mut construction, &config, &mut rng).unwrap();
        let depth = construction.target_depth;
        assert_eq!(construction.facts.len(), config.n_facts.resolve(depth));
        assert_eq!(construction.rules.len(), config.n_rules.resolve(depth));
        assert_eq!(
            closure_answer(&construction.facts, &construction),
            construction.answer,
            "seed {seed}: padding changed the derived answer"
        );
    }
}

fn assert_ordered(steps: &[GoldStep]) {
    for (i, step) in steps.iter().enumerate() {
        assert_eq!(step.index, i + 1, "steps are numbered in order");
        assert!(
            step.dep_int_ids.iter().all(|d| (1..step.index).contains(d)),
            "step {} depends only on earlier steps",
            step.index
        );
    }
}

#[test]
fn gold_steps_replay_and_self_score_perfectly() {
    let config = config();
    for seed in 0..60 {
        let (mut construction, mut rng) = build(seed);
        add_distractions(&mut construction, &config, &mut rng).unwrap();
        let dag = finalize(&construction, &mut rng);
        let (steps, answer) = derive_gold(&dag);
        assert_eq!(answer, construction.answer, "seed {seed}");
        assert_eq!(steps.len(), construction.target_depth, "seed {seed}");
        assert_ordered(&steps);

        // Referenced facts and rules exist under their presented ids.
        for step in &steps {
            assert!((1..=dag.rules.len()).contains(&step.rule_id));
            for id in &step.dep_fact_ids {
                assert!((1..=dag.facts.len()).contains(id), "seed {seed}");
            }
        }

        // A transcript assembled from the rendered lines earns full marks.
        let mut transcript = String::from("Reasoning:\n");
        for step in &steps {
            transcript.push_str(&step.rendered);
            transcript.push('\n');
        }
        transcript.push_str(&format!("Answer: \\boxed{{{answer}}}\n"));
        let summary = parse_summary(&transcript).unwrap();
        assert_eq!(summary.steps.len(), steps.len(), "seed {seed}");
        assert!(summary.skipped.is_empty(), "seed {seed}");

        let world = SampleWorld::new(&dag.facts, &dag.rules, &dag.query, answer, &steps);
        let eval = score(&world, &summary);
        assert_eq!(eval.process, Rational::ONE, "seed {seed}: process score");
        assert!(eval.answer_correct, "seed {seed}: answer flag");
        assert!(
            eval.outcomes
                .iter()
                .all(|o| matches!(o.verdict, Verdict::Verified(_))),
            "seed {seed}: every gold step verifies"
        );
    }
}

#[test]
fn identical_seeds_rebuild_identical_worlds() {
    for seed in [3, 17, 41] {
        let (a, _) = build(seed);
        let (b, _) = build(seed);
        assert_eq!(a.answer, b.answer);
        assert_eq!(a.target_depth, b.target_depth);
        assert_eq!(a.facts, b.facts);
        assert_eq!(a.rules, b.rules);
        assert_eq!(a.query, b.query);
    }
}
