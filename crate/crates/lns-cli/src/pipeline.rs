//! Dataset synthesis: configuration in, rendered records out.
//!
//! Every sample owns an independent random stream derived from the dataset
//! seed and its index, so results never depend on worker count or
//! scheduling. Alongside the dataset proper, a fixed number of exemplar
//! samples continue the same stream; they become few-shot material and are
//! written to a companion file.

use lns_core::distraction::add_distractions;
use lns_core::gold::{derive_gold, finalize};
use lns_core::nl::{
    fact_tokens, preserves_tokens, render_fact, render_query, render_rule, rule_tokens,
    TemplateSet,
};
use lns_core::seed::derive_seed;
use lns_core::synth::{construct_dag, SynthesisConfig, SynthesisError};
use lns_core::vocab::{sample_query, sample_world_elements, VocabError, VocabPools};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::DatasetConfig;
use crate::llm::{LlmConfig, RefineRequest};
use crate::record::{RenderedFact, RenderedQuery, RenderedRule, SampleRecord};

/// How many exemplar samples (few-shot material) accompany a dataset.
pub const EXEMPLAR_COUNT: usize = 8;
/// Fresh worlds tried per sample before synthesis is declared stuck.
const SAMPLE_ATTEMPTS: u64 = 32;

/// Why a dataset could not be synthesized.
#[derive(Debug, Error)]
pub enum SynthFailure {
    #[error("sample {id}: {source}")]
    Vocab {
        id: usize,
        #[source]
        source: VocabError,
    },
    #[error("sample {id}: no viable world after {SAMPLE_ATTEMPTS} attempts: {source}")]
    Exhausted {
        id: usize,
        #[source]
        source: SynthesisError,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

enum BuildError {
    Vocab(VocabError),
    Synth(SynthesisError),
}

/// Everything needed to synthesize one dataset.
pub struct Synthesizer<'a> {
    pub config: &'a DatasetConfig,
    pub pools: &'a VocabPools,
    pub templates: &'a TemplateSet,
}

impl Synthesizer<'_> {
    /// Pinned depth for stratified sampling: the id space splits into
    /// contiguous near-equal blocks, one per depth, shallowest first.
    /// Exemplar indices (past `size`) cycle through the depths instead.
    fn depth_for(&self, index: usize) -> Option<usize> {
        if !self.config.stratified_depth {
            return None;
        }
        let (lo, hi) = self.config.synthesis.depth_range;
        let span = hi - lo + 1;
        let size = self.config.synthesis.size;
        let slot = if index < size {
            (index * span / size.max(1)).min(span - 1)
        } else {
            (index - size) % span
        };
        Some(lo + slot)
    }

    fn build_once(
        &self,
        id: usize,
        fingerprint: &str,
        cfg: &SynthesisConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleRecord, BuildError> {
        let elements = sample_world_elements(self.pools, cfg, rng).map_err(BuildError::Vocab)?;
        let query = sample_query(&elements, rng);
        let mut construction =
            construct_dag(&elements, &query, cfg, rng).map_err(BuildError::Synth)?;
        add_distractions(&mut construction, cfg, rng).map_err(BuildError::Synth)?;
        let dag = finalize(&construction, rng);
        let (gold_steps, answer) = derive_gold(&dag);
        debug_assert_eq!(answer, construction.answer);
        let realized_depth = dag.nodes.len();

        let facts = dag
            .facts
            .iter()
            .enumerate()
            .map(|(i, fact)| RenderedFact {
                id: i + 1,
                formal: fact.formal(),
                tree: fact.clone(),
                templated: render_fact(fact, self.templates, rng),
                refined: None,
            })
            .collect();
        let rules = dag
            .rules
            .iter()
            .enumerate()
            .map(|(i, rule)| RenderedRule {
                id: i + 1,
                formal: rule.formal(),
                tree: rule.clone(),
                templated: render_rule(rule, self.templates, rng),
                refined: None,
            })
            .collect();
        let query = RenderedQuery {
            formal: dag.query.formal(),
            tree: dag.query.clone(),
            text: render_query(&dag.query, self.templates, rng),
        };
        Ok(SampleRecord {
            id,
            config: fingerprint.to_string(),
            elements,
            facts,
            rules,
            query,
            answer,
            gold_steps,
            realized_depth,
        })
    }

    /// Synthesizes the sample at `index` (0-based), deterministically.
    fn sample(&self, index: usize, fingerprint: &str) -> Result<SampleRecord, SynthFailure> {
        let id = index + 1;
        let sample_seed = derive_seed(self.config.synthesis.seed, index as u64);
        let mut cfg = self.config.synthesis.clone();
        if let Some(depth) = self.depth_for(index) {
            cfg.depth_range = (depth, depth);
        }
        let mut last = None;
        for attempt in 0..SAMPLE_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sample_seed, attempt));
            match self.build_once(id, fingerprint, &cfg, &mut rng) {
                Ok(record) => return Ok(record),
                // A pool that cannot supply the world is permanent.
                Err(BuildError::Vocab(source)) => return Err(SynthFailure::Vocab { id, source }),
                Err(BuildError::Synth(source)) => last = Some(source),
            }
        }
        Err(SynthFailure::Exhausted {
            id,
            source: last.expect("loop ran at least once"),
        })
    }

    /// Synthesizes the whole dataset plus its exemplars, using `jobs`
    /// worker threads. Identical output for any worker count.
    pub fn synthesize(
        &self,
        jobs: usize,
    ) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>), SynthFailure> {
        let size = self.config.synthesis.size;
        let total = size + EXEMPLAR_COUNT;
        let fingerprint = self.config.fingerprint_hex();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| SynthFailure::Pool(e.to_string()))?;
        let mut records = pool.install(|| {
            (0..total)
                .into_par_iter()
                .map(|i| self.sample(i, &fingerprint))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let exemplars = records
            .split_off(size)
            .into_iter()
            .enumerate()
            .map(|(i, mut record)| {
                record.id = i + 1;
                record
            })
            .collect();
        Ok((records, exemplars))
    }
}

/// Outcome counts of a refinement pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    /// Rewrites that passed token re-validation and were stored.
    pub kept: usize,
    /// Rewrites that dropped or altered a protected token; discarded.
    pub rejected: usize,
    /// Sentences whose every request attempt failed; left templated.
    pub failed: usize,
}

enum Slot {
    Fact(usize),
    Rule(usize),
}

/// Asks the model for fluent rewrites of every fact and rule sentence in
/// `records`, keeping only rewrites that still carry all protected tokens.
/// Anything else leaves the templated wording in place.
pub fn refine(records: &mut [SampleRecord], client: &LlmConfig) -> RefineStats {
    let mut requests = Vec::new();
    let mut slots = Vec::new();
    for (ri, record) in records.iter().enumerate() {
        for (fi, fact) in record.facts.iter().enumerate() {
            requests.push(RefineRequest {
                formal: fact.formal.clone(),
                templated: fact.templated.clone(),
            });
            slots.push((ri, Slot::Fact(fi)));
        }
        for (qi, rule) in record.rules.iter().enumerate() {
            requests.push(RefineRequest {
                formal: rule.formal.clone(),
                templated: rule.templated.clone(),
            });
            slots.push((ri, Slot::Rule(qi)));
        }
    }
    let responses = client.refine_batch(&requests);
    let mut stats = RefineStats::default();
    for ((ri, slot), response) in slots.into_iter().zip(responses) {
        let Some(text) = response else {
            stats.failed += 1;
            continue;
        };
        let record = &mut records[ri];
        match slot {
            Slot::Fact(fi) => {
                if preserves_tokens(&text, &fact_tokens(&record.facts[fi].tree)) {
                    record.facts[fi].refined = Some(text);
                    stats.kept += 1;
                } else {
                    stats.rejected += 1;
                }
            }
            Slot::Rule(qi) => {
                if preserves_tokens(&text, &rule_tokens(&record.rules[qi].tree)) {
                    record.rules[qi].refined = Some(text);
                    stats.kept += 1;
                } else {
                    stats.rejected += 1;
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    fn small_config(size: usize) -> DatasetConfig {
        let text = assets::builtin_config("el_en").unwrap();
        let mut cfg = DatasetConfig::parse(text).unwrap();
        cfg.synthesis.size = size;
        cfg.synthesis.seed = 11;
        cfg
    }

    #[test]
    fn synthesis_is_deterministic_and_exact() {
        let cfg = small_config(6);
        let pools = assets::bundled_pools();
        let templates = TemplateSet::builtin();
        let synth = Synthesizer {
            config: &cfg,
            pools: &pools,
            templates: &templates,
        };
        let (a, ax) = synth.synthesize(1).unwrap();
        let (b, bx) = synth.synthesize(4).unwrap();
        assert_eq!(a, b, "records must not depend on worker count");
        assert_eq!(ax, bx);
        assert_eq!(a.len(), 6);
        assert_eq!(ax.len(), EXEMPLAR_COUNT);
        for (i, record) in a.iter().enumerate() {
            assert_eq!(record.id, i + 1);
            assert_eq!(record.facts.len(), 15);
            assert_eq!(record.rules.len(), 15);
            assert!((1..=3).contains(&record.realized_depth));
            assert_eq!(record.realized_depth, record.gold_steps.len());
            assert_eq!(record.config, cfg.fingerprint_hex());
        }
    }

    #[test]
    fn stratified_depths_fill_blocks_in_order() {
        let text = assets::builtin_config("exhl_hn").unwrap();
        let mut cfg = DatasetConfig::parse(text).unwrap();
        cfg.synthesis.size = 8;
        let synth = Synthesizer {
            config: &cfg,
            pools: &assets::bundled_pools(),
            templates: &TemplateSet::builtin(),
        };
        let depths: Vec<usize> = (0..8).map(|i| synth.depth_for(i).unwrap()).collect();
        assert_eq!(depths, vec![7, 7, 8, 8, 9, 9, 10, 10]);
        let exemplar_depths: Vec<usize> =
            (8..12).map(|i| synth.depth_for(i).unwrap()).collect();
        assert_eq!(exemplar_depths, vec![7, 8, 9, 10]);
    }
}
