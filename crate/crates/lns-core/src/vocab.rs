//! Word pools and per-sample world element sampling.
//!
//! A pool is a list of unique tokens (names, attribute words, relation
//! verbs). Each sample draws its own small world from the pools: a set of
//! entities, a set of attributes, and a set of relations, plus the query
//! pair. Attribute and relation draws are lemma-disjoint — no two selected
//! words may inflect to the same stem — so a rendered task never contains
//! two near-synonymous labels the scorer would conflate.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::lemma::{lemma_variants, normalize_token};
use crate::model::{Query, Token};
use crate::synth::SynthesisConfig;

/// Source word lists, deduplicated case-insensitively. Attribute and
/// relation words are stored lowercased; entity names keep their casing.
#[derive(Clone, Debug)]
pub struct VocabPools {
    pub entities: Vec<Token>,
    pub attributes: Vec<Token>,
    pub relations: Vec<Token>,
}

/// One sample's world: the only names that may appear in its facts, rules,
/// and query.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WorldElements {
    pub entities: Vec<Token>,
    pub attributes: Vec<Token>,
    pub relations: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("{pool} pool is empty")]
    EmptyPool { pool: &'static str },
    #[error("{pool} pool cannot supply {requested} distinct items (has {available})")]
    PoolTooSmall {
        pool: &'static str,
        requested: usize,
        available: usize,
    },
}

/// Parses one pool body: one token per line, blank lines and `#` comments
/// skipped, duplicates (case-insensitive) dropped keeping first occurrence.
fn parse_pool(text: &str, fold_case: bool) -> Vec<Token> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for line in text.lines() {
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        let norm = normalize_token(word);
        if seen.insert(norm.clone()) {
            out.push(Token::new(if fold_case { norm } else { String::from(word) }));
        }
    }
    out
}

impl VocabPools {
    /// Builds pools from in-memory text bodies (the file-reading wrapper
    /// lives with the rest of the IO code).
    pub fn from_text(
        entities: &str,
        attributes: &str,
        relations: &str,
    ) -> Result<Self, VocabError> {
        let pools = VocabPools {
            entities: parse_pool(entities, false),
            attributes: parse_pool(attributes, true),
            relations: parse_pool(relations, true),
        };
        for (name, pool) in [
            ("entity", &pools.entities),
            ("attribute", &pools.attributes),
            ("relation", &pools.relations),
        ] {
            if pool.is_empty() {
                return Err(VocabError::EmptyPool { pool: name });
            }
        }
        Ok(pools)
    }
}

/// Draws `count` distinct items via a partial Fisher–Yates walk. With
/// `lemma_disjoint`, candidates sharing a stem with an earlier pick are
/// skipped; the walk continues deeper into the pool to compensate.
fn sample_distinct<R: Rng>(
    pool: &[Token],
    count: usize,
    lemma_disjoint: bool,
    pool_name: &'static str,
    rng: &mut R,
) -> Result<Vec<Token>, VocabError> {
    if pool.len() < count {
        return Err(VocabError::PoolTooSmall {
            pool: pool_name,
            requested: count,
            available: pool.len(),
        });
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut taken: Vec<Token> = Vec::with_capacity(count);
    let mut used_stems: BTreeSet<String> = BTreeSet::new();
    let mut i = 0;
    while taken.len() < count && i < order.len() {
        let j = rng.random_range(i..order.len());
        order.swap(i, j);
        let candidate = &pool[order[i]];
        i += 1;
        if lemma_disjoint {
            let variants = lemma_variants(candidate.as_str());
            if variants.iter().any(|v| used_stems.contains(v)) {
                continue;
            }
            used_stems.extend(variants);
        }
        taken.push(candidate.clone());
    }
    if taken.len() < count {
        return Err(VocabError::PoolTooSmall {
            pool: pool_name,
            requested: count,
            available: taken.len(),
        });
    }
    Ok(taken)
}

/// Draws one sample's world elements at the sizes the configuration asks
/// for. A function of `(pools, config, rng state)` only.
pub fn sample_world_elements<R: Rng>(
    pools: &VocabPools,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<WorldElements, VocabError> {
    Ok(WorldElements {
        entities: sample_distinct(&pools.entities, config.n_entities, false, "entity", rng)?,
        attributes: sample_distinct(
            &pools.attributes,
            config.n_attributes,
            true,
            "attribute",
            rng,
        )?,
        relations: sample_distinct(&pools.relations, config.n_relations, true, "relation", rng)?,
    })
}

/// Picks the query pair: one entity, then one attribute, uniformly.
pub fn sample_query<R: Rng>(elements: &WorldElements, rng: &mut R) -> Query {
    let entity = elements.entities[rng.random_range(0..elements.entities.len())].clone();
    let attribute = elements.attributes[rng.random_range(0..elements.attributes.len())].clone();
    Query { entity, attribute }
}
