//! Suffix-tolerant token matching.
//!
//! Rendered and refined text may inflect relation or attribute words
//! (`hamper` → `hampers`, `flood` → `flooded`), so the scorer compares
//! those tokens by lemma: two tokens match when they become equal after
//! each side independently strips at most one suffix from
//! `{s, es, ed, ing}`, undoing final-consonant doubling for the `ed`/`ing`
//! cases (`stopped` → `stopp` → `stop`).
//!
//! Entity names never go through this: they match exactly after case
//! folding.

use alloc::string::String;
use alloc::vec::Vec;

/// Case-folds a token. This is the normal form shared by pool loading,
/// sampling, and scoring; inflection tolerance is layered on top by
/// [`lemmas_match`].
pub fn normalize_token(word: &str) -> String {
    word.trim().to_ascii_lowercase()
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// All candidate lemmas of a token: the case-folded token itself plus each
/// single-suffix strip (with consonant-doubling undo for `ed`/`ing`).
pub fn lemma_variants(word: &str) -> Vec<String> {
    let base = normalize_token(word);
    let mut out = Vec::new();
    let push = |s: String, out: &mut Vec<String>| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    push(base.clone(), &mut out);
    for suffix in ["s", "es", "ed", "ing"] {
        if let Some(stem) = base.strip_suffix(suffix) {
            if stem.is_empty() {
                continue;
            }
            push(String::from(stem), &mut out);
            // stopped → stopp → stop; only for the verbal suffixes and only
            // when an actual consonant was doubled.
            if suffix == "ed" || suffix == "ing" {
                let bytes = stem.as_bytes();
                if bytes.len() >= 2
                    && bytes[bytes.len() - 1] == bytes[bytes.len() - 2]
                    && bytes[bytes.len() - 1].is_ascii_alphabetic()
                    && !is_vowel(bytes[bytes.len() - 1])
                {
                    push(String::from(&stem[..stem.len() - 1]), &mut out);
                }
            }
        }
    }
    out
}

/// True when two tokens share a lemma under the stripping rule above.
pub fn lemmas_match(a: &str, b: &str) -> bool {
    let va = lemma_variants(a);
    let vb = lemma_variants(b);
    va.iter().any(|x| vb.contains(x))
}
