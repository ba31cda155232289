//! Data bundled into the binary: name pools, template banks, and the
//! stock dataset configurations.

use std::fs;
use std::path::{Path, PathBuf};

use lns_core::nl::{parse_bank, Category, TemplateError, TemplateSet};
use lns_core::vocab::VocabPools;
use thiserror::Error;

pub const ENTITY_POOL: &str = include_str!("../assets/pools/entities.txt");
pub const ATTRIBUTE_POOL: &str = include_str!("../assets/pools/attributes.txt");
pub const RELATION_POOL: &str = include_str!("../assets/pools/relations.txt");

/// The name pools shipped with the binary.
pub fn bundled_pools() -> VocabPools {
    VocabPools::from_text(ENTITY_POOL, ATTRIBUTE_POOL, RELATION_POOL)
        .expect("bundled pools are nonempty")
}

/// What can go wrong while loading a template directory.
#[derive(Debug, Error)]
pub enum TemplateLoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Loads one bank per category from `dir`, expecting `<category>.txt`
/// (e.g. `attribute-fact.txt`). Every bank must clear the template floor
/// and every template must use exactly its category's placeholders.
pub fn load_templates(dir: &Path) -> Result<TemplateSet, TemplateLoadError> {
    let mut banks: [Vec<String>; 10] = Default::default();
    for cat in Category::ALL {
        let path = dir.join(format!("{}.txt", cat.name()));
        let text = fs::read_to_string(&path)
            .map_err(|source| TemplateLoadError::Io { path, source })?;
        banks[cat.index()] = parse_bank(&text);
    }
    TemplateSet::from_banks(banks).map_err(Into::into)
}

/// The text of a stock configuration, by short name (`el_en`, `el_hn`,
/// `hl_en`, `hl_hn`, `exhl_hn`, `el_train`, `en_train`); a trailing
/// `.cfg` is tolerated.
pub fn builtin_config(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".cfg").unwrap_or(name);
    match stem {
        "el_en" => Some(include_str!("../assets/configs/el_en.cfg")),
        "el_hn" => Some(include_str!("../assets/configs/el_hn.cfg")),
        "hl_en" => Some(include_str!("../assets/configs/hl_en.cfg")),
        "hl_hn" => Some(include_str!("../assets/configs/hl_hn.cfg")),
        "exhl_hn" => Some(include_str!("../assets/configs/exhl_hn.cfg")),
        "el_train" => Some(include_str!("../assets/configs/el_train.cfg")),
        "en_train" => Some(include_str!("../assets/configs/en_train.cfg")),
        _ => None,
    }
}

/// Names of all stock configurations, for help text and tests.
pub const BUILTIN_CONFIGS: &[&str] = &[
    "el_en", "el_hn", "hl_en", "hl_hn", "exhl_hn", "el_train", "en_train",
];
