//! Mapping from language-specific POS tags onto the small class inventory
//! the extraction patterns are written in.
//!
//! Mappings are plain files, one `tag<TAB>class` entry per line; a trailing
//! `*` on the tag marks a prefix entry (`NN*` covers `NN1`, `NN2`, ...).
//! Exact entries always win over prefix entries. Defaults for the BNC
//! (English), STTS (German) and LCMC (Chinese) tagsets ship with the crate.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Coarse tag classes referenced by extraction patterns. `Other` is the
/// sink for anything a mapping does not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagClass {
    Noun,
    Verb,
    Adj,
    Adv,
    Prep,
    Part,
    Num,
    Idiom,
    Fixed,
    NamePerson,
    NamePlace,
    NameOrg,
    Other,
}

impl TagClass {
    pub const ALL: [TagClass; 13] = [
        TagClass::Noun,
        TagClass::Verb,
        TagClass::Adj,
        TagClass::Adv,
        TagClass::Prep,
        TagClass::Part,
        TagClass::Num,
        TagClass::Idiom,
        TagClass::Fixed,
        TagClass::NamePerson,
        TagClass::NamePlace,
        TagClass::NameOrg,
        TagClass::Other,
    ];

    pub fn parse(name: &str) -> Option<TagClass> {
        Some(match name {
            "NOUN" => TagClass::Noun,
            "VERB" => TagClass::Verb,
            "ADJ" => TagClass::Adj,
            "ADV" => TagClass::Adv,
            "PREP" => TagClass::Prep,
            "PART" => TagClass::Part,
            "NUM" => TagClass::Num,
            "IDIOM" => TagClass::Idiom,
            "FIXED" => TagClass::Fixed,
            "NAME_PERSON" => TagClass::NamePerson,
            "NAME_PLACE" => TagClass::NamePlace,
            "NAME_ORG" => TagClass::NameOrg,
            "OTHER" => TagClass::Other,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TagClass::Noun => "NOUN",
            TagClass::Verb => "VERB",
            TagClass::Adj => "ADJ",
            TagClass::Adv => "ADV",
            TagClass::Prep => "PREP",
            TagClass::Part => "PART",
            TagClass::Num => "NUM",
            TagClass::Idiom => "IDIOM",
            TagClass::Fixed => "FIXED",
            TagClass::NamePerson => "NAME_PERSON",
            TagClass::NamePlace => "NAME_PLACE",
            TagClass::NameOrg => "NAME_ORG",
            TagClass::Other => "OTHER",
        }
    }

    /// Classes whose single tag already denotes a multi-word (or
    /// multi-character) unit, so single-token pattern matches are allowed.
    pub fn is_mwe_unit(&self) -> bool {
        matches!(
            self,
            TagClass::Idiom
                | TagClass::Fixed
                | TagClass::NamePerson
                | TagClass::NamePlace
                | TagClass::NameOrg
        )
    }
}

impl fmt::Display for TagClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A loaded tag mapping: exact entries plus prefix entries.
#[derive(Debug, Clone)]
pub struct TagsetMapping {
    name: String,
    exact: HashMap<String, TagClass>,
    // Sorted by descending prefix length so the first hit is the longest.
    prefixes: Vec<(String, TagClass)>,
}

impl TagsetMapping {
    /// Parses a mapping file. Lines are `tag<TAB>class` (or `tag*<TAB>class`
    /// for prefix entries); `#` starts a comment. Duplicate tags and unknown
    /// class names are rejected.
    pub fn load<R: BufRead>(name: &str, reader: R) -> Result<TagsetMapping> {
        let mut exact = HashMap::new();
        let mut prefixes: Vec<(String, TagClass)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, class_name) = line.split_once('\t').ok_or_else(|| {
                Error::data(format!("{name}: line {}: expected tag<TAB>class", idx + 1))
            })?;
            let tag = tag.trim();
            let class_name = class_name.trim();
            let class = TagClass::parse(class_name).ok_or_else(|| {
                Error::data(format!("{name}: line {}: unknown class {class_name:?}", idx + 1))
            })?;
            if let Some(prefix) = tag.strip_suffix('*') {
                if prefixes.iter().any(|(p, _)| p == prefix) {
                    return Err(Error::data(format!(
                        "{name}: line {}: duplicate prefix entry {prefix:?}",
                        idx + 1
                    )));
                }
                prefixes.push((prefix.to_string(), class));
            } else if exact.insert(tag.to_string(), class).is_some() {
                return Err(Error::data(format!(
                    "{name}: line {}: duplicate exact tag {tag:?}",
                    idx + 1
                )));
            }
        }
        prefixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(TagsetMapping { name: name.to_string(), exact, prefixes })
    }

    /// Looks up the class for a tag: exact match first, then the longest
    /// matching prefix, falling back to [`TagClass::Other`].
    pub fn map_tag(&self, tag: &str) -> TagClass {
        if let Some(class) = self.exact.get(tag) {
            return *class;
        }
        for (prefix, class) in &self.prefixes {
            if tag.starts_with(prefix.as_str()) {
                return *class;
            }
        }
        TagClass::Other
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exact_entries(&self) -> impl Iterator<Item = (&str, TagClass)> {
        self.exact.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn prefix_entries(&self) -> impl Iterator<Item = (&str, TagClass)> {
        self.prefixes.iter().map(|(t, c)| (t.as_str(), *c))
    }

    /// Shipped default mapping for the BNC C5 English tagset.
    pub fn bnc() -> TagsetMapping {
        Self::load("bnc", include_str!("../data/bnc.tsv").as_bytes()).expect("bundled bnc mapping")
    }

    /// Shipped default mapping for the STTS German tagset.
    pub fn stts() -> TagsetMapping {
        Self::load("stts", include_str!("../data/stts.tsv").as_bytes()).expect("bundled stts mapping")
    }

    /// Shipped default mapping for the LCMC Chinese tagset.
    pub fn lcmc() -> TagsetMapping {
        Self::load("lcmc", include_str!("../data/lcmc.tsv").as_bytes()).expect("bundled lcmc mapping")
    }

    pub fn builtin(name: &str) -> Option<TagsetMapping> {
        match name {
            "bnc" => Some(Self::bnc()),
            "stts" => Some(Self::stts()),
            "lcmc" => Some(Self::lcmc()),
            _ => None,
        }
    }
}
