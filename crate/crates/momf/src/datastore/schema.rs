use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::units::UnitRegistry;
use super::value::DType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Research,
    IndustryQms,
    Agentic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub dtype: DType,
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default = "yes")]
    pub nullable: bool,
    #[serde(default)]
    pub ontology_tag: Option<String>,
}

fn yes() -> bool {
    true
}

impl FieldSpec {
    pub fn new(name: &str, dtype: DType) -> Self {
        FieldSpec { name: name.to_string(), dtype, unit: None, nullable: true, ontology_tag: None }
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = Some(unit.to_string());
        self
    }

    pub fn required(mut self) -> Self {
        self.nullable = false;
        self
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.ontology_tag = Some(tag.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaTemplate {
    pub name: String,
    pub archetype: Archetype,
    pub fields: Vec<FieldSpec>,
}

impl SchemaTemplate {
    pub fn new(name: &str, archetype: Archetype, fields: Vec<FieldSpec>) -> Self {
        SchemaTemplate { name: name.to_string(), archetype, fields }
    }

    pub fn field(&self, name: &str) -> Option<(usize, &FieldSpec)> {
        self.fields.iter().enumerate().find(|(_, f)| f.name == name)
    }

    /// Checks every template invariant; the message names the one that failed.
    pub fn validate(&self, units: &UnitRegistry, vocabulary: &Vocabulary) -> Result<(), String> {
        if !is_identifier(&self.name) {
            return Err(format!("table name {:?} is not an identifier", self.name));
        }
        if self.fields.is_empty() {
            return Err("a template needs at least one field".into());
        }
        let mut seen = HashSet::new();
        for f in &self.fields {
            if !is_identifier(&f.name) {
                return Err(format!("field name {:?} is not an identifier", f.name));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(format!("duplicate field name {:?}", f.name));
            }
            if let Some(u) = &f.unit {
                if !f.dtype.is_numeric() {
                    return Err(format!("field {:?}: units are only allowed on real or integer fields", f.name));
                }
                if !units.contains(u) {
                    return Err(format!("field {:?}: unknown unit {u:?}", f.name));
                }
            }
            if let Some(tag) = &f.ontology_tag {
                if !vocabulary.contains(tag) {
                    return Err(format!("field {:?}: ontology tag {tag:?} is not in the vocabulary", f.name));
                }
            }
        }
        Ok(())
    }
}

/// Letters, digits and underscores, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s.len() <= 128
}

/// Flat controlled vocabulary of ontology terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: BTreeSet<String>,
}

const DEFAULT_TERMS: &str = "\
ThermodynamicProperty
CrystalStructureProperty
MechanicalProperty
ElectronicProperty
MagneticProperty
OpticalProperty
ChemicalComposition
ProcessingParameter
SynthesisCondition
Microstructure
Identifier
";

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_text(DEFAULT_TERMS)
    }
}

impl Vocabulary {
    /// One term per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        let terms = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Vocabulary { terms }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}
