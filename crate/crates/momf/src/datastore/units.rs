//! Unit registry: SI prefixes over a handful of base units, the °C/K affine
//! pair, dimensionless markers and user extensions from a text file.
//!
//! Every unit maps to its dimension's base by `base = factor·x + offset`.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("cannot convert {from:?} ({from_dim}) to {to:?} ({to_dim})")]
    IncompatibleDimension { from: String, from_dim: String, to: String, to_dim: String },
    #[error("unit file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitDef {
    pub dimension: String,
    pub factor: f64,
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct UnitRegistry {
    units: BTreeMap<String, UnitDef>,
}

const PREFIXES: [(&str, f64); 21] = [
    ("Y", 1e24),
    ("Z", 1e21),
    ("E", 1e18),
    ("P", 1e15),
    ("T", 1e12),
    ("G", 1e9),
    ("M", 1e6),
    ("k", 1e3),
    ("h", 1e2),
    ("da", 1e1),
    ("d", 1e-1),
    ("c", 1e-2),
    ("m", 1e-3),
    ("µ", 1e-6),
    ("u", 1e-6),
    ("n", 1e-9),
    ("p", 1e-12),
    ("f", 1e-15),
    ("a", 1e-18),
    ("z", 1e-21),
    ("y", 1e-24),
];

const BASES: [(&str, &str); 15] = [
    ("g", "mass"),
    ("m", "length"),
    ("s", "time"),
    ("K", "temperature"),
    ("A", "current"),
    ("mol", "amount"),
    ("V", "voltage"),
    ("Pa", "pressure"),
    ("J", "energy"),
    ("N", "force"),
    ("W", "power"),
    ("Hz", "frequency"),
    ("C", "charge"),
    ("Ω", "resistance"),
    ("ohm", "resistance"),
];

impl Default for UnitRegistry {
    fn default() -> Self {
        let mut units = BTreeMap::new();
        let mut put = |symbol: String, dimension: &str, factor: f64, offset: f64| {
            units.entry(symbol).or_insert(UnitDef { dimension: dimension.to_string(), factor, offset });
        };
        for (base, dim) in BASES {
            put(base.to_string(), dim, 1.0, 0.0);
        }
        for (base, dim) in BASES {
            for (p, f) in PREFIXES {
                put(format!("{p}{base}"), dim, f, 0.0);
            }
        }
        for (p, f) in PREFIXES.iter().copied().chain([("", 1.0)]) {
            put(format!("{p}eV"), "energy", f * 1.602_176_634e-19, 0.0);
        }
        put("min".into(), "time", 60.0, 0.0);
        put("h".into(), "time", 3600.0, 0.0);
        put("Å".into(), "length", 1e-10, 0.0);
        put("°C".into(), "temperature", 1.0, 273.15);
        put("degC".into(), "temperature", 1.0, 273.15);
        for s in ["1", "-", "–"] {
            put(s.into(), "dimensionless", 1.0, 0.0);
        }
        put("%".into(), "dimensionless", 0.01, 0.0);
        put("at%".into(), "atomic_fraction", 1.0, 0.0);
        put("wt%".into(), "mass_fraction", 1.0, 0.0);
        UnitRegistry { units }
    }
}

impl UnitRegistry {
    pub fn get(&self, symbol: &str) -> Result<&UnitDef, UnitError> {
        self.units.get(symbol).ok_or_else(|| UnitError::UnknownUnit(symbol.to_string()))
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.units.contains_key(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.units.keys().map(String::as_str)
    }

    pub fn convert(&self, value: f64, from: &str, to: &str) -> Result<f64, UnitError> {
        let a = self.get(from)?;
        let b = self.get(to)?;
        if a.dimension != b.dimension {
            return Err(UnitError::IncompatibleDimension {
                from: from.to_string(),
                from_dim: a.dimension.clone(),
                to: to.to_string(),
                to_dim: b.dimension.clone(),
            });
        }
        if from == to {
            return Ok(value);
        }
        if a.offset == 0.0 && b.offset == 0.0 {
            return Ok(value * (a.factor / b.factor));
        }
        Ok((a.factor * value + a.offset - b.offset) / b.factor)
    }

    /// Adds units from `symbol,definition` lines where the definition is
    /// `factor*unit`, `factor*unit+offset` (offset in `unit`), or a bare
    /// factor for a dimensionless unit. `#` starts a comment.
    pub fn extend_from_text(&mut self, text: &str) -> Result<usize, UnitError> {
        let mut added = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| UnitError::Parse { line: i + 1, message: message.to_string() };
            let (symbol, def) = line.split_once(',').ok_or_else(|| err("expected `symbol,definition`"))?;
            let (symbol, def) = (symbol.trim(), def.trim());
            if symbol.is_empty() {
                return Err(err("empty symbol"));
            }
            let (scale, rest) = match def.split_once('*') {
                Some((f, r)) => (f.trim(), r.trim()),
                None => (def, "1"),
            };
            let factor: f64 = scale.parse().map_err(|_| err("factor is not a number"))?;
            if !(factor.is_finite() && factor != 0.0) {
                return Err(err("factor must be finite and non-zero"));
            }
            let (base, offset) = match rest.find(['+', '-']).filter(|&p| p > 0) {
                Some(p) => {
                    let off: f64 = rest[p..].replace(' ', "").parse().map_err(|_| err("offset is not a number"))?;
                    (rest[..p].trim(), off)
                }
                None => (rest, 0.0),
            };
            let b = self.get(base).map_err(|_| err(&format!("unknown base unit {base:?}")))?.clone();
            self.units.insert(
                symbol.to_string(),
                UnitDef { dimension: b.dimension, factor: b.factor * factor, offset: b.factor * offset + b.offset },
            );
            added += 1;
        }
        Ok(added)
    }
}
