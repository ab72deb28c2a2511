//! Traveler forms: per-table validation rules and conditional visibility.

use std::collections::{HashMap, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::filter::CmpOp;
use super::schema::SchemaTemplate;
use super::value::{DType, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub field: String,
    pub op: CmpOp,
    pub value: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule {
    Range {
        field: String,
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
    },
    Regex {
        field: String,
        pattern: String,
    },
    /// `field` must be present whenever every condition holds.
    RequiredIf {
        field: String,
        when: Vec<Condition>,
    },
    /// The listed numeric fields must add up to `total`, e.g. atomic fractions.
    SumEquals {
        fields: Vec<String>,
        total: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

fn default_tolerance() -> f64 {
    1e-9
}

/// Shows `fields` only when every condition (on earlier fields) holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub fields: Vec<String>,
    pub when: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelerForm {
    pub form_id: String,
    pub target_table: String,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub attachment_slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
    pub observed: Json,
    pub message: String,
}

impl Violation {
    fn new(field: &str, rule: &str, observed: Json, message: impl Into<String>) -> Self {
        Violation { field: field.to_string(), rule: rule.to_string(), observed, message: message.into() }
    }
}

impl TravelerForm {
    /// A rule-free form: only types and nullability are enforced.
    pub fn basic(table: &str) -> Self {
        TravelerForm {
            form_id: format!("{table}_default"),
            target_table: table.to_string(),
            rules: vec![],
            branches: vec![],
            attachment_slots: vec![],
        }
    }

    /// Checks that the form fits the schema of its target table.
    pub fn check(&self, schema: &SchemaTemplate) -> Result<(), String> {
        let position = |name: &str| -> Result<(usize, DType), String> {
            schema.field(name).map(|(i, f)| (i, f.dtype)).ok_or_else(|| format!("form references unknown field {name:?}"))
        };
        let check_condition = |c: &Condition| -> Result<usize, String> {
            let (i, dtype) = position(&c.field)?;
            if c.op == CmpOp::Contains && dtype != DType::Text {
                return Err(format!("condition on {:?}: contains needs a text field", c.field));
            }
            if c.value.is_null() || Value::from_json(dtype, &c.value).is_err() && !(dtype.is_numeric() && c.value.is_number()) {
                return Err(format!("condition on {:?}: literal does not fit {dtype}", c.field));
            }
            Ok(i)
        };
        for rule in &self.rules {
            match rule {
                Rule::Range { field, min, max } => {
                    let (_, dtype) = position(field)?;
                    if !dtype.is_numeric() {
                        return Err(format!("range rule on non-numeric field {field:?}"));
                    }
                    if let (Some(lo), Some(hi)) = (min, max) {
                        if lo > hi {
                            return Err(format!("range rule on {field:?} has min > max"));
                        }
                    }
                }
                Rule::Regex { field, pattern } => {
                    let (_, dtype) = position(field)?;
                    if !matches!(dtype, DType::Text | DType::FileRef) {
                        return Err(format!("regex rule on non-text field {field:?}"));
                    }
                    Regex::new(pattern).map_err(|e| format!("regex rule on {field:?}: {e}"))?;
                }
                Rule::RequiredIf { field, when } => {
                    position(field)?;
                    for c in when {
                        check_condition(c)?;
                    }
                }
                Rule::SumEquals { fields, tolerance, .. } => {
                    if fields.is_empty() {
                        return Err("sum_equals needs at least one field".into());
                    }
                    for f in fields {
                        if !position(f)?.1.is_numeric() {
                            return Err(format!("sum_equals over non-numeric field {f:?}"));
                        }
                    }
                    if !(*tolerance >= 0.0) {
                        return Err("sum_equals tolerance must be non-negative".into());
                    }
                }
            }
        }
        for b in &self.branches {
            let first_target = b.fields.iter().map(|f| position(f).map(|p| p.0)).collect::<Result<Vec<_>, _>>()?;
            let first_target = first_target.into_iter().min().ok_or("branch shows no fields")?;
            for c in &b.when {
                // conditions only look backwards, so visibility is acyclic
                if check_condition(c)? >= first_target {
                    return Err(format!("branch condition on {:?} must refer to a field declared earlier", c.field));
                }
            }
        }
        for slot in &self.attachment_slots {
            if position(slot)?.1 != DType::FileRef {
                return Err(format!("attachment slot {slot:?} must be a file_ref field"));
            }
        }
        Ok(())
    }

    /// Validates a JSON record; on success the values are aligned with the
    /// schema's field order.
    pub fn validate(&self, schema: &SchemaTemplate, record: &Map<String, Json>) -> Result<Vec<Value>, Vec<Violation>> {
        let mut violations = Vec::new();
        for (key, v) in record {
            if schema.field(key).is_none() {
                violations.push(Violation::new(key, "unknown_field", v.clone(), "field is not part of the table"));
            }
        }
        let mut values = Vec::with_capacity(schema.fields.len());
        let mut typed_ok = vec![true; schema.fields.len()];
        for (i, f) in schema.fields.iter().enumerate() {
            let raw = record.get(&f.name).unwrap_or(&Json::Null);
            match Value::from_json(f.dtype, raw) {
                Ok(v) => values.push(v),
                Err(m) => {
                    violations.push(Violation::new(&f.name, "type_mismatch", raw.clone(), m));
                    typed_ok[i] = false;
                    values.push(Value::Null);
                }
            }
        }
        let index: HashMap<&str, usize> = schema.fields.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
        let holds = |c: &Condition| -> bool {
            let Some(&i) = index.get(c.field.as_str()) else { return false };
            condition_holds(c, schema.fields[i].dtype, &values[i])
        };

        let mut targeted = HashSet::new();
        let mut shown = HashSet::new();
        for b in &self.branches {
            let open = b.when.iter().all(holds);
            for f in &b.fields {
                targeted.insert(f.as_str());
                if open {
                    shown.insert(f.as_str());
                }
            }
        }
        let visible = |name: &str| !targeted.contains(name) || shown.contains(name);

        for (i, f) in schema.fields.iter().enumerate() {
            if typed_ok[i] && !f.nullable && values[i].is_null() && visible(&f.name) {
                violations.push(Violation::new(&f.name, "required", Json::Null, "a value is required"));
            }
        }
        for rule in &self.rules {
            match rule {
                Rule::Range { field, min, max } => {
                    let Some(&i) = index.get(field.as_str()) else { continue };
                    if let Some(v) = values[i].as_f64() {
                        if min.is_some_and(|lo| v < lo) || max.is_some_and(|hi| v > hi) {
                            let msg = format!("{v} is outside [{}, {}]", fmt_bound(*min), fmt_bound(*max));
                            violations.push(Violation::new(field, "range", values[i].to_json(), msg));
                        }
                    }
                }
                Rule::Regex { field, pattern } => {
                    let Some(&i) = index.get(field.as_str()) else { continue };
                    if let Value::Text(s) | Value::FileRef(s) = &values[i] {
                        let re = Regex::new(pattern).map_err(|e| {
                            vec![Violation::new(field, "regex", Json::Null, format!("invalid pattern: {e}"))]
                        })?;
                        if !re.is_match(s) {
                            violations.push(Violation::new(field, "regex", values[i].to_json(), format!("does not match {pattern}")));
                        }
                    }
                }
                Rule::RequiredIf { field, when } => {
                    let Some(&i) = index.get(field.as_str()) else { continue };
                    if typed_ok[i] && values[i].is_null() && when.iter().all(holds) {
                        violations.push(Violation::new(field, "required_if", Json::Null, "required by a condition on other fields"));
                    }
                }
                Rule::SumEquals { fields, total, tolerance } => {
                    let present: Vec<f64> =
                        fields.iter().filter_map(|f| index.get(f.as_str())).filter_map(|&i| values[i].as_f64()).collect();
                    if present.is_empty() {
                        continue;
                    }
                    let sum: f64 = present.iter().sum();
                    if (sum - total).abs() > *tolerance {
                        violations.push(Violation::new(
                            &fields.join("+"),
                            "sum_equals",
                            serde_json::json!(sum),
                            format!("sum is {sum}, expected {total} ± {tolerance}"),
                        ));
                    }
                }
            }
        }
        if violations.is_empty() {
            Ok(values)
        } else {
            Err(violations)
        }
    }
}

fn fmt_bound(b: Option<f64>) -> String {
    b.map_or_else(|| "unbounded".to_string(), |v| v.to_string())
}

fn condition_holds(c: &Condition, dtype: DType, cell: &Value) -> bool {
    if cell.is_null() {
        return false;
    }
    if c.op == CmpOp::Contains {
        return matches!((cell, c.value.as_str()), (Value::Text(s), Some(n)) if s.contains(n));
    }
    let literal = if dtype.is_numeric() {
        match c.value.as_f64() {
            Some(v) => Value::Real(v),
            None => return false,
        }
    } else {
        match Value::from_json(dtype, &c.value) {
            Ok(v) => v,
            Err(_) => return false,
        }
    };
    cell.compare(&literal).is_some_and(|o| c.op.holds(o))
}
