//! JSON filter expressions.
//!
//! ```json
//! {"and": [{"ge": ["Cr", 0.1]}, {"not": {"eq": ["Zr", 0]}}]}
//! ```
//!
//! Comparisons are `{"op": [column, literal]}` with `op` one of `eq ne lt le
//! gt ge contains`. A comparison that touches a null cell is false, so
//! `not` over it is true.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value as Json};

use super::schema::SchemaTemplate;
use super::value::{DType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl CmpOp {
    pub const ALL: [CmpOp; 7] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Contains];

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
            CmpOp::Contains => "contains",
        }
    }

    fn parse(s: &str) -> Option<CmpOp> {
        CmpOp::ALL.into_iter().find(|op| op.as_str() == s)
    }

    /// Applies the operator to an ordering between cell and literal.
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
            CmpOp::Contains => false,
        }
    }
}

impl Serialize for CmpOp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CmpOp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CmpOp::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown operator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterExpr {
    Cmp { op: CmpOp, column: String, literal: Json },
    And(Vec<FilterExpr>),
    Or(Vec<FilterExpr>),
    Not(Box<FilterExpr>),
}

/// Where and why a filter was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterError {
    pub path: String,
    pub message: String,
    pub unknown_column: Option<String>,
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for FilterError {}

fn malformed(path: &str, message: impl Into<String>) -> FilterError {
    FilterError { path: path.to_string(), message: message.into(), unknown_column: None }
}

impl FilterExpr {
    pub fn cmp(op: CmpOp, column: &str, literal: Json) -> Self {
        FilterExpr::Cmp { op, column: column.to_string(), literal }
    }

    /// Parses the JSON form; error paths are relative to `json`.
    pub fn from_json(json: &Json) -> Result<FilterExpr, FilterError> {
        parse_at(json, "")
    }

    pub fn to_json(&self) -> Json {
        match self {
            FilterExpr::Cmp { op, column, literal } => json!({ op.as_str(): [column, literal] }),
            FilterExpr::And(xs) => json!({ "and": xs.iter().map(FilterExpr::to_json).collect::<Vec<_>>() }),
            FilterExpr::Or(xs) => json!({ "or": xs.iter().map(FilterExpr::to_json).collect::<Vec<_>>() }),
            FilterExpr::Not(x) => json!({ "not": x.to_json() }),
        }
    }

    /// Resolves columns and literals against a table schema.
    pub fn compile(&self, schema: &SchemaTemplate) -> Result<CompiledFilter, FilterError> {
        compile_at(self, schema, "")
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn parse_at(json: &Json, path: &str) -> Result<FilterExpr, FilterError> {
    let obj = json.as_object().ok_or_else(|| malformed(path, "expected an object with one operator key"))?;
    if obj.len() != 1 {
        return Err(malformed(path, format!("expected exactly one operator key, found {}", obj.len())));
    }
    let (key, arg) = obj.iter().next().expect("length checked");
    let here = join(path, key);
    match key.as_str() {
        "and" | "or" => {
            let items = arg.as_array().ok_or_else(|| malformed(&here, "expected an array of expressions"))?;
            let parsed = items
                .iter()
                .enumerate()
                .map(|(i, x)| parse_at(x, &format!("{here}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if key == "and" { FilterExpr::And(parsed) } else { FilterExpr::Or(parsed) })
        }
        "not" => Ok(FilterExpr::Not(Box::new(parse_at(arg, &here)?))),
        other => {
            let op = CmpOp::parse(other).ok_or_else(|| malformed(&here, format!("unknown operator {other:?}")))?;
            let pair = arg.as_array().filter(|a| a.len() == 2).ok_or_else(|| malformed(&here, "expected [column, literal]"))?;
            let column = pair[0].as_str().ok_or_else(|| malformed(&format!("{here}[0]"), "column must be a string"))?;
            if pair[1].is_null() || pair[1].is_array() || pair[1].is_object() {
                return Err(malformed(&format!("{here}[1]"), "literal must be a number, string or boolean"));
            }
            Ok(FilterExpr::cmp(op, column, pair[1].clone()))
        }
    }
}

impl Serialize for FilterExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FilterExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = Json::deserialize(d)?;
        FilterExpr::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// A filter bound to column positions, ready to test rows.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledFilter {
    Cmp { op: CmpOp, index: usize, literal: Value },
    And(Vec<CompiledFilter>),
    Or(Vec<CompiledFilter>),
    Not(Box<CompiledFilter>),
}

fn compile_at(expr: &FilterExpr, schema: &SchemaTemplate, path: &str) -> Result<CompiledFilter, FilterError> {
    let many = |xs: &[FilterExpr], key: &str| {
        let here = join(path, key);
        xs.iter()
            .enumerate()
            .map(|(i, x)| compile_at(x, schema, &format!("{here}[{i}]")))
            .collect::<Result<Vec<_>, _>>()
    };
    match expr {
        FilterExpr::And(xs) => Ok(CompiledFilter::And(many(xs, "and")?)),
        FilterExpr::Or(xs) => Ok(CompiledFilter::Or(many(xs, "or")?)),
        FilterExpr::Not(x) => Ok(CompiledFilter::Not(Box::new(compile_at(x, schema, &join(path, "not"))?))),
        FilterExpr::Cmp { op, column, literal } => {
            let here = join(path, op.as_str());
            let Some((index, field)) = schema.field(column) else {
                return Err(FilterError {
                    path: format!("{here}[0]"),
                    message: format!("unknown column {column:?}"),
                    unknown_column: Some(column.clone()),
                });
            };
            let lit_path = format!("{here}[1]");
            if *op == CmpOp::Contains {
                if field.dtype != DType::Text {
                    return Err(malformed(&here, format!("contains needs a text column, {column:?} is {}", field.dtype)));
                }
            } else if !field.dtype.is_ordered() && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                return Err(malformed(&here, format!("{} columns only support eq and ne", field.dtype)));
            }
            let literal = match field.dtype {
                // numeric columns compare as reals so `{"gt": ["n", 2.5]}` works on integers
                DType::Real | DType::Integer => {
                    Value::Real(literal.as_f64().ok_or_else(|| malformed(&lit_path, format!("{column:?} needs a numeric literal")))?)
                }
                dtype => Value::from_json(dtype, literal).map_err(|m| malformed(&lit_path, m))?,
            };
            Ok(CompiledFilter::Cmp { op: *op, index, literal })
        }
    }
}

impl CompiledFilter {
    pub fn matches(&self, row: &[Value]) -> bool {
        match self {
            CompiledFilter::And(xs) => xs.iter().all(|x| x.matches(row)),
            CompiledFilter::Or(xs) => xs.iter().any(|x| x.matches(row)),
            CompiledFilter::Not(x) => !x.matches(row),
            CompiledFilter::Cmp { op, index, literal } => {
                let cell = &row[*index];
                match (op, cell, literal) {
                    (_, Value::Null, _) => false,
                    (CmpOp::Contains, Value::Text(s), Value::Text(needle)) => s.contains(needle.as_str()),
                    (CmpOp::Contains, _, _) => false,
                    _ => cell.compare(literal).is_some_and(|o| op.holds(o)),
                }
            }
        }
    }
}
