use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize, Serializer};
use uuid::Uuid;

/// Column data type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DType {
    Real,
    Integer,
    Text,
    Boolean,
    Datetime,
    Uuid,
    FileRef,
}

impl DType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DType::Real | DType::Integer)
    }

    /// Whether `lt`/`le`/`gt`/`ge` make sense for this type.
    pub fn is_ordered(self) -> bool {
        !matches!(self, DType::Boolean | DType::Uuid)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DType::Real => "real",
            DType::Integer => "integer",
            DType::Text => "text",
            DType::Boolean => "boolean",
            DType::Datetime => "datetime",
            DType::Uuid => "uuid",
            DType::FileRef => "file_ref",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One cell. `Null` is the only missing marker; NaN never reaches storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Real(f64),
    Integer(i64),
    Text(String),
    Boolean(bool),
    Datetime(DateTime<Utc>),
    Uuid(Uuid),
    FileRef(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Integer(v) => Some(*v as f64),
            _ => None,
        }
    }

    /// Reads a JSON value as `dtype`. Real columns accept integers and map
    /// the strings `"NaN"`/`"nan"` to null.
    pub fn from_json(dtype: DType, v: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        if v.is_null() {
            return Ok(Value::Null);
        }
        let mismatch = || format!("expected {dtype}, found {v}");
        match dtype {
            DType::Real => match v {
                J::Number(n) => n.as_f64().map(Value::Real).ok_or_else(mismatch),
                J::String(s) if s.eq_ignore_ascii_case("nan") => Ok(Value::Null),
                _ => Err(mismatch()),
            },
            DType::Integer => match v {
                J::Number(n) => n
                    .as_i64()
                    .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 9.007e15).map(|f| f as i64))
                    .map(Value::Integer)
                    .ok_or_else(mismatch),
                _ => Err(mismatch()),
            },
            DType::Boolean => v.as_bool().map(Value::Boolean).ok_or_else(mismatch),
            DType::Text | DType::FileRef | DType::Datetime | DType::Uuid => {
                let s = v.as_str().ok_or_else(mismatch)?;
                Value::from_text(dtype, s)
            }
        }
    }

    /// Parses a CSV cell. The empty string is null.
    pub fn from_csv(dtype: DType, s: &str) -> Result<Value, String> {
        if s.is_empty() {
            return Ok(Value::Null);
        }
        match dtype {
            DType::Real => {
                let v: f64 = s.trim().parse().map_err(|_| format!("expected real, found {s:?}"))?;
                if v.is_infinite() {
                    return Err(format!("expected a finite real, found {s:?}"));
                }
                Ok(if v.is_nan() { Value::Null } else { Value::Real(v) })
            }
            DType::Integer => s.trim().parse().map(Value::Integer).map_err(|_| format!("expected integer, found {s:?}")),
            DType::Boolean => match s.trim().to_ascii_lowercase().as_str() {
                "true" | "1" => Ok(Value::Boolean(true)),
                "false" | "0" => Ok(Value::Boolean(false)),
                _ => Err(format!("expected boolean, found {s:?}")),
            },
            _ => Value::from_text(dtype, s),
        }
    }

    fn from_text(dtype: DType, s: &str) -> Result<Value, String> {
        match dtype {
            DType::Text => Ok(Value::Text(s.to_string())),
            DType::FileRef => Ok(Value::FileRef(s.to_string())),
            DType::Datetime => DateTime::parse_from_rfc3339(s)
                .map(|d| Value::Datetime(d.with_timezone(&Utc)))
                .map_err(|_| format!("expected RFC 3339 datetime, found {s:?}")),
            DType::Uuid => Uuid::parse_str(s).map(Value::Uuid).map_err(|_| format!("expected uuid, found {s:?}")),
            _ => unreachable!("numeric and boolean types are handled by the callers"),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("cells always serialize")
    }

    /// Cell text for CSV output; `None` for null.
    pub fn to_csv(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Real(v) => Some(v.to_string()),
            Value::Integer(v) => Some(v.to_string()),
            Value::Text(s) | Value::FileRef(s) => Some(s.clone()),
            Value::Boolean(b) => Some(b.to_string()),
            Value::Datetime(d) => Some(d.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
            Value::Uuid(u) => Some(u.to_string()),
        }
    }

    /// Ordering between two non-null cells of compatible type.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Integer(a), Value::Integer(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) | (Value::FileRef(a), Value::FileRef(b)) => Some(a.cmp(b)),
            (Value::Boolean(a), Value::Boolean(b)) => Some(a.cmp(b)),
            (Value::Datetime(a), Value::Datetime(b)) => Some(a.cmp(b)),
            (Value::Uuid(a), Value::Uuid(b)) => Some(a.cmp(b)),
            (a, b) => a.as_f64()?.partial_cmp(&b.as_f64()?),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_unit(),
            Value::Real(v) => s.serialize_f64(*v),
            Value::Integer(v) => s.serialize_i64(*v),
            Value::Text(v) | Value::FileRef(v) => s.serialize_str(v),
            Value::Boolean(v) => s.serialize_bool(*v),
            Value::Datetime(d) => s.serialize_str(&d.to_rfc3339_opts(SecondsFormat::AutoSi, true)),
            Value::Uuid(u) => s.serialize_str(&u.to_string()),
        }
    }
}
