#![allow(dead_code)]
//! Filter oracle shared by the datastore tests and the acceptance run.

use momf::datastore::{Archetype, CmpOp, DType, FieldSpec, FilterExpr, Lineage, SchemaTemplate, Store};
use proptest::prelude::*;
use serde_json::json;

pub type Cells = (Option<f64>, Option<i64>, Option<String>, Option<bool>);

// Interpretive oracle over a plain row representation, independent of the
// compiled filter path.
#[derive(Debug, Clone)]
pub struct Row {
    pub id: i64,
    pub r: Option<f64>,
    pub n: Option<i64>,
    pub s: Option<String>,
    pub b: Option<bool>,
}

pub fn oracle(e: &FilterExpr, row: &Row) -> bool {
    match e {
        FilterExpr::And(xs) => xs.iter().all(|x| oracle(x, row)),
        FilterExpr::Or(xs) => xs.iter().any(|x| oracle(x, row)),
        FilterExpr::Not(x) => !oracle(x, row),
        FilterExpr::Cmp { op, column, literal } => {
            let ord = match column.as_str() {
                "r" => row.r.and_then(|v| v.partial_cmp(&literal.as_f64().unwrap())),
                "n" => row.n.and_then(|v| (v as f64).partial_cmp(&literal.as_f64().unwrap())),
                "s" => {
                    let Some(s) = &row.s else { return false };
                    let lit = literal.as_str().unwrap();
                    if *op == CmpOp::Contains {
                        return s.contains(lit);
                    }
                    Some(s.as_str().cmp(lit))
                }
                "b" => row.b.map(|v| v.cmp(&literal.as_bool().unwrap())),
                _ => unreachable!(),
            };
            let Some(ord) = ord else { return false };
            use std::cmp::Ordering::*;
            match op {
                CmpOp::Eq => ord == Equal,
                CmpOp::Ne => ord != Equal,
                CmpOp::Lt => ord == Less,
                CmpOp::Le => ord != Greater,
                CmpOp::Gt => ord == Greater,
                CmpOp::Ge => ord != Less,
                CmpOp::Contains => unreachable!(),
            }
        }
    }
}

pub fn grid_table() -> SchemaTemplate {
    SchemaTemplate::new(
        "grid",
        Archetype::Research,
        vec![
            FieldSpec::new("id", DType::Integer).required(),
            FieldSpec::new("r", DType::Real),
            FieldSpec::new("n", DType::Integer),
            FieldSpec::new("s", DType::Text),
            FieldSpec::new("b", DType::Boolean),
        ],
    )
}

pub fn row_strategy() -> impl Strategy<Value = Cells> {
    (
        prop::option::weighted(0.85, prop_oneof![(-3i32..=3).prop_map(|v| v as f64 * 0.5), -2.0f64..2.0]),
        prop::option::weighted(0.85, -3i64..=3),
        prop::option::weighted(0.85, "[abc]{0,3}"),
        prop::option::weighted(0.85, any::<bool>()),
    )
}

pub fn leaf() -> impl Strategy<Value = FilterExpr> {
    let ordered = prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Ne), Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Gt), Just(CmpOp::Ge)];
    prop_oneof![
        (ordered.clone(), (-4i32..=4).prop_map(|v| v as f64 * 0.5)).prop_map(|(op, v)| FilterExpr::cmp(op, "r", json!(v))),
        (ordered.clone(), -4i64..=4).prop_map(|(op, v)| FilterExpr::cmp(op, "n", json!(v))),
        (ordered.clone(), -4.0f64..4.0).prop_map(|(op, v)| FilterExpr::cmp(op, "n", json!(v))),
        (prop_oneof![ordered, Just(CmpOp::Contains)], "[abc]{0,2}").prop_map(|(op, v)| FilterExpr::cmp(op, "s", json!(v))),
        (prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Ne)], any::<bool>()).prop_map(|(op, v)| FilterExpr::cmp(op, "b", json!(v))),
    ]
}

pub fn filter_tree() -> impl Strategy<Value = FilterExpr> {
    leaf().prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(FilterExpr::And),
            prop::collection::vec(inner.clone(), 0..4).prop_map(FilterExpr::Or),
            inner.prop_map(|x| FilterExpr::Not(Box::new(x))),
        ]
    })
}

pub fn load(rows: &[Cells]) -> (Store, Vec<Row>) {
    let store = Store::in_memory();
    store.create_table(grid_table()).unwrap();
    let mut plain = Vec::new();
    for (i, (r, n, s, b)) in rows.iter().enumerate() {
        let rec = json!({"id": i, "r": r, "n": n, "s": s, "b": b});
        store.insert("grid", None, rec.as_object().unwrap(), "t", Lineage::default()).unwrap();
        plain.push(Row { id: i as i64, r: *r, n: *n, s: s.clone(), b: *b });
    }
    (store, plain)
}

