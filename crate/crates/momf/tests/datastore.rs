use std::collections::{HashMap, HashSet};

use momf::datastore::{
    Archetype, CmpOp, DType, FieldSpec, FilterExpr, Lineage, Query, SchemaTemplate, Store, StoreError, StoreOptions,
    TravelerForm, UnitRegistry, Value,
};
use proptest::prelude::*;
use serde_json::{json, Map, Value as Json};

mod common;
use common::{filter_tree, load, oracle, row_strategy};

fn record(v: Json) -> Map<String, Json> {
    v.as_object().unwrap().clone()
}

fn alloys() -> SchemaTemplate {
    SchemaTemplate::new(
        "alloys",
        Archetype::Research,
        vec![
            FieldSpec::new("sample", DType::Text).required(),
            FieldSpec::new("temp", DType::Real).with_unit("K"),
            FieldSpec::new("count", DType::Integer),
            FieldSpec::new("ok", DType::Boolean),
        ],
    )
}

#[test]
fn schema_enforcement_rejects_without_writing() {
    let store = Store::in_memory();
    store.create_table(alloys()).unwrap();
    let bad = [
        json!({"temp": 300.0}),
        json!({"sample": "a", "temp": "hot"}),
        json!({"sample": "a", "count": 1.5}),
        json!({"sample": "a", "extra": 1}),
        json!({"sample": 4}),
    ];
    for b in bad {
        let err = store.insert("alloys", None, &record(b.clone()), "t", Lineage::default()).unwrap_err();
        assert!(matches!(err, StoreError::Rejected(_)), "{b} gave {err:?}");
    }
    assert_eq!(store.row_count("alloys").unwrap(), 0);
    store.insert("alloys", None, &record(json!({"sample": "a", "count": 2, "ok": true})), "t", Lineage::default()).unwrap();
    assert_eq!(store.row_count("alloys").unwrap(), 1);
    assert!(matches!(store.create_table(alloys()), Err(StoreError::DuplicateName(_))));
}

#[test]
fn thousand_uuids_are_distinct_and_resolvable_as_parents() {
    let store = Store::in_memory();
    store.create_table(alloys()).unwrap();
    let mut seen = HashSet::new();
    let mut prev = None;
    for i in 0..1000 {
        let lineage = Lineage { parents: prev.into_iter().collect(), ..Lineage::default() };
        let stamp = store.insert("alloys", None, &record(json!({"sample": format!("s{i}")})), "lab", lineage).unwrap();
        assert!(seen.insert(stamp.uuid));
        prev = Some(stamp.uuid);
    }
    let unknown = uuid::Uuid::from_u128(7);
    let lineage = Lineage { parents: vec![unknown], ..Lineage::default() };
    let err = store.insert("alloys", None, &record(json!({"sample": "x"})), "lab", lineage).unwrap_err();
    assert_eq!(err, StoreError::UnknownParent(unknown));
}

#[test]
fn unit_round_trip() {
    let units = UnitRegistry::default();
    for (a, b, v) in [("K", "°C", 300.0), ("mm", "km", 12.5), ("MPa", "kPa", 0.3), ("°C", "K", -40.0), ("mg", "g", 7.0)] {
        let there = units.convert(v, a, b).unwrap();
        let back = units.convert(there, b, a).unwrap();
        assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0), "{a}->{b}: {v} -> {there} -> {back}");
    }
    assert!((units.convert(0.0, "°C", "K").unwrap() - 273.15).abs() < 1e-12);
    assert!(units.convert(1.0, "K", "m").is_err());
    assert!(units.convert(1.0, "furlong", "m").is_err());
}

#[test]
fn journal_replay_restores_tables_forms_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let opts = || StoreOptions { data_dir: Some(dir.path().to_path_buf()), ..StoreOptions::default() };
    let first = {
        let store = Store::open(opts()).unwrap();
        store.create_table(alloys()).unwrap();
        store.register_form(TravelerForm::basic("alloys")).unwrap();
        let a = store.insert("alloys", Some("alloys_default"), &record(json!({"sample": "a", "temp": 301.5})), "lab", Lineage::default()).unwrap();
        store.insert("alloys", None, &record(json!({"sample": "b"})), "lab", Lineage { parents: vec![a.uuid], ..Lineage::default() }).unwrap();
        store.query("alloys", &Query::default()).unwrap()
    };
    let store = Store::open(opts()).unwrap();
    assert!(store.form("alloys_default").is_ok());
    assert_eq!(store.query("alloys", &Query::default()).unwrap(), first);
}

#[test]
fn pagination_walks_every_row_once() {
    let store = Store::in_memory();
    store.create_table(alloys()).unwrap();
    for i in 0..23 {
        store.insert("alloys", None, &record(json!({"sample": format!("s{i}"), "count": i})), "t", Lineage::default()).unwrap();
    }
    let mut q = Query { num_rows: Some(5), filter: Some(FilterExpr::cmp(CmpOp::Ge, "count", json!(3))), ..Query::default() };
    let mut got = Vec::new();
    loop {
        let page = store.query("alloys", &q).unwrap();
        got.extend(page.rows.iter().map(|r| r[2].clone()));
        match page.next_cursor {
            Some(c) => q.cursor = Some(c),
            None => break,
        }
    }
    assert_eq!(got, (3..23).map(Value::Integer).collect::<Vec<_>>());
    q.cursor = Some("garbage!".into());
    assert!(matches!(store.query("alloys", &q), Err(StoreError::MalformedCursor)));
}

#[test]
fn csv_round_trip_preserves_values() {
    let store = Store::in_memory();
    store.create_table(alloys()).unwrap();
    store.insert("alloys", None, &record(json!({"sample": "a,\"b\"", "temp": 0.1, "count": -3, "ok": false})), "t", Lineage::default()).unwrap();
    store.insert("alloys", None, &record(json!({"sample": "c"})), "t", Lineage::default()).unwrap();
    let mut text = Vec::new();
    store.export_csv("alloys", &mut text).unwrap();
    let other = Store::in_memory();
    other.create_table(alloys()).unwrap();
    let report = other.import_csv("alloys", text.as_slice(), None, "t", "copy").unwrap();
    assert_eq!((report.accepted, report.rejected), (2, 0));
    let rows = |s: &Store| s.query("alloys", &Query::default()).unwrap().rows;
    assert_eq!(rows(&store), rows(&other));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filters_match_interpretive_scan(
        rows in prop::collection::vec(row_strategy(), 0..60),
        exprs in prop::collection::vec(filter_tree(), 1..8),
    ) {
        let (store, plain) = load(&rows);
        for e in exprs {
            // Parsing the printed form must give the same tree.
            prop_assert_eq!(FilterExpr::from_json(&e.to_json()).unwrap(), e.clone());
            let q = Query { columns: Some(vec!["id".into()]), filter: Some(e.clone()), ..Query::default() };
            let got: Vec<i64> = store.query("grid", &q).unwrap().rows.iter().map(|r| match r[0] { Value::Integer(v) => v, _ => unreachable!() }).collect();
            let want: Vec<i64> = plain.iter().filter(|r| oracle(&e, r)).map(|r| r.id).collect();
            prop_assert_eq!(got, want, "filter {}", e.to_json());
        }
    }

    #[test]
    fn provenance_graph_is_acyclic(parent_picks in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 0..3), 1..40)) {
        let store = Store::in_memory();
        store.create_table(alloys()).unwrap();
        let mut stamps: Vec<momf::datastore::ProvenanceStamp> = Vec::new();
        for (i, picks) in parent_picks.iter().enumerate() {
            let parents: Vec<uuid::Uuid> = if stamps.is_empty() {
                Vec::new()
            } else {
                let mut p: Vec<uuid::Uuid> = picks.iter().map(|ix: &prop::sample::Index| ix.get(&stamps).uuid).collect();
                p.sort();
                p.dedup();
                p
            };
            let lineage = Lineage { parents, transform: "derive".into(), ..Lineage::default() };
            stamps.push(store.insert("alloys", None, &record(json!({"sample": format!("s{i}")})), "t", lineage).unwrap());
        }
        // Kahn's algorithm over everything the store reports.
        let all = store.query("alloys", &Query::default()).unwrap().provenance;
        let mut indeg: HashMap<uuid::Uuid, usize> = all.iter().map(|s| (s.uuid, s.parent_uuids.len())).collect();
        let mut children: HashMap<uuid::Uuid, Vec<uuid::Uuid>> = HashMap::new();
        for s in &all {
            for p in &s.parent_uuids {
                prop_assert!(indeg.contains_key(p));
                children.entry(*p).or_default().push(s.uuid);
            }
        }
        let mut ready: Vec<uuid::Uuid> = indeg.iter().filter(|(_, d)| **d == 0).map(|(u, _)| *u).collect();
        let mut seen = 0;
        while let Some(u) = ready.pop() {
            seen += 1;
            for c in children.get(&u).into_iter().flatten() {
                let d = indeg.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(*c);
                }
            }
        }
        prop_assert_eq!(seen, all.len());
        // Timestamps never go backwards for one actor.
        prop_assert!(all.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    }
}
