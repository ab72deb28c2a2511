use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use momf::api::{router, App, TokenStore};
use momf::datastore::Store;
use serde_json::{json, Value};
use tower::ServiceExt;

const TOKENS: &str = "adm,admin,lab\ned,editor,lab\nview,viewer,guests\n";

fn app() -> (Router, Store) {
    let store = Store::in_memory();
    let app = App::new(store.clone(), TokenStore::from_text(TOKENS).unwrap());
    (router(Arc::new(app)), store)
}

async fn call(r: &Router, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call_raw(r, method, uri, token, body.map(|b| b.to_string()), None).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

async fn call_raw(
    r: &Router,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<String>,
    accept: Option<&str>,
) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    if let Some(a) = accept {
        req = req.header("accept", a);
    }
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let res = r.clone().oneshot(req.body(body.map(Body::from).unwrap_or_default()).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = to_bytes(res.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn template() -> Value {
    json!({"name": "films", "archetype": "research", "fields": [
        {"name": "sample", "dtype": "text", "nullable": false},
        {"name": "thickness", "dtype": "real", "unit": "nm"},
        {"name": "ok", "dtype": "boolean"}
    ]})
}

#[tokio::test]
async fn auth_precedes_everything_else() {
    let (r, _) = app();
    assert_eq!(call(&r, "GET", "/v1/healthz", None, None).await.0, StatusCode::OK);
    for (method, uri) in [("GET", "/v1/tables"), ("POST", "/v1/tables"), ("GET", "/v1/nowhere"), ("DELETE", "/v1/tables")] {
        let (s, body) = call(&r, method, uri, None, Some(json!("not an object"))).await;
        assert_eq!(s, StatusCode::UNAUTHORIZED, "{method} {uri}");
        assert_eq!(body["error"]["status"], 401);
        assert_eq!(call(&r, method, uri, Some("wrong"), None).await.0, StatusCode::UNAUTHORIZED);
    }
    // Role checks come before body validation.
    assert_eq!(call(&r, "POST", "/v1/tables", Some("view"), Some(json!(1))).await.0, StatusCode::FORBIDDEN);
    assert_eq!(call(&r, "POST", "/v1/tables", Some("ed"), Some(template())).await.0, StatusCode::FORBIDDEN);
    assert_eq!(call(&r, "POST", "/v1/tables", Some("adm"), Some(json!(1))).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&r, "GET", "/v1/nowhere", Some("view"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&r, "DELETE", "/v1/tables", Some("view"), None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn table_lifecycle() {
    let (r, store) = app();
    let (s, body) = call(&r, "POST", "/v1/tables", Some("adm"), Some(template())).await;
    assert_eq!((s, &body["name"]), (StatusCode::CREATED, &json!("films")));
    assert_eq!(call(&r, "POST", "/v1/tables", Some("adm"), Some(template())).await.0, StatusCode::BAD_REQUEST);
    let (s, meta) = call(&r, "GET", "/v1/tables/films/metadata", Some("view"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(meta["columns"][1]["unit"], "nm");
    assert_eq!(call(&r, "GET", "/v1/tables/nope/metadata", Some("view"), None).await.0, StatusCode::NOT_FOUND);

    for i in 0..5 {
        let rec = json!({"record": {"sample": format!("s{i}"), "thickness": 10.0 * i as f64, "ok": i % 2 == 0}});
        let (s, body) = call(&r, "POST", "/v1/tables/films/records", Some("ed"), Some(rec)).await;
        assert_eq!(s, StatusCode::CREATED);
        assert_eq!(body["provenance"]["actor"], "lab");
    }
    let (s, body) = call(&r, "POST", "/v1/tables/films/records", Some("ed"), Some(json!({"record": {"sample": "x", "thickness": "thin"}}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["path"], "record.thickness");
    assert_eq!(body["error"]["details"][0]["rule"], "type_mismatch");
    assert_eq!(call(&r, "POST", "/v1/tables/films/records", Some("view"), Some(json!({"record": {}}))).await.0, StatusCode::FORBIDDEN);

    let q = json!({"columns": ["sample", "thickness"], "filter": {"and": [{"ge": ["thickness", 10]}, {"eq": ["ok", true]}]}, "numRows": 1});
    let (s, rows) = call(&r, "POST", "/v1/tables/films/query", Some("view"), Some(q.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(rows["rows"], json!([["s2", 20.0]]));
    let next = rows["next_cursor"].as_str().unwrap();
    let (_, rows) = call(&r, "POST", "/v1/tables/films/query", Some("view"), Some(json!({"filter": q["filter"], "cursor": next}))).await;
    assert_eq!(rows["rows"][0][0], "s4");
    assert!(rows["next_cursor"].is_null());

    let (s, csv) = call_raw(&r, "POST", "/v1/tables/films/query", Some("view"), Some(json!({"numRows": 2}).to_string()), Some("text/csv")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(csv, "\"sample\",\"thickness\",\"ok\"\n\"s0\",0,\"true\"\n\"s1\",10,\"false\"\n");

    let bad = [
        (json!({"numRows": 0}), "numRows"),
        (json!({"columns": []}), "columns"),
        (json!({"filter": {"or": [{"gt": ["thickness", 1]}, {"zz": 1}]}}), "filter.or[1].zz"),
        (json!({"filter": {"gt": ["nope", 1]}}), "nope"),
        (json!({"colums": ["sample"]}), "colums"),
    ];
    for (b, path) in bad {
        let (s, body) = call(&r, "POST", "/v1/tables/films/query", Some("view"), Some(b.clone())).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{b}");
        assert!(body["error"]["path"].as_str().unwrap_or_default().contains(path) || body["error"]["message"].as_str().unwrap().contains(path), "{b}: {body}");
    }

    store.inject_fault(true);
    let (s, body) = call(&r, "POST", "/v1/tables/films/records", Some("ed"), Some(json!({"record": {"sample": "z"}}))).await;
    assert_eq!(s, StatusCode::INTERNAL_SERVER_ERROR);
    assert!(body["error"]["incident"].is_string());
    assert_eq!(body["error"]["message"], "internal error");
}

#[tokio::test]
async fn tokens_and_forms_are_admin_only() {
    let (r, _) = app();
    call(&r, "POST", "/v1/tables", Some("adm"), Some(template())).await;
    let form = json!({"form_id": "films_qc", "target_table": "films", "rules": [{"kind": "range", "field": "thickness", "min": 0, "max": 500}]});
    assert_eq!(call(&r, "POST", "/v1/forms", Some("ed"), Some(form.clone())).await.0, StatusCode::FORBIDDEN);
    assert_eq!(call(&r, "POST", "/v1/forms", Some("adm"), Some(form)).await.0, StatusCode::CREATED);
    let rec = json!({"record": {"sample": "a", "thickness": 900.0}, "form": "films_qc"});
    let (s, body) = call(&r, "POST", "/v1/tables/films/records", Some("ed"), Some(rec)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["details"][0]["rule"], "range");

    let (s, body) = call(&r, "POST", "/v1/tokens", Some("adm"), Some(json!({"role": "editor", "org": "partner"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let minted = body["token"].as_str().unwrap().to_string();
    let (s, body) = call(&r, "POST", "/v1/tables/films/records", Some(&minted), Some(json!({"record": {"sample": "b"}}))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(body["provenance"]["actor"], "partner");
    assert_eq!(call(&r, "POST", "/v1/tokens", Some(&minted), Some(json!({"role": "admin", "org": "x"}))).await.0, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn benchmark_campaign_over_http() {
    let (r, _) = app();
    let (s, list) = call(&r, "GET", "/v1/benchmarks", Some("view"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(list["benchmarks"].as_array().unwrap().iter().any(|b| b["name"] == "goldstein_price"));

    let cfg = json!({"mode": "benchmark", "benchmark": "branin", "iterations": 3, "init_n": 3, "seed": 2});
    assert_eq!(call(&r, "POST", "/v1/campaigns", Some("view"), Some(cfg.clone())).await.0, StatusCode::FORBIDDEN);
    let (s, body) = call(&r, "POST", "/v1/campaigns", Some("ed"), Some(json!({"mode": "benchmark", "iterations": 3}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
    let (s, created) = call(&r, "POST", "/v1/campaigns", Some("ed"), Some(cfg)).await;
    assert_eq!(s, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();
    assert_eq!(created["phase"], "configured");

    let (s, body) = call(&r, "POST", &format!("/v1/campaigns/{id}/propose"), Some("ed"), None).await;
    assert_eq!((s, &body["error"]["code"]), (StatusCode::BAD_REQUEST, &json!("wrong_mode")));
    let (s, body) = call(&r, "POST", &format!("/v1/campaigns/{id}/step"), Some("ed"), Some(json!({"steps": 10}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["records"].as_array().unwrap().len(), 4);
    assert_eq!(body["phase"], "converged");
    let (s, _) = call(&r, "POST", &format!("/v1/campaigns/{id}/step"), Some("ed"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, diag) = call(&r, "GET", &format!("/v1/campaigns/{id}/diagnostics"), Some("view"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(diag["hv"].as_array().unwrap().len(), 4);
    let (s, export) = call(&r, "GET", &format!("/v1/campaigns/{id}/export?which=observations"), Some("view"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(export["rows"].as_array().unwrap().len(), 6);
    let (s, csv) = call_raw(&r, "GET", &format!("/v1/campaigns/{id}/export?which=iterations"), Some("view"), None, Some("text/csv")).await;
    assert_eq!(s, StatusCode::OK);
    assert!(csv.starts_with("iter,hv,delta_hv"));
    assert_eq!(call(&r, "GET", &format!("/v1/campaigns/{id}/export?which=nope"), Some("view"), None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&r, "GET", "/v1/campaigns/not-a-uuid", Some("view"), None).await.0, StatusCode::NOT_FOUND);
    let (_, list) = call(&r, "GET", "/v1/campaigns", Some("view"), None).await;
    assert_eq!(list["campaigns"][0]["id"], json!(id));
}

#[tokio::test]
async fn dataset_campaign_measurement_loop() {
    let (r, _) = app();
    let t = json!({"name": "trials", "archetype": "research", "fields": [
        {"name": "a", "dtype": "real"}, {"name": "b", "dtype": "real"}, {"name": "y", "dtype": "real"}
    ]});
    call(&r, "POST", "/v1/tables", Some("adm"), Some(t)).await;
    let cfg = json!({"mode": "dataset", "table": "trials", "inputs": ["a", "b"], "objectives": ["y"],
                     "directions": ["minimize"], "bounds": [[0, 1], [0, 1]], "iterations": 2, "init_n": 2, "seed": 1});
    let (s, created) = call(&r, "POST", "/v1/campaigns", Some("ed"), Some(cfg)).await;
    assert_eq!(s, StatusCode::CREATED, "{created}");
    let id = created["id"].as_str().unwrap().to_string();
    let m = format!("/v1/campaigns/{id}/measurements");
    let mut rounds = 0;
    loop {
        let (s, body) = call(&r, "POST", &format!("/v1/campaigns/{id}/propose"), Some("ed"), None).await;
        if s != StatusCode::OK {
            assert_eq!(body["error"]["code"], "invalid_phase");
            break;
        }
        rounds += 1;
        for p in body["proposals"].as_array().unwrap() {
            let pid = p["id"].as_str().unwrap();
            let x: Vec<f64> = serde_json::from_value(p["x"].clone()).unwrap();
            let (s, _) = call(&r, "POST", &m, Some("ed"), Some(json!({"proposal_id": pid, "y": [1.0, 2.0]}))).await;
            assert_eq!(s, StatusCode::BAD_REQUEST);
            let (s, body) = call(&r, "POST", &m, Some("ed"), Some(json!({"proposal_id": pid}))).await;
            assert_eq!((s, &body["error"]["path"]), (StatusCode::BAD_REQUEST, &json!("y")));
            let y = (x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2);
            assert_eq!(call(&r, "POST", &m, Some("ed"), Some(json!({"proposal_id": pid, "y": [y]}))).await.0, StatusCode::OK);
            let (s, _) = call(&r, "POST", &m, Some("ed"), Some(json!({"proposal_id": pid, "y": [y]}))).await;
            assert_eq!(s, StatusCode::BAD_REQUEST);
        }
    }
    assert_eq!(rounds, 3);
    let unknown = json!({"proposal_id": uuid::Uuid::nil(), "y": [1.0]});
    assert_eq!(call(&r, "POST", &m, Some("ed"), Some(unknown)).await.0, StatusCode::NOT_FOUND);
    let (_, c) = call(&r, "GET", &format!("/v1/campaigns/{id}"), Some("view"), None).await;
    assert_eq!(c["phase"], "converged");
    assert_eq!(c["summary"]["evaluations"], 4);
}

#[tokio::test]
async fn campaigns_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let build = || {
        let app = App::new(Store::in_memory(), TokenStore::from_text(TOKENS).unwrap()).with_campaign_dir(dir.path().join("campaigns")).unwrap();
        router(Arc::new(app))
    };
    let r = build();
    let cfg = json!({"mode": "benchmark", "benchmark": "booth", "iterations": 2, "init_n": 3});
    let (_, created) = call(&r, "POST", "/v1/campaigns", Some("ed"), Some(cfg)).await;
    let id = created["id"].as_str().unwrap().to_string();
    call(&r, "POST", &format!("/v1/campaigns/{id}/step"), Some("ed"), None).await;
    let (_, before) = call(&r, "GET", &format!("/v1/campaigns/{id}"), Some("view"), None).await;
    let r = build();
    let (s, after) = call(&r, "GET", &format!("/v1/campaigns/{id}"), Some("view"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(before, after);
}
