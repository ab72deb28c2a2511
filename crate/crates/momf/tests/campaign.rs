use momf::campaign::{observations_from_csv, Campaign, CampaignConfig, CampaignError, ExportKind, Phase, ProposalStatus};
use momf::datastore::{Archetype, DType, FieldSpec, Lineage, SchemaTemplate, Store};
use momf_core::acquisition::{AcquisitionKind, CostModel};
use momf_core::benchmarks;
use proptest::prelude::*;
use serde_json::json;

fn bundle(c: &Campaign) -> Vec<String> {
    let mut out: Vec<String> = ExportKind::ALL.iter().map(|k| c.export_csv(*k).unwrap()).collect();
    out.push(c.snapshot());
    out
}

fn small_moo(seed: u64) -> CampaignConfig {
    CampaignConfig { mc_samples: 128, ..CampaignConfig::benchmark("branin_currin", 4, 4, seed) }
}

#[test]
fn identical_config_and_seed_give_identical_bundles() {
    for cfg in [small_moo(5), CampaignConfig::benchmark("branin", 6, 3, 9)] {
        let mut a = Campaign::new(cfg.clone(), None).unwrap();
        let mut b = Campaign::new(cfg.clone(), None).unwrap();
        a.run().unwrap();
        b.run().unwrap();
        assert_eq!(bundle(&a), bundle(&b));
        let mut c = Campaign::new(CampaignConfig { seed: cfg.seed + 1, ..cfg }, None).unwrap();
        c.run().unwrap();
        assert_ne!(bundle(&a)[0], bundle(&c)[0]);
    }
}

#[test]
fn snapshot_resume_matches_an_uninterrupted_run() {
    let cfg = CampaignConfig::benchmark("goldstein_price", 6, 4, 21);
    let mut whole = Campaign::new(cfg.clone(), None).unwrap();
    whole.run().unwrap();
    let mut part = Campaign::new(cfg, None).unwrap();
    part.step().unwrap();
    part.step().unwrap();
    let mut resumed = Campaign::from_snapshot(&part.snapshot()).unwrap();
    resumed.run().unwrap();
    assert_eq!(bundle(&whole), bundle(&resumed));
}

#[test]
fn extend_reopens_a_converged_campaign() {
    let mut c = Campaign::new(CampaignConfig::benchmark("branin", 2, 3, 1), None).unwrap();
    c.run().unwrap();
    assert_eq!(c.phase(), Phase::Converged);
    c.extend(2);
    c.run().unwrap();
    assert_eq!(c.records().len(), 5);
    assert_eq!(c.summary().unwrap().evaluations, 3 + 4);
}

#[test]
fn budgeted_fidelity_campaign_stays_within_budget_and_hv_never_drops() {
    let cfg = CampaignConfig {
        fidelity: Some(CostModel::Discrete { levels: vec![0.5, 1.0], costs: vec![1.0, 5.0] }),
        budget: Some(25.0),
        iterations: 100,
        ..small_moo(3)
    };
    let mut c = Campaign::new(cfg, None).unwrap();
    c.run().unwrap();
    assert_eq!(c.phase(), Phase::BudgetExhausted);
    assert!(c.cumulative_cost() <= 25.0);
    let hv: Vec<f64> = c.records().iter().map(|r| r.hv).collect();
    assert!(hv.windows(2).all(|w| w[1] >= w[0]), "{hv:?}");
    assert!(c.records().iter().all(|r| r.fidelity.iter().all(|s| *s == 0.5 || *s == 1.0)));
}

#[test]
fn export_round_trip() {
    let mut c = Campaign::new(small_moo(8), None).unwrap();
    c.run().unwrap();
    let text = c.export_csv(ExportKind::Observations).unwrap();
    assert_eq!(observations_from_csv(&text).unwrap(), c.observations());
    let front = c.export_csv(ExportKind::Front).unwrap();
    assert_eq!(front.lines().count(), c.front().unwrap().len() + 1);
    assert_eq!(front.lines().next().unwrap(), "x_1,x_2,y_1,y_2");
}

#[test]
fn benchmark_campaigns_refuse_dataset_operations() {
    let mut c = Campaign::new(CampaignConfig::benchmark("branin", 2, 3, 1), None).unwrap();
    assert!(matches!(c.propose(), Err(CampaignError::WrongMode { .. })));
    assert!(matches!(c.expire(uuid::Uuid::nil()), Err(CampaignError::WrongMode { .. })));
}

#[test]
fn config_validation() {
    let bad = [
        CampaignConfig::benchmark("no_such_function", 2, 3, 0),
        CampaignConfig { q: 2, acquisition: Some(AcquisitionKind::Ei), ..CampaignConfig::benchmark("branin", 2, 3, 0) },
        CampaignConfig { acquisition: Some(AcquisitionKind::Ehvi), ..CampaignConfig::benchmark("branin", 2, 3, 0) },
        CampaignConfig { acquisition: Some(AcquisitionKind::Ei), ..small_moo(0) },
        CampaignConfig {
            acquisition: Some(AcquisitionKind::Lcb),
            fidelity: Some(CostModel::default()),
            ..CampaignConfig::benchmark("branin", 2, 3, 0)
        },
    ];
    for cfg in bad {
        assert!(Campaign::new(cfg.clone(), None).is_err(), "{cfg:?}");
    }
}

fn dataset_store(rows: usize) -> Store {
    let store = Store::in_memory();
    store
        .create_table(SchemaTemplate::new(
            "trials",
            Archetype::Research,
            vec![FieldSpec::new("a", DType::Real), FieldSpec::new("b", DType::Real), FieldSpec::new("y", DType::Real), FieldSpec::new("z", DType::Real)],
        ))
        .unwrap();
    let def = benchmarks::find("branin").unwrap();
    for i in 0..rows {
        let x = [-5.0 + 15.0 * ((i * 7 % 11) as f64 / 10.0), 15.0 * ((i * 3 % 11) as f64 / 10.0)];
        let y = def.eval(&x).unwrap()[0];
        let rec = json!({"a": x[0], "b": x[1], "y": y, "z": x[0] * x[1]});
        store.insert("trials", None, rec.as_object().unwrap(), "seed", Lineage::default()).unwrap();
    }
    store
}

#[test]
fn dataset_lifecycle_with_seeded_rows() {
    let store = dataset_store(6);
    let cfg = CampaignConfig {
        bounds: Some(vec![(-5.0, 10.0), (0.0, 15.0)]),
        seed: 4,
        ..CampaignConfig::dataset("trials", &["a", "b"], &["y"], 3, 4)
    };
    let mut c = Campaign::new(cfg, Some(&store)).unwrap();
    assert_eq!(c.observations().len(), 6);
    let def = benchmarks::find("branin").unwrap();
    for _ in 0..3 {
        let p = c.propose().unwrap();
        assert_eq!(p.len(), 1);
        assert!(matches!(c.propose(), Err(CampaignError::Phase { .. })));
        assert!(matches!(c.submit(p[0].id, &[1.0, 2.0], None), Err(CampaignError::Arity { .. })));
        assert!(matches!(c.submit(p[0].id, &[f64::NAN], None), Err(CampaignError::NonFinite)));
        assert!(matches!(c.submit(uuid::Uuid::nil(), &[1.0], None), Err(CampaignError::UnknownProposal(_))));
        let y = def.eval(&p[0].x).unwrap();
        let rec = c.submit(p[0].id, &y, None).unwrap().expect("a batch of one resolves");
        assert!(matches!(c.submit(p[0].id, &y, None), Err(CampaignError::AlreadyResolved(_))));
        assert_eq!(rec.iter, c.records().len() - 1);
    }
    assert_eq!(c.phase(), Phase::Converged);
    assert!(matches!(c.propose(), Err(CampaignError::Phase { .. })));
}

#[test]
fn dataset_without_rows_starts_from_an_initial_design() {
    let store = dataset_store(0);
    let cfg = CampaignConfig {
        bounds: Some(vec![(-5.0, 10.0), (0.0, 15.0)]),
        ..CampaignConfig::dataset("trials", &["a", "b"], &["y"], 2, 3)
    };
    let mut c = Campaign::new(cfg, Some(&store)).unwrap();
    let first = c.propose().unwrap();
    assert_eq!(first.len(), 3);
    c.expire(first[0].id).unwrap();
    for p in &first[1..] {
        c.submit(p.id, &[p.x[0] + p.x[1]], None).unwrap();
    }
    assert_eq!(c.records().len(), 1);
    assert_eq!(c.proposals()[0].status, ProposalStatus::Expired);
}

#[derive(Debug, Clone)]
enum Op {
    Propose,
    Submit(prop::sample::Index, f64),
    Expire(prop::sample::Index),
    BadArity(prop::sample::Index),
    Snapshot,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => Just(Op::Propose),
        4 => (any::<prop::sample::Index>(), -50.0f64..50.0).prop_map(|(i, y)| Op::Submit(i, y)),
        1 => any::<prop::sample::Index>().prop_map(Op::Expire),
        1 => any::<prop::sample::Index>().prop_map(Op::BadArity),
        1 => Just(Op::Snapshot),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Any sequence of client actions leaves the campaign in a consistent
    // state: failed calls change nothing, pending proposals only exist while
    // awaiting measurement, and iteration records grow one at a time.
    #[test]
    fn dataset_state_machine(ops in prop::collection::vec(op(), 1..30), q in 1usize..3) {
        let store = dataset_store(0);
        let cfg = CampaignConfig {
            bounds: Some(vec![(-5.0, 10.0), (0.0, 15.0)]),
            q,
            mc_samples: 128,
            ..CampaignConfig::dataset("trials", &["a", "b"], &["y", "z"], 3, 2)
        };
        let mut c = Campaign::new(cfg, Some(&store)).unwrap();
        for op in ops {
            let before = c.snapshot();
            let records = c.records().len();
            let pending: Vec<uuid::Uuid> = c.pending().iter().map(|p| p.id).collect();
            let result = match &op {
                Op::Propose => c.propose().map(|_| ()),
                Op::Submit(i, y) if !pending.is_empty() => c.submit(*i.get(&pending), &[*y, -*y], None).map(|_| ()),
                Op::Expire(i) if !pending.is_empty() => c.expire(*i.get(&pending)).map(|_| ()),
                Op::BadArity(i) if !pending.is_empty() => c.submit(*i.get(&pending), &[1.0], None).map(|_| ()),
                Op::Snapshot => {
                    c = Campaign::from_snapshot(&before).unwrap();
                    prop_assert_eq!(c.snapshot(), before.clone());
                    Ok(())
                }
                _ => Ok(()),
            };
            if result.is_err() {
                prop_assert_eq!(c.snapshot(), before, "failed {:?} mutated state", op);
            }
            prop_assert!(c.records().len() == records || c.records().len() == records + 1);
            let awaiting = c.phase() == Phase::AwaitingMeasurement;
            prop_assert_eq!(awaiting, !c.pending().is_empty());
            prop_assert!(c.records().windows(2).all(|w| w[1].hv >= w[0].hv));
            if c.phase() == Phase::Converged {
                prop_assert_eq!(c.records().len(), 4);
            }
        }
    }
}
