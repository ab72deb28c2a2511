use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use momf_core::acquisition::{
    ehvi_2d, expected_improvement, lower_confidence_bound, optimize_acquisition, posterior_correlation,
    probability_of_improvement, qehvi_from_posteriors, AcquisitionKind, BaseSamples, BatchPosterior, Candidate,
    CostModel, FidelityDomain, OptimizerConfig,
};
use momf_core::benchmarks::{find, BenchmarkDef};
use momf_core::design::{initial_design, sobol_points};
use momf_core::pareto::{default_reference_point, hypervolume, nondominated_indices, Direction};
use momf_core::surrogate::{fit_gp, FitOptions, GpModel};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::config::{CampaignConfig, Mode};
use super::impute::{impute, ImputeReport};
use super::scan::{benchmark_scan, BenchmarkScan};
use super::{mix, CampaignError};
use crate::datastore::{DType, Query, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Configured,
    AwaitingMeasurement,
    Updating,
    Converged,
    BudgetExhausted,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Converged | Phase::BudgetExhausted)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Configured => "configured",
            Phase::AwaitingMeasurement => "awaiting_measurement",
            Phase::Updating => "updating",
            Phase::Converged => "converged",
            Phase::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated design. `y` is in user directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub iter: usize,
    /// The proposal that produced it, or the source row for dataset seeds.
    pub proposal_id: Uuid,
    pub x: Vec<f64>,
    pub fidelity: f64,
    pub cost: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalStatus {
    Pending,
    Measured,
    Expired,
}

impl ProposalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ProposalStatus::Pending => "pending",
            ProposalStatus::Measured => "measured",
            ProposalStatus::Expired => "expired",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: Uuid,
    pub iter: usize,
    pub x: Vec<f64>,
    pub fidelity: f64,
    /// Acquisition value as optimized (cost-weighted when fidelity is active).
    /// Absent for space-filling proposals.
    pub acq_value: Option<f64>,
    pub acq_raw: Option<f64>,
    /// Posterior at the target fidelity, user directions.
    pub pred_mean: Vec<f64>,
    pub pred_sd: Vec<f64>,
    pub status: ProposalStatus,
    pub space_filling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub hv: f64,
    pub delta_hv: f64,
    /// Distance to the reference front; benchmark mode only.
    pub gd: Option<f64>,
    pub acq_raw: Option<f64>,
    pub acq_costweighted: Option<f64>,
    /// Fidelities of the evaluations in this iteration.
    pub fidelity: Vec<f64>,
    pub cum_cost: f64,
    pub wall_ms: u64,
    /// Set when proposals came from the space-filling fallback.
    pub space_filling: bool,
}

/// Everything resolved from the config and, in dataset mode, the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub input_names: Vec<String>,
    pub objective_names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub directions: Vec<Direction>,
    pub acquisition: AcquisitionKind,
    pub imputation: Option<ImputeReport>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn objectives(&self) -> usize {
        self.directions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub phase: Phase,
    pub benchmark: Option<String>,
    pub iterations: usize,
    pub evaluations: usize,
    pub pending: usize,
    pub total_cost: f64,
    pub final_hv: f64,
    /// Best value per objective at the target fidelity, user directions.
    pub best: Vec<f64>,
    /// Design achieving `best` when there is a single objective.
    pub best_x: Option<Vec<f64>>,
}

/// A seeded, budget-tracked campaign.
///
/// All randomness derives from the config seed, so the same config replays
/// the same proposals and exports byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Campaign {
    config: CampaignConfig,
    problem: Problem,
    phase: Phase,
    observations: Vec<Observation>,
    proposals: Vec<Proposal>,
    records: Vec<IterationRecord>,
    cum_cost: f64,
    proposal_counter: u64,
    /// Frozen internal reference point (dataset mode).
    reference: Option<Vec<f64>>,
    #[serde(skip)]
    bench: Option<(BenchmarkDef, Arc<BenchmarkScan>)>,
}

impl PartialEq for Campaign {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.problem == other.problem
            && self.phase == other.phase
            && self.observations == other.observations
            && self.proposals == other.proposals
            && self.records == other.records
            && self.cum_cost.to_bits() == other.cum_cost.to_bits()
            && self.proposal_counter == other.proposal_counter
            && self.reference == other.reference
    }
}

const TARGET: f64 = 1.0;

fn resolve_acquisition(config: &CampaignConfig, m: usize) -> Result<AcquisitionKind, CampaignError> {
    let kind = config.acquisition.unwrap_or(match (m, config.q) {
        (1, _) => AcquisitionKind::Ei,
        (_, 1) => AcquisitionKind::Ehvi,
        _ => AcquisitionKind::QEhvi,
    });
    let bad = |m: String| Err(CampaignError::Config(m));
    if kind.is_multi_objective() != (m > 1) {
        let want = if m > 1 { "EHVI or qEHVI" } else { "EI, PI or LCB" };
        return bad(format!("{m} objective(s) need {want}"));
    }
    if config.q > 1 && kind != AcquisitionKind::QEhvi {
        return bad("q > 1 requires qEHVI".into());
    }
    if kind == AcquisitionKind::Lcb && config.fidelity.is_some() {
        return bad("LCB cannot be combined with a fidelity cost model".into());
    }
    Ok(kind)
}

impl Campaign {
    /// Builds a campaign; dataset mode reads its seed data from `store`.
    pub fn new(config: CampaignConfig, store: Option<&Store>) -> Result<Campaign, CampaignError> {
        config.check()?;
        match config.mode {
            Mode::Benchmark => Campaign::new_benchmark(config),
            Mode::Dataset => {
                let store = store.ok_or_else(|| CampaignError::Config("dataset mode needs a datastore".into()))?;
                Campaign::new_dataset(config, store)
            }
        }
    }

    fn new_benchmark(config: CampaignConfig) -> Result<Campaign, CampaignError> {
        let name = config.benchmark.as_deref().expect("checked");
        let def = find(name).map_err(|e| CampaignError::Config(e.to_string()))?;
        let d = config.dim.unwrap_or(def.dim);
        if d == 0 || (!def.any_dim && d != def.dim) {
            return Err(CampaignError::Config(format!("{name} is defined in {} dimensions", def.dim)));
        }
        let bounds = match &config.bounds {
            Some(b) if b.len() != d => return Err(CampaignError::Config("bounds must have one entry per input".into())),
            Some(b) => b.clone(),
            None => def.bounds_for(d),
        };
        if let Some(b) = &config.bounds {
            let domain = def.bounds_for(d);
            if b.iter().zip(&domain).any(|(u, v)| u.0 < v.0 || u.1 > v.1) {
                return Err(CampaignError::Config("bounds must lie inside the benchmark domain".into()));
            }
        }
        if !config.directions.is_empty() && config.directions != def.directions {
            return Err(CampaignError::Config("benchmark objective directions are fixed".into()));
        }
        let m = def.objectives;
        if config.reference_point.as_ref().is_some_and(|r| r.len() != m) {
            return Err(CampaignError::Config("reference_point needs one value per objective".into()));
        }
        let acquisition = resolve_acquisition(&config, m)?;
        let problem = Problem {
            input_names: (1..=d).map(|i| format!("x_{i}")).collect(),
            objective_names: (1..=m).map(|i| format!("y_{i}")).collect(),
            bounds,
            directions: def.directions.clone(),
            acquisition,
            imputation: None,
        };
        let scan = benchmark_scan(&def, d);
        let mut c = Campaign::blank(config, problem);
        if let Some(r) = &c.config.reference_point {
            c.reference = Some(r.iter().zip(&c.problem.directions).map(|(v, dir)| dir.to_internal(*v)).collect());
        }
        c.bench = Some((def, scan));
        Ok(c)
    }

    fn new_dataset(config: CampaignConfig, store: &Store) -> Result<Campaign, CampaignError> {
        let table = config.table.clone().expect("checked");
        let schema = store.schema(&table)?;
        for col in config.inputs.iter().chain(&config.objectives) {
            match schema.field(col) {
                None => return Err(CampaignError::Config(format!("table {table:?} has no column {col:?}"))),
                Some((_, f)) if f.dtype != DType::Real => {
                    return Err(CampaignError::Config(format!("column {col:?} is {}, not real", f.dtype)));
                }
                Some(_) => {}
            }
        }
        let d = config.inputs.len();
        let m = config.objectives.len();
        let columns: Vec<String> = config.inputs.iter().chain(&config.objectives).cloned().collect();
        let rows = store.query(&table, &Query { columns: Some(columns), ..Query::default() })?;
        let raw: Vec<Vec<Option<f64>>> = rows.rows.iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
        let (filled, report) = impute(&raw, config.imputation)?;
        // imputation drops whole rows, so provenance has to follow the kept ones
        let kept_ids: Vec<Uuid> = match config.imputation {
            super::Imputation::DropRows => {
                raw.iter().zip(&rows.provenance).filter(|(r, _)| r.iter().all(Option::is_some)).map(|(_, p)| p.uuid).collect()
            }
            _ => rows.provenance.iter().map(|p| p.uuid).collect(),
        };
        let bounds = match &config.bounds {
            Some(b) => b.clone(),
            None => {
                if filled.is_empty() {
                    return Err(CampaignError::Config("bounds are required when the table has no complete rows".into()));
                }
                (0..d)
                    .map(|k| {
                        let lo = filled.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                        let hi = filled.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                        if hi > lo {
                            (lo, hi)
                        } else {
                            (lo - 0.5, hi + 0.5)
                        }
                    })
                    .collect()
            }
        };
        let directions = if config.directions.is_empty() { vec![Direction::Maximize; m] } else { config.directions.clone() };
        if config.reference_point.as_ref().is_some_and(|r| r.len() != m) {
            return Err(CampaignError::Config("reference_point needs one value per objective".into()));
        }
        let acquisition = resolve_acquisition(&config, m)?;
        let problem = Problem {
            input_names: config.inputs.clone(),
            objective_names: config.objectives.clone(),
            bounds,
            directions,
            acquisition,
            imputation: Some(report),
        };
        let mut c = Campaign::blank(config, problem);
        if let Some(r) = &c.config.reference_point {
            c.reference = Some(r.iter().zip(&c.problem.directions).map(|(v, dir)| dir.to_internal(*v)).collect());
        }
        for (row, id) in filled.into_iter().zip(kept_ids) {
            c.observations.push(Observation {
                iter: 0,
                proposal_id: id,
                x: row[..d].to_vec(),
                fidelity: TARGET,
                cost: 0.0,
                y: row[d..].to_vec(),
            });
        }
        if c.observations.len() >= c.config.init_n {
            c.finish_batch(0, None, false, Vec::new(), None)?;
        }
        Ok(c)
    }

    fn blank(config: CampaignConfig, problem: Problem) -> Campaign {
        Campaign {
            config,
            problem,
            phase: Phase::Configured,
            observations: Vec::new(),
            proposals: Vec::new(),
            records: Vec::new(),
            cum_cost: 0.0,
            proposal_counter: 0,
            reference: None,
            bench: None,
        }
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    pub fn pending(&self) -> Vec<&Proposal> {
        self.proposals.iter().filter(|p| p.status == ProposalStatus::Pending).collect()
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn cumulative_cost(&self) -> f64 {
        self.cum_cost
    }

    fn remaining(&self) -> f64 {
        self.config.budget.map_or(f64::INFINITY, |b| b - self.cum_cost)
    }

    /// Price of one evaluation; without a cost model every evaluation costs 1.
    pub fn evaluation_cost(&self, fidelity: f64) -> Result<f64, CampaignError> {
        match &self.config.fidelity {
            Some(c) => Ok(c.cost(fidelity)?),
            None if (fidelity - TARGET).abs() <= 1e-12 => Ok(1.0),
            None => Err(CampaignError::Config(format!("fidelity {fidelity} given but no cost model is configured"))),
        }
    }

    fn min_cost(&self) -> f64 {
        self.config.fidelity.as_ref().map_or(1.0, CostModel::min_cost)
    }

    fn require_mode(&self, op: &'static str, needed: Mode) -> Result<(), CampaignError> {
        if self.config.mode == needed {
            Ok(())
        } else {
            Err(CampaignError::WrongMode { op, needed })
        }
    }

    fn require_phase(&self, op: &'static str, allowed: &[Phase]) -> Result<(), CampaignError> {
        if allowed.contains(&self.phase) {
            Ok(())
        } else {
            Err(CampaignError::Phase { op, phase: self.phase })
        }
    }

    fn next_id(&mut self) -> Uuid {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.config.seed, 0xA11D_0000 + self.proposal_counter));
        self.proposal_counter += 1;
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        uuid::Builder::from_random_bytes(bytes).into_uuid()
    }

    /// Dataset mode: the next ranked batch of pending proposals. Empty when
    /// nothing is affordable, which ends the campaign.
    pub fn propose(&mut self) -> Result<Vec<Proposal>, CampaignError> {
        self.require_mode("propose", Mode::Dataset)?;
        self.require_phase("propose", &[Phase::Configured, Phase::Updating])?;
        let ids = self.propose_batch()?;
        Ok(self.proposals.iter().filter(|p| ids.contains(&p.id)).cloned().collect())
    }

    fn propose_batch(&mut self) -> Result<Vec<Uuid>, CampaignError> {
        let iter = self.records.len();
        let d = self.problem.dim();
        let mut fresh: Vec<Proposal> = Vec::new();
        if self.observations.len() < self.config.init_n {
            if self.evaluation_cost(TARGET)? > self.remaining() {
                self.phase = Phase::BudgetExhausted;
                return Ok(Vec::new());
            }
            let n = self.config.init_n - self.observations.len();
            let xs = initial_design(&self.problem.bounds, n, self.config.init_method, mix(self.config.seed, 0x1D))?;
            for x in xs {
                fresh.push(self.space_filling_proposal(iter, x, TARGET));
            }
        } else {
            let domain = match &self.config.fidelity {
                Some(c) => match c.affordable_domain(self.remaining()) {
                    Some(dom) => Some(dom),
                    None => {
                        self.phase = Phase::BudgetExhausted;
                        return Ok(Vec::new());
                    }
                },
                None if 1.0 > self.remaining() => {
                    self.phase = Phase::BudgetExhausted;
                    return Ok(Vec::new());
                }
                None => None,
            };
            let models = self.fit_models(iter)?;
            if models.iter().any(GpModel::is_degenerate) {
                let s = match &domain {
                    Some(FidelityDomain::Discrete(l)) => *l.last().expect("non-empty"),
                    Some(FidelityDomain::Continuous { upper, .. }) => *upper,
                    None => TARGET,
                };
                let u = sobol_points(d, self.observations.len(), self.config.q, mix(self.config.seed, 0x5F));
                for p in u {
                    let x = p.iter().zip(&self.problem.bounds).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect();
                    fresh.push(self.space_filling_proposal(iter, x, s));
                }
            } else {
                for cand in self.optimize(&models, domain.as_ref(), iter)? {
                    let s = cand.fidelity.unwrap_or(TARGET);
                    let raw = match &self.config.fidelity {
                        Some(c) => cand.value * c.cost(s)?,
                        None => cand.value,
                    };
                    let xt = self.model_input(&cand.x, TARGET);
                    let (mut mean, mut sd) = (Vec::new(), Vec::new());
                    for (model, dir) in models.iter().zip(&self.problem.directions) {
                        let (mu, s) = model.predict_one(&xt);
                        mean.push(dir.from_internal(mu));
                        sd.push(s);
                    }
                    fresh.push(Proposal {
                        id: self.next_id(),
                        iter,
                        x: cand.x,
                        fidelity: s,
                        acq_value: Some(cand.value),
                        acq_raw: Some(raw),
                        pred_mean: mean,
                        pred_sd: sd,
                        status: ProposalStatus::Pending,
                        space_filling: false,
                    });
                }
            }
        }
        let ids = fresh.iter().map(|p| p.id).collect();
        self.proposals.extend(fresh);
        self.phase = Phase::AwaitingMeasurement;
        Ok(ids)
    }

    fn space_filling_proposal(&mut self, iter: usize, x: Vec<f64>, fidelity: f64) -> Proposal {
        Proposal {
            id: self.next_id(),
            iter,
            x,
            fidelity,
            acq_value: None,
            acq_raw: None,
            pred_mean: Vec::new(),
            pred_sd: Vec::new(),
            status: ProposalStatus::Pending,
            space_filling: true,
        }
    }

    /// Model input: the design, plus the fidelity coordinate when a cost
    /// model is active.
    fn model_input(&self, x: &[f64], s: f64) -> Vec<f64> {
        let mut v = x.to_vec();
        if self.config.fidelity.is_some() {
            v.push(s);
        }
        v
    }

    fn fit_models(&self, iter: usize) -> Result<Vec<GpModel>, CampaignError> {
        let xs: Vec<Vec<f64>> = self.observations.iter().map(|o| self.model_input(&o.x, o.fidelity)).collect();
        let mut bounds = self.problem.bounds.clone();
        if self.config.fidelity.is_some() {
            bounds.push((0.0, 1.0));
        }
        let mut models = Vec::with_capacity(self.problem.objectives());
        for (k, dir) in self.problem.directions.iter().enumerate() {
            let y: Vec<f64> = self.observations.iter().map(|o| dir.to_internal(o.y[k])).collect();
            let opts = FitOptions {
                bounds: Some(bounds.clone()),
                seed: mix(self.config.seed, ((iter as u64) << 8) | k as u64),
                ..FitOptions::default()
            };
            models.push(fit_gp(&xs, &y, &opts)?);
        }
        Ok(models)
    }

    /// Internal objective vectors of target-fidelity observations.
    fn target_points(&self) -> Vec<Vec<f64>> {
        self.observations.iter().filter(|o| (o.fidelity - TARGET).abs() <= 1e-12).map(|o| self.internal(&o.y)).collect()
    }

    fn internal(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.problem.directions).map(|(v, d)| d.to_internal(*v)).collect()
    }

    fn optimize(&mut self, models: &[GpModel], domain: Option<&FidelityDomain>, iter: usize) -> Result<Vec<Candidate>, CampaignError> {
        let kind = self.problem.acquisition;
        let m = models.len();
        let q = self.config.q;
        let beta = self.config.beta;
        let fid = self.config.fidelity.clone();
        let mut targets = self.target_points();
        if targets.is_empty() {
            targets = self.observations.iter().map(|o| self.internal(&o.y)).collect();
        }
        let incumbent = targets.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let (front, reference) = if m > 1 {
            let front: Vec<Vec<f64>> = nondominated_indices(&targets).into_iter().map(|i| targets[i].clone()).collect();
            (front, self.acquisition_reference(&targets)?)
        } else {
            (Vec::new(), Vec::new())
        };
        let mc = kind == AcquisitionKind::QEhvi || (kind == AcquisitionKind::Ehvi && m != 2);
        let sample_seed = mix(self.config.seed, 0xBA5E_0000 + iter as u64);
        let bases: Vec<BaseSamples> = if mc {
            (1..=q).map(|size| BaseSamples::new(self.config.mc_samples, m, size, mix(sample_seed, size as u64))).collect()
        } else {
            Vec::new()
        };
        let with_fidelity = fid.is_some();
        let input = |x: &[f64], s: f64| {
            let mut v = x.to_vec();
            if with_fidelity {
                v.push(s);
            }
            v
        };
        let batch_value = |batch: &[Vec<f64>]| -> f64 {
            let posteriors: Option<Vec<BatchPosterior>> = models
                .iter()
                .map(|g| g.predict_joint(batch).ok().map(|(mean, cov)| BatchPosterior { mean, cov }))
                .collect();
            let Some(posteriors) = posteriors else { return f64::NEG_INFINITY };
            qehvi_from_posteriors(&posteriors, &bases[batch.len() - 1], &front, &reference, beta)
                .map_or(f64::NEG_INFINITY, |(v, _)| v)
        };
        let mut chosen_cache: Option<(usize, f64)> = None;
        let score = |x: &[f64], s: Option<f64>, chosen: &[Candidate]| -> f64 {
            let xt = input(x, TARGET);
            let raw = match kind {
                AcquisitionKind::Ei | AcquisitionKind::Pi | AcquisitionKind::Lcb => {
                    let (mu, sd) = models[0].predict_one(&xt);
                    let v = match kind {
                        AcquisitionKind::Ei => expected_improvement(mu, sd, incumbent),
                        AcquisitionKind::Pi => probability_of_improvement(mu, sd, incumbent),
                        _ => lower_confidence_bound(-mu, sd, beta).map(|b| -b),
                    };
                    v.unwrap_or(f64::NEG_INFINITY)
                }
                AcquisitionKind::Ehvi if !mc => {
                    let (m0, s0) = models[0].predict_one(&xt);
                    let (m1, s1) = models[1].predict_one(&xt);
                    ehvi_2d([m0, m1], [beta * s0, beta * s1], &front, &reference).unwrap_or(f64::NEG_INFINITY)
                }
                _ => {
                    let mut batch: Vec<Vec<f64>> = chosen.iter().map(|c| input(&c.x, TARGET)).collect();
                    let base = match chosen_cache {
                        Some((n, v)) if n == chosen.len() => v,
                        _ if chosen.is_empty() => 0.0,
                        _ => {
                            let v = batch_value(&batch);
                            chosen_cache = Some((chosen.len(), v));
                            v
                        }
                    };
                    batch.push(xt.clone());
                    batch_value(&batch) - base
                }
            };
            match (s, &fid) {
                (Some(s), Some(cost)) => {
                    let corr = if (s - TARGET).abs() <= 1e-12 {
                        1.0
                    } else {
                        let xs = input(x, s);
                        models.iter().map(|g| posterior_correlation(g, &xs, &xt).unwrap_or(0.0).max(0.0)).sum::<f64>()
                            / m as f64
                    };
                    cost.cost(s).map_or(f64::NEG_INFINITY, |c| raw * corr / c)
                }
                _ => raw,
            }
        };
        let opt = if mc {
            OptimizerConfig { n_seeds: 256, n_refine: 4, nm_iters: 40, seed: mix(self.config.seed, 0x0C7 + iter as u64) }
        } else {
            OptimizerConfig { seed: mix(self.config.seed, 0x0C7 + iter as u64), ..OptimizerConfig::default() }
        };
        let mut out = optimize_acquisition(score, &self.problem.bounds, q, domain, &opt);
        for c in &mut out {
            if let (Some(s), None) = (c.fidelity, &fid) {
                debug_assert_eq!(s, TARGET);
            }
            if fid.is_none() {
                c.fidelity = None;
            }
        }
        Ok(out)
    }

    /// Reference point for acquisition scoring, internal convention.
    fn acquisition_reference(&mut self, targets: &[Vec<f64>]) -> Result<Vec<f64>, CampaignError> {
        if let Some((_, scan)) = &self.bench {
            return Ok(self.reference.clone().unwrap_or_else(|| scan.reference.clone()));
        }
        self.freeze_reference(targets)
    }

    fn freeze_reference(&mut self, points: &[Vec<f64>]) -> Result<Vec<f64>, CampaignError> {
        if let Some(r) = &self.reference {
            return Ok(r.clone());
        }
        let r = default_reference_point(points)?;
        self.reference = Some(r.clone());
        Ok(r)
    }

    /// Points whose hypervolume is reported. Benchmarks score the true
    /// target-fidelity value of every evaluated design; datasets score the
    /// target-fidelity measurements.
    fn scored_points(&self) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), CampaignError> {
        match &self.bench {
            Some((def, _)) => {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for o in &self.observations {
                    xs.push(o.x.clone());
                    ys.push(self.internal(&def.eval(&o.x)?));
                }
                Ok((xs, ys))
            }
            None => {
                let sel: Vec<&Observation> =
                    self.observations.iter().filter(|o| (o.fidelity - TARGET).abs() <= 1e-12).collect();
                Ok((sel.iter().map(|o| o.x.clone()).collect(), sel.iter().map(|o| self.internal(&o.y)).collect()))
            }
        }
    }

    fn current_hv(&mut self) -> Result<(f64, Option<f64>), CampaignError> {
        let (_, points) = self.scored_points()?;
        if points.is_empty() {
            return Ok((0.0, None));
        }
        let reference = match &self.bench {
            Some((_, scan)) => self.reference.clone().unwrap_or_else(|| scan.reference.clone()),
            None => self.freeze_reference(&points)?,
        };
        let hv = hypervolume(&points, &reference)?.value;
        let gd = self.bench.as_ref().map(|(_, scan)| {
            if let Some(opt) = scan.optimum {
                let best = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                (opt - best).max(0.0)
            } else {
                let idx = nondominated_indices(&points);
                idx.iter()
                    .map(|&i| {
                        scan.front
                            .iter()
                            .map(|f| f.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum::<f64>()
                    / idx.len() as f64
            }
        });
        Ok((hv, gd))
    }

    fn finish_batch(
        &mut self,
        iter: usize,
        lead: Option<&Proposal>,
        space_filling: bool,
        fidelity: Vec<f64>,
        started: Option<Instant>,
    ) -> Result<IterationRecord, CampaignError> {
        let (hv, gd) = self.current_hv()?;
        let prev = self.records.last().map_or(0.0, |r| r.hv);
        // recomputing on a superset can round a hair below the previous value
        let hv = hv.max(prev);
        let wall_ms = match (self.config.record_wall_time, started) {
            (true, Some(t)) => t.elapsed().as_millis() as u64,
            _ => 0,
        };
        let record = IterationRecord {
            iter,
            hv,
            delta_hv: hv - prev,
            gd,
            acq_raw: lead.and_then(|p| p.acq_raw),
            acq_costweighted: lead.and_then(|p| p.acq_value),
            fidelity,
            cum_cost: self.cum_cost,
            wall_ms,
            space_filling,
        };
        self.records.push(record.clone());
        self.phase = if self.records.len() > self.config.iterations {
            Phase::Converged
        } else if self.min_cost() > self.remaining() {
            Phase::BudgetExhausted
        } else {
            Phase::Updating
        };
        Ok(record)
    }

    fn resolve_if_done(&mut self, iter: usize, started: Option<Instant>) -> Result<Option<IterationRecord>, CampaignError> {
        if self.proposals.iter().any(|p| p.status == ProposalStatus::Pending) {
            return Ok(None);
        }
        let batch: Vec<Proposal> = self.proposals.iter().filter(|p| p.iter == iter).cloned().collect();
        let fidelity: Vec<f64> = self.observations.iter().filter(|o| o.iter == iter && batch.iter().any(|p| p.id == o.proposal_id)).map(|o| o.fidelity).collect();
        let lead = batch.iter().find(|p| !p.space_filling).cloned();
        let space_filling = iter > 0 && batch.iter().any(|p| p.space_filling);
        self.finish_batch(iter, lead.as_ref(), space_filling, fidelity, started).map(Some)
    }

    fn pending_index(&self, id: Uuid) -> Result<usize, CampaignError> {
        let i = self.proposals.iter().position(|p| p.id == id).ok_or(CampaignError::UnknownProposal(id))?;
        if self.proposals[i].status != ProposalStatus::Pending {
            return Err(CampaignError::AlreadyResolved(id));
        }
        Ok(i)
    }

    /// Dataset mode: records a measurement for a pending proposal. Returns the
    /// iteration record when this resolves the batch.
    pub fn submit(&mut self, id: Uuid, y: &[f64], fidelity: Option<f64>) -> Result<Option<IterationRecord>, CampaignError> {
        self.require_mode("submit", Mode::Dataset)?;
        let i = self.pending_index(id)?;
        self.require_phase("submit", &[Phase::AwaitingMeasurement])?;
        let m = self.problem.objectives();
        if y.len() != m {
            return Err(CampaignError::Arity { expected: m, got: y.len() });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(CampaignError::NonFinite);
        }
        let s = fidelity.unwrap_or(self.proposals[i].fidelity);
        let cost = self.evaluation_cost(s)?;
        if cost > self.remaining() {
            return Err(CampaignError::BudgetExceeded { cost, remaining: self.remaining() });
        }
        self.record_observation(i, y.to_vec(), s, cost);
        let iter = self.proposals[i].iter;
        self.resolve_if_done(iter, None)
    }

    /// Dataset mode: abandons a pending proposal.
    pub fn expire(&mut self, id: Uuid) -> Result<Option<IterationRecord>, CampaignError> {
        self.require_mode("expire", Mode::Dataset)?;
        let i = self.pending_index(id)?;
        self.require_phase("expire", &[Phase::AwaitingMeasurement])?;
        self.proposals[i].status = ProposalStatus::Expired;
        let iter = self.proposals[i].iter;
        self.resolve_if_done(iter, None)
    }

    fn record_observation(&mut self, i: usize, y: Vec<f64>, fidelity: f64, cost: f64) {
        let p = &mut self.proposals[i];
        p.status = ProposalStatus::Measured;
        self.observations.push(Observation { iter: p.iter, proposal_id: p.id, x: p.x.clone(), fidelity, cost, y });
        self.cum_cost += cost;
    }

    /// Benchmark mode: propose, evaluate and record one iteration. `None`
    /// once the budget runs out before anything could be evaluated.
    pub fn step(&mut self) -> Result<Option<IterationRecord>, CampaignError> {
        self.require_mode("step", Mode::Benchmark)?;
        self.require_phase("step", &[Phase::Configured, Phase::Updating])?;
        let started = Instant::now();
        let ids = self.propose_batch()?;
        if ids.is_empty() {
            return Ok(None);
        }
        let def = self.bench.as_ref().expect("benchmark campaigns carry their definition").0.clone();
        let iter = self.records.len();
        let mut out_of_budget = false;
        for id in ids {
            let i = self.proposals.iter().position(|p| p.id == id).expect("just proposed");
            let s = self.proposals[i].fidelity;
            let cost = self.evaluation_cost(s)?;
            if out_of_budget || cost > self.remaining() {
                out_of_budget = true;
                self.proposals[i].status = ProposalStatus::Expired;
                continue;
            }
            let y = def.eval_at_fidelity(&self.proposals[i].x, s)?;
            self.record_observation(i, y, s, cost);
        }
        let measured = self.observations.iter().any(|o| o.iter == iter && o.cost > 0.0);
        if !measured {
            self.phase = Phase::BudgetExhausted;
            return Ok(None);
        }
        let record = self.resolve_if_done(iter, Some(started))?.expect("benchmark batches resolve immediately");
        if out_of_budget {
            self.phase = Phase::BudgetExhausted;
        }
        Ok(Some(record))
    }

    /// Benchmark mode: steps until converged or out of budget.
    pub fn run(&mut self) -> Result<(), CampaignError> {
        while !self.phase.is_terminal() {
            self.step()?;
        }
        Ok(())
    }

    /// Raises the iteration limit by `extra`, reopening a converged campaign.
    pub fn extend(&mut self, extra: usize) {
        self.config.iterations += extra;
        if self.phase == Phase::Converged && self.records.len() <= self.config.iterations {
            self.phase = Phase::Updating;
        }
    }

    pub fn is_finished(&self) -> bool {
        self.phase.is_terminal()
    }

    /// Final front in user directions, as `(x, y)` pairs.
    pub fn front(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>, CampaignError> {
        let (xs, ys) = self.scored_points()?;
        Ok(nondominated_indices(&ys)
            .into_iter()
            .map(|i| {
                let y = ys[i].iter().zip(&self.problem.directions).map(|(v, d)| d.from_internal(*v)).collect();
                (xs[i].clone(), y)
            })
            .collect())
    }

    pub fn summary(&self) -> Result<Summary, CampaignError> {
        let (xs, ys) = self.scored_points()?;
        let m = self.problem.objectives();
        let best_internal: Vec<f64> =
            (0..m).map(|k| ys.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        let best = if ys.is_empty() {
            Vec::new()
        } else {
            best_internal.iter().zip(&self.problem.directions).map(|(v, d)| d.from_internal(*v)).collect()
        };
        let best_x = if m == 1 && !ys.is_empty() {
            let i = (0..ys.len()).max_by(|&a, &b| ys[a][0].total_cmp(&ys[b][0]).then(b.cmp(&a))).expect("non-empty");
            Some(xs[i].clone())
        } else {
            None
        };
        Ok(Summary {
            mode: self.config.mode,
            phase: self.phase,
            benchmark: self.config.benchmark.clone(),
            iterations: self.records.len().saturating_sub(1),
            evaluations: self.observations.iter().filter(|o| o.cost > 0.0).count(),
            pending: self.pending().len(),
            total_cost: self.cum_cost,
            final_hv: self.records.last().map_or(0.0, |r| r.hv),
            best,
            best_x,
        })
    }

    /// Full state as JSON; [`Campaign::from_snapshot`] resumes it exactly.
    pub fn snapshot(&self) -> String {
        serde_json::to_string_pretty(self).expect("campaign state serializes")
    }

    pub fn from_snapshot(text: &str) -> Result<Campaign, CampaignError> {
        let mut c: Campaign = serde_json::from_str(text).map_err(|e| CampaignError::Snapshot(e.to_string()))?;
        c.config.check()?;
        if c.config.mode == Mode::Benchmark {
            let def = find(c.config.benchmark.as_deref().unwrap_or_default()).map_err(|e| CampaignError::Snapshot(e.to_string()))?;
            let scan = benchmark_scan(&def, c.problem.dim());
            c.bench = Some((def, scan));
        }
        Ok(c)
    }

    /// Replaces the observation archive, e.g. after re-importing an export.
    #[doc(hidden)]
    pub fn observations_mut(&mut self) -> &mut Vec<Observation> {
        &mut self.observations
    }
}
