use serde::Serialize;

use super::state::Campaign;
use super::CampaignError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCount {
    pub fidelity: f64,
    pub count: usize,
}

/// Per-iteration series plus per-evaluation exploration traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iter: Vec<usize>,
    pub hv: Vec<f64>,
    pub delta_hv: Vec<f64>,
    /// Omitted in dataset mode.
    pub gd: Option<Vec<f64>>,
    pub acq_raw: Vec<Option<f64>>,
    pub acq_costweighted: Vec<Option<f64>>,
    pub cum_cost: Vec<f64>,
    pub fidelity_histogram: Vec<FidelityCount>,
    /// `‖x_t − x_{t−1}‖` between consecutive evaluations.
    pub step_size: Vec<f64>,
    /// Running best per evaluation, single-objective campaigns only.
    pub best_so_far: Option<Vec<f64>>,
    /// `|best_so_far − f*|` for single-objective benchmarks with a known optimum.
    pub distance_to_optimum: Option<Vec<f64>>,
}

impl Campaign {
    pub fn diagnostics(&self) -> Result<Diagnostics, CampaignError> {
        let records = self.records();
        if records.is_empty() {
            return Err(CampaignError::EmptyLog);
        }
        let evaluated: Vec<_> = self.observations().iter().filter(|o| o.cost > 0.0).collect();
        let mut histogram: Vec<FidelityCount> = Vec::new();
        for o in &evaluated {
            match histogram.iter_mut().find(|h| h.fidelity == o.fidelity) {
                Some(h) => h.count += 1,
                None => histogram.push(FidelityCount { fidelity: o.fidelity, count: 1 }),
            }
        }
        histogram.sort_by(|a, b| a.fidelity.total_cmp(&b.fidelity));
        let step_size = evaluated
            .windows(2)
            .map(|w| w[0].x.iter().zip(&w[1].x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        let problem = self.problem();
        let (best_so_far, distance_to_optimum) = if problem.objectives() == 1 {
            let dir = problem.directions[0];
            let mut best = f64::NEG_INFINITY;
            let series: Vec<f64> = evaluated
                .iter()
                .map(|o| {
                    best = best.max(dir.to_internal(o.y[0]));
                    dir.from_internal(best)
                })
                .collect();
            let optimum = match &self.config().benchmark {
                Some(name) => momf_core::benchmarks::find(name).ok().and_then(|d| d.optima.first().map(|o| o.value)),
                None => None,
            };
            let distance = optimum.map(|f| series.iter().map(|b| (b - f).abs()).collect());
            (Some(series), distance)
        } else {
            (None, None)
        };
        let has_gd = records.iter().all(|r| r.gd.is_some());
        Ok(Diagnostics {
            iter: records.iter().map(|r| r.iter).collect(),
            hv: records.iter().map(|r| r.hv).collect(),
            delta_hv: records.iter().map(|r| r.delta_hv).collect(),
            gd: has_gd.then(|| records.iter().map(|r| r.gd.expect("checked")).collect()),
            acq_raw: records.iter().map(|r| r.acq_raw).collect(),
            acq_costweighted: records.iter().map(|r| r.acq_costweighted).collect(),
            cum_cost: records.iter().map(|r| r.cum_cost).collect(),
            fidelity_histogram: histogram,
            step_size,
            best_so_far,
            distance_to_optimum,
        })
    }
}
