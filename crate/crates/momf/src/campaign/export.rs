use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::state::{Campaign, Observation};
use super::CampaignError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Observations,
    Proposals,
    Iterations,
    Front,
}

impl ExportKind {
    pub const ALL: [ExportKind; 4] =
        [ExportKind::Observations, ExportKind::Proposals, ExportKind::Iterations, ExportKind::Front];

    pub fn as_str(self) -> &'static str {
        match self {
            ExportKind::Observations => "observations",
            ExportKind::Proposals => "proposals",
            ExportKind::Iterations => "iterations",
            ExportKind::Front => "front",
        }
    }
}

impl FromStr for ExportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown export {s:?}; expected observations, proposals, iterations or front"))
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(f64::to_string)
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: Vec<String>) -> Table {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("writing to memory");
        Table { w }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.w.write_record(&cells).expect("writing to memory");
    }

    fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("flushing memory")).expect("cells are UTF-8")
    }
}

impl Campaign {
    /// RFC 4180 text with a header row. Objective values are in user
    /// directions; missing values are empty cells.
    pub fn export_csv(&self, which: ExportKind) -> Result<String, CampaignError> {
        let d = self.problem().dim();
        let m = self.problem().objectives();
        Ok(match which {
            ExportKind::Observations => {
                let mut header = vec!["iter".to_string(), "proposal_id".to_string()];
                header.extend(numbered("x", d));
                header.extend(["fidelity".to_string(), "cost".to_string()]);
                header.extend(numbered("y", m));
                let mut t = Table::new(header);
                for o in self.observations() {
                    let mut row = vec![o.iter.to_string(), o.proposal_id.to_string()];
                    row.extend(nums(&o.x));
                    row.extend([o.fidelity.to_string(), o.cost.to_string()]);
                    row.extend(nums(&o.y));
                    t.row(row);
                }
                t.finish()
            }
            ExportKind::Proposals => {
                let mut header = vec!["id".to_string(), "status".to_string()];
                header.extend(numbered("x", d));
                header.extend(["fidelity".to_string(), "acq_value".to_string()]);
                header.extend(numbered("pred_mean", m));
                header.extend(numbered("pred_sd", m));
                let mut t = Table::new(header);
                for p in self.proposals() {
                    let mut row = vec![p.id.to_string(), p.status.as_str().to_string()];
                    row.extend(nums(&p.x));
                    row.extend([p.fidelity.to_string(), opt(p.acq_value)]);
                    for k in 0..m {
                        row.push(opt(p.pred_mean.get(k)));
                    }
                    for k in 0..m {
                        row.push(opt(p.pred_sd.get(k)));
                    }
                    t.row(row);
                }
                t.finish()
            }
            ExportKind::Iterations => {
                let header = ["iter", "hv", "delta_hv", "gd", "acq_raw", "acq_costweighted", "fidelity", "cum_cost", "wall_ms"];
                let mut t = Table::new(header.iter().map(|s| s.to_string()).collect());
                for r in self.records() {
                    t.row(vec![
                        r.iter.to_string(),
                        r.hv.to_string(),
                        r.delta_hv.to_string(),
                        opt(r.gd),
                        opt(r.acq_raw),
                        opt(r.acq_costweighted),
                        r.fidelity.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                        r.cum_cost.to_string(),
                        r.wall_ms.to_string(),
                    ]);
                }
                t.finish()
            }
            ExportKind::Front => {
                let mut header: Vec<String> = numbered("x", d).collect();
                header.extend(numbered("y", m));
                let mut t = Table::new(header);
                for (x, y) in self.front()? {
                    let mut row: Vec<String> = nums(&x).collect();
                    row.extend(nums(&y));
                    t.row(row);
                }
                t.finish()
            }
        })
    }
}

/// Parses an observations export back into the archive it came from.
pub fn observations_from_csv(text: &str) -> Result<Vec<Observation>, CampaignError> {
    let bad = |m: String| CampaignError::Csv(m);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let d = header.iter().filter(|h| h.starts_with("x_")).count();
    let m = header.iter().filter(|h| h.starts_with("y_")).count();
    let mut expected = vec!["iter".to_string(), "proposal_id".to_string()];
    expected.extend(numbered("x", d));
    expected.extend(["fidelity".to_string(), "cost".to_string()]);
    expected.extend(numbered("y", m));
    if header != expected {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("not a number: {s:?}")));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let cells: Vec<&str> = rec.iter().collect();
        out.push(Observation {
            iter: cells[0].parse().map_err(|_| bad(format!("bad iteration {:?}", cells[0])))?,
            proposal_id: Uuid::parse_str(cells[1]).map_err(|_| bad(format!("bad uuid {:?}", cells[1])))?,
            x: cells[2..2 + d].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
            fidelity: num(cells[2 + d])?,
            cost: num(cells[3 + d])?,
            y: cells[4 + d..].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}
