use serde::{Deserialize, Serialize};

use super::config::Imputation;
use super::CampaignError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputeReport {
    pub rows_dropped: usize,
    pub cells_filled: usize,
}

/// Removes or fills missing cells. `rows` is row-major; every row has the
/// same number of columns.
pub fn impute(rows: &[Vec<Option<f64>>], strategy: Imputation) -> Result<(Vec<Vec<f64>>, ImputeReport), CampaignError> {
    let mut report = ImputeReport::default();
    if let Imputation::DropRows = strategy {
        let kept: Vec<Vec<f64>> =
            rows.iter().filter_map(|r| r.iter().copied().collect::<Option<Vec<f64>>>()).collect();
        report.rows_dropped = rows.len() - kept.len();
        return Ok((kept, report));
    }
    let width = rows.first().map_or(0, Vec::len);
    let mut fill = Vec::with_capacity(width);
    for c in 0..width {
        let mut present: Vec<f64> = rows.iter().filter_map(|r| r[c]).collect();
        let v = match strategy {
            Imputation::Constant(v) => v,
            _ if present.is_empty() => return Err(CampaignError::Imputation(format!("column {} is entirely missing", c + 1))),
            Imputation::Mean => present.iter().sum::<f64>() / present.len() as f64,
            _ => {
                present.sort_by(f64::total_cmp);
                let n = present.len();
                if n % 2 == 1 {
                    present[n / 2]
                } else {
                    0.5 * (present[n / 2 - 1] + present[n / 2])
                }
            }
        };
        fill.push(v);
    }
    let out = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&fill)
                .map(|(cell, f)| {
                    cell.unwrap_or_else(|| {
                        report.cells_filled += 1;
                        *f
                    })
                })
                .collect()
        })
        .collect();
    Ok((out, report))
}
