//! Iterative a-priori item reduction: manual drops, low loaders, cross
//! loaders, then collapse of under-identified factors.

use serde::{Deserialize, Serialize};

use super::extract::efa_df;
use super::solution::{fit_efa, Assignment, EfaConfig, FactorCount, FactorSolution};
use crate::corr::CorrelationMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    LowLoading,
    CrossLoading,
    SmallFactorCollapse,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    /// `None` for a factor collapse, which removes no item.
    pub item: Option<String>,
    pub criterion: Criterion,
    /// Factor count and items of the solution the step was decided on.
    pub n_factors: usize,
    pub n_items: usize,
    /// Largest absolute loading of the removed item (low/cross steps).
    pub max_loading: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
}

impl ReductionTrace {
    pub fn removed_items(&self) -> Vec<String> {
        self.steps.iter().filter_map(|s| s.item.clone()).collect()
    }

    /// Factor count after all collapse steps, starting from `k0`.
    pub fn final_factors(&self, k0: usize) -> usize {
        k0 - self
            .steps
            .iter()
            .filter(|s| s.criterion == Criterion::SmallFactorCollapse)
            .count()
    }

    /// Re-apply the removals to the original matrix and refit.
    pub fn replay(
        &self,
        r: &CorrelationMatrix,
        config: &ReductionConfig,
    ) -> Result<FactorSolution> {
        let k0 = config.initial_factors(r)?;
        let removed = self.removed_items();
        let keep: Vec<String> = r
            .item_ids
            .iter()
            .filter(|id| !removed.contains(id))
            .cloned()
            .collect();
        let sub = r.select(&keep)?;
        let efa = EfaConfig {
            n_factors: FactorCount::Fixed(self.final_factors(k0)),
            ..config.efa.clone()
        };
        fit_efa(&sub, &efa)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub efa: EfaConfig,
    /// Items never removed automatically.
    pub keep: Vec<String>,
    /// Items removed before any automated step.
    pub drop: Vec<String>,
}

impl ReductionConfig {
    fn initial_factors(&self, r: &CorrelationMatrix) -> Result<usize> {
        self.efa.resolve_factors(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub items: Vec<String>,
    pub trace: ReductionTrace,
    pub solution: FactorSolution,
}

fn max_abs_row(sol: &FactorSolution, j: usize) -> f64 {
    sol.pattern
        .row(j)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Difference between the two largest absolute loadings of item `j`.
fn loading_gap(sol: &FactorSolution, j: usize) -> f64 {
    let mut a: Vec<f64> = sol.pattern.row(j).iter().map(|v| v.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a[0] - a.get(1).copied().unwrap_or(0.0)
}

/// Pick the candidate with the smallest `score`; ties go to the earlier item.
fn pick(
    sol: &FactorSolution,
    status: Assignment,
    keep: &[String],
    score: impl Fn(usize) -> f64,
) -> Option<usize> {
    (0..sol.item_ids.len())
        .filter(|&j| sol.assignment[j] == status && !keep.contains(&sol.item_ids[j]))
        .min_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)))
}

pub fn reduce_items(r: &CorrelationMatrix, config: &ReductionConfig) -> Result<Reduction> {
    let mut k = config.initial_factors(r)?;
    let mut trace = ReductionTrace::default();
    let mut items = r.item_ids.clone();

    for id in &config.drop {
        if r.position(id).is_none() {
            return Err(Error::InvalidInput(format!(
                "drop list names unknown item `{id}`"
            )));
        }
        if let Some(pos) = items.iter().position(|x| x == id) {
            items.remove(pos);
            trace.steps.push(ReductionStep {
                item: Some(id.clone()),
                criterion: Criterion::Manual,
                n_factors: k,
                n_items: items.len() + 1,
                max_loading: None,
            });
        }
    }

    loop {
        if items.is_empty() || k == 0 || efa_df(items.len(), k) < 0 {
            return Err(Error::ReductionExhausted(format!(
                "{} items cannot support {} factors",
                items.len(),
                k
            )));
        }
        let sub = r.select(&items)?;
        let efa = EfaConfig {
            n_factors: FactorCount::Fixed(k),
            ..config.efa.clone()
        };
        let sol = fit_efa(&sub, &efa)?;

        let low = pick(&sol, Assignment::LowLoading, &config.keep, |j| {
            max_abs_row(&sol, j)
        });
        let cross = pick(&sol, Assignment::CrossLoading, &config.keep, |j| {
            loading_gap(&sol, j)
        });
        let (j, criterion) = match (low, cross) {
            (Some(j), _) => (j, Criterion::LowLoading),
            (None, Some(j)) => (j, Criterion::CrossLoading),
            (None, None) => {
                let small = (0..k).any(|f| sol.items_on(f).len() < config.efa.min_items_per_factor);
                if small && k > 1 {
                    trace.steps.push(ReductionStep {
                        item: None,
                        criterion: Criterion::SmallFactorCollapse,
                        n_factors: k,
                        n_items: items.len(),
                        max_loading: None,
                    });
                    k -= 1;
                    continue;
                }
                return Ok(Reduction {
                    items,
                    trace,
                    solution: sol,
                });
            }
        };
        trace.steps.push(ReductionStep {
            item: Some(sol.item_ids[j].clone()),
            criterion,
            n_factors: k,
            n_items: items.len(),
            max_loading: Some(max_abs_row(&sol, j)),
        });
        items.remove(j);
    }
}
