use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InstrumentDefinition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identification {
    /// One loading per factor fixed to 1, factor variances free.
    Marker,
    /// Factor variances fixed to 1, all loadings free.
    StdLv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Loading { item: usize, factor: usize },
    FactorVariance { factor: usize },
    FactorCovariance { a: usize, b: usize },
    Uniqueness { item: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub label: String,
    pub kind: ParamKind,
}

/// Single-indicator-per-item confirmatory model `Σ = ΛΦΛᵀ + Ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfaModel {
    pub items: Vec<String>,
    pub factors: Vec<String>,
    /// Factor index per item.
    pub loading_map: Vec<usize>,
    /// Marker item position per factor.
    pub markers: Vec<usize>,
    pub identification: Identification,
    pub params: Vec<Parameter>,
    /// Stability warnings (factors with fewer than 3 items).
    pub warnings: Vec<String>,
}

/// Model file: item id → factor name, plus optional marker overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub loadings: BTreeMap<String, String>,
    #[serde(default)]
    pub markers: BTreeMap<String, String>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    /// Subscale structure of an instrument.
    pub fn from_instrument(instrument: &InstrumentDefinition) -> Self {
        let labels = instrument.item_labels();
        ModelSpec {
            loadings: labels
                .into_iter()
                .zip(&instrument.items)
                .map(|(l, it)| (l, it.subscale.clone()))
                .collect(),
            markers: BTreeMap::new(),
        }
    }

    /// Every item on one factor `name`.
    pub fn single_factor(items: &[String], name: &str) -> Self {
        ModelSpec {
            loadings: items
                .iter()
                .map(|i| (i.clone(), name.to_string()))
                .collect(),
            markers: BTreeMap::new(),
        }
    }
}

/// Build a model over `items` (defining row order). Factors are ordered by
/// first appearance; the default marker is each factor's first item.
pub fn build_cfa(
    items: &[String],
    spec: &ModelSpec,
    identification: Identification,
) -> Result<CfaModel> {
    let mut factors: Vec<String> = Vec::new();
    let mut loading_map = Vec::with_capacity(items.len());
    for id in items {
        let f = spec
            .loadings
            .get(id)
            .ok_or_else(|| Error::InvalidInput(format!("item `{id}` is not mapped to a factor")))?;
        let pos = match factors.iter().position(|x| x == f) {
            Some(pos) => pos,
            None => {
                factors.push(f.clone());
                factors.len() - 1
            }
        };
        loading_map.push(pos);
    }
    for (id, f) in &spec.loadings {
        if !items.contains(id) {
            return Err(Error::InvalidInput(format!(
                "model maps unknown item `{id}` to `{f}`"
            )));
        }
    }
    for f in spec.markers.keys() {
        if !factors.contains(f) {
            return Err(Error::InvalidInput(format!(
                "marker given for factor `{f}` with zero items"
            )));
        }
    }

    let mut markers = Vec::with_capacity(factors.len());
    let mut warnings = Vec::new();
    for (fi, f) in factors.iter().enumerate() {
        let members: Vec<usize> = (0..items.len()).filter(|&j| loading_map[j] == fi).collect();
        let marker = match spec.markers.get(f) {
            Some(m) => {
                let j = items
                    .iter()
                    .position(|x| x == m)
                    .ok_or_else(|| Error::InvalidInput(format!("marker `{m}` is not an item")))?;
                if loading_map[j] != fi {
                    return Err(Error::InvalidInput(format!(
                        "marker `{m}` does not load on `{f}`"
                    )));
                }
                j
            }
            None => members[0],
        };
        if members.len() < 3 {
            warnings.push(format!(
                "factor `{f}` has {} items; 3 or more give stable estimates",
                members.len()
            ));
        }
        markers.push(marker);
    }

    let mut model = CfaModel {
        items: items.to_vec(),
        factors,
        loading_map,
        markers,
        identification,
        params: Vec::new(),
        warnings,
    };
    model.params = model.parameter_table();
    let df = model.df();
    if df < 0 {
        return Err(Error::OverParameterized(df));
    }
    Ok(model)
}

impl CfaModel {
    /// Independence (baseline) model: free variances, zero covariances.
    pub fn independence(items: &[String]) -> CfaModel {
        let mut model = CfaModel {
            items: items.to_vec(),
            factors: Vec::new(),
            loading_map: Vec::new(),
            markers: Vec::new(),
            identification: Identification::Marker,
            params: Vec::new(),
            warnings: Vec::new(),
        };
        model.params = model.parameter_table();
        model
    }

    pub fn p(&self) -> usize {
        self.items.len()
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn n_free(&self) -> usize {
        self.params.len()
    }

    pub fn df(&self) -> i64 {
        let p = self.p() as i64;
        p * (p + 1) / 2 - self.n_free() as i64
    }

    fn parameter_table(&self) -> Vec<Parameter> {
        let mut params = Vec::new();
        for (j, &f) in self.loading_map.iter().enumerate() {
            let fixed = self.identification == Identification::Marker && self.markers[f] == j;
            if !fixed {
                params.push(Parameter {
                    label: format!("{}=~{}", self.factors[f], self.items[j]),
                    kind: ParamKind::Loading { item: j, factor: f },
                });
            }
        }
        for f in 0..self.k() {
            if self.identification == Identification::Marker {
                params.push(Parameter {
                    label: format!("{0}~~{0}", self.factors[f]),
                    kind: ParamKind::FactorVariance { factor: f },
                });
            }
        }
        for a in 0..self.k() {
            for b in a + 1..self.k() {
                params.push(Parameter {
                    label: format!("{}~~{}", self.factors[a], self.factors[b]),
                    kind: ParamKind::FactorCovariance { a, b },
                });
            }
        }
        for j in 0..self.p() {
            params.push(Parameter {
                label: format!("{0}~~{0}", self.items[j]),
                kind: ParamKind::Uniqueness { item: j },
            });
        }
        params
    }

    /// Λ, Φ and the diagonal of Ψ for a parameter vector.
    pub fn matrices(&self, theta: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let (p, k) = (self.p(), self.k());
        let mut lam = DMatrix::zeros(p, k);
        let mut phi = DMatrix::identity(k, k);
        let mut psi = DVector::zeros(p);
        if self.identification == Identification::Marker {
            for (f, &m) in self.markers.iter().enumerate() {
                lam[(m, f)] = 1.0;
            }
        }
        for (param, &v) in self.params.iter().zip(theta.iter()) {
            match param.kind {
                ParamKind::Loading { item, factor } => lam[(item, factor)] = v,
                ParamKind::FactorVariance { factor } => phi[(factor, factor)] = v,
                ParamKind::FactorCovariance { a, b } => {
                    phi[(a, b)] = v;
                    phi[(b, a)] = v;
                }
                ParamKind::Uniqueness { item } => psi[item] = v,
            }
        }
        (lam, phi, psi)
    }

    pub fn implied(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (lam, phi, psi) = self.matrices(theta);
        let mut sigma = &lam * phi * lam.transpose();
        for j in 0..self.p() {
            sigma[(j, j)] += psi[j];
        }
        sigma
    }

    /// Start values: loadings 0.7 on the item's scale relative to its marker,
    /// factor variances and uniquenesses at half the observed variance.
    pub fn start_values(&self, s: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n_free(),
            self.params.iter().map(|param| match param.kind {
                ParamKind::Loading { item, factor } => match self.identification {
                    Identification::Marker => {
                        let m = self.markers[factor];
                        0.7 * (s[(item, item)] / s[(m, m)]).sqrt()
                    }
                    Identification::StdLv => 0.7 * s[(item, item)].sqrt(),
                },
                ParamKind::FactorVariance { factor } => {
                    0.5 * s[(self.markers[factor], self.markers[factor])]
                }
                ParamKind::FactorCovariance { .. } => 0.0,
                ParamKind::Uniqueness { item } => match self.k() {
                    0 => s[(item, item)],
                    _ => 0.5 * s[(item, item)],
                },
            }),
        )
    }

    /// Jacobian of `vech Σ(θ)` (column-major lower triangle) with respect to
    /// the free parameters.
    pub fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (lam, phi, _) = self.matrices(theta);
        let lp = &lam * &phi;
        let idx = crate::linalg::vech_indices(self.p());
        let mut d = DMatrix::zeros(idx.len(), self.n_free());
        for (c, param) in self.params.iter().enumerate() {
            for (r, &(a, b)) in idx.iter().enumerate() {
                d[(r, c)] = match param.kind {
                    ParamKind::Loading { item, factor } => {
                        let mut v = 0.0;
                        if a == item {
                            v += lp[(b, factor)];
                        }
                        if b == item {
                            v += lp[(a, factor)];
                        }
                        v
                    }
                    ParamKind::FactorVariance { factor } => lam[(a, factor)] * lam[(b, factor)],
                    ParamKind::FactorCovariance { a: f, b: g } => {
                        lam[(a, f)] * lam[(b, g)] + lam[(a, g)] * lam[(b, f)]
                    }
                    ParamKind::Uniqueness { item } => {
                        if a == item && b == item {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
            }
        }
        d
    }
}
