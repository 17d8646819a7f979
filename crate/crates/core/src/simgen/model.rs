use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg;

/// Standardized common-factor population with ordinal cut points per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    pub item_ids: Vec<String>,
    #[serde(with = "crate::serde_matrix")]
    pub loadings: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub phi: DMatrix<f64>,
    pub uniquenesses: Vec<f64>,
    /// Four increasing cut points per item mapping a latent value to 1..5.
    pub thresholds: Vec<[f64; 4]>,
    pub seed: u64,
}

impl PopulationModel {
    /// Build a standardized model, setting `Ψ = 1 - diag(ΛΦΛᵀ)`.
    pub fn standardized(
        item_ids: Vec<String>,
        loadings: DMatrix<f64>,
        phi: DMatrix<f64>,
        thresholds: Vec<[f64; 4]>,
        seed: u64,
    ) -> Result<Self> {
        let common = &loadings * &phi * loadings.transpose();
        let uniquenesses = (0..loadings.nrows())
            .map(|j| 1.0 - common[(j, j)])
            .collect();
        let model = PopulationModel {
            item_ids,
            loadings,
            phi,
            uniquenesses,
            thresholds,
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (p, k) = self.loadings.shape();
        if self.item_ids.len() != p || self.uniquenesses.len() != p || self.thresholds.len() != p {
            return Err(Error::InvalidInput(
                "population model dimensions disagree".into(),
            ));
        }
        if self.phi.shape() != (k, k) {
            return Err(Error::InvalidInput("phi must be k x k".into()));
        }
        for f in 0..k {
            if (self.phi[(f, f)] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput("phi must have a unit diagonal".into()));
            }
        }
        if linalg::max_abs_asymmetry(&self.phi) > 1e-12 {
            return Err(Error::InvalidInput("phi must be symmetric".into()));
        }
        if linalg::sym_eigenvalues_desc(&self.phi)
            .last()
            .copied()
            .unwrap_or(1.0)
            < -1e-10
        {
            return Err(Error::NotPositiveDefinite);
        }
        let common = &self.loadings * &self.phi * self.loadings.transpose();
        for j in 0..p {
            if self.uniquenesses[j] < 0.0
                || (common[(j, j)] + self.uniquenesses[j] - 1.0).abs() > 1e-6
            {
                return Err(Error::InvalidInput(format!(
                    "item `{}` is not standardized (communality {:.4} + uniqueness {:.4})",
                    self.item_ids[j],
                    common[(j, j)],
                    self.uniquenesses[j]
                )));
            }
        }
        for t in &self.thresholds {
            check_thresholds(t)?;
        }
        Ok(())
    }

    /// Population correlation `ΛΦΛᵀ + Ψ`.
    pub fn implied_correlation(&self) -> DMatrix<f64> {
        let mut s = &self.loadings * &self.phi * self.loadings.transpose();
        for j in 0..self.p() {
            s[(j, j)] += self.uniquenesses[j];
        }
        s
    }

    /// Move every cut point down by `delta` (positive = higher ratings).
    pub fn shifted(&self, delta: f64) -> Self {
        let mut m = self.clone();
        for t in &mut m.thresholds {
            for c in t.iter_mut() {
                *c -= delta;
            }
        }
        m
    }

    /// Expected Likert value per item: `1 + Σ_t P(X > τ_t)` for standard
    /// normal `X`.
    pub fn expected_likert_means(&self) -> Vec<f64> {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        self.thresholds
            .iter()
            .map(|t| 1.0 + t.iter().map(|&c| normal.sf(c)).sum::<f64>())
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: PopulationModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }
}

fn check_thresholds(t: &[f64; 4]) -> Result<()> {
    if t.iter().any(|c| !c.is_finite()) || t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!(
            "thresholds {t:?} are not strictly increasing"
        )));
    }
    Ok(())
}

/// Draw `n` cases with the model's own seed.
pub fn generate_factor_data(model: &PopulationModel, n: usize) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    generate_factor_data_with(model, n, &mut rng)
}

/// Draw `n` cases: factor scores `z Φ^{1/2}` plus independent errors with
/// variances `Ψ`, rows drawn in order from `rng`.
pub fn generate_factor_data_with<R: Rng>(
    model: &PopulationModel,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    model.validate()?;
    let (p, k) = model.loadings.shape();
    let root = linalg::sym_sqrt(&model.phi, 1e-10)?;
    let sd: Vec<f64> = model
        .uniquenesses
        .iter()
        .map(|u| u.max(0.0).sqrt())
        .collect();
    let mut out = DMatrix::zeros(n, p);
    let mut z = DMatrix::zeros(1, k);
    for i in 0..n {
        for f in 0..k {
            z[(0, f)] = rng.sample::<f64, _>(StandardNormal);
        }
        let scores = &z * &root;
        let common = &scores * model.loadings.transpose();
        for j in 0..p {
            out[(i, j)] = common[(0, j)] + sd[j] * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(out)
}

/// Map each value to `1 + #{cut points below it}` per column.
pub fn discretize_likert(data: &DMatrix<f64>, thresholds: &[[f64; 4]]) -> Result<DMatrix<u8>> {
    if thresholds.len() != data.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} threshold sets for {} columns",
            thresholds.len(),
            data.ncols()
        )));
    }
    for t in thresholds {
        check_thresholds(t)?;
    }
    Ok(DMatrix::from_fn(data.nrows(), data.ncols(), |i, j| {
        1 + thresholds[j].iter().filter(|&&c| c < data[(i, j)]).count() as u8
    }))
}
