mod common;

use common::*;
use fus_core::cfa::{
    build_cfa, fit_ml, CfaOptions, Discrepancy, Identification, ModelSpec, SampleMoments,
};
use fus_core::corr::{chi_square_sf, item_total_correlations, CorrelationMatrix};
use fus_core::efa::extract_ml;
use fus_core::ingest::RatingMatrix;
use fus_core::linalg::sym_eigenvalues_desc;
use fus_core::optim::Objective;
use fus_core::reference;
use nalgebra::DMatrix;

fn to_dmatrix(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

fn ids(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("i{i}")).collect()
}

/// Population loadings for the random 6-item, 2-factor matrices.
fn random_loadings(seed: u64) -> Mat {
    let mut rng = OracleRng::new(seed);
    (0..6)
        .map(|j| {
            let main = 0.5 + 0.35 * rng.uniform();
            let cross = 0.2 * rng.uniform();
            if j < 3 {
                vec![main, cross]
            } else {
                vec![cross, main]
            }
        })
        .collect()
}

#[test]
fn ml_extraction_matches_em_oracle() {
    for seed in 1..=5u64 {
        let s = sample_correlation(&random_loadings(seed), 500, 100 + seed);
        let r = CorrelationMatrix::new(ids(6), to_dmatrix(&s), Some(500)).unwrap();
        let ml = extract_ml(&r, 2, 1000, 1e-12).unwrap();
        assert!(ml.converged && ml.heywood.is_empty(), "seed {seed}");
        let (em_lam, em_psi) = em_factor_analysis(&s, 2, 500_000, 1e-13);
        let ours: Mat = (0..6)
            .map(|j| vec![ml.loadings[(j, 0)], ml.loadings[(j, 1)]])
            .collect();
        let aligned = align_two_columns(&ours, &em_lam);
        let mut diff = 0.0f64;
        for j in 0..6 {
            diff = diff.max((ml.uniquenesses[j] - em_psi[j]).abs());
            for f in 0..2 {
                diff = diff.max((aligned[j][f] - ours[j][f]).abs());
            }
        }
        assert!(diff < 1e-3, "seed {seed}: max-abs difference {diff}");
    }
}

#[test]
fn eigenvalues_match_closed_forms() {
    let mut rng = OracleRng::new(7);
    for _ in 0..50 {
        let (a, b, c) = (rng.normal(), rng.normal(), rng.normal());
        let ours = sym_eigenvalues_desc(&DMatrix::from_row_slice(2, 2, &[a, b, b, c]));
        let exact = eigen_2x2(a, b, c);
        for i in 0..2 {
            assert!((ours[i] - exact[i]).abs() < 1e-10);
        }

        let v: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let m = [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]];
        let ours = sym_eigenvalues_desc(&DMatrix::from_fn(3, 3, |i, j| m[i][j]));
        let exact = eigen_3x3(m);
        for i in 0..3 {
            assert!((ours[i] - exact[i]).abs() < 1e-10, "{ours:?} vs {exact:?}");
        }
    }
}

#[test]
fn chi_square_tail_matches_incomplete_gamma() {
    for df in [1u64, 2, 3, 5, 8, 19, 20, 26, 27, 28, 190, 231] {
        for mult in [0.05, 0.3, 0.8, 1.0, 1.5, 3.0, 10.0] {
            let x = mult * df as f64;
            let ours = chi_square_sf(x, df).unwrap();
            let oracle = chi_square_sf_oracle(x, df as f64);
            assert!(
                (ours - oracle).abs() < 1e-10 + 1e-8 * oracle,
                "df {df}, x {x}: {ours} vs {oracle}"
            );
        }
    }
}

#[test]
fn cfa_gradient_matches_finite_differences_at_optimum() {
    for (r, split) in [
        (reference::numerical_final(), 5),
        (reference::categorical_final(), 6),
    ] {
        let items = r.item_ids.clone();
        let spec = ModelSpec {
            loadings: items
                .iter()
                .enumerate()
                .map(|(j, id)| (id.clone(), if j < split { "A" } else { "B" }.to_string()))
                .collect(),
            markers: Default::default(),
        };
        let model = build_cfa(&items, &spec, Identification::Marker).unwrap();
        let sample = SampleMoments::from_correlation(&r, 1000);
        let fit = fit_ml(&model, &sample, &CfaOptions::default()).unwrap();
        assert!(fit.gradient_max < 1e-6, "gradient max {}", fit.gradient_max);

        let obj = Discrepancy::new(&model, &sample.cov).unwrap();
        // away from the optimum too, where the gradient is not ~0
        for shift in [0.0, 0.05] {
            let theta = fit.theta.map(|t| t + shift);
            let g = obj.gradient(&theta).unwrap();
            let h = 1e-6;
            for i in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (obj.value(&up).unwrap() - obj.value(&dn).unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-4 * g[i].abs().max(1e-2),
                    "param {i}: analytic {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }
}

#[test]
fn item_total_matches_direct_summation() {
    let mut rng = OracleRng::new(3);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let z = rng.normal();
            (0..5)
                .map(|j| {
                    (3.0 + z * (0.4 + 0.1 * j as f64) + rng.normal())
                        .round()
                        .clamp(1.0, 5.0)
                })
                .collect()
        })
        .collect();
    let data =
        RatingMatrix::from_values(DMatrix::from_fn(300, 5, |i, j| rows[i][j]), ids(5)).unwrap();
    let ours = item_total_correlations(&data).unwrap();
    let oracle = corrected_item_total(&rows);
    for (it, o) in ours.items.iter().zip(oracle) {
        assert!((it.corrected_r - o).abs() < 1e-12);
    }
}

#[test]
fn em_oracle_self_check() {
    // exact two-factor population: EM must return it
    let lam = vec![
        vec![0.8, 0.0],
        vec![0.7, 0.0],
        vec![0.6, 0.0],
        vec![0.0, 0.75],
        vec![0.0, 0.65],
        vec![0.0, 0.7],
    ];
    let mut s = matmul(&lam, &transpose(&lam));
    for j in 0..6 {
        s[j][j] = 1.0;
    }
    let (em, _) = em_factor_analysis(&s, 2, 500_000, 1e-14);
    let implied = matmul(&em, &transpose(&em));
    for a in 0..6 {
        for b in 0..6 {
            if a != b {
                assert!((implied[a][b] - s[a][b]).abs() < 1e-6);
            }
        }
    }
}
