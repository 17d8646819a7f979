//! Reference data bundled with the crate: the item-item
//! correlation matrices before and after item reduction, the final loading
//! tables, and the reported item-total correlations.

use crate::corr::{CorrelationMatrix, ItemTotal, ItemTotalReport};

const NUMERICAL_PRE_EFA: &str = include_str!("../data/corr/numerical_pre_efa.csv");
const CATEGORICAL_PRE_EFA: &str = include_str!("../data/corr/categorical_pre_efa.csv");
const NUMERICAL_FINAL: &str = include_str!("../data/corr/numerical_final.csv");
const CATEGORICAL_FINAL: &str = include_str!("../data/corr/categorical_final.csv");

/// Cases behind each reference matrix.
pub const N_NUMERICAL_EFA: usize = 1199;
pub const N_CATEGORICAL_EFA: usize = 942;
pub const N_NUMERICAL_CFA: usize = 1198;
pub const N_CATEGORICAL_CFA: usize = 951;

fn load(text: &str, n: usize) -> CorrelationMatrix {
    CorrelationMatrix::from_csv(text.as_bytes())
        .expect("bundled correlation matrix is valid")
        .with_n(n)
}

/// 22×22 numerical matrix before item reduction (n = 1199).
pub fn numerical_pre_efa() -> CorrelationMatrix {
    load(NUMERICAL_PRE_EFA, N_NUMERICAL_EFA)
}

/// 20×20 categorical matrix before item reduction (n = 942).
pub fn categorical_pre_efa() -> CorrelationMatrix {
    load(CATEGORICAL_PRE_EFA, N_CATEGORICAL_EFA)
}

/// 8×8 matrix of the final numerical instrument. `n` is the CFA sample size.
pub fn numerical_final() -> CorrelationMatrix {
    load(NUMERICAL_FINAL, N_NUMERICAL_CFA)
}

/// 9×9 matrix of the final categorical instrument. `n` is the CFA sample size.
pub fn categorical_final() -> CorrelationMatrix {
    load(CATEGORICAL_FINAL, N_CATEGORICAL_CFA)
}

/// Promax pattern loadings of the final numerical instrument, as
/// `(factor 0 or 1, loading)` per item.
pub const NUMERICAL_LOADINGS: [(usize, f64); 8] = [
    (0, 0.63),
    (0, 0.66),
    (0, 0.85),
    (0, 0.83),
    (0, 0.78),
    (1, 0.88),
    (1, 0.85),
    (1, 0.87),
];

pub const CATEGORICAL_LOADINGS: [(usize, f64); 9] = [
    (0, 0.87),
    (0, 0.87),
    (0, 0.67),
    (0, 0.80),
    (0, 0.78),
    (0, 0.73),
    (1, 0.79),
    (1, 0.74),
    (1, 0.87),
];

/// Reported communalities of the final instruments.
pub const NUMERICAL_COMMUNALITIES: [f64; 8] = [0.47, 0.46, 0.70, 0.68, 0.55, 0.75, 0.74, 0.76];
pub const CATEGORICAL_COMMUNALITIES: [f64; 9] =
    [0.74, 0.68, 0.61, 0.58, 0.67, 0.63, 0.63, 0.58, 0.74];

/// Loadings of one factor from a reference table.
pub fn factor_loadings(table: &[(usize, f64)], factor: usize) -> Vec<f64> {
    table
        .iter()
        .filter(|(f, _)| *f == factor)
        .map(|(_, l)| *l)
        .collect()
}

const NUMERICAL_ITEM_TOTAL: [(f64, f64); 22] = [
    (0.62, 0.60),
    (0.71, 0.70),
    (0.39, 0.35),
    (0.68, 0.67),
    (0.34, 0.28),
    (0.56, 0.53),
    (0.70, 0.69),
    (0.68, 0.67),
    (0.67, 0.65),
    (0.63, 0.60),
    (0.72, 0.72),
    (0.75, 0.75),
    (0.67, 0.66),
    (0.70, 0.69),
    (0.58, 0.55),
    (0.68, 0.67),
    (0.69, 0.68),
    (0.71, 0.71),
    (0.70, 0.70),
    (0.68, 0.67),
    (0.65, 0.64),
    (0.76, 0.76),
];

const CATEGORICAL_ITEM_TOTAL: [(f64, f64); 20] = [
    (0.69, 0.69),
    (0.82, 0.81),
    (0.49, 0.47),
    (0.66, 0.66),
    (0.43, 0.38),
    (0.57, 0.55),
    (0.66, 0.66),
    (0.69, 0.69),
    (0.76, 0.74),
    (0.72, 0.70),
    (0.83, 0.82),
    (0.78, 0.76),
    (0.78, 0.77),
    (0.74, 0.72),
    (0.75, 0.75),
    (0.81, 0.80),
    (0.83, 0.82),
    (0.79, 0.77),
    (0.80, 0.78),
    (0.86, 0.85),
];

fn item_total(table: &[(f64, f64)]) -> ItemTotalReport {
    ItemTotalReport {
        items: table
            .iter()
            .enumerate()
            .map(|(i, &(raw_r, corrected_r))| ItemTotal {
                item: format!("X{i}"),
                raw_r,
                corrected_r,
            })
            .collect(),
    }
}

/// Reported raw and corrected item-total correlations before reduction,
/// computed on the raw numerical responses.
pub fn numerical_item_total() -> ItemTotalReport {
    item_total(&NUMERICAL_ITEM_TOTAL)
}

pub fn categorical_item_total() -> ItemTotalReport {
    item_total(&CATEGORICAL_ITEM_TOTAL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matrices_load() {
        assert_eq!(numerical_pre_efa().p(), 22);
        assert_eq!(categorical_pre_efa().p(), 20);
        assert_eq!(numerical_final().p(), 8);
        assert_eq!(categorical_final().p(), 9);
        assert_eq!(numerical_final().values[(7, 6)], 0.69);
    }
}
