//! Box-constrained quasi-Newton minimization (projected BFGS with a
//! backtracking Armijo line search).
//!
//! Both the exploratory (uniqueness profile) and confirmatory (full parameter
//! vector) maximum-likelihood fits run through [`minimize`]. The objective may
//! return `None` for infeasible points (for example a model-implied covariance
//! that is not positive definite); the line search then halves the step.

use nalgebra::{DMatrix, DVector};

/// Objective plus gradient at a point, `None` when the point is infeasible.
pub trait Objective {
    fn value(&self, x: &DVector<f64>) -> Option<f64>;
    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>>;
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iter: usize,
    /// Convergence when the projected gradient max-norm drops below this.
    pub gtol: f64,
    /// Convergence when the relative objective change drops below this.
    pub ftol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_iter: 1000,
            gtol: 1e-9,
            ftol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Indices of coordinates sitting on a bound at the solution.
    pub at_bound: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    fn project(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Coordinates pinned at a bound with the gradient pushing outward.
    fn active(&self, x: &DVector<f64>, g: &DVector<f64>) -> Vec<bool> {
        (0..x.len())
            .map(|i| {
                let span = 1e-12 * (1.0 + x[i].abs());
                (x[i] <= self.lower[i] + span && g[i] > 0.0)
                    || (x[i] >= self.upper[i] - span && g[i] < 0.0)
            })
            .collect()
    }
}

fn projected_grad_norm(active: &[bool], g: &DVector<f64>) -> f64 {
    g.iter()
        .zip(active)
        .filter(|(_, &a)| !a)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
}

/// Minimize `f` inside `bounds` starting from `x0`.
///
/// Returns `None` only when the starting point itself is infeasible.
pub fn minimize<F: Objective>(
    f: &F,
    x0: DVector<f64>,
    bounds: &Bounds,
    opts: Options,
) -> Option<Minimum> {
    let n = x0.len();
    let mut x = x0;
    bounds.project(&mut x);
    let mut fx = f.value(&x)?;
    let mut g = f.gradient(&x)?;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut iterations = 0;
    let mut prev_active: Vec<bool> = vec![false; n];

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let active = bounds.active(&x, &g);
        if projected_grad_norm(&active, &g) < opts.gtol {
            converged = true;
            iterations = iter;
            break;
        }
        if active != prev_active {
            h = DMatrix::identity(n, n);
            prev_active = active.clone();
        }

        let mut g_free = g.clone();
        for i in 0..n {
            if active[i] {
                g_free[i] = 0.0;
            }
        }
        let mut dir = -(&h * &g_free);
        for i in 0..n {
            if active[i] {
                dir[i] = 0.0;
            }
        }
        if dir.dot(&g_free) >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g_free.clone();
        }
        // keep the very first step modest
        let mut step = if iter == 0 {
            (1.0 / dir.amax().max(1e-300)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..80 {
            let mut trial = &x + &dir * step;
            bounds.project(&mut trial);
            if let Some(ft) = f.value(&trial) {
                let decrease = g.dot(&(&trial - &x));
                if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no descent possible along any tried step; treat as stationary
            converged = projected_grad_norm(&active, &g) < opts.gtol.sqrt();
            break;
        };
        let Some(g_new) = f.gradient(&x_new) else {
            break;
        };

        let s = &x_new - &x;
        let mut y = &g_new - &g;
        for i in 0..n {
            if active[i] {
                y[i] = 0.0;
            }
        }
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hyᵀ + hy sᵀ) + (rho² yᵀHy + rho) s sᵀ
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        } else if sy <= 0.0 {
            h = DMatrix::identity(n, n);
        }

        let rel = (fx - f_new).abs() / (1.0 + fx.abs());
        x = x_new;
        fx = f_new;
        g = g_new;
        if rel < opts.ftol && s.amax() < 1e-14 * (1.0 + x.amax()) {
            let active = bounds.active(&x, &g);
            converged = projected_grad_norm(&active, &g) < opts.gtol.sqrt();
            break;
        }
    }

    let final_active = bounds.active(&x, &g);
    if !converged && projected_grad_norm(&final_active, &g) < opts.gtol {
        converged = true;
    }
    let at_bound = (0..n)
        .filter(|&i| {
            let span = 1e-10 * (1.0 + x[i].abs());
            x[i] <= bounds.lower[i] + span || x[i] >= bounds.upper[i] - span
        })
        .collect();
    Some(Minimum {
        x,
        value: fx,
        gradient: g,
        iterations,
        converged,
        at_bound,
    })
}
