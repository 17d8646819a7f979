//! Independent oracles shared by the integration tests. Everything here uses
//! plain `Vec` arithmetic so none of it leans on the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, q) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, q);
    for i in 0..n {
        for k in 0..m {
            for j in 0..q {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        assert!(d.abs() > 1e-14, "singular matrix in oracle");
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Rubin-Thayer EM for the ML common-factor model on a correlation matrix.
/// Returns loadings (p x k) and uniquenesses.
pub fn em_factor_analysis(s: &Mat, k: usize, max_iter: usize, tol: f64) -> (Mat, Vec<f64>) {
    let p = s.len();
    let mut lam: Mat = (0..p)
        .map(|j| {
            (0..k)
                .map(|f| if (j + f) % 2 == 0 { 0.6 } else { 0.3 })
                .collect()
        })
        .collect();
    let mut psi = vec![0.5; p];
    for _ in 0..max_iter {
        let mut sigma = matmul(&lam, &transpose(&lam));
        for j in 0..p {
            sigma[j][j] += psi[j];
        }
        let beta = matmul(&transpose(&lam), &inverse(&sigma)); // k x p
        let bl = matmul(&beta, &lam);
        let bsb = matmul(&matmul(&beta, s), &transpose(&beta));
        let mut ezz = zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                ezz[a][b] = (if a == b { 1.0 } else { 0.0 }) - bl[a][b] + bsb[a][b];
            }
        }
        let new_lam = matmul(&matmul(s, &transpose(&beta)), &inverse(&ezz));
        let lbs = matmul(&matmul(&new_lam, &beta), s);
        let new_psi: Vec<f64> = (0..p).map(|j| s[j][j] - lbs[j][j]).collect();
        let mut change = 0.0f64;
        for j in 0..p {
            change = change.max((new_psi[j] - psi[j]).abs());
            for f in 0..k {
                change = change.max((new_lam[j][f] - lam[j][f]).abs());
            }
        }
        lam = new_lam;
        psi = new_psi;
        if change < tol {
            break;
        }
    }
    (lam, psi)
}

/// Best orthogonal 2x2 transform (rotation or reflection) taking `b` onto
/// `a`, in closed form; returns `b · T`.
pub fn align_two_columns(a: &Mat, b: &Mat) -> Mat {
    let m = matmul(&transpose(b), a);
    let rot = (m[1][0] - m[0][1]).atan2(m[0][0] + m[1][1]);
    let refl = (m[1][0] + m[0][1]).atan2(m[0][0] - m[1][1]);
    let t_rot = vec![vec![rot.cos(), -rot.sin()], vec![rot.sin(), rot.cos()]];
    let t_ref = vec![vec![refl.cos(), refl.sin()], vec![refl.sin(), -refl.cos()]];
    let score = |t: &Mat| {
        let bt = matmul(b, t);
        bt.iter()
            .zip(a)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>())
            .sum::<f64>()
    };
    if score(&t_rot) <= score(&t_ref) {
        matmul(b, &t_rot)
    } else {
        matmul(b, &t_ref)
    }
}

/// Columns of `b` permuted and reflected to best match `a` (least squares
/// over all signed permutations). Suited to oblique solutions, where only
/// these transforms leave the pattern meaningful.
pub fn align_signed_permutation(a: &Mat, b: &Mat) -> Mat {
    let k = a[0].len();
    let mut best: Option<(f64, Mat)> = None;
    for perm in permutations(k) {
        for signs in 0..(1u32 << k) {
            let cand: Mat = b
                .iter()
                .map(|row| {
                    (0..k)
                        .map(|f| {
                            let s = if signs >> f & 1 == 1 { -1.0 } else { 1.0 };
                            s * row[perm[f]]
                        })
                        .collect()
                })
                .collect();
            let loss: f64 = cand
                .iter()
                .zip(a)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>())
                .sum();
            if best.as_ref().map_or(true, |(l, _)| loss < *l) {
                best = Some((loss, cand));
            }
        }
    }
    best.expect("at least one column").1
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

/// Eigenvalues of a symmetric 2x2 matrix, descending.
pub fn eigen_2x2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
    [mid + rad, mid - rad]
}

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric method,
/// descending.
pub fn eigen_3x3(m: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|x, y| y.total_cmp(x));
        return d;
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

/// ln Γ(x) by the Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x): series below a + 1,
/// Lentz continued fraction above.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let front = (-x + a * x.ln() - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let (mut ap, mut del) = (a, 1.0 / a);
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        1.0 - sum * front
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        front * h
    }
}

pub fn chi_square_sf_oracle(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

/// Corrected item-total correlations by direct summation.
pub fn corrected_item_total(rows: &[Vec<f64>]) -> Vec<f64> {
    let p = rows[0].len();
    let n = rows.len() as f64;
    (0..p)
        .map(|j| {
            let x: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() - r[j]).collect();
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            sxy / (sxx * syy).sqrt()
        })
        .collect()
}

/// Box-Muller standard normal pairs from a seeded xorshift generator, kept
/// apart from the library's generator.
pub struct OracleRng(u64);

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        OracleRng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
    }
}

/// Sample correlation matrix of data drawn from a population with loadings
/// `lam` (orthogonal factors).
pub fn sample_correlation(lam: &Mat, n: usize, seed: u64) -> Mat {
    let mut rng = OracleRng::new(seed);
    let (p, k) = (lam.len(), lam[0].len());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
            (0..p)
                .map(|j| {
                    let common: f64 = (0..k).map(|f| lam[j][f] * z[f]).sum();
                    let h2: f64 = lam[j].iter().map(|l| l * l).sum();
                    common + (1.0 - h2).sqrt() * rng.normal()
                })
                .collect()
        })
        .collect();
    correlation(&rows)
}

pub fn correlation(rows: &[Vec<f64>]) -> Mat {
    let p = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut c = zeros(p, p);
    for r in rows {
        for a in 0..p {
            for b in 0..p {
                c[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    let sd: Vec<f64> = (0..p).map(|j| c[j][j].sqrt()).collect();
    for a in 0..p {
        for b in 0..p {
            c[a][b] /= sd[a] * sd[b];
        }
    }
    c
}

/// One PASS/FAIL line per acceptance check.
pub fn report(id: &str, pass: bool, detail: &str) -> bool {
    println!(
        "{} criterion {id}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
