//! Brute-force reference implementations on plain `Vec`s: cyclic Jacobi
//! eigen-solver, naive loops for every estimator, and direct quadrature for
//! the error norms. Shares no code with the library.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

/// Small deterministic generator so toy instances do not depend on `rand`.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    pub fn sym(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Mat {
        (0..rows).map(|_| (0..cols).map(|_| self.sym()).collect()).collect()
    }
}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

/// Eigenvalues descending and eigenvectors as columns, each column with its
/// largest-magnitude entry positive.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let m = a.len();
    let mut a = a.clone();
    let mut v = zeros(m, m);
    for i in 0..m {
        v[i][i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in 0..m {
                if p != q {
                    off += a[p][q] * a[p][q];
                }
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i][i].max(0.0)).collect();
    let mut vecs = zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let mut lead = 0;
        for r in 0..m {
            if v[r][src].abs() > v[lead][src].abs() {
                lead = r;
            }
        }
        let sign = if v[lead][src] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..m {
            vecs[r][dst] = sign * v[r][src];
        }
    }
    (vals, vecs)
}

/// `(C_n, D_n)` with `D_n[j][l] = (1/(n−1)) Σ x[i][j] x[i+1][l]`.
pub fn moments(x: &Mat) -> (Mat, Mat) {
    let n = x.len();
    let m = x[0].len();
    let mut c = zeros(m, m);
    let mut d = zeros(m, m);
    for j in 0..m {
        for l in 0..m {
            let mut s = 0.0;
            for row in x {
                s += row[j] * row[l];
            }
            c[j][l] = s / n as f64;
            let mut t = 0.0;
            for i in 0..n - 1 {
                t += x[i][j] * x[i + 1][l];
            }
            d[j][l] = t / (n - 1) as f64;
        }
    }
    (c, d)
}

pub fn rotate(x: &Mat, vecs: &Mat) -> Mat {
    let m = vecs.len();
    x.iter()
        .map(|row| (0..m).map(|j| (0..m).map(|r| row[r] * vecs[r][j]).sum()).collect())
        .collect()
}

pub fn scalar_ratio(col: &[f64]) -> f64 {
    let n = col.len();
    let mut num = 0.0;
    for i in 0..n - 1 {
        num += col[i] * col[i + 1];
    }
    let den: f64 = col.iter().map(|v| v * v).sum();
    (n as f64 / (n - 1) as f64) * num / den
}

fn column(x: &Mat, j: usize) -> Vec<f64> {
    x.iter().map(|r| r[j]).collect()
}

pub fn diag_known(x: &Mat, k: usize) -> Vec<f64> {
    (0..k).map(|j| scalar_ratio(&column(x, j))).collect()
}

pub fn diag_unknown(x: &Mat, k: usize) -> (Vec<f64>, Vec<f64>, Mat) {
    let (c, _) = moments(x);
    let (vals, vecs) = jacobi_eigen(&c);
    let rotated = rotate(x, &vecs);
    (diag_known(&rotated, k), vals, vecs)
}

/// `ρ[l][j] = (1/(n−1)) Σ x̃[i][j] x̃[i+1][l] / max(C_{n,j}, u)`.
pub fn projection(x: &Mat, k: usize, u: f64) -> Mat {
    let (c, _) = moments(x);
    let (vals, vecs) = jacobi_eigen(&c);
    let xt = rotate(x, &vecs);
    let n = x.len();
    let mut rho = zeros(k, k);
    for l in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for i in 0..n - 1 {
                s += xt[i][j] * xt[i + 1][l];
            }
            rho[l][j] = s / (n - 1) as f64 / vals[j].max(u);
        }
    }
    rho
}

pub fn bosq(x: &Mat, k: usize) -> Mat {
    projection(x, k, 0.0)
}

/// Trapezoid grid on `[a, b]` with the last step possibly shorter.
pub fn grid(a: f64, b: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![a];
    let mut k = 1;
    loop {
        let next = a + k as f64 * step;
        if next >= b - 1e-9 * step {
            break;
        }
        t.push(next);
        k += 1;
    }
    t.push(b);
    let p = t.len();
    let mut w = vec![0.0; p];
    for i in 0..p - 1 {
        let h = t[i + 1] - t[i];
        w[i] += h / 2.0;
        w[i + 1] += h / 2.0;
    }
    (t, w)
}

/// `φ_j(t)`, 1-based `j`.
pub fn sine(j: usize, t: f64, a: f64, b: f64) -> f64 {
    (2.0 / (b - a)).sqrt() * (std::f64::consts::PI * j as f64 * (t - a) / (b - a)).sin()
}

pub fn l2_distance(f: &[f64], g: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in 0..w.len() {
        s += w[p] * (f[p] - g[p]) * (f[p] - g[p]);
    }
    s.sqrt()
}

pub fn curve_of(coeffs: &[f64], t: &[f64], a: f64, b: f64) -> Vec<f64> {
    t.iter()
        .map(|&tp| coeffs.iter().enumerate().map(|(j, c)| c * sine(j + 1, tp, a, b)).sum())
        .collect()
}

/// `√∫(Σ_{j≤k} ρ_j x_j φ_j − pred)²`.
pub fn diag_truncated_error(rho: &[f64], x: &[f64], k: usize, pred: &[f64], t: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    let truth: Vec<f64> = t
        .iter()
        .map(|&tp| (0..k).map(|j| rho[j] * x[j] * sine(j + 1, tp, a, b)).sum())
        .collect();
    l2_distance(&truth, pred, w)
}

/// `√∫(∫ Σ_{j,k≤K} ρ_{jk} φ_j(t) φ_k(s) ds − pred(t))² dt` by double quadrature.
pub fn kernel_truncated_error_literal(rho: &Mat, kk: usize, pred: &[f64], t: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    let truth: Vec<f64> = t
        .iter()
        .map(|&tp| {
            let mut outer = 0.0;
            for (q, &sq) in t.iter().enumerate() {
                let mut kern = 0.0;
                for j in 0..kk {
                    for k in 0..kk {
                        kern += rho[j][k] * sine(j + 1, tp, a, b) * sine(k + 1, sq, a, b);
                    }
                }
                outer += w[q] * kern;
            }
            outer
        })
        .collect();
    l2_distance(&truth, pred, w)
}

/// `√∫(ρ(x)(t) − pred(t))²` with `ρ(x)(t) = ∫ ρ(t,s) x(s) ds`, the kernel and
/// the input both evaluated pointwise.
pub fn full_error(rho: &Mat, x: &[f64], pred: &[f64], t: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    let m = rho.len();
    let xs = curve_of(x, t, a, b);
    let truth: Vec<f64> = t
        .iter()
        .map(|&tp| {
            let mut outer = 0.0;
            for (q, &sq) in t.iter().enumerate() {
                let mut kern = 0.0;
                for j in 0..m {
                    for k in 0..m {
                        kern += rho[j][k] * sine(j + 1, tp, a, b) * sine(k + 1, sq, a, b);
                    }
                }
                outer += w[q] * kern * xs[q];
            }
            outer
        })
        .collect();
    l2_distance(&truth, pred, w)
}

pub fn exceedances(errors: &[f64], beta: f64, rate: f64, n: usize) -> usize {
    let xi = (n as f64).ln().powf(beta) / (n as f64).powf(rate);
    let mut count = 0;
    for e in errors {
        if *e > xi {
            count += 1;
        }
    }
    count
}

/// Four addends of the upper bound and the operator-norm error of `ρ̃`.
pub fn ub_terms(x: &Mat, k: usize, c_true: &[f64], rho_true: &[f64]) -> ([f64; 4], f64) {
    let m = x[0].len();
    let (rho_t, _, vecs) = diag_unknown(x, k);
    let (_, d) = moments(x);
    let mut t1 = 0.0f64;
    let mut t2 = 0.0f64;
    let mut t3 = 0.0;
    let mut err = 0.0f64;
    for j in 0..k {
        let mut dnj = 0.0;
        for r in 0..m {
            for s in 0..m {
                dnj += vecs[r][j] * d[r][s] * vecs[s][j];
            }
        }
        t1 = t1.max((rho_t[j] - dnj / c_true[j]).abs());
        t2 = t2.max((dnj / c_true[j] - rho_true[j]).abs());
        let sign = if vecs[j][j] < 0.0 { -1.0 } else { 1.0 };
        let mut dist = 0.0;
        for r in 0..m {
            let reference = if r == j { sign } else { 0.0 };
            dist += (vecs[r][j] - reference).powi(2);
        }
        t3 += 2.0 * dnj.abs() / c_true[j] * dist.sqrt();
        err = err.max((rho_t[j] - rho_true[j]).abs());
    }
    let tail = rho_true[k..].iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    ([t1, t2, t3, tail], err + tail)
}

pub fn hs_offdiag(x: &Mat, k: usize) -> f64 {
    let m = x[0].len();
    let (c, d) = moments(x);
    let (vals, vecs) = jacobi_eigen(&c);
    let mut sum = 0.0;
    for j in 0..k {
        for l in 0..k {
            if j == l {
                continue;
            }
            let mut djl = 0.0;
            for r in 0..m {
                for s in 0..m {
                    djl += vecs[r][j] * d[r][s] * vecs[s][l];
                }
            }
            sum += (djl / vals[j]).powi(2);
        }
    }
    sum
}

/// Orthonormal Haar analysis matrix for length `2^levels`: the first `2^j0`
/// rows are scaling functions, the rest are wavelets at levels `j0..levels`.
pub fn haar_matrix(levels: usize, j0: usize) -> Mat {
    let len = 1usize << levels;
    let mut rows = Vec::new();
    let width = len >> j0;
    for k in 0..(1 << j0) {
        let mut r = vec![0.0; len];
        for p in k * width..(k + 1) * width {
            r[p] = 1.0 / (width as f64).sqrt();
        }
        rows.push(r);
    }
    for j in j0..levels {
        let width = len >> j;
        for k in 0..(1 << j) {
            let mut r = vec![0.0; len];
            for p in 0..width {
                r[k * width + p] = if p < width / 2 { 1.0 } else { -1.0 } / (width as f64).sqrt();
            }
            rows.push(r);
        }
    }
    rows
}

/// Direct transcription of the wavelet-smoothed predictor on a dyadic grid:
/// smooth, center, FPCA under the weights, then
/// `coef_j = (1/(n−1)) Σ_k Σ_i C̃_k^{−1} ⟨φ̃_k, x⟩ Ỹ_{i,k} Ỹ_{i+1,j}`.
pub fn wavelet_predict(curves: &Mat, w: &[f64], levels: usize, j0: usize, lambda: f64, k_n: usize, query: &[f64]) -> Vec<f64> {
    let n = curves.len();
    let p = w.len();
    let h = haar_matrix(levels, j0);
    let scaling = 1 << j0;
    let smoothed: Mat = curves
        .iter()
        .map(|x| {
            let mut c: Vec<f64> = h.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
            for v in c.iter_mut().skip(scaling) {
                *v /= 1.0 + lambda;
            }
            (0..p).map(|q| (0..p).map(|r| h[r][q] * c[r]).sum()).collect()
        })
        .collect();
    let mean: Vec<f64> = (0..p).map(|q| smoothed.iter().map(|r| r[q]).sum::<f64>() / n as f64).collect();
    let y: Mat = smoothed.iter().map(|r| r.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
    let mut s = zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let mut acc = 0.0;
            for row in &y {
                acc += w[a].sqrt() * row[a] * row[b] * w[b].sqrt();
            }
            s[a][b] = acc / n as f64;
        }
    }
    let (vals, vecs) = jacobi_eigen(&s);
    let phi: Mat = (0..k_n).map(|k| (0..p).map(|q| vecs[q][k] / w[q].sqrt()).collect()).collect();
    let ip = |f: &[f64], g: &[f64]| -> f64 { (0..p).map(|q| w[q] * f[q] * g[q]).sum() };
    let mut out = vec![0.0; p];
    for j in 0..k_n {
        let mut coef = 0.0;
        for k in 0..k_n {
            for i in 0..n - 1 {
                coef += ip(&phi[k], query) * ip(&y[i], &phi[k]) * ip(&y[i + 1], &phi[j]) / vals[k];
            }
        }
        coef /= (n - 1) as f64;
        for q in 0..p {
            out[q] += coef * phi[j][q];
        }
    }
    out
}
