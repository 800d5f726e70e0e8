//! Reference implementations written directly from the index formulas.
//! They share nothing with the library beyond element accessors.

#![allow(dead_code, clippy::needless_range_loop)]

use tensoraudit::{FactorMatrix, Tensor3};

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &FactorMatrix) -> Dense {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
        .collect()
}

/// `A A^T` of a factor, as a dense row-major matrix.
fn outer_gram(a: &FactorMatrix) -> Dense {
    let n = a.rows();
    let mut p = vec![vec![0.0; n]; n];
    for (r, row) in p.iter_mut().enumerate() {
        for (s, v) in row.iter_mut().enumerate() {
            *v = (0..a.cols()).map(|c| a.get(r, c) * a.get(s, c)).sum();
        }
    }
    p
}

/// `F_{ii'} = sum_{j j' k k'} X_ijk X_i'j'k' (VV^T)_jj' (WW^T)_kk'`.
pub fn f_quadruple(x: &Tensor3, v: &FactorMatrix, w: &FactorMatrix) -> Dense {
    let [n1, n2, n3] = x.dims();
    let (pv, pw) = (outer_gram(v), outer_gram(w));
    let mut f = vec![vec![0.0; n1]; n1];
    for i in 0..n1 {
        for ip in 0..n1 {
            let mut s = 0.0;
            for j in 0..n2 {
                for jp in 0..n2 {
                    for k in 0..n3 {
                        for kp in 0..n3 {
                            s += x.get(i, j, k) * x.get(ip, jp, kp) * pv[j][jp] * pw[k][kp];
                        }
                    }
                }
            }
            f[i][ip] = s;
        }
    }
    f
}

/// `G_{jj'} = sum_{i i' k k'} X_ijk X_i'j'k' (UU^T)_ii' (WW^T)_kk'`.
pub fn g_quadruple(x: &Tensor3, u: &FactorMatrix, w: &FactorMatrix) -> Dense {
    let [n1, n2, n3] = x.dims();
    let (pu, pw) = (outer_gram(u), outer_gram(w));
    let mut g = vec![vec![0.0; n2]; n2];
    for j in 0..n2 {
        for jp in 0..n2 {
            let mut s = 0.0;
            for i in 0..n1 {
                for ip in 0..n1 {
                    for k in 0..n3 {
                        for kp in 0..n3 {
                            s += x.get(i, j, k) * x.get(ip, jp, kp) * pu[i][ip] * pw[k][kp];
                        }
                    }
                }
            }
            g[j][jp] = s;
        }
    }
    g
}

/// `H_{kk'} = sum_{i i' j j'} X_ijk X_i'j'k' (UU^T)_ii' (VV^T)_jj'`.
pub fn h_quadruple(x: &Tensor3, u: &FactorMatrix, v: &FactorMatrix) -> Dense {
    let [n1, n2, n3] = x.dims();
    let (pu, pv) = (outer_gram(u), outer_gram(v));
    let mut h = vec![vec![0.0; n3]; n3];
    for k in 0..n3 {
        for kp in 0..n3 {
            let mut s = 0.0;
            for i in 0..n1 {
                for ip in 0..n1 {
                    for j in 0..n2 {
                        for jp in 0..n2 {
                            s += x.get(i, j, k) * x.get(ip, jp, kp) * pu[i][ip] * pv[j][jp];
                        }
                    }
                }
            }
            h[k][kp] = s;
        }
    }
    h
}

/// `H~_{kk'} = sum_ij X_ijk X_ijk'`.
pub fn t1_gram(x: &Tensor3) -> Dense {
    let [n1, n2, n3] = x.dims();
    let mut h = vec![vec![0.0; n3]; n3];
    for k in 0..n3 {
        for kp in 0..n3 {
            let mut s = 0.0;
            for j in 0..n2 {
                for i in 0..n1 {
                    s += x.get(i, j, k) * x.get(i, j, kp);
                }
            }
            h[k][kp] = s;
        }
    }
    h
}

/// `X_ijk = sum_pqr U_ip V_jq W_kr S_pqr`.
pub fn tucker_loops(u: &FactorMatrix, v: &FactorMatrix, w: &FactorMatrix, s: &Tensor3) -> Tensor3 {
    let [m1, m2, m3] = s.dims();
    Tensor3::from_fn(u.rows(), v.rows(), w.rows(), |i, j, k| {
        let mut acc = 0.0;
        for r in 0..m3 {
            for q in 0..m2 {
                for p in 0..m1 {
                    acc += u.get(i, p) * v.get(j, q) * w.get(k, r) * s.get(p, q, r);
                }
            }
        }
        acc
    })
}

/// `X_ijk = sum_r U_ir V_jr W_kr`.
pub fn cp_loops(u: &FactorMatrix, v: &FactorMatrix, w: &FactorMatrix) -> Tensor3 {
    Tensor3::from_fn(u.rows(), v.rows(), w.rows(), |i, j, k| {
        (0..u.cols()).map(|r| u.get(i, r) * v.get(j, r) * w.get(k, r)).sum()
    })
}

/// `S = X x1 U^T x2 V^T x3 W^T` by direct summation.
pub fn core_loops(x: &Tensor3, u: &FactorMatrix, v: &FactorMatrix, w: &FactorMatrix) -> Tensor3 {
    let [n1, n2, n3] = x.dims();
    Tensor3::from_fn(u.cols(), v.cols(), w.cols(), |p, q, r| {
        let mut acc = 0.0;
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    acc += x.get(i, j, k) * u.get(i, p) * v.get(j, q) * w.get(k, r);
                }
            }
        }
        acc
    })
}

/// Classical Jacobi with largest off-diagonal pivot. Returns eigenvalues in
/// descending order and the matching unit eigenvectors as columns
/// (`vecs[row][col]`).
pub fn jacobi_eig(a: &Dense) -> (Vec<f64>, Dense) {
    let n = a.len();
    let mut m = a.clone();
    let mut q: Dense = (0..n)
        .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 * n * n {
        let (mut p, mut r, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() > big {
                    big = m[i][j].abs();
                    p = i;
                    r = j;
                }
            }
        }
        let scale: f64 = (0..n).map(|i| m[i][i].abs()).fold(0.0, f64::max).max(1e-300);
        if big <= 1e-15 * scale {
            break;
        }
        let theta = 0.5 * (2.0 * m[p][r]).atan2(m[r][r] - m[p][p]);
        let (s, c) = theta.sin_cos();
        for k in 0..n {
            let (mkp, mkr) = (m[k][p], m[k][r]);
            m[k][p] = c * mkp - s * mkr;
            m[k][r] = s * mkp + c * mkr;
        }
        for k in 0..n {
            let (mpk, mrk) = (m[p][k], m[r][k]);
            m[p][k] = c * mpk - s * mrk;
            m[r][k] = s * mpk + c * mrk;
        }
        for row in q.iter_mut() {
            let (qp, qr) = (row[p], row[r]);
            row[p] = c * qp - s * qr;
            row[r] = s * qp + c * qr;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vecs = (0..n)
        .map(|r| order.iter().map(|&c| q[r][c]).collect())
        .collect();
    (values, vecs)
}

pub fn max_abs_diff(a: &Dense, b: &FactorMatrix) -> f64 {
    let mut d: f64 = 0.0;
    for (r, row) in a.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            d = d.max((v - b.get(r, c)).abs());
        }
    }
    d
}

pub fn tensor_max_diff(a: &Tensor3, b: &Tensor3) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Random symmetric matrix with entries in [-1, 1).
pub fn random_symmetric(n: usize, rng: &mut tensoraudit::rng::SplitMix64) -> Dense {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = 2.0 * rng.next_f64() - 1.0;
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

pub fn dense_to_factor(a: &Dense) -> FactorMatrix {
    let rows: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
    FactorMatrix::from_rows(&rows)
}
