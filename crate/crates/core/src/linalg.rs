//! Symmetric eigendecomposition, Khatri–Rao products and the normal-equation
//! solver used by ALS.
//!
//! Eigenpairs come back sorted by decreasing eigenvalue with every vector
//! sign-canonicalized, so two runs that reach the same subspace report the
//! same columns. Matrices up to [`JACOBI_MAX_DIM`] use cyclic Jacobi; larger
//! ones go through Householder tridiagonalization and implicit-shift QL.

use crate::error::{Error, Result};
use crate::tensor::FactorMatrix;

/// Largest dimension handled by the Jacobi path.
pub const JACOBI_MAX_DIM: usize = 64;

/// Relative eigenvalue gap below which neighbouring eigenpairs are treated as
/// one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-8;
const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_QL_ITERS: usize = 60;

/// Eigenvalues in non-increasing order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: FactorMatrix,
}

impl EigenPairs {
    /// Keep the leading `k` pairs.
    pub fn truncate(mut self, k: usize) -> Self {
        self.values.truncate(k);
        self.vectors = self.vectors.leading_cols(k);
        self
    }
}

/// Full spectrum of a symmetric matrix.
pub fn sym_eig_all(a: &FactorMatrix) -> Result<EigenPairs> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::arg(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if n == 0 {
        return Err(Error::arg("eigendecomposition of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::data("non-finite entry in matrix passed to eigensolver"));
    }
    let scale = a.max_abs();
    let mut sym = vec![0.0; n * n];
    let mut asym: f64 = 0.0;
    for c in 0..n {
        for r in 0..n {
            let (x, y) = (a.get(r, c), a.get(c, r));
            asym = asym.max((x - y).abs());
            sym[r * n + c] = 0.5 * (x + y);
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::arg(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e}, max entry {scale:.3e})"
        )));
    }

    let (values, vecs) = if n <= JACOBI_MAX_DIM {
        jacobi(sym, n)?
    } else {
        tridiagonal_ql(sym, n)?
    };
    Ok(finalize(values, vecs, n))
}

/// Leading `k` eigenpairs of a symmetric matrix.
pub fn sym_eig_topk(a: &FactorMatrix, k: usize) -> Result<EigenPairs> {
    if k == 0 || k > a.rows() {
        return Err(Error::arg(format!(
            "requested {k} eigenpairs of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    Ok(sym_eig_all(a)?.truncate(k))
}

/// Cyclic Jacobi on a row-major symmetric buffer. Returns eigenvalues and the
/// row-major eigenvector matrix (eigenvectors in columns).
fn jacobi(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tiny = 1e-18 * norm;

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= tiny {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() <= 0.5 * f64::EPSILON * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
        if !rotated {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok((values, v));
        }
    }
    Err(Error::numerical(format!(
        "Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps (n = {n})"
    )))
}

/// Householder reduction to tridiagonal form followed by implicit-shift QL
/// (the EISPACK tred2/tql2 pair). Buffer is row-major.
fn tridiagonal_ql(a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = a;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let at = |i: usize, j: usize| i * n + j;

    // tred2
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;

    // tql2
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERS {
                    return Err(Error::numerical(format!(
                        "QL eigensolver did not converge for eigenvalue {l} (n = {n})"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                        v[at(k, i)] = c * v[at(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok((d, v))
}

/// Sort descending, canonicalize signs, and order columns inside degenerate
/// clusters lexicographically.
fn finalize(values: Vec<f64>, vecs: Vec<f64>, n: usize) -> EigenPairs {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let q = FactorMatrix::from_fn(n, n, |r, c| vecs[r * n + order[c]]);
    let mut q = canonicalize_signs(&q);

    let lmax = sorted_values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = DEGENERACY_TOL * lmax;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted_values[end - 1] - sorted_values[end] < tol {
            end += 1;
        }
        if end - start > 1 {
            let mut cols: Vec<Vec<f64>> = (start..end).map(|c| q.col(c).to_vec()).collect();
            cols.sort_by(|a, b| lex_desc(a, b));
            for (off, col) in cols.into_iter().enumerate() {
                q.col_mut(start + off).copy_from_slice(&col);
            }
        }
        start = end;
    }
    EigenPairs {
        values: sorted_values,
        vectors: q,
    }
}

fn lex_desc(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Flip each column so its largest-magnitude entry is positive. Ties go to the
/// lowest row index; all-zero columns are left alone.
pub fn canonicalize_signs(q: &FactorMatrix) -> FactorMatrix {
    let mut out = q.clone();
    for c in 0..out.cols() {
        let col = out.col_mut(c);
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            for x in col.iter_mut() {
                *x = -*x;
            }
        }
    }
    out
}

/// Column-wise Kronecker product. Row `ia * rows(B) + ib` of column `r` holds
/// `A[ia][r] * B[ib][r]`, i.e. B's row index runs fastest.
pub fn khatri_rao(a: &FactorMatrix, b: &FactorMatrix) -> Result<FactorMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::arg(format!(
            "Khatri-Rao product needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let rb = b.rows();
    Ok(FactorMatrix::from_fn(a.rows() * rb, a.cols(), |row, c| {
        a.get(row / rb, c) * b.get(row % rb, c)
    }))
}

/// Ridge added to ALS normal equations: `1e-12 * trace(G) / R`.
pub fn ridge_for(gram: &FactorMatrix) -> f64 {
    1e-12 * gram.trace() / gram.rows().max(1) as f64
}

/// Solve `(G + ridge I) X = rhs` for symmetric positive semidefinite `G`
/// (`R x R`) and `rhs` (`R x q`) by Cholesky.
pub fn solve_normal_equations(gram: &FactorMatrix, rhs: &FactorMatrix) -> Result<FactorMatrix> {
    let r = gram.rows();
    if gram.cols() != r || rhs.rows() != r {
        return Err(Error::arg(format!(
            "normal equations shape mismatch: {}x{} system, {}x{} right-hand side",
            gram.rows(),
            gram.cols(),
            rhs.rows(),
            rhs.cols()
        )));
    }
    let ridge = ridge_for(gram);
    let mut l = vec![0.0; r * r];
    for j in 0..r {
        let mut diag = gram.get(j, j) + ridge;
        for k in 0..j {
            diag -= l[j * r + k] * l[j * r + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            let cond = condition_estimate(gram, ridge);
            return Err(Error::numerical(format!(
                "normal equations are singular (pivot {j}, condition estimate {cond:.3e})"
            )));
        }
        let d = diag.sqrt();
        l[j * r + j] = d;
        for i in j + 1..r {
            let mut s = gram.get(i, j);
            for k in 0..j {
                s -= l[i * r + k] * l[j * r + k];
            }
            l[i * r + j] = s / d;
        }
    }
    let mut out = rhs.clone();
    for c in 0..rhs.cols() {
        let x = out.col_mut(c);
        for i in 0..r {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * r + k] * x[k];
            }
            x[i] = s / l[i * r + i];
        }
        for i in (0..r).rev() {
            let mut s = x[i];
            for k in i + 1..r {
                s -= l[k * r + i] * x[k];
            }
            x[i] = s / l[i * r + i];
        }
    }
    Ok(out)
}

fn condition_estimate(gram: &FactorMatrix, ridge: f64) -> f64 {
    match sym_eig_all(gram) {
        Ok(e) => {
            let hi = e.values.first().copied().unwrap_or(0.0) + ridge;
            let lo = e.values.last().copied().unwrap_or(0.0) + ridge;
            if lo > 0.0 {
                hi / lo
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::NAN,
    }
}

/// `argmin_B ||Y - Z B^T||_F` through the ridged normal equations
/// `(Z^T Z + ridge I) B^T = Z^T Y`. Returns `B` with shape `cols(Y) x cols(Z)`.
pub fn solve_least_squares(z: &FactorMatrix, y: &FactorMatrix) -> Result<FactorMatrix> {
    if z.rows() != y.rows() {
        return Err(Error::arg(format!(
            "least squares: Z has {} rows but Y has {}",
            z.rows(),
            y.rows()
        )));
    }
    let gram = z.gram_cols();
    let rhs = z.t_matmul(y)?;
    Ok(solve_normal_equations(&gram, &rhs)?.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(n: usize, seed: u64) -> FactorMatrix {
        let mut r = SplitMix64::new(seed);
        let a = FactorMatrix::from_fn(n, n, |_, _| r.next_f64() - 0.5);
        FactorMatrix::from_fn(n, n, |i, j| a.get(i, j) + a.get(j, i))
    }

    fn residual(a: &FactorMatrix, e: &EigenPairs) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, &lam) in e.values.iter().enumerate() {
            let q = e.vectors.col(c);
            let mut s = 0.0;
            for r in 0..a.rows() {
                let aq: f64 = (0..a.cols()).map(|k| a.get(r, k) * q[k]).sum();
                s += (aq - lam * q[r]).powi(2);
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }

    #[test]
    fn identity_topk_projector() {
        let e = sym_eig_topk(&FactorMatrix::identity(4), 2).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert!(e.vectors.orthonormality_error() < 1e-12);
        let p = e.vectors.projector();
        assert!((p.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_topk() {
        let a = FactorMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 3.0, 0.0], &[0.0, 0.0, 2.0]]);
        let e = sym_eig_topk(&a, 2).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0]);
        assert_eq!(e.vectors.col(0), &[0.0, 1.0, 0.0]);
        assert_eq!(e.vectors.col(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn topk_range_checked() {
        let a = FactorMatrix::identity(3);
        assert!(matches!(sym_eig_topk(&a, 0), Err(Error::Argument(_))));
        assert!(matches!(sym_eig_topk(&a, 4), Err(Error::Argument(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = FactorMatrix::identity(3);
        a.set(1, 1, f64::INFINITY);
        assert!(matches!(sym_eig_all(&a), Err(Error::Data(_))));
    }

    #[test]
    fn asymmetric_rejected() {
        let a = FactorMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eig_all(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn both_paths_reconstruct_and_preserve_trace() {
        for &n in &[5usize, 40, 64, 65, 90] {
            let a = random_symmetric(n, n as u64);
            let e = sym_eig_all(&a).unwrap();
            let norm = a.frobenius_norm();
            assert!(residual(&a, &e) <= 1e-8 * norm, "n = {n}");
            assert!(e.vectors.orthonormality_error() < 1e-10, "n = {n}");
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = e.values.iter().sum();
            assert!((sum - a.trace()).abs() <= 1e-9 * norm.max(1.0));
            let mut rec = FactorMatrix::zeros(n, n);
            for (c, &lam) in e.values.iter().enumerate() {
                let q = e.vectors.col(c);
                for i in 0..n {
                    for j in 0..n {
                        rec.set(i, j, rec.get(i, j) + lam * q[i] * q[j]);
                    }
                }
            }
            assert!(rec.sub(&a).unwrap().frobenius_norm() <= 1e-8 * norm);
        }
    }

    #[test]
    fn jacobi_and_ql_agree_on_eigenvalues() {
        let a = random_symmetric(30, 99);
        let mut buf = vec![0.0; 900];
        for i in 0..30 {
            for j in 0..30 {
                buf[i * 30 + j] = a.get(i, j);
            }
        }
        let (mut v1, _) = jacobi(buf.clone(), 30).unwrap();
        let (mut v2, _) = tridiagonal_ql(buf, 30).unwrap();
        v1.sort_by(f64::total_cmp);
        v2.sort_by(f64::total_cmp);
        for (x, y) in v1.iter().zip(&v2) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eig_all(&FactorMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert!(e.vectors.orthonormality_error() < 1e-15);
    }

    #[test]
    fn canonical_sign_examples() {
        let q = FactorMatrix::from_rows(&[&[0.0], &[-3.0], &[1.0]]);
        assert_eq!(canonicalize_signs(&q).col(0), &[0.0, 3.0, -1.0]);
        let q = FactorMatrix::from_rows(&[&[2.0], &[-2.0]]);
        assert_eq!(canonicalize_signs(&q).col(0), &[2.0, -2.0]);
        let q = FactorMatrix::from_rows(&[&[-2.0], &[2.0]]);
        assert_eq!(canonicalize_signs(&q).col(0), &[2.0, -2.0]);
        let z = FactorMatrix::zeros(3, 2);
        assert_eq!(canonicalize_signs(&z), z);
    }

    #[test]
    fn khatri_rao_small_cases() {
        let a = FactorMatrix::from_rows(&[&[2.0]]);
        let b = FactorMatrix::from_rows(&[&[3.0]]);
        assert_eq!(khatri_rao(&a, &b).unwrap().as_slice(), &[6.0]);

        let k = khatri_rao(&FactorMatrix::identity(2), &FactorMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]))
            .unwrap();
        assert_eq!(k.col(0), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(k.col(1), &[0.0, 0.0, 1.0, 1.0]);

        assert!(khatri_rao(&FactorMatrix::zeros(2, 2), &FactorMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn least_squares_consistent_and_orthonormal() {
        let mut r = SplitMix64::new(5);
        let z = FactorMatrix::from_fn(20, 3, |_, _| r.next_f64() - 0.5);
        let c = FactorMatrix::from_fn(4, 3, |_, _| r.next_f64() - 0.5);
        let y = z.matmul(&c.transpose()).unwrap();
        let b = solve_least_squares(&z, &y).unwrap();
        assert!(b.sub(&c).unwrap().max_abs() < 1e-10);

        let q = sym_eig_all(&random_symmetric(6, 1)).unwrap().vectors.leading_cols(3);
        let y = FactorMatrix::from_fn(6, 2, |_, _| r.next_f64());
        let b = solve_least_squares(&q, &y).unwrap();
        let want = y.t_matmul(&q).unwrap();
        assert!(b.sub(&want).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn least_squares_singular_reports_condition() {
        let z = FactorMatrix::zeros(5, 2);
        let y = FactorMatrix::zeros(5, 1);
        match solve_least_squares(&z, &y) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("condition")),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }
}
