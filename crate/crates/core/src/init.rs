//! The T1 decomposition (PCA over frontal slices) and the seven-start
//! initialization bundle.
//!
//! Bundle layout, in order: `R1` (PCA `W`, identity-padded `V`), three
//! uniform random starts `R2a..R2c`, and three rank-deficient random starts
//! `R3a..R3c` with one, two and three zeroed columns in both `V` and `W`.
//!
//! Randomness: start `s` (0-based position in the list above) draws from
//! `SplitMix64::new(substream(master_seed, s))`. A random start fills `V`
//! column-major with `next_f64()`, then `W` likewise; an `R3` start then picks
//! its zero columns of `W` as the first `z` entries of
//! `permutation(cols(W))`, followed by the zero columns of `V` the same way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eig_topk;
use crate::rng::{substream, SplitMix64};
use crate::tensor::{FactorMatrix, Mode, Tensor3};

/// `H~_kk' = sum_ij X_ijk X_ijk'`, the Gram matrix of the frontal slices.
pub fn t1_gram(x: &Tensor3) -> FactorMatrix {
    let n3 = x.dim(Mode::Three);
    let mut h = FactorMatrix::zeros(n3, n3);
    for k in 0..n3 {
        for kp in 0..=k {
            let v: f64 = x
                .frontal_slice_data(k)
                .iter()
                .zip(x.frontal_slice_data(kp))
                .map(|(a, b)| a * b)
                .sum();
            h.set(k, kp, v);
            h.set(kp, k, v);
        }
    }
    h
}

#[derive(Debug, Clone)]
pub struct T1Model {
    /// `n3 x m3`, orthonormal columns.
    pub w: FactorMatrix,
    /// `C^(r) = sum_k X^(k) W_kr`, each `n1 x n2`.
    pub c: Vec<FactorMatrix>,
    /// Leading eigenvalues of `H~`.
    pub eigenvalues: Vec<f64>,
    /// `||X||^2 - Tr(W^T H~ W)`.
    pub objective: f64,
    /// `sum_k ||X^(k) - sum_r C^(r) W_kr||^2`, evaluated directly.
    pub objective_direct: f64,
}

/// Fit the T1 model with `m3` components.
pub fn t1_solve(x: &Tensor3, m3: usize) -> Result<T1Model> {
    let [n1, n2, n3] = x.dims();
    if m3 == 0 || m3 > n3 {
        return Err(Error::arg(format!("T1 needs 1 <= m3 <= {n3}, got {m3}")));
    }
    let h = t1_gram(x);
    let eig = sym_eig_topk(&h, m3)?;
    let w = eig.vectors;

    let hw = h.matmul(&w)?;
    let captured: f64 = (0..m3)
        .map(|r| w.col(r).iter().zip(hw.col(r)).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    let objective = x.frobenius_norm_sq() - captured;

    let plane = n1 * n2;
    let mut c = Vec::with_capacity(m3);
    for r in 0..m3 {
        let mut acc = vec![0.0; plane];
        for k in 0..n3 {
            let coef = w.get(k, r);
            for (a, xv) in acc.iter_mut().zip(x.frontal_slice_data(k)) {
                *a += coef * xv;
            }
        }
        c.push(FactorMatrix::from_col_major(n1, n2, acc)?);
    }

    let mut direct = 0.0;
    for k in 0..n3 {
        let mut approx = vec![0.0; plane];
        for (r, cr) in c.iter().enumerate() {
            let coef = w.get(k, r);
            for (a, cv) in approx.iter_mut().zip(cr.as_slice()) {
                *a += coef * cv;
            }
        }
        direct += x
            .frontal_slice_data(k)
            .iter()
            .zip(&approx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }

    Ok(T1Model {
        w,
        c,
        eigenvalues: eig.values,
        objective,
        objective_direct: direct,
    })
}

/// Labels of the seven starts, in bundle order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StartLabel {
    R1,
    R2a,
    R2b,
    R2c,
    R3a,
    R3b,
    R3c,
}

impl StartLabel {
    pub const ALL: [StartLabel; 7] = [
        StartLabel::R1,
        StartLabel::R2a,
        StartLabel::R2b,
        StartLabel::R2c,
        StartLabel::R3a,
        StartLabel::R3b,
        StartLabel::R3c,
    ];

    /// Requested number of zeroed columns.
    pub fn zero_columns(self) -> usize {
        match self {
            StartLabel::R3a => 1,
            StartLabel::R3b => 2,
            StartLabel::R3c => 3,
            _ => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StartLabel::R1 => "R1",
            StartLabel::R2a => "R2a",
            StartLabel::R2b => "R2b",
            StartLabel::R2c => "R2c",
            StartLabel::R3a => "R3a",
            StartLabel::R3b => "R3b",
            StartLabel::R3c => "R3c",
        }
    }
}

/// One starting point `(V0, W0)`.
#[derive(Debug, Clone)]
pub struct InitStart {
    pub label: StartLabel,
    pub seed: u64,
    pub v0: FactorMatrix,
    pub w0: FactorMatrix,
    pub zero_cols_v: Vec<usize>,
    pub zero_cols_w: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct InitBundle {
    pub master_seed: u64,
    pub starts: Vec<InitStart>,
    /// Notes on adjustments (zero-column clamping, PCA padding).
    pub notes: Vec<String>,
}

/// Seed-only description of a bundle, as echoed in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSummary {
    pub master_seed: u64,
    pub starts: Vec<StartSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartSummary {
    pub label: StartLabel,
    pub seed: u64,
    pub zero_cols_v: Vec<usize>,
    pub zero_cols_w: Vec<usize>,
}

impl InitBundle {
    /// Seven copies of one start; useful for checking that identical starts
    /// give a zero distance.
    pub fn replicated(start: &InitStart, master_seed: u64) -> Self {
        let starts = StartLabel::ALL
            .iter()
            .map(|&label| InitStart {
                label,
                ..start.clone()
            })
            .collect();
        Self {
            master_seed,
            starts,
            notes: vec!["all starts replicated from one start".into()],
        }
    }

    pub fn summary(&self) -> BundleSummary {
        BundleSummary {
            master_seed: self.master_seed,
            starts: self
                .starts
                .iter()
                .map(|s| StartSummary {
                    label: s.label,
                    seed: s.seed,
                    zero_cols_v: s.zero_cols_v.clone(),
                    zero_cols_w: s.zero_cols_w.clone(),
                })
                .collect(),
            notes: self.notes.clone(),
        }
    }
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut SplitMix64) -> FactorMatrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(rng.next_f64());
    }
    FactorMatrix::from_col_major(rows, cols, data).expect("uniform draws are finite")
}

fn zero_columns(m: &mut FactorMatrix, z: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let perm = rng.permutation(m.cols());
    let mut picked: Vec<usize> = perm[..z].to_vec();
    for &c in &picked {
        m.col_mut(c).iter_mut().for_each(|x| *x = 0.0);
    }
    picked.sort_unstable();
    picked
}

/// Random start `label` drawn from `seed`: V entries, W entries, then the
/// zeroed W columns, then the zeroed V columns.
fn random_start(
    label: StartLabel,
    seed: u64,
    n2: usize,
    m2: usize,
    n3: usize,
    m3: usize,
    notes: &mut Vec<String>,
) -> InitStart {
    let mut rng = SplitMix64::new(seed);
    let mut v0 = uniform_matrix(n2, m2, &mut rng);
    let mut w0 = uniform_matrix(n3, m3, &mut rng);
    let want = label.zero_columns();
    let (mut zv, mut zw) = (Vec::new(), Vec::new());
    if want > 0 {
        let zw_n = want.min(m3.saturating_sub(1));
        let zv_n = want.min(m2.saturating_sub(1));
        if zw_n < want || zv_n < want {
            notes.push(format!(
                "{}: requested {want} zero columns, clamped to {zv_n} (V) / {zw_n} (W) to keep one nonzero column",
                label.as_str()
            ));
        }
        zw = zero_columns(&mut w0, zw_n, &mut rng);
        zv = zero_columns(&mut v0, zv_n, &mut rng);
    }
    InitStart {
        label,
        seed,
        v0,
        w0,
        zero_cols_v: zv,
        zero_cols_w: zw,
    }
}

/// Build the seven starts for target dims `(m1, m2, m3)`.
///
/// Only `R1` reads the tensor (through the T1/PCA solution).
pub fn make_init_bundle(x: &Tensor3, dims: [usize; 3], master_seed: u64) -> Result<InitBundle> {
    crate::hosvd::validate_dims(x, dims)?;
    let [_, n2, n3] = x.dims();
    let [_, m2, m3] = dims;
    let mut notes = Vec::new();
    let mut starts = Vec::with_capacity(7);
    let t1 = t1_solve(x, m3)?;
    starts.push(InitStart {
        label: StartLabel::R1,
        seed: substream(master_seed, 0),
        v0: FactorMatrix::padded_identity(n2, m2),
        w0: t1.w,
        zero_cols_v: Vec::new(),
        zero_cols_w: Vec::new(),
    });
    for (idx, &label) in StartLabel::ALL.iter().enumerate().skip(1) {
        let seed = substream(master_seed, idx as u64);
        starts.push(random_start(label, seed, n2, m2, n3, m3, &mut notes));
    }
    Ok(InitBundle {
        master_seed,
        starts,
        notes,
    })
}

/// Seven starts for a rank-`R` ParaFac run. `V0`/`W0` are `n x R`; when `R`
/// exceeds a tensor extent the identity padding and the PCA block are
/// truncated and the remaining columns left at zero, which is recorded in
/// the bundle notes.
pub fn make_init_bundle_rank(x: &Tensor3, rank: usize, master_seed: u64) -> Result<InitBundle> {
    if rank == 0 {
        return Err(Error::arg("ParaFac rank must be positive"));
    }
    let [_, n2, n3] = x.dims();
    let mut notes = Vec::new();
    let pcs = rank.min(n3);
    let t1 = t1_solve(x, pcs)?;
    let mut w0 = FactorMatrix::zeros(n3, rank);
    for c in 0..pcs {
        w0.col_mut(c).copy_from_slice(t1.w.col(c));
    }
    if pcs < rank {
        notes.push(format!(
            "R1: rank {rank} exceeds n3 = {n3}; PCA columns {pcs}.. zero-padded"
        ));
    }
    if rank > n2 {
        notes.push(format!(
            "R1: rank {rank} exceeds n2 = {n2}; identity V truncated, remaining columns zero"
        ));
    }
    let mut starts = Vec::with_capacity(7);
    starts.push(InitStart {
        label: StartLabel::R1,
        seed: substream(master_seed, 0),
        v0: FactorMatrix::padded_identity(n2, rank),
        w0,
        zero_cols_v: Vec::new(),
        zero_cols_w: Vec::new(),
    });
    for (idx, &label) in StartLabel::ALL.iter().enumerate().skip(1) {
        let seed = substream(master_seed, idx as u64);
        starts.push(random_start(label, seed, n2, rank, n3, rank, &mut notes));
    }
    Ok(InitBundle {
        master_seed,
        starts,
        notes,
    })
}
