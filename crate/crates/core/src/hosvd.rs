//! HOSVD (Tucker with orthonormal factors) by alternating eigenvector updates.
//!
//! With orthonormal `U, V, W` the optimal core is
//! `S = X x1 U^T x2 V^T x3 W^T`, and minimizing the residual is the same as
//! maximizing `||S||^2 = Tr(U^T F U) = Tr(V^T G V) = Tr(W^T H W)`. Each sweep
//! replaces `U`, then `V`, then `W` by the leading eigenvectors of `F`, `G`
//! and `H` computed from the most recent other two factors, so `||S||^2`
//! never decreases.

use crate::error::{Error, Result};
use crate::linalg::sym_eig_topk;
use crate::tensor::{CoreTensor, FactorMatrix, Mode, Tensor3};

/// Fitted HOSVD factors and core.
#[derive(Debug, Clone)]
pub struct HosvdModel {
    pub u: FactorMatrix,
    pub v: FactorMatrix,
    pub w: FactorMatrix,
    pub core: CoreTensor,
}

impl HosvdModel {
    pub fn dims(&self) -> [usize; 3] {
        self.core.dims()
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        crate::tensor::reconstruct_hosvd(&self.u, &self.v, &self.w, &self.core)
    }
}

/// Factor matrices at the end of one sweep.
#[derive(Debug, Clone)]
pub struct FactorSnapshot {
    pub u: FactorMatrix,
    pub v: FactorMatrix,
    pub w: FactorMatrix,
}

#[derive(Debug, Clone, Default)]
pub struct HosvdTrace {
    /// `||S||^2` after each sweep.
    pub objective: Vec<f64>,
    /// Per-sweep factors; only filled when requested.
    pub snapshots: Option<Vec<FactorSnapshot>>,
}

impl HosvdTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len()
    }
}

fn check_rows(what: &str, m: &FactorMatrix, rows: usize) -> Result<()> {
    if m.rows() != rows {
        return Err(Error::arg(format!(
            "{what} has {} rows, tensor extent is {rows}",
            m.rows()
        )));
    }
    Ok(())
}

/// `F = M M^T` with `M = unfold_1(X x2 V^T x3 W^T)`; equals
/// `F_ii' = sum X_ijl X_i'j'l' (VV^T)_jj' (WW^T)_ll'`.
pub fn compute_f(x: &Tensor3, v: &FactorMatrix, w: &FactorMatrix) -> Result<FactorMatrix> {
    check_rows("V", v, x.dim(Mode::Two))?;
    check_rows("W", w, x.dim(Mode::Three))?;
    let y = x
        .mode_multiply(v, Mode::Two, true)?
        .mode_multiply(w, Mode::Three, true)?;
    Ok(y.unfold(Mode::One).gram_rows())
}

/// Mode-2 analogue of [`compute_f`].
pub fn compute_g(x: &Tensor3, u: &FactorMatrix, w: &FactorMatrix) -> Result<FactorMatrix> {
    check_rows("U", u, x.dim(Mode::One))?;
    check_rows("W", w, x.dim(Mode::Three))?;
    let y = x
        .mode_multiply(u, Mode::One, true)?
        .mode_multiply(w, Mode::Three, true)?;
    Ok(y.unfold(Mode::Two).gram_rows())
}

/// Mode-3 analogue of [`compute_f`].
pub fn compute_h(x: &Tensor3, u: &FactorMatrix, v: &FactorMatrix) -> Result<FactorMatrix> {
    check_rows("U", u, x.dim(Mode::One))?;
    check_rows("V", v, x.dim(Mode::Two))?;
    let y = x
        .mode_multiply(u, Mode::One, true)?
        .mode_multiply(v, Mode::Two, true)?;
    Ok(y.unfold(Mode::Three).gram_rows())
}

/// `S = X x1 U^T x2 V^T x3 W^T`.
pub fn core_tensor(
    x: &Tensor3,
    u: &FactorMatrix,
    v: &FactorMatrix,
    w: &FactorMatrix,
) -> Result<CoreTensor> {
    check_rows("U", u, x.dim(Mode::One))?;
    check_rows("V", v, x.dim(Mode::Two))?;
    check_rows("W", w, x.dim(Mode::Three))?;
    x.mode_multiply(u, Mode::One, true)?
        .mode_multiply(v, Mode::Two, true)?
        .mode_multiply(w, Mode::Three, true)
}

/// `J1 = ||X||^2 - ||S||^2`.
pub fn hosvd_objective(x: &Tensor3, core: &CoreTensor) -> f64 {
    x.frobenius_norm_sq() - core.frobenius_norm_sq()
}

pub(crate) fn validate_dims(x: &Tensor3, dims: [usize; 3]) -> Result<()> {
    let n = x.dims();
    for a in 0..3 {
        if dims[a] == 0 || dims[a] > n[a] {
            return Err(Error::arg(format!(
                "target dims {dims:?} must satisfy 1 <= m <= n for tensor dims {n:?}"
            )));
        }
    }
    Ok(())
}

/// One alternating HOSVD run, advanced a sweep at a time.
#[derive(Debug, Clone)]
pub struct HosvdSolver<'a> {
    x: &'a Tensor3,
    dims: [usize; 3],
    u: FactorMatrix,
    v: FactorMatrix,
    w: FactorMatrix,
    core: CoreTensor,
    sweeps: usize,
}

impl<'a> HosvdSolver<'a> {
    /// `v0`/`w0` are used as given; they need not be orthonormal.
    pub fn new(x: &'a Tensor3, dims: [usize; 3], v0: &FactorMatrix, w0: &FactorMatrix) -> Result<Self> {
        validate_dims(x, dims)?;
        let [n1, n2, n3] = x.dims();
        if v0.shape() != (n2, dims[1]) || w0.shape() != (n3, dims[2]) {
            return Err(Error::arg(format!(
                "initial V {:?} / W {:?} do not match expected {:?} / {:?}",
                v0.shape(),
                w0.shape(),
                (n2, dims[1]),
                (n3, dims[2])
            )));
        }
        Ok(Self {
            x,
            dims,
            u: FactorMatrix::zeros(n1, dims[0]),
            v: v0.clone(),
            w: w0.clone(),
            core: Tensor3::zeros(dims[0], dims[1], dims[2]),
            sweeps: 0,
        })
    }

    /// One U -> V -> W sweep; returns `||S||^2` afterwards.
    pub fn step(&mut self) -> Result<f64> {
        let t = self.sweeps;
        let fail = |which: &str, e: Error| {
            Error::numerical(format!("HOSVD {which} update failed at iteration {t}: {e}"))
        };
        let f = compute_f(self.x, &self.v, &self.w)?;
        self.u = sym_eig_topk(&f, self.dims[0]).map_err(|e| fail("U", e))?.vectors;
        let g = compute_g(self.x, &self.u, &self.w)?;
        self.v = sym_eig_topk(&g, self.dims[1]).map_err(|e| fail("V", e))?.vectors;
        let y = self
            .x
            .mode_multiply(&self.u, Mode::One, true)?
            .mode_multiply(&self.v, Mode::Two, true)?;
        let h = y.unfold(Mode::Three).gram_rows();
        self.w = sym_eig_topk(&h, self.dims[2]).map_err(|e| fail("W", e))?.vectors;
        self.core = y.mode_multiply(&self.w, Mode::Three, true)?;
        self.sweeps += 1;
        Ok(self.core.frobenius_norm_sq())
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn u(&self) -> &FactorMatrix {
        &self.u
    }

    pub fn v(&self) -> &FactorMatrix {
        &self.v
    }

    pub fn w(&self) -> &FactorMatrix {
        &self.w
    }

    pub fn core(&self) -> &CoreTensor {
        &self.core
    }

    pub fn snapshot(&self) -> FactorSnapshot {
        FactorSnapshot {
            u: self.u.clone(),
            v: self.v.clone(),
            w: self.w.clone(),
        }
    }

    pub fn into_model(self) -> HosvdModel {
        HosvdModel {
            u: self.u,
            v: self.v,
            w: self.w,
            core: self.core,
        }
    }
}

/// Run exactly `iterations` sweeps from `(v0, w0)`.
pub fn hosvd_run(
    x: &Tensor3,
    dims: [usize; 3],
    v0: &FactorMatrix,
    w0: &FactorMatrix,
    iterations: usize,
) -> Result<(HosvdModel, HosvdTrace)> {
    hosvd_run_with(x, dims, v0, w0, iterations, false)
}

/// As [`hosvd_run`], optionally keeping the factors after every sweep.
pub fn hosvd_run_with(
    x: &Tensor3,
    dims: [usize; 3],
    v0: &FactorMatrix,
    w0: &FactorMatrix,
    iterations: usize,
    keep_snapshots: bool,
) -> Result<(HosvdModel, HosvdTrace)> {
    if iterations == 0 {
        return Err(Error::arg("HOSVD needs at least one iteration"));
    }
    let mut solver = HosvdSolver::new(x, dims, v0, w0)?;
    let mut trace = HosvdTrace {
        objective: Vec::with_capacity(iterations),
        snapshots: keep_snapshots.then(|| Vec::with_capacity(iterations)),
    };
    for _ in 0..iterations {
        let obj = solver.step()?;
        trace.objective.push(obj);
        if let Some(s) = trace.snapshots.as_mut() {
            s.push(solver.snapshot());
        }
    }
    Ok((solver.into_model(), trace))
}
