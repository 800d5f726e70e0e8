//! ParaFac / CP decomposition by alternating least squares.
//!
//! Each update solves for one factor with the other two fixed, through the
//! normal equations `U (V^T V * W^T W) = X_(1) (W kr V)` (Hadamard product of
//! the Gram matrices on the left, a matricized-tensor-times-Khatri–Rao product
//! on the right). No column normalization is applied between sweeps.

use crate::error::{Error, Result};
use crate::linalg::solve_normal_equations;
use crate::tensor::{reconstruct_parafac, FactorMatrix, Mode, Tensor3};

/// Entries above this magnitude are reported as divergence.
pub const OVERFLOW_LIMIT: f64 = 1e150;

#[derive(Debug, Clone)]
pub struct ParafacModel {
    pub u: FactorMatrix,
    pub v: FactorMatrix,
    pub w: FactorMatrix,
}

impl ParafacModel {
    pub fn new(u: FactorMatrix, v: FactorMatrix, w: FactorMatrix) -> Result<Self> {
        let r = u.cols();
        if v.cols() != r || w.cols() != r {
            return Err(Error::arg(format!(
                "ParaFac factors disagree on rank: {}, {}, {}",
                u.cols(),
                v.cols(),
                w.cols()
            )));
        }
        Ok(Self { u, v, w })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn reconstruct(&self) -> Result<Tensor3> {
        reconstruct_parafac(&self.u, &self.v, &self.w)
    }

    fn factor(&self, mode: Mode) -> &FactorMatrix {
        match mode {
            Mode::One => &self.u,
            Mode::Two => &self.v,
            Mode::Three => &self.w,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParafacTrace {
    /// Objective after each sweep.
    pub objective: Vec<f64>,
    /// Per-sweep reconstructions; only filled when requested.
    pub reconstructions: Option<Vec<Tensor3>>,
}

impl ParafacTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len()
    }
}

/// `||X - X_hat||_F^2`.
pub fn parafac_objective(x: &Tensor3, model: &ParafacModel) -> Result<f64> {
    check_shapes(x, model)?;
    x.distance_sq(&model.reconstruct()?)
}

fn check_shapes(x: &Tensor3, model: &ParafacModel) -> Result<()> {
    let [n1, n2, n3] = x.dims();
    if model.u.rows() != n1 || model.v.rows() != n2 || model.w.rows() != n3 {
        return Err(Error::arg(format!(
            "ParaFac factor rows ({}, {}, {}) do not match tensor dims {:?}",
            model.u.rows(),
            model.v.rows(),
            model.w.rows(),
            x.dims()
        )));
    }
    Ok(())
}

/// Matricized tensor times Khatri–Rao product of the two factors other than
/// `mode`; shape `n_mode x R`.
pub fn mttkrp(x: &Tensor3, model: &ParafacModel, mode: Mode) -> FactorMatrix {
    let [n1, n2, n3] = x.dims();
    let r = model.rank();
    let data = x.as_slice();
    let (u, v, w) = (&model.u, &model.v, &model.w);
    let mut out = FactorMatrix::zeros(x.dim(mode), r);
    for c in 0..r {
        match mode {
            Mode::One => {
                let dst = out.col_mut(c);
                for k in 0..n3 {
                    let wk = w.get(k, c);
                    if wk == 0.0 {
                        continue;
                    }
                    for j in 0..n2 {
                        let s = v.get(j, c) * wk;
                        if s == 0.0 {
                            continue;
                        }
                        let o = (k * n2 + j) * n1;
                        for (d, xv) in dst.iter_mut().zip(&data[o..o + n1]) {
                            *d += xv * s;
                        }
                    }
                }
            }
            Mode::Two => {
                let uc = u.col(c);
                for k in 0..n3 {
                    let wk = w.get(k, c);
                    if wk == 0.0 {
                        continue;
                    }
                    for j in 0..n2 {
                        let o = (k * n2 + j) * n1;
                        let s: f64 = data[o..o + n1].iter().zip(uc).map(|(a, b)| a * b).sum();
                        let cur = out.get(j, c);
                        out.set(j, c, cur + s * wk);
                    }
                }
            }
            Mode::Three => {
                let uc = u.col(c);
                for k in 0..n3 {
                    let mut acc = 0.0;
                    for j in 0..n2 {
                        let vj = v.get(j, c);
                        if vj == 0.0 {
                            continue;
                        }
                        let o = (k * n2 + j) * n1;
                        let s: f64 = data[o..o + n1].iter().zip(uc).map(|(a, b)| a * b).sum();
                        acc += s * vj;
                    }
                    out.set(k, c, acc);
                }
            }
        }
    }
    out
}

fn hadamard(a: &FactorMatrix, b: &FactorMatrix) -> FactorMatrix {
    FactorMatrix::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c) * b.get(r, c))
}

/// Least-squares optimal replacement for the factor along `which`, the other
/// two held fixed.
pub fn update_factor(x: &Tensor3, model: &ParafacModel, which: Mode) -> Result<FactorMatrix> {
    check_shapes(x, model)?;
    let others: Vec<Mode> = Mode::ALL.into_iter().filter(|&m| m != which).collect();
    let gram = hadamard(
        &model.factor(others[0]).gram_cols(),
        &model.factor(others[1]).gram_cols(),
    );
    let rhs = mttkrp(x, model, which);
    if gram.max_abs() == 0.0 {
        // Every column of the fixed factors is zero; the minimum-norm solution is zero.
        return Ok(FactorMatrix::zeros(rhs.rows(), rhs.cols()));
    }
    let solved = solve_normal_equations(&gram, &rhs.transpose())?;
    Ok(solved.transpose())
}

/// One ALS run, advanced a sweep at a time.
#[derive(Debug, Clone)]
pub struct ParafacSolver<'a> {
    x: &'a Tensor3,
    model: ParafacModel,
    reconstruction: Tensor3,
    sweeps: usize,
}

impl<'a> ParafacSolver<'a> {
    /// The initial `U` is never read: the first update computes it from
    /// `(v0, w0)`.
    pub fn new(x: &'a Tensor3, v0: &FactorMatrix, w0: &FactorMatrix) -> Result<Self> {
        let [n1, n2, n3] = x.dims();
        let r = v0.cols();
        if r == 0 || w0.cols() != r {
            return Err(Error::arg(format!(
                "initial V and W must share a positive rank, got {} and {}",
                v0.cols(),
                w0.cols()
            )));
        }
        if v0.rows() != n2 || w0.rows() != n3 {
            return Err(Error::arg(format!(
                "initial V {:?} / W {:?} do not match tensor dims {:?}",
                v0.shape(),
                w0.shape(),
                x.dims()
            )));
        }
        let model = ParafacModel::new(FactorMatrix::zeros(n1, r), v0.clone(), w0.clone())?;
        Ok(Self {
            x,
            model,
            reconstruction: Tensor3::zeros(n1, n2, n3),
            sweeps: 0,
        })
    }

    /// One U -> V -> W sweep; returns the objective afterwards.
    pub fn step(&mut self) -> Result<f64> {
        let t = self.sweeps;
        for (mode, name) in [(Mode::One, "U"), (Mode::Two, "V"), (Mode::Three, "W")] {
            let f = update_factor(self.x, &self.model, mode).map_err(|e| {
                Error::numerical(format!("ParaFac {name} update failed at iteration {t}: {e}"))
            })?;
            if !f.is_finite() || f.max_abs() > OVERFLOW_LIMIT {
                return Err(Error::numerical(format!(
                    "ParaFac {name} diverged at iteration {t} (max |entry| {:.3e})",
                    f.max_abs()
                )));
            }
            match mode {
                Mode::One => self.model.u = f,
                Mode::Two => self.model.v = f,
                Mode::Three => self.model.w = f,
            }
        }
        self.reconstruction = self.model.reconstruct()?;
        self.sweeps += 1;
        self.x.distance_sq(&self.reconstruction)
    }

    pub fn model(&self) -> &ParafacModel {
        &self.model
    }

    pub fn reconstruction(&self) -> &Tensor3 {
        &self.reconstruction
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn into_model(self) -> ParafacModel {
        self.model
    }
}

/// Run exactly `iterations` ALS sweeps from `(v0, w0)`.
pub fn parafac_run(
    x: &Tensor3,
    v0: &FactorMatrix,
    w0: &FactorMatrix,
    iterations: usize,
) -> Result<(ParafacModel, ParafacTrace)> {
    parafac_run_with(x, v0, w0, iterations, false)
}

/// As [`parafac_run`], optionally keeping every reconstruction.
pub fn parafac_run_with(
    x: &Tensor3,
    v0: &FactorMatrix,
    w0: &FactorMatrix,
    iterations: usize,
    keep_reconstructions: bool,
) -> Result<(ParafacModel, ParafacTrace)> {
    if iterations == 0 {
        return Err(Error::arg("ParaFac needs at least one iteration"));
    }
    let mut solver = ParafacSolver::new(x, v0, w0)?;
    let mut trace = ParafacTrace {
        objective: Vec::with_capacity(iterations),
        reconstructions: keep_reconstructions.then(Vec::new),
    };
    for _ in 0..iterations {
        trace.objective.push(solver.step()?);
        if let Some(r) = trace.reconstructions.as_mut() {
            r.push(solver.reconstruction().clone());
        }
    }
    Ok((solver.into_model(), trace))
}
