//! Synthetic tensors.
//!
//! `random_uniform` fills the tensor in canonical order with `next_f64()`
//! from `SplitMix64::new(seed)`.
//!
//! `planted_tucker` builds `X = S x1 U x2 V x3 W + N`:
//!
//! * `S` is superdiagonal, `S[r][r][r] = spectrum[r]`, so every mode Gram of
//!   the signal has eigenvalues `spectrum[r]^2`;
//! * `U`, `V`, `W` are Gaussian matrices made orthogonal to the all-ones
//!   vector and then orthonormalized (modified Gram–Schmidt, two passes),
//!   which makes the signal exactly centered along every mode;
//! * `N` is i.i.d. Gaussian, rescaled so `||N||_F = noise * ||signal||_F`.
//!
//! Streams: `U`, `V`, `W` and `N` use `substream(seed, 1..=4)`.

use crate::error::{Error, Result};
use crate::rng::{substream, SplitMix64};
use crate::tensor::{reconstruct_hosvd, FactorMatrix, Tensor3};

pub fn random_uniform(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut rng = SplitMix64::new(seed);
    let n: usize = dims.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    Tensor3::from_vec(dims, data).expect("uniform draws are finite")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub dims: [usize; 3],
    pub core_dims: [usize; 3],
    /// Superdiagonal core values, positive and non-increasing; length
    /// `min(core_dims)`.
    pub spectrum: Vec<f64>,
    /// Noise norm relative to the signal norm.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct PlantedTucker {
    pub tensor: Tensor3,
    pub u: FactorMatrix,
    pub v: FactorMatrix,
    pub w: FactorMatrix,
    pub core: Tensor3,
}

/// `n x m` orthonormal columns, each orthogonal to the all-ones vector.
pub fn zero_mean_orthonormal(n: usize, m: usize, rng: &mut SplitMix64) -> Result<FactorMatrix> {
    if m + 1 > n {
        return Err(Error::arg(format!(
            "need m < n for zero-mean orthonormal factors, got n = {n}, m = {m}"
        )));
    }
    let mut q = FactorMatrix::from_fn(n, m, |_, _| rng.next_gaussian());
    let ones = 1.0 / (n as f64).sqrt();
    for c in 0..m {
        for _ in 0..2 {
            let mean_proj: f64 = q.col(c).iter().sum::<f64>() * ones;
            q.col_mut(c).iter_mut().for_each(|x| *x -= mean_proj * ones);
            for p in 0..c {
                let prev = q.col(p).to_vec();
                let d: f64 = q.col(c).iter().zip(&prev).map(|(a, b)| a * b).sum();
                q.col_mut(c).iter_mut().zip(&prev).for_each(|(x, b)| *x -= d * b);
            }
        }
        let norm = q.col(c).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            return Err(Error::numerical("degenerate random factor draw"));
        }
        q.col_mut(c).iter_mut().for_each(|x| *x /= norm);
    }
    Ok(q)
}

pub fn planted_tucker(spec: &PlantedSpec) -> Result<PlantedTucker> {
    let [n1, n2, n3] = spec.dims;
    let [c1, c2, c3] = spec.core_dims;
    if spec.core_dims.contains(&0) || c1 >= n1 || c2 >= n2 || c3 >= n3 {
        return Err(Error::arg(format!(
            "core dims {:?} must be positive and smaller than tensor dims {:?}",
            spec.core_dims, spec.dims
        )));
    }
    let diag = c1.min(c2).min(c3);
    if spec.spectrum.len() != diag {
        return Err(Error::arg(format!(
            "spectrum needs {diag} values for core dims {:?}, got {}",
            spec.core_dims,
            spec.spectrum.len()
        )));
    }
    if spec.spectrum.iter().any(|&s| !(s > 0.0) || !s.is_finite())
        || spec.spectrum.windows(2).any(|w| w[1] > w[0])
    {
        return Err(Error::arg("spectrum must be positive and non-increasing"));
    }
    if !(spec.noise >= 0.0) || !spec.noise.is_finite() {
        return Err(Error::arg("noise level must be non-negative"));
    }

    let u = zero_mean_orthonormal(n1, c1, &mut SplitMix64::new(substream(spec.seed, 1)))?;
    let v = zero_mean_orthonormal(n2, c2, &mut SplitMix64::new(substream(spec.seed, 2)))?;
    let w = zero_mean_orthonormal(n3, c3, &mut SplitMix64::new(substream(spec.seed, 3)))?;
    let mut core = Tensor3::zeros(c1, c2, c3);
    for (r, &s) in spec.spectrum.iter().enumerate() {
        core.set(r, r, r, s);
    }
    let mut tensor = reconstruct_hosvd(&u, &v, &w, &core)?;
    if spec.noise > 0.0 {
        let mut rng = SplitMix64::new(substream(spec.seed, 4));
        let noise: Vec<f64> = (0..tensor.len()).map(|_| rng.next_gaussian()).collect();
        let nn = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = spec.noise * tensor.frobenius_norm() / nn;
        for (x, e) in tensor.as_mut_slice().iter_mut().zip(&noise) {
            *x += scale * e;
        }
    }
    Ok(PlantedTucker {
        tensor,
        u,
        v,
        w,
        core,
    })
}
