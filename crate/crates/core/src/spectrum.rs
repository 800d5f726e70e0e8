//! Mode spectra under identity projectors and the eigengap predictor.
//!
//! With `UU^T = VV^T = WW^T = I` the matrices `F`, `G`, `H` reduce to the
//! three mode Gram matrices. Their eigenvalues, sorted and normalized to sum
//! to one, show whether the retained dimensions sit on a clear gap. The
//! predictor looks only at the gap at each cutoff:
//! `g = (lambda_m - lambda_{m+1}) / lambda_1` (1-based), voting
//! `NonUnique` when `g < tau`, `Unique` when `g >= 2 tau`, and `Marginal`
//! in between. This rule and its default `tau = 0.01` are a calibration of
//! this crate, not a derived bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eig_all;
use crate::tensor::{Mode, Tensor3};

pub const DEFAULT_TAU: f64 = 0.01;

/// Centering applied before computing spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Remove mode-1, then mode-2, then mode-3 fiber means.
    #[default]
    AllModes,
    /// Remove the grand mean.
    Grand,
    None,
}

impl Centering {
    pub fn as_str(self) -> &'static str {
        match self {
            Centering::AllModes => "all-modes",
            Centering::Grand => "grand",
            Centering::None => "none",
        }
    }
}

impl std::str::FromStr for Centering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-modes" => Ok(Centering::AllModes),
            "grand" => Ok(Centering::Grand),
            "none" => Ok(Centering::None),
            _ => Err(Error::arg(format!(
                "unknown centering '{s}' (expected all-modes, grand or none)"
            ))),
        }
    }
}

/// Subtract fiber means along mode 1, then mode 2, then mode 3.
pub fn center_all_modes(x: &Tensor3) -> Tensor3 {
    let [n1, n2, n3] = x.dims();
    let mut y = x.clone();
    for k in 0..n3 {
        for j in 0..n2 {
            let mean = (0..n1).map(|i| y.get(i, j, k)).sum::<f64>() / n1 as f64;
            for i in 0..n1 {
                y.set(i, j, k, y.get(i, j, k) - mean);
            }
        }
    }
    for k in 0..n3 {
        for i in 0..n1 {
            let mean = (0..n2).map(|j| y.get(i, j, k)).sum::<f64>() / n2 as f64;
            for j in 0..n2 {
                y.set(i, j, k, y.get(i, j, k) - mean);
            }
        }
    }
    for j in 0..n2 {
        for i in 0..n1 {
            let mean = (0..n3).map(|k| y.get(i, j, k)).sum::<f64>() / n3 as f64;
            for k in 0..n3 {
                y.set(i, j, k, y.get(i, j, k) - mean);
            }
        }
    }
    y
}

pub fn center(x: &Tensor3, centering: Centering) -> Tensor3 {
    match centering {
        Centering::AllModes => center_all_modes(x),
        Centering::Grand => {
            let mean = x.as_slice().iter().sum::<f64>() / x.len() as f64;
            let mut y = x.clone();
            y.as_mut_slice().iter_mut().for_each(|v| *v -= mean);
            y
        }
        Centering::None => x.clone(),
    }
}

/// Normalized eigenvalues of the three mode Gram matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectra {
    pub centering: Centering,
    /// Mode 1, 2, 3; each sorted non-increasing and summing to one.
    pub spectra: [Vec<f64>; 3],
}

impl ModeSpectra {
    pub fn mode(&self, mode: Mode) -> &[f64] {
        &self.spectra[mode.number() - 1]
    }
}

/// Spectra of `F`, `G`, `H` with identity projectors, after centering.
pub fn identity_spectra(x: &Tensor3, centering: Centering) -> Result<ModeSpectra> {
    let xc = center(x, centering);
    let scale = x.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let resid = xc.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if resid == 0.0 || resid <= 1e-14 * scale {
        return Err(Error::data(
            "degenerate spectrum: tensor is zero after centering",
        ));
    }
    let mut spectra: [Vec<f64>; 3] = Default::default();
    for (slot, mode) in spectra.iter_mut().zip(Mode::ALL) {
        let gram = xc.unfold(mode).gram_rows();
        let eig = sym_eig_all(&gram)?;
        let clamped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        *slot = clamped.iter().map(|v| v / total).collect();
    }
    Ok(ModeSpectra { centering, spectra })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Prediction {
    Unique,
    NonUnique,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGap {
    pub mode: usize,
    pub cutoff: usize,
    /// `None` when the cutoff keeps every eigenvector.
    pub relative_gap: Option<f64>,
    pub vote: Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessPrediction {
    pub prediction: Prediction,
    pub tau: f64,
    pub modes: Vec<ModeGap>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// Vote of one mode for cutoff `m` (1-based count of kept eigenvectors).
pub fn mode_vote(spectrum: &[f64], m: usize, tau: f64) -> (Option<f64>, Prediction) {
    if m >= spectrum.len() {
        return (None, Prediction::Unique);
    }
    let lead = spectrum[0];
    let gap = if lead > 0.0 {
        (spectrum[m - 1] - spectrum[m]) / lead
    } else {
        0.0
    };
    let vote = if gap < tau {
        Prediction::NonUnique
    } else if gap >= 2.0 * tau {
        Prediction::Unique
    } else {
        Prediction::Marginal
    };
    (Some(gap), vote)
}

/// Combine the per-mode votes: any `NonUnique` wins, then any `Marginal`.
pub fn predict_uniqueness(
    spectra: &ModeSpectra,
    dims: [usize; 3],
    tau: f64,
) -> Result<UniquenessPrediction> {
    if !(tau > 0.0) {
        return Err(Error::arg(format!("tau must be positive, got {tau}")));
    }
    if dims.contains(&0) {
        return Err(Error::arg("cutoff dims must be positive"));
    }
    let modes: Vec<ModeGap> = Mode::ALL
        .iter()
        .zip(dims)
        .map(|(&mode, m)| {
            let (relative_gap, vote) = mode_vote(spectra.mode(mode), m, tau);
            ModeGap {
                mode: mode.number(),
                cutoff: m,
                relative_gap,
                vote,
            }
        })
        .collect();
    let all_exact = modes.iter().all(|g| g.relative_gap.is_none());
    let prediction = if modes.iter().any(|g| g.vote == Prediction::NonUnique) {
        Prediction::NonUnique
    } else if modes.iter().any(|g| g.vote == Prediction::Marginal) {
        Prediction::Marginal
    } else {
        Prediction::Unique
    };
    Ok(UniquenessPrediction {
        prediction,
        tau,
        modes,
        note: all_exact.then(|| "exact decomposition: every mode keeps its full basis".to_string()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub tensor_dims: [usize; 3],
    pub centering: Centering,
    pub dims: [usize; 3],
    pub spectra: [Vec<f64>; 3],
    pub prediction: UniquenessPrediction,
    pub rule: String,
}

pub fn spectrum_report(
    x: &Tensor3,
    dims: [usize; 3],
    tau: f64,
    centering: Centering,
) -> Result<SpectrumReport> {
    let spectra = identity_spectra(x, centering)?;
    let prediction = predict_uniqueness(&spectra, dims, tau)?;
    Ok(SpectrumReport {
        tensor_dims: x.dims(),
        centering,
        dims,
        spectra: spectra.spectra,
        prediction,
        rule: "relative eigengap at cutoff (lambda_m - lambda_{m+1}) / lambda_1: \
               < tau NON_UNIQUE, >= 2 tau UNIQUE, otherwise MARGINAL (heuristic)"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn spectra_from(modes: [Vec<f64>; 3]) -> ModeSpectra {
        ModeSpectra {
            centering: Centering::None,
            spectra: modes,
        }
    }

    #[test]
    fn constant_tensor_centers_to_zero() {
        let x = Tensor3::filled(3, 4, 2, 7.5);
        assert!(center_all_modes(&x).as_slice().iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(
            identity_spectra(&x, Centering::AllModes),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn centering_is_idempotent_and_zeroes_means() {
        let mut r = SplitMix64::new(1);
        let x = Tensor3::from_fn(3, 3, 3, |_, _, _| r.next_f64());
        let c = center_all_modes(&x);
        for a in 0..3 {
            for b in 0..3 {
                let m1: f64 = (0..3).map(|t| c.get(t, a, b)).sum::<f64>() / 3.0;
                let m2: f64 = (0..3).map(|t| c.get(a, t, b)).sum::<f64>() / 3.0;
                let m3: f64 = (0..3).map(|t| c.get(a, b, t)).sum::<f64>() / 3.0;
                assert!(m1.abs() <= 1e-12 && m2.abs() <= 1e-12 && m3.abs() <= 1e-12);
            }
        }
        let cc = center_all_modes(&c);
        assert!(cc.distance_sq(&c).unwrap().sqrt() <= 1e-12);
    }

    #[test]
    fn gap_example_from_rule() {
        let s = vec![0.5, 0.3, 0.1, 0.05, 0.03, 0.02];
        let (g, v) = mode_vote(&s, 3, 0.01);
        assert!((g.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(v, Prediction::Unique);
    }

    #[test]
    fn flat_spectrum_is_non_unique() {
        let flat = vec![0.1; 10];
        let p = predict_uniqueness(&spectra_from([flat.clone(), flat.clone(), flat]), [5, 5, 5], 0.01)
            .unwrap();
        assert_eq!(p.prediction, Prediction::NonUnique);
    }

    #[test]
    fn eight_equal_dominant_modes() {
        let mut s = vec![0.12; 8];
        s.extend([0.01, 0.005, 0.003, 0.002]);
        let sp = spectra_from([s.clone(), s.clone(), s]);
        assert_eq!(
            predict_uniqueness(&sp, [5, 5, 5], 0.01).unwrap().prediction,
            Prediction::NonUnique
        );
        assert_eq!(
            predict_uniqueness(&sp, [8, 8, 8], 0.01).unwrap().prediction,
            Prediction::Unique
        );
    }

    #[test]
    fn marginal_band() {
        let s = vec![1.0, 0.5, 0.485];
        let (g, v) = mode_vote(&s, 2, 0.01);
        assert!((g.unwrap() - 0.015).abs() < 1e-12);
        assert_eq!(v, Prediction::Marginal);
    }

    #[test]
    fn full_dims_are_exact() {
        let s = vec![0.5, 0.5];
        let p = predict_uniqueness(&spectra_from([s.clone(), s.clone(), s]), [2, 3, 2], 0.01).unwrap();
        assert_eq!(p.prediction, Prediction::Unique);
        assert!(p.note.is_some());
    }

    #[test]
    fn rank_one_spectra_without_centering() {
        let u = [1.0, 2.0, 3.0];
        let v = [1.0, -1.0];
        let w = [0.5, 1.5, 2.0, 1.0];
        let x = Tensor3::from_fn(3, 2, 4, |i, j, k| u[i] * v[j] * w[k]);
        let sp = identity_spectra(&x, Centering::None).unwrap();
        for s in &sp.spectra {
            assert!((s[0] - 1.0).abs() < 1e-12);
            assert!(s[1..].iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn centering_parse() {
        assert_eq!("grand".parse::<Centering>().unwrap(), Centering::Grand);
        assert!("mean".parse::<Centering>().is_err());
    }
}
