//! RIS training-phase matrices and their accumulators.
//!
//! A design is an `N' x tau_1` matrix whose columns set the RIS phases during
//! the `tau_1` pilot symbols of stage one. Three quantities derived from the
//! columns `psi_t` drive every closed-form error expression downstream:
//!
//! - the phase Gram matrix `sum_t psi_t^* psi_t^T`,
//! - the conjugated column sum `sum_t psi_t^*`,
//! - the Schur scalar `tau_1 - s^H G^{-1} s` (with `G` the Gram matrix and
//!   `s` the column sum), which must stay positive for the joint estimate of
//!   the direct and RIS channels to be identifiable.
//!
//! The modified-DFT design (last `N'` rows of an `(N'+1) x (N'+1)` DFT
//! matrix) makes the Gram matrix a scaled identity and the column sum zero;
//! those accumulators are stored in exact closed form. The generic
//! [`accumulators`] routine recomputes them numerically and serves as the
//! oracle for the closed forms.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{guarded_solve, CMat, CVec};
use crate::rng::sample_phase;

/// Training-phase matrix families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingKind {
    /// Last `N'` rows of an `(N'+1) x (N'+1)` DFT matrix.
    Mdft,
    /// `N' x N'` DFT matrix plus one arbitrary unit-modulus column.
    DftPlus,
    /// Independent uniform phases.
    Random,
    /// One active element per symbol, cycling through the elements.
    Identity,
}

impl TrainingKind {
    pub fn label(&self) -> &'static str {
        match self {
            TrainingKind::Mdft => "mdft",
            TrainingKind::DftPlus => "dft",
            TrainingKind::Random => "random",
            TrainingKind::Identity => "identity",
        }
    }
}

/// Numeric accumulators of a phase matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulators {
    /// `sum_t psi_t^* psi_t^T` (Hermitian PSD).
    pub phase_gram: CMat,
    /// `sum_t psi_t^*`.
    pub phase_sum: CVec,
    /// `tau_1 - s^H G^{-1} s`.
    pub schur_scalar: f64,
}

/// A training-phase matrix together with its accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDesign {
    pub kind: TrainingKind,
    /// `N' x tau_1`; column `t` is the phase vector of pilot symbol `t`.
    pub phases: CMat,
    pub phase_gram: CMat,
    pub phase_sum: CVec,
    pub schur_scalar: f64,
}

impl TrainingDesign {
    /// Modified-DFT design with `tau_1 = N' + 1`.
    ///
    /// Entry `(n, t)` is `exp(j*(n+1)*t*2*pi/(N'+1))` for 0-based `n`, `t`.
    /// The accumulators are exact: Gram `= (N'+1) I`, column sum `= 0`,
    /// Schur scalar `= tau_1`.
    pub fn mdft(n_prime: usize) -> Result<Self> {
        if n_prime == 0 {
            return Err(Error::invalid("training design needs N' >= 1"));
        }
        let tau_1 = n_prime + 1;
        let x = TAU / tau_1 as f64;
        let phases = CMat::from_fn(n_prime, tau_1, |n, t| {
            Complex64::from_polar(1.0, ((n + 1) * t) as f64 * x)
        });
        let scale = Complex64::new(tau_1 as f64, 0.0);
        Ok(TrainingDesign {
            kind: TrainingKind::Mdft,
            phases,
            phase_gram: CMat::identity(n_prime, n_prime) * scale,
            phase_sum: CVec::zeros(n_prime),
            schur_scalar: tau_1 as f64,
        })
    }

    /// DFT design: the `N'` columns of an `N' x N'` DFT matrix followed by an
    /// arbitrary unit-modulus column `w`. Accumulators are exact closed
    /// forms: Gram `= N' I + w^* w^T`, column sum `= N' e_1 + w^*`, Schur
    /// scalar `= 1 - Re(w_1)`.
    pub fn dft_plus(n_prime: usize, extra_column: &CVec) -> Result<Self> {
        if n_prime == 0 {
            return Err(Error::invalid("training design needs N' >= 1"));
        }
        if extra_column.len() != n_prime {
            return Err(Error::dims(format!(
                "extra column has length {}, expected {n_prime}",
                extra_column.len()
            )));
        }
        for (k, w) in extra_column.iter().enumerate() {
            if (w.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "extra column entry {k} has modulus {}, expected 1",
                    w.norm()
                )));
            }
        }
        let tau_1 = n_prime + 1;
        let x = TAU / n_prime as f64;
        let phases = CMat::from_fn(n_prime, tau_1, |n, t| {
            if t < n_prime {
                Complex64::from_polar(1.0, (n * t) as f64 * x)
            } else {
                extra_column[n]
            }
        });
        let w_conj = extra_column.map(|w| w.conj());
        // Gram = N' I + w^* (w^*)^H-conjugate = N' I + w^* w^T.
        let mut phase_gram =
            CMat::identity(n_prime, n_prime) * Complex64::new(n_prime as f64, 0.0);
        for i in 0..n_prime {
            for j in 0..n_prime {
                phase_gram[(i, j)] += w_conj[i] * extra_column[j];
            }
        }
        let mut phase_sum = w_conj;
        phase_sum[0] += Complex64::new(n_prime as f64, 0.0);
        let schur_scalar = 1.0 - extra_column[0].re;
        Ok(TrainingDesign {
            kind: TrainingKind::DftPlus,
            phases,
            phase_gram,
            phase_sum,
            schur_scalar,
        })
    }

    /// DFT design with the default extra column of all `-1` entries (the
    /// first-entry choice that minimizes the RIS-block error trace).
    pub fn dft_plus_default(n_prime: usize) -> Result<Self> {
        let w = CVec::from_element(n_prime, Complex64::new(-1.0, 0.0));
        Self::dft_plus(n_prime, &w)
    }

    /// Independent uniform phases; requires `tau_1 >= N' + 1` so the stacked
    /// system is identifiable.
    pub fn random(n_prime: usize, tau_1: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n_prime == 0 {
            return Err(Error::invalid("training design needs N' >= 1"));
        }
        if tau_1 < n_prime + 1 {
            return Err(Error::invalid(format!(
                "random design needs tau_1 >= N' + 1, got tau_1 = {tau_1}, N' = {n_prime}"
            )));
        }
        let mut phases = CMat::zeros(n_prime, tau_1);
        for t in 0..tau_1 {
            for n in 0..n_prime {
                phases[(n, t)] = Complex64::from_polar(1.0, sample_phase(rng));
            }
        }
        let acc = accumulators(&phases)?;
        Ok(TrainingDesign {
            kind: TrainingKind::Random,
            phases,
            phase_gram: acc.phase_gram,
            phase_sum: acc.phase_sum,
            schur_scalar: acc.schur_scalar,
        })
    }

    /// One active element per symbol, cycling through the `N'` elements.
    /// Inactive entries are zero, so this kind is exempt from the
    /// unit-modulus invariant. The design is always degenerate for the joint
    /// direct/RIS estimation (Schur scalar 0); it exists as the baseline that
    /// exercises the singular paths.
    pub fn identity(n_prime: usize, tau_1: usize) -> Result<Self> {
        if n_prime == 0 || tau_1 == 0 {
            return Err(Error::invalid(
                "identity design needs N' >= 1 and tau_1 >= 1",
            ));
        }
        let phases = CMat::from_fn(n_prime, tau_1, |n, t| {
            if n == t % n_prime {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let acc = accumulators(&phases)?;
        Ok(TrainingDesign {
            kind: TrainingKind::Identity,
            phases,
            phase_gram: acc.phase_gram,
            phase_sum: acc.phase_sum,
            schur_scalar: acc.schur_scalar,
        })
    }

    /// Active-element count `N'`.
    pub fn n_prime(&self) -> usize {
        self.phases.nrows()
    }

    /// Pilot count `tau_1`.
    pub fn tau_1(&self) -> usize {
        self.phases.ncols()
    }

    /// Phase vector of pilot symbol `t`.
    pub fn column(&self, t: usize) -> CVec {
        CVec::from_fn(self.n_prime(), |n, _| self.phases[(n, t)])
    }
}

/// Numerically accumulate the Gram matrix, column sum, and Schur scalar of a
/// phase matrix. The Schur scalar is computed through a pivoted linear solve;
/// a Gram matrix with condition estimate above 1e12 is reported as a singular
/// design.
pub fn accumulators(phases: &CMat) -> Result<Accumulators> {
    let (n_prime, tau_1) = phases.shape();
    if n_prime == 0 || tau_1 == 0 {
        return Err(Error::invalid("accumulators need a non-empty phase matrix"));
    }
    let mut gram = CMat::zeros(n_prime, n_prime);
    let mut sum = CVec::zeros(n_prime);
    for t in 0..tau_1 {
        for i in 0..n_prime {
            let ci = phases[(i, t)].conj();
            for j in 0..n_prime {
                gram[(i, j)] += ci * phases[(j, t)];
            }
            sum[i] += ci;
        }
    }
    let solved = guarded_solve(&gram, &sum)?;
    let quad = sum.dotc(&solved).re;
    Ok(Accumulators {
        phase_gram: gram,
        phase_sum: sum,
        schur_scalar: tau_1 as f64 - quad,
    })
}
