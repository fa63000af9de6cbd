//! Two-stage channel estimation.
//!
//! Stage one stacks the `tau_1` pilot observations into one tall linear
//! system whose unknowns are the UE-RIS channel at the active elements and
//! the direct UE-BS channel, solves it in the least-squares sense using the
//! known specular RIS-BS component, and fills in the inactive RIS elements by
//! per-column interpolation. Stage two spends `tau_2` extra pilots on the
//! configured end-to-end channel and either refines or re-estimates the total
//! channel for uplink combining.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::total_channel;
use crate::error::{Error, Result};
use crate::linalg::{guarded_solve, CMat, CVec};
use crate::rng::sample_complex_normal;
use crate::training::TrainingDesign;

// ============================================================================
// Active-element selection and interpolation
// ============================================================================

/// Per-column reconstruction method; fixes the number of active elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    /// Middle element only; the column is assumed constant (`N' = N_y`).
    OnePt,
    /// Top and bottom elements, complex-linear in between (`N' = 2 N_y`).
    TwoPt,
    /// Top, middle, bottom; minimum-curvature quadratic (`N' = 3 N_y`).
    ThreePt,
    /// Every element active, no interpolation (`N' = N`).
    NzPt,
}

impl InterpolationMethod {
    pub fn label(&self) -> &'static str {
        match self {
            InterpolationMethod::OnePt => "1pt",
            InterpolationMethod::TwoPt => "2pt",
            InterpolationMethod::ThreePt => "3pt",
            InterpolationMethod::NzPt => "nzpt",
        }
    }

    /// Active elements per column.
    pub fn points_per_column(&self, n_z: usize) -> usize {
        match self {
            InterpolationMethod::OnePt => 1,
            InterpolationMethod::TwoPt => 2,
            InterpolationMethod::ThreePt => 3,
            InterpolationMethod::NzPt => n_z,
        }
    }

    /// Total active-element count `N'`.
    pub fn n_prime(&self, n_y: usize, n_z: usize) -> usize {
        n_y * self.points_per_column(n_z)
    }
}

/// 0-based middle row: row `N_z/2` in 1-based terms for even `N_z`,
/// `(N_z+1)/2` for odd.
fn middle_row(n_z: usize) -> usize {
    (n_z - 1) / 2
}

/// Normalized abscissa of a 0-based row on `[-1, 1]`.
fn row_abscissa(row: usize, n_z: usize) -> f64 {
    if n_z == 1 {
        0.0
    } else {
        2.0 * row as f64 / (n_z - 1) as f64 - 1.0
    }
}

/// Global RIS element indices (0-based, column-major) that are active for
/// `method`. Within each column the indices are ascending rows, i.e. top,
/// (middle,) bottom.
pub fn active_indices(
    method: InterpolationMethod,
    n_y: usize,
    n_z: usize,
) -> Result<Vec<usize>> {
    if n_y == 0 || n_z == 0 {
        return Err(Error::invalid("active_indices needs n_y, n_z >= 1"));
    }
    match method {
        InterpolationMethod::TwoPt if n_z < 2 => {
            return Err(Error::invalid("2-pt interpolation needs N_z >= 2"));
        }
        InterpolationMethod::ThreePt if n_z < 3 => {
            return Err(Error::invalid("3-pt interpolation needs N_z >= 3"));
        }
        _ => {}
    }
    let mut indices = Vec::with_capacity(method.n_prime(n_y, n_z));
    for y in 0..n_y {
        let base = y * n_z;
        match method {
            InterpolationMethod::OnePt => indices.push(base + middle_row(n_z)),
            InterpolationMethod::TwoPt => {
                indices.push(base);
                indices.push(base + n_z - 1);
            }
            InterpolationMethod::ThreePt => {
                indices.push(base);
                indices.push(base + middle_row(n_z));
                indices.push(base + n_z - 1);
            }
            InterpolationMethod::NzPt => indices.extend(base..base + n_z),
        }
    }
    Ok(indices)
}

/// Reconstruct one RIS column of length `n_z` from its active-element
/// estimates.
///
/// - one value: constant column;
/// - two values `[top, bottom]`: complex-linear between the end rows;
/// - three values `[top, middle, bottom]`: the quadratic `q(t)` through the
///   points at normalized abscissae `{-1, t_mid, +1}` (the phase-rotation
///   family by whole turns about the middle estimate collapses to this single
///   minimum-curvature fit in the complex plane), evaluated at every row;
/// - `n_z` values: returned as-is.
pub fn interpolate_column(
    values: &[Complex64],
    method: InterpolationMethod,
    n_z: usize,
) -> Result<Vec<Complex64>> {
    let expected = method.points_per_column(n_z);
    if values.len() != expected {
        return Err(Error::dims(format!(
            "{} interpolation expects {expected} values per column, got {}",
            method.label(),
            values.len()
        )));
    }
    match method {
        InterpolationMethod::OnePt => Ok(vec![values[0]; n_z]),
        InterpolationMethod::TwoPt => {
            if n_z < 2 {
                return Err(Error::invalid("2-pt interpolation needs N_z >= 2"));
            }
            let (top, bottom) = (values[0], values[1]);
            Ok((0..n_z)
                .map(|k| {
                    let frac = k as f64 / (n_z - 1) as f64;
                    top + (bottom - top) * Complex64::new(frac, 0.0)
                })
                .collect())
        }
        InterpolationMethod::ThreePt => {
            if n_z < 3 {
                return Err(Error::invalid("3-pt interpolation needs N_z >= 3"));
            }
            let (top, middle, bottom) = (values[0], values[1], values[2]);
            let t_mid = row_abscissa(middle_row(n_z), n_z);
            // Lagrange basis over {-1, t_mid, +1}.
            let denom_top = (-1.0 - t_mid) * (-2.0);
            let denom_mid = (t_mid + 1.0) * (t_mid - 1.0);
            let denom_bot = (1.0 - t_mid) * 2.0;
            Ok((0..n_z)
                .map(|k| {
                    let t = row_abscissa(k, n_z);
                    let l_top = (t - t_mid) * (t - 1.0) / denom_top;
                    let l_mid = (t + 1.0) * (t - 1.0) / denom_mid;
                    let l_bot = (t + 1.0) * (t - t_mid) / denom_bot;
                    top * Complex64::new(l_top, 0.0)
                        + middle * Complex64::new(l_mid, 0.0)
                        + bottom * Complex64::new(l_bot, 0.0)
                })
                .collect())
        }
        InterpolationMethod::NzPt => Ok(values.to_vec()),
    }
}

/// Expand active-element estimates (ordered as [`active_indices`]) to the
/// full length-`N` RIS channel estimate.
pub fn interpolate_ru(
    h_active: &CVec,
    method: InterpolationMethod,
    n_y: usize,
    n_z: usize,
) -> Result<CVec> {
    let per_col = method.points_per_column(n_z);
    if h_active.len() != n_y * per_col {
        return Err(Error::dims(format!(
            "active estimate has length {}, expected {}",
            h_active.len(),
            n_y * per_col
        )));
    }
    let mut full = CVec::zeros(n_y * n_z);
    for y in 0..n_y {
        let column: Vec<Complex64> =
            (0..per_col).map(|k| h_active[y * per_col + k]).collect();
        let filled = interpolate_column(&column, method, n_z)?;
        for (z, v) in filled.into_iter().enumerate() {
            full[y * n_z + z] = v;
        }
    }
    Ok(full)
}

// ============================================================================
// Stage 1: stacked linear estimation
// ============================================================================

/// Stack the `tau_1` pilot observations.
///
/// Block `t` is `sqrt(rho) * (H_active diag(psi_t) h_ru_active + h_bu)` plus
/// unit-variance complex Gaussian noise (`rng = None` for the noiseless
/// mode). Pilot symbols are fixed at 1: they only scale the measurements.
/// Returns the received vector and the drawn noise.
pub fn stack_received(
    h_br_active: &CMat,
    design: &TrainingDesign,
    h_ru_active: &CVec,
    h_bu: &CVec,
    rho: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(CVec, CVec)> {
    let (m, n_active) = h_br_active.shape();
    if design.n_prime() != n_active || h_ru_active.len() != n_active {
        return Err(Error::dims(format!(
            "stack_received: H' is {m}x{n_active}, design N' = {}, h_ru' = {}",
            design.n_prime(),
            h_ru_active.len()
        )));
    }
    if h_bu.len() != m {
        return Err(Error::dims(format!(
            "stack_received: H' has {m} rows, h_bu has {}",
            h_bu.len()
        )));
    }
    let tau_1 = design.tau_1();
    let sqrt_rho = Complex64::new(rho.sqrt(), 0.0);
    let mut noise = CVec::zeros(m * tau_1);
    if let Some(rng) = rng {
        for k in 0..m * tau_1 {
            noise[k] = sample_complex_normal(rng);
        }
    }
    let mut received = CVec::zeros(m * tau_1);
    for t in 0..tau_1 {
        let phased = CVec::from_fn(n_active, |n, _| design.phases[(n, t)] * h_ru_active[n]);
        let block = (h_br_active * phased + h_bu) * sqrt_rho;
        for i in 0..m {
            received[t * m + i] = block[i] + noise[t * m + i];
        }
    }
    Ok((received, noise))
}

/// Build the estimation matrix from the known specular RIS-BS columns:
/// block row `t` is `sqrt(rho) * [H_los_active diag(psi_t) | I_M]`.
pub fn build_vhat(h_br_los_active: &CMat, design: &TrainingDesign, rho: f64) -> Result<CMat> {
    let (m, n_active) = h_br_los_active.shape();
    if design.n_prime() != n_active {
        return Err(Error::dims(format!(
            "build_vhat: H' is {m}x{n_active} but design N' = {}",
            design.n_prime()
        )));
    }
    let tau_1 = design.tau_1();
    let sqrt_rho = Complex64::new(rho.sqrt(), 0.0);
    let mut v_hat = CMat::zeros(m * tau_1, n_active + m);
    for t in 0..tau_1 {
        for n in 0..n_active {
            let psi = design.phases[(n, t)];
            for i in 0..m {
                v_hat[(t * m + i, n)] = sqrt_rho * h_br_los_active[(i, n)] * psi;
            }
        }
        for i in 0..m {
            v_hat[(t * m + i, n_active + i)] = sqrt_rho;
        }
    }
    Ok(v_hat)
}

/// Least-squares estimate: solve `(V^H V) x = V^H r` and split the solution
/// into the active RIS part (first `n_prime` entries) and the direct part.
pub fn lmmse_estimate(v_hat: &CMat, received: &CVec, n_prime: usize) -> Result<(CVec, CVec)> {
    if v_hat.nrows() != received.len() {
        return Err(Error::dims(format!(
            "lmmse_estimate: V is {}x{}, r has {}",
            v_hat.nrows(),
            v_hat.ncols(),
            received.len()
        )));
    }
    if n_prime >= v_hat.ncols() {
        return Err(Error::dims(format!(
            "lmmse_estimate: split index {n_prime} out of range for {} unknowns",
            v_hat.ncols()
        )));
    }
    let gram = v_hat.adjoint() * v_hat;
    let rhs = v_hat.adjoint() * received;
    let solution = guarded_solve(&gram, &rhs)?;
    let m = v_hat.ncols() - n_prime;
    let h_ru = CVec::from_fn(n_prime, |i, _| solution[i]);
    let h_bu = CVec::from_fn(m, |i, _| solution[n_prime + i]);
    Ok((h_ru, h_bu))
}

/// Split the stage-one estimation error into the scatter-induced part and the
/// processed-noise part: the noise part is `(V^H V)^{-1} V^H n`, the scatter
/// part is the remainder of `estimate - truth`.
pub fn error_components(
    v_hat: &CMat,
    noise: &CVec,
    estimate: (&CVec, &CVec),
    truth: (&CVec, &CVec),
) -> Result<(CVec, CVec)> {
    let n_prime = estimate.0.len();
    let m = estimate.1.len();
    if truth.0.len() != n_prime || truth.1.len() != m {
        return Err(Error::dims(
            "error_components: estimate/truth shapes differ".to_string(),
        ));
    }
    let gram = v_hat.adjoint() * v_hat;
    let rhs = v_hat.adjoint() * noise;
    let eps2 = guarded_solve(&gram, &rhs)?;
    let mut eps1 = CVec::zeros(n_prime + m);
    for i in 0..n_prime {
        eps1[i] = estimate.0[i] - truth.0[i] - eps2[i];
    }
    for i in 0..m {
        eps1[n_prime + i] = estimate.1[i] - truth.1[i] - eps2[n_prime + i];
    }
    Ok((eps1, eps2))
}

/// Stage-one total-channel estimate `H_los * diag(phi) * h_ru_hat + h_bu_hat`
/// (the BS only knows the specular RIS-BS component).
pub fn stage1_total_estimate(
    h_br_los_full: &CMat,
    phi_diag: &CVec,
    h_ru_hat: &CVec,
    h_bu_hat: &CVec,
) -> Result<CVec> {
    total_channel(h_br_los_full, phi_diag, h_ru_hat, h_bu_hat)
}

// ============================================================================
// Stage 2: refinement
// ============================================================================

/// Stage-two weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Mode {
    /// Weighted average of the stage-one estimate and the new measurements:
    /// weights `[1, tau_2] / (tau_2 + 1)`.
    Refine,
    /// Discard the stage-one estimate; average the new measurements only.
    Reestimate,
}

/// Combine the stage-one estimate with `tau_2` stage-two measurements
/// `y_t = sqrt(rho) h_tot + n_t`.
pub fn stage2_refine(
    h_tot_stage1: &CVec,
    measurements: &[CVec],
    rho: f64,
    mode: Stage2Mode,
) -> Result<CVec> {
    let tau_2 = measurements.len();
    for y in measurements {
        if y.len() != h_tot_stage1.len() {
            return Err(Error::dims(format!(
                "stage2 measurement has length {}, expected {}",
                y.len(),
                h_tot_stage1.len()
            )));
        }
    }
    let (w1, w2) = match mode {
        Stage2Mode::Refine => {
            if tau_2 == 0 {
                return Ok(h_tot_stage1.clone());
            }
            (
                1.0 / (tau_2 as f64 + 1.0),
                tau_2 as f64 / (tau_2 as f64 + 1.0),
            )
        }
        Stage2Mode::Reestimate => {
            if tau_2 == 0 {
                return Err(Error::invalid(
                    "re-estimation needs at least one stage-2 pilot",
                ));
            }
            (0.0, 1.0)
        }
    };
    let mut sum = CVec::zeros(h_tot_stage1.len());
    for y in measurements {
        sum += y;
    }
    let scale = Complex64::new(w2 / (tau_2 as f64 * rho.sqrt()), 0.0);
    Ok(h_tot_stage1 * Complex64::new(w1, 0.0) + sum * scale)
}

// ============================================================================
// Outcome bundle
// ============================================================================

/// Everything the transmission stage needs from the estimation protocol.
#[derive(Debug, Clone)]
pub struct EstimationOutcome {
    /// Active-element estimates, ordered as [`active_indices`].
    pub h_ru_active_hat: CVec,
    /// Direct-channel estimate.
    pub h_bu_hat: CVec,
    /// Interpolated full RIS channel estimate.
    pub h_ru_hat: CVec,
    /// Stage-one total-channel estimate.
    pub h_tot_stage1: CVec,
    /// Stage-two refined/re-estimated total channel.
    pub h_tot_refined: CVec,
    /// Scatter-induced stage-one error (length `N' + M`), filled only when
    /// the truth was supplied for diagnostics.
    pub scatter_error: Option<CVec>,
    /// Processed-noise stage-one error, same convention.
    pub noise_error: Option<CVec>,
    /// Uplink training SNR (linear).
    pub rho: f64,
    pub tau_1: usize,
    pub tau_2: usize,
}
