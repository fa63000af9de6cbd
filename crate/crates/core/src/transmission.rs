//! RIS transmission-phase configuration and link-level performance metrics.
//!
//! Once stage one has produced channel estimates, the RIS is configured for
//! data transmission with the single-user optimal phases: each diagonal entry
//! cancels the phase of the corresponding UE-RIS coefficient and of the RIS
//! steering entry, and a global factor aligns the reflected path with the
//! direct one. The module also provides the MRC SNR with imperfect CSI, the
//! framed spectral efficiency, Gaussian phase perturbation, the simplified
//! mean-SNR lower bound, and the two NMSE approximations used as diagnostics.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::channel::{steering_ris, wrap_angle, BrRay, ChannelRealization, SystemGeometry};
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::rng::{sample_gaussian, sample_phase};

// ============================================================================
// Phase configuration
// ============================================================================

/// Provenance of a phase configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSource {
    /// Built from the true channels.
    Perfect,
    /// Built from stage-one estimates.
    Estimated,
    /// Uniform random phases.
    Random,
    /// A perturbed copy of another configuration (std-dev in radians).
    GaussianPerturbed(f64),
}

/// Diagonal RIS phase configuration for data transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhaseConfig {
    /// Unit-modulus diagonal entries, length `N`.
    pub diagonal: CVec,
    /// Unit-modulus global factor aligning the reflected and direct paths.
    pub global_factor: Complex64,
    pub source: PhaseSource,
    /// Set when a zero-magnitude channel entry or a zero direct-path
    /// projection forced a default phase.
    pub flagged: bool,
}

fn phase_only(z: Complex64) -> Option<Complex64> {
    let r = z.norm();
    if r == 0.0 {
        None
    } else {
        Some(z / Complex64::new(r, 0.0))
    }
}

/// Single-user optimal RIS phases.
///
/// Entry `n` is `nu * u_n * exp(-j*angle(h_ru_n))` where `u_n` is the phase
/// of the `n`-th effective RIS direction entry and
/// `nu = a_b_eff^H h_bu / |a_b_eff^H h_bu|`. The effective direction vectors
/// are the LoS steering vectors, or the principal singular vectors of the
/// full RIS-BS channel when it is not rank-1; only their phases enter, so the
/// diagonal stays unit-modulus either way.
///
/// Zero-magnitude entries fall back to phase 0 and flag the configuration;
/// a zero direct-path projection falls back to `nu = 1`.
pub fn optimal_ris_phases(
    h_ru: &CVec,
    h_bu: &CVec,
    a_b_eff: &CVec,
    a_r_eff: &CVec,
    source: PhaseSource,
) -> Result<RisPhaseConfig> {
    let n = h_ru.len();
    if a_r_eff.len() != n {
        return Err(Error::dims(format!(
            "optimal_ris_phases: h_ru has {n} entries, a_r_eff {}",
            a_r_eff.len()
        )));
    }
    if a_b_eff.len() != h_bu.len() {
        return Err(Error::dims(format!(
            "optimal_ris_phases: h_bu has {} entries, a_b_eff {}",
            h_bu.len(),
            a_b_eff.len()
        )));
    }
    let mut flagged = false;
    let projection = a_b_eff.dotc(h_bu);
    let global_factor = match phase_only(projection) {
        Some(nu) => nu,
        None => {
            flagged = true;
            Complex64::new(1.0, 0.0)
        }
    };
    let diagonal = CVec::from_fn(n, |i, _| {
        let u = phase_only(a_r_eff[i]).unwrap_or_else(|| {
            flagged = true;
            Complex64::new(1.0, 0.0)
        });
        let conj_phase = match phase_only(h_ru[i]) {
            Some(p) => p.conj(),
            None => {
                flagged = true;
                Complex64::new(1.0, 0.0)
            }
        };
        global_factor * u * conj_phase
    });
    Ok(RisPhaseConfig {
        diagonal,
        global_factor,
        source,
        flagged,
    })
}

/// Uniform random transmission phases (the no-design baseline).
pub fn random_ris_phases(n: usize, rng: &mut ChaCha8Rng) -> RisPhaseConfig {
    let diagonal = CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, sample_phase(rng)));
    RisPhaseConfig {
        diagonal,
        global_factor: Complex64::new(1.0, 0.0),
        source: PhaseSource::Random,
        flagged: false,
    }
}

/// Rotate every diagonal entry by an independent `N(0, sigma_e^2)` phase.
pub fn gaussian_phase_perturb(
    base: &RisPhaseConfig,
    sigma_e: f64,
    rng: &mut ChaCha8Rng,
) -> RisPhaseConfig {
    let diagonal = base.diagonal.map(|z| {
        let e = sample_gaussian(rng, 0.0, sigma_e);
        z * Complex64::from_polar(1.0, e)
    });
    RisPhaseConfig {
        diagonal,
        global_factor: base.global_factor,
        source: PhaseSource::GaussianPerturbed(sigma_e),
        flagged: base.flagged,
    }
}

/// Mean squared wrapped phase difference between two configurations:
/// `(1/N) sum wrap(angle(a_ii) - angle(b_ii))^2` with wrapping to
/// `(-pi, pi]`.
pub fn ms_phase_error(a: &RisPhaseConfig, b: &RisPhaseConfig) -> Result<f64> {
    let n = a.diagonal.len();
    if b.diagonal.len() != n {
        return Err(Error::dims(format!(
            "ms_phase_error: configurations have {n} and {} entries",
            b.diagonal.len()
        )));
    }
    let sum: f64 = a
        .diagonal
        .iter()
        .zip(b.diagonal.iter())
        .map(|(x, y)| {
            let d = wrap_angle(x.arg() - y.arg());
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

// ============================================================================
// SNR and spectral efficiency
// ============================================================================

/// MRC SNR with imperfect CSI: the receiver combines with the estimate, and
/// the channel-error leakage is counted as extra noise:
/// `rho_d |h_hat^H h_hat|^2 / (rho_d |h_hat^H (h_hat - h)|^2 + ||h_hat||^2)`.
pub fn mrc_snr(h_hat: &CVec, h_true: &CVec, rho_d: f64) -> Result<f64> {
    if h_hat.len() != h_true.len() {
        return Err(Error::dims(format!(
            "mrc_snr: estimate has {} entries, channel {}",
            h_hat.len(),
            h_true.len()
        )));
    }
    if rho_d < 0.0 {
        return Err(Error::invalid("rho_d must be non-negative"));
    }
    let power = h_hat.norm_squared();
    if power == 0.0 {
        return Ok(0.0);
    }
    let err = h_hat - h_true;
    let leakage = h_hat.dotc(&err).norm_sqr();
    Ok(rho_d * power * power / (rho_d * leakage + power))
}

/// Framed spectral efficiency `((T - tau)/T) * log2(1 + snr)`.
pub fn spectral_efficiency(snr: f64, frame_len: usize, tau: usize) -> Result<f64> {
    if tau > frame_len {
        return Err(Error::invalid(format!(
            "pilot count {tau} exceeds frame length {frame_len}"
        )));
    }
    if frame_len == 0 {
        return Err(Error::invalid("frame length must be >= 1"));
    }
    if snr < 0.0 {
        return Err(Error::invalid("snr must be non-negative"));
    }
    let fraction = (frame_len - tau) as f64 / frame_len as f64;
    Ok(fraction * (1.0 + snr).log2())
}

/// First-order SE loss from Gaussian phase errors: `sigma_e^2 * log2(e)`.
pub fn se_drop_approx(sigma_e: f64) -> f64 {
    sigma_e * sigma_e * std::f64::consts::LOG2_E
}

// ============================================================================
// Simplified mean-SNR analysis
// ============================================================================

/// The three terms of the mean-SNR decomposition under optimal phases and a
/// pure-LoS RIS-BS channel: direct power, direct/reflected cross term, and
/// reflected power. All are normalized by the data SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSnrTerms {
    /// `M * beta_bu`.
    pub direct: f64,
    /// `2 sqrt(beta_br) * E|a_b^H h_bu| * E[sum |h_ru_n|]`.
    pub cross: f64,
    /// `beta_br * M * E[(sum |h_ru_n|)^2]`.
    pub reflected: f64,
}

impl MeanSnrTerms {
    /// Mean SNR with perfectly aligned phases: `rho_d (S1 + S2 + S3)`.
    pub fn optimal(&self, rho_d: f64) -> f64 {
        rho_d * (self.direct + self.cross + self.reflected)
    }

    /// Lower bound on the mean SNR with `N(0, sigma_e^2)` phase errors:
    /// `rho_d (S1 + S2 e^{-sigma^2/2} + S3 e^{-sigma^2})`.
    pub fn lower_bound(&self, rho_d: f64, sigma_e: f64) -> f64 {
        let v = sigma_e * sigma_e;
        rho_d
            * (self.direct
                + self.cross * (-v / 2.0).exp()
                + self.reflected * (-v).exp())
    }
}

/// Estimate the mean-SNR terms by Monte Carlo over an ensemble of pure-LoS
/// channel draws sharing the same large-scale gains.
pub fn mean_snr_terms(draws: &[ChannelRealization], a_b_los: &CVec) -> Result<MeanSnrTerms> {
    if draws.is_empty() {
        return Err(Error::invalid("mean_snr_terms needs at least one draw"));
    }
    let gains = &draws[0].gains;
    let m = draws[0].h_bu.len();
    if a_b_los.len() != m {
        return Err(Error::dims(format!(
            "mean_snr_terms: a_b has {} entries, h_bu {m}",
            a_b_los.len()
        )));
    }
    let mut xi = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_abs_sq = 0.0;
    for draw in draws {
        if draw.h_br_scatter.norm() != 0.0 {
            return Err(Error::invalid(
                "mean_snr_terms assumes a pure-LoS RIS-BS channel",
            ));
        }
        if draw.gains != *gains {
            return Err(Error::invalid(
                "mean_snr_terms draws must share large-scale gains",
            ));
        }
        xi += a_b_los.dotc(&draw.h_bu).norm();
        let s: f64 = draw.h_ru.iter().map(|z| z.norm()).sum();
        sum_abs += s;
        sum_abs_sq += s * s;
    }
    let count = draws.len() as f64;
    xi /= count;
    sum_abs /= count;
    sum_abs_sq /= count;
    Ok(MeanSnrTerms {
        direct: m as f64 * gains.beta_bu,
        cross: 2.0 * gains.beta_br.sqrt() * xi * sum_abs,
        reflected: gains.beta_br * m as f64 * sum_abs_sq,
    })
}

// ============================================================================
// NMSE approximations
// ============================================================================

/// One draw for the high-K NMSE approximation.
#[derive(Debug, Clone)]
pub struct HighKSample {
    /// Stage-one RIS-channel estimate (its phases weight the error).
    pub h_ru_hat: CVec,
    /// Estimation error `h_ru - h_ru_hat`.
    pub eps_ru: CVec,
    /// True total channel of the draw.
    pub h_tot: CVec,
}

/// High-K NMSE ratio: `E[|sum_n exp(-j*angle(h_hat_n)) eps_n|^2] /
/// E[||h_tot||^2]`. The approximate NMSE is this ratio scaled by
/// `M * beta_br`.
pub fn nmse_high_k_ratio(samples: &[HighKSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("nmse_high_k_ratio needs at least one draw"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        if s.h_ru_hat.len() != s.eps_ru.len() {
            return Err(Error::dims(
                "nmse_high_k_ratio: estimate/error lengths differ".to_string(),
            ));
        }
        let mut aligned = Complex64::new(0.0, 0.0);
        for (hat, eps) in s.h_ru_hat.iter().zip(s.eps_ru.iter()) {
            let phase = phase_only(*hat).unwrap_or(Complex64::new(1.0, 0.0));
            aligned += phase.conj() * eps;
        }
        num += aligned.norm_sqr();
        den += s.h_tot.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::invalid("nmse_high_k_ratio: zero total-channel power"));
    }
    Ok(num / den)
}

/// Moderate-K NMSE numerator for one draw:
/// `M * sum_rays power * |a_r(ray)^H diag(a_r_los) |h_ru_hat||^2`. A pure-LoS
/// draw (no rays) gives 0.
pub fn scatter_alignment_term(
    rays: &[BrRay],
    geometry: &SystemGeometry,
    h_ru_hat: &CVec,
) -> Result<f64> {
    let n = geometry.ris_elements();
    if h_ru_hat.len() != n {
        return Err(Error::dims(format!(
            "scatter_alignment_term: estimate has {} entries, expected {n}",
            h_ru_hat.len()
        )));
    }
    let a_los = geometry.ris_los_steering();
    let magnitudes: Vec<f64> = h_ru_hat.iter().map(|z| z.norm()).collect();
    let mut acc = 0.0;
    for ray in rays {
        let a_ray = steering_ris(
            ray.ris_azimuth,
            ray.ris_elevation,
            geometry.ris_columns,
            geometry.ris_rows,
            geometry.ris_spacing,
        );
        let mut inner = Complex64::new(0.0, 0.0);
        for i in 0..n {
            inner += a_ray[i].conj() * a_los[i] * Complex64::new(magnitudes[i], 0.0);
        }
        acc += ray.power * inner.norm_sqr();
    }
    Ok(geometry.bs_antennas as f64 * acc)
}

/// Metrics of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceSample {
    /// Post-combining SNR (linear).
    pub snr: f64,
    /// Framed spectral efficiency (bits/s/Hz).
    pub se: f64,
    /// Mean squared wrapped phase error of the transmission phases (rad^2).
    pub ms_phase_error: f64,
    /// Stage-one total-channel NMSE.
    pub nmse: f64,
    /// Data-phase SNR used for this sample (linear).
    pub rho_d: f64,
    /// Frame length in symbols.
    pub frame_len: usize,
}
