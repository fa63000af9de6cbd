//! Closed-form estimation-error covariance and the optimal-design
//! certificate.
//!
//! For the stage-one stacked system the processed-noise error covariance is
//! `rho^{-1} X` where `X` is the inverse of the block Gram matrix
//! `[[A, C^H], [C, D]]` built from the training accumulators. Because the
//! specular RIS-BS component is rank-1, every block of the inverse reduces to
//! a rank-1 correction of a diagonal-similar matrix; this module evaluates
//! those closed forms and cross-checks them against the dense inverse in the
//! tests.
//!
//! The scatter-induced error has the form `[Y_ru; Y_bu]` where `Y_ru` does
//! not depend on the training phases at all, and `Y_bu` is proportional to
//! the conjugated phase column sum (hence exactly zero for the modified-DFT
//! design). [`rank_designs`] reports the error traces per design together
//! with the Gram-inverse trace and its lower bound `N'/tau_1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{guarded_solve, guarded_solve_mat, outer, CMat, CVec};
use crate::training::{TrainingDesign, TrainingKind};

/// Degeneracy threshold for the Schur scalar.
const SCHUR_EPS: f64 = 1e-12;

// ============================================================================
// Covariance blocks
// ============================================================================

/// The blocks of `X = rho * (V^H V)^{-1}` plus the Gram blocks they came
/// from. `ru` is the covariance block of the active-RIS-channel estimate
/// error, `bu` the direct-channel block, `cross` the `M x N'` coupling.
#[derive(Debug, Clone)]
pub struct ErrorCovariance {
    pub ru: CMat,
    pub cross: CMat,
    pub bu: CMat,
    /// Upper-left Gram block `A` (RIS part).
    pub gram_ru: CMat,
    /// Lower-left Gram block `C` (coupling).
    pub gram_cross: CMat,
    /// Lower-right Gram block `D = tau_1 I`.
    pub gram_bu: CMat,
}

impl ErrorCovariance {
    /// Assembled `X` matrix `[[ru, cross^H], [cross, bu]]`.
    pub fn assembled(&self) -> CMat {
        let n_prime = self.ru.nrows();
        let m = self.bu.nrows();
        let mut x = CMat::zeros(n_prime + m, n_prime + m);
        x.view_mut((0, 0), (n_prime, n_prime)).copy_from(&self.ru);
        x.view_mut((0, n_prime), (n_prime, m))
            .copy_from(&self.cross.adjoint());
        x.view_mut((n_prime, 0), (m, n_prime)).copy_from(&self.cross);
        x.view_mut((n_prime, n_prime), (m, m)).copy_from(&self.bu);
        x
    }

    pub fn trace_ru(&self) -> f64 {
        self.ru.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn trace_bu(&self) -> f64 {
        self.bu.diagonal().iter().map(|z| z.re).sum()
    }
}

/// Evaluate the closed-form blocks of `X` for a design and the LoS steering
/// vectors (`a_r_los` restricted to the active elements).
///
/// With `G` the phase Gram matrix, `s` the column sum, `alpha` the Schur
/// scalar, and `R = diag(a_r_los)`:
///
/// - `ru    = (M b)^{-1} [R G^{-1} R^H + alpha^{-1} R G^{-1} s s^H G^{-1} R^H]`
/// - `cross = -(alpha^2 M^2 b)^{-1/2} a_b (s^H G^{-1} R^H)`
/// - `bu    = tau_1^{-1} [I + (s^H G^{-1} s / (M alpha)) a_b a_b^H]`
pub fn covariance_blocks(
    design: &TrainingDesign,
    m: usize,
    beta_bar: f64,
    a_b_los: &CVec,
    a_r_los: &CVec,
) -> Result<ErrorCovariance> {
    let n_prime = design.n_prime();
    if a_r_los.len() != n_prime {
        return Err(Error::dims(format!(
            "a_r_los has length {}, design N' = {n_prime}",
            a_r_los.len()
        )));
    }
    if a_b_los.len() != m {
        return Err(Error::dims(format!(
            "a_b_los has length {}, expected M = {m}",
            a_b_los.len()
        )));
    }
    if beta_bar <= 0.0 {
        return Err(Error::invalid("beta_bar must be positive"));
    }
    let alpha = design.schur_scalar;
    if alpha <= SCHUR_EPS {
        return Err(Error::DegenerateDesign(format!(
            "Schur scalar {alpha:.3e}; the cross block cancels the RIS block"
        )));
    }
    let tau_1 = design.tau_1() as f64;
    let m_f = m as f64;

    // G^{-1} and G^{-1} s via solves; R applied as an elementwise scale.
    let gram = &design.phase_gram;
    let gram_inv = guarded_solve_mat(gram, &CMat::identity(n_prime, n_prime))?;
    let gram_inv_sum = guarded_solve(gram, &design.phase_sum)?;
    let quad = design.phase_sum.dotc(&gram_inv_sum).re;

    let scale_r = |mat: &CMat| -> CMat {
        // R M R^H: row i scaled by a_r[i], column j by conj(a_r[j]).
        CMat::from_fn(mat.nrows(), mat.ncols(), |i, j| {
            a_r_los[i] * mat[(i, j)] * a_r_los[j].conj()
        })
    };

    let correction = outer(&gram_inv_sum, &gram_inv_sum) / Complex64::new(alpha, 0.0);
    let ru = scale_r(&(&gram_inv + &correction)) / Complex64::new(m_f * beta_bar, 0.0);

    // cross = -(alpha^2 M^2 b)^{-1/2} a_b s^H G^{-1} R^H
    let row = CVec::from_fn(n_prime, |i, _| gram_inv_sum[i].conj() * a_r_los[i].conj());
    let cross_scale = Complex64::new(-1.0 / (alpha * m_f * beta_bar.sqrt()), 0.0);
    let cross = CMat::from_fn(m, n_prime, |i, j| cross_scale * a_b_los[i] * row[j]);

    let bu_correction = outer(a_b_los, a_b_los) * Complex64::new(quad / (m_f * alpha), 0.0);
    let bu = (CMat::identity(m, m) + bu_correction) / Complex64::new(tau_1, 0.0);

    // Gram blocks, for reference and assembly checks.
    let gram_ru = scale_r(gram) * Complex64::new(m_f * beta_bar, 0.0);
    let col = CVec::from_fn(n_prime, |i, _| {
        design.phase_sum[i].conj() * a_r_los[i].conj()
    });
    let gram_cross =
        CMat::from_fn(m, n_prime, |i, j| a_b_los[i] * col[j]) * Complex64::new(beta_bar.sqrt(), 0.0);
    let gram_bu = CMat::identity(m, m) * Complex64::new(tau_1, 0.0);

    Ok(ErrorCovariance {
        ru,
        cross,
        bu,
        gram_ru,
        gram_cross,
        gram_bu,
    })
}

/// Trace of the RIS block for a DFT-plus-column design, which depends on the
/// extra column only through its first entry:
/// `(M b)^{-1} (1 - 1/N' - 1/(Re(w_1) - 1))`. `w_1 = 1` is the pole where the
/// design degenerates.
pub fn dft_ru_trace(m: usize, n_prime: usize, beta_bar: f64, w1: Complex64) -> Result<f64> {
    if (w1.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "w1 must be unit modulus, got |w1| = {}",
            w1.norm()
        )));
    }
    if (w1.re - 1.0).abs() < 1e-12 {
        return Err(Error::invalid("w1 = 1 is the degenerate pole"));
    }
    if n_prime == 0 || m == 0 || beta_bar <= 0.0 {
        return Err(Error::invalid("dft_ru_trace needs M, N' >= 1 and beta_bar > 0"));
    }
    let n = n_prime as f64;
    Ok((1.0 - 1.0 / n - 1.0 / (w1.re - 1.0)) / (m as f64 * beta_bar))
}

/// Trace of the direct block for a DFT-plus-column design, computed from the
/// rank-1 structure of the accumulators (no explicit phase matrix). At the
/// optimal `w_1 = -1` with the remaining entries `-1` this equals
/// `tau_1^{-2} (tau_1 M + (N'^2 - 1)/2)`.
pub fn dft_bu_trace(m: usize, n_prime: usize, extra_column: &CVec) -> Result<f64> {
    if extra_column.len() != n_prime {
        return Err(Error::dims(format!(
            "extra column has length {}, expected {n_prime}",
            extra_column.len()
        )));
    }
    for (k, w) in extra_column.iter().enumerate() {
        if (w.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "extra column entry {k} must be unit modulus"
            )));
        }
    }
    let n = n_prime as f64;
    let tau_1 = n + 1.0;
    let alpha = 1.0 - extra_column[0].re;
    if alpha <= SCHUR_EPS {
        return Err(Error::invalid("w1 = 1 is the degenerate pole"));
    }
    // Gram = N' I + w^* w^T, column sum = N' e_1 + w^*; Sherman-Morrison
    // gives s^H G^{-1} s = N' + Re(w_1).
    let quad = n + extra_column[0].re;
    Ok((m as f64 + quad / alpha) / tau_1)
}

/// Trace of the RIS block for the modified-DFT design:
/// `N' / (M b (N' + 1))`.
pub fn mdft_ru_trace(m: usize, n_prime: usize, beta_bar: f64) -> f64 {
    n_prime as f64 / (m as f64 * beta_bar * (n_prime as f64 + 1.0))
}

/// Trace of the direct block for the modified-DFT design: `M / (N' + 1)`.
pub fn mdft_bu_trace(m: usize, n_prime: usize) -> f64 {
    m as f64 / (n_prime as f64 + 1.0)
}

// ============================================================================
// Scatter-induced error terms
// ============================================================================

/// The scatter-driven component of the stage-one error, split into its RIS
/// and direct parts.
#[derive(Debug, Clone)]
pub struct ScatterTerms {
    /// `lambda = a_b^H H_scatter' diag(h_ru')`, a length-`N'` row (stored as
    /// a vector).
    pub lambda: CVec,
    /// RIS-part error `(M^2 b)^{-1/2} diag(a_r) lambda^T`; independent of the
    /// training design.
    pub ru: CVec,
    /// Direct-part error `(tau_1 M)^{-1} [M H' diag(h') - a_b lambda] s^*`;
    /// proportional to the conjugated column sum, hence exactly zero for the
    /// modified-DFT design.
    pub bu: CVec,
}

/// Evaluate the scatter error terms for one channel draw.
///
/// `h_br_scatter_active` and `a_r_los_active` are restricted to the active
/// elements, in the same order as the design columns.
pub fn scatter_terms(
    h_br_scatter_active: &CMat,
    h_ru_active: &CVec,
    design: &TrainingDesign,
    beta_bar: f64,
    a_b_los: &CVec,
    a_r_los_active: &CVec,
) -> Result<ScatterTerms> {
    let (m, n_prime) = h_br_scatter_active.shape();
    if design.n_prime() != n_prime
        || h_ru_active.len() != n_prime
        || a_r_los_active.len() != n_prime
    {
        return Err(Error::dims(format!(
            "scatter_terms: H' is {m}x{n_prime}, design N' = {}, h' = {}, a_r = {}",
            design.n_prime(),
            h_ru_active.len(),
            a_r_los_active.len()
        )));
    }
    if a_b_los.len() != m {
        return Err(Error::dims(format!(
            "scatter_terms: a_b has length {}, expected {m}",
            a_b_los.len()
        )));
    }
    let m_f = m as f64;
    let tau_1 = design.tau_1() as f64;

    // lambda_n = sum_i conj(a_b_i) H_in h_n
    let lambda = CVec::from_fn(n_prime, |n, _| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            acc += a_b_los[i].conj() * h_br_scatter_active[(i, n)];
        }
        acc * h_ru_active[n]
    });

    let ru_scale = Complex64::new(1.0 / (m_f * beta_bar.sqrt()), 0.0);
    let ru = CVec::from_fn(n_prime, |n, _| ru_scale * a_r_los_active[n] * lambda[n]);

    // bu = (tau_1 M)^{-1} [M H' diag(h') - a_b lambda] s^*
    let sum_conj = design.phase_sum.map(|z| z.conj());
    let mut bu = CVec::zeros(m);
    let lambda_dot = lambda
        .iter()
        .zip(sum_conj.iter())
        .fold(Complex64::new(0.0, 0.0), |acc, (l, s)| acc + l * s);
    for i in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..n_prime {
            acc += h_br_scatter_active[(i, n)] * h_ru_active[n] * sum_conj[n];
        }
        bu[i] = (acc * Complex64::new(m_f, 0.0) - a_b_los[i] * lambda_dot)
            / Complex64::new(tau_1 * m_f, 0.0);
    }

    Ok(ScatterTerms { lambda, ru, bu })
}

// ============================================================================
// Design ranking certificate
// ============================================================================

/// Per-design entries of the certificate.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub label: String,
    pub kind: TrainingKind,
    /// Trace of the RIS covariance block.
    pub trace_ru: f64,
    /// Trace of the direct covariance block.
    pub trace_bu: f64,
    /// `trace_ru + trace_bu`, the ranking objective.
    pub trace_sum: f64,
    /// Trace of the Gram-matrix inverse.
    pub gram_inverse_trace: f64,
    /// `gram_inverse_trace - N'/tau_1` (never below `-1e-9`).
    pub bound_gap: f64,
    /// Mean `||Y_ru||^2` over the supplied scatter draws, if any
    /// (design-independent; reported, excluded from ranking).
    pub scatter_ru_power: Option<f64>,
    /// Mean `||Y_bu||^2` over the supplied scatter draws, if any.
    pub scatter_bu_power: Option<f64>,
}

/// Ranking of a set of designs sharing `N'` and `tau_1`.
#[derive(Debug, Clone)]
pub struct DesignRanking {
    pub reports: Vec<DesignReport>,
    /// Lower bound `N'/tau_1` on the Gram-inverse trace.
    pub inverse_trace_bound: f64,
    /// Index of the design minimizing `trace_sum`.
    pub best_index: usize,
    /// Whether a modified-DFT design attains the minimum `trace_sum` (within
    /// 1e-12 absolute).
    pub mdft_attains_min: bool,
}

/// One channel draw for the optional scatter-power report.
#[derive(Debug, Clone)]
pub struct ScatterDraw {
    pub h_br_scatter_active: CMat,
    pub h_ru_active: CVec,
    pub a_b_los: CVec,
    pub a_r_los_active: CVec,
}

/// Rank training designs by the total error-variance objective
/// `tr(ru) + tr(bu)` evaluated from the accumulators (the steering vectors
/// drop out of the traces). Also reports the Gram-inverse trace against its
/// `N'/tau_1` lower bound, and, when scatter draws are supplied, the mean
/// scatter error powers.
pub fn rank_designs(
    designs: &[(String, TrainingDesign)],
    m: usize,
    beta_bar: f64,
    scatter_draws: &[ScatterDraw],
) -> Result<DesignRanking> {
    if designs.is_empty() {
        return Err(Error::invalid("rank_designs needs at least one design"));
    }
    let n_prime = designs[0].1.n_prime();
    let tau_1 = designs[0].1.tau_1();
    for (label, d) in designs {
        if d.n_prime() != n_prime || d.tau_1() != tau_1 {
            return Err(Error::dims(format!(
                "design '{label}' has shape {}x{}, expected {n_prime}x{tau_1}",
                d.n_prime(),
                d.tau_1()
            )));
        }
    }
    let bound = n_prime as f64 / tau_1 as f64;
    let mut reports = Vec::with_capacity(designs.len());
    for (label, design) in designs {
        let alpha = design.schur_scalar;
        if alpha <= SCHUR_EPS {
            return Err(Error::DegenerateDesign(format!(
                "design '{label}' has Schur scalar {alpha:.3e}"
            )));
        }
        let gram_inv =
            guarded_solve_mat(&design.phase_gram, &CMat::identity(n_prime, n_prime))?;
        let gram_inv_trace: f64 = gram_inv.diagonal().iter().map(|z| z.re).sum();
        let gram_inv_sum = guarded_solve(&design.phase_gram, &design.phase_sum)?;
        let quad1 = design.phase_sum.dotc(&gram_inv_sum).re;
        let quad2 = gram_inv_sum.norm_squared();
        let trace_ru = (gram_inv_trace + quad2 / alpha) / (m as f64 * beta_bar);
        let trace_bu = (m as f64 + quad1 / alpha) / tau_1 as f64;

        let (scatter_ru_power, scatter_bu_power) = if scatter_draws.is_empty() {
            (None, None)
        } else {
            let mut ru_acc = 0.0;
            let mut bu_acc = 0.0;
            for draw in scatter_draws {
                let terms = scatter_terms(
                    &draw.h_br_scatter_active,
                    &draw.h_ru_active,
                    design,
                    beta_bar,
                    &draw.a_b_los,
                    &draw.a_r_los_active,
                )?;
                ru_acc += terms.ru.norm_squared();
                bu_acc += terms.bu.norm_squared();
            }
            let count = scatter_draws.len() as f64;
            (Some(ru_acc / count), Some(bu_acc / count))
        };

        reports.push(DesignReport {
            label: label.clone(),
            kind: design.kind,
            trace_ru,
            trace_bu,
            trace_sum: trace_ru + trace_bu,
            gram_inverse_trace: gram_inv_trace,
            bound_gap: gram_inv_trace - bound,
            scatter_ru_power,
            scatter_bu_power,
        });
    }
    let best_index = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.trace_sum.total_cmp(&b.1.trace_sum))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let best = reports[best_index].trace_sum;
    let mdft_attains_min = reports
        .iter()
        .any(|r| r.kind == TrainingKind::Mdft && r.trace_sum <= best + 1e-12);
    Ok(DesignRanking {
        reports,
        inverse_trace_bound: bound,
        best_index,
        mdft_attains_min,
    })
}
