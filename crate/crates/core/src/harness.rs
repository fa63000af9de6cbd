//! Seeded Monte Carlo sweeps and deterministic CSV emission.
//!
//! A sweep iterates `grid x variant x trial`, where a variant is one
//! `(training design, interpolation method)` pair. Per-trial randomness comes
//! from stateless substreams of the master seed:
//!
//! - `channel/trial`: shadowing and ray draws, shared by every variant and
//!   every grid point (common random numbers make orderings and
//!   monotonicity comparisons paired);
//! - `noise/trial/variant`: receiver noise for both stages;
//! - `design/trial/variant`: random training phases, redrawn per trial;
//! - `phase_noise/trial`: Gaussian phase errors of the perfect-CSI sweep.
//!
//! Trials run in parallel with rayon and are reduced in trial order, so the
//! emitted bytes do not depend on the thread count.

use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

use crate::channel::{total_channel, ChannelRealization, RicianFactor};
use crate::config::{ResolvedScenario, ScenarioConfig, SweepVar};
use crate::covariance::{
    dft_bu_trace, dft_ru_trace, mdft_bu_trace, mdft_ru_trace, rank_designs, DesignRanking,
};
use crate::error::{Error, Result};
use crate::estimator::{
    active_indices, build_vhat, interpolate_ru, lmmse_estimate, stack_received,
    stage1_total_estimate, stage2_refine, EstimationOutcome, InterpolationMethod,
};
use crate::linalg::{CMat, CVec};
use crate::rng::{sample_complex_normal, substream};
use crate::training::{TrainingDesign, TrainingKind};
use crate::transmission::{
    gaussian_phase_perturb, mrc_snr, ms_phase_error, optimal_ris_phases, random_ris_phases,
    spectral_efficiency, PerformanceSample, PhaseSource,
};

/// CSV schema shared by sweeps and certificates.
pub const CSV_HEADER: &str = "sweep_var,value,metric,variant,mean,stderr,trials,seed,config_hash";

// ============================================================================
// Result rows
// ============================================================================

/// One aggregated metric at one sweep point for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_var: String,
    pub value: f64,
    pub metric: String,
    pub variant: String,
    pub mean: f64,
    pub stderr: f64,
    /// Number of trials included (flagged trials are excluded).
    pub trials: usize,
    pub seed: u64,
    pub config_hash: String,
}

fn fmt_full(x: f64) -> String {
    // 17 significant digits: exact f64 round-trip.
    format!("{x:.16e}")
}

impl ResultRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sweep_var,
            self.value,
            self.metric,
            self.variant,
            fmt_full(self.mean),
            fmt_full(self.stderr),
            self.trials,
            self.seed,
            self.config_hash
        )
    }
}

/// Sample mean and standard error (`sample std / sqrt(n)`, `n - 1`
/// normalization).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

// ============================================================================
// Variants
// ============================================================================

/// One simulated protocol configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub training: TrainingKind,
    pub interpolation: InterpolationMethod,
}

impl Variant {
    pub fn label(&self) -> String {
        format!("{}-{}", self.training.label(), self.interpolation.label())
    }

    /// Stable stream index, independent of the config's listing order.
    fn stream_index(&self) -> u64 {
        let t = match self.training {
            TrainingKind::Mdft => 0u64,
            TrainingKind::DftPlus => 1,
            TrainingKind::Random => 2,
            TrainingKind::Identity => 3,
        };
        let i = match self.interpolation {
            InterpolationMethod::OnePt => 0u64,
            InterpolationMethod::TwoPt => 1,
            InterpolationMethod::ThreePt => 2,
            InterpolationMethod::NzPt => 3,
        };
        t * 8 + i
    }
}

/// The variant list of a config: trainings crossed with interpolations.
pub fn variants(config: &ScenarioConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for &training in &config.protocol.trainings {
        for &interpolation in &config.protocol.interpolations {
            out.push(Variant {
                training,
                interpolation,
            });
        }
    }
    out
}

// ============================================================================
// Single trial
// ============================================================================

fn build_design(
    variant: &Variant,
    n_prime: usize,
    master: u64,
    trial: u64,
    stream_index: u64,
) -> Result<TrainingDesign> {
    match variant.training {
        TrainingKind::Mdft => TrainingDesign::mdft(n_prime),
        TrainingKind::DftPlus => TrainingDesign::dft_plus_default(n_prime),
        TrainingKind::Random => {
            let mut rng = substream(master, "design", &[trial, stream_index]);
            TrainingDesign::random(n_prime, n_prime + 1, &mut rng)
        }
        TrainingKind::Identity => TrainingDesign::identity(n_prime, n_prime + 1),
    }
}

fn effective_directions(
    scenario: &ResolvedScenario,
    draw: &ChannelRealization,
) -> (CVec, CVec) {
    match scenario.k_factor {
        RicianFactor::PureLos => (
            scenario.geometry.bs_los_steering(),
            scenario.geometry.ris_los_steering(),
        ),
        RicianFactor::Linear(_) => {
            // Principal singular directions of the full RIS-BS channel; only
            // their phases enter the phase configuration.
            let h = draw.h_br();
            let (m, n) = h.shape();
            let svd = h.svd(true, true);
            let u = svd.u.expect("svd with u");
            let v_t = svd.v_t.expect("svd with v_t");
            (
                CVec::from_fn(m, |i, _| u[(i, 0)]),
                CVec::from_fn(n, |i, _| v_t[(0, i)].conj()),
            )
        }
    }
}

/// One full pipeline pass for one `(config, variant, trial)` triple:
/// draw channels, train, estimate, interpolate, configure the RIS, evaluate
/// the stage-one NMSE and transmission-phase error, refine in stage two, and
/// score the frame with MRC.
///
/// Deterministic given `(config, trial)`. A singular or degenerate design
/// surfaces as an error; the sweep driver counts those trials as flagged.
pub fn run_trial(
    config: &ScenarioConfig,
    variant: &Variant,
    trial: u64,
) -> Result<PerformanceSample> {
    let scenario = config.resolve()?;
    run_trial_resolved(&scenario, config.run.seed, variant, trial)
}

fn run_trial_resolved(
    scenario: &ResolvedScenario,
    master: u64,
    variant: &Variant,
    trial: u64,
) -> Result<PerformanceSample> {
    let geom = &scenario.geometry;
    let (n_y, n_z) = (geom.ris_columns, geom.ris_rows);
    let n_prime = variant.interpolation.n_prime(n_y, n_z);
    let stream_index = variant.stream_index();

    // Channels: one stream per trial, shared by every variant.
    let mut chan_rng = scenario.channel_rng(master, trial);
    let gains = scenario.draw_gains(&mut chan_rng)?;
    let draw = ChannelRealization::draw(
        geom,
        &gains,
        &scenario.clusters,
        scenario.blocked_direct,
        &mut chan_rng,
    )?;

    let design = build_design(variant, n_prime, master, trial, stream_index)?;
    let indices = active_indices(variant.interpolation, n_y, n_z)?;
    let h_br_true = draw.h_br();
    let slice_cols = |mat: &CMat| -> CMat {
        CMat::from_fn(geom.bs_antennas, n_prime, |i, k| mat[(i, indices[k])])
    };
    let h_true_active = slice_cols(&h_br_true);
    let h_los_active = slice_cols(&draw.h_br_los);
    let h_ru_active = CVec::from_fn(n_prime, |k, _| draw.h_ru[indices[k]]);

    // Stage 1.
    let mut noise_rng = substream(master, "noise", &[trial, stream_index]);
    let noise_arg = if scenario.zero_noise {
        None
    } else {
        Some(&mut noise_rng)
    };
    let (received, _) = stack_received(
        &h_true_active,
        &design,
        &h_ru_active,
        &draw.h_bu,
        scenario.rho,
        noise_arg,
    )?;
    let v_hat = build_vhat(&h_los_active, &design, scenario.rho)?;
    let (ru_hat_active, bu_hat) = lmmse_estimate(&v_hat, &received, n_prime)?;
    let h_ru_hat = interpolate_ru(&ru_hat_active, variant.interpolation, n_y, n_z)?;

    // RIS configuration and its error against the perfect-CSI reference.
    let (a_b_eff, a_r_eff) = effective_directions(scenario, &draw);
    let phi_bar = optimal_ris_phases(
        &h_ru_hat,
        &bu_hat,
        &a_b_eff,
        &a_r_eff,
        PhaseSource::Estimated,
    )?;
    let phi_star = optimal_ris_phases(
        &draw.h_ru,
        &draw.h_bu,
        &a_b_eff,
        &a_r_eff,
        PhaseSource::Perfect,
    )?;
    let phase_err = ms_phase_error(&phi_bar, &phi_star)?;

    // Stage-one NMSE of the total-channel estimate.
    let h_tot_true = total_channel(&h_br_true, &phi_bar.diagonal, &draw.h_ru, &draw.h_bu)?;
    let h_tot_stage1 =
        stage1_total_estimate(&draw.h_br_los, &phi_bar.diagonal, &h_ru_hat, &bu_hat)?;
    let tot_power = h_tot_true.norm_squared();
    let nmse = if tot_power > 0.0 {
        (&h_tot_stage1 - &h_tot_true).norm_squared() / tot_power
    } else {
        0.0
    };

    // Stage 2 on the configured end-to-end channel.
    let sqrt_rho = num_complex::Complex64::new(scenario.rho.sqrt(), 0.0);
    let measurements: Vec<CVec> = (0..scenario.tau_2)
        .map(|_| {
            let mut y = &h_tot_true * sqrt_rho;
            if !scenario.zero_noise {
                for i in 0..y.len() {
                    y[i] += sample_complex_normal(&mut noise_rng);
                }
            }
            y
        })
        .collect();
    let outcome = EstimationOutcome {
        h_tot_refined: stage2_refine(
            &h_tot_stage1,
            &measurements,
            scenario.rho,
            scenario.stage2_mode,
        )?,
        h_ru_active_hat: ru_hat_active,
        h_bu_hat: bu_hat,
        h_ru_hat,
        h_tot_stage1,
        scatter_error: None,
        noise_error: None,
        rho: scenario.rho,
        tau_1: design.tau_1(),
        tau_2: scenario.tau_2,
    };

    let snr = mrc_snr(&outcome.h_tot_refined, &h_tot_true, scenario.rho_d)?;
    let tau = outcome.tau_1 + outcome.tau_2;
    let se = spectral_efficiency(snr, scenario.frame_length, tau)?;

    Ok(PerformanceSample {
        snr,
        se,
        ms_phase_error: phase_err,
        nmse,
        rho_d: scenario.rho_d,
        frame_len: scenario.frame_length,
    })
}

/// Perfect-CSI trial with synthetic Gaussian phase errors: the RIS phases are
/// ideal plus noise, the total channel is then assumed perfectly known, and
/// the whole frame carries data.
fn run_sigma_trial(
    scenario: &ResolvedScenario,
    master: u64,
    sigma_e: f64,
    trial: u64,
) -> Result<PerformanceSample> {
    let geom = &scenario.geometry;
    let mut chan_rng = scenario.channel_rng(master, trial);
    let gains = scenario.draw_gains(&mut chan_rng)?;
    let draw = ChannelRealization::draw(
        geom,
        &gains,
        &scenario.clusters,
        scenario.blocked_direct,
        &mut chan_rng,
    )?;
    let (a_b_eff, a_r_eff) = effective_directions(scenario, &draw);
    let phi_star = optimal_ris_phases(
        &draw.h_ru,
        &draw.h_bu,
        &a_b_eff,
        &a_r_eff,
        PhaseSource::Perfect,
    )?;
    let mut phase_rng = substream(master, "phase_noise", &[trial]);
    let perturbed = gaussian_phase_perturb(&phi_star, sigma_e, &mut phase_rng);
    let h_tot = total_channel(&draw.h_br(), &perturbed.diagonal, &draw.h_ru, &draw.h_bu)?;
    let snr = scenario.rho_d * h_tot.norm_squared();
    let se = spectral_efficiency(snr, scenario.frame_length, 0)?;
    let phase_err = ms_phase_error(&perturbed, &phi_star)?;
    Ok(PerformanceSample {
        snr,
        se,
        ms_phase_error: phase_err,
        nmse: 0.0,
        rho_d: scenario.rho_d,
        frame_len: scenario.frame_length,
    })
}

/// No-estimation baseline: random transmission phases, no pilots, perfect
/// CSI at the combiner.
fn run_baseline_trial(
    scenario: &ResolvedScenario,
    master: u64,
    trial: u64,
) -> Result<PerformanceSample> {
    let geom = &scenario.geometry;
    let mut chan_rng = scenario.channel_rng(master, trial);
    let gains = scenario.draw_gains(&mut chan_rng)?;
    let draw = ChannelRealization::draw(
        geom,
        &gains,
        &scenario.clusters,
        scenario.blocked_direct,
        &mut chan_rng,
    )?;
    let mut phase_rng = substream(master, "baseline_phase", &[trial]);
    let phi = random_ris_phases(geom.ris_elements(), &mut phase_rng);
    let h_tot = total_channel(&draw.h_br(), &phi.diagonal, &draw.h_ru, &draw.h_bu)?;
    let (a_b_eff, a_r_eff) = effective_directions(scenario, &draw);
    let phi_star = optimal_ris_phases(
        &draw.h_ru,
        &draw.h_bu,
        &a_b_eff,
        &a_r_eff,
        PhaseSource::Perfect,
    )?;
    let snr = scenario.rho_d * h_tot.norm_squared();
    let se = spectral_efficiency(snr, scenario.frame_length, 0)?;
    let phase_err = ms_phase_error(&phi, &phi_star)?;
    Ok(PerformanceSample {
        snr,
        se,
        ms_phase_error: phase_err,
        nmse: 0.0,
        rho_d: scenario.rho_d,
        frame_len: scenario.frame_length,
    })
}

// ============================================================================
// Sweep driver
// ============================================================================

fn is_flagged(err: &Error) -> bool {
    matches!(err, Error::SingularDesign(_) | Error::DegenerateDesign(_))
}

fn collect_samples<F>(trials: usize, f: F) -> Result<Vec<Option<PerformanceSample>>>
where
    F: Fn(u64) -> Result<PerformanceSample> + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|t| match f(t) {
            Ok(sample) => Ok(Some(sample)),
            Err(e) if is_flagged(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

struct PointContext<'a> {
    sweep_var: &'a str,
    value: f64,
    seed: u64,
    hash: &'a str,
}

fn push_metric_rows(
    rows: &mut Vec<ResultRow>,
    point: &PointContext,
    samples: &[Option<PerformanceSample>],
    metrics: &[&str],
    variant: &str,
) {
    let included: Vec<&PerformanceSample> = samples.iter().flatten().collect();
    for &metric in metrics {
        let values: Vec<f64> = included
            .iter()
            .map(|s| match metric {
                "NMSE" => s.nmse,
                "MS_PHASE_ERROR" => s.ms_phase_error,
                "SE" => s.se,
                other => unreachable!("unknown metric {other}"),
            })
            .collect();
        let (mean, stderr) = mean_stderr(&values);
        rows.push(ResultRow {
            sweep_var: point.sweep_var.to_string(),
            value: point.value,
            metric: metric.to_string(),
            variant: variant.to_string(),
            mean,
            stderr,
            trials: included.len(),
            seed: point.seed,
            config_hash: point.hash.to_string(),
        });
    }
}

/// Run the configured sweep: one [`ResultRow`] per
/// `(grid point, variant, metric)`. Byte-deterministic for a given
/// `(config, seed)` regardless of thread count.
pub fn sweep(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let hash = config.hash();
    let master = config.run.seed;
    let sweep_var = config.run.sweep.label();
    let variant_list = variants(config);
    let mut rows = Vec::new();

    for &value in &config.run.grid {
        let point = config.with_sweep_value(value)?;
        let scenario = point.resolve()?;
        let ctx = PointContext {
            sweep_var,
            value,
            seed: master,
            hash: &hash,
        };
        match config.run.sweep {
            SweepVar::SigmaE => {
                let samples = collect_samples(point.run.trials, |t| {
                    run_sigma_trial(&scenario, master, value, t)
                })?;
                push_metric_rows(
                    &mut rows,
                    &ctx,
                    &samples,
                    &["MS_PHASE_ERROR", "SE"],
                    "perfect-csi",
                );
            }
            _ => {
                for variant in &variant_list {
                    let samples = collect_samples(point.run.trials, |t| {
                        run_trial_resolved(&scenario, master, variant, t)
                    })?;
                    push_metric_rows(
                        &mut rows,
                        &ctx,
                        &samples,
                        &["NMSE", "MS_PHASE_ERROR", "SE"],
                        &variant.label(),
                    );
                }
                if point.run.include_baseline {
                    let samples = collect_samples(point.run.trials, |t| {
                        run_baseline_trial(&scenario, master, t)
                    })?;
                    push_metric_rows(
                        &mut rows,
                        &ctx,
                        &samples,
                        &["MS_PHASE_ERROR", "SE"],
                        "no-phase-design",
                    );
                }
            }
        }
    }
    Ok(rows)
}

// ============================================================================
// CSV emission
// ============================================================================

/// Render rows to the canonical CSV document.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Write the canonical CSV file.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("emit_csv needs at least one row"));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(csv_string(rows).as_bytes())?;
    Ok(())
}

/// Write gnuplot-style plot data: one `value mean stderr` block per
/// `(metric, variant)` series, in order of first appearance.
pub fn emit_plot_data(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("emit_plot_data needs at least one row"));
    }
    let mut series: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.metric.clone(), row.variant.clone());
        if !series.contains(&key) {
            series.push(key);
        }
    }
    let mut out = String::new();
    for (metric, variant) in &series {
        out.push_str(&format!(
            "# metric={metric} variant={variant} sweep={}\n",
            rows[0].sweep_var
        ));
        for row in rows
            .iter()
            .filter(|r| &r.metric == metric && &r.variant == variant)
        {
            out.push_str(&format!(
                "{} {} {}\n",
                row.value,
                fmt_full(row.mean),
                fmt_full(row.stderr)
            ));
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

// ============================================================================
// Design certification
// ============================================================================

/// Rank the modified-DFT design against the DFT design and `random_designs`
/// random designs at the given size, and serialize the certificate to result
/// rows (trace sums, the Gram-inverse bound gap, and the analytic DFT gaps).
pub fn certify(
    n_prime: usize,
    m: usize,
    beta_bar: f64,
    random_designs: usize,
    seed: u64,
) -> Result<(DesignRanking, Vec<ResultRow>)> {
    let mut designs = vec![
        ("mdft".to_string(), TrainingDesign::mdft(n_prime)?),
        (
            "dft".to_string(),
            TrainingDesign::dft_plus_default(n_prime)?,
        ),
    ];
    for k in 0..random_designs as u64 {
        let mut rng = substream(seed, "certify", &[k]);
        designs.push((
            format!("random{k:04}"),
            TrainingDesign::random(n_prime, n_prime + 1, &mut rng)?,
        ));
    }
    let ranking = rank_designs(&designs, m, beta_bar, &[])?;

    let hash = {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(
            format!("certify n_prime={n_prime} m={m} beta_bar={beta_bar} k={random_designs}")
                .as_bytes(),
        );
        digest[..8].iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    let mut rows = Vec::new();
    let mut push = |value: f64, metric: &str, variant: &str, mean: f64| {
        rows.push(ResultRow {
            sweep_var: "design".to_string(),
            value,
            metric: metric.to_string(),
            variant: variant.to_string(),
            mean,
            stderr: 0.0,
            trials: 1,
            seed,
            config_hash: hash.clone(),
        });
    };
    for (i, report) in ranking.reports.iter().enumerate() {
        push(i as f64, "TRACE_X11", &report.label, report.trace_ru);
        push(i as f64, "TRACE_X22", &report.label, report.trace_bu);
        push(i as f64, "TRACE_SUM", &report.label, report.trace_sum);
        push(i as f64, "BOUND_GAP", &report.label, report.bound_gap);
        push(
            i as f64,
            "RANK_BEST",
            &report.label,
            if i == ranking.best_index { 1.0 } else { 0.0 },
        );
    }
    // Analytic vs measured modified-DFT-to-DFT gaps (the extra column is the
    // default all -1 vector).
    let w1 = num_complex::Complex64::new(-1.0, 0.0);
    let analytic_ru = dft_ru_trace(m, n_prime, beta_bar, w1)? - mdft_ru_trace(m, n_prime, beta_bar);
    let w = CVec::from_element(n_prime, w1);
    let analytic_bu = dft_bu_trace(m, n_prime, &w)? - mdft_bu_trace(m, n_prime);
    let measured_ru = ranking.reports[1].trace_ru - ranking.reports[0].trace_ru;
    let measured_bu = ranking.reports[1].trace_bu - ranking.reports[0].trace_bu;
    push(0.0, "GAP_X11_ANALYTIC", "dft", analytic_ru);
    push(0.0, "GAP_X11_MEASURED", "dft", measured_ru);
    push(0.0, "GAP_X22_ANALYTIC", "dft", analytic_bu);
    push(0.0, "GAP_X22_MEASURED", "dft", measured_bu);
    Ok((ranking, rows))
}
