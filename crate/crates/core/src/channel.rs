//! System geometry, large-scale fading, and clustered ray-based channels.
//!
//! The cell lives in the x-y azimuth plane. The BS (an `M`-element ULA) and
//! the RIS (an `N_y x N_z` vertical rectangular array, columns horizontal
//! along y-ish, rows vertical along z) sit on the y-axis inside an exclusion
//! zone; the user is on the x-axis between the exclusion and cell radii.
//! Azimuth angles are measured against each array's broadside, elevation from
//! the zenith.
//!
//! RIS elements are indexed column-major: element `y * N_z + z` is row `z` of
//! column `y` (0-based). Interpolation in [`crate::estimator`] relies on this
//! map.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::rng::{sample_gaussian, sample_laplace, sample_phase};

// ============================================================================
// Geometry
// ============================================================================

/// User-facing geometry parameters (serializable; distances in meters,
/// spacings in wavelengths, rotations in radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    /// BS ULA antenna count `M`.
    pub bs_antennas: usize,
    /// RIS columns `N_y`.
    pub ris_columns: usize,
    /// RIS rows per column `N_z`.
    pub ris_rows: usize,
    /// BS element spacing in wavelengths.
    pub bs_spacing: f64,
    /// RIS element spacing in wavelengths (both axes).
    pub ris_spacing: f64,
    /// Cell radius `r` (m).
    pub cell_radius_m: f64,
    /// Exclusion radius `r_0` (m).
    pub exclusion_radius_m: f64,
    /// User distance from the origin along the x-axis (m).
    pub ue_distance_m: f64,
    /// BS-RIS separation along the y-axis (m); BS at `+D/2`, RIS at `-D/2`.
    pub bs_ris_distance_m: f64,
    /// BS array rotation: broadside azimuth relative to the x-axis (rad).
    pub bs_rotation_rad: f64,
    /// RIS rotation: broadside azimuth relative to the x-axis (rad).
    pub ris_rotation_rad: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            bs_antennas: 8,
            ris_columns: 4,
            ris_rows: 8,
            bs_spacing: 0.5,
            ris_spacing: 0.25,
            cell_radius_m: 100.0,
            exclusion_radius_m: 15.0,
            ue_distance_m: 50.0,
            bs_ris_distance_m: 10.0,
            bs_rotation_rad: FRAC_PI_2 - FRAC_PI_2 / 2.0,
            ris_rotation_rad: -FRAC_PI_2 + FRAC_PI_2 / 2.0,
        }
    }
}

/// Resolved geometry: array sizes, spacings, link distances, and the LoS
/// angles of the BS-RIS path implied by the array rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    pub bs_antennas: usize,
    pub ris_columns: usize,
    pub ris_rows: usize,
    pub bs_spacing: f64,
    pub ris_spacing: f64,
    pub cell_radius_m: f64,
    pub exclusion_radius_m: f64,
    pub ue_distance_m: f64,
    pub bs_ris_distance_m: f64,
    pub bs_ue_distance_m: f64,
    pub ris_ue_distance_m: f64,
    /// Azimuth of the BS-RIS path at the BS, relative to BS broadside.
    pub bs_los_azimuth: f64,
    /// Elevation of the BS-RIS path at the BS (zenith reference).
    pub bs_los_elevation: f64,
    /// Azimuth of the BS-RIS path at the RIS, relative to RIS broadside.
    pub ris_los_azimuth: f64,
    /// Elevation of the BS-RIS path at the RIS.
    pub ris_los_elevation: f64,
}

impl SystemGeometry {
    /// Resolve a [`GeometrySpec`], validating ranges and deriving distances
    /// and LoS angles. BS and RIS are assumed at equal height, so both LoS
    /// elevations are `pi/2`.
    pub fn new(spec: &GeometrySpec) -> Result<Self> {
        if spec.bs_antennas == 0 {
            return Err(Error::invalid("bs_antennas must be >= 1"));
        }
        if spec.ris_columns == 0 || spec.ris_rows == 0 {
            return Err(Error::invalid("ris_columns and ris_rows must be >= 1"));
        }
        if spec.bs_spacing <= 0.0 || spec.ris_spacing <= 0.0 {
            return Err(Error::invalid("element spacings must be positive"));
        }
        if spec.bs_ris_distance_m <= 0.0 {
            return Err(Error::invalid("bs_ris_distance_m must be positive"));
        }
        if !spec.bs_rotation_rad.is_finite() || !spec.ris_rotation_rad.is_finite() {
            return Err(Error::invalid("array rotations must be finite"));
        }
        if !(spec.exclusion_radius_m < spec.ue_distance_m
            && spec.ue_distance_m < spec.cell_radius_m)
        {
            return Err(Error::invalid(format!(
                "ue_distance_m must satisfy exclusion < distance < cell radius \
                 ({} < {} < {})",
                spec.exclusion_radius_m, spec.ue_distance_m, spec.cell_radius_m
            )));
        }
        let half = spec.bs_ris_distance_m / 2.0;
        let ue_dist = spec.ue_distance_m.hypot(half);
        // The BS-RIS wave travels along the y-axis. Measured against each
        // broadside, its azimuth is fixed by the configured rotations.
        let bs_los_azimuth = wrap_angle(FRAC_PI_2 - spec.bs_rotation_rad);
        let ris_los_azimuth = wrap_angle(-FRAC_PI_2 - spec.ris_rotation_rad);
        Ok(SystemGeometry {
            bs_antennas: spec.bs_antennas,
            ris_columns: spec.ris_columns,
            ris_rows: spec.ris_rows,
            bs_spacing: spec.bs_spacing,
            ris_spacing: spec.ris_spacing,
            cell_radius_m: spec.cell_radius_m,
            exclusion_radius_m: spec.exclusion_radius_m,
            ue_distance_m: spec.ue_distance_m,
            bs_ris_distance_m: spec.bs_ris_distance_m,
            bs_ue_distance_m: ue_dist,
            ris_ue_distance_m: ue_dist,
            bs_los_azimuth,
            bs_los_elevation: FRAC_PI_2,
            ris_los_azimuth,
            ris_los_elevation: FRAC_PI_2,
        })
    }

    /// Total RIS element count `N = N_y * N_z`.
    pub fn ris_elements(&self) -> usize {
        self.ris_columns * self.ris_rows
    }

    /// BS steering vector toward the BS-RIS LoS direction.
    pub fn bs_los_steering(&self) -> CVec {
        steering_bs(
            self.bs_los_azimuth,
            self.bs_los_elevation,
            self.bs_antennas,
            self.bs_spacing,
        )
    }

    /// RIS steering vector toward the BS-RIS LoS direction.
    pub fn ris_los_steering(&self) -> CVec {
        steering_ris(
            self.ris_los_azimuth,
            self.ris_los_elevation,
            self.ris_columns,
            self.ris_rows,
            self.ris_spacing,
        )
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

// ============================================================================
// Large-scale fading
// ============================================================================

/// Pathloss law for one link: `beta = A * 10^(L/10) * (D/D_0)^(-Gamma)` with
/// `L ~ N(0, sigma_sf^2)` in dB (`sigma_sf = 0` disables shadowing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathlossSpec {
    /// Unitless attenuation at the reference distance.
    pub attenuation: f64,
    /// Reference distance `D_0` (m).
    pub reference_m: f64,
    /// Pathloss exponent `Gamma`.
    pub exponent: f64,
    /// Shadow-fading standard deviation in dB.
    pub shadow_sigma_db: f64,
}

impl PathlossSpec {
    pub fn new(attenuation: f64, reference_m: f64, exponent: f64, shadow_sigma_db: f64) -> Self {
        PathlossSpec {
            attenuation,
            reference_m,
            exponent,
            shadow_sigma_db,
        }
    }

    /// Shadow-free gain at `distance_m`.
    pub fn gain(&self, distance_m: f64) -> Result<f64> {
        pathloss(self.attenuation, 0.0, distance_m, self.reference_m, self.exponent)
    }

    /// Gain at `distance_m` with a fresh shadowing draw.
    pub fn shadowed_gain(&self, distance_m: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
        let l_db = if self.shadow_sigma_db > 0.0 {
            sample_gaussian(rng, 0.0, self.shadow_sigma_db)
        } else {
            0.0
        };
        pathloss(self.attenuation, l_db, distance_m, self.reference_m, self.exponent)
    }
}

/// `beta = A * 10^(L_dB/10) * (D/D_0)^(-Gamma)`.
pub fn pathloss(
    attenuation: f64,
    shadow_db: f64,
    distance_m: f64,
    reference_m: f64,
    exponent: f64,
) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(Error::invalid(format!(
            "pathloss distance must be positive, got {distance_m}"
        )));
    }
    if reference_m <= 0.0 {
        return Err(Error::invalid(format!(
            "pathloss reference distance must be positive, got {reference_m}"
        )));
    }
    Ok(attenuation * 10f64.powf(shadow_db / 10.0) * (distance_m / reference_m).powf(-exponent))
}

/// Specular-to-scattered power split of the RIS-BS link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RicianFactor {
    /// Finite linear K: LoS carries `K/(K+1)` of the link power.
    Linear(f64),
    /// All power in the specular component; the scattered part is exactly 0.
    PureLos,
}

impl RicianFactor {
    pub fn from_db(k_db: f64) -> Self {
        RicianFactor::Linear(10f64.powf(k_db / 10.0))
    }
}

/// Realized linear power gains of the three links plus the LoS/scatter split.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleParams {
    pub beta_bu: f64,
    pub beta_ru: f64,
    pub beta_br: f64,
    /// Specular share of `beta_br`.
    pub beta_br_los: f64,
    /// Scattered share of `beta_br`; exactly 0 for [`RicianFactor::PureLos`].
    pub beta_br_scatter: f64,
    pub k_factor: RicianFactor,
}

impl LargeScaleParams {
    pub fn new(beta_bu: f64, beta_ru: f64, beta_br: f64, k_factor: RicianFactor) -> Result<Self> {
        if beta_bu <= 0.0 || beta_ru <= 0.0 || beta_br <= 0.0 {
            return Err(Error::invalid("link gains must be positive"));
        }
        let (beta_br_los, beta_br_scatter) = match k_factor {
            RicianFactor::PureLos => (beta_br, 0.0),
            RicianFactor::Linear(k) => {
                if k < 0.0 {
                    return Err(Error::invalid("Rician K must be non-negative"));
                }
                (beta_br * k / (k + 1.0), beta_br / (k + 1.0))
            }
        };
        Ok(LargeScaleParams {
            beta_bu,
            beta_ru,
            beta_br,
            beta_br_los,
            beta_br_scatter,
            k_factor,
        })
    }
}

// ============================================================================
// Steering vectors
// ============================================================================

/// BS ULA steering vector: element `m` is
/// `exp(-j*2*pi*d_B*m*sin(theta)*sin(phi))`.
pub fn steering_bs(phi: f64, theta: f64, m: usize, d_b: f64) -> CVec {
    let factor = -TAU * d_b * theta.sin() * phi.sin();
    CVec::from_fn(m, |k, _| Complex64::from_polar(1.0, factor * k as f64))
}

/// RIS VURA steering vector: Kronecker product of the column (azimuth) and
/// row (elevation) factors, column-major over the array.
pub fn steering_ris(phi: f64, theta: f64, n_y: usize, n_z: usize, d_r: f64) -> CVec {
    let fy = -TAU * d_r * theta.sin() * phi.sin();
    let fz = -TAU * d_r * theta.cos();
    CVec::from_fn(n_y * n_z, |idx, _| {
        let y = (idx / n_z) as f64;
        let z = (idx % n_z) as f64;
        Complex64::from_polar(1.0, fy * y + fz * z)
    })
}

// ============================================================================
// Clustered ray model
// ============================================================================

/// Cluster statistics for one link. Angles are radians; `azimuth_spread` is a
/// Gaussian standard deviation, the elevation spread and both subray offset
/// scales are Laplace scale parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub clusters: usize,
    pub subrays: usize,
    /// Weakest/strongest cluster power ratio `eta`.
    pub power_ratio: f64,
    pub azimuth_spread: f64,
    pub elevation_spread: f64,
    pub azimuth_offset_scale: f64,
    pub elevation_offset_scale: f64,
    pub azimuth_mean: f64,
    pub elevation_mean: f64,
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.subrays == 0 {
            return Err(Error::invalid("clusters and subrays must be >= 1"));
        }
        if !(self.power_ratio > 0.0 && self.power_ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "cluster power ratio must be in (0, 1], got {}",
                self.power_ratio
            )));
        }
        if self.azimuth_spread < 0.0
            || self.elevation_spread < 0.0
            || self.azimuth_offset_scale < 0.0
            || self.elevation_offset_scale < 0.0
        {
            return Err(Error::invalid("angle spreads must be non-negative"));
        }
        Ok(())
    }
}

/// Cluster powers decaying geometrically so that they sum to `beta` and the
/// last/first ratio equals `eta` (ratio `q = eta^(1/(C-1))`).
pub fn cluster_powers(beta: f64, clusters: usize, eta: f64) -> Result<Vec<f64>> {
    if clusters == 0 {
        return Err(Error::invalid("cluster count must be >= 1"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!(
            "cluster power ratio must be in (0, 1], got {eta}"
        )));
    }
    if clusters == 1 {
        return Ok(vec![beta]);
    }
    let q = eta.powf(1.0 / (clusters as f64 - 1.0));
    let weights: Vec<f64> = (0..clusters).map(|c| q.powi(c as i32)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| beta * w / total).collect())
}

/// One scattered ray of a vector (UE-side) channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    /// Complex gain `gamma = sqrt(power) * exp(-j*Theta)`.
    pub gain: Complex64,
    /// Ray power `beta_c / S`.
    pub power: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// One scattered ray of the RIS-BS matrix channel (angles at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct BrRay {
    pub gain: Complex64,
    pub power: f64,
    pub bs_azimuth: f64,
    pub bs_elevation: f64,
    pub ris_azimuth: f64,
    pub ris_elevation: f64,
}

/// Which array a vector channel terminates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArraySide {
    Bs,
    Ris,
}

fn draw_ray_angles(cfg: &ClusterConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64)> {
    // Returns (azimuth, elevation, power_weight placeholder) per (c, s) in
    // cluster-major order; powers are filled by the caller.
    let mut angles = Vec::with_capacity(cfg.clusters * cfg.subrays);
    for _ in 0..cfg.clusters {
        let az_c = sample_gaussian(rng, cfg.azimuth_mean, cfg.azimuth_spread);
        let el_c = sample_laplace(rng, cfg.elevation_mean, cfg.elevation_spread);
        for _ in 0..cfg.subrays {
            let az = az_c + sample_laplace(rng, 0.0, cfg.azimuth_offset_scale);
            let el = el_c + sample_laplace(rng, 0.0, cfg.elevation_offset_scale);
            angles.push((az, el, 0.0));
        }
    }
    angles
}

/// Draw a clustered ray-based vector channel for the BS or the RIS array.
///
/// `h = sum_{c,s} gamma_{c,s} a(phi_{c,s}, theta_{c,s})` with
/// `gamma_{c,s} = sqrt(beta_c / S) * exp(-j*Theta_{c,s})`, uniform phases,
/// Gaussian azimuth cluster centers and Laplacian elevation centers and
/// subray offsets. Returns the channel and the per-ray metadata.
pub fn draw_ray_channel(
    geometry: &SystemGeometry,
    beta: f64,
    cfg: &ClusterConfig,
    side: ArraySide,
    rng: &mut ChaCha8Rng,
) -> Result<(CVec, Vec<Ray>)> {
    cfg.validate()?;
    let powers = cluster_powers(beta, cfg.clusters, cfg.power_ratio)?;
    let angles = draw_ray_angles(cfg, rng);
    let len = match side {
        ArraySide::Bs => geometry.bs_antennas,
        ArraySide::Ris => geometry.ris_elements(),
    };
    let mut h = CVec::zeros(len);
    let mut rays = Vec::with_capacity(angles.len());
    for (i, (az, el, _)) in angles.into_iter().enumerate() {
        let c = i / cfg.subrays;
        let power = powers[c] / cfg.subrays as f64;
        let gain = Complex64::from_polar(power.sqrt(), -sample_phase(rng));
        let a = match side {
            ArraySide::Bs => steering_bs(az, el, geometry.bs_antennas, geometry.bs_spacing),
            ArraySide::Ris => steering_ris(
                az,
                el,
                geometry.ris_columns,
                geometry.ris_rows,
                geometry.ris_spacing,
            ),
        };
        h += a * gain;
        rays.push(Ray {
            gain,
            power,
            azimuth: az,
            elevation: el,
        });
    }
    Ok((h, rays))
}

/// Build the RIS-BS channel: the deterministic rank-1 specular part
/// `sqrt(beta_los) * a_B * a_R^H` plus a clustered scattered part whose
/// cluster centers are aligned with the LoS angles at both ends.
///
/// Under [`RicianFactor::PureLos`] the scattered matrix is exactly zero and
/// no rays are drawn.
pub fn build_ris_bs_channel(
    geometry: &SystemGeometry,
    large_scale: &LargeScaleParams,
    scatter_cfg: &ClusterConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(CMat, CMat, Vec<BrRay>)> {
    let a_b = geometry.bs_los_steering();
    let a_r = geometry.ris_los_steering();
    let los = (&a_b * a_r.adjoint()).scale(large_scale.beta_br_los.sqrt());

    let m = geometry.bs_antennas;
    let n = geometry.ris_elements();
    let mut scatter = CMat::zeros(m, n);
    let mut rays = Vec::new();
    if large_scale.beta_br_scatter > 0.0 {
        scatter_cfg.validate()?;
        let powers = cluster_powers(
            large_scale.beta_br_scatter,
            scatter_cfg.clusters,
            scatter_cfg.power_ratio,
        )?;
        for &cluster_power in &powers {
            let az_b_c = sample_gaussian(rng, geometry.bs_los_azimuth, scatter_cfg.azimuth_spread);
            let el_b_c = sample_laplace(
                rng,
                geometry.bs_los_elevation,
                scatter_cfg.elevation_spread,
            );
            let az_r_c = sample_gaussian(rng, geometry.ris_los_azimuth, scatter_cfg.azimuth_spread);
            let el_r_c = sample_laplace(
                rng,
                geometry.ris_los_elevation,
                scatter_cfg.elevation_spread,
            );
            for _ in 0..scatter_cfg.subrays {
                let az_b = az_b_c + sample_laplace(rng, 0.0, scatter_cfg.azimuth_offset_scale);
                let el_b = el_b_c + sample_laplace(rng, 0.0, scatter_cfg.elevation_offset_scale);
                let az_r = az_r_c + sample_laplace(rng, 0.0, scatter_cfg.azimuth_offset_scale);
                let el_r = el_r_c + sample_laplace(rng, 0.0, scatter_cfg.elevation_offset_scale);
                let power = cluster_power / scatter_cfg.subrays as f64;
                let gain = Complex64::from_polar(power.sqrt(), -sample_phase(rng));
                let a_b_ray = steering_bs(az_b, el_b, m, geometry.bs_spacing);
                let a_r_ray = steering_ris(
                    az_r,
                    el_r,
                    geometry.ris_columns,
                    geometry.ris_rows,
                    geometry.ris_spacing,
                );
                scatter += (&a_b_ray * a_r_ray.adjoint()) * gain;
                rays.push(BrRay {
                    gain,
                    power,
                    bs_azimuth: az_b,
                    bs_elevation: el_b,
                    ris_azimuth: az_r,
                    ris_elevation: el_r,
                });
            }
        }
    }
    Ok((los, scatter, rays))
}

/// Global uplink channel `h_tot = H_br * diag(phi) * h_ru + h_bu`.
pub fn total_channel(h_br: &CMat, phi_diag: &CVec, h_ru: &CVec, h_bu: &CVec) -> Result<CVec> {
    let (m, n) = h_br.shape();
    if phi_diag.len() != n || h_ru.len() != n {
        return Err(Error::dims(format!(
            "total_channel: H is {m}x{n}, phases {} and h_ru {}",
            phi_diag.len(),
            h_ru.len()
        )));
    }
    if h_bu.len() != m {
        return Err(Error::dims(format!(
            "total_channel: H is {m}x{n}, h_bu {}",
            h_bu.len()
        )));
    }
    let reflected = CVec::from_fn(n, |i, _| phi_diag[i] * h_ru[i]);
    Ok(h_br * reflected + h_bu)
}

// ============================================================================
// Channel realization
// ============================================================================

/// Cluster configurations for the three links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkClusters {
    pub bu: ClusterConfig,
    pub ru: ClusterConfig,
    pub br: ClusterConfig,
}

/// One Monte Carlo draw of every channel in the system. Ray metadata is
/// retained so closed-form error terms and NMSE approximations can be
/// cross-checked against the exact draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_bu: CVec,
    pub h_ru: CVec,
    pub h_br_los: CMat,
    pub h_br_scatter: CMat,
    pub bu_rays: Vec<Ray>,
    pub ru_rays: Vec<Ray>,
    pub br_rays: Vec<BrRay>,
    pub gains: LargeScaleParams,
}

impl ChannelRealization {
    /// Draw all three links from one stream. `blocked_direct` zeroes the
    /// UE-BS channel (the rays are still drawn so the stream advances
    /// identically in both modes).
    pub fn draw(
        geometry: &SystemGeometry,
        gains: &LargeScaleParams,
        clusters: &LinkClusters,
        blocked_direct: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let (mut h_bu, bu_rays) =
            draw_ray_channel(geometry, gains.beta_bu, &clusters.bu, ArraySide::Bs, rng)?;
        let (h_ru, ru_rays) =
            draw_ray_channel(geometry, gains.beta_ru, &clusters.ru, ArraySide::Ris, rng)?;
        let (h_br_los, h_br_scatter, br_rays) =
            build_ris_bs_channel(geometry, gains, &clusters.br, rng)?;
        if blocked_direct {
            h_bu.fill(Complex64::new(0.0, 0.0));
        }
        Ok(ChannelRealization {
            h_bu,
            h_ru,
            h_br_los,
            h_br_scatter,
            bu_rays,
            ru_rays,
            br_rays,
            gains: gains.clone(),
        })
    }

    /// Full RIS-BS channel (specular plus scattered).
    pub fn h_br(&self) -> CMat {
        &self.h_br_los + &self.h_br_scatter
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_complex_normal, substream};

    fn unit_geometry(n_y: usize, n_z: usize, m: usize) -> SystemGeometry {
        SystemGeometry::new(&GeometrySpec {
            bs_antennas: m,
            ris_columns: n_y,
            ris_rows: n_z,
            ..GeometrySpec::default()
        })
        .unwrap()
    }

    fn test_cluster_cfg() -> ClusterConfig {
        ClusterConfig {
            clusters: 3,
            subrays: 5,
            power_ratio: 0.1,
            azimuth_spread: 14.4f64.to_radians(),
            elevation_spread: 6.24f64.to_radians(),
            azimuth_offset_scale: 1.9f64.to_radians(),
            elevation_offset_scale: 1.37f64.to_radians(),
            azimuth_mean: 0.0,
            elevation_mean: FRAC_PI_2,
        }
    }

    // --- pathloss ---

    #[test]
    fn pathloss_reference_distance_identity() {
        let beta = pathloss(1.0, 0.0, 7.0, 7.0, 3.7).unwrap();
        assert!((beta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pathloss_closed_form() {
        let beta = pathloss(1.0, 0.0, 2.0, 1.0, 2.0).unwrap();
        assert!((beta - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pathloss_shadow_scales_by_db() {
        let base = pathloss(0.5, 0.0, 30.0, 1.0, 3.7).unwrap();
        let up = pathloss(0.5, 10.0, 30.0, 1.0, 3.7).unwrap();
        assert!((up / base - 10.0).abs() < 1e-12);
    }

    #[test]
    fn pathloss_rejects_bad_distances() {
        assert!(pathloss(1.0, 0.0, 0.0, 1.0, 2.0).is_err());
        assert!(pathloss(1.0, 0.0, 5.0, -1.0, 2.0).is_err());
    }

    // --- steering vectors ---

    #[test]
    fn steering_bs_single_element() {
        let a = steering_bs(0.3, 1.1, 1, 0.5);
        assert_eq!(a.len(), 1);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_bs_zenith_is_all_ones() {
        let a = steering_bs(0.8, 0.0, 4, 0.5);
        for k in 0..4 {
            assert!((a[k] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_bs_two_element_broadside_quadrature() {
        let a = steering_bs(FRAC_PI_2, FRAC_PI_2, 2, 0.5);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - Complex64::from_polar(1.0, -PI)).norm() < 1e-12);
    }

    #[test]
    fn steering_ris_degenerate_array() {
        let a = steering_ris(0.37, 1.2, 1, 1, 0.25);
        assert_eq!(a.len(), 1);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_ris_horizon_repeats_column_factor() {
        // cos(theta) = 0: the row factor is all ones.
        let n_y = 3;
        let n_z = 4;
        let a = steering_ris(0.6, FRAC_PI_2, n_y, n_z, 0.5);
        for y in 0..n_y {
            let head = a[y * n_z];
            for z in 1..n_z {
                assert!((a[y * n_z + z] - head).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_ris_two_by_two_frozen() {
        let a = steering_ris(FRAC_PI_2, FRAC_PI_2, 2, 2, 0.5);
        let expect = [1.0, 1.0, -1.0, -1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((a[k] - Complex64::new(*e, 0.0)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn steering_ris_matches_double_loop_oracle() {
        // Element (y, z) must equal a_y[y] * a_z[z] with the column-major map.
        let mut rng = substream(11, "angles", &[]);
        for n_y in 1..=4usize {
            for n_z in 1..=4usize {
                for _ in 0..20 {
                    let phi = sample_phase(&mut rng) - PI;
                    let theta = sample_phase(&mut rng) / 2.0;
                    let d_r = 0.25 + 0.5 * (theta / PI);
                    let a = steering_ris(phi, theta, n_y, n_z, d_r);
                    for y in 0..n_y {
                        let ay = Complex64::from_polar(
                            1.0,
                            -TAU * d_r * (y as f64) * theta.sin() * phi.sin(),
                        );
                        for z in 0..n_z {
                            let az =
                                Complex64::from_polar(1.0, -TAU * d_r * (z as f64) * theta.cos());
                            let oracle = ay * az;
                            assert!(
                                (a[y * n_z + z] - oracle).norm() < 1e-12,
                                "mismatch at y={y} z={z}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn steering_vectors_unit_modulus() {
        let mut rng = substream(12, "angles", &[]);
        for _ in 0..50 {
            let phi = sample_phase(&mut rng) - PI;
            let theta = sample_phase(&mut rng) / 2.0;
            for z in steering_bs(phi, theta, 6, 0.5).iter() {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
            for z in steering_ris(phi, theta, 3, 5, 0.25).iter() {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    // --- cluster powers ---

    #[test]
    fn cluster_powers_single_cluster() {
        assert_eq!(cluster_powers(3.0, 1, 0.5).unwrap(), vec![3.0]);
    }

    #[test]
    fn cluster_powers_three_clusters_frozen() {
        // Normalized geometric sequence with q = sqrt(0.1).
        let p = cluster_powers(1.0, 3, 0.1).unwrap();
        let expect = [
            0.706_101_111_696_542_3,
            0.223_288_777_133_803_35,
            0.070_610_111_169_654_24,
        ];
        for (a, b) in p.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cluster_powers_sum_and_ratio_invariants() {
        for c in 1..=6usize {
            for eta in [0.05, 0.1, 0.5, 1.0] {
                let beta = 2.5;
                let p = cluster_powers(beta, c, eta).unwrap();
                let sum: f64 = p.iter().sum();
                assert!((sum - beta).abs() < 1e-12 * beta);
                if c > 1 {
                    assert!((p[c - 1] / p[0] - eta).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cluster_powers_brute_force_oracle() {
        // Independent normalization of the raw geometric sequence.
        let (beta, c, eta) = (1.7f64, 5usize, 0.2f64);
        let q = eta.powf(0.25);
        let raw: Vec<f64> = (0..c).map(|k| q.powi(k as i32)).collect();
        let total: f64 = raw.iter().sum();
        let oracle: Vec<f64> = raw.iter().map(|w| beta * w / total).collect();
        let p = cluster_powers(beta, c, eta).unwrap();
        for (a, b) in p.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    // --- ray channels ---

    #[test]
    fn single_ray_norm_is_exact() {
        let geom = unit_geometry(2, 2, 6);
        let cfg = ClusterConfig {
            clusters: 1,
            subrays: 1,
            ..test_cluster_cfg()
        };
        let mut rng = substream(3, "ray", &[]);
        let (h, rays) = draw_ray_channel(&geom, 1.0, &cfg, ArraySide::Bs, &mut rng).unwrap();
        assert_eq!(rays.len(), 1);
        assert!((h.norm_squared() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn ray_gain_magnitude_matches_assigned_power() {
        let geom = unit_geometry(2, 3, 4);
        let cfg = test_cluster_cfg();
        let mut rng = substream(4, "ray", &[]);
        let beta = 0.37;
        let (_, rays) = draw_ray_channel(&geom, beta, &cfg, ArraySide::Ris, &mut rng).unwrap();
        let powers = cluster_powers(beta, cfg.clusters, cfg.power_ratio).unwrap();
        assert_eq!(rays.len(), cfg.clusters * cfg.subrays);
        let mut total = 0.0;
        for (i, ray) in rays.iter().enumerate() {
            let expect = powers[i / cfg.subrays] / cfg.subrays as f64;
            assert!((ray.gain.norm_sqr() - expect).abs() < 1e-12);
            assert!((ray.power - expect).abs() < 1e-15);
            total += ray.power;
        }
        assert!((total - beta).abs() < 1e-12);
    }

    #[test]
    fn ray_channel_mean_power_monte_carlo() {
        let geom = unit_geometry(2, 2, 4);
        let cfg = test_cluster_cfg();
        let beta = 0.8;
        let m = geom.bs_antennas as f64;
        let mut acc = 0.0;
        let trials = 10_000;
        for t in 0..trials {
            let mut rng = substream(5, "raymc", &[t]);
            let (h, _) = draw_ray_channel(&geom, beta, &cfg, ArraySide::Bs, &mut rng).unwrap();
            acc += h.norm_squared() / (m * beta);
        }
        let mean = acc / trials as f64;
        assert!((0.95..=1.05).contains(&mean), "mean {mean}");
    }

    #[test]
    fn identical_seeds_produce_identical_realizations() {
        let geom = unit_geometry(2, 4, 4);
        let gains =
            LargeScaleParams::new(1e-6, 2e-6, 0.01, RicianFactor::from_db(12.0)).unwrap();
        let clusters = LinkClusters {
            bu: test_cluster_cfg(),
            ru: test_cluster_cfg(),
            br: ClusterConfig {
                clusters: 2,
                subrays: 2,
                ..test_cluster_cfg()
            },
        };
        let a = ChannelRealization::draw(
            &geom,
            &gains,
            &clusters,
            false,
            &mut substream(9, "trial", &[3]),
        )
        .unwrap();
        let b = ChannelRealization::draw(
            &geom,
            &gains,
            &clusters,
            false,
            &mut substream(9, "trial", &[3]),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    // --- RIS-BS channel ---

    #[test]
    fn pure_los_br_channel_is_rank_one() {
        let geom = unit_geometry(3, 4, 5);
        let gains = LargeScaleParams::new(1e-6, 1e-6, 0.01, RicianFactor::PureLos).unwrap();
        let cfg = ClusterConfig {
            clusters: 2,
            subrays: 2,
            ..test_cluster_cfg()
        };
        let mut rng = substream(6, "br", &[]);
        let (los, scatter, rays) = build_ris_bs_channel(&geom, &gains, &cfg, &mut rng).unwrap();
        assert!(rays.is_empty());
        assert!(scatter.norm() == 0.0);
        let h = &los + &scatter;
        let svals = h.svd(false, false).singular_values;
        assert!(svals[1] < 1e-10 * svals[0]);
    }

    #[test]
    fn los_frobenius_norm_matches_outer_product() {
        let geom = unit_geometry(3, 4, 5);
        let gains = LargeScaleParams::new(1e-6, 1e-6, 0.02, RicianFactor::PureLos).unwrap();
        let cfg = test_cluster_cfg();
        let mut rng = substream(7, "br", &[]);
        let (los, _, _) = build_ris_bs_channel(&geom, &gains, &cfg, &mut rng).unwrap();
        let expect = geom.bs_antennas as f64 * geom.ris_elements() as f64 * gains.beta_br_los;
        assert!((los.norm_squared() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn k_factor_split_is_exact() {
        for k_db in [-10.0, 0.0, 10.0, 30.0] {
            let gains =
                LargeScaleParams::new(1.0, 1.0, 0.5, RicianFactor::from_db(k_db)).unwrap();
            assert!(
                (gains.beta_br_los + gains.beta_br_scatter - gains.beta_br).abs()
                    < 1e-12 * gains.beta_br
            );
        }
    }

    // --- total channel ---

    #[test]
    fn total_channel_direct_only() {
        let h_br = CMat::zeros(3, 2);
        let phi = CVec::from_element(2, Complex64::new(1.0, 0.0));
        let h_ru = CVec::zeros(2);
        let h_bu = CVec::from_fn(3, |i, _| Complex64::new(i as f64, 1.0));
        let tot = total_channel(&h_br, &phi, &h_ru, &h_bu).unwrap();
        assert!((tot - h_bu).norm() < 1e-15);
    }

    #[test]
    fn total_channel_scalar_case() {
        let h_br = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let one = CVec::from_element(1, Complex64::new(1.0, 0.0));
        let tot = total_channel(&h_br, &one, &one, &one).unwrap();
        assert!((tot[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn total_channel_matches_triple_loop_oracle() {
        let mut rng = substream(8, "tot", &[]);
        let (m, n) = (4, 6);
        let h_br = CMat::from_fn(m, n, |_, _| sample_complex_normal(&mut rng));
        let phi = CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, sample_phase(&mut rng)));
        let h_ru = CVec::from_fn(n, |_, _| sample_complex_normal(&mut rng));
        let h_bu = CVec::from_fn(m, |_, _| sample_complex_normal(&mut rng));
        let tot = total_channel(&h_br, &phi, &h_ru, &h_bu).unwrap();
        for i in 0..m {
            let mut acc = h_bu[i];
            for k in 0..n {
                acc += h_br[(i, k)] * phi[k] * h_ru[k];
            }
            assert!((tot[i] - acc).norm() < 1e-12 * acc.norm().max(1.0));
        }
    }

    #[test]
    fn total_channel_rejects_mismatched_shapes() {
        let h_br = CMat::zeros(3, 2);
        let phi = CVec::zeros(3);
        let h_ru = CVec::zeros(2);
        let h_bu = CVec::zeros(3);
        assert!(total_channel(&h_br, &phi, &h_ru, &h_bu).is_err());
    }

    // --- geometry ---

    #[test]
    fn geometry_rejects_ue_outside_annulus() {
        let spec = GeometrySpec {
            ue_distance_m: 8.0,
            ..GeometrySpec::default()
        };
        assert!(SystemGeometry::new(&spec).is_err());
    }

    #[test]
    fn geometry_distances_and_angles() {
        let spec = GeometrySpec::default();
        let geom = SystemGeometry::new(&spec).unwrap();
        let expect = (50.0f64.powi(2) + 25.0).sqrt();
        assert!((geom.bs_ue_distance_m - expect).abs() < 1e-12);
        assert!((geom.ris_ue_distance_m - expect).abs() < 1e-12);
        // Rotations of +-pi/4 put the LoS path at +-pi/4 from broadside.
        assert!((geom.bs_los_azimuth - FRAC_PI_2 / 2.0).abs() < 1e-12);
        assert!((geom.ris_los_azimuth + FRAC_PI_2 / 2.0).abs() < 1e-12);
    }
}
