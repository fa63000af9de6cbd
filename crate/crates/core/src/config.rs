//! Scenario configuration: TOML schema, presets, validation, and resolution
//! into the domain objects the Monte Carlo harness consumes.
//!
//! A config file either names a `preset` (`"scenario1"` or `"scenario2"`,
//! optionally replacing whole sections) or spells out all five sections:
//!
//! ```toml
//! preset = "scenario1"
//!
//! [run]
//! trials = 500
//! seed = 7
//! sweep = "k_db"
//! grid = [0.0, 10.0, 20.0, 30.0]
//! ```
//!
//! Angles are degrees in the file (`*_deg` keys) and radians in the domain
//! types. The two presets correspond to a narrow-spread measurement-based
//! environment and a wider-spread model, at desk scale (`M = 8`, `N_y = 4`)
//! so full sweeps run in seconds; full-scale array sizes are a config
//! choice, not a code path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::str::FromStr;

use crate::channel::{
    ClusterConfig, GeometrySpec, LargeScaleParams, LinkClusters, PathlossSpec, RicianFactor,
    SystemGeometry,
};
use crate::error::{Error, Result};
use crate::estimator::{InterpolationMethod, Stage2Mode};
use crate::rng::substream;
use crate::training::TrainingKind;

// ============================================================================
// Config sections
// ============================================================================

/// `[geometry]` section; rotations in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs_antennas: usize,
    pub ris_columns: usize,
    pub ris_rows: usize,
    pub bs_spacing: f64,
    pub ris_spacing: f64,
    pub cell_radius_m: f64,
    pub exclusion_radius_m: f64,
    pub ue_distance_m: f64,
    pub bs_ris_distance_m: f64,
    pub bs_rotation_deg: f64,
    pub ris_rotation_deg: f64,
}

impl GeometryConfig {
    fn to_spec(&self) -> GeometrySpec {
        GeometrySpec {
            bs_antennas: self.bs_antennas,
            ris_columns: self.ris_columns,
            ris_rows: self.ris_rows,
            bs_spacing: self.bs_spacing,
            ris_spacing: self.ris_spacing,
            cell_radius_m: self.cell_radius_m,
            exclusion_radius_m: self.exclusion_radius_m,
            ue_distance_m: self.ue_distance_m,
            bs_ris_distance_m: self.bs_ris_distance_m,
            bs_rotation_rad: self.bs_rotation_deg.to_radians(),
            ris_rotation_rad: self.ris_rotation_deg.to_radians(),
        }
    }
}

/// Pathloss parameters of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkPathlossConfig {
    pub attenuation: f64,
    pub reference_m: f64,
    pub exponent: f64,
    pub shadow_sigma_db: f64,
}

impl LinkPathlossConfig {
    fn to_spec(&self) -> PathlossSpec {
        PathlossSpec::new(
            self.attenuation,
            self.reference_m,
            self.exponent,
            self.shadow_sigma_db,
        )
    }
}

/// `[links]` section: per-link pathloss and the RIS-BS Rician split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinksConfig {
    /// Rician K of the RIS-BS link in dB. Ignored when `pure_los` is set.
    pub k_factor_db: f64,
    /// Force an exactly rank-1 RIS-BS channel.
    pub pure_los: bool,
    pub bu: LinkPathlossConfig,
    pub ru: LinkPathlossConfig,
    pub br: LinkPathlossConfig,
}

impl LinksConfig {
    pub fn k_factor(&self) -> RicianFactor {
        if self.pure_los {
            RicianFactor::PureLos
        } else {
            RicianFactor::from_db(self.k_factor_db)
        }
    }
}

/// Cluster statistics of one link; angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpecConfig {
    pub clusters: usize,
    pub subrays: usize,
    pub power_ratio: f64,
    pub azimuth_spread_deg: f64,
    pub elevation_spread_deg: f64,
    pub azimuth_offset_deg: f64,
    pub elevation_offset_deg: f64,
    pub azimuth_mean_deg: f64,
    pub elevation_mean_deg: f64,
}

impl ClusterSpecConfig {
    fn to_domain(&self) -> ClusterConfig {
        ClusterConfig {
            clusters: self.clusters,
            subrays: self.subrays,
            power_ratio: self.power_ratio,
            azimuth_spread: self.azimuth_spread_deg.to_radians(),
            elevation_spread: self.elevation_spread_deg.to_radians(),
            azimuth_offset_scale: self.azimuth_offset_deg.to_radians(),
            elevation_offset_scale: self.elevation_offset_deg.to_radians(),
            azimuth_mean: self.azimuth_mean_deg.to_radians(),
            elevation_mean: self.elevation_mean_deg.to_radians(),
        }
    }
}

/// `[clusters]` section. The `br` means are ignored (the scatter clusters of
/// the RIS-BS link are centered on its LoS angles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClustersConfig {
    pub bu: ClusterSpecConfig,
    pub ru: ClusterSpecConfig,
    pub br: ClusterSpecConfig,
}

/// `[protocol]` section: training/interpolation variants and pilot budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Training families to simulate; each is crossed with every
    /// interpolation method.
    pub trainings: Vec<TrainingKind>,
    pub interpolations: Vec<InterpolationMethod>,
    /// Stage-two pilot count.
    pub tau_2: usize,
    pub stage2_mode: Stage2Mode,
    /// Coherence frame length `T` in symbols.
    pub frame_length: usize,
    /// Received training SNR through the RIS-assisted link,
    /// `rho * beta_ru * beta_br`, in dB (shadow-free calibration).
    pub ris_link_snr_db: f64,
    /// Median received SNR of the direct link, `rho_d * beta_bu`, in dB
    /// (shadow-free calibration).
    pub direct_link_snr_db: f64,
}

/// Swept variable of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// RIS-BS Rician factor in dB.
    KDb,
    /// RIS element spacing in wavelengths.
    DR,
    /// Training SNR knob (RIS-link received SNR) in dB.
    RhoDb,
    /// Stage-two pilot count.
    Tau2,
    /// Gaussian phase-error std-dev (perfect-CSI perturbation experiment).
    SigmaE,
}

impl SweepVar {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVar::KDb => "k_db",
            SweepVar::DR => "d_r",
            SweepVar::RhoDb => "rho_db",
            SweepVar::Tau2 => "tau_2",
            SweepVar::SigmaE => "sigma_e",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k_db" | "kdb" | "k" => Ok(SweepVar::KDb),
            "d_r" | "dr" | "spacing" => Ok(SweepVar::DR),
            "rho_db" | "rhodb" | "rho" => Ok(SweepVar::RhoDb),
            "tau_2" | "tau2" => Ok(SweepVar::Tau2),
            "sigma_e" | "sigmae" => Ok(SweepVar::SigmaE),
            other => Err(Error::Config(format!(
                "run.sweep: unknown variable '{other}' \
                 (expected k_db | d_r | rho_db | tau_2 | sigma_e)"
            ))),
        }
    }
}

/// `[run]` section: Monte Carlo controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    /// Disable receiver noise in both stages.
    pub zero_noise: bool,
    /// Zero the direct UE-BS channel.
    pub blocked_direct: bool,
    /// Also simulate the no-estimation baseline (random transmission phases,
    /// no pilots).
    pub include_baseline: bool,
}

/// Complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub links: LinksConfig,
    pub clusters: ClustersConfig,
    pub protocol: ProtocolConfig,
    pub run: RunConfig,
}

// ============================================================================
// Presets
// ============================================================================

fn cluster_spec(
    clusters: usize,
    subrays: usize,
    az_spread: f64,
    el_spread: f64,
    az_offset: f64,
    el_offset: f64,
) -> ClusterSpecConfig {
    ClusterSpecConfig {
        clusters,
        subrays,
        power_ratio: 0.1,
        azimuth_spread_deg: az_spread,
        elevation_spread_deg: el_spread,
        azimuth_offset_deg: az_offset,
        elevation_offset_deg: el_offset,
        azimuth_mean_deg: 0.0,
        elevation_mean_deg: 90.0,
    }
}

fn base_preset(
    ris_rows: usize,
    ris_spacing: f64,
    k_factor_db: f64,
    az_spread: f64,
    az_offset: f64,
    el_spread: f64,
    el_offset: f64,
) -> ScenarioConfig {
    let ue_links = LinkPathlossConfig {
        attenuation: 1.0,
        reference_m: 1.0,
        exponent: 3.7,
        shadow_sigma_db: 5.5,
    };
    ScenarioConfig {
        geometry: GeometryConfig {
            bs_antennas: 8,
            ris_columns: 4,
            ris_rows,
            bs_spacing: 0.5,
            ris_spacing,
            cell_radius_m: 100.0,
            exclusion_radius_m: 15.0,
            ue_distance_m: 50.0,
            bs_ris_distance_m: 10.0,
            bs_rotation_deg: 45.0,
            ris_rotation_deg: -45.0,
        },
        links: LinksConfig {
            k_factor_db,
            pure_los: false,
            bu: ue_links.clone(),
            ru: ue_links,
            br: LinkPathlossConfig {
                attenuation: 1.0,
                reference_m: 1.0,
                exponent: 2.0,
                shadow_sigma_db: 0.0,
            },
        },
        clusters: ClustersConfig {
            bu: cluster_spec(3, 5, az_spread, el_spread, az_offset, el_offset),
            ru: cluster_spec(3, 5, az_spread, el_spread, az_offset, el_offset),
            // Scatter clusters of the RIS-BS link: the central elevation
            // angles use the azimuth spread value, matching the stated model.
            br: cluster_spec(2, 2, az_spread, az_spread, az_offset, el_offset),
        },
        protocol: ProtocolConfig {
            trainings: vec![TrainingKind::Mdft],
            interpolations: vec![
                InterpolationMethod::OnePt,
                InterpolationMethod::TwoPt,
                InterpolationMethod::ThreePt,
                InterpolationMethod::NzPt,
            ],
            tau_2: 1,
            stage2_mode: Stage2Mode::Reestimate,
            frame_length: 400,
            ris_link_snr_db: 5.0,
            direct_link_snr_db: 0.0,
        },
        run: RunConfig {
            trials: 200,
            seed: 1,
            sweep: SweepVar::KDb,
            grid: vec![0.0, 10.0, 20.0, 30.0],
            zero_noise: false,
            blocked_direct: false,
            include_baseline: false,
        },
    }
}

impl ScenarioConfig {
    /// Built-in presets: `scenario1` (narrow angular spread, near-LoS RIS-BS
    /// link, `N_z = 8`, quarter-wavelength RIS spacing) and `scenario2`
    /// (wide spread, `K = 12` dB, `N_z = 16`, half-wavelength spacing).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "scenario1" => Ok(base_preset(8, 0.25, 1000.0, 14.4, 1.9, 6.24, 1.37)),
            "scenario2" => Ok(base_preset(16, 0.5, 12.0, 31.64, 6.12, 24.25, 1.84)),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected scenario1 | scenario2)"
            ))),
        }
    }

    /// Parse a config document: either a full five-section description or a
    /// `preset` plus whole-section overrides.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawConfig {
            preset: Option<String>,
            geometry: Option<GeometryConfig>,
            links: Option<LinksConfig>,
            clusters: Option<ClustersConfig>,
            protocol: Option<ProtocolConfig>,
            run: Option<RunConfig>,
        }
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        let mut config = match &raw.preset {
            Some(name) => ScenarioConfig::preset(name)?,
            None => {
                let mut missing = Vec::new();
                if raw.geometry.is_none() {
                    missing.push("[geometry]");
                }
                if raw.links.is_none() {
                    missing.push("[links]");
                }
                if raw.clusters.is_none() {
                    missing.push("[clusters]");
                }
                if raw.protocol.is_none() {
                    missing.push("[protocol]");
                }
                if raw.run.is_none() {
                    missing.push("[run]");
                }
                if !missing.is_empty() {
                    return Err(Error::Config(format!(
                        "missing required sections: {} \
                         (or select a preset with `preset = \"scenario1\"`)",
                        missing.join(", ")
                    )));
                }
                ScenarioConfig {
                    geometry: raw.geometry.clone().unwrap(),
                    links: raw.links.clone().unwrap(),
                    clusters: raw.clusters.clone().unwrap(),
                    protocol: raw.protocol.clone().unwrap(),
                    run: raw.run.clone().unwrap(),
                }
            }
        };
        if raw.preset.is_some() {
            if let Some(geometry) = raw.geometry {
                config.geometry = geometry;
            }
            if let Some(links) = raw.links {
                config.links = links;
            }
            if let Some(clusters) = raw.clusters {
                config.clusters = clusters;
            }
            if let Some(protocol) = raw.protocol {
                config.protocol = protocol;
            }
            if let Some(run) = raw.run {
                config.run = run;
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Load and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Serialize to canonical TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize error: {e}")))
    }

    /// Stable 16-hex-digit hash of the canonical serialization.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Check every cross-field constraint, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        SystemGeometry::new(&self.geometry.to_spec())
            .map_err(|e| Error::Config(format!("geometry: {e}")))?;
        for (name, link) in [
            ("links.bu", &self.links.bu),
            ("links.ru", &self.links.ru),
            ("links.br", &self.links.br),
        ] {
            if link.attenuation <= 0.0 {
                return Err(Error::Config(format!("{name}.attenuation must be positive")));
            }
            if link.reference_m <= 0.0 {
                return Err(Error::Config(format!("{name}.reference_m must be positive")));
            }
            if link.shadow_sigma_db < 0.0 {
                return Err(Error::Config(format!(
                    "{name}.shadow_sigma_db must be non-negative"
                )));
            }
        }
        for (name, spec) in [
            ("clusters.bu", &self.clusters.bu),
            ("clusters.ru", &self.clusters.ru),
            ("clusters.br", &self.clusters.br),
        ] {
            spec.to_domain()
                .validate()
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
        }
        if self.protocol.trainings.is_empty() {
            return Err(Error::Config(
                "protocol.trainings must list at least one design".to_string(),
            ));
        }
        if self.protocol.interpolations.is_empty() {
            return Err(Error::Config(
                "protocol.interpolations must list at least one method".to_string(),
            ));
        }
        if self.protocol.frame_length == 0 {
            return Err(Error::Config("protocol.frame_length must be >= 1".to_string()));
        }
        for method in &self.protocol.interpolations {
            let n_prime = method.n_prime(self.geometry.ris_columns, self.geometry.ris_rows);
            let tau = n_prime + 1 + self.protocol.tau_2;
            if tau > self.protocol.frame_length {
                return Err(Error::Config(format!(
                    "protocol.frame_length {} cannot fit tau_1 + tau_2 = {tau} \
                     for interpolation '{}'",
                    self.protocol.frame_length,
                    method.label()
                )));
            }
        }
        if self.run.trials == 0 {
            return Err(Error::Config("run.trials must be >= 1".to_string()));
        }
        if self.run.grid.is_empty() {
            return Err(Error::Config("run.grid must be non-empty".to_string()));
        }
        let reestimate = matches!(self.protocol.stage2_mode, Stage2Mode::Reestimate);
        if reestimate && self.protocol.tau_2 == 0 && !matches!(self.run.sweep, SweepVar::Tau2) {
            return Err(Error::Config(
                "protocol.tau_2: re-estimation needs at least one stage-2 pilot".to_string(),
            ));
        }
        if matches!(self.run.sweep, SweepVar::Tau2) {
            for v in &self.run.grid {
                if v.fract() != 0.0 || *v < 0.0 {
                    return Err(Error::Config(format!(
                        "run.grid: tau_2 sweep values must be non-negative integers, got {v}"
                    )));
                }
                if reestimate && *v == 0.0 {
                    return Err(Error::Config(
                        "run.grid: tau_2 = 0 is incompatible with re-estimation".to_string(),
                    ));
                }
            }
        }
        if matches!(self.run.sweep, SweepVar::SigmaE) {
            for v in &self.run.grid {
                if *v < 0.0 {
                    return Err(Error::Config(format!(
                        "run.grid: sigma_e values must be non-negative, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Apply one sweep value, returning the adjusted config. `sigma_e` runs
    /// leave the config unchanged (the harness handles that mode directly).
    /// K sweeps disable shadowing, mirroring the reference experiments.
    pub fn with_sweep_value(&self, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match self.run.sweep {
            SweepVar::KDb => {
                out.links.k_factor_db = value;
                out.links.pure_los = false;
                out.links.bu.shadow_sigma_db = 0.0;
                out.links.ru.shadow_sigma_db = 0.0;
                out.links.br.shadow_sigma_db = 0.0;
            }
            SweepVar::DR => {
                if value <= 0.0 {
                    return Err(Error::Config(format!(
                        "d_r sweep value must be positive, got {value}"
                    )));
                }
                out.geometry.ris_spacing = value;
            }
            SweepVar::RhoDb => {
                out.protocol.ris_link_snr_db = value;
            }
            SweepVar::Tau2 => {
                out.protocol.tau_2 = value as usize;
            }
            SweepVar::SigmaE => {}
        }
        Ok(out)
    }

    /// Resolve the scenario into domain objects and calibrated SNRs.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        self.validate()?;
        let geometry = SystemGeometry::new(&self.geometry.to_spec())?;
        let bu = self.links.bu.to_spec();
        let ru = self.links.ru.to_spec();
        let br = self.links.br.to_spec();
        let beta_bu = bu.gain(geometry.bs_ue_distance_m)?;
        let beta_ru = ru.gain(geometry.ris_ue_distance_m)?;
        let beta_br = br.gain(geometry.bs_ris_distance_m)?;
        // Shadow-free SNR calibration.
        let rho = 10f64.powf(self.protocol.ris_link_snr_db / 10.0) / (beta_ru * beta_br);
        let rho_d = 10f64.powf(self.protocol.direct_link_snr_db / 10.0) / beta_bu;
        let mut clusters = LinkClusters {
            bu: self.clusters.bu.to_domain(),
            ru: self.clusters.ru.to_domain(),
            br: self.clusters.br.to_domain(),
        };
        clusters.br.azimuth_mean = geometry.ris_los_azimuth;
        clusters.br.elevation_mean = geometry.ris_los_elevation;
        Ok(ResolvedScenario {
            geometry,
            clusters,
            pathloss_bu: bu,
            pathloss_ru: ru,
            pathloss_br: br,
            beta_bu_nominal: beta_bu,
            beta_ru_nominal: beta_ru,
            beta_br_nominal: beta_br,
            k_factor: self.links.k_factor(),
            rho,
            rho_d,
            tau_2: self.protocol.tau_2,
            stage2_mode: self.protocol.stage2_mode,
            frame_length: self.protocol.frame_length,
            zero_noise: self.run.zero_noise,
            blocked_direct: self.run.blocked_direct,
        })
    }
}

// ============================================================================
// Resolved scenario
// ============================================================================

/// Domain view of a scenario at one sweep point.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub geometry: SystemGeometry,
    pub clusters: LinkClusters,
    pub pathloss_bu: PathlossSpec,
    pub pathloss_ru: PathlossSpec,
    pub pathloss_br: PathlossSpec,
    /// Shadow-free link gains used for SNR calibration.
    pub beta_bu_nominal: f64,
    pub beta_ru_nominal: f64,
    pub beta_br_nominal: f64,
    pub k_factor: RicianFactor,
    /// Uplink training SNR (linear).
    pub rho: f64,
    /// Data-phase SNR (linear).
    pub rho_d: f64,
    pub tau_2: usize,
    pub stage2_mode: Stage2Mode,
    pub frame_length: usize,
    pub zero_noise: bool,
    pub blocked_direct: bool,
}

impl ResolvedScenario {
    /// Realized large-scale gains for one trial: a fresh shadowing draw per
    /// link (in the fixed order BU, RU, BR) applied on top of the nominal
    /// pathloss, then the Rician split.
    pub fn draw_gains(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Result<LargeScaleParams> {
        let beta_bu = self
            .pathloss_bu
            .shadowed_gain(self.geometry.bs_ue_distance_m, rng)?;
        let beta_ru = self
            .pathloss_ru
            .shadowed_gain(self.geometry.ris_ue_distance_m, rng)?;
        let beta_br = self
            .pathloss_br
            .shadowed_gain(self.geometry.bs_ris_distance_m, rng)?;
        LargeScaleParams::new(beta_bu, beta_ru, beta_br, self.k_factor)
    }

    /// Per-trial channel stream (shared across variants and sweep points so
    /// comparisons ride on common random numbers).
    pub fn channel_rng(&self, master: u64, trial: u64) -> rand_chacha::ChaCha8Rng {
        substream(master, "channel", &[trial])
    }
}
