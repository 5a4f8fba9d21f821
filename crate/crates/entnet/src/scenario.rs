//! Scenario definition: the complete network description in one TOML
//! document, load-time validation, and the derived per-user/per-link optics
//! (paths, transmittances, coexistence noise budgets, fiber substitution).

use crate::error::{Error, Result};
use crate::photonics::{
    power_to_photon_rate, raman_power_from_input, ClassicalChannel, FiberKind, FiberSegment,
    LumpedElement, OpticalPath, PathElement, RamanCrossSection,
};
use crate::spectral::{offset_channel, PumpReference, SpectralSlot, SPEED_OF_LIGHT_NM_THZ};
use crate::topology::{plan_full_mesh, MeshAllocation, User};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// FWHM of a Gaussian divided by its σ: 2√(2 ln 2).
pub const GAUSSIAN_FWHM_OVER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Reference solid-core attenuation used by the equal-total-loss fiber
/// substitution, dB/km.
pub const SOLID_SWAP_ATTENUATION_DB_PER_KM: f64 = 0.17;

pub const SCENARIO_SCHEMA: &str = "entnet-scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub center_itu: i32,
    pub pump_wavelength_nm: f64,
    pub bandwidth_3db_ghz: f64,
    pub bandwidth_10db_ghz: f64,
    pub min_classical_gap_ghz: f64,
    pub i_max: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Pairs/s generated into each (+i, −i) channel pair.
    pub pair_rate_per_channel_cps: f64,
    /// Polarization-correlation quality of the emitted state, 0..=1.
    pub intrinsic_visibility: f64,
    pub pump_power_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Per detector, cps.
    pub dark_rate_cps: f64,
    pub jitter_fwhm_ps: f64,
}

impl DetectorConfig {
    pub fn jitter_sigma_ps(&self) -> f64 {
        self.jitter_fwhm_ps / GAUSSIAN_FWHM_OVER_SIGMA
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bin_width_ps: i64,
    pub span_ps: i64,
    pub window_ps: i64,
    pub default_duration_s: f64,
    pub default_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoexistenceConfig {
    pub enabled: bool,
    /// Label of the path element after which the classical carriers join the
    /// quantum channels.
    pub injection_after_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanScatterConfig {
    /// Optional CSV override for the built-in cross-section table, resolved
    /// relative to the scenario file.
    #[serde(default)]
    pub table_csv: String,
    /// Width of each quantum receiver band, GHz.
    pub rx_bandwidth_ghz: f64,
    /// Scale applied to scattering generated inside hollow-core segments
    /// (0 = none).
    pub hollow_core_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalChannelConfig {
    pub itu_index: i32,
    pub launch_power_dbm: f64,
    pub modulation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathElementConfig {
    Fiber {
        core: FiberKind,
        length_km: f64,
        attenuation_db_per_km: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        raman_active: Option<bool>,
    },
    Lumped {
        label: String,
        insertion_loss_db: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        isolation_db: Option<f64>,
    },
}

impl PathElementConfig {
    pub fn build(&self) -> Result<PathElement> {
        Ok(match self {
            PathElementConfig::Fiber { core, length_km, attenuation_db_per_km, raman_active } => {
                let active = raman_active.unwrap_or(matches!(core, FiberKind::SolidCore));
                PathElement::Fiber(FiberSegment::new(*core, *length_km, *attenuation_db_per_km, active)?)
            }
            PathElementConfig::Lumped { label, insertion_loss_db, isolation_db } => {
                // No isolation figure ⇒ the element suppresses out-of-band
                // light only by its insertion loss.
                let iso = isolation_db.unwrap_or(*insertion_loss_db);
                PathElement::Lumped(LumpedElement::new(label, *insertion_loss_db, iso)?)
            }
        })
    }

    fn label(&self) -> Option<&str> {
        match self {
            PathElementConfig::Lumped { label, .. } => Some(label),
            PathElementConfig::Fiber { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub name: String,
    /// Fixed electrical/optical delay of this user's time tags, ps.
    pub delay_ps: i64,
    /// Extra per-channel routing loss (dB), keyed by ITU index.
    pub channel_loss_db: BTreeMap<String, f64>,
    pub path: Vec<PathElementConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkTuning {
    /// Polarization misalignment per link, keyed `"usera:userb"` in user
    /// declaration order; links absent from the map get 0.
    #[serde(default)]
    pub misalignment: BTreeMap<String, f64>,
}

/// The complete network description. All cross-references are checked by
/// [`Scenario::validate`], which `load` runs before returning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub detectors: DetectorConfig,
    pub analysis: AnalysisConfig,
    pub coexistence: CoexistenceConfig,
    pub raman: RamanScatterConfig,
    #[serde(default)]
    pub classical_channels: Vec<ClassicalChannelConfig>,
    pub users: Vec<UserConfig>,
    #[serde(default)]
    pub links: LinkTuning,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

/// One planned link between two users, in allocation order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub index: usize,
    pub user_a: usize,
    pub user_b: usize,
    pub name: String,
    pub magnitude: i32,
    /// Channel delivered to `user_a` (the −magnitude side).
    pub slot_a: SpectralSlot,
    /// Channel delivered to `user_b` (the +magnitude side).
    pub slot_b: SpectralSlot,
}

/// Photon flux arriving at one user's measurement module from the classical
/// carriers, before detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseBudget {
    pub raman_cps: f64,
    pub crosstalk_cps: f64,
}

impl NoiseBudget {
    pub fn total_cps(&self) -> f64 {
        self.raman_cps + self.crosstalk_cps
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Parse(format!("scenario TOML: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut scenario: Scenario =
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        scenario.validate()?;
        Ok(scenario)
    }

    /// Canonical serialization; loading what this emits reproduces the same
    /// document byte for byte.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("scenario serialize: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Configuration(format!(
                "unknown scenario schema '{}' (expected '{SCENARIO_SCHEMA}')",
                self.schema
            )));
        }
        self.pump_reference()?;
        let g = &self.grid;
        if g.min_classical_gap_ghz < 0.0 {
            return Err(Error::Configuration("min_classical_gap_ghz must be ≥ 0".into()));
        }

        let s = &self.source;
        if !(s.pair_rate_per_channel_cps >= 0.0) {
            return Err(Error::Configuration("pair rate must be ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&s.intrinsic_visibility) {
            return Err(Error::Configuration("intrinsic_visibility must be in [0, 1]".into()));
        }
        if !(s.pump_power_scale >= 0.0) {
            return Err(Error::Configuration("pump_power_scale must be ≥ 0".into()));
        }

        let d = &self.detectors;
        if !(0.0..=1.0).contains(&d.efficiency) {
            return Err(Error::Configuration("detector efficiency must be in [0, 1]".into()));
        }
        if !(d.dark_rate_cps >= 0.0) || !(d.jitter_fwhm_ps > 0.0) {
            return Err(Error::Configuration("dark rate must be ≥ 0 and jitter > 0".into()));
        }

        let a = &self.analysis;
        if a.bin_width_ps <= 0 || a.span_ps <= 0 || a.window_ps <= 0 {
            return Err(Error::Configuration("analysis bin, span, and window must be > 0".into()));
        }
        if a.span_ps % a.bin_width_ps != 0 {
            return Err(Error::Configuration("span_ps must be a multiple of bin_width_ps".into()));
        }
        if (a.span_ps as f64) < 10.0 * d.jitter_fwhm_ps {
            return Err(Error::Configuration("span_ps must cover ≥ 10 × jitter FWHM".into()));
        }
        if !(a.default_duration_s > 0.0) {
            return Err(Error::Configuration("default_duration_s must be > 0".into()));
        }

        let alloc = self.allocation()?;
        for (user_idx, cfg) in self.users.iter().enumerate() {
            if cfg.delay_ps.abs() >= self.analysis.span_ps / 2 {
                return Err(Error::Configuration(format!(
                    "user '{}' delay {} ps must stay inside ±span/2",
                    cfg.name, cfg.delay_ps
                )));
            }
            for key in cfg.channel_loss_db.keys() {
                key.parse::<i32>().map_err(|_| {
                    Error::Configuration(format!(
                        "user '{}': channel_loss_db key '{key}' is not an ITU index",
                        cfg.name
                    ))
                })?;
            }
            for slot in alloc.channels_for(user_idx)? {
                self.channel_loss_db(user_idx, slot.itu_index)?;
            }
            for el in &cfg.path {
                el.build()?;
            }
        }

        for c in &self.classical_channels {
            self.classical_channel(c)?;
        }
        if self.coexistence.enabled {
            if self.classical_channels.is_empty() {
                return Err(Error::Configuration(
                    "coexistence enabled but no classical channels defined".into(),
                ));
            }
            if !(self.raman.rx_bandwidth_ghz > 0.0) {
                return Err(Error::Configuration("raman rx_bandwidth_ghz must be > 0".into()));
            }
            let marker = &self.coexistence.injection_after_label;
            let found = self
                .users
                .iter()
                .any(|u| u.path.iter().any(|el| el.label() == Some(marker.as_str())));
            if !found {
                return Err(Error::Configuration(format!(
                    "coexistence injection label '{marker}' not found in any user path"
                )));
            }
        }
        if !(self.raman.hollow_core_residual >= 0.0) {
            return Err(Error::Configuration("hollow_core_residual must be ≥ 0".into()));
        }

        for (key, value) in &self.links.misalignment {
            self.pair_from_key(key)?;
            if !(0.0..=0.5).contains(value) {
                return Err(Error::Configuration(format!(
                    "misalignment '{key}' = {value} must be in [0, 0.5]"
                )));
            }
        }
        self.raman_table()?;
        Ok(())
    }

    pub fn pump_reference(&self) -> Result<PumpReference> {
        PumpReference::new(self.grid.pump_wavelength_nm, self.center_slot()?)
    }

    pub fn center_slot(&self) -> Result<SpectralSlot> {
        SpectralSlot::on_grid(
            self.grid.center_itu,
            self.grid.center_itu,
            self.grid.bandwidth_3db_ghz,
            self.grid.bandwidth_10db_ghz,
        )
    }

    pub fn slot_at(&self, itu_index: i32) -> Result<SpectralSlot> {
        SpectralSlot::on_grid(
            itu_index,
            self.grid.center_itu,
            self.grid.bandwidth_3db_ghz,
            self.grid.bandwidth_10db_ghz,
        )
    }

    pub fn topology_users(&self) -> Vec<User> {
        self.users.iter().map(|u| User::new(&u.name)).collect()
    }

    pub fn allocation(&self) -> Result<MeshAllocation> {
        plan_full_mesh(&self.topology_users(), self.grid.i_max, &self.center_slot()?)
    }

    pub fn classical_channel(&self, cfg: &ClassicalChannelConfig) -> Result<ClassicalChannel> {
        ClassicalChannel::new(self.slot_at(cfg.itu_index)?, cfg.launch_power_dbm, &cfg.modulation)
    }

    pub fn classical_channels(&self) -> Result<Vec<ClassicalChannel>> {
        self.classical_channels.iter().map(|c| self.classical_channel(c)).collect()
    }

    pub fn user_index(&self, name: &str) -> Result<usize> {
        self.users
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| Error::Lookup(format!("unknown user '{name}'")))
    }

    pub fn user_path(&self, user_idx: usize) -> Result<OpticalPath> {
        let elements = self.users[user_idx]
            .path
            .iter()
            .map(PathElementConfig::build)
            .collect::<Result<Vec<_>>>()?;
        Ok(OpticalPath::new(elements))
    }

    pub fn channel_loss_db(&self, user_idx: usize, itu_index: i32) -> Result<f64> {
        let cfg = &self.users[user_idx];
        cfg.channel_loss_db
            .get(&itu_index.to_string())
            .copied()
            .ok_or_else(|| {
                Error::Configuration(format!(
                    "user '{}' has no channel_loss_db entry for ITU channel {itu_index}",
                    cfg.name
                ))
            })
    }

    /// Total one-sided loss (dB) from the source output to this user's
    /// detectors on one channel: shared path plus per-channel routing loss.
    pub fn one_sided_loss_db(&self, user_idx: usize, itu_index: i32) -> Result<f64> {
        Ok(crate::photonics::path_loss(&self.user_path(user_idx)?)
            + self.channel_loss_db(user_idx, itu_index)?)
    }

    pub fn transmittance(&self, user_idx: usize, itu_index: i32) -> Result<f64> {
        Ok(10f64.powf(-self.one_sided_loss_db(user_idx, itu_index)? / 10.0))
    }

    pub fn effective_pair_rate(&self) -> f64 {
        self.source.pair_rate_per_channel_cps * self.source.pump_power_scale
    }

    /// Planned links in allocation order.
    pub fn links(&self) -> Result<Vec<LinkSpec>> {
        let alloc = self.allocation()?;
        let center = alloc.center;
        alloc
            .assignments
            .iter()
            .enumerate()
            .map(|(index, a)| {
                Ok(LinkSpec {
                    index,
                    user_a: a.user_minus,
                    user_b: a.user_plus,
                    name: format!(
                        "{}-{}",
                        self.users[a.user_minus].name, self.users[a.user_plus].name
                    ),
                    magnitude: a.magnitude,
                    slot_a: offset_channel(&center, -a.magnitude)?,
                    slot_b: offset_channel(&center, a.magnitude)?,
                })
            })
            .collect()
    }

    pub fn link_by_name(&self, name: &str) -> Result<LinkSpec> {
        self.links()?
            .into_iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Lookup(format!("unknown link '{name}'")))
    }

    fn pair_from_key(&self, key: &str) -> Result<(usize, usize)> {
        let (a, b) = key
            .split_once(':')
            .ok_or_else(|| Error::Configuration(format!("link key '{key}' must be 'usera:userb'")))?;
        let ia = self.user_index(a.trim())?;
        let ib = self.user_index(b.trim())?;
        if ia == ib {
            return Err(Error::Configuration(format!("link key '{key}' names one user twice")));
        }
        Ok((ia.min(ib), ia.max(ib)))
    }

    /// Polarization misalignment for the link between two users (0 when
    /// untuned).
    pub fn misalignment(&self, user_a: usize, user_b: usize) -> f64 {
        let (lo, hi) = (user_a.min(user_b), user_a.max(user_b));
        for (key, value) in &self.links.misalignment {
            if let Ok(pair) = self.pair_from_key(key) {
                if pair == (lo, hi) {
                    return *value;
                }
            }
        }
        0.0
    }

    /// Pair-correlation visibility of one link after polarization
    /// misalignment: V₀ × (1 − 2e).
    pub fn link_visibility(&self, user_a: usize, user_b: usize) -> f64 {
        self.source.intrinsic_visibility * (1.0 - 2.0 * self.misalignment(user_a, user_b))
    }

    pub fn raman_table(&self) -> Result<RamanCrossSection> {
        if self.raman.table_csv.is_empty() {
            return Ok(RamanCrossSection::default());
        }
        let p = PathBuf::from(&self.raman.table_csv);
        let resolved = if p.is_absolute() {
            p
        } else {
            self.base_dir.clone().unwrap_or_default().join(p)
        };
        RamanCrossSection::from_csv_path(&resolved)
    }

    /// Receiver band width in nm at a slot's center wavelength.
    pub fn rx_bandwidth_nm(&self, slot: &SpectralSlot) -> f64 {
        let lambda = slot.wavelength_nm();
        lambda * lambda * (self.raman.rx_bandwidth_ghz * 1e-3) / SPEED_OF_LIGHT_NM_THZ
    }

    /// Classical-carrier noise flux reaching one user's measurement module
    /// (0 when coexistence is off or the carriers never share this user's
    /// path). Walks the user's path from the injection point: scattering
    /// generated in each active fiber segment is attenuated by the remaining
    /// in-band losses; the carriers themselves are attenuated by fiber and by
    /// filter isolation, and whatever survives the chain is crosstalk.
    pub fn coexistence_noise(&self, user_idx: usize) -> Result<NoiseBudget> {
        if !self.coexistence.enabled {
            return Ok(NoiseBudget::default());
        }
        let cfg = &self.users[user_idx];
        let marker = &self.coexistence.injection_after_label;
        let Some(start) = cfg.path.iter().position(|el| el.label() == Some(marker.as_str())) else {
            return Ok(NoiseBudget::default());
        };
        let elements: Vec<PathElement> = cfg.path[start + 1..]
            .iter()
            .map(PathElementConfig::build)
            .collect::<Result<Vec<_>>>()?;

        let table = self.raman_table()?;
        let alloc = self.allocation()?;
        let quantum_slots = alloc.channels_for(user_idx)?;
        let classical = self.classical_channels()?;
        let residual = self.raman.hollow_core_residual;

        let mut suffix_loss_db: Vec<f64> = vec![0.0; elements.len() + 1];
        for (i, el) in elements.iter().enumerate().rev() {
            suffix_loss_db[i] = suffix_loss_db[i + 1] + el.loss_db();
        }

        let mut raman_w_per_quantum: Vec<f64> = vec![0.0; quantum_slots.len()];
        let mut crosstalk_cps = 0.0;
        for ch in &classical {
            let mut carrier_w = crate::photonics::dbm_to_watts(ch.launch_power_dbm);
            for (i, el) in elements.iter().enumerate() {
                match el {
                    PathElement::Fiber(seg) => {
                        let scale = if seg.raman_active {
                            1.0
                        } else if matches!(seg.kind, FiberKind::HollowCore) && residual > 0.0 {
                            residual
                        } else {
                            0.0
                        };
                        if scale > 0.0 && seg.length_km > 0.0 {
                            let active = FiberSegment { raman_active: true, ..*seg };
                            for (qi, q) in quantum_slots.iter().enumerate() {
                                let dl = q.wavelength_nm() - ch.slot.wavelength_nm();
                                let generated = scale
                                    * raman_power_from_input(
                                        carrier_w,
                                        &active,
                                        dl,
                                        self.rx_bandwidth_nm(q),
                                        &table,
                                    )?;
                                raman_w_per_quantum[qi] +=
                                    generated * 10f64.powf(-suffix_loss_db[i + 1] / 10.0);
                            }
                        }
                        carrier_w *= 10f64.powf(-seg.loss_db() / 10.0);
                    }
                    PathElement::Lumped(l) => {
                        if l.isolation_db.is_infinite() {
                            carrier_w = 0.0;
                        } else {
                            carrier_w *= 10f64.powf(-l.isolation_db / 10.0);
                        }
                    }
                }
            }
            crosstalk_cps += power_to_photon_rate(carrier_w, ch.slot.wavelength_nm());
        }

        let mut raman_cps = 0.0;
        for (qi, q) in quantum_slots.iter().enumerate() {
            raman_cps += power_to_photon_rate(raman_w_per_quantum[qi], q.wavelength_nm());
        }
        Ok(NoiseBudget { raman_cps, crosstalk_cps })
    }

    /// Forces coexistence on or off.
    pub fn set_coexistence(&mut self, enabled: bool) {
        self.coexistence.enabled = enabled;
    }

    /// Replaces every hollow-core segment with a scattering-active solid-core
    /// segment of the same length at the reference attenuation, followed by a
    /// lumped equalizer restoring the original segment loss. Total path loss
    /// is unchanged.
    pub fn swap_hollow_to_solid(&mut self) -> Result<()> {
        for user in &mut self.users {
            let mut new_path = Vec::with_capacity(user.path.len());
            let mut counter = 0;
            for el in &user.path {
                match el {
                    PathElementConfig::Fiber { core: FiberKind::HollowCore, length_km, attenuation_db_per_km, .. } => {
                        let excess_db = length_km * (attenuation_db_per_km - SOLID_SWAP_ATTENUATION_DB_PER_KM);
                        if excess_db < 0.0 {
                            return Err(Error::Configuration(format!(
                                "hollow segment at {attenuation_db_per_km} dB/km is below the solid reference; equal-loss swap impossible"
                            )));
                        }
                        counter += 1;
                        new_path.push(PathElementConfig::Fiber {
                            core: FiberKind::SolidCore,
                            length_km: *length_km,
                            attenuation_db_per_km: SOLID_SWAP_ATTENUATION_DB_PER_KM,
                            raman_active: Some(true),
                        });
                        new_path.push(PathElementConfig::Lumped {
                            label: format!("loss-equalizer-{counter}"),
                            insertion_loss_db: excess_db,
                            isolation_db: None,
                        });
                    }
                    other => new_path.push(other.clone()),
                }
            }
            user.path = new_path;
        }
        Ok(())
    }

    /// The classical slots as typed slots (for gap validation).
    pub fn classical_slots(&self) -> Result<Vec<SpectralSlot>> {
        self.classical_channels
            .iter()
            .map(|c| self.slot_at(c.itu_index))
            .collect()
    }
}
