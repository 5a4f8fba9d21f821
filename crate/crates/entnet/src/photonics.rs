//! Optical power bookkeeping: path losses, classical launch powers,
//! spontaneous-scattering noise, filter crosstalk leakage, and
//! power ↔ photon-rate conversion.

use crate::error::{Error, Result};
use crate::spectral::SpectralSlot;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Planck constant, J·s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    HollowCore,
    SolidCore,
}

/// A stretch of fiber. Hollow core defaults to no spontaneous scattering;
/// solid core defaults to scattering-active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSegment {
    pub kind: FiberKind,
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub raman_active: bool,
}

impl FiberSegment {
    pub fn new(kind: FiberKind, length_km: f64, attenuation_db_per_km: f64, raman_active: bool) -> Result<Self> {
        if !(length_km >= 0.0) || !(attenuation_db_per_km >= 0.0) {
            return Err(Error::Domain(format!(
                "fiber needs length ≥ 0 and attenuation ≥ 0, got {length_km} km @ {attenuation_db_per_km} dB/km"
            )));
        }
        Ok(FiberSegment { kind, length_km, attenuation_db_per_km, raman_active })
    }

    pub fn hollow(length_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        Self::new(FiberKind::HollowCore, length_km, attenuation_db_per_km, false)
    }

    pub fn solid(length_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        Self::new(FiberKind::SolidCore, length_km, attenuation_db_per_km, true)
    }

    pub fn loss_db(&self) -> f64 {
        self.length_km * self.attenuation_db_per_km
    }
}

/// A point element: coupler, filter, splice bundle, switch. `isolation_db` is
/// the out-of-band suppression; `f64::INFINITY` means perfect rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumpedElement {
    pub label: String,
    pub insertion_loss_db: f64,
    pub isolation_db: f64,
}

impl LumpedElement {
    pub fn new(label: &str, insertion_loss_db: f64, isolation_db: f64) -> Result<Self> {
        if !(insertion_loss_db >= 0.0) || !(isolation_db >= 0.0) {
            return Err(Error::Domain(format!(
                "lumped element '{label}' needs insertion loss ≥ 0 and isolation ≥ 0"
            )));
        }
        Ok(LumpedElement { label: label.to_string(), insertion_loss_db, isolation_db })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathElement {
    Fiber(FiberSegment),
    Lumped(LumpedElement),
}

impl PathElement {
    pub fn loss_db(&self) -> f64 {
        match self {
            PathElement::Fiber(f) => f.loss_db(),
            PathElement::Lumped(l) => l.insertion_loss_db,
        }
    }
}

/// An ordered chain of fiber segments and lumped elements. Total loss is the
/// dB sum of element losses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OpticalPath {
    pub elements: Vec<PathElement>,
}

impl OpticalPath {
    pub fn new(elements: Vec<PathElement>) -> Self {
        OpticalPath { elements }
    }
}

/// Total path loss in dB: fiber length × attenuation plus lumped insertion
/// losses.
pub fn path_loss(path: &OpticalPath) -> f64 {
    path.elements.iter().map(PathElement::loss_db).sum()
}

/// Incoherent sum of powers given in dBm.
pub fn combine_powers(powers_dbm: &[f64]) -> Result<f64> {
    if powers_dbm.is_empty() {
        return Err(Error::Domain("cannot combine an empty power list".into()));
    }
    let total_mw: f64 = powers_dbm.iter().map(|p| 10f64.powf(p / 10.0)).sum();
    Ok(10.0 * total_mw.log10())
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    1e-3 * 10f64.powf(p_dbm / 10.0)
}

pub fn watts_to_dbm(p_w: f64) -> f64 {
    10.0 * (p_w / 1e-3).log10()
}

/// A modulated classical carrier sharing the fiber. `modulation` is carried
/// as metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalChannel {
    pub slot: SpectralSlot,
    pub launch_power_dbm: f64,
    pub modulation: String,
}

impl ClassicalChannel {
    pub fn new(slot: SpectralSlot, launch_power_dbm: f64, modulation: &str) -> Result<Self> {
        if !launch_power_dbm.is_finite() {
            return Err(Error::Domain("launch power must be finite".into()));
        }
        Ok(ClassicalChannel { slot, launch_power_dbm, modulation: modulation.to_string() })
    }
}

/// Spontaneous-scattering cross section ρ(Δλ) in 1/(km·nm), tabulated over
/// pump–probe detuning Δλ = λ_quantum − λ_classical and interpolated
/// piecewise-linearly.
///
/// Invariants: Δλ strictly increasing; ρ ≥ 0 everywhere; the short-wavelength
/// side (Δλ < 0) stays below the long-wavelength peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamanCrossSection {
    table: Vec<(f64, f64)>,
}

/// Shipped cross-section table: long-wavelength peak near +105 nm, a
/// short-wavelength dip in the −8…−1 nm region, absolute scale calibrated so
/// the bundled four-user scenario reproduces its measured noise floors.
pub const DEFAULT_RAMAN_TABLE: [(f64, f64); 19] = [
    (-250.0, 1.76e-10),
    (-150.0, 4.23e-10),
    (-110.0, 1.23e-9),
    (-90.0, 1.06e-9),
    (-50.0, 1.34e-9),
    (-20.0, 1.48e-9),
    (-8.0, 1.27e-9),
    (-3.0, 1.13e-9),
    (-1.0, 1.59e-9),
    (0.0, 2.47e-9),
    (1.0, 2.82e-9),
    (8.0, 1.94e-9),
    (20.0, 2.11e-9),
    (50.0, 2.29e-9),
    (90.0, 2.75e-9),
    (105.0, 2.99e-9),
    (130.0, 1.94e-9),
    (150.0, 1.23e-9),
    (250.0, 1.41e-10),
];

impl Default for RamanCrossSection {
    fn default() -> Self {
        RamanCrossSection::new(DEFAULT_RAMAN_TABLE.to_vec()).expect("default table is valid")
    }
}

impl RamanCrossSection {
    pub fn new(table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Domain("cross-section table needs at least 2 points".into()));
        }
        for w in table.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain(format!(
                    "cross-section Δλ must be strictly increasing at {} nm",
                    w[1].0
                )));
            }
        }
        if table.iter().any(|&(_, rho)| !(rho >= 0.0)) {
            return Err(Error::Domain("cross-section ρ must be non-negative".into()));
        }
        let stokes_peak = table
            .iter()
            .filter(|&&(dl, _)| dl > 0.0)
            .map(|&(_, r)| r)
            .fold(0.0f64, f64::max);
        let anti_stokes_max = table
            .iter()
            .filter(|&&(dl, _)| dl < 0.0)
            .map(|&(_, r)| r)
            .fold(0.0f64, f64::max);
        if anti_stokes_max >= stokes_peak {
            return Err(Error::Domain(
                "short-wavelength (Δλ<0) cross-section values must stay below the long-wavelength peak".into(),
            ));
        }
        Ok(RamanCrossSection { table })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.table
    }

    /// Interpolated ρ(Δλ); out-of-range Δλ is an error, never a clamp.
    pub fn rho(&self, delta_lambda_nm: f64) -> Result<f64> {
        let (lo, hi) = (self.table[0].0, self.table[self.table.len() - 1].0);
        if !(delta_lambda_nm >= lo && delta_lambda_nm <= hi) {
            return Err(Error::Extrapolation(format!(
                "Δλ = {delta_lambda_nm} nm outside tabulated range [{lo}, {hi}] nm"
            )));
        }
        for w in self.table.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if delta_lambda_nm <= x1 {
                return Ok(y0 + (delta_lambda_nm - x0) / (x1 - x0) * (y1 - y0));
            }
        }
        unreachable!("range-checked detuning must fall in a table interval")
    }

    /// Reads a two-column CSV (`delta_lambda_nm,rho_per_km_per_nm`); `#`
    /// comment lines and a single text header row are skipped.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "cross-section CSV line {}: expected 2 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(dl), Ok(rho)) => table.push((dl, rho)),
                _ if table.is_empty() => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "cross-section CSV line {}: non-numeric row '{trimmed}'",
                        lineno + 1
                    )))
                }
            }
        }
        RamanCrossSection::new(table)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Writes the table with a units comment line.
    pub fn to_csv_writer<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# delta_lambda_nm,rho_per_km_per_nm")?;
        writeln!(w, "delta_lambda_nm,rho")?;
        for (dl, rho) in &self.table {
            writeln!(w, "{dl},{rho:e}")?;
        }
        Ok(())
    }
}

/// Spontaneous-scattering power (W) generated in one fiber segment and
/// landing inside a receiver band `rx_bandwidth_nm` wide:
/// `I · e^(−αL) · L · ρ(Δλ) · Δλ_rx`, with α converted from dB/km to natural
/// units and Δλ = λ_quantum − λ_classical. Co-propagating capture only.
/// Segments with `raman_active = false` contribute exactly 0.
pub fn raman_noise_power(
    channel: &ClassicalChannel,
    segment: &FiberSegment,
    quantum_slot: &SpectralSlot,
    rx_bandwidth_nm: f64,
    xsec: &RamanCrossSection,
) -> Result<f64> {
    let input_w = dbm_to_watts(channel.launch_power_dbm);
    let dl = quantum_slot.wavelength_nm() - channel.slot.wavelength_nm();
    raman_power_from_input(input_w, segment, dl, rx_bandwidth_nm, xsec)
}

/// Same scattering model with an explicit segment input power, for walking a
/// chain where the carrier has already been attenuated upstream.
pub fn raman_power_from_input(
    input_w: f64,
    segment: &FiberSegment,
    delta_lambda_nm: f64,
    rx_bandwidth_nm: f64,
    xsec: &RamanCrossSection,
) -> Result<f64> {
    if !segment.raman_active {
        return Ok(0.0);
    }
    if !(rx_bandwidth_nm > 0.0) {
        return Err(Error::Domain(format!("receiver bandwidth must be > 0, got {rx_bandwidth_nm} nm")));
    }
    let alpha = segment.attenuation_db_per_km * std::f64::consts::LN_10 / 10.0;
    let l = segment.length_km;
    Ok(input_w * (-alpha * l).exp() * l * xsec.rho(delta_lambda_nm)? * rx_bandwidth_nm)
}

/// Classical power (W) leaking to a detector through finite filter isolation:
/// launch power attenuated by `path_loss_db + cumulative_isolation_db`.
pub fn crosstalk_power(channel: &ClassicalChannel, cumulative_isolation_db: f64, path_loss_db: f64) -> f64 {
    if cumulative_isolation_db.is_infinite() {
        return 0.0;
    }
    dbm_to_watts(channel.launch_power_dbm - cumulative_isolation_db - path_loss_db)
}

/// Photon flux (counts/s) of optical power `p_w` at vacuum wavelength
/// `wavelength_nm`: p / (h·c/λ). Pre: p ≥ 0, wavelength > 0.
pub fn power_to_photon_rate(p_w: f64, wavelength_nm: f64) -> f64 {
    p_w / photon_energy_j(wavelength_nm)
}

/// Single-photon energy h·c/λ in joules.
pub fn photon_energy_j(wavelength_nm: f64) -> f64 {
    PLANCK_J_S * SPEED_OF_LIGHT_M_S / (wavelength_nm * 1e-9)
}
