//! ITU-grid arithmetic: channel indices, frequencies, wavelengths, signed
//! pair offsets, and spectral-gap computations on the 100 GHz DWDM grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Vacuum speed of light in nm·THz (equivalently µm·GHz).
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Grid reference channel: index 34 at 193.4 THz. All grid frequencies are
/// computed symmetrically around this anchor so that channel pairs placed at
/// ±i from it conserve energy exactly in floating point.
pub const REFERENCE_ITU_INDEX: i32 = 34;
pub const REFERENCE_FREQUENCY_THZ: f64 = 193.4;

/// Valid ITU index range (sanity bound).
pub const ITU_INDEX_MIN: i32 = -100;
pub const ITU_INDEX_MAX: i32 = 700;

/// Grid spacing in THz.
pub const GRID_SPACING_THZ: f64 = 0.1;

/// Absolute tolerance for frequency comparisons: 1 MHz in THz.
pub const FREQUENCY_TOLERANCE_THZ: f64 = 1e-6;

/// Default 3 dB / 10 dB bandwidths for a 100 GHz DWDM slot, in GHz.
/// Configurable per scenario; the 10 dB default leaves a 142 GHz guard gap
/// between slots whose centers sit 200 GHz apart.
pub const DEFAULT_BANDWIDTH_3DB_GHZ: f64 = 36.0;
pub const DEFAULT_BANDWIDTH_10DB_GHZ: f64 = 58.0;

/// Center frequency in THz of ITU channel `itu_index`: 190.0 + 0.1 × index,
/// exact to well under 1 MHz.
///
/// Computed as `193.4 ± |index − 34|/10` rather than the textbook affine form:
/// the symmetric construction guarantees `f(34+i) + f(34−i) == 2 × f(34)`
/// bitwise for every representable pair, which the affine form does not.
pub fn channel_frequency(itu_index: i32) -> Result<f64> {
    if !(ITU_INDEX_MIN..=ITU_INDEX_MAX).contains(&itu_index) {
        return Err(Error::Domain(format!(
            "ITU index {itu_index} outside [{ITU_INDEX_MIN}, {ITU_INDEX_MAX}]"
        )));
    }
    let off = itu_index - REFERENCE_ITU_INDEX;
    let d = f64::from(off.abs()) / 10.0;
    Ok(if off >= 0 {
        REFERENCE_FREQUENCY_THZ + d
    } else {
        REFERENCE_FREQUENCY_THZ - d
    })
}

/// Vacuum wavelength in nm for a frequency in THz.
pub fn frequency_to_wavelength(f_thz: f64) -> Result<f64> {
    if !(f_thz > 0.0) {
        return Err(Error::Domain(format!("non-positive frequency {f_thz} THz")));
    }
    Ok(SPEED_OF_LIGHT_NM_THZ / f_thz)
}

/// Vacuum frequency in THz for a wavelength in nm.
pub fn wavelength_to_frequency(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::Domain(format!("non-positive wavelength {lambda_nm} nm")));
    }
    Ok(SPEED_OF_LIGHT_NM_THZ / lambda_nm)
}

/// One ITU-grid channel and its signed offset from the owning grid's center
/// channel.
///
/// Invariants: `center_frequency` = 190.0 + 0.1 × `itu_index` THz (within
/// 1 MHz); `bandwidth_10db ≥ bandwidth_3db > 0`; `offset` = `itu_index` −
/// center index of the owning grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSlot {
    pub itu_index: i32,
    /// THz.
    pub center_frequency: f64,
    /// GHz.
    pub bandwidth_3db: f64,
    /// GHz.
    pub bandwidth_10db: f64,
    /// Channels from the owning grid's center channel (signed).
    pub offset: i32,
}

impl SpectralSlot {
    /// Builds the slot at `itu_index` on a grid centered at `center_itu`.
    pub fn on_grid(itu_index: i32, center_itu: i32, bw_3db_ghz: f64, bw_10db_ghz: f64) -> Result<Self> {
        if !(bw_3db_ghz > 0.0) || bw_10db_ghz < bw_3db_ghz {
            return Err(Error::Domain(format!(
                "bandwidths must satisfy 10 dB ({bw_10db_ghz}) ≥ 3 dB ({bw_3db_ghz}) > 0"
            )));
        }
        Ok(SpectralSlot {
            itu_index,
            center_frequency: channel_frequency(itu_index)?,
            bandwidth_3db: bw_3db_ghz,
            bandwidth_10db: bw_10db_ghz,
            offset: itu_index - center_itu,
        })
    }

    /// Vacuum center wavelength in nm.
    pub fn wavelength_nm(&self) -> f64 {
        SPEED_OF_LIGHT_NM_THZ / self.center_frequency
    }
}

/// The pump laser and the down-conversion center channel it defines.
///
/// Invariant: pump frequency = 2 × center frequency within 1 GHz
/// (energy conservation of degenerate pair generation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpReference {
    pub pump_wavelength_nm: f64,
    pub center_channel: SpectralSlot,
}

impl PumpReference {
    pub fn new(pump_wavelength_nm: f64, center_channel: SpectralSlot) -> Result<Self> {
        let pump_thz = wavelength_to_frequency(pump_wavelength_nm)?;
        let mismatch_thz = (pump_thz - 2.0 * center_channel.center_frequency).abs();
        if mismatch_thz > 1e-3 {
            return Err(Error::Domain(format!(
                "pump at {pump_wavelength_nm} nm is {:.3} GHz from twice the center frequency (>1 GHz)",
                mismatch_thz * 1e3
            )));
        }
        Ok(PumpReference { pump_wavelength_nm, center_channel })
    }
}

/// Slot at `center.itu_index + i`, carrying offset `center.offset + i` and the
/// center's bandwidths.
pub fn offset_channel(center: &SpectralSlot, i: i32) -> Result<SpectralSlot> {
    let itu_index = center.itu_index + i;
    Ok(SpectralSlot {
        itu_index,
        center_frequency: channel_frequency(itu_index)?,
        bandwidth_3db: center.bandwidth_3db,
        bandwidth_10db: center.bandwidth_10db,
        offset: center.offset + i,
    })
}

/// Clear spectrum between the 10 dB band edges of two slots, in GHz.
///
/// Center separation is computed from the integer grid distance, so on-grid
/// slots yield exact multiples of 100 GHz before the bandwidth subtraction.
/// Overlapping bands are an error carrying the negative raw gap.
pub fn spectral_gap(a: &SpectralSlot, b: &SpectralSlot) -> Result<f64> {
    let separation_ghz = 100.0 * f64::from((a.itu_index - b.itu_index).abs());
    let gap = separation_ghz - (a.bandwidth_10db + b.bandwidth_10db) / 2.0;
    if gap < 0.0 {
        return Err(Error::Overlap { gap_ghz: gap });
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot(itu: i32) -> SpectralSlot {
        SpectralSlot::on_grid(itu, REFERENCE_ITU_INDEX, DEFAULT_BANDWIDTH_3DB_GHZ, DEFAULT_BANDWIDTH_10DB_GHZ).unwrap()
    }

    #[test]
    fn frequency_of_named_channels() {
        assert_eq!(channel_frequency(34).unwrap(), 193.4);
        assert_eq!(channel_frequency(0).unwrap(), 190.0);
        assert_eq!(channel_frequency(19).unwrap(), 191.9);
        assert_eq!(channel_frequency(49).unwrap(), 194.9);
    }

    #[test]
    fn frequency_matches_affine_form_within_tolerance() {
        for n in ITU_INDEX_MIN..=ITU_INDEX_MAX {
            let f = channel_frequency(n).unwrap();
            let affine = 190.0 + 0.1 * f64::from(n);
            assert!(
                (f - affine).abs() < FREQUENCY_TOLERANCE_THZ,
                "channel {n}: {f} vs {affine}"
            );
        }
    }

    #[test]
    fn frequency_range_check() {
        assert!(channel_frequency(ITU_INDEX_MIN - 1).is_err());
        assert!(channel_frequency(ITU_INDEX_MAX + 1).is_err());
        assert!(channel_frequency(ITU_INDEX_MIN).is_ok());
        assert!(channel_frequency(ITU_INDEX_MAX).is_ok());
    }

    #[test]
    fn energy_conservation_exact_over_full_mutual_range() {
        let center = 2.0 * channel_frequency(REFERENCE_ITU_INDEX).unwrap();
        for i in -134..=134 {
            let sum = channel_frequency(34 + i).unwrap() + channel_frequency(34 - i).unwrap();
            assert_eq!(sum, center, "offset {i}: {sum:e} != {center:e}");
        }
    }

    #[test]
    fn wavelength_examples() {
        assert!((frequency_to_wavelength(193.4).unwrap() - 1550.12).abs() < 0.01);
        assert_eq!(frequency_to_wavelength(SPEED_OF_LIGHT_NM_THZ).unwrap(), 1.0);
        assert!((frequency_to_wavelength(192.1).unwrap() - 1560.61).abs() < 0.01);
        assert!(frequency_to_wavelength(0.0).is_err());
        assert!(frequency_to_wavelength(-1.0).is_err());
    }

    #[test]
    fn wavelength_round_trip_within_one_mhz() {
        for n in ITU_INDEX_MIN..=ITU_INDEX_MAX {
            let f = channel_frequency(n).unwrap();
            let back = wavelength_to_frequency(frequency_to_wavelength(f).unwrap()).unwrap();
            assert!((back - f).abs() < FREQUENCY_TOLERANCE_THZ, "channel {n}");
        }
    }

    #[test]
    fn offset_channel_examples() {
        let c = slot(34);
        let ch19 = offset_channel(&c, -15).unwrap();
        assert_eq!(ch19.itu_index, 19);
        assert_eq!(ch19.offset, -15);

        let same = offset_channel(&c, 0).unwrap();
        assert_eq!(same, c);

        let ch49 = offset_channel(&c, 15).unwrap();
        assert_eq!(ch49.itu_index, 49);
        assert_eq!(ch49.center_frequency, 194.9);
        assert_eq!(ch19.center_frequency + ch49.center_frequency, 2.0 * c.center_frequency);

        assert!(offset_channel(&c, 1000).is_err());
    }

    #[test]
    fn offset_channel_round_trip() {
        let c = slot(34);
        for i in -40..=40 {
            let there = offset_channel(&c, i).unwrap();
            let back = offset_channel(&there, -i).unwrap();
            assert_eq!(back, c, "offset {i}");
        }
    }

    #[test]
    fn slot_bandwidth_invariants() {
        assert!(SpectralSlot::on_grid(34, 34, 0.0, 58.0).is_err());
        assert!(SpectralSlot::on_grid(34, 34, 60.0, 58.0).is_err());
        assert!(SpectralSlot::on_grid(34, 34, 36.0, 36.0).is_ok());
    }

    #[test]
    fn spectral_gap_examples() {
        let a = slot(19);
        let b = slot(17);
        assert_eq!(spectral_gap(&a, &b).unwrap(), 142.0);

        let zero_a = SpectralSlot { bandwidth_10db: 0.0, bandwidth_3db: 0.0, ..slot(20) };
        let zero_b = SpectralSlot { bandwidth_10db: 0.0, bandwidth_3db: 0.0, ..slot(19) };
        assert_eq!(spectral_gap(&zero_a, &zero_b).unwrap(), 100.0);

        let wide_a = SpectralSlot { bandwidth_10db: 120.0, ..slot(20) };
        let wide_b = SpectralSlot { bandwidth_10db: 120.0, ..slot(19) };
        match spectral_gap(&wide_a, &wide_b) {
            Err(Error::Overlap { gap_ghz }) => assert_eq!(gap_ghz, -20.0),
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn spectral_gap_symmetry() {
        let a = slot(19);
        let b = slot(24);
        assert_eq!(spectral_gap(&a, &b).unwrap(), spectral_gap(&b, &a).unwrap());
    }

    #[test]
    fn pump_reference_energy_match() {
        let p = PumpReference::new(775.06, slot(34)).unwrap();
        assert_eq!(p.center_channel.itu_index, 34);
        assert!(PumpReference::new(775.5, slot(34)).is_err());
        assert!(PumpReference::new(775.06, slot(35)).is_err());
    }
}
