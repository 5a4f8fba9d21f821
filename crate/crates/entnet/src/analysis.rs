//! Coincidence analysis: correlating raw detection records into delay
//! histograms and estimating visibility, QBER, and secure-key rate per link,
//! plus the tag-record file formats.

use crate::error::{Error, Result};
use crate::statistics::{window_bin_count, Histogram, TimeTagStream};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Bins averaged by the peak-search smoother.
pub const SMOOTH_BINS: usize = 5;
/// Out-of-window bins required for a background estimate.
pub const MIN_FLOOR_BINS: usize = 50;
/// Peak significance required when no window center is given.
pub const DEFAULT_MIN_SNR: f64 = 3.0;

pub const TAG_CSV_HEADER: &str = "detector_id,timestamp_ps,outcome";
pub const TAG_BINARY_MAGIC: &[u8; 8] = b"QTTAGS01";

/// Shannon entropy of a binary variable, bits. Zero outside (0, 1).
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Asymptotic secure-key rate (bits/s) from a sifted rate and QBER:
/// `sifted · max(0, 1 − 2·h₂(q))`.
pub fn skr_asymptotic(sifted_cps: f64, qber: f64) -> f64 {
    sifted_cps * (1.0 - 2.0 * binary_entropy(qber)).max(0.0)
}

/// Visibility and QBER from windowed correct/wrong coincidence counts:
/// `V = (c − w)/(c + w)`, `q = w/(c + w)`. V is not clamped, so callers can
/// verify the identity `q = (1 − V)/2` on raw counts. Pre: c, w ≥ 0, c+w > 0.
pub fn visibility_and_qber(correct: f64, wrong: f64) -> Result<(f64, f64)> {
    if !(correct >= 0.0) || !(wrong >= 0.0) {
        return Err(Error::Domain("coincidence counts must be ≥ 0".into()));
    }
    let total = correct + wrong;
    if total <= 0.0 {
        return Err(Error::Domain("no coincidences in the window".into()));
    }
    Ok(((correct - wrong) / total, wrong / total))
}

/// Delay histogram of all pairs `(ta, tb)` with `tb − ta` inside the span.
/// Both streams must be time-ordered.
pub fn cross_correlate(
    a: &TimeTagStream,
    b: &TimeTagStream,
    bin_width_ps: i64,
    span_ps: i64,
    duration_s: f64,
) -> Result<Histogram> {
    for (stream, side) in [(a, "first"), (b, "second")] {
        if stream.timestamps_ps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data(format!("{side} stream is not time-ordered")));
        }
    }
    let mut hist = Histogram::zeroed(bin_width_ps, span_ps, duration_s)?;
    let reach = span_ps / 2 + bin_width_ps / 2;
    let tb = &b.timestamps_ps;
    let mut lo = 0usize;
    for &ta in &a.timestamps_ps {
        while lo < tb.len() && tb[lo] < ta - reach {
            lo += 1;
        }
        let mut j = lo;
        while j < tb.len() && tb[j] <= ta + reach {
            if let Some(idx) = hist.index_of_delay(tb[j] - ta) {
                hist.counts[idx] += 1.0;
            }
            j += 1;
        }
    }
    Ok(hist)
}

/// Truncated moving average over [`SMOOTH_BINS`] bins.
pub fn smoothed_counts(hist: &Histogram) -> Vec<f64> {
    let n = hist.counts.len();
    let half = SMOOTH_BINS / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let slice = &hist.counts[lo..=hi];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Median count of the bins outside the window centered on `peak_index`.
/// Errors when fewer than [`MIN_FLOOR_BINS`] such bins exist.
pub fn background_floor(hist: &Histogram, peak_index: usize, window_ps: i64) -> Result<f64> {
    let half = (window_bin_count(window_ps, hist.bin_width_ps) as i64 - 1) / 2;
    let lo = peak_index as i64 - half;
    let hi = peak_index as i64 + half;
    let mut outside: Vec<f64> = hist
        .counts
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as i64) < lo || (*i as i64) > hi)
        .map(|(_, c)| *c)
        .collect();
    if outside.len() < MIN_FLOOR_BINS {
        return Err(Error::Domain(format!(
            "only {} bins outside the window; ≥ {MIN_FLOOR_BINS} needed for a background estimate",
            outside.len()
        )));
    }
    outside.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = outside.len();
    Ok(if n % 2 == 1 {
        outside[n / 2]
    } else {
        0.5 * (outside[n / 2 - 1] + outside[n / 2])
    })
}

/// How a run is reduced to link statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub bin_width_ps: i64,
    pub span_ps: i64,
    pub window_ps: i64,
    pub background_subtract: bool,
    /// Forces the window onto this delay instead of searching for a peak.
    pub window_center_ps: Option<i64>,
    pub min_snr: f64,
}

impl AnalysisParams {
    pub fn from_scenario(scenario: &crate::scenario::Scenario) -> Self {
        AnalysisParams {
            bin_width_ps: scenario.analysis.bin_width_ps,
            span_ps: scenario.analysis.span_ps,
            window_ps: scenario.analysis.window_ps,
            background_subtract: false,
            window_center_ps: None,
            min_snr: DEFAULT_MIN_SNR,
        }
    }
}

/// Index of the coincidence peak: the smoothed-count argmax, ties resolved
/// toward zero delay then toward negative delay. Without a window-center
/// hint the peak must clear `min_snr` standard deviations of the smoothed
/// background, or the search fails with a no-peak error.
pub fn find_peak(hist: &Histogram, params: &AnalysisParams) -> Result<usize> {
    if let Some(center) = params.window_center_ps {
        return hist.index_of_delay(center).ok_or_else(|| {
            Error::Domain(format!("window center {center} ps is outside the histogram"))
        });
    }
    let smooth = smoothed_counts(hist);
    let mut best = 0usize;
    for (i, &value) in smooth.iter().enumerate() {
        let current = smooth[best];
        let better = value > current
            || (value == current
                && (hist.bin_center_ps(i).abs() < hist.bin_center_ps(best).abs()
                    || (hist.bin_center_ps(i).abs() == hist.bin_center_ps(best).abs()
                        && hist.bin_center_ps(i) < hist.bin_center_ps(best))));
        if better {
            best = i;
        }
    }
    let floor = background_floor(hist, best, params.window_ps)?;
    let snr = if floor > 0.0 {
        (smooth[best] - floor) / (floor / SMOOTH_BINS as f64).sqrt()
    } else if smooth[best] > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    if snr < params.min_snr {
        return Err(Error::NoPeak { snr, floor_per_bin: floor });
    }
    Ok(best)
}

/// Measured statistics of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkStatistics {
    pub link: String,
    pub visibility: f64,
    pub qber: f64,
    pub qber_err: f64,
    pub sifted_cps: f64,
    pub skr_bps: f64,
    pub background_subtracted: bool,
}

/// Full reduction of one link, with diagnostics alongside the statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkAnalysis {
    pub stats: LinkStatistics,
    pub peak_index: usize,
    pub peak_delay_ps: i64,
    /// Windowed counts after optional background subtraction.
    pub correct_window: f64,
    pub wrong_window: f64,
    /// Per-bin floors actually subtracted (zero when subtraction is off).
    pub floor_correct_per_bin: f64,
    pub floor_wrong_per_bin: f64,
    pub combined: Histogram,
}

/// Reduces one link from its four detector streams (`a`, `b`: outcome 0 then
/// outcome 1 of each user). Correlations run per outcome pair; the peak is
/// searched on the combined histogram; identical-outcome pairs count as
/// correct. The sifted rate always comes from raw windowed counts, while
/// visibility (and everything derived from it) uses background-subtracted
/// counts when subtraction is enabled.
pub fn analyze_link(
    name: &str,
    a: [&TimeTagStream; 2],
    b: [&TimeTagStream; 2],
    duration_s: f64,
    params: &AnalysisParams,
) -> Result<LinkAnalysis> {
    if !(duration_s > 0.0) {
        return Err(Error::Domain("analysis duration must be > 0".into()));
    }
    let correlate = |sa: &TimeTagStream, sb: &TimeTagStream| {
        cross_correlate(sa, sb, params.bin_width_ps, params.span_ps, duration_s)
    };
    let h00 = correlate(a[0], b[0])?;
    let h01 = correlate(a[0], b[1])?;
    let h10 = correlate(a[1], b[0])?;
    let h11 = correlate(a[1], b[1])?;
    let correct = h00.checked_add(&h11)?;
    let wrong = h01.checked_add(&h10)?;
    let combined = correct.checked_add(&wrong)?;

    let peak_index = find_peak(&combined, params)?;
    let window = combined.window_indices(peak_index, params.window_ps)?;
    let raw_correct: f64 = correct.counts[window.clone()].iter().sum();
    let raw_wrong: f64 = wrong.counts[window.clone()].iter().sum();

    let n_window = window.end() - window.start() + 1;
    let (mut floor_c, mut floor_w) = (0.0, 0.0);
    let (eff_correct, eff_wrong) = if params.background_subtract {
        floor_c = background_floor(&correct, peak_index, params.window_ps)?;
        floor_w = background_floor(&wrong, peak_index, params.window_ps)?;
        (
            (raw_correct - floor_c * n_window as f64).max(0.0),
            (raw_wrong - floor_w * n_window as f64).max(0.0),
        )
    } else {
        (raw_correct, raw_wrong)
    };

    let (v_raw, _) = visibility_and_qber(eff_correct, eff_wrong)?;
    let visibility = v_raw.clamp(0.0, 1.0);
    let qber = (1.0 - visibility) / 2.0;
    let n_eff = eff_correct + eff_wrong;
    let qber_err =
        if n_eff > 0.0 { (eff_correct * eff_wrong).sqrt() / n_eff.powf(1.5) } else { 0.0 };
    let sifted_cps = (raw_correct + raw_wrong) / 2.0 / duration_s;

    Ok(LinkAnalysis {
        stats: LinkStatistics {
            link: name.to_string(),
            visibility,
            qber,
            qber_err,
            sifted_cps,
            skr_bps: skr_asymptotic(sifted_cps, qber),
            background_subtracted: params.background_subtract,
        },
        peak_index,
        peak_delay_ps: combined.bin_center_ps(peak_index),
        correct_window: eff_correct,
        wrong_window: eff_wrong,
        floor_correct_per_bin: floor_c,
        floor_wrong_per_bin: floor_w,
        combined,
    })
}

/// Writes link statistics as CSV with a fixed header.
pub fn write_statistics_csv<W: Write>(writer: W, rows: &[LinkStatistics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Data(format!("statistics CSV: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_statistics_csv<R: Read>(reader: R) -> Result<Vec<LinkStatistics>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("statistics CSV: {e}"))))
        .collect()
}

/// One detector's records as read back from a tag file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedDetector {
    pub detector_id: u16,
    pub outcome: u8,
    pub timestamps_ps: Vec<i64>,
}

/// Writes one detector's records as `detector_id,timestamp_ps,outcome` rows.
pub fn write_tags_csv<W: Write>(mut w: W, detector_id: u16, stream: &TimeTagStream) -> Result<()> {
    writeln!(w, "{TAG_CSV_HEADER}")?;
    for t in &stream.timestamps_ps {
        writeln!(w, "{detector_id},{t},{}", stream.outcome)?;
    }
    Ok(())
}

/// Reads tag CSV records, grouping by detector in ascending id order. The
/// outcome column must be 0 or 1 and equal `detector_id mod 2`.
pub fn read_tags_csv<R: Read>(reader: R) -> Result<Vec<TaggedDetector>> {
    let mut lines = std::io::BufReader::new(reader);
    let mut text = String::new();
    lines.read_to_string(&mut text)?;
    let mut by_id: std::collections::BTreeMap<u16, Vec<i64>> = Default::default();
    let mut rows = text.lines();
    match rows.next() {
        Some(h) if h.trim() == TAG_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "tag CSV must start with '{TAG_CSV_HEADER}', found {other:?}"
            )))
        }
    }
    for (lineno, line) in rows.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (id, ts, outcome) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c), None) => (a.trim(), b.trim(), c.trim()),
            _ => return Err(Error::Parse(format!("tag CSV line {}: need 3 fields", lineno + 2))),
        };
        let id: u16 = id
            .parse()
            .map_err(|_| Error::Parse(format!("tag CSV line {}: bad detector id", lineno + 2)))?;
        let ts: i64 = ts
            .parse()
            .map_err(|_| Error::Parse(format!("tag CSV line {}: bad timestamp", lineno + 2)))?;
        let outcome: u8 = outcome
            .parse()
            .map_err(|_| Error::Parse(format!("tag CSV line {}: bad outcome", lineno + 2)))?;
        if outcome as u16 != id % 2 {
            return Err(Error::Data(format!(
                "tag CSV line {}: outcome {outcome} contradicts detector id {id}",
                lineno + 2
            )));
        }
        by_id.entry(id).or_default().push(ts);
    }
    Ok(by_id
        .into_iter()
        .map(|(detector_id, timestamps_ps)| TaggedDetector {
            detector_id,
            outcome: (detector_id % 2) as u8,
            timestamps_ps,
        })
        .collect())
}

/// Writes detector records in the binary tag format: an 8-byte magic, then
/// 10-byte little-endian records (u16 detector id, u64 timestamp in ps).
/// Timestamps must be non-negative.
pub fn write_tags_binary<W: Write>(mut w: W, streams: &[(u16, &TimeTagStream)]) -> Result<()> {
    w.write_all(TAG_BINARY_MAGIC)?;
    for (id, stream) in streams {
        for &t in &stream.timestamps_ps {
            if t < 0 {
                return Err(Error::Data(format!(
                    "binary tag format cannot store negative timestamp {t}"
                )));
            }
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&(t as u64).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_tags_binary<R: Read>(mut reader: R) -> Result<Vec<TaggedDetector>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < TAG_BINARY_MAGIC.len() || &bytes[..8] != TAG_BINARY_MAGIC {
        return Err(Error::Parse("binary tag file lacks the QTTAGS01 magic".into()));
    }
    let body = &bytes[8..];
    if body.len() % 10 != 0 {
        return Err(Error::Data("binary tag file is truncated mid-record".into()));
    }
    let mut by_id: std::collections::BTreeMap<u16, Vec<i64>> = Default::default();
    for rec in body.chunks_exact(10) {
        let id = u16::from_le_bytes([rec[0], rec[1]]);
        let raw = u64::from_le_bytes(rec[2..10].try_into().unwrap());
        let ts = i64::try_from(raw)
            .map_err(|_| Error::Data(format!("timestamp {raw} exceeds the supported range")))?;
        by_id.entry(id).or_default().push(ts);
    }
    Ok(by_id
        .into_iter()
        .map(|(detector_id, timestamps_ps)| TaggedDetector {
            detector_id,
            outcome: (detector_id % 2) as u8,
            timestamps_ps,
        })
        .collect())
}
