//! Analytic rate models for every link and Monte-Carlo synthesis of the raw
//! detection records those rates imply.

use crate::analysis::skr_asymptotic;
use crate::error::{Error, Result};
use crate::scenario::{LinkSpec, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

pub const DETECTORS_PER_USER: usize = 2;
pub const PS_PER_S: f64 = 1e12;

const DOMAIN_LINK_PAIRS: u64 = 1;
const DOMAIN_SINGLES_A: u64 = 2;
const DOMAIN_SINGLES_B: u64 = 3;
const DOMAIN_USER_NOISE: u64 = 4;

/// Photon flux detected by one user, split by origin. All rates are after
/// detector efficiency; `dark_cps` covers both detectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SinglesBudget {
    pub signal_cps: f64,
    pub classical_noise_cps: f64,
    pub dark_cps: f64,
}

impl SinglesBudget {
    pub fn total_cps(&self) -> f64 {
        self.signal_cps + self.classical_noise_cps + self.dark_cps
    }
}

/// Detected singles of one user summed over that user's channels and both
/// detectors.
pub fn user_singles(scenario: &Scenario, user_idx: usize) -> Result<SinglesBudget> {
    let eta = scenario.detectors.efficiency;
    let mu = scenario.effective_pair_rate();
    let alloc = scenario.allocation()?;
    let mut signal = 0.0;
    for slot in alloc.channels_for(user_idx)? {
        signal += mu * scenario.transmittance(user_idx, slot.itu_index)? * eta;
    }
    let noise = scenario.coexistence_noise(user_idx)?;
    Ok(SinglesBudget {
        signal_cps: signal,
        classical_noise_cps: eta * noise.total_cps(),
        dark_cps: 2.0 * scenario.detectors.dark_rate_cps,
    })
}

/// Number of histogram bins in a coincidence window: the odd count
/// `2·⌊W/(2τ)⌋ + 1`, so the window is symmetric about the peak bin.
pub fn window_bin_count(window_ps: i64, bin_width_ps: i64) -> usize {
    (2 * (window_ps / (2 * bin_width_ps)) + 1) as usize
}

/// Fraction of true coincidences whose measured delay lands inside the
/// `window_bins`-bin window centered on the bin nearest `delta_ps`, when the
/// delay spread is Gaussian with standard deviation `sigma_ps`.
pub fn capture_fraction(delta_ps: f64, sigma_ps: f64, bin_width_ps: i64, window_bins: usize) -> f64 {
    let tau = bin_width_ps as f64;
    let peak = (delta_ps / tau).round() as i64;
    let half = (window_bins as i64 - 1) / 2;
    let denom = sigma_ps * std::f64::consts::SQRT_2;
    let mut total = 0.0;
    for j in (peak - half)..=(peak + half) {
        let lo = (j as f64 - 0.5) * tau;
        let hi = (j as f64 + 0.5) * tau;
        total += 0.5 * (libm::erf((hi - delta_ps) / denom) - libm::erf((lo - delta_ps) / denom));
    }
    total
}

/// Analytic expectation for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub name: String,
    /// Total one-sided losses, source to each user's detectors (dB).
    pub loss_a_db: f64,
    pub loss_b_db: f64,
    /// Pair-correlation visibility after polarization misalignment.
    pub pair_visibility: f64,
    /// Expected histogram peak position: delay(b) − delay(a), ps.
    pub delay_ps: i64,
    /// Detected pairs/s over all delays.
    pub true_coincidence_cps: f64,
    /// Fraction of true pairs inside the coincidence window.
    pub capture_fraction: f64,
    /// True pairs/s inside the window.
    pub windowed_signal_cps: f64,
    /// Accidental rate per histogram bin (cps).
    pub accidental_per_bin_cps: f64,
    /// Accidental rate summed over the window (cps).
    pub accidental_window_cps: f64,
    /// Expected measured visibility (true + accidental mix).
    pub visibility: f64,
    pub qber: f64,
    pub sifted_cps: f64,
    pub skr_bps: f64,
}

/// Combined two-detector delay spread: each side jitters independently.
pub fn combined_jitter_sigma_ps(scenario: &Scenario) -> f64 {
    std::f64::consts::SQRT_2 * scenario.detectors.jitter_sigma_ps()
}

pub fn link_budget(scenario: &Scenario, link: &LinkSpec) -> Result<LinkBudget> {
    let eta = scenario.detectors.efficiency;
    let mu = scenario.effective_pair_rate();
    let loss_a = scenario.one_sided_loss_db(link.user_a, link.slot_a.itu_index)?;
    let loss_b = scenario.one_sided_loss_db(link.user_b, link.slot_b.itu_index)?;
    let true_cps = mu * 10f64.powf(-(loss_a + loss_b) / 10.0) * eta * eta;

    let delay = scenario.users[link.user_b].delay_ps - scenario.users[link.user_a].delay_ps;
    let nw = window_bin_count(scenario.analysis.window_ps, scenario.analysis.bin_width_ps);
    let cap = capture_fraction(
        delay as f64,
        combined_jitter_sigma_ps(scenario),
        scenario.analysis.bin_width_ps,
        nw,
    );
    let windowed = true_cps * cap;

    let singles_a = user_singles(scenario, link.user_a)?.total_cps();
    let singles_b = user_singles(scenario, link.user_b)?.total_cps();
    let acc_bin = singles_a * singles_b * scenario.analysis.bin_width_ps as f64 / PS_PER_S;
    let acc_window = acc_bin * nw as f64;

    let pair_vis = scenario.link_visibility(link.user_a, link.user_b);
    let total_window = windowed + acc_window;
    let visibility = if total_window > 0.0 { pair_vis * windowed / total_window } else { 0.0 };
    let qber = (1.0 - visibility) / 2.0;
    let sifted = total_window / 2.0;

    Ok(LinkBudget {
        name: link.name.clone(),
        loss_a_db: loss_a,
        loss_b_db: loss_b,
        pair_visibility: pair_vis,
        delay_ps: delay,
        true_coincidence_cps: true_cps,
        capture_fraction: cap,
        windowed_signal_cps: windowed,
        accidental_per_bin_cps: acc_bin,
        accidental_window_cps: acc_window,
        visibility,
        qber,
        sifted_cps: sifted,
        skr_bps: skr_asymptotic(sifted, qber),
    })
}

/// Budgets for every planned link, in allocation order.
pub fn network_budgets(scenario: &Scenario) -> Result<Vec<LinkBudget>> {
    scenario.links()?.iter().map(|l| link_budget(scenario, l)).collect()
}

/// A coincidence histogram over symmetric delay bins. Bin `i` is centered at
/// `(i − (n−1)/2)·τ` and covers `[center − τ/2, center + τ/2)`; the bin count
/// is odd so zero delay is a bin center.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width_ps: i64,
    pub duration_s: f64,
    pub counts: Vec<f64>,
}

/// Signed index of the bin containing delay `d_ps`: the nearest multiple of
/// `tau`, halves rounding away from zero.
pub fn bin_index_of(d_ps: i64, tau: i64) -> i64 {
    let sign = if d_ps < 0 { -1 } else { 1 };
    let a = d_ps.unsigned_abs() as i64;
    sign * ((2 * a + tau) / (2 * tau))
}

impl Histogram {
    /// Pre: bin width > 0, span > 0, span a multiple of 2·bin (so the bin
    /// count `span/τ + 1` is odd).
    pub fn zeroed(bin_width_ps: i64, span_ps: i64, duration_s: f64) -> Result<Self> {
        if bin_width_ps <= 0 || span_ps <= 0 {
            return Err(Error::Domain("histogram bin width and span must be > 0".into()));
        }
        if span_ps % (2 * bin_width_ps) != 0 {
            return Err(Error::Domain(
                "histogram span must be a multiple of twice the bin width".into(),
            ));
        }
        let n = (span_ps / bin_width_ps + 1) as usize;
        Ok(Histogram { bin_width_ps, duration_s, counts: vec![0.0; n] })
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Bins on each side of the central (zero-delay) bin.
    pub fn half_bins(&self) -> i64 {
        (self.counts.len() as i64 - 1) / 2
    }

    pub fn span_ps(&self) -> i64 {
        (self.counts.len() as i64 - 1) * self.bin_width_ps
    }

    pub fn bin_center_ps(&self, index: usize) -> i64 {
        (index as i64 - self.half_bins()) * self.bin_width_ps
    }

    /// Histogram index of the bin containing delay `d_ps`, if inside range.
    pub fn index_of_delay(&self, d_ps: i64) -> Option<usize> {
        let signed = bin_index_of(d_ps, self.bin_width_ps);
        let shifted = signed + self.half_bins();
        if shifted < 0 || shifted >= self.counts.len() as i64 {
            None
        } else {
            Some(shifted as usize)
        }
    }

    /// Indices of the `2·⌊W/(2τ)⌋ + 1`-bin window centered on `peak_index`.
    /// Errors when the window would run off either histogram edge.
    pub fn window_indices(
        &self,
        peak_index: usize,
        window_ps: i64,
    ) -> Result<std::ops::RangeInclusive<usize>> {
        let half = (window_bin_count(window_ps, self.bin_width_ps) as i64 - 1) / 2;
        let lo = peak_index as i64 - half;
        let hi = peak_index as i64 + half;
        if lo < 0 || hi >= self.counts.len() as i64 {
            return Err(Error::Domain(format!(
                "coincidence window around bin {peak_index} leaves the histogram range"
            )));
        }
        Ok(lo as usize..=hi as usize)
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Bin-wise sum of two histograms of identical geometry.
    pub fn checked_add(&self, other: &Histogram) -> Result<Histogram> {
        if self.bin_width_ps != other.bin_width_ps
            || self.counts.len() != other.counts.len()
            || self.duration_s != other.duration_s
        {
            return Err(Error::Domain("histogram geometries differ".into()));
        }
        let mut out = self.clone();
        for (c, o) in out.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        Ok(out)
    }
}

/// Expected coincidence histogram of one link over `duration_s`: a uniform
/// accidental floor plus the true-coincidence peak centered on the link
/// delay, integrated bin by bin.
pub fn expected_link_histogram(
    scenario: &Scenario,
    link: &LinkSpec,
    duration_s: f64,
) -> Result<Histogram> {
    let budget = link_budget(scenario, link)?;
    let mut hist = Histogram::zeroed(
        scenario.analysis.bin_width_ps,
        scenario.analysis.span_ps,
        duration_s,
    )?;
    let sigma = combined_jitter_sigma_ps(scenario);
    let denom = sigma * std::f64::consts::SQRT_2;
    let delta = budget.delay_ps as f64;
    let tau = hist.bin_width_ps as f64;
    for i in 0..hist.n_bins() {
        let center = hist.bin_center_ps(i) as f64;
        let frac = 0.5
            * (libm::erf((center + 0.5 * tau - delta) / denom)
                - libm::erf((center - 0.5 * tau - delta) / denom));
        hist.counts[i] =
            (budget.accidental_per_bin_cps + budget.true_coincidence_cps * frac) * duration_s;
    }
    Ok(hist)
}

/// Time-ordered detections of one detector. `outcome` names which of the
/// user's two analyzer outputs fired; timestamps ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    pub user: String,
    pub outcome: u8,
    pub timestamps_ps: Vec<i64>,
}

impl TimeTagStream {
    pub fn detector_id(&self, user_index: usize) -> u16 {
        (user_index * DETECTORS_PER_USER) as u16 + self.outcome as u16
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent, reproducible generator for one (domain, index) slice of a
/// run. Identical inputs give identical streams regardless of what else is
/// generated.
fn substream(master_seed: u64, domain: u64, index: u64) -> ChaCha12Rng {
    let base = mix64(master_seed ^ mix64(domain.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03));
    let mut key = [0u8; 32];
    let mut state = base;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

fn poisson_count(rng: &mut ChaCha12Rng, rate_cps: f64, duration_s: f64) -> Result<u64> {
    let lambda = rate_cps * duration_s;
    if lambda < 0.0 {
        return Err(Error::Domain(format!("negative event rate {rate_cps}")));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|_| Error::Domain(format!("invalid event intensity {lambda}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Uniformly timed detections at `rate_cps`, split evenly over both
/// detectors, shifted by the user delay. Events landing before time zero are
/// dropped.
fn fill_uniform_singles(
    rng: &mut ChaCha12Rng,
    rate_cps: f64,
    duration_s: f64,
    delay_ps: i64,
    sink: &mut [Vec<i64>; 2],
) -> Result<()> {
    for bucket in sink.iter_mut() {
        let n = poisson_count(rng, rate_cps / 2.0, duration_s)?;
        bucket.reserve(n as usize);
        for _ in 0..n {
            let t = rng.gen::<f64>() * duration_s;
            let ts = (t * PS_PER_S).round() as i64 + delay_ps;
            if ts >= 0 {
                bucket.push(ts);
            }
        }
    }
    Ok(())
}

/// Synthesizes the detection records of a run: every planned link's pairs and
/// residual singles plus every user's noise floor. `users_filter` selects
/// which users' detectors are collected; generation itself is sliced per link
/// and per user, so the streams that are kept are identical for any filter.
/// Returns streams in user declaration order, outcome 0 before outcome 1.
pub fn generate_network(
    scenario: &Scenario,
    duration_s: f64,
    seed: u64,
    users_filter: Option<&[String]>,
) -> Result<Vec<TimeTagStream>> {
    if !(duration_s > 0.0) {
        return Err(Error::Domain("duration must be > 0".into()));
    }
    if let Some(filter) = users_filter {
        for name in filter {
            scenario.user_index(name)?;
        }
    }
    let keep = |name: &str| -> bool {
        users_filter.is_none_or(|f| f.iter().any(|n| n == name))
    };

    let eta = scenario.detectors.efficiency;
    let mu = scenario.effective_pair_rate();
    let sigma_side = scenario.detectors.jitter_sigma_ps();
    let jitter = Normal::new(0.0, sigma_side)
        .map_err(|_| Error::Domain("invalid jitter width".into()))?;
    let mut per_user: Vec<[Vec<i64>; 2]> =
        (0..scenario.users.len()).map(|_| [Vec::new(), Vec::new()]).collect();

    for link in scenario.links()? {
        let keep_a = keep(&scenario.users[link.user_a].name);
        let keep_b = keep(&scenario.users[link.user_b].name);
        if !keep_a && !keep_b {
            continue;
        }
        let t_a = scenario.transmittance(link.user_a, link.slot_a.itu_index)?;
        let t_b = scenario.transmittance(link.user_b, link.slot_b.itu_index)?;
        let rate_a = mu * t_a * eta;
        let rate_b = mu * t_b * eta;
        let true_cps = mu * t_a * t_b * eta * eta;
        let pair_vis = scenario.link_visibility(link.user_a, link.user_b);
        let delay_a = scenario.users[link.user_a].delay_ps;
        let delay_b = scenario.users[link.user_b].delay_ps;

        let mut rng = substream(seed, DOMAIN_LINK_PAIRS, link.index as u64);
        let n_pairs = poisson_count(&mut rng, true_cps, duration_s)?;
        for _ in 0..n_pairs {
            let t = rng.gen::<f64>() * duration_s * PS_PER_S;
            let correlated = rng.gen_bool((1.0 + pair_vis) / 2.0);
            let side_a = rng.gen_bool(0.5) as u8;
            let side_b = if correlated { side_a } else { 1 - side_a };
            let ts_a = (t + jitter.sample(&mut rng)).round() as i64 + delay_a;
            let ts_b = (t + jitter.sample(&mut rng)).round() as i64 + delay_b;
            if keep_a && ts_a >= 0 {
                per_user[link.user_a][side_a as usize].push(ts_a);
            }
            if keep_b && ts_b >= 0 {
                per_user[link.user_b][side_b as usize].push(ts_b);
            }
        }

        if keep_a {
            let mut rng = substream(seed, DOMAIN_SINGLES_A, link.index as u64);
            fill_uniform_singles(
                &mut rng,
                rate_a - true_cps,
                duration_s,
                delay_a,
                &mut per_user[link.user_a],
            )?;
        }
        if keep_b {
            let mut rng = substream(seed, DOMAIN_SINGLES_B, link.index as u64);
            fill_uniform_singles(
                &mut rng,
                rate_b - true_cps,
                duration_s,
                delay_b,
                &mut per_user[link.user_b],
            )?;
        }
    }

    for (user_idx, cfg) in scenario.users.iter().enumerate() {
        if !keep(&cfg.name) {
            continue;
        }
        let noise_cps =
            eta * scenario.coexistence_noise(user_idx)?.total_cps() + 2.0 * scenario.detectors.dark_rate_cps;
        let mut rng = substream(seed, DOMAIN_USER_NOISE, user_idx as u64);
        fill_uniform_singles(&mut rng, noise_cps, duration_s, cfg.delay_ps, &mut per_user[user_idx])?;
    }

    let mut streams = Vec::new();
    for (user_idx, buckets) in per_user.into_iter().enumerate() {
        let name = &scenario.users[user_idx].name;
        if !keep(name) {
            continue;
        }
        for (outcome, mut timestamps) in buckets.into_iter().enumerate() {
            timestamps.sort_unstable();
            streams.push(TimeTagStream {
                user: name.clone(),
                outcome: outcome as u8,
                timestamps_ps: timestamps,
            });
        }
    }
    Ok(streams)
}

/// The four detector streams feeding one link: both users, both outcomes.
pub fn generate_timetags(
    scenario: &Scenario,
    link: &LinkSpec,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<TimeTagStream>> {
    let users = [
        scenario.users[link.user_a].name.clone(),
        scenario.users[link.user_b].name.clone(),
    ];
    generate_network(scenario, duration_s, seed, Some(&users))
}
