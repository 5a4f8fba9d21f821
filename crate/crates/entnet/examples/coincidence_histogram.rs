//! Synthesize time tags for one link, cross-correlate the detector streams,
//! and print the coincidence histogram around the peak next to its analytic
//! expectation.
//!
//! Run with: cargo run --release --example coincidence_histogram

use entnet::analysis::cross_correlate;
use entnet::scenario::Scenario;
use entnet::statistics::{expected_link_histogram, generate_network, link_budget};
use std::path::Path;

fn main() -> entnet::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/testbed_3user.toml");
    let scenario = Scenario::load(&path)?;
    let link = scenario.link_by_name("bob-chloe")?;
    let duration_s = 20.0;
    let seed = 42;

    let budget = link_budget(&scenario, &link)?;
    println!(
        "link {}: true pairs {:.1}/s, expected peak at {} ps, visibility {:.3}",
        budget.name, budget.true_coincidence_cps, budget.delay_ps, budget.visibility
    );

    let only = [scenario.users[link.user_a].name.clone(), scenario.users[link.user_b].name.clone()];
    let streams = generate_network(&scenario, duration_s, seed, Some(&only))?;
    println!(
        "generated {} events across {} detector streams in {duration_s} s simulated time",
        streams.iter().map(|s| s.timestamps_ps.len()).sum::<usize>(),
        streams.len()
    );

    // Combine all four detector pairings into one histogram.
    let cfg = &scenario.analysis;
    let mut combined = None;
    for sa in streams.iter().filter(|s| s.user == only[0]) {
        for sb in streams.iter().filter(|s| s.user == only[1]) {
            let h = cross_correlate(sa, sb, cfg.bin_width_ps, cfg.span_ps, duration_s)?;
            combined = Some(match combined {
                None => h,
                Some(acc) => h.checked_add(&acc)?,
            });
        }
    }
    let combined = combined.expect("two users present");
    let expected = expected_link_histogram(&scenario, &link, duration_s)?;

    println!("\n{:>9} {:>10} {:>10}  histogram", "delay_ps", "observed", "expected");
    let peak = combined.index_of_delay(budget.delay_ps).expect("peak in range");
    for i in peak.saturating_sub(12)..=(peak + 12).min(combined.counts.len() - 1) {
        let obs = combined.counts[i];
        let exp = expected.counts[i];
        let bar = "#".repeat((obs / 12.0) as usize);
        println!("{:>9} {:>10.0} {:>10.1}  {}", combined.bin_center_ps(i), obs, exp, bar);
    }
    Ok(())
}
