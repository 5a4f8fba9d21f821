//! Plan a full-mesh wavelength allocation from scratch: every pair of users
//! shares one entangled channel pair placed symmetrically around the source,
//! and the plan is checked against classical carriers for spectral clearance.
//!
//! Run with: cargo run --example plan_mesh

use entnet::spectral::{channel_frequency, SpectralSlot};
use entnet::topology::{
    allocation_csv, channels_required, link_partner, plan_full_mesh, validate_against_classical,
    User,
};

fn main() -> entnet::Result<()> {
    let users: Vec<User> =
        ["alice", "bob", "chloe", "dave", "erin"].iter().map(|n| User::new(n)).collect();

    println!("channels required for {} users: {}\n", users.len(), channels_required(users.len() as u32)?);

    // Center channel 34 carries the reference frequency 193.4 THz.
    let center = SpectralSlot::on_grid(34, 34, 36.0, 58.0)?;
    let alloc = plan_full_mesh(&users, 20, &center)?;

    println!("{:<8} {:>5} {:>9} {:>11}  partner", "user", "itu", "freq_thz", "lambda_nm");
    for (user_idx, slot) in alloc.all_channels()? {
        let user = &alloc.users[user_idx];
        let (partner, partner_slot) = link_partner(&alloc, &user.name, &slot)?;
        println!(
            "{:<8} {:>5} {:>9.4} {:>11.4}  {} (itu {})",
            user.name,
            slot.itu_index,
            slot.center_frequency,
            slot.wavelength_nm(),
            partner.name,
            partner_slot.itu_index
        );
    }

    // Paired channels conserve energy: their frequencies sum to twice the
    // source reference, exactly.
    let f19 = channel_frequency(19)?;
    let f49 = channel_frequency(49)?;
    println!("\nenergy check: f(19) + f(49) = {} THz (2 x 193.4 = {})", f19 + f49, 2.0 * 193.4);

    // Classical carriers need a guard band from every quantum channel. The
    // plan above spans ITU 14-54, so carriers parked at ITU 1-4 clear it
    // while carriers at ITU 14-17 collide head-on.
    for carriers in [[1, 2, 3, 4], [14, 15, 16, 17]] {
        let slots: Vec<SpectralSlot> = carriers
            .iter()
            .map(|&n| SpectralSlot::on_grid(n, 34, 36.0, 58.0))
            .collect::<Result<_, _>>()?;
        let violations = validate_against_classical(&alloc, &slots, 142.0)?;
        println!(
            "\ngap check, carriers at ITU {carriers:?}, 142 GHz minimum: {} violation(s)",
            violations.len()
        );
        for v in violations.iter().take(3) {
            println!(
                "  quantum ITU {} ({}) vs classical ITU {}: gap {:.1} GHz",
                v.quantum_itu, alloc.users[v.quantum_user].name, v.classical_itu, v.gap_ghz
            );
        }
    }

    print!("\nallocation as CSV:\n{}", allocation_csv(&alloc)?);
    Ok(())
}
