//! Full-mesh entanglement planning: deterministic assignment of channel pairs
//! (+i, −i) to user pairs and per-user channel delivery bookkeeping.

use crate::error::{Error, Result};
use crate::spectral::{offset_channel, spectral_gap, SpectralSlot};
use serde::{Deserialize, Serialize};

/// A network participant. `fiber_path` names the optical path from the
/// distribution node's output to this user's measurement module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub name: String,
    pub fiber_path: String,
}

impl User {
    pub fn new(name: &str) -> Self {
        User { name: name.to_string(), fiber_path: name.to_string() }
    }
}

/// One entangled channel pair: the user at index `user_minus` receives the
/// −`magnitude` channel, the user at `user_plus` receives +`magnitude`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub magnitude: i32,
    pub user_minus: usize,
    pub user_plus: usize,
}

/// A planned full mesh.
///
/// Invariants: every pair magnitude appears at most once; for n users there
/// are exactly n(n−1)/2 assignments and n(n−1) distinct channels, each
/// unordered user pair appearing exactly once; each user receives exactly n−1
/// channels; the +i and −i channels of one assignment go to the two distinct
/// users of that assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshAllocation {
    pub center: SpectralSlot,
    pub users: Vec<User>,
    pub assignments: Vec<Assignment>,
}

/// Total channels needed for an n-user full mesh: n(n−1).
pub fn channels_required(n_users: u32) -> Result<u64> {
    if n_users < 2 {
        return Err(Error::Domain(format!("mesh needs at least 2 users, got {n_users}")));
    }
    Ok(u64::from(n_users) * u64::from(n_users - 1))
}

/// Plans the deterministic full mesh: unordered user pairs are enumerated in
/// lexicographic input order ((0,1),(0,2),…,(1,2),…), pair magnitudes descend
/// from `i_max`, and in each pair the earlier user receives −i, the later +i.
pub fn plan_full_mesh(users: &[User], i_max: i32, center: &SpectralSlot) -> Result<MeshAllocation> {
    let n = users.len();
    if n < 2 {
        return Err(Error::Domain(format!("mesh needs at least 2 users, got {n}")));
    }
    let mut seen = std::collections::BTreeSet::new();
    for u in users {
        if !seen.insert(&u.name) {
            return Err(Error::Configuration(format!("duplicate user name '{}'", u.name)));
        }
    }
    let pairs = (n * (n - 1) / 2) as i32;
    if i_max < pairs {
        return Err(Error::Capacity(format!(
            "{n} users need {pairs} pair magnitudes but i_max = {i_max}"
        )));
    }
    let mut assignments = Vec::with_capacity(pairs as usize);
    let mut magnitude = i_max;
    for a in 0..n {
        for b in (a + 1)..n {
            offset_channel(center, -magnitude)?;
            offset_channel(center, magnitude)?;
            assignments.push(Assignment { magnitude, user_minus: a, user_plus: b });
            magnitude -= 1;
        }
    }
    Ok(MeshAllocation { center: *center, users: users.to_vec(), assignments })
}

impl MeshAllocation {
    pub fn user_index(&self, name: &str) -> Result<usize> {
        self.users
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| Error::Lookup(format!("unknown user '{name}'")))
    }

    /// Signed offsets delivered to the user at `index`, in assignment order.
    pub fn offsets_for(&self, index: usize) -> Vec<i32> {
        self.assignments
            .iter()
            .filter_map(|a| {
                if a.user_minus == index {
                    Some(-a.magnitude)
                } else if a.user_plus == index {
                    Some(a.magnitude)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Slots delivered to the user at `index`, in assignment order.
    pub fn channels_for(&self, index: usize) -> Result<Vec<SpectralSlot>> {
        self.offsets_for(index)
            .into_iter()
            .map(|i| offset_channel(&self.center, i))
            .collect()
    }

    /// Every slot assigned to any user, user-major in assignment order.
    pub fn all_channels(&self) -> Result<Vec<(usize, SpectralSlot)>> {
        let mut out = Vec::new();
        for idx in 0..self.users.len() {
            for slot in self.channels_for(idx)? {
                out.push((idx, slot));
            }
        }
        Ok(out)
    }

    /// The assignment connecting two users, if any.
    pub fn assignment_between(&self, a: usize, b: usize) -> Option<&Assignment> {
        self.assignments
            .iter()
            .find(|x| (x.user_minus == a && x.user_plus == b) || (x.user_minus == b && x.user_plus == a))
    }
}

/// The entangled counterpart of one delivered channel: the opposite user and
/// the mirrored slot. Self-inverse over all assigned (user, slot) pairs.
pub fn link_partner(alloc: &MeshAllocation, user: &str, slot: &SpectralSlot) -> Result<(User, SpectralSlot)> {
    let idx = alloc.user_index(user)?;
    for a in &alloc.assignments {
        if a.user_minus == idx && slot.offset == -a.magnitude {
            return Ok((alloc.users[a.user_plus].clone(), offset_channel(&alloc.center, a.magnitude)?));
        }
        if a.user_plus == idx && slot.offset == a.magnitude {
            return Ok((alloc.users[a.user_minus].clone(), offset_channel(&alloc.center, -a.magnitude)?));
        }
    }
    Err(Error::Lookup(format!(
        "channel offset {} is not assigned to user '{user}'",
        slot.offset
    )))
}

/// One quantum/classical channel pair sitting closer than the required guard
/// gap. `gap_ghz` is negative when the 10 dB bands overlap outright.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapViolation {
    pub quantum_itu: i32,
    pub quantum_user: usize,
    pub classical_itu: i32,
    pub gap_ghz: f64,
}

/// Every (quantum, classical) slot pair whose spectral gap falls below
/// `min_gap_ghz`. An empty result means the plan is compliant.
pub fn validate_against_classical(
    alloc: &MeshAllocation,
    classical: &[SpectralSlot],
    min_gap_ghz: f64,
) -> Result<Vec<GapViolation>> {
    let mut violations = Vec::new();
    for (user_idx, q) in alloc.all_channels()? {
        for c in classical {
            let gap = match spectral_gap(&q, c) {
                Ok(g) => g,
                Err(Error::Overlap { gap_ghz }) => gap_ghz,
                Err(e) => return Err(e),
            };
            if gap < min_gap_ghz {
                violations.push(GapViolation {
                    quantum_itu: q.itu_index,
                    quantum_user: user_idx,
                    classical_itu: c.itu_index,
                    gap_ghz: gap,
                });
            }
        }
    }
    Ok(violations)
}

/// Tabular allocation report: `user,itu_index,offset,partner_user`.
pub fn allocation_csv(alloc: &MeshAllocation) -> Result<String> {
    let mut out = String::from("user,itu_index,offset,partner_user\n");
    for (idx, user) in alloc.users.iter().enumerate() {
        for slot in alloc.channels_for(idx)? {
            let (partner, _) = link_partner(alloc, &user.name, &slot)?;
            out.push_str(&format!(
                "{},{},{},{}\n",
                user.name, slot.itu_index, slot.offset, partner.name
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{DEFAULT_BANDWIDTH_10DB_GHZ, DEFAULT_BANDWIDTH_3DB_GHZ, REFERENCE_ITU_INDEX};

    fn center() -> SpectralSlot {
        SpectralSlot::on_grid(
            REFERENCE_ITU_INDEX,
            REFERENCE_ITU_INDEX,
            DEFAULT_BANDWIDTH_3DB_GHZ,
            DEFAULT_BANDWIDTH_10DB_GHZ,
        )
        .unwrap()
    }

    fn users(names: &[&str]) -> Vec<User> {
        names.iter().map(|n| User::new(n)).collect()
    }

    fn offsets_by_name(alloc: &MeshAllocation, name: &str) -> Vec<i32> {
        alloc.offsets_for(alloc.user_index(name).unwrap())
    }

    #[test]
    fn channels_required_examples() {
        assert_eq!(channels_required(4).unwrap(), 12);
        assert_eq!(channels_required(2).unwrap(), 2);
        assert_eq!(channels_required(5).unwrap(), 20);
        assert!(channels_required(1).is_err());
    }

    #[test]
    fn four_user_plan_is_verbatim() {
        let alloc = plan_full_mesh(&users(&["alice", "bob", "chloe", "dave"]), 15, &center()).unwrap();
        assert_eq!(offsets_by_name(&alloc, "alice"), vec![-15, -14, -13]);
        assert_eq!(offsets_by_name(&alloc, "bob"), vec![15, -12, -11]);
        assert_eq!(offsets_by_name(&alloc, "chloe"), vec![14, 12, -10]);
        assert_eq!(offsets_by_name(&alloc, "dave"), vec![13, 11, 10]);
        assert_eq!(alloc.assignments.len(), 6);
        assert_eq!(alloc.all_channels().unwrap().len(), 12);
    }

    #[test]
    fn two_and_three_user_plans() {
        let two = plan_full_mesh(&users(&["a", "b"]), 1, &center()).unwrap();
        assert_eq!(offsets_by_name(&two, "a"), vec![-1]);
        assert_eq!(offsets_by_name(&two, "b"), vec![1]);

        let three = plan_full_mesh(&users(&["a", "b", "c"]), 15, &center()).unwrap();
        assert_eq!(offsets_by_name(&three, "a"), vec![-15, -14]);
        assert_eq!(offsets_by_name(&three, "b"), vec![15, -13]);
        assert_eq!(offsets_by_name(&three, "c"), vec![14, 13]);
    }

    #[test]
    fn plan_error_cases() {
        assert!(plan_full_mesh(&users(&["a"]), 15, &center()).is_err());
        assert!(matches!(
            plan_full_mesh(&users(&["a", "b", "c", "d"]), 5, &center()),
            Err(Error::Capacity(_))
        ));
        assert!(plan_full_mesh(&users(&["a", "b", "a"]), 15, &center()).is_err());
        assert!(plan_full_mesh(&users(&["a", "b"]), 700, &center()).is_err());
    }

    #[test]
    fn mesh_invariants_hold_for_all_small_sizes() {
        for n in 2..=12usize {
            let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
            let us: Vec<User> = names.iter().map(|s| User::new(s)).collect();
            let i_max = (n * (n - 1) / 2) as i32 + 3;
            let alloc = plan_full_mesh(&us, i_max, &center()).unwrap();

            let mags: Vec<i32> = alloc.assignments.iter().map(|a| a.magnitude).collect();
            let unique: std::collections::BTreeSet<i32> = mags.iter().copied().collect();
            assert_eq!(unique.len(), mags.len(), "n={n}: duplicate magnitude");

            assert_eq!(alloc.assignments.len(), n * (n - 1) / 2);
            let all = alloc.all_channels().unwrap();
            assert_eq!(all.len(), n * (n - 1));
            let distinct: std::collections::BTreeSet<i32> =
                all.iter().map(|(_, s)| s.itu_index).collect();
            assert_eq!(distinct.len(), n * (n - 1), "n={n}: channels not distinct");

            let mut pair_seen = std::collections::BTreeSet::new();
            for a in &alloc.assignments {
                assert_ne!(a.user_minus, a.user_plus, "n={n}: pair to one user");
                assert!(pair_seen.insert((a.user_minus, a.user_plus)), "n={n}: repeated pair");
            }
            for idx in 0..n {
                assert_eq!(alloc.offsets_for(idx).len(), n - 1, "n={n}: user {idx}");
            }
        }
    }

    #[test]
    fn permuting_users_preserves_magnitude_multiset() {
        let base = plan_full_mesh(&users(&["a", "b", "c", "d"]), 15, &center()).unwrap();
        let permuted = plan_full_mesh(&users(&["d", "b", "a", "c"]), 15, &center()).unwrap();
        let mags = |a: &MeshAllocation| {
            let mut m: Vec<i32> = a.assignments.iter().map(|x| x.magnitude).collect();
            m.sort();
            m
        };
        assert_eq!(mags(&base), mags(&permuted));
    }

    #[test]
    fn link_partner_examples_and_involution() {
        let alloc = plan_full_mesh(&users(&["alice", "bob", "chloe", "dave"]), 15, &center()).unwrap();

        let minus15 = offset_channel(&alloc.center, -15).unwrap();
        let (partner, mirrored) = link_partner(&alloc, "alice", &minus15).unwrap();
        assert_eq!(partner.name, "bob");
        assert_eq!(mirrored.offset, 15);

        let minus10 = offset_channel(&alloc.center, -10).unwrap();
        let (partner, mirrored) = link_partner(&alloc, "chloe", &minus10).unwrap();
        assert_eq!(partner.name, "dave");
        assert_eq!(mirrored.offset, 10);

        for (idx, slot) in alloc.all_channels().unwrap() {
            let name = &alloc.users[idx].name;
            let (p, mirrored) = link_partner(&alloc, name, &slot).unwrap();
            let (back_user, back_slot) = link_partner(&alloc, &p.name, &mirrored).unwrap();
            assert_eq!(&back_user.name, name);
            assert_eq!(back_slot, slot);
        }

        let plus15 = offset_channel(&alloc.center, 15).unwrap();
        assert!(link_partner(&alloc, "alice", &plus15).is_err());
        assert!(link_partner(&alloc, "nobody", &minus15).is_err());
    }

    #[test]
    fn classical_validation() {
        let alloc = plan_full_mesh(&users(&["alice", "bob", "chloe", "dave"]), 15, &center()).unwrap();
        let classical: Vec<SpectralSlot> = (14..=17)
            .map(|n| SpectralSlot::on_grid(n, 34, 36.0, 58.0).unwrap())
            .collect();

        let ok = validate_against_classical(&alloc, &classical, 142.0).unwrap();
        assert!(ok.is_empty(), "expected compliant plan, got {ok:?}");

        let overlapping = vec![SpectralSlot::on_grid(19, 34, 36.0, 58.0).unwrap()];
        let hits = validate_against_classical(&alloc, &overlapping, 142.0).unwrap();
        let flagged: Vec<(i32, f64)> = hits.iter().map(|v| (v.quantum_itu, v.gap_ghz)).collect();
        assert_eq!(flagged.len(), 2, "overlap plus its too-close neighbor: {flagged:?}");
        assert_eq!(flagged[0].0, 19);
        assert!(flagged[0].1 < 0.0);
        assert_eq!(flagged[1].0, 20);
        assert!((flagged[1].1 - 42.0).abs() < 1e-9);

        let strict = validate_against_classical(&alloc, &classical, 300.0).unwrap();
        let pairs: Vec<(i32, i32)> = strict.iter().map(|v| (v.quantum_itu, v.classical_itu)).collect();
        assert!(pairs.contains(&(19, 17)));
        assert_eq!(pairs, vec![(19, 16), (19, 17), (20, 17)]);
    }

    #[test]
    fn allocation_report_shape() {
        let alloc = plan_full_mesh(&users(&["alice", "bob"]), 1, &center()).unwrap();
        let csv = allocation_csv(&alloc).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "user,itu_index,offset,partner_user");
        assert_eq!(lines[1], "alice,33,-1,bob");
        assert_eq!(lines[2], "bob,35,1,alice");
    }
}
