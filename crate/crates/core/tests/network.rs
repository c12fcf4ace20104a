use std::collections::{BTreeSet, HashMap, VecDeque};

use enrollnet::network::{
    apply_threshold, component_labels, drop_degenerate, largest_component, parse_enrollments, thin_uniform,
    thinning_target, write_enrollments, ClassId, EnrollmentNetwork, NetworkBuilder, StudentId, Threshold, Weekday,
    Weekdays,
};
use enrollnet::rng::rng_from_seed;
use proptest::prelude::*;

fn build(pairs: &[(u8, u8)], days: &[u8]) -> EnrollmentNetwork {
    let mut b = NetworkBuilder::new();
    for &(s, c) in pairs {
        let mask = days[c as usize % days.len()];
        let d: Vec<Weekday> = Weekday::ALL
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, d)| d)
            .collect();
        b.enroll(
            StudentId(format!("s{s:03}")),
            ClassId(format!("c{c:03}")),
            Weekdays::from_days(&d),
        )
        .unwrap();
    }
    b.build()
}

fn arb_network() -> impl Strategy<Value = EnrollmentNetwork> {
    (
        prop::collection::vec((0u8..60, 0u8..25), 1..300),
        prop::collection::vec(0u8..128, 25),
    )
        .prop_map(|(pairs, days)| build(&pairs, &days))
}

/// Student sets of connected components by breadth-first search over
/// shared classes.
fn bfs_components(net: &EnrollmentNetwork) -> Vec<BTreeSet<u32>> {
    let mut seen = vec![false; net.n_students()];
    let mut out = Vec::new();
    for start in 0..net.n_students() {
        if seen[start] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start as u32]);
        seen[start] = true;
        while let Some(s) = queue.pop_front() {
            comp.insert(s);
            for &c in net.classes_of(s) {
                for &t in net.classes()[c as usize].roster() {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

fn enrollment_set(net: &EnrollmentNetwork) -> BTreeSet<(String, String)> {
    net.enrollments()
        .map(|(s, c)| {
            (
                net.students()[s as usize].0.clone(),
                net.classes()[c as usize].id.0.clone(),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn built_networks_are_consistent(net in arb_network()) {
        prop_assert!(net.check_invariants().is_ok());
    }

    #[test]
    fn drop_degenerate_is_idempotent(net in arb_network()) {
        let once = drop_degenerate(&net);
        prop_assert!(once.check_invariants().is_ok());
        prop_assert!(once.classes().iter().all(|c| c.size() >= 2 && !c.meeting_days.is_empty()));
        prop_assert_eq!(drop_degenerate(&once), once);
    }

    #[test]
    fn threshold_keeps_only_small_classes(net in arb_network(), phi in 2u32..12) {
        let net = drop_degenerate(&net);
        let reduced = apply_threshold(&net, Threshold::Finite(phi)).unwrap();
        prop_assert!(reduced.check_invariants().is_ok());
        prop_assert!(reduced.classes().iter().all(|c| c.size() <= phi as usize));
        let kept: usize = net.classes().iter().filter(|c| c.size() <= phi as usize).map(|c| c.size()).sum();
        prop_assert_eq!(reduced.n_enrollments(), kept);
        prop_assert_eq!(thinning_target(&net, Threshold::Finite(phi)), kept);
        // A larger threshold keeps a superset.
        let looser = apply_threshold(&net, Threshold::Finite(phi + 1)).unwrap();
        prop_assert!(enrollment_set(&reduced).is_subset(&enrollment_set(&looser)));
        prop_assert_eq!(apply_threshold(&net, Threshold::Infinite).unwrap(), net);
    }

    #[test]
    fn thinning_hits_the_target(net in arb_network(), frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let target = (net.n_enrollments() as f64 * frac) as usize;
        let thinned = thin_uniform(&net, target, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(thinned.check_invariants().is_ok());
        prop_assert_eq!(thinned.n_enrollments(), target);
        prop_assert!(enrollment_set(&thinned).is_subset(&enrollment_set(&net)));
        let again = thin_uniform(&net, target, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(thinned, again);
    }

    #[test]
    fn largest_component_matches_bfs(net in arb_network()) {
        let comps = bfs_components(&net);
        let lcc = largest_component(&net);
        prop_assert!(lcc.check_invariants().is_ok());
        let best = comps.iter().map(BTreeSet::len).max().unwrap_or(0);
        prop_assert_eq!(lcc.n_students(), best);
        // Ties go to the component holding the smallest student id.
        let chosen = comps.iter().find(|c| c.len() == best);
        if let Some(chosen) = chosen {
            let ids: BTreeSet<String> = chosen.iter().map(|&s| net.students()[s as usize].0.clone()).collect();
            let got: BTreeSet<String> = lcc.students().iter().map(|s| s.0.clone()).collect();
            prop_assert_eq!(got, ids);
        }
        prop_assert_eq!(bfs_components(&lcc).len(), usize::from(lcc.n_students() > 0));
        prop_assert_eq!(largest_component(&lcc), lcc.clone());

        let labels = component_labels(&net);
        let mut by_label: HashMap<u32, BTreeSet<u32>> = HashMap::new();
        for (s, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().insert(s as u32);
        }
        let mut a: Vec<_> = by_label.into_values().collect();
        let mut b = comps.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip(net in arb_network()) {
        let mut buf = Vec::new();
        write_enrollments(&net, &mut buf).unwrap();
        let back = parse_enrollments(buf.as_slice()).unwrap();
        prop_assert_eq!(back, net);
    }
}

#[test]
fn threshold_rejects_trivial_values() {
    let net = build(&[(0, 0), (1, 0)], &[1]);
    assert!(apply_threshold(&net, Threshold::Finite(1)).is_err());
    assert!(apply_threshold(&net, Threshold::Finite(0)).is_err());
    assert_eq!(apply_threshold(&net, Threshold::Finite(2)).unwrap(), net);
}
