use petgraph::unionfind::UnionFind;

use super::EnrollmentNetwork;

/// Component label per student; labels are the smallest student index in the
/// component, so they are stable across runs.
pub fn component_labels(net: &EnrollmentNetwork) -> Vec<u32> {
    let n = net.n_students();
    let mut uf = UnionFind::<u32>::new(n);
    for class in net.classes() {
        if let Some((&first, rest)) = class.roster().split_first() {
            for &s in rest {
                uf.union(first, s);
            }
        }
    }
    let mut smallest = vec![u32::MAX; n];
    for s in 0..n as u32 {
        let root = uf.find_mut(s) as usize;
        smallest[root] = smallest[root].min(s);
    }
    (0..n as u32).map(|s| smallest[uf.find_mut(s) as usize]).collect()
}

/// Subnetwork induced by the connected component with the most students.
/// Equal-sized components are broken in favour of the one holding the
/// lexicographically smallest student id.
pub fn largest_component(net: &EnrollmentNetwork) -> EnrollmentNetwork {
    if net.is_empty() {
        return EnrollmentNetwork::default();
    }
    let labels = component_labels(net);
    let mut counts = vec![0usize; net.n_students()];
    for &l in &labels {
        counts[l as usize] += 1;
    }
    // Scanning ascending and replacing only on strictly larger size keeps the
    // component whose smallest member comes first.
    let mut best = 0usize;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = l;
        }
    }
    let best = best as u32;
    net.retain(|class| labels[class.roster()[0] as usize] == best, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn net(rows: &[(&str, &str, &str)]) -> EnrollmentNetwork {
        EnrollmentNetwork::from_enrollments(rows.iter().copied()).unwrap()
    }

    /// Breadth-first reachability over the bipartite graph.
    fn is_connected(net: &EnrollmentNetwork) -> bool {
        if net.is_empty() {
            return true;
        }
        let mut seen = vec![false; net.n_students()];
        let mut queue = VecDeque::from([0u32]);
        seen[0] = true;
        while let Some(s) = queue.pop_front() {
            for &c in net.classes_of(s) {
                for &t in net.classes()[c as usize].roster() {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    #[test]
    fn larger_component_survives() {
        let n = net(&[
            ("s1", "c1", "Mo"),
            ("s2", "c1", "Mo"),
            ("s3", "c2", "Tu"),
            ("s4", "c2", "Tu"),
            ("s5", "c2", "Tu"),
        ]);
        let lcc = largest_component(&n);
        assert_eq!(lcc.n_students(), 3);
        assert_eq!(lcc.classes()[0].id.as_str(), "c2");
        lcc.check_invariants().unwrap();
    }

    #[test]
    fn connected_network_is_identity() {
        let n = net(&[
            ("a", "c1", "Mo"),
            ("b", "c1", "Mo"),
            ("b", "c2", "Tu"),
            ("c", "c2", "Tu"),
        ]);
        assert_eq!(largest_component(&n), n);
    }

    #[test]
    fn empty_network() {
        assert!(largest_component(&EnrollmentNetwork::default()).is_empty());
    }

    #[test]
    fn tie_goes_to_smallest_id() {
        let n = net(&[
            ("z1", "c1", "Mo"),
            ("z2", "c1", "Mo"),
            ("a1", "c2", "Tu"),
            ("a2", "c2", "Tu"),
        ]);
        let lcc = largest_component(&n);
        assert_eq!(lcc.students()[0].as_str(), "a1");
    }

    #[test]
    fn output_connected_and_maximal() {
        let mut rows = Vec::new();
        let ids: Vec<(String, String)> = (0..60)
            .map(|i| (format!("s{:02}", (i * 7) % 40), format!("c{:02}", (i * 13) % 25)))
            .collect();
        for (s, c) in &ids {
            rows.push((s.as_str(), c.as_str(), "Mo"));
        }
        let n = net(&rows);
        let lcc = largest_component(&n);
        assert!(is_connected(&lcc));
        let labels = component_labels(&n);
        let mut counts = std::collections::HashMap::new();
        for l in labels {
            *counts.entry(l).or_insert(0usize) += 1;
        }
        assert_eq!(*counts.values().max().unwrap(), lcc.n_students());
    }
}
