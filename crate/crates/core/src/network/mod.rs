//! The bipartite student × class-section enrollment network and the
//! reductions applied to it before simulation.

mod components;
mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::partial_shuffle;

pub use components::{component_labels, largest_component};
pub use io::{parse_enrollments, read_enrollments, write_enrollments, write_enrollments_file};

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_newtype!(
    /// Opaque student token as read from input.
    StudentId
);
id_newtype!(
    /// Opaque class-section token. Lectures, labs and tutorials are distinct sections.
    ClassId
);

/// Day of the week, Monday first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weekday {
    Mo,
    Tu,
    We,
    Th,
    Fr,
    Sa,
    Su,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mo,
        Weekday::Tu,
        Weekday::We,
        Weekday::Th,
        Weekday::Fr,
        Weekday::Sa,
        Weekday::Su,
    ];

    /// Calendar weekday of simulation day `day` (day 1 is a Monday).
    pub fn of_day(day: u32) -> Weekday {
        debug_assert!(day >= 1);
        Self::ALL[((day - 1) % 7) as usize]
    }

    pub fn code(self) -> &'static str {
        match self {
            Weekday::Mo => "Mo",
            Weekday::Tu => "Tu",
            Weekday::We => "We",
            Weekday::Th => "Th",
            Weekday::Fr => "Fr",
            Weekday::Sa => "Sa",
            Weekday::Su => "Su",
        }
    }

    fn from_code(code: &str) -> Option<Weekday> {
        Self::ALL.into_iter().find(|d| d.code() == code)
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// A set of weekdays, written as concatenated two-letter codes (`MoWeFr`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Weekdays(u8);

impl Weekdays {
    pub const NONE: Weekdays = Weekdays(0);
    pub const EVERY_DAY: Weekdays = Weekdays(0x7f);

    pub fn from_days(days: &[Weekday]) -> Self {
        Weekdays(days.iter().fold(0, |acc, d| acc | d.bit()))
    }

    pub fn contains(self, day: Weekday) -> bool {
        self.0 & day.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Weekday> {
        Weekday::ALL.into_iter().filter(move |d| self.contains(*d))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Display for Weekdays {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.iter() {
            f.write_str(d.code())?;
        }
        Ok(())
    }
}

impl FromStr for Weekdays {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.len() % 2 != 0 || !s.is_ascii() {
            return Err(format!("malformed weekday list `{s}`"));
        }
        let mut days = Weekdays::NONE;
        for i in (0..s.len()).step_by(2) {
            let code = &s[i..i + 2];
            let day = Weekday::from_code(code).ok_or_else(|| format!("unknown weekday `{code}`"))?;
            days.0 |= day.bit();
        }
        Ok(days)
    }
}

/// Class-size threshold: classes with strictly more students move online.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Threshold {
    Finite(u32),
    Infinite,
}

impl Threshold {
    pub fn admits(self, class_size: usize) -> bool {
        match self {
            Threshold::Finite(phi) => class_size <= phi as usize,
            Threshold::Infinite => true,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Threshold::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Threshold::Finite(phi) => f64::from(phi),
            Threshold::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(phi) => write!(f, "{phi}"),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "inf" | "Inf" | "INF" | "infinity" | "∞" => Ok(Threshold::Infinite),
            _ => s
                .parse::<u32>()
                .map(Threshold::Finite)
                .map_err(|_| format!("invalid threshold `{s}` (expected a positive integer or `inf`)")),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One class section with its meeting days and roster (indices into the
/// owning network's student list, ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSection {
    pub id: ClassId,
    pub meeting_days: Weekdays,
    roster: Vec<u32>,
}

impl ClassSection {
    pub fn roster(&self) -> &[u32] {
        &self.roster
    }

    pub fn size(&self) -> usize {
        self.roster.len()
    }
}

/// Bipartite enrollment graph. Students are stored in ascending id order and
/// classes in ascending id order; both orders are part of the determinism
/// contract of the simulation engine.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnrollmentNetwork {
    students: Vec<StudentId>,
    classes: Vec<ClassSection>,
    student_classes: Vec<Vec<u32>>,
}

/// Accumulates enrollments; duplicate (student, class) pairs collapse.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    classes: BTreeMap<ClassId, (Weekdays, BTreeSet<StudentId>)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a class (possibly with no students yet). Re-declaring with
    /// different days is an error.
    pub fn class(&mut self, id: ClassId, days: Weekdays) -> std::result::Result<&mut Self, String> {
        match self.classes.get(&id) {
            Some((existing, _)) if *existing != days => {
                return Err(format!(
                    "class `{id}` listed with days `{days}` but earlier with `{existing}`"
                ))
            }
            Some(_) => {}
            None => {
                self.classes.insert(id, (days, BTreeSet::new()));
            }
        }
        Ok(self)
    }

    pub fn enroll(
        &mut self,
        student: StudentId,
        class: ClassId,
        days: Weekdays,
    ) -> std::result::Result<&mut Self, String> {
        self.class(class.clone(), days)?;
        self.classes.get_mut(&class).expect("declared above").1.insert(student);
        Ok(self)
    }

    /// Classes whose roster is empty are not part of the built network.
    pub fn build(self) -> EnrollmentNetwork {
        let students: Vec<StudentId> = self
            .classes
            .values()
            .flat_map(|(_, roster)| roster.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&StudentId, u32> = students.iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
        let classes = self
            .classes
            .iter()
            .filter(|(_, (_, roster))| !roster.is_empty())
            .map(|(id, (days, roster))| ClassSection {
                id: id.clone(),
                meeting_days: *days,
                roster: roster.iter().map(|s| index[s]).collect(),
            })
            .collect();
        EnrollmentNetwork::assemble(students, classes)
    }
}

impl EnrollmentNetwork {
    fn assemble(students: Vec<StudentId>, classes: Vec<ClassSection>) -> Self {
        let mut student_classes = vec![Vec::new(); students.len()];
        for (c, class) in classes.iter().enumerate() {
            for &s in &class.roster {
                student_classes[s as usize].push(c as u32);
            }
        }
        EnrollmentNetwork {
            students,
            classes,
            student_classes,
        }
    }

    /// Build from explicit `(student, class, days)` triples.
    pub fn from_enrollments<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut builder = NetworkBuilder::new();
        for (i, (s, c, d)) in rows.into_iter().enumerate() {
            let days: Weekdays = d.parse().map_err(|msg| Error::Parse {
                line: i as u64 + 1,
                msg,
            })?;
            builder.enroll(s.into(), c.into(), days).map_err(|msg| Error::Parse {
                line: i as u64 + 1,
                msg,
            })?;
        }
        Ok(builder.build())
    }

    pub fn students(&self) -> &[StudentId] {
        &self.students
    }

    pub fn classes(&self) -> &[ClassSection] {
        &self.classes
    }

    /// Class indices of student `s`, ascending.
    pub fn classes_of(&self, s: u32) -> &[u32] {
        &self.student_classes[s as usize]
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_enrollments(&self) -> usize {
        self.classes.iter().map(ClassSection::size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    pub fn student_index(&self, id: &StudentId) -> Option<u32> {
        self.students.binary_search(id).ok().map(|i| i as u32)
    }

    pub fn class_by_id(&self, id: &ClassId) -> Option<&ClassSection> {
        self.classes
            .binary_search_by(|c| c.id.cmp(id))
            .ok()
            .map(|i| &self.classes[i])
    }

    /// Enrollments as `(student index, class index)` in class-major order.
    pub fn enrollments(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.classes
            .iter()
            .enumerate()
            .flat_map(|(c, class)| class.roster.iter().map(move |&s| (s, c as u32)))
    }

    /// Keep the classes selected by `keep_class`, and within them the
    /// enrollments selected by `keep_enrollment` (indexed in [`Self::enrollments`]
    /// order). Empty classes and students left without classes are dropped.
    fn retain(&self, keep_class: impl Fn(&ClassSection) -> bool, keep_enrollment: Option<&[bool]>) -> Self {
        let mut offset = 0usize;
        let mut kept: Vec<(usize, Vec<u32>)> = Vec::new();
        for (c, class) in self.classes.iter().enumerate() {
            let n = class.roster.len();
            if keep_class(class) {
                let roster: Vec<u32> = match keep_enrollment {
                    Some(mask) => class
                        .roster
                        .iter()
                        .zip(&mask[offset..offset + n])
                        .filter_map(|(&s, &k)| k.then_some(s))
                        .collect(),
                    None => class.roster.clone(),
                };
                if !roster.is_empty() {
                    kept.push((c, roster));
                }
            }
            offset += n;
        }

        let mut used = vec![false; self.students.len()];
        for (_, roster) in &kept {
            for &s in roster {
                used[s as usize] = true;
            }
        }
        let mut remap = vec![u32::MAX; self.students.len()];
        let mut students = Vec::new();
        for (i, id) in self.students.iter().enumerate() {
            if used[i] {
                remap[i] = students.len() as u32;
                students.push(id.clone());
            }
        }
        let classes = kept
            .into_iter()
            .map(|(c, roster)| ClassSection {
                id: self.classes[c].id.clone(),
                meeting_days: self.classes[c].meeting_days,
                roster: roster.into_iter().map(|s| remap[s as usize]).collect(),
            })
            .collect();
        Self::assemble(students, classes)
    }

    /// Full consistency scan: rosters sorted and duplicate-free, adjacency
    /// mirrors rosters, every student enrolled somewhere.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.students.windows(2).all(|w| w[0] < w[1]) {
            return Err("student ids not strictly ascending".into());
        }
        if !self.classes.windows(2).all(|w| w[0].id < w[1].id) {
            return Err("class ids not strictly ascending".into());
        }
        let mut seen = vec![Vec::new(); self.students.len()];
        for (c, class) in self.classes.iter().enumerate() {
            if !class.roster.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("roster of `{}` not strictly ascending", class.id));
            }
            for &s in &class.roster {
                let list = seen
                    .get_mut(s as usize)
                    .ok_or_else(|| format!("roster of `{}` references unknown student", class.id))?;
                list.push(c as u32);
            }
        }
        for (s, list) in seen.iter().enumerate() {
            if list.is_empty() {
                return Err(format!("student `{}` has no classes", self.students[s]));
            }
            if *list != self.student_classes[s] {
                return Err(format!("adjacency of `{}` disagrees with rosters", self.students[s]));
            }
        }
        Ok(())
    }
}

/// Remove classes without meeting days and classes with at most one student.
pub fn drop_degenerate(net: &EnrollmentNetwork) -> EnrollmentNetwork {
    net.retain(|c| !c.meeting_days.is_empty() && c.size() > 1, None)
}

/// Move every class with more than `phi` students online.
pub fn apply_threshold(net: &EnrollmentNetwork, phi: Threshold) -> Result<EnrollmentNetwork> {
    if let Threshold::Finite(p) = phi {
        if p <= 1 {
            return Err(Error::arg(format!("class-size threshold must exceed 1, got {p}")));
        }
    }
    Ok(net.retain(|c| phi.admits(c.size()), None))
}

/// Number of enrollments in classes that a threshold of `phi` keeps.
pub fn thinning_target(net: &EnrollmentNetwork, phi: Threshold) -> usize {
    net.classes
        .iter()
        .map(ClassSection::size)
        .filter(|&n| phi.admits(n))
        .sum()
}

/// Remove uniformly random enrollments until `target` remain. Classes emptied
/// entirely are dropped; single-student classes are kept.
pub fn thin_uniform<R: Rng + ?Sized>(net: &EnrollmentNetwork, target: usize, rng: &mut R) -> Result<EnrollmentNetwork> {
    let total = net.n_enrollments();
    if target > total {
        return Err(Error::arg(format!(
            "thinning target {target} exceeds the {total} enrollments present"
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    let n_remove = total - target;
    partial_shuffle(&mut order, n_remove, rng);
    let mut keep = vec![true; total];
    for &e in &order[..n_remove] {
        keep[e] = false;
    }
    Ok(net.retain(|_| true, Some(&keep)))
}

/// Size summary of a network, mirroring the threshold table layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct NetworkStats {
    pub n_students: usize,
    pub n_classes: usize,
    pub n_enrollments: usize,
    pub n_students_lcc: usize,
    pub class_size_histogram: BTreeMap<usize, usize>,
    pub max_class_size: usize,
}

pub fn network_stats(net: &EnrollmentNetwork) -> NetworkStats {
    let mut class_size_histogram = BTreeMap::new();
    for class in &net.classes {
        *class_size_histogram.entry(class.size()).or_insert(0) += 1;
    }
    NetworkStats {
        n_students: net.n_students(),
        n_classes: net.n_classes(),
        n_enrollments: net.n_enrollments(),
        n_students_lcc: largest_component(net).n_students(),
        max_class_size: net.classes.iter().map(ClassSection::size).max().unwrap_or(0),
        class_size_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn net(rows: &[(&str, &str, &str)]) -> EnrollmentNetwork {
        EnrollmentNetwork::from_enrollments(rows.iter().copied()).unwrap()
    }

    fn sizes(net: &EnrollmentNetwork) -> Vec<usize> {
        let mut v: Vec<_> = net.classes().iter().map(ClassSection::size).collect();
        v.sort_unstable();
        v
    }

    /// Classes `c{k}` of the given sizes with disjoint rosters, meeting Mo.
    fn sized(sizes: &[usize]) -> EnrollmentNetwork {
        let mut b = NetworkBuilder::new();
        for (k, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                b.enroll(
                    format!("s{k}_{i:03}").into(),
                    format!("c{k}").into(),
                    Weekdays::from_days(&[Weekday::Mo]),
                )
                .unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn weekdays_round_trip() {
        let d: Weekdays = "MoWeFr".parse().unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.contains(Weekday::We));
        assert!(!d.contains(Weekday::Tu));
        assert_eq!(d.to_string(), "MoWeFr");
        assert_eq!("FrMo".parse::<Weekdays>().unwrap().to_string(), "MoFr");
        assert!("".parse::<Weekdays>().unwrap().is_empty());
        assert!("Xx".parse::<Weekdays>().is_err());
        assert!("Mon".parse::<Weekdays>().is_err());
    }

    #[test]
    fn calendar_starts_monday() {
        assert_eq!(Weekday::of_day(1), Weekday::Mo);
        assert_eq!(Weekday::of_day(7), Weekday::Su);
        assert_eq!(Weekday::of_day(8), Weekday::Mo);
        assert_eq!(Weekday::of_day(90), Weekday::of_day(90 - 7 * 12));
    }

    #[test]
    fn threshold_parse_and_order() {
        assert_eq!("20".parse::<Threshold>().unwrap(), Threshold::Finite(20));
        assert_eq!("inf".parse::<Threshold>().unwrap(), Threshold::Infinite);
        assert!("-3".parse::<Threshold>().is_err());
        assert!(Threshold::Finite(1000) < Threshold::Infinite);
        assert!(Threshold::Finite(20).admits(20));
        assert!(!Threshold::Finite(20).admits(21));
    }

    #[test]
    fn two_students_one_class() {
        let n = net(&[("s1", "c1", "MoWe"), ("s2", "c1", "MoWe")]);
        assert_eq!(n.n_students(), 2);
        assert_eq!(n.n_classes(), 1);
        assert_eq!(n.classes()[0].size(), 2);
        assert_eq!(n.classes()[0].meeting_days.to_string(), "MoWe");
        n.check_invariants().unwrap();
    }

    #[test]
    fn duplicate_rows_collapse() {
        let n = net(&[("s1", "c1", "Tu"), ("s1", "c1", "Tu")]);
        assert_eq!(n.n_enrollments(), 1);
    }

    #[test]
    fn conflicting_days_rejected() {
        let err = EnrollmentNetwork::from_enrollments([("s1", "c1", "Tu"), ("s2", "c1", "We")]);
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn drop_degenerate_rules() {
        let mut rows = vec![
            ("solo", "c_one", "MoWeFr"),
            ("a", "c_pair", "Tu"),
            ("b", "c_pair", "Tu"),
        ];
        let online: Vec<String> = (0..30).map(|i| format!("o{i:02}")).collect();
        for s in &online {
            rows.push((s.as_str(), "c_none", ""));
        }
        // o00 is also in a real class and must survive
        rows.push(("o00", "c_pair", "Tu"));
        let n = drop_degenerate(&net(&rows));
        assert_eq!(n.n_classes(), 1);
        assert_eq!(n.classes()[0].id.as_str(), "c_pair");
        let ids: Vec<&str> = n.students().iter().map(StudentId::as_str).collect();
        assert_eq!(ids, ["a", "b", "o00"]);
        n.check_invariants().unwrap();
        assert_eq!(drop_degenerate(&n), n);
    }

    #[test]
    fn drop_degenerate_fixed_point() {
        let n = net(&[("s1", "c1", "Tu"), ("s2", "c1", "Tu")]);
        assert_eq!(drop_degenerate(&n), n);
    }

    #[test]
    fn threshold_is_strict() {
        let n = sized(&[15, 20, 21]);
        assert_eq!(sizes(&apply_threshold(&n, Threshold::Finite(20)).unwrap()), [15, 20]);
        assert_eq!(apply_threshold(&n, Threshold::Infinite).unwrap(), n);
        assert!(apply_threshold(&n, Threshold::Finite(1)).is_err());
        assert!(apply_threshold(&n, Threshold::Finite(0)).is_err());
    }

    #[test]
    fn thinning_targets() {
        assert_eq!(thinning_target(&sized(&[10, 30]), Threshold::Finite(20)), 10);
        assert_eq!(thinning_target(&sized(&[10, 30]), Threshold::Infinite), 40);
        assert_eq!(thinning_target(&sized(&[20, 21]), Threshold::Finite(20)), 20);
    }

    #[test]
    fn thin_edge_cases() {
        let n = sized(&[4, 6]);
        let mut rng = rng_from_seed(3);
        assert_eq!(thin_uniform(&n, 10, &mut rng).unwrap(), n);
        assert!(thin_uniform(&n, 0, &mut rng).unwrap().is_empty());
        assert!(thin_uniform(&n, 11, &mut rng).is_err());
    }

    #[test]
    fn thin_is_seed_deterministic() {
        let n = sized(&[4, 6]);
        let a = thin_uniform(&n, 6, &mut rng_from_seed(42)).unwrap();
        let b = thin_uniform(&n, 6, &mut rng_from_seed(42)).unwrap();
        assert_eq!(a.n_enrollments(), 6);
        assert_eq!(a, b);
        a.check_invariants().unwrap();
    }

    #[test]
    fn thin_keeps_single_student_classes() {
        let n = sized(&[2, 2, 2, 2]);
        let mut found_single = false;
        for seed in 0..50 {
            let t = thin_uniform(&n, 5, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(t.n_enrollments(), 5);
            found_single |= t.classes().iter().any(|c| c.size() == 1);
        }
        assert!(found_single);
    }

    #[test]
    fn stats_small() {
        assert_eq!(network_stats(&EnrollmentNetwork::default()), NetworkStats::default());
        let n = net(&[
            ("a", "c1", "Mo"),
            ("b", "c1", "Mo"),
            ("b", "c2", "Tu"),
            ("c", "c2", "Tu"),
            ("d", "c2", "Tu"),
        ]);
        let st = network_stats(&n);
        assert_eq!(st.n_students, 4);
        assert_eq!(st.n_enrollments, 5);
        assert_eq!(st.n_classes, 2);
        assert_eq!(st.n_students_lcc, 4);
        assert_eq!(st.max_class_size, 3);
        assert_eq!(st.class_size_histogram.values().sum::<usize>(), 2);
    }
}
