//! Synthetic enrollment networks with a heavy-tailed class-size distribution.
//!
//! Each student draws an enrollment budget `1 + Poisson(mean - 1)`; each class
//! draws a target size from the configured law. Classes are filled largest
//! first by sampling distinct students with probability proportional to their
//! remaining budget.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Poisson;

use crate::config::FlatConfig;
use crate::error::{Error, Result};
use crate::network::{drop_degenerate, EnrollmentNetwork, NetworkBuilder, Weekday, Weekdays};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassSizeLaw {
    Uniform {
        min: usize,
        max: usize,
    },
    /// `P(k) ∝ k^-alpha` on `min..=max`.
    TruncatedPowerLaw {
        alpha: f64,
        min: usize,
        max: usize,
    },
}

impl ClassSizeLaw {
    pub fn bounds(&self) -> (usize, usize) {
        match *self {
            ClassSizeLaw::Uniform { min, max } | ClassSizeLaw::TruncatedPowerLaw { min, max, .. } => (min, max),
        }
    }

    /// Probability of each size in `min..=max`.
    pub fn pmf(&self) -> Vec<f64> {
        let (min, max) = self.bounds();
        let weights: Vec<f64> = match *self {
            ClassSizeLaw::Uniform { .. } => vec![1.0; max - min + 1],
            ClassSizeLaw::TruncatedPowerLaw { alpha, .. } => (min..=max).map(|k| (k as f64).powf(-alpha)).collect(),
        };
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }
}

impl fmt::Display for ClassSizeLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSizeLaw::Uniform { min, max } => write!(f, "uniform({min},{max})"),
            ClassSizeLaw::TruncatedPowerLaw { alpha, min, max } => {
                write!(f, "power_law({alpha},{min},{max})")
            }
        }
    }
}

impl FromStr for ClassSizeLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| format!("expected `uniform(a,b)` or `power_law(alpha,min,max)`, got `{s}`"))?;
        let args: Vec<&str> = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("missing `)` in `{s}`"))?
            .split(',')
            .map(str::trim)
            .collect();
        let int = |v: &str| v.parse::<usize>().map_err(|_| format!("`{v}` is not a count"));
        match (name.trim(), args.as_slice()) {
            ("uniform", [a, b]) => Ok(ClassSizeLaw::Uniform {
                min: int(a)?,
                max: int(b)?,
            }),
            ("power_law", [alpha, a, b]) => Ok(ClassSizeLaw::TruncatedPowerLaw {
                alpha: alpha.parse().map_err(|_| format!("`{alpha}` is not a number"))?,
                min: int(a)?,
                max: int(b)?,
            }),
            _ => Err(format!("unrecognised class-size law `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_students: usize,
    pub n_classes: usize,
    pub class_size_law: ClassSizeLaw,
    pub classes_per_student_mean: f64,
    pub meeting_pattern_pool: Vec<(Weekdays, f64)>,
    pub seed: u64,
}

pub const PRESETS: [&str; 2] = ["sfu-like", "desk"];

fn default_pool() -> Vec<(Weekdays, f64)> {
    use Weekday::*;
    vec![
        (Weekdays::from_days(&[Mo, We, Fr]), 0.4),
        (Weekdays::from_days(&[Tu, Th]), 0.4),
        (Weekdays::from_days(&[Mo]), 0.2 / 3.0),
        (Weekdays::from_days(&[We]), 0.2 / 3.0),
        (Weekdays::from_days(&[Fr]), 0.2 / 3.0),
    ]
}

impl SynthConfig {
    /// University-scale network (synthetic, not calibrated to any dataset).
    /// Class seats total about 88% of the expected enrollment budget.
    pub fn sfu_like(seed: u64) -> Self {
        SynthConfig {
            n_students: 25_000,
            n_classes: 7_000,
            class_size_law: ClassSizeLaw::TruncatedPowerLaw {
                alpha: 1.8,
                min: 2,
                max: 481,
            },
            classes_per_student_mean: 4.3,
            meeting_pattern_pool: default_pool(),
            seed,
        }
    }

    /// Small network for laptop-scale pipeline runs.
    pub fn desk(seed: u64) -> Self {
        SynthConfig {
            n_students: 2_000,
            n_classes: 780,
            class_size_law: ClassSizeLaw::TruncatedPowerLaw {
                alpha: 1.8,
                min: 2,
                max: 150,
            },
            classes_per_student_mean: 4.3,
            meeting_pattern_pool: default_pool(),
            seed,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "sfu-like" => Some(Self::sfu_like(seed)),
            "desk" => Some(Self::desk(seed)),
            _ => None,
        }
    }

    /// Read a config file. An optional `preset` key supplies the base values
    /// (default `sfu-like`); every other key overrides one field.
    pub fn from_flat(cfg: &FlatConfig) -> Result<Self> {
        cfg.reject_unknown(&[
            "preset",
            "n_students",
            "n_classes",
            "class_size_law",
            "classes_per_student_mean",
            "meeting_pattern_pool",
            "seed",
        ])?;
        let seed = cfg.parsed::<u64>("seed")?.unwrap_or(0);
        let preset = cfg.get("preset").unwrap_or("sfu-like");
        let mut out = Self::preset(preset, seed).ok_or_else(|| {
            Error::config(
                "preset",
                format!("unknown preset `{preset}` (expected one of: {})", PRESETS.join(", ")),
            )
        })?;
        if let Some(v) = cfg.parsed("n_students")? {
            out.n_students = v;
        }
        if let Some(v) = cfg.parsed("n_classes")? {
            out.n_classes = v;
        }
        if let Some(v) = cfg.parsed("class_size_law")? {
            out.class_size_law = v;
        }
        if let Some(v) = cfg.parsed("classes_per_student_mean")? {
            out.classes_per_student_mean = v;
        }
        if let Some(pool) = cfg.get("meeting_pattern_pool") {
            out.meeting_pattern_pool = pool
                .split(',')
                .map(|item| {
                    let (days, w) = item.trim().split_once(':').ok_or_else(|| {
                        Error::config(
                            "meeting_pattern_pool",
                            format!("expected `Days:weight`, got `{}`", item.trim()),
                        )
                    })?;
                    let days: Weekdays = days
                        .trim()
                        .parse()
                        .map_err(|e: String| Error::config("meeting_pattern_pool", e))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::config("meeting_pattern_pool", format!("bad weight `{}`", w.trim())))?;
                    Ok((days, w))
                })
                .collect::<Result<_>>()?;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn to_flat_string(&self) -> String {
        let pool: Vec<String> = self
            .meeting_pattern_pool
            .iter()
            .map(|(d, w)| format!("{d}:{w}"))
            .collect();
        format!(
            "n_students = {}\nn_classes = {}\nclass_size_law = {}\nclasses_per_student_mean = {}\nmeeting_pattern_pool = {}\nseed = {}\n",
            self.n_students,
            self.n_classes,
            self.class_size_law,
            self.classes_per_student_mean,
            pool.join(", "),
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (min, max) = self.class_size_law.bounds();
        if min == 0 || min > max {
            return Err(Error::config(
                "class_size_law",
                format!("need 1 <= min <= max, got {min}..{max}"),
            ));
        }
        if max > self.n_students {
            return Err(Error::config(
                "class_size_law",
                format!("max class size {max} exceeds n_students {}", self.n_students),
            ));
        }
        if let ClassSizeLaw::TruncatedPowerLaw { alpha, .. } = self.class_size_law {
            if !alpha.is_finite() {
                return Err(Error::config("class_size_law", "alpha must be finite"));
            }
        }
        if !(self.classes_per_student_mean >= 1.0) || !self.classes_per_student_mean.is_finite() {
            return Err(Error::config("classes_per_student_mean", "must be a finite value >= 1"));
        }
        if self.meeting_pattern_pool.is_empty() {
            return Err(Error::config("meeting_pattern_pool", "must not be empty"));
        }
        if self
            .meeting_pattern_pool
            .iter()
            .any(|(d, w)| d.is_empty() || !(*w >= 0.0))
        {
            return Err(Error::config(
                "meeting_pattern_pool",
                "patterns need at least one day and a non-negative weight",
            ));
        }
        let total: f64 = self.meeting_pattern_pool.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-3 {
            return Err(Error::config(
                "meeting_pattern_pool",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        if self.n_classes == 0 {
            return Err(Error::config("n_classes", "must be positive"));
        }
        Ok(())
    }
}

/// Fenwick tree over non-negative integer weights, used for proportional
/// sampling with point updates.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(weights: &[u64]) -> Self {
        let mut tree = vec![0; weights.len() + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut j = i + 1;
            while j < tree.len() {
                tree[j] += w;
                j += j & j.wrapping_neg();
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] = (self.tree[j] as i64 + delta) as u64;
            j += j & j.wrapping_neg();
        }
    }

    fn total(&self) -> u64 {
        let mut j = self.tree.len() - 1;
        let mut sum = 0;
        while j > 0 {
            sum += self.tree[j];
            j &= j - 1;
        }
        sum
    }

    /// Index `i` with prefix(i) <= target < prefix(i + 1).
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<EnrollmentNetwork> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);

    let extra = cfg.classes_per_student_mean - 1.0;
    let budgets: Vec<u64> = if extra > 0.0 {
        let poisson = Poisson::new(extra).map_err(|e| Error::Generation(e.to_string()))?;
        (0..cfg.n_students)
            .map(|_| 1 + poisson.sample(&mut rng) as u64)
            .collect()
    } else {
        vec![1; cfg.n_students]
    };

    let (min, _) = cfg.class_size_law.bounds();
    let size_index = WeightedIndex::new(cfg.class_size_law.pmf()).map_err(|e| Error::Generation(e.to_string()))?;
    let sizes: Vec<usize> = (0..cfg.n_classes).map(|_| min + size_index.sample(&mut rng)).collect();

    let pattern_index = WeightedIndex::new(cfg.meeting_pattern_pool.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Generation(e.to_string()))?;
    let patterns: Vec<Weekdays> = (0..cfg.n_classes)
        .map(|_| cfg.meeting_pattern_pool[pattern_index.sample(&mut rng)].0)
        .collect();

    let demand: u64 = sizes.iter().map(|&s| s as u64).sum();
    let supply: u64 = budgets.iter().sum();
    if demand > supply {
        return Err(Error::Generation(format!(
            "sum of target class sizes ({demand}) exceeds sum of student enrollment budgets ({supply})"
        )));
    }

    let mut order: Vec<usize> = (0..cfg.n_classes).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));

    let mut remaining = budgets.clone();
    let mut tree = Fenwick::new(&remaining);
    let mut rosters: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_classes];
    for &c in &order {
        let roster = &mut rosters[c];
        // Chosen students are zeroed in the tree until the class is full so a
        // student never enrolls twice in one class.
        while roster.len() < sizes[c] {
            let total = tree.total();
            if total == 0 {
                return Err(Error::Generation(format!(
                    "class of size {} cannot be filled: too few distinct students with remaining budget",
                    sizes[c]
                )));
            }
            let s = tree.find(rand::Rng::random_range(&mut rng, 0..total));
            tree.add(s, -(remaining[s] as i64));
            roster.push(s);
        }
        for &s in roster.iter() {
            remaining[s] -= 1;
            tree.add(s, remaining[s] as i64);
        }
    }

    let sw = cfg.n_students.saturating_sub(1).to_string().len();
    let cw = cfg.n_classes.saturating_sub(1).to_string().len();
    let mut builder = NetworkBuilder::new();
    for (c, roster) in rosters.iter().enumerate() {
        for &s in roster {
            builder
                .enroll(format!("s{s:0sw$}").into(), format!("c{c:0cw$}").into(), patterns[c])
                .expect("each class has one pattern");
        }
    }
    let net = builder.build();
    if drop_degenerate(&net).is_empty() {
        return Err(Error::Generation(
            "configuration produced no class with two or more students".into(),
        ));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_two_student_network() {
        let cfg = SynthConfig {
            n_students: 2,
            n_classes: 1,
            class_size_law: ClassSizeLaw::Uniform { min: 2, max: 2 },
            classes_per_student_mean: 1.0,
            meeting_pattern_pool: default_pool(),
            seed: 9,
        };
        let net = generate(&cfg).unwrap();
        assert_eq!(net.n_students(), 2);
        assert_eq!(net.n_classes(), 1);
        assert_eq!(net.classes()[0].size(), 2);
    }

    #[test]
    fn infeasible_config_names_constraint() {
        let cfg = SynthConfig {
            n_students: 10,
            n_classes: 20,
            class_size_law: ClassSizeLaw::Uniform { min: 10, max: 10 },
            classes_per_student_mean: 1.0,
            meeting_pattern_pool: default_pool(),
            seed: 1,
        };
        let err = generate(&cfg).unwrap_err().to_string();
        assert!(err.contains("exceeds sum of student enrollment budgets"), "{err}");
    }

    #[test]
    fn desk_is_deterministic_and_valid() {
        let a = generate(&SynthConfig::desk(5)).unwrap();
        let b = generate(&SynthConfig::desk(5)).unwrap();
        assert_eq!(a, b);
        a.check_invariants().unwrap();
        assert!(a.classes().iter().all(|c| c.size() <= 150));
        assert_ne!(a, generate(&SynthConfig::desk(6)).unwrap());
    }

    #[test]
    fn fenwick_find_matches_prefix_sums() {
        let w = [3u64, 0, 5, 1, 0, 2];
        let t = Fenwick::new(&w);
        assert_eq!(t.total(), 11);
        let mut expected = Vec::new();
        for (i, &x) in w.iter().enumerate() {
            expected.extend(std::iter::repeat_n(i, x as usize));
        }
        for (target, &want) in expected.iter().enumerate() {
            assert_eq!(t.find(target as u64), want);
        }
    }

    #[test]
    fn law_parsing() {
        assert_eq!(
            "power_law(1.8, 2, 481)".parse::<ClassSizeLaw>().unwrap(),
            ClassSizeLaw::TruncatedPowerLaw {
                alpha: 1.8,
                min: 2,
                max: 481
            }
        );
        assert_eq!(
            "uniform(2,5)".parse::<ClassSizeLaw>().unwrap(),
            ClassSizeLaw::Uniform { min: 2, max: 5 }
        );
        assert!("gauss(1,2)".parse::<ClassSizeLaw>().is_err());
        let law = ClassSizeLaw::TruncatedPowerLaw {
            alpha: 1.8,
            min: 2,
            max: 481,
        };
        assert_eq!(law.to_string().parse::<ClassSizeLaw>().unwrap(), law);
    }

    #[test]
    fn flat_config_round_trip() {
        let cfg = SynthConfig::desk(11);
        let back = SynthConfig::from_flat(&FlatConfig::parse(&cfg.to_flat_string()).unwrap()).unwrap();
        assert_eq!(back.n_students, cfg.n_students);
        assert_eq!(back.class_size_law, cfg.class_size_law);
        assert_eq!(back.seed, 11);
        assert_eq!(back.meeting_pattern_pool.len(), 5);
        let err = SynthConfig::from_flat(&FlatConfig::parse("n_students = lots\n").unwrap()).unwrap_err();
        assert!(err.to_string().contains("n_students"));
    }
}
