//! Discrete-time stochastic SEAIR dynamics on an enrollment network.
//!
//! Transmission happens inside classes that meet on the current weekday; the
//! per-pair transmission probability from a contagious member of compartment
//! `X` in a class of size `M` is `theta_X / sqrt(M)`. Holding times in
//! E, A, I1 and I2 are geometric with daily exit probabilities `q_*`.

mod engine;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{initialize, run_simulation, step_day, Simulator};

/// Disease compartment. Allowed moves: S→E, E→A, E→I1, I1→I2, A→R, I2→R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Compartment {
    S = 0,
    E = 1,
    A = 2,
    I1 = 3,
    I2 = 4,
    R = 5,
}

impl Compartment {
    pub const ALL: [Compartment; 6] = [
        Compartment::S,
        Compartment::E,
        Compartment::A,
        Compartment::I1,
        Compartment::I2,
        Compartment::R,
    ];

    pub fn can_move_to(self, to: Compartment) -> bool {
        use Compartment::*;
        matches!((self, to), (S, E) | (E, A) | (E, I1) | (I1, I2) | (A, R) | (I2, R))
    }

    pub fn is_contagious(self) -> bool {
        matches!(self, Compartment::A | Compartment::I1 | Compartment::I2)
    }

    /// In E, A, I1 or I2.
    pub fn is_active(self) -> bool {
        !matches!(self, Compartment::S | Compartment::R)
    }

    pub fn name(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::E => "E",
            Compartment::A => "A",
            Compartment::I1 => "I1",
            Compartment::I2 => "I2",
            Compartment::R => "R",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The eight disease parameters. Infectiousness of A and I1 is expressed
/// relative to I2: `theta_A = rho_A * theta_I2`, `theta_I1 = rho_I1 * theta_I2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    #[serde(rename = "theta_I2")]
    pub theta_i2: f64,
    #[serde(rename = "rho_A")]
    pub rho_a: f64,
    #[serde(rename = "rho_I1")]
    pub rho_i1: f64,
    #[serde(rename = "q_E")]
    pub q_e: f64,
    #[serde(rename = "q_A")]
    pub q_a: f64,
    #[serde(rename = "q_I1")]
    pub q_i1: f64,
    #[serde(rename = "q_I2")]
    pub q_i2: f64,
    #[serde(rename = "q_EA")]
    pub q_ea: f64,
}

impl EpidemicParams {
    /// Centre of each literature-derived candidate range.
    pub fn central() -> Self {
        EpidemicParams {
            theta_i2: 0.198,
            rho_a: 0.75,
            rho_i1: 0.63,
            q_e: 0.182,
            q_a: 0.138,
            q_i1: 0.435,
            q_i2: 0.075,
            q_ea: 0.18,
        }
    }

    pub fn theta_a(&self) -> f64 {
        self.rho_a * self.theta_i2
    }

    pub fn theta_i1(&self) -> f64 {
        self.rho_i1 * self.theta_i2
    }

    /// Daily exit probability of a transient compartment.
    pub fn exit_prob(&self, c: Compartment) -> f64 {
        match c {
            Compartment::E => self.q_e,
            Compartment::A => self.q_a,
            Compartment::I1 => self.q_i1,
            Compartment::I2 => self.q_i2,
            Compartment::S | Compartment::R => 0.0,
        }
    }

    /// Parameters in the canonical predictor order
    /// `theta_I2, rho_A, rho_I1, q_E, q_A, q_I1, q_I2, q_EA`.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.theta_i2,
            self.rho_a,
            self.rho_i1,
            self.q_e,
            self.q_a,
            self.q_i1,
            self.q_i2,
            self.q_ea,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        EpidemicParams {
            theta_i2: v[0],
            rho_a: v[1],
            rho_i1: v[2],
            q_e: v[3],
            q_a: v[4],
            q_i1: v[5],
            q_i2: v[6],
            q_ea: v[7],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64, ok: bool| {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::arg(format!("parameter {name} = {v} out of range")))
            }
        };
        check("theta_I2", self.theta_i2, self.theta_i2 >= 0.0)?;
        check("rho_A", self.rho_a, self.rho_a >= 0.0)?;
        check("rho_I1", self.rho_i1, self.rho_i1 >= 0.0)?;
        for (name, q) in [
            ("q_E", self.q_e),
            ("q_A", self.q_a),
            ("q_I1", self.q_i1),
            ("q_I2", self.q_i2),
            ("q_EA", self.q_ea),
        ] {
            check(name, q, (0.0..=1.0).contains(&q))?;
        }
        Ok(())
    }
}

/// Parameter names in canonical order.
pub const PARAM_NAMES: [&str; 8] = ["theta_I2", "rho_A", "rho_I1", "q_E", "q_A", "q_I1", "q_I2", "q_EA"];

/// Per-run settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_days: u32,
    pub n_initial: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_days: 90,
            n_initial: 10,
            seed: 0,
        }
    }
}

/// Per-pair daily transmission probability `theta / sqrt(class_size)`,
/// clamped to `[0, 1]`.
pub fn pair_transmission_prob(theta: f64, class_size: usize) -> Result<f64> {
    let mut clamps = 0;
    pair_transmission_prob_counted(theta, class_size, &mut clamps)
}

/// As [`pair_transmission_prob`], incrementing `clamps` when the raw value
/// falls outside `[0, 1]`.
pub fn pair_transmission_prob_counted(theta: f64, class_size: usize, clamps: &mut u64) -> Result<f64> {
    if class_size < 2 {
        return Err(Error::arg(format!("class size must be at least 2, got {class_size}")));
    }
    let raw = theta / (class_size as f64).sqrt();
    if !(0.0..=1.0).contains(&raw) {
        *clamps += 1;
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Daily infection probability of one susceptible in a class with the given
/// numbers of contagious members.
pub fn class_infection_prob(
    m_a: usize,
    m_i1: usize,
    m_i2: usize,
    class_size: usize,
    p: &EpidemicParams,
) -> Result<f64> {
    if m_a + m_i1 + m_i2 > class_size {
        return Err(Error::arg(format!(
            "{} contagious members exceed class size {class_size}",
            m_a + m_i1 + m_i2
        )));
    }
    let tau_a = pair_transmission_prob(p.theta_a(), class_size)?;
    let tau_i1 = pair_transmission_prob(p.theta_i1(), class_size)?;
    let tau_i2 = pair_transmission_prob(p.theta_i2, class_size)?;
    Ok(infection_prob_from_taus([tau_a, tau_i1, tau_i2], [m_a, m_i1, m_i2]))
}

pub(crate) fn infection_prob_from_taus(tau: [f64; 3], m: [usize; 3]) -> f64 {
    let escape: f64 = tau.iter().zip(m).map(|(&t, k)| (1.0 - t).powi(k as i32)).product();
    (1.0 - escape).clamp(0.0, 1.0)
}

/// Compartment of every student (indexed like the network's student list)
/// and the current day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpidemicState {
    assignment: Vec<Compartment>,
    day: u32,
}

impl EpidemicState {
    pub fn new(assignment: Vec<Compartment>) -> Self {
        EpidemicState { assignment, day: 0 }
    }

    pub fn assignment(&self) -> &[Compartment] {
        &self.assignment
    }

    pub fn compartment(&self, student: u32) -> Compartment {
        self.assignment[student as usize]
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn population(&self) -> usize {
        self.assignment.len()
    }

    pub fn counts(&self) -> [u32; 6] {
        let mut c = [0u32; 6];
        for &x in &self.assignment {
            c[x as usize] += 1;
        }
        c
    }
}

/// Daily compartment counts `S, E, A, I1, I2, R`; row 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<[u32; 6]>,
    /// How many per-pair probabilities had to be clamped into `[0, 1]`.
    pub tau_clamps: u64,
}

impl Trajectory {
    pub fn population(&self) -> u32 {
        self.rows.first().map_or(0, |r| r.iter().sum())
    }

    pub fn n_days(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_row(&self) -> [u32; 6] {
        *self.rows.last().expect("trajectory has an initial row")
    }

    /// Members of E, A, I1 and I2 on each day.
    pub fn active(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.iter().map(|r| r[1] + r[2] + r[3] + r[4])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "S", "E", "A", "I1", "I2", "R"])?;
        for (day, row) in self.rows.iter().enumerate() {
            let mut rec = vec![day.to_string()];
            rec.extend(row.iter().map(u32::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<trajectory csv>", e))?;
        Ok(())
    }
}

impl FromStr for Compartment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Compartment::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown compartment `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn secondary_attack_rate_anchor() {
        assert_abs_diff_eq!(pair_transmission_prob(0.198, 2).unwrap(), 0.1400, epsilon = 5e-4);
        assert_eq!(pair_transmission_prob(0.0, 37).unwrap(), 0.0);
        assert_abs_diff_eq!(pair_transmission_prob(0.240, 4).unwrap(), 0.120, epsilon = 1e-12);
        assert!(pair_transmission_prob(0.2, 1).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        let mut clamps = 0;
        assert_eq!(pair_transmission_prob_counted(2.0, 2, &mut clamps).unwrap(), 1.0);
        assert_eq!(clamps, 1);
        pair_transmission_prob_counted(0.2, 2, &mut clamps).unwrap();
        assert_eq!(clamps, 1);
    }

    #[test]
    fn class_probability_examples() {
        let p = EpidemicParams::central();
        assert_eq!(class_infection_prob(0, 0, 0, 10, &p).unwrap(), 0.0);
        let p = EpidemicParams { theta_i2: 0.198, ..p };
        assert_abs_diff_eq!(class_infection_prob(0, 0, 1, 2, &p).unwrap(), 0.1400, epsilon = 5e-4);
        let p = EpidemicParams { theta_i2: 0.2, ..p };
        assert_abs_diff_eq!(class_infection_prob(0, 0, 2, 4, &p).unwrap(), 0.19, epsilon = 1e-12);
        assert!(class_infection_prob(2, 2, 2, 5, &p).is_err());
    }

    #[test]
    fn mixed_compartments_multiply_escapes() {
        let p = EpidemicParams {
            theta_i2: 0.3,
            rho_a: 0.5,
            rho_i1: 2.0,
            ..EpidemicParams::central()
        };
        let n = 9usize;
        let (ta, ti1, ti2) = (0.15 / 3.0, 0.6 / 3.0, 0.3 / 3.0);
        let expected = 1.0 - (1.0 - ta) * (1.0f64 - ti1).powi(2) * (1.0f64 - ti2).powi(3);
        assert_abs_diff_eq!(class_infection_prob(1, 2, 3, n, &p).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn transitions_follow_the_graph() {
        use Compartment::*;
        let allowed: Vec<(Compartment, Compartment)> = Compartment::ALL
            .iter()
            .flat_map(|&a| Compartment::ALL.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a.can_move_to(*b))
            .collect();
        assert_eq!(allowed, [(S, E), (E, A), (E, I1), (A, R), (I1, I2), (I2, R)]);
    }

    #[test]
    fn validation() {
        assert!(EpidemicParams::central().validate().is_ok());
        assert!(EpidemicParams {
            q_e: 1.5,
            ..EpidemicParams::central()
        }
        .validate()
        .is_err());
        assert!(EpidemicParams {
            rho_a: -0.1,
            ..EpidemicParams::central()
        }
        .validate()
        .is_err());
        assert!(EpidemicParams {
            theta_i2: f64::NAN,
            ..EpidemicParams::central()
        }
        .validate()
        .is_err());
    }
}
