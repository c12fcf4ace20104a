//! The daily update.
//!
//! A day is a synchronous update from the start-of-day snapshot:
//!
//! 1. Infection: every class meeting on the day's weekday, in ascending class
//!    order, draws `Binomial(M_S, tau*)` new exposures from its snapshot
//!    susceptibles (partial Fisher–Yates over the roster order). A student
//!    exposed in several classes enters E once.
//! 2. Progression, in the order E, A, I1, I2: `Binomial(N_X, q_X)` members of
//!    the snapshot compartment (ascending student order) exit, chosen by
//!    partial Fisher–Yates. Each E-exit then goes to A with probability
//!    `q_EA`, otherwise to I1.
//! 3. All moves are applied at once. Students exposed today do not progress
//!    until tomorrow.
//!
//! The random draws are consumed in exactly this order, which together with
//! the stable orderings makes a run a pure function of its seed.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{
    infection_prob_from_taus, pair_transmission_prob_counted, Compartment, EpidemicParams, EpidemicState, SimConfig,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::network::{EnrollmentNetwork, Weekday};
use crate::rng::{partial_shuffle, rng_from_seed};

/// Slot in the per-class counters; only S and the contagious compartments
/// are tracked.
fn class_slot(c: Compartment) -> Option<usize> {
    match c {
        Compartment::S => Some(0),
        Compartment::A => Some(1),
        Compartment::I1 => Some(2),
        Compartment::I2 => Some(3),
        Compartment::E | Compartment::R => None,
    }
}

const TRANSIENT: [Compartment; 4] = [Compartment::E, Compartment::A, Compartment::I1, Compartment::I2];

fn transient_slot(c: Compartment) -> Option<usize> {
    match c {
        Compartment::E => Some(0),
        Compartment::A => Some(1),
        Compartment::I1 => Some(2),
        Compartment::I2 => Some(3),
        Compartment::S | Compartment::R => None,
    }
}

fn binomial<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p).expect("probability in (0, 1)").sample(rng) as usize
}

/// Reusable simulation workspace bound to one network. Holds per-class
/// counters and compartment member lists that are updated incrementally, so a
/// day costs time proportional to the meeting classes and the moves made.
pub struct Simulator<'n> {
    net: &'n EnrollmentNetwork,
    params: EpidemicParams,
    tau: Vec<[f64; 3]>,
    tau_clamps: u64,
    counts: Vec<[u32; 4]>,
    members: [Vec<u32>; 4],
    exposed_mark: Vec<u32>,
    generation: u32,
    exposures: Vec<u32>,
    moves: Vec<(u32, Compartment, Compartment)>,
    scratch: Vec<u32>,
}

impl<'n> Simulator<'n> {
    pub fn new(net: &'n EnrollmentNetwork, params: EpidemicParams) -> Result<Self> {
        params.validate()?;
        let mut tau_clamps = 0;
        let tau = net
            .classes()
            .iter()
            .map(|class| {
                // Single-student classes cannot transmit; any size >= 2 stands in.
                let size = class.size().max(2);
                Ok([
                    pair_transmission_prob_counted(params.theta_a(), size, &mut tau_clamps)?,
                    pair_transmission_prob_counted(params.theta_i1(), size, &mut tau_clamps)?,
                    pair_transmission_prob_counted(params.theta_i2, size, &mut tau_clamps)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulator {
            net,
            params,
            tau,
            tau_clamps,
            counts: vec![[0; 4]; net.n_classes()],
            members: Default::default(),
            exposed_mark: vec![0; net.n_students()],
            generation: 0,
            exposures: Vec::new(),
            moves: Vec::new(),
            scratch: Vec::new(),
        })
    }

    pub fn tau_clamps(&self) -> u64 {
        self.tau_clamps
    }

    /// Rebuild the counters from `state`. Must be called before stepping a
    /// state that was not produced by this simulator.
    pub fn load(&mut self, state: &EpidemicState) -> Result<()> {
        if state.population() != self.net.n_students() {
            return Err(Error::arg(format!(
                "state has {} students but the network has {}",
                state.population(),
                self.net.n_students()
            )));
        }
        for (c, class) in self.net.classes().iter().enumerate() {
            let mut k = [0u32; 4];
            for &s in class.roster() {
                if let Some(slot) = class_slot(state.compartment(s)) {
                    k[slot] += 1;
                }
            }
            self.counts[c] = k;
        }
        for list in &mut self.members {
            list.clear();
        }
        for (s, &x) in state.assignment().iter().enumerate() {
            if let Some(slot) = transient_slot(x) {
                self.members[slot].push(s as u32);
            }
        }
        Ok(())
    }

    /// Advance `state` to `day` (which must be `state.day() + 1` for a
    /// calendar-consistent run, but any day >= 1 is accepted).
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut EpidemicState, day: u32, rng: &mut R) {
        debug_assert!(day >= 1);
        let weekday = Weekday::of_day(day);
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.exposed_mark.iter_mut().for_each(|m| *m = 0);
            self.generation = 1;
        }
        for list in &mut self.members {
            list.sort_unstable();
        }
        self.exposures.clear();
        self.moves.clear();

        for (c, class) in self.net.classes().iter().enumerate() {
            if !class.meeting_days.contains(weekday) {
                continue;
            }
            let [s, a, i1, i2] = self.counts[c];
            if s == 0 || a + i1 + i2 == 0 {
                continue;
            }
            let p = infection_prob_from_taus(self.tau[c], [a as usize, i1 as usize, i2 as usize]);
            let k = binomial(s as usize, p, rng);
            if k == 0 {
                continue;
            }
            self.scratch.clear();
            self.scratch.extend(
                class
                    .roster()
                    .iter()
                    .copied()
                    .filter(|&st| state.compartment(st) == Compartment::S),
            );
            partial_shuffle(&mut self.scratch, k, rng);
            for &st in &self.scratch[..k] {
                if self.exposed_mark[st as usize] != self.generation {
                    self.exposed_mark[st as usize] = self.generation;
                    self.exposures.push(st);
                }
            }
        }
        for &st in &self.exposures {
            self.moves.push((st, Compartment::S, Compartment::E));
        }

        for (slot, &from) in TRANSIENT.iter().enumerate() {
            let list = &mut self.members[slot];
            let k = binomial(list.len(), self.params.exit_prob(from), rng);
            partial_shuffle(list, k, rng);
            for &st in &list[..k] {
                let to = match from {
                    Compartment::E => {
                        if rng.random_bool(self.params.q_ea) {
                            Compartment::A
                        } else {
                            Compartment::I1
                        }
                    }
                    Compartment::A | Compartment::I2 => Compartment::R,
                    Compartment::I1 => Compartment::I2,
                    Compartment::S | Compartment::R => unreachable!(),
                };
                self.moves.push((st, from, to));
            }
            list.drain(..k);
        }

        for &(st, from, to) in &self.moves {
            state.assignment[st as usize] = to;
            let (old, new) = (class_slot(from), class_slot(to));
            if old != new {
                for &c in self.net.classes_of(st) {
                    if let Some(o) = old {
                        self.counts[c as usize][o] -= 1;
                    }
                    if let Some(n) = new {
                        self.counts[c as usize][n] += 1;
                    }
                }
            }
            if let Some(slot) = transient_slot(to) {
                self.members[slot].push(st);
            }
        }
        state.day = day;
    }

    /// Run `n_days` days from `state` (already loaded), returning the
    /// trajectory including the starting row.
    pub fn run<R: Rng + ?Sized>(&mut self, state: &mut EpidemicState, n_days: u32, rng: &mut R) -> Trajectory {
        let mut rows = Vec::with_capacity(n_days as usize + 1);
        rows.push(state.counts());
        for _ in 0..n_days {
            let day = state.day() + 1;
            self.step(state, day, rng);
            rows.push(state.counts());
        }
        Trajectory {
            rows,
            tau_clamps: self.tau_clamps,
        }
    }
}

/// Place `cfg.n_initial` uniformly chosen students in I2, everyone else in S.
pub fn initialize<R: Rng + ?Sized>(net: &EnrollmentNetwork, cfg: &SimConfig, rng: &mut R) -> Result<EpidemicState> {
    let n = net.n_students();
    if cfg.n_initial > n {
        return Err(Error::arg(format!(
            "{} initial cases requested but the network has {n} students",
            cfg.n_initial
        )));
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    partial_shuffle(&mut order, cfg.n_initial, rng);
    let mut assignment = vec![Compartment::S; n];
    for &s in &order[..cfg.n_initial] {
        assignment[s as usize] = Compartment::I2;
    }
    Ok(EpidemicState::new(assignment))
}

/// One day of dynamics as a pure state transition. Equivalent to a
/// [`Simulator`] step; rebuilds the counters each call.
pub fn step_day<R: Rng + ?Sized>(
    state: &EpidemicState,
    day_index: u32,
    net: &EnrollmentNetwork,
    params: &EpidemicParams,
    rng: &mut R,
) -> Result<EpidemicState> {
    if day_index == 0 {
        return Err(Error::arg("day index must be at least 1"));
    }
    let mut sim = Simulator::new(net, *params)?;
    sim.load(state)?;
    let mut next = state.clone();
    sim.step(&mut next, day_index, rng);
    Ok(next)
}

/// Seed, then run `cfg.n_days` days. Deterministic in `(net, params, cfg)`.
pub fn run_simulation(net: &EnrollmentNetwork, params: &EpidemicParams, cfg: &SimConfig) -> Result<Trajectory> {
    if net.is_empty() {
        return Err(Error::arg("cannot simulate on an empty network"));
    }
    if cfg.n_initial == 0 {
        return Err(Error::arg("at least one initial case is required"));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut state = initialize(net, cfg, &mut rng)?;
    let mut sim = Simulator::new(net, *params)?;
    sim.load(&state)?;
    Ok(sim.run(&mut state, cfg.n_days, &mut rng))
}
