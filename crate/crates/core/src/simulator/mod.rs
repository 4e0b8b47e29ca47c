//! Monte Carlo genealogies and the rejection-sampling harness for
//! conditioning events.

mod exact;
mod genealogy;
mod rng;

pub use exact::{enumerate_exact, ExactJoint, MAX_ENUMERATION_OFFSPRING, MAX_ENUMERATION_T};
pub use genealogy::{observables, observables_with, Genealogy, Node, TrajectoryObservables, NO_PARENT};
pub use rng::replicate_stream;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::ConditioningEvent;
use crate::models::Model;
use crate::schedule::Schedule;
use crate::stats::{wilson_interval, EmpiricalDist};

pub const DEFAULT_CAP: usize = 1_000_000;
/// Replicates per work unit. Fixed so that merge order never depends on the
/// thread count.
pub const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// One particle at time 0.
    Single,
    /// A random number of particles distributed as the offspring law.
    Offspring,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub t: f64,
    pub s_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub seed: u64,
    pub replicates: u64,
    pub cap: usize,
    pub event: ConditioningEvent,
    pub initial: InitialState,
}

impl SimConfig {
    pub fn new(t: f64, event: ConditioningEvent, replicates: u64, seed: u64) -> Self {
        SimConfig {
            t,
            s_grid: Vec::new(),
            x_grid: Vec::new(),
            seed,
            replicates,
            cap: DEFAULT_CAP,
            event,
            initial: InitialState::Single,
        }
    }

    pub fn with_s_grid(mut self, s_grid: Vec<f64>) -> Self {
        self.s_grid = s_grid;
        self
    }

    pub fn with_x_grid(mut self, x_grid: Vec<f64>) -> Self {
        self.x_grid = x_grid;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::Precondition(format!("horizon t = {} must be positive", self.t)));
        }
        if let Some(s) = self.s_grid.iter().find(|s| !(0.0..=self.t).contains(*s)) {
            return Err(Error::Precondition(format!("s = {s} outside [0, {}]", self.t)));
        }
        if let Some(x) = self.x_grid.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Precondition(format!("x = {x} must be finite and nonnegative")));
        }
        if self.replicates == 0 || self.cap == 0 {
            return Err(Error::Precondition("replicates and cap must be positive".into()));
        }
        self.event.validate()
    }

    fn x_max(&self) -> f64 {
        self.x_grid.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptedRecord {
    pub replicate: u64,
    pub observables: TrajectoryObservables,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedSample {
    pub config: SimConfig,
    /// Resolved acceptance bound on `Z(t)`, if any.
    pub max_population: Option<u64>,
    pub n_total: u64,
    pub n_accepted: u64,
    /// Replicates that hit the node cap; never counted as accepted.
    pub n_capped: u64,
    pub records: Vec<AcceptedRecord>,
}

impl ConditionedSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.n_accepted as f64 / self.n_total as f64
    }

    pub fn acceptance_interval(&self, confidence: f64) -> Result<(f64, f64)> {
        wilson_interval(self.n_accepted, self.n_total, confidence)
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.n_accepted == 0 {
            Err(Error::EmptySample(format!(
                "0 of {} replicates satisfied {} at t = {}",
                self.n_total, self.config.event, self.config.t
            )))
        } else {
            Ok(())
        }
    }

    pub fn population_dist(&self) -> EmpiricalDist {
        EmpiricalDist::from_values(self.records.iter().map(|r| r.observables.z_t))
    }

    /// Law of `Z(s, t)` for the `index`-th queried `s`.
    pub fn reduced_dist(&self, index: usize) -> EmpiricalDist {
        EmpiricalDist::from_values(self.records.iter().map(|r| r.observables.z_reduced[index]))
    }

    pub fn mrca_depths(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.observables.d).collect()
    }
}

#[derive(Default)]
struct Scratch {
    genealogy: Genealogy,
    marks: Vec<bool>,
}

/// Runs `step` over all replicates in fixed chunks on the current rayon
/// pool and returns the chunk accumulators in replicate order.
fn par_chunks<A, I, F>(replicates: u64, init: I, step: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut Scratch, &mut A, u64) + Sync,
{
    let n_chunks = replicates.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, c| {
            let mut acc = init();
            for i in c * CHUNK..((c + 1) * CHUNK).min(replicates) {
                step(scratch, &mut acc, i);
            }
            acc
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send, F: FnOnce() -> T + Send>(jobs: Option<usize>, f: F) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn initial_count<R: Rng + ?Sized>(model: &Model, initial: InitialState, rng: &mut R) -> usize {
    match initial {
        InitialState::Single => 1,
        InitialState::Offspring => model.offspring.sample(rng) as usize,
    }
}

/// Genealogy of one initial particle up to `t_extended`.
pub fn simulate_tree<R: Rng + ?Sized>(model: &Model, t_extended: f64, rng: &mut R) -> Genealogy {
    let mut g = Genealogy::new();
    g.grow(model, 1, t_extended, DEFAULT_CAP, rng);
    g
}

/// The process started from a random number of particles distributed as
/// the offspring law.
pub fn simulate_y<R: Rng + ?Sized>(model: &Model, t: f64, rng: &mut R) -> Genealogy {
    let roots = initial_count(model, InitialState::Offspring, rng);
    let mut g = Genealogy::new();
    g.grow(model, roots, t, DEFAULT_CAP, rng);
    g
}

#[derive(Default)]
struct RunAcc {
    capped: u64,
    records: Vec<AcceptedRecord>,
}

/// Rejection sampling: simulates every replicate to `t`, keeps observables
/// for those whose `Z(t)` satisfies the event.
pub fn run_conditioned(model: &Model, config: &SimConfig) -> Result<ConditionedSample> {
    config.validate()?;
    let max_population = config.event.max_population(model.b(), config.t);
    let t = config.t;
    let x_max = config.x_max();
    let chunks = par_chunks(config.replicates, RunAcc::default, |scratch, acc, i| {
        let mut rng = replicate_stream(config.seed, i);
        let roots = initial_count(model, config.initial, &mut rng);
        let g = &mut scratch.genealogy;
        g.grow(model, roots, t, config.cap, &mut rng);
        if g.capped() {
            acc.capped += 1;
            return;
        }
        if !config.event.accepts(g.population_at_horizon(), max_population) {
            return;
        }
        if x_max > 0.0 {
            g.extend(model, t + x_max, config.cap, &mut rng);
            if g.capped() {
                acc.capped += 1;
                return;
            }
        }
        let observables = observables_with(g, t, &config.s_grid, &config.x_grid, &mut scratch.marks);
        acc.records.push(AcceptedRecord { replicate: i, observables });
    });
    let mut n_capped = 0;
    let mut records = Vec::new();
    for chunk in chunks {
        n_capped += chunk.capped;
        records.extend(chunk.records);
    }
    Ok(ConditionedSample {
        config: config.clone(),
        max_population,
        n_total: config.replicates,
        n_accepted: records.len() as u64,
        n_capped,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRate {
    pub t: f64,
    /// `t - y phi(t)`
    pub s: f64,
    /// `eps phi(t)`
    pub threshold: f64,
    pub replicates: u64,
    /// Replicates where some particle present at `s` outlives `s + eps phi(t)`.
    pub complement: u64,
    /// Replicates in `H(t)`.
    pub event_count: u64,
    pub n_capped: u64,
    /// `complement / event_count`, when the event was seen.
    pub ratio: Option<f64>,
}

/// Empirical `P(max residual lifetime at t - y phi(t) > eps phi(t)) / P(H(t))`.
pub fn residual_event_rate(
    model: &Model,
    t: f64,
    y: f64,
    epsilon: f64,
    phi: Schedule,
    replicates: u64,
    seed: u64,
) -> Result<ResidualRate> {
    let p = phi.eval(t);
    let s = t - y * p;
    if !(y > 0.0 && s > 0.0) {
        return Err(Error::Precondition(format!("need 0 < y phi(t) < t, got y phi(t) = {}", y * p)));
    }
    let event = ConditioningEvent::SmallPopulation { phi };
    event.validate()?;
    let threshold = epsilon * p;
    let max_population = event.max_population(model.b(), t);
    let chunks = par_chunks(replicates, || (0u64, 0u64, 0u64), |scratch, acc, i| {
        let mut rng = replicate_stream(seed, i);
        let g = &mut scratch.genealogy;
        g.grow(model, 1, t, DEFAULT_CAP, &mut rng);
        if g.capped() {
            acc.2 += 1;
            return;
        }
        if g.max_residual(s).is_some_and(|r| r > threshold) {
            acc.0 += 1;
        }
        if event.accepts(g.population_at_horizon(), max_population) {
            acc.1 += 1;
        }
    });
    let (complement, event_count, n_capped) =
        chunks.into_iter().fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    Ok(ResidualRate {
        t,
        s,
        threshold,
        replicates,
        complement,
        event_count,
        n_capped,
        ratio: (event_count > 0).then(|| complement as f64 / event_count as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivorRate {
    pub t: f64,
    pub x: f64,
    pub replicates: u64,
    /// Replicates with `Z*(t, x) > 0`.
    pub positive: u64,
    /// Replicates with `Z(t) > 0`.
    pub survived: u64,
    pub n_capped: u64,
    pub ratio: Option<f64>,
}

/// Empirical `P(Z*(t, x) > 0) / P(Z(t) > 0)`.
pub fn survivor_event_rate(model: &Model, t: f64, x: f64, replicates: u64, seed: u64) -> Result<SurvivorRate> {
    if !(t > 0.0 && x >= 0.0) {
        return Err(Error::Precondition(format!("need t > 0 and x >= 0, got t = {t}, x = {x}")));
    }
    let chunks = par_chunks(replicates, || (0u64, 0u64, 0u64), |scratch, acc, i| {
        let mut rng = replicate_stream(seed, i);
        let g = &mut scratch.genealogy;
        g.grow(model, 1, t, DEFAULT_CAP, &mut rng);
        if g.capped() {
            acc.2 += 1;
            return;
        }
        if g.population_at_horizon() == 0 {
            return;
        }
        acc.1 += 1;
        // survivors are particles already present at t; no need to grow further
        if g.survivors(t, x) > 0 {
            acc.0 += 1;
        }
    });
    let (positive, survived, n_capped) = chunks.into_iter().fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    Ok(SurvivorRate {
        t,
        x,
        replicates,
        positive,
        survived,
        n_capped,
        ratio: (survived > 0).then(|| positive as f64 / survived as f64),
    })
}
