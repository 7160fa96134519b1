//! Low-energy-state generators consumed by the search protocols: simulated
//! annealing, steepest single-flip descent and exhaustive enumeration, plus
//! the sampler abstraction that lets protocols run over any of them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{SpinGlassInstance, SpinState};
use crate::qa::{QaSystem, ScheduleTable, WaveFunction};

/// Largest site count accepted by exhaustive enumeration.
pub const ENUMERATION_GUARD: usize = 26;

/// Energies within this distance of the running minimum count as degenerate
/// ground states during enumeration.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// One sampled configuration with its energy under the designated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: SpinState,
    pub energy: f64,
}

/// An energy-sorted collection of sampled states.
///
/// Entries are ascending by energy with lexicographic bit-string tie-break;
/// ties on both keys keep their insertion (chain) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    entries: Vec<Sample>,
}

impl SampleSet {
    /// Score `states` under `instance` and sort.
    pub fn from_states(
        instance: &SpinGlassInstance,
        states: impl IntoIterator<Item = SpinState>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for state in states {
            let energy = instance.energy(&state)?;
            entries.push(Sample { state, energy });
        }
        entries.sort_by(compare_samples);
        Ok(Self { entries })
    }

    /// Wrap entries that are already sorted (selection output, enumeration).
    pub(crate) fn from_sorted_entries(entries: Vec<Sample>) -> Self {
        debug_assert!(entries
            .windows(2)
            .all(|w| compare_samples(&w[0], &w[1]) != Ordering::Greater));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&Sample> {
        self.entries.get(k)
    }

    /// Lowest-energy sample.
    pub fn best(&self) -> Option<&Sample> {
        self.entries.first()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.entries.iter()
    }

    pub fn states(&self) -> impl Iterator<Item = &SpinState> {
        self.entries.iter().map(|s| &s.state)
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|s| s.energy)
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

fn compare_samples(a: &Sample, b: &Sample) -> Ordering {
    a.energy
        .partial_cmp(&b.energy)
        .expect("sample energies are finite")
        .then_with(|| a.state.cmp_bit_string(&b.state))
}

/// Inverse-temperature schedule shape for simulated annealing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SaSchedule {
    Geometric,
    Linear,
}

/// Simulated-annealing configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaConfig {
    /// Full-lattice sweeps per chain.
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub schedule: SaSchedule,
    /// Independent Metropolis chains; one final state is returned per chain.
    pub chains: usize,
    pub seed: u64,
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidParameter("chains must be positive".into()));
        }
        if !self.beta_start.is_finite() || !self.beta_end.is_finite() {
            return Err(Error::InvalidParameter("beta range must be finite".into()));
        }
        match self.schedule {
            SaSchedule::Geometric => {
                if self.beta_start <= 0.0 || self.beta_end <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "geometric beta schedule requires beta_start, beta_end > 0".into(),
                    ));
                }
            }
            SaSchedule::Linear => {
                if self.beta_start < 0.0 || self.beta_end < 0.0 {
                    return Err(Error::InvalidParameter(
                        "linear beta schedule requires non-negative betas".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Inverse temperature per sweep; updated once per sweep.
    fn beta_schedule(&self) -> Vec<f64> {
        let s = self.sweeps;
        if s == 0 {
            return Vec::new();
        }
        if s == 1 {
            return vec![self.beta_start];
        }
        (0..s)
            .map(|k| {
                let f = k as f64 / (s - 1) as f64;
                match self.schedule {
                    SaSchedule::Geometric => {
                        self.beta_start * (self.beta_end / self.beta_start).powf(f)
                    }
                    SaSchedule::Linear => self.beta_start + (self.beta_end - self.beta_start) * f,
                }
            })
            .collect()
    }
}

/// Run independent Metropolis chains and return one final state per chain.
///
/// A sweep proposes every site once in fixed index order with acceptance
/// probability `min(1, exp(-beta * dE))`. Chain `c` draws from the ChaCha
/// stream `(seed, c)`, so parallel and serial execution produce identical
/// output and a fixed seed reproduces the sample set exactly.
pub fn sa_sample(
    instance: &SpinGlassInstance,
    config: &SaConfig,
    initial: Option<&SpinState>,
) -> Result<SampleSet> {
    config.validate()?;
    let n = instance.n_sites();
    if let Some(s) = initial {
        if s.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.len(),
            });
        }
    }
    let adjacency = instance.adjacency();
    let betas = config.beta_schedule();
    let mut finals = Vec::with_capacity(config.chains);
    for chain in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64);
        let state = match initial {
            Some(s) => s.clone(),
            None => SpinState::random(n, &mut rng),
        };
        let mut spins: Vec<i8> = state.spins().to_vec();
        let mut fields = instance.local_fields(&state)?;
        for &beta in &betas {
            for k in 0..n {
                let delta = -2.0 * f64::from(spins[k]) * fields[k];
                let accept = delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp();
                if accept {
                    spins[k] = -spins[k];
                    let s_new = f64::from(spins[k]);
                    for &(j, w) in &adjacency[k] {
                        fields[j] += 2.0 * w * s_new;
                    }
                }
            }
        }
        finals.push(SpinState::from_spins(spins).expect("spins stay in {-1,+1}"));
    }
    SampleSet::from_states(instance, finals)
}

/// Steepest single-flip descent, optionally with a full-inversion move.
///
/// Repeats the move with the largest strict energy decrease until none
/// exists; the result is a strict local minimum at single-flip radius. Ties
/// pick the lowest site index, and a site flip wins over inversion.
pub fn greedy_descent(
    instance: &SpinGlassInstance,
    initial: &SpinState,
    allow_inversion: bool,
) -> Result<SpinState> {
    let n = instance.n_sites();
    let mut current = initial.clone();
    // Fields are recomputed from scratch each round, so the termination test
    // agrees exactly with check_local_minimum.
    let round_cap = 100 * n + 10_000;
    for _ in 0..round_cap {
        let fields = instance.local_fields(&current)?;
        let spins = current.spins();
        let mut best: Option<(Move, f64)> = None;
        for k in 0..n {
            let delta = -2.0 * f64::from(spins[k]) * fields[k];
            if delta < 0.0 && best.map_or(true, |(_, d)| delta < d) {
                best = Some((Move::Flip(k), delta));
            }
        }
        if allow_inversion {
            let bias_sum: f64 = instance.biases().map(|(i, v)| v * f64::from(spins[i])).sum();
            let delta = -2.0 * bias_sum;
            if delta < 0.0 && best.map_or(true, |(_, d)| delta < d) {
                best = Some((Move::Invert, delta));
            }
        }
        match best {
            Some((Move::Flip(k), _)) => current = current.flipped(k),
            Some((Move::Invert, _)) => current = current.inverted(),
            None => return Ok(current),
        }
    }
    Ok(current)
}

#[derive(Clone, Copy)]
enum Move {
    Flip(usize),
    Invert,
}

/// Result of exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    /// The `k` lowest-energy states, exact.
    pub samples: SampleSet,
    /// Number of states within [`DEGENERACY_TOLERANCE`] of the minimum.
    pub ground_degeneracy: usize,
}

/// Max-heap entry ordered worst-first: higher energy, then lexicographically
/// larger bit string (equal to numeric order of the basis index).
struct HeapEntry {
    energy: f64,
    code: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.energy == other.energy && self.code == other.code
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy
            .partial_cmp(&other.energy)
            .expect("energies are finite")
            .then_with(|| self.code.cmp(&other.code))
    }
}

/// Enumerate all `2^N` configurations and return the `k` lowest-energy
/// states together with the ground-state degeneracy count.
///
/// The walk follows a Gray code with incremental energy updates; the
/// returned energies are recomputed from scratch so they match
/// [`SpinGlassInstance::energy`] exactly.
pub fn exact_enumerate(instance: &SpinGlassInstance, k: usize) -> Result<Enumeration> {
    let n = instance.n_sites();
    if n > ENUMERATION_GUARD {
        return Err(Error::CapabilityExceeded {
            what: "exhaustive enumeration",
            limit: ENUMERATION_GUARD,
            requested: n,
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter(
            "enumeration needs k >= 1 states".into(),
        ));
    }
    let total: usize = 1 << n;
    let k = k.min(total);
    let adjacency = instance.adjacency();

    let mut state = SpinState::all_down(n);
    let mut spins: Vec<i8> = state.spins().to_vec();
    let mut fields = instance.local_fields(&state)?;
    let mut energy = instance.energy(&state)?;

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
    let mut min_energy = energy;
    let mut degeneracy = 1usize;
    heap.push(HeapEntry { energy, code: 0 });

    let mut code = 0usize; // Gray code of the current configuration
    for t in 1..total {
        let bit = t.trailing_zeros() as usize;
        code ^= 1 << bit;
        energy += -2.0 * f64::from(spins[bit]) * fields[bit];
        spins[bit] = -spins[bit];
        let s_new = f64::from(spins[bit]);
        for &(j, w) in &adjacency[bit] {
            fields[j] += 2.0 * w * s_new;
        }

        if energy < min_energy - DEGENERACY_TOLERANCE {
            min_energy = energy;
            degeneracy = 1;
        } else if energy <= min_energy + DEGENERACY_TOLERANCE {
            min_energy = min_energy.min(energy);
            degeneracy += 1;
        }

        if heap.len() < k {
            heap.push(HeapEntry { energy, code });
        } else if let Some(worst) = heap.peek() {
            if (HeapEntry { energy, code }) < *worst {
                heap.pop();
                heap.push(HeapEntry { energy, code });
            }
        }
    }
    // touch the final state so the walk invariant is checkable in debug builds
    state = SpinState::from_index(n, code);
    debug_assert_eq!(state.spins(), spins.as_slice());

    let mut selected: Vec<usize> = heap.into_iter().map(|e| e.code).collect();
    selected.sort_unstable();
    let mut entries: Vec<Sample> = Vec::with_capacity(selected.len());
    for code in selected {
        let state = SpinState::from_index(n, code);
        let energy = instance.energy(&state)?;
        entries.push(Sample { state, energy });
    }
    entries.sort_by(compare_samples);
    Ok(Enumeration {
        samples: SampleSet::from_sorted_entries(entries),
        ground_degeneracy: degeneracy,
    })
}

/// Per-call budget hint passed from protocol parameters to samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerBudget {
    /// Use the sampler's own configuration.
    SamplerDefault,
    /// Sweeps per chain for sweep-based samplers.
    Sweeps(u64),
    /// Total evolution time for the dynamics sampler.
    AnnealingTime(f64),
}

/// A low-energy-state generator the protocols can call repeatedly.
///
/// Implementations must be deterministic: the same construction arguments and
/// the same call sequence produce the same sample sets.
pub trait Sampler {
    /// Draw `n_samples` states from `instance`. `initial` is a hint for
    /// samplers that evolve a configuration; others ignore it.
    fn sample(
        &mut self,
        instance: &SpinGlassInstance,
        n_samples: usize,
        initial: Option<&SpinState>,
        budget: &SamplerBudget,
    ) -> Result<SampleSet>;

    /// Budget units one call consumes: chain-sweeps for SA, enumerated states
    /// for exhaustive search, integration steps for the dynamics sampler.
    fn cost(&self, n_samples: usize, n_sites: usize, budget: &SamplerBudget) -> u64;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Simulated-annealing sampler; each call runs `n_samples` chains with a
/// fresh seed derived from `(base seed, call index)`.
#[derive(Debug, Clone)]
pub struct SaSampler {
    base: SaConfig,
    calls: u64,
}

impl SaSampler {
    pub fn new(base: SaConfig) -> Self {
        Self { base, calls: 0 }
    }

    fn effective_sweeps(&self, budget: &SamplerBudget) -> usize {
        match budget {
            SamplerBudget::Sweeps(s) => *s as usize,
            _ => self.base.sweeps,
        }
    }
}

impl Sampler for SaSampler {
    fn sample(
        &mut self,
        instance: &SpinGlassInstance,
        n_samples: usize,
        initial: Option<&SpinState>,
        budget: &SamplerBudget,
    ) -> Result<SampleSet> {
        let config = SaConfig {
            sweeps: self.effective_sweeps(budget),
            chains: n_samples,
            seed: splitmix64(self.base.seed ^ self.calls),
            ..self.base
        };
        self.calls += 1;
        sa_sample(instance, &config, initial)
    }

    fn cost(&self, n_samples: usize, _n_sites: usize, budget: &SamplerBudget) -> u64 {
        self.effective_sweeps(budget) as u64 * n_samples as u64
    }
}

/// Exhaustive-enumeration sampler: returns the `n_samples` lowest states.
#[derive(Debug, Clone, Default)]
pub struct ExactSampler;

impl Sampler for ExactSampler {
    fn sample(
        &mut self,
        instance: &SpinGlassInstance,
        n_samples: usize,
        _initial: Option<&SpinState>,
        _budget: &SamplerBudget,
    ) -> Result<SampleSet> {
        Ok(exact_enumerate(instance, n_samples)?.samples)
    }

    fn cost(&self, _n_samples: usize, n_sites: usize, _budget: &SamplerBudget) -> u64 {
        1u64 << n_sites.min(63)
    }
}

/// Quantum-dynamics sampler: forward anneal from the uniform superposition
/// under a linear transverse-field ramp, then Born-rule measurement.
#[derive(Debug, Clone)]
pub struct QaSampler {
    /// Total evolution time (dimensionless).
    pub anneal_time: f64,
    /// Initial transverse-field strength; `None` scales to `10 * max |term|`.
    pub gamma_start: Option<f64>,
    /// Integration steps; `None` picks the system default.
    pub steps: Option<usize>,
    seed: u64,
    calls: u64,
}

impl QaSampler {
    pub fn new(anneal_time: f64, seed: u64) -> Self {
        Self {
            anneal_time,
            gamma_start: None,
            steps: None,
            seed,
            calls: 0,
        }
    }

    fn system(&self, instance: &SpinGlassInstance, budget: &SamplerBudget) -> Result<QaSystem> {
        let total_time = match budget {
            SamplerBudget::AnnealingTime(t) => *t,
            _ => self.anneal_time,
        };
        let gamma0 = self
            .gamma_start
            .unwrap_or_else(|| (10.0 * instance.max_abs_term()).max(2.0));
        QaSystem::new(
            instance.clone(),
            ScheduleTable::linear(gamma0, 0.0),
            None,
            total_time,
        )
    }
}

impl Sampler for QaSampler {
    fn sample(
        &mut self,
        instance: &SpinGlassInstance,
        n_samples: usize,
        _initial: Option<&SpinState>,
        budget: &SamplerBudget,
    ) -> Result<SampleSet> {
        let system = self.system(instance, budget)?;
        let steps = self.steps.unwrap_or_else(|| system.default_steps());
        let initial = WaveFunction::uniform(instance.n_sites())?;
        let final_state = system.evolve(&initial, steps)?;
        let seed = splitmix64(self.seed ^ self.calls);
        self.calls += 1;
        crate::qa::measure(instance, &final_state, n_samples, seed)
    }

    fn cost(&self, _n_samples: usize, n_sites: usize, budget: &SamplerBudget) -> u64 {
        match self.system(&dummy_instance(n_sites), budget) {
            Ok(system) => self.steps.unwrap_or_else(|| system.default_steps()) as u64,
            Err(_) => 0,
        }
    }
}

fn dummy_instance(n_sites: usize) -> SpinGlassInstance {
    SpinGlassInstance::empty(n_sites.max(1)).expect("positive site count")
}
