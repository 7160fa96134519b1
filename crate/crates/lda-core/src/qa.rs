//! Small-N transverse-field Ising dynamics: dense instantaneous spectra,
//! adiabatic ratios and time-dependent Schrödinger evolution with
//! piecewise-linear control schedules (forward ramps, reverse profiles and
//! bias gain).
//!
//! The time-dependent Hamiltonian is
//!
//!   H(t) = sum_{i<j} J_ij Z_i Z_j + b(t) sum_i h_i Z_i - Gamma(t) sum_i X_i
//!
//! in dimensionless units with hbar = 1. Basis states are indexed with site 0
//! as the least significant bit. Everything is dense, guarded at 16 sites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{SpinGlassInstance, SpinState};
use crate::samplers::SampleSet;

/// Largest site count for the dense representation.
pub const DENSE_GUARD: usize = 16;

/// Gaps below this are treated as degenerate by [`QaSystem::adiabatic_ratio`].
pub const GAP_TOLERANCE: f64 = 1e-10;

const NORM_TOLERANCE: f64 = 1e-9;

/// A piecewise-linear control schedule over the time fraction `t/T` in
/// `[0, 1]`: breakpoints are linearly interpolated, and the slope at a
/// breakpoint is the right-hand one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    points: Vec<(f64, f64)>,
}

impl ScheduleTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "a schedule needs at least two breakpoints".into(),
            ));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Error::InvalidParameter(
                "schedule breakpoints must start at time fraction 0 and end at 1".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParameter(
                    "schedule time fractions must be strictly increasing".into(),
                ));
            }
        }
        if points.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "schedule breakpoints must be finite".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Constant schedule.
    pub fn constant(value: f64) -> Self {
        Self {
            points: vec![(0.0, value), (1.0, value)],
        }
    }

    /// Single linear ramp from `start` to `end`.
    pub fn linear(start: f64, end: f64) -> Self {
        Self {
            points: vec![(0.0, start), (1.0, end)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Index of the segment whose half-open interval contains `f`; the final
    /// breakpoint maps onto the last segment.
    fn segment(&self, f: f64) -> usize {
        let idx = self.points.partition_point(|&(t, _)| t <= f);
        idx.clamp(1, self.points.len() - 1) - 1
    }

    /// Linearly interpolated value at time fraction `f` in `[0, 1]`.
    pub fn value_at(&self, f: f64) -> f64 {
        let p = self.segment(f);
        let (t0, v0) = self.points[p];
        let (t1, v1) = self.points[p + 1];
        v0 + (v1 - v0) * ((f - t0) / (t1 - t0))
    }

    /// Right-hand slope with respect to the time fraction.
    pub fn slope_at(&self, f: f64) -> f64 {
        let p = self.segment(f);
        let (t0, v0) = self.points[p];
        let (t1, v1) = self.points[p + 1];
        (v1 - v0) / (t1 - t0)
    }

    fn max_abs_value(&self) -> f64 {
        self.points.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()))
    }
}

/// K lowest eigenpairs of an instantaneous Hamiltonian, ascending, with
/// unit-norm eigenvectors whose largest-magnitude component is positive.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// A complex state vector over the `2^N` computational basis, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amps: Vec<Complex64>,
    n_sites: usize,
}

impl WaveFunction {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidParameter(
                "amplitude count must be a power of two >= 2".into(),
            ));
        }
        let n_sites = dim.trailing_zeros() as usize;
        let wf = Self { amps, n_sites };
        if (wf.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "state is not normalized: |psi| = {}",
                wf.norm()
            )));
        }
        Ok(wf)
    }

    /// The uniform superposition `|+>^N`.
    pub fn uniform(n_sites: usize) -> Result<Self> {
        check_guard(n_sites)?;
        let dim = 1usize << n_sites;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            amps: vec![amp; dim],
            n_sites,
        })
    }

    /// A computational basis state.
    pub fn basis(state: &SpinState) -> Result<Self> {
        check_guard(state.len())?;
        let dim = 1usize << state.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[state.to_index()] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amps,
            n_sites: state.len(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Born probability of one basis state.
    pub fn probability(&self, state: &SpinState) -> Result<f64> {
        if state.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                actual: state.len(),
            });
        }
        Ok(self.amps[state.to_index()].norm_sqr())
    }

    /// Squared overlap `|<self|other>|^2`.
    pub fn fidelity(&self, other: &WaveFunction) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let dot: Complex64 = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(dot.norm_sqr())
    }

    /// Squared overlap with a real vector (e.g. an instantaneous eigenstate).
    pub fn overlap_with_real(&self, vector: &[f64]) -> Result<f64> {
        if vector.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: vector.len(),
            });
        }
        let dot: Complex64 = self
            .amps
            .iter()
            .zip(vector.iter())
            .map(|(a, &b)| a.conj() * b)
            .sum();
        Ok(dot.norm_sqr())
    }
}

fn check_guard(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("zero-site system".into()));
    }
    if n_sites > DENSE_GUARD {
        return Err(Error::CapabilityExceeded {
            what: "dense quantum dynamics",
            limit: DENSE_GUARD,
            requested: n_sites,
        });
    }
    Ok(())
}

/// A transverse-field annealing system: problem instance, field schedule
/// `Gamma(t)`, optional bias-gain schedule `b(t)` and total evolution time.
#[derive(Debug, Clone)]
pub struct QaSystem {
    instance: SpinGlassInstance,
    gamma: ScheduleTable,
    hgain: Option<ScheduleTable>,
    total_time: f64,
}

impl QaSystem {
    pub fn new(
        instance: SpinGlassInstance,
        gamma: ScheduleTable,
        hgain: Option<ScheduleTable>,
        total_time: f64,
    ) -> Result<Self> {
        check_guard(instance.n_sites())?;
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::InvalidParameter(
                "total evolution time must be positive and finite".into(),
            ));
        }
        Ok(Self {
            instance,
            gamma,
            hgain,
            total_time,
        })
    }

    /// Forward anneal: linear ramp of the transverse field down to zero.
    pub fn forward(instance: SpinGlassInstance, gamma_start: f64, total_time: f64) -> Result<Self> {
        Self::new(
            instance,
            ScheduleTable::linear(gamma_start, 0.0),
            None,
            total_time,
        )
    }

    pub fn instance(&self) -> &SpinGlassInstance {
        &self.instance
    }

    pub fn n_sites(&self) -> usize {
        self.instance.n_sites()
    }

    pub fn dim(&self) -> usize {
        1 << self.instance.n_sites()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn gamma_schedule(&self) -> &ScheduleTable {
        &self.gamma
    }

    pub fn hgain_schedule(&self) -> Option<&ScheduleTable> {
        self.hgain.as_ref()
    }

    fn check_fraction(t_fraction: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t_fraction) {
            return Err(Error::InvalidParameter(format!(
                "time fraction {t_fraction} outside [0, 1]"
            )));
        }
        Ok(())
    }

    fn gamma_at(&self, f: f64) -> f64 {
        self.gamma.value_at(f)
    }

    fn hgain_at(&self, f: f64) -> f64 {
        self.hgain.as_ref().map_or(1.0, |s| s.value_at(f))
    }

    /// Classical diagonal split into coupling and bias parts, per basis state.
    fn classical_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut e_j = vec![0.0; dim];
        let mut e_h = vec![0.0; dim];
        for ((i, j), v) in self.instance.couplers() {
            for (x, e) in e_j.iter_mut().enumerate() {
                let aligned = ((x >> i) ^ (x >> j)) & 1 == 0;
                *e += if aligned { v } else { -v };
            }
        }
        for (i, v) in self.instance.biases() {
            for (x, e) in e_h.iter_mut().enumerate() {
                let up = (x >> i) & 1 == 1;
                *e += if up { v } else { -v };
            }
        }
        (e_j, e_h)
    }

    /// Dense instantaneous Hamiltonian at a time fraction: the diagonal holds
    /// the bias-gain-scaled classical energies, off-diagonal entries hold
    /// `-Gamma` between single-bit-flip neighbors. Exactly symmetric.
    pub fn hamiltonian_at(&self, t_fraction: f64) -> Result<DMatrix<f64>> {
        Self::check_fraction(t_fraction)?;
        let n = self.n_sites();
        let dim = self.dim();
        let gamma = self.gamma_at(t_fraction);
        let b = self.hgain_at(t_fraction);
        let (e_j, e_h) = self.classical_parts();
        let mut m = DMatrix::zeros(dim, dim);
        for x in 0..dim {
            m[(x, x)] = e_j[x] + b * e_h[x];
            for q in 0..n {
                m[(x, x ^ (1 << q))] = -gamma;
            }
        }
        Ok(m)
    }

    /// The `k` lowest instantaneous eigenpairs, ascending, with a
    /// deterministic sign convention (largest-magnitude component positive).
    pub fn spectrum(&self, t_fraction: f64, k: usize) -> Result<Spectrum> {
        let dim = self.dim();
        if k == 0 || k > dim {
            return Err(Error::InvalidParameter(format!(
                "requested {k} levels of a dimension-{dim} system"
            )));
        }
        let m = self.hamiltonian_at(t_fraction)?;
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let mut energies = Vec::with_capacity(k);
        let mut states = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            energies.push(eig.eigenvalues[idx]);
            let col = eig.eigenvectors.column(idx);
            let mut v: Vec<f64> = col.iter().copied().collect();
            let mut max_idx = 0;
            for (i, &a) in v.iter().enumerate() {
                if a.abs() > v[max_idx].abs() {
                    max_idx = i;
                }
            }
            if v[max_idx] < 0.0 {
                for a in &mut v {
                    *a = -*a;
                }
            }
            states.push(v);
        }
        Ok(Spectrum { energies, states })
    }

    /// Apply `dH/dt` to a real vector. Schedule derivatives are taken with
    /// respect to real time, i.e. breakpoint slopes divided by the total time.
    fn apply_dh_dt(&self, t_fraction: f64, e_h: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n_sites();
        let dgamma = self.gamma.slope_at(t_fraction) / self.total_time;
        let db = self
            .hgain
            .as_ref()
            .map_or(0.0, |s| s.slope_at(t_fraction) / self.total_time);
        let mut w = vec![0.0; v.len()];
        for (x, out) in w.iter_mut().enumerate() {
            let mut acc = db * e_h[x] * v[x];
            for q in 0..n {
                acc -= dgamma * v[x ^ (1 << q)];
            }
            *out = acc;
        }
        w
    }

    /// Adiabatic ratio `|<m| dH/dt |GS>| / |E_m - E_GS|^2` at a time
    /// fraction, for excited level `m >= 1`.
    pub fn adiabatic_ratio(&self, t_fraction: f64, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "adiabatic ratio needs an excited level m >= 1".into(),
            ));
        }
        let spectrum = self.spectrum(t_fraction, m + 1)?;
        let gap = spectrum.energies[m] - spectrum.energies[0];
        if gap.abs() <= GAP_TOLERANCE {
            return Err(Error::DegenerateGap { gap });
        }
        let (_, e_h) = self.classical_parts();
        let w = self.apply_dh_dt(t_fraction, &e_h, &spectrum.states[0]);
        let element: f64 = spectrum.states[m]
            .iter()
            .zip(w.iter())
            .map(|(&a, &b)| a * b)
            .sum();
        Ok(element.abs() / (gap * gap))
    }

    /// Default integration step count for [`evolve`](Self::evolve), scaled so
    /// that halving the step changes the final state only marginally.
    pub fn default_steps(&self) -> usize {
        let coupling_scale: f64 = self.instance.couplers().map(|(_, v)| v.abs()).sum();
        let bias_scale: f64 = self.instance.biases().map(|(_, v)| v.abs()).sum();
        let b_max = self.hgain.as_ref().map_or(1.0, |s| s.max_abs_value());
        let scale = 1.0 + self.gamma.max_abs_value() + coupling_scale + b_max * bias_scale;
        let steps = (self.total_time * scale * 20.0).ceil() as usize;
        steps.max(1000)
    }

    /// Integrate the time-dependent Schrödinger equation over `[0, T]` with a
    /// fixed-step second-order split (half diagonal phase, full transverse
    /// rotation, half diagonal phase, at midpoint schedule values). Every
    /// factor is unitary, so the norm is conserved to rounding.
    pub fn evolve(&self, initial: &WaveFunction, steps: usize) -> Result<WaveFunction> {
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "evolution needs at least one step".into(),
            ));
        }
        if initial.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: initial.dim(),
            });
        }
        if (initial.norm() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(
                "initial state is not normalized".into(),
            ));
        }
        let n = self.n_sites();
        let dim = self.dim();
        let (e_j, e_h) = self.classical_parts();
        let dt = self.total_time / steps as f64;
        let mut amps = initial.amps.clone();
        let mut diag_phase = vec![Complex64::new(1.0, 0.0); dim];
        for s in 0..steps {
            let f = ((s as f64 + 0.5) * dt / self.total_time).min(1.0);
            let gamma = self.gamma_at(f);
            let b = self.hgain_at(f);
            for (x, phase) in diag_phase.iter_mut().enumerate() {
                let e = e_j[x] + b * e_h[x];
                *phase = Complex64::from_polar(1.0, -e * dt / 2.0);
            }
            for (a, p) in amps.iter_mut().zip(diag_phase.iter()) {
                *a *= p;
            }
            // exp(+i Gamma dt X_q) on every qubit; the X terms commute.
            let theta = gamma * dt;
            let (c, sn) = (theta.cos(), theta.sin());
            for q in 0..n {
                let step = 1usize << q;
                let mut base = 0;
                while base < dim {
                    for x in base..base + step {
                        let y = x + step;
                        let px = amps[x];
                        let py = amps[y];
                        amps[x] = Complex64::new(
                            c * px.re - sn * py.im,
                            c * px.im + sn * py.re,
                        );
                        amps[y] = Complex64::new(
                            c * py.re - sn * px.im,
                            c * py.im + sn * px.re,
                        );
                    }
                    base += 2 * step;
                }
            }
            for (a, p) in amps.iter_mut().zip(diag_phase.iter()) {
                *a *= p;
            }
        }
        WaveFunction::from_amplitudes(amps)
    }
}

/// Draw `shots` bit strings from the Born distribution of `psi`, scored
/// under `instance`. Deterministic given the seed.
pub fn measure(
    instance: &SpinGlassInstance,
    psi: &WaveFunction,
    shots: usize,
    seed: u64,
) -> Result<SampleSet> {
    if instance.n_sites() != psi.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: psi.n_sites(),
            actual: instance.n_sites(),
        });
    }
    let mut cumulative = Vec::with_capacity(psi.dim());
    let mut total = 0.0;
    for a in psi.amplitudes() {
        total += a.norm_sqr();
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = psi.n_sites();
    let states = (0..shots)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let idx = cumulative.partition_point(|&c| c <= u).min(psi.dim() - 1);
            SpinState::from_index(n, idx)
        })
        .collect::<Vec<_>>();
    SampleSet::from_states(instance, states)
}
