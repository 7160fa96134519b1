//! Core Ising data model: instances, spin configurations, energies,
//! satisfied term sets and the two distance measures used by the search
//! protocols.
//!
//! An instance stores sparse couplers `J_ij` (ordered pairs `i < j`) and
//! on-site biases `h_i`. The energy of a configuration `s` over `{-1, +1}`
//! is
//!
//!   E(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i
//!
//! All types are immutable after construction and every operation is a pure
//! function, so values can be shared freely across worker threads.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A sparse Ising spin-glass instance.
///
/// Couplers are keyed by ordered pairs `(i, j)` with `i < j`; biases by site
/// index. A stored zero is permitted and is equivalent to an absent term for
/// every operation. Energy sums always run in ascending key order (couplers
/// first, then biases) so results are bit-reproducible across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGlassInstance {
    n_sites: usize,
    couplers: BTreeMap<(usize, usize), f64>,
    biases: BTreeMap<usize, f64>,
}

impl SpinGlassInstance {
    /// Build an instance from term lists, validating index ranges, key
    /// uniqueness and value finiteness.
    pub fn new(
        n_sites: usize,
        couplers: impl IntoIterator<Item = ((usize, usize), f64)>,
        biases: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter(
                "an instance needs at least one site".into(),
            ));
        }
        let mut cmap = BTreeMap::new();
        for ((i, j), v) in couplers {
            if i >= j || j >= n_sites {
                return Err(Error::InvalidParameter(format!(
                    "coupler key ({i}, {j}) must satisfy i < j < {n_sites}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "coupler ({i}, {j}) has non-finite strength {v}"
                )));
            }
            if cmap.insert((i, j), v).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate coupler key ({i}, {j})"
                )));
            }
        }
        let mut hmap = BTreeMap::new();
        for (i, v) in biases {
            if i >= n_sites {
                return Err(Error::InvalidParameter(format!(
                    "bias key {i} must be below {n_sites}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bias {i} has non-finite strength {v}"
                )));
            }
            if hmap.insert(i, v).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate bias key {i}")));
            }
        }
        Ok(Self {
            n_sites,
            couplers: cmap,
            biases: hmap,
        })
    }

    /// Instance with no terms at all.
    pub fn empty(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, [], [])
    }

    /// Construct from maps whose keys are already known to be valid.
    pub(crate) fn from_maps(
        n_sites: usize,
        couplers: BTreeMap<(usize, usize), f64>,
        biases: BTreeMap<usize, f64>,
    ) -> Self {
        debug_assert!(couplers.keys().all(|&(i, j)| i < j && j < n_sites));
        debug_assert!(biases.keys().all(|&i| i < n_sites));
        Self {
            n_sites,
            couplers,
            biases,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Coupler strength on `(i, j)`, zero when absent. The key order does not
    /// matter; `i == j` is always zero.
    pub fn coupler(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.couplers.get(&key).copied().unwrap_or(0.0)
    }

    /// Bias strength on site `i`, zero when absent.
    pub fn bias(&self, i: usize) -> f64 {
        self.biases.get(&i).copied().unwrap_or(0.0)
    }

    /// Couplers in ascending key order.
    pub fn couplers(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplers.iter().map(|(&k, &v)| (k, v))
    }

    /// Biases in ascending key order.
    pub fn biases(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.biases.iter().map(|(&k, &v)| (k, v))
    }

    pub fn n_couplers(&self) -> usize {
        self.couplers.len()
    }

    pub fn n_biases(&self) -> usize {
        self.biases.len()
    }

    /// Largest absolute term strength over all couplers and biases.
    pub fn max_abs_term(&self) -> f64 {
        let c = self.couplers.values().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = self.biases.values().fold(0.0f64, |m, v| m.max(v.abs()));
        c.max(h)
    }

    /// Term-by-term equality treating absent terms as zero, so instances that
    /// differ only in explicitly stored zeros compare equal.
    pub fn terms_equal(&self, other: &Self) -> bool {
        if self.n_sites != other.n_sites {
            return false;
        }
        let coupler_keys: BTreeSet<_> = self
            .couplers
            .keys()
            .chain(other.couplers.keys())
            .copied()
            .collect();
        if !coupler_keys
            .iter()
            .all(|&(i, j)| self.coupler(i, j) == other.coupler(i, j))
        {
            return false;
        }
        let bias_keys: BTreeSet<_> = self
            .biases
            .keys()
            .chain(other.biases.keys())
            .copied()
            .collect();
        bias_keys.iter().all(|&i| self.bias(i) == other.bias(i))
    }

    /// Neighbor lists `(j, J_ij)` per site, for samplers that maintain local
    /// fields incrementally.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_sites];
        for (&(i, j), &v) in &self.couplers {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    fn check_len(&self, state: &SpinState) -> Result<()> {
        if state.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                actual: state.len(),
            });
        }
        Ok(())
    }

    /// Energy of `state`, summed in ascending key order (couplers first, then
    /// biases) with a single accumulator.
    pub fn energy(&self, state: &SpinState) -> Result<f64> {
        self.check_len(state)?;
        let s = state.spins();
        let mut e = 0.0;
        for (&(i, j), &v) in &self.couplers {
            e += v * f64::from(s[i] * s[j]);
        }
        for (&i, &v) in &self.biases {
            e += v * f64::from(s[i]);
        }
        Ok(e)
    }

    /// The sets of couplers and biases satisfied by `state`: terms whose
    /// energy contribution is strictly negative. Zero-valued terms are never
    /// satisfied.
    pub fn satisfied_sets(&self, state: &SpinState) -> Result<SatisfiedSets> {
        self.check_len(state)?;
        let s = state.spins();
        let couplers = self
            .couplers
            .iter()
            .filter(|&(&(i, j), &v)| v * f64::from(s[i] * s[j]) < 0.0)
            .map(|(&k, _)| k)
            .collect();
        let biases = self
            .biases
            .iter()
            .filter(|&(&i, &v)| v * f64::from(s[i]) < 0.0)
            .map(|(&k, _)| k)
            .collect();
        Ok(SatisfiedSets { couplers, biases })
    }

    /// Asymmetric similarity of `other` to `reference`: the `|J|, |h|`
    /// weighted fraction of the reference's satisfied terms that `other`
    /// satisfies with the same spin values. Returns exactly 1 when the
    /// reference satisfies no terms at all.
    pub fn feature_similarity(&self, reference: &SpinState, other: &SpinState) -> Result<f64> {
        SimilarityReference::new(self, reference)?.score(other)
    }

    /// Local fields `h_i + sum_j J_ij s_j` for every site.
    pub fn local_fields(&self, state: &SpinState) -> Result<Vec<f64>> {
        self.check_len(state)?;
        let s = state.spins();
        let mut fields = vec![0.0; self.n_sites];
        for (&i, &v) in &self.biases {
            fields[i] = v;
        }
        for (&(i, j), &v) in &self.couplers {
            fields[i] += v * f64::from(s[j]);
            fields[j] += v * f64::from(s[i]);
        }
        Ok(fields)
    }

    /// Classify `state` at single-flip radius: strict means every single-spin
    /// flip raises the energy, degenerate means some flip leaves it exactly
    /// unchanged.
    pub fn check_local_minimum(&self, state: &SpinState) -> Result<MinimumCheck> {
        let fields = self.local_fields(state)?;
        let s = state.spins();
        let mut strict = true;
        let mut degenerate = false;
        for (k, &f) in fields.iter().enumerate() {
            let delta = -2.0 * f64::from(s[k]) * f;
            if delta <= 0.0 {
                strict = false;
            }
            if delta == 0.0 {
                degenerate = true;
            }
        }
        Ok(MinimumCheck { strict, degenerate })
    }

    /// Gauge transform `h_i -> h_i r_i`, `J_ij -> J_ij r_i r_j`. Applying the
    /// same gauge twice restores the original terms exactly.
    pub fn spin_reversal(&self, gauge: &SpinState) -> Result<SpinGlassInstance> {
        self.check_len(gauge)?;
        let r = gauge.spins();
        let couplers = self
            .couplers
            .iter()
            .map(|(&(i, j), &v)| ((i, j), v * f64::from(r[i] * r[j])))
            .collect();
        let biases = self
            .biases
            .iter()
            .map(|(&i, &v)| (i, v * f64::from(r[i])))
            .collect();
        Ok(Self::from_maps(self.n_sites, couplers, biases))
    }
}

/// Outcome of the single-flip minimum test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimumCheck {
    /// Every single-spin flip strictly increases the energy.
    pub strict: bool,
    /// Some single-spin flip leaves the energy exactly unchanged.
    pub degenerate: bool,
}

/// Couplers and biases satisfied by a particular state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SatisfiedSets {
    pub couplers: BTreeSet<(usize, usize)>,
    pub biases: BTreeSet<usize>,
}

impl SatisfiedSets {
    pub fn is_empty(&self) -> bool {
        self.couplers.is_empty() && self.biases.is_empty()
    }
}

/// A configuration of `n` spins over `{-1, +1}`.
///
/// The bit-string form uses `a_i = (1 + s_i) / 2` and is written with the
/// highest site index first, matching the usual binary rendering where site 0
/// is the least significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinState {
    spins: Vec<i8>,
}

impl SpinState {
    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidParameter("empty spin state".into()));
        }
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "spin value {bad} is not +1 or -1"
            )));
        }
        Ok(Self { spins })
    }

    /// All spins up (+1).
    pub fn all_up(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    /// All spins down (-1).
    pub fn all_down(n: usize) -> Self {
        Self { spins: vec![-1; n] }
    }

    /// From bits `a_i` in site order (index 0 first).
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {bad}")));
        }
        Self::from_spins(bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect())
    }

    /// Parse the rendering produced by [`bit_string`](Self::bit_string):
    /// highest site index first.
    pub fn from_bit_string(s: &str) -> Result<Self> {
        let mut spins = Vec::with_capacity(s.len());
        for c in s.chars().rev() {
            match c {
                '0' => spins.push(-1),
                '1' => spins.push(1),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "invalid bit character {c:?}"
                    )))
                }
            }
        }
        Self::from_spins(spins)
    }

    /// Uniformly random state.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            spins: (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, i: usize) -> i8 {
        self.spins[i]
    }

    /// Bit `a_i = (1 + s_i) / 2`.
    pub fn bit(&self, i: usize) -> u8 {
        u8::from(self.spins[i] == 1)
    }

    /// Bit string with the highest site index first.
    pub fn bit_string(&self) -> String {
        self.spins
            .iter()
            .rev()
            .map(|&s| if s == 1 { '1' } else { '0' })
            .collect()
    }

    /// Copy with one spin flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut spins = self.spins.clone();
        spins[i] = -spins[i];
        Self { spins }
    }

    /// Copy with every spin flipped.
    pub fn inverted(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    /// Apply a gauge: `s_i -> s_i r_i`.
    pub fn gauged(&self, gauge: &SpinState) -> Result<Self> {
        if gauge.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: gauge.len(),
            });
        }
        Ok(Self {
            spins: self
                .spins
                .iter()
                .zip(gauge.spins.iter())
                .map(|(&s, &r)| s * r)
                .collect(),
        })
    }

    /// Basis-state index with site 0 as the least significant bit.
    ///
    /// Only valid for states short enough to fit in a `usize`.
    pub fn to_index(&self) -> usize {
        debug_assert!(self.len() < usize::BITS as usize);
        self.spins
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &s)| acc | (usize::from(s == 1) << i))
    }

    /// Inverse of [`to_index`](Self::to_index).
    pub fn from_index(n_sites: usize, index: usize) -> Self {
        Self {
            spins: (0..n_sites)
                .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }

    /// Normalized spin overlap `(1/N) sum_i s_i t_i`, in `[-1, 1]`.
    pub fn overlap(&self, other: &SpinState) -> Result<f64> {
        self.check_same_len(other)?;
        let dot: i64 = self
            .spins
            .iter()
            .zip(other.spins.iter())
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum();
        Ok(dot as f64 / self.len() as f64)
    }

    /// Number of differing sites; equals `N (1 - overlap) / 2` exactly.
    pub fn hamming_distance(&self, other: &SpinState) -> Result<usize> {
        self.check_same_len(other)?;
        Ok(self
            .spins
            .iter()
            .zip(other.spins.iter())
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Lexicographic order of the bit-string rendering (highest site first).
    pub fn cmp_bit_string(&self, other: &SpinState) -> Ordering {
        for (a, b) in self.spins.iter().rev().zip(other.spins.iter().rev()) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.len().cmp(&other.len())
    }

    fn check_same_len(&self, other: &SpinState) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bit_string())
    }
}

impl Serialize for SpinState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.bit_string())
    }
}

impl<'de> Deserialize<'de> for SpinState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        SpinState::from_bit_string(&s).map_err(de::Error::custom)
    }
}

/// Precomputed view of a reference state's satisfied terms, for repeated
/// similarity scoring against many candidates.
#[derive(Debug, Clone)]
pub struct SimilarityReference {
    /// Satisfied couplers `(i, j, |J_ij|)` in ascending key order.
    couplers: Vec<(usize, usize, f64)>,
    /// Satisfied biases `(i, |h_i|)` in ascending key order.
    biases: Vec<(usize, f64)>,
    reference: SpinState,
    denominator: f64,
}

impl SimilarityReference {
    pub fn new(instance: &SpinGlassInstance, reference: &SpinState) -> Result<Self> {
        instance.check_len(reference)?;
        let s = reference.spins();
        let mut couplers = Vec::new();
        let mut biases = Vec::new();
        for (&(i, j), &v) in &instance.couplers {
            if v * f64::from(s[i] * s[j]) < 0.0 {
                couplers.push((i, j, v.abs()));
            }
        }
        for (&i, &v) in &instance.biases {
            if v * f64::from(s[i]) < 0.0 {
                biases.push((i, v.abs()));
            }
        }
        // Same summation order as score(), so a fully matching candidate
        // reproduces the denominator bit for bit and scores exactly 1.
        let mut denominator = 0.0;
        for &(_, _, w) in &couplers {
            denominator += w;
        }
        for &(_, w) in &biases {
            denominator += w;
        }
        Ok(Self {
            couplers,
            biases,
            reference: reference.clone(),
            denominator,
        })
    }

    pub fn reference(&self) -> &SpinState {
        &self.reference
    }

    /// Similarity of `other` to the reference, in `[0, 1]`.
    ///
    /// A satisfied coupler counts only when `other` matches the reference
    /// spin on both endpoints (which also makes it satisfied by `other`); a
    /// satisfied bias counts when the spins match at that site.
    pub fn score(&self, other: &SpinState) -> Result<f64> {
        if other.len() != self.reference.len() {
            return Err(Error::DimensionMismatch {
                expected: self.reference.len(),
                actual: other.len(),
            });
        }
        if self.denominator == 0.0 {
            return Ok(1.0);
        }
        let r = self.reference.spins();
        let o = other.spins();
        let mut numerator = 0.0;
        for &(i, j, w) in &self.couplers {
            if o[i] == r[i] && o[j] == r[j] {
                numerator += w;
            }
        }
        for &(i, w) in &self.biases {
            if o[i] == r[i] {
                numerator += w;
            }
        }
        Ok(numerator / self.denominator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The 3-site instance used throughout: J_01 = -1, J_12 = 0.5, h_0 = 0.2.
    pub(crate) fn three_site() -> SpinGlassInstance {
        SpinGlassInstance::new(3, [((0, 1), -1.0), ((1, 2), 0.5)], [(0, 0.2)]).unwrap()
    }

    fn state(spins: &[i8]) -> SpinState {
        SpinState::from_spins(spins.to_vec()).unwrap()
    }

    /// Random instance with dyadic term strengths, so energy sums are exact.
    pub(crate) fn random_instance(n: usize, rng: &mut ChaCha8Rng) -> SpinGlassInstance {
        let mut couplers = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.6 {
                    let num = rng.gen_range(-16i32..=16);
                    couplers.push(((i, j), f64::from(num) / 16.0));
                }
            }
        }
        let biases = (0..n)
            .filter(|_| rng.gen::<f64>() < 0.4)
            .map(|i| (i, f64::from(rng.gen_range(-8i32..=8)) / 16.0))
            .collect::<Vec<_>>();
        SpinGlassInstance::new(n, couplers, biases).unwrap()
    }

    #[test]
    fn energy_three_site() {
        let inst = three_site();
        let e = inst.energy(&state(&[1, 1, -1])).unwrap();
        assert_eq!(e, -1.3);
    }

    #[test]
    fn energy_empty_instance_is_zero() {
        let inst = SpinGlassInstance::empty(5).unwrap();
        assert_eq!(inst.energy(&SpinState::all_up(5)).unwrap(), 0.0);
    }

    #[test]
    fn energy_matches_term_by_term_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let inst = random_instance(10, &mut rng);
            let s = SpinState::random(10, &mut rng);
            // Independent re-summation, term by term.
            let mut oracle = 0.0;
            for ((i, j), v) in inst.couplers() {
                oracle += v * f64::from(s.get(i)) * f64::from(s.get(j));
            }
            for (i, v) in inst.biases() {
                oracle += v * f64::from(s.get(i));
            }
            assert!((inst.energy(&s).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_length_mismatch() {
        let inst = three_site();
        assert!(matches!(
            inst.energy(&SpinState::all_up(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn satisfied_sets_examples() {
        let inst = SpinGlassInstance::new(2, [((0, 1), -1.0)], []).unwrap();
        let sat = inst.satisfied_sets(&state(&[1, 1])).unwrap();
        assert_eq!(sat.couplers.iter().copied().collect::<Vec<_>>(), [(0, 1)]);
        assert!(sat.biases.is_empty());

        let inst = SpinGlassInstance::new(1, [], [(0, 0.2)]).unwrap();
        let sat = inst.satisfied_sets(&state(&[1])).unwrap();
        assert!(sat.biases.is_empty());

        let sat = three_site().satisfied_sets(&state(&[1, 1, -1])).unwrap();
        assert_eq!(
            sat.couplers.iter().copied().collect::<Vec<_>>(),
            [(0, 1), (1, 2)]
        );
        assert!(sat.biases.is_empty());
    }

    #[test]
    fn zero_terms_are_never_satisfied() {
        let inst = SpinGlassInstance::new(2, [((0, 1), 0.0)], [(0, 0.0)]).unwrap();
        let sat = inst.satisfied_sets(&state(&[1, -1])).unwrap();
        assert!(sat.is_empty());
    }

    #[test]
    fn overlap_and_hamming() {
        let a = state(&[1, 1, -1]);
        let b = state(&[1, 1, 1]);
        assert_eq!(a.overlap(&a).unwrap(), 1.0);
        assert_eq!(a.overlap(&a.inverted()).unwrap(), -1.0);
        assert!((a.overlap(&b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.hamming_distance(&a).unwrap(), 0);
        assert_eq!(a.hamming_distance(&b).unwrap(), 1);
        let c = SpinState::all_up(5);
        assert_eq!(c.hamming_distance(&c.inverted()).unwrap(), 5);
    }

    #[test]
    fn overlap_hamming_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=20);
            let a = SpinState::random(n, &mut rng);
            let b = SpinState::random(n, &mut rng);
            let q = a.overlap(&b).unwrap();
            let d = a.hamming_distance(&b).unwrap();
            // d = N (1 - q) / 2 exactly: q has denominator N, so this is an
            // integer identity.
            assert_eq!(d as f64, n as f64 * (1.0 - q) / 2.0);
        }
    }

    #[test]
    fn feature_similarity_examples() {
        let inst = three_site();
        let a = state(&[1, 1, -1]);
        let b = state(&[1, 1, 1]);
        assert_eq!(inst.feature_similarity(&a, &a).unwrap(), 1.0);
        // numerator |J_01| = 1, denominator |J_01| + |J_12| = 1.5
        assert!((inst.feature_similarity(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn feature_similarity_singular_case() {
        // All terms frustrated by the reference: ferromagnetic coupler with
        // misaligned spins and a bias pushing along the spin.
        let inst = SpinGlassInstance::new(2, [((0, 1), 1.0)], [(0, 1.0)]).unwrap();
        let reference = state(&[1, 1]);
        assert!(inst.satisfied_sets(&reference).unwrap().is_empty());
        assert_eq!(
            inst.feature_similarity(&reference, &state(&[-1, 1])).unwrap(),
            1.0
        );
    }

    #[test]
    fn feature_similarity_range_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=12);
            let inst = random_instance(n, &mut rng);
            let a = SpinState::random(n, &mut rng);
            let b = SpinState::random(n, &mut rng);
            let q = inst.feature_similarity(&a, &b).unwrap();
            assert!((0.0..=1.0).contains(&q), "q_f out of range: {q}");
            assert_eq!(inst.feature_similarity(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn feature_similarity_asymmetry_witness_exists() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut found = false;
        for _ in 0..1000 {
            let n = rng.gen_range(2..=16);
            let inst = random_instance(n, &mut rng);
            let a = SpinState::random(n, &mut rng);
            let b = SpinState::random(n, &mut rng);
            if inst.feature_similarity(&a, &b).unwrap() != inst.feature_similarity(&b, &a).unwrap()
            {
                found = true;
                break;
            }
        }
        assert!(found, "no asymmetric pair found in 1000 trials");
    }

    #[test]
    fn local_minimum_examples() {
        let inst = SpinGlassInstance::new(2, [((0, 1), -1.0)], []).unwrap();
        let check = inst.check_local_minimum(&state(&[1, 1])).unwrap();
        assert!(check.strict);
        assert!(!check.degenerate);
        let check = inst.check_local_minimum(&state(&[1, -1])).unwrap();
        assert!(!check.strict);
    }

    #[test]
    fn local_minimum_degenerate_flag() {
        // Site 1 has no terms at all, so flipping it changes nothing.
        let inst = SpinGlassInstance::new(2, [], [(0, -1.0)]).unwrap();
        let check = inst.check_local_minimum(&state(&[1, 1])).unwrap();
        assert!(!check.strict);
        assert!(check.degenerate);
    }

    #[test]
    fn local_minimum_matches_exhaustive_single_flip_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let n = 12;
            let inst = random_instance(n, &mut rng);
            let s = SpinState::random(n, &mut rng);
            let e0 = inst.energy(&s).unwrap();
            let oracle_strict = (0..n).all(|k| inst.energy(&s.flipped(k)).unwrap() > e0);
            assert_eq!(inst.check_local_minimum(&s).unwrap().strict, oracle_strict);
        }
    }

    #[test]
    fn spin_reversal_identity_gauge() {
        let inst = three_site();
        let transformed = inst.spin_reversal(&SpinState::all_up(3)).unwrap();
        assert_eq!(inst, transformed);
    }

    #[test]
    fn spin_reversal_preserves_energy_and_is_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..50 {
            let n = rng.gen_range(2..=10);
            let inst = random_instance(n, &mut rng);
            let gauge = SpinState::random(n, &mut rng);
            let s = SpinState::random(n, &mut rng);
            let t = inst.spin_reversal(&gauge).unwrap();
            assert_eq!(
                t.energy(&s.gauged(&gauge).unwrap()).unwrap(),
                inst.energy(&s).unwrap()
            );
            assert_eq!(t.spin_reversal(&gauge).unwrap(), inst);
        }
    }

    #[test]
    fn bit_string_round_trip() {
        let s = state(&[1, -1, -1, 1]);
        assert_eq!(s.bit_string(), "1001");
        assert_eq!(SpinState::from_bit_string("1001").unwrap(), s);
        assert_eq!(SpinState::from_index(4, s.to_index()), s);
        assert_eq!(s.to_index(), 0b1001);
    }

    #[test]
    fn bit_string_ordering_compares_high_site_first() {
        let a = state(&[1, -1]); // "01"
        let b = state(&[-1, 1]); // "10"
        assert_eq!(a.cmp_bit_string(&b), Ordering::Less);
        assert_eq!(b.cmp_bit_string(&a), Ordering::Greater);
        assert_eq!(a.cmp_bit_string(&a), Ordering::Equal);
    }

    #[test]
    fn instance_validation() {
        assert!(SpinGlassInstance::new(2, [((1, 1), 1.0)], []).is_err());
        assert!(SpinGlassInstance::new(2, [((1, 0), 1.0)], []).is_err());
        assert!(SpinGlassInstance::new(2, [((0, 2), 1.0)], []).is_err());
        assert!(SpinGlassInstance::new(2, [((0, 1), 1.0), ((0, 1), 2.0)], []).is_err());
        assert!(SpinGlassInstance::new(2, [], [(2, 1.0)]).is_err());
        assert!(SpinGlassInstance::new(2, [((0, 1), f64::NAN)], []).is_err());
        assert!(SpinGlassInstance::new(0, [], []).is_err());
    }
}
