//! Verdicts built on the models: Monte Carlo trace states, word survival,
//! Cesàro convergence, stationarity and the commuting-generators control.

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::latin::{admissible_squares, hopf_image_group, to_permutations, SparseLatinSquare};
use crate::magic::{haar_unitary, normalized_trace, operator_norm, ComplexMatrix};
use crate::models::{
    canonical_word, eval_word, raw_words, sample_point_with, word_trace, InducedModel, ModelFamily, ReducedWord,
    RootOfUnity,
};
use crate::perm::{
    haar_moment_classical, CesaroWalk, CoordinateWord, GroupMeasure, Permutation, PermutationGroup, DEFAULT_CAP,
};
use crate::tol;

/// Default number of random points per survival test.
pub const SURVIVAL_SAMPLES: usize = 100;
/// Default cap on the number of words in a faithfulness scan.
pub const WORD_CAP: usize = 100_000;

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl StateEstimate {
    fn from_values(values: &[Complex64], seed: u64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<Complex64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        StateEstimate {
            mean,
            stderr,
            samples: n,
            seed,
        }
    }

    /// `|mean − target| ≤ 3·stderr`, with a floor for rounding noise.
    pub fn agrees_with(&self, target: Complex64) -> bool {
        (self.mean - target).norm() <= 3.0 * self.stderr + tol::VALIDATION
    }
}

/// Mean and standard error of the word trace over `n` random points, drawn
/// sequentially from one stream.
pub fn mc_trace_state(family: &ModelFamily, word: &ReducedWord, n: usize, seed: u64) -> Result<StateEstimate> {
    if n < 1 {
        return Err(Error::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| word_trace(family, &sample_point_with(family, &mut rng)?, word))
        .collect::<Result<Vec<_>>>()?;
    Ok(StateEstimate::from_values(&values, seed))
}

/// As [`mc_trace_state`], split over `workers` independent streams.
pub fn mc_trace_state_parallel(
    family: &ModelFamily,
    word: &ReducedWord,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<StateEstimate> {
    if n < 1 {
        return Err(Error::NoSamples);
    }
    let workers = workers.clamp(1, n);
    let chunks = (0..workers)
        .into_par_iter()
        .map(|w| {
            let count = n / workers + usize::from(w < n % workers);
            let mut rng = stream(seed, w as u64 + 1);
            (0..count)
                .map(|_| word_trace(family, &sample_point_with(family, &mut rng)?, word))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StateEstimate::from_values(&chunks.concat(), seed))
}

/// Welford accumulator for complex samples.
#[derive(Clone, Debug, Default)]
struct RunningMoments {
    n: usize,
    mean: Complex64,
    m2: f64,
}

impl RunningMoments {
    fn push(&mut self, z: Complex64) {
        self.n += 1;
        let delta = z - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += (delta.conj() * (z - self.mean)).re;
    }

    fn estimate(&self, seed: u64) -> StateEstimate {
        let stderr = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        StateEstimate {
            mean: self.mean,
            stderr,
            samples: self.n,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Survives,
    NotSeparated,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalVerdict {
    pub word: ReducedWord,
    pub verdict: Verdict,
    /// Largest `|tr π(γ) − 1|` among the samples examined.
    pub max_deviation: f64,
    /// Index of the first sample witnessing `π(γ) ≠ 1`.
    pub witness: Option<usize>,
    pub samples_used: usize,
}

fn survival_with<G: Rng>(
    family: &ModelFamily,
    word: &ReducedWord,
    n: usize,
    tol: f64,
    rng: &mut G,
) -> Result<SurvivalVerdict> {
    if word.is_identity() {
        return Err(Error::IdentityWord);
    }
    if n < 1 {
        return Err(Error::NoSamples);
    }
    let one = Complex64::new(1.0, 0.0);
    let mut max_deviation: f64 = 0.0;
    for s in 0..n {
        let point = sample_point_with(family, rng)?;
        let d = (word_trace(family, &point, word)? - one).norm();
        max_deviation = max_deviation.max(d);
        if d > tol {
            return Ok(SurvivalVerdict {
                word: word.clone(),
                verdict: Verdict::Survives,
                max_deviation,
                witness: Some(s),
                samples_used: s + 1,
            });
        }
    }
    Ok(SurvivalVerdict {
        word: word.clone(),
        verdict: Verdict::NotSeparated,
        max_deviation,
        witness: None,
        samples_used: n,
    })
}

/// "Survives" iff some sampled point has `|tr π(γ) − 1| > tol`. One-sided:
/// "not-separated" is evidence, never proof, that `γ` lies in the kernel.
pub fn word_survival_test(
    family: &ModelFamily,
    word: &ReducedWord,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<SurvivalVerdict> {
    survival_with(family, word, n, tol, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct FaithfulnessReport {
    pub family: ModelFamily,
    pub max_len: usize,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub identity_trace: Complex64,
    pub words_tested: usize,
    pub survived: usize,
    pub not_separated: Vec<String>,
    pub verdicts: Vec<SurvivalVerdict>,
    pub pass: bool,
}

/// Canonical nontrivial words with a raw spelling of length `1..=max_len`,
/// deduplicated, ordered by raw length then lexicographically.
pub fn canonical_words(family: &ModelFamily, max_len: usize, cap: usize) -> Result<Vec<ReducedWord>> {
    let gens = family.generator_count()?;
    let order = match family {
        ModelFamily::InducedVirtuallyAbelian(m) => max_generator_order(m.group()),
        _ => family.order().expect("cyclic-type family"),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for raw in raw_words(gens, order, max_len, cap)? {
        let w = canonical_word(family, &raw)?;
        if !w.is_identity() && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    Ok(out)
}

fn max_generator_order(group: &PermutationGroup) -> usize {
    let order_of = |p: &Permutation| {
        let mut q = p.clone();
        let mut n = 1;
        while !q.is_identity() {
            q = q.compose(p).expect("same degree");
            n += 1;
        }
        n
    };
    group.generators().iter().map(order_of).max().unwrap_or(1)
}

/// Runs the survival test on every canonical word up to `max_len`. Word `i`
/// draws from its own stream, so the verdicts do not depend on scheduling.
pub fn inner_faithfulness_scan(
    family: &ModelFamily,
    max_len: usize,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<FaithfulnessReport> {
    if max_len < 1 {
        return Err(Error::Parameter("max_len must be at least 1".into()));
    }
    family.validate()?;
    let words = canonical_words(family, max_len, WORD_CAP)?;
    let verdicts = words
        .par_iter()
        .enumerate()
        .map(|(i, w)| survival_with(family, w, n, tol, &mut stream(seed, i as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    let point = sample_point_with(family, &mut stream(seed, 0))?;
    let identity = canonical_word(family, &[])?;
    let identity_trace = normalized_trace(&eval_word(family, &point, &identity)?);
    let not_separated: Vec<String> = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::NotSeparated)
        .map(|v| v.word.to_string())
        .collect();
    let survived = verdicts.len() - not_separated.len();
    Ok(FaithfulnessReport {
        family: family.clone(),
        max_len,
        samples: n,
        tol,
        seed,
        identity_trace,
        words_tested: verdicts.len(),
        survived,
        pass: not_separated.is_empty() && (identity_trace - 1.0).norm() < tol::VALIDATION,
        not_separated,
        verdicts,
    })
}

/// Largest gap between the closed-form trace and the trace of the explicit
/// matrix product, over `pairs` random (word, point) pairs.
pub fn trace_route_agreement(family: &ModelFamily, pairs: usize, max_len: usize, seed: u64) -> Result<f64> {
    let gens = family.generator_count()?;
    let order = family
        .order()
        .ok_or(Error::Unsupported("needs a cyclic-type family".into()))? as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let point = sample_point_with(family, &mut rng)?;
        let len = rng.random_range(1..=max_len);
        let raw: Vec<(usize, i64)> = (0..len)
            .map(|_| (rng.random_range(0..gens), rng.random_range(1..order)))
            .collect();
        let w = canonical_word(family, &raw)?;
        let closed = word_trace(family, &point, &w)?;
        let direct = normalized_trace(&eval_word(family, &point, &w)?);
        worst = worst.max((closed - direct).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct CesaroReport {
    pub square: SparseLatinSquare,
    pub group_order: usize,
    pub k_max: usize,
    pub tol: f64,
    /// First `k` with distance below `tol`, if reached.
    pub converged_at: Option<usize>,
    pub final_k: usize,
    pub final_distance: f64,
    /// `(k, distance)` at `k = 1, 10, 100, …` and at the last step.
    pub trajectory: Vec<(usize, f64)>,
    pub pass: bool,
}

/// Total variation between the Cesàro averages of the uniform measure on the
/// square's permutations and the uniform measure on the group they generate.
pub fn classical_cesaro_hopf_image(square: &SparseLatinSquare, k_max: usize, tol: f64) -> Result<CesaroReport> {
    if k_max < 1 {
        return Err(Error::Parameter("kmax must be at least 1".into()));
    }
    let perms = to_permutations(square);
    let mu = GroupMeasure::uniform_on(&perms)?;
    let group = hopf_image_group(square, DEFAULT_CAP)?;
    let mut walk = CesaroWalk::new(&mu, DEFAULT_CAP)?;
    debug_assert_eq!(walk.group().order(), group.order());
    let mut trajectory = Vec::new();
    let mut next_mark = 1;
    let mut converged_at = None;
    let mut distance = f64::INFINITY;
    while walk.k() < k_max {
        let k = walk.step();
        distance = walk.tv_to_uniform();
        if k == next_mark {
            trajectory.push((k, distance));
            next_mark *= 10;
        }
        if distance < tol {
            converged_at = Some(k);
            break;
        }
    }
    if trajectory.last().map(|&(k, _)| k) != Some(walk.k()) {
        trajectory.push((walk.k(), distance));
    }
    Ok(CesaroReport {
        square: square.clone(),
        group_order: group.order(),
        k_max,
        tol,
        converged_at,
        final_k: walk.k(),
        final_distance: distance,
        trajectory,
        pass: converged_at.is_some(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum StationarityMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityEntry {
    pub word: CoordinateWord,
    pub haar: String,
    pub model: String,
    pub defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub mode: StationarityMode,
    pub degree: usize,
    pub symbols: usize,
    pub squares: usize,
    pub entries: Vec<StationarityEntry>,
    pub max_defect: f64,
    pub pass: bool,
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The common symbol of `word` in `square`, if every cell carries the same one.
fn common_symbol(square: &SparseLatinSquare, word: &CoordinateWord) -> Option<usize> {
    let mut symbol = None;
    for &(i, j) in word.pairs() {
        let x = square.get(i, j)?;
        if symbol.is_some_and(|s| s != x) {
            return None;
        }
        symbol = Some(x);
    }
    symbol
}

/// Compares the Haar moments of `G` with the model average over `L^G`.
/// Exact mode uses the standard frame and rational arithmetic; Monte Carlo
/// mode draws a uniform square and a Haar frame per sample.
pub fn stationarity_check_classical(
    group: &PermutationGroup,
    k: usize,
    words: &[CoordinateWord],
    mode: StationarityMode,
) -> Result<StationarityReport> {
    let n = group.degree();
    let squares = admissible_squares(n, k, group)?;
    if squares.is_empty() {
        return Err(Error::EmptyModelSpace);
    }
    if let Some(w) = words.iter().find(|w| w.pairs().iter().any(|&(i, j)| i >= n || j >= n)) {
        return Err(Error::InvalidWord(format!("{:?} exceeds degree {n}", w.pairs())));
    }
    let entries: Vec<StationarityEntry> = match mode {
        StationarityMode::Exact => words
            .iter()
            .map(|w| {
                let haar = haar_moment_classical(group, w);
                let hits = squares.iter().filter(|l| common_symbol(l, w).is_some()).count();
                let model = Ratio::new(hits as i64, (squares.len() * k) as i64);
                let defect = ratio_f64(haar - model).abs();
                StationarityEntry {
                    word: w.clone(),
                    haar: haar.to_string(),
                    model: model.to_string(),
                    defect,
                    stderr: None,
                    pass: haar == model,
                }
            })
            .collect(),
        StationarityMode::MonteCarlo { samples, seed } => {
            if samples < 1 {
                return Err(Error::NoSamples);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<(usize, ComplexMatrix)> = (0..samples)
                .map(|_| {
                    let square = rng.random_range(0..squares.len());
                    let u = haar_unitary(k, &mut rng);
                    (square, u.adjoint() * &u)
                })
                .collect();
            let acc: Vec<RunningMoments> = words
                .par_iter()
                .map(|w| {
                    let mut a = RunningMoments::default();
                    for (square, gram) in &draws {
                        a.push(frame_word_trace(&squares[*square], gram, w));
                    }
                    a
                })
                .collect();
            words
                .iter()
                .zip(acc)
                .map(|(w, a)| {
                    let haar = haar_moment_classical(group, w);
                    let est = a.estimate(seed);
                    let target = Complex64::new(ratio_f64(haar), 0.0);
                    StationarityEntry {
                        word: w.clone(),
                        haar: haar.to_string(),
                        model: format!("{:.12}", est.mean.re),
                        defect: (est.mean - target).norm(),
                        stderr: Some(est.stderr),
                        pass: est.agrees_with(target),
                    }
                })
                .collect()
        }
    };
    let max_defect = entries.iter().map(|e| e.defect).fold(0.0, f64::max);
    Ok(StationarityReport {
        mode,
        degree: n,
        symbols: k,
        squares: squares.len(),
        pass: entries.iter().all(|e| e.pass),
        max_defect,
        entries,
    })
}

/// `tr(P_{x_1} ⋯ P_{x_n})` for rank-one `P_x = ξ_x ξ_x*`, from the Gram
/// matrix `gram[(a, b)] = ⟨ξ_a, ξ_b⟩`; zero if a cell is `*`.
fn frame_word_trace(square: &SparseLatinSquare, gram: &ComplexMatrix, word: &CoordinateWord) -> Complex64 {
    let mut symbols = Vec::with_capacity(word.len());
    for &(i, j) in word.pairs() {
        match square.get(i, j) {
            Some(x) => symbols.push(x),
            None => return Complex64::new(0.0, 0.0),
        }
    }
    let k = gram.nrows() as f64;
    let mut z = gram[(symbols[symbols.len() - 1], symbols[0])];
    for pair in symbols.windows(2) {
        z *= gram[(pair[0], pair[1])];
    }
    z / k
}

#[derive(Clone, Debug, Serialize)]
pub struct ThomaEntry {
    pub element: Permutation,
    pub value: Complex64,
    pub expected: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThomaReport {
    pub group_order: usize,
    pub index: usize,
    pub dual_size: usize,
    pub entries: Vec<ThomaEntry>,
    pub max_defect: f64,
    pub pass: bool,
}

/// `(1/index)(1/|Λ̂|) Σ_χ Tr Ind(χ)(γ)` against `δ_{γ,e}` for each element.
pub fn thoma_stationarity_check(model: &InducedModel, elements: &[Permutation], tol: f64) -> Result<ThomaReport> {
    let index = model.index() as f64;
    let dual = model.characters().len() as f64;
    let entries = elements
        .iter()
        .map(|g| {
            let mut total = Complex64::new(0.0, 0.0);
            for chi in model.characters() {
                total += model.induced_character(chi, g)?;
            }
            let value = total / (index * dual);
            let expected = if g.is_identity() { 1.0 } else { 0.0 };
            Ok(ThomaEntry {
                element: g.clone(),
                value,
                expected,
                defect: (value - expected).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_defect = entries.iter().map(|e| e.defect).fold(0.0, f64::max);
    Ok(ThomaReport {
        group_order: model.group().order(),
        index: model.index(),
        dual_size: model.characters().len(),
        pass: max_defect < tol,
        max_defect,
        entries,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WordOutcome {
    pub word: String,
    pub verdict: Verdict,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_commutator_norm: f64,
    pub words: Vec<WordOutcome>,
    pub pass: bool,
}

/// Quasi-flat points of `(Z_K ∗ Z_K) × Z_K`: `π(g_3) = U W U*` from a random
/// frame, and `π(g_1)`, `π(g_2)` from random relabellings of the same frame,
/// which is all the commutant of a multiplicity-free `π(g_3)` allows.
pub fn commutation_obstruction_check(k: usize, n: usize, tol: f64, seed: u64) -> Result<ObstructionReport> {
    if k < 2 {
        return Err(Error::Parameter("K must be at least 2".into()));
    }
    if n < 1 {
        return Err(Error::NoSamples);
    }
    let w = RootOfUnity::new(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectral = |u: &ComplexMatrix, labels: &[usize]| {
        let mut m = ComplexMatrix::zeros(k, k);
        for (j, &label) in labels.iter().enumerate() {
            let col = u.column(j);
            m += (&col * col.adjoint()) * w.pow(label as i64 + 1);
        }
        m
    };
    // (label, [(generator, exponent)]) with generators g_1, g_2, g_3 = 0, 1, 2
    let words: [(&str, &[(usize, i64)]); 5] = [
        ("[g1,g2]", &[(0, 1), (1, 1), (0, -1), (1, -1)]),
        ("[g1,g3]", &[(0, 1), (2, 1), (0, -1), (2, -1)]),
        ("g1", &[(0, 1)]),
        ("g2", &[(1, 1)]),
        ("g3", &[(2, 1)]),
    ];
    let mut deviation = [0.0f64; 5];
    let mut max_comm: f64 = 0.0;
    let identity: Vec<usize> = (0..k).collect();
    for _ in 0..n {
        let u = haar_unitary(k, &mut rng);
        let mut s1 = identity.clone();
        let mut s2 = identity.clone();
        rand::seq::SliceRandom::shuffle(s1.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(s2.as_mut_slice(), &mut rng);
        let g = [spectral(&u, &s1), spectral(&u, &s2), spectral(&u, &identity)];
        max_comm = max_comm.max(operator_norm(&(&g[0] * &g[1] - &g[1] * &g[0])));
        for (slot, (_, raw)) in deviation.iter_mut().zip(&words) {
            let mut m = ComplexMatrix::identity(k, k);
            for &(gen, e) in raw.iter() {
                m *= if e < 0 { g[gen].adjoint() } else { g[gen].clone() };
            }
            *slot = slot.max((normalized_trace(&m) - 1.0).norm());
        }
    }
    let outcomes: Vec<WordOutcome> = words
        .iter()
        .zip(deviation)
        .map(|(&(label, _), d)| WordOutcome {
            word: label.to_string(),
            verdict: if d > tol {
                Verdict::Survives
            } else {
                Verdict::NotSeparated
            },
            max_deviation: d,
        })
        .collect();
    let pass = max_comm < tol::VALIDATION
        && outcomes[..2].iter().all(|o| o.verdict == Verdict::NotSeparated)
        && outcomes[2..].iter().all(|o| o.verdict == Verdict::Survives);
    Ok(ObstructionReport {
        k,
        samples: n,
        seed,
        max_commutator_norm: max_comm,
        words: outcomes,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{convolve, generate_group, total_variation};

    fn fp32() -> ModelFamily {
        ModelFamily::FreeProduct { k: 3, m: 2 }
    }

    #[test]
    fn identity_state_is_one() {
        let f = fp32();
        let e = canonical_word(&f, &[]).unwrap();
        let est = mc_trace_state(&f, &e, 50, 1).unwrap();
        assert_eq!(est.mean, Complex64::new(1.0, 0.0));
        assert_eq!(est.stderr, 0.0);
        assert!(matches!(mc_trace_state(&f, &e, 0, 1), Err(Error::NoSamples)));
    }

    #[test]
    fn running_moments_match_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let values: Vec<Complex64> = (0..500)
            .map(|_| Complex64::new(rng.random::<f64>(), rng.random::<f64>() - 0.5))
            .collect();
        let mut acc = RunningMoments::default();
        values.iter().for_each(|&z| acc.push(z));
        let (a, b) = (acc.estimate(0), StateEstimate::from_values(&values, 0));
        assert!((a.mean - b.mean).norm() < 1e-14);
        assert!((a.stderr - b.stderr).abs() < 1e-14);
    }

    #[test]
    fn single_letter_state_vanishes() {
        let f = fp32();
        let w = canonical_word(&f, &[(0, 2)]).unwrap();
        let est = mc_trace_state(&f, &w, 200, 1).unwrap();
        assert!(est.mean.norm() < 1e-12);
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn first_moment_of_g1g2() {
        let f = fp32();
        let w = canonical_word(&f, &[(0, 1), (1, 1)]).unwrap();
        let est = mc_trace_state(&f, &w, 10_000, 77).unwrap();
        assert!(est.stderr > 0.0);
        assert!(est.mean.norm() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn stderr_scales_like_inverse_root() {
        let f = fp32();
        let w = canonical_word(&f, &[(0, 1), (1, 2)]).unwrap();
        let small = mc_trace_state(&f, &w, 1_000, 5).unwrap();
        let large = mc_trace_state(&f, &w, 100_000, 6).unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((8.0..=12.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sequential_state_is_deterministic() {
        let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
        let w = canonical_word(&f, &[(0, 1), (1, 1)]).unwrap();
        let a = mc_trace_state(&f, &w, 300, 9).unwrap();
        let b = mc_trace_state(&f, &w, 300, 9).unwrap();
        assert_eq!(a, b);
        let c = mc_trace_state_parallel(&f, &w, 300, 9, 4).unwrap();
        let d = mc_trace_state_parallel(&f, &w, 300, 9, 4).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.samples, 300);
    }

    #[test]
    fn survival_examples() {
        let f = fp32();
        let e = canonical_word(&f, &[]).unwrap();
        assert!(matches!(
            word_survival_test(&f, &e, 10, 1e-6, 0),
            Err(Error::IdentityWord)
        ));
        let w = canonical_word(&f, &[(0, 1), (1, 1), (0, 2)]).unwrap();
        let v = word_survival_test(&f, &w, 100, 1e-6, 0).unwrap();
        assert_eq!(v.verdict, Verdict::Survives);
    }

    #[test]
    fn free_product_scan_survives() {
        let r = inner_faithfulness_scan(&fp32(), 4, 100, 1e-6, 3).unwrap();
        assert!(r.pass, "{:?}", r.not_separated);
        assert!((r.identity_trace - 1.0).norm() < 1e-10);
        // M(M−1)^{n−1}(K−1)^n words of each length, all distinct in Z_3 ∗ Z_3
        assert_eq!(r.words_tested, (1..=4).map(|n| 2 * 2usize.pow(n)).sum::<usize>());
    }

    #[test]
    fn scan_verdicts_do_not_depend_on_threads() {
        let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
        let a = inner_faithfulness_scan(&f, 3, 20, 1e-6, 1).unwrap();
        let b = inner_faithfulness_scan(&f, 3, 20, 1e-6, 1).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn cesaro_examples() {
        let id = SparseLatinSquare::identity(3);
        let r = classical_cesaro_hopf_image(&id, 10, 1e-12).unwrap();
        assert_eq!(r.converged_at, Some(1));
        assert_eq!(r.final_distance, 0.0);

        // circulant: the walk cycles through Z_3, uniform at multiples of 3
        let c = SparseLatinSquare::circulant(3);
        let perms = to_permutations(&c);
        let mu = GroupMeasure::uniform_on(&perms).unwrap();
        let mut walk = CesaroWalk::new(&mu, DEFAULT_CAP).unwrap();
        assert_eq!(walk.group().order(), 3);
        for k in 1..=12 {
            walk.step();
            if k % 3 == 0 {
                assert!(walk.tv_to_uniform() < 1e-15);
            }
        }
        let r = classical_cesaro_hopf_image(&c, 100, 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.group_order, 3);
    }

    #[test]
    fn cesaro_first_square_rate() {
        // distance ≈ 2/(3k) for the S_3 walk of the first displayed square
        let sq = SparseLatinSquare::new(vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]], 2).unwrap();
        let r = classical_cesaro_hopf_image(&sq, 1000, 1e-6).unwrap();
        assert_eq!(r.group_order, 6);
        assert!(!r.pass);
        assert!((r.final_distance - 6.667e-4).abs() < 1e-6, "{}", r.final_distance);
    }

    #[test]
    fn cesaro_limit_is_idempotent() {
        let sq = SparseLatinSquare::new(vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]], 2).unwrap();
        let mu = GroupMeasure::uniform_on(&to_permutations(&sq)).unwrap();
        let mut walk = CesaroWalk::new(&mu, DEFAULT_CAP).unwrap();
        for _ in 0..2000 {
            walk.step();
        }
        let limit = GroupMeasure::uniform(walk.group());
        let twice = convolve(&limit, &limit).unwrap();
        assert!(total_variation(&twice, &limit).unwrap() < 1e-9);
        let avg = walk.average();
        assert!(total_variation(&convolve(&avg, &avg).unwrap(), &avg).unwrap() < 1e-3);
    }

    #[test]
    fn stationarity_examples() {
        let s2 = PermutationGroup::symmetric(2).unwrap();
        let w = CoordinateWord::new(vec![(0, 0)], 2).unwrap();
        let r = stationarity_check_classical(&s2, 2, &[w], StationarityMode::Exact).unwrap();
        assert_eq!(r.squares, 2);
        assert_eq!(r.entries[0].haar, "1/2");
        assert_eq!(r.entries[0].model, "1/2");
        assert!(r.pass);

        let orth = CoordinateWord::new(vec![(0, 0), (0, 1)], 2).unwrap();
        let r = stationarity_check_classical(&s2, 2, &[orth], StationarityMode::Exact).unwrap();
        assert_eq!(r.entries[0].haar, "0");
        assert_eq!(r.entries[0].model, "0");

        let diag = generate_group(&[Permutation::from_one_based(&[2, 1, 4, 3]).unwrap()], 10).unwrap();
        let words = CoordinateWord::all_up_to(4, 2);
        let r = stationarity_check_classical(&diag, 2, &words, StationarityMode::Exact).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_defect, 0.0);

        let trivial = PermutationGroup::trivial(3);
        assert!(matches!(
            stationarity_check_classical(&trivial, 2, &[], StationarityMode::Exact),
            Err(Error::EmptyModelSpace)
        ));
    }

    #[test]
    fn stationarity_monte_carlo() {
        let s3 = PermutationGroup::symmetric(3).unwrap();
        let words = CoordinateWord::all_up_to(3, 2);
        let mode = StationarityMode::MonteCarlo { samples: 4000, seed: 2 };
        let r = stationarity_check_classical(&s3, 3, &words, mode).unwrap();
        assert!(r.pass, "max defect {}", r.max_defect);
    }

    #[test]
    fn frame_word_trace_matches_matrices() {
        let sq = SparseLatinSquare::new(vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // a non-orthogonal family of unit vectors exercises every Gram entry
        let u = haar_unitary(2, &mut rng) + ComplexMatrix::from_element(2, 2, Complex64::new(0.3, 0.1));
        let mut v = u.clone();
        for mut c in v.column_iter_mut() {
            let n = c.norm();
            c /= Complex64::new(n, 0.0);
        }
        let gram = v.adjoint() * &v;
        let proj = |x: usize| {
            let c = v.column(x);
            &c * c.adjoint()
        };
        for w in CoordinateWord::all_up_to(3, 3) {
            let mut m = ComplexMatrix::identity(2, 2);
            for &(i, j) in w.pairs() {
                m *= match sq.get(i, j) {
                    Some(x) => proj(x),
                    None => ComplexMatrix::zeros(2, 2),
                };
            }
            assert!((normalized_trace(&m) - frame_word_trace(&sq, &gram, &w)).norm() < 1e-12);
        }
    }

    #[test]
    fn thoma_examples() {
        let s3 = PermutationGroup::symmetric(3).unwrap();
        let a3 = generate_group(&[Permutation::from_cycles(3, &[&[1, 2, 3]]).unwrap()], 10).unwrap();
        let model = InducedModel::new(s3.clone(), a3).unwrap();
        let r = thoma_stationarity_check(&model, s3.elements(), 1e-12).unwrap();
        assert!(r.pass, "{}", r.max_defect);
        let e = r.entries.iter().find(|x| x.element.is_identity()).unwrap();
        assert!((e.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn obstruction_examples() {
        let r = commutation_obstruction_check(2, 100, 1e-6, 0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.max_commutator_norm < 1e-10);
        let r = commutation_obstruction_check(3, 100, 1e-6, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(commutation_obstruction_check(1, 10, 1e-6, 0).is_err());
    }

    #[test]
    fn trace_routes_agree() {
        for f in [
            fp32(),
            ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 },
            ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 },
            ModelFamily::FreeProductOfDirectProducts {
                k: 3,
                parts: vec![1, 2],
            },
        ] {
            assert!(trace_route_agreement(&f, 200, 6, 1).unwrap() < 1e-10);
        }
    }
}
