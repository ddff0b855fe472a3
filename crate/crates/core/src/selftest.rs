//! The acceptance suite: ten checks with pinned seeds, shared by the
//! `selftest` subcommand and the `acceptance` test target.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    classical_cesaro_hopf_image, commutation_obstruction_check, inner_faithfulness_scan, stationarity_check_classical,
    thoma_stationarity_check, trace_route_agreement, StationarityMode, SURVIVAL_SAMPLES,
};
use crate::error::Result;
use crate::fixtures;
use crate::latin::{admissible_squares, from_permutations, to_permutations, SparseLatinSquare};
use crate::magic::{orbit_decomposition, quasi_transitivity, rank_pattern, validate_magic, PatternSource};
use crate::models::{family_magic, generator_power, sample_point, InducedModel, ModelFamily};
use crate::perm::{
    all_subgroups, check_normal_orbits, haar_moment_classical, CoordinateWord, Permutation, PermutationGroup,
};
use crate::tol;

pub const DEFAULT_SEED: u64 = 20_160_711;

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "sparse Latin square dictionary"),
    (2, "exact and Monte Carlo stationarity"),
    (3, "Cesaro average reaches the Hopf image"),
    (4, "inner faithfulness of Z_3 * Z_3"),
    (5, "amalgamated family"),
    (6, "commuting-powers family"),
    (7, "commuting-generators negative control"),
    (8, "induced representation model"),
    (9, "rank pattern and orbits"),
    (10, "Haar moment oracle"),
];

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Replaces every numerical tolerance when set.
    pub tol: Option<f64>,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: DEFAULT_SEED,
            tol: None,
        }
    }
}

impl SelftestConfig {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn seed(&self, criterion: u8) -> u64 {
        self.seed.wrapping_add(1000 * criterion as u64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub criteria: Vec<CriterionResult>,
    pub failed: Vec<String>,
    pub pass: bool,
}

pub fn run(cfg: &SelftestConfig) -> SelftestReport {
    let criteria: Vec<CriterionResult> = CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect();
    let failed: Vec<String> = criteria
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {}", c.id, c.name))
        .collect();
    SelftestReport {
        pass: failed.is_empty(),
        failed,
        criteria,
    }
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8, cfg: &SelftestConfig) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .unwrap_or("unknown criterion");
    let outcome = match id {
        1 => latin_dictionary(),
        2 => stationarity(cfg),
        3 => cesaro(cfg),
        4 => free_product(cfg),
        5 => amalgamated(cfg),
        6 => commuting_powers(cfg),
        7 => obstruction(cfg),
        8 => thoma(cfg),
        9 => rank_and_orbits(cfg),
        10 => haar_oracle(cfg),
        _ => Ok((false, "no such criterion".to_string())),
    };
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name, pass, detail }
}

/// Every `k`-tuple of elements of `group`, as an odometer.
fn tuples(group: &PermutationGroup, k: usize) -> impl Iterator<Item = Vec<&Permutation>> {
    let elems = group.elements();
    let total = elems.len().pow(k as u32);
    (0..total).map(move |mut code| {
        (0..k)
            .map(|_| {
                let e = &elems[code % elems.len()];
                code /= elems.len();
                e
            })
            .collect()
    })
}

fn pointwise_distinct(perms: &[&Permutation]) -> bool {
    let n = perms[0].degree();
    (0..n).all(|i| {
        let images: BTreeSet<usize> = perms.iter().map(|p| p.apply(i)).collect();
        images.len() == perms.len()
    })
}

fn latin_dictionary() -> Result<(bool, String)> {
    let mut round_trips = 0;
    let mut ok = true;
    for n in 1..=4 {
        let sn = PermutationGroup::symmetric(n)?;
        for k in 1..=n.min(3) {
            for t in tuples(&sn, k) {
                let owned: Vec<Permutation> = t.iter().map(|p| (*p).clone()).collect();
                match from_permutations(&owned) {
                    Ok(square) => {
                        let inverses: Vec<Permutation> = owned.iter().map(Permutation::inverse).collect();
                        ok &= to_permutations(&square) == inverses;
                        ok &= pointwise_distinct(&t);
                        round_trips += 1;
                    }
                    Err(_) => ok &= !pointwise_distinct(&t),
                }
            }
        }
    }
    let mut groups = 0;
    let mut mismatches = Vec::new();
    for n in [3, 4] {
        for g in all_subgroups(&PermutationGroup::symmetric(n)?)? {
            groups += 1;
            for k in 1..=3 {
                let nonempty = !admissible_squares(n, k, &g)?.is_empty();
                let witness = tuples(&g, k).any(|t| pointwise_distinct(&t));
                if nonempty != witness {
                    mismatches.push(format!("S_{n} subgroup of order {} with K={k}", g.order()));
                }
            }
        }
    }
    let pass = ok && mismatches.is_empty();
    Ok((
        pass,
        format!(
            "{round_trips} round trips, {groups} subgroups checked, mismatches: {}",
            if mismatches.is_empty() {
                "none".to_string()
            } else {
                mismatches.join("; ")
            }
        ),
    ))
}

fn stationarity(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let cases = [
        ("S_2", PermutationGroup::symmetric(2)?, 2),
        ("S_3", fixtures::s3(), 3),
        ("diagonal S_2 in S_4", fixtures::s2_diag_s4(), 2),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (label, g, k)) in cases.iter().enumerate() {
        let words = CoordinateWord::all_up_to(g.degree(), 3);
        let exact = stationarity_check_classical(g, *k, &words, StationarityMode::Exact)?;
        let mode = StationarityMode::MonteCarlo {
            samples: 100_000,
            seed: cfg.seed(2) + i as u64,
        };
        let mc = stationarity_check_classical(g, *k, &words, mode)?;
        let tolerance = cfg.tol(tol::VALIDATION);
        let mc_fail = mc
            .entries
            .iter()
            .filter(|e| e.defect > 3.0 * e.stderr.unwrap_or(0.0) + tolerance)
            .count();
        pass &= exact.pass && mc_fail == 0;
        parts.push(format!(
            "{label}: {} words, exact max defect {}, MC max defect {:.3e}, {mc_fail} outside 3 stderr",
            words.len(),
            exact.max_defect,
            mc.max_defect
        ));
    }
    Ok((pass, parts.join("; ")))
}

pub fn first_square() -> SparseLatinSquare {
    SparseLatinSquare::new(vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]], 2).expect("valid square")
}

fn cesaro(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let r = classical_cesaro_hopf_image(&first_square(), 10_000, cfg.tol(tol::STATISTICAL))?;
    Ok((
        r.pass && r.group_order == 6,
        format!(
            "group order {}, distance {:.6e} at k = {}, converged at {:?}",
            r.group_order, r.final_distance, r.final_k, r.converged_at
        ),
    ))
}

fn scan_summary(family: &ModelFamily, max_len: usize, cfg: &SelftestConfig, id: u8) -> Result<(bool, String)> {
    let r = inner_faithfulness_scan(
        family,
        max_len,
        SURVIVAL_SAMPLES,
        cfg.tol(tol::STATISTICAL),
        cfg.seed(id),
    )?;
    let shown: Vec<&str> = r.not_separated.iter().take(8).map(String::as_str).collect();
    Ok((
        r.pass,
        format!(
            "{}/{} words survive{}",
            r.survived,
            r.words_tested,
            if shown.is_empty() {
                String::new()
            } else {
                format!(
                    ", not separated: {}{}",
                    shown.join(" "),
                    if r.not_separated.len() > 8 { " ..." } else { "" }
                )
            }
        ),
    ))
}

fn free_product(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let f = ModelFamily::FreeProduct { k: 3, m: 2 };
    let (scan_ok, scan) = scan_summary(&f, 6, cfg, 4)?;
    let gap = trace_route_agreement(&f, 200, 6, cfg.seed(4) + 1)?;
    let route_ok = gap < cfg.tol(tol::VALIDATION);
    Ok((
        scan_ok && route_ok,
        format!("{scan}; closed form vs product max gap {gap:.3e}"),
    ))
}

/// Largest `‖π(g_i)^R − π(g_j)^R‖` (or the commutator norm) over 100 points.
fn power_residual(family: &ModelFamily, r: usize, m: usize, commutator: bool, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in 0..100 {
        let p = sample_point(family, seed + s)?;
        let hs = (0..m)
            .map(|i| generator_power(family, &p, i, r as i64))
            .collect::<Result<Vec<_>>>()?;
        for a in &hs {
            for b in &hs {
                let d = if commutator { a * b - b * a } else { a - b };
                worst = worst.max(d.norm());
            }
        }
    }
    Ok(worst)
}

fn amalgamated(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
    let residual = power_residual(&f, 2, 2, false, cfg.seed(5))?;
    let (scan_ok, scan) = scan_summary(&f, 4, cfg, 5)?;
    let ok = residual < cfg.tol(tol::CONSTRUCTION);
    Ok((ok && scan_ok, format!("relation residual {residual:.3e}; {scan}")))
}

fn commuting_powers(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let f = ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 };
    let residual = power_residual(&f, 2, 2, true, cfg.seed(6))?;
    let (scan_ok, scan) = scan_summary(&f, 4, cfg, 6)?;
    let ok = residual < cfg.tol(tol::CONSTRUCTION);
    Ok((ok && scan_ok, format!("commutator residual {residual:.3e}; {scan}")))
}

fn obstruction(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [2, 3] {
        let r = commutation_obstruction_check(k, 100, cfg.tol(tol::STATISTICAL), cfg.seed(7) + k as u64)?;
        let comm_ok = r.max_commutator_norm < cfg.tol(tol::VALIDATION);
        pass &= r.pass && comm_ok;
        let verdicts: Vec<String> = r
            .words
            .iter()
            .map(|w| {
                format!(
                    "{} {}",
                    w.word,
                    serde_json::to_value(w.verdict)
                        .unwrap_or_default()
                        .as_str()
                        .unwrap_or("?")
                )
            })
            .collect();
        parts.push(format!(
            "K={k}: commutator norm {:.3e}, {}",
            r.max_commutator_norm,
            verdicts.join(", ")
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn thoma(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let cases = [
        ("S_3/A_3", fixtures::s3(), fixtures::a3()),
        ("D_4/C_4", fixtures::d4(), fixtures::d4_rotations()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, g, h) in cases {
        let model = InducedModel::new(g.clone(), h)?;
        let r = thoma_stationarity_check(&model, g.elements(), cfg.tol(tol::CONSTRUCTION))?;
        pass &= r.pass;
        parts.push(format!(
            "{label}: max defect {:.3e} over {} elements",
            r.max_defect,
            r.entries.len()
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn rank_and_orbits(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let f = ModelFamily::FreeProduct { k: 2, m: 2 };
    let tolerance = cfg.tol(tol::VALIDATION);
    let expected: Vec<Vec<u8>> = (0..4)
        .map(|i| (0..4).map(|j| u8::from(i / 2 == j / 2)).collect())
        .collect();
    let mut pattern_ok = true;
    let mut points = Vec::new();
    for s in 0..20 {
        let m = family_magic(&f, &sample_point(&f, cfg.seed(9) + s)?)?;
        pattern_ok &= validate_magic(&m, tolerance).passed;
        pattern_ok &= rank_pattern(&m, tolerance)? == expected;
        points.push(m);
    }
    let decomposition = orbit_decomposition(PatternSource::Samples {
        points: &points,
        threshold: 1e-8,
    })?;
    let qt = quasi_transitivity(&decomposition);
    pattern_ok &= decomposition.epsilon == expected && qt == Some(2);

    let mut pairs = 0;
    let mut orbit_ok = true;
    for g in all_subgroups(&PermutationGroup::symmetric(4)?)? {
        if !g.is_transitive() {
            continue;
        }
        for h in all_subgroups(&g)? {
            if h.is_normal_in(&g) {
                orbit_ok &= check_normal_orbits(&g, &h)?.equal_sizes;
                pairs += 1;
            }
        }
    }
    Ok((
        pattern_ok && orbit_ok,
        format!("rank pattern = 2+2 blocks: {pattern_ok}, quasi-transitivity {qt:?}; {pairs} normal pairs in transitive subgroups of S_4, equal orbits: {orbit_ok}"),
    ))
}

/// Closure by repeated multiplication, independent of the BFS generator.
fn naive_closure(gens: &[Permutation], degree: usize) -> Vec<Permutation> {
    let mut set: BTreeSet<Permutation> = gens.iter().cloned().collect();
    set.insert(Permutation::identity(degree));
    loop {
        let current: Vec<Permutation> = set.iter().cloned().collect();
        let before = set.len();
        for a in &current {
            for b in &current {
                set.insert(a.compose(b).expect("same degree"));
            }
        }
        if set.len() == before {
            return current;
        }
    }
}

fn haar_oracle(cfg: &SelftestConfig) -> Result<(bool, String)> {
    let mut groups: Vec<PermutationGroup> = fixtures::NAMES.iter().filter_map(|n| fixtures::by_name(n)).collect();
    groups.extend(all_subgroups(&PermutationGroup::symmetric(4)?)?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed(10));
    let mut checked = 0;
    let mut mismatches = 0;
    for g in &groups {
        let n = g.degree();
        let elements = naive_closure(g.generators(), n);
        for _ in 0..100 {
            let len = rng.random_range(1..=4);
            let pairs: Vec<(usize, usize)> = (0..len)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            let word = CoordinateWord::new(pairs.clone(), n)?;
            let hits = elements
                .iter()
                .filter(|p| pairs.iter().all(|&(i, j)| p.images()[j] == i))
                .count();
            let oracle = num_rational::Ratio::new(hits as i64, elements.len() as i64);
            if haar_moment_classical(g, &word) != oracle {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    Ok((
        mismatches == 0,
        format!("{checked} words over {} groups, {mismatches} mismatches", groups.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        let cfg = SelftestConfig::default();
        for id in [1, 7, 8, 9, 10] {
            let r = run_criterion(id, &cfg);
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn corrupted_tolerance_fails_by_name() {
        let cfg = SelftestConfig {
            tol: Some(1e-30),
            ..SelftestConfig::default()
        };
        let r = run_criterion(8, &cfg);
        assert!(!r.pass);
        assert_eq!(r.name, "induced representation model");
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(42, &SelftestConfig::default()).pass);
    }
}
