use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::magic::{operator_norm, validate_magic};
use crate::perm::{generate_group, PermutationGroup};

fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).norm()
}

fn families() -> Vec<ModelFamily> {
    vec![
        ModelFamily::CyclicFlat { k: 4 },
        ModelFamily::FreeProduct { k: 3, m: 2 },
        ModelFamily::FreeProductOfDirectProducts {
            k: 3,
            parts: vec![2, 1],
        },
        ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 },
        ModelFamily::Amalgamated { k: 6, l: 3, r: 2, m: 3 },
        ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 },
        ModelFamily::CommutingPowers { k: 6, l: 3, r: 2, m: 2 },
        ModelFamily::CommutingPowers { k: 6, l: 2, r: 3, m: 3 },
    ]
}

fn random_raw<G: Rng>(gens: usize, order: usize, max_len: usize, rng: &mut G) -> Vec<(usize, i64)> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            let g = rng.random_range(0..gens);
            let e = rng.random_range(-(order as i64) * 2..=(order as i64) * 2);
            (g, e)
        })
        .collect()
}

/// Product of spectral-sum generator powers for a raw (uncanonicalized) word.
fn eval_raw(f: &ModelFamily, p: &ModelPoint, raw: &[(usize, i64)]) -> ComplexMatrix {
    let k = f.dimension();
    let mut acc = ComplexMatrix::identity(k, k);
    for &(g, e) in raw {
        acc *= generator_power(f, p, g, e).unwrap();
    }
    acc
}

#[test]
fn root_of_unity_order() {
    for k in 1..9 {
        let w = RootOfUnity::new(k);
        assert!((w.value().powi(k as i32) - 1.0).norm() < 1e-12);
        assert!((w.pow(k as i64 * 1000 + 1) - w.value()).norm() < 1e-15);
    }
}

#[test]
fn diagonal_w_examples() {
    assert!(close(&diagonal_w(5, 0, None), &ComplexMatrix::identity(5, 5)) < 1e-15);
    let w2 = diagonal_w(2, 1, None);
    assert!((w2[(0, 0)] + 1.0).norm() < 1e-15);
    assert!((w2[(1, 1)] - 1.0).norm() < 1e-15);
    let id = Permutation::identity(4);
    assert!(close(&diagonal_w(4, 3, Some(&id)), &diagonal_w(4, 3, None)) < 1e-15);
}

#[test]
fn family_json_round_trip() {
    let json = r#"{"variant":"Amalgamated","k":4,"l":2,"r":2,"m":2}"#;
    let f: ModelFamily = serde_json::from_str(json).unwrap();
    assert!(matches!(f, ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 }));
    assert_eq!(serde_json::to_string(&f).unwrap(), json);
    let bad = ModelFamily::Amalgamated { k: 5, l: 2, r: 2, m: 2 };
    assert!(bad.validate().is_err());

    let induced = r#"{"variant":"InducedVirtuallyAbelian","group":[[2,3,1],[2,1,3]],"subgroup":[[2,3,1]]}"#;
    let f: ModelFamily = serde_json::from_str(induced).unwrap();
    assert_eq!(f.dimension(), 2);
}

#[test]
fn point_json_round_trip() {
    for (n, f) in families().iter().enumerate() {
        let p = sample_point(f, n as u64).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelPoint = serde_json::from_str(&json).unwrap();
        validate_point(f, &back).unwrap();
        let w = canonical_word(f, &[(0, 1)]).unwrap();
        let a = eval_word(f, &p, &w).unwrap();
        let b = eval_word(f, &back, &w).unwrap();
        assert!(close(&a, &b) < 1e-15);
    }
}

#[test]
fn sampled_points_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in families() {
        for _ in 0..10 {
            let p = sample_point_with(&f, &mut rng).unwrap();
            validate_point(&f, &p).unwrap();
        }
    }
}

#[test]
fn amalgamated_zero_pattern() {
    let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
    for seed in 0..20 {
        let ModelPoint::Unitaries(us) = sample_point(&f, seed).unwrap() else {
            panic!("unitaries expected")
        };
        for u in us {
            // columns 1,3 live on coordinates {1,2}; columns 2,4 on {3,4}
            for (row, col) in [(2, 0), (3, 0), (2, 2), (3, 2), (0, 1), (1, 1), (0, 3), (1, 3)] {
                assert!(u[(row, col)].norm() < 1e-12);
            }
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }
}

#[test]
fn free_product_identity_point() {
    let f = ModelFamily::FreeProduct { k: 3, m: 2 };
    let p = ModelPoint::Unitaries(vec![ComplexMatrix::identity(3, 3); 2]);
    let g = eval_generator(&f, &p, 0, 0).unwrap();
    assert!(close(&g, &diagonal_w(3, 1, None)) < 1e-12);
}

#[test]
fn free_product_coincident_unitaries() {
    let f = ModelFamily::FreeProduct { k: 3, m: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = haar_unitary(3, &mut rng);
    let p = ModelPoint::Unitaries(vec![u.clone(), u]);
    let w = canonical_word(&f, &[(0, 1), (1, 1)]).unwrap();
    let g = eval_generator(&f, &p, 0, 0).unwrap();
    assert!(close(&eval_word(&f, &p, &w).unwrap(), &(&g * &g)) < 1e-10);
}

#[test]
fn generators_have_order_k() {
    for (n, f) in families().iter().enumerate() {
        let p = sample_point(f, 100 + n as u64).unwrap();
        let k = f.order().unwrap();
        for g in 0..f.generator_count().unwrap() {
            let m = generator_power(f, &p, g, 1).unwrap();
            assert!(unitarity_defect(&m) < 1e-10);
            let mut acc = ComplexMatrix::identity(k, k);
            for _ in 0..k {
                acc *= &m;
            }
            assert!(close(&acc, &ComplexMatrix::identity(k, k)) < 1e-10);
        }
    }
}

#[test]
fn word_inverse_is_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in families() {
        let p = sample_point_with(&f, &mut rng).unwrap();
        for _ in 0..20 {
            let raw = random_raw(f.generator_count().unwrap(), f.order().unwrap(), 6, &mut rng);
            let w = canonical_word(&f, &raw).unwrap();
            let inv = canonical_word(&f, &w.inverse_raw()).unwrap();
            let prod = eval_word(&f, &p, &w).unwrap() * eval_word(&f, &p, &inv).unwrap();
            assert!(close(&prod, &ComplexMatrix::identity(f.dimension(), f.dimension())) < 1e-10);
        }
    }
}

#[test]
fn amalgamated_example_word() {
    // g_1^3 g_2 = h g_1 g_2 in the amalgam with K = 4, L = R = 2
    let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
    let raw = [(0, 3), (1, 1)];
    let w = canonical_word(&f, &raw).unwrap();
    assert!(matches!(w.form(), NormalForm::Amalgamated { central: 1, .. }));
    for seed in 0..5 {
        let p = sample_point(&f, seed).unwrap();
        assert!(close(&eval_word(&f, &p, &w).unwrap(), &eval_raw(&f, &p, &raw)) < 1e-10);
    }
}

#[test]
fn amalgamated_relation_residual() {
    for f in [
        ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 },
        ModelFamily::Amalgamated { k: 6, l: 3, r: 2, m: 3 },
    ] {
        let ModelFamily::Amalgamated { l, r, m, .. } = f else {
            unreachable!()
        };
        for seed in 0..20 {
            let p = sample_point(&f, seed).unwrap();
            let h0 = generator_power(&f, &p, 0, r as i64).unwrap();
            for i in 1..m {
                let hi = generator_power(&f, &p, i, r as i64).unwrap();
                assert!(close(&h0, &hi) < 1e-12);
            }
            // Σ_t w^{tR} P_{V_t}
            let w = RootOfUnity::new(l * r);
            let expected = ComplexMatrix::from_fn(l * r, l * r, |a, b| {
                if a == b {
                    w.pow(((a / r + 1) * r) as i64)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            assert!(close(&h0, &expected) < 1e-12);
        }
    }
}

#[test]
fn commuting_powers_commute() {
    for f in [
        ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 },
        ModelFamily::CommutingPowers { k: 6, l: 3, r: 2, m: 3 },
    ] {
        let ModelFamily::CommutingPowers { r, m, .. } = f else {
            unreachable!()
        };
        for seed in 0..20 {
            let p = sample_point(&f, seed).unwrap();
            let hs: Vec<ComplexMatrix> = (0..m).map(|i| generator_power(&f, &p, i, r as i64).unwrap()).collect();
            for a in &hs {
                for b in &hs {
                    assert!(close(&(a * b), &(b * a)) < 1e-12);
                }
            }
        }
    }
}

#[test]
fn commuting_powers_generators_need_not_commute() {
    let f = ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 };
    let p = sample_point(&f, 1).unwrap();
    let a = generator_power(&f, &p, 0, 1).unwrap();
    let b = generator_power(&f, &p, 1, 1).unwrap();
    assert!(close(&(&a * &b), &(&b * &a)) > 1e-3);
}

/// Every `π(g_i)` preserves the blocks `V_t` on which `π(g_j)^R` is scalar,
/// so `[g_1, g_2^R]` is killed by the model although it is nontrivial in the
/// group: `g_1 ↦ (12)`, `g_2 ↦ (1234)` respects `g_i^4 = 1` and
/// `[g_1^2, g_2^2] = 1` but not `[g_1, g_2^2] = 1`.
#[test]
fn commuting_powers_model_centralizes_powers() {
    let f = ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 };
    let raw = [(0, 1), (1, 2), (0, -1), (1, -2)];
    let w = canonical_word(&f, &raw).unwrap();
    assert!(!w.is_identity());

    let a = Permutation::from_cycles(4, &[&[1, 2]]).unwrap();
    let b = Permutation::from_cycles(4, &[&[1, 2, 3, 4]]).unwrap();
    let pow = |x: &Permutation, e: i64| {
        let base = if e < 0 { x.inverse() } else { x.clone() };
        (0..e.unsigned_abs()).fold(Permutation::identity(4), |acc, _| acc.compose(&base).unwrap())
    };
    let image = |word: &[(usize, i64)]| {
        word.iter().fold(Permutation::identity(4), |acc, &(g, e)| {
            acc.compose(&pow(if g == 0 { &a } else { &b }, e)).unwrap()
        })
    };
    assert!(image(&[(0, 4)]).is_identity() && image(&[(1, 4)]).is_identity());
    assert!(image(&[(0, 2), (1, 2), (0, -2), (1, -2)]).is_identity());
    assert!(!image(&raw).is_identity());
    let flat: Vec<(usize, i64)> = w.letters().iter().map(|&(g, e)| (g, e as i64)).collect();
    assert_eq!(image(&flat), image(&raw));

    for seed in 0..10 {
        let p = sample_point(&f, seed).unwrap();
        assert!(close(&eval_word(&f, &p, &w).unwrap(), &ComplexMatrix::identity(4, 4)) < 1e-12);
    }
}

#[test]
fn free_product_single_letter_trace() {
    let f = ModelFamily::FreeProduct { k: 3, m: 2 };
    let p = sample_point(&f, 9).unwrap();
    for k in 1..3 {
        let w = canonical_word(&f, &[(1, k)]).unwrap();
        assert!(word_trace(&f, &p, &w).unwrap().norm() < 1e-12);
    }
    let e = canonical_word(&f, &[(1, 3)]).unwrap();
    assert_eq!(word_trace(&f, &p, &e).unwrap(), Complex64::new(1.0, 0.0));
    assert!(close(&eval_word(&f, &p, &e).unwrap(), &ComplexMatrix::identity(3, 3)) < 1e-15);
}

#[test]
fn closed_form_matches_product_on_200_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for f in families() {
        let (gens, order) = (f.generator_count().unwrap(), f.order().unwrap());
        for _ in 0..200 {
            let p = sample_point_with(&f, &mut rng).unwrap();
            let raw = random_raw(gens, order, 6, &mut rng);
            let w = canonical_word(&f, &raw).unwrap();
            let closed = word_trace(&f, &p, &w).unwrap();
            let direct = normalized_trace(&eval_word(&f, &p, &w).unwrap());
            assert!((closed - direct).norm() < 1e-10, "{f:?} {w}");
            // the normal form is the same group element as the raw word
            assert!(
                close(&eval_word(&f, &p, &w).unwrap(), &eval_raw(&f, &p, &raw)) < 1e-10,
                "{f:?} {w}"
            );
        }
    }
}

#[test]
fn classical_grid_is_magic() {
    let sq = SparseLatinSquare::new(vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]], 2).unwrap();
    let f = ModelFamily::Classical { square: sq.clone() };
    let std = ModelPoint::Frame(ProjectionFrame::standard(2));
    let m = family_magic(&f, &std).unwrap();
    assert!(validate_magic(&m, 1e-10).passed);
    for i in 0..3 {
        for j in 0..3 {
            let t = normalized_trace(m.entry(i, j)).re;
            let expected = if sq.get(i, j).is_some() { 0.5 } else { 0.0 };
            assert!((t - expected).abs() < 1e-15);
        }
    }
    assert_eq!(
        eval_classical_coordinate(&sq, &ProjectionFrame::standard(2), 0, 2).unwrap(),
        ComplexMatrix::zeros(2, 2)
    );
    assert!(eval_classical_coordinate(&sq, &ProjectionFrame::standard(3), 0, 0).is_err());
    let p = sample_point(&f, 4).unwrap();
    let m = family_magic(&f, &p).unwrap();
    assert!(validate_magic(&m, 1e-10).passed);
    let pattern = crate::magic::rank_pattern(&m, 1e-10).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(pattern[i][j], u8::from(sq.get(i, j).is_some()));
        }
    }
}

#[test]
fn cyclic_coordinates() {
    let f = ModelFamily::CyclicFlat { k: 4 };
    let p = sample_point(&f, 8).unwrap();
    let ModelPoint::Frame(frame) = &p else { panic!() };
    // i = j picks P_N
    assert!(close(&eval_cyclic_coordinate(frame, 2, 2).unwrap(), frame.projection(3)) < 1e-15);
    let m = family_magic(&f, &p).unwrap();
    assert!(validate_magic(&m, 1e-10).passed);
    for i in 0..4 {
        for j in 0..4 {
            assert!(close(m.entry(i, j), m.entry((i + 1) % 4, (j + 1) % 4)) < 1e-15);
        }
    }
    // g = Σ_j w^{j−i} u_ij, independent of the row i
    let w = RootOfUnity::new(4);
    let row_generator = |i: usize| {
        let mut g = ComplexMatrix::zeros(4, 4);
        for j in 0..4 {
            g += eval_cyclic_coordinate(frame, i, j).unwrap() * w.pow(j as i64 - i as i64);
        }
        g
    };
    let g = eval_generator(&f, &p, 0, 0).unwrap();
    for i in 0..4 {
        assert!(close(&row_generator(i), &g) < 1e-10);
    }
    // spectral projections of g recover the frame
    for x in 0..4 {
        let lambda = w.pow(x as i64 + 1);
        let mut proj = ComplexMatrix::identity(4, 4);
        for y in 0..4 {
            if y != x {
                let mu = w.pow(y as i64 + 1);
                proj = proj * (&g - ComplexMatrix::identity(4, 4) * mu) / (lambda - mu);
            }
        }
        assert!(close(&proj, frame.projection(x)) < 1e-10);
    }
}

#[test]
fn block_models_have_block_rank_pattern() {
    let f = ModelFamily::FreeProduct { k: 2, m: 2 };
    let p = sample_point(&f, 6).unwrap();
    let m = family_magic(&f, &p).unwrap();
    assert!(validate_magic(&m, 1e-10).passed);
    let pattern = crate::magic::rank_pattern(&m, 1e-10).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(pattern[i][j], u8::from(i / 2 == j / 2));
        }
    }
    for f in families() {
        let p = sample_point(&f, 7).unwrap();
        assert!(validate_magic(&family_magic(&f, &p).unwrap(), 1e-10).passed, "{f:?}");
    }
}

#[test]
fn generator_indices_checked() {
    let f = ModelFamily::FreeProduct { k: 3, m: 2 };
    let p = sample_point(&f, 0).unwrap();
    assert!(eval_generator(&f, &p, 2, 0).is_err());
    assert!(eval_generator(&f, &p, 0, 1).is_err());
    let g = ModelFamily::FreeProductOfDirectProducts {
        k: 3,
        parts: vec![2, 1],
    };
    let q = sample_point(&g, 0).unwrap();
    assert!(eval_generator(&g, &q, 0, 1).is_ok());
    assert!(eval_generator(&g, &q, 1, 1).is_err());
    assert!(eval_generator(&f, &q, 0, 0).is_err());
}

#[test]
fn direct_product_generators_commute_within_part() {
    let f = ModelFamily::FreeProductOfDirectProducts {
        k: 3,
        parts: vec![2, 1],
    };
    let p = sample_point(&f, 12).unwrap();
    let a = eval_generator(&f, &p, 0, 0).unwrap();
    let b = eval_generator(&f, &p, 0, 1).unwrap();
    let c = eval_generator(&f, &p, 1, 0).unwrap();
    assert!(operator_norm(&(&a * &b - &b * &a)) < 1e-12);
    assert!(operator_norm(&(&a * &c - &c * &a)) > 1e-3);
}

#[test]
fn induced_family_words() {
    let s3 = PermutationGroup::symmetric(3).unwrap();
    let a3 = generate_group(&[Permutation::from_cycles(3, &[&[1, 2, 3]]).unwrap()], 10).unwrap();
    let f = ModelFamily::InducedVirtuallyAbelian(InducedModel::new(s3, a3).unwrap());
    let gens = f.generator_count().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let p = sample_point_with(&f, &mut rng).unwrap();
        let raw = random_raw(gens, 6, 5, &mut rng);
        let w = canonical_word(&f, &raw).unwrap();
        let closed = word_trace(&f, &p, &w).unwrap();
        let direct = normalized_trace(&eval_word(&f, &p, &w).unwrap());
        assert!((closed - direct).norm() < 1e-12);
        assert!(close(&eval_word(&f, &p, &w).unwrap(), &eval_raw(&f, &p, &raw)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_idempotent(
        family in 0usize..8,
        raw in prop::collection::vec((0usize..2, -9i64..9), 0..10),
    ) {
        let f = &families()[family];
        let raw: Vec<(usize, i64)> = raw.into_iter().map(|(g, e)| (g % f.generator_count().unwrap(), e)).collect();
        let w = canonical_word(f, &raw).unwrap();
        let flat: Vec<(usize, i64)> = w.letters().iter().map(|&(g, e)| (g, e as i64)).collect();
        prop_assert_eq!(canonical_word(f, &flat).unwrap(), w);
    }

    #[test]
    fn canonical_form_respects_products(
        family in 0usize..8,
        a in prop::collection::vec((0usize..3, -9i64..9), 0..6),
        b in prop::collection::vec((0usize..3, -9i64..9), 0..6),
    ) {
        let f = &families()[family];
        let gens = f.generator_count().unwrap();
        let fix = |v: Vec<(usize, i64)>| v.into_iter().map(|(g, e)| (g % gens, e)).collect::<Vec<_>>();
        let (a, b) = (fix(a), fix(b));
        let wa = canonical_word(f, &a).unwrap();
        let wb = canonical_word(f, &b).unwrap();
        let mut flat: Vec<(usize, i64)> = wa.letters().iter().map(|&(g, e)| (g, e as i64)).collect();
        flat.extend(wb.letters().iter().map(|&(g, e)| (g, e as i64)));
        let mut joined = a.clone();
        joined.extend(b);
        prop_assert_eq!(canonical_word(f, &flat).unwrap(), canonical_word(f, &joined).unwrap());
    }
}
