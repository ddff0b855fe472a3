//! Explicit quasi-flat model families, their random points and word traces.

mod induced;
mod words;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latin::SparseLatinSquare;
use crate::magic::{
    assemble_block_magic, frame_from_unitary, haar_unitary, normalized_trace, unitarity_defect, ComplexMatrix,
    MatrixJson, NumericMagicUnitary, ProjectionFrame,
};
use crate::perm::Permutation;
use crate::tol;

pub use induced::{Character, InducedModel};
pub use words::{canonical_word, parse_raw_word, raw_words, Letter, NormalForm, ReducedWord, ShiftedLetter, Syllable};

/// `exp(2πi/K)` and its powers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOfUnity {
    order: usize,
}

impl RootOfUnity {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "root of unity of order zero");
        RootOfUnity { order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> Complex64 {
        self.pow(1)
    }

    /// `w^k`, reduced mod `K` first so large exponents stay exact.
    pub fn pow(&self, k: i64) -> Complex64 {
        let r = k.rem_euclid(self.order as i64);
        Complex64::from_polar(1.0, 2.0 * PI * r as f64 / self.order as f64)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ModelFamily {
    CyclicFlat { k: usize },
    FreeProduct { k: usize, m: usize },
    FreeProductOfDirectProducts { k: usize, parts: Vec<usize> },
    Amalgamated { k: usize, l: usize, r: usize, m: usize },
    CommutingPowers { k: usize, l: usize, r: usize, m: usize },
    Classical { square: SparseLatinSquare },
    InducedVirtuallyAbelian(InducedModel),
}

impl ModelFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFamily(msg));
        match self {
            ModelFamily::CyclicFlat { k } if *k < 1 => bad("K must be positive".into()),
            ModelFamily::FreeProduct { k, m } if *k < 1 || *m < 1 => bad("K and M must be positive".into()),
            ModelFamily::FreeProductOfDirectProducts { k, parts } => {
                if *k < 1 || parts.is_empty() || parts.contains(&0) {
                    bad("K and every part size must be positive".into())
                } else {
                    Ok(())
                }
            }
            ModelFamily::Amalgamated { k, l, r, m } | ModelFamily::CommutingPowers { k, l, r, m } => {
                if *l < 1 || *r < 1 || *m < 1 {
                    bad("L, R and M must be positive".into())
                } else if l * r != *k {
                    bad(format!("K = {k} is not L·R = {l}·{r}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Matrix size of the model.
    pub fn dimension(&self) -> usize {
        match self {
            ModelFamily::CyclicFlat { k }
            | ModelFamily::FreeProduct { k, .. }
            | ModelFamily::FreeProductOfDirectProducts { k, .. }
            | ModelFamily::Amalgamated { k, .. }
            | ModelFamily::CommutingPowers { k, .. } => *k,
            ModelFamily::Classical { square } => square.symbols(),
            ModelFamily::InducedVirtuallyAbelian(m) => m.index(),
        }
    }

    /// Order of each generator for the cyclic-type families.
    pub fn order(&self) -> Option<usize> {
        match self {
            ModelFamily::CyclicFlat { k }
            | ModelFamily::FreeProduct { k, .. }
            | ModelFamily::FreeProductOfDirectProducts { k, .. }
            | ModelFamily::Amalgamated { k, .. }
            | ModelFamily::CommutingPowers { k, .. } => Some(*k),
            _ => None,
        }
    }

    /// Number of group generators of the dual group.
    pub fn generator_count(&self) -> Result<usize> {
        match self {
            ModelFamily::CyclicFlat { .. } => Ok(1),
            ModelFamily::FreeProduct { m, .. }
            | ModelFamily::Amalgamated { m, .. }
            | ModelFamily::CommutingPowers { m, .. } => Ok(*m),
            ModelFamily::FreeProductOfDirectProducts { parts, .. } => Ok(parts.iter().sum()),
            ModelFamily::InducedVirtuallyAbelian(model) => Ok(model.group().generators().len()),
            ModelFamily::Classical { .. } => Err(Error::Unsupported("classical models are not group duals".into())),
        }
    }

    fn root(&self) -> RootOfUnity {
        RootOfUnity::new(self.order().unwrap_or(1))
    }

    /// `(block, index within block)` of a global generator index.
    pub fn locate_generator(&self, g: usize) -> Result<(usize, usize)> {
        let total = self.generator_count()?;
        if g >= total {
            return Err(Error::IndexOutOfRange {
                index: g,
                degree: total,
            });
        }
        if let ModelFamily::FreeProductOfDirectProducts { parts, .. } = self {
            let mut offset = 0;
            for (p, &size) in parts.iter().enumerate() {
                if g < offset + size {
                    return Ok((p, g - offset));
                }
                offset += size;
            }
        }
        Ok((g, 0))
    }

    fn global_generator(&self, block: usize, s: usize) -> Result<usize> {
        match self {
            ModelFamily::FreeProductOfDirectProducts { parts, .. } => {
                let size = *parts.get(block).ok_or(Error::IndexOutOfRange {
                    index: block,
                    degree: parts.len(),
                })?;
                if s >= size {
                    return Err(Error::IndexOutOfRange { index: s, degree: size });
                }
                Ok(parts[..block].iter().sum::<usize>() + s)
            }
            _ => {
                if s != 0 {
                    return Err(Error::IndexOutOfRange { index: s, degree: 1 });
                }
                let total = self.generator_count()?;
                if block >= total {
                    return Err(Error::IndexOutOfRange {
                        index: block,
                        degree: total,
                    });
                }
                Ok(block)
            }
        }
    }
}

/// One unitary and `M_p` permutations of `1..K` for a direct-product part.
#[derive(Clone, Debug)]
pub struct DirectProductPoint {
    pub unitary: ComplexMatrix,
    pub permutations: Vec<Permutation>,
}

/// A block-structured unitary together with its column-block permutation.
#[derive(Clone, Debug)]
pub struct CommutingPowersPoint {
    pub unitary: ComplexMatrix,
    pub sigma: Permutation,
}

#[derive(Clone, Debug)]
pub enum ModelPoint {
    /// `CyclicFlat` and `Classical`.
    Frame(ProjectionFrame),
    /// `FreeProduct` and `Amalgamated`.
    Unitaries(Vec<ComplexMatrix>),
    DirectProducts(Vec<DirectProductPoint>),
    CommutingPowers(Vec<CommutingPowersPoint>),
    /// Index into [`InducedModel::characters`].
    Character(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PointRepr {
    Frame { frame: ProjectionFrame },
    Unitaries { unitaries: Vec<MatrixJson> },
    DirectProducts { parts: Vec<PartRepr> },
    CommutingPowers { blocks: Vec<BlockRepr> },
    Character { index: usize },
}

#[derive(Serialize, Deserialize)]
struct PartRepr {
    unitary: MatrixJson,
    permutations: Vec<Permutation>,
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    unitary: MatrixJson,
    sigma: Permutation,
}

impl Serialize for ModelPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            ModelPoint::Frame(f) => PointRepr::Frame { frame: f.clone() },
            ModelPoint::Unitaries(us) => PointRepr::Unitaries {
                unitaries: us.iter().cloned().map(MatrixJson).collect(),
            },
            ModelPoint::DirectProducts(parts) => PointRepr::DirectProducts {
                parts: parts
                    .iter()
                    .map(|p| PartRepr {
                        unitary: MatrixJson(p.unitary.clone()),
                        permutations: p.permutations.clone(),
                    })
                    .collect(),
            },
            ModelPoint::CommutingPowers(blocks) => PointRepr::CommutingPowers {
                blocks: blocks
                    .iter()
                    .map(|b| BlockRepr {
                        unitary: MatrixJson(b.unitary.clone()),
                        sigma: b.sigma.clone(),
                    })
                    .collect(),
            },
            ModelPoint::Character(index) => PointRepr::Character { index: *index },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match PointRepr::deserialize(d)? {
            PointRepr::Frame { frame } => ModelPoint::Frame(frame),
            PointRepr::Unitaries { unitaries } => ModelPoint::Unitaries(unitaries.into_iter().map(|m| m.0).collect()),
            PointRepr::DirectProducts { parts } => ModelPoint::DirectProducts(
                parts
                    .into_iter()
                    .map(|p| DirectProductPoint {
                        unitary: p.unitary.0,
                        permutations: p.permutations,
                    })
                    .collect(),
            ),
            PointRepr::CommutingPowers { blocks } => ModelPoint::CommutingPowers(
                blocks
                    .into_iter()
                    .map(|b| CommutingPowersPoint {
                        unitary: b.unitary.0,
                        sigma: b.sigma,
                    })
                    .collect(),
            ),
            PointRepr::Character { index } => ModelPoint::Character(index),
        })
    }
}

fn mismatch<T>(what: &str) -> Result<T> {
    Err(Error::PointMismatch(what.into()))
}

fn check_unitary(u: &ComplexMatrix, k: usize) -> Result<()> {
    if u.nrows() != k || u.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: u.nrows().max(u.ncols()),
        });
    }
    let d = unitarity_defect(u);
    if d > tol::VALIDATION {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

/// Largest entry of `u` outside the `V_b` blocks prescribed for column group
/// `c`, where column group `c` (columns `c, c+L, …`) must span `V_{block(c)}`.
fn block_leak(u: &ComplexMatrix, l: usize, r: usize, block: impl Fn(usize) -> usize) -> f64 {
    let mut leak: f64 = 0.0;
    for col in 0..l * r {
        let b = block(col % l);
        for row in 0..l * r {
            if row / r != b {
                leak = leak.max(u[(row, col)].norm());
            }
        }
    }
    leak
}

/// Checks unitarity and the family's block structure.
pub fn validate_point(family: &ModelFamily, point: &ModelPoint) -> Result<()> {
    family.validate()?;
    let k = family.dimension();
    match (family, point) {
        (ModelFamily::CyclicFlat { .. } | ModelFamily::Classical { .. }, ModelPoint::Frame(f)) => {
            if f.dimension() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: f.dimension(),
                });
            }
            if f.defect() > tol::VALIDATION {
                return mismatch("frame is not a complete orthogonal family");
            }
            Ok(())
        }
        (ModelFamily::FreeProduct { m, .. }, ModelPoint::Unitaries(us)) => {
            if us.len() != *m {
                return mismatch("one unitary per generator");
            }
            us.iter().try_for_each(|u| check_unitary(u, k))
        }
        (ModelFamily::Amalgamated { l, r, m, .. }, ModelPoint::Unitaries(us)) => {
            if us.len() != *m {
                return mismatch("one unitary per generator");
            }
            for u in us {
                check_unitary(u, k)?;
                if block_leak(u, *l, *r, |t| t) > tol::VALIDATION {
                    return mismatch("column group t must span V_t");
                }
            }
            Ok(())
        }
        (ModelFamily::FreeProductOfDirectProducts { parts, .. }, ModelPoint::DirectProducts(ps)) => {
            if ps.len() != parts.len() {
                return mismatch("one entry per part");
            }
            for (p, &size) in ps.iter().zip(parts) {
                check_unitary(&p.unitary, k)?;
                if p.permutations.len() != size || p.permutations.iter().any(|s| s.degree() != k) {
                    return mismatch("part needs one permutation of 1..K per generator");
                }
            }
            Ok(())
        }
        (ModelFamily::CommutingPowers { l, r, m, .. }, ModelPoint::CommutingPowers(bs)) => {
            if bs.len() != *m {
                return mismatch("one block per generator");
            }
            for b in bs {
                check_unitary(&b.unitary, k)?;
                if b.sigma.degree() != *l {
                    return mismatch("sigma must permute 1..L");
                }
                let inv = b.sigma.inverse();
                if block_leak(&b.unitary, *l, *r, |t| inv.apply(t)) > tol::VALIDATION {
                    return mismatch("column group t must span V_{sigma^-1(t)}");
                }
            }
            Ok(())
        }
        (ModelFamily::InducedVirtuallyAbelian(model), ModelPoint::Character(i)) => model.character(*i).map(|_| ()),
        _ => mismatch("point kind does not match family"),
    }
}

/// Haar unitary restricted to `X_{K,L}`, with column group `c` spanning
/// `V_{block(c)}`; every block is an independent Haar `R × R` unitary.
fn block_unitary<G: Rng + ?Sized>(l: usize, r: usize, block: impl Fn(usize) -> usize, rng: &mut G) -> ComplexMatrix {
    let k = l * r;
    let mut u = ComplexMatrix::zeros(k, k);
    for c in 0..l {
        let b = block(c);
        let h = haar_unitary(r, rng);
        for a in 0..r {
            for s in 0..r {
                u[(b * r + a, c + s * l)] = h[(a, s)];
            }
        }
    }
    u
}

fn random_permutation<G: Rng + ?Sized>(n: usize, rng: &mut G) -> Permutation {
    let mut images: Vec<usize> = (0..n).collect();
    images.shuffle(rng);
    Permutation::from_images(images).expect("shuffle is a bijection")
}

/// A random point drawn with a generator seeded from `seed`.
pub fn sample_point(family: &ModelFamily, seed: u64) -> Result<ModelPoint> {
    sample_point_with(family, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// A random point: Haar unitaries, uniform permutations, uniform characters.
pub fn sample_point_with<G: Rng + ?Sized>(family: &ModelFamily, rng: &mut G) -> Result<ModelPoint> {
    family.validate()?;
    let point = match family {
        ModelFamily::CyclicFlat { k } => ModelPoint::Frame(frame_from_unitary(&haar_unitary(*k, rng))?),
        ModelFamily::Classical { square } => {
            ModelPoint::Frame(frame_from_unitary(&haar_unitary(square.symbols(), rng))?)
        }
        ModelFamily::FreeProduct { k, m } => ModelPoint::Unitaries((0..*m).map(|_| haar_unitary(*k, rng)).collect()),
        ModelFamily::FreeProductOfDirectProducts { k, parts } => ModelPoint::DirectProducts(
            parts
                .iter()
                .map(|&size| DirectProductPoint {
                    unitary: haar_unitary(*k, rng),
                    permutations: (0..size).map(|_| random_permutation(*k, rng)).collect(),
                })
                .collect(),
        ),
        ModelFamily::Amalgamated { l, r, m, .. } => {
            ModelPoint::Unitaries((0..*m).map(|_| block_unitary(*l, *r, |t| t, rng)).collect())
        }
        ModelFamily::CommutingPowers { l, r, m, .. } => ModelPoint::CommutingPowers(
            (0..*m)
                .map(|_| {
                    let sigma = random_permutation(*l, rng);
                    let inv = sigma.inverse();
                    let unitary = block_unitary(*l, *r, |t| inv.apply(t), rng);
                    CommutingPowersPoint { unitary, sigma }
                })
                .collect(),
        ),
        ModelFamily::InducedVirtuallyAbelian(model) => {
            ModelPoint::Character(rng.random_range(0..model.characters().len()))
        }
    };
    Ok(point)
}

/// `W^k` with `W = diag(w, w², …, w^K)`, or `W_σ^k = diag(w^{σ(1)}, …)^k`.
pub fn diagonal_w(k_order: usize, exponent: i64, sigma: Option<&Permutation>) -> ComplexMatrix {
    let w = RootOfUnity::new(k_order);
    let diag: Vec<Complex64> = (0..k_order)
        .map(|i| {
            let label = sigma.map_or(i, |s| s.apply(i)) as i64 + 1;
            w.pow(label * exponent)
        })
        .collect();
    ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// `Σ_j c_j P_{u_j}` over the columns `u_j` of `u`.
fn projection_sum(u: &ComplexMatrix, coeff: impl Fn(usize) -> Complex64) -> ComplexMatrix {
    let k = u.nrows();
    let mut out = ComplexMatrix::zeros(k, k);
    for j in 0..u.ncols() {
        let col = u.column(j);
        out += (&col * col.adjoint()) * coeff(j);
    }
    out
}

fn frame_sum(frame: &ProjectionFrame, coeff: impl Fn(usize) -> Complex64) -> ComplexMatrix {
    let k = frame.dimension();
    let mut out = ComplexMatrix::zeros(k, k);
    for x in 0..k {
        out += frame.projection(x) * coeff(x);
    }
    out
}

/// The unitary attached to global generator `g` and its eigenvalue labels:
/// `π(g) = Σ_j w^{label(j)} P_{u_j}` with `label(j) ∈ 1..=K`.
fn generator_data<'a>(family: &ModelFamily, point: &'a ModelPoint, g: usize) -> Result<(&'a ComplexMatrix, Vec<i64>)> {
    let (block, s) = family.locate_generator(g)?;
    let k = family.dimension();
    let natural = || (1..=k as i64).collect::<Vec<_>>();
    match (family, point) {
        (ModelFamily::FreeProduct { .. } | ModelFamily::Amalgamated { .. }, ModelPoint::Unitaries(us)) => {
            let u = us.get(block).ok_or(Error::PointMismatch("missing unitary".into()))?;
            Ok((u, natural()))
        }
        (ModelFamily::CommutingPowers { .. }, ModelPoint::CommutingPowers(bs)) => {
            let b = bs.get(block).ok_or(Error::PointMismatch("missing block".into()))?;
            Ok((&b.unitary, natural()))
        }
        (ModelFamily::FreeProductOfDirectProducts { .. }, ModelPoint::DirectProducts(ps)) => {
            let p = ps.get(block).ok_or(Error::PointMismatch("missing part".into()))?;
            let sigma = p
                .permutations
                .get(s)
                .ok_or(Error::PointMismatch("missing permutation".into()))?;
            Ok((&p.unitary, (0..k).map(|j| sigma.apply(j) as i64 + 1).collect()))
        }
        _ => mismatch("point kind does not match family"),
    }
}

/// `π(g)` for generator `s` of block `block`.
pub fn eval_generator(family: &ModelFamily, point: &ModelPoint, block: usize, s: usize) -> Result<ComplexMatrix> {
    let g = family.global_generator(block, s)?;
    generator_power(family, point, g, 1)
}

/// `π(g)^e` for a global generator index, as a spectral sum.
pub fn generator_power(family: &ModelFamily, point: &ModelPoint, g: usize, e: i64) -> Result<ComplexMatrix> {
    let w = family.root();
    match (family, point) {
        (ModelFamily::CyclicFlat { .. }, ModelPoint::Frame(frame)) => {
            family.locate_generator(g)?;
            Ok(frame_sum(frame, |x| w.pow((x as i64 + 1) * e)))
        }
        (ModelFamily::InducedVirtuallyAbelian(model), ModelPoint::Character(i)) => {
            let gens = model.group().generators();
            let base = gens.get(g).ok_or(Error::IndexOutOfRange {
                index: g,
                degree: gens.len(),
            })?;
            let x = if e < 0 { base.inverse() } else { base.clone() };
            let mut acc = Permutation::identity(model.group().degree());
            for _ in 0..e.unsigned_abs() {
                acc = acc.compose(&x)?;
            }
            model.induced_rep(model.character(*i)?, &acc)
        }
        (ModelFamily::Classical { .. }, _) => Err(Error::Unsupported("classical models have no generators".into())),
        _ => {
            let (u, labels) = generator_data(family, point, g)?;
            Ok(projection_sum(u, |j| w.pow(labels[j] * e)))
        }
    }
}

/// Ordered product of the generator powers spelling `word`.
pub fn eval_word(family: &ModelFamily, point: &ModelPoint, word: &ReducedWord) -> Result<ComplexMatrix> {
    if let (ModelFamily::InducedVirtuallyAbelian(model), ModelPoint::Character(i), NormalForm::Element(x)) =
        (family, point, word.form())
    {
        return model.induced_rep(model.character(*i)?, x);
    }
    if matches!(word.form(), NormalForm::Element(_)) {
        return mismatch("group-element word for a non-induced family");
    }
    let k = family.dimension();
    let mut acc = ComplexMatrix::identity(k, k);
    for &(g, e) in word.letters() {
        acc *= generator_power(family, point, g, e as i64)?;
    }
    Ok(acc)
}

/// Normalized trace of `π(γ)` at `point`, by the family's closed form.
pub fn word_trace(family: &ModelFamily, point: &ModelPoint, word: &ReducedWord) -> Result<Complex64> {
    if word.is_identity() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = family.dimension();
    let w = family.root();
    match (family, point, word.form()) {
        (ModelFamily::CyclicFlat { .. }, ModelPoint::Frame(frame), _) => {
            let total: i64 = word.letters().iter().map(|&(_, e)| e as i64).sum();
            let s: Complex64 = (0..k)
                .map(|x| w.pow((x as i64 + 1) * total) * frame.projection(x).trace())
                .sum();
            Ok(s / k as f64)
        }
        (ModelFamily::FreeProduct { .. }, ModelPoint::Unitaries(us), _) => {
            let mut acc = ComplexMatrix::identity(k, k);
            for &(g, e) in word.letters() {
                let u = &us[g];
                acc = acc * u * diagonal_w(k, e as i64, None) * u.adjoint();
            }
            Ok(normalized_trace(&acc))
        }
        (
            ModelFamily::FreeProductOfDirectProducts { .. },
            ModelPoint::DirectProducts(ps),
            NormalForm::DirectProducts(syls),
        ) => {
            let mut acc = ComplexMatrix::identity(k, k);
            for syl in syls {
                let p = &ps[syl.part];
                let mut d = ComplexMatrix::identity(k, k);
                for (s, &e) in syl.exponents.iter().enumerate() {
                    if e != 0 {
                        d *= diagonal_w(k, e as i64, Some(&p.permutations[s]));
                    }
                }
                acc = acc * &p.unitary * d * p.unitary.adjoint();
            }
            Ok(normalized_trace(&acc))
        }
        (ModelFamily::Amalgamated { l, r, .. }, ModelPoint::Unitaries(us), _) => {
            let sigmas: Vec<Permutation> = vec![Permutation::identity(*l); us.len()];
            let blocks: Vec<(&ComplexMatrix, &Permutation)> = us.iter().zip(&sigmas).collect();
            Ok(block_trace(*l, *r, &blocks, word.letters()))
        }
        (ModelFamily::CommutingPowers { l, r, .. }, ModelPoint::CommutingPowers(bs), _) => {
            let blocks: Vec<(&ComplexMatrix, &Permutation)> = bs.iter().map(|b| (&b.unitary, &b.sigma)).collect();
            Ok(block_trace(*l, *r, &blocks, word.letters()))
        }
        (ModelFamily::InducedVirtuallyAbelian(model), ModelPoint::Character(i), NormalForm::Element(x)) => {
            Ok(model.induced_character(model.character(*i)?, x)? / model.index() as f64)
        }
        (ModelFamily::Classical { .. }, _, _) => Err(Error::Unsupported("classical models have no word traces".into())),
        _ => mismatch("point or word does not match family"),
    }
}

/// Trace of a word through the `V_t` decomposition: on block `b`,
/// `π(g_i)^k = w^{(σ_i(b)+1)k} U^i(b) D_k U^i(b)*` with `D_k = diag(w^{Lks})`.
fn block_trace(l: usize, r: usize, blocks: &[(&ComplexMatrix, &Permutation)], letters: &[(usize, usize)]) -> Complex64 {
    let k = l * r;
    let w = RootOfUnity::new(k);
    let mut total = Complex64::new(0.0, 0.0);
    for b in 0..l {
        let mut acc = DMatrix::<Complex64>::identity(r, r);
        let mut phase = Complex64::new(1.0, 0.0);
        for &(g, e) in letters {
            let (u, sigma) = blocks[g];
            let c = sigma.apply(b);
            let sub = DMatrix::from_fn(r, r, |a, s| u[(b * r + a, c + s * l)]);
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(r, |s, _| w.pow((l * s) as i64 * e as i64)));
            phase *= w.pow((c as i64 + 1) * e as i64);
            acc = acc * &sub * d * sub.adjoint();
        }
        total += phase * acc.trace();
    }
    total / k as f64
}

/// `P_{L_ij}`, or zero where the square has `*`.
pub fn eval_classical_coordinate(
    square: &SparseLatinSquare,
    frame: &ProjectionFrame,
    i: usize,
    j: usize,
) -> Result<ComplexMatrix> {
    let k = square.symbols();
    if frame.dimension() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: frame.dimension(),
        });
    }
    let n = square.size();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange {
            index: i.max(j),
            degree: n,
        });
    }
    Ok(match square.get(i, j) {
        Some(x) => frame.projection(x).clone(),
        None => ComplexMatrix::zeros(k, k),
    })
}

/// `P_{j−i mod N}` with zero-based frame index `(j − i + N − 1) mod N`.
pub fn eval_cyclic_coordinate(frame: &ProjectionFrame, i: usize, j: usize) -> Result<ComplexMatrix> {
    let n = frame.dimension();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange {
            index: i.max(j),
            degree: n,
        });
    }
    Ok(frame.projection((j + 2 * n - i - 1) % n).clone())
}

/// Spectral projections of `π(g)`: entry `x` belongs to eigenvalue `w^{x+1}`.
pub fn generator_frame(family: &ModelFamily, point: &ModelPoint, g: usize) -> Result<ProjectionFrame> {
    if let (ModelFamily::CyclicFlat { .. }, ModelPoint::Frame(frame)) = (family, point) {
        family.locate_generator(g)?;
        return Ok(frame.clone());
    }
    let (u, labels) = match family {
        ModelFamily::FreeProduct { .. }
        | ModelFamily::FreeProductOfDirectProducts { .. }
        | ModelFamily::Amalgamated { .. }
        | ModelFamily::CommutingPowers { .. } => generator_data(family, point, g)?,
        _ => return Err(Error::Unsupported("no cyclic generator frames".into())),
    };
    let k = u.nrows();
    let mut projections = vec![ComplexMatrix::zeros(k, k); k];
    for (j, &label) in labels.iter().enumerate() {
        let col = u.column(j);
        projections[(label - 1) as usize] = &col * col.adjoint();
    }
    ProjectionFrame::from_projections(projections)
}

/// The magic unitary realized by a model point: the Latin-square grid for
/// classical families, and for cyclic-type families one circulant block per
/// generator built from its spectral projections.
pub fn family_magic(family: &ModelFamily, point: &ModelPoint) -> Result<NumericMagicUnitary> {
    if let (ModelFamily::Classical { square }, ModelPoint::Frame(frame)) = (family, point) {
        let n = square.size();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(eval_classical_coordinate(square, frame, i, j)?);
            }
        }
        return NumericMagicUnitary::new(n, square.symbols(), entries);
    }
    validate_point(family, point)?;
    let k = family.dimension();
    let blocks = (0..family.generator_count()?)
        .map(|g| {
            let frame = generator_frame(family, point, g)?;
            NumericMagicUnitary::from_fn(k, k, |i, j| {
                eval_cyclic_coordinate(&frame, i, j).expect("indices within the frame")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_block_magic(&blocks)
}

#[cfg(test)]
mod tests;
