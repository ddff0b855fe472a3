//! Finite permutation groups with explicit element closure.
//!
//! Points are zero-based internally; every serialized form (JSON, CLI,
//! Python) is one-based. Composition is `(p∘q)(x) = p(q(x))` everywhere.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default closure cap; desk-scale groups stay far below it.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Self {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from zero-based images.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(images));
            }
            seen[x] = true;
        }
        Ok(Self { images })
    }

    /// Builds a permutation from one-based images, e.g. `[2, 1, 3]`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(images.to_vec()));
        }
        Self::from_images(images.iter().map(|&x| x - 1).collect())
            .map_err(|_| Error::InvalidPermutation(images.to_vec()))
    }

    /// Builds a permutation from one-based disjoint cycles.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..degree).collect();
        for cycle in cycles {
            for (t, &a) in cycle.iter().enumerate() {
                let b = cycle[(t + 1) % cycle.len()];
                if a == 0 || b == 0 || a > degree || b > degree {
                    return Err(Error::IndexOutOfRange {
                        index: a.max(b),
                        degree,
                    });
                }
                images[a - 1] = b - 1;
            }
        }
        Self::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of the zero-based point `x`.
    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|&x| x + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (x, &y) in self.images.iter().enumerate() {
            inv[y] = x;
        }
        Self { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| x == y)
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Self) -> Self {
        Self {
            images: other.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    /// `g h g⁻¹`.
    pub fn conjugate_by(&self, g: &Self) -> Result<Self> {
        g.compose(self)?.compose(&g.inverse())
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.images[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.images[x];
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }
}

pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation> {
    p.compose(q)
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({})", self)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (t, x) in cycle.iter().enumerate() {
                if t > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&images).map_err(serde::de::Error::custom)
    }
}

/// A finite permutation group with its materialized element set.
#[derive(Clone)]
pub struct PermutationGroup {
    degree: usize,
    generators: Vec<Permutation>,
    elements: Vec<Permutation>,
    lookup: HashMap<Permutation, usize>,
}

/// Breadth-first closure of `generators` under composition.
pub fn generate_group(generators: &[Permutation], cap: usize) -> Result<PermutationGroup> {
    let first = generators.first().ok_or(Error::NoGenerators)?;
    let degree = first.degree();
    for g in generators {
        if g.degree() != degree {
            return Err(Error::DegreeMismatch(degree, g.degree()));
        }
    }
    let id = Permutation::identity(degree);
    let mut seen: HashSet<Permutation> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(id.clone());
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = x.compose_unchecked(g);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    let mut elements: Vec<Permutation> = seen.into_iter().collect();
    elements.sort();
    Ok(PermutationGroup::from_parts(degree, generators.to_vec(), elements))
}

impl PermutationGroup {
    fn from_parts(degree: usize, generators: Vec<Permutation>, elements: Vec<Permutation>) -> Self {
        let lookup = elements.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Self {
            degree,
            generators,
            elements,
            lookup,
        }
    }

    pub fn trivial(degree: usize) -> Self {
        let id = Permutation::identity(degree);
        Self::from_parts(degree, vec![id.clone()], vec![id])
    }

    pub fn symmetric(degree: usize) -> Result<Self> {
        let mut gens = vec![Permutation::identity(degree)];
        if degree >= 2 {
            gens = vec![
                Permutation::from_cycles(degree, &[&[1, 2]])?,
                Permutation::from_cycles(degree, &[&(1..=degree).collect::<Vec<_>>()])?,
            ];
        }
        generate_group(&gens, DEFAULT_CAP)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Elements in sorted order.
    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.lookup.contains_key(p)
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.lookup.get(p).copied()
    }

    pub fn is_subgroup_of(&self, other: &PermutationGroup) -> bool {
        self.degree == other.degree && self.elements.iter().all(|p| other.contains(p))
    }

    pub fn is_transitive(&self) -> bool {
        orbit_partition(self).len() == 1
    }

    pub fn is_abelian(&self) -> bool {
        self.generators.iter().all(|a| {
            self.generators
                .iter()
                .all(|b| a.compose_unchecked(b) == b.compose_unchecked(a))
        })
    }

    /// Normality via conjugation of generators, sufficient for finite groups.
    pub fn is_normal_in(&self, g: &PermutationGroup) -> bool {
        g.generators.iter().all(|x| {
            self.generators
                .iter()
                .all(|h| self.contains(&x.compose_unchecked(h).compose_unchecked(&x.inverse())))
        })
    }
}

impl fmt::Debug for PermutationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PermutationGroup")
            .field("degree", &self.degree)
            .field("order", &self.order())
            .field("generators", &self.generators)
            .finish()
    }
}

impl PartialEq for PermutationGroup {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.elements == other.elements
    }
}

impl Eq for PermutationGroup {}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GroupRepr {
    Full {
        degree: Option<usize>,
        generators: Vec<Permutation>,
    },
    Bare(Vec<Permutation>),
}

impl Serialize for PermutationGroup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupRepr::Full {
            degree: Some(self.degree),
            generators: self.generators.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PermutationGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (degree, generators) = match GroupRepr::deserialize(d)? {
            GroupRepr::Full { degree, generators } => (degree, generators),
            GroupRepr::Bare(generators) => (None, generators),
        };
        if generators.is_empty() {
            return match degree {
                Some(n) => Ok(PermutationGroup::trivial(n)),
                None => Err(serde::de::Error::custom("group needs generators or a degree")),
            };
        }
        if let Some(n) = degree {
            if generators.iter().any(|g| g.degree() != n) {
                return Err(serde::de::Error::custom("generator degree mismatch"));
            }
        }
        generate_group(&generators, DEFAULT_CAP).map_err(serde::de::Error::custom)
    }
}

/// Orbits of the natural action, each sorted, ordered by least point.
pub fn orbit_partition(group: &PermutationGroup) -> Vec<Vec<usize>> {
    let n = group.degree;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in &group.generators {
        for x in 0..n {
            let (a, b) = (find(&mut parent, x), find(&mut parent, g.apply(x)));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        blocks.entry(r).or_default().push(x);
    }
    blocks.into_values().collect()
}

/// Every subgroup of `group`, as joins of cyclic subgroups, sorted by order.
pub fn all_subgroups(group: &PermutationGroup) -> Result<Vec<PermutationGroup>> {
    let mut found: Vec<PermutationGroup> = Vec::new();
    let mut keys: HashSet<Vec<Permutation>> = HashSet::new();
    for g in group.elements() {
        let h = generate_group(std::slice::from_ref(g), group.order() + 1)?;
        if keys.insert(h.elements.clone()) {
            found.push(h);
        }
    }
    let mut frontier = 0;
    loop {
        let mut fresh = Vec::new();
        let len = found.len();
        for a in 0..len {
            for b in frontier.max(a + 1)..len {
                let mut gens = found[a].generators.clone();
                gens.extend(found[b].generators.iter().cloned());
                let h = generate_group(&gens, group.order() + 1)?;
                if keys.insert(h.elements.clone()) {
                    fresh.push(h);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        frontier = len;
        found.extend(fresh);
    }
    found.sort_by(|a, b| (a.order(), &a.elements).cmp(&(b.order(), &b.elements)));
    Ok(found)
}

/// A probability measure on a finite permutation group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupMeasure {
    degree: usize,
    weights: BTreeMap<Permutation, f64>,
}

const MASS_TOL: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct WeightRecord {
    perm: Permutation,
    weight: f64,
}

impl GroupMeasure {
    pub fn new(degree: usize, weights: impl IntoIterator<Item = (Permutation, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Permutation, f64> = BTreeMap::new();
        for (p, w) in weights {
            if p.degree() != degree {
                return Err(Error::DegreeMismatch(degree, p.degree()));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} at {p}")));
            }
            if w > 0.0 {
                *map.entry(p).or_insert(0.0) += w;
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total}")));
        }
        Ok(Self { degree, weights: map })
    }

    pub fn delta(p: &Permutation) -> Self {
        Self {
            degree: p.degree(),
            weights: BTreeMap::from([(p.clone(), 1.0)]),
        }
    }

    /// Uniform measure on a list of (not necessarily distinct) permutations.
    pub fn uniform_on(perms: &[Permutation]) -> Result<Self> {
        let first = perms.first().ok_or(Error::NoGenerators)?;
        let w = 1.0 / perms.len() as f64;
        Self::new(first.degree(), perms.iter().map(|p| (p.clone(), w)))
    }

    pub fn uniform(group: &PermutationGroup) -> Self {
        let w = 1.0 / group.order() as f64;
        Self {
            degree: group.degree,
            weights: group.elements.iter().map(|p| (p.clone(), w)).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn weight(&self, p: &Permutation) -> f64 {
        self.weights.get(p).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = &Permutation> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Permutation, f64)> {
        self.weights.iter().map(|(p, &w)| (p, w))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn to_records(&self) -> serde_json::Value {
        let records: Vec<WeightRecord> = self
            .weights
            .iter()
            .map(|(p, &w)| WeightRecord {
                perm: p.clone(),
                weight: w,
            })
            .collect();
        serde_json::to_value(records).expect("records serialize")
    }
}

impl Serialize for GroupMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_records().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<WeightRecord>::deserialize(d)?;
        let degree = records
            .first()
            .map(|r| r.perm.degree())
            .ok_or_else(|| serde::de::Error::custom("empty measure"))?;
        GroupMeasure::new(degree, records.into_iter().map(|r| (r.perm, r.weight))).map_err(serde::de::Error::custom)
    }
}

/// `(mu * nu)(g) = Σ_{hk = g} mu(h) nu(k)`.
pub fn convolve(mu: &GroupMeasure, nu: &GroupMeasure) -> Result<GroupMeasure> {
    if mu.degree != nu.degree {
        return Err(Error::DegreeMismatch(mu.degree, nu.degree));
    }
    let mut out: HashMap<Permutation, f64> = HashMap::new();
    for (h, a) in &mu.weights {
        for (k, b) in &nu.weights {
            *out.entry(h.compose_unchecked(k)).or_insert(0.0) += a * b;
        }
    }
    Ok(GroupMeasure {
        degree: mu.degree,
        weights: out.into_iter().collect(),
    })
}

/// Half the L¹ distance.
pub fn total_variation(mu: &GroupMeasure, nu: &GroupMeasure) -> Result<f64> {
    if mu.degree != nu.degree {
        return Err(Error::DegreeMismatch(mu.degree, nu.degree));
    }
    let keys: HashSet<&Permutation> = mu.weights.keys().chain(nu.weights.keys()).collect();
    Ok(0.5
        * keys
            .into_iter()
            .map(|p| (mu.weight(p) - nu.weight(p)).abs())
            .sum::<f64>())
}

/// Running Cesàro average `(1/k) Σ_{r=1..k} mu^{*r}` on the group generated
/// by the support of `mu`, stored densely over that group's elements.
pub struct CesaroWalk {
    group: PermutationGroup,
    steps: Vec<(usize, f64)>,
    power: Vec<f64>,
    sum: Vec<f64>,
    k: usize,
    table: Vec<Vec<usize>>,
}

impl CesaroWalk {
    pub fn new(mu: &GroupMeasure, cap: usize) -> Result<Self> {
        let support: Vec<Permutation> = mu.support().cloned().collect();
        let group = generate_group(&support, cap)?;
        let steps: Vec<(usize, f64)> = mu
            .iter()
            .map(|(p, w)| (group.index_of(p).expect("support lies in its closure"), w))
            .collect();
        let table = group
            .elements
            .iter()
            .map(|h| {
                steps
                    .iter()
                    .map(|&(s, _)| group.index_of(&h.compose_unchecked(&group.elements[s])).unwrap())
                    .collect()
            })
            .collect();
        let n = group.order();
        Ok(Self {
            group,
            steps,
            power: Vec::new(),
            sum: vec![0.0; n],
            k: 0,
            table,
        })
    }

    pub fn group(&self) -> &PermutationGroup {
        &self.group
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Advances to `k + 1` and returns the new `k`.
    pub fn step(&mut self) -> usize {
        let n = self.group.order();
        let next = if self.k == 0 {
            let mut v = vec![0.0; n];
            for &(s, w) in &self.steps {
                v[s] += w;
            }
            v
        } else {
            let mut v = vec![0.0; n];
            for (h, &a) in self.power.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (t, &(_, w)) in self.steps.iter().enumerate() {
                    v[self.table[h][t]] += a * w;
                }
            }
            v
        };
        for (acc, x) in self.sum.iter_mut().zip(&next) {
            *acc += x;
        }
        self.power = next;
        self.k += 1;
        self.k
    }

    /// Total variation between the current average and uniform on the group.
    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.group.order() as f64;
        let k = self.k.max(1) as f64;
        0.5 * self.sum.iter().map(|s| (s / k - u).abs()).sum::<f64>()
    }

    pub fn average(&self) -> GroupMeasure {
        let k = self.k.max(1) as f64;
        GroupMeasure {
            degree: self.group.degree,
            weights: self
                .group
                .elements
                .iter()
                .zip(&self.sum)
                .filter(|(_, &s)| s > 0.0)
                .map(|(p, &s)| (p.clone(), s / k))
                .collect(),
        }
    }
}

pub fn cesaro_average(mu: &GroupMeasure, k: usize) -> Result<GroupMeasure> {
    if k == 0 {
        return Err(Error::Parameter("Cesàro length must be at least 1".into()));
    }
    let mut walk = CesaroWalk::new(mu, DEFAULT_CAP)?;
    while walk.k() < k {
        walk.step();
    }
    Ok(walk.average())
}

/// A product of standard coordinates `u_{i₁j₁} ⋯ u_{iₖjₖ}`, zero-based pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordinateWord {
    pairs: Vec<(usize, usize)>,
}

impl CoordinateWord {
    pub fn new(pairs: Vec<(usize, usize)>, degree: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidWord("empty coordinate word".into()));
        }
        for &(i, j) in &pairs {
            let index = i.max(j);
            if index >= degree {
                return Err(Error::IndexOutOfRange { index, degree });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All words of length `1..=max_len` over a degree-`n` index set.
    pub fn all_up_to(degree: usize, max_len: usize) -> Vec<Self> {
        let coords: Vec<(usize, usize)> = (0..degree).flat_map(|i| (0..degree).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        let mut layer: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * coords.len());
            for w in &layer {
                for &c in &coords {
                    let mut v = w.clone();
                    v.push(c);
                    next.push(v);
                }
            }
            out.extend(next.iter().map(|p| Self { pairs: p.clone() }));
            layer = next;
        }
        out
    }
}

impl Serialize for CoordinateWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let one: Vec<[usize; 2]> = self.pairs.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
        one.serialize(s)
    }
}

/// `|{g ∈ G : g(j_t) = i_t ∀t}| / |G|`, exactly.
pub fn haar_moment_classical(group: &PermutationGroup, word: &CoordinateWord) -> Ratio<i64> {
    let hits = group
        .elements
        .iter()
        .filter(|g| word.pairs.iter().all(|&(i, j)| g.apply(j) == i))
        .count();
    Ratio::new(hits as i64, group.order() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalOrbitVerdict {
    pub equal_sizes: bool,
    pub orbit_sizes: Vec<usize>,
}

/// For `H ◁ G` with `G` transitive, all orbits of `H` have equal size.
pub fn check_normal_orbits(g: &PermutationGroup, h: &PermutationGroup) -> Result<NormalOrbitVerdict> {
    if g.degree != h.degree {
        return Err(Error::DegreeMismatch(g.degree, h.degree));
    }
    if !h.is_subgroup_of(g) {
        return Err(Error::NotSubgroup);
    }
    if !g.is_transitive() {
        return Err(Error::NotTransitive);
    }
    if !h.is_normal_in(g) {
        return Err(Error::NotNormal);
    }
    let orbit_sizes: Vec<usize> = orbit_partition(h).iter().map(Vec::len).collect();
    let equal_sizes = orbit_sizes.windows(2).all(|w| w[0] == w[1]);
    Ok(NormalOrbitVerdict {
        equal_sizes,
        orbit_sizes,
    })
}
