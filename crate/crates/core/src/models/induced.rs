//! Induced representations `Ind_Λ^Γ(χ)` for a finite group `Γ` and an
//! abelian subgroup `Λ`, parameterized by the finite dual of `Λ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::magic::ComplexMatrix;
use crate::perm::{Permutation, PermutationGroup};
use crate::tol;

/// A unitary character of `Λ`, stored as its values on `Λ.elements()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    values: Vec<Complex64>,
}

impl Character {
    /// Checks that `values` has modulus one and is multiplicative on `subgroup`.
    pub fn new(subgroup: &PermutationGroup, values: Vec<Complex64>) -> Result<Self> {
        let elems = subgroup.elements();
        if values.len() != elems.len() {
            return Err(Error::DimensionMismatch {
                expected: elems.len(),
                got: values.len(),
            });
        }
        for (a, pa) in elems.iter().enumerate() {
            if (values[a].norm() - 1.0).abs() > tol::VALIDATION {
                return Err(Error::NotACharacter);
            }
            for (b, pb) in elems.iter().enumerate() {
                let ab = subgroup.index_of(&pa.compose_unchecked(pb)).ok_or(Error::NotInGroup)?;
                if (values[ab] - values[a] * values[b]).norm() > tol::VALIDATION {
                    return Err(Error::NotACharacter);
                }
            }
        }
        Ok(Character { values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `Γ`, `Λ`, a left transversal `x_1 Λ, …, x_n Λ` and the dual of `Λ`.
#[derive(Clone, Debug)]
pub struct InducedModel {
    group: PermutationGroup,
    subgroup: PermutationGroup,
    cosets: Vec<Permutation>,
    characters: Vec<Character>,
}

impl InducedModel {
    /// Uses the least element of each left coset as its representative.
    pub fn new(group: PermutationGroup, subgroup: PermutationGroup) -> Result<Self> {
        if group.degree() != subgroup.degree() {
            return Err(Error::DegreeMismatch(group.degree(), subgroup.degree()));
        }
        if !subgroup.is_subgroup_of(&group) {
            return Err(Error::NotSubgroup);
        }
        if !subgroup.is_abelian() {
            return Err(Error::NotAbelian);
        }
        let mut seen = vec![false; group.order()];
        let mut cosets = Vec::new();
        for (idx, x) in group.elements().iter().enumerate() {
            if seen[idx] {
                continue;
            }
            for l in subgroup.elements() {
                let y = x.compose_unchecked(l);
                seen[group.index_of(&y).expect("closed under products")] = true;
            }
            cosets.push(x.clone());
        }
        let characters = dual_group(&subgroup)?;
        Ok(InducedModel {
            group,
            subgroup,
            cosets,
            characters,
        })
    }

    /// Like [`InducedModel::new`] with caller-chosen representatives.
    pub fn with_cosets(group: PermutationGroup, subgroup: PermutationGroup, cosets: Vec<Permutation>) -> Result<Self> {
        let mut model = Self::new(group, subgroup)?;
        if cosets.len() != model.cosets.len() {
            return Err(Error::InvalidFamily(format!(
                "{} coset representatives for index {}",
                cosets.len(),
                model.cosets.len()
            )));
        }
        let mut hit = vec![false; model.cosets.len()];
        for x in &cosets {
            if !model.group.contains(x) {
                return Err(Error::NotInGroup);
            }
            let c = model.coset_of(x);
            if hit[c] {
                return Err(Error::InvalidFamily("two representatives of one coset".into()));
            }
            hit[c] = true;
        }
        model.cosets = cosets;
        Ok(model)
    }

    pub fn group(&self) -> &PermutationGroup {
        &self.group
    }

    pub fn subgroup(&self) -> &PermutationGroup {
        &self.subgroup
    }

    pub fn cosets(&self) -> &[Permutation] {
        &self.cosets
    }

    pub fn index(&self) -> usize {
        self.cosets.len()
    }

    /// The full dual of `Λ`; its first entry is the trivial character.
    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn character(&self, index: usize) -> Result<&Character> {
        self.characters.get(index).ok_or(Error::IndexOutOfRange {
            index,
            degree: self.characters.len(),
        })
    }

    fn coset_of(&self, g: &Permutation) -> usize {
        let inv = g.inverse();
        self.cosets
            .iter()
            .position(|x| self.subgroup.contains(&inv.compose_unchecked(x)))
            .expect("cosets cover the group")
    }

    fn lambda_value(&self, chi: &Character, g: &Permutation) -> Option<Complex64> {
        self.subgroup.index_of(g).map(|i| chi.values[i])
    }

    /// Matrix of `Ind(χ)(γ)` in the coset basis: entry `(x, y)` is
    /// `χ(x⁻¹γy)` when `x⁻¹γy ∈ Λ` and zero otherwise.
    pub fn induced_rep(&self, chi: &Character, gamma: &Permutation) -> Result<ComplexMatrix> {
        if !self.group.contains(gamma) {
            return Err(Error::NotInGroup);
        }
        if chi.values.len() != self.subgroup.order() {
            return Err(Error::NotACharacter);
        }
        let n = self.index();
        let mut m = ComplexMatrix::zeros(n, n);
        for (a, x) in self.cosets.iter().enumerate() {
            let xg = x.inverse().compose_unchecked(gamma);
            for (b, y) in self.cosets.iter().enumerate() {
                if let Some(v) = self.lambda_value(chi, &xg.compose_unchecked(y)) {
                    m[(a, b)] = v;
                }
            }
        }
        Ok(m)
    }

    /// `Σ_x [x⁻¹γx ∈ Λ] χ(x⁻¹γx)`, the unnormalized character of `Ind(χ)`.
    pub fn induced_character(&self, chi: &Character, gamma: &Permutation) -> Result<Complex64> {
        if !self.group.contains(gamma) {
            return Err(Error::NotInGroup);
        }
        Ok(self
            .cosets
            .iter()
            .filter_map(|x| self.lambda_value(chi, &gamma.conjugate_by(&x.inverse()).ok()?))
            .sum())
    }
}

/// Every character of a finite abelian group, by trying all assignments of
/// `e`-th roots of unity to the generators (`e` the exponent).
fn dual_group(subgroup: &PermutationGroup) -> Result<Vec<Character>> {
    let elems = subgroup.elements();
    let order_of = |p: &Permutation| {
        let mut q = p.clone();
        let mut n = 1;
        while !q.is_identity() {
            q = q.compose_unchecked(p);
            n += 1;
        }
        n
    };
    let exponent = elems.iter().map(order_of).fold(1, lcm);
    let gens: Vec<Permutation> = subgroup
        .generators()
        .iter()
        .filter(|g| !g.is_identity())
        .cloned()
        .collect();
    let root = |a: usize| Complex64::from_polar(1.0, 2.0 * PI * a as f64 / exponent as f64);

    let mut out = Vec::new();
    let mut assignment = vec![0usize; gens.len()];
    loop {
        if let Some(logs) = extend_assignment(subgroup, &gens, &assignment, exponent) {
            out.push(Character {
                values: logs.into_iter().map(root).collect(),
            });
        }
        // odometer over Z_e^{gens}
        let mut pos = 0;
        while pos < assignment.len() {
            assignment[pos] += 1;
            if assignment[pos] < exponent {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        if pos == assignment.len() {
            break;
        }
    }
    if out.len() != elems.len() {
        return Err(Error::NotAbelian);
    }
    Ok(out)
}

/// Extends `gens[i] ↦ assignment[i]` to a homomorphism into `Z_e` by breadth
/// first search, or returns `None` if the assignment is inconsistent.
fn extend_assignment(
    subgroup: &PermutationGroup,
    gens: &[Permutation],
    assignment: &[usize],
    e: usize,
) -> Option<Vec<usize>> {
    let elems = subgroup.elements();
    let mut log: HashMap<usize, usize> = HashMap::new();
    let id = subgroup.index_of(&Permutation::identity(subgroup.degree()))?;
    log.insert(id, 0);
    let mut queue = vec![id];
    while let Some(a) = queue.pop() {
        for (g, &v) in gens.iter().zip(assignment) {
            let b = subgroup.index_of(&elems[a].compose_unchecked(g))?;
            let value = (log[&a] + v) % e;
            match log.get(&b) {
                Some(&old) if old != value => return None,
                Some(_) => {}
                None => {
                    log.insert(b, value);
                    queue.push(b);
                }
            }
        }
    }
    Some((0..elems.len()).map(|i| log[&i]).collect())
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

#[derive(Serialize, Deserialize)]
struct InducedRepr {
    group: PermutationGroup,
    subgroup: PermutationGroup,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cosets: Option<Vec<Permutation>>,
}

impl Serialize for InducedModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InducedRepr {
            group: self.group.clone(),
            subgroup: self.subgroup.clone(),
            cosets: Some(self.cosets.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for InducedModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = InducedRepr::deserialize(d)?;
        match r.cosets {
            Some(c) => InducedModel::with_cosets(r.group, r.subgroup, c),
            None => InducedModel::new(r.group, r.subgroup),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::generate_group;

    fn s3_a3() -> InducedModel {
        let s3 = PermutationGroup::symmetric(3).unwrap();
        let c = Permutation::from_cycles(3, &[&[1, 2, 3]]).unwrap();
        let a3 = generate_group(&[c], 100).unwrap();
        InducedModel::new(s3, a3).unwrap()
    }

    #[test]
    fn identity_is_identity_matrix() {
        let m = s3_a3();
        assert_eq!(m.index(), 2);
        assert_eq!(m.characters().len(), 3);
        let e = Permutation::identity(3);
        for chi in m.characters() {
            let r = m.induced_rep(chi, &e).unwrap();
            assert!((r - ComplexMatrix::identity(2, 2)).norm() < 1e-15);
            assert!((m.induced_character(chi, &e).unwrap() - 2.0).norm() < 1e-15);
        }
    }

    #[test]
    fn transposition_has_zero_diagonal() {
        let m = s3_a3();
        let t = Permutation::from_cycles(3, &[&[1, 2]]).unwrap();
        for chi in m.characters() {
            let r = m.induced_rep(chi, &t).unwrap();
            assert_eq!(r[(0, 0)], Complex64::new(0.0, 0.0));
            assert_eq!(r[(1, 1)], Complex64::new(0.0, 0.0));
            assert!(m.induced_character(chi, &t).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn three_cycle_character_values() {
        let m = s3_a3();
        let c = Permutation::from_cycles(3, &[&[1, 2, 3]]).unwrap();
        let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let mut got: Vec<Complex64> = m
            .characters()
            .iter()
            .map(|chi| m.induced_character(chi, &c).unwrap())
            .collect();
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        let mut want: Vec<Complex64> = (0..3).map(|t| omega.powi(t) + omega.powi(-t)).collect();
        want.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
    }

    #[test]
    fn homomorphism_on_d4() {
        let r = Permutation::from_one_based(&[2, 3, 4, 1]).unwrap();
        let s = Permutation::from_one_based(&[1, 4, 3, 2]).unwrap();
        let d4 = generate_group(&[r.clone(), s], 100).unwrap();
        let rot = generate_group(&[r], 100).unwrap();
        let m = InducedModel::new(d4.clone(), rot).unwrap();
        assert_eq!(m.characters().len(), 4);
        for chi in m.characters() {
            for a in d4.elements() {
                for b in d4.elements() {
                    let lhs = m.induced_rep(chi, &a.compose(b).unwrap()).unwrap();
                    let rhs = m.induced_rep(chi, a).unwrap() * m.induced_rep(chi, b).unwrap();
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s3 = PermutationGroup::symmetric(3).unwrap();
        assert!(matches!(
            InducedModel::new(s3.clone(), s3.clone()),
            Err(Error::NotAbelian)
        ));
        let m = s3_a3();
        let bogus = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(Character::new(m.subgroup(), bogus), Err(Error::NotACharacter)));
        let outside = Permutation::identity(4);
        assert!(m.induced_rep(&m.characters()[0], &outside).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let m = s3_a3();
        let json = serde_json::to_string(&m).unwrap();
        let back: InducedModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.cosets(), m.cosets());
        assert_eq!(back.group(), m.group());
    }
}
