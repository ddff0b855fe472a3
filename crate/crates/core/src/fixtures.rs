//! Small permutation groups used by the self-test and the CLI.

use crate::perm::{generate_group, Permutation, PermutationGroup};

/// Names accepted wherever a group fixture can be given by name.
pub const NAMES: [&str; 7] = ["s2", "s3", "s4", "a3", "d4", "d4_rotations", "s2_diag_s4"];

fn perm(images: &[usize]) -> Permutation {
    Permutation::from_one_based(images).expect("fixture permutation")
}

fn group(gens: &[&[usize]]) -> PermutationGroup {
    let gens: Vec<Permutation> = gens.iter().map(|g| perm(g)).collect();
    generate_group(&gens, 1000).expect("fixture group")
}

/// Generators of each fixture, one-based.
pub fn generators(name: &str) -> Option<Vec<Vec<usize>>> {
    let gens: &[&[usize]] = match name {
        "s2" => &[&[2, 1]],
        "s3" => &[&[2, 3, 1], &[2, 1, 3]],
        "s4" => &[&[2, 3, 4, 1], &[2, 1, 3, 4]],
        "a3" => &[&[2, 3, 1]],
        "d4" => &[&[2, 3, 4, 1], &[1, 4, 3, 2]],
        "d4_rotations" => &[&[2, 3, 4, 1]],
        "s2_diag_s4" => &[&[2, 1, 4, 3]],
        _ => return None,
    };
    Some(gens.iter().map(|g| g.to_vec()).collect())
}

pub fn by_name(name: &str) -> Option<PermutationGroup> {
    let gens = generators(name)?;
    let refs: Vec<&[usize]> = gens.iter().map(Vec::as_slice).collect();
    Some(group(&refs))
}

pub fn s3() -> PermutationGroup {
    by_name("s3").unwrap()
}

pub fn a3() -> PermutationGroup {
    by_name("a3").unwrap()
}

pub fn d4() -> PermutationGroup {
    by_name("d4").unwrap()
}

pub fn d4_rotations() -> PermutationGroup {
    by_name("d4_rotations").unwrap()
}

/// `S_2` embedded in `S_4` by `σ ↦ (σ, σ)`.
pub fn s2_diag_s4() -> PermutationGroup {
    by_name("s2_diag_s4").unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        let orders: Vec<usize> = NAMES.iter().map(|n| by_name(n).unwrap().order()).collect();
        assert_eq!(orders, vec![2, 6, 24, 3, 8, 4, 2]);
        assert!(by_name("s5").is_none());
    }

    #[test]
    fn json_files_match() {
        let files = [
            ("s2", include_str!("../fixtures/s2.json")),
            ("s3", include_str!("../fixtures/s3.json")),
            ("s4", include_str!("../fixtures/s4.json")),
            ("a3", include_str!("../fixtures/a3.json")),
            ("d4", include_str!("../fixtures/d4.json")),
            ("d4_rotations", include_str!("../fixtures/d4_rotations.json")),
            ("s2_diag_s4", include_str!("../fixtures/s2_diag_s4.json")),
        ];
        for (name, text) in files {
            let g: PermutationGroup = serde_json::from_str(text).unwrap();
            assert_eq!(g, by_name(name).unwrap(), "{name}");
        }
    }
}
