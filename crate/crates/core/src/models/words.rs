//! Normal forms of words in the quotients of `Z_K^{*M}` handled here.

use std::fmt;

use serde::{Serialize, Serializer};

use super::ModelFamily;
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// `g_block^exponent`, zero-based block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub block: usize,
    pub exponent: usize,
}

/// One syllable of a free product of direct products: an element of
/// `Z_K^{M_p}` given by its exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub part: usize,
    pub exponents: Vec<usize>,
}

/// A letter `g_i^{k'}` with `0 < k' < R`, preceded by an element of the
/// abelian group generated by the powers `h_j = g_j^R`, stored as exponents
/// `shift[j]` mod `L` with `shift[i] = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftedLetter {
    pub shift: Vec<usize>,
    pub letter: Letter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalForm {
    /// Free reduction with exponents in `1..K`; also the cyclic family.
    Free(Vec<Letter>),
    /// Alternating nonzero syllables from distinct parts.
    DirectProducts(Vec<Syllable>),
    /// `h^central · g_{i_1}^{k_1} ⋯` with `0 ≤ central < L`, `0 < k_p < R`.
    Amalgamated { central: usize, letters: Vec<Letter> },
    /// `τ_0 g_{i_1}^{k_1} τ_1 ⋯ g_{i_n}^{k_n} · tail`, the graph-of-groups
    /// normal form for the star of `Z_L^M` with the cyclic factors.
    CommutingPowers {
        syllables: Vec<ShiftedLetter>,
        tail: Vec<usize>,
    },
    /// A group element, for induced-representation models.
    Element(Permutation),
}

/// A word in canonical form, together with its expansion into generator
/// powers `(generator, exponent)` over the global generator list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedWord {
    form: NormalForm,
    letters: Vec<(usize, usize)>,
}

impl ReducedWord {
    pub fn form(&self) -> &NormalForm {
        &self.form
    }

    /// Generator powers whose ordered product is the word; empty for the
    /// identity and for [`NormalForm::Element`].
    pub fn letters(&self) -> &[(usize, usize)] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        match &self.form {
            NormalForm::Element(p) => p.is_identity(),
            _ => self.letters.is_empty(),
        }
    }

    /// The raw letters of the inverse word (exponents negated, order reversed).
    pub fn inverse_raw(&self) -> Vec<(usize, i64)> {
        self.letters.iter().rev().map(|&(g, e)| (g, -(e as i64))).collect()
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let NormalForm::Element(p) = &self.form {
            return write!(f, "{p}");
        }
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self.letters.iter().map(|&(g, e)| format!("{}:{}", g + 1, e)).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `"1:2,2:1"` (one-based generator, signed exponent) into zero-based
/// raw letters. `"e"` and `""` denote the empty word.
pub fn parse_raw_word(text: &str) -> Result<Vec<(usize, i64)>> {
    let text = text.trim();
    if text.is_empty() || text == "e" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|tok| {
            let bad = || Error::InvalidWord(format!("bad letter {tok:?}, expected gen:exp"));
            let (g, e) = tok.trim().split_once(':').ok_or_else(bad)?;
            let g: usize = g.trim().parse().map_err(|_| bad())?;
            let e: i64 = e.trim().parse().map_err(|_| bad())?;
            if g == 0 {
                return Err(bad());
            }
            Ok((g - 1, e))
        })
        .collect()
}

fn residue(k: i64, modulus: usize) -> usize {
    k.rem_euclid(modulus as i64) as usize
}

/// Reduces a raw word to the family's normal form.
pub fn canonical_word(family: &ModelFamily, raw: &[(usize, i64)]) -> Result<ReducedWord> {
    let gens = family.generator_count()?;
    if let Some(&(g, _)) = raw.iter().find(|&&(g, _)| g >= gens) {
        return Err(Error::InvalidWord(format!("generator {} outside 1..={gens}", g + 1)));
    }
    let word = match family {
        ModelFamily::CyclicFlat { k } | ModelFamily::FreeProduct { k, .. } => {
            let letters = free_reduce(*k, raw);
            let flat = letters.iter().map(|l| (l.block, l.exponent)).collect();
            ReducedWord {
                form: NormalForm::Free(letters),
                letters: flat,
            }
        }
        ModelFamily::FreeProductOfDirectProducts { k, parts } => direct_products_reduce(*k, parts, raw),
        ModelFamily::Amalgamated { k, l, r, .. } => amalgamated_reduce(*k, *l, *r, raw),
        ModelFamily::CommutingPowers { k, l, r, m } => commuting_powers_reduce(*k, *l, *r, *m, raw),
        ModelFamily::InducedVirtuallyAbelian(model) => {
            let gens = model.group().generators();
            let mut x = Permutation::identity(model.group().degree());
            for &(g, e) in raw {
                let base = if e < 0 { gens[g].inverse() } else { gens[g].clone() };
                for _ in 0..e.unsigned_abs() {
                    x = x.compose(&base)?;
                }
            }
            ReducedWord {
                form: NormalForm::Element(x),
                letters: Vec::new(),
            }
        }
        ModelFamily::Classical { .. } => unreachable!("generator_count rejects classical"),
    };
    Ok(word)
}

fn free_reduce(k: usize, raw: &[(usize, i64)]) -> Vec<Letter> {
    let mut stack: Vec<Letter> = Vec::new();
    for &(block, e) in raw {
        let e = residue(e, k);
        if e == 0 {
            continue;
        }
        match stack.last_mut() {
            Some(top) if top.block == block => {
                top.exponent = (top.exponent + e) % k;
                if top.exponent == 0 {
                    stack.pop();
                }
            }
            _ => stack.push(Letter { block, exponent: e }),
        }
    }
    stack
}

fn direct_products_reduce(k: usize, parts: &[usize], raw: &[(usize, i64)]) -> ReducedWord {
    let locate = |g: usize| {
        let mut offset = 0;
        for (p, &size) in parts.iter().enumerate() {
            if g < offset + size {
                return (p, g - offset);
            }
            offset += size;
        }
        unreachable!("generator index checked by caller")
    };
    let mut stack: Vec<Syllable> = Vec::new();
    for &(g, e) in raw {
        let e = residue(e, k);
        if e == 0 {
            continue;
        }
        let (part, s) = locate(g);
        match stack.last_mut() {
            Some(top) if top.part == part => {
                top.exponents[s] = (top.exponents[s] + e) % k;
                if top.exponents.iter().all(|&x| x == 0) {
                    stack.pop();
                }
            }
            _ => {
                let mut exponents = vec![0; parts[part]];
                exponents[s] = e;
                stack.push(Syllable { part, exponents });
            }
        }
    }
    let mut letters = Vec::new();
    for syl in &stack {
        let offset: usize = parts[..syl.part].iter().sum();
        for (s, &e) in syl.exponents.iter().enumerate() {
            if e != 0 {
                letters.push((offset + s, e));
            }
        }
    }
    ReducedWord {
        form: NormalForm::DirectProducts(stack),
        letters,
    }
}

fn amalgamated_reduce(k: usize, l: usize, r: usize, raw: &[(usize, i64)]) -> ReducedWord {
    // h = g_i^R is central, so every h factor moves to the front.
    let mut central = 0;
    let mut stack: Vec<Letter> = Vec::new();
    for &(block, e) in raw {
        let e = residue(e, k);
        let (low, high) = (e % r, e / r);
        central = (central + high) % l;
        if low == 0 {
            continue;
        }
        match stack.last_mut() {
            Some(top) if top.block == block => {
                let mut s = top.exponent + low;
                if s >= r {
                    s -= r;
                    central = (central + 1) % l;
                }
                if s == 0 {
                    stack.pop();
                } else {
                    top.exponent = s;
                }
            }
            _ => stack.push(Letter { block, exponent: low }),
        }
    }
    let mut letters = Vec::new();
    if central > 0 {
        letters.push((0, central * r));
    }
    letters.extend(stack.iter().map(|x| (x.block, x.exponent)));
    ReducedWord {
        form: NormalForm::Amalgamated {
            central,
            letters: stack,
        },
        letters,
    }
}

fn commuting_powers_reduce(k: usize, l: usize, r: usize, m: usize, raw: &[(usize, i64)]) -> ReducedWord {
    let mut syllables: Vec<ShiftedLetter> = Vec::new();
    let mut tail = vec![0usize; m];
    for &(i, e) in raw {
        let e = residue(e, k);
        let (low, high) = (e % r, e / r);
        if low == 0 {
            tail[i] = (tail[i] + high) % l;
            continue;
        }
        // tail = τ · h_i^c with τ free of h_i; h_i^c commutes with g_i.
        let c = tail[i];
        let mut tau = tail.clone();
        tau[i] = 0;
        let tau_trivial = tau.iter().all(|&x| x == 0);
        match syllables.last_mut() {
            Some(last) if tau_trivial && last.letter.block == i => {
                let mut s = last.letter.exponent + low;
                let mut carry = 0;
                if s >= r {
                    s -= r;
                    carry = 1;
                }
                let power = (c + high + carry) % l;
                if s == 0 {
                    let popped = syllables.pop().expect("matched a last syllable");
                    tail = popped.shift;
                    tail[i] = power;
                } else {
                    last.letter.exponent = s;
                    tail = vec![0; m];
                    tail[i] = power;
                }
            }
            _ => {
                syllables.push(ShiftedLetter {
                    shift: tau,
                    letter: Letter {
                        block: i,
                        exponent: low,
                    },
                });
                tail = vec![0; m];
                tail[i] = (c + high) % l;
            }
        }
    }
    let mut letters = Vec::new();
    let push_shift = |letters: &mut Vec<(usize, usize)>, shift: &[usize]| {
        for (j, &a) in shift.iter().enumerate() {
            if a != 0 {
                letters.push((j, a * r));
            }
        }
    };
    for syl in &syllables {
        push_shift(&mut letters, &syl.shift);
        letters.push((syl.letter.block, syl.letter.exponent));
    }
    push_shift(&mut letters, &tail);
    ReducedWord {
        form: NormalForm::CommutingPowers { syllables, tail },
        letters,
    }
}

/// Every reduced raw word of length `1..=max_len` over `gens` generators of
/// order `order`: adjacent generators distinct, exponents in `1..order`.
/// Ordered by length, then lexicographically on `(generator, exponent)`.
pub fn raw_words(gens: usize, order: usize, max_len: usize, cap: usize) -> Result<Vec<Vec<(usize, i64)>>> {
    let per_letter = order.saturating_sub(1);
    let mut total: usize = 0;
    let mut layer_count: usize = gens * per_letter;
    for len in 1..=max_len {
        if len > 1 {
            layer_count = layer_count
                .saturating_mul(gens.saturating_sub(1))
                .saturating_mul(per_letter);
        }
        total = total.saturating_add(layer_count);
        if total > cap {
            return Err(Error::TooManyWords { cap });
        }
    }
    let mut out = Vec::with_capacity(total);
    let mut layer: Vec<Vec<(usize, i64)>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for g in 0..gens {
                if w.last().is_some_and(|&(last, _)| last == g) {
                    continue;
                }
                for e in 1..order {
                    let mut v = w.clone();
                    v.push((g, e as i64));
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(k: usize, m: usize) -> ModelFamily {
        ModelFamily::FreeProduct { k, m }
    }

    #[test]
    fn parse_words() {
        assert_eq!(parse_raw_word("1:2,2:1").unwrap(), vec![(0, 2), (1, 1)]);
        assert_eq!(parse_raw_word(" 2:-1 ").unwrap(), vec![(1, -1)]);
        assert!(parse_raw_word("e").unwrap().is_empty());
        assert!(parse_raw_word("0:1").is_err());
        assert!(parse_raw_word("1-2").is_err());
    }

    #[test]
    fn free_reduction() {
        let f = fp(3, 2);
        assert!(canonical_word(&f, &[(0, 3)]).unwrap().is_identity());
        assert!(canonical_word(&f, &[(0, 2), (0, 1)]).unwrap().is_identity());
        let w = canonical_word(&f, &[(0, 1), (1, 2), (1, 1), (0, 1)]).unwrap();
        assert_eq!(w.letters(), &[(0, 2)]);
        let w = canonical_word(&f, &[(0, -1)]).unwrap();
        assert_eq!(w.letters(), &[(0, 2)]);
        assert_eq!(w.to_string(), "1:2");
        assert!(canonical_word(&f, &[(2, 1)]).is_err());
    }

    #[test]
    fn amalgamated_extracts_central_powers() {
        let f = ModelFamily::Amalgamated { k: 4, l: 2, r: 2, m: 2 };
        // g1^3 g2 = h g1 g2
        let w = canonical_word(&f, &[(0, 3), (1, 1)]).unwrap();
        assert_eq!(
            w.form(),
            &NormalForm::Amalgamated {
                central: 1,
                letters: vec![Letter { block: 0, exponent: 1 }, Letter { block: 1, exponent: 1 }]
            }
        );
        // g1^2 g2^2 = h^2 = 1
        assert!(canonical_word(&f, &[(0, 2), (1, 2)]).unwrap().is_identity());
        // g1 g1 = h
        let w = canonical_word(&f, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(w.letters(), &[(0, 2)]);
        // g1 g2^2 g1 = g1 h g1 = h g1^2 = h^2 = 1
        assert!(canonical_word(&f, &[(0, 1), (1, 2), (0, 1)]).unwrap().is_identity());
    }

    #[test]
    fn commuting_powers_normal_form() {
        let f = ModelFamily::CommutingPowers { k: 4, l: 2, r: 2, m: 2 };
        // [h1, h2] = 1
        assert!(canonical_word(&f, &[(0, 2), (1, 2), (0, 2), (1, 2)])
            .unwrap()
            .is_identity());
        // h1 h2 ≠ 1 and equals h2 h1
        let a = canonical_word(&f, &[(0, 2), (1, 2)]).unwrap();
        let b = canonical_word(&f, &[(1, 2), (0, 2)]).unwrap();
        assert!(!a.is_identity());
        assert_eq!(a, b);
        // g1 h2 g1^{-1} is not central: differs from h2
        let c = canonical_word(&f, &[(0, 1), (1, 2), (0, -1)]).unwrap();
        let h2 = canonical_word(&f, &[(1, 2)]).unwrap();
        assert_ne!(c, h2);
        assert!(!c.is_identity());
        // g1 h1 g1^{-1} = h1
        let d = canonical_word(&f, &[(0, 1), (0, 2), (0, -1)]).unwrap();
        assert_eq!(d, canonical_word(&f, &[(0, 2)]).unwrap());
        // g1 g2 g2^{-1} g1^{-1} = 1
        assert!(canonical_word(&f, &[(0, 1), (1, 1), (1, -1), (0, -1)])
            .unwrap()
            .is_identity());
    }

    #[test]
    fn raw_word_counts() {
        // M (M-1)^{n-1} (K-1)^n summed over n
        let words = raw_words(2, 3, 6, 100_000).unwrap();
        let expected: usize = (1..=6).map(|n| 2 * 2usize.pow(n)).sum();
        assert_eq!(words.len(), expected);
        assert!(raw_words(3, 5, 12, 1000).is_err());
    }
}
