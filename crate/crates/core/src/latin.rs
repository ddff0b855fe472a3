//! Sparse Latin squares and their dictionary with permutation tuples.
//!
//! A sparse Latin square of size `N` over `K` symbols has every row and every
//! column containing each of `1..=K` exactly once, padded with `*`. Grids use
//! `0` for `*`.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perm::{generate_group, Permutation, PermutationGroup};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseLatinSquare {
    n: usize,
    k: usize,
    grid: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatinValidation {
    pub valid: bool,
    /// Human-readable defects, zero-based indices.
    pub defects: Vec<String>,
}

/// Checks the sparse Latin square property of `grid` over `k` symbols.
pub fn validate(grid: &[Vec<usize>], k: usize) -> Result<LatinValidation> {
    let n = grid.len();
    if grid.iter().any(|r| r.len() != n) {
        return Err(Error::NotSquare);
    }
    for (i, row) in grid.iter().enumerate() {
        for (j, &symbol) in row.iter().enumerate() {
            if symbol > k {
                return Err(Error::SymbolOutOfRange { i, j, symbol, k });
            }
        }
    }
    let mut defects = Vec::new();
    let mut check = |line: &str, index: usize, cells: Vec<usize>| {
        let mut count = vec![0usize; k + 1];
        for s in cells {
            count[s] += 1;
        }
        for (s, &c) in count.iter().enumerate().skip(1) {
            if c == 0 {
                defects.push(format!("{line} {index} misses {s}"));
            } else if c > 1 {
                defects.push(format!("{line} {index} repeats {s}"));
            }
        }
    };
    for i in 0..n {
        check("row", i, grid[i].clone());
    }
    for j in 0..n {
        check("column", j, grid.iter().map(|r| r[j]).collect());
    }
    Ok(LatinValidation {
        valid: defects.is_empty(),
        defects,
    })
}

impl SparseLatinSquare {
    pub fn new(grid: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let v = validate(&grid, k)?;
        if !v.valid {
            return Err(Error::InvalidSquare(v.defects.join("; ")));
        }
        let n = grid.len();
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidSquare(format!("need 1 <= K <= N, got N={n}, K={k}")));
        }
        Ok(Self {
            n,
            k,
            grid: grid
                .into_iter()
                .map(|r| r.into_iter().map(|s| s as u8).collect())
                .collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.k
    }

    /// Zero-based cell; `None` for `*`, otherwise the zero-based symbol.
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match self.grid[i][j] {
            0 => None,
            s => Some(s as usize - 1),
        }
    }

    /// Raw grid with `0` for `*`.
    pub fn grid(&self) -> Vec<Vec<usize>> {
        self.grid
            .iter()
            .map(|r| r.iter().map(|&s| s as usize).collect())
            .collect()
    }

    /// `1` on the diagonal, `*` elsewhere.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            k: 1,
            grid: (0..n).map(|i| (0..n).map(|j| u8::from(i == j)).collect()).collect(),
        }
    }

    /// Full square `L_ij = (j - i mod N) + 1`.
    pub fn circulant(n: usize) -> Self {
        Self {
            n,
            k: n,
            grid: (0..n)
                .map(|i| (0..n).map(|j| ((j + n - i) % n + 1) as u8).collect())
                .collect(),
        }
    }
}

impl Serialize for SparseLatinSquare {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.grid.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseLatinSquare {
    /// `K` is the largest symbol present.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let grid = Vec::<Vec<usize>>::deserialize(d)?;
        let k = grid.iter().flatten().copied().max().unwrap_or(0);
        SparseLatinSquare::new(grid, k).map_err(serde::de::Error::custom)
    }
}

/// Row-major backtracking over cells, symbols tried in order `* < 1 < … < K`,
/// with per-row and per-column bitmasks of placed symbols.
pub struct SquareIter {
    n: usize,
    k: usize,
    cells: Vec<u8>,
    next_try: Vec<u8>,
    row_mask: Vec<u32>,
    col_mask: Vec<u32>,
    pos: usize,
    done: bool,
}

/// Every sparse Latin square of size `n` over `k` symbols, in lexicographic
/// order of the row-major grid.
pub fn enumerate(n: usize, k: usize) -> SquareIter {
    assert!(k <= 31, "symbol count above bitmask width");
    SquareIter {
        n,
        k,
        cells: vec![0; n * n],
        next_try: vec![0; n * n + 1],
        row_mask: vec![0; n],
        col_mask: vec![0; n],
        pos: 0,
        done: n == 0 || k == 0 || k > n,
    }
}

impl SquareIter {
    fn can_place(&self, pos: usize, v: u8) -> bool {
        let (r, c) = (pos / self.n, pos % self.n);
        let mut rm = self.row_mask[r];
        let mut cm = self.col_mask[c];
        if v > 0 {
            let bit = 1u32 << v;
            if rm & bit != 0 || cm & bit != 0 {
                return false;
            }
            rm |= bit;
            cm |= bit;
        }
        let row_missing = self.k - rm.count_ones() as usize;
        let col_missing = self.k - cm.count_ones() as usize;
        row_missing <= self.n - 1 - c && col_missing <= self.n - 1 - r
    }

    fn set(&mut self, pos: usize, v: u8) {
        let (r, c) = (pos / self.n, pos % self.n);
        self.cells[pos] = v;
        if v > 0 {
            self.row_mask[r] |= 1 << v;
            self.col_mask[c] |= 1 << v;
        }
    }

    fn unset(&mut self, pos: usize) {
        let (r, c) = (pos / self.n, pos % self.n);
        let v = self.cells[pos];
        if v > 0 {
            self.row_mask[r] &= !(1 << v);
            self.col_mask[c] &= !(1 << v);
        }
        self.cells[pos] = 0;
    }

    fn snapshot(&self) -> SparseLatinSquare {
        SparseLatinSquare {
            n: self.n,
            k: self.k,
            grid: self.cells.chunks(self.n).map(<[u8]>::to_vec).collect(),
        }
    }
}

impl Iterator for SquareIter {
    type Item = SparseLatinSquare;

    fn next(&mut self) -> Option<SparseLatinSquare> {
        let total = self.n * self.n;
        loop {
            if self.done {
                return None;
            }
            if self.pos == total {
                let square = self.snapshot();
                self.pos -= 1;
                self.unset(self.pos);
                return Some(square);
            }
            let mut placed = false;
            while self.next_try[self.pos] as usize <= self.k {
                let v = self.next_try[self.pos];
                self.next_try[self.pos] += 1;
                if self.can_place(self.pos, v) {
                    self.set(self.pos, v);
                    self.pos += 1;
                    self.next_try[self.pos] = 0;
                    placed = true;
                    break;
                }
            }
            if !placed {
                if self.pos == 0 {
                    self.done = true;
                    return None;
                }
                self.pos -= 1;
                self.unset(self.pos);
            }
        }
    }
}

/// `σ_x(j) = i ⇔ L_ij = x`, one permutation per symbol.
pub fn to_permutations(l: &SparseLatinSquare) -> Vec<Permutation> {
    let n = l.n;
    let mut images = vec![vec![usize::MAX; n]; l.k];
    for i in 0..n {
        for j in 0..n {
            if let Some(x) = l.get(i, j) {
                images[x][j] = i;
            }
        }
    }
    images
        .into_iter()
        .map(|im| Permutation::from_images(im).expect("valid square yields permutations"))
        .collect()
}

/// Sets `L_ij = x` when `σ_x(i) = j` and `*` otherwise.
///
/// Round trip through [`to_permutations`] yields the inverse tuple.
pub fn from_permutations(perms: &[Permutation]) -> Result<SparseLatinSquare> {
    let first = perms.first().ok_or(Error::NoGenerators)?;
    let n = first.degree();
    if let Some(p) = perms.iter().find(|p| p.degree() != n) {
        return Err(Error::DegreeMismatch(n, p.degree()));
    }
    let mut grid = vec![vec![0u8; n]; n];
    for i in 0..n {
        for (x, p) in perms.iter().enumerate() {
            let j = p.apply(i);
            if grid[i][j] != 0 {
                return Err(Error::ValuesCoincide { point: i });
            }
            grid[i][j] = (x + 1) as u8;
        }
    }
    Ok(SparseLatinSquare {
        n,
        k: perms.len(),
        grid,
    })
}

/// `G_L = ⟨σ_1, …, σ_K⟩`.
pub fn hopf_image_group(l: &SparseLatinSquare, cap: usize) -> Result<PermutationGroup> {
    generate_group(&to_permutations(l), cap)
}

/// Whether `G_L ⊆ G`, closing `G_L` under a cap of `|G| + 1`.
pub fn hopf_image_within(l: &SparseLatinSquare, g: &PermutationGroup) -> bool {
    let perms = to_permutations(l);
    if !perms.iter().all(|p| g.contains(p)) {
        return false;
    }
    match generate_group(&perms, g.order() + 1) {
        Ok(h) => h.is_subgroup_of(g),
        Err(_) => false,
    }
}

/// `L_{N,K}^G`: squares whose Hopf image group lies in `G`.
pub fn admissible_squares(n: usize, k: usize, g: &PermutationGroup) -> Result<Vec<SparseLatinSquare>> {
    if g.degree() != n {
        return Err(Error::DegreeMismatch(n, g.degree()));
    }
    let candidates: Vec<SparseLatinSquare> = enumerate(n, k).collect();
    Ok(candidates.into_par_iter().filter(|l| hopf_image_within(l, g)).collect())
}

/// `(L^τ)_ij = L_{τ⁻¹(i) j}`.
pub fn act(tau: &Permutation, l: &SparseLatinSquare) -> Result<SparseLatinSquare> {
    if tau.degree() != l.n {
        return Err(Error::DegreeMismatch(l.n, tau.degree()));
    }
    let inv = tau.inverse();
    Ok(SparseLatinSquare {
        n: l.n,
        k: l.k,
        grid: (0..l.n).map(|i| l.grid[inv.apply(i)].clone()).collect(),
    })
}
