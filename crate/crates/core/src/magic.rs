//! Dense complex linear algebra for magic unitaries and projection frames.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tol;

pub type ComplexMatrix = DMatrix<Complex64>;

/// JSON form of a matrix: rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJson(pub ComplexMatrix);

impl Serialize for MatrixJson {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = &self.0;
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("matrix must be a nonempty rectangle"));
        }
        if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("non-finite matrix entry"));
        }
        Ok(MatrixJson(DMatrix::from_fn(nrows, ncols, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        })))
    }
}

pub fn identity(k: usize) -> ComplexMatrix {
    DMatrix::identity(k, k)
}

pub fn zeros(k: usize) -> ComplexMatrix {
    DMatrix::zeros(k, k)
}

/// Frobenius norm.
pub fn norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    m.clone().singular_values().max()
}

/// `‖U*U − I‖`, Frobenius.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    norm(&(u.adjoint() * u - identity(u.nrows())))
}

/// `max(‖P² − P‖, ‖P* − P‖)`, Frobenius.
pub fn projection_defect(p: &ComplexMatrix) -> f64 {
    if p.nrows() != p.ncols() {
        return f64::INFINITY;
    }
    norm(&(p * p - p)).max(norm(&(p.adjoint() - p)))
}

/// Normalized trace.
pub fn normalized_trace(m: &ComplexMatrix) -> Complex64 {
    m.trace() / m.nrows() as f64
}

/// Orthogonal projection onto `ℂ ξ` for a unit vector `ξ`.
pub fn rank_one_projection(xi: &DVector<Complex64>) -> ComplexMatrix {
    xi * xi.adjoint()
}

/// Haar-distributed `k × k` unitary: Ginibre matrix, QR, then the phase
/// correction that makes the triangular factor's diagonal positive.
pub fn haar_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> ComplexMatrix {
    assert!(k >= 1, "unitary size must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(k, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..k {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A complete family of mutually orthogonal rank-one projections.
#[derive(Clone, Debug)]
pub struct ProjectionFrame {
    projections: Vec<ComplexMatrix>,
    source: Option<ComplexMatrix>,
}

/// Projections onto the columns of `u`.
pub fn frame_from_unitary(u: &ComplexMatrix) -> Result<ProjectionFrame> {
    let defect = unitarity_defect(u);
    if defect > tol::VALIDATION {
        return Err(Error::NotUnitary(defect));
    }
    let projections = (0..u.ncols())
        .map(|j| rank_one_projection(&u.column(j).into_owned()))
        .collect();
    Ok(ProjectionFrame {
        projections,
        source: Some(u.clone()),
    })
}

impl ProjectionFrame {
    pub fn standard(k: usize) -> Self {
        frame_from_unitary(&identity(k)).expect("identity is unitary")
    }

    pub fn from_projections(projections: Vec<ComplexMatrix>) -> Result<Self> {
        let frame = Self {
            projections,
            source: None,
        };
        let defect = frame.defect();
        if defect > tol::VALIDATION {
            return Err(Error::InvalidFamily(format!(
                "projections do not form a frame (defect {defect:e})"
            )));
        }
        Ok(frame)
    }

    pub fn dimension(&self) -> usize {
        self.projections.len()
    }

    /// Zero-based.
    pub fn projection(&self, x: usize) -> &ComplexMatrix {
        &self.projections[x]
    }

    pub fn projections(&self) -> &[ComplexMatrix] {
        &self.projections
    }

    pub fn source(&self) -> Option<&ComplexMatrix> {
        self.source.as_ref()
    }

    /// Largest violation of the frame invariants.
    pub fn defect(&self) -> f64 {
        let k = self.dimension();
        let mut worst: f64 = 0.0;
        let mut sum = zeros(k);
        for (a, p) in self.projections.iter().enumerate() {
            if p.nrows() != k || p.ncols() != k {
                return f64::INFINITY;
            }
            worst = worst.max(projection_defect(p));
            worst = worst.max((p.trace() - Complex64::new(1.0, 0.0)).norm());
            for q in &self.projections[a + 1..] {
                worst = worst.max(norm(&(p * q)));
            }
            sum += p;
        }
        worst.max(norm(&(sum - identity(k))))
    }
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    dimension: usize,
    projections: Vec<MatrixJson>,
}

impl Serialize for ProjectionFrame {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson {
            dimension: self.dimension(),
            projections: self.projections.iter().cloned().map(MatrixJson).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProjectionFrame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = FrameJson::deserialize(d)?;
        if raw.projections.len() != raw.dimension {
            return Err(serde::de::Error::custom("projection count differs from dimension"));
        }
        ProjectionFrame::from_projections(raw.projections.into_iter().map(|m| m.0).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// An `N × N` grid of `K × K` matrices.
#[derive(Clone, Debug)]
pub struct NumericMagicUnitary {
    n: usize,
    k: usize,
    entries: Vec<ComplexMatrix>,
}

impl NumericMagicUnitary {
    pub fn new(n: usize, k: usize, entries: Vec<ComplexMatrix>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        for e in &entries {
            if e.nrows() != k || e.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: e.nrows(),
                });
            }
        }
        Ok(Self { n, k, entries })
    }

    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, k, entries)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn fiber(&self) -> usize {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.entries[i * self.n + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ComplexMatrix {
        &mut self.entries[i * self.n + j]
    }

    /// Support at `threshold` on the operator norm of each entry.
    pub fn support(&self, threshold: f64) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| operator_norm(self.entry(i, j)) > threshold)
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    Projection,
    RowSum,
    ColumnSum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Defect {
    pub kind: DefectKind,
    /// Zero-based `(i, j)` for entries, `(i, i)` for a row or column.
    pub at: (usize, usize),
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub max_defect: f64,
    /// Defects above the tolerance.
    pub defects: Vec<Defect>,
}

pub fn validate_magic(m: &NumericMagicUnitary, tol: f64) -> ValidationReport {
    let n = m.n;
    let id = identity(m.k);
    let mut all = Vec::new();
    for i in 0..n {
        for j in 0..n {
            all.push(Defect {
                kind: DefectKind::Projection,
                at: (i, j),
                value: projection_defect(m.entry(i, j)),
            });
        }
    }
    for i in 0..n {
        let row: ComplexMatrix = (0..n).fold(zeros(m.k), |acc, j| acc + m.entry(i, j));
        let col: ComplexMatrix = (0..n).fold(zeros(m.k), |acc, j| acc + m.entry(j, i));
        all.push(Defect {
            kind: DefectKind::RowSum,
            at: (i, i),
            value: norm(&(row - &id)),
        });
        all.push(Defect {
            kind: DefectKind::ColumnSum,
            at: (i, i),
            value: norm(&(col - &id)),
        });
    }
    let max_defect = all.iter().map(|d| d.value).fold(0.0, f64::max);
    let defects: Vec<Defect> = all.into_iter().filter(|d| !(d.value <= tol)).collect();
    ValidationReport {
        passed: defects.is_empty(),
        max_defect,
        defects,
    }
}

/// Block-diagonal grid `diag(B_1, …, B_M)` with zero off-diagonal entries.
pub fn assemble_block_magic(blocks: &[NumericMagicUnitary]) -> Result<NumericMagicUnitary> {
    let first = blocks.first().ok_or(Error::EmptySamples)?;
    let k = first.k;
    if let Some(b) = blocks.iter().find(|b| b.k != k) {
        return Err(Error::DimensionMismatch { expected: k, got: b.k });
    }
    let n: usize = blocks.iter().map(|b| b.n).sum();
    let mut owner = Vec::with_capacity(n);
    for (b, block) in blocks.iter().enumerate() {
        for local in 0..block.n {
            owner.push((b, local));
        }
    }
    NumericMagicUnitary::from_fn(n, k, |i, j| {
        let ((bi, li), (bj, lj)) = (owner[i], owner[j]);
        if bi == bj {
            blocks[bi].entry(li, lj).clone()
        } else {
            zeros(k)
        }
    })
}

/// The orbit relation `i ∼ j ⇔ u_ij ≠ 0` and its support matrix.
///
/// `epsilon` stores the support (1 where the coordinate is nonzero), the
/// complement of the `δ_{u_ij,0}` convention.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitDecomposition {
    pub blocks: Vec<Vec<usize>>,
    pub epsilon: Vec<Vec<u8>>,
    /// Set when the raw support was not already an equivalence relation.
    pub diagnostic: Option<String>,
}

pub enum PatternSource<'a> {
    Support(&'a [Vec<bool>]),
    Samples {
        points: &'a [NumericMagicUnitary],
        threshold: f64,
    },
}

pub fn orbit_decomposition(source: PatternSource<'_>) -> Result<OrbitDecomposition> {
    let support: Vec<Vec<bool>> = match source {
        PatternSource::Support(s) => s.to_vec(),
        PatternSource::Samples { points, threshold } => {
            let first = points.first().ok_or(Error::EmptySamples)?;
            let n = first.n;
            let mut s = vec![vec![false; n]; n];
            for p in points {
                if p.n != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.n });
                }
                for (i, row) in p.support(threshold).into_iter().enumerate() {
                    for (j, x) in row.into_iter().enumerate() {
                        s[i][j] |= x;
                    }
                }
            }
            s
        }
    };
    let n = support.len();
    if support.iter().any(|r| r.len() != n) {
        return Err(Error::NotSquare);
    }

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if support[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block = vec![usize::MAX; n];
    let mut label = vec![0; n];
    for x in 0..n {
        let r = find(&mut parent, x);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        label[x] = root_block[r];
        blocks[root_block[r]].push(x);
    }
    let epsilon: Vec<Vec<u8>> = (0..n)
        .map(|i| (0..n).map(|j| u8::from(label[i] == label[j])).collect())
        .collect();

    let mut issues = Vec::new();
    if (0..n).any(|i| !support[i][i]) {
        issues.push("not reflexive");
    }
    if (0..n).any(|i| (0..n).any(|j| support[i][j] != support[j][i])) {
        issues.push("not symmetric");
    }
    if (0..n).any(|i| (0..n).any(|j| support[i][j] != (epsilon[i][j] == 1))) {
        issues.push("not transitive");
    }
    let diagnostic = (!issues.is_empty()).then(|| format!("raw support relation is {}", issues.join(", ")));
    Ok(OrbitDecomposition {
        blocks,
        epsilon,
        diagnostic,
    })
}

/// Common orbit size when all orbits have the same size.
pub fn quasi_transitivity(d: &OrbitDecomposition) -> Option<usize> {
    let first = d.blocks.first()?.len();
    d.blocks.iter().all(|b| b.len() == first).then_some(first)
}

/// Numerical rank of every entry of a quasi-flat model, as a 0/1 matrix.
///
/// Ranks count eigenvalues above 1/2 of the Hermitian part. Rows and columns
/// of the result must each sum to the fiber dimension.
pub fn rank_pattern(m: &NumericMagicUnitary, tol: f64) -> Result<Vec<Vec<u8>>> {
    let n = m.n;
    let mut ranks = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in 0..n {
            let e = m.entry(i, j);
            let defect = projection_defect(e);
            if defect > tol {
                return Err(Error::NotProjection { i, j, defect });
            }
            let herm = (e + e.adjoint()) * Complex64::new(0.5, 0.0);
            let rank = SymmetricEigen::new(herm)
                .eigenvalues
                .iter()
                .filter(|&&x| x > 0.5)
                .count();
            if rank >= 2 {
                return Err(Error::RankTooLarge { i, j, rank });
            }
            ranks[i][j] = rank as u8;
        }
    }
    for (line, get) in [
        (
            "row",
            Box::new(|a: usize, b: usize| ranks[a][b]) as Box<dyn Fn(usize, usize) -> u8>,
        ),
        ("column", Box::new(|a: usize, b: usize| ranks[b][a])),
    ] {
        for a in 0..n {
            let sum: usize = (0..n).map(|b| get(a, b) as usize).sum();
            if sum != m.k {
                return Err(Error::RankSumMismatch {
                    line,
                    index: a,
                    sum,
                    expected: m.k,
                });
            }
        }
    }
    Ok(ranks)
}
