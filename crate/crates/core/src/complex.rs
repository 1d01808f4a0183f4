//! Simplicial complexes, oriented incidence matrices and Hodge Laplacians.
//!
//! Every simplex is stored with its vertices in ascending order, and that
//! order is its reference orientation: the face obtained by dropping the
//! `j`-th vertex enters the boundary with sign `(-1)^j`. Within each order the
//! simplices are sorted lexicographically, and all matrices are indexed
//! against that order.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sparse::{SparseMatrix, SparsityPattern};

#[derive(Debug, Error, PartialEq)]
pub enum ComplexError {
    #[error("no simplices given")]
    EmptyInput,
    #[error("simplex {0:?} has no vertices")]
    EmptySimplex(Vec<usize>),
    #[error("simplex {0:?} repeats a vertex")]
    DuplicateVertex(Vec<usize>),
    #[error("order {order} out of range (complex has max order {max_order})")]
    OrderOutOfRange { order: usize, max_order: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// An oriented simplex; vertices strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Sorts the vertices. Fails on an empty list or a repeated vertex.
    pub fn new(mut vertices: Vec<usize>) -> Result<Self, ComplexError> {
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex(vertices));
        }
        let original = vertices.clone();
        vertices.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(ComplexError::DuplicateVertex(original));
        }
        Ok(Self(vertices))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// Face obtained by dropping the `j`-th vertex.
    pub fn face(&self, j: usize) -> Simplex {
        let mut v = self.0.clone();
        v.remove(j);
        Simplex(v)
    }
}

/// A finite simplicial complex closed under taking faces.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Simplex>>,
    index: Vec<HashMap<Simplex, usize>>,
}

/// Lower, upper and full Hodge Laplacian of one order.
#[derive(Clone, Debug)]
pub struct Laplacians {
    pub down: SparseMatrix,
    pub up: SparseMatrix,
    pub full: SparseMatrix,
}

/// Lower and upper neighbourhoods of every simplex of one order. Each
/// neighbourhood contains the simplex itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodTable {
    pub order: usize,
    pub upper: Vec<Vec<usize>>,
    pub lower: Vec<Vec<usize>>,
    pub self_inclusive: bool,
}

impl NeighborhoodTable {
    pub fn upper_pattern(&self) -> SparsityPattern {
        SparsityPattern::from_rows(&self.upper)
    }

    pub fn lower_pattern(&self) -> SparsityPattern {
        SparsityPattern::from_rows(&self.lower)
    }
}

impl SimplicialComplex {
    /// Builds the closure of the given simplices. Duplicates collapse.
    pub fn build(top_simplices: &[Vec<usize>]) -> Result<Self, ComplexError> {
        if top_simplices.is_empty() {
            return Err(ComplexError::EmptyInput);
        }
        let mut by_order: Vec<BTreeSet<Simplex>> = Vec::new();
        for verts in top_simplices {
            let s = Simplex::new(verts.clone())?;
            let n = s.0.len();
            if by_order.len() < n {
                by_order.resize_with(n, BTreeSet::new);
            }
            // every non-empty subset, by bitmask
            for mask in 1u64..(1u64 << n) {
                let face: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| s.0[i]).collect();
                let k = face.len() - 1;
                by_order[k].insert(Simplex(face));
            }
        }
        let simplices: Vec<Vec<Simplex>> = by_order.into_iter().map(|set| set.into_iter().collect()).collect();
        let index = simplices
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(Self { simplices, index })
    }

    /// Highest order with at least one simplex.
    pub fn max_order(&self) -> usize {
        self.simplices.len() - 1
    }

    /// Number of simplices of order `k` (zero above the max order).
    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn simplices(&self, k: usize) -> &[Simplex] {
        self.simplices.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, simplex: &Simplex) -> Option<usize> {
        self.index.get(simplex.order())?.get(simplex).copied()
    }

    /// Index of the simplex with these (unsorted) vertices.
    pub fn find(&self, vertices: &[usize]) -> Option<usize> {
        let s = Simplex::new(vertices.to_vec()).ok()?;
        self.index_of(&s)
    }

    fn check_order(&self, k: usize) -> Result<(), ComplexError> {
        if k > self.max_order() {
            return Err(ComplexError::OrderOutOfRange { order: k, max_order: self.max_order() });
        }
        Ok(())
    }

    /// Signed integer incidence entries `(face_row, simplex_col, ±1)` of `B_k`.
    pub fn incidence_entries(&self, k: usize) -> Result<Vec<(usize, usize, i8)>, ComplexError> {
        if k == 0 {
            return Err(ComplexError::OrderOutOfRange { order: 0, max_order: self.max_order() });
        }
        self.check_order(k)?;
        let mut entries = Vec::with_capacity(self.count(k) * (k + 1));
        for (col, s) in self.simplices[k].iter().enumerate() {
            for j in 0..=k {
                let row = self.index[k - 1][&s.face(j)];
                let sign = if j % 2 == 0 { 1 } else { -1 };
                entries.push((row, col, sign));
            }
        }
        Ok(entries)
    }

    /// `B_k`, of shape `N_{k-1} × N_k`.
    pub fn incidence_matrix(&self, k: usize) -> Result<SparseMatrix, ComplexError> {
        let entries = self.incidence_entries(k)?;
        let t: Vec<_> = entries.into_iter().map(|(r, c, s)| (r, c, f64::from(s))).collect();
        Ok(SparseMatrix::from_triplets(self.count(k - 1), self.count(k), &t))
    }

    pub fn laplacian(&self, k: usize) -> Result<Laplacians, ComplexError> {
        self.check_order(k)?;
        let n = self.count(k);
        let down = if k == 0 {
            SparseMatrix::zeros(n, n)
        } else {
            let b = self.incidence_matrix(k)?;
            b.transpose().mul_sparse(&b)
        };
        let up = if k == self.max_order() {
            SparseMatrix::zeros(n, n)
        } else {
            let b = self.incidence_matrix(k + 1)?;
            b.mul_sparse(&b.transpose())
        };
        let full = down.add(&up);
        Ok(Laplacians { down, up, full })
    }

    /// Upper and lower neighbourhoods read off the Laplacian supports, each
    /// including the simplex itself.
    pub fn neighborhoods(&self, k: usize) -> Result<NeighborhoodTable, ComplexError> {
        let lap = self.laplacian(k)?;
        let support = |m: &SparseMatrix| -> Vec<Vec<usize>> {
            (0..self.count(k))
                .map(|i| {
                    let (cols, _) = m.row(i);
                    let mut row: Vec<usize> = cols.to_vec();
                    if let Err(pos) = row.binary_search(&i) {
                        row.insert(pos, i);
                    }
                    row
                })
                .collect()
        };
        Ok(NeighborhoodTable { order: k, upper: support(&lap.up), lower: support(&lap.down), self_inclusive: true })
    }

    /// Simplices that are not a face of any higher-order simplex.
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        let mut has_coface: Vec<Vec<bool>> = self.simplices.iter().map(|l| vec![false; l.len()]).collect();
        for k in 1..=self.max_order() {
            for s in &self.simplices[k] {
                for j in 0..=k {
                    has_coface[k - 1][self.index[k - 1][&s.face(j)]] = true;
                }
            }
        }
        let mut out = Vec::new();
        for (k, list) in self.simplices.iter().enumerate() {
            for (i, s) in list.iter().enumerate() {
                if !has_coface[k][i] {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// Indices of the order-`k` simplices that are maximal.
    pub fn maximal_indices(&self, k: usize) -> Vec<usize> {
        self.maximal_simplices().into_iter().filter(|s| s.order() == k).map(|s| self.index[k][&s]).collect()
    }

    /// Indices of the order-`k+1` cofaces of simplex `i` of order `k`.
    pub fn cofaces(&self, k: usize, i: usize) -> Vec<usize> {
        let s = &self.simplices[k][i];
        if k + 1 > self.max_order() {
            return Vec::new();
        }
        self.simplices[k + 1]
            .iter()
            .enumerate()
            .filter(|(_, t)| (0..=k + 1).any(|j| &t.face(j) == s))
            .map(|(idx, _)| idx)
            .collect()
    }

    /// Applies a vertex relabeling `v -> perm[v]` and re-canonicalises.
    pub fn relabel(&self, perm: &[usize]) -> Result<SimplicialComplex, ComplexError> {
        let tops: Vec<Vec<usize>> =
            self.maximal_simplices().iter().map(|s| s.vertices().iter().map(|&v| perm[v]).collect()).collect();
        SimplicialComplex::build(&tops)
    }

    /// Canonical text serialization: maximal simplices, ordered by order then
    /// lexicographically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut tops = self.maximal_simplices();
        tops.sort_by(|a, b| (a.order(), a.vertices()).cmp(&(b.order(), b.vertices())));
        for s in tops {
            let _ = write!(out, "{}", s.order());
            for v in s.vertices() {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format: one `k v0 .. vk` simplex per line, `#`
    /// comments and blank lines ignored.
    pub fn from_text(text: &str) -> Result<Self, ComplexError> {
        let mut tops = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| ComplexError::Parse { line: lineno + 1, message };
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|tok| tok.parse::<usize>().map_err(|e| parse_err(format!("bad integer {tok:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            let (&k, verts) = nums.split_first().expect("non-empty line");
            if verts.len() != k + 1 {
                return Err(parse_err(format!("order {k} needs {} vertices, got {}", k + 1, verts.len())));
            }
            if verts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(parse_err("vertex ids must be strictly ascending".into()));
            }
            tops.push(verts.to_vec());
        }
        Self::build(&tops)
    }

    pub fn load(path: &Path) -> Result<Self, ComplexError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ComplexError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ComplexError> {
        std::fs::write(path, self.to_text())
            .map_err(|e| ComplexError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    /// SHA-256 of the canonical text serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Number of connected components of the 1-skeleton.
    pub fn connected_components(&self) -> usize {
        let n = self.count(0);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = n;
        for e in self.simplices(1) {
            let a = find(&mut parent, self.index[0][&Simplex(vec![e.0[0]])]);
            let b = find(&mut parent, self.index[0][&Simplex(vec![e.0[1]])]);
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_rows(m: &SparseMatrix) -> Vec<Vec<f64>> {
        let d = m.to_dense();
        (0..d.rows()).map(|r| d.row(r).to_vec()).collect()
    }

    fn hollow() -> SimplicialComplex {
        SimplicialComplex::build(&[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    fn filled() -> SimplicialComplex {
        SimplicialComplex::build(&[vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn closure_of_one_triangle() {
        let x = filled();
        assert_eq!(x.counts(), vec![3, 3, 1]);
        let edges: Vec<_> = x.simplices(1).iter().map(|s| s.vertices().to_vec()).collect();
        assert_eq!(edges, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn hollow_triangle_has_no_two_simplices() {
        let x = hollow();
        assert_eq!(x.max_order(), 1);
        assert_eq!(x.count(1), 3);
        assert_eq!(x.count(2), 0);
    }

    #[test]
    fn two_triangles_sharing_an_edge() {
        let x = SimplicialComplex::build(&[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        assert_eq!(x.counts(), vec![4, 5, 2]);
    }

    #[test]
    fn duplicates_collapse_and_errors_surface() {
        let x = SimplicialComplex::build(&[vec![2, 1, 0], vec![0, 1, 2], vec![0, 1]]).unwrap();
        assert_eq!(x.counts(), vec![3, 3, 1]);
        assert_eq!(SimplicialComplex::build(&[]), Err(ComplexError::EmptyInput));
        assert!(matches!(SimplicialComplex::build(&[vec![0, 1, 1]]), Err(ComplexError::DuplicateVertex(_))));
    }

    #[test]
    fn incidence_sign_rule() {
        assert_eq!(
            dense_rows(&hollow().incidence_matrix(1).unwrap()),
            vec![vec![-1.0, -1.0, 0.0], vec![1.0, 0.0, -1.0], vec![0.0, 1.0, 1.0]]
        );
        assert_eq!(dense_rows(&filled().incidence_matrix(2).unwrap()), vec![vec![1.0], vec![-1.0], vec![1.0]]);
        let single = SimplicialComplex::build(&[vec![0, 1]]).unwrap();
        assert_eq!(dense_rows(&single.incidence_matrix(1).unwrap()), vec![vec![-1.0], vec![1.0]]);
        assert!(matches!(hollow().incidence_matrix(2), Err(ComplexError::OrderOutOfRange { .. })));
    }

    #[test]
    fn laplacians_by_hand() {
        let l = hollow().laplacian(1).unwrap();
        assert_eq!(dense_rows(&l.full), vec![vec![2.0, 1.0, -1.0], vec![1.0, 2.0, 1.0], vec![-1.0, 1.0, 2.0]]);
        assert_eq!(l.up.nnz(), 0);
        let l = filled().laplacian(1).unwrap();
        assert_eq!(dense_rows(&l.up), vec![vec![1.0, -1.0, 1.0], vec![-1.0, 1.0, -1.0], vec![1.0, -1.0, 1.0]]);
    }

    #[test]
    fn graph_laplacian_at_order_zero() {
        // path 0-1-2 plus isolated edge 3-4
        let x = SimplicialComplex::build(&[vec![0, 1], vec![1, 2], vec![3, 4]]).unwrap();
        let l = x.laplacian(0).unwrap();
        let expected = vec![
            vec![1.0, -1.0, 0.0, 0.0, 0.0],
            vec![-1.0, 2.0, -1.0, 0.0, 0.0],
            vec![0.0, -1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, -1.0],
            vec![0.0, 0.0, 0.0, -1.0, 1.0],
        ];
        assert_eq!(dense_rows(&l.full), expected);
        assert_eq!(l.down.nnz(), 0);
    }

    #[test]
    fn neighborhood_examples() {
        let n = filled().neighborhoods(1).unwrap();
        assert!(n.upper.iter().all(|row| row == &vec![0, 1, 2]));
        let n = hollow().neighborhoods(1).unwrap();
        assert_eq!(n.upper, vec![vec![0], vec![1], vec![2]]);
        let x = SimplicialComplex::build(&[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let e12 = x.find(&[1, 2]).unwrap();
        assert_eq!(x.neighborhoods(1).unwrap().upper[e12].len(), 5);
    }

    #[test]
    fn text_round_trip_and_parse_errors() {
        let x = hollow();
        assert_eq!(SimplicialComplex::from_text(&x.to_text()).unwrap(), x);
        let err = SimplicialComplex::from_text("# header\n1 0 1\n2 0 1\n").unwrap_err();
        assert_eq!(err, ComplexError::Parse { line: 3, message: "order 2 needs 3 vertices, got 2".into() });
        assert_eq!(SimplicialComplex::from_text("# only a comment\n"), Err(ComplexError::EmptyInput));
        assert!(matches!(SimplicialComplex::from_text("1 2 1\n"), Err(ComplexError::Parse { line: 1, .. })));
    }

    #[test]
    fn fingerprint_ignores_comments() {
        let a = SimplicialComplex::from_text("# a\n2 0 1 2\n").unwrap();
        let b = SimplicialComplex::from_text("2 0 1 2\n1 0 1\n").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), hollow().fingerprint());
    }
}
