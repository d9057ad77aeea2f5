//! The projective space PG(N,q): canonical point enumeration, dense integer
//! ids, rank and span queries, hyperplanes.
//!
//! Every point is stored once in canonical form (leftmost nonzero coordinate
//! equal to 1) and addressed by a dense id in `[0, theta)`. Ids follow the
//! lexicographic order of the canonical coordinate vectors, so id 0 is
//! (0,...,0,1). Hyperplanes are represented by the id of their dual point:
//! a point lies on the hyperplane iff the dual linear form vanishes on it.

use crate::field::{FieldElement, FieldSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on enumerated points; keeps the id tables comfortably in memory.
pub const MAX_POINTS: u128 = 4_000_000;

/// Dense index of a projective point.
pub type PointIndex = u32;

/// A hyperplane, identified by the dense id of its dual point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperplane(pub PointIndex);

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("PG({n},{q}) has {required} points, exceeding the supported maximum {MAX_POINTS}")]
    TooManyPoints { n: u32, q: u32, required: u128 },
    #[error("no hyperplane is skew to the given {0}-point set")]
    NoSkewHyperplane(usize),
    #[error("dimension must be at least 1, got {0}")]
    DimensionTooSmall(u32),
}

/// theta(N,q) = (q^(N+1)-1)/(q-1), the number of points of PG(N,q).
/// Accepts N = -1 (empty space) for the degenerate cases in size formulas.
pub fn theta(n: i64, q: u64) -> u128 {
    if n < 0 {
        return 0;
    }
    let q = q as u128;
    (q.pow(n as u32 + 1) - 1) / (q - 1)
}

/// PG(N,q) with precomputed canonical coordinates for every point.
pub struct ProjGeometry {
    field: FieldSpec,
    dim: u32,
    width: usize,
    theta: u32,
    points: Vec<FieldElement>,
    block_offset: Vec<u32>,
}

impl ProjGeometry {
    /// Enumerates PG(N,q) over the given field. Ids 0..theta-1 are assigned in
    /// lexicographic coordinate order.
    pub fn new(field: FieldSpec, n: u32) -> Result<Self, GeometryError> {
        if n < 1 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let q = field.q();
        let required = theta(n as i64, q as u64);
        if required > MAX_POINTS {
            return Err(GeometryError::TooManyPoints { n, q, required });
        }
        let width = n as usize + 1;
        let count = required as usize;
        let mut points = vec![0u16; count * width];
        let mut block_offset = vec![0u32; width];
        let mut id: usize = 0;
        for f in (0..width).rev() {
            block_offset[f] = id as u32;
            let mut v = vec![0u16; width];
            v[f] = 1;
            'block: loop {
                points[id * width..(id + 1) * width].copy_from_slice(&v);
                id += 1;
                // advance v[f+1..] as a base-q counter, most significant first
                let mut pos = width;
                loop {
                    if pos == f + 1 {
                        break 'block;
                    }
                    pos -= 1;
                    v[pos] += 1;
                    if (v[pos] as u32) < q {
                        break;
                    }
                    v[pos] = 0;
                }
            }
        }
        debug_assert_eq!(id, count);
        Ok(ProjGeometry {
            field,
            dim: n,
            width,
            theta: count as u32,
            points,
            block_offset,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Projective dimension N.
    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Coordinates per point, N+1.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_points(&self) -> u32 {
        self.theta
    }

    #[inline]
    pub fn coords(&self, id: PointIndex) -> &[FieldElement] {
        let i = id as usize * self.width;
        &self.points[i..i + self.width]
    }

    pub fn ids(&self) -> impl Iterator<Item = PointIndex> {
        0..self.theta
    }

    /// Scales `v` so its leftmost nonzero coordinate is 1.
    /// Returns false for the zero vector.
    pub fn canonicalize(&self, v: &mut [FieldElement]) -> bool {
        let Some(f) = v.iter().position(|&c| c != 0) else {
            return false;
        };
        let lead = v[f];
        if lead != 1 {
            let s = self.field.inv_unchecked(lead);
            v[f] = 1;
            for c in v[f + 1..].iter_mut() {
                *c = self.field.mul(*c, s);
            }
        }
        true
    }

    /// Id of a vector already in canonical form.
    #[inline]
    pub fn id_of_canonical(&self, v: &[FieldElement]) -> PointIndex {
        let f = v.iter().position(|&c| c != 0).expect("nonzero vector");
        debug_assert_eq!(v[f], 1);
        let mut t = 0u32;
        for &c in &v[f + 1..] {
            t = t * self.field.q() + c as u32;
        }
        self.block_offset[f] + t
    }

    /// Canonicalizes `v` in place and returns its id; None for the zero vector.
    #[inline]
    pub fn canonical_id(&self, v: &mut [FieldElement]) -> Option<PointIndex> {
        if !self.canonicalize(v) {
            return None;
        }
        Some(self.id_of_canonical(v))
    }

    /// The dual pairing: sum of coordinatewise products.
    #[inline]
    pub fn eval_form(&self, dual: &[FieldElement], point: &[FieldElement]) -> FieldElement {
        let mut acc = 0u16;
        for (&d, &x) in dual.iter().zip(point) {
            acc = self.field.add(acc, self.field.mul(d, x));
        }
        acc
    }

    /// Row rank of a list of coordinate vectors (elimination on copies).
    pub fn rank_rows<'a, I: IntoIterator<Item = &'a [FieldElement]>>(&self, rows: I) -> usize {
        let mut ech = Echelon::new(&self.field, self.width);
        for row in rows {
            ech.insert(row);
        }
        ech.rank()
    }

    pub fn rank_ids(&self, ids: &[PointIndex]) -> usize {
        self.rank_rows(ids.iter().map(|&id| self.coords(id)))
    }

    /// M points are in general position iff they span an (M-1)-subspace.
    pub fn in_general_position(&self, ids: &[PointIndex]) -> bool {
        self.rank_ids(ids) == ids.len()
    }

    /// True iff `p` lies in the span of the basis points.
    pub fn span_contains(&self, basis: &[PointIndex], p: PointIndex) -> bool {
        let mut ech = Echelon::new(&self.field, self.width);
        for &id in basis {
            ech.insert(self.coords(id));
        }
        ech.contains(self.coords(p))
    }

    /// All points of the hyperplane (the zero set of the dual form),
    /// in ascending id order.
    pub fn hyperplane_points(&self, h: Hyperplane) -> Vec<PointIndex> {
        let dual = self.coords(h.0).to_vec();
        self.ids()
            .filter(|&id| self.eval_form(&dual, self.coords(id)) == 0)
            .collect()
    }

    pub fn hyperplane_contains(&self, h: Hyperplane, p: PointIndex) -> bool {
        self.eval_form(self.coords(h.0), self.coords(p)) == 0
    }

    /// First hyperplane in dual id order containing no point of `set`.
    pub fn find_skew_hyperplane(&self, set: &[PointIndex]) -> Result<Hyperplane, GeometryError> {
        self.ids()
            .find(|&dual| self.is_skew(dual, set))
            .map(Hyperplane)
            .ok_or(GeometryError::NoSkewHyperplane(set.len()))
    }

    /// Like `find_skew_hyperplane` but scanning dual ids in a seeded random
    /// order, so runs are reproducible per seed.
    pub fn find_skew_hyperplane_seeded(
        &self,
        set: &[PointIndex],
        seed: u64,
    ) -> Result<Hyperplane, GeometryError> {
        let mut order: Vec<PointIndex> = self.ids().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        order
            .into_iter()
            .find(|&dual| self.is_skew(dual, set))
            .map(Hyperplane)
            .ok_or(GeometryError::NoSkewHyperplane(set.len()))
    }

    fn is_skew(&self, dual: PointIndex, set: &[PointIndex]) -> bool {
        let d = self.coords(dual);
        set.iter()
            .all(|&p| self.eval_form(d, self.coords(p)) != 0)
    }

    /// Expands a direction vector into its e prime-power scalar shifts
    /// x^j * row. Repeated addition of these walks through every GF(q)
    /// multiple of the row, since GF(q) is an e-dimensional space over GF(p).
    pub(crate) fn scalar_shifts(&self, row: &[FieldElement]) -> Vec<Vec<FieldElement>> {
        let p = self.field.p() as u64;
        (0..self.field.e())
            .map(|j| {
                let s = p.pow(j) as FieldElement;
                row.iter().map(|&c| self.field.mul(s, c)).collect()
            })
            .collect()
    }

    /// Visits every projective point of the span of `basis` exactly once.
    /// The basis rows must be linearly independent.
    pub fn for_each_span_point<F: FnMut(PointIndex)>(
        &self,
        basis: &[&[FieldElement]],
        mut visit: F,
    ) {
        let p = self.field.p() as u16;
        let mut x = vec![0u16; self.width];
        let mut scratch = vec![0u16; self.width];
        for lead in 0..basis.len() {
            // combinations with coefficient 1 on basis[lead], 0 before it,
            // free GF(q) coefficients after it, realized as GF(p) digits
            // over the scalar shifts
            x.copy_from_slice(basis[lead]);
            let free: Vec<Vec<FieldElement>> = basis[lead + 1..]
                .iter()
                .flat_map(|b| self.scalar_shifts(b))
                .collect();
            let mut digits = vec![0u16; free.len()];
            'combos: loop {
                scratch.copy_from_slice(&x);
                let id = self
                    .canonical_id(&mut scratch)
                    .expect("independent basis rows");
                visit(id);
                // odometer; adding a shift p times is a no-op in char p
                let mut d = 0;
                loop {
                    if d == free.len() {
                        break 'combos;
                    }
                    add_into(&self.field, &mut x, &free[d]);
                    digits[d] += 1;
                    if digits[d] < p {
                        break;
                    }
                    digits[d] = 0;
                    d += 1;
                }
            }
        }
    }

    /// Ids of all points of the span of the given points.
    pub fn span_points(&self, ids: &[PointIndex]) -> Vec<PointIndex> {
        let mut ech = Echelon::new(&self.field, self.width);
        for &id in ids {
            ech.insert(self.coords(id));
        }
        let rows: Vec<&[FieldElement]> = ech.rows().collect();
        let mut out = Vec::new();
        self.for_each_span_point(&rows, |id| out.push(id));
        out.sort_unstable();
        out
    }
}

#[inline]
fn add_into(field: &FieldSpec, dst: &mut [FieldElement], src: &[FieldElement]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = field.add(*d, s);
    }
}

/// Row-echelon accumulator for rank and membership queries.
/// Rows are reduced copies; stored points are never mutated.
pub struct Echelon<'f> {
    field: &'f FieldSpec,
    width: usize,
    rows: Vec<Vec<FieldElement>>,
    pivots: Vec<usize>,
}

impl<'f> Echelon<'f> {
    pub fn new(field: &'f FieldSpec, width: usize) -> Self {
        Echelon {
            field,
            width,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Reduces `row` against the accumulated rows; inserts the residue if it
    /// is nonzero. Returns true when the rank grew.
    pub fn insert(&mut self, row: &[FieldElement]) -> bool {
        debug_assert_eq!(row.len(), self.width);
        let mut r = row.to_vec();
        self.reduce(&mut r);
        let Some(p) = r.iter().position(|&c| c != 0) else {
            return false;
        };
        let s = self.field.inv_unchecked(r[p]);
        for c in r.iter_mut() {
            *c = self.field.mul(*c, s);
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    /// True iff `row` lies in the span of the inserted rows.
    pub fn contains(&self, row: &[FieldElement]) -> bool {
        let mut r = row.to_vec();
        self.reduce(&mut r);
        r.iter().all(|&c| c == 0)
    }

    fn reduce(&self, r: &mut [FieldElement]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = r[p];
            if c == 0 {
                continue;
            }
            for (dst, &src) in r.iter_mut().zip(row) {
                *dst = self.field.sub(*dst, self.field.mul(c, src));
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[FieldElement]> {
        self.rows.iter().map(|r| r.as_slice())
    }
}
