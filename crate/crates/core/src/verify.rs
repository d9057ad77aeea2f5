//! Independent brute-force verification: saturation level, covering radius,
//! minimum distance, AMDS status, and exhaustive minima for tiny spaces.
//!
//! Everything here recomputes from first principles. The covering radius
//! walks the whole syndrome space in breadth-first layers; the saturation
//! level marks the spans of all (rho+1)-subsets; the minimum distance scans
//! column subsets by increasing size. Negative answers carry witnesses.

use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::geometry::{Echelon, GeometryError, PointIndex, ProjGeometry};
use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

/// Syndrome spaces larger than this are refused.
pub const MAX_SYNDROMES: u128 = 1 << 26;
/// Exhaustive minimum searches are limited to spaces this small.
pub const MAX_EXHAUSTIVE_POINTS: u128 = 40;
/// And to subset families this small.
pub const MAX_EXHAUSTIVE_SUBSETS: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("matrix must have full row rank {rows}, got rank {rank}")]
    NotFullRank { rank: usize, rows: usize },
    #[error("column {0} is zero; columns must be projective points")]
    ZeroColumn(usize),
    #[error("entry {value} at ({row},{col}) is not an element of GF({q})")]
    EntryOutOfRange { row: usize, col: usize, value: u32, q: u32 },
    #[error("code dimension is zero (all {0} columns independent); minimum distance undefined")]
    DimensionZero(usize),
    #[error("syndrome space has {required} states, exceeding the supported {MAX_SYNDROMES}")]
    SyndromeSpaceTooLarge { required: u128 },
    #[error("set of rank {rank} does not span PG({n},q); rank {required} required")]
    NotSpanning { rank: usize, n: u32, required: usize },
    #[error("saturation level exceeds the requested cap {0}")]
    SaturationAboveCap(u32),
    #[error("exhaustive search refused: PG({n},{q}) has {points} points (max {MAX_EXHAUSTIVE_POINTS}), next family has {subsets} subsets (max {MAX_EXHAUSTIVE_SUBSETS})")]
    ExhaustiveTooLarge { n: u32, q: u32, points: u128, subsets: u128 },
}

/// An r x n matrix over GF(q) whose columns are projective points.
/// Stored column-major: a column is the coordinate vector of a point.
#[derive(Debug, Clone)]
pub struct ParityCheckMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl ParityCheckMatrix {
    pub fn new(
        field: FieldSpec,
        rows: usize,
        cols: usize,
        entries: Vec<FieldElement>,
    ) -> Result<Self, VerifyError> {
        assert_eq!(entries.len(), rows * cols);
        let q = field.q();
        for (idx, &v) in entries.iter().enumerate() {
            if v as u32 >= q {
                return Err(VerifyError::EntryOutOfRange {
                    row: idx % rows,
                    col: idx / rows,
                    value: v as u32,
                    q,
                });
            }
        }
        for j in 0..cols {
            if entries[j * rows..(j + 1) * rows].iter().all(|&c| c == 0) {
                return Err(VerifyError::ZeroColumn(j));
            }
        }
        Ok(ParityCheckMatrix {
            field,
            rows,
            cols,
            entries,
        })
    }

    /// Columns are the canonical homogeneous coordinates of the given points.
    pub fn from_points(geom: &ProjGeometry, ids: &[PointIndex]) -> Self {
        let rows = geom.width();
        let mut entries = Vec::with_capacity(rows * ids.len());
        for &id in ids {
            entries.extend_from_slice(geom.coords(id));
        }
        ParityCheckMatrix {
            field: geom.field().clone(),
            rows,
            cols: ids.len(),
            entries,
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    /// Codimension r (number of rows).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Code length n (number of columns).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[FieldElement] {
        &self.entries[j * self.rows..(j + 1) * self.rows]
    }

    pub fn entry(&self, i: usize, j: usize) -> FieldElement {
        self.entries[j * self.rows + i]
    }

    pub fn rank(&self) -> usize {
        let mut ech = Echelon::new(&self.field, self.rows);
        for j in 0..self.cols {
            ech.insert(self.column(j));
        }
        ech.rank()
    }

    /// Smallest R such that every syndrome is a combination of at most R
    /// columns, by breadth-first layering of the whole syndrome space.
    /// Also returns a deepest syndrome, reached only at the final layer.
    pub fn covering_radius(&self) -> Result<RadiusCertificate, VerifyError> {
        let r = self.rows;
        let q = self.field.q() as u64;
        let required = (q as u128).pow(r as u32);
        if required > MAX_SYNDROMES {
            return Err(VerifyError::SyndromeSpaceTooLarge { required });
        }
        let rank = self.rank();
        if rank < r {
            return Err(VerifyError::NotFullRank { rank, rows: r });
        }
        let total = required as usize;
        // scaled columns as syndrome increments
        let mut increments: Vec<Vec<FieldElement>> = Vec::new();
        for j in 0..self.cols {
            for lambda in 1..q as u16 {
                let col = self.column(j);
                increments.push(col.iter().map(|&c| self.field.mul(lambda, c)).collect());
            }
        }
        let mut dist = vec![u8::MAX; total];
        dist[0] = 0;
        let mut frontier: Vec<usize> = vec![0];
        let mut unreached = total - 1;
        let mut layer = 0u32;
        let mut digits = vec![0u16; r];
        let mut last = 0usize;
        while unreached > 0 {
            layer += 1;
            let mut next = Vec::new();
            for &s in &frontier {
                let mut x = s;
                for d in digits.iter_mut() {
                    *d = (x % q as usize) as u16;
                    x /= q as usize;
                }
                for inc in &increments {
                    let mut idx = 0usize;
                    for i in (0..r).rev() {
                        idx = idx * q as usize + self.field.add(digits[i], inc[i]) as usize;
                    }
                    if dist[idx] == u8::MAX {
                        dist[idx] = layer.min(254) as u8;
                        next.push(idx);
                        unreached -= 1;
                        last = idx;
                    }
                }
            }
            debug_assert!(!next.is_empty(), "full rank guarantees progress");
            frontier = next;
        }
        let mut deep = vec![0u16; r];
        let mut x = last;
        for d in deep.iter_mut() {
            *d = (x % q as usize) as u16;
            x /= q as usize;
        }
        Ok(RadiusCertificate {
            radius: layer,
            deep_syndrome: deep,
        })
    }

    /// Smallest w such that some w columns are linearly dependent, with the
    /// first such column set as witness.
    pub fn min_distance(&self) -> Result<DistanceCertificate, VerifyError> {
        let upper = self.cols.min(self.rows + 1);
        for k in 1..=upper {
            for combo in (0..self.cols).combinations(k) {
                let mut ech = Echelon::new(&self.field, self.rows);
                let mut dependent = false;
                for &j in &combo {
                    if !ech.insert(self.column(j)) {
                        dependent = true;
                        break;
                    }
                }
                if dependent {
                    return Ok(DistanceCertificate {
                        distance: k as u32,
                        dependent_columns: combo,
                    });
                }
            }
        }
        Err(VerifyError::DimensionZero(self.cols))
    }

    /// Almost-MDS check: minimum distance equal to the codimension.
    pub fn is_amds(&self) -> Result<bool, VerifyError> {
        Ok(self.min_distance()?.distance as usize == self.rows)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusCertificate {
    pub radius: u32,
    /// A syndrome whose lightest expression uses exactly `radius` columns.
    pub deep_syndrome: Vec<FieldElement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceCertificate {
    pub distance: u32,
    pub dependent_columns: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationCertificate {
    pub level: u32,
    /// A point not covered at level-1; None when the level is 0.
    pub witness: Option<PointIndex>,
}

/// True iff `b` lies in the span of at most rho+1 points of the set.
pub fn is_covered_at(geom: &ProjGeometry, set: &[PointIndex], rho: u32, b: PointIndex) -> bool {
    let k = (rho as usize + 1).min(set.len());
    set.iter()
        .copied()
        .combinations(k)
        .any(|subset| geom.span_contains(&subset, b))
}

/// Points covered by the spans of all k-subsets of the set.
fn covered_at_mask(geom: &ProjGeometry, set: &[PointIndex], k: usize) -> FixedBitSet {
    let combos: Vec<Vec<PointIndex>> = set.iter().copied().combinations(k).collect();
    let kernel = |part: &[Vec<PointIndex>]| {
        let mut mask = FixedBitSet::with_capacity(geom.num_points() as usize);
        for ids in part {
            let mut ech = Echelon::new(geom.field(), geom.width());
            for &id in ids {
                ech.insert(geom.coords(id));
            }
            let rows: Vec<&[FieldElement]> = ech.rows().collect();
            geom.for_each_span_point(&rows, |id| mask.insert(id as usize));
        }
        mask
    };
    // below this size the fork/merge overhead outweighs the work
    #[cfg(feature = "parallel")]
    if combos.len() >= 128 {
        use rayon::prelude::*;
        let chunk = (combos.len() / (rayon::current_num_threads() * 4)).max(16);
        return combos
            .par_chunks(chunk)
            .map(&kernel)
            .reduce(
                || FixedBitSet::with_capacity(geom.num_points() as usize),
                |mut a, b| {
                    a.union_with(&b);
                    a
                },
            );
    }
    kernel(&combos)
}

/// Smallest rho such that every point of the space lies in the span of at
/// most rho+1 set points. Exhaustive over all points and subset sizes.
pub fn saturation_level(
    geom: &ProjGeometry,
    set: &[PointIndex],
    max_rho: u32,
) -> Result<SaturationCertificate, VerifyError> {
    let required = geom.width();
    let rank = geom.rank_ids(set);
    if rank < required {
        return Err(VerifyError::NotSpanning {
            rank,
            n: geom.dim(),
            required,
        });
    }
    let mut witness = None;
    for rho in 0..=max_rho.min(geom.dim()) {
        let k = (rho as usize + 1).min(set.len());
        let mask = covered_at_mask(geom, set, k);
        match (0..geom.num_points()).find(|&id| !mask.contains(id as usize)) {
            None => return Ok(SaturationCertificate { level: rho, witness }),
            Some(unc) => witness = Some(unc),
        }
    }
    // a spanning set always covers at rho = N, so only a low cap lands here
    Err(VerifyError::SaturationAboveCap(max_rho))
}

/// Exact smallest size of a rho-saturating set in PG(n,q), by exhaustive
/// subset search in increasing size order. Only for tiny spaces.
pub fn minimum_saturating_size(n: u32, q: u32, rho: u32) -> Result<u32, VerifyError> {
    let field = FieldSpec::new(q)?;
    let geom = ProjGeometry::new(field, n)?;
    let points = geom.num_points() as u128;
    if points > MAX_EXHAUSTIVE_POINTS {
        return Err(VerifyError::ExhaustiveTooLarge {
            n,
            q,
            points,
            subsets: 0,
        });
    }
    let all: Vec<PointIndex> = geom.ids().collect();
    for k in 1..=geom.num_points() as usize {
        let family = num_integer::binomial(points, k as u128);
        if family > MAX_EXHAUSTIVE_SUBSETS {
            return Err(VerifyError::ExhaustiveTooLarge {
                n,
                q,
                points,
                subsets: family,
            });
        }
        for subset in all.iter().copied().combinations(k) {
            let cover = covered_at_mask(&geom, &subset, (rho as usize + 1).min(k));
            if cover.count_ones(..) == geom.num_points() as usize {
                return Ok(k as u32);
            }
        }
    }
    unreachable!("the full point set saturates at every rho");
}

/// Summary certificate for a point set / parity-check matrix pair.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationCertificate {
    pub q: u32,
    pub n: u32,
    pub r: u32,
    pub saturation_level: u32,
    pub saturation_witness: Option<PointIndex>,
    pub covering_radius: u32,
    pub deep_syndrome: Vec<FieldElement>,
    pub min_distance: Option<u32>,
    pub distance_witness: Option<Vec<usize>>,
    pub is_amds: Option<bool>,
    /// The covering criterion this certificate used.
    pub criterion: String,
}

/// Runs the full verification suite over a point set.
pub fn certify(geom: &ProjGeometry, set: &[PointIndex]) -> Result<VerificationCertificate, VerifyError> {
    let matrix = ParityCheckMatrix::from_points(geom, set);
    let sat = saturation_level(geom, set, geom.dim())?;
    let rad = matrix.covering_radius()?;
    let (min_distance, distance_witness, is_amds) = match matrix.min_distance() {
        Ok(d) => {
            let amds = d.distance as usize == matrix.rows();
            (Some(d.distance), Some(d.dependent_columns), Some(amds))
        }
        Err(VerifyError::DimensionZero(_)) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(VerificationCertificate {
        q: geom.q(),
        n: matrix.cols() as u32,
        r: matrix.rows() as u32,
        saturation_level: sat.level,
        saturation_witness: sat.witness,
        covering_radius: rad.radius,
        deep_syndrome: rad.deep_syndrome,
        min_distance,
        distance_witness,
        is_amds,
        criterion: "every point lies in the span of at most rho+1 set points".to_string(),
    })
}

/// Certificate for a standalone matrix: columns are read as projective
/// points of PG(r-1,q) for the saturation side.
pub fn certify_matrix(matrix: &ParityCheckMatrix) -> Result<VerificationCertificate, VerifyError> {
    let field = FieldSpec::new(matrix.q())?;
    let geom = ProjGeometry::new(field, matrix.rows() as u32 - 1)?;
    let mut ids: Vec<PointIndex> = Vec::with_capacity(matrix.cols());
    for j in 0..matrix.cols() {
        let mut v = matrix.column(j).to_vec();
        let id = geom.canonical_id(&mut v).expect("zero columns are rejected at parse");
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    let sat = saturation_level(&geom, &ids, geom.dim())?;
    let rad = matrix.covering_radius()?;
    let (min_distance, distance_witness, is_amds) = match matrix.min_distance() {
        Ok(d) => {
            let amds = d.distance as usize == matrix.rows();
            (Some(d.distance), Some(d.dependent_columns), Some(amds))
        }
        Err(VerifyError::DimensionZero(_)) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(VerificationCertificate {
        q: matrix.q(),
        n: matrix.cols() as u32,
        r: matrix.rows() as u32,
        saturation_level: sat.level,
        saturation_witness: sat.witness,
        covering_radius: rad.radius,
        deep_syndrome: rad.deep_syndrome,
        min_distance,
        distance_witness,
        is_amds,
        criterion: "every point lies in the span of at most rho+1 set points".to_string(),
    })
}
