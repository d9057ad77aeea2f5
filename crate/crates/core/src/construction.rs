//! Greedy step-by-step construction of an (R-1)-saturating set in PG(R,q).
//!
//! Each step w picks a hyperplane skew to the current set, then adds R new
//! points from it, one sub-step at a time. Sub-step i removes from the
//! hyperplane every point that fails general position against some (R-1)
//! points of the current set, and picks the new point from what remains.
//! The first point of a step (the leading point) is chosen to maximize the
//! number of newly covered points outside the hyperplane; the count is exact,
//! computed by the dual scheme: an uncovered point B gains coverage from a
//! candidate P iff P lies in one of the affine slices span(D u {B}) n Pi
//! minus span(D), taken over the (R-1)-subsets D of the current set.
//!
//! The step loop runs while more than R points are uncovered. Leftover
//! uncovered points are then appended one at a time. If some sub-step ever
//! runs out of admissible candidates (possible at small q), the run switches
//! to a fallback that simply appends uncovered points; the result is still a
//! verified saturating set but the minimum-distance guarantee is lost, and
//! the phase flag reports it.

use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::geometry::{
    theta, Echelon, GeometryError, Hyperplane, PointIndex, ProjGeometry,
};
use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadingStrategy {
    /// Candidate with the largest exact new-coverage count, smallest id on ties.
    Argmax,
    /// Smallest-id candidate whose count is at least the average.
    FirstAboveAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStrategy {
    /// Smallest-id admissible point.
    FirstValid,
    /// Admissible point with the largest incremental coverage (size-study heuristic).
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperplaneStrategy {
    /// First skew hyperplane in dual id order.
    Lexicographic,
    /// Skew hyperplane found by a seeded random scan; the step number is
    /// mixed into the seed so consecutive steps draw different orders.
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionConfig {
    pub r: u32,
    pub q: u32,
    pub leading: LeadingStrategy,
    pub tail: TailStrategy,
    pub hyperplane: HyperplaneStrategy,
    pub max_steps: u32,
}

impl ConstructionConfig {
    pub fn new(r: u32, q: u32) -> Self {
        ConstructionConfig {
            r,
            q,
            leading: LeadingStrategy::Argmax,
            tail: TailStrategy::FirstValid,
            hyperplane: HyperplaneStrategy::Lexicographic,
            max_steps: 1000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("R must be at least 3, got {0}")]
    RadiusTooSmall(u32),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no admissible candidate point at step {w}, sub-step {i}")]
    EmptyCandidateSet { w: u32, i: u32 },
    #[error("step limit {max_steps} reached with {uncovered} points uncovered after {steps} steps")]
    MaxStepsExceeded {
        max_steps: u32,
        steps: u32,
        uncovered: u64,
        trace: Box<Vec<StepTrace>>,
    },
    #[error("internal verification failed: point {0} is not (R-1)-covered by the final set")]
    InternalVerification(PointIndex),
}

/// Number of (R-1)-subsets available at step w, sub-step i:
/// the binomial C(wR+i-1, R-1).
pub fn exclusion_subset_count(w: u32, i: u32, r: u32) -> u128 {
    let n = (w as u128) * (r as u128) + i as u128 - 1;
    num_integer::binomial(n, r as u128 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    FullProcess,
    EarlyFallback,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepAudit {
    pub general_position_ok: bool,
    pub size_windows_ok: bool,
    pub nesting_ok: bool,
    pub sufficiency_ok: bool,
    pub hyperplane_covered_ok: bool,
    pub leading_above_average_ok: bool,
    pub delta_bound_ok: bool,
    pub violations: Vec<String>,
}

impl StepAudit {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepTrace {
    pub w: u32,
    /// Dual point id of the step hyperplane.
    pub hyperplane: u32,
    /// Excluded-set sizes per sub-step i = 1..=R.
    pub excluded_sizes: Vec<u32>,
    /// Admissible candidate counts per sub-step i = 1..=R.
    pub candidate_sizes: Vec<u32>,
    /// The R chosen point ids, leading point first.
    pub chosen: Vec<PointIndex>,
    /// Exact new off-hyperplane coverage of the leading point.
    pub leading_coverage: u64,
    /// Sum of the coverage counts over all first-sub-step candidates.
    pub coverage_sum: u64,
    /// Smallest per-point multiplicity union observed while counting.
    pub min_new_coverage: Option<u64>,
    /// Number of (R-1)-subsets in the first sub-step.
    pub first_subset_count: u64,
    /// Uncovered points removed by this step.
    pub newly_covered: u64,
    pub uncovered_after: u64,
    pub audit: StepAudit,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturatingSetResult {
    pub r: u32,
    pub q: u32,
    pub points: Vec<PointIndex>,
    pub n: u32,
    pub phase: Phase,
    pub final_additions: Vec<PointIndex>,
    pub trace: Vec<StepTrace>,
}

/// The starting R-set: unit vectors on the first R coordinates, all in
/// general position.
pub fn starting_set(geom: &ProjGeometry) -> Vec<PointIndex> {
    let r = geom.dim() as usize;
    (0..r)
        .map(|k| {
            let mut v = vec![0u16; geom.width()];
            v[k] = 1;
            geom.id_of_canonical(&v)
        })
        .collect()
}

/// Excluded points and admissible candidates for the next sub-step.
pub struct ExclusionSets {
    /// Points of the hyperplane ruled out by some (R-1)-subset of `current`.
    pub excluded: FixedBitSet,
    /// Hyperplane points still admissible, ascending id order.
    pub candidates: Vec<PointIndex>,
}

/// Computes the excluded set: the union over all (R-1)-subsets D of `current`
/// of span(D) n Pi. Candidates are the hyperplane points left over.
pub fn exclusion_sets(
    geom: &ProjGeometry,
    current: &[PointIndex],
    pi_form: &[FieldElement],
    pi_points: &[PointIndex],
) -> ExclusionSets {
    let field = geom.field();
    let width = geom.width();
    let r = geom.dim() as usize;
    let mut excluded = FixedBitSet::with_capacity(geom.num_points() as usize);
    let mut basis: Vec<Vec<FieldElement>> = Vec::with_capacity(r - 1);
    for subset in current.iter().copied().combinations(r - 1) {
        let vals: Vec<FieldElement> = subset
            .iter()
            .map(|&id| geom.eval_form(pi_form, geom.coords(id)))
            .collect();
        basis.clear();
        if let Some(p) = vals.iter().position(|&v| v != 0) {
            // span(D) meets Pi in the kernel of the form restricted to <D>
            let dp = geom.coords(subset[p]);
            let vp = vals[p];
            for (k, &id) in subset.iter().enumerate() {
                if k == p {
                    continue;
                }
                let dk = geom.coords(id);
                let row: Vec<FieldElement> = (0..width)
                    .map(|t| field.sub(field.mul(vp, dk[t]), field.mul(vals[k], dp[t])))
                    .collect();
                basis.push(row);
            }
        } else {
            // D lies entirely inside Pi; the trace is span(D) itself
            for &id in &subset {
                basis.push(geom.coords(id).to_vec());
            }
        }
        let rows: Vec<&[FieldElement]> = basis.iter().map(|b| b.as_slice()).collect();
        debug_assert_eq!(geom.rank_rows(rows.iter().copied()), rows.len());
        geom.for_each_span_point(&rows, |id| excluded.insert(id as usize));
    }
    let candidates: Vec<PointIndex> = pi_points
        .iter()
        .copied()
        .filter(|&id| !excluded.contains(id as usize))
        .collect();
    ExclusionSets {
        excluded,
        candidates,
    }
}

/// One (R-1)-subset prepared for the coverage-counting kernel.
struct CoverageSubset {
    pivot: Vec<FieldElement>,
    pivot_val: FieldElement,
    slice_basis: Vec<Vec<FieldElement>>,
    on_pi: bool,
}

fn coverage_subsets(
    geom: &ProjGeometry,
    set: &[PointIndex],
    pi_form: &[FieldElement],
) -> Vec<CoverageSubset> {
    let field = geom.field();
    let width = geom.width();
    let r = geom.dim() as usize;
    set.iter()
        .copied()
        .combinations(r - 1)
        .map(|subset| {
            let vals: Vec<FieldElement> = subset
                .iter()
                .map(|&id| geom.eval_form(pi_form, geom.coords(id)))
                .collect();
            match vals.iter().position(|&v| v != 0) {
                Some(p) => {
                    let dp = geom.coords(subset[p]).to_vec();
                    let vp = vals[p];
                    // direction vectors of span(D) n Pi, expanded into their
                    // prime-power scalar shifts for the GF(p)-digit odometer
                    let slice_basis: Vec<Vec<FieldElement>> = subset
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != p)
                        .flat_map(|(k, &id)| {
                            let dk = geom.coords(id);
                            let row: Vec<FieldElement> = (0..width)
                                .map(|t| {
                                    field.sub(field.mul(vp, dk[t]), field.mul(vals[k], dp[t]))
                                })
                                .collect();
                            geom.scalar_shifts(&row)
                        })
                        .collect();
                    CoverageSubset {
                        pivot: dp,
                        pivot_val: vp,
                        slice_basis,
                        on_pi: false,
                    }
                }
                // a subset inside Pi contributes no off-hyperplane coverage
                None => CoverageSubset {
                    pivot: Vec::new(),
                    pivot_val: 0,
                    slice_basis: Vec::new(),
                    on_pi: true,
                },
            }
        })
        .collect()
}

/// Exact coverage multiplicities over the hyperplane.
pub struct CoverageCounts {
    /// counts[id] = number of uncovered off-hyperplane points that would gain
    /// coverage if the point `id` were added. Meaningful on admissible
    /// candidates; zero elsewhere off the hyperplane.
    pub counts: Vec<u32>,
    /// Smallest per-point slice-union size observed, None when no point was counted.
    pub min_union: Option<u64>,
    /// Number of uncovered off-hyperplane points processed.
    pub b_count: u64,
}

impl CoverageCounts {
    pub fn sum_over(&self, ids: &[PointIndex]) -> u64 {
        ids.iter().map(|&id| self.counts[id as usize] as u64).sum()
    }
}

/// Counts, for every hyperplane point, how many uncovered points outside the
/// hyperplane it would newly cover when added to `set`. `skip` marks extra
/// points to leave out of the uncovered scan (used by the greedy tail).
pub fn coverage_counts(
    geom: &ProjGeometry,
    set: &[PointIndex],
    pi: Hyperplane,
    uncovered: &FixedBitSet,
    skip: Option<&FixedBitSet>,
) -> CoverageCounts {
    let pi_form = geom.coords(pi.0).to_vec();
    let subsets = coverage_subsets(geom, set, &pi_form);
    let b_ids: Vec<PointIndex> = uncovered
        .ones()
        .map(|id| id as PointIndex)
        .filter(|&id| geom.eval_form(&pi_form, geom.coords(id)) != 0)
        .filter(|&id| skip.is_none_or(|s| !s.contains(id as usize)))
        .collect();
    let (counts, min_union) = count_merge(geom, &pi_form, &subsets, &b_ids);
    CoverageCounts {
        counts,
        min_union,
        b_count: b_ids.len() as u64,
    }
}

fn count_merge(
    geom: &ProjGeometry,
    pi_form: &[FieldElement],
    subsets: &[CoverageSubset],
    b_ids: &[PointIndex],
) -> (Vec<u32>, Option<u64>) {
    // below this size the fork/merge overhead outweighs the work
    #[cfg(feature = "parallel")]
    if b_ids.len() * subsets.len().max(1) >= 4096 {
        use rayon::prelude::*;
        let chunk = (b_ids.len() / (rayon::current_num_threads() * 4)).max(16);
        return b_ids
            .par_chunks(chunk)
            .map(|ids| count_kernel(geom, pi_form, subsets, ids))
            .reduce(
                || (vec![0u32; geom.num_points() as usize], None),
                |(mut acc, amin), (part, pmin)| {
                    for (a, p) in acc.iter_mut().zip(&part) {
                        *a += p;
                    }
                    (acc, merge_min(amin, pmin))
                },
            );
    }
    count_kernel(geom, pi_form, subsets, b_ids)
}

fn merge_min(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn count_kernel(
    geom: &ProjGeometry,
    pi_form: &[FieldElement],
    subsets: &[CoverageSubset],
    b_ids: &[PointIndex],
) -> (Vec<u32>, Option<u64>) {
    let field = geom.field();
    let width = geom.width();
    let p = field.p() as u16;
    // GF(p) digits per slice: (R-2) free directions times e shifts each
    let m = (geom.dim() as usize - 2) * field.e() as usize;
    let mut counts = vec![0u32; geom.num_points() as usize];
    let mut min_union: Option<u64> = None;
    let mut seen = FixedBitSet::with_capacity(geom.num_points() as usize);
    let mut touched: Vec<u32> = Vec::new();
    let mut x = vec![0u16; width];
    let mut scratch = vec![0u16; width];
    let mut digits = vec![0u16; m];

    for &b in b_ids {
        let bc = geom.coords(b);
        let vb = geom.eval_form(pi_form, bc);
        debug_assert_ne!(vb, 0, "uncovered scan point must lie off the hyperplane");
        touched.clear();
        for sub in subsets {
            if sub.on_pi {
                continue;
            }
            // anchor of the affine slice: vp*B - vb*pivot
            for t in 0..width {
                x[t] = field.sub(field.mul(sub.pivot_val, bc[t]), field.mul(vb, sub.pivot[t]));
            }
            digits.fill(0);
            'combos: loop {
                scratch.copy_from_slice(&x);
                let id = geom
                    .canonical_id(&mut scratch)
                    .expect("slice points are nonzero");
                if !seen.contains(id as usize) {
                    seen.insert(id as usize);
                    touched.push(id);
                }
                let mut d = 0;
                loop {
                    if d == m {
                        break 'combos;
                    }
                    for (dst, &src) in x.iter_mut().zip(&sub.slice_basis[d]) {
                        *dst = field.add(*dst, src);
                    }
                    digits[d] += 1;
                    if digits[d] < p {
                        break;
                    }
                    digits[d] = 0;
                    d += 1;
                }
            }
        }
        min_union = merge_min(min_union, Some(touched.len() as u64));
        for &id in &touched {
            counts[id as usize] += 1;
            seen.remove(id as usize);
        }
    }
    (counts, min_union)
}

/// Points covered by some R-subset of `set` that uses at least one index
/// >= `new_from`. Rank-deficient subsets contribute their actual span.
pub fn covered_mask(geom: &ProjGeometry, set: &[PointIndex], new_from: usize) -> FixedBitSet {
    let r = geom.dim() as usize;
    let combos: Vec<Vec<PointIndex>> = (0..set.len())
        .combinations(r)
        .filter(|c| c[r - 1] >= new_from)
        .map(|c| c.into_iter().map(|i| set[i]).collect())
        .collect();
    #[cfg(feature = "parallel")]
    if combos.len() >= 128 {
        use rayon::prelude::*;
        let chunk = (combos.len() / (rayon::current_num_threads() * 4)).max(16);
        return combos
            .par_chunks(chunk)
            .map(|part| covered_kernel(geom, part))
            .reduce(
                || FixedBitSet::with_capacity(geom.num_points() as usize),
                |mut a, b| {
                    a.union_with(&b);
                    a
                },
            );
    }
    covered_kernel(geom, &combos)
}

fn covered_kernel(geom: &ProjGeometry, combos: &[Vec<PointIndex>]) -> FixedBitSet {
    let mut mask = FixedBitSet::with_capacity(geom.num_points() as usize);
    for ids in combos {
        let mut ech = Echelon::new(geom.field(), geom.width());
        for &id in ids {
            ech.insert(geom.coords(id));
        }
        let rows: Vec<&[FieldElement]> = ech.rows().collect();
        geom.for_each_span_point(&rows, |id| mask.insert(id as usize));
    }
    mask
}

/// Running state of the iterative process.
pub struct ConstructionState<'g> {
    geom: &'g ProjGeometry,
    config: ConstructionConfig,
    current: Vec<PointIndex>,
    uncovered: FixedBitSet,
    w: u32,
}

impl<'g> ConstructionState<'g> {
    pub fn new(
        geom: &'g ProjGeometry,
        config: &ConstructionConfig,
    ) -> Result<Self, ConstructionError> {
        if config.r < 3 {
            return Err(ConstructionError::RadiusTooSmall(config.r));
        }
        assert_eq!(geom.dim(), config.r, "geometry dimension must equal R");
        assert_eq!(geom.q(), config.q, "field order must match the config");
        let current = starting_set(geom);
        let mut uncovered = FixedBitSet::with_capacity(geom.num_points() as usize);
        uncovered.insert_range(..);
        let mask = covered_mask(geom, &current, 0);
        uncovered.difference_with(&mask);
        Ok(ConstructionState {
            geom,
            config: config.clone(),
            current,
            uncovered,
            w: 0,
        })
    }

    pub fn geometry(&self) -> &'g ProjGeometry {
        self.geom
    }

    pub fn step_count(&self) -> u32 {
        self.w
    }

    pub fn current(&self) -> &[PointIndex] {
        &self.current
    }

    pub fn uncovered(&self) -> &FixedBitSet {
        &self.uncovered
    }

    pub fn uncovered_count(&self) -> u64 {
        self.uncovered.count_ones(..) as u64
    }

    /// Executes one full step: hyperplane choice, R sub-steps, coverage
    /// update, and the audit. State is unchanged on error.
    pub fn advance(&mut self) -> Result<StepTrace, ConstructionError> {
        let geom = self.geom;
        let r = self.config.r as usize;
        let w = self.w + 1;
        let pi = match self.config.hyperplane {
            HyperplaneStrategy::Lexicographic => geom.find_skew_hyperplane(&self.current)?,
            HyperplaneStrategy::SeededRandom { seed } => {
                geom.find_skew_hyperplane_seeded(&self.current, seed.wrapping_add(w as u64))?
            }
        };
        let pi_form = geom.coords(pi.0).to_vec();
        let pi_points = geom.hyperplane_points(pi);
        let mut pi_set = FixedBitSet::with_capacity(geom.num_points() as usize);
        for &id in &pi_points {
            pi_set.insert(id as usize);
        }
        let uncovered_on_pi = pi_points
            .iter()
            .filter(|&&id| self.uncovered.contains(id as usize))
            .count() as u64;

        let mut working = self.current.clone();
        let mut chosen: Vec<PointIndex> = Vec::with_capacity(r);
        let mut excluded_sizes = Vec::with_capacity(r);
        let mut candidate_sizes = Vec::with_capacity(r);
        let mut excluded_snapshots: Vec<FixedBitSet> = Vec::with_capacity(r);
        let mut candidate_snapshots: Vec<Vec<PointIndex>> = Vec::with_capacity(r);
        let mut leading_coverage = 0u64;
        let mut coverage_sum = 0u64;
        let mut min_new_coverage = None;
        let mut step_covered: Option<FixedBitSet> = match self.config.tail {
            TailStrategy::Greedy => Some(FixedBitSet::with_capacity(geom.num_points() as usize)),
            TailStrategy::FirstValid => None,
        };

        for i in 1..=r {
            let excl = exclusion_sets(geom, &working, &pi_form, &pi_points);
            if excl.candidates.is_empty() {
                return Err(ConstructionError::EmptyCandidateSet { w, i: i as u32 });
            }
            excluded_sizes.push(excl.excluded.count_ones(..) as u32);
            candidate_sizes.push(excl.candidates.len() as u32);
            let pick = if i == 1 {
                let cc = coverage_counts(geom, &working, pi, &self.uncovered, None);
                coverage_sum = cc.sum_over(&excl.candidates);
                min_new_coverage = cc.min_union;
                let pick = select_leading(&cc, &excl.candidates, self.config.leading);
                leading_coverage = cc.counts[pick as usize] as u64;
                pick
            } else {
                match self.config.tail {
                    TailStrategy::FirstValid => excl.candidates[0],
                    TailStrategy::Greedy => {
                        let cc = coverage_counts(
                            geom,
                            &working,
                            pi,
                            &self.uncovered,
                            step_covered.as_ref(),
                        );
                        select_leading(&cc, &excl.candidates, LeadingStrategy::Argmax)
                    }
                }
            };
            chosen.push(pick);
            working.push(pick);
            if let Some(covered) = step_covered.as_mut() {
                covered.union_with(&covered_mask(geom, &working, working.len() - 1));
            }
            excluded_snapshots.push(excl.excluded);
            candidate_snapshots.push(excl.candidates);
        }

        // commit: extend the set and refresh the uncovered registry
        let before = self.uncovered_count();
        let new_from = self.current.len();
        self.current = working;
        let mask = covered_mask(geom, &self.current, new_from);
        self.uncovered.difference_with(&mask);
        self.w = w;

        let audit = self.audit_step(
            w,
            &pi_points,
            &excluded_sizes,
            &candidate_sizes,
            &excluded_snapshots,
            &candidate_snapshots,
            leading_coverage,
            coverage_sum,
            before - self.uncovered_count(),
            uncovered_on_pi,
        );
        // the step hyperplane is fully covered by construction, so this
        // wipe is a no-op whenever the audit above held
        self.uncovered.difference_with(&pi_set);

        Ok(StepTrace {
            w,
            hyperplane: pi.0,
            excluded_sizes,
            candidate_sizes,
            chosen,
            leading_coverage,
            coverage_sum,
            min_new_coverage,
            first_subset_count: exclusion_subset_count(w, 1, self.config.r) as u64,
            newly_covered: before - self.uncovered_count(),
            uncovered_after: self.uncovered_count(),
            audit,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn audit_step(
        &self,
        w: u32,
        pi_points: &[PointIndex],
        excluded_sizes: &[u32],
        candidate_sizes: &[u32],
        excluded_snapshots: &[FixedBitSet],
        candidate_snapshots: &[Vec<PointIndex>],
        leading_coverage: u64,
        coverage_sum: u64,
        newly_covered: u64,
        uncovered_on_pi: u64,
    ) -> StepAudit {
        let geom = self.geom;
        let r = self.config.r as usize;
        let q = self.config.q as u128;
        let mut violations = Vec::new();

        // every R-subset of the committed set must be in general position
        let mut general_position_ok = true;
        'outer: for combo in (0..self.current.len()).combinations(r) {
            let ids: Vec<PointIndex> = combo.iter().map(|&i| self.current[i]).collect();
            if !geom.in_general_position(&ids) {
                general_position_ok = false;
                violations.push(format!("step {w}: R-subset {ids:?} is degenerate"));
                break 'outer;
            }
        }

        // size windows for the excluded and candidate sets
        let th_r3 = theta(r as i64 - 3, q as u64);
        let th_r2 = theta(r as i64 - 2, q as u64);
        let qr = q.pow(r as u32);
        let qr2 = q.pow(r as u32 - 2);
        let mut size_windows_ok = true;
        let mut sufficiency_ok = true;
        for i in 1..=r {
            let b = exclusion_subset_count(w, i as u32, self.config.r);
            let t_size = excluded_sizes[i - 1] as u128;
            let c_size = candidate_sizes[i - 1] as u128;
            let (t_ok, c_ok) = if i < r {
                (
                    th_r3 <= t_size && t_size <= b * th_r3,
                    c_size <= qr2 * (q + 1)
                        && c_size as i128 * (qr2 as i128 - 1)
                            >= th_r3 as i128 * ((qr as i128 - 1) - b as i128 * (qr2 as i128 - 1)),
                )
            } else {
                (
                    th_r2 <= t_size && t_size <= b * th_r3 + q.pow(r as u32 - 2),
                    c_size <= q.pow(r as u32 - 1)
                        && (c_size as i128 + qr2 as i128) * (qr2 as i128 - 1)
                            >= th_r3 as i128 * ((qr as i128 - 1) - b as i128 * (qr2 as i128 - 1)),
                )
            };
            if !t_ok || !c_ok {
                size_windows_ok = false;
                violations.push(format!(
                    "step {w} sub-step {i}: sizes #T={t_size}, #Pi={c_size} outside the windows (B={b})"
                ));
            }
            // the sufficient condition must imply a nonempty candidate set
            let threshold = if i < r { b } else { b + q };
            if (qr - 1) > threshold * (qr2 - 1) && c_size == 0 {
                sufficiency_ok = false;
                violations.push(format!(
                    "step {w} sub-step {i}: sufficiency holds but no candidates remain"
                ));
            }
        }

        // nesting of consecutive excluded and candidate sets
        let mut nesting_ok = true;
        for i in 1..r {
            if !excluded_snapshots[i - 1].is_subset(&excluded_snapshots[i]) {
                nesting_ok = false;
                violations.push(format!("step {w}: excluded set {i} not nested in {}", i + 1));
            }
            if !is_sorted_subset(&candidate_snapshots[i], &candidate_snapshots[i - 1]) {
                nesting_ok = false;
                violations.push(format!(
                    "step {w}: candidate set {} not nested in {i}",
                    i + 1
                ));
            }
        }
        if !is_sorted_subset(&candidate_snapshots[0], pi_points) {
            nesting_ok = false;
            violations.push(format!("step {w}: candidate set 1 not inside the hyperplane"));
        }

        // the whole hyperplane must be covered after the step
        let hyperplane_covered_ok = pi_points
            .iter()
            .all(|&id| !self.uncovered.contains(id as usize));
        if !hyperplane_covered_ok {
            violations.push(format!("step {w}: hyperplane point left uncovered"));
        }

        // chosen leading point must reach the average coverage
        let leading_above_average_ok = leading_coverage as u128
            * candidate_sizes[0] as u128
            >= coverage_sum as u128;
        if !leading_above_average_ok {
            violations.push(format!(
                "step {w}: leading coverage {leading_coverage} below average {coverage_sum}/{}",
                candidate_sizes[0]
            ));
        }

        // total progress covers the leading contribution plus the hyperplane
        let delta_bound_ok = newly_covered >= leading_coverage + uncovered_on_pi;
        if !delta_bound_ok {
            violations.push(format!(
                "step {w}: covered {newly_covered} < leading {leading_coverage} + on-hyperplane {uncovered_on_pi}"
            ));
        }

        StepAudit {
            general_position_ok,
            size_windows_ok,
            nesting_ok,
            sufficiency_ok,
            hyperplane_covered_ok,
            leading_above_average_ok,
            delta_bound_ok,
            violations,
        }
    }

    /// Appends the smallest-id uncovered point and refreshes coverage.
    /// Returns None when nothing is uncovered.
    pub fn append_uncovered_point(&mut self) -> Option<PointIndex> {
        let id = self.uncovered.ones().next()? as PointIndex;
        self.current.push(id);
        let mask = covered_mask(self.geom, &self.current, self.current.len() - 1);
        self.uncovered.difference_with(&mask);
        Some(id)
    }
}

fn is_sorted_subset(inner: &[PointIndex], outer: &[PointIndex]) -> bool {
    let mut it = outer.iter();
    inner.iter().all(|x| it.any(|y| y == x))
}

fn select_leading(
    cc: &CoverageCounts,
    candidates: &[PointIndex],
    strategy: LeadingStrategy,
) -> PointIndex {
    match strategy {
        LeadingStrategy::Argmax => {
            let mut best = candidates[0];
            let mut best_count = cc.counts[best as usize];
            for &id in &candidates[1..] {
                if cc.counts[id as usize] > best_count {
                    best = id;
                    best_count = cc.counts[id as usize];
                }
            }
            best
        }
        LeadingStrategy::FirstAboveAverage => {
            let sum = cc.sum_over(candidates) as u128;
            let len = candidates.len() as u128;
            candidates
                .iter()
                .copied()
                .find(|&id| cc.counts[id as usize] as u128 * len >= sum)
                .expect("some candidate reaches the average")
        }
    }
}

/// Runs the full iterative process on an existing geometry.
pub fn run(
    geom: &ProjGeometry,
    config: &ConstructionConfig,
) -> Result<SaturatingSetResult, ConstructionError> {
    let mut state = ConstructionState::new(geom, config)?;
    let mut trace = Vec::new();
    let mut phase = Phase::FullProcess;
    while state.uncovered_count() > config.r as u64 {
        if state.step_count() >= config.max_steps {
            return Err(ConstructionError::MaxStepsExceeded {
                max_steps: config.max_steps,
                steps: state.step_count(),
                uncovered: state.uncovered_count(),
                trace: Box::new(trace),
            });
        }
        match state.advance() {
            Ok(tr) => trace.push(tr),
            Err(ConstructionError::EmptyCandidateSet { .. }) => {
                phase = Phase::EarlyFallback;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut final_additions = Vec::new();
    while let Some(id) = state.append_uncovered_point() {
        final_additions.push(id);
    }

    // from-scratch covering check before returning
    let full = covered_mask(geom, state.current(), 0);
    if let Some(missing) = (0..geom.num_points()).find(|&id| !full.contains(id as usize)) {
        return Err(ConstructionError::InternalVerification(missing));
    }

    let points = state.current().to_vec();
    Ok(SaturatingSetResult {
        r: config.r,
        q: config.q,
        n: points.len() as u32,
        points,
        phase,
        final_additions,
        trace,
    })
}

/// Builds the field and geometry for (R, q) and runs the process.
pub fn construct(
    config: &ConstructionConfig,
) -> Result<(ProjGeometry, SaturatingSetResult), ConstructionError> {
    if config.r < 3 {
        return Err(ConstructionError::RadiusTooSmall(config.r));
    }
    let field = FieldSpec::new(config.q)?;
    let geom = ProjGeometry::new(field, config.r)?;
    let result = run(&geom, config)?;
    Ok((geom, result))
}
