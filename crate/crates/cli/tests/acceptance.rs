//! Acceptance suite: one test per criterion, each ending in a single
//! `ACCEPTANCE <k> PASS` line (run with `--nocapture` to see them).
//!
//! Construction instances are produced once through the real binary and then
//! re-verified in-process from the files it wrote, so every claim is checked
//! against the written artifacts rather than in-memory state.

use satset_core::construction::{construct, ConstructionConfig};
use satset_core::field::FieldSpec;
use satset_core::geometry::{theta, Echelon, Hyperplane, PointIndex, ProjGeometry};
use satset_core::verify::{certify_matrix, minimum_saturating_size, VerificationCertificate};
use satset_core::{bounds, io, lift};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_satset");

const R3_FIELDS: [u32; 7] = [4, 5, 7, 8, 9, 11, 13];
const R4_FIELDS: [u32; 2] = [4, 5];

struct Instance {
    r: u32,
    q: u32,
    elapsed: Duration,
    exit_ok: bool,
    pchk: String,
    record: Value,
    /// Certificate recomputed in-process from the written matrix file.
    cert: VerificationCertificate,
}

struct Artifacts {
    _dir: tempfile::TempDir,
    runs: BTreeMap<(u32, u32), Instance>,
}

fn artifacts() -> &'static Artifacts {
    static CELL: OnceLock<Artifacts> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut runs = BTreeMap::new();
        let all = R3_FIELDS
            .iter()
            .map(|&q| (3u32, q))
            .chain(R4_FIELDS.iter().map(|&q| (4u32, q)));
        for (r, q) in all {
            let out = dir.path().join(format!("R{r}_q{q}.pchk"));
            let record = dir.path().join(format!("R{r}_q{q}.json"));
            let start = Instant::now();
            let status = Command::new(BIN)
                .args([
                    "construct",
                    "--R",
                    &r.to_string(),
                    "--q",
                    &q.to_string(),
                    "--out",
                ])
                .arg(&out)
                .arg("--record")
                .arg(&record)
                .status()
                .expect("spawn satset");
            let elapsed = start.elapsed();
            let pchk = std::fs::read_to_string(&out).expect("matrix file");
            let record: Value =
                serde_json::from_str(&std::fs::read_to_string(&record).expect("record file"))
                    .expect("record json");
            let matrix = io::matrix_from_str(&pchk).expect("parse written matrix");
            let cert = certify_matrix(&matrix).expect("certify");
            runs.insert(
                (r, q),
                Instance {
                    r,
                    q,
                    elapsed,
                    exit_ok: status.success(),
                    pchk,
                    record,
                    cert,
                },
            );
        }
        Artifacts { _dir: dir, runs }
    })
}

fn run_binary(args: &[&str]) -> (String, String, Option<i32>) {
    let out = Command::new(BIN).args(args).output().expect("spawn satset");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

fn trace_steps(record: &Value) -> &Vec<Value> {
    record["result"]["trace"].as_array().expect("trace array")
}

#[test]
fn criterion_01_constants_table_regression() {
    let start = Instant::now();
    let (stdout, _, code) = run_binary(&["bounds", "--table1"]);
    let elapsed = start.elapsed();
    assert_eq!(code, Some(0));
    let expect = "\
R,stirling_lower,stirling_lower_over_R,c_new,c_new_over_R,stirling_upper
3,1.24835051,0.4161,1.25992105,0.4200,1.25996299
4,1.10094468,0.2752,1.10668192,0.2767,1.10669372
5,0.98857246,0.1977,0.99186884,0.1984,0.99187320
6,0.90458669,0.1508,0.90668114,0.1511,0.90668307
7,0.84050266,0.1201,0.84193234,0.1203,0.84193331
8,0.79032802,0.0988,0.79135723,0.0989,0.79135777
9,0.75009489,0.0833,0.75086667,0.0834,0.75086699
10,0.71715745,0.0717,0.71775513,0.0718,0.71775533
25,0.52657849,0.0211,0.52664870,0.0211,0.52664871
50,0.45565466,0.0091,0.45566985,0.0091,0.45566985
100,0.41657808,0.0042,0.41658155,0.0042,0.41658155
125,0.40816564,0.0033,0.40816781,0.0033,0.40816781
150,0.40237807,0.0027,0.40237956,0.0027,0.40237956
";
    assert_eq!(stdout, expect, "constants table mismatch");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:.2?}");
    println!(
        "ACCEPTANCE 1 PASS: 13 constants-table rows match to 8 decimals in {elapsed:.2?}"
    );
}

#[test]
fn criterion_02_comparison_table_regression() {
    let start = Instant::now();
    let (stdout, _, code) = run_binary(&["bounds", "--table2"]);
    let elapsed = start.elapsed();
    assert_eq!(code, Some(0));
    // The R=10 first-comparison cell is pinned to the exact formula value
    // 7.8914724... -> 7.891; the published table prints 7.892 there, which
    // only reproduces by multiplying already-rounded intermediates
    // (0.7178 * 10.9947 = 7.8916). Every other cell matches the publication.
    let expect = "\
R,c_new,c_knw_t1,ratio_t1,ratio_t2,ratio_t2_over_R
4,1.1067,5.493,4.9632,12,3.10
5,0.9919,5.929,5.9772,17,3.46
6,0.9067,6.333,6.9845,23,3.78
7,0.8419,6.726,7.9888,29,4.07
8,0.7914,7.116,8.9915,35,4.33
9,0.7509,7.504,9.9934,41,4.57
10,0.7178,7.891,10.9947,48,4.78
25,0.5266,13.692,25.9992,163,6.51
50,0.4557,23.239,50.9998,376,7.53
100,0.4166,42.075,100.9999,823,8.23
125,0.4082,51.429,126.0000,1050,8.40
150,0.4024,60.759,151.0000,1279,8.52
";
    assert_eq!(stdout, expect, "comparison table mismatch");
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:.2?}");
    println!(
        "ACCEPTANCE 2 PASS: comparison-table rows match at printed precision in {elapsed:.2?} \
         (R=10 column A pinned to the exact 7.891; the published 7.892 is a rounding artifact)"
    );
}

#[test]
fn criterion_03_r3_construction_and_verification() {
    let arts = artifacts();
    for &q in &R3_FIELDS {
        let inst = &arts.runs[&(3, q)];
        assert!(inst.exit_ok, "construct R=3 q={q} exited nonzero");
        assert_eq!(
            inst.record["result"]["phase"].as_str(),
            Some("full_process"),
            "q={q} fell back early"
        );
        assert_eq!(inst.cert.saturation_level, 2, "q={q}");
        assert_eq!(inst.cert.covering_radius, 3, "q={q}");
        assert_eq!(inst.cert.min_distance, Some(4), "q={q}");
        assert_eq!(inst.cert.is_amds, Some(true), "q={q}");
        assert!(
            inst.elapsed < Duration::from_secs(60),
            "q={q} took {:?}",
            inst.elapsed
        );
    }
    let sizes: Vec<(u32, u64)> = R3_FIELDS
        .iter()
        .map(|&q| (q, arts.runs[&(3, q)].cert.n as u64))
        .collect();
    println!(
        "ACCEPTANCE 3 PASS: R=3, q in {R3_FIELDS:?}: full process, level 2, radius 3, \
         distance 4, AMDS; sizes {sizes:?}"
    );
}

#[test]
fn criterion_04_r4_construction_and_verification() {
    let arts = artifacts();
    for &q in &R4_FIELDS {
        let inst = &arts.runs[&(4, q)];
        assert!(inst.exit_ok, "construct R=4 q={q} exited nonzero");
        assert_eq!(inst.cert.saturation_level, 3, "q={q}");
        assert_eq!(inst.cert.covering_radius, 4, "q={q}");
        let full = inst.record["result"]["phase"].as_str() == Some("full_process");
        if full {
            assert_eq!(inst.cert.min_distance, Some(5), "q={q}");
            assert_eq!(inst.cert.is_amds, Some(true), "q={q}");
        } else {
            println!(
                "  note: R=4 q={q} used the fallback phase; distance report: {:?}, amds {:?}",
                inst.cert.min_distance, inst.cert.is_amds
            );
        }
        assert!(
            inst.elapsed < Duration::from_secs(600),
            "q={q} took {:?}",
            inst.elapsed
        );
    }
    println!("ACCEPTANCE 4 PASS: R=4, q in {R4_FIELDS:?}: level 3, radius 4, AMDS where full");
}

#[test]
fn criterion_05_step_invariant_suite() {
    let arts = artifacts();
    let mut steps = 0usize;
    for inst in arts.runs.values() {
        for tr in trace_steps(&inst.record) {
            steps += 1;
            let audit = &tr["audit"];
            for flag in [
                "general_position_ok",
                "size_windows_ok",
                "nesting_ok",
                "sufficiency_ok",
                "hyperplane_covered_ok",
                "leading_above_average_ok",
                "delta_bound_ok",
            ] {
                assert_eq!(
                    audit[flag].as_bool(),
                    Some(true),
                    "R={} q={} step {}: {flag} violated: {:?}",
                    inst.r,
                    inst.q,
                    tr["w"],
                    audit["violations"]
                );
            }
            assert!(audit["violations"].as_array().unwrap().is_empty());
            assert_eq!(tr["chosen"].as_array().unwrap().len(), inst.r as usize);
        }
        // uncovered accounting ties the steps together: U_{w-1} - U_w = Delta_w
        let mut prev = (inst.q as u64).pow(inst.r);
        for tr in trace_steps(&inst.record) {
            let after = tr["uncovered_after"].as_u64().unwrap();
            let delta = tr["newly_covered"].as_u64().unwrap();
            assert_eq!(prev - after, delta);
            prev = after;
        }
    }
    println!("ACCEPTANCE 5 PASS: zero invariant violations across {steps} audited steps");
}

/// Independent recount of the per-point slice union, using only rank
/// primitives: X counts for B iff X lies on span(D u B) but not span(D).
fn oracle_union_size(
    geom: &ProjGeometry,
    current: &[PointIndex],
    pi_points: &[PointIndex],
    b: PointIndex,
) -> u64 {
    let r = geom.dim() as usize;
    let subsets: Vec<Vec<PointIndex>> = combinations(current, r - 1);
    let mut count = 0u64;
    for &x in pi_points {
        let hit = subsets.iter().any(|d| {
            let mut ech = Echelon::new(geom.field(), geom.width());
            for &id in d {
                ech.insert(geom.coords(id));
            }
            if ech.contains(geom.coords(x)) {
                return false;
            }
            ech.insert(geom.coords(b));
            ech.contains(geom.coords(x))
        });
        if hit {
            count += 1;
        }
    }
    count
}

fn combinations(items: &[PointIndex], k: usize) -> Vec<Vec<PointIndex>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        items: &[PointIndex],
        start: usize,
        k: usize,
        cur: &mut Vec<PointIndex>,
        out: &mut Vec<Vec<PointIndex>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, k, cur, out);
            cur.pop();
        }
    }
    rec(items, 0, k, &mut cur, &mut out);
    out
}

#[test]
fn criterion_06_per_point_coverage_oracle() {
    let arts = artifacts();
    let start = Instant::now();
    let mut checked = 0u64;
    for &q in &R3_FIELDS {
        let inst = &arts.runs[&(3, q)];
        let geom = ProjGeometry::new(FieldSpec::new(q).unwrap(), 3).unwrap();
        let points: Vec<PointIndex> = inst.record["result"]["points"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as PointIndex)
            .collect();
        for tr in trace_steps(&inst.record) {
            let w = tr["w"].as_u64().unwrap() as u32;
            let Ok(g_bound) = bounds::min_new_coverage_bound(w, q, 3) else {
                continue; // hypothesis C(wR,R-1) <= q+1 fails from here on
            };
            // replay: K_{w-1} is the first wR points; the uncovered registry
            // is recomputed from scratch with the span criterion
            let current = &points[..(w as usize) * 3];
            let pi = Hyperplane(tr["hyperplane"].as_u64().unwrap() as PointIndex);
            let pi_points = geom.hyperplane_points(pi);
            let pi_form = geom.coords(pi.0).to_vec();
            let covered = satset_core::construction::covered_mask(&geom, current, 0);
            let mut min_union = u64::MAX;
            for b in geom.ids() {
                if covered.contains(b as usize)
                    || geom.eval_form(&pi_form, geom.coords(b)) == 0
                {
                    continue;
                }
                let union = oracle_union_size(&geom, current, &pi_points, b);
                assert!(
                    union as f64 >= g_bound,
                    "q={q} w={w} B={b}: union {union} below bound {g_bound}"
                );
                min_union = min_union.min(union);
                checked += 1;
            }
            // the production path observed the same minimum
            assert_eq!(
                Some(min_union),
                tr["min_new_coverage"].as_u64(),
                "q={q} w={w}: production minimum differs from oracle"
            );
        }
    }
    println!(
        "ACCEPTANCE 6 PASS: slice-union oracle bound held for {checked} (w,B) pairs in {:.2?}",
        start.elapsed()
    );
}

#[test]
fn criterion_07_trajectory_domination() {
    let arts = artifacts();
    let mut checked = 0;
    for &q in &R3_FIELDS {
        let inst = &arts.runs[&(3, q)];
        let steps = trace_steps(&inst.record);
        let traj = bounds::uncovered_upper_trajectory(q, 3, steps.len() as u32);
        for tr in steps {
            let w = tr["w"].as_u64().unwrap() as usize;
            if w >= traj.values.len() {
                break; // bound hypothesis failed at some m <= w
            }
            let measured = tr["uncovered_after"].as_u64().unwrap() as f64;
            assert!(
                measured <= traj.values[w] + 1e-6,
                "q={q} w={w}: measured {measured} exceeds bound {}",
                traj.values[w]
            );
            checked += 1;
        }
    }
    println!("ACCEPTANCE 7 PASS: measured uncovered counts stayed under the bound at {checked} applicable steps");
}

#[test]
fn criterion_08_exhaustive_minimum_oracle() {
    let start = Instant::now();
    assert_eq!(minimum_saturating_size(1, 2, 0).unwrap(), 3);
    let s221 = minimum_saturating_size(2, 2, 1).unwrap();
    let s322 = minimum_saturating_size(3, 2, 2).unwrap();
    assert_eq!(s221, 4);
    assert_eq!(s322, 5);
    // the toolkit's own set for PG(3,2) cannot beat the exact minimum
    let (geom, res) = construct(&ConstructionConfig::new(3, 2)).unwrap();
    let cert = satset_core::verify::certify(&geom, &res.points).unwrap();
    assert_eq!(cert.saturation_level, 2);
    assert!(res.n >= s322, "toolkit found {} < exact minimum {s322}", res.n);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:.2?}");
    println!(
        "ACCEPTANCE 8 PASS: exact minima 3/4/5 for the tiny spaces, toolkit size {} >= {s322}, in {elapsed:.2?}",
        res.n
    );
}

#[test]
fn criterion_09_lift_arithmetic() {
    let a = lift::lift_parameters(8, 4, 7, 3, 2).unwrap();
    assert_eq!((a.n, a.r, a.t), (563, 10, Some(3)));
    let b = lift::lift_parameters(5, 4, 4, 3, 1).unwrap();
    assert_eq!((b.n, b.r, b.t), (35, 7, Some(2)));
    assert!(lift::lift_parameters(9, 4, 7, 3, 1).is_err());

    // through the binary as well
    let (stdout, _, code) =
        run_binary(&["lift", "--n0", "8", "--r0", "4", "--q", "7", "--R", "3", "--m", "2"]);
    assert_eq!(code, Some(0));
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["n"].as_u64(), Some(563));
    assert_eq!(v["r"].as_u64(), Some(10));
    let (_, _, code) =
        run_binary(&["lift", "--n0", "9", "--r0", "4", "--q", "7", "--R", "3", "--m", "1"]);
    assert_eq!(code, Some(2));

    // family rooted at the constructed q=13 instance, with the closed-form
    // values recorded next to each level (informative; the formula is
    // asymptotic in q and desk-scale starts exceed it)
    let arts = artifacts();
    let n0 = arts.runs[&(3, 13)].cert.n as u64;
    let fam = lift::family_from_parameters(n0, 4, 13, 3, 4);
    assert!(fam.diagnostic.is_none());
    assert_eq!(fam.entries.len(), 3);
    for e in &fam.entries {
        println!(
            "  monitor lift q=13 m={}: n = {}, r = {}, closed-form value = {:.1}",
            e.m, e.n, e.r, e.length_bound
        );
    }
    println!("ACCEPTANCE 9 PASS: lift parameters 563/10 and 35/7 exact; n0 <= q+1 enforced");
}

#[test]
fn criterion_10_asymptotics_as_finite_grid_properties() {
    // |c_new(R) - 1/e| shrinks monotonically over the full grid
    let inv_e = 1.0 / std::f64::consts::E;
    let mut prev_gap = f64::INFINITY;
    for r in 3..=150 {
        let c = bounds::bound_constant(r);
        let (lo, hi) = bounds::stirling_bounds(r);
        assert!(lo < c && c < hi, "sandwich fails at R={r}");
        let gap = (c - inv_e).abs();
        assert!(gap < prev_gap, "gap grew at R={r}");
        prev_gap = gap;
    }
    assert!(prev_gap < 0.035, "gap at R=150 is {prev_gap}");
    let ratio = bounds::improvement_ratio(150, bounds::KnownBoundCase::TEq1).unwrap();
    assert!((ratio - 151.0).abs() < 0.01, "ratio(150) = {ratio}");

    // per-run monitoring: measured sizes against the closed-form value
    // (recorded, never asserted; the formula is asymptotic in q)
    let arts = artifacts();
    for inst in arts.runs.values() {
        let bound = inst.record["monitoring"]["length_bound_t1"].as_f64().unwrap();
        let n = inst.cert.n;
        println!(
            "  monitor R={} q={}: n = {n}, closed-form t=1 value = {bound:.2}, gap = {:+.2}",
            inst.r,
            inst.q,
            n as f64 - bound
        );
    }
    println!(
        "ACCEPTANCE 10 PASS: sandwich + monotone 1/e gap on R=3..150, ratio(150) within 0.01 of 151, sizes recorded above"
    );
}

#[test]
fn criterion_11_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<String> = Vec::new();
    for pass in 0..2 {
        let out: PathBuf = dir.path().join(format!("det_{pass}.pchk"));
        let status = Command::new(BIN)
            .args(["construct", "--R", "3", "--q", "7", "--out"])
            .arg(&out)
            .arg("--record")
            .arg(dir.path().join(format!("det_{pass}.json")))
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "matrix files differ between runs");

    // a seeded run is reproducible too
    let mut seeded: Vec<String> = Vec::new();
    for pass in 0..2 {
        let out = dir.path().join(format!("seed_{pass}.pchk"));
        let status = Command::new(BIN)
            .args(["construct", "--R", "3", "--q", "5", "--seed", "42", "--out"])
            .arg(&out)
            .arg("--record")
            .arg(dir.path().join(format!("seed_{pass}.json")))
            .status()
            .unwrap();
        assert!(status.success());
        seeded.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(seeded[0], seeded[1]);
    println!("ACCEPTANCE 11 PASS: identical flags produce byte-identical matrix files");
}

#[test]
fn verify_expectations_round_trip() {
    // supporting check: the verify command agrees with the in-process
    // certificates and reports witnesses on mismatches
    let arts = artifacts();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pchk");
    std::fs::write(&path, &arts.runs[&(3, 5)].pchk).unwrap();
    let p = path.to_str().unwrap();
    let (_, _, code) = run_binary(&[
        "verify", p,
        "--saturation-level", "2",
        "--covering-radius", "3",
        "--min-distance", "4",
        "--amds",
    ]);
    assert_eq!(code, Some(0));
    let (_, stderr, code) = run_binary(&["verify", p, "--covering-radius", "2"]);
    assert_eq!(code, Some(3));
    assert!(stderr.contains("witness"), "no witness in: {stderr}");
}

#[test]
fn exit_codes_for_bad_inputs() {
    // supporting check: precondition failures exit 2 with a diagnostic
    let (_, stderr, code) = run_binary(&["construct", "--R", "3", "--q", "6"]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("not a prime power"), "{stderr}");
    let (_, stderr, code) = run_binary(&["construct", "--R", "2", "--q", "5"]);
    assert_eq!(code, Some(2));
    assert!(stderr.contains("at least 3"), "{stderr}");
}

#[test]
fn thread_cap_does_not_change_results() {
    // supporting check: --threads caps workers without changing the output
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<String> = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}.pchk"));
        let status = Command::new(BIN)
            .args(["construct", "--R", "3", "--q", "9", "--threads", threads, "--out"])
            .arg(&out)
            .arg("--record")
            .arg(dir.path().join(format!("t{threads}.json")))
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sizes_follow_the_step_accounting() {
    // #K = (w+1)R during the loop plus the recorded leftovers
    let arts = artifacts();
    for inst in arts.runs.values() {
        let steps = trace_steps(&inst.record).len() as u32;
        let leftovers = inst.record["result"]["final_additions"]
            .as_array()
            .unwrap()
            .len() as u32;
        assert_eq!(inst.cert.n, (steps + 1) * inst.r + leftovers);
        assert!(theta(inst.r as i64, inst.q as u64) > inst.cert.n as u128);
    }
}
