//! Command-line front end: construct saturating sets, verify matrices,
//! print bound tables and reports, and compute lift-family parameters.
//!
//! Exit codes: 0 verified success, 2 precondition or parse failure,
//! 3 verification mismatch, 4 infeasible instance.

use clap::{Parser, Subcommand, ValueEnum};
use satset_core::construction::{
    construct, ConstructionConfig, ConstructionError, HyperplaneStrategy, LeadingStrategy,
    SaturatingSetResult, TailStrategy,
};
use satset_core::field::FieldError;
use satset_core::geometry::GeometryError;
use satset_core::verify::{certify, certify_matrix, VerificationCertificate};
use satset_core::{bounds, io, lift};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_PRECONDITION: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "satset",
    version,
    about = "Saturating sets in PG(R,q) and the short covering codes they define"
)]
struct Cli {
    /// Cap on worker threads (falls back to env SATSET_THREADS).
    /// Never changes results, only wall time.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LeadingArg {
    Argmax,
    FirstAboveAverage,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    FirstValid,
    Greedy,
}

#[derive(Subcommand)]
enum Command {
    /// Build an (R-1)-saturating set in PG(R,q), verify it, write matrix + record
    Construct {
        #[arg(long = "R")]
        r: u32,
        #[arg(long)]
        q: u32,
        /// Leading-point selection rule
        #[arg(long, value_enum, default_value = "argmax")]
        leading: LeadingArg,
        /// Tail-point selection rule for sub-steps 2..R
        #[arg(long, value_enum, default_value = "first-valid")]
        tail: TailArg,
        /// Seed for a randomized skew-hyperplane scan (default: lexicographic)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        max_steps: u32,
        /// Matrix output path [default: construct_R{R}_q{q}.pchk]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run-record JSON path [default: matrix path with .json]
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Verify a .pchk matrix and print its certificate as JSON
    Verify {
        matrix: PathBuf,
        /// Expected exact saturation level
        #[arg(long)]
        saturation_level: Option<u32>,
        /// Expected exact covering radius
        #[arg(long)]
        covering_radius: Option<u32>,
        /// Expected exact minimum distance
        #[arg(long)]
        min_distance: Option<u32>,
        /// Expect an almost-MDS code (d = r)
        #[arg(long)]
        amds: bool,
    },
    /// Bound constants: tables or a JSON report for one (R, q, t)
    Bounds {
        /// CSV of the new constant and its Stirling envelope
        #[arg(long)]
        table1: bool,
        /// CSV comparing the new constant against the known ones
        #[arg(long)]
        table2: bool,
        /// JSON report for --R, --q, --t
        #[arg(long)]
        report: bool,
        #[arg(long = "R")]
        r: Option<u32>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long, default_value_t = 1)]
        t: u32,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lift-family parameters from explicit values or from a base matrix
    Lift {
        #[arg(long)]
        n0: Option<u64>,
        #[arg(long)]
        r0: Option<u32>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long = "R")]
        r: Option<u32>,
        /// Lift exponent for a single level
        #[arg(long)]
        m: Option<u32>,
        /// Base matrix file; n0, r0, q, R are taken from it
        #[arg(long, conflicts_with_all = ["n0", "r0", "q"])]
        base: Option<PathBuf>,
        /// Emit the family for t = 2 .. t_max
        #[arg(long)]
        t_max: Option<u32>,
    },
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema: u32,
    version: &'static str,
    config: &'a ConstructionConfig,
    result: &'a SaturatingSetResult,
    /// Canonical coordinates of every chosen point, in order.
    coordinates: Vec<Vec<u16>>,
    certificate: &'a VerificationCertificate,
    monitoring: Monitoring,
    wall_ms: u128,
}

/// Closed-form bound values recorded next to the measured size;
/// informative only, never asserted.
#[derive(Serialize)]
struct Monitoring {
    length_bound_t1: f64,
    size_minus_bound: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("SATSET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    satset_core::configure_threads(threads);
    let code = match cli.command {
        Command::Construct {
            r,
            q,
            leading,
            tail,
            seed,
            max_steps,
            out,
            record,
        } => cmd_construct(r, q, leading, tail, seed, max_steps, out, record),
        Command::Verify {
            matrix,
            saturation_level,
            covering_radius,
            min_distance,
            amds,
        } => cmd_verify(&matrix, saturation_level, covering_radius, min_distance, amds),
        Command::Bounds {
            table1,
            table2,
            report,
            r,
            q,
            t,
            out,
        } => cmd_bounds(table1, table2, report, r, q, t, out),
        Command::Lift {
            n0,
            r0,
            q,
            r,
            m,
            base,
            t_max,
        } => cmd_lift(n0, r0, q, r, m, base, t_max),
    };
    ExitCode::from(code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    r: u32,
    q: u32,
    leading: LeadingArg,
    tail: TailArg,
    seed: Option<u64>,
    max_steps: u32,
    out: Option<PathBuf>,
    record: Option<PathBuf>,
) -> u8 {
    let started = Instant::now();
    let config = ConstructionConfig {
        r,
        q,
        leading: match leading {
            LeadingArg::Argmax => LeadingStrategy::Argmax,
            LeadingArg::FirstAboveAverage => LeadingStrategy::FirstAboveAverage,
        },
        tail: match tail {
            TailArg::FirstValid => TailStrategy::FirstValid,
            TailArg::Greedy => TailStrategy::Greedy,
        },
        hyperplane: match seed {
            None => HyperplaneStrategy::Lexicographic,
            Some(seed) => HyperplaneStrategy::SeededRandom { seed },
        },
        max_steps,
    };
    let (geom, result) = match construct(&config) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                ConstructionError::RadiusTooSmall(_)
                | ConstructionError::Field(FieldError::NotPrimePower { .. })
                | ConstructionError::Field(_) => EXIT_PRECONDITION,
                ConstructionError::Geometry(GeometryError::TooManyPoints { .. }) => {
                    EXIT_INFEASIBLE
                }
                _ => EXIT_INFEASIBLE,
            };
        }
    };
    let certificate = match certify(&geom, &result.points) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("verification error: {e}");
            return EXIT_INFEASIBLE;
        }
    };

    let out = out.unwrap_or_else(|| PathBuf::from(format!("construct_R{r}_q{q}.pchk")));
    let record = record.unwrap_or_else(|| out.with_extension("json"));
    let matrix = satset_core::verify::ParityCheckMatrix::from_points(&geom, &result.points);
    let seed_note = match seed {
        Some(s) => format!("seed={s}"),
        None => "hyperplane=lexicographic".to_string(),
    };
    let comments = format!(
        "satset construct R={r} q={q} n={} phase={:?} {seed_note}",
        result.n, result.phase
    );
    if let Err(e) = io::write_matrix(&out, &matrix, &[&comments]) {
        eprintln!("cannot write {}: {e}", out.display());
        return EXIT_INFEASIBLE;
    }

    let bound = bounds::length_upper_bound(q as u64, r, 1);
    let run_record = RunRecord {
        schema: 1,
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        result: &result,
        coordinates: result
            .points
            .iter()
            .map(|&id| geom.coords(id).to_vec())
            .collect(),
        certificate: &certificate,
        monitoring: Monitoring {
            length_bound_t1: bound,
            size_minus_bound: result.n as f64 - bound,
        },
        wall_ms: started.elapsed().as_millis(),
    };
    let json = serde_json::to_string_pretty(&run_record).expect("serializable record");
    if let Err(e) = std::fs::write(&record, json) {
        eprintln!("cannot write {}: {e}", record.display());
        return EXIT_INFEASIBLE;
    }

    println!(
        "R={r} q={q}: n={} phase={:?} saturation_level={} covering_radius={} min_distance={:?} amds={:?}",
        result.n,
        result.phase,
        certificate.saturation_level,
        certificate.covering_radius,
        certificate.min_distance,
        certificate.is_amds,
    );
    println!("matrix: {}", out.display());
    println!("record: {}", record.display());

    if certificate.saturation_level == r - 1 {
        0
    } else {
        eprintln!(
            "verification mismatch: saturation level {} differs from R-1 = {}",
            certificate.saturation_level,
            r - 1
        );
        EXIT_MISMATCH
    }
}

fn cmd_verify(
    path: &Path,
    saturation_level: Option<u32>,
    covering_radius: Option<u32>,
    min_distance: Option<u32>,
    amds: bool,
) -> u8 {
    let matrix = match io::read_matrix(path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return EXIT_PRECONDITION;
        }
    };
    let cert = match certify_matrix(&matrix) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("verification error: {e}");
            return EXIT_PRECONDITION;
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&cert).expect("serializable certificate")
    );

    let mut failed = false;
    if let Some(expect) = saturation_level {
        if cert.saturation_level != expect {
            failed = true;
            match cert.saturation_witness {
                Some(w) if expect < cert.saturation_level => eprintln!(
                    "saturation level is {} (claimed {expect}); witness: point {w} is not covered at level {}",
                    cert.saturation_level,
                    cert.saturation_level - 1
                ),
                _ => eprintln!(
                    "saturation level is {} (claimed {expect})",
                    cert.saturation_level
                ),
            }
        }
    }
    if let Some(expect) = covering_radius {
        if cert.covering_radius != expect {
            failed = true;
            if expect < cert.covering_radius {
                eprintln!(
                    "covering radius is {} (claimed {expect}); witness syndrome {:?} needs {} columns",
                    cert.covering_radius, cert.deep_syndrome, cert.covering_radius
                );
            } else {
                eprintln!(
                    "covering radius is {} (claimed {expect})",
                    cert.covering_radius
                );
            }
        }
    }
    if let Some(expect) = min_distance {
        if cert.min_distance != Some(expect) {
            failed = true;
            match (&cert.min_distance, &cert.distance_witness) {
                (Some(d), Some(wit)) if *d < expect => eprintln!(
                    "minimum distance is {d} (claimed {expect}); witness: columns {wit:?} are dependent"
                ),
                (Some(d), _) => eprintln!("minimum distance is {d} (claimed {expect})"),
                (None, _) => eprintln!("minimum distance undefined (claimed {expect})"),
            }
        }
    }
    if amds && cert.is_amds != Some(true) {
        failed = true;
        eprintln!(
            "not almost-MDS: min_distance={:?}, codimension={}",
            cert.min_distance, cert.r
        );
    }
    if failed {
        EXIT_MISMATCH
    } else {
        0
    }
}

fn cmd_bounds(
    table1: bool,
    table2: bool,
    report: bool,
    r: Option<u32>,
    q: Option<u64>,
    t: u32,
    out: Option<PathBuf>,
) -> u8 {
    let content = if table1 {
        bounds::constants_table_csv()
    } else if table2 {
        bounds::comparison_table_csv()
    } else if report {
        let (Some(r), Some(q)) = (r, q) else {
            eprintln!("--report needs --R and --q");
            return EXIT_PRECONDITION;
        };
        match bounds::bound_report(r, q, t) {
            Ok(rep) => {
                let mut s = serde_json::to_string_pretty(&rep).expect("serializable report");
                s.push('\n');
                s
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_PRECONDITION;
            }
        }
    } else {
        eprintln!("choose one of --table1, --table2, --report");
        return EXIT_PRECONDITION;
    };
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, content) {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_INFEASIBLE;
            }
            0
        }
        None => {
            print!("{content}");
            0
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_lift(
    n0: Option<u64>,
    r0: Option<u32>,
    q: Option<u64>,
    r: Option<u32>,
    m: Option<u32>,
    base: Option<PathBuf>,
    t_max: Option<u32>,
) -> u8 {
    let (n0, r0, q, radius) = if let Some(path) = &base {
        let matrix = match io::read_matrix(path) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return EXIT_PRECONDITION;
            }
        };
        let rows = matrix.rows() as u32;
        let radius = r.unwrap_or(rows - 1);
        if radius + 1 != rows {
            eprintln!(
                "--R {radius} is inconsistent with the base codimension {rows} (expected R+1)"
            );
            return EXIT_PRECONDITION;
        }
        (matrix.cols() as u64, rows, matrix.q() as u64, radius)
    } else {
        let (Some(n0), Some(r0), Some(q), Some(radius)) = (n0, r0, q, r) else {
            eprintln!("lift needs --base or all of --n0, --r0, --q, --R");
            return EXIT_PRECONDITION;
        };
        (n0, r0, q, radius)
    };

    let output = if let Some(t_max) = t_max {
        let family = lift::family_from_parameters(n0, r0, q, radius, t_max);
        println!(
            "{}",
            serde_json::to_string_pretty(&family).expect("serializable family")
        );
        return match &family.diagnostic {
            None => 0,
            Some(d) => {
                eprintln!("error: {d}");
                EXIT_PRECONDITION
            }
        };
    } else if let Some(m) = m {
        lift::lift_parameters(n0, r0, q, radius, m)
            .map(|p| serde_json::to_string_pretty(&p).expect("serializable parameters"))
            .map_err(|e| e.to_string())
    } else {
        eprintln!("lift needs --m or --t-max");
        return EXIT_PRECONDITION;
    };
    match output {
        Ok(json) => {
            println!("{json}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PRECONDITION
        }
    }
}
