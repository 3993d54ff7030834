//! Command-line driver for the set-pair certification pipeline.
//!
//! Exit codes: 0 pass, 1 usage or I/O error, 2 invalid input, 3 failed
//! check (a finding), 4 budget truncation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::json;

use nmsys::certificate::{certify, validation_code, Certificate, CertificateStatus};
use nmsys::checker::check_certificate;
use nmsys::decomposition::{
    run_decomposition, verify_observations, Decomposition, Policy, SubfamilyRule,
};
use nmsys::privatepairs::{select_private_pairs, verify_double_cover, verify_pair_lemmas};
use nmsys::report::{CheckStatus, ClauseResult};
use nmsys::search::{enumerate_with_resume, ResumePoint, SearchSpec};
use nmsys::setsystem::{bounds_for_m, validate_nm_system, SetFamily};
use nmsys::skew::{skew_bound_check, verify_skew, SetPairSystem};

const EXIT_OK: i32 = 0;
const EXIT_USAGE_IO: i32 = 1;
const EXIT_INVALID_INPUT: i32 = 2;
const EXIT_FAILED_CHECK: i32 = 3;
const EXIT_TRUNCATED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "nmsys",
    version,
    about = "Validate, decompose, and certify set-pair bounds for (n,m)-systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a set-system JSON file
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the staged decomposition and print stages, kernels, and checks
    Decompose {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 4)]
        min_stage_size: usize,
        /// Pick the lexicographically last qualifying subfamily instead
        #[arg(long)]
        last_subfamily: bool,
    },
    /// Select private pairs and print the ledger and its checks
    Pairs {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 4)]
        min_stage_size: usize,
    },
    /// Run the full pipeline and emit a self-contained certificate;
    /// with --check the file is a certificate to re-verify instead
    Certify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 4)]
        min_stage_size: usize,
        /// Re-verify an existing certificate file
        #[arg(long)]
        check: bool,
        /// Write the certificate here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a standalone skew set-pair system file
    SkewVerify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate valid systems for a universe size
    Search {
        #[arg(long)]
        n: u32,
        /// Fixes k = n - m; scans all k when absent
        #[arg(long)]
        m: Option<u32>,
        #[arg(long, default_value_t = 2)]
        ell_min: usize,
        #[arg(long, default_value_t = 64)]
        ell_max: usize,
        #[arg(long)]
        budget_seconds: Option<u64>,
        /// Worker threads (defaults to the core count)
        #[arg(long)]
        jobs: Option<usize>,
        /// Emit one representative per isomorphism class
        #[arg(long)]
        canonicalize: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stream found systems here as JSON lines (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the run summary JSON here (default: stdout at the end)
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Frontier checkpoint file for resumable runs
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue from the checkpoint (requires --checkpoint and --out)
        #[arg(long)]
        resume: bool,
        /// Include wall-clock timing in the summary meta block
        #[arg(long)]
        timing: bool,
    },
    /// Print the three reference bounds for a given m
    Bound {
        #[arg(long)]
        m: u64,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit 2 on usage errors; the contract here is 1
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE_IO } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Validate { file, json } => cmd_validate(&file, json),
        Command::Decompose {
            file,
            json,
            min_stage_size,
            last_subfamily,
        } => cmd_decompose(&file, json, min_stage_size, last_subfamily),
        Command::Pairs {
            file,
            json,
            min_stage_size,
        } => cmd_pairs(&file, json, min_stage_size),
        Command::Certify {
            file,
            json,
            min_stage_size,
            check,
            out,
        } => {
            if check {
                cmd_certify_check(&file)
            } else {
                cmd_certify(&file, json, min_stage_size, out.as_deref())
            }
        }
        Command::SkewVerify { file, json } => cmd_skew_verify(&file, json),
        Command::Search {
            n,
            m,
            ell_min,
            ell_max,
            budget_seconds,
            jobs,
            canonicalize,
            seed,
            out,
            summary,
            checkpoint,
            resume,
            timing,
        } => cmd_search(SearchArgs {
            n,
            m,
            ell_min,
            ell_max,
            budget_seconds,
            jobs,
            canonicalize,
            seed,
            out,
            summary,
            checkpoint,
            resume,
            timing,
        }),
        Command::Bound { m } => cmd_bound(m),
    }
}

fn read_family(path: &Path) -> Result<SetFamily, (i32, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| (EXIT_USAGE_IO, format!("cannot read {}: {e}", path.display())))?;
    SetFamily::from_json_str(&text).map_err(|e| (EXIT_USAGE_IO, format!("{e}")))
}

fn render_clauses(clauses: &[ClauseResult]) {
    for c in clauses {
        let mark = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skip",
        };
        match &c.witness {
            Some(w) => println!("  [{mark}] {}: {w}", c.name),
            None => println!("  [{mark}] {}", c.name),
        }
    }
}

fn cmd_validate(file: &Path, json: bool) -> i32 {
    let family = match read_family(file) {
        Ok(f) => f,
        Err((code, msg)) => {
            eprintln!("{msg}");
            return code;
        }
    };
    match validate_nm_system(&family) {
        Ok(sys) => {
            let doc = json!({
                "valid": true,
                "n": sys.n(),
                "k": sys.k(),
                "m": sys.m(),
                "ell": sys.ell(),
            });
            if json {
                println!("{doc}");
            } else {
                println!(
                    "valid (n={}, k={}, m={}, ell={})",
                    sys.n(),
                    sys.k(),
                    sys.m(),
                    sys.ell()
                );
            }
            EXIT_OK
        }
        Err(err) => {
            let doc = json!({
                "valid": false,
                "error": validation_code(&err),
                "message": err.to_string(),
            });
            if json {
                println!("{doc}");
            } else {
                println!("invalid: {err}");
            }
            EXIT_INVALID_INPUT
        }
    }
}

fn pipeline_policy(min_stage_size: usize, last_subfamily: bool) -> Policy {
    Policy {
        min_stage_size,
        subfamily_rule: if last_subfamily {
            SubfamilyRule::LexLargest
        } else {
            SubfamilyRule::LexSmallest
        },
    }
}

fn decompose_valid(
    file: &Path,
    policy: &Policy,
) -> Result<Decomposition, (i32, String)> {
    let family = read_family(file)?;
    let sys = validate_nm_system(&family)
        .map_err(|e| (EXIT_INVALID_INPUT, format!("invalid: {e}")))?;
    let d = run_decomposition(&sys, policy)
        .map_err(|e| (EXIT_INVALID_INPUT, format!("cannot decompose: {e}")))?;
    Ok(d)
}

fn decomposition_doc(d: &Decomposition) -> serde_json::Value {
    json!({
        "t": d.t(),
        "stages": d.stages().iter().zip(d.remainders()).map(|(s, rems)| json!({
            "j": s.j,
            "members": s.members,
            "kernel": s.kernel,
            "remainders": rems.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "lifetimes": d.lifetimes(),
        "kernel_vertices": d.kernel_vertices().to_vec(),
        "garbage": d.garbage().to_vec(),
    })
}

fn cmd_decompose(file: &Path, json: bool, min_stage_size: usize, last_subfamily: bool) -> i32 {
    let policy = pipeline_policy(min_stage_size, last_subfamily);
    let d = match decompose_valid(file, &policy) {
        Ok(v) => v,
        Err((code, msg)) => {
            eprintln!("{msg}");
            return code;
        }
    };
    let clauses = verify_observations(&d);
    if json {
        let doc = json!({
            "decomposition": decomposition_doc(&d),
            "checks": clauses,
        });
        println!("{doc}");
    } else {
        println!("t = {}", d.t());
        for (stage, rems) in d.stages().iter().zip(d.remainders()) {
            let kernel: Vec<String> = stage
                .kernel
                .iter()
                .map(|(i, x)| format!("set {i} -> {x}"))
                .collect();
            println!("stage {}: members {:?}", stage.j, stage.members);
            println!("  kernel: {}", kernel.join(", "));
            let rendered: Vec<String> = rems.iter().map(|r| r.to_string()).collect();
            println!("  remainders: {}", rendered.join(" "));
        }
        println!("kernel vertices A = {}", d.kernel_vertices());
        println!("garbage G = {}", d.garbage());
        render_clauses(&clauses);
    }
    if nmsys::report::all_ok(&clauses) {
        EXIT_OK
    } else {
        EXIT_FAILED_CHECK
    }
}

fn cmd_pairs(file: &Path, json: bool, min_stage_size: usize) -> i32 {
    let policy = pipeline_policy(min_stage_size, false);
    let d = match decompose_valid(file, &policy) {
        Ok(v) => v,
        Err((code, msg)) => {
            eprintln!("{msg}");
            return code;
        }
    };
    let ledger = match select_private_pairs(&d) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("pair selection failed: {e}");
            return EXIT_FAILED_CHECK;
        }
    };
    let mut clauses = verify_pair_lemmas(&ledger, &d);
    clauses.push(verify_double_cover(&d));
    if json {
        let doc = json!({
            "pairs": ledger.pairs(),
            "checks": clauses,
        });
        println!("{doc}");
    } else {
        for p in ledger.pairs() {
            let rules: Vec<String> = p
                .rules
                .iter()
                .map(|r| format!("{:?} {} -> {}", r.rule, r.from, r.to))
                .collect();
            let suffix = if rules.is_empty() {
                String::new()
            } else {
                format!("  [{}]", rules.join("; "))
            };
            println!(
                "set {} stage {}: pair {} anchor {} non-anchor {}{suffix}",
                p.owner,
                p.time,
                p.pair(),
                p.anchor,
                p.non_anchor
            );
        }
        render_clauses(&clauses);
    }
    if nmsys::report::all_ok(&clauses) {
        EXIT_OK
    } else {
        EXIT_FAILED_CHECK
    }
}

fn certificate_exit(cert: &Certificate) -> i32 {
    match cert.status {
        CertificateStatus::InvalidInput => EXIT_INVALID_INPUT,
        _ if cert.ok => EXIT_OK,
        _ => EXIT_FAILED_CHECK,
    }
}

fn cmd_certify(file: &Path, json: bool, min_stage_size: usize, out: Option<&Path>) -> i32 {
    let family = match read_family(file) {
        Ok(f) => f,
        Err((code, msg)) => {
            eprintln!("{msg}");
            return code;
        }
    };
    let policy = pipeline_policy(min_stage_size, false);
    let cert = certify(&family, &policy);
    let body = if json {
        cert.to_json_string()
    } else {
        cert.to_json_pretty()
    };
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, body + "\n") {
                eprintln!("cannot write {}: {e}", path.display());
                return EXIT_USAGE_IO;
            }
            println!(
                "certificate written to {} (status: {:?}, ok: {})",
                path.display(),
                cert.status,
                cert.ok
            );
        }
        None => println!("{body}"),
    }
    certificate_exit(&cert)
}

fn cmd_certify_check(file: &Path) -> i32 {
    let text = match fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", file.display());
            return EXIT_USAGE_IO;
        }
    };
    let cert = match Certificate::from_json_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("not a certificate: {e}");
            return EXIT_USAGE_IO;
        }
    };
    match check_certificate(&cert) {
        Ok(true) => {
            println!("certificate verifies");
            EXIT_OK
        }
        Ok(false) => {
            println!("certificate REJECTED: some recorded claim fails re-verification");
            EXIT_FAILED_CHECK
        }
        Err(e) => {
            println!("certificate REJECTED: {e}");
            EXIT_FAILED_CHECK
        }
    }
}

fn cmd_skew_verify(file: &Path, json: bool) -> i32 {
    let text = match fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", file.display());
            return EXIT_USAGE_IO;
        }
    };
    let sys = match SetPairSystem::from_json_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid set-pair JSON: {e}");
            return EXIT_USAGE_IO;
        }
    };
    let report = verify_skew(&sys);
    if !report.valid {
        if json {
            println!("{}", json!({"valid": false, "witness": report.witness}));
        } else {
            println!("hypothesis violated: {:?}", report.witness.unwrap());
        }
        return EXIT_INVALID_INPUT;
    }
    let bound = match skew_bound_check(&sys) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE_IO;
        }
    };
    if json {
        println!(
            "{}",
            json!({
                "valid": true,
                "h": bound.h,
                "bound": bound.bound,
                "ok": bound.ok,
                "tight": bound.tight,
            })
        );
    } else if bound.tight {
        println!(
            "valid skew system: h={} = bound {} (tight)",
            bound.h, bound.bound
        );
    } else {
        println!("valid skew system: h={} <= bound {}", bound.h, bound.bound);
    }
    if bound.ok {
        EXIT_OK
    } else {
        EXIT_FAILED_CHECK
    }
}

struct SearchArgs {
    n: u32,
    m: Option<u32>,
    ell_min: usize,
    ell_max: usize,
    budget_seconds: Option<u64>,
    jobs: Option<usize>,
    canonicalize: bool,
    seed: u64,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    resume: bool,
    timing: bool,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CheckpointFile {
    version: u32,
    n: u32,
    k: Option<u32>,
    ell_min: usize,
    ell_max: usize,
    canonicalize: bool,
    seed: u64,
    next: ResumePoint,
}

fn cmd_search(args: SearchArgs) -> i32 {
    if let Some(jobs) = args.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .is_err()
        {
            eprintln!("worker pool already initialized; --jobs ignored");
        }
    }
    let k = match args.m {
        Some(m) => {
            if m == 0 || m + 3 > args.n {
                eprintln!("--m {m} leaves no valid k for n={}", args.n);
                return EXIT_USAGE_IO;
            }
            Some(args.n - m)
        }
        None => None,
    };
    let spec = SearchSpec {
        n: args.n,
        k,
        ell_min: args.ell_min,
        ell_max: args.ell_max,
        budget: args.budget_seconds.map(Duration::from_secs),
        canonicalize: args.canonicalize,
        seed: args.seed,
    };

    // resume: reload the checkpoint and previously streamed families
    let mut resume_point = None;
    let mut preseen: Vec<SetFamily> = Vec::new();
    if args.resume {
        let (Some(cp_path), Some(out_path)) = (&args.checkpoint, &args.out) else {
            eprintln!("--resume requires --checkpoint and --out");
            return EXIT_USAGE_IO;
        };
        let text = match fs::read_to_string(cp_path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read checkpoint: {e}");
                return EXIT_USAGE_IO;
            }
        };
        let cp: CheckpointFile = match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("invalid checkpoint: {e}");
                return EXIT_USAGE_IO;
            }
        };
        if cp.version != 1
            || cp.n != spec.n
            || cp.k != spec.k
            || cp.ell_min != spec.ell_min
            || cp.ell_max != spec.ell_max
            || cp.canonicalize != spec.canonicalize
            || cp.seed != spec.seed
        {
            eprintln!("checkpoint does not match this search spec");
            return EXIT_USAGE_IO;
        }
        resume_point = Some(cp.next);
        if let Ok(existing) = fs::read_to_string(out_path) {
            for line in existing.lines().filter(|l| !l.trim().is_empty()) {
                match SetFamily::from_json_str(line) {
                    Ok(f) => preseen.push(f),
                    Err(e) => {
                        eprintln!("corrupt output line in {}: {e}", out_path.display());
                        return EXIT_USAGE_IO;
                    }
                }
            }
        }
    }

    let started = std::time::Instant::now();
    let result = match enumerate_with_resume(&spec, resume_point, &preseen) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE_IO;
        }
    };

    match &args.out {
        Some(path) => {
            let mut file = match fs::OpenOptions::new().create(true).append(true).open(path) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("cannot open {}: {e}", path.display());
                    return EXIT_USAGE_IO;
                }
            };
            for f in &result.systems {
                if writeln!(file, "{}", f.to_json_string()).is_err() {
                    eprintln!("write failed");
                    return EXIT_USAGE_IO;
                }
            }
        }
        None => {
            for f in &result.systems {
                println!("{}", f.to_json_string());
            }
        }
    }

    let total_emitted = preseen.len() + result.systems.len();
    let mut summary = json!({
        "n": spec.n,
        "k": spec.k,
        "ell_min": spec.ell_min,
        "ell_max": spec.ell_max,
        "canonicalize": spec.canonicalize,
        "seed": spec.seed,
        "systems": total_emitted,
        "counts": result.counts,
        "exhausted": result.exhausted,
        "truncated_at": result.truncated_at,
        "best_n": if total_emitted > 0 { Some(spec.n) } else { None },
    });
    if args.timing {
        summary["meta"] = json!({"elapsed_ms": started.elapsed().as_millis() as u64});
    }
    let summary_text = summary.to_string();
    match &args.summary {
        Some(path) => {
            if let Err(e) = fs::write(path, summary_text + "\n") {
                eprintln!("cannot write summary: {e}");
                return EXIT_USAGE_IO;
            }
        }
        None => println!("{summary_text}"),
    }

    if let Some(cp_path) = &args.checkpoint {
        match result.truncated_at {
            Some(next) => {
                let cp = CheckpointFile {
                    version: 1,
                    n: spec.n,
                    k: spec.k,
                    ell_min: spec.ell_min,
                    ell_max: spec.ell_max,
                    canonicalize: spec.canonicalize,
                    seed: spec.seed,
                    next,
                };
                let body = serde_json::to_string(&cp).expect("checkpoint serializes");
                if let Err(e) = fs::write(cp_path, body + "\n") {
                    eprintln!("cannot write checkpoint: {e}");
                    return EXIT_USAGE_IO;
                }
            }
            None => {
                let _ = fs::remove_file(cp_path);
            }
        }
    }

    if result.exhausted {
        EXIT_OK
    } else {
        EXIT_TRUNCATED
    }
}

fn cmd_bound(m: u64) -> i32 {
    match bounds_for_m(m) {
        Ok(b) => {
            println!(
                "conjectured C(m+2,2) = {}; certified m^2+6m+2 = {}; tau-critical 3/4*m^2+m+1 = {}",
                b.conjectured, b.certified, b.tau_critical
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE_IO
        }
    }
}
