//! Command-line front end: ω-spec inspection, enumeration, order
//! measurement, theorem verification, corpus sweeps and the semi-abelian
//! witness search.
//!
//! Exit codes: 0 success/PASS, 1 FAIL, 2 INCONCLUSIVE or budget cap hit,
//! 3 invalid input.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::engine::{self, Budget, EngineError, Perm};
use crate::omega::{FirstIndex, OmegaSeq, OrderPrediction, OrderWord};
use crate::ramify::{self, RamificationReport, Verdict, VerifyConfig, VerifyMode};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ramitree",
    version,
    about = "Exact computations in finite quotients of Grigorchuk groups \
             acting on the binary rooted tree, and verification that the \
             standard generating tuples form a ramification structure."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print sequence invariants, thresholds and predicted orders.
    Info {
        /// ω-spec, e.g. "(012)" or "2(01)".
        omega: String,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the ramification-structure theorem for one (ω, n).
    Verify {
        omega: String,
        #[command(flatten)]
        common: Common,
        /// Verification strategy for the 16 disjointness pairs.
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
    },
    /// Enumerate the quotient G(n) and print its order.
    Enumerate {
        omega: String,
        #[command(flatten)]
        common: Common,
    },
    /// Measure the order of a word in G(n) and compare with the formula.
    Order {
        omega: String,
        #[command(flatten)]
        common: Common,
        /// Word in the generators, e.g. "ab" or "adab".
        #[arg(long)]
        word: String,
    },
    /// Search for a pair witnessing failure of semi-2^(e-1)-abelianity.
    Semiabelian {
        omega: String,
        #[command(flatten)]
        common: Common,
        /// Randomized trial count; omit for an exhaustive search.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Verify a corpus of ω-specs, one JSON line per (ω, n).
    Sweep {
        /// Corpus file: one ω-spec per line, '#' comments allowed.
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// First depth per sequence; defaults to that sequence's threshold M.
        #[arg(long)]
        depth_min: Option<u32>,
        /// Last depth per sequence; defaults to depth_min (or M+1).
        #[arg(long)]
        depth_max: Option<u32>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Tree depth n of the quotient G(n).
    #[arg(short = 'n', long = "depth", default_value_t = 4)]
    depth: u32,
    /// Truncation-ladder depth for the certified conjugacy strategy.
    #[arg(long, default_value_t = 4)]
    kmax: u32,
    #[arg(long, default_value_t = Budget::default().max_elements)]
    max_elements: u64,
    #[arg(long, default_value_t = Budget::default().max_bytes)]
    max_bytes: u64,
    #[arg(long, default_value_t = Budget::default().max_millis)]
    max_millis: u64,
    /// Worker threads (default: all cores).
    #[arg(long, env = "RAMITREE_THREADS")]
    threads: Option<usize>,
    /// Seed for randomized searches.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Directory for element-set dumps and other fixture files.
    #[arg(long)]
    fixture_dir: Option<PathBuf>,
    /// Include wall-clock timings in reports (breaks byte-for-byte
    /// reproducibility across runs).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Certified,
}

impl From<ModeArg> for VerifyMode {
    fn from(m: ModeArg) -> VerifyMode {
        match m {
            ModeArg::Auto => VerifyMode::Auto,
            ModeArg::Exact => VerifyMode::Exact,
            ModeArg::Certified => VerifyMode::Certified,
        }
    }
}

impl Common {
    fn budget(&self) -> Budget {
        Budget {
            max_elements: self.max_elements,
            max_bytes: self.max_bytes,
            max_millis: self.max_millis,
        }
    }

    fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            budget: self.budget(),
            k_max: self.kmax,
            timings: self.timings,
        }
    }

    fn install_thread_pool(&self) {
        if let Some(t) = self.threads {
            // Ignore the error from configuring twice (tests call run()
            // repeatedly in one process).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
    }
}

fn invalid(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_INVALID
}

fn parse_omega(spec: &str) -> Result<OmegaSeq, u8> {
    let om = OmegaSeq::parse(spec).map_err(invalid)?;
    if om.is_constant() {
        return Err(invalid("constant sequence excluded"));
    }
    Ok(om)
}

fn first_index_json(fi: FirstIndex) -> serde_json::Value {
    match fi {
        FirstIndex::Finite(i) => json!(i),
        FirstIndex::Infinite => json!("infinity"),
    }
}

fn prediction_json(p: OrderPrediction) -> serde_json::Value {
    match p {
        OrderPrediction::Finite(o) => json!(o),
        OrderPrediction::Infinite => json!("infinity"),
        OrderPrediction::NotApplicable => json!("not-applicable"),
    }
}

/// Flat key/value rendering shared by the TSV output paths: two lines,
/// header and values, tab-separated.
fn print_tsv(fields: &[(&str, String)]) {
    let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    println!("{}", header.join("\t"));
    println!("{}", values.join("\t"));
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit 0.
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.cmd {
        Cmd::Info { omega, common } => cmd_info(&omega, &common),
        Cmd::Verify {
            omega,
            common,
            mode,
        } => cmd_verify(&omega, &common, mode.into()),
        Cmd::Enumerate { omega, common } => cmd_enumerate(&omega, &common),
        Cmd::Order {
            omega,
            common,
            word,
        } => cmd_order(&omega, &common, &word),
        Cmd::Semiabelian {
            omega,
            common,
            trials,
        } => cmd_semiabelian(&omega, &common, trials),
        Cmd::Sweep {
            corpus,
            common,
            mode,
            depth_min,
            depth_max,
        } => cmd_sweep(&corpus, &common, mode.into(), depth_min, depth_max),
    }
}

pub fn run() -> u8 {
    run_from(std::env::args_os())
}

fn cmd_info(spec: &str, common: &Common) -> u8 {
    let om = match parse_omega(spec) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let shifted = om.shift(1);
    let class = om.classify();
    let m = om.m_of().expect("non-constant");
    let threshold = om.threshold_m().expect("non-constant");
    let predicted: serde_json::Map<String, serde_json::Value> = OrderWord::ALL
        .iter()
        .map(|w| {
            (
                w.as_str().to_string(),
                prediction_json(om.predicted_order(*w).expect("non-constant")),
            )
        })
        .collect();
    let report = json!({
        "omega": om.to_string(),
        "first_index": {
            "omega": ([0u8, 1, 2].map(|k| first_index_json(om.index_first(k)))),
            "sigma_omega": ([0u8, 1, 2].map(|k| first_index_json(shifted.index_first(k)))),
        },
        "m": m,
        "classification": class,
        "d_generator": om.d_generator_letter().expect("non-constant").to_string(),
        "c_generator": om.c_generator_letter().expect("non-constant").to_string(),
        "threshold_m": threshold,
        "predicted_orders": predicted,
    });
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Format::Tsv => print_tsv(&[
            ("omega", om.to_string()),
            ("m", m.to_string()),
            ("threshold_m", threshold.to_string()),
            ("d_generator", scalar(&report["d_generator"])),
            ("c_generator", scalar(&report["c_generator"])),
            ("order_ab", scalar(&report["predicted_orders"]["ab"])),
            ("order_ac", scalar(&report["predicted_orders"]["ac"])),
            ("order_ad", scalar(&report["predicted_orders"]["ad"])),
        ]),
    }
    EXIT_PASS
}

fn verdict_exit(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn print_report(report: &RamificationReport, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).unwrap()),
        Format::Tsv => print_tsv(&[
            ("omega", report.omega.clone()),
            ("depth", report.depth.to_string()),
            ("threshold_m", report.threshold_m.to_string()),
            ("below_threshold", report.below_threshold.to_string()),
            ("family", format!("{:?}", report.family.kind)),
            ("mode_used", report.mode_used.to_string()),
            (
                "verdict",
                scalar(&serde_json::to_value(report.verdict).unwrap()),
            ),
            ("red_alarm", report.red_alarm.to_string()),
            ("caps_hit", report.caps_hit.join(",")),
        ]),
    }
}

fn cmd_verify(spec: &str, common: &Common, mode: VerifyMode) -> u8 {
    let om = match parse_omega(spec) {
        Ok(o) => o,
        Err(code) => return code,
    };
    if common.depth < 2 {
        return invalid("depth must be at least 2");
    }
    common.install_thread_pool();
    let report = match ramify::verify_theorem(&om, common.depth, mode, &common.verify_config()) {
        Ok(r) => r,
        Err(e) => return invalid(e),
    };
    print_report(&report, common.format);
    verdict_exit(report.verdict)
}

fn cmd_enumerate(spec: &str, common: &Common) -> u8 {
    let om = match parse_omega(spec) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let gens: Vec<Perm> = match om.generators(common.depth) {
        Ok(g) => g.into_iter().map(|(_, a)| Perm::from_aut(&a)).collect(),
        Err(e) => return invalid(e),
    };
    let elements = match engine::enumerate(&gens, common.budget()) {
        Ok(els) => els,
        Err(EngineError::Cap(cap)) => {
            eprintln!("inconclusive: {cap}");
            return EXIT_INCONCLUSIVE;
        }
        Err(e) => return invalid(e),
    };
    if let Some(dir) = &common.fixture_dir {
        let dump = engine::dump_element_set(&om.to_string(), common.depth, &elements)
            .expect("elements share the enumeration depth");
        let name = format!(
            "elements_{}_n{}.txt",
            om.to_string().replace(['(', ')'], "_"),
            common.depth
        );
        if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join(&name), dump)) {
            return invalid(format!("writing dump: {e}"));
        }
    }
    let report = json!({
        "omega": om.to_string(),
        "depth": common.depth,
        "order": elements.len(),
        "exponent": engine::exponent(elements.iter()),
    });
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Format::Tsv => print_tsv(&[
            ("omega", om.to_string()),
            ("depth", common.depth.to_string()),
            ("order", elements.len().to_string()),
            ("exponent", scalar(&report["exponent"])),
        ]),
    }
    EXIT_PASS
}

fn cmd_order(spec: &str, common: &Common, word: &str) -> u8 {
    let om = match parse_omega(spec) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let element = match om.word(word, common.depth) {
        Ok(e) => e,
        Err(e) => return invalid(e),
    };
    let measured = element.order();
    let predicted = OrderWord::parse(word)
        .map(|w| om.predicted_order(w).expect("non-constant"));
    // Finite predictions saturate: at small n the measured order may still
    // be short of the formula value, which concerns the projective limit.
    let flag = match predicted {
        Some(OrderPrediction::Finite(p)) => {
            if measured == p {
                "MATCH"
            } else if measured < p {
                "SATURATING"
            } else {
                "MISMATCH"
            }
        }
        Some(OrderPrediction::Infinite) => "FINITE-QUOTIENT",
        Some(OrderPrediction::NotApplicable) | None => "NO-PREDICTION",
    };
    let report = json!({
        "omega": om.to_string(),
        "depth": common.depth,
        "word": word,
        "measured": measured,
        "predicted": predicted.map(prediction_json),
        "flag": flag,
    });
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Format::Tsv => print_tsv(&[
            ("omega", om.to_string()),
            ("depth", common.depth.to_string()),
            ("word", word.to_string()),
            ("measured", measured.to_string()),
            (
                "predicted",
                predicted.map_or("null".into(), |p| scalar(&prediction_json(p))),
            ),
            ("flag", flag.to_string()),
        ]),
    }
    if flag == "MISMATCH" {
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}

fn cmd_semiabelian(spec: &str, common: &Common, trials: Option<u64>) -> u8 {
    let om = match parse_omega(spec) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let gens: Vec<Perm> = match om.generators(common.depth) {
        Ok(g) => g.into_iter().map(|(_, a)| Perm::from_aut(&a)).collect(),
        Err(e) => return invalid(e),
    };
    let (witness, exponent, exhaustive) = match trials {
        None => {
            let elements = match engine::enumerate(&gens, common.budget()) {
                Ok(els) => els,
                Err(EngineError::Cap(cap)) => {
                    eprintln!("inconclusive: {cap}");
                    return EXIT_INCONCLUSIVE;
                }
                Err(e) => return invalid(e),
            };
            let exp = engine::exponent(elements.iter());
            (
                engine::semi_abelian_witness_exhaustive(&elements, exp),
                exp,
                true,
            )
        }
        Some(t) => {
            // Exponent still needs the full group; the randomized path only
            // avoids the quadratic pair scan.
            let elements = match engine::enumerate(&gens, common.budget()) {
                Ok(els) => els,
                Err(EngineError::Cap(cap)) => {
                    eprintln!("inconclusive: {cap}");
                    return EXIT_INCONCLUSIVE;
                }
                Err(e) => return invalid(e),
            };
            let exp = engine::exponent(elements.iter());
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            match engine::semi_abelian_witness_randomized(&gens, exp, t, &mut rng) {
                Ok(w) => (w, exp, false),
                Err(e) => return invalid(e),
            }
        }
    };
    let witness_json = witness.as_ref().map(|w| {
        json!({
            "x": w.x.to_aut(common.depth).unwrap().portrait_hex(),
            "y": w.y.to_aut(common.depth).unwrap().portrait_hex(),
            "direction": w.direction,
        })
    });
    let report = json!({
        "omega": om.to_string(),
        "depth": common.depth,
        "exponent": exponent,
        "q": exponent / 2,
        "exhaustive": exhaustive,
        "witness": witness_json,
    });
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Format::Tsv => print_tsv(&[
            ("omega", om.to_string()),
            ("depth", common.depth.to_string()),
            ("exponent", exponent.to_string()),
            ("exhaustive", exhaustive.to_string()),
            ("witness_found", witness.is_some().to_string()),
        ]),
    }
    match (witness.is_some(), exhaustive) {
        (true, _) => EXIT_PASS,
        // Exhaustive none-found is a definite answer; randomized is not.
        (false, true) => EXIT_PASS,
        (false, false) => EXIT_INCONCLUSIVE,
    }
}

fn cmd_sweep(
    corpus: &std::path::Path,
    common: &Common,
    mode: VerifyMode,
    depth_min: Option<u32>,
    depth_max: Option<u32>,
) -> u8 {
    let text = match fs::read_to_string(corpus) {
        Ok(t) => t,
        Err(e) => return invalid(format!("{}: {e}", corpus.display())),
    };
    let mut jobs: Vec<(OmegaSeq, u32)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let om = match OmegaSeq::parse(line) {
            Ok(o) if !o.is_constant() => o,
            Ok(_) => {
                return invalid(format!(
                    "{}:{}: constant sequence excluded",
                    corpus.display(),
                    lineno + 1
                ))
            }
            Err(e) => {
                return invalid(format!("{}:{}: {e}", corpus.display(), lineno + 1));
            }
        };
        let m = om.threshold_m().expect("non-constant");
        let lo = depth_min.unwrap_or(m);
        let hi = depth_max.unwrap_or_else(|| depth_min.map_or(m + 1, |d| d));
        for n in lo..=hi {
            jobs.push((om.clone(), n));
        }
    }
    common.install_thread_pool();
    let config = common.verify_config();
    // Pairs verify in parallel; ordered collect keeps the output stream
    // deterministic.
    use rayon::prelude::*;
    let reports: Vec<Result<RamificationReport, String>> = jobs
        .par_iter()
        .map(|(om, n)| ramify::verify_theorem(om, *n, mode, &config).map_err(|e| e.to_string()))
        .collect();
    let mut code = EXIT_PASS;
    for report in reports {
        match report {
            Ok(r) => {
                println!("{}", serde_json::to_string(&r).unwrap());
                if r.red_alarm {
                    code = EXIT_FAIL;
                } else if r.verdict == Verdict::Inconclusive && code == EXIT_PASS {
                    code = EXIT_INCONCLUSIVE;
                }
            }
            Err(e) => return invalid(e),
        }
    }
    code
}
