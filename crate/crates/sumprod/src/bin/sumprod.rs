//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 usage error, 3 budget
//! exceeded.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sumprod::bounds;
use sumprod::harness::{self, FamilySpec, Scale};
use sumprod::lambda;
use sumprod::lattice;
use sumprod::regularize;
use sumprod::setops::{self, BipartiteGraph, IntSet};
use sumprod::Config;

#[derive(Parser)]
#[command(name = "sumprod", version, about = "sum/product growth toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// RNG seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Path to a key=value config file.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Write CSV output here instead of JSON on stdout.
    #[arg(long, global = true)]
    csv: Option<String>,
    /// Force JSON output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Element budget for sumset/product enumeration.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Work scale for the verification suite.
    #[arg(long, global = true, default_value = "small")]
    scale: Scale,
}

#[derive(Subcommand)]
enum Cmd {
    /// Embed integers into the prime-exponent lattice.
    Factor {
        /// Positive integers.
        #[arg(required = true)]
        numbers: Vec<u64>,
    },
    /// k-fold sumset of a family.
    Sumset {
        /// Family spec, e.g. ap:1,1,8 gp:2,16 mgrid:2,3:3,3 rand:1,1000,25
        /// or explicit:1,2,3.
        family: String,
        #[arg(short, long, default_value_t = 2)]
        k: u32,
    },
    /// Number of k-fold products of a family.
    Prodset {
        family: String,
        #[arg(short, long, default_value_t = 2)]
        k: u32,
    },
    /// Additive energy E_h and the Cauchy-Schwarz bound on |hA|.
    Energy {
        family: String,
        #[arg(long, default_value_t = 2)]
        h: u32,
    },
    /// Lower/upper Lambda_q estimates for a family.
    Lambda {
        family: String,
        #[arg(short, long, default_value_t = 4.0)]
        q: f64,
        #[arg(long, default_value_t = 8)]
        restarts: u32,
        #[arg(long, default_value_t = 200)]
        iters: u32,
    },
    /// Run the regularization pipeline on a set file with a full graph.
    Regularize {
        /// Path to an exponent-set text file (`primes ...` header).
        set: String,
        #[arg(short, long, default_value_t = 0.5)]
        delta: f64,
        /// Skip the independent audit pass.
        #[arg(long)]
        no_audit: bool,
    },
    /// Evaluate the Lambda constant and k(b) for a growth exponent b.
    Bounds {
        #[arg(short, long, default_value_t = 1)]
        b: u32,
    },
    /// Exact sum/product growth table with dichotomy verdict.
    Experiment {
        family: String,
        #[arg(long, default_value_t = 4)]
        k_max: u32,
        /// Track a random subset of size N^p alongside the full set.
        #[arg(long)]
        subset_exponent: Option<f64>,
    },
    /// Run the cross-module verification suite.
    Verify,
}

fn parse_family(text: &str) -> Result<FamilySpec, String> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| format!("family '{text}' needs a kind prefix"))?;
    let nums = |s: &str| -> Result<Vec<i64>, String> {
        s.split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t}: {e}")))
            .collect()
    };
    match kind {
        "ap" => {
            let v = nums(rest)?;
            if v.len() != 3 {
                return Err("ap:start,step,n".into());
            }
            Ok(FamilySpec::Ap {
                start: v[0],
                step: v[1],
                n: v[2] as usize,
            })
        }
        "gp" => {
            let v = nums(rest)?;
            if v.len() != 2 {
                return Err("gp:base,n".into());
            }
            Ok(FamilySpec::Gp {
                base: v[0],
                n: v[1] as usize,
            })
        }
        "mgrid" => {
            let (ps, bs) = rest.split_once(':').ok_or("mgrid:p1,p2:b1,b2")?;
            Ok(FamilySpec::MultiplicativeGrid {
                primes: nums(ps)?.iter().map(|&x| x as u64).collect(),
                bounds: nums(bs)?.iter().map(|&x| x as u32).collect(),
            })
        }
        "rand" => {
            let v = nums(rest)?;
            if v.len() != 3 {
                return Err("rand:lo,width,n".into());
            }
            Ok(FamilySpec::RandomInterval {
                lo: v[0],
                width: v[1],
                n: v[2] as usize,
            })
        }
        "explicit" => Ok(FamilySpec::Explicit { elements: nums(rest)? }),
        _ => Err(format!("unknown family kind '{kind}'")),
    }
}

fn load_config(common: &Common) -> Result<Config, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            Config::parse(&text).map_err(|e| e.to_string())?
        }
        None => Config::default(),
    };
    if let Some(b) = common.budget {
        cfg.budget = b;
    }
    Ok(cfg)
}

fn emit(common: &Common, json: String, csv: Option<String>) -> Result<(), String> {
    if let Some(path) = &common.csv {
        let body = csv.ok_or("this subcommand has no CSV form")?;
        fs::write(path, body).map_err(|e| format!("{path}: {e}"))?;
        return Ok(());
    }
    println!("{json}");
    Ok(())
}

enum RunError {
    Usage(String),
    Invariant(String),
    Budget(String),
}

impl From<String> for RunError {
    fn from(s: String) -> Self {
        RunError::Usage(s)
    }
}

fn classify_set_error(e: setops::SetError) -> RunError {
    match e {
        setops::SetError::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
        other => RunError::Usage(other.to_string()),
    }
}

fn family_set(text: &str, seed: u64) -> Result<IntSet, RunError> {
    let spec = parse_family(text)?;
    harness::generate_family(&spec, seed).map_err(|e| RunError::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let cfg = load_config(&cli.common)?;
    let seed = cli.common.seed;
    match &cli.cmd {
        Cmd::Factor { numbers } => {
            let (_, set) =
                lattice::embed_set(numbers).map_err(|e| RunError::Usage(e.to_string()))?;
            if cli.common.json {
                let json = serde_json::to_string_pretty(&set).unwrap();
                emit(&cli.common, json, None)?;
            } else {
                print!("{}", lattice::expset_to_text(&set));
            }
            Ok(())
        }
        Cmd::Sumset { family, k } => {
            let a = family_set(family, seed)?;
            let s = setops::iterated_sumset_budget(&a, *k, cfg.budget)
                .map_err(classify_set_error)?;
            let json = serde_json::json!({
                "family": family, "k": k, "n": a.len(), "size": s.len(),
                "elements": s.elements(),
            });
            emit(&cli.common, serde_json::to_string_pretty(&json).unwrap(), None)?;
            Ok(())
        }
        Cmd::Prodset { family, k } => {
            let a = family_set(family, seed)?;
            let size = setops::product_set_size_budget(&a, *k, cfg.budget)
                .map_err(classify_set_error)?;
            let json = serde_json::json!({
                "family": family, "k": k, "n": a.len(), "size": size,
            });
            emit(&cli.common, serde_json::to_string_pretty(&json).unwrap(), None)?;
            Ok(())
        }
        Cmd::Energy { family, h } => {
            let a = family_set(family, seed)?;
            let counts = setops::representation_counts(&a, *h);
            let bound = setops::energy_sumset_bound(&a, *h);
            if !bound.holds {
                return Err(RunError::Invariant(
                    "energy bound violated (counting bug)".into(),
                ));
            }
            let json = serde_json::to_string_pretty(&bound).unwrap();
            emit(&cli.common, json, Some(setops::rep_counts_csv(&counts)))?;
            Ok(())
        }
        Cmd::Lambda {
            family,
            q,
            restarts,
            iters,
        } => {
            let a = family_set(family, seed)?;
            let est = lambda::lambda_lower_bound(&a, *q, *restarts, *iters, seed)
                .map_err(|e| RunError::Usage(e.to_string()))?;
            if est.lower > est.upper * (1.0 + 1e-9) {
                return Err(RunError::Invariant(
                    "lower estimate exceeds the trivial upper bound".into(),
                ));
            }
            emit(
                &cli.common,
                serde_json::to_string_pretty(&est).unwrap(),
                None,
            )?;
            Ok(())
        }
        Cmd::Regularize {
            set,
            delta,
            no_audit,
        } => {
            let text = fs::read_to_string(set).map_err(|e| format!("{set}: {e}"))?;
            let s = lattice::expset_from_text(&text).map_err(|e| RunError::Usage(e.to_string()))?;
            let g = BipartiteGraph::full(s.len(), s.len());
            let result = regularize::run_pipeline(&s, &s, &g, *delta)
                .map_err(|e| RunError::Usage(e.to_string()))?;
            if !no_audit {
                let audit = regularize::audit::audit_pipeline(&s, &s, &g, &result, seed);
                if !audit.all_pass() {
                    let bad: Vec<_> = audit
                        .checks
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| format!("{}: {}", c.name, c.detail))
                        .collect();
                    return Err(RunError::Invariant(bad.join("; ")));
                }
            }
            emit(
                &cli.common,
                serde_json::to_string_pretty(&result.report).unwrap(),
                None,
            )?;
            Ok(())
        }
        Cmd::Bounds { b } => {
            let k = bounds::compute_k_of_b(*b, &cfg)
                .map_err(|e| RunError::Usage(e.to_string()))?;
            emit(&cli.common, serde_json::to_string_pretty(&k).unwrap(), None)?;
            Ok(())
        }
        Cmd::Experiment {
            family,
            k_max,
            subset_exponent,
        } => {
            let spec = parse_family(family)?;
            let r = harness::run_growth_experiment(
                &spec,
                *k_max,
                cfg.budget,
                seed,
                *subset_exponent,
            )
            .map_err(|e| RunError::Usage(e.to_string()))?;
            emit(
                &cli.common,
                serde_json::to_string_pretty(&r).unwrap(),
                Some(harness::experiment_csv(&r)),
            )?;
            if r.truncated && cli.common.csv.is_none() {
                return Err(RunError::Budget("experiment truncated by budget".into()));
            }
            Ok(())
        }
        Cmd::Verify => {
            let report = harness::verify_suite(seed, cli.common.scale);
            if cli.common.json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                print!("{}", report.render());
            }
            if report.all_pass() {
                Ok(())
            } else {
                Err(RunError::Invariant("verification suite failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Budget(msg)) => {
            eprintln!("budget exceeded: {msg}");
            ExitCode::from(3)
        }
    }
}
