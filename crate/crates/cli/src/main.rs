use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use wred_core::adversaries::{
    cutter_psi, delta2_diagonalizer, qwwkl_cutter, rainbow_measure_coloring, rainbow_toy, ts1_diagonalizer, ts1_toy_pairs,
    CutterConfig, Delta2Approx, MeasureConfig, StageLog, Ts1Config,
};
use wred_core::catalog::squash_configs;
use wred_core::codings::{seq_rrt1_greedy, seq_ts1_omega_solver};
use wred_core::combinators::{squash_forward, Markers};
use wred_core::harness::{listing, load_instance, run_suite, Instance, SuiteConfig, RULES};
use wred_core::kernel::{family, Point};
use wred_core::measure::{parse_exact, show};
use wred_core::oracle::{find_homogeneous, find_min_homogeneous, find_rainbow, find_thin, Search, SearchBudget};
use wred_core::{Error, Result};

#[derive(Parser)]
#[command(name = "wred", version, about = "Run and check executable reductions between combinatorial problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Budget {
    /// Search and verification horizon.
    #[arg(long, env = "WRED_HORIZON_DEFAULT", default_value_t = 16)]
    horizon: u64,
    /// Fuel for one evaluation.
    #[arg(long, env = "WRED_FUEL_DEFAULT", default_value_t = 10_000)]
    fuel: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Selectable entries, constructions, checks, and document rules.
    List,
    /// Run the checks a selector names and print a CSV report.
    Verify {
        /// `all`, a group (entries, constructions, adversaries, codings), an id, or an id prefix.
        selector: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        budget: Budget,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seeds per construction.
        #[arg(long, default_value_t = 2)]
        construction_seeds: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute squashing markers and check the defining identity on a random family.
    Squash {
        /// A configuration name, or a file with a `config <name>` line.
        #[arg(long)]
        config: String,
        /// Markers m_0..=m_stages.
        #[arg(long, default_value_t = 8)]
        stages: u64,
        /// Columns checked against the identity.
        #[arg(long, default_value_t = 4)]
        columns: u64,
        #[arg(long, default_value_t = 24)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a staged adversary and write its stage log as CSV.
    Adversary {
        /// qwwkl, ts1, delta2, or rainbow-measure.
        name: String,
        /// Parameters as key=value.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        #[arg(long, default_value_t = 32)]
        stages: u64,
        #[arg(long, env = "WRED_FUEL_DEFAULT", default_value_t = 10_000)]
        fuel: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for solutions of a coloring document, one line per column.
    Oracle {
        /// homogeneous, min-homogeneous, thin, rainbow, greedy-rainbow, or thin-omega.
        task: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "WRED_HORIZON_DEFAULT", default_value_t = 16)]
        horizon: u64,
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 2_000_000)]
        nodes: u64,
    },
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected key=value, got {s:?}"))
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("wred: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::input(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::resource(format!("standard output: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::List => {
            let mut text = String::new();
            for (id, summary) in listing() {
                text += &format!("{id:<40} {summary}\n");
            }
            text += "\n";
            for (kind, rule, params) in RULES {
                text += &format!("rule {kind:<10} {rule:<22} {params}\n");
            }
            write_out(&None, &text)?;
            Ok(0)
        }
        Command::Verify { selector, samples, budget, seed, construction_seeds, workers, out } => {
            let cfg = SuiteConfig { samples, horizon: budget.horizon, fuel: budget.fuel, seed, construction_seeds, workers };
            let report = run_suite(&selector, &cfg)?;
            write_out(&out, &report.to_csv())?;
            Ok(report.exit_code())
        }
        Command::Squash { config, stages, columns, horizon, seed } => squash(&config, stages, columns, horizon, seed),
        Command::Adversary { name, params, stages, fuel, out } => {
            let params: BTreeMap<String, String> = params.into_iter().collect();
            let log = adversary(&name, &params, stages, fuel)?;
            write_out(&out, &log.to_csv())?;
            eprintln!("{}: {} stages, digest {}", log.name(), log.len(), log.digest());
            Ok(0)
        }
        Command::Oracle { task, input, horizon, size, nodes } => oracle(&task, &input, horizon, size, nodes),
    }
}

fn squash(config: &str, stages: u64, columns: u64, horizon: u64, seed: u64) -> Result<i32> {
    let name = match std::fs::read_to_string(config) {
        Ok(text) => text
            .lines()
            .find_map(|l| l.trim().strip_prefix("config ").map(|n| n.trim().to_string()))
            .ok_or_else(|| Error::input(format!("{config}: no `config <name>` line")))?,
        Err(_) => config.to_string(),
    };
    let (_, cfg) = squash_configs::all()
        .into_iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::input(format!("no squash configuration {name:?}")))?;
    let markers = Arc::new(Markers::new(&cfg));
    let ms = markers.upto(stages)?;
    let mut text = "stage,marker\n".to_string();
    for (s, m) in ms.iter().enumerate() {
        text += &format!("{s},{m}\n");
    }
    write_out(&None, &text)?;
    let fam = family(format!("random-family[{seed}]"), move |i| Point::random(seed.wrapping_mul(1_000_003).wrapping_add(i)));
    let table = squash_forward(&cfg, &markers, &fam, columns, horizon)?;
    eprintln!("{name}: identity holds for {} columns below {horizon}", table.rows.len());
    Ok(0)
}

fn param<'a>(params: &'a BTreeMap<String, String>, key: &str, default: &'a str) -> &'a str {
    params.get(key).map_or(default, String::as_str)
}

fn num(params: &BTreeMap<String, String>, key: &str, default: u64) -> Result<u64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Error::input(format!("--param {key}={v} is not a natural number"))),
    }
}

fn exact(params: &BTreeMap<String, String>, key: &str, default: &str) -> Result<wred_core::Exact> {
    let v = param(params, key, default);
    parse_exact(v).ok_or_else(|| Error::input(format!("--param {key}={v} is not a rational")))
}

fn adversary(name: &str, params: &BTreeMap<String, String>, stages: u64, fuel: u64) -> Result<StageLog> {
    match name {
        "qwwkl" => {
            let cfg = CutterConfig { fuel, ..CutterConfig::new(exact(params, "p", "1/2")?, exact(params, "q", "3/4")?, stages) };
            let (phi, psi) = (cutter_psi(param(params, "phi", "identity"))?, cutter_psi(param(params, "psi", "zeros"))?);
            let run = qwwkl_cutter(&phi, &psi, &cfg)?;
            eprintln!("a = {}, {} cuts, measure {}", run.a, run.actions.len(), show(&run.measure));
            Ok(run.log)
        }
        "ts1" => {
            let (j, k) = (num(params, "j", 2)?, num(params, "k", 3)?);
            let want = param(params, "pair", "identity/echo");
            let (_, phi, psi) = ts1_toy_pairs(j, k)
                .into_iter()
                .find(|(n, _, _)| n == want)
                .ok_or_else(|| Error::input(format!("no toy pair {want:?}")))?;
            let run = ts1_diagonalizer(&phi, &psi, &Ts1Config { fuel, ..Ts1Config::new(j, k, stages) })?;
            eprintln!("{} action stages, forward colors {:?}", run.actions(), run.phi_colors);
            Ok(run.log)
        }
        "delta2" => {
            let g = Delta2Approx::by_name(param(params, "approx", "evens"))?;
            let run = delta2_diagonalizer(num(params, "k", 3)?, &g, num(params, "columns", 4)?, stages)?;
            Ok(run.log)
        }
        "rainbow-measure" => {
            let phi = rainbow_toy(param(params, "phi", "echo"))?;
            let run = rainbow_measure_coloring(&phi, &exact(params, "q", "1/4")?, &MeasureConfig { fuel, ..MeasureConfig::default() })?;
            eprintln!("{} sets, colors at most {}-fold; {}", run.sets.len(), run.bound, run.stopped);
            Ok(run.log)
        }
        _ => Err(Error::input(format!("unknown adversary {name:?} (qwwkl, ts1, delta2, rainbow-measure)"))),
    }
}

fn oracle(task: &str, input: &PathBuf, horizon: u64, size: usize, nodes: u64) -> Result<i32> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::input(format!("{}: {e}", input.display())))?;
    let Instance::Colorings(fs) = load_instance(&text).map_err(|e| Error::input(format!("{}: {}", input.display(), e.message())))?
    else {
        return Err(Error::input("the oracle needs a coloring document"));
    };
    let budget = SearchBudget::new(horizon, size).with_nodes(nodes);
    let mut code = 0;
    let mut report = |i: usize, s: Search<String>| match s {
        Search::Found { value, engine } => println!("column {i}: {value} ({})", engine.name()),
        Search::Absent => println!("column {i}: none below {horizon}"),
        Search::Exhausted { nodes } => {
            println!("column {i}: search stopped after {nodes} nodes");
            code = 2;
        }
    };
    match task {
        "homogeneous" | "min-homogeneous" | "thin" | "rainbow" => {
            for (i, f) in fs.iter().enumerate() {
                let s = match task {
                    "homogeneous" => find_homogeneous(f, &budget).map(|h| format!("{h:?}")),
                    "min-homogeneous" => find_min_homogeneous(f, &budget).map(|h| format!("{h:?}")),
                    "thin" => find_thin(f, &budget).map(|(h, c)| format!("{h:?} omitting {c}")),
                    _ => find_rainbow(f, &budget).map(|h| format!("{h:?}")),
                };
                report(i, s);
            }
        }
        "greedy-rainbow" => {
            for (i, out) in seq_rrt1_greedy(&fs, horizon, size).into_iter().enumerate() {
                match out.ready() {
                    Some(set) => println!("column {i}: {set:?}"),
                    None => {
                        println!("column {i}: eligible elements ran out below {horizon}");
                        code = 2;
                    }
                }
            }
        }
        "thin-omega" => {
            for (i, s) in seq_ts1_omega_solver(&fs, horizon, size).into_iter().enumerate() {
                println!("column {i}: {:?} omitting {} ({})", s.members, s.omitted, s.note);
            }
        }
        _ => {
            return Err(Error::input(format!(
                "unknown task {task:?} (homogeneous, min-homogeneous, thin, rainbow, greedy-rainbow, thin-omega)"
            )))
        }
    }
    Ok(code)
}
