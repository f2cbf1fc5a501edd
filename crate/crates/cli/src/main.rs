use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use molpilot_cli::{eval_csv, find_logs, find_target_configs, log_file_name, render_report, report_file_name};
use molpilot_core::adapter::AdapterConfig;
use molpilot_core::agent::{run, GeneratorBackend, RunConfig, MAX_BUDGET};
use molpilot_core::bench::{aggregate, row_from_log, rows_csv, TargetRow};
use molpilot_core::docking::Docker;
use molpilot_core::llm::{HttpClient, LlmClient, LlmConfig};
use molpilot_core::runlog::{transition_matrix, Outcome, RunLog};
use molpilot_core::target::load_target_config;

#[derive(Parser)]
#[command(name = "molpilot", version, about = "Goal-directed molecule design with a plan/act/evaluate agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the agent on one target.
    Run {
        /// Target config (JSON).
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run every target config in a directory and aggregate the results.
    Bench {
        /// Directory holding `*/target.json` or `*.json` target configs.
        dir: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
        /// Targets to run at once.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score a SMILES file against a target and print CSV.
    Eval {
        /// SMILES file, one molecule per line ("-" for stdin).
        smiles: PathBuf,
        /// Target config (JSON).
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = DockerKind::Surrogate)]
        docker: DockerKind,
        /// JSON adapter config for the external docking program.
        #[arg(long)]
        docker_config: Option<PathBuf>,
    },
    /// Summarize run logs: reports, aggregates and the transition matrix.
    Report {
        /// Log files or directories of `*.ndjson` logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Print only the aggregates and the transition matrix.
        #[arg(long)]
        summary: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Llm,
    Fallback,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DockerKind {
    Surrogate,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorKind {
    Builtin,
    External,
}

#[derive(Args, Clone)]
struct RunOpts {
    #[arg(long, value_enum, default_value_t = Policy::Fallback)]
    policy: Policy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of actions (1 to 10).
    #[arg(long, default_value_t = MAX_BUDGET)]
    budget: usize,
    #[arg(long, value_enum, default_value_t = DockerKind::Surrogate)]
    docker: DockerKind,
    /// JSON adapter config for the external docking program.
    #[arg(long)]
    docker_config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GeneratorKind::Builtin)]
    generator: GeneratorKind,
    /// JSON adapter config for the external generator.
    #[arg(long)]
    generator_config: Option<PathBuf>,
    /// Chat-completion endpoint URL, required with `--policy llm`.
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long, default_value = "default")]
    llm_model: String,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = "MOLPILOT_LLM_TOKEN")]
    llm_token_env: String,
    /// Send no Authorization header.
    #[arg(long)]
    no_llm_token: bool,
    /// Skip the advisory LLM verdict after each action.
    #[arg(long)]
    no_llm_gate: bool,
    /// Molecules per GENERATE action.
    #[arg(long)]
    generate_count: Option<usize>,
    /// GA population size.
    #[arg(long)]
    population: Option<usize>,
    /// GA generations per OPTIMIZE action.
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long, default_value = "molpilot-out")]
    out_dir: PathBuf,
}

struct Usage(String);

fn read_adapter(path: &Option<PathBuf>, what: &str) -> Result<AdapterConfig, Usage> {
    let path = path.as_ref().ok_or_else(|| Usage(format!("--{what} external needs --{what}-config")))?;
    let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

impl RunOpts {
    fn run_config(&self) -> Result<RunConfig, Usage> {
        if self.budget == 0 || self.budget > MAX_BUDGET {
            return Err(Usage(format!("--budget must be between 1 and {MAX_BUDGET}")));
        }
        let mut cfg = RunConfig { seed: self.seed, budget: self.budget, ..RunConfig::default() };
        if self.docker == DockerKind::External {
            cfg.docker = Docker::External(read_adapter(&self.docker_config, "docker")?);
        }
        if self.generator == GeneratorKind::External {
            cfg.generator = GeneratorBackend::External(read_adapter(&self.generator_config, "generator")?);
        }
        if let Some(n) = self.generate_count {
            cfg.generate_count = n;
        }
        if let Some(n) = self.population {
            cfg.ga.population_size = n;
        }
        if let Some(n) = self.generations {
            cfg.ga.generations = n;
        }
        cfg.ga.validate().map_err(|e| Usage(e.to_string()))?;
        cfg.llm_gate = self.policy == Policy::Llm && !self.no_llm_gate;
        Ok(cfg)
    }

    fn client(&self) -> Result<Option<HttpClient>, Usage> {
        if self.policy == Policy::Fallback {
            return Ok(None);
        }
        let endpoint = self.llm_endpoint.clone().ok_or_else(|| Usage("--policy llm needs --llm-endpoint".into()))?;
        let cfg = LlmConfig {
            endpoint,
            model: self.llm_model.clone(),
            token_env: (!self.no_llm_token).then(|| self.llm_token_env.clone()),
            ..LlmConfig::default()
        };
        Ok(Some(HttpClient::new(cfg)))
    }
}

fn exit_for(outcome: Outcome) -> ExitCode {
    match outcome {
        Outcome::Success => ExitCode::SUCCESS,
        Outcome::BudgetExhausted => ExitCode::from(2),
        Outcome::Error => ExitCode::from(1),
    }
}

fn write_outputs(out_dir: &Path, log: &RunLog) -> Result<(PathBuf, String), String> {
    std::fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let h = &log.header;
    let log_path = out_dir.join(log_file_name(&h.target, h.seed));
    log.write(&log_path).map_err(|e| e.to_string())?;
    let report = render_report(log);
    let report_path = out_dir.join(report_file_name(&h.target, h.seed));
    std::fs::write(&report_path, &report).map_err(|e| format!("{}: {e}", report_path.display()))?;
    Ok((log_path, report))
}

fn cmd_run(config: &Path, opts: &RunOpts) -> Result<ExitCode, Usage> {
    let cfg = opts.run_config()?;
    let target = load_target_config(config).map_err(|e| Usage(e.to_string()))?;
    let mut client = opts.client()?;
    let result = run(target, cfg, client.as_mut().map(|c| c as &mut dyn LlmClient));
    match write_outputs(&opts.out_dir, &result.log) {
        Ok((path, report)) => {
            print!("{report}");
            eprintln!("log written to {}", path.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(1));
        }
    }
    Ok(exit_for(result.outcome))
}

fn error_row(path: &Path, seed: u64) -> TargetRow {
    let name = path
        .parent()
        .filter(|_| path.file_name().is_some_and(|f| f == "target.json"))
        .unwrap_or(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TargetRow {
        target: name,
        seed,
        outcome: Outcome::Error,
        actions: 0,
        pool_size: 0,
        hq_fraction: 0.0,
        property_fractions: [0.0; 5],
        dvs: None,
        dvs_pass: false,
    }
}

fn bench_one(path: &Path, opts: &RunOpts, cfg: &RunConfig) -> TargetRow {
    let target = match load_target_config(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return error_row(path, cfg.seed);
        }
    };
    let mut client = match opts.client() {
        Ok(c) => c,
        Err(Usage(e)) => {
            eprintln!("error: {e}");
            return error_row(path, cfg.seed);
        }
    };
    let result = run(target, cfg.clone(), client.as_mut().map(|c| c as &mut dyn LlmClient));
    if let Err(e) = write_outputs(&opts.out_dir, &result.log) {
        eprintln!("error: {e}");
    }
    eprintln!("{}: {}", result.log.header.target, result.outcome);
    row_from_log(&result.log)
}

fn cmd_bench(dir: &Path, opts: &RunOpts, jobs: usize) -> Result<ExitCode, Usage> {
    let cfg = opts.run_config()?;
    opts.client()?;
    let configs = find_target_configs(dir).map_err(|e| Usage(format!("{}: {e}", dir.display())))?;
    if configs.is_empty() {
        return Err(Usage(format!("no target configs found in {}", dir.display())));
    }
    let rows: Vec<Mutex<Option<TargetRow>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, configs.len()) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(path) = configs.get(i) else { break };
                *rows[i].lock().unwrap() = Some(bench_one(path, opts, &cfg));
            });
        }
    });
    let rows: Vec<TargetRow> = rows.into_iter().filter_map(|m| m.into_inner().unwrap()).collect();
    let agg = aggregate(&rows).map_err(|e| Usage(e.to_string()))?;
    let csv = rows_csv(&rows);
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Usage(e.to_string()))?;
    let _ = std::fs::write(opts.out_dir.join("bench.csv"), &csv);
    let _ = std::fs::write(opts.out_dir.join("aggregate.json"), serde_json::to_string_pretty(&agg).unwrap_or_default());
    print!("{csv}\n{agg}\n");
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(smiles: &Path, config: &Path, docker: DockerKind, docker_config: &Option<PathBuf>) -> Result<ExitCode, Usage> {
    let target = load_target_config(config).map_err(|e| Usage(e.to_string()))?;
    let docker = match docker {
        DockerKind::Surrogate => Docker::Surrogate,
        DockerKind::External => Docker::External(read_adapter(docker_config, "docker")?),
    };
    let text = if smiles == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Usage(e.to_string()))?;
        s
    } else {
        std::fs::read_to_string(smiles).map_err(|e| Usage(format!("{}: {e}", smiles.display())))?
    };
    let (csv, errors) = eval_csv(&text, &target, docker).map_err(|e| Usage(e.to_string()))?;
    for e in &errors {
        eprintln!("warning: {e}");
    }
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(paths: &[PathBuf], summary: bool) -> Result<ExitCode, Usage> {
    let files = find_logs(paths).map_err(|e| Usage(e.to_string()))?;
    let mut logs = Vec::new();
    for f in &files {
        match RunLog::read(f) {
            Ok(l) => logs.push(l),
            Err(e) => eprintln!("warning: {}: {e}", f.display()),
        }
    }
    if logs.is_empty() {
        return Err(Usage("no readable run logs".into()));
    }
    if !summary {
        for l in &logs {
            println!("{}", render_report(l));
        }
    }
    let rows: Vec<TargetRow> = logs.iter().map(row_from_log).collect();
    if let Ok(agg) = aggregate(&rows) {
        println!("{agg}\n");
    }
    if let Ok(m) = transition_matrix(&logs) {
        println!("transition probabilities over {} run(s):\n{m}", logs.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { config, opts } => cmd_run(config, opts),
        Command::Bench { dir, opts, jobs } => cmd_bench(dir, opts, *jobs),
        Command::Eval { smiles, config, docker, docker_config } => cmd_eval(smiles, config, *docker, docker_config),
        Command::Report { logs, summary } => cmd_report(logs, *summary),
    };
    result.unwrap_or_else(|Usage(msg)| {
        eprintln!("error: {msg}\n\nUsage: molpilot <run|bench|eval|report> ... (see molpilot --help)");
        ExitCode::from(1)
    })
}
