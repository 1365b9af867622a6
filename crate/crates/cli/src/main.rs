use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use shardsim::compiler::{compile, PassReport};
use shardsim::costmodel::{estimate_reduction, CostModel};
use shardsim::dag::build_dag;
use shardsim::experiment::{self, ExperimentSpec};
use shardsim::simulator::{dense_reference_run, max_deviation, Executor};
use shardsim::{
    Circuit, CountMode, CountingState, DagRules, PassConfig, RandomCircuitSpec, ShardConfig,
    ShardedState, StepCostModel, TableCostModel,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "shardsim",
    version,
    about = "Sharded state-vector simulation and layout compilation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random circuit.
    Gen(GenArgs),
    /// Insert PERMUTE instructions so that most gates run locally.
    Compile(CompileArgs),
    /// Run a circuit on a sharded state vector.
    Simulate(SimulateArgs),
    /// Estimate the run time of a circuit before and after compilation.
    Estimate(EstimateArgs),
    /// Run a parameter sweep over random circuits and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of qubits.
    #[arg(short = 'n', long)]
    qubits: usize,
    /// Number of gates.
    #[arg(short = 'g', long)]
    gates: usize,
    /// Probability that a gate is a CNOT.
    #[arg(short = 'p', long, default_value_t = 0.3)]
    p: f64,
    #[arg(short = 's', long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
#[group(required = true, multiple = false)]
struct ShardArgs {
    /// Number of shards (a power of two).
    #[arg(short = 'k', long)]
    shards: Option<u64>,
    /// Number of local qubits.
    #[arg(short = 'm', long)]
    local: Option<usize>,
}

impl ShardArgs {
    fn config(&self, num_qubits: usize) -> Result<ShardConfig> {
        let cfg = match (self.shards, self.local) {
            (Some(k), _) => ShardConfig::new(num_qubits, k)?,
            (_, Some(m)) => ShardConfig::with_local(num_qubits, m)?,
            _ => bail!("one of -k or -m is required"),
        };
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CountModeArg {
    Ready,
    Cascade,
}

#[derive(Clone, Copy, ValueEnum)]
enum DagRulesArg {
    Disjoint,
    Full,
}

#[derive(Args, Clone, Copy)]
struct PassArgs {
    /// How candidate layouts are scored.
    #[arg(long, value_enum, default_value = "cascade")]
    count_mode: CountModeArg,
    /// Which commutation rules prune dependencies.
    #[arg(long, value_enum, default_value = "full")]
    dag_rules: DagRulesArg,
}

impl PassArgs {
    fn count_mode(&self) -> CountMode {
        match self.count_mode {
            CountModeArg::Ready => CountMode::Ready,
            CountModeArg::Cascade => CountMode::Cascade,
        }
    }

    fn dag_rules(&self) -> DagRules {
        match self.dag_rules {
            DagRulesArg::Disjoint => DagRules::Disjoint,
            DagRulesArg::Full => DagRules::Full,
        }
    }

    fn pass_config(&self, shards: ShardConfig) -> PassConfig {
        PassConfig {
            shards,
            count_mode: self.count_mode(),
            dag_rules: self.dag_rules(),
        }
    }

    fn describe(&self) -> String {
        let mode = self.count_mode.to_possible_value().unwrap();
        let rules = self.dag_rules.to_possible_value().unwrap();
        format!(
            "--count-mode {} --dag-rules {}",
            mode.get_name(),
            rules.get_name()
        )
    }
}

#[derive(Args)]
struct CompileArgs {
    input: PathBuf,
    #[command(flatten)]
    shards: ShardArgs,
    #[command(flatten)]
    pass: PassArgs,
    /// Output file; standard output if omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Print gate counts and communicating fractions to standard error.
    #[arg(long)]
    report: bool,
    /// Write the dependency graph in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    input: PathBuf,
    #[command(flatten)]
    shards: ShardArgs,
    /// Write amplitudes as `index,re,im` CSV in basis order.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    /// Compare the final state with a dense run of this circuit.
    #[arg(long)]
    check_against: Option<PathBuf>,
    /// Largest amplitude deviation accepted by --check-against.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    /// Track communication only, without allocating amplitudes.
    #[arg(long, conflicts_with_all = ["dump_state", "check_against"])]
    count_only: bool,
}

/// `step`, `step:R=<overhead>` or `table:<csv path>`.
#[derive(Clone, Debug)]
enum ModelArg {
    Step(f64),
    Table(PathBuf),
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "step" {
            return Ok(ModelArg::Step(8.0));
        }
        if let Some(r) = s.strip_prefix("step:R=") {
            return r
                .parse()
                .map(ModelArg::Step)
                .map_err(|_| format!("bad overhead `{r}`"));
        }
        if let Some(path) = s.strip_prefix("table:") {
            return Ok(ModelArg::Table(path.into()));
        }
        Err(format!(
            "expected `step`, `step:R=<x>` or `table:<path>`, got `{s}`"
        ))
    }
}

impl ModelArg {
    fn load(&self) -> Result<Box<dyn CostModel + Sync>> {
        Ok(match self {
            ModelArg::Step(r) => Box::new(StepCostModel::with_overhead(*r)?),
            ModelArg::Table(path) => Box::new(
                TableCostModel::load(path)
                    .with_context(|| format!("loading {}", path.display()))?,
            ),
        })
    }

    fn describe(&self) -> String {
        match self {
            ModelArg::Step(r) => format!("step:R={r}"),
            ModelArg::Table(path) => format!("table:{}", path.display()),
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    input: PathBuf,
    /// Already compiled version of the input; compiled on the fly if omitted.
    #[arg(long)]
    compiled: Option<PathBuf>,
    #[command(flatten)]
    shards: ShardArgs,
    #[command(flatten)]
    pass: PassArgs,
    #[arg(long, default_value = "step")]
    model: ModelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    P,
    Globalfrac,
    N,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    sweep: SweepArg,
    /// Swept values, comma separated. Defaults: 0,0.1,..,1 for `p`;
    /// 0.1,0.2,..,0.9 for `globalfrac`; 20,25,..,50 for `n`.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Width for `p` and `globalfrac` sweeps [default: 35 for p, 50 for globalfrac].
    #[arg(short = 'n', long)]
    qubits: Option<usize>,
    /// Global qubits in a `p` sweep.
    #[arg(long, default_value_t = 7)]
    global: usize,
    /// Share of global qubits in an `n` sweep.
    #[arg(long, default_value_t = 0.2)]
    share: f64,
    /// CNOT probability for `globalfrac` and `n` sweeps.
    #[arg(short = 'p', long, default_value_t = 0.3)]
    p: f64,
    /// Gates per circuit [default: 30 per qubit].
    #[arg(short = 'g', long)]
    gates: Option<usize>,
    /// Circuits per sweep point.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, default_value = "step")]
    model: ModelArg,
    #[command(flatten)]
    pass: PassArgs,
    /// Output file; standard output if omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Fill the runtime_ms column (makes output differ between runs).
    #[arg(long)]
    timing: bool,
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse()
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let circuit = RandomCircuitSpec {
        num_qubits: a.qubits,
        num_gates: a.gates,
        p: a.p,
        seed: a.seed,
    }
    .generate()?;
    write_output(a.output.as_deref(), &format!("{circuit}\n"))?;
    eprintln!("seed={}", a.seed);
    Ok(())
}

fn cmd_compile(a: &CompileArgs) -> Result<()> {
    let circuit = read_circuit(&a.input)?;
    let cfg = a.shards.config(circuit.num_qubits())?;
    let pc = a.pass.pass_config(cfg);
    if let Some(dot) = &a.dot {
        let dag = build_dag(&circuit, pc.dag_rules)?;
        fs::write(dot, dag.to_dot()).with_context(|| format!("writing {}", dot.display()))?;
    }
    let compiled = compile(&circuit, &pc)?;
    write_output(a.output.as_deref(), &format!("{}\n", compiled.circuit))?;
    if a.report {
        let r = PassReport::new(&circuit, &compiled, &cfg);
        eprintln!("gates={}", r.gates);
        eprintln!("permutes={}", r.permutes);
        eprintln!("comm_before={}", r.comm_before);
        eprintln!("comm_after={}", r.comm_after);
        eprintln!("fraction_before={}", r.fraction_before);
        eprintln!("fraction_after={}", r.fraction_after);
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let circuit = read_circuit(&a.input)?;
    let cfg = a.shards.config(circuit.num_qubits())?;
    if a.count_only {
        let mut state = CountingState::new(cfg)?;
        state.run(&circuit)?;
        print!("{}", state.stats().to_key_values());
        return Ok(());
    }
    let mut state = ShardedState::new(cfg)?;
    state.run(&circuit)?;
    print!("{}", state.stats().to_key_values());
    if let Some(path) = &a.dump_state {
        let mut out = String::from("index,re,im\n");
        for (i, amp) in state.amplitudes().iter().enumerate() {
            let _ = writeln!(out, "{i},{},{}", amp.re, amp.im);
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(reference) = &a.check_against {
        let reference = read_circuit(reference)?;
        let dense = dense_reference_run(&reference)?;
        let dev = max_deviation(&state, &dense)?;
        println!("max_deviation={dev:e}");
        if dev > a.tolerance {
            bail!("deviation {dev:e} exceeds tolerance {:e}", a.tolerance);
        }
    }
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let circuit = read_circuit(&a.input)?;
    let cfg = a.shards.config(circuit.num_qubits())?;
    let optimized = match &a.compiled {
        Some(path) => {
            let c = read_circuit(path)?;
            if c.num_qubits() != circuit.num_qubits() {
                bail!(
                    "compiled circuit has {} qubits, input has {}",
                    c.num_qubits(),
                    circuit.num_qubits()
                );
            }
            c
        }
        None => compile(&circuit, &a.pass.pass_config(cfg))?.circuit,
    };
    let model = a.model.load()?;
    let est = estimate_reduction(&circuit, &optimized, &cfg, model.as_ref())?;
    let compiled_from = match &a.compiled {
        Some(p) => format!("--compiled {}", p.display()),
        None => a.pass.describe(),
    };
    println!(
        "# shardsim {VERSION} estimate {} {compiled_from} -m {} --model {}",
        a.input.display(),
        cfg.num_local(),
        a.model.describe()
    );
    println!("t_orig,t_opt,reduction");
    println!("{},{},{}", est.t_orig, est.t_opt, est.reduction);
    Ok(())
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn steps(from: u32, to: u32, div: f64) -> Vec<f64> {
    (from..=to).map(|i| i as f64 / div).collect()
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let gates_flag = a.gates.map_or(String::new(), |g| format!(" -g {g}"));
    let (mut spec, flags) = match a.sweep {
        SweepArg::P => {
            let n = a.qubits.unwrap_or(35);
            let ps = if a.values.is_empty() {
                steps(0, 10, 10.0)
            } else {
                a.values.clone()
            };
            let spec = ExperimentSpec::p_sweep(n, a.global, &ps, a.gates)?;
            (
                spec,
                format!(
                    "--sweep p -n {n} --global {} --values {}{gates_flag}",
                    a.global,
                    join(&ps)
                ),
            )
        }
        SweepArg::Globalfrac => {
            let n = a.qubits.unwrap_or(50);
            let fracs = if a.values.is_empty() {
                steps(1, 9, 10.0)
            } else {
                a.values.clone()
            };
            let spec = ExperimentSpec::global_frac_sweep(n, &fracs, a.p, a.gates)?;
            (
                spec,
                format!(
                    "--sweep globalfrac -n {n} -p {} --values {}{gates_flag}",
                    a.p,
                    join(&fracs)
                ),
            )
        }
        SweepArg::N => {
            let ns: Vec<usize> = if a.values.is_empty() {
                (20..=50).step_by(5).collect()
            } else {
                a.values
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            bail!("qubit count {v} is not a positive integer")
                        }
                    })
                    .collect::<Result<_>>()?
            };
            let spec = ExperimentSpec::n_sweep(&ns, a.share, a.p, a.gates)?;
            (
                spec,
                format!(
                    "--sweep n --share {} -p {} --values {}{gates_flag}",
                    a.share,
                    a.p,
                    join(&ns)
                ),
            )
        }
    };
    spec.seeds = a.seeds;
    spec.base_seed = a.base_seed;
    spec.count_mode = a.pass.count_mode();
    spec.dag_rules = a.pass.dag_rules();
    let model = a.model.load()?;
    let cells = experiment::run(&spec, model.as_ref())?;
    let comment = format!(
        "shardsim {VERSION} bench {flags} --seeds {} --base-seed {} --model {} {}{}",
        a.seeds,
        a.base_seed,
        a.model.describe(),
        a.pass.describe(),
        if a.timing { " --timing" } else { "" }
    );
    write_output(
        a.output.as_deref(),
        &experiment::to_csv(&cells, &comment, a.timing),
    )
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            // Keep usage errors to one line like every other failure.
            let text = e.to_string();
            let summary: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.is_empty() && !l.starts_with("Usage:"))
                .collect();
            eprintln!("{}", summary.join(" "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
