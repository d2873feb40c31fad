use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ising_gap::gibbs::GibbsTable;
use ising_gap::harness::{run_plan, transition_study, verify_lemmas, ExperimentPlan, LemmaSuiteOptions};
use ising_gap::simulate::{estimate_relaxation_with, simulate_replicas, write_samples_csv, RelaxationOptions};
use ising_gap::spectral::{exact_gap_with, GapOptions, MethodChoice};
use ising_gap::{
    BoundaryDescriptor, Configuration, Error, GeneratorOperator, LatticeBox, Model, Observable, RateFamily,
    RateKind, Sign, TrapEvent,
};

#[derive(Parser)]
#[command(name = "ising-gap", version, about = "Spectral gaps of Glauber dynamics for the 2-D Ising model in a box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every point of an experiment plan and emit the result table.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// CSV destination; overrides the plan, `-` for stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON destination; overrides the plan.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact spectral gap of one box.
    Gap {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        beta: f64,
        /// plus, minus, free, alternating, slab:<delta>, iid:<mean>:<seed> or file:<path>
        #[arg(long, default_value = "plus")]
        boundary: String,
        /// exponential, metropolis or heat-bath
        #[arg(long, default_value = "exponential")]
        rates: String,
        #[arg(long, value_enum, default_value_t = Solver::Auto)]
        method: Solver,
    },
    /// Randomised checks of the contour energy identity and inequalities.
    VerifyLemmas {
        /// Box sides to draw from.
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6])]
        l: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Gap decay in l for slab boundaries of several widths.
    Transition {
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
        l: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
        delta: Vec<f64>,
        #[arg(long, default_value = "exponential")]
        rates: String,
    },
    /// Simulate the dynamics, stream thinned samples and estimate the relaxation time.
    Simulate {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "plus")]
        boundary: String,
        #[arg(long, default_value = "exponential")]
        rates: String,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 0.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Spacing of the thinned samples.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t = ObservableArg::Trap)]
        observable: ObservableArg,
        /// Sample CSV destination, `-` for stdout.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Skip the relaxation-time estimate.
        #[arg(long)]
        no_estimate: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    Trap,
    Magnetization,
    CenterSpin,
}

type CliResult = Result<bool, Error>;

fn output(path: &PathBuf) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn model_for(l: usize, boundary: &str) -> Result<Model, Error> {
    let lattice = LatticeBox::new(l as i64)?;
    let omega = boundary.parse::<BoundaryDescriptor>()?.resolve(&lattice)?;
    Model::new(lattice, omega)
}

fn run(plan: PathBuf, csv: Option<PathBuf>, json: Option<PathBuf>) -> CliResult {
    let text = std::fs::read_to_string(&plan)?;
    let plan = ExperimentPlan::parse(&text)?;
    let table = run_plan(&plan)?;
    let csv = csv.or(plan.csv.clone()).or_else(|| plan.json.is_none().then(|| PathBuf::from("-")));
    if let Some(p) = csv {
        let mut out = output(&p)?;
        table.write_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(p) = json.or(plan.json.clone()) {
        let mut out = output(&p)?;
        writeln!(out, "{}", table.to_json())?;
        out.flush()?;
    }
    for r in table.records.iter().filter(|r| r.failed()) {
        eprintln!("l={} beta={} boundary={} rates={}: {}", r.l, r.beta, r.boundary, r.rates, r.error.as_deref().unwrap());
    }
    for r in table.records.iter().filter(|r| r.sandwich() == Some(false)) {
        eprintln!("l={} beta={} boundary={} rates={}: bounds out of order", r.l, r.beta, r.boundary, r.rates);
    }
    Ok(!table.has_failures() && table.records.iter().all(|r| r.sandwich() != Some(false)))
}

fn gap(l: usize, beta: f64, boundary: String, rates: String, method: Solver) -> CliResult {
    let model = model_for(l, &boundary)?;
    let rates = RateFamily::new(rates.parse()?, beta)?;
    let gen = GeneratorOperator::new(&model, rates)?;
    let method = match method {
        Solver::Auto => MethodChoice::Auto,
        Solver::Dense => MethodChoice::Dense,
        Solver::Iterative => MethodChoice::Iterative,
    };
    let res = exact_gap_with(&gen, &GapOptions { method, ..GapOptions::default() })?;
    println!("{}", res.record(&gen, &boundary).to_json());
    Ok(true)
}

fn verify(l: Vec<usize>, samples: usize, seed: u64) -> CliResult {
    let report = verify_lemmas(&LemmaSuiteOptions { l_values: l, samples, seed, ..LemmaSuiteOptions::default() })?;
    println!("{}", report.to_json());
    for t in report.tallies() {
        eprintln!("{}: {} instances, {} violations", t.name, t.instances, t.violations);
    }
    Ok(report.passes())
}

fn transition(beta: f64, l: Vec<usize>, delta: Vec<f64>, rates: String) -> CliResult {
    let report = transition_study(&l, beta, &delta, rates.parse::<RateKind>()?);
    println!("{}", report.to_json());
    Ok(!report.has_failures())
}

#[allow(clippy::too_many_arguments)]
fn sim(
    l: usize,
    beta: f64,
    boundary: String,
    rates: String,
    t_max: f64,
    burn_in: f64,
    replicas: usize,
    seed: u64,
    dt: Option<f64>,
    observable: ObservableArg,
    samples: Option<PathBuf>,
    no_estimate: bool,
) -> CliResult {
    let model = model_for(l, &boundary)?;
    let rates = RateFamily::new(rates.parse()?, beta)?;
    let observable = match observable {
        ObservableArg::Magnetization => Observable::Magnetization,
        ObservableArg::CenterSpin => Observable::CenterSpin,
        ObservableArg::Trap => {
            let eps = if model.num_sites() <= ising_gap::gibbs::ENUMERATION_MAX_SITES {
                GibbsTable::new(&model, beta)?.center_sign()
            } else {
                Sign::Plus
            };
            Observable::TrapIndicator(TrapEvent::from_boundary(model.omega(), eps)?)
        }
    };
    let s0 = Configuration::uniform(model.num_sites(), Sign::Plus);
    let trajs = simulate_replicas(&model, rates, s0, t_max, seed, replicas)?;
    if let Some(p) = samples {
        let dt = dt.unwrap_or(t_max / 1000.0);
        let mut out = output(&p)?;
        write_samples_csv(&trajs, &model, &[observable.clone(), Observable::Magnetization], burn_in, dt, &mut out)?;
        out.flush()?;
    }
    let events: usize = trajs.iter().map(|t| t.num_events()).sum();
    eprintln!("{replicas} replicas, {events} events");
    if !no_estimate {
        let est = estimate_relaxation_with(&trajs, &model, &observable, burn_in, &RelaxationOptions { dt, ..Default::default() })?;
        eprintln!("tau = {} +- {} (1/tau = {}), R^2 = {:.4}", est.tau, est.stderr, 1.0 / est.tau, est.r_squared);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { plan, csv, json } => run(plan, csv, json),
        Command::Gap { l, beta, boundary, rates, method } => gap(l, beta, boundary, rates, method),
        Command::VerifyLemmas { l, samples, seed } => verify(l, samples, seed),
        Command::Transition { beta, l, delta, rates } => transition(beta, l, delta, rates),
        Command::Simulate {
            l,
            beta,
            boundary,
            rates,
            t_max,
            burn_in,
            replicas,
            seed,
            dt,
            observable,
            samples,
            no_estimate,
        } => sim(l, beta, boundary, rates, t_max, burn_in, replicas, seed, dt, observable, samples, no_estimate),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
