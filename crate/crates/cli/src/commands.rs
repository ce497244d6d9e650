//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pac_abstraction::{
    behaviour_floor, check_behaviour, load_abstraction, load_controller, refine, run_trials, save_abstraction,
    save_controller, simulate_closed_loop, solve_reach_avoid, validate_accuracy, write_trace_csv,
    write_validation_csv, Abstraction64, AbstractionBuilder, CellId, Controller64, Error, Outcome, TrialRecord,
    TrialSetup,
};

use crate::config::{Problem, RunConfig};
use crate::Common;

pub const ABSTRACTION_FILE: &str = "abstraction.pacabs";
pub const ABSTRACTION_CONFIG_FILE: &str = "abstraction.config";
pub const CONTROLLER_FILE: &str = "controller.pacctl";
pub const TRACE_FILE: &str = "traces.csv";
pub const VALIDATION_FILE: &str = "validation.csv";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Unsatisfiable(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Unsatisfiable(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Unsatisfiable(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyWinningSet => CliError::Unsatisfiable(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Effective config, derived problem and output directory.
pub struct Session {
    pub cfg: RunConfig,
    pub problem: Problem,
    pub out: PathBuf,
}

impl Session {
    pub fn open(common: &Common) -> Result<Self, CliError> {
        let mut cfg = RunConfig::load(&common.config).map_err(CliError::Config)?;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if let Some(t) = common.threads {
            cfg.threads = Some(t);
        }
        let problem = cfg.problem().map_err(CliError::Config)?;
        let threads = cfg.threads.unwrap_or(0);
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        let out = common.out.clone().unwrap_or_else(|| cfg.out_dir());
        Ok(Self { cfg, problem, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn ensure_out(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.ensure_out()?;
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    /// Loads the abstraction and checks that it belongs to this config.
    pub fn abstraction(&self) -> Result<Abstraction64, CliError> {
        let side = self.path(ABSTRACTION_CONFIG_FILE);
        let stored = fs::read_to_string(&side).map_err(|e| io_err(&side, e))?;
        match stored.trim().strip_prefix("config ") {
            Some(sum) if sum == self.problem.checksum => {}
            Some(sum) => {
                return Err(CliError::Config(format!(
                    "abstraction was built from config {sum}, not {}",
                    self.problem.checksum
                )))
            }
            None => return Err(CliError::Config(format!("{}: malformed", side.display()))),
        }
        let path = self.path(ABSTRACTION_FILE);
        let abs: Abstraction64 = load_abstraction(&path).map_err(|e| io_err(&path, e))?;
        let p = &self.problem;
        let matches = abs.grid == p.grid
            && abs.inputs == p.inputs
            && abs.seed == self.cfg.seed
            && abs.params.mu == self.cfg.pac.mu
            && abs.params.delta == self.cfg.pac.delta
            && abs.params.sample_size == p.sample_size;
        if !matches {
            return Err(CliError::Config(format!(
                "{} does not match the grid, inputs or parameters of the config",
                path.display()
            )));
        }
        Ok(abs)
    }

    /// Loads the controller and checks its config and abstraction checksums.
    pub fn controller(&self, abs: Option<&Abstraction64>) -> Result<Controller64, CliError> {
        let path = self.path(CONTROLLER_FILE);
        let file = load_controller(&path, &self.problem.grid).map_err(|e| io_err(&path, e))?;
        if file.config_checksum.as_deref() != Some(self.problem.checksum.as_str()) {
            return Err(CliError::Config(format!(
                "{} was produced under config {}, not {}",
                path.display(),
                file.config_checksum.as_deref().unwrap_or("-"),
                self.problem.checksum
            )));
        }
        if let Some(abs) = abs {
            if file.controller.abstraction_checksum.as_deref() != Some(abs.checksum().as_str()) {
                return Err(CliError::Config(format!("{} was not solved on this abstraction", path.display())));
            }
        }
        Ok(file.controller)
    }
}

fn elapsed(start: Instant) -> String {
    format!("{:.2} s", start.elapsed().as_secs_f64())
}

pub fn cmd_abstract(s: &Session) -> Result<(), CliError> {
    let p = &s.problem;
    let (n_x, n_u) = (p.grid.n_x(), p.inputs.n_u());
    println!("config    {}", p.checksum);
    println!("n_x       {n_x}");
    println!("n_u       {n_u}");
    println!("M         {}", p.sample_size);
    println!("precision {} (requested {})", p.grid.achieved_precision(), s.cfg.pac.epsilon);
    println!("threads   {}", rayon::current_num_threads());

    let start = Instant::now();
    let total = n_x * n_u;
    let every = (total / 20).max(1);
    let progress = move |done: usize, total: usize| {
        if done.is_multiple_of(every) || done == total {
            let secs = start.elapsed().as_secs_f64().max(1e-9);
            eprintln!(
                "  {done}/{total} pairs, {:.1} cells/s",
                done as f64 / n_u as f64 / secs
            );
        }
    };
    let abs = AbstractionBuilder::new(s.cfg.pac.mu, s.cfg.pac.delta, s.cfg.seed)
        .sample_size(p.sample_size)
        .on_progress(&progress)
        .build(&p.system, &p.grid, &p.inputs)?;
    s.ensure_out()?;
    let path = s.path(ABSTRACTION_FILE);
    save_abstraction(&abs, &path).map_err(|e| io_err(&path, e))?;
    s.write(ABSTRACTION_CONFIG_FILE, &format!("config {}\n", p.checksum))?;
    println!("transitions {}", abs.transitions.transition_count());
    println!("checksum  {}", abs.checksum());
    println!("wrote     {}", path.display());
    println!("wall time {}", elapsed(start));
    Ok(())
}

pub fn cmd_synthesize(s: &Session, require_nonempty: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let abs = s.abstraction()?;
    let ctrl = solve_reach_avoid(&abs, &s.problem.spec)?;
    let path = s.path(CONTROLLER_FILE);
    save_controller(&ctrl, Some(&s.problem.checksum), &path).map_err(|e| io_err(&path, e))?;
    let classes = ctrl.classes();
    println!("horizon   {} steps", ctrl.horizon());
    println!("target cells {}", classes.target_cells().len());
    println!("unsafe cells {}", classes.unsafe_cells().len());
    println!("winning cells {} of {}", ctrl.winning_set().len(), ctrl.n_x());
    println!("controllable fraction {:.6}", ctrl.controllable_fraction());
    println!("wrote     {}", path.display());
    println!("wall time {}", elapsed(start));
    if require_nonempty && ctrl.winning_set().is_empty() {
        return Err(CliError::Unsatisfiable("winning set is empty".into()));
    }
    Ok(())
}

fn parse_state(text: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let x = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("initial state {text:?}: {e}")))?;
    if x.len() != dim {
        return Err(CliError::Config(format!("initial state {text:?} needs {dim} values")));
    }
    Ok(x)
}

fn describe(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Violated(0, pac_abstraction::ViolationReason::NoControl) => "refused: outside the winning set".into(),
        other => other.label(),
    }
}

pub fn cmd_simulate(s: &Session, x0: &[String], trials: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    let p = &s.problem;
    let ctrl = s.controller(None)?;
    let eps = p.grid.achieved_precision();
    let domain = p.grid.domain();

    let records: Vec<TrialRecord<f64>> = if trials.is_none() && (!x0.is_empty() || !s.cfg.simulate.initial_states.is_empty()) {
        let states = if x0.is_empty() {
            s.cfg.simulate.initial_states.clone()
        } else {
            x0.iter().map(|t| parse_state(t, p.grid.dim())).collect::<Result<_, _>>()?
        };
        let concrete = refine(&ctrl, &p.grid, &p.inputs)?;
        states
            .iter()
            .map(|x| {
                if x.len() != p.grid.dim() {
                    return Err(CliError::Config(format!("initial state {x:?} needs {} values", p.grid.dim())));
                }
                let trace = simulate_closed_loop(&p.system, &concrete, x, &p.spec, domain);
                let satisfied = check_behaviour(&trace, &p.spec, domain, eps);
                let initial_cell = p.grid.quantize(x).ok().and_then(CellId::index).unwrap_or(usize::MAX);
                println!("x0 = {x:?}: {}, {} steps, in spec: {satisfied}", describe(&trace.outcome), trace.inputs.len());
                Ok(TrialRecord {
                    initial_cell,
                    trace,
                    satisfied,
                })
            })
            .collect::<Result<_, _>>()?
    } else {
        let n = trials.unwrap_or(s.cfg.validate.trials);
        let setup = TrialSetup {
            system: &p.system,
            ctrl: &ctrl,
            grid: &p.grid,
            inputs: &p.inputs,
            spec: &p.spec,
            epsilon: eps,
        };
        let records = run_trials(&setup, n, s.cfg.seed)?;
        let reached = records.iter().filter(|r| r.trace.outcome.reached()).count();
        let expired = records.iter().filter(|r| r.trace.outcome == Outcome::HorizonExpired).count();
        let satisfied = records.iter().filter(|r| r.satisfied).count();
        println!("trials    {n}");
        println!("reached   {reached}");
        println!("violated  {}", n - reached - expired);
        println!("expired   {expired}");
        println!("in spec   {satisfied} ({:.4})", satisfied as f64 / n as f64);
        records
    };
    let csv = write_trace_csv(&records, p.grid.dim(), p.inputs.dim(), Some(&p.checksum));
    let path = s.write(TRACE_FILE, &csv)?;
    println!("wrote     {}", path.display());
    println!("wall time {}", elapsed(start));
    Ok(())
}

pub fn cmd_validate(s: &Session, hold_out: Option<usize>, trials: Option<usize>) -> Result<(), CliError> {
    let start = Instant::now();
    let p = &s.problem;
    let abs = s.abstraction()?;
    let k = hold_out.unwrap_or(s.cfg.validate.hold_out);
    let report = validate_accuracy(&p.system, &abs, k, s.cfg.seed)?;
    let path = s.write(VALIDATION_FILE, &write_validation_csv(&report, Some(&p.checksum)))?;
    println!("hold-out  {k} per pair");
    println!("min accuracy  {:.6}", report.min_accuracy);
    println!("mean accuracy {:.6}", report.mean_accuracy);
    println!("pairs below 1-mu {:.6}", report.fraction_below_1_minus_mu);

    let floor = behaviour_floor(s.cfg.pac.mu, p.spec.horizon);
    if !s.path(CONTROLLER_FILE).exists() {
        println!("success rate  n/a (no controller; floor {floor:.6})");
    } else {
        let ctrl = s.controller(Some(&abs))?;
        if ctrl.winning_set().is_empty() {
            println!("success rate  n/a (empty winning set; floor {floor:.6})");
        } else {
            let n = trials.unwrap_or(s.cfg.validate.trials);
            let setup = TrialSetup {
                system: &p.system,
                ctrl: &ctrl,
                grid: &p.grid,
                inputs: &p.inputs,
                spec: &p.spec,
                epsilon: p.grid.achieved_precision(),
            };
            let records = run_trials(&setup, n, s.cfg.seed)?;
            let rate = records.iter().filter(|r| r.satisfied).count() as f64 / n as f64;
            println!("success rate  {rate:.6} over {n} trials (floor (1-mu)^N = {floor:.6})");
        }
    }
    println!("wrote     {}", path.display());
    println!("wall time {}", elapsed(start));
    Ok(())
}

pub fn cmd_info(s: &Session) -> Result<(), CliError> {
    let p = &s.problem;
    println!("config    {}", p.checksum);
    println!("system    {:?}", p.system);
    println!("n_x       {}", p.grid.n_x());
    println!("n_u       {}", p.inputs.n_u());
    println!("M         {}", p.sample_size);
    println!("precision {} (requested {})", p.grid.achieved_precision(), s.cfg.pac.epsilon);
    println!("horizon   {} steps", p.spec.horizon);
    println!("floor     {:.6}", behaviour_floor(s.cfg.pac.mu, p.spec.horizon));
    println!("out       {}", s.out.display());
    if s.path(ABSTRACTION_FILE).exists() {
        match s.abstraction() {
            Ok(abs) => println!("abstraction {} transitions, checksum {}", abs.transitions.transition_count(), abs.checksum()),
            Err(e) => println!("abstraction unusable: {e}"),
        }
    }
    if s.path(CONTROLLER_FILE).exists() {
        match s.controller(None) {
            Ok(c) => println!(
                "controller {} winning cells, fraction {:.6}",
                c.winning_set().len(),
                c.controllable_fraction()
            ),
            Err(e) => println!("controller unusable: {e}"),
        }
    }
    Ok(())
}
