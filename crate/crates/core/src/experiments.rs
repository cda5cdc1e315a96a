//! Experiment drivers behind the command-line runner: convergence studies,
//! long-time energy runs, exact-solution validation and the scalar
//! order-reduction probe, with their CSV writers.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::diagnostics::{
    discrete_l2, discrete_l2_error, order_reduction_probe, CaseDescriptor, ConvergencePoint, ConvergenceReport,
    EnergySeries, MethodSeries, PointStatus, ProbeReport, PROBE_FINAL_TIME, PROBE_TAUS, PROBE_U0,
};
use crate::error::{invalid, Error, Result};
use crate::flows::{gpe_modified_flow, FlowStrategy};
use crate::integrators::{check_compatibility, integrate_with_context, scheme, IntegrationRun, RunStatus, SchemeName};
use crate::model::{
    exact_linear_solution, gaussian_initial_state, smooth_random_state, EquationKind, PotentialSpec, ProblemSpec,
};
use crate::operators::{apply_g2, commutator_oracle, modified_phase, OperatorContext, DEFAULT_FD_EPS};
use crate::spectral::{build_grid, ComplexField};

pub const CONVERGENCE_SCHEMA: &str = "splitflow-convergence/1";
pub const ENERGY_SCHEMA: &str = "splitflow-energy/1";
pub const PROBE_SCHEMA: &str = "splitflow-order-reduction/1";
pub const VALIDATION_SCHEMA: &str = "splitflow-validate/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Energy,
    Validate,
    OrderReduction,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Energy => "energy",
            Command::Validate => "validate",
            Command::OrderReduction => "order-reduction",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('_', "-").as_str() {
            "convergence" => Ok(Command::Convergence),
            "energy" => Ok(Command::Energy),
            "validate" => Ok(Command::Validate),
            "order-reduction" => Ok(Command::OrderReduction),
            other => invalid(format!("unknown command '{other}'")),
        }
    }
}

/// Source of the solution that global errors are measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Exact solution when one exists, refined run otherwise.
    Auto,
    Exact,
    /// `chin_modified` at a tenth of the smallest step size.
    Refined,
}

impl FromStr for ReferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(ReferenceMode::Auto),
            "exact" => Ok(ReferenceMode::Exact),
            "refined" => Ok(ReferenceMode::Refined),
            other => invalid(format!("unknown reference mode '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub equation: EquationKind,
    pub degree: u32,
    /// Trap prefactor; defaults to the prefactor matching the equation kind.
    pub c0: Option<f64>,
    pub theta: f64,
    pub dim: usize,
    pub points_per_dim: usize,
    pub half_width: f64,
    pub final_time: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_count: usize,
    /// Explicit step sizes; overrides the geometric sequence.
    pub taus: Option<Vec<f64>>,
    pub methods: Option<Vec<SchemeName>>,
    pub strategy: Option<FlowStrategy>,
    pub substeps: usize,
    pub reference: ReferenceMode,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Energy sampling stride.
    pub stride: usize,
    /// Step size and step count of energy runs.
    pub tau: f64,
    pub steps: usize,
    /// Initial value and horizon of the scalar probe.
    pub u0: f64,
    pub probe_time: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            equation: EquationKind::Schrodinger,
            degree: 2,
            c0: None,
            theta: 1.0,
            dim: 1,
            points_per_dim: 256,
            half_width: 10.0,
            final_time: 1.0,
            tau_min: 1e-3,
            tau_max: 1e-1,
            tau_count: 16,
            taus: None,
            methods: None,
            strategy: None,
            substeps: 1,
            reference: ReferenceMode::Auto,
            output: None,
            seed: 42,
            workers: 0,
            stride: 10,
            tau: 1e-3,
            steps: 10_000,
            u0: PROBE_U0,
            probe_time: PROBE_FINAL_TIME,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid value '{}' for {key}", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 24] = [
        "equation",
        "degree",
        "c0",
        "theta",
        "dim",
        "points-per-dim",
        "half-width",
        "final-time",
        "tau-min",
        "tau-max",
        "tau-count",
        "taus",
        "methods",
        "strategy",
        "substeps",
        "reference",
        "output",
        "seed",
        "workers",
        "stride",
        "tau",
        "steps",
        "u0",
        "probe-time",
    ];

    /// Sets one field from its textual form. Keys are the kebab-case field
    /// names (`q` is accepted for `degree`); snake case also works.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "equation" => self.equation = value.parse()?,
            "degree" | "q" => self.degree = parse(&key, value)?,
            "c0" => self.c0 = Some(parse(&key, value)?),
            "theta" => self.theta = parse(&key, value)?,
            "dim" => self.dim = parse(&key, value)?,
            "points-per-dim" => self.points_per_dim = parse(&key, value)?,
            "half-width" => self.half_width = parse(&key, value)?,
            "final-time" => self.final_time = parse(&key, value)?,
            "tau-min" => self.tau_min = parse(&key, value)?,
            "tau-max" => self.tau_max = parse(&key, value)?,
            "tau-count" => self.tau_count = parse(&key, value)?,
            "taus" => self.taus = Some(parse_list(&key, value)?),
            "methods" => {
                self.methods = if value.trim() == "all" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(str::parse)
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "strategy" => {
                let strategy: FlowStrategy = value.parse()?;
                if let (FlowStrategy::Rk4Combined { substeps }, true) = (strategy, value.contains(':')) {
                    self.substeps = substeps;
                }
                self.strategy = Some(strategy);
            }
            "substeps" => self.substeps = parse(&key, value)?,
            "reference" => self.reference = value.parse()?,
            "output" => self.output = Some(PathBuf::from(value.trim())),
            "seed" => self.seed = parse(&key, value)?,
            "workers" => self.workers = parse(&key, value)?,
            "stride" => self.stride = parse(&key, value)?,
            "tau" => self.tau = parse(&key, value)?,
            "steps" => self.steps = parse(&key, value)?,
            "u0" => self.u0 = parse(&key, value)?,
            "probe-time" => self.probe_time = parse(&key, value)?,
            other => return invalid(format!("unknown configuration key '{other}'")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return invalid(format!("line {}: expected 'key = value'", lineno + 1));
            };
            self.set(key, value)
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn c0(&self) -> f64 {
        self.c0.unwrap_or_else(|| self.equation.matched_prefactor())
    }

    pub fn strategy(&self) -> FlowStrategy {
        match self
            .strategy
            .unwrap_or_else(|| FlowStrategy::default_for(self.equation))
        {
            FlowStrategy::Rk4Combined { .. } => FlowStrategy::Rk4Combined {
                substeps: self.substeps,
            },
            other => other,
        }
    }

    pub fn methods(&self, command: Command) -> Vec<SchemeName> {
        match (&self.methods, command) {
            (Some(m), _) => m.clone(),
            (None, Command::Energy) => vec![SchemeName::ChinModified, SchemeName::Lie],
            (None, _) => vec![
                SchemeName::Lie,
                SchemeName::Strang,
                SchemeName::Yoshida,
                SchemeName::ChinModified,
            ],
        }
    }

    /// Step sizes in decreasing order, each adjusted to `T / round(T / tau)`.
    pub fn tau_sequence(&self) -> Vec<(f64, usize)> {
        let raw: Vec<f64> = match &self.taus {
            Some(t) => t.clone(),
            None if self.tau_count == 1 => vec![self.tau_max],
            None => (0..self.tau_count)
                .map(|k| {
                    let s = k as f64 / (self.tau_count - 1) as f64;
                    self.tau_max * (self.tau_min / self.tau_max).powf(s)
                })
                .collect(),
        };
        let mut steps: Vec<usize> = raw
            .iter()
            .map(|t| ((self.final_time / t).round() as usize).max(1))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps.into_iter().map(|n| (self.final_time / n as f64, n)).collect()
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return invalid(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        PotentialSpec::new(self.degree, self.c0())?;
        for (name, v) in [
            ("half-width", self.half_width),
            ("final-time", self.final_time),
            ("tau-min", self.tau_min),
            ("tau-max", self.tau_max),
            ("tau", self.tau),
            ("probe-time", self.probe_time),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.theta.is_finite() || !self.u0.is_finite() {
            return invalid("theta and u0 must be finite");
        }
        if self.substeps == 0 || self.stride == 0 || self.steps == 0 {
            return invalid("substeps, stride and steps must be positive");
        }
        if self.tau_min > self.tau_max {
            return invalid("tau-min exceeds tau-max");
        }
        if let Some(t) = &self.taus {
            if let Some(bad) = t.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return invalid(format!("step sizes must be positive, got {bad}"));
            }
        }
        if self.points_per_dim < 8 || !self.points_per_dim.is_multiple_of(2) {
            return invalid(format!(
                "points-per-dim must be even and at least 8, got {}",
                self.points_per_dim
            ));
        }
        let strategy = self.strategy();
        match command {
            Command::Convergence => {
                let n = self.taus.as_ref().map_or(self.tau_count, Vec::len);
                if n < 3 {
                    return Err(Error::InsufficientData(format!(
                        "convergence needs at least 3 step sizes, got {n}"
                    )));
                }
                for m in self.methods(command) {
                    check_compatibility(self.equation, &scheme(m), strategy)?;
                }
            }
            Command::Energy => {
                if self.equation != EquationKind::Schrodinger {
                    return invalid("energy runs need the Schroedinger equation");
                }
                for m in self.methods(command) {
                    check_compatibility(self.equation, &scheme(m), strategy)?;
                }
            }
            Command::Validate => {
                if self.degree != 2 || self.theta != 0.0 || self.c0() != self.equation.matched_prefactor() {
                    return invalid(format!(
                        "validation needs q = 2, theta = 0 and C0 = {} for the {} equation",
                        self.equation.matched_prefactor(),
                        self.equation
                    ));
                }
            }
            Command::OrderReduction => {
                let n = self.taus.as_ref().map_or(PROBE_TAUS.len(), Vec::len);
                if n < 2 {
                    return Err(Error::InsufficientData("the probe needs at least 2 step sizes".into()));
                }
            }
        }
        Ok(())
    }

    pub fn problem(&self, final_time: f64) -> Result<ProblemSpec> {
        let grid = build_grid(self.dim, self.half_width, self.points_per_dim)?;
        ProblemSpec::new(
            self.equation,
            PotentialSpec::new(self.degree, self.c0())?,
            self.theta,
            grid,
            final_time,
        )
    }

    fn case(&self) -> CaseDescriptor {
        CaseDescriptor {
            equation: self.equation,
            degree: self.degree,
            c0: self.c0(),
            theta: self.theta,
            dim: self.dim,
            points_per_dim: self.points_per_dim,
        }
    }
}

fn with_pool<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Strategy for reference runs: the closed form for Schroedinger, the exact
/// `F2` flow with the Strang composite for parabolic problems.
pub fn reference_strategy(kind: EquationKind) -> FlowStrategy {
    FlowStrategy::default_for(kind)
}

struct Reference {
    state: ComplexField,
    floor: f64,
    label: String,
}

fn reference_solution(cfg: &ExperimentConfig, ctx: &OperatorContext, tau_min: f64) -> Result<Reference> {
    let problem = &ctx.problem;
    let exact = match cfg.reference {
        ReferenceMode::Auto => problem.has_exact_solution(),
        ReferenceMode::Exact => true,
        ReferenceMode::Refined => false,
    };
    if exact {
        let state = exact_linear_solution(problem, problem.final_time)?;
        let floor = 1e-14 * discrete_l2(&state);
        return Ok(Reference {
            state,
            floor,
            label: "exact".into(),
        });
    }
    let n_ref = ((problem.final_time / (tau_min / 10.0)).round() as usize).max(2);
    let n_ref = n_ref + n_ref % 2;
    let u0 = gaussian_initial_state(&problem.grid);
    let strategy = reference_strategy(problem.equation);
    let run = |n: usize| -> Result<ComplexField> {
        let run = IntegrationRun::new(problem.clone(), scheme(SchemeName::ChinModified), n, strategy)?;
        let out = integrate_with_context(&u0, &run, ctx)?;
        match out.status {
            RunStatus::Completed => Ok(out.state),
            RunStatus::Aborted { step, reason } => invalid(format!("reference run aborted at step {step}: {reason}")),
        }
    };
    let (fine, coarse) = rayon::join(|| run(n_ref), || run(n_ref / 2));
    let (fine, coarse) = (fine?, coarse?);
    let richardson = discrete_l2_error(&fine, &coarse)? / 15.0;
    let floor = richardson.max(1e-14 * discrete_l2(&fine));
    Ok(Reference {
        state: fine,
        floor,
        label: format!("chin_modified/{strategy}/N={n_ref}"),
    })
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate(Command::Convergence)?;
    let taus = cfg.tau_sequence();
    if taus.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct step counts, need 3",
            taus.len()
        )));
    }
    let problem = cfg.problem(cfg.final_time)?;
    let ctx = OperatorContext::new(problem.clone());
    let strategy = cfg.strategy();
    let methods = cfg.methods(Command::Convergence);
    let u0 = gaussian_initial_state(&problem.grid);
    let tau_min = taus.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);

    with_pool(cfg.workers, || -> Result<ConvergenceReport> {
        let reference = reference_solution(cfg, &ctx, tau_min)?;
        let tasks: Vec<(SchemeName, f64, usize)> = methods
            .iter()
            .flat_map(|&m| taus.iter().map(move |&(t, n)| (m, t, n)))
            .collect();
        let points: Vec<Result<ConvergencePoint>> = tasks
            .par_iter()
            .map(|&(method, tau, steps)| {
                let run = IntegrationRun::new(problem.clone(), scheme(method), steps, strategy)?;
                let start = Instant::now();
                let out = integrate_with_context(&u0, &run, &ctx)?;
                let runtime_seconds = start.elapsed().as_secs_f64();
                let error = match out.status {
                    RunStatus::Completed => {
                        Some(discrete_l2_error(&out.state, &reference.state)?).filter(|e| e.is_finite())
                    }
                    RunStatus::Aborted { .. } => None,
                };
                Ok(ConvergencePoint {
                    tau,
                    steps,
                    global_error: error,
                    runtime_seconds,
                    status: if error.is_some() {
                        PointStatus::Ok
                    } else {
                        PointStatus::Unstable
                    },
                })
            })
            .collect();
        let mut points = points.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
        let series = methods
            .iter()
            .map(|&method| {
                let mut s = MethodSeries {
                    method,
                    strategy,
                    points: points.by_ref().take(taus.len()).collect(),
                    fitted_order: None,
                };
                s.fit(reference.floor);
                s
            })
            .collect();
        Ok(ConvergenceReport {
            case: cfg.case(),
            reference_floor: reference.floor,
            reference: reference.label,
            methods: series,
        })
    })?
}

pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, mut w: W) -> Result<()> {
    writeln!(
        w,
        "method,equation,q,C0,theta,dim,points_per_dim,tau,global_error,runtime_seconds,status"
    )?;
    writeln!(w, "# schema = {CONVERGENCE_SCHEMA}")?;
    writeln!(w, "# reference = {}", report.reference)?;
    writeln!(w, "# reference_floor = {:e}", report.reference_floor)?;
    writeln!(
        w,
        "# saturation_threshold = {:e}",
        crate::diagnostics::FLOOR_FACTOR * report.reference_floor
    )?;
    for s in &report.methods {
        match s.fitted_order {
            Some(p) => writeln!(w, "# slope.{} = {p:.4}", s.method)?,
            None => writeln!(w, "# slope.{} = none", s.method)?,
        }
    }
    let c = &report.case;
    for s in &report.methods {
        for p in &s.points {
            let error = p.global_error.map(|e| format!("{e:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:e},{},{:.6},{}",
                s.method,
                c.equation,
                c.degree,
                c.c0,
                c.theta,
                c.dim,
                c.points_per_dim,
                p.tau,
                error,
                p.runtime_seconds,
                p.status
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct EnergyRun {
    pub method: SchemeName,
    pub tau: f64,
    pub status: RunStatus,
    pub series: EnergySeries,
    /// Same samples of the conserved Hamiltonian.
    pub hamiltonian: EnergySeries,
}

pub fn run_energy(cfg: &ExperimentConfig) -> Result<Vec<EnergyRun>> {
    cfg.validate(Command::Energy)?;
    let final_time = cfg.tau * cfg.steps as f64;
    let problem = cfg.problem(final_time)?;
    let ctx = OperatorContext::new(problem.clone());
    let strategy = cfg.strategy();
    let u0 = gaussian_initial_state(&problem.grid);
    let methods = cfg.methods(Command::Energy);
    with_pool(cfg.workers, || {
        methods
            .par_iter()
            .map(|&method| {
                let run = IntegrationRun::new(problem.clone(), scheme(method), cfg.steps, strategy)?
                    .with_sampling(cfg.stride)?;
                let out = integrate_with_context(&u0, &run, &ctx)?;
                let steps: Vec<usize> = out.samples.iter().map(|s| s.step).collect();
                let times: Vec<f64> = out.samples.iter().map(|s| s.time).collect();
                let energies = out.samples.iter().map(|s| s.energy.unwrap_or(f64::NAN)).collect();
                let hamiltonians = out.samples.iter().map(|s| s.hamiltonian.unwrap_or(f64::NAN)).collect();
                Ok(EnergyRun {
                    method,
                    tau: run.tau,
                    status: out.status,
                    series: EnergySeries::new(steps.clone(), times.clone(), energies)?,
                    hamiltonian: EnergySeries::new(steps, times, hamiltonians)?,
                })
            })
            .collect::<Vec<Result<EnergyRun>>>()
            .into_iter()
            .collect()
    })?
}

pub fn write_energy_csv<W: Write>(run: &EnergyRun, mut w: W) -> Result<()> {
    writeln!(w, "step,time,energy,deviation")?;
    writeln!(w, "# schema = {ENERGY_SCHEMA}")?;
    writeln!(w, "# method = {}", run.method)?;
    writeln!(w, "# tau = {:e}", run.tau)?;
    if let RunStatus::Aborted { step, reason } = &run.status {
        writeln!(w, "# aborted at step {step}: {reason}")?;
    }
    writeln!(w, "# max_deviation = {:e}", run.series.max_deviation())?;
    writeln!(w, "# end_drift = {:e}", run.series.end_drift())?;
    writeln!(w, "# early_excursion = {:e}", run.series.early_excursion())?;
    writeln!(w, "# hamiltonian_max_deviation = {:e}", run.hamiltonian.max_deviation())?;
    let s = &run.series;
    for i in 0..s.steps.len() {
        writeln!(
            w,
            "{},{},{:.17e},{:e}",
            s.steps[i], s.times[i], s.energies[i], s.deviations[i]
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub equation: EquationKind,
    pub tau: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn rel_l2(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    Ok(discrete_l2_error(a, b)? / discrete_l2(b))
}

pub fn run_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate(Command::Validate)?;
    let (tau, steps) = *cfg.tau_sequence().last().expect("nonempty tau sequence");
    let kind = cfg.equation;
    let problem = cfg.problem(cfg.final_time)?;
    let ctx = OperatorContext::new(problem.clone());
    let grid = problem.grid.clone();
    let mut checks = Vec::new();

    // Exact solution versus the fourth-order modified scheme.
    let u0 = gaussian_initial_state(&grid);
    let strategy = reference_strategy(kind);
    let run = IntegrationRun::new(problem.clone(), scheme(SchemeName::ChinModified), steps, strategy)?;
    let out = integrate_with_context(&u0, &run, &ctx)?;
    let exact = exact_linear_solution(&problem, problem.final_time)?;
    let err = match out.status {
        RunStatus::Completed => discrete_l2_error(&out.state, &exact)?,
        RunStatus::Aborted { .. } => f64::INFINITY,
    };
    checks.push(Check::below("exact_solution_error", err, 1e-8));

    // Random band-limited state; real-valued for the parabolic kind.
    let mut v = smooth_random_state(&grid, cfg.seed);
    if kind == EquationKind::Parabolic {
        v = v.re().to_complex();
    }

    // Linear commutator reduction at theta = 0.
    let g2 = apply_g2(&v, &ctx)?;
    let factor = 2.0 * kind.c_bar();
    let expected = v.with_values(
        v.values()
            .iter()
            .zip(ctx.gradient_norm_sq().values())
            .map(|(z, g)| factor * g * z)
            .collect(),
    );
    checks.push(Check::below(
        "linear_commutator_reduction",
        discrete_l2_error(&g2, &expected)? / discrete_l2(&v),
        1e-10,
    ));

    // Closed forms against the finite-difference oracle at theta = 1.
    let nonlinear = ProblemSpec::new(kind, problem.potential, 1.0, grid.clone(), problem.final_time)?;
    let nl_ctx = OperatorContext::new(nonlinear.clone());
    let (_, g2_fd) = commutator_oracle(&v, &nl_ctx, DEFAULT_FD_EPS)?;
    checks.push(Check::below(
        "commutator_oracle",
        rel_l2(&g2_fd, &apply_g2(&v, &nl_ctx)?)?,
        1e-4,
    ));

    match kind {
        EquationKind::Schrodinger => {
            let (b1, b2, t) = (2.0 / 3.0, -1.0 / 72.0, 0.05);
            let w = gpe_modified_flow(&v, &nl_ctx, b1, b2, t)?;
            let before = modified_phase(&v, &nl_ctx, b1, b2, t)?.to_complex();
            let after = modified_phase(&w, &nl_ctx, b1, b2, t)?.to_complex();
            checks.push(Check::below(
                "invariance_principle",
                discrete_l2_error(&before, &after)?,
                1e-8,
            ));
            let modulus = v
                .values()
                .iter()
                .zip(w.values())
                .map(|(a, b)| (a.norm() - b.norm()).abs())
                .fold(0.0, f64::max);
            checks.push(Check::below("pointwise_modulus", modulus, 1e-13));
            let run = IntegrationRun::new(nonlinear, scheme(SchemeName::ChinModified), 100, strategy)?;
            let out = integrate_with_context(&u0, &run, &nl_ctx)?;
            let n0 = discrete_l2(&u0);
            checks.push(Check::below(
                "norm_conservation",
                (discrete_l2(&out.state) - n0).abs() / n0,
                1e-10,
            ));
        }
        EquationKind::Parabolic => {
            checks.push(Check::below("realness", out.state.max_imag(), 1e-10));
        }
    }
    Ok(ValidationReport {
        equation: kind,
        tau,
        checks,
    })
}

pub fn write_validation_csv<W: Write>(report: &ValidationReport, mut w: W) -> Result<()> {
    writeln!(w, "check,value,tolerance,status")?;
    writeln!(w, "# schema = {VALIDATION_SCHEMA}")?;
    writeln!(w, "# equation = {}", report.equation)?;
    writeln!(w, "# tau = {:e}", report.tau)?;
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "fail" };
        writeln!(w, "{},{:e},{:e},{status}", c.name, c.value, c.tolerance)?;
    }
    Ok(())
}

pub fn run_order_reduction(cfg: &ExperimentConfig) -> Result<ProbeReport> {
    cfg.validate(Command::OrderReduction)?;
    let taus = cfg.taus.clone().unwrap_or_else(|| PROBE_TAUS.to_vec());
    order_reduction_probe(cfg.u0, &taus, cfg.probe_time)
}

pub fn write_probe_csv<W: Write>(report: &ProbeReport, mut w: W) -> Result<()> {
    writeln!(w, "tau,local_error,global_error")?;
    writeln!(w, "# schema = {PROBE_SCHEMA}")?;
    writeln!(w, "# local_slope = {:.4}", report.local_slope)?;
    writeln!(w, "# global_slope = {:.4}", report.global_slope)?;
    for i in 0..report.taus.len() {
        writeln!(
            w,
            "{:e},{:e},{:e}",
            report.taus[i], report.local_errors[i], report.global_errors[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            points_per_dim: 64,
            tau_count: 4,
            tau_min: 1e-2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn key_value_parsing() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\nequation = parabolic\nq = 4\npoints_per_dim = 128\nmethods = lie, strang\n\
             strategy = rk4_combined:3\ntaus = 0.1,0.05 , 0.025\n",
        )
        .unwrap();
        assert_eq!(cfg.equation, EquationKind::Parabolic);
        assert_eq!(cfg.degree, 4);
        assert_eq!(cfg.points_per_dim, 128);
        assert_eq!(
            cfg.methods(Command::Convergence),
            vec![SchemeName::Lie, SchemeName::Strang]
        );
        assert_eq!(cfg.strategy(), FlowStrategy::Rk4Combined { substeps: 3 });
        assert_eq!(cfg.taus, Some(vec![0.1, 0.05, 0.025]));
        assert_eq!(cfg.c0(), -1.0);
        assert!(cfg.apply_text("nonsense").is_err());
        assert!(cfg.apply_text("colour = blue").is_err());
        assert!(cfg.set("dim", "two").is_err());
    }

    #[test]
    fn tau_sequence_is_decreasing_and_exact() {
        let cfg = ExperimentConfig::default();
        let taus = cfg.tau_sequence();
        assert_eq!(taus.len(), 16);
        assert!(taus.windows(2).all(|w| w[0].0 > w[1].0));
        assert_eq!(taus[0].1, 10);
        assert_eq!(taus[15].1, 1000);
        for (t, n) in taus {
            assert!((t * n as f64 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        let cfg = ExperimentConfig {
            taus: Some(vec![0.1, 0.05]),
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_convergence(&cfg), Err(Error::InsufficientData(_))));
        let cfg = ExperimentConfig {
            theta: 0.0,
            c0: Some(-1.0),
            ..ExperimentConfig::default()
        };
        assert!(run_validate(&cfg).is_err());
        let cfg = ExperimentConfig {
            equation: EquationKind::Parabolic,
            ..ExperimentConfig::default()
        };
        assert!(run_energy(&cfg).is_err());
        let cfg = ExperimentConfig {
            methods: Some(vec![SchemeName::YoshidaComplex]),
            ..ExperimentConfig::default()
        };
        assert!(run_convergence(&cfg).is_err());
        let cfg = ExperimentConfig {
            points_per_dim: 30 + 1,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate(Command::Convergence).is_err());
    }

    #[test]
    fn small_convergence_run_is_deterministic() {
        let cfg = ExperimentConfig {
            theta: 0.0,
            methods: Some(vec![SchemeName::Strang]),
            ..small()
        };
        let a = run_convergence(&cfg).unwrap();
        let b = run_convergence(&ExperimentConfig { workers: 1, ..cfg }).unwrap();
        assert_eq!(a.reference, "exact");
        let errs = |r: &ConvergenceReport| -> Vec<Option<f64>> {
            r.methods[0].points.iter().map(|p| p.global_error).collect()
        };
        assert_eq!(errs(&a), errs(&b));
        let slope = a.slope(SchemeName::Strang).unwrap();
        assert!((slope - 2.0).abs() < 0.15, "{slope}");
        let mut csv = Vec::new();
        write_convergence_csv(&a, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(
            text.starts_with("method,equation,q,C0,theta,dim,points_per_dim,tau,global_error,runtime_seconds,status\n")
        );
        assert_eq!(text.lines().filter(|l| l.starts_with("strang,")).count(), 4);
    }

    #[test]
    fn probe_csv() {
        let report = run_order_reduction(&ExperimentConfig::default()).unwrap();
        let mut out = Vec::new();
        write_probe_csv(&report, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("tau,local_error,global_error\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }
}
