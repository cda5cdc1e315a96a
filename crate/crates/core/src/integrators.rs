//! Splitting-scheme catalogue and the stepping engine.
//!
//! Stages are stored in application order. A scheme printed as
//! `E_{b_s B} o E_{a_s A} o ... o E_{b_1 B} o E_{a_1 A}` is therefore stored as
//! `A(a_1), B(b_1), ..., A(a_s), B(b_s)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::diagnostics::{discrete_l2, energy, hamiltonian};
use crate::error::{invalid, Error, Result};
use crate::flows::{
    gpe_modified_flow, linear_flow, parabolic_f2_exact_flow, rk4_combined_flow, strang_composite_flow, FlowStrategy,
};
use crate::model::{EquationKind, ProblemSpec};
use crate::operators::OperatorContext;
use crate::spectral::ComplexField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageKind {
    /// Linear flow of `F1`.
    A,
    /// Nonlinear flow of `F2`.
    B,
    /// Nonlinear flow of `F2 + w tau^2 G2`.
    BModified,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub coefficient: Complex64,
    /// Nonzero only for [`StageKind::BModified`].
    pub commutator_weight: f64,
}

impl Stage {
    pub fn a(coefficient: impl Into<Complex64>) -> Self {
        Self {
            kind: StageKind::A,
            coefficient: coefficient.into(),
            commutator_weight: 0.0,
        }
    }

    pub fn b(coefficient: impl Into<Complex64>) -> Self {
        Self {
            kind: StageKind::B,
            coefficient: coefficient.into(),
            commutator_weight: 0.0,
        }
    }

    pub fn b_modified(coefficient: f64, commutator_weight: f64) -> Self {
        Self {
            kind: StageKind::BModified,
            coefficient: coefficient.into(),
            commutator_weight,
        }
    }

    fn is_linear(&self) -> bool {
        self.kind == StageKind::A
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeName {
    Lie,
    Strang,
    Yoshida,
    YoshidaComplex,
    ChinModified,
}

impl SchemeName {
    pub const ALL: [SchemeName; 5] = [
        SchemeName::Lie,
        SchemeName::Strang,
        SchemeName::Yoshida,
        SchemeName::YoshidaComplex,
        SchemeName::ChinModified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::Lie => "lie",
            SchemeName::Strang => "strang",
            SchemeName::Yoshida => "yoshida",
            SchemeName::YoshidaComplex => "yoshida_complex",
            SchemeName::ChinModified => "chin_modified",
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        SchemeName::ALL
            .into_iter()
            .find(|n| n.as_str() == key)
            .map_or_else(|| invalid(format!("unknown splitting scheme '{}'", s.trim())), Ok)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplittingScheme {
    pub name: SchemeName,
    pub stages: Vec<Stage>,
    pub declared_order: u32,
}

impl SplittingScheme {
    pub fn a_sum(&self) -> Complex64 {
        self.coefficient_sum(true)
    }

    pub fn b_sum(&self) -> Complex64 {
        self.coefficient_sum(false)
    }

    fn coefficient_sum(&self, linear: bool) -> Complex64 {
        self.stages
            .iter()
            .filter(|s| s.is_linear() == linear)
            .map(|s| s.coefficient)
            .sum()
    }

    pub fn a_coefficients(&self) -> Vec<Complex64> {
        self.stages
            .iter()
            .filter(|s| s.is_linear())
            .map(|s| s.coefficient)
            .collect()
    }

    pub fn b_coefficients(&self) -> Vec<Complex64> {
        self.stages
            .iter()
            .filter(|s| !s.is_linear())
            .map(|s| s.coefficient)
            .collect()
    }

    pub fn has_complex_coefficients(&self) -> bool {
        self.stages.iter().any(|s| s.coefficient.im != 0.0)
    }

    /// Whether any linear stage has `Re(a) < 0` (backward heat flow on parabolic problems).
    pub fn has_negative_linear_stage(&self) -> bool {
        self.stages.iter().any(|s| s.is_linear() && s.coefficient.re < 0.0)
    }

    pub fn is_palindromic(&self) -> bool {
        let active: Vec<&Stage> = self
            .stages
            .iter()
            .filter(|s| s.coefficient != Complex64::default())
            .collect();
        active.iter().zip(active.iter().rev()).all(|(x, y)| x == y)
    }
}

/// Real fourth-order composition coefficient `b2 = (1 - 2^{1/3} - 4^{1/3}/2) / 6`.
pub fn yoshida_b2() -> f64 {
    (1.0 - 2f64.cbrt() - 4f64.cbrt() / 2.0) / 6.0
}

/// Complex fourth-order coefficient with positive real parts of all linear stages.
pub fn yoshida_complex_b2() -> Complex64 {
    let re = (1.0 + 2f64.cbrt() / 2.0 + 4f64.cbrt() / 4.0) / 6.0;
    let im = 3f64.sqrt() / 12.0 * (4f64.cbrt() / 2.0 - 2f64.cbrt());
    Complex64::new(re, im)
}

fn four_stage(name: SchemeName, b2: Complex64) -> SplittingScheme {
    let one = Complex64::new(1.0, 0.0);
    let b1 = 0.5 * one - b2;
    let a2 = one - 2.0 * b2;
    let a3 = 4.0 * b2 - one;
    SplittingScheme {
        name,
        stages: vec![
            Stage::a(0.0),
            Stage::b(b1),
            Stage::a(a2),
            Stage::b(b2),
            Stage::a(a3),
            Stage::b(b2),
            Stage::a(a2),
            Stage::b(b1),
        ],
        declared_order: 4,
    }
}

pub fn make_scheme(name: &str) -> Result<SplittingScheme> {
    Ok(scheme(name.parse()?))
}

pub fn scheme(name: SchemeName) -> SplittingScheme {
    match name {
        SchemeName::Lie => SplittingScheme {
            name,
            stages: vec![Stage::a(1.0), Stage::b(1.0)],
            declared_order: 1,
        },
        SchemeName::Strang => SplittingScheme {
            name,
            stages: vec![Stage::a(0.0), Stage::b(0.5), Stage::a(1.0), Stage::b(0.5)],
            declared_order: 2,
        },
        SchemeName::Yoshida => four_stage(name, yoshida_b2().into()),
        SchemeName::YoshidaComplex => four_stage(name, yoshida_complex_b2()),
        SchemeName::ChinModified => SplittingScheme {
            name,
            stages: vec![
                Stage::b(1.0 / 6.0),
                Stage::a(0.5),
                Stage::b_modified(2.0 / 3.0, -1.0 / 72.0),
                Stage::a(0.5),
                Stage::b(1.0 / 6.0),
            ],
            declared_order: 4,
        },
    }
}

/// Rejects scheme and strategy combinations the engine cannot evaluate.
pub fn check_compatibility(kind: EquationKind, scheme: &SplittingScheme, strategy: FlowStrategy) -> Result<()> {
    if !strategy.supports(kind) {
        return invalid(format!(
            "flow strategy {strategy} does not apply to the {kind} equation"
        ));
    }
    if scheme.has_complex_coefficients() && !matches!(strategy, FlowStrategy::Rk4Combined { .. }) {
        return invalid(format!(
            "scheme {} has complex coefficients; select the rk4_combined strategy",
            scheme.name
        ));
    }
    Ok(())
}

/// One run of a scheme over `steps` steps of size `tau = T / steps`.
#[derive(Clone, Debug)]
pub struct IntegrationRun {
    pub problem: ProblemSpec,
    pub scheme: SplittingScheme,
    pub tau: f64,
    pub steps: usize,
    pub strategy: FlowStrategy,
    /// Observer stride; `None` disables sampling.
    pub sample_stride: Option<usize>,
}

impl IntegrationRun {
    pub fn new(problem: ProblemSpec, scheme: SplittingScheme, steps: usize, strategy: FlowStrategy) -> Result<Self> {
        if steps == 0 {
            return invalid("number of steps must be positive");
        }
        check_compatibility(problem.equation, &scheme, strategy)?;
        let tau = problem.final_time / steps as f64;
        Ok(Self {
            problem,
            scheme,
            tau,
            steps,
            strategy,
            sample_stride: None,
        })
    }

    pub fn with_sampling(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return invalid("sampling stride must be positive");
        }
        self.sample_stride = Some(stride);
        Ok(self)
    }
}

/// One composite step of size `tau`; `tau` may be negative.
pub fn splitting_step(
    state: &ComplexField,
    ctx: &OperatorContext,
    scheme: &SplittingScheme,
    strategy: FlowStrategy,
    tau: f64,
) -> Result<ComplexField> {
    let kind = ctx.equation();
    check_compatibility(kind, scheme, strategy)?;
    let mut u = state.clone();
    for (index, stage) in scheme.stages.iter().enumerate() {
        if stage.coefficient == Complex64::default() {
            continue;
        }
        u = apply_stage(&u, ctx, stage, strategy, tau).map_err(|e| match e {
            Error::InvalidArgument(_) => e,
            other => Error::Stage {
                stage: index,
                source: Box::new(other),
            },
        })?;
    }
    Ok(u)
}

fn apply_stage(
    u: &ComplexField,
    ctx: &OperatorContext,
    stage: &Stage,
    strategy: FlowStrategy,
    tau: f64,
) -> Result<ComplexField> {
    let beta = stage.coefficient;
    let weight = stage.commutator_weight;
    match (stage.kind, strategy) {
        (StageKind::A, _) => Ok(linear_flow(u, ctx, beta, tau)?.state),
        (_, FlowStrategy::Rk4Combined { substeps }) => rk4_combined_flow(u, ctx, beta, weight, tau, substeps),
        (_, FlowStrategy::ClosedFormInvariance) => gpe_modified_flow(u, ctx, beta.re, weight, tau),
        (StageKind::B, FlowStrategy::StrangComposite) => parabolic_f2_exact_flow(u, ctx, beta.re, tau),
        (StageKind::BModified, FlowStrategy::StrangComposite) => strang_composite_flow(u, ctx, beta.re, weight, tau),
    }
}

/// Abort threshold on the discrete L2 norm of the state.
pub const BLOW_UP_NORM: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Step `step` (1-based) failed; the outcome carries the last finite state.
    Aborted {
        step: usize,
        reason: String,
    },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    /// Present for the Schroedinger kind.
    pub energy: Option<f64>,
    pub hamiltonian: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IntegrationOutcome {
    pub state: ComplexField,
    pub steps_taken: usize,
    pub status: RunStatus,
    pub samples: Vec<Sample>,
}

pub fn integrate(initial: &ComplexField, run: &IntegrationRun) -> Result<IntegrationOutcome> {
    let ctx = OperatorContext::new(run.problem.clone());
    integrate_with_context(initial, run, &ctx)
}

/// Numerical failures (blow-up, non-finite values, norm above [`BLOW_UP_NORM`])
/// end the run with [`RunStatus::Aborted`]; only configuration problems are errors.
pub fn integrate_with_context(
    initial: &ComplexField,
    run: &IntegrationRun,
    ctx: &OperatorContext,
) -> Result<IntegrationOutcome> {
    initial.ensure_same_grid(&ComplexField::zeros(run.problem.grid.clone()))?;
    check_compatibility(run.problem.equation, &run.scheme, run.strategy)?;
    let sample = |u: &ComplexField, step: usize| -> Result<Sample> {
        let (energy, hamiltonian) = match run.problem.equation {
            EquationKind::Schrodinger => (Some(energy(u, ctx)?), Some(hamiltonian(u, ctx)?)),
            EquationKind::Parabolic => (None, None),
        };
        Ok(Sample {
            step,
            time: step as f64 * run.tau,
            norm: discrete_l2(u),
            energy,
            hamiltonian,
        })
    };
    let mut samples = Vec::new();
    if run.sample_stride.is_some() {
        samples.push(sample(initial, 0)?);
    }
    let mut u = initial.clone();
    for n in 1..=run.steps {
        let next = match splitting_step(&u, ctx, &run.scheme, run.strategy, run.tau) {
            Ok(next) => next,
            Err(e @ Error::InvalidArgument(_)) => return Err(e),
            Err(e) => return Ok(aborted(u, n, e.to_string(), samples)),
        };
        let norm = discrete_l2(&next);
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Ok(aborted(
                u,
                n,
                format!("discrete L2 norm {norm:e} exceeds {BLOW_UP_NORM:e}"),
                samples,
            ));
        }
        u = next;
        if let Some(stride) = run.sample_stride {
            if n % stride == 0 || n == run.steps {
                samples.push(sample(&u, n)?);
            }
        }
    }
    Ok(IntegrationOutcome {
        state: u,
        steps_taken: run.steps,
        status: RunStatus::Completed,
        samples,
    })
}

fn aborted(state: ComplexField, step: usize, reason: String, samples: Vec<Sample>) -> IntegrationOutcome {
    IntegrationOutcome {
        state,
        steps_taken: step - 1,
        status: RunStatus::Aborted { step, reason },
        samples,
    }
}
