//! Evolution operators of the subproblems.
//!
//! A flow `E_{tau, beta F}` of an autonomous field is realised as the unit
//! flow over the effective time `beta * tau`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::EquationKind;
use crate::operators::{apply_f2, apply_g2, modified_phase, OperatorContext};
use crate::spectral::ComplexField;

/// How nonlinear stages of a splitting step are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowStrategy {
    /// Pointwise phase rotation by the invariant `f`; Schroedinger only.
    ClosedFormInvariance,
    /// Classical RK4 applied to `beta1 F2 + beta2 tau^2 G2`.
    Rk4Combined { substeps: usize },
    /// Exact `F2` flow for plain stages, Strang composite for the modified stage; parabolic only.
    StrangComposite,
}

impl FlowStrategy {
    pub fn default_for(kind: EquationKind) -> Self {
        match kind {
            EquationKind::Schrodinger => FlowStrategy::ClosedFormInvariance,
            EquationKind::Parabolic => FlowStrategy::StrangComposite,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FlowStrategy::ClosedFormInvariance => "closed_form_invariance",
            FlowStrategy::Rk4Combined { .. } => "rk4_combined",
            FlowStrategy::StrangComposite => "strang_composite",
        }
    }

    pub fn supports(&self, kind: EquationKind) -> bool {
        match self {
            FlowStrategy::ClosedFormInvariance => kind == EquationKind::Schrodinger,
            FlowStrategy::StrangComposite => kind == EquationKind::Parabolic,
            FlowStrategy::Rk4Combined { .. } => true,
        }
    }
}

impl fmt::Display for FlowStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlowStrategy {
    type Err = Error;

    /// Accepts `rk4_combined:<substeps>`; bare `rk4_combined` means one substep.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h.to_string(), Some(t.to_string())),
            None => (s.clone(), None),
        };
        match (head.as_str(), tail) {
            ("closed_form_invariance" | "closed_form", None) => Ok(FlowStrategy::ClosedFormInvariance),
            ("strang_composite" | "exact_f2", None) => Ok(FlowStrategy::StrangComposite),
            ("rk4_combined" | "rk4", None) => Ok(FlowStrategy::Rk4Combined { substeps: 1 }),
            ("rk4_combined" | "rk4", Some(n)) => match n.parse::<usize>() {
                Ok(substeps) if substeps >= 1 => Ok(FlowStrategy::Rk4Combined { substeps }),
                _ => invalid(format!("invalid RK4 substep count '{n}'")),
            },
            _ => invalid(format!("unknown flow strategy '{s}'")),
        }
    }
}

/// Output of [`linear_flow`].
#[derive(Clone, Debug)]
pub struct LinearFlow {
    pub state: ComplexField,
    /// Set when `Re(c alpha tau) < 0`, i.e. the stage runs the heat flow backwards.
    pub backward_diffusion: bool,
}

/// Multiplies the spectral coefficients by `exp(c alpha tau lambda_m)`.
pub fn linear_flow(v: &ComplexField, ctx: &OperatorContext, alpha: Complex64, tau: f64) -> Result<LinearFlow> {
    check_grid(v, ctx)?;
    let c = ctx.equation().c();
    let z = c * alpha * tau;
    let backward_diffusion = z.re < 0.0;
    if z == Complex64::default() {
        return Ok(LinearFlow {
            state: v.clone(),
            backward_diffusion,
        });
    }
    let grid = v.grid();
    let eigs = grid.laplacian_eigs();
    let values = grid.apply_multiplier(v.values(), |k| (z * eigs[k]).exp());
    Ok(LinearFlow {
        state: v.with_values(values),
        backward_diffusion,
    })
}

/// `exp(-i tau f(v)) v` with `f = beta1 f1 + beta2 tau^2 f2`.
pub fn gpe_modified_flow(
    v: &ComplexField,
    ctx: &OperatorContext,
    beta1: f64,
    beta2: f64,
    tau: f64,
) -> Result<ComplexField> {
    let f = modified_phase(v, ctx, beta1, beta2, tau)?;
    Ok(v.with_values(
        v.values()
            .iter()
            .zip(f.values())
            .map(|(&z, &phi)| z * Complex64::from_polar(1.0, -tau * phi))
            .collect(),
    ))
}

/// Reference integrator for the modified Schroedinger subflow: RK4 on
/// `u' = -i f(u) u` with `f` re-evaluated at every stage.
pub fn gpe_modified_flow_rk4(
    v: &ComplexField,
    ctx: &OperatorContext,
    beta1: f64,
    beta2: f64,
    tau: f64,
    substeps: usize,
) -> Result<ComplexField> {
    let rhs = |u: &ComplexField| -> Result<ComplexField> {
        let f = modified_phase(u, ctx, beta1, beta2, tau)?;
        Ok(u.with_values(
            u.values()
                .iter()
                .zip(f.values())
                .map(|(&z, &phi)| Complex64::new(0.0, -phi) * z)
                .collect(),
        ))
    };
    rk4(v, tau, substeps, rhs)
}

fn check_grid(v: &ComplexField, ctx: &OperatorContext) -> Result<()> {
    let grid = &ctx.problem.grid;
    if std::sync::Arc::ptr_eq(v.grid(), grid) || **v.grid() == **grid {
        Ok(())
    } else {
        invalid("state lives on a different grid than the operator context")
    }
}

fn require_parabolic(ctx: &OperatorContext, what: &str) -> Result<()> {
    if ctx.equation() == EquationKind::Parabolic {
        Ok(())
    } else {
        invalid(format!("{what} is defined for the parabolic kind only"))
    }
}

const ZERO_POTENTIAL: f64 = 1e-12;
const REALNESS_TOL: f64 = 1e-10;

/// Exact pointwise flow of `u' = (V + theta u^2) u` over the effective time `beta * tau`.
///
/// Negative effective times are accepted (real splitting coefficients may be
/// negative); the flow is then the exact backward flow as long as it exists.
pub fn parabolic_f2_exact_flow(v: &ComplexField, ctx: &OperatorContext, beta: f64, tau: f64) -> Result<ComplexField> {
    require_parabolic(ctx, "the exact F2 flow")?;
    check_grid(v, ctx)?;
    let t = beta * tau;
    if t == 0.0 {
        return Ok(v.clone());
    }
    let max_imag = v.max_imag();
    if max_imag > REALNESS_TOL * v.max_abs().max(1.0) {
        return Err(Error::LostRealness { max_imag });
    }
    let theta = ctx.theta();
    let pot = ctx.potential.value.values();
    let mut out = Vec::with_capacity(pot.len());
    for (z, &vv) in v.values().iter().zip(pot) {
        let u0 = z.re;
        let u2 = u0 * u0;
        let (num, radicand) = if vv.abs() < ZERO_POTENTIAL {
            (u0, 1.0 - 2.0 * t * theta * u2)
        } else if t * vv <= 0.0 {
            (u0 * (t * vv).exp(), 1.0 - theta * u2 * (2.0 * t * vv).exp_m1() / vv)
        } else {
            (u0, (-2.0 * t * vv).exp() + theta * u2 * (-2.0 * t * vv).exp_m1() / vv)
        };
        if !(radicand > 0.0) {
            return Err(Error::BlowUp { time: t });
        }
        out.push(Complex64::from(num / radicand.sqrt()));
    }
    Ok(v.with_values(out))
}

/// One explicit Euler step `v + tau * beta2 tau^2 G2(v)`.
pub fn parabolic_g2_euler_flow(v: &ComplexField, ctx: &OperatorContext, beta2: f64, tau: f64) -> Result<ComplexField> {
    require_parabolic(ctx, "the Euler G2 flow")?;
    let w = tau * beta2 * tau * tau;
    if w == 0.0 {
        check_grid(v, ctx)?;
        return Ok(v.clone());
    }
    let g2 = apply_g2(v, ctx)?;
    v.add_scaled(Complex64::from(w), &g2)
}

/// Classical RK4 for `u' = beta1 F2(u) + beta2 tau^2 G2(u)` over time `tau`.
///
/// `beta1` may be complex (complex-coefficient splitting schemes).
pub fn rk4_combined_flow(
    v: &ComplexField,
    ctx: &OperatorContext,
    beta1: Complex64,
    beta2: f64,
    tau: f64,
    substeps: usize,
) -> Result<ComplexField> {
    check_grid(v, ctx)?;
    let w2 = Complex64::from(beta2 * tau * tau);
    let rhs = |u: &ComplexField| -> Result<ComplexField> {
        let f2 = apply_f2(u, ctx)?.scale(beta1);
        if w2 == Complex64::default() {
            Ok(f2)
        } else {
            f2.add_scaled(w2, &apply_g2(u, ctx)?)
        }
    };
    rk4(v, tau, substeps, rhs)
}

fn rk4<F>(v: &ComplexField, tau: f64, substeps: usize, rhs: F) -> Result<ComplexField>
where
    F: Fn(&ComplexField) -> Result<ComplexField>,
{
    if substeps == 0 {
        return invalid("RK4 needs at least one substep");
    }
    if tau == 0.0 {
        return Ok(v.clone());
    }
    let h = tau / substeps as f64;
    let half = Complex64::from(0.5 * h);
    let full = Complex64::from(h);
    let sixth = Complex64::from(h / 6.0);
    let mut u = v.clone();
    for substep in 0..substeps {
        let k1 = rhs(&u)?;
        let k2 = rhs(&u.add_scaled(half, &k1)?)?;
        let k3 = rhs(&u.add_scaled(half, &k2)?)?;
        let k4 = rhs(&u.add_scaled(full, &k3)?)?;
        let next: Vec<Complex64> = (0..u.values().len())
            .map(|i| {
                u.values()[i] + sixth * (k1.values()[i] + 2.0 * (k2.values()[i] + k3.values()[i]) + k4.values()[i])
            })
            .collect();
        u = u.with_values(next);
        if !u.is_finite() {
            return Err(Error::Unstable { substep });
        }
    }
    Ok(u)
}

/// `E_{tau/2, beta1 F2} o E_{tau, beta2 tau^2 G2} o E_{tau/2, beta1 F2}` with the
/// exact `F2` flow and one Euler step for the commutator part.
pub fn strang_composite_flow(
    v: &ComplexField,
    ctx: &OperatorContext,
    beta1: f64,
    beta2: f64,
    tau: f64,
) -> Result<ComplexField> {
    let u = parabolic_f2_exact_flow(v, ctx, beta1, 0.5 * tau)?;
    let u = parabolic_g2_euler_flow(&u, ctx, beta2, tau)?;
    parabolic_f2_exact_flow(&u, ctx, beta1, 0.5 * tau)
}

/// Random 4x4 matrix with entries in [-1, 1], scaled to unit spectral norm.
pub fn random_unit_matrix<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let m = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..=1.0));
    let norm = m.singular_values().max();
    m / norm
}

/// Frobenius norm of `exp(tau (B + tau^2 C)) - exp(tau B / 2) exp(tau^3 C) exp(tau B / 2)`.
pub fn modified_exponential_defect(b: &Matrix4<f64>, c: &Matrix4<f64>, tau: f64) -> f64 {
    let exact = ((b + c * (tau * tau)) * tau).exp();
    let half = (b * (0.5 * tau)).exp();
    let split = half * (c * tau.powi(3)).exp() * half;
    (exact - split).norm()
}
