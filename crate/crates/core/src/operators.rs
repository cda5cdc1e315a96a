//! Nonlinear operators of the splitting and their iterated commutators.
//!
//! With `F1(v) = c Lap v` and `F2(v) = conj(c) (V + theta |v|^2) v`,
//!
//! ```text
//! G1(v) = F2'(v) F1(v) - F1'(v) F2(v)
//! G2(v) = F2'(v) G1(v) - G1'(v) F2(v)
//! ```
//!
//! where primes denote Gateaux derivatives taken over real increments. The
//! closed forms below use spectral derivatives of the state and the analytic
//! derivatives of the potential.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{evaluate_potential, EquationKind, PotentialData, ProblemSpec};
use crate::spectral::{ComplexField, Derivatives, RealField};

/// Problem data shared by every operator evaluation.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    pub problem: ProblemSpec,
    pub potential: PotentialData,
    gradient_norm_sq: RealField,
}

impl OperatorContext {
    pub fn new(problem: ProblemSpec) -> Self {
        let potential = evaluate_potential(&problem.potential, &problem.grid);
        Self::assemble(problem, potential)
    }

    /// Context with an explicitly supplied potential (must live on the problem grid).
    pub fn with_potential(problem: ProblemSpec, potential: PotentialData) -> Result<Self> {
        let grid = &problem.grid;
        let fields = std::iter::once(&potential.value)
            .chain(&potential.gradient)
            .chain(std::iter::once(&potential.laplacian));
        for f in fields {
            if !(Arc::ptr_eq(f.grid(), grid) || **f.grid() == **grid) {
                return invalid("potential data lives on a different grid");
            }
        }
        if potential.gradient.len() != grid.dim() {
            return invalid("potential gradient has the wrong number of components");
        }
        Ok(Self::assemble(problem, potential))
    }

    fn assemble(problem: ProblemSpec, potential: PotentialData) -> Self {
        let gradient_norm_sq = potential.gradient_norm_sq();
        Self {
            problem,
            potential,
            gradient_norm_sq,
        }
    }

    pub fn equation(&self) -> EquationKind {
        self.problem.equation
    }

    pub fn theta(&self) -> f64 {
        self.problem.theta
    }

    /// `(grad V)^T grad V` at the nodes.
    pub fn gradient_norm_sq(&self) -> &RealField {
        &self.gradient_norm_sq
    }

    fn check(&self, v: &ComplexField) -> Result<()> {
        let grid = &self.problem.grid;
        if Arc::ptr_eq(v.grid(), grid) || **v.grid() == **grid {
            Ok(())
        } else {
            invalid("state lives on a different grid than the operator context")
        }
    }
}

// Bilinear dot products over gradient components.
fn dot(a: &[Vec<Complex64>], b: &[Vec<Complex64>], i: usize) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x[i] * y[i]).sum()
}

fn dot_real(a: &[&[f64]], b: &[Vec<Complex64>], i: usize) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x[i] * y[i]).sum()
}

fn abs_sq_sum(a: &[Vec<Complex64>], i: usize) -> f64 {
    a.iter().map(|x| x[i].norm_sqr()).sum()
}

pub fn apply_f1(v: &ComplexField, ctx: &OperatorContext) -> Result<ComplexField> {
    ctx.check(v)?;
    let c = ctx.equation().c();
    let lap = v.grid().laplacian_values(v.values());
    Ok(v.with_values(lap.into_iter().map(|z| c * z).collect()))
}

pub fn apply_f2(v: &ComplexField, ctx: &OperatorContext) -> Result<ComplexField> {
    ctx.check(v)?;
    let cb = ctx.equation().c_bar();
    let theta = ctx.theta();
    let pot = ctx.potential.value.values();
    Ok(v.with_values(
        v.values()
            .iter()
            .zip(pot)
            .map(|(&z, &vv)| cb * (vv + theta * z.norm_sqr()) * z)
            .collect(),
    ))
}

pub fn apply_g1(v: &ComplexField, ctx: &OperatorContext) -> Result<ComplexField> {
    ctx.check(v)?;
    let Derivatives {
        gradient: grad,
        laplacian: lap,
    } = v.grid().derivatives(v.values());
    let cb = ctx.equation().c_bar();
    let theta = ctx.theta();
    // |c|^2 = 1 for both equation kinds.
    let conj_coeff = cb * cb - 1.0;
    let dv: Vec<&[f64]> = ctx.potential.gradient.iter().map(|g| g.values()).collect();
    let lap_v = ctx.potential.laplacian.values();
    let grad_conj: Vec<Vec<Complex64>> = grad.iter().map(|g| g.iter().map(|z| z.conj()).collect()).collect();
    let out = v
        .values()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let linear = -(lap_v[i] * z + 2.0 * dot_real(&dv, &grad, i));
            let nonlinear = conj_coeff * theta * lap[i].conj() * z * z
                - 2.0 * theta * (dot(&grad, &grad, i) * z.conj() + 2.0 * dot(&grad, &grad_conj, i) * z);
            linear + nonlinear
        })
        .collect();
    Ok(v.with_values(out))
}

pub fn apply_g2(v: &ComplexField, ctx: &OperatorContext) -> Result<ComplexField> {
    ctx.check(v)?;
    let theta = ctx.theta();
    let gv2 = ctx.gradient_norm_sq.values();
    let lap_v = ctx.potential.laplacian.values();
    let pot = ctx.potential.value.values();
    let out = match ctx.equation() {
        EquationKind::Parabolic => {
            let grad = v.grid().gradient_values(v.values());
            let dv: Vec<&[f64]> = ctx.potential.gradient.iter().map(|g| g.values()).collect();
            v.values()
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let gg = dot(&grad, &grad, i);
                    let tilde = -lap_v[i] * z * z
                        + 6.0 * dot_real(&dv, &grad, i) * z
                        + 6.0 * (pot[i] + 2.0 * theta * z * z) * gg;
                    2.0 * (gv2[i] + theta * tilde) * z
                })
                .collect()
        }
        EquationKind::Schrodinger => {
            let Derivatives {
                gradient: grad,
                laplacian: lap,
            } = v.grid().derivatives(v.values());
            v.values()
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let m2 = z.norm_sqr();
                    let g21 = m2 * lap_v[i];
                    let g22 = m2 * (2.0 * (z.conj() * lap[i]).re + 3.0 * abs_sq_sum(&grad, i))
                        + (z.conj() * z.conj() * dot(&grad, &grad, i)).re;
                    Complex64::new(0.0, -2.0) * (gv2[i] - 2.0 * theta * (g21 + theta * g22)) * z
                })
                .collect()
        }
    };
    Ok(v.with_values(out))
}

/// The real functions `g1 .. g6` entering the modified nonlinear subflow.
#[derive(Clone, Debug)]
pub struct PhaseComponents {
    /// `|v|^2`
    pub g1: RealField,
    /// `Re(conj(v) Lap v)`
    pub g2: RealField,
    /// `(grad conj(v))^T grad v`
    pub g3: RealField,
    /// `Re(conj(v)^2 (grad v)^T grad v)`
    pub g4: RealField,
    /// `theta (2 g2 + 3 g3)`
    pub g5: RealField,
    /// `g1 (Lap V + g5) + theta g4`
    pub g6: RealField,
}

pub fn phase_components(v: &ComplexField, ctx: &OperatorContext) -> Result<PhaseComponents> {
    ctx.check(v)?;
    let Derivatives {
        gradient: grad,
        laplacian: lap,
    } = v.grid().derivatives(v.values());
    let theta = ctx.theta();
    let lap_v = ctx.potential.laplacian.values();
    let n = v.values().len();
    let (mut g1, mut g2, mut g3, mut g4, mut g5, mut g6) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for (i, &z) in v.values().iter().enumerate() {
        g1[i] = z.norm_sqr();
        g2[i] = (z.conj() * lap[i]).re;
        g3[i] = abs_sq_sum(&grad, i);
        g4[i] = (z.conj() * z.conj() * dot(&grad, &grad, i)).re;
        g5[i] = theta * (2.0 * g2[i] + 3.0 * g3[i]);
        g6[i] = g1[i] * (lap_v[i] + g5[i]) + theta * g4[i];
    }
    let grid = v.grid();
    let field = |values| RealField::new(Arc::clone(grid), values).expect("grid length");
    Ok(PhaseComponents {
        g1: field(g1),
        g2: field(g2),
        g3: field(g3),
        g4: field(g4),
        g5: field(g5),
        g6: field(g6),
    })
}

/// `f = beta1 f1 + beta2 tau^2 f2` with `f1 = V + theta g1` and
/// `f2 = 2 (grad V)^T grad V - 4 theta g6`. Schroedinger only.
pub fn modified_phase(v: &ComplexField, ctx: &OperatorContext, beta1: f64, beta2: f64, tau: f64) -> Result<RealField> {
    if ctx.equation() != EquationKind::Schrodinger {
        return invalid("the modified phase is defined for the Schroedinger kind only");
    }
    let theta = ctx.theta();
    let pot = ctx.potential.value.values();
    let gv2 = ctx.gradient_norm_sq.values();
    let w2 = beta2 * tau * tau;
    let values = if w2 == 0.0 {
        v.values()
            .iter()
            .zip(pot)
            .map(|(z, vv)| beta1 * (vv + theta * z.norm_sqr()))
            .collect()
    } else {
        ctx.check(v)?;
        let g = phase_components(v, ctx)?;
        (0..v.values().len())
            .map(|i| {
                let f1 = pot[i] + theta * g.g1.values()[i];
                let f2 = 2.0 * gv2[i] - 4.0 * theta * g.g6.values()[i];
                beta1 * f1 + w2 * f2
            })
            .collect()
    };
    RealField::new(Arc::clone(v.grid()), values)
}

/// Operators whose Gateaux derivatives the finite-difference oracle supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    F1,
    F2,
    G1,
}

impl OperatorKind {
    pub fn apply(self, v: &ComplexField, ctx: &OperatorContext) -> Result<ComplexField> {
        match self {
            OperatorKind::F1 => apply_f1(v, ctx),
            OperatorKind::F2 => apply_f2(v, ctx),
            OperatorKind::G1 => apply_g1(v, ctx),
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::F1 => "F1",
            OperatorKind::F2 => "F2",
            OperatorKind::G1 => "G1",
        };
        f.write_str(s)
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(OperatorKind::F1),
            "F2" => Ok(OperatorKind::F2),
            "G1" => Ok(OperatorKind::G1),
            other => invalid(format!("unknown operator '{other}'")),
        }
    }
}

pub const DEFAULT_FD_EPS: f64 = 1e-5;

/// Central difference `(H(v + eps w) - H(v - eps w)) / (2 eps)` over real `eps`.
pub fn gateaux_fd(
    operator: OperatorKind,
    v: &ComplexField,
    w: &ComplexField,
    eps: f64,
    ctx: &OperatorContext,
) -> Result<ComplexField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid(format!("finite-difference increment must be positive, got {eps}"));
    }
    let step = Complex64::from(eps);
    let plus = operator.apply(&v.add_scaled(step, w)?, ctx)?;
    let minus = operator.apply(&v.add_scaled(-step, w)?, ctx)?;
    Ok(plus.sub(&minus)?.scale(Complex64::from(0.5 / eps)))
}

/// Commutators `G1`, `G2` assembled from finite-difference Gateaux derivatives.
///
/// `G2` uses the closed-form `G1` as direction and differentiated operator, and
/// never the closed-form `G2`.
pub fn commutator_oracle(v: &ComplexField, ctx: &OperatorContext, eps: f64) -> Result<(ComplexField, ComplexField)> {
    let f1 = apply_f1(v, ctx)?;
    let f2 = apply_f2(v, ctx)?;
    let g1_closed = apply_g1(v, ctx)?;
    let g1 = gateaux_fd(OperatorKind::F2, v, &f1, eps, ctx)?.sub(&gateaux_fd(OperatorKind::F1, v, &f2, eps, ctx)?)?;
    let g2 =
        gateaux_fd(OperatorKind::F2, v, &g1_closed, eps, ctx)?.sub(&gateaux_fd(OperatorKind::G1, v, &f2, eps, ctx)?)?;
    Ok((g1, g2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gaussian_initial_state, smooth_random_state, PotentialSpec};
    use crate::spectral::{build_grid, spectral_gradient, Grid};

    fn ctx(kind: EquationKind, degree: u32, c0: f64, theta: f64, grid: Arc<Grid>) -> OperatorContext {
        let p = ProblemSpec::new(kind, PotentialSpec::new(degree, c0).unwrap(), theta, grid, 1.0).unwrap();
        OperatorContext::new(p)
    }

    fn grid1() -> Arc<Grid> {
        build_grid(1, 10.0, 256).unwrap()
    }

    fn l2(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn rel(a: &ComplexField, b: &ComplexField) -> f64 {
        l2(a.sub(b).unwrap().values()) / l2(b.values())
    }

    fn constant(grid: &Arc<Grid>, z: Complex64) -> ComplexField {
        ComplexField::from_fn(Arc::clone(grid), |_| z)
    }

    #[test]
    fn f1_on_pure_mode() {
        let g = grid1();
        let w = std::f64::consts::PI / 10.0;
        let mode = ComplexField::from_fn(g.clone(), |x| Complex64::from((w * x[0]).sin()));
        for (kind, c) in [
            (EquationKind::Schrodinger, Complex64::i()),
            (EquationKind::Parabolic, Complex64::new(1.0, 0.0)),
        ] {
            let out = apply_f1(&mode, &ctx(kind, 2, 1.0, 1.0, g.clone())).unwrap();
            let expected = mode.scale(c * (-w * w));
            assert!(out.sub(&expected).unwrap().max_abs() < 1e-12);
        }
        let one = constant(&g, Complex64::new(1.0, 0.0));
        let out = apply_f1(&one, &ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g)).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn f2_pointwise_values() {
        let g = grid1();
        let one = constant(&g, Complex64::new(1.0, 0.0));
        let par = apply_f2(&one, &ctx(EquationKind::Parabolic, 2, 1.0, 1.0, g.clone())).unwrap();
        let sch = apply_f2(&one, &ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g.clone())).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            let expected = x * x + 1.0;
            assert!((par.values()[i] - Complex64::from(expected)).norm() < 1e-12);
            assert!((sch.values()[i] - Complex64::new(0.0, -expected)).norm() < 1e-12);
        }
        // theta = 0: linear multiplication by conj(c) V
        let u = gaussian_initial_state(&g);
        let lin = apply_f2(&u, &ctx(EquationKind::Schrodinger, 4, 1.0, 0.0, g.clone())).unwrap();
        let c = ctx(EquationKind::Schrodinger, 4, 1.0, 0.0, g.clone());
        for i in 0..g.len() {
            let expected = -Complex64::i() * c.potential.value.values()[i] * u.values()[i];
            assert!((lin.values()[i] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn g1_on_constants() {
        let g = grid1();
        let one = constant(&g, Complex64::new(1.0, 0.0));
        let par = apply_g1(&one, &ctx(EquationKind::Parabolic, 2, 1.0, 1.0, g.clone())).unwrap();
        assert!(par.sub(&constant(&g, Complex64::from(-2.0))).unwrap().max_abs() < 1e-11);
        let sch = apply_g1(&one, &ctx(EquationKind::Schrodinger, 2, 1.0, 0.0, g.clone())).unwrap();
        assert!(sch.sub(&constant(&g, Complex64::from(-2.0))).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn g1_linear_case_is_kind_independent() {
        let g = grid1();
        let u = smooth_random_state(&g, 7);
        let par = apply_g1(&u, &ctx(EquationKind::Parabolic, 2, 1.0, 0.0, g.clone())).unwrap();
        let sch = apply_g1(&u, &ctx(EquationKind::Schrodinger, 2, 1.0, 0.0, g.clone())).unwrap();
        let du = spectral_gradient(&u);
        for (i, &x) in g.nodes().iter().enumerate() {
            let expected = -2.0 * u.values()[i] - 2.0 * (2.0 * x) * du[0].values()[i];
            assert!((par.values()[i] - expected).norm() < 1e-11);
            assert!((sch.values()[i] - expected).norm() < 1e-11);
        }
    }

    #[test]
    fn g2_linear_reduction() {
        let g = grid1();
        let u = gaussian_initial_state(&g);
        let sch = apply_g2(&u, &ctx(EquationKind::Schrodinger, 2, 1.0, 0.0, g.clone())).unwrap();
        let par = apply_g2(&u, &ctx(EquationKind::Parabolic, 2, 1.0, 0.0, g.clone())).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            let v = u.values()[i];
            assert!((sch.values()[i] - Complex64::new(0.0, -8.0 * x * x) * v).norm() < 1e-12);
            assert!((par.values()[i] - 8.0 * x * x * v).norm() < 1e-12);
        }
        let zero = ComplexField::zeros(g.clone());
        for kind in [EquationKind::Schrodinger, EquationKind::Parabolic] {
            assert_eq!(
                apply_g2(&zero, &ctx(kind, 4, 1.0, 1.0, g.clone())).unwrap().max_abs(),
                0.0
            );
        }
    }

    #[test]
    fn fd_of_linear_operators() {
        let g = grid1();
        let v = smooth_random_state(&g, 1);
        let w = smooth_random_state(&g, 2);
        let c = ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g.clone());
        let fd = gateaux_fd(OperatorKind::F1, &v, &w, 1e-5, &c).unwrap();
        let r = rel(&fd, &apply_f1(&w, &c).unwrap());
        assert!(r < 1e-8, "{r}");

        let c0 = ctx(EquationKind::Parabolic, 4, -1.0, 0.0, g.clone());
        let fd = gateaux_fd(OperatorKind::F2, &v, &w, 1e-5, &c0).unwrap();
        assert!(rel(&fd, &apply_f2(&w, &c0).unwrap()) < 1e-9);
    }

    #[test]
    fn fd_of_f2_matches_analytic_derivative() {
        let g = grid1();
        let v = smooth_random_state(&g, 3);
        let w = smooth_random_state(&g, 4);
        let c = ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g.clone());
        let cb = c.equation().c_bar();
        let analytic = ComplexField::from_fn(g.clone(), |_| Complex64::default());
        let analytic = analytic.with_values(
            (0..g.len())
                .map(|i| {
                    let (vi, wi, vv) = (v.values()[i], w.values()[i], c.potential.value.values()[i]);
                    cb * (vv * wi + 2.0 * vi.norm_sqr() * wi + vi * vi * wi.conj())
                })
                .collect(),
        );
        for eps in [1e-3, 1e-4] {
            let fd = gateaux_fd(OperatorKind::F2, &v, &w, eps, &c).unwrap();
            // Central differences of a cubic: error eps^2 * |w|^2 w.
            assert!(rel(&fd, &analytic) < 10.0 * eps * eps, "eps={eps}");
        }
        assert!(gateaux_fd(OperatorKind::F2, &v, &w, 0.0, &c).is_err());
    }

    #[test]
    fn oracle_reproduces_g1_and_g2() {
        let g = grid1();
        for kind in [EquationKind::Schrodinger, EquationKind::Parabolic] {
            let c0 = if kind == EquationKind::Schrodinger { 1.0 } else { -1.0 };
            let c = ctx(kind, 2, c0, 1.0, g.clone());
            let v = gaussian_initial_state(&g);
            let (g1_fd, g2_fd) = commutator_oracle(&v, &c, 1e-5).unwrap();
            assert!(rel(&g1_fd, &apply_g1(&v, &c).unwrap()) < 1e-6, "{kind} G1");
            assert!(rel(&g2_fd, &apply_g2(&v, &c).unwrap()) < 1e-4, "{kind} G2");
        }
    }

    #[test]
    fn schrodinger_oracle_on_complex_state() {
        let g = grid1();
        let c = ctx(EquationKind::Schrodinger, 4, 1.0, 1.0, g.clone());
        let v = smooth_random_state(&g, 11);
        let (_, g2_fd) = commutator_oracle(&v, &c, 1e-5).unwrap();
        assert!(rel(&g2_fd, &apply_g2(&v, &c).unwrap()) < 1e-4);
    }

    #[test]
    fn phase_reductions() {
        let g = grid1();
        let v = smooth_random_state(&g, 5);
        let c = ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g.clone());
        let f = modified_phase(&v, &c, 0.7, 0.0, 0.1).unwrap();
        for i in 0..g.len() {
            let expected = 0.7 * (c.potential.value.values()[i] + v.values()[i].norm_sqr());
            assert!((f.values()[i] - expected).abs() < 1e-13);
        }
        let c0 = ctx(EquationKind::Schrodinger, 4, 1.0, 0.0, g.clone());
        let f = modified_phase(&v, &c0, 2.0 / 3.0, -1.0 / 72.0, 0.1).unwrap();
        for i in 0..g.len() {
            let expected = 2.0 / 3.0 * c0.potential.value.values()[i]
                + 2.0 * (-1.0 / 72.0) * 0.01 * c0.gradient_norm_sq().values()[i];
            assert!((f.values()[i] - expected).abs() < 1e-12);
        }
        let par = ctx(EquationKind::Parabolic, 2, -1.0, 1.0, g);
        assert!(modified_phase(&v, &par, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn phase_matches_commutator_representation() {
        // G2 = conj(c) f2 v, so f2 = i G2 / v wherever v is not negligible.
        let g = grid1();
        let c = ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, g.clone());
        let v = gaussian_initial_state(&g);
        let comps = phase_components(&v, &c).unwrap();
        let g2 = apply_g2(&v, &c).unwrap();
        for i in 0..g.len() {
            if v.values()[i].norm() < 1e-3 {
                continue;
            }
            let f2 = (Complex64::i() * g2.values()[i] / v.values()[i]).re;
            let expected = 2.0 * c.gradient_norm_sq().values()[i] - 4.0 * comps.g6.values()[i];
            assert!((f2 - expected).abs() < 1e-9 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn phase_is_invariant_under_global_phase() {
        let g = grid1();
        let c = ctx(EquationKind::Schrodinger, 4, 1.0, 1.0, g.clone());
        let v = smooth_random_state(&g, 9);
        let rotated = v.scale(Complex64::from_polar(1.0, 0.83));
        let a = modified_phase(&v, &c, 2.0 / 3.0, -1.0 / 72.0, 0.1).unwrap();
        let b = modified_phase(&rotated, &c, 2.0 / 3.0, -1.0 / 72.0, 0.1).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let c = ctx(EquationKind::Schrodinger, 2, 1.0, 1.0, grid1());
        let other = gaussian_initial_state(&build_grid(1, 10.0, 128).unwrap());
        assert!(apply_f1(&other, &c).is_err());
        assert!(apply_g2(&other, &c).is_err());
    }
}
