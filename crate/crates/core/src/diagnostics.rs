//! Error norms, the energy functional, convergence-order fits and the scalar
//! order-reduction probe for complex splitting coefficients.

use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::flows::FlowStrategy;
use crate::integrators::{yoshida_complex_b2, SchemeName};
use crate::model::EquationKind;
use crate::operators::OperatorContext;
use crate::spectral::ComplexField;

/// `sqrt(sum |u_i|^2 dx^d)`.
pub fn discrete_l2(u: &ComplexField) -> f64 {
    let sum: f64 = u.values().iter().map(|z| z.norm_sqr()).sum();
    (sum * u.grid().cell_volume()).sqrt()
}

pub fn discrete_l2_error(u: &ComplexField, v: &ComplexField) -> Result<f64> {
    Ok(discrete_l2(&u.sub(v)?))
}

/// `E(psi) = Re int (-Lap psi + V psi + theta |psi|^2 psi) conj(psi) dx` by the
/// periodic trapezoidal rule.
pub fn energy(psi: &ComplexField, ctx: &OperatorContext) -> Result<f64> {
    quadratic_plus_quartic(psi, ctx, 1.0)
}

/// Conserved Hamiltonian of the Schroedinger flow; the quartic term carries
/// half the weight it has in [`energy`].
pub fn hamiltonian(psi: &ComplexField, ctx: &OperatorContext) -> Result<f64> {
    quadratic_plus_quartic(psi, ctx, 0.5)
}

fn quadratic_plus_quartic(psi: &ComplexField, ctx: &OperatorContext, weight: f64) -> Result<f64> {
    if ctx.equation() != EquationKind::Schrodinger {
        return invalid("the energy functional is defined for the Schroedinger kind");
    }
    psi.ensure_same_grid(&ComplexField::zeros(ctx.problem.grid.clone()))?;
    let lap = psi.grid().laplacian_values(psi.values());
    let theta = weight * ctx.theta();
    let sum: f64 = psi
        .values()
        .iter()
        .zip(&lap)
        .zip(ctx.potential.value.values())
        .map(|((&z, &l), &v)| ((-l + v * z + theta * z.norm_sqr() * z) * z.conj()).re)
        .sum();
    Ok(sum * psi.grid().cell_volume())
}

/// Points with an error below this multiple of the reference floor are
/// excluded from order fits.
pub const FLOOR_FACTOR: f64 = 50.0;

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points, got {}",
            xs.len().min(ys.len())
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return invalid("degenerate abscissae in slope fit");
    }
    Ok(sxy / sxx)
}

/// Slope of `ln(error)` against `ln(tau)` over the points whose error is
/// finite, positive and at least [`FLOOR_FACTOR`] times `floor`.
pub fn observed_order(taus: &[f64], errors: &[f64], floor: f64) -> Result<f64> {
    if taus.len() != errors.len() {
        return invalid("tau and error sequences differ in length");
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(errors)
        .filter(|(t, e)| **t > 0.0 && e.is_finite() && **e > 0.0 && **e >= FLOOR_FACTOR * floor)
        .map(|(t, e)| (*t, *e))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable points above the error floor, need 3",
            xs.len()
        )));
    }
    fit_loglog_slope(&xs, &ys)
}

/// Exact flow of `u' = b |u|^2 u` over time `tau`.
pub fn scalar_cubic_flow(u0: Complex64, b: Complex64, tau: f64) -> Result<Complex64> {
    let m0 = u0.norm_sqr();
    let denom = 1.0 - 2.0 * b.re * tau * m0;
    if !(denom > 0.0) {
        return Err(Error::BlowUp { time: tau });
    }
    let phase = if b.re == 0.0 {
        b.im * tau * m0
    } else {
        b.im / (2.0 * b.re) * (1.0 / denom).ln()
    };
    Ok(u0 / denom.sqrt() * Complex64::from_polar(1.0, phase))
}

/// Flow of the holomorphic field `u' = b u^3`, `u0 / sqrt(1 - 2 b tau u0^2)` (principal root).
pub fn holomorphic_cubic_flow(u0: Complex64, b: Complex64, tau: f64) -> Result<Complex64> {
    let radicand = 1.0 - 2.0 * b * tau * u0 * u0;
    if radicand.norm() == 0.0 || !radicand.is_finite() {
        return Err(Error::BlowUp { time: tau });
    }
    Ok(u0 / radicand.sqrt())
}

/// Which scalar field the probe composes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeField {
    /// `u' = b |u|^2 u`, the non-holomorphic nonlinearity of the parabolic problem.
    Modulus,
    /// `u' = b u^3`.
    Holomorphic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub taus: Vec<f64>,
    pub local_errors: Vec<f64>,
    pub global_errors: Vec<f64>,
    pub local_slope: f64,
    pub global_slope: f64,
}

pub const PROBE_TAUS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];
pub const PROBE_U0: f64 = 0.5;
pub const PROBE_FINAL_TIME: f64 = 0.5;

/// Complex fourth-order nonlinear stage coefficients `b1, b2, b2, b1` composed
/// on the scalar cubic flow and compared with the exact flow of `u' = |u|^2 u`.
pub fn order_reduction_probe(u0: f64, taus: &[f64], final_time: f64) -> Result<ProbeReport> {
    let b1 = Complex64::new(0.5, 0.0) - yoshida_complex_b2();
    probe_with(b1, ProbeField::Modulus, u0, taus, final_time)
}

/// Probe with an arbitrary first coefficient `b1` (and `b2 = 1/2 - b1`).
pub fn probe_with(b1: Complex64, field: ProbeField, u0: f64, taus: &[f64], final_time: f64) -> Result<ProbeReport> {
    if taus.len() < 2 {
        return Err(Error::InsufficientData("the probe needs at least 2 step sizes".into()));
    }
    if !(final_time > 0.0) {
        return invalid("probe final time must be positive");
    }
    let b2 = Complex64::new(0.5, 0.0) - b1;
    let coeffs = [b1, b2, b2, b1];
    let flow = |u: Complex64, b: Complex64, t: f64| match field {
        ProbeField::Modulus => scalar_cubic_flow(u, b, t),
        ProbeField::Holomorphic => holomorphic_cubic_flow(u, b, t),
    };
    let step = |u: Complex64, tau: f64| -> Result<Complex64> { coeffs.iter().try_fold(u, |acc, &b| flow(acc, b, tau)) };
    let one = Complex64::new(1.0, 0.0);
    let start = Complex64::from(u0);
    let mut local_errors = Vec::with_capacity(taus.len());
    let mut global_errors = Vec::with_capacity(taus.len());
    let target = flow(start, one, final_time)?;
    for &tau in taus {
        if !(tau > 0.0) {
            return invalid(format!("probe step size must be positive, got {tau}"));
        }
        local_errors.push((step(start, tau)? - flow(start, one, tau)?).norm());
        let steps = (final_time / tau).round().max(1.0) as usize;
        let h = final_time / steps as f64;
        let mut u = start;
        for _ in 0..steps {
            u = step(u, h)?;
        }
        global_errors.push((u - target).norm());
    }
    let slope = |errs: &[f64]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = taus
            .iter()
            .zip(errs)
            .filter(|(_, e)| **e > 0.0)
            .map(|(t, e)| (*t, *e))
            .unzip();
        fit_loglog_slope(&xs, &ys).unwrap_or(f64::NAN)
    };
    Ok(ProbeReport {
        taus: taus.to_vec(),
        local_slope: slope(&local_errors),
        global_slope: slope(&global_errors),
        local_errors,
        global_errors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    Unstable,
}

impl fmt::Display for PointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub tau: f64,
    pub steps: usize,
    /// `None` when the run aborted.
    pub global_error: Option<f64>,
    pub runtime_seconds: f64,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSeries {
    pub method: SchemeName,
    pub strategy: FlowStrategy,
    pub points: Vec<ConvergencePoint>,
    pub fitted_order: Option<f64>,
}

impl MethodSeries {
    pub fn fit(&mut self, floor: f64) {
        let (taus, errors): (Vec<f64>, Vec<f64>) = self
            .points
            .iter()
            .filter_map(|p| p.global_error.map(|e| (p.tau, e)))
            .unzip();
        self.fitted_order = observed_order(&taus, &errors, floor).ok();
    }

    pub fn unstable_count(&self) -> usize {
        self.points.iter().filter(|p| p.status == PointStatus::Unstable).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseDescriptor {
    pub equation: EquationKind,
    pub degree: u32,
    pub c0: f64,
    pub theta: f64,
    pub dim: usize,
    pub points_per_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: CaseDescriptor,
    /// Estimated accuracy of the reference solution.
    pub reference_floor: f64,
    pub reference: String,
    pub methods: Vec<MethodSeries>,
}

impl ConvergenceReport {
    pub fn series(&self, method: SchemeName) -> Option<&MethodSeries> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn slope(&self, method: SchemeName) -> Option<f64> {
        self.series(method).and_then(|m| m.fitted_order)
    }
}

/// Energies at sampled steps, with deviations from the minimal value.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergySeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub deviations: Vec<f64>,
}

impl EnergySeries {
    pub fn new(steps: Vec<usize>, times: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if steps.len() != times.len() || steps.len() != energies.len() || steps.is_empty() {
            return invalid("energy series columns must be nonempty and of equal length");
        }
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let deviations = energies.iter().map(|e| e - min).collect();
        Ok(Self {
            steps,
            times,
            energies,
            deviations,
        })
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }

    /// `|E(t_N) - E(t_0)|`.
    pub fn end_drift(&self) -> f64 {
        (self.energies[self.energies.len() - 1] - self.energies[0]).abs()
    }

    /// `max |E(t_n) - E(t_0)|` over samples in the first tenth of the run.
    pub fn early_excursion(&self) -> f64 {
        let last = *self.steps.last().expect("nonempty");
        let e0 = self.energies[0];
        self.steps
            .iter()
            .zip(&self.energies)
            .filter(|(s, _)| **s * 10 <= last)
            .map(|(_, e)| (e - e0).abs())
            .fold(0.0, f64::max)
    }

    /// No drift: the end-point change stays within ten early excursions.
    pub fn is_drift_free(&self) -> bool {
        self.end_drift() <= 10.0 * self.early_excursion()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gaussian_initial_state, PotentialSpec, ProblemSpec};
    use crate::spectral::build_grid;
    use proptest::prelude::*;

    #[test]
    fn l2_of_gaussian() {
        let g = build_grid(1, 10.0, 512).unwrap();
        let u = gaussian_initial_state(&g);
        assert!((discrete_l2(&u) - std::f64::consts::PI.powf(0.25)).abs() < 1e-10);
        assert_eq!(discrete_l2(&ComplexField::zeros(g.clone())), 0.0);
        let two = u.scale(Complex64::from(2.0));
        assert!((discrete_l2(&two) - 2.0 * discrete_l2(&u)).abs() < 1e-14);
        assert_eq!(discrete_l2_error(&u, &u).unwrap(), 0.0);
        let other = gaussian_initial_state(&build_grid(1, 10.0, 256).unwrap());
        assert!(discrete_l2_error(&u, &other).is_err());
    }

    #[test]
    fn energy_of_ground_state() {
        let g = build_grid(1, 10.0, 512).unwrap();
        let u = gaussian_initial_state(&g);
        let ctx = |theta| {
            OperatorContext::new(
                ProblemSpec::new(
                    EquationKind::Schrodinger,
                    PotentialSpec::harmonic(1.0),
                    theta,
                    g.clone(),
                    1.0,
                )
                .unwrap(),
            )
        };
        let e0 = energy(&u, &ctx(0.0)).unwrap();
        assert!((e0 - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        assert!(energy(&u, &ctx(1.0)).unwrap() > e0);
        assert_eq!(energy(&ComplexField::zeros(g.clone()), &ctx(1.0)).unwrap(), 0.0);
        let par = OperatorContext::new(
            ProblemSpec::new(
                EquationKind::Parabolic,
                PotentialSpec::harmonic(-1.0),
                0.0,
                g.clone(),
                1.0,
            )
            .unwrap(),
        );
        assert!(energy(&u, &par).is_err());
    }

    fn geometric(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| 0.1 * 10f64.powf(-2.0 * k as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn order_of_power_laws() {
        let t = geometric(16);
        let e2: Vec<f64> = t.iter().map(|x| x * x).collect();
        assert!((observed_order(&t, &e2, 0.0).unwrap() - 2.0).abs() < 1e-12);
        let e4: Vec<f64> = t.iter().map(|x| 3.0 * x.powi(4)).collect();
        assert!((observed_order(&t, &e4, 0.0).unwrap() - 4.0).abs() < 1e-12);
        let sat: Vec<f64> = t.iter().map(|x| x.powi(4) + 1e-12).collect();
        assert!((observed_order(&t, &sat, 1e-12).unwrap() - 4.0).abs() < 0.05);
        assert!(matches!(
            observed_order(&t[..2], &e2[..2], 0.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(observed_order(&t, &e2, 1.0).is_err());
    }

    #[test]
    fn scalar_flow_examples() {
        let one = Complex64::new(1.0, 0.0);
        let u = scalar_cubic_flow(one, one, 0.1).unwrap();
        assert!((u.re - 1.0 / 0.8f64.sqrt()).abs() < 1e-15 && u.im == 0.0);
        let u = scalar_cubic_flow(one, -Complex64::i(), 0.3).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-15);
        assert!((u.arg() + 0.3).abs() < 1e-15);
        assert!(matches!(scalar_cubic_flow(one, one, 0.5), Err(Error::BlowUp { .. })));
        // Taylor coefficients of u0 / sqrt(1 - 2 tau u0^2)
        let tau: f64 = 1e-3;
        let taylor = 1.0 + tau + 1.5 * tau * tau + 2.5 * tau.powi(3) + 4.375 * tau.powi(4);
        assert!((scalar_cubic_flow(one, one, tau).unwrap().re - taylor).abs() < 1e-15 + 8.0 * tau.powi(5));
    }

    proptest! {
        #[test]
        fn real_branches_coincide(u0 in -0.9f64..0.9, b in -2.0f64..2.0, tau in 0.0f64..0.2) {
            let u = scalar_cubic_flow(Complex64::from(u0), Complex64::from(b), tau).unwrap();
            let expected = u0 / (1.0 - 2.0 * b * tau * u0 * u0).sqrt();
            prop_assert!((u.re - expected).abs() < 1e-14);
            prop_assert!(u.im.abs() < 1e-15);
        }

        #[test]
        fn modulus_follows_the_real_part(u0 in 0.1f64..0.9, br in -1.0f64..1.0, bi in -1.0f64..1.0, tau in 0.0f64..0.2) {
            let b = Complex64::new(br, bi);
            let u = scalar_cubic_flow(Complex64::from(u0), b, tau).unwrap();
            let expected = u0 * u0 / (1.0 - 2.0 * br * tau * u0 * u0);
            prop_assert!((u.norm_sqr() - expected).abs() < 1e-14);
        }

        #[test]
        fn flows_compose(u0 in 0.1f64..0.9, br in -1.0f64..1.0, bi in -1.0f64..1.0, s in 0.0f64..0.1, t in 0.0f64..0.1) {
            let b = Complex64::new(br, bi);
            let z = Complex64::from(u0);
            let two = scalar_cubic_flow(scalar_cubic_flow(z, b, s).unwrap(), b, t).unwrap();
            let one = scalar_cubic_flow(z, b, s + t).unwrap();
            prop_assert!((two - one).norm() < 1e-14);
        }
    }

    #[test]
    fn probe_shows_order_reduction() {
        let r = order_reduction_probe(PROBE_U0, &PROBE_TAUS, PROBE_FINAL_TIME).unwrap();
        assert!((r.local_slope - 3.0).abs() < 0.2, "{}", r.local_slope);
        assert!((r.global_slope - 2.0).abs() < 0.2, "{}", r.global_slope);
    }

    #[test]
    fn holomorphic_probe_is_exact() {
        let b1 = Complex64::new(0.5, 0.0) - yoshida_complex_b2();
        let r = probe_with(b1, ProbeField::Holomorphic, PROBE_U0, &PROBE_TAUS, PROBE_FINAL_TIME).unwrap();
        assert!(r.local_errors.iter().all(|&e| e < 1e-14), "{:?}", r.local_errors);
        assert!(r.global_errors.iter().all(|&e| e < 1e-12), "{:?}", r.global_errors);
    }

    #[test]
    fn vanishing_third_order_coefficient_leaves_only_roundoff() {
        let b1 = Complex64::new(0.5, 0.0) - yoshida_complex_b2();
        for b in [Complex64::new(1.0, 0.3), Complex64::from(b1.norm())] {
            let r = probe_with(b, ProbeField::Modulus, PROBE_U0, &PROBE_TAUS, PROBE_FINAL_TIME).unwrap();
            for e in r.local_errors.iter().chain(&r.global_errors) {
                assert!(*e < 1e-14, "{b} {:?} {:?}", r.local_errors, r.global_errors);
            }
        }
    }

    #[test]
    fn third_order_term_scales_with_im_b1_times_one_minus_re_b1() {
        let tau = [2.5e-3, 1.25e-3];
        let ratios: Vec<f64> = [(0.3, 0.1), (0.3, 0.2), (0.6, 0.1), (0.5, -0.25)]
            .iter()
            .map(|&(p, y)| {
                let r = probe_with(
                    Complex64::new(p, y),
                    ProbeField::Modulus,
                    PROBE_U0,
                    &tau,
                    PROBE_FINAL_TIME,
                )
                .unwrap();
                r.local_errors[1] / ((y * (1.0 - p)).abs() * tau[1].powi(3))
            })
            .collect();
        for q in &ratios {
            assert!((q / ratios[0] - 1.0).abs() < 0.05, "{ratios:?}");
        }
    }

    #[test]
    fn energy_series_bookkeeping() {
        let s = EnergySeries::new(vec![0, 10, 20], vec![0.0, 0.1, 0.2], vec![2.0, 1.5, 1.75]).unwrap();
        assert_eq!(s.deviations, vec![0.5, 0.0, 0.25]);
        assert_eq!(s.max_deviation(), 0.5);
        assert_eq!(s.end_drift(), 0.25);
        assert!(EnergySeries::new(vec![], vec![], vec![]).is_err());
    }
}
