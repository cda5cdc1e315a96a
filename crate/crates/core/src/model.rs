//! Problem definitions: equation kind, polynomial trap potentials, the Gaussian
//! initial state and the exact solution of the linear harmonic case.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::spectral::{ComplexField, Grid, RealField};

/// `c du/dt`-type of the evolution: `F1 = c Lap`, `F2 = conj(c) (V + theta |v|^2) v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquationKind {
    /// Time-dependent Gross-Pitaevskii equation, `c = i`.
    Schrodinger,
    /// Real-valued parabolic analogue (imaginary-time propagation), `c = 1`.
    Parabolic,
}

impl EquationKind {
    pub fn c(self) -> Complex64 {
        match self {
            EquationKind::Schrodinger => Complex64::i(),
            EquationKind::Parabolic => Complex64::new(1.0, 0.0),
        }
    }

    pub fn c_bar(self) -> Complex64 {
        self.c().conj()
    }

    /// Trap prefactor for which the Gaussian is an eigenfunction of the linear problem.
    pub fn matched_prefactor(self) -> f64 {
        match self {
            EquationKind::Schrodinger => 1.0,
            EquationKind::Parabolic => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EquationKind::Schrodinger => "schrodinger",
            EquationKind::Parabolic => "parabolic",
        }
    }
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "schrodinger" | "gpe" => Ok(EquationKind::Schrodinger),
            "parabolic" => Ok(EquationKind::Parabolic),
            other => invalid(format!("unknown equation kind '{other}'")),
        }
    }
}

/// `V(x) = C0 * C_q * sum_j x_j^q` with `C_2 = 1`, `C_4 = 1/24`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    degree: u32,
    prefactor: f64,
}

impl PotentialSpec {
    pub fn new(degree: u32, prefactor: f64) -> Result<Self> {
        if degree != 2 && degree != 4 {
            return invalid(format!("potential degree must be 2 or 4, got {degree}"));
        }
        if !prefactor.is_finite() {
            return invalid("potential prefactor must be finite");
        }
        Ok(Self { degree, prefactor })
    }

    pub fn harmonic(prefactor: f64) -> Self {
        Self { degree: 2, prefactor }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn scale(&self) -> f64 {
        match self.degree {
            2 => 1.0,
            _ => 1.0 / 24.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub equation: EquationKind,
    pub potential: PotentialSpec,
    pub theta: f64,
    pub grid: Arc<Grid>,
    pub final_time: f64,
}

impl ProblemSpec {
    pub fn new(
        equation: EquationKind,
        potential: PotentialSpec,
        theta: f64,
        grid: Arc<Grid>,
        final_time: f64,
    ) -> Result<Self> {
        if !(final_time > 0.0) || !final_time.is_finite() {
            return invalid(format!("final time must be positive, got {final_time}"));
        }
        if !theta.is_finite() {
            return invalid("coupling constant must be finite");
        }
        Ok(Self {
            equation,
            potential,
            theta,
            grid,
            final_time,
        })
    }

    /// Whether the closed-form Gaussian solution applies.
    pub fn has_exact_solution(&self) -> bool {
        self.potential.degree() == 2
            && self.theta == 0.0
            && self.potential.prefactor() == self.equation.matched_prefactor()
    }
}

/// Potential with its analytic gradient and Laplacian at the grid nodes.
#[derive(Clone, Debug)]
pub struct PotentialData {
    pub value: RealField,
    pub gradient: Vec<RealField>,
    pub laplacian: RealField,
}

impl PotentialData {
    /// Squared Euclidean norm of the gradient, `(grad V)^T grad V`.
    pub fn gradient_norm_sq(&self) -> RealField {
        let mut acc = vec![0.0; self.value.values().len()];
        for component in &self.gradient {
            for (a, g) in acc.iter_mut().zip(component.values()) {
                *a += g * g;
            }
        }
        RealField::new(Arc::clone(self.value.grid()), acc).expect("same grid")
    }

    /// Spatially constant potential `V = v0`; all operators then commute.
    pub fn constant(grid: Arc<Grid>, v0: f64) -> Self {
        let zero = RealField::constant(Arc::clone(&grid), 0.0);
        Self {
            value: RealField::constant(Arc::clone(&grid), v0),
            gradient: vec![zero.clone(); grid.dim()],
            laplacian: zero,
        }
    }
}

pub fn evaluate_potential(spec: &PotentialSpec, grid: &Arc<Grid>) -> PotentialData {
    let q = spec.degree() as i32;
    let k = spec.prefactor() * spec.scale();
    let value = RealField::from_fn(Arc::clone(grid), |x| k * x.iter().map(|xi| xi.powi(q)).sum::<f64>());
    let gradient = (0..grid.dim())
        .map(|axis| RealField::from_fn(Arc::clone(grid), |x| q as f64 * k * x[axis].powi(q - 1)))
        .collect();
    let laplacian = RealField::from_fn(Arc::clone(grid), |x| {
        (q * (q - 1)) as f64 * k * x.iter().map(|xi| xi.powi(q - 2)).sum::<f64>()
    });
    PotentialData {
        value,
        gradient,
        laplacian,
    }
}

/// `u0(x) = exp(-|x|^2 / 2)`.
pub fn gaussian_initial_state(grid: &Arc<Grid>) -> ComplexField {
    ComplexField::from_fn(Arc::clone(grid), |x| {
        Complex64::from((-0.5 * x.iter().map(|xi| xi * xi).sum::<f64>()).exp())
    })
}

/// Exact solution of the linear harmonic problem started from the Gaussian.
///
/// The Gaussian satisfies `-Lap u0 + |x|^2 u0 = d u0`, so the Schroedinger
/// solution is `exp(-i d t) u0` and the parabolic solution (with `C0 = -1`)
/// decays as `exp(-d t) u0`.
pub fn exact_linear_solution(problem: &ProblemSpec, t: f64) -> Result<ComplexField> {
    if problem.potential.degree() != 2 {
        return invalid("exact solution requires the quadratic potential");
    }
    if problem.theta != 0.0 {
        return invalid("exact solution requires theta = 0");
    }
    let c0 = problem.equation.matched_prefactor();
    if problem.potential.prefactor() != c0 {
        return invalid(format!(
            "exact solution of the {} equation requires C0 = {c0}",
            problem.equation
        ));
    }
    let d = problem.grid.dim() as f64;
    let factor = match problem.equation {
        EquationKind::Schrodinger => Complex64::from_polar(1.0, -d * t),
        EquationKind::Parabolic => Complex64::from((-d * t).exp()),
    };
    Ok(gaussian_initial_state(&problem.grid).scale(factor))
}

/// Localised smooth random state: Gaussian envelope times a random
/// trigonometric polynomial on `|m| <= M1/8` with decaying amplitudes.
///
/// The envelope keeps the state negligible near the box boundary, where the
/// polynomial potentials are not periodic.
pub fn smooth_random_state(grid: &Arc<Grid>, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (grid.points_per_dim() / 8) as i64;
    let a = grid.half_width();
    let dim = grid.dim();
    // Modes per axis with decaying amplitude; keeps the product band-limited.
    let modes: Vec<(Vec<i64>, Complex64)> = (0..6)
        .map(|_| {
            let m: Vec<i64> = (0..dim).map(|_| rng.gen_range(-band..=band)).collect();
            let norm2: f64 = m.iter().map(|&mi| (mi * mi) as f64).sum();
            let amp = 0.5 * (-norm2 / (band * band) as f64 * 4.0).exp();
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
            (m, z)
        })
        .collect();
    let width = 0.8 + rng.gen_range(0.0..0.4);
    ComplexField::from_fn(Arc::clone(grid), |x| {
        let r2: f64 = x.iter().map(|xi| xi * xi).sum();
        let envelope = (-r2 / (2.0 * width * width)).exp();
        let modulation: Complex64 = modes
            .iter()
            .map(|(m, z)| {
                let phase: f64 = m
                    .iter()
                    .zip(x)
                    .map(|(&mi, xi)| std::f64::consts::PI * mi as f64 * xi / a)
                    .sum();
                z * Complex64::from_polar(1.0, phase)
            })
            .sum();
        envelope * (Complex64::new(1.0, 0.0) + modulation)
    })
}
