//! Fixed-step RK4 integration of `i ∂t η = η H(t)`, of `i ∂t ψ = H(t) ψ`, and
//! of the unitary variant `i ∂t Ũ = Ũ H̃(t)` for Hermitian `H̃`.
//!
//! The time-ordered exponential is realized by stepping only. Each interval
//! of the sampling grid is split into `substeps` RK4 steps so that
//! `‖H‖·h` stays below the configured step norm.

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, kept_levels, relative, Factorized, FockOperator, StateVector};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

/// Uniform samples `t_k = t0 + k (t1 − t0)/steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::InvalidGrid("non-finite end point".into()));
        }
        if !(t1 > t0) {
            return Err(Error::InvalidGrid(format!("t1={t1} must exceed t0={t0}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be at least 1".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of sample points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Same interval with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            steps: self.steps * factor.max(1),
            ..*self
        }
    }
}

/// A time-dependent generator `t ↦ H(t)` of fixed dimension.
pub trait Generator: Sync {
    fn dim(&self) -> usize;

    /// Must be a pure function of `t`.
    fn at(&self, t: f64) -> FockOperator;

    /// Claimed Hermiticity; used for diagnostics only.
    fn hermitian_claim(&self) -> bool {
        false
    }
}

/// A [`Generator`] backed by a closure.
pub struct FnGenerator<F> {
    dim: usize,
    hermitian: bool,
    f: F,
}

impl<F: Fn(f64) -> FockOperator + Sync> FnGenerator<F> {
    pub fn new(dim: usize, hermitian: bool, f: F) -> Self {
        Self { dim, hermitian, f }
    }
}

impl<F: Fn(f64) -> FockOperator + Sync> Generator for FnGenerator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn at(&self, t: f64) -> FockOperator {
        (self.f)(t)
    }
    fn hermitian_claim(&self) -> bool {
        self.hermitian
    }
}

/// A time-independent generator.
#[derive(Debug, Clone)]
pub struct ConstantGenerator {
    op: FockOperator,
    hermitian: bool,
}

impl ConstantGenerator {
    pub fn new(op: FockOperator, hermitian: bool) -> Self {
        Self { op, hermitian }
    }
}

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn at(&self, _t: f64) -> FockOperator {
        self.op.clone()
    }
    fn hermitian_claim(&self) -> bool {
        self.hermitian
    }
}

/// RK4 substeps per grid interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substeps {
    /// Smallest count meeting `step_norm_target`.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub substeps: Substeps,
    /// `‖H‖·h` aimed for by [`Substeps::Auto`].
    pub step_norm_target: f64,
    /// `‖H‖·h` above which integration is refused.
    pub step_norm_limit: f64,
    /// Levels excluded from identity checks.
    pub guard: usize,
    /// Tail mass above which a warning is logged.
    pub tail_warn: f64,
    /// Columns `η|m⟩`, `m < probe_levels`, whose tail mass is tracked.
    pub probe_levels: usize,
    /// Measure the RK4 order on the endpoint (costs ~1.75 extra integrations).
    pub measure_order: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            substeps: Substeps::Auto,
            step_norm_target: 0.02,
            step_norm_limit: 0.1,
            guard: fock::DEFAULT_GUARD,
            tail_warn: 1e-8,
            probe_levels: 3,
            measure_order: false,
        }
    }
}

/// Endpoint differences under step doubling, `order = log2(d_coarse / d_fine)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub base_steps: usize,
    pub coarse_difference: f64,
    pub fine_difference: f64,
    pub ratio: f64,
    pub order: f64,
}

/// Samples of `η(t_k)` with their reciprocal condition numbers.
#[derive(Debug, Clone)]
pub struct DysonTrajectory {
    pub grid: TimeGrid,
    pub eta: Vec<FockOperator>,
    pub eta0: FockOperator,
    pub rho0: FockOperator,
    pub rcond: Vec<f64>,
    pub substeps: usize,
    pub options: SolverOptions,
    pub max_tail_mass: f64,
    pub convergence: Option<ConvergenceReport>,
}

impl DysonTrajectory {
    /// Builds a trajectory from externally computed samples (e.g. closed forms).
    pub fn from_samples(grid: TimeGrid, eta: Vec<FockOperator>, options: SolverOptions) -> Result<Self> {
        if eta.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                eta.len(),
                grid.len()
            )));
        }
        let eta0 = eta[0].clone();
        let rho0 = &eta0.adjoint() * &eta0;
        let rcond = eta.iter().map(reciprocal_condition).collect();
        let max_tail_mass = probe_tail(&eta, &options)?;
        Ok(Self {
            grid,
            eta,
            eta0,
            rho0,
            rcond,
            substeps: 1,
            options,
            max_tail_mass,
            convergence: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.eta0.dim()
    }

    /// Size of the block below the guard band.
    pub fn kept(&self) -> usize {
        self.dim().saturating_sub(self.options.guard).max(1)
    }

    pub fn min_rcond(&self) -> f64 {
        self.rcond.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `1/(‖M‖₁ ‖M⁻¹‖₁)`, zero when singular.
pub fn reciprocal_condition(m: &FockOperator) -> f64 {
    let dim = m.dim();
    match m.matrix().clone().lu().solve(&DMatrix::identity(dim, dim)) {
        Some(inv) => {
            let r = 1.0 / (m.norm_1() * fock::norm_1(&inv));
            if r.is_finite() {
                r
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

fn probe_tail(eta: &[FockOperator], options: &SolverOptions) -> Result<f64> {
    let Some(first) = eta.first() else {
        return Ok(0.0);
    };
    let dim = first.dim();
    kept_levels(dim, options.guard)?;
    let probes = options.probe_levels.min(dim - options.guard);
    let mut max_tail: f64 = 0.0;
    for e in eta {
        for m in 0..probes {
            let col = StateVector::from_vector(e.matrix().column(m).into_owned());
            if let Ok(t) = fock::tail_mass(&col, options.guard) {
                max_tail = max_tail.max(t);
            }
        }
    }
    if max_tail > options.tail_warn {
        warn!("truncation tail mass {max_tail:e} exceeds {:e}", options.tail_warn);
    }
    Ok(max_tail)
}

/// Nonzero entries of a generator, for products with banded `H`.
struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    fn new(h: &FockOperator, factor: C64) -> Self {
        let m = h.matrix();
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if z.re != 0.0 || z.im != 0.0 {
                    entries.push((r, c, z * factor));
                }
            }
        }
        Self { entries }
    }

    /// `x · S`
    fn right_mul(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for &(r, c, z) in &self.entries {
            let src = x.column(r);
            let mut dst = out.column_mut(c);
            dst.axpy(z, &src, C64::new(1.0, 0.0));
        }
        out
    }

    /// `S · v`
    fn left_mul(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(v.len());
        for &(r, c, z) in &self.entries {
            out[r] += z * v[c];
        }
        out
    }
}

/// One RK4 step of `∂t η = −i η H(t)`.
fn rk4_right(eta: &DMatrix<C64>, t: f64, h: f64, gen: &dyn Generator) -> DMatrix<C64> {
    let g0 = Sparse::new(&gen.at(t), MINUS_I);
    let gm = Sparse::new(&gen.at(t + 0.5 * h), MINUS_I);
    let g1 = Sparse::new(&gen.at(t + h), MINUS_I);
    let hc = C64::new(h, 0.0);
    let half = C64::new(0.5 * h, 0.0);
    let k1 = g0.right_mul(eta);
    let k2 = gm.right_mul(&(eta + &k1 * half));
    let k3 = gm.right_mul(&(eta + &k2 * half));
    let k4 = g1.right_mul(&(eta + &k3 * hc));
    eta + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

/// One RK4 step of `∂t ψ = −i H(t) ψ`.
fn rk4_left(psi: &DVector<C64>, t: f64, h: f64, gen: &dyn Generator) -> DVector<C64> {
    let g0 = Sparse::new(&gen.at(t), MINUS_I);
    let gm = Sparse::new(&gen.at(t + 0.5 * h), MINUS_I);
    let g1 = Sparse::new(&gen.at(t + h), MINUS_I);
    let hc = C64::new(h, 0.0);
    let half = C64::new(0.5 * h, 0.0);
    let k1 = g0.left_mul(psi);
    let k2 = gm.left_mul(&(psi + &k1 * half));
    let k3 = gm.left_mul(&(psi + &k2 * half));
    let k4 = g1.left_mul(&(psi + &k3 * hc));
    psi + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

/// Picks the substep count, or refuses when a fixed count violates the limit.
pub fn plan_substeps(gen: &dyn Generator, grid: &TimeGrid, options: &SolverOptions) -> Result<usize> {
    let (mut max_norm, mut t_max) = (0.0f64, grid.t0());
    for t in grid.points() {
        let n = gen.at(t).spectral_bound();
        if !n.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        if n > max_norm {
            max_norm = n;
            t_max = t;
        }
    }
    let dt = grid.dt();
    let recommended = |limit: f64| ((max_norm * (grid.t1() - grid.t0())) / limit).ceil().max(1.0) as usize;
    match options.substeps {
        Substeps::Auto => {
            let n = (max_norm * dt / options.step_norm_target).ceil().max(1.0) as usize;
            Ok(n)
        }
        Substeps::Fixed(n) => {
            let n = n.max(1);
            let product = max_norm * dt / n as f64;
            if product > options.step_norm_limit {
                Err(Error::StepTooLarge {
                    time: t_max,
                    product,
                    limit: options.step_norm_limit,
                    recommended_steps: recommended(options.step_norm_limit),
                })
            } else {
                Ok(n)
            }
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn all_finite(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Integrates `i ∂t η = η H(t)` from `η(t0) = eta0`.
pub fn propagate_dyson(
    gen: &dyn Generator,
    eta0: &FockOperator,
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<DysonTrajectory> {
    check_dim(gen.dim(), eta0.dim())?;
    let substeps = plan_substeps(gen, grid, options)?;
    let h = grid.dt() / substeps as f64;
    let mut eta = Vec::with_capacity(grid.len());
    eta.push(eta0.clone());
    let mut cur = eta0.matrix().clone();
    for k in 0..grid.steps() {
        let tk = grid.point(k);
        for s in 0..substeps {
            cur = rk4_right(&cur, tk + s as f64 * h, h, gen);
        }
        let t_next = grid.point(k + 1);
        if !all_finite(&cur) {
            return Err(Error::Divergence { time: t_next });
        }
        eta.push(FockOperator::from_matrix_unchecked(cur.clone()));
    }
    let rho0 = &eta0.adjoint() * eta0;
    let rcond = eta.iter().map(reciprocal_condition).collect();
    let max_tail_mass = probe_tail(&eta, options)?;
    let convergence = if options.measure_order {
        Some(measure_order(gen, eta0, grid, (grid.steps() * substeps / 4).max(1))?)
    } else {
        None
    };
    Ok(DysonTrajectory {
        grid: *grid,
        eta,
        eta0: eta0.clone(),
        rho0,
        rcond,
        substeps,
        options: *options,
        max_tail_mass,
        convergence,
    })
}

fn endpoint(gen: &dyn Generator, eta0: &DMatrix<C64>, t0: f64, t1: f64, steps: usize) -> Result<DMatrix<C64>> {
    let h = (t1 - t0) / steps as f64;
    let mut cur = eta0.clone();
    for s in 0..steps {
        cur = rk4_right(&cur, t0 + s as f64 * h, h, gen);
    }
    if all_finite(&cur) {
        Ok(cur)
    } else {
        Err(Error::Divergence { time: t1 })
    }
}

/// Endpoint order of the integrator from runs with `base`, `2·base`, `4·base` steps.
pub fn measure_order(
    gen: &dyn Generator,
    eta0: &FockOperator,
    grid: &TimeGrid,
    base: usize,
) -> Result<ConvergenceReport> {
    let e1 = endpoint(gen, eta0.matrix(), grid.t0(), grid.t1(), base)?;
    let e2 = endpoint(gen, eta0.matrix(), grid.t0(), grid.t1(), 2 * base)?;
    let e4 = endpoint(gen, eta0.matrix(), grid.t0(), grid.t1(), 4 * base)?;
    let coarse = (&e1 - &e2).norm();
    let fine = (&e2 - &e4).norm();
    let ratio = coarse / fine;
    Ok(ConvergenceReport {
        base_steps: base,
        coarse_difference: coarse,
        fine_difference: fine,
        ratio,
        order: ratio.log2(),
    })
}

/// Sampled solution of `i ∂t ψ = H(t) ψ`.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<StateVector>,
    pub substeps: usize,
    pub max_tail_mass: f64,
}

pub fn propagate_state(
    gen: &dyn Generator,
    psi0: &StateVector,
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<StateTrajectory> {
    check_dim(gen.dim(), psi0.dim())?;
    kept_levels(psi0.dim(), options.guard)?;
    let substeps = plan_substeps(gen, grid, options)?;
    let h = grid.dt() / substeps as f64;
    let mut states = Vec::with_capacity(grid.len());
    states.push(psi0.clone());
    let mut cur = psi0.amplitudes().clone();
    for k in 0..grid.steps() {
        let tk = grid.point(k);
        for s in 0..substeps {
            cur = rk4_left(&cur, tk + s as f64 * h, h, gen);
        }
        if !cur.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Divergence {
                time: grid.point(k + 1),
            });
        }
        states.push(StateVector::from_vector(cur.clone()));
    }
    let mut max_tail_mass: f64 = 0.0;
    for s in &states {
        if let Ok(t) = fock::tail_mass(s, options.guard) {
            max_tail_mass = max_tail_mass.max(t);
        }
    }
    if max_tail_mass > options.tail_warn {
        warn!("state tail mass {max_tail_mass:e} exceeds {:e}", options.tail_warn);
    }
    Ok(StateTrajectory {
        grid: *grid,
        states,
        substeps,
        max_tail_mass,
    })
}

/// `ρ(t_k) = η†η` with its smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub rho: FockOperator,
    pub min_eigenvalue: f64,
}

/// Metric along a trajectory. Fails when the smallest eigenvalue of the
/// Hermitized `ρ` falls below `−1e−10` relative to the largest.
pub fn metric_of(traj: &DysonTrajectory) -> Result<Vec<MetricSample>> {
    traj.eta
        .iter()
        .enumerate()
        .map(|(k, eta)| {
            let rho = &eta.adjoint() * eta;
            let herm = (rho.matrix() + rho.matrix().adjoint()) * C64::new(0.5, 0.0);
            let eig = herm.symmetric_eigenvalues();
            let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = eig.iter().map(|x| x.abs()).fold(1.0, f64::max);
            if min_eigenvalue < -1e-10 * scale {
                return Err(Error::MetricNotPositive {
                    min_eigenvalue,
                    time: Some(traj.grid.point(k)),
                });
            }
            Ok(MetricSample { rho, min_eigenvalue })
        })
        .collect()
}

/// `h(t_k) = 2 η H η⁻¹` with its Hermiticity residual on the guarded block.
#[derive(Debug, Clone)]
pub struct CounterpartSample {
    pub h: FockOperator,
    pub hermiticity_residual: f64,
}

pub fn hermitian_counterpart(traj: &DysonTrajectory, gen: &dyn Generator) -> Result<Vec<CounterpartSample>> {
    check_dim(gen.dim(), traj.dim())?;
    let kept = traj.kept();
    traj.eta
        .iter()
        .enumerate()
        .map(|(k, eta)| {
            let t = traj.grid.point(k);
            let inv = Factorized::new(eta).map_err(|e| e.at_time(t))?.inverse();
            let h = (&(eta * &gen.at(t)) * &inv).scale(C64::new(2.0, 0.0));
            let hermiticity_residual = h.hermiticity_residual(kept);
            Ok(CounterpartSample {
                h,
                hermiticity_residual,
            })
        })
        .collect()
}

/// `∂t` of sampled matrices: central differences inside, one-sided
/// second-order stencils at the ends. Needs at least three samples.
pub fn time_derivative(samples: &[&DMatrix<C64>], dt: f64, k: usize) -> Result<DMatrix<C64>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidGrid("derivative stencil needs at least 2 steps".into()));
    }
    let c = |x: f64| C64::new(x, 0.0);
    Ok(if k == 0 {
        (samples[0] * c(-3.0) + samples[1] * c(4.0) - samples[2]) * c(0.5 / dt)
    } else if k == n - 1 {
        (samples[n - 1] * c(3.0) - samples[n - 2] * c(4.0) + samples[n - 3]) * c(0.5 / dt)
    } else {
        (samples[k + 1] - samples[k - 1]) * c(0.5 / dt)
    })
}

/// `‖i(∂tη)η⁻¹ − ηHη⁻¹‖_F / ‖ηHη⁻¹‖_F` at the interior samples
/// `k = 1..steps` (absolute when the denominator vanishes). `O(dt²)` from the
/// central difference.
pub fn dyson_relation_residual(traj: &DysonTrajectory, gen: &dyn Generator) -> Result<Vec<f64>> {
    check_dim(gen.dim(), traj.dim())?;
    let mats: Vec<&DMatrix<C64>> = traj.eta.iter().map(|e| e.matrix()).collect();
    let dt = traj.grid.dt();
    if mats.len() < 3 {
        return Err(Error::InvalidGrid("relation residual needs at least 2 steps".into()));
    }
    (1..mats.len() - 1)
        .map(|k| {
            let t = traj.grid.point(k);
            let inv = Factorized::new(&traj.eta[k]).map_err(|e| e.at_time(t))?.inverse();
            let deta = time_derivative(&mats, dt, k)?;
            let gauge = (deta * I) * inv.matrix();
            let similar = (mats[k] * gen.at(t).matrix()) * inv.matrix();
            Ok(relative((&gauge - &similar).norm(), similar.norm()))
        })
        .collect()
}

/// Integrates `i ∂t Ũ = Ũ H̃(t)` for Hermitian `H̃` and unitary `Ũ(t0)`.
pub fn unitary_transform_propagate(
    gen: &dyn Generator,
    u0: &FockOperator,
    grid: &TimeGrid,
    options: &SolverOptions,
) -> Result<DysonTrajectory> {
    check_dim(gen.dim(), u0.dim())?;
    for t in grid.points() {
        let h = gen.at(t);
        let residual = h.hermiticity_residual(h.dim());
        if residual > 1e-10 {
            return Err(Error::NotHermitian { time: t, residual });
        }
    }
    let dim = u0.dim();
    let residual = (u0.matrix() * u0.matrix().adjoint() - DMatrix::<C64>::identity(dim, dim)).norm();
    if residual > 1e-10 {
        return Err(Error::NotUnitary { residual });
    }
    propagate_dyson(gen, u0, grid, options)
}

/// `‖Ũ Ũ† − I‖_F` per sample.
pub fn unitarity_residuals(traj: &DysonTrajectory) -> Vec<f64> {
    let dim = traj.dim();
    let id = DMatrix::<C64>::identity(dim, dim);
    traj.eta
        .iter()
        .map(|u| (u.matrix() * u.matrix().adjoint() - &id).norm())
        .collect()
}

/// `h̃(t_k) = 2 Ũ H̃ Ũ†`.
pub fn transformed_hamiltonian(traj: &DysonTrajectory, gen: &dyn Generator) -> Vec<FockOperator> {
    traj.eta
        .iter()
        .enumerate()
        .map(|(k, u)| (&(u * &gen.at(traj.grid.point(k))) * &u.adjoint()).scale(C64::new(2.0, 0.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ladder_operators, matrix_exponential};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn number_gen(dim: usize, omega: f64) -> ConstantGenerator {
        ConstantGenerator::new(FockOperator::number(dim).unwrap().scale(c(omega, 0.0)), true)
    }

    fn max_diag_error(op: &FockOperator, phase: impl Fn(usize) -> C64) -> f64 {
        let dim = op.dim();
        let expected = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| phase(n)));
        (op.matrix() - expected).norm()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.point(4), 2.0);
        assert_eq!(g.refined(2).steps(), 8);
    }

    #[test]
    fn dyson_map_for_constant_number_operator() {
        let dim = 8;
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let traj = propagate_dyson(&number_gen(dim, 1.0), &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions::default()).unwrap();
        assert_eq!(traj.eta[0], traj.eta0);
        assert_eq!(traj.rcond.len(), grid.len());
        let err = max_diag_error(traj.eta.last().unwrap(), |n| c(0.0, -(n as f64)).exp());
        assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn dyson_map_for_commuting_time_dependent_family() {
        let dim = 8;
        let n_op = FockOperator::number(dim).unwrap();
        let gen = FnGenerator::new(dim, true, move |t| n_op.scale(c(1.0 + t, 0.0)));
        let t_end = 1.5;
        let grid = TimeGrid::new(0.0, t_end, 300).unwrap();
        let traj = propagate_dyson(&gen, &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions::default()).unwrap();
        let err = max_diag_error(traj.eta.last().unwrap(), |n| c(0.0, -(n as f64) * (t_end + t_end * t_end / 2.0)).exp());
        assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn fixed_substeps_violating_limit_are_refused() {
        let dim = 32;
        let grid = TimeGrid::new(0.0, 2.0 * PI, 1000).unwrap();
        let opts = SolverOptions {
            substeps: Substeps::Fixed(1),
            ..Default::default()
        };
        match propagate_dyson(&number_gen(dim, 1.0), &FockOperator::identity(dim).unwrap(), &grid, &opts) {
            Err(Error::StepTooLarge { recommended_steps, product, .. }) => {
                assert!(product > 0.1);
                // ‖H‖ = 31, so 31·2π/0.1 ≈ 1948 steps
                assert_eq!(recommended_steps, (31.0 * 2.0 * PI / 0.1f64).ceil() as usize);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        let opts = SolverOptions {
            substeps: Substeps::Fixed(2),
            ..Default::default()
        };
        assert!(propagate_dyson(&number_gen(dim, 1.0), &FockOperator::identity(dim).unwrap(), &grid, &opts).is_ok());
    }

    #[test]
    fn divergence_is_reported_with_time() {
        let dim = 2;
        let gen = FnGenerator::new(dim, false, |t| {
            let z = if t > 0.5 { c(0.0, f64::MAX) } else { c(0.0, 0.0) };
            FockOperator::diagonal(&[z, z]).unwrap()
        });
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let opts = SolverOptions {
            guard: 1,
            ..Default::default()
        };
        // the planner sees the non-finite product of the step norm first
        let err = propagate_dyson(&gen, &FockOperator::identity(dim).unwrap(), &grid, &opts).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn integrator_is_fourth_order() {
        let dim = 6;
        let (a, a_dag) = ladder_operators(dim).unwrap();
        let n_op = FockOperator::number(dim).unwrap();
        let gen = FnGenerator::new(dim, false, move |t| {
            &(&n_op.scale(c(1.0 + 0.3 * t.sin(), 0.0)) + &a.scale(c(0.0, 0.2 * t.cos()))) + &a_dag.scale(c(0.1, 0.1))
        });
        let grid = TimeGrid::new(0.0, 2.0, 10).unwrap();
        let report = measure_order(&gen, &FockOperator::identity(dim).unwrap(), &grid, 40).unwrap();
        assert!((report.order - 4.0).abs() < 0.2, "{report:?}");
    }

    #[test]
    fn state_under_number_operator() {
        let dim = 6;
        let grid = TimeGrid::new(0.0, PI, 400).unwrap();
        let opts = SolverOptions { guard: 2, ..Default::default() };
        let traj = propagate_state(&number_gen(dim, 1.0), &StateVector::basis(dim, 1).unwrap(), &grid, &opts).unwrap();
        let end = traj.states.last().unwrap();
        let expected = StateVector::basis(dim, 1).unwrap().scale(c(-1.0, 0.0));
        assert!((end - &expected).norm() <= 1e-8);
    }

    #[test]
    fn hermitian_state_propagation_conserves_norm() {
        let dim = 16;
        let (a, a_dag) = ladder_operators(dim).unwrap();
        let h = &(&FockOperator::number(dim).unwrap() + &a.scale(c(0.1, 0.05))) + &a_dag.scale(c(0.1, -0.05));
        let gen = ConstantGenerator::new(h, true);
        let grid = TimeGrid::new(0.0, 2.0 * PI, 500).unwrap();
        let traj = propagate_state(&gen, &StateVector::basis(dim, 0).unwrap(), &grid, &SolverOptions::default()).unwrap();
        for s in &traj.states {
            assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-8);
        }
        assert!(traj.max_tail_mass < 1e-8);
    }

    #[test]
    fn metric_is_identity_for_unitary_map() {
        let dim = 10;
        let grid = TimeGrid::new(0.0, 2.0, 50).unwrap();
        let traj = propagate_dyson(&number_gen(dim, 1.0), &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions::default()).unwrap();
        let metric = metric_of(&traj).unwrap();
        for m in &metric {
            assert!((m.rho.matrix() - DMatrix::<C64>::identity(dim, dim)).norm() <= 1e-8);
            assert_abs_diff_eq!(m.min_eigenvalue, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn metric_at_start_is_exact_product() {
        let dim = 10;
        let (a, a_dag) = ladder_operators(dim).unwrap();
        let eta0 = matrix_exponential(&(&a.scale(c(0.0, -0.2)) + &a_dag.scale(c(0.05, 0.0)))).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let opts = SolverOptions { guard: 2, ..Default::default() };
        let traj = propagate_dyson(&number_gen(dim, 1.0), &eta0, &grid, &opts).unwrap();
        let metric = metric_of(&traj).unwrap();
        assert_eq!(metric[0].rho, &eta0.adjoint() * &eta0);
        assert_eq!(traj.rho0, metric[0].rho);
    }

    #[test]
    fn counterpart_of_number_operator() {
        let dim = 10;
        let grid = TimeGrid::new(0.0, 2.0, 40).unwrap();
        let gen = number_gen(dim, 1.0);
        let traj = propagate_dyson(&gen, &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions { guard: 2, ..Default::default() }).unwrap();
        let two_n = FockOperator::number(dim).unwrap().scale(c(2.0, 0.0));
        for s in hermitian_counterpart(&traj, &gen).unwrap() {
            assert!((s.h.matrix() - two_n.matrix()).norm() <= 1e-10);
            assert!(s.hermiticity_residual <= 1e-12);
        }
    }

    fn analytic_number_trajectory(dim: usize, steps: usize) -> DysonTrajectory {
        let grid = TimeGrid::new(0.0, 1.0, steps).unwrap();
        let eta = grid
            .points()
            .into_iter()
            .map(|t| {
                let d: Vec<C64> = (0..dim).map(|n| c(0.0, -(n as f64) * t).exp()).collect();
                FockOperator::diagonal(&d).unwrap()
            })
            .collect();
        DysonTrajectory::from_samples(grid, eta, SolverOptions { guard: 1, ..Default::default() }).unwrap()
    }

    #[test]
    fn dyson_relation_on_analytic_map() {
        let dim = 3;
        let traj = analytic_number_trajectory(dim, 1000);
        let r = dyson_relation_residual(&traj, &number_gen(dim, 1.0)).unwrap();
        let max = r.iter().copied().fold(0.0, f64::max);
        assert!(max <= 1e-6, "{max:e}");
    }

    #[test]
    fn dyson_relation_residual_is_second_order() {
        let dim = 3;
        let gen = number_gen(dim, 1.0);
        let coarse = dyson_relation_residual(&analytic_number_trajectory(dim, 200), &gen).unwrap();
        let fine = dyson_relation_residual(&analytic_number_trajectory(dim, 400), &gen).unwrap();
        // t = 0.5 on both grids; element j is sample j + 1
        let ratio = coarse[99] / fine[199];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn dyson_relation_for_vanishing_generator() {
        let dim = 4;
        let gen = ConstantGenerator::new(FockOperator::zeros(dim).unwrap(), true);
        let (a, _) = ladder_operators(dim).unwrap();
        let eta0 = matrix_exponential(&a.scale(c(0.3, 0.0))).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 20).unwrap();
        let traj = propagate_dyson(&gen, &eta0, &grid, &SolverOptions { guard: 1, ..Default::default() }).unwrap();
        for r in dyson_relation_residual(&traj, &gen).unwrap() {
            assert!(r <= 1e-12);
        }
    }

    #[test]
    fn unitary_variant_for_number_operator() {
        let dim = 12;
        let grid = TimeGrid::new(0.0, 2.0, 100).unwrap();
        let gen = number_gen(dim, 1.0);
        let traj = unitary_transform_propagate(&gen, &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions::default()).unwrap();
        for (k, u) in traj.eta.iter().enumerate() {
            let t = grid.point(k);
            assert!(max_diag_error(u, |n| c(0.0, -(n as f64) * t).exp()) <= 1e-7);
        }
        assert!(unitarity_residuals(&traj).into_iter().all(|r| r <= 1e-7));
        let h0 = gen.at(0.0);
        for h in transformed_hamiltonian(&traj, &gen) {
            assert!(h.hermiticity_residual(dim) <= 1e-8);
            // Ũ H̃ Ũ† = H̃ for commuting time-independent H̃
            assert!((h.scale(c(0.5, 0.0)).matrix() - h0.matrix()).norm() <= 1e-6);
        }
    }

    #[test]
    fn unitary_variant_rejects_bad_inputs() {
        let dim = 4;
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let (a, _) = ladder_operators(dim).unwrap();
        let gen = ConstantGenerator::new(a.clone(), false);
        assert!(matches!(
            unitary_transform_propagate(&gen, &FockOperator::identity(dim).unwrap(), &grid, &SolverOptions::default()),
            Err(Error::NotHermitian { .. })
        ));
        let gen = number_gen(dim, 1.0);
        let u0 = FockOperator::identity(dim).unwrap().scale(c(2.0, 0.0));
        assert!(matches!(
            unitary_transform_propagate(&gen, &u0, &grid, &SolverOptions::default()),
            Err(Error::NotUnitary { .. })
        ));
    }
}
