//! Named residuals with pass/fail classification.
//!
//! Operator residuals use the Frobenius norm and state residuals the 2-norm,
//! relative whenever the denominator exceeds `1e−14`. Identities that the
//! truncation breaks only in the top Fock levels are measured on the leading
//! `dim − guard` block.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{relative, Factorized, FockOperator, StateVector};
use crate::oscillator::{
    analytic_evolution, assess_initial_map, eigensystem_levels, h_closed_form, matrix_element_numeric, matrix_elements,
    pt_analysis, quadrature_observables, quadratures, ClosedFormCounterpart, InitialMap, LrQuantities,
    PerturbationOrder, PtReport, Scenario, SignConvention,
};
use crate::propagation::{
    dyson_relation_residual, hermitian_counterpart, metric_of, propagate_dyson, propagate_state, time_derivative,
    DysonTrajectory, Generator, StateTrajectory, TimeGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Algebraic identities.
    pub algebraic: f64,
    /// `max ‖ρ(t) − ρ(t₀)‖/‖ρ(t₀)‖`.
    pub metric: f64,
    /// Pairings under the fixed metric.
    pub integrator: f64,
    /// `‖H†ρ − ρH‖/‖ρH‖`.
    pub quasi_hermiticity: f64,
    /// Finite-difference checks pass below `stencil · (max‖H‖ dt)²`; the
    /// default is the a priori bound `(2‖H‖dt)²/6 · 2`.
    pub stencil: f64,
    /// Closed-form comparisons pass below `max(perturbative_floor, perturbative_c · κ^p)`.
    pub perturbative_floor: f64,
    pub perturbative_c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-10,
            metric: 1e-6,
            integrator: 1e-6,
            quasi_hermiticity: 1e-7,
            stencil: 4.0 / 3.0,
            perturbative_floor: 1e-6,
            perturbative_c: 0.05,
        }
    }
}

impl Tolerances {
    pub fn perturbative(&self, kappa: f64, exponent: i32) -> f64 {
        self.perturbative_floor.max(self.perturbative_c * kappa.powi(exponent))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Constraint,
    Algebraic,
    Integrator,
    Stencil,
    Perturbative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    /// Worst value over the grid.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, kind: CheckKind, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
        }
    }
}

/// A residual sampled on the report's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub samples: Vec<f64>,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// `‖ρ(t_k) − ρ(t₀)‖_F / ‖ρ(t₀)‖_F` on the leading `block` levels.
pub fn metric_constancy(traj: &DysonTrajectory, block: usize) -> Vec<f64> {
    let r0 = traj.rho0.leading_block(block);
    let den = r0.norm();
    traj.eta
        .iter()
        .map(|e| {
            let rho = &e.adjoint() * e;
            relative((rho.leading_block(block) - &r0).norm(), den)
        })
        .collect()
}

/// `r₂ = ‖H†ρ − ρH + i∂tρ‖/‖ρH‖` on the full matrix and
/// `r₇ = ‖H†ρ − ρH‖/‖ρH‖` on the leading `block` levels.
///
/// Under `i∂tη = ηH` the metric obeys `i∂tρ = ρH − H†ρ` whatever the
/// parameters, so `r₂` only sees the `O(dt²)` floor of the stencil.
pub fn quasi_hermiticity_residuals(
    traj: &DysonTrajectory,
    gen: &dyn Generator,
    block: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho: Vec<DMatrix<C64>> = traj.eta.iter().map(|e| e.matrix().adjoint() * e.matrix()).collect();
    let refs: Vec<&DMatrix<C64>> = rho.iter().collect();
    let dt = traj.grid.dt();
    let mut r2 = Vec::with_capacity(rho.len());
    let mut r7 = Vec::with_capacity(rho.len());
    for k in 0..rho.len() {
        let h = gen.at(traj.grid.point(k));
        let rh = &rho[k] * h.matrix();
        let comm = h.matrix().adjoint() * &rho[k] - &rh;
        let drho = time_derivative(&refs, dt, k)? * C64::new(0.0, 1.0);
        r2.push(relative((&comm + drho).norm(), rh.norm()));
        let rb = rh.view((0, 0), (block, block)).norm();
        r7.push(relative(comm.view((0, 0), (block, block)).norm(), rb));
    }
    Ok((r2, r7))
}

/// Residuals of `⟨ψ|ψ̃⟩_ρ = ⟨φ|φ̃⟩` with `φ = ηψ`.
#[derive(Debug, Clone)]
pub struct PairingResiduals {
    /// `|⟨ψ|ρ(t)|ψ̃⟩ − ⟨ηψ|ηψ̃⟩|`, an algebraic identity.
    pub algebraic: Vec<f64>,
    /// `|⟨ψ(t)|ρ₀|ψ̃(t)⟩ − ⟨ψ(t₀)|ρ₀|ψ̃(t₀)⟩|`.
    pub fixed_metric: Vec<f64>,
}

/// Both pairings are scaled by `√(⟨ψ|ρ|ψ⟩⟨ψ̃|ρ|ψ̃⟩)`.
pub fn equivalence_checks(
    traj: &DysonTrajectory,
    psi: &StateTrajectory,
    psi_tilde: &StateTrajectory,
) -> Result<PairingResiduals> {
    let n = traj.grid.len();
    if psi.states.len() != n || psi_tilde.states.len() != n {
        return Err(Error::InvalidParameter("state trajectories on a different grid".into()));
    }
    let rho0 = &traj.rho0;
    let (p0, q0) = (&psi.states[0], &psi_tilde.states[0]);
    let scale0 = (p0.sandwich(rho0, p0).re * q0.sandwich(rho0, q0).re).sqrt();
    let start = p0.sandwich(rho0, q0);
    let mut algebraic = Vec::with_capacity(n);
    let mut fixed_metric = Vec::with_capacity(n);
    for k in 0..n {
        let (p, q) = (&psi.states[k], &psi_tilde.states[k]);
        let eta = &traj.eta[k];
        let rho = &eta.adjoint() * eta;
        let (ep, eq) = (eta.apply(p), eta.apply(q));
        let scale = (ep.norm() * eq.norm()).max(1e-300);
        algebraic.push(relative((p.sandwich(&rho, q) - ep.inner(&eq)).norm(), scale));
        fixed_metric.push(relative((p.sandwich(rho0, q) - start).norm(), scale0));
    }
    Ok(PairingResiduals {
        algebraic,
        fixed_metric,
    })
}

/// `|⟨ψ|ρ O|ψ̃⟩ − ⟨ηψ|o|ηψ̃⟩|`, scaled by `‖ηψ‖‖ηψ̃‖`, for a sampled `O(t_k)`.
pub fn observable_pairing(
    traj: &DysonTrajectory,
    psi: &StateTrajectory,
    psi_tilde: &StateTrajectory,
    big_o: &[FockOperator],
    o: &FockOperator,
) -> Vec<f64> {
    (0..traj.grid.len())
        .map(|k| {
            let (p, q) = (&psi.states[k], &psi_tilde.states[k]);
            let eta = &traj.eta[k];
            let (ep, eq) = (eta.apply(p), eta.apply(q));
            let lhs = ep.inner(&eta.apply(&big_o[k].apply(q)));
            let rhs = ep.sandwich(o, &eq);
            relative((lhs - rhs).norm(), ep.norm() * eq.norm())
        })
        .collect()
}

/// `‖Hw − (ℰ_m/2)w‖/‖w‖` with `w = η⁻¹ζ_m`, one series per `m < levels`.
pub fn isospectrality_check(
    traj: &DysonTrajectory,
    gen: &dyn Generator,
    s: &Scenario,
    lr: &LrQuantities,
    levels: usize,
) -> Result<Vec<Vec<f64>>> {
    if s.order != PerturbationOrder::Second {
        return Err(Error::OrderRequired("isospectrality check"));
    }
    let mut out = vec![Vec::with_capacity(traj.grid.len()); levels];
    for k in 0..traj.grid.len() {
        let t = traj.grid.point(k);
        let f = Factorized::new(&traj.eta[k]).map_err(|e| e.at_time(t))?;
        let h = gen.at(t);
        for (m, pair) in eigensystem_levels(s, lr, levels, k)?.into_iter().enumerate() {
            let w = f.solve(&pair.state)?;
            let diff = &h.apply(&w) - &w.scale(pair.energy * 0.5);
            out[m].push(relative(diff.norm(), w.norm()));
        }
    }
    Ok(out)
}

/// `‖hζ_m − ℰ_mζ_m‖/‖ζ_m‖` against the closed-form `h`, one series per `m < levels`.
pub fn eigen_residuals(s: &Scenario, lr: &LrQuantities, levels: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::with_capacity(lr.grid.len()); levels];
    for k in 0..lr.grid.len() {
        for (m, pair) in eigensystem_levels(s, lr, levels, k)?.into_iter().enumerate() {
            out[m].push(pair.residual);
        }
    }
    Ok(out)
}

/// Hermiticity of `h = 2ηHη⁻¹` and its distance to the closed form, both on
/// the leading `block` levels.
pub fn counterpart_residuals(
    traj: &DysonTrajectory,
    gen: &dyn Generator,
    lr: Option<&LrQuantities>,
    block: usize,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let samples = hermitian_counterpart(traj, gen)?;
    let hermiticity = samples.iter().map(|s| s.hermiticity_residual).collect();
    let closed = match lr {
        Some(lr) => Some(
            samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let cf = h_closed_form(lr, k)?.leading_block(block);
                    Ok(relative((s.h.leading_block(block) - &cf).norm(), cf.norm()))
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    Ok((hermiticity, closed))
}

/// `max_ℓ ‖X_ℓ − η⁻¹x_ℓη‖/‖X_ℓ‖` on the leading `block` levels.
pub fn quadrature_residuals(traj: &DysonTrajectory, lr: &LrQuantities, block: usize) -> Result<Vec<f64>> {
    let (x1, x2) = quadratures(lr.dim)?;
    (0..traj.grid.len())
        .map(|k| {
            let t = traj.grid.point(k);
            let f = Factorized::new(&traj.eta[k]).map_err(|e| e.at_time(t))?;
            let (b1, b2) = quadrature_observables(lr, k)?;
            let mut worst: f64 = 0.0;
            for (big, small) in [(&b1, &x1), (&b2, &x2)] {
                let direct = f.solve(&(small * &traj.eta[k]))?;
                let cf = big.leading_block(block);
                worst = worst.max(relative((direct.leading_block(block) - &cf).norm(), cf.norm()));
            }
            Ok(worst)
        })
        .collect()
}

/// `U(t_k, t₀)` for every sample.
pub fn analytic_propagators(lr: &LrQuantities) -> Result<Vec<FockOperator>> {
    let ev = analytic_evolution(lr)?;
    (0..lr.grid.len()).map(|k| ev.u(k)).collect()
}

/// `‖U(t,t₀)|m⟩ − φ_m(t)‖` with `φ_m` propagated numerically under the
/// closed-form `h(t)`, worst over `m < levels`.
pub fn lr_propagation_residual(
    s: &Scenario,
    lr: &LrQuantities,
    propagators: &[FockOperator],
    levels: usize,
) -> Result<Vec<f64>> {
    let gen = ClosedFormCounterpart::new(s, lr);
    let mut numeric = Vec::with_capacity(levels);
    for m in 0..levels {
        numeric.push(propagate_state(&gen, &StateVector::basis(s.dim, m)?, &s.grid, &s.solver)?);
    }
    (0..s.grid.len())
        .map(|k| {
            let mut worst: f64 = 0.0;
            for (m, traj) in numeric.iter().enumerate() {
                let an = propagators[k].apply(&StateVector::basis(s.dim, m)?);
                worst = worst.max((&an - &traj.states[k]).norm());
            }
            Ok(worst)
        })
        .collect()
}

/// `‖η⁻¹(t)U(t,t₀)η(t₀)ψ₀ − ψ(t)‖/‖ψ(t)‖` with `ψ` propagated under `H`.
pub fn analytic_vs_numeric(
    traj: &DysonTrajectory,
    propagators: &[FockOperator],
    psi: &StateTrajectory,
) -> Result<Vec<f64>> {
    let phi0 = traj.eta0.apply(&psi.states[0]);
    (0..traj.grid.len())
        .map(|k| {
            let t = traj.grid.point(k);
            let phi = propagators[k].apply(&phi0);
            let an = Factorized::new(&traj.eta[k]).map_err(|e| e.at_time(t))?.solve(&phi)?;
            Ok(relative((&an - &psi.states[k]).norm(), psi.states[k].norm()))
        })
        .collect()
}

/// Closed-form matrix elements against `⟨m|V†(h/2)V|n⟩`, worst over
/// `m, n < levels` at each of `samples` evenly spread grid indices, relative
/// to the largest element of the block.
pub fn matrix_element_residual(lr: &LrQuantities, levels: usize, samples: usize) -> Result<f64> {
    let last = lr.grid.steps();
    let mut worst: f64 = 0.0;
    for j in 0..samples.max(1) {
        let k = if samples <= 1 { 0 } else { j * last / (samples - 1) };
        let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
        for m in 0..levels {
            for n in 0..levels {
                let a = matrix_elements(lr, m, n, k)?;
                let b = matrix_element_numeric(lr, m, n, k)?;
                diff = diff.max((a - b).norm());
                scale = scale.max(b.norm());
            }
        }
        worst = worst.max(relative(diff, scale));
    }
    Ok(worst)
}

/// Measured scaling of a residual across a κ-sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub name: String,
    pub exponent: i32,
    pub kappas: Vec<f64>,
    pub values: Vec<f64>,
    /// `max value/κ^exponent` over the sweep.
    pub constant: f64,
    /// Least-squares slope of `log value` against `log κ`.
    pub slope: f64,
    /// Every value below the floor, so no slope is resolvable.
    pub at_floor: bool,
    /// At the floor, or the slope reaches `exponent − 0.3`.
    pub scaling_ok: bool,
}

/// Evaluates `metric` on copies of `base` with each κ and fits the scaling.
pub fn calibrate(
    name: &str,
    base: &Scenario,
    kappas: &[f64],
    exponent: i32,
    floor: f64,
    metric: impl Fn(&Scenario) -> Result<f64>,
) -> Result<Calibration> {
    let mut values = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let mut s = base.clone();
        s.kappa = kappa;
        values.push(metric(&s)?);
    }
    let constant = kappas
        .iter()
        .zip(&values)
        .filter(|(k, _)| **k > 0.0)
        .map(|(k, v)| v / k.powi(exponent))
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = kappas
        .iter()
        .zip(&values)
        .filter(|(k, v)| **k > 0.0 && **v > 0.0)
        .map(|(k, v)| (k.ln(), v.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let at_floor = values.iter().all(|v| *v <= floor);
    Ok(Calibration {
        name: name.to_string(),
        exponent,
        kappas: kappas.to_vec(),
        values,
        constant,
        slope,
        at_floor,
        scaling_ok: at_floor || slope >= exponent as f64 - 0.3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialMapSummary {
    pub gamma0: [f64; 2],
    pub lambda0: [f64; 2],
    pub convention: SignConvention,
    pub validated: bool,
}

impl From<&InitialMap> for InitialMapSummary {
    fn from(m: &InitialMap) -> Self {
        Self {
            gamma0: [m.gamma0.re, m.gamma0.im],
            lambda0: [m.lambda0.re, m.lambda0.im],
            convention: m.convention,
            validated: m.validated,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub scenario: String,
    pub grid: TimeGrid,
    pub tolerances: Tolerances,
    /// Sorted by name.
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub initial_map: InitialMapSummary,
    pub lr: Option<LrQuantities>,
    pub pt: PtReport,
    pub max_tail_mass: f64,
    pub max_condition: f64,
    pub substeps: usize,
    /// Endpoint change of `η` (relative Frobenius) when the grid is halved.
    pub refinement_change: Option<f64>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.samples.as_slice())
    }
}

/// Everything computed for one scenario.
pub struct Evaluation {
    pub map: InitialMap,
    pub traj: DysonTrajectory,
    pub lr: Option<LrQuantities>,
}

pub fn evaluate(s: &Scenario) -> Result<Evaluation> {
    s.validate()?;
    let map = assess_initial_map(s)?;
    let gen = s.hamiltonian()?;
    let traj = propagate_dyson(&gen, &map.eta0, &s.grid, &s.solver)?;
    let lr = if map.validated {
        Some(LrQuantities::new(s, &map)?)
    } else {
        None
    };
    Ok(Evaluation { map, traj, lr })
}

fn stencil_scale(gen: &dyn Generator, grid: &TimeGrid) -> f64 {
    let max_norm = grid.points().into_iter().map(|t| gen.at(t).spectral_bound()).fold(0.0, f64::max);
    (max_norm * grid.dt()).powi(2)
}

/// Runs every check that applies to the scenario.
///
/// Checks built on the closed forms run only when the initial-map
/// constraints hold; otherwise the failing constraints appear as checks.
pub fn diagnose(s: &Scenario, tol: &Tolerances) -> Result<DiagnosticsReport> {
    let Evaluation { map, traj, lr } = evaluate(s)?;
    let gen = s.hamiltonian()?;
    let kept = s.kept();
    metric_of(&traj)?;

    let mut checks = Vec::new();
    let mut series = Vec::new();
    for c in &map.checks {
        let tolerance = if c.name == crate::oscillator::CHECK_INTERTWINING { 1e-8 } else { 1e-10 };
        checks.push(Check {
            name: c.name.to_string(),
            kind: CheckKind::Constraint,
            value: c.worst,
            tolerance,
            passed: c.passed,
        });
    }
    let mut push = |checks: &mut Vec<Check>, name: &str, kind: CheckKind, samples: Vec<f64>, tolerance: f64| {
        checks.push(Check::new(name, kind, max_of(&samples), tolerance));
        series.push(Series {
            name: name.to_string(),
            samples,
        });
    };

    push(&mut checks, "metric_constancy", CheckKind::Integrator, metric_constancy(&traj, kept), tol.metric);
    let stencil_tol = tol.stencil * stencil_scale(&gen, &s.grid);
    let (r2, r7) = quasi_hermiticity_residuals(&traj, &gen, kept)?;
    push(&mut checks, "quasi_hermiticity_r2", CheckKind::Stencil, r2, stencil_tol);
    push(&mut checks, "quasi_hermiticity_r7", CheckKind::Integrator, r7, tol.quasi_hermiticity);
    let dyson = dyson_relation_residual(&traj, &gen)?;
    checks.push(Check::new("dyson_relation", CheckKind::Stencil, max_of(&dyson), stencil_tol));

    let kappa = s.kappa;
    let (herm, closed) = counterpart_residuals(&traj, &gen, lr.as_ref(), kept)?;
    push(&mut checks, "counterpart_hermiticity", CheckKind::Perturbative, herm, tol.perturbative(kappa, 2));

    if let (Some(lr), Some(closed)) = (lr.as_ref(), closed) {
        push(&mut checks, "counterpart_closed_form", CheckKind::Perturbative, closed, tol.perturbative(kappa, 2));
        let propagators = analytic_propagators(lr)?;
        push(
            &mut checks,
            "lr_propagation",
            CheckKind::Perturbative,
            lr_propagation_residual(s, lr, &propagators, 3)?,
            tol.perturbative(kappa, 2),
        );
        let psi0 = propagate_state(&gen, &StateVector::basis(s.dim, 0)?, &s.grid, &s.solver)?;
        let psi1 = propagate_state(&gen, &StateVector::basis(s.dim, 1)?, &s.grid, &s.solver)?;
        push(
            &mut checks,
            "analytic_vs_numeric",
            CheckKind::Perturbative,
            analytic_vs_numeric(&traj, &propagators, &psi0)?,
            tol.perturbative(kappa, 2),
        );
        push(
            &mut checks,
            "quadratures",
            CheckKind::Perturbative,
            quadrature_residuals(&traj, lr, kept)?,
            tol.perturbative(kappa, 2),
        );
        let pairing = equivalence_checks(&traj, &psi0, &psi1)?;
        push(&mut checks, "pairing_algebraic", CheckKind::Algebraic, pairing.algebraic, tol.algebraic);
        push(&mut checks, "pairing_fixed_metric", CheckKind::Integrator, pairing.fixed_metric, tol.integrator);
        let big_x1: Vec<FockOperator> = (0..s.grid.len())
            .map(|k| quadrature_observables(lr, k).map(|q| q.0))
            .collect::<Result<_>>()?;
        let (x1, _) = quadratures(s.dim)?;
        push(
            &mut checks,
            "observable_pairing_x1",
            CheckKind::Perturbative,
            observable_pairing(&traj, &psi0, &psi1, &big_x1, &x1),
            tol.perturbative(kappa, 2),
        );
        checks.push(Check::new(
            "matrix_elements",
            CheckKind::Algebraic,
            matrix_element_residual(lr, 3, 5)?,
            tol.algebraic,
        ));
        if s.order == PerturbationOrder::Second {
            let eigen = eigen_residuals(s, lr, 2)?;
            let iso = isospectrality_check(&traj, &gen, s, lr, 2)?;
            for (m, (e, r)) in eigen.into_iter().zip(iso).enumerate() {
                let tolerance = tol.perturbative(kappa, 3);
                push(&mut checks, &format!("eigen_residual_m{m}"), CheckKind::Perturbative, e, tolerance);
                push(&mut checks, &format!("isospectrality_m{m}"), CheckKind::Perturbative, r, tolerance);
            }
        }
    }

    checks.sort_by(|a, b| a.name.cmp(&b.name));
    for c in &checks {
        if !c.value.is_finite() || c.value < 0.0 {
            return Err(Error::NonFinite("residual"));
        }
    }
    let refinement_change = match traj.convergence {
        Some(r) => Some(r.fine_difference / traj.eta.last().map(|e| e.frobenius_norm()).unwrap_or(1.0)),
        None => None,
    };
    Ok(DiagnosticsReport {
        scenario: s.name.clone(),
        grid: s.grid,
        tolerances: *tol,
        checks,
        series,
        initial_map: InitialMapSummary::from(&map),
        pt: pt_analysis(s)?,
        max_tail_mass: traj.max_tail_mass,
        max_condition: 1.0 / traj.min_rcond(),
        substeps: traj.substeps,
        refinement_change,
        lr,
    })
}
