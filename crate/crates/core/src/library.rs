//! Named scenarios shared by the tests and the bundled scenario files.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::oscillator::{Coefficient, Scenario};
use crate::propagation::TimeGrid;

fn default_grid() -> TimeGrid {
    TimeGrid::new(0.0, 2.0 * PI, 1000).expect("static grid")
}

fn constant(re: f64, im: f64) -> Coefficient {
    Coefficient::Constant(C64::new(re, im))
}

/// `ω = 1`, `α = β = i`, `κ = 0.1`: unbroken and constraint-satisfying.
pub fn s1() -> Scenario {
    Scenario::new("s1", constant(1.0, 0.0), constant(0.0, 1.0), constant(0.0, 1.0), 0.1, default_grid())
}

/// `α = 1`, `β = i`: `αβ = i` is not real.
pub fn s2() -> Scenario {
    Scenario::new("s2", constant(1.0, 0.0), constant(1.0, 0.0), constant(0.0, 1.0), 0.1, default_grid())
}

/// S1 with `κ = 0`.
pub fn kappa_zero() -> Scenario {
    let mut s = s1();
    s.name = "kappa_zero".into();
    s.kappa = 0.0;
    s
}

/// `α = i(1 + ½ sin t)`, `β = i`: `αβ` stays real but `κ[β* − α]/ω` drifts.
pub fn gamma_drift() -> Scenario {
    let alpha = Coefficient::Sinusoid {
        a: C64::new(0.0, 0.0),
        b: C64::new(0.0, 0.5),
        c: C64::new(0.0, 1.0),
        nu: 1.0,
    };
    Scenario::new("gamma_drift", constant(1.0, 0.0), alpha, constant(0.0, 1.0), 0.1, default_grid())
}

/// `ω = 1 + 0.01i`.
pub fn complex_omega() -> Scenario {
    let mut s = s1();
    s.name = "complex_omega".into();
    s.omega = constant(1.0, 0.01);
    s
}

/// `ω = 1`, `α = β = 0.1`: a constant Hermitian `H`.
pub fn hermitian_constant() -> Scenario {
    Scenario::new(
        "hermitian_constant",
        constant(1.0, 0.0),
        constant(0.1, 0.0),
        constant(0.1, 0.0),
        1.0,
        default_grid(),
    )
}

/// `ω = 1 + 0.3 sin t`, `α = β = iω`: time-dependent and constraint-satisfying.
pub fn time_dependent_valid() -> Scenario {
    let omega = Coefficient::Sinusoid {
        a: C64::new(0.0, 0.0),
        b: C64::new(0.3, 0.0),
        c: C64::new(1.0, 0.0),
        nu: 1.0,
    };
    let drive = omega.scaled(C64::new(0.0, 1.0));
    Scenario::new("time_dependent", omega, drive.clone(), drive, 0.1, default_grid())
}

/// `α = e^{iφ}`, `β = i`; unbroken only at `φ = π/2`.
pub fn pt_sweep_point(phi: f64) -> Scenario {
    let mut s = s2();
    s.name = format!("pt_sweep_{phi}");
    s.alpha = Coefficient::Constant(C64::from_polar(1.0, phi));
    s
}

pub fn by_name(name: &str) -> Option<Scenario> {
    Some(match name {
        "s1" => s1(),
        "s2" => s2(),
        "kappa_zero" => kappa_zero(),
        "gamma_drift" => gamma_drift(),
        "complex_omega" => complex_omega(),
        "hermitian_constant" => hermitian_constant(),
        "time_dependent" => time_dependent_valid(),
        _ => return None,
    })
}

pub const NAMES: [&str; 7] = [
    "s1",
    "s2",
    "kappa_zero",
    "gamma_drift",
    "complex_omega",
    "hermitian_constant",
    "time_dependent",
];
