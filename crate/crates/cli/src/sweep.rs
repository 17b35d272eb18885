//! One-parameter sweeps over a scenario file.

use std::fmt::Write as _;

use dyson_core::diagnostics::{evaluate, isospectrality_check, metric_constancy};
use dyson_core::oscillator::{pt_analysis, PerturbationOrder, PtPhase};
use rayon::prelude::*;
use toml::{Table, Value};

use crate::config::{from_table, set_existing, ConfigError, Issue};
use crate::output::real;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    /// `key:start:stop:count`
    pub fn parse(raw: &str) -> Result<Self, ConfigError> {
        let bad = |message: String| {
            ConfigError(vec![Issue {
                location: format!("--axis {raw}"),
                message,
            }])
        };
        let parts: Vec<&str> = raw.split(':').collect();
        let [key, start, stop, count] = parts.as_slice() else {
            return Err(bad("expected key:start:stop:count".into()));
        };
        let num = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
        let (Some(start), Some(stop)) = (num(start), num(stop)) else {
            return Err(bad("start and stop must be finite numbers".into()));
        };
        let count = match count.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => return Err(bad("count must be a positive integer".into())),
        };
        Ok(Self {
            key: key.trim().to_string(),
            start,
            stop,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.count)
            .map(|j| self.start + span * j as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub phase: PtPhase,
    pub max_imag_energy: [f64; 4],
    pub metric_constancy: f64,
    /// Worst isospectrality residual over `m = 0, 1`; absent when the
    /// scenario does not validate or runs at first order.
    pub isospectrality: Option<f64>,
}

fn value_for(table: &Table, key: &str, x: f64) -> Result<Value, ConfigError> {
    let mut probe = table.clone();
    set_existing(&mut probe, key, Value::Float(0.0))?;
    let existing = key.split('.').try_fold(Value::Table(table.clone()), |v, part| match v {
        Value::Table(mut t) => t.remove(part),
        _ => None,
    });
    match existing {
        Some(Value::Integer(_)) => {
            if x.fract() != 0.0 {
                return Err(ConfigError(vec![Issue {
                    location: key.to_string(),
                    message: format!("integer key cannot take the value {x}"),
                }]));
            }
            Ok(Value::Integer(x as i64))
        }
        Some(Value::Float(_)) => Ok(Value::Float(x)),
        _ => Err(ConfigError(vec![Issue {
            location: key.to_string(),
            message: "sweep axes must be scalar numeric keys".into(),
        }])),
    }
}

fn row(table: &Table, key: &str, value: f64, default_name: &str) -> Result<SweepRow, CliError> {
    let mut t = table.clone();
    set_existing(&mut t, key, value_for(table, key, value)?)?;
    let config = from_table(&t, default_name)?;
    let s = &config.scenario;
    let pt = pt_analysis(s)?;
    let ev = evaluate(s)?;
    let metric = metric_constancy(&ev.traj, s.kept()).into_iter().fold(0.0, f64::max);
    let isospectrality = match (&ev.lr, s.order) {
        (Some(lr), PerturbationOrder::Second) => {
            let gen = s.hamiltonian()?;
            let r = isospectrality_check(&ev.traj, &gen, s, lr, 2)?;
            Some(r.iter().flatten().copied().fold(0.0, f64::max))
        }
        _ => None,
    };
    Ok(SweepRow {
        value,
        phase: pt.phase,
        max_imag_energy: pt.max_imag_energy,
        metric_constancy: metric,
        isospectrality,
    })
}

/// Evaluates every axis point concurrently; rows come back in axis order.
pub fn run_sweep(table: &Table, axis: &Axis, default_name: &str) -> Result<Vec<SweepRow>, CliError> {
    // surface configuration mistakes before any heavy work
    value_for(table, &axis.key, axis.start)?;
    axis.values()
        .into_par_iter()
        .map(|x| row(table, &axis.key, x, default_name))
        .collect()
}

pub fn sweep_csv(key: &str, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{key},pt_phase,max_imag_e0,max_imag_e1,max_imag_e2,max_imag_e3,metric_constancy,isospectrality\n"
    );
    for r in rows {
        let _ = write!(out, "{},{}", real(r.value), r.phase);
        for x in r.max_imag_energy {
            let _ = write!(out, ",{}", real(x));
        }
        let iso = r.isospectrality.map(real).unwrap_or_default();
        let _ = writeln!(out, ",{},{iso}", real(r.metric_constancy));
    }
    out
}
