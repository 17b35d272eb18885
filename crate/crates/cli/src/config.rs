//! Scenario files: TOML with a `schema = 1` header.
//!
//! Parsing happens in two passes. The text is first read into a generic
//! table, so syntax errors carry a line and column, and `--set` overrides are
//! applied to that table. The table is then walked section by section;
//! semantic errors carry the dotted key path, and unknown keys get the
//! nearest valid name.

use std::fmt;
use std::path::Path;

use dyson_core::diagnostics::Tolerances;
use dyson_core::oscillator::{Coefficient, LrDrive, PerturbationOrder, Scenario};
use dyson_core::propagation::{SolverOptions, Substeps, TimeGrid};
use dyson_core::C64;
use toml::{Table, Value};

pub const SCHEMA_VERSION: i64 = 1;

/// One problem in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    /// Dotted key path, or `file:line:column` for syntax errors.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<Issue>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn one(location: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError(vec![Issue {
            location: location.into(),
            message: message.into(),
        }])
    }
}

/// A parsed scenario and the tolerances its diagnostics use.
#[derive(Debug, Clone)]
pub struct Config {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Reads the text into a table; syntax errors carry `origin:line:column`.
pub fn parse_table(text: &str, origin: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| {
        let location = match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                format!("{origin}:{line}:{col}")
            }
            None => origin.to_string(),
        };
        ConfigError::one(location, e.message().trim().to_string())
    })
}

pub fn load_table(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::one(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_table(&text, &path.display().to_string())
}

/// Every dotted path present in the table, including intermediate tables.
pub fn key_paths(table: &Table) -> Vec<String> {
    fn walk(prefix: &str, table: &Table, out: &mut Vec<String>) {
        for (k, v) in table {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            if let Value::Table(t) = v {
                walk(&path, t, out);
            }
            out.push(path);
        }
    }
    let mut out = Vec::new();
    walk("", table, &mut out);
    out.sort();
    out
}

fn nearest<'a>(key: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::normalized_damerau_levenshtein(key, c), c))
        .filter(|(score, _)| *score >= 0.4)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

fn lookup_mut<'a>(table: &'a mut Table, path: &str) -> Option<&'a mut Value> {
    let mut parts = path.split('.');
    let first = parts.next()?;
    let mut value = table.get_mut(first)?;
    for part in parts {
        value = value.as_table_mut()?.get_mut(part)?;
    }
    Some(value)
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Replaces the value at `path`, which must already exist in the file.
pub fn set_existing(table: &mut Table, path: &str, value: Value) -> Result<(), ConfigError> {
    let location = format!("--set {path}");
    if let Some(slot) = lookup_mut(table, path) {
        *slot = value;
        return Ok(());
    }
    let paths = key_paths(table);
    let hint = match nearest(path, paths.iter().map(String::as_str)) {
        Some(near) => format!("; did you mean `{near}`?"),
        None => String::new(),
    };
    Err(ConfigError::one(location, format!("no key `{path}` in the scenario file{hint}")))
}

/// Applies `key=value` overrides in order.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<(), ConfigError> {
    let mut issues = Vec::new();
    for raw in overrides {
        let Some((key, value)) = raw.split_once('=') else {
            issues.push(Issue {
                location: format!("--set {raw}"),
                message: "expected key=value".into(),
            });
            continue;
        };
        if let Err(ConfigError(mut more)) = set_existing(table, key.trim(), parse_value(value.trim())) {
            issues.append(&mut more);
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ConfigError(issues))
    }
}

/// A table being read, tracking which keys were consumed.
struct Section<'a> {
    path: String,
    table: &'a Table,
    known: Vec<&'static str>,
    issues: &'a mut Vec<Issue>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table, issues: &'a mut Vec<Issue>) -> Self {
        Self {
            path: path.to_string(),
            table,
            known: Vec::new(),
            issues,
        }
    }

    fn key_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let location = self.key_path(key);
        self.issues.push(Issue {
            location,
            message: message.into(),
        });
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.table.get(key)
    }

    fn required(&mut self, key: &'static str) -> Option<&'a Value> {
        let v = self.get(key);
        if v.is_none() {
            self.issue(key, "missing required key");
        }
        v
    }

    fn real_value(&mut self, key: &str, v: &Value) -> Option<f64> {
        match number(v) {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                self.issue(key, "must be finite");
                None
            }
            None => {
                self.issue(key, format!("expected a number, found {}", v.type_str()));
                None
            }
        }
    }

    fn real(&mut self, key: &'static str, default: f64) -> f64 {
        match self.get(key) {
            Some(v) => self.real_value(key, v).unwrap_or(default),
            None => default,
        }
    }

    fn required_real(&mut self, key: &'static str) -> Option<f64> {
        let v = self.required(key)?;
        self.real_value(key, v)
    }

    fn count_value(&mut self, key: &str, v: &Value) -> Option<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(_) => {
                self.issue(key, "must be non-negative");
                None
            }
            other => {
                self.issue(key, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn count(&mut self, key: &'static str, default: usize) -> usize {
        match self.get(key) {
            Some(v) => self.count_value(key, v).unwrap_or(default),
            None => default,
        }
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> bool {
        match self.get(key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.issue(key, format!("expected a boolean, found {}", other.type_str()));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, key: &'static str) -> Option<&'a str> {
        match self.get(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.issue(key, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &'static str, options: &[(&'static str, T)], default: T) -> T {
        let Some(s) = self.string(key) else {
            return default;
        };
        if let Some((_, v)) = options.iter().find(|(name, _)| *name == s) {
            return *v;
        }
        let names: Vec<String> = options.iter().map(|(n, _)| format!("`{n}`")).collect();
        self.issue(key, format!("unknown value `{s}`, expected one of {}", names.join(", ")));
        default
    }

    fn complex(&mut self, key: &'static str) -> Option<C64> {
        let v = self.get(key)?;
        let path = self.key_path(key);
        complex(v, &path, self.issues)
    }

    fn table(&mut self, key: &'static str) -> Option<&'a Table> {
        match self.get(key)? {
            Value::Table(t) => Some(t),
            other => {
                self.issue(key, format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    /// Reports keys that were never requested.
    fn finish(self) {
        for key in self.table.keys() {
            if self.known.contains(&key.as_str()) {
                continue;
            }
            let hint = match nearest(key, self.known.iter().copied()) {
                Some(near) => format!("; did you mean `{near}`?"),
                None => format!("; valid keys: {}", self.known.join(", ")),
            };
            let location = self.key_path(key);
            self.issues.push(Issue {
                location,
                message: format!("unknown key `{key}`{hint}"),
            });
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Integer(i) => Some(*i as f64),
        Value::Float(x) => Some(*x),
        _ => None,
    }
}

/// A real number, `[re, im]`, `{ re, im }` or `{ abs, arg }`.
fn complex(v: &Value, path: &str, issues: &mut Vec<Issue>) -> Option<C64> {
    let mut fail = |message: String| {
        issues.push(Issue {
            location: path.to_string(),
            message,
        });
        None
    };
    let z = match v {
        Value::Integer(_) | Value::Float(_) => C64::new(number(v)?, 0.0),
        Value::Array(items) => {
            if items.len() != 2 {
                return fail(format!("a complex pair needs 2 entries [re, im], found {}", items.len()));
            }
            match (number(&items[0]), number(&items[1])) {
                (Some(re), Some(im)) => C64::new(re, im),
                _ => return fail("complex pair entries must be numbers".into()),
            }
        }
        Value::Table(t) => {
            let mut keys: Vec<&str> = t.keys().map(String::as_str).collect();
            keys.sort_unstable();
            let get = |k: &str| t.get(k).and_then(number);
            match keys.as_slice() {
                ["im", "re"] => match (get("re"), get("im")) {
                    (Some(re), Some(im)) => C64::new(re, im),
                    _ => return fail("`re` and `im` must be numbers".into()),
                },
                ["abs", "arg"] => match (get("abs"), get("arg")) {
                    (Some(r), Some(phi)) => C64::from_polar(r, phi),
                    _ => return fail("`abs` and `arg` must be numbers".into()),
                },
                _ => {
                    return fail(format!(
                        "a complex table needs exactly {{re, im}} or {{abs, arg}}, found {{{}}}",
                        keys.join(", ")
                    ))
                }
            }
        }
        other => return fail(format!("expected a complex number, found {}", other.type_str())),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Some(z)
    } else {
        fail("must be finite".into())
    }
}

fn is_complex_table(t: &Table) -> bool {
    !t.contains_key("kind")
}

/// A complex constant, or a table with `kind` set to `constant`,
/// `polynomial`, `sinusoid` or `exp_ramp`.
fn coefficient(v: &Value, path: &str, issues: &mut Vec<Issue>) -> Option<Coefficient> {
    let t = match v {
        Value::Table(t) if !is_complex_table(t) => t,
        _ => return complex(v, path, issues).map(Coefficient::Constant),
    };
    let mut sec = Section::new(path, t, issues);
    let kind = sec.string("kind")?;
    let zero = C64::new(0.0, 0.0);
    let out = match kind {
        "constant" => {
            sec.required("value")?;
            sec.complex("value").map(Coefficient::Constant)
        }
        "polynomial" => match sec.required("coefficients")? {
            Value::Array(items) => {
                let base = sec.key_path("coefficients");
                let mut cs = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    cs.push(complex(item, &format!("{base}[{i}]"), sec.issues));
                }
                if cs.is_empty() {
                    sec.issue("coefficients", "needs at least one entry");
                    None
                } else {
                    cs.into_iter().collect::<Option<Vec<_>>>().map(Coefficient::Polynomial)
                }
            }
            other => {
                sec.issue("coefficients", format!("expected an array, found {}", other.type_str()));
                None
            }
        },
        "sinusoid" => {
            let a = sec.complex("a").unwrap_or(zero);
            let b = sec.complex("b").unwrap_or(zero);
            let c = sec.complex("c").unwrap_or(zero);
            sec.required_real("nu").map(|nu| Coefficient::Sinusoid { a, b, c, nu })
        }
        "exp_ramp" => {
            sec.required("c")?;
            let c = sec.complex("c");
            let sigma = sec.required_real("sigma");
            match (c, sigma) {
                (Some(c), Some(sigma)) => Some(Coefficient::ExpRamp { c, sigma }),
                _ => None,
            }
        }
        other => {
            sec.issue(
                "kind",
                format!("unknown kind `{other}`, expected one of `constant`, `polynomial`, `sinusoid`, `exp_ramp`"),
            );
            return None;
        }
    };
    sec.finish();
    out
}

fn grid(v: &Value, issues: &mut Vec<Issue>) -> Option<TimeGrid> {
    let (t0, t1, steps) = match v {
        Value::Array(items) => {
            if items.len() != 3 {
                issues.push(Issue {
                    location: "grid".into(),
                    message: format!("expected [t0, t1, steps], found {} entries", items.len()),
                });
                return None;
            }
            let steps = match &items[2] {
                Value::Integer(n) if *n >= 0 => Some(*n as usize),
                _ => None,
            };
            match (number(&items[0]), number(&items[1]), steps) {
                (Some(t0), Some(t1), Some(steps)) => (t0, t1, steps),
                _ => {
                    issues.push(Issue {
                        location: "grid".into(),
                        message: "expected [t0, t1, steps] with numeric times and an integer step count".into(),
                    });
                    return None;
                }
            }
        }
        Value::Table(t) => {
            let mut sec = Section::new("grid", t, issues);
            let t0 = sec.real("t0", 0.0);
            let t1 = sec.required_real("t1");
            let steps = match sec.required("steps") {
                Some(v) => sec.count_value("steps", v),
                None => None,
            };
            sec.finish();
            (t0, t1?, steps?)
        }
        other => {
            issues.push(Issue {
                location: "grid".into(),
                message: format!("expected [t0, t1, steps] or a table, found {}", other.type_str()),
            });
            return None;
        }
    };
    match TimeGrid::new(t0, t1, steps) {
        Ok(g) => Some(g),
        Err(e) => {
            issues.push(Issue {
                location: "grid".into(),
                message: e.to_string(),
            });
            None
        }
    }
}

fn solver(t: Option<&Table>, issues: &mut Vec<Issue>) -> SolverOptions {
    let d = SolverOptions::default();
    let Some(t) = t else {
        return d;
    };
    let mut sec = Section::new("solver", t, issues);
    let substeps = match sec.get("substeps") {
        None => d.substeps,
        Some(Value::String(s)) if s == "auto" => Substeps::Auto,
        Some(Value::Integer(n)) if *n >= 1 => Substeps::Fixed(*n as usize),
        Some(_) => {
            sec.issue("substeps", "expected \"auto\" or a positive integer");
            d.substeps
        }
    };
    let out = SolverOptions {
        substeps,
        step_norm_target: sec.real("step_norm_target", d.step_norm_target),
        step_norm_limit: sec.real("step_norm_limit", d.step_norm_limit),
        guard: sec.count("guard", d.guard),
        tail_warn: sec.real("tail_warn", d.tail_warn),
        probe_levels: sec.count("probe_levels", d.probe_levels),
        measure_order: sec.boolean("measure_order", d.measure_order),
    };
    for (key, v) in [("step_norm_target", out.step_norm_target), ("step_norm_limit", out.step_norm_limit)] {
        if v <= 0.0 {
            sec.issue(key, "must be positive");
        }
    }
    if out.step_norm_target > out.step_norm_limit {
        sec.issue("step_norm_target", "must not exceed step_norm_limit");
    }
    sec.finish();
    out
}

fn tolerances(t: Option<&Table>, issues: &mut Vec<Issue>) -> Tolerances {
    let d = Tolerances::default();
    let Some(t) = t else {
        return d;
    };
    let mut sec = Section::new("tolerances", t, issues);
    let out = Tolerances {
        algebraic: sec.real("algebraic", d.algebraic),
        metric: sec.real("metric", d.metric),
        integrator: sec.real("integrator", d.integrator),
        quasi_hermiticity: sec.real("quasi_hermiticity", d.quasi_hermiticity),
        stencil: sec.real("stencil", d.stencil),
        perturbative_floor: sec.real("perturbative_floor", d.perturbative_floor),
        perturbative_c: sec.real("perturbative_c", d.perturbative_c),
    };
    for key in sec.known.clone() {
        if let Some(v) = t.get(key).and_then(number) {
            if v < 0.0 {
                sec.issue(key, "must be non-negative");
            }
        }
    }
    sec.finish();
    out
}

/// Builds a validated [`Config`] from a table; `default_name` is used when
/// the file has no `name`.
pub fn from_table(table: &Table, default_name: &str) -> Result<Config, ConfigError> {
    let mut issues = Vec::new();
    let mut sec = Section::new("", table, &mut issues);

    match sec.required("schema") {
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(other) => sec.issue("schema", format!("unsupported schema {other}, expected {SCHEMA_VERSION}")),
        None => {}
    }
    let name = sec.string("name").unwrap_or(default_name).to_string();
    let kappa = sec.required_real("kappa");
    if let Some(k) = kappa {
        if k < 0.0 {
            sec.issue("kappa", format!("must be >= 0, got {k}"));
        }
    }
    let dim = sec.count("dim", dyson_core::fock::DEFAULT_DIM);
    if dim < 2 {
        sec.issue("dim", format!("must be at least 2, got {dim}"));
    }
    let mut coefs = Vec::new();
    for key in ["omega", "alpha", "beta"] {
        let v = sec.required(key);
        let path = sec.key_path(key);
        coefs.push(v.and_then(|v| coefficient(v, &path, sec.issues)));
    }
    let grid = sec.required("grid").and_then(|v| grid(v, sec.issues));
    let order = sec.choice(
        "order",
        &[("first", PerturbationOrder::First), ("second", PerturbationOrder::Second)],
        PerturbationOrder::Second,
    );
    let lr_drive = sec.choice(
        "lr_drive",
        &[("published", LrDrive::Published), ("consistent", LrDrive::Consistent)],
        LrDrive::Consistent,
    );
    let (mut gamma0, mut lambda0, mut theta0) = (None, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    if let Some(t) = sec.table("initial_map") {
        let mut im = Section::new("initial_map", t, sec.issues);
        gamma0 = im.complex("gamma0");
        lambda0 = im.complex("lambda0").unwrap_or(lambda0);
        theta0 = im.complex("theta0").unwrap_or(theta0);
        im.finish();
    }
    let solver_table = sec.table("solver");
    let solver = solver(solver_table, sec.issues);
    if solver.guard >= dim {
        let location = if solver_table.is_some_and(|t| t.contains_key("guard")) { "solver.guard" } else { "dim" };
        sec.issues.push(Issue {
            location: location.into(),
            message: format!("guard band {} must be smaller than dim {dim}", solver.guard),
        });
    }
    let tol_table = sec.table("tolerances");
    let tolerances = tolerances(tol_table, sec.issues);
    sec.finish();

    let (omega, alpha, beta) = (coefs.remove(0), coefs.remove(0), coefs.remove(0));
    if !issues.is_empty() {
        return Err(ConfigError(issues));
    }
    let (Some(kappa), Some(omega), Some(alpha), Some(beta), Some(grid)) = (kappa, omega, alpha, beta, grid) else {
        unreachable!("missing values are always reported as issues")
    };
    let mut scenario = Scenario::new(name, omega, alpha, beta, kappa, grid);
    scenario.dim = dim;
    scenario.gamma0 = gamma0;
    scenario.lambda0 = lambda0;
    scenario.theta0 = theta0;
    scenario.order = order;
    scenario.lr_drive = lr_drive;
    scenario.solver = solver;
    scenario
        .validate()
        .map_err(|e| ConfigError::one("scenario", e.to_string()))?;
    Ok(Config { scenario, tolerances })
}

/// Reads, overrides and validates a scenario file.
pub fn parse_scenario(path: &Path, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut table = load_table(path)?;
    apply_overrides(&mut table, overrides)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    from_table(&table, stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dyson_core::library;
    use proptest::prelude::*;

    const S1: &str = r#"
schema = 1
name = "s1"
kappa = 0.1
dim = 32
omega = 1.0
alpha = [0.0, 1.0]
beta = { re = 0.0, im = 1.0 }
grid = [0.0, 6.283185307179586, 1000]
"#;

    fn parse(text: &str) -> Result<Config, ConfigError> {
        from_table(&parse_table(text, "test.toml")?, "test")
    }

    fn first_issue(text: &str) -> Issue {
        parse(text).unwrap_err().0.remove(0)
    }

    #[test]
    fn minimal_file_is_s1() {
        let c = parse(S1).unwrap();
        let s1 = library::s1();
        let s = &c.scenario;
        assert_eq!(s.name, "s1");
        assert_eq!((s.omega.clone(), s.alpha.clone(), s.beta.clone()), (s1.omega, s1.alpha, s1.beta));
        assert_eq!(s.kappa, s1.kappa);
        assert_eq!(s.dim, s1.dim);
        assert_eq!(s.grid, s1.grid);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn negative_kappa_names_the_key() {
        let issue = first_issue(&S1.replace("kappa = 0.1", "kappa = -0.1"));
        assert_eq!(issue.location, "kappa");
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let issue = first_issue(&format!("{S1}omega_typo = 2.0\n"));
        assert_eq!(issue.location, "omega_typo");
        assert!(issue.message.contains("did you mean `omega`"), "{}", issue.message);
        let issue = first_issue(&format!("{S1}[solver]\nstep_norm_targt = 0.01\n"));
        assert_eq!(issue.location, "solver.step_norm_targt");
        assert!(issue.message.contains("`step_norm_target`"), "{}", issue.message);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let issue = first_issue("schema = 1\nkappa = = 0.1\n");
        assert!(issue.location.starts_with("test.toml:2:"), "{}", issue.location);
    }

    #[test]
    fn wrong_arity_and_degenerate_grid() {
        let issue = first_issue(&S1.replace("alpha = [0.0, 1.0]", "alpha = [0.0, 1.0, 2.0]"));
        assert_eq!(issue.location, "alpha");
        assert!(issue.message.contains("2 entries"));
        let issue = first_issue(&S1.replace("6.283185307179586, 1000", "0.0, 1000"));
        assert_eq!(issue.location, "grid");
        let issue = first_issue(&S1.replace("6.283185307179586, 1000]", "6.283185307179586]"));
        assert_eq!(issue.location, "grid");
    }

    #[test]
    fn missing_keys_are_all_listed() {
        let err = parse("schema = 1\n").unwrap_err();
        let locations: Vec<&str> = err.0.iter().map(|i| i.location.as_str()).collect();
        assert_eq!(locations, ["kappa", "omega", "alpha", "beta", "grid"]);
    }

    #[test]
    fn schema_version_is_checked() {
        assert_eq!(first_issue(&S1.replace("schema = 1", "schema = 2")).location, "schema");
    }

    #[test]
    fn coefficient_kinds() {
        let text = format!(
            "{}\n[omega]\nkind = \"sinusoid\"\nb = 0.3\nc = 1\nnu = 1\n",
            S1.replace("omega = 1.0\n", "")
        );
        let c = parse(&text).unwrap();
        assert_eq!(c.scenario.omega, library::time_dependent_valid().omega);
        let text = S1.replace("alpha = [0.0, 1.0]", "alpha = { kind = \"polynomial\", coefficients = [1, [0, 2]] }");
        let c = parse(&text).unwrap();
        assert_eq!(
            c.scenario.alpha,
            Coefficient::Polynomial(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)])
        );
        let issue = first_issue(&S1.replace("alpha = [0.0, 1.0]", "alpha = { kind = \"ramp\" }"));
        assert_eq!(issue.location, "alpha.kind");
    }

    #[test]
    fn sections_are_read() {
        let text = format!(
            "{S1}order = \"first\"\nlr_drive = \"published\"\n[initial_map]\ngamma0 = [0, -0.2]\n\
             [solver]\nsubsteps = 12\nguard = 4\n[tolerances]\nmetric = 1e-5\n"
        );
        let c = parse(&text).unwrap();
        assert_eq!(c.scenario.order, PerturbationOrder::First);
        assert_eq!(c.scenario.lr_drive, LrDrive::Published);
        assert_eq!(c.scenario.gamma0, Some(C64::new(0.0, -0.2)));
        assert_eq!(c.scenario.solver.substeps, Substeps::Fixed(12));
        assert_eq!(c.scenario.guard(), 4);
        assert_eq!(c.tolerances.metric, 1e-5);
    }

    #[test]
    fn guard_must_fit_inside_dim() {
        let issue = first_issue(&S1.replace("dim = 32", "dim = 6"));
        assert_eq!(issue.location, "dim");
    }

    #[test]
    fn overrides_only_touch_existing_keys() {
        let mut t = parse_table(S1, "t").unwrap();
        apply_overrides(&mut t, &["kappa=0.05".into(), "alpha=[1, 0]".into()]).unwrap();
        let c = from_table(&t, "t").unwrap();
        assert_eq!(c.scenario.kappa, 0.05);
        assert_eq!(c.scenario.alpha, Coefficient::Constant(C64::new(1.0, 0.0)));
        let err = apply_overrides(&mut t, &["kapa=0.2".into()]).unwrap_err();
        assert!(err.0[0].message.contains("did you mean `kappa`"), "{}", err);
        assert!(apply_overrides(&mut t, &["kappa".into()]).is_err());
    }

    proptest! {
        #[test]
        fn complex_forms_agree(re in -1e3f64..1e3, im in -1e3f64..1e3) {
            let mut issues = Vec::new();
            let pair = complex(&parse_value(&format!("[{re:e}, {im:e}]")), "z", &mut issues).unwrap();
            let rect = complex(&parse_value(&format!("{{ re = {re:e}, im = {im:e} }}")), "z", &mut issues).unwrap();
            let z = C64::new(re, im);
            let polar = complex(
                &parse_value(&format!("{{ abs = {:e}, arg = {:e} }}", z.norm(), z.arg())),
                "z",
                &mut issues,
            )
            .unwrap();
            prop_assert!(issues.is_empty());
            prop_assert_eq!(pair, z);
            prop_assert_eq!(rect, z);
            prop_assert!((polar - z).norm() <= 1e-12 * z.norm().max(1.0));
        }

        #[test]
        fn key_paths_are_settable(v in -10.0f64..10.0) {
            let table = parse_table(&format!("{S1}[solver]\nguard = 6\n"), "t").unwrap();
            for path in key_paths(&table) {
                let mut t = table.clone();
                prop_assert!(set_existing(&mut t, &path, Value::Float(v)).is_ok(), "{}", path);
            }
        }
    }
}
