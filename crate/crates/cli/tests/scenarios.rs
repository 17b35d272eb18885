//! The bundled scenario files describe the library scenarios of the same name.

use std::path::PathBuf;

use dyson_cli::config::parse_scenario;
use dyson_core::library;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

#[test]
fn bundled_files_match_the_library() {
    for name in library::NAMES {
        let parsed = parse_scenario(&bundled(name), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        let s = parsed.scenario;
        let expected = library::by_name(name).unwrap();
        assert_eq!(s.name, expected.name);
        assert_eq!(s.omega, expected.omega, "{name}");
        assert_eq!(s.alpha, expected.alpha, "{name}");
        assert_eq!(s.beta, expected.beta, "{name}");
        assert_eq!(s.kappa, expected.kappa, "{name}");
        assert_eq!(s.dim, expected.dim, "{name}");
        assert_eq!(s.grid, expected.grid, "{name}");
        assert_eq!(s.order, expected.order, "{name}");
        assert_eq!(s.lr_drive, expected.lr_drive, "{name}");
        assert_eq!(s.solver, expected.solver, "{name}");
    }
}

#[test]
fn pt_sweep_file_starts_at_zero_phase() {
    let s = parse_scenario(&bundled("pt_sweep"), &[]).unwrap().scenario;
    let expected = library::pt_sweep_point(0.0);
    assert_eq!(s.alpha, expected.alpha);
    assert_eq!(s.beta, expected.beta);
}

#[test]
fn overrides_apply_before_validation() {
    let err = parse_scenario(&bundled("s1"), &["kappa=-0.1".into()]).unwrap_err();
    assert_eq!(err.0[0].location, "kappa");
    let s = parse_scenario(&bundled("s1"), &["grid.steps=200".into()]).unwrap().scenario;
    assert_eq!(s.grid.steps(), 200);
}
