use std::path::PathBuf;

use causticlab::fixtures;
use causticlab::specfile::SpecFile;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn shipped_fixtures_are_byte_stable() {
    for name in ["a3", "b3", "h3", "v0", "corrupted"] {
        let (spec, curves) = fixtures::builtin(name).unwrap();
        let emitted = SpecFile::from_manifold(&spec, &curves).to_json().unwrap();
        let shipped = std::fs::read_to_string(fixture_dir().join(format!("{name}.json"))).unwrap();
        assert_eq!(emitted, shipped, "{name}.json differs from the built-in fixture");
    }
}

#[test]
fn shipped_fixtures_rebuild_the_builtins() {
    for name in ["a3", "b3", "h3"] {
        let file = SpecFile::from_path(&fixture_dir().join(format!("{name}.json"))).unwrap();
        let (spec, curves) = file.build().unwrap();
        let (builtin, builtin_curves) = fixtures::builtin(name).unwrap();
        assert_eq!(spec.potential, builtin.potential);
        assert_eq!(spec.euler_linear, builtin.euler_linear);
        assert_eq!(spec.charge, builtin.charge);
        assert_eq!(curves.len(), builtin_curves.len());
        for (a, b) in curves.iter().zip(&builtin_curves) {
            assert_eq!(a.param, b.param);
            assert_eq!(a.s_range, b.s_range);
        }
    }
}
