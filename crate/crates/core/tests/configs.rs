use std::path::Path;

use esdg::config::RunConfig;
use esdg::run::resolve;

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let c = RunConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            c.validate().unwrap();
            let r = resolve(&c).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(r.stepper.cfl > 0.0 && r.stepper.t_end > 0.0);
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
