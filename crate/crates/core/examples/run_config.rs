//! Runs a pipeline from an inline config and lists the artifacts written.

use cspin::cli::{self, ExperimentConfig};

const CONFIG: &str = r#"
pipeline = "oracle"
seed = 7
model = { preset = "nearest-neighbor", c = 0.5 }
graph = { kind = "zd", dim = 1, radius = 6 }
sim = { dt = 0.001, horizon = 0.5, replicas = 200, record_stride = 100 }
"#;

fn main() {
    let cfg = ExperimentConfig::parse(CONFIG).expect("valid config");
    let out = std::env::temp_dir().join("cspin-run-config");
    if let Err(e) = cli::run(&cfg, &out) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
    for entry in std::fs::read_dir(&out).unwrap() {
        let entry = entry.unwrap();
        println!("{} ({} bytes)", entry.path().display(), entry.metadata().unwrap().len());
    }
}
