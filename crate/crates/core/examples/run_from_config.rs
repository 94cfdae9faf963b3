//! Runs an experiment from TOML text, the way the `fracwave` binary does,
//! and checks the manifest it leaves behind.

use fracwave::cli::config::ExperimentConfig;
use fracwave::cli::output::verify_manifest;
use fracwave::cli::run::run;

const CONFIG: &str = r#"
command = "resolvent-scan"
alpha = 1.0
profile = "holder:0.5"
h_grid = [0.25, 0.177, 0.125, 0.088]
z_grid = [0.95, 1.0, 1.05]
"#;

fn main() -> fracwave::Result<()> {
    let dir = std::env::temp_dir().join("fracwave-example");
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.output_dir = Some(dir);
    let report = run(&cfg)?;
    for (key, value) in &report.summary {
        println!("{key} = {value}");
    }
    let checked = verify_manifest(&report.manifest)?;
    println!("{} files under {} match their checksums", checked, report.dir.display());
    Ok(())
}
