//! Run a scenario config and print its rows.
//!
//!     cargo run --release --example sweep -- crates/qsl/configs/gaussian_pair.toml

use qsl::harness::{load_config, run_config, Results};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/gaussian_pair.toml").into());
    let cfg = load_config(path.as_ref())?;
    let out = run_config(&cfg)?;
    match out.results {
        Results::Sweeps(sweeps) => {
            for s in &sweeps {
                let ns: Vec<String> = s.points.iter().map(|p| p.n_star.map_or("-".into(), |n| n.to_string())).collect();
                println!("{} {:>10}: {} = {:?}, N* = [{}], slope {:.2?}", s.scenario, s.channel, s.axis_name, s.points.iter().map(|p| p.axis_value).collect::<Vec<_>>(), ns.join(", "), s.loglog_slope());
            }
        }
        Results::Phase(rows) => rows.iter().for_each(|r| println!("{r:?}")),
        Results::Parity(rep) => println!("{}", serde_json::to_string_pretty(&rep)?),
    }
    println!("runtime {:.1}s", out.runtime);
    Ok(())
}
