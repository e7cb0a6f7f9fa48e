//! Dispersive-vs-JC comparison at one drive strength.
//!
//! cargo run --release --example jc_point -- [lambda] [n_max] [kmax]

use istms::lindblad::{jc_vs_dispersive_error, ComparisonOptions, DEFAULT_KMAX, DEFAULT_N_MAX};
use istms::params::SystemParams;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map(|s| s.parse().expect("numeric argument")).unwrap_or(default);
    let lambda = arg(0, 0.45);
    let n_max = arg(1, DEFAULT_N_MAX as f64) as usize;
    let kmax = arg(2, DEFAULT_KMAX as f64) as usize;
    let p = SystemParams::comparison_point(lambda);
    let t = std::time::Instant::now();
    match jc_vs_dispersive_error(&p, &ComparisonOptions { n_max, kmax, ..Default::default() }) {
        Ok(c) => println!("{}", serde_json::to_string_pretty(&c).unwrap()),
        Err(e) => eprintln!("error: {e}"),
    }
    eprintln!("elapsed {:.2?}", t.elapsed());
}
