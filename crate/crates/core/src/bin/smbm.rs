use std::process::ExitCode;

use smbm_core::cli::{execute, parse_args, CliError};

fn main() -> ExitCode {
    let settings = match parse_args(std::env::args_os()) {
        Ok(s) => s,
        Err(CliError::Args(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match execute(&settings) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12}  warning",
        "snr_db", "mse", "ber", "abep", "bit_errors"
    );
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"));
    for r in &outcome.records {
        println!(
            "{:>8.2} {:>12} {:>12} {:>12} {:>12}  {}",
            r.snr_db,
            show(r.mse_empirical),
            show(r.ber),
            show(r.abep_bound),
            r.bit_errors.map_or_else(|| "-".to_string(), |e| e.to_string()),
            r.warning.as_deref().unwrap_or("")
        );
    }
    println!("wrote {}", settings.out.display());
    if settings.warnings_as_errors && outcome.warnings > 0 {
        eprintln!("{} SNR point(s) stopped on max_blocks", outcome.warnings);
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
