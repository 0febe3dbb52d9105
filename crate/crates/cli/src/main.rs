use std::panic;
use std::process::ExitCode;

use mocapvar_cli::error::CliError;

fn main() -> ExitCode {
    panic::set_hook(Box::new(|_| {}));
    let result = panic::catch_unwind(|| mocapvar_cli::run(std::env::args_os())).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(CliError::Internal(format!("internal error: {msg}")))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
