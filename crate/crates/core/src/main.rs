use std::process::ExitCode;

fn main() -> ExitCode {
    match rgg_distcolor::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rgg-distcolor: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
