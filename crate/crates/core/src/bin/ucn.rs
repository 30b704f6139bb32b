use std::process::ExitCode;

fn main() -> ExitCode {
    match ucn::cli::run(std::env::args_os()) {
        Ok(Some(dir)) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, text) = ucn::cli::describe(&e);
            if !text.is_empty() {
                eprintln!("{text}");
            }
            ExitCode::from(code as u8)
        }
    }
}
