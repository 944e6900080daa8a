use std::process::ExitCode;

fn main() -> ExitCode {
    match sparse_softmax_cli::run(std::env::args_os()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if let Some(line) = &outcome.diagnostic {
                eprintln!("error: {line}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
                use clap::error::ErrorKind;
                if matches!(
                    clap_err.kind(),
                    ErrorKind::DisplayHelp
                        | ErrorKind::DisplayVersion
                        | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                ) {
                    clap_err.exit();
                }
                let rendered = clap_err.to_string();
                eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
                return ExitCode::from(2);
            }
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
