use clap::error::ErrorKind;
use clap::Parser;
use prigen_cli::args::Cli;
use prigen_cli::commands;

fn main() {
    let env = env_logger::Env::new().filter_or("PRIGEN_LOG", "error");
    env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print to stdout and succeed; usage errors
            // print to stderr and exit 1.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    if let Err(err) = commands::dispatch(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
