use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multicat_cli::{check, open_dataset, repl, run, CheckOutcome, Failure, Format};
use multicat_service::{serve, ServeConfig};

#[derive(Parser)]
#[command(name = "multicat", version, about = "Query multi-model datasets through their schema category")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query and print the result.
    Query(QueryArgs),
    /// Check category and functor laws for every dataset.
    Check {
        #[arg(long, default_value = "datasets")]
        data: PathBuf,
    },
    /// Interactive loop over one dataset.
    Repl {
        #[arg(short, long)]
        dataset: String,
        #[arg(long, default_value = "datasets")]
        data: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "datasets")]
        data: PathBuf,
        /// Allowed browser origin, e.g. http://localhost:5173.
        #[arg(long)]
        cors: Option<String>,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// Dataset name under --data, or a dataset directory.
    #[arg(short, long)]
    dataset: String,
    #[arg(long, default_value = "datasets")]
    data: PathBuf,
    /// Query text.
    #[arg(short, long, required_unless_present = "file", conflicts_with = "file")]
    query: Option<String>,
    /// File holding the query; `-` reads stdin.
    #[arg(short, long)]
    file: Option<PathBuf>,
    /// Output format; defaults to the one matching the TO model.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn read_query(args: &QueryArgs) -> Result<String, Failure> {
    match (&args.query, &args.file) {
        (Some(q), _) => Ok(q.clone()),
        (None, Some(path)) if path.as_os_str() == "-" => {
            io::read_to_string(io::stdin()).map_err(|e| Failure::Setup(format!("stdin: {e}")))
        }
        (None, Some(path)) => {
            std::fs::read_to_string(path).map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))
        }
        (None, None) => Err(Failure::Setup("no query given".into())),
    }
}

fn query(args: QueryArgs) -> Result<String, Failure> {
    let store = open_dataset(&args.data, &args.dataset)?;
    let text = read_query(&args)?;
    run(&text, &store, args.format)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Query(args) => match query(args) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Check { data } => {
            let stdout = io::stdout();
            match check(&data, &mut stdout.lock()) {
                Ok(CheckOutcome::Ok) => ExitCode::SUCCESS,
                Ok(CheckOutcome::Violations) => ExitCode::from(1),
                Ok(CheckOutcome::LoadError) | Err(_) => ExitCode::from(2),
            }
        }
        Command::Repl { dataset, data } => {
            let store = match open_dataset(&data, &dataset) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(e.exit_code());
                }
            };
            let stdout = io::stdout();
            let mut out = stdout.lock();
            let result = repl(&store, io::stdin().lock(), &mut out);
            let _ = out.flush();
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Serve { host, port, data, cors } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match runtime.block_on(serve(ServeConfig { host, port, data, cors })) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
