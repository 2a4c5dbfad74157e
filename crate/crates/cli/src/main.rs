use clap::Parser;
use subvoter_cli::args::Cli;
use subvoter_cli::ErrorRecord;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            std::process::exit(0);
        }
        Err(e) => {
            let rec = ErrorRecord::new("usage", e.to_string().trim_end().to_string(), 2);
            eprintln!("{}", serde_json::to_string(&rec).expect("error record serializes"));
            std::process::exit(2);
        }
    };
    std::process::exit(subvoter_cli::run(cli));
}
