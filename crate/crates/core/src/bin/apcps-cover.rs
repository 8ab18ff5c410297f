use apcps::cli::{run, Cli};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    let rep = run(&cli.command);
    if let Some(e) = &rep.error {
        eprintln!("error: {e}");
    }
    print!("{}", rep.render(cli.json_like));
    std::process::exit(rep.exit_code);
}
