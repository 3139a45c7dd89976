use clap::Parser;

fn main() {
    let cli = pwcet_cli::Cli::parse();
    let code = pwcet_cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
