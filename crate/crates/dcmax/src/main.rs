use clap::Parser;

fn main() -> anyhow::Result<()> {
    dcmax::cli::run(dcmax::cli::Cli::parse())
}
