use clap::Parser;
use lowlight_sched::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    run(Cli::parse())?;
    Ok(())
}
