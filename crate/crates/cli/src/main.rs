mod args;
mod commands;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::run::{resolve_out_dir, CliResult, Run, RunConfig};

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    let name = cli.command.name();
    let config = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    let mut run = Run::new(resolve_out_dir(cli.out_dir.as_deref(), name), config, name, argv)?;
    if let Some(path) = &cli.config {
        run.input(path)?;
    }
    let result = match &cli.command {
        Command::Prepare(a) => commands::prepare(&mut run, a),
        Command::Synth(a) => commands::synth(&mut run, a),
        Command::Train(a) => commands::train(&mut run, a),
        Command::Label(a) => commands::label(&mut run, a),
        Command::Baseline(a) => commands::baseline(&mut run, a),
        Command::Eval(a) => commands::eval(&mut run, a),
        Command::AnalyzeBc(a) => commands::analyze_bc_cmd(&mut run, a),
        Command::IdentifyArgs(a) => commands::identify(&mut run, a),
        Command::SweepAugment(a) => commands::sweep_augment(&mut run, a),
    };
    // a diverged run still documents what it wrote
    let manifest = run.finish();
    result?;
    let manifest = manifest?;
    for (file, digest) in &manifest.outputs {
        println!("{digest}  {file}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&argv);
    match execute(cli, argv.into_iter().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srlt: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
