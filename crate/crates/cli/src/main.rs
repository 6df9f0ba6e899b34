use std::process::ExitCode;

use cbs_cli::args::Cli;
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = cli.command.resolve().and_then(|cfg| cbs_cli::run(&cfg));
    match result {
        Ok(report) => {
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            if let Some((l, c)) = report.oracle_l2 {
                log::info!("oracle relative L2: ladder {l:e}, crossed {c:e}");
            }
            log::info!("finished in {:.3} s", report.wall_time_s);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}
