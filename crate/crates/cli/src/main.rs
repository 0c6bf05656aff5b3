use clap::Parser;
use ldp_cli::{load_config, run, Task};
use std::path::PathBuf;
use std::process::ExitCode;

/// Large-deviation experiments for Markov chains with several classes.
#[derive(Parser)]
#[command(name = "ldp", version)]
struct Args {
    /// One of: simulate, classes, admissible, verify-maps, estimate-rate,
    /// dv-bound, verify-inequalities, lv-demo, escape-probe.
    task: Task,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Artifact directory; the config `output`, else `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = load_config(&args.config).and_then(|mut config| {
        if let Some(s) = args.seed {
            config.seed = s;
        }
        if let Some(w) = args.workers {
            config.workers = w;
        }
        let out = args.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
        run(args.task, config, &out)
    });
    match result {
        Ok(o) => {
            for line in &o.summary {
                println!("{}: {line}", o.task);
            }
            for p in &o.artifacts {
                println!("wrote {}", p.display());
            }
            if let Some(pass) = o.pass {
                println!("{}: {}", o.task, if pass { "PASS" } else { "FAIL" });
            }
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("ldp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
