mod args;
mod commands;
mod manifest;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::Parser;

use args::{Cli, Command};
use commands::Artifacts;
use manifest::{strip_run_flags, RunManifest};

/// Failure with its exit code: 1 usage, 2 solver, 3 path did not reach the source.
pub enum Fail {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
    Stalled(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Usage(_) => 1,
            Fail::Solver(_) => 2,
            Fail::Stalled(_) => 3,
        }
    }
}

pub type Outcome<T> = Result<T, Fail>;

/// Tags a fallible result with the exit class it belongs to.
pub trait Tag<T> {
    fn usage(self, flag: &str) -> Outcome<T>;
    fn solver(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Tag<T> for Result<T, E> {
    fn usage(self, flag: &str) -> Outcome<T> {
        self.map_err(|e| Fail::Usage(e.into().context(flag.to_string())))
    }

    fn solver(self) -> Outcome<T> {
        self.map_err(|e| Fail::Solver(e.into()))
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = setup_threads(cli.threads).and_then(|_| dispatch(cli, &argv[1..]));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(fail) => {
            match &fail {
                Fail::Usage(e) => eprintln!("error: {e:#}"),
                Fail::Solver(e) => eprintln!("solver error: {e:#}"),
                Fail::Stalled(msg) => eprintln!("path planning: {msg}"),
            }
            ExitCode::from(fail.code())
        }
    }
}

fn setup_threads(n: usize) -> Outcome<()> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Fail::Usage(anyhow!("--threads: {e}")))
}

fn dispatch(cli: Cli, raw: &[String]) -> Outcome<()> {
    let start = Instant::now();
    let (name, out, produced) = match &cli.command {
        Command::Solve(a) => ("solve", a.out.clone(), commands::solve(a)?),
        Command::Plan(a) => ("plan", a.out.clone(), commands::plan(a)?),
        Command::Sfs(a) => ("sfs", a.out.clone(), commands::sfs(a)?),
        Command::Compare(a) => {
            print!("{}", commands::compare(a)?.stdout);
            return Ok(());
        }
        Command::Replay(a) => return replay(&a.manifest, a.out.as_deref()),
    };
    let args = strip_run_flags(raw).usage("arguments")?;
    let cwd = std::env::current_dir().usage("working directory")?;
    let manifest = RunManifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        cwd,
        threads: cli.threads,
        args,
        out: std::path::absolute(&out).usage("--out")?,
        params: produced.params.clone(),
        outputs: produced.files.iter().map(|(n, _)| n.clone()).collect(),
        timings: Vec::new(),
    };
    write_outputs(&out, produced, manifest, start)
}

fn write_outputs(out: &Path, produced: Artifacts, mut manifest: RunManifest, start: Instant) -> Outcome<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).usage("--out")?;
    for (name, bytes) in &produced.files {
        let path = out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display())).solver()?;
    }
    manifest.timings = produced.timings;
    manifest.timings.push(("total".into(), start.elapsed()));
    let path = out.join("manifest.txt");
    fs::write(&path, manifest.to_text()).with_context(|| format!("writing {}", path.display())).solver()?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(produced.stdout.as_bytes());
    if produced.stalled.is_empty() {
        Ok(())
    } else {
        Err(Fail::Stalled(produced.stalled.join("; ")))
    }
}

/// Re-runs a recorded command single-threaded from its recorded working directory.
fn replay(manifest_path: &Path, out: Option<&Path>) -> Outcome<()> {
    let m = RunManifest::load(manifest_path).usage("manifest")?;
    let out: PathBuf = match out {
        Some(p) => std::path::absolute(p).usage("--out")?,
        None => m.out.clone(),
    };
    let mut argv = vec!["eikonal".to_string(), "--threads".into(), "1".into()];
    argv.extend(m.args.iter().cloned());
    argv.push("--out".into());
    argv.push(out.display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Fail::Usage(anyhow!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_) | Command::Compare(_)) {
        return Err(Fail::Usage(anyhow!("manifest: `{}` runs cannot be replayed", m.command)));
    }
    std::env::set_current_dir(&m.cwd)
        .with_context(|| format!("entering {}", m.cwd.display()))
        .usage("manifest cwd")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Fail::Solver(anyhow!("thread pool: {e}")))?
        .install(|| dispatch(cli, &argv[1..]))
}
