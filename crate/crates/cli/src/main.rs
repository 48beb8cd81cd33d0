mod args;
mod commands;
mod manifest;
mod target;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Output;
use manifest::RunManifest;

/// Exit codes: 0 ok, 2 input or validation problem, 3 numerical failure.
#[derive(Debug)]
enum Failure {
    Core(saddle_h2::Error),
    Input(String),
}

impl From<saddle_h2::Error> for Failure {
    fn from(e: saddle_h2::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message, key) = match self {
            Failure::Core(e) => {
                let key = match e {
                    saddle_h2::Error::ProblemFile { key, .. } => Some(key.clone()),
                    _ => None,
                };
                (e.kind(), e.to_string(), key)
            }
            Failure::Input(m) => ("input", m.clone(), None),
        };
        json!({
            "error": { "kind": kind, "message": message, "key": key },
            "exit_code": self.exit_code(),
        })
    }
}

fn read_problem(path: Option<&Path>) -> Result<Option<Value>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| saddle_h2::Error::problem_file("<root>", format!("not valid JSON: {e}")).into())
}

fn out_path(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::Analyze(a) => a.out.as_ref(),
        Command::Sweep(a) => a.out.as_ref(),
        Command::Simulate(a) => a.out.as_ref(),
        Command::Table1(a) => a.out.as_ref(),
        Command::Replay(a) => a.out.as_ref(),
    }
}

fn problem_path(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Analyze(a) => a.problem.problem.as_deref(),
        Command::Sweep(a) => a.problem.problem.as_deref(),
        Command::Simulate(a) => a.problem.problem.as_deref(),
        Command::Table1(a) => a.problem.problem.as_deref(),
        Command::Replay(_) => None,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn execute(cmd: &Command, problem: Option<&Value>) -> Result<(), Failure> {
    let output: Output = match cmd {
        Command::Analyze(a) => commands::analyze(a, problem)?,
        Command::Sweep(a) => commands::sweep(a, problem)?,
        Command::Simulate(a) => commands::simulate(a, problem)?,
        Command::Table1(a) => commands::table1(a, problem)?,
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    };
    let mut written = Vec::new();
    match out_path(cmd) {
        Some(path) => {
            write_file(path, &output.primary)?;
            written.push(path.clone());
        }
        None => {
            std::io::stdout()
                .write_all(output.primary.as_bytes())
                .map_err(|e| Failure::Input(format!("stdout: {e}")))?;
        }
    }
    for (path, contents) in &output.files {
        write_file(path, contents)?;
        written.push(path.clone());
    }
    for line in &output.notes {
        eprintln!("{line}");
    }
    if let Some(first) = written.first() {
        let m = RunManifest::new(cmd, problem, written.clone());
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        write_file(&RunManifest::path_for(first), &text)?;
    }
    Ok(())
}

/// Re-run a manifest. With `out`, the primary output (and any trajectory,
/// as `<out>.trajectory.csv`) is redirected.
fn replay(manifest: &Path, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", manifest.display())))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("malformed manifest: {e}")))?;
    let mut cmd = m.config;
    if let Some(out) = out {
        let side = |suffix: &str| {
            let mut s = out.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        match &mut cmd {
            Command::Analyze(a) => a.out = Some(out.clone()),
            Command::Sweep(a) => a.out = Some(out.clone()),
            Command::Table1(a) => a.out = Some(out.clone()),
            Command::Simulate(a) => {
                a.out = Some(out.clone());
                if a.trajectory.is_some() {
                    a.trajectory = Some(side(".trajectory.csv"));
                }
            }
            Command::Replay(_) => return Err(Failure::Input("manifest records a replay".into())),
        }
    }
    execute(&cmd, m.problem.as_ref())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Replay(r) => replay(&r.manifest, r.out.as_ref()),
        cmd => {
            let problem = read_problem(problem_path(cmd))?;
            execute(cmd, problem.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
