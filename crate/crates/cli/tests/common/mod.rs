//! Shared helpers for CLI tests.

use std::path::PathBuf;

/// The solver command the tests pass via `--solver`: `$SMT_SOLVER_CMD` if
/// set, otherwise the workspace-built `fdsmt` binary, building it on
/// demand when a single-package test run skipped it.
pub fn solver_command() -> String {
    if let Ok(cmd) = std::env::var("SMT_SOLVER_CMD") {
        if !cmd.trim().is_empty() {
            return cmd;
        }
    }
    let exe = std::env::current_exe().expect("test binary has a path");
    let profile_dir = exe
        .parent()
        .and_then(|deps| deps.parent())
        .expect("test binary lives in target/<profile>/deps");
    let bin = profile_dir.join(format!("fdsmt{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        build_fdsmt(&bin);
    }
    bin.to_string_lossy().into_owned()
}

fn build_fdsmt(expected: &PathBuf) {
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut args = vec!["build", "-p", "fdsmt", "--bin", "fdsmt"];
    if expected
        .parent()
        .and_then(|d| d.file_name())
        .is_some_and(|n| n == "release")
    {
        args.push("--release");
    }
    let status = std::process::Command::new(cargo)
        .args(&args)
        .status()
        .expect("cargo is runnable from a test");
    assert!(
        status.success() && expected.exists(),
        "failed to provide the fdsmt test solver at {expected:?}; \
         set SMT_SOLVER_CMD to an SMT-LIB2 solver instead"
    );
}
