// SPDX-License-Identifier: Apache-2.0
//! `fuelctrl`: solve, verify, cross-check and export.
//!
//! Exit codes: 0 success, 1 failure (including a failed verification),
//! 2 bad flags or parameters, 3 regime not supported by the full solve.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<commands::UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<fuelctrl::Error>() {
        Some(fuelctrl::Error::InvalidParams(_)) => 2,
        Some(fuelctrl::Error::UnsupportedRegime(_)) => 3,
        _ => 1,
    }
}
