use std::process::ExitCode;
use std::time::Instant;

use km_cli::{command, run, write_outputs, CliError, Manifest, RunConfig};
use km_core::par::Execution;

/// `KM_THREADS` caps the worker pool; `1` runs everything on the main thread.
fn threads() -> Result<usize, CliError> {
    let requested = match std::env::var("KM_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("KM_THREADS='{s}' is not a positive integer")))?;
            if n == 0 {
                return Err(CliError::Validation("KM_THREADS must be at least 1".into()));
            }
            Some(n)
        }
        Err(_) => None,
    };
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = requested {
            // only fails if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = requested;
        Ok(1)
    }
}

fn main() -> ExitCode {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let start = Instant::now();
    let config = match RunConfig::from_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("km: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let threads = match threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("km: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let exec = if threads > 1 { Execution::Parallel } else { Execution::Sequential };
    let mut manifest = Manifest::new(&config, threads);
    let result = run(&config, exec).and_then(|out| write_outputs(&config, &out).map(|w| (w, out.pass)));
    let code = match result {
        Ok((written, pass)) => {
            manifest.outputs = written;
            if pass == Some(false) {
                manifest.status = "check failed".into();
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("km: {e}");
            manifest.status = e.to_string();
            e.exit_code()
        }
    };
    manifest.exit_code = code;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    eprintln!("{}", serde_json::to_string(&manifest).expect("serializable manifest"));
    ExitCode::from(code as u8)
}
