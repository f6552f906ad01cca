pub mod report;
pub mod study;
pub mod suite;

use hbspline::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Exit status for an error: internal invariant violations are failures of
/// the kernel, everything else is a problem with the input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InternalInvariant(_) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

/// Sizes the global rayon pool from `HBS_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    match std::env::var("HBS_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| format!("HBS_THREADS must be a positive integer, got '{v}'"))?;
            if n == 0 {
                return Err("HBS_THREADS must be positive".into());
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
