//! Library side of the `mtoda` command: configuration, runs, validation
//! reports and exit codes.

pub mod config;
pub mod output;
pub mod simulate;
pub mod validate;

/// Exit status for an error: 2 for mathematical degeneracy, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let degenerate = err
        .chain()
        .filter_map(|e| e.downcast_ref::<mtoda_core::Error>())
        .any(mtoda_core::Error::is_degeneracy);
    if degenerate {
        2
    } else {
        1
    }
}
