//! Library side of the `gvport` command-line tool: series files, the `test`
//! and `asymptotic` reports, and exit-code conventions.

pub mod asymptotic_cmd;
pub mod series;
pub mod test_cmd;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for a library error: bad arguments are usage errors, unusable
/// input data are data errors, everything else is a numerical failure.
pub fn exit_code(e: &gvport::Error) -> i32 {
    use gvport::Error::*;
    match e {
        InvalidArgument(_) => EXIT_USAGE,
        NotAdmissible { .. } | SeriesTooShort { .. } | NonFinite { .. } | Degenerate => EXIT_DATA,
        _ => EXIT_NUMERICAL,
    }
}

pub fn study_exit_code(e: &gvport_studies::StudyError) -> i32 {
    use gvport_studies::StudyError::*;
    match e {
        Config { .. } | Parse(_) | Io(_) => EXIT_DATA,
        Numerical(inner) => exit_code(inner),
    }
}
