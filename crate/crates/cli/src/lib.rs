//! File formats, thread-parallel stages and the `pairclust` command line
//! around [`pairclust_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod parallel;
pub mod profile;
pub mod report;

pub use cli::run;
pub use error::{CliError, FormatError};
