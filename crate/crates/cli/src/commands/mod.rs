pub mod damping;
pub mod detection;
pub mod fit;
pub mod ringdown;
pub mod sensitivity;

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::manifest::Run;

/// Options shared by every command.
pub struct Context<'a> {
    pub config: &'a LoadedConfig,
    pub oracle: bool,
    pub svg: bool,
}

impl Context<'_> {
    /// Media from the configuration, with any files it reads registered as
    /// run inputs.
    pub fn media(&self, run: &mut Run) -> Result<levsim::media::Media, CliError> {
        let (media, files) = self.config.media()?;
        for f in files {
            run.record_input(&f)?;
        }
        Ok(media)
    }
}

/// First failed row of a table, reported as a data error. Rows are given
/// as (label, error message).
pub fn first_row_error<I>(rows: I, what: &str) -> Result<(), CliError>
where
    I: IntoIterator<Item = (String, Option<String>)>,
{
    for (i, (label, err)) in rows.into_iter().enumerate() {
        if let Some(e) = err {
            return Err(CliError::Failure(format!("{what} row {} ({label}): {e}", i + 1)));
        }
    }
    Ok(())
}
