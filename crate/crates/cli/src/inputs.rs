//! Path checks and input resolution shared by the subcommands. Every check
//! runs before a command starts its work.

use std::fs;
use std::path::Path;

use etiquette_core::profile::{builtin_profile, parse_profile, BUILTIN_NAMES};
use etiquette_core::EtiquetteProfile;

use crate::error::{CliError, CliResult, ResultExt};

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input file '{}' does not exist",
            path.display()
        )))
    }
}

/// The output's directory must exist; the file itself is overwritten.
pub fn require_output(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        return Err(CliError::Usage(format!("output '{}' is a directory", path.display())));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Usage(format!(
            "output directory '{}' does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    require_file(path)?;
    fs::read_to_string(path).data(format!("reading '{}'", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).internal(format!("writing '{}'", path.display()))
}

pub fn is_builtin(spec: &str) -> bool {
    BUILTIN_NAMES.contains(&spec)
}

/// A builtin profile name or the path of a profile file.
pub fn resolve_profile(spec: &str) -> CliResult<EtiquetteProfile> {
    if is_builtin(spec) {
        return builtin_profile(spec).internal("loading builtin profile");
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "profile '{spec}' is neither a file nor a builtin profile ({})",
            BUILTIN_NAMES.join(", ")
        )));
    }
    parse_profile(&read_text(path)?).data(format!("profile '{spec}'"))
}
