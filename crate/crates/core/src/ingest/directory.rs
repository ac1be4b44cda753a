use std::fmt;
use std::path::Path;

use walkdir::WalkDir;

use super::{CodeUnit, IngestError, IngestOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    NotUtf8,
    Binary,
    TooLarge { bytes: u64 },
    Unreadable(String),
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::NotUtf8 => f.write_str("not valid UTF-8"),
            SkipReason::Binary => f.write_str("binary content"),
            SkipReason::TooLarge { bytes } => write!(f, "{bytes} bytes exceeds the size cap"),
            SkipReason::Unreadable(e) => write!(f, "unreadable: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectoryListing {
    /// Sorted by `rel_path`.
    pub units: Vec<CodeUnit>,
    pub skipped: Vec<SkippedFile>,
}

/// Decode file bytes, rejecting binaries (NUL bytes) and invalid UTF-8.
pub(crate) fn decode(bytes: Vec<u8>) -> Result<String, SkipReason> {
    if bytes.contains(&0) {
        return Err(SkipReason::Binary);
    }
    String::from_utf8(bytes).map_err(|_| SkipReason::NotUtf8)
}

/// Read one file as a unit named after its file name.
pub fn load_file(path: &Path) -> Result<CodeUnit, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    match decode(bytes) {
        Ok(content) => Ok(CodeUnit::new(name, content)),
        Err(SkipReason::Binary) => Err(IngestError::Binary(path.to_path_buf())),
        Err(_) => Err(IngestError::NotUtf8(path.to_path_buf())),
    }
}

/// Recursively collect matching files under `root`.
///
/// Per-file problems land in `skipped`; only an unreadable root is fatal.
pub fn enumerate_directory(
    root: &Path,
    opts: &IngestOptions,
) -> Result<DirectoryListing, IngestError> {
    std::fs::read_dir(root).map_err(|source| IngestError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut listing = DirectoryListing::default();
    let walker = WalkDir::new(root)
        .follow_links(false)
        .into_iter()
        .filter_entry(|e| {
            e.depth() == 0
                || !e.file_type().is_dir()
                || !opts.ignores_dir(&e.file_name().to_string_lossy())
        });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                let path = err
                    .path()
                    .and_then(|p| p.strip_prefix(root).ok())
                    .map(|p| p.to_string_lossy().replace('\\', "/"))
                    .unwrap_or_default();
                listing.skipped.push(SkippedFile {
                    path,
                    reason: SkipReason::Unreadable(err.to_string()),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .to_string_lossy()
            .replace('\\', "/");
        if !opts.matches_extension(&rel) {
            continue;
        }
        let size = entry.metadata().map(|m| m.len()).unwrap_or(0);
        if size > opts.max_file_bytes {
            listing.skipped.push(SkippedFile {
                path: rel,
                reason: SkipReason::TooLarge { bytes: size },
            });
            continue;
        }
        let outcome = std::fs::read(entry.path())
            .map_err(|e| SkipReason::Unreadable(e.to_string()))
            .and_then(decode);
        match outcome {
            Ok(content) => listing.units.push(CodeUnit::new(rel, content)),
            Err(reason) => listing.skipped.push(SkippedFile { path: rel, reason }),
        }
    }
    listing.units.sort_by(|a, b| a.rel_path.cmp(&b.rel_path));
    listing.skipped.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(listing)
}
