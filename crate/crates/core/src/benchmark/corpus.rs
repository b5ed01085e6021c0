use std::collections::{BTreeSet, HashSet};
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::BenchmarkError;
use crate::language::{ExtensionMap, Language};

/// A source file from the evaluation corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    /// Path relative to the corpus root, `/`-separated.
    pub file_id: String,
    /// Top-level directory under the corpus root; `.` for files at the root itself.
    pub repo_id: String,
    pub language: Language,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub files: Vec<CorpusFile>,
    /// Files with a known extension that were not valid UTF-8.
    pub skipped_non_utf8: usize,
}

impl ScanReport {
    pub fn repo_ids(&self) -> BTreeSet<&str> {
        self.files.iter().map(|f| f.repo_id.as_str()).collect()
    }
}

/// Walks `root` and loads every file whose extension is in `extensions`, sorted by file id.
pub fn scan_corpus(root: &Path, extensions: &ExtensionMap) -> Result<ScanReport, BenchmarkError> {
    let meta = std::fs::metadata(root).map_err(|source| BenchmarkError::Io { path: root.to_path_buf(), source })?;
    if !meta.is_dir() {
        return Err(BenchmarkError::NotADirectory(root.to_path_buf()));
    }

    let mut report = ScanReport::default();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Some(language) = extensions.language_of(entry.path()) else {
            continue;
        };
        let relative = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let parts: Vec<String> = relative
            .components()
            .filter_map(|c| match c {
                Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
                _ => None,
            })
            .collect();
        let repo_id = if parts.len() > 1 { parts[0].clone() } else { ".".to_string() };
        let bytes = std::fs::read(entry.path())
            .map_err(|source| BenchmarkError::Io { path: entry.path().to_path_buf(), source })?;
        match String::from_utf8(bytes) {
            Ok(text) => report.files.push(CorpusFile { file_id: parts.join("/"), repo_id, language, text }),
            Err(_) => {
                tracing::warn!(path = %entry.path().display(), "skipping file that is not valid UTF-8");
                report.skipped_non_utf8 += 1;
            }
        }
    }
    report.files.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    Ok(report)
}

/// Drops every file belonging to an excluded repository, keeping the order of the rest.
pub fn dedup_repositories(files: Vec<CorpusFile>, excluded_repos: &HashSet<String>) -> Vec<CorpusFile> {
    files.into_iter().filter(|f| !excluded_repos.contains(&f.repo_id)).collect()
}

/// Reads an exclusion list: one repository id per line, `#` comments and blank lines ignored.
pub fn read_exclusion_list(path: &Path) -> Result<HashSet<String>, BenchmarkError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchmarkError::Io { path: path.to_path_buf(), source })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn file(repo: &str, name: &str) -> CorpusFile {
        CorpusFile {
            file_id: format!("{repo}/{name}"),
            repo_id: repo.to_string(),
            language: Language::Python,
            text: String::new(),
        }
    }

    #[test]
    fn scan_picks_known_extensions_and_skips_binary() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("repo1/pkg")).unwrap();
        fs::create_dir_all(root.join("repo2")).unwrap();
        fs::write(root.join("repo1/a.py"), "x = 1\n").unwrap();
        fs::write(root.join("repo1/pkg/b.py"), "y = 2\n").unwrap();
        fs::write(root.join("repo2/c.py"), "z = 3\n").unwrap();
        fs::write(root.join("repo2/notes.xyz"), "ignored").unwrap();
        fs::write(root.join("repo2/blob.py"), [0xff, 0xfe, 0x00, 0x80]).unwrap();
        fs::write(root.join("top.rs"), "fn main() {}\n").unwrap();

        let report = scan_corpus(root, &ExtensionMap::default()).unwrap();
        let ids: Vec<&str> = report.files.iter().map(|f| f.file_id.as_str()).collect();
        assert_eq!(ids, ["repo1/a.py", "repo1/pkg/b.py", "repo2/c.py", "top.rs"]);
        assert_eq!(report.skipped_non_utf8, 1);
        assert_eq!(report.files[1].repo_id, "repo1");
        assert_eq!(report.files[3].repo_id, ".");
        assert_eq!(report.files[3].language, Language::Rust);
        assert!(report.files[..3].iter().all(|f| f.language == Language::Python));
    }

    #[test]
    fn scan_missing_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            scan_corpus(&dir.path().join("nope"), &ExtensionMap::default()),
            Err(BenchmarkError::Io { .. })
        ));
    }

    #[test]
    fn dedup_filters_by_repo() {
        let files = vec![file("a", "1.py"), file("b", "1.py"), file("a", "2.py"), file("c", "1.py")];
        assert_eq!(dedup_repositories(files.clone(), &HashSet::new()), files);
        let excluded: HashSet<String> = ["a".to_string()].into();
        let kept = dedup_repositories(files.clone(), &excluded);
        assert_eq!(kept, vec![file("b", "1.py"), file("c", "1.py")]);
        let all: HashSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert!(dedup_repositories(files, &all).is_empty());
    }

    #[test]
    fn exclusion_list_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.txt");
        fs::write(&path, "# seen in training\nrepo-a\n\n  repo-b  \n").unwrap();
        let set = read_exclusion_list(&path).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains("repo-b"));
    }
}
