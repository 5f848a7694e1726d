use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rayon::prelude::*;

use super::CorpusError;

fn git(repo_root: &Path, args: &[&str]) -> Result<Output, CorpusError> {
    if !repo_root.is_dir() {
        return Err(CorpusError::RepoUnavailable { path: repo_root.to_path_buf(), detail: "not a directory".into() });
    }
    Command::new("git")
        .arg("-C")
        .arg(repo_root)
        .args(args)
        .env("GIT_TERMINAL_PROMPT", "0")
        .output()
        .map_err(|e| CorpusError::RepoUnavailable { path: repo_root.to_path_buf(), detail: e.to_string() })
}

fn ensure_repo(repo_root: &Path) -> Result<(), CorpusError> {
    let out = git(repo_root, &["rev-parse", "--git-dir"])?;
    if out.status.success() {
        Ok(())
    } else {
        Err(CorpusError::RepoUnavailable {
            path: repo_root.to_path_buf(),
            detail: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        })
    }
}

fn has_commit(repo_root: &Path, commit_id: &str) -> Result<bool, CorpusError> {
    let spec = format!("{commit_id}^{{commit}}");
    Ok(git(repo_root, &["cat-file", "-e", &spec])?.status.success())
}

/// Unified diff of `commit_id` against its first parent. Merges with no
/// textual change yield an empty string.
pub fn fetch_patch(repo_root: &Path, commit_id: &str) -> Result<String, CorpusError> {
    ensure_repo(repo_root)?;
    if !has_commit(repo_root, commit_id)? {
        return Err(CorpusError::CommitNotFound(commit_id.to_string()));
    }
    let out = git(repo_root, &["show", "--format=", "--patch", "--no-color", "--no-ext-diff", commit_id])?;
    if !out.status.success() {
        return Err(CorpusError::RepoUnavailable {
            path: repo_root.to_path_buf(),
            detail: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Committer date of `commit_id` in epoch seconds.
pub fn committer_timestamp(repo_root: &Path, commit_id: &str) -> Result<i64, CorpusError> {
    ensure_repo(repo_root)?;
    if !has_commit(repo_root, commit_id)? {
        return Err(CorpusError::CommitNotFound(commit_id.to_string()));
    }
    let out = git(repo_root, &["show", "-s", "--format=%ct", commit_id])?;
    String::from_utf8_lossy(&out.stdout).trim().parse().map_err(|_| CorpusError::RepoUnavailable {
        path: repo_root.to_path_buf(),
        detail: "bad committer date".into(),
    })
}

/// First root, in lexicographic path order, whose repository holds the commit.
pub fn locate_commit(commit_id: &str, roots: &[PathBuf]) -> Result<PathBuf, CorpusError> {
    let mut sorted: Vec<&PathBuf> = roots.iter().collect();
    sorted.sort();
    for root in sorted {
        if ensure_repo(root).is_err() {
            continue;
        }
        if has_commit(root, commit_id)? {
            return Ok(root.clone());
        }
    }
    Err(CorpusError::CommitNotFound(commit_id.to_string()))
}

/// Locates and fetches every commit. Repositories are processed in parallel;
/// fetches within one repository run one at a time. Output follows input order.
pub fn fetch_patches(commit_ids: &[String], roots: &[PathBuf]) -> Result<Vec<String>, CorpusError> {
    let mut by_repo: BTreeMap<PathBuf, Vec<usize>> = BTreeMap::new();
    for (i, id) in commit_ids.iter().enumerate() {
        by_repo.entry(locate_commit(id, roots)?).or_default().push(i);
    }
    let groups: Vec<(PathBuf, Vec<usize>)> = by_repo.into_iter().collect();
    let fetched: Vec<Vec<(usize, String)>> = groups
        .par_iter()
        .map(|(repo, idx)| idx.iter().map(|&i| fetch_patch(repo, &commit_ids[i]).map(|p| (i, p))).collect())
        .collect::<Result<_, _>>()?;
    let mut out = vec![String::new(); commit_ids.len()];
    for (i, patch) in fetched.into_iter().flatten() {
        out[i] = patch;
    }
    Ok(out)
}
