//! Unified-diff reading: pulls changed source segments out of a patch.

use serde::{Deserialize, Serialize};

use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Cpp,
    Python,
    Unknown,
}

impl Language {
    /// Language for a file path, `None` for files outside the source allowlist.
    pub fn from_path(path: &str) -> Option<Language> {
        let ext = path.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase())?;
        match ext.as_str() {
            "java" => Some(Language::Java),
            "c" | "cc" | "cpp" | "cxx" | "c++" | "h" | "hh" | "hpp" | "hxx" | "h++" => Some(Language::Cpp),
            "py" => Some(Language::Python),
            _ => None,
        }
    }

    pub fn has_tree_support(self) -> bool {
        matches!(self, Language::Java | Language::Cpp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentMode {
    /// Only `+` lines.
    #[default]
    AddedOnly,
    /// `+` lines and unchanged context lines.
    AddedPlusContext,
}

impl std::str::FromStr for FragmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "added_only" => Ok(FragmentMode::AddedOnly),
            "added_plus_context" => Ok(FragmentMode::AddedPlusContext),
            other => Err(format!("unknown fragment mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentOrigin {
    pub commit_id: String,
    pub path: String,
    pub hunk: usize,
}

/// A contiguous piece of changed source code from one hunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFragment {
    pub language: Language,
    pub text: String,
    pub origin: FragmentOrigin,
}

struct HunkHeader {
    old_len: usize,
    new_len: usize,
}

fn parse_range_len(range: &str) -> Option<usize> {
    // "12,5" or "12"
    match range.split_once(',') {
        Some((start, len)) => {
            start.parse::<usize>().ok()?;
            len.parse().ok()
        }
        None => {
            range.parse::<usize>().ok()?;
            Some(1)
        }
    }
}

fn parse_hunk_header(line: &str) -> Option<HunkHeader> {
    let rest = line.strip_prefix("@@ ")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let mut parts = ranges.split_whitespace();
    let old = parts.next()?.strip_prefix('-')?;
    let new = parts.next()?.strip_prefix('+')?;
    if parts.next().is_some() {
        return None;
    }
    Some(HunkHeader { old_len: parse_range_len(old)?, new_len: parse_range_len(new)? })
}

fn strip_side_prefix(path: &str) -> &str {
    let path = path.split('\t').next().unwrap_or(path).trim_end();
    path.strip_prefix("a/").or_else(|| path.strip_prefix("b/")).unwrap_or(path)
}

/// Splits a unified diff into per-hunk code fragments of the source files it
/// touches, in file-then-hunk order.
pub fn extract_fragments(
    commit_id: &str,
    patch_text: &str,
    mode: FragmentMode,
) -> Result<Vec<CodeFragment>, SyntaxError> {
    let lines: Vec<&str> = patch_text.lines().collect();
    let mut fragments = Vec::new();
    let mut old_path: Option<String> = None;
    let mut path: Option<String> = None;
    let mut hunk_index = 0;
    let mut i = 0;

    while i < lines.len() {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            // fallback path for diffs with no ---/+++ pair (binary, mode-only)
            path = rest.rsplit_once(" b/").map(|(_, p)| p.to_string());
            old_path = None;
            hunk_index = 0;
            i += 1;
        } else if let Some(rest) = line.strip_prefix("--- ") {
            old_path = Some(strip_side_prefix(rest).to_string());
            i += 1;
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            let new = strip_side_prefix(rest);
            path = if new == "/dev/null" { old_path.clone() } else { Some(new.to_string()) };
            hunk_index = 0;
            i += 1;
        } else if line.starts_with("@@") {
            let header = parse_hunk_header(line).ok_or_else(|| SyntaxError::MalformedDiff {
                line: i + 1,
                detail: format!("unparsable hunk header `{line}`"),
            })?;
            let (mut old_left, mut new_left) = (header.old_len, header.new_len);
            let mut body = Vec::new();
            i += 1;
            while i < lines.len() && (old_left > 0 || new_left > 0) {
                let l = lines[i];
                match l.as_bytes().first() {
                    Some(b'+') => {
                        new_left = new_left.saturating_sub(1);
                        body.push(&l[1..]);
                    }
                    Some(b'-') => old_left = old_left.saturating_sub(1),
                    Some(b'\\') => {}
                    Some(b' ') | None => {
                        old_left = old_left.saturating_sub(1);
                        new_left = new_left.saturating_sub(1);
                        if mode == FragmentMode::AddedPlusContext {
                            body.push(l.get(1..).unwrap_or(""));
                        }
                    }
                    // truncated hunk; resume header scanning here
                    _ => break,
                }
                i += 1;
            }
            // trailing "\ No newline at end of file"
            while i < lines.len() && lines[i].starts_with('\\') {
                i += 1;
            }
            let file = path.clone().or_else(|| old_path.clone()).unwrap_or_default();
            if let Some(language) = Language::from_path(&file) {
                let text = body.join("\n");
                if !text.trim().is_empty() {
                    fragments.push(CodeFragment {
                        language,
                        text,
                        origin: FragmentOrigin { commit_id: commit_id.to_string(), path: file, hunk: hunk_index },
                    });
                }
            }
            hunk_index += 1;
        } else {
            i += 1;
        }
    }
    Ok(fragments)
}
