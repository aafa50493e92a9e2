//! Design-guideline prompt vocabulary used for annotation and CLIP scoring.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_VOCABULARY: &str = include_str!("../../data/hdg_prompts.txt");

/// Parses a vocabulary list: one phrase per line, `#` starts a comment.
pub fn parse_vocabulary(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn default_vocabulary() -> Vec<String> {
    parse_vocabulary(DEFAULT_VOCABULARY)
}

pub fn load_vocabulary(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_vocabulary(&text))
}
