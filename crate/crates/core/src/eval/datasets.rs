use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::EntityType;
use crate::error::{parse_error, Error, Result};

/// Dataset keys are matched against vocabulary keys: entity keys (`@TYPE:id`)
/// as written, terms lowercased like corpus tokens. Multi-word keys are
/// joined with `_`.
pub fn normalize_key(key: &str) -> String {
    let joined = key.split_whitespace().collect::<Vec<_>>().join("_");
    if joined.starts_with('@') {
        joined
    } else {
        joined.to_lowercase()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| Ok((i + 1, l?)))
        .filter(|r| match r {
            Ok((_, l)) => !l.trim().is_empty() && !l.starts_with('#'),
            Err(_) => true,
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelatednessPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelatednessDataset {
    pub pairs: Vec<RelatednessPair>,
}

impl RelatednessDataset {
    /// `word1<TAB>word2<TAB>score` per line; `#` lines are comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in content_lines(reader) {
            let (line_no, line) = item?;
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(parse_error(line_no, "expected word1<TAB>word2<TAB>score"));
            }
            let score: f64 = cols[2]
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad score `{}`", cols[2])))?;
            if !score.is_finite() {
                return Err(parse_error(line_no, "score must be finite"));
            }
            pairs.push(RelatednessPair {
                word1: normalize_key(cols[0]),
                word2: normalize_key(cols[1]),
                score,
            });
        }
        Ok(RelatednessDataset { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(open(path)?)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyItem {
    pub a: String,
    pub b: String,
    pub x: String,
    pub y: String,
    /// Entity type the answer must have in the typed variant.
    pub etype: Option<EntityType>,
    pub section: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalogyDataset {
    pub items: Vec<AnalogyItem>,
}

impl AnalogyDataset {
    /// Google analogy format: `: section` headers and four space-separated
    /// keys per line. A line `#type=<ETYPE>` sets the answer type for the
    /// rest of the current section.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut items = Vec::new();
        let mut section = String::new();
        let mut etype = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix(':') {
                section = name.trim().to_string();
                etype = None;
                continue;
            }
            if let Some(t) = trimmed.strip_prefix("#type=") {
                etype = Some(t.trim().parse().map_err(|e: Error| parse_error(line_no, e.to_string()))?);
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let keys: Vec<&str> = trimmed.split_whitespace().collect();
            if keys.len() != 4 {
                return Err(parse_error(line_no, "expected four keys `a b x y`"));
            }
            let [a, b, x, y] = [keys[0], keys[1], keys[2], keys[3]].map(normalize_key);
            if a == b {
                return Err(parse_error(line_no, "a and b must differ"));
            }
            items.push(AnalogyItem {
                a,
                b,
                x,
                y,
                etype,
                section: section.clone(),
            });
        }
        Ok(AnalogyDataset { items })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(open(path)?)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CategorizationDataset {
    pub items: Vec<(String, String)>,
}

impl CategorizationDataset {
    /// `key<TAB>category` per line.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut items = Vec::new();
        for item in content_lines(reader) {
            let (line_no, line) = item?;
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 || cols[0].is_empty() || cols[1].is_empty() {
                return Err(parse_error(line_no, "expected key<TAB>category"));
            }
            items.push((normalize_key(cols[0]), cols[1].to_string()));
        }
        let ds = CategorizationDataset { items };
        if ds.categories().len() < 2 {
            return Err(Error::InsufficientData(
                "categorization needs at least 2 categories".into(),
            ));
        }
        Ok(ds)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(open(path)?)
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.items.iter().map(|(_, c)| c.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
