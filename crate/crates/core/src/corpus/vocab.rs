use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{parse_entity_key, Document, EntityType, Token};
use crate::error::{parse_error, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TokenKind {
    Term,
    Entity,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenKind::Term => "TERM",
            TokenKind::Entity => "ENTITY",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub index: usize,
    pub key: String,
    pub kind: TokenKind,
    pub etype: Option<EntityType>,
    pub frequency: u64,
}

/// Token counts that can be built per shard and merged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyCounter {
    counts: HashMap<String, (u64, Option<EntityType>)>,
    total: u64,
}

impl FrequencyCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_token(&mut self, token: &Token) {
        let entry = self
            .counts
            .entry(token.normalized.clone())
            .or_insert((0, token.entity));
        entry.0 += 1;
        self.total += 1;
    }

    pub fn add_document(&mut self, doc: &Document) {
        for token in doc.sentences.iter().flatten() {
            self.add_token(token);
        }
    }

    pub fn merge(&mut self, other: FrequencyCounter) {
        for (key, (count, etype)) in other.counts {
            self.counts.entry(key).or_insert((0, etype)).0 += count;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Applies the frequency threshold and assigns indices by descending
    /// frequency, ties broken lexicographically by key.
    pub fn into_vocabulary(self, min_count: u64) -> Result<Vocabulary> {
        let min_count = min_count.max(1);
        let mut kept: Vec<(String, u64, Option<EntityType>)> = self
            .counts
            .into_iter()
            .filter(|(_, (count, _))| *count >= min_count)
            .map(|(key, (count, etype))| (key, count, etype))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let entries = kept
            .into_iter()
            .enumerate()
            .map(|(index, (key, frequency, etype))| VocabEntry {
                index,
                kind: if etype.is_some() {
                    TokenKind::Entity
                } else {
                    TokenKind::Term
                },
                key,
                etype,
                frequency,
            })
            .collect();
        Ok(Vocabulary::from_entries(entries, self.total))
    }
}

/// Unified index over terms and entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    total_token_count: u64,
}

impl Vocabulary {
    /// Builds the lookup map; entry indices are reassigned to match positions.
    pub fn from_entries(mut entries: Vec<VocabEntry>, total_token_count: u64) -> Self {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, entry) in entries.iter_mut().enumerate() {
            entry.index = i;
            index.insert(entry.key.clone(), i);
        }
        Vocabulary {
            entries,
            index,
            total_token_count,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn entry(&self, index: usize) -> &VocabEntry {
        &self.entries[index]
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn keys(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.key.clone()).collect()
    }

    pub fn frequencies(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.frequency).collect()
    }

    pub fn is_entity(&self, index: usize) -> bool {
        self.entries[index].kind == TokenKind::Entity
    }

    pub fn total_token_count(&self) -> u64 {
        self.total_token_count
    }

    /// Maps tokens to indices, dropping out-of-vocabulary tokens.
    pub fn encode(&self, sentence: &[Token]) -> Vec<u32> {
        sentence
            .iter()
            .filter_map(|t| self.get(&t.normalized))
            .map(|i| i as u32)
            .collect()
    }

    /// Writes `key<TAB>kind<TAB>etype<TAB>frequency` rows in index order,
    /// preceded by a `#total_tokens=<n>` comment line.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#total_tokens={}", self.total_token_count)?;
        for e in &self.entries {
            let etype = e.etype.map_or("-", EntityType::as_str);
            writeln!(w, "{}\t{}\t{}\t{}", e.key, e.kind, etype, e.frequency)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut total = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if let Some(rest) = line.strip_prefix("#total_tokens=") {
                total = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| parse_error(line_no, "bad total_tokens header"))?,
                );
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(parse_error(line_no, "expected 4 tab-separated columns"));
            }
            let kind = match cols[1] {
                "TERM" => TokenKind::Term,
                "ENTITY" => TokenKind::Entity,
                other => return Err(parse_error(line_no, format!("unknown kind `{other}`"))),
            };
            let etype = match cols[2] {
                "-" => None,
                t => Some(t.parse().map_err(|e: Error| parse_error(line_no, e.to_string()))?),
            };
            if kind == TokenKind::Entity && parse_entity_key(cols[0]).is_none() {
                return Err(parse_error(line_no, format!("malformed entity key `{}`", cols[0])));
            }
            let frequency = cols[3]
                .parse()
                .map_err(|_| parse_error(line_no, "bad frequency"))?;
            entries.push(VocabEntry {
                index: entries.len(),
                key: cols[0].to_string(),
                kind,
                etype,
                frequency,
            });
        }
        let total = total.unwrap_or_else(|| entries.iter().map(|e| e.frequency).sum());
        Ok(Vocabulary::from_entries(entries, total))
    }
}

/// Counts keys over `docs` and keeps those with frequency >= `min_count`.
pub fn build_vocabulary<'a, I>(docs: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut counter = FrequencyCounter::new();
    for doc in docs {
        counter.add_document(doc);
    }
    counter.into_vocabulary(min_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_raw;

    fn docs(text: &str) -> Vec<Document> {
        parse_raw(text.as_bytes()).unwrap()
    }

    #[test]
    fn threshold_drops_rare_keys() {
        let d = docs("cat dog dog\ndog cat bird\n");
        let v = build_vocabulary(&d, 3).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.get("cat"), None);
        assert_eq!(v.entry(0).key, "dog");
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let d = docs("b a c a\n");
        let v = build_vocabulary(&d, 1).unwrap();
        assert_eq!(v.keys(), ["a", "b", "c"]);
        assert_eq!(v.total_token_count(), 4);
    }

    #[test]
    fn entity_at_threshold_is_kept() {
        let line = r#"{"id":"d","sentences":[{"tokens":[{"t":"Berlin"},{"t":"Berlin"},{"t":"Berlin"},{"t":"Berlin"},{"t":"Berlin"},{"t":"x"}]}],"entities":[{"s":0,"b":0,"e":1,"type":"LOC","kid":"Q64"},{"s":0,"b":1,"e":2,"type":"LOC","kid":"Q64"},{"s":0,"b":2,"e":3,"type":"LOC","kid":"Q64"},{"s":0,"b":3,"e":4,"type":"LOC","kid":"Q64"},{"s":0,"b":4,"e":5,"type":"LOC","kid":"Q64"}]}"#;
        let doc = crate::corpus::parse_annotated(line.as_bytes())
            .next()
            .unwrap()
            .unwrap();
        let doc = crate::corpus::apply_annotations(&doc);
        let v = build_vocabulary([&doc], 5).unwrap();
        let i = v.get("@LOC:Q64").unwrap();
        assert_eq!(v.entry(i).frequency, 5);
        assert_eq!(v.entry(i).kind, TokenKind::Entity);
        assert_eq!(v.entry(i).etype, Some(EntityType::Loc));
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let d = docs("a b c\n");
        assert!(matches!(
            build_vocabulary(&d, 2),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let d = docs("a b a @x\n");
        let v = build_vocabulary(&d, 1).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let back = Vocabulary::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn merged_counters_match_single_pass() {
        let d = docs("a b\nc a\n\nb b d\n");
        let mut merged = FrequencyCounter::new();
        for doc in &d {
            let mut part = FrequencyCounter::new();
            part.add_document(doc);
            merged.merge(part);
        }
        assert_eq!(
            merged.into_vocabulary(1).unwrap(),
            build_vocabulary(&d, 1).unwrap()
        );
    }
}
