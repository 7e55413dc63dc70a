//! Corpus ingestion: annotated JSON-lines and raw text readers, token
//! filtering, entity-span collapsing and vocabulary construction.
//!
//! The annotated pipeline runs [`apply_annotations`] before
//! [`filter_tokens`], so function words inside an entity mention are never
//! dropped before the mention is collapsed to its identifier token.

mod cache;
pub mod stopwords;
mod vocab;

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{parse_error, Error, Result};

pub use cache::{IndexedCorpus, IndexedDocument};
pub use vocab::{build_vocabulary, FrequencyCounter, TokenKind, VocabEntry, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Date,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Per,
        EntityType::Loc,
        EntityType::Org,
        EntityType::Date,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Date => "DATE",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            "DATE" => Ok(EntityType::Date),
            other => Err(Error::Validation(format!("unknown entity type `{other}`"))),
        }
    }
}

/// Canonical vocabulary key of an entity: `@<ETYPE>:<canonical_id>`.
pub fn entity_key(etype: EntityType, canonical_id: &str) -> String {
    format!("@{}:{}", etype.as_str(), canonical_id)
}

/// Inverse of [`entity_key`]. Returns `None` for term keys.
pub fn parse_entity_key(key: &str) -> Option<(EntityType, &str)> {
    let rest = key.strip_prefix('@')?;
    let (etype, id) = rest.split_once(':')?;
    let etype = etype.parse().ok()?;
    if id.is_empty() {
        return None;
    }
    Some((etype, id))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: Option<String>,
    /// Lowercased surface for terms; the canonical key for collapsed entities.
    pub normalized: String,
    /// Set on tokens produced by [`apply_annotations`].
    pub entity: Option<EntityType>,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Option<String>) -> Result<Self> {
        let surface = surface.into();
        let normalized = surface.to_lowercase();
        if normalized.is_empty() || normalized.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!(
                "token `{surface}` is empty or contains whitespace"
            )));
        }
        Ok(Token {
            surface,
            pos,
            normalized,
            entity: None,
        })
    }

    /// An already collapsed entity identifier token.
    pub fn entity(etype: EntityType, canonical_id: &str) -> Self {
        let key = entity_key(etype, canonical_id);
        Token {
            surface: key.clone(),
            pos: None,
            normalized: key,
            entity: Some(etype),
        }
    }

    /// True when the token carries no letters or digits.
    pub fn is_punctuation(&self) -> bool {
        !self.normalized.chars().any(char::is_alphanumeric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub sentence_index: usize,
    /// Inclusive.
    pub token_start: usize,
    /// Exclusive.
    pub token_end: usize,
    pub etype: EntityType,
    pub canonical_id: String,
}

impl EntitySpan {
    pub fn key(&self) -> String {
        entity_key(self.etype, &self.canonical_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Vec<Token>>,
    pub entities: Vec<EntitySpan>,
}

impl Document {
    /// Checks span bounds, id well-formedness and per-sentence overlap.
    pub fn validate(&self) -> Result<()> {
        for span in &self.entities {
            let sentence = self.sentences.get(span.sentence_index).ok_or_else(|| {
                Error::Validation(format!(
                    "entity {} refers to sentence {} of {}",
                    span.key(),
                    span.sentence_index,
                    self.sentences.len()
                ))
            })?;
            if span.token_start >= span.token_end {
                return Err(Error::Validation(format!(
                    "entity {} has empty span [{}, {})",
                    span.key(),
                    span.token_start,
                    span.token_end
                )));
            }
            if span.token_end > sentence.len() {
                return Err(Error::Validation(format!(
                    "entity {} ends at {} but sentence {} has {} tokens",
                    span.key(),
                    span.token_end,
                    span.sentence_index,
                    sentence.len()
                )));
            }
            if span.canonical_id.is_empty() || span.canonical_id.chars().any(char::is_whitespace)
            {
                return Err(Error::Validation(format!(
                    "entity id `{}` is empty or contains whitespace",
                    span.canonical_id
                )));
            }
        }
        let mut spans: Vec<&EntitySpan> = self.entities.iter().collect();
        spans.sort_by_key(|s| (s.sentence_index, s.token_start));
        for pair in spans.windows(2) {
            if pair[0].sentence_index == pair[1].sentence_index
                && pair[1].token_start < pair[0].token_end
            {
                return Err(Error::Validation(format!(
                    "overlapping entities {} and {} in sentence {}",
                    pair[0].key(),
                    pair[1].key(),
                    pair[0].sentence_index
                )));
            }
        }
        Ok(())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

#[derive(Deserialize)]
struct JsonDocument {
    id: String,
    sentences: Vec<JsonSentence>,
    #[serde(default)]
    entities: Vec<JsonEntity>,
}

#[derive(Deserialize)]
struct JsonSentence {
    tokens: Vec<JsonToken>,
}

#[derive(Deserialize)]
struct JsonToken {
    t: String,
    #[serde(default)]
    pos: Option<String>,
}

#[derive(Deserialize)]
struct JsonEntity {
    s: usize,
    b: usize,
    e: usize,
    #[serde(rename = "type")]
    etype: String,
    kid: String,
}

fn document_from_json(line_no: usize, line: &str) -> Result<Document> {
    let raw: JsonDocument =
        serde_json::from_str(line).map_err(|e| parse_error(line_no, e.to_string()))?;
    let mut sentences = Vec::with_capacity(raw.sentences.len());
    for sentence in raw.sentences {
        let tokens = sentence
            .tokens
            .into_iter()
            .map(|t| Token::new(t.t, t.pos))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| parse_error(line_no, e.to_string()))?;
        sentences.push(tokens);
    }
    let entities = raw
        .entities
        .into_iter()
        .map(|e| {
            Ok(EntitySpan {
                sentence_index: e.s,
                token_start: e.b,
                token_end: e.e,
                etype: e.etype.parse()?,
                canonical_id: e.kid,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| parse_error(line_no, e.to_string()))?;
    let doc = Document {
        doc_id: raw.id,
        sentences,
        entities,
    };
    doc.validate()
        .map_err(|e| parse_error(line_no, e.to_string()))?;
    Ok(doc)
}

/// Streaming reader over the annotated JSON-lines format, one document per
/// line. Blank lines are skipped and counted.
pub struct AnnotatedReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    skipped: usize,
}

impl<R: BufRead> AnnotatedReader<R> {
    /// Number of blank lines skipped so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for AnnotatedReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                self.skipped += 1;
                log::warn!("line {}: empty line skipped", self.line_no);
                continue;
            }
            return Some(document_from_json(self.line_no, &line));
        }
    }
}

pub fn parse_annotated<R: BufRead>(reader: R) -> AnnotatedReader<R> {
    AnnotatedReader {
        lines: reader.lines(),
        line_no: 0,
        skipped: 0,
    }
}

/// Reads a raw corpus: one whitespace-tokenized sentence per line. Blank
/// lines separate documents.
pub fn parse_raw<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut current: Vec<Vec<Token>> = Vec::new();
    let flush = |docs: &mut Vec<Document>, current: &mut Vec<Vec<Token>>| {
        if !current.is_empty() {
            docs.push(Document {
                doc_id: format!("raw-{}", docs.len()),
                sentences: std::mem::take(current),
                entities: Vec::new(),
            });
        }
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut docs, &mut current);
            continue;
        }
        let tokens = line
            .split_whitespace()
            .map(|t| Token::new(t, None))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| parse_error(i + 1, e.to_string()))?;
        current.push(tokens);
    }
    flush(&mut docs, &mut current);
    Ok(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Raw,
    Annotated,
}

impl FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(FilterMode::Raw),
            "annotated" => Ok(FilterMode::Annotated),
            other => Err(Error::Config(format!("unknown pipeline `{other}`"))),
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::Raw => "raw",
            FilterMode::Annotated => "annotated",
        })
    }
}

/// Removes stop words and punctuation (RAW) or tokens with a blocked POS tag
/// (ANNOTATED). Tokens that belong to an entity, either inside a span or
/// already collapsed, are always kept; span indices are remapped.
pub fn filter_tokens(
    doc: &Document,
    mode: FilterMode,
    stoplist: &HashSet<String>,
    pos_blocklist: &HashSet<String>,
) -> Document {
    let mut protected: Vec<Vec<bool>> = doc
        .sentences
        .iter()
        .map(|s| s.iter().map(|t| t.entity.is_some()).collect())
        .collect();
    for span in &doc.entities {
        for flag in &mut protected[span.sentence_index][span.token_start..span.token_end] {
            *flag = true;
        }
    }

    let keep = |token: &Token, protected: bool| -> bool {
        if protected {
            return true;
        }
        match mode {
            FilterMode::Raw => !token.is_punctuation() && !stoplist.contains(&token.normalized),
            FilterMode::Annotated => match &token.pos {
                Some(pos) => !pos_blocklist.contains(pos),
                None => true,
            },
        }
    };

    let mut sentences = Vec::with_capacity(doc.sentences.len());
    // new_position[s][i] = number of kept tokens before position i
    let mut new_position: Vec<Vec<usize>> = Vec::with_capacity(doc.sentences.len());
    for (sentence, prot) in doc.sentences.iter().zip(&protected) {
        let mut kept = Vec::with_capacity(sentence.len());
        let mut positions = Vec::with_capacity(sentence.len() + 1);
        for (token, &p) in sentence.iter().zip(prot) {
            positions.push(kept.len());
            if keep(token, p) {
                kept.push(token.clone());
            }
        }
        positions.push(kept.len());
        sentences.push(kept);
        new_position.push(positions);
    }

    let entities = doc
        .entities
        .iter()
        .map(|span| {
            let positions = &new_position[span.sentence_index];
            EntitySpan {
                token_start: positions[span.token_start],
                token_end: positions[span.token_end],
                ..span.clone()
            }
        })
        .collect();

    Document {
        doc_id: doc.doc_id.clone(),
        sentences,
        entities,
    }
}

/// Collapses every entity span into a single identifier token
/// `@<ETYPE>:<canonical_id>`. The result carries no spans.
pub fn apply_annotations(doc: &Document) -> Document {
    let mut by_sentence: Vec<Vec<&EntitySpan>> = vec![Vec::new(); doc.sentences.len()];
    for span in &doc.entities {
        by_sentence[span.sentence_index].push(span);
    }
    let sentences = doc
        .sentences
        .iter()
        .zip(by_sentence.iter_mut())
        .map(|(sentence, spans)| {
            spans.sort_by_key(|s| s.token_start);
            let mut out = Vec::with_capacity(sentence.len());
            let mut pos = 0;
            for span in spans.iter() {
                out.extend_from_slice(&sentence[pos..span.token_start]);
                out.push(Token::entity(span.etype, &span.canonical_id));
                pos = span.token_end;
            }
            out.extend_from_slice(&sentence[pos..]);
            out
        })
        .collect();
    Document {
        doc_id: doc.doc_id.clone(),
        sentences,
        entities: Vec::new(),
    }
}

/// The full preparation pipeline for one document.
pub fn prepare_document(
    doc: &Document,
    mode: FilterMode,
    stoplist: &HashSet<String>,
    pos_blocklist: &HashSet<String>,
) -> Document {
    match mode {
        FilterMode::Raw => filter_tokens(doc, mode, stoplist, pos_blocklist),
        FilterMode::Annotated => {
            filter_tokens(&apply_annotations(doc), mode, stoplist, pos_blocklist)
        }
    }
}

/// Filters every document with the default word lists, then builds the
/// vocabulary and the index-encoded corpus.
pub fn prepare_corpus(
    docs: &[Document],
    mode: FilterMode,
    min_count: u64,
) -> Result<(Vocabulary, IndexedCorpus)> {
    prepare_corpus_with(
        docs,
        mode,
        min_count,
        &stopwords::english_stoplist(),
        &stopwords::default_pos_blocklist(),
    )
}

pub fn prepare_corpus_with(
    docs: &[Document],
    mode: FilterMode,
    min_count: u64,
    stoplist: &HashSet<String>,
    pos_blocklist: &HashSet<String>,
) -> Result<(Vocabulary, IndexedCorpus)> {
    let prepared: Vec<Document> = docs
        .iter()
        .map(|d| prepare_document(d, mode, stoplist, pos_blocklist))
        .collect();
    let vocab = build_vocabulary(&prepared, min_count)?;
    let corpus = IndexedCorpus::encode(mode, &prepared, &vocab);
    Ok((vocab, corpus))
}
