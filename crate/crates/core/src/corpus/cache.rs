use std::io::{BufRead, Write};

use super::{Document, FilterMode, Vocabulary};
use crate::error::{parse_error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDocument {
    pub id: String,
    pub sentences: Vec<Vec<u32>>,
}

/// Prepared corpus encoded against a vocabulary. Out-of-vocabulary tokens
/// are removed, so windows never span a dropped token's position.
///
/// Text layout: a header line `#corpus mode=<raw|annotated> documents=<n>`,
/// then per document a line `>` TAB `<doc_id>` followed by one line per
/// sentence of space-separated indices (empty sentences are empty lines).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedCorpus {
    pub mode: FilterMode,
    pub documents: Vec<IndexedDocument>,
}

impl IndexedCorpus {
    pub fn encode<'a, I>(mode: FilterMode, docs: I, vocab: &Vocabulary) -> Self
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let documents = docs
            .into_iter()
            .map(|doc| IndexedDocument {
                id: doc.doc_id.clone(),
                sentences: doc.sentences.iter().map(|s| vocab.encode(s)).collect(),
            })
            .collect();
        IndexedCorpus { mode, documents }
    }

    /// All sentences in document order.
    pub fn sentences(&self) -> Vec<Vec<u32>> {
        self.documents
            .iter()
            .flat_map(|d| d.sentences.iter().cloned())
            .collect()
    }

    pub fn token_count(&self) -> usize {
        self.documents
            .iter()
            .flat_map(|d| &d.sentences)
            .map(Vec::len)
            .sum()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "#corpus mode={} documents={}",
            self.mode,
            self.documents.len()
        )?;
        for doc in &self.documents {
            writeln!(w, ">\t{}", doc.id)?;
            for sentence in &doc.sentences {
                let mut first = true;
                for idx in sentence {
                    if !first {
                        w.write_all(b" ")?;
                    }
                    write!(w, "{idx}")?;
                    first = false;
                }
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_error(1, "missing corpus header"))??;
        let mode = header
            .strip_prefix("#corpus ")
            .and_then(|rest| {
                rest.split_whitespace()
                    .find_map(|kv| kv.strip_prefix("mode="))
            })
            .ok_or_else(|| parse_error(1, "bad corpus header"))?
            .parse()
            .map_err(|e: crate::Error| parse_error(1, e.to_string()))?;

        let mut documents: Vec<IndexedDocument> = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if let Some(id) = line.strip_prefix(">\t") {
                documents.push(IndexedDocument {
                    id: id.to_string(),
                    sentences: Vec::new(),
                });
                continue;
            }
            let doc = documents
                .last_mut()
                .ok_or_else(|| parse_error(line_no, "sentence before first document marker"))?;
            let sentence = line
                .split_ascii_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_error(line_no, e.to_string()))?;
            doc.sentences.push(sentence);
        }
        Ok(IndexedCorpus { mode, documents })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_empty_sentences() {
        let corpus = IndexedCorpus {
            mode: FilterMode::Annotated,
            documents: vec![
                IndexedDocument {
                    id: "a".into(),
                    sentences: vec![vec![0, 1, 2], vec![], vec![3]],
                },
                IndexedDocument {
                    id: "b".into(),
                    sentences: vec![vec![]],
                },
            ],
        };
        let mut buf = Vec::new();
        corpus.write(&mut buf).unwrap();
        let back = IndexedCorpus::read(buf.as_slice()).unwrap();
        assert_eq!(back, corpus);
    }
}
