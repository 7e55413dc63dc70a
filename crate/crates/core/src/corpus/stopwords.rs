use std::collections::HashSet;
use std::io::BufRead;

use crate::error::Result;

/// Standard English stop-word list (the common 179-word list used by NLTK).
pub const ENGLISH: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn",
    "wouldn't",
];

/// POS tags removed in the annotated pipeline: wh-determiners, pronouns,
/// auxiliaries/modals, predeterminers, possessive endings, prepositions and
/// punctuation. Penn Treebank tags plus their Universal Dependencies
/// counterparts.
pub const DEFAULT_POS_BLOCKLIST: &[&str] = &[
    "WDT", "WP", "WP$", "PRP", "PRP$", "MD", "PDT", "POS", "IN", "TO", // Penn
    ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "HYPH", "NFP", // Penn punctuation
    "PRON", "AUX", "ADP", "PUNCT", // UD
];

pub fn english_stoplist() -> HashSet<String> {
    ENGLISH.iter().map(|w| w.to_string()).collect()
}

pub fn default_pos_blocklist() -> HashSet<String> {
    DEFAULT_POS_BLOCKLIST.iter().map(|t| t.to_string()).collect()
}

/// Reads a stoplist: one word per line, blank lines and `#` comments ignored.
pub fn read_stoplist<R: BufRead>(reader: R) -> Result<HashSet<String>> {
    let mut words = HashSet::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.insert(word.to_lowercase());
    }
    Ok(words)
}
