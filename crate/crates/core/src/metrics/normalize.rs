//! VQA-style answer normalization: lowercase, punctuation stripping with a
//! fixed contraction table, article removal, number words to digits.

use serde::{Deserialize, Serialize};

/// Ordered lowercase tokens; the input to answer matching and the n-gram
/// metrics. Normalization is idempotent and never yields empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<String>);

impl TokenSequence {
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

const NUMBER_WORDS: [(&str, &str); 11] = [
    ("zero", "0"),
    ("one", "1"),
    ("two", "2"),
    ("three", "3"),
    ("four", "4"),
    ("five", "5"),
    ("six", "6"),
    ("seven", "7"),
    ("eight", "8"),
    ("nine", "9"),
    ("ten", "10"),
];

/// Fixed contraction table; entries expand to space-separated words.
const CONTRACTIONS: [(&str, &str); 30] = [
    ("isn't", "is not"),
    ("aren't", "are not"),
    ("wasn't", "was not"),
    ("weren't", "were not"),
    ("don't", "do not"),
    ("doesn't", "does not"),
    ("didn't", "did not"),
    ("can't", "can not"),
    ("couldn't", "could not"),
    ("won't", "will not"),
    ("wouldn't", "would not"),
    ("shouldn't", "should not"),
    ("hasn't", "has not"),
    ("haven't", "have not"),
    ("hadn't", "had not"),
    ("it's", "it is"),
    ("that's", "that is"),
    ("there's", "there is"),
    ("what's", "what is"),
    ("who's", "who is"),
    ("he's", "he is"),
    ("she's", "she is"),
    ("i'm", "i am"),
    ("you're", "you are"),
    ("we're", "we are"),
    ("they're", "they are"),
    ("i've", "i have"),
    ("you've", "you have"),
    ("we've", "we have"),
    ("let's", "let us"),
];

/// Normalize a free-text answer. Idempotent: applying twice equals once.
pub fn normalize_answer(text: &str) -> TokenSequence {
    let lowered = text.to_lowercase();
    let mut tokens: Vec<String> = Vec::new();
    for raw in lowered.split_whitespace() {
        // keep letters, digits, and intra-word apostrophes; strip the rest
        let cleaned: String = raw
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == '\'')
            .collect();
        let cleaned = cleaned.trim_matches('\'');
        if cleaned.is_empty() {
            continue;
        }
        if let Some((_, expansion)) = CONTRACTIONS.iter().find(|(c, _)| *c == cleaned) {
            tokens.extend(expansion.split(' ').map(String::from));
        } else {
            // apostrophes outside the table are stripped outright
            let word: String = cleaned.chars().filter(|c| *c != '\'').collect();
            if !word.is_empty() {
                tokens.push(word);
            }
        }
    }
    let tokens = tokens
        .into_iter()
        .filter(|t| !ARTICLES.contains(&t.as_str()))
        .map(|t| {
            NUMBER_WORDS
                .iter()
                .find(|(w, _)| *w == t)
                .map(|(_, d)| (*d).to_string())
                .unwrap_or(t)
        })
        .collect();
    TokenSequence(tokens)
}

/// Plain caption tokenization for the n-gram metrics: lowercase,
/// punctuation to whitespace, split.
pub fn tokenize_caption(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn article_and_punctuation_removal() {
        assert_eq!(normalize_answer("The Dog!").0, vec!["dog"]);
    }

    #[test]
    fn number_words_become_digits() {
        assert_eq!(normalize_answer("two people").0, vec!["2", "people"]);
    }

    #[test]
    fn contraction_table_lookup() {
        assert_eq!(normalize_answer("isn't").0, vec!["is", "not"]);
    }

    #[test]
    fn unlisted_apostrophes_are_stripped() {
        assert_eq!(normalize_answer("dog's bone").0, vec!["dogs", "bone"]);
    }

    #[test]
    fn normalization_is_idempotent() {
        for s in ["The Dog!", "isn't it two?", "a an the", "Ten dogs."] {
            let once = normalize_answer(s);
            let twice = normalize_answer(&once.joined());
            assert_eq!(once, twice, "{s}");
        }
    }

    #[test]
    fn no_empty_tokens() {
        let t = normalize_answer("  !!  '' the ");
        assert!(t.0.iter().all(|tok| !tok.is_empty()));
        assert!(t.is_empty());
    }
}
