//! Rule-based sentence segmentation for documents that arrive unsegmented.

use std::collections::HashSet;

use super::{normalize_ws, CorpusError, Sentence};

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "vs.", "etc.", "e.g.",
    "i.e.", "Inc.", "Ltd.", "Co.", "Corp.", "U.S.", "U.K.", "No.", "Gen.", "Gov.", "Sen.", "Rep.",
    "Lt.", "Col.", "Capt.", "Jan.", "Feb.", "Mar.", "Apr.", "Aug.", "Sept.", "Oct.", "Nov.",
    "Dec.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201c}', '\u{2018}'];

/// Segmenter configuration.
#[derive(Debug, Clone)]
pub struct SegmenterProfile {
    /// Tokens (including the trailing period) that never end a sentence.
    pub abbreviations: HashSet<String>,
    /// Reject documents with more sentences than this.
    pub max_sentences: Option<usize>,
}

impl Default for SegmenterProfile {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SegmenterProfile {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            abbreviations: abbreviations.into_iter().map(Into::into).collect(),
            max_sentences: None,
        }
    }

    pub fn max_sentences(mut self, max: usize) -> Self {
        self.max_sentences = Some(max);
        self
    }

    fn is_abbreviation(&self, token: &str) -> bool {
        let token = token.trim_start_matches(OPENERS);
        self.abbreviations.contains(token)
    }
}

/// Splits `text` at terminal punctuation (`.`, `!`, `?`) followed by whitespace
/// or end of text, unless the period closes a listed abbreviation.
pub fn segment(text: &str, profile: &SegmenterProfile) -> Result<Vec<Sentence>, CorpusError> {
    let chars: Vec<char> = text.chars().collect();
    if chars.iter().all(|c| c.is_whitespace()) {
        return Err(CorpusError::EmptyText);
    }
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
                end += 1;
            }
            while end < chars.len() && CLOSERS.contains(&chars[end]) {
                end += 1;
            }
            let at_break = end == chars.len() || chars[end].is_whitespace();
            if at_break && !(c == '.' && end == i + 1 && abbreviation_before(&chars, i, profile)) {
                spans.push((start.take().unwrap(), end));
            }
            i = end;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = chars.len();
        while chars[end - 1].is_whitespace() {
            end -= 1;
        }
        spans.push((s, end));
    }
    if let Some(max) = profile.max_sentences {
        if spans.len() > max {
            return Err(CorpusError::TooManySentences {
                found: spans.len(),
                max,
            });
        }
    }
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, (s, e))| Sentence {
            index,
            text: normalize_ws(&chars[s..e].iter().collect::<String>()),
            char_span: (s, e),
        })
        .collect())
}

fn abbreviation_before(chars: &[char], period: usize, profile: &SegmenterProfile) -> bool {
    let mut s = period;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    let token: String = chars[s..=period].iter().collect();
    profile.is_abbreviation(&token)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str, profile: &SegmenterProfile) -> Vec<String> {
        segment(text, profile)
            .unwrap()
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn two_periods() {
        assert_eq!(
            texts(
                "A. B.",
                &SegmenterProfile::with_abbreviations::<_, &str>([])
            ),
            vec!["A.", "B."]
        );
    }

    #[test]
    fn no_terminal_punctuation() {
        let text = "  just one clause here ";
        let s = segment(text, &SegmenterProfile::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].char_span, (2, 22));
        assert_eq!(s[0].text, "just one clause here");
    }

    #[test]
    fn blank_text_is_error() {
        assert!(matches!(
            segment(" \n\t", &SegmenterProfile::default()),
            Err(CorpusError::EmptyText)
        ));
    }

    #[test]
    fn max_sentence_guard() {
        let p = SegmenterProfile::default().max_sentences(2);
        assert!(matches!(
            segment("A. B. C.", &p),
            Err(CorpusError::TooManySentences { found: 3, max: 2 })
        ));
    }

    // Hand-labelled fixture: (text, abbreviations, expected sentences).
    #[test]
    fn abbreviation_fixture() {
        let cases: &[(&str, &[&str], &[&str])] = &[
            ("Dr. Smith left.", &["Dr."], &["Dr. Smith left."]),
            ("Dr. Smith left.", &[], &["Dr.", "Smith left."]),
            ("A. B.", &["Dr."], &["A.", "B."]),
            (
                "He met Mr. Jones. They talked.",
                &["Mr."],
                &["He met Mr. Jones.", "They talked."],
            ),
            (
                "Prices rose 3.5 percent. Markets fell.",
                &[],
                &["Prices rose 3.5 percent.", "Markets fell."],
            ),
            ("Really? Yes! Fine.", &[], &["Really?", "Yes!", "Fine."]),
            ("Wait... what?", &[], &["Wait...", "what?"]),
            (
                "He said \"stop.\" Then he left.",
                &[],
                &["He said \"stop.\"", "Then he left."],
            ),
            (
                "(See Fig. 2.) Next.",
                &["Fig."],
                &["(See Fig. 2.)", "Next."],
            ),
            (
                "The U.S. economy grew. Jobs rose.",
                &["U.S."],
                &["The U.S. economy grew.", "Jobs rose."],
            ),
            (
                "The U.S. economy grew.",
                &[],
                &["The U.S.", "economy grew."],
            ),
            (
                "Apples, pears, etc. were sold.",
                &["etc."],
                &["Apples, pears, etc. were sold."],
            ),
            (
                "Visit St. Paul. It is cold.",
                &["St."],
                &["Visit St. Paul.", "It is cold."],
            ),
            ("e.g. this one.", &["e.g."], &["e.g. this one."]),
            ("No punctuation at all", &[], &["No punctuation at all"]),
            (
                "Trailing text after. and more",
                &[],
                &["Trailing text after.", "and more"],
            ),
            ("One.Two.", &[], &["One.Two."]),
            ("Line one.\nLine two.", &[], &["Line one.", "Line two."]),
            ("Stop!!! Go.", &[], &["Stop!!!", "Go."]),
            (
                "Ask Prof. Lee (Dr. Kim agrees).",
                &["Prof.", "Dr."],
                &["Ask Prof. Lee (Dr. Kim agrees)."],
            ),
        ];
        assert_eq!(cases.len(), 20);
        for (text, abbr, expected) in cases {
            let profile = SegmenterProfile::with_abbreviations(abbr.iter().copied());
            assert_eq!(&texts(text, &profile), expected, "case {text:?}");
        }
    }

    #[test]
    fn spans_are_ordered_and_cover_non_whitespace() {
        let text = "  Dr. Who came.  Then   left!  Bye";
        let s = segment(text, &SegmenterProfile::default()).unwrap();
        let chars: Vec<char> = text.chars().collect();
        let mut covered = vec![false; chars.len()];
        let mut prev = 0;
        for sent in &s {
            assert!(sent.char_span.0 >= prev);
            prev = sent.char_span.1;
            for c in &mut covered[sent.char_span.0..sent.char_span.1] {
                *c = true;
            }
        }
        for (c, cov) in chars.iter().zip(covered) {
            assert!(c.is_whitespace() || cov);
        }
    }
}
