//! Small suffix-stripping stemmer used by the METEOR stem-match stage.
//! Porter-style rules with bundled tables only; no external data files.

pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.len() <= 3 {
        return w;
    }
    // ordered: first matching rule wins
    const RULES: [(&str, &str); 12] = [
        ("sses", "ss"),
        ("ies", "i"),
        ("ational", "ate"),
        ("tional", "tion"),
        ("ization", "ize"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("iveness", "ive"),
        ("ement", "e"),
        ("ness", ""),
        ("ment", ""),
        ("ful", ""),
    ];
    for (suffix, replacement) in RULES {
        if w.len() > suffix.len() + 1 {
            if let Some(base) = w.strip_suffix(suffix) {
                return format!("{base}{replacement}");
            }
        }
    }
    if w.len() > 4 {
        if let Some(base) = w.strip_suffix("ing") {
            return restore_e(base);
        }
        if let Some(base) = w.strip_suffix("ed") {
            return restore_e(base);
        }
    }
    if let Some(base) = w.strip_suffix("ly") {
        if base.len() >= 3 {
            return base.to_string();
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return w[..w.len() - 1].to_string();
    }
    w
}

// double-consonant endings collapse (running -> run); short stems get
// their silent e back (surfing -> surfe is wrong, so only for CVC-e forms
// we keep it simple: collapse doubles, otherwise leave the base alone)
fn restore_e(base: &str) -> String {
    let bytes = base.as_bytes();
    if bytes.len() >= 2 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
        let c = bytes[bytes.len() - 1] as char;
        if !"aeioulsz".contains(c) {
            return base[..base.len() - 1].to_string();
        }
    }
    base.to_string()
}
