//! Field escaping shared by the TSV formats (lexicons, candidates, reports).
//!
//! Tabs, newlines, carriage returns and backslashes inside a field are written as
//! `\t`, `\n`, `\r` and `\\` so every record stays on one line.

/// Escapes a field for a single TSV cell.
pub fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

/// Reverses [`escape`]. Unknown escape sequences are kept verbatim.
pub fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn escapes_control_characters() {
        assert_eq!(escape("a\tb\nc\\"), "a\\tb\\nc\\\\");
    }

    proptest! {
        #[test]
        fn escape_round_trips(s in any::<String>()) {
            let escaped = escape(&s);
            prop_assert!(!escaped.contains('\t'));
            prop_assert!(!escaped.contains('\n'));
            prop_assert_eq!(unescape(&escaped), s);
        }
    }
}
