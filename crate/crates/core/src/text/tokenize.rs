pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Lowercases and splits social-media text. URLs become `<url>`, mentions
/// become `<user>`, hashtags keep their word, punctuation is split off.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) {
            out.push(URL_TOKEN.to_string());
            continue;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let next_is_word = chars.get(i + 1).is_some_and(|&n| is_word_char(n));
            if c == '@' && next_is_word {
                i += 1;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(USER_TOKEN.to_string());
            } else if c == '#' && next_is_word {
                i += 1;
            } else if is_word_char(c) {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(word.to_lowercase());
            } else {
                out.push(c.to_lowercase().collect());
                i += 1;
            }
        }
    }
    out
}
