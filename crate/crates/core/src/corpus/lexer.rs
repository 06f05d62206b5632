//! Minimal Python lexer for clone-detection token bags: identifiers,
//! keywords, literals, and operators, with comments and whitespace dropped.
//! It does not validate syntax; any byte sequence lexes deterministically.

const THREE_CHAR_OPS: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const TWO_CHAR_OPS: [&str; 19] = [
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", ":=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=",
];

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    s.len() <= 2 && s.chars().all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
}

pub fn tokenize(source: &str) -> Vec<String> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let c = chars[i];

        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '\\' {
            // Line continuation; lone backslashes elsewhere are noise anyway.
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let (token, next) = lex_string(&chars, i, String::new());
            tokens.push(token);
            i = next;
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            if i < chars.len()
                && (chars[i] == '"' || chars[i] == '\'')
                && is_string_prefix(&ident)
            {
                let (token, next) = lex_string(&chars, i, ident);
                tokens.push(token);
                i = next;
            } else {
                tokens.push(ident);
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_alphanumeric() || d == '.' || d == '_' {
                    i += 1;
                } else if (d == '+' || d == '-')
                    && matches!(chars[i - 1], 'e' | 'E')
                    && chars[start..i].iter().any(|x| x.is_ascii_digit())
                {
                    i += 1;
                } else {
                    break;
                }
            }
            tokens.push(chars[start..i].iter().collect());
            continue;
        }

        // Operators and punctuation, longest match first.
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if let Some(op) = THREE_CHAR_OPS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push((*op).to_string());
            i += 3;
            continue;
        }
        if let Some(op) = TWO_CHAR_OPS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push((*op).to_string());
            i += 2;
            continue;
        }
        tokens.push(c.to_string());
        i += 1;
    }

    tokens
}

/// Lex a string literal starting at the opening quote; `prefix` holds any
/// already-consumed r/b/u/f prefix. Returns the token (prefix and quotes
/// included) and the index just past the literal. Unterminated singles stop
/// at end of line, unterminated triples at end of input.
fn lex_string(chars: &[char], start: usize, prefix: String) -> (String, usize) {
    let quote = chars[start];
    let raw = prefix.to_ascii_lowercase().contains('r');
    let triple = chars.get(start + 1) == Some(&quote) && chars.get(start + 2) == Some(&quote);
    let mut i = start + if triple { 3 } else { 1 };

    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && !raw {
            i += 2;
            continue;
        }
        if triple {
            if c == quote && chars.get(i + 1) == Some(&quote) && chars.get(i + 2) == Some(&quote) {
                i += 3;
                break;
            }
            i += 1;
        } else {
            if c == quote {
                i += 1;
                break;
            }
            if c == '\n' {
                break;
            }
            i += 1;
        }
    }

    let i = i.min(chars.len());
    let mut token = prefix;
    token.extend(&chars[start..i]);
    (token, i)
}
