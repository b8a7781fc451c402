use super::IdlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    IntLiteral,
    /// `0wx` followed by hex digits: an unsigned 32-bit word.
    WordLiteral,
    StringLiteral,
    CharLiteral,
    Punct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Source text of the token, quotes and prefixes included.
    pub text: String,
    pub line: u32,
    pub col: u32,
}

pub const KEYWORDS: &[&str] = &[
    "typedef",
    "struct",
    "enum",
    "interface",
    "const",
    "void",
    "int",
    "long",
    "short",
    "char",
    "wchar_t",
    "boolean",
    "unsigned",
    "signed",
    "float",
    "double",
];

const PUNCTS: &[&str] = &["...", "{", "}", "(", ")", "[", "]", ";", ",", "*", "&", "=", ":", "-"];

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.is(TokenKind::Punct, p)
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.is(TokenKind::Keyword, k)
    }

    /// Numeric value of an int or word literal.
    pub fn number(&self) -> Option<u64> {
        let t = self.text.as_str();
        match self.kind {
            TokenKind::WordLiteral => u64::from_str_radix(&t[3..], 16).ok(),
            TokenKind::IntLiteral => {
                if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                    u64::from_str_radix(hex, 16).ok()
                } else {
                    t.parse().ok()
                }
            }
            _ => None,
        }
    }

    /// Decoded contents of a string or char literal.
    pub fn unquoted(&self) -> Option<String> {
        match self.kind {
            TokenKind::StringLiteral | TokenKind::CharLiteral => Some(unescape(&self.text[1..self.text.len() - 1])),
            _ => None,
        }
    }
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

struct Cursor {
    chars: Vec<char>,
    at: usize,
    line: u32,
    col: u32,
}

impl Cursor {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.at + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, IdlError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        at: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek(0) {
        let (line, col) = (cur.line, cur.col);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while cur.peek(0).is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(IdlError::lex(line, col, "unterminated block comment"));
                }
            }
            continue;
        }

        let start = cur.at;
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while cur.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word: String = cur.chars[start..cur.at].iter().collect();
            if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, line, col)?
        } else if c == '"' || c == '\'' {
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        let what = if c == '"' { "string" } else { "character" };
                        return Err(IdlError::lex(line, col, &format!("unterminated {what} literal")));
                    }
                    Some('\\') => {
                        cur.bump();
                    }
                    Some(q) if q == c => break,
                    Some(_) => {}
                }
            }
            if c == '"' {
                TokenKind::StringLiteral
            } else {
                if cur.at - start < 3 {
                    return Err(IdlError::lex(line, col, "empty character literal"));
                }
                TokenKind::CharLiteral
            }
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.starts_with(p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct
        } else {
            return Err(IdlError::lex(line, col, &format!("stray character `{c}`")));
        };
        tokens.push(Token {
            kind,
            text: cur.chars[start..cur.at].iter().collect(),
            line,
            col,
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor, line: u32, col: u32) -> Result<TokenKind, IdlError> {
    let hex_digits = |cur: &mut Cursor| {
        let mut n = 0;
        while cur.peek(0).is_some_and(|c| c.is_ascii_hexdigit()) {
            cur.bump();
            n += 1;
        }
        n
    };
    let kind = if cur.starts_with("0wx") {
        (0..3).for_each(|_| {
            cur.bump();
        });
        if hex_digits(cur) == 0 {
            return Err(IdlError::lex(line, col, "word literal needs hex digits after `0wx`"));
        }
        TokenKind::WordLiteral
    } else if cur.starts_with("0x") || cur.starts_with("0X") {
        cur.bump();
        cur.bump();
        if hex_digits(cur) == 0 {
            return Err(IdlError::lex(line, col, "hex literal needs digits after `0x`"));
        }
        TokenKind::IntLiteral
    } else {
        while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
        TokenKind::IntLiteral
    };
    if cur.peek(0).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(IdlError::lex(cur.line, cur.col, "malformed number"));
    }
    Ok(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<(TokenKind, String)> {
        tokenize(s).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn enum_variant_line() {
        use TokenKind::*;
        assert_eq!(
            kinds("CS_VREDRAW = 1,"),
            vec![
                (Ident, "CS_VREDRAW".into()),
                (Punct, "=".into()),
                (IntLiteral, "1".into()),
                (Punct, ",".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  // only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn word_literal_value() {
        let toks = tokenize("0wx80000000").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::WordLiteral);
        assert_eq!(toks[0].number(), Some(0x8000_0000));
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[0].line, toks[0].col), (1, 1));
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn literals_and_comments() {
        let toks = tokenize("/* x */ \"#325\\\"12\" 'a' ... // tail").unwrap();
        assert_eq!(toks[0].unquoted().as_deref(), Some("#325\"12"));
        assert_eq!(toks[1].unquoted().as_deref(), Some("a"));
        assert!(toks[2].is_punct("..."));
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn lex_errors_carry_location() {
        let e = tokenize("a\n  @").unwrap_err();
        assert_eq!((e.pos().line, e.pos().col), (2, 3));
        assert!(tokenize("\"abc").is_err());
        assert!(tokenize("/* open").is_err());
        assert!(tokenize("0wx").is_err());
        assert!(tokenize("12ab").is_err());
    }

    #[test]
    fn texts_cover_input() {
        let src = "typedef struct { long sec; } t; // c\n";
        let joined: String = tokenize(src)
            .unwrap()
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let squeeze = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        assert_eq!(squeeze(&joined), squeeze("typedef struct { long sec; } t;"));
    }
}
