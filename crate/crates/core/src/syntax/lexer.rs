//! Tokenizers for C-family fragments and a flat Python token-kind lexer.
//! Comments, whitespace and preprocessor lines never produce tokens.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Number,
    Str,
    Op,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
}

impl Token {
    pub fn is(&self, kind: TokKind) -> bool {
        self.kind == kind
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokKind::Op && self.text == op
    }

    pub fn is_word(&self, word: &str) -> bool {
        self.kind == TokKind::Ident && self.text == word
    }
}

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "<=>", "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "?", ":", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~",
    "&", "|", "^", ".", "@",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn at_line_start(&self) -> bool {
        self.chars[..self.pos].iter().rev().take_while(|c| **c != '\n').all(|c| c.is_whitespace())
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn quoted(&mut self, quote: char) {
        self.pos += 1;
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == '\\' {
                self.pos += 1;
            } else if c == quote || c == '\n' {
                break;
            }
        }
    }

    fn number(&mut self) -> String {
        let start = self.pos;
        let hex = self.starts_with("0x") || self.starts_with("0X");
        while let Some(c) = self.peek() {
            let prev = if self.pos > start { Some(self.chars[self.pos - 1]) } else { None };
            let exp_sign = matches!(c, '+' | '-')
                && match prev {
                    Some('e' | 'E') => !hex,
                    Some('p' | 'P') => true,
                    _ => false,
                };
            let digit_sep = c == '\'' && prev.is_some_and(|p| p.is_ascii_hexdigit());
            if c.is_alphanumeric() || c == '.' || c == '_' || digit_sep || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn operator(&mut self) -> Option<&'static str> {
        let op = OPERATORS.iter().find(|op| self.starts_with(op))?;
        self.pos += op.chars().count();
        Some(op)
    }
}

/// Tokenizes Java/C/C++ text.
pub fn lex_c_family(src: &str) -> Vec<Token> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.pos += 1;
        } else if cur.starts_with("//") {
            cur.skip_to_eol();
        } else if cur.starts_with("/*") {
            cur.pos += 2;
            while cur.peek().is_some() && !cur.starts_with("*/") {
                cur.pos += 1;
            }
            cur.pos = (cur.pos + 2).min(cur.chars.len());
        } else if c == '#' && cur.at_line_start() {
            // preprocessor directive, with backslash continuations
            loop {
                cur.skip_to_eol();
                let continued = cur.pos > 0 && cur.chars[cur.pos - 1] == '\\';
                if !continued || cur.peek().is_none() {
                    break;
                }
                cur.pos += 1;
            }
        } else if c == '@' && cur.peek_at(1).is_some_and(is_ident_start) {
            // annotation, including a parenthesized argument list
            cur.pos += 1;
            cur.take_while(|c| is_ident_continue(c) || c == '.');
            if cur.peek() == Some('(') {
                let mut depth = 0usize;
                while let Some(c) = cur.peek() {
                    cur.pos += 1;
                    match c {
                        '(' => depth += 1,
                        ')' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                }
            }
        } else if c == '"' || c == '\'' {
            cur.quoted(c);
            out.push(Token { kind: TokKind::Str, text: String::new() });
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            let text = cur.number();
            out.push(Token { kind: TokKind::Number, text });
        } else if is_ident_start(c) {
            let text = cur.take_while(is_ident_continue);
            // string prefixes: L"..", u8"..", R"(..)"
            if matches!(cur.peek(), Some('"') | Some('\'')) && matches!(text.as_str(), "L" | "u" | "U" | "u8" | "R") {
                let q = cur.peek().unwrap();
                cur.quoted(q);
                out.push(Token { kind: TokKind::Str, text: String::new() });
            } else {
                out.push(Token { kind: TokKind::Ident, text });
            }
        } else {
            let kind = match c {
                '(' => Some(TokKind::LParen),
                ')' => Some(TokKind::RParen),
                '{' => Some(TokKind::LBrace),
                '}' => Some(TokKind::RBrace),
                '[' => Some(TokKind::LBracket),
                ']' => Some(TokKind::RBracket),
                ';' => Some(TokKind::Semi),
                ',' => Some(TokKind::Comma),
                _ => None,
            };
            if let Some(kind) = kind {
                cur.pos += 1;
                out.push(Token { kind, text: c.to_string() });
            } else if let Some(op) = cur.operator() {
                out.push(Token { kind: TokKind::Op, text: op.to_string() });
            } else {
                // stray character (backtick, non-ASCII symbol)
                cur.pos += 1;
            }
        }
    }
    out
}

const PYTHON_KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif", "else", "except",
    "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
    "return", "try", "while", "with", "yield",
];

const PYTHON_OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "=", "<", ">", "&", "|", "^", "~", ".", "@",
];

/// Flat token-kind lexer for Python: emits `name`, `operator`, `literal`, or
/// the keyword itself. Brackets, commas and colons are structural noise and
/// are dropped.
pub fn python_kinds(src: &str) -> Vec<String> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() || c == '\\' {
            cur.pos += 1;
        } else if c == '#' {
            cur.skip_to_eol();
        } else if c == '"' || c == '\'' {
            python_string(&mut cur);
            out.push("literal".to_string());
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            cur.number();
            out.push("literal".to_string());
        } else if is_ident_start(c) {
            let word = cur.take_while(is_ident_continue);
            let lower = word.to_ascii_lowercase();
            let is_prefix = lower.len() <= 2 && lower.chars().all(|c| matches!(c, 'r' | 'b' | 'f' | 'u'));
            if is_prefix && matches!(cur.peek(), Some('"') | Some('\'')) {
                python_string(&mut cur);
                out.push("literal".to_string());
            } else if matches!(word.as_str(), "True" | "False" | "None") {
                out.push("literal".to_string());
            } else if PYTHON_KEYWORDS.contains(&word.as_str()) {
                out.push(word);
            } else {
                out.push("name".to_string());
            }
        } else if let Some(op) = PYTHON_OPERATORS.iter().find(|op| cur.starts_with(op)) {
            cur.pos += op.len();
            out.push("operator".to_string());
        } else {
            cur.pos += 1;
        }
    }
    out
}

fn python_string(cur: &mut Cursor<'_>) {
    let q = cur.peek().unwrap();
    let triple: String = [q, q, q].iter().collect();
    if cur.starts_with(&triple) {
        cur.pos += 3;
        while cur.peek().is_some() && !cur.starts_with(&triple) {
            if cur.peek() == Some('\\') {
                cur.pos += 1;
            }
            cur.pos += 1;
        }
        cur.pos = (cur.pos + 3).min(cur.chars.len());
    } else {
        cur.quoted(q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex_c_family(src).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn operators_longest_match() {
        assert_eq!(texts("a>>>=b<=c->d::e"), vec!["a", ">>>=", "b", "<=", "c", "->", "d", "::", "e"]);
    }

    #[test]
    fn comments_and_preprocessor_vanish() {
        let toks = texts("#include <x.h>\nint /* c */ a; // tail\n  #define F(x) \\\n  x\nb;");
        assert_eq!(toks, vec!["int", "a", ";", "b", ";"]);
    }

    #[test]
    fn literals() {
        let toks = lex_c_family("x = 1.5e-3f + 0xFFL + \"s\\\"q\" + 'c';");
        let kinds: Vec<_> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokKind::Ident,
                TokKind::Op,
                TokKind::Number,
                TokKind::Op,
                TokKind::Number,
                TokKind::Op,
                TokKind::Str,
                TokKind::Op,
                TokKind::Str,
                TokKind::Semi
            ]
        );
    }

    #[test]
    fn annotations_are_skipped() {
        assert_eq!(texts("@Override @SuppressWarnings(\"x\") void f()"), vec!["void", "f", "(", ")"]);
    }

    #[test]
    fn python_flat_kinds() {
        let kinds = python_kinds("def f(x):\n    return x + 1  # done\n");
        assert_eq!(kinds, vec!["def", "name", "name", "return", "name", "operator", "literal"]);
        assert_eq!(
            python_kinds("s = '''a\n'b'''\nt = rb'x'"),
            vec!["name", "operator", "literal", "name", "operator", "literal"]
        );
        assert!(python_kinds("").is_empty());
    }
}
