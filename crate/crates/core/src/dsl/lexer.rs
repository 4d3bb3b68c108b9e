use super::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Punct(char),
    Arrow,
    DashDash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Arrow => "`->`".into(),
            Tok::DashDash => "`--`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '/' && cur.peek2() == Some('/') {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, column) = (cur.line, cur.column);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, column });
        let Some(c) = cur.peek() else {
            push(&mut out, Tok::Eof);
            return Ok(out);
        };
        let starts_number = c.is_ascii_digit()
            || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit()))
            || (c == '-' && cur.peek2().is_some_and(|d| d.is_ascii_digit() || d == '.'));
        if starts_number {
            let start = cur.offset();
            cur.bump();
            while cur
                .peek()
                .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
            {
                // allow a sign right after an exponent marker
                let c = cur.bump().unwrap();
                if (c == 'e' || c == 'E') && matches!(cur.peek(), Some('+') | Some('-')) {
                    cur.bump();
                }
            }
            let end = cur.offset();
            let text = &src[start..end];
            let v = text.parse::<f64>().map_err(|_| ParseDiagnostic::error(format!("malformed number `{text}`"), line, column))?;
            push(&mut out, Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_alphanumeric() || c == '_' || c == '^' {
                    s.push(c);
                    cur.bump();
                } else if c == '-' && cur.peek2().is_some_and(|d| d.is_alphabetic()) {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            push(&mut out, Tok::Ident(s));
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(ParseDiagnostic::error("unterminated string", line, column)),
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => return Err(ParseDiagnostic::error("bad escape in string", cur.line, cur.column)),
                    },
                    Some(c) => s.push(c),
                }
            }
            push(&mut out, Tok::Str(s));
        } else if c == '-' && cur.peek2() == Some('>') {
            cur.bump();
            cur.bump();
            push(&mut out, Tok::Arrow);
        } else if c == '-' && cur.peek2() == Some('-') {
            cur.bump();
            cur.bump();
            push(&mut out, Tok::DashDash);
        } else if "{}()[];:,=*/+#".contains(c) {
            cur.bump();
            push(&mut out, Tok::Punct(c));
        } else {
            return Err(ParseDiagnostic::error(format!("unexpected character `{c}`"), line, column));
        }
    }
}
