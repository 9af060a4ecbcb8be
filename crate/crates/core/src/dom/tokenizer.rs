//! Error-tolerant HTML tokenizer.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    StartTag {
        name: String,
        attributes: Vec<(String, String)>,
    },
    EndTag {
        name: String,
    },
    Text(String),
    /// Raw contents of script/style/title.
    RawText(String),
}

/// Elements whose content is not tokenized as markup.
const RAW_TEXT: &[&str] = &["script", "style", "title", "textarea"];

pub(crate) struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    pending_raw: Option<String>,
}

impl<'a> Tokenizer<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            pending_raw: None,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn raw_text(&mut self, tag: &str) -> Token {
        let rest = self.rest();
        let lower = rest.to_ascii_lowercase();
        let needle = format!("</{tag}");
        let mut search = 0;
        let end = loop {
            match lower[search..].find(&needle) {
                Some(i) => {
                    let at = search + i;
                    let after = lower.as_bytes().get(at + needle.len()).copied();
                    if matches!(after, None | Some(b'>') | Some(b'/') | Some(b' ') | Some(b'\t') | Some(b'\n') | Some(b'\r') | Some(b'\x0c')) {
                        break at;
                    }
                    search = at + needle.len();
                }
                None => break rest.len(),
            }
        };
        let content = &rest[..end];
        self.pos += end;
        if tag == "textarea" {
            Token::Text(decode(content))
        } else if tag == "title" {
            Token::RawText(decode(content))
        } else {
            Token::RawText(content.to_string())
        }
    }

    fn skip_past(&mut self, pat: &str) {
        match self.rest().find(pat) {
            Some(i) => self.pos += i + pat.len(),
            None => self.pos = self.src.len(),
        }
    }

    fn read_tag(&mut self, end: bool) -> Option<Token> {
        // self.pos points just after '<' or '</'
        let bytes = self.src.as_bytes();
        let start = self.pos;
        while self.pos < bytes.len() && !is_ws(bytes[self.pos]) && bytes[self.pos] != b'/' && bytes[self.pos] != b'>' {
            self.pos += 1;
        }
        let name = self.src[start..self.pos].to_ascii_lowercase();
        let mut attributes: Vec<(String, String)> = Vec::new();
        loop {
            while self.pos < bytes.len() && (is_ws(bytes[self.pos]) || bytes[self.pos] == b'/') {
                self.pos += 1;
            }
            if self.pos >= bytes.len() {
                // EOF inside a tag drops it
                return None;
            }
            if bytes[self.pos] == b'>' {
                self.pos += 1;
                break;
            }
            let a_start = self.pos;
            self.pos += 1; // an attribute name may begin with '='
            while self.pos < bytes.len() && !is_ws(bytes[self.pos]) && !matches!(bytes[self.pos], b'=' | b'>' | b'/') {
                self.pos += 1;
            }
            let a_name = self.src[a_start..self.pos].to_ascii_lowercase();
            while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
                self.pos += 1;
            }
            let mut value = String::new();
            if self.pos < bytes.len() && bytes[self.pos] == b'=' {
                self.pos += 1;
                while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
                    self.pos += 1;
                }
                if self.pos >= bytes.len() {
                    return None;
                }
                let q = bytes[self.pos];
                if q == b'"' || q == b'\'' {
                    self.pos += 1;
                    let v_start = self.pos;
                    while self.pos < bytes.len() && bytes[self.pos] != q {
                        self.pos += 1;
                    }
                    if self.pos >= bytes.len() {
                        return None;
                    }
                    value = decode(&self.src[v_start..self.pos]);
                    self.pos += 1;
                } else {
                    let v_start = self.pos;
                    while self.pos < bytes.len() && !is_ws(bytes[self.pos]) && bytes[self.pos] != b'>' {
                        self.pos += 1;
                    }
                    value = decode(&self.src[v_start..self.pos]);
                }
            }
            if !attributes.iter().any(|(k, _)| *k == a_name) {
                attributes.push((a_name, value));
            }
        }
        if end {
            Some(Token::EndTag { name })
        } else {
            if RAW_TEXT.contains(&name.as_str()) {
                self.pending_raw = Some(name.clone());
            }
            Some(Token::StartTag { name, attributes })
        }
    }
}

impl Iterator for Tokenizer<'_> {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        if let Some(tag) = self.pending_raw.take() {
            let tok = self.raw_text(&tag);
            match &tok {
                Token::RawText(t) | Token::Text(t) if t.is_empty() => {}
                _ => return Some(tok),
            }
        }
        loop {
            if self.pos >= self.src.len() {
                return None;
            }
            let rest = self.rest();
            let bytes = rest.as_bytes();
            if bytes[0] != b'<' {
                let end = find_markup(rest).unwrap_or(rest.len());
                self.pos += end;
                return Some(Token::Text(decode(&rest[..end])));
            }
            let next = bytes.get(1).copied();
            match next {
                Some(b'!') => {
                    if rest.starts_with("<!--") {
                        self.pos += 4;
                        self.skip_past("-->");
                    } else {
                        self.skip_past(">");
                    }
                }
                Some(b'?') => self.skip_past(">"),
                Some(b'/') => match bytes.get(2).copied() {
                    Some(c) if c.is_ascii_alphabetic() => {
                        self.pos += 2;
                        {
                            let t = self.read_tag(true)?;
                            return Some(t)
                        }
                    }
                    Some(b'>') => self.pos += 3,
                    Some(_) => self.skip_past(">"),
                    None => {
                        self.pos = self.src.len();
                        return Some(Token::Text("</".to_string()));
                    }
                },
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos += 1;
                    {
                        let t = self.read_tag(false)?;
                        return Some(t)
                    }
                }
                _ => {
                    // a lone '<' is text
                    let end = find_markup(&rest[1..]).map(|i| i + 1).unwrap_or(rest.len());
                    self.pos += end;
                    return Some(Token::Text(decode(&rest[..end])));
                }
            }
        }
    }
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0c')
}

/// Position of the next '<' that opens markup.
fn find_markup(s: &str) -> Option<usize> {
    let b = s.as_bytes();
    let mut i = 0;
    while let Some(off) = s[i..].find('<') {
        let at = i + off;
        match b.get(at + 1) {
            Some(c) if c.is_ascii_alphabetic() || matches!(c, b'!' | b'/' | b'?') => return Some(at),
            _ => i = at + 1,
        }
    }
    None
}

fn decode(s: &str) -> String {
    if s.contains('&') {
        html_escape::decode_html_entities(s).into_owned()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token> {
        Tokenizer::new(s).collect()
    }

    #[test]
    fn attributes_quoted_unquoted_bare() {
        let t = toks("<input type=text value='a b' disabled>");
        assert_eq!(
            t,
            vec![Token::StartTag {
                name: "input".into(),
                attributes: vec![
                    ("type".into(), "text".into()),
                    ("value".into(), "a b".into()),
                    ("disabled".into(), String::new()),
                ],
            }]
        );
    }

    #[test]
    fn comments_and_doctype_skipped() {
        let t = toks("<!DOCTYPE html><!-- <p>no</p> -->x");
        assert_eq!(t, vec![Token::Text("x".into())]);
    }

    #[test]
    fn lone_lt_is_text() {
        let t = toks("a < b <3");
        assert_eq!(t, vec![Token::Text("a < b <3".into())]);
    }

    #[test]
    fn raw_text_until_matching_end() {
        let t = toks("<script>var s = '</div>';</script >after");
        assert_eq!(t[1], Token::RawText("var s = '</div>';".into()));
        assert_eq!(t[2], Token::EndTag { name: "script".into() });
        assert_eq!(t[3], Token::Text("after".into()));
    }

    #[test]
    fn eof_inside_tag_drops_it() {
        let t = toks("ok<div class=\"x");
        assert_eq!(t, vec![Token::Text("ok".into())]);
    }

    #[test]
    fn uppercase_names_lowercased() {
        let t = toks("<DIV ID=a></Div>");
        assert_eq!(
            t,
            vec![
                Token::StartTag {
                    name: "div".into(),
                    attributes: vec![("id".into(), "a".into())]
                },
                Token::EndTag { name: "div".into() }
            ]
        );
    }
}
