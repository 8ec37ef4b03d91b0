use super::{PolicyAst, PolicyError, MAX_ATTRIBUTE_LEN};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok<'a> {
    LParen,
    RParen,
    Comma,
    Word(&'a str),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Keyword {
    And,
    Or,
    Of,
}

fn keyword(word: &str) -> Option<Keyword> {
    if word.eq_ignore_ascii_case("and") {
        Some(Keyword::And)
    } else if word.eq_ignore_ascii_case("or") {
        Some(Keyword::Or)
    } else if word.eq_ignore_ascii_case("of") {
        Some(Keyword::Of)
    } else {
        None
    }
}

fn is_attr_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b':' | b'.' | b'@' | b'-')
}

fn tokenize(text: &str) -> Result<Vec<(Tok<'_>, usize)>, PolicyError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'(' => out.push((Tok::LParen, i)),
            b')' => out.push((Tok::RParen, i)),
            b',' => out.push((Tok::Comma, i)),
            _ if b.is_ascii_whitespace() => {}
            _ if is_attr_byte(b) => {
                let start = i;
                while i < bytes.len() && is_attr_byte(bytes[i]) {
                    i += 1;
                }
                if i - start > MAX_ATTRIBUTE_LEN {
                    return Err(PolicyError::AttributeTooLong { offset: start });
                }
                out.push((Tok::Word(&text[start..i]), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(PolicyError::Syntax {
                    offset: i,
                    message: format!("unexpected character {ch:?}"),
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, PolicyError> {
        Err(PolicyError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if keyword(w) == Some(kw))
    }

    fn expect(&mut self, tok: Tok<'static>, what: &str) -> Result<(), PolicyError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<PolicyAst, PolicyError> {
        let mut children = vec![self.term()?];
        while self.at_keyword(Keyword::Or) {
            self.pos += 1;
            children.push(self.term()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { PolicyAst::Or(children) })
    }

    fn term(&mut self) -> Result<PolicyAst, PolicyError> {
        let mut children = vec![self.factor()?];
        while self.at_keyword(Keyword::And) {
            self.pos += 1;
            children.push(self.factor()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { PolicyAst::And(children) })
    }

    fn factor(&mut self) -> Result<PolicyAst, PolicyError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Word(w)) => {
                let next_is_of = matches!(
                    self.toks.get(self.pos + 1),
                    Some((Tok::Word(n), _)) if keyword(n) == Some(Keyword::Of)
                );
                if next_is_of && w.bytes().all(|b| b.is_ascii_digit()) {
                    self.pos += 2;
                    return self.threshold(w, offset);
                }
                if keyword(w).is_some() {
                    return Err(PolicyError::ReservedWord { word: w.to_string(), offset });
                }
                self.pos += 1;
                Ok(PolicyAst::Leaf(w.to_string()))
            }
            Some(_) => self.syntax("expected an attribute, '(' or threshold"),
            None => self.syntax("unexpected end of policy"),
        }
    }

    fn threshold(&mut self, k_text: &str, offset: usize) -> Result<PolicyAst, PolicyError> {
        self.expect(Tok::LParen, "'(' after 'of'")?;
        let mut children = vec![self.expr()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            children.push(self.expr()?);
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        let n = children.len();
        let k = k_text.parse::<u64>().map_err(|_| PolicyError::ThresholdRange {
            k: u64::MAX,
            n,
            offset,
        })?;
        if k < 1 || k > n as u64 {
            return Err(PolicyError::ThresholdRange { k, n, offset });
        }
        Ok(PolicyAst::Threshold(k as usize, children))
    }
}

/// Parses a policy formula into its tree form.
pub fn parse_policy(text: &str) -> Result<PolicyAst, PolicyError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(PolicyError::Empty);
    }
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let ast = p.expr()?;
    if p.pos != p.toks.len() {
        return p.syntax("trailing input");
    }
    Ok(ast)
}
