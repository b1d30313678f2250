use super::{Formula, LtlError};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    Globally,
    Finally,
    Until,
    LParen,
    RParen,
    Ident(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Next => "`X`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Finally => "`F`".into(),
            Tok::Until => "`U`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
        }
    }
}

fn syntax(position: usize, message: impl Into<String>) -> LtlError {
    LtlError::Syntax {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 1;
                    Tok::Implies
                } else {
                    return Err(syntax(start, "expected `->`"));
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &text[i..j];
                i = j - 1;
                match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "G" => Tok::Globally,
                    "F" => Tok::Finally,
                    "U" => Tok::Until,
                    w => Tok::Ident(w.to_string()),
                }
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unknown token `{ch}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Infix {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Infix {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn implication(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut acc = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut acc = self.until()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            acc = Formula::and(acc, self.until()?);
        }
        Ok(acc)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.bump();
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Not) => Ok(Formula::not(self.unary()?)),
            Some(Tok::Next) => Ok(Formula::next(self.unary()?)),
            Some(Tok::Globally) => Ok(Formula::globally(self.unary()?)),
            Some(Tok::Finally) => Ok(Formula::finally(self.unary()?)),
            Some(Tok::True) => Ok(Formula::True),
            Some(Tok::False) => Ok(Formula::False),
            Some(Tok::Ident(name)) => Ok(Formula::Atom(name)),
            Some(Tok::LParen) => {
                let inner = self.implication()?;
                let close = self.offset();
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    Some(t) => Err(syntax(
                        close,
                        format!("expected `)`, found {}", t.describe()),
                    )),
                    None => Err(syntax(close, "unbalanced `(`: missing `)`")),
                }
            }
            Some(t) => Err(syntax(
                at,
                format!("expected an operand, found {}", t.describe()),
            )),
            None => Err(syntax(at, "dangling operator: expected an operand")),
        }
    }
}

/// Parses the infix grammar.
///
/// Precedence, tightest first: unary `! X G F`, then `U` (right
/// associative), `&` (left), `|` (left), `->` (right).
pub fn parse_infix(text: &str) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty formula"));
    }
    let mut p = Infix {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.implication()?;
    if let Some(t) = p.peek() {
        let msg = if *t == Tok::RParen {
            "unbalanced `)`".to_string()
        } else {
            format!("unexpected {}", t.describe())
        };
        return Err(syntax(p.offset(), msg));
    }
    Ok(f)
}

/// Parses whitespace-separated prefix (Polish) notation, e.g. `F & A F B`.
pub fn parse_prefix(text: &str) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty formula"));
    }
    let mut pos = 0;
    let f = prefix_node(&toks, &mut pos, text.len())?;
    if pos < toks.len() {
        return Err(syntax(
            toks[pos].0,
            "extra operands after a complete formula",
        ));
    }
    Ok(f)
}

fn prefix_node(toks: &[(usize, Tok)], pos: &mut usize, end: usize) -> Result<Formula, LtlError> {
    let Some((at, tok)) = toks.get(*pos) else {
        return Err(syntax(end, "too few operands"));
    };
    *pos += 1;
    let operand = |pos: &mut usize| prefix_node(toks, pos, end);
    Ok(match tok {
        Tok::True => Formula::True,
        Tok::False => Formula::False,
        Tok::Ident(name) => Formula::Atom(name.clone()),
        Tok::Not => Formula::not(operand(pos)?),
        Tok::Next => Formula::next(operand(pos)?),
        Tok::Globally => Formula::globally(operand(pos)?),
        Tok::Finally => Formula::finally(operand(pos)?),
        Tok::And => {
            let l = operand(pos)?;
            Formula::and(l, operand(pos)?)
        }
        Tok::Or => {
            let l = operand(pos)?;
            Formula::or(l, operand(pos)?)
        }
        Tok::Implies => {
            let l = operand(pos)?;
            Formula::implies(l, operand(pos)?)
        }
        Tok::Until => {
            let l = operand(pos)?;
            Formula::until(l, operand(pos)?)
        }
        Tok::LParen | Tok::RParen => {
            return Err(syntax(
                *at,
                "parentheses are not allowed in prefix notation",
            ))
        }
    })
}

/// Accepts either syntax: infix is tried first, then prefix.
///
/// A text valid under both grammars denotes the same formula, since only
/// chains of unary operators over a single operand are valid in both.
pub fn parse_any(text: &str) -> Result<Formula, LtlError> {
    match parse_infix(text) {
        Ok(f) => Ok(f),
        Err(infix_err) => parse_prefix(text).map_err(|_| infix_err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    #[test]
    fn infix_examples() {
        assert_eq!(
            parse_infix("F(A & F(B))").unwrap(),
            Formula::finally(Formula::and(a("A"), Formula::finally(a("B"))))
        );
        assert_eq!(parse_infix("A").unwrap(), a("A"));
        assert_eq!(
            parse_infix("G(A -> X(B))").unwrap(),
            Formula::globally(Formula::implies(a("A"), Formula::next(a("B"))))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // & binds tighter than |, U tighter than &
        assert_eq!(
            parse_infix("A | B & C U D").unwrap(),
            Formula::or(a("A"), Formula::and(a("B"), Formula::until(a("C"), a("D"))))
        );
        assert_eq!(
            parse_infix("A U B U C").unwrap(),
            Formula::until(a("A"), Formula::until(a("B"), a("C")))
        );
        assert_eq!(
            parse_infix("A -> B -> C").unwrap(),
            Formula::implies(a("A"), Formula::implies(a("B"), a("C")))
        );
        assert_eq!(
            parse_infix("A & B & C").unwrap(),
            Formula::and(Formula::and(a("A"), a("B")), a("C"))
        );
        assert_eq!(
            parse_infix("F A U B").unwrap(),
            Formula::until(Formula::finally(a("A")), a("B"))
        );
        assert_eq!(parse_infix("!A").unwrap(), Formula::not(a("A")));
        assert_eq!(
            parse_infix("true | false").unwrap(),
            Formula::or(Formula::True, Formula::False)
        );
    }

    #[test]
    fn infix_errors_carry_position() {
        let err = |t: &str| match parse_infix(t) {
            Err(LtlError::Syntax { position, .. }) => position,
            other => panic!("{t}: expected syntax error, got {other:?}"),
        };
        assert_eq!(err("(A & B"), 6);
        assert_eq!(err("A & B)"), 5);
        assert_eq!(err("A & $"), 4);
        assert_eq!(err("A &"), 3);
        assert_eq!(err("A - B"), 2);
        assert_eq!(err(""), 0);
        assert_eq!(err("A B"), 2);
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(
            parse_prefix("F & A F B").unwrap(),
            parse_infix("F(A & F(B))").unwrap()
        );
        assert_eq!(parse_prefix("A").unwrap(), a("A"));
        assert_eq!(
            parse_prefix("U ! C B").unwrap(),
            Formula::until(Formula::not(a("C")), a("B"))
        );
        assert_eq!(
            parse_prefix("-> A | B true").unwrap(),
            Formula::implies(a("A"), Formula::or(a("B"), Formula::True))
        );
    }

    #[test]
    fn prefix_errors() {
        assert!(matches!(parse_prefix("& A"), Err(LtlError::Syntax { .. })));
        assert!(matches!(parse_prefix("A B"), Err(LtlError::Syntax { .. })));
        assert!(matches!(
            parse_prefix("F ( A )"),
            Err(LtlError::Syntax { .. })
        ));
        assert!(matches!(
            parse_prefix("F # A"),
            Err(LtlError::Syntax { .. })
        ));
    }

    #[test]
    fn parse_any_accepts_both() {
        assert_eq!(
            parse_any("F & A F B").unwrap(),
            parse_any("F(A & F B)").unwrap()
        );
        assert!(parse_any("& A").is_err());
    }
}
