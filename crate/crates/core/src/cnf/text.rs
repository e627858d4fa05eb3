//! Text format for monotone CNF.
//!
//! Grammar: `formula := clause ("&" clause)*` and
//! `clause := "(" sym ("|" sym)* ")"`, with ASCII whitespace allowed
//! between tokens. Output always uses the ASCII operators `&` and `|`;
//! the Unicode glyphs `∧`, `∨` and `¬` are accepted on input only.
//! `~` / `¬` are reserved for negated literals, which the monotone data
//! model rejects with an explicit error.

use thiserror::Error;

use super::{Clause, Formula, Symbol};

/// A parse failure, locating the offending byte and clause.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {offset} (clause {clause}): {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    /// 1-based index of the clause being parsed.
    pub clause: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, clause: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            clause,
            message: message.into(),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Sym(String),
}

struct Lexer<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer { input, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let rest = &self.input[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
    }

    /// Next token plus its starting byte offset; `None` at end of input.
    fn next(&mut self, clause: usize) -> Result<Option<(usize, Token)>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.input[start..];
        let mut chars = rest.chars();
        let c = match chars.next() {
            Some(c) => c,
            None => return Ok(None),
        };
        let tok = match c {
            '(' => Token::LParen,
            ')' => Token::RParen,
            '&' | '∧' => Token::And,
            '|' | '∨' => Token::Or,
            '~' | '¬' => Token::Not,
            c if c.is_ascii_alphabetic() => {
                let digits: usize = chars
                    .take_while(|d| d.is_ascii_digit())
                    .map(|d| d.len_utf8())
                    .sum();
                let name = &rest[..c.len_utf8() + digits];
                self.pos = start + name.len();
                return Ok(Some((start, Token::Sym(name.to_owned()))));
            }
            other => {
                return Err(ParseError::new(
                    start,
                    clause,
                    format!("unexpected character {other:?}"),
                ))
            }
        };
        self.pos = start + c.len_utf8();
        Ok(Some((start, tok)))
    }
}

/// Parses the CNF text grammar into a [`Formula`].
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut clauses = Vec::new();
    let mut clause_idx = 1usize;

    loop {
        match lexer.next(clause_idx)? {
            Some((_, Token::LParen)) => {}
            Some((off, tok)) => {
                return Err(ParseError::new(
                    off,
                    clause_idx,
                    format!("expected '(', found {}", describe(&tok)),
                ))
            }
            None if clauses.is_empty() => {
                return Err(ParseError::new(0, clause_idx, "empty input: expected '('"))
            }
            None => {
                return Err(ParseError::new(
                    lexer.pos,
                    clause_idx,
                    "expected '(' to start a clause",
                ))
            }
        }

        let clause = parse_clause_body(&mut lexer, clause_idx)?;
        clauses.push(clause);

        match lexer.next(clause_idx)? {
            None => break,
            Some((_, Token::And)) => clause_idx += 1,
            Some((off, tok)) => {
                return Err(ParseError::new(
                    off,
                    clause_idx,
                    format!("expected '&' or end of input, found {}", describe(&tok)),
                ))
            }
        }
    }

    // clauses is non-empty here: the first iteration either pushed or errored
    Formula::new(clauses)
        .map_err(|e| ParseError::new(lexer.pos, clause_idx, e.to_string()))
}

fn parse_clause_body(lexer: &mut Lexer<'_>, clause_idx: usize) -> Result<Clause, ParseError> {
    let mut literals: Vec<Symbol> = Vec::new();
    loop {
        let (off, tok) = match lexer.next(clause_idx)? {
            Some(t) => t,
            None => {
                return Err(ParseError::new(
                    lexer.pos,
                    clause_idx,
                    "unbalanced parentheses: clause not closed",
                ))
            }
        };
        match tok {
            Token::Not => {
                return Err(ParseError::new(
                    off,
                    clause_idx,
                    "negated literals are not supported (monotone CNF only)",
                ))
            }
            Token::Sym(name) => {
                let sym = Symbol::new(name)
                    .map_err(|e| ParseError::new(off, clause_idx, e.to_string()))?;
                if literals.contains(&sym) {
                    return Err(ParseError::new(
                        off,
                        clause_idx,
                        format!("duplicate symbol {:?} in clause", sym.as_str()),
                    ));
                }
                literals.push(sym);
            }
            other => {
                return Err(ParseError::new(
                    off,
                    clause_idx,
                    format!("expected a symbol, found {}", describe(&other)),
                ))
            }
        }

        let (off, tok) = match lexer.next(clause_idx)? {
            Some(t) => t,
            None => {
                return Err(ParseError::new(
                    lexer.pos,
                    clause_idx,
                    "unbalanced parentheses: clause not closed",
                ))
            }
        };
        match tok {
            Token::RParen => {
                return Clause::new(literals)
                    .map_err(|e| ParseError::new(off, clause_idx, e.to_string()))
            }
            Token::Or => {}
            other => {
                return Err(ParseError::new(
                    off,
                    clause_idx,
                    format!("expected '|' or ')', found {}", describe(&other)),
                ))
            }
        }
    }
}

fn describe(tok: &Token) -> String {
    match tok {
        Token::LParen => "'('".to_owned(),
        Token::RParen => "')'".to_owned(),
        Token::And => "'&'".to_owned(),
        Token::Or => "'|'".to_owned(),
        Token::Not => "'~'".to_owned(),
        Token::Sym(s) => format!("symbol {s:?}"),
    }
}

/// Renders a formula in the ASCII grammar, clauses and literals in stored
/// order, no whitespace.
pub fn render_formula(formula: &Formula) -> String {
    let mut out = String::new();
    for (i, clause) in formula.clauses().iter().enumerate() {
        if i > 0 {
            out.push('&');
        }
        out.push('(');
        for (j, lit) in clause.literals().iter().enumerate() {
            if j > 0 {
                out.push('|');
            }
            out.push_str(lit.as_str());
        }
        out.push(')');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_clause_formula() {
        let f = parse_formula("(a|b)&(a|c)").unwrap();
        assert_eq!(f.clause_count(), 2);
        assert_eq!(f.clauses()[0].literals().len(), 2);
        assert_eq!(f.render(), "(a|b)&(a|c)");
    }

    #[test]
    fn parses_three_clause_monotone_shape() {
        let f = parse_formula("(a|b)&(a|c|b)&(c)").unwrap();
        assert_eq!(f.clause_count(), 3);
        assert_eq!(
            f.clauses().iter().map(Clause::cardinality).collect::<Vec<_>>(),
            vec![2, 3, 1]
        );
    }

    #[test]
    fn rejects_empty_literal_slot() {
        let err = parse_formula("(a|)&(b)").unwrap_err();
        assert_eq!(err.clause, 1);
        assert!(err.message.contains("expected a symbol"));
    }

    #[test]
    fn rejects_unbalanced_parens() {
        let err = parse_formula("(a|b").unwrap_err();
        assert!(err.message.contains("not closed"));
    }

    #[test]
    fn rejects_duplicate_symbol_with_position() {
        let err = parse_formula("(a|b|a)").unwrap_err();
        assert_eq!(err.clause, 1);
        assert_eq!(err.offset, 5);
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn rejects_negation_explicitly() {
        let err = parse_formula("(a|~b)").unwrap_err();
        assert!(err.message.contains("monotone"));
        let err = parse_formula("(¬a)").unwrap_err();
        assert!(err.message.contains("monotone"));
    }

    #[test]
    fn accepts_unicode_operators_on_input() {
        let f = parse_formula("(a∨c)∧(c∨b)").unwrap();
        assert_eq!(f.render(), "(a|c)&(c|b)");
    }

    #[test]
    fn tolerates_whitespace() {
        let f = parse_formula("  ( a | b ) & ( c )  ").unwrap();
        assert_eq!(f.render(), "(a|b)&(c)");
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_formula("(a)(b)").is_err());
        assert!(parse_formula("(a)&").is_err());
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn renders_minimal_formula() {
        let f = parse_formula("(x1)").unwrap();
        assert_eq!(f.render(), "(x1)");
    }
}
