//! Readers for the two public NRP dataset layouts.
//!
//! Classic (`nrp1`..`nrp5`): number of levels; for each level the number of
//! requirements on the next line and their costs on the one after; the
//! number of dependencies and one `i j` pair per line (`i` is a prerequisite
//! of `j`); the number of customers and one line per customer holding its
//! profit, the number of requested requirements and their ids.
//!
//! Realistic (`nrp-e*`, `nrp-g*`, `nrp-m*`): the requirement count, a line of
//! costs, the customer count and the customer lines. There is no level or
//! dependency section.

use thiserror::Error;

use crate::model::{ModelError, NrpInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Format { line: usize, col: usize, msg: String },
    #[error("unexpected end of input: expected {0}")]
    Eof(String),
    #[error("{0} trailing token(s) after the last customer, first at line {1}")]
    Trailing(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

struct Tokens<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut offset = 0;
            for piece in line.split_whitespace() {
                let at = line[offset..].find(piece).unwrap() + offset;
                toks.push(Token { text: piece, line: i + 1, col: at + 1 });
                offset = at + piece.len();
            }
        }
        Tokens { toks, pos: 0 }
    }

    fn int(&mut self, what: &str) -> Result<(i64, usize, usize), ParseError> {
        let t = self.toks.get(self.pos).ok_or_else(|| ParseError::Eof(what.to_string()))?;
        self.pos += 1;
        let v = t.text.parse::<i64>().map_err(|_| ParseError::Format {
            line: t.line,
            col: t.col,
            msg: format!("expected {what}, found `{}`", t.text),
        })?;
        Ok((v, t.line, t.col))
    }

    fn count(&mut self, what: &str) -> Result<usize, ParseError> {
        let (v, line, col) = self.int(what)?;
        usize::try_from(v).map_err(|_| ParseError::Format { line, col, msg: format!("{what} must be non-negative") })
    }

    fn id(&mut self, what: &str, n: usize) -> Result<usize, ParseError> {
        let (v, line, col) = self.int(what)?;
        if v < 1 || v as usize > n {
            return Err(ParseError::Format { line, col, msg: format!("{what} {v} outside 1..={n}") });
        }
        Ok(v as usize)
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(ParseError::Trailing(self.toks.len() - self.pos, t.line)),
        }
    }
}

fn costs(tok: &mut Tokens, k: usize, out: &mut Vec<i64>) -> Result<(), ParseError> {
    for _ in 0..k {
        let (c, line, col) = tok.int("a requirement cost")?;
        if c < 0 {
            return Err(ParseError::Format { line, col, msg: "negative cost".into() });
        }
        out.push(c);
    }
    Ok(())
}

fn customers(tok: &mut Tokens, n: usize) -> Result<(Vec<i64>, Vec<Vec<usize>>), ParseError> {
    let m = tok.count("the customer count")?;
    let mut weights = Vec::with_capacity(m);
    let mut requests = Vec::with_capacity(m);
    for _ in 0..m {
        let (w, line, col) = tok.int("a customer profit")?;
        if w < 1 {
            return Err(ParseError::Format { line, col, msg: format!("customer profit {w} is not positive") });
        }
        let k = tok.count("the request count")?;
        let ids = (0..k).map(|_| tok.id("requirement id", n)).collect::<Result<Vec<_>, _>>()?;
        weights.push(w);
        requests.push(ids);
    }
    Ok((weights, requests))
}

pub fn parse_classic(name: &str, text: &str) -> Result<NrpInstance, ParseError> {
    let mut tok = Tokens::new(text);
    let levels = tok.count("the level count")?;
    let mut c = Vec::new();
    for _ in 0..levels {
        let k = tok.count("a level size")?;
        costs(&mut tok, k, &mut c)?;
    }
    let n = c.len();
    let deps = tok.count("the dependency count")?;
    let mut precedence = Vec::with_capacity(deps);
    for _ in 0..deps {
        let i = tok.id("requirement id", n)?;
        let j = tok.id("requirement id", n)?;
        precedence.push((i, j));
    }
    let (weights, requests) = customers(&mut tok, n)?;
    tok.finish()?;
    Ok(NrpInstance::new(name, c, weights, precedence, requests)?)
}

pub fn parse_realistic(name: &str, text: &str) -> Result<NrpInstance, ParseError> {
    let mut tok = Tokens::new(text);
    let n = tok.count("the requirement count")?;
    let mut c = Vec::with_capacity(n);
    costs(&mut tok, n, &mut c)?;
    let (weights, requests) = customers(&mut tok, n)?;
    tok.finish()?;
    Ok(NrpInstance::new(name, c, weights, vec![], requests)?)
}
