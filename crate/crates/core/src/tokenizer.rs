//! Symbol-level tokenization of formulas and formula pairs.
//!
//! A formula encodes to `<s>` followed by its literals and operators in
//! stored order (no parentheses: `&` alone separates clauses) and `</s>`.
//! A pair encodes to `<s> alpha </s> </s> beta </s>`, right-padded with
//! `<pad>`. With single-name symbols and a frequency floor of one, byte
//! pair merges degenerate to exactly these whole-symbol tokens, so the
//! vocabulary is built directly at symbol level.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::cnf::{Formula, ParseError};
use crate::dataset::DatasetRecord;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const PAD_ID: u32 = 2;
/// Reserved for robustness experiments; datasets never produce it.
pub const UNK_ID: u32 = 3;

const AND: &str = "&";
const OR: &str = "|";

/// Hard cap on vocabulary size.
pub const MAX_VOCAB: usize = 100;

/// Default maximum encoded pair length.
pub const MAX_PAIR_LEN: usize = 512;

#[derive(Debug, Error)]
pub enum TokenizeError {
    #[error("symbol {0:?} is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u32),
    #[error("vocabulary would hold {0} tokens, exceeding the cap of {MAX_VOCAB}")]
    VocabularyOverflow(usize),
    #[error("encoded pair length {len} exceeds the maximum of {max}")]
    PairTooLong { len: usize, max: usize },
    #[error("malformed token stream: {0}")]
    Malformed(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocabulary file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("vocabulary file is inconsistent: {0}")]
    Inconsistent(String),
}

/// Immutable token table: ids are dense from 0, specials first, then the
/// two operators, then symbols in first-occurrence order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_tokens(id_to_token: Vec<String>) -> Result<Self, TokenizeError> {
        if id_to_token.len() > MAX_VOCAB {
            return Err(TokenizeError::VocabularyOverflow(id_to_token.len()));
        }
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (id, token) in id_to_token.iter().enumerate() {
            if token_to_id.insert(token.clone(), id as u32).is_some() {
                return Err(TokenizeError::Inconsistent(format!(
                    "duplicate token {token:?}"
                )));
            }
        }
        Ok(Vocabulary {
            id_to_token,
            token_to_id,
        })
    }

    /// Builds the vocabulary for a formula corpus: specials, operators,
    /// then every symbol at first occurrence.
    pub fn build<'a, I: IntoIterator<Item = &'a Formula>>(
        corpus: I,
    ) -> Result<Self, TokenizeError> {
        let mut tokens: Vec<String> = [BOS, EOS, PAD, UNK, AND, OR]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut seen: HashMap<String, ()> = tokens.iter().cloned().map(|t| (t, ())).collect();
        for formula in corpus {
            for clause in formula.clauses() {
                for lit in clause.literals() {
                    if seen.insert(lit.as_str().to_owned(), ()).is_none() {
                        tokens.push(lit.as_str().to_owned());
                    }
                }
            }
        }
        Self::from_tokens(tokens)
    }

    /// Builds from dataset records, scanning `alpha` then `beta` per record
    /// in file order.
    pub fn build_from_records(records: &[DatasetRecord]) -> Result<Self, TokenizeError> {
        let mut formulas = Vec::with_capacity(records.len() * 2);
        for r in records {
            formulas.push(Formula::parse(&r.alpha)?);
            formulas.push(Formula::parse(&r.beta)?);
        }
        Self::build(formulas.iter())
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    /// Serializes as a JSON token-to-id map.
    pub fn save(&self, path: &Path) -> Result<(), TokenizeError> {
        let map: BTreeMap<&str, u32> = self
            .id_to_token
            .iter()
            .enumerate()
            .map(|(id, t)| (t.as_str(), id as u32))
            .collect();
        let json = serde_json::to_string_pretty(&map)?;
        std::fs::write(path, json).map_err(|source| TokenizeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TokenizeError> {
        let text = std::fs::read_to_string(path).map_err(|source| TokenizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let map: BTreeMap<String, u32> = serde_json::from_str(&text)?;
        let mut id_to_token = vec![String::new(); map.len()];
        for (token, id) in map {
            let slot = id_to_token.get_mut(id as usize).ok_or_else(|| {
                TokenizeError::Inconsistent(format!("id {id} out of range"))
            })?;
            if !slot.is_empty() {
                return Err(TokenizeError::Inconsistent(format!(
                    "id {id} assigned twice"
                )));
            }
            *slot = token;
        }
        for (required, id) in [(BOS, BOS_ID), (EOS, EOS_ID), (PAD, PAD_ID), (UNK, UNK_ID)] {
            if id_to_token.get(id as usize).map(String::as_str) != Some(required) {
                return Err(TokenizeError::Inconsistent(format!(
                    "special token {required} must have id {id}"
                )));
            }
        }
        Self::from_tokens(id_to_token)
    }

    fn symbol_id(&self, name: &str) -> Result<u32, TokenizeError> {
        self.id_of(name)
            .ok_or_else(|| TokenizeError::UnknownSymbol(name.to_owned()))
    }

    /// Formula body tokens: literals and operators in stored order, `|`
    /// inside clauses, `&` between clauses, no parentheses.
    fn body_ids(&self, formula: &Formula) -> Result<Vec<u32>, TokenizeError> {
        let and_id = self.id_of(AND).expect("operators are always present");
        let or_id = self.id_of(OR).expect("operators are always present");
        let mut ids = Vec::new();
        for (ci, clause) in formula.clauses().iter().enumerate() {
            if ci > 0 {
                ids.push(and_id);
            }
            for (li, lit) in clause.literals().iter().enumerate() {
                if li > 0 {
                    ids.push(or_id);
                }
                ids.push(self.symbol_id(lit.as_str())?);
            }
        }
        Ok(ids)
    }
}

/// Encodes one formula as `<s> body </s>`. Unknown symbols are an error:
/// `<unk>` never appears in datasets.
pub fn encode_formula(formula: &Formula, vocab: &Vocabulary) -> Result<Vec<u32>, TokenizeError> {
    let body = vocab.body_ids(formula)?;
    let mut ids = Vec::with_capacity(body.len() + 2);
    ids.push(BOS_ID);
    ids.extend(body);
    ids.push(EOS_ID);
    Ok(ids)
}

/// Encodes a pair as `<s> alpha </s> </s> beta </s>` without padding.
pub fn encode_pair_unpadded(
    alpha: &Formula,
    beta: &Formula,
    vocab: &Vocabulary,
) -> Result<Vec<u32>, TokenizeError> {
    let a = vocab.body_ids(alpha)?;
    let b = vocab.body_ids(beta)?;
    let mut ids = Vec::with_capacity(a.len() + b.len() + 4);
    ids.push(BOS_ID);
    ids.extend(a);
    ids.push(EOS_ID);
    ids.push(EOS_ID);
    ids.extend(b);
    ids.push(EOS_ID);
    Ok(ids)
}

/// Encodes a pair right-padded to `max_len`; overflowing `max_len` is an
/// error, never a silent truncation.
pub fn encode_pair(
    alpha: &Formula,
    beta: &Formula,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<u32>, TokenizeError> {
    let mut ids = encode_pair_unpadded(alpha, beta, vocab)?;
    if ids.len() > max_len {
        return Err(TokenizeError::PairTooLong {
            len: ids.len(),
            max: max_len,
        });
    }
    ids.resize(max_len, PAD_ID);
    Ok(ids)
}

/// Both concatenation orders of a pair, unpadded: (alpha-beta, beta-alpha).
pub fn encode_pair_dual(
    alpha: &Formula,
    beta: &Formula,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<(Vec<u32>, Vec<u32>), TokenizeError> {
    let ab = encode_pair_unpadded(alpha, beta, vocab)?;
    if ab.len() > max_len {
        return Err(TokenizeError::PairTooLong {
            len: ab.len(),
            max: max_len,
        });
    }
    let ba = encode_pair_unpadded(beta, alpha, vocab)?;
    Ok((ab, ba))
}

/// Inverse of [`encode_formula`] on its image: re-synthesizes parentheses
/// from `&` boundaries. Trailing `<pad>` is tolerated.
pub fn decode(ids: &[u32], vocab: &Vocabulary) -> Result<String, TokenizeError> {
    #[derive(PartialEq)]
    enum State {
        ExpectSymbol,
        ExpectOperator,
    }

    let mut tokens = ids.iter().map(|&id| {
        vocab
            .token_of(id)
            .ok_or(TokenizeError::UnknownTokenId(id))
    });

    match tokens.next().transpose()? {
        Some(BOS) => {}
        Some(other) => {
            return Err(TokenizeError::Malformed(format!(
                "expected {BOS}, found {other:?}"
            )))
        }
        None => return Err(TokenizeError::Malformed("empty token stream".into())),
    }

    let mut out = String::from("(");
    let mut state = State::ExpectSymbol;
    let mut closed = false;
    for token in &mut tokens {
        let token = token?;
        if closed {
            if token != PAD {
                return Err(TokenizeError::Malformed(format!(
                    "unexpected token {token:?} after {EOS}"
                )));
            }
            continue;
        }
        match (token, &state) {
            (EOS, State::ExpectOperator) => {
                out.push(')');
                closed = true;
            }
            (AND, State::ExpectOperator) => {
                out.push_str(")&(");
                state = State::ExpectSymbol;
            }
            (OR, State::ExpectOperator) => {
                out.push('|');
                state = State::ExpectSymbol;
            }
            (sym, State::ExpectSymbol)
                if sym != EOS && sym != AND && sym != OR && sym != BOS && sym != PAD
                    && sym != UNK =>
            {
                out.push_str(sym);
                state = State::ExpectOperator;
            }
            (other, _) => {
                return Err(TokenizeError::Malformed(format!(
                    "unexpected token {other:?}"
                )))
            }
        }
    }
    if !closed {
        return Err(TokenizeError::Malformed(format!("missing {EOS}")));
    }
    Ok(out)
}
