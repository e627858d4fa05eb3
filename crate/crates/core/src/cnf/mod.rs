//! Monotone CNF data model.
//!
//! A [`Formula`] is an ordered sequence of [`Clause`]s; a clause is a
//! duplicate-free, ordered list of positive [`Symbol`]s. Clause order and
//! literal order are preserved for rendering, but isomorphism and multiset
//! equality treat clauses as sets and formulas as multisets of clauses.

mod text;

pub use text::{parse_formula, render_formula, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from constructing or transforming CNF values.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("invalid symbol name {0:?}: expected one letter followed by optional digits")]
    InvalidSymbol(String),
    #[error("duplicate symbol {0:?} in clause")]
    DuplicateSymbol(String),
    #[error("clause must contain at least one literal")]
    EmptyClause,
    #[error("formula must contain at least one clause")]
    EmptyFormula,
    #[error("renaming is not injective: {0:?} and {1:?} both map to {2:?}")]
    NotInjective(String, String, String),
    #[error("symbol {0:?} is missing from the renaming's domain")]
    MissingFromDomain(String),
}

/// A propositional symbol: one ASCII letter followed by optional digits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Result<Self, CnfError> {
        let name = name.into();
        if Self::is_valid(&name) {
            Ok(Symbol(name))
        } else {
            Err(CnfError::InvalidSymbol(name))
        }
    }

    pub fn is_valid(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_digit()),
            _ => false,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.0)
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Symbol::new(s).map_err(serde::de::Error::custom)
    }
}

/// A disjunction of positive literals. Literal order is preserved;
/// duplicates are rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    literals: Vec<Symbol>,
}

impl Clause {
    pub fn new(literals: Vec<Symbol>) -> Result<Self, CnfError> {
        if literals.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        let mut seen = BTreeSet::new();
        for lit in &literals {
            if !seen.insert(lit) {
                return Err(CnfError::DuplicateSymbol(lit.as_str().to_owned()));
            }
        }
        Ok(Clause { literals })
    }

    pub fn literals(&self) -> &[Symbol] {
        &self.literals
    }

    pub fn cardinality(&self) -> usize {
        self.literals.len()
    }

    pub fn contains(&self, sym: &Symbol) -> bool {
        self.literals.iter().any(|l| l == sym)
    }

    /// Literals in sorted order: the clause viewed as a set.
    pub fn sorted_literals(&self) -> Vec<Symbol> {
        let mut lits = self.literals.clone();
        lits.sort();
        lits
    }

    /// Set equality, ignoring literal order.
    pub fn same_literals(&self, other: &Clause) -> bool {
        self.cardinality() == other.cardinality()
            && self.sorted_literals() == other.sorted_literals()
    }
}

/// The renaming-invariant aggregate used to detect trivial non-isomorphism.
///
/// Two isomorphic formulas always have equal signatures; the converse does
/// not hold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialSignature {
    pub clause_count: usize,
    /// Sorted clause cardinalities, one entry per clause.
    pub cardinality_multiset: Vec<usize>,
    pub symbol_count: usize,
    /// Sorted per-symbol occurrence counts, one entry per distinct symbol.
    pub occurrence_multiset: Vec<usize>,
}

/// An ordered conjunction of clauses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if clauses.is_empty() {
            return Err(CnfError::EmptyFormula);
        }
        Ok(Formula { clauses })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    /// Distinct symbols, in sorted order.
    pub fn symbols(&self) -> BTreeSet<&Symbol> {
        self.clauses
            .iter()
            .flat_map(|c| c.literals().iter())
            .collect()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols().len()
    }

    /// Occurrence count per distinct symbol.
    pub fn occurrences(&self) -> BTreeMap<&Symbol, usize> {
        let mut counts = BTreeMap::new();
        for clause in &self.clauses {
            for lit in clause.literals() {
                *counts.entry(lit).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn trivial_signature(&self) -> TrivialSignature {
        let mut cardinality_multiset: Vec<usize> =
            self.clauses.iter().map(Clause::cardinality).collect();
        cardinality_multiset.sort_unstable();
        let occurrences = self.occurrences();
        let mut occurrence_multiset: Vec<usize> = occurrences.values().copied().collect();
        occurrence_multiset.sort_unstable();
        TrivialSignature {
            clause_count: self.clauses.len(),
            cardinality_multiset,
            symbol_count: occurrences.len(),
            occurrence_multiset,
        }
    }

    /// Rename every literal through `renaming`, preserving clause and
    /// literal order. Fails if some symbol has no image.
    pub fn apply_renaming(&self, renaming: &Renaming) -> Result<Formula, CnfError> {
        let clauses = self
            .clauses
            .iter()
            .map(|clause| {
                let literals = clause
                    .literals()
                    .iter()
                    .map(|lit| {
                        renaming
                            .image(lit)
                            .cloned()
                            .ok_or_else(|| CnfError::MissingFromDomain(lit.as_str().to_owned()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                // injectivity of the renaming keeps literals distinct
                Clause::new(literals)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Formula::new(clauses)
    }

    /// Clauses as sorted literal lists, themselves sorted: the canonical
    /// form under clause/literal reordering (renaming still matters).
    pub fn canonical_clauses(&self) -> Vec<Vec<Symbol>> {
        let mut canon: Vec<Vec<Symbol>> =
            self.clauses.iter().map(Clause::sorted_literals).collect();
        canon.sort();
        canon
    }

    /// True iff the two formulas have the same multiset of clauses, each
    /// clause compared as a set.
    pub fn equal_as_multiset(&self, other: &Formula) -> bool {
        self.clause_count() == other.clause_count()
            && self.canonical_clauses() == other.canonical_clauses()
    }

    pub fn render(&self) -> String {
        render_formula(self)
    }

    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        parse_formula(text)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

/// An injective mapping between symbols, witnessing a syntactic isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Renaming {
    map: BTreeMap<Symbol, Symbol>,
}

impl Renaming {
    /// Builds a renaming, rejecting non-injective mappings.
    pub fn new(map: BTreeMap<Symbol, Symbol>) -> Result<Self, CnfError> {
        let mut images: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
        for (from, to) in &map {
            if let Some(prev) = images.insert(to, from) {
                return Err(CnfError::NotInjective(
                    prev.as_str().to_owned(),
                    from.as_str().to_owned(),
                    to.as_str().to_owned(),
                ));
            }
        }
        Ok(Renaming { map })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, CnfError>
    where
        I: IntoIterator<Item = (Symbol, Symbol)>,
    {
        Self::new(pairs.into_iter().collect())
    }

    pub fn identity<'a, I: IntoIterator<Item = &'a Symbol>>(symbols: I) -> Self {
        Renaming {
            map: symbols.into_iter().map(|s| (s.clone(), s.clone())).collect(),
        }
    }

    pub fn image(&self, sym: &Symbol) -> Option<&Symbol> {
        self.map.get(sym)
    }

    pub fn mapping(&self) -> &BTreeMap<Symbol, Symbol> {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The inverse mapping; total on this renaming's image.
    pub fn inverse(&self) -> Renaming {
        Renaming {
            map: self.map.iter().map(|(k, v)| (v.clone(), k.clone())).collect(),
        }
    }
}

/// The three generation categories of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "iso")]
    Iso,
    #[serde(rename = "trivial")]
    TrivialNonIso,
    #[serde(rename = "nontrivial")]
    NontrivialNonIso,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Iso,
        Category::TrivialNonIso,
        Category::NontrivialNonIso,
    ];

    /// Ground-truth isomorphism label: 1 for isomorphic, 0 otherwise.
    pub fn label(self) -> u8 {
        match self {
            Category::Iso => 1,
            Category::TrivialNonIso | Category::NontrivialNonIso => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Iso => "iso",
            Category::TrivialNonIso => "trivial",
            Category::NontrivialNonIso => "nontrivial",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled formula pair: the unit of every dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSample {
    pub id: u64,
    pub alpha: Formula,
    pub beta: Formula,
    pub category: Category,
    /// 1 = isomorphic, 0 = non-isomorphic.
    pub label: u8,
    /// Seed of the random stream that generated this sample.
    pub seed: u64,
}

impl PairSample {
    pub fn new(id: u64, alpha: Formula, beta: Formula, category: Category, seed: u64) -> Self {
        PairSample {
            id,
            alpha,
            beta,
            category,
            label: category.label(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        Symbol::new(s).unwrap()
    }

    fn f(text: &str) -> Formula {
        Formula::parse(text).unwrap()
    }

    #[test]
    fn symbol_validation() {
        assert!(Symbol::new("a").is_ok());
        assert!(Symbol::new("x7").is_ok());
        assert!(Symbol::new("x24").is_ok());
        assert!(Symbol::new("").is_err());
        assert!(Symbol::new("7x").is_err());
        assert!(Symbol::new("ab").is_err());
        assert!(Symbol::new("x7y").is_err());
    }

    #[test]
    fn clause_rejects_duplicates_and_empty() {
        assert_eq!(Clause::new(vec![]).unwrap_err(), CnfError::EmptyClause);
        let err = Clause::new(vec![sym("a"), sym("b"), sym("a")]).unwrap_err();
        assert_eq!(err, CnfError::DuplicateSymbol("a".to_owned()));
    }

    #[test]
    fn trivial_signature_direct_count() {
        let sig = f("(a|b)&(a|c)").trivial_signature();
        assert_eq!(
            sig,
            TrivialSignature {
                clause_count: 2,
                cardinality_multiset: vec![2, 2],
                symbol_count: 3,
                occurrence_multiset: vec![1, 1, 2],
            }
        );
    }

    #[test]
    fn trivial_signature_differs_in_clause_count() {
        let a = f("(a|b)").trivial_signature();
        let b = f("(a|b)&(a|c)").trivial_signature();
        assert_ne!(a.clause_count, b.clause_count);
    }

    #[test]
    fn signature_internal_invariants() {
        let sig = f("(a|b|c)&(a)&(b|c)").trivial_signature();
        assert_eq!(sig.cardinality_multiset.len(), sig.clause_count);
        assert_eq!(sig.occurrence_multiset.len(), sig.symbol_count);
        assert_eq!(
            sig.occurrence_multiset.iter().sum::<usize>(),
            sig.cardinality_multiset.iter().sum::<usize>()
        );
    }

    #[test]
    fn apply_renaming_identity_and_swap() {
        let formula = f("(a|b)&(a)");
        let identity = Renaming::identity(formula.symbols());
        assert_eq!(formula.apply_renaming(&identity).unwrap(), formula);

        let swap =
            Renaming::from_pairs([(sym("a"), sym("b")), (sym("b"), sym("a"))]).unwrap();
        let renamed = formula.apply_renaming(&swap).unwrap();
        assert_eq!(renamed.render(), "(b|a)&(b)");
    }

    #[test]
    fn apply_renaming_simple_mapping() {
        let formula = f("(a|b)");
        let r = Renaming::from_pairs([(sym("a"), sym("x")), (sym("b"), sym("y"))]).unwrap();
        assert_eq!(formula.apply_renaming(&r).unwrap().render(), "(x|y)");
    }

    #[test]
    fn apply_renaming_missing_domain_errors() {
        let formula = f("(a|b)");
        let r = Renaming::from_pairs([(sym("a"), sym("x"))]).unwrap();
        assert_eq!(
            formula.apply_renaming(&r).unwrap_err(),
            CnfError::MissingFromDomain("b".to_owned())
        );
    }

    #[test]
    fn renaming_rejects_non_injective() {
        let err =
            Renaming::from_pairs([(sym("a"), sym("x")), (sym("b"), sym("x"))]).unwrap_err();
        assert!(matches!(err, CnfError::NotInjective(_, _, _)));
    }

    #[test]
    fn renaming_preserves_signature() {
        let formula = f("(a|b|c)&(a|d)&(b)");
        let r = Renaming::from_pairs([
            (sym("a"), sym("p")),
            (sym("b"), sym("q")),
            (sym("c"), sym("r")),
            (sym("d"), sym("s")),
        ])
        .unwrap();
        let renamed = formula.apply_renaming(&r).unwrap();
        assert_eq!(formula.trivial_signature(), renamed.trivial_signature());
    }

    #[test]
    fn renaming_inverse_round_trips() {
        let formula = f("(a|b)&(c|a)");
        let r = Renaming::from_pairs([
            (sym("a"), sym("x")),
            (sym("b"), sym("y")),
            (sym("c"), sym("z")),
        ])
        .unwrap();
        let there = formula.apply_renaming(&r).unwrap();
        let back = there.apply_renaming(&r.inverse()).unwrap();
        assert!(back.equal_as_multiset(&formula));
    }

    #[test]
    fn multiset_equality_ignores_order() {
        assert!(f("(a|b)&(c)").equal_as_multiset(&f("(c)&(b|a)")));
        assert!(!f("(a|b)").equal_as_multiset(&f("(a|b)&(a|b)")));
    }

    #[test]
    fn category_labels() {
        assert_eq!(Category::Iso.label(), 1);
        assert_eq!(Category::TrivialNonIso.label(), 0);
        assert_eq!(Category::NontrivialNonIso.label(), 0);
    }
}
