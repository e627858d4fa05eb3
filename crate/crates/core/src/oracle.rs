//! Ground-truth syntactic-isomorphism decisions.
//!
//! Three routes, cheapest first: [`detect_trivial_noniso`] compares the
//! renaming-invariant trivial signatures; [`is_isomorphic`] runs a
//! backtracking search over symbol assignments with profile and
//! clause-consistency pruning; [`is_isomorphic_bruteforce`] enumerates every
//! bijection and exists as an independent reference for testing.
//!
//! The search never guesses: if the node budget runs out the caller gets an
//! explicit [`OracleError::Undecided`] instead of a label.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Category, Formula, Renaming, Symbol};

/// Symbol-count cap for the factorial brute-force reference.
pub const BRUTE_FORCE_MAX_SYMBOLS: usize = 9;

/// Default backtracking node budget; ample at generation-scale inputs.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

const MAX_MASK_SYMBOLS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("brute-force oracle refused: {0} symbols exceeds the guard of {BRUTE_FORCE_MAX_SYMBOLS}")]
    TooManySymbols(usize),
    #[error("search budget of {budget} nodes exhausted; verdict undecided")]
    Undecided { budget: u64 },
    #[error("formula has {0} distinct symbols; the oracle supports at most {MAX_MASK_SYMBOLS}")]
    TooLarge(usize),
}

/// Which trivial-signature component separated the two formulas, in the
/// fixed comparison order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrivialReason {
    ClauseCount,
    CardinalityMultiset,
    SymbolCount,
    OccurrenceMultiset,
}

impl fmt::Display for TrivialReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrivialReason::ClauseCount => "clause_count",
            TrivialReason::CardinalityMultiset => "cardinality_multiset",
            TrivialReason::SymbolCount => "symbol_count",
            TrivialReason::OccurrenceMultiset => "occurrence_multiset",
        };
        f.write_str(s)
    }
}

/// Outcome of an isomorphism query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleVerdict {
    pub isomorphic: bool,
    /// A renaming mapping alpha onto beta; present iff `isomorphic`.
    pub witness: Option<Renaming>,
    /// Set when the verdict came from the trivial-signature comparison.
    pub trivial_reason: Option<TrivialReason>,
}

impl OracleVerdict {
    fn found(witness: Renaming) -> Self {
        OracleVerdict {
            isomorphic: true,
            witness: Some(witness),
            trivial_reason: None,
        }
    }

    fn refuted(trivial_reason: Option<TrivialReason>) -> Self {
        OracleVerdict {
            isomorphic: false,
            witness: None,
            trivial_reason,
        }
    }
}

/// Compares trivial signatures component by component in the fixed order
/// clause count, cardinality multiset, symbol count, occurrence multiset,
/// returning the first mismatch.
pub fn detect_trivial_noniso(alpha: &Formula, beta: &Formula) -> Option<TrivialReason> {
    let a = alpha.trivial_signature();
    let b = beta.trivial_signature();
    if a.clause_count != b.clause_count {
        Some(TrivialReason::ClauseCount)
    } else if a.cardinality_multiset != b.cardinality_multiset {
        Some(TrivialReason::CardinalityMultiset)
    } else if a.symbol_count != b.symbol_count {
        Some(TrivialReason::SymbolCount)
    } else if a.occurrence_multiset != b.occurrence_multiset {
        Some(TrivialReason::OccurrenceMultiset)
    } else {
        None
    }
}

/// Indexed view of a formula: symbols as dense ids, clauses as bitmasks.
struct FormulaIndex {
    syms: Vec<Symbol>,
    clause_masks: Vec<u128>,
    /// clause index lists per symbol
    clauses_of: Vec<Vec<usize>>,
    /// co[u][v] = number of clauses containing both u and v
    co: Vec<Vec<u16>>,
    /// (occurrence count, sorted cardinalities of containing clauses)
    profiles: Vec<(usize, Vec<usize>)>,
}

impl FormulaIndex {
    fn build(f: &Formula) -> Result<Self, OracleError> {
        let syms: Vec<Symbol> = f.symbols().into_iter().cloned().collect();
        let n = syms.len();
        if n > MAX_MASK_SYMBOLS {
            return Err(OracleError::TooLarge(n));
        }
        let idx_of: HashMap<&Symbol, usize> =
            syms.iter().enumerate().map(|(i, s)| (s, i)).collect();

        let mut clause_masks = Vec::with_capacity(f.clause_count());
        let mut clauses_of = vec![Vec::new(); n];
        let mut occ = vec![0usize; n];
        let mut co = vec![vec![0u16; n]; n];
        for (ci, clause) in f.clauses().iter().enumerate() {
            let ids: Vec<usize> = clause.literals().iter().map(|l| idx_of[l]).collect();
            let mut mask = 0u128;
            for &i in &ids {
                mask |= 1u128 << i;
                clauses_of[i].push(ci);
                occ[i] += 1;
            }
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    co[i][j] += 1;
                    co[j][i] += 1;
                }
            }
            clause_masks.push(mask);
        }

        let profiles = (0..n)
            .map(|i| {
                let mut cards: Vec<usize> = clauses_of[i]
                    .iter()
                    .map(|&c| f.clauses()[c].cardinality())
                    .collect();
                cards.sort_unstable();
                (occ[i], cards)
            })
            .collect();

        Ok(FormulaIndex {
            syms,
            clause_masks,
            clauses_of,
            co,
            profiles,
        })
    }

    fn sorted_masks(&self) -> Vec<u128> {
        let mut masks = self.clause_masks.clone();
        masks.sort_unstable();
        masks
    }
}

/// Exact verdict by backtracking with the default node budget.
pub fn is_isomorphic(alpha: &Formula, beta: &Formula) -> Result<OracleVerdict, OracleError> {
    is_isomorphic_with_budget(alpha, beta, DEFAULT_NODE_BUDGET)
}

/// Exact verdict by backtracking.
///
/// Candidate images are restricted to symbols with equal profiles
/// (occurrence count plus multiset of containing-clause cardinalities);
/// partial assignments are pruned by pairwise co-occurrence counts and by
/// clause-image availability. Exhausting `budget` nodes is an error, never
/// a silent answer.
pub fn is_isomorphic_with_budget(
    alpha: &Formula,
    beta: &Formula,
    budget: u64,
) -> Result<OracleVerdict, OracleError> {
    if let Some(reason) = detect_trivial_noniso(alpha, beta) {
        return Ok(OracleVerdict::refuted(Some(reason)));
    }
    let ia = FormulaIndex::build(alpha)?;
    let ib = FormulaIndex::build(beta)?;

    // equal signatures guarantee equal symbol counts
    let n = ia.syms.len();
    debug_assert_eq!(n, ib.syms.len());

    // profile multisets must match; profiles are renaming-invariant
    let mut pa = ia.profiles.clone();
    let mut pb = ib.profiles.clone();
    pa.sort();
    pb.sort();
    if pa != pb {
        return Ok(OracleVerdict::refuted(None));
    }

    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&v| ia.profiles[u] == ib.profiles[v])
                .collect()
        })
        .collect();

    let mut search = Search::new(&ia, &ib, candidates, budget);
    match search.run()? {
        Some(mapping) => {
            let witness = Renaming::from_pairs(
                mapping
                    .iter()
                    .enumerate()
                    .map(|(u, &v)| (ia.syms[u].clone(), ib.syms[v].clone())),
            )
            .expect("search assignments are injective");
            // soundness check on every positive verdict
            let mapped = alpha
                .apply_renaming(&witness)
                .expect("witness domain covers alpha");
            assert!(
                mapped.equal_as_multiset(beta),
                "oracle witness failed verification"
            );
            Ok(OracleVerdict::found(witness))
        }
        None => Ok(OracleVerdict::refuted(None)),
    }
}

struct Search<'a> {
    ia: &'a FormulaIndex,
    ib: &'a FormulaIndex,
    candidates: Vec<Vec<usize>>,
    order: Vec<usize>,
    /// alpha symbol -> beta symbol
    assignment: Vec<Option<usize>>,
    used_beta: u128,
    /// unassigned-literal count per alpha clause
    remaining: Vec<usize>,
    /// partially mapped image mask per alpha clause
    mapped_mask: Vec<u128>,
    /// multiset of beta clause masks still available for completed clauses
    beta_avail: HashMap<u128, i64>,
    nodes: u64,
    budget: u64,
}

impl<'a> Search<'a> {
    fn new(
        ia: &'a FormulaIndex,
        ib: &'a FormulaIndex,
        candidates: Vec<Vec<usize>>,
        budget: u64,
    ) -> Self {
        let n = ia.syms.len();
        let order = assignment_order(ia, &candidates);
        let remaining: Vec<usize> = ia
            .clause_masks
            .iter()
            .map(|m| m.count_ones() as usize)
            .collect();
        let mut beta_avail = HashMap::new();
        for &mask in &ib.clause_masks {
            *beta_avail.entry(mask).or_insert(0) += 1;
        }
        Search {
            ia,
            ib,
            candidates,
            order,
            assignment: vec![None; n],
            used_beta: 0,
            remaining,
            mapped_mask: vec![0; ia.clause_masks.len()],
            beta_avail,
            nodes: 0,
            budget,
        }
    }

    fn run(&mut self) -> Result<Option<Vec<usize>>, OracleError> {
        if self.backtrack(0)? {
            Ok(Some(
                self.assignment.iter().map(|v| v.unwrap()).collect(),
            ))
        } else {
            Ok(None)
        }
    }

    fn backtrack(&mut self, depth: usize) -> Result<bool, OracleError> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let u = self.order[depth];
        for ci in 0..self.candidates[u].len() {
            let v = self.candidates[u][ci];
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(OracleError::Undecided {
                    budget: self.budget,
                });
            }
            if self.used_beta & (1u128 << v) != 0 {
                continue;
            }
            if !self.consistent_pairwise(u, v) {
                continue;
            }
            match self.apply(u, v) {
                Some(completed) => {
                    if self.backtrack(depth + 1)? {
                        return Ok(true);
                    }
                    self.undo(u, v, &completed);
                }
                None => {}
            }
        }
        Ok(false)
    }

    /// Pairwise prune: co-occurrence counts with every already-assigned
    /// symbol must match on both sides.
    fn consistent_pairwise(&self, u: usize, v: usize) -> bool {
        self.assignment.iter().enumerate().all(|(u2, assigned)| {
            assigned.is_none_or(|v2| self.ia.co[u][u2] == self.ib.co[v][v2])
        })
    }

    /// Extends the assignment; on clause completion checks image
    /// availability. Returns the completed clause list, or `None` (with
    /// state rolled back) if some completed image is unavailable.
    fn apply(&mut self, u: usize, v: usize) -> Option<Vec<usize>> {
        let bit = 1u128 << v;
        self.assignment[u] = Some(v);
        self.used_beta |= bit;
        let mut completed = Vec::new();
        let mut failed = false;
        for &c in &self.ia.clauses_of[u] {
            self.mapped_mask[c] |= bit;
            self.remaining[c] -= 1;
            if self.remaining[c] == 0 {
                let avail = self.beta_avail.entry(self.mapped_mask[c]).or_insert(0);
                *avail -= 1;
                if *avail < 0 {
                    *avail += 1;
                    failed = true;
                    break;
                }
                completed.push(c);
            }
        }
        if failed {
            self.undo(u, v, &completed);
            return None;
        }
        Some(completed)
    }

    fn undo(&mut self, u: usize, v: usize, completed: &[usize]) {
        for &c in completed {
            *self.beta_avail.get_mut(&self.mapped_mask[c]).unwrap() += 1;
        }
        let bit = 1u128 << v;
        for &c in &self.ia.clauses_of[u] {
            if self.mapped_mask[c] & bit != 0 {
                self.mapped_mask[c] &= !bit;
                self.remaining[c] += 1;
            }
        }
        self.used_beta &= !bit;
        self.assignment[u] = None;
    }
}

/// Static assignment order: repeatedly pick the symbol whose smallest
/// containing clause is closest to completion, tie-broken by candidate
/// count, so the clause-availability prune fires early.
fn assignment_order(ia: &FormulaIndex, candidates: &[Vec<usize>]) -> Vec<usize> {
    let n = ia.syms.len();
    let mut remaining: Vec<usize> = ia
        .clause_masks
        .iter()
        .map(|m| m.count_ones() as usize)
        .collect();
    let mut picked = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let u = (0..n)
            .filter(|&u| !picked[u])
            .min_by_key(|&u| {
                let closest = ia.clauses_of[u]
                    .iter()
                    .map(|&c| remaining[c])
                    .min()
                    .unwrap_or(usize::MAX);
                (closest, candidates[u].len(), u)
            })
            .expect("at least one unpicked symbol");
        picked[u] = true;
        for &c in &ia.clauses_of[u] {
            remaining[c] -= 1;
        }
        order.push(u);
    }
    order
}

/// Reference oracle: enumerate every bijection between the symbol sets.
///
/// Guarded to [`BRUTE_FORCE_MAX_SYMBOLS`] symbols in `alpha`; beyond that
/// it refuses rather than run a factorial search.
pub fn is_isomorphic_bruteforce(
    alpha: &Formula,
    beta: &Formula,
) -> Result<OracleVerdict, OracleError> {
    let ia = FormulaIndex::build(alpha)?;
    let n = ia.syms.len();
    if n > BRUTE_FORCE_MAX_SYMBOLS {
        return Err(OracleError::TooManySymbols(n));
    }
    let ib = FormulaIndex::build(beta)?;
    if ib.syms.len() != n {
        return Ok(OracleVerdict::refuted(None));
    }
    if ia.clause_masks.len() != ib.clause_masks.len() {
        return Ok(OracleVerdict::refuted(None));
    }

    let beta_sorted = ib.sorted_masks();
    for perm in (0..n).permutations(n) {
        let mut mapped: Vec<u128> = ia
            .clause_masks
            .iter()
            .map(|&mask| {
                let mut out = 0u128;
                for u in 0..n {
                    if mask & (1u128 << u) != 0 {
                        out |= 1u128 << perm[u];
                    }
                }
                out
            })
            .collect();
        mapped.sort_unstable();
        if mapped == beta_sorted {
            let witness = Renaming::from_pairs(
                perm.iter()
                    .enumerate()
                    .map(|(u, &v)| (ia.syms[u].clone(), ib.syms[v].clone())),
            )
            .expect("permutation is injective");
            let image = alpha
                .apply_renaming(&witness)
                .expect("witness domain covers alpha");
            assert!(
                image.equal_as_multiset(beta),
                "brute-force witness failed verification"
            );
            return Ok(OracleVerdict::found(witness));
        }
    }
    Ok(OracleVerdict::refuted(None))
}

/// Assigns the generation category of a pair from the oracle's verdicts.
pub fn classify_pair(alpha: &Formula, beta: &Formula) -> Result<Category, OracleError> {
    let verdict = is_isomorphic(alpha, beta)?;
    if verdict.isomorphic {
        Ok(Category::Iso)
    } else if verdict.trivial_reason.is_some() {
        Ok(Category::TrivialNonIso)
    } else {
        Ok(Category::NontrivialNonIso)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(text: &str) -> Formula {
        Formula::parse(text).unwrap()
    }

    #[test]
    fn trivial_detector_fires_in_fixed_order() {
        let base = f("(a|b)&(a|c)");
        // extra clause: clause_count fires first
        let more = f("(a|b)&(a|c)&(b|c)");
        assert_eq!(
            detect_trivial_noniso(&base, &more),
            Some(TrivialReason::ClauseCount)
        );
        // grown clause: cardinality fires before symbol count
        let grown = f("(a|b)&(a|c|b)");
        assert_eq!(
            detect_trivial_noniso(&base, &grown),
            Some(TrivialReason::CardinalityMultiset)
        );
        // fresh symbol appended to a clause: cardinality still fires first
        let fresh = f("(a|b)&(a|c|d)");
        assert_eq!(
            detect_trivial_noniso(&base, &fresh),
            Some(TrivialReason::CardinalityMultiset)
        );
        assert_eq!(detect_trivial_noniso(&base, &base), None);
    }

    #[test]
    fn occurrence_multiset_reason_reachable() {
        // same clause count, cardinalities, symbol count; occurrences differ
        let a = f("(a|b)&(a|c)&(a|d)&(b|c)");
        let b = f("(a|b)&(a|c)&(b|d)&(c|d)");
        assert_eq!(
            detect_trivial_noniso(&a, &b),
            Some(TrivialReason::OccurrenceMultiset)
        );
    }

    #[test]
    fn brute_force_finds_witness() {
        let alpha = f("(a|b)&(a|c)");
        let beta = f("(x|y)&(x|z)");
        let verdict = is_isomorphic_bruteforce(&alpha, &beta).unwrap();
        assert!(verdict.isomorphic);
        let witness = verdict.witness.unwrap();
        assert_eq!(
            witness.image(&Symbol::new("a").unwrap()).unwrap().as_str(),
            "x"
        );
    }

    #[test]
    fn brute_force_identity() {
        let alpha = f("(a|b|c)&(b|c)");
        let verdict = is_isomorphic_bruteforce(&alpha, &alpha).unwrap();
        assert!(verdict.isomorphic);
    }

    #[test]
    fn brute_force_rejects_different_occurrences() {
        let alpha = f("(a|b)&(a|c)");
        let beta = f("(x|y)&(z|w)");
        let verdict = is_isomorphic_bruteforce(&alpha, &beta).unwrap();
        assert!(!verdict.isomorphic);
    }

    #[test]
    fn brute_force_guard() {
        let alpha = f("(a|b|c|d|e|f|g|h)&(a|b|c|d|e|f|g|i)&(a|j)");
        assert_eq!(
            is_isomorphic_bruteforce(&alpha, &alpha).unwrap_err(),
            OracleError::TooManySymbols(10)
        );
    }

    #[test]
    fn backtracking_agrees_on_small_pairs() {
        let cases = [
            ("(a|b)&(a|c)", "(x|y)&(x|z)", true),
            ("(a|b)&(a|c)", "(x|y)&(z|w)", false),
            ("(a|b)&(c)", "(c)&(b|a)", true),
            ("(a|b)&(a|b)", "(a|b)", false),
            // same signature, not isomorphic (co-occurrence differs)
            ("(a|b)&(a|c)&(a|d)&(b|c)&(b|d)&(c|d)", "(a|b)&(a|b)&(c|d)&(c|d)&(a|c)&(b|d)", false),
        ];
        for (sa, sb, expect) in cases {
            let alpha = f(sa);
            let beta = f(sb);
            let got = is_isomorphic(&alpha, &beta).unwrap();
            assert_eq!(got.isomorphic, expect, "{sa} vs {sb}");
            let brute = is_isomorphic_bruteforce(&alpha, &beta).unwrap();
            assert_eq!(got.isomorphic, brute.isomorphic, "{sa} vs {sb}");
        }
    }

    #[test]
    fn verdict_is_symmetric() {
        let alpha = f("(a|b)&(b|c)&(c|a)");
        let beta = f("(x|y)&(y|z)&(z|x)");
        let ab = is_isomorphic(&alpha, &beta).unwrap();
        let ba = is_isomorphic(&beta, &alpha).unwrap();
        assert_eq!(ab.isomorphic, ba.isomorphic);
        assert!(ab.isomorphic);
    }

    #[test]
    fn classify_pair_all_three() {
        let alpha = f("(a|b)&(a|c)");
        assert_eq!(classify_pair(&alpha, &alpha).unwrap(), Category::Iso);
        let extra = f("(a|b)&(a|c)&(b|c)");
        assert_eq!(
            classify_pair(&alpha, &extra).unwrap(),
            Category::TrivialNonIso
        );
        // signature-equal but not isomorphic
        let a = f("(a|b)&(a|c)&(a|d)&(b|c)&(b|d)&(c|d)");
        let b = f("(a|b)&(a|b)&(c|d)&(c|d)&(a|c)&(b|d)");
        assert_eq!(
            classify_pair(&a, &b).unwrap(),
            Category::NontrivialNonIso
        );
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let alpha = f("(a|b)&(c|d)&(e|g)&(h|i)");
        let beta = f("(p|q)&(r|s)&(t|u)&(v|w)");
        let err = is_isomorphic_with_budget(&alpha, &beta, 1).unwrap_err();
        assert_eq!(err, OracleError::Undecided { budget: 1 });
    }
}
