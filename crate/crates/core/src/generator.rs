//! Seeded construction of formulas, pair categories, and dataset files.
//!
//! Every sample is generated from its own random stream, derived as
//! [`derive_seed`]`(dataset_seed, index)`, so dataset content is independent
//! of worker count and schedule. Category labels are certified: trivial
//! pairs are built by signature-breaking rules, non-trivial pairs by
//! signature-preserving occurrence swaps accepted only once the oracle
//! refutes isomorphism.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Category, Clause, CnfError, Formula, PairSample, Renaming, Symbol};
use crate::dataset::{self, DatasetError, DatasetRecord};
use crate::oracle::{self, OracleError};

/// Attempt cap for every rejection-sampling loop.
pub const REJECTION_CAP: usize = 1000;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("rejection cap of {cap} attempts exceeded while {what}")]
    RejectionCapExceeded { what: &'static str, cap: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Formula-generation parameters. Defaults mirror the generation recipe
/// used throughout: a 25-name pool, 15..=25 distinct symbols per formula,
/// 10..=15 clauses of cardinality 8, monotone only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub symbol_pool: Vec<Symbol>,
    /// Inclusive (min, max) distinct-symbol count per formula.
    pub symbols_range: (usize, usize),
    /// Inclusive (min, max) clause count per formula.
    pub clauses_range: (usize, usize),
    pub clause_cardinality: usize,
    pub monotone: bool,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            symbol_pool: default_symbol_pool(),
            symbols_range: (15, 25),
            clauses_range: (10, 15),
            clause_cardinality: 8,
            monotone: true,
            seed: 0,
        }
    }
}

/// The fixed 25-name pool `x0..x24`.
pub fn default_symbol_pool() -> Vec<Symbol> {
    (0..25)
        .map(|i| Symbol::new(format!("x{i}")).expect("pool names are valid"))
        .collect()
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let err = |msg: String| Err(GenerateError::InvalidParams(msg));
        if self.symbol_pool.is_empty() {
            return err("symbol pool is empty".into());
        }
        let mut pool = self.symbol_pool.clone();
        pool.sort();
        pool.dedup();
        if pool.len() != self.symbol_pool.len() {
            return err("symbol pool contains duplicates".into());
        }
        let (smin, smax) = self.symbols_range;
        let (cmin, cmax) = self.clauses_range;
        if smin == 0 || smin > smax {
            return err(format!("symbols_range ({smin},{smax}) is empty"));
        }
        if cmin == 0 || cmin > cmax {
            return err(format!("clauses_range ({cmin},{cmax}) is empty"));
        }
        if smax > self.symbol_pool.len() {
            return err(format!(
                "symbols_range max {smax} exceeds pool size {}",
                self.symbol_pool.len()
            ));
        }
        if self.clause_cardinality == 0 {
            return err("clause_cardinality must be at least 1".into());
        }
        if self.clause_cardinality > smin {
            return err(format!(
                "clause_cardinality {} exceeds symbols_range min {smin}",
                self.clause_cardinality
            ));
        }
        if !self.monotone {
            return err("non-monotone generation is not supported".into());
        }
        Ok(())
    }
}

/// Derives the per-sample stream seed from the dataset seed and sample
/// index. SplitMix64 finalizer; stable across platforms.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `count` distinct items from `pool` uniformly, preserving draw
/// order, via a partial Fisher-Yates shuffle.
fn draw_distinct<T: Clone, R: Rng>(pool: &[T], count: usize, rng: &mut R) -> Vec<T> {
    debug_assert!(count <= pool.len());
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
        out.push(pool[indices[i]].clone());
    }
    out
}

/// Draws one random formula: clause count uniform in `clauses_range`, each
/// clause `clause_cardinality` distinct pool symbols, rejection-sampled
/// until the distinct-symbol count lands in `symbols_range`.
pub fn random_formula<R: Rng>(params: &GenParams, rng: &mut R) -> Result<Formula, GenerateError> {
    params.validate()?;
    for _ in 0..REJECTION_CAP {
        let clause_count = rng.random_range(params.clauses_range.0..=params.clauses_range.1);
        let clauses: Vec<Clause> = (0..clause_count)
            .map(|_| {
                let lits = draw_distinct(&params.symbol_pool, params.clause_cardinality, rng);
                Clause::new(lits).expect("drawn literals are distinct")
            })
            .collect();
        let formula = Formula::new(clauses).expect("clause_count is at least 1");
        let distinct = formula.symbol_count();
        if distinct >= params.symbols_range.0 && distinct <= params.symbols_range.1 {
            return Ok(formula);
        }
    }
    Err(GenerateError::RejectionCapExceeded {
        what: "sampling a formula inside the distinct-symbol range",
        cap: REJECTION_CAP,
    })
}

/// Draws a uniform random injection from the symbols of `formula` into
/// `pool`; the image may use pool names absent from the formula.
pub fn random_renaming<R: Rng>(
    formula: &Formula,
    pool: &[Symbol],
    rng: &mut R,
) -> Result<Renaming, GenerateError> {
    let symbols: Vec<&Symbol> = formula.symbols().into_iter().collect();
    if symbols.len() > pool.len() {
        return Err(GenerateError::InvalidParams(format!(
            "formula has {} symbols but the pool only has {}",
            symbols.len(),
            pool.len()
        )));
    }
    let images = draw_distinct(pool, symbols.len(), rng);
    let renaming = Renaming::from_pairs(
        symbols
            .into_iter()
            .cloned()
            .zip(images),
    )?;
    Ok(renaming)
}

/// Builds an isomorphic pair: beta is alpha under a random renaming.
pub fn make_iso_pair(params: &GenParams, id: u64, seed: u64) -> Result<PairSample, GenerateError> {
    let mut rng = sample_rng(seed);
    let alpha = random_formula(params, &mut rng)?;
    let renaming = random_renaming(&alpha, &params.symbol_pool, &mut rng)?;
    let beta = alpha.apply_renaming(&renaming)?;
    Ok(PairSample::new(id, alpha, beta, Category::Iso, seed))
}

/// The three trivial modification rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrivialRule {
    /// Add a clause of the same cardinality over symbols already in the CNF.
    AddClause,
    /// Add a symbol already in the CNF to an existing clause.
    GrowClause,
    /// Add a symbol not present in the CNF to an existing clause.
    AddFreshSymbol,
}

/// Builds a trivially non-isomorphic pair: one uniform trivial rule applied
/// to alpha, then a random renaming of the result.
pub fn make_trivial_pair(
    params: &GenParams,
    id: u64,
    seed: u64,
) -> Result<PairSample, GenerateError> {
    let mut rng = sample_rng(seed);
    let alpha = random_formula(params, &mut rng)?;
    let symbols: Vec<Symbol> = alpha.symbols().into_iter().cloned().collect();
    let fresh: Vec<Symbol> = params
        .symbol_pool
        .iter()
        .filter(|s| !symbols.contains(s))
        .cloned()
        .collect();

    let mut rule = match rng.random_range(0..3u32) {
        0 => TrivialRule::AddClause,
        1 => TrivialRule::GrowClause,
        _ => TrivialRule::AddFreshSymbol,
    };
    if rule == TrivialRule::AddFreshSymbol && fresh.is_empty() {
        // the whole pool is in use: resample among the two feasible rules
        rule = if rng.random_range(0..2u32) == 0 {
            TrivialRule::AddClause
        } else {
            TrivialRule::GrowClause
        };
    }

    // a clause already holding every symbol cannot grow with a known one
    let growable: Vec<usize> = (0..alpha.clause_count())
        .filter(|&ci| alpha.clauses()[ci].cardinality() < symbols.len())
        .collect();
    if rule == TrivialRule::GrowClause && growable.is_empty() {
        rule = TrivialRule::AddClause;
    }

    let mut clauses: Vec<Clause> = alpha.clauses().to_vec();
    match rule {
        TrivialRule::AddClause => {
            let lits = draw_distinct(&symbols, params.clause_cardinality, &mut rng);
            clauses.push(Clause::new(lits).expect("distinct draw"));
        }
        TrivialRule::GrowClause => {
            let ci = growable[rng.random_range(0..growable.len())];
            let absent: Vec<Symbol> = symbols
                .iter()
                .filter(|s| !clauses[ci].contains(s))
                .cloned()
                .collect();
            let extra = absent[rng.random_range(0..absent.len())].clone();
            clauses[ci] = grow_clause(&clauses[ci], extra);
        }
        TrivialRule::AddFreshSymbol => {
            let ci = rng.random_range(0..clauses.len());
            let extra = fresh[rng.random_range(0..fresh.len())].clone();
            clauses[ci] = grow_clause(&clauses[ci], extra);
        }
    }
    let beta = Formula::new(clauses).expect("non-empty");
    let renaming = random_renaming(&beta, &params.symbol_pool, &mut rng)?;
    let gamma = beta.apply_renaming(&renaming)?;
    Ok(PairSample::new(
        id,
        alpha,
        gamma,
        Category::TrivialNonIso,
        seed,
    ))
}

fn grow_clause(clause: &Clause, extra: Symbol) -> Clause {
    let mut lits = clause.literals().to_vec();
    lits.push(extra);
    Clause::new(lits).expect("extra symbol is absent from the clause")
}

/// Builds a non-trivially non-isomorphic pair: 1..=3 signature-preserving
/// occurrence swaps, rejected until the oracle refutes isomorphism, then a
/// random renaming.
pub fn make_nontrivial_pair(
    params: &GenParams,
    id: u64,
    seed: u64,
) -> Result<PairSample, GenerateError> {
    let mut rng = sample_rng(seed);
    let alpha = random_formula(params, &mut rng)?;

    for _ in 0..REJECTION_CAP {
        let swaps = rng.random_range(1..=3usize);
        if let Some(beta) = try_occurrence_swaps(&alpha, swaps, &mut rng) {
            debug_assert_eq!(alpha.trivial_signature(), beta.trivial_signature());
            // swaps that merely exchange clause contents leave the multiset
            // unchanged; skip the search for those
            if beta.equal_as_multiset(&alpha) {
                continue;
            }
            if !oracle::is_isomorphic(&alpha, &beta)?.isomorphic {
                let renaming = random_renaming(&beta, &params.symbol_pool, &mut rng)?;
                let gamma = beta.apply_renaming(&renaming)?;
                return Ok(PairSample::new(
                    id,
                    alpha,
                    gamma,
                    Category::NontrivialNonIso,
                    seed,
                ));
            }
        }
    }
    Err(GenerateError::RejectionCapExceeded {
        what: "building a non-trivial non-isomorphic mutation",
        cap: REJECTION_CAP,
    })
}

/// Applies `count` occurrence swaps: pick clauses Ci != Cj and symbols
/// u in Ci\Cj, v in Cj\Ci, and exchange them. Every trivial-signature
/// component is preserved. Returns `None` when no swappable clause pair
/// exists at some step.
fn try_occurrence_swaps<R: Rng>(alpha: &Formula, count: usize, rng: &mut R) -> Option<Formula> {
    let mut clauses: Vec<Vec<Symbol>> = alpha
        .clauses()
        .iter()
        .map(|c| c.literals().to_vec())
        .collect();
    for _ in 0..count {
        let mut done = false;
        for _ in 0..REJECTION_CAP {
            let i = rng.random_range(0..clauses.len());
            let j = rng.random_range(0..clauses.len());
            if i == j {
                continue;
            }
            let only_i: Vec<usize> = (0..clauses[i].len())
                .filter(|&a| !clauses[j].contains(&clauses[i][a]))
                .collect();
            let only_j: Vec<usize> = (0..clauses[j].len())
                .filter(|&b| !clauses[i].contains(&clauses[j][b]))
                .collect();
            if only_i.is_empty() || only_j.is_empty() {
                continue;
            }
            let a = only_i[rng.random_range(0..only_i.len())];
            let b = only_j[rng.random_range(0..only_j.len())];
            let u = clauses[i][a].clone();
            let v = clauses[j][b].clone();
            clauses[i][a] = v;
            clauses[j][b] = u;
            done = true;
            break;
        }
        if !done {
            return None;
        }
    }
    let clauses = clauses
        .into_iter()
        .map(|lits| Clause::new(lits).expect("swaps keep clauses duplicate-free"))
        .collect();
    Some(Formula::new(clauses).expect("clause count unchanged"))
}

/// Total size and category mix of a dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub total_pairs: usize,
    /// Fraction per category, in [`Category::ALL`] order semantics.
    pub fractions: Fractions,
    pub params: GenParams,
}

/// Category fractions; must sum to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub iso: f64,
    pub trivial: f64,
    pub nontrivial: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions {
            iso: 0.5,
            trivial: 0.25,
            nontrivial: 0.25,
        }
    }
}

impl Fractions {
    pub fn get(&self, cat: Category) -> f64 {
        match cat {
            Category::Iso => self.iso,
            Category::TrivialNonIso => self.trivial,
            Category::NontrivialNonIso => self.nontrivial,
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let sum = self.iso + self.trivial + self.nontrivial;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GenerateError::InvalidParams(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        if [self.iso, self.trivial, self.nontrivial]
            .iter()
            .any(|&f| !(0.0..=1.0).contains(&f))
        {
            return Err(GenerateError::InvalidParams(
                "fractions must lie in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

/// Largest-remainder rounding of `total * fractions`, remainders broken in
/// fixed category order (iso, trivial, nontrivial).
pub fn category_counts(total: usize, fractions: &Fractions) -> [usize; 3] {
    let exact: Vec<f64> = Category::ALL
        .iter()
        .map(|&c| total as f64 * fractions.get(c))
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|&x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // sort by descending remainder, ties by category order
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in 0..(total - assigned) {
        counts[order[k % 3]] += 1;
    }
    [counts[0], counts[1], counts[2]]
}

fn make_pair_for(
    category: Category,
    params: &GenParams,
    id: u64,
    seed: u64,
) -> Result<PairSample, GenerateError> {
    match category {
        Category::Iso => make_iso_pair(params, id, seed),
        Category::TrivialNonIso => make_trivial_pair(params, id, seed),
        Category::NontrivialNonIso => make_nontrivial_pair(params, id, seed),
    }
}

fn generate_mixed(
    spec: &DatasetSpec,
    counts: [usize; 3],
) -> Result<Vec<PairSample>, GenerateError> {
    spec.params.validate()?;
    let categories: Vec<Category> = Category::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&cat, n)| std::iter::repeat_n(cat, n))
        .collect();

    let mut samples: Vec<PairSample> = categories
        .par_iter()
        .enumerate()
        .map(|(i, &cat)| {
            make_pair_for(cat, &spec.params, i as u64, derive_seed(spec.params.seed, i as u64))
        })
        .collect::<Result<_, _>>()?;

    let mut shuffle_rng = sample_rng(derive_seed(spec.params.seed, u64::MAX));
    samples.shuffle(&mut shuffle_rng);
    Ok(samples)
}

/// Generates the phase-1 mix (by default 50% iso, 25% trivial, 25%
/// non-trivial), deterministically shuffled.
pub fn generate_phase1(spec: &DatasetSpec) -> Result<Vec<PairSample>, GenerateError> {
    spec.fractions.validate()?;
    generate_mixed(spec, category_counts(spec.total_pairs, &spec.fractions))
}

/// Writes the phase-1 dataset as JSONL.
pub fn build_phase1_dataset(
    spec: &DatasetSpec,
    path: &std::path::Path,
) -> Result<(), GenerateError> {
    let samples = generate_phase1(spec)?;
    let records: Vec<DatasetRecord> = samples.iter().map(DatasetRecord::from).collect();
    dataset::write_jsonl(path, &records)?;
    Ok(())
}

/// Generates the phase-2 evaluation mix: the two non-isomorphic categories
/// in equal halves, each record carrying the easy/hard label
/// (trivial -> 0, nontrivial -> 1) in `label2`.
pub fn generate_phase2_eval(spec: &DatasetSpec) -> Result<Vec<DatasetRecord>, GenerateError> {
    if spec.fractions.iso != 0.0 {
        return Err(GenerateError::InvalidParams(
            "phase-2 evaluation sets contain no isomorphic pairs; set the iso fraction to 0"
                .into(),
        ));
    }
    spec.fractions.validate()?;
    let counts = category_counts(spec.total_pairs, &spec.fractions);
    let samples = generate_mixed(spec, counts)?;
    Ok(samples
        .iter()
        .map(|s| {
            let mut rec = DatasetRecord::from(s);
            rec.label2 = Some(match s.category {
                Category::TrivialNonIso => 0,
                Category::NontrivialNonIso => 1,
                Category::Iso => unreachable!("iso fraction is zero"),
            });
            rec
        })
        .collect())
}

/// Writes the phase-2 evaluation dataset as JSONL.
pub fn build_phase2_eval_dataset(
    spec: &DatasetSpec,
    path: &std::path::Path,
) -> Result<(), GenerateError> {
    let records = generate_phase2_eval(spec)?;
    dataset::write_jsonl(path, &records)?;
    Ok(())
}

/// A 50/50 trivial/non-trivial spec for phase-2 evaluation sets.
pub fn phase2_eval_spec(total_pairs: usize, params: GenParams) -> DatasetSpec {
    DatasetSpec {
        total_pairs,
        fractions: Fractions {
            iso: 0.0,
            trivial: 0.5,
            nontrivial: 0.5,
        },
        params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{classify_pair, detect_trivial_noniso};

    fn small_params(seed: u64) -> GenParams {
        // scaled-down but sparse enough that occurrence swaps rarely
        // collapse into renamings or clause exchanges
        GenParams {
            symbol_pool: default_symbol_pool()[..14].to_vec(),
            symbols_range: (10, 14),
            clauses_range: (6, 10),
            clause_cardinality: 5,
            monotone: true,
            seed,
        }
    }

    #[test]
    fn random_formula_respects_params() {
        let params = GenParams::default();
        let mut rng = sample_rng(7);
        for _ in 0..50 {
            let f = random_formula(&params, &mut rng).unwrap();
            assert!((10..=15).contains(&f.clause_count()));
            assert!(f.clauses().iter().all(|c| c.cardinality() == 8));
            let distinct = f.symbol_count();
            assert!((15..=25).contains(&distinct), "{distinct} symbols");
        }
    }

    #[test]
    fn forced_params_produce_unique_formula() {
        let params = GenParams {
            symbol_pool: vec![Symbol::new("a").unwrap(), Symbol::new("b").unwrap()],
            symbols_range: (2, 2),
            clauses_range: (1, 1),
            clause_cardinality: 2,
            monotone: true,
            seed: 0,
        };
        let mut rng = sample_rng(3);
        let f = random_formula(&params, &mut rng).unwrap();
        assert!(f.render() == "(a|b)" || f.render() == "(b|a)");
        assert_eq!(f.symbol_count(), 2);
    }

    #[test]
    fn random_formula_is_seed_deterministic() {
        let params = GenParams::default();
        let a = random_formula(&params, &mut sample_rng(11)).unwrap();
        let b = random_formula(&params, &mut sample_rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = GenParams::default();
        p.clause_cardinality = 20;
        assert!(matches!(
            p.validate(),
            Err(GenerateError::InvalidParams(_))
        ));
        let mut p = GenParams::default();
        p.symbols_range = (10, 30);
        assert!(p.validate().is_err());
        let mut p = GenParams::default();
        p.monotone = false;
        assert!(p.validate().is_err());
    }

    #[test]
    fn random_renaming_is_injective_and_covers() {
        let params = small_params(5);
        let mut rng = sample_rng(5);
        for _ in 0..100 {
            let f = random_formula(&params, &mut rng).unwrap();
            let r = random_renaming(&f, &params.symbol_pool, &mut rng).unwrap();
            assert_eq!(r.len(), f.symbol_count());
            let mut images: Vec<&Symbol> = r.mapping().values().collect();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), r.len());
        }
    }

    #[test]
    fn random_renaming_covers_all_bijections() {
        // 3-symbol formula over a 3-name pool: all 6 bijections show up
        let pool = vec![
            Symbol::new("a").unwrap(),
            Symbol::new("b").unwrap(),
            Symbol::new("c").unwrap(),
        ];
        let f = Formula::parse("(a|b|c)").unwrap();
        let mut rng = sample_rng(9);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..1000 {
            let r = random_renaming(&f, &pool, &mut rng).unwrap();
            let key: Vec<String> = r
                .mapping()
                .values()
                .map(|s| s.as_str().to_owned())
                .collect();
            seen.insert(key);
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn identity_is_only_bijection_on_full_pool() {
        let pool = vec![Symbol::new("a").unwrap()];
        let f = Formula::parse("(a)").unwrap();
        let r = random_renaming(&f, &pool, &mut sample_rng(2)).unwrap();
        assert_eq!(
            r.image(&Symbol::new("a").unwrap()).unwrap().as_str(),
            "a"
        );
    }

    #[test]
    fn iso_pairs_are_isomorphic_with_equal_signatures() {
        let params = small_params(0);
        for i in 0..50u64 {
            let s = make_iso_pair(&params, i, derive_seed(1, i)).unwrap();
            assert_eq!(s.category, Category::Iso);
            assert_eq!(s.label, 1);
            assert_eq!(s.alpha.trivial_signature(), s.beta.trivial_signature());
            assert!(oracle::is_isomorphic(&s.alpha, &s.beta).unwrap().isomorphic);
        }
    }

    #[test]
    fn trivial_pairs_flagged_and_refuted() {
        let params = small_params(0);
        for i in 0..50u64 {
            let s = make_trivial_pair(&params, i, derive_seed(2, i)).unwrap();
            assert_eq!(s.category, Category::TrivialNonIso);
            assert_eq!(s.label, 0);
            assert!(detect_trivial_noniso(&s.alpha, &s.beta).is_some());
            assert!(!oracle::is_isomorphic(&s.alpha, &s.beta).unwrap().isomorphic);
        }
    }

    #[test]
    fn nontrivial_pairs_pass_detector_yet_refuted() {
        let params = small_params(0);
        for i in 0..25u64 {
            let s = make_nontrivial_pair(&params, i, derive_seed(3, i)).unwrap();
            assert_eq!(s.category, Category::NontrivialNonIso);
            assert!(detect_trivial_noniso(&s.alpha, &s.beta).is_none());
            assert_eq!(s.alpha.trivial_signature(), s.beta.trivial_signature());
            assert!(!oracle::is_isomorphic(&s.alpha, &s.beta).unwrap().isomorphic);
        }
    }

    #[test]
    fn category_soundness_via_classify() {
        let params = small_params(0);
        for i in 0..20u64 {
            for cat in Category::ALL {
                let s = make_pair_for(cat, &params, i, derive_seed(4 + cat as u64, i)).unwrap();
                assert_eq!(classify_pair(&s.alpha, &s.beta).unwrap(), s.category);
            }
        }
    }

    #[test]
    fn largest_remainder_counts() {
        let f = Fractions::default();
        assert_eq!(category_counts(50_000, &f), [25_000, 12_500, 12_500]);
        assert_eq!(category_counts(10, &f), [5, 3, 2]);
        assert_eq!(category_counts(0, &f), [0, 0, 0]);
        assert_eq!(category_counts(1, &f), [1, 0, 0]);
        assert_eq!(category_counts(2, &f), [1, 1, 0]);
        let counts = category_counts(7, &f);
        assert_eq!(counts.iter().sum::<usize>(), 7);
        assert_eq!(counts, [3, 2, 2]);
    }

    #[test]
    fn phase1_dataset_split_and_determinism() {
        let spec = DatasetSpec {
            total_pairs: 24,
            fractions: Fractions::default(),
            params: small_params(42),
        };
        let a = generate_phase1(&spec).unwrap();
        let b = generate_phase1(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 24);
        let iso = a.iter().filter(|s| s.category == Category::Iso).count();
        let triv = a
            .iter()
            .filter(|s| s.category == Category::TrivialNonIso)
            .count();
        assert_eq!(iso, 12);
        assert_eq!(triv, 6);
        // ids are the generation indices, all present after the shuffle
        let mut ids: Vec<u64> = a.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..24).collect::<Vec<_>>());
    }

    #[test]
    fn empty_dataset_is_fine() {
        let spec = DatasetSpec {
            total_pairs: 0,
            fractions: Fractions::default(),
            params: small_params(1),
        };
        assert!(generate_phase1(&spec).unwrap().is_empty());
    }

    #[test]
    fn phase2_eval_is_balanced_without_iso() {
        let spec = phase2_eval_spec(20, small_params(9));
        let recs = generate_phase2_eval(&spec).unwrap();
        assert_eq!(recs.len(), 20);
        assert!(recs.iter().all(|r| r.category != Category::Iso));
        let easy = recs.iter().filter(|r| r.label2 == Some(0)).count();
        let hard = recs.iter().filter(|r| r.label2 == Some(1)).count();
        assert_eq!(easy, 10);
        assert_eq!(hard, 10);
        assert!(recs
            .iter()
            .all(|r| (r.label2 == Some(0)) == (r.category == Category::TrivialNonIso)));
    }

    #[test]
    fn phase2_eval_rejects_iso_fraction() {
        let spec = DatasetSpec {
            total_pairs: 10,
            fractions: Fractions::default(),
            params: small_params(1),
        };
        assert!(generate_phase2_eval(&spec).is_err());
    }
}
