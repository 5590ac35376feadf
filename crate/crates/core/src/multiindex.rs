//! Sparse multi-index sets.
//!
//! A multi-index assigns a polynomial degree to each random variable of a
//! chaos expansion. Variables are laid out as `K` forcing (Gaussian)
//! variables followed by `D` KL modes. Sets are kept sorted in graded
//! lexicographic order: smaller total degree first, and within a degree the
//! index with the larger exponent at the first differing position first, so
//! that `(2,0) < (1,1) < (0,2)`.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DgpcError, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: Vec<u8>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Componentwise sum. Panics on length mismatch.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.len(), other.len(), "multi-index length mismatch");
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Exponents of variables `range`.
    pub fn block(&self, range: std::ops::Range<usize>) -> &[u8] {
        &self.0[range]
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

fn graded_lex(a: &[u8], b: &[u8]) -> Ordering {
    let da: usize = a.iter().map(|&e| e as usize).sum();
    let db: usize = b.iter().map(|&e| e as usize).sum();
    da.cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                // larger exponent at the first difference sorts first
                return y.cmp(x);
            }
        }
        Ordering::Equal
    })
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        graded_lex(&self.0, &other.0).then_with(|| self.0.len().cmp(&other.0.len()))
    }
}

/// Graded lexicographic comparison of two multi-indices of equal length.
pub fn graded_lex_compare(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(DgpcError::usage(format!(
            "cannot compare multi-indices of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(graded_lex(&a.0, &b.0))
}

/// Per-variable degree caps.
///
/// `caps[i]` bounds the exponent of variable `i` in every index.
/// `caps2`, when present, additionally bounds exponents of indices of total
/// degree exactly two; a zero entry removes the variable from all degree-two
/// indices. `caps_high` does the same for total degree three and above.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseIndex {
    pub caps: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps2: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps_high: Option<Vec<u8>>,
}

impl SparseIndex {
    /// No restriction beyond the total degree.
    pub fn full(nvars: usize, degree: usize) -> Self {
        SparseIndex {
            caps: vec![degree as u8; nvars],
            caps2: None,
            caps_high: None,
        }
    }

    pub fn new(caps: Vec<u8>) -> Self {
        SparseIndex {
            caps,
            caps2: None,
            caps_high: None,
        }
    }

    pub fn with_caps2(mut self, caps2: Vec<u8>) -> Self {
        self.caps2 = Some(caps2);
        self
    }

    pub fn with_caps_high(mut self, caps_high: Vec<u8>) -> Self {
        self.caps_high = Some(caps_high);
        self
    }

    pub fn nvars(&self) -> usize {
        self.caps.len()
    }

    /// Restriction to the variables in `vars` (in that order).
    pub fn select(&self, vars: &[usize]) -> SparseIndex {
        let pick = |v: &Vec<u8>| vars.iter().map(|&i| v[i]).collect::<Vec<_>>();
        SparseIndex {
            caps: pick(&self.caps),
            caps2: self.caps2.as_ref().map(pick),
            caps_high: self.caps_high.as_ref().map(pick),
        }
    }

    pub fn admits(&self, alpha: &[u8]) -> bool {
        let deg: usize = alpha.iter().map(|&e| e as usize).sum();
        let within = |caps: &[u8]| alpha.iter().zip(caps).all(|(a, c)| a <= c);
        if !within(&self.caps) {
            return false;
        }
        match deg {
            2 => self.caps2.as_deref().is_none_or(within),
            d if d >= 3 => self.caps_high.as_deref().is_none_or(within),
            _ => true,
        }
    }

    fn validate(&self, nvars: usize, degree: usize) -> Result<()> {
        let mut problems = Vec::new();
        let check = |name: &str, v: &[u8], problems: &mut Vec<String>| {
            if v.len() != nvars {
                problems.push(format!("{name} has length {} but K+D = {nvars}", v.len()));
            }
            if let Some(i) = v.iter().position(|&c| c as usize > degree) {
                problems.push(format!("{name}[{i}] = {} exceeds N = {degree}", v[i]));
            }
        };
        check("caps", &self.caps, &mut problems);
        if let Some(c2) = &self.caps2 {
            check("caps2", c2, &mut problems);
        }
        if let Some(ch) = &self.caps_high {
            check("caps_high", ch, &mut problems);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DgpcError::Config(problems))
        }
    }
}

/// Generator of per-variable caps from `(K, D, N)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapRule {
    /// Total-degree truncation only.
    Full,
    /// Two leading forcing variables at full degree, later ones linear;
    /// trailing modes linear with the last excluded from quadratic terms.
    LeadingQuadratic,
    /// Leading forcing and mode pairs at full degree, the rest linear and
    /// excluded from all higher-degree terms.
    LeadingPairs,
    /// Per Brownian component the first forcing variable at full degree;
    /// roughly half the modes at full degree, the rest linear.
    PerComponent,
    Explicit(SparseIndex),
}

impl Default for CapRule {
    fn default() -> Self {
        CapRule::Full
    }
}

impl CapRule {
    /// Caps for `n_forcing` forcing variables split evenly across
    /// `components` Brownian motions, followed by `n_modes` modes.
    pub fn caps(
        &self,
        n_forcing: usize,
        components: usize,
        n_modes: usize,
        degree: usize,
    ) -> Result<SparseIndex> {
        let n = degree as u8;
        let nv = n_forcing + n_modes;
        let mut caps = Vec::with_capacity(nv);
        let mut caps2 = Vec::with_capacity(nv);
        let mut high = Vec::with_capacity(nv);
        let mut push = |r: u8, c2: u8, ch: u8| {
            caps.push(r.min(n));
            caps2.push(c2.min(n));
            high.push(ch.min(n));
        };
        match self {
            CapRule::Full => return Ok(SparseIndex::full(nv, degree)),
            CapRule::Explicit(s) => {
                if s.nvars() != nv {
                    return Err(DgpcError::config(format!(
                        "explicit caps have {} entries but K+D = {nv}",
                        s.nvars()
                    )));
                }
                return Ok(s.clone());
            }
            CapRule::LeadingQuadratic => {
                for i in 0..n_forcing {
                    if i < 2 {
                        push(n, n, n)
                    } else {
                        push(1, 0, 0)
                    }
                }
                for l in 1..=n_modes {
                    if l == n_modes {
                        push(1, 0, 0)
                    } else if l + 1 == n_modes && n_forcing <= 2 {
                        push(1, 1, 1)
                    } else {
                        push(n, n, n)
                    }
                }
            }
            CapRule::LeadingPairs => {
                for i in 0..n_forcing {
                    if i < 2 {
                        push(n, n, n)
                    } else {
                        push(1, 0, 0)
                    }
                }
                for l in 0..n_modes {
                    if l < 2 {
                        push(n, n, n)
                    } else {
                        push(1, 0, 0)
                    }
                }
            }
            CapRule::PerComponent => {
                let per = n_forcing / components.max(1);
                for i in 0..n_forcing {
                    if per == 0 || i % per == 0 {
                        push(n, n, n)
                    } else {
                        push(1, 0, 0)
                    }
                }
                let (full, linear_mixed) = match n_modes {
                    6 => (2, 2),
                    8 => (5, 0),
                    d => (d / 2, 0),
                };
                for l in 0..n_modes {
                    if l < full {
                        push(n, n, n)
                    } else if l < full + linear_mixed {
                        push(1, 1, 1)
                    } else {
                        push(1, 0, 0)
                    }
                }
            }
        }
        Ok(SparseIndex::new(caps)
            .with_caps2(caps2)
            .with_caps_high(high))
    }
}

/// An ordered, duplicate-free set of multi-indices whose first member is the
/// zero index.
#[derive(Clone, Debug)]
pub struct MultiIndexSet {
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    n_forcing: usize,
    n_modes: usize,
    max_degree: usize,
    sparse: SparseIndex,
}

impl PartialEq for MultiIndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.indices == other.indices
            && self.n_forcing == other.n_forcing
            && self.n_modes == other.n_modes
    }
}

impl MultiIndexSet {
    /// Builds a set from arbitrary members; sorts and deduplicates, and adds
    /// the zero index if absent.
    pub fn from_indices(
        members: impl IntoIterator<Item = MultiIndex>,
        n_forcing: usize,
        n_modes: usize,
    ) -> Result<Self> {
        let nvars = n_forcing + n_modes;
        let mut uniq: HashSet<MultiIndex> = HashSet::new();
        uniq.insert(MultiIndex::zero(nvars));
        for m in members {
            if m.len() != nvars {
                return Err(DgpcError::usage(format!(
                    "multi-index {m:?} does not have K+D = {nvars} entries"
                )));
            }
            uniq.insert(m);
        }
        let mut indices: Vec<_> = uniq.into_iter().collect();
        indices.sort();
        let max_degree = indices.iter().map(MultiIndex::degree).max().unwrap_or(0);
        Ok(Self::from_sorted(
            indices,
            n_forcing,
            n_modes,
            max_degree,
            SparseIndex::full(nvars, max_degree.min(u8::MAX as usize)),
        ))
    }

    fn from_sorted(
        indices: Vec<MultiIndex>,
        n_forcing: usize,
        n_modes: usize,
        max_degree: usize,
        sparse: SparseIndex,
    ) -> Self {
        let lookup = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        MultiIndexSet {
            indices,
            lookup,
            n_forcing,
            n_modes,
            max_degree,
            sparse,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.n_forcing + self.n_modes
    }

    /// Number of Gaussian forcing variables `K`.
    pub fn n_forcing(&self) -> usize {
        self.n_forcing
    }

    /// Number of non-forcing variables `D` (KL modes or parameter variables).
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn sparse(&self) -> &SparseIndex {
        &self.sparse
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        self.lookup.contains_key(m)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].degree()
    }

    /// Position of the first-degree index of variable `var`, if present.
    pub fn unit_position(&self, var: usize) -> Option<usize> {
        self.position(&MultiIndex::unit(self.nvars(), var))
    }

    /// All members componentwise dominated by some member.
    pub fn downward_closure(&self) -> Vec<MultiIndex> {
        let mut seen: HashSet<MultiIndex> = HashSet::new();
        for m in &self.indices {
            let mut cur = vec![0u8; m.len()];
            loop {
                seen.insert(MultiIndex(cur.clone()));
                // odometer increment bounded by m
                let mut i = 0;
                loop {
                    if i == cur.len() {
                        break;
                    }
                    if cur[i] < m.0[i] {
                        cur[i] += 1;
                        break;
                    }
                    cur[i] = 0;
                    i += 1;
                }
                if i == cur.len() {
                    break;
                }
            }
        }
        let mut v: Vec<_> = seen.into_iter().collect();
        v.sort();
        v
    }
}

/// Enumerates every admissible index with `K+D` variables, total degree at
/// most `N` and the per-variable caps of `sparse`.
pub fn build_sparse_set(
    n_forcing: usize,
    n_modes: usize,
    degree: usize,
    sparse: &SparseIndex,
) -> Result<MultiIndexSet> {
    let nvars = n_forcing + n_modes;
    if degree == 0 {
        return Err(DgpcError::config("maximum degree N must be at least 1"));
    }
    sparse.validate(nvars, degree)?;

    let mut out = Vec::new();
    let mut cur = vec![0u8; nvars];
    enumerate(&mut cur, 0, degree, &sparse.caps, &mut |alpha| {
        if sparse.admits(alpha) {
            out.push(MultiIndex(alpha.to_vec()));
        }
    });
    out.sort();
    Ok(MultiIndexSet::from_sorted(
        out,
        n_forcing,
        n_modes,
        degree,
        sparse.clone(),
    ))
}

fn enumerate(cur: &mut [u8], pos: usize, remaining: usize, caps: &[u8], f: &mut impl FnMut(&[u8])) {
    if pos == cur.len() {
        f(cur);
        return;
    }
    let top = remaining.min(caps[pos] as usize);
    for e in 0..=top {
        cur[pos] = e as u8;
        enumerate(cur, pos + 1, remaining - e, caps, f);
    }
    cur[pos] = 0;
}

/// Every index expressible as a sum of three indices, each componentwise
/// dominated by a member of `set`. These are the exponents whose moments
/// enter Gram matrices, forcing projections and triple products.
pub fn triple_closure(set: &MultiIndexSet) -> MultiIndexSet {
    let down = set.downward_closure();
    let mut pairs: HashSet<MultiIndex> = HashSet::new();
    for a in &down {
        for b in &down {
            pairs.insert(a.add(b));
        }
    }
    let mut triples: HashSet<MultiIndex> = HashSet::new();
    for p in &pairs {
        for c in &down {
            triples.insert(p.add(c));
        }
    }
    let mut v: Vec<_> = triples.into_iter().collect();
    v.sort();
    let max_degree = 3 * set.max_degree();
    let nvars = set.nvars();
    MultiIndexSet::from_sorted(
        v,
        set.n_forcing(),
        set.n_modes(),
        max_degree,
        SparseIndex::full(nvars, max_degree.min(u8::MAX as usize)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn graded_lex_examples() {
        assert_eq!(
            graded_lex_compare(&mi(&[0, 0]), &mi(&[1, 0])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            graded_lex_compare(&mi(&[2, 0]), &mi(&[1, 1])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            graded_lex_compare(&mi(&[1, 1]), &mi(&[0, 2])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            graded_lex_compare(&mi(&[1, 0, 1]), &mi(&[0, 2, 0])).unwrap(),
            Ordering::Less
        );
        assert!(graded_lex_compare(&mi(&[1]), &mi(&[1, 0])).is_err());
    }

    #[test]
    fn graded_lex_is_strict_total_order() {
        // all indices with |alpha| <= 3 in 4 variables
        let set = build_sparse_set(4, 0, 3, &SparseIndex::full(4, 3)).unwrap();
        let all = set.indices();
        for a in all {
            for b in all {
                let ab = graded_lex_compare(a, b).unwrap();
                let ba = graded_lex_compare(b, a).unwrap();
                assert_eq!(ab, ba.reverse());
                assert_eq!(ab == Ordering::Equal, a == b);
                for c in all {
                    if ab == Ordering::Less && graded_lex_compare(b, c).unwrap() == Ordering::Less {
                        assert_eq!(graded_lex_compare(a, c).unwrap(), Ordering::Less);
                    }
                }
            }
        }
    }

    #[test]
    fn simple_truncation_count_is_binomial() {
        let s = build_sparse_set(2, 0, 2, &SparseIndex::full(2, 2)).unwrap();
        assert_eq!(s.len(), 6);
        for (k, d, n) in [(3, 2, 2), (2, 3, 3), (4, 0, 1), (1, 1, 3)] {
            let s = build_sparse_set(k, d, n, &SparseIndex::full(k + d, n)).unwrap();
            assert_eq!(s.len(), binomial(k + d + n, n));
        }
    }

    #[test]
    fn set_is_sorted_and_starts_at_zero() {
        let s = build_sparse_set(
            2,
            3,
            2,
            &SparseIndex::new(vec![2, 2, 2, 1, 1]).with_caps2(vec![2, 2, 2, 1, 0]),
        )
        .unwrap();
        assert!(s.get(0).is_zero());
        for w in s.indices().windows(2) {
            assert_eq!(graded_lex_compare(&w[0], &w[1]).unwrap(), Ordering::Less);
        }
        // degree-two indices never contain the last variable
        for m in s.iter().filter(|m| m.degree() == 2) {
            assert_eq!(m.exponents()[4], 0);
        }
    }

    #[test]
    fn cap_length_mismatch_is_config_error() {
        let err = build_sparse_set(2, 1, 2, &SparseIndex::new(vec![2, 2])).unwrap_err();
        assert!(matches!(err, DgpcError::Config(_)));
    }

    #[test]
    fn closure_small_cases() {
        let s = build_sparse_set(1, 0, 1, &SparseIndex::full(1, 1)).unwrap();
        let c = triple_closure(&s);
        assert_eq!(c.indices(), &[mi(&[0]), mi(&[1]), mi(&[2]), mi(&[3])]);

        let s = build_sparse_set(2, 0, 1, &SparseIndex::full(2, 1)).unwrap();
        let c = triple_closure(&s);
        // brute force: all sums of three members
        let mut expect: Vec<MultiIndex> = Vec::new();
        for a in s.iter() {
            for b in s.iter() {
                for d in s.iter() {
                    let m = a.add(b).add(d);
                    if !expect.contains(&m) {
                        expect.push(m);
                    }
                }
            }
        }
        expect.sort();
        assert_eq!(c.indices(), expect.as_slice());
        assert_eq!(c.len(), 10);

        let z = MultiIndexSet::from_indices(Vec::new(), 2, 1).unwrap();
        assert_eq!(triple_closure(&z).len(), 1);
    }

    #[test]
    fn rule_set_sizes() {
        let size = |rule: CapRule, k, comps, d, n| {
            let caps = rule.caps(k, comps, d, n).unwrap();
            build_sparse_set(k, d, n, &caps).unwrap().len()
        };
        let sizes: Vec<_> = [3, 4, 5]
            .iter()
            .map(|&d| size(CapRule::LeadingQuadratic, 2, 1, d, 2))
            .collect();
        assert_eq!(sizes, [15, 21, 28]);
        let sizes: Vec<_> = [3, 4, 5]
            .iter()
            .map(|&d| size(CapRule::LeadingQuadratic, 4, 1, d, 2))
            .collect();
        assert_eq!(sizes, [18, 24, 31]);
        let sizes: Vec<_> = [4, 6, 8]
            .iter()
            .map(|&d| size(CapRule::PerComponent, 4, 2, d, 2))
            .collect();
        assert_eq!(sizes, [19, 30, 41]);
        let sizes: Vec<_> = [1, 2, 3]
            .iter()
            .map(|&n| size(CapRule::LeadingPairs, 3, 1, 4, n))
            .collect();
        assert_eq!(sizes, [8, 18, 38]);
    }

    #[test]
    fn explicit_caps_reproduce_listed_sets() {
        let s = SparseIndex::new(vec![2, 2, 2, 1, 1]).with_caps2(vec![2, 2, 2, 1, 0]);
        assert_eq!(build_sparse_set(2, 3, 2, &s).unwrap().len(), 15);
        let s = SparseIndex::new(vec![2, 1, 2, 1, 2, 2, 2, 2, 2, 1, 1, 1])
            .with_caps2(vec![2, 0, 2, 0, 2, 2, 2, 2, 2, 0, 0, 0]);
        assert_eq!(build_sparse_set(4, 8, 2, &s).unwrap().len(), 41);
        assert_eq!(CapRule::Explicit(s.clone()).caps(4, 2, 8, 2).unwrap(), s);
        assert!(CapRule::Explicit(s).caps(4, 2, 7, 2).is_err());
    }

    use proptest::prelude::*;

    fn small_set() -> impl Strategy<Value = MultiIndexSet> {
        (1usize..4, 1usize..3).prop_flat_map(|(nv, n)| {
            proptest::collection::vec(0u8..=n as u8, nv).prop_map(move |caps| {
                build_sparse_set(nv.min(1), nv - nv.min(1), n, &SparseIndex::new(caps)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn closure_contains_set_and_ignores_downward_completion(set in small_set()) {
            let c = triple_closure(&set);
            for a in set.iter() {
                prop_assert!(c.contains(a));
            }
            prop_assert!(c.iter().all(|a| a.degree() <= 3 * set.max_degree()));
            let down = MultiIndexSet::from_indices(set.downward_closure(), set.n_forcing(), set.n_modes()).unwrap();
            let cd = triple_closure(&down);
            prop_assert_eq!(cd.indices(), c.indices());
        }

        #[test]
        fn full_caps_count_is_binomial(k in 0usize..4, d in 0usize..4, n in 1usize..4) {
            prop_assume!(k + d > 0);
            let set = build_sparse_set(k, d, n, &SparseIndex::full(k + d, n)).unwrap();
            prop_assert_eq!(set.len(), binomial(k + d + n, n));
        }

        #[test]
        fn graded_lex_is_consistent_with_degree(a in proptest::collection::vec(0u8..4, 3), b in proptest::collection::vec(0u8..4, 3)) {
            let (a, b) = (MultiIndex::new(a), MultiIndex::new(b));
            let ord = graded_lex_compare(&a, &b).unwrap();
            prop_assert_eq!(ord, graded_lex_compare(&b, &a).unwrap().reverse());
            if a.degree() < b.degree() {
                prop_assert_eq!(ord, Ordering::Less);
            }
            prop_assert_eq!(ord == Ordering::Equal, a == b);
        }
    }
}
