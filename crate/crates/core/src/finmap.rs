//! Finite partial functions, finite relations and renaming sequences.
//!
//! Every structure keeps insertion order so that menus and renamings are
//! deterministic. Set-level operations compare domains as sets.

use std::hash::Hash;

use rustc_hash::{FxBuildHasher, FxHashMap, FxHashSet};

/// Insertion-ordered map and set with a fast non-cryptographic hash.
pub type Map<K, V> = indexmap::IndexMap<K, V, FxBuildHasher>;
pub type Set<T> = indexmap::IndexSet<T, FxBuildHasher>;

/// Finite partial function with insertion-ordered, pairwise distinct keys.
#[derive(Clone, Debug)]
pub struct FinMap<K: Hash + Eq, V> {
    inner: Map<K, V>,
}

impl<K: Hash + Eq, V> Default for FinMap<K, V> {
    fn default() -> Self {
        FinMap { inner: Map::default() }
    }
}

impl<K: Hash + Eq + Clone, V: Clone> FinMap<K, V> {
    pub fn new() -> Self {
        FinMap::default()
    }

    /// Later duplicates replace the value but keep the first position.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        FinMap { inner: pairs.into_iter().collect() }
    }

    pub fn insert(&mut self, k: K, v: V) {
        self.inner.insert(k, v);
    }

    pub fn get(&self, k: &K) -> Option<&V> {
        self.inner.get(k)
    }

    pub fn contains_key(&self, k: &K) -> bool {
        self.inner.contains_key(k)
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.inner.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.inner.iter()
    }

    pub fn get_index(&self, i: usize) -> Option<(&K, &V)> {
        self.inner.get_index(i)
    }

    pub fn map<W: Clone>(&self, mut f: impl FnMut(&K, &V) -> W) -> FinMap<K, W> {
        FinMap { inner: self.inner.iter().map(|(k, v)| (k.clone(), f(k, v))).collect() }
    }

    /// `self ⊕ other`: entries of `other` win on shared keys.
    pub fn override_with(&self, other: &FinMap<K, V>) -> FinMap<K, V> {
        let mut out = self.inner.clone();
        for (k, v) in &other.inner {
            out.insert(k.clone(), v.clone());
        }
        FinMap { inner: out }
    }

    /// `self ⊙ other`: keys present on both sides are dropped.
    pub fn merge_excl(&self, other: &FinMap<K, V>) -> FinMap<K, V> {
        let left = self.anti_restrict(|k| other.contains_key(k));
        let right = other.anti_restrict(|k| self.contains_key(k));
        left.override_with(&right)
    }

    /// `A ◁ self`.
    pub fn dom_restrict(&self, keep: impl Fn(&K) -> bool) -> FinMap<K, V> {
        FinMap { inner: self.inner.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }

    /// `A ⩤ self`.
    pub fn anti_restrict(&self, drop: impl Fn(&K) -> bool) -> FinMap<K, V> {
        self.dom_restrict(|k| !drop(k))
    }

    /// Domain as a set, order forgotten.
    pub fn same_domain(&self, other: &FinMap<K, V>) -> bool {
        self.len() == other.len() && self.keys().all(|k| other.contains_key(k))
    }
}

/// Finite binary relation as a set of pairs in first-insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rel<A: Hash + Eq, B: Hash + Eq> {
    pairs: Set<(A, B)>,
}

impl<A: Hash + Eq + Clone, B: Hash + Eq + Clone> Rel<A, B> {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (A, B)>) -> Self {
        Rel { pairs: pairs.into_iter().collect() }
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(A, B)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: &A, b: &B) -> bool {
        self.pairs.contains(&(a.clone(), b.clone()))
    }

    pub fn inverse(&self) -> Rel<B, A> {
        Rel { pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    pub fn dom_restrict(&self, keep: impl Fn(&A) -> bool) -> Self {
        Rel { pairs: self.pairs.iter().filter(|(a, _)| keep(a)).cloned().collect() }
    }

    /// Keeps `(x, y)` only when `y` is the sole image of `x`.
    pub fn mk_functional(&self) -> FinMap<A, B> {
        // Pairs are distinct, so a source seen once has exactly one image.
        let mut count: FxHashMap<&A, u32> = FxHashMap::with_capacity_and_hasher(self.pairs.len(), FxBuildHasher);
        for (a, _) in &self.pairs {
            *count.entry(a).or_insert(0) += 1;
        }
        let mut inner = Map::with_capacity_and_hasher(count.len(), FxBuildHasher);
        for (a, b) in &self.pairs {
            if count[a] == 1 {
                inner.insert(a.clone(), b.clone());
            }
        }
        FinMap { inner }
    }

    /// `f ∘ self`, read as: `x ↦ f(self(x))` wherever both are defined.
    pub fn compose_fn<V: Clone>(functional: &FinMap<A, B>, f: &FinMap<B, V>) -> FinMap<A, V> {
        FinMap::from_pairs(functional.iter().filter_map(|(a, b)| f.get(b).map(|v| (a.clone(), v.clone()))))
    }
}

/// Renaming sequence; a smaller index means a higher priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenSeq<A, B> {
    items: Vec<(A, B)>,
}

impl<A: Hash + Eq + Clone, B: Hash + Eq + Clone> RenSeq<A, B> {
    pub fn new(items: impl IntoIterator<Item = (A, B)>) -> Self {
        RenSeq { items: items.into_iter().collect() }
    }

    pub fn items(&self) -> &[(A, B)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `A ◁ₗ self`: pairs whose source satisfies `keep`, squashed.
    pub fn dresl(&self, keep: impl Fn(&A) -> bool) -> Self {
        RenSeq { items: self.items.iter().filter(|(a, _)| keep(a)).cloned().collect() }
    }

    /// Keeps each pair that has the least index among pairs with its target.
    pub fn drop_dup(&self) -> Self {
        let mut seen: FxHashSet<&B> = FxHashSet::with_capacity_and_hasher(self.items.len(), FxBuildHasher);
        let mut out = Vec::with_capacity(self.items.len());
        for (a, b) in &self.items {
            if seen.insert(b) {
                out.push((a.clone(), b.clone()));
            }
        }
        RenSeq { items: out }
    }

    pub fn ran(&self) -> Rel<A, B> {
        Rel::from_pairs(self.items.iter().cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_prefers_right() {
        let f = FinMap::from_pairs([("a", 1), ("b", 2)]);
        let g = FinMap::from_pairs([("b", 3)]);
        let h = f.override_with(&g);
        assert_eq!(h.get(&"a"), Some(&1));
        assert_eq!(h.get(&"b"), Some(&3));
    }

    #[test]
    fn merge_excl_drops_shared_keys() {
        let f = FinMap::from_pairs([("e1", "P1"), ("e2", "P2")]);
        let g = FinMap::from_pairs([("e3", "P3"), ("e2", "P4")]);
        let h = f.merge_excl(&g);
        assert_eq!(h.len(), 2);
        assert_eq!(h.get(&"e1"), Some(&"P1"));
        assert_eq!(h.get(&"e3"), Some(&"P3"));
    }

    #[test]
    fn mk_functional_removes_ambiguous_sources() {
        let r = Rel::from_pairs([("e1", "e2"), ("e1", "e3"), ("e2", "e3")]);
        let f = r.mk_functional();
        assert_eq!(f.len(), 1);
        assert_eq!(f.get(&"e2"), Some(&"e3"));
    }

    #[test]
    fn dresl_and_drop_dup_keep_priority() {
        let s = RenSeq::new([("e1", "e"), ("e2", "e"), ("e3", "ea"), ("e4", "eb")]);
        let r = s.dresl(|a| ["e1", "e2", "e4"].contains(a));
        assert_eq!(r.items(), &[("e1", "e"), ("e2", "e"), ("e4", "eb")]);
        assert_eq!(r.drop_dup().items(), &[("e1", "e"), ("e4", "eb")]);
    }
}
