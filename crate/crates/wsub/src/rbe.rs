//! Bags (multisets) and regular bag expressions.
//!
//! A bag over symbols `A` maps each symbol to a count. A regular bag
//! expression denotes a set of bags: `Empty` denotes the empty bag, a symbol
//! denotes the singleton bag, `Or` is union, `Seq` is pairwise bag union of
//! the two denotations, and `Star` is the closure of `Seq` over the operand.
//! Membership is decided by a backtracking search over bag partitions,
//! memoized on (expression node, residual bag).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

/// A finite multiset. Counts are always ≥ 1; inserting zero is a no-op.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bag<A: Ord>(BTreeMap<A, usize>);

impl<A: Ord + Clone> Bag<A> {
    pub fn new() -> Self {
        Bag(BTreeMap::new())
    }

    pub fn insert(&mut self, symbol: A, count: usize) {
        if count > 0 {
            *self.0.entry(symbol).or_insert(0) += count;
        }
    }

    pub fn count(&self, symbol: &A) -> usize {
        self.0.get(symbol).copied().unwrap_or(0)
    }

    /// Total number of symbol occurrences.
    pub fn size(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, usize)> {
        self.0.iter().map(|(a, c)| (a, *c))
    }

    /// Per-symbol sum of two bags.
    pub fn union(&self, other: &Bag<A>) -> Bag<A> {
        let mut out = self.clone();
        for (a, c) in other.iter() {
            out.insert(a.clone(), c);
        }
        out
    }

    /// All ways to split this bag into an ordered pair of bags whose union is
    /// this bag. A bag with counts c1..ck yields ∏(ci+1) splits.
    pub fn splits(&self) -> Vec<(Bag<A>, Bag<A>)> {
        let entries: Vec<(&A, usize)> = self.iter().collect();
        let mut out = Vec::new();
        let mut left = Bag::new();
        let mut right = Bag::new();
        fn go<A: Ord + Clone>(
            entries: &[(&A, usize)],
            i: usize,
            left: &mut Bag<A>,
            right: &mut Bag<A>,
            out: &mut Vec<(Bag<A>, Bag<A>)>,
        ) {
            if i == entries.len() {
                out.push((left.clone(), right.clone()));
                return;
            }
            let (a, c) = entries[i];
            for k in 0..=c {
                if k > 0 {
                    left.insert(a.clone(), k);
                }
                if c - k > 0 {
                    right.insert(a.clone(), c - k);
                }
                go(entries, i + 1, left, right, out);
                if k > 0 {
                    left.0.remove(a);
                }
                if c - k > 0 {
                    right.0.remove(a);
                }
            }
        }
        go(&entries, 0, &mut left, &mut right, &mut out);
        out
    }
}

impl<A: Ord + Clone> FromIterator<A> for Bag<A> {
    fn from_iter<T: IntoIterator<Item = A>>(iter: T) -> Self {
        let mut bag = Bag::new();
        for a in iter {
            bag.insert(a, 1);
        }
        bag
    }
}

impl<A: Ord + fmt::Display> fmt::Display for Bag<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{|")?;
        for (i, (a, c)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}:{c}")?;
        }
        write!(f, "|}}")
    }
}

/// Regular bag expression over symbols `A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rbe<A> {
    Empty,
    Symbol(A),
    Or(Box<Rbe<A>>, Box<Rbe<A>>),
    Seq(Box<Rbe<A>>, Box<Rbe<A>>),
    Star(Box<Rbe<A>>),
}

impl<A> Rbe<A> {
    pub fn symbol(a: A) -> Self {
        Rbe::Symbol(a)
    }

    pub fn or(a: Rbe<A>, b: Rbe<A>) -> Self {
        Rbe::Or(Box::new(a), Box::new(b))
    }

    pub fn seq(a: Rbe<A>, b: Rbe<A>) -> Self {
        Rbe::Seq(Box::new(a), Box::new(b))
    }

    pub fn star(a: Rbe<A>) -> Self {
        Rbe::Star(Box::new(a))
    }

    /// Right-fold a sequence; an empty list is `Empty`.
    pub fn seq_all(items: impl IntoIterator<Item = Rbe<A>>) -> Self {
        let mut items: Vec<_> = items.into_iter().collect();
        match items.pop() {
            None => Rbe::Empty,
            Some(last) => items
                .into_iter()
                .rev()
                .fold(last, |acc, e| Rbe::seq(e, acc)),
        }
    }
}

/// Arena form used by the matcher so memo keys are stable node indices.
enum Node<'a, A> {
    Empty,
    Symbol(&'a A),
    Or(usize, usize),
    Seq(usize, usize),
    Star(usize),
}

fn compile<'a, A>(e: &'a Rbe<A>, nodes: &mut Vec<Node<'a, A>>) -> usize {
    let node = match e {
        Rbe::Empty => Node::Empty,
        Rbe::Symbol(a) => Node::Symbol(a),
        Rbe::Or(l, r) => {
            let l = compile(l, nodes);
            let r = compile(r, nodes);
            Node::Or(l, r)
        }
        Rbe::Seq(l, r) => {
            let l = compile(l, nodes);
            let r = compile(r, nodes);
            Node::Seq(l, r)
        }
        Rbe::Star(inner) => {
            let inner = compile(inner, nodes);
            Node::Star(inner)
        }
    };
    nodes.push(node);
    nodes.len() - 1
}

/// Decide whether `bag` belongs to the denotation of `expr`.
pub fn matches<A: Ord + Clone + Hash>(bag: &Bag<A>, expr: &Rbe<A>) -> bool {
    let mut nodes = Vec::new();
    let root = compile(expr, &mut nodes);
    let mut memo: HashMap<(usize, Bag<A>), bool> = HashMap::new();
    matches_at(&nodes, root, bag, &mut memo)
}

fn matches_at<A: Ord + Clone + Hash>(
    nodes: &[Node<'_, A>],
    idx: usize,
    bag: &Bag<A>,
    memo: &mut HashMap<(usize, Bag<A>), bool>,
) -> bool {
    if let Some(&hit) = memo.get(&(idx, bag.clone())) {
        return hit;
    }
    let result = match &nodes[idx] {
        Node::Empty => bag.is_empty(),
        Node::Symbol(a) => bag.size() == 1 && bag.count(a) == 1,
        Node::Or(l, r) => matches_at(nodes, *l, bag, memo) || matches_at(nodes, *r, bag, memo),
        Node::Seq(l, r) => bag
            .splits()
            .into_iter()
            .any(|(b1, b2)| matches_at(nodes, *l, &b1, memo) && matches_at(nodes, *r, &b2, memo)),
        Node::Star(inner) => {
            if bag.is_empty() {
                true
            } else {
                // Only non-empty head splits, so the residual shrinks. The
                // head may be restricted to splits containing the least
                // symbol: some iteration block holds it.
                let least = bag
                    .iter()
                    .next()
                    .map(|(a, _)| a.clone())
                    .expect("non-empty");
                bag.splits().into_iter().any(|(b1, b2)| {
                    b1.count(&least) > 0
                        && matches_at(nodes, *inner, &b1, memo)
                        && matches_at(nodes, idx, &b2, memo)
                })
            }
        }
    };
    memo.insert((idx, bag.clone()), result);
    result
}

/// Interval cardinality with an optional upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cardinality {
    pub min: usize,
    pub max: Option<usize>,
}

impl Cardinality {
    pub const ONE: Cardinality = Cardinality {
        min: 1,
        max: Some(1),
    };
    pub const OPTIONAL: Cardinality = Cardinality {
        min: 0,
        max: Some(1),
    };
    pub const STAR: Cardinality = Cardinality { min: 0, max: None };
    pub const PLUS: Cardinality = Cardinality { min: 1, max: None };

    pub fn range(min: usize, max: Option<usize>) -> Result<Self, CardinalityError> {
        if let Some(max) = max {
            if max < min {
                return Err(CardinalityError { min, max });
            }
        }
        Ok(Cardinality { min, max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("invalid cardinality {{{min},{max}}}: max below min")]
pub struct CardinalityError {
    pub min: usize,
    pub max: usize,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.min, self.max) {
            (1, Some(1)) => Ok(()),
            (0, Some(1)) => write!(f, "?"),
            (0, None) => write!(f, "*"),
            (1, None) => write!(f, "+"),
            (m, Some(n)) => write!(f, "{{{m},{n}}}"),
            (m, None) => write!(f, "{{{m},}}"),
        }
    }
}

/// Any algebra with the four regular-expression constructors. Cardinality
/// desugaring is defined once over this and reused by expression kinds that
/// share the operators (bag expressions, triple expressions).
pub trait Kleene: Sized + Clone {
    fn empty() -> Self;
    fn alt(a: Self, b: Self) -> Self;
    fn then(a: Self, b: Self) -> Self;
    fn many(a: Self) -> Self;
}

impl<A: Clone> Kleene for Rbe<A> {
    fn empty() -> Self {
        Rbe::Empty
    }

    fn alt(a: Self, b: Self) -> Self {
        Rbe::or(a, b)
    }

    fn then(a: Self, b: Self) -> Self {
        Rbe::seq(a, b)
    }

    fn many(a: Self) -> Self {
        Rbe::star(a)
    }
}

/// Expand `e{min,max}` into the base operators: `min` required copies,
/// followed by a star for an unbounded tail or `max − min` optional copies.
pub fn desugar_cardinality<T: Kleene>(e: T, card: Cardinality) -> T {
    let mut parts: Vec<T> = Vec::new();
    for _ in 0..card.min {
        parts.push(e.clone());
    }
    match card.max {
        None => parts.push(T::many(e)),
        Some(max) => {
            for _ in card.min..max {
                parts.push(T::alt(e.clone(), T::empty()));
            }
        }
    }
    match parts.pop() {
        None => T::empty(),
        Some(last) => parts.into_iter().rev().fold(last, |acc, p| T::then(p, acc)),
    }
}
