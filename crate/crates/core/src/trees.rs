//! Colored ternary trees recording the normal-form iteration.
//!
//! A tree of generation `J` has `J` nonterminal nodes, each with ordered
//! children (left, middle, right). Black terminals carry perturbation factors
//! and red terminals carry periodic coefficients. A generation is grown from
//! the previous one by expanding one terminal at a time: a black terminal
//! takes one of the five first-generation child patterns, a red terminal
//! sprouts three red children.
//!
//! Trees are stored as pre-order tag arrays; parent and child links are
//! recovered by [`ColoredTree::layout`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::resonance::approx;

/// Largest generation materialized by [`generation`].
pub const J_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Color {
    Black,
    Red,
}

impl Color {
    fn letter(self) -> char {
        match self {
            Self::Black => 'b',
            Self::Red => 'r',
        }
    }
}

/// Pre-order entry: color and whether the node has children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum NodeTag {
    BlackLeaf,
    RedLeaf,
    BlackInner,
    RedInner,
}

impl NodeTag {
    pub fn color(self) -> Color {
        match self {
            Self::BlackLeaf | Self::BlackInner => Color::Black,
            Self::RedLeaf | Self::RedInner => Color::Red,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::BlackLeaf | Self::RedLeaf)
    }

    fn leaf(color: Color) -> Self {
        match color {
            Color::Black => Self::BlackLeaf,
            Color::Red => Self::RedLeaf,
        }
    }
}

/// Child colors of the five first-generation trees, in canonical order.
pub const FIRST_GENERATION_PATTERNS: [[Color; 3]; 5] = {
    use Color::{Black as B, Red as R};
    [[B, B, B], [R, R, B], [R, B, R], [B, B, R], [B, R, B]]
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredTree {
    tags: Vec<NodeTag>,
}

/// Parent/child links of a tree, indexed by pre-order position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Option<[usize; 3]>>,
}

impl ColoredTree {
    /// The generation-0 tree: a single black terminal.
    pub fn seed() -> Self {
        Self {
            tags: vec![NodeTag::BlackLeaf],
        }
    }

    /// Checks the pre-order structure, a black root, and all-red children under red nodes.
    pub fn from_tags(tags: Vec<NodeTag>) -> Result<Self> {
        let tree = Self { tags };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        match self.tags.first() {
            None => return Err(Error::MalformedTree("empty tree".into())),
            Some(t) if t.color() == Color::Red => {
                return Err(Error::MalformedTree("root must be black".into()))
            }
            _ => {}
        }
        let end = self.check_subtree(0)?;
        if end != self.tags.len() {
            return Err(Error::MalformedTree(format!(
                "{} trailing nodes after the root subtree",
                self.tags.len() - end
            )));
        }
        Ok(())
    }

    fn check_subtree(&self, at: usize) -> Result<usize> {
        let tag = *self
            .tags
            .get(at)
            .ok_or_else(|| Error::MalformedTree(format!("node {at} is missing children")))?;
        if tag.is_terminal() {
            return Ok(at + 1);
        }
        let mut next = at + 1;
        for _ in 0..3 {
            if tag == NodeTag::RedInner && self.tags.get(next).map(|t| t.color()) == Some(Color::Black) {
                return Err(Error::MalformedTree(format!("red node {at} has a black child")));
            }
            next = self.check_subtree(next)?;
        }
        Ok(next)
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    /// `|T|`.
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Number of nonterminal nodes.
    pub fn generation(&self) -> usize {
        self.tags.iter().filter(|t| !t.is_terminal()).count()
    }

    pub fn terminal_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_terminal()).count()
    }

    /// `(b_k, r_k)`: black and red terminal counts.
    pub fn terminal_colors(&self) -> (u64, u64) {
        let mut b = 0;
        let mut r = 0;
        for t in &self.tags {
            match t {
                NodeTag::BlackLeaf => b += 1,
                NodeTag::RedLeaf => r += 1,
                _ => {}
            }
        }
        (b, r)
    }

    pub fn layout(&self) -> Layout {
        let n = self.tags.len();
        let mut parent = vec![None; n];
        let mut children = vec![None; n];
        fn walk(tags: &[NodeTag], at: usize, parent: &mut [Option<usize>], children: &mut [Option<[usize; 3]>]) -> usize {
            if tags[at].is_terminal() {
                return at + 1;
            }
            let mut kids = [0; 3];
            let mut next = at + 1;
            for kid in &mut kids {
                *kid = next;
                parent[next] = Some(at);
                next = walk(tags, next, parent, children);
            }
            children[at] = Some(kids);
            next
        }
        walk(&self.tags, 0, &mut parent, &mut children);
        Layout { parent, children }
    }

    /// Children of every black terminal replaced by each first-generation
    /// pattern, and of every red terminal by three red nodes. Terminals are
    /// taken left to right, patterns in canonical order.
    pub fn expand(&self) -> Result<Vec<ColoredTree>> {
        self.validate()?;
        let (b, r) = self.terminal_colors();
        let mut out = Vec::with_capacity((5 * b + r) as usize);
        for (p, tag) in self.tags.iter().enumerate() {
            let (inner, patterns): (NodeTag, &[[Color; 3]]) = match tag {
                NodeTag::BlackLeaf => (NodeTag::BlackInner, &FIRST_GENERATION_PATTERNS),
                NodeTag::RedLeaf => (NodeTag::RedInner, &[[Color::Red; 3]]),
                _ => continue,
            };
            for pattern in patterns {
                let mut tags = Vec::with_capacity(self.tags.len() + 3);
                tags.extend_from_slice(&self.tags[..p]);
                tags.push(inner);
                tags.extend(pattern.iter().map(|&c| NodeTag::leaf(c)));
                tags.extend_from_slice(&self.tags[p + 1..]);
                out.push(ColoredTree { tags });
            }
        }
        Ok(out)
    }

    /// `+1`, or `-1` for a middle child.
    pub fn psgn(&self, layout: &Layout, node: usize) -> i8 {
        match layout.parent[node] {
            Some(p) if layout.children[p].expect("parent has children")[1] == node => -1,
            _ => 1,
        }
    }

    /// Strict ancestors, other than the root, that are middle children.
    pub fn middle_predecessors(&self, layout: &Layout, node: usize) -> usize {
        let mut count = 0;
        let mut cur = layout.parent[node];
        while let Some(a) = cur {
            if layout.parent[a].is_some() && self.psgn(layout, a) == -1 {
                count += 1;
            }
            cur = layout.parent[a];
        }
        count
    }

    pub fn fsgn(&self, layout: &Layout, node: usize) -> i8 {
        let p = self.psgn(layout, node);
        match (p, self.middle_predecessors(layout, node) % 2) {
            (1, 0) => 1,
            (1, _) => -1,
            (_, 0) => -1,
            _ => 1,
        }
    }
}

impl fmt::Display for ColoredTree {
    /// Bracket notation, e.g. `[b[r][r][b]]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(tags: &[NodeTag], at: usize, f: &mut fmt::Formatter<'_>) -> std::result::Result<usize, fmt::Error> {
            write!(f, "[{}", tags[at].color().letter())?;
            let mut next = at + 1;
            if !tags[at].is_terminal() {
                for _ in 0..3 {
                    next = write_node(tags, next, f)?;
                }
            }
            write!(f, "]")?;
            Ok(next)
        }
        write_node(&self.tags, 0, f).map(|_| ())
    }
}

impl FromStr for ColoredTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut tags = Vec::new();
        fn parse(chars: &[char], at: usize, tags: &mut Vec<NodeTag>) -> Result<usize> {
            let bad = |msg: &str, i: usize| Error::MalformedTree(format!("{msg} at character {i}"));
            if chars.get(at) != Some(&'[') {
                return Err(bad("expected '['", at));
            }
            let color = match chars.get(at + 1) {
                Some('b') => Color::Black,
                Some('r') => Color::Red,
                _ => return Err(bad("expected color 'b' or 'r'", at + 1)),
            };
            let slot = tags.len();
            tags.push(NodeTag::leaf(color));
            let mut next = at + 2;
            let mut kids = 0;
            while chars.get(next) == Some(&'[') {
                next = parse(chars, next, tags)?;
                kids += 1;
            }
            if chars.get(next) != Some(&']') {
                return Err(bad("expected ']'", next));
            }
            match kids {
                0 => {}
                3 => {
                    tags[slot] = match color {
                        Color::Black => NodeTag::BlackInner,
                        Color::Red => NodeTag::RedInner,
                    }
                }
                k => return Err(bad(&format!("node has {k} children"), at)),
            }
            Ok(next + 1)
        }
        let end = parse(&chars, 0, &mut tags)?;
        if end != chars.len() {
            return Err(Error::MalformedTree(format!("trailing input at character {end}")));
        }
        ColoredTree::from_tags(tags)
    }
}

/// The five generation-1 trees.
pub fn first_generation() -> Vec<ColoredTree> {
    ColoredTree::seed().expand().expect("seed tree is well formed")
}

fn expand_all(parents: &[ColoredTree]) -> Vec<ColoredTree> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    if workers <= 1 || parents.len() < 256 {
        return parents
            .iter()
            .flat_map(|t| t.expand().expect("enumerated trees are well formed"))
            .collect();
    }
    let chunk = parents.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = parents
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .flat_map(|t| t.expand().expect("enumerated trees are well formed"))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("expansion worker panicked"))
            .collect()
    })
}

/// All trees of generation `j`, in canonical order.
pub fn generation(j: usize) -> Result<Vec<ColoredTree>> {
    generation_with_limit(j, J_MAX)
}

pub fn generation_with_limit(j: usize, j_max: usize) -> Result<Vec<ColoredTree>> {
    if j == 0 || j > j_max {
        return Err(Error::GenerationOutOfRange { requested: j, max: j_max });
    }
    let mut trees = first_generation();
    for _ in 1..j {
        trees = expand_all(&trees);
    }
    Ok(trees)
}

/// Totals for one generation with the multiset of `(b_k, r_k)` as a histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationCensus {
    pub j: usize,
    pub n: BigUint,
    pub b: BigUint,
    pub r: BigUint,
    pub per_tree: BTreeMap<(u64, u64), BigUint>,
}

impl GenerationCensus {
    fn from_histogram(j: usize, per_tree: BTreeMap<(u64, u64), BigUint>) -> Self {
        let mut n = BigUint::zero();
        let mut b = BigUint::zero();
        let mut r = BigUint::zero();
        for (&(bk, rk), c) in &per_tree {
            n += c;
            b += c * bk;
            r += c * rk;
        }
        Self { j, n, b, r, per_tree }
    }

    fn generation_one() -> Self {
        let mut hist = BTreeMap::new();
        for tree in first_generation() {
            *hist.entry(tree.terminal_colors()).or_insert_with(BigUint::zero) += 1u32;
        }
        Self::from_histogram(1, hist)
    }

    /// Next generation from the per-tree counts alone.
    pub fn next(&self) -> Self {
        let mut hist: BTreeMap<(u64, u64), BigUint> = BTreeMap::new();
        for (&(b, r), c) in &self.per_tree {
            let mut add = |key: (u64, u64), mult: u64| {
                if mult > 0 {
                    *hist.entry(key).or_insert_with(BigUint::zero) += c * mult;
                }
            };
            // Patterns (b,b,b), then (r,r,b)/(r,b,r), then (b,b,r)/(b,r,b).
            add((b + 2, r), b);
            add((b, r + 2), 2 * b + r);
            add((b + 1, r + 1), 2 * b);
        }
        Self::from_histogram(self.j + 1, hist)
    }

    pub fn from_trees(j: usize, trees: &[ColoredTree]) -> Self {
        let mut hist = BTreeMap::new();
        for t in trees {
            *hist.entry(t.terminal_colors()).or_insert_with(BigUint::zero) += 1u32;
        }
        Self::from_histogram(j, hist)
    }

    pub fn max_black(&self) -> u64 {
        self.per_tree.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_red(&self) -> u64 {
        self.per_tree.keys().map(|k| k.1).max().unwrap_or(0)
    }
}

/// Census of generation `j ≥ 1` without materializing trees.
pub fn census_recursive(j: usize) -> Result<GenerationCensus> {
    census_series(j).map(|mut v| v.pop().expect("series is nonempty"))
}

/// Censuses of generations `1..=j`.
pub fn census_series(j: usize) -> Result<Vec<GenerationCensus>> {
    if j == 0 {
        return Err(Error::GenerationOutOfRange { requested: 0, max: usize::MAX });
    }
    let mut out = vec![GenerationCensus::generation_one()];
    while out.len() < j {
        let next = out.last().expect("nonempty").next();
        out.push(next);
    }
    Ok(out)
}

pub fn double_factorial_odd(j: usize) -> BigUint {
    (1..=j).fold(BigUint::one(), |acc, k| acc * (2 * k as u64 - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub j: usize,
    pub n: BigUint,
    /// `5^J (2J-1)!!`, exact.
    pub factorial_bound: BigUint,
    /// `10^J Γ(J+½)/√π` in floating point.
    pub gamma_bound: f64,
    pub ok: bool,
}

pub fn bound_check(j: usize) -> Result<BoundCheck> {
    let census = census_recursive(j)?;
    let factorial_bound = BigUint::from(5u32).pow(j as u32) * double_factorial_odd(j);
    let log_gamma = j as f64 * 10f64.ln() + statrs::function::gamma::ln_gamma(j as f64 + 0.5)
        - 0.5 * std::f64::consts::PI.ln();
    let gamma_bound = log_gamma.exp();
    let n_f = census.n.to_f64().unwrap_or(f64::INFINITY);
    let ok = census.n <= factorial_bound && n_f <= gamma_bound * (1.0 + 1e-12);
    Ok(BoundCheck {
        j,
        n: census.n,
        factorial_bound,
        gamma_bound,
        ok,
    })
}

/// Frequencies per node (pre-order) and the root threshold `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexAssignment {
    pub values: Vec<Option<i64>>,
    pub threshold: i64,
}

impl IndexAssignment {
    pub fn complete(values: Vec<i64>, threshold: i64) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `μ₁ = 2(n_r - n_{r₁})(n_r - n_{r₃})`.
    pub mu1: i64,
}

/// `2(n_a - n_{a₁})(n_a - n_{a₃})` for a nonterminal node.
pub fn node_phase(layout: &Layout, values: &[i64], node: usize) -> Option<i64> {
    layout.children[node].map(|[c1, _, c3]| 2 * (values[node] - values[c1]) * (values[node] - values[c3]))
}

pub fn validate_index_assignment(tree: &ColoredTree, a: &IndexAssignment) -> Result<AssignmentReport> {
    if a.values.len() != tree.len() {
        return Err(Error::IncompleteAssignment(a.values.len().min(tree.len())));
    }
    let values: Vec<i64> = a
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(Error::IncompleteAssignment(i)))
        .collect::<Result<_>>()?;
    let layout = tree.layout();
    let mut violations = Vec::new();
    for (node, tag) in tree.tags().iter().enumerate() {
        let Some([c1, c2, c3]) = layout.children[node] else { continue };
        let (n, n1, n2, n3) = (values[node], values[c1], values[c2], values[c3]);
        let sum = n1 - n2 + n3;
        match tag.color() {
            Color::Black => {
                if !approx(n, sum) {
                    violations.push(format!("node {node}: {n} is not within 1 of {sum}"));
                }
                if approx(n, n1) || approx(n, n3) {
                    violations.push(format!("node {node}: {n} is within 1 of an outer child ({n1}, {n3})"));
                }
            }
            Color::Red => {
                if n != sum {
                    violations.push(format!("node {node}: {n} differs from {sum}"));
                }
                if n == n1 || n == n3 {
                    violations.push(format!("node {node}: {n} equals an outer child ({n1}, {n3})"));
                }
            }
        }
    }
    let mu1 = node_phase(&layout, &values, 0).unwrap_or(0);
    if mu1.abs() <= a.threshold {
        violations.push(format!("root phase |μ₁| = {} does not exceed {}", mu1.abs(), a.threshold));
    }
    Ok(AssignmentReport {
        valid: violations.is_empty(),
        violations,
        mu1,
    })
}

/// Every valid assignment with all frequencies in `[-band, band]`; generations 1 and 2 only.
pub fn search_index_assignments(tree: &ColoredTree, band: i64, threshold: i64) -> Result<Vec<IndexAssignment>> {
    let j = tree.generation();
    if j == 0 || j > 2 {
        return Err(Error::GenerationOutOfRange { requested: j, max: 2 });
    }
    let layout = tree.layout();
    let leaves: Vec<usize> = (0..tree.len()).filter(|&i| tree.tags()[i].is_terminal()).collect();
    let width = (2 * band + 1) as usize;
    let total = width.pow(leaves.len() as u32);
    let mut found = Vec::new();
    let mut values = vec![0i64; tree.len()];
    for code in 0..total {
        let mut c = code;
        for &leaf in &leaves {
            values[leaf] = (c % width) as i64 - band;
            c /= width;
        }
        fill_inner(tree, &layout, &mut values, band, threshold, &mut found);
    }
    Ok(found)
}

/// Assigns inner nodes bottom-up by enumerating each admissible value.
fn fill_inner(
    tree: &ColoredTree,
    layout: &Layout,
    values: &mut Vec<i64>,
    band: i64,
    threshold: i64,
    found: &mut Vec<IndexAssignment>,
) {
    // Reverse pre-order visits children before parents.
    let inner: Vec<usize> = (0..tree.len()).rev().filter(|&i| !tree.tags()[i].is_terminal()).collect();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        tree: &ColoredTree,
        layout: &Layout,
        inner: &[usize],
        k: usize,
        values: &mut Vec<i64>,
        band: i64,
        threshold: i64,
        found: &mut Vec<IndexAssignment>,
    ) {
        if k == inner.len() {
            let a = IndexAssignment::complete(values.clone(), threshold);
            if validate_index_assignment(tree, &a).map(|r| r.valid).unwrap_or(false) {
                found.push(a);
            }
            return;
        }
        let node = inner[k];
        let [c1, c2, c3] = layout.children[node].expect("inner node");
        let sum = values[c1] - values[c2] + values[c3];
        let choices: &[i64] = match tree.tags()[node].color() {
            Color::Black => &[-1, 0, 1],
            Color::Red => &[0],
        };
        for d in choices {
            let v = sum + d;
            if v.abs() <= band {
                values[node] = v;
                rec(tree, layout, inner, k + 1, values, band, threshold, found);
            }
        }
    }
    rec(tree, layout, &inner, 0, values, band, threshold, found);
}

/// Phases `μ_j` with running sums `μ̃_J` and products `μ̂_J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseLedger {
    pub mu: Vec<i64>,
    pub tilde: Vec<i128>,
    pub hat: Vec<BigInt>,
}

impl PhaseLedger {
    /// Recovers `μ_j = μ̃_j - μ̃_{j-1}`.
    pub fn recover_mu(&self) -> Vec<i64> {
        let mut prev = 0i128;
        self.tilde
            .iter()
            .map(|&t| {
                let m = t - prev;
                prev = t;
                m as i64
            })
            .collect()
    }
}

pub fn phase_ledger(mu: &[i64]) -> Result<PhaseLedger> {
    if mu.is_empty() {
        return Err(Error::EmptyPhaseList);
    }
    let mut tilde = Vec::with_capacity(mu.len());
    let mut hat = Vec::with_capacity(mu.len());
    let mut sum = 0i128;
    let mut prod = BigInt::one();
    for &m in mu {
        sum += m as i128;
        prod *= BigInt::from(sum);
        tilde.push(sum);
        hat.push(prod.clone());
    }
    Ok(PhaseLedger {
        mu: mu.to_vec(),
        tilde,
        hat,
    })
}

/// Membership of the ledger's phases in the set `C_J`; needs `μ̃_{J+1}`.
pub fn in_c_j(ledger: &PhaseLedger, j: usize) -> Result<bool> {
    if j == 0 || j + 1 > ledger.tilde.len() {
        return Err(Error::GenerationOutOfRange {
            requested: j,
            max: ledger.tilde.len().saturating_sub(1),
        });
    }
    let next = (ledger.tilde[j] as f64).abs();
    let scale = ((2 * j + 3) as f64).powi(3);
    let by_tilde = scale * (ledger.tilde[j - 1] as f64).abs().powf(0.99);
    let by_first = scale * (ledger.mu[0] as f64).abs().powf(0.99);
    Ok(next <= by_tilde || next <= by_first)
}

pub fn write_census_csv<W: Write>(out: W, rows: &[GenerationCensus]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["J", "N", "b", "r"])?;
    for c in rows {
        w.write_record([c.j.to_string(), c.n.to_string(), c.b.to_string(), c.r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds_csv<W: Write>(out: W, rows: &[BoundCheck]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["J", "N", "bound", "gamma_bound", "ok"])?;
    for c in rows {
        w.write_record([
            c.j.to_string(),
            c.n.to_string(),
            c.factorial_bound.to_string(),
            format!("{:.6e}", c.gamma_bound),
            c.ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One bracket string per line.
pub fn write_tree_dump<W: Write>(mut out: W, trees: &[ColoredTree]) -> Result<()> {
    for t in trees {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn first_generation_matches_figures() {
        let gen1 = first_generation();
        let dumps: Vec<String> = gen1.iter().map(|t| t.to_string()).collect();
        assert_eq!(
            dumps,
            ["[b[b][b][b]]", "[b[r][r][b]]", "[b[r][b][r]]", "[b[b][b][r]]", "[b[b][r][b]]"]
        );
        let mut counts: Vec<_> = gen1.iter().map(|t| t.terminal_colors()).collect();
        counts.sort();
        assert_eq!(counts, [(1, 2), (1, 2), (2, 1), (2, 1), (3, 0)]);
        let census = census_recursive(1).unwrap();
        assert_eq!((census.n, census.b, census.r), (big(5), big(9), big(6)));
    }

    #[test]
    fn expand_examples() {
        let gen1 = first_generation();
        assert_eq!(gen1[0].expand().unwrap().len(), 15);
        assert_eq!(gen1[1].expand().unwrap().len(), 7);
        let total: usize = gen1.iter().map(|t| t.expand().unwrap().len()).sum();
        assert_eq!(total, 51);
        let red = "[b[r][r][b]]".parse::<ColoredTree>().unwrap().expand().unwrap();
        assert_eq!(red[0].to_string(), "[b[r[r][r][r]][r][b]]");
        assert_eq!(red[2].to_string(), "[b[r][r][b[b][b][b]]]");
    }

    #[test]
    fn generation_sizes() {
        assert_eq!(generation(1).unwrap().len(), 5);
        assert_eq!(generation(2).unwrap().len(), 51);
        assert_eq!(generation(3).unwrap().len(), 811);
        assert!(matches!(generation(0), Err(Error::GenerationOutOfRange { .. })));
        assert!(matches!(generation(6), Err(Error::GenerationOutOfRange { .. })));
    }

    #[test]
    fn census_examples() {
        let c2 = census_recursive(2).unwrap();
        assert_eq!((c2.n.clone(), c2.b.clone(), c2.r.clone()), (big(51), big(139), big(116)));
        assert_eq!(c2.b.clone() + c2.r.clone(), big(255));
        let c3 = census_recursive(3).unwrap();
        assert_eq!(c3.n, big(811));
        assert_eq!(c3.b.clone() + c3.r.clone(), big(7 * 811));
        assert_eq!((c3.b, c3.r), (big(3023), big(2654)));
        assert_eq!(census_recursive(10).unwrap().n, "101807805373347".parse::<BigUint>().unwrap());
    }

    #[test]
    fn published_recursions_hold() {
        let series = census_series(12).unwrap();
        for pair in series.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            assert_eq!(next.n, big(5) * &cur.b + &cur.r);
            let mut black = BigUint::zero();
            let mut red = BigUint::zero();
            for (&(b, r), c) in &cur.per_tree {
                black += c * ((5 * b + 4) * b + r * b);
                red += c * (r * (5 * b + r));
            }
            red += big(6) * &cur.b + big(2) * &cur.r;
            assert_eq!(next.b, black);
            assert_eq!(next.r, red);
        }
    }

    #[test]
    fn enumeration_matches_recursion() {
        let mut trees = first_generation();
        for j in 1..=4 {
            if j > 1 {
                trees = expand_all(&trees);
            }
            let enumerated = GenerationCensus::from_trees(j, &trees);
            assert_eq!(enumerated, census_recursive(j).unwrap());
            for t in &trees {
                let (b, r) = t.terminal_colors();
                assert_eq!(t.len(), 3 * j + 1);
                assert_eq!(t.terminal_count(), 2 * j + 1);
                assert_eq!((b + r) as usize, 2 * j + 1);
                assert!(b >= 1);
                assert_eq!(t.generation(), j);
            }
            assert_eq!(enumerated.max_black(), 2 * j as u64 + 1);
            assert_eq!(enumerated.max_red(), 2 * j as u64);
        }
    }

    #[test]
    fn bound_examples() {
        let b1 = bound_check(1).unwrap();
        assert_eq!((b1.n.clone(), b1.factorial_bound.clone()), (big(5), big(5)));
        assert!(b1.ok);
        assert_eq!(bound_check(2).unwrap().factorial_bound, big(75));
        assert_eq!(bound_check(3).unwrap().factorial_bound, big(1875));
        for j in 1..=10 {
            let b = bound_check(j).unwrap();
            assert!(b.ok, "J = {j}");
            let exact = b.factorial_bound.to_f64().unwrap();
            assert!((b.gamma_bound - exact).abs() / exact < 1e-10);
        }
    }

    #[test]
    fn sign_examples() {
        let t: ColoredTree = "[b[b][b[b][b][b]][b]]".parse().unwrap();
        let lay = t.layout();
        assert_eq!((t.psgn(&lay, 0), t.fsgn(&lay, 0)), (1, 1));
        let middle = lay.children[0].unwrap()[1];
        assert_eq!((t.psgn(&lay, middle), t.fsgn(&lay, middle)), (-1, -1));
        let [left, mid2, _] = lay.children[middle].unwrap();
        assert_eq!(t.middle_predecessors(&lay, left), 1);
        assert_eq!((t.psgn(&lay, left), t.fsgn(&lay, left)), (1, -1));
        assert_eq!((t.psgn(&lay, mid2), t.fsgn(&lay, mid2)), (-1, 1));
    }

    #[test]
    fn sign_identity_on_generation_three() {
        for t in generation(3).unwrap() {
            let lay = t.layout();
            for a in 0..t.len() {
                let parity = if t.middle_predecessors(&lay, a) % 2 == 0 { 1 } else { -1 };
                assert_eq!(t.fsgn(&lay, a), t.psgn(&lay, a) * parity);
            }
        }
    }

    #[test]
    fn index_assignment_examples() {
        let t = &first_generation()[0];
        let ok = validate_index_assignment(t, &IndexAssignment::complete(vec![0, 2, 0, -2], 4)).unwrap();
        assert!(ok.valid, "{:?}", ok.violations);
        assert_eq!(ok.mu1, -8);
        let tight = validate_index_assignment(t, &IndexAssignment::complete(vec![0, 2, 0, -2], 16)).unwrap();
        assert!(!tight.valid);

        let red: ColoredTree = "[b[r[r][r][r]][r][b]]".parse().unwrap();
        // root 0, red node 5 with children (5, 1, 1): n_a = n_{a1} is forbidden
        let a = IndexAssignment::complete(vec![0, 5, 5, 1, 1, 3, -2], 0);
        let report = validate_index_assignment(&red, &a).unwrap();
        assert!(!report.valid);
        assert!(report.violations.iter().any(|v| v.contains("equals an outer child")));

        let mut partial = IndexAssignment::complete(vec![0, 2, 0, -2], 4);
        partial.values[2] = None;
        assert!(matches!(validate_index_assignment(t, &partial), Err(Error::IncompleteAssignment(2))));
    }

    #[test]
    fn assignment_search() {
        let t = &first_generation()[0];
        let found = search_index_assignments(t, 2, 4).unwrap();
        assert!(found.contains(&IndexAssignment::complete(vec![0, 2, 0, -2], 4)));
        assert!(found.iter().all(|a| validate_index_assignment(t, a).unwrap().valid));
        let gen2 = &generation(2).unwrap()[0];
        let found = search_index_assignments(gen2, 2, 0).unwrap();
        assert!(!found.is_empty());
        assert!(search_index_assignments(&generation(3).unwrap()[0], 1, 0).is_err());
    }

    #[test]
    fn phase_ledger_examples() {
        let l = phase_ledger(&[8]).unwrap();
        assert_eq!((l.tilde[0], l.hat[0].clone()), (8, BigInt::from(8)));
        let l = phase_ledger(&[8, -6]).unwrap();
        assert_eq!((l.tilde[1], l.hat[1].clone()), (2, BigInt::from(16)));
        assert!(in_c_j(&l, 1).unwrap());
        assert!(!in_c_j(&phase_ledger(&[1, 10_000]).unwrap(), 1).unwrap());
        assert!(in_c_j(&l, 2).is_err());
        assert!(matches!(phase_ledger(&[]), Err(Error::EmptyPhaseList)));
    }

    #[test]
    fn malformed_trees_are_rejected() {
        for bad in ["", "[b[b][b]]", "[r[r][r][r]]", "[b[r[b][r][r]][b][b]]", "[x]", "[b]]"] {
            assert!(bad.parse::<ColoredTree>().is_err(), "{bad}");
        }
        assert!(ColoredTree::from_tags(vec![NodeTag::BlackInner, NodeTag::BlackLeaf]).is_err());
    }

    #[test]
    fn census_csv() {
        let mut buf = Vec::new();
        write_census_csv(&mut buf, &census_series(2).unwrap()).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "J,N,b,r\n1,5,9,6\n2,51,139,116\n");
    }

    proptest! {
        #[test]
        fn phase_ledger_round_trip(mu in prop::collection::vec(-1_000_000i64..1_000_000, 1..12)) {
            let l = phase_ledger(&mu).unwrap();
            prop_assert_eq!(l.recover_mu(), mu);
            for j in 1..l.hat.len() {
                prop_assert_eq!(l.hat[j].clone(), l.hat[j - 1].clone() * BigInt::from(l.tilde[j]));
            }
        }

        #[test]
        fn bracket_round_trip(j in 1usize..=3, pick in any::<prop::sample::Index>()) {
            let trees = generation(j).unwrap();
            let t = &trees[pick.index(trees.len())];
            prop_assert_eq!(&t.to_string().parse::<ColoredTree>().unwrap(), t);
        }
    }
}
