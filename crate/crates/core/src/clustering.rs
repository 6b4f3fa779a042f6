//! Agglomerative clustering of a distance matrix, threshold cuts and
//! dendrogram export.
//!
//! Leaves carry cluster ids `0..n`; the cluster formed by merge `k` gets id
//! `n + k`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Complete,
    Single,
    /// Unweighted mean over all cross pairs.
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Complete, Linkage::Single, Linkage::Average];

    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Complete => "complete",
            Linkage::Single => "single",
            Linkage::Average => "average",
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    /// Leaves under the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub linkage: Linkage,
    pub merges: Vec<Merge>,
}

pub fn agglomerate(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    d.validate()?;
    let n = d.len();
    if n < 2 {
        return Err(Error::Length { needed: 2, got: n });
    }
    let total = 2 * n - 1;
    let mut dist = vec![vec![f64::NAN; total]; total];
    for (row, src) in dist.iter_mut().zip(&d.d) {
        row[..n].copy_from_slice(src);
    }
    let mut size = vec![0usize; total];
    size[..n].fill(1);
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        // Ids in `active` ascend, so the first strict minimum is the
        // lexicographically smallest pair.
        let mut best = (active[0], active[1]);
        let mut best_d = f64::INFINITY;
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                if dist[i][j] < best_d {
                    best_d = dist[i][j];
                    best = (i, j);
                }
            }
        }
        let (a, b) = best;
        let new = n + merges.len();
        size[new] = size[a] + size[b];
        active.retain(|&k| k != a && k != b);
        for &k in &active {
            let v = match linkage {
                Linkage::Complete => dist[a][k].max(dist[b][k]),
                Linkage::Single => dist[a][k].min(dist[b][k]),
                Linkage::Average => (size[a] as f64 * dist[a][k] + size[b] as f64 * dist[b][k]) / size[new] as f64,
            };
            dist[new][k] = v;
            dist[k][new] = v;
        }
        active.push(new);
        merges.push(Merge {
            a,
            b,
            height: best_d,
            size: size[new],
        });
    }
    Ok(Dendrogram {
        leaves: d.codes.clone(),
        linkage,
        merges,
    })
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.height)
    }

    /// Leaf indices under cluster `id`, ascending.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let m = &self.merges[c - n];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }

    fn height_of(&self, id: usize) -> f64 {
        let n = self.n_leaves();
        if id < n {
            0.0
        } else {
            self.merges[id - n].height
        }
    }

    fn root_id(&self) -> usize {
        2 * self.n_leaves() - 2
    }

    /// Children of `id` ordered by their smallest leaf code.
    fn ordered_children(&self, id: usize) -> [usize; 2] {
        let m = &self.merges[id - self.n_leaves()];
        let key = |c: usize| {
            self.members(c)
                .into_iter()
                .map(|i| self.leaves[i].as_str())
                .min()
                .unwrap_or_default()
                .to_string()
        };
        if key(m.b) < key(m.a) {
            [m.b, m.a]
        } else {
            [m.a, m.b]
        }
    }

    /// Leaves in drawing order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.n_leaves();
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![self.root_id()];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let [l, r] = self.ordered_children(c);
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn to_newick(&self) -> String {
        self.newick_tree().to_string()
    }

    pub fn newick_tree(&self) -> NewickTree {
        fn build(d: &Dendrogram, id: usize, parent_height: Option<f64>) -> NewickTree {
            let length = parent_height.map(|h| h - d.height_of(id));
            if id < d.n_leaves() {
                NewickTree {
                    label: Some(d.leaves[id].clone()),
                    length,
                    children: Vec::new(),
                }
            } else {
                let h = d.height_of(id);
                let children = d.ordered_children(id).iter().map(|&c| build(d, c, Some(h))).collect();
                NewickTree {
                    label: None,
                    length,
                    children,
                }
            }
        }
        build(self, self.root_id(), None)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per merge with the x positions used to draw it.
    pub fn merge_coordinates_csv(&self) -> String {
        let n = self.n_leaves();
        let mut x = vec![0.0; 2 * n - 1];
        for (pos, leaf) in self.leaf_order().into_iter().enumerate() {
            x[leaf] = pos as f64;
        }
        let mut out = String::from("merge,a,b,height,size,x_a,x_b,x,height_a,height_b\n");
        for (k, m) in self.merges.iter().enumerate() {
            x[n + k] = (x[m.a] + x[m.b]) / 2.0;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                n + k,
                m.a,
                m.b,
                m.height,
                m.size,
                x[m.a],
                x[m.b],
                x[n + k],
                self.height_of(m.a),
                self.height_of(m.b)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCut {
    pub threshold: f64,
    /// Leaf codes per cluster; clusters ordered by their first leaf index.
    pub clusters: Vec<Vec<String>>,
    pub n_nontrivial: usize,
}

impl ClusterCut {
    /// `code,cluster_id` rows in leaf order of `dend`.
    pub fn to_csv(&self, dend: &Dendrogram) -> String {
        let mut out = String::from("code,cluster_id\n");
        for code in &dend.leaves {
            let id = self
                .clusters
                .iter()
                .position(|c| c.contains(code))
                .unwrap_or(usize::MAX);
            let _ = writeln!(out, "{code},{id}");
        }
        out
    }

    pub fn cluster_of(&self, code: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.iter().any(|x| x == code))
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Keeps merges strictly below `threshold`; what stays connected forms a
/// cluster.
pub fn cut_threshold(dend: &Dendrogram, threshold: f64) -> ClusterCut {
    let n = dend.n_leaves();
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for (k, m) in dend.merges.iter().enumerate() {
        if m.height < threshold {
            let new = n + k;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = new;
            parent[rb] = new;
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(leaf),
            None => groups.push((root, vec![leaf])),
        }
    }
    let clusters: Vec<Vec<String>> = groups
        .into_iter()
        .map(|(_, g)| g.into_iter().map(|i| dend.leaves[i].clone()).collect())
        .collect();
    let n_nontrivial = clusters.iter().filter(|c| c.len() >= 2).count();
    ClusterCut {
        threshold,
        clusters,
        n_nontrivial,
    }
}

/// Candidate thresholds: half the lowest merge height, then midpoints
/// between consecutive distinct heights. Returns the cut with the most
/// clusters of two or more leaves, preferring the lower threshold on ties.
pub fn max_cluster_cut(dend: &Dendrogram) -> ClusterCut {
    let mut heights: Vec<f64> = dend.merges.iter().map(|m| m.height).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let mut candidates = Vec::with_capacity(heights.len());
    if let Some(&h0) = heights.first() {
        candidates.push(h0 / 2.0);
    }
    candidates.extend(heights.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    let mut best: Option<ClusterCut> = None;
    for t in candidates {
        let cut = cut_threshold(dend, t);
        if best.as_ref().is_none_or(|b| cut.n_nontrivial > b.n_nontrivial) {
            best = Some(cut);
        }
    }
    best.unwrap_or_else(|| cut_threshold(dend, 0.0))
}

/// A parsed or generated Newick tree. Printing a parsed tree reproduces
/// the input when it was written by this module.
#[derive(Debug, Clone, PartialEq)]
pub struct NewickTree {
    pub label: Option<String>,
    pub length: Option<f64>,
    pub children: Vec<NewickTree>,
}

fn needs_quotes(label: &str) -> bool {
    label.is_empty() || label.chars().any(|c| c.is_whitespace() || "()[]',:;".contains(c))
}

impl fmt::Display for NewickTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(t: &NewickTree, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if !t.children.is_empty() {
                f.write_str("(")?;
                for (i, c) in t.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_node(c, f)?;
                }
                f.write_str(")")?;
            }
            if let Some(label) = &t.label {
                if needs_quotes(label) {
                    write!(f, "'{}'", label.replace('\'', "''"))?;
                } else {
                    f.write_str(label)?;
                }
            }
            if let Some(len) = t.length {
                write!(f, ":{len}")?;
            }
            Ok(())
        }
        write_node(self, f)?;
        f.write_str(";")
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            line: 1,
            message: format!("{msg} at byte {}", self.pos),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn node(&mut self) -> Result<NewickTree> {
        let mut children = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.node()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        }
        let label = self.label()?;
        let length = if self.peek() == Some(b':') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|c| !b",);".contains(&c)) {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("bad utf-8"))?;
            Some(text.parse::<f64>().map_err(|_| self.err("bad branch length"))?)
        } else {
            None
        };
        if children.is_empty() && label.is_none() {
            return Err(self.err("empty leaf"));
        }
        Ok(NewickTree {
            label,
            length,
            children,
        })
    }

    fn label(&mut self) -> Result<Option<String>> {
        if self.peek() == Some(b'\'') {
            self.pos += 1;
            let mut out = Vec::new();
            loop {
                match self.peek() {
                    None => return Err(self.err("unterminated quoted label")),
                    Some(b'\'') if self.s.get(self.pos + 1) == Some(&b'\'') => {
                        out.push(b'\'');
                        self.pos += 2;
                    }
                    Some(b'\'') => {
                        self.pos += 1;
                        break;
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                }
            }
            return String::from_utf8(out).map(Some).map_err(|_| self.err("bad utf-8"));
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| !b"(),:;'".contains(&c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("bad utf-8"))?;
        Ok(Some(text.to_string()))
    }
}

impl NewickTree {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let mut p = Parser {
            s: trimmed.as_bytes(),
            pos: 0,
        };
        let tree = p.node()?;
        if p.peek() != Some(b';') || p.pos + 1 != trimmed.len() {
            return Err(p.err("expected final ';'"));
        }
        Ok(tree)
    }

    pub fn leaf_labels(&self) -> Vec<&str> {
        if self.children.is_empty() {
            return self.label.as_deref().into_iter().collect();
        }
        self.children.iter().flat_map(|c| c.leaf_labels()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use proptest::prelude::*;

    fn matrix(codes: &[&str], d: Vec<Vec<f64>>) -> DistanceMatrix {
        DistanceMatrix {
            codes: codes.iter().map(|s| s.to_string()).collect(),
            d,
        }
    }

    fn three_leaf() -> DistanceMatrix {
        matrix(
            &["a", "b", "c"],
            vec![vec![0.0, 1.0, 10.0], vec![1.0, 0.0, 10.0], vec![10.0, 10.0, 0.0]],
        )
    }

    fn chain() -> DistanceMatrix {
        matrix(
            &["a", "b", "c", "d"],
            vec![
                vec![0.0, 1.0, 3.0, 5.0],
                vec![1.0, 0.0, 1.5, 3.0],
                vec![3.0, 1.5, 0.0, 1.0],
                vec![5.0, 3.0, 1.0, 0.0],
            ],
        )
    }

    fn heights(d: &Dendrogram) -> Vec<f64> {
        d.merges.iter().map(|m| m.height).collect()
    }

    /// Points on a line plus jitter in a second coordinate, so the matrix
    /// is a metric.
    fn random_metric(s: &mut SeededStream, n: usize) -> DistanceMatrix {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (s.uniform(), s.uniform())).collect();
        let d = pts
            .iter()
            .map(|p| {
                pts.iter()
                    .map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        DistanceMatrix {
            codes: (0..n).map(|i| format!("L{i}")).collect(),
            d,
        }
    }

    fn mst_weights(d: &DistanceMatrix) -> Vec<f64> {
        let n = d.len();
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        best[0] = 0.0;
        let mut out = Vec::new();
        for step in 0..n {
            let v = (0..n)
                .filter(|&v| !in_tree[v])
                .min_by(|&x, &y| best[x].total_cmp(&best[y]))
                .unwrap();
            in_tree[v] = true;
            if step > 0 {
                out.push(best[v]);
            }
            for w in 0..n {
                if !in_tree[w] && d.d[v][w] < best[w] {
                    best[w] = d.d[v][w];
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn three_leaf_complete() {
        let d = agglomerate(&three_leaf(), Linkage::Complete).unwrap();
        assert_eq!((d.merges[0].a, d.merges[0].b, d.merges[0].height), (0, 1, 1.0));
        assert_eq!((d.merges[1].a, d.merges[1].b, d.merges[1].height), (2, 3, 10.0));
        assert_eq!(d.to_newick(), "((a:1,b:1):9,c:10);");
    }

    #[test]
    fn chain_single_vs_complete() {
        let single = agglomerate(&chain(), Linkage::Single).unwrap();
        assert_eq!(heights(&single), vec![1.0, 1.0, 1.5]);
        assert_eq!(cut_threshold(&single, 1.6).clusters.len(), 1);
        let complete = agglomerate(&chain(), Linkage::Complete).unwrap();
        assert_eq!(heights(&complete), vec![1.0, 1.0, 5.0]);
        let cut = cut_threshold(&complete, 3.0);
        assert_eq!(cut.clusters, vec![vec!["a", "b"], vec!["c", "d"]]);
        let average = agglomerate(&chain(), Linkage::Average).unwrap();
        assert_eq!(heights(&average), vec![1.0, 1.0, 3.125]);
    }

    #[test]
    fn ties_take_smallest_pair() {
        let m = matrix(
            &["a", "b", "c"],
            vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
        );
        let d = agglomerate(&m, Linkage::Complete).unwrap();
        assert_eq!((d.merges[0].a, d.merges[0].b), (0, 1));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = matrix(&["a", "b"], vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(agglomerate(&asym, Linkage::Single), Err(Error::Validation(_))));
        let neg = matrix(&["a", "b"], vec![vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(agglomerate(&neg, Linkage::Single).is_err());
        let one = matrix(&["a"], vec![vec![0.0]]);
        assert!(agglomerate(&one, Linkage::Single).is_err());
    }

    #[test]
    fn threshold_cuts() {
        let d = agglomerate(&three_leaf(), Linkage::Complete).unwrap();
        assert_eq!(cut_threshold(&d, 11.0).clusters.len(), 1);
        let low = cut_threshold(&d, 0.5);
        assert_eq!(low.clusters.len(), 3);
        assert_eq!(low.n_nontrivial, 0);
        let mid = cut_threshold(&d, 5.0);
        assert_eq!(mid.clusters, vec![vec!["a", "b"], vec!["c"]]);
        assert_eq!(mid.n_nontrivial, 1);
        assert_eq!(mid.to_csv(&d), "code,cluster_id\na,0\nb,0\nc,1\n");
    }

    #[test]
    fn max_cut_examples() {
        let d = agglomerate(&three_leaf(), Linkage::Complete).unwrap();
        let cut = max_cluster_cut(&d);
        assert_eq!(cut.threshold, 5.5);
        assert_eq!(cut.n_nontrivial, 1);

        let flat = matrix(
            &["a", "b", "c"],
            vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]],
        );
        let cut = max_cluster_cut(&agglomerate(&flat, Linkage::Complete).unwrap());
        assert_eq!(cut.n_nontrivial, 0);
        assert_eq!(cut.clusters.len(), 3);

        let cut = max_cluster_cut(&agglomerate(&chain(), Linkage::Complete).unwrap());
        assert_eq!(cut.n_nontrivial, 2);
        assert_eq!(cut.threshold, 3.0);
    }

    #[test]
    fn single_linkage_matches_mst() {
        let mut s = SeededStream::new(8);
        for _ in 0..100 {
            let n = 2 + s.below(7);
            let m = random_metric(&mut s, n);
            let d = agglomerate(&m, Linkage::Single).unwrap();
            let mut h = heights(&d);
            h.sort_by(f64::total_cmp);
            assert_eq!(h, mst_weights(&m));
        }
    }

    #[test]
    fn complete_cut_is_clique() {
        let mut s = SeededStream::new(9);
        for _ in 0..100 {
            let n = 2 + s.below(9);
            let m = random_metric(&mut s, n);
            let d = agglomerate(&m, Linkage::Complete).unwrap();
            let t = s.uniform() * 1.2;
            let cut = cut_threshold(&d, t);
            let total: usize = cut.clusters.iter().map(Vec::len).sum();
            assert_eq!(total, n);
            for c in &cut.clusters {
                let idx: Vec<usize> = c.iter().map(|x| m.codes.iter().position(|y| y == x).unwrap()).collect();
                for &i in &idx {
                    for &j in &idx {
                        assert!(i == j || m.d[i][j] < t);
                    }
                }
            }
        }
    }

    #[test]
    fn merge_coordinates() {
        let d = agglomerate(&three_leaf(), Linkage::Complete).unwrap();
        assert_eq!(d.leaf_order(), vec![0, 1, 2]);
        let csv = d.merge_coordinates_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "3,0,1,1,2,0,1,0.5,0,0");
        assert_eq!(lines[2], "4,2,3,10,3,2,0.5,1.25,0,1");
    }

    #[test]
    fn json_round_trip() {
        let d = agglomerate(&chain(), Linkage::Average).unwrap();
        let back: Dendrogram = serde_json::from_str(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn newick_two_leaves_and_quoting() {
        let m = matrix(&["B", "A"], vec![vec![0.0, 0.25], vec![0.25, 0.0]]);
        let d = agglomerate(&m, Linkage::Single).unwrap();
        assert_eq!(d.to_newick(), "(A:0.25,B:0.25);");
        let t = NewickTree::parse("('it''s a':1,b:2.5e-3)root;").unwrap();
        assert_eq!(t.leaf_labels(), vec!["it's a", "b"]);
        assert_eq!(t.to_string(), "('it''s a':1,b:0.0025)root;");
        assert!(NewickTree::parse("(a,b)").is_err());
        assert!(NewickTree::parse("(a,);").is_err());
        assert!(NewickTree::parse("(a:x,b);").is_err());
    }

    proptest! {
        #[test]
        fn newick_round_trips(seed in 0u64..500, n in 2usize..12) {
            let mut s = SeededStream::new(seed);
            let m = random_metric(&mut s, n);
            for linkage in Linkage::ALL {
                let text = agglomerate(&m, linkage).unwrap().to_newick();
                let again = NewickTree::parse(&text).unwrap().to_string();
                prop_assert_eq!(&again, &text);
            }
        }

        #[test]
        fn heights_monotone(seed in 0u64..500, n in 2usize..15) {
            let mut s = SeededStream::new(seed);
            let m = random_metric(&mut s, n);
            for linkage in Linkage::ALL {
                let d = agglomerate(&m, linkage).unwrap();
                for w in d.merges.windows(2) {
                    prop_assert!(w[1].height >= w[0].height * (1.0 - 1e-12));
                }
                prop_assert_eq!(d.members(2 * n - 2), (0..n).collect::<Vec<_>>());
            }
        }

        #[test]
        fn leaf_permutation_keeps_heights(seed in 0u64..500, n in 2usize..10) {
            let mut s = SeededStream::new(seed);
            let m = random_metric(&mut s, n);
            let mut perm: Vec<usize> = (0..n).collect();
            s.shuffle(&mut perm);
            let pm = DistanceMatrix {
                codes: perm.iter().map(|&i| m.codes[i].clone()).collect(),
                d: perm.iter().map(|&i| perm.iter().map(|&j| m.d[i][j]).collect()).collect(),
            };
            for linkage in [Linkage::Complete, Linkage::Single] {
                let mut a = heights(&agglomerate(&m, linkage).unwrap());
                let mut b = heights(&agglomerate(&pm, linkage).unwrap());
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
            }
            let mut a = heights(&agglomerate(&m, Linkage::Average).unwrap());
            let mut b = heights(&agglomerate(&pm, Linkage::Average).unwrap());
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
