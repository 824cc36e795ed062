//! Random forest over the scalar orientation feature.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use super::{PostureError, PostureLabel, NUM_POSTURES};
use crate::rng::{derive_seed, seeded};
use crate::weights::{FormatError, NamedArray, WeightFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 10,
            max_depth: 4,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `u <= threshold` go left.
    Split {
        threshold: f32,
        left: usize,
        right: usize,
    },
    Leaf {
        hist: [u32; NUM_POSTURES],
    },
}

/// Nodes stored in pre-order; the root is `nodes[0]` and children always
/// follow their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

fn argmax_lowest<T: PartialOrd + Copy>(counts: &[T]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl DecisionTree {
    pub fn predict(&self, u: f64) -> PostureLabel {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    threshold,
                    left,
                    right,
                } => i = if u <= f64::from(*threshold) { *left } else { *right },
                Node::Leaf { hist } => {
                    return PostureLabel::from_code(argmax_lowest(hist)).expect("4 classes")
                }
            }
        }
    }

    /// Internal nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
}

/// Resample of `0..n` with replacement used to fit tree `tree`.
pub fn bootstrap_indices(seed: u64, tree: usize, n: usize) -> Vec<usize> {
    let mut rng = seeded(derive_seed(seed, &[tree as u64]), 0);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn gini(counts: &[usize; NUM_POSTURES], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Split {
    threshold: f32,
    left_len: usize,
}

/// Best Gini split of `samples` (sorted by `u`). Candidates are midpoints
/// between consecutive distinct values, rounded to the f32 stored in the
/// node; ties go to the lowest threshold.
fn best_split(samples: &[(f64, usize)]) -> Option<Split> {
    let n = samples.len();
    let mut prefix = vec![[0usize; NUM_POSTURES]; n + 1];
    for (i, &(_, c)) in samples.iter().enumerate() {
        prefix[i + 1] = prefix[i];
        prefix[i + 1][c] += 1;
    }
    let total = prefix[n];
    let parent = gini(&total, n);
    let mut best: Option<(f64, Split)> = None;
    for i in 0..n - 1 {
        let (a, b) = (samples[i].0, samples[i + 1].0);
        if a == b {
            continue;
        }
        let threshold = (0.5 * (a + b)) as f32;
        let t = f64::from(threshold);
        let nl = samples.partition_point(|s| s.0 <= t);
        if nl == 0 || nl == n {
            continue;
        }
        let left = prefix[nl];
        let right: [usize; NUM_POSTURES] = std::array::from_fn(|c| total[c] - left[c]);
        let weighted = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
        let gain = parent - weighted;
        if best.as_ref().is_none_or(|(g, _)| gain > *g) {
            best = Some((gain, Split { threshold, left_len: nl }));
        }
    }
    best.filter(|(g, _)| *g > 1e-12).map(|(_, s)| s)
}

fn grow(nodes: &mut Vec<Node>, samples: &[(f64, usize)], depth: usize, max_depth: usize) -> usize {
    let mut hist = [0u32; NUM_POSTURES];
    for &(_, c) in samples {
        hist[c] += 1;
    }
    let pure = hist.iter().filter(|&&h| h > 0).count() <= 1;
    let id = nodes.len();
    nodes.push(Node::Leaf { hist });
    if pure || depth >= max_depth || samples.len() < 2 {
        return id;
    }
    if let Some(split) = best_split(samples) {
        let (l, r) = samples.split_at(split.left_len);
        let left = grow(nodes, l, depth + 1, max_depth);
        let right = grow(nodes, r, depth + 1, max_depth);
        nodes[id] = Node::Split {
            threshold: split.threshold,
            left,
            right,
        };
    }
    id
}

fn fit_tree(data: &[(f64, PostureLabel)], indices: &[usize], max_depth: usize) -> DecisionTree {
    let mut samples: Vec<(f64, usize)> = indices.iter().map(|&i| (data[i].0, data[i].1.code())).collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut nodes = Vec::new();
    grow(&mut nodes, &samples, 0, max_depth);
    DecisionTree { nodes }
}

/// Fits `n_trees` trees, each on its own bootstrap resample of `data`.
/// Determinism is with respect to the order of `data`.
pub fn train_forest(
    data: &[(f64, PostureLabel)],
    config: &ForestConfig,
) -> Result<RandomForest, PostureError> {
    if data.is_empty() {
        return Err(PostureError::EmptyDataset);
    }
    if config.n_trees == 0 {
        return Err(PostureError::Config("n_trees must be >= 1".into()));
    }
    if let Some(&(u, _)) = data.iter().find(|(u, _)| !u.is_finite()) {
        return Err(PostureError::NonFinite(u));
    }
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(data, &bootstrap_indices(config.seed, t, data.len()), config.max_depth))
        .collect();
    Ok(RandomForest {
        trees,
        config: *config,
    })
}

/// Plurality vote over trees; ties go to the lowest class code.
pub fn classify_posture(forest: &RandomForest, u: f64) -> PostureLabel {
    let mut votes = [0usize; NUM_POSTURES];
    for tree in &forest.trees {
        votes[tree.predict(u).code()] += 1;
    }
    PostureLabel::from_code(argmax_lowest(&votes)).expect("4 classes")
}

fn seed_limbs(seed: u64) -> [f64; 4] {
    std::array::from_fn(|i| ((seed >> (16 * i)) & 0xffff) as f64)
}

fn exact_u64(v: f32, what: &str) -> Result<u64, FormatError> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(FormatError::Malformed(format!("{what}: expected a non-negative integer, got {v}")))
    }
}

impl RandomForest {
    pub fn classify(&self, u: f64) -> PostureLabel {
        classify_posture(self, u)
    }

    /// Arrays `forest.meta` = [n_trees, max_depth, seed as four 16-bit
    /// limbs] and, per tree `k`, `forest.tree{k}.threshold|left|right` (one
    /// entry per node, children -1 at leaves) and `forest.tree{k}.hist`
    /// `[nodes, 4]` (zero rows at splits).
    pub fn to_weight_file(&self) -> WeightFile {
        let mut file = WeightFile::new();
        let mut meta = vec![self.config.n_trees as f64, self.config.max_depth as f64];
        meta.extend(seed_limbs(self.config.seed));
        file.push(NamedArray::new("forest.meta", &[meta.len()], &meta));
        for (k, tree) in self.trees.iter().enumerate() {
            let n = tree.nodes.len();
            let (mut thr, mut left, mut right, mut hist) =
                (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(4 * n));
            for node in &tree.nodes {
                match node {
                    Node::Split {
                        threshold,
                        left: l,
                        right: r,
                    } => {
                        thr.push(f64::from(*threshold));
                        left.push(*l as f64);
                        right.push(*r as f64);
                        hist.extend([0.0; NUM_POSTURES]);
                    }
                    Node::Leaf { hist: h } => {
                        thr.push(0.0);
                        left.push(-1.0);
                        right.push(-1.0);
                        hist.extend(h.map(f64::from));
                    }
                }
            }
            let p = format!("forest.tree{k}");
            file.push(NamedArray::new(format!("{p}.threshold"), &[n], &thr));
            file.push(NamedArray::new(format!("{p}.left"), &[n], &left));
            file.push(NamedArray::new(format!("{p}.right"), &[n], &right));
            file.push(NamedArray::new(format!("{p}.hist"), &[n, NUM_POSTURES], &hist));
        }
        file
    }

    pub fn from_weight_file(file: &WeightFile) -> Result<Self, FormatError> {
        let meta = file.get("forest.meta")?;
        if meta.data.len() != 6 {
            return Err(FormatError::Malformed("forest.meta must hold 6 values".into()));
        }
        let n_trees = exact_u64(meta.data[0], "n_trees")? as usize;
        let max_depth = exact_u64(meta.data[1], "max_depth")? as usize;
        let mut seed = 0u64;
        for i in 0..4 {
            let limb = exact_u64(meta.data[2 + i], "seed limb")?;
            if limb > 0xffff {
                return Err(FormatError::Malformed(format!("seed limb {limb} exceeds 16 bits")));
            }
            seed |= limb << (16 * i);
        }
        if n_trees == 0 {
            return Err(FormatError::Malformed("forest has no trees".into()));
        }
        let mut trees = Vec::with_capacity(n_trees);
        for k in 0..n_trees {
            let p = format!("forest.tree{k}");
            let thr = file.get(&format!("{p}.threshold"))?;
            let left = file.get(&format!("{p}.left"))?;
            let right = file.get(&format!("{p}.right"))?;
            let hist = file.get(&format!("{p}.hist"))?;
            let n = thr.data.len();
            if n == 0
                || left.data.len() != n
                || right.data.len() != n
                || hist.dims != [n as u32, NUM_POSTURES as u32]
            {
                return Err(FormatError::Malformed(format!("{p}: inconsistent node arrays")));
            }
            let mut nodes = Vec::with_capacity(n);
            for i in 0..n {
                let (l, r) = (left.data[i], right.data[i]);
                if l == -1.0 && r == -1.0 {
                    let row = &hist.data[i * NUM_POSTURES..(i + 1) * NUM_POSTURES];
                    let mut h = [0u32; NUM_POSTURES];
                    for (dst, &v) in h.iter_mut().zip(row) {
                        *dst = exact_u64(v, "histogram count")? as u32;
                    }
                    nodes.push(Node::Leaf { hist: h });
                } else {
                    let (l, r) = (exact_u64(l, "child")? as usize, exact_u64(r, "child")? as usize);
                    // Pre-order storage rules out cycles.
                    if l <= i || r <= i || l >= n || r >= n {
                        return Err(FormatError::Malformed(format!("{p}: bad children at node {i}")));
                    }
                    nodes.push(Node::Split {
                        threshold: thr.data[i],
                        left: l,
                        right: r,
                    });
                }
            }
            trees.push(DecisionTree { nodes });
        }
        Ok(Self {
            trees,
            config: ForestConfig {
                n_trees,
                max_depth,
                seed,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        self.to_weight_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::from_weight_file(&WeightFile::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Gaussian;
    use proptest::prelude::*;

    fn clusters(per_class: usize, sigma: f64, seed: u64) -> Vec<(f64, PostureLabel)> {
        let means = [-0.9, 0.3, 0.7, 0.95];
        let mut g = Gaussian::new(seeded(seed, 0));
        let mut out = Vec::new();
        for i in 0..per_class * 4 {
            let p = PostureLabel::ALL[i % 4];
            out.push((means[p.code()] + sigma * g.sample(), p));
        }
        out
    }

    #[test]
    fn single_class_gives_single_leaves() {
        let data: Vec<_> = (0..20).map(|i| (i as f64 / 20.0, PostureLabel::Sitting)).collect();
        let f = train_forest(&data, &ForestConfig::default()).unwrap();
        assert_eq!(f.trees.len(), 10);
        for t in &f.trees {
            assert_eq!(t.nodes.len(), 1);
            assert_eq!(t.predict(-5.0), PostureLabel::Sitting);
        }
    }

    #[test]
    fn separable_clusters_fit_perfectly() {
        let data = clusters(50, 0.02, 1);
        let f = train_forest(&data, &ForestConfig::default()).unwrap();
        for t in &f.trees {
            assert!(t.depth() <= 4);
        }
        assert!(data.iter().all(|&(u, p)| f.classify(u) == p));
        let held_out = clusters(50, 0.02, 2);
        assert!(held_out.iter().all(|&(u, p)| f.classify(u) == p));
    }

    /// Exhaustive search over midpoints of the resampled data.
    fn brute_force_threshold(samples: &[(f64, PostureLabel)]) -> f64 {
        let mut values: Vec<f64> = samples.iter().map(|s| s.0).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let impurity = |part: Vec<&(f64, PostureLabel)>| {
            let n = part.len() as f64;
            let mut c = [0.0; 4];
            for s in &part {
                c[s.1.code()] += 1.0;
            }
            n * (1.0 - c.iter().map(|x: &f64| (x / n).powi(2)).sum::<f64>())
        };
        let mut best = (f64::INFINITY, f64::NAN);
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let cost = impurity(samples.iter().filter(|s| s.0 <= t).collect())
                + impurity(samples.iter().filter(|s| s.0 > t).collect());
            if cost < best.0 - 1e-12 {
                best = (cost, t);
            }
        }
        best.1
    }

    #[test]
    fn depth_one_split_matches_exhaustive_search() {
        for seed in 0..20 {
            let mut g = Gaussian::new(seeded(seed, 5));
            let data: Vec<_> = (0..40)
                .map(|i| {
                    let p = if i % 2 == 0 { PostureLabel::Sitting } else { PostureLabel::Standing };
                    (0.6 + 0.3 * (i % 2) as f64 + 0.15 * g.sample(), p)
                })
                .collect();
            let cfg = ForestConfig {
                n_trees: 1,
                max_depth: 1,
                seed,
            };
            let f = train_forest(&data, &cfg).unwrap();
            let resampled: Vec<_> = bootstrap_indices(seed, 0, data.len()).iter().map(|&i| data[i]).collect();
            let expected = brute_force_threshold(&resampled);
            match &f.trees[0].nodes[0] {
                Node::Split { threshold, .. } => assert_eq!(*threshold, expected as f32, "seed {seed}"),
                Node::Leaf { .. } => panic!("expected a split"),
            }
        }
    }

    #[test]
    fn extrapolation_and_ties() {
        let tree = DecisionTree {
            nodes: vec![
                Node::Split {
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { hist: [0, 2, 2, 0] },
                Node::Leaf { hist: [0, 0, 0, 1] },
            ],
        };
        assert_eq!(tree.predict(-100.0), PostureLabel::Sitting);
        assert_eq!(tree.predict(0.5), PostureLabel::Sitting);
        assert_eq!(tree.predict(0.51), PostureLabel::Walking);
        let cfg = ForestConfig::default();
        let single = RandomForest {
            trees: vec![tree.clone()],
            config: cfg,
        };
        let many = RandomForest {
            trees: vec![tree; 5],
            config: cfg,
        };
        for u in [-1.0, 0.2, 0.9] {
            assert_eq!(single.classify(u), many.classify(u));
        }
        // One vote each for two classes: lowest code wins.
        let split = RandomForest {
            trees: vec![
                DecisionTree { nodes: vec![Node::Leaf { hist: [0, 0, 0, 1] }] },
                DecisionTree { nodes: vec![Node::Leaf { hist: [0, 0, 1, 0] }] },
            ],
            config: cfg,
        };
        assert_eq!(split.classify(0.0), PostureLabel::Standing);
    }

    #[test]
    fn errors() {
        assert!(matches!(train_forest(&[], &ForestConfig::default()), Err(PostureError::EmptyDataset)));
        let bad = [(f64::NAN, PostureLabel::Lying)];
        assert!(matches!(train_forest(&bad, &ForestConfig::default()), Err(PostureError::NonFinite(_))));
        let cfg = ForestConfig {
            n_trees: 0,
            ..ForestConfig::default()
        };
        assert!(train_forest(&clusters(2, 0.1, 0), &cfg).is_err());
    }

    #[test]
    fn persistence_round_trip_and_corruption() {
        let cfg = ForestConfig {
            seed: 0xdead_beef_1234_5678,
            ..ForestConfig::default()
        };
        let f = train_forest(&clusters(30, 0.05, 3), &cfg).unwrap();
        let bytes = f.to_weight_file().to_bytes().unwrap();
        let back = RandomForest::from_weight_file(&WeightFile::from_bytes(&bytes).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_weight_file().to_bytes().unwrap(), bytes);

        let mut file = f.to_weight_file();
        file.arrays.retain(|a| a.name != "forest.tree3.hist");
        assert!(matches!(RandomForest::from_weight_file(&file), Err(FormatError::MissingArray(_))));

        let mut file = f.to_weight_file();
        let left = file.arrays.iter_mut().find(|a| a.name == "forest.tree0.left").unwrap();
        if left.data.len() > 1 {
            left.data[0] = 0.0; // self-loop
            assert!(matches!(RandomForest::from_weight_file(&file), Err(FormatError::Malformed(_))));
        }
    }

    proptest! {
        #[test]
        fn deterministic_and_duplication_invariant(seed in 0u64..1000, u in -1.2f64..1.2) {
            let data = clusters(10, 0.2, seed);
            let cfg = ForestConfig { seed, ..ForestConfig::default() };
            let a = train_forest(&data, &cfg).unwrap();
            let b = train_forest(&data, &cfg).unwrap();
            prop_assert_eq!(&a, &b);
            let mut tripled = a.clone();
            tripled.trees = a.trees.iter().flat_map(|t| std::iter::repeat_n(t.clone(), 3)).collect();
            prop_assert_eq!(a.classify(u), tripled.classify(u));
        }
    }
}
