//! Implicit-feedback interaction data: loading, splitting and BPR triple sampling.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Bidirectional mapping between raw string ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dense index of `raw`, assigning the next free one on first sight.
    pub fn encode(&mut self, raw: &str) -> u32 {
        if let Some(&idx) = self.index.get(raw) {
            return idx;
        }
        let idx = self.names.len() as u32;
        self.names.push(raw.to_owned());
        self.index.insert(raw.to_owned(), idx);
        idx
    }

    pub fn get(&self, raw: &str) -> Option<u32> {
        self.index.get(raw).copied()
    }

    pub fn decode(&self, idx: u32) -> Option<&str> {
        self.names.get(idx as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Identity map `"0".."n-1"`, used for generated data.
    pub fn numeric(n: usize) -> Self {
        let mut map = Self::new();
        for i in 0..n {
            map.encode(&i.to_string());
        }
        map
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    pub users: IdMap,
    pub items: IdMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Full,
    Train,
    Valid,
    Test,
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitRole::Full => "full",
            SplitRole::Train => "train",
            SplitRole::Valid => "valid",
            SplitRole::Test => "test",
        };
        f.write_str(s)
    }
}

/// A set of (user, item) interactions over a fixed id space.
///
/// Every split of one dataset shares the same `num_users`, `num_items` and
/// vocabulary, so indices are directly comparable across splits.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    num_users: usize,
    num_items: usize,
    pairs: Vec<(u32, u32)>,
    neighbors: Vec<Vec<u32>>,
    role: SplitRole,
    vocab: Arc<Vocab>,
}

impl InteractionDataset {
    /// Builds a dataset, dropping duplicate pairs (first occurrence wins).
    pub fn from_pairs(
        num_users: usize,
        num_items: usize,
        pairs: impl IntoIterator<Item = (u32, u32)>,
        role: SplitRole,
        vocab: Arc<Vocab>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (u, i) in pairs {
            if u as usize >= num_users || i as usize >= num_items {
                return Err(Error::invalid(format!(
                    "pair ({u}, {i}) outside {num_users} users x {num_items} items"
                )));
            }
            if seen.insert((u, i)) {
                kept.push((u, i));
            }
        }
        let mut neighbors = vec![Vec::new(); num_users];
        for &(u, i) in &kept {
            neighbors[u as usize].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            num_users,
            num_items,
            pairs: kept,
            neighbors,
            role,
            vocab,
        })
    }

    /// Dataset over a numeric id space (`"0"`, `"1"`, ...).
    pub fn from_indices(
        num_users: usize,
        num_items: usize,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        let vocab = Vocab {
            users: IdMap::numeric(num_users),
            items: IdMap::numeric(num_items),
        };
        Self::from_pairs(num_users, num_items, pairs, SplitRole::Full, Arc::new(vocab))
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Node count of the bipartite graph, users first.
    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Sorted item list of user `u`.
    pub fn items_of(&self, u: usize) -> &[u32] {
        &self.neighbors[u]
    }

    pub fn contains(&self, u: usize, i: u32) -> bool {
        self.neighbors[u].binary_search(&i).is_ok()
    }

    pub fn role(&self) -> SplitRole {
        self.role
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    /// Interaction count per item.
    pub fn item_degrees(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_items];
        for &(_, i) in &self.pairs {
            counts[i as usize] += 1;
        }
        counts
    }

    fn with_pairs(&self, pairs: Vec<(u32, u32)>, role: SplitRole) -> Self {
        Self::from_pairs(self.num_users, self.num_items, pairs, role, Arc::clone(&self.vocab))
            .expect("pairs drawn from a validated dataset")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairFormat {
    /// One `user item` pair per line, whitespace or TAB separated. Extra
    /// columns are ignored; `#` lines and a leading header are skipped.
    #[default]
    PairTsv,
    /// One `user item item ...` adjacency list per line. A user with no
    /// items on its line contributes nothing.
    AdjacencyList,
}

impl std::str::FromStr for PairFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pair" | "pairs" | "tsv" => Ok(PairFormat::PairTsv),
            "adjacency" | "adj" => Ok(PairFormat::AdjacencyList),
            other => Err(Error::invalid(format!(
                "unknown input format {other:?} (pair or adjacency)"
            ))),
        }
    }
}

fn is_header(tokens: &[&str]) -> bool {
    tokens.iter().any(|t| t.contains(':'))
        || tokens[0].eq_ignore_ascii_case("user")
        || tokens[0].eq_ignore_ascii_case("user_id")
        || tokens[0].eq_ignore_ascii_case("userid")
}

fn read_pairs(path: &Path, format: PairFormat, vocab: &mut Vocab, out: &mut Vec<(u32, u32)>) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if format == PairFormat::AdjacencyList {
            if tokens.len() > 1 {
                let u = vocab.users.encode(tokens[0]);
                out.extend(tokens[1..].iter().map(|t| (u, vocab.items.encode(t))));
            }
            continue;
        }
        if tokens.len() < 2 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno + 1,
                message: format!("expected `user item`, found {line:?}"),
            });
        }
        if std::mem::take(&mut first) && is_header(&tokens) {
            continue;
        }
        let u = vocab.users.encode(tokens[0]);
        let i = vocab.items.encode(tokens[1]);
        out.push((u, i));
    }
    Ok(())
}

/// Loads an interaction file, densely re-indexing raw ids in order of first
/// appearance and collapsing duplicate pairs.
pub fn load_interactions(path: impl AsRef<Path>, format: PairFormat) -> Result<InteractionDataset> {
    load_interactions_from(&[path.as_ref()], format)
}

/// Loads several files (e.g. a pre-split dump) into one dataset with a shared
/// id space.
pub fn load_interactions_from<P: AsRef<Path>>(paths: &[P], format: PairFormat) -> Result<InteractionDataset> {
    let mut vocab = Vocab::default();
    let mut pairs = Vec::new();
    for path in paths {
        read_pairs(path.as_ref(), format, &mut vocab, &mut pairs)?;
    }
    if pairs.is_empty() {
        let first = paths.first().map(|p| p.as_ref().to_owned()).unwrap_or_default();
        return Err(Error::EmptyInput(first));
    }
    let (nu, ni) = (vocab.users.len(), vocab.items.len());
    InteractionDataset::from_pairs(nu, ni, pairs, SplitRole::Full, Arc::new(vocab))
}

/// Train / validation / test partition sharing one id space.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: InteractionDataset,
    pub valid: InteractionDataset,
    pub test: InteractionDataset,
}

impl Splits {
    /// Writes `train.tsv`, `valid.tsv` and `test.tsv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_pairs(&self.train, dir.join("train.tsv"))?;
        write_pairs(&self.valid, dir.join("valid.tsv"))?;
        write_pairs(&self.test, dir.join("test.tsv"))
    }

    /// Reads a directory written by [`Splits::write_dir`]. The three files
    /// are indexed with one shared vocabulary (train first).
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut vocab = Vocab::default();
        let mut parts = Vec::with_capacity(3);
        for name in ["train.tsv", "valid.tsv", "test.tsv"] {
            let mut pairs = Vec::new();
            read_pairs(&dir.join(name), PairFormat::PairTsv, &mut vocab, &mut pairs)?;
            parts.push(pairs);
        }
        if parts[0].is_empty() {
            return Err(Error::EmptyInput(dir.join("train.tsv")));
        }
        let (nu, ni) = (vocab.users.len(), vocab.items.len());
        let vocab = Arc::new(vocab);
        let mut parts = parts.into_iter();
        let mut next = |role| InteractionDataset::from_pairs(nu, ni, parts.next().unwrap(), role, Arc::clone(&vocab));
        Ok(Self {
            train: next(SplitRole::Train)?,
            valid: next(SplitRole::Valid)?,
            test: next(SplitRole::Test)?,
        })
    }

    pub fn total_len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }
}

/// Writes `ds` as `user<TAB>item` lines using the raw ids.
pub fn write_pairs(ds: &InteractionDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let vocab = ds.vocab();
    for &(u, i) in ds.pairs() {
        let user = vocab.users.decode(u).expect("user in vocabulary");
        let item = vocab.items.decode(i).expect("item in vocabulary");
        writeln!(out, "{user}\t{item}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Number of a user's interactions that go to train: `ceil(frac * n)`.
fn train_quota(train_frac: f64, n: usize) -> usize {
    // guard against 0.7 * 10 = 7.000000000000001
    let q = (train_frac * n as f64 - 1e-9).ceil().max(0.0) as usize;
    q.min(n)
}

/// Splits per user: `ceil(train_frac * |N_u|)` items to train; everything
/// left over is pooled, shuffled, and cut so that validation holds
/// `valid_frac` of all interactions. The rest is test.
pub fn split_dataset(ds: &InteractionDataset, train_frac: f64, valid_frac: f64, seed: u64) -> Result<Splits> {
    if !(train_frac > 0.0 && valid_frac >= 0.0 && train_frac + valid_frac < 1.0) {
        return Err(Error::invalid(format!(
            "split fractions must satisfy 0 < train ({train_frac}) and train + valid ({valid_frac}) < 1"
        )));
    }
    let rng = &mut stream(seed, Stream::Split);
    let mut train = Vec::new();
    let mut pool = Vec::new();
    let mut sparse_users = 0usize;
    for u in 0..ds.num_users() {
        let mut items = ds.items_of(u).to_vec();
        if items.len() < 2 {
            if !items.is_empty() {
                sparse_users += 1;
            }
            train.extend(items.into_iter().map(|i| (u as u32, i)));
            continue;
        }
        items.shuffle(rng);
        let quota = train_quota(train_frac, items.len());
        train.extend(items[..quota].iter().map(|&i| (u as u32, i)));
        pool.extend(items[quota..].iter().map(|&i| (u as u32, i)));
    }
    if sparse_users > 0 {
        log::warn!("{sparse_users} users with fewer than 2 interactions kept entirely in train");
    }
    pool.shuffle(rng);
    let n_valid = ((valid_frac * ds.len() as f64).round() as usize).min(pool.len());
    let test = pool.split_off(n_valid);
    Ok(Splits {
        train: ds.with_pairs(train, SplitRole::Train),
        valid: ds.with_pairs(pool, SplitRole::Valid),
        test: ds.with_pairs(test, SplitRole::Test),
    })
}

/// A (user, positive item, negative item) training triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub user: u32,
    pub pos: u32,
    pub neg: u32,
}

#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub triples: Vec<Triple>,
    /// Positives dropped because no negative was found (user saw every item).
    pub skipped: usize,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

const MAX_REJECTIONS: usize = 1000;

/// Draws one negative for `user` uniformly from items outside its train set.
pub fn sample_negative(train: &InteractionDataset, user: usize, rng: &mut impl Rng) -> Option<u32> {
    let n = train.num_items() as u32;
    if train.items_of(user).len() >= n as usize {
        return None;
    }
    for _ in 0..MAX_REJECTIONS {
        let j = rng.gen_range(0..n);
        if !train.contains(user, j) {
            return Some(j);
        }
    }
    None
}

/// Samples `batch_size` positives uniformly (with replacement) from the train
/// interactions, each paired with one rejection-sampled negative.
pub fn sample_batch(train: &InteractionDataset, batch_size: usize, rng: &mut impl Rng) -> Result<TrainBatch> {
    if train.is_empty() {
        return Err(Error::invalid("cannot sample from an empty train split"));
    }
    let mut batch = TrainBatch {
        triples: Vec::with_capacity(batch_size),
        skipped: 0,
    };
    for _ in 0..batch_size {
        let (u, i) = train.pairs()[rng.gen_range(0..train.len())];
        match sample_negative(train, u as usize, rng) {
            Some(j) => batch.triples.push(Triple {
                user: u,
                pos: i,
                neg: j,
            }),
            None => batch.skipped += 1,
        }
    }
    if batch.skipped > 0 {
        log::warn!("skipped {} positives with no available negative", batch.skipped);
    }
    Ok(batch)
}
