//! Single-level coded caching: the analytic rate envelope, a concrete
//! subset-placement / XOR-delivery engine, and an independent decodability
//! check over GF(2).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Memory;
use crate::numeric::{int, rational_string, Rational, Real};

/// Largest cache count the combinatorial engine accepts.
pub const MAX_ENGINE_CACHES: usize = 24;
const MAX_ENGINE_SUBFILES: u128 = 2_000_000;

/// `U · min{N/M, K} · (1 − M/N)`, with the minimum taken as `K` at `M = 0`.
pub fn rate_single_level(memory: &Rational, caches: u64, files: u64, users: u64) -> Result<Rational> {
    let n = int(files);
    if memory.is_negative() || memory > &n {
        return Err(Error::Domain(format!(
            "memory {} outside [0, {files}]",
            rational_string(memory)
        )));
    }
    let k = int(caches);
    let u = int(users);
    if memory.is_zero() {
        return Ok(k * u);
    }
    let load = &n / memory;
    let factor = if load < k { load } else { k };
    Ok(u * factor * (Rational::one() - memory / n))
}

/// [`rate_single_level`] for a memory given as an exact real.
pub fn rate_single_level_real(memory: &Real, caches: u64, files: u64, users: u64) -> Result<Real> {
    let n = int(files);
    if memory.is_negative() || memory.cmp_rational(&n).is_gt() {
        return Err(Error::Domain(format!("memory {memory} outside [0, {files}]")));
    }
    let k = int(caches);
    let u = int(users);
    if memory.is_zero() {
        return Ok(Real::from(k * u));
    }
    // min{N/M, K}: N/M < K iff N < K·M
    let km = memory * &k;
    let factor = if km.cmp_rational(&n).is_gt() {
        &Real::from(n.clone()) / memory
    } else {
        Real::from(k)
    };
    let remaining = &Real::one() - &(memory / &n);
    Ok(&(&factor * &remaining) * &u)
}

/// Exact per-row rate of the subset-placement scheme: `(K − t)/(t + 1)` at
/// integer `t = KM/N`, linearly interpolated in between.
pub fn man_rate(memory: &Rational, caches: u64, files: u64) -> Result<Rational> {
    let n = int(files);
    if memory.is_negative() || memory > &n {
        return Err(Error::Domain(format!(
            "memory {} outside [0, {files}]",
            rational_string(memory)
        )));
    }
    let k = int(caches);
    let tau = &k * memory / &n;
    let t = tau.floor();
    let point = |t: &Rational| (&k - t) / (t + Rational::one());
    if tau == t {
        return Ok(point(&t));
    }
    let lambda = &t + Rational::one() - &tau;
    let t1 = &t + Rational::one();
    Ok(&lambda * point(&t) + (Rational::one() - &lambda) * point(&t1))
}

/// A set of cache indices, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct CacheSet(pub u64);

impl CacheSet {
    pub fn contains(self, cache: usize) -> bool {
        self.0 >> cache & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn without(self, cache: usize) -> CacheSet {
        CacheSet(self.0 & !(1 << cache))
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// All subsets of `{0..k-1}` with exactly `size` elements, in increasing
    /// bitmask order.
    pub fn subsets(k: usize, size: usize) -> Vec<CacheSet> {
        if size > k {
            return Vec::new();
        }
        if size == 0 {
            return vec![CacheSet(0)];
        }
        let mut out = Vec::new();
        // Gosper's hack
        let mut v: u64 = (1u64 << size) - 1;
        let limit = 1u64 << k;
        while v < limit {
            out.push(CacheSet(v));
            let c = v & v.wrapping_neg();
            let r = v + c;
            v = (((r ^ v) >> 2) / c) | r;
        }
        out
    }
}

impl fmt::Display for CacheSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Subfile `(file, layer, subset)`: the part of `file` in placement layer
/// `layer` that is stored at exactly the caches in `subset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubfileId {
    pub file: usize,
    pub layer: usize,
    pub subset: CacheSet,
}

/// One placement layer: a fraction of every file split into `C(K, t)`
/// equal subfiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub t: usize,
    pub fraction: Rational,
    pub subfile_size: Rational,
}

#[derive(Clone, Debug)]
pub struct PlacementState {
    pub caches: usize,
    pub files: usize,
    pub memory: Memory,
    pub layers: Vec<Layer>,
    /// Subfiles held by each cache.
    pub contents: Vec<BTreeSet<SubfileId>>,
    /// Random placement only: per file, the size of the piece stored at
    /// exactly each cache set. Structured placements leave this empty.
    pub pieces: Vec<BTreeMap<CacheSet, Rational>>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl PlacementState {
    /// All subfiles of `file`, across layers.
    pub fn subfiles_of(&self, file: usize) -> Vec<SubfileId> {
        if self.is_random() {
            return self.pieces[file]
                .keys()
                .map(|&subset| SubfileId { file, layer: 0, subset })
                .collect();
        }
        let mut out = Vec::new();
        for (layer, l) in self.layers.iter().enumerate() {
            for subset in CacheSet::subsets(self.caches, l.t) {
                out.push(SubfileId { file, layer, subset });
            }
        }
        out
    }

    pub fn subfile_size(&self, id: &SubfileId) -> &Rational {
        if self.is_random() {
            return &self.pieces[id.file][&id.subset];
        }
        &self.layers[id.layer].subfile_size
    }

    pub fn is_random(&self) -> bool {
        !self.pieces.is_empty()
    }

    /// Total stored size at one cache, in files.
    pub fn load(&self, cache: usize) -> Rational {
        self.contents[cache]
            .iter()
            .map(|s| self.subfile_size(s).clone())
            .fold(Rational::zero(), |a, b| a + b)
    }
}

/// Subset placement for `K` caches, `N` files, memory `M`. At non-integer
/// `t = KM/N` every file is split into a layer at `⌊t⌋` and a layer at
/// `⌊t⌋ + 1` whose sizes make the per-cache load exactly `M`.
pub fn place(caches: usize, files: usize, memory: &Memory) -> Result<PlacementState> {
    if caches == 0 || caches > MAX_ENGINE_CACHES {
        return Err(Error::Domain(format!(
            "engine supports 1..={MAX_ENGINE_CACHES} caches, got {caches}"
        )));
    }
    if files == 0 {
        return Err(Error::Domain("engine needs at least one file".into()));
    }
    let m = memory.value();
    let n = int(files as u64);
    if m > &n {
        return Err(Error::Domain(format!("memory {memory} exceeds N = {files}")));
    }
    let tau = int(caches as u64) * m / &n;
    let t = tau.floor().to_integer().to_usize().unwrap();
    let mut layers = Vec::new();
    let mut push = |t: usize, fraction: Rational| {
        if fraction.is_zero() {
            return;
        }
        let count = binomial(caches, t);
        let subfile_size = &fraction / Rational::from_integer(BigInt::from(count));
        layers.push(Layer {
            t,
            fraction,
            subfile_size,
        });
    };
    if tau.is_integer() {
        push(t, Rational::one());
    } else {
        let lambda = int(t as u64 + 1) - &tau;
        push(t, lambda.clone());
        push(t + 1, Rational::one() - lambda);
    }
    let total: u128 = layers.iter().map(|l| binomial(caches, l.t)).sum::<u128>() * files as u128;
    if total > MAX_ENGINE_SUBFILES {
        return Err(Error::Domain(format!(
            "placement would create {total} subfiles; engine limit is {MAX_ENGINE_SUBFILES}"
        )));
    }
    let mut contents = vec![BTreeSet::new(); caches];
    for (layer, l) in layers.iter().enumerate() {
        for subset in CacheSet::subsets(caches, l.t) {
            for file in 0..files {
                for c in subset.iter() {
                    contents[c].insert(SubfileId { file, layer, subset });
                }
            }
        }
    }
    Ok(PlacementState {
        caches,
        files,
        memory: memory.clone(),
        layers,
        contents,
        pieces: Vec::new(),
    })
}

/// Largest cache count accepted by the random placement.
pub const MAX_RANDOM_CACHES: usize = 16;

/// Decentralized placement: every file is cut into `packets` equal packets
/// and each cache independently stores `⌊M·packets/N⌋` of them, chosen
/// uniformly at random from a ChaCha stream seeded with `seed`. Packets are
/// then grouped by the exact set of caches holding them.
pub fn place_random(caches: usize, files: usize, memory: &Memory, packets: usize, seed: u64) -> Result<PlacementState> {
    use rand::seq::index::sample;
    use rand::SeedableRng;

    if caches == 0 || caches > MAX_RANDOM_CACHES {
        return Err(Error::Domain(format!(
            "random placement supports 1..={MAX_RANDOM_CACHES} caches, got {caches}"
        )));
    }
    if files == 0 || packets == 0 {
        return Err(Error::Domain("random placement needs files and packets".into()));
    }
    let m = memory.value();
    let n = int(files as u64);
    if m > &n {
        return Err(Error::Domain(format!("memory {memory} exceeds N = {files}")));
    }
    let per_cache = (m * int(packets as u64) / &n)
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(packets)
        .min(packets);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let size = Rational::new(BigInt::one(), BigInt::from(packets));
    let mut pieces = Vec::with_capacity(files);
    let mut contents = vec![BTreeSet::new(); caches];
    for file in 0..files {
        let mut holders = vec![0u64; packets];
        for c in 0..caches {
            for p in sample(&mut rng, packets, per_cache) {
                holders[p] |= 1 << c;
            }
        }
        let mut groups: BTreeMap<CacheSet, Rational> = BTreeMap::new();
        for h in holders {
            *groups.entry(CacheSet(h)).or_insert_with(Rational::zero) += &size;
        }
        for &subset in groups.keys() {
            for c in subset.iter() {
                contents[c].insert(SubfileId { file, layer: 0, subset });
            }
        }
        pieces.push(groups);
    }
    Ok(PlacementState {
        caches,
        files,
        memory: memory.clone(),
        layers: Vec::new(),
        contents,
        pieces,
    })
}

/// A user at `cache` requesting `file`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Demand {
    pub cache: usize,
    pub file: usize,
}

impl Demand {
    pub fn new(cache: usize, file: usize) -> Self {
        Demand { cache, file }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Message {
    /// Indices into the demand list of the users this message serves.
    pub targets: Vec<usize>,
    /// XOR of these subfiles.
    pub payload: Vec<SubfileId>,
    #[serde(serialize_with = "ser_rational")]
    pub size: Rational,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rational_string(q))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
    #[serde(serialize_with = "ser_rational")]
    pub total_size: Rational,
}

impl Transcript {
    pub fn push(&mut self, message: Message) {
        self.total_size += &message.size;
        self.messages.push(message);
    }

    pub fn extend(&mut self, other: Transcript) {
        for m in other.messages {
            self.push(m);
        }
    }
}

/// Groups users into rows holding at most one user per cache: the `r`-th
/// user of every cache (in demand order) goes to row `r`.
pub fn rows(demands: &[Demand]) -> Vec<Vec<usize>> {
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for (idx, d) in demands.iter().enumerate() {
        let r = seen.entry(d.cache).or_insert(0);
        if rows.len() <= *r {
            rows.push(Vec::new());
        }
        rows[*r].push(idx);
        *r += 1;
    }
    rows
}

/// XOR delivery. Each row is served separately; within a row and layer `t`,
/// every `(t+1)`-subset `S` of caches containing a row user yields the
/// message `⊕_{k ∈ S} W(d_k, S \ {k})` over the row users in `S`.
pub fn deliver(placement: &PlacementState, demands: &[Demand]) -> Result<Transcript> {
    for d in demands {
        if d.cache >= placement.caches {
            return Err(Error::Domain(format!(
                "demand references cache {} of {}",
                d.cache, placement.caches
            )));
        }
        if d.file >= placement.files {
            return Err(Error::Domain(format!(
                "demand references file {} of {}",
                d.file, placement.files
            )));
        }
    }
    if placement.is_random() {
        return Ok(deliver_random(placement, demands));
    }
    let mut transcript = Transcript::default();
    for row in rows(demands) {
        let mut at_cache: Vec<Option<usize>> = vec![None; placement.caches];
        let mut active = CacheSet(0);
        for &u in &row {
            at_cache[demands[u].cache] = Some(u);
            active = CacheSet(active.0 | 1 << demands[u].cache);
        }
        for (layer, l) in placement.layers.iter().enumerate() {
            for s in CacheSet::subsets(placement.caches, l.t + 1) {
                if s.0 & active.0 == 0 {
                    continue;
                }
                let mut targets = Vec::new();
                let mut payload = Vec::new();
                for k in s.iter() {
                    if let Some(u) = at_cache[k] {
                        targets.push(u);
                        payload.push(SubfileId {
                            file: demands[u].file,
                            layer,
                            subset: s.without(k),
                        });
                    }
                }
                transcript.push(Message {
                    targets,
                    payload,
                    size: l.subfile_size.clone(),
                });
            }
        }
    }
    Ok(transcript)
}

/// Delivery for random placements: for every cache set `S` meeting the
/// row, XOR the pieces `W(d_k, S \ {k})` that exist, zero-padded to the
/// largest one.
fn deliver_random(placement: &PlacementState, demands: &[Demand]) -> Transcript {
    let mut transcript = Transcript::default();
    for row in rows(demands) {
        let mut at_cache: Vec<Option<usize>> = vec![None; placement.caches];
        for &u in &row {
            at_cache[demands[u].cache] = Some(u);
        }
        for bits in 1u64..(1 << placement.caches) {
            let s = CacheSet(bits);
            let mut targets = Vec::new();
            let mut payload = Vec::new();
            let mut size = Rational::zero();
            for k in s.iter() {
                let Some(u) = at_cache[k] else { continue };
                let rest = s.without(k);
                if let Some(sz) = placement.pieces[demands[u].file].get(&rest) {
                    targets.push(u);
                    payload.push(SubfileId {
                        file: demands[u].file,
                        layer: 0,
                        subset: rest,
                    });
                    if sz > &size {
                        size = sz.clone();
                    }
                }
            }
            if !payload.is_empty() {
                transcript.push(Message { targets, payload, size });
            }
        }
    }
    transcript
}

/// Bit vector over GF(2).
#[derive(Clone, Debug, PartialEq, Eq)]
struct Gf2Vec(Vec<u64>);

impl Gf2Vec {
    fn zeros(n: usize) -> Self {
        Gf2Vec(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] ^= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn xor(&mut self, other: &Gf2Vec) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
    fn leading(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Row-echelon basis keyed by pivot column.
struct Gf2Basis {
    rows: BTreeMap<usize, Gf2Vec>,
}

impl Gf2Basis {
    fn new() -> Self {
        Gf2Basis { rows: BTreeMap::new() }
    }

    fn reduce(&self, mut v: Gf2Vec) -> Gf2Vec {
        while let Some(p) = v.leading() {
            match self.rows.get(&p) {
                Some(r) => v.xor(r),
                None => break,
            }
        }
        v
    }

    fn insert(&mut self, v: Gf2Vec) {
        let v = self.reduce(v);
        if let Some(p) = v.leading() {
            self.rows.insert(p, v);
        }
    }

    fn contains(&self, mut v: Gf2Vec) -> bool {
        // Each row's pivot is its lowest set bit, so one ascending pass reduces fully.
        for (p, r) in &self.rows {
            if v.get(*p) {
                v.xor(r);
            }
        }
        v.leading().is_none()
    }
}

/// True iff every user's demanded file lies in the GF(2) span of its cache
/// contents and the broadcast messages, with subfiles as independent symbols.
pub fn verify_decode(placement: &PlacementState, transcript: &Transcript, demands: &[Demand]) -> bool {
    let mut index: HashMap<SubfileId, usize> = HashMap::new();
    let intern = |id: SubfileId, index: &mut HashMap<SubfileId, usize>| {
        let n = index.len();
        *index.entry(id).or_insert(n)
    };
    for file in 0..placement.files {
        for id in placement.subfiles_of(file) {
            intern(id, &mut index);
        }
    }
    for m in &transcript.messages {
        for id in &m.payload {
            intern(*id, &mut index);
        }
    }
    let width = index.len();
    let messages: Vec<Gf2Vec> = transcript
        .messages
        .iter()
        .map(|m| {
            let mut v = Gf2Vec::zeros(width);
            for id in &m.payload {
                v.set(index[id]);
            }
            v
        })
        .collect();
    for d in demands {
        if d.cache >= placement.caches || d.file >= placement.files {
            return false;
        }
        let cached = &placement.contents[d.cache];
        let mut basis = Gf2Basis::new();
        for id in cached {
            let mut v = Gf2Vec::zeros(width);
            v.set(index[id]);
            basis.insert(v);
        }
        for m in &messages {
            basis.insert(m.clone());
        }
        for id in placement.subfiles_of(d.file) {
            let mut v = Gf2Vec::zeros(width);
            v.set(index[&id]);
            if !basis.contains(v) {
                return false;
            }
        }
    }
    true
}

/// Worst-case demands with `users` rows of one user per cache: within a row
/// cache `k` asks for file `k mod N`, so files are distinct when `N ≥ K`.
pub fn worst_case_demands(caches: usize, files: usize, users: usize) -> Vec<Demand> {
    let mut out = Vec::with_capacity(caches * users);
    for _ in 0..users {
        for k in 0..caches {
            out.push(Demand::new(k, k % files));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn mem(n: i64, d: i64) -> Memory {
        Memory::new(ratio(n, d)).unwrap()
    }

    #[test]
    fn single_level_rate_examples() {
        assert_eq!(rate_single_level(&int(8), 4, 8, 2).unwrap(), int(0));
        assert_eq!(rate_single_level(&int(0), 4, 8, 2).unwrap(), int(8));
        // min{4,4}·(3/4)
        assert_eq!(rate_single_level(&int(2), 4, 8, 1).unwrap(), int(3));
        assert!(rate_single_level(&int(9), 4, 8, 1).is_err());
        assert!(rate_single_level(&ratio(-1, 2), 4, 8, 1).is_err());
    }

    #[test]
    fn real_rate_agrees_with_rational_rate() {
        for m in 0..=16 {
            let q = ratio(m, 2);
            let a = rate_single_level(&q, 4, 8, 3).unwrap();
            let b = rate_single_level_real(&Real::from(q), 4, 8, 3).unwrap();
            assert_eq!(b.as_rational(), Some(a));
        }
    }

    #[test]
    fn man_rate_examples() {
        assert_eq!(man_rate(&int(2), 4, 8).unwrap(), ratio(3, 2));
        assert_eq!(man_rate(&int(0), 5, 7).unwrap(), int(5));
        assert_eq!(man_rate(&int(7), 5, 7).unwrap(), int(0));
        // halfway between t=1 (3/2) and t=2 (2/3)
        assert_eq!(man_rate(&int(3), 4, 8).unwrap(), ratio(13, 12));
    }

    #[test]
    fn subsets_enumerate_binomially() {
        for k in 0..7 {
            for s in 0..=k {
                let v = CacheSet::subsets(k, s);
                assert_eq!(v.len() as u128, binomial(k, s));
                assert!(v.iter().all(|c| c.len() == s));
            }
        }
    }

    #[test]
    fn placement_two_caches_two_files() {
        let p = place(2, 2, &mem(1, 1)).unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0].t, 1);
        assert_eq!(p.layers[0].subfile_size, ratio(1, 2));
        for c in 0..2 {
            // one half of each file
            assert_eq!(p.contents[c].len(), 2);
            assert_eq!(p.load(c), int(1));
        }
    }

    #[test]
    fn placement_endpoints() {
        let empty = place(4, 8, &mem(0, 1)).unwrap();
        assert!(empty.contents.iter().all(|c| c.is_empty()));
        let full = place(4, 8, &mem(8, 1)).unwrap();
        assert!(full.contents.iter().all(|c| c.len() == 8));
        assert!((0..4).all(|c| full.load(c) == int(8)));
        assert!(place(4, 8, &mem(9, 1)).is_err());
    }

    #[test]
    fn fractional_placement_load_is_exact() {
        let m = mem(5, 3);
        let p = place(4, 6, &m).unwrap();
        assert_eq!(p.layers.len(), 2);
        for c in 0..4 {
            assert_eq!(&p.load(c), m.value());
        }
    }

    #[test]
    fn two_user_exchange() {
        let p = place(2, 2, &mem(1, 1)).unwrap();
        let demands = [Demand::new(0, 0), Demand::new(1, 1)];
        let t = deliver(&p, &demands).unwrap();
        assert_eq!(t.messages.len(), 1);
        assert_eq!(t.total_size, ratio(1, 2));
        assert!(verify_decode(&p, &t, &demands));
        let mut cut = t.clone();
        cut.messages.clear();
        cut.total_size = int(0);
        assert!(!verify_decode(&p, &cut, &demands));
    }

    #[test]
    fn full_and_empty_memory_delivery() {
        let full = place(4, 8, &mem(8, 1)).unwrap();
        let d = worst_case_demands(4, 8, 2);
        let t = deliver(&full, &d).unwrap();
        assert!(t.messages.is_empty());
        assert_eq!(t.total_size, int(0));
        assert!(verify_decode(&full, &t, &d));

        let empty = place(4, 8, &mem(0, 1)).unwrap();
        let d = worst_case_demands(4, 8, 1);
        let t = deliver(&empty, &d).unwrap();
        assert_eq!(t.total_size, int(4));
        assert!(verify_decode(&empty, &t, &d));
    }

    #[test]
    fn deliver_rejects_bad_demands() {
        let p = place(2, 2, &mem(1, 1)).unwrap();
        assert!(deliver(&p, &[Demand::new(2, 0)]).is_err());
        assert!(deliver(&p, &[Demand::new(0, 5)]).is_err());
    }

    #[test]
    fn worst_case_size_matches_man_rate() {
        for k in 1..=5usize {
            for n in 1..=6usize {
                for step in 0..=(2 * k) {
                    let m = Rational::new(BigInt::from(step * n), BigInt::from(2 * k));
                    let p = place(k, n, &Memory::new(m.clone()).unwrap()).unwrap();
                    let d = worst_case_demands(k, n, 1);
                    let t = deliver(&p, &d).unwrap();
                    if n >= k {
                        assert_eq!(t.total_size, man_rate(&m, k as u64, n as u64).unwrap());
                    } else {
                        assert!(t.total_size <= man_rate(&m, k as u64, n as u64).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn messages_target_distinct_caches() {
        let p = place(4, 3, &mem(3, 2)).unwrap();
        let d = vec![
            Demand::new(0, 0),
            Demand::new(0, 1),
            Demand::new(1, 2),
            Demand::new(3, 1),
            Demand::new(3, 0),
        ];
        let t = deliver(&p, &d).unwrap();
        for m in &t.messages {
            let caches: BTreeSet<usize> = m.targets.iter().map(|&u| d[u].cache).collect();
            assert_eq!(caches.len(), m.targets.len());
        }
        let sum = t.messages.iter().fold(Rational::zero(), |a, m| a + &m.size);
        assert_eq!(sum, t.total_size);
        assert!(verify_decode(&p, &t, &d));
        assert_eq!(deliver(&p, &d).unwrap(), t);
    }

    #[test]
    fn exhaustive_small_decodability() {
        for k in 1..=3usize {
            for n in 1..=4usize {
                for step in 0..=k {
                    let m = Memory::new(Rational::new(BigInt::from(step * n), BigInt::from(k))).unwrap();
                    let p = place(k, n, &m).unwrap();
                    let total = n.pow(k as u32);
                    for code in 0..total {
                        let mut c = code;
                        let demands: Vec<Demand> = (0..k)
                            .map(|cache| {
                                let f = c % n;
                                c /= n;
                                Demand::new(cache, f)
                            })
                            .collect();
                        let t = deliver(&p, &demands).unwrap();
                        assert!(verify_decode(&p, &t, &demands), "K={k} N={n} M={m} {demands:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn random_placement_decodes() {
        for seed in 0..4 {
            let m = mem(3, 2);
            let p = place_random(3, 3, &m, 12, seed).unwrap();
            for c in 0..3 {
                assert_eq!(&p.load(c), m.value());
            }
            let d = worst_case_demands(3, 3, 1);
            let t = deliver(&p, &d).unwrap();
            assert!(verify_decode(&p, &t, &d));
            assert_eq!(deliver(&p, &d).unwrap(), t);
            assert_eq!(place_random(3, 3, &m, 12, seed).unwrap().pieces, p.pieces);
        }
        let empty = place_random(2, 2, &mem(0, 1), 4, 1).unwrap();
        let d = worst_case_demands(2, 2, 1);
        assert_eq!(deliver(&empty, &d).unwrap().total_size, int(2));
    }
}
