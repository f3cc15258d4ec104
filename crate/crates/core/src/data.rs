//! Corpus ingestion, synthetic HMM generation, batching, and the teacher
//! score cache.
//!
//! The cache file is the on-disk half of the distillation pipeline's step
//! (2): every training sentence is encoded once by the teacher and the
//! resulting lattices are written out, so later distillation epochs never
//! run the teacher forward pass. Format: one JSON header line, then one
//! length-prefixed record of little-endian f32 scores per sentence, in
//! dataset order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read as _};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::ScoreLattice;
use crate::model::{encode, EncoderConfig, ModelParams};
use crate::{Error, Result};

/// Reserved token id for unknown tokens.
pub const UNK_ID: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<usize>,
    pub tags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub sentences: Vec<TaggedSentence>,
    /// Tag names; index = tag id.
    pub tag_vocab: Vec<String>,
    /// Token strings; index = token id, id 0 reserved for `<unk>`.
    pub token_vocab: Vec<String>,
}

impl Dataset {
    pub fn num_tags(&self) -> usize {
        self.tag_vocab.len()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn tag_names(&self, sentence: &TaggedSentence) -> Vec<String> {
        sentence
            .tags
            .iter()
            .map(|&t| self.tag_vocab[t].clone())
            .collect()
    }

    /// 64-bit FNV-1a over the canonical serialized sentences.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        };
        for s in &self.sentences {
            for (&tok, &tag) in s.tokens.iter().zip(&s.tags) {
                eat(self.token_vocab[tok].as_bytes());
                eat(b" ");
                eat(self.tag_vocab[tag].as_bytes());
                eat(b"\n");
            }
            eat(b"\n");
        }
        hash
    }

    /// Re-encode this dataset's tokens and tags against another dataset's
    /// vocabularies (training vocab). Unknown tokens map to `<unk>`.
    pub fn map_to_vocab(&self, reference: &Dataset) -> Result<Dataset> {
        let token_ids: HashMap<&str, usize> = reference
            .token_vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let tag_ids: HashMap<&str, usize> = reference
            .tag_vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let sentences = self
            .sentences
            .iter()
            .map(|s| {
                let tokens = s
                    .tokens
                    .iter()
                    .map(|&t| {
                        token_ids
                            .get(self.token_vocab[t].as_str())
                            .copied()
                            .unwrap_or(UNK_ID)
                    })
                    .collect();
                let tags = s
                    .tags
                    .iter()
                    .map(|&t| {
                        tag_ids
                            .get(self.tag_vocab[t].as_str())
                            .copied()
                            .ok_or_else(|| {
                                Error::InvalidInput(format!(
                                    "tag {} missing from reference vocabulary",
                                    self.tag_vocab[t]
                                ))
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TaggedSentence { tokens, tags })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            sentences,
            tag_vocab: reference.tag_vocab.clone(),
            token_vocab: reference.token_vocab.clone(),
        })
    }
}

/// Repair IOB1 into BIO2: an I-X not preceded by I-X or B-X of the same
/// type becomes B-X.
fn repair_bio2(tags: &mut [String]) {
    for k in 0..tags.len() {
        if let Some(ty) = tags[k].strip_prefix("I-") {
            let ok = k > 0 && {
                let prev = &tags[k - 1];
                prev.strip_prefix("B-") == Some(ty) || prev.strip_prefix("I-") == Some(ty)
            };
            if !ok {
                tags[k] = format!("B-{ty}");
            }
        }
    }
}

/// Parse a whitespace-column CoNLL file. Blank lines separate sentences;
/// `-DOCSTART-` lines are skipped. Tags are repaired to BIO2. Vocabulary
/// order follows first occurrence.
pub fn parse_conll(path: &Path, token_column: usize, tag_column: usize) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let reader = BufReader::new(file);

    let mut token_vocab = vec![UNK_TOKEN.to_string()];
    let mut token_ids: HashMap<String, usize> = HashMap::new();
    let mut tag_vocab: Vec<String> = Vec::new();
    let mut tag_ids: HashMap<String, usize> = HashMap::new();
    let mut sentences = Vec::new();
    let mut cur_tokens: Vec<String> = Vec::new();
    let mut cur_tags: Vec<String> = Vec::new();

    let flush = |tokens: &mut Vec<String>,
                 tags: &mut Vec<String>,
                 sentences: &mut Vec<TaggedSentence>,
                 token_vocab: &mut Vec<String>,
                 token_ids: &mut HashMap<String, usize>,
                 tag_vocab: &mut Vec<String>,
                 tag_ids: &mut HashMap<String, usize>| {
        if tokens.is_empty() {
            return;
        }
        repair_bio2(tags);
        let sentence = TaggedSentence {
            tokens: tokens
                .drain(..)
                .map(|t| {
                    *token_ids.entry(t.clone()).or_insert_with(|| {
                        token_vocab.push(t);
                        token_vocab.len() - 1
                    })
                })
                .collect(),
            tags: tags
                .drain(..)
                .map(|t| {
                    *tag_ids.entry(t.clone()).or_insert_with(|| {
                        tag_vocab.push(t);
                        tag_vocab.len() - 1
                    })
                })
                .collect(),
        };
        sentences.push(sentence);
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(
                &mut cur_tokens,
                &mut cur_tags,
                &mut sentences,
                &mut token_vocab,
                &mut token_ids,
                &mut tag_vocab,
                &mut tag_ids,
            );
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        let need = token_column.max(tag_column);
        if cols.len() <= need {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!(
                    "expected at least {} columns, found {}: {trimmed:?}",
                    need + 1,
                    cols.len()
                ),
            });
        }
        cur_tokens.push(cols[token_column].to_string());
        cur_tags.push(cols[tag_column].to_string());
    }
    flush(
        &mut cur_tokens,
        &mut cur_tags,
        &mut sentences,
        &mut token_vocab,
        &mut token_ids,
        &mut tag_vocab,
        &mut tag_ids,
    );

    if sentences.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no sentences found",
            path.display()
        )));
    }
    Ok(Dataset {
        sentences,
        tag_vocab,
        token_vocab,
    })
}

/// Write a dataset back out as two-column CoNLL text.
pub fn write_conll(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for s in &dataset.sentences {
        for (&tok, &tag) in s.tokens.iter().zip(&s.tags) {
            out.push_str(&dataset.token_vocab[tok]);
            out.push(' ');
            out.push_str(&dataset.tag_vocab[tag]);
            out.push('\n');
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// A hidden Markov model used to sample synthetic tagged corpora.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmmSpec {
    pub num_states: usize,
    /// N x N row-stochastic.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// N x V row-stochastic.
    pub emission: Vec<Vec<f64>>,
    pub seed: u64,
}

fn check_stochastic(rows: &[Vec<f64>], what: &str) -> Result<()> {
    for (k, row) in rows.iter().enumerate() {
        if row.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "{what} row {k} has a negative entry"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "{what} row {k} sums to {s}, expected 1"
            )));
        }
    }
    Ok(())
}

impl HmmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::InvalidInput("HMM needs at least one state".into()));
        }
        if self.transition.len() != self.num_states
            || self.emission.len() != self.num_states
            || self.initial.len() != self.num_states
        {
            return Err(Error::ShapeMismatch("HMM spec shapes".into()));
        }
        check_stochastic(&self.transition, "transition")?;
        check_stochastic(&self.emission, "emission")?;
        check_stochastic(std::slice::from_ref(&self.initial), "initial")
    }

    /// A randomly drawn but learnable HMM: each distribution is roughly
    /// uniform noise with one boosted preferred outcome, so both the token
    /// identity and the left context carry signal about the state.
    pub fn random_peaked(num_states: usize, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = |len: usize, boost: f64, rng: &mut ChaCha8Rng| {
            let mut w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
            let hot = rng.gen_range(0..len);
            w[hot] *= boost;
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            w
        };
        let transition = (0..num_states)
            .map(|_| row(num_states, 6.0, &mut rng))
            .collect();
        let emission = (0..num_states)
            .map(|_| row(vocab_size, vocab_size as f64, &mut rng))
            .collect();
        let initial = row(num_states, 3.0, &mut rng);
        Self {
            num_states,
            transition,
            initial,
            emission,
            seed,
        }
    }
}

fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Ancestral sampling from an HMM; lengths uniform in `[min_len, max_len]`.
pub fn hmm_generate(
    spec: &HmmSpec,
    num_sentences: usize,
    min_len: usize,
    max_len: usize,
) -> Result<Dataset> {
    spec.validate()?;
    if min_len == 0 || min_len > max_len {
        return Err(Error::InvalidInput(format!(
            "need 1 <= min_len <= max_len, got [{min_len}, {max_len}]"
        )));
    }
    let vocab_size = spec.emission[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sentences = Vec::with_capacity(num_sentences);
    for _ in 0..num_sentences {
        let len = rng.gen_range(min_len..=max_len);
        let mut tokens = Vec::with_capacity(len);
        let mut tags = Vec::with_capacity(len);
        let mut state = sample_categorical(&spec.initial, &mut rng);
        for pos in 0..len {
            if pos > 0 {
                state = sample_categorical(&spec.transition[state], &mut rng);
            }
            // +1: token id 0 is reserved for <unk>
            tokens.push(sample_categorical(&spec.emission[state], &mut rng) + 1);
            tags.push(state);
        }
        sentences.push(TaggedSentence { tokens, tags });
    }
    let token_vocab = std::iter::once(UNK_TOKEN.to_string())
        .chain((0..vocab_size).map(|v| format!("w{v}")))
        .collect();
    let tag_vocab = (0..spec.num_states).map(|s| format!("S{s}")).collect();
    Ok(Dataset {
        sentences,
        tag_vocab,
        token_vocab,
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct CacheHeader {
    dataset_fingerprint: u64,
    num_tags: usize,
    teacher_config_hash: u64,
    num_records: usize,
}

/// In-memory teacher score cache; one lattice per training sentence.
#[derive(Debug)]
pub struct TeacherScoreCache {
    pub lattices: Vec<ScoreLattice>,
    pub dataset_fingerprint: u64,
    pub num_tags: usize,
    pub teacher_config_hash: u64,
}

pub fn config_hash(config: &EncoderConfig) -> u64 {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in &bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Encode every sentence with the teacher and write the lattices to `path`.
/// Scores are stored as f32, so the cached lattices are the f32 quantization
/// of the teacher's output.
pub fn build_cache(
    teacher: &ModelParams,
    dataset: &Dataset,
    path: &Path,
) -> Result<TeacherScoreCache> {
    if teacher.config.num_tags != dataset.num_tags() {
        return Err(Error::ShapeMismatch(format!(
            "teacher has {} tags, dataset has {}",
            teacher.config.num_tags,
            dataset.num_tags()
        )));
    }
    let header = CacheHeader {
        dataset_fingerprint: dataset.fingerprint(),
        num_tags: dataset.num_tags(),
        teacher_config_hash: config_hash(&teacher.config),
        num_records: dataset.len(),
    };
    let mut buf = serde_json::to_vec(&header).expect("header serializes");
    buf.push(b'\n');
    let mut lattices = Vec::with_capacity(dataset.len());
    for s in &dataset.sentences {
        let lattice = encode(teacher, &s.tokens)?.quantize_f32();
        buf.extend_from_slice(&(lattice.len() as u32).to_le_bytes());
        for &v in lattice.start.iter().chain(lattice.pair.iter()) {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        lattices.push(lattice);
    }
    std::fs::write(path, buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(TeacherScoreCache {
        lattices,
        dataset_fingerprint: header.dataset_fingerprint,
        num_tags: header.num_tags,
        teacher_config_hash: header.teacher_config_hash,
    })
}

/// Load a cache and verify it matches `dataset`.
pub fn load_cache(path: &Path, dataset: &Dataset) -> Result<TeacherScoreCache> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = BufReader::new(file);
    let mut header_line = String::new();
    reader
        .read_line(&mut header_line)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let header: CacheHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::InvalidInput(format!("bad cache header: {e}")))?;
    if header.dataset_fingerprint != dataset.fingerprint() || header.num_records != dataset.len() {
        return Err(Error::StaleCache(format!(
            "{} was built from a different dataset",
            path.display()
        )));
    }
    if header.num_tags != dataset.num_tags() {
        return Err(Error::StaleCache(format!(
            "{} has {} tags, dataset has {}",
            path.display(),
            header.num_tags,
            dataset.num_tags()
        )));
    }
    let n = header.num_tags;
    let mut lattices = Vec::with_capacity(header.num_records);
    for _ in 0..header.num_records {
        let mut len_bytes = [0u8; 4];
        reader
            .read_exact(&mut len_bytes)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let len = u32::from_le_bytes(len_bytes) as usize;
        let count = n + (len - 1) * n * n;
        let mut raw = vec![0u8; count * 4];
        reader
            .read_exact(&mut raw)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let vals: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let (start, pair) = vals.split_at(n);
        lattices.push(ScoreLattice::new(len, n, start.to_vec(), pair.to_vec())?);
    }
    Ok(TeacherScoreCache {
        lattices,
        dataset_fingerprint: header.dataset_fingerprint,
        num_tags: header.num_tags,
        teacher_config_hash: header.teacher_config_hash,
    })
}

/// Shuffled sentence-index batches for one epoch; the permutation is a pure
/// function of `(shuffle_seed, epoch)`.
pub fn batch_iter(
    dataset_len: usize,
    batch_size: usize,
    shuffle_seed: u64,
    epoch: usize,
) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let mut order: Vec<usize> = (0..dataset_len).collect();
    let mut rng =
        ChaCha8Rng::seed_from_u64(shuffle_seed ^ (epoch as u64).wrapping_mul(0x9e3779b97f4a7c15));
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn parse_minimal_file() {
        let (_d, path) = write_tmp("EU NNP B-ORG\n\n");
        let ds = parse_conll(&path, 0, 2).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.token_vocab, vec!["<unk>", "EU"]);
        assert_eq!(ds.tag_vocab, vec!["B-ORG"]);
        assert_eq!(ds.sentences[0].tokens, vec![1]);
        assert_eq!(ds.sentences[0].tags, vec![0]);
    }

    #[test]
    fn parse_repairs_iob1() {
        let (_d, path) = write_tmp("a x I-PER\nb x I-PER\n\n");
        let ds = parse_conll(&path, 0, 2).unwrap();
        let names = ds.tag_names(&ds.sentences[0]);
        assert_eq!(names, vec!["B-PER", "I-PER"]);
    }

    #[test]
    fn parse_reports_missing_column_with_line() {
        let (_d, path) = write_tmp("ok x O\nbrokenline\n");
        let err = parse_conll(&path, 0, 2).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_empty_file() {
        let (_d, path) = write_tmp("");
        assert!(parse_conll(&path, 0, 2).is_err());
    }

    #[test]
    fn parse_skips_docstart() {
        let (_d, path) = write_tmp("-DOCSTART- -X- O\n\na x O\n\n");
        let ds = parse_conll(&path, 0, 2).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn parse_serialize_parse_round_trip() {
        let (_d, path) = write_tmp("a x B-PER\nb x I-PER\n\nc x O\nd x B-LOC\n\n");
        let ds = parse_conll(&path, 0, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("round.txt");
        write_conll(&ds, &out).unwrap();
        let back = parse_conll(&out, 0, 1).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn bio2_invariant_after_parse() {
        let (_d, path) =
            write_tmp("a x I-PER\nb x O\nc x I-ORG\nd x I-PER\ne x B-LOC\nf x I-LOC\n\n");
        let ds = parse_conll(&path, 0, 2).unwrap();
        let names = ds.tag_names(&ds.sentences[0]);
        for k in 0..names.len() {
            if let Some(ty) = names[k].strip_prefix("I-") {
                let prev = &names[k - 1];
                assert!(
                    prev.strip_prefix("B-") == Some(ty) || prev.strip_prefix("I-") == Some(ty),
                    "bare I- at {k}: {names:?}"
                );
            }
        }
    }

    fn forced_hmm() -> HmmSpec {
        // single possible path: state 0 -> 1 -> 0 -> 1 ... with one token each
        HmmSpec {
            num_states: 2,
            transition: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            initial: vec![1.0, 0.0],
            emission: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            seed: 3,
        }
    }

    #[test]
    fn hmm_deterministic_spec_forces_sequence() {
        let ds = hmm_generate(&forced_hmm(), 5, 4, 4).unwrap();
        for s in &ds.sentences {
            assert_eq!(s.tags, vec![0, 1, 0, 1]);
            assert_eq!(s.tokens, vec![1, 2, 1, 2]);
        }
    }

    #[test]
    fn hmm_same_seed_same_corpus() {
        let spec = HmmSpec::random_peaked(3, 10, 42);
        let a = hmm_generate(&spec, 20, 2, 8).unwrap();
        let b = hmm_generate(&spec, 20, 2, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hmm_rejects_bad_rows() {
        let mut spec = forced_hmm();
        spec.transition[0][1] = 0.5;
        assert!(hmm_generate(&spec, 1, 1, 1).is_err());
    }

    #[test]
    fn hmm_empirical_transitions_match_spec() {
        let spec = HmmSpec::random_peaked(3, 8, 7);
        let ds = hmm_generate(&spec, 50_000, 2, 4).unwrap();
        let mut counts = vec![vec![0usize; 3]; 3];
        for s in &ds.sentences {
            for w in s.tags.windows(2) {
                counts[w[0]][w[1]] += 1;
            }
        }
        for i in 0..3 {
            let total: usize = counts[i].iter().sum();
            for j in 0..3 {
                let freq = counts[i][j] as f64 / total as f64;
                assert!(
                    (freq - spec.transition[i][j]).abs() < 0.01,
                    "transition ({i},{j}): {freq} vs {}",
                    spec.transition[i][j]
                );
            }
        }
    }

    #[test]
    fn cache_round_trip_matches_encode() {
        let spec = HmmSpec::random_peaked(3, 10, 11);
        let ds = hmm_generate(&spec, 3, 2, 5).unwrap();
        let teacher =
            init_model(&EncoderConfig::student_default(ds.token_vocab.len(), 3, 9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        let cache = build_cache(&teacher, &ds, &path).unwrap();
        assert_eq!(cache.lattices.len(), 3);
        let loaded = load_cache(&path, &ds).unwrap();
        for (k, s) in ds.sentences.iter().enumerate() {
            let fresh = encode(&teacher, &s.tokens).unwrap().quantize_f32();
            assert_eq!(loaded.lattices[k], fresh);
        }
    }

    #[test]
    fn cache_detects_stale_dataset() {
        let spec = HmmSpec::random_peaked(3, 10, 11);
        let ds = hmm_generate(&spec, 3, 2, 5).unwrap();
        let teacher =
            init_model(&EncoderConfig::student_default(ds.token_vocab.len(), 3, 9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.cache");
        build_cache(&teacher, &ds, &path).unwrap();
        let mut grown = ds.clone();
        grown.sentences.push(ds.sentences[0].clone());
        assert!(matches!(
            load_cache(&path, &grown),
            Err(Error::StaleCache(_))
        ));
    }

    #[test]
    fn cache_build_is_byte_deterministic() {
        let spec = HmmSpec::random_peaked(4, 12, 13);
        let ds = hmm_generate(&spec, 5, 2, 6).unwrap();
        let teacher =
            init_model(&EncoderConfig::student_default(ds.token_vocab.len(), 4, 9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a"), dir.path().join("b"));
        build_cache(&teacher, &ds, &p1).unwrap();
        build_cache(&teacher, &ds, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn batches_partition_every_epoch() {
        let batches = batch_iter(5, 2, 7, 0);
        let sizes: Vec<usize> = batches.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        let mut all: Vec<usize> = batches.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn batches_reproducible_and_epoch_sensitive() {
        assert_eq!(batch_iter(20, 4, 7, 3), batch_iter(20, 4, 7, 3));
        assert_ne!(batch_iter(20, 4, 7, 3), batch_iter(20, 4, 7, 4));
    }
}
