use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use crate::store::grid::ParameterGrid;
use crate::store::manifest::{parse_kv, RunManifest};

pub const MAGIC: &[u8; 4] = b"FIML";
pub const FORMAT_VERSION: u8 = 1;
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const PAYLOAD_FILE: &str = "samples.bin";

const SPLIT_STREAM: u64 = 0x5_9117;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Samples recorded at one grid point.
///
/// Bit `i` of a sample is site `i`, packed little-endian into 64-bit words.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSamples {
    pub words: Vec<u64>,
    pub energies: Option<Vec<f64>>,
    pub split: Vec<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleDataset {
    pub manifest: RunManifest,
    pub grid: ParameterGrid,
    pub n_bits: usize,
    pub points: Vec<PointSamples>,
}

pub fn words_for_bits(n_bits: usize) -> usize {
    n_bits.div_ceil(64)
}

pub fn get_bit(sample: &[u64], i: usize) -> bool {
    (sample[i / 64] >> (i % 64)) & 1 == 1
}

pub fn pack_bits(bits: impl IntoIterator<Item = bool>, n_bits: usize) -> Vec<u64> {
    let mut words = vec![0u64; words_for_bits(n_bits)];
    for (i, b) in bits.into_iter().enumerate().take(n_bits) {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

impl SampleDataset {
    /// Empty dataset over `grid`; samples are appended with [`Self::push`].
    pub fn new(manifest: RunManifest, grid: ParameterGrid, n_bits: usize) -> Self {
        let points = vec![PointSamples::default(); grid.len()];
        Self {
            manifest,
            grid,
            n_bits,
            points,
        }
    }

    pub fn words_per_sample(&self) -> usize {
        words_for_bits(self.n_bits)
    }

    pub fn push(&mut self, point: usize, sample: &[u64], energy: Option<f64>) {
        debug_assert_eq!(sample.len(), self.words_per_sample());
        let p = &mut self.points[point];
        p.words.extend_from_slice(sample);
        p.split.push(Split::Train);
        if let Some(e) = energy {
            p.energies.get_or_insert_with(Vec::new).push(e);
        }
    }

    pub fn count(&self, point: usize) -> usize {
        self.points[point].split.len()
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(|p| p.split.len()).sum()
    }

    pub fn sample(&self, point: usize, t: usize) -> &[u64] {
        let w = self.words_per_sample();
        &self.points[point].words[t * w..(t + 1) * w]
    }

    pub fn has_energies(&self) -> bool {
        self.points.iter().any(|p| p.energies.is_some())
    }

    /// Samples of one split at a point, with their within-point index.
    pub fn samples_in(&self, point: usize, split: Split) -> impl Iterator<Item = (usize, &[u64])> + '_ {
        self.points[point]
            .split
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == split)
            .map(move |(t, _)| (t, self.sample(point, t)))
    }

    pub fn split_count(&self, point: usize, split: Split) -> usize {
        self.points[point].split.iter().filter(|s| **s == split).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                left: self.points.len(),
                right: self.grid.len(),
            });
        }
        let w = self.words_per_sample();
        let with_energy = self.has_energies();
        let spare = w * 64 - self.n_bits;
        for (i, p) in self.points.iter().enumerate() {
            let n = p.split.len();
            if p.words.len() != n * w {
                return Err(Error::malformed("dataset", format!("point {i}: word count")));
            }
            if with_energy && p.energies.as_ref().map(Vec::len) != Some(n) {
                return Err(Error::malformed("dataset", format!("point {i}: energy count")));
            }
            if spare > 0 {
                let mask = !0u64 << (64 - spare);
                if p.words.chunks(w).any(|s| s[w - 1] & mask != 0) {
                    return Err(Error::malformed(
                        "dataset",
                        format!("point {i}: bits set beyond n_bits={}", self.n_bits),
                    ));
                }
            }
        }
        Ok(())
    }

    fn manifest_text(&self) -> String {
        let mut out = String::from("# fimlab dataset manifest\n");
        writeln!(out, "format_version={FORMAT_VERSION}").unwrap();
        out.push_str(&self.manifest.to_text());
        writeln!(out, "dims={}", self.grid.dims()).unwrap();
        writeln!(out, "resolution={}", self.grid.resolution()).unwrap();
        writeln!(out, "per_axis={}", self.grid.per_axis()).unwrap();
        writeln!(out, "offset={}", self.grid.offset()).unwrap();
        writeln!(out, "n_bits={}", self.n_bits).unwrap();
        writeln!(out, "words_per_sample={}", self.words_per_sample()).unwrap();
        writeln!(out, "energies={}", u8::from(self.has_energies())).unwrap();
        let counts: Vec<String> = self.points.iter().map(|p| p.split.len().to_string()).collect();
        writeln!(out, "counts={}", counts.join(",")).unwrap();
        writeln!(out, "payload={PAYLOAD_FILE}").unwrap();
        out
    }

    fn payload(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(6 + self.total() * (8 * self.words_per_sample() + 9));
        buf.extend_from_slice(MAGIC);
        buf.push(FORMAT_VERSION);
        buf.push(u8::from(self.has_energies()));
        for p in &self.points {
            for w in &p.words {
                buf.extend_from_slice(&w.to_le_bytes());
            }
            if let Some(e) = &p.energies {
                for v in e {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            buf.extend(p.split.iter().map(|s| match s {
                Split::Train => 0u8,
                Split::Test => 1u8,
            }));
        }
        buf
    }
}

/// Write `dataset` as `dir/manifest.txt` plus `dir/samples.bin`.
pub fn save_dataset(dataset: &SampleDataset, dir: &Path) -> Result<()> {
    dataset.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, dataset.manifest_text()).map_err(|e| Error::io(&mpath, e))?;
    let ppath = dir.join(PAYLOAD_FILE);
    fs::write(&ppath, dataset.payload()).map_err(|e| Error::io(&ppath, e))?;
    Ok(())
}

fn kv_parse<T: std::str::FromStr>(kv: &std::collections::BTreeMap<String, String>, key: &str) -> Result<T> {
    kv.get(key)
        .ok_or_else(|| Error::malformed("dataset manifest", format!("missing {key}")))?
        .parse()
        .map_err(|_| Error::malformed("dataset manifest", format!("bad value for {key}")))
}

pub fn load_dataset(dir: &Path) -> Result<SampleDataset> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let kv = parse_kv(&text)?;
    let manifest = RunManifest::from_kv(&kv)?;
    let grid = ParameterGrid::new(
        kv_parse(&kv, "dims")?,
        kv_parse(&kv, "resolution")?,
        kv_parse(&kv, "per_axis")?,
        kv_parse(&kv, "offset")?,
    )?;
    let n_bits: usize = kv_parse(&kv, "n_bits")?;
    let energies = kv_parse::<u8>(&kv, "energies")? == 1;
    let counts: Vec<usize> = kv
        .get("counts")
        .ok_or_else(|| Error::malformed("dataset manifest", "missing counts"))?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::malformed("dataset manifest", "bad counts")))
        .collect::<Result<_>>()?;
    if counts.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            left: counts.len(),
            right: grid.len(),
        });
    }
    let w = words_for_bits(n_bits);
    let per_sample = 8 * w + if energies { 8 } else { 0 } + 1;
    let expected = 6 + counts.iter().sum::<usize>() * per_sample;

    let ppath = dir.join(PAYLOAD_FILE);
    let bytes = fs::read(&ppath).map_err(|e| Error::io(&ppath, e))?;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic(ppath));
    }
    if bytes.len() < 6 {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: bytes[4],
            expected: FORMAT_VERSION,
        });
    }
    if (bytes[5] == 1) != energies {
        return Err(Error::malformed("payload", "energy flag disagrees with manifest"));
    }
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }

    let mut pos = 6;
    let read_u64 = |pos: &mut usize| {
        let v = u64::from_le_bytes(bytes[*pos..*pos + 8].try_into().unwrap());
        *pos += 8;
        v
    };
    let mut points = Vec::with_capacity(counts.len());
    for &n in &counts {
        let words: Vec<u64> = (0..n * w).map(|_| read_u64(&mut pos)).collect();
        let en = energies.then(|| (0..n).map(|_| f64::from_bits(read_u64(&mut pos))).collect());
        let mut split = Vec::with_capacity(n);
        for _ in 0..n {
            split.push(match bytes[pos] {
                0 => Split::Train,
                1 => Split::Test,
                b => return Err(Error::malformed("payload", format!("bad split tag {b}"))),
            });
            pos += 1;
        }
        points.push(PointSamples {
            words,
            energies: en,
            split,
        });
    }
    let dataset = SampleDataset {
        manifest,
        grid,
        n_bits,
        points,
    };
    dataset.validate()?;
    Ok(dataset)
}

/// Tag a uniformly random `fraction` of all samples as training data.
///
/// The split is drawn over the whole dataset, so per-point train counts vary
/// around `fraction * count`.
pub fn split_train_test(mut dataset: SampleDataset, fraction: f64, seed: u64) -> Result<SampleDataset> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let total = dataset.total();
    let n_train = (fraction * total as f64).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng::stream(seed, &[SPLIT_STREAM]));
    let mut is_train = vec![false; total];
    for &i in &order[..n_train] {
        is_train[i] = true;
    }
    let mut flat = 0;
    for p in &mut dataset.points {
        for s in &mut p.split {
            *s = if is_train[flat] { Split::Train } else { Split::Test };
            flat += 1;
        }
    }
    dataset.manifest.set("split_fraction", fraction);
    dataset.manifest.set("split_seed", seed);
    Ok(dataset)
}
