use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::store::dataset::get_bit;
use crate::store::manifest::parse_kv;

const CHECKPOINT_MAGIC: &str = "fimlab-classifier";
const CHECKPOINT_VERSION: u32 = 1;
/// Standard deviation of the initial site-layer biases.
pub const SITE_BIAS_SD: f64 = 1.0;

/// Site adjacency used by the weight-shared site layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Periodic chain; the window is `(i − 1, i, i + 1)`.
    Chain(usize),
    /// Periodic `L x L` square lattice, site `y L + x`; the window is the 3x3
    /// block around a site.
    Square(usize),
}

impl Geometry {
    pub fn n_sites(&self) -> usize {
        match *self {
            Geometry::Chain(n) => n,
            Geometry::Square(l) => l * l,
        }
    }

    pub fn window(&self) -> usize {
        match self {
            Geometry::Chain(_) => 3,
            Geometry::Square(_) => 9,
        }
    }

    fn neighbours(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n_sites() * self.window());
        match *self {
            Geometry::Chain(n) => {
                for i in 0..n {
                    for d in [n - 1, 0, 1] {
                        out.push(((i + d) % n) as u32);
                    }
                }
            }
            Geometry::Square(l) => {
                for y in 0..l {
                    for x in 0..l {
                        for dy in [l - 1, 0, 1] {
                            for dx in [l - 1, 0, 1] {
                                out.push((((y + dy) % l) * l + (x + dx) % l) as u32);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Chain(n) => write!(f, "chain:{n}"),
            Geometry::Square(l) => write!(f, "square:{l}"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::malformed("geometry", s);
        let (kind, n) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.parse().map_err(|_| bad())?;
        match kind {
            "chain" if n >= 1 => Ok(Geometry::Chain(n)),
            "square" if n >= 1 => Ok(Geometry::Square(n)),
            _ => Err(bad()),
        }
    }
}

/// Layer sizes of the classifier network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub geometry: Geometry,
    /// Parameter-space dimension (1 or 2).
    pub dims: usize,
    pub site_channels: [usize; 2],
    pub hidden: usize,
}

impl Architecture {
    pub fn new(geometry: Geometry, dims: usize) -> Self {
        Self {
            geometry,
            dims,
            site_channels: [12, 8],
            hidden: 32,
        }
    }

    fn layout(&self) -> Layout {
        let k = self.geometry.window();
        let [c1, c2] = self.site_channels;
        let (h, d) = (self.hidden, self.dims);
        let sizes = [c1 * k, c1, c2 * c1, c2, h * (c2 + d), h, h * h, h, d * h, d];
        let mut off = [0usize; 11];
        for i in 0..10 {
            off[i + 1] = off[i] + sizes[i];
        }
        Layout { off }
    }

    pub fn n_params(&self) -> usize {
        self.layout().off[10]
    }
}

/// Offsets of `W1 b1 W2 b2 W3 b3 W4 b4 W5 b5` in the flat parameter vector.
struct Layout {
    off: [usize; 11],
}

impl Layout {
    fn get<'a>(&self, p: &'a [f64], i: usize) -> &'a [f64] {
        &p[self.off[i]..self.off[i + 1]]
    }
}

/// Classifier network.
///
/// Two weight-shared `tanh` layers act on the window around every site and
/// are averaged over sites; the pooled features and `2λ − 1` feed two dense
/// `tanh` layers and a linear map to a vector `A(λ, x)`. The logit is
/// `A · k` with `k = r δλ` the offset in grid steps, so it is odd in `δλ` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub params: Vec<f64>,
    nbr: Vec<u32>,
}

/// Per-record activations kept for the backward pass.
#[derive(Debug, Default)]
pub struct Workspace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    z0: Vec<f64>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    a: Vec<f64>,
    d_pre1: Vec<f64>,
    d_pre2: Vec<f64>,
    d_h1: Vec<f64>,
    dz: Vec<f64>,
}

/// Bits of a sample as spins: bit 0 maps to +1, bit 1 to −1.
pub fn spins_of(sample: &[u64], n: usize) -> Vec<f64> {
    (0..n).map(|i| if get_bit(sample, i) { -1.0 } else { 1.0 }).collect()
}

fn tanh_layer(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = (bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).tanh();
    }
}

impl Network {
    /// Network with Glorot-normal weights and zero biases; the output layer
    /// starts at zero so the initial logit is the prior, 0.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        if !(1..=2).contains(&arch.dims) || arch.site_channels.contains(&0) || arch.hidden == 0 {
            return Err(Error::InvalidArgument(format!("invalid architecture {arch:?}")));
        }
        let lay = arch.layout();
        let mut params = vec![0.0; lay.off[10]];
        let mut r = rng::stream(seed, &[0x1417]);
        let k = arch.geometry.window();
        let [c1, c2] = arch.site_channels;
        let (h, d) = (arch.hidden, arch.dims);
        let fans = [(k, c1), (c1, c2), (c2 + d, h), (h, h)];
        for (layer, &(fan_in, fan_out)) in fans.iter().enumerate() {
            let sd = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let normal = Normal::new(0.0, sd).expect("positive sd");
            for w in &mut params[lay.off[2 * layer]..lay.off[2 * layer + 1]] {
                *w = normal.sample(&mut r);
            }
        }
        // Nonzero site-layer biases break the global spin-flip oddness of
        // the trunk, so even features such as bond energies are reachable.
        let bias = Normal::new(0.0, SITE_BIAS_SD).expect("positive sd");
        for layer in [1, 3] {
            for b in &mut params[lay.off[layer]..lay.off[layer + 1]] {
                *b = bias.sample(&mut r);
            }
        }
        Ok(Self::from_params(arch, params))
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Self {
        let nbr = arch.geometry.neighbours();
        Self { arch, params, nbr }
    }

    pub fn n_sites(&self) -> usize {
        self.arch.geometry.n_sites()
    }

    fn prepare(&self, ws: &mut Workspace) {
        let n = self.n_sites();
        let [c1, c2] = self.arch.site_channels;
        let (h, d) = (self.arch.hidden, self.arch.dims);
        ws.h1.resize(n * c1, 0.0);
        ws.h2.resize(n * c2, 0.0);
        ws.z0.resize(c2 + d, 0.0);
        ws.z1.resize(h, 0.0);
        ws.z2.resize(h, 0.0);
        ws.a.resize(d, 0.0);
        ws.d_pre1.resize(c1, 0.0);
        ws.d_pre2.resize(c2, 0.0);
        ws.d_h1.resize(c1, 0.0);
        ws.dz.resize(c2 + d + 2 * h, 0.0);
    }

    /// Computes `A(λ, x)`, leaving activations in `ws`.
    pub fn amplitude(&self, spins: &[f64], lambda: &[f64], ws: &mut Workspace) -> Vec<f64> {
        debug_assert_eq!(spins.len(), self.n_sites());
        self.prepare(ws);
        let lay = self.arch.layout();
        let p = &self.params;
        let n = self.n_sites();
        let k = self.arch.geometry.window();
        let [c1, c2] = self.arch.site_channels;
        let mut window = vec![0.0; k];
        for i in 0..n {
            for (w, &j) in window.iter_mut().zip(&self.nbr[i * k..(i + 1) * k]) {
                *w = spins[j as usize];
            }
            tanh_layer(lay.get(p, 0), lay.get(p, 1), &window, &mut ws.h1[i * c1..(i + 1) * c1]);
            let (h1, h2) = (&ws.h1[i * c1..(i + 1) * c1], &mut ws.h2[i * c2..(i + 1) * c2]);
            tanh_layer(lay.get(p, 2), lay.get(p, 3), h1, h2);
        }
        let inv_n = 1.0 / n as f64;
        for c in 0..c2 {
            ws.z0[c] = (0..n).map(|i| ws.h2[i * c2 + c]).sum::<f64>() * inv_n;
        }
        for (a, l) in lambda.iter().enumerate() {
            ws.z0[c2 + a] = 2.0 * l - 1.0;
        }
        tanh_layer(lay.get(p, 4), lay.get(p, 5), &ws.z0, &mut ws.z1);
        tanh_layer(lay.get(p, 6), lay.get(p, 7), &ws.z1, &mut ws.z2);
        let (w5, b5) = (lay.get(p, 8), lay.get(p, 9));
        let h = self.arch.hidden;
        for a in 0..self.arch.dims {
            ws.a[a] = b5[a] + w5[a * h..(a + 1) * h].iter().zip(&ws.z2).map(|(w, z)| w * z).sum::<f64>();
        }
        ws.a.clone()
    }

    pub fn logit(&self, spins: &[f64], lambda: &[f64], steps: &[f64], ws: &mut Workspace) -> f64 {
        self.amplitude(spins, lambda, ws).iter().zip(steps).map(|(a, k)| a * k).sum()
    }

    /// Adds `∂loss/∂θ` to `grad` for the cross-entropy of one record and
    /// returns the loss. `label` is 1 when `x` came from `λ + δλ/2`.
    pub fn accumulate(&self, spins: &[f64], lambda: &[f64], steps: &[f64], label: bool, grad: &mut [f64], ws: &mut Workspace) -> f64 {
        let logit = self.logit(spins, lambda, steps, ws);
        let y = if label { 1.0 } else { 0.0 };
        // softplus(L) − yL, computed stably.
        let loss = logit.max(0.0) + (-logit.abs()).exp().ln_1p() - y * logit;
        let g_logit = 1.0 / (1.0 + (-logit).exp()) - y;
        let lay = self.arch.layout();
        let p = &self.params;
        let n = self.n_sites();
        let k = self.arch.geometry.window();
        let [c1, c2] = self.arch.site_channels;
        let (h, d) = (self.arch.hidden, self.arch.dims);
        let (dz0, rest) = ws.dz.split_at_mut(c2 + d);
        let (dz1, dz2) = rest.split_at_mut(h);
        // Output layer: A = W5 z2 + b5, logit = A · k.
        dz2.fill(0.0);
        for a in 0..d {
            let da = g_logit * steps[a];
            grad[lay.off[9] + a] += da;
            for j in 0..h {
                grad[lay.off[8] + a * h + j] += da * ws.z2[j];
                dz2[j] += da * p[lay.off[8] + a * h + j];
            }
        }
        // Dense layer 2.
        dz1.fill(0.0);
        for j in 0..h {
            let pre = dz2[j] * (1.0 - ws.z2[j] * ws.z2[j]);
            grad[lay.off[7] + j] += pre;
            for i in 0..h {
                grad[lay.off[6] + j * h + i] += pre * ws.z1[i];
                dz1[i] += pre * p[lay.off[6] + j * h + i];
            }
        }
        // Dense layer 1.
        let m = c2 + d;
        dz0.fill(0.0);
        for j in 0..h {
            let pre = dz1[j] * (1.0 - ws.z1[j] * ws.z1[j]);
            grad[lay.off[5] + j] += pre;
            for i in 0..m {
                grad[lay.off[4] + j * m + i] += pre * ws.z0[i];
                dz0[i] += pre * p[lay.off[4] + j * m + i];
            }
        }
        // Mean pooling and the two site layers.
        let inv_n = 1.0 / n as f64;
        for site in 0..n {
            let h1 = &ws.h1[site * c1..(site + 1) * c1];
            let h2 = &ws.h2[site * c2..(site + 1) * c2];
            for c in 0..c2 {
                ws.d_pre2[c] = dz0[c] * inv_n * (1.0 - h2[c] * h2[c]);
            }
            ws.d_h1.fill(0.0);
            for c in 0..c2 {
                let g = ws.d_pre2[c];
                grad[lay.off[3] + c] += g;
                let row = lay.off[2] + c * c1;
                for i in 0..c1 {
                    grad[row + i] += g * h1[i];
                    ws.d_h1[i] += g * p[row + i];
                }
            }
            let nb = &self.nbr[site * k..(site + 1) * k];
            for c in 0..c1 {
                let g = ws.d_h1[c] * (1.0 - h1[c] * h1[c]);
                grad[lay.off[1] + c] += g;
                let row = lay.off[0] + c * k;
                for (i, &j) in nb.iter().enumerate() {
                    grad[row + i] += g * spins[j as usize];
                }
            }
        }
        loss
    }

    /// Writes a text header followed by the parameters as little-endian `f64`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let a = &self.arch;
        let header = format!(
            "{CHECKPOINT_MAGIC}\nversion={CHECKPOINT_VERSION}\ngeometry={}\ndims={}\nsite_channels={},{}\nhidden={}\nparams={}\n\n",
            a.geometry,
            a.dims,
            a.site_channels[0],
            a.site_channels[1],
            a.hidden,
            self.params.len()
        );
        let mut bytes = header.into_bytes();
        for v in &self.params {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let split = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| Error::malformed("checkpoint", "missing header terminator"))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| Error::malformed("checkpoint", "header is not UTF-8"))?;
        let (first, rest) = header.split_once('\n').unwrap_or((header, ""));
        if first != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic(path.to_path_buf()));
        }
        let kv = parse_kv(rest)?;
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::malformed("checkpoint", format!("missing {k}")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::malformed("checkpoint", format!("bad {k}"))) };
        let version = num("version")?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(Error::VersionMismatch {
                found: version as u8,
                expected: CHECKPOINT_VERSION as u8,
            });
        }
        let channels: Vec<usize> = get("site_channels")?
            .split(',')
            .map(|c| c.parse().map_err(|_| Error::malformed("checkpoint", "bad site_channels")))
            .collect::<Result<_>>()?;
        if channels.len() != 2 {
            return Err(Error::malformed("checkpoint", "site_channels needs two entries"));
        }
        let arch = Architecture {
            geometry: get("geometry")?.parse()?,
            dims: num("dims")?,
            site_channels: [channels[0], channels[1]],
            hidden: num("hidden")?,
        };
        let n = num("params")?;
        if n != arch.n_params() {
            return Err(Error::malformed("checkpoint", format!("{n} parameters for an architecture with {}", arch.n_params())));
        }
        let payload = &bytes[split + 2..];
        if payload.len() != 8 * n {
            return Err(Error::Truncated {
                expected: 8 * n,
                actual: payload.len(),
            });
        }
        let params = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self::from_params(arch, params))
    }
}
