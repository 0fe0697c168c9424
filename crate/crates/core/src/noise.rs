//! Seeded matrix and vector Brownian increments.
//!
//! Every Gaussian draw is addressed by `(seed, replicate, channel, step)`.
//! The seed keys a ChaCha8 block cipher; replicate and channel select one of
//! its 2^64 independent streams; the step index fixes the word position
//! inside that stream. A stored [`NoisePath`] and an on-the-fly
//! [`NoiseStream`] with the same key therefore produce bit-identical
//! increments, and two replicates can never share a block.

use crate::error::{Result, RqfError};
use crate::geometry::SymmetricMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Default memory cap for stored paths (1 GiB).
pub const DEFAULT_MEMORY_CAP: u64 = 1 << 30;

const CHANNEL_BITS: u32 = 2;
/// Largest replicate index representable next to the channel tag.
pub const MAX_REPLICATE: u64 = u64::MAX >> CHANNEL_BITS;

/// Independent sub-streams used for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Channel {
    /// Entries of the matrix increments `ΔB`.
    Matrix = 0,
    /// Entries of the vector increments `ΔW`.
    Vector = 1,
    /// Scalar increments for one-dimensional diffusions.
    Scalar = 2,
    /// Initial conditions and other auxiliary randomness.
    Aux = 3,
}

/// Address of one noise realization `ω`: a master seed and a replicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseKey {
    pub seed: u64,
    pub replicate: u64,
}

impl NoiseKey {
    pub fn new(seed: u64) -> Self {
        NoiseKey { seed, replicate: 0 }
    }

    /// Sub-stream `index` of the master `seed`.
    pub fn replicate(seed: u64, index: u64) -> Self {
        assert!(index <= MAX_REPLICATE, "replicate index out of range");
        NoiseKey { seed, replicate: index }
    }

    fn stream_id(self, channel: Channel) -> u64 {
        (self.replicate << CHANNEL_BITS) | channel as u64
    }
}

impl From<u64> for NoiseKey {
    fn from(seed: u64) -> Self {
        NoiseKey::new(seed)
    }
}

/// Standard normal variates in fixed-width blocks, one block per step.
///
/// Each block consumes exactly `2·⌈width/2⌉` 64-bit words (Box–Muller pairs),
/// so block `k` starts at a known word position and can be regenerated
/// independently of all other blocks.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    seed: u64,
    stream: u64,
    width: usize,
}

impl GaussianStream {
    pub fn new(key: NoiseKey, channel: Channel, width: usize) -> Self {
        GaussianStream { seed: key.seed, stream: key.stream_id(channel), width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn words_per_block(&self) -> u128 {
        // two u64 per Box-Muller pair, two u32 words per u64
        (self.width.div_ceil(2) as u128) * 4
    }

    /// Positions a generator at the start of block `step`.
    pub fn cursor(&self, step: u64) -> GaussianCursor {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(step as u128 * self.words_per_block());
        GaussianCursor { rng, width: self.width }
    }

    /// Fills `out` with block `step`.
    pub fn fill(&self, step: u64, out: &mut [f64]) {
        self.cursor(step).next_block(out);
    }
}

/// Sequential reader over consecutive blocks of a [`GaussianStream`].
#[derive(Debug, Clone)]
pub struct GaussianCursor {
    rng: ChaCha8Rng,
    width: usize,
}

impl GaussianCursor {
    pub fn next_block(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.width, "block width mismatch");
        let mut chunks = out.chunks_mut(2);
        for chunk in &mut chunks {
            let (a, b) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            chunk[0] = a;
            if chunk.len() > 1 {
                chunk[1] = b;
            }
        }
    }
}

#[inline]
fn box_muller(w1: u64, w2: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((w1 >> 11) + 1) as f64 * SCALE;
    let u2 = (w2 >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// One step `ΔQ = (ΔB + ΔBᵀ)/2` of the symmetrized matrix noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricIncrement {
    pub dq: SymmetricMatrix,
}

impl SymmetricIncrement {
    pub fn zeros(n: usize) -> Self {
        SymmetricIncrement { dq: SymmetricMatrix::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.dq.dim()
    }
}

/// Symmetrizes a row-major square matrix increment.
pub fn symmetrize(db: &[f64]) -> Result<SymmetricIncrement> {
    let n = (db.len() as f64).sqrt().round() as usize;
    if n * n != db.len() {
        return Err(RqfError::invalid(format!("{} entries do not form a square matrix", db.len())));
    }
    Ok(symmetrize_square(n, db))
}

pub(crate) fn symmetrize_square(n: usize, db: &[f64]) -> SymmetricIncrement {
    SymmetricIncrement {
        dq: SymmetricMatrix::from_upper_fn(n, |i, j| (db[i * n + j] + db[j * n + i]) / 2.0),
    }
}

/// Read access to per-step increments, whether stored or regenerated.
pub trait IncrementSource: Sync {
    fn dim(&self) -> usize;
    fn dt(&self) -> f64;
    /// Number of available steps, `None` when unbounded.
    fn len(&self) -> Option<usize>;
    /// Raw matrix increment `ΔB_k`, row-major `n × n`.
    fn matrix_increment(&self, k: usize, out: &mut [f64]);
    /// Vector increment `ΔW_k`.
    fn vector_increment(&self, k: usize, out: &mut [f64]) -> Result<()>;

    fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn symmetric_increment(&self, k: usize) -> SymmetricIncrement {
        let n = self.dim();
        let mut db = vec![0.0; n * n];
        self.matrix_increment(k, &mut db);
        symmetrize_square(n, &db)
    }

    fn check_range(&self, steps: usize) -> Result<()> {
        match self.len() {
            Some(len) if steps > len => Err(RqfError::invalid(format!(
                "noise path holds {len} steps but {steps} were requested"
            ))),
            _ => Ok(()),
        }
    }
}

/// Header identifying a noise realization; increments are reproduced from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseHeader {
    pub seed: u64,
    pub replicate: u64,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
}

/// Stored increments of one noise realization on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    key: NoiseKey,
    n: usize,
    dt: f64,
    steps: usize,
    matrix: Vec<f64>,
    vector: Option<Vec<f64>>,
}

/// Generates and stores `steps` increments, refusing paths above the default cap.
pub fn generate_path(
    key: impl Into<NoiseKey>,
    n: usize,
    dt: f64,
    steps: usize,
    with_vector: bool,
) -> Result<NoisePath> {
    generate_path_capped(key, n, dt, steps, with_vector, DEFAULT_MEMORY_CAP)
}

pub fn generate_path_capped(
    key: impl Into<NoiseKey>,
    n: usize,
    dt: f64,
    steps: usize,
    with_vector: bool,
    cap_bytes: u64,
) -> Result<NoisePath> {
    let key = key.into();
    validate_grid(n, dt)?;
    let per_step = (n * n + if with_vector { n } else { 0 }) as u128;
    let requested = per_step * steps as u128 * std::mem::size_of::<f64>() as u128;
    if requested > cap_bytes as u128 {
        return Err(RqfError::ResourceCap {
            what: "stored noise path",
            requested,
            cap: cap_bytes as u128,
        });
    }
    let stream = NoiseStream::new(key, n, dt)?;
    let mut matrix = vec![0.0; steps * n * n];
    for (k, block) in matrix.chunks_mut(n * n).enumerate() {
        stream.matrix_increment(k, block);
    }
    let vector = if with_vector {
        let mut v = vec![0.0; steps * n];
        for (k, block) in v.chunks_mut(n).enumerate() {
            stream.vector_increment(k, block)?;
        }
        Some(v)
    } else {
        None
    };
    Ok(NoisePath { key, n, dt, steps, matrix, vector })
}

fn validate_grid(n: usize, dt: f64) -> Result<()> {
    if n == 0 {
        return Err(RqfError::invalid("dimension must be positive"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RqfError::invalid("dt must be positive"));
    }
    Ok(())
}

impl NoisePath {
    pub fn header(&self) -> NoiseHeader {
        NoiseHeader {
            seed: self.key.seed,
            replicate: self.key.replicate,
            n: self.n,
            dt: self.dt,
            steps: self.steps,
        }
    }

    pub fn key(&self) -> NoiseKey {
        self.key
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn has_vector(&self) -> bool {
        self.vector.is_some()
    }

    /// Row-major `ΔB_k`.
    pub fn matrix(&self, k: usize) -> &[f64] {
        let m = self.n * self.n;
        &self.matrix[k * m..(k + 1) * m]
    }

    pub fn vector(&self, k: usize) -> Option<&[f64]> {
        self.vector.as_ref().map(|v| &v[k * self.n..(k + 1) * self.n])
    }

    pub fn view(&self) -> PathView<'_> {
        PathView { path: self, offset: 0 }
    }
}

impl IncrementSource for NoisePath {
    fn dim(&self) -> usize {
        self.n
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn len(&self) -> Option<usize> {
        Some(self.steps)
    }
    fn matrix_increment(&self, k: usize, out: &mut [f64]) {
        out.copy_from_slice(self.matrix(k));
    }
    fn vector_increment(&self, k: usize, out: &mut [f64]) -> Result<()> {
        let v = self
            .vector(k)
            .ok_or_else(|| RqfError::invalid("noise path was generated without vector increments"))?;
        out.copy_from_slice(v);
        Ok(())
    }
}

/// Read-only window of a stored path starting `offset` steps in: the discrete
/// time shift `θ_{offset·dt}`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    path: &'a NoisePath,
    offset: usize,
}

/// Shifts a stored path by `k` steps, `0 <= k <= steps`.
pub fn shift_path(path: &NoisePath, k: usize) -> Result<PathView<'_>> {
    path.view().shift(k)
}

impl<'a> PathView<'a> {
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn shift(&self, k: usize) -> Result<PathView<'a>> {
        let remaining = self.path.steps - self.offset;
        if k > remaining {
            return Err(RqfError::invalid(format!(
                "shift {k} exceeds the {remaining} remaining steps"
            )));
        }
        Ok(PathView { path: self.path, offset: self.offset + k })
    }

    pub fn matrix(&self, k: usize) -> &'a [f64] {
        self.path.matrix(self.offset + k)
    }
}

impl IncrementSource for PathView<'_> {
    fn dim(&self) -> usize {
        self.path.n
    }
    fn dt(&self) -> f64 {
        self.path.dt
    }
    fn len(&self) -> Option<usize> {
        Some(self.path.steps - self.offset)
    }
    fn matrix_increment(&self, k: usize, out: &mut [f64]) {
        self.path.matrix_increment(self.offset + k, out)
    }
    fn vector_increment(&self, k: usize, out: &mut [f64]) -> Result<()> {
        self.path.vector_increment(self.offset + k, out)
    }
}

/// Unbounded noise realization that regenerates increments from counters.
///
/// Holds no increments in memory; required whenever a stored path would
/// exceed the memory cap.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    key: NoiseKey,
    n: usize,
    dt: f64,
    sqrt_dt: f64,
    offset: usize,
    matrix: GaussianStream,
    vector: GaussianStream,
}

impl NoiseStream {
    pub fn new(key: impl Into<NoiseKey>, n: usize, dt: f64) -> Result<Self> {
        let key = key.into();
        validate_grid(n, dt)?;
        Ok(NoiseStream {
            key,
            n,
            dt,
            sqrt_dt: dt.sqrt(),
            offset: 0,
            matrix: GaussianStream::new(key, Channel::Matrix, n * n),
            vector: GaussianStream::new(key, Channel::Vector, n),
        })
    }

    pub fn key(&self) -> NoiseKey {
        self.key
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// The same realization viewed `k` steps later.
    pub fn shift(&self, k: usize) -> NoiseStream {
        NoiseStream { offset: self.offset + k, ..self.clone() }
    }

    pub fn header(&self, steps: usize) -> NoiseHeader {
        NoiseHeader { seed: self.key.seed, replicate: self.key.replicate, n: self.n, dt: self.dt, steps }
    }
}

impl IncrementSource for NoiseStream {
    fn dim(&self) -> usize {
        self.n
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn len(&self) -> Option<usize> {
        None
    }
    fn matrix_increment(&self, k: usize, out: &mut [f64]) {
        self.matrix.fill((self.offset + k) as u64, out);
        out.iter_mut().for_each(|v| *v *= self.sqrt_dt);
    }
    fn vector_increment(&self, k: usize, out: &mut [f64]) -> Result<()> {
        self.vector.fill((self.offset + k) as u64, out);
        out.iter_mut().for_each(|v| *v *= self.sqrt_dt);
        Ok(())
    }
}

/// Scalar Brownian increments `ΔB_k ~ N(0, dt)` for one-dimensional diffusions.
#[derive(Debug, Clone)]
pub struct ScalarNoise {
    stream: GaussianStream,
    sqrt_dt: f64,
}

impl ScalarNoise {
    pub fn new(key: impl Into<NoiseKey>, dt: f64) -> Result<Self> {
        validate_grid(1, dt)?;
        Ok(ScalarNoise {
            stream: GaussianStream::new(key.into(), Channel::Scalar, 1),
            sqrt_dt: dt.sqrt(),
        })
    }

    /// Sequential iterator over increments starting at step 0.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let mut cursor = self.stream.cursor(0);
        let mut buf = [0.0];
        std::iter::repeat_with(move || {
            cursor.next_block(&mut buf);
            buf[0] * self.sqrt_dt
        })
    }
}
