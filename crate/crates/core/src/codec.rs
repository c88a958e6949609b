//! Spike trains: rate encoding of input images, the priority-encoder (PENC)
//! compression of binary planes into event lists, and population decoding.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Shape;

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Borrowed view of one packed binary plane. Bit `i` lives in
/// `words[i / 64]` at position `i % 64`.
#[derive(Clone, Copy, Debug)]
pub struct PlaneRef<'a> {
    len: usize,
    words: &'a [u64],
}

impl<'a> PlaneRef<'a> {
    pub fn new(len: usize, words: &'a [u64]) -> Self {
        assert_eq!(words.len(), words_for(len), "word count does not match plane length");
        PlaneRef { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_owned(&self) -> BitPlane {
        BitPlane {
            len: self.len,
            words: self.words.to_vec(),
        }
    }
}

/// Owned packed binary plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPlane {
    len: usize,
    words: Vec<u64>,
}

impl BitPlane {
    pub fn zeros(len: usize) -> Self {
        BitPlane {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut plane = Self::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            plane.set(i, true);
        }
        plane
    }

    /// Plane of `len` bits taken from the low bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
        BitPlane {
            len,
            words: if len == 0 { vec![] } else { vec![value & mask] },
        }
    }

    pub fn as_ref(&self) -> PlaneRef<'_> {
        PlaneRef {
            len: self.len,
            words: &self.words,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.as_ref().get(i)
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for plane of {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn popcount(&self) -> usize {
        self.as_ref().popcount()
    }
}

/// Ascending flat indices of the set bits of one plane.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventList(Vec<u32>);

impl EventList {
    pub fn new(indices: Vec<u32>) -> Self {
        EventList(indices)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Write the events back into a zeroed plane of `len` bits.
    pub fn scatter(&self, len: usize) -> BitPlane {
        let mut plane = BitPlane::zeros(len);
        for i in self.iter() {
            plane.set(i, true);
        }
        plane
    }
}

/// Priority encoder over a plane: each step emits the lowest set bit and
/// clears it in its working copy of the spike train.
pub struct Penc<'a> {
    words: &'a [u64],
    word: usize,
    current: u64,
}

impl<'a> Penc<'a> {
    pub fn new(plane: PlaneRef<'a>) -> Self {
        Penc {
            words: plane.words,
            word: 0,
            current: plane.words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for Penc<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word += 1;
            self.current = *self.words.get(self.word)?;
        }
        let bit = self.current.trailing_zeros() as usize;
        // bit reset
        self.current &= self.current - 1;
        Some(self.word * WORD + bit)
    }
}

pub fn penc_compress(plane: PlaneRef<'_>) -> EventList {
    EventList(Penc::new(plane).map(|i| i as u32).collect())
}

/// Row-major flat index to `(row, col)`.
#[inline]
pub const fn index_to_coords(index: usize, width: usize) -> (usize, usize) {
    (index / width, index % width)
}

/// Binary activations `[T][C][H][W]`; each `(t, c)` plane is padded to a
/// whole number of 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpikeTensor {
    timesteps: usize,
    shape: Shape,
    plane_words: usize,
    bits: Vec<u64>,
}

impl SpikeTensor {
    pub fn zeros(timesteps: usize, shape: Shape) -> Self {
        let plane_words = words_for(shape.plane_len());
        SpikeTensor {
            timesteps,
            shape,
            plane_words,
            bits: vec![0; timesteps * shape.channels * plane_words],
        }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    fn plane_offset(&self, t: usize, c: usize) -> usize {
        debug_assert!(t < self.timesteps && c < self.shape.channels);
        (t * self.shape.channels + c) * self.plane_words
    }

    pub fn plane(&self, t: usize, c: usize) -> PlaneRef<'_> {
        let off = self.plane_offset(t, c);
        PlaneRef {
            len: self.shape.plane_len(),
            words: &self.bits[off..off + self.plane_words],
        }
    }

    pub fn set_plane(&mut self, t: usize, c: usize, plane: PlaneRef<'_>) {
        assert_eq!(plane.len(), self.shape.plane_len());
        let off = self.plane_offset(t, c);
        self.bits[off..off + self.plane_words].copy_from_slice(plane.words());
    }

    pub fn get(&self, t: usize, c: usize, y: usize, x: usize) -> bool {
        self.plane(t, c).get(y * self.shape.width + x)
    }

    /// Set bit at flat index `i` of plane `(t, c)`.
    #[inline]
    pub fn set_index(&mut self, t: usize, c: usize, i: usize) {
        let off = self.plane_offset(t, c);
        self.bits[off + i / WORD] |= 1 << (i % WORD);
    }

    pub fn set(&mut self, t: usize, c: usize, y: usize, x: usize, value: bool) {
        let i = y * self.shape.width + x;
        let off = self.plane_offset(t, c);
        let mask = 1u64 << (i % WORD);
        if value {
            self.bits[off + i / WORD] |= mask;
        } else {
            self.bits[off + i / WORD] &= !mask;
        }
    }

    pub fn total_spikes(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Spikes of each input feature map summed over timesteps.
    pub fn channel_totals(&self) -> Vec<u64> {
        (0..self.shape.channels)
            .map(|c| (0..self.timesteps).map(|t| self.plane(t, c).popcount() as u64).sum())
            .collect()
    }

    /// Spike count of every neuron over all timesteps, flattened `[C][H][W]`.
    pub fn neuron_totals(&self) -> Vec<u64> {
        let n = self.shape.plane_len();
        let mut counts = vec![0u64; self.shape.len()];
        for t in 0..self.timesteps {
            for c in 0..self.shape.channels {
                for i in Penc::new(self.plane(t, c)) {
                    counts[c * n + i] += 1;
                }
            }
        }
        counts
    }

    /// All channels of timestep `t` as one `[C][H][W]` plane, as seen by a
    /// dense layer.
    pub fn flatten_timestep(&self, t: usize) -> BitPlane {
        let n = self.shape.plane_len();
        let mut flat = BitPlane::zeros(self.shape.len());
        for c in 0..self.shape.channels {
            for i in Penc::new(self.plane(t, c)) {
                flat.set(c * n + i, true);
            }
        }
        flat
    }

    /// Debug dump: a `T C H W` header, then one hex line per `(t, c)` plane
    /// with bit `i` at byte `i / 8`, bit position `i % 8`.
    pub fn to_dump_string(&self) -> String {
        let s = self.shape;
        let mut out = format!("{} {} {} {}\n", self.timesteps, s.channels, s.height, s.width);
        let bytes = s.plane_len().div_ceil(8);
        for t in 0..self.timesteps {
            for c in 0..s.channels {
                let plane = self.plane(t, c);
                for b in 0..bytes {
                    let byte = (plane.words[b / 8] >> (8 * (b % 8))) as u8;
                    let _ = write!(out, "{byte:02x}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_dump_str(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Encode(format!("spike dump: {msg}"));
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad("header must be four integers")))
            .collect::<Result<_>>()?;
        let [t, c, h, w] = header[..] else {
            return Err(bad("header must be `T C H W`"));
        };
        let mut tensor = SpikeTensor::zeros(t, Shape::new(c, h, w));
        let bytes = (h * w).div_ceil(8);
        for ti in 0..t {
            for ci in 0..c {
                let line = lines.next().ok_or_else(|| bad("too few plane lines"))?.trim();
                if line.len() != 2 * bytes {
                    return Err(bad("plane line has the wrong length"));
                }
                let off = tensor.plane_offset(ti, ci);
                for b in 0..bytes {
                    let byte = u8::from_str_radix(&line[2 * b..2 * b + 2], 16).map_err(|_| bad("non-hex character"))?;
                    tensor.bits[off + b / 8] |= (byte as u64) << (8 * (b % 8));
                }
                let padding = tensor.plane(ti, ci).words.last().map_or(0, |last| {
                    let used = (h * w) % WORD;
                    if used == 0 {
                        0
                    } else {
                        last >> used
                    }
                });
                if padding != 0 {
                    return Err(bad("bits set beyond the plane length"));
                }
            }
        }
        Ok(tensor)
    }
}

/// Input image, row-major `[C][H][W]` intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub shape: Shape,
    pub pixels: Vec<f32>,
}

impl Image {
    pub fn new(shape: Shape, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != shape.len() {
            return Err(Error::Encode(format!(
                "image has {} pixels, shape {shape} needs {}",
                pixels.len(),
                shape.len()
            )));
        }
        Ok(Image { shape, pixels })
    }

    pub fn filled(shape: Shape, value: f32) -> Self {
        Image {
            shape,
            pixels: vec![value; shape.len()],
        }
    }

    /// Decode a flat little-endian `f32` tensor.
    pub fn from_le_bytes(shape: Shape, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 4 * shape.len() {
            return Err(Error::Encode(format!(
                "image file has {} bytes, shape {shape} needs {}",
                bytes.len(),
                4 * shape.len()
            )));
        }
        let pixels = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Image::new(shape, pixels)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.to_le_bytes()).collect()
    }

    pub fn read(path: &Path, shape: Shape) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_le_bytes(shape, &bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_le_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Stream selector for plane `(t, c)`; the flat pixel index is the position
/// within the stream.
fn stream_id(t: usize, c: usize) -> u64 {
    ((t as u64) << 32) | c as u64
}

/// Bernoulli rate coding. Pixel `(c, i)` at timestep `t` spikes when the
/// `i`-th 64-bit output of ChaCha8 (key = `seed`, stream = `(t, c)`),
/// scaled to `[0, 1)` with 53 bits, is below the intensity.
pub fn rate_encode(image: &Image, timesteps: usize, seed: u64) -> Result<SpikeTensor> {
    if let Some((i, p)) = image.pixels.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Encode(format!("pixel {i} = {p} is outside [0, 1]")));
    }
    let shape = image.shape;
    let n = shape.plane_len();
    let mut tensor = SpikeTensor::zeros(timesteps, shape);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..timesteps {
        for c in 0..shape.channels {
            rng.set_stream(stream_id(t, c));
            rng.set_word_pos(0);
            for (i, &p) in image.pixels[c * n..(c + 1) * n].iter().enumerate() {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < p as f64 {
                    tensor.set_index(t, c, i);
                }
            }
        }
    }
    Ok(tensor)
}

/// Population-decoded classification result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub class: usize,
    /// No output neuron fired; `class` is then 0 by the tie-break rule.
    pub no_spike: bool,
    pub class_totals: Vec<u64>,
}

/// Argmax over classes of the summed spike counts of each class's
/// contiguous block of `pop_per_class` neurons. Ties go to the lower class.
pub fn pop_decode(spike_counts: &[u64], classes: usize, pop_per_class: usize) -> Decision {
    assert_eq!(
        spike_counts.len(),
        classes * pop_per_class,
        "spike_counts must hold classes x pop_per_class entries"
    );
    let class_totals: Vec<u64> = spike_counts.chunks(pop_per_class).map(|b| b.iter().sum()).collect();
    let mut class = 0;
    for (c, &total) in class_totals.iter().enumerate() {
        if total > class_totals[class] {
            class = c;
        }
    }
    Decision {
        class,
        no_spike: class_totals.iter().all(|&t| t == 0),
        class_totals,
    }
}
