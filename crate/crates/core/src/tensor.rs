//! Feature maps, channel stacks and kernels, plus the three spatial
//! primitives the reference engine is built from: zero padding,
//! bed-of-nails upsampling and valid cross-correlation.

use std::fmt::Debug;

use num_traits::Float;

use crate::error::{ConvError, Result};

/// Scalar type the engines run on. `f32` is the working precision; `f64`
/// exists for oracle comparisons.
pub trait Element: Float + Debug + Default + Send + Sync + 'static {
    /// Width in bytes of one stored value.
    const BYTES: usize;
}

impl Element for f32 {
    const BYTES: usize = 4;
}

impl Element for f64 {
    const BYTES: usize = 8;
}

/// A single `height x width` plane, row-major.
///
/// Also used for rectangular weight windows (the segregated sub-kernels),
/// since those are nothing more than small planes.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap2D<T = f32> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Element> FeatureMap2D<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(ConvError::EmptyMap { height, width });
        }
        if data.len() != height * width {
            return Err(ConvError::ShapeMismatch {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![T::zero(); height * width])
    }

    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a map from nested rows. Panics on ragged or empty input; meant
    /// for literals in tests and examples.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(
            rows.iter().all(|r| r.as_ref().len() == width),
            "ragged rows"
        );
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(height, width, data).expect("from_rows needs a non-empty rectangle")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.width).map(<[T]>::to_vec).collect()
    }

    pub fn map<U: Element>(&self, f: impl Fn(T) -> U) -> FeatureMap2D<U> {
        FeatureMap2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `C` planes of identical shape stored contiguously, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor<T = f32> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Element> ChannelTensor<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(ConvError::RaggedTensor);
        }
        if height == 0 || width == 0 {
            return Err(ConvError::EmptyMap { height, width });
        }
        if data.len() != channels * height * width {
            return Err(ConvError::ShapeMismatch {
                height: channels * height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(
            channels,
            height,
            width,
            vec![T::zero(); channels * height * width],
        )
    }

    pub fn from_planes(planes: Vec<FeatureMap2D<T>>) -> Result<Self> {
        let first = planes.first().ok_or(ConvError::RaggedTensor)?;
        let (height, width) = first.dims();
        if planes.iter().any(|p| p.dims() != (height, width)) {
            return Err(ConvError::RaggedTensor);
        }
        let channels = planes.len();
        let data = planes
            .into_iter()
            .flat_map(FeatureMap2D::into_vec)
            .collect();
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let sz = self.height * self.width;
        &self.data[c * sz..(c + 1) * sz]
    }

    pub fn channel(&self, c: usize) -> FeatureMap2D<T> {
        FeatureMap2D {
            height: self.height,
            width: self.width,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn planes(&self) -> impl Iterator<Item = FeatureMap2D<T>> + '_ {
        (0..self.channels).map(|c| self.channel(c))
    }

    pub fn map<U: Element>(&self, f: impl Fn(T) -> U) -> ChannelTensor<U> {
        ChannelTensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// One square `n x n` kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D<T = f32> {
    n: usize,
    weights: FeatureMap2D<T>,
}

impl<T: Element> Kernel2D<T> {
    pub fn new(n: usize, data: Vec<T>) -> Result<Self> {
        Ok(Self {
            n,
            weights: FeatureMap2D::new(n, n, data)?,
        })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let weights = FeatureMap2D::from_rows(rows);
        assert_eq!(weights.height(), weights.width(), "kernel must be square");
        Self {
            n: weights.height(),
            weights,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.weights.get(row, col)
    }

    pub fn as_slice(&self) -> &[T] {
        self.weights.as_slice()
    }

    pub fn as_map(&self) -> &FeatureMap2D<T> {
        &self.weights
    }

    pub fn map<U: Element>(&self, f: impl Fn(T) -> U) -> Kernel2D<U> {
        Kernel2D {
            n: self.n,
            weights: self.weights.map(f),
        }
    }
}

impl<T: Element> TryFrom<FeatureMap2D<T>> for Kernel2D<T> {
    type Error = ConvError;

    fn try_from(map: FeatureMap2D<T>) -> Result<Self> {
        if map.height() != map.width() {
            return Err(ConvError::ShapeMismatch {
                height: map.height(),
                width: map.width(),
                len: map.len(),
            });
        }
        Ok(Self {
            n: map.height(),
            weights: map,
        })
    }
}

/// Kernels for one layer, indexed `[c_in][c_out]`, all `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelBank<T = f32> {
    c_in: usize,
    c_out: usize,
    n: usize,
    data: Vec<T>,
}

impl<T: Element> KernelBank<T> {
    /// `data` holds `c_in * c_out` kernels back to back, `[c_in][c_out][n][n]`.
    pub fn new(c_in: usize, c_out: usize, n: usize, data: Vec<T>) -> Result<Self> {
        if c_in == 0 || c_out == 0 || n == 0 {
            return Err(ConvError::InconsistentBank(format!(
                "empty bank {c_in}x{c_out} of {n}x{n} kernels"
            )));
        }
        if data.len() != c_in * c_out * n * n {
            return Err(ConvError::InconsistentBank(format!(
                "expected {} weights, got {}",
                c_in * c_out * n * n,
                data.len()
            )));
        }
        Ok(Self {
            c_in,
            c_out,
            n,
            data,
        })
    }

    /// Builds a bank from nested kernels `kernels[ci][co]`.
    pub fn from_kernels(kernels: Vec<Vec<Kernel2D<T>>>) -> Result<Self> {
        let c_in = kernels.len();
        let c_out = kernels.first().map_or(0, Vec::len);
        let n = kernels
            .first()
            .and_then(|row| row.first())
            .map_or(0, Kernel2D::size);
        let mut data = Vec::with_capacity(c_in * c_out * n * n);
        for (ci, row) in kernels.iter().enumerate() {
            if row.len() != c_out {
                return Err(ConvError::InconsistentBank(format!(
                    "row {ci} has {} kernels, expected {c_out}",
                    row.len()
                )));
            }
            for (co, k) in row.iter().enumerate() {
                if k.size() != n {
                    return Err(ConvError::InconsistentBank(format!(
                        "kernel [{ci}][{co}] is {0}x{0}, expected {n}x{n}",
                        k.size()
                    )));
                }
                data.extend_from_slice(k.as_slice());
            }
        }
        Self::new(c_in, c_out, n, data)
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn kernel_size(&self) -> usize {
        self.n
    }

    pub fn weights(&self, ci: usize, co: usize) -> &[T] {
        let sz = self.n * self.n;
        let at = (ci * self.c_out + co) * sz;
        &self.data[at..at + sz]
    }

    pub fn kernel(&self, ci: usize, co: usize) -> Kernel2D<T> {
        Kernel2D::new(self.n, self.weights(ci, co).to_vec()).expect("bank invariant")
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Element>(&self, f: impl Fn(T) -> U) -> KernelBank<U> {
        KernelBank {
            c_in: self.c_in,
            c_out: self.c_out,
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Surrounds `map` with `p` rows/columns of zeros on every side.
pub fn pad_zero<T: Element>(map: &FeatureMap2D<T>, p: usize) -> FeatureMap2D<T> {
    let (h, w) = map.dims();
    let pw = w + 2 * p;
    let mut out = vec![T::zero(); (h + 2 * p) * pw];
    for (i, row) in map.as_slice().chunks(w).enumerate() {
        let at = (i + p) * pw + p;
        out[at..at + w].copy_from_slice(row);
    }
    FeatureMap2D {
        height: h + 2 * p,
        width: pw,
        data: out,
    }
}

/// Bed-of-nails upsampling: `I[i][j]` lands on `U[2i][2j]`, every other
/// position of the `(2H-1) x (2W-1)` output is zero.
pub fn upsample_bed_of_nails<T: Element>(map: &FeatureMap2D<T>) -> FeatureMap2D<T> {
    upsample_padded(map, 0)
}

/// Bed-of-nails upsampling and zero padding fused into one allocation;
/// identical to `pad_zero(&upsample_bed_of_nails(map), p)`.
pub fn upsample_padded<T: Element>(map: &FeatureMap2D<T>, p: usize) -> FeatureMap2D<T> {
    let (h, w) = map.dims();
    let uh = 2 * h - 1 + 2 * p;
    let uw = 2 * w - 1 + 2 * p;
    let mut out = vec![T::zero(); uh * uw];
    scatter_upsampled(map.as_slice(), h, w, p, &mut out);
    FeatureMap2D {
        height: uh,
        width: uw,
        data: out,
    }
}

pub(crate) fn scatter_upsampled<T: Element>(
    src: &[T],
    h: usize,
    w: usize,
    p: usize,
    dst: &mut [T],
) {
    let uw = 2 * w - 1 + 2 * p;
    for i in 0..h {
        let base = (2 * i + p) * uw + p;
        for j in 0..w {
            dst[base + 2 * j] = src[i * w + j];
        }
    }
}

/// Valid cross-correlation (no kernel flip). The kernel may be rectangular.
///
/// `out[i][j] = sum_{u,v} map[i+u][j+v] * kernel[u][v]`, summed with `u`
/// outer and `v` inner, starting from zero.
pub fn cross_correlate_valid<T: Element>(
    map: &FeatureMap2D<T>,
    kernel: &FeatureMap2D<T>,
) -> Result<FeatureMap2D<T>> {
    let (h, w) = map.dims();
    let (kh, kw) = kernel.dims();
    if kh > h || kw > w {
        return Err(ConvError::KernelTooLarge {
            kh,
            kw,
            height: h,
            width: w,
        });
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Vec::with_capacity(oh * ow);
    for i in 0..oh {
        for j in 0..ow {
            let mut acc = T::zero();
            for u in 0..kh {
                for v in 0..kw {
                    acc = acc + map.get(i + u, j + v) * kernel.get(u, v);
                }
            }
            out.push(acc);
        }
    }
    Ok(FeatureMap2D {
        height: oh,
        width: ow,
        data: out,
    })
}

/// Tap-major valid correlation, added into a row-strided accumulator.
///
/// `acc` shares the source row stride `src_w`: destination `(a, b)` lives at
/// `acc[a * src_w + b]`, and `acc.len()` must be `(rows - 1) * src_w + cols`.
/// With that layout every tap is a single contiguous multiply-add over `acc`.
/// Positions with `b >= cols` wrap into the next source row and hold
/// garbage; callers copy out only the valid columns.
///
/// Each valid element receives its products in kernel row-major order, the
/// order [`cross_correlate_valid`] uses, so on a zeroed `acc` the valid
/// results are bitwise identical.
///
/// `origin` is the `(row, col)` of the source element read for destination
/// `(0, 0)` under tap `(0, 0)`.
#[inline]
pub(crate) fn correlate_wide<T: Element>(
    src: &[T],
    src_w: usize,
    origin: (usize, usize),
    kernel: &[T],
    kh: usize,
    kw: usize,
    acc: &mut [T],
) {
    let span = acc.len();
    for u in 0..kh {
        for v in 0..kw {
            let k = kernel[u * kw + v];
            let start = (origin.0 + u) * src_w + origin.1 + v;
            for (d, &x) in acc.iter_mut().zip(&src[start..start + span]) {
                *d = *d + x * k;
            }
        }
    }
}

/// Length of a row-strided accumulator for a `rows x cols` block.
#[inline]
pub(crate) fn wide_len(rows: usize, cols: usize, stride: usize) -> usize {
    (rows - 1) * stride + cols
}
