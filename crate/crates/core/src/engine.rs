//! The two stride-2 transpose convolution engines and the multi-channel
//! layer operator built on them.
//!
//! * **Reference**: upsample with bed-of-nails, pad by `P`, then valid
//!   cross-correlation with the full `n x n` kernel.
//! * **Segregated**: pad the raw input by `floor(P / 2)` and, for each output
//!   element, correlate with the single parity sub-kernel selected by the
//!   output coordinate. No upsampled buffer is ever built and no zero is ever
//!   multiplied.
//!
//! For output row `x` the segregated engine picks row parity
//! `r = (x + swap) mod 2` and starts reading the padded input at row
//! `floor((x + r) / 2)`; columns work the same way. `swap` is set for odd `P`.

use rayon::prelude::*;

use crate::error::{ConvError, Result};
use crate::segregation::{
    effective_padding, parity_len, segregate_kernel, subkernel_dims, SubKernelSet,
};
use crate::tensor::{
    correlate_wide, cross_correlate_valid, pad_zero, scatter_upsampled, upsample_padded, wide_len,
    ChannelTensor, Element, FeatureMap2D, Kernel2D, KernelBank,
};

pub const STRIDE: usize = 2;

/// Shape of one stride-2 transpose convolution layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransposeConvSpec {
    pub n_h: usize,
    pub n_w: usize,
    pub n: usize,
    pub pad: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl TransposeConvSpec {
    pub fn new(
        n_h: usize,
        n_w: usize,
        n: usize,
        pad: usize,
        c_in: usize,
        c_out: usize,
    ) -> Result<Self> {
        let spec = Self {
            n_h,
            n_w,
            n,
            pad,
            c_in,
            c_out,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Square single-channel spec.
    pub fn square(size: usize, n: usize, pad: usize) -> Result<Self> {
        Self::new(size, size, n, pad, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_w == 0 {
            return Err(ConvError::EmptyMap {
                height: self.n_h,
                width: self.n_w,
            });
        }
        if self.n < 2 {
            return Err(ConvError::KernelTooSmall(self.n));
        }
        if self.c_in == 0 || self.c_out == 0 {
            return Err(ConvError::InconsistentBank(format!(
                "channel counts must be positive, got {} -> {}",
                self.c_in, self.c_out
            )));
        }
        let reach = 2 * self.pad + 2 * self.n_h.min(self.n_w);
        if reach <= self.n {
            return Err(ConvError::InvalidSpec {
                n_h: self.n_h,
                n_w: self.n_w,
                n: self.n,
                pad: self.pad,
            });
        }
        Ok(())
    }

    /// `(2 N_h + 2P - n, 2 N_w + 2P - n)`
    pub fn output_dims(&self) -> Result<(usize, usize)> {
        self.validate()?;
        Ok((
            STRIDE * self.n_h + 2 * self.pad - self.n,
            STRIDE * self.n_w + 2 * self.pad - self.n,
        ))
    }

    /// Side lengths of the padded bed-of-nails buffer the reference engine
    /// correlates over.
    pub fn upsampled_dims(&self) -> (usize, usize) {
        (
            2 * self.n_h - 1 + 2 * self.pad,
            2 * self.n_w - 1 + 2 * self.pad,
        )
    }

    /// Side lengths of the padded raw input the segregated engine reads.
    pub fn segregated_input_dims(&self) -> (usize, usize) {
        let p = effective_padding(self.pad).p_eff;
        (self.n_h + 2 * p, self.n_w + 2 * p)
    }
}

/// Output dimensions of a stride-2 transpose convolution.
pub fn output_dims(spec: &TransposeConvSpec) -> Result<(usize, usize)> {
    spec.output_dims()
}

/// Which engine a layer runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Reference,
    Segregated,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Reference, Engine::Segregated];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Reference => "reference",
            Engine::Segregated => "segregated",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ref" | "reference" => Ok(Engine::Reference),
            "seg" | "segregated" => Ok(Engine::Segregated),
            other => Err(format!("unknown engine `{other}`")),
        }
    }
}

/// How the layer operator schedules its `(batch item, output channel)` units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// One unit after another on the calling thread.
    Serial,
    /// Units spread over the current rayon pool.
    #[default]
    Parallel,
}

/// Operation counters filled in by the instrumented engine runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    /// Multiplications executed.
    pub products: u64,
    /// Stores into the output buffer.
    pub writes: u64,
}

fn single_spec(dims: (usize, usize), n: usize, pad: usize) -> Result<TransposeConvSpec> {
    TransposeConvSpec::new(dims.0, dims.1, n, pad, 1, 1)
}

/// Conventional transpose convolution: correlate `kernel` over the padded
/// bed-of-nails upsample of `input`.
pub fn transpose_conv_reference<T: Element>(
    input: &FeatureMap2D<T>,
    kernel: &Kernel2D<T>,
    pad: usize,
) -> Result<FeatureMap2D<T>> {
    single_spec(input.dims(), kernel.size(), pad)?;
    cross_correlate_valid(&upsample_padded(input, pad), kernel.as_map())
}

/// [`transpose_conv_reference`] with every product and output store counted.
pub fn transpose_conv_reference_counted<T: Element>(
    input: &FeatureMap2D<T>,
    kernel: &Kernel2D<T>,
    pad: usize,
    counts: &mut OpCounts,
) -> Result<FeatureMap2D<T>> {
    let (m_h, m_w) = single_spec(input.dims(), kernel.size(), pad)?.output_dims()?;
    let up = upsample_padded(input, pad);
    let n = kernel.size();
    let mut out = FeatureMap2D::zeros(m_h, m_w)?;
    for x in 0..m_h {
        for y in 0..m_w {
            let mut acc = T::zero();
            for u in 0..n {
                for v in 0..n {
                    acc = acc + up.get(x + u, y + v) * kernel.get(u, v);
                    counts.products += 1;
                }
            }
            out.set(x, y, acc);
            counts.writes += 1;
        }
    }
    Ok(out)
}

/// Unified kernel-segregated transpose convolution.
///
/// Every output element selects one sub-kernel from its coordinate parity
/// and is written exactly once.
pub fn transpose_conv_segregated<T: Element>(
    input: &FeatureMap2D<T>,
    subkernels: &SubKernelSet<T>,
    pad: usize,
) -> Result<FeatureMap2D<T>> {
    transpose_conv_segregated_counted(input, subkernels, pad, &mut OpCounts::default())
}

/// [`transpose_conv_segregated`] with every product and output store counted.
pub fn transpose_conv_segregated_counted<T: Element>(
    input: &FeatureMap2D<T>,
    subkernels: &SubKernelSet<T>,
    pad: usize,
    counts: &mut OpCounts,
) -> Result<FeatureMap2D<T>> {
    let (m_h, m_w) = single_spec(input.dims(), subkernels.kernel_size(), pad)?.output_dims()?;
    let eff = effective_padding(pad);
    let padded = pad_zero(input, eff.p_eff);
    let swap = usize::from(eff.swap);
    let mut out = FeatureMap2D::zeros(m_h, m_w)?;
    for x in 0..m_h {
        let r = (x + swap) % 2;
        let row0 = (x + r) / 2;
        for y in 0..m_w {
            let s = (y + swap) % 2;
            let col0 = (y + s) / 2;
            let k = subkernels.get(r, s);
            let mut acc = T::zero();
            for u in 0..k.height() {
                for v in 0..k.width() {
                    acc = acc + padded.get(row0 + u, col0 + v) * k.get(u, v);
                    counts.products += 1;
                }
            }
            out.set(x, y, acc);
            counts.writes += 1;
        }
    }
    Ok(out)
}

fn check_layer<T: Element>(
    input: &ChannelTensor<T>,
    bank: &KernelBank<T>,
    pad: usize,
) -> Result<TransposeConvSpec> {
    if input.channels() != bank.c_in() {
        return Err(ConvError::ChannelMismatch {
            expected: bank.c_in(),
            got: input.channels(),
        });
    }
    TransposeConvSpec::new(
        input.height(),
        input.width(),
        bank.kernel_size(),
        pad,
        bank.c_in(),
        bank.c_out(),
    )
}

/// One transpose convolution layer:
/// `Y[co] = sum over ci of transpose_conv(X[ci], W[ci][co], P)`, no bias.
///
/// Each output element is accumulated in a fixed order (input channel
/// ascending, then kernel taps row-major) so the result does not depend on
/// how output channels are scheduled.
pub fn layer_forward<T: Element>(
    input: &ChannelTensor<T>,
    bank: &KernelBank<T>,
    pad: usize,
    engine: Engine,
) -> Result<ChannelTensor<T>> {
    layer_forward_with(input, bank, pad, engine, Execution::Parallel)
}

pub fn layer_forward_with<T: Element>(
    input: &ChannelTensor<T>,
    bank: &KernelBank<T>,
    pad: usize,
    engine: Engine,
    exec: Execution,
) -> Result<ChannelTensor<T>> {
    let mut out = layer_forward_batch(std::slice::from_ref(input), bank, pad, engine, exec)?;
    Ok(out.pop().expect("one item in, one item out"))
}

/// A kernel bank cut into parity sub-kernels once, ahead of inference.
///
/// Stored `[co][ci]`, each pair holding `k00, k01, k10, k11` back to back,
/// so one output channel streams its weights contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct SegregatedBank<T = f32> {
    c_in: usize,
    c_out: usize,
    n: usize,
    data: Vec<T>,
}

/// Start of `k_rs` within one pair's `n * n` block.
#[inline]
fn class_offset(n: usize, r: usize, s: usize) -> usize {
    (0..(r << 1 | s))
        .map(|c| {
            let (h, w) = subkernel_dims(n, c >> 1, c & 1);
            h * w
        })
        .sum()
}

impl<T: Element> SegregatedBank<T> {
    pub fn new(bank: &KernelBank<T>) -> Result<Self> {
        let n = bank.kernel_size();
        if n < 2 {
            return Err(ConvError::KernelTooSmall(n));
        }
        let mut data = Vec::with_capacity(bank.as_slice().len());
        for co in 0..bank.c_out() {
            for ci in 0..bank.c_in() {
                let k = bank.weights(ci, co);
                for class in 0..4 {
                    let (r, s) = (class >> 1, class & 1);
                    let (rows, cols) = subkernel_dims(n, r, s);
                    for u in 0..rows {
                        for v in 0..cols {
                            data.push(k[(2 * u + r) * n + 2 * v + s]);
                        }
                    }
                }
            }
        }
        Ok(Self {
            c_in: bank.c_in(),
            c_out: bank.c_out(),
            n,
            data,
        })
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

    /// Sub-kernel `k_rs` of pair `(ci, co)`, row-major.
    #[inline]
    pub fn subkernel(&self, ci: usize, co: usize, r: usize, s: usize) -> &[T] {
        let (rows, cols) = subkernel_dims(self.n, r, s);
        let at = (co * self.c_in + ci) * self.n * self.n + class_offset(self.n, r, s);
        &self.data[at..at + rows * cols]
    }

    /// The four sub-kernels of pair `(ci, co)` as a [`SubKernelSet`].
    pub fn set(&self, ci: usize, co: usize) -> SubKernelSet<T> {
        let part = |r, s| {
            let (rows, cols) = subkernel_dims(self.n, r, s);
            FeatureMap2D::new(rows, cols, self.subkernel(ci, co, r, s).to_vec()).expect("dims")
        };
        SubKernelSet::from_parts(self.n, part(0, 0), part(0, 1), part(1, 0), part(1, 1))
            .expect("dims")
    }
}

/// Runs the layer over independent inputs. Work is split into
/// `(batch item, output channel)` units that each write a disjoint plane.
///
/// The segregated engine cuts `bank` into sub-kernels first; use
/// [`layer_forward_segregated`] with a [`SegregatedBank`] to keep that out
/// of the inference path.
pub fn layer_forward_batch<T: Element>(
    inputs: &[ChannelTensor<T>],
    bank: &KernelBank<T>,
    pad: usize,
    engine: Engine,
    exec: Execution,
) -> Result<Vec<ChannelTensor<T>>> {
    match engine {
        Engine::Reference => run_layer(inputs, Weights::Full(bank), pad, exec),
        Engine::Segregated => {
            // validate shapes before the (possibly large) segregation
            if let Some(first) = inputs.first() {
                check_layer(first, bank, pad)?;
            }
            run_layer(
                inputs,
                Weights::Segregated(&SegregatedBank::new(bank)?),
                pad,
                exec,
            )
        }
    }
}

/// Segregated engine over a pre-segregated bank.
pub fn layer_forward_segregated<T: Element>(
    inputs: &[ChannelTensor<T>],
    bank: &SegregatedBank<T>,
    pad: usize,
    exec: Execution,
) -> Result<Vec<ChannelTensor<T>>> {
    run_layer(inputs, Weights::Segregated(bank), pad, exec)
}

#[derive(Clone, Copy)]
enum Weights<'a, T> {
    Full(&'a KernelBank<T>),
    Segregated(&'a SegregatedBank<T>),
}

impl<T: Element> Weights<'_, T> {
    fn shape(&self) -> (usize, usize, usize) {
        match self {
            Weights::Full(b) => (b.c_in(), b.c_out(), b.kernel_size()),
            Weights::Segregated(b) => (b.c_in(), b.c_out(), b.kernel_size()),
        }
    }
}

fn run_layer<T: Element>(
    inputs: &[ChannelTensor<T>],
    weights: Weights<'_, T>,
    pad: usize,
    exec: Execution,
) -> Result<Vec<ChannelTensor<T>>> {
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let (c_in, c_out, n) = weights.shape();
    if first.channels() != c_in {
        return Err(ConvError::ChannelMismatch {
            expected: c_in,
            got: first.channels(),
        });
    }
    let spec = TransposeConvSpec::new(first.height(), first.width(), n, pad, c_in, c_out)?;
    for item in inputs {
        if item.shape() != first.shape() {
            return Err(ConvError::RaggedTensor);
        }
    }
    let (m_h, m_w) = spec.output_dims()?;
    let plane = m_h * m_w;

    let prepared: Vec<Prepared<T>> = inputs
        .iter()
        .map(|x| Prepared::new(x, weights, &spec))
        .collect();

    let mut outputs: Vec<Vec<T>> = vec![vec![T::zero(); spec.c_out * plane]; inputs.len()];
    let mut units: Vec<(usize, usize, &mut [T])> = Vec::with_capacity(inputs.len() * spec.c_out);
    for (b, buf) in outputs.iter_mut().enumerate() {
        for (co, dst) in buf.chunks_mut(plane).enumerate() {
            units.push((b, co, dst));
        }
    }
    let run = |(b, co, dst): (usize, usize, &mut [T])| prepared[b].output_channel(co, &spec, dst);
    match exec {
        Execution::Serial => units.into_iter().for_each(run),
        Execution::Parallel => units.into_par_iter().for_each(run),
    }

    outputs
        .into_iter()
        .map(|data| ChannelTensor::new(spec.c_out, m_h, m_w, data))
        .collect()
}

/// Per-input state shared by every output channel of one batch item.
enum Prepared<'a, T> {
    /// Padded upsampled planes, one per input channel.
    Reference {
        upsampled: Vec<T>,
        dims: (usize, usize),
        bank: &'a KernelBank<T>,
    },
    /// Padded raw planes.
    Segregated {
        padded: Vec<T>,
        dims: (usize, usize),
        bank: &'a SegregatedBank<T>,
        swap: usize,
    },
}

impl<'a, T: Element> Prepared<'a, T> {
    fn new(x: &ChannelTensor<T>, weights: Weights<'a, T>, spec: &TransposeConvSpec) -> Self {
        let (h, w) = (x.height(), x.width());
        match weights {
            Weights::Full(bank) => {
                let dims = spec.upsampled_dims();
                let mut upsampled = vec![T::zero(); spec.c_in * dims.0 * dims.1];
                for (ci, dst) in upsampled.chunks_mut(dims.0 * dims.1).enumerate() {
                    scatter_upsampled(x.plane(ci), h, w, spec.pad, dst);
                }
                Prepared::Reference {
                    upsampled,
                    dims,
                    bank,
                }
            }
            Weights::Segregated(bank) => {
                let eff = effective_padding(spec.pad);
                let dims = spec.segregated_input_dims();
                let p = eff.p_eff;
                let mut padded = vec![T::zero(); spec.c_in * dims.0 * dims.1];
                for (ci, dst) in padded.chunks_mut(dims.0 * dims.1).enumerate() {
                    for (i, row) in x.plane(ci).chunks(w).enumerate() {
                        let at = (i + p) * dims.1 + p;
                        dst[at..at + w].copy_from_slice(row);
                    }
                }
                Prepared::Segregated {
                    padded,
                    dims,
                    bank,
                    swap: usize::from(eff.swap),
                }
            }
        }
    }

    fn output_channel(&self, co: usize, spec: &TransposeConvSpec, dst: &mut [T]) {
        let (m_h, m_w) = spec.output_dims().expect("validated");
        match self {
            Prepared::Reference {
                upsampled,
                dims,
                bank,
            } => {
                let sz = dims.0 * dims.1;
                let mut acc = vec![T::zero(); wide_len(m_h, m_w, dims.1)];
                for ci in 0..spec.c_in {
                    correlate_wide(
                        &upsampled[ci * sz..(ci + 1) * sz],
                        dims.1,
                        (0, 0),
                        bank.weights(ci, co),
                        spec.n,
                        spec.n,
                        &mut acc,
                    );
                }
                for (x, row) in dst.chunks_mut(m_w).enumerate() {
                    row.copy_from_slice(&acc[x * dims.1..x * dims.1 + m_w]);
                }
            }
            Prepared::Segregated {
                padded,
                dims,
                bank,
                swap,
            } => {
                let sz = dims.0 * dims.1;
                let n = spec.n;
                // One contiguous accumulator per output parity class, laid
                // out back to back in `acc`; they are interleaved into `dst`
                // once every input channel has been summed.
                let mut classes = Vec::with_capacity(4);
                let mut at = 0;
                for px in 0..2 {
                    for py in 0..2 {
                        let (rows, cols) = (parity_len(m_h, px), parity_len(m_w, py));
                        if rows == 0 || cols == 0 {
                            continue;
                        }
                        let (r, s) = ((px + swap) % 2, (py + swap) % 2);
                        let (kh, kw) = subkernel_dims(n, r, s);
                        classes.push(ParityClass {
                            px,
                            py,
                            rows,
                            cols,
                            origin: ((px + r) / 2, (py + s) / 2),
                            k_at: class_offset(n, r, s),
                            kh,
                            kw,
                            acc_at: at,
                        });
                        at += wide_len(rows, cols, dims.1);
                    }
                }
                let mut acc = vec![T::zero(); at];
                let pair_weights = &bank.data[co * spec.c_in * n * n..(co + 1) * spec.c_in * n * n];
                for ci in 0..spec.c_in {
                    let src = &padded[ci * sz..(ci + 1) * sz];
                    let w = &pair_weights[ci * n * n..(ci + 1) * n * n];
                    for c in &classes {
                        correlate_wide(
                            src,
                            dims.1,
                            c.origin,
                            &w[c.k_at..c.k_at + c.kh * c.kw],
                            c.kh,
                            c.kw,
                            &mut acc[c.acc_at..c.acc_at + wide_len(c.rows, c.cols, dims.1)],
                        );
                    }
                }
                for c in &classes {
                    for a in 0..c.rows {
                        let row = &acc[c.acc_at + a * dims.1..c.acc_at + a * dims.1 + c.cols];
                        let base = (c.px + 2 * a) * m_w + c.py;
                        for (b, &v) in row.iter().enumerate() {
                            dst[base + 2 * b] = v;
                        }
                    }
                }
            }
        }
    }
}

/// Output coordinates sharing one row parity and one column parity, and
/// the sub-kernel they all use.
struct ParityClass {
    px: usize,
    py: usize,
    rows: usize,
    cols: usize,
    origin: (usize, usize),
    k_at: usize,
    kh: usize,
    kw: usize,
    acc_at: usize,
}

/// Element-at-a-time layer evaluation with operation counting.
///
/// Follows the same per-element accumulation order as [`layer_forward`],
/// holding the running sum in a register and storing each output element
/// once. Slow; meant for instrumentation and cross-checks.
pub fn layer_forward_counted<T: Element>(
    input: &ChannelTensor<T>,
    bank: &KernelBank<T>,
    pad: usize,
    engine: Engine,
    counts: &mut OpCounts,
) -> Result<ChannelTensor<T>> {
    let spec = check_layer(input, bank, pad)?;
    let (m_h, m_w) = spec.output_dims()?;
    let n = spec.n;
    let planes: Vec<FeatureMap2D<T>> = input.planes().collect();
    let mut out = vec![T::zero(); spec.c_out * m_h * m_w];

    match engine {
        Engine::Reference => {
            let up: Vec<_> = planes.iter().map(|p| upsample_padded(p, pad)).collect();
            for co in 0..spec.c_out {
                for x in 0..m_h {
                    for y in 0..m_w {
                        let mut acc = T::zero();
                        for (ci, u_map) in up.iter().enumerate() {
                            let k = bank.weights(ci, co);
                            for u in 0..n {
                                for v in 0..n {
                                    acc = acc + u_map.get(x + u, y + v) * k[u * n + v];
                                    counts.products += 1;
                                }
                            }
                        }
                        out[(co * m_h + x) * m_w + y] = acc;
                        counts.writes += 1;
                    }
                }
            }
        }
        Engine::Segregated => {
            let eff = effective_padding(pad);
            let swap = usize::from(eff.swap);
            let padded: Vec<_> = planes.iter().map(|p| pad_zero(p, eff.p_eff)).collect();
            let sets = (0..spec.c_in)
                .map(|ci| {
                    (0..spec.c_out)
                        .map(|co| segregate_kernel(&bank.kernel(ci, co)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for co in 0..spec.c_out {
                for x in 0..m_h {
                    let r = (x + swap) % 2;
                    let row0 = (x + r) / 2;
                    for y in 0..m_w {
                        let s = (y + swap) % 2;
                        let col0 = (y + s) / 2;
                        let mut acc = T::zero();
                        for (ci, src) in padded.iter().enumerate() {
                            let k = sets[ci][co].get(r, s);
                            for u in 0..k.height() {
                                for v in 0..k.width() {
                                    acc = acc + src.get(row0 + u, col0 + v) * k.get(u, v);
                                    counts.products += 1;
                                }
                            }
                        }
                        out[(co * m_h + x) * m_w + y] = acc;
                        counts.writes += 1;
                    }
                }
            }
        }
    }
    ChannelTensor::new(spec.c_out, m_h, m_w, out)
}

/// Outcome of comparing two tensors element-wise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonReport {
    pub shape_match: bool,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    /// Elements violating `|a - b| <= abs_tol + rel_tol * max(|a|, |b|)`.
    pub failures: usize,
    pub pass: bool,
}

/// Element-wise tolerance check. A shape mismatch is reported as a failure.
pub fn compare_outputs<T: Element>(
    a: &ChannelTensor<T>,
    b: &ChannelTensor<T>,
    rel_tol: f64,
    abs_tol: f64,
) -> ComparisonReport {
    if a.shape() != b.shape() {
        return ComparisonReport {
            shape_match: false,
            max_abs_diff: f64::INFINITY,
            max_rel_diff: f64::INFINITY,
            failures: 0,
            pass: false,
        };
    }
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut failures = 0;
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        let (x, y) = (
            x.to_f64().unwrap_or(f64::NAN),
            y.to_f64().unwrap_or(f64::NAN),
        );
        let diff = (x - y).abs();
        let scale = x.abs().max(y.abs());
        let rel = if diff == 0.0 { 0.0 } else { diff / scale };
        if diff.is_nan() {
            max_abs = f64::NAN;
            max_rel = f64::NAN;
            failures += 1;
            continue;
        }
        max_abs = max_abs.max(diff);
        max_rel = max_rel.max(rel);
        if diff > abs_tol + rel_tol * scale {
            failures += 1;
        }
    }
    ComparisonReport {
        shape_match: true,
        max_abs_diff: max_abs,
        max_rel_diff: max_rel,
        failures,
        pass: failures == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f32; 2]]) -> FeatureMap2D<f32> {
        FeatureMap2D::from_rows(rows)
    }

    #[test]
    fn output_dims_examples() {
        assert_eq!(
            TransposeConvSpec::square(4, 3, 0)
                .unwrap()
                .output_dims()
                .unwrap(),
            (5, 5)
        );
        assert_eq!(
            TransposeConvSpec::square(4, 5, 2)
                .unwrap()
                .output_dims()
                .unwrap(),
            (7, 7)
        );
        assert_eq!(
            TransposeConvSpec::square(4, 4, 2)
                .unwrap()
                .output_dims()
                .unwrap(),
            (8, 8)
        );
        assert_eq!(
            TransposeConvSpec::new(3, 5, 3, 1, 1, 1)
                .unwrap()
                .output_dims()
                .unwrap(),
            (5, 9)
        );
    }

    #[test]
    fn output_dims_rejects_empty_output() {
        assert!(matches!(
            TransposeConvSpec::square(1, 2, 0),
            Err(ConvError::InvalidSpec { .. })
        ));
        assert!(matches!(
            TransposeConvSpec::new(5, 2, 4, 0, 1, 1),
            Err(ConvError::InvalidSpec { .. })
        ));
        assert!(TransposeConvSpec::square(1, 2, 1).is_ok());
        assert!(matches!(
            TransposeConvSpec::square(4, 1, 0),
            Err(ConvError::KernelTooSmall(1))
        ));
    }

    #[test]
    fn reference_examples() {
        let i = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let ones = Kernel2D::from_rows(&[[1.0f32, 1.0], [1.0, 1.0]]);
        assert_eq!(
            transpose_conv_reference(&i, &ones, 0).unwrap().to_rows(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        let k = Kernel2D::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]);
        assert_eq!(
            transpose_conv_reference(&i, &k, 0).unwrap().to_rows(),
            vec![vec![1.0, 4.0], vec![9.0, 16.0]]
        );
        let z = FeatureMap2D::<f32>::zeros(3, 5).unwrap();
        let out =
            transpose_conv_reference(&z, &Kernel2D::from_rows(&[[1.0f32, -2.0], [0.5, 3.0]]), 1)
                .unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn segregated_small_example() {
        let i = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let k = Kernel2D::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]);
        let s = segregate_kernel(&k).unwrap();
        assert_eq!(
            transpose_conv_segregated(&i, &s, 0).unwrap().to_rows(),
            vec![vec![1.0, 4.0], vec![9.0, 16.0]]
        );
    }

    #[test]
    fn segregated_layout_n5_p2() {
        let spec = TransposeConvSpec::square(4, 5, 2).unwrap();
        assert_eq!(spec.segregated_input_dims(), (6, 6));
        let input = FeatureMap2D::new(4, 4, (0..16).map(|v| v as f32).collect()).unwrap();
        let k = Kernel2D::new(5, (0..25).map(|v| (v as f32) * 0.1).collect()).unwrap();
        let s = segregate_kernel(&k).unwrap();
        let seg = transpose_conv_segregated(&input, &s, 2).unwrap();
        assert_eq!(seg.dims(), (7, 7));
        let reference = transpose_conv_reference(&input, &k, 2).unwrap();
        for (a, b) in seg.as_slice().iter().zip(reference.as_slice()) {
            assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0));
        }
    }

    #[test]
    fn odd_output_writes_each_element_once() {
        let input = FeatureMap2D::filled(4, 4, 1.0f32).unwrap();
        let k = Kernel2D::new(5, vec![1.0; 25]).unwrap();
        let mut counts = OpCounts::default();
        let out = transpose_conv_segregated_counted(
            &input,
            &segregate_kernel(&k).unwrap(),
            0,
            &mut counts,
        )
        .unwrap();
        assert_eq!(out.dims(), (3, 3));
        assert_eq!(counts.writes, 9);
        assert_eq!(counts.products, 64);
    }

    #[test]
    fn layer_reduces_to_single_map() {
        let x = ChannelTensor::from_planes(vec![m(&[[1.0, 2.0], [3.0, 4.0]])]).unwrap();
        let k = Kernel2D::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]);
        let bank = KernelBank::from_kernels(vec![vec![k.clone()]]).unwrap();
        for engine in Engine::ALL {
            let y = layer_forward(&x, &bank, 0, engine).unwrap();
            assert_eq!(
                y.channel(0),
                transpose_conv_reference(&x.channel(0), &k, 0).unwrap()
            );
        }
    }

    #[test]
    fn zero_kernel_channel_contributes_nothing() {
        let a = m(&[[1.0, -2.0], [0.5, 4.0]]);
        let b = m(&[[9.0, 9.0], [9.0, 9.0]]);
        let k = Kernel2D::from_rows(&[[1.0f32, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]);
        let zero = Kernel2D::new(3, vec![0.0f32; 9]).unwrap();
        let one = ChannelTensor::from_planes(vec![a.clone()]).unwrap();
        let two = ChannelTensor::from_planes(vec![a, b]).unwrap();
        let bank1 = KernelBank::from_kernels(vec![vec![k.clone()]]).unwrap();
        let bank2 = KernelBank::from_kernels(vec![vec![k], vec![zero]]).unwrap();
        for engine in Engine::ALL {
            assert_eq!(
                layer_forward(&two, &bank2, 1, engine).unwrap(),
                layer_forward(&one, &bank1, 1, engine).unwrap()
            );
        }
    }

    #[test]
    fn layer_rejects_channel_mismatch() {
        let x = ChannelTensor::<f32>::zeros(3, 4, 4).unwrap();
        let bank = KernelBank::new(2, 1, 3, vec![0.0; 18]).unwrap();
        assert_eq!(
            layer_forward(&x, &bank, 0, Engine::Segregated),
            Err(ConvError::ChannelMismatch {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn segregated_bank_matches_per_kernel_segregation() {
        let data: Vec<f32> = (0..2 * 3 * 25).map(|v| v as f32).collect();
        let bank = KernelBank::new(2, 3, 5, data).unwrap();
        let seg = SegregatedBank::new(&bank).unwrap();
        for ci in 0..2 {
            for co in 0..3 {
                assert_eq!(
                    seg.set(ci, co),
                    segregate_kernel(&bank.kernel(ci, co)).unwrap()
                );
            }
        }
        let x = ChannelTensor::new(2, 3, 4, (0..24).map(|v| v as f32 * 0.25).collect()).unwrap();
        let via_bank = layer_forward(&x, &bank, 1, Engine::Segregated).unwrap();
        let via_seg =
            layer_forward_segregated(std::slice::from_ref(&x), &seg, 1, Execution::Serial).unwrap();
        assert_eq!(via_seg[0], via_bank);
    }

    #[test]
    fn compare_basics() {
        let a = ChannelTensor::new(1, 2, 2, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let r = compare_outputs(&a, &a, 1e-5, 1e-6);
        assert!(r.pass && r.shape_match);
        assert_eq!((r.max_abs_diff, r.max_rel_diff), (0.0, 0.0));

        let b = ChannelTensor::<f32>::zeros(1, 3, 3).unwrap();
        let r = compare_outputs(&a, &b, 1e-5, 1e-6);
        assert!(!r.pass && !r.shape_match);

        let c = ChannelTensor::new(1, 2, 2, vec![1.0f32, 2.0, 3.0, 4.1]).unwrap();
        let r = compare_outputs(&a, &c, 1e-5, 1e-6);
        assert!(!r.pass);
        assert_eq!(r.failures, 1);
        assert!((r.max_abs_diff - 0.1).abs() < 1e-6);
    }
}
