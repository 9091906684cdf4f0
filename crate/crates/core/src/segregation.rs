//! Splitting an `n x n` kernel into four parity sub-kernels.
//!
//! Sub-kernel `k_rs` collects the weights at rows of parity `r` and columns
//! of parity `s`: `k_rs[u][v] = K[2u + r][2v + s]`. With stride-2 upsampling
//! every output element meets live (non-inserted) inputs only under the
//! taps of one parity class, so one sub-kernel is all it needs.

use crate::error::{ConvError, Result};
use crate::tensor::{Element, FeatureMap2D, Kernel2D};

/// The four parity sub-kernels of one kernel, stored in `k00, k01, k10, k11`
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct SubKernelSet<T = f32> {
    n: usize,
    parts: [FeatureMap2D<T>; 4],
}

/// Rows (or columns) of parity `r` among `0..n`.
#[inline]
pub const fn parity_len(n: usize, r: usize) -> usize {
    if r == 0 {
        n.div_ceil(2)
    } else {
        n / 2
    }
}

/// Expected `(rows, cols)` of `k_rs` for an `n x n` kernel.
pub const fn subkernel_dims(n: usize, r: usize, s: usize) -> (usize, usize) {
    (parity_len(n, r), parity_len(n, s))
}

const NAMES: [&str; 4] = ["k00", "k01", "k10", "k11"];

impl<T: Element> SubKernelSet<T> {
    /// Assembles a set from explicit sub-kernels, checking their shapes.
    pub fn from_parts(
        n: usize,
        k00: FeatureMap2D<T>,
        k01: FeatureMap2D<T>,
        k10: FeatureMap2D<T>,
        k11: FeatureMap2D<T>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(ConvError::KernelTooSmall(n));
        }
        let parts = [k00, k01, k10, k11];
        for (idx, part) in parts.iter().enumerate() {
            let (want_h, want_w) = subkernel_dims(n, idx >> 1, idx & 1);
            if part.dims() != (want_h, want_w) {
                return Err(ConvError::SubKernelDims {
                    name: NAMES[idx],
                    n,
                    got_h: part.height(),
                    got_w: part.width(),
                    want_h,
                    want_w,
                });
            }
        }
        Ok(Self { n, parts })
    }

    /// Size of the kernel the set was cut from.
    pub fn kernel_size(&self) -> usize {
        self.n
    }

    /// Sub-kernel for row parity `r` and column parity `s`.
    #[inline]
    pub fn get(&self, r: usize, s: usize) -> &FeatureMap2D<T> {
        &self.parts[(r & 1) << 1 | (s & 1)]
    }

    pub fn k00(&self) -> &FeatureMap2D<T> {
        &self.parts[0]
    }

    pub fn k01(&self) -> &FeatureMap2D<T> {
        &self.parts[1]
    }

    pub fn k10(&self) -> &FeatureMap2D<T> {
        &self.parts[2]
    }

    pub fn k11(&self) -> &FeatureMap2D<T> {
        &self.parts[3]
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &FeatureMap2D<T>)> {
        self.parts
            .iter()
            .enumerate()
            .map(|(idx, k)| ((idx >> 1, idx & 1), k))
    }

    /// Element count of each sub-kernel in `k00, k01, k10, k11` order.
    pub fn element_counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.parts[i].len())
    }
}

/// Splits `kernel` into its four parity sub-kernels.
pub fn segregate_kernel<T: Element>(kernel: &Kernel2D<T>) -> Result<SubKernelSet<T>> {
    let n = kernel.size();
    if n < 2 {
        return Err(ConvError::KernelTooSmall(n));
    }
    let part = |r: usize, s: usize| {
        let (h, w) = subkernel_dims(n, r, s);
        let mut data = Vec::with_capacity(h * w);
        for u in 0..h {
            for v in 0..w {
                data.push(kernel.get(2 * u + r, 2 * v + s));
            }
        }
        FeatureMap2D::new(h, w, data).expect("non-empty for n >= 2")
    };
    Ok(SubKernelSet {
        n,
        parts: [part(0, 0), part(0, 1), part(1, 0), part(1, 1)],
    })
}

/// Inverse of [`segregate_kernel`].
pub fn merge_subkernels<T: Element>(set: &SubKernelSet<T>) -> Result<Kernel2D<T>> {
    let n = set.n;
    let mut data = vec![T::zero(); n * n];
    for ((r, s), k) in set.iter() {
        if k.dims() != subkernel_dims(n, r, s) {
            let (want_h, want_w) = subkernel_dims(n, r, s);
            return Err(ConvError::SubKernelDims {
                name: NAMES[r << 1 | s],
                n,
                got_h: k.height(),
                got_w: k.width(),
                want_h,
                want_w,
            });
        }
        for u in 0..k.height() {
            for v in 0..k.width() {
                data[(2 * u + r) * n + 2 * v + s] = k.get(u, v);
            }
        }
    }
    Kernel2D::new(n, data)
}

/// Padding the segregated engine applies to the raw input, and whether the
/// parity-to-sub-kernel assignment is reversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EffectivePadding {
    pub p_eff: usize,
    pub swap: bool,
}

/// Maps the conventional padding `P` of the upsampled map onto the raw input:
/// `floor(P / 2)`, with the sub-kernel order reversed when `P` is odd.
pub fn effective_padding(pad: usize) -> EffectivePadding {
    EffectivePadding {
        p_eff: pad / 2,
        swap: pad % 2 == 1,
    }
}
