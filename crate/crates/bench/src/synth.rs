//! Deterministic synthetic tensors and kernel banks.

use segconv::{ChannelTensor, KernelBank};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step from state `x`: advance by the golden gamma, then mix.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Largest `f32` strictly below one.
const BELOW_ONE: f32 = 1.0 - f32::EPSILON / 2.0;

/// Maps a 64-bit word to `[0, 1)`: scale by `2^-64` in f64, round to f32.
/// The handful of words within half an f32 ulp of one would round up to
/// `1.0`; those are pinned to the largest value below one.
pub fn unit_f32(word: u64) -> f32 {
    let v = (word as f64 * 2f64.powi(-64)) as f32;
    v.min(BELOW_ONE)
}

/// `C x H x W` tensor with element `i` (flat, channel-major) equal to
/// `unit_f32(splitmix64(seed + i))`.
pub fn gen_synthetic(
    c: usize,
    h: usize,
    w: usize,
    seed: u64,
) -> segconv::Result<ChannelTensor<f32>> {
    let data = (0..(c * h * w) as u64)
        .map(|i| unit_f32(splitmix64(seed.wrapping_add(i))))
        .collect();
    ChannelTensor::new(c, h, w, data)
}

/// Salt separating the kernel stream from the input stream of one seed.
const KERNEL_SALT: u64 = 0x6B65_726E_656C_7321;

/// Kernel bank with weights uniform in `[-0.5, 0.5)`, derived from `seed`.
pub fn gen_kernel_bank(
    c_in: usize,
    c_out: usize,
    n: usize,
    seed: u64,
) -> segconv::Result<KernelBank<f32>> {
    let base = splitmix64(seed ^ KERNEL_SALT);
    let data = (0..(c_in * c_out * n * n) as u64)
        .map(|i| unit_f32(splitmix64(base.wrapping_add(i))) - 0.5)
        .collect();
    KernelBank::new(c_in, c_out, n, data)
}
