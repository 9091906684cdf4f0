//! Closed-form operation counts and memory-savings estimates.

use crate::engine::TransposeConvSpec;
use crate::error::{ConvError, Result};
use crate::segregation::{effective_padding, parity_len};

/// Bytes per stored element in the default accounting (32-bit floats).
pub const ELEMENT_BYTES: u64 = 4;

/// Multiplications the reference engine performs: `n^2` per output element
/// per channel pair, zeros included.
pub fn mult_count_reference(spec: &TransposeConvSpec) -> Result<u64> {
    let (m_h, m_w) = spec.output_dims()?;
    Ok((m_h * m_w * spec.n * spec.n) as u64 * (spec.c_in * spec.c_out) as u64)
}

/// Sum over one output axis of the sub-kernel extent each coordinate uses.
fn axis_taps(m: usize, n: usize, swap: usize) -> u64 {
    let even = parity_len(m, 0) * parity_len(n, swap % 2);
    let odd = parity_len(m, 1) * parity_len(n, (1 + swap) % 2);
    (even + odd) as u64
}

/// Multiplications the segregated engine performs: only the selected
/// sub-kernel's taps per output element.
pub fn mult_count_segregated(spec: &TransposeConvSpec) -> Result<u64> {
    let (m_h, m_w) = spec.output_dims()?;
    let swap = usize::from(effective_padding(spec.pad).swap);
    Ok(axis_taps(m_h, spec.n, swap)
        * axis_taps(m_w, spec.n, swap)
        * (spec.c_in * spec.c_out) as u64)
}

/// What the memory saving is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SavingsMode {
    /// The whole padded upsampled buffer, which the segregated engine never
    /// allocates.
    UpsampledTotal,
    /// The padded upsampled buffer minus the padded raw input the segregated
    /// engine does allocate.
    UpsampledMinusInput,
}

impl SavingsMode {
    pub const ALL: [SavingsMode; 2] = [
        SavingsMode::UpsampledTotal,
        SavingsMode::UpsampledMinusInput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SavingsMode::UpsampledTotal => "upsampled_total",
            SavingsMode::UpsampledMinusInput => "upsampled_minus_input",
        }
    }
}

/// Bytes saved per layer with 4-byte elements.
pub fn memory_savings_bytes(
    n_h: usize,
    n_w: usize,
    pad: usize,
    c_in: usize,
    mode: SavingsMode,
) -> Result<u64> {
    memory_savings_bytes_with_width(n_h, n_w, pad, c_in, mode, ELEMENT_BYTES)
}

pub fn memory_savings_bytes_with_width(
    n_h: usize,
    n_w: usize,
    pad: usize,
    c_in: usize,
    mode: SavingsMode,
    element_bytes: u64,
) -> Result<u64> {
    if n_h == 0 || n_w == 0 {
        return Err(ConvError::EmptyMap {
            height: n_h,
            width: n_w,
        });
    }
    if c_in == 0 {
        return Err(ConvError::InconsistentBank("zero input channels".into()));
    }
    let upsampled = ((2 * n_h - 1 + 2 * pad) * (2 * n_w - 1 + 2 * pad)) as u64;
    let elements = match mode {
        SavingsMode::UpsampledTotal => upsampled,
        SavingsMode::UpsampledMinusInput => {
            let p = effective_padding(pad).p_eff;
            upsampled - ((n_h + 2 * p) * (n_w + 2 * p)) as u64
        }
    };
    Ok(elements * c_in as u64 * element_bytes)
}

/// Counts and savings for one layer shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub mults_reference: u64,
    pub mults_segregated: u64,
    /// `mults_reference / mults_segregated`
    pub ideal_ratio: f64,
    pub memory_savings_bytes: u64,
    pub mode: SavingsMode,
}

pub fn cost_model(spec: &TransposeConvSpec, mode: SavingsMode) -> Result<CostModel> {
    let mults_reference = mult_count_reference(spec)?;
    let mults_segregated = mult_count_segregated(spec)?;
    Ok(CostModel {
        mults_reference,
        mults_segregated,
        ideal_ratio: mults_reference as f64 / mults_segregated as f64,
        memory_savings_bytes: memory_savings_bytes(spec.n_h, spec.n_w, spec.pad, spec.c_in, mode)?,
        mode,
    })
}
