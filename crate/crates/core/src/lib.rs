//! Stride-2 transpose convolution two ways: the conventional
//! upsample-then-correlate formulation and a unified kernel-segregated
//! engine that never materialises the upsampled map.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod segregation;
pub mod tensor;

pub use analysis::{
    cost_model, memory_savings_bytes, mult_count_reference, mult_count_segregated, CostModel,
    SavingsMode,
};
pub use engine::{
    compare_outputs, layer_forward, layer_forward_batch, layer_forward_counted,
    layer_forward_segregated, layer_forward_with, output_dims, transpose_conv_reference,
    transpose_conv_reference_counted, transpose_conv_segregated, transpose_conv_segregated_counted,
    ComparisonReport, Engine, Execution, OpCounts, SegregatedBank, TransposeConvSpec,
};
pub use error::{ConvError, Result};
pub use segregation::{
    effective_padding, merge_subkernels, segregate_kernel, EffectivePadding, SubKernelSet,
};
pub use tensor::{
    cross_correlate_valid, pad_zero, upsample_bed_of_nails, ChannelTensor, Element, FeatureMap2D,
    Kernel2D, KernelBank,
};
