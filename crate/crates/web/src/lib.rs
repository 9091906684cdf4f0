//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; the page
//! draws the grids with a 2D canvas. The Rust-side functions return typed
//! structs so they can be tested natively.

use segconv::{
    cost_model, effective_padding, memory_savings_bytes, pad_zero, segregate_kernel,
    transpose_conv_reference_counted, transpose_conv_segregated_counted, upsample_bed_of_nails,
    FeatureMap2D, Kernel2D, OpCounts, SavingsMode, TransposeConvSpec,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl From<&FeatureMap2D<f32>> for Grid {
    fn from(m: &FeatureMap2D<f32>) -> Self {
        Grid {
            rows: m.height(),
            cols: m.width(),
            data: m.as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SegregationView {
    pub kernel: Grid,
    /// Parity class (`2r + s`) of every kernel position.
    pub class_of: Vec<u8>,
    /// `k00, k01, k10, k11`
    pub subkernels: Vec<Grid>,
}

/// Small deterministic values for the demo grids, in `[-1, 1)`.
fn demo_values(len: usize, seed: u32) -> Vec<f32> {
    let mut state = seed.wrapping_mul(0x9E37_79B9) | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            // quarter steps keep the numbers readable on screen
            ((state >> 24) % 8) as f32 * 0.25 - 1.0
        })
        .collect()
}

pub fn segregation_view(n: usize, seed: u32) -> Result<SegregationView, String> {
    let kernel = Kernel2D::new(n, demo_values(n * n, seed)).map_err(|e| e.to_string())?;
    let set = segregate_kernel(&kernel).map_err(|e| e.to_string())?;
    let class_of = (0..n * n)
        .map(|i| ((((i / n) % 2) << 1) | ((i % n) % 2)) as u8)
        .collect();
    Ok(SegregationView {
        kernel: kernel.as_map().into(),
        class_of,
        subkernels: set.iter().map(|(_, k)| k.into()).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ConvView {
    pub input: Grid,
    /// Bed-of-nails upsample padded by `P`: the reference engine's buffer.
    pub upsampled: Grid,
    /// Raw input padded by `floor(P / 2)`: the segregated engine's buffer.
    pub seg_input: Grid,
    pub reference: Grid,
    pub segregated: Grid,
    /// Parity class of the sub-kernel each output element used.
    pub class_of_output: Vec<u8>,
    pub swap: bool,
    pub max_abs_diff: f32,
    pub mults_reference: u64,
    pub mults_segregated: u64,
    pub writes_segregated: u64,
}

pub fn conv_view(size: usize, n: usize, pad: usize, seed: u32) -> Result<ConvView, String> {
    let spec = TransposeConvSpec::square(size, n, pad).map_err(|e| e.to_string())?;
    let (m_h, m_w) = spec.output_dims().map_err(|e| e.to_string())?;
    let input =
        FeatureMap2D::new(size, size, demo_values(size * size, seed)).map_err(|e| e.to_string())?;
    let kernel =
        Kernel2D::new(n, demo_values(n * n, seed.wrapping_add(1))).map_err(|e| e.to_string())?;
    let set = segregate_kernel(&kernel).map_err(|e| e.to_string())?;
    let eff = effective_padding(pad);

    let mut ref_counts = OpCounts::default();
    let reference = transpose_conv_reference_counted(&input, &kernel, pad, &mut ref_counts)
        .map_err(|e| e.to_string())?;
    let mut seg_counts = OpCounts::default();
    let segregated = transpose_conv_segregated_counted(&input, &set, pad, &mut seg_counts)
        .map_err(|e| e.to_string())?;
    let max_abs_diff = reference
        .as_slice()
        .iter()
        .zip(segregated.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f32::max);
    let swap = usize::from(eff.swap);
    let class_of_output = (0..m_h * m_w)
        .map(|i| (((((i / m_w) + swap) % 2) << 1) | (((i % m_w) + swap) % 2)) as u8)
        .collect();

    Ok(ConvView {
        input: (&input).into(),
        upsampled: (&pad_zero(&upsample_bed_of_nails(&input), pad)).into(),
        seg_input: (&pad_zero(&input, eff.p_eff)).into(),
        reference: (&reference).into(),
        segregated: (&segregated).into(),
        class_of_output,
        swap: eff.swap,
        max_abs_diff,
        mults_reference: ref_counts.products,
        mults_segregated: seg_counts.products,
        writes_segregated: seg_counts.writes,
    })
}

#[derive(Debug, Serialize)]
pub struct CostView {
    pub output: (usize, usize),
    pub mults_reference: u64,
    pub mults_segregated: u64,
    pub ratio: f64,
    pub savings_total_bytes: u64,
    pub savings_net_bytes: u64,
}

pub fn cost_view(
    size: usize,
    n: usize,
    pad: usize,
    c_in: usize,
    c_out: usize,
) -> Result<CostView, String> {
    let spec =
        TransposeConvSpec::new(size, size, n, pad, c_in, c_out).map_err(|e| e.to_string())?;
    let model = cost_model(&spec, SavingsMode::UpsampledTotal).map_err(|e| e.to_string())?;
    Ok(CostView {
        output: spec.output_dims().map_err(|e| e.to_string())?,
        mults_reference: model.mults_reference,
        mults_segregated: model.mults_segregated,
        ratio: model.ideal_ratio,
        savings_total_bytes: model.memory_savings_bytes,
        savings_net_bytes: memory_savings_bytes(
            size,
            size,
            pad,
            c_in,
            SavingsMode::UpsampledMinusInput,
        )
        .map_err(|e| e.to_string())?,
    })
}

fn to_js<T: Serialize>(value: Result<T, String>) -> Result<String, JsValue> {
    value
        .and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// Kernel and its four parity sub-kernels.
#[wasm_bindgen]
pub fn segregate(n: usize, seed: u32) -> Result<String, JsValue> {
    to_js(segregation_view(n, seed))
}

/// Runs both engines on one small square map.
#[wasm_bindgen]
pub fn transpose_conv(size: usize, n: usize, pad: usize, seed: u32) -> Result<String, JsValue> {
    to_js(conv_view(size, n, pad, seed))
}

/// Closed-form multiplication counts and memory savings for a layer shape.
#[wasm_bindgen]
pub fn layer_cost(
    size: usize,
    n: usize,
    pad: usize,
    c_in: usize,
    c_out: usize,
) -> Result<String, JsValue> {
    to_js(cost_view(size, n, pad, c_in, c_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use segconv::transpose_conv_reference;

    #[test]
    fn segregation_classes() {
        let v = segregation_view(5, 1).unwrap();
        assert_eq!(
            v.subkernels
                .iter()
                .map(|g| g.data.len())
                .collect::<Vec<_>>(),
            [9, 6, 6, 4]
        );
        let per_class: Vec<usize> = (0..4)
            .map(|c| v.class_of.iter().filter(|&&x| x == c).count())
            .collect();
        assert_eq!(per_class, [9, 6, 6, 4]);
        assert!(segregation_view(1, 1).is_err());
    }

    #[test]
    fn conv_view_agrees() {
        for pad in 0..4 {
            let v = conv_view(4, 5, pad, 3).unwrap();
            assert_eq!(v.max_abs_diff, 0.0, "pad {pad}");
            assert_eq!(v.writes_segregated as usize, v.reference.data.len());
            assert_eq!(v.swap, pad % 2 == 1);
            assert_eq!(v.upsampled.rows, 7 + 2 * pad);
            assert_eq!(v.seg_input.rows, 4 + 2 * (pad / 2));
        }
        let v = conv_view(4, 5, 0, 3).unwrap();
        assert_eq!((v.mults_reference, v.mults_segregated), (225, 64));
        assert_eq!(
            transpose_conv_reference(
                &FeatureMap2D::new(4, 4, v.input.data.clone()).unwrap(),
                &Kernel2D::new(5, demo_values(25, 4)).unwrap(),
                0
            )
            .unwrap()
            .as_slice(),
            v.reference.data.as_slice()
        );
        assert!(conv_view(1, 4, 0, 1).is_err());
    }

    #[test]
    fn cost_matches_table_figure() {
        let c = cost_view(4, 4, 2, 1024, 512).unwrap();
        assert_eq!(c.output, (8, 8));
        assert_eq!(c.savings_total_bytes, 495_616);
        assert_eq!(c.ratio, 4.0);
        let json = to_js(Ok(c)).unwrap();
        assert!(json.contains("\"savings_total_bytes\":495616"));
    }
}
