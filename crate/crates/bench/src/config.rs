//! Layer configurations: the TOML config file and the built-in GAN suite.
//!
//! A config file is a list of `[[layer]]` tables:
//!
//! ```toml
//! [[layer]]
//! name = "dcgan-2"
//! input_h = 4
//! input_w = 4
//! c_in = 1024
//! kernel_n = 4
//! c_out = 512
//! pad = 2        # optional, defaults to 2
//! repeats = 3    # optional, defaults to 1
//! ```

use std::path::Path;

use segconv::TransposeConvSpec;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const DEFAULT_PAD: usize = 2;

fn default_pad() -> usize {
    DEFAULT_PAD
}

fn default_repeats() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub name: String,
    pub input_h: usize,
    pub input_w: usize,
    pub c_in: usize,
    pub kernel_n: usize,
    pub c_out: usize,
    #[serde(default = "default_pad")]
    pub pad: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl LayerConfig {
    pub fn new(
        name: impl Into<String>,
        input: (usize, usize, usize),
        kernel_n: usize,
        c_out: usize,
    ) -> Self {
        Self {
            name: name.into(),
            input_h: input.0,
            input_w: input.1,
            c_in: input.2,
            kernel_n,
            c_out,
            pad: DEFAULT_PAD,
            repeats: 1,
        }
    }

    pub fn spec(&self) -> segconv::Result<TransposeConvSpec> {
        TransposeConvSpec::new(
            self.input_h,
            self.input_w,
            self.kernel_n,
            self.pad,
            self.c_in,
            self.c_out,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    layer: Vec<LayerConfig>,
}

pub fn parse_configs(text: &str) -> Result<Vec<LayerConfig>> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    for cfg in &file.layer {
        if cfg.repeats == 0 {
            return Err(BenchError::Config(format!(
                "{}: repeats must be at least 1",
                cfg.name
            )));
        }
    }
    Ok(file.layer)
}

pub fn render_configs(configs: &[LayerConfig]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        layer: &'a [LayerConfig],
    }
    toml::to_string(&Out { layer: configs }).expect("configs serialize")
}

pub fn load_configs(path: impl AsRef<Path>) -> Result<Vec<LayerConfig>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_configs(&text)
}

/// One generator layer from the published GAN ablation table.
#[derive(Clone, Debug)]
pub struct GanLayer {
    pub model: &'static str,
    pub layer: u32,
    /// `(H, W, C_in)`
    pub input: (usize, usize, usize),
    pub kernel_n: usize,
    pub c_out: usize,
    /// Memory saving printed in the table, in bytes.
    pub published_savings: u64,
    /// Set when the printed figure (or shape) is a known misprint.
    pub erratum: Option<&'static str>,
}

impl GanLayer {
    pub fn config(&self) -> LayerConfig {
        LayerConfig::new(
            format!("{}-{}", self.model, self.layer),
            self.input,
            self.kernel_n,
            self.c_out,
        )
    }
}

const fn gan(
    model: &'static str,
    layer: u32,
    input: (usize, usize, usize),
    c_out: usize,
    published_savings: u64,
    erratum: Option<&'static str>,
) -> GanLayer {
    GanLayer {
        model,
        layer,
        input,
        kernel_n: 4,
        c_out,
        published_savings,
        erratum,
    }
}

/// Transpose convolution layers of DC-GAN, ArtGAN, GP-GAN and EB-GAN
/// generators, all with 4x4 kernels and padding 2.
pub const GAN_LAYERS: &[GanLayer] = &[
    gan("dcgan", 2, (4, 4, 1024), 512, 495_616, None),
    gan("dcgan", 3, (8, 8, 512), 256, 739_328, None),
    gan("dcgan", 4, (16, 16, 256), 128, 1_254_400, None),
    gan("dcgan", 5, (32, 32, 128), 3, 2_298_368, None),
    gan(
        "artgan",
        2,
        (4, 4, 512),
        256,
        4_247_808,
        Some("printed 4,247,808; the shape and the model total give 247,808"),
    ),
    gan("artgan", 3, (8, 8, 256), 128, 369_664, None),
    gan(
        "artgan",
        4,
        (16, 16, 128),
        128,
        627_200,
        Some("kernel printed as 4x4x246x128; input has 128 channels"),
    ),
    gan(
        "artgan",
        6,
        (32, 32, 128),
        3,
        67_200,
        Some("printed 67,200; the shape gives 2,298,368"),
    ),
    gan("gpgan", 2, (4, 4, 512), 256, 247_808, None),
    gan("gpgan", 3, (8, 8, 256), 128, 369_664, None),
    gan("gpgan", 4, (16, 16, 128), 64, 627_200, None),
    gan("gpgan", 5, (32, 32, 64), 3, 1_149_184, None),
    gan("ebgan", 2, (4, 4, 2048), 1024, 991_232, None),
    gan("ebgan", 3, (8, 8, 1024), 512, 1_478_656, None),
    gan("ebgan", 4, (16, 16, 512), 256, 2_508_800, None),
    gan("ebgan", 5, (32, 32, 256), 128, 4_596_736, None),
    gan("ebgan", 6, (64, 64, 128), 64, 8_786_432, None),
    gan("ebgan", 7, (128, 128, 64), 64, 17_172_736, None),
];

pub fn gan_suite() -> Vec<LayerConfig> {
    GAN_LAYERS.iter().map(GanLayer::config).collect()
}

/// Dataset-style layers: 224x224 RGB input, 3x3/4x4/5x5 kernels, 3 output
/// channels, padding 2.
pub fn dataset_suite() -> Vec<LayerConfig> {
    [5, 4, 3]
        .into_iter()
        .map(|n| LayerConfig::new(format!("rgb224-k{n}"), (224, 224, 3), n, 3))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults() {
        let cfgs = parse_configs(
            r#"
            [[layer]]
            name = "a"
            input_h = 4
            input_w = 5
            c_in = 2
            kernel_n = 3
            c_out = 1

            [[layer]]
            name = "b"
            input_h = 8
            input_w = 8
            c_in = 1
            kernel_n = 4
            c_out = 2
            pad = 1
            repeats = 7
            "#,
        )
        .unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!((cfgs[0].pad, cfgs[0].repeats), (2, 1));
        assert_eq!((cfgs[1].pad, cfgs[1].repeats), (1, 7));
        assert_eq!(parse_configs(&render_configs(&cfgs)).unwrap(), cfgs);
    }

    #[test]
    fn rejects_unknown_keys_and_zero_repeats() {
        let bad =
            "[[layer]]\nname='x'\ninput_h=1\ninput_w=1\nc_in=1\nkernel_n=2\nc_out=1\nstride=2\n";
        assert!(matches!(parse_configs(bad), Err(BenchError::Config(_))));
        let zero =
            "[[layer]]\nname='x'\ninput_h=1\ninput_w=1\nc_in=1\nkernel_n=2\nc_out=1\nrepeats=0\n";
        assert!(matches!(parse_configs(zero), Err(BenchError::Config(_))));
        assert!(parse_configs("").unwrap().is_empty());
    }

    #[test]
    fn gan_chain_is_consistent() {
        // each model's layers feed the next: spatial size doubles, channels follow the bank
        for pair in GAN_LAYERS.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.model == b.model && b.layer == a.layer + 1 {
                let (m_h, m_w) = a.config().spec().unwrap().output_dims().unwrap();
                assert_eq!((m_h, m_w, a.c_out), b.input, "{}-{}", a.model, a.layer);
            }
        }
    }
}
