//! Benchmark harness for the transpose convolution engines: synthetic and
//! file-backed inputs, GAN layer configurations, timing, verification and
//! report rendering.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod synth;
pub mod tensor_io;

pub use config::{gan_suite, load_configs, parse_configs, GanLayer, LayerConfig, GAN_LAYERS};
pub use error::{BenchError, Result};
pub use report::{emit_report, BenchReport, Format, LayerRecord, Verdict};
pub use runner::{run_benchmark, run_benchmark_on, EngineSet, RunOptions};
pub use synth::{gen_kernel_bank, gen_synthetic, splitmix64};
pub use tensor_io::{load_ppm, load_raw_tensor, save_raw_tensor};
