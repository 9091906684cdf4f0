//! Runs layer configurations through the engines, timing and cross-checking
//! them.

use std::time::Instant;

use rayon::ThreadPoolBuilder;
use segconv::{
    compare_outputs, layer_forward_batch, layer_forward_segregated, memory_savings_bytes,
    mult_count_reference, mult_count_segregated, ChannelTensor, Engine, Execution, KernelBank,
    SavingsMode, SegregatedBank,
};

use crate::config::LayerConfig;
use crate::report::{BenchReport, Environment, LayerRecord, Verdict};
use crate::synth::{gen_kernel_bank, gen_synthetic, splitmix64};

/// Tolerances used when comparing the two engines.
pub const REL_TOL: f64 = 1e-5;
pub const ABS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineSet {
    Reference,
    Segregated,
    Both,
}

impl EngineSet {
    pub fn engines(self) -> &'static [Engine] {
        match self {
            EngineSet::Reference => &[Engine::Reference],
            EngineSet::Segregated => &[Engine::Segregated],
            EngineSet::Both => &Engine::ALL,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EngineSet::Reference => "ref",
            EngineSet::Segregated => "seg",
            EngineSet::Both => "both",
        }
    }
}

impl std::str::FromStr for EngineSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ref" | "reference" => Ok(EngineSet::Reference),
            "seg" | "segregated" => Ok(EngineSet::Segregated),
            "both" => Ok(EngineSet::Both),
            other => Err(format!(
                "unknown engine set `{other}`, expected ref|seg|both"
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub engines: EngineSet,
    /// Overrides every config's own repeat count when set.
    pub repeats: Option<usize>,
    /// Worker threads; `0` lets rayon decide.
    pub threads: usize,
    pub seed: u64,
    pub verify: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            engines: EngineSet::Both,
            repeats: None,
            threads: 0,
            seed: 42,
            verify: true,
        }
    }
}

/// Per-config input and weight seed, independent of the other configs.
pub fn config_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// FNV-1a over the bit patterns of a tensor batch.
pub fn digest(outputs: &[ChannelTensor<f32>]) -> String {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for t in outputs {
        for v in t.as_slice() {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
    }
    format!("{h:016x}")
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    }
}

struct Timed {
    seconds: f64,
    outputs: Vec<ChannelTensor<f32>>,
}

/// One discarded warm-up call, then `repeats` timed calls; reports the median.
///
/// The segregated engine gets its sub-kernels cut before timing starts: they
/// are derived from the weights once, like any other weight layout change.
fn time_engine(
    inputs: &[ChannelTensor<f32>],
    bank: &KernelBank<f32>,
    pad: usize,
    engine: Engine,
    repeats: usize,
) -> segconv::Result<Timed> {
    let segregated = match engine {
        Engine::Segregated => Some(SegregatedBank::new(bank)?),
        Engine::Reference => None,
    };
    let forward = || match &segregated {
        Some(seg) => layer_forward_segregated(inputs, seg, pad, Execution::Parallel),
        None => layer_forward_batch(inputs, bank, pad, engine, Execution::Parallel),
    };
    let mut outputs = forward()?;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        outputs = forward()?;
        samples.push(start.elapsed().as_secs_f64());
    }
    Ok(Timed {
        seconds: median(samples),
        outputs,
    })
}

/// Benchmarks every config on synthetic inputs.
pub fn run_benchmark(configs: &[LayerConfig], opts: &RunOptions) -> BenchReport {
    run_benchmark_on(configs, opts, None)
}

/// Benchmarks every config. When `inputs` is given, each config runs over the
/// loaded tensors whose shape matches its input; otherwise one synthetic
/// tensor is generated per config.
pub fn run_benchmark_on(
    configs: &[LayerConfig],
    opts: &RunOptions,
    inputs: Option<&[ChannelTensor<f32>]>,
) -> BenchReport {
    let pool = ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .expect("thread pool");
    let records = pool.install(|| {
        configs
            .iter()
            .enumerate()
            .map(|(i, cfg)| run_one(cfg, config_seed(opts.seed, i), opts, inputs))
            .collect()
    });
    BenchReport {
        environment: Environment {
            element_bytes: 4,
            threads: pool.current_num_threads(),
            seed: opts.seed,
            engines: opts.engines.name().to_string(),
            verify: opts.verify,
            repeats_override: opts.repeats,
        },
        records,
    }
}

fn run_one(
    cfg: &LayerConfig,
    seed: u64,
    opts: &RunOptions,
    loaded: Option<&[ChannelTensor<f32>]>,
) -> LayerRecord {
    let mut rec = LayerRecord::from_config(cfg, opts.repeats.unwrap_or(cfg.repeats));
    let spec = match cfg.spec() {
        Ok(spec) => spec,
        Err(e) => return rec.failed(e.to_string()),
    };
    let (m_h, m_w) = spec.output_dims().expect("validated spec");
    rec.output_h = Some(m_h);
    rec.output_w = Some(m_w);
    rec.mults_ref = mult_count_reference(&spec).ok();
    rec.mults_seg = mult_count_segregated(&spec).ok();
    rec.savings_total_bytes = memory_savings_bytes(
        cfg.input_h,
        cfg.input_w,
        cfg.pad,
        cfg.c_in,
        SavingsMode::UpsampledTotal,
    )
    .ok();
    rec.savings_net_bytes = memory_savings_bytes(
        cfg.input_h,
        cfg.input_w,
        cfg.pad,
        cfg.c_in,
        SavingsMode::UpsampledMinusInput,
    )
    .ok();

    let inputs: Vec<ChannelTensor<f32>> = match loaded {
        Some(all) => {
            let shape = (cfg.c_in, cfg.input_h, cfg.input_w);
            let matching: Vec<_> = all.iter().filter(|t| t.shape() == shape).cloned().collect();
            if matching.is_empty() {
                return rec.failed(format!("no loaded input has shape {shape:?}"));
            }
            matching
        }
        None => match gen_synthetic(cfg.c_in, cfg.input_h, cfg.input_w, seed) {
            Ok(t) => vec![t],
            Err(e) => return rec.failed(e.to_string()),
        },
    };
    rec.batch = inputs.len();
    let bank = match gen_kernel_bank(cfg.c_in, cfg.c_out, cfg.kernel_n, seed) {
        Ok(b) => b,
        Err(e) => return rec.failed(e.to_string()),
    };

    let mut results: Vec<(Engine, Timed)> = Vec::new();
    for &engine in opts.engines.engines() {
        match time_engine(&inputs, &bank, cfg.pad, engine, rec.repeats) {
            Ok(t) => results.push((engine, t)),
            Err(e) => return rec.failed(e.to_string()),
        }
    }
    for (engine, timed) in &results {
        match engine {
            Engine::Reference => {
                rec.time_ref_s = Some(timed.seconds);
                rec.digest_ref = Some(digest(&timed.outputs));
            }
            Engine::Segregated => {
                rec.time_seg_s = Some(timed.seconds);
                rec.digest_seg = Some(digest(&timed.outputs));
            }
        }
    }
    if let (Some(r), Some(s)) = (rec.time_ref_s, rec.time_seg_s) {
        rec.speedup = Some(r / s.max(f64::MIN_POSITIVE));
    }

    rec.verdict = Verdict::Unverified;
    if opts.verify && results.len() == 2 {
        let (reference, segregated) = (&results[0].1.outputs, &results[1].1.outputs);
        let mut pass = true;
        let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
        for (a, b) in reference.iter().zip(segregated) {
            let cmp = compare_outputs(a, b, REL_TOL, ABS_TOL);
            pass &= cmp.pass;
            max_abs = max_abs.max(cmp.max_abs_diff);
            max_rel = max_rel.max(cmp.max_rel_diff);
        }
        rec.max_abs_diff = max_abs.is_finite().then_some(max_abs);
        rec.max_rel_diff = max_rel.is_finite().then_some(max_rel);
        rec.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bad_config_is_recorded_not_fatal() {
        let mut bad = LayerConfig::new("bad", (1, 1, 1), 4, 1);
        bad.pad = 0;
        let good = LayerConfig::new("good", (3, 3, 2), 3, 2);
        let report = run_benchmark(&[bad, good], &RunOptions::default());
        assert_eq!(report.records[0].verdict, Verdict::Error);
        assert!(report.records[0].error.is_some());
        assert_eq!(report.records[1].verdict, Verdict::Pass);
    }

    #[test]
    fn single_engine_is_unverified() {
        let cfg = LayerConfig::new("one", (3, 3, 1), 3, 1);
        let opts = RunOptions {
            engines: EngineSet::Segregated,
            ..RunOptions::default()
        };
        let report = run_benchmark(&[cfg], &opts);
        let rec = &report.records[0];
        assert_eq!(rec.verdict, Verdict::Unverified);
        assert!(rec.time_ref_s.is_none() && rec.speedup.is_none());
        assert!(rec.time_seg_s.unwrap() > 0.0);
    }

    #[test]
    fn loaded_inputs_are_matched_by_shape() {
        let t = gen_synthetic(3, 5, 5, 1).unwrap();
        let cfg = LayerConfig::new("loaded", (5, 5, 3), 3, 2);
        let other = LayerConfig::new("missing", (6, 6, 3), 3, 2);
        let report = run_benchmark_on(&[cfg, other], &RunOptions::default(), Some(&[t.clone(), t]));
        assert_eq!(report.records[0].batch, 2);
        assert_eq!(report.records[0].verdict, Verdict::Pass);
        assert_eq!(report.records[1].verdict, Verdict::Error);
    }
}
