use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use segconv::{compare_outputs, layer_forward, Engine};
use segconv_bench::report::emit_report;
use segconv_bench::runner::{config_seed, ABS_TOL, REL_TOL};
use segconv_bench::tensor_io::{load_ppm, load_tensor, save_raw_tensor};
use segconv_bench::{
    gan_suite, gen_kernel_bank, gen_synthetic, load_configs, run_benchmark_on, BenchError,
    BenchReport, EngineSet, Format, LayerConfig, RunOptions,
};

#[derive(Parser)]
#[command(name = "bench", about = "Transpose convolution engine benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the layers listed in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory of pre-sized .ppm / .sct inputs; synthetic inputs otherwise.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// Compare the two engines' outputs.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in GAN generator layers.
    GanSuite {
        #[arg(long)]
        no_verify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check one single-channel case against the reference engine.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        pad: usize,
        #[arg(long, default_value_t = 1)]
        c_in: usize,
        #[arg(long, default_value_t = 1)]
        c_out: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Convert a binary PPM into an SCT1 raw tensor.
    Convert { ppm: PathBuf, sct: PathBuf },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "both")]
    engine: EngineSet,
    /// Timed repeats per engine, overriding the configs.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self, verify: bool) -> RunOptions {
        RunOptions {
            engines: self.engine,
            repeats: self.repeats,
            threads: self.threads,
            seed: self.seed,
            verify,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8, BenchError> {
    match cli.command {
        Command::Run {
            config,
            inputs,
            verify,
            common,
        } => {
            let configs = load_configs(&config)?;
            let loaded = inputs.as_deref().map(load_dir).transpose()?;
            bench(&configs, &common, common.options(verify), loaded.as_deref())
        }
        Command::GanSuite { no_verify, common } => {
            bench(&gan_suite(), &common, common.options(!no_verify), None)
        }
        Command::Verify {
            n,
            size,
            pad,
            c_in,
            c_out,
            seed,
        } => verify_case(n, size, pad, c_in, c_out, seed),
        Command::Convert { ppm, sct } => {
            let t = load_ppm(&ppm)?;
            save_raw_tensor(&t, &sct)?;
            let (c, h, w) = t.shape();
            eprintln!("wrote {} ({c} x {h} x {w})", sct.display());
            Ok(0)
        }
    }
}

fn bench(
    configs: &[LayerConfig],
    common: &Common,
    opts: RunOptions,
    inputs: Option<&[segconv::ChannelTensor<f32>]>,
) -> Result<u8, BenchError> {
    let report = run_benchmark_on(configs, &opts, inputs);
    write_output(&report, common.format, common.out.as_deref())?;
    for r in &report.records {
        if let Some(err) = &r.error {
            eprintln!("{}: {err}", r.name);
        }
    }
    Ok(report.exit_code() as u8)
}

fn write_output(
    report: &BenchReport,
    format: Format,
    out: Option<&Path>,
) -> Result<(), BenchError> {
    let text = emit_report(report, format);
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| BenchError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_dir(dir: &Path) -> Result<Vec<segconv::ChannelTensor<f32>>, BenchError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("ppm" | "sct")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(BenchError::Config(format!(
            "no .ppm or .sct files in {}",
            dir.display()
        )));
    }
    paths.iter().map(load_tensor).collect()
}

fn verify_case(
    n: usize,
    size: usize,
    pad: usize,
    c_in: usize,
    c_out: usize,
    seed: u64,
) -> Result<u8, BenchError> {
    let spec = segconv::TransposeConvSpec::new(size, size, n, pad, c_in, c_out)?;
    let (m_h, m_w) = spec.output_dims()?;
    let seed = config_seed(seed, 0);
    let x = gen_synthetic(c_in, size, size, seed)?;
    let bank = gen_kernel_bank(c_in, c_out, n, seed)?;
    let reference = layer_forward(&x, &bank, pad, Engine::Reference)?;
    let segregated = layer_forward(&x, &bank, pad, Engine::Segregated)?;
    let f32_cmp = compare_outputs(&reference, &segregated, REL_TOL, ABS_TOL);

    let x64 = x.map(f64::from);
    let bank64 = bank.map(f64::from);
    let ref64 = layer_forward(&x64, &bank64, pad, Engine::Reference)?;
    let seg64 = layer_forward(&x64, &bank64, pad, Engine::Segregated)?;
    let f64_cmp = compare_outputs(&ref64, &seg64, 0.0, 1e-12);

    println!("input {size}x{size}x{c_in}, kernel {n}x{n}x{c_in}x{c_out}, pad {pad} -> output {m_h}x{m_w}x{c_out}");
    println!(
        "f32: max abs {:.3e}, max rel {:.3e} -> {}",
        f32_cmp.max_abs_diff,
        f32_cmp.max_rel_diff,
        if f32_cmp.pass { "pass" } else { "FAIL" }
    );
    println!(
        "f64: max abs {:.3e} -> {}",
        f64_cmp.max_abs_diff,
        if f64_cmp.pass { "pass" } else { "FAIL" }
    );
    Ok(if f32_cmp.pass && f64_cmp.pass { 0 } else { 1 })
}
