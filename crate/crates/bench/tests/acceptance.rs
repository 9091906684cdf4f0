//! Acceptance suite. Runs without the libtest harness so each criterion's
//! PASS/FAIL line is always printed; exits non-zero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segconv::*;
use segconv_bench::config::GAN_LAYERS;
use segconv_bench::{gan_suite, run_benchmark, LayerConfig, RunOptions, Verdict};

const REL_TOL: f64 = 1e-5;
const ABS_TOL: f64 = 1e-6;
const F64_ABS_TOL: f64 = 1e-12;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, id: u32, title: &'static str, pass: bool, detail: String) {
    println!(
        "[{}] criterion {id}: {title} -- {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    results.push(Outcome {
        id,
        title,
        pass,
        detail,
    });
}

fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..len).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

/// Criteria 1 and 2: oracle equivalence over randomized layers, split by
/// padding parity.
fn oracle_equivalence(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let target = 1200;
    let (mut cases, mut failures) = (0usize, Vec::new());
    let mut by_parity = [(0usize, 0usize); 2];
    let (mut worst_rel, mut worst_abs64) = (0.0f64, 0.0f64);
    while cases < target {
        let n_h = rng.gen_range(1..=32);
        let n_w = rng.gen_range(1..=32);
        let n = rng.gen_range(2..=9);
        let pad = rng.gen_range(0..=4);
        let c_in = rng.gen_range(1..=4);
        let c_out = rng.gen_range(1..=4);
        if TransposeConvSpec::new(n_h, n_w, n, pad, c_in, c_out).is_err() {
            continue;
        }
        cases += 1;
        let x = ChannelTensor::new(c_in, n_h, n_w, random_vec(c_in * n_h * n_w, &mut rng)).unwrap();
        let bank =
            KernelBank::new(c_in, c_out, n, random_vec(c_in * c_out * n * n, &mut rng)).unwrap();
        let r32 = layer_forward(&x, &bank, pad, Engine::Reference).unwrap();
        let s32 = layer_forward(&x, &bank, pad, Engine::Segregated).unwrap();
        let c32 = compare_outputs(&r32, &s32, REL_TOL, ABS_TOL);
        let (x64, b64) = (x.map(f64::from), bank.map(f64::from));
        let r64 = layer_forward(&x64, &b64, pad, Engine::Reference).unwrap();
        let s64 = layer_forward(&x64, &b64, pad, Engine::Segregated).unwrap();
        let c64 = compare_outputs(&r64, &s64, 0.0, F64_ABS_TOL);
        worst_rel = worst_rel.max(c32.max_rel_diff);
        worst_abs64 = worst_abs64.max(c64.max_abs_diff);
        let ok = c32.pass && c64.pass;
        let slot = &mut by_parity[pad % 2];
        slot.0 += 1;
        if ok {
            slot.1 += 1;
        } else {
            failures.push((n_h, n_w, n, pad, c_in, c_out));
        }
    }
    record(
        results,
        1,
        "oracle equivalence (f32 1e-5 rel / 1e-6 abs, f64 1e-12 abs)",
        failures.is_empty(),
        format!(
            "{cases} cases, {} failures, worst f32 rel {worst_rel:.2e}, worst f64 abs {worst_abs64:.2e}{}",
            failures.len(),
            failures.first().map_or(String::new(), |f| format!(", first failing {f:?}"))
        ),
    );
    let [(even, even_ok), (odd, odd_ok)] = by_parity;
    record(
        results,
        2,
        "odd-P sub-kernel swap rule",
        odd > 0 && even > 0 && odd_ok == odd && even_ok == even,
        format!("even P {even_ok}/{even}, odd P {odd_ok}/{odd}"),
    );
}

fn segregation_structure(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut problems = Vec::new();
    for n in 2..=9 {
        for _ in 0..20 {
            let k = Kernel2D::new(n, random_vec(n * n, &mut rng)).unwrap();
            let set = segregate_kernel(&k).unwrap();
            let (hi, lo) = (n.div_ceil(2), n / 2);
            let dims_ok = set.k00().dims() == (hi, hi)
                && set.k01().dims() == (hi, lo)
                && set.k10().dims() == (lo, hi)
                && set.k11().dims() == (lo, lo);
            let count_ok = set.element_counts().iter().sum::<usize>() == n * n;
            let merged = merge_subkernels(&set).unwrap();
            let bitwise = merged
                .as_slice()
                .iter()
                .zip(k.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            if !(dims_ok && count_ok && bitwise) {
                problems.push(n);
            }
        }
    }
    let five = segregate_kernel(&Kernel2D::new(5, vec![1.0f32; 25]).unwrap())
        .unwrap()
        .element_counts();
    record(
        results,
        3,
        "segregation structure",
        problems.is_empty() && five == [9, 6, 6, 4],
        format!("n in 2..=9 x 20 kernels, n=5 counts {five:?}, bad sizes {problems:?}"),
    );
}

fn no_extra_elements(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = Vec::new();
    let mut checked = 0;
    let mut pinned = OpCounts::default();
    {
        let x = FeatureMap2D::new(4, 4, random_vec(16, &mut rng)).unwrap();
        let k = Kernel2D::new(5, random_vec(25, &mut rng)).unwrap();
        transpose_conv_segregated_counted(&x, &segregate_kernel(&k).unwrap(), 0, &mut pinned)
            .unwrap();
    }
    while checked < 300 {
        let (h, w, n, pad) = (
            rng.gen_range(1..=16),
            rng.gen_range(1..=16),
            rng.gen_range(2..=9),
            rng.gen_range(0..=4),
        );
        let Ok(spec) = TransposeConvSpec::new(h, w, n, pad, 1, 1) else {
            continue;
        };
        checked += 1;
        let (m_h, m_w) = spec.output_dims().unwrap();
        let x = FeatureMap2D::new(h, w, random_vec(h * w, &mut rng)).unwrap();
        let k = Kernel2D::new(n, random_vec(n * n, &mut rng)).unwrap();
        let mut counts = OpCounts::default();
        transpose_conv_segregated_counted(&x, &segregate_kernel(&k).unwrap(), pad, &mut counts)
            .unwrap();
        if counts.writes != (m_h * m_w) as u64 {
            mismatches.push((h, w, n, pad, counts.writes));
        }
    }
    record(
        results,
        4,
        "no extra output elements",
        mismatches.is_empty() && pinned.writes == 9,
        format!(
            "N=4 n=5 P=0 -> {} writes; {checked} random specs, {} mismatches",
            pinned.writes,
            mismatches.len()
        ),
    );
}

fn flop_accounting(results: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut even_ratio_ok = true;
    let mut checked = 0;
    while checked < 200 {
        let (h, w, n, pad, c_in, c_out) = (
            rng.gen_range(1..=16),
            rng.gen_range(1..=16),
            rng.gen_range(2..=9),
            rng.gen_range(0..=4),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
        );
        let Ok(spec) = TransposeConvSpec::new(h, w, n, pad, c_in, c_out) else {
            continue;
        };
        checked += 1;
        let x = ChannelTensor::new(c_in, h, w, random_vec(c_in * h * w, &mut rng)).unwrap();
        let bank =
            KernelBank::new(c_in, c_out, n, random_vec(c_in * c_out * n * n, &mut rng)).unwrap();
        for engine in Engine::ALL {
            let mut counts = OpCounts::default();
            layer_forward_counted(&x, &bank, pad, engine, &mut counts).unwrap();
            let closed = match engine {
                Engine::Reference => mult_count_reference(&spec).unwrap(),
                Engine::Segregated => mult_count_segregated(&spec).unwrap(),
            };
            if counts.products != closed {
                mismatches += 1;
            }
        }
        if n % 2 == 0 {
            let ratio = mult_count_reference(&spec).unwrap() as f64
                / mult_count_segregated(&spec).unwrap() as f64;
            even_ratio_ok &= ratio == 4.0;
        }
    }
    let pinned = TransposeConvSpec::square(4, 5, 0).unwrap();
    let (r, s) = (
        mult_count_reference(&pinned).unwrap(),
        mult_count_segregated(&pinned).unwrap(),
    );
    record(
        results,
        5,
        "FLOP accounting",
        mismatches == 0 && even_ratio_ok && (r, s) == (225, 64),
        format!(
            "{checked} specs, {mismatches} count mismatches, even-n ratio exactly 4: {even_ratio_ok}, N=4 n=5 P=0: {r} vs {s}"
        ),
    );
}

fn memory_savings(results: &mut Vec<Outcome>) {
    let total =
        |n: usize, c: usize| memory_savings_bytes(n, n, 2, c, SavingsMode::UpsampledTotal).unwrap();
    let expected: &[(&str, usize, usize, u64)] = &[
        ("dcgan-2", 4, 1024, 495_616),
        ("dcgan-3", 8, 512, 739_328),
        ("dcgan-4", 16, 256, 1_254_400),
        ("dcgan-5", 32, 128, 2_298_368),
        ("gpgan-2", 4, 512, 247_808),
        ("gpgan-3", 8, 256, 369_664),
        ("ebgan-2", 4, 2048, 991_232),
        ("ebgan-3", 8, 1024, 1_478_656),
        ("ebgan-4", 16, 512, 2_508_800),
        ("ebgan-5", 32, 256, 4_596_736),
        ("ebgan-6", 64, 128, 8_786_432),
        ("ebgan-7", 128, 64, 17_172_736),
    ];
    let mut wrong: Vec<String> = expected
        .iter()
        .filter(|&&(_, n, c, want)| total(n, c) != want)
        .map(|&(name, n, c, want)| format!("{name}: {} != {want}", total(n, c)))
        .collect();
    let dataset = memory_savings_bytes(224, 224, 2, 3, SavingsMode::UpsampledMinusInput).unwrap();
    if dataset != 1_827_900 {
        wrong.push(format!("rgb224: {dataset} != 1827900"));
    }
    // the built-in suite carries the same figures; errata are flagged there
    let excluded: Vec<String> = GAN_LAYERS
        .iter()
        .filter(|g| g.erratum.is_some())
        .map(|g| format!("{}-{}", g.model, g.layer))
        .collect();
    for g in GAN_LAYERS.iter().filter(|g| g.erratum.is_none()) {
        let got = total(g.input.0, g.input.2);
        if got != g.published_savings {
            wrong.push(format!(
                "{}-{}: {got} != {}",
                g.model, g.layer, g.published_savings
            ));
        }
    }
    record(
        results,
        6,
        "memory savings byte-exact",
        wrong.is_empty(),
        format!(
            "{} table cells + 1,827,900 B ({:.4} MB); excluded errata {excluded:?}; mismatches {wrong:?}",
            expected.len(),
            dataset as f64 / 1e6
        ),
    );
}

fn wall_time(results: &mut Vec<Outcome>) {
    let start = Instant::now();
    let report = run_benchmark(&gan_suite(), &RunOptions::default());
    let elapsed = start.elapsed().as_secs_f64();
    let slow: Vec<String> = report
        .records
        .iter()
        .filter(|r| r.speedup.is_none_or(|s| s <= 1.0))
        .map(|r| format!("{} ({:?})", r.name, r.speedup))
        .collect();
    let unverified = report
        .records
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .count();
    let (sum_ref, sum_seg) = report.records.iter().fold((0.0, 0.0), |(a, b), r| {
        (
            a + r.time_ref_s.unwrap_or(0.0),
            b + r.time_seg_s.unwrap_or(0.0),
        )
    });
    let speedups: Vec<String> = report
        .records
        .iter()
        .map(|r| format!("{} {:.2}x", r.name, r.speedup.unwrap_or(0.0)))
        .collect();
    println!("    per-layer speedups: {}", speedups.join(", "));
    record(
        results,
        7,
        "segregated faster than reference on every GAN layer",
        slow.is_empty() && unverified == 0 && elapsed < 60.0,
        format!(
            "{} layers, total speedup {:.2}x, suite {elapsed:.1}s, not faster: {slow:?}, non-pass verdicts: {unverified}",
            report.records.len(),
            sum_ref / sum_seg
        ),
    );
}

fn determinism(results: &mut Vec<Outcome>) {
    let mut configs: Vec<LayerConfig> = gan_suite().into_iter().take(4).collect();
    let mut odd = LayerConfig::new("odd", (9, 7, 3), 5, 4);
    odd.pad = 1;
    configs.push(odd);
    let opts = |threads| RunOptions {
        threads,
        repeats: Some(2),
        ..RunOptions::default()
    };
    let a = run_benchmark(&configs, &opts(1)).without_timings();
    let b = run_benchmark(&configs, &opts(1)).without_timings();
    let c = run_benchmark(&configs, &opts(3)).without_timings();
    let digests_match = a
        .records
        .iter()
        .zip(&c.records)
        .all(|(x, y)| x.digest_ref == y.digest_ref && x.digest_seg == y.digest_seg);
    let all_digested = a
        .records
        .iter()
        .all(|r| r.digest_ref.is_some() && r.digest_seg.is_some());
    record(
        results,
        8,
        "determinism",
        a == b && digests_match && all_digested,
        format!(
            "same seed/threads: reports equal {}; output digests equal across 1 vs 3 threads {digests_match}",
            a == b
        ),
    );
}

fn main() {
    let mut results = Vec::new();
    oracle_equivalence(&mut results);
    segregation_structure(&mut results);
    no_extra_elements(&mut results);
    flop_accounting(&mut results);
    memory_savings(&mut results);
    wall_time(&mut results);
    determinism(&mut results);
    results.sort_by_key(|o| o.id);
    let failed: Vec<String> = results
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{} {}: {}", o.id, o.title, o.detail))
        .collect();
    println!(
        "{}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria:\n{}", failed.join("\n"));
        std::process::exit(1);
    }
}
