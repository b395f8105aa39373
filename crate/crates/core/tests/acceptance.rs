//! Acceptance criteria 1-8. Each test writes one `criterion N: PASS|FAIL`
//! line to stdout (bypassing capture) and then asserts.
//!
//! Criteria 7 and 8 train default-size models and take tens of minutes on
//! one core, so they are ignored by default:
//! `cargo test --release -p softcloud --test acceptance -- --include-ignored`.

mod common;

use std::io::Write;
use std::time::Instant;

use common::gradcheck;
use common::*;
use ndarray::Array2;
use softcloud::channel::{draw_realization, transmit, ChannelConfig, Equalization, FadingMode};
use softcloud::cloud::{build_knn_graph, chamfer_distance, octree_decompose, Graph, PointCloud};
use softcloud::codecs::*;
use softcloud::gsp::*;
use softcloud::harness::*;
use softcloud::neural::GnnModel;

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn finish(n: u32, failures: Vec<String>, detail: String) {
    let pass = failures.is_empty();
    let text = if pass { detail } else { format!("{detail}; {}", failures.join("; ")) };
    report(n, pass, &text);
    assert!(pass, "criterion {n}: {text}");
}

fn noiseless_chamfer(codec: &dyn Codec, cloud: &PointCloud) -> f64 {
    let out = codec.encode(cloud).unwrap();
    chamfer_distance(cloud, &codec.decode(&out, &out.data_reals).unwrap()).unwrap()
}

#[test]
fn criterion_1_transforms() {
    let t0 = Instant::now();
    let mut fails = Vec::new();
    let (mut gft_rt, mut gft_pars, mut dct_rt, mut dct_pars) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for inst in 0..100u64 {
        let mut r = rng(1000 + inst);
        let n = 4 + (inst as usize * 7) % 60;
        let cloud = random_cloud(&mut r, n);
        let g = build_knn_graph(&cloud, 3.min(n - 1)).unwrap().into_graph();
        let lap = build_laplacian(&g, LaplacianKind::SymNormalized).unwrap();
        let basis = GftBasis::from_laplacian(&lap, 1e-13).unwrap();
        let x = gaussian_matrix(&mut r, n, 3);
        let c = gft_forward(&basis, &x).unwrap();
        gft_rt = gft_rt.max(frob(&(gft_inverse(&basis, &c).unwrap() - &x)));
        gft_pars = gft_pars.max((frob(&c).powi(2) - frob(&x).powi(2)).abs() / frob(&x).powi(2));

        let len = 1 + (inst as usize * 13) % 300;
        let s = gaussian_vec(&mut r, len).to_vec();
        let plan = DctPlan::new(len);
        let coeffs = plan.forward(&s);
        let back = plan.inverse(&coeffs);
        dct_rt = dct_rt.max(s.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let (e1, e2) = (s.iter().map(|v| v * v).sum::<f64>(), coeffs.iter().map(|v| v * v).sum::<f64>());
        dct_pars = dct_pars.max((e1 - e2).abs() / e1);
    }
    for (name, v) in [("gft round trip", gft_rt), ("gft parseval", gft_pars), ("dct round trip", dct_rt), ("dct parseval", dct_pars)] {
        if v > 1e-9 {
            fails.push(format!("{name} {v:e}"));
        }
    }

    let mut worst_res = 0.0f64;
    for &n in &[2usize, 10, 50, 100, 200, 300] {
        let a = random_symmetric(&mut rng(n as u64 + 7), n);
        let e = jacobi_eigen(&a, 1e-12).unwrap();
        let res = frob(&(a.dot(&e.vectors) - e.vectors.dot(&Array2::from_diag(&ndarray::Array1::from(e.values.clone())))));
        worst_res = worst_res.max(res / frob(&a));
    }
    if worst_res > 1e-8 {
        fails.push(format!("jacobi residual {worst_res:e}"));
    }

    let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let e = build_laplacian(&path, LaplacianKind::SymNormalized).unwrap().matrix.eigen(1e-14).unwrap();
    let path_err = e.values.iter().zip([0.0, 1.0, 2.0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if path_err > 1e-9 {
        fails.push(format!("path-3 spectrum error {path_err:e}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs >= 60.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    let detail = format!(
        "gft {gft_rt:.1e}/{gft_pars:.1e}, dct {dct_rt:.1e}/{dct_pars:.1e}, jacobi rel residual {worst_res:.1e} (300x300), path-3 {path_err:.1e}, {secs:.1}s"
    );
    finish(1, fails, detail);
}

#[test]
fn criterion_2_givens() {
    let t0 = Instant::now();
    let mut fails = Vec::new();
    let mut rt = 0.0f64;
    let mut q_err_ratio = 0.0f64;
    for &n in &[2usize, 5, 10, 25, 50, 100] {
        let q = random_orthogonal(&mut rng(2000 + n as u64), n);
        let f = givens_factorize(&q).unwrap();
        rt = rt.max(frob(&(reconstruct_basis(&f) - &q)));
        for b in 2..=16 {
            let qf = quantize_angles(&f, b).unwrap();
            let bound = std::f64::consts::PI / (1u64 << b) as f64;
            for (a, c) in f.rotations.iter().zip(&qf.rotations) {
                q_err_ratio = q_err_ratio.max((a.theta - c.theta).abs() / bound);
            }
        }
    }
    if rt > 1e-8 {
        fails.push(format!("round trip {rt:e}"));
    }
    // Exact midpoints can round one ulp past the bound.
    if q_err_ratio > 1.0 + 1e-12 {
        fails.push(format!("quantization error {q_err_ratio} x bound"));
    }

    let bits = [2, 4, 6, 8, 10, 12];
    let mut non_monotone = 0;
    let mut means = vec![0.0; bits.len()];
    let clouds = synthetic(10, 512, 2024);
    for cloud in &clouds {
        let d: Vec<f64> = bits.iter().map(|&b| noiseless_chamfer(&HoloCast::with_givens(300, 8, b), cloud)).collect();
        if !d.windows(2).all(|w| w[1] <= w[0]) {
            non_monotone += 1;
        }
        means.iter_mut().zip(&d).for_each(|(m, v)| *m += v / clouds.len() as f64);
    }
    if non_monotone > 0 {
        fails.push(format!("{non_monotone} of 10 clouds not monotone in b"));
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs >= 120.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    let curve: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    let detail = format!(
        "round trip {rt:.1e} (100x100), max angle error {q_err_ratio:.3} x pi/2^b, mean chamfer over b=2..12: {}, {secs:.1}s",
        curve.join(" ")
    );
    finish(2, fails, detail);
}

#[test]
fn criterion_3_gradients() {
    let t0 = Instant::now();
    let checks: [(&str, fn() -> f64); 8] = [
        ("gcn", gradcheck::gcn_layer_err),
        ("leaky relu", gradcheck::leaky_relu_layer_err),
        ("top-k", gradcheck::topk_pool_fixed_selection_err),
        ("power norm", gradcheck::power_normalization_err),
        ("mlp+tanh", gradcheck::decoder_mlp_err),
        ("chamfer", gradcheck::chamfer_loss_err),
        ("transmit pre/post", gradcheck::transmit_both_equalizers_err),
        ("end to end", gradcheck::end_to_end_sample_err),
    ];
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (name, f) in checks {
        let e = f();
        parts.push(format!("{name} {e:.1e}"));
        if e >= gradcheck::TOL {
            fails.push(format!("{name} relative error {e:e}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs >= 120.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    finish(3, fails, format!("worst relative errors: {}, {secs:.1}s", parts.join(", ")));
}

#[test]
fn criterion_4_channel() {
    let mut fails = Vec::new();
    let draws = 100_000;
    let snr = 7.0;
    let cfg = ChannelConfig::new(snr, FadingMode::Rayleigh, Equalization::Post, false);
    let real = draw_realization(&cfg, draws, 4).unwrap();
    let gain = real.h.iter().map(|h| h.norm_sqr()).sum::<f64>() / draws as f64;
    let noise = real.noise.iter().map(|n| n.norm_sqr()).sum::<f64>() / draws as f64;
    let sigma2 = cfg.noise_variance();
    if (gain - 1.0).abs() > 0.02 {
        fails.push(format!("mean |h|^2 = {gain}"));
    }
    if (noise / sigma2 - 1.0).abs() > 0.02 {
        fails.push(format!("noise variance {noise} vs {sigma2}"));
    }

    let mut r = rng(41);
    let z = gaussian_vec(&mut r, 301).to_vec();
    // Post-equalization undoes any fade. Pre-equalization leaves the known
    // gain |h| on each symbol, so it is the identity for h = 1 and exactly
    // |h| z under Rayleigh fading.
    for mode in [FadingMode::Awgn, FadingMode::Rayleigh] {
        for eq in [Equalization::Pre, Equalization::Post] {
            for precoding in [false, true] {
                let c = ChannelConfig::noiseless(mode, eq, precoding);
                let real = draw_realization(&c, 151, 9).unwrap();
                let (y, rep) = transmit(&z, &c, &real).unwrap();
                let identity = mode == FadingMode::Awgn || eq == Equalization::Post;
                let exact = y.iter().zip(&z).zip(&rep.gains).all(|((y, z), g)| {
                    if identity {
                        y == z
                    } else {
                        *y == z * g
                    }
                });
                if !exact {
                    fails.push(format!("noiseless {mode}/{eq} precoding={precoding} is not exact"));
                }
            }
        }
    }
    let a = ChannelConfig::new(3.0, FadingMode::Awgn, Equalization::Post, false);
    let b = ChannelConfig { precoding: true, ..a };
    let ra = draw_realization(&a, 151, 5).unwrap();
    let rb = draw_realization(&b, 151, 5).unwrap();
    if transmit(&z, &a, &ra).unwrap().0 != transmit(&z, &b, &rb).unwrap().0 {
        fails.push("awgn precoding changed the output".into());
    }
    let detail = format!(
        "mean |h|^2 {gain:.4}, noise/sigma^2 {:.4} over {draws} draws; noiseless post exact, pre exact up to |h|; awgn precoding no-op",
        noise / sigma2
    );
    finish(4, fails, detail);
}

#[test]
fn criterion_5_overhead() {
    let mut fails = Vec::new();
    let cloud = &synthetic(1, 2048, 55)[0];
    let sizes: Vec<usize> = octree_decompose(cloud, 300).unwrap().sizes().into_iter().filter(|&n| n >= 2).collect();
    let plain = HoloCast::plain(300, 8).encode(cloud).unwrap().overhead();
    let sq: usize = sizes.iter().map(|n| n * n).sum();
    if plain.metadata_symbols != sq.div_ceil(2) {
        fails.push(format!("plain metadata {} vs {}", plain.metadata_symbols, sq.div_ceil(2)));
    }
    for b in [2u32, 5, 12] {
        let g = HoloCast::with_givens(300, 8, b).encode(cloud).unwrap().overhead();
        let angles: usize = sizes.iter().map(|n| n * (n - 1) / 2).sum();
        if g.metadata_symbols != (angles * b as usize).div_ceil(2) {
            fails.push(format!("givens b={b} metadata {}", g.metadata_symbols));
        }
    }

    let cfg = ExperimentConfig::default();
    let data = load_data(&cfg).unwrap();
    let model = GnnModel::new(cfg.model.clone(), 1).unwrap();
    let gnn = GnnCodec { model: &model };
    let holo = HoloCast::plain(300, cfg.model.knn_k);
    let (mut gnn_total, mut holo_total, mut gnn_meta) = (0.0, 0.0, 0);
    for c in &data.test {
        let g = gnn.encode(c).unwrap().overhead();
        gnn_meta += g.metadata_symbols;
        gnn_total += g.total_symbols as f64 / data.test.len() as f64;
        holo_total += holo.encode(c).unwrap().overhead().total_symbols as f64 / data.test.len() as f64;
    }
    if gnn_meta != 0 {
        fails.push(format!("gnn metadata {gnn_meta}"));
    }
    let ratio = gnn_total / holo_total;
    if ratio > 0.10 {
        fails.push(format!("gnn/holocast overhead ratio {ratio:.3}"));
    }
    let detail = format!(
        "2048 points in {} blocks: plain metadata {} symbols; default config: gnn {gnn_total:.0} vs holocast:300 {holo_total:.0} symbols ({:.1}%)",
        sizes.len(),
        plain.metadata_symbols,
        100.0 * ratio
    );
    finish(5, fails, detail);
}

fn smoke_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig { seed: 6, ..ExperimentConfig::default() };
    cfg.dataset.train_count = 20;
    cfg.dataset.test_count = 1;
    cfg.dataset.points = 256;
    cfg.model.n_points = 256;
    cfg.train.schedule.epochs = 200;
    cfg.train.snr_db = 20.0;
    cfg.train.mode = FadingMode::Awgn;
    cfg
}

#[test]
fn criterion_6_training_smoke() {
    let t0 = Instant::now();
    let cfg = smoke_config();
    let data = load_data(&cfg).unwrap();
    let channel = cfg.train.channel(cfg.model.avg_power);
    let a = train_model(&cfg, &data, &channel, TRAIN_STREAM, None).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let b = train_model(&cfg, &data, &channel, TRAIN_STREAM, None).unwrap();
    let (first, last) = (a.log[0].mean_loss, a.log.last().unwrap().mean_loss);
    let mut fails = Vec::new();
    if last > 0.5 * first {
        fails.push(format!("final loss {last} above half of {first}"));
    }
    let same_log = a.log.iter().zip(&b.log).all(|(x, y)| x.mean_loss.to_bits() == y.mean_loss.to_bits());
    let identical = a.state.model == b.state.model && same_log;
    if !identical {
        fails.push("rerun differs".into());
    }
    if secs >= 600.0 {
        fails.push(format!("runtime {secs:.0}s"));
    }
    let detail = format!("loss {first:.4} -> {last:.4} ({:.0}%), rerun bit-identical: {identical}, {secs:.1}s per run", 100.0 * last / first);
    finish(6, fails, detail);
}

/// Least-squares non-increasing fit (pool adjacent violators).
fn antitonic(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb));
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

#[test]
fn antitonic_fit_pools_violations() {
    assert_eq!(antitonic(&[3.0, 2.0, 1.0]), vec![3.0, 2.0, 1.0]);
    assert_eq!(antitonic(&[1.0, 3.0, 2.0]), vec![2.0, 2.0, 2.0]);
    assert_eq!(antitonic(&[4.0, 1.0, 2.0]), vec![4.0, 1.5, 1.5]);
}

#[test]
#[ignore = "trains a default-size model; run with --include-ignored"]
fn criterion_7_trends() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    let data = load_data(&cfg).unwrap();
    let outcome = train_model(&cfg, &data, &cfg.train.channel(cfg.model.avg_power), TRAIN_STREAM, None).unwrap();
    let model = outcome.state.model;
    let at = |snr: f64| cfg.channel.at(snr, cfg.model.avg_power);
    let eval = |spec: &str, snr: f64| evaluate_codec(&spec.parse().unwrap(), Some(&model), &data.test, &at(snr), &cfg).unwrap();

    let gnn: Vec<TrialReport> = cfg.channel.snr_db.iter().map(|&s| eval("gnn", s)).collect();
    let curve: Vec<f64> = gnn.iter().map(|r| r.chamfer_mean).collect();
    let smooth = antitonic(&curve);
    let dev = curve.iter().zip(&smooth).map(|(c, s)| (c - s).abs() / s).fold(0.0, f64::max);
    let pass_a = dev <= 0.05;

    let hi = *cfg.channel.snr_db.last().unwrap();
    let gnn_hi = gnn.last().unwrap();
    let soft = SoftCast { budget: SoftBudget::Fraction(0.25), avg_power: cfg.model.avg_power };
    let floor = data.test.iter().map(|c| noiseless_chamfer(&soft, c)).sum::<f64>() / data.test.len() as f64;
    let soft_hi = eval("softcast:0.25", hi).chamfer_mean;
    let excess = soft_hi / floor - 1.0;
    let pass_b = excess < 0.10 && soft_hi > gnn_hi.chamfer_mean;

    let holo = eval("holocast:300", hi);
    let sym_ratio = holo.total_symbols as f64 / gnn_hi.total_symbols as f64;
    let pass_c = holo.chamfer_mean < gnn_hi.chamfer_mean && sym_ratio > 10.0;

    let secs = t0.elapsed().as_secs_f64();
    let pass_t = secs < 1800.0;
    let fmt: Vec<String> = curve.iter().map(|c| format!("{c:.4}")).collect();
    let detail = format!(
        "(a) {} gnn chamfer {} max dev from antitonic fit {:.1}%; (b) {} softcast:0.25 at {hi} dB {soft_hi:.4} vs noiseless {floor:.4} (+{:.1}%), gnn {:.4}; (c) {} holocast:300 {:.4} with {}x the symbols; {secs:.0}s",
        if pass_a { "ok" } else { "FAIL" },
        fmt.join(" "),
        100.0 * dev,
        if pass_b { "ok" } else { "FAIL" },
        100.0 * excess,
        gnn_hi.chamfer_mean,
        if pass_c { "ok" } else { "FAIL" },
        holo.chamfer_mean,
        sym_ratio.round(),
    );
    let fails: Vec<String> = [(pass_a, "a"), (pass_b, "b"), (pass_c, "c"), (pass_t, "runtime")]
        .iter()
        .filter(|(p, _)| !p)
        .map(|(_, n)| format!("part {n} failed"))
        .collect();
    finish(7, fails, detail);
}

#[test]
#[ignore = "trains four default-size models; run with --include-ignored"]
fn criterion_8_equalization_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { out_dir: dir.path().to_path_buf(), ..ExperimentConfig::default() };
    let rows = cmd_matrix_eq_precoding(&cfg).unwrap();
    let n = cfg.channel.snr_db.len();
    let at = |snr_idx: usize| -> Vec<f64> { (0..4).map(|v| rows[v * n + snr_idx].chamfer_mean).collect() };
    let argmin = |v: &[f64]| (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let (low, high) = (at(0), at(n - 1));
    let name = |i: usize| {
        let (eq, p) = MATRIX_VARIANTS[i];
        format!("{eq}/{}", if p { "on" } else { "off" })
    };
    // Variant order: pre/off, pre/on, post/off, post/on.
    let pass_low = argmin(&low) == 0;
    let pass_high = argmin(&high) == 3;
    let fmt = |v: &[f64]| v.iter().enumerate().map(|(i, c)| format!("{}={c:.4}", name(i))).collect::<Vec<_>>().join(" ");
    let detail = format!(
        "seed {} (seed-sensitive): at {} dB best {} [{}]; at {} dB best {} [{}]",
        cfg.seed,
        cfg.channel.snr_db[0],
        name(argmin(&low)),
        fmt(&low),
        cfg.channel.snr_db[n - 1],
        name(argmin(&high)),
        fmt(&high)
    );
    let mut fails = Vec::new();
    if !pass_low {
        fails.push("pre/off is not best at the lowest SNR".into());
    }
    if !pass_high {
        fails.push("post/on is not best at the highest SNR".into());
    }
    finish(8, fails, detail);
}
