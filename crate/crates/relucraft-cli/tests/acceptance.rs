//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! quantities and the runtime against its budget. Exits nonzero if any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use relucraft::approx::kuhn::kuhn_mesh;
use relucraft::approx::{
    cks_net, holder_interpolant, lipschitz_net, Builtin, CksTarget, HolderTarget, LipschitzSample,
};
use relucraft::calculus::{compose, identity_net, linear_combination, parallelize, sparse_compose};
use relucraft::cpwl::{compile_cpwl, derive_maxmin_1d};
use relucraft::minmax::{maxn_net, minn_net};
use relucraft::regions::{
    count_pieces_on_segment, he_weights, random_bias_experiment, telgarsky_bound, RandomBiasConfig, Segment,
};
use relucraft::simplicial::{compile_mesh, hat_basis_nets, k_t, Triangulation};
use relucraft::testkit;
use relucraft::yarotsky::{mult_net, multn_net, sawtooth_net, square_net};
use relucraft::ReluNetwork;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn identity_exactness() -> Outcome {
    let mut rng = testkit::rng(101);
    for d in [1, 2, 5] {
        for depth in [1, 3] {
            let (id, _) = identity_net(d, depth).map_err(|e| e.to_string())?;
            ensure(id.size() == 2 * d * (depth + 1), || {
                format!("d={d} L={depth}: size {} != {}", id.size(), 2 * d * (depth + 1))
            })?;
            ensure(id.depth() == depth, || format!("d={d} L={depth}: depth {}", id.depth()))?;
            for _ in 0..1000 {
                let x = testkit::random_point(&mut rng, d, -1e3, 1e3);
                ensure(id.eval(&x) == x, || {
                    format!("d={d} L={depth}: identity not exact at {x:?}")
                })?;
            }
        }
    }
    Ok("6 configurations x 1000 points exact, size = 2d(L+1)".into())
}

fn calculus_bookkeeping() -> Outcome {
    let mut rng = testkit::rng(202);
    let mut worst = 0.0f64;
    for pair in 0..50 {
        let mid = rng.gen_range(1..=4);
        let d1 = testkit::random_dims(&mut rng, 3, 6, mid);
        let n1 = testkit::random_network(&mut rng, &d1);
        let mut d2 = testkit::random_dims(&mut rng, 3, 6, 2);
        d2[0] = mid;
        let n2 = testkit::random_network(&mut rng, &d2);
        let err = |e: relucraft::Error| format!("pair {pair}: {e}");
        let (c, _) = compose(&n2, &n1).map_err(err)?;
        let (s, _) = sparse_compose(&n2, &n1).map_err(err)?;
        let (l1, l2) = (n1.depth(), n2.depth());
        ensure(c.depth() == l1 + l2, || {
            format!("pair {pair}: compose depth {}", c.depth())
        })?;
        ensure(s.depth() == l1 + l2 + 1, || {
            format!("pair {pair}: sparse depth {}", s.depth())
        })?;
        ensure(s.size() <= 2 * (n1.size() + n2.size()), || {
            format!(
                "pair {pair}: sparse size {} > 2({} + {})",
                s.size(),
                n1.size(),
                n2.size()
            )
        })?;
        // parallelization and linear combination share the input of n1
        let mut d3 = testkit::random_dims(&mut rng, 3, 6, 2);
        d3[0] = n1.input_dim();
        let n3 = testkit::random_network(&mut rng, &d3);
        let (p, pc) = parallelize(&[n1.clone(), n3.clone()], true).map_err(err)?;
        let lc_ops = [compose(&n2, &n1).map_err(err)?.0, n3.clone()];
        let (lc, lcc) = linear_combination(&lc_ops, &[1.5, -0.5], true).map_err(err)?;
        ensure(pc.holds() && lcc.holds(), || format!("pair {pair}: certificate failed"))?;
        ensure(p.depth() == l1.max(n3.depth()), || {
            format!("pair {pair}: parallel depth {}", p.depth())
        })?;
        let max_size = n1.size() + n3.size() + 2 * n1.input_dim() * l1.abs_diff(n3.depth()).max(1);
        ensure(p.size() <= 2 * max_size, || {
            format!("pair {pair}: parallel size {}", p.size())
        })?;
        for _ in 0..20 {
            let x = testkit::random_point(&mut rng, n1.input_dim(), -2.0, 2.0);
            let inner = n1.eval(&x);
            let nested = n2.eval(&inner);
            let third = n3.eval(&x);
            let stacked: Vec<f64> = inner.iter().chain(&third).copied().collect();
            let combined: Vec<f64> = nested.iter().zip(&third).map(|(a, b)| 1.5 * a - 0.5 * b).collect();
            for (got, want) in [
                (c.eval(&x), &nested),
                (s.eval(&x), &nested),
                (p.eval(&x), &stacked),
                (lc.eval(&x), &combined),
            ] {
                for (g, w) in got.iter().zip(want.iter()) {
                    worst = worst.max((g - w).abs() / w.abs().max(1.0));
                    ensure(close(*g, *w, 1e-9), || format!("pair {pair}: {g} vs {w}"))?;
                }
            }
        }
    }
    Ok(format!("50 pairs, worst relative deviation {worst:e}"))
}

fn min_max() -> Outcome {
    let mut rng = testkit::rng(303);
    for n in 1..=64 {
        let (mn, _) = minn_net(n).map_err(|e| e.to_string())?;
        let (mx, _) = maxn_net(n).map_err(|e| e.to_string())?;
        for (name, net) in [("min", &mn), ("max", &mx)] {
            ensure(net.depth() == ceil_log2(n), || {
                format!("{name}_{n}: depth {}", net.depth())
            })?;
            ensure(net.size() <= 16 * n, || format!("{name}_{n}: size {}", net.size()))?;
            ensure(net.width() <= 3 * n, || format!("{name}_{n}: width {}", net.width()))?;
        }
        for _ in 0..200 {
            let x = testkit::random_point(&mut rng, n, -100.0, 100.0);
            ensure((mn.eval1(&x) - testkit::min(&x)).abs() <= 1e-12, || {
                format!("min_{n} at {x:?}")
            })?;
            ensure((mx.eval1(&x) - testkit::max(&x)).abs() <= 1e-12, || {
                format!("max_{n} at {x:?}")
            })?;
        }
    }
    Ok("n = 1..64, 200 vectors each, metrics within bounds".into())
}

fn square_gadget() -> Outcome {
    let mut summary = Vec::new();
    for n in 1..=10 {
        let (s, _) = square_net(n).map_err(|e| e.to_string())?;
        let cells = 1usize << n;
        for k in 0..=cells {
            let x = k as f64 / cells as f64;
            ensure((s.eval1(&[x]) - x * x).abs() <= 1e-12, || format!("s_{n} at node {x}"))?;
        }
        let sup = (0..10_000)
            .map(|i| {
                let x = i as f64 / 9_999.0;
                (s.eval1(&[x]) - x * x).abs()
            })
            .fold(0.0, f64::max);
        let bound = 2f64.powi(-2 * n as i32 - 1);
        ensure(sup <= bound, || format!("s_{n}: sup error {sup:e} > {bound:e}"))?;
        if n == 10 {
            summary.push(format!("s_10 sup error {sup:e} <= {bound:e}"));
        }
    }
    Ok(summary.join(""))
}

fn multiplication() -> Outcome {
    let mut notes = Vec::new();
    for eps in [0.1, 0.01, 0.001] {
        let (m, _) = mult_net(eps).map_err(|e| e.to_string())?;
        let mut sup = 0.0f64;
        for i in 0..=200 {
            let x = -1.0 + i as f64 / 100.0;
            ensure(m.eval1(&[0.0, x]) == 0.0, || format!("mult_{eps}(0, {x}) != 0"))?;
            for j in 0..=200 {
                let y = -1.0 + j as f64 / 100.0;
                sup = sup.max((m.eval1(&[x, y]) - x * y).abs());
            }
        }
        ensure(sup <= eps, || format!("mult_{eps}: sup error {sup:e}"))?;
        notes.push(format!("mult {eps}: {sup:.2e}"));
        for n in 3..=5 {
            let (mn, _) = multn_net(n, eps).map_err(|e| e.to_string())?;
            let side = 9usize;
            let mut sup = 0.0f64;
            for idx in 0..side.pow(n as u32) {
                let mut rest = idx;
                let x: Vec<f64> = (0..n)
                    .map(|_| {
                        let k = rest % side;
                        rest /= side;
                        -1.0 + 2.0 * k as f64 / (side - 1) as f64
                    })
                    .collect();
                sup = sup.max((mn.eval1(&x) - testkit::product(&x)).abs());
            }
            ensure(sup <= eps, || format!("mult_{n},{eps}: sup error {sup:e}"))?;
        }
    }
    Ok(notes.join(", ") + "; n-fold products within eps on 9^n grids")
}

fn cpwl_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut nets = Vec::new();
    for seed in 0..100u64 {
        let f = testkit::random_cpwl_1d(seed, 8);
        let spec = derive_maxmin_1d(&f).map_err(|e| format!("seed {seed}: {e}"))?;
        let (net, _) = compile_cpwl(&spec).map_err(|e| format!("seed {seed}: {e}"))?;
        for i in 0..1000 {
            let x = -3.0 + 6.0 * i as f64 / 999.0;
            let (g, w) = (net.eval1(&[x]), f.eval(x));
            worst = worst.max((g - w).abs());
            ensure(close(g, w, 1e-9), || format!("seed {seed} at {x}: {g} vs {w}"))?;
        }
        nets.push(net);
    }
    let seg = Segment::new(vec![-1.5], vec![1.5]).unwrap();
    let pieces = |n: &ReluNetwork, s: &Segment| count_pieces_on_segment(n, s).map(|r| r.exact_count);
    for i in 0..50 {
        let (a, b) = (&nets[i], &nets[99 - i]);
        let (sum, _) = linear_combination(&[a.clone(), b.clone()], &[1.0, 1.0], true).map_err(|e| e.to_string())?;
        let (ps, pa, pb) = (
            pieces(&sum, &seg).map_err(|e| e.to_string())?,
            pieces(a, &seg).map_err(|e| e.to_string())?,
            pieces(b, &seg).map_err(|e| e.to_string())?,
        );
        ensure(ps < pa + pb, || format!("sub-additivity: {ps} + 1 > {pa} + {pb}"))?;
        let (inner, _) = square_net(1 + i % 4).map_err(|e| e.to_string())?;
        let (comp, _) = compose(a, &inner).map_err(|e| e.to_string())?;
        let unit = Segment::new(vec![0.0], vec![1.0]).unwrap();
        let image = Segment::new(vec![0.0], vec![1.0]).unwrap();
        let (pc, po, pi) = (
            pieces(&comp, &unit).map_err(|e| e.to_string())?,
            pieces(a, &image).map_err(|e| e.to_string())?,
            pieces(&inner, &unit).map_err(|e| e.to_string())?,
        );
        ensure(pc <= po * pi, || format!("sub-multiplicativity: {pc} > {po} * {pi}"))?;
    }
    Ok(format!(
        "100 functions, max abs error {worst:e}; piece invariants hold on 50 pairs"
    ))
}

fn zero_boundary_mesh(d: usize, cells: usize) -> Triangulation {
    let h = 1.0 / cells as f64;
    kuhn_mesh(d, cells, &vec![0.0; d], h, |nu, x| {
        if nu.iter().any(|&k| k == 0 || k == cells) {
            0.0
        } else {
            x.iter().map(|v| (3.0 * v).sin()).sum::<f64>() + 0.5
        }
    })
    .unwrap()
    .mesh
}

fn simplicial() -> Outcome {
    let mut notes = Vec::new();
    let mut rng = testkit::rng(707);
    for (d, cells) in [(1usize, 256usize), (2, 16)] {
        let mesh = zero_boundary_mesh(d, cells);
        let elements = mesh.simplices().len();
        ensure(elements <= 512, || format!("{elements} elements"))?;
        let (net, _) = compile_mesh(&mesh).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let x = testkit::random_point(&mut rng, d, 0.0, 1.0);
            let want = testkit::barycentric_oracle(mesh.vertices(), mesh.simplices(), mesh.values(), &x)
                .ok_or_else(|| format!("oracle misses {x:?}"))?;
            let got = net.eval1(&x);
            worst = worst.max((got - want).abs());
            ensure(close(got, want, 1e-9), || format!("d={d} at {x:?}: {got} vs {want}"))?;
        }
        let kt = k_t(&mesh);
        let interior = mesh.interior_nodes();
        let hats = hat_basis_nets(&mesh, &interior).map_err(|e| e.to_string())?;
        let size_bound = 4 * (2 + 16 * kt + kt * d);
        let depth_bound = 4 + ceil_log2(kt);
        for (&node, (hat, _)) in interior.iter().zip(&hats) {
            ensure(hat.size() <= size_bound, || {
                format!("hat {node}: size {} > {size_bound}", hat.size())
            })?;
            ensure(hat.depth() <= depth_bound, || {
                format!("hat {node}: depth {} > {depth_bound}", hat.depth())
            })?;
            for (j, v) in mesh.vertices().iter().enumerate() {
                let want = if j == node { 1.0 } else { 0.0 };
                ensure((hat.eval1(v) - want).abs() <= 1e-9, || {
                    format!("hat {node} at vertex {j}")
                })?;
            }
            let patch = mesh.patch(node).map_err(|e| e.to_string())?;
            let mut indicator = vec![0.0; mesh.vertices().len()];
            indicator[node] = 1.0;
            for _ in 0..40 {
                let x = testkit::random_point(&mut rng, d, -0.25, 1.25);
                let phi = hat.eval1(&x);
                ensure(phi >= 0.0, || format!("hat {node} negative at {x:?}"))?;
                let inside = patch.incident.iter().any(|&t| {
                    let simplex = [mesh.simplices()[t].clone()];
                    testkit::barycentric_oracle(mesh.vertices(), &simplex, &indicator, &x).is_some()
                });
                ensure(inside || phi == 0.0, || {
                    format!("hat {node} is {phi} outside its patch at {x:?}")
                })?;
            }
        }
        notes.push(format!(
            "{d}D: {elements} elements, error {worst:.1e}, {} hats with k_T = {kt}",
            hats.len()
        ));
    }
    Ok(notes.join("; "))
}

fn holder_bound() -> Outcome {
    let mut notes = Vec::new();
    let cases = [(Builtin::AbsShift, 1.0, Some(2.0)), (Builtin::SqrtAbs, 0.5, None)];
    for (target, s, bound) in cases {
        let t = HolderTarget::builtin(target, 1, s, bound).map_err(|e| e.to_string())?;
        let mut errs = Vec::new();
        for m in [4usize, 8, 16] {
            let (_, r) = holder_interpolant(&t, 1, m).map_err(|e| e.to_string())?;
            let limit = 2.0 * t.holder_norm_bound * (m as f64).powf(-s);
            ensure(r.measured_sup_error <= limit, || {
                format!("{target} M={m}: {:e} > {limit:e}", r.measured_sup_error)
            })?;
            errs.push(r.measured_sup_error);
        }
        ensure(errs[2] < errs[0], || {
            format!("{target}: error does not decrease {errs:?}")
        })?;
        notes.push(format!("{target}: {:.3e} -> {:.3e}", errs[0], errs[2]));
    }
    Ok(notes.join(", "))
}

fn cks_bound() -> Outcome {
    let target = CksTarget::builtin(Builtin::Square, 1, 2, 0.0, None).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for n in [16usize, 64, 256] {
        let (net, r) = cks_net(&target, 1, n).map_err(|e| e.to_string())?;
        let m = r.resolution as f64;
        let limit = m.powi(-2) + 3.0 * r.epsilon;
        // independent check on a fine grid of the normalized target
        let sup = (0..=20_000)
            .map(|i| {
                let x = i as f64 / 20_000.0;
                (r.prescale * net.eval1(&[x]) - r.prescale * x * x).abs()
            })
            .fold(0.0, f64::max);
        let measured = sup.max(r.measured_sup_error);
        ensure(measured <= limit, || format!("N={n}: {measured:e} > {limit:e}"))?;
        notes.push(format!("N={n}: {measured:.2e} <= {limit:.2e}"));
    }
    Ok(notes.join(", "))
}

fn lipschitz() -> Outcome {
    let mut rng = testkit::rng(1010);
    let mut c_max = 0.0f64;
    let mut weight_failures = Vec::new();
    let mut split = 0;
    for sample_idx in 0..20 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(2..=12);
        let points: Vec<Vec<f64>> = (0..m).map(|_| testkit::random_point(&mut rng, d, 0.0, 1.0)).collect();
        let values: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mt = LipschitzSample::minimal_constant(&points, &values).map_err(|e| e.to_string())?;
        let sample = LipschitzSample::new(points, values, 2.0 * mt).map_err(|e| e.to_string())?;
        let big_m = sample.lipschitz();
        let (net, _) = lipschitz_net(&sample).map_err(|e| e.to_string())?;
        for (p, &y) in sample.points().iter().zip(sample.values()) {
            ensure((net.eval1(p) - y).abs() <= 1e-9, || {
                format!("sample {sample_idx}: no interpolation at {p:?}")
            })?;
        }
        let mut evals = Vec::new();
        for _ in 0..1000 {
            let x = testkit::random_point(&mut rng, d, -0.5, 1.5);
            let (_, _, mid) = testkit::lipschitz_envelopes(sample.points(), sample.values(), big_m, &x);
            let got = net.eval1(&x);
            ensure(close(got, mid, 1e-9), || {
                format!("sample {sample_idx} at {x:?}: {got} vs {mid}")
            })?;
            evals.push((x, got));
        }
        for pair in evals.chunks(2) {
            let [(x, fx), (y, fy)] = pair else { continue };
            let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
            ensure((fx - fy).abs() <= (big_m + 1e-9) * dist, || {
                format!("sample {sample_idx}: difference quotient above M = {big_m}")
            })?;
        }
        let y_inf = sample.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let allowed = big_m.max(y_inf);
        if allowed < 1.0 {
            split += 1;
        }
        if net.max_abs_weight() > allowed {
            weight_failures.push(format!(
                "sample {sample_idx}: max weight {} > max(M, |y|) = {allowed:.3}",
                net.max_abs_weight()
            ));
        }
        c_max = c_max.max(net.depth() as f64 / (1.0 + (m as f64).log2()));
    }
    ensure(c_max <= 2.0, || format!("depth constant {c_max}"))?;
    if weight_failures.is_empty() {
        Ok(format!(
            "20 samples, weights within max(M, |y|) ({split} below 1), depth <= c(1 + log2 m) with c = {c_max:.3}"
        ))
    } else {
        Err(format!(
            "weight bound violated in {} samples ({}); depth constant c = {c_max:.3}",
            weight_failures.len(),
            weight_failures.join("; ")
        ))
    }
}

fn corpus() -> Vec<(String, ReluNetwork, Segment)> {
    let unit = || Segment::new(vec![0.0], vec![1.0]).unwrap();
    let mut nets = Vec::new();
    for n in 1..=8 {
        nets.push((format!("s_{n}"), square_net(n).unwrap().0, unit()));
        nets.push((format!("h_{n}"), sawtooth_net(n).unwrap(), unit()));
    }
    for seed in 0..20 {
        let f = testkit::random_cpwl_1d(seed, 8);
        let net = compile_cpwl(&derive_maxmin_1d(&f).unwrap()).unwrap().0;
        nets.push((
            format!("cpwl_{seed}"),
            net,
            Segment::new(vec![-2.0], vec![2.0]).unwrap(),
        ));
    }
    nets.push((
        "mesh_1d".into(),
        compile_mesh(&zero_boundary_mesh(1, 32)).unwrap().0,
        unit(),
    ));
    let diag = Segment::new(vec![0.1, 0.2], vec![0.9, 0.7]).unwrap();
    nets.push((
        "mesh_2d".into(),
        compile_mesh(&zero_boundary_mesh(2, 6)).unwrap().0,
        diag.clone(),
    ));
    nets.push(("mult".into(), mult_net(0.01).unwrap().0, diag.clone()));
    nets.push(("min_2".into(), minn_net(2).unwrap().0, diag));
    let mut rng = testkit::rng(1111);
    for i in 0..40 {
        let dims = testkit::random_dims(&mut rng, 4, 6, 1);
        let net = testkit::random_network(&mut rng, &dims);
        let a = testkit::random_point(&mut rng, dims[0], -2.0, 2.0);
        let b = testkit::random_point(&mut rng, dims[0], -2.0, 2.0);
        nets.push((format!("random_{i}"), net, Segment::new(a, b).unwrap()));
    }
    nets
}

fn regions() -> Outcome {
    let unit = Segment::new(vec![0.0], vec![1.0]).unwrap();
    for n in 1..=12 {
        let p = count_pieces_on_segment(&sawtooth_net(n).unwrap(), &unit).map_err(|e| e.to_string())?;
        ensure(p.exact_count == 1 << n, || format!("h_{n}: {} pieces", p.exact_count))?;
    }
    let corpus = corpus();
    for (name, net, seg) in &corpus {
        let p = count_pieces_on_segment(net, seg).map_err(|e| e.to_string())?;
        let bound = telgarsky_bound(net);
        ensure(p.exact_count as u128 <= bound, || {
            format!("{name}: {} > {bound}", p.exact_count)
        })?;
    }
    let seg = Segment::new(vec![-0.5, 0.0], vec![0.5, 0.0]).unwrap();
    let experiment = |widths: &[usize]| {
        let cfg = RandomBiasConfig {
            weights: he_weights(widths, 7).unwrap(),
            delta: 0.5,
            trials: 200,
            c_nu: None,
            seed: 42,
        };
        random_bias_experiment(&cfg, &seg).map_err(|e| e.to_string())
    };
    let shallow = experiment(&[2, 5, 5, 5, 1])?;
    let deep = experiment(&[2, 5, 5, 5, 5, 5, 5, 1])?;
    ensure(shallow.mean_pieces <= shallow.bound, || {
        format!("mean {} above bound {}", shallow.mean_pieces, shallow.bound)
    })?;
    let ratio = deep.mean_pieces / shallow.mean_pieces;
    ensure(ratio <= 4.0, || format!("mean(L=6) / mean(L=3) = {ratio}"))?;
    Ok(format!(
        "h_1..h_12 exact, {} corpus nets within (2w)^L; L=3 mean {:.2} <= bound {:.1} (estimated C_nu {:.3}); L=6 mean {:.2}, ratio {ratio:.2}",
        corpus.len(),
        shallow.mean_pieces,
        shallow.bound,
        shallow.c_nu,
        deep.mean_pieces
    ))
}

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

fn cli(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_relucraft"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("CLI binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: out.stdout,
        stderr: out.stderr,
    }
}

const INPUTS: [(&str, &str); 5] = [
    (
        "abs.json",
        r#"{"breakpoints": [0], "values": [0], "left_slope": -1, "right_slope": 1}"#,
    ),
    (
        "hat.json",
        r#"{"dim": 1, "vertices": [[0], [0.5], [1]], "simplices": [[0, 1], [1, 2]], "values": [0, 1, 0]}"#,
    ),
    (
        "data.json",
        r#"{"points": [[0, 0], [1, 0], [0, 1]], "values": [0, 1, -1], "lipschitz": 2.5}"#,
    ),
    (
        "tight.json",
        r#"{"points": [[0], [1]], "values": [0, 3], "lipschitz": 1}"#,
    ),
    (
        "edge.json",
        r#"{"dim": 1, "vertices": [[0], [0.5], [1]], "simplices": [[0, 1], [1, 2]], "values": [1, 1, 0]}"#,
    ),
];

const SCRIPT: &[&[&str]] = &[
    &["gadget", "identity", "--d", "2", "--depth", "2", "-o", "id.json"],
    &["gadget", "min", "--n", "5", "-o", "min.json"],
    &["gadget", "max", "--n", "3", "-o", "max.json", "--hexfloat"],
    &["gadget", "sawtooth", "--n", "4", "-o", "saw.json"],
    &["gadget", "square", "--n", "4", "-o", "sq.json"],
    &["gadget", "mult", "--eps", "0.01", "-o", "mult.json"],
    &["gadget", "multn", "--n", "3", "--eps", "0.01", "-o", "multn.json"],
    &[
        "gadget",
        "poly",
        "--coeffs",
        "1,-2,0.5",
        "--eps",
        "0.01",
        "-o",
        "poly.json",
    ],
    &["compile-cpwl", "abs.json", "-o", "abs_net.json"],
    &["compile-mesh", "hat.json", "-o", "hat_net.json"],
    &["lipschitz", "data.json", "-o", "lip.json"],
    &["eval", "mult.json", "--at", "0,1", "--at", "0.3,-0.7"],
    &[
        "verify",
        "sq.json",
        "--against",
        "builtin:square",
        "--tol",
        "0.001953125",
    ],
    &["verify", "hat_net.json", "--against", "mesh:hat.json"],
    &["verify", "abs_net.json", "--against", "maxmin:abs.json"],
    &["verify", "lip.json", "--against", "lipschitz:data.json"],
    &[
        "approx-hoelder",
        "--target",
        "sin-pi",
        "--d",
        "2",
        "--m",
        "6",
        "--table",
        "11",
        "-o",
        "ho.json",
    ],
    &[
        "approx-cks",
        "--target",
        "square",
        "--k",
        "2",
        "--n",
        "16",
        "-o",
        "cks.json",
    ],
    &["count-regions", "saw.json", "--from", "0", "--to", "1", "--breakpoints"],
    &["random-pieces", "--trials", "50", "--seed", "11"],
    &[
        "random-pieces",
        "--widths",
        "3,4,4,1",
        "--trials",
        "20",
        "--seed",
        "5",
        "--delta",
        "0.25",
    ],
];

fn transcript(dir: &Path) -> Result<Vec<u8>, String> {
    for (name, text) in INPUTS {
        std::fs::write(dir.join(name), text).map_err(|e| e.to_string())?;
    }
    let mut all = Vec::new();
    for args in SCRIPT {
        let run = cli(dir, args);
        if run.code != 0 {
            return Err(format!(
                "{args:?} exited with {}: {}",
                run.code,
                String::from_utf8_lossy(&run.stderr)
            ));
        }
        all.extend(run.stdout);
        all.extend(run.stderr);
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        all.extend(f.file_name().unwrap().as_encoded_bytes());
        all.extend(std::fs::read(&f).map_err(|e| e.to_string())?);
    }
    Ok(all)
}

fn cli_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ta = transcript(a.path())?;
    let tb = transcript(b.path())?;
    ensure(ta == tb, || "outputs differ between identical runs".into())?;
    let d = a.path();
    let expected: &[(&[&str], i32)] = &[
        (&["gadget", "square", "-o", "x.json"], 2),
        (&["gadget", "mult", "--eps", "1.5", "-o", "x.json"], 2),
        (&["gadget", "bogus", "-o", "x.json"], 2),
        (&["lipschitz", "tight.json", "-o", "x.json"], 3),
        (&["compile-mesh", "edge.json", "-o", "x.json"], 3),
        (&["verify", "mult.json", "--against", "maxmin:abs.json"], 3),
        (&["count-regions", "saw.json", "--from", "0,0", "--to", "1,1"], 3),
        (
            &["verify", "sq.json", "--against", "builtin:square", "--tol", "1e-6"],
            4,
        ),
        (&["eval", "missing.json", "--at", "0"], 1),
    ];
    for (args, want) in expected {
        let got = cli(d, args).code;
        ensure(got == *want, || format!("{args:?}: exit {got}, expected {want}"))?;
    }
    Ok(format!(
        "{} commands byte-identical across two runs ({} bytes); {} exit codes as documented",
        SCRIPT.len(),
        ta.len(),
        expected.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("identity exactness and size", identity_exactness, 1),
        ("calculus bookkeeping", calculus_bookkeeping, 5),
        ("min/max gadgets", min_max, 5),
        ("square gadget", square_gadget, 2),
        ("multiplication", multiplication, 30),
        ("CPWL compiler round trip", cpwl_round_trip, 30),
        ("simplicial compiler", simplicial, 60),
        ("Hölder bound", holder_bound, 60),
        ("C^{k,s} additive bound", cks_bound, 120),
        ("optimal Lipschitz reconstruction", lipschitz, 60),
        ("region counting", regions, 120),
        ("CLI determinism and exit codes", cli_determinism, 10),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(msg), true) => ("PASS", msg.clone()),
            (Ok(msg), false) => ("FAIL", format!("{msg}; over the time budget")),
            (Err(msg), _) => ("FAIL", msg.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "[{status}] {:>2}. {name}: {detail} ({:.2} s, budget {budget} s)",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
