//! Whole-suite checks shared by the core integration tests and the
//! acceptance target. Each returns a short summary on success and a
//! description of the first violation otherwise.

// negated comparisons are deliberate: a NaN measurement must fail
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::time::Instant;

use lasagne_core::gat::{
    gat_forward, gat_forward_trace, gat_weight_gradient, score_nodes, Activation, GatHead, GatParams, NodeEmbeddings,
    ATTENTION_NEGATIVE_SLOPE, SCORE_NEGATIVE_SLOPE,
};
use lasagne_core::graph::TypePredicateGraph;
use lasagne_core::lf::{compare, execute, parse_lf, print_lf, Action, CountMap};
use lasagne_core::linking::{apply_permutation, ed_vocab, extract_spans, link_span, EdTag, InvertedIndex, TagSequence};
use lasagne_core::matrix::Matrix;
use lasagne_core::objectives::{multitask_log_std_gradient, multitask_loss, LossBundle};
use lasagne_core::{ApproxPolicy, KnowledgeGraph, Symbol};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    elu, gat_oracle_pre, neighbor_lists, random_edges, random_kg, score_oracle, OracleHead, RefValue, Reference,
    TreeGen,
};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------------------
// executor

pub fn executor_matches_reference(seed: u64, kgs: usize, per_kg: usize) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut non_empty = 0;
    for _ in 0..kgs {
        let raw = random_kg(&mut rng);
        let kg = raw.build();
        let gen = TreeGen {
            kg: &raw,
            unknown_rate: 0.05,
            exotic_ids: false,
        };
        let reference = Reference {
            triples: &raw.triples,
            types: &raw.types,
        };
        for _ in 0..per_kg {
            let lf = gen.any(&mut rng, 4);
            ensure!(lf.depth() <= 4, "generated tree deeper than 4: {lf}");
            let got = execute(&lf, &kg, ApproxPolicy::default()).map_err(|e| format!("{lf}: {e}"))?;
            let want = reference.eval(&lf);
            let got = RefValue::from(&got);
            ensure!(got == want, "{lf}: executor {got:?}, reference {want:?}");
            if !matches!(&got, RefValue::Set(s) if s.is_empty()) {
                non_empty += 1;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    Ok(format!(
        "{checked} forms over {kgs} graphs agree ({non_empty} non-empty results) in {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// grammar

pub fn grammar_round_trip(seed: u64, count: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < count {
        let raw = random_kg(&mut rng);
        let gen = TreeGen {
            kg: &raw,
            unknown_rate: 0.1,
            exotic_ids: true,
        };
        for _ in 0..50 {
            let lf = gen.any(&mut rng, 5);
            let text = print_lf(&lf);
            let back = parse_lf(&text).map_err(|e| format!("`{text}` does not parse: {e}"))?;
            ensure!(back == lf, "`{text}` parses to a different tree");
            ensure!(print_lf(&back) == text, "`{text}` prints differently after a round trip");
            done += 1;
        }
    }
    Ok(format!("{done} random trees survive print then parse"))
}

// ---------------------------------------------------------------------------
// count maps

pub fn random_count_map(rng: &mut impl Rng) -> CountMap {
    let n = rng.random_range(0..=15);
    (0..n)
        .map(|i| (Symbol::from(format!("k{i}")), rng.random_range(0..=10)))
        .collect()
}

pub fn count_map_law_violation(d: &CountMap, n: u64) -> Option<String> {
    let policy = ApproxPolicy::default();
    let keys: BTreeSet<Symbol> = d.keys().cloned().collect();
    let g = compare(Action::Greater, d, n, policy);
    let e = compare(Action::Equal, d, n, policy);
    let l = compare(Action::Lesser, d, n, policy);
    let ge = compare(Action::Atleast, d, n, policy);
    let le = compare(Action::Atmost, d, n, policy);
    let ctx = || format!("{d:?} against {n}");

    if !(g.is_disjoint(&e) && g.is_disjoint(&l) && e.is_disjoint(&l)) {
        return Some(format!("greater/equal/lesser overlap for {}", ctx()));
    }
    let all: BTreeSet<Symbol> = g.iter().chain(&e).chain(&l).cloned().collect();
    if all != keys {
        return Some(format!("partition does not cover the keys for {}", ctx()));
    }
    if ge != g.union(&e).cloned().collect() || le != l.union(&e).cloned().collect() {
        return Some(format!("atleast/atmost composition fails for {}", ctx()));
    }
    if ge.intersection(&le).cloned().collect::<BTreeSet<_>>() != e {
        return Some(format!("atleast ∩ atmost is not equal for {}", ctx()));
    }
    let tol = policy.tolerance(n);
    let near: BTreeSet<Symbol> = d
        .iter()
        .filter(|(_, v)| v.abs_diff(n) <= tol)
        .map(|(k, _)| k.clone())
        .collect();
    if compare(Action::Approx, d, n, policy) != near || !e.is_subset(&near) {
        return Some(format!("approx disagrees with the tolerance band for {}", ctx()));
    }
    for (action, pick) in [(Action::Argmax, true), (Action::Argmin, false)] {
        let m = compare_extremum(action, d);
        let best = if pick { d.values().max() } else { d.values().min() };
        let want: BTreeSet<Symbol> = d
            .iter()
            .filter(|(_, v)| Some(*v) == best)
            .map(|(k, _)| k.clone())
            .collect();
        if m != want || m.is_empty() != d.is_empty() {
            return Some(format!("{} extremum law fails for {d:?}", action.name()));
        }
    }
    None
}

fn compare_extremum(action: Action, d: &CountMap) -> BTreeSet<Symbol> {
    use lasagne_core::LfNode;
    // argmax/argmin are only reachable through execution; feed the map in
    // through a tiny graph whose tuple counts reproduce it
    let mut b = KnowledgeGraph::builder();
    for (k, v) in d {
        b.add_type(k, "key").unwrap();
        for j in 0..*v {
            let o = format!("{k}_o{j}");
            b.triple(k, "r", &o).unwrap();
            b.add_type(&o, "val").unwrap();
        }
    }
    let kg = b.build();
    let lf = LfNode::call(
        action,
        vec![LfNode::call(
            Action::FindTupleCounts,
            vec![LfNode::predicate("r"), LfNode::type_id("key"), LfNode::type_id("val")],
        )],
    );
    match execute(&lf, &kg, ApproxPolicy::default()) {
        Ok(v) => v.as_entities().cloned().unwrap_or_default(),
        Err(_) => BTreeSet::new(),
    }
}

pub fn count_map_laws(seed: u64, count: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let d = random_count_map(&mut rng);
        let n = rng.random_range(0..=12);
        if let Some(v) = count_map_law_violation(&d, n) {
            return Err(v);
        }
    }
    Ok(format!("partition, composition and extremum laws hold on {count} maps"))
}

// ---------------------------------------------------------------------------
// GAT

/// Path graph 0 - 1 - 2 with two heads, d_in = 3, d_out = 2.
pub fn path_fixture() -> (TypePredicateGraph, NodeEmbeddings, GatParams) {
    let graph = TypePredicateGraph::from_adjacency(3, &[(0, 1), (1, 2)]).unwrap();
    let h = NodeEmbeddings::new(
        Matrix::from_rows(&[vec![0.5, -0.2, 0.1], vec![0.3, 0.8, -0.5], vec![-0.7, 0.4, 0.9]]).unwrap(),
    )
    .unwrap();
    let heads = vec![
        GatHead {
            weight: Matrix::from_rows(&[vec![0.2, -0.1, 0.4], vec![0.6, 0.3, -0.2]]).unwrap(),
            attention: vec![0.3, -0.5, 0.8, 0.1],
        },
        GatHead {
            weight: Matrix::from_rows(&[vec![-0.3, 0.5, 0.2], vec![0.1, -0.4, 0.7]]).unwrap(),
            attention: vec![-0.2, 0.6, 0.4, -0.7],
        },
    ];
    (graph, h, GatParams::new(heads, Activation::Elu).unwrap())
}

/// Values of the path fixture computed by a separate scripted oracle.
pub const PATH_OUTPUT: [[f64; 2]; 3] = [
    [0.023485821443479986, -0.0013677704018865006],
    [0.12023380945642528, 0.010747403003367809],
    [0.1743280143073393, -0.139520761865069],
];

pub const PATH_ATTENTION: [[&[f64]; 3]; 2] = [
    [
        &[0.5312591782577171, 0.4687408217422829],
        &[0.3406072771139415, 0.3224442114670613, 0.3369485114189971],
        &[0.4452207648927852, 0.5547792351072148],
    ],
    [
        &[0.3293337382976648, 0.6706662617023351],
        &[0.3024329855936351, 0.38354605992438245, 0.3140209544819824],
        &[0.6401464879689667, 0.3598535120310332],
    ],
];

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn oracle_heads(params: &GatParams) -> Vec<OracleHead> {
    params
        .heads()
        .iter()
        .map(|h| OracleHead {
            w: to_rows(&h.weight),
            a: h.attention.clone(),
        })
        .collect()
}

fn max_abs_diff(a: &Matrix, b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, row) in b.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            worst = worst.max((a[(r, c)] - v).abs());
        }
    }
    worst
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_case(rng: &mut impl Rng, max_nodes: usize, heads: usize) -> (TypePredicateGraph, NodeEmbeddings, GatParams) {
    let n = rng.random_range(1..=max_nodes);
    let d_in = rng.random_range(2..=6);
    let d_out = rng.random_range(1..=4);
    let graph = TypePredicateGraph::from_adjacency(n, &random_edges(rng, n)).unwrap();
    let h = NodeEmbeddings::new(random_matrix(rng, n, d_in)).unwrap();
    let params = GatParams::seeded(d_in, d_out, heads, rng.random()).unwrap();
    (graph, h, params)
}

pub fn gat_path_oracle() -> Check {
    let (graph, h, params) = path_fixture();
    let trace = gat_forward_trace(&graph, &h, &params).map_err(|e| e.to_string())?;
    let frozen: Vec<Vec<f64>> = PATH_OUTPUT.iter().map(|r| r.to_vec()).collect();
    let frozen_err = max_abs_diff(trace.output.matrix(), &frozen);
    ensure!(frozen_err <= 1e-9, "output differs from the frozen oracle by {frozen_err:e}");
    for (k, head) in PATH_ATTENTION.iter().enumerate() {
        for (i, row) in head.iter().enumerate() {
            for (m, want) in row.iter().enumerate() {
                let got = trace.attention[k][i][m];
                ensure!((got - want).abs() <= 1e-9, "alpha[{k}][{i}][{m}] = {got}, oracle {want}");
            }
        }
    }
    let nb = neighbor_lists(3, &[(0, 1), (1, 2)]);
    let pre = gat_oracle_pre(&nb, &to_rows(h.matrix()), &oracle_heads(&params), ATTENTION_NEGATIVE_SLOPE);
    let literal: Vec<Vec<f64>> = pre.iter().map(|r| r.iter().map(|v| elu(*v)).collect()).collect();
    let literal_err = max_abs_diff(trace.output.matrix(), &literal);
    ensure!(literal_err <= 1e-9, "output differs from the literal oracle by {literal_err:e}");
    Ok(format!("3-node output within {:.1e} of the scripted oracle", frozen_err.max(literal_err)))
}

pub fn gat_random_oracle(seed: u64, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let heads = *[1, 2, 4].choose(&mut rng).unwrap();
        let (graph, h, params) = random_case(&mut rng, 12, heads);
        let out = gat_forward(&graph, &h, &params).map_err(|e| e.to_string())?;
        let nb: Vec<Vec<usize>> = (0..graph.len()).map(|i| graph.neighbors(i).to_vec()).collect();
        let pre = gat_oracle_pre(&nb, &to_rows(h.matrix()), &oracle_heads(&params), ATTENTION_NEGATIVE_SLOPE);
        let literal: Vec<Vec<f64>> = pre.iter().map(|r| r.iter().map(|v| elu(*v)).collect()).collect();
        worst = worst.max(max_abs_diff(out.matrix(), &literal));
    }
    ensure!(worst <= 1e-9, "random graphs differ from the literal oracle by {worst:e}");
    Ok(format!("{cases} random graphs within {worst:.1e} of the literal oracle"))
}

pub fn gat_attention_normalized(seed: u64, per_k: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for heads in [1, 2, 4] {
        for _ in 0..per_k {
            let (graph, h, params) = random_case(&mut rng, 20, heads);
            let trace = gat_forward_trace(&graph, &h, &params).map_err(|e| e.to_string())?;
            ensure!(trace.attention.len() == heads, "expected {heads} heads of attention");
            for head in &trace.attention {
                for (i, row) in head.iter().enumerate() {
                    ensure!(row.len() == graph.neighbors(i).len(), "attention row {i} has the wrong length");
                    ensure!(row.iter().all(|a| *a >= 0.0), "negative attention weight");
                    worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
                }
            }
        }
    }
    ensure!(worst <= 1e-9, "attention rows deviate from 1 by {worst:e}");
    Ok(format!("attention rows sum to 1 within {worst:.1e} for K in {{1, 2, 4}}"))
}

pub fn gat_permutation_equivariant(seed: u64, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let heads = *[1, 2, 4].choose(&mut rng).unwrap();
        let (graph, h, params) = random_case(&mut rng, 20, heads);
        let mut perm: Vec<usize> = (0..graph.len()).collect();
        perm.shuffle(&mut rng);
        let out = gat_forward(&graph, &h, &params).map_err(|e| e.to_string())?;
        let pg = graph.permuted(&perm).map_err(|e| e.to_string())?;
        let ph = NodeEmbeddings::new(h.matrix().select_rows(&perm)).unwrap();
        let pout = gat_forward(&pg, &ph, &params).map_err(|e| e.to_string())?;
        let expected = out.matrix().select_rows(&perm);
        worst = worst.max(max_abs_diff(pout.matrix(), &to_rows(&expected)));
    }
    ensure!(worst <= 1e-9, "permuted outputs differ by {worst:e}");
    Ok(format!("{cases} random permutations agree within {worst:.1e}"))
}

fn weighted_output(graph: &TypePredicateGraph, h: &NodeEmbeddings, params: &GatParams, upstream: &Matrix) -> f64 {
    let out = gat_forward(graph, h, params).unwrap();
    out.matrix().as_slice().iter().zip(upstream.as_slice()).map(|(a, b)| a * b).sum()
}

pub fn gat_gradient_matches_finite_differences(seed: u64, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let heads = *[1, 2, 4].choose(&mut rng).unwrap();
        let (graph, h, params) = random_case(&mut rng, 8, heads);
        let upstream = random_matrix(&mut rng, graph.len(), params.output_dim());
        let grads = gat_weight_gradient(&graph, &h, &params, &upstream).map_err(|e| e.to_string())?;
        // one random direction over all heads, plus every single coordinate
        // of the first head
        let mut directions: Vec<Vec<Matrix>> = vec![grads
            .iter()
            .map(|g| random_matrix(&mut rng, g.rows(), g.cols()))
            .collect()];
        let (rows, cols) = (grads[0].rows(), grads[0].cols());
        for r in 0..rows {
            for c in 0..cols {
                let mut dir: Vec<Matrix> = grads.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect();
                dir[0][(r, c)] = 1.0;
                directions.push(dir);
            }
        }
        for dir in directions {
            let analytic: f64 = grads
                .iter()
                .zip(&dir)
                .map(|(g, d)| g.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a * b).sum::<f64>())
                .sum();
            let shifted = |sign: f64| {
                let mut p = params.clone();
                for (head, d) in p.heads_mut().iter_mut().zip(&dir) {
                    for (w, dv) in head.weight.as_mut_slice().iter_mut().zip(d.as_slice()) {
                        *w += sign * eps * dv;
                    }
                }
                weighted_output(&graph, &h, &p, &upstream)
            };
            let numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * eps);
            let scale = analytic.abs().max(numeric.abs()).max(1e-3);
            let rel = (analytic - numeric).abs() / scale;
            ensure!(rel <= 1e-4, "directional derivative {analytic} vs finite difference {numeric}");
            worst = worst.max(rel);
        }
    }
    Ok(format!("weight gradient within {worst:.1e} relative of central differences"))
}

// ---------------------------------------------------------------------------
// node scoring

pub const SCORE_H_BAR: [[f64; 2]; 3] = [[0.2, -0.4], [0.7, 0.1], [-0.3, 0.5]];
pub const SCORE_CTX: [f64; 2] = [0.6, -0.1];
pub const SCORE_DEC: [f64; 2] = [0.2, 0.9];
pub const SCORE_W_G: [[f64; 4]; 2] = [[0.5, -0.3, 0.2, 0.1], [-0.4, 0.6, 0.3, -0.2]];
/// Scripted oracle output for the constants above.
pub const SCORE_EXPECTED: [f64; 3] = [0.32813828542511975, 0.4121284701272992, 0.25973324444758106];

pub fn score_nodes_suite(seed: u64, cases: usize) -> Check {
    let h_bar = NodeEmbeddings::new(Matrix::from_rows(&SCORE_H_BAR.map(|r| r.to_vec())).unwrap()).unwrap();
    let w_g = Matrix::from_rows(&SCORE_W_G.map(|r| r.to_vec())).unwrap();
    let p = score_nodes(&h_bar, &SCORE_CTX, &SCORE_DEC, &w_g).map_err(|e| e.to_string())?;
    let script = score_oracle(
        &SCORE_H_BAR.map(|r| r.to_vec()),
        &SCORE_CTX,
        &SCORE_DEC,
        &SCORE_W_G.map(|r| r.to_vec()),
        SCORE_NEGATIVE_SLOPE,
    );
    for i in 0..3 {
        ensure!((p[i] - SCORE_EXPECTED[i]).abs() <= 1e-9, "node {i}: {} vs frozen {}", p[i], SCORE_EXPECTED[i]);
        ensure!((p[i] - script[i]).abs() <= 1e-9, "node {i}: {} vs literal {}", p[i], script[i]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_sum: f64 = 0.0;
    let mut worst_uniform: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=20);
        let d = rng.random_range(1..=6);
        let ctx: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dec: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w_g = random_matrix(&mut rng, d, 2 * d);
        let h_bar = NodeEmbeddings::new(random_matrix(&mut rng, n, d)).unwrap();
        let p = score_nodes(&h_bar, &ctx, &dec, &w_g).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());

        let row: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let same = NodeEmbeddings::new(Matrix::from_fn(n, d, |_, c| row[c])).unwrap();
        let u = score_nodes(&same, &ctx, &dec, &w_g).map_err(|e| e.to_string())?;
        for v in u {
            worst_uniform = worst_uniform.max((v - 1.0 / n as f64).abs());
        }
    }
    ensure!(worst_sum <= 1e-9, "probabilities deviate from summing to 1 by {worst_sum:e}");
    ensure!(worst_uniform <= 1e-9, "identical rows deviate from uniform by {worst_uniform:e}");
    Ok(format!(
        "3-node case matches the oracle; sums within {worst_sum:.1e}, identical rows uniform within {worst_uniform:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// losses

pub fn random_bundle(rng: &mut impl Rng) -> LossBundle {
    LossBundle {
        decoder: rng.random_range(0.0..10.0),
        entity_detection: rng.random_range(0.0..10.0),
        filtering: rng.random_range(0.0..10.0),
        graph: rng.random_range(0.0..10.0),
        log_stds: [(); 4].map(|_| rng.random_range(-3.0..3.0)),
    }
}

pub fn loss_suite(seed: u64, bundles: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..bundles {
        let b = LossBundle {
            log_stds: [0.0; 4],
            ..random_bundle(&mut rng)
        };
        let plain = b.decoder + b.entity_detection + b.filtering + b.graph;
        let got = multitask_loss(&b).map_err(|e| e.to_string())?;
        ensure!(got == plain, "at s = 0 got {got}, plain sum {plain}");
    }

    let analytic = LossBundle {
        decoder: 1.0,
        entity_detection: 1.0,
        filtering: 1.0,
        graph: 1.0,
        log_stds: [std::f64::consts::LN_2, 0.0, 0.0, 0.0],
    };
    let v = multitask_loss(&analytic).map_err(|e| e.to_string())?;
    ensure!((v - 4.19315).abs() <= 1e-5 && (v - (3.5 + std::f64::consts::LN_2)).abs() <= 1e-9, "analytic example gave {v}");

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..bundles {
        let b = random_bundle(&mut rng);
        let grad = multitask_log_std_gradient(&b).map_err(|e| e.to_string())?;
        for (i, &g) in grad.iter().enumerate() {
            let at = |delta: f64| {
                let mut s = b;
                s.log_stds[i] += delta;
                multitask_loss(&s).unwrap()
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let rel = (g - numeric).abs() / g.abs().max(1.0);
            ensure!(rel <= 1e-6, "d/ds{i}: analytic {g} vs central difference {numeric}");
            worst = worst.max(rel);
        }
    }
    Ok(format!("s = 0 exact, analytic example {v:.5}, gradients within {worst:.1e} on {bundles} bundles"))
}

// ---------------------------------------------------------------------------
// entity pipeline

const SYLLABLES: [&str; 12] = ["ka", "lo", "mi", "ren", "sa", "tu", "vel", "do", "ri", "an", "bo", "zel"];
const TYPES: [&str; 5] = ["human", "city", "film", "river", "company"];

fn word(i: usize) -> String {
    let mut s = String::new();
    let mut v = i;
    loop {
        s.push_str(SYLLABLES[v % SYLLABLES.len()]);
        v /= SYLLABLES.len();
        if v == 0 {
            break;
        }
    }
    let mut chars = s.chars();
    let first = chars.next().unwrap().to_uppercase();
    first.chain(chars).collect()
}

fn tagged(prefix: &[&str], label: &str, type_id: &str, slot: u32) -> TagSequence {
    let mut tokens: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    let mut tags = vec![EdTag::Outside; tokens.len()];
    let mut slots = vec![0; tokens.len()];
    for (i, w) in label.split_whitespace().enumerate() {
        tokens.push(w.to_lowercase());
        tags.push(if i == 0 {
            EdTag::Begin(type_id.into())
        } else {
            EdTag::Inside(type_id.into())
        });
        slots.push(slot);
    }
    tokens.push("?".into());
    tags.push(EdTag::Outside);
    slots.push(0);
    TagSequence::new(tokens, tags, slots).unwrap()
}

fn link_one(seq: &TagSequence, index: &InvertedIndex, kg: &KnowledgeGraph) -> Result<Symbol, String> {
    let spans = extract_spans(seq);
    let linked = spans
        .iter()
        .map(|s| link_span(s, seq.tokens(), index, kg))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let ordered = apply_permutation(&linked).map_err(|e| e.to_string())?;
    match ordered.as_slice() {
        [only] => Ok(only.clone()),
        other => Err(format!("expected one entity, got {other:?}")),
    }
}

pub fn entity_pipeline(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 100 entities with pairwise distinct labels
    let mut b = KnowledgeGraph::builder();
    let mut corpus = Vec::new();
    for i in 0..100 {
        let id = format!("q{i}");
        let label = format!("{} {}", word(i), word(i * 7 + 3));
        let tp = *TYPES.choose(&mut rng).unwrap();
        b.add_type(&id, tp).unwrap();
        b.add_label(&id, &label).unwrap();
        corpus.push((id, label, tp));
    }
    let kg = b.build();
    let index = InvertedIndex::build(&kg);
    let prefixes: [&[&str]; 3] = [&["who", "is"], &["where", "was"], &["tell", "me", "about"]];
    let mut correct = 0;
    for (id, label, tp) in &corpus {
        let seq = tagged(prefixes.choose(&mut rng).unwrap(), label, tp, 1);
        if link_one(&seq, &index, &kg)? == id.as_str() {
            correct += 1;
        }
    }
    ensure!(correct == 100, "unique-label accuracy {correct}/100");

    // groups of entities sharing one label, each with a distinct type
    let mut b = KnowledgeGraph::builder();
    let mut ambiguous = Vec::new();
    for g in 0..25 {
        let label = format!("{} {}", word(g + 200), word(g + 300));
        let size = rng.random_range(2..=TYPES.len());
        let mut types = TYPES.to_vec();
        types.shuffle(&mut rng);
        for (m, tp) in types.into_iter().take(size).enumerate() {
            let id = format!("amb{g}_{m}");
            b.add_type(&id, tp).unwrap();
            b.add_label(&id, &label).unwrap();
            ambiguous.push((id, label.clone(), tp));
        }
    }
    b.add_type("smith_politician", "common_name").unwrap();
    b.add_label("smith_politician", "Jeff Smith").unwrap();
    b.add_type("smith_player", "human").unwrap();
    b.add_label("smith_player", "Jeff Smith").unwrap();
    ambiguous.push(("smith_politician".into(), "Jeff Smith".into(), "common_name"));
    ambiguous.push(("smith_player".into(), "Jeff Smith".into(), "human"));
    let kg = b.build();
    let index = InvertedIndex::build(&kg);
    let mut resolved = 0;
    for (id, label, tp) in &ambiguous {
        ensure!(index.lookup(label).len() >= 2, "`{label}` is not ambiguous");
        let seq = tagged(&["who", "is"], label, tp, 1);
        if link_one(&seq, &index, &kg)? == id.as_str() {
            resolved += 1;
        }
    }
    ensure!(resolved == ambiguous.len(), "ambiguous resolution {resolved}/{}", ambiguous.len());
    Ok(format!("unique labels 100/100, ambiguous labels {resolved}/{resolved} with the correct type"))
}

// ---------------------------------------------------------------------------
// tag vocabulary

pub fn vocabulary_law(sizes: &[usize]) -> Check {
    for &n in sizes {
        let ids: Vec<String> = (0..n).map(|i| format!("type_{i:04}")).collect();
        let vocab = ed_vocab(ids.iter().map(String::as_str)).map_err(|e| e.to_string())?;
        ensure!(vocab.len() == 2 * n + 1, "N = {n}: {} tags", vocab.len());
        let distinct: BTreeSet<&EdTag> = vocab.iter().collect();
        ensure!(distinct.len() == vocab.len(), "N = {n}: duplicate tags");
    }
    Ok(format!("|vocab| = 2N + 1 for N in {sizes:?}"))
}
