mod common;

use gaussian_qi::cluster::*;
use gaussian_qi::linalg::mat2;
use gaussian_qi::phase_space::GaussianState;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn uniform(g: &ClusterGraph, r: f64) -> ClusterGraph {
    let mut g = g.clone();
    g.vertices.iter_mut().for_each(|v| v.r = r);
    g
}

fn edges_sorted(g: &ClusterGraph) -> Vec<(usize, usize, f64)> {
    let mut e: Vec<_> = g.edges.iter().map(|&(i, j, w)| (i.min(j), i.max(j), w)).collect();
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    e
}

/// Measurement pattern on the 5×4 lattice: row 1 reads (q, q, p, q) and row 3
/// reads (q, p, q, q); rows 0, 2, 4 stay.
fn lattice_pattern(r: f64) -> ClusterState {
    let g = ClusterGraph::lattice(5, 4, r).unwrap();
    let mut c = compile(&g).unwrap();
    let q_ids = [4, 5, 7, 12, 14, 15];
    let p_ids = [6, 13];
    for id in q_ids.iter().chain(&p_ids) {
        let idx = c.labels.iter().position(|l| l == id).unwrap();
        let basis = if q_ids.contains(id) { NodeBasis::Q } else { NodeBasis::P };
        c = measure_node(&c, idx, basis, 0.3).unwrap();
    }
    c
}

#[test]
fn compiled_nullifiers_are_squeezed() {
    let g = ClusterGraph::line(5, 1.0).unwrap();
    let c = compile(&g).unwrap();
    for v in nullifier_variances(&c) {
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-12);
    }
    for r in [0.0, 0.4, 1.7] {
        let c = compile(&ClusterGraph::lattice(3, 3, r).unwrap()).unwrap();
        for v in nullifier_variances(&c) {
            assert!((v - (-2.0 * r).exp()).abs() < 1e-12);
        }
        assert!(c.state.is_pure(1e-9).unwrap());
    }
}

#[test]
fn weighted_nullifiers() {
    let g = ClusterGraph::new(
        vec![Vertex { r: 0.3 }, Vertex { r: 1.1 }, Vertex { r: -0.2 }],
        vec![(0, 1, 0.7), (1, 2, -2.5), (0, 2, 1.3)],
    )
    .unwrap();
    let c = compile(&g).unwrap();
    for (v, vx) in nullifier_variances(&c).iter().zip(&g.vertices) {
        assert!((v - (-2.0 * vx.r).exp()).abs() < 1e-12);
    }
}

#[test]
fn gatewise_compilation_agrees() {
    let g = ClusterGraph::lattice(3, 4, 0.8).unwrap();
    let a = compile(&g).unwrap().state;
    let b = compile_sequential(&g).unwrap();
    assert!((&a.cov - &b.cov).amax() < 1e-12);
}

#[test]
fn stabilizers_leave_nullifiers_and_scale_as_squeezing() {
    let g = ClusterGraph::lattice(2, 3, 1.0).unwrap();
    let c = compile(&g).unwrap();
    let chk = stabilizer_check(&c, 0.5).unwrap();
    assert_eq!(chk.nullifier_shift, 0.0);

    // the state-level residual goes like e^{−2r}
    let rs: Vec<f64> = (0..8).map(|k| 1.0 + 0.5 * k as f64).collect();
    let logs: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let c = compile(&uniform(&g, r)).unwrap();
            stabilizer_check(&c, 0.5).unwrap().infidelity[2].ln()
        })
        .collect();
    let slope = common::slope(&rs, &logs);
    assert!((slope + 2.0).abs() < 1e-3, "slope {slope}");
    // small-residual closed form s²e^{−2r}/4
    let c = compile(&uniform(&g, 4.0)).unwrap();
    let inf = stabilizer_check(&c, 0.5).unwrap().infidelity;
    for x in inf {
        assert!((x / (0.25 * 0.25 * (-8.0f64).exp()) - 1.0).abs() < 1e-4);
    }
}

#[test]
fn q_measurement_deletes_vertex() {
    let g = ClusterGraph::line(3, 1.2).unwrap();
    let c = compile(&g).unwrap();
    let m = measure_node(&c, 1, NodeBasis::Q, 0.7).unwrap();
    assert!(m.graph.edges.is_empty());
    assert_eq!(m.labels, vec![0, 2]);
    assert_eq!(m.label, GraphLabel::Exact);
    // exactly the compiled remainder, up to a displacement
    let direct = compile(&m.graph).unwrap();
    assert!((&m.state.cov - &direct.state.cov).amax() < 1e-12);
}

#[test]
fn q_measurement_on_lattice_matches_compiled_remainder() {
    let g = ClusterGraph::lattice(3, 3, 0.9).unwrap();
    let c = compile(&g).unwrap();
    let m = measure_node(&c, 4, NodeBasis::Q, -1.0).unwrap();
    assert_eq!(m.graph.edges.len(), 8);
    let direct = compile(&m.graph).unwrap();
    assert!((&m.state.cov - &direct.state.cov).amax() < 1e-12);
}

#[test]
fn p_measurement_shortens_wire() {
    for r in [0.5, 1.5, 3.0] {
        let g = ClusterGraph::line(3, r).unwrap();
        let m = measure_node(&compile(&g).unwrap(), 1, NodeBasis::P, 0.4).unwrap();
        assert_eq!(edges_sorted(&m.graph), vec![(0, 1, 1.0)]);
        assert_eq!(m.label, GraphLabel::Exact);
        let vars = nullifier_variances(&m);
        assert!(vars.iter().all(|&v| v < 3.0 * (-2.0 * r).exp()), "{vars:?}");
    }
    // on a longer chain the neighbours merge and one is left hanging as a leaf
    let g = ClusterGraph::line(5, 2.0).unwrap();
    let m = measure_node(&compile(&g).unwrap(), 2, NodeBasis::P, 0.0).unwrap();
    assert_eq!(m.labels, vec![0, 1, 3, 4]);
    assert_eq!(m.graph.edges.len(), 3);
    assert_eq!(m.label, GraphLabel::LocalGaussianEquivalent);
    let deg: Vec<usize> = (0..4).map(|v| m.graph.neighbours(v).len()).collect();
    assert_eq!(deg.iter().filter(|&&d| d == 3).count(), 1);
    assert!(nullifier_variances(&m).iter().all(|&v| v < 3.0 * (-4.0f64).exp()));
}

#[test]
fn nullifier_gap_closes_with_squeezing() {
    let g = ClusterGraph::star(3, 1.0).unwrap();
    let mut gaps = Vec::new();
    for r in [1.0, 2.0, 3.0, 4.0] {
        let c = compile(&uniform(&g, r)).unwrap();
        let m = measure_node(&c, 0, NodeBasis::P, 0.2).unwrap();
        let direct = compile(&uniform(&m.graph, r)).unwrap();
        let gap = nullifier_variances(&m)
            .iter()
            .zip(nullifier_variances(&direct))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-2);
}

#[test]
fn rotated_node_measurement_stays_graph_like() {
    let g = ClusterGraph::line(4, 3.0).unwrap();
    let c = compile(&g).unwrap();
    let m = measure_node(&c, 1, NodeBasis::Angle(0.9), 0.1).unwrap();
    assert_eq!(m.graph.n(), 3);
    for v in nullifier_variances(&m) {
        assert!(v < 0.05, "{v}");
    }
}

#[test]
fn measure_node_rejects_bad_input() {
    let c = compile(&ClusterGraph::line(2, 1.0).unwrap()).unwrap();
    assert!(measure_node(&c, 2, NodeBasis::Q, 0.0).is_err());
    let one = compile(&ClusterGraph::line(1, 1.0).unwrap()).unwrap();
    assert!(measure_node(&one, 0, NodeBasis::P, 0.0).is_err());
}

#[test]
fn lattice_pattern_reduces_to_three_rows() {
    for r in [1.0, 2.0, 3.0] {
        let c = lattice_pattern(r);
        assert_eq!(c.graph.n(), 12);
        let direct = compile(&uniform(&c.graph, r)).unwrap();
        let worst = nullifier_variances(&c).into_iter().fold(0.0, f64::max);
        let gap = nullifier_variances(&c)
            .iter()
            .zip(nullifier_variances(&direct))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 10.0 * (-2.0 * r).exp(), "r = {r}: {worst}");
        assert!(gap < 10.0 * (-2.0 * r).exp());
    }
    // a spanning tree on the twelve survivors, like the drawn target, but only
    // locally equivalent to it
    let c = lattice_pattern(2.0);
    assert_eq!(c.graph.edges.len(), 11);
    assert_eq!(c.label, GraphLabel::LocalGaussianEquivalent);
    let mut seen = vec![false; 12];
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(c.graph.neighbours(v));
        }
    }
    assert!(seen.iter().all(|&x| x));
    let mut ids = c.labels.clone();
    ids.sort_unstable();
    assert_eq!(ids, vec![0, 1, 2, 3, 8, 9, 10, 11, 16, 17, 18, 19]);
}

#[test]
fn wire_step_closed_form() {
    let v_in = mat2(2.0, 0.6, 0.6, 0.8);
    let input = GaussianState::zero_mean(v_in.clone()).unwrap();
    for v_s in [1.0, 0.3, 0.05] {
        let out = wire_teleport_step(&input, v_s, WireGate::Identity, 0.7).unwrap();
        assert!((&out.output.cov - wire_output_cov(&v_in, v_s)).amax() < 1e-12);
        let b = v_in[(1, 1)];
        assert!((out.output.cov[(0, 0)] - b / (1.0 + b * v_s)).abs() < 1e-12);
    }
}

#[test]
fn wire_step_ideal_limit() {
    let v_in = mat2(1.5, -0.4, -0.4, 0.9);
    let mut input = GaussianState::zero_mean(v_in).unwrap();
    input.mean[0] = 0.5;
    input.mean[1] = -0.2;
    let mut last = f64::INFINITY;
    for k in 1..8 {
        let v_s = 10f64.powi(-k);
        let out = wire_teleport_step(&input, v_s, WireGate::Identity, 1.3).unwrap();
        let d = out.distortion.amax().max((&out.output.mean - &out.ideal.mean).amax());
        assert!(d < last);
        assert!(d < 5.0 * v_s, "{d} at {v_s}");
        last = d;
    }
}

#[test]
fn wire_gates_in_the_limit() {
    let v_in = mat2(1.2, 0.3, 0.3, 1.1);
    let input = GaussianState::zero_mean(v_in).unwrap();
    for gate in [WireGate::Displace(0.8), WireGate::Phase(0.6), WireGate::Phase(-1.4)] {
        let out = wire_teleport_step(&input, 1e-7, gate, -0.4).unwrap();
        assert!(out.distortion.amax() < 1e-5, "{gate:?}");
        assert!((&out.output.mean - &out.ideal.mean).amax() < 1e-5, "{gate:?}");
    }
}

#[test]
fn distortion_envelope_sign() {
    // pure input: output q-density equals |ψ_ideal(q)|² · envelope², renormalised
    let v_in = mat2(1.25, 0.5, 0.5, 1.0);
    let input = GaussianState::zero_mean(v_in.clone()).unwrap();
    let v_s = 0.4;
    let out = wire_teleport_step(&input, v_s, WireGate::Identity, 0.0).unwrap();
    let ideal_var = out.ideal.cov[(0, 0)];
    let h = 1e-3;
    let (mut z, mut m2) = (0.0, 0.0);
    for k in -20_000..=20_000 {
        let q = k as f64 * h;
        let w = (-q * q / (2.0 * ideal_var)).exp() * distortion_envelope(q, v_s).powi(2);
        z += w;
        m2 += w * q * q;
    }
    assert!((m2 / z - out.output.cov[(0, 0)]).abs() < 1e-9);
    // the opposite sign would broaden it
    assert!(out.output.cov[(0, 0)] < ideal_var);
}

#[test]
fn wire_step_monte_carlo() {
    let v_in = mat2(1.8, 0.7, 0.7, 1.4);
    let v_s: f64 = 0.5;
    let m = 0.6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let l = v_in.clone().cholesky().unwrap().l();
    let (mut n, mut s1, mut s2) = (0usize, 0.0, 0.0);
    for _ in 0..2_000_000 {
        let z: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let p0 = l[(1, 0)] * z[0] + l[(1, 1)] * z[1];
        let q1 = z[2] / v_s.sqrt();
        let p0c = p0 + q1;
        if (p0c - m).abs() < 0.02 {
            n += 1;
            s1 += q1;
            s2 += q1 * q1;
        }
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    let b = v_in[(1, 1)];
    let want = b / (1.0 + b * v_s);
    let se = want * (2.0 / n as f64).sqrt();
    assert!((var - want).abs() < 5.0 * se + 1e-3, "{var} vs {want} (n = {n})");
}

#[test]
fn wire_step_rejects_bad_input() {
    let input = GaussianState::vacuum(1);
    assert!(wire_teleport_step(&input, 0.0, WireGate::Identity, 0.0).is_err());
    assert!(wire_teleport_step(&input, 1.5, WireGate::Identity, 0.0).is_err());
    assert!(wire_teleport_step(&GaussianState::vacuum(2), 0.5, WireGate::Identity, 0.0).is_err());
    assert!(wire_teleport_step(&input, 0.5, WireGate::Phase(f64::NAN), 0.0).is_err());
}

#[test]
fn graph_json_roundtrip() {
    let g = ClusterGraph::line(3, 0.5).unwrap();
    let s = serde_json::to_string(&g).unwrap();
    assert_eq!(s, r#"{"vertices":[{"r":0.5},{"r":0.5},{"r":0.5}],"edges":[[0,1,1.0],[1,2,1.0]]}"#);
    let back: ClusterGraph = serde_json::from_str(&s).unwrap();
    assert_eq!(back, g);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compile_is_edge_order_invariant(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ClusterGraph::lattice(3, 3, 1.3).unwrap();
        let mut shuffled = g.clone();
        use rand::seq::SliceRandom;
        shuffled.edges.shuffle(&mut rng);
        for e in shuffled.edges.iter_mut() {
            if rand::Rng::random_bool(&mut rng, 0.5) {
                *e = (e.1, e.0, e.2);
            }
        }
        let a = compile(&g).unwrap();
        let b = compile(&shuffled).unwrap();
        prop_assert!((&a.state.cov - &b.state.cov).amax() <= 1e-14);
        let s = compile_sequential(&shuffled).unwrap();
        prop_assert!((&a.state.cov - &s.cov).amax() < 1e-11);
    }

    #[test]
    fn q_measurement_commutes(r in 0.2..2.5f64, m1 in -2.0..2.0f64, m2 in -2.0..2.0f64) {
        let c = compile(&ClusterGraph::lattice(2, 3, r).unwrap()).unwrap();
        let a = measure_node(&measure_node(&c, 1, NodeBasis::Q, m1).unwrap(), 3, NodeBasis::Q, m2).unwrap();
        let b = measure_node(&measure_node(&c, 4, NodeBasis::Q, m2).unwrap(), 1, NodeBasis::Q, m1).unwrap();
        prop_assert_eq!(&a.labels, &b.labels);
        prop_assert!((&a.state.cov - &b.state.cov).amax() < 1e-9);
        prop_assert!((&a.state.mean - &b.state.mean).amax() < 1e-9);
    }

    #[test]
    fn wire_output_is_physical(a in 0.5..3.0f64, c in -1.0..1.0f64, v_s in 0.01..1.0f64, m in -3.0..3.0f64) {
        let b = (1.0 + c * c) / a;
        let input = GaussianState::zero_mean(mat2(a, c, c, b)).unwrap();
        let out = wire_teleport_step(&input, v_s, WireGate::Identity, m).unwrap();
        prop_assert!(out.output.validate().uncertainty_ok);
        prop_assert!(out.output.is_pure(1e-8).unwrap());
        prop_assert!((&out.output.cov - wire_output_cov(&input.cov, v_s)).amax() < 1e-10);
    }
}
