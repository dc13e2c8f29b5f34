//! Gaussian cluster states: compilation from finitely squeezed vacua and CZ
//! edges, nullifier and stabilizer diagnostics, node measurements that reshape
//! the graph, and one-step wire teleportation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, finite, Error, Result};
use crate::linalg::{eye, mat2, Mat, Vector};
use crate::measurements::{homodyne_condition, Quadrature};
use crate::phase_space::{tensor, GaussianState, SymplecticTransform};
use crate::unitaries::{apply, cz_gate, embed, fourier, phase_gate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Squeezing of the initial p-squeezed vacuum.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl ClusterGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let g = ClusterGraph { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return domain("graph needs at least one vertex");
        }
        for v in &self.vertices {
            finite("r", v.r)?;
        }
        for (k, &(i, j, g)) in self.edges.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::Index(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i == j {
                return domain(format!("self-loop on vertex {i}"));
            }
            finite("edge weight", g)?;
            if self.edges[..k].iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i)) {
                return domain(format!("edge ({i}, {j}) listed twice"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn adjacency(&self) -> Mat {
        let n = self.n();
        let mut a = Mat::zeros(n, n);
        for &(i, j, g) in &self.edges {
            a[(i, j)] = g;
            a[(j, i)] = g;
        }
        a
    }

    fn from_adjacency(vertices: Vec<Vertex>, a: &Mat) -> Self {
        let n = a.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if a[(i, j)] != 0.0 {
                    edges.push((i, j, a[(i, j)]));
                }
            }
        }
        ClusterGraph { vertices, edges }
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(i, j, _)| if i == v { Some(j) } else if j == v { Some(i) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn line(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![Vertex { r }; n], (1..n).map(|k| (k - 1, k, 1.0)).collect())
    }

    pub fn star(leaves: usize, r: f64) -> Result<Self> {
        Self::new(vec![Vertex { r }; leaves + 1], (1..=leaves).map(|k| (0, k, 1.0)).collect())
    }

    /// Row-major square lattice; vertex (i, j) has index i·cols + j.
    pub fn lattice(rows: usize, cols: usize, r: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let v = i * cols + j;
                if j + 1 < cols {
                    edges.push((v, v + 1, 1.0));
                }
                if i + 1 < rows {
                    edges.push((v, v + cols, 1.0));
                }
            }
        }
        Self::new(vec![Vertex { r }; rows * cols], edges)
    }
}

/// How the graph metadata relates to the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphLabel {
    /// The state is the compiled graph up to displacements (and, after a
    /// wire-shortening p-measurement, a Fourier transform on one neighbour).
    Exact,
    /// The graph was recovered from the post-measurement nullifiers with local
    /// Fourier transforms and sign flips already applied to the state.
    LocalGaussianEquivalent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub graph: ClusterGraph,
    pub state: GaussianState,
    /// Original vertex id of every current mode.
    pub labels: Vec<usize>,
    pub label: GraphLabel,
}

/// p_i → p_i + Σ_j A_ij q_j, i.e. the product of all CZ gates.
pub fn cz_network(graph: &ClusterGraph) -> SymplecticTransform {
    let a = graph.adjacency();
    let n = graph.n();
    let mut s = eye(2 * n);
    for i in 0..n {
        for j in 0..n {
            s[(2 * i + 1, 2 * j)] = a[(i, j)];
        }
    }
    SymplecticTransform::linear(s)
}

/// Product of p-squeezed vacua, Var(q) = e^{2r}, Var(p) = e^{−2r}.
pub fn squeezed_register(graph: &ClusterGraph) -> GaussianState {
    let d = Vector::from_iterator(2 * graph.n(), graph.vertices.iter().flat_map(|v| [(2.0 * v.r).exp(), (-2.0 * v.r).exp()]));
    GaussianState::from_parts(Vector::zeros(2 * graph.n()), Mat::from_diagonal(&d))
}

pub fn compile(graph: &ClusterGraph) -> Result<ClusterState> {
    graph.validate()?;
    let state = apply(&squeezed_register(graph), &cz_network(graph))?;
    Ok(ClusterState { graph: graph.clone(), state, labels: (0..graph.n()).collect(), label: GraphLabel::Exact })
}

/// Gate-by-gate compilation in the listed edge order.
pub fn compile_sequential(graph: &ClusterGraph) -> Result<GaussianState> {
    graph.validate()?;
    let mut st = squeezed_register(graph);
    for &(i, j, g) in &graph.edges {
        st = apply(&st, &embed(&cz_gate(g)?, &[i, j], graph.n())?)?;
    }
    Ok(st)
}

/// Coefficient vector of H_i = p_i − Σ_j A_ij q_j.
pub fn nullifier(graph: &ClusterGraph, i: usize) -> Vector {
    let a = graph.adjacency();
    let mut h = Vector::zeros(2 * graph.n());
    h[2 * i + 1] = 1.0;
    for j in 0..graph.n() {
        h[2 * j] -= a[(i, j)];
    }
    h
}

pub fn nullifier_variances(cluster: &ClusterState) -> Vec<f64> {
    (0..cluster.graph.n())
        .map(|i| {
            let h = nullifier(&cluster.graph, i);
            h.dot(&(&cluster.state.cov * &h))
        })
        .collect()
}

pub fn nullifier_means(cluster: &ClusterState) -> Vec<f64> {
    (0..cluster.graph.n()).map(|i| nullifier(&cluster.graph, i).dot(&cluster.state.mean)).collect()
}

/// Displacement pattern of K_i(s) = X_i(s) Π_j Z_j(g_ij s).
pub fn stabilizer_displacement(graph: &ClusterGraph, i: usize, s: f64) -> Vector {
    let a = graph.adjacency();
    let mut d = Vector::zeros(2 * graph.n());
    d[2 * i] = s;
    for j in 0..graph.n() {
        d[2 * j + 1] += a[(i, j)] * s;
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerCheck {
    /// Largest change of any nullifier mean under K_i(s).
    pub nullifier_shift: f64,
    /// 1 − F(ρ, K_i ρ K_i†) for each i.
    pub infidelity: Vec<f64>,
}

pub fn stabilizer_check(cluster: &ClusterState, s: f64) -> Result<StabilizerCheck> {
    finite("s", s)?;
    let g = &cluster.graph;
    let inv = cluster
        .state
        .cov
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("cluster covariance is singular".into()))?;
    let pure = cluster.state.is_pure(1e-6)?;
    let mut shift: f64 = 0.0;
    let mut infidelity = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        let d = stabilizer_displacement(g, i, s);
        for k in 0..g.n() {
            shift = shift.max(nullifier(g, k).dot(&d).abs());
        }
        if !pure {
            return Err(Error::Precondition("stabilizer fidelity needs a pure cluster state".into()));
        }
        // pure states with equal covariance: F = exp(−dᵀV⁻¹d/4)
        infidelity.push(-(-0.25 * d.dot(&(&inv * &d))).exp_m1());
    }
    Ok(StabilizerCheck { nullifier_shift: shift, infidelity })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeBasis {
    Q,
    P,
    /// cos θ q + sin θ p.
    Angle(f64),
}

impl NodeBasis {
    fn quadrature(self) -> Quadrature {
        match self {
            NodeBasis::Q => Quadrature::Q,
            NodeBasis::P => Quadrature::P,
            NodeBasis::Angle(t) => Quadrature::Angle(t),
        }
    }

    fn vector(self) -> (f64, f64) {
        match self {
            NodeBasis::Q => (1.0, 0.0),
            NodeBasis::P => (0.0, 1.0),
            NodeBasis::Angle(t) => (t.cos(), t.sin()),
        }
    }
}

fn rcond(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

/// Rows (in interleaved coordinates of the surviving modes) spanning the ideal
/// nullifier space after measuring `basis` on vertex `v`.
fn reduced_nullifiers(graph: &ClusterGraph, v: usize, basis: NodeBasis) -> Mat {
    let n = graph.n();
    let rows = Mat::from_fn(n, 2 * n, |i, k| nullifier(graph, i)[k]);
    let (oq, op) = basis.vector();
    // symplectic product of each nullifier with the measured observable
    let c = Vector::from_fn(n, |i, _| rows[(i, 2 * v)] * op - rows[(i, 2 * v + 1)] * oq);
    let k = c.iamax();
    let combos: Vec<Vector> = if c[k].abs() < 1e-14 {
        (0..n).filter(|&i| i != v).map(|i| Vector::from_fn(n, |j, _| if j == i { 1.0 } else { 0.0 })).collect()
    } else {
        (0..n)
            .filter(|&j| j != k)
            .map(|j| Vector::from_fn(n, |i, _| if i == j { 1.0 } else if i == k { -c[j] / c[k] } else { 0.0 }))
            .collect()
    };
    let keep: Vec<usize> = (0..2 * n).filter(|&x| x / 2 != v).collect();
    let mut out = Mat::zeros(combos.len(), 2 * (n - 1));
    for (r, lam) in combos.iter().enumerate() {
        let full = lam.transpose() * &rows;
        for (col, &x) in keep.iter().enumerate() {
            out[(r, col)] = full[x];
        }
    }
    out
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn local_map(m: usize, blocks: &[(usize, Mat)]) -> Mat {
    let mut s = eye(2 * m);
    for (t, b) in blocks {
        s.view_mut((2 * t, 2 * t), (2, 2)).copy_from(b);
    }
    s
}

/// Graph form of a Lagrangian row space. Fourier transforms are tried on
/// subsets of `prefer` first (then on small sets elsewhere); among the valid
/// choices the one closest to `target` wins. Diagonal terms are absorbed by
/// local phase gates. Returns the adjacency and the local frame map.
fn graph_form(rows: &Mat, prefer: &[usize], target: &Mat) -> Result<(Mat, Mat)> {
    let m = rows.ncols() / 2;
    let mut tiers: Vec<Vec<Vec<usize>>> = vec![Vec::new(), Vec::new()];
    for k in 0..=prefer.len() {
        tiers[0].extend(subsets(prefer, k));
    }
    for k in 1..=3.min(m) {
        for s in subsets(&(0..m).collect::<Vec<_>>(), k) {
            if s.iter().any(|x| !prefer.contains(x)) {
                tiers[1].push(s);
            }
        }
    }
    let f = fourier().s;
    for tier in tiers {
        let mut best: Option<(f64, Mat, Mat)> = None;
        for t in tier {
            let s_loc = local_map(m, &t.iter().map(|&x| (x, f.clone())).collect::<Vec<_>>());
            let r = rows * crate::phase_space::symplectic_inverse(&s_loc);
            let x = Mat::from_fn(r.nrows(), m, |i, j| r[(i, 2 * j)]);
            let y = Mat::from_fn(r.nrows(), m, |i, j| r[(i, 2 * j + 1)]);
            if y.nrows() != m || rcond(&y) < 1e-8 {
                continue;
            }
            let yi = y.try_inverse().expect("well-conditioned");
            let mut a = -(&yi * x);
            if (&a - a.transpose()).amax() > 1e-8 * a.amax().max(1.0) {
                return Err(Error::Numerical("reduced nullifiers are not of graph form".into()));
            }
            a = (&a + a.transpose()) * 0.5;
            a.iter_mut().for_each(|v| {
                if v.abs() < 1e-12 {
                    *v = 0.0
                }
            });
            let phases: Vec<(usize, Mat)> =
                (0..m).filter(|&i| a[(i, i)] != 0.0).map(|i| (i, mat2(1.0, 0.0, -a[(i, i)], 1.0))).collect();
            for i in 0..m {
                a[(i, i)] = 0.0;
            }
            let (a, sign) = balance_signs(&a);
            let flips: Vec<(usize, Mat)> = (0..m).filter(|&i| sign[i] < 0.0).map(|i| (i, -eye(2))).collect();
            let frame = local_map(m, &flips) * local_map(m, &phases) * s_loc;
            let score = (&a - target).abs().sum();
            if best.as_ref().is_none_or(|b| score < b.0 - 1e-12) {
                best = Some((score, a, frame));
            }
        }
        if let Some((_, a, frame)) = best {
            return Ok((a, frame));
        }
    }
    Err(Error::Numerical("no Fourier set brings the reduced nullifiers to graph form".into()))
}

/// Vertex signs σ with σ_i σ_j A_ij > 0 when the signing is balanced.
fn balance_signs(a: &Mat) -> (Mat, Vec<f64>) {
    let m = a.nrows();
    let mut sign = vec![0.0; m];
    for root in 0..m {
        if sign[root] != 0.0 {
            continue;
        }
        sign[root] = 1.0;
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if a[(i, j)] == 0.0 {
                    continue;
                }
                let want = sign[i] * a[(i, j)].signum();
                if sign[j] == 0.0 {
                    sign[j] = want;
                    stack.push(j);
                } else if sign[j] != want {
                    return (a.clone(), vec![1.0; m]);
                }
            }
        }
    }
    let b = Mat::from_fn(m, m, |i, j| sign[i] * sign[j] * a[(i, j)]);
    (b, sign)
}

/// Measures `vertex` (current index) in `basis` with the given outcome.
///
/// A q-measurement deletes the vertex. Other bases rebuild the graph from the
/// surviving ideal nullifiers; the local Fourier transforms and sign flips that
/// bring them to graph form are applied to the returned state.
pub fn measure_node(cluster: &ClusterState, vertex: usize, basis: NodeBasis, outcome: f64) -> Result<ClusterState> {
    let g = &cluster.graph;
    if vertex >= g.n() {
        return Err(Error::Index(format!("vertex {vertex} out of range for {} vertices", g.n())));
    }
    if g.n() < 2 {
        return domain("cannot measure the last vertex of a cluster");
    }
    let rec = homodyne_condition(&cluster.state, vertex, basis.quadrature(), outcome)?;
    let remaining: Vec<usize> = (0..g.n()).filter(|&i| i != vertex).collect();
    let vertices: Vec<Vertex> = remaining.iter().map(|&i| g.vertices[i]).collect();
    let labels: Vec<usize> = remaining.iter().map(|&i| cluster.labels[i]).collect();
    let a = g.adjacency();
    let minus = Mat::from_fn(remaining.len(), remaining.len(), |i, j| a[(remaining[i], remaining[j])]);
    if basis == NodeBasis::Q {
        return Ok(ClusterState {
            graph: ClusterGraph::from_adjacency(vertices, &minus),
            state: rec.conditioned,
            labels,
            label: cluster.label,
        });
    }
    let rows = reduced_nullifiers(g, vertex, basis);
    let nb: Vec<usize> = g.neighbours(vertex).iter().map(|&j| if j > vertex { j - 1 } else { j }).collect();
    let mut rule = minus.clone();
    if let [x, y] = nb[..] {
        rule[(x, y)] = 1.0;
        rule[(y, x)] = 1.0;
    }
    let (new_a, s_loc) = graph_form(&rows, &nb, &rule)?;
    let state = apply(&rec.conditioned, &SymplecticTransform::linear(s_loc))?;
    let label = if nb.len() == 2 && (&rule - &new_a).amax() < 1e-9 && cluster.label == GraphLabel::Exact {
        GraphLabel::Exact
    } else {
        GraphLabel::LocalGaussianEquivalent
    };
    Ok(ClusterState { graph: ClusterGraph::from_adjacency(vertices, &new_a), state, labels, label })
}

/// Gate realised by the wire measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WireGate {
    /// Plain p-measurement.
    Identity,
    /// Z(t): p is measured and t added to the result.
    Displace(f64),
    /// P(η): measures p + ηq, a rotated quadrature.
    Phase(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireResult {
    pub output: GaussianState,
    /// X(m)·F·U applied to the input with the effective outcome m.
    pub ideal: GaussianState,
    /// Effective outcome of U†pU.
    pub m_eff: f64,
    /// Output covariance minus the ideal one.
    pub distortion: Mat,
}

/// Input on the top wire, p-squeezed ancilla Var(p) = V_S on the bottom,
/// CZ, then the measurement on the top wire with raw outcome `m`.
pub fn wire_teleport_step(input: &GaussianState, v_s: f64, gate: WireGate, m: f64) -> Result<WireResult> {
    finite("v_s", v_s)?;
    finite("m", m)?;
    if input.n_modes() != 1 {
        return Err(Error::Shape(format!("wire input must be one mode, got {}", input.n_modes())));
    }
    if !(v_s > 0.0 && v_s <= 1.0) {
        return domain(format!("V_S must lie in (0,1], got {v_s}"));
    }
    let anc = GaussianState::from_parts(Vector::zeros(2), mat2(1.0 / v_s, 0.0, 0.0, v_s));
    let joint = apply(&tensor(input, &anc), &cz_gate(1.0)?)?;
    let (quad, scale, shift, u) = match gate {
        WireGate::Identity => (Quadrature::P, 1.0, 0.0, eye(2)),
        WireGate::Displace(t) => {
            finite("t", t)?;
            (Quadrature::P, 1.0, t, eye(2))
        }
        WireGate::Phase(eta) => {
            finite("eta", eta)?;
            let th = 1f64.atan2(eta);
            (Quadrature::Angle(th), th.sin(), 0.0, phase_gate(eta)?.s)
        }
    };
    let output = homodyne_condition(&joint, 0, quad, m)?.conditioned;
    let m_eff = m / scale + shift;
    let mut pre = GaussianState::from_parts(&u * &input.mean, &u * &input.cov * u.transpose());
    if let WireGate::Displace(t) = gate {
        pre.mean[1] += t;
    }
    let f = fourier().s;
    let mut ideal = GaussianState::from_parts(&f * &pre.mean, &f * &pre.cov * f.transpose());
    ideal.mean[0] += m_eff;
    let distortion = &output.cov - &ideal.cov;
    Ok(WireResult { output, ideal, m_eff, distortion })
}

/// Conditional output covariance of the plain p-measurement step for
/// V_in = [[a, c], [c, b]].
pub fn wire_output_cov(v_in: &Mat, v_s: f64) -> Mat {
    let (a, b, c) = (v_in[(0, 0)], v_in[(1, 1)], v_in[(0, 1)]);
    let den = 1.0 + b * v_s;
    mat2(b / den, -c / den, -c / den, a + v_s - c * c * v_s / den)
}

/// Position-space distortion envelope: the finite-squeezing output equals the
/// ideal wavefunction multiplied by exp(−q² V_S / 4) (vacuum variance 1).
pub fn distortion_envelope(q: f64, v_s: f64) -> f64 {
    (-q * q * v_s / 4.0).exp()
}
