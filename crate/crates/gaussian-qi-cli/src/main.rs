use std::io::{ErrorKind, Read, Write};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Command, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use gaussian_qi::channels;
use gaussian_qi::cluster::{self, ClusterGraph, NodeBasis};
use gaussian_qi::discrimination::{self, BinaryHypothesis, Receiver};
use gaussian_qi::entanglement;
use gaussian_qi::fock_oracle::{self, FockKind};
use gaussian_qi::io;
use gaussian_qi::measurements::{self, MeasurementKind, Quadrature};
use gaussian_qi::phase_space::{make_state, GaussianState, StateKind};
use gaussian_qi::protocols;
use gaussian_qi::qkd::{self, ConfidenceRegion, Detection, QkdScenario, Reconciliation, SourceStates};
use gaussian_qi::unitaries;
use gaussian_qi::LogBase;

#[derive(Parser, Debug)]
#[command(name = "gaussian-qi", version, about = "Gaussian quantum information in phase space")]
struct Cli {
    /// Logarithm base for entropies and rates: 2 or e.
    #[arg(long, global = true, default_value = "2", value_parser = parse_base)]
    log_base: LogBase,
    /// Units convention; only 2 is accepted.
    #[arg(long, global = true, default_value_t = 2.0)]
    hbar: f64,
    /// Seed for every sampling subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Stream sweep rows as CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

fn parse_base(s: &str) -> std::result::Result<LogBase, String> {
    LogBase::parse(s).ok_or_else(|| format!("log-base must be 2 or e, got {s}"))
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build, validate and inspect states
    #[command(subcommand)]
    State(StateCmd),
    /// Apply Gaussian unitaries
    #[command(subcommand)]
    Unitary(UnitaryCmd),
    /// Homodyne/heterodyne conditioning
    Measure(MeasureArgs),
    /// Separability and entanglement measures
    #[command(subcommand)]
    Entangle(EntangleCmd),
    /// Error bounds and coherent-state receivers
    #[command(subcommand)]
    Discriminate(DiscriminateCmd),
    /// One-mode channels: classification, capacities, illumination
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Teleportation, cloning, swapping, dense coding
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// CV-QKD key rates and thresholds
    #[command(subcommand)]
    Qkd(QkdCmd),
    /// Cluster-state compilation and node measurements
    #[command(subcommand)]
    Cluster(ClusterCmd),
    /// Number-basis cross-checks
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Vacuum,
    Thermal,
    Coherent,
    Squeezed,
    General,
    Epr,
}

#[derive(Args, Debug)]
struct StateSpec {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    modes: usize,
    #[arg(long = "n-bar", default_value_t = 0.0)]
    n_bar: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Re,Im pairs, one per mode.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum StateCmd {
    Make(StateSpec),
    Validate {
        #[arg(long)]
        json: String,
    },
    Entropy {
        #[arg(long)]
        json: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Gate {
    Rotation,
    Squeeze,
    Phase,
    Fourier,
    Displace,
    Beamsplitter,
    Squeeze2,
    Cz,
}

#[derive(Subcommand, Debug)]
enum UnitaryCmd {
    Apply {
        #[arg(long)]
        json: String,
        #[arg(long, value_enum)]
        gate: Gate,
        /// Gate parameter (angle, r, η, τ, g); Re,Im for displacements.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        param: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        modes: Vec<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MeasKind {
    Q,
    P,
    Angle,
    Heterodyne,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[arg(long)]
    json: String,
    #[arg(long, default_value_t = 0)]
    mode: usize,
    #[arg(long, value_enum)]
    kind: MeasKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    /// Fixed outcome; sampled with --seed when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    outcome: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum EntangleCmd {
    Test {
        #[arg(long)]
        json: String,
        /// Modes on the second side of the bipartition.
        #[arg(long, value_delimiter = ',')]
        split: Vec<usize>,
        #[arg(long)]
        bisymmetric: bool,
    },
}

#[derive(Subcommand, Debug)]
enum DiscriminateCmd {
    Bounds {
        #[arg(long)]
        json0: String,
        #[arg(long)]
        json1: String,
        #[arg(long, default_value_t = 1)]
        copies: u32,
    },
    Receivers {
        /// Comma-separated |α|² values.
        #[arg(long, value_delimiter = ',')]
        alpha2: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
}

#[derive(Subcommand, Debug)]
enum ChannelCmd {
    Classify {
        #[arg(long)]
        json: String,
    },
    Capacity {
        #[arg(long)]
        json: String,
        #[arg(long = "m-bar")]
        m_bar: f64,
    },
    Illumination {
        #[arg(long)]
        kappa: f64,
        #[arg(long = "n-bar")]
        n_bar: f64,
        #[arg(long = "m-bar")]
        m_bar: f64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        copies: Vec<u32>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Input {
    Coherent,
    Squeezed,
}

#[derive(Subcommand, Debug)]
enum ProtocolCmd {
    Teleport {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value = "coherent")]
        input: Input,
        /// Squeezing of a squeezed input.
        #[arg(long = "input-r", default_value_t = 0.0)]
        input_r: f64,
    },
    Clone {
        #[arg(long, value_enum, default_value = "coherent")]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "0,0", allow_hyphen_values = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
    },
    Swap {
        #[arg(long = "r-a")]
        r_a: f64,
        #[arg(long = "r-b")]
        r_b: f64,
    },
    Densecode {
        #[arg(long = "m-bar")]
        m_bar: f64,
        #[arg(long = "v-sq")]
        v_sq: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario JSON; overrides the flags below.
    #[arg(long)]
    json: Option<String>,
    #[arg(long, value_enum, default_value = "coherent")]
    states: StatesArg,
    #[arg(long, value_enum, default_value = "homodyne")]
    detection: DetectionArg,
    #[arg(long = "rec", value_enum, default_value = "reverse")]
    rec: RecArg,
    #[arg(long = "V", value_delimiter = ',', default_value = "20")]
    v: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    tau: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    chi: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    beta: Vec<f64>,
    #[arg(long)]
    phi: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StatesArg {
    Coherent,
    Squeezed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DetectionArg {
    Homodyne,
    Heterodyne,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RecArg {
    Direct,
    Reverse,
}

impl From<DetectionArg> for Detection {
    fn from(d: DetectionArg) -> Self {
        match d {
            DetectionArg::Homodyne => Detection::Homodyne,
            DetectionArg::Heterodyne => Detection::Heterodyne,
        }
    }
}

#[derive(Subcommand, Debug)]
enum QkdCmd {
    Rate(ScenarioArgs),
    Threshold(ScenarioArgs),
    Postselect {
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        chi: f64,
        /// Modulation variance V_a.
        #[arg(long = "va")]
        v_a: f64,
        #[arg(long, value_enum, default_value = "homodyne")]
        detection: DetectionArg,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    Finite {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long = "N")]
        n_total: u64,
        #[arg(long = "n")]
        n_key: u64,
        /// Constant Δ(n) correction.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Constant D(n) penalty.
        #[arg(long = "d-pen", default_value_t = 0.0)]
        d_pen: f64,
        #[arg(long = "tau-range", value_delimiter = ',')]
        tau_range: Option<Vec<f64>>,
        #[arg(long = "chi-range", value_delimiter = ',')]
        chi_range: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph JSON.
    #[arg(long)]
    json: Option<String>,
    /// Line of n vertices instead of JSON.
    #[arg(long)]
    line: Option<usize>,
    /// rows,cols lattice instead of JSON.
    #[arg(long, value_delimiter = ',')]
    lattice: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
}

#[derive(Subcommand, Debug)]
enum ClusterCmd {
    Build(GraphArgs),
    Measure {
        #[command(flatten)]
        graph: GraphArgs,
        /// Original vertex ids, measured in order.
        #[arg(long, value_delimiter = ',')]
        vertex: Vec<usize>,
        /// q, p or an angle in radians, one per vertex.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        basis: Vec<String>,
        /// Fixed outcomes; sampled with --seed when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        outcome: Option<Vec<f64>>,
    },
    Nullifiers(GraphArgs),
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    /// Kinds: coherent:RE,IM  squeezed:R  thermal:N  epr:R  sqthermal2:R,NA,NB
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = fock_oracle::DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        s: Vec<f64>,
    },
}

struct Ctx {
    base: LogBase,
    seed: u64,
    csv: bool,
}

fn allow_negatives(cmd: Command) -> Command {
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    names.iter().fold(cmd.allow_negative_numbers(true), |c, n| c.mut_subcommand(n, allow_negatives))
}

fn main() -> ExitCode {
    let matches = allow_negatives(Cli::command()).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<gaussian_qi::Error>() {
        Some(err) if !err.is_validation() => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.hbar != io::HBAR {
        bail!(gaussian_qi::Error::Domain(format!("hbar: only --hbar 2 is supported, got {}", cli.hbar)));
    }
    let ctx = Ctx { base: cli.log_base, seed: cli.seed, csv: cli.csv };
    match cli.cmd {
        Cmd::State(c) => state_cmd(&ctx, c),
        Cmd::Unitary(c) => unitary_cmd(c),
        Cmd::Measure(a) => measure_cmd(&ctx, a),
        Cmd::Entangle(c) => entangle_cmd(&ctx, c),
        Cmd::Discriminate(c) => discriminate_cmd(&ctx, c),
        Cmd::Channel(c) => channel_cmd(&ctx, c),
        Cmd::Protocol(c) => protocol_cmd(&ctx, c),
        Cmd::Qkd(c) => qkd_cmd(&ctx, c),
        Cmd::Cluster(c) => cluster_cmd(&ctx, c),
        Cmd::Oracle(c) => oracle_cmd(c),
    }
}

/// Inline JSON, `@path`, or `-` for stdin.
fn read_doc(arg: &str) -> Result<String> {
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else if let Some(path) = arg.strip_prefix('@') {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    } else {
        Ok(arg.to_string())
    }
}

fn load_state(arg: &str) -> Result<GaussianState> {
    Ok(io::state_from_json(&read_doc(arg)?)?)
}

fn state_value(s: &GaussianState) -> Value {
    serde_json::from_str(&io::state_to_json(s)).expect("valid JSON")
}

/// A closed stdout (e.g. piped into `head`) is not an error.
fn quiet_pipe(r: std::io::Result<()>) -> Result<()> {
    match r {
        Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit(v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    quiet_pipe(writeln!(std::io::stdout().lock(), "{text}"))
}

fn emit_csv(columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    quiet_pipe(writeln!(out, "{}", io::csv_header_comment()))?;
    let mut w = csv::Writer::from_writer(out);
    let mut write = || -> csv::Result<()> {
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    };
    match write() {
        Err(e) => match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == ErrorKind::BrokenPipe => Ok(()),
            _ => Err(e.into()),
        },
        Ok(()) => Ok(()),
    }
}

fn complex_list(xs: &[f64], field: &str) -> Result<Vec<Complex64>> {
    if xs.len() % 2 != 0 {
        bail!(gaussian_qi::Error::Domain(format!("{field}: expected Re,Im pairs, got {} numbers", xs.len())));
    }
    Ok(xs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

fn build_state(spec: &StateSpec) -> Result<GaussianState> {
    let alpha = complex_list(&spec.alpha, "alpha")?;
    let first = alpha.first().copied().unwrap_or_default();
    let kind = match spec.kind {
        Kind::Vacuum => StateKind::Vacuum,
        Kind::Thermal => StateKind::Thermal { n_bar: spec.n_bar },
        Kind::Coherent => {
            StateKind::Coherent { alpha: if alpha.is_empty() { vec![Complex64::default(); spec.modes] } else { alpha } }
        }
        Kind::Squeezed => StateKind::SqueezedVacuum { r: spec.r, theta: spec.theta },
        Kind::General => StateKind::GeneralOneMode { n_bar: spec.n_bar, r: spec.r, theta: spec.theta, alpha: first },
        Kind::Epr => StateKind::Epr { r: spec.r },
    };
    let modes = match spec.kind {
        Kind::Epr => 2,
        Kind::Coherent if !spec.alpha.is_empty() => spec.alpha.len() / 2,
        _ => spec.modes,
    };
    Ok(make_state(&kind, modes)?)
}

fn state_cmd(ctx: &Ctx, c: StateCmd) -> Result<()> {
    match c {
        StateCmd::Make(spec) => emit(&state_value(&build_state(&spec)?)),
        StateCmd::Validate { json } => {
            let text = read_doc(&json)?;
            let doc: io::StateDoc =
                serde_json::from_str(&text).map_err(|e| gaussian_qi::Error::Domain(format!("state: {e}")))?;
            let loaded = io::state_from_json(&text);
            let (sym, unc, min) = match gaussian_qi::phase_space::validate_moments(
                &gaussian_qi::linalg::Vector::from_vec(doc.mean.clone()),
                &gaussian_qi::linalg::Mat::from_fn(doc.cov.len(), doc.cov.len(), |i, j| {
                    doc.cov[i].get(j).copied().unwrap_or(f64::NAN)
                }),
            ) {
                Ok(d) => (d.symmetric_ok, d.uncertainty_ok, d.min_sympl_eig),
                Err(_) => (false, false, None),
            };
            emit(&json!({
                "valid": loaded.is_ok(),
                "modes": doc.mean.len() / 2,
                "symmetric_ok": sym,
                "uncertainty_ok": unc,
                "min_sympl_eig": min,
                "error": loaded.as_ref().err().map(|e| e.to_string()),
            }))?;
            loaded.map(|_| ()).map_err(Into::into)
        }
        StateCmd::Entropy { json } => {
            let s = load_state(&json)?;
            emit(&json!({
                "entropy": s.entropy(ctx.base)?,
                "symplectic_eigenvalues": s.symplectic_eigenvalues()?,
                "pure": s.is_pure(1e-10)?,
            }))
        }
    }
}

fn param(p: &[f64], k: usize, name: &str) -> Result<f64> {
    p.get(k).copied().ok_or_else(|| anyhow!(gaussian_qi::Error::Domain(format!("param: gate needs {name}"))))
}

fn unitary_cmd(c: UnitaryCmd) -> Result<()> {
    let UnitaryCmd::Apply { json, gate, param: p, modes } = c;
    let st = load_state(&json)?;
    let t = match gate {
        Gate::Rotation => unitaries::rotation(param(&p, 0, "an angle")?)?,
        Gate::Squeeze => unitaries::squeeze1(param(&p, 0, "r")?)?,
        Gate::Phase => unitaries::phase_gate(param(&p, 0, "eta")?)?,
        Gate::Fourier => unitaries::fourier(),
        Gate::Displace => unitaries::displacement(&complex_list(&p, "param")?)?,
        Gate::Beamsplitter => unitaries::beam_splitter(param(&p, 0, "tau")?)?,
        Gate::Squeeze2 => unitaries::squeeze2(param(&p, 0, "r")?)?,
        Gate::Cz => unitaries::cz_gate(param(&p, 0, "g")?)?,
    };
    let modes = if t.n_modes() > 1 && modes == [0] { (0..t.n_modes()).collect() } else { modes };
    emit(&state_value(&unitaries::apply_on(&st, &t, &modes)?))
}

fn measure_cmd(ctx: &Ctx, a: MeasureArgs) -> Result<()> {
    let st = load_state(&a.json)?;
    let quad = match a.kind {
        MeasKind::Q => Some(Quadrature::Q),
        MeasKind::P => Some(Quadrature::P),
        MeasKind::Angle => Some(Quadrature::Angle(a.theta)),
        MeasKind::Heterodyne => None,
    };
    let rec = match (quad, &a.outcome) {
        (Some(q), Some(o)) if o.len() == 1 => measurements::homodyne_condition(&st, a.mode, q, o[0])?,
        (None, Some(o)) if o.len() == 2 => measurements::heterodyne_condition(&st, a.mode, [o[0], o[1]])?,
        (_, Some(o)) => {
            bail!(gaussian_qi::Error::Domain(format!("outcome: expected {} values, got {}", if quad.is_some() { 1 } else { 2 }, o.len())))
        }
        (Some(q), None) => measurements::sample(&st, a.mode, MeasurementKind::Homodyne(q), ctx.seed)?,
        (None, None) => measurements::sample(&st, a.mode, MeasurementKind::Heterodyne, ctx.seed)?,
    };
    emit(&json!({ "outcome": rec.outcome, "state": state_value(&rec.conditioned) }))
}

fn entangle_cmd(ctx: &Ctx, c: EntangleCmd) -> Result<()> {
    let EntangleCmd::Test { json, split, bisymmetric } = c;
    let st = load_state(&json)?;
    let ppt = entanglement::ppt_test(&st, &split, bisymmetric)?;
    let pure = st.is_pure(1e-10)?;
    emit(&json!({
        "entangled": ppt.entangled,
        "verdict": format!("{:?}", ppt.verdict),
        "min_pt_sympl_eig": ppt.min_pt_sympl_eig,
        "log_negativity": entanglement::log_negativity(&st, &split, ctx.base)?,
        "entropy_of_entanglement": if pure { Some(entanglement::entropy_of_entanglement(&st, &split, ctx.base)?) } else { None },
    }))
}

fn discriminate_cmd(ctx: &Ctx, c: DiscriminateCmd) -> Result<()> {
    match c {
        DiscriminateCmd::Bounds { json0, json1, copies } => {
            let mut h = BinaryHypothesis::new(load_state(&json0)?, load_state(&json1)?)?;
            h.copies = copies;
            let cb = discrimination::chernoff_bound(&h)?;
            let mc = discrimination::multicopy_bounds(&h)?;
            let fid = if h.rho0.n_modes() == 1 && copies == 1 {
                let f = discrimination::fidelity_1mode(&h.rho0, &h.rho1)?;
                let b = discrimination::fidelity_bounds(f)?;
                json!({ "fidelity": f, "lower": b.lower, "upper": b.upper })
            } else {
                Value::Null
            };
            emit(&json!({
                "copies": copies,
                "p_qc": mc.p_qc,
                "p_b": mc.p_b,
                "s_opt": cb.s_opt,
                "c_min": cb.c_min,
                "exponent": mc.kappa,
                "fidelity_bounds": fid,
            }))
        }
        DiscriminateCmd::Receivers { alpha2, eta } => {
            let mut rows = Vec::new();
            for &a2 in &alpha2 {
                if !(a2 >= 0.0) {
                    bail!(gaussian_qi::Error::Domain(format!("alpha2: must be >= 0, got {a2}")));
                }
                let a = a2.sqrt();
                let (beta, odr) = discrimination::odr_optimize(a, eta)?;
                rows.push(vec![
                    a2,
                    discrimination::receiver_pe(Receiver::Helstrom, a)?,
                    discrimination::receiver_pe(Receiver::Kennedy, a)?,
                    discrimination::receiver_pe(Receiver::Homodyne, a)?,
                    odr,
                    beta,
                ]);
            }
            let cols = ["alpha2", "helstrom", "kennedy", "homodyne", "odr", "odr_beta"];
            if ctx.csv {
                return emit_csv(&cols, &rows);
            }
            emit(&rows_json(&cols, &rows))
        }
    }
}

fn rows_json(cols: &[&str], rows: &[Vec<f64>]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Object(cols.iter().zip(r).map(|(c, x)| (c.to_string(), json!(x))).collect()))
            .collect(),
    )
}

fn channel_cmd(ctx: &Ctx, c: ChannelCmd) -> Result<()> {
    match c {
        ChannelCmd::Classify { json } => {
            let ch = io::channel_from_json(&read_doc(&json)?)?;
            let form = channels::classify(&ch)?;
            emit(&json!({
                "class": form.class.label(),
                "tau": form.tau,
                "rank": form.rank,
                "n_bar": form.n_bar,
                "degradability": channels::degradability(&form),
            }))
        }
        ChannelCmd::Capacity { json, m_bar } => {
            let ch = io::channel_from_json(&read_doc(&json)?)?;
            let form = channels::classify(&ch)?;
            let rec = channels::capacities(&form, m_bar, ctx.base)?;
            emit(&json!({ "class": form.class.label(), "capacities": rec }))
        }
        ChannelCmd::Illumination { kappa, n_bar, m_bar, copies } => {
            let mut rows = Vec::new();
            let mut warnings = Vec::new();
            for &m in &copies {
                let b = channels::illumination_error_bounds(m, kappa, n_bar, m_bar)?;
                warnings = b.warnings.clone();
                rows.push(vec![
                    m as f64,
                    b.p_epr,
                    b.p_coh,
                    b.exponent_epr,
                    b.exponent_coh,
                    b.asymptotic_epr,
                    b.asymptotic_coh,
                ]);
            }
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let cols = ["copies", "p_epr", "p_coh", "exponent_epr", "exponent_coh", "asymptotic_epr", "asymptotic_coh"];
            if ctx.csv {
                return emit_csv(&cols, &rows);
            }
            emit(&rows_json(&cols, &rows))
        }
    }
}

fn protocol_cmd(ctx: &Ctx, c: ProtocolCmd) -> Result<()> {
    match c {
        ProtocolCmd::Teleport { r, input, input_r } => {
            let resource = make_state(&StateKind::Epr { r }, 2)?;
            let v_in = match input {
                Input::Coherent => GaussianState::vacuum(1).cov,
                Input::Squeezed => make_state(&StateKind::SqueezedVacuum { r: input_r, theta: 0.0 }, 1)?.cov,
            };
            let f = protocols::teleport_fidelity(&resource, &v_in)?;
            emit(&json!({ "fidelity": f, "band": format!("{:?}", protocols::classify_fidelity(f)?) }))
        }
        ProtocolCmd::Clone { input, alpha, r } => {
            let a = complex_list(&alpha, "alpha")?;
            if a.len() != 1 {
                bail!(gaussian_qi::Error::Domain("alpha: expected one Re,Im pair".into()));
            }
            let st = match input {
                Input::Coherent => make_state(&StateKind::Coherent { alpha: a }, 1)?,
                Input::Squeezed => make_state(&StateKind::GeneralOneMode { n_bar: 0.0, r, theta: 0.0, alpha: a[0] }, 1)?,
            };
            let out = protocols::clone_1to2(&st)?;
            emit(&json!({
                "f_clone": out.f_clone,
                "f_anticlone": out.f_anticlone,
                "clone1": state_value(&out.clone1),
                "clone2": state_value(&out.clone2),
                "anticlone": state_value(&out.anticlone),
            }))
        }
        ProtocolCmd::Swap { r_a, r_b } => {
            let s = protocols::entanglement_swap(r_a, r_b)?;
            emit(&json!({ "log_negativity": ctx.base.from_nats(s.log_negativity), "state": state_value(&s.state) }))
        }
        ProtocolCmd::Densecode { m_bar, v_sq, eta } => {
            let rate = protocols::dense_coding_rate(m_bar, v_sq, eta, ctx.base)?;
            let cap = gaussian_qi::phase_space::g_function(2.0 * m_bar + 1.0, ctx.base)?;
            emit(&json!({ "rate": rate, "capacity": cap, "advantage": rate > cap }))
        }
    }
}

/// Scenarios in grid order (tau, chi, V, beta), or the single JSON scenario.
fn scenarios(a: &ScenarioArgs) -> Result<Vec<QkdScenario>> {
    if let Some(j) = &a.json {
        return Ok(vec![io::scenario_from_json(&read_doc(j)?)?]);
    }
    let states = match a.states {
        StatesArg::Coherent => SourceStates::Coherent,
        StatesArg::Squeezed => SourceStates::Squeezed,
    };
    let rec = match a.rec {
        RecArg::Direct => Reconciliation::Direct,
        RecArg::Reverse => Reconciliation::Reverse,
    };
    let mut out = Vec::new();
    for &tau in &a.tau {
        for &chi in &a.chi {
            for &v in &a.v {
                for &beta in &a.beta {
                    let s = QkdScenario { states, detection: a.detection.into(), reconciliation: rec, v, tau, chi, phi: a.phi, beta };
                    s.validate()?;
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

fn qkd_cmd(ctx: &Ctx, c: QkdCmd) -> Result<()> {
    match c {
        QkdCmd::Rate(a) => {
            let mut rows = Vec::new();
            let mut full = Vec::new();
            for s in scenarios(&a)? {
                let r = qkd::key_rate(&s, ctx.base)?;
                rows.push(vec![s.tau, s.chi, s.v, s.beta, r.i_ab, r.s_eve, r.k]);
                full.push(json!({
                    "tau": s.tau, "chi": s.chi, "V": s.v, "beta": s.beta,
                    "I_ab": r.i_ab, "I_ab_printed": r.i_ab_printed, "S_eve": r.s_eve, "K": r.k, "phi": r.phi,
                    "spectrum": r.spectrum, "cond_spectrum": r.cond_spectrum,
                }));
            }
            if ctx.csv {
                return emit_csv(&io::SWEEP_COLUMNS, &rows);
            }
            emit(&if full.len() == 1 { full.remove(0) } else { Value::Array(full) })
        }
        QkdCmd::Threshold(a) => {
            let mut out = Vec::new();
            for s in scenarios(&a)? {
                out.push(json!({ "tau": s.tau, "V": s.v, "beta": s.beta, "chi_threshold": qkd::security_threshold(&s, ctx.base)? }));
            }
            emit(&if out.len() == 1 { out.remove(0) } else { Value::Array(out) })
        }
        QkdCmd::Postselect { tau, chi, v_a, detection, beta } => {
            let r = qkd::postselection_rate(tau, chi, v_a, detection.into(), beta, ctx.base)?;
            emit(&json!({ "K": r.k, "K_coarse": r.k_coarse }))
        }
        QkdCmd::Finite { scenario, n_total, n_key, delta, d_pen, tau_range, chi_range } => {
            let s = *scenarios(&scenario)?.first().ok_or_else(|| anyhow!("no scenario"))?;
            let pair = |r: Option<Vec<f64>>, x: f64, name: &str| -> Result<(f64, f64)> {
                match r {
                    None => Ok((x, x)),
                    Some(v) if v.len() == 2 => Ok((v[0], v[1])),
                    Some(v) => bail!(gaussian_qi::Error::Domain(format!("{name}: expected lo,hi, got {} values", v.len()))),
                }
            };
            let region = ConfidenceRegion { tau: pair(tau_range, s.tau, "tau-range")?, chi: pair(chi_range, s.chi, "chi-range")? };
            let k = qkd::finite_size_rate(&s, n_total, n_key, &|_| delta, &|_| d_pen, &region, ctx.base)?;
            let asym = qkd::key_rate(&s, ctx.base)?.k;
            emit(&json!({ "K_finite": k, "K_asymptotic": asym }))
        }
    }
}

fn load_graph(a: &GraphArgs) -> Result<ClusterGraph> {
    Ok(match (&a.json, a.line, &a.lattice) {
        (Some(j), None, None) => io::graph_from_json(&read_doc(j)?)?,
        (None, Some(n), None) => ClusterGraph::line(n, a.r)?,
        (None, None, Some(rc)) if rc.len() == 2 => ClusterGraph::lattice(rc[0], rc[1], a.r)?,
        _ => bail!(gaussian_qi::Error::Domain("graph: give exactly one of --json, --line, --lattice rows,cols".into())),
    })
}

fn node_basis(s: &str) -> Result<NodeBasis> {
    Ok(match s {
        "q" | "Q" => NodeBasis::Q,
        "p" | "P" => NodeBasis::P,
        _ => NodeBasis::Angle(
            s.parse().map_err(|_| gaussian_qi::Error::Domain(format!("basis: expected q, p or an angle, got {s}")))?,
        ),
    })
}

fn cluster_value(c: &cluster::ClusterState) -> Value {
    let g: Value = serde_json::from_str(&io::graph_to_json(&c.graph)).expect("valid JSON");
    json!({
        "graph": g,
        "labels": c.labels,
        "label": format!("{:?}", c.label),
        "nullifier_variances": cluster::nullifier_variances(c),
    })
}

fn cluster_cmd(ctx: &Ctx, c: ClusterCmd) -> Result<()> {
    match c {
        ClusterCmd::Build(a) => {
            let cs = cluster::compile(&load_graph(&a)?)?;
            let mut v = cluster_value(&cs);
            v["state"] = state_value(&cs.state);
            emit(&v)
        }
        ClusterCmd::Nullifiers(a) => {
            let cs = cluster::compile(&load_graph(&a)?)?;
            emit(&json!(cluster::nullifier_variances(&cs)))
        }
        ClusterCmd::Measure { graph, vertex, basis, outcome } => {
            let mut cs = cluster::compile(&load_graph(&graph)?)?;
            if basis.len() != vertex.len() {
                bail!(gaussian_qi::Error::Domain(format!("basis: expected {} entries, got {}", vertex.len(), basis.len())));
            }
            if let Some(o) = &outcome {
                if o.len() != vertex.len() {
                    bail!(gaussian_qi::Error::Domain(format!("outcome: expected {} values, got {}", vertex.len(), o.len())));
                }
            }
            let mut outcomes = Vec::new();
            for (k, (&id, b)) in vertex.iter().zip(&basis).enumerate() {
                let idx = cs.labels.iter().position(|&l| l == id).ok_or_else(|| {
                    anyhow!(gaussian_qi::Error::Index(format!("vertex: {id} is not in the cluster")))
                })?;
                let nb = node_basis(b)?;
                let m = match &outcome {
                    Some(o) => o[k],
                    None => {
                        let quad = match nb {
                            NodeBasis::Q => Quadrature::Q,
                            NodeBasis::P => Quadrature::P,
                            NodeBasis::Angle(t) => Quadrature::Angle(t),
                        };
                        measurements::sample(&cs.state, idx, MeasurementKind::Homodyne(quad), ctx.seed.wrapping_add(k as u64))?
                            .outcome[0]
                    }
                };
                outcomes.push(m);
                cs = cluster::measure_node(&cs, idx, nb, m)?;
            }
            let mut v = cluster_value(&cs);
            v["outcomes"] = json!(outcomes);
            emit(&v)
        }
    }
}

fn fock_kind(s: &str) -> Result<FockKind> {
    let bad = || anyhow!(gaussian_qi::Error::Domain(format!("kind: cannot parse {s}")));
    let (name, rest) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = rest.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    Ok(match (name, nums.as_slice()) {
        ("coherent", [re, im]) => FockKind::Coherent { alpha: Complex64::new(*re, *im) },
        ("squeezed", [r]) => FockKind::SqueezedVacuum { r: *r },
        ("thermal", [n]) => FockKind::Thermal { n_bar: *n },
        ("epr", [r]) => FockKind::Epr { r: *r },
        ("sqthermal2", [r, a, b]) => FockKind::SqueezedThermal2 { r: *r, n_a: *a, n_b: *b },
        _ => return Err(bad()),
    })
}

fn oracle_cmd(c: OracleCmd) -> Result<()> {
    let OracleCmd::Compare { a, b, cutoff, s } = c;
    let (ka, kb) = (fock_kind(&a)?, fock_kind(&b)?);
    let (ga, gb) = (fock_oracle::gaussian_twin(ka)?, fock_oracle::gaussian_twin(kb)?);
    let h = BinaryHypothesis::new(ga.clone(), gb.clone())?;
    let om = fock_oracle::oracle_metrics(&fock_oracle::fock_state(ka, cutoff)?, &fock_oracle::fock_state(kb, cutoff)?, &s)?;
    let mut cs = Vec::new();
    for &(sv, oracle) in &om.cs {
        cs.push(json!({ "s": sv, "phase_space": discrimination::chernoff_cs(&h, sv)?, "oracle": oracle }));
    }
    let fid = if ga.n_modes() == 1 { Some(discrimination::fidelity_1mode(&ga, &gb)?) } else { None };
    emit(&json!({
        "fidelity": { "phase_space": fid, "oracle": om.fidelity },
        "helstrom_oracle": om.helstrom,
        "cs": cs,
    }))
}
