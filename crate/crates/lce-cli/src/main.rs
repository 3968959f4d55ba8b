mod formats;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lce::cover::{build_cover, verify_cover, CoverConfig};
use lce::cutmatch::{cutmatch, verify_cutmatch};
use lce::driver::{expander_decomposition, linked_decomposition, DriverConfig, StrategyChoice};
use lce::flow::flow_stats;
use lce::graph::apply_increase;
use lce::io;
use lce::mwu::{mwu_flow_cut, MwuConfig};
use lce::oracle::{cut_sparsity, demand_size, exact_hlength_maxflow};
use lce::rational::{fmt_q, parse_q};
use lce::router::{make_router, verify_router, verify_witness, RouterKind};
use lce::sparse_cut::{check_cut, sparse_cut, KrvStrategy, SparseCutConfig, SparseCutResult};
use lce::union::{dispersed_demand, union_classic_check};
use lce::{gen, Graph, MovingCut, NodeWeighting, Q};
use serde_json::{json, Value};

use formats::{parse_pairs, parse_sequence, parse_weighted_pairs, CoverJson, FlowJson, WitnessJson};

#[derive(Parser)]
#[command(name = "lce", version, about = "Length-constrained expander decompositions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Base seed; the LCE_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 0.5)]
    eps: f64,
    /// Epoch parameter eps' of the decomposition driver.
    #[arg(long, global = true, default_value_t = 0.5)]
    eps2: f64,
    #[arg(long, global = true, default_value_t = 2)]
    h: u64,
    #[arg(long, global = true, default_value_t = 4)]
    s: u64,
    /// Sparsity, as p/q, an integer or a decimal.
    #[arg(long, global = true, default_value = "1/10")]
    phi: String,
    #[arg(long = "L", global = true, default_value_t = 1)]
    l: u64,
    #[arg(long, global = true, default_value_t = lce::oracle::DEFAULT_PATH_CAP)]
    max_paths: usize,
    /// Where to write the command's artifact (graph, cut, cover or witness).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded graph.
    Gen(GenArgs),
    /// Length-constrained flow and moving cut by multiplicative weights.
    Flow(GraphPairs),
    Cutmatch {
        #[arg(long)]
        graph: PathBuf,
        /// Lines `v:w,... v:w,...`.
        #[arg(long)]
        pairs: PathBuf,
    },
    Cover {
        #[arg(long)]
        graph: PathBuf,
        /// Declared diameter; defaults to the cover module's bound.
        #[arg(long)]
        diameter: Option<u64>,
    },
    SparseCut(GraphA),
    Decompose(DecomposeArgs),
    DecomposeLinked {
        #[command(flatten)]
        base: DecomposeArgs,
        #[arg(long)]
        ell: Option<u64>,
    },
    #[command(subcommand)]
    Oracle(OracleCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
    UnionCheck {
        #[arg(long)]
        graph: PathBuf,
        /// One cut per line as `u-v` edges.
        #[arg(long)]
        sequence: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = Kind::Random)]
    kind: Kind,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    max_len: u64,
    #[arg(long, default_value_t = 8)]
    max_cap: u64,
    /// Clusters for `clustered`.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Connected,
    Clustered,
    Dumbbell,
    Clique,
    Path,
}

#[derive(Args)]
struct GraphPairs {
    #[arg(long)]
    graph: PathBuf,
    /// Lines `s1,s2,... t1,t2,...`.
    #[arg(long)]
    pairs: PathBuf,
}

#[derive(Args)]
struct GraphA {
    #[arg(long)]
    graph: PathBuf,
    /// Node-weighting; defaults to the degree weighting.
    #[arg(long = "A")]
    a: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: GraphA,
    #[arg(long, value_enum, default_value_t = Strategy::Krv)]
    strategy: Strategy,
    /// Where to write the witness JSON.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Krv,
    Recursive,
}

#[derive(Subcommand)]
enum OracleCmd {
    Maxflow(GraphPairs),
    DemandSize(GraphCut),
    Sparsity(GraphCut),
}

#[derive(Args)]
struct GraphCut {
    #[command(flatten)]
    input: GraphA,
    #[arg(long)]
    cut: PathBuf,
}

#[derive(Subcommand)]
enum VerifyCmd {
    Cover {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        cover: PathBuf,
    },
    /// Oracle sparsity of the cut at (h, s) is at most phi.
    Cut(GraphCut),
    Witness {
        #[command(flatten)]
        input: GraphA,
        #[arg(long)]
        witness: PathBuf,
        /// Cut blocks applied to the graph before checking.
        #[arg(long)]
        cut: Option<PathBuf>,
    },
    Dispersed {
        #[command(flatten)]
        input: GraphA,
        /// Comma-separated demand files, one per cut block.
        #[arg(long, value_delimiter = ',')]
        demands: Vec<PathBuf>,
        #[arg(long)]
        cut: PathBuf,
    },
    Router {
        /// star, clique, or power:K.
        #[arg(long)]
        kind: String,
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long)]
        kappa: String,
    },
}

struct Outcome {
    report: Value,
    ok: bool,
}

fn pass(report: Value) -> Result<Outcome> {
    Ok(Outcome { report, ok: true })
}

fn read(p: &PathBuf) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn graph(p: &PathBuf) -> Result<Graph> {
    io::parse_graph(&read(p)?).with_context(|| format!("in {}", p.display()))
}

fn weighting(g: &Graph, a: &Option<PathBuf>) -> Result<NodeWeighting> {
    match a {
        Some(p) => io::parse_weighting(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(g.degree_weighting()),
    }
}

fn cuts(g: &Graph, p: &PathBuf) -> Result<Vec<MovingCut>> {
    io::parse_cuts(&read(p)?, g).with_context(|| format!("in {}", p.display()))
}

fn one_cut(g: &Graph, p: &PathBuf) -> Result<MovingCut> {
    io::parse_cut(&read(p)?, g).with_context(|| format!("in {}", p.display()))
}

fn rational(s: &str) -> Result<Q> {
    parse_q(s).map_err(|e| anyhow!("bad rational: {e}"))
}

fn write_out(g: &Global, text: &str) -> Result<()> {
    if let Some(p) = &g.out {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn run(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    let phi = rational(&g.phi)?;
    match cli.cmd {
        Cmd::Gen(a) => {
            let graph = match a.kind {
                Kind::Random => gen::random_graph(a.n, a.m, a.max_len, a.max_cap, g.seed),
                Kind::Connected => gen::random_connected(a.n, a.m, a.max_len, a.max_cap, g.seed),
                Kind::Clustered => gen::clustered(a.k, a.n.div_ceil(a.k.max(1)).max(1), 0.6, g.seed),
                Kind::Dumbbell => gen::dumbbell(a.n.max(2) / 2),
                Kind::Clique => gen::clique(a.n),
                Kind::Path => gen::path(a.n),
            };
            let text = io::emit_graph(&graph);
            if g.out.is_none() {
                print!("{text}");
            }
            write_out(g, &text)?;
            pass(json!({"command": "gen", "n": graph.n(), "m": graph.m()}))
        }
        Cmd::Flow(a) => {
            let graph = graph(&a.graph)?;
            let pairs = parse_pairs(&read(&a.pairs)?)?;
            let r = mwu_flow_cut(&graph, &pairs, None, g.h, g.eps, &MwuConfig::default())?;
            let st = flow_stats(&graph, &r.flow)?;
            write_out(g, &io::emit_cuts(&graph, std::slice::from_ref(&r.cut)))?;
            pass(json!({
                "command": "flow",
                "report": to_value(&r.report),
                "flow": st.summary(),
                "cut": io::emit_cuts(&graph, std::slice::from_ref(&r.cut)),
            }))
        }
        Cmd::Cutmatch { graph: gp, pairs } => {
            let graph = graph(&gp)?;
            let pairs = parse_weighted_pairs(&read(&pairs)?)?;
            let r = cutmatch(&graph, &pairs, g.h, &phi)?;
            let check = verify_cutmatch(&graph, &pairs, g.h, &phi, &r)?;
            write_out(g, &io::emit_cuts(&graph, std::slice::from_ref(&r.cut)))?;
            Ok(Outcome {
                ok: check.pass(),
                report: json!({
                    "command": "cutmatch",
                    "gamma": r.gamma,
                    "value": r.value,
                    "total_mass": r.total_mass,
                    "restarts": r.restarts,
                    "batches": r.batches,
                    "cut_size": fmt_q(&r.cut.size(&graph)),
                    "check": to_value(&check),
                    "flow": FlowJson::of(&r.flow()).0,
                }),
            })
        }
        Cmd::Cover { graph: gp, diameter } => {
            let graph = graph(&gp)?;
            let cfg = CoverConfig { h_diam: diameter, max_width: None };
            let cover = build_cover(&graph, g.h, g.s, g.eps, g.seed, &cfg)?;
            let rep = verify_cover(&graph, &cover);
            write_out(g, &serde_json::to_string_pretty(&CoverJson::of(&cover))?)?;
            Ok(Outcome { ok: rep.pass(), report: json!({"command": "cover", "width": cover.width(), "check": to_value(&rep)}) })
        }
        Cmd::SparseCut(a) => {
            let graph = graph(&a.graph)?;
            let w = weighting(&graph, &a.a)?;
            let cfg = SparseCutConfig { l: g.l, ..Default::default() };
            let (res, stats) = sparse_cut(&graph, &w, g.h, g.s, &phi, g.eps, &KrvStrategy, &cfg, g.seed)?;
            match res {
                SparseCutResult::Cut(c) => {
                    let cert = check_cut(&graph, &w, g.s, &phi, &c)?;
                    write_out(g, &io::emit_cuts(&graph, std::slice::from_ref(&c.cut)))?;
                    Ok(Outcome {
                        ok: cert.pass(),
                        report: json!({
                            "command": "sparse-cut",
                            "result": "cut",
                            "h2": c.h2,
                            "demand_size_estimate": fmt_q(&c.demand_size_estimate),
                            "demand_scale": fmt_q(&c.demand_scale),
                            "cutmatch_phi": fmt_q(&c.cutmatch_phi),
                            "certificate": to_value(&cert),
                            "stats": to_value(&stats),
                            "witness_demand": io::emit_demand(&c.witness_demand),
                        }),
                    })
                }
                SparseCutResult::Witness(w) => {
                    write_out(g, &serde_json::to_string_pretty(&WitnessJson::of(&w))?)?;
                    pass(json!({
                        "command": "sparse-cut",
                        "result": "witness",
                        "s": w.s,
                        "phi": fmt_q(&w.phi),
                        "stats": to_value(&stats),
                    }))
                }
            }
        }
        Cmd::Decompose(a) => decompose(g, &phi, &a, None, false),
        Cmd::DecomposeLinked { base, ell } => decompose(g, &phi, &base, ell, true),
        Cmd::Oracle(o) => match o {
            OracleCmd::Maxflow(a) => {
                let graph = graph(&a.graph)?;
                let pairs = parse_pairs(&read(&a.pairs)?)?;
                let r = exact_hlength_maxflow(&graph, &pairs, g.h, g.max_paths)?;
                pass(json!({
                    "command": "oracle maxflow",
                    "value": fmt_q(&r.value),
                    "paths": r.paths,
                    "cut": r.cut.iter().map(fmt_q).collect::<Vec<_>>(),
                }))
            }
            OracleCmd::DemandSize(a) => {
                let graph = graph(&a.input.graph)?;
                let w = weighting(&graph, &a.input.a)?;
                let c = one_cut(&graph, &a.cut)?;
                let (v, d) = demand_size(&graph, &c, &w, g.h, g.s)?;
                pass(json!({"command": "oracle demand-size", "value": fmt_q(&v), "demand": io::emit_demand(&d)}))
            }
            OracleCmd::Sparsity(a) => {
                let graph = graph(&a.input.graph)?;
                let w = weighting(&graph, &a.input.a)?;
                let c = one_cut(&graph, &a.cut)?;
                let sp = cut_sparsity(&graph, &c, &w, g.h, g.s)?;
                pass(json!({"command": "oracle sparsity", "sparsity": to_value(&sp), "cut_size": fmt_q(&c.size(&graph))}))
            }
        },
        Cmd::Verify(v) => verify(g, &phi, v),
        Cmd::UnionCheck { graph: gp, sequence } => {
            let graph = graph(&gp)?;
            let seq = parse_sequence(&read(&sequence)?, &graph)?;
            let r = union_classic_check(&graph, &seq)?;
            Ok(Outcome { ok: r.holds, report: json!({"command": "union-check", "report": to_value(&r)}) })
        }
    }
}

fn decompose(g: &Global, phi: &Q, a: &DecomposeArgs, ell: Option<u64>, linked: bool) -> Result<Outcome> {
    let graph = graph(&a.input.graph)?;
    let w = weighting(&graph, &a.input.a)?;
    let cfg = DriverConfig {
        seed: g.seed,
        sparse: SparseCutConfig { l: g.l, ..Default::default() },
        strategy: match a.strategy {
            Strategy::Krv => StrategyChoice::Krv,
            Strategy::Recursive => StrategyChoice::Recursive,
        },
        ..Default::default()
    };
    let (cut_list, witness, report) = if linked {
        let r = linked_decomposition(&graph, &w, g.h, phi, g.eps, g.eps2, ell, &cfg)?;
        (r.cuts, r.witness, to_value(&r.report))
    } else {
        let d = expander_decomposition(&graph, &w, g.h, phi, g.eps, g.eps2, &cfg)?;
        (d.cuts, d.witness, to_value(&d.report))
    };
    write_out(g, &io::emit_cuts(&graph, &cut_list))?;
    if let (Some(p), Some(wt)) = (&a.witness_out, &witness) {
        fs::write(p, serde_json::to_string_pretty(&WitnessJson::of(wt))?).with_context(|| format!("writing {}", p.display()))?;
    }
    pass(json!({
        "command": if linked { "decompose-linked" } else { "decompose" },
        "cuts": cut_list.len(),
        "witness": witness.is_some(),
        "report": report,
    }))
}

fn verify(g: &Global, phi: &Q, v: VerifyCmd) -> Result<Outcome> {
    match v {
        VerifyCmd::Cover { graph: gp, cover } => {
            let graph = graph(&gp)?;
            let c: CoverJson = serde_json::from_str(&read(&cover)?).context("cover JSON")?;
            let rep = verify_cover(&graph, &c.into_cover());
            Ok(Outcome { ok: rep.pass(), report: json!({"command": "verify cover", "check": to_value(&rep)}) })
        }
        VerifyCmd::Cut(a) => {
            let graph = graph(&a.input.graph)?;
            let w = weighting(&graph, &a.input.a)?;
            let c = one_cut(&graph, &a.cut)?;
            let sp = cut_sparsity(&graph, &c, &w, g.h, g.s)?;
            let ok = sp.le_q(phi) && !c.is_zero();
            Ok(Outcome {
                ok,
                report: json!({"command": "verify cut", "sparsity": to_value(&sp), "phi": fmt_q(phi), "pass": ok}),
            })
        }
        VerifyCmd::Witness { input, witness, cut } => {
            let mut graph = graph(&input.graph)?;
            let w = weighting(&graph, &input.a)?;
            if let Some(cp) = cut {
                let inc = cuts(&graph, &cp)?;
                let mut total = std::collections::BTreeMap::new();
                for c in &inc {
                    for (e, x) in c.iter() {
                        *total.entry(e).or_insert(0u64) += x;
                    }
                }
                graph = apply_increase(&graph, total);
            }
            let wj: WitnessJson = serde_json::from_str(&read(&witness)?).context("witness JSON")?;
            let wt = wj.into_witness()?;
            let rep = verify_witness(&graph, &wt, &w, g.h, g.seed)?;
            Ok(Outcome { ok: rep.pass(), report: json!({"command": "verify witness", "pass": rep.pass(), "report": to_value(&rep)}) })
        }
        VerifyCmd::Dispersed { input, demands, cut } => {
            let graph = graph(&input.graph)?;
            let w = weighting(&graph, &input.a)?;
            let cs = cuts(&graph, &cut)?;
            let ds = demands
                .iter()
                .map(|p| io::parse_demand(&read(p)?).with_context(|| format!("in {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            if ds.len() != cs.len() {
                bail!("{} demands for {} cut blocks", ds.len(), cs.len());
            }
            let (d, rep) = dispersed_demand(&graph, &w, &ds, &cs, g.h, g.s)?;
            Ok(Outcome {
                ok: rep.pass(),
                report: json!({"command": "verify dispersed", "report": to_value(&rep), "demand": io::emit_demand(&d)}),
            })
        }
        VerifyCmd::Router { kind, a, t, kappa } => {
            let w = io::parse_weighting(&read(&a)?)?;
            let kind = match kind.as_str() {
                "star" => RouterKind::Star,
                "clique" => RouterKind::Clique,
                k => match k.strip_prefix("power:").and_then(|x| x.parse().ok()) {
                    Some(k) => RouterKind::RegularPower { k },
                    None => bail!("unknown router kind {k:?}"),
                },
            };
            let r = make_router(kind, &w, g.seed)?;
            let rep = verify_router(&r, t, &rational(&kappa)?)?;
            Ok(Outcome { ok: rep.pass, report: json!({"command": "verify router", "report": to_value(&rep)}) })
        }
    }
}

/// A closed stdout is not an error worth a panic.
fn emit(v: &Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Ok(s) = std::env::var("LCE_SEED") {
        match s.trim().parse() {
            Ok(x) => cli.global.seed = x,
            Err(_) => {
                eprintln!("LCE_SEED must be an unsigned integer, got {s:?}");
                return ExitCode::from(2);
            }
        }
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads.max(1)).build_global() {
        eprintln!("thread pool: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(o) => {
            emit(&o.report);
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let input = e.chain().any(|c| {
                c.downcast_ref::<lce::Error>().is_some_and(|x| matches!(x, lce::Error::Parse { .. } | lce::Error::Invalid(_)))
                    || c.downcast_ref::<std::io::Error>().is_some()
            });
            emit(&json!({"error": format!("{e:#}")}));
            if input {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
