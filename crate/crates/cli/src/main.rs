//! Exact command line front end: JSON documents in, rationals and verdicts
//! out. Engine errors exit 2, negative findings exit 1, clean answers exit 0.

mod repro;

use std::collections::BTreeSet;
use std::io::Read;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use parsheaf::chart::Chart;
use parsheaf::doc::{self, Document, ExtensionStep};
use parsheaf::monoid::KummerExtension;
use parsheaf::rootops;
use parsheaf::sheaf::SUMMAND_CAP;
use parsheaf::stability::{self, GeneratingChart, VerdictStatus};
use parsheaf::{parse_rat, rat_string, ratio, IVec, QVec};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "parsheaf",
    version,
    about = "exact slope and stability calculator for parabolic sheaves"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect monoids, free envelopes, and weight class quotients.
    #[command(subcommand)]
    Monoid(MonoidCmd),
    /// Validate sheaf documents and compute pieces, slopes, and verdicts.
    #[command(subcommand)]
    Sheaf(SheafCmd),
    /// Move sheaves along extensions: pullback, pushforward, adjunction.
    #[command(subcommand)]
    Rootops(RootopsCmd),
    /// Verdicts and canonical filtrations. `verdict` matches `sheaf verdict`.
    #[command(subcommand)]
    Stability(StabilityCmd),
    /// Re-run a stored worked example and compare every recorded value.
    Repro(ReproArgs),
}

#[derive(Args)]
struct IoArgs {
    /// Input path; stdin when absent or "-".
    #[arg(long)]
    input: Option<PathBuf>,
    /// Machine-readable JSON output.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum MonoidCmd {
    /// Indecomposables, simplicial structure, relations, saturation probe.
    Info {
        #[command(flatten)]
        io: IoArgs,
        /// Box bound for the saturation probe.
        #[arg(long, default_value_t = 4)]
        bound: i64,
    },
    /// Free envelope of a monoid, with idempotence and Kummer checks.
    Envelope {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Weight class data of an extension fragment {"p": ..., "q": ...}.
    Quotient {
        #[command(flatten)]
        io: IoArgs,
    },
}

#[derive(Subcommand)]
enum SheafCmd {
    /// Schema, cross-reference, and sheaf-law diagnostics for a document.
    Validate {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Summands and Euler polynomial of the piece at one weight.
    Piece {
        #[command(flatten)]
        io: IoArgs,
        /// Weight vector, comma-separated rationals such as "-1/2,0".
        #[arg(allow_hyphen_values = true)]
        weight: String,
    },
    /// Modified Hilbert polynomial, slope, and the weighted-mean groups.
    Slope {
        #[command(flatten)]
        io: IoArgs,
        /// Named generating chart from the document; default "standard".
        #[arg(long)]
        chart: Option<String>,
    },
    /// Stability verdict against the coordinate lattice.
    Verdict {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        chart: Option<String>,
        /// Expected status: stable, semistable, strictly-semistable, unstable.
        /// A mismatch exits 1.
        #[arg(long)]
        expect: Option<String>,
        /// Refuse classes with more summands than this.
        #[arg(long, default_value_t = SUMMAND_CAP)]
        cap: usize,
    },
}

#[derive(Subcommand)]
enum StabilityCmd {
    /// Stability verdict against the coordinate lattice.
    Verdict {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        chart: Option<String>,
        /// Expected status: stable, semistable, strictly-semistable, unstable.
        /// A mismatch exits 1.
        #[arg(long)]
        expect: Option<String>,
        /// Refuse classes with more summands than this.
        #[arg(long, default_value_t = SUMMAND_CAP)]
        cap: usize,
    },
    /// Slope-decreasing filtration with semistable factors.
    Hn {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        chart: Option<String>,
    },
    /// Stable graded factors of a semistable sheaf.
    Jh {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        chart: Option<String>,
    },
    /// Whether two documents carry S-equivalent sheaves. "no" exits 1.
    Sequiv {
        #[command(flatten)]
        io: IoArgs,
        /// Second document path.
        other: PathBuf,
        #[arg(long)]
        chart: Option<String>,
    },
}

#[derive(Subcommand)]
enum RootopsCmd {
    /// Pull the sheaf up along a finer extension of the same monoid.
    Pullback {
        #[command(flatten)]
        io: IoArgs,
        /// Uniform target level: the new weights are P-exponents over this.
        #[arg(long)]
        level: Option<i64>,
        /// Extension step JSON: {"level": m} or {"target_q": [[...], ...]}.
        #[arg(long)]
        step: Option<String>,
    },
    /// Push the sheaf down to a coarser level; default level 1.
    Pushforward {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        level: Option<i64>,
    },
    /// Twisted pushforward by an offset inside the index hypercube.
    Twist {
        #[command(flatten)]
        io: IoArgs,
        /// Offset vector, comma-separated integers such as "1,0".
        #[arg(allow_hyphen_values = true)]
        offset: String,
        #[arg(long)]
        level: Option<i64>,
    },
    /// Unit or descent comparison against the chart at another level.
    /// A failed comparison exits 1.
    Adjunction {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        level: i64,
    },
}

#[derive(Args)]
struct ReproArgs {
    /// One of: dependence_chart, non_simplicial, log_point_closure,
    /// my_comparison, stable_slice, pullback_classification,
    /// envelope_examples, pushforward_unit.
    target: String,
    /// Degree instances for degree-indexed targets; default 3, 5, 10.
    #[arg(long)]
    degree: Vec<i64>,
    /// Level bound for tower sweeps.
    #[arg(long)]
    level: Option<i64>,
    /// Summand cap per class for enumeration targets.
    #[arg(long, default_value_t = SUMMAND_CAP)]
    cap: usize,
    /// Machine-readable JSON output.
    #[arg(long)]
    json: bool,
}

fn main() {
    // Die quietly when a downstream pipe closes instead of panicking.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Cmd::Monoid(cmd) => match cmd {
            MonoidCmd::Info { io, bound } => monoid_info(&io, bound),
            MonoidCmd::Envelope { io } => monoid_envelope(&io),
            MonoidCmd::Quotient { io } => monoid_quotient(&io),
        },
        Cmd::Sheaf(cmd) => match cmd {
            SheafCmd::Validate { io } => sheaf_validate(&io),
            SheafCmd::Piece { io, weight } => sheaf_piece(&io, &weight),
            SheafCmd::Slope { io, chart } => sheaf_slope(&io, chart.as_deref()),
            SheafCmd::Verdict { io, chart, expect, cap } => {
                cmd_verdict(&io, chart.as_deref(), expect.as_deref(), cap)
            }
        },
        Cmd::Stability(cmd) => match cmd {
            StabilityCmd::Verdict { io, chart, expect, cap } => {
                cmd_verdict(&io, chart.as_deref(), expect.as_deref(), cap)
            }
            StabilityCmd::Hn { io, chart } => cmd_hn(&io, chart.as_deref()),
            StabilityCmd::Jh { io, chart } => cmd_jh(&io, chart.as_deref()),
            StabilityCmd::Sequiv { io, other, chart } => {
                cmd_sequiv(&io, &other, chart.as_deref())
            }
        },
        Cmd::Rootops(cmd) => match cmd {
            RootopsCmd::Pullback { io, level, step } => {
                rootops_pullback(&io, level, step.as_deref())
            }
            RootopsCmd::Pushforward { io, level } => rootops_pushforward(&io, level),
            RootopsCmd::Twist { io, offset, level } => rootops_twist(&io, &offset, level),
            RootopsCmd::Adjunction { io, level } => rootops_adjunction(&io, level),
        },
        Cmd::Repro(args) => repro::run(&args),
    }
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display())),
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .context("reading stdin")?;
            Ok(buf)
        }
    }
}

fn load_value(io: &IoArgs) -> Result<Value> {
    let text = read_input(&io.input)?;
    serde_json::from_str(&text).map_err(|e| anyhow!("schema: invalid JSON: {e}"))
}

fn load_document(io: &IoArgs) -> Result<Document> {
    Ok(doc::parse_document(&read_input(&io.input)?)?)
}

fn select_chart(docu: &Document, name: Option<&str>) -> Result<GeneratingChart> {
    match name {
        None | Some("standard") => Ok(GeneratingChart::standard(&docu.sheaf.chart.kummer)),
        Some(n) => docu
            .charts
            .iter()
            .find(|c| c.name == n)
            .cloned()
            .ok_or_else(|| {
                let known: Vec<&str> = docu.charts.iter().map(|c| c.name.as_str()).collect();
                anyhow!(
                    "unknown generating chart {n:?}; document provides: standard{}{}",
                    if known.is_empty() { "" } else { ", " },
                    known.join(", ")
                )
            }),
    }
}

fn fmt_ivec(v: &[i64]) -> String {
    let coords: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", coords.join(","))
}

fn fmt_qvec(v: &QVec) -> String {
    let coords: Vec<String> = v.iter().map(rat_string).collect();
    format!("({})", coords.join(","))
}

fn parse_weight(s: &str) -> Result<QVec> {
    s.split(',')
        .map(|t| {
            parse_rat(t.trim()).map_err(|e| anyhow!("weight component {:?}: {e}", t.trim()))
        })
        .collect()
}

fn parse_offsets(s: &str) -> Result<IVec> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| anyhow!("offset component {:?}: {e}", t.trim()))
        })
        .collect()
}

pub fn status_str(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Stable => "stable",
        VerdictStatus::StrictlySemistable => "strictly-semistable",
        VerdictStatus::Unstable => "unstable",
    }
}

fn expect_matches(expect: &str, status: VerdictStatus) -> Result<bool> {
    Ok(match expect {
        "stable" => status == VerdictStatus::Stable,
        "semistable" => status != VerdictStatus::Unstable,
        "strictly-semistable" => status == VerdictStatus::StrictlySemistable,
        "unstable" => status == VerdictStatus::Unstable,
        other => bail!(
            "unknown expectation {other:?}; use stable, semistable, strictly-semistable, or unstable"
        ),
    })
}

fn fmt_picks(picks: &[Vec<usize>]) -> String {
    let mut parts = Vec::new();
    for (c, idxs) in picks.iter().enumerate() {
        for i in idxs {
            parts.push(format!("class {c} summand {i}"));
        }
    }
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join("; ")
    }
}

fn picks_value(picks: &[Vec<usize>]) -> Value {
    Value::Array(
        picks
            .iter()
            .map(|p| Value::Array(p.iter().map(|&i| json!(i)).collect()))
            .collect(),
    )
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Rebuilds the chart over the same monoid with a different extension:
/// either a uniform level or explicit target generators.
fn releveled(chart: &Chart, step: &ExtensionStep) -> Result<Chart> {
    let q: Vec<QVec> = match step {
        ExtensionStep::Level(m) => {
            if *m <= 0 {
                bail!("schema: level must be positive, got {m}");
            }
            chart
                .kummer
                .p
                .generators
                .iter()
                .map(|g| g.iter().map(|&x| ratio(x, *m)).collect())
                .collect()
        }
        ExtensionStep::TargetQ(gens) => gens.clone(),
    };
    let kummer = KummerExtension::new(chart.kummer.p.clone(), q)?;
    let flags: BTreeSet<usize> = chart
        .zero_flags
        .iter()
        .map(|&pos| {
            chart
                .kummer
                .p
                .generators
                .iter()
                .position(|g| g == &chart.kummer.p_indecs[pos])
                .expect("flagged indecomposable appears among the generators")
        })
        .collect();
    Ok(Chart::new(kummer, chart.base.clone(), chart.pic_map.clone(), &flags)?)
}

fn monoid_info(io: &IoArgs, bound: i64) -> Result<i32> {
    let v = load_value(io)?;
    let m = doc::parse_monoid(&v, "monoid")?;
    let indecs = m.indecomposables();
    let structure = m.simplicial_structure();
    let relations = match &structure {
        Ok(_) => m.standard_relations()?,
        Err(_) => Vec::new(),
    };
    let (saturated, counterexample) = m.saturation_check(bound);
    if io.json {
        let mut out = json!({
            "ambient_rank": m.ambient_rank,
            "generators": m.generators,
            "indecomposables": indecs,
            "simplicial": structure.is_ok(),
            "saturation": {
                "bound": bound,
                "saturated": saturated,
                "counterexample": counterexample,
            },
        });
        match &structure {
            Ok(st) => {
                out["extremal"] = json!(st.extremal);
                out["internal"] = json!(st.internal);
                out["relations"] = Value::Array(
                    relations
                        .iter()
                        .map(|r| json!({"multiple": r.c, "of": r.q, "coefficients": r.coeffs}))
                        .collect(),
                );
            }
            Err(e) => out["structure_error"] = json!(e.to_string()),
        }
        print_json(&out);
        return Ok(0);
    }
    println!("monoid: {m}");
    println!("ambient rank: {}", m.ambient_rank);
    let list: Vec<String> = indecs.iter().map(|g| fmt_ivec(g)).collect();
    println!("indecomposables: {}", list.join(", "));
    match &structure {
        Ok(st) => {
            println!("simplicial: yes");
            let ext: Vec<String> = st.extremal.iter().map(|g| fmt_ivec(g)).collect();
            println!("extremal: {}", ext.join(", "));
            if !st.internal.is_empty() {
                let int: Vec<String> = st.internal.iter().map(|g| fmt_ivec(g)).collect();
                println!("internal: {}", int.join(", "));
            }
            for r in &relations {
                let rhs: Vec<String> = r
                    .coeffs
                    .iter()
                    .zip(&st.extremal)
                    .filter(|(c, _)| **c != 0)
                    .map(|(c, e)| format!("{c}*{}", fmt_ivec(e)))
                    .collect();
                println!("relation: {}*{} = {}", r.c, fmt_ivec(&r.q), rhs.join(" + "));
            }
        }
        Err(e) => println!("simplicial structure: {e}"),
    }
    match counterexample {
        None => println!("saturation probe (bound {bound}): saturated"),
        Some(w) => println!(
            "saturation probe (bound {bound}): counterexample {}",
            fmt_ivec(&w)
        ),
    }
    Ok(0)
}

fn monoid_envelope(io: &IoArgs) -> Result<i32> {
    let v = load_value(io)?;
    let m = doc::parse_monoid(&v, "monoid")?;
    let env = m.free_envelope()?;
    let idempotent = env.free_envelope()? == env;
    let kummer = KummerExtension::new(m.clone(), env.generators_q()).is_ok();
    if io.json {
        print_json(&json!({
            "envelope": env.to_string(),
            "generators": env
                .generators_q()
                .iter()
                .map(|g| g.iter().map(doc::rat_value).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "idempotent": idempotent,
            "kummer_over_input": kummer,
        }));
        return Ok(0);
    }
    println!("envelope: {env}");
    println!("idempotent: {}", yes_no(idempotent));
    println!("kummer over input: {}", yes_no(kummer));
    Ok(0)
}

fn monoid_quotient(io: &IoArgs) -> Result<i32> {
    let v = load_value(io)?;
    let k = doc::parse_extension(&v, "extension")?;
    let weights = k.fundamental_weights();
    if io.json {
        print_json(&json!({
            "class_count": k.class_count(),
            "invariant_factors": k.invariant_factors,
            "orders": k
                .q_indecs
                .iter()
                .zip(&k.orders)
                .map(|(q, o)| json!({
                    "indecomposable": q.iter().map(doc::rat_value).collect::<Vec<_>>(),
                    "order": o,
                }))
                .collect::<Vec<_>>(),
            "class_representatives": k
                .class_reps
                .iter()
                .map(|r| r.iter().map(doc::rat_value).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "fundamental_weights": weights
                .iter()
                .map(|(_, w)| w.iter().map(doc::rat_value).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }));
        return Ok(0);
    }
    println!("weight classes: {}", k.class_count());
    let factors: Vec<String> = k.invariant_factors.iter().map(|f| f.to_string()).collect();
    println!("invariant factors: {}", factors.join(", "));
    for (q, o) in k.q_indecs.iter().zip(&k.orders) {
        println!("order of {}: {o}", fmt_qvec(q));
    }
    let reps: Vec<String> = k.class_reps.iter().map(fmt_qvec).collect();
    println!("class representatives: {}", reps.join(", "));
    let ws: Vec<String> = weights.iter().map(|(_, w)| fmt_qvec(w)).collect();
    println!("fundamental weights: {}", ws.join(", "));
    Ok(0)
}

fn sheaf_validate(io: &IoArgs) -> Result<i32> {
    let text = read_input(&io.input)?;
    let diagnostics = doc::validate_document(&text);
    if io.json {
        print_json(&json!({
            "ok": diagnostics.is_empty(),
            "diagnostics": diagnostics,
        }));
    } else if diagnostics.is_empty() {
        println!("ok");
    } else {
        for d in &diagnostics {
            println!("{d}");
        }
    }
    Ok(if diagnostics.is_empty() { 0 } else { 2 })
}

fn sheaf_piece(io: &IoArgs, weight: &str) -> Result<i32> {
    let w = parse_weight(weight)?;
    let docu = load_document(io)?;
    let f = &docu.sheaf;
    let (class, twist) = f.locate(&w)?;
    let summands = f.piece(&w)?;
    let euler = f.piece_euler(&w)?;
    if io.json {
        print_json(&json!({
            "weight": w.iter().map(doc::rat_value).collect::<Vec<_>>(),
            "class": class,
            "twist": twist,
            "summands": summands,
            "euler": doc::poly_value(&euler),
        }));
        return Ok(0);
    }
    println!(
        "weight {}: class {class}, twist {}",
        fmt_qvec(&w),
        fmt_ivec(&twist)
    );
    if summands.is_empty() {
        println!("summands: none");
    } else {
        let list: Vec<String> = summands.iter().map(|s| fmt_ivec(s)).collect();
        println!("summands: {}", list.join(", "));
    }
    println!("euler: {euler}");
    Ok(0)
}

fn sheaf_slope(io: &IoArgs, chart: Option<&str>) -> Result<i32> {
    let docu = load_document(io)?;
    let g = select_chart(&docu, chart)?;
    let f = &docu.sheaf;
    let mh = stability::modified_hilbert(f, &g)?;
    let slope = stability::slope(f, &g)?;
    let groups = stability::weighted_mean(f, &g)?;
    if io.json {
        print_json(&json!({
            "chart": g.name,
            "modified_hilbert": doc::poly_value(&mh),
            "slope": doc::poly_value(&slope),
            "groups": groups
                .iter()
                .map(|grp| json!({
                    "twist": grp.twist,
                    "gamma": doc::rat_value(&grp.gamma),
                    "part": doc::poly_value(&grp.part),
                }))
                .collect::<Vec<_>>(),
        }));
        return Ok(0);
    }
    println!("chart: {}", g.name);
    println!("modified hilbert: {mh}");
    println!("slope: {slope}");
    for grp in &groups {
        println!(
            "twist {}: gamma {}, part {}",
            fmt_ivec(&grp.twist),
            rat_string(&grp.gamma),
            grp.part
        );
    }
    Ok(0)
}

fn enforce_cap(docu: &Document, cap: usize) -> Result<()> {
    for (i, cl) in docu.sheaf.classes.iter().enumerate() {
        if cl.summands.len() > cap {
            bail!(
                "cap exceeded: class {i} carries {} summands, cap is {cap}",
                cl.summands.len()
            );
        }
    }
    Ok(())
}

fn cmd_verdict(
    io: &IoArgs,
    chart: Option<&str>,
    expect: Option<&str>,
    cap: usize,
) -> Result<i32> {
    let docu = load_document(io)?;
    enforce_cap(&docu, cap)?;
    let g = select_chart(&docu, chart)?;
    let v = stability::verdict(&docu.sheaf, &g)?;
    let slope = stability::slope(&docu.sheaf, &g)?;
    let matched = match expect {
        Some(e) => Some(expect_matches(e, v.status)?),
        None => None,
    };
    if io.json {
        let mut out = json!({
            "chart": g.name,
            "status": status_str(v.status),
            "slope": doc::poly_value(&slope),
            "note": v.lattice_flag,
        });
        if let Some(w) = &v.witness {
            out["witness"] = json!({
                "picks": picks_value(&w.subsheaf.picks),
                "slope": doc::poly_value(&w.slope),
            });
        }
        if let (Some(e), Some(ok)) = (expect, matched) {
            out["expect"] = json!({"status": e, "matched": ok});
        }
        print_json(&out);
    } else {
        println!("status: {}", status_str(v.status));
        println!("slope: {slope}");
        if let Some(w) = &v.witness {
            println!("witness: {}", fmt_picks(&w.subsheaf.picks));
            println!("witness slope: {}", w.slope);
        }
        println!("note: {}", v.lattice_flag);
        if let (Some(e), Some(ok)) = (expect, matched) {
            if ok {
                println!("expectation {e}: holds");
            } else {
                println!("expectation {e}: failed, found {}", status_str(v.status));
            }
        }
    }
    Ok(match matched {
        Some(false) => 1,
        _ => 0,
    })
}

fn cmd_hn(io: &IoArgs, chart: Option<&str>) -> Result<i32> {
    let docu = load_document(io)?;
    let g = select_chart(&docu, chart)?;
    let steps = stability::hn_filtration(&docu.sheaf, &g)?;
    if io.json {
        print_json(&json!({
            "chart": g.name,
            "steps": steps
                .iter()
                .map(|s| json!({
                    "picks": picks_value(&s.subsheaf.picks),
                    "slope": doc::poly_value(&s.slope),
                }))
                .collect::<Vec<_>>(),
        }));
        return Ok(0);
    }
    for (i, s) in steps.iter().enumerate() {
        println!(
            "step {}: slope {}, selection {}",
            i + 1,
            s.slope,
            fmt_picks(&s.subsheaf.picks)
        );
    }
    Ok(0)
}

fn cmd_jh(io: &IoArgs, chart: Option<&str>) -> Result<i32> {
    let docu = load_document(io)?;
    let g = select_chart(&docu, chart)?;
    let factors = stability::jh_factors(&docu.sheaf, &g)?;
    let slope = stability::slope(&docu.sheaf, &g)?;
    if io.json {
        print_json(&json!({
            "chart": g.name,
            "slope": doc::poly_value(&slope),
            "factors": factors.iter().map(doc::sheaf_value).collect::<Vec<_>>(),
        }));
        return Ok(0);
    }
    println!("common slope: {slope}");
    for (i, f) in factors.iter().enumerate() {
        let dims: Vec<String> = f
            .classes
            .iter()
            .map(|c| c.summands.len().to_string())
            .collect();
        println!("factor {}: summands per class [{}]", i + 1, dims.join(", "));
    }
    Ok(0)
}

fn cmd_sequiv(io: &IoArgs, other: &PathBuf, chart: Option<&str>) -> Result<i32> {
    let docu = load_document(io)?;
    let text =
        std::fs::read_to_string(other).with_context(|| format!("reading {}", other.display()))?;
    let docu2 = doc::parse_document(&text)?;
    let g = select_chart(&docu, chart)?;
    let equivalent = stability::s_equivalent(&docu.sheaf, &docu2.sheaf, &g)?;
    let isomorphic = parsheaf::sheaf::is_isomorphic(&docu.sheaf, &docu2.sheaf)?;
    if io.json {
        print_json(&json!({
            "chart": g.name,
            "s_equivalent": equivalent,
            "isomorphic": isomorphic,
        }));
    } else {
        println!("s-equivalent: {}", yes_no(equivalent));
        println!("isomorphic: {}", yes_no(isomorphic));
    }
    Ok(if equivalent { 0 } else { 1 })
}

fn emit(docu: &Document) {
    print!("{}", doc::emit_document(docu));
}

fn rootops_pullback(io: &IoArgs, level: Option<i64>, step: Option<&str>) -> Result<i32> {
    let step = match (level, step) {
        (Some(m), None) => ExtensionStep::Level(m),
        (None, Some(s)) => {
            let v: Value =
                serde_json::from_str(s).map_err(|e| anyhow!("schema: step: invalid JSON: {e}"))?;
            doc::parse_extension_step(&v, "step")?
        }
        (None, None) => bail!("pullback needs --level or --step"),
        (Some(_), Some(_)) => bail!("give either --level or --step, not both"),
    };
    let docu = load_document(io)?;
    let big = releveled(&docu.sheaf.chart, &step)?;
    let up = rootops::pullback(&docu.sheaf, &big)?;
    emit(&Document { sheaf: up, charts: docu.charts });
    Ok(0)
}

fn rootops_pushforward(io: &IoArgs, level: Option<i64>) -> Result<i32> {
    let docu = load_document(io)?;
    let small = releveled(&docu.sheaf.chart, &ExtensionStep::Level(level.unwrap_or(1)))?;
    let down = rootops::pushforward(&docu.sheaf, &small)?;
    emit(&Document { sheaf: down, charts: docu.charts });
    Ok(0)
}

fn rootops_twist(io: &IoArgs, offset: &str, level: Option<i64>) -> Result<i32> {
    let d = parse_offsets(offset)?;
    let docu = load_document(io)?;
    let small = releveled(&docu.sheaf.chart, &ExtensionStep::Level(level.unwrap_or(1)))?;
    let down = rootops::twisted_pushforward(&docu.sheaf, &small, &d)?;
    emit(&Document { sheaf: down, charts: docu.charts });
    Ok(0)
}

fn rootops_adjunction(io: &IoArgs, level: i64) -> Result<i32> {
    let docu = load_document(io)?;
    let f = &docu.sheaf;
    let target = releveled(&f.chart, &ExtensionStep::Level(level))?;
    let (direction, holds) = if rootops::check_step(&f.chart, &target).is_ok() {
        ("unit", rootops::unit_is_iso(f, &target)?)
    } else if rootops::check_step(&target, &f.chart).is_ok() {
        ("descent", rootops::descends(f, &target)?)
    } else {
        bail!("chart mismatch: level {level} is neither finer nor coarser than the document's chart");
    };
    if io.json {
        print_json(&json!({
            "level": level,
            "comparison": direction,
            "isomorphism": holds,
        }));
    } else {
        println!("comparison: {direction}");
        println!("isomorphism: {}", yes_no(holds));
    }
    Ok(if holds { 0 } else { 1 })
}
