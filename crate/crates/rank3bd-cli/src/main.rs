use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use rank3bd::arith::ThetaSpec;
use rank3bd::bratteli::{dot_skeleton, dot_weighted, DotOptions, VertexId, WeightedBratteli};
use rank3bd::cohomology::{is_cocycle, sample_cocycles, verify_reduction};
use rank3bd::kgraph::tower_from_path;
use rank3bd::ktheory::{
    a_matrix, check_intertwiner, emit_nonneg_matrices, k0_equal, k0_positive, level_denominator, level_group_text,
    limit_summary, matrix_csv, push_a, push_b, reach, simplicity, theta_iso, KOneClass, KZeroClass,
};
use rank3bd::traces::{solve_traces, Normalization};
use rank3bd::{examples, Error};

mod golden;

#[derive(Parser)]
#[command(name = "rank3bd", version, about = "Exact computations for rank-3 Bratteli diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// θ as `cf:0,a1,...,(period)` or `surd:(a±b*sqrt(d))/c`.
    #[arg(long, default_value = "cf:0,(2)")]
    theta: String,
    /// Number of levels to work with.
    #[arg(long)]
    levels: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check singly-connectedness, divisibility and the stationary declaration.
    Validate { diagram: String },
    /// Level groups, connecting maps and the limit summary.
    Ktheory {
        diagram: String,
        #[command(flatten)]
        common: Common,
        /// Also write the nonnegative matrices as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Push a K₀ class, test positivity, and compare with another class.
    K0 {
        diagram: String,
        /// `k0@n: name=(p,q); ...`
        class: String,
        #[arg(long)]
        equal: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Push a K₁ class and map it through the θ-isomorphism.
    K1 {
        diagram: String,
        /// `k1@n: name=(a,b); ...`
        class: String,
        #[command(flatten)]
        common: Common,
    },
    /// Sample 2-cocycles on a covering tower and check the reduction.
    Cocycle {
        diagram: String,
        /// Comma-separated vertex names, one per level from level 1.
        #[arg(long)]
        path: Option<String>,
        /// Rank-2 degree bound `p,q` (or `p,q,r`).
        #[arg(long, default_value = "2,2")]
        bound: String,
        #[arg(long, default_value_t = 12)]
        modulus: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check c − δ¹b = π_*(c|Λ₁) for each sample.
        #[arg(long)]
        reduce: bool,
        /// Perturb the first sample on one pair inside level 2 (testing aid).
        #[arg(long, hide = true)]
        corrupt: bool,
        /// Write the first sample in dump format.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Solve for graph traces and print the forced values.
    Traces {
        diagram: String,
        /// Impose Σ w(v)h(v) = 1 on level 1.
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Decide simplicity through cofinality.
    Simplicity {
        diagram: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Emit Graphviz DOT for the diagram or its coloured skeleton.
    Dot {
        diagram: String,
        #[arg(long)]
        skeleton: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Emit the nonnegative integer matrices as CSV.
    Matrices {
        diagram: String,
        /// Emit only the matrix from this level to the next.
        #[arg(long)]
        level: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in examples and compare with the stored golden output.
    Examples {
        /// Compare against (or with --bless, write) files in this directory.
        #[arg(long)]
        golden_dir: Option<PathBuf>,
        #[arg(long, requires = "golden_dir")]
        bless: bool,
    },
}

/// A report plus its exit status.
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, ok: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<Error>() {
        Some(Error::Io(_)) | Some(Error::Parse(_)) => ExitCode::from(2),
        Some(_) => ExitCode::from(1),
        None if err.downcast_ref::<std::io::Error>().is_some() => ExitCode::from(2),
        None => ExitCode::from(1),
    }
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    let (outcome, out) = match cmd {
        Command::Validate { diagram } => (cmd_validate(&diagram)?, None),
        Command::Ktheory { diagram, common, csv } => {
            let e = load_valid(&diagram)?;
            if let Some(path) = csv {
                let levels = common.levels.unwrap_or(6);
                std::fs::write(&path, all_matrices_csv(&e, levels)?).with_context(|| path.display().to_string())?;
            }
            (Outcome::ok(ktheory_report(&e, &theta(&common)?, common.levels.unwrap_or(6))?), common.out)
        }
        Command::K0 { diagram, class, equal, common } => {
            let e = load_valid(&diagram)?;
            (Outcome::ok(cmd_k0(&e, &class, equal.as_deref(), &common)?), common.out)
        }
        Command::K1 { diagram, class, common } => {
            let e = load_valid(&diagram)?;
            (Outcome::ok(cmd_k1(&e, &class, &common)?), common.out)
        }
        Command::Cocycle { diagram, path, bound, modulus, count, seed, reduce, corrupt, dump, common } => {
            let e = load_valid(&diagram)?;
            let opts = CocycleOpts {
                path,
                bound,
                modulus,
                count,
                seed,
                reduce,
                corrupt,
                dump,
                levels: common.levels.unwrap_or(3),
            };
            (cmd_cocycle(&e, &opts)?, common.out)
        }
        Command::Traces { diagram, normalize, common } => {
            let e = load_valid(&diagram)?;
            (Outcome::ok(traces_report(&e, common.levels.unwrap_or(5), normalize)?), common.out)
        }
        Command::Simplicity { diagram, depth } => {
            let e = load_valid(&diagram)?;
            let depth = if e.stationary().is_some() { depth } else { depth.min(e.num_levels()) };
            (Outcome::ok(format!("{}\n", simplicity(&e, depth)?)), None)
        }
        Command::Dot { diagram, skeleton, common } => {
            let e = load_valid(&diagram)?;
            let e = match common.levels {
                Some(n) => reach(&e, n)?.into_owned(),
                None => e,
            };
            let opts = DotOptions { levels: common.levels };
            let text = if skeleton { dot_skeleton(&e, &opts) } else { dot_weighted(&e, &opts) };
            (Outcome::ok(text), common.out)
        }
        Command::Matrices { diagram, level, common } => {
            let e = load_valid(&diagram)?;
            let text = match level {
                Some(n) => {
                    let ext = reach(&e, n + 1)?;
                    matrix_csv(&a_matrix(&ext, n))
                }
                None => all_matrices_csv(&e, common.levels.unwrap_or(3))?,
            };
            (Outcome::ok(text), common.out)
        }
        Command::Examples { golden_dir, bless } => (golden::run(golden_dir.as_deref(), bless)?, None),
    };
    match out {
        Some(path) => std::fs::write(&path, &outcome.text).with_context(|| path.display().to_string())?,
        None => print!("{}", outcome.text),
    }
    Ok(if outcome.ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// `builtin:exampleN` or a JSON file.
fn load(arg: &str) -> anyhow::Result<WeightedBratteli> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return examples::all()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::Parse(format!("no built-in diagram {name:?}")).into());
    }
    WeightedBratteli::from_path(Path::new(arg)).with_context(|| format!("reading {arg}"))
}

fn load_valid(arg: &str) -> anyhow::Result<WeightedBratteli> {
    let e = load(arg)?;
    let report = e.validate();
    if !report.is_empty() {
        return Err(Error::Invalid(format!("invalid diagram:\n{}", report.to_string().trim_end())).into());
    }
    Ok(e)
}

fn theta(c: &Common) -> anyhow::Result<ThetaSpec> {
    Ok(ThetaSpec::parse(&c.theta)?)
}

fn cmd_validate(arg: &str) -> anyhow::Result<Outcome> {
    let e = load(arg)?;
    let report = e.validate();
    Ok(Outcome { text: report.to_string(), ok: report.is_empty() })
}

fn all_matrices_csv(e: &WeightedBratteli, levels: usize) -> anyhow::Result<String> {
    let mut s = String::new();
    for (k, m) in emit_nonneg_matrices(e, levels)?.iter().enumerate() {
        writeln!(s, "# A'_{} rows=level {} cols=level {}", k + 1, k + 2, k + 1)?;
        s.push_str(&matrix_csv(m));
    }
    Ok(s)
}

pub(crate) fn ktheory_report(e: &WeightedBratteli, spec: &ThetaSpec, levels: usize) -> anyhow::Result<String> {
    let ext = reach(e, levels)?;
    let mut s = String::new();
    writeln!(s, "theta: {spec}")?;
    writeln!(s, "levels: {levels}")?;
    for n in 1..=levels {
        let weights: Vec<String> = ext.level_ids(n).map(|v| ext.weight(v).to_string()).collect();
        writeln!(
            s,
            "level {n}: vertices={} weights={} K0={} K1=Z^{}",
            ext.level(n).len(),
            weights.join(","),
            level_group_text(&ext, n),
            2 * ext.level(n).len()
        )?;
    }
    let dens: Vec<String> = (1..=levels).map(|n| level_denominator(&ext, n).to_string()).collect();
    writeln!(s, "denominators: {}", dens.join(","))?;
    for n in 1..levels {
        let rows: Vec<String> = a_matrix(&ext, n)
            .iter()
            .map(|r| format!("[{}]", r.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
            .collect();
        writeln!(s, "A_{n}: [{}]", rows.join(","))?;
    }
    let tower = ext.truncated(levels);
    writeln!(s, "intertwiner: {}", if check_intertwiner(&tower) { "ok" } else { "FAILED" })?;
    let depth = if e.stationary().is_some() { 2 } else { 2.min(levels) };
    writeln!(s, "simplicity: {}", simplicity(e, depth)?)?;
    writeln!(s, "{}", limit_summary(e)?)?;
    Ok(s)
}

fn cmd_k0(e: &WeightedBratteli, class: &str, equal: Option<&str>, c: &Common) -> anyhow::Result<String> {
    let spec = theta(c)?;
    let x = KZeroClass::parse(e, class)?;
    let target = c.levels.unwrap_or(x.level + 1).max(x.level);
    let ext = reach(e, target)?;
    let mut s = String::new();
    writeln!(s, "class: {}", x.render(&ext))?;
    writeln!(s, "value: {}", x.value(&ext))?;
    let y = push_a(&ext, &x, target)?;
    writeln!(s, "push: {}", y.render(&ext))?;
    writeln!(s, "positivity: {}", k0_positive(&ext, &x, &spec, target)?)?;
    if let Some(other) = equal {
        let z = KZeroClass::parse(e, other)?;
        writeln!(s, "equality: {}", k0_equal(&ext, &x, &z, target)?)?;
    }
    Ok(s)
}

fn cmd_k1(e: &WeightedBratteli, class: &str, c: &Common) -> anyhow::Result<String> {
    let x = KOneClass::parse(e, class)?;
    let target = c.levels.unwrap_or(x.level + 1).max(x.level);
    let ext = reach(e, target)?;
    let y = push_b(&ext, &x, target)?;
    let natural = push_a(&ext, &theta_iso(&x), target)? == theta_iso(&y);
    let mut s = String::new();
    writeln!(s, "class: {}", x.render(&ext))?;
    writeln!(s, "push: {}", y.render(&ext))?;
    writeln!(s, "theta_iso: {}", theta_iso(&x).render(&ext))?;
    writeln!(s, "theta_iso(push): {}", theta_iso(&y).render(&ext))?;
    writeln!(s, "naturality: {}", if natural { "ok" } else { "FAILED" })?;
    Ok(s)
}

struct CocycleOpts {
    path: Option<String>,
    bound: String,
    modulus: u64,
    count: usize,
    seed: u64,
    reduce: bool,
    corrupt: bool,
    dump: Option<PathBuf>,
    levels: usize,
}

fn parse_bound(text: &str, levels: usize) -> anyhow::Result<[u32; 3]> {
    let parts: Vec<u32> = text
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad bound {text:?}"))))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [p, q] => Ok([*p, *q, levels.saturating_sub(1) as u32]),
        [p, q, r] => Ok([*p, *q, *r]),
        _ => Err(Error::Parse(format!("bound {text:?} needs two or three entries")).into()),
    }
}

fn cmd_cocycle(e: &WeightedBratteli, o: &CocycleOpts) -> anyhow::Result<Outcome> {
    let levels = o.levels.max(1);
    let ext = reach(e, levels)?;
    let path: Vec<VertexId> = match &o.path {
        Some(p) => p
            .split(',')
            .map(|n| ext.find(n.trim()).ok_or_else(|| anyhow!("no vertex named {n:?}")))
            .collect::<anyhow::Result<_>>()?,
        None => (1..=levels).map(|n| VertexId::new(n, 0)).collect(),
    };
    let bound = parse_bound(&o.bound, path.len())?;
    let t = tower_from_path(&ext, &path, bound)?;
    let g = t.graph();
    let mut s = String::new();
    let names: Vec<&str> = path.iter().map(|&v| ext.name(v)).collect();
    let weights: Vec<String> = path.iter().map(|&v| ext.weight(v).to_string()).collect();
    writeln!(s, "tower: {} (weights {})", names.join(" <- "), weights.join(","))?;
    writeln!(s, "bound: ({},{},{})", bound[0], bound[1], bound[2])?;
    writeln!(s, "morphisms: {}", g.num_morphisms())?;
    writeln!(s, "composable pairs: {}", rank3bd::cohomology::composable_tuples(g, 2).len())?;
    writeln!(s, "modulus: {}", o.modulus)?;
    let mut sample = sample_cocycles(g, o.modulus, o.count, o.seed)?;
    writeln!(s, "generators: {}", sample.generators)?;
    if o.count == 0 {
        return Ok(Outcome::ok(s));
    }
    if o.corrupt {
        let target = rank3bd::cohomology::composable_tuples(g, 2)
            .into_iter()
            .find(|p| p.iter().all(|&m| !g.is_identity(m) && g.degree(m).0[2] == 0 && t.level_of(g.range(m)) >= 2));
        let Some(pair) = target else { bail!("no pair inside level 2 to corrupt") };
        let c = &mut sample.cocycles[0];
        let v = (c.get(&pair) + 1) % o.modulus;
        c.set(pair, v);
    }
    if let Some(path) = &o.dump {
        std::fs::write(path, sample.cocycles[0].dump(g)).with_context(|| path.display().to_string())?;
    }
    writeln!(s, "sampled: {} (seed {})", o.count, o.seed)?;
    let mut pass = 0;
    let mut failures = Vec::new();
    for (k, c) in sample.cocycles.iter().enumerate() {
        let verdict = if o.reduce {
            verify_reduction(&t, c)?
                .failure
                .map(|(a, b)| format!("c - δb ≠ π_*(c|Λ₁) at ({}, {})", g.morphism(a).label, g.morphism(b).label))
        } else {
            is_cocycle(g, c).err().map(|w| {
                let l: Vec<&str> = w.iter().map(|&m| g.morphism(m).label.as_str()).collect();
                format!("cocycle identity fails at ({})", l.join(", "))
            })
        };
        match verdict {
            None => pass += 1,
            Some(msg) => failures.push(format!("sample {}: FAIL {msg}", k + 1)),
        }
    }
    let what = if o.reduce { "reduction" } else { "cocycle identity" };
    writeln!(s, "{what}: {pass}/{} pass", o.count)?;
    for f in &failures {
        writeln!(s, "{f}")?;
    }
    Ok(Outcome { text: s, ok: failures.is_empty() })
}

pub(crate) fn traces_report(e: &WeightedBratteli, levels: usize, normalize: bool) -> anyhow::Result<String> {
    let ext = reach(e, levels)?;
    let norm = if normalize { Normalization::Unit } else { Normalization::None };
    let sol = solve_traces(&ext, levels, norm)?;
    let mut s = String::new();
    writeln!(s, "levels solved: {levels}")?;
    writeln!(s, "normalisation: {}", if normalize { "unit" } else { "none" })?;
    writeln!(s, "free directions: {}", sol.dimension())?;
    writeln!(s, "determined through level: {}", sol.determined_through)?;
    s.push_str(&sol.particular.render(&ext, sol.determined_through));
    Ok(s)
}
