//! Argument parsing, dispatch and report rendering for the `qexch` binary.
//!
//! Every command produces a JSON report `{"command", "config", "results",
//! "pass"}`; `--csv` renders the tabular part of `results` instead. Exit codes:
//! 0 when the checked property holds, 2 when it is violated, 1 on usage
//! errors.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qexch::acceptance::{self, ExperimentConfig, NRange, OutputFormat};
use qexch::algebra::{parse_rational, rational_to_string, CMatrix, Ring};
use qexch::cumulants::{
    cumulants_to_moments, free_iid_moment, freeness_check, moments_to_cumulants, CumulantSpec,
    MomentFunctional,
};
use qexch::exchange::{
    all_permutation_magic_unitaries, definetti_gap, free_iid_functional, invariance_check,
    permutation_magic_unitary, rotated_projection, tensor_bernoulli_functional,
    two_projection_magic_unitary, urn_moment_classical, urn_moment_quantum, InvarianceVerdict,
    MagicUnitary, UrnModel, WITNESS_ANGLE,
};
use qexch::partitions::{enumerate_nc, enumerate_partitions, nc_lattice, SetPartition};
use qexch::weingarten::{
    dk_value, gram, haar_moment, verify_inverse, weingarten_asymptotics, weingarten_cached,
};
use qexch::{Error, Result};
use serde_json::{json, Map, Value};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "qexch",
    version,
    about = "Exact combinatorics of quantum exchangeable sequences"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Emit CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Degree bound for words and partitions.
    #[arg(long = "kmax", alias = "k-max", global = true, default_value_t = 8)]
    k_max: usize,
    /// Absolute tolerance for floating-point comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomized sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Inclusive sweep of n, as LO..HI.
    #[arg(long = "n-range", global = true, default_value = "4..60")]
    n_range: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Set partitions and the non-crossing lattice.
    #[command(subcommand)]
    Partitions(PartitionsCmd),
    /// Gram and Weingarten matrices of the quantum permutation group.
    #[command(subcommand)]
    Weingarten(WeingartenCmd),
    /// Haar state moments.
    #[command(subcommand)]
    Haar(HaarCmd),
    /// Moment and cumulant conversions and the freeness check.
    #[command(subcommand)]
    Cumulants(CumulantsCmd),
    /// Classical and quantum urn sequences.
    #[command(subcommand)]
    Urn(UrnCmd),
    /// Magic unitaries and invariance checks.
    #[command(subcommand)]
    Magic(MagicCmd),
    /// Run every acceptance criterion.
    ReproduceAll,
}

#[derive(Subcommand, Debug)]
enum PartitionsCmd {
    /// List P(k), or NC(k) with --nc.
    Enum {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nc: bool,
    },
    /// Möbius function μ(σ, π) of NC(k).
    Mobius {
        /// Lower partition, e.g. "1|2|3".
        #[arg(long)]
        sigma: String,
        /// Upper partition, e.g. "1,2,3".
        #[arg(long)]
        pi: String,
    },
}

#[derive(Subcommand, Debug)]
enum WeingartenCmd {
    /// W_kn (or G_kn with --gram), indexed by NC(k).
    Table {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        gram: bool,
    },
    /// One entry across the n sweep, with the Möbius residual when π ≤ σ.
    Asym {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        pi: String,
        #[arg(long)]
        sigma: String,
    },
    /// d_k(n) across the n sweep.
    Dk {
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand, Debug)]
enum HaarCmd {
    /// ψ_n(u_{i1 j1} ⋯ u_{ik jk}).
    Moment {
        #[arg(long)]
        n: usize,
        /// Row indices, comma separated.
        #[arg(long)]
        i: String,
        /// Column indices, comma separated.
        #[arg(long)]
        j: String,
    },
}

#[derive(Subcommand, Debug)]
enum CumulantsCmd {
    /// Cumulant JSON to moments, or moment JSON to cumulants.
    Convert {
        #[arg(long)]
        input: PathBuf,
    },
    /// Moment of a free identically distributed family.
    FreeMoment {
        /// Cumulant JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Letters, comma separated.
        #[arg(long)]
        letters: String,
        /// Position labels, comma separated.
        #[arg(long)]
        labels: String,
    },
    /// Vanishing of mixed cumulants.
    CheckFree {
        /// Moment JSON.
        #[arg(long)]
        input: PathBuf,
        /// Family label of each alphabet symbol, comma separated.
        #[arg(long)]
        family: String,
    },
}

#[derive(Args, Debug)]
struct UrnArgs {
    /// Urn contents λ_1..λ_n as rationals, comma separated.
    #[arg(long, conflicts_with_all = ["profile", "n"])]
    lambda: Option<String>,
    /// Profile repeated cyclically to length --n.
    #[arg(long, requires = "n")]
    profile: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Index word, comma separated.
    #[arg(long)]
    j: String,
}

#[derive(Subcommand, Debug)]
enum UrnCmd {
    /// Noncommutative urn moment ψ_n(x_{j1} ⋯ x_{jk}).
    Quantum(UrnArgs),
    /// Sampling without replacement.
    Classical(UrnArgs),
    /// Quantum urn against the marginal-matched free sequence.
    Gap(UrnArgs),
}

#[derive(Args, Debug)]
struct UnitaryArgs {
    /// Permutation τ as τ(1),…,τ(n).
    #[arg(long, conflicts_with = "theta")]
    perm: Option<String>,
    /// Two-projection unitary with q = diag(1,0) rotated by this angle.
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum MagicCmd {
    /// Check the magic-unitary relations.
    Validate(UnitaryArgs),
    /// Invariance of a sequence's moments under a magic unitary.
    Invariance {
        /// "free" (reference cumulants or --spec), "tensor-bernoulli", or a
        /// moment JSON path via --moments.
        #[arg(long, default_value = "free")]
        model: String,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        moments: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Check every permutation unitary of size n.
        #[arg(long, conflicts_with_all = ["perm", "theta"])]
        all_perms: bool,
        #[command(flatten)]
        unitary: UnitaryArgs,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A tabular view of `results` for `--csv`.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

struct Report {
    results: Value,
    pass: bool,
    table: Option<Table>,
}

impl Report {
    fn new(results: Value, pass: bool) -> Self {
        Report {
            results,
            pass,
            table: None,
        }
    }

    fn with_table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        });
        self
    }
}

/// Parses `argv` (including the program name), runs the command and renders
/// its report.
pub fn run_subcommand<I, T>(argv: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Invocation {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let usage = |msg: String| Invocation {
        code: EXIT_USAGE,
        stdout: String::new(),
        stderr: format!("error: {msg}\n"),
    };
    let config = match config_from(&cli.global) {
        Ok(c) => c,
        Err(e) => return usage(e.to_string()),
    };
    let name = command_name(&cli.command);
    match dispatch(&cli.command, &config) {
        Ok(report) => {
            let stdout = match config.output_format {
                OutputFormat::Json => render_json(&name, &config, &report),
                OutputFormat::Csv => render_csv(&report),
            };
            Invocation {
                code: if report.pass {
                    EXIT_PASS
                } else {
                    EXIT_VIOLATION
                },
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => usage(e.to_string()),
    }
}

fn config_from(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let config = ExperimentConfig {
        k_max: g.k_max,
        n_range: NRange::parse(&g.n_range)?,
        tolerance: g.tol,
        output_format: if g.csv {
            OutputFormat::Csv
        } else {
            OutputFormat::Json
        },
        seed: g.seed,
    };
    config.validate()?;
    Ok(config)
}

fn command_name(c: &Command) -> String {
    let (a, b) = match c {
        Command::Partitions(PartitionsCmd::Enum { .. }) => ("partitions", "enum"),
        Command::Partitions(PartitionsCmd::Mobius { .. }) => ("partitions", "mobius"),
        Command::Weingarten(WeingartenCmd::Table { .. }) => ("weingarten", "table"),
        Command::Weingarten(WeingartenCmd::Asym { .. }) => ("weingarten", "asym"),
        Command::Weingarten(WeingartenCmd::Dk { .. }) => ("weingarten", "dk"),
        Command::Haar(HaarCmd::Moment { .. }) => ("haar", "moment"),
        Command::Cumulants(CumulantsCmd::Convert { .. }) => ("cumulants", "convert"),
        Command::Cumulants(CumulantsCmd::FreeMoment { .. }) => ("cumulants", "free-moment"),
        Command::Cumulants(CumulantsCmd::CheckFree { .. }) => ("cumulants", "check-free"),
        Command::Urn(UrnCmd::Quantum(_)) => ("urn", "quantum"),
        Command::Urn(UrnCmd::Classical(_)) => ("urn", "classical"),
        Command::Urn(UrnCmd::Gap(_)) => ("urn", "gap"),
        Command::Magic(MagicCmd::Validate(_)) => ("magic", "validate"),
        Command::Magic(MagicCmd::Invariance { .. }) => ("magic", "invariance"),
        Command::ReproduceAll => ("reproduce-all", ""),
    };
    if b.is_empty() {
        a.to_owned()
    } else {
        format!("{a} {b}")
    }
}

fn render_json(command: &str, config: &ExperimentConfig, report: &Report) -> String {
    let doc = json!({
        "command": command,
        "config": config,
        "results": report.results,
        "pass": report.pass,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable report");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn render_csv(report: &Report) -> String {
    let table = report.table.as_ref().map_or_else(
        || {
            let rows = match &report.results {
                Value::Object(m) => m
                    .iter()
                    .map(|(k, v)| vec![k.clone(), scalar_text(v)])
                    .collect(),
                v => vec![vec!["value".to_owned(), scalar_text(v)]],
            };
            Table {
                header: vec!["key".into(), "value".into()],
                rows,
            }
        },
        |t| Table {
            header: t.header.clone(),
            rows: t.rows.clone(),
        },
    );
    let mut out = String::new();
    for row in std::iter::once(&table.header).chain(&table.rows) {
        out += &row
            .iter()
            .map(|f| csv_field(f))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
    }
    out
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} entry {s:?} in {text:?}")))
        })
        .collect()
}

fn parse_rationals(text: &str) -> Result<Vec<num::BigRational>> {
    text.split(',').map(|s| parse_rational(s.trim())).collect()
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn check_k(k: usize, config: &ExperimentConfig) -> Result<()> {
    if k == 0 || k > config.k_max {
        return Err(Error::Bound {
            what: "k",
            value: k,
            min: 1,
            max: config.k_max,
        });
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig) -> Vec<usize> {
    (config.n_range.min..=config.n_range.max).collect()
}

fn dispatch(command: &Command, config: &ExperimentConfig) -> Result<Report> {
    match command {
        Command::Partitions(c) => partitions(c, config),
        Command::Weingarten(c) => weingarten(c, config),
        Command::Haar(HaarCmd::Moment { n, i, j }) => {
            let i: Vec<usize> = parse_list(i, "index")?;
            let j: Vec<usize> = parse_list(j, "index")?;
            check_k(i.len(), config)?;
            let v = rational_to_string(&haar_moment(*n, &i, &j)?);
            Ok(Report::new(
                json!({"n": n, "i": i, "j": j, "value": v}),
                true,
            ))
        }
        Command::Cumulants(c) => cumulants(c, config),
        Command::Urn(c) => urn(c, config),
        Command::Magic(c) => magic(c, config),
        Command::ReproduceAll => reproduce_all(config),
    }
}

fn partitions(c: &PartitionsCmd, config: &ExperimentConfig) -> Result<Report> {
    match c {
        PartitionsCmd::Enum { k, nc } => {
            check_k(*k, config)?;
            let items = if *nc {
                enumerate_nc(*k)?
            } else {
                enumerate_partitions(*k)?
            };
            let rows: Vec<Vec<String>> = items
                .iter()
                .enumerate()
                .map(|(x, p)| vec![x.to_string(), p.to_string(), p.block_count().to_string()])
                .collect();
            let results = json!({
                "k": k,
                "noncrossing": nc,
                "count": items.len(),
                "items": items.iter().map(ToString::to_string).collect::<Vec<_>>(),
            });
            Ok(Report::new(results, true).with_table(&["index", "partition", "blocks"], rows))
        }
        PartitionsCmd::Mobius { sigma, pi } => {
            let sigma: SetPartition = sigma.parse()?;
            let pi: SetPartition = pi.parse()?;
            check_k(pi.ground_size(), config)?;
            let mu = qexch::partitions::mobius_nc(&sigma, &pi)?;
            let results = json!({"sigma": sigma.to_string(), "pi": pi.to_string(), "mobius": mu});
            Ok(Report::new(results, true))
        }
    }
}

fn weingarten(c: &WeingartenCmd, config: &ExperimentConfig) -> Result<Report> {
    match c {
        WeingartenCmd::Table {
            k,
            n,
            gram: want_gram,
        } => {
            check_k(*k, config)?;
            let lattice = nc_lattice(*k)?;
            let labels: Vec<String> = lattice.elements().iter().map(ToString::to_string).collect();
            let (results, cells, pass) = if *want_gram {
                let g = gram(*k, *n)?;
                let cells: Vec<Vec<String>> = g
                    .entries
                    .iter()
                    .map(|r| r.iter().map(|x| format!("{x}/1")).collect())
                    .collect();
                (g.to_json(), cells, true)
            } else {
                let w = weingarten_cached(*k, *n)?;
                let cells = w
                    .entries
                    .iter()
                    .map(|r| r.iter().map(rational_to_string).collect())
                    .collect();
                (w.to_json(), cells, verify_inverse(*k, *n)?)
            };
            let mut rows = Vec::new();
            for (a, row) in cells.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    rows.push(vec![labels[a].clone(), labels[b].clone(), v.clone()]);
                }
            }
            Ok(Report::new(results, pass).with_table(&["pi", "sigma", "value"], rows))
        }
        WeingartenCmd::Asym { k, pi, sigma } => {
            check_k(*k, config)?;
            let pi: SetPartition = pi.parse()?;
            let sigma: SetPartition = sigma.parse()?;
            let r = weingarten_asymptotics(*k, &sweep(config), &pi, &sigma)?;
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|x| {
                    vec![
                        x.n.to_string(),
                        rational_to_string(&x.entry),
                        rational_to_string(&x.value),
                    ]
                })
                .collect();
            let results = json!({
                "k": k,
                "pi": pi.to_string(),
                "sigma": sigma.to_string(),
                "mode": r.mode,
                "mobius": r.mobius,
                "rows": rows.iter().map(|x| json!({"n": x[0].parse::<usize>().unwrap_or(0), "entry": x[1], "value": x[2]})).collect::<Vec<_>>(),
                "trend": r.trend,
            });
            Ok(Report::new(results, r.trend.bounded).with_table(&["n", "entry", "value"], rows))
        }
        WeingartenCmd::Dk { k } => {
            check_k(*k, config)?;
            let r = dk_value(*k, &sweep(config))?;
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|(n, v)| vec![n.to_string(), rational_to_string(v)])
                .collect();
            let results = json!({
                "k": k,
                "rows": r.rows.iter().map(|(n, v)| json!({"n": n, "dk": rational_to_string(v)})).collect::<Vec<_>>(),
                "max": rational_to_string(&r.max),
                "argmax": r.argmax,
                "note": "maximum over the finite sweep; a lower bound for the supremum over all n",
            });
            Ok(Report::new(results, true).with_table(&["n", "dk"], rows))
        }
    }
}

fn cumulants(c: &CumulantsCmd, config: &ExperimentConfig) -> Result<Report> {
    match c {
        CumulantsCmd::Convert { input } => {
            let doc = read_json(input)?;
            if doc.get("cumulants").is_some() {
                let spec = CumulantSpec::from_json(&doc)?;
                check_k(spec.k_max(), config)?;
                let mf = MomentFunctional::from_fn(
                    spec.alphabet().to_vec(),
                    spec.k_max(),
                    spec.unit().clone(),
                    |w| cumulants_to_moments(&spec, w),
                )?;
                Ok(Report::new(
                    json!({"direction": "cumulants-to-moments", "output": mf.to_json()}),
                    true,
                ))
            } else {
                let mf = MomentFunctional::from_json(&doc)?;
                check_k(mf.k_max(), config)?;
                let mut spec =
                    CumulantSpec::new(mf.alphabet().to_vec(), mf.k_max(), mf.unit().clone())?;
                for w in mf.values().keys() {
                    let kappa = moments_to_cumulants(&mf, &SetPartition::one(w.len())?, w)?;
                    if !num::Zero::is_zero(&kappa) {
                        spec.set(w, kappa)?;
                    }
                }
                Ok(Report::new(
                    json!({"direction": "moments-to-cumulants", "output": spec.to_json()}),
                    true,
                ))
            }
        }
        CumulantsCmd::FreeMoment {
            spec,
            letters,
            labels,
        } => {
            let spec = CumulantSpec::from_json(&read_json(spec)?)?;
            let word = spec.parse_word(letters)?;
            let labels: Vec<usize> = parse_list(labels, "label")?;
            let v = free_iid_moment(&spec, &word, &labels)?;
            let results =
                json!({"letters": letters, "labels": labels, "value": rational_to_string(&v)});
            Ok(Report::new(results, true))
        }
        CumulantsCmd::CheckFree { input, family } => {
            let mf = MomentFunctional::from_json(&read_json(input)?)?;
            check_k(mf.k_max(), config)?;
            let family: Vec<usize> = parse_list(family, "family label")?;
            let v = freeness_check(&mf, &family, config.tolerance)?;
            let violations: Vec<Value> = v
                .violations
                .iter()
                .map(|x| json!({"partition": x.partition.to_string(), "word": x.word, "magnitude": x.magnitude}))
                .collect();
            let rows = v
                .violations
                .iter()
                .map(|x| {
                    vec![
                        x.partition.to_string(),
                        x.word.join(" "),
                        x.magnitude.to_string(),
                    ]
                })
                .collect();
            let results = json!({
                "free": v.free,
                "checked": v.checked,
                "violation_count": v.violation_count,
                "violations": violations,
            });
            Ok(Report::new(results, v.free).with_table(&["partition", "word", "magnitude"], rows))
        }
    }
}

fn urn_model(a: &UrnArgs) -> Result<UrnModel> {
    match (&a.lambda, &a.profile, a.n) {
        (Some(l), _, _) => UrnModel::new(parse_rationals(l)?),
        (None, Some(p), Some(n)) => UrnModel::from_profile(&parse_rationals(p)?, n),
        _ => Err(Error::Parse("give --lambda, or --profile with --n".into())),
    }
}

fn urn(c: &UrnCmd, config: &ExperimentConfig) -> Result<Report> {
    let (args, kind) = match c {
        UrnCmd::Quantum(a) => (a, "quantum"),
        UrnCmd::Classical(a) => (a, "classical"),
        UrnCmd::Gap(a) => (a, "gap"),
    };
    let model = urn_model(args)?;
    let j: Vec<usize> = parse_list(&args.j, "index")?;
    check_k(j.len(), config)?;
    let lambda: Vec<String> = model.lambda().iter().map(rational_to_string).collect();
    match kind {
        "quantum" | "classical" => {
            let v = if kind == "quantum" {
                urn_moment_quantum(&model, &j)?
            } else {
                urn_moment_classical(&model, &j)?
            };
            Ok(Report::new(
                json!({"lambda": lambda, "j": j, "value": rational_to_string(&v)}),
                true,
            ))
        }
        _ => {
            let r = definetti_gap(&model, &j)?;
            let results = json!({
                "lambda": lambda,
                "j": j,
                "urn": rational_to_string(&r.urn),
                "free": rational_to_string(&r.free),
                "gap": rational_to_string(&r.gap),
                "dk": rational_to_string(&r.dk),
                "bound": rational_to_string(&r.bound),
                "within": r.within,
            });
            Ok(Report::new(results, r.within))
        }
    }
}

enum AnyUnitary {
    Exact(MagicUnitary<num::BigRational>),
    Complex(MagicUnitary<CMatrix>),
}

fn unitary(a: &UnitaryArgs, n: usize, config: &ExperimentConfig) -> Result<AnyUnitary> {
    match (&a.perm, a.theta) {
        (Some(p), _) => Ok(AnyUnitary::Exact(permutation_magic_unitary(&parse_list(
            p,
            "permutation",
        )?)?)),
        (None, theta) => {
            let theta = theta.unwrap_or(WITNESS_ANGLE);
            let u = two_projection_magic_unitary(
                &rotated_projection(0.0),
                &rotated_projection(theta),
                config.tolerance.max(1e-12),
            )?;
            Ok(AnyUnitary::Complex(u.extend_identity(n.max(4))?))
        }
    }
}

fn magic(c: &MagicCmd, config: &ExperimentConfig) -> Result<Report> {
    match c {
        MagicCmd::Validate(a) => {
            let (n, valid, commutative, error) = match unitary(a, 4, config)? {
                AnyUnitary::Exact(u) => summary(&u, 0.0),
                AnyUnitary::Complex(u) => summary(&u, config.tolerance),
            };
            let results =
                json!({"n": n, "valid": valid, "commutative": commutative, "error": error});
            Ok(Report::new(results, valid))
        }
        MagicCmd::Invariance {
            model,
            spec,
            moments,
            n,
            degree,
            all_perms,
            unitary: ua,
        } => {
            check_k(*degree, config)?;
            let mf = match (moments, model.as_str()) {
                (Some(path), _) => MomentFunctional::from_json(&read_json(path)?)?,
                (None, "tensor-bernoulli") => tensor_bernoulli_functional(*n, *degree)?,
                (None, "free") => {
                    let spec = match spec {
                        Some(p) => CumulantSpec::from_json(&read_json(p)?)?,
                        None => acceptance::reference_spec(*degree)?,
                    };
                    free_iid_functional(&spec, *n, *degree)?
                }
                (None, other) => return Err(Error::Parse(format!("unknown model {other:?}"))),
            };
            let verdicts: Vec<(String, InvarianceVerdict)> = if *all_perms {
                all_permutation_magic_unitaries(*n)?
                    .iter()
                    .enumerate()
                    .map(|(x, u)| {
                        Ok((
                            format!("permutation #{x}"),
                            invariance_check(&mf, u, *degree)?,
                        ))
                    })
                    .collect::<Result<_>>()?
            } else {
                match unitary(ua, *n, config)? {
                    AnyUnitary::Exact(u) => {
                        vec![("permutation".into(), invariance_check(&mf, &u, *degree)?)]
                    }
                    AnyUnitary::Complex(u) => {
                        vec![("two-projection".into(), invariance_check(&mf, &u, *degree)?)]
                    }
                }
            };
            let worst = verdicts
                .iter()
                .max_by(|a, b| a.1.max_deviation.total_cmp(&b.1.max_deviation))
                .expect("at least one unitary");
            let pass = verdicts.iter().all(|(_, v)| v.passes(config.tolerance));
            let rows = verdicts
                .iter()
                .map(|(name, v)| {
                    vec![
                        name.clone(),
                        v.words_checked.to_string(),
                        v.max_deviation.to_string(),
                    ]
                })
                .collect();
            let results = json!({
                "unitaries": verdicts.len(),
                "words_checked": worst.1.words_checked,
                "max_deviation": worst.1.max_deviation,
                "worst_unitary": worst.0,
                "witness": worst.1.witness.as_ref().map(|w| json!({"letters": w.letters, "j": w.j, "deviation": w.deviation})),
            });
            Ok(Report::new(results, pass).with_table(&["unitary", "words", "max_deviation"], rows))
        }
    }
}

fn summary<R: Ring>(u: &MagicUnitary<R>, tol: f64) -> (usize, bool, bool, Option<String>) {
    let check = u.validate(tol);
    (
        u.n(),
        check.is_ok(),
        u.is_commutative(tol),
        check.err().map(|e| e.to_string()),
    )
}

fn reproduce_all(config: &ExperimentConfig) -> Result<Report> {
    let reports = acceptance::run_all(config)?;
    let pass = reports.iter().all(|r| r.pass);
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                r.name.to_owned(),
                r.pass.to_string(),
                r.observed.clone(),
                r.bound.clone(),
            ]
        })
        .collect();
    let results = serde_json::to_value(&reports).map_err(|e| Error::Parse(e.to_string()))?;
    let mut m = Map::new();
    m.insert("criteria".into(), results);
    m.insert(
        "passed".into(),
        json!(reports.iter().filter(|r| r.pass).count()),
    );
    m.insert("total".into(), json!(reports.len()));
    Ok(Report::new(Value::Object(m), pass)
        .with_table(&["id", "name", "pass", "observed", "bound"], rows))
}
