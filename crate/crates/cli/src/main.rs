//! `nsedge`: command-line front end for edge tests, subtraction, witnesses,
//! edge realizations and no-go scans.

mod human;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nsedge::edge::diagnostics;
use nsedge::io;
use nsedge::realization::random::random_lhs_assemblage;
use nsedge::realization::{
    random_rank_two_instance, theorem2_construct, theorem3_scan, theorem4_construct, MeasurementKind, ScanConfig,
    StateFamily, DEFAULT_MAX_TRIES,
};
use nsedge::scenario::enumerate_deterministic_boxes_capped;
use nsedge::{
    certify, evaluate, fixtures, is_on_edge, subtract, Assemblage, Error, Hermitian, RandomSource, RankTolerance,
    Scenario, Tolerances,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod exit {
    pub const OK: u8 = 0;
    pub const NEGATIVE: u8 = 1;
    pub const INVALID_ASSEMBLAGE: u8 = 2;
    pub const ALARM: u8 = 3;
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
}

#[derive(Parser, Debug)]
#[command(name = "nsedge", version, about = "Edge tests, LHS subtraction and witnesses for no-signaling assemblages")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Absolute eigenvalue threshold for ranks and images.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_rank_abs: f64,
    /// Relative eigenvalue threshold (times the largest eigenvalue).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_rank_rel: f64,
    /// Tolerance for normalization and no-signaling checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_ns: f64,
    /// Kernel threshold for common-image computations.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_intersect: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Built-in input instead of a file: example1, example1-sigma-p, pr-box-d1, ghz.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Mixing parameter for the example1-sigma-p fixture.
    #[arg(long, global = true, default_value_t = 0.5)]
    p: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check positivity, normalization and no-signaling.
    Validate { file: Option<PathBuf> },
    /// Decide whether the assemblage is on the edge.
    Edge {
        file: Option<PathBuf>,
        /// Mix in a deterministic LHS assemblage with this weight first.
        #[arg(long)]
        mix_lhs: Option<f64>,
        /// Add determinant values and rank screens.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Split off an LHS part.
    Subtract {
        file: Option<PathBuf>,
        /// Deterministic box index to subtract along.
        #[arg(long = "box")]
        box_index: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a witness certificate for an edge assemblage.
    Witness {
        file: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Evaluate on this many random LHS assemblages.
        #[arg(long)]
        check_lhs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a stored witness on an assemblage.
    Evaluate {
        file: Option<PathBuf>,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Construct measurements steering a state onto the edge.
    Realize {
        #[command(subcommand)]
        which: Realize,
    },
    /// Randomized check that rank ≥ 3 three-qubit states never reach the edge.
    Scan {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Kind::Pvm)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Family::Generic)]
        family: Family,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the local deterministic boxes of a scenario.
    Boxes {
        file: Option<PathBuf>,
        /// Settings per party, e.g. 2,2 (used when no file or fixture is given).
        #[arg(long, value_delimiter = ',')]
        settings: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        outcomes: Option<Vec<usize>>,
    },
}

#[derive(Subcommand, Debug)]
enum Realize {
    /// Pure state on C^2 ⊗ C^2 ⊗ C^d entangled across AB|C.
    Thm2 {
        /// State file with "dims" and "vector".
        state: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_TRIES)]
        max_tries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the resulting assemblage.
        #[arg(long)]
        assemblage_out: Option<PathBuf>,
    },
    /// Rank-two state with pure entangled conditional states.
    Thm4 {
        /// State file with "dims" and "density".
        state: Option<PathBuf>,
        /// A's two binary POVMs, as a one-party measurement file.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Draw a random qualifying instance with this trusted dimension.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MAX_TRIES)]
        max_tries: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        assemblage_out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Pvm,
    Povm,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Generic,
    Structured,
}

/// A failure carrying its exit code.
struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Fail { code: exit::USAGE, message: message.into() }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Format(_) | Error::Json(_) | Error::InvalidParams(_) => exit::USAGE,
            Error::NotOnEdge | Error::NothingToSubtract | Error::SearchExhausted { .. } => exit::NEGATIVE,
            _ => exit::DATA,
        };
        Fail { code, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Fail>;

struct Ctx {
    tol: Tolerances,
    seed: u64,
    json: bool,
    fixture: Option<String>,
    p: f64,
}

impl Ctx {
    fn from(g: &Global) -> Result<Self, Fail> {
        let tols = [g.tol_rank_abs, g.tol_rank_rel, g.tol_ns, g.tol_intersect];
        if tols.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Fail::usage("tolerances must be positive"));
        }
        let tol = Tolerances {
            rank: RankTolerance { abs_tol: g.tol_rank_abs, rel_tol: g.tol_rank_rel },
            ns: g.tol_ns,
            intersection: g.tol_intersect,
            ..Tolerances::default()
        };
        Ok(Ctx { tol, seed: g.seed, json: g.json, fixture: g.fixture.clone(), p: g.p })
    }

    fn emit(&self, value: &Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
        } else {
            print!("{}", human());
        }
    }
}

fn read_text(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Fail> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    std::fs::write(path, text + "\n").map_err(|e| Fail { code: exit::DATA, message: format!("cannot write {}: {e}", path.display()) })
}

fn fixture_assemblage(name: &str, p: f64) -> Result<Assemblage, Fail> {
    match name {
        "example1" => Ok(fixtures::example1_assemblage()),
        "example1-sigma-p" => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Fail::usage("--p must lie in [0, 1]"));
            }
            Ok(fixtures::example1_sigma_p(p)?)
        }
        "pr-box-d1" => Ok(fixtures::pr_box_d1()),
        "ghz" => Err(Fail::usage("fixture ghz is a state; use it with `realize thm2`")),
        other => Err(Fail::usage(format!("unknown fixture {other}; known: {}", fixtures::FIXTURE_NAMES.join(", ")))),
    }
}

fn load_assemblage(ctx: &Ctx, file: &Option<PathBuf>) -> Result<Assemblage, Fail> {
    match (file, &ctx.fixture) {
        (Some(_), Some(_)) => Err(Fail::usage("give either a file or --fixture, not both")),
        (Some(path), None) => Ok(io::parse_assemblage(&read_text(path)?)?),
        (None, Some(name)) => fixture_assemblage(name, ctx.p),
        (None, None) => Err(Fail::usage("no input: give a file or --fixture")),
    }
}

/// Load and require a valid assemblage (exit 65 otherwise).
fn load_valid(ctx: &Ctx, file: &Option<PathBuf>) -> Result<Assemblage, Fail> {
    let a = load_assemblage(ctx, file)?;
    let report = a.validate(&ctx.tol);
    if !report.is_valid() {
        let first = report.violations.first().map(|v| format!(" (first: {:?} at {})", v.kind, v.position));
        return Err(Fail { code: exit::DATA, message: format!("invalid assemblage{}", first.unwrap_or_default()) });
    }
    Ok(a)
}

fn cmd_validate(ctx: &Ctx, file: &Option<PathBuf>) -> CmdResult {
    let a = match (file, &ctx.fixture) {
        (Some(path), None) => match io::parse_assemblage(&read_text(path)?) {
            Err(Error::InvalidBlock { position, source }) => {
                let value = json!({
                    "valid": false,
                    "violations": [{ "kind": "hermiticity", "position": position, "message": source.to_string() }],
                });
                ctx.emit(&value, || format!("INVALID\n  block {position}: {source}\n"));
                return Ok(exit::INVALID_ASSEMBLAGE);
            }
            other => other?,
        },
        _ => load_assemblage(ctx, file)?,
    };
    let report = a.validate(&ctx.tol);
    ctx.emit(&serde_json::to_value(&report).expect("report serializes"), || human::validation(&report));
    Ok(if report.is_valid() { exit::OK } else { exit::INVALID_ASSEMBLAGE })
}

fn cmd_edge(ctx: &Ctx, file: &Option<PathBuf>, mix_lhs: Option<f64>, with_diag: bool) -> CmdResult {
    let mut a = load_valid(ctx, file)?;
    if let Some(w) = mix_lhs {
        if !(0.0..=1.0).contains(&w) {
            return Err(Fail::usage("--mix-lhs must lie in [0, 1]"));
        }
        let s = a.scenario().clone();
        let mut ket = nsedge::CVector::zeros(s.trusted_dim());
        ket[0] = nsedge::linalg::c(1.0, 0.0);
        let lhs = Assemblage::deterministic(&s, &s.box_at(0), &Hermitian::ket_projector(&ket))?;
        a = lhs.mix(&a, w)?;
    }
    let report = is_on_edge(&a, &ctx.tol)?;
    let sub = if report.on_edge { None } else { subtract(&a, None, &ctx.tol).ok() };
    let diag = if with_diag { Some(diagnostics(&a, &ctx.tol)?) } else { None };
    let mut value = serde_json::to_value(&report).expect("report serializes");
    if let Some(s) = &sub {
        value["epsilon"] = json!(s.epsilon);
    }
    if let Some(d) = &diag {
        value["diagnostics"] = serde_json::to_value(d).expect("diagnostics serialize");
    }
    ctx.emit(&value, || human::edge(&report, sub.as_ref().map(|s| s.epsilon), diag.as_ref()));
    Ok(if report.on_edge { exit::OK } else { exit::NEGATIVE })
}

fn subtraction_json(a: &Assemblage, r: &nsedge::SubtractionResult) -> Value {
    json!({
        "scenario": a.scenario(),
        "box": io::box_to_json(a.scenario(), &r.lhs_box),
        "epsilon": r.epsilon,
        "vector": io::vector_to_json(&r.vector),
        "tight_position": a.scenario().position_label(&a.scenario().position_at(r.tight_position)),
        "residual": io::assemblage_to_json(&r.residual),
        "renormalized_residual": r.renormalized_residual.as_ref().map(io::assemblage_to_json),
    })
}

fn cmd_subtract(ctx: &Ctx, file: &Option<PathBuf>, box_index: Option<usize>, out: &Option<PathBuf>) -> CmdResult {
    let a = load_valid(ctx, file)?;
    let r = match subtract(&a, box_index, &ctx.tol) {
        Ok(r) => r,
        Err(Error::NothingToSubtract) => {
            let msg = "nothing to subtract: the assemblage is on the edge for the requested box(es)";
            ctx.emit(&json!({ "subtracted": false }), || format!("{msg}\n"));
            return Ok(exit::NEGATIVE);
        }
        Err(e) => return Err(e.into()),
    };
    let back = r.reconstruct()?.max_deviation(&a);
    if back > 1e-9 {
        return Err(Fail { code: exit::ALARM, message: format!("reconstruction differs from the input by {back:e}") });
    }
    let value = subtraction_json(&a, &r);
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    ctx.emit(&value, || human::subtraction(&a, &r));
    Ok(exit::OK)
}

fn cmd_witness(
    ctx: &Ctx,
    file: &Option<PathBuf>,
    epsilon: Option<f64>,
    check_lhs: Option<usize>,
    out: &Option<PathBuf>,
) -> CmdResult {
    let a = load_valid(ctx, file)?;
    let mut cert = match certify(&a, epsilon, &ctx.tol) {
        Ok(c) => c,
        Err(Error::NotOnEdge) => {
            ctx.emit(&json!({ "on_edge": false }), || "not on the edge: no witness\n".to_string());
            return Ok(exit::NEGATIVE);
        }
        Err(e) => return Err(e.into()),
    };
    let mut meta = cert.meta.take().unwrap_or_else(|| json!({}));
    if let Some(name) = &ctx.fixture {
        meta["source"] = json!(format!("fixture:{name}"));
    }
    meta["generator"] = json!(format!("nsedge {}", env!("CARGO_PKG_VERSION")));
    cert.meta = Some(meta);
    let mut value = io::certificate_to_json(&cert);
    let mut code = exit::OK;
    if let Some(n) = check_lhs {
        let src = RandomSource::new(ctx.seed);
        let mut min = f64::INFINITY;
        for i in 0..n {
            let lhs = random_lhs_assemblage(cert.scenario(), &mut src.stream(i as u64))?;
            min = min.min(evaluate(&cert.w, &lhs)?);
        }
        value["check_lhs"] = json!({ "samples": n, "seed": ctx.seed, "min": min });
        if min < -1e-9 {
            code = exit::ALARM;
        }
    }
    if let Some(path) = out {
        write_json(path, &io::certificate_to_json(&cert))?;
    }
    ctx.emit(&value, || human::witness(&cert, value.get("check_lhs")));
    Ok(code)
}

fn cmd_evaluate(ctx: &Ctx, file: &Option<PathBuf>, certificate: &Path) -> CmdResult {
    let cert = io::parse_certificate(&read_text(certificate)?)?;
    let a = load_valid(ctx, file)?;
    let value = evaluate(&cert.w, &a)?;
    ctx.emit(&json!({ "value": value }), || format!("Tr(W Σ) = {}\n", human::sig(value)));
    Ok(exit::OK)
}

fn write_recipe(ctx: &Ctx, r: &nsedge::RealizationRecipe, out: &Option<PathBuf>, assemblage_out: &Option<PathBuf>) -> CmdResult {
    let value = io::recipe_to_json(r);
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    if let Some(path) = assemblage_out {
        write_json(path, &io::assemblage_to_json(&r.assemblage()?))?;
    }
    ctx.emit(&value, || human::recipe(r));
    Ok(exit::OK)
}

fn cmd_realize(ctx: &Ctx, which: &Realize) -> CmdResult {
    let mut rng = RandomSource::new(ctx.seed).stream(0);
    match which {
        Realize::Thm2 { state, max_tries, out, assemblage_out } => {
            let psi = match (state, ctx.fixture.as_deref()) {
                (Some(path), None) => match io::parse_state(&read_text(path)?)? {
                    io::StateInput::Pure { vector, .. } => vector,
                    io::StateInput::Mixed { .. } => return Err(Fail::usage("thm2 needs a pure state (\"vector\")")),
                },
                (None, Some("ghz")) => fixtures::ghz_vector(),
                (None, Some(other)) => return Err(Fail::usage(format!("fixture {other} is not a pure state"))),
                (Some(_), Some(_)) => return Err(Fail::usage("give either a state file or --fixture, not both")),
                (None, None) => return Err(Fail::usage("no state: give a file or --fixture ghz")),
            };
            let r = theorem2_construct(&psi, &mut rng, *max_tries, &ctx.tol)?;
            write_recipe(ctx, &r, out, assemblage_out)
        }
        Realize::Thm4 { state, measurements, random, max_tries, out, assemblage_out } => {
            let (rho, povms) = match (state, random, ctx.fixture.as_deref()) {
                (None, Some(d), None) => random_rank_two_instance(*d, &mut rng),
                (None, None, Some("example1")) => {
                    (fixtures::example1_state(), fixtures::example1_measurements().party(0).to_vec())
                }
                (Some(path), None, None) => {
                    let rho = io::parse_state(&read_text(path)?)?.density();
                    let m = measurements.as_ref().ok_or_else(|| Fail::usage("thm4 with a state file needs --measurements"))?;
                    let set = io::measurements_from_json(&serde_json::from_str(&read_text(m)?).map_err(Error::from)?)?;
                    if set.parties() != 1 {
                        return Err(Fail::usage("--measurements must hold exactly one party (A)"));
                    }
                    (rho, set.party(0).to_vec())
                }
                _ => return Err(Fail::usage("give one of: a state file with --measurements, --random D, --fixture example1")),
            };
            let r = theorem4_construct(&rho, &povms, &mut rng, *max_tries, &ctx.tol)?;
            write_recipe(ctx, &r, out, assemblage_out)
        }
    }
}

fn cmd_scan(ctx: &Ctx, rank: usize, samples: usize, kind: Kind, family: Family, out: &Option<PathBuf>) -> CmdResult {
    if !(3..=8).contains(&rank) {
        return Err(Fail::usage("--rank must be between 3 and 8"));
    }
    if samples == 0 {
        return Err(Fail::usage("--samples must be positive"));
    }
    let cfg = ScanConfig {
        samples,
        rank,
        kind: match kind {
            Kind::Pvm => MeasurementKind::Pvm,
            Kind::Povm => MeasurementKind::Povm,
        },
        family: match family {
            Family::Generic => StateFamily::Generic,
            Family::Structured => StateFamily::Structured,
        },
        seed: ctx.seed,
        first_stream: 0,
    };
    let report = theorem3_scan(&cfg, &ctx.tol)?;
    let value = serde_json::to_value(&report).expect("report serializes");
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    ctx.emit(&value, || human::scan(&report));
    Ok(if report.passed() { exit::OK } else { exit::ALARM })
}

fn cmd_boxes(ctx: &Ctx, file: &Option<PathBuf>, settings: &Option<Vec<usize>>, outcomes: &Option<Vec<usize>>) -> CmdResult {
    let s = if file.is_some() || ctx.fixture.is_some() {
        load_assemblage(ctx, file)?.scenario().clone()
    } else {
        let x = settings.clone().unwrap_or_else(|| vec![2, 2]);
        let a = outcomes.clone().unwrap_or_else(|| vec![2; x.len()]);
        Scenario::new(x, a, 1)?
    };
    let boxes = enumerate_deterministic_boxes_capped(&s, 100_000)?;
    let value = json!({
        "scenario": { "settings": s.settings(), "outcomes": s.outcomes() },
        "count": boxes.len(),
        "boxes": boxes.iter().map(|l| io::box_to_json(&s, l)).collect::<Vec<_>>(),
    });
    ctx.emit(&value, || human::boxes(&s, &boxes));
    Ok(exit::OK)
}

fn run(cli: &Cli) -> CmdResult {
    let ctx = Ctx::from(&cli.global)?;
    match &cli.command {
        Command::Validate { file } => cmd_validate(&ctx, file),
        Command::Edge { file, mix_lhs, diagnostics } => cmd_edge(&ctx, file, *mix_lhs, *diagnostics),
        Command::Subtract { file, box_index, out } => cmd_subtract(&ctx, file, *box_index, out),
        Command::Witness { file, epsilon, check_lhs, out } => cmd_witness(&ctx, file, *epsilon, *check_lhs, out),
        Command::Evaluate { file, certificate } => cmd_evaluate(&ctx, file, certificate),
        Command::Realize { which } => cmd_realize(&ctx, which),
        Command::Scan { rank, samples, kind, family, out } => cmd_scan(&ctx, *rank, *samples, *kind, *family, out),
        Command::Boxes { file, settings, outcomes } => cmd_boxes(&ctx, file, settings, outcomes),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nsedge: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
