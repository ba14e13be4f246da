//! Argument parsing and dispatch.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdban_core::classes::{
    amalg_pair_check, coordinate_chain, cofinal_probe, gap_probe, orbit_covering_estimate, transitivity_defect,
    ClassGenerator, ClassKind, ChallengeStatus, OrbitSpace, Verdict, AMALGAM_ETA,
};
use fdban_core::constructions::{hilbert_amalgam, pushout_amalgam, HILBERT_ISOMETRY_TOL};
use fdban_core::game::{
    extend_by_line, referee, FiniteDimTarget, GameTranscript, NetSpoiler, RandomLegal, Replay, Strategy,
    REFEREE_TOL,
};
use fdban_core::limits::{LimitSystem, Tail, INSERT_TOL};
use fdban_core::metrics::{
    banach_mazur, best_embedding, embedding_defect, epsilon_net, min_gain_of, operator_norm_of,
    bm_lower::DEFAULT_GAP, defect::STRICT_TOL, opnorm::SAMPLED_TOL,
};
use fdban_core::rational::{parse_rat, rat_to_f64};
use fdban_core::spaces::MapDesc;
use fdban_core::{Error, LinearMap, Matrix, NormedSpace, Rat};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::report::{self, num, RunReport, Status};
use crate::selftest;

#[derive(Parser, Debug)]
#[command(name = "fdban", version, about = "Finite-dimensional Banach space experiments")]
struct Cli {
    /// Seed for every randomized search.
    #[arg(long, env = "FDBAN_SEED", default_value_t = 0, global = true)]
    seed: u64,
    /// Force the polytope/rational path; ℓ_p inputs with p ∉ {1, ∞} are rejected.
    #[arg(long, global = true)]
    exact: bool,
    /// Emit CSV rows instead of JSON (sweep subcommands).
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads for parallel searches.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall time in the report (breaks byte stability).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Norm of a vector.
    Norm {
        space: String,
        /// Comma-separated coordinates; rationals such as 1/3 are exact.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Operator norm and lower gain of a map.
    Opnorm { domain: String, codomain: String, map: String },
    /// Embedding defect of a map.
    Defect { domain: String, codomain: String, map: String },
    /// Banach–Mazur bracket.
    Bm {
        e: String,
        f: String,
        #[arg(long, default_value_t = 400)]
        budget: usize,
    },
    /// Best embedding search, or `--lq Q --lp P` for ℓ_q² → ℓ_p^N.
    Embed(EmbedArgs),
    /// θ-net of Emb_C(E, F).
    Net {
        e: String,
        f: String,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = fdban_core::metrics::DEFAULT_NET_BUDGET)]
        budget: usize,
    },
    /// Pushout (or Euclidean) amalgam of ψ_G φ and ψ_H φ.
    Amalgamate {
        /// JSON file with spaces e, f, g, h and maps phi, psi_g, psi_h.
        file: String,
        #[arg(long)]
        hilbert: bool,
    },
    /// Directed system checks and limit brackets.
    Limit { file: String },
    /// Refereed Banach–Mazur game against a finite-dimensional target.
    Game(GameArgs),
    /// Class oracles and amalgamation probes.
    Class {
        #[command(subcommand)]
        command: ClassCommand,
    },
    /// Covering estimate of tuples modulo the isometry group.
    Orbit {
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// One radius, or a comma-separated sweep.
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Sample Emb_C(ℓ_p^n, X) instead of the ball.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Run the acceptance criteria.
    Selftest {
        /// Only these criteria (comma-separated numbers).
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Args, Debug)]
struct EmbedArgs {
    e: Option<String>,
    f: Option<String>,
    #[arg(long, default_value_t = 400)]
    budget: usize,
    /// Negative verdict when the defect exceeds this.
    #[arg(long)]
    within: Option<f64>,
    #[arg(long)]
    lq: Option<f64>,
    #[arg(long)]
    lp: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    target: f64,
    #[arg(long, default_value_t = 128)]
    nmax: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Opponent {
    Random,
    Replay,
    Net,
}

#[derive(Args, Debug)]
struct GameArgs {
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Class oracle; defaults to the subspaces of the target.
    #[arg(long)]
    class: Option<String>,
    #[arg(long, value_enum, default_value_t = Opponent::Random)]
    opponent: Opponent,
    #[arg(long, default_value_t = REFEREE_TOL)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum ClassCommand {
    /// Search guard triples (F, φ, δ) for E.
    ProbeGap {
        #[arg(long)]
        class: String,
        #[arg(long = "E")]
        e: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Amalgamation check of one triple: file with spaces e, f and map phi.
    Check {
        #[arg(long)]
        class: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 100)]
        budget: usize,
    },
    /// Enumerated members.
    Members {
        #[arg(long)]
        class: String,
    },
    /// Membership oracle verdict.
    Membership {
        #[arg(long)]
        class: String,
        #[arg(long = "E")]
        e: String,
    },
    /// ε-transitivity of Iso(X) on Emb_δ(F, X), F spanned by `--basis`.
    Transitivity {
        #[arg(long)]
        space: String,
        /// Vectors separated by `;`, coordinates by `,`.
        #[arg(long, allow_hyphen_values = true)]
        basis: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.25)]
        theta: f64,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
    },
    /// ⊆_ε probe of a random subspace against coordinate subspaces of the host.
    Cofinal {
        #[arg(long)]
        host: String,
        #[arg(long)]
        e_dim: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

/// Exit code and the bytes destined for standard output and standard error.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

struct Failure {
    status: Status,
    kind: &'static str,
    location: Option<String>,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { status: Status::InputError, kind: "input", location: None, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (status, kind, location) = match &e {
            Error::Budget(_) => (Status::Budget, "budget", None),
            Error::Lp(_) => (Status::Budget, "numeric", None),
            Error::Refused(_) => (Status::Negative, "refused", None),
            Error::Validity(_) => (Status::Negative, "validity", None),
            Error::Parse { location, .. } => (Status::InputError, "parse", Some(location.clone())),
            _ => (Status::InputError, "input", None),
        };
        Failure { status, kind, location, message: e.to_string() }
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Done {
    status: Status,
    result: Value,
    csv: Option<String>,
}

impl Done {
    fn ok(result: Value) -> Self {
        Done { status: Status::Ok, result, csv: None }
    }

    fn verdict(negative: bool, result: Value) -> Self {
        Done { status: if negative { Status::Negative } else { Status::Ok }, result, csv: None }
    }
}

struct Ctx {
    seed: u64,
    exact: bool,
    csv: bool,
    tolerances: Map<String, Value>,
    inputs: Vec<Value>,
}

impl Ctx {
    fn tol(&mut self, name: &str, v: f64) {
        self.tolerances.insert(name.into(), num(v));
    }

    fn read(&mut self, arg: &str) -> Res<Option<String>> {
        let path = std::path::Path::new(arg);
        if !path.is_file() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{arg}: {e}")))?;
        self.inputs.push(json!({ "arg": arg, "sha256": hex::encode(Sha256::digest(text.as_bytes())) }));
        Ok(Some(text))
    }

    fn located(arg: &str, e: Error) -> Failure {
        let mut f = Failure::from(e);
        f.location = Some(match f.location {
            Some(l) => format!("{arg}: {l}"),
            None => arg.to_string(),
        });
        f
    }

    /// A space from a JSON file, inline JSON, or a shorthand `lp:P:N` / `lplq:P:Q:N:K`.
    fn space(&mut self, arg: &str) -> Res<NormedSpace> {
        let s = if let Some(text) = self.read(arg)? {
            NormedSpace::from_json(&text).map_err(|e| Self::located(arg, e))?
        } else if arg.trim_start().starts_with('{') {
            NormedSpace::from_json(arg).map_err(|e| Self::located("inline", e))?
        } else {
            let s = shorthand(arg).ok_or_else(|| {
                Failure::input(format!("{arg}: no such file and not a shorthand (lp:P:N or lplq:P:Q:N:K)"))
            })??;
            self.inputs.push(json!({ "arg": arg, "space": s.to_json() }));
            s
        };
        if self.exact && !s.is_polyhedral() {
            return Err(Failure::input(format!(
                "--exact requires polytope norms, but {} is not polyhedral",
                s.label()
            )));
        }
        Ok(s)
    }

    fn matrix(&mut self, arg: &str) -> Res<Matrix> {
        let text = match self.read(arg)? {
            Some(t) => t,
            None if arg.trim_start().starts_with('{') => arg.to_string(),
            None => return Err(Failure::input(format!("{arg}: no such file"))),
        };
        let m = MapDesc::parse(&text)
            .and_then(|d| d.to_matrix())
            .map_err(|e| Self::located(arg, e))?;
        self.check_exact(&m)?;
        Ok(m)
    }

    fn check_exact(&self, m: &Matrix) -> Res<()> {
        if self.exact && !m.is_exact() {
            return Err(Failure::input("--exact requires rational map entries"));
        }
        Ok(())
    }

    fn json_file(&mut self, arg: &str) -> Res<Map<String, Value>> {
        let text = self.read(arg)?.ok_or_else(|| Failure::input(format!("{arg}: no such file")))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(Failure {
                location: Some(arg.into()),
                ..Failure::input("expected a JSON object")
            }),
            Err(e) => Err(Failure {
                status: Status::InputError,
                kind: "parse",
                location: Some(format!("{arg}: line {} column {}", e.line(), e.column())),
                message: e.to_string(),
            }),
        }
    }

    fn field_space(&self, file: &str, m: &Map<String, Value>, key: &str) -> Res<NormedSpace> {
        let v = m.get(key).ok_or_else(|| missing(file, key))?;
        let s = NormedSpace::from_json(&v.to_string()).map_err(|e| Self::located(&format!("{file}: {key}"), e))?;
        if self.exact && !s.is_polyhedral() {
            return Err(Failure::input(format!("--exact requires polytope norms, but {key} is not polyhedral")));
        }
        Ok(s)
    }

    fn field_matrix(&self, file: &str, m: &Map<String, Value>, key: &str) -> Res<Matrix> {
        let v = m.get(key).ok_or_else(|| missing(file, key))?;
        let mat = MapDesc::parse(&v.to_string())
            .and_then(|d| d.to_matrix())
            .map_err(|e| Self::located(&format!("{file}: {key}"), e))?;
        self.check_exact(&mat)?;
        Ok(mat)
    }
}

fn missing(file: &str, key: &str) -> Failure {
    Failure { location: Some(file.into()), ..Failure::input(format!("missing field {key:?}")) }
}

fn shorthand(s: &str) -> Option<fdban_core::Result<NormedSpace>> {
    let parts: Vec<&str> = s.split(':').collect();
    let p = |t: &str| -> Option<f64> {
        if t == "inf" {
            Some(f64::INFINITY)
        } else {
            t.parse().ok()
        }
    };
    match parts.as_slice() {
        ["lp", a, n] => Some(NormedSpace::lp(p(a)?, n.parse().ok()?)),
        ["l2", n] => Some(NormedSpace::lp(2.0, n.parse().ok()?)),
        ["lplq", a, b, n, k] => Some(NormedSpace::lplq(p(a)?, p(b)?, n.parse().ok()?, k.parse().ok()?)),
        _ => None,
    }
}

fn parse_vector(s: &str) -> Res<(Vec<f64>, Option<Vec<Rat>>)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if parts.is_empty() {
        return Err(Failure::input("empty vector"));
    }
    let exact: Option<Vec<Rat>> = parts.iter().map(|t| parse_rat(t).ok()).collect::<Option<Vec<_>>>().filter(|_| {
        parts.iter().all(|t| !t.contains(['e', 'E']))
    });
    let floats = match &exact {
        Some(v) => v.iter().map(rat_to_f64).collect(),
        None => parts
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Failure::input(format!("bad coordinate {t:?}"))))
            .collect::<Res<Vec<_>>>()?,
    };
    Ok((floats, exact))
}

fn class_of(s: &str) -> Res<ClassGenerator> {
    ClassGenerator::parse(s).map_err(Failure::from)
}

fn class_value(c: &ClassGenerator) -> Value {
    let kind = match &c.kind {
        ClassKind::Lp { .. } => "lp",
        ClassKind::LpLq { .. } => "lplq",
        ClassKind::Age { .. } => "age",
        ClassKind::Explicit { .. } => "explicit",
    };
    json!({ "name": c.name, "kind": kind, "tau": num(c.tau), "max_dim": c.max_dim() })
}

/// Parses `argv` (without the program name), runs the command and renders the report.
pub fn run<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("fdban".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text.into_bytes(), stderr: String::new() }
            } else {
                Outcome { code, stdout: Vec::new(), stderr: text }
            };
        }
    };
    if let Some(k) = cli.jobs {
        // the global pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    let mut ctx = Ctx {
        seed: cli.seed,
        exact: cli.exact,
        csv: cli.csv,
        tolerances: Map::new(),
        inputs: Vec::new(),
    };
    let start = Instant::now();
    let outcome = dispatch(&cli.command, &mut ctx);
    let wall_time = cli.timing.then(|| start.elapsed().as_secs_f64());
    let mut stderr = String::new();
    let (status, result, error, csv) = match outcome {
        Ok(d) => (d.status, d.result, None, d.csv),
        Err(f) => {
            let _ = writeln!(
                stderr,
                "fdban: {}{}",
                f.location.as_ref().map(|l| format!("{l}: ")).unwrap_or_default(),
                f.message
            );
            let err = json!({ "kind": f.kind, "location": f.location, "message": f.message });
            (f.status, Value::Null, Some(err), None)
        }
    };
    let body = match csv {
        Some(c) => c,
        None => RunReport {
            command: args,
            seed: ctx.seed,
            tolerances: ctx.tolerances,
            inputs: ctx.inputs,
            status,
            result,
            error,
            wall_time,
        }
        .render(),
    };
    let stdout = match &cli.out {
        Some(path) => match std::fs::write(path, body.as_bytes()) {
            Ok(()) => Vec::new(),
            Err(e) => {
                let _ = writeln!(stderr, "fdban: cannot write {}: {e}", path.display());
                return Outcome { code: 2, stdout: Vec::new(), stderr };
            }
        },
        None => body.into_bytes(),
    };
    Outcome { code: status.code(), stdout, stderr }
}

fn no_csv(ctx: &Ctx, name: &str) -> Res<()> {
    if ctx.csv {
        return Err(Failure::input(format!(
            "--csv is supported by orbit, game, limit and class probe-gap, not {name}"
        )));
    }
    Ok(())
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Res<Done> {
    match cmd {
        Command::Norm { space, x } => {
            no_csv(ctx, "norm")?;
            let s = ctx.space(space)?;
            let (xf, xr) = parse_vector(x)?;
            if xf.len() != s.dim() {
                return Err(Error::DimensionMismatch { expected: s.dim(), got: xf.len() }.into());
            }
            if ctx.exact && xr.is_none() {
                return Err(Failure::input("--exact requires rational coordinates"));
            }
            ctx.tol("norm_tolerance", s.norm_tolerance());
            let exact = xr.as_ref().and_then(|v| s.norm_exact(v));
            if ctx.exact && exact.is_none() {
                return Err(Failure::input("no exact norm available for this input"));
            }
            Ok(Done::ok(json!({
                "space": report::space(&s),
                "x": xf,
                "norm": num(s.norm(&xf)),
                "exact": report::opt_rat(exact.as_ref()),
            })))
        }
        Command::Opnorm { domain, codomain, map } => {
            no_csv(ctx, "opnorm")?;
            let (e, f) = (ctx.space(domain)?, ctx.space(codomain)?);
            let m = ctx.matrix(map)?;
            LinearMap::new(&e, &f, m.clone())?;
            ctx.tol("sampled_tolerance", SAMPLED_TOL);
            let n = operator_norm_of(&e, &f, &m);
            let g = min_gain_of(&e, &f, &m);
            Ok(Done::ok(json!({ "norm": report::bound(&n), "min_gain": report::bound(&g) })))
        }
        Command::Defect { domain, codomain, map } => {
            no_csv(ctx, "defect")?;
            let (e, f) = (ctx.space(domain)?, ctx.space(codomain)?);
            let m = ctx.matrix(map)?;
            ctx.tol("strict_tolerance", STRICT_TOL);
            let c = embedding_defect(&LinearMap::new(&e, &f, m)?);
            Ok(Done::ok(json!({ "certificate": report::certificate(&c) })))
        }
        Command::Bm { e, f, budget } => {
            no_csv(ctx, "bm")?;
            let (e, f) = (ctx.space(e)?, ctx.space(f)?);
            ctx.tol("lower_bound_gap", DEFAULT_GAP);
            ctx.tol("strict_tolerance", STRICT_TOL);
            let bm = banach_mazur(&e, &f, *budget, ctx.seed)?;
            Ok(Done::ok(json!({
                "e": report::space(&e),
                "f": report::space(&f),
                "budget": budget,
                "upper": num(bm.upper),
                "lower": num(bm.lower),
                "lower_certified": bm.lower_certified,
                "lower_cells": bm.lower_cells,
                "witness": report::certificate(&bm.witness),
            })))
        }
        Command::Embed(a) => embed(a, ctx),
        Command::Net { e, f, c, theta, budget } => {
            no_csv(ctx, "net")?;
            let (e, f) = (ctx.space(e)?, ctx.space(f)?);
            let net = epsilon_net(&e, &f, *c, *theta, *budget)?;
            let worst = net.members.iter().map(|m| m.defect).fold(0.0, f64::max);
            Ok(Done::ok(json!({
                "size": net.members.len(),
                "covering_radius": num(net.covering_radius),
                "grid_radius": num(net.grid_radius),
                "pitch": num(net.pitch),
                "grid_points": net.grid_points,
                "candidates": net.candidates,
                "slack_defect": num(net.slack_defect),
                "largest_member_defect": num(worst),
                "members": net.members.iter().map(|m| json!({
                    "defect": num(m.defect),
                    "matrix": report::matrix(m.map.matrix()),
                })).collect::<Vec<_>>(),
            })))
        }
        Command::Amalgamate { file, hilbert } => {
            no_csv(ctx, "amalgamate")?;
            let m = ctx.json_file(file)?;
            let sp: Vec<NormedSpace> = ["e", "f", "g", "h"]
                .iter()
                .map(|k| ctx.field_space(file, &m, k))
                .collect::<Res<_>>()?;
            let phi = LinearMap::new(&sp[0], &sp[1], ctx.field_matrix(file, &m, "phi")?)?;
            let psi_g = LinearMap::new(&sp[1], &sp[2], ctx.field_matrix(file, &m, "psi_g")?)?;
            let psi_h = LinearMap::new(&sp[1], &sp[3], ctx.field_matrix(file, &m, "psi_h")?)?;
            let a = if *hilbert {
                ctx.tol("hilbert_isometry_tolerance", HILBERT_ISOMETRY_TOL);
                hilbert_amalgam(&phi, &psi_g, &psi_h)?
            } else {
                pushout_amalgam(&phi, &psi_g, &psi_h)?
            };
            Ok(Done::ok(json!({
                "construction": if *hilbert { "euclidean" } else { "pushout" },
                "k": report::space(&a.k),
                "discrepancy": num(a.discrepancy),
                "discrepancy_exact": report::opt_rat(a.discrepancy_exact.as_ref()),
                "exact_isometric": a.is_exact_isometric(),
                "psi_defects": [num(embedding_defect(&psi_g).defect), num(embedding_defect(&psi_h).defect)],
                "iota_g": report::certificate(&a.iota_g_cert),
                "iota_h": report::certificate(&a.iota_h_cert),
            })))
        }
        Command::Limit { file } => limit(file, ctx),
        Command::Game(a) => game(a, ctx),
        Command::Class { command } => class(command, ctx),
        Command::Orbit { space, n, eps, samples, c } => {
            let x = OrbitSpace::parse(space)?;
            let radii: Vec<f64> = eps
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::input(format!("bad radius {t:?}"))))
                .collect::<Res<_>>()?;
            ctx.inputs.push(json!({ "arg": space }));
            let mut rows = Vec::new();
            let mut csv = String::from("space,n,c,eps,samples,count,group,radius,sampling_error\n");
            for &r in &radii {
                let est = orbit_covering_estimate(x, *n, *c, r, *samples, ctx.seed)?;
                let _ = writeln!(
                    csv,
                    "{space},{n},{},{r},{samples},{},{},{},{}",
                    c.map_or(String::new(), |v| v.to_string()),
                    est.count,
                    est.group,
                    est.radius,
                    est.sampling_error
                );
                rows.push(json!({
                    "eps": num(r),
                    "count": est.count,
                    "samples": est.samples,
                    "group": est.group,
                    "radius": num(est.radius),
                    "sampling_error": num(est.sampling_error),
                }));
            }
            let result = json!({ "space": space, "n": n, "c": c.map(num), "estimates": rows });
            Ok(Done { status: Status::Ok, result, csv: ctx.csv.then_some(csv) })
        }
        Command::Selftest { only } => {
            no_csv(ctx, "selftest")?;
            let ids: Option<Vec<u32>> = match only {
                Some(s) => Some(
                    s.split(',')
                        .map(|t| t.trim().parse().map_err(|_| Failure::input(format!("bad criterion {t:?}"))))
                        .collect::<Res<_>>()?,
                ),
                None => None,
            };
            let results = selftest::run_all(ids.as_deref(), &|argv: &[String]| {
                let o = run(argv.iter().cloned());
                (o.code, o.stdout)
            });
            for r in &results {
                eprintln!("{}", r.line());
            }
            let failed = results.iter().any(|r| !r.passed);
            Ok(Done::verdict(
                failed,
                json!({ "criteria": results.iter().map(|r| json!({
                    "id": r.id,
                    "name": r.name,
                    "passed": r.passed,
                    "detail": r.detail,
                })).collect::<Vec<_>>() }),
            ))
        }
    }
}

fn embed(a: &EmbedArgs, ctx: &mut Ctx) -> Res<Done> {
    no_csv(ctx, "embed")?;
    if let (Some(q), Some(p)) = (a.lq, a.lp) {
        if a.e.is_some() || a.f.is_some() {
            return Err(Failure::input("give either two spaces or --lq/--lp, not both"));
        }
        if ctx.exact {
            return Err(Failure::input("--exact is not available for ℓ_q² → ℓ_p^N embeddings"));
        }
        ctx.tol("target", a.target);
        let r = fdban_core::classes::lq_into_lpn(q, p, a.target, a.nmax, ctx.seed)?;
        return Ok(Done::verdict(
            !r.met,
            json!({
                "q": num(q),
                "p": num(p),
                "n": r.n,
                "nmax": a.nmax,
                "target": num(r.target),
                "met": r.met,
                "rounds": r.rounds.iter().map(|(d, v)| json!({ "directions": d, "defect": num(*v) })).collect::<Vec<_>>(),
                "certificate": report::certificate(&r.certificate),
            }),
        ));
    }
    let (Some(e), Some(f)) = (&a.e, &a.f) else {
        return Err(Failure::input("embed needs two spaces, or --lq and --lp"));
    };
    let (e, f) = (ctx.space(e)?, ctx.space(f)?);
    ctx.tol("strict_tolerance", STRICT_TOL);
    let c = best_embedding(&e, &f, a.budget, ctx.seed)?;
    let negative = a.within.is_some_and(|w| c.defect > w);
    Ok(Done::verdict(
        negative,
        json!({
            "e": report::space(&e),
            "f": report::space(&f),
            "budget": a.budget,
            "within": a.within.map(num),
            "certificate": report::certificate(&c),
        }),
    ))
}

fn limit(file: &str, ctx: &mut Ctx) -> Res<Done> {
    let m = ctx.json_file(file)?;
    let spaces_v = m.get("spaces").and_then(Value::as_array).ok_or_else(|| missing(file, "spaces"))?;
    let maps_v = m.get("maps").and_then(Value::as_array).ok_or_else(|| missing(file, "maps"))?;
    let eps_v = m.get("epsilons").and_then(Value::as_array).ok_or_else(|| missing(file, "epsilons"))?;
    if spaces_v.is_empty() || maps_v.len() + 1 != spaces_v.len() || eps_v.len() != maps_v.len() {
        return Err(Failure {
            location: Some(file.into()),
            ..Failure::input("need n spaces, n − 1 maps and n − 1 epsilons")
        });
    }
    let mut spaces = Vec::new();
    for (i, v) in spaces_v.iter().enumerate() {
        let s = NormedSpace::from_json(&v.to_string()).map_err(|e| Ctx::located(&format!("{file}: spaces[{i}]"), e))?;
        if ctx.exact && !s.is_polyhedral() {
            return Err(Failure::input(format!("--exact requires polytope norms (spaces[{i}])")));
        }
        spaces.push(s);
    }
    ctx.tol("insert_tolerance", INSERT_TOL);
    let mut sys = LimitSystem::new(spaces[0].clone());
    let mut pushed = Vec::new();
    for (i, v) in maps_v.iter().enumerate() {
        let mat = MapDesc::parse(&v.to_string())
            .and_then(|d| d.to_matrix())
            .map_err(|e| Ctx::located(&format!("{file}: maps[{i}]"), e))?;
        ctx.check_exact(&mat)?;
        let eps = eps_v[i]
            .as_f64()
            .ok_or_else(|| Failure { location: Some(format!("{file}: epsilons[{i}]")), ..Failure::input("not a number") })?;
        let cert = sys.push(LinearMap::new(&spaces[i], &spaces[i + 1], mat)?, eps)?;
        pushed.push(json!({ "stage": i + 1, "epsilon": num(eps), "defect": num(cert.defect), "exactness": format!("{:?}", cert.exactness) }));
    }
    let tail = match m.get("tail") {
        None => Tail::Unknown,
        Some(t) => match (t.get("kind").and_then(Value::as_str), t.get("ratio").and_then(Value::as_f64), t.get("bound").and_then(Value::as_f64)) {
            (Some("finite"), _, _) => Tail::Finite,
            (Some("geometric"), Some(r), _) => Tail::Geometric { ratio: r },
            (Some("beyond"), _, Some(b)) => Tail::Beyond(b),
            _ => {
                return Err(Failure {
                    location: Some(format!("{file}: tail")),
                    ..Failure::input("expected {\"kind\":\"finite\"}, {\"kind\":\"geometric\",\"ratio\":r} or {\"kind\":\"beyond\",\"bound\":b}")
                })
            }
        },
    };
    sys.set_tail(tail)?;
    let h = sys.len();
    let mut checks = Vec::new();
    let mut all_hold = true;
    for n in 1..=h {
        for k in n..=h {
            let c = sys.compose_checked(n, k)?;
            all_hold &= c.holds();
            checks.push(json!({ "n": n, "k": k, "defect": num(c.certificate.defect), "bound": num(c.bound), "holds": c.holds() }));
        }
    }
    let tails: Vec<Value> = (1..=h).map(|n| sys.tail(n).map(num).unwrap_or(Value::Null)).collect();
    let mut brackets = Vec::new();
    let mut csv = String::from("stage,vector,k,value,lo,hi,tail\n");
    if let Some(vs) = m.get("vectors").and_then(Value::as_array) {
        for (vi, v) in vs.iter().enumerate() {
            let stage = v.get("stage").and_then(Value::as_u64).unwrap_or(1) as usize;
            let x: Vec<f64> = v
                .get("x")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .ok_or_else(|| Failure { location: Some(format!("{file}: vectors[{vi}]")), ..Failure::input("missing x") })?;
            let mut rows = Vec::new();
            for k in stage.max(1)..=h {
                let b = sys.limit_norm(stage, &x, k)?;
                let _ = writeln!(csv, "{stage},{vi},{k},{},{},{},{}", b.value, b.lo, b.hi, b.tail);
                rows.push(json!({ "k": k, "value": num(b.value), "lo": num(b.lo), "hi": num(b.hi), "tail": num(b.tail) }));
            }
            brackets.push(json!({ "stage": stage, "x": x, "brackets": rows }));
        }
    }
    let finalized = m
        .get("finalize")
        .and_then(Value::as_f64)
        .map(|tol| match sys.finalize_bounded(tol) {
            Ok(f) => json!({ "stage": f.stage, "space": report::space(&f.space), "certificate": num(f.certificate) }),
            Err(e) => json!({ "refused": e.to_string() }),
        });
    let result = json!({
        "stages": h,
        "pushed": pushed,
        "tails": tails,
        "compositions": checks,
        "composition_law_holds": all_hold,
        "vectors": brackets,
        "finalized": finalized,
    });
    Ok(Done { status: if all_hold { Status::Ok } else { Status::Negative }, result, csv: ctx.csv.then_some(csv) })
}

fn transcript_value(t: &GameTranscript) -> Value {
    let moves: Vec<Value> = t
        .moves
        .iter()
        .map(|m| {
            json!({
                "stage": m.stage,
                "player": format!("{:?}", m.by),
                "space": m.space.label(),
                "dim": m.space.dim(),
                "epsilon": num(m.epsilon),
                "map_defect": m.map_defect.map(num),
                "class_defect": num(m.class_defect),
                "note": m.note,
            })
        })
        .collect();
    let compositions = t.system.as_ref().filter(|_| t.legal).map(|s| {
        (1..=t.horizon)
            .filter_map(|n| s.compose_checked(n, t.horizon).ok())
            .map(|c| json!({ "defect": num(c.certificate.defect), "bound": num(c.bound), "holds": c.holds() }))
            .collect::<Vec<_>>()
    });
    json!({
        "class": t.class,
        "horizon": t.horizon,
        "legal": t.legal,
        "forfeit": t.forfeit.as_ref().map(|f| json!({
            "player": format!("{:?}", f.player),
            "stage": f.stage,
            "reason": f.reason,
            "numerical": f.numerical,
        })),
        "moves": moves,
        "horizon_space": t.horizon_space.as_ref().map(report::space),
        "declared_tail": num(t.declared_tail),
        "tail_certificate": num(t.tail_certificate),
        "target_estimate": t.target_estimate.as_ref().map(|e| json!({
            "target": e.target,
            "stage_distance": num(e.stage_distance),
            "upper": num(e.upper),
        })),
        "compositions_to_horizon": compositions,
    })
}

fn game(a: &GameArgs, ctx: &mut Ctx) -> Res<Done> {
    let target = ctx.space(&a.target)?;
    let class = match &a.class {
        Some(c) => class_of(c)?,
        None => ClassGenerator::age(&target),
    };
    ctx.tol("referee_tolerance", a.tol);
    ctx.tol("class_tau", class.tau);
    let mut second = FiniteDimTarget::new(&target, a.eps)?;
    let mut first: Box<dyn Strategy> = match a.opponent {
        Opponent::Random => Box::new(RandomLegal::new(a.eps, ctx.seed)),
        Opponent::Replay => Box::new(Replay { opening: class.enumerate()[0].clone(), eps1: a.eps }),
        Opponent::Net => Box::new(NetSpoiler::new(&class.enumerate()[0], a.eps, extend_by_line())),
    };
    let t = referee(first.as_mut(), &mut second, a.horizon, &class, a.tol, ctx.seed, Some(&target))?;
    let mut csv = String::from("stage,player,space,dim,epsilon,map_defect,class_defect\n");
    for m in &t.moves {
        let _ = writeln!(
            csv,
            "{},{:?},{},{},{},{},{}",
            m.stage,
            m.by,
            m.space.label().replace(',', ";"),
            m.space.dim(),
            m.epsilon,
            m.map_defect.map_or(String::new(), |d| d.to_string()),
            m.class_defect
        );
    }
    let mut result = transcript_value(&t);
    result["players"] = json!([first.name(), second.name()]);
    Ok(Done { status: if t.legal { Status::Ok } else { Status::Negative }, result, csv: ctx.csv.then_some(csv) })
}

fn parse_basis(s: &str) -> Res<Vec<Vec<Rat>>> {
    s.split(';')
        .map(|v| match parse_vector(v)? {
            (_, Some(r)) => Ok(r),
            _ => Err(Failure::input(format!("basis vector {v:?} must be rational"))),
        })
        .collect()
}

fn class(cmd: &ClassCommand, ctx: &mut Ctx) -> Res<Done> {
    match cmd {
        ClassCommand::ProbeGap { class, e, eps, budget } => {
            let c = class_of(class)?;
            let e = ctx.space(e)?;
            ctx.tol("class_tau", c.tau);
            ctx.tol("eta", AMALGAM_ETA);
            let r = gap_probe(&c, &e, *eps, *budget, ctx.seed)?;
            let mut csv = String::from("f,phi_defect,delta,falsified,amalgamated,challenges,max_discrepancy\n");
            let cands: Vec<Value> = r
                .candidates
                .iter()
                .map(|g| {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{}",
                        g.f.replace(',', ";"),
                        g.phi_defect,
                        g.delta,
                        g.falsified,
                        g.amalgamated,
                        g.challenges,
                        g.max_discrepancy
                    );
                    json!({
                        "f": g.f,
                        "phi_defect": num(g.phi_defect),
                        "delta": num(g.delta),
                        "falsified": g.falsified,
                        "amalgamated": g.amalgamated,
                        "challenges": g.challenges,
                        "max_discrepancy": num(g.max_discrepancy),
                    })
                })
                .collect();
            let result = json!({
                "class": class_value(&c),
                "e": report::space(&e),
                "epsilon": num(r.epsilon),
                "candidates": cands,
                "best": r.best,
                "verdict": if r.best.is_some() { "no-counterexample-found" } else { "no-guard-found" },
            });
            Ok(Done { status: if r.best.is_some() { Status::Ok } else { Status::Negative }, result, csv: ctx.csv.then_some(csv) })
        }
        ClassCommand::Check { class, phi, eps, delta, budget } => {
            no_csv(ctx, "class check")?;
            let c = class_of(class)?;
            let m = ctx.json_file(phi)?;
            let e = ctx.field_space(phi, &m, "e")?;
            let f = ctx.field_space(phi, &m, "f")?;
            let map = LinearMap::new(&e, &f, ctx.field_matrix(phi, &m, "phi")?)?;
            ctx.tol("class_tau", c.tau);
            ctx.tol("eta", AMALGAM_ETA);
            let v = amalg_pair_check(&c, &map, *eps, *delta, *budget, ctx.seed)?;
            let stats = v.stats().map(|s| {
                json!({
                    "challenges": s.challenges,
                    "amalgamated": s.amalgamated,
                    "inconclusive": s.inconclusive,
                    "resisted": s.outcomes.iter().filter(|o| o.status == ChallengeStatus::Resisted).count(),
                    "max_discrepancy": num(s.max_discrepancy),
                    "outcomes": s.outcomes.iter().map(|o| json!({
                        "index": o.index,
                        "kind": o.kind,
                        "g": o.g,
                        "h": o.h,
                        "status": format!("{:?}", o.status),
                        "best_discrepancy": num(o.best_discrepancy),
                        "note": o.note,
                    })).collect::<Vec<_>>(),
                })
            });
            let (verdict, cx) = match &v {
                Verdict::Falsified(cx) => (
                    "falsified",
                    Some(json!({
                        "reason": cx.reason,
                        "challenge": cx.challenge.as_ref().map(|(i, _)| i),
                        "value": num(cx.value),
                        "epsilon": num(cx.epsilon),
                        "margin": num(cx.margin()),
                    })),
                ),
                Verdict::NoCounterexampleFound(_) => ("no-counterexample-found", None),
            };
            Ok(Done::verdict(
                v.is_falsified(),
                json!({ "class": class_value(&c), "verdict": verdict, "counterexample": cx, "stats": stats }),
            ))
        }
        ClassCommand::Members { class } => {
            no_csv(ctx, "class members")?;
            let c = class_of(class)?;
            let members: Vec<Value> = c.enumerate().iter().map(report::space).collect();
            Ok(Done::ok(json!({ "class": class_value(&c), "members": members })))
        }
        ClassCommand::Membership { class, e } => {
            no_csv(ctx, "class membership")?;
            let c = class_of(class)?;
            let e = ctx.space(e)?;
            ctx.tol("class_tau", c.tau);
            let m = c.membership(&e)?;
            Ok(Done::verdict(
                !m.accepted,
                json!({
                    "class": class_value(&c),
                    "e": report::space(&e),
                    "defect": num(m.defect),
                    "accepted": m.accepted,
                    "tau": num(m.tau),
                    "nearest": m.nearest,
                }),
            ))
        }
        ClassCommand::Transitivity { space, basis, delta, theta, budget } => {
            no_csv(ctx, "class transitivity")?;
            let x = ctx.space(space)?;
            let b = parse_basis(basis)?;
            let r = transitivity_defect(&x, &b, *delta, *theta, *budget)?;
            Ok(Done::ok(json!({
                "space": report::space(&x),
                "delta": num(*delta),
                "theta": num(*theta),
                "value": num(r.value),
                "net_value": num(r.net_value),
                "slack": num(r.slack),
                "net_size": r.net_size,
                "group_order": r.group_order,
            })))
        }
        ClassCommand::Cofinal { host, e_dim, eps, samples } => {
            no_csv(ctx, "class cofinal")?;
            let h = ctx.space(host)?;
            let chain = coordinate_chain("span", h.dim());
            let r = cofinal_probe(&h, *e_dim, &chain, *eps, *samples, ctx.seed)?;
            Ok(Done::ok(json!({
                "host": r.host,
                "relation": r.relation,
                "epsilon": num(r.epsilon),
                "samples": r.samples,
                "e_basis": r.e_basis,
                "rows": r.rows.iter().map(|w| json!({
                    "label": w.label,
                    "dim": w.dim,
                    "slack": num(w.slack),
                    "within": w.within,
                    "emb_defect": num(w.emb_defect),
                })).collect::<Vec<_>>(),
                "best": r.best,
            })))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(o: &Outcome) -> Value {
        serde_json::from_slice(&o.stdout).unwrap()
    }

    #[test]
    fn shorthand_spaces() {
        assert_eq!(shorthand("lp:1:3").unwrap().unwrap().dim(), 3);
        assert_eq!(shorthand("lplq:1:2:2:3").unwrap().unwrap().dim(), 6);
        assert!(shorthand("nonsense").is_none());
    }

    #[test]
    fn norm_is_exact_for_rationals() {
        let o = run(["norm", "lp:1:2", "--x", "1/2,-1/3"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(value(&o)["result"]["exact"], json!("5/6"));
    }

    #[test]
    fn exact_flag_rejects_euclidean_input() {
        let o = run(["--exact", "norm", "lp:2:2", "--x", "1,0"]);
        assert_eq!(o.code, 2);
        assert!(o.stderr.contains("polyhedral"));
    }

    #[test]
    fn malformed_file_reports_location() {
        let dir = std::env::temp_dir().join(format!("fdban-cmd-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.json");
        std::fs::write(&p, "{\"kind\":\"lp\",\n \"p\": }").unwrap();
        let o = run(["norm", p.to_str().unwrap(), "--x", "1"]);
        assert_eq!(o.code, 2);
        assert!(o.stderr.contains("line 2"), "{}", o.stderr);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn refused_embedding_is_negative() {
        let o = run(["embed", "--lq", "4", "--lp", "1", "--target", "0.1"]);
        assert_eq!(o.code, 1);
        assert!(o.stderr.contains("q = p, q = 2 or p < q < 2"));
    }

    #[test]
    fn budget_exhaustion_exits_three() {
        let o = run(["net", "lp:1:2", "lp:1:3", "--c", "0.5", "--theta", "0.001", "--budget", "10"]);
        assert_eq!(o.code, 3, "{}", o.stderr);
        assert_eq!(value(&o)["status"], json!("budget"));
    }

    #[test]
    fn csv_only_for_sweeps() {
        assert_eq!(run(["--csv", "bm", "lp:1:2", "lp:inf:2"]).code, 2);
        let o = run(["--csv", "orbit", "--space", "l2:3", "--eps", "0.5,1", "--samples", "200"]);
        assert_eq!(o.code, 0);
        assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
    }

    #[test]
    fn seed_flag_forms_agree() {
        let a = run(["--seed", "5", "bm", "lp:1:2", "lp:2:2", "--budget", "50"]);
        let b = run(["--seed=5", "bm", "lp:1:2", "lp:2:2", "--budget", "50"]);
        assert_eq!(value(&a)["seed"], json!(5));
        assert_eq!(value(&a)["result"], value(&b)["result"]);
    }
}
