//! Subcommand definitions and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use divprog_core::arith::{gcd, is_prime, Interval};
use divprog_core::bilinear::{
    bilinear_sum, bilinear_sum_fast, prime_bound_applies, prime_modulus_bound, unweighted_bound, BilinearInstance,
};
use divprog_core::characters::{congruence_bound_report, fourth_moment, multiplicative_congruence_count, CharacterTable, IntRange};
use divprog_core::kloosterman::{check_weil, KloostermanEvaluator};
use divprog_core::main_term::{error_terms, error_terms_for, exceptional_set_envelope, sum_abs_and_signed, ResidueSet, SetMode};
use divprog_core::tau::{divisor_sum_progressions, divisor_sum_residue};
use divprog_core::voronoi::{default_y, poisson_tau, poisson_tau_twisted, TensorBump, VoronoiExpansion, VoronoiOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{float_value, render_json, write_file, Format, Table};
use crate::sweep::{parse_residue_list, run_theorem_sweep, write_sweep};

#[derive(Debug, Parser)]
#[command(name = "divprog", version, about = "Divisor sums in arithmetic progressions: experiments and checks")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for every random choice; recorded in each report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write reports here instead of standard output.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Format of tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Divisor sums S(X; a, q) for every residue, or one.
    Tau(TauArgs),
    /// S, M and R over a residue set.
    Errors(ErrorsArgs),
    /// Residues with R(X; a, p) >= X^(1/3 - kappa).
    Exceptional(ExceptionalArgs),
    /// Kloosterman sums K_d(m, n).
    Kloosterman(KloostermanArgs),
    /// Bilinear Kloosterman sums and their bound ratios.
    Bilinear(BilinearArgs),
    /// Sharp error terms against the truncated Voronoi dual sum.
    VoronoiCheck(VoronoiArgs),
    /// Both sides of Poisson summation for the divisor function.
    PoissonCheck(PoissonArgs),
    /// Fourth moment of character sums over an interval.
    Moment4(Moment4Args),
    /// Multiplicative congruences x1 x2 = x3 x4 (mod p) in a box.
    Congcount(CongcountArgs),
    /// Run a configured theorem sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub q: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub q: u64,
    /// `B,A` for the interval {B+1, ..., B+A}, or a file of residues.
    #[arg(long)]
    pub set: String,
}

#[derive(Debug, Args)]
pub struct ExceptionalArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub kappa: f64,
}

#[derive(Debug, Args)]
pub struct KloostermanArgs {
    #[arg(long)]
    pub d: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub m: i64,
    #[arg(long, allow_negative_numbers = true, required_unless_present = "batch_a")]
    pub n: Option<i64>,
    /// Inclusive range `LO,HI`: tabulate K_d(m, a) for a in it.
    #[arg(long, conflicts_with = "n")]
    pub batch_a: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlphaWeights {
    /// alpha = 1.
    One,
    /// Independent uniform signs.
    Pm1,
}

#[derive(Debug, Args)]
pub struct BilinearArgs {
    /// Modulus d.
    #[arg(long)]
    pub d: u64,
    /// `B,A`: the interval {B+1, ..., B+A} of residues a.
    #[arg(long = "I", visible_alias = "i")]
    pub i: String,
    /// `M,N`: the interval {M+1, ..., M+N} of n.
    #[arg(long = "J", visible_alias = "j")]
    pub j: String,
    /// Weights nu on J: `pm1` for random signs, or a file with one
    /// `re [im]` pair per line.
    #[arg(long, default_value = "pm1")]
    pub weights: String,
    #[arg(long, value_enum, default_value_t = AlphaWeights::One)]
    pub alpha: AlphaWeights,
    /// Use the transform kernel instead of the direct double sum.
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Args)]
pub struct VoronoiArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub q: u64,
    /// Cutoff parameter; defaults to sqrt(q X^(1+eps)) clamped to [1, X/2].
    #[arg(long)]
    pub y: Option<f64>,
    /// Comma-separated residues, or `all-coprime`.
    #[arg(long, default_value = "all-coprime")]
    pub a: String,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Dual sums run to this multiple of V(d).
    #[arg(long, default_value_t = 1.0)]
    pub truncation_factor: f64,
}

#[derive(Debug, Args)]
pub struct PoissonArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long, allow_negative_numbers = true, required_unless_present = "chi")]
    pub z: Option<i64>,
    /// Index j of the character chi_j(g^k) = e(jk/(p-1)); needs prime q.
    #[arg(long, conflicts_with = "z")]
    pub chi: Option<u64>,
}

#[derive(Debug, Args)]
pub struct Moment4Args {
    #[arg(long)]
    pub p: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub k: i64,
    #[arg(long)]
    pub h: u64,
}

#[derive(Debug, Args)]
pub struct CongcountArgs {
    #[arg(long)]
    pub p: u64,
    /// Inclusive bounds `a1,b1,a2,b2,a3,b3,a4,b4` of the four intervals.
    #[arg(long, allow_hyphen_values = true)]
    pub boxes: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
}

fn parse_pair(s: &str, what: &str) -> Result<(i64, i64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(CliError::Usage(format!("{what}: expected two integers, got {s:?}"))),
        },
        _ => Err(CliError::Usage(format!("{what}: expected two comma-separated integers, got {s:?}"))),
    }
}

fn parse_interval(s: &str, what: &str) -> Result<Interval> {
    match parse_pair(s, what)? {
        (b, a) if b >= 0 && a >= 0 => Ok(Interval::new(b as u64, a as u64)),
        _ => Err(CliError::Usage(format!("{what}: offset and length must be non-negative"))),
    }
}

fn parse_weights_file(path: &Path, len: u64) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("{}:{}: bad weight", path.display(), i + 1)))?;
        match nums.as_slice() {
            [re] => out.push(Complex64::new(*re, 0.0)),
            [re, im] => out.push(Complex64::new(*re, *im)),
            _ => return Err(CliError::Usage(format!("{}:{}: expected `re [im]`", path.display(), i + 1))),
        }
    }
    if out.len() as u64 != len {
        return Err(CliError::Usage(format!(
            "{}: {} weights for an interval of length {len}",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

/// Uniform random signs from a ChaCha8 generator.
pub fn sign_weights(seed: u64, stream: u64, len: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..len)
        .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

fn complex_json(z: Complex64) -> Value {
    json!({"re": float_value(z.re), "im": float_value(z.im)})
}

fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        // A second call in the same process fails harmlessly; the first pool stays.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

enum Output {
    Table(&'static str, Table),
    Json(&'static str, Value),
}

/// Runs one parsed command line, writing reports to `out` unless
/// `--out-dir` is set.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    configure_threads(cli.threads)?;
    let seed = cli.seed;
    let output = match &cli.command {
        Command::Tau(a) => Output::Table("tau", tau(a)?),
        Command::Errors(a) => Output::Table("errors", errors(a)?),
        Command::Exceptional(a) => Output::Table("exceptional", exceptional(a)?),
        Command::Kloosterman(a) => kloosterman(a)?,
        Command::Bilinear(a) => Output::Json("bilinear", bilinear(a, seed)?),
        Command::VoronoiCheck(a) => Output::Table("voronoi-check", voronoi_check(a)?),
        Command::PoissonCheck(a) => Output::Json("poisson-check", poisson_check(a)?),
        Command::Moment4(a) => Output::Json("moment4", moment4(a)?),
        Command::Congcount(a) => Output::Json("congcount", congcount(a)?),
        Command::Sweep(a) => return sweep(a, cli, out),
    };
    let (name, text, ext) = match output {
        Output::Table(name, mut t) => {
            t.meta("command", name);
            t.meta("seed", seed);
            (name, t.render(cli.format), cli.format.extension())
        }
        Output::Json(name, mut v) => {
            if let Value::Object(m) = &mut v {
                m.insert("command".into(), name.into());
                m.insert("seed".into(), seed.into());
            }
            (name, render_json(&v), "json")
        }
    };
    match &cli.out_dir {
        Some(dir) => {
            let path = dir.join(format!("{name}.{ext}"));
            write_file(&path, &text)?;
            writeln!(out, "{}", path.display()).map_err(|e| CliError::io("<stdout>", e))
        }
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn tau(args: &TauArgs) -> Result<Table> {
    let mut t = Table::new(&["a", "S"]);
    match args.a {
        Some(a) => {
            let s = divisor_sum_residue(args.x, args.q, a)?;
            t.push(vec![(a.rem_euclid(args.q as i64)).into(), s.into()]);
        }
        None => {
            let v = divisor_sum_progressions(args.x, args.q)?;
            for (a, &s) in v.sums().iter().enumerate() {
                t.push(vec![a.into(), s.into()]);
            }
            t.meta("total", v.total());
        }
    }
    t.meta("x", args.x);
    t.meta("q", args.q);
    Ok(t)
}

fn errors(args: &ErrorsArgs) -> Result<Table> {
    let set = match parse_pair(&args.set, "--set") {
        Ok((b, a)) if b >= 0 && a >= 0 => ResidueSet::Interval(Interval::new(b as u64, a as u64)),
        Ok(_) => return Err(CliError::Usage("--set: offset and length must be non-negative".into())),
        Err(_) => {
            let path = Path::new(&args.set);
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ResidueSet::List(parse_residue_list(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))?)
        }
    };
    let resolved = set.resolve(args.q, SetMode::Lenient)?;
    let records = error_terms_for(args.x, args.q, &resolved.residues)?;
    let (d_sum, e_sum) = sum_abs_and_signed(&records);
    let mut t = Table::new(&["a", "S", "M", "R"]);
    for r in &records {
        t.push(vec![r.a.into(), r.s.into(), r.m.into(), r.r.into()]);
    }
    t.meta("x", args.x);
    t.meta("q", args.q);
    t.meta("cardinality", resolved.residues.len());
    t.meta("dropped", resolved.dropped);
    t.meta_float("d_sum", d_sum);
    t.meta_float("e_sum", e_sum);
    Ok(t)
}

fn exceptional(args: &ExceptionalArgs) -> Result<Table> {
    if !is_prime(args.p) {
        return Err(divprog_core::Error::NotPrime(args.p).into());
    }
    if !(args.kappa > 0.0 && args.kappa < 1.0 / 3.0) {
        return Err(CliError::Usage("--kappa must lie in (0, 1/3)".into()));
    }
    let threshold = (args.x as f64).powf(1.0 / 3.0 - args.kappa);
    let mut t = Table::new(&["a", "R"]);
    let mut count = 0usize;
    for r in error_terms(args.x, args.p)? {
        if r.a != 0 && r.r >= threshold {
            t.push(vec![r.a.into(), r.r.into()]);
            count += 1;
        }
    }
    t.meta("x", args.x);
    t.meta("p", args.p);
    t.meta_float("kappa", args.kappa);
    t.meta_float("threshold", threshold);
    t.meta("count", count);
    t.meta_float("envelope", exceptional_set_envelope(args.x, args.p, args.kappa));
    Ok(t)
}

fn kloosterman(args: &KloostermanArgs) -> Result<Output> {
    if let Some(range) = &args.batch_a {
        let (lo, hi) = parse_pair(range, "--batch-a")?;
        if hi < lo {
            return Err(CliError::Usage("--batch-a: empty range".into()));
        }
        let ev = KloostermanEvaluator::new(args.d)?;
        let a_values: Vec<i64> = (lo..=hi).collect();
        let mut t = Table::new(&["a", "K"]);
        for (a, k) in a_values.iter().zip(ev.batch_over_a(args.m, &a_values)) {
            t.push(vec![(*a).into(), k.into()]);
        }
        t.meta("d", args.d);
        t.meta("m", args.m);
        return Ok(Output::Table("kloosterman", t));
    }
    let n = args.n.expect("clap requires --n without --batch-a");
    let w = check_weil(args.d, args.m, n)?;
    Ok(Output::Json(
        "kloosterman",
        json!({
            "d": args.d,
            "m": args.m,
            "n": n,
            "value": float_value(w.value),
            "weil_bound": float_value(w.bound),
            "within_bound": w.ok,
        }),
    ))
}

fn bilinear(args: &BilinearArgs, seed: u64) -> Result<Value> {
    let i = parse_interval(&args.i, "--I")?;
    let j = parse_interval(&args.j, "--J")?;
    let nu = if args.weights == "pm1" {
        sign_weights(seed, 1, j.len)
    } else {
        parse_weights_file(Path::new(&args.weights), j.len)?
    };
    let alpha = match args.alpha {
        AlphaWeights::One => None,
        AlphaWeights::Pm1 => Some(sign_weights(seed, 0, i.len)),
    };
    let inst = BilinearInstance::new(args.d, i, j, alpha, nu)?;
    let value = if args.fast { bilinear_sum_fast(&inst)? } else { bilinear_sum(&inst)? };
    let (a, n, d) = (i.len as f64, j.len as f64, args.d as f64);
    let b21 = prime_modulus_bound(a, n, d);
    let b22 = unweighted_bound(a, n, d);
    let b21_applies = is_prime(args.d) && j.offset == 0 && prime_bound_applies(a, n, d);
    let b22_applies = args.alpha == AlphaWeights::One;
    Ok(json!({
        "d": args.d,
        "a_len": i.len,
        "n_len": j.len,
        "method": if args.fast { "fast" } else { "direct" },
        "value_re": float_value(value.re),
        "value_im": float_value(value.im),
        "abs": float_value(value.norm()),
        "bound_21": float_value(b21),
        "bound_22": float_value(b22),
        "bound_21_applies": b21_applies,
        "bound_22_applies": b22_applies,
        "ratios": {
            "bound_21": float_value(value.norm() / b21),
            "bound_22": float_value(value.norm() / b22),
        },
    }))
}

fn voronoi_check(args: &VoronoiArgs) -> Result<Table> {
    let y = args.y.unwrap_or_else(|| default_y(args.x, args.q, args.epsilon));
    let options = VoronoiOptions {
        epsilon: args.epsilon,
        truncation_factor: args.truncation_factor,
        ..VoronoiOptions::default()
    };
    let expansion = VoronoiExpansion::new(args.x, args.q, y, options)?;
    let residues: Vec<i64> = if args.a == "all-coprime" {
        (1..args.q).filter(|&a| gcd(a, args.q) == 1).map(|a| a as i64).collect()
    } else {
        args.a
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("--a: expected a list of integers or all-coprime, got {:?}", args.a)))?
    };
    let mut t = Table::new(&["a", "R_exact", "R_voronoi", "residual", "budget", "R_smoothed"]);
    for a in residues {
        let c = expansion.check(a)?;
        t.push(vec![
            c.a.into(),
            c.r_exact.into(),
            c.r_voronoi.into(),
            c.residual.into(),
            c.budget.into(),
            c.r_smoothed.into(),
        ]);
    }
    let report = expansion.report();
    t.meta("x", args.x);
    t.meta("q", args.q);
    t.meta_float("y", y);
    t.meta_float("epsilon", args.epsilon);
    t.meta_float("truncation_factor", args.truncation_factor);
    t.meta("dual_terms", report.total_terms());
    t.meta_float("quadrature_error_bound", report.quadrature_error_bound());
    Ok(t)
}

fn poisson_check(args: &PoissonArgs) -> Result<Value> {
    let g = TensorBump::standard();
    if let Some(j) = args.chi {
        let table = CharacterTable::new(args.q)?;
        if j == 0 || j >= table.order() {
            return Err(CliError::Usage(format!(
                "--chi: index must lie in [1, {}] for a primitive character",
                table.order() - 1
            )));
        }
        let chi = table.character(j);
        let s = poisson_tau_twisted(&g, &chi)?;
        return Ok(json!({
            "q": args.q,
            "chi": j,
            "lhs": complex_json(s.lhs),
            "rhs": complex_json(s.rhs),
            "abs_difference": float_value((s.lhs - s.rhs).norm()),
            "eta": complex_json(s.eta),
            "eta_abs": float_value(s.eta.norm()),
        }));
    }
    let z = args.z.expect("clap requires --z without --chi");
    let s = poisson_tau(&g, args.q, z)?;
    Ok(json!({
        "q": args.q,
        "z": z,
        "lhs": complex_json(s.lhs),
        "rhs": complex_json(s.rhs),
        "abs_difference": float_value((s.lhs - s.rhs).norm()),
        "tau_h_zero": float_value(s.tau_h_zero),
        "tau_h_zero_axis_sum": float_value(s.tau_h_zero_axis_sum),
        "dual_terms": s.dual_terms,
    }))
}

fn moment4(args: &Moment4Args) -> Result<Value> {
    let moment = fourth_moment(args.p, args.k, args.h)?;
    let h = args.h as f64;
    let ratio = if args.h == 0 { Value::Null } else { float_value(moment / (h * h)) };
    Ok(json!({
        "p": args.p,
        "k": args.k,
        "h": args.h,
        "moment": float_value(moment),
        "h_squared_ratio": ratio,
    }))
}

fn congcount(args: &CongcountArgs) -> Result<Value> {
    let bounds: Vec<i64> = args
        .boxes
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--boxes: expected eight integers, got {:?}", args.boxes)))?;
    let [a1, b1, a2, b2, a3, b3, a4, b4] = bounds[..] else {
        return Err(CliError::Usage(format!("--boxes: expected eight integers, got {}", bounds.len())));
    };
    let boxes = [
        IntRange::inclusive(a1, b1),
        IntRange::inclusive(a2, b2),
        IntRange::inclusive(a3, b3),
        IntRange::inclusive(a4, b4),
    ];
    let count = multiplicative_congruence_count(args.p, &boxes)?;
    let report = congruence_bound_report(count, args.p, &boxes);
    Ok(json!({
        "p": args.p,
        "lengths": boxes.iter().map(|b| b.len).collect::<Vec<_>>(),
        "count": u64::try_from(count).map_or(Value::String(count.to_string()), Value::from),
        "envelope": float_value(report.envelope),
        "bound_ratio": float_value(report.ratio),
    }))
}

fn sweep(args: &SweepArgs, cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cli.seed != 0 {
        cfg.seed = cli.seed;
    }
    let outcome = run_theorem_sweep(&cfg)?;
    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    for path in write_sweep(&outcome, &cfg, &dir, cli.format)? {
        writeln!(out, "{}", path.display()).map_err(|e| CliError::io("<stdout>", e))?;
    }
    if !outcome.breaches.is_empty() {
        return Err(CliError::EnvelopeBreach(outcome.breaches.join("; ")));
    }
    Ok(())
}
