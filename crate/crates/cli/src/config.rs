//! TOML experiment configuration.

use std::ops::Range;
use std::path::{Path, PathBuf};

use divprog_core::arith::is_prime;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, Result};
use crate::theorems::YPolicy;

/// Which measured quantity a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// `D(X; I, p)` over intervals modulo primes.
    IntervalPrime,
    /// `|E(X; I, q)|` over intervals, any modulus.
    IntervalAny,
    /// `D(X; A, p)` over random (or listed) sets modulo primes.
    ArbitrarySet,
    /// `#A_kappa(X, p)` against its envelope.
    ExceptionalSet,
    /// Sharp error terms against the truncated Voronoi dual sum.
    Voronoi,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::IntervalPrime => "interval-prime",
            ExperimentKind::IntervalAny => "interval-any",
            ExperimentKind::ArbitrarySet => "arbitrary-set",
            ExperimentKind::ExceptionalSet => "exceptional-set",
            ExperimentKind::Voronoi => "voronoi",
        }
    }

    fn needs_prime(self) -> bool {
        matches!(
            self,
            ExperimentKind::IntervalPrime | ExperimentKind::ArbitrarySet | ExperimentKind::ExceptionalSet
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub epsilon: f64,
    pub output: String,
    pub x: Vec<u64>,
    pub q: Vec<u64>,
    pub sets: SetSpec,
    pub kappa: Vec<f64>,
    pub residues: Option<Vec<u64>>,
    pub truncation_factor: f64,
    /// Random sets drawn per grid point in arbitrary-set sweeps.
    pub samples: u64,
    pub y: YPolicy,
    pub thresholds: Option<Thresholds>,
    /// Directory that relative paths in the file resolve against.
    pub base_dir: PathBuf,
}

/// How the residue sets of a sweep are described.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    /// No set parameter (exceptional-set and voronoi sweeps).
    None,
    /// Interval or random-set sizes `A` with interval offsets `B`.
    Sizes { a: Vec<u64>, b: Vec<u64> },
    /// `A = round(q^e)` for each listed exponent `e`.
    Exponents { exponents: Vec<f64>, b: Vec<u64> },
    /// Explicit residue lists read from files.
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Ceiling on every in-regime ratio.
    pub max_ratio: Option<f64>,
    /// Ceiling on max/min of the in-regime ratios.
    pub max_variation: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    grid: RawGrid,
    y: Option<Spanned<YPolicy>>,
    thresholds: Option<Spanned<Thresholds>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    id: Spanned<String>,
    kind: Spanned<ExperimentKind>,
    seed: Option<u64>,
    epsilon: Option<Spanned<f64>>,
    output: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x: Spanned<Vec<u64>>,
    q: Spanned<Vec<u64>>,
    a: Option<Spanned<Vec<u64>>>,
    a_exponent: Option<Spanned<Vec<f64>>>,
    b: Option<Spanned<Vec<u64>>>,
    sets: Option<Spanned<Vec<String>>>,
    kappa: Option<Spanned<Vec<f64>>>,
    residues: Option<Spanned<Vec<u64>>>,
    truncation_factor: Option<Spanned<f64>>,
    samples: Option<Spanned<u64>>,
}

struct Diagnostics<'a> {
    src: &'a str,
    path: &'a Path,
}

impl Diagnostics<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.src.len());
        self.src[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Range<usize>, message: impl Into<String>) -> CliError {
        CliError::ConfigInvalid {
            path: self.path.to_path_buf(),
            line: self.line(span),
            message: message.into(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&src, path)
    }

    /// Parses and validates `src`; `path` is used for diagnostics and for
    /// resolving set files.
    pub fn parse(src: &str, path: &Path) -> Result<Self> {
        let diag = Diagnostics { src, path };
        let raw: RawConfig = toml::from_str(src).map_err(|e| {
            let span = e.span().unwrap_or(0..0);
            diag.err(span, e.message().trim().to_string())
        })?;
        let exp = raw.experiment;
        let grid = raw.grid;
        let kind = *exp.kind.get_ref();

        let id = exp.id.get_ref().trim().to_string();
        if id.is_empty() {
            return Err(diag.err(exp.id.span(), "experiment id must not be empty"));
        }
        let epsilon = match &exp.epsilon {
            Some(e) if !(e.get_ref().is_finite() && *e.get_ref() > 0.0 && *e.get_ref() < 1.0) => {
                return Err(diag.err(e.span(), "epsilon must lie in (0, 1)"));
            }
            Some(e) => *e.get_ref(),
            None => 0.05,
        };
        let output = match &exp.output {
            Some(o) if o.get_ref().is_empty() || o.get_ref().contains(['/', '\\']) => {
                return Err(diag.err(o.span(), "output must be a plain file stem"));
            }
            Some(o) => o.get_ref().clone(),
            None => id.clone(),
        };

        let x = nonempty(&diag, &grid.x, "grid.x")?;
        let q = nonempty(&diag, &grid.q, "grid.q")?;
        if let Some(&bad) = x.iter().find(|&&v| v == 0) {
            return Err(diag.err(grid.x.span(), format!("X = {bad} must be positive")));
        }
        if let Some(&bad) = q.iter().find(|&&v| v < 2) {
            return Err(diag.err(grid.q.span(), format!("modulus {bad} must be at least 2")));
        }
        if kind.needs_prime() {
            if let Some(&bad) = q.iter().find(|&&v| !is_prime(v)) {
                return Err(diag.err(
                    grid.q.span(),
                    format!("{} sweeps need prime moduli; {bad} is not prime", kind.name()),
                ));
            }
        }
        let min_x = *x.iter().min().expect("nonempty");
        if let Some(&bad) = q.iter().find(|&&v| v > min_x) {
            return Err(diag.err(
                grid.q.span(),
                format!("every (X, q) pair needs q <= X; q = {bad} exceeds X = {min_x}"),
            ));
        }

        let b = match &grid.b {
            Some(b) => nonempty(&diag, b, "grid.b")?,
            None => vec![0],
        };
        let sets = match (&grid.a, &grid.a_exponent, &grid.sets) {
            (Some(a), None, None) => {
                let a = nonempty(&diag, a, "grid.a")?;
                if a.contains(&0) {
                    return Err(diag.err(grid.a.as_ref().unwrap().span(), "set sizes must be positive"));
                }
                SetSpec::Sizes { a, b }
            }
            (None, Some(e), None) => {
                let exponents = nonempty(&diag, e, "grid.a_exponent")?;
                if exponents.iter().any(|v| !(v.is_finite() && *v >= 0.0 && *v <= 1.0)) {
                    return Err(diag.err(e.span(), "set-size exponents must lie in [0, 1]"));
                }
                SetSpec::Exponents { exponents, b }
            }
            (None, None, Some(s)) => {
                let files = nonempty(&diag, s, "grid.sets")?;
                SetSpec::Files(files.into_iter().map(PathBuf::from).collect())
            }
            (None, None, None) => SetSpec::None,
            _ => {
                let span = [
                    grid.a.as_ref().map(|v| v.span()),
                    grid.a_exponent.as_ref().map(|v| v.span()),
                    grid.sets.as_ref().map(|v| v.span()),
                ]
                .into_iter()
                .flatten()
                .nth(1)
                .expect("two set descriptors present");
                return Err(diag.err(span, "give only one of grid.a, grid.a_exponent, grid.sets"));
            }
        };
        let kappa = match &grid.kappa {
            Some(k) => {
                let k_vals = nonempty(&diag, k, "grid.kappa")?;
                if k_vals.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0 / 3.0)) {
                    return Err(diag.err(k.span(), "kappa must lie in (0, 1/3)"));
                }
                k_vals
            }
            None => Vec::new(),
        };
        let residues = grid.residues.as_ref().map(|r| r.get_ref().clone());
        let truncation_factor = match &grid.truncation_factor {
            Some(t) if !(t.get_ref().is_finite() && *t.get_ref() >= 1.0) => {
                return Err(diag.err(t.span(), "truncation_factor must be at least 1"));
            }
            Some(t) => *t.get_ref(),
            None => 1.0,
        };

        let samples = match &grid.samples {
            Some(n) if kind != ExperimentKind::ArbitrarySet => {
                return Err(diag.err(n.span(), "grid.samples is only valid for arbitrary-set sweeps"));
            }
            Some(n) if *n.get_ref() == 0 || *n.get_ref() > 1 << 16 => {
                return Err(diag.err(n.span(), "grid.samples must lie in [1, 65536]"));
            }
            Some(n) => *n.get_ref(),
            None => 1,
        };

        let needs_sets = matches!(
            kind,
            ExperimentKind::IntervalPrime | ExperimentKind::IntervalAny | ExperimentKind::ArbitrarySet
        );
        let kind_span = exp.kind.span();
        if needs_sets && sets == SetSpec::None {
            return Err(diag.err(
                kind_span,
                format!("{} sweeps need grid.a, grid.a_exponent or grid.sets", kind.name()),
            ));
        }
        if !needs_sets && sets != SetSpec::None {
            return Err(diag.err(kind_span, format!("{} sweeps take no set sizes", kind.name())));
        }
        if matches!(sets, SetSpec::Files(_)) && kind != ExperimentKind::ArbitrarySet {
            return Err(diag.err(kind_span, "grid.sets is only valid for arbitrary-set sweeps"));
        }
        if kind == ExperimentKind::ExceptionalSet && kappa.is_empty() {
            return Err(diag.err(kind_span, "exceptional-set sweeps need grid.kappa"));
        }
        if kind != ExperimentKind::ExceptionalSet && !kappa.is_empty() {
            return Err(diag.err(grid.kappa.as_ref().unwrap().span(), "grid.kappa is only valid for exceptional-set sweeps"));
        }
        if kind != ExperimentKind::Voronoi {
            if let Some(r) = &grid.residues {
                return Err(diag.err(r.span(), "grid.residues is only valid for voronoi sweeps"));
            }
            if let Some(t) = &grid.truncation_factor {
                return Err(diag.err(t.span(), "grid.truncation_factor is only valid for voronoi sweeps"));
            }
        }

        let y = match &raw.y {
            Some(y) => {
                if let YPolicy::Fixed { value } = y.get_ref() {
                    if !(value.is_finite() && *value >= 1.0) {
                        return Err(diag.err(y.span(), "a fixed Y must be at least 1"));
                    }
                }
                *y.get_ref()
            }
            None => YPolicy::SqrtQ,
        };
        let thresholds = match &raw.thresholds {
            Some(t) => {
                let v = *t.get_ref();
                let bad = |o: Option<f64>| o.is_some_and(|r| !(r.is_finite() && r > 0.0));
                if bad(v.max_ratio) || bad(v.max_variation) {
                    return Err(diag.err(t.span(), "thresholds must be positive and finite"));
                }
                if v.max_ratio.is_none() && v.max_variation.is_none() {
                    return Err(diag.err(t.span(), "an empty thresholds table asserts nothing"));
                }
                Some(v)
            }
            None => None,
        };

        Ok(Self {
            id,
            kind,
            seed: exp.seed.unwrap_or(0),
            epsilon,
            output,
            x,
            q,
            sets,
            kappa,
            residues,
            truncation_factor,
            samples,
            y,
            thresholds,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}

fn nonempty<T: Clone>(diag: &Diagnostics<'_>, v: &Spanned<Vec<T>>, name: &str) -> Result<Vec<T>> {
    if v.get_ref().is_empty() {
        return Err(diag.err(v.span(), format!("{name} must not be empty")));
    }
    Ok(v.get_ref().clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[experiment]
id = "demo"
kind = "interval-any"
seed = 9

[grid]
x = [10000, 100000]
q = [300, 1000]
a = [4, 16]
b = [0, 10]

[thresholds]
max_ratio = 5.0
"#;

    fn parse(src: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(src, Path::new("cfg/test.toml"))
    }

    fn line_of(err: CliError) -> usize {
        match err {
            CliError::ConfigInvalid { line, .. } => line,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parses_a_valid_config() {
        let c = parse(GOOD).unwrap();
        assert_eq!(c.kind, ExperimentKind::IntervalAny);
        assert_eq!(c.output, "demo");
        assert_eq!(c.epsilon, 0.05);
        assert_eq!(c.y, YPolicy::SqrtQ);
        assert_eq!(c.base_dir, PathBuf::from("cfg"));
        assert_eq!(
            c.sets,
            SetSpec::Sizes {
                a: vec![4, 16],
                b: vec![0, 10]
            }
        );
        assert_eq!(c.thresholds.unwrap().max_ratio, Some(5.0));
    }

    #[test]
    fn modulus_above_x_reports_its_line() {
        let src = GOOD.replace("q = [300, 1000]", "q = [300, 20000]");
        assert_eq!(line_of(parse(&src).unwrap_err()), 9);
    }

    #[test]
    fn empty_grid_reports_its_line() {
        let src = GOOD.replace("a = [4, 16]", "a = []");
        assert_eq!(line_of(parse(&src).unwrap_err()), 10);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let src = GOOD.replace("seed = 9", "seed = ");
        assert_eq!(line_of(parse(&src).unwrap_err()), 5);
        let src = GOOD.replace("seed = 9", "sed = 9");
        assert_eq!(line_of(parse(&src).unwrap_err()), 5);
    }

    #[test]
    fn prime_kinds_reject_composites() {
        let src = GOOD.replace("interval-any", "interval-prime");
        assert!(parse(&src).unwrap_err().to_string().contains("not prime"));
    }

    #[test]
    fn y_policy_tables() {
        let src = format!("{GOOD}\n[y]\npolicy = \"fixed\"\nvalue = 30.0\n");
        assert_eq!(parse(&src).unwrap().y, YPolicy::Fixed { value: 30.0 });
        let src = format!("{GOOD}\n[y]\npolicy = \"small-y\"\n");
        assert_eq!(parse(&src).unwrap().y, YPolicy::SmallY);
        let src = format!("{GOOD}\n[y]\npolicy = \"fixed\"\nvalue = 0.5\n");
        assert_eq!(line_of(parse(&src).unwrap_err()), 16);
    }

    #[test]
    fn kind_specific_keys() {
        let src = GOOD.replace("b = [0, 10]", "b = [0]\nkappa = [0.1]");
        assert!(parse(&src).is_err());
        let exc = r#"
[experiment]
id = "exc"
kind = "exceptional-set"

[grid]
x = [100000]
q = [1009]
"#;
        assert!(parse(exc).unwrap_err().to_string().contains("kappa"));
        let ok = format!("{exc}kappa = [0.05]\n");
        assert_eq!(parse(&ok).unwrap().kappa, vec![0.05]);
    }

    #[test]
    fn empty_thresholds_rejected() {
        let src = GOOD.replace("max_ratio = 5.0", "");
        assert!(parse(&src).is_err());
    }
}
