//! Configuration-driven experiment runner: builds the test problems, solves
//! every (noise level, seed, regularizer) combination and writes a CSV table
//! plus PGM renderings.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{kron, vec, Mat};
use crate::problems::{
    shaw_matrix_with, shaw_true_solution, write_pgm, ImageKind, ProblemInstance, ShawKernel,
    SplitMix64,
};
use crate::regmat::{make_stencil, nullspace_basis, reg_factor, RegFactor, Side, StencilKind};
use crate::solver::{
    default_k_max, direct_solve, solve_general_with, solve_kron, solve_kron_with, MuRule,
    SolveReport, TikhonovGeneralProblem, TikhonovKronProblem, DEFAULT_ETA, DEFAULT_MU_BRACKET,
    DISCREPANCY_RTOL,
};

/// The nine regularizer pairs of the comparison tables, in table order.
/// Labels name the second factor first, as in `L⁽²⁾ ⊗ L⁽¹⁾`.
pub const CANONICAL_REGULARIZERS: [&str; 9] = [
    "Lt1xLt1",
    "P1Lt1xP1Lt1",
    "Lt1P1xLt1P1",
    "Lt2xLt1",
    "P2Lt2xP1Lt1",
    "Lt2P2xLt1P1",
    "Lt2xLt2",
    "P2Lt2xP2Lt2",
    "Lt2P2xLt2P2",
];

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Shaw2d,
    Blur,
    Custom,
}

/// One regularization factor: stencil family and projector placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub kind: StencilKind,
    pub side: Side,
}

impl FactorSpec {
    pub fn build(self, n: usize) -> Result<RegFactor> {
        reg_factor(self.kind, n, self.side)
    }

    fn label(self) -> String {
        let d = match self.kind {
            StencilKind::L1 | StencilKind::L1Square => 1,
            StencilKind::L2 | StencilKind::L2Square => 2,
        };
        match self.side {
            Side::None => format!("Lt{d}"),
            Side::Left => format!("P{d}Lt{d}"),
            Side::Right => format!("Lt{d}P{d}"),
        }
    }
}

impl FromStr for FactorSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parsed = match s {
            "Lt1" => (StencilKind::L1, Side::None),
            "P1Lt1" => (StencilKind::L1, Side::Left),
            "Lt1P1" => (StencilKind::L1, Side::Right),
            "Lt2" => (StencilKind::L2, Side::None),
            "P2Lt2" => (StencilKind::L2, Side::Left),
            "Lt2P2" => (StencilKind::L2, Side::Right),
            _ => return Err(format!("unknown regularization factor `{s}`")),
        };
        Ok(FactorSpec {
            kind: parsed.0,
            side: parsed.1,
        })
    }
}

/// A regularizer pair `L⁽²⁾ ⊗ L⁽¹⁾`. In a config it is written either as a
/// label such as `"P2Lt2xP1Lt1"` or as `{"reg1": {...}, "reg2": {...}}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegularizerRepr", into = "String")]
pub struct RegularizerSpec {
    /// Acts on rows: `L⁽¹⁾ X`.
    pub reg1: FactorSpec,
    /// Acts on columns: `X L⁽²⁾ᵀ`.
    pub reg2: FactorSpec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegularizerRepr {
    Label(String),
    Pair(PairRepr),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRepr {
    reg1: FactorSpec,
    reg2: FactorSpec,
}

impl TryFrom<RegularizerRepr> for RegularizerSpec {
    type Error = String;

    fn try_from(r: RegularizerRepr) -> std::result::Result<Self, String> {
        match r {
            RegularizerRepr::Label(s) => s.parse(),
            RegularizerRepr::Pair(p) => Ok(RegularizerSpec {
                reg1: p.reg1,
                reg2: p.reg2,
            }),
        }
    }
}

impl FromStr for RegularizerSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (second, first) = s
            .split_once('x')
            .ok_or_else(|| format!("regularizer label `{s}` lacks the `x` separator"))?;
        Ok(RegularizerSpec {
            reg1: first.parse()?,
            reg2: second.parse()?,
        })
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.reg2.label(), self.reg1.label())
    }
}

impl From<RegularizerSpec> for String {
    fn from(r: RegularizerSpec) -> String {
        r.to_string()
    }
}

impl RegularizerSpec {
    /// The nine table regularizers in order.
    pub fn canonical() -> Vec<RegularizerSpec> {
        CANONICAL_REGULARIZERS
            .iter()
            .map(|s| s.parse().expect("canonical labels parse"))
            .collect()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

/// Matrices of a user-supplied problem, each stored as a headerless CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub k1: PathBuf,
    pub k2: PathBuf,
    pub x_true: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    pub noise_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub regularizers: Vec<RegularizerSpec>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Defaults to `min(n, 60)`.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "default_bracket")]
    pub mu_bracket: (f64, f64),
    /// Test image for `blur`; defaults to `checker`.
    #[serde(default)]
    pub image_kind: Option<ImageKind>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub shaw_kernel: ShawKernel,
    #[serde(default)]
    pub custom: Option<CustomProblem>,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_bracket() -> (f64, f64) {
    DEFAULT_MU_BRACKET
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(problem: ProblemKind, n: usize, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            problem,
            n,
            noise_levels: vec![1e-3],
            seeds: vec![1],
            regularizers: RegularizerSpec::canonical(),
            eta: DEFAULT_ETA,
            k_max: None,
            mu_bracket: DEFAULT_MU_BRACKET,
            image_kind: None,
            output_dir: output_dir.into(),
            shaw_kernel: ShawKernel::default(),
            custom: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn effective_k_max(&self) -> usize {
        self.k_max.unwrap_or_else(|| default_k_max(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_levels.is_empty() {
            return Err(Error::config("noise_levels", "must not be empty"));
        }
        if let Some(v) = self
            .noise_levels
            .iter()
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::config(
                "noise_levels",
                format!("{v} is not a level >= 0"),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.regularizers.is_empty() {
            return Err(Error::config("regularizers", "must not be empty"));
        }
        for r in &self.regularizers {
            for f in [r.reg1, r.reg2] {
                if !matches!(f.kind, StencilKind::L1 | StencilKind::L2) {
                    return Err(Error::config(
                        "regularizers",
                        format!("kind must be L1 or L2, got {:?}", f.kind),
                    ));
                }
            }
        }
        if !(self.eta >= 1.0 && self.eta.is_finite()) {
            return Err(Error::config(
                "eta",
                format!("must be >= 1, got {}", self.eta),
            ));
        }
        if self.k_max == Some(0) {
            return Err(Error::config("k_max", "must be positive"));
        }
        let (lo, hi) = self.mu_bracket;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::config(
                "mu_bracket",
                format!("need 0 < mu_min < mu_max, got [{lo}, {hi}]"),
            ));
        }
        match self.problem {
            ProblemKind::Shaw2d if self.n < 4 || !self.n.is_multiple_of(2) => {
                return Err(Error::config("n", "shaw2d needs an even n >= 4"));
            }
            ProblemKind::Blur if self.n < 8 => {
                return Err(Error::config("n", "blur needs n >= 8"));
            }
            ProblemKind::Custom if self.custom.is_none() => {
                return Err(Error::config("custom", "required when problem is custom"));
            }
            _ => {}
        }
        if self.problem != ProblemKind::Custom && self.custom.is_some() {
            return Err(Error::config(
                "custom",
                "only allowed when problem is custom",
            ));
        }
        if self.problem != ProblemKind::Blur && self.image_kind.is_some() {
            return Err(Error::config("image_kind", "only used by the blur problem"));
        }
        Ok(())
    }

    /// Builds the problem instance for one noise level and seed.
    pub fn instance(&self, nu: f64, seed: u64) -> Result<ProblemInstance> {
        let n = self.n;
        match self.problem {
            ProblemKind::Shaw2d => {
                let k = shaw_matrix_with(n, self.shaw_kernel)?;
                let x = Mat::column(&shaw_true_solution(n)?);
                let x_true = x.matmul_t(&x);
                ProblemInstance::from_parts("shaw2d", k.clone(), k, x_true, nu, seed)
            }
            ProblemKind::Blur => {
                ProblemInstance::blur(n, self.image_kind.unwrap_or(ImageKind::Checker), nu, seed)
            }
            ProblemKind::Custom => {
                let c = self.custom.as_ref().expect("validated");
                let k1 = read_matrix_csv(&c.k1)?;
                let k2 = read_matrix_csv(&c.k2)?;
                let x_true = read_matrix_csv(&c.x_true)?;
                if k1.shape() != (n, n) || k2.shape() != (n, n) || x_true.shape() != (n, n) {
                    return Err(Error::config(
                        "custom",
                        format!("all matrices must be {n}x{n}"),
                    ));
                }
                ProblemInstance::from_parts("custom", k1, k2, x_true, nu, seed)
            }
        }
    }
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "regularizer")]
    pub regularizer_label: String,
    pub noise_level: f64,
    pub seed: u64,
    pub k: usize,
    pub mu: f64,
    #[serde(rename = "residual")]
    pub discrepancy_residual: f64,
    #[serde(rename = "rel_error")]
    pub relative_error: f64,
    pub wall_seconds: f64,
    pub converged: bool,
}

impl ResultRow {
    /// File stem shared by the row's PGM and report.
    pub fn stem(&self) -> String {
        run_stem(&self.regularizer_label, self.noise_level, self.seed)
    }
}

fn run_stem(label: &str, nu: f64, seed: u64) -> String {
    format!("{label}_nu{nu:e}_seed{seed}")
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub reports: Vec<SolveReport>,
    pub csv_path: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutput {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

/// Solves every combination without touching the file system. Rows come back
/// ordered by noise level, then seed, then regularizer, as listed in the
/// config.
pub fn solve_all(config: &ExperimentConfig) -> Result<Vec<(ResultRow, SolveReport)>> {
    config.validate()?;
    let pairs: Vec<(f64, u64)> = config
        .noise_levels
        .iter()
        .flat_map(|&nu| config.seeds.iter().map(move |&s| (nu, s)))
        .collect();
    let instances = pairs
        .par_iter()
        .map(|&(nu, seed)| config.instance(nu, seed))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, RegularizerSpec)> = (0..instances.len())
        .flat_map(|i| config.regularizers.iter().map(move |r| (i, *r)))
        .collect();
    tasks
        .par_iter()
        .map(|&(i, reg)| {
            let inst = &instances[i];
            let (nu, seed) = pairs[i];
            let report = solve_instance(config, inst, reg)?;
            let row = ResultRow {
                regularizer_label: reg.label(),
                noise_level: nu,
                seed,
                k: report.k_used,
                mu: report.mu,
                discrepancy_residual: report.discrepancy_residual,
                relative_error: report.relative_error.expect("reference supplied"),
                wall_seconds: report.wall_seconds,
                converged: report.converged,
            };
            Ok((row, report))
        })
        .collect()
}

fn solve_instance(
    config: &ExperimentConfig,
    inst: &ProblemInstance,
    reg: RegularizerSpec,
) -> Result<SolveReport> {
    let n = config.n;
    let problem = TikhonovKronProblem::new(
        inst.k1_factor.clone(),
        inst.k2_factor.clone(),
        inst.setup.b_noisy.clone(),
        reg.reg1.build(n)?,
        reg.reg2.build(n)?,
        inst.setup.eps,
    )?
    .with_eta(config.eta)
    .with_k_max(config.effective_k_max())
    .with_mu_bracket(config.mu_bracket.0, config.mu_bracket.1);
    problem.validate()?;
    solve_kron(&problem, Some(&inst.x_true))
}

/// Runs the experiment and writes `results.csv`, one PGM and one JSON report
/// per row, and PGMs of the data and the truth per instance.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let solved = solve_all(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    for &nu in &config.noise_levels {
        for &seed in &config.seeds {
            let inst = config.instance(nu, seed)?;
            let data = dir.join(format!("data_nu{nu:e}_seed{seed}.pgm"));
            let truth = dir.join(format!("truth_nu{nu:e}_seed{seed}.pgm"));
            write_pgm(&inst.setup.b_noisy, &data)?;
            write_pgm(&inst.x_true, &truth)?;
            files.push(data);
            files.push(truth);
        }
    }

    let csv_path = dir.join(RESULTS_FILE);
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    for (row, report) in &solved {
        w.serialize(row).map_err(|e| csv_error(&csv_path, e))?;
        let pgm = dir.join(format!("{}.pgm", row.stem()));
        write_pgm(&report.x_solution, &pgm)?;
        let json = dir.join(format!("{}.json", row.stem()));
        let text = serde_json::to_string(report).map_err(|e| Error::Parse {
            path: json.clone(),
            message: e.to_string(),
        })?;
        fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        files.push(pgm);
        files.push(json);
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let (rows, reports) = solved.into_iter().unzip();
    Ok(RunOutput {
        rows,
        reports,
        csv_path,
        files,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.into(),
        message: e.to_string(),
    }
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

/// Reads a headerless comma-separated matrix.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.into(),
                message: format!("row {}: {e}", rows.len() + 1),
            })?;
        rows.push(row);
    }
    Mat::from_rows(&rows).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn write_matrix_csv(m: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    for i in 0..m.rows() {
        w.serialize(m.row(i)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<SolveReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

/// Renders PGM images into `out_dir`.
///
/// `input` may be a JSON solve report, a headerless matrix CSV, or a
/// `results.csv`, in which case every row's report next to it is rendered.
pub fn render(input: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let input = input.as_ref();
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let ext = input.extension().map(|e| e.to_ascii_lowercase());
    match ext.as_deref().and_then(|e| e.to_str()) {
        Some("json") => {
            let out = out_dir.join(format!("{stem}.pgm"));
            write_pgm(&read_report(input)?.x_solution, &out)?;
            Ok(vec![out])
        }
        Some("csv") if is_results_table(input)? => {
            let base = input.parent().unwrap_or(Path::new("."));
            read_results(input)?
                .iter()
                .map(|row| {
                    let report = read_report(base.join(format!("{}.json", row.stem())))?;
                    let out = out_dir.join(format!("{}.pgm", row.stem()));
                    write_pgm(&report.x_solution, &out)?;
                    Ok(out)
                })
                .collect()
        }
        Some("csv") => {
            let out = out_dir.join(format!("{stem}.pgm"));
            write_pgm(&read_matrix_csv(input)?, &out)?;
            Ok(vec![out])
        }
        _ => Err(Error::Parse {
            path: input.into(),
            message: "expected a .json report or a .csv file".into(),
        }),
    }
}

fn is_results_table(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.starts_with("regularizer,"))
}

/// Outcome of one self-check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Small-size consistency checks of the iterative solvers against the
/// dense normal-equations solution.
pub fn selfcheck() -> Vec<Check> {
    vec![
        check("stencils", stencil_check),
        check("kron-vs-direct", kron_vs_direct),
        check("general-vs-kron", general_vs_kron),
        check("discrepancy", discrepancy_check),
    ]
}

fn check(name: &'static str, f: fn() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn stencil_check() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for kind in [StencilKind::L1, StencilKind::L2] {
        for n in 3..=8 {
            let l = make_stencil(kind, n)?;
            worst = worst.max((&l * &nullspace_basis(kind, n)?).max_abs());
        }
    }
    Ok((worst <= 1e-13, format!("max |L V| = {worst:.1e}")))
}

fn seeded_factor(n: usize, rng: &mut SplitMix64) -> Mat {
    let mut a = Mat::from_fn(n, n, |_, _| 0.6 * (rng.next_open01() - 0.5));
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    a
}

fn kron_vs_direct() -> Result<(bool, String)> {
    let n = 4;
    let mut rng = SplitMix64::new(11);
    let mut worst = 0.0_f64;
    for (reg, mu) in RegularizerSpec::canonical()
        .iter()
        .zip([1e-3, 1.0, 1e-2].iter().cycle())
    {
        let k1 = seeded_factor(n, &mut rng);
        let k2 = seeded_factor(n, &mut rng);
        let b = Mat::from_fn(n, n, |_, _| rng.next_open01() - 0.5);
        let (r1, r2) = (reg.reg1.build(n)?, reg.reg2.build(n)?);
        let l_full = kron(&r2.effective(), &r1.effective())?;
        let p = TikhonovKronProblem::new(k1.clone(), k2.clone(), b.clone(), r1, r2, 0.0)?
            .with_k_max(n * n);
        let x = solve_kron_with(&p, MuRule::Fixed(*mu), None)?.x_solution;
        let x_ref = direct_solve(&kron(&k2, &k1)?, &vec(&b), &l_full, *mu)?;
        let rel = (&vec(&x) - &x_ref).frobenius_norm() / x_ref.frobenius_norm();
        worst = worst.max(rel);
    }
    Ok((
        worst <= 1e-7,
        format!("max relative difference {worst:.1e}"),
    ))
}

fn general_vs_kron() -> Result<(bool, String)> {
    let n = 4;
    let mut rng = SplitMix64::new(12);
    let mut worst = 0.0_f64;
    for reg in RegularizerSpec::canonical() {
        let k1 = seeded_factor(n, &mut rng);
        let k2 = seeded_factor(n, &mut rng);
        let b = Mat::from_fn(n, n, |_, _| rng.next_open01() - 0.5);
        let (r1, r2) = (reg.reg1.build(n)?, reg.reg2.build(n)?);
        let pk = TikhonovKronProblem::new(
            k1.clone(),
            k2.clone(),
            b.clone(),
            r1.clone(),
            r2.clone(),
            0.0,
        )?
        .with_k_max(n * n);
        let pg =
            TikhonovGeneralProblem::new(kron(&k2, &k1)?, vec(&b), r1, r2, 0.0)?.with_k_max(n * n);
        let xk = solve_kron_with(&pk, MuRule::Fixed(1e-2), None)?.x_solution;
        let xg = solve_general_with(&pg, MuRule::Fixed(1e-2), None)?.x_solution;
        worst = worst.max((&xk - &xg).frobenius_norm() / xk.frobenius_norm());
    }
    Ok((
        worst <= 1e-8,
        format!("max relative difference {worst:.1e}"),
    ))
}

fn discrepancy_check() -> Result<(bool, String)> {
    let mut cfg = ExperimentConfig::new(ProblemKind::Shaw2d, 16, "unused");
    cfg.noise_levels = vec![1e-2];
    let rows = solve_all(&cfg)?;
    let mut worst = 0.0_f64;
    let mut all = true;
    for (_, rep) in &rows {
        all &= rep.converged;
        if rep.converged && !rep.saturated {
            worst = worst.max((rep.discrepancy_residual - rep.target).abs() / rep.target);
        }
    }
    Ok((
        all && worst <= DISCREPANCY_RTOL,
        format!("all converged: {all}, max |r - target| / target = {worst:.1e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for label in CANONICAL_REGULARIZERS {
            let r: RegularizerSpec = label.parse().unwrap();
            assert_eq!(r.label(), label);
        }
        let r: RegularizerSpec = "P2Lt2xP1Lt1".parse().unwrap();
        assert_eq!(
            r.reg2,
            FactorSpec {
                kind: StencilKind::L2,
                side: Side::Left
            }
        );
        assert_eq!(
            r.reg1,
            FactorSpec {
                kind: StencilKind::L1,
                side: Side::Left
            }
        );
        assert!("Lt3xLt1".parse::<RegularizerSpec>().is_err());
        assert!("Lt1".parse::<RegularizerSpec>().is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_json_str(
            r#"{"problem": "shaw2d", "n": 20, "noise_levels": [1e-3], "seeds": [1, 2],
                "regularizers": ["Lt1xLt1", {"reg1": {"kind": "L2", "side": "Right"},
                                             "reg2": {"kind": "L1", "side": "None"}}],
                "output_dir": "out"}"#,
        )
        .unwrap();
        assert_eq!(cfg.eta, DEFAULT_ETA);
        assert_eq!(cfg.effective_k_max(), 20);
        assert_eq!(cfg.regularizers[1].label(), "Lt1xLt2P2");

        let bad = [
            r#"{"problem": "shaw2d", "n": 20, "noise_levels": [1e-3], "seeds": [],
                "regularizers": ["Lt1xLt1"], "output_dir": "o"}"#,
            r#"{"problem": "shaw2d", "n": 20, "noise_levels": [1e-3], "seeds": [1],
                "regularizers": ["Lt1xLt1"], "output_dir": "o", "typo": 1}"#,
            r#"{"problem": "shaw2d", "n": 20, "noise_levels": [1e-3], "seeds": [1],
                "regularizers": ["Lt1xLt1"], "output_dir": "o", "eta": 0.5}"#,
            r#"{"problem": "shaw2d", "n": 21, "noise_levels": [1e-3], "seeds": [1],
                "regularizers": ["Lt1xLt1"], "output_dir": "o"}"#,
            r#"{"problem": "custom", "n": 4, "noise_levels": [1e-3], "seeds": [1],
                "regularizers": ["Lt1xLt1"], "output_dir": "o"}"#,
            r#"{"problem": "blur", "n": 16, "noise_levels": [-1], "seeds": [1],
                "regularizers": ["Lt1xLt1"], "output_dir": "o"}"#,
        ];
        for b in bad {
            assert!(ExperimentConfig::from_json_str(b).is_err(), "{b}");
        }
    }

    #[test]
    fn empty_seeds_name_the_field() {
        let mut cfg = ExperimentConfig::new(ProblemKind::Shaw2d, 10, "o");
        cfg.seeds.clear();
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "seeds"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn selfcheck_passes() {
        for c in selfcheck() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
