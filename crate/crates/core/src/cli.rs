//! Command-line front end: `render`, `verify`, `code`, `bounds`, `lattice`.
//!
//! Exit status: 0 holds/success, 2 fails with witness, 3 inconclusive,
//! 1 usage or spec error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::attractor::{
    attractor_by_words, attractor_by_words_exact, iterate_attractor, iterate_attractor_exact,
    AttractorApprox, IterateOptions, StopRule, DEFAULT_CLOUD_CAP,
};
use crate::coding::{check_pi_lipschitz, code_point, inverse_modulus_exhaustive, ModulusMode};
use crate::error::{Error, Result};
use crate::ifs::{
    check_locally_finite, check_non_overlapping, check_strongly_non_overlapping, ssc_report,
    words_with_maps, IifsSpec, DEFAULT_CAP,
};
use crate::lattice::{
    check_continuity_premises, parse_lattice_json, remark31_counterexample,
    remark42_counterexample, tk_gfp,
};
use crate::metric::{diameter, hausdorff_dist, PointCloud};
use crate::rational::{fmt_rational, from_f64, parse_rational, pow, to_f64};
use crate::report::{worst_verdict, PropertyReport, Verdict};
use crate::shift::{Word, WordPrefix};

#[derive(Parser, Debug)]
#[command(
    name = "hlab",
    version,
    about = "Attractors, coding maps and fixed points of iterated function systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Approximate the attractor and write CSV, a JSON sidecar and optionally PNG.
    Render {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Check one class of the system and print a report.
    Verify {
        class: VerifyClass,
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Code a periodic word into the attractor.
    Code {
        spec: PathBuf,
        /// Letters joined by '.', repeated periodically up to --depth.
        word: String,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run the convergence-rate, Lipschitz and inverse-modulus checks.
    Bounds {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Greatest fixed point of a finite map table, or a built-in demo.
    Lattice {
        input: Option<PathBuf>,
        /// `remark31 N M` or `remark42 M`.
        #[arg(long, num_args = 1.., value_name = "NAME ARGS")]
        demo: Option<Vec<String>>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VerifyClass {
    NonOverlapping,
    LocallyFinite,
    StronglyNonOverlapping,
    Ssc,
}

#[derive(Args, Debug, Default)]
struct RunOptions {
    /// Iterations of the Hutchinson-Barnsley operator.
    #[arg(long)]
    steps: Option<usize>,
    /// Word depth for coding, separation and pair checks.
    #[arg(long)]
    depth: Option<usize>,
    /// Iterate until the certified error bound is at most this.
    #[arg(long)]
    target_error: Option<f64>,
    /// Pruning radius (render), cell size (locally-finite) or ε (bounds).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Exact rational arithmetic (1-D rational systems only).
    #[arg(long)]
    exact: bool,
    /// Override the truncation of a parametric family.
    #[arg(long)]
    truncate: Option<usize>,
    /// Write the CSV here, with `.json` and `.png` siblings.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a PNG raster of this width (2-D systems).
    #[arg(long, value_name = "WIDTH")]
    png: Option<u32>,
    /// Cap on cloud size and word-pair enumeration.
    #[arg(long, value_name = "N")]
    cap: Option<u128>,
}

impl RunOptions {
    fn cap(&self) -> u128 {
        self.cap.unwrap_or(DEFAULT_CAP)
    }

    fn load(&self, path: &Path) -> Result<IifsSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
        let spec = IifsSpec::from_json(&text)
            .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
        match self.truncate {
            Some(n) => spec.with_truncation(n),
            None => Ok(spec),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.target_error {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(
                    "--target-error must be positive".into(),
                ));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidArgument(
                    "--epsilon must be finite and >= 0".into(),
                ));
            }
        }
        if self.steps.is_some() && self.target_error.is_some() {
            return Err(Error::InvalidArgument(
                "give --steps or --target-error, not both".into(),
            ));
        }
        Ok(())
    }

    fn iterate(&self, spec: &IifsSpec, default_steps: usize) -> Result<AttractorApprox> {
        let stop = match self.target_error {
            Some(t) => StopRule::TargetError(t),
            None => StopRule::Steps(self.steps.unwrap_or(default_steps)),
        };
        let max_points = self
            .cap
            .map_or(DEFAULT_CLOUD_CAP, |c| c.min(usize::MAX as u128) as usize);
        iterate_attractor(
            spec,
            None,
            IterateOptions {
                stop,
                epsilon: self.epsilon.unwrap_or(0.0),
                max_points,
            },
        )
    }
}

/// Output of one command: text for stdout plus an exit code.
struct Outcome {
    stdout: String,
    stderr: String,
    code: i32,
}

impl Outcome {
    fn json(v: &Value, code: i32) -> Self {
        Self {
            stdout: format!("{}\n", serde_json::to_string_pretty(v).expect("json")),
            stderr: String::new(),
            code,
        }
    }

    fn report(r: &PropertyReport) -> Self {
        Self {
            stdout: format!("{}\n", r.to_json()),
            stderr: String::new(),
            code: r.verdict.exit_code(),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stderr.write_all(out.stderr.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Render { spec, opts } => render(&spec, &opts),
        Command::Verify { class, spec, opts } => verify(class, &spec, &opts),
        Command::Code { spec, word, opts } => code(&spec, &word, &opts),
        Command::Bounds { spec, opts } => bounds(&spec, &opts),
        Command::Lattice { input, demo } => lattice(input.as_deref(), demo.as_deref()),
    }
}

fn render(path: &Path, opts: &RunOptions) -> Result<Outcome> {
    opts.validate()?;
    let spec = opts.load(path)?;
    let (cloud, sidecar) = if opts.exact {
        if opts.target_error.is_some() || opts.epsilon.is_some_and(|e| e > 0.0) {
            return Err(Error::InvalidArgument(
                "--exact supports --steps only".into(),
            ));
        }
        let max_points = opts
            .cap
            .map_or(DEFAULT_CLOUD_CAP, |c| c.min(usize::MAX as u128) as usize);
        let a = iterate_attractor_exact(&spec, None, opts.steps.unwrap_or(10), max_points)?;
        (a.cloud.to_cloud()?, a.sidecar_json(&spec))
    } else {
        let a = opts.iterate(&spec, 10)?;
        let side = a.sidecar_json();
        (a.cloud, side)
    };
    let csv = cloud.to_csv();
    let side = format!(
        "{}\n",
        serde_json::to_string_pretty(&sidecar).expect("json")
    );
    match &opts.out {
        Some(out) => {
            std::fs::write(out, &csv)?;
            std::fs::write(out.with_extension("json"), &side)?;
            if let Some(width) = opts.png {
                write_png(&spec, &cloud, width, &out.with_extension("png"))?;
            }
            Ok(Outcome {
                stdout: side,
                stderr: String::new(),
                code: 0,
            })
        }
        None => {
            if opts.png.is_some() {
                return Err(Error::InvalidArgument("--png needs --out".into()));
            }
            Ok(Outcome {
                stdout: csv,
                stderr: side,
                code: 0,
            })
        }
    }
}

fn write_png(spec: &IifsSpec, cloud: &PointCloud, width: u32, path: &Path) -> Result<()> {
    if spec.dimension() != 2 {
        return Err(Error::InvalidArgument(
            "PNG output needs a 2-D system".into(),
        ));
    }
    if width < 2 {
        return Err(Error::InvalidArgument(
            "PNG width must be at least 2".into(),
        ));
    }
    let b = spec.domain_box().bounds();
    let (w_extent, h_extent) = (b[0].1 - b[0].0, b[1].1 - b[1].0);
    let height = if w_extent > 0.0 {
        ((width as f64) * h_extent / w_extent).round().max(2.0) as u32
    } else {
        width
    };
    let mut img = image::GrayImage::from_pixel(width, height, image::Luma([255]));
    let scale = |v: f64, lo: f64, extent: f64, n: u32| {
        let t = if extent > 0.0 { (v - lo) / extent } else { 0.5 };
        ((t * (n - 1) as f64).round().clamp(0.0, (n - 1) as f64)) as u32
    };
    for p in cloud.iter() {
        let x = scale(p[0], b[0].0, w_extent, width);
        let y = height - 1 - scale(p[1], b[1].0, h_extent, height);
        img.put_pixel(x, y, image::Luma([0]));
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn verify(class: VerifyClass, path: &Path, opts: &RunOptions) -> Result<Outcome> {
    opts.validate()?;
    let spec = opts.load(path)?;
    let report = match class {
        VerifyClass::NonOverlapping => check_non_overlapping(&spec),
        VerifyClass::LocallyFinite => check_locally_finite(&spec, opts.epsilon.unwrap_or(1e-3))?,
        VerifyClass::StronglyNonOverlapping => {
            check_strongly_non_overlapping(&spec, opts.depth.unwrap_or(3), opts.cap())?
        }
        VerifyClass::Ssc => {
            let a = opts.iterate(&spec, 10)?;
            ssc_report(&spec, &a.cloud)?.with_detail("attractor", a.sidecar_json())
        }
    };
    let report = match spec.truncation() {
        Some(n) => report.with_detail("truncation", n),
        None => report,
    };
    Ok(Outcome::report(&report))
}

/// Repeats `word` periodically to `depth` letters.
fn periodic_prefix(word: &Word, depth: usize) -> Result<WordPrefix> {
    if word.is_empty() && depth > 0 {
        return Err(Error::InvalidArgument(
            "cannot repeat the empty word".into(),
        ));
    }
    let letters = (0..depth).map(|k| word.letters()[k % word.len()].clone());
    WordPrefix::new(Word::new(letters), depth)
}

fn code(path: &Path, word: &str, opts: &RunOptions) -> Result<Outcome> {
    opts.validate()?;
    let spec = opts.load(path)?;
    let w: Word = word.parse()?;
    for letter in w.letters() {
        spec.position(letter)?;
    }
    let prefix = periodic_prefix(&w, opts.depth.unwrap_or(w.len()))?;
    let a = opts.iterate(&spec, 10)?;
    let c = code_point(&spec, &a, &prefix, None)?;
    Ok(Outcome::json(
        &json!({
            "prefix": c.prefix.to_string(),
            "depth": c.prefix.depth(),
            "point": c.point.coords(),
            "error_bound": c.error_bound,
        }),
        0,
    ))
}

fn convergence_report(spec: &IifsSpec, opts: &RunOptions) -> Result<PropertyReport> {
    const NAME: &str = "convergence-rate";
    let depth = opts.depth.unwrap_or(8);
    if opts.exact {
        let steps = opts.steps.unwrap_or(8);
        let a = iterate_attractor_exact(spec, None, steps, DEFAULT_CLOUD_CAP)?;
        let reference = attractor_by_words_exact(spec, depth, opts.cap())?;
        let h = a.cloud.hausdorff(&reference);
        let tail = pow(&a.contraction_c, depth as i64)? * reference.diameter();
        let bound = &a.error_bound + &tail;
        let margin = to_f64(&(&bound - &h));
        let r = if h <= bound {
            PropertyReport::holds(NAME, margin)
        } else {
            PropertyReport::inconclusive(NAME, 0.0)
        };
        return Ok(r
            .with_detail("h", fmt_rational(&h))
            .with_detail("bound", fmt_rational(&bound))
            .with_detail("error_bound", fmt_rational(&a.error_bound))
            .with_detail("steps", steps)
            .with_detail("reference_depth", depth));
    }
    let a = opts.iterate(spec, 8)?;
    let reference = attractor_by_words(spec, depth, opts.cap())?;
    let h = hausdorff_dist(&a.cloud, &reference)?;
    let delta = diameter(&reference).max(a.diameter_upper());
    let bound =
        a.total_error() + a.contraction_c.powi(depth as i32) * delta + 1e-12 * (1.0 + delta);
    let r = if h <= bound {
        PropertyReport::holds(NAME, bound - h)
    } else {
        PropertyReport::inconclusive(NAME, 0.0)
    };
    Ok(r.with_detail("h", h)
        .with_detail("bound", bound)
        .with_detail("error_bound", a.error_bound)
        .with_detail("pruning_slack", a.pruning_slack)
        .with_detail("steps", a.iterations)
        .with_detail("reference_depth", depth))
}

fn all_pairs(spec: &IifsSpec, depth: usize, cap: u128) -> Result<Vec<(WordPrefix, WordPrefix)>> {
    let words: Vec<WordPrefix> = words_with_maps(spec, depth, cap)?
        .into_iter()
        .map(|(w, _)| w.into())
        .collect();
    crate::ifs::check_word_pairs(words.len(), cap)?;
    Ok(words
        .iter()
        .enumerate()
        .flat_map(|(i, x)| words[i..].iter().map(move |y| (x.clone(), y.clone())))
        .collect())
}

fn skipped(name: &str, e: Error) -> Result<PropertyReport> {
    match e {
        Error::HypothesisUnmet(msg) => {
            Ok(PropertyReport::inconclusive(name, 0.0).with_detail("reason", msg))
        }
        other => Err(other),
    }
}

fn bounds(path: &Path, opts: &RunOptions) -> Result<Outcome> {
    opts.validate()?;
    let spec = opts.load(path)?;
    let mut reports = vec![convergence_report(&spec, opts)?];
    let a = opts.iterate(&spec, 10)?;
    let pair_depth = opts.depth.unwrap_or(6);
    let pairs = all_pairs(&spec, pair_depth, opts.cap())?;
    reports.push(check_pi_lipschitz(&spec, &a, &pairs).or_else(|e| skipped("pi-lipschitz", e))?);
    let eps = match opts.epsilon {
        Some(e) if e > 0.0 && e < 1.0 => from_f64(e)?,
        Some(e) => {
            return Err(Error::InvalidArgument(format!(
                "--epsilon {e} must lie in (0, 1) for bounds"
            )))
        }
        None => parse_rational("1/9")?,
    };
    reports.push(
        inverse_modulus_exhaustive(
            &spec,
            &a,
            &eps,
            pair_depth,
            opts.cap(),
            ModulusMode::Uniform,
        )
        .or_else(|e| skipped("inverse-modulus", e))?,
    );
    let verdict = worst_verdict(&reports);
    Ok(Outcome::json(
        &json!({ "verdict": verdict, "reports": reports }),
        verdict.exit_code(),
    ))
}

fn parse_arg<T: std::str::FromStr>(args: &[String], k: usize, name: &str) -> Result<T> {
    args.get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("demo needs argument {name}")))?
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("demo argument {name} must be an integer")))
}

fn lattice(input: Option<&Path>, demo: Option<&[String]>) -> Result<Outcome> {
    match (input, demo) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give an input file or --demo, not both".into(),
        )),
        (None, None) => Err(Error::InvalidArgument(
            "lattice needs an input file or --demo".into(),
        )),
        (None, Some(args)) => {
            let report = match args[0].as_str() {
                "remark31" if args.len() == 3 => remark31_counterexample(parse_arg(args, 1, "N")?, parse_arg(args, 2, "M")?)?,
                "remark42" if args.len() == 2 => remark42_counterexample(parse_arg(args, 1, "M")?)?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown demo `{other}` with {} arguments (expected `remark31 N M` or `remark42 M`)",
                        args.len() - 1
                    )))
                }
            };
            Ok(Outcome::report(&report))
        }
        (Some(path), None) => {
            let (universe, maps) = parse_lattice_json(&std::fs::read_to_string(path)?)?;
            let r = tk_gfp(&maps, None)?;
            let premises = check_continuity_premises(&maps, &universe);
            let out = json!({
                "gfp": universe.labels_of(&r.gfp),
                "steps": r.steps,
                "verified_fixed": r.verified_fixed,
                "chain": r.chain.iter().map(|s| universe.labels_of(s)).collect::<Vec<_>>(),
                "premises": premises,
            });
            Ok(Outcome::json(
                &out,
                if r.verified_fixed {
                    0
                } else {
                    Verdict::Inconclusive.exit_code()
                },
            ))
        }
    }
}
