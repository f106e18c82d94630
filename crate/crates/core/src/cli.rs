//! Command-line front end.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::consistency::{check_consistency, Verdict};
use crate::error::{Error, Result};
use crate::format::{fmt_num, parse_model, Model};
use crate::hedge::check_pha;
use crate::infer::viterbi;
use crate::learning::{learn_from_sample, SampleLearnOptions};
use crate::linear::{linear_to_wta, wta_to_linear, LinearRep};
use crate::sample::TreeSample;
use crate::stepwise::{decode_stepwise, encode_stepwise};
use crate::train::{train, viterbi_train, TrainOptions};
use crate::tree::{parse_tree, ParseMode, Tree};
use crate::wta::{check_pta, to_pta, Sampler, Wta};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 5;
pub const EXIT_CRITICAL: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "treeseries", version, about = "Weighted and probabilistic tree automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelTrees {
    /// Model file (`-` for standard input).
    #[arg(short = 'A', long = "automaton")]
    model: PathBuf,
    /// Tree in term syntax; repeatable.
    #[arg(short, long = "tree", required_unless_present = "trees")]
    tree: Vec<String>,
    /// File with one tree per line, read when no `-t` is given.
    #[arg(short = 'T', long = "trees")]
    trees: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Wta,
    Linrep,
    Wsta,
    Pta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnFormat {
    Linrep,
    Wta,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the weight of each tree.
    Eval(ModelTrees),
    /// List every run with its weight.
    Runs(ModelTrees),
    /// Print the best run and its weight.
    Viterbi(ModelTrees),
    /// Draw trees from a probabilistic automaton.
    Sample {
        #[arg(short = 'A', long = "automaton")]
        model: PathBuf,
        #[arg(short, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_depth: usize,
    },
    /// Check the probabilistic normalization conditions.
    Check {
        #[arg(short = 'A', long = "automaton")]
        model: PathBuf,
        /// Also decide whether the total mass of finite trees is one.
        #[arg(long)]
        consistency: bool,
    },
    /// Re-estimate rule weights from a sample.
    Train {
        #[arg(short = 'A', long = "automaton")]
        model: PathBuf,
        #[arg(short = 'S', long = "sample")]
        sample: PathBuf,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0.0)]
        smoothing: f64,
        /// Hard counts from best runs instead of expected counts.
        #[arg(long)]
        viterbi: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Learn a series representation from a sample.
    Learn {
        #[arg(short = 'S', long = "sample")]
        sample: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LearnFormat::Linrep)]
        format: LearnFormat,
        #[arg(long, default_value_t = 1e-2)]
        rank_tol: f64,
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long, default_value_t = 9)]
        context_size: usize,
        #[arg(long, default_value_t = 7)]
        candidate_size: usize,
        /// Unused by the deterministic learner; accepted for uniformity.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample trees are unranked; learn over their stepwise encodings.
        #[arg(long)]
        unranked: bool,
    },
    /// Convert between model kinds.
    Convert {
        #[arg(short = 'A', long = "automaton")]
        model: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Stepwise-encode unranked trees.
    Encode(TreeStream),
    /// Decode stepwise encodings.
    Decode(TreeStream),
    /// Minimize a linear representation.
    Minimize {
        #[arg(short = 'A', long = "automaton")]
        model: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct TreeStream {
    #[arg(short, long = "tree")]
    tree: Vec<String>,
    /// One tree per line; defaults to standard input when no `-t` is given.
    #[arg(short, long)]
    input: Option<PathBuf>,
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
}

impl Io<'_> {
    fn read(&mut self, path: &PathBuf) -> Result<String> {
        if path.as_os_str() == "-" {
            let mut s = String::new();
            self.stdin.read_to_string(&mut s)?;
            Ok(s)
        } else {
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
    }

    fn emit(&mut self, output: &Option<PathBuf>, text: &str) -> Result<()> {
        match output {
            Some(p) if p.as_os_str() != "-" => {
                std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
            }
            _ => Ok(self.out.write_all(text.as_bytes())?),
        }
    }
}

fn tree_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn model_trees(io: &mut Io<'_>, args: &ModelTrees) -> Result<(Model, Vec<Tree>)> {
    let model = parse_model(&io.read(&args.model)?)?;
    let mut texts: Vec<String> = args.tree.clone();
    if texts.is_empty() {
        if let Some(path) = &args.trees {
            texts = tree_lines(&io.read(path)?).map(String::from).collect();
        }
    }
    let trees = texts
        .iter()
        .map(|s| match &model {
            Model::Wta(a) => parse_tree(s, ParseMode::Ranked(a.alphabet())),
            Model::Linear(r) => parse_tree(s, ParseMode::Ranked(r.alphabet())),
            Model::Wha(_) => parse_tree(s, ParseMode::Unranked),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((model, trees))
}

fn require_wta(model: Model) -> Result<Wta> {
    match model {
        Model::Wta(a) => Ok(a),
        other => Err(Error::InvalidModel(format!("expected a wta model, found {}", other.kind()))),
    }
}

fn run(cli: Cli, io: &mut Io<'_>) -> Result<i32> {
    match cli.command {
        Command::Eval(args) => {
            let (model, trees) = model_trees(io, &args)?;
            for t in &trees {
                let w = match &model {
                    Model::Wta(a) => a.evaluate(t)?,
                    Model::Linear(r) => r.eval_linear(t)?,
                    Model::Wha(h) => h.evaluate(t)?,
                };
                writeln!(io.out, "{}", fmt_num(w))?;
            }
        }
        Command::Runs(args) => {
            let (model, trees) = model_trees(io, &args)?;
            let a = require_wta(model)?;
            for t in &trees {
                for r in a.enumerate_runs(t)? {
                    writeln!(io.out, "{}\t{}", a.render_run(t, &r), fmt_num(a.weight_of_run(t, &r)?))?;
                }
            }
        }
        Command::Viterbi(args) => {
            let (model, trees) = model_trees(io, &args)?;
            let a = require_wta(model)?;
            for t in &trees {
                let (r, w) = viterbi(&a, t)?;
                writeln!(io.out, "{}\t{}", a.render_run(t, &r), fmt_num(w))?;
            }
        }
        Command::Sample {
            model,
            n,
            seed,
            max_depth,
        } => {
            let a = require_wta(parse_model(&io.read(&model)?)?)?;
            let mut sampler = Sampler::new(&a, seed)?;
            for _ in 0..n {
                writeln!(io.out, "{}", sampler.draw(max_depth)?)?;
            }
        }
        Command::Check { model, consistency } => match parse_model(&io.read(&model)?)? {
            Model::Wta(a) => {
                let report = check_pta(&a);
                writeln!(io.out, "{report}")?;
                if !report.is_valid() {
                    return Ok(Error::InvalidPta(String::new()).exit_code());
                }
                if consistency {
                    let c = check_consistency(&a)?;
                    writeln!(io.out, "{c}")?;
                    return Ok(match c.verdict {
                        Verdict::Consistent => 0,
                        Verdict::Inconsistent => EXIT_INCONSISTENT,
                        Verdict::Critical => EXIT_CRITICAL,
                    });
                }
            }
            Model::Wha(h) => {
                let report = check_pha(&h);
                writeln!(io.out, "{report}")?;
                if !report.is_valid() {
                    return Ok(Error::InvalidPta(String::new()).exit_code());
                }
                if consistency {
                    return Err(Error::InvalidModel("consistency check needs a wta model".into()));
                }
            }
            Model::Linear(_) => return Err(Error::InvalidModel("check needs a wta or wha model".into())),
        },
        Command::Train {
            model,
            sample,
            iters,
            tol,
            smoothing,
            viterbi,
            output,
        } => {
            let a = require_wta(parse_model(&io.read(&model)?)?)?;
            let s = TreeSample::parse(&io.read(&sample)?, ParseMode::Ranked(a.alphabet()))?;
            let result = if viterbi {
                let res = viterbi_train(&a, &s, iters)?;
                for (k, ll) in res.trace.iter().enumerate() {
                    writeln!(io.out, "iter {} loglik {}", k + 1, fmt_num(*ll))?;
                }
                res
            } else {
                let opts = TrainOptions {
                    max_iters: iters,
                    rel_tol: tol,
                    smoothing,
                };
                let mut lines = Vec::new();
                let res = train(&a, &s, &opts, |k, ll| lines.push(format!("iter {k} loglik {}", fmt_num(ll))))?;
                for l in lines {
                    writeln!(io.out, "{l}")?;
                }
                res
            };
            io.emit(&output, &result.model.to_string())?;
        }
        Command::Learn {
            sample,
            output,
            format,
            rank_tol,
            max_dim,
            context_size,
            candidate_size,
            seed: _,
            unranked,
        } => {
            let s = TreeSample::parse(&io.read(&sample)?, ParseMode::Unranked)?;
            let opts = SampleLearnOptions {
                rank_tol,
                max_dim,
                context_size,
                candidate_size,
                unranked,
            };
            let learned = learn_from_sample(&s, &opts)?;
            let text = match format {
                LearnFormat::Linrep => learned.rep.to_string(),
                LearnFormat::Wta => linear_to_wta(&learned.rep).to_string(),
            };
            io.emit(&output, &text)?;
        }
        Command::Convert { model, to, output } => {
            let m = parse_model(&io.read(&model)?)?;
            let text = match (to, m) {
                (Target::Wta, Model::Wta(a)) => a.to_string(),
                (Target::Wta, Model::Linear(r)) => linear_to_wta(&r).to_string(),
                (Target::Linrep, Model::Wta(a)) => wta_to_linear(&a)?.to_string(),
                (Target::Linrep, Model::Linear(r)) => r.to_string(),
                (Target::Wsta, Model::Wha(h)) => h.to_wsta()?.to_string(),
                (Target::Pta, Model::Wta(a)) => to_pta(&a, 1e-12, 10_000)?.to_string(),
                (Target::Pta, Model::Linear(r)) => to_pta(&linear_to_wta(&r), 1e-12, 10_000)?.to_string(),
                (to, m) => {
                    return Err(Error::InvalidModel(format!(
                        "cannot convert {} to {}",
                        m.kind(),
                        format!("{to:?}").to_lowercase()
                    )))
                }
            };
            io.emit(&output, &text)?;
        }
        Command::Encode(args) => stream(io, &args, encode_stepwise)?,
        Command::Decode(args) => stream(io, &args, decode_stepwise)?,
        Command::Minimize { model, tol, output } => {
            let r: LinearRep = match parse_model(&io.read(&model)?)? {
                Model::Linear(r) => r,
                Model::Wta(a) => wta_to_linear(&a)?,
                Model::Wha(_) => return Err(Error::InvalidModel("minimize needs a linrep or wta model".into())),
            };
            io.emit(&output, &r.minimize(tol)?.to_string())?;
        }
    }
    Ok(0)
}

fn stream(io: &mut Io<'_>, args: &TreeStream, f: fn(&Tree) -> Result<Tree>) -> Result<()> {
    let convert = |line: &str, out: &mut dyn Write| -> Result<()> {
        let t = parse_tree(line, ParseMode::Unranked)?;
        writeln!(out, "{}", f(&t)?)?;
        Ok(())
    };
    if !args.tree.is_empty() {
        for t in &args.tree {
            convert(t, io.out)?;
        }
        return Ok(());
    }
    match &args.input {
        Some(p) if p.as_os_str() != "-" => {
            let text = io.read(p)?;
            for line in tree_lines(&text) {
                convert(line, io.out)?;
            }
        }
        _ => {
            for line in BufReader::new(&mut *io.stdin).lines() {
                let line = line?;
                let line = line.trim();
                if !line.is_empty() && !line.starts_with('#') {
                    convert(line, io.out)?;
                }
            }
        }
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code: 0 success,
/// 1 usage, 2 parse error, 3 invalid model, 4 numeric failure,
/// 5 inconsistent, 6 critical.
pub fn run_cli<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    let mut io = Io { stdin, out: stdout };
    match run(cli, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
