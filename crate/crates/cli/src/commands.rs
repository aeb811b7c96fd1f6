use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maxload_core::asymptotics::{
    compare_report, comparison_table, estimate_constant_with, geometric_ladder, AsymptoticFit,
    Comparison, Corrections,
};
use maxload_core::engine::{a_sequence_with, approx, heuristic_constant, max_pmf, state_at};
use maxload_core::eval::{
    extend_exact_with_limit, extend_float, EvaluationResult, PrecisionPolicy, Stabilization,
    MIN_AGREED_DIGITS,
};
use maxload_core::formats::{
    comparison_value, comparisons_to_json, pmf_to_json, recurrence_from_json, recurrence_to_json,
    samples_from_json, samples_to_json, sequence_from_json, sequence_to_json, sim_result_to_json,
    to_canonical_string, SampleRecord,
};
use maxload_core::guess::{search_with, FitOptions, FitOutcome, GuessReport, Solver};
use maxload_core::real::Fixed;
use maxload_core::sim::{self, SimConfig};
use maxload_core::{EngineConfig, Error, ProblemSpec, RationalSequence, RecurrenceOperator};
use serde_json::{json, Value};

use crate::manifest::{manifest_path, render, Recorder};
use crate::{Cli, Command, CorrectionsArg, Format, LadderArgs, SolverArg, Spec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no recurrence with order <= {max_order} and degree <= {max_degree} survived the holdout")]
    Exhausted {
        max_order: usize,
        max_degree: usize,
        trace: String,
    },
    #[error("double-check agreement below {MIN_AGREED_DIGITS} digits at T = {0:?}")]
    Precision(Vec<u64>),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Exhausted { .. } => 3,
            CliError::Precision(_) => 5,
            CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                Error::StateCeiling { .. } | Error::OracleTooLarge { .. } | Error::ExactLimit { .. } => 4,
                Error::InvalidSpec { .. }
                | Error::InvalidArgument(_)
                | Error::Format(_)
                | Error::InsufficientTerms { .. }
                | Error::IndexRange { .. }
                | Error::MissingInitial { .. }
                | Error::NonGeometricLadder
                | Error::TooFewSamples { .. }
                | Error::LeadingVanishes(_) => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx<'a> {
    cli: &'a Cli,
    rec: Recorder,
}

impl Ctx<'_> {
    fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.rec.input(path, &bytes);
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))
    }

    fn write(&self, path: &Path, text: &str) -> CliResult<()> {
        let io = |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        };
        fs::write(path, text).map_err(io)?;
        let manifest = render(&self.rec.manifest(text.as_bytes()));
        fs::write(manifest_path(path), manifest).map_err(io)
    }

    /// The artifact goes to `out` (with its manifest) or, for `--format json`,
    /// to stdout. The table is printed for `--format table`.
    fn finish(&self, out: Option<&Path>, artifact: &str, table: &str) -> CliResult<()> {
        if let Some(path) = out {
            self.write(path, artifact)?;
        }
        match self.cli.format {
            Format::Table => print!("{table}"),
            Format::Json if out.is_none() => print!("{artifact}"),
            Format::Json => {}
        }
        Ok(())
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig {
            state_ceiling: self.cli.ceiling,
            ..EngineConfig::default()
        }
    }
}

fn spec(s: &Spec) -> CliResult<ProblemSpec> {
    Ok(ProblemSpec::new(s.n, s.r)?)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let mut ctx = Ctx {
        cli,
        rec: Recorder::start(),
    };
    match &cli.command {
        Command::Exact { spec: s, t_max, out } => {
            let seq = a_sequence_with(spec(s)?, *t_max, &ctx.engine())?;
            ctx.finish(out.as_deref(), &sequence_to_json(&seq), &sequence_table(&seq))
        }
        Command::Pmf { spec: s, rounds, out } => {
            let spec = spec(s)?;
            let pmf = max_pmf(&state_at(spec, *rounds, &ctx.engine())?, spec);
            let mut table = format!("{:>6}  {:>24}  {:>14}\n", "max", "probability", "decimal");
            for (m, p) in &pmf.entries {
                let _ = writeln!(table, "{m:>6}  {:>24}  {:>14.10}", p.to_string(), approx(p));
            }
            ctx.finish(out.as_deref(), &pmf_to_json(spec, &pmf), &table)
        }
        Command::Guess {
            input,
            max_order,
            max_degree,
            holdout,
            solver,
            out,
        } => {
            let seq = sequence_from_json(&ctx.read(input)?)?;
            let report = guess(&seq, *max_order, *max_degree, *holdout, *solver)?;
            let op = report.operator.as_ref().expect("guess returns certified operators");
            let table = guess_table(&report);
            if cli.format == Format::Json && out.is_none() {
                eprint!("{table}");
            }
            ctx.finish(out.as_deref(), &recurrence_to_json(op), &table)
        }
        Command::Eval {
            input,
            t_max,
            samples,
            ladder,
            exact,
            exact_limit,
            bits,
            no_double_check,
            out,
        } => {
            let op = recurrence_from_json(&ctx.read(input)?)?;
            let spec = ProblemSpec::new(op.n, op.r)?;
            let wanted: Vec<u64> = match ladder {
                Some(t0) => geometric_ladder(*t0, *t_max),
                None if samples.is_empty() => vec![*t_max],
                None => samples.clone(),
            };
            let result = if *exact {
                let mut all = extend_exact_with_limit(&op, *t_max, *exact_limit)?;
                all.values.retain(|t, _| wanted.contains(t));
                all
            } else {
                let policy = PrecisionPolicy {
                    double_check: !no_double_check,
                    ..PrecisionPolicy::new(*bits, true)?
                };
                extend_float(&op, *t_max, policy, &wanted)?
            };
            let table = samples_table(&result);
            ctx.finish(out.as_deref(), &samples_to_json(spec, &result, *bits), &table)?;
            precision_gate(&result)
        }
        Command::Cconst { input, ladder, out } => {
            let text = ctx.read(input)?;
            let (spec, fit) = fit_artifact(&text, ladder)?;
            let rows = [compare_report(spec, &fit)];
            let table = format!("{}{}", comparison_table(&rows), fit_table(&fit));
            ctx.finish(out.as_deref(), &comparisons_to_json(&rows), &table)
        }
        Command::Compare { inputs, ladder, out } => {
            let mut rows = Vec::with_capacity(inputs.len());
            for path in inputs {
                let text = ctx.read(path)?;
                let (spec, fit) = fit_artifact(&text, ladder)?;
                rows.push(compare_report(spec, &fit));
            }
            ctx.finish(out.as_deref(), &comparisons_to_json(&rows), &comparison_table(&rows))
        }
        Command::Simulate {
            spec: s,
            rounds,
            samples,
            seed,
            out,
        } => {
            let config = SimConfig {
                spec: spec(s)?,
                rounds: *rounds,
                samples: *samples,
                seed: *seed,
            };
            let result = sim::run(&config)?;
            let mut table = format!(
                "mean max {:.9}  (centered {:.9})  std error {:.3e}  over {} replications\n",
                result.mean_max,
                result.centered(&config),
                result.std_error,
                config.samples
            );
            for (m, c) in &result.histogram {
                let _ = writeln!(table, "{m:>8}  {c:>10}");
            }
            ctx.finish(out.as_deref(), &sim_result_to_json(&config, &result), &table)
        }
        Command::Heuristic { spec: s } => {
            let spec = spec(s)?;
            let c = heuristic_constant(spec)?;
            let artifact = to_canonical_string(json!({
                "n": spec.n,
                "r": spec.r,
                "C_heuristic": format!("{c:.12}"),
            }));
            ctx.finish(None, &artifact, &format!("C_heuristic({}, {}) = {c:.12}\n", spec.n, spec.r))
        }
        Command::Pipeline {
            spec: s,
            terms,
            max_terms,
            max_order,
            max_degree,
            holdout,
            ladder,
            out_dir,
        } => {
            let spec = spec(s)?;
            let options = PipelineOptions {
                terms: *terms,
                max_terms: *max_terms,
                max_order: *max_order,
                max_degree: *max_degree,
                holdout: *holdout,
            };
            pipeline(&mut ctx, spec, &options, ladder, out_dir.as_deref())
        }
    }
}

fn guess(
    seq: &RationalSequence,
    max_order: usize,
    max_degree: usize,
    holdout: usize,
    solver: SolverArg,
) -> CliResult<GuessReport> {
    let options = FitOptions {
        solver: match solver {
            SolverArg::Exact => Solver::Exact,
            SolverArg::Modular => Solver::Modular,
            SolverArg::Auto => Solver::Auto,
        },
        ..FitOptions::default()
    };
    let report = search_with(seq, max_order, max_degree, holdout, &options)?;
    if report.operator.is_none() {
        return Err(CliError::Exhausted {
            max_order,
            max_degree,
            trace: trace_table(&report),
        });
    }
    Ok(report)
}

fn precision_gate(result: &EvaluationResult) -> CliResult<()> {
    let alarms = result.precision_alarms();
    if alarms.is_empty() {
        Ok(())
    } else {
        Err(CliError::Precision(alarms))
    }
}

fn corrections(arg: CorrectionsArg) -> Corrections {
    match arg {
        CorrectionsArg::Integer => Corrections::Integer,
        CorrectionsArg::Half => Corrections::HalfInteger,
    }
}

/// `n * 2^k` for the largest `k` keeping it at most 1024.
pub fn default_t0(spec: ProblemSpec) -> u64 {
    let n = spec.n as u64;
    let mut t0 = n;
    while t0 * 2 <= 1024 {
        t0 *= 2;
    }
    t0
}

enum Artifact {
    Recurrence(RecurrenceOperator),
    Sequence(RationalSequence),
    Samples(ProblemSpec, Vec<SampleRecord>),
}

fn classify(text: &str) -> CliResult<Artifact> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if value.get("polys").is_some() {
        Ok(Artifact::Recurrence(recurrence_from_json(text)?))
    } else if value.get("values").is_some() {
        Ok(Artifact::Sequence(sequence_from_json(text)?))
    } else if value.get("samples").is_some() {
        let (spec, _, samples) = samples_from_json(text)?;
        Ok(Artifact::Samples(spec, samples))
    } else {
        Err(CliError::Input(
            "expected a recurrence, sequence or samples file".into(),
        ))
    }
}

fn evaluate_ladder(op: &RecurrenceOperator, ladder: &LadderArgs) -> CliResult<(Vec<u64>, EvaluationResult)> {
    let spec = ProblemSpec::new(op.n, op.r)?;
    let points = geometric_ladder(ladder.t0.unwrap_or_else(|| default_t0(spec)), ladder.t_max);
    let last = *points.last().ok_or(Error::NonGeometricLadder)?;
    let result = extend_float(op, last, PrecisionPolicy::new(ladder.bits, true)?, &points)?;
    precision_gate(&result)?;
    Ok((points, result))
}

fn fit_artifact(text: &str, ladder: &LadderArgs) -> CliResult<(ProblemSpec, AsymptoticFit)> {
    let bits = ladder.bits;
    let corr = corrections(ladder.corrections);
    let (spec, samples) = match classify(text)? {
        Artifact::Recurrence(op) => {
            let spec = ProblemSpec::new(op.n, op.r)?;
            let (points, result) = evaluate_ladder(&op, ladder)?;
            let samples = points.iter().map(|t| (*t, result.values[t].to_fixed(bits))).collect();
            (spec, samples)
        }
        Artifact::Sequence(seq) => {
            let spec = seq.spec()?;
            let points = geometric_ladder(ladder.t0.unwrap_or(spec.n as u64), seq.len() as u64);
            let samples = points
                .iter()
                .map(|&t| (t, Fixed::from_rational(seq.get(t).expect("ladder within sequence"), bits)))
                .collect();
            (spec, samples)
        }
        Artifact::Samples(spec, records) => {
            let first = ladder
                .t0
                .or_else(|| records.first().map(|s| s.t))
                .ok_or(Error::NonGeometricLadder)?;
            let last = records.last().map_or(0, |s| s.t);
            let mut samples = Vec::new();
            for t in geometric_ladder(first, last) {
                let record = records
                    .iter()
                    .find(|s| s.t == t)
                    .ok_or(Error::NonGeometricLadder)?;
                samples.push((t, record.to_fixed(bits)));
            }
            (spec, samples)
        }
    };
    Ok((spec, estimate_constant_with(&samples, ladder.depth, corr)?))
}

fn sequence_table(seq: &RationalSequence) -> String {
    let mut out = format!("{:>6}  {:>32}  {:>14}\n", "T", "A(T)", "decimal");
    for (i, v) in seq.values.iter().enumerate() {
        let _ = writeln!(out, "{:>6}  {:>32}  {:>14.10}", i + 1, v.to_string(), approx(v));
    }
    out
}

fn samples_table(result: &EvaluationResult) -> String {
    let mut out = format!("{:>10}  {:>26}  {:>6}\n", "T", "A(T)", "digits");
    for (t, v) in &result.values {
        let digits = result
            .agreed_digits
            .get(t)
            .map_or_else(|| "exact".to_string(), |d| d.to_string());
        let _ = writeln!(out, "{t:>10}  {:>26}  {digits:>6}", v.to_fixed(128).to_decimal(20));
    }
    out
}

fn fit_table(fit: &AsymptoticFit) -> String {
    let mut out = format!("{:>10}  {:>22}\n", "T", "A(T)/sqrt(T)");
    for (t, s) in &fit.samples {
        let _ = writeln!(out, "{t:>10}  {:>22}", s.to_decimal(18));
    }
    out
}

fn operator_lines(op: &RecurrenceOperator) -> Vec<String> {
    op.polys
        .iter()
        .enumerate()
        .map(|(i, p)| format!("p{i}(T) = {p}"))
        .collect()
}

fn trace_table(report: &GuessReport) -> String {
    let mut out = format!("{:>6} {:>6}  outcome\n", "order", "degree");
    for e in &report.search_trace {
        let outcome = match &e.outcome {
            FitOutcome::Found { kernel_dimension } => format!("found (kernel dimension {kernel_dimension})"),
            FitOutcome::TrivialKernel => "trivial kernel".into(),
            FitOutcome::HoldoutFailed { kernel_dimension } => {
                format!("holdout failed (kernel dimension {kernel_dimension})")
            }
            FitOutcome::InsufficientTerms { required } => format!("needs {required} terms"),
            FitOutcome::Unreconstructed => "modular reconstruction failed".into(),
        };
        let _ = writeln!(out, "{:>6} {:>6}  {outcome}", e.order, e.degree);
    }
    out
}

fn guess_table(report: &GuessReport) -> String {
    let op = report.operator.as_ref().expect("certified operator");
    let mut out = format!(
        "order {}, degree {}, valid for T > {}; fitted on {} terms, verified on {}\n",
        op.order(),
        op.degree(),
        op.valid_from,
        report.terms_used,
        report.terms_verified
    );
    for line in operator_lines(op) {
        let _ = writeln!(out, "  {line}");
    }
    out
}

fn stabilization_text(s: Option<Stabilization>) -> String {
    match s {
        None => "exact".into(),
        Some(Stabilization::Guard { extra_bits }) => format!("guard bits {extra_bits}"),
        Some(Stabilization::Deflation {
            root,
            interval,
            extra_bits,
        }) => format!("deflation of root {root:.6} every {interval} steps, guard bits {extra_bits}"),
    }
}

struct PipelineOptions {
    terms: usize,
    max_terms: usize,
    max_order: usize,
    max_degree: usize,
    holdout: usize,
}

fn pipeline(
    ctx: &mut Ctx<'_>,
    spec: ProblemSpec,
    options: &PipelineOptions,
    ladder: &LadderArgs,
    out_dir: Option<&Path>,
) -> CliResult<()> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let save = |ctx: &Ctx<'_>, name: &str, text: &str| -> CliResult<()> {
        match out_dir {
            Some(dir) => ctx.write(&dir.join(name), text),
            None => Ok(()),
        }
    };

    if spec.is_degenerate() {
        let seq = a_sequence_with(spec, options.terms as u64, &ctx.engine())?;
        save(ctx, "sequence.json", &sequence_to_json(&seq))?;
        let report = to_canonical_string(json!({
            "n": spec.n,
            "r": spec.r,
            "degenerate": true,
            "terms": seq.len(),
            "note": "every round fills every bin, so A(T) = 0 for all T and there is no nontrivial constant",
        }));
        save(ctx, "report.json", &report)?;
        let table = format!(
            "(n, r) = ({}, {}): degenerate, A(T) = 0 for every T (checked on {} terms); no nontrivial constant\n",
            spec.n,
            spec.r,
            seq.len()
        );
        return ctx.finish(None, &report, &table);
    }

    let mut terms = options.terms.max(1);
    let (seq, report) = loop {
        let seq = a_sequence_with(spec, terms as u64, &ctx.engine())?;
        match guess(&seq, options.max_order, options.max_degree, options.holdout, SolverArg::Auto) {
            Ok(report) => break (seq, report),
            Err(CliError::Exhausted { .. }) if terms < options.max_terms => {
                terms = (terms * 2).min(options.max_terms);
            }
            Err(e) => return Err(e),
        }
    };
    let op = report.operator.clone().expect("certified operator");
    save(ctx, "sequence.json", &sequence_to_json(&seq))?;
    save(ctx, "recurrence.json", &recurrence_to_json(&op))?;

    let (points, result) = evaluate_ladder(&op, ladder)?;
    save(ctx, "samples.json", &samples_to_json(spec, &result, ladder.bits))?;
    let samples: Vec<(u64, Fixed)> = points
        .iter()
        .map(|t| (*t, result.values[t].to_fixed(ladder.bits)))
        .collect();
    let fit = estimate_constant_with(&samples, ladder.depth, corrections(ladder.corrections))?;
    let comparison: Comparison = compare_report(spec, &fit);

    let artifact = to_canonical_string(json!({
        "n": spec.n,
        "r": spec.r,
        "degenerate": false,
        "terms": seq.len(),
        "operator": {
            "order": op.order(),
            "degree": op.degree(),
            "validFrom": op.valid_from,
            "polys": operator_lines(&op),
            "termsUsed": report.terms_used,
            "termsVerified": report.terms_verified,
        },
        "evaluation": {
            "tMax": points.last(),
            "bits": ladder.bits,
            "minAgreedDigits": result.min_agreed_digits(),
            "stabilization": stabilization_text(result.stabilization),
        },
        "ladder": points,
        "depth": ladder.depth,
        "comparison": comparison_value(&comparison),
    }));
    save(ctx, "report.json", &artifact)?;

    let mut table = format!("(n, r) = ({}, {})\nexact terms        {}\n", spec.n, spec.r, seq.len());
    let _ = write!(table, "recurrence         {}", guess_table(&report));
    let _ = writeln!(
        table,
        "evaluation         T <= {} at {} bits, min agreed digits {}, {}",
        points.last().copied().unwrap_or(0),
        ladder.bits,
        result.min_agreed_digits().unwrap_or(0),
        stabilization_text(result.stabilization)
    );
    table.push_str(&comparison_table(std::slice::from_ref(&comparison)));
    ctx.finish(None, &artifact, &table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_gate_flags_weak_samples() {
        let mut result = EvaluationResult::default();
        result.agreed_digits.insert(100, 40);
        assert!(precision_gate(&result).is_ok());
        result.agreed_digits.insert(200, 5);
        let err = precision_gate(&result).unwrap_err();
        assert_eq!(err.exit_code(), 5);
        assert!(matches!(err, CliError::Precision(ref t) if t == &vec![200]));
    }

    #[test]
    fn default_ladder_start() {
        let t0 = |n, r| default_t0(ProblemSpec::new(n, r).unwrap());
        assert_eq!(t0(2, 1), 1024);
        assert_eq!(t0(3, 1), 768);
        assert_eq!(t0(4, 2), 1024);
        assert_eq!(t0(5, 1), 640);
    }
}
