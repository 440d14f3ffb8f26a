//! Subcommand implementations.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use fairpca_core::ingest::apply_record;
use fairpca_core::losses::REPORT_HEADER;
use fairpca_core::mw::TRACE_HEADER;
use fairpca_core::{embed, enforce_width, fit, fit_vanilla, load_csv, sweep, Dataset, Method, Report};
use ndarray::Array2;

use crate::args::{AuditArgs, Cli, Command, FitArgs, SolverArgs, SynthArgs, TransformArgs};
use crate::error::{CliError, CliResult};
use crate::model::ModelFile;
use crate::synth::{generate, GROUP_COLUMN};

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(&args, stdout),
        Command::Fit(args) => cmd_fit(&args, stdout),
        Command::Transform(args) => cmd_transform(&args, stdout),
        Command::Audit(args) => cmd_audit(&args, stdout),
    }
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn load_dataset(input: &Path, group_col: &str, solver: &SolverArgs) -> CliResult<Dataset> {
    let dataset: Dataset = load_csv(input, group_col, solver.scale)?;
    Ok(if solver.no_width_norm {
        dataset
    } else {
        enforce_width(&dataset)?
    })
}

fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let data = generate(args.preset, args.seed);
    let mut w = csv_writer(&args.out)?;
    let mut header = data.columns.clone();
    header.push(GROUP_COLUMN.to_string());
    w.write_record(&header)?;
    for (label, point) in &data.rows {
        let mut record: Vec<String> = point.iter().map(f64::to_string).collect();
        record.push(label.clone());
        w.write_record(&record)?;
    }
    finish(w, &args.out)?;
    writeln!(stdout, "wrote {} rows to {}", data.rows.len(), args.out.display()).ok();
    Ok(())
}

fn cmd_fit(args: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let dataset = load_dataset(&args.input, &args.group_col, &args.solver)?;
    let result = fit(&dataset, args.dims, &args.solver.config())?;
    let model = ModelFile::from_fit(&result);
    model.save(&args.out)?;
    if let Some(path) = &args.trace {
        let mut w = csv_writer(path)?;
        w.write_record(TRACE_HEADER)?;
        for record in result.sdp.trace_records() {
            w.write_record(&record)?;
        }
        finish(w, path)?;
    }

    let mut summary = format!(
        "n={} k={} d={} rank={} method={}\n\
         objective={} vanilla_max_loss={}\n\
         iterations={} gap={} converged={}\n",
        model.n,
        model.k,
        model.d,
        model.rank(),
        model.method,
        model.objective,
        result.vanilla_report.max_avg_loss(),
        model.iterations,
        model.gap,
        model.converged,
    );
    for (label, loss) in model.group_labels.iter().zip(&model.per_group_loss) {
        summary.push_str(&format!("  group {label}: avg_loss={loss}\n"));
    }
    stdout.write_all(summary.as_bytes()).ok();

    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "gap {} after {} oracle calls; model written to {} with converged=false",
            model.gap,
            model.iterations,
            args.out.display()
        )));
    }
    Ok(())
}

/// Reads the model's columns, by name, from a CSV with a header row. Other
/// columns are ignored.
fn read_model_columns(path: &Path, model: &ModelFile) -> CliResult<Array2<f64>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Array2::zeros((0, model.n)));
    }
    let idx = model
        .columns
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                CliError::Data(format!(
                    "input lacks column {name:?}; model expects {:?}",
                    model.columns
                ))
            })
        })
        .collect::<CliResult<Vec<usize>>>()?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        for &j in &idx {
            let field = record.get(j).unwrap_or("").trim();
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!(
                    "row {}, column {:?}: cannot parse {field:?} as a number",
                    i + 2,
                    &headers[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("row {}: non-finite value {field:?}", i + 2)));
            }
            values.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, model.n), values).map_err(|e| CliError::Data(e.to_string()))
}

/// Embeds raw rows with a model: stored preprocessing, then the projection.
pub fn transform_rows(model: &ModelFile, raw: &Array2<f64>) -> CliResult<Array2<f64>> {
    let projection = model.projection()?;
    let x = apply_record(raw.view(), &model.center(), &model.scale_record)?;
    Ok(embed(x.view(), &projection)?)
}

fn cmd_transform(args: &TransformArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let raw = read_model_columns(&args.input, &model)?;
    let z = transform_rows(&model, &raw)?;
    let mut w = csv_writer(&args.out)?;
    w.write_record((1..=model.rank()).map(|j| format!("u{j}")))?;
    for row in z.rows() {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    finish(w, &args.out)?;
    writeln!(stdout, "embedded {} rows into {} coordinates", z.nrows(), model.rank()).ok();
    Ok(())
}

fn cmd_audit(args: &AuditArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let dataset = load_dataset(&args.input, &args.group_col, &args.solver)?;
    let dims = args.dims.dims();
    let n = dataset.n();
    if args.dims.end > n {
        return Err(CliError::Usage(format!(
            "dimension range {}..{} exceeds the {n} data columns",
            args.dims.start, args.dims.end
        )));
    }
    let want_fair = args.methods.contains(&Method::Fair);
    if want_fair && dataset.k() < 2 {
        return Err(CliError::Usage(format!(
            "fair audit needs at least 2 groups, found {}",
            dataset.k()
        )));
    }

    let mut reports: Vec<(usize, Option<Report>, Option<Report>)> = Vec::new();
    let mut failures = Vec::new();
    if want_fair {
        for entry in sweep(&dataset, &dims, &args.solver.config())? {
            if let Some(err) = &entry.error {
                failures.push(format!("d={}: {err}", entry.d));
            }
            reports.push((entry.d, Some(entry.vanilla), entry.fair));
        }
    } else {
        for &d in &dims {
            reports.push((d, Some(fit_vanilla(&dataset, d)?.1), None));
        }
    }

    let mut w = csv_writer(&args.out)?;
    w.write_record(REPORT_HEADER)?;
    let mut rows = 0;
    for (_, vanilla, fair) in &reports {
        for method in &args.methods {
            let report = match method {
                Method::Vanilla => vanilla.as_ref(),
                Method::Fair => fair.as_ref(),
            };
            for record in report.map(Report::csv_records).unwrap_or_default() {
                w.write_record(&record)?;
                rows += 1;
            }
        }
    }
    finish(w, &args.out)?;
    writeln!(stdout, "wrote {rows} report rows for d in {}..{}", args.dims.start, args.dims.end).ok();

    if !failures.is_empty() {
        return Err(CliError::NotConverged(failures.join("; ")));
    }
    Ok(())
}
