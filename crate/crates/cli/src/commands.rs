use std::fmt::Write as _;
use std::path::Path;

use matmult_core::asymptotic::predict_to_order;
use matmult_core::jsr::{gripenberg, rho_ladder, JsrOptions};
use matmult_core::lift::{
    build_transfer, char_poly, exact_moment_sequence, minimal_recurrence_length, verify_recurrence,
};
use matmult_core::moments::{exact_second_moment_at, mc_moment_at};
use matmult_core::sieve::{build_sieve, HIST_LEN};
use matmult_core::{
    expansion_constants, spectral_decompose, AsymptoticExpansion, EulerProducts, Field, MatrixLaw,
    MomentSequence,
};
use serde::Serialize;

use crate::config::{parse_grid, Cli, Command, Flavor, Format, RunConfig};
use crate::output::{cell, csv_header_comment, emit, emit_json, envelope};
use crate::Failure;

const HANKEL_TOL: f64 = 1e-10;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = &cli.cfg;
    if cfg.format == Format::Csv && !matches!(cli.command, Command::SieveStats | Command::Report) {
        return Err(Failure::Input(
            "CSV output is only available for sieve-stats and report".into(),
        ));
    }
    match cli.command {
        Command::Validate => validate(cfg),
        Command::Operator => operator(cfg),
        Command::Recurrence => recurrence(cfg),
        Command::Constants => constants(cfg),
        Command::Exact => exact(cfg),
        Command::Mc => mc(cfg),
        Command::Jsr => jsr(cfg),
        Command::Ladder => ladder(cfg),
        Command::SieveStats => sieve_stats(cfg),
        Command::Report => report(cfg),
    }
}

fn out_path(cfg: &RunConfig) -> Option<&Path> {
    cfg.out.as_deref()
}

fn write_json(command: Command, cfg: &RunConfig, result: impl Serialize) -> Result<(), Failure> {
    emit_json(out_path(cfg), &envelope(command, cfg, result)?)
}

fn load_law(cfg: &RunConfig) -> Result<MatrixLaw, Failure> {
    let path = cfg
        .law
        .as_ref()
        .ok_or_else(|| Failure::Input("--law is required".into()))?;
    Ok(MatrixLaw::load(path)?)
}

fn flavor(cfg: &RunConfig, law: &MatrixLaw) -> Field {
    match cfg.flavor {
        Some(Flavor::Real) => Field::Real,
        Some(Flavor::Complex) => Field::Complex,
        None => law.field(),
    }
}

fn require_x(cfg: &RunConfig) -> Result<u64, Failure> {
    cfg.x
        .ok_or_else(|| Failure::Input("--x is required".into()))
}

/// Points from `--x-grid`, else the single `--x`.
fn x_points(cfg: &RunConfig) -> Result<Vec<u64>, Failure> {
    match (&cfg.x_grid, cfg.x) {
        (Some(_), Some(_)) => Err(Failure::Input(
            "give either --x or --x-grid, not both".into(),
        )),
        (Some(grid), None) => parse_grid(grid).map_err(Failure::Input),
        (None, Some(x)) => Ok(vec![x]),
        (None, None) => Err(Failure::Input("--x or --x-grid is required".into())),
    }
}

fn sequence_for(
    law: &MatrixLaw,
    cfg: &RunConfig,
    k: usize,
) -> Result<(matmult_core::LiftedOperator, MomentSequence), Failure> {
    let op = build_transfer(law, k, flavor(cfg, law))?;
    let n_max = cfg.n_max.unwrap_or((2 * op.l + 10).max(HIST_LEN));
    let seq = exact_moment_sequence(&op, n_max)?;
    Ok((op, seq))
}

/// Second-moment expansion at the configured order.
fn expansion(
    law: &MatrixLaw,
    cfg: &RunConfig,
) -> Result<(MomentSequence, AsymptoticExpansion), Failure> {
    let (op, seq) = sequence_for(law, cfg, 1)?;
    let spec = spectral_decompose(&op, &seq)?;
    let products = EulerProducts::new(cfg.prime_bound)?;
    let exp = expansion_constants(&spec, cfg.order, &products)?;
    Ok((seq, exp))
}

fn predicted(exp: &AsymptoticExpansion, x: u64, order: usize) -> Result<Option<f64>, Failure> {
    if x < 2 || order > exp.order {
        return Ok(None);
    }
    Ok(Some(predict_to_order(exp, x as f64, order)?))
}

#[derive(Serialize)]
struct LawSummary {
    dim: usize,
    atoms: usize,
    field: Field,
    #[serde(flatten)]
    report: matmult_core::ValidationReport,
}

fn validate(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let report = law.validate(matmult_core::law::MEAN_ZERO_TOL);
    let centered = report.is_mean_zero;
    write_json(
        Command::Validate,
        cfg,
        LawSummary {
            dim: law.dim(),
            atoms: law.len(),
            field: law.field(),
            report,
        },
    )?;
    if cfg.require_mean_zero && !centered {
        return Err(Failure::Policy("law is not centered (E X ≠ 0)".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct OperatorDump {
    operator: matmult_core::LiftedOperator,
    char_poly: matmult_core::CharPoly,
}

fn operator(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let operator = build_transfer(&law, cfg.k, flavor(cfg, &law))?;
    let char_poly = char_poly(&operator)?;
    write_json(
        Command::Operator,
        cfg,
        OperatorDump {
            operator,
            char_poly,
        },
    )
}

#[derive(Serialize)]
struct RecurrenceDump {
    sequence: MomentSequence,
    char_poly: matmult_core::CharPoly,
    residuals: Vec<f64>,
    max_residual: f64,
    minimal_length: usize,
    spectral: matmult_core::SpectralData,
}

fn recurrence(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let (op, sequence) = sequence_for(&law, cfg, cfg.k)?;
    let char_poly = char_poly(&op)?;
    let residuals = verify_recurrence(&sequence, &char_poly)?;
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let minimal_length = minimal_recurrence_length(&sequence, HANKEL_TOL);
    let spectral = spectral_decompose(&op, &sequence)?;
    write_json(
        Command::Recurrence,
        cfg,
        RecurrenceDump {
            sequence,
            char_poly,
            residuals,
            max_residual,
            minimal_length,
            spectral,
        },
    )
}

fn constants(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let (_, exp) = expansion(&law, cfg)?;
    write_json(Command::Constants, cfg, exp)
}

#[derive(Serialize)]
struct ExactRow {
    x: u64,
    k: usize,
    exact: f64,
    predicted: Option<f64>,
}

fn require_centered(law: &MatrixLaw) -> Result<(), Failure> {
    if law.validate(matmult_core::law::MEAN_ZERO_TOL).is_mean_zero {
        Ok(())
    } else {
        Err(Failure::Policy(
            "the exact second moment needs a centered law (E X = 0)".into(),
        ))
    }
}

fn exact(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.k != 1 {
        return Err(Failure::Input(
            "exact moments are available for k = 1 only".into(),
        ));
    }
    let law = load_law(cfg)?;
    require_centered(&law)?;
    let xs = x_points(cfg)?;
    let (seq, exp) = expansion(&law, cfg)?;
    let mut rows = Vec::with_capacity(xs.len());
    if let Some(&x_max) = xs.iter().max() {
        let table = build_sieve(x_max)?;
        for &x in &xs {
            rows.push(ExactRow {
                x,
                k: 1,
                exact: exact_second_moment_at(&table, x, &seq)?,
                predicted: predicted(&exp, x, exp.order)?,
            });
        }
    }
    write_json(Command::Exact, cfg, rows)
}

fn mc(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let x = require_x(cfg)?;
    let table = build_sieve(x)?;
    let mut report = mc_moment_at(&law, &table, x, cfg.k, cfg.trials, cfg.seed)?;
    if cfg.k == 1 && law.validate(matmult_core::law::MEAN_ZERO_TOL).is_mean_zero {
        let (seq, exp) = expansion(&law, cfg)?;
        report.exact = Some(exact_second_moment_at(&table, x, &seq)?);
        report.predicted = predicted(&exp, x, exp.order)?;
    }
    write_json(Command::Mc, cfg, report)
}

fn jsr(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let opts = JsrOptions {
        delta: cfg.delta,
        max_depth: cfg.max_depth,
        budget: cfg.budget,
    };
    let bounds = gripenberg(law.atoms(), opts)?;
    write_json(Command::Jsr, cfg, bounds)
}

fn ladder(cfg: &RunConfig) -> Result<(), Failure> {
    let law = load_law(cfg)?;
    let ladder = rho_ladder(&law, cfg.k_max, cfg.n_probe)?;
    write_json(Command::Ladder, cfg, ladder)
}

fn sieve_stats(cfg: &RunConfig) -> Result<(), Failure> {
    let table = build_sieve(require_x(cfg)?)?;
    let stats = table.stats();
    match cfg.format {
        Format::Json => write_json(Command::SieveStats, cfg, stats),
        Format::Csv => {
            let mut text = csv_header_comment(Command::SieveStats, cfg);
            text.push_str("\nomega,count\n");
            for (r, count) in stats.hist.iter().enumerate() {
                let _ = writeln!(text, "{r},{count}");
            }
            emit(out_path(cfg), &text)
        }
    }
}

pub const REPORT_COLUMNS: &str =
    "x,exact,pred_N1,pred_N2,mc,mc_stderr,ratio_exact_over_pred_N2,flags";

/// One CSV row; missing cells are explained in `flags`.
struct ReportRow {
    x: u64,
    exact: Option<f64>,
    pred: [Option<f64>; 2],
    mc: Option<(f64, f64)>,
    flags: Vec<&'static str>,
}

impl ReportRow {
    fn line(&self) -> String {
        let ratio = match (self.exact, self.pred[1]) {
            (Some(e), Some(p)) if p != 0.0 => Some(e / p),
            _ => None,
        };
        [
            self.x.to_string(),
            cell(self.exact),
            cell(self.pred[0]),
            cell(self.pred[1]),
            cell(self.mc.map(|m| m.0)),
            cell(self.mc.map(|m| m.1)),
            cell(ratio),
            self.flags.join(";"),
        ]
        .join(",")
    }
}

fn report(cfg: &RunConfig) -> Result<(), Failure> {
    let xs = match &cfg.x_grid {
        Some(grid) => parse_grid(grid).map_err(Failure::Input)?,
        None => x_points(cfg)?,
    };
    let mut text = csv_header_comment(Command::Report, cfg);
    text.push('\n');
    text.push_str(REPORT_COLUMNS);
    text.push('\n');
    if xs.is_empty() {
        return emit(out_path(cfg), &text);
    }
    if cfg.k != 1 {
        return Err(Failure::Input(
            "report covers the second moment only (k = 1)".into(),
        ));
    }
    let law = load_law(cfg)?;
    let centered = law.validate(matmult_core::law::MEAN_ZERO_TOL).is_mean_zero;
    let (seq, exp) = expansion(&law, cfg)?;

    let sieve_cap = matmult_core::sieve::DEFAULT_SIEVE_CAP;
    let sieve_x = xs.iter().copied().filter(|&x| x <= sieve_cap).max();
    let table = sieve_x.map(build_sieve).transpose()?;

    for &x in &xs {
        let mut row = ReportRow {
            x,
            exact: None,
            pred: [predicted(&exp, x, 1)?, predicted(&exp, x, 2)?],
            mc: None,
            flags: Vec::new(),
        };
        if x < 2 {
            row.flags.push("x_below_2");
        } else if exp.order < 2 {
            row.flags.push("order_1");
        }
        match table.as_ref().filter(|_| x <= sieve_cap) {
            None => row.flags.push("sieve_cap"),
            Some(table) => {
                if centered {
                    row.exact = Some(exact_second_moment_at(table, x, &seq)?);
                } else {
                    row.flags.push("not_centered");
                }
                if x > cfg.mc_max_x {
                    row.flags.push("mc_cap");
                } else {
                    let r = mc_moment_at(&law, table, x, 1, cfg.trials, cfg.seed)?;
                    row.mc = Some((r.mc_estimate, r.mc_stderr));
                }
            }
        }
        text.push_str(&row.line());
        text.push('\n');
    }
    emit(out_path(cfg), &text)
}
