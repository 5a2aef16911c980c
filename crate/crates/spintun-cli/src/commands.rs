use crate::config::{OutputFormat, RunConfig};
use crate::output::{emit, Cell, Table};
use num_complex::Complex64;
use rayon::prelude::*;
use spintun::monodromy::{self, LoopKind, LoopSpec};
use spintun::semiclassics::{self, QuantizationCoefficient, SplittingModel};
use spintun::spinmodel::{self, QuenchScanOptions, Spin};
use spintun::surface::Moduli;
use spintun::verification::{run_checks, VerifyOptions};

pub enum CmdError {
    Config(String),
    Numeric(String),
    VerificationFailed,
}

impl From<spintun::Error> for CmdError {
    fn from(e: spintun::Error) -> CmdError {
        match e {
            spintun::Error::InvalidSpin(_)
            | spintun::Error::SpinTooLarge(_)
            | spintun::Error::InvalidAnisotropy { .. }
            | spintun::Error::SpinTooSmallForMapping(_)
            | spintun::Error::BadTolerance(_)
            | spintun::Error::InvalidInput(_) => CmdError::Config(e.to_string()),
            other => CmdError::Numeric(other.to_string()),
        }
    }
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    if cfg.h_points == 1 {
        return vec![cfg.h_min];
    }
    (0..cfg.h_points)
        .map(|k| cfg.h_min + (cfg.h_max - cfg.h_min) * k as f64 / (cfg.h_points as f64 - 1.0))
        .collect()
}

fn render(table: &Table, cfg: &RunConfig) -> Result<(), CmdError> {
    let text = match cfg.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(),
    };
    emit(&text, cfg.out.as_deref()).map_err(CmdError::Config)
}

/// Energy levels versus field: E_n and their dimensionless images, with the
/// critical-field marker column.
pub fn cmd_levels(cfg: &RunConfig) -> Result<(), CmdError> {
    let j = Spin::new(cfg.j).map_err(CmdError::from)?;
    if cfg.j < 1.0 {
        return Err(CmdError::Config("levels needs J >= 1 (dimensionless map undefined)".into()));
    }
    let dim = j.dim();
    let hc = spintun::surface::critical_field(cfg.lambda, 0.0);
    let mut header: Vec<String> = vec!["h".into()];
    for n in 0..dim {
        header.push(format!("E_{n}"));
    }
    for n in 0..dim {
        header.push(format!("eps_{n}"));
    }
    header.push("h_c".into());
    let mut table = Table { header, rows: Vec::new() };
    let rows: Vec<Result<Vec<Cell>, spintun::Error>> = grid(cfg)
        .par_iter()
        .map(|&h| {
            let d = spinmodel::DimensionlessParams { lambda: cfg.lambda, h, epsilon: 0.0 };
            let p = spinmodel::realize(&d, j, cfg.k1)?;
            let s = spinmodel::eigensystem(&spinmodel::build_hamiltonian(&p))?;
            let mut row = vec![Cell::Float(h)];
            for e in &s.eigenvalues {
                row.push(Cell::Float(*e));
            }
            for e in &s.eigenvalues {
                row.push(Cell::Float(spinmodel::energy_to_epsilon(*e, &p)?));
            }
            row.push(Cell::Float(hc));
            Ok(row)
        })
        .collect();
    for r in rows {
        table.push(r.map_err(CmdError::from)?);
    }
    render(&table, cfg)
}

/// ln Delta versus field for each requested level: diagonalization (in
/// double-double precision so the quench dips resolve) against the fitted
/// splitting model. Quench fields are inserted into the grid so the dips
/// are sampled exactly.
pub fn cmd_splitting(cfg: &RunConfig) -> Result<(), CmdError> {
    let j = Spin::new(cfg.j).map_err(CmdError::from)?;
    let lam = cfg.lambda;
    let mut hs = grid(cfg);
    for q in semiclassics::quench_fields(cfg.j, lam, 40).map_err(CmdError::from)? {
        if q >= cfg.h_min && q <= cfg.h_max {
            hs.push(q);
        }
    }
    hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    hs.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let quenches = semiclassics::quench_fields(cfg.j, lam, 40).map_err(CmdError::from)?;
    let spacing = (1.0 - lam).sqrt() / cfg.j;

    let mut models = Vec::new();
    for &n in &cfg.levels {
        let d0 = spinmodel::splitting_dd(j, lam, n, 0.0).map_err(CmdError::from)?.to_f64();
        models.push(SplittingModel::fit_at_zero_field(d0, cfg.j, lam, n).map_err(CmdError::from)?);
    }
    let levels = cfg.levels.clone();
    let rows: Vec<Result<Vec<Vec<Cell>>, spintun::Error>> = hs
        .par_iter()
        .map(|&h| {
            let mut out = Vec::new();
            for (model, &n) in models.iter().zip(&levels) {
                let dn = spinmodel::splitting_dd(j, lam, n, h)?.abs().to_f64();
                let dm = model.splitting(lam, h)?;
                let near_quench = quenches.iter().any(|q| (h - q).abs() < 1e-12);
                out.push(vec![
                    Cell::Float(h),
                    Cell::Int(n as i64),
                    Cell::Float(dn.max(f64::MIN_POSITIVE).ln()),
                    Cell::Float(dm.max(f64::MIN_POSITIVE).ln()),
                    Cell::Int(near_quench as i64),
                ]);
            }
            Ok(out)
        })
        .collect();
    let mut table = Table::new(vec!["h", "n", "lnDelta_numeric", "lnDelta_model", "quench_flag"]);
    for r in rows {
        for row in r.map_err(CmdError::from)? {
            table.push(row);
        }
    }
    let _ = spacing;
    render(&table, cfg)
}

/// Quench fields per level: scan minima against the closed formula.
pub fn cmd_quench(cfg: &RunConfig) -> Result<(), CmdError> {
    let j = Spin::new(cfg.j).map_err(CmdError::from)?;
    let lam = cfg.lambda;
    let sq = (1.0 - lam).sqrt();
    let mut table =
        Table::new(vec!["n", "m", "h_scan", "h_formula", "suppression"]);
    for &n in &cfg.levels {
        let found = spinmodel::quench_scan(
            j,
            lam,
            (cfg.h_min.max(1e-4), cfg.h_max),
            n,
            QuenchScanOptions::default(),
        )
        .map_err(CmdError::from)?;
        let d0 = spinmodel::splitting_dd(j, lam, n, 0.0).map_err(CmdError::from)?.abs().to_f64();
        for h in found.iter() {
            let m_index = (h * cfg.j / sq - 0.5).round() as i64;
            let formula = sq * (m_index as f64 + 0.5) / cfg.j;
            // suppression evaluated at the formula field, where the exact
            // degeneracy sits
            let dq =
                spinmodel::splitting_dd(j, lam, n, formula).map_err(CmdError::from)?.abs().to_f64();
            table.push(vec![
                Cell::Int(n as i64),
                Cell::Int(m_index),
                Cell::Float(*h),
                Cell::Float(formula),
                Cell::Float(dq / d0),
            ]);
        }
    }
    render(&table, cfg)
}

/// Closed-form versus numeric-contour actions over the field grid.
pub fn cmd_actions(cfg: &RunConfig) -> Result<(), CmdError> {
    let tol = cfg.tol.unwrap_or(1e-8).clamp(1e-12, 1e-4);
    let lam = cfg.lambda;
    let n = cfg.levels[0];
    let mut table = Table::new(vec![
        "h",
        "epsilon",
        "s_cl_closed",
        "s_cl_numeric",
        "s_in_closed",
        "s_in_numeric",
        "re_s1_numeric",
        "im_s1_formula",
    ]);
    let rows: Vec<Result<Vec<Cell>, spintun::Error>> = grid(cfg)
        .par_iter()
        .map(|&h| {
            let eps = semiclassics::epsilon_n(n, cfg.j, lam, h)?;
            let m = Moduli::real(lam, h, eps);
            let set = semiclassics::ActionSet::numeric(&m, n, cfg.j, tol)?;
            let s_cl_cf = semiclassics::s_cl(eps, lam, h)?;
            let s_in_cf = if n == 0 {
                semiclassics::s_in_closed(lam, h, 0.0)?
            } else {
                semiclassics::s_in_excited(lam, h, n, cfg.j, QuantizationCoefficient::Replaced)?
            };
            Ok(vec![
                Cell::Float(h),
                Cell::Float(eps),
                Cell::Float(s_cl_cf),
                Cell::Float(set.s_cl.re),
                Cell::Float(s_in_cf),
                Cell::Float(set.s_in.re),
                Cell::Float(set.s1.re),
                Cell::Float(semiclassics::im_s1(n, cfg.j, lam, h)?),
            ])
        })
        .collect();
    for r in rows {
        table.push(r.map_err(CmdError::from)?);
    }
    render(&table, cfg)
}

/// Transport the instanton cycle around the critical moduli and report the
/// measured jumps against the predictions.
pub fn cmd_monodromy(cfg: &RunConfig) -> Result<(), CmdError> {
    let tol = cfg.tol.unwrap_or(1e-9).clamp(1e-12, 1e-4);
    let steps = cfg.steps;
    let cases: Vec<(&str, LoopSpec)> = vec![
        ("lambda", LoopSpec::new(LoopKind::Lambda, Moduli::real(0.5, 0.1, 0.0), steps)),
        (
            "one_minus_sqrt_lambda",
            LoopSpec::new(LoopKind::OneMinusSqrtLambda, Moduli::real(0.5, 0.0, 0.0), steps),
        ),
        (
            "one_plus_sqrt_lambda",
            LoopSpec::new(LoopKind::OnePlusSqrtLambda, Moduli::real(0.5, 0.0, 0.0), steps.max(384)),
        ),
        (
            "critical_d_combination",
            LoopSpec::new(LoopKind::CriticalDCombination, Moduli::real(0.85, 0.2, 0.0), steps.max(384)),
        ),
        ("epsilon", LoopSpec::new(LoopKind::Epsilon, Moduli::real(0.5, 0.1, 0.05), steps)),
    ];
    let mut table = Table::new(vec![
        "loop",
        "before_re",
        "before_im",
        "after_re",
        "after_im",
        "jump_re",
        "jump_im",
        "predicted_re",
        "predicted_im",
        "classification",
    ]);
    for (name, spec) in cases {
        let r = monodromy::transport(&spec, tol).map_err(CmdError::from)?;
        let pred = monodromy::predicted_jump(&spec, &spec.base);
        table.push(vec![
            Cell::Text(name.into()),
            Cell::Float(r.value_before.re),
            Cell::Float(r.value_before.im),
            Cell::Float(r.value_after.re),
            Cell::Float(r.value_after.im),
            Cell::Float(r.jump.re),
            Cell::Float(r.jump.im),
            Cell::Float(pred.re),
            Cell::Float(pred.im),
            Cell::Text(format!("{:?}", r.classification)),
        ]);
    }
    render(&table, cfg)
}

#[derive(serde::Serialize)]
struct VerifyReport {
    checks: Vec<VerifyEntry>,
    passed: usize,
    failed: usize,
}

#[derive(serde::Serialize)]
struct VerifyEntry {
    name: String,
    measured: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
}

/// Run the acceptance checks and emit a JSON report; nonzero exit on any
/// failure.
pub fn cmd_verify(cfg: &RunConfig) -> Result<(), CmdError> {
    let opts = VerifyOptions { only: cfg.only.clone(), tolerance_override: cfg.tol };
    let checks = run_checks(&opts).map_err(CmdError::from)?;
    let entries: Vec<VerifyEntry> = checks
        .iter()
        .map(|c| VerifyEntry {
            name: c.name.clone(),
            measured: c.measured,
            tolerance: c.tolerance,
            pass: c.pass,
            detail: c.detail.clone(),
        })
        .collect();
    let failed = entries.iter().filter(|e| !e.pass).count();
    let report = VerifyReport { passed: entries.len() - failed, failed, checks: entries };
    let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    emit(&text, cfg.out.as_deref()).map_err(CmdError::Config)?;
    if failed > 0 {
        return Err(CmdError::VerificationFailed);
    }
    Ok(())
}

/// The complex type shows up in tables only through its parts.
#[allow(dead_code)]
fn unused(_: Complex64) {}
