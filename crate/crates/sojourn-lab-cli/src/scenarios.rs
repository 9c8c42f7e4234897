//! Scenario runners: build the model a config describes, run the pipeline,
//! gate the certified quantities, and write the report.
//!
//! Every runner follows the same arc: parse and validate its config section
//! (exit 2 on any violation), hand model assembly and solving to the
//! library (failures exit 3 with the operation named), then reduce the
//! outcome to a list of [`Check`]s. A failed check does not abort the run:
//! the report is written with `ok = false` and the process exits 1, because
//! a violated bound is a result, not an error.

use std::f64::consts::PI;
use std::path::PathBuf;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use sojourn_lab::floquet::{
    averaged_sojourn, build_floquet, check_nonresonance, floquet_fgr, howland_check,
    zero_mode_measure, AveragedSojourn, FloquetFgr, FloquetProblem, HowlandReport,
};
use sojourn_lab::models::{
    wigner_weisskopf, Boundary, Grid1D, LorentzianModel, WignerWeisskopfSpec,
};
use sojourn_lab::multistate::{block_family, ms_fgr, ms_lambda2, ms_pipeline, MsReport, TwoChannelModel};
use sojourn_lab::perturbation::{eta_extrapolation, fgr_width, kappa_sweep, EtaExtrapolation};
use sojourn_lab::sojourn::{
    lemma_bound_check_amplitude, nyquist_intervals, sojourn_truncated, sojourn_truncated_amplitude,
    SojournEstimate,
};
use sojourn_lab::spectral::{spectral_measure, HermitianOperator, State};
use sojourn_lab::stark::{ac_stark_scenario, ac_stark_width, gauge_equivalence_check, GaugeReport};
use sojourn_lab::width::{
    energy_width, etup_chain, feshbach_residual, fixed_point_residual, WidthResult,
};

use crate::config::{self, OutputSection, SCHEMA_VERSION};
use crate::error::Failure;
use crate::report::{cell, checks_table, write_outputs, Check, Provenance, Report, Table};

/// Flags and derived context shared by all runners.
pub struct Ctx {
    pub out_override: Option<PathBuf>,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

pub struct ScenarioOutcome {
    pub ok: bool,
    pub failed: Vec<&'static str>,
}

fn lift(scenario: &'static str) -> impl Fn(sojourn_lab::Error) -> Failure {
    move |e| Failure::Numerical(format!("{scenario}: {e}"))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Midpoint discretization of a flat band on `[lo, hi]`.
fn band_levels(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|m| lo + (m as f64 + 0.5) * step).collect()
}

fn finish<T: Serialize>(
    ctx: &Ctx,
    slug: &'static str,
    output: &OutputSection,
    result: T,
    checks: Vec<Check>,
    mut tables: Vec<Table>,
) -> Result<ScenarioOutcome, Failure> {
    let ok = checks.iter().all(|ch| ch.ok);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        scenario: slug,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: ctx.config_sha256.clone(),
            seed: ctx.seed,
        },
        result,
        checks,
        ok,
    };
    let out_dir = ctx
        .out_override
        .clone()
        .or_else(|| output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    tables.push(checks_table(&report.checks));
    let emitted = write_outputs(&out_dir, slug, &report, &tables, output.emit_tables)
        .map_err(Failure::Numerical)?;
    for ch in &report.checks {
        println!(
            "check {}: {} ({:.3e} {} {:.3e})",
            ch.name,
            if ch.ok { "PASS" } else { "FAIL" },
            ch.value,
            ch.comparison,
            ch.gate
        );
    }
    println!("report: {}", emitted.report_path.display());
    for path in &emitted.table_paths {
        println!("table: {}", path.display());
    }
    Ok(ScenarioOutcome {
        ok,
        failed: report
            .checks
            .iter()
            .filter(|ch| !ch.ok)
            .map(|ch| ch.name)
            .collect(),
    })
}

#[derive(Serialize)]
struct ClosedFormOut {
    delta_e: f64,
    sojourn_time: f64,
}

#[derive(Serialize)]
struct DiscretizedOut {
    n_levels: usize,
    cutoff: f64,
    width: WidthResult,
    deviation: f64,
}

#[derive(Serialize)]
struct WidthBody {
    model: config::LorentzianSection,
    lambda: f64,
    closed_form: ClosedFormOut,
    solved: WidthResult,
    deviation: f64,
    discretized: Option<DiscretizedOut>,
}

pub fn run_width(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::WidthConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("width");
    let m = cfg.model;
    let s = &cfg.solver;

    let model = LorentzianModel::new(m.e_r, m.gamma).map_err(&err)?;
    let lambda = s.lambda.unwrap_or(m.e_r);
    let solved = model.solved_width(lambda, s.tol).map_err(&err)?;
    let closed = model.energy_width(lambda);
    let deviation = (solved.delta_e - closed).abs();
    let mut checks = vec![Check::upper(
        "width_matches_closed_form",
        deviation,
        s.width_rtol * m.gamma,
    )];

    let discretized = match s.n_levels {
        Some(n) => {
            let cutoff = s.cutoff_widths * m.gamma;
            let mu = model.discretize(n, cutoff).map_err(&err)?;
            let width = energy_width(&mu, lambda, s.tol).map_err(&err)?;
            let dev = (width.delta_e - closed).abs();
            checks.push(Check::upper(
                "discretized_width_matches_closed_form",
                dev,
                s.discrete_rtol * m.gamma,
            ));
            Some(DiscretizedOut {
                n_levels: n,
                cutoff,
                width,
                deviation: dev,
            })
        }
        None => None,
    };

    let body = WidthBody {
        model: m,
        lambda,
        closed_form: ClosedFormOut {
            delta_e: closed,
            sojourn_time: model.sojourn_time(),
        },
        solved,
        deviation,
        discretized,
    };
    finish(ctx, "width", &cfg.output, body, checks, Vec::new())
}

#[derive(Serialize)]
struct MeasureOut {
    n_atoms: usize,
    spectral_radius: f64,
    min_gap: f64,
}

#[derive(Serialize)]
struct SojournBody {
    model: config::LorentzianSection,
    lambda: f64,
    measure: MeasureOut,
    width: WidthResult,
    residual_norm: f64,
    inv_delta_e: f64,
    sojourn: SojournEstimate,
    ratio: f64,
}

pub fn run_sojourn(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::SojournConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("sojourn");
    let m = cfg.model;
    let s = &cfg.solver;

    let model = LorentzianModel::new(m.e_r, m.gamma).map_err(&err)?;
    let lambda = s.lambda.unwrap_or(m.e_r);
    let mu = model
        .discretize(s.n_levels, s.cutoff_widths * m.gamma)
        .map_err(&err)?;
    let width = energy_width(&mu, lambda, s.width_tol).map_err(&err)?;
    let horizon = s.horizon.unwrap_or(3.0 / m.gamma);
    let n_quad = (s.nyquist_margin * nyquist_intervals(horizon, mu.spectral_radius())).max(2);
    let sojourn = sojourn_truncated(&mu, horizon, n_quad).map_err(&err)?;

    let residual_norm = mu
        .points()
        .iter()
        .map(|p| p.weight * (p.energy - lambda).powi(2))
        .sum::<f64>()
        .sqrt();
    let inv_delta_e = 1.0 / width.delta_e;
    let ratio = sojourn.value / inv_delta_e;

    let checks = vec![
        Check::upper(
            "width_below_residual_norm",
            width.delta_e - residual_norm,
            1e-10,
        ),
        Check::lower(
            "sojourn_clears_width_bound",
            sojourn.value,
            (1.0 - s.bound_rtol) * inv_delta_e,
        ),
    ];

    let body = SojournBody {
        model: m,
        lambda,
        measure: MeasureOut {
            n_atoms: mu.len(),
            spectral_radius: mu.spectral_radius(),
            min_gap: mu.min_gap(),
        },
        width,
        residual_norm,
        inv_delta_e,
        sojourn,
        ratio,
    };
    finish(ctx, "sojourn", &cfg.output, body, checks, Vec::new())
}

#[derive(Serialize)]
struct SweepRowOut {
    kappa: f64,
    lambda2: f64,
    gamma_fgr: f64,
    delta_e: f64,
    sojourn_lb: f64,
    sojourn_trunc: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct FgrSweepBody {
    model: config::FlatBandSection,
    eta: f64,
    etas: Vec<f64>,
    horizon: f64,
    rows: Vec<SweepRowOut>,
    fitted_exponent: Option<f64>,
    extrapolation: Option<EtaExtrapolation>,
}

pub fn run_fgr_sweep(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::FgrSweepConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("fgr-sweep");
    let m = cfg.model.clone();
    let s = &cfg.sweep;

    let fam = wigner_weisskopf(WignerWeisskopfSpec::flat(
        m.e0,
        (m.band[0], m.band[1]),
        m.n_levels,
        m.g,
    ))
    .map_err(&err)?;
    let spacing = m.spacing();
    let (floor, ceiling) = fam.eta_window().map_err(&err)?;
    let eta = s.eta.unwrap_or_else(|| (floor * ceiling).sqrt());
    let etas = s
        .etas
        .clone()
        .unwrap_or_else(|| [4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0].map(|k| k * spacing).to_vec());
    let horizon = s.horizon_fraction * 2.0 * PI / spacing;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut fitted_exponent = None;
    let mut extrapolation = None;

    if !s.kappas.is_empty() {
        let sweep = kappa_sweep(&fam, &s.kappas, eta, s.width_tol).map_err(&err)?;
        let mut worst_ratio = f64::INFINITY;
        for row in &sweep.rows {
            let h = fam.hamiltonian_at(row.kappa).map_err(&err)?;
            let mu = spectral_measure(&h, fam.psi()).map_err(&err)?;
            let n_quad =
                (s.nyquist_margin * nyquist_intervals(horizon, mu.spectral_radius())).max(2);
            let est = sojourn_truncated(&mu, horizon, n_quad).map_err(&err)?;
            let delta_e = row
                .delta_e_exact
                .expect("kappa_sweep solves the width at every coupling");
            let ratio = est.value * delta_e;
            worst_ratio = worst_ratio.min(ratio);
            rows.push(SweepRowOut {
                kappa: row.kappa,
                lambda2: row.lambda2,
                gamma_fgr: row.gamma_fgr,
                delta_e,
                sojourn_lb: 1.0 / delta_e,
                sojourn_trunc: est.value,
                ratio,
            });
        }
        checks.push(Check::upper(
            "width_scaling_exponent_dev",
            (sweep.fitted_exponent - 2.0).abs(),
            s.slope_tol,
        ));
        checks.push(Check::lower(
            "sojourn_clears_width_bound",
            worst_ratio,
            1.0 - s.bound_rtol,
        ));

        let smallest = s
            .kappas
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let ext = eta_extrapolation(&fam, smallest, &etas).map_err(&err)?;
        let row_small = rows
            .iter()
            .min_by(|a, b| a.kappa.total_cmp(&b.kappa))
            .expect("non-empty sweep");
        checks.push(Check::upper(
            "width_matches_extrapolated_rate_dev",
            (row_small.delta_e - ext.gamma_limit).abs() / ext.gamma_limit.abs(),
            s.extrap_rtol,
        ));
        fitted_exponent = Some(sweep.fitted_exponent);
        extrapolation = Some(ext);
    }

    let table = Table {
        name: "fgr_sweep_table",
        header: vec![
            "kappa",
            "lambda2",
            "gamma_fgr",
            "delta_e",
            "sojourn_lb",
            "sojourn_trunc",
            "ratio",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    cell(r.kappa),
                    cell(r.lambda2),
                    cell(r.gamma_fgr),
                    cell(r.delta_e),
                    cell(r.sojourn_lb),
                    cell(r.sojourn_trunc),
                    cell(r.ratio),
                ]
            })
            .collect(),
    };

    let body = FgrSweepBody {
        model: m,
        eta,
        etas,
        horizon,
        rows,
        fitted_exponent,
        extrapolation,
    };
    finish(ctx, "fgr_sweep", &cfg.output, body, checks, vec![table])
}

#[derive(Serialize)]
struct FloquetBody {
    model: config::DrivenModelSection,
    eta: f64,
    dim: usize,
    block_dim: usize,
    period: f64,
    lifting_grid: usize,
    fgr: FloquetFgr,
    width: WidthResult,
    inv_delta_e: f64,
    howland: HowlandReport,
    averaged: AveragedSojourn,
    ratio: f64,
}

/// Smallest divisor of `total` that is at least `need`.
fn divisor_at_least(total: usize, need: usize) -> Option<usize> {
    (need..=total).find(|g| total % g == 0)
}

pub fn run_floquet(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::FloquetConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("floquet");
    let m = cfg.model.clone();
    let s = &cfg.solver;

    let dim = 2 + m.n_band;
    let mut diag = vec![m.ground, m.excited];
    diag.extend(band_levels(m.n_band, m.band[0], m.band[1]));
    let h0 = HermitianOperator::diagonal(&diag).map_err(&err)?;
    let amp = m.band_amp / (m.n_band as f64).sqrt();
    let xamp = m.excited_band_amp / (m.n_band as f64).sqrt();
    let mut v1: Array2<Complex64> = Array2::zeros((dim, dim));
    v1[[0, 1]] = c(m.rabi, 0.0);
    v1[[1, 0]] = c(m.rabi, 0.0);
    for i in 0..m.n_band {
        v1[[0, 2 + i]] = c(amp, 0.0);
        v1[[2 + i, 0]] = c(amp, 0.0);
        v1[[1, 2 + i]] = c(xamp, 0.0);
        v1[[2 + i, 1]] = c(xamp, 0.0);
    }
    let psi = State::basis(dim, 0).map_err(&err)?;
    let fp = FloquetProblem::new(
        h0,
        vec![Array2::zeros((dim, dim)), v1],
        m.omega,
        m.n_modes,
        m.kappa,
        psi,
    )
    .map_err(&err)?;
    check_nonresonance(&fp).map_err(&err)?;
    let k = build_floquet(&fp).map_err(&err)?;

    let spacing = m.spacing();
    let eta = s.eta.unwrap_or(4.0 * spacing);
    let horizon = s.horizon.unwrap_or(0.3 * 2.0 * PI / spacing);
    let need = 2 * (m.n_modes + 1);
    let n_grid = divisor_at_least(s.steps_per_period, need).ok_or_else(|| {
        Failure::Config(format!(
            "solver.steps_per_period: no divisor >= {need} available for the lifting grid \
             (got {}); raise it",
            s.steps_per_period
        ))
    })?;

    let phi = move |_t: f64| {
        let mut v: Array1<Complex64> = Array1::zeros(dim);
        v[0] = c(1.0, 0.0);
        v
    };
    let howland =
        howland_check(&fp, &k, phi, fp.period(), n_grid, s.steps_per_period).map_err(&err)?;
    let averaged = averaged_sojourn(&fp, &k, horizon, s.n_t0, s.steps_per_period, s.jensen_rtol)
        .map_err(&err)?;
    let fgr = floquet_fgr(&fp, eta).map_err(&err)?;
    let mu_k = zero_mode_measure(&fp, &k).map_err(&err)?;
    let width = energy_width(&mu_k, fgr.lambda2, s.width_tol).map_err(&err)?;
    let inv_delta_e = 1.0 / width.delta_e;

    let checks = vec![
        Check::upper("lifting_identity_residual", howland.residual, s.howland_gate),
        Check::lower(
            "averaged_sojourn_clears_width_bound",
            averaged.averaged,
            (1.0 - s.bound_rtol) * inv_delta_e,
        ),
        Check::upper(
            "quasi_energy_sojourn_below_average",
            averaged.quasi_energy.value,
            (1.0 + s.jensen_rtol) * averaged.averaged,
        ),
    ];

    let ratio = averaged.averaged * width.delta_e;
    let body = FloquetBody {
        model: m,
        eta,
        dim,
        block_dim: fp.block_dim(),
        period: fp.period(),
        lifting_grid: n_grid,
        fgr,
        width,
        inv_delta_e,
        howland,
        averaged,
        ratio,
    };

    let t0_table = Table {
        name: "floquet_t0_table",
        header: vec!["t0_index", "sojourn"],
        rows: body
            .averaged
            .per_t0
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), cell(*v)])
            .collect(),
    };
    finish(ctx, "floquet", &cfg.output, body, checks, vec![t0_table])
}

#[derive(Serialize)]
struct CrossOut {
    gamma_lifted: f64,
    lambda2_lifted: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct AcStarkBody {
    model: config::AcStarkModelSection,
    eta: f64,
    dim: usize,
    n_modes: usize,
    period: f64,
    width: FloquetFgr,
    cross: CrossOut,
    gauge: GaugeReport,
}

pub fn run_ac_stark(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::AcStarkConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("ac-stark");
    let m = cfg.model.clone();
    let s = &cfg.solver;

    let grid = Grid1D {
        start: m.grid.start,
        step: m.grid.span / m.grid.len as f64,
        len: m.grid.len,
        boundary: Boundary::Periodic,
    };
    let p = &m.potential;
    let w: Vec<f64> = match p.kind.as_str() {
        "gaussian-well" => {
            let (depth, width) = (p.depth.unwrap(), p.width.unwrap());
            grid.points()
                .iter()
                .map(|x| -depth * (-(x / width).powi(2)).exp())
                .collect()
        }
        "harmonic" => {
            let k = p.strength.unwrap();
            grid.points().iter().map(|x| k * x * x).collect()
        }
        _ => p.values.clone().unwrap(),
    };
    let mut f_coeffs = vec![Complex64::new(0.0, 0.0)];
    f_coeffs.extend(m.drive.iter().map(|f| c(f[0], f[1])));

    let scn =
        ac_stark_scenario(&w, &f_coeffs, m.omega, m.kappa, &grid, m.n_modes).map_err(&err)?;
    let direct = ac_stark_width(&scn, s.eta).map_err(&err)?;
    let lifted = floquet_fgr(scn.problem(), s.eta).map_err(&err)?;
    let deviation =
        (direct.gamma - lifted.gamma).abs() / lifted.gamma.abs().max(f64::MIN_POSITIVE);
    let t1 = s.gauge_t1_periods * scn.problem().period();
    let gauge = gauge_equivalence_check(&scn, 0.0, t1, s.gauge_steps).map_err(&err)?;

    let checks = vec![
        Check::upper("dressed_width_matches_lifted_rate_dev", deviation, s.cross_rtol),
        Check::upper("gauge_equivalence_residual", gauge.residual, s.gauge_gate),
    ];

    let body = AcStarkBody {
        eta: s.eta,
        dim: scn.problem().dim(),
        n_modes: scn.problem().n_modes(),
        period: scn.problem().period(),
        width: direct,
        cross: CrossOut {
            gamma_lifted: lifted.gamma,
            lambda2_lifted: lifted.lambda2,
            deviation,
        },
        gauge,
        model: m,
    };
    finish(ctx, "ac_stark", &cfg.output, body, checks, Vec::new())
}

#[derive(Serialize)]
struct IdentityOut {
    eta: f64,
    gamma_direct: f64,
    gamma_assembled: f64,
    lambda2_direct: f64,
    lambda2_assembled: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct MultistateBody {
    model: config::MultistateModelSection,
    horizon: f64,
    bound_tol: f64,
    report: MsReport,
    identity: IdentityOut,
}

pub fn run_multistate(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::MultistateConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("multistate");
    let m = cfg.model.clone();
    let s = &cfg.solver;

    let d1 = m.bound_levels.len();
    let h1 = HermitianOperator::diagonal(&m.bound_levels).map_err(&err)?;
    let h2 =
        HermitianOperator::diagonal(&band_levels(m.n_band, m.band[0], m.band[1])).map_err(&err)?;
    let scale = 1.0 / (m.n_band as f64).sqrt();
    let v = Array2::from_shape_fn((d1, m.n_band), |(i, _)| c(m.row_amps[i] * scale, 0.0));
    let psi0 = State::basis(d1, m.bound_index).map_err(&err)?;
    let model = TwoChannelModel::new(h1, h2, v, m.kappa, psi0).map_err(&err)?;

    let spacing = m.spacing();
    let heisenberg = 2.0 * PI / spacing;
    let gamma_est =
        m.kappa * m.kappa * PI * m.row_amps[m.bound_index].powi(2) / (m.band[1] - m.band[0]);
    let horizon = s.horizon.unwrap_or_else(|| {
        if gamma_est > 0.0 {
            (2.5 / gamma_est).min(0.45 * heisenberg)
        } else {
            0.3 * heisenberg
        }
    });
    let bound_tol = s.bound_tol.unwrap_or(0.01 * horizon);
    let report = ms_pipeline(&model, horizon, bound_tol).map_err(&err)?;

    let fam = block_family(&model).map_err(&err)?;
    let assembled = fgr_width(&fam, model.kappa(), report.eta).map_err(&err)?;
    let gamma_direct = ms_fgr(&model, report.eta).map_err(&err)?;
    let lambda2_direct = ms_lambda2(&model, report.eta).map_err(&err)?;
    let deviation =
        (gamma_direct - assembled.gamma_fgr).abs() / gamma_direct.abs().max(f64::MIN_POSITIVE);

    let checks = vec![
        Check::upper("rate_identity_dev", deviation, s.identity_gate),
        Check {
            name: "sojourn_clears_width_bound",
            value: report.sojourn.value,
            gate: if report.sojourn_infinite {
                0.0
            } else {
                report.inv_delta_e - bound_tol
            },
            comparison: ">=",
            ok: report.bound_ok,
        },
    ];

    let body = MultistateBody {
        model: m,
        horizon,
        bound_tol,
        identity: IdentityOut {
            eta: report.eta,
            gamma_direct,
            gamma_assembled: assembled.gamma_fgr,
            lambda2_direct,
            lambda2_assembled: assembled.lambda2,
            deviation,
        },
        report,
    };
    finish(ctx, "multistate", &cfg.output, body, checks, Vec::new())
}

#[derive(Serialize)]
struct VerifyBody {
    seed: u64,
    feshbach_matrices: usize,
    chain_instances: usize,
}

fn random_hermitian(rng: &mut ChaCha12Rng, dim: usize) -> HermitianOperator {
    let raw = Array2::from_shape_fn((dim, dim), |_| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let sym = Array2::from_shape_fn((dim, dim), |(i, j)| {
        0.5 * (raw[[i, j]] + raw[[j, i]].conj())
    });
    HermitianOperator::new(sym).expect("symmetrized random matrix is Hermitian")
}

fn random_state(rng: &mut ChaCha12Rng, dim: usize) -> State {
    let v = Array1::from_shape_fn(dim, |_| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    State::new(v).expect("random vector has positive norm")
}

pub fn run_verify(text: &str, ctx: &Ctx) -> Result<ScenarioOutcome, Failure> {
    let cfg: config::VerifyConfig = config::parse(text).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    let err = lift("verify");
    let seed = ctx.seed.unwrap_or(cfg.suite.seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Closed-form width of the Lorentzian line shape.
    let lorentz = LorentzianModel::new(0.5, 0.1).map_err(&err)?;
    let mut dev: f64 = 0.0;
    for j in 0..21 {
        let lambda = 0.5 + 0.1 * (j as f64 - 10.0) / 2.0;
        let solved = lorentz.solved_width(lambda, 1e-12).map_err(&err)?;
        dev = dev.max((solved.delta_e - lorentz.energy_width(lambda)).abs());
    }
    checks.push(Check::upper("lorentzian_width_closed_form", dev, 1e-9));

    // Saturation of the sojourn lemma by the exponential amplitude.
    let sat = LorentzianModel::new(0.3, 0.8).map_err(&err)?;
    let horizon = 30.0 / 0.8;
    let amplitude = |t: f64| sat.amplitude(t);
    let sojourn = sojourn_truncated_amplitude(amplitude, horizon, 1500).map_err(&err)?;
    let f_eps = sat.width_function(0.3, 0.8).map_err(&err)?;
    let tail = sat.tail_bound(horizon).map_err(&err)?;
    let lemma = lemma_bound_check_amplitude(amplitude, f_eps, 0.8, horizon, 1500, Some(tail), 1e-6)
        .map_err(&err)?;
    let sat_dev = ((sojourn - 1.0 / 0.8).abs() * 0.8).max((lemma.ratio - 1.0).abs());
    checks.push(Check::upper("lemma_equality_case", sat_dev, 1e-6));

    // Resolvent partition identity on random Hermitian operators.
    let mut worst: f64 = 0.0;
    for i in 0..cfg.suite.feshbach_matrices {
        let dim = 2 + (i % 19);
        let h = random_hermitian(&mut rng, dim);
        let psi = random_state(&mut rng, dim);
        let radius = h.spectral_radius().max(1.0);
        for &lf in &[-0.5, 0.0, 0.5] {
            for &ef in &[0.01, 0.1, 1.0] {
                let z = c(lf * radius, ef * radius);
                worst = worst.max(feshbach_residual(&h, &psi, z).map_err(&err)? / radius);
            }
        }
    }
    checks.push(Check::upper("feshbach_identity_residual", worst, 1e-9));

    // Width below the residual norm, and the width's fixed-point equation.
    let mut instances = Vec::with_capacity(cfg.suite.chain_instances);
    for i in 0..cfg.suite.chain_instances {
        let dim = 2 + (i % 23);
        let h = random_hermitian(&mut rng, dim);
        let psi = random_state(&mut rng, dim);
        let radius = h.spectral_radius().max(1e-6);
        let lambda = rng.gen_range(-0.9 * radius..0.9 * radius);
        instances.push((h, psi, lambda));
    }
    let mut excess = f64::NEG_INFINITY;
    for (h, psi, lambda) in &instances {
        let chain = etup_chain(h, psi, *lambda, 1e-12).map_err(&err)?;
        excess = excess.max(chain.delta_e - chain.residual);
    }
    checks.push(Check::upper("width_below_residual_norm", excess, 1e-10));

    let mut fp_worst: f64 = 0.0;
    let mu = lorentz.discretize(201, 10.0).map_err(&err)?;
    let energies: Vec<f64> = mu.points().iter().map(|p| p.energy).collect();
    let weights: Vec<f64> = mu.points().iter().map(|p| p.weight.sqrt()).collect();
    let h_lor = HermitianOperator::diagonal(&energies).map_err(&err)?;
    let psi_lor = State::from_real(&weights).map_err(&err)?;
    let mu_lor = spectral_measure(&h_lor, &psi_lor).map_err(&err)?;
    for j in 0..21 {
        let lambda = 0.5 + 0.1 * (j as f64 - 10.0) / 2.0;
        let width = energy_width(&mu_lor, lambda, 1e-11).map_err(&err)?;
        if !width.zero_width {
            fp_worst = fp_worst
                .max(fixed_point_residual(&h_lor, &psi_lor, lambda, width.delta_e).map_err(&err)?);
        }
    }
    for (h, psi, lambda) in &instances {
        let mu_i = spectral_measure(h, psi).map_err(&err)?;
        let width = energy_width(&mu_i, *lambda, 1e-11).map_err(&err)?;
        if !width.zero_width {
            fp_worst =
                fp_worst.max(fixed_point_residual(h, psi, *lambda, width.delta_e).map_err(&err)?);
        }
    }
    checks.push(Check::upper("fixed_point_residual", fp_worst, 1e-10));

    // Quadratic scaling of the flat-band decay width.
    let fam = wigner_weisskopf(WignerWeisskopfSpec::flat(0.0, (-2.0, 2.0), 400, 3.2))
        .map_err(&err)?;
    let sweep = kappa_sweep(&fam, &[0.04, 0.08, 0.16], 0.05, 1e-10).map_err(&err)?;
    checks.push(Check::upper(
        "width_scaling_exponent_dev",
        (sweep.fitted_exponent - 2.0).abs(),
        0.05,
    ));

    // Truncated sojourn against the width bound on the quasi-continuum.
    let fgr = fgr_width(&fam, 0.08, 0.05).map_err(&err)?;
    let h08 = fam.hamiltonian_at(0.08).map_err(&err)?;
    let mu08 = spectral_measure(&h08, fam.psi()).map_err(&err)?;
    let w08 = energy_width(&mu08, fgr.lambda2, 1e-10).map_err(&err)?;
    let horizon08 = 0.4 * 2.0 * PI / 0.01;
    let n_quad = 4 * nyquist_intervals(horizon08, mu08.spectral_radius());
    let soj08 = sojourn_truncated(&mu08, horizon08, n_quad).map_err(&err)?;
    checks.push(Check::lower(
        "quasi_continuum_sojourn_ratio",
        soj08.value * w08.delta_e,
        0.98,
    ));

    // Block-coupling rate against the generic perturbative rate.
    let h1 = HermitianOperator::diagonal(&[0.3, 3.1]).map_err(&err)?;
    let h2 = HermitianOperator::diagonal(&band_levels(120, -2.0, 2.0)).map_err(&err)?;
    let scale = 1.0 / (120f64).sqrt();
    let v = Array2::from_shape_fn((2, 120), |(i, mm)| {
        let phase = 1.3 * mm as f64 + i as f64;
        c(
            scale * (0.9 + 0.3 * phase.sin()),
            scale * 0.4 * (0.7 * mm as f64 - i as f64).cos(),
        )
    });
    let two = TwoChannelModel::new(h1, h2, v, 0.15, State::basis(2, 0).map_err(&err)?)
        .map_err(&err)?;
    let fam2 = block_family(&two).map_err(&err)?;
    let direct = ms_fgr(&two, 0.12).map_err(&err)?;
    let assembled = fgr_width(&fam2, two.kappa(), 0.12).map_err(&err)?;
    checks.push(Check::upper(
        "block_rate_identity_dev",
        (direct - assembled.gamma_fgr).abs() / direct.abs(),
        1e-10,
    ));

    // Lifting identity of the quasi-energy operator on a small driven model.
    let n_band = 20;
    let dim = 2 + n_band;
    let mut diag = vec![0.0, 1.77];
    diag.extend(band_levels(n_band, 0.4, 2.4));
    let h0 = HermitianOperator::diagonal(&diag).map_err(&err)?;
    let amp = 2.05 / (n_band as f64).sqrt();
    let mut v1: Array2<Complex64> = Array2::zeros((dim, dim));
    v1[[0, 1]] = c(0.35, 0.0);
    v1[[1, 0]] = c(0.35, 0.0);
    for i in 0..n_band {
        v1[[0, 2 + i]] = c(amp, 0.0);
        v1[[2 + i, 0]] = c(amp, 0.0);
    }
    let fp = FloquetProblem::new(
        h0,
        vec![Array2::zeros((dim, dim)), v1],
        1.4,
        6,
        0.11,
        State::basis(dim, 0).map_err(&err)?,
    )
    .map_err(&err)?;
    check_nonresonance(&fp).map_err(&err)?;
    let k = build_floquet(&fp).map_err(&err)?;
    let phi = move |t: f64| {
        let mut vv: Array1<Complex64> = Array1::zeros(dim);
        vv[0] = c(1.0, 0.0);
        vv[1] = Complex64::from_polar(0.3, 1.4 * t);
        vv
    };
    let howland = howland_check(&fp, &k, phi, fp.period(), 16, 1600).map_err(&err)?;
    checks.push(Check::upper(
        "lifting_identity_residual",
        howland.residual,
        1e-4,
    ));

    // Gauge equivalence of the driven harmonic trap.
    let len = 256;
    let grid = Grid1D {
        start: -12.0,
        step: 24.0 / len as f64,
        len,
        boundary: Boundary::Periodic,
    };
    let w: Vec<f64> = grid.points().iter().map(|x| 0.15 * x * x).collect();
    let scn = ac_stark_scenario(
        &w,
        &[c(0.0, 0.0), c(0.05, 0.0)],
        1.2,
        0.02,
        &grid,
        Some(1),
    )
    .map_err(&err)?;
    let gauge = gauge_equivalence_check(&scn, 0.0, PI / 2.4, 48).map_err(&err)?;
    checks.push(Check::upper(
        "gauge_equivalence_residual",
        gauge.residual,
        5e-6,
    ));

    // Sojourn bound through the block-coupling pipeline. 320 band atoms put
    // the nearest midpoint a safe distance from the bound level at 0.3.
    let h1p = HermitianOperator::diagonal(&[0.3, 3.5]).map_err(&err)?;
    let h2p = HermitianOperator::diagonal(&band_levels(320, -2.0, 2.0)).map_err(&err)?;
    let scale_p = 1.0 / (320f64).sqrt();
    let vp = Array2::from_shape_fn((2, 320), |(i, _)| {
        c(if i == 0 { 1.1 } else { 0.22 } * scale_p, 0.0)
    });
    let pre = TwoChannelModel::new(h1p, h2p, vp, 0.2, State::basis(2, 0).map_err(&err)?)
        .map_err(&err)?;
    let gamma_est = 0.04 * PI * 1.21 / 4.0;
    let rep = ms_pipeline(&pre, 2.5 / gamma_est, 0.025 / gamma_est).map_err(&err)?;
    checks.push(Check::lower(
        "multistate_sojourn_ratio",
        rep.ratio,
        0.98,
    ));

    let body = VerifyBody {
        seed,
        feshbach_matrices: cfg.suite.feshbach_matrices,
        chain_instances: cfg.suite.chain_instances,
    };
    finish(ctx, "verify", &cfg.output, body, checks, Vec::new())
}
