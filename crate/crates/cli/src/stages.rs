//! Stage runners. Every sweep point is planned (and validated) up front, then
//! computed on a worker pool; results are collected in point order so the
//! output never depends on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use wingqed_core::consts::{angular, ordinary};
use wingqed_core::fdfd::{find_resonances, EigenMode};
use wingqed_core::geometry::{build_geometry, MaterialMap};
use wingqed_core::mirror::{mirror_loss_rate, total_decay, transfer_matrix};
use wingqed_core::modes::{analyze_mode, track_mode, ModeError, ModeReport};
use wingqed_core::qed::{
    blockade_point, cooperativity, coupling_from_mode, evolve, t2_decoherence, DensityState,
    QedParams,
};

use crate::cache::{Cache, Lookup};
use crate::config::{InitialState, MirrorSection, ModeSetup, QedSection, RunConfig, Stage};
use crate::error::{CliError, ErrorKind};
use crate::sweep::{self, SweepPoint};
use crate::table::{Cell, ParsedCsv, Table};

/// Minimum overlap for following a mode between neighbouring sweep points.
const MIN_TRACK_OVERLAP: f64 = 0.5;

pub struct Context {
    pub jobs: usize,
    pub cache: Option<Cache>,
}

#[derive(Debug, Clone)]
pub struct StageOutput {
    pub table: Table,
    pub worst: Option<ErrorKind>,
}

impl StageOutput {
    pub fn exit_code(&self) -> i32 {
        self.worst.map_or(0, ErrorKind::exit_code)
    }
}

pub const MODE_COLUMNS: &[&str] = &[
    "d_over_L",
    "m_order",
    "k_order",
    "freq_hz",
    "Q",
    "V_m3",
    "q_over_v",
    "rc_x_m",
    "rc_y_m",
    "subwavelength",
    "residual",
    "V_rigorous_m3",
    "pml_fraction",
    "tracked",
    "status",
];

pub const PIPELINE_COLUMNS: &[&str] = &[
    "d_over_L", "n_h", "k_h", "freq_hz", "Q_geom", "V_m3", "R", "A", "kappa_hz", "g_hz", "C",
    "m_order", "k_order", "status",
];

pub const MIRROR_COLUMNS: &[&str] = &["lambda_m", "R", "T", "A", "status"];
pub const DYNAMICS_COLUMNS: &[&str] = &["t_s", "p_0e", "p_1g", "n_a", "status"];
pub const SPECTRUM_COLUMNS: &[&str] = &["delta_over_gamma", "g2_0", "n_a", "n_max", "status"];

fn columns(stage: Stage) -> &'static [&'static str] {
    match stage {
        Stage::Modes => MODE_COLUMNS,
        Stage::Mirror => MIRROR_COLUMNS,
        Stage::Pipeline => PIPELINE_COLUMNS,
        Stage::QedDynamics => DYNAMICS_COLUMNS,
        Stage::QedSpectrum => SPECTRUM_COLUMNS,
    }
}

struct ModePlan {
    setup: ModeSetup,
    map: MaterialMap,
    d_over_l: f64,
}

#[allow(clippy::large_enum_variant)]
enum Plan {
    Modes(ModePlan),
    Mirror(MirrorSection),
    Pipeline {
        modes: ModePlan,
        mirror: MirrorSection,
        qed: QedSection,
    },
    Dynamics {
        params: QedParams,
        t_end: f64,
        rel_tol: f64,
        initial: InitialState,
    },
    Spectrum {
        params: QedParams,
        deltas: Vec<f64>,
    },
}

fn mode_plan(cfg: &RunConfig) -> Result<ModePlan, CliError> {
    let setup = cfg.mode_setup()?;
    let map = build_geometry(&setup.params, &setup.grid)?;
    Ok(ModePlan {
        d_over_l: cfg.geometry()?.d_over_l,
        setup,
        map,
    })
}

fn qed_params(q: &QedSection, ctx: &Context) -> Result<QedParams, CliError> {
    q.validate()?;
    let gamma = q.gamma();
    let derived = if q.derive_g_from_v || q.derive_kappa_from_pipeline {
        Some(pipeline_artifact(q, ctx)?)
    } else {
        None
    };
    let g = match (q.g_over_gamma, derived) {
        (Some(r), _) => r * gamma,
        (None, Some((g_hz, _))) => angular(g_hz),
        (None, None) => unreachable!("validated"),
    };
    let kappa = match (q.kappa_hz, derived) {
        (Some(k), _) => angular(k),
        (None, Some((_, k_hz))) => angular(k_hz),
        (None, None) => unreachable!("validated"),
    };
    let p = QedParams {
        omega_a: q.omega_a(),
        omega_sigma: q.omega_sigma(),
        g,
        kappa,
        gamma,
        drive: q.omega_drive_over_gamma * gamma,
        delta: q.delta_over_gamma * gamma,
        n_max: q.n_max,
    };
    p.validate()?;
    Ok(p)
}

/// `(g_hz, kappa_hz)` from the row of a cached pipeline CSV.
fn pipeline_artifact(q: &QedSection, ctx: &Context) -> Result<(f64, f64), CliError> {
    let id = q.pipeline_run_id.as_deref().unwrap_or_default();
    let want = q.pipeline_d_over_l.unwrap_or_default();
    if id.len() != 64 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(CliError::config(format!(
            "`qed.pipeline_run_id` = {id:?} is not a run id"
        )));
    }
    let cache = ctx.cache.as_ref().ok_or_else(|| {
        CliError::config("derived couplings need a cache directory (--cache or WINGQED_CACHE_DIR)")
    })?;
    let bytes = match cache.lookup(id) {
        Lookup::Hit(b) => b,
        Lookup::Miss => {
            return Err(CliError::config(format!("pipeline artifact {id} not in cache")))
        }
        Lookup::Corrupt => {
            return Err(CliError::config(format!("pipeline artifact {id} failed its checksum")))
        }
    };
    let csv = ParsedCsv::parse(&String::from_utf8_lossy(&bytes))
        .ok_or_else(|| CliError::config(format!("pipeline artifact {id} is empty")))?;
    for row in 0..csv.rows.len() {
        let d = csv.f64_at(row, "d_over_L");
        if d.is_some_and(|d| (d - want).abs() <= 1e-9 * want.abs().max(1.0))
            && csv.str_at(row, "status") == Some("ok")
        {
            let g = csv.f64_at(row, "g_hz");
            let k = csv.f64_at(row, "kappa_hz");
            if let (Some(g), Some(k)) = (g, k) {
                log::info!("event=pipeline_artifact run_id={id} d_over_L={want} g_hz={g:.6e} kappa_hz={k:.6e}");
                return Ok((g, k));
            }
        }
    }
    Err(CliError::config(format!(
        "pipeline artifact {id} has no ok row with d_over_L = {want}"
    )))
}

fn plan(stage: Stage, cfg: &RunConfig, ctx: &Context) -> Result<Plan, CliError> {
    Ok(match stage {
        Stage::Modes => Plan::Modes(mode_plan(cfg)?),
        Stage::Mirror => {
            let m = cfg.mirror()?;
            m.validate()?;
            if m.lambda0_mm.is_none() {
                return Err(CliError::config("`mirror.lambda0_mm` is required"));
            }
            m.wavelengths()?;
            Plan::Mirror(m.clone())
        }
        Stage::Pipeline => {
            let mirror = cfg.mirror()?.clone();
            mirror.validate()?;
            let qed = cfg.qed()?.clone();
            for (name, v) in [("qed.omega_ghz", qed.omega_ghz), ("qed.gamma_hz", qed.gamma_hz)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::config(format!("`{name}` must be positive")));
                }
            }
            Plan::Pipeline {
                modes: mode_plan(cfg)?,
                mirror,
                qed,
            }
        }
        Stage::QedDynamics => {
            let q = cfg.qed()?;
            Plan::Dynamics {
                params: qed_params(q, ctx)?,
                t_end: q.t_end_us * 1e-6,
                rel_tol: q.rel_tol,
                initial: q.initial_state,
            }
        }
        Stage::QedSpectrum => {
            let q = cfg.qed()?;
            if !(q.omega_drive_over_gamma > 0.0) {
                return Err(CliError::config(
                    "a spectrum needs `qed.omega_drive_over_gamma` > 0",
                ));
            }
            Plan::Spectrum {
                params: qed_params(q, ctx)?,
                deltas: q.delta_grid(),
            }
        }
    })
}

struct Solved {
    modes: Vec<EigenMode>,
    reports: Vec<Result<ModeReport, ModeError>>,
}

fn solve_point(index: usize, p: &ModePlan) -> Result<Solved, CliError> {
    let start = Instant::now();
    let modes = find_resonances(&p.map, p.setup.params.pml_width, p.setup.shift_hz, &p.setup.settings)?;
    let reports = modes
        .iter()
        .map(|m| analyze_mode(m, &p.map, &p.setup.params, None))
        .collect();
    log::info!(
        "event=modes_solved point={index} d_over_L={} n_modes={} elapsed_s={:.3}",
        p.d_over_l,
        modes.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(Solved { modes, reports })
}

/// Follows the target mode along the point sequence by field overlap, falling
/// back to the `(m, k)` classification at the first point or when the
/// overlap is too weak (e.g. the lattice changed).
fn track(solved: &[Result<Solved, CliError>], target: &[(usize, usize)]) -> Vec<Option<usize>> {
    let mut prev: Option<&EigenMode> = None;
    let mut out = Vec::with_capacity(solved.len());
    for (index, s) in solved.iter().enumerate() {
        let Ok(s) = s else {
            out.push(None);
            continue;
        };
        let by_class = || {
            s.reports
                .iter()
                .position(|r| matches!(r, Ok(r) if (r.m_order, r.k_order) == target[index]))
        };
        let pick = match prev.and_then(|p| track_mode(p, &s.modes)) {
            Some((i, o)) if o >= MIN_TRACK_OVERLAP => {
                log::debug!("event=mode_tracked point={index} overlap={o:.6}");
                Some(i)
            }
            Some((_, o)) => {
                log::warn!("event=tracking_fallback point={index} overlap={o:.3e}");
                by_class()
            }
            None => by_class(),
        };
        match pick {
            Some(i) => prev = Some(&s.modes[i]),
            None => log::warn!("event=tracked_mode_missing point={index}"),
        }
        out.push(pick);
    }
    out
}

fn fail_row(ncols: usize, lead: &[(usize, Cell)], kind: ErrorKind) -> Vec<Cell> {
    let mut row = vec![Cell::Empty; ncols];
    for (i, c) in lead {
        row[*i] = c.clone();
    }
    row[ncols - 1] = kind.status().into();
    row
}

fn status_of(row: &[Cell]) -> Option<ErrorKind> {
    let Some(Cell::S(s)) = row.last() else {
        return None;
    };
    [
        ErrorKind::Io,
        ErrorKind::Config,
        ErrorKind::Solver,
        ErrorKind::Mirror,
        ErrorKind::SteadyState,
    ]
    .into_iter()
    .find(|k| k.status() == s)
}

fn log_failure(index: usize, e: &CliError) {
    log::error!("event=point_failed point={index} class={} message={:?}", e.kind.status(), e.message);
}

fn mode_row(d: f64, r: &ModeReport, tracked: bool) -> Vec<Cell> {
    vec![
        d.into(),
        r.m_order.into(),
        r.k_order.into(),
        r.freq_hz.into(),
        r.q.into(),
        r.v.into(),
        r.q_over_v.into(),
        r.r_c.0.into(),
        r.r_c.1.into(),
        r.subwavelength.into(),
        r.residual.into(),
        r.v_rigorous.into(),
        r.pml_fraction.into(),
        tracked.into(),
        "ok".into(),
    ]
}

fn modes_rows(plans: &[&ModePlan], solved: &[Result<Solved, CliError>], picks: &[Option<usize>]) -> Vec<Vec<Vec<Cell>>> {
    let n = MODE_COLUMNS.len();
    plans
        .iter()
        .zip(solved)
        .zip(picks)
        .enumerate()
        .map(|(index, ((p, s), pick))| {
            let d = Cell::F(p.d_over_l);
            let s = match s {
                Ok(s) => s,
                Err(e) => {
                    log_failure(index, e);
                    return vec![fail_row(n, &[(0, d)], e.kind)];
                }
            };
            let mut order: Vec<usize> = (0..s.modes.len()).collect();
            order.sort_by(|&a, &b| s.modes[a].omega.re.total_cmp(&s.modes[b].omega.re));
            order
                .into_iter()
                .map(|i| match &s.reports[i] {
                    Ok(r) => mode_row(p.d_over_l, r, *pick == Some(i)),
                    Err(e) => {
                        log::error!("event=analysis_failed point={index} mode={i} message={:?}", e.to_string());
                        let m = &s.modes[i];
                        fail_row(
                            n,
                            &[(0, d.clone()), (3, m.freq_hz().into()), (10, m.residual.into())],
                            ErrorKind::Solver,
                        )
                    }
                })
                .collect()
        })
        .collect()
}

fn pipeline_row(p: &ModePlan, r: &ModeReport, mirror: &MirrorSection, qed: &QedSection) -> Result<Vec<Cell>, CliError> {
    let lambda = r.lambda_m;
    let lambda0 = mirror.lambda0_mm.map_or(lambda, |l| l * 1e-3);
    let resp = transfer_matrix(&mirror.stack(lambda0)?, lambda)?;
    let kappa_mirror = match mirror.kappa_mirror_hz {
        Some(k) => angular(k),
        None => mirror_loss_rate(&resp, p.setup.params.length, p.setup.params.eta),
    };
    let kappa = total_decay(r.q, angular(r.freq_hz), kappa_mirror);
    let gamma = qed.gamma();
    let g = coupling_from_mode(r.v, gamma, qed.omega_sigma())?;
    let c = cooperativity(g, kappa, gamma)?;
    Ok(vec![
        p.d_over_l.into(),
        mirror.n_h.into(),
        mirror.k_h.into(),
        r.freq_hz.into(),
        r.q.into(),
        r.v.into(),
        resp.reflectance.into(),
        resp.absorptance.into(),
        ordinary(kappa).into(),
        ordinary(g).into(),
        c.into(),
        r.m_order.into(),
        r.k_order.into(),
        "ok".into(),
    ])
}

fn dynamics_rows(index: usize, params: &QedParams, t_end: f64, rel_tol: f64, initial: InitialState) -> Vec<Vec<Cell>> {
    let n = DYNAMICS_COLUMNS.len();
    let start = Instant::now();
    let run = || -> Result<_, CliError> {
        let rho0 = DensityState::fock(0, initial == InitialState::ZeroExcited, params.n_max)?;
        Ok(evolve(&rho0, t_end, params, rel_tol)?)
    };
    let series = match run() {
        Ok(s) => s,
        Err(e) => {
            log_failure(index, &e);
            return vec![fail_row(n, &[], e.kind)];
        }
    };
    log::info!(
        "event=dynamics_done point={index} steps={} samples={} elapsed_s={:.3}",
        series.steps,
        series.times.len(),
        start.elapsed().as_secs_f64()
    );
    if !params.is_driven() && initial == InitialState::ZeroExcited {
        match t2_decoherence(&series) {
            Ok(t2) => log::info!("event=t2_fit point={index} t2_s={t2:.6e}"),
            Err(e) => log::info!("event=t2_fit point={index} unavailable={:?}", e.to_string()),
        }
    }
    (0..series.times.len())
        .map(|i| {
            vec![
                series.times[i].into(),
                series.p_0e[i].into(),
                series.p_1g[i].into(),
                series.n_a[i].into(),
                "ok".into(),
            ]
        })
        .collect()
}

fn spectrum_rows(index: usize, params: &QedParams, deltas: &[f64]) -> Vec<Vec<Cell>> {
    let n = SPECTRUM_COLUMNS.len();
    let start = Instant::now();
    let rows: Vec<Vec<Cell>> = deltas
        .par_iter()
        .map(|&x| {
            let p = QedParams {
                delta: x * params.gamma,
                ..*params
            };
            match blockade_point(&p) {
                Ok(s) => vec![
                    x.into(),
                    s.g2_0.into(),
                    s.n_a.into(),
                    s.n_max.into(),
                    "ok".into(),
                ],
                Err(e) => {
                    let e = CliError::from(e);
                    log::error!("event=spectrum_point_failed point={index} delta_over_gamma={x} message={:?}", e.message);
                    fail_row(n, &[(0, x.into())], e.kind)
                }
            }
        })
        .collect();
    log::info!(
        "event=spectrum_done point={index} n_delta={} elapsed_s={:.3}",
        deltas.len(),
        start.elapsed().as_secs_f64()
    );
    rows
}

fn mirror_rows(m: &MirrorSection) -> Vec<Vec<Cell>> {
    let n = MIRROR_COLUMNS.len();
    let stack = match m.stack(m.lambda0_mm.unwrap() * 1e-3) {
        Ok(s) => s,
        Err(e) => return vec![fail_row(n, &[], e.kind)],
    };
    m.wavelengths()
        .unwrap_or_default()
        .into_iter()
        .map(|l| match transfer_matrix(&stack, l) {
            Ok(r) => vec![
                l.into(),
                r.reflectance.into(),
                r.transmittance.into(),
                r.absorptance.into(),
                "ok".into(),
            ],
            Err(e) => {
                log::error!("event=mirror_failed lambda_m={l:e} message={:?}", e.to_string());
                fail_row(n, &[(0, l.into())], ErrorKind::Mirror)
            }
        })
        .collect()
}

/// Axis columns not already present among the stage outputs.
fn axis_columns(points: &[SweepPoint], stage_cols: &[&str]) -> Vec<(usize, String)> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    first
        .coords
        .iter()
        .enumerate()
        .filter(|(_, (path, _))| {
            let leaf = path.rsplit('.').next().unwrap_or(path);
            !stage_cols.contains(&leaf)
        })
        .map(|(i, (path, _))| (i, path.clone()))
        .collect()
}

pub fn run_stage(cfg: &RunConfig, stage: Stage, ctx: &Context) -> Result<StageOutput, CliError> {
    let points = sweep::expand(cfg)?;
    let plans = points
        .iter()
        .map(|p| plan(stage, &p.config, ctx))
        .collect::<Result<Vec<_>, _>>()?;
    log::info!(
        "event=stage_start stage={} points={} jobs={}",
        stage.name(),
        plans.len(),
        ctx.jobs
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs.max(1))
        .build()
        .map_err(|e| CliError::io(format!("worker pool: {e}")))?;

    let per_point: Vec<Vec<Vec<Cell>>> = pool.install(|| match stage {
        Stage::Modes | Stage::Pipeline => {
            let mode_plans: Vec<&ModePlan> = plans
                .iter()
                .map(|p| match p {
                    Plan::Modes(m) | Plan::Pipeline { modes: m, .. } => m,
                    _ => unreachable!(),
                })
                .collect();
            let solved: Vec<Result<Solved, CliError>> = mode_plans
                .par_iter()
                .enumerate()
                .map(|(i, p)| solve_point(i, p))
                .collect();
            let targets: Vec<(usize, usize)> = mode_plans.iter().map(|p| p.setup.track).collect();
            let picks = track(&solved, &targets);
            if stage == Stage::Modes {
                return modes_rows(&mode_plans, &solved, &picks);
            }
            let n = PIPELINE_COLUMNS.len();
            plans
                .iter()
                .zip(&solved)
                .zip(&picks)
                .enumerate()
                .map(|(index, ((p, s), pick))| {
                    let Plan::Pipeline { modes, mirror, qed } = p else {
                        unreachable!()
                    };
                    let lead = [(0, Cell::F(modes.d_over_l)), (1, mirror.n_h.into()), (2, mirror.k_h.into())];
                    let report = match (s, pick) {
                        (Err(e), _) => {
                            log_failure(index, e);
                            return vec![fail_row(n, &lead, e.kind)];
                        }
                        (Ok(s), Some(i)) => &s.reports[*i],
                        (Ok(_), None) => return vec![fail_row(n, &lead, ErrorKind::Solver)],
                    };
                    let Ok(r) = report else {
                        return vec![fail_row(n, &lead, ErrorKind::Solver)];
                    };
                    match pipeline_row(modes, r, mirror, qed) {
                        Ok(row) => vec![row],
                        Err(e) => {
                            log_failure(index, &e);
                            vec![fail_row(n, &lead, e.kind)]
                        }
                    }
                })
                .collect()
        }
        Stage::Mirror => plans
            .par_iter()
            .map(|p| match p {
                Plan::Mirror(m) => mirror_rows(m),
                _ => unreachable!(),
            })
            .collect(),
        Stage::QedDynamics => plans
            .par_iter()
            .enumerate()
            .map(|(i, p)| match p {
                Plan::Dynamics {
                    params,
                    t_end,
                    rel_tol,
                    initial,
                } => dynamics_rows(i, params, *t_end, *rel_tol, *initial),
                _ => unreachable!(),
            })
            .collect(),
        Stage::QedSpectrum => plans
            .par_iter()
            .enumerate()
            .map(|(i, p)| match p {
                Plan::Spectrum { params, deltas } => spectrum_rows(i, params, deltas),
                _ => unreachable!(),
            })
            .collect(),
    });

    let stage_cols = columns(stage);
    let axes = axis_columns(&points, stage_cols);
    let mut header: Vec<String> = axes.iter().map(|(_, p)| p.clone()).collect();
    header.extend(stage_cols.iter().map(|s| s.to_string()));
    let mut table = Table::new(header);
    let mut worst = None;
    for (point, rows) in points.iter().zip(per_point) {
        for row in rows {
            worst = worst.max(status_of(&row));
            let mut full: Vec<Cell> = axes
                .iter()
                .map(|(i, _)| Cell::from_toml(&point.coords[*i].1))
                .collect();
            full.extend(row);
            table.push(full);
        }
    }
    Ok(StageOutput { table, worst })
}
