//! Experiment orchestration behind the CLI subcommands. Each run owns its
//! output directory; independent runs (the two orderings, sweep rows) go
//! through rayon.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use qlattice_core::dynamics::{
    integrate, GdstModel, IntegratorConfig, MdnlsModel, Trajectory, XxzModel,
};
use qlattice_core::exact::{
    build_gdst_hamiltonian, coherent_product_state_checked, correlation_index, enumerate_basis,
    mode_occupation, Propagator,
};
use qlattice_core::geometry::{
    boson_log_overlap_mod, boson_overlap, curvature, metric, ray_distance,
    ray_distance_sq_from_log, su2_log_overlap_mod, su2_overlap, NormalizationFunction,
};
use qlattice_core::lattice::{BosonLatticeState, Ordering, SpinLatticeState};
use qlattice_core::observables::{
    fermion_amplitude, fermion_number, gamma_cr_analytic, gamma_cr_numeric, poisson_distribution,
    population_imbalance, q_function, q_function_default_grid, GammaCrSearch,
};

use crate::config::{ModelKind, OrderingOpt, RunConfig};
use crate::output::{fmt, now_unix, ConservationSummary, CsvBuilder, OutputDir};

/// Failures with an exit-code class: configuration (2) or numerical (3).
#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<crate::config::ConfigError> for CmdError {
    fn from(e: crate::config::ConfigError) -> Self {
        CmdError::Config(e.0)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Config(format!("io: {e}"))
    }
}

fn numerical(e: qlattice_core::Error) -> CmdError {
    CmdError::Numerical(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingArg {
    No,
    So,
    Both,
}

#[derive(Debug, Clone)]
pub struct GlobalOpts {
    pub out: PathBuf,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub ordering: Option<OrderingArg>,
    pub seed: u64,
}

impl GlobalOpts {
    fn orderings(&self, cfg: &RunConfig) -> Vec<OrderingOpt> {
        match self.ordering {
            Some(OrderingArg::No) => vec![OrderingOpt::Normal],
            Some(OrderingArg::So) => vec![OrderingOpt::Symmetric],
            Some(OrderingArg::Both) => vec![OrderingOpt::Normal, OrderingOpt::Symmetric],
            None => vec![cfg.ordering.unwrap_or(OrderingOpt::Normal)],
        }
    }

    fn integrator_config(&self, cfg: &RunConfig) -> IntegratorConfig {
        let it = &cfg.integrator;
        let mut ic = IntegratorConfig::uniform(it.t0, it.t1, it.samples);
        if let Some(rt) = self.rel_tol.or(it.rel_tol) {
            ic.rel_tol = rt;
        }
        if let Some(at) = self.abs_tol.or(it.abs_tol) {
            ic.abs_tol = at;
        }
        ic
    }
}

/// The configuration as actually executed: defaults filled, flag overrides
/// applied. Echoed into every manifest.
#[derive(Debug, Serialize)]
struct EffectiveConfig {
    ordering: &'static str,
    rel_tol: f64,
    abs_tol: f64,
    seed: u64,
    #[serde(flatten)]
    config: RunConfig,
}

fn effective(cfg: &RunConfig, ordering: OrderingOpt, ic: &IntegratorConfig, seed: u64) -> EffectiveConfig {
    EffectiveConfig {
        ordering: ordering.dir_name(),
        rel_tol: ic.rel_tol,
        abs_tol: ic.abs_tol,
        seed,
        config: cfg.clone(),
    }
}

fn integrate_model(
    cfg: &RunConfig,
    ordering: Ordering,
    ic: &IntegratorConfig,
) -> Result<Trajectory, CmdError> {
    match cfg.model {
        ModelKind::Gdst => {
            let p = cfg.gdst_params(ordering)?;
            let s0 = cfg.initial_boson_state()?;
            integrate(&GdstModel(&p), s0.amplitudes(), ic).map_err(numerical)
        }
        ModelKind::Mdnls => {
            let p = cfg.mdnls_params(ordering)?;
            let s0 = cfg.initial_boson_state()?;
            integrate(&MdnlsModel(&p), s0.amplitudes(), ic).map_err(numerical)
        }
        ModelKind::Xxz => {
            let p = cfg.xxz_params()?;
            let s0 = cfg.initial_spin_state()?;
            integrate(&XxzModel(&p), s0.coords(), ic).map_err(numerical)
        }
    }
}

/// Runs one closure per requested ordering, in per-ordering subdirectories
/// when there are two, concurrently.
fn per_ordering<F>(cfg: &RunConfig, opts: &GlobalOpts, run: F) -> Result<(), CmdError>
where
    F: Fn(OrderingOpt, &Path) -> Result<(), CmdError> + Sync,
{
    let orderings = opts.orderings(cfg);
    if orderings.len() == 1 {
        return run(orderings[0], &opts.out);
    }
    orderings
        .par_iter()
        .map(|o| run(*o, &opts.out.join(o.dir_name())))
        .collect::<Result<Vec<()>, CmdError>>()?;
    Ok(())
}

fn trajectory_csv(cfg: &RunConfig, traj: &Trajectory) -> String {
    let f = traj.states().first().map(|s| s.len()).unwrap_or(0);
    let mut header: Vec<String> = vec!["t".into()];
    for j in 1..=f {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    let charge_name = if cfg.model == ModelKind::Xxz { "total_sz" } else { "norm" };
    header.push(charge_name.into());
    header.push("energy".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvBuilder::new(&[], &header_refs);
    for ((t, state), audit) in traj.times().iter().zip(traj.states()).zip(traj.audits()) {
        let mut row = Vec::with_capacity(2 * f + 3);
        row.push(fmt(*t));
        for a in state {
            row.push(fmt(a.re));
            row.push(fmt(a.im));
        }
        row.push(fmt(audit.charge));
        row.push(fmt(audit.energy));
        csv.row(&row);
    }
    csv.into_string()
}

fn qfunc_csv(site: usize, t: f64, beta: Complex64) -> String {
    let (gx, gy) = q_function_default_grid(beta);
    let q = q_function(beta, &gx, &gy).expect("non-empty default grid");
    let comments = vec![
        format!("site={site} t={} beta_re={} beta_im={}", fmt(t), fmt(beta.re), fmt(beta.im)),
        format!(
            "grid: nx={} ny={} x0={} y0={} spacing={}",
            gx.len(),
            gy.len(),
            fmt(gx[0]),
            fmt(gy[0]),
            fmt(gx[1] - gx[0])
        ),
    ];
    let mut csv = CsvBuilder::new(&comments, &["x", "y", "q"]);
    for (iy, y) in gy.iter().enumerate() {
        for (ix, x) in gx.iter().enumerate() {
            csv.row(&[fmt(*x), fmt(*y), fmt(q.value(ix, iy))]);
        }
    }
    csv.into_string()
}

fn poisson_csv(site: usize, t: f64, beta: Complex64, n_max: usize) -> String {
    let dist = poisson_distribution(beta, n_max);
    let comments = vec![
        format!("site={site} t={} mean={} |beta|^2={}", fmt(t), fmt(dist.mean()), fmt(beta.norm_sqr())),
        format!("tail_mass={}", fmt(dist.tail_mass)),
    ];
    let mut csv = CsvBuilder::new(&comments, &["n", "p"]);
    for (n, p) in dist.probs.iter().enumerate() {
        csv.row(&[n.to_string(), fmt(*p)]);
    }
    csv.into_string()
}

fn observable_sites(requested: &[usize], f: usize) -> Vec<usize> {
    if requested.is_empty() {
        (1..=f).collect()
    } else {
        requested.to_vec()
    }
}

pub fn simulate(cfg: &RunConfig, opts: &GlobalOpts) -> Result<(), CmdError> {
    cfg.initial_amplitudes()?; // fail early on a missing/invalid [initial]
    per_ordering(cfg, opts, |ordering, dir| {
        let started = now_unix();
        let ic = opts.integrator_config(cfg);
        let mut out = OutputDir::create(dir)?;
        let traj = match integrate_model(cfg, ordering.into(), &ic) {
            Ok(t) => t,
            Err(e) => {
                // record the failure; partial outputs are absent by design
                out.finish(
                    "simulate",
                    &format!("failed: {e}"),
                    effective(cfg, ordering, &ic, opts.seed),
                    started,
                    None,
                )?;
                return Err(e);
            }
        };
        out.write_file("trajectory.csv", &trajectory_csv(cfg, &traj))?;

        if cfg.observables.imbalance {
            let mut csv = CsvBuilder::new(&[], &["t", "imbalance"]);
            for (t, state) in traj.times().iter().zip(traj.states()) {
                let s = BosonLatticeState::new(state.clone()).map_err(numerical)?;
                csv.row(&[fmt(*t), fmt(population_imbalance(&s).map_err(numerical)?)]);
            }
            out.write_file("imbalance.csv", &csv.into_string())?;
        }

        if cfg.observables.fermion {
            let f = cfg.site_count()?;
            let mut header: Vec<String> = vec!["t".into()];
            for j in 1..=f {
                header.push(format!("number_{j}"));
                header.push(format!("amp_re_{j}"));
                header.push(format!("amp_im_{j}"));
            }
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let mut csv = CsvBuilder::new(&[], &header_refs);
            for (t, state) in traj.times().iter().zip(traj.states()) {
                let s = SpinLatticeState::new(state.clone()).map_err(numerical)?;
                let mut row = vec![fmt(*t)];
                for j in 1..=f {
                    row.push(fmt(fermion_number(&s, j).map_err(numerical)?));
                    let amp = fermion_amplitude(&s, j).map_err(numerical)?;
                    row.push(fmt(amp.re));
                    row.push(fmt(amp.im));
                }
                csv.row(&row);
            }
            out.write_file("fermion.csv", &csv.into_string())?;
        }

        let t_end = *traj.times().last().expect("non-empty trajectory");
        if !cfg.observables.qfunc_sites.is_empty() && cfg.model != ModelKind::Xxz {
            for &site in &cfg.observables.qfunc_sites {
                let beta = traj.final_state()[site - 1];
                out.write_file(&format!("qfunc_site_{site}.csv"), &qfunc_csv(site, t_end, beta))?;
            }
        }
        if !cfg.observables.poisson_sites.is_empty() && cfg.model != ModelKind::Xxz {
            for &site in &cfg.observables.poisson_sites {
                let beta = traj.final_state()[site - 1];
                out.write_file(
                    &format!("poisson_site_{site}.csv"),
                    &poisson_csv(site, t_end, beta, cfg.observables.poisson_n_max),
                )?;
            }
        }

        out.finish(
            "simulate",
            "ok",
            effective(cfg, ordering, &ic, opts.seed),
            started,
            Some(ConservationSummary {
                max_charge_drift: traj.max_charge_drift(),
                max_energy_drift: traj.max_energy_drift(),
            }),
        )?;
        Ok(())
    })
}

/// Final-state Q-function fields only (boson models).
pub fn qfunc(cfg: &RunConfig, opts: &GlobalOpts) -> Result<(), CmdError> {
    if cfg.model == ModelKind::Xxz {
        return Err(CmdError::Config("qfunc requires a boson model (gdst or mdnls)".into()));
    }
    let f = cfg.site_count()?;
    let sites = observable_sites(&cfg.observables.qfunc_sites, f);
    per_ordering(cfg, opts, |ordering, dir| {
        let started = now_unix();
        let ic = opts.integrator_config(cfg);
        let mut out = OutputDir::create(dir)?;
        let traj = integrate_model(cfg, ordering.into(), &ic)?;
        let t_end = *traj.times().last().expect("non-empty trajectory");
        for &site in &sites {
            let beta = traj.final_state()[site - 1];
            out.write_file(&format!("qfunc_site_{site}.csv"), &qfunc_csv(site, t_end, beta))?;
        }
        out.finish("qfunc", "ok", effective(cfg, ordering, &ic, opts.seed), started, None)?;
        Ok(())
    })
}

/// Final-state number distributions only (boson models).
pub fn poisson(cfg: &RunConfig, opts: &GlobalOpts) -> Result<(), CmdError> {
    if cfg.model == ModelKind::Xxz {
        return Err(CmdError::Config("poisson requires a boson model (gdst or mdnls)".into()));
    }
    let f = cfg.site_count()?;
    let sites = observable_sites(&cfg.observables.poisson_sites, f);
    per_ordering(cfg, opts, |ordering, dir| {
        let started = now_unix();
        let ic = opts.integrator_config(cfg);
        let mut out = OutputDir::create(dir)?;
        let traj = integrate_model(cfg, ordering.into(), &ic)?;
        let t_end = *traj.times().last().expect("non-empty trajectory");
        for &site in &sites {
            let beta = traj.final_state()[site - 1];
            out.write_file(
                &format!("poisson_site_{site}.csv"),
                &poisson_csv(site, t_end, beta, cfg.observables.poisson_n_max),
            )?;
        }
        out.finish("poisson", "ok", effective(cfg, ordering, &ic, opts.seed), started, None)?;
        Ok(())
    })
}

struct SweepRow {
    n_total: f64,
    ordering: OrderingOpt,
    numeric: f64,
    analytic: f64,
    rel_deviation: f64,
    status: String,
}

pub fn sweep_gamma(cfg: &RunConfig, opts: &GlobalOpts) -> Result<(), CmdError> {
    let started = now_unix();
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CmdError::Config("sweep-gamma needs a [sweep] section".into()))?;
    let g = cfg.gdst_section()?;
    if g.f != 2 {
        return Err(CmdError::Config("the threshold sweep is defined for the dimer (f = 2)".into()));
    }
    let orderings = match opts.ordering {
        Some(OrderingArg::No) => vec![OrderingOpt::Normal],
        Some(OrderingArg::So) => vec![OrderingOpt::Symmetric],
        Some(OrderingArg::Both) | None => vec![OrderingOpt::Normal, OrderingOpt::Symmetric],
    };

    let cases: Vec<(f64, OrderingOpt)> = sweep
        .n_values
        .iter()
        .flat_map(|n| orderings.iter().map(move |o| (*n, *o)))
        .collect();

    let rows: Vec<SweepRow> = cases
        .par_iter()
        .map(|&(n_total, ordering)| {
            let analytic = gamma_cr_analytic(n_total, ordering.into())
                .map(|x| x * sweep.lambda.abs())
                .unwrap_or(f64::NAN);
            let template = match cfg.gdst_params(ordering.into()) {
                Ok(t) => t,
                Err(e) => {
                    return SweepRow {
                        n_total,
                        ordering,
                        numeric: f64::NAN,
                        analytic,
                        rel_deviation: f64::NAN,
                        status: format!("failed: {e}"),
                    }
                }
            };
            let mut search = GammaCrSearch::dimer(
                sweep.lambda,
                sweep.tol.unwrap_or(0.005 * analytic.max(1e-12)),
            );
            search.j0 = sweep.j0;
            if let Some(h) = sweep.horizon {
                search.horizon = h;
            }
            if let Some(rt) = opts.rel_tol {
                search.integrator_rel_tol = rt;
            }
            if let Some(at) = opts.abs_tol {
                search.integrator_abs_tol = at;
            }
            match gamma_cr_numeric(&template, n_total, &search) {
                Ok(numeric) => SweepRow {
                    n_total,
                    ordering,
                    numeric,
                    analytic,
                    rel_deviation: (numeric - analytic) / analytic,
                    status: "ok".into(),
                },
                Err(e) => SweepRow {
                    n_total,
                    ordering,
                    numeric: f64::NAN,
                    analytic,
                    rel_deviation: f64::NAN,
                    status: format!("failed: {e}"),
                },
            }
        })
        .collect();

    let mut out = OutputDir::create(&opts.out)?;
    let mut csv = CsvBuilder::new(
        &[],
        &["n_total", "ordering", "gamma_cr_numeric", "gamma_cr_analytic", "rel_deviation", "status"],
    );
    for row in &rows {
        csv.row(&[
            fmt(row.n_total),
            row.ordering.dir_name().to_string(),
            fmt(row.numeric),
            fmt(row.analytic),
            fmt(row.rel_deviation),
            row.status.clone(),
        ]);
    }
    out.write_file("gamma_sweep.csv", &csv.into_string())?;
    let ic = opts.integrator_config(cfg);
    let ordering_echo = orderings.last().copied().unwrap_or(OrderingOpt::Normal);
    out.finish("sweep-gamma", "ok", effective(cfg, ordering_echo, &ic, opts.seed), started, None)?;
    Ok(())
}

pub fn exact_compare(cfg: &RunConfig, opts: &GlobalOpts) -> Result<(), CmdError> {
    let g = cfg.gdst_section()?;
    if cfg.model != ModelKind::Gdst || g.f != 2 {
        return Err(CmdError::Config("exact-compare is defined for the GDST dimer (f = 2)".into()));
    }
    if cfg.integrator.t0 != 0.0 {
        return Err(CmdError::Config("exact-compare requires t0 = 0".into()));
    }
    let exact_cfg = cfg.exact.clone().unwrap_or_default();
    per_ordering(cfg, opts, |ordering, dir| {
        let started = now_unix();
        let ic = opts.integrator_config(cfg);
        let mut out = OutputDir::create(dir)?;

        let params = cfg.gdst_params(ordering.into())?;
        let beta0 = cfg.initial_boson_state()?;
        let basis = enumerate_basis(2, exact_cfg.n_max, None).map_err(numerical)?;
        let (psi0, tail_mass) =
            coherent_product_state_checked(&beta0, &basis, exact_cfg.tail_bound)
                .map_err(numerical)?;
        let h = build_gdst_hamiltonian(&params, &basis).map_err(numerical)?;
        let prop = Propagator::new(&h).map_err(numerical)?;
        let traj = integrate(&GdstModel(&params), beta0.amplitudes(), &ic).map_err(numerical)?;

        let mut csv = CsvBuilder::new(
            &[format!("n_max={} tail_bound={}", exact_cfg.n_max, fmt(exact_cfg.tail_bound))],
            &["t", "epsilon", "n_exact_1", "n_exact_2", "u_quasi_1", "u_quasi_2", "tail_mass"],
        );
        for (t, state) in traj.times().iter().zip(traj.states()) {
            let psi = prop.apply(&psi0, *t).map_err(numerical)?;
            let beta_t = BosonLatticeState::new(state.clone()).map_err(numerical)?;
            let eps = correlation_index(&psi, &beta_t, &basis).map_err(numerical)?;
            csv.row(&[
                fmt(*t),
                fmt(eps),
                fmt(mode_occupation(&psi, &basis, 1).map_err(numerical)?),
                fmt(mode_occupation(&psi, &basis, 2).map_err(numerical)?),
                fmt(state[0].norm_sqr()),
                fmt(state[1].norm_sqr()),
                fmt(tail_mass),
            ]);
        }
        out.write_file("exact_compare.csv", &csv.into_string())?;
        out.finish("exact-compare", "ok", effective(cfg, ordering, &ic, opts.seed), started, None)?;
        Ok(())
    })
}

struct GeometryRow {
    check: &'static str,
    points: usize,
    measured: f64,
    bound: f64,
}

impl GeometryRow {
    fn pass(&self) -> bool {
        self.measured <= self.bound
    }
}

fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius))
}

pub fn geometry(opts: &GlobalOpts) -> Result<(), CmdError> {
    let started = now_unix();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows: Vec<GeometryRow> = Vec::new();
    let wh = NormalizationFunction::WeylHeisenberg;

    // flat plane: curvature vanishes everywhere
    let mut max_abs: f64 = 0.0;
    for _ in 0..100 {
        let z = random_point(&mut rng, 3.0);
        max_abs = max_abs.max(curvature(&wh, z).map_err(numerical)?.abs());
    }
    rows.push(GeometryRow { check: "wh_curvature_zero", points: 100, measured: max_abs, bound: 1e-8 });

    // sphere: curvature is the constant 1/j
    for (j, name_std, name_val) in [
        (0.5, "su2_curvature_std_j_half", "su2_curvature_value_j_half"),
        (1.0, "su2_curvature_std_j_one", "su2_curvature_value_j_one"),
    ] {
        let n = NormalizationFunction::su2(j).map_err(numerical)?;
        let mut values = Vec::with_capacity(100);
        for _ in 0..100 {
            let z = random_point(&mut rng, 3.0);
            values.push(curvature(&n, z).map_err(numerical)?);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / values.len() as f64)
            .sqrt();
        rows.push(GeometryRow { check: name_std, points: 100, measured: std, bound: 1e-5 });
        rows.push(GeometryRow {
            check: name_val,
            points: 100,
            measured: (mean - 1.0 / j).abs(),
            bound: 1e-4,
        });
    }

    // infinitesimal ray distance vs metric, both manifolds
    let dz = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let z = random_point(&mut rng, 2.0);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let step = Complex64::from_polar(dz, angle);
        let d2 = ray_distance_sq_from_log(boson_log_overlap_mod(z + step, z));
        let g = metric(&wh, z).map_err(numerical)?;
        worst = worst.max((d2 - g * dz * dz).abs() / (g * dz * dz));

        let n = NormalizationFunction::su2(0.5).map_err(numerical)?;
        let d2 = ray_distance_sq_from_log(su2_log_overlap_mod(z + step, z, 0.5).map_err(numerical)?);
        let g = metric(&n, z).map_err(numerical)?;
        worst = worst.max((d2 - g * dz * dz).abs() / (g * dz * dz));
    }
    rows.push(GeometryRow {
        check: "infinitesimal_distance_vs_metric",
        points: 200,
        measured: worst,
        bound: 1e-3,
    });

    // ray distance obeys the triangle inequality on random triples
    let mut violations = 0usize;
    for _ in 0..1000 {
        let (a, b, c) = (
            random_point(&mut rng, 2.0),
            random_point(&mut rng, 2.0),
            random_point(&mut rng, 2.0),
        );
        let d = |x: Complex64, y: Complex64| ray_distance(boson_overlap(x, y).norm()).unwrap();
        if d(a, c) > d(a, b) + d(b, c) + 1e-12 {
            violations += 1;
        }
        let ds = |x: Complex64, y: Complex64| {
            ray_distance(su2_overlap(x, y, 0.5).unwrap().norm()).unwrap()
        };
        if ds(a, c) > ds(a, b) + ds(b, c) + 1e-12 {
            violations += 1;
        }
    }
    rows.push(GeometryRow {
        check: "triangle_inequality_violations",
        points: 1000,
        measured: violations as f64,
        bound: 0.0,
    });

    // numerically differentiated normalization reproduces the closed forms
    let mut worst: f64 = 0.0;
    let wh_num = NormalizationFunction::Numeric(Box::new(|u: f64| u.exp()));
    let su2_num = NormalizationFunction::Numeric(Box::new(|u: f64| 1.0 + u));
    let su2_closed = NormalizationFunction::su2(0.5).map_err(numerical)?;
    for _ in 0..50 {
        let z = random_point(&mut rng, 2.0);
        let g1 = metric(&wh_num, z).map_err(numerical)?;
        worst = worst.max((g1 - 1.0).abs());
        let g2 = metric(&su2_num, z).map_err(numerical)?;
        let g_ref = metric(&su2_closed, z).map_err(numerical)?;
        worst = worst.max((g2 - g_ref).abs() / g_ref);
    }
    rows.push(GeometryRow {
        check: "numeric_metric_matches_closed_form",
        points: 100,
        measured: worst,
        bound: 1e-4,
    });

    let mut out = OutputDir::create(&opts.out)?;
    let mut csv = CsvBuilder::new(
        &[format!("seed={}", opts.seed)],
        &["check", "points", "measured", "bound", "status"],
    );
    let mut all_pass = true;
    for row in &rows {
        let status = if row.pass() { "pass" } else { "fail" };
        all_pass &= row.pass();
        println!("{:<40} {:>12.5e} (bound {:>9.1e})  {}", row.check, row.measured, row.bound, status);
        csv.row(&[
            row.check.to_string(),
            row.points.to_string(),
            fmt(row.measured),
            fmt(row.bound),
            status.to_string(),
        ]);
    }
    out.write_file("geometry.csv", &csv.into_string())?;

    #[derive(Serialize)]
    struct GeometryConfig {
        seed: u64,
    }
    out.finish(
        "geometry",
        if all_pass { "ok" } else { "failed: geometry checks" },
        GeometryConfig { seed: opts.seed },
        started,
        None,
    )?;
    if all_pass {
        Ok(())
    } else {
        Err(CmdError::Numerical("geometry checks failed".into()))
    }
}
