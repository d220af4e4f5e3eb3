//! Subcommands of the `nlsx` binary. Every run writes `manifest.txt` to its output directory,
//! including runs that end in an error.

use super::acceptance::{run_suite, CRITERIA};
use super::config::ExperimentConfig;
use super::format::{field_to_array, num, read_numeric_csv, Table};
use super::manifest::RunManifest;
use crate::bifurcation::{classify_root, norm2, solve_zero_order, Coeff, DEFAULT_TOL};
use crate::bound_states::{solve_branch, solve_branch_path};
use crate::dynamics::{decade_window, decay_fit, evolve_linearized, localized_data, LinearPropagator, Norm, RecordSpec, Sponge, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::linearized::{assemble, decompose, mode_table, spectrum_scalar, ScalarOp};
use crate::potential::{tune_well, ResonanceClass};
use crate::radial::{default_grid, richardson_energies};
use crate::resonance::{fgr_value, resonant_sectors, weighted_resolvent_profile, AbsorptionConfig, DEFAULT_WEIGHT};
use crate::stable_manifold::{amplitude_log_ratio, control_initial, iterate_omega, synthesize_solution, verify_convergence, AsymptoticProfile, Modulation, OmegaConfig, VerifyConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "nlsx", version, about = "Excited states of the cubic NLS with a radial potential")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by the configured subcommands.
#[derive(Clone, Debug, Args)]
pub struct Common {
    /// TOML experiment configuration; every field has a default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Resonant,
    NonResonant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Primary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune a square well of the given radius into a resonance class.
    TuneWell {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Scalar spectra of the linearization about the real branch.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Solutions of the zero-order bifurcation equation for overlap constant `I`.
    Bifurcate {
        #[arg(long = "I", value_name = "I")]
        overlap: f64,
        /// CSV of coefficients `re0,im0,re1,im1,re2,im2` to classify.
        #[arg(long)]
        classify: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Bound state `Q` along the configured branch for every listed `ε`.
    SolveQ {
        #[command(flatten)]
        common: Common,
    },
    /// Near-zero and near-`κ` mode tables of the linearized operator.
    Linearize {
        #[command(flatten)]
        common: Common,
    },
    /// Fermi golden rule values for the `e₁` and co-rotating directions.
    Fgr {
        #[command(flatten)]
        common: Common,
    },
    /// Weighted resolvent norm on a grid of spectral parameters.
    ResolventProfile {
        #[arg(long, default_value_t = 0.5)]
        tau_min: f64,
        #[arg(long, default_value_t = 20.0)]
        tau_max: f64,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Linearized evolution of localized data in the continuous subspace.
    Evolve {
        #[arg(long, default_value_t = 30.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Construct and verify a solution converging to the configured excited state.
    StableDirection {
        #[command(flatten)]
        common: Common,
    },
    /// Run an acceptance suite and print one line per criterion.
    Acceptance {
        #[arg(long, value_enum, default_value_t = SuiteArg::Primary)]
        suite: SuiteArg,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
}

struct Run {
    cfg: ExperimentConfig,
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn table(&mut self, name: &str, mut t: Table) -> Result<()> {
        t.meta("config_hash", self.cfg.hash());
        t.meta("units", "ħ = 2m = 1; lengths in well radii of the configured potential");
        let path = self.dir.join(name);
        t.write(&path)?;
        self.manifest.artifact(&path);
        Ok(())
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &common.output {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

/// Execute a parsed command. The returned manifest has been written to disk.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let (name, common) = match &cli.command {
        Command::TuneWell { common, .. } => ("tune-well", common),
        Command::Spectrum { common } => ("spectrum", common),
        Command::Bifurcate { common, .. } => ("bifurcate", common),
        Command::SolveQ { common } => ("solve-q", common),
        Command::Linearize { common } => ("linearize", common),
        Command::Fgr { common } => ("fgr", common),
        Command::ResolventProfile { common, .. } => ("resolvent-profile", common),
        Command::Evolve { common, .. } => ("evolve", common),
        Command::StableDirection { common } => ("stable-direction", common),
        Command::Acceptance { common, .. } => ("acceptance", common),
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => {
            let dir = common.output.clone().unwrap_or_else(|| ExperimentConfig::default().output);
            let mut m = RunManifest::new(name, "");
            m.error = Some(e.to_string());
            m.write(&dir)?;
            return Ok(m);
        }
    };
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)?;
    let mut run = Run { manifest: RunManifest::new(name, &cfg.hash()), cfg, dir };
    let config_path = run.dir.join("config.toml");
    std::fs::write(&config_path, run.cfg.to_toml())?;
    run.manifest.artifact(&config_path);
    let start = Instant::now();
    let outcome = dispatch(&cli.command, &mut run);
    run.manifest.wall_time = start.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        run.manifest.error = Some(e.to_string());
    }
    run.manifest.write(&run.dir)?;
    Ok(run.manifest)
}

fn dispatch(cmd: &Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::TuneWell { class, radius, .. } => tune(run, *class, *radius),
        Command::Spectrum { .. } => spectrum(run),
        Command::Bifurcate { overlap, classify, .. } => bifurcate(run, *overlap, classify.as_deref()),
        Command::SolveQ { .. } => solve_q(run),
        Command::Linearize { .. } => linearize(run),
        Command::Fgr { .. } => fgr(run),
        Command::ResolventProfile { tau_min, tau_max, points, .. } => resolvent(run, *tau_min, *tau_max, *points),
        Command::Evolve { t_final, dt, .. } => evolve(run, *t_final, *dt),
        Command::StableDirection { .. } => stable_direction(run),
        Command::Acceptance { suite: SuiteArg::Primary, only, .. } => acceptance(run, only),
    }
}

fn first_eps(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.eps.first().copied().ok_or_else(|| Error::Config("eps list is empty".into()))
}

fn tune(run: &mut Run, class: ClassArg, radius: f64) -> Result<()> {
    let target = match class {
        ClassArg::Resonant => ResonanceClass::Resonant,
        ClassArg::NonResonant => ResonanceClass::NonResonant,
    };
    let w = tune_well(target, radius)?;
    let path = run.dir.join("well.txt");
    let text = format!("depth = {:.15e}\nradius = {:.15e}\n{}", w.potential.depth, w.potential.radius, w.report.to_text());
    std::fs::write(&path, text)?;
    run.manifest.artifact(&path);
    let grid = default_grid(&w.potential)?;
    let mut t = Table::new(&["l", "index", "energy"]);
    for l in 0..w.report.counts_per_l.len() {
        for (k, e) in richardson_energies(&w.potential, l, &grid)?.iter().enumerate() {
            t.push([l.to_string(), k.to_string(), num(*e)]);
        }
    }
    run.table("levels.csv", t)?;
    run.manifest.check("assumptions", w.report.passed, format!("counts {:?}, class {:?}", w.report.counts_per_l, w.report.resonance_class));
    Ok(())
}

fn spectrum(run: &mut Run) -> Result<()> {
    let model = run.cfg.model()?;
    let mut t = Table::new(&["epsilon", "operator", "label", "value", "value_over_lambda_eps2", "m", "parity"]);
    for &eps in &run.cfg.eps {
        let st = solve_branch(&model, crate::bound_states::Branch::QE, eps, run.cfg.lambda, &run.cfg.solver())?;
        let op = assemble(&model, &st)?;
        for which in [ScalarOp::LMinus, ScalarOp::LPlus] {
            for m in spectrum_scalar(&model, &op, which)?.modes {
                let s = m.value / (run.cfg.lambda * eps * eps);
                t.push([num(eps), format!("{which:?}"), m.label, num(m.value), num(s), m.m.to_string(), m.parity.to_string()]);
            }
        }
    }
    run.table("scalar_spectrum.csv", t)
}

fn parse_coeff(row: &[f64]) -> Result<Coeff> {
    if row.len() != 6 {
        return Err(Error::Config(format!("coefficient rows need 6 columns, found {}", row.len())));
    }
    Ok([C64::new(row[0], row[1]), C64::new(row[2], row[3]), C64::new(row[4], row[5])])
}

fn coeff_columns(z: &Coeff) -> Vec<String> {
    z.iter().flat_map(|c| [num(c.re), num(c.im)]).collect()
}

fn bifurcate(run: &mut Run, i: f64, classify: Option<&Path>) -> Result<()> {
    let header = ["orbit", "re0", "im0", "re1", "im1", "re2", "im2", "norm2", "residual"];
    let mut t = Table::new(&header);
    for r in solve_zero_order(i)? {
        let mut row = vec![r.orbit.label().to_string()];
        row.extend(coeff_columns(&r.z));
        row.extend([num(norm2(&r.z)), num(r.residual)]);
        t.push(row);
    }
    t.meta("overlap_I", num(i));
    run.table("roots.csv", t)?;
    if let Some(path) = classify {
        let mut c = Table::new(&header);
        for row in read_numeric_csv(path)? {
            let z = parse_coeff(&row)?;
            let mut out = Vec::new();
            match classify_root(z, i, DEFAULT_TOL) {
                Ok(r) => {
                    out.push(r.orbit.label().to_string());
                    out.extend(coeff_columns(&z));
                    out.extend([num(norm2(&z)), num(r.residual)]);
                }
                Err(e) => {
                    out.push(format!("unclassified: {e}"));
                    out.extend(coeff_columns(&z));
                    out.extend([num(norm2(&z)), String::new()]);
                }
            }
            c.push(out);
        }
        run.table("classified.csv", c)?;
    }
    Ok(())
}

fn solve_q(run: &mut Run) -> Result<()> {
    let model = run.cfg.model()?;
    let eps_max = run.cfg.eps.iter().copied().fold(0.0, f64::max);
    let path = solve_branch_path(&model, run.cfg.branch, eps_max, run.cfg.lambda, &run.cfg.solver())?;
    let mut t = Table::new(&["epsilon", "energy", "rho_eps", "rho_over_eps", "residual", "newton_iterations"]);
    for &eps in &run.cfg.eps {
        let q = path.iter().min_by(|a, b| (a.epsilon - eps).abs().partial_cmp(&(b.epsilon - eps).abs()).unwrap()).ok_or_else(|| Error::Precondition("empty branch path".into()))?;
        let q = if (q.epsilon - eps).abs() > 1e-12 { solve_branch(&model, run.cfg.branch, eps, run.cfg.lambda, &run.cfg.solver())? } else { q.clone() };
        t.push([num(q.epsilon), num(q.energy), num(q.rho_eps), num(q.rho_eps / q.epsilon), num(q.residual_norm), q.newton_iterations.to_string()]);
        let file = run.dir.join(format!("q_eps{eps}.bin"));
        field_to_array(&q.lab_field(&model)).write(&file)?;
        run.manifest.artifact(&file);
        run.manifest.check(&format!("residual at eps {eps}"), q.residual_norm <= 1e-8, num(q.residual_norm));
    }
    t.meta("branch", run.cfg.branch.label());
    run.table("branch.csv", t)
}

fn linearize(run: &mut Run) -> Result<()> {
    let model = run.cfg.model()?;
    let mut t = Table::new(&["epsilon", "window", "label", "sector", "re_omega", "im_omega", "residual"]);
    for &eps in &run.cfg.eps {
        let st = solve_branch(&model, run.cfg.branch, eps, run.cfg.lambda, &run.cfg.solver())?;
        let op = assemble(&model, &st)?;
        let table = mode_table(&model, &op)?;
        for (w, modes) in [("near_zero", &table.near_zero), ("near_kappa", &table.near_kappa)] {
            for m in modes {
                t.push([num(eps), w.to_string(), m.label.clone(), m.sector.clone(), num(m.omega.re), num(m.omega.im), num(m.residual)]);
            }
        }
        let (nz, nk) = crate::linearized::ModeTable::expected_counts(table.resonant);
        let ok = table.near_zero.len() == nz && table.near_kappa.len() == nk;
        run.manifest.check(&format!("mode counts at eps {eps}"), ok, format!("{} near zero, {} near κ", table.near_zero.len(), table.near_kappa.len()));
    }
    run.table("modes.csv", t)
}

fn fgr(run: &mut Run) -> Result<()> {
    let model = run.cfg.model()?;
    let cfg = AbsorptionConfig::default();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut t = Table::new(&["direction", "probe_energy", "extrapolated", "lambda0_lower", "fit_residual", "unreliable"]);
    for (label, z) in [("e1", [one, zero, zero]), ("co_rotating", [one, C64::i(), zero])] {
        let f = fgr_value(&model, z, &cfg)?;
        t.push([label.to_string(), num(f.probe_energy), num(f.extrapolated), num(f.lambda0_lower), num(f.fit_residual), f.unreliable.to_string()]);
        run.manifest.check(&format!("{label} positive"), f.lambda0_lower > 0.0, num(f.lambda0_lower));
    }
    run.table("fgr.csv", t)
}

fn resolvent(run: &mut Run, lo: f64, hi: f64, points: usize) -> Result<()> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err(Error::Config("need 0 < tau_min < tau_max and at least 2 points".into()));
    }
    let model = run.cfg.model()?;
    let st = solve_branch(&model, run.cfg.branch, first_eps(&run.cfg)?, run.cfg.lambda, &run.cfg.solver())?;
    let op = assemble(&model, &st)?;
    let taus: Vec<f64> = (0..points).map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64)).collect();
    let mut t = Table::new(&["sectors", "tau", "weighted_norm"]);
    let resonant = resonant_sectors(&op);
    for (name, secs) in [("all", &op.sectors), ("resonant", &resonant)] {
        if secs.is_empty() {
            continue;
        }
        let p = weighted_resolvent_profile(&model, &op, secs, &taus, DEFAULT_WEIGHT)?;
        for (tau, n) in p.tau.iter().zip(&p.norm) {
            t.push([name.to_string(), num(*tau), num(*n)]);
        }
    }
    t.meta("weight_s", num(DEFAULT_WEIGHT));
    run.table("resolvent.csv", t)
}

fn trajectory_table(rec: &TrajectoryRecord) -> Table {
    let mut header = vec!["t".to_string(), "mass".into(), "quadratic_form".into(), "absorbed".into()];
    header.extend(rec.norms.iter().map(|(n, _)| n.label()));
    let mut t = Table { header, ..Table::default() };
    for k in 0..rec.len() {
        let mut row = vec![num(rec.times[k]), num(rec.mass[k]), num(rec.energy[k]), num(rec.absorbed[k])];
        row.extend(rec.norms.iter().map(|(_, v)| num(v[k])));
        t.push(row);
    }
    t
}

fn evolve(run: &mut Run, t_final: f64, dt: f64) -> Result<()> {
    let model = run.cfg.model()?;
    let st = solve_branch(&model, run.cfg.branch, first_eps(&run.cfg)?, run.cfg.lambda, &run.cfg.solver())?;
    let op = assemble(&model, &st)?;
    let dec = decompose(&model, &op, &st)?;
    let prop = LinearPropagator::new(&model, &op, dt, Sponge::none())?;
    let eta = localized_data(&model, run.cfg.grid.lmax, 1.0, run.cfg.seed);
    let spec = RecordSpec::default();
    let (_, rec) = evolve_linearized(&model, &dec, &eta, t_final, &prop, &spec)?;
    run.table("trajectory.csv", trajectory_table(&rec))?;
    let drift = rec.energy_drift();
    run.manifest.check("quadratic form conserved", drift <= 1e-6, num(drift));
    let window = decade_window(3.0 / st.energy.abs(), spec.interval)?;
    if window.1 <= t_final {
        let fit = decay_fit(&rec, Norm::LInf, window)?;
        run.manifest.check("L∞ decay exponent", (-1.7..=-1.3).contains(&fit.exponent), format!("{:.4} ± {:.4}", fit.exponent, fit.error));
    }
    Ok(())
}

fn stable_direction(run: &mut Run) -> Result<()> {
    let model = run.cfg.model()?;
    let s = run.cfg.stable.clone();
    let st = solve_branch(&model, run.cfg.branch, first_eps(&run.cfg)?, run.cfg.lambda, &run.cfg.solver())?;
    let op = assemble(&model, &st)?;
    let dec = decompose(&model, &op, &st)?;
    let omega = OmegaConfig { t_truncation: s.t_truncation, dt: s.dt, mesh_points: s.mesh_points, max_sweeps: s.max_sweeps, ..OmegaConfig::default() };
    let verify = VerifyConfig { t_final: s.t_truncation, dt: s.dt, fit_start: s.t_truncation / 10.0, ..VerifyConfig::default() };
    let mut reports = Vec::new();
    for delta in [s.delta, 2.0 * s.delta] {
        let profile = AsymptoticProfile::smooth(&model, &dec, &st, s.data_lmax, delta, run.cfg.seed)?;
        let state = iterate_omega(&model, &op, &dec, &profile, run.cfg.case, &omega)?;
        let m = Modulation::new(&model, &dec, &profile, run.cfg.case)?;
        let syn = synthesize_solution(&m, &state)?;
        let corrected = verify_convergence(&model, &op, &profile, &syn.psi0, &verify)?;
        let control = verify_convergence(&model, &op, &profile, &control_initial(&profile), &verify)?;
        let mut sw = Table::new(&["sweep", "difference", "contraction", "endpoint_mismatch"]);
        for r in &state.sweeps {
            sw.push([r.sweep.to_string(), num(r.difference), r.contraction.map(num).unwrap_or_default(), num(r.endpoint_mismatch)]);
        }
        sw.meta("delta", num(delta));
        run.table(&format!("sweeps_delta{delta}.csv"), sw)?;
        let mut dv = Table::new(&["t", "corrected_deviation", "control_deviation"]);
        for k in 0..corrected.times.len() {
            dv.push([num(corrected.times[k]), num(corrected.deviation[k]), num(control.deviation[k])]);
        }
        dv.meta("delta", num(delta));
        run.table(&format!("deviation_delta{delta}.csv"), dv)?;
        let file = run.dir.join(format!("psi0_delta{delta}.bin"));
        field_to_array(&syn.psi0).write(&file)?;
        run.manifest.artifact(&file);
        run.manifest.check(&format!("contraction at δ {delta}"), state.contraction_factor < 1.0, num(state.contraction_factor));
        run.manifest.check(&format!("decay exponent at δ {delta}"), corrected.fit.exponent <= -0.7, num(corrected.fit.exponent));
        run.manifest.check(&format!("beats control at δ {delta}"), corrected.late_deviation < control.late_deviation, format!("{} vs {}", num(corrected.late_deviation), num(control.late_deviation)));
        reports.push(corrected);
    }
    let p = amplitude_log_ratio(&reports[0], &reports[1]);
    run.manifest.check("δ scaling", (1.4..=2.1).contains(&p), num(p));
    Ok(())
}

fn acceptance(run: &mut Run, only: &[usize]) -> Result<()> {
    let ids: Vec<usize> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let reports = run_suite(&ids, |r| println!("{}", r.line()))?;
    let mut t = Table::new(&["criterion", "passed", "seconds", "budget", "check", "check_passed", "detail"]);
    for r in &reports {
        for c in &r.checks {
            t.push([r.id.to_string(), r.passed().to_string(), format!("{:.2}", r.seconds), format!("{:.0}", r.budget), c.name.clone(), c.passed.to_string(), c.detail.clone()]);
        }
        run.manifest.check(&format!("criterion {}", r.id), r.passed(), r.line());
    }
    run.table("acceptance.csv", t)
}
