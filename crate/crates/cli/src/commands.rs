use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsrgs_core::certification::{dissipativity_residual, stability_check, STABILITY_TOL};
use qsrgs_core::composition::{compose_auto, compose_special, compose_theorem1, compose_theorem2, CompositionReport};
use qsrgs_core::io::{
    read_controller, read_family, read_manifest, read_triple, write_controller, write_family, write_manifest,
    write_triple, ControllerRecord,
};
use qsrgs_core::linalg::{min_sym_eig, spectral_abscissa};
use qsrgs_core::qsr::{classify, QsrTriple, SpecialKind, CLASSIFY_TOL};
use qsrgs_core::robot_sim::{
    example_families, rms_metrics, scalar_families, scheduling_signals, simulate_closed_loop, uniform_grid, Feedback,
    RmsMetrics, Schedule, SimOptions, SimResult,
};
use qsrgs_core::scheduling::{activity, stacked_sigma, sv_bounds, verify_pseudo_commute, SchedulingFamily, Side};
use qsrgs_core::synthesis::{synthesize_bank, PlantModel};

use crate::error::{CliError, Context};
use crate::plot::{line_plot, Series};
use crate::report::{self, g};
use crate::scenario::{Mode, Scenario};

/// Dissipativity LMI tolerance used by `certify`.
pub const LMI_TOL: f64 = 1e-7;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
}

impl Globals {
    fn dir(&self, scenario: Option<&Scenario>) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| scenario.map(|s| s.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn scenario(&self, path: &Path) -> Result<Scenario, CliError> {
        let mut s = Scenario::load(path)?;
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::config(format!("--dt must be positive, got {dt}")));
            }
            s.dt = dt;
        }
        Ok(s)
    }

    fn header(&self, out: &mut String, command: &str, scenario: Option<&Scenario>) {
        let _ = writeln!(out, "# qsrgs {command}");
        if let Some(s) = scenario {
            let _ = writeln!(out, "scenario = {}", s.path.display());
            let _ = writeln!(out, "dt = {}", g(s.dt));
            let _ = writeln!(out, "horizon = {}", g(s.horizon));
            for n in &s.defaults_applied {
                let _ = writeln!(out, "default: {n}");
            }
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed = {seed} (no command draws random numbers)");
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn load_triple(path: &Path) -> Result<QsrTriple, CliError> {
    read_triple(&read_text(path)?).context(path.display().to_string())
}

fn load_family(path: &Path) -> Result<SchedulingFamily, CliError> {
    read_family(&read_text(path)?).context(path.display().to_string())
}

fn is_manifest(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("controller-bank"))
}

/// Controller files, with manifests expanded relative to their directory.
fn load_controllers(paths: &[PathBuf]) -> Result<Vec<(PathBuf, ControllerRecord)>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        let text = read_text(path)?;
        if is_manifest(&text) {
            let base = path.parent().unwrap_or(Path::new("."));
            let files = read_manifest(&text).context(path.display().to_string())?;
            let listed: Vec<PathBuf> = files.iter().map(|f| base.join(f)).collect();
            out.extend(load_controllers(&listed)?);
        } else {
            let rec = read_controller(&text).context(path.display().to_string())?;
            out.push((path.clone(), rec));
        }
    }
    if out.is_empty() {
        return Err(CliError::config("no controller files given"));
    }
    Ok(out)
}

/// Bank from a manifest when given, otherwise synthesized from the scenario.
fn bank_for(
    scenario: &Scenario,
    manifest: Option<&Path>,
    notes: &mut String,
) -> Result<Vec<ControllerRecord>, CliError> {
    match manifest {
        Some(m) => {
            let _ = writeln!(notes, "bank = {}", m.display());
            Ok(load_controllers(&[m.to_path_buf()])?
                .into_iter()
                .map(|(_, r)| r)
                .collect())
        }
        None => {
            let _ = writeln!(
                notes,
                "bank = synthesized in memory from the scenario (no --bank given)"
            );
            let bank = synthesize_bank(&scenario.model, &scenario.points, &scenario.weights)?;
            Ok(bank.iter().map(ControllerRecord::from).collect())
        }
    }
}

fn scenario_families(scenario: &Scenario, mode: Mode) -> Result<Vec<SchedulingFamily>, CliError> {
    match mode {
        Mode::Matrix => Ok(example_families(&uniform_grid(scenario.horizon, scenario.dt))?),
        Mode::Scalar => Ok(scalar_families(&uniform_grid(scenario.horizon, scenario.dt))?),
        Mode::File => scenario.family_files.iter().map(|f| load_family(f)).collect(),
        Mode::None | Mode::Unscheduled => Err(CliError::config(format!(
            "[scheduling] mode \"{}\" has no scheduling families",
            mode.name()
        ))),
    }
}

pub fn synthesize(globals: &Globals, scenario_path: &Path) -> Result<String, CliError> {
    let scenario = globals.scenario(scenario_path)?;
    let mut out = String::new();
    globals.header(&mut out, "synthesize", Some(&scenario));
    let bank = synthesize_bank(&scenario.model, &scenario.points, &scenario.weights)?;
    let plant = scenario.model.plant_triple();
    let dir = globals.dir(Some(&scenario));
    let mut names = Vec::new();
    let mut files = Vec::new();
    for (c, deg) in bank.iter().zip(&scenario.points_deg) {
        let stability =
            stability_check(&plant, c.triple(), 1.0, STABILITY_TOL).context(format!("controller {}", c.index))?;
        let abscissa = spectral_abscissa(&c.realization().a)?;
        let _ = writeln!(out, "\n[controller {}]", c.index);
        let _ = writeln!(out, "q_bar_deg = [{}, {}, {}]", g(deg[0]), g(deg[1]), g(deg[2]));
        let _ = writeln!(out, "epsilon = {}", g(c.certificate.epsilon));
        let _ = writeln!(out, "beta = {}", g(c.certificate.beta));
        let _ = writeln!(out, "lmi_max_eig = {}", g(c.certificate.lmi_max_eig));
        let _ = writeln!(out, "p_min_eig = {}", g(c.certificate.p_min_eig));
        let _ = writeln!(out, "spectral_abscissa_a_c = {}", g(abscissa));
        let _ = writeln!(out, "stability_rho = {}", g(stability.rho));
        let _ = writeln!(out, "stability_block_max_eig = {}", g(stability.block_max_eig));
        let name = format!("controller_{}.txt", c.index);
        let _ = writeln!(out, "file = {name}");
        files.push((name.clone(), write_controller(&ControllerRecord::from(c))));
        names.push(name);
    }
    for (name, text) in &files {
        write_file(&dir, name, text)?;
    }
    write_file(&dir, "bank.txt", &write_manifest(&names))?;
    let _ = writeln!(out, "\nmanifest = bank.txt");
    write_file(&dir, "synthesize_report.txt", &out)?;
    Ok(out)
}

pub fn certify(globals: &Globals, files: &[PathBuf], scenario_path: Option<&Path>) -> Result<String, CliError> {
    let scenario = scenario_path.map(|p| globals.scenario(p)).transpose()?;
    let model = scenario.as_ref().map(|s| s.model.clone()).unwrap_or_default();
    let plant = model.plant_triple();
    let mut out = String::new();
    globals.header(&mut out, "certify", scenario.as_ref());
    if scenario.is_none() {
        let _ = writeln!(out, "plant = reference parameters (no --scenario given)");
    }
    let mut failures = Vec::new();
    for (path, rec) in load_controllers(files)? {
        let res = dissipativity_residual(&rec.realization, &rec.triple, &rec.p).context(path.display().to_string())?;
        let p_min = min_sym_eig(&rec.p);
        let lmi_ok = res.max_eig <= LMI_TOL && p_min > 0.0;
        let _ = writeln!(out, "\n[controller {}]", rec.index);
        let _ = writeln!(out, "file = {}", path.display());
        let _ = writeln!(out, "lmi_max_eig = {}", g(res.max_eig));
        let _ = writeln!(out, "p_min_eig = {}", g(p_min));
        let _ = writeln!(out, "dissipativity = {}", if lmi_ok { "pass" } else { "FAIL" });
        if !lmi_ok {
            failures.push(format!("controller {} dissipativity", rec.index));
        }
        match stability_check(&plant, &rec.triple, 1.0, STABILITY_TOL) {
            Ok(cert) => {
                let _ = writeln!(out, "stability_block_max_eig = {}", g(cert.block_max_eig));
                let _ = writeln!(out, "stability = pass");
            }
            Err(qsrgs_core::Error::Infeasible(msg)) => {
                let _ = writeln!(out, "stability = FAIL ({msg})");
                failures.push(format!("controller {} stability", rec.index));
            }
            Err(e) => return Err(e).context(path.display().to_string()),
        }
    }
    if failures.is_empty() {
        let _ = writeln!(out, "\nresult = pass");
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::CheckFailed(format!(
            "certification failed: {}",
            failures.join(", ")
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Theorem {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Auto,
}

pub struct ComposeArgs {
    pub scenario: Option<PathBuf>,
    pub bank: Option<PathBuf>,
    pub triples: Vec<PathBuf>,
    pub families: Vec<PathBuf>,
    pub theorem: Theorem,
    pub special: Option<String>,
}

pub fn compose(globals: &Globals, args: &ComposeArgs) -> Result<String, CliError> {
    let scenario = args.scenario.as_deref().map(|p| globals.scenario(p)).transpose()?;
    let mut out = String::new();
    globals.header(&mut out, "compose", scenario.as_ref());
    let mut triples: Vec<QsrTriple> = args.triples.iter().map(|p| load_triple(p)).collect::<Result<_, _>>()?;
    match (&scenario, &args.bank) {
        (Some(s), bank) => triples.extend(bank_for(s, bank.as_deref(), &mut out)?.into_iter().map(|r| r.triple)),
        (None, Some(bank)) => {
            let _ = writeln!(out, "bank = {}", bank.display());
            triples.extend(
                load_controllers(std::slice::from_ref(bank))?
                    .into_iter()
                    .map(|(_, r)| r.triple),
            );
        }
        (None, None) => {}
    }
    if triples.is_empty() {
        return Err(CliError::config("no subsystems: give --triples, --bank or --scenario"));
    }
    let families: Vec<SchedulingFamily> = if !args.families.is_empty() {
        args.families.iter().map(|p| load_family(p)).collect::<Result<_, _>>()?
    } else if let Some(s) = &scenario {
        let _ = writeln!(out, "families = scenario mode \"{}\"", s.mode.name());
        scenario_families(s, s.mode)?
    } else {
        return Err(CliError::config(
            "no scheduling families: give --families or --scenario",
        ));
    };
    let report: CompositionReport = match &args.special {
        Some(kind) => {
            let kind: SpecialKind = kind.parse()?;
            let cases: Vec<_> = triples.iter().map(|t| classify(t, CLASSIFY_TOL)).collect();
            if let Some((i, c)) = cases.iter().enumerate().find(|(_, c)| c.kind() != kind) {
                return Err(CliError::Precondition(format!(
                    "subsystem {} is classified as {c}, not {kind}",
                    i + 1
                )));
            }
            compose_special(&cases, &families)?
        }
        None => match args.theorem {
            Theorem::One => compose_theorem1(&triples, &families)?,
            Theorem::Two => compose_theorem2(&triples, &families)?,
            Theorem::Auto => compose_auto(&triples, &families)?,
        },
    };
    let _ = writeln!(out, "subsystems = {}", triples.len());
    out.push('\n');
    out.push_str(&report::composition(&report));
    let dir = globals.dir(scenario.as_ref());
    write_file(&dir, "composed_triple.txt", &write_triple(&report.composed))?;
    write_file(&dir, "compose_report.txt", &out)?;
    Ok(out)
}

fn family_summary(out: &mut String, families: &[SchedulingFamily]) -> Result<(), CliError> {
    for f in families {
        let b = sv_bounds(f);
        let _ = writeln!(out, "\n[family {}]", f.index());
        let _ = writeln!(out, "stamps = {}", f.len());
        let _ = writeln!(out, "sigma_bar_u = {}", g(b.sigma_bar_u));
        let _ = writeln!(out, "sigma_bar_y = {}", g(b.sigma_bar_y));
        let _ = writeln!(out, "nu_bar_u = {}", g(b.nu_bar_u));
        let _ = writeln!(out, "nu_bar_y = {}", g(b.nu_bar_y));
        let fr_u = b.full_rank_u.iter().filter(|v| **v).count();
        let fr_y = b.full_rank_y.iter().filter(|v| **v).count();
        let _ = writeln!(out, "full_rank_u_stamps = {fr_u}");
        let _ = writeln!(out, "full_rank_y_stamps = {fr_y}");
    }
    let a_u = activity(families, Side::Input)?;
    let a_y = activity(families, Side::Output)?;
    let _ = writeln!(out, "\n[bank]");
    let _ = writeln!(out, "input_active = {}", a_u.active);
    let _ = writeln!(out, "input_strongly_active = {}", a_u.strongly_active);
    let _ = writeln!(out, "output_active = {}", a_y.active);
    let _ = writeln!(out, "output_strongly_active = {}", a_y.strongly_active);
    let _ = writeln!(out, "sigma_bar_psi = {}", g(stacked_sigma(families)?));
    Ok(())
}

pub fn schedule_build(globals: &Globals, scenario_path: &Path, mode: Option<Mode>) -> Result<String, CliError> {
    let scenario = globals.scenario(scenario_path)?;
    let mode = mode.unwrap_or(scenario.mode);
    if !matches!(mode, Mode::Scalar | Mode::Matrix) {
        return Err(CliError::config(format!(
            "schedule build needs mode scalar or matrix, got \"{}\"",
            mode.name()
        )));
    }
    let mut out = String::new();
    globals.header(&mut out, "schedule build", Some(&scenario));
    let _ = writeln!(out, "mode = {}", mode.name());
    let families = scenario_families(&scenario, mode)?;
    let s = PlantModel::controller_s();
    let dir = globals.dir(Some(&scenario));
    for f in &families {
        let name = format!("family_{}.txt", f.index());
        write_file(&dir, &name, &write_family(f)?)?;
        let (_, res) = verify_pseudo_commute(f, &s, 0.0);
        let _ = writeln!(
            out,
            "family {} -> {name} (commute residual against S_c: {})",
            f.index(),
            g(res)
        );
    }
    family_summary(&mut out, &families)?;
    write_file(&dir, "schedule_report.txt", &out)?;
    Ok(out)
}

pub fn schedule_verify(
    globals: &Globals,
    families: &[PathBuf],
    triple: Option<&Path>,
    tol: f64,
) -> Result<String, CliError> {
    let mut out = String::new();
    globals.header(&mut out, "schedule verify", None);
    let s = match triple {
        Some(p) => {
            let _ = writeln!(out, "S from {}", p.display());
            load_triple(p)?.s().clone()
        }
        None => {
            let _ = writeln!(out, "S = S_c (controller cross term, no --triple given)");
            PlantModel::controller_s()
        }
    };
    let _ = writeln!(out, "tolerance = {}", g(tol));
    let mut failed = Vec::new();
    for p in families {
        let f = load_family(p)?;
        let (ok, res) = verify_pseudo_commute(&f, &s, tol);
        let _ = writeln!(
            out,
            "family {} ({}): residual = {} {}",
            f.index(),
            p.display(),
            g(res),
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            failed.push(f.index().to_string());
        }
    }
    if failed.is_empty() {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::Precondition(format!(
            "families {} do not pseudo-commute with S",
            failed.join(", ")
        )))
    }
}

pub fn schedule_bounds(globals: &Globals, families: &[PathBuf]) -> Result<String, CliError> {
    let mut out = String::new();
    globals.header(&mut out, "schedule bounds", None);
    let fams: Vec<SchedulingFamily> = families.iter().map(|p| load_family(p)).collect::<Result<_, _>>()?;
    if fams.is_empty() {
        return Err(CliError::config("no family files given"));
    }
    family_summary(&mut out, &fams)?;
    Ok(out)
}

const CSV_HEADER: &str = "t,q1,q2,q3,qd1,qd2,qd3,e1,e2,e3,tau1,tau2,tau3,u1,u2,V,supply";

/// Angles and rates in degrees, torques in N·m, energies in J.
fn csv(r: &SimResult) -> String {
    let mut out = String::with_capacity(r.len() * 17 * 24);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..r.len() {
        let e = r.error(k);
        let mut row = vec![g(r.t[k])];
        row.extend(r.q[k].iter().map(|v| g(v.to_degrees())));
        row.extend(r.q_dot[k].iter().map(|v| g(v.to_degrees())));
        row.extend(e.iter().map(|v| g(v.to_degrees())));
        row.extend(r.tau[k].iter().map(|v| g(*v)));
        row.extend(r.u_bar[k].iter().map(|v| g(*v)));
        row.push(g(r.storage[k]));
        row.push(g(r.supply[k]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn joint_series<'a>(r: &'a SimResult, name: &str, f: impl Fn(usize, usize) -> f64) -> Vec<Series<'a>> {
    (0..3)
        .map(|j| Series {
            label: format!("{name}{}", j + 1),
            x: &r.t,
            y: (0..r.len()).map(|k| f(k, j)).collect(),
            dashed: false,
        })
        .collect()
}

fn plots(r: &SimResult, mode: &str) -> Vec<(String, String)> {
    let mut traj = joint_series(r, "q", |k, j| r.q[k][j].to_degrees());
    traj.extend((0..3).map(|j| Series {
        label: format!("θd{}", j + 1),
        x: &r.t,
        y: r.theta_d.iter().map(|v| v[j].to_degrees()).collect(),
        dashed: true,
    }));
    let errors = joint_series(r, "e", |k, j| r.error(k)[j].to_degrees());
    let torques = joint_series(r, "τ", |k, j| r.tau[k][j]);
    vec![
        (
            format!("{mode}_trajectories.svg"),
            line_plot(&format!("Joint angles ({mode})"), "t (s)", "angle (deg)", &traj),
        ),
        (
            format!("{mode}_errors.svg"),
            line_plot(&format!("Tracking errors ({mode})"), "t (s)", "error (deg)", &errors),
        ),
        (
            format!("{mode}_torques.svg"),
            line_plot(&format!("Joint torques ({mode})"), "t (s)", "torque (N m)", &torques),
        ),
    ]
}

fn signals_plot(horizon: f64, dt: f64) -> String {
    let grid = uniform_grid(horizon, dt);
    let s: Vec<[f64; 3]> = grid.iter().map(|&t| scheduling_signals(t)).collect();
    let series: Vec<Series<'_>> = (0..3)
        .map(|i| Series {
            label: format!("s{}", i + 1),
            x: &grid,
            y: s.iter().map(|v| v[i]).collect(),
            dashed: false,
        })
        .collect();
    line_plot("Scheduling signals", "t (s)", "s_i", &series)
}

struct Run {
    mode: Mode,
    result: SimResult,
    rms: RmsMetrics,
    max_torque: f64,
}

fn run_mode(
    scenario: &Scenario,
    mode: Mode,
    bank: &[ControllerRecord],
    families: Option<&[SchedulingFamily]>,
) -> Result<Run, CliError> {
    let opts = SimOptions {
        dt: scenario.dt,
        horizon: scenario.horizon,
        rate_feedforward: scenario.rate_feedforward,
        initial: None,
    };
    let all: Vec<_> = bank.iter().map(|r| r.realization.clone()).collect();
    let k = scenario.unscheduled_controller - 1;
    let feedback = match mode {
        Mode::None => Feedback::None,
        Mode::Unscheduled => Feedback::Scheduled {
            controllers: &all[k..=k],
            schedule: Schedule::Identity,
        },
        Mode::Scalar => Feedback::Scheduled {
            controllers: &all,
            schedule: Schedule::Scalar,
        },
        Mode::Matrix => Feedback::Scheduled {
            controllers: &all,
            schedule: Schedule::Matrix,
        },
        Mode::File => Feedback::Scheduled {
            controllers: &all,
            schedule: Schedule::Families(families.expect("file mode loads its families")),
        },
    };
    let result = simulate_closed_loop(&scenario.model, &scenario.trajectory, feedback, &opts)
        .context(format!("{} simulation", mode.name()))?;
    let rms = rms_metrics(&result)?;
    let max_torque = result.max_abs_torque();
    Ok(Run {
        mode,
        result,
        rms,
        max_torque,
    })
}

pub fn simulate(
    globals: &Globals,
    scenario_path: &Path,
    compare: bool,
    bank: Option<&Path>,
) -> Result<String, CliError> {
    let scenario = globals.scenario(scenario_path)?;
    let mut out = String::new();
    globals.header(&mut out, "simulate", Some(&scenario));
    let modes = if compare {
        vec![Mode::Unscheduled, Mode::Scalar, Mode::Matrix]
    } else {
        vec![scenario.mode]
    };
    let _ = writeln!(out, "rate_feedforward = {}", scenario.rate_feedforward);
    let records = if modes == [Mode::None] {
        Vec::new()
    } else {
        bank_for(&scenario, bank, &mut out)?
    };
    if modes.contains(&Mode::Unscheduled) {
        let _ = writeln!(out, "unscheduled_controller = {}", scenario.unscheduled_controller);
        if scenario.unscheduled_controller > records.len() {
            return Err(CliError::config(format!(
                "[scheduling] unscheduled_controller = {} but the bank has {} controllers",
                scenario.unscheduled_controller,
                records.len()
            )));
        }
    }
    if modes.iter().any(|m| matches!(m, Mode::Scalar | Mode::Matrix)) && records.len() != 3 {
        return Err(CliError::config(format!(
            "the built-in schedules drive three controllers, the bank has {}",
            records.len()
        )));
    }
    let families = if modes.contains(&Mode::File) {
        Some(scenario_families(&scenario, Mode::File)?)
    } else {
        None
    };

    // Modes are independent; run them side by side.
    let runs: Vec<Result<Run, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&m| {
                let (scenario, records, families) = (&scenario, &records, families.as_deref());
                scope.spawn(move || run_mode(scenario, m, records, families))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let runs: Vec<Run> = runs.into_iter().collect::<Result<_, _>>()?;

    let dir = globals.dir(Some(&scenario));
    let mut rms_csv = String::from("mode,joint,angle_rms_deg,rate_rms_deg,max_abs_torque\n");
    let _ = writeln!(out, "\n[rms]");
    let _ = writeln!(
        out,
        "{:<12} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24}",
        "mode",
        "angle_j1_deg",
        "angle_j2_deg",
        "angle_j3_deg",
        "rate_j1_deg_s",
        "rate_j2_deg_s",
        "rate_j3_deg_s",
        "max_abs_torque"
    );
    for run in &runs {
        let name = run.mode.name();
        write_file(&dir, &format!("sim_{name}.csv"), &csv(&run.result))?;
        for (file, svg) in plots(&run.result, name) {
            write_file(&dir, &file, &svg)?;
        }
        let _ = write!(out, "{name:<12}");
        for v in run.rms.angle_deg.iter().chain(&run.rms.rate_deg) {
            let _ = write!(out, " {:>24}", g(*v));
        }
        let _ = writeln!(out, " {:>24}", g(run.max_torque));
        for j in 0..run.rms.angle_deg.len() {
            let _ = writeln!(
                rms_csv,
                "{name},{},{},{},{}",
                j + 1,
                g(run.rms.angle_deg[j]),
                g(run.rms.rate_deg[j]),
                g(run.max_torque)
            );
        }
    }
    write_file(&dir, "signals.svg", &signals_plot(scenario.horizon, scenario.dt))?;
    write_file(&dir, "rms.csv", &rms_csv)?;
    if compare {
        let by = |m: Mode| runs.iter().find(|r| r.mode == m).expect("compare runs every mode");
        let (u, s, m) = (by(Mode::Unscheduled), by(Mode::Scalar), by(Mode::Matrix));
        let _ = writeln!(out, "\n[ordering matrix < scalar < unscheduled]");
        for j in [1, 2] {
            let angle = m.rms.angle_deg[j] < s.rms.angle_deg[j] && s.rms.angle_deg[j] < u.rms.angle_deg[j];
            let rate = m.rms.rate_deg[j] < s.rms.rate_deg[j] && s.rms.rate_deg[j] < u.rms.rate_deg[j];
            let _ = writeln!(out, "joint {} angle: {}", j + 1, if angle { "yes" } else { "no" });
            let _ = writeln!(out, "joint {} rate: {}", j + 1, if rate { "yes" } else { "no" });
        }
    }
    write_file(&dir, "simulate_report.txt", &out)?;
    Ok(out)
}
