//! Step loop orchestration, run directories and run comparison.
//!
//! A run directory holds `config.json`, `diagnostics.csv` (one row per step),
//! `snapshot_NNN.bin` for each requested time, `final.bin` and `summary.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::diagnostics::{
    bdiv_max, grid_cells, helicity_rate, mean_energy, mesh_cells, DiagnosticsRecord, CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::fv::{advance_uniform, BoundaryBudget, TimeController, UniformGrid};
use crate::mr::{
    compression_ratio, initial_mesh, mr_step, CompressionHistory, FluxWorkspace, QuadtreeMesh,
    ThresholdPolicy,
};
use crate::physics::{ConservedState, GlmParams};
use crate::snapshot;

/// Helicity-rate constant.
pub const HELICITY_A: f64 = 1.0;

#[derive(Clone, Debug)]
pub enum Field {
    Uniform(UniformGrid),
    Adaptive {
        mesh: QuadtreeMesh,
        ws: FluxWorkspace,
    },
}

/// A run in progress.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: RunConfig,
    glm: GlmParams,
    policy: ThresholdPolicy,
    field: Field,
    clock: TimeController,
    history: CompressionHistory,
    steps: usize,
    peak_memory: usize,
    last: DiagnosticsRecord,
    last_budget: BoundaryBudget,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let glm = config.glm();
        let policy = config.threshold_policy();
        let problem = config.problem;
        let domain = problem.domain();
        let field = match config.mode {
            Mode::FvUniform => {
                let mut g = UniformGrid::with_level(config.level, domain, problem.boundary());
                problem.init_grid(&mut g)?;
                Field::Uniform(g)
            }
            Mode::Mr => {
                problem.check_domain(&domain)?;
                let mesh = initial_mesh(config.level, domain, problem.boundary(), &policy, |x, y| {
                    problem.initial_state(x, y)
                })?;
                Field::Adaptive {
                    mesh,
                    ws: FluxWorkspace::default(),
                }
            }
        };
        let mut sim = Self {
            clock: TimeController::new(config.t_end, config.cfl),
            history: CompressionHistory::new(config.level),
            config,
            glm,
            policy,
            field,
            steps: 0,
            peak_memory: 0,
            last: DiagnosticsRecord {
                t: 0.0,
                dt: 0.0,
                ch: 0.0,
                bdiv_max: 0.0,
                energy: 0.0,
                helicity_rate: 0.0,
                leaf_count: 0,
                virtual_count: 0,
                dc_running: 0.0,
            },
            last_budget: ConservedState::ZERO,
        };
        sim.peak_memory = sim.leaf_count();
        sim.last = sim.measure(0.0, 0.0, 0, f64::NAN);
        Ok(sim)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.clock.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn finished(&self) -> bool {
        self.clock.finished()
    }

    /// Cells advanced in time: grid cells or quadtree leaves.
    pub fn leaf_count(&self) -> usize {
        match &self.field {
            Field::Uniform(g) => g.cell_count(),
            Field::Adaptive { mesh, .. } => mesh.leaf_count(),
        }
    }

    /// Largest leaves-plus-virtual count seen so far.
    pub fn peak_memory(&self) -> usize {
        self.peak_memory
    }

    pub fn history(&self) -> &CompressionHistory {
        &self.history
    }

    pub fn compression(&self) -> Result<f64> {
        compression_ratio(&self.history)
    }

    /// Diagnostics of the current state.
    pub fn diagnostics(&self) -> &DiagnosticsRecord {
        &self.last
    }

    /// Boundary budget of the last step.
    pub fn last_budget(&self) -> &BoundaryBudget {
        &self.last_budget
    }

    /// Area-weighted totals of the conserved variables.
    pub fn totals(&self) -> ConservedState {
        match &self.field {
            Field::Uniform(g) => g.totals(),
            Field::Adaptive { mesh, .. } => mesh.totals(),
        }
    }

    /// The solution on the uniform grid of level `L` (piecewise-constant
    /// synthesis for adaptive runs).
    pub fn uniform_field(&self) -> UniformGrid {
        match &self.field {
            Field::Uniform(g) => g.clone(),
            Field::Adaptive { mesh, .. } => mesh.to_uniform(self.config.level),
        }
    }

    fn measure(&self, dt: f64, ch: f64, virtual_count: usize, dc: f64) -> DiagnosticsRecord {
        let area = self.config.problem.domain().area();
        let (bdiv, energy, hel) = match &self.field {
            Field::Uniform(g) => (
                bdiv_max(g),
                mean_energy(grid_cells(g), area),
                helicity_rate(grid_cells(g), HELICITY_A),
            ),
            Field::Adaptive { mesh, .. } => (
                crate::diagnostics::bdiv_max_mesh(mesh),
                mean_energy(mesh_cells(mesh), area),
                helicity_rate(mesh_cells(mesh), HELICITY_A),
            ),
        };
        DiagnosticsRecord {
            t: self.clock.t,
            dt,
            ch,
            bdiv_max: bdiv,
            energy,
            helicity_rate: hel,
            leaf_count: self.leaf_count(),
            virtual_count,
            dc_running: if dc.is_nan() { 100.0 * self.leaf_count() as f64 / self.history.full_cells as f64 } else { dc },
        }
    }

    /// One time step, clipped so that it does not pass `stop` or `t_end`.
    pub fn step(&mut self, stop: Option<f64>) -> Result<DiagnosticsRecord> {
        if self.finished() {
            return Err(Error::Config(format!("run already reached t_end = {}", self.config.t_end)));
        }
        let (dt, ch, virtual_count, budget) = match &mut self.field {
            Field::Uniform(g) => {
                let r = advance_uniform(g, &mut self.clock, &self.glm, self.config.psi_damp_per_stage, stop)?;
                self.history.push(g.cell_count());
                (r.dt, r.ch, 0, r.budget)
            }
            Field::Adaptive { mesh, ws } => {
                let r = mr_step(
                    mesh,
                    ws,
                    &mut self.clock,
                    &self.glm,
                    &self.policy,
                    self.config.psi_damp_per_stage,
                    stop,
                )?;
                self.peak_memory = self.peak_memory.max(r.memory_cells());
                self.history.push(r.leaves_after);
                (r.dt, r.ch, r.virtual_count, r.budget)
            }
        };
        self.steps += 1;
        self.peak_memory = self.peak_memory.max(self.leaf_count());
        self.last_budget = budget;
        let dc = compression_ratio(&self.history)?;
        self.last = self.measure(dt, ch, virtual_count, dc);
        Ok(self.last)
    }

    /// Step until `t` (or `t_end`, whichever is first), calling `on_step`
    /// after every step.
    pub fn run_until(&mut self, t: f64, mut on_step: impl FnMut(&Self)) -> Result<()> {
        let target = t.min(self.config.t_end);
        while self.clock.t < target && !self.finished() {
            self.step(Some(target))?;
            on_step(self);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub mode: String,
    pub level: u8,
    pub steps: usize,
    pub t_final: f64,
    /// Time-averaged compression in percent.
    pub dc: f64,
    pub peak_memory_cells: usize,
    pub final_leaf_count: usize,
    pub final_energy: f64,
    pub max_bdiv: f64,
}

fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:03}.bin")
}

/// Execute a run and write its directory.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let out = &config.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;

    let mut sim = Simulation::new(config.clone())?;
    let mut csv = std::io::BufWriter::new(fs::File::create(out.join("diagnostics.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;

    let mut times: Vec<(usize, f64)> = config.snapshots.iter().copied().enumerate().collect();
    times.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut next = 0;
    let save_due = |sim: &Simulation, next: &mut usize| -> Result<()> {
        while *next < times.len() && times[*next].1 <= sim.time() {
            let (k, _) = times[*next];
            snapshot::save(&out.join(snapshot_name(k)), &sim.uniform_field(), sim.time(), config.gamma)?;
            *next += 1;
        }
        Ok(())
    };
    save_due(&sim, &mut next)?;

    let mut max_bdiv = sim.diagnostics().bdiv_max;
    while !sim.finished() {
        let stop = times.get(next).map(|(_, t)| *t);
        let rec = sim.step(stop)?;
        writeln!(csv, "{}", rec.csv_row())?;
        max_bdiv = max_bdiv.max(rec.bdiv_max);
        save_due(&sim, &mut next)?;
        if sim.steps() % 50 == 0 {
            info!("step {} t = {:.6} leaves = {}", sim.steps(), rec.t, rec.leaf_count);
        }
    }
    csv.flush()?;
    snapshot::save(&out.join("final.bin"), &sim.uniform_field(), sim.time(), config.gamma)?;

    let summary = RunSummary {
        problem: config.problem.id().to_string(),
        mode: config.mode.id().to_string(),
        level: config.level,
        steps: sim.steps(),
        t_final: sim.time(),
        dc: sim.compression()?,
        peak_memory_cells: sim.peak_memory(),
        final_leaf_count: sim.leaf_count(),
        final_energy: sim.diagnostics().energy,
        max_bdiv,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub l1_density_error: f64,
    pub dc: f64,
    pub peak_memory_cells: usize,
    pub run_level: u8,
    pub reference_level: u8,
}

fn read_run(dir: &Path) -> Result<(RunConfig, RunSummary, UniformGrid)> {
    let config: RunConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
    let snap = snapshot::load(&dir.join("final.bin"), config.problem.domain())?;
    Ok((config, summary, snap.grid))
}

/// L1 density error of a run against a reference run of the same problem.
pub fn compare(run_dir: &Path, ref_dir: &Path) -> Result<CompareReport> {
    let (rc, rs, rg) = read_run(run_dir)?;
    let (fc, fs_, fg) = read_run(ref_dir)?;
    if rc.problem != fc.problem {
        return Err(Error::IncompatibleRuns(format!(
            "problems differ: {} vs {}",
            rc.problem, fc.problem
        )));
    }
    if fc.level < rc.level {
        return Err(Error::IncompatibleRuns(format!(
            "reference level {} is below run level {}",
            fc.level, rc.level
        )));
    }
    if (rs.t_final - fs_.t_final).abs() > 1e-12 * rs.t_final.abs().max(1.0) {
        return Err(Error::IncompatibleRuns(format!(
            "final times differ: {} vs {}",
            rs.t_final, fs_.t_final
        )));
    }
    Ok(CompareReport {
        l1_density_error: crate::diagnostics::l1_density_error(&rg, &fg)?,
        dc: rs.dc,
        peak_memory_cells: rs.peak_memory_cells,
        run_level: rc.level,
        reference_level: fc.level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mr::ThresholdMode;
    use crate::problems::Problem;

    fn small(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            level: 4,
            t_end: 0.01,
            ..RunConfig::default()
        }
    }

    #[test]
    fn uniform_run_closes_budget() {
        let mut sim = Simulation::new(small(Mode::FvUniform)).unwrap();
        while !sim.finished() {
            let before = sim.totals();
            sim.step(None).unwrap();
            let d = sim.totals().rho - before.rho - sim.last_budget().rho;
            assert!(d.abs() < 1e-12 * before.rho);
        }
        assert_eq!(sim.time(), 0.01);
        assert!(sim.diagnostics().is_valid());
        assert_eq!(sim.compression().unwrap(), 100.0);
    }

    #[test]
    fn zero_threshold_matches_uniform() {
        let mut a = Simulation::new(small(Mode::FvUniform)).unwrap();
        let mut cfg = small(Mode::Mr);
        cfg.threshold_mode = ThresholdMode::Constant;
        cfg.epsilon = 0.0;
        let mut b = Simulation::new(cfg).unwrap();
        a.run_until(1.0, |_| {}).unwrap();
        b.run_until(1.0, |_| {}).unwrap();
        assert_eq!(a.steps(), b.steps());
        assert_eq!(a.uniform_field(), b.uniform_field());
    }

    #[test]
    fn stepping_past_the_end_is_an_error() {
        let mut sim = Simulation::new(small(Mode::Mr)).unwrap();
        sim.run_until(1.0, |_| {}).unwrap();
        assert!(sim.finished());
        assert!(sim.step(None).is_err());
    }

    #[test]
    fn run_directory_and_compare() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Mode::Mr);
        cfg.out = dir.path().join("mr");
        cfg.snapshots = vec![0.0, 0.005];
        let s = run(&cfg).unwrap();
        assert!(s.steps > 0 && s.dc > 0.0 && s.dc <= 100.0);
        let csv = fs::read_to_string(cfg.out.join("diagnostics.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let rows: Vec<_> = lines.map(|l| DiagnosticsRecord::parse_csv_row(l).unwrap()).collect();
        assert_eq!(rows.len(), s.steps);

        let snap0 = snapshot::load(&cfg.out.join("snapshot_000.bin"), Problem::Riemann2d.domain()).unwrap();
        let mut init = UniformGrid::with_level(4, Problem::Riemann2d.domain(), Problem::Riemann2d.boundary());
        Problem::Riemann2d.init_grid(&mut init).unwrap();
        assert_eq!(snap0.grid, init);
        let snap1 = snapshot::load(&cfg.out.join("snapshot_001.bin"), Problem::Riemann2d.domain()).unwrap();
        assert_eq!(snap1.t, 0.005);

        let me = compare(&cfg.out, &cfg.out).unwrap();
        assert_eq!(me.l1_density_error, 0.0);
        assert_eq!(me.dc, s.dc);

        let mut fine = small(Mode::FvUniform);
        fine.level = 5;
        fine.out = dir.path().join("ref");
        run(&fine).unwrap();
        let r = compare(&cfg.out, &fine.out).unwrap();
        assert!(r.l1_density_error > 0.0 && r.l1_density_error < 0.5);
        assert!(matches!(compare(&fine.out, &cfg.out), Err(Error::IncompatibleRuns(_))));

        let mut other = small(Mode::FvUniform);
        other.problem = Problem::Uniform;
        other.out = dir.path().join("other");
        run(&other).unwrap();
        assert!(matches!(compare(&cfg.out, &other.out), Err(Error::IncompatibleRuns(_))));
    }

    #[test]
    fn runs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = small(Mode::Mr);
        a.out = dir.path().join("a");
        let mut b = a.clone();
        b.out = dir.path().join("b");
        run(&a).unwrap();
        run(&b).unwrap();
        for f in ["diagnostics.csv", "final.bin"] {
            assert_eq!(fs::read(a.out.join(f)).unwrap(), fs::read(b.out.join(f)).unwrap());
        }
    }
}
