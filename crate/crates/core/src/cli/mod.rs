//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 some query ran out of
//! budget, 3 an oracle answer failed re-verification.

mod args;
mod candidates;
pub mod report;
mod selftest;

pub use args::{Cli, Command, Common, Mode};
pub use candidates::{parse_candidates, Candidates};
pub use report::{Record, Report, Summary};

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rayon::prelude::*;

use crate::explain::{audit, ExplainError, ExplainOptions, Explainer, Explanation, Minimality};
use crate::model::{parse_ensemble, parse_instances, Cube, Ensemble, FeatureSpace};
use crate::oracle::{Budget, Oracle, OracleError};
use crate::semantics::{export_smtlib, Query};
use report::{symmetric_difference, CounterexampleRecord, Timings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command) -> Result<i32, String> {
    match command {
        Command::Explain { common, mode } => {
            let session = Session::load(&common)?;
            let report = session.explain(mode, &common)?;
            emit(&common, &report)
        }
        Command::Validate { common, candidates } => batch(&common, &candidates, "validate", None, Session::validate),
        Command::Repair { common, candidates } => batch(&common, &candidates, "repair", None, Session::repair),
        Command::Refine { common, candidates, mode } => {
            batch(&common, &candidates, "refine", Some(mode), move |s, id, inst, cand| s.refine(id, inst, cand, mode))
        }
        Command::Audit { common, candidates, max_cex } => {
            let mut session = Session::load(&common)?;
            session.options.max_counterexamples = max_cex as usize;
            let jobs = session.candidate_jobs(&candidates)?;
            let records = session.run_jobs(&common, jobs, Session::audit)?;
            emit(&common, &session.report("audit", None, records))
        }
        Command::ExportSmt { model, fmap, instances, instance_id, candidates, target, out } => {
            let (ensemble, space, rows) = load_inputs(&model, &fmap, &instances)?;
            let instance = rows
                .get(instance_id)
                .ok_or_else(|| format!("instance {instance_id} out of range ({} rows)", rows.len()))?;
            let fixed = match candidates {
                Some(path) => {
                    let c = parse_candidates(&read_text(&path)?, &space)?;
                    let features =
                        c.by_id.get(&instance_id).ok_or_else(|| format!("no candidate for instance {instance_id}"))?;
                    instance.restrict(features.iter().copied())
                }
                None => instance.clone(),
            };
            let target = match target {
                Some(name) => ensemble.class_index(&name).ok_or_else(|| format!("unknown class {name:?}"))?,
                None => crate::semantics::predict(&ensemble, &space, instance).map_err(|e| e.to_string())?.class,
            };
            let text = export_smtlib(&ensemble, &space, &Query::entailment(fixed, target));
            write_output(out.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        Command::Selftest => Ok(selftest::run(&mut std::io::stdout())),
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_inputs(model: &Path, fmap: &Path, instances: &Path) -> Result<(Ensemble, FeatureSpace, Vec<Cube>), String> {
    let (ensemble, space) = parse_ensemble(&read_bytes(model)?, &read_bytes(fmap)?).map_err(|e| e.to_string())?;
    let rows = parse_instances(&read_bytes(instances)?, &space).map_err(|e| e.to_string())?;
    Ok((ensemble, space, rows))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn emit(common: &Common, report: &Report) -> Result<i32, String> {
    write_output(common.out.as_deref(), &report.to_json())?;
    if let Some(table) = &common.table {
        std::fs::write(table, report.to_table()).map_err(|e| format!("{}: {e}", table.display()))?;
    }
    Ok(report.exit_code())
}

fn batch<F>(common: &Common, candidates: &Path, command: &str, mode: Option<Mode>, f: F) -> Result<i32, String>
where
    F: Fn(&Session, usize, &Cube, &Cube) -> Record + Sync,
{
    let session = Session::load(common)?;
    let jobs = session.candidate_jobs(candidates)?;
    let records = session.run_jobs(common, jobs, f)?;
    emit(common, &session.report(command, mode.map(mode_name), records))
}

fn mode_name(mode: Mode) -> String {
    match mode {
        Mode::Subset => "subset".into(),
        Mode::Cardinality => "cardinality".into(),
    }
}

fn minimality(mode: Mode) -> Minimality {
    match mode {
        Mode::Subset => Minimality::Subset,
        Mode::Cardinality => Minimality::Cardinality,
    }
}

struct Session {
    oracle: Oracle,
    space: FeatureSpace,
    classes: Vec<String>,
    rows: Vec<Cube>,
    options: ExplainOptions,
}

impl Session {
    fn load(common: &Common) -> Result<Self, String> {
        let (ensemble, space, rows) = load_inputs(&common.model, &common.fmap, &common.instances)?;
        let mut budget = Budget::default();
        if let Some(n) = common.node_budget {
            budget.node_limit = n;
        }
        if let Some(t) = common.time_budget {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(format!("bad --time-budget {t}"));
            }
            budget.time_limit = (t > 0.0).then(|| Duration::from_secs_f64(t));
        }
        let seed_order = if common.seed_order.is_empty() {
            None
        } else {
            Some(
                common
                    .seed_order
                    .iter()
                    .map(|n| space.index_of(n.trim()).ok_or_else(|| format!("--seed-order: unknown feature {n:?}")))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        let options =
            ExplainOptions { seed_order, shrink_correction_sets: !common.no_shrink_cores, ..Default::default() };
        Ok(Self {
            oracle: Oracle::with_budget(&ensemble, &space, budget),
            classes: ensemble.class_names().to_vec(),
            space,
            rows,
            options,
        })
    }

    fn explainer(&self) -> Explainer<'_> {
        Explainer::with_options(&self.oracle, self.options.clone())
    }

    fn report(&self, command: &str, mode: Option<String>, records: Vec<Record>) -> Report {
        Report::new(command, mode, self.classes.clone(), records)
    }

    fn candidate_jobs(&self, path: &Path) -> Result<Vec<(usize, Cube)>, String> {
        parse_candidates(&read_text(path)?, &self.space)?.resolve(&self.rows)
    }

    fn run_jobs<F>(&self, common: &Common, jobs: Vec<(usize, Cube)>, f: F) -> Result<Vec<Record>, String>
    where
        F: Fn(&Session, usize, &Cube, &Cube) -> Record + Sync,
    {
        let pool = pool(common.workers)?;
        Ok(pool.install(|| jobs.par_iter().map(|(id, cand)| f(self, *id, &self.rows[*id], cand)).collect()))
    }

    /// Record with the target filled in, or an error record when the
    /// instance cannot be evaluated.
    fn start(&self, id: usize, instance: &Cube) -> Result<(Record, usize), Box<Record>> {
        match self.oracle.predict(instance) {
            Ok(p) => Ok((Record::new(id, self.classes[p.class].clone()), p.class)),
            Err(e) => {
                let mut r = Record::new(id, String::new());
                fail(&mut r, &ExplainError::Oracle(e));
                Err(Box::new(r))
            }
        }
    }

    fn render(&self, cube: &Cube) -> Vec<String> {
        cube.render(&self.space)
    }

    fn counterexamples(&self, cex: &[crate::oracle::Counterexample]) -> Vec<CounterexampleRecord> {
        cex.iter().map(|c| CounterexampleRecord::new(c, &self.space, &self.classes)).collect()
    }

    /// Re-checks an explanation produced by the engine.
    fn attach(&self, record: &mut Record, explanation: &Explanation, candidate: Option<&Cube>) {
        match self.explainer().check_explanation(explanation, true) {
            Ok(true) => {}
            Ok(false) => {
                record.internal_failure = true;
                record.error = Some("explanation failed re-verification".into());
            }
            Err(e) => note(record, &e),
        }
        record.explanation = Some(self.render(&explanation.literals));
        record.kind = Some(explanation.kind.to_string());
        if let Some(c) = candidate {
            record.symmetric_difference = Some(symmetric_difference(c, &explanation.literals));
        }
    }

    fn explain(&self, mode: Mode, common: &Common) -> Result<Report, String> {
        // each unique instance once; later copies are listed on the first
        let mut unique: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut seen: std::collections::HashMap<&Cube, usize> = std::collections::HashMap::new();
        for (id, row) in self.rows.iter().enumerate() {
            match seen.get(row) {
                Some(&slot) => unique[slot].1.push(id),
                None => {
                    seen.insert(row, unique.len());
                    unique.push((id, Vec::new()));
                }
            }
        }
        let pool = pool(common.workers)?;
        let records = pool.install(|| {
            unique
                .par_iter()
                .map(|(id, dups)| {
                    let mut r = self.explain_one(*id, &self.rows[*id], mode);
                    r.duplicates = dups.clone();
                    r
                })
                .collect()
        });
        Ok(self.report("explain", Some(mode_name(mode)), records))
    }

    fn explain_one(&self, id: usize, instance: &Cube, mode: Mode) -> Record {
        let (mut r, target) = match self.start(id, instance) {
            Ok(x) => x,
            Err(r) => return *r,
        };
        let t = Instant::now();
        let outcome = self.explainer().explain(instance, target, minimality(mode));
        r.timings.explain = Timings::seconds(t.elapsed());
        match outcome {
            Ok(e) => {
                r.status = "explained".into();
                self.attach(&mut r, &e, None);
            }
            Err(e) => fail(&mut r, &e),
        }
        r
    }

    fn validate(&self, id: usize, instance: &Cube, candidate: &Cube) -> Record {
        let (mut r, target) = match self.start(id, instance) {
            Ok(x) => x,
            Err(r) => return *r,
        };
        r.candidate = Some(self.render(candidate));
        let t = Instant::now();
        let outcome = self.explainer().validate(instance, target, candidate);
        r.timings.validation = Timings::seconds(t.elapsed());
        match outcome {
            Ok(None) => r.status = "valid".into(),
            Ok(Some(cex)) => {
                r.status = "invalid".into();
                r.counterexamples = self.counterexamples(&[cex]);
            }
            Err(e) => fail(&mut r, &e),
        }
        r
    }

    fn repair(&self, id: usize, instance: &Cube, candidate: &Cube) -> Record {
        let (mut r, target) = match self.start(id, instance) {
            Ok(x) => x,
            Err(r) => return *r,
        };
        r.candidate = Some(self.render(candidate));
        let t = Instant::now();
        let outcome = self.explainer().repair(instance, target, candidate);
        r.timings.repair = Timings::seconds(t.elapsed());
        match outcome {
            Ok(e) => {
                r.status = "repaired".into();
                self.attach(&mut r, &e, Some(candidate));
            }
            Err(e) => fail(&mut r, &e),
        }
        r
    }

    fn refine(&self, id: usize, instance: &Cube, candidate: &Cube, mode: Mode) -> Record {
        let (mut r, target) = match self.start(id, instance) {
            Ok(x) => x,
            Err(r) => return *r,
        };
        r.candidate = Some(self.render(candidate));
        let t = Instant::now();
        let outcome = self.explainer().refine(instance, target, candidate, minimality(mode));
        r.timings.refinement = Timings::seconds(t.elapsed());
        match outcome {
            Ok(e) => {
                r.status = "refined".into();
                self.attach(&mut r, &e, Some(candidate));
            }
            Err(ExplainError::NotEntailing) => r.status = "not-entailing".into(),
            Err(e) => fail(&mut r, &e),
        }
        r
    }

    fn audit(&self, id: usize, instance: &Cube, candidate: &Cube) -> Record {
        let (mut r, target) = match self.start(id, instance) {
            Ok(x) => x,
            Err(r) => return *r,
        };
        r.candidate = Some(self.render(candidate));
        match audit(&self.explainer(), instance, target, candidate) {
            Ok(v) => {
                r.status = v.status.to_string();
                r.counterexamples = self.counterexamples(&v.counterexamples);
                r.timings.validation = Timings::seconds(v.timings.validation);
                r.timings.repair = Timings::seconds(v.timings.repair);
                r.timings.refinement = Timings::seconds(v.timings.refinement);
                if let Some(e) = v.corrected() {
                    self.attach(&mut r, e, Some(candidate));
                }
                if let Some(e) = v.incomplete {
                    note(&mut r, &ExplainError::Oracle(e));
                }
            }
            Err(e) => fail(&mut r, &e),
        }
        r
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, String> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err("--workers must be positive".into());
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| e.to_string())
}

/// Records an error without changing the status.
fn note(record: &mut Record, e: &ExplainError) {
    record.budget_exhausted |= e.is_indeterminate();
    record.internal_failure |= matches!(e, ExplainError::Oracle(OracleError::Internal(_)));
    record.error = Some(e.to_string());
}

fn fail(record: &mut Record, e: &ExplainError) {
    note(record, e);
    record.status = if e.is_indeterminate() { "indeterminate" } else { "error" }.into();
}
