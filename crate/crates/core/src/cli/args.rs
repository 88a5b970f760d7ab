use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "abduce", version, about = "Exact abductive explanations for boosted tree ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an explanation for every unique instance.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Subset)]
        mode: Mode,
    },
    /// Check whether each candidate entails the predicted class.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Candidate file: one `id: feature,feature,...` line per instance.
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Turn each candidate into a correct subset-minimal explanation,
    /// keeping as many of its literals as the scan allows.
    Repair {
        #[command(flatten)]
        common: Common,
        /// Candidate file: one `id: feature,feature,...` line per instance.
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Minimize each (entailing) candidate.
    Refine {
        #[command(flatten)]
        common: Common,
        /// Candidate file: one `id: feature,feature,...` line per instance.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Subset)]
        mode: Mode,
    },
    /// Classify candidates as optimistic, pessimistic or realistic.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Candidate file: one `id: feature,feature,...` line per instance.
        #[arg(long)]
        candidates: PathBuf,
        /// Counterexamples kept per optimistic candidate.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        max_cex: u64,
    },
    /// Write the SMT-LIB2 (QF_LRA) query for one instance and candidate.
    ExportSmt {
        /// Ensemble in JSON tree-dump form.
        #[arg(long)]
        model: PathBuf,
        /// Feature map: `index<TAB>name<TAB>type` per line.
        #[arg(long)]
        fmap: PathBuf,
        /// CSV with one column per feature; a `label` column is ignored.
        #[arg(long)]
        instances: PathBuf,
        /// Row index of the instance.
        #[arg(long, default_value_t = 0)]
        instance_id: usize,
        /// Candidates file; the line for `instance_id` is the fixed cube.
        /// Without it the whole instance is fixed.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Target class name or index; defaults to the predicted class.
        #[arg(long)]
        target: Option<String>,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in checks on the embedded Zoo fixture.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Subset,
    Cardinality,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Ensemble in JSON tree-dump form.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature map: `index<TAB>name<TAB>type` per line.
    #[arg(long)]
    pub fmap: PathBuf,
    /// CSV with one column per feature; a `label` column is ignored.
    #[arg(long)]
    pub instances: PathBuf,
    /// Comma-separated feature names scanned first when deleting literals.
    #[arg(long, value_delimiter = ',')]
    pub seed_order: Vec<String>,
    /// Search nodes per oracle query.
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Seconds per oracle query; 0 disables the limit.
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Keep raw correction sets in the cardinality-minimal search instead
    /// of shrinking them.
    #[arg(long)]
    pub no_shrink_cores: bool,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one CSV row per record here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}
