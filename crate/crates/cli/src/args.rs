use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ldl", version, about = "Lower-order terms in the 1-level density of GL(2) families")]
pub struct Cli {
    /// Worker threads; numeric output does not depend on this.
    #[arg(long, global = true, env = "LDL_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Evaluate catalog constants.
    Constants(ConstantsArgs),
    /// Per-prime moments, closed-form checks and aggregates of a family.
    Family(FamilyArgs),
    /// The five pieces of S at R = e^L.
    Explicit(ExplicitArgs),
    /// Run the exact and oracle suites.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::Family(_) => "family",
            Command::Explicit(_) => "explicit",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    /// Each constant's own method.
    Default,
    Direct,
    Closed,
    Integral,
    Series,
    /// Direct and closed form, where supported.
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    /// Catalog key, or `all`.
    #[arg(long, default_value = "all")]
    pub name: String,
    /// Sum over p ≤ this bound.
    #[arg(long, conflicts_with = "first_primes")]
    pub prime_limit: Option<u64>,
    /// Sum over the first this many primes.
    #[arg(long)]
    pub first_primes: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Default)]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaArg {
    Printed,
    Verified,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    /// Built-in name, `cusp` (aggregate only) or `@path` to a JSON config.
    #[arg(long)]
    pub family: String,
    /// Per-prime rows for p ≤ this bound.
    #[arg(long, default_value_t = 100)]
    pub prime_limit: u64,
    /// Highest moment 𝒜_r in the per-prime rows.
    #[arg(long, default_value_t = 2)]
    pub moments: u32,
    /// Assemble the lower-order coefficient.
    #[arg(long)]
    pub aggregate: bool,
    /// Primes with point counts for the aggregate's Ã constants.
    #[arg(long)]
    pub family_primes: Option<usize>,
    /// Truncation of the aggregate's convergent prime sums (first n primes).
    #[arg(long, default_value_t = 1_000_000)]
    pub first_primes: u64,
    /// Compare closed-form moments with point counts for 5 ≤ p ≤ prime-limit.
    #[arg(long)]
    pub verify_closed_forms: bool,
    #[arg(long, value_enum, default_value_t = LemmaArg::Verified)]
    pub lemma: LemmaArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplicitArgs {
    /// Built-in name, `@path` to a JSON config, or `cusp_model`.
    #[arg(long, default_value = "cusp_model")]
    pub family: String,
    /// Test function as name:sigma (fejer, gaussian, smooth).
    #[arg(long, default_value = "smooth:0.09")]
    pub phi: String,
    /// log R; repeat or comma-separate for several scales, which share
    /// one pass over the primes up to the largest required limit.
    #[arg(long = "logR", value_delimiter = ',', required = true)]
    pub log_r: Vec<f64>,
    /// Defaults to the smallest complete limit R^σ of the largest scale.
    #[arg(long)]
    pub prime_limit: Option<u64>,
    /// Primes with point counts (Ã); defaults to the family's truncation.
    #[arg(long)]
    pub counted_primes: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// all, identities, appendixB, sieve or bias.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 300)]
    pub prime_limit: u64,
    #[arg(long, value_enum, default_value_t = LemmaArg::Verified)]
    pub lemma: LemmaArg,
}
