//! Effective run configuration: merged from flags and an optional config
//! file, resolved to concrete values, and embedded as the first line of
//! every output so the run can be replayed.

use std::fs;
use std::path::Path;

use bvdiff::boolfn::{fixture_sbox, random_sbox, TruthTable};
use bvdiff::differential::{DifferentialCandidate, ParamConfig};
use bvdiff::gf2::DEFAULT_CAP;
use bvdiff::spn::{reference_spn, SpnSpec, TieBreak, DEFAULT_MAX_GROUPS};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Spectrum,
    BvSample,
    Algo1,
    Algo2,
    Ddt,
    Verify,
    Attack,
    ValidateT1,
    ValidateJoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Every field is optional so that a config file can override any subset
/// of the flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sbox: Option<TruthTable>,
    /// `[m, n]` for a table drawn from `seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<[u32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_known: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<DifferentialCandidate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpnSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_groups: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<TieBreak>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Fields set in `file` win over fields set here.
    pub fn overlay(&mut self, file: &RunConfig) {
        overlay!(
            self, file, command, seed, fixture, sbox, random, component, p, c, c1, c2, epsilon, cap,
            min_known, mode, format, candidates, spec, pairs, max_groups, tie_break, trials, m, n
        );
        if file.fixture.is_some() || file.sbox.is_some() || file.random.is_some() {
            self.fixture = file.fixture.clone();
            self.sbox = file.sbox.clone();
            self.random = file.random;
        }
    }

    /// Parse a config file: either a bare JSON object or an output file
    /// whose first line carries `{"config": {...}}` (optionally behind `# `
    /// in CSV dumps).
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
        let first = text.lines().next().unwrap_or_default();
        let first = first.strip_prefix("# ").unwrap_or(first);
        #[derive(Deserialize)]
        struct Embedded {
            config: RunConfig,
        }
        if let Ok(e) = serde_json::from_str::<Embedded>(first) {
            return Ok(e.config);
        }
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("parsing config {}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed resolved before execution")
    }

    pub fn params(&self) -> ParamConfig {
        let d = ParamConfig::default();
        ParamConfig {
            c: self.c.unwrap_or(d.c),
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2,
            p_override: self.p,
            cap: self.cap.unwrap_or(d.cap),
            min_known: self.min_known.unwrap_or(d.min_known),
        }
    }

    /// Fill the defaults that do not depend on the table.
    pub fn resolve_common(&mut self) {
        if self.seed.is_none() {
            self.seed = Some(rand::random());
        }
        self.cap.get_or_insert(DEFAULT_CAP);
    }

    pub fn resolve_params(&mut self, n: u32) {
        let d = ParamConfig::default();
        self.c.get_or_insert(d.c);
        self.c1.get_or_insert(d.c1);
        self.c2.get_or_insert(bvdiff::differential::default_c2(n));
        self.min_known.get_or_insert(d.min_known);
    }

    pub fn resolve_attack(&mut self) {
        self.max_groups.get_or_insert(DEFAULT_MAX_GROUPS);
        self.tie_break.get_or_insert(TieBreak::default());
    }

    /// The table named by `fixture`, `sbox` or `random`.
    pub fn table(&self) -> Result<TruthTable, CliError> {
        let given = [self.fixture.is_some(), self.sbox.is_some(), self.random.is_some()];
        match given.iter().filter(|&&b| b).count() {
            0 => return Err(CliError::Input("no S-box given: use --fixture, --sbox or --random".into())),
            1 => {}
            _ => return Err(CliError::Input("give only one of --fixture, --sbox, --random".into())),
        }
        if let Some(name) = &self.fixture {
            return Ok(fixture_sbox(name)?);
        }
        if let Some(t) = &self.sbox {
            return Ok(t.clone());
        }
        let [m, n] = self.random.expect("checked above");
        Ok(random_sbox(m, n, self.seed())?)
    }

    pub fn spn(&self) -> SpnSpec {
        self.spec.clone().unwrap_or_else(reference_spn)
    }
}

pub fn read_sbox(path: &Path) -> Result<TruthTable, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("parsing S-box {}: {e}", path.display())))
}

pub fn read_spec(arg: &str) -> Result<SpnSpec, CliError> {
    if arg == "reference" {
        return Ok(reference_spn());
    }
    let text = fs::read_to_string(arg).map_err(|e| CliError::Input(format!("reading {arg}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("parsing SPN spec {arg}: {e}")))
}

/// Candidates as JSON lines of `{"dx","dy","mask"}`; other lines (config
/// headers, records without those keys) are skipped.
pub fn read_candidates(path: &Path) -> Result<Vec<DifferentialCandidate>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(r#"{"config""#) {
            continue;
        }
        let c: DifferentialCandidate = serde_json::from_str(line)
            .map_err(|e| CliError::Input(format!("{}:{}: not a candidate: {e}", path.display(), i + 1)))?;
        out.push(c);
    }
    Ok(out)
}
