//! Command execution. Every command resolves its configuration, runs, and
//! renders the resolved configuration followed by its records.

use bvdiff::boolfn::{walsh_spectrum, TruthTable};
use bvdiff::bvsim::bv_batch;
use bvdiff::differential::{
    algorithm1, algorithm1_runs, algorithm2_full, algorithm2_partial, choose_p, DifferentialCandidate,
};
use bvdiff::gf2::{BitMatrix, Rhs};
use bvdiff::oracle::{ddt, validate_joint_bound, validate_theorem1_capped, verify_candidates};
use bvdiff::rng::{child_seed, substream};
use bvdiff::spn::{
    default_pairs, encrypt, extract_g, key_nibbles, method2_pipeline, rank_guesses,
    recover_last_round_subkey, select_attack_candidate, SpnKey,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommandName, Format, Mode, RunConfig};
use crate::CliError;

const T1_DEFAULTS: (u32, usize, usize, f64) = (8, 200, 64, 0.25);
const JOINT_DEFAULTS: (u32, u32, usize) = (8, 4, 100);
/// Ranked key guesses reported by `attack`.
const TOP_GUESSES: usize = 8;

struct Output {
    records: Vec<Value>,
    csv: Option<String>,
}

impl Output {
    fn records(records: Vec<Value>) -> Self {
        Output { records, csv: None }
    }
}

fn line<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable record")
}

/// Run `cfg` and render the output text.
pub fn execute(mut cfg: RunConfig) -> Result<String, CliError> {
    cfg.resolve_common();
    eprintln!("seed: {}", cfg.seed());
    let command = cfg.command.ok_or_else(|| CliError::Input("no command given".into()))?;
    let out = match command {
        CommandName::Spectrum => spectrum(&mut cfg)?,
        CommandName::BvSample => bv_sample(&mut cfg)?,
        CommandName::Algo1 => algo1(&mut cfg)?,
        CommandName::Algo2 => algo2(&mut cfg)?,
        CommandName::Ddt => ddt_table(&mut cfg)?,
        CommandName::Verify => verify(&mut cfg)?,
        CommandName::Attack => attack(&mut cfg)?,
        CommandName::ValidateT1 => validate_t1(&mut cfg)?,
        CommandName::ValidateJoint => validate_joint(&mut cfg)?,
    };
    let header = serde_json::to_string(&json!({ "config": cfg }))?;
    let mut text = String::new();
    match out.csv {
        Some(body) => {
            text.push_str("# ");
            text.push_str(&header);
            text.push('\n');
            text.push_str(&body);
        }
        None => {
            text.push_str(&header);
            text.push('\n');
            for r in &out.records {
                text.push_str(&serde_json::to_string(r)?);
                text.push('\n');
            }
        }
    }
    Ok(text)
}

/// Table plus the sample count every sampling command shares.
fn sampled_table(cfg: &mut RunConfig) -> Result<TruthTable, CliError> {
    let table = cfg.table()?;
    cfg.resolve_params(table.n());
    let params = cfg.params();
    params.validate()?;
    cfg.p = Some(choose_p(table.m(), table.n(), &params));
    Ok(table)
}

fn component_index(cfg: &mut RunConfig, table: &TruthTable) -> Result<usize, CliError> {
    let j = *cfg.component.get_or_insert(1);
    table.component(j)?;
    Ok(j)
}

fn spectrum(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let table = cfg.table()?;
    let js: Vec<usize> = match cfg.component {
        Some(j) => vec![j],
        None => (1..=table.n() as usize).collect(),
    };
    let mut records = Vec::new();
    for j in js {
        let w = walsh_spectrum(&table.component(j)?);
        let peak = w.coeffs().iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        records.push(json!({
            "component": j,
            "walsh": w.coeffs(),
            "energy": w.energy(),
            "parseval": w.energy() == 1u64 << (2 * table.m()),
            "max_abs": peak,
        }));
    }
    Ok(Output::records(records))
}

fn bv_sample(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let table = sampled_table(cfg)?;
    let j = component_index(cfg, &table)?;
    let p = cfg.p.expect("resolved");
    let samples = bv_batch(&table.component(j)?, p, &mut substream(cfg.seed(), j as u64))?;
    let rank = BitMatrix::from_samples(&samples)?.rank();
    Ok(Output::records(vec![json!({
        "component": j,
        "p": p,
        "rank": rank,
        "samples": samples.samples(),
    })]))
}

fn algo1(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let table = sampled_table(cfg)?;
    let runs = algorithm1_runs(&table, cfg.p.expect("resolved"), cfg.seed())?;
    let records = runs
        .iter()
        .map(|r| {
            json!({
                "component": r.j,
                "rank": r.rank,
                "dimension": r.sets.dimension(),
                "basis": r.sets.basis(),
                "particular": r.sets.particular(),
                "a0_empty": r.sets.is_empty(Rhs::Zero),
                "a1_empty": r.sets.is_empty(Rhs::One),
            })
        })
        .collect();
    Ok(Output::records(records))
}

fn search(cfg: &mut RunConfig, table: &TruthTable) -> Result<Vec<DifferentialCandidate>, CliError> {
    let sets = algorithm1(table, cfg.p.expect("resolved"), cfg.seed())?;
    let cap = cfg.cap.expect("resolved");
    Ok(match *cfg.mode.get_or_insert(Mode::Full) {
        Mode::Full => algorithm2_full(&sets, cap)?,
        Mode::Partial => algorithm2_partial(&sets, cap, cfg.min_known.expect("resolved"))?,
    })
}

fn algo2(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let table = sampled_table(cfg)?;
    let cands = search(cfg, &table)?;
    Ok(Output::records(cands.iter().map(line).collect()))
}

fn ddt_table(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let table = cfg.table()?;
    let d = ddt(&table)?;
    match *cfg.format.get_or_insert(Format::Json) {
        Format::Json => {
            let records = d.rows().enumerate().map(|(a, row)| json!({ "a": a, "counts": row })).collect();
            Ok(Output::records(records))
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["a".to_string()];
            header.extend((0..1u32 << d.n()).map(|b| b.to_string()));
            w.write_record(&header).map_err(|e| CliError::Input(e.to_string()))?;
            for (a, row) in d.rows().enumerate() {
                let mut rec = vec![a.to_string()];
                rec.extend(row.iter().map(|c| c.to_string()));
                w.write_record(&rec).map_err(|e| CliError::Input(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
            let body = String::from_utf8(bytes).expect("csv output is UTF-8");
            Ok(Output { records: Vec::new(), csv: Some(body) })
        }
    }
}

fn verify(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let (table, cands) = match cfg.candidates.clone() {
        Some(c) => (cfg.table()?, c),
        None => {
            let table = sampled_table(cfg)?;
            let c = search(cfg, &table)?;
            (table, c)
        }
    };
    for c in &cands {
        if c.dx >> table.m() != 0 || (c.dy | c.mask) >> table.n() != 0 {
            return Err(CliError::Input(format!(
                "candidate dx={:#x} dy={:#x} mask={:#x} does not fit a {}x{} table",
                c.dx,
                c.dy,
                c.mask,
                table.m(),
                table.n()
            )));
        }
    }
    Ok(Output::records(verify_candidates(&table, &cands).iter().map(line).collect()))
}

fn attack(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let spec = cfg.spn();
    cfg.spec = Some(spec.clone());
    cfg.resolve_params(spec.k());
    cfg.resolve_attack();
    let params = cfg.params();
    params.validate()?;
    let seed = cfg.seed();

    let key = SpnKey::from_seed(&spec, child_seed(seed, 0));
    let outcome = method2_pipeline(&spec, &key, &params, child_seed(seed, 1))?;
    cfg.p = Some(outcome.p);
    let g = extract_g(&spec, &key).to_truth_table()?;
    let verified = verify_candidates(&g, &outcome.candidates);
    let max_groups = cfg.max_groups.expect("resolved");
    let chosen = select_attack_candidate(&spec, &verified, max_groups).ok_or_else(|| {
        CliError::Input(format!(
            "none of the {} candidates touches between 1 and {max_groups} guessable S-box groups",
            verified.len()
        ))
    })?;
    let pairs = *cfg.pairs.get_or_insert(default_pairs(chosen.probability));

    let oracle = |x: u64| encrypt(&spec, &key, x);
    let mut result =
        recover_last_round_subkey(&spec, &oracle, &chosen.candidate, pairs, child_seed(seed, 2), max_groups)?;
    rank_guesses(&mut result.ranking, cfg.tie_break.expect("resolved"));
    let truth = key_nibbles(&spec, &key, &result.groups.guessed);
    let position = result.ranking.iter().position(|g| g.value == truth).expect("true key is guessed");
    let true_counter = result.ranking[position].counter;
    let better = result.ranking.iter().filter(|g| g.counter > true_counter).count();
    let tied = result.ranking.iter().filter(|g| g.counter == true_counter).count();

    Ok(Output::records(vec![
        json!({ "key": key, "p": outcome.p, "candidates": outcome.candidates.len() }),
        json!({ "selected": chosen }),
        json!({
            "groups": result.groups,
            "pairs": result.pairs,
            "filtered_pairs": result.filtered_pairs,
            "top": &result.ranking[..result.ranking.len().min(TOP_GUESSES)],
            "true_value": truth,
            "true_position": position,
            "true_counter": true_counter,
            "guesses_above_true": better,
            "tied_with_true": tied,
        }),
    ]))
}

fn validate_t1(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let (m, trials, p, eps) = T1_DEFAULTS;
    let m = *cfg.m.get_or_insert(m);
    let trials = *cfg.trials.get_or_insert(trials);
    let p = *cfg.p.get_or_insert(p);
    let eps = *cfg.epsilon.get_or_insert(eps);
    let report = validate_theorem1_capped(m, trials, p, eps, cfg.seed(), cfg.cap.expect("resolved"))?;
    Ok(Output::records(vec![line(&report)]))
}

fn validate_joint(cfg: &mut RunConfig) -> Result<Output, CliError> {
    let (m, n, trials) = JOINT_DEFAULTS;
    let m = *cfg.m.get_or_insert(m);
    let n = *cfg.n.get_or_insert(n);
    let trials = *cfg.trials.get_or_insert(trials);
    cfg.resolve_params(n);
    let params = cfg.params();
    params.validate()?;
    cfg.p = Some(choose_p(m, n, &params));
    let report = validate_joint_bound(m, n, trials, &cfg.params(), cfg.seed())?;
    Ok(Output::records(vec![line(&report)]))
}
