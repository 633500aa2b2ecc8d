//! Reading states, operators and distributions named on the command line.

use std::path::Path;

use qia_core::classical::{cc_state, JointPmf};
use qia_core::hyptest::Hypothesis;
use qia_core::io::{operator_from_json, state_from_json};
use qia_core::linalg::HermitianOperator;
use qia_core::random::{random_bipartite_state, rng_from_seed};
use qia_core::rmi::{Minimization, RmiVariant};
use qia_core::state::{BipartiteState, DensityMatrix};

use crate::{CliError, HypArg, JointSource, Result, StateSource, Variant};

/// Order argument: a nonnegative number or "inf".
pub fn parse_order(s: &str) -> std::result::Result<f64, String> {
    let v = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|_| format!("'{s}' is not a number or 'inf'"))?,
    };
    if v.is_nan() || v < 0.0 {
        return Err(format!("order must be nonnegative, got {s}"));
    }
    Ok(v)
}

fn read(path: &Path, field: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("--{field}: cannot read {}: {e}", path.display())))
}

fn tagged<T>(field: &str, r: qia_core::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        qia_core::Error::ResourceLimit(_) => CliError::Core(e),
        other => CliError::Input(format!("--{field}: {other}")),
    })
}

pub fn operator(path: &Path, field: &str) -> Result<HermitianOperator> {
    tagged(field, operator_from_json(&read(path, field)?))
}

pub fn density(path: &Path, field: &str) -> Result<DensityMatrix> {
    tagged(field, DensityMatrix::new(operator(path, field)?))
}

fn copy_joint(p: f64) -> Result<JointPmf> {
    tagged("copy", JointPmf::copy(p))
}

fn joint_file(path: &Path) -> Result<JointPmf> {
    serde_json::from_str(&read(path, "joint")?).map_err(|e| CliError::Input(format!("--joint: {e}")))
}

pub fn joint(src: &JointSource) -> Result<JointPmf> {
    match (&src.joint, src.copy) {
        (Some(path), None) => joint_file(path),
        (None, Some(p)) => copy_joint(p),
        _ => Err(CliError::Input("one of --joint or --copy is required".into())),
    }
}

fn random_dims(spec: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Input(format!("--random: expected dimensions like 2x2, got '{spec}'"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b) = (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?);
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn state(src: &StateSource, seed: u64) -> Result<BipartiteState> {
    let given = [src.state.is_some(), src.copy.is_some(), src.random.is_some(), src.joint.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(CliError::Input("exactly one of --state, --copy, --random, --joint is required".into()));
    }
    if let Some(path) = &src.state {
        return tagged("state", state_from_json(&read(path, "state")?));
    }
    if let Some(p) = src.copy {
        return Ok(cc_state(&copy_joint(p)?));
    }
    if let Some(spec) = &src.random {
        let (a, b) = random_dims(spec)?;
        let total = a.checked_mul(b).filter(|&d| d <= qia_core::linalg::max_dim());
        if total.is_none() {
            return Err(CliError::Core(qia_core::Error::ResourceLimit(format!("random {a}x{b} state exceeds the dimension cap"))));
        }
        return Ok(random_bipartite_state(&mut rng_from_seed(seed), a, b));
    }
    let path = src.joint.as_ref().expect("one source is set");
    Ok(cc_state(&joint_file(path)?))
}

pub fn variants(v: Variant) -> Vec<RmiVariant> {
    use Minimization::*;
    match v {
        Variant::PetzUpUp => vec![RmiVariant::petz(UpUp)],
        Variant::PetzUpDown => vec![RmiVariant::petz(UpDown)],
        Variant::PetzDownDown => vec![RmiVariant::petz(DownDown)],
        Variant::SandwichedUpUp => vec![RmiVariant::sandwiched(UpUp)],
        Variant::SandwichedUpDown => vec![RmiVariant::sandwiched(UpDown)],
        Variant::SandwichedDownDown => vec![RmiVariant::sandwiched(DownDown)],
        Variant::All => RmiVariant::all().to_vec(),
    }
}

pub fn variant_name(v: RmiVariant) -> String {
    let kind = match v.kind {
        Minimization::UpUp => "up-up",
        Minimization::UpDown => "up-down",
        Minimization::DownDown => "down-down",
    };
    format!("{}-{kind}", v.family.name())
}

pub fn hypotheses(h: HypArg) -> Vec<Hypothesis> {
    match h {
        HypArg::Iid => vec![Hypothesis::Iid],
        HypArg::Symboth => vec![Hypothesis::SymBoth],
        HypArg::Syma => vec![Hypothesis::SymA],
        HypArg::Ind => vec![Hypothesis::Ind],
        HypArg::Mar => vec![Hypothesis::Mar],
        HypArg::All => Hypothesis::all().to_vec(),
    }
}

pub fn level(mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(CliError::Input(format!("--mu must lie in [0, 1], got {mu}")));
    }
    Ok(mu)
}

pub fn copies(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(CliError::Input("--n must be positive".into()));
    }
    Ok(n)
}
