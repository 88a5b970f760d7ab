#![allow(dead_code)]

use abduce::model::{Cube, Ensemble, FeatureSpace};
use abduce::synth::{random_ensemble, random_instance, random_space, EnsembleShape, SpaceShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CAP: u128 = 1 << 20;

pub struct Case {
    pub ensemble: Ensemble,
    pub space: FeatureSpace,
    pub instance: Cube,
    pub target: usize,
    pub rng: ChaCha8Rng,
}

/// Small random model plus an instance and its predicted class.
pub fn case(seed: u64, mixed: bool) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = rng.gen_range(1..=8);
    let shape = if mixed { SpaceShape::mixed(features) } else { SpaceShape::binary(features) };
    let space = random_space(&mut rng, shape);
    let shape = EnsembleShape {
        classes: rng.gen_range(1..=3),
        trees_per_class: rng.gen_range(1..=4),
        max_depth: rng.gen_range(1..=3),
    };
    let (ensemble, space) = random_ensemble(&mut rng, &space, shape);
    let instance = random_instance(&mut rng, &space);
    let target = abduce::semantics::predict(&ensemble, &space, &instance).unwrap().class;
    Case { ensemble, space, instance, target, rng }
}

/// Random sub-cube of `cube`.
pub fn sub_cube(rng: &mut ChaCha8Rng, cube: &Cube) -> Cube {
    cube.iter().filter(|_| rng.gen_bool(0.5)).map(|(f, v)| (f, v.clone())).collect()
}

/// External QF_LRA solver: `ABDUCE_SMT_SOLVER` or `z3` on the PATH.
pub fn smt_solver() -> Option<std::path::PathBuf> {
    if let Some(p) = std::env::var_os("ABDUCE_SMT_SOLVER") {
        return Some(p.into());
    }
    std::env::var_os("PATH").and_then(|paths| std::env::split_paths(&paths).map(|d| d.join("z3")).find(|p| p.is_file()))
}

/// `Some(true)` for sat, `Some(false)` for unsat.
pub fn smt_check(solver: &std::path::Path, script: &str) -> Option<bool> {
    use std::io::Write;
    use std::process::{Command, Stdio};
    let mut child =
        Command::new(solver).args(["-smt2", "-in"]).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().ok()?;
    child.stdin.take()?.write_all(script.as_bytes()).ok()?;
    let out = child.wait_with_output().ok()?;
    match String::from_utf8_lossy(&out.stdout).lines().next()?.trim() {
        "sat" => Some(true),
        "unsat" => Some(false),
        _ => None,
    }
}
