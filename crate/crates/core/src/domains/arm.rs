//! Rigid three-link planar arm.
//!
//! Each joint takes an integer servo command in `[-150, 150]`; 1024 steps make
//! a full turn. Joint 0 is offset by 150 steps, so `(150, 0, 0)` lays the arm
//! out straight along the +x axis. Positive steps turn a joint clockwise, and
//! the task is to raise the tip as high as possible for every x position.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Domain, Evaluation};
use crate::archive::{Archive, FeatureSpace};
use crate::controls::{elites_from_log, EvalLogEntry};
use crate::error::{Error, Result};

pub const JOINTS: usize = 3;
pub const STEP_LIMIT: i32 = 150;
pub const STEPS_PER_TURN: f64 = 1024.0;
pub const JOINT_OFFSETS: [i32; JOINTS] = [150, 0, 0];
pub const LINK_LENGTH: f64 = 1.0;
pub const REACH: f64 = LINK_LENGTH * JOINTS as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArmGenome(pub [i32; JOINTS]);

/// Tip position for the given servo commands.
pub fn forward_kinematics(steps: [i32; JOINTS]) -> Result<(f64, f64)> {
    if let Some(j) = steps.iter().position(|s| s.abs() > STEP_LIMIT) {
        return Err(Error::config(format!(
            "joint {j}: step {} outside [-{STEP_LIMIT}, {STEP_LIMIT}]",
            steps[j]
        )));
    }
    let (mut x, mut y, mut angle) = (0.0, 0.0, 0.0);
    for (s, off) in steps.iter().zip(JOINT_OFFSETS) {
        angle += (s - off) as f64 * TAU / STEPS_PER_TURN;
        x += LINK_LENGTH * angle.cos();
        y -= LINK_LENGTH * angle.sin();
    }
    Ok((x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    /// Cells along x.
    pub bins: usize,
    /// Standard deviation of a joint perturbation, in steps.
    pub mutation_sigma: f64,
    pub joint_rate: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            bins: 64,
            mutation_sigma: 60.0,
            joint_rate: 1.0 / JOINTS as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmDomain {
    config: ArmConfig,
    noise: Normal<f64>,
}

impl ArmDomain {
    pub fn new(config: ArmConfig) -> Result<Self> {
        if config.bins == 0 {
            return Err(Error::key("arm.bins", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&config.joint_rate) {
            return Err(Error::key("arm.joint_rate", "must lie in [0, 1]"));
        }
        let noise = Normal::new(0.0, config.mutation_sigma)
            .map_err(|e| Error::key("arm.mutation_sigma", e.to_string()))?;
        Ok(Self { config, noise })
    }

    pub fn config(&self) -> &ArmConfig {
        &self.config
    }

    pub fn feature_space(&self) -> FeatureSpace {
        FeatureSpace::new(self.descriptor_bounds(), vec![self.config.bins])
            .and_then(|s| s.with_labels(self.descriptor_labels()))
            .expect("arm bounds are valid")
    }
}

impl Default for ArmDomain {
    fn default() -> Self {
        Self::new(ArmConfig::default()).expect("default arm config is valid")
    }
}

impl Domain for ArmDomain {
    type Genome = ArmGenome;

    fn name(&self) -> &'static str {
        "arm"
    }

    fn descriptor_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-REACH, REACH)]
    }

    fn descriptor_labels(&self) -> Vec<String> {
        vec!["x".into()]
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmGenome {
        ArmGenome(std::array::from_fn(|_| {
            rng.random_range(-STEP_LIMIT..=STEP_LIMIT)
        }))
    }

    fn mutate<R: Rng + ?Sized>(&self, parent: &ArmGenome, rng: &mut R) -> ArmGenome {
        loop {
            let mut chosen: Vec<usize> = (0..JOINTS)
                .filter(|_| rng.random_bool(self.config.joint_rate))
                .collect();
            if chosen.is_empty() {
                chosen.push(rng.random_range(0..JOINTS));
            }
            let mut child = *parent;
            for j in chosen {
                let mut delta = self.noise.sample(rng).round() as i32;
                if delta == 0 {
                    delta = if rng.random_bool(0.5) { 1 } else { -1 };
                }
                child.0[j] = (child.0[j] + delta).clamp(-STEP_LIMIT, STEP_LIMIT);
            }
            if child != *parent {
                return child;
            }
        }
    }

    fn evaluate(&self, g: &ArmGenome) -> Evaluation {
        match forward_kinematics(g.0) {
            Ok((x, y)) => Evaluation {
                fitness: y,
                descriptor: vec![x],
            },
            Err(_) => Evaluation {
                fitness: f64::NAN,
                descriptor: vec![f64::NAN],
            },
        }
    }

    fn encode(&self, g: &ArmGenome) -> String {
        format!("{},{},{}", g.0[0], g.0[1], g.0[2])
    }

    fn decode(&self, text: &str) -> Result<ArmGenome> {
        let parts = text
            .trim()
            .split(',')
            .map(|p| p.trim().parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse("arm genome", e.to_string()))?;
        let steps: [i32; JOINTS] = parts
            .try_into()
            .map_err(|_| Error::parse("arm genome", "expected three steps"))?;
        if steps.iter().any(|s| s.abs() > STEP_LIMIT) {
            return Err(Error::parse("arm genome", "step out of range"));
        }
        Ok(ArmGenome(steps))
    }
}

/// `k` evenly spaced commands covering `[-150, 150]`, endpoints included.
pub fn grid_steps(k: usize) -> Result<Vec<i32>> {
    if k < 2 {
        return Err(Error::key("grid steps", "need at least 2 steps per joint"));
    }
    let span = 2.0 * STEP_LIMIT as f64;
    Ok((0..k)
        .map(|i| (-STEP_LIMIT as f64 + span * i as f64 / (k - 1) as f64).round() as i32)
        .collect())
}

/// Evaluates every combination of `k` commands per joint and keeps the best
/// result per cell. Returns the map and the number of evaluations.
pub fn grid_search(domain: &ArmDomain, k: usize) -> Result<(Archive<ArmGenome>, usize)> {
    grid_search_in(domain, k, domain.feature_space())
}

/// As [`grid_search`], binning into `space`.
pub fn grid_search_in(domain: &ArmDomain, k: usize, space: FeatureSpace) -> Result<(Archive<ArmGenome>, usize)> {
    let steps = grid_steps(k)?;
    let mut log = Vec::with_capacity(k.pow(JOINTS as u32));
    for &a in &steps {
        for &b in &steps {
            for &c in &steps {
                let genome = ArmGenome([a, b, c]);
                let e = domain.evaluate(&genome);
                log.push(EvalLogEntry {
                    index: log.len() as u64,
                    genome,
                    fitness: e.fitness,
                    descriptor: e.descriptor,
                });
            }
        }
    }
    let n = log.len();
    let archive = elites_from_log(log, space);
    Ok((archive, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn horizontal_extension() {
        let (x, y) = forward_kinematics([150, 0, 0]).unwrap();
        assert!(close(x, 3.0) && close(y, 0.0));
    }

    #[test]
    fn quarter_turn_points_up() {
        // (-106 - 150) steps = -256 = a quarter turn
        let (x, y) = forward_kinematics([-106, 0, 0]).unwrap();
        assert!(close(x, 0.0), "x = {x}");
        assert!(close(y, 3.0), "y = {y}");
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(forward_kinematics([151, 0, 0]).is_err());
        assert!(forward_kinematics([0, 0, -151]).is_err());
    }

    #[test]
    fn reach_and_lipschitz_bounds() {
        let mut rng = seeded(11);
        let d = ArmDomain::default();
        let lip = 3.0 * TAU / STEPS_PER_TURN;
        for _ in 0..10_000 {
            let a = d.random_genome(&mut rng);
            let (x, y) = forward_kinematics(a.0).unwrap();
            assert!((x * x + y * y).sqrt() <= REACH + 1e-12);
            let b = d.mutate(&a, &mut rng);
            let (x2, y2) = forward_kinematics(b.0).unwrap();
            let dist = ((x - x2).powi(2) + (y - y2).powi(2)).sqrt();
            let steps: i32 = a.0.iter().zip(b.0).map(|(p, q)| (p - q).abs()).sum();
            assert!(dist <= lip * steps as f64 + 1e-12);
        }
    }

    #[test]
    fn evaluation_puts_straight_arm_in_top_bin() {
        let d = ArmDomain::default();
        let e = d.evaluate(&ArmGenome([150, 0, 0]));
        assert!(close(e.fitness, 0.0));
        assert!(close(e.descriptor[0], 3.0));
        let b = d.feature_space().bin(&e.descriptor).unwrap();
        assert_eq!(b.cell.0, vec![63]);
        assert!(!b.clamped);
    }

    #[test]
    fn descriptors_never_clamp() {
        let d = ArmDomain::default();
        let space = d.feature_space();
        let mut rng = seeded(12);
        for _ in 0..5000 {
            let e = d.evaluate(&d.random_genome(&mut rng));
            assert!(e.fitness <= REACH);
            assert!(!space.bin(&e.descriptor).unwrap().clamped);
        }
    }

    #[test]
    fn grid_sizes() {
        let d = ArmDomain::default();
        assert_eq!(grid_search(&d, 8).unwrap().1, 512);
        let (corners, n) = grid_search(&d, 2).unwrap();
        assert_eq!(n, 8);
        assert!(corners
            .elites()
            .all(|e| e.genome.0.iter().all(|s| s.abs() == STEP_LIMIT)));
        assert_eq!(grid_steps(8).unwrap().first(), Some(&-150));
        assert_eq!(grid_steps(8).unwrap().last(), Some(&150));
        assert!(grid_search(&d, 1).is_err());
    }

    #[test]
    fn grid_map_matches_reevaluation() {
        let d = ArmDomain::default();
        let (map, _) = grid_search(&d, 8).unwrap();
        for e in map.elites() {
            let again = d.evaluate(&e.genome);
            assert_eq!(again.fitness.to_bits(), e.fitness.to_bits());
            assert_eq!(again.descriptor, e.descriptor);
        }
    }

    #[test]
    fn encoding_round_trips() {
        let d = ArmDomain::default();
        let g = ArmGenome([-150, 7, 150]);
        assert_eq!(d.encode(&g), "-150,7,150");
        assert_eq!(d.decode(&d.encode(&g)).unwrap(), g);
        assert!(d.decode("1,2").is_err());
        assert!(d.decode("1,2,400").is_err());
    }
}
