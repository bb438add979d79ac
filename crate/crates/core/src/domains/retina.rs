//! Left-and-right retina task for layered feedforward networks.
//!
//! A network sees every 8-pixel pattern (pixels 0..4 form the left half,
//! 4..8 the right half) and must answer true exactly when the left half is a
//! left object and the right half is a right object. Its descriptor is the
//! pair (normalised connection cost, modularity).

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::modularity::greedy_modularity;
use super::{Domain, Evaluation};
use crate::error::{Error, Result};

pub const PIXELS: usize = 8;
pub const PATTERNS: usize = 1 << PIXELS;

/// Default object sets shipped with the crate.
pub const DEFAULT_OBJECTS: &str = include_str!("../../data/retina_objects.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetinaConfig {
    pub layers: Vec<usize>,
    pub weight_range: f64,
    pub connection_probability: f64,
    pub toggle_rate: f64,
    pub weight_rate: f64,
    pub bias_rate: f64,
    pub mutation_sigma: f64,
    /// 4-bit patterns counted as objects on the left half.
    pub left_objects: Vec<u8>,
    pub right_objects: Vec<u8>,
}

impl Default for RetinaConfig {
    fn default() -> Self {
        let (left_objects, right_objects) =
            parse_objects(DEFAULT_OBJECTS).expect("bundled object file parses");
        Self {
            layers: vec![8, 4, 2, 1],
            weight_range: 2.0,
            connection_probability: 0.5,
            toggle_rate: 0.02,
            weight_rate: 0.05,
            bias_rate: 0.05,
            mutation_sigma: 0.5,
            left_objects,
            right_objects,
        }
    }
}

/// Parses an object file: `left:` and `right:` section lines followed by one
/// 4-bit pattern per line (`0111`, pixel 0 first). `#` starts a comment.
pub fn parse_objects(text: &str) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut section: Option<bool> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "left:" => {
                section = Some(true);
                continue;
            }
            "right:" => {
                section = Some(false);
                continue;
            }
            _ => {}
        }
        let bad = || Error::parse("object file", format!("line {}: `{line}`", n + 1));
        if line.len() != 4 || !line.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(bad());
        }
        let bits = u8::from_str_radix(line, 2).map_err(|_| bad())?;
        match section {
            Some(true) => left.push(bits),
            Some(false) => right.push(bits),
            None => return Err(bad()),
        }
    }
    for set in [&mut left, &mut right] {
        set.sort_unstable();
        set.dedup();
    }
    Ok((left, right))
}

pub fn load_objects(path: &Path) -> Result<(Vec<u8>, Vec<u8>)> {
    parse_objects(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub present: bool,
    pub weight: f64,
}

/// Weights for a fixed layered topology.
///
/// Connections are ordered by layer, then source node, then target node.
/// Biases belong to every non-input node, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct RetinaGenome {
    pub layers: Vec<usize>,
    pub connections: Vec<Connection>,
    pub biases: Vec<f64>,
}

impl RetinaGenome {
    pub fn connection_count(layers: &[usize]) -> usize {
        layers.windows(2).map(|w| w[0] * w[1]).sum()
    }

    pub fn bias_count(layers: &[usize]) -> usize {
        layers.iter().skip(1).sum()
    }

    /// Every connection absent, all weights and biases zero.
    pub fn zeros(layers: &[usize]) -> Self {
        Self {
            layers: layers.to_vec(),
            connections: vec![
                Connection {
                    present: false,
                    weight: 0.0
                };
                Self::connection_count(layers)
            ],
            biases: vec![0.0; Self::bias_count(layers)],
        }
    }

    pub fn enabled_connections(&self) -> usize {
        self.connections.iter().filter(|c| c.present).count()
    }
}

#[derive(Debug, Clone)]
struct Link {
    from: usize,
    to: usize,
    squared_length: f64,
}

/// The retina benchmark.
#[derive(Debug, Clone)]
pub struct RetinaDomain {
    config: RetinaConfig,
    links: Vec<Link>,
    node_count: usize,
    max_cost: f64,
    targets: Vec<bool>,
    weight_noise: Normal<f64>,
}

impl RetinaDomain {
    pub fn new(config: RetinaConfig) -> Result<Self> {
        let layers = &config.layers;
        if layers.len() < 2 || layers.contains(&0) {
            return Err(Error::key("retina.layers", "need at least two non-empty layers"));
        }
        if layers[0] != PIXELS || *layers.last().unwrap() != 1 {
            return Err(Error::key(
                "retina.layers",
                format!("first layer must have {PIXELS} nodes and the last exactly one"),
            ));
        }
        if !(config.weight_range > 0.0 && config.weight_range.is_finite()) {
            return Err(Error::key("retina.weight_range", "must be positive"));
        }
        for (key, p) in [
            ("retina.connection_probability", config.connection_probability),
            ("retina.toggle_rate", config.toggle_rate),
            ("retina.weight_rate", config.weight_rate),
            ("retina.bias_rate", config.bias_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::key(key, "must lie in [0, 1]"));
            }
        }
        let weight_noise = Normal::new(0.0, config.mutation_sigma)
            .map_err(|e| Error::key("retina.mutation_sigma", e.to_string()))?;
        for (key, set) in [
            ("retina.left_objects", &config.left_objects),
            ("retina.right_objects", &config.right_objects),
        ] {
            if set.iter().any(|&p| p > 0xF) {
                return Err(Error::key(key, "patterns are 4-bit values"));
            }
        }

        // node coordinates: x centred within the layer, y = layer index
        let mut coords = Vec::new();
        for (l, &size) in layers.iter().enumerate() {
            for k in 0..size {
                coords.push((k as f64 - (size as f64 - 1.0) / 2.0, l as f64));
            }
        }
        let mut links = Vec::new();
        let mut offset = 0;
        for w in layers.windows(2) {
            let next = offset + w[0];
            for s in 0..w[0] {
                for t in 0..w[1] {
                    let (a, b) = (offset + s, next + t);
                    let dx = coords[a].0 - coords[b].0;
                    let dy = coords[a].1 - coords[b].1;
                    links.push(Link {
                        from: a,
                        to: b,
                        squared_length: dx * dx + dy * dy,
                    });
                }
            }
            offset = next;
        }
        let max_cost = links.iter().map(|l| l.squared_length).sum();

        let targets = (0..PATTERNS)
            .map(|p| {
                let left = (p >> 4) as u8;
                let right = (p & 0xF) as u8;
                config.left_objects.contains(&left) && config.right_objects.contains(&right)
            })
            .collect();

        Ok(Self {
            node_count: coords.len(),
            config,
            links,
            max_cost,
            targets,
            weight_noise,
        })
    }

    pub fn config(&self) -> &RetinaConfig {
        &self.config
    }

    fn check_shape(&self, g: &RetinaGenome) -> bool {
        g.layers == self.config.layers
            && g.connections.len() == self.links.len()
            && g.biases.len() == RetinaGenome::bias_count(&self.config.layers)
    }

    /// Sum of squared lengths of the enabled connections.
    pub fn connection_cost(&self, g: &RetinaGenome) -> f64 {
        g.connections
            .iter()
            .zip(&self.links)
            .filter(|(c, _)| c.present)
            .map(|(_, l)| l.squared_length)
            .sum()
    }

    /// Cost of the fully connected network.
    pub fn max_connection_cost(&self) -> f64 {
        self.max_cost
    }

    pub fn normalized_connection_cost(&self, g: &RetinaGenome) -> f64 {
        self.connection_cost(g) / self.max_cost
    }

    /// Greedy modularity of the enabled-connection digraph.
    pub fn modularity(&self, g: &RetinaGenome) -> f64 {
        let edges: Vec<(usize, usize)> = g
            .connections
            .iter()
            .zip(&self.links)
            .filter(|(c, _)| c.present)
            .map(|(_, l)| (l.from, l.to))
            .collect();
        greedy_modularity(self.node_count, &edges).q
    }

    /// Whether the pattern is a target (object on both sides).
    pub fn target(&self, pattern: usize) -> bool {
        self.targets[pattern]
    }

    /// Network output for one 8-bit pattern; the answer is `output >= 0`.
    pub fn output(&self, g: &RetinaGenome, pattern: usize) -> f64 {
        let mut act = vec![0.0; self.node_count];
        for (k, a) in act.iter_mut().take(PIXELS).enumerate() {
            *a = if pattern >> (PIXELS - 1 - k) & 1 == 1 { 1.0 } else { -1.0 };
        }
        let mut link = 0;
        let mut bias = 0;
        let mut offset = 0;
        for w in self.config.layers.windows(2) {
            let next = offset + w[0];
            act[next..next + w[1]].copy_from_slice(&g.biases[bias..bias + w[1]]);
            for s in 0..w[0] {
                let a = act[offset + s];
                for t in 0..w[1] {
                    let c = g.connections[link];
                    if c.present {
                        act[next + t] += c.weight * a;
                    }
                    link += 1;
                }
            }
            for t in 0..w[1] {
                act[next + t] = act[next + t].tanh();
            }
            bias += w[1];
            offset = next;
        }
        act[self.node_count - 1]
    }

    /// Fraction of the 256 patterns answered correctly.
    pub fn fitness(&self, g: &RetinaGenome) -> f64 {
        let correct = (0..PATTERNS)
            .filter(|&p| (self.output(g, p) >= 0.0) == self.targets[p])
            .count();
        correct as f64 / PATTERNS as f64
    }

    fn clip(&self, w: f64) -> f64 {
        w.clamp(-self.config.weight_range, self.config.weight_range)
    }

    fn perturb<R: Rng + ?Sized>(&self, w: f64, rng: &mut R) -> f64 {
        self.clip(w + self.weight_noise.sample(rng))
    }
}

impl Domain for RetinaDomain {
    type Genome = RetinaGenome;

    fn name(&self) -> &'static str {
        "retina"
    }

    fn descriptor_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0), (0.0, 1.0)]
    }

    fn descriptor_labels(&self) -> Vec<String> {
        vec!["connection_cost".into(), "modularity".into()]
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> RetinaGenome {
        let r = self.config.weight_range;
        let connections = (0..self.links.len())
            .map(|_| Connection {
                present: rng.random_bool(self.config.connection_probability),
                weight: rng.random_range(-r..=r),
            })
            .collect();
        let biases = (0..RetinaGenome::bias_count(&self.config.layers))
            .map(|_| rng.random_range(-r..=r))
            .collect();
        RetinaGenome {
            layers: self.config.layers.clone(),
            connections,
            biases,
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, parent: &RetinaGenome, rng: &mut R) -> RetinaGenome {
        let cfg = &self.config;
        let mut child = parent.clone();
        for c in child.connections.iter_mut() {
            if rng.random_bool(cfg.toggle_rate) {
                c.present = !c.present;
            }
            if rng.random_bool(cfg.weight_rate) {
                c.weight = self.perturb(c.weight, rng);
            }
        }
        for b in child.biases.iter_mut() {
            if rng.random_bool(cfg.bias_rate) {
                *b = self.perturb(*b, rng);
            }
        }
        // Nothing changed: force a single point mutation at a random locus.
        while child == *parent {
            let n = child.connections.len();
            let locus = rng.random_range(0..2 * n + child.biases.len());
            if locus < n {
                child.connections[locus].present = !child.connections[locus].present;
            } else if locus < 2 * n {
                let w = &mut child.connections[locus - n].weight;
                *w = self.perturb(*w, rng);
            } else {
                let b = &mut child.biases[locus - 2 * n];
                *b = self.perturb(*b, rng);
            }
        }
        child
    }

    fn evaluate(&self, g: &RetinaGenome) -> Evaluation {
        if !self.check_shape(g) {
            return Evaluation {
                fitness: f64::NAN,
                descriptor: vec![f64::NAN, f64::NAN],
            };
        }
        Evaluation {
            fitness: self.fitness(g),
            descriptor: vec![
                self.normalized_connection_cost(g),
                self.modularity(g).max(0.0),
            ],
        }
    }

    /// `8-4-2-1|p:w;p:w;...|b;b;...`, where `p` is 1 for a present connection.
    fn encode(&self, g: &RetinaGenome) -> String {
        let mut s = g
            .layers
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("-");
        s.push('|');
        for (i, c) in g.connections.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            let _ = write!(s, "{}:{}", c.present as u8, c.weight);
        }
        s.push('|');
        let biases = g.biases.iter().map(|b| b.to_string()).collect::<Vec<_>>();
        s.push_str(&biases.join(";"));
        s
    }

    fn decode(&self, text: &str) -> Result<RetinaGenome> {
        let bad = |m: &str| Error::parse("retina genome", m.to_string());
        let mut parts = text.trim().split('|');
        let (Some(l), Some(c), Some(b), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad("expected three `|`-separated sections"));
        };
        let layers = l
            .split('-')
            .map(|x| x.parse::<usize>().map_err(|_| bad("layer sizes")))
            .collect::<Result<Vec<_>>>()?;
        let connections = if c.is_empty() {
            Vec::new()
        } else {
            c.split(';')
                .map(|pw| {
                    let (p, w) = pw.split_once(':').ok_or_else(|| bad("connection entry"))?;
                    let present = match p {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad("presence flag")),
                    };
                    let weight = w.parse::<f64>().map_err(|_| bad("weight"))?;
                    Ok(Connection { present, weight })
                })
                .collect::<Result<Vec<_>>>()?
        };
        let biases = if b.is_empty() {
            Vec::new()
        } else {
            b.split(';')
                .map(|x| x.parse::<f64>().map_err(|_| bad("bias")))
                .collect::<Result<Vec<_>>>()?
        };
        let g = RetinaGenome {
            layers,
            connections,
            biases,
        };
        if !self.check_shape(&g) {
            return Err(bad("topology does not match the configured layers"));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn domain() -> RetinaDomain {
        RetinaDomain::new(RetinaConfig::default()).unwrap()
    }

    #[test]
    fn default_objects_have_eight_per_side() {
        let c = RetinaConfig::default();
        assert_eq!(c.left_objects.len(), 8);
        assert_eq!(c.right_objects.len(), 8);
        let d = domain();
        assert_eq!((0..PATTERNS).filter(|&p| d.target(p)).count(), 64);
    }

    #[test]
    fn zero_network_answers_true_everywhere() {
        let d = domain();
        let g = RetinaGenome::zeros(&[8, 4, 2, 1]);
        let e = d.evaluate(&g);
        assert_eq!(e.fitness, 64.0 / 256.0);
        assert_eq!(e.descriptor, vec![0.0, 0.0]);
    }

    #[test]
    fn connection_cost_cases() {
        let d = domain();
        let mut g = RetinaGenome::zeros(&[8, 4, 2, 1]);
        assert_eq!(d.connection_cost(&g), 0.0);
        // input node 2 (x = -1.5) feeds hidden node 0 (x = -1.5) straight up
        let vertical = 2 * 4;
        g.connections[vertical].present = true;
        assert_eq!(d.connection_cost(&g), 1.0);
        for c in g.connections.iter_mut() {
            c.present = true;
        }
        assert_eq!(d.normalized_connection_cost(&g), 1.0);
    }

    #[test]
    fn fitness_is_a_multiple_of_one_256th() {
        let d = domain();
        let mut rng = seeded(3);
        for _ in 0..50 {
            let f = d.evaluate(&d.random_genome(&mut rng)).fitness;
            let k = f * 256.0;
            assert_eq!(k, k.round());
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn evaluation_is_pure() {
        let d = domain();
        let mut rng = seeded(4);
        let g = d.random_genome(&mut rng);
        let a = d.evaluate(&g);
        let b = d.evaluate(&g.clone());
        assert_eq!(a.fitness.to_bits(), b.fitness.to_bits());
        assert_eq!(a.descriptor[0].to_bits(), b.descriptor[0].to_bits());
        assert_eq!(a.descriptor[1].to_bits(), b.descriptor[1].to_bits());
    }

    #[test]
    fn halves_decide_targets_independently() {
        let d = domain();
        let left_ok = |p: usize| d.config().left_objects.contains(&((p >> 4) as u8));
        for p in 0..PATTERNS {
            for flip in 1..16usize {
                let q = p ^ flip;
                assert_eq!(left_ok(p), left_ok(q));
            }
        }
    }

    #[test]
    fn mutation_with_zero_rates_still_changes() {
        let cfg = RetinaConfig {
            toggle_rate: 0.0,
            weight_rate: 0.0,
            bias_rate: 0.0,
            ..RetinaConfig::default()
        };
        let d = RetinaDomain::new(cfg).unwrap();
        let mut rng = seeded(6);
        let g = d.random_genome(&mut rng);
        for _ in 0..100 {
            assert_ne!(d.mutate(&g, &mut rng), g);
        }
    }

    #[test]
    fn weights_stay_in_range_under_mutation() {
        let d = domain();
        let mut rng = seeded(7);
        let mut g = d.random_genome(&mut rng);
        for _ in 0..100_000 {
            g = d.mutate(&g, &mut rng);
            assert_eq!(g.connections.len(), 42);
            assert!(g.connections.iter().all(|c| c.weight.abs() <= 2.0));
            assert!(g.biases.iter().all(|b| b.abs() <= 2.0));
        }
    }

    #[test]
    fn encoding_round_trips() {
        let d = domain();
        let mut rng = seeded(8);
        let g = d.random_genome(&mut rng);
        let text = d.encode(&g);
        assert!(text.starts_with("8-4-2-1|"));
        assert_eq!(d.decode(&text).unwrap(), g);
        assert!(d.decode("8-4-1|1:0|0").is_err());
    }

    #[test]
    fn objects_file_parsing() {
        let (l, r) = parse_objects("# c\nleft:\n0001\n1111\nright:\n1000 # x\n").unwrap();
        assert_eq!(l, vec![1, 15]);
        assert_eq!(r, vec![8]);
        assert!(parse_objects("0001\n").is_err());
        assert!(parse_objects("left:\n012\n").is_err());
    }

    #[test]
    fn rejects_bad_layers() {
        let cfg = RetinaConfig {
            layers: vec![8, 4, 2],
            ..RetinaConfig::default()
        };
        assert!(RetinaDomain::new(cfg).is_err());
    }
}
