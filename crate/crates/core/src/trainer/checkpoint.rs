use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EpochStats;
use crate::network::{AdamState, Network};
use crate::numerics::{Matrix, RngState};
use crate::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a run bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub encoder: Network,
    pub encoder_adam: AdamState,
    pub decoder: Option<Network>,
    pub decoder_adam: Option<AdamState>,
    pub rng: RngState,
    pub sigma_cache: Vec<f64>,
    pub stats: Vec<EpochStats>,
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{x:?}").unwrap();
    }
    s
}

fn write_net(out: &mut String, prefix: &str, net: &Network, adam: &AdamState) {
    writeln!(out, "{prefix}.dims = {}", join(net.dims())).unwrap();
    writeln!(out, "{prefix}.params = {}", join(&net.params())).unwrap();
    writeln!(out, "{prefix}.adam.step = {}", adam.step).unwrap();
    writeln!(out, "{prefix}.adam.m = {}", join(&adam.m)).unwrap();
    writeln!(out, "{prefix}.adam.v = {}", join(&adam.v)).unwrap();
}

struct Fields(HashMap<String, String>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str, Error> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing `{key}`")))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T, Error> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Format(format!("checkpoint `{key}`: cannot parse `{v}`")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, Error> {
        parse_list(key, self.get(key)?)
    }

    fn net(&self, prefix: &str) -> Result<(Network, AdamState), Error> {
        let dims: Vec<usize> = self.list(&format!("{prefix}.dims"))?;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Format(format!("checkpoint `{prefix}.dims` is not a valid layer list")));
        }
        let weights = dims.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect();
        let biases = dims[1..].iter().map(|&n| vec![0.0; n]).collect();
        let mut net = Network::from_parts(weights, biases)?;
        net.set_params(&self.list::<f64>(&format!("{prefix}.params"))?)
            .map_err(|e| Error::Format(format!("checkpoint `{prefix}.params`: {e}")))?;
        let adam = AdamState {
            step: self.scalar(&format!("{prefix}.adam.step"))?,
            m: self.list(&format!("{prefix}.adam.m"))?,
            v: self.list(&format!("{prefix}.adam.v"))?,
        };
        if adam.m.len() != net.param_count() || adam.v.len() != net.param_count() {
            return Err(Error::Format(format!("checkpoint `{prefix}.adam` has the wrong length")));
        }
        Ok((net, adam))
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, Error> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Format(format!("checkpoint `{key}`: cannot parse `{s}`")))
        })
        .collect()
}

fn stats_line(s: &EpochStats) -> String {
    format!(
        "{},{:?},{:?},{:?},{:?},{},{},{},{},{:?}",
        s.epoch,
        s.nu,
        s.mu,
        s.loss,
        s.reconstruction,
        s.batches,
        s.pair_budget,
        s.kernel_evaluations,
        s.sigma_unconverged,
        s.sigma_max_residual
    )
}

fn parse_stats(key: &str, v: &str) -> Result<EpochStats, Error> {
    let p: Vec<&str> = v.split(',').map(str::trim).collect();
    let bad = || Error::Format(format!("checkpoint `{key}`: malformed epoch record"));
    if p.len() != 10 {
        return Err(bad());
    }
    let f = |i: usize| p[i].parse::<f64>().map_err(|_| bad());
    let u = |i: usize| p[i].parse::<u64>().map_err(|_| bad());
    Ok(EpochStats {
        epoch: u(0)? as usize,
        nu: f(1)?,
        mu: f(2)?,
        loss: f(3)?,
        reconstruction: f(4)?,
        batches: u(5)? as usize,
        pair_budget: u(6)?,
        kernel_evaluations: u(7)?,
        sigma_unconverged: u(8)? as usize,
        sigma_max_residual: f(9)?,
    })
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "version = {CHECKPOINT_VERSION}").unwrap();
        writeln!(out, "epoch = {}", self.epoch).unwrap();
        writeln!(out, "rng = {},{},{}", self.rng.seed, self.rng.stream, self.rng.word_pos).unwrap();
        write_net(&mut out, "encoder", &self.encoder, &self.encoder_adam);
        if let (Some(d), Some(a)) = (&self.decoder, &self.decoder_adam) {
            write_net(&mut out, "decoder", d, a);
        }
        writeln!(out, "sigma_cache = {}", join(&self.sigma_cache)).unwrap();
        for s in &self.stats {
            writeln!(out, "stats.{} = {}", s.epoch, stats_line(s)).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut map = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("checkpoint line {}: expected `key = value`", n + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Format(format!("checkpoint line {}: duplicate key `{}`", n + 1, k.trim())));
            }
        }
        let f = Fields(map);
        let version: u32 = f.scalar("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let epoch: usize = f.scalar("epoch")?;
        let rng: Vec<u128> = f.list("rng")?;
        if rng.len() != 3 || rng[0] > u64::MAX as u128 || rng[1] > u64::MAX as u128 {
            return Err(Error::Format("checkpoint `rng` must be seed,stream,position".into()));
        }
        let (encoder, encoder_adam) = f.net("encoder")?;
        let (decoder, decoder_adam) = if f.0.contains_key("decoder.dims") {
            let (d, a) = f.net("decoder")?;
            (Some(d), Some(a))
        } else {
            (None, None)
        };
        let stats = (0..epoch)
            .map(|e| {
                let key = format!("stats.{e}");
                let s = parse_stats(&key, f.get(&key)?)?;
                if s.epoch != e {
                    return Err(Error::Format(format!("checkpoint `{key}` has epoch {}", s.epoch)));
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Self {
            epoch,
            encoder,
            encoder_adam,
            decoder,
            decoder_adam,
            rng: RngState {
                seed: rng[0] as u64,
                stream: rng[1] as u64,
                word_pos: rng[2],
            },
            sigma_cache: f.list("sigma_cache")?,
            stats,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn text_round_trip() {
        let mut rng = SeededRng::new(1);
        let net = Network::init_he(&[3, 4, 2], &mut rng).unwrap();
        let mut adam = AdamState::new(&net);
        adam.step = 7;
        adam.m[0] = 1e-300;
        adam.v[1] = 0.1 + 0.2;
        for _ in 0..5 {
            rng.uniform();
        }
        let ck = Checkpoint {
            epoch: 1,
            encoder: net,
            encoder_adam: adam,
            decoder: None,
            decoder_adam: None,
            rng: rng.state(),
            sigma_cache: vec![f64::NAN, 2.5],
            stats: vec![EpochStats {
                epoch: 0,
                nu: 0.001,
                mu: 1.0,
                loss: 123.456,
                reconstruction: 0.0,
                batches: 1,
                pair_budget: 100,
                kernel_evaluations: 999,
                sigma_unconverged: 0,
                sigma_max_residual: 3e-7,
            }],
        };
        let back = Checkpoint::parse(&ck.to_text()).unwrap();
        assert!(back.sigma_cache[0].is_nan());
        assert_eq!(back.sigma_cache[1], 2.5);
        let strip = |c: &Checkpoint| Checkpoint { sigma_cache: vec![], ..c.clone() };
        assert_eq!(strip(&back), strip(&ck));
        let mut a = SeededRng::from_state(back.rng);
        assert_eq!(a.uniform(), rng.uniform());
    }

    #[test]
    fn rejects_damaged_text() {
        assert!(Checkpoint::parse("version = 1\n").is_err());
        assert!(Checkpoint::parse("version = 9\nepoch = 0\n").is_err());
        assert!(Checkpoint::parse("nonsense\n").is_err());
    }
}
