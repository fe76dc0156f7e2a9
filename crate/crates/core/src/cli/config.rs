use crate::losses::{LossMode, PushThreshold};
use crate::network::LayerSpec;
use crate::trainer::TrainConfig;

/// Recognized keys, in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "epochs",
    "batch_size",
    "lr",
    "seed",
    "mode",
    "alpha",
    "beta",
    "mu0",
    "push_threshold",
    "nu_start",
    "nu_end",
    "nu_input",
    "q",
    "k",
    "dims",
    "eval_every",
    "autoencoder",
    "checkpoint_every",
];

pub const PRESETS: &[(&str, &str)] = &[
    ("smileface", include_str!("../../presets/smileface.cfg")),
    ("threegauss", include_str!("../../presets/threegauss.cfg")),
    ("repeatpoints", include_str!("../../presets/repeatpoints.cfg")),
    ("swissroll", include_str!("../../presets/swissroll.cfg")),
    ("coil20", include_str!("../../presets/coil20.cfg")),
    ("coil100", include_str!("../../presets/coil100.cfg")),
    ("mnist", include_str!("../../presets/mnist.cfg")),
    ("fmnist", include_str!("../../presets/fmnist.cfg")),
    ("cifar3", include_str!("../../presets/cifar3.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

/// Sets one key; the message names what was wrong with the value.
pub fn apply(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<(), String> {
    let v = value.trim();
    let l = &mut cfg.loss;
    match key {
        "epochs" => cfg.epochs = num(v)?,
        "batch_size" => cfg.batch_size = num(v)?,
        "lr" => cfg.lr = num(v)?,
        "seed" => cfg.seed = num(v)?,
        "mode" => l.mode = v.parse::<LossMode>().map_err(|e| e.to_string())?,
        "alpha" => l.alpha = num(v)?,
        "beta" => l.beta = num(v)?,
        "mu0" => l.mu0 = num(v)?,
        "push_threshold" => l.push_threshold = v.parse::<PushThreshold>().map_err(|e| e.to_string())?,
        "nu_start" => l.nu_start = num(v)?,
        "nu_end" => l.nu_end = num(v)?,
        "nu_input" => cfg.nu_input = num(v)?,
        "q" => l.q = num(v)?,
        "k" => cfg.k = num(v)?,
        "dims" => cfg.layers = LayerSpec::parse(v).map_err(|e| e.to_string())?,
        "eval_every" => cfg.eval_every = num(v)?,
        "autoencoder" => cfg.autoencoder = num(v)?,
        "checkpoint_every" => cfg.checkpoint_every = num(v)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Applies a `key = value` text. Every bad line is reported, not just the first.
pub fn apply_text(cfg: &mut TrainConfig, text: &str, origin: &str) -> Result<(), String> {
    let mut errors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            None => errors.push(format!("{origin}:{}: expected `key = value`", n + 1)),
            Some((k, v)) => {
                if let Err(e) = apply(cfg, k.trim(), v) {
                    errors.push(format!("{origin}:{}: {e}", n + 1));
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("\n"))
    }
}

pub fn value_of(cfg: &TrainConfig, key: &str) -> String {
    let l = &cfg.loss;
    match key {
        "epochs" => cfg.epochs.to_string(),
        "batch_size" => cfg.batch_size.to_string(),
        "lr" => format!("{:?}", cfg.lr),
        "seed" => cfg.seed.to_string(),
        "mode" => l.mode.to_string(),
        "alpha" => format!("{:?}", l.alpha),
        "beta" => format!("{:?}", l.beta),
        "mu0" => format!("{:?}", l.mu0),
        "push_threshold" => l.push_threshold.to_string(),
        "nu_start" => format!("{:?}", l.nu_start),
        "nu_end" => format!("{:?}", l.nu_end),
        "nu_input" => format!("{:?}", cfg.nu_input),
        "q" => format!("{:?}", l.q),
        "k" => cfg.k.to_string(),
        "dims" => cfg.layers.to_string(),
        "eval_every" => cfg.eval_every.to_string(),
        "autoencoder" => cfg.autoencoder.to_string(),
        "checkpoint_every" => cfg.checkpoint_every.to_string(),
        _ => unreachable!("not a config key: {key}"),
    }
}

/// Every key with its resolved value; parses back to the same configuration.
pub fn to_text(cfg: &TrainConfig) -> String {
    CONFIG_KEYS.iter().map(|k| format!("{k} = {}\n", value_of(cfg, k))).collect()
}
