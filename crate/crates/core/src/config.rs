//! `key = value` run configuration shared by `train`, `evaluate` and `sweep`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::DEFAULT_KS;
use crate::polybasis::FilterParams;
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub filter: FilterParams,
    pub train: TrainConfig,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub ks: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            train: TrainConfig::default(),
            data: None,
            out: None,
            ks: DEFAULT_KS.to_vec(),
        }
    }
}

fn list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        let f = &mut self.filter;
        let t = &mut self.train;
        match key {
            "basis" => f.basis = value.parse().map_err(|e: Error| e.to_string())?,
            "order" => f.order = num(key, value)?,
            "a" => f.a = num(key, value)?,
            "b" => f.b = num(key, value)?,
            "alpha" => f.alpha = num(key, value)?,
            "discount" => f.discount = num(key, value)?,
            "order_weights" => {
                f.order_weights = if value.is_empty() || value == "uniform" {
                    None
                } else {
                    Some(list(value).ok_or_else(|| format!("bad list {value:?} for {key}"))?)
                }
            }
            "dim" => t.dim = num(key, value)?,
            "learning_rate" => t.learning_rate = num(key, value)?,
            "l2_lambda" => t.l2_lambda = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "max_epochs" => t.max_epochs = num(key, value)?,
            "patience" => t.patience = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "adam_beta1" => t.adam_beta1 = num(key, value)?,
            "adam_beta2" => t.adam_beta2 = num(key, value)?,
            "adam_eps" => t.adam_eps = num(key, value)?,
            "ks" => self.ks = list(value).ok_or_else(|| format!("bad list {value:?} for ks"))?,
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: origin.to_owned(),
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found {line:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.train.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::invalid("ks must be a non-empty list of positive cutoffs"));
        }
        Ok(())
    }

    /// Resolved configuration in the same `key = value` syntax.
    pub fn to_text(&self) -> String {
        let f = &self.filter;
        let t = &self.train;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("basis", f.basis.to_string());
        kv("order", f.order.to_string());
        kv("a", f.a.to_string());
        kv("b", f.b.to_string());
        kv("alpha", f.alpha.to_string());
        kv("discount", f.discount.to_string());
        kv(
            "order_weights",
            f.order_weights.as_deref().map_or_else(|| "uniform".to_owned(), join),
        );
        kv("dim", t.dim.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("l2_lambda", t.l2_lambda.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("max_epochs", t.max_epochs.to_string());
        kv("patience", t.patience.to_string());
        kv("seed", t.seed.to_string());
        kv("adam_beta1", t.adam_beta1.to_string());
        kv("adam_beta2", t.adam_beta2.to_string());
        kv("adam_eps", t.adam_eps.to_string());
        kv("ks", join(&self.ks));
        if let Some(d) = &self.data {
            kv("data", d.display().to_string());
        }
        if let Some(o) = &self.out {
            kv("out", o.display().to_string());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::BasisKind;

    #[test]
    fn parses_and_round_trips() {
        let text = "# toy run\nbasis = legendre\norder = 2\nalpha=0.3\nks = 5, 10\nlearning_rate = 0.01 # faster\n";
        let cfg = RunConfig::parse(text, "inline").unwrap();
        assert_eq!(cfg.filter.basis, BasisKind::Legendre);
        assert_eq!(cfg.filter.order, 2);
        assert_eq!(cfg.ks, vec![5, 10]);
        assert_eq!(cfg.train.learning_rate, 0.01);
        let again = RunConfig::parse(&cfg.to_text(), "resolved").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        match RunConfig::parse("order = 2\nwidth = 3\n", "x.cfg") {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("width"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::parse("a = -1\n", "x").is_err());
        assert!(RunConfig::parse("order = many\n", "x").is_err());
        assert!(RunConfig::parse("patience = 0\n", "x").is_err());
        assert!(RunConfig::parse("just a line\n", "x").is_err());
    }

    #[test]
    fn weights_list() {
        let cfg = RunConfig::parse("order = 1\norder_weights = 0.25,0.75\n", "x").unwrap();
        assert_eq!(cfg.filter.order_weights, Some(vec![0.25, 0.75]));
    }
}
