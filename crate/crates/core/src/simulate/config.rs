use crate::error::{Error, Result};
use crate::screening::ScreenSize;

use super::generate::Case;
use super::scenario::{Scenario, SimMethod};

/// Parsed simulation config: one scenario per (rho, case) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub rhos: Vec<f64>,
    pub cases: Vec<Case>,
    pub seed: u64,
    pub reps: usize,
    pub size: ScreenSize,
    pub methods: Vec<SimMethod>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("config line {line}: {msg}"))
}

fn list<T: std::str::FromStr>(v: &str, line: usize, what: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| bad(line, format!("bad {what} '{}'", s.trim()))))
        .collect()
}

impl SimConfig {
    /// `key = value` lines; `#` starts a comment. Keys: `n`, `p`, `rho`
    /// (comma list), `case` (comma list), `seed`, `reps`, `gamma` or `d`,
    /// `methods` (comma list). `gamma` defaults to `1/ln n`, `rho` to 0,
    /// `case` to all three, `methods` to all four.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut n, mut p, mut seed, mut reps) = (None, None, None, None);
        let mut rhos = vec![0.0];
        let mut cases = Case::ALL.to_vec();
        let mut methods = SimMethod::ALL.to_vec();
        let mut gamma = None;
        let mut d = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(ln, "expected key = value"))?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim());
            let int = |what: &str| v.parse::<usize>().map_err(|_| bad(ln, format!("bad {what} '{v}'")));
            match k.as_str() {
                "n" => n = Some(int("n")?),
                "p" => p = Some(int("p")?),
                "reps" => reps = Some(int("reps")?),
                "d" => d = Some(int("d")?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad(ln, format!("bad seed '{v}'")))?),
                "gamma" => gamma = Some(v.parse::<f64>().map_err(|_| bad(ln, format!("bad gamma '{v}'")))?),
                "rho" => rhos = list(v, ln, "rho")?,
                "case" | "cases" => cases = list(v, ln, "case")?,
                "method" | "methods" => methods = list(v, ln, "method")?,
                other => return Err(bad(ln, format!("unknown key '{other}'"))),
            }
        }
        let n = n.ok_or_else(|| Error::InvalidInput("config: missing n".into()))?;
        let size = match (gamma, d) {
            (Some(_), Some(_)) => return Err(Error::InvalidInput("config: give gamma or d, not both".into())),
            (Some(g), None) => ScreenSize::Gamma(g),
            (None, Some(d)) => ScreenSize::Fixed(d),
            (None, None) => ScreenSize::conventional(n),
        };
        let cfg = Self {
            n,
            p: p.ok_or_else(|| Error::InvalidInput("config: missing p".into()))?,
            rhos,
            cases,
            seed: seed.ok_or_else(|| Error::InvalidInput("config: missing seed".into()))?,
            reps: reps.ok_or_else(|| Error::InvalidInput("config: missing reps".into()))?,
            size,
            methods,
        };
        for sc in cfg.scenarios() {
            sc.validate()?;
        }
        Ok(cfg)
    }

    /// Cells in (rho, case) order. Each cell gets its own seed derived from
    /// the config seed and the cell key, so adding a cell never changes the
    /// others.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &rho in &self.rhos {
            for &case in &self.cases {
                out.push(Scenario {
                    n: self.n,
                    p: self.p,
                    rho,
                    case,
                    seed: cell_seed(self.seed, rho, case),
                    reps: self.reps,
                    size: self.size,
                });
            }
        }
        out
    }
}

/// SplitMix64 finaliser over the seed and the cell key.
fn cell_seed(seed: u64, rho: f64, case: Case) -> u64 {
    let mut z = seed ^ rho.to_bits().rotate_left(17) ^ (case as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "# full-size run\nn = 200\np = 2000\nrho = 0, 0.2, 0.5\ncase = a,b,c\nseed = 7\nreps = 100\nmethods = acor, acor+gresh\n";

    #[test]
    fn parses_full_config() {
        let c = SimConfig::parse(TEXT).unwrap();
        assert_eq!((c.n, c.p, c.reps, c.seed), (200, 2000, 100, 7));
        assert_eq!(c.rhos, vec![0.0, 0.2, 0.5]);
        assert_eq!(c.methods, vec![SimMethod::Acor, SimMethod::AcorGresh]);
        assert_eq!(c.size.resolve(200).unwrap(), 37);
        assert_eq!(c.scenarios().len(), 9);
    }

    #[test]
    fn cell_seeds_are_distinct_and_stable() {
        let c = SimConfig::parse(TEXT).unwrap();
        let seeds: std::collections::BTreeSet<u64> = c.scenarios().iter().map(|s| s.seed).collect();
        assert_eq!(seeds.len(), 9);
        let one = SimConfig::parse(&TEXT.replace("rho = 0, 0.2, 0.5", "rho = 0.2")).unwrap();
        let s = one.scenarios().into_iter().find(|s| s.case == Case::B).unwrap();
        assert!(c.scenarios().iter().any(|t| t.seed == s.seed && t.rho == 0.2));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(SimConfig::parse("n 200").is_err());
        assert!(SimConfig::parse("n = x").is_err());
        assert!(SimConfig::parse("n = 200\np = 100\nseed = 1\nreps = 1\nfoo = 2").is_err());
        assert!(SimConfig::parse("n = 200\np = 100\nseed = 1").is_err());
        assert!(SimConfig::parse("n = 200\np = 100\nseed = 1\nreps = 2\nrho = 1.5").is_err());
        assert!(SimConfig::parse("n = 200\np = 100\nseed = 1\nreps = 2\ngamma = 0.1\nd = 3").is_err());
    }
}
