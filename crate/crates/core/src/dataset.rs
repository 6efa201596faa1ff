//! Batches of `(s, a, s', r)` transitions and their JSON-lines file format.
//!
//! The file starts with one header object (`{"header": {...}}`) followed by
//! one transition per line.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{Environment, StartRegion};
use crate::error::{Error, Result};
use crate::fuzzy::{Normalizer, Policy};
use crate::rng::stream;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition<F> {
    pub s: Vec<F>,
    pub a: Vec<F>,
    pub s_next: Vec<F>,
    pub r: F,
    pub traj_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub env: String,
    pub seed: u64,
    /// `"random"` or a description of the behavior policy.
    pub policy: String,
    pub n_traj: usize,
    pub traj_len: usize,
    pub state_dim: usize,
    pub action_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    header: DatasetMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDataset<F> {
    pub meta: DatasetMeta,
    pub transitions: Vec<Transition<F>>,
}

/// Behavior used while recording trajectories.
pub enum DataPolicy<'a, F> {
    /// Uniform draws from the action bounds at every step.
    Random,
    Given(&'a dyn Policy<F>),
}

impl<F: Scalar> TransitionDataset<F> {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.meta.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.meta.action_dim
    }

    /// Per-feature min/max over both start and successor states.
    pub fn normalizer(&self) -> Result<Normalizer<F>> {
        Normalizer::fit(
            self.transitions
                .iter()
                .flat_map(|t| [t.s.as_slice(), t.s_next.as_slice()]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.transitions.iter().enumerate() {
            if t.s.len() != self.meta.state_dim
                || t.s_next.len() != self.meta.state_dim
                || t.a.len() != self.meta.action_dim
            {
                return Err(Error::structure(format!("transition {i} has inconsistent dimensions")));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(
            &mut out,
            &Header {
                header: self.meta.clone(),
            },
        )?;
        out.write_all(b"\n")?;
        for t in &self.transitions {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines.next().ok_or(Error::EmptyDataset)??;
        let header: Header = serde_json::from_str(&first)?;
        let mut transitions = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            transitions.push(serde_json::from_str(&line)?);
        }
        let ds = Self {
            meta: header.header,
            transitions,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// SHA-256 of the serialized file contents, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = self.to_jsonl().expect("dataset serialization");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Records `n_traj` trajectories of `traj_len` steps each.
pub fn generate_dataset<F: Scalar, E: Environment<F> + ?Sized>(
    env: &E,
    policy: DataPolicy<'_, F>,
    n_traj: usize,
    traj_len: usize,
    region: &StartRegion<F>,
    seed: u64,
) -> Result<TransitionDataset<F>> {
    if n_traj == 0 || traj_len == 0 {
        return Err(Error::config("n_traj/traj_len", "must be at least 1"));
    }
    let bounds = env.action_bounds();
    let mut transitions = Vec::with_capacity(n_traj * traj_len);
    for traj in 0..n_traj {
        let mut rng = stream(seed, &[0xDA7A, traj as u64]);
        let mut s = env.sample_initial(region, &mut rng);
        for _ in 0..traj_len {
            let a: Vec<F> = match &policy {
                DataPolicy::Random => bounds.iter().map(|b| rng.random_range(b.lo..=b.hi)).collect(),
                DataPolicy::Given(p) => {
                    let mut a = vec![F::zero(); bounds.len()];
                    p.act(&s, &mut a);
                    a
                }
            };
            let (next, r) = env.step(&s, &a)?;
            transitions.push(Transition {
                s: std::mem::replace(&mut s, next.clone()),
                a,
                s_next: next,
                r,
                traj_id: traj,
            });
        }
    }
    Ok(TransitionDataset {
        meta: DatasetMeta {
            env: env.name(),
            seed,
            policy: match policy {
                DataPolicy::Random => "random".into(),
                DataPolicy::Given(_) => "given".into(),
            },
            n_traj,
            traj_len,
            state_dim: env.state_dim(),
            action_dim: bounds.len(),
        },
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CartPole;

    #[test]
    fn sizes() {
        let env = CartPole::<f64>::new();
        let region = CartPole::dataset_region();
        let ds = generate_dataset(&env, DataPolicy::Random, 100, 100, &region, 1).unwrap();
        assert_eq!(ds.len(), 10_000);
        let one = generate_dataset(&env, DataPolicy::Random, 1, 1, &region, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(generate_dataset(&env, DataPolicy::Random, 0, 1, &region, 1).is_err());
    }

    #[test]
    fn start_states_follow_region_and_chain() {
        let env = CartPole::<f64>::new();
        let ds = generate_dataset(&env, DataPolicy::Random, 20, 5, &CartPole::dataset_region(), 4).unwrap();
        for t in ds.transitions.iter().step_by(5) {
            assert!(t.s[0].abs() <= std::f64::consts::PI);
            assert_eq!(&t.s[1..], &[0.0, 0.0, 0.0]);
        }
        for w in ds.transitions.windows(2) {
            if w[0].traj_id == w[1].traj_id {
                assert_eq!(w[0].s_next, w[1].s);
            }
        }
        assert!(ds.transitions.iter().all(|t| t.a[0].abs() <= 30.0));
    }

    #[test]
    fn seeded_generation_is_bit_identical() {
        let env = CartPole::<f64>::new();
        let region = CartPole::dataset_region();
        let a = generate_dataset(&env, DataPolicy::Random, 10, 30, &region, 99).unwrap();
        let b = generate_dataset(&env, DataPolicy::Random, 10, 30, &region, 99).unwrap();
        let c = generate_dataset(&env, DataPolicy::Random, 10, 30, &region, 98).unwrap();
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn jsonl_roundtrip() {
        let env = CartPole::<f64>::new();
        let ds = generate_dataset(&env, DataPolicy::Random, 3, 4, &CartPole::dataset_region(), 5).unwrap();
        let bytes = ds.to_jsonl().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().next().unwrap().starts_with("{\"header\""));
        assert!(text.lines().nth(1).unwrap().contains("\"s_next\""));
        let back = TransitionDataset::<f64>::read_jsonl(&bytes[..]).unwrap();
        assert_eq!(back, ds);
    }
}
