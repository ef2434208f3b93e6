use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::engine::{self, forward, init_params, NetworkSpec, ParameterSet, Tensor};
use crate::error::{Error, Result};
use crate::parallel;

/// One learner: its architecture and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub spec: NetworkSpec,
    pub params: ParameterSet,
}

/// Ordered collection of `M ≥ 1` learners sharing input width and class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Member>,
}

impl Ensemble {
    pub fn new(members: Vec<Member>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidConfig("an ensemble needs at least one member".into()))?;
        let (d, c) = (first.spec.input_dim(), first.spec.class_count());
        for (m, member) in members.iter().enumerate() {
            if member.spec.input_dim() != d || member.spec.class_count() != c {
                return Err(Error::Shape(format!(
                    "member {m} maps {}→{} but member 0 maps {d}→{c}",
                    member.spec.input_dim(),
                    member.spec.class_count()
                )));
            }
            if !member.params.matches(&member.spec) {
                return Err(Error::Shape(format!("member {m} parameters do not match its spec")));
            }
        }
        Ok(Ensemble { members })
    }

    /// `count` copies of `spec`, member `m` initialized from seed `base_seed + m`.
    pub fn init(spec: &NetworkSpec, count: usize, base_seed: u64) -> Result<Self> {
        Ensemble::new(
            (0..count)
                .map(|m| Member {
                    spec: spec.clone(),
                    params: init_params(spec, base_seed.wrapping_add(m as u64)),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn members_mut(&mut self) -> &mut [Member] {
        &mut self.members
    }

    pub fn into_members(self) -> Vec<Member> {
        self.members
    }

    pub fn input_dim(&self) -> usize {
        self.members[0].spec.input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.members[0].spec.class_count()
    }

    /// The members at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ensemble::new(indices.iter().map(|&i| self.members[i].clone()).collect())
    }

    /// Logits of every member on `inputs`, in member order.
    pub fn logits(&self, inputs: &Tensor) -> Result<Vec<Tensor>> {
        parallel::map(&self.members, |m| forward(&m.spec, &m.params, inputs).map(|(z, _)| z))
            .into_iter()
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let refs: Vec<_> = self.members.iter().map(|m| (&m.spec, &m.params)).collect();
        engine::write_checkpoint(BufWriter::new(file), &refs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let members = engine::read_checkpoint(BufReader::new(file))?;
        Ensemble::new(
            members
                .into_iter()
                .map(|(spec, params)| Member { spec, params })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(Ensemble::new(vec![]).is_err());
        let a = NetworkSpec::mlp(3, &[], 2).unwrap();
        let b = NetworkSpec::mlp(4, &[], 2).unwrap();
        let members = vec![
            Member { params: init_params(&a, 0), spec: a },
            Member { params: init_params(&b, 0), spec: b },
        ];
        assert!(matches!(Ensemble::new(members), Err(Error::Shape(_))));
    }

    #[test]
    fn init_uses_consecutive_seeds() {
        let spec = NetworkSpec::mlp(3, &[4], 2).unwrap();
        let e = Ensemble::init(&spec, 3, 10).unwrap();
        assert_eq!(e.members()[2].params, init_params(&spec, 12));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.oens");
        let e = Ensemble::init(&NetworkSpec::mlp(3, &[4], 2).unwrap(), 2, 5).unwrap();
        e.save(&path).unwrap();
        assert_eq!(Ensemble::load(&path).unwrap(), e);
    }
}
