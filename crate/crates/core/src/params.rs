use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldPrime;

/// Shape of one deployment: `N` replicated databases holding `K` messages.
///
/// `lengths[k]` is the number of field symbols in message `k` (the block
/// length is already folded in).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ProtocolParams {
    databases: usize,
    lengths: Vec<usize>,
    prime: FieldPrime,
}

#[derive(Deserialize)]
struct RawParams {
    databases: usize,
    lengths: Vec<usize>,
    #[serde(default)]
    prime: FieldPrime,
}

impl TryFrom<RawParams> for ProtocolParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ProtocolParams::new(raw.databases, raw.lengths, raw.prime)
    }
}

impl ProtocolParams {
    pub fn new(databases: usize, lengths: Vec<usize>, prime: FieldPrime) -> Result<Self> {
        if databases == 0 {
            return Err(Error::InvalidParams("need at least one database".into()));
        }
        if lengths.is_empty() {
            return Err(Error::InvalidParams("need at least one message".into()));
        }
        if let Some(k) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidParams(format!(
                "message {} has zero length",
                k + 1
            )));
        }
        Ok(ProtocolParams {
            databases,
            lengths,
            prime,
        })
    }

    /// `K` messages of `length` symbols each.
    pub fn uniform(databases: usize, messages: usize, length: usize, prime: FieldPrime) -> Result<Self> {
        ProtocolParams::new(databases, vec![length; messages], prime)
    }

    /// Unequal sizes given in units of `N - 1` symbols (one base-scheme block).
    pub fn in_blocks(databases: usize, units: &[usize], prime: FieldPrime) -> Result<Self> {
        let block = databases.saturating_sub(1).max(1);
        ProtocolParams::new(databases, units.iter().map(|u| u * block).collect(), prime)
    }

    pub fn databases(&self) -> usize {
        self.databases
    }

    pub fn messages(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn prime(&self) -> FieldPrime {
        self.prime
    }

    pub fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn total_symbols(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// The common length when all messages have the same size.
    pub fn uniform_length(&self) -> Option<usize> {
        let first = self.lengths[0];
        self.lengths.iter().all(|&l| l == first).then_some(first)
    }

    /// Symmetric retrieval needs at least two databases and two messages.
    pub fn require_symmetric(&self) -> Result<()> {
        if self.databases < 2 {
            return Err(Error::Infeasible(format!(
                "N = {} database(s): symmetric retrieval is infeasible",
                self.databases
            )));
        }
        if self.messages() < 2 {
            return Err(Error::Infeasible(format!(
                "K = {} message(s): database privacy is vacuous, plain retrieval suffices",
                self.messages()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = FieldPrime::TWO;
        assert!(ProtocolParams::new(0, vec![1], p).is_err());
        assert!(ProtocolParams::new(2, vec![], p).is_err());
        assert!(ProtocolParams::new(2, vec![1, 0], p).is_err());
        let ok = ProtocolParams::uniform(3, 2, 2, p).unwrap();
        assert_eq!(ok.uniform_length(), Some(2));
        assert!(ok.require_symmetric().is_ok());

        let region = ProtocolParams::in_blocks(3, &[1, 2, 4], p).unwrap();
        assert_eq!(region.lengths(), &[2, 4, 8]);
        assert_eq!(region.uniform_length(), None);
        assert_eq!(region.max_length(), 8);
    }

    #[test]
    fn degenerate_shapes_are_infeasible() {
        let p = FieldPrime::TWO;
        let one_db = ProtocolParams::uniform(1, 3, 1, p).unwrap();
        assert!(matches!(one_db.require_symmetric(), Err(Error::Infeasible(_))));
        let one_msg = ProtocolParams::uniform(3, 1, 2, p).unwrap();
        assert!(matches!(one_msg.require_symmetric(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn json_validates() {
        let params: ProtocolParams =
            serde_json::from_str(r#"{"databases":2,"lengths":[1,2],"prime":3}"#).unwrap();
        assert_eq!(params.prime().get(), 3);
        let defaulted: ProtocolParams = serde_json::from_str(r#"{"databases":2,"lengths":[1,1]}"#).unwrap();
        assert_eq!(defaulted.prime(), FieldPrime::TWO);
        assert!(serde_json::from_str::<ProtocolParams>(r#"{"databases":2,"lengths":[1],"prime":4}"#).is_err());
        assert!(serde_json::from_str::<ProtocolParams>(r#"{"databases":0,"lengths":[1]}"#).is_err());
    }
}
